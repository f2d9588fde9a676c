use super::{CiError, CiProvider, CiQuery, CiTestResult, QueryCounter};
use crate::graph::{d_separated, GraphError, SequentialCausalGraph};

/// Perfect independence oracle: d-separation in a known graph, with every
/// selection variable conditioned on.
#[derive(Debug)]
pub struct DSeparationOracle {
    graph: SequentialCausalGraph,
    queries: QueryCounter,
}

impl DSeparationOracle {
    pub fn new(graph: SequentialCausalGraph) -> Self {
        Self {
            graph,
            queries: QueryCounter::default(),
        }
    }

    pub fn graph(&self) -> &SequentialCausalGraph {
        &self.graph
    }
}

impl CiProvider for DSeparationOracle {
    fn n_vars(&self) -> usize {
        self.graph.n_observed()
    }

    fn is_independent(&self, query: &CiQuery) -> Result<CiTestResult, CiError> {
        self.queries.bump();
        query.check_range(self.n_vars())?;
        let separated = d_separated(&self.graph, query.i, query.j, &query.conditioning).map_err(
            |e| match e {
                GraphError::IndexOutOfRange { index, n } => CiError::IndexOutOfRange { index, n },
                GraphError::EndpointConditioned(v) => CiError::EndpointConditioned(v),
                _ => CiError::SameEndpoint(query.i),
            },
        )?;
        Ok(CiTestResult::oracle(separated))
    }

    fn query_count(&self) -> u64 {
        self.queries.get()
    }
}
