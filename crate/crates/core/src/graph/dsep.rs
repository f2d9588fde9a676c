//! d-separation in the full graph (observed, selection and confounder nodes)
//! with every selection variable implicitly conditioned on.

use super::{GraphError, SequentialCausalGraph};

/// Full DAG over observed nodes `0..N`, selection nodes `N..N+S` and
/// confounder nodes after them.
pub(crate) struct FullDag {
    pub parents: Vec<Vec<usize>>,
    pub children: Vec<Vec<usize>>,
    pub n_observed: usize,
    pub n_selection: usize,
}

impl FullDag {
    pub fn new(g: &SequentialCausalGraph) -> Self {
        let n = g.n_observed();
        let s = g.selection_groups().len();
        let total = n + s + g.confounder_pairs().len();
        let mut parents = vec![Vec::new(); total];
        let mut children = vec![Vec::new(); total];
        let mut link = |from: usize, to: usize| {
            parents[to].push(from);
            children[from].push(to);
        };
        for (i, j) in g.direct_edges() {
            link(i - 1, j - 1);
        }
        for (u, group) in g.selection_groups().iter().enumerate() {
            for &v in group {
                link(v - 1, n + u);
            }
        }
        for (u, &(a, b)) in g.confounder_pairs().iter().enumerate() {
            link(n + s + u, a - 1);
            link(n + s + u, b - 1);
        }
        Self {
            parents,
            children,
            n_observed: n,
            n_selection: s,
        }
    }

    pub fn len(&self) -> usize {
        self.parents.len()
    }

    /// Conditioned nodes: the given observed nodes plus all selection nodes.
    pub fn conditioned(&self, observed: &[usize]) -> Vec<bool> {
        let mut z = vec![false; self.len()];
        for &v in observed {
            z[v - 1] = true;
        }
        z[self.n_observed..self.n_observed + self.n_selection].fill(true);
        z
    }

    /// Nodes that are in `z` or have a descendant in `z`.
    pub fn ancestors_of(&self, z: &[bool]) -> Vec<bool> {
        let mut anc = z.to_vec();
        let mut stack: Vec<usize> = (0..self.len()).filter(|&v| z[v]).collect();
        while let Some(v) = stack.pop() {
            for &p in &self.parents[v] {
                if !anc[p] {
                    anc[p] = true;
                    stack.push(p);
                }
            }
        }
        anc
    }

    /// Reachability over (node, direction) states; `true` when an active
    /// trail joins `x` and `y`.
    pub fn connected(&self, x: usize, y: usize, z: &[bool]) -> bool {
        let anc = self.ancestors_of(z);
        // direction 0: arrived from a child (moving up), 1: from a parent
        let mut visited = vec![[false; 2]; self.len()];
        let mut stack = vec![(x, 0usize)];
        while let Some((v, dir)) = stack.pop() {
            if visited[v][dir] {
                continue;
            }
            visited[v][dir] = true;
            if v == y {
                return true;
            }
            let blocked = z[v];
            if dir == 0 {
                if !blocked {
                    stack.extend(self.parents[v].iter().map(|&p| (p, 0)));
                    stack.extend(self.children[v].iter().map(|&c| (c, 1)));
                }
            } else {
                if !blocked {
                    stack.extend(self.children[v].iter().map(|&c| (c, 1)));
                }
                if anc[v] {
                    stack.extend(self.parents[v].iter().map(|&p| (p, 0)));
                }
            }
        }
        false
    }
}

/// Whether `X_i` and `X_j` are d-separated given `conditioning` together with
/// all selection variables. Confounders are never conditioned on.
pub fn d_separated(
    g: &SequentialCausalGraph,
    i: usize,
    j: usize,
    conditioning: &[usize],
) -> Result<bool, GraphError> {
    g.check_index(i)?;
    g.check_index(j)?;
    if i == j {
        return Err(GraphError::SameEndpoint(i));
    }
    for &v in conditioning {
        g.check_index(v)?;
        if v == i || v == j {
            return Err(GraphError::EndpointConditioned(v));
        }
    }
    let dag = FullDag::new(g);
    let z = dag.conditioned(conditioning);
    Ok(!dag.connected(i - 1, j - 1, &z))
}
