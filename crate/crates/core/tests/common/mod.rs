//! Brute-force d-separation by enumerating every simple path.

#![allow(dead_code)]

use seqsel::graph::d_separated;
use seqsel::SequentialCausalGraph;

/// Explicit DAG: observed `0..n`, then selection nodes, then confounders.
pub struct Explicit {
    n: usize,
    children: Vec<Vec<usize>>,
    /// Conditioned-on-by-construction nodes.
    selection: Vec<usize>,
}

impl Explicit {
    pub fn from_graph(g: &SequentialCausalGraph) -> Self {
        let n = g.n_observed();
        let groups = g.selection_groups();
        let conf = g.confounder_pairs();
        let total = n + groups.len() + conf.len();
        let mut children = vec![Vec::new(); total];
        for (i, j) in g.direct_edges() {
            children[i - 1].push(j - 1);
        }
        for (u, group) in groups.iter().enumerate() {
            for &v in group {
                children[v - 1].push(n + u);
            }
        }
        for (u, &(a, b)) in conf.iter().enumerate() {
            children[n + groups.len() + u].extend([a - 1, b - 1]);
        }
        Self {
            n,
            children,
            selection: (n..n + groups.len()).collect(),
        }
    }

    fn has_edge(&self, a: usize, b: usize) -> bool {
        self.children[a].contains(&b)
    }

    fn descendants(&self, v: usize) -> Vec<usize> {
        let mut seen = vec![false; self.children.len()];
        let mut stack = vec![v];
        while let Some(u) = stack.pop() {
            if !seen[u] {
                seen[u] = true;
                stack.extend(&self.children[u]);
            }
        }
        (0..seen.len()).filter(|&u| seen[u]).collect()
    }

    pub fn separated(&self, x: usize, y: usize, z: &[usize]) -> bool {
        let total = self.children.len();
        let mut conditioned = vec![false; total];
        for &v in z.iter().chain(&self.selection) {
            conditioned[v] = true;
        }
        let opens: Vec<bool> = (0..total)
            .map(|v| self.descendants(v).iter().any(|&d| conditioned[d]))
            .collect();
        let mut path = vec![x];
        let mut on_path = vec![false; total];
        on_path[x] = true;
        !self.active_path_exists(&mut path, &mut on_path, y, &conditioned, &opens)
    }

    fn active_path_exists(
        &self,
        path: &mut Vec<usize>,
        on_path: &mut [bool],
        target: usize,
        conditioned: &[bool],
        opens: &[bool],
    ) -> bool {
        let last = *path.last().unwrap();
        if last == target {
            return path.windows(3).all(|w| {
                let collider = self.has_edge(w[0], w[1]) && self.has_edge(w[2], w[1]);
                if collider {
                    opens[w[1]]
                } else {
                    !conditioned[w[1]]
                }
            });
        }
        for next in 0..self.children.len() {
            if on_path[next] || !(self.has_edge(last, next) || self.has_edge(next, last)) {
                continue;
            }
            path.push(next);
            on_path[next] = true;
            let found = self.active_path_exists(path, on_path, target, conditioned, opens);
            on_path[next] = false;
            path.pop();
            if found {
                return true;
            }
        }
        false
    }
}

pub fn pairs(n: usize) -> Vec<(usize, usize)> {
    (1..=n)
        .flat_map(|i| (i + 1..=n).map(move |j| (i, j)))
        .collect()
}

/// Compares every query `(x, y | Z)` on `g` and returns the number checked.
pub fn check_all_queries(g: &SequentialCausalGraph) -> usize {
    let e = Explicit::from_graph(g);
    let n = e.n;
    let mut checked = 0;
    for (x, y) in pairs(n) {
        let rest: Vec<usize> = (1..=n).filter(|&v| v != x && v != y).collect();
        for mask in 0..1u32 << rest.len() {
            let z: Vec<usize> = (0..rest.len())
                .filter(|b| mask >> b & 1 == 1)
                .map(|b| rest[b])
                .collect();
            let fast = d_separated(g, x, y, &z).unwrap();
            let zero_based: Vec<usize> = z.iter().map(|v| v - 1).collect();
            let slow = e.separated(x - 1, y - 1, &zero_based);
            assert_eq!(fast, slow, "graph {} query {x} ⫫ {y} | {z:?}", g.to_json());
            checked += 1;
        }
    }
    checked
}
