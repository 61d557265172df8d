//! Sparse weighted undirected graphs.
//!
//! A [`Graph`] stores each undirected edge once, as `(i, j, w)` with `i < j`,
//! in lexicographic order. A CSR-style adjacency index maps every vertex to
//! its incident edges so per-vertex scans and `O(|E|)` Laplacian products
//! need no hashing.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Weights below this are treated as nonpositive.
pub const MIN_WEIGHT: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub w: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    n: usize,
    edges: Vec<Edge>,
    offsets: Vec<usize>,
    /// `(neighbor, edge index)` pairs grouped by vertex.
    adjacency: Vec<(usize, usize)>,
}

impl Graph {
    /// Builds a graph from an edge list in any order and orientation.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        let mut canon = Vec::new();
        for (a, b, w) in edges {
            for index in [a, b] {
                if index >= n {
                    return Err(Error::IndexOutOfRange { index, n });
                }
            }
            if a == b {
                return Err(Error::SelfLoop(a));
            }
            // NaN fails this comparison too
            if !(w >= MIN_WEIGHT) || !w.is_finite() {
                return Err(Error::NonpositiveWeight {
                    i: a,
                    j: b,
                    weight: w,
                });
            }
            let (i, j) = if a < b { (a, b) } else { (b, a) };
            canon.push(Edge { i, j, w });
        }
        canon.sort_by(|x, y| (x.i, x.j).cmp(&(y.i, y.j)));
        if let Some(pair) = canon
            .windows(2)
            .find(|p| (p[0].i, p[0].j) == (p[1].i, p[1].j))
        {
            return Err(Error::DuplicateEdge(pair[0].i, pair[0].j));
        }
        Ok(Self::from_canonical(n, canon))
    }

    fn from_canonical(n: usize, edges: Vec<Edge>) -> Self {
        let mut counts = vec![0usize; n + 1];
        for e in &edges {
            counts[e.i + 1] += 1;
            counts[e.j + 1] += 1;
        }
        for v in 0..n {
            counts[v + 1] += counts[v];
        }
        let offsets = counts;
        let mut cursor = offsets.clone();
        let mut adjacency = vec![(0, 0); 2 * edges.len()];
        for (idx, e) in edges.iter().enumerate() {
            adjacency[cursor[e.i]] = (e.j, idx);
            cursor[e.i] += 1;
            adjacency[cursor[e.j]] = (e.i, idx);
            cursor[e.j] += 1;
        }
        Graph {
            n,
            edges,
            offsets,
            adjacency,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Canonical edges, `i < j`, sorted.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// `(neighbor, edge index)` pairs incident to `v`.
    pub fn neighbors(&self, v: usize) -> &[(usize, usize)] {
        &self.adjacency[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.w).sum()
    }

    pub fn degrees(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for e in &self.edges {
            d[e.i] += e.w;
            d[e.j] += e.w;
        }
        d
    }

    /// `L x = D x - W x`, accumulated edge by edge.
    pub fn laplacian_apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.weighted_laplacian_apply(x, None)
    }

    /// Laplacian of `W ⊙ Γ` applied to `x`; `gamma` holds one multiplier per
    /// canonical edge.
    pub fn weighted_laplacian_apply(&self, x: &[f64], gamma: Option<&[f64]>) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.n];
        self.weighted_laplacian_apply_into(x, gamma, &mut out)?;
        Ok(out)
    }

    pub fn weighted_laplacian_apply_into(
        &self,
        x: &[f64],
        gamma: Option<&[f64]>,
        out: &mut [f64],
    ) -> Result<()> {
        check_len(self.n, x.len())?;
        check_len(self.n, out.len())?;
        if let Some(g) = gamma {
            check_len(self.edges.len(), g.len())?;
        }
        out.iter_mut().for_each(|o| *o = 0.0);
        match gamma {
            None => {
                for e in &self.edges {
                    let f = e.w * (x[e.i] - x[e.j]);
                    out[e.i] += f;
                    out[e.j] -= f;
                }
            }
            Some(g) => {
                for (e, gm) in self.edges.iter().zip(g) {
                    let f = e.w * gm * (x[e.i] - x[e.j]);
                    out[e.i] += f;
                    out[e.j] -= f;
                }
            }
        }
        Ok(())
    }

    /// Connected component id per vertex, numbered by first appearance.
    pub fn components(&self) -> Vec<usize> {
        let mut comp = vec![usize::MAX; self.n];
        let mut next = 0;
        let mut stack = Vec::new();
        for start in 0..self.n {
            if comp[start] != usize::MAX {
                continue;
            }
            comp[start] = next;
            stack.push(start);
            while let Some(v) = stack.pop() {
                for &(u, _) in self.neighbors(v) {
                    if comp[u] == usize::MAX {
                        comp[u] = next;
                        stack.push(u);
                    }
                }
            }
            next += 1;
        }
        comp
    }

    pub fn is_connected(&self) -> bool {
        self.n <= 1 || self.components().iter().all(|&c| c == 0)
    }

    /// Subgraph induced by `vertices`; vertex `t` of the result is
    /// `vertices[t]` of `self`.
    pub fn induced_subgraph(&self, vertices: &[usize]) -> Graph {
        let mut local = vec![usize::MAX; self.n];
        for (t, &v) in vertices.iter().enumerate() {
            local[v] = t;
        }
        let mut edges = Vec::new();
        for e in &self.edges {
            let (a, b) = (local[e.i], local[e.j]);
            if a != usize::MAX && b != usize::MAX {
                let (i, j) = if a < b { (a, b) } else { (b, a) };
                edges.push(Edge { i, j, w: e.w });
            }
        }
        edges.sort_by(|x, y| (x.i, x.j).cmp(&(y.i, y.j)));
        Graph::from_canonical(vertices.len(), edges)
    }

    /// Dense `D - W`, for tests and small-instance oracles.
    pub fn dense_laplacian(&self) -> nalgebra::DMatrix<f64> {
        let mut l = nalgebra::DMatrix::zeros(self.n, self.n);
        for e in &self.edges {
            l[(e.i, e.j)] -= e.w;
            l[(e.j, e.i)] -= e.w;
            l[(e.i, e.i)] += e.w;
            l[(e.j, e.j)] += e.w;
        }
        l
    }
}

/// Path `0 – 1 – … – (n−1)` with unit weights.
pub fn path_graph(n: usize) -> Result<Graph> {
    Graph::new(n, (1..n).map(|i| (i - 1, i, 1.0)))
}

/// Two unit-weight cliques on `m` vertices each, joined by one edge of
/// weight `bridge` between vertex `m − 1` and vertex `m`.
pub fn barbell(m: usize, bridge: f64) -> Result<Graph> {
    let mut edges = Vec::new();
    for offset in [0, m] {
        for i in 0..m {
            for j in i + 1..m {
                edges.push((offset + i, offset + j, 1.0));
            }
        }
    }
    edges.push((m - 1, m, bridge));
    Graph::new(2 * m, edges)
}

/// Two unit triangles `{0,1,2}` and `{3,4,5}` joined by the edge `2–3`.
pub fn triangle_pair(bridge: f64) -> Result<Graph> {
    Graph::new(
        6,
        [
            (0, 1, 1.0),
            (1, 2, 1.0),
            (0, 2, 1.0),
            (3, 4, 1.0),
            (4, 5, 1.0),
            (3, 5, 1.0),
            (2, 3, bridge),
        ],
    )
}

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

pub fn degree_vector(g: &Graph) -> Vec<f64> {
    g.degrees()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BalanceMode {
    /// `π = 1`: block masses are sizes.
    Ratio,
    /// `π = d`: block masses are volumes.
    Normalized,
}

impl std::str::FromStr for BalanceMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ratio" => Ok(BalanceMode::Ratio),
            "normalized" => Ok(BalanceMode::Normalized),
            other => Err(Error::Config(format!("unknown balance mode `{other}`"))),
        }
    }
}

impl std::fmt::Display for BalanceMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BalanceMode::Ratio => "ratio",
            BalanceMode::Normalized => "normalized",
        })
    }
}

/// Per-vertex positive weights `π` defining block masses.
#[derive(Debug, Clone, PartialEq)]
pub struct BalanceWeights {
    mode: BalanceMode,
    pi: Vec<f64>,
}

impl BalanceWeights {
    pub fn for_graph(g: &Graph, mode: BalanceMode) -> Result<Self> {
        let pi = match mode {
            BalanceMode::Ratio => vec![1.0; g.n()],
            BalanceMode::Normalized => {
                let d = g.degrees();
                if let Some(v) = d.iter().position(|&x| x <= 0.0) {
                    return Err(Error::ZeroDegree(v));
                }
                d
            }
        };
        Ok(BalanceWeights { mode, pi })
    }

    /// Arbitrary positive weights; the mode is only a label here.
    pub fn custom(mode: BalanceMode, pi: Vec<f64>) -> Result<Self> {
        if let Some(index) = pi.iter().position(|&x| !(x > 0.0) || !x.is_finite()) {
            return Err(Error::NonpositiveBalance {
                index,
                value: pi[index],
            });
        }
        Ok(BalanceWeights { mode, pi })
    }

    pub fn mode(&self) -> BalanceMode {
        self.mode
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    pub fn len(&self) -> usize {
        self.pi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pi.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.pi.iter().sum()
    }
}

pub fn balance_weights(g: &Graph, mode: BalanceMode) -> Result<BalanceWeights> {
    BalanceWeights::for_graph(g, mode)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p3() -> Graph {
        Graph::new(3, [(0, 1, 1.0), (1, 2, 1.0)]).unwrap()
    }

    #[test]
    fn single_edge_degrees() {
        let g = Graph::new(2, [(0, 1, 1.0)]).unwrap();
        assert_eq!(g.degrees(), vec![1.0, 1.0]);
    }

    #[test]
    fn path_and_triangle_degrees() {
        assert_eq!(degree_vector(&p3()), vec![1.0, 2.0, 1.0]);
        let tri = Graph::new(3, [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)]).unwrap();
        assert_eq!(degree_vector(&tri), vec![2.0, 2.0, 2.0]);
    }

    #[test]
    fn construction_errors_are_distinct() {
        assert_eq!(Graph::new(3, [(0, 0, 1.0)]), Err(Error::SelfLoop(0)));
        assert!(matches!(
            Graph::new(3, [(0, 1, 0.0)]),
            Err(Error::NonpositiveWeight { .. })
        ));
        assert!(matches!(
            Graph::new(3, [(0, 1, 1e-13)]),
            Err(Error::NonpositiveWeight { .. })
        ));
        assert!(matches!(
            Graph::new(3, [(0, 1, f64::NAN)]),
            Err(Error::NonpositiveWeight { .. })
        ));
        assert_eq!(
            Graph::new(3, [(0, 1, 1.0), (1, 0, 2.0)]),
            Err(Error::DuplicateEdge(0, 1))
        );
        assert_eq!(
            Graph::new(3, [(0, 3, 1.0)]),
            Err(Error::IndexOutOfRange { index: 3, n: 3 })
        );
    }

    #[test]
    fn canonical_order_and_symmetric_adjacency() {
        let g = Graph::new(4, [(3, 1, 2.0), (0, 2, 1.0), (1, 0, 0.5)]).unwrap();
        let pairs: Vec<_> = g.edges().iter().map(|e| (e.i, e.j)).collect();
        assert_eq!(pairs, vec![(0, 1), (0, 2), (1, 3)]);
        let w_of = |a: usize, b: usize| {
            g.neighbors(a)
                .iter()
                .find(|&&(u, _)| u == b)
                .map(|&(_, idx)| g.edges()[idx].w)
        };
        assert_eq!(w_of(1, 3), Some(2.0));
        assert_eq!(w_of(3, 1), Some(2.0));
        assert_eq!(w_of(2, 3), None);
    }

    #[test]
    fn laplacian_hand_values() {
        let g = p3();
        assert_eq!(
            g.laplacian_apply(&[1.0, 0.0, 0.0]).unwrap(),
            vec![1.0, -1.0, 0.0]
        );
        assert_eq!(g.laplacian_apply(&[1.0; 3]).unwrap(), vec![0.0; 3]);
        assert_eq!(
            g.laplacian_apply(&[1.0, 2.0]),
            Err(Error::DimensionMismatch {
                expected: 3,
                got: 2
            })
        );
    }

    #[test]
    fn balance_modes() {
        let g = p3();
        assert_eq!(
            balance_weights(&g, BalanceMode::Ratio).unwrap().pi(),
            &[1.0, 1.0, 1.0]
        );
        assert_eq!(
            balance_weights(&g, BalanceMode::Normalized).unwrap().pi(),
            &[1.0, 2.0, 1.0]
        );
        let isolated = Graph::new(3, [(0, 1, 1.0)]).unwrap();
        assert_eq!(
            balance_weights(&isolated, BalanceMode::Normalized),
            Err(Error::ZeroDegree(2))
        );
        assert!(balance_weights(&isolated, BalanceMode::Ratio).is_ok());
    }

    #[test]
    fn components_and_subgraph() {
        let g = Graph::new(5, [(0, 1, 1.0), (1, 2, 2.0), (3, 4, 1.0)]).unwrap();
        assert_eq!(g.components(), vec![0, 0, 0, 1, 1]);
        assert!(!g.is_connected());
        let sub = g.induced_subgraph(&[2, 1, 4]);
        assert_eq!(sub.n(), 3);
        assert_eq!(sub.edges(), &[Edge { i: 0, j: 1, w: 2.0 }]);
    }
}
