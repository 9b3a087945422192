//! Loop-free connected multigraphs and their integer matrices.
//!
//! A [`Multigraph`] keeps its edges in document order; that order fixes the
//! edge indices used by every lattice and index map downstream, and the stored
//! pair order `(i, j)` fixes the orientation used by the directed incidence
//! matrix.

use std::collections::VecDeque;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
struct GraphDocument {
    g: usize,
    edges: Vec<[usize; 2]>,
}

/// A connected multigraph without loops on vertices `0..g`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Multigraph {
    g: usize,
    edges: Vec<(usize, usize)>,
    incident: Vec<Vec<usize>>,
}

impl Multigraph {
    pub fn new(g: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        if g == 0 {
            return Err(Error::EmptyGraph);
        }
        let mut incident = vec![Vec::new(); g];
        for (k, &(i, j)) in edges.iter().enumerate() {
            for v in [i, j] {
                if v >= g {
                    return Err(Error::VertexOutOfRange { edge: k, vertex: v, g });
                }
            }
            if i == j {
                return Err(Error::LoopEdge { edge: k, vertex: i });
            }
            incident[i].push(k);
            incident[j].push(k);
        }
        let graph = Multigraph { g, edges, incident };
        if !graph.is_connected() {
            return Err(Error::Disconnected);
        }
        Ok(graph)
    }

    /// Parses `{"g": <int>, "edges": [[i, j], ...]}`.
    pub fn from_json(source: &str) -> Result<Self> {
        let doc: GraphDocument = serde_json::from_str(source)?;
        Multigraph::new(doc.g, doc.edges.into_iter().map(|[i, j]| (i, j)).collect())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Multigraph::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        let doc = GraphDocument {
            g: self.g,
            edges: self.edges.iter().map(|&(i, j)| [i, j]).collect(),
        };
        serde_json::to_string(&doc).expect("graph document serializes")
    }

    pub fn vertex_count(&self) -> usize {
        self.g
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> (usize, usize) {
        self.edges[e]
    }

    /// Edge indices incident to `v`, ascending.
    pub fn incident_edges(&self, v: usize) -> &[usize] {
        &self.incident[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.incident[v].len()
    }

    /// `Some(d)` when every vertex has degree `d`.
    pub fn regular_degree(&self) -> Option<usize> {
        let d = self.degree(0);
        (0..self.g).all(|v| self.degree(v) == d).then_some(d)
    }

    /// Degree of a regular graph with `d >= 3`, or the matching error.
    pub fn require_regular(&self, min_degree: usize) -> Result<usize> {
        let d = self.regular_degree().ok_or(Error::NotRegular)?;
        if d < min_degree {
            return Err(Error::DegreeTooSmall(d));
        }
        Ok(d)
    }

    /// The endpoint of `e` that is not `v`.
    pub fn other_end(&self, e: usize, v: usize) -> usize {
        let (i, j) = self.edges[e];
        if i == v {
            j
        } else {
            i
        }
    }

    /// Sign of `v` in the directed incidence column of `e`: `+1` at the
    /// stored tail, `-1` at the head, `0` otherwise.
    pub fn orientation(&self, v: usize, e: usize) -> i64 {
        let (i, j) = self.edges[e];
        if v == i {
            1
        } else if v == j {
            -1
        } else {
            0
        }
    }

    fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.g];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = queue.pop_front() {
            for &e in &self.incident[v] {
                let w = self.other_end(e, v);
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    queue.push_back(w);
                }
            }
        }
        count == self.g
    }

    /// Two-coloring of the vertices if the graph has no odd cycle.
    pub fn bipartition(&self) -> Option<Vec<bool>> {
        let mut color: Vec<Option<bool>> = vec![None; self.g];
        color[0] = Some(false);
        let mut queue = VecDeque::from([0]);
        while let Some(v) = queue.pop_front() {
            let c = color[v].unwrap();
            for &e in &self.incident[v] {
                let w = self.other_end(e, v);
                match color[w] {
                    None => {
                        color[w] = Some(!c);
                        queue.push_back(w);
                    }
                    Some(cw) if cw == c => return None,
                    Some(_) => {}
                }
            }
        }
        Some(color.into_iter().map(Option::unwrap).collect())
    }

    pub fn is_bipartite(&self) -> bool {
        self.bipartition().is_some()
    }
}

/// Standard base graphs used throughout tests, benches and examples.
pub mod families {
    use super::Multigraph;

    pub fn complete(k: usize) -> Multigraph {
        let mut edges = Vec::new();
        for i in 0..k {
            for j in i + 1..k {
                edges.push((i, j));
            }
        }
        Multigraph::new(k, edges).expect("complete graph is valid")
    }

    /// Two vertices joined by `d` parallel edges.
    pub fn parallel_edges(d: usize) -> Multigraph {
        Multigraph::new(2, vec![(0, 1); d]).expect("parallel edges graph is valid")
    }

    pub fn cycle(k: usize) -> Multigraph {
        Multigraph::new(k, (0..k).map(|i| (i, (i + 1) % k)).collect()).expect("cycle is valid")
    }

    pub fn path(k: usize) -> Multigraph {
        Multigraph::new(k, (0..k - 1).map(|i| (i, i + 1)).collect()).expect("path is valid")
    }

    /// The prism `C_k x K_2`.
    pub fn prism(k: usize) -> Multigraph {
        let mut edges = Vec::new();
        for i in 0..k {
            edges.push((i, (i + 1) % k));
        }
        for i in 0..k {
            edges.push((k + i, k + (i + 1) % k));
        }
        for i in 0..k {
            edges.push((i, k + i));
        }
        Multigraph::new(2 * k, edges).expect("prism is valid")
    }

    pub fn petersen() -> Multigraph {
        let mut edges = Vec::new();
        for i in 0..5 {
            edges.push((i, (i + 1) % 5));
            edges.push((i, i + 5));
            edges.push((5 + i, 5 + (i + 2) % 5));
        }
        Multigraph::new(10, edges).expect("petersen graph is valid")
    }
}

/// Integer matrices of a multigraph plus the spectrum of its adjacency matrix.
#[derive(Clone, Debug, Serialize)]
pub struct GraphMatrices {
    pub adjacency: Vec<Vec<i64>>,
    pub incidence: Vec<Vec<i64>>,
    pub directed_incidence: Vec<Vec<i64>>,
    pub degree: Vec<Vec<i64>>,
    /// Eigenvalues of the adjacency matrix, descending.
    pub alphas: Vec<f64>,
}

impl GraphMatrices {
    pub fn build(graph: &Multigraph) -> Self {
        let g = graph.vertex_count();
        let h = graph.edge_count();
        let mut adjacency = vec![vec![0i64; g]; g];
        let mut incidence = vec![vec![0i64; h]; g];
        let mut directed_incidence = vec![vec![0i64; h]; g];
        let mut degree = vec![vec![0i64; g]; g];
        for (e, &(i, j)) in graph.edges().iter().enumerate() {
            adjacency[i][j] += 1;
            adjacency[j][i] += 1;
            incidence[i][e] = 1;
            incidence[j][e] = 1;
            directed_incidence[i][e] = 1;
            directed_incidence[j][e] = -1;
        }
        for (v, row) in degree.iter_mut().enumerate() {
            row[v] = graph.degree(v) as i64;
        }
        let dense = adjacency
            .iter()
            .map(|row| row.iter().map(|&x| x as f64).collect())
            .collect::<Vec<Vec<f64>>>();
        let alphas = symmetric_eigenvalues(&dense).expect("adjacency matrix is symmetric");
        GraphMatrices {
            adjacency,
            incidence,
            directed_incidence,
            degree,
            alphas,
        }
    }

    /// Checks `Â Âᵀ = A + D` and `Ã Ãᵀ = D - A` exactly.
    pub fn identities_hold(&self) -> bool {
        let g = self.adjacency.len();
        let gram = |m: &Vec<Vec<i64>>, i: usize, j: usize| -> i64 {
            m[i].iter().zip(&m[j]).map(|(a, b)| a * b).sum()
        };
        (0..g).all(|i| {
            (0..g).all(|j| {
                gram(&self.incidence, i, j) == self.adjacency[i][j] + self.degree[i][j]
                    && gram(&self.directed_incidence, i, j)
                        == self.degree[i][j] - self.adjacency[i][j]
            })
        })
    }
}

pub fn build_matrices(graph: &Multigraph) -> GraphMatrices {
    GraphMatrices::build(graph)
}

/// Eigenvalues of a real symmetric matrix in descending order.
pub fn symmetric_eigenvalues(m: &[Vec<f64>]) -> Result<Vec<f64>> {
    let n = m.len();
    if m.iter().any(|row| row.len() != n) {
        return Err(Error::Dimension("eigenvalues need a square matrix".into()));
    }
    for i in 0..n {
        for j in i + 1..n {
            let scale = m[i][j].abs().max(m[j][i].abs()).max(1.0);
            if (m[i][j] - m[j][i]).abs() > 1e-12 * scale {
                return Err(Error::NotSymmetric { row: i, col: j });
            }
        }
    }
    let dense = DMatrix::from_fn(n, n, |i, j| m[i][j]);
    let mut values: Vec<f64> = dense.symmetric_eigenvalues().iter().copied().collect();
    values.sort_by(|a, b| b.total_cmp(a));
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::families::*;
    use super::*;

    #[test]
    fn loads_complete_graph() {
        let g = Multigraph::from_json(r#"{"g":4,"edges":[[0,1],[0,2],[0,3],[1,2],[1,3],[2,3]]}"#)
            .unwrap();
        assert_eq!((g.vertex_count(), g.edge_count()), (4, 6));
        assert_eq!(g, complete(4));
    }

    #[test]
    fn loads_parallel_edges() {
        let g = Multigraph::from_json(r#"{"g":2,"edges":[[0,1],[0,1],[0,1]]}"#).unwrap();
        assert_eq!((g.vertex_count(), g.edge_count()), (2, 3));
        assert_eq!(g.regular_degree(), Some(3));
    }

    #[test]
    fn rejects_bad_documents() {
        assert!(matches!(
            Multigraph::from_json(r#"{"g":2,"edges":[[0,0]]}"#),
            Err(Error::LoopEdge { edge: 0, vertex: 0 })
        ));
        assert!(matches!(
            Multigraph::from_json(r#"{"g":3,"edges":[[0,1]]}"#),
            Err(Error::Disconnected)
        ));
        assert!(matches!(
            Multigraph::from_json(r#"{"g":2,"edges":[[0,2]]}"#),
            Err(Error::VertexOutOfRange { vertex: 2, .. })
        ));
        assert!(matches!(Multigraph::from_json("{\"g\":2}"), Err(Error::Parse(_))));
    }

    #[test]
    fn json_round_trip() {
        let g = petersen();
        assert_eq!(Multigraph::from_json(&g.to_json()).unwrap(), g);
    }

    #[test]
    fn matrices_of_parallel_edges() {
        let m = build_matrices(&parallel_edges(3));
        assert_eq!(m.adjacency, vec![vec![0, 3], vec![3, 0]]);
        assert!(m.identities_hold());
        assert!((m.alphas[0] - 3.0).abs() < 1e-10 && (m.alphas[1] + 3.0).abs() < 1e-10);
    }

    #[test]
    fn matrices_of_k4() {
        let m = build_matrices(&complete(4));
        assert!(m.identities_hold());
        let expected = [3.0, -1.0, -1.0, -1.0];
        for (a, b) in m.alphas.iter().zip(expected) {
            assert!((a - b).abs() < 1e-10);
        }
        for row in &m.incidence {
            assert_eq!(row.iter().sum::<i64>(), 3);
        }
        for e in 0..6 {
            assert_eq!((0..4).map(|v| m.incidence[v][e]).sum::<i64>(), 2);
        }
    }

    #[test]
    fn bipartite_detection() {
        assert!(!complete(4).is_bipartite());
        assert_eq!(parallel_edges(3).bipartition(), Some(vec![false, true]));
        assert!(cycle(6).is_bipartite());
        assert!(!cycle(5).is_bipartite());
        assert!(!petersen().is_bipartite());
    }

    #[test]
    fn eigenvalues_of_identity_and_rejects_asymmetric() {
        let id = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]];
        assert_eq!(symmetric_eigenvalues(&id).unwrap(), vec![1.0, 1.0, 1.0]);
        let bad = vec![vec![0.0, 1.0], vec![2.0, 0.0]];
        assert!(matches!(symmetric_eigenvalues(&bad), Err(Error::NotSymmetric { .. })));
    }

    #[test]
    fn regular_spectra_and_bipartiteness_agree() {
        for graph in [complete(4), parallel_edges(3), petersen(), prism(3), cycle(6), prism(4)] {
            let m = build_matrices(&graph);
            let trace: f64 = m.alphas.iter().sum();
            assert!(trace.abs() < 1e-8);
            let d = graph.regular_degree().unwrap() as f64;
            assert!((m.alphas[0] - d).abs() < 1e-10);
            let has_minus_d = m.alphas.iter().any(|a| (a + d).abs() < 1e-8);
            assert_eq!(has_minus_d, graph.is_bipartite());
        }
    }
}
