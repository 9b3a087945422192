use rand::seq::SliceRandom;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::Multigraph;
use crate::streams::{stream, DOMAIN_FIBER};

/// An undirected loop-free multigraph stored as neighbour lists with edge
/// multiplicities.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UGraph {
    /// `adj[v]` lists `(w, multiplicity)` with distinct `w`, sorted by `w`.
    adj: Vec<Vec<(usize, u32)>>,
    edges: usize,
}

impl UGraph {
    pub fn new(vertices: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut adj: Vec<Vec<(usize, u32)>> = vec![Vec::new(); vertices];
        for (k, &(a, b)) in edges.iter().enumerate() {
            if a >= vertices || b >= vertices {
                return Err(Error::VertexOutOfRange {
                    edge: k,
                    vertex: a.max(b),
                    g: vertices,
                });
            }
            if a == b {
                return Err(Error::LoopEdge { edge: k, vertex: a });
            }
            for (x, y) in [(a, b), (b, a)] {
                match adj[x].iter_mut().find(|(w, _)| *w == y) {
                    Some((_, m)) => *m += 1,
                    None => adj[x].push((y, 1)),
                }
            }
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        Ok(UGraph { adj, edges: edges.len() })
    }

    pub fn from_multigraph(graph: &Multigraph) -> Self {
        UGraph::new(graph.vertex_count(), graph.edges()).expect("a valid multigraph")
    }

    pub fn vertex_count(&self) -> usize {
        self.adj.len()
    }

    /// Number of edges counted with multiplicity.
    pub fn edge_count(&self) -> usize {
        self.edges
    }

    pub fn neighbours(&self, v: usize) -> &[(usize, u32)] {
        &self.adj[v]
    }

    pub fn multiplicity(&self, v: usize, w: usize) -> u32 {
        self.adj[v]
            .binary_search_by_key(&w, |&(x, _)| x)
            .map_or(0, |i| self.adj[v][i].1)
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].iter().map(|&(_, m)| m as usize).sum()
    }
}

/// An `n`-lift: fiber `e = (i, j)` joins `(i, a)` to `(j, perm[e][a])`.
/// Lift vertex `(i, a)` has index `i·n + a`.
#[derive(Clone, Debug, Serialize)]
pub struct Lift {
    pub n: usize,
    pub base_vertices: usize,
    pub base_edges: Vec<(usize, usize)>,
    pub perms: Vec<Vec<usize>>,
}

impl Lift {
    pub fn from_perms(graph: &Multigraph, n: usize, perms: Vec<Vec<usize>>) -> Result<Self> {
        if perms.len() != graph.edge_count() {
            return Err(Error::Dimension(format!("{} permutations for {} edges", perms.len(), graph.edge_count())));
        }
        for p in &perms {
            let mut seen = vec![false; n];
            if p.len() != n || p.iter().any(|&x| x >= n || std::mem::replace(&mut seen[x], true)) {
                return Err(Error::InvalidConfig("fiber is not a permutation".into()));
            }
        }
        Ok(Lift {
            n,
            base_vertices: graph.vertex_count(),
            base_edges: graph.edges().to_vec(),
            perms,
        })
    }

    pub fn vertex(&self, i: usize, a: usize) -> usize {
        i * self.n + a
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.base_edges.len() * self.n);
        for (&(i, j), p) in self.base_edges.iter().zip(&self.perms) {
            for (a, &b) in p.iter().enumerate() {
                out.push((self.vertex(i, a), self.vertex(j, b)));
            }
        }
        out
    }

    pub fn to_ugraph(&self) -> UGraph {
        UGraph::new(self.base_vertices * self.n, &self.edges()).expect("lift edges are in range and loop-free")
    }

    /// Lift degrees equal base degrees and there are `h·n` edges.
    pub fn invariants_hold(&self, graph: &Multigraph, lifted: &UGraph) -> bool {
        lifted.edge_count() == graph.edge_count() * self.n
            && (0..self.base_vertices)
                .all(|i| (0..self.n).all(|a| lifted.degree(self.vertex(i, a)) == graph.degree(i)))
    }
}

/// A uniform random `n`-lift. Fiber `e` of trial `t` is a Fisher–Yates
/// shuffle driven by the stream keyed `(seed, t, e)`.
pub fn sample_lift(graph: &Multigraph, n: usize, seed: u64, trial: u64) -> Result<Lift> {
    if n == 0 {
        return Err(Error::InvalidConfig("n must be at least 1".into()));
    }
    let perms = (0..graph.edge_count())
        .map(|e| {
            let mut rng = stream(seed, &[DOMAIN_FIBER, trial, e as u64]);
            let mut p: Vec<usize> = (0..n).collect();
            p.shuffle(&mut rng);
            p
        })
        .collect();
    Lift::from_perms(graph, n, perms)
}
