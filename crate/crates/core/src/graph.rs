//! Weighted multigraphs, their incidence algebra, and edge-weight-induced
//! vertex measures.
//!
//! Edges are stored exactly as given: edge `e` is oriented from `tail` to
//! `head` and its incidence row is `b_e = 1_head - 1_tail`. Parallel edges are
//! allowed, self-loops are not.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::error::GraphError;

/// Smallest admissible conductance.
pub const MIN_CONDUCTANCE: f64 = 1e-12;
/// Largest admissible conductance.
pub const MAX_CONDUCTANCE: f64 = 1e12;

/// An oriented edge with a positive conductance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub tail: usize,
    pub head: usize,
    pub conductance: f64,
}

impl Edge {
    pub fn new(tail: usize, head: usize, conductance: f64) -> Self {
        Self {
            tail,
            head,
            conductance,
        }
    }

    /// The same edge with its orientation reversed.
    pub fn flipped(&self) -> Self {
        Self::new(self.head, self.tail, self.conductance)
    }

    pub fn touches(&self, x: usize) -> bool {
        self.tail == x || self.head == x
    }
}

/// A connected, loop-free multigraph with positive edge conductances.
///
/// Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedMultigraph {
    n: usize,
    edges: Vec<Edge>,
}

impl WeightedMultigraph {
    /// Validates `edges` on vertices `0..n` and builds the graph.
    pub fn new(n: usize, edges: Vec<Edge>) -> Result<Self, GraphError> {
        if edges.is_empty() {
            return Err(GraphError::EmptyEdgeList);
        }
        for (index, e) in edges.iter().enumerate() {
            if e.tail == e.head {
                return Err(GraphError::SelfLoop {
                    edge: index,
                    vertex: e.tail,
                });
            }
            let max = e.tail.max(e.head);
            if max >= n {
                return Err(GraphError::VertexOutOfRange {
                    edge: index,
                    vertex: max,
                    n,
                });
            }
            let c = e.conductance;
            if !c.is_finite() || c <= 0.0 {
                return Err(GraphError::NonPositiveConductance {
                    edge: index,
                    value: c,
                });
            }
            if !(MIN_CONDUCTANCE..=MAX_CONDUCTANCE).contains(&c) {
                return Err(GraphError::ConductanceOutOfRange {
                    edge: index,
                    value: c,
                });
            }
        }
        if n < 2 {
            return Err(GraphError::TooFewVertices(n));
        }
        let reached = reachable_from(n, &edges, 0);
        if let Some(unreached) = reached.iter().position(|&r| !r) {
            return Err(GraphError::Disconnected { unreached });
        }
        Ok(Self { n, edges })
    }

    /// Builds a graph from `(tail, head, conductance)` triples.
    pub fn from_triples(n: usize, triples: &[(usize, usize, f64)]) -> Result<Self, GraphError> {
        let edges = triples
            .iter()
            .map(|&(t, h, c)| Edge::new(t, h, c))
            .collect();
        Self::new(n, edges)
    }

    /// Builds a unit-conductance graph from vertex pairs.
    pub fn unweighted(n: usize, pairs: &[(usize, usize)]) -> Result<Self, GraphError> {
        let edges = pairs.iter().map(|&(t, h)| Edge::new(t, h, 1.0)).collect();
        Self::new(n, edges)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> &Edge {
        &self.edges[e]
    }

    pub fn conductances(&self) -> DVector<f64> {
        DVector::from_iterator(self.m(), self.edges.iter().map(|e| e.conductance))
    }

    /// True when every conductance equals one.
    pub fn is_unweighted(&self) -> bool {
        self.edges.iter().all(|e| e.conductance == 1.0)
    }

    /// A connected graph is a tree iff it has `n - 1` edges.
    pub fn is_tree(&self) -> bool {
        self.m() + 1 == self.n
    }

    /// Number of edge endpoints at each vertex (parallel edges counted).
    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for e in &self.edges {
            deg[e.tail] += 1;
            deg[e.head] += 1;
        }
        deg
    }

    /// Copy with edge `e` reversed.
    pub fn with_flipped_edge(&self, e: usize) -> Self {
        let mut edges = self.edges.clone();
        edges[e] = edges[e].flipped();
        Self { n: self.n, edges }
    }

    /// Copy with every conductance multiplied by `alpha`.
    pub fn scaled(&self, alpha: f64) -> Result<Self, GraphError> {
        let edges = self
            .edges
            .iter()
            .map(|e| Edge::new(e.tail, e.head, e.conductance * alpha))
            .collect();
        Self::new(self.n, edges)
    }

    /// Copy with all conductances set to one.
    pub fn unit(&self) -> Self {
        let edges = self
            .edges
            .iter()
            .map(|e| Edge::new(e.tail, e.head, 1.0))
            .collect();
        Self { n: self.n, edges }
    }

    pub fn incidence_system(&self) -> IncidenceSystem {
        IncidenceSystem::new(self)
    }

    /// Weighted Laplacian `BᵀCB`, assembled edge by edge.
    pub fn laplacian(&self) -> DMatrix<f64> {
        let mut lap = DMatrix::zeros(self.n, self.n);
        for e in &self.edges {
            let (x, y, c) = (e.tail, e.head, e.conductance);
            lap[(x, x)] += c;
            lap[(y, y)] += c;
            lap[(x, y)] -= c;
            lap[(y, x)] -= c;
        }
        lap
    }

    /// Signed incidence matrix, row `e` is `b_eᵀ`.
    pub fn incidence(&self) -> DMatrix<f64> {
        let mut b = DMatrix::zeros(self.m(), self.n);
        for (i, e) in self.edges.iter().enumerate() {
            b[(i, e.head)] = 1.0;
            b[(i, e.tail)] = -1.0;
        }
        b
    }

    /// Applies `B` to a vertex vector: `(Bx)_e = x(head) - x(tail)`.
    pub fn apply_incidence(&self, x: &[f64]) -> Vec<f64> {
        self.edges.iter().map(|e| x[e.head] - x[e.tail]).collect()
    }

    /// Vertex measure induced by the edge weights `w`.
    pub fn measure_from_weights(&self, w: &[f64]) -> Result<EdgeWeighting, GraphError> {
        EdgeWeighting::new(self, w)
    }

    /// Serializes to the plain-text edge-list format.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        let inferred = self
            .edges
            .iter()
            .map(|e| e.tail.max(e.head) + 1)
            .max()
            .unwrap_or(0);
        if inferred != self.n {
            out.push_str(&format!("n={}\n", self.n));
        }
        for e in &self.edges {
            out.push_str(&format!("{} {} {}\n", e.tail, e.head, e.conductance));
        }
        out
    }
}

impl fmt::Display for WeightedMultigraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_edge_list())
    }
}

impl FromStr for WeightedMultigraph {
    type Err = GraphError;

    /// Parses `tail head [conductance]` lines; `#` starts a comment line and
    /// an optional `n=<count>` line fixes the vertex count.
    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let mut declared_n: Option<usize> = None;
        let mut edges = Vec::new();
        let mut edge_lines = Vec::new();
        for (index, raw) in text.lines().enumerate() {
            let line_no = index + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(rest) = line.strip_prefix("n=") {
                let n = rest.trim().parse::<usize>().map_err(|_| GraphError::Parse {
                    line: line_no,
                    message: format!("invalid vertex count `{}`", rest.trim()),
                })?;
                declared_n = Some(n);
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() < 2 || fields.len() > 3 {
                return Err(GraphError::Parse {
                    line: line_no,
                    message: format!("expected `tail head [conductance]`, found {} fields", fields.len()),
                });
            }
            let vertex = |s: &str| {
                s.parse::<usize>().map_err(|_| GraphError::Parse {
                    line: line_no,
                    message: format!("invalid vertex index `{s}`"),
                })
            };
            let tail = vertex(fields[0])?;
            let head = vertex(fields[1])?;
            let conductance = match fields.get(2) {
                Some(s) => s.parse::<f64>().map_err(|_| GraphError::Parse {
                    line: line_no,
                    message: format!("invalid conductance `{s}`"),
                })?,
                None => 1.0,
            };
            edges.push(Edge::new(tail, head, conductance));
            edge_lines.push(line_no);
        }
        let n = declared_n.unwrap_or_else(|| {
            edges
                .iter()
                .map(|e| e.tail.max(e.head) + 1)
                .max()
                .unwrap_or(0)
        });
        Self::new(n, edges).map_err(|err| {
            let edge = match err {
                GraphError::SelfLoop { edge, .. }
                | GraphError::VertexOutOfRange { edge, .. }
                | GraphError::NonPositiveConductance { edge, .. }
                | GraphError::ConductanceOutOfRange { edge, .. } => edge,
                other => return other,
            };
            GraphError::Parse {
                line: edge_lines[edge],
                message: err.to_string(),
            }
        })
    }
}

fn reachable_from(n: usize, edges: &[Edge], start: usize) -> Vec<bool> {
    let mut adjacency = vec![Vec::new(); n];
    for e in edges {
        adjacency[e.tail].push(e.head);
        adjacency[e.head].push(e.tail);
    }
    let mut seen = vec![false; n];
    let mut stack = vec![start];
    seen[start] = true;
    while let Some(x) = stack.pop() {
        for &y in &adjacency[x] {
            if !seen[y] {
                seen[y] = true;
                stack.push(y);
            }
        }
    }
    seen
}

/// Dense incidence matrix, conductance diagonal and Laplacian of a graph.
#[derive(Debug, Clone)]
pub struct IncidenceSystem {
    /// `m × n`, row `e` has `+1` at the head and `-1` at the tail.
    pub b: DMatrix<f64>,
    /// Conductances, the diagonal of `C`.
    pub c: DVector<f64>,
    /// `L = BᵀCB`.
    pub l: DMatrix<f64>,
}

impl IncidenceSystem {
    pub fn new(g: &WeightedMultigraph) -> Self {
        let b = g.incidence();
        let c = g.conductances();
        let mut cb = b.clone();
        for (mut row, &ce) in cb.row_iter_mut().zip(c.iter()) {
            row *= ce;
        }
        let l = b.transpose() * cb;
        Self { b, c, l }
    }

    /// Largest absolute Laplacian entry.
    pub fn laplacian_max(&self) -> f64 {
        self.l.amax()
    }
}

/// An edge vector together with its induced vertex probability measure
/// `μ_w(x) = Σ_{e∋x} w_e² / (2‖w‖²)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeWeighting {
    pub w: Vec<f64>,
    pub mu: Vec<f64>,
}

impl EdgeWeighting {
    pub fn new(g: &WeightedMultigraph, w: &[f64]) -> Result<Self, GraphError> {
        if w.len() != g.m() {
            return Err(GraphError::LengthMismatch {
                expected: g.m(),
                found: w.len(),
            });
        }
        if w.iter().any(|x| !x.is_finite()) {
            return Err(GraphError::NonFiniteWeight);
        }
        // Rescale before squaring so tiny or huge weights neither underflow
        // nor overflow; the measure is scale invariant.
        let scale = w.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
        if scale == 0.0 {
            return Err(GraphError::ZeroWeightVector);
        }
        let mut mu = vec![0.0; g.n()];
        let mut total = 0.0;
        for (e, &we) in g.edges().iter().zip(w) {
            let sq = (we / scale) * (we / scale);
            mu[e.tail] += sq;
            mu[e.head] += sq;
            total += 2.0 * sq;
        }
        for x in &mut mu {
            *x /= total;
        }
        Ok(Self { w: w.to_vec(), mu })
    }

    pub fn norm_sq(&self) -> f64 {
        self.w.iter().map(|x| x * x).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn triangle() -> WeightedMultigraph {
        WeightedMultigraph::unweighted(3, &[(0, 1), (1, 2), (2, 0)]).unwrap()
    }

    #[test]
    fn smallest_and_parallel_graphs_are_valid() {
        let g = WeightedMultigraph::from_triples(2, &[(0, 1, 1.0)]).unwrap();
        assert_eq!((g.n(), g.m()), (2, 1));
        let g = WeightedMultigraph::from_triples(2, &[(0, 1, 1.0), (0, 1, 5.0)]).unwrap();
        assert_eq!(g.m(), 2);
    }

    #[test]
    fn construction_errors_are_distinct() {
        assert!(matches!(
            WeightedMultigraph::from_triples(1, &[(0, 0, 1.0)]),
            Err(GraphError::SelfLoop { .. })
        ));
        assert!(matches!(
            WeightedMultigraph::from_triples(3, &[(0, 1, 1.0)]),
            Err(GraphError::Disconnected { unreached: 2 })
        ));
        assert!(matches!(
            WeightedMultigraph::from_triples(2, &[(0, 1, 0.0)]),
            Err(GraphError::NonPositiveConductance { .. })
        ));
        assert!(matches!(
            WeightedMultigraph::from_triples(2, &[(0, 1, -2.0)]),
            Err(GraphError::NonPositiveConductance { .. })
        ));
        assert!(matches!(
            WeightedMultigraph::from_triples(2, &[(0, 1, 1e13)]),
            Err(GraphError::ConductanceOutOfRange { .. })
        ));
        assert!(matches!(
            WeightedMultigraph::from_triples(2, &[]),
            Err(GraphError::EmptyEdgeList)
        ));
        assert!(matches!(
            WeightedMultigraph::from_triples(2, &[(0, 2, 1.0)]),
            Err(GraphError::VertexOutOfRange { .. })
        ));
    }

    #[test]
    fn laplacian_closed_forms() {
        let g = WeightedMultigraph::from_triples(2, &[(0, 1, 2.5)]).unwrap();
        let sys = g.incidence_system();
        assert_eq!(sys.l, DMatrix::from_row_slice(2, 2, &[2.5, -2.5, -2.5, 2.5]));

        let sys = triangle().incidence_system();
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == j { 2.0 } else { -1.0 };
                assert_eq!(sys.l[(i, j)], expected);
            }
        }
        assert_eq!(sys.l, triangle().laplacian());
    }

    #[test]
    fn path_laplacian_on_linear_potential() {
        let g = WeightedMultigraph::unweighted(3, &[(0, 1), (1, 2)]).unwrap();
        let l = g.incidence_system().l;
        let phi = DVector::from_vec(vec![0.0, 1.0, 2.0]);
        assert_eq!(l * phi, DVector::from_vec(vec![-1.0, 0.0, 1.0]));
    }

    #[test]
    fn incidence_rows_have_one_plus_and_one_minus() {
        let g = WeightedMultigraph::from_triples(4, &[(0, 1, 1.0), (3, 1, 2.0), (2, 3, 0.5), (1, 2, 1.0)])
            .unwrap();
        let b = g.incidence();
        for row in b.row_iter() {
            assert_eq!(row.iter().filter(|&&x| x == 1.0).count(), 1);
            assert_eq!(row.iter().filter(|&&x| x == -1.0).count(), 1);
            assert_eq!(row.iter().filter(|&&x| x == 0.0).count(), 2);
        }
    }

    #[test]
    fn measure_examples() {
        let g = WeightedMultigraph::unweighted(2, &[(0, 1)]).unwrap();
        assert_eq!(g.measure_from_weights(&[1.0]).unwrap().mu, vec![0.5, 0.5]);

        let star = WeightedMultigraph::unweighted(4, &[(0, 1), (0, 2), (0, 3)]).unwrap();
        let mu = star.measure_from_weights(&[1.0; 3]).unwrap().mu;
        assert_abs_diff_eq!(mu[0], 0.5, epsilon = 1e-15);
        for &leaf in &mu[1..] {
            assert_abs_diff_eq!(leaf, 1.0 / 6.0, epsilon = 1e-15);
        }

        let mu = triangle().measure_from_weights(&[1.0, 0.0, 0.0]).unwrap().mu;
        assert_eq!(mu, vec![0.5, 0.5, 0.0]);
    }

    #[test]
    fn measure_rejects_zero_and_mismatched_weights() {
        assert!(matches!(
            triangle().measure_from_weights(&[0.0; 3]),
            Err(GraphError::ZeroWeightVector)
        ));
        assert!(matches!(
            triangle().measure_from_weights(&[1.0; 2]),
            Err(GraphError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn unit_weights_give_degree_measure() {
        let g = WeightedMultigraph::unweighted(4, &[(0, 1), (1, 2), (2, 3), (3, 0), (0, 2), (0, 1)]).unwrap();
        let mu = g.measure_from_weights(&vec![1.0; g.m()]).unwrap().mu;
        let deg = g.degrees();
        for (x, &d) in deg.iter().enumerate() {
            assert_abs_diff_eq!(mu[x], d as f64 / (2.0 * g.m() as f64), epsilon = 1e-15);
        }
    }

    #[test]
    fn parse_format() {
        let text = "# a comment\nn=4\n0 1\n1 2 2.5\n\n2 3 1e-2\n";
        let g: WeightedMultigraph = text.parse().unwrap();
        assert_eq!(g.n(), 4);
        assert_eq!(g.edges()[0].conductance, 1.0);
        assert_eq!(g.edges()[2].conductance, 1e-2);
        let again: WeightedMultigraph = g.to_edge_list().parse().unwrap();
        assert_eq!(again, g);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = "0 1\n1 x\n".parse::<WeightedMultigraph>().unwrap_err();
        assert!(matches!(err, GraphError::Parse { line: 2, .. }), "{err}");
        let err = "0 1 1 1\n".parse::<WeightedMultigraph>().unwrap_err();
        assert!(matches!(err, GraphError::Parse { line: 1, .. }));
        let err = "# c\n0 1\n1 2 -3\n".parse::<WeightedMultigraph>().unwrap_err();
        assert!(matches!(err, GraphError::Parse { line: 3, .. }), "{err}");
        let err = "n=2\n0 1\n1 1\n".parse::<WeightedMultigraph>().unwrap_err();
        assert!(matches!(err, GraphError::Parse { line: 3, .. }), "{err}");
        let err = "n=5\n0 1\n".parse::<WeightedMultigraph>().unwrap_err();
        assert!(matches!(err, GraphError::Disconnected { .. }));
    }

    #[test]
    fn declared_vertex_count_is_kept_in_output() {
        let g: WeightedMultigraph = "n=3\n0 1\n1 2\n".parse().unwrap();
        assert_eq!(g.to_edge_list(), "0 1 1\n1 2 1\n");
    }
}
