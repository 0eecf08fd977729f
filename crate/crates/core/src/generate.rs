//! Deterministic and seeded graph families.
//!
//! Randomness comes from [`SplitMix64`], and floats are drawn as
//! `(next_u64() >> 11) · 2⁻⁵³`, so any implementation of the same generator
//! replays the same graphs.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::GraphError;
use crate::graph::{Edge, WeightedMultigraph};

/// SplitMix64 (Steele, Lea & Flood). State advances by the golden-ratio
/// increment and each output is a bijective mix of the new state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Log-uniform on `[lo, hi)`.
    pub fn log_uniform(&mut self, lo: f64, hi: f64) -> f64 {
        (lo.ln() + (hi.ln() - lo.ln()) * self.next_f64()).exp()
    }

    /// Uniform integer in `0..n` (multiply-shift, `n > 0`).
    pub fn below(&mut self, n: usize) -> usize {
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }
}

/// Mixes several words into one seed; used to give every suite instance its
/// own reproducible stream.
pub fn derive_seed(parts: &[u64]) -> u64 {
    let mut rng = SplitMix64::new(0x6A09_E667_F3BC_C908);
    let mut acc = 0u64;
    for &p in parts {
        rng.state ^= p;
        acc = rng.next_u64();
    }
    acc
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Path,
    Cycle,
    Complete,
    Star,
    Grid2d,
    Hypercube,
    Gnp,
    ParallelGadget,
    RandomWeighted,
}

impl Family {
    pub const ALL: [Family; 9] = [
        Family::Path,
        Family::Cycle,
        Family::Complete,
        Family::Star,
        Family::Grid2d,
        Family::Hypercube,
        Family::Gnp,
        Family::ParallelGadget,
        Family::RandomWeighted,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Path => "path",
            Family::Cycle => "cycle",
            Family::Complete => "complete",
            Family::Star => "star",
            Family::Grid2d => "grid2d",
            Family::Hypercube => "hypercube",
            Family::Gnp => "gnp",
            Family::ParallelGadget => "parallel_gadget",
            Family::RandomWeighted => "random_weighted",
        }
    }

    pub fn index(self) -> u64 {
        Self::ALL.iter().position(|&f| f == self).unwrap() as u64
    }

    /// Vertex count of the instance with size parameter `size`.
    pub fn vertex_count(self, size: usize) -> usize {
        match self {
            Family::Grid2d => size * size,
            Family::Hypercube => 1 << size,
            Family::ParallelGadget => 2,
            _ => size,
        }
    }

    /// Size parameters whose vertex count lies in `min_n..=max_n`.
    pub fn sizes_in(self, min_n: usize, max_n: usize) -> Vec<usize> {
        let candidates: Vec<usize> = match self {
            Family::Grid2d => (2..=max_n.max(2)).take_while(|k| k * k <= max_n).collect(),
            Family::Hypercube => (1..usize::BITS as usize - 1).take_while(|d| 1usize << d <= max_n).collect(),
            Family::ParallelGadget => Vec::new(),
            _ => (2..=max_n).collect(),
        };
        candidates
            .into_iter()
            .filter(|&s| {
                let n = self.vertex_count(s);
                n >= min_n.max(2) && n <= max_n
            })
            .collect()
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = GenerateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "grid" => return Ok(Family::Grid2d),
            "gadget" => return Ok(Family::ParallelGadget),
            _ => {}
        }
        Family::ALL
            .iter()
            .copied()
            .find(|f| f.name() == s)
            .ok_or_else(|| GenerateError::UnknownFamily(s.to_string()))
    }
}

/// How edge conductances are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConductanceMode {
    Unit,
    /// Independent log-uniform draws on `[1e-3, 1e3]`.
    LogUniform,
}

impl ConductanceMode {
    pub fn name(self) -> &'static str {
        match self {
            ConductanceMode::Unit => "unit",
            ConductanceMode::LogUniform => "weighted",
        }
    }
}

pub const LOG_UNIFORM_RANGE: (f64, f64) = (1e-3, 1e3);
pub const DEFAULT_GNP_P: f64 = 0.3;
pub const GNP_MAX_RETRIES: usize = 100;

/// A reproducible recipe for one graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilySpec {
    pub family: Family,
    /// Vertex count for path, cycle, complete, star, gnp and random_weighted;
    /// side length for grid2d; dimension for hypercube; edge count for
    /// parallel_gadget.
    pub size: usize,
    pub conductance: ConductanceMode,
    /// Edge probability for gnp.
    pub p: f64,
    /// Conductance of the special edge of the parallel gadget.
    pub big: f64,
    pub seed: u64,
}

impl FamilySpec {
    pub fn new(family: Family, size: usize) -> Self {
        Self {
            family,
            size,
            conductance: ConductanceMode::Unit,
            p: DEFAULT_GNP_P,
            big: 1e6,
            seed: 0,
        }
    }

    pub fn weighted(mut self) -> Self {
        self.conductance = ConductanceMode::LogUniform;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_p(mut self, p: f64) -> Self {
        self.p = p;
        self
    }

    pub fn with_big(mut self, big: f64) -> Self {
        self.big = big;
        self
    }

    pub fn gadget(m: usize, big: f64) -> Self {
        Self::new(Family::ParallelGadget, m).with_big(big)
    }

    /// Vertex count of the generated graph.
    pub fn n(&self) -> usize {
        self.family.vertex_count(self.size)
    }

    pub fn label(&self) -> String {
        match self.family {
            Family::ParallelGadget => format!("parallel_gadget(m={},big={})", self.size, self.big),
            Family::Gnp => format!("gnp(n={},p={},{})", self.size, self.p, self.conductance.name()),
            f => format!("{}({},{})", f.name(), self.size, self.conductance.name()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GenerateError {
    #[error("unknown graph family `{0}`")]
    UnknownFamily(String),
    #[error("invalid size {size} for family {family}: {reason}")]
    InvalidSize {
        family: Family,
        size: usize,
        reason: &'static str,
    },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("gnp(n={n}, p={p}) stayed disconnected after {retries} samples")]
    RetriesExhausted { n: usize, p: f64, retries: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Builds the graph described by `spec`.
pub fn generate(spec: &FamilySpec) -> Result<WeightedMultigraph, GenerateError> {
    let mut rng = SplitMix64::new(spec.seed);
    let size = spec.size;
    let too_small = |min: usize, reason| {
        if size < min {
            Err(GenerateError::InvalidSize {
                family: spec.family,
                size,
                reason,
            })
        } else {
            Ok(())
        }
    };
    let pairs: Vec<(usize, usize)> = match spec.family {
        Family::Path => {
            too_small(2, "needs at least 2 vertices")?;
            (0..size - 1).map(|i| (i, i + 1)).collect()
        }
        Family::Cycle => {
            too_small(3, "needs at least 3 vertices")?;
            (0..size).map(|i| (i, (i + 1) % size)).collect()
        }
        Family::Complete => {
            too_small(2, "needs at least 2 vertices")?;
            (0..size).flat_map(|i| (i + 1..size).map(move |j| (i, j))).collect()
        }
        Family::Star => {
            too_small(2, "needs at least 2 vertices")?;
            (1..size).map(|leaf| (0, leaf)).collect()
        }
        Family::Grid2d => {
            too_small(2, "side length must be at least 2")?;
            let mut pairs = Vec::with_capacity(2 * size * (size - 1));
            for r in 0..size {
                for c in 0..size {
                    let x = r * size + c;
                    if c + 1 < size {
                        pairs.push((x, x + 1));
                    }
                    if r + 1 < size {
                        pairs.push((x, x + size));
                    }
                }
            }
            pairs
        }
        Family::Hypercube => {
            too_small(1, "dimension must be at least 1")?;
            if size > 16 {
                return Err(GenerateError::InvalidSize {
                    family: spec.family,
                    size,
                    reason: "dimension above 16 is beyond dense scale",
                });
            }
            let n = 1usize << size;
            (0..n)
                .flat_map(|x| (0..size).map(move |b| (x, x ^ (1 << b))).filter(|&(x, y)| x < y))
                .collect()
        }
        Family::Gnp => {
            too_small(2, "needs at least 2 vertices")?;
            if !(spec.p > 0.0 && spec.p <= 1.0) {
                return Err(GenerateError::InvalidParameter(format!("gnp needs p in (0, 1], got {}", spec.p)));
            }
            sample_connected_gnp(size, spec.p, &mut rng)?
        }
        Family::RandomWeighted => {
            too_small(2, "needs at least 2 vertices")?;
            // Random spanning tree plus extra edges, parallel edges allowed.
            let mut pairs: Vec<(usize, usize)> = (1..size).map(|x| (rng.below(x), x)).collect();
            for _ in 0..size {
                let a = rng.below(size);
                let b = rng.below(size);
                if a != b {
                    pairs.push((a, b));
                }
            }
            pairs
        }
        Family::ParallelGadget => {
            too_small(2, "needs at least 2 parallel edges")?;
            if !(spec.big > 0.0) {
                return Err(GenerateError::InvalidParameter(format!(
                    "gadget conductance must be positive, got {}",
                    spec.big
                )));
            }
            let mut edges: Vec<Edge> = (0..size - 1).map(|_| Edge::new(0, 1, 1.0)).collect();
            edges.push(Edge::new(0, 1, spec.big));
            return Ok(WeightedMultigraph::new(2, edges)?);
        }
    };

    let force_weighted = spec.family == Family::RandomWeighted;
    let edges = pairs
        .into_iter()
        .map(|(a, b)| {
            let c = if force_weighted || spec.conductance == ConductanceMode::LogUniform {
                rng.log_uniform(LOG_UNIFORM_RANGE.0, LOG_UNIFORM_RANGE.1)
            } else {
                1.0
            };
            Edge::new(a, b, c)
        })
        .collect();
    Ok(WeightedMultigraph::new(spec.n(), edges)?)
}

fn sample_connected_gnp(n: usize, p: f64, rng: &mut SplitMix64) -> Result<Vec<(usize, usize)>, GenerateError> {
    for _ in 0..GNP_MAX_RETRIES {
        let mut pairs = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if rng.next_f64() < p {
                    pairs.push((i, j));
                }
            }
        }
        if is_connected(n, &pairs) {
            return Ok(pairs);
        }
    }
    Err(GenerateError::RetriesExhausted {
        n,
        p,
        retries: GNP_MAX_RETRIES,
    })
}

fn is_connected(n: usize, pairs: &[(usize, usize)]) -> bool {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut components = n;
    for &(a, b) in pairs {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra] = rb;
            components -= 1;
        }
    }
    components == 1
}
