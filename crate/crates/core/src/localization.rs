//! Executable checks of the localization bounds and the identities behind
//! them, plus a deterministic suite runner over the generated families.
//!
//! Every check yields a [`VerificationReport`]. For `≤` checks the report
//! passes iff `value ≤ bound·(1 + rel_tol) + abs_tol`; for the `≥` check of
//! the parallel gadget iff `value ≥ bound·(1 - rel_tol) - abs_tol`. The
//! margin is always oriented so that a positive margin means slack.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::value::RawValue;

use crate::entropy::{self, dissipation_trace_with, heat_variation_check, log_mean_cs_check};
use crate::error::AnalysisError;
use crate::generate::{derive_seed, generate, ConductanceMode, Family, FamilySpec, SplitMix64};
use crate::graph::{EdgeWeighting, WeightedMultigraph};
use crate::heat::{green_time_quadrature, HeatKernelEvaluator};
use crate::linalg::{self, DirectSolver, PowerIteration};
use crate::transfer::{self, CurrentMatrices};

pub const DEFAULT_REL_TOL: f64 = 1e-9;
pub const DEFAULT_ABS_TOL: f64 = 1e-8;

/// Thresholds of the identity checks. These measure numerical agreement
/// rather than a bound and are not affected by [`Tolerances`].
pub const PROJECTION_TOL: f64 = 1e-9;
pub const SYMMETRY_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-8;
pub const ORACLE_TOL: f64 = 1e-8;
pub const GREEN_QUADRATURE_TOL: f64 = 1e-6;
pub const GREEN_MATCH_TOL: f64 = 1e-5;
pub const DISSIPATION_REL_TOL: f64 = 1e-5;
pub const TELESCOPING_TOL: f64 = 1e-8;
/// Quadrature target of the dissipation trace, fine enough for the
/// telescoping comparison.
pub const DISSIPATION_QUADRATURE_TOL: f64 = 1e-10;
pub const HEAT_VARIATION_REL_TOL: f64 = 1e-6;
pub const HEAT_VARIATION_QUADRATURE_TOL: f64 = 1e-8;
pub const CONSISTENCY_TOL: f64 = 1e-6;
/// Desk-scale proxy for the `√m` limit of the gadget.
pub const GADGET_FRACTION: f64 = 0.9;

/// Relative and absolute slack of the bound checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub rel: f64,
    pub abs: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rel: DEFAULT_REL_TOL,
            abs: DEFAULT_ABS_TOL,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    SpectralBound,
    UnweightedBounds,
    QuadraticForm,
    NormConsistency,
    ParallelGadget,
    Projection,
    Reciprocity,
    CurrentOracle,
    GreenIntegral,
    Dissipation,
    LogMeanCs,
    HeatVariation,
}

impl Check {
    pub const ALL: [Check; 12] = [
        Check::SpectralBound,
        Check::UnweightedBounds,
        Check::QuadraticForm,
        Check::NormConsistency,
        Check::ParallelGadget,
        Check::Projection,
        Check::Reciprocity,
        Check::CurrentOracle,
        Check::GreenIntegral,
        Check::Dissipation,
        Check::LogMeanCs,
        Check::HeatVariation,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Check::SpectralBound => "spectral_bound",
            Check::UnweightedBounds => "unweighted_bounds",
            Check::QuadraticForm => "quadratic_form",
            Check::NormConsistency => "norm_consistency",
            Check::ParallelGadget => "parallel_gadget",
            Check::Projection => "projection",
            Check::Reciprocity => "reciprocity",
            Check::CurrentOracle => "current_oracle",
            Check::GreenIntegral => "green_integral",
            Check::Dissipation => "dissipation",
            Check::LogMeanCs => "log_mean_cs",
            Check::HeatVariation => "heat_variation",
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownCheck(pub String);

impl fmt::Display for UnknownCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = Check::ALL.iter().map(|c| c.name()).collect();
        write!(f, "unknown check `{}` (expected one of: {})", self.0, names.join(", "))
    }
}

impl std::error::Error for UnknownCheck {}

impl FromStr for Check {
    type Err = UnknownCheck;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Check::ALL
            .iter()
            .copied()
            .find(|c| c.name() == s)
            .ok_or_else(|| UnknownCheck(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `value ≤ bound`
    Le,
    /// `value ≥ bound`
    Ge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    /// The comparison was made but an iterative method hit its cap.
    Flagged,
    /// Not applicable to this instance; the note says why.
    Skipped,
    /// The computation itself failed; the note carries the error.
    Error,
}

/// Which graph a report is about.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GraphDescriptor {
    pub family: String,
    /// Family size parameter (vertex count, side length, dimension or edge
    /// count, depending on the family).
    pub size: usize,
    pub conductance: String,
    pub seed: u64,
}

impl GraphDescriptor {
    pub fn of_graph(g: &WeightedMultigraph) -> Self {
        Self {
            family: "graph".into(),
            size: g.n(),
            conductance: if g.is_unweighted() { "unit" } else { "weighted" }.into(),
            seed: 0,
        }
    }

    pub fn of_spec(spec: &FamilySpec) -> Self {
        let conductance = if spec.family == Family::ParallelGadget {
            format!("big={}", spec.big)
        } else if spec.family == Family::RandomWeighted {
            ConductanceMode::LogUniform.name().into()
        } else {
            spec.conductance.name().into()
        };
        Self {
            family: spec.family.name().into(),
            size: spec.size,
            conductance,
            seed: spec.seed,
        }
    }
}

/// Outcome of one check on one graph.
#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub check: Check,
    pub graph: GraphDescriptor,
    pub n: usize,
    pub m: usize,
    pub value: Option<f64>,
    pub bound: Option<f64>,
    pub relation: Relation,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub pass: bool,
    pub status: Status,
    /// Secondary quantities, in a fixed order.
    pub details: Vec<(String, f64)>,
    pub note: String,
    /// Wall-clock seconds; not serialized so reports replay byte for byte.
    pub runtime: Option<f64>,
}

impl VerificationReport {
    fn compared(check: Check, g: &WeightedMultigraph, value: f64, bound: f64, relation: Relation, tol: Tolerances) -> Self {
        let pass = match relation {
            Relation::Le => value <= bound * (1.0 + tol.rel) + tol.abs,
            Relation::Ge => value >= bound * (1.0 - tol.rel) - tol.abs,
        };
        Self {
            check,
            graph: GraphDescriptor::of_graph(g),
            n: g.n(),
            m: g.m(),
            value: Some(value),
            bound: Some(bound),
            relation,
            rel_tol: tol.rel,
            abs_tol: tol.abs,
            pass,
            status: if pass { Status::Pass } else { Status::Fail },
            details: Vec::new(),
            note: String::new(),
            runtime: None,
        }
    }

    fn le(check: Check, g: &WeightedMultigraph, value: f64, bound: f64, tol: Tolerances) -> Self {
        Self::compared(check, g, value, bound, Relation::Le, tol)
    }

    /// `value ≤ bound` with no slack beyond the bound itself.
    fn within(check: Check, g: &WeightedMultigraph, value: f64, bound: f64) -> Self {
        Self::le(check, g, value, bound, Tolerances { rel: 0.0, abs: 0.0 })
    }

    fn uncompared(check: Check, graph: GraphDescriptor, n: usize, m: usize, status: Status, note: String) -> Self {
        Self {
            check,
            graph,
            n,
            m,
            value: None,
            bound: None,
            relation: Relation::Le,
            rel_tol: 0.0,
            abs_tol: 0.0,
            pass: false,
            status,
            details: Vec::new(),
            note,
            runtime: None,
        }
    }

    pub fn skipped(check: Check, g: &WeightedMultigraph, reason: impl Into<String>) -> Self {
        Self::uncompared(check, GraphDescriptor::of_graph(g), g.n(), g.m(), Status::Skipped, reason.into())
    }

    pub fn errored(check: Check, graph: GraphDescriptor, n: usize, m: usize, error: &AnalysisError) -> Self {
        Self::uncompared(check, graph, n, m, Status::Error, error.to_string())
    }

    fn detail(mut self, name: &str, value: f64) -> Self {
        self.details.push((name.to_string(), value));
        self
    }

    fn note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }

    /// Extra requirements beyond the main comparison.
    fn require(mut self, ok: bool) -> Self {
        if !ok {
            self.pass = false;
            if self.status == Status::Pass {
                self.status = Status::Fail;
            }
        }
        self
    }

    /// Marks a non-converged power iteration without failing the check.
    fn flag_power(mut self, power: &PowerIteration) -> Self {
        if !power.converged {
            self.status = Status::Flagged;
            let msg = format!("power iteration stopped after {} iterations", power.iterations);
            self.note = if self.note.is_empty() {
                msg
            } else {
                format!("{}; {msg}", self.note)
            };
        }
        self
    }

    pub fn with_graph(mut self, graph: GraphDescriptor) -> Self {
        self.graph = graph;
        self
    }

    /// `ln n`, recorded so the base of the logarithm is explicit.
    pub fn ln_n(&self) -> f64 {
        (self.n as f64).ln()
    }

    /// `bound - value` for `≤` checks, `value - bound` for `≥` checks.
    pub fn margin(&self) -> Option<f64> {
        let (v, b) = (self.value?, self.bound?);
        Some(match self.relation {
            Relation::Le => b - v,
            Relation::Ge => v - b,
        })
    }

    /// A bound or identity was violated.
    pub fn failed(&self) -> bool {
        matches!(self.status, Status::Fail) || (self.status == Status::Flagged && !self.pass)
    }

    pub fn errored_out(&self) -> bool {
        self.status == Status::Error
    }

    /// Row with every number pre-formatted by [`format_number`].
    pub fn row(&self) -> ReportRow {
        let num = |x: Option<f64>| x.and_then(format_number);
        ReportRow {
            check: self.check.name().into(),
            family: self.graph.family.clone(),
            size: self.graph.size,
            conductance: self.graph.conductance.clone(),
            seed: self.graph.seed,
            n: self.n,
            m: self.m,
            value: num(self.value),
            bound: num(self.bound),
            margin: num(self.margin()),
            relation: match self.relation {
                Relation::Le => "le".into(),
                Relation::Ge => "ge".into(),
            },
            rel_tol: num(Some(self.rel_tol)),
            abs_tol: num(Some(self.abs_tol)),
            ln_n: num(Some(self.ln_n())),
            pass: self.pass,
            status: serde_json::to_value(self.status)
                .ok()
                .and_then(|v| v.as_str().map(str::to_string))
                .unwrap_or_default(),
            details: self.details.iter().map(|(k, v)| (k.clone(), format_number(*v))).collect(),
            note: self.note.clone(),
        }
    }
}

/// Formats `x` with 17 significant digits, or `None` if it is not finite.
pub fn format_number(x: f64) -> Option<String> {
    x.is_finite().then(|| format!("{x:.16e}"))
}

/// Flat, string-formatted view of a report shared by the JSON and CSV
/// writers, so both emit identical digits.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub check: String,
    pub family: String,
    pub size: usize,
    pub conductance: String,
    pub seed: u64,
    pub n: usize,
    pub m: usize,
    pub value: Option<String>,
    pub bound: Option<String>,
    pub margin: Option<String>,
    pub relation: String,
    pub rel_tol: Option<String>,
    pub abs_tol: Option<String>,
    pub ln_n: Option<String>,
    pub pass: bool,
    pub status: String,
    pub details: Vec<(String, Option<String>)>,
    pub note: String,
}

#[derive(Serialize)]
struct JsonRow<'a> {
    check: &'a str,
    family: &'a str,
    size: usize,
    conductance: &'a str,
    seed: u64,
    n: usize,
    m: usize,
    value: Option<Box<RawValue>>,
    bound: Option<Box<RawValue>>,
    margin: Option<Box<RawValue>>,
    relation: &'a str,
    rel_tol: Option<Box<RawValue>>,
    abs_tol: Option<Box<RawValue>>,
    ln_n: Option<Box<RawValue>>,
    pass: bool,
    status: &'a str,
    details: serde_json::Map<String, serde_json::Value>,
    note: &'a str,
}

fn raw(s: &Option<String>) -> Option<Box<RawValue>> {
    s.as_ref().map(|s| RawValue::from_string(s.clone()).expect("formatted float is valid JSON"))
}

/// Serializes reports as a pretty-printed JSON array.
pub fn reports_to_json(reports: &[VerificationReport]) -> String {
    let rows: Vec<ReportRow> = reports.iter().map(VerificationReport::row).collect();
    rows_to_json(&rows)
}

/// Serializes pre-formatted rows as a pretty-printed JSON array.
pub fn rows_to_json(rows: &[ReportRow]) -> String {
    let json_rows: Vec<JsonRow> = rows
        .iter()
        .map(|r| JsonRow {
            check: &r.check,
            family: &r.family,
            size: r.size,
            conductance: &r.conductance,
            seed: r.seed,
            n: r.n,
            m: r.m,
            value: raw(&r.value),
            bound: raw(&r.bound),
            margin: raw(&r.margin),
            relation: &r.relation,
            rel_tol: raw(&r.rel_tol),
            abs_tol: raw(&r.abs_tol),
            ln_n: raw(&r.ln_n),
            pass: r.pass,
            status: &r.status,
            details: r
                .details
                .iter()
                .map(|(k, v)| {
                    let value = match v {
                        Some(s) => serde_json::from_str(s).expect("formatted float is valid JSON"),
                        None => serde_json::Value::Null,
                    };
                    (k.clone(), value)
                })
                .collect(),
            note: &r.note,
        })
        .collect();
    let mut out = serde_json::to_string_pretty(&json_rows).expect("report rows serialize");
    out.push('\n');
    out
}

fn two_ln_n(n: usize) -> f64 {
    2.0 * (n as f64).ln()
}

/// `‖Π̄‖₂ ≤ 2 ln n` on any connected multigraph.
pub fn check_spectral_bound_weighted(g: &WeightedMultigraph, tol: Tolerances) -> Result<VerificationReport, AnalysisError> {
    spectral_bound(g, &transfer::transfer_current_matrix(g)?, tol)
}

fn spectral_bound(g: &WeightedMultigraph, cm: &CurrentMatrices, tol: Tolerances) -> Result<VerificationReport, AnalysisError> {
    let power = cm.pibar_norm()?;
    Ok(VerificationReport::le(Check::SpectralBound, g, power.value, two_ln_n(g.n()), tol)
        .detail("power_iterations", power.iterations as f64)
        .flag_power(&power))
}

/// `m⁻¹ Σ_e ‖i_e‖₁ ≤ ‖K̄‖₂ ≤ 2 ln n` for unit conductances. The report's
/// value is `‖K̄‖₂`; the average flow length and the ordering are
/// details that must hold too.
pub fn check_unweighted_bounds(g: &WeightedMultigraph, tol: Tolerances) -> Result<VerificationReport, AnalysisError> {
    if let Some((edge, e)) = g.edges().iter().enumerate().find(|(_, e)| e.conductance != 1.0) {
        return Err(AnalysisError::NotUnitConductance {
            edge,
            value: e.conductance,
        });
    }
    unweighted_bounds(g, &transfer::transfer_current_matrix(g)?, tol)
}

fn unweighted_bounds(g: &WeightedMultigraph, cm: &CurrentMatrices, tol: Tolerances) -> Result<VerificationReport, AnalysisError> {
    let power = cm.kbar_norm()?;
    let avg = cm.avg_l1_flow();
    let bound = two_ln_n(g.n());
    let ordered = avg <= power.value * (1.0 + tol.rel) + tol.abs;
    let avg_bounded = avg <= bound * (1.0 + tol.rel) + tol.abs;
    Ok(VerificationReport::le(Check::UnweightedBounds, g, power.value, bound, tol)
        .detail("avg_l1_flow", avg)
        .detail("kbar_norm", power.value)
        .detail("power_iterations", power.iterations as f64)
        .require(ordered && avg_bounded)
        .flag_power(&power))
}

/// `|wᵀΠ̄w| ≤ 2 H(μ_w) ‖w‖²`, both sides evaluated directly.
pub fn check_quadratic_form_bound(g: &WeightedMultigraph, w: &[f64], tol: Tolerances) -> Result<VerificationReport, AnalysisError> {
    quadratic_form(g, &transfer::transfer_current_matrix(g)?, w, tol)
}

fn quadratic_form(g: &WeightedMultigraph, cm: &CurrentMatrices, w: &[f64], tol: Tolerances) -> Result<VerificationReport, AnalysisError> {
    let weighting = EdgeWeighting::new(g, w)?;
    let (lhs, rhs, h) = quadratic_sides(cm, &weighting)?;
    Ok(VerificationReport::le(Check::QuadraticForm, g, lhs, rhs, tol).detail("entropy_mu_w", h))
}

fn quadratic_sides(cm: &CurrentMatrices, weighting: &EdgeWeighting) -> Result<(f64, f64, f64), AnalysisError> {
    let w = DVector::from_column_slice(&weighting.w);
    let lhs = w.dot(&(&cm.pibar * &w)).abs();
    let h = entropy::entropy(&weighting.mu)?;
    Ok((lhs, 2.0 * h * weighting.norm_sq(), h))
}

/// The quadratic-form bound at the power-iteration maximizer `w*` of `Π̄`:
/// `w*ᵀΠ̄w*` must reproduce `‖Π̄‖₂` and stay below `2H(μ_{w*})`.
pub fn check_norm_consistency(g: &WeightedMultigraph, tol: Tolerances) -> Result<VerificationReport, AnalysisError> {
    norm_consistency(g, &transfer::transfer_current_matrix(g)?, tol)
}

fn norm_consistency(g: &WeightedMultigraph, cm: &CurrentMatrices, tol: Tolerances) -> Result<VerificationReport, AnalysisError> {
    let power = cm.pibar_norm()?;
    let weighting = EdgeWeighting::new(g, power.vector.as_slice())?;
    let (lhs, rhs, h) = quadratic_sides(cm, &weighting)?;
    let gap = (lhs - power.value).abs();
    Ok(VerificationReport::le(Check::NormConsistency, g, lhs, rhs, tol)
        .detail("pibar_norm", power.value)
        .detail("consistency_gap", gap)
        .detail("entropy_mu_w", h)
        .require(gap <= CONSISTENCY_TOL * power.value.max(1.0))
        .flag_power(&power))
}

/// The two-vertex gadget with `m - 1` unit edges and one edge of
/// conductance `big`. Requires `‖K̄‖₂ ≥ 0.9√m` once `big ≥ 100m` and
/// `‖Π̄‖₂ ≤ 2 ln 2` always. The `0.9√m` threshold is a desk-scale proxy for
/// the `√m` limit.
pub fn check_parallel_gadget(m: usize, big: f64, tol: Tolerances) -> Result<VerificationReport, AnalysisError> {
    let g = generate(&FamilySpec::gadget(m, big))?;
    let cm = transfer::transfer_current_matrix(&g)?;
    let kbar = cm.kbar_norm()?;
    let pibar = cm.pibar_norm()?;
    let pibar_bound = two_ln_n(2);
    let pibar_ok = pibar.value <= pibar_bound + 1e-9;
    let sqrt_m = (m as f64).sqrt();
    let regime = big >= 100.0 * m as f64;
    let report = if regime {
        VerificationReport::compared(Check::ParallelGadget, &g, kbar.value, GADGET_FRACTION * sqrt_m, Relation::Ge, tol)
            .note("Kbar_norm >= 0.9*sqrt(m) is a desk-scale proxy for the sqrt(m) limit")
    } else {
        VerificationReport::le(Check::ParallelGadget, &g, pibar.value, pibar_bound, tol)
            .note("big < 100*m: only the Pibar_norm bound is asserted")
    };
    Ok(report
        .detail("kbar_norm", kbar.value)
        .detail("pibar_norm", pibar.value)
        .detail("pibar_bound", pibar_bound)
        .detail("sqrt_m", sqrt_m)
        .require(pibar_ok)
        .flag_power(&kbar)
        .flag_power(&pibar)
        .with_graph(GraphDescriptor::of_spec(&FamilySpec::gadget(m, big))))
}

/// `Π² = Π`, `Π = Πᵀ` and `tr Π = n - 1`. The value is the idempotence
/// defect; the other two are details with their own thresholds.
pub fn check_projection(g: &WeightedMultigraph) -> Result<VerificationReport, AnalysisError> {
    Ok(projection(g, &transfer::transfer_current_matrix(g)?))
}

fn projection(g: &WeightedMultigraph, cm: &CurrentMatrices) -> VerificationReport {
    let asym = cm.pi_asymmetry();
    let trace_err = (cm.pi_trace() - (g.n() as f64 - 1.0)).abs();
    VerificationReport::within(Check::Projection, g, cm.projection_defect(), PROJECTION_TOL)
        .detail("asymmetry", asym)
        .detail("trace_error", trace_err)
        .require(asym <= SYMMETRY_TOL && trace_err <= TRACE_TOL)
}

/// Reciprocity `K(f,e)/c_f = K(e,f)/c_e`, i.e. `K = Kᵀ` when `C = I`.
pub fn check_reciprocity(g: &WeightedMultigraph) -> Result<VerificationReport, AnalysisError> {
    Ok(reciprocity(g, &transfer::transfer_current_matrix(g)?))
}

fn reciprocity(g: &WeightedMultigraph, cm: &CurrentMatrices) -> VerificationReport {
    let c = g.conductances();
    let m = g.m();
    let mut defect = 0.0f64;
    let mut scale = 1.0f64;
    for e in 0..m {
        for f in 0..m {
            let gfe = cm.k[(f, e)] / c[f];
            scale = scale.max(gfe.abs());
            defect = defect.max((gfe - cm.k[(e, f)] / c[e]).abs());
        }
    }
    VerificationReport::within(Check::Reciprocity, g, defect, SYMMETRY_TOL * scale)
        .detail("k_asymmetry", cm.k_asymmetry())
}

/// Spectral current vectors against direct solves of `Lφ = b_e`.
pub fn check_current_oracle(g: &WeightedMultigraph) -> Result<VerificationReport, AnalysisError> {
    current_oracle(g, &transfer::transfer_current_matrix(g)?)
}

fn current_oracle(g: &WeightedMultigraph, cm: &CurrentMatrices) -> Result<VerificationReport, AnalysisError> {
    let solver = DirectSolver::new(g)?;
    let mut worst = 0.0f64;
    for e in 0..g.m() {
        let direct = transfer::direct_current_vector(g, &solver, e)?;
        worst = worst.max((cm.current_vector(e) - direct).amax());
    }
    Ok(VerificationReport::within(Check::CurrentOracle, g, worst, ORACLE_TOL))
}

/// Time quadrature of `∫ B H_t Bᵀ dt` against `BL⁺Bᵀ`, for the vertex
/// measure `μ`.
pub fn check_green_integral(g: &WeightedMultigraph, mu: &[f64]) -> Result<VerificationReport, AnalysisError> {
    let ev = HeatKernelEvaluator::new(g, mu)?;
    let quad = green_time_quadrature(&ev, GREEN_QUADRATURE_TOL)?;
    let exact = linalg::projected_green(g, &transfer::degree_scaled_eig(g)?)?;
    let worst = (&quad.matrix - &exact).amax();
    Ok(
        VerificationReport::within(Check::GreenIntegral, g, worst, GREEN_MATCH_TOL * (1.0 + exact.amax()))
            .detail("horizon", quad.horizon)
            .detail("tail_bound", quad.tail_bound)
            .detail("panels", quad.panels as f64),
    )
}

/// `∫₀^∞ I(h_s) ds = -ln μ(v)` for `h_s = P_s M⁻¹ 1_v`. The value is the
/// relative discrepancy; the telescoping gap is a detail with its own
/// threshold.
pub fn check_dissipation(g: &WeightedMultigraph, mu: &[f64], v: usize) -> Result<VerificationReport, AnalysisError> {
    if v >= g.n() {
        return Err(AnalysisError::VertexOutOfRange { vertex: v, n: g.n() });
    }
    let ev = HeatKernelEvaluator::new(g, mu)?;
    let mut rho = vec![0.0; g.n()];
    rho[v] = 1.0;
    let trace = dissipation_trace_with(g, &ev, &rho, DISSIPATION_QUADRATURE_TOL)?;
    let min_fisher = trace.fisher.iter().copied().fold(f64::INFINITY, f64::min);
    let gap = trace.telescoping_gap();
    Ok(
        VerificationReport::within(Check::Dissipation, g, trace.relative_discrepancy(), DISSIPATION_REL_TOL)
            .detail("integral", trace.integral)
            .detail("closed_form", trace.closed_form)
            .detail("telescoping_gap", gap)
            .detail("min_fisher", min_fisher)
            .require(gap <= TELESCOPING_TOL && min_fisher >= -1e-12),
    )
}

/// `(wᵀC^{1/2}|Bh|)² ≤ (I(h)/2) Σ_x h(x) Σ_{e∋x} w_e²`.
pub fn check_log_mean_cs(g: &WeightedMultigraph, h: &[f64], w: &[f64], tol: Tolerances) -> Result<VerificationReport, AnalysisError> {
    let cs = log_mean_cs_check(g, h, w)?;
    Ok(VerificationReport::le(Check::LogMeanCs, g, cs.lhs, cs.rhs, Tolerances { rel: tol.rel, abs: 0.0 }))
}

/// `∫₀^∞ wᵀ|C^{1/2}BH_tBᵀC^{1/2}|w dt ≤ 2‖w‖² H(μ_w)` for strictly
/// positive `w`.
pub fn check_heat_variation(g: &WeightedMultigraph, w: &[f64]) -> Result<VerificationReport, AnalysisError> {
    let hv = heat_variation_check(g, w, HEAT_VARIATION_QUADRATURE_TOL)?;
    Ok(VerificationReport::le(
        Check::HeatVariation,
        g,
        hv.lhs_integral,
        hv.rhs_bound,
        Tolerances {
            rel: HEAT_VARIATION_REL_TOL,
            abs: HEAT_VARIATION_QUADRATURE_TOL,
        },
    )
    .detail("tail_bound", hv.tail_bound)
    .detail("horizon", hv.horizon)
    .detail("panels", hv.panels as f64))
}

/// What [`run_suite`] runs.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteConfig {
    pub families: Vec<Family>,
    pub conductances: Vec<ConductanceMode>,
    /// Inclusive vertex-count range.
    pub min_n: usize,
    pub max_n: usize,
    pub seed: u64,
    pub p: f64,
    /// `(m, big)` gadgets, run when [`Check::ParallelGadget`] is selected.
    pub gadgets: Vec<(usize, f64)>,
    /// Selected checks; empty means all.
    pub checks: Vec<Check>,
    pub tolerances: Tolerances,
    /// Largest `n` for the oracle, Green-integral, dissipation and
    /// log-mean checks.
    pub dense_max_n: usize,
    /// Largest `m` for the heat-variation quadrature, whose integrand is a
    /// full `m × m` kernel per node.
    pub heat_variation_max_m: usize,
    /// Worker threads; `0` lets rayon decide.
    pub jobs: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            families: vec![
                Family::Path,
                Family::Cycle,
                Family::Complete,
                Family::Star,
                Family::Grid2d,
                Family::Hypercube,
                Family::Gnp,
            ],
            conductances: vec![ConductanceMode::Unit, ConductanceMode::LogUniform],
            min_n: 4,
            max_n: 64,
            seed: 7,
            p: crate::generate::DEFAULT_GNP_P,
            gadgets: [4usize, 9, 16].iter().map(|&m| (m, 100.0 * m as f64)).collect(),
            checks: Vec::new(),
            tolerances: Tolerances::default(),
            dense_max_n: 32,
            heat_variation_max_m: 64,
            jobs: 0,
        }
    }
}

impl SuiteConfig {
    pub fn selects(&self, check: Check) -> bool {
        self.checks.is_empty() || self.checks.contains(&check)
    }

    /// Graph recipes in run order, each with its own derived seed.
    pub fn instances(&self) -> Vec<FamilySpec> {
        let mut specs = Vec::new();
        for &family in &self.families {
            if family == Family::ParallelGadget {
                continue;
            }
            for size in family.sizes_in(self.min_n, self.max_n) {
                for &mode in &self.conductances {
                    if family == Family::RandomWeighted && mode == ConductanceMode::Unit {
                        continue;
                    }
                    // Paths need n ≥ 2 and cycles n ≥ 3; the range filter
                    // already enforces n ≥ 2.
                    if family == Family::Cycle && size < 3 {
                        continue;
                    }
                    let mode_tag = match mode {
                        ConductanceMode::Unit => 0,
                        ConductanceMode::LogUniform => 1,
                    };
                    let mut spec = FamilySpec::new(family, size)
                        .with_p(self.p)
                        .with_seed(derive_seed(&[self.seed, family.index(), size as u64, mode_tag]));
                    spec.conductance = mode;
                    specs.push(spec);
                }
            }
        }
        specs
    }
}

/// Key that orders the suite output.
fn sort_key(r: &VerificationReport) -> (String, usize, String, Check) {
    (r.graph.family.clone(), r.graph.size, r.graph.conductance.clone(), r.check)
}

/// Runs every selected check on every instance and gadget. Individual
/// failures become `error` rows; the suite always completes. The output
/// depends only on the configuration, never on `jobs`.
pub fn run_suite(config: &SuiteConfig) -> Vec<VerificationReport> {
    let specs = if instance_checks(config).is_empty() {
        Vec::new()
    } else {
        config.instances()
    };
    let gadgets: Vec<(usize, f64)> = if config.selects(Check::ParallelGadget) {
        config.gadgets.clone()
    } else {
        Vec::new()
    };
    let work = || {
        let mut reports: Vec<VerificationReport> =
            specs.par_iter().flat_map_iter(|spec| run_instance(spec, config)).collect();
        reports.extend(gadgets.par_iter().map(|&(m, big)| timed_gadget(m, big, config.tolerances)).collect::<Vec<_>>());
        reports
    };
    let mut reports = match rayon::ThreadPoolBuilder::new().num_threads(config.jobs).build() {
        Ok(pool) => pool.install(work),
        Err(_) => work(),
    };
    reports.sort_by(|a, b| {
        let (fa, fb) = (family_rank(&a.graph.family), family_rank(&b.graph.family));
        fa.cmp(&fb).then_with(|| sort_key(a).partial_cmp(&sort_key(b)).unwrap_or(Ordering::Equal))
    });
    reports
}

fn family_rank(name: &str) -> usize {
    Family::ALL.iter().position(|f| f.name() == name).unwrap_or(usize::MAX)
}

fn timed_gadget(m: usize, big: f64, tol: Tolerances) -> VerificationReport {
    let start = Instant::now();
    let spec = FamilySpec::gadget(m, big);
    let mut report = check_parallel_gadget(m, big, tol)
        .unwrap_or_else(|e| VerificationReport::errored(Check::ParallelGadget, GraphDescriptor::of_spec(&spec), 2, m, &e));
    report.runtime = Some(start.elapsed().as_secs_f64());
    report
}

fn instance_checks(config: &SuiteConfig) -> Vec<Check> {
    Check::ALL
        .iter()
        .copied()
        .filter(|&c| c != Check::ParallelGadget && config.selects(c))
        .collect()
}

/// All selected checks for one generated graph, in [`Check`] order.
pub fn run_instance(spec: &FamilySpec, config: &SuiteConfig) -> Vec<VerificationReport> {
    let descriptor = GraphDescriptor::of_spec(spec);
    match generate(spec) {
        Ok(g) => run_checks(&g, &descriptor, config),
        Err(e) => {
            let err = AnalysisError::from(e);
            instance_checks(config)
                .into_iter()
                .map(|c| VerificationReport::errored(c, descriptor.clone(), spec.n(), 0, &err))
                .collect()
        }
    }
}

/// All selected checks on `g`. Random inputs (edge and vertex vectors, the
/// start vertex) come from one stream seeded by `descriptor.seed`.
pub fn run_checks(g: &WeightedMultigraph, descriptor: &GraphDescriptor, config: &SuiteConfig) -> Vec<VerificationReport> {
    let selected = instance_checks(config);
    if selected.is_empty() {
        return Vec::new();
    }
    let start = Instant::now();
    let cm = match transfer::transfer_current_matrix(g) {
        Ok(cm) => cm,
        Err(e) => {
            let err = AnalysisError::from(e);
            return selected
                .iter()
                .map(|&c| VerificationReport::errored(c, descriptor.clone(), g.n(), g.m(), &err))
                .collect();
        }
    };
    let shared = start.elapsed().as_secs_f64();

    let mut rng = SplitMix64::new(derive_seed(&[descriptor.seed, 0x5EED]));
    let signed_w: Vec<f64> = (0..g.m()).map(|_| rng.uniform(-1.0, 1.0)).collect();
    let positive_w: Vec<f64> = (0..g.m()).map(|_| rng.uniform(0.1, 1.0)).collect();
    let h: Vec<f64> = (0..g.n()).map(|_| rng.log_uniform(1e-3, 1e3)).collect();
    let v = rng.below(g.n());
    let tol = config.tolerances;
    let small = g.n() <= config.dense_max_n;

    selected
        .into_iter()
        .map(|check| {
            let t0 = Instant::now();
            let result = match check {
                Check::SpectralBound => spectral_bound(g, &cm, tol),
                Check::UnweightedBounds if !g.is_unweighted() => {
                    Ok(VerificationReport::skipped(check, g, "needs unit conductances"))
                }
                Check::UnweightedBounds => unweighted_bounds(g, &cm, tol),
                Check::QuadraticForm => quadratic_form(g, &cm, &signed_w, tol),
                Check::NormConsistency => norm_consistency(g, &cm, tol),
                Check::Projection => Ok(projection(g, &cm)),
                Check::Reciprocity => Ok(reciprocity(g, &cm)),
                _ if !small => Ok(VerificationReport::skipped(
                    check,
                    g,
                    format!("n = {} exceeds the dense-check limit {}", g.n(), config.dense_max_n),
                )),
                Check::CurrentOracle => current_oracle(g, &cm),
                Check::GreenIntegral => EdgeWeighting::new(g, &positive_w)
                    .map_err(AnalysisError::from)
                    .and_then(|wt| check_green_integral(g, &wt.mu)),
                Check::Dissipation => EdgeWeighting::new(g, &positive_w)
                    .map_err(AnalysisError::from)
                    .and_then(|wt| check_dissipation(g, &wt.mu, v)),
                Check::LogMeanCs => check_log_mean_cs(g, &h, &positive_w, tol),
                Check::HeatVariation if g.m() > config.heat_variation_max_m => Ok(VerificationReport::skipped(
                    check,
                    g,
                    format!("m = {} exceeds the heat-variation limit {}", g.m(), config.heat_variation_max_m),
                )),
                Check::HeatVariation => check_heat_variation(g, &positive_w),
                Check::ParallelGadget => unreachable!("gadgets run separately"),
            };
            let mut report =
                result.unwrap_or_else(|e| VerificationReport::errored(check, descriptor.clone(), g.n(), g.m(), &e));
            report.graph = descriptor.clone();
            report.runtime = Some(t0.elapsed().as_secs_f64() + shared);
            report
        })
        .collect()
}

/// Summary counts over a report list.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SuiteSummary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
    pub flagged: usize,
    pub skipped: usize,
    pub errors: usize,
}

impl SuiteSummary {
    pub fn of(reports: &[VerificationReport]) -> Self {
        let mut s = Self {
            total: reports.len(),
            ..Self::default()
        };
        for r in reports {
            match r.status {
                Status::Pass => s.passed += 1,
                Status::Fail => s.failed += 1,
                Status::Flagged => s.flagged += 1,
                Status::Skipped => s.skipped += 1,
                Status::Error => s.errors += 1,
            }
        }
        s
    }

    /// 0 when nothing failed, 1 on a violated bound, 2 on a computation
    /// error.
    pub fn exit_code(reports: &[VerificationReport]) -> i32 {
        if reports.iter().any(VerificationReport::errored_out) {
            2
        } else if reports.iter().any(VerificationReport::failed) {
            1
        } else {
            0
        }
    }
}
