//! Entropy, the logarithmic mean, the Fisher information `I(h) = hᵀL log h`,
//! and executable forms of the dissipation inequalities built on them.

use nalgebra::DVector;

use crate::error::AnalysisError;
use crate::graph::WeightedMultigraph;
use crate::heat::HeatKernelEvaluator;
use crate::quadrature::{self, TimeGrid};

const NORMALIZATION_TOL: f64 = 1e-9;

/// Relative gap `|a-b|/(a+b)` below which [`log_mean`] uses the series.
pub const LOG_MEAN_SEAM: f64 = 1e-8;

/// Shannon entropy in nats, with `0 log 0 = 0`.
pub fn entropy(mu: &[f64]) -> Result<f64, AnalysisError> {
    check_probability(mu)?;
    Ok(-mu.iter().filter(|&&p| p > 0.0).map(|&p| p * p.ln()).sum::<f64>())
}

fn check_probability(p: &[f64]) -> Result<(), AnalysisError> {
    if let Some((index, &value)) = p.iter().enumerate().find(|(_, &x)| !(x >= 0.0) || !x.is_finite()) {
        return Err(AnalysisError::NegativeEntry { index, value });
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > NORMALIZATION_TOL {
        return Err(AnalysisError::NotNormalized { sum });
    }
    Ok(())
}

fn check_positive(h: &[f64]) -> Result<(), AnalysisError> {
    match h.iter().enumerate().find(|(_, &x)| !(x > 0.0) || !x.is_finite()) {
        Some((index, &value)) => Err(AnalysisError::NonPositiveEntry { index, value }),
        None => Ok(()),
    }
}

fn check_len(expected: usize, found: usize) -> Result<(), AnalysisError> {
    if expected == found {
        Ok(())
    } else {
        Err(AnalysisError::LengthMismatch { expected, found })
    }
}

/// Logarithmic mean `Λ(a,b) = (a-b)/(log a - log b)`, `Λ(a,a) = a`.
pub fn log_mean(a: f64, b: f64) -> Result<f64, AnalysisError> {
    if !(a > 0.0 && b > 0.0) || !a.is_finite() || !b.is_finite() {
        return Err(AnalysisError::LogMeanDomain { a, b });
    }
    if (a - b).abs() <= LOG_MEAN_SEAM * (a + b) {
        Ok(log_mean_series(a, b))
    } else {
        Ok(log_mean_direct(a, b))
    }
}

/// `(hi - lo) / log1p((hi - lo)/lo)`; the log of the ratio is taken through
/// `ln_1p` so nearby arguments keep full relative precision.
pub fn log_mean_direct(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == lo {
        return hi;
    }
    let gap = hi - lo;
    gap / (gap / lo).ln_1p()
}

/// `m / (1 + x²/3 + x⁴/5 + x⁶/7)` with `m = (a+b)/2`, `x = (a-b)/(a+b)`,
/// from `Λ = m·x / atanh(x)`.
pub fn log_mean_series(a: f64, b: f64) -> f64 {
    let mean = 0.5 * (a + b);
    let x = (a - b) / (a + b);
    let x2 = x * x;
    mean / (1.0 + x2 * (1.0 / 3.0 + x2 * (1.0 / 5.0 + x2 / 7.0)))
}

/// `I(h) = Σ_{xy} c_xy (h(x)-h(y))(log h(x) - log h(y))`.
pub fn fisher(g: &WeightedMultigraph, h: &[f64]) -> Result<f64, AnalysisError> {
    check_len(g.n(), h.len())?;
    check_positive(h)?;
    Ok(fisher_unchecked(g, h))
}

fn fisher_unchecked(g: &WeightedMultigraph, h: &[f64]) -> f64 {
    g.edges()
        .iter()
        .map(|e| {
            let (x, y) = (h[e.head], h[e.tail]);
            e.conductance * (x - y) * (x.ln() - y.ln())
        })
        .sum()
}

/// `hᵀ L log h` with the assembled Laplacian; the second route to `I(h)`.
pub fn fisher_quadratic(g: &WeightedMultigraph, h: &[f64]) -> Result<f64, AnalysisError> {
    check_len(g.n(), h.len())?;
    check_positive(h)?;
    let hv = DVector::from_column_slice(h);
    let log_h = hv.map(f64::ln);
    Ok(hv.dot(&(g.laplacian() * log_h)))
}

/// Both sides of the logarithmic-mean Cauchy–Schwarz inequality
/// `(wᵀC^{1/2}|Bh|)² ≤ (I(h)/2) Σ_x h(x) Σ_{e∋x} w_e²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogMeanCsCheck {
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs - lhs`.
    pub margin: f64,
}

impl LogMeanCsCheck {
    pub fn holds(&self, rel_tol: f64) -> bool {
        self.lhs <= self.rhs * (1.0 + rel_tol)
    }
}

pub fn log_mean_cs_check(g: &WeightedMultigraph, h: &[f64], w: &[f64]) -> Result<LogMeanCsCheck, AnalysisError> {
    check_len(g.n(), h.len())?;
    check_len(g.m(), w.len())?;
    check_positive(h)?;
    if let Some((index, &value)) = w.iter().enumerate().find(|(_, &x)| !(x >= 0.0) || !x.is_finite()) {
        return Err(AnalysisError::NegativeEntry { index, value });
    }
    let mut flow = 0.0;
    let mut incident = vec![0.0; g.n()];
    for (e, &we) in g.edges().iter().zip(w) {
        flow += we * e.conductance.sqrt() * (h[e.head] - h[e.tail]).abs();
        incident[e.head] += we * we;
        incident[e.tail] += we * we;
    }
    let lhs = flow * flow;
    let mass: f64 = h.iter().zip(&incident).map(|(hx, s)| hx * s).sum();
    let rhs = 0.5 * fisher_unchecked(g, h) * mass;
    Ok(LogMeanCsCheck {
        lhs,
        rhs,
        margin: rhs - lhs,
    })
}

/// `Φ_μ(h) = Σ_x μ(x) h(x) log h(x)`, with `0 log 0 = 0`.
pub fn phi_functional(mu: &[f64], h: &[f64]) -> f64 {
    mu.iter()
        .zip(h)
        .filter(|(_, &hx)| hx > 0.0)
        .map(|(m, &hx)| m * hx * hx.ln())
        .sum()
}

/// `Σ_x ρ(x) log(ρ(x)/μ(x))`, with `0 log 0 = 0`.
pub fn relative_entropy(rho: &[f64], mu: &[f64]) -> f64 {
    rho.iter()
        .zip(mu)
        .filter(|(&r, _)| r > 0.0)
        .map(|(&r, &m)| r * (r / m).ln())
        .sum()
}

/// Time-sampled Fisher information along `h_s = P_s M⁻¹ ρ` and the pieces
/// of its integral over `[0, ∞)`.
///
/// The grid runs geometrically from `s_floor` through `s_min` to the horizon.
/// On `[s_floor, s_min]` the profile comes from a Taylor expansion of
/// `exp(-sM⁻¹L)`, beyond `s_min` from the spectral formula. The sliver
/// `[0, s_floor]` is closed with `Φ(h_0) - Φ(h_{s_floor})` and the tail
/// beyond the horizon with `Φ(h_S)`; both are tiny.
#[derive(Debug, Clone)]
pub struct DissipationTrace {
    /// Quadrature nodes.
    pub times: Vec<f64>,
    /// `I(h_s)` at each node.
    pub fisher: Vec<f64>,
    pub s_floor: f64,
    pub s_min: f64,
    pub horizon: f64,
    /// Simpson integral over `[s_floor, s_min]`.
    pub head_quadrature: f64,
    /// Simpson integral over `[s_min, S]`.
    pub main_quadrature: f64,
    /// `Φ(h_0) - Φ(h_{s_floor})`.
    pub head_remainder: f64,
    /// `Φ(h_S)`.
    pub tail: f64,
    /// Total numeric value of `∫₀^∞ I(h_s) ds`.
    pub integral: f64,
    /// `Σ ρ log(ρ/μ)`.
    pub closed_form: f64,
    /// `Φ(h_{s_min}) - Φ(h_S)`, the exact value of the main integral.
    pub telescoped: f64,
    /// `integral - closed_form`.
    pub discrepancy: f64,
}

impl DissipationTrace {
    pub fn relative_discrepancy(&self) -> f64 {
        self.discrepancy.abs() / self.closed_form.abs().max(f64::MIN_POSITIVE)
    }

    /// `|main_quadrature - telescoped|`.
    pub fn telescoping_gap(&self) -> f64 {
        (self.main_quadrature - self.telescoped).abs()
    }
}

/// Evaluates `h_s = P_s M⁻¹ ρ` robustly across time scales.
struct HeatProfile<'a> {
    ev: &'a HeatKernelEvaluator,
    rho: DVector<f64>,
    h0: DVector<f64>,
    taylor_until: f64,
}

impl HeatProfile<'_> {
    fn at(&self, s: f64) -> Result<Vec<f64>, AnalysisError> {
        let (h, floor) = if s <= self.taylor_until {
            // Far-field values may underflow.
            (self.ev.apply_p_taylor(s, &self.h0)?, f64::MIN_POSITIVE)
        } else {
            // Entries below the roundoff floor of the spectral sum carry no
            // signal; lift them to the floor so logarithms stay finite.
            let h = self.ev.apply_h(s, &self.rho)?;
            let floor = 64.0 * f64::EPSILON * h.amax();
            (h, floor)
        };
        Ok(h.iter().map(|&x| x.max(floor)).collect())
    }
}

/// Integrates `I(h_s)` for `h_s = P_s M⁻¹ ρ` over `s ∈ [0, ∞)` and compares
/// with `Σ ρ log(ρ/μ)`.
pub fn dissipation_trace(
    g: &WeightedMultigraph,
    mu: &[f64],
    rho: &[f64],
    tol: f64,
) -> Result<DissipationTrace, AnalysisError> {
    if !(tol > 0.0) || !tol.is_finite() {
        return Err(AnalysisError::InvalidTolerance(tol));
    }
    check_len(g.n(), mu.len())?;
    check_len(g.n(), rho.len())?;
    check_positive(mu)?;
    check_probability(mu)?;
    check_probability(rho)?;

    let ev = HeatKernelEvaluator::new(g, mu)?;
    dissipation_trace_with(g, &ev, rho, tol)
}

/// [`dissipation_trace`] reusing an evaluator built for `μ`.
pub fn dissipation_trace_with(
    g: &WeightedMultigraph,
    ev: &HeatKernelEvaluator,
    rho: &[f64],
    tol: f64,
) -> Result<DissipationTrace, AnalysisError> {
    let mu: Vec<f64> = ev.mu.iter().copied().collect();
    let s_min = 1e-4 / ev.lambda_max();
    let s_floor = 1e-6 * s_min;
    let horizon = 40.0 / ev.lambda_2();
    let ppd = quadrature::panels_per_decade(tol);
    let head = TimeGrid::geometric(s_floor, s_min, ppd);
    let head_panels = head.panels();
    let grid = head.concat(&TimeGrid::geometric(s_min, horizon, ppd));

    let rho_v = DVector::from_column_slice(rho);
    let h0 = DVector::from_iterator(g.n(), rho.iter().zip(&mu).map(|(r, m)| r / m));
    let profile = HeatProfile {
        ev,
        rho: rho_v,
        h0: h0.clone(),
        taylor_until: s_min,
    };

    let times = grid.nodes();
    let mut fisher_samples = Vec::with_capacity(times.len());
    let mut phi_at_floor = 0.0;
    let mut phi_at_min = 0.0;
    let mut phi_at_horizon = 0.0;
    for (k, &s) in times.iter().enumerate() {
        let h = profile.at(s)?;
        fisher_samples.push(fisher_unchecked(g, &h));
        if k == 0 {
            phi_at_floor = phi_functional(&mu, &h);
        }
        if k == 2 * head_panels {
            phi_at_min = phi_functional(&mu, &h);
        }
        if k + 1 == times.len() {
            phi_at_horizon = phi_functional(&mu, &h);
        }
    }

    let head_quadrature = grid.integrate_panels(&fisher_samples, 0, head_panels);
    let main_quadrature = grid.integrate_panels(&fisher_samples, head_panels, grid.panels());
    let closed_form = relative_entropy(rho, &mu);
    let head_remainder = phi_functional(&mu, h0.as_slice()) - phi_at_floor;
    let tail = phi_at_horizon;
    let integral = head_remainder + head_quadrature + main_quadrature + tail;
    Ok(DissipationTrace {
        times,
        fisher: fisher_samples,
        s_floor,
        s_min,
        horizon,
        head_quadrature,
        main_quadrature,
        head_remainder,
        tail,
        integral,
        closed_form,
        telescoped: phi_at_min - phi_at_horizon,
        discrepancy: integral - closed_form,
    })
}

/// Both sides of `∫₀^∞ wᵀ|C^{1/2} B H_t Bᵀ C^{1/2}| w dt ≤ 2‖w‖² H(μ_w)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatVariation {
    /// Simpson value of the time integral on `[0, T]`.
    pub lhs_integral: f64,
    /// `2‖w‖² H(μ_w)`.
    pub rhs_bound: f64,
    /// Bound on the neglected `[T, ∞)` part of the integral.
    pub tail_bound: f64,
    pub horizon: f64,
    pub panels: usize,
}

impl HeatVariation {
    pub fn holds(&self, tol: f64) -> bool {
        self.lhs_integral <= self.rhs_bound * (1.0 + 1e-6) + tol
    }
}

/// Heat-kernel variation estimate by certified quadrature. The absolute
/// value sits inside the time integral, so each node forms the full
/// `m × m` kernel.
pub fn heat_variation_check(g: &WeightedMultigraph, w: &[f64], tol: f64) -> Result<HeatVariation, AnalysisError> {
    if !(tol > 0.0) || !tol.is_finite() {
        return Err(AnalysisError::InvalidTolerance(tol));
    }
    check_len(g.m(), w.len())?;
    check_positive(w)?;
    let weighting = g.measure_from_weights(w)?;
    let ev = HeatKernelEvaluator::new(g, &weighting.mu)?;

    let v: Vec<f64> = g.edges().iter().zip(w).map(|(e, we)| e.conductance.sqrt() * we).collect();
    let v_sum: f64 = v.iter().sum();
    let weight = v_sum * v_sum * ev.tail_constant();
    let lambda_2 = ev.lambda_2();
    let start = 1e-3 / ev.lambda_max();
    let horizon = ((weight / tol).ln() / lambda_2).max(10.0 * start);
    let grid = TimeGrid::with_uniform_head(start, horizon, quadrature::panels_per_decade(tol), 4);

    let green = ev.green_operator();
    let mut samples = Vec::with_capacity(2 * grid.panels() + 1);
    for t in grid.nodes() {
        let kernel = green.spectral_sum(|l| (-t * l).exp());
        let mut total = 0.0;
        for (f, &vf) in v.iter().enumerate() {
            let col = kernel.column(f);
            let inner: f64 = col.iter().zip(&v).map(|(k, ve)| k.abs() * ve).sum();
            total += vf * inner;
        }
        samples.push(total);
    }
    Ok(HeatVariation {
        lhs_integral: grid.integrate_samples(&samples),
        rhs_bound: 2.0 * weighting.norm_sq() * entropy(&weighting.mu)?,
        tail_bound: weight * (-lambda_2 * horizon).exp(),
        horizon,
        panels: grid.panels(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use std::f64::consts::{E, LN_2};

    fn single_edge() -> WeightedMultigraph {
        WeightedMultigraph::unweighted(2, &[(0, 1)]).unwrap()
    }

    fn triangle() -> WeightedMultigraph {
        WeightedMultigraph::unweighted(3, &[(0, 1), (1, 2), (2, 0)]).unwrap()
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(entropy(&[0.0, 1.0, 0.0]).unwrap(), 0.0);
        assert_relative_eq!(entropy(&[0.25; 4]).unwrap(), 4f64.ln(), max_relative = 1e-15);
        assert_relative_eq!(entropy(&[0.5, 0.5, 0.0]).unwrap(), LN_2, max_relative = 1e-15);
        assert!(matches!(
            entropy(&[1.5, -0.5]),
            Err(AnalysisError::NegativeEntry { index: 1, .. })
        ));
        assert!(matches!(entropy(&[0.5, 0.4]), Err(AnalysisError::NotNormalized { .. })));
    }

    #[test]
    fn log_mean_examples() {
        assert_eq!(log_mean(3.0, 3.0).unwrap(), 3.0);
        assert_relative_eq!(log_mean(E, 1.0).unwrap(), E - 1.0, max_relative = 1e-15);
        assert_relative_eq!(log_mean(1.0, E).unwrap(), E - 1.0, max_relative = 1e-15);
        let a = 1.0 + 1e-13;
        let series_oracle = 0.5 * (a + 1.0) - (a - 1.0) * (a - 1.0) / (12.0 * 0.5 * (a + 1.0));
        assert_relative_eq!(log_mean(a, 1.0).unwrap(), series_oracle, max_relative = 1e-6);
        assert!(matches!(log_mean(0.0, 1.0), Err(AnalysisError::LogMeanDomain { .. })));
        assert!(matches!(log_mean(1.0, -2.0), Err(AnalysisError::LogMeanDomain { .. })));
    }

    #[test]
    fn log_mean_branches_agree_at_the_seam() {
        for base in [1e-8, 0.37, 1.0, 5e3, 1e8] {
            for x in [0.5 * LOG_MEAN_SEAM, LOG_MEAN_SEAM, 2.0 * LOG_MEAN_SEAM, 1e-6] {
                let a = base * (1.0 + x);
                let b = base * (1.0 - x);
                let direct = log_mean_direct(a, b);
                let series = log_mean_series(a, b);
                assert_relative_eq!(direct, series, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn fisher_examples() {
        let g = triangle();
        assert_eq!(fisher(&g, &[2.0; 3]).unwrap(), 0.0);
        assert_relative_eq!(fisher(&single_edge(), &[E, 1.0]).unwrap(), E - 1.0, max_relative = 1e-15);
        // Edges (0,1), (1,2), (2,0) with h = (1, 2, 4).
        let by_hand = 1.0 * 2f64.ln() + 2.0 * 2f64.ln() + 3.0 * 4f64.ln();
        let h = [1.0, 2.0, 4.0];
        assert_relative_eq!(fisher(&g, &h).unwrap(), by_hand, max_relative = 1e-14);
        assert_relative_eq!(fisher_quadratic(&g, &h).unwrap(), by_hand, max_relative = 1e-12);
        assert!(matches!(
            fisher(&g, &[1.0, 0.0, 1.0]),
            Err(AnalysisError::NonPositiveEntry { index: 1, .. })
        ));
    }

    #[test]
    fn log_mean_cs_examples() {
        let g = triangle();
        let constant = log_mean_cs_check(&g, &[3.0; 3], &[1.0, 2.0, 0.5]).unwrap();
        assert_eq!((constant.lhs, constant.rhs), (0.0, 0.0));

        let check = log_mean_cs_check(&single_edge(), &[4.0, 1.0], &[1.0]).unwrap();
        // lhs = (4-1)² ; rhs = ½·(3·ln 4)·(4 + 1)
        assert_relative_eq!(check.lhs, 9.0, max_relative = 1e-15);
        assert_relative_eq!(check.rhs, 0.5 * 3.0 * 4f64.ln() * 5.0, max_relative = 1e-15);
        assert!(check.holds(1e-9));
        assert!(matches!(
            log_mean_cs_check(&g, &[1.0; 3], &[1.0, -1.0, 0.0]),
            Err(AnalysisError::NegativeEntry { index: 1, .. })
        ));
    }

    #[test]
    fn dissipation_of_stationary_start_is_zero() {
        let g = triangle();
        let mu = [0.2, 0.3, 0.5];
        let trace = dissipation_trace(&g, &mu, &mu, 1e-8).unwrap();
        assert_abs_diff_eq!(trace.integral, 0.0, epsilon = 1e-12);
        assert!(trace.fisher.iter().all(|&i| i.abs() < 1e-12));
    }

    #[test]
    fn dissipation_point_mass_examples() {
        let trace = dissipation_trace(&single_edge(), &[0.5, 0.5], &[1.0, 0.0], 1e-8).unwrap();
        assert_relative_eq!(trace.closed_form, LN_2, max_relative = 1e-15);
        assert!(trace.relative_discrepancy() < 1e-6, "{trace:?}");

        let trace = dissipation_trace(&triangle(), &[1.0 / 3.0; 3], &[0.0, 1.0, 0.0], 1e-10).unwrap();
        assert_relative_eq!(trace.closed_form, 3f64.ln(), max_relative = 1e-14);
        assert!(trace.relative_discrepancy() < 1e-6);
        assert!(trace.telescoping_gap() < 1e-8);
        assert!(trace.fisher.iter().all(|&i| i >= 0.0));
    }

    #[test]
    fn dissipation_rejects_zero_mu() {
        assert!(matches!(
            dissipation_trace(&triangle(), &[0.5, 0.5, 0.0], &[1.0, 0.0, 0.0], 1e-6),
            Err(AnalysisError::NonPositiveEntry { index: 2, .. })
        ));
    }

    #[test]
    fn heat_variation_examples() {
        let single = heat_variation_check(&single_edge(), &[1.0], 1e-8).unwrap();
        assert_abs_diff_eq!(single.lhs_integral, 1.0, epsilon = 1e-7);
        assert_relative_eq!(single.rhs_bound, 2.0 * LN_2, max_relative = 1e-15);

        let tri = heat_variation_check(&triangle(), &[1.0; 3], 1e-8).unwrap();
        assert!(tri.lhs_integral <= 6.0 * 3f64.ln());
        assert!(tri.holds(1e-8));

        let tree = WeightedMultigraph::unweighted(5, &[(0, 1), (1, 2), (1, 3), (3, 4)]).unwrap();
        let check = heat_variation_check(&tree, &[1.0; 4], 1e-8).unwrap();
        assert!(check.holds(1e-8), "{check:?}");
        assert!(matches!(
            heat_variation_check(&tree, &[1.0, 0.0, 1.0, 1.0], 1e-8),
            Err(AnalysisError::NonPositiveEntry { index: 1, .. })
        ));
    }
}
