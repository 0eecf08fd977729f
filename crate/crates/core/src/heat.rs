//! Heat kernels of the continuous-time walk with rates `c_xy / μ(x)`.
//!
//! With `M = diag(μ)` and `S = M^{-1/2} L M^{-1/2} = Σ λ_i ψ_i ψ_iᵀ`:
//!
//! ```text
//! P_t = M^{-1/2} e^{-tS} M^{1/2}        (row-stochastic)
//! H_t = P_t M⁻¹ = M^{-1/2} e^{-tS} M^{-1/2}   (symmetric)
//! ```
//!
//! Both are evaluated spectrally from one decomposition.

use nalgebra::{DMatrix, DVector};

use crate::error::AnalysisError;
use crate::graph::WeightedMultigraph;
use crate::linalg::{self, GreenOperator, SpectralDecomposition};
use crate::quadrature::{self, TimeGrid};

/// Spectral evaluator for `P_t` and `H_t` against a positive measure `μ`.
#[derive(Debug, Clone)]
pub struct HeatKernelEvaluator {
    pub decomposition: SpectralDecomposition,
    pub mu: DVector<f64>,
    /// `M^{-1/2} ψ_i` as columns.
    modes: DMatrix<f64>,
    green: GreenOperator,
    /// `M⁻¹L`, used for short-time Taylor evaluation.
    generator: DMatrix<f64>,
}

impl HeatKernelEvaluator {
    pub fn new(g: &WeightedMultigraph, mu: &[f64]) -> Result<Self, AnalysisError> {
        if mu.len() != g.n() {
            return Err(AnalysisError::LengthMismatch {
                expected: g.n(),
                found: mu.len(),
            });
        }
        if let Some((index, &value)) = mu.iter().enumerate().find(|(_, &m)| !(m > 0.0) || !m.is_finite()) {
            return Err(AnalysisError::NonPositiveEntry { index, value });
        }
        let decomposition = linalg::factored_laplacian_eig(g, mu)?;
        let modes = decomposition.vertex_modes();
        let green = GreenOperator::new(g, &decomposition)?;
        let mut generator = g.laplacian();
        for (mut row, &m) in generator.row_iter_mut().zip(mu) {
            row /= m;
        }
        Ok(Self {
            decomposition,
            mu: DVector::from_column_slice(mu),
            modes,
            green,
            generator,
        })
    }

    pub fn n(&self) -> usize {
        self.mu.len()
    }

    /// `λ_2`, the spectral gap of `S`.
    pub fn lambda_2(&self) -> f64 {
        self.green.eigenvalues[0]
    }

    pub fn lambda_max(&self) -> f64 {
        self.decomposition.lambda_max()
    }

    pub fn green_operator(&self) -> &GreenOperator {
        &self.green
    }

    fn decay(&self, t: f64) -> Vec<f64> {
        self.decomposition.eigenvalues.iter().map(|&l| (-t * l).exp()).collect()
    }

    /// `H_t = Σ_i e^{-tλ_i} (M^{-1/2}ψ_i)(M^{-1/2}ψ_i)ᵀ`.
    pub fn heat_h(&self, t: f64) -> Result<DMatrix<f64>, AnalysisError> {
        check_time(t)?;
        let decay = self.decay(t);
        let mut scaled = self.modes.clone();
        for (mut col, d) in scaled.column_iter_mut().zip(decay) {
            col *= d;
        }
        Ok(scaled * self.modes.transpose())
    }

    /// `P_t = H_t M`.
    pub fn heat_p(&self, t: f64) -> Result<DMatrix<f64>, AnalysisError> {
        let mut p = self.heat_h(t)?;
        for (mut col, &m) in p.column_iter_mut().zip(self.mu.iter()) {
            col *= m;
        }
        Ok(p)
    }

    /// `H_t ρ` without forming `H_t`.
    pub fn apply_h(&self, t: f64, rho: &DVector<f64>) -> Result<DVector<f64>, AnalysisError> {
        check_time(t)?;
        let coeffs = self.modes.tr_mul(rho);
        let decay = self.decay(t);
        let damped = DVector::from_iterator(coeffs.len(), coeffs.iter().zip(decay).map(|(c, d)| c * d));
        Ok(&self.modes * damped)
    }

    /// `exp(-t M⁻¹L) h₀` by its Taylor series; accurate for
    /// `t·‖M⁻¹L‖_∞ ≪ 1`, where exact structural zeros of the series keep
    /// tiny far-field values free of cancellation.
    pub fn apply_p_taylor(&self, t: f64, h0: &DVector<f64>) -> Result<DVector<f64>, AnalysisError> {
        check_time(t)?;
        let n = self.n();
        let mut sum = h0.clone();
        let mut term = h0.clone();
        for k in 1..=(n + 60) {
            term = &self.generator * &term * (-t / k as f64);
            sum += &term;
            if k + 1 >= n
                && term
                    .iter()
                    .zip(sum.iter())
                    .all(|(dt, s)| dt.abs() <= 1e-17 * s.abs() || *dt == 0.0)
            {
                break;
            }
        }
        Ok(sum)
    }

    /// `‖M⁻¹L‖_∞`, the largest absolute row sum of the generator.
    pub fn generator_norm(&self) -> f64 {
        linalg::max_row_sum(&self.generator)
    }

    /// `B H_t Bᵀ`.
    pub fn edge_kernel(&self, t: f64) -> Result<DMatrix<f64>, AnalysisError> {
        check_time(t)?;
        Ok(self.green.spectral_sum(|l| (-t * l).exp()))
    }

    /// `max |(Bφ₁)(Bφ₁)ᵀ|` for the kernel mode `φ₁ = M^{-1/2}ψ₁`; zero up to
    /// roundoff because `φ₁` is constant.
    pub fn kernel_edge_term(&self, g: &WeightedMultigraph) -> f64 {
        let phi1: Vec<f64> = self.modes.column(0).iter().copied().collect();
        let u = g.apply_incidence(&phi1);
        u.iter().fold(0.0f64, |acc, x| acc.max(x.abs())).powi(2)
    }

    /// `Q = max_e Σ_{i≥2} u_i(e)² / λ_2`: every entry of
    /// `∫_T^∞ B H_t Bᵀ dt` is at most `Q e^{-λ_2 T}`.
    pub fn tail_constant(&self) -> f64 {
        let max_row = self
            .green
            .modes
            .row_iter()
            .map(|r| r.norm_squared())
            .fold(0.0, f64::max);
        max_row / self.lambda_2()
    }
}

fn check_time(t: f64) -> Result<(), AnalysisError> {
    if t.is_finite() && t >= 0.0 {
        Ok(())
    } else {
        Err(AnalysisError::InvalidTime(t))
    }
}

pub fn heat_p(ev: &HeatKernelEvaluator, t: f64) -> Result<DMatrix<f64>, AnalysisError> {
    ev.heat_p(t)
}

pub fn heat_h(ev: &HeatKernelEvaluator, t: f64) -> Result<DMatrix<f64>, AnalysisError> {
    ev.heat_h(t)
}

/// Quadrature approximation of `∫₀^∞ B H_t Bᵀ dt`.
#[derive(Debug, Clone)]
pub struct GreenQuadrature {
    pub matrix: DMatrix<f64>,
    /// Integration horizon `T`.
    pub horizon: f64,
    /// Certified bound on every entry of the neglected `[T, ∞)` tail.
    pub tail_bound: f64,
    pub panels: usize,
}

/// Composite Simpson on `[0, T]` with a uniform head on `[0, 10⁻³/λ_n]` and
/// a geometric grid beyond, `T = ln(Q/tol)/λ_2`.
///
/// The rule is linear, so the weighted sum of node evaluations
/// `Σ_k w_k B H_{t_k} Bᵀ` collapses to `Σ_i (Σ_k w_k e^{-t_k λ_i}) u_i u_iᵀ`;
/// that is how it is assembled.
pub fn green_time_quadrature(ev: &HeatKernelEvaluator, tol: f64) -> Result<GreenQuadrature, AnalysisError> {
    if !(tol > 0.0) || !tol.is_finite() {
        return Err(AnalysisError::InvalidTolerance(tol));
    }
    let lambda_2 = ev.lambda_2();
    let start = 1e-3 / ev.lambda_max();
    let q = ev.tail_constant();
    let horizon = ((q / tol).ln() / lambda_2).max(10.0 * start);
    let grid = TimeGrid::with_uniform_head(start, horizon, quadrature::panels_per_decade(tol), 4);
    let nodes = grid.nodes();
    let weights = grid.weights();
    let mode_weights: Vec<f64> = ev
        .green
        .eigenvalues
        .iter()
        .map(|&l| nodes.iter().zip(&weights).map(|(t, w)| w * (-t * l).exp()).sum())
        .collect();
    Ok(GreenQuadrature {
        matrix: ev.green.weighted_gram(&mode_weights),
        horizon,
        tail_bound: q * (-lambda_2 * horizon).exp(),
        panels: grid.panels(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn single_edge() -> WeightedMultigraph {
        WeightedMultigraph::unweighted(2, &[(0, 1)]).unwrap()
    }

    fn triangle() -> WeightedMultigraph {
        WeightedMultigraph::unweighted(3, &[(0, 1), (1, 2), (2, 0)]).unwrap()
    }

    #[test]
    fn p_at_zero_is_identity_and_h_at_zero_is_inverse_measure() {
        let g = triangle();
        let mu = [0.2, 0.3, 0.5];
        let ev = HeatKernelEvaluator::new(&g, &mu).unwrap();
        assert!((ev.heat_p(0.0).unwrap() - DMatrix::identity(3, 3)).amax() < 1e-14);
        let h0 = ev.heat_h(0.0).unwrap();
        for x in 0..3 {
            assert_abs_diff_eq!(h0[(x, x)], 1.0 / mu[x], epsilon = 1e-13);
        }
    }

    #[test]
    fn single_edge_closed_form() {
        let ev = HeatKernelEvaluator::new(&single_edge(), &[0.5, 0.5]).unwrap();
        for t in [0.01, 0.3, 2.0] {
            let p = ev.heat_p(t).unwrap();
            let decay = (-4.0 * t).exp();
            assert_abs_diff_eq!(p[(0, 0)], 0.5 * (1.0 + decay), epsilon = 1e-14);
            assert_abs_diff_eq!(p[(0, 1)], 0.5 * (1.0 - decay), epsilon = 1e-14);
            assert_abs_diff_eq!(p[(1, 0)], 0.5 * (1.0 - decay), epsilon = 1e-14);
            let k = ev.edge_kernel(t).unwrap();
            assert_abs_diff_eq!(k[(0, 0)], 4.0 * decay, epsilon = 1e-13);
        }
    }

    #[test]
    fn long_time_rows_approach_stationary_measure() {
        let g = triangle();
        let mu = [0.2, 0.3, 0.5];
        let ev = HeatKernelEvaluator::new(&g, &mu).unwrap();
        let p = ev.heat_p(50.0 / ev.lambda_2()).unwrap();
        for x in 0..3 {
            for y in 0..3 {
                assert_abs_diff_eq!(p[(x, y)], mu[y], epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn semigroup_identity_on_triangle() {
        let g = triangle();
        let mu = [1.0 / 3.0; 3];
        let ev = HeatKernelEvaluator::new(&g, &mu).unwrap();
        let m = DMatrix::from_diagonal(&DVector::from_column_slice(&mu));
        let composed = ev.heat_h(0.3).unwrap() * m * ev.heat_h(0.7).unwrap();
        assert!((composed - ev.heat_h(1.0).unwrap()).amax() < 1e-9);
    }

    #[test]
    fn taylor_matches_spectral_at_short_times() {
        let g = triangle();
        let ev = HeatKernelEvaluator::new(&g, &[0.2, 0.3, 0.5]).unwrap();
        let h0 = DVector::from_vec(vec![5.0, 0.0, 0.0]);
        for t in [1e-6, 1e-4, 1e-2] {
            let taylor = ev.apply_p_taylor(t, &h0).unwrap();
            let spectral = ev.apply_h(t, &DVector::from_vec(vec![1.0, 0.0, 0.0])).unwrap();
            assert!((taylor - spectral).amax() < 1e-12);
        }
    }

    #[test]
    fn invalid_inputs() {
        let g = triangle();
        assert!(matches!(
            HeatKernelEvaluator::new(&g, &[0.5, 0.5, 0.0]),
            Err(AnalysisError::NonPositiveEntry { index: 2, .. })
        ));
        let ev = HeatKernelEvaluator::new(&g, &[0.2, 0.3, 0.5]).unwrap();
        assert!(matches!(ev.heat_p(-1.0), Err(AnalysisError::InvalidTime(_))));
        assert!(matches!(ev.heat_h(f64::NAN), Err(AnalysisError::InvalidTime(_))));
        assert!(matches!(
            green_time_quadrature(&ev, 0.0),
            Err(AnalysisError::InvalidTolerance(_))
        ));
    }

    #[test]
    fn green_quadrature_examples() {
        let ev = HeatKernelEvaluator::new(&single_edge(), &[0.5, 0.5]).unwrap();
        let quad = green_time_quadrature(&ev, 1e-6).unwrap();
        assert_abs_diff_eq!(quad.matrix[(0, 0)], 1.0, epsilon = 1e-6);

        let ev = HeatKernelEvaluator::new(&triangle(), &[1.0 / 3.0; 3]).unwrap();
        let quad = green_time_quadrature(&ev, 1e-6).unwrap();
        for e in 0..3 {
            assert_abs_diff_eq!(quad.matrix[(e, e)], 2.0 / 3.0, epsilon = 1e-6);
        }
    }

    #[test]
    fn kernel_term_vanishes() {
        let g = WeightedMultigraph::from_triples(4, &[(0, 1, 2.0), (1, 2, 0.5), (2, 3, 3.0), (3, 0, 1.0)]).unwrap();
        let ev = HeatKernelEvaluator::new(&g, &[0.1, 0.2, 0.3, 0.4]).unwrap();
        assert!(ev.kernel_edge_term(&g) < 1e-10);
    }
}
