//! Dense symmetric eigensolver, Laplacian pseudoinverse forms, direct
//! potential solves and spectral norms of nonnegative matrices.
//!
//! The pseudoinverse `L⁺` is never formed. Everything that needs it goes
//! through the eigenpairs of the scaled Laplacian `S = M^{-1/2} L M^{-1/2}`:
//!
//! ```text
//! B L⁺ Bᵀ = Σ_{i≥2} λ_i⁻¹ (B M^{-1/2} ψ_i)(B M^{-1/2} ψ_i)ᵀ
//! ```
//!
//! which holds for any positive diagonal `M`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::LinalgError;
use crate::graph::WeightedMultigraph;

/// Eigenvalues below `KERNEL_REL_THRESHOLD * λ_max` count as kernel.
pub const KERNEL_REL_THRESHOLD: f64 = 1e-12;

const MAX_SWEEPS: usize = 64;
const SYMMETRY_TOL: f64 = 1e-12;

/// Eigenpairs of a symmetric matrix built as `S = M^{-1/2} L M^{-1/2}`.
///
/// Eigenvalues ascend; eigenvectors are the orthonormal columns of
/// `eigenvectors`. `scaling` holds the diagonal of `M` (all ones for a plain
/// symmetric decomposition).
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub eigenvalues: DVector<f64>,
    pub eigenvectors: DMatrix<f64>,
    pub scaling: DVector<f64>,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn lambda_max(&self) -> f64 {
        self.eigenvalues[self.dim() - 1]
    }

    /// Number of eigenvalues under the relative kernel threshold.
    pub fn kernel_dimension(&self) -> usize {
        let cutoff = KERNEL_REL_THRESHOLD * self.lambda_max().abs();
        self.eigenvalues.iter().filter(|l| l.abs() <= cutoff).count()
    }

    /// Smallest eigenvalue above the kernel threshold.
    pub fn spectral_gap(&self) -> Option<f64> {
        let cutoff = KERNEL_REL_THRESHOLD * self.lambda_max().abs();
        self.eigenvalues.iter().copied().find(|&l| l > cutoff)
    }

    /// `max_i ‖S ψ_i - λ_i ψ_i‖₂`.
    pub fn max_residual(&self, s: &DMatrix<f64>) -> f64 {
        let sv = s * &self.eigenvectors;
        (0..self.dim())
            .map(|i| (sv.column(i) - self.eigenvectors.column(i) * self.eigenvalues[i]).norm())
            .fold(0.0, f64::max)
    }

    /// `max_ij |ψ_iᵀψ_j - δ_ij|`.
    pub fn orthonormality_error(&self) -> f64 {
        let gram = self.eigenvectors.transpose() * &self.eigenvectors;
        (gram - DMatrix::identity(self.dim(), self.dim())).amax()
    }

    /// `Σ_i λ_i ψ_i ψ_iᵀ`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let mut scaled = self.eigenvectors.clone();
        for (mut col, &l) in scaled.column_iter_mut().zip(self.eigenvalues.iter()) {
            col *= l;
        }
        scaled * self.eigenvectors.transpose()
    }

    /// Columns `M^{-1/2} ψ_i`, the eigenfunctions of `M⁻¹L` normalized in
    /// the `M` inner product.
    pub fn vertex_modes(&self) -> DMatrix<f64> {
        let mut phi = self.eigenvectors.clone();
        for (mut row, &m) in phi.row_iter_mut().zip(self.scaling.iter()) {
            row /= m.sqrt();
        }
        phi
    }
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// Rotations are skipped once an off-diagonal entry is negligible relative to
/// the geometric mean of its two diagonal entries, which keeps small
/// eigenvalues accurate to high relative precision on graded matrices.
pub fn sym_eig(s: &DMatrix<f64>) -> Result<SpectralDecomposition, LinalgError> {
    let n = s.nrows();
    if n != s.ncols() {
        return Err(LinalgError::NotSquare {
            rows: n,
            cols: s.ncols(),
        });
    }
    let scale = s.amax();
    let asymmetry = (s - s.transpose()).amax();
    if asymmetry > SYMMETRY_TOL * scale.max(1.0) {
        return Err(LinalgError::Asymmetric { asymmetry });
    }

    // Row-major working copy; symmetrize away sub-tolerance asymmetry.
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            a[i * n + j] = 0.5 * (s[(i, j)] + s[(j, i)]);
        }
    }
    // Row-major Vᵀ, so rotating eigenvectors touches contiguous rows.
    let mut vt = vec![0.0; n * n];
    for i in 0..n {
        vt[i * n + i] = 1.0;
    }

    let floor = f64::EPSILON * f64::EPSILON * scale;
    let mut converged = n < 2;
    for _sweep in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        let mut rotated = false;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = a[p * n + q];
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let negligible = f64::EPSILON * (app.abs() * aqq.abs()).sqrt();
                if apq.abs() <= negligible.max(floor) {
                    a[p * n + q] = 0.0;
                    a[q * n + p] = 0.0;
                    continue;
                }
                rotated = true;
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + theta.hypot(1.0));
                let c = 1.0 / t.hypot(1.0);
                let sn = t * c;
                rotate(&mut a, n, p, q, c, sn);
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                a[p * n + p] = app - t * apq;
                a[q * n + q] = aqq + t * apq;
                rotate_rows(&mut vt, n, p, q, c, sn);
            }
        }
        if !rotated {
            converged = true;
        }
    }
    if !converged {
        let off_norm = off_diagonal_norm(&a, n);
        return Err(LinalgError::NoConvergence {
            sweeps: MAX_SWEEPS,
            off_norm,
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i * n + i].total_cmp(&a[j * n + j]));
    let eigenvalues = DVector::from_iterator(n, order.iter().map(|&i| a[i * n + i]));
    let mut eigenvectors = DMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        for row in 0..n {
            eigenvectors[(row, col)] = vt[i * n + row];
        }
    }
    Ok(SpectralDecomposition {
        eigenvalues,
        eigenvectors,
        scaling: DVector::from_element(n, 1.0),
    })
}

/// `A ← Jᵀ A J` for the plane rotation on `(p, q)`; diagonal and `(p, q)`
/// entries are fixed up by the caller.
fn rotate(a: &mut [f64], n: usize, p: usize, q: usize, c: f64, s: f64) {
    for k in 0..n {
        if k == p || k == q {
            continue;
        }
        let akp = a[k * n + p];
        let akq = a[k * n + q];
        let new_p = c * akp - s * akq;
        let new_q = s * akp + c * akq;
        a[k * n + p] = new_p;
        a[k * n + q] = new_q;
        a[p * n + k] = new_p;
        a[q * n + k] = new_q;
    }
}

fn rotate_rows(vt: &mut [f64], n: usize, p: usize, q: usize, c: f64, s: f64) {
    for k in 0..n {
        let vp = vt[p * n + k];
        let vq = vt[q * n + k];
        vt[p * n + k] = c * vp - s * vq;
        vt[q * n + k] = s * vp + c * vq;
    }
}

fn off_diagonal_norm(a: &[f64], n: usize) -> f64 {
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                sum += a[i * n + j] * a[i * n + j];
            }
        }
    }
    sum.sqrt()
}

/// Eigendecomposition of `S = FᵀF` by one-sided (Hestenes) Jacobi on the
/// columns of `F`. Eigenvalues come out as squared column norms, so small
/// ones keep their relative accuracy even when `‖S‖/λ` is huge.
pub fn gram_eig(f: &DMatrix<f64>) -> Result<SpectralDecomposition, LinalgError> {
    let (rows, n) = f.shape();
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| f.column(j).iter().copied().collect()).collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            e
        })
        .collect();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let mut norms: Vec<f64> = cols.iter().map(|c| dot(c, c)).collect();
    let scale = norms.iter().copied().fold(0.0, f64::max);
    let floor = f64::EPSILON * f64::EPSILON * scale;
    let tol = f64::EPSILON * (rows.max(1) as f64).sqrt();

    let mut converged = n < 2;
    for _sweep in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        let mut rotated = false;
        for p in 0..n.saturating_sub(1) {
            for q in p + 1..n {
                let gamma = dot(&cols[p], &cols[q]);
                let (alpha, beta) = (norms[p], norms[q]);
                if gamma.abs() <= (tol * (alpha * beta).sqrt()).max(floor) {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + zeta.hypot(1.0));
                let c = 1.0 / t.hypot(1.0);
                let s = c * t;
                let (lo, hi) = cols.split_at_mut(q);
                rotate_pair(&mut lo[p], &mut hi[0], c, s);
                let (lo, hi) = v.split_at_mut(q);
                rotate_pair(&mut lo[p], &mut hi[0], c, s);
                norms[p] = dot(&cols[p], &cols[p]);
                norms[q] = dot(&cols[q], &cols[q]);
            }
        }
        converged = !rotated;
    }
    if !converged {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += 2.0 * dot(&cols[p], &cols[q]).powi(2);
            }
        }
        return Err(LinalgError::NoConvergence {
            sweeps: MAX_SWEEPS,
            off_norm: off.sqrt(),
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[i].total_cmp(&norms[j]));
    let eigenvalues = DVector::from_iterator(n, order.iter().map(|&i| norms[i]));
    let eigenvectors = DMatrix::from_fn(n, n, |row, col| v[order[col]][row]);
    Ok(SpectralDecomposition {
        eigenvalues,
        eigenvectors,
        scaling: DVector::from_element(n, 1.0),
    })
}

fn rotate_pair(a: &mut [f64], b: &mut [f64], c: f64, s: f64) {
    for (x, y) in a.iter_mut().zip(b.iter_mut()) {
        let (xp, yq) = (*x, *y);
        *x = c * xp - s * yq;
        *y = s * xp + c * yq;
    }
}

/// `C^{1/2} B M^{-1/2}`, the factor with `FᵀF = M^{-1/2} L M^{-1/2}`.
pub fn scaled_incidence_factor(g: &WeightedMultigraph, scaling: &[f64]) -> Result<DMatrix<f64>, LinalgError> {
    check_scaling(g, scaling)?;
    let mut f = DMatrix::zeros(g.m(), g.n());
    for (e, edge) in g.edges().iter().enumerate() {
        let w = edge.conductance.sqrt();
        f[(e, edge.head)] = w / scaling[edge.head].sqrt();
        f[(e, edge.tail)] = -w / scaling[edge.tail].sqrt();
    }
    Ok(f)
}

/// [`laplacian_eig`] through one-sided Jacobi on the incidence factor.
pub fn factored_laplacian_eig(g: &WeightedMultigraph, scaling: &[f64]) -> Result<SpectralDecomposition, LinalgError> {
    let f = scaled_incidence_factor(g, scaling)?;
    let mut dec = gram_eig(&f)?;
    dec.scaling = DVector::from_column_slice(scaling);
    Ok(dec)
}

fn check_scaling(g: &WeightedMultigraph, scaling: &[f64]) -> Result<(), LinalgError> {
    if scaling.len() != g.n() {
        return Err(LinalgError::DimensionMismatch {
            expected: g.n(),
            found: scaling.len(),
        });
    }
    if scaling.iter().any(|&m| !(m > 0.0) || !m.is_finite()) {
        return Err(LinalgError::NonPositiveScaling);
    }
    Ok(())
}

/// `S = M^{-1/2} L M^{-1/2}` for the positive diagonal `scaling`.
pub fn scaled_laplacian(g: &WeightedMultigraph, scaling: &[f64]) -> Result<DMatrix<f64>, LinalgError> {
    check_scaling(g, scaling)?;
    let inv_sqrt: Vec<f64> = scaling.iter().map(|m| 1.0 / m.sqrt()).collect();
    let mut s = g.laplacian();
    for i in 0..g.n() {
        for j in 0..g.n() {
            s[(i, j)] *= inv_sqrt[i] * inv_sqrt[j];
        }
    }
    Ok(s)
}

/// Eigendecomposition of the Laplacian scaled by `M = diag(scaling)`.
pub fn laplacian_eig(g: &WeightedMultigraph, scaling: &[f64]) -> Result<SpectralDecomposition, LinalgError> {
    let s = scaled_laplacian(g, scaling)?;
    let mut dec = sym_eig(&s)?;
    dec.scaling = DVector::from_column_slice(scaling);
    Ok(dec)
}

/// Eigendecomposition of the plain Laplacian (`M = I`).
pub fn unscaled_laplacian_eig(g: &WeightedMultigraph) -> Result<SpectralDecomposition, LinalgError> {
    laplacian_eig(g, &vec![1.0; g.n()])
}

/// The edge-space factors of `BL⁺Bᵀ`: columns `B M^{-1/2} ψ_i` for the
/// non-kernel eigenpairs, with their eigenvalues.
#[derive(Debug, Clone)]
pub struct GreenOperator {
    /// `m × (n-1)`.
    pub modes: DMatrix<f64>,
    /// Eigenvalues `λ_2 … λ_n`.
    pub eigenvalues: DVector<f64>,
}

impl GreenOperator {
    pub fn new(g: &WeightedMultigraph, dec: &SpectralDecomposition) -> Result<Self, LinalgError> {
        let kernel = dec.kernel_dimension();
        if kernel != 1 {
            return Err(LinalgError::KernelDimension(kernel));
        }
        if dec.dim() != g.n() {
            return Err(LinalgError::DimensionMismatch {
                expected: g.n(),
                found: dec.dim(),
            });
        }
        let phi = dec.vertex_modes();
        let n = g.n();
        let mut modes = DMatrix::zeros(g.m(), n - 1);
        for (row, e) in g.edges().iter().enumerate() {
            for i in 1..n {
                modes[(row, i - 1)] = phi[(e.head, i)] - phi[(e.tail, i)];
            }
        }
        let eigenvalues = dec.eigenvalues.rows(1, n - 1).into_owned();
        Ok(Self { modes, eigenvalues })
    }

    /// `Σ_i f(λ_i) u_i u_iᵀ` over the non-kernel modes.
    pub fn spectral_sum(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let weights: Vec<f64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        self.weighted_gram(&weights)
    }

    /// `Σ_i weights_i u_i u_iᵀ`.
    pub fn weighted_gram(&self, weights: &[f64]) -> DMatrix<f64> {
        let mut scaled = self.modes.clone();
        for (mut col, &wt) in scaled.column_iter_mut().zip(weights) {
            col *= wt;
        }
        scaled * self.modes.transpose()
    }

    /// The full `BL⁺Bᵀ`.
    pub fn matrix(&self) -> DMatrix<f64> {
        self.spectral_sum(|l| 1.0 / l)
    }

    /// Column `e` of `BL⁺Bᵀ`.
    pub fn column(&self, e: usize) -> DVector<f64> {
        let coeffs = DVector::from_iterator(
            self.eigenvalues.len(),
            self.modes.row(e).iter().zip(self.eigenvalues.iter()).map(|(u, l)| u / l),
        );
        &self.modes * coeffs
    }

    /// `b_eᵀ L⁺ b_f`.
    pub fn entry(&self, e: usize, f: usize) -> f64 {
        self.modes
            .row(e)
            .iter()
            .zip(self.modes.row(f).iter())
            .zip(self.eigenvalues.iter())
            .map(|((a, b), l)| a * b / l)
            .sum()
    }
}

/// `BL⁺Bᵀ` from a decomposition of the scaled Laplacian.
pub fn projected_green(g: &WeightedMultigraph, dec: &SpectralDecomposition) -> Result<DMatrix<f64>, LinalgError> {
    Ok(GreenOperator::new(g, dec)?.matrix())
}

/// Grounded Cholesky factorization of the Laplacian, the direct route for
/// `Lφ = injection`.
#[derive(Debug, Clone)]
pub struct DirectSolver {
    n: usize,
    factor: Cholesky<f64, Dyn>,
}

impl DirectSolver {
    /// Factors `L` with the last vertex grounded.
    pub fn new(g: &WeightedMultigraph) -> Result<Self, LinalgError> {
        let n = g.n();
        let reduced = g.laplacian().view((0, 0), (n - 1, n - 1)).into_owned();
        let factor = Cholesky::new(reduced).ok_or(LinalgError::Singular)?;
        Ok(Self { n, factor })
    }

    /// Zero-mean potential with `Lφ = injection`.
    pub fn solve(&self, injection: &[f64]) -> Result<DVector<f64>, LinalgError> {
        if injection.len() != self.n {
            return Err(LinalgError::DimensionMismatch {
                expected: self.n,
                found: injection.len(),
            });
        }
        let sum: f64 = injection.iter().sum();
        let size: f64 = injection.iter().map(|x| x.abs()).sum();
        if sum.abs() > 1e-12 * size.max(1.0) {
            return Err(LinalgError::UnbalancedInjection { sum });
        }
        let rhs = DVector::from_column_slice(&injection[..self.n - 1]);
        let reduced = self.factor.solve(&rhs);
        let mut phi = DVector::zeros(self.n);
        phi.rows_mut(0, self.n - 1).copy_from(&reduced);
        let mean = phi.mean();
        phi.add_scalar_mut(-mean);
        Ok(phi)
    }
}

/// Solves `Lφ = injection` directly, normalized to `Σφ = 0`.
pub fn solve_potential(g: &WeightedMultigraph, injection: &[f64]) -> Result<DVector<f64>, LinalgError> {
    DirectSolver::new(g)?.solve(injection)
}

/// Result of a power iteration.
#[derive(Debug, Clone)]
pub struct PowerIteration {
    pub value: f64,
    /// Unit-norm iterate at termination.
    pub vector: DVector<f64>,
    pub iterations: usize,
    pub converged: bool,
}

pub const POWER_MAX_ITERATIONS: usize = 1_000_000;
pub const POWER_REL_TOL: f64 = 1e-11;

/// Largest eigenvalue (= spectral norm) of a symmetric entrywise
/// nonnegative matrix, by power iteration from the normalized all-ones
/// vector.
///
/// Stops when successive Rayleigh quotients agree to `1e-11` relative. If the
/// diagonal has a zero entry the iteration runs on `A + τI` so that a
/// bipartite `-ρ` eigenvalue cannot stall it; the reported value is always the
/// Rayleigh quotient of `A` itself.
pub fn nonneg_spectral_norm(a: &DMatrix<f64>) -> Result<PowerIteration, LinalgError> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(LinalgError::NotSquare { rows: n, cols: a.ncols() });
    }
    let scale = a.amax();
    // Column-major storage: flat index k is (k % n, k / n).
    if let Some((k, &value)) = a.iter().enumerate().find(|(_, &v)| v < 0.0) {
        return Err(LinalgError::NegativeEntry {
            row: k % n,
            col: k / n,
            value,
        });
    }
    let asymmetry = (a - a.transpose()).amax();
    if asymmetry > SYMMETRY_TOL * scale.max(1.0) {
        return Err(LinalgError::Asymmetric { asymmetry });
    }
    let mut x = DVector::from_element(n, 1.0 / (n as f64).sqrt());
    if scale == 0.0 {
        return Ok(PowerIteration {
            value: 0.0,
            vector: x,
            iterations: 0,
            converged: true,
        });
    }
    let min_diag = a.diagonal().min();
    let shift = if min_diag > 0.0 { 0.0 } else { 0.5 * max_row_sum(a) };

    let mut ax = a * &x;
    let mut rayleigh = x.dot(&ax);
    for iteration in 1..=POWER_MAX_ITERATIONS {
        let y = &ax + &x * shift;
        let norm = y.norm();
        if norm == 0.0 {
            return Ok(PowerIteration {
                value: 0.0,
                vector: x,
                iterations: iteration,
                converged: true,
            });
        }
        x = y / norm;
        ax = a * &x;
        let next = x.dot(&ax);
        let done = (next - rayleigh).abs() <= POWER_REL_TOL * next.abs();
        rayleigh = next;
        if done {
            return Ok(PowerIteration {
                value: rayleigh,
                vector: x,
                iterations: iteration,
                converged: true,
            });
        }
    }
    Ok(PowerIteration {
        value: rayleigh,
        vector: x,
        iterations: POWER_MAX_ITERATIONS,
        converged: false,
    })
}

pub fn max_row_sum(a: &DMatrix<f64>) -> f64 {
    a.row_iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// Entrywise absolute value.
pub fn entrywise_abs(a: &DMatrix<f64>) -> DMatrix<f64> {
    a.map(f64::abs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn triangle() -> WeightedMultigraph {
        WeightedMultigraph::unweighted(3, &[(0, 1), (1, 2), (2, 0)]).unwrap()
    }

    /// Roots of the characteristic polynomial of a symmetric 2×2 matrix.
    fn eig2(a: f64, b: f64, d: f64) -> (f64, f64) {
        let mean = 0.5 * (a + d);
        let r = (0.25 * (a - d) * (a - d) + b * b).sqrt();
        (mean - r, mean + r)
    }

    #[test]
    fn identity_spectrum() {
        let dec = sym_eig(&DMatrix::identity(2, 2)).unwrap();
        assert_eq!(dec.eigenvalues.as_slice(), &[1.0, 1.0]);
        assert!(dec.orthonormality_error() < 1e-15);
    }

    #[test]
    fn single_edge_scaled_by_half() {
        let g = WeightedMultigraph::unweighted(2, &[(0, 1)]).unwrap();
        let dec = laplacian_eig(&g, &[0.5, 0.5]).unwrap();
        let s = scaled_laplacian(&g, &[0.5, 0.5]).unwrap();
        let (lo, hi) = eig2(s[(0, 0)], s[(0, 1)], s[(1, 1)]);
        assert_abs_diff_eq!(lo, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(hi, 4.0, epsilon = 1e-15);
        assert_abs_diff_eq!(dec.eigenvalues[0], lo, epsilon = 1e-14);
        assert_abs_diff_eq!(dec.eigenvalues[1], hi, epsilon = 1e-14);
    }

    #[test]
    fn factored_matches_two_sided() {
        let g = WeightedMultigraph::from_triples(
            5,
            &[(0, 1, 2.0), (1, 2, 0.5), (2, 3, 1.0), (3, 4, 4.0), (4, 0, 0.1), (1, 3, 1.5), (0, 1, 0.7)],
        )
        .unwrap();
        let scaling = [0.1, 0.3, 0.2, 0.25, 0.15];
        let two = laplacian_eig(&g, &scaling).unwrap();
        let one = factored_laplacian_eig(&g, &scaling).unwrap();
        assert!((&two.eigenvalues - &one.eigenvalues).amax() < 1e-12 * two.lambda_max());
        let s = scaled_laplacian(&g, &scaling).unwrap();
        assert!(one.max_residual(&s) < 1e-10 * one.lambda_max());
        assert!(one.orthonormality_error() < 1e-12);
        assert_eq!(one.kernel_dimension(), 1);
    }

    #[test]
    fn factored_small_eigenvalue_is_relatively_accurate() {
        // Path 0-1-2 with conductances a, b: λ² - 2(a+b)λ + 3ab = 0, so the
        // small root is 3ab / λ_max with λ_max = a + b + √(a² - ab + b²).
        let (a, b) = (1e6, 1e-6);
        let g = WeightedMultigraph::from_triples(3, &[(0, 1, a), (1, 2, b)]).unwrap();
        let lam_max = a + b + (a * a - a * b + b * b).sqrt();
        let lam_2 = 3.0 * a * b / lam_max;
        let dec = factored_laplacian_eig(&g, &[1.0; 3]).unwrap();
        assert!((dec.eigenvalues[1] - lam_2).abs() <= 1e-13 * lam_2, "{}", dec.eigenvalues[1]);
        assert!((dec.eigenvalues[2] - lam_max).abs() <= 1e-13 * lam_max);
    }

    #[test]
    fn triangle_spectrum() {
        // det(L - x I) = -x (x - 3)^2 for the triangle.
        let l = triangle().laplacian();
        let charpoly = |x: f64| (l.clone() - DMatrix::identity(3, 3) * x).determinant();
        assert_abs_diff_eq!(charpoly(0.0), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(charpoly(3.0), 0.0, epsilon = 1e-12);
        let dec = unscaled_laplacian_eig(&triangle()).unwrap();
        let expected = [0.0, 3.0, 3.0];
        for (got, want) in dec.eigenvalues.iter().zip(expected) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-13);
        }
        assert_eq!(dec.kernel_dimension(), 1);
    }

    #[test]
    fn rejects_bad_input() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(matches!(sym_eig(&a), Err(LinalgError::Asymmetric { .. })));
        assert!(matches!(
            sym_eig(&DMatrix::zeros(2, 3)),
            Err(LinalgError::NotSquare { .. })
        ));
    }

    #[test]
    fn kernel_vector_is_parallel_to_sqrt_scaling() {
        let g = WeightedMultigraph::from_triples(4, &[(0, 1, 2.0), (1, 2, 0.5), (2, 3, 3.0), (3, 0, 1.0)])
            .unwrap();
        let scaling = [0.1, 0.2, 0.3, 0.4];
        let dec = laplacian_eig(&g, &scaling).unwrap();
        let psi1 = dec.eigenvectors.column(0);
        let mut reference = DVector::from_iterator(4, scaling.iter().map(|m| m.sqrt()));
        reference.normalize_mut();
        assert_abs_diff_eq!(psi1.dot(&reference).abs(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn green_examples() {
        let g = WeightedMultigraph::unweighted(2, &[(0, 1)]).unwrap();
        let dec = unscaled_laplacian_eig(&g).unwrap();
        let green = projected_green(&g, &dec).unwrap();
        assert_abs_diff_eq!(green[(0, 0)], 1.0, epsilon = 1e-14);

        let g = triangle();
        let dec = unscaled_laplacian_eig(&g).unwrap();
        let green = projected_green(&g, &dec).unwrap();
        // 1 ∥ (1 + 1) = 2/3
        for e in 0..3 {
            assert_abs_diff_eq!(green[(e, e)], 2.0 / 3.0, epsilon = 1e-13);
        }

        let tree = WeightedMultigraph::unweighted(5, &[(0, 1), (1, 2), (1, 3), (3, 4)]).unwrap();
        let dec = unscaled_laplacian_eig(&tree).unwrap();
        let green = projected_green(&tree, &dec).unwrap();
        for e in 0..4 {
            assert_abs_diff_eq!(green[(e, e)], 1.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn green_requires_simple_kernel() {
        let g = triangle();
        let mut dec = unscaled_laplacian_eig(&g).unwrap();
        dec.eigenvalues[1] = 0.0;
        assert!(matches!(
            projected_green(&g, &dec),
            Err(LinalgError::KernelDimension(2))
        ));
    }

    #[test]
    fn potential_examples() {
        let g = WeightedMultigraph::unweighted(2, &[(0, 1)]).unwrap();
        let phi = solve_potential(&g, &[-1.0, 1.0]).unwrap();
        assert_abs_diff_eq!(phi[0], -0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(phi[1], 0.5, epsilon = 1e-15);

        let path = WeightedMultigraph::unweighted(3, &[(0, 1), (1, 2)]).unwrap();
        let phi = solve_potential(&path, &[-1.0, 0.0, 1.0]).unwrap();
        for (got, want) in phi.iter().zip([-1.0, 0.0, 1.0]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-14);
        }

        let g = triangle();
        let phi = solve_potential(&g, &[-1.0, 1.0, 0.0]).unwrap();
        let mut currents: Vec<f64> = g.apply_incidence(phi.as_slice()).iter().map(|x| x.abs()).collect();
        currents.sort_by(f64::total_cmp);
        assert_abs_diff_eq!(currents[0], 1.0 / 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(currents[1], 1.0 / 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(currents[2], 2.0 / 3.0, epsilon = 1e-14);
    }

    #[test]
    fn potential_rejects_unbalanced_injection() {
        assert!(matches!(
            solve_potential(&triangle(), &[1.0, 0.0, 0.0]),
            Err(LinalgError::UnbalancedInjection { .. })
        ));
    }

    #[test]
    fn power_iteration_examples() {
        let swap = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        assert_abs_diff_eq!(nonneg_spectral_norm(&swap).unwrap().value, 1.0, epsilon = 1e-12);

        let ones = DMatrix::from_element(3, 3, 1.0);
        assert_abs_diff_eq!(nonneg_spectral_norm(&ones).unwrap().value, 3.0, epsilon = 1e-12);

        // 4-cycle transfer currents: 3/4 on the diagonal, 1/4 elsewhere.
        let kbar = DMatrix::from_fn(4, 4, |i, j| if i == j { 0.75 } else { 0.25 });
        let full = sym_eig(&kbar).unwrap();
        let result = nonneg_spectral_norm(&kbar).unwrap();
        assert_abs_diff_eq!(full.lambda_max(), 1.5, epsilon = 1e-13);
        assert_abs_diff_eq!(result.value, 1.5, epsilon = 1e-12);
        assert!(result.converged);
    }

    #[test]
    fn power_iteration_handles_bipartite_structure() {
        // Complete bipartite K_{2,3} adjacency: eigenvalues ±√6 and zeros.
        let a = DMatrix::from_fn(5, 5, |i, j| if (i < 2) != (j < 2) { 1.0 } else { 0.0 });
        let result = nonneg_spectral_norm(&a).unwrap();
        assert_abs_diff_eq!(result.value, 6f64.sqrt(), epsilon = 1e-9);
    }

    #[test]
    fn power_iteration_rejects_negative_entries() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]);
        assert!(matches!(
            nonneg_spectral_norm(&a),
            Err(LinalgError::NegativeEntry { .. })
        ));
    }
}
