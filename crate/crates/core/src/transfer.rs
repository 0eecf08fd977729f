//! Transfer-current matrix `K = CBL⁺Bᵀ`, its symmetrization
//! `Π = C^{1/2}BL⁺BᵀC^{1/2}`, and the quantities read off them.
//!
//! Column `e` of `K` is the current vector `i_e`: the edge currents produced
//! by injecting the unit flow `b_e` (in at the head, out at the tail in the
//! potential equation `Lφ = b_e`). Signs follow the stored edge orientation.

use nalgebra::{DMatrix, DVector};

use crate::error::LinalgError;
use crate::graph::WeightedMultigraph;
use crate::linalg::{self, DirectSolver, GreenOperator, PowerIteration};

/// `K`, `Π` and their entrywise absolute values.
#[derive(Debug, Clone)]
pub struct CurrentMatrices {
    pub k: DMatrix<f64>,
    pub pi: DMatrix<f64>,
    pub kbar: DMatrix<f64>,
    pub pibar: DMatrix<f64>,
    conductances: DVector<f64>,
}

impl CurrentMatrices {
    /// Builds all four matrices from `BL⁺Bᵀ`.
    pub fn from_green(g: &WeightedMultigraph, green: &DMatrix<f64>) -> Self {
        let c = g.conductances();
        let sqrt_c = c.map(f64::sqrt);
        let m = g.m();
        let k = DMatrix::from_fn(m, m, |f, e| c[f] * green[(f, e)]);
        let pi = DMatrix::from_fn(m, m, |f, e| sqrt_c[f] * green[(f, e)] * sqrt_c[e]);
        let kbar = linalg::entrywise_abs(&k);
        let pibar = linalg::entrywise_abs(&pi);
        Self {
            k,
            pi,
            kbar,
            pibar,
            conductances: c,
        }
    }

    pub fn m(&self) -> usize {
        self.k.nrows()
    }

    /// `i_e`, column `e` of `K`.
    pub fn current_vector(&self, e: usize) -> DVector<f64> {
        self.k.column(e).into_owned()
    }

    /// `R_eff(e) = K(e,e) / c_e`.
    pub fn effective_resistance(&self, e: usize) -> f64 {
        self.k[(e, e)] / self.conductances[e]
    }

    /// `m⁻¹ Σ_{e,f} |K(f,e)| = m⁻¹ Σ_e ‖i_e‖₁`.
    pub fn avg_l1_flow(&self) -> f64 {
        self.kbar.sum() / self.m() as f64
    }

    /// `‖i_e‖₁` for every edge.
    pub fn l1_norms(&self) -> Vec<f64> {
        self.kbar.row_sum().iter().copied().collect()
    }

    /// `‖K̄‖_{2→2}`. With unit conductances `K̄` is symmetric and the power
    /// iteration runs on it directly; otherwise it runs on `K̄ᵀK̄` and the
    /// square root is reported.
    pub fn kbar_norm(&self) -> Result<PowerIteration, LinalgError> {
        let scale = self.kbar.amax().max(1.0);
        if self.k_asymmetry() <= 1e-12 * scale {
            let sym = (&self.kbar + self.kbar.transpose()) * 0.5;
            return linalg::nonneg_spectral_norm(&sym);
        }
        let gram = self.kbar.transpose() * &self.kbar;
        let gram = (&gram + gram.transpose()) * 0.5;
        let mut result = linalg::nonneg_spectral_norm(&gram)?;
        result.value = result.value.sqrt();
        Ok(result)
    }

    pub fn pibar_norm(&self) -> Result<PowerIteration, LinalgError> {
        let sym = (&self.pibar + self.pibar.transpose()) * 0.5;
        linalg::nonneg_spectral_norm(&sym)
    }

    /// `‖Π² - Π‖_max`.
    pub fn projection_defect(&self) -> f64 {
        (&self.pi * &self.pi - &self.pi).amax()
    }

    /// `‖Π - Πᵀ‖_max`.
    pub fn pi_asymmetry(&self) -> f64 {
        (&self.pi - self.pi.transpose()).amax()
    }

    /// `‖K - Kᵀ‖_max`.
    pub fn k_asymmetry(&self) -> f64 {
        (&self.k - self.k.transpose()).amax()
    }

    pub fn pi_trace(&self) -> f64 {
        self.pi.trace()
    }
}

/// `K` and `Π` from one eigendecomposition of the Laplacian.
///
/// The Laplacian is scaled by its own diagonal before diagonalizing; the
/// result does not depend on the scaling, but degree scaling keeps the
/// spectrum compact on graphs with widely spread conductances.
pub fn transfer_current_matrix(g: &WeightedMultigraph) -> Result<CurrentMatrices, LinalgError> {
    let green = GreenOperator::new(g, &degree_scaled_eig(g)?)?;
    Ok(CurrentMatrices::from_green(g, &green.matrix()))
}

/// Eigendecomposition of `D^{-1/2} L D^{-1/2}` with `D` the weighted degree.
pub fn degree_scaled_eig(g: &WeightedMultigraph) -> Result<linalg::SpectralDecomposition, LinalgError> {
    let lap = g.laplacian();
    let degree: Vec<f64> = (0..g.n()).map(|x| lap[(x, x)]).collect();
    linalg::factored_laplacian_eig(g, &degree)
}

/// Green's operator built on the degree-scaled decomposition.
pub fn green_operator(g: &WeightedMultigraph) -> Result<GreenOperator, LinalgError> {
    GreenOperator::new(g, &degree_scaled_eig(g)?)
}

/// `i_e` through the spectral route.
pub fn current_vector(g: &WeightedMultigraph, e: usize) -> Result<DVector<f64>, LinalgError> {
    let green = green_operator(g)?;
    Ok(green.column(e).component_mul(&g.conductances()))
}

/// `i_e = C B L⁺ b_e` through a direct solve of `Lφ = b_e`.
pub fn direct_current_vector(g: &WeightedMultigraph, solver: &DirectSolver, e: usize) -> Result<DVector<f64>, LinalgError> {
    let edge = g.edge(e);
    let mut injection = vec![0.0; g.n()];
    injection[edge.head] += 1.0;
    injection[edge.tail] -= 1.0;
    let phi = solver.solve(&injection)?;
    let drops = g.apply_incidence(phi.as_slice());
    Ok(DVector::from_iterator(
        g.m(),
        drops.iter().zip(g.edges()).map(|(d, f)| f.conductance * d),
    ))
}

/// `b_eᵀ L⁺ b_e` via the spectral sum.
pub fn effective_resistance(g: &WeightedMultigraph, e: usize) -> Result<f64, LinalgError> {
    Ok(green_operator(g)?.entry(e, e))
}

/// Average ℓ₁ length of the unit current across an edge.
pub fn avg_l1_flow(g: &WeightedMultigraph) -> Result<f64, LinalgError> {
    Ok(transfer_current_matrix(g)?.avg_l1_flow())
}
