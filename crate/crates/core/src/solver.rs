//! ADMM solver for
//!
//! ```text
//! min_Z ½‖X − XZ‖²_F + λ1‖Z‖₁ + λ2‖ZW‖₂,₁   s.t. diag(Z) = 0
//! ```
//!
//! using the splitting `U = Z`, `V = UW`. Each sweep updates Z (elementwise
//! shrinkage), U (a Sylvester equation), V (column shrinkage), then the
//! multipliers Θ, Ξ and the penalties α1, α2.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::FeatureMatrix;
use crate::weights::{l21_norm, SpatialWeights};

/// Solver parameters. Defaults: λ1 = 1e-6, λ2 = 1e-4, ρ = 1.1, α = 0.01
/// growing to at most 1e8, 20 sweeps, tolerance 1e-3.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdmmConfig {
    pub lambda1: f64,
    pub lambda2: f64,
    pub rho: f64,
    pub alpha_init: f64,
    pub alpha_max: f64,
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for AdmmConfig {
    fn default() -> Self {
        AdmmConfig { lambda1: 1e-6, lambda2: 1e-4, rho: 1.1, alpha_init: 0.01, alpha_max: 1e8, max_iters: 20, tol: 1e-3 }
    }
}

impl AdmmConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::invalid(format!("solver config: {m}")));
        if !(self.lambda1 >= 0.0 && self.lambda1.is_finite()) {
            return fail("lambda1 must be finite and non-negative");
        }
        if !(self.lambda2 >= 0.0 && self.lambda2.is_finite()) {
            return fail("lambda2 must be finite and non-negative");
        }
        if !(self.rho > 1.0 && self.rho.is_finite()) {
            return fail("rho must exceed 1");
        }
        if !(self.alpha_init > 0.0 && self.alpha_max.is_finite() && self.alpha_init <= self.alpha_max) {
            return fail("need 0 < alpha_init <= alpha_max");
        }
        if self.max_iters == 0 {
            return fail("max_iters must be positive");
        }
        if !(self.tol > 0.0) {
            return fail("tol must be positive");
        }
        Ok(())
    }
}

/// Iterates of one ADMM run.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmmState {
    pub z: DMatrix<f64>,
    pub u: DMatrix<f64>,
    pub v: DMatrix<f64>,
    pub theta: DMatrix<f64>,
    pub xi: DMatrix<f64>,
    pub alpha1: f64,
    pub alpha2: f64,
    pub iteration: usize,
}

impl AdmmState {
    /// All-zero iterates and multipliers with both penalties at `alpha_init`.
    pub fn new(n: usize, config: &AdmmConfig) -> Self {
        let zero = DMatrix::zeros(n, n);
        AdmmState {
            z: zero.clone(),
            u: zero.clone(),
            v: zero.clone(),
            theta: zero.clone(),
            xi: zero,
            alpha1: config.alpha_init,
            alpha2: config.alpha_init,
            iteration: 0,
        }
    }

    pub fn n(&self) -> usize {
        self.z.nrows()
    }

    fn check_finite(&self) -> Result<()> {
        let parts = [("Z", &self.z), ("U", &self.u), ("V", &self.v), ("Theta", &self.theta), ("Xi", &self.xi)];
        for (name, m) in parts {
            if m.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidState(format!("{name} has non-finite entries")));
            }
        }
        Ok(())
    }
}

/// Per-solve diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    /// Objective value after each sweep.
    pub objective_trace: Vec<f64>,
    /// `‖Z − U‖∞` at termination.
    pub primal_residual_z: f64,
    /// `‖V − UW‖∞` at termination.
    pub primal_residual_v: f64,
    pub iterations_run: usize,
    pub converged: bool,
}

#[inline]
fn soft(v: f64, t: f64) -> f64 {
    v.signum() * (v.abs() - t).max(0.0)
}

fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

fn ensure_finite(stage: &'static str, m: &DMatrix<f64>) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::numerical(stage, "non-finite values in the updated iterate"))
    }
}

/// Z-step: elementwise shrinkage of `U − Θ/α1` by `λ1/α1`, then the
/// diagonal is projected to zero.
pub fn update_z(state: &AdmmState, config: &AdmmConfig) -> Result<DMatrix<f64>> {
    if !(state.alpha1 > 0.0) {
        return Err(Error::InvalidState(format!("alpha1 must be positive, got {}", state.alpha1)));
    }
    let thr = config.lambda1 / state.alpha1;
    let inv = 1.0 / state.alpha1;
    let mut z = state.u.zip_map(&state.theta, |u, t| soft(u - t * inv, thr));
    z.fill_diagonal(0.0);
    Ok(z)
}

/// Precomputed spectral data for the U-step Sylvester equation
///
/// ```text
/// (XᵀX + α1·I)·U + α2·U·WWᵀ = XᵀX + α2·V·Wᵀ + α1·Z + Θ + Ξ·Wᵀ
/// ```
///
/// With `XᵀX = QΛQᵀ` and `WWᵀ = PMPᵀ`, the solution is
/// `U = Q·[(QᵀCP)_ij / (Λ_i + α1 + α2·M_j)]·Pᵀ`. Both factorizations depend
/// only on X and W, so they are computed once per solve.
#[derive(Debug, Clone)]
pub struct SylvesterSolver {
    xtx: DMatrix<f64>,
    q: DMatrix<f64>,
    lambda: DVector<f64>,
    p: DMatrix<f64>,
    m: DVector<f64>,
    w: DMatrix<f64>,
    wt: DMatrix<f64>,
}

fn sym_eigen(stage: &'static str, m: DMatrix<f64>) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let eig = SymmetricEigen::try_new(m, f64::EPSILON, 0)
        .ok_or_else(|| Error::numerical(stage, "symmetric eigendecomposition did not converge"))?;
    let vals = eig.eigenvalues.map(|v| v.max(0.0));
    Ok((eig.eigenvectors, vals))
}

impl SylvesterSolver {
    pub fn new(x: &FeatureMatrix, weights: &SpatialWeights) -> Result<Self> {
        let n = x.unit_count();
        if n != weights.len() {
            return Err(Error::DimensionMismatch(format!("X has {n} columns, W is {0}x{0}", weights.len())));
        }
        let xtx = x.data().tr_mul(x.data());
        let (q, lambda) = sym_eigen("U-update (XᵀX)", xtx.clone())?;
        let w = weights.w().clone();
        let wt = w.transpose();
        let (p, m) = sym_eigen("U-update (WWᵀ)", &w * &wt)?;
        Ok(SylvesterSolver { xtx, q, lambda, p, m, w, wt })
    }

    pub fn xtx(&self) -> &DMatrix<f64> {
        &self.xtx
    }

    /// Right-hand side `XᵀX + (α2·V + Ξ)·Wᵀ + α1·Z + Θ`.
    pub fn rhs(&self, state: &AdmmState) -> DMatrix<f64> {
        let mut c = (&state.v * state.alpha2 + &state.xi) * &self.wt;
        c += &self.xtx;
        c += &state.z * state.alpha1;
        c += &state.theta;
        c
    }

    /// Left-hand side operator applied to `u`.
    pub fn apply_lhs(&self, u: &DMatrix<f64>, alpha1: f64, alpha2: f64) -> DMatrix<f64> {
        &self.xtx * u + u * alpha1 + (u * &self.w) * &self.wt * alpha2
    }

    pub fn solve(&self, state: &AdmmState) -> Result<DMatrix<f64>> {
        if !(state.alpha1 > 0.0) || state.alpha2 < 0.0 {
            return Err(Error::InvalidState(format!("penalties must satisfy α1 > 0, α2 ≥ 0 (got {}, {})", state.alpha1, state.alpha2)));
        }
        let c = self.rhs(state);
        let mut t = self.q.tr_mul(&c) * &self.p;
        for j in 0..t.ncols() {
            let mj = state.alpha2 * self.m[j];
            for i in 0..t.nrows() {
                t[(i, j)] /= self.lambda[i] + state.alpha1 + mj;
            }
        }
        let u = &self.q * t * self.p.transpose();
        ensure_finite("U-update", &u)?;
        Ok(u)
    }

    /// Frobenius norm of the Sylvester residual for `u`, together with `‖C‖_F`.
    pub fn residual(&self, state: &AdmmState, u: &DMatrix<f64>) -> (f64, f64) {
        let c = self.rhs(state);
        ((self.apply_lhs(u, state.alpha1, state.alpha2) - &c).norm(), c.norm())
    }
}

/// U-step. Builds the spectral factorizations from scratch; [`solve`] reuses them.
pub fn update_u(state: &AdmmState, x: &FeatureMatrix, weights: &SpatialWeights) -> Result<DMatrix<f64>> {
    state.check_finite()?;
    SylvesterSolver::new(x, weights)?.solve(state)
}

fn shrink_columns(mut n_mat: DMatrix<f64>, thr: f64) -> DMatrix<f64> {
    for mut col in n_mat.column_iter_mut() {
        let norm = col.norm();
        if norm > thr {
            col *= (norm - thr) / norm;
        } else {
            col.fill(0.0);
        }
    }
    n_mat
}

fn v_step(state: &AdmmState, uw: &DMatrix<f64>, config: &AdmmConfig) -> Result<DMatrix<f64>> {
    if !(state.alpha2 > 0.0) {
        return Err(Error::InvalidState(format!("alpha2 must be positive, got {}", state.alpha2)));
    }
    let n_mat = uw - &state.xi / state.alpha2;
    let v = shrink_columns(n_mat, config.lambda2 / state.alpha2);
    ensure_finite("V-update", &v)?;
    Ok(v)
}

/// V-step: with `N = UW − Ξ/α2`, each column of N is shrunk toward zero by
/// `λ2/α2` in Euclidean norm.
pub fn update_v(state: &AdmmState, weights: &SpatialWeights, config: &AdmmConfig) -> Result<DMatrix<f64>> {
    v_step(state, &(&state.u * weights.w()), config)
}

/// Updated multipliers and penalties.
#[derive(Debug, Clone, PartialEq)]
pub struct Multipliers {
    pub theta: DMatrix<f64>,
    pub xi: DMatrix<f64>,
    pub alpha1: f64,
    pub alpha2: f64,
}

fn multiplier_step(state: &AdmmState, uw: &DMatrix<f64>, config: &AdmmConfig) -> Multipliers {
    Multipliers {
        theta: &state.theta + (&state.z - &state.u) * state.alpha1,
        xi: &state.xi + (&state.v - uw) * state.alpha2,
        alpha1: (config.rho * state.alpha1).min(config.alpha_max),
        alpha2: (config.rho * state.alpha2).min(config.alpha_max),
    }
}

/// `Θ += α1(Z − U)`, `Ξ += α2(V − UW)`, then both penalties grow by ρ up to `alpha_max`.
pub fn update_multipliers(state: &AdmmState, weights: &SpatialWeights, config: &AdmmConfig) -> Multipliers {
    multiplier_step(state, &(&state.u * weights.w()), config)
}

/// `½‖X − XZ‖²_F + λ1‖Z‖₁ + λ2‖ZW‖₂,₁`.
pub fn objective(x: &FeatureMatrix, z: &DMatrix<f64>, weights: &SpatialWeights, config: &AdmmConfig) -> f64 {
    let x = x.data();
    let fit = (x - x * z).norm_squared();
    0.5 * fit + config.lambda1 * z.iter().map(|v| v.abs()).sum::<f64>() + config.lambda2 * l21_norm(&(z * weights.w()))
}

/// Runs ADMM sweeps until both primal residuals fall below `tol` or
/// `max_iters` sweeps have run. Returns the final Z (zero diagonal).
pub fn solve(x: &FeatureMatrix, weights: &SpatialWeights, config: &AdmmConfig) -> Result<(DMatrix<f64>, SolveReport)> {
    solve_traced(x, weights, config, |_| {})
}

/// [`solve`] with a callback observing the state after every sweep.
pub fn solve_traced(
    x: &FeatureMatrix,
    weights: &SpatialWeights,
    config: &AdmmConfig,
    mut observe: impl FnMut(&AdmmState),
) -> Result<(DMatrix<f64>, SolveReport)> {
    config.validate()?;
    let n = x.unit_count();
    let sylvester = SylvesterSolver::new(x, weights)?;
    let mut state = AdmmState::new(n, config);
    let mut trace = Vec::with_capacity(config.max_iters);
    let (mut rz, mut rv) = (f64::INFINITY, f64::INFINITY);
    let mut converged = false;

    while state.iteration < config.max_iters {
        state.z = update_z(&state, config)?;
        ensure_finite("Z-update", &state.z)?;
        state.u = sylvester.solve(&state)?;
        let uw = &state.u * weights.w();
        state.v = v_step(&state, &uw, config)?;

        rz = max_abs_diff(&state.z, &state.u);
        rv = max_abs_diff(&state.v, &uw);
        let m = multiplier_step(&state, &uw, config);
        ensure_finite("multiplier update", &m.theta)?;
        ensure_finite("multiplier update", &m.xi)?;
        state.theta = m.theta;
        state.xi = m.xi;
        state.alpha1 = m.alpha1;
        state.alpha2 = m.alpha2;
        state.iteration += 1;

        let obj = objective(x, &state.z, weights, config);
        if !obj.is_finite() {
            return Err(Error::numerical("objective", "objective is not finite"));
        }
        trace.push(obj);
        observe(&state);
        log::debug!("admm sweep {}: objective {obj:.6e}, |Z-U| {rz:.3e}, |V-UW| {rv:.3e}", state.iteration);

        if rz < config.tol && rv < config.tol {
            converged = true;
            break;
        }
    }

    let report = SolveReport {
        objective_trace: trace,
        primal_residual_z: rz,
        primal_residual_v: rv,
        iterations_run: state.iteration,
        converged,
    };
    Ok((state.z, report))
}
