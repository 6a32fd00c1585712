//! Parametric prediction models and atom construction.
//!
//! A [`Model`] maps an input x and parameters θ to an output y = f(x, θ).
//! The one-point information matrix ("atom") at x is
//! m(x) = D_θf(x, θ̄)ᵀ ς⁻¹ D_θf(x, θ̄) for a reference parameter θ̄ and noise
//! covariance ς. Parameter Jacobians default to central finite differences.
//!
//! Two case-study models ship with the crate:
//! - [`benzene_cstr`]: chlorination of benzene in a continuously stirred tank
//!   reactor, an implicit algebraic model solved by damped Newton iteration,
//! - [`williams_otto`]: the Williams–Otto reactor, a six-state ODE integrated
//!   by classical fixed-step RK4, with the measurement time as part of x.

use crate::design_space::DesignSpace;
use crate::matcone::{is_pd, mat_pow_neg, SymMatrix};
use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("model evaluation failed at x = {x:?}: {reason}")]
    Evaluation { x: Vec<f64>, reason: String },
    #[error("Newton solver failed: {0}")]
    Newton(String),
    #[error("ODE integration failed: {0}")]
    Integration(String),
    #[error("invalid model configuration: {0}")]
    Config(String),
    #[error("atom construction failed at point indices {indices:?}; first error: {first}")]
    BuildAtoms { indices: Vec<usize>, first: String },
}

/// A parametric prediction model f: X × Θ → Y.
///
/// `predict` must be deterministic for fixed (x, θ). An analytic parameter
/// Jacobian is optional; when absent, central finite differences are used.
pub trait Model: Send + Sync {
    fn d_theta(&self) -> usize;
    fn d_y(&self) -> usize;
    fn d_x(&self) -> usize;
    fn predict(&self, x: &[f64], theta: &[f64]) -> Result<Vec<f64>, ModelError>;
    /// Analytic d_y×d_theta Jacobian w.r.t. θ, if available.
    fn jacobian_theta(&self, _x: &[f64], _theta: &[f64]) -> Option<Result<DMatrix<f64>, ModelError>> {
        None
    }
}

/// Measurement-noise covariance ς (PD, dimension d_y).
#[derive(Debug, Clone)]
pub struct NoiseSpec {
    pub covariance: SymMatrix,
}

impl NoiseSpec {
    pub fn new(covariance: SymMatrix) -> Result<Self, ModelError> {
        if !is_pd(&covariance, covariance.pd_tol()) {
            return Err(ModelError::Config("noise covariance must be PD".into()));
        }
        Ok(NoiseSpec { covariance })
    }

    pub fn identity(d_y: usize) -> Self {
        NoiseSpec { covariance: SymMatrix::identity(d_y) }
    }
}

/// Default relative finite-difference step for parameter Jacobians.
pub const DEFAULT_H_REL: f64 = 1e-6;

/// Central-difference parameter Jacobian; column j uses step
/// h_j = h_rel · max(1, |θ_j|).
pub fn jacobian_theta_fd(
    model: &dyn Model,
    x: &[f64],
    theta: &[f64],
    h_rel: f64,
) -> Result<DMatrix<f64>, ModelError> {
    let (dy, dt) = (model.d_y(), model.d_theta());
    let mut jac = DMatrix::zeros(dy, dt);
    for j in 0..dt {
        let h = h_rel * theta[j].abs().max(1.0);
        let mut tp = theta.to_vec();
        let mut tm = theta.to_vec();
        tp[j] += h;
        tm[j] -= h;
        let fp = model.predict(x, &tp)?;
        let fm = model.predict(x, &tm)?;
        for i in 0..dy {
            let v = (fp[i] - fm[i]) / (2.0 * h);
            if !v.is_finite() {
                return Err(ModelError::Evaluation {
                    x: x.to_vec(),
                    reason: format!("non-finite derivative in column {j}"),
                });
            }
            jac[(i, j)] = v;
        }
    }
    Ok(jac)
}

/// One-point information matrix m(x) = Jᵀ ς⁻¹ J, symmetrized.
pub fn atom(
    model: &dyn Model,
    noise: &NoiseSpec,
    x: &[f64],
    theta_bar: &[f64],
) -> Result<SymMatrix, ModelError> {
    let jac = match model.jacobian_theta(x, theta_bar) {
        Some(j) => j?,
        None => jacobian_theta_fd(model, x, theta_bar, DEFAULT_H_REL)?,
    };
    let sigma_inv = mat_pow_neg(&noise.covariance, 1.0)
        .map_err(|e| ModelError::Config(format!("noise covariance not invertible: {e}")))?;
    Ok(SymMatrix::from_dmatrix(
        &(jac.transpose() * sigma_inv.to_dmatrix() * jac),
    ))
}

/// Builds a design space by evaluating the model atom at every point.
/// Individual failures are collected and reported with their indices.
pub fn build_atoms(
    model: &dyn Model,
    noise: &NoiseSpec,
    points: Vec<Vec<f64>>,
    theta_bar: &[f64],
) -> Result<DesignSpace, ModelError> {
    let mut atoms = Vec::with_capacity(points.len());
    let mut failed = Vec::new();
    let mut first_err = String::new();
    for (i, p) in points.iter().enumerate() {
        match atom(model, noise, p, theta_bar) {
            Ok(a) => atoms.push(a),
            Err(e) => {
                if failed.is_empty() {
                    first_err = e.to_string();
                }
                failed.push(i);
                atoms.push(SymMatrix::zeros(model.d_theta()));
            }
        }
    }
    if !failed.is_empty() {
        return Err(ModelError::BuildAtoms { indices: failed, first: first_err });
    }
    DesignSpace::new(points, atoms, None)
        .map_err(|e| ModelError::Config(format!("invalid design space: {e}")))
}

// ---------------------------------------------------------------------------
// Implicit algebraic models (Newton solver)
// ---------------------------------------------------------------------------

type ResidualFn = Box<dyn Fn(&[f64], &[f64], &[f64]) -> Vec<f64> + Send + Sync>;
type OutputFn = Box<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// A model defined implicitly by g(s, x, θ) = 0 with output f = h(s).
pub struct ImplicitAlgebraicModel {
    pub d_theta: usize,
    pub d_y: usize,
    pub d_x: usize,
    pub d_s: usize,
    /// Residual g(s, x, θ).
    pub residual: ResidualFn,
    /// Output map h(s).
    pub output: OutputFn,
    pub s_init: Vec<f64>,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
}

pub const DEFAULT_NEWTON_TOL: f64 = 1e-10;
pub const DEFAULT_NEWTON_MAX_ITER: usize = 50;

/// Damped Newton iteration on s ↦ g(s, x, θ) starting from the model's
/// initial guess: full steps halved while the residual norm would increase;
/// converged when ‖g‖_∞ ≤ newton_tol.
pub fn newton_solve(
    model: &ImplicitAlgebraicModel,
    x: &[f64],
    theta: &[f64],
) -> Result<Vec<f64>, ModelError> {
    let n = model.d_s;
    let mut s = model.s_init.clone();
    let norm_inf = |v: &[f64]| v.iter().fold(0.0_f64, |a, b| a.max(b.abs()));
    let mut g = (model.residual)(&s, x, theta);
    for _ in 0..model.newton_max_iter {
        let gnorm = norm_inf(&g);
        if !gnorm.is_finite() {
            return Err(ModelError::Newton("non-finite residual".into()));
        }
        if gnorm <= model.newton_tol {
            return Ok(s);
        }
        // Finite-difference residual Jacobian w.r.t. s.
        let mut jac = DMatrix::zeros(n, n);
        for j in 0..n {
            let h = 1e-7 * s[j].abs().max(1.0);
            let mut sp = s.clone();
            let mut sm = s.clone();
            sp[j] += h;
            sm[j] -= h;
            let gp = (model.residual)(&sp, x, theta);
            let gm = (model.residual)(&sm, x, theta);
            for i in 0..n {
                jac[(i, j)] = (gp[i] - gm[i]) / (2.0 * h);
            }
        }
        let rhs = DVector::from_column_slice(&g);
        let step = jac
            .lu()
            .solve(&rhs)
            .ok_or_else(|| ModelError::Newton("singular residual Jacobian".into()))?;
        // Damping: halve until the residual no longer increases.
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let cand: Vec<f64> = (0..n).map(|i| s[i] - lambda * step[i]).collect();
            let gc = (model.residual)(&cand, x, theta);
            if norm_inf(&gc).is_finite() && norm_inf(&gc) < gnorm {
                s = cand;
                g = gc;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            return Err(ModelError::Newton(format!(
                "line search stalled at residual {gnorm:.3e}"
            )));
        }
    }
    let gnorm = norm_inf(&g);
    if gnorm <= model.newton_tol {
        Ok(s)
    } else {
        Err(ModelError::Newton(format!(
            "no convergence within {} iterations (residual {gnorm:.3e})",
            model.newton_max_iter
        )))
    }
}

impl Model for ImplicitAlgebraicModel {
    fn d_theta(&self) -> usize {
        self.d_theta
    }
    fn d_y(&self) -> usize {
        self.d_y
    }
    fn d_x(&self) -> usize {
        self.d_x
    }
    fn predict(&self, x: &[f64], theta: &[f64]) -> Result<Vec<f64>, ModelError> {
        let s = newton_solve(self, x, theta)?;
        Ok((self.output)(&s))
    }
}

// ---------------------------------------------------------------------------
// Dynamic models (fixed-step RK4)
// ---------------------------------------------------------------------------

type RhsFn = Box<dyn Fn(&[f64], &[f64], &[f64]) -> Vec<f64> + Send + Sync>;

/// A model defined by ṡ = g(s, x, θ), s(0) = s0, with output f = h(s(t_meas))
/// and the measurement time t_meas read from component `t_index` of x.
pub struct OdeModel {
    pub d_theta: usize,
    pub d_y: usize,
    pub d_x: usize,
    pub rhs: RhsFn,
    pub output: OutputFn,
    pub s0: Vec<f64>,
    /// Index into x holding t_meas.
    pub t_index: usize,
    /// Fixed RK4 steps per unit time.
    pub steps_per_unit: f64,
}

pub const DEFAULT_STEPS_PER_UNIT: f64 = 100.0;

/// Classical fixed-step RK4 from t = 0 to t_end.
pub fn rk4_integrate(
    model: &OdeModel,
    x: &[f64],
    theta: &[f64],
    t_end: f64,
) -> Result<Vec<f64>, ModelError> {
    assert!(t_end >= 0.0, "t_end must be nonnegative");
    let mut s = model.s0.clone();
    if t_end == 0.0 {
        return Ok(s);
    }
    let n_steps = (t_end * model.steps_per_unit).ceil().max(1.0) as usize;
    let h = t_end / n_steps as f64;
    let n = s.len();
    let axpy = |s: &[f64], k: &[f64], c: f64| -> Vec<f64> {
        (0..n).map(|i| s[i] + c * k[i]).collect()
    };
    for step in 0..n_steps {
        let k1 = (model.rhs)(&s, x, theta);
        let k2 = (model.rhs)(&axpy(&s, &k1, 0.5 * h), x, theta);
        let k3 = (model.rhs)(&axpy(&s, &k2, 0.5 * h), x, theta);
        let k4 = (model.rhs)(&axpy(&s, &k3, h), x, theta);
        for i in 0..n {
            s[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if s.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::Integration(format!(
                "state blew up at t = {:.4}",
                (step + 1) as f64 * h
            )));
        }
    }
    Ok(s)
}

impl Model for OdeModel {
    fn d_theta(&self) -> usize {
        self.d_theta
    }
    fn d_y(&self) -> usize {
        self.d_y
    }
    fn d_x(&self) -> usize {
        self.d_x
    }
    fn predict(&self, x: &[f64], theta: &[f64]) -> Result<Vec<f64>, ModelError> {
        let t_end = x[self.t_index];
        let s = rk4_integrate(self, x, theta, t_end)?;
        Ok((self.output)(&s))
    }
}

// ---------------------------------------------------------------------------
// Built-in models
// ---------------------------------------------------------------------------

/// Linear model f(x, θ) = xᵀθ (scalar output, J(x) = xᵀ); useful for toy
/// instances whose atoms are the rank-one matrices x xᵀ.
pub struct LinearModel {
    pub dim: usize,
}

impl Model for LinearModel {
    fn d_theta(&self) -> usize {
        self.dim
    }
    fn d_y(&self) -> usize {
        1
    }
    fn d_x(&self) -> usize {
        self.dim
    }
    fn predict(&self, x: &[f64], theta: &[f64]) -> Result<Vec<f64>, ModelError> {
        Ok(vec![x.iter().zip(theta).map(|(a, b)| a * b).sum()])
    }
    fn jacobian_theta(&self, x: &[f64], _theta: &[f64]) -> Option<Result<DMatrix<f64>, ModelError>> {
        Some(Ok(DMatrix::from_row_slice(1, self.dim, x)))
    }
}

/// Constants for the benzene-chlorination CSTR model.
///
/// The molar volumes are not part of the published case-study description;
/// the defaults below are standard literature values (L/mol at 20 °C) for
/// benzene, monochlorobenzene, and 1,2-dichlorobenzene, and are documented
/// placeholders: supply project-specific values through the config to
/// reproduce published tables exactly.
#[derive(Debug, Clone)]
pub struct BenzeneConstants {
    pub v_a: f64,
    pub v_b: f64,
    pub v_c: f64,
}

impl Default for BenzeneConstants {
    fn default() -> Self {
        BenzeneConstants { v_a: 0.08941, v_b: 0.10217, v_c: 0.11306 }
    }
}

/// Benzene-chlorination CSTR: implicit algebraic model with state
/// s = (l_A, l_B, l_C, F_o), input x = (F_f, V), parameters θ = (k_1, k_2),
/// output (l_A, l_B, l_C). Residual:
///
/// g_1 = F_f − s_1 s_4 − θ_1 s_1 V / d(s)
/// g_2 = −s_2 s_4 + θ_1 s_1 V / d(s) − θ_2 s_2 V / d(s)
/// g_3 = −s_3 s_4 + θ_2 s_2 V / d(s)
/// g_4 = s_1 + s_2 + s_3 − 1,        d(s) = v_A s_1 + v_B s_2 + v_C s_3.
pub fn benzene_cstr(constants: BenzeneConstants) -> ImplicitAlgebraicModel {
    let BenzeneConstants { v_a, v_b, v_c } = constants;
    ImplicitAlgebraicModel {
        d_theta: 2,
        d_y: 3,
        d_x: 2,
        d_s: 4,
        residual: Box::new(move |s, x, theta| {
            let (ff, v) = (x[0], x[1]);
            let d = v_a * s[0] + v_b * s[1] + v_c * s[2];
            let r1 = theta[0] * s[0] * v / d;
            let r2 = theta[1] * s[1] * v / d;
            vec![
                ff - s[0] * s[3] - r1,
                -s[1] * s[3] + r1 - r2,
                -s[2] * s[3] + r2,
                s[0] + s[1] + s[2] - 1.0,
            ]
        }),
        output: Box::new(|s| vec![s[0], s[1], s[2]]),
        s_init: vec![0.5, 0.4, 0.1, 65.0],
        newton_tol: DEFAULT_NEWTON_TOL,
        newton_max_iter: DEFAULT_NEWTON_MAX_ITER,
    }
}

/// Constants for the Williams–Otto model.
///
/// F_fA, μ, η are fixed by the case study (overridable); the Arrhenius
/// kinetics (a_i, b_i) are cited from an external source there. The defaults
/// below are documented placeholders: the classical activation temperatures
/// b_i with prefactors a_i rescaled so that k_i(T) = O(1) on the 650–660
/// temperature range of this mass-normalized formulation (the classical
/// prefactors assume reactor-scale total masses and make the fixed-step
/// integration blow up here). Supply source values through the config for
/// quantitative reproduction.
#[derive(Debug, Clone)]
pub struct WilliamsOttoConstants {
    pub f_fa: f64,
    pub mu: f64,
    pub eta: f64,
    pub a: [f64; 3],
    pub b: [f64; 3],
    pub steps_per_unit: f64,
}

impl Default for WilliamsOttoConstants {
    fn default() -> Self {
        WilliamsOttoConstants {
            f_fa: 10.0,
            mu: 129.5,
            eta: 0.2,
            a: [2.0e4, 3.0e5, 2.0e7],
            b: [6666.7, 8333.3, 11111.0],
            steps_per_unit: DEFAULT_STEPS_PER_UNIT,
        }
    }
}

/// Williams–Otto reactor: six-state ODE with input x = (F_fB, T, t_meas),
/// parameters θ = (a_1, b_1, a_2, b_2, a_3, b_3) via
/// k_i(T, θ) = a_i exp(−b_i/T), initial state (10, 1, 0, 0, 0, 0), and output
/// (m_P, m_E, m_G) = (s_4, s_5, s_6) at t_meas.
pub fn williams_otto(constants: WilliamsOttoConstants) -> OdeModel {
    let WilliamsOttoConstants { f_fa, mu, eta, steps_per_unit, .. } = constants;
    OdeModel {
        d_theta: 6,
        d_y: 3,
        d_x: 3,
        rhs: Box::new(move |s, x, theta| {
            let (f_fb, t) = (x[0], x[1]);
            let k1 = theta[0] * (-theta[1] / t).exp();
            let k2 = theta[2] * (-theta[3] / t).exp();
            let k3 = theta[4] * (-theta[5] / t).exp();
            let d: f64 = s.iter().sum();
            let out = (1.0 - eta) * mu - mu; // net outflow coefficient
            let r1 = k1 * s[0] * s[1] / d;
            let r2 = k2 * s[1] * s[2] / d;
            let r3 = k3 * s[2] * s[4] / d;
            vec![
                f_fa + out * s[0] / d - r1,
                f_fb + out * s[1] / d - r1 - r2,
                out * s[2] / d + 2.0 * r1 - 2.0 * r2 - r3,
                out * s[3] / d + 2.0 * r2,
                0.1 * (1.0 - eta) * mu * s[3] / d - mu * s[4] / d + r2 - 0.5 * r3,
                -mu * s[5] / d + 1.5 * r3,
            ]
        }),
        output: Box::new(|s| vec![s[3], s[4], s[5]]),
        s0: vec![10.0, 1.0, 0.0, 0.0, 0.0, 0.0],
        t_index: 2,
        steps_per_unit,
    }
}

/// Equidistant grid from per-dimension (min, max, count) specs, row-major
/// with the last dimension varying fastest.
pub fn grid_points(dims: &[(f64, f64, usize)]) -> Result<Vec<Vec<f64>>, ModelError> {
    for (i, &(min, max, count)) in dims.iter().enumerate() {
        if count == 0 {
            return Err(ModelError::Config(format!("grid dimension {i} has count = 0")));
        }
        if count > 1 && !(max > min) {
            return Err(ModelError::Config(format!(
                "grid dimension {i} needs max > min for count > 1"
            )));
        }
    }
    let mut points = vec![Vec::new()];
    for &(min, max, count) in dims {
        let axis: Vec<f64> = if count == 1 {
            vec![min]
        } else {
            (0..count)
                .map(|i| min + (max - min) * i as f64 / (count - 1) as f64)
                .collect()
        };
        let mut next = Vec::with_capacity(points.len() * count);
        for p in &points {
            for &v in &axis {
                let mut q = p.clone();
                q.push(v);
                next.push(q);
            }
        }
        points = next;
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fd_jacobian_linear_model_is_exact() {
        let m = LinearModel { dim: 3 };
        let x = [1.0, -2.0, 0.5];
        let theta = [0.3, 0.7, -1.1];
        let j = jacobian_theta_fd(&m, &x, &theta, DEFAULT_H_REL).unwrap();
        for i in 0..3 {
            assert!((j[(0, i)] - x[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn fd_jacobian_hand_example() {
        // f(θ) = (θ₁², θ₁θ₂) at θ = (1, 2) → [[2, 0], [2, 1]].
        struct Quad;
        impl Model for Quad {
            fn d_theta(&self) -> usize {
                2
            }
            fn d_y(&self) -> usize {
                2
            }
            fn d_x(&self) -> usize {
                1
            }
            fn predict(&self, _x: &[f64], th: &[f64]) -> Result<Vec<f64>, ModelError> {
                Ok(vec![th[0] * th[0], th[0] * th[1]])
            }
        }
        let j = jacobian_theta_fd(&Quad, &[0.0], &[1.0, 2.0], DEFAULT_H_REL).unwrap();
        let want = [[2.0, 0.0], [2.0, 1.0]];
        for i in 0..2 {
            for k in 0..2 {
                assert!((j[(i, k)] - want[i][k]).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn atom_trivial_cases() {
        let m = LinearModel { dim: 2 };
        let noise = NoiseSpec::identity(1);
        // J = e₁ row, ς = 1 → e₁e₁ᵀ.
        let a = atom(&m, &noise, &[1.0, 0.0], &[0.0, 0.0]).unwrap();
        assert!(a.add_scaled(&SymMatrix::outer(&[1.0, 0.0]), -1.0).frobenius_norm() < 1e-12);
    }

    #[test]
    fn newton_scalar_root() {
        // g(s) = s² − 4 from s = 3 → 2.
        let m = ImplicitAlgebraicModel {
            d_theta: 1,
            d_y: 1,
            d_x: 1,
            d_s: 1,
            residual: Box::new(|s, _x, _th| vec![s[0] * s[0] - 4.0]),
            output: Box::new(|s| vec![s[0]]),
            s_init: vec![3.0],
            newton_tol: DEFAULT_NEWTON_TOL,
            newton_max_iter: DEFAULT_NEWTON_MAX_ITER,
        };
        let s = newton_solve(&m, &[0.0], &[0.0]).unwrap();
        assert!((s[0] - 2.0).abs() < 1e-10);
    }

    #[test]
    fn newton_linear_in_one_iteration() {
        let m = ImplicitAlgebraicModel {
            d_theta: 1,
            d_y: 1,
            d_x: 1,
            d_s: 2,
            residual: Box::new(|s, _x, _th| vec![2.0 * s[0] - 4.0, 3.0 * s[1] + 3.0]),
            output: Box::new(|s| s.to_vec()),
            s_init: vec![0.0, 0.0],
            newton_tol: DEFAULT_NEWTON_TOL,
            newton_max_iter: 2, // linear residual: one Newton step suffices
        };
        let s = newton_solve(&m, &[0.0], &[0.0]).unwrap();
        assert!((s[0] - 2.0).abs() < 1e-9 && (s[1] + 1.0).abs() < 1e-9);
    }

    #[test]
    fn benzene_molar_fractions_sum_to_one() {
        let m = benzene_cstr(BenzeneConstants::default());
        let s = newton_solve(&m, &[60.0, 20.0], &[0.4, 0.0555]).unwrap();
        assert!((s[0] + s[1] + s[2] - 1.0).abs() < 1e-10, "s = {s:?}");
    }

    #[test]
    fn benzene_root_independent_of_init() {
        let base = benzene_cstr(BenzeneConstants::default());
        for corner in [[60.0, 10.0], [60.0, 20.0], [70.0, 10.0], [70.0, 20.0]] {
            let s1 = newton_solve(&base, &corner, &[0.4, 0.0555]).unwrap();
            let mut other = benzene_cstr(BenzeneConstants::default());
            other.s_init = vec![0.3, 0.3, 0.4, 62.0];
            let s2 = newton_solve(&other, &corner, &[0.4, 0.0555]).unwrap();
            for i in 0..4 {
                assert!((s1[i] - s2[i]).abs() < 1e-8, "corner {corner:?}: {s1:?} vs {s2:?}");
            }
        }
    }

    #[test]
    fn rk4_closed_forms() {
        let make = |c: f64| OdeModel {
            d_theta: 1,
            d_y: 1,
            d_x: 1,
            rhs: Box::new(move |s, _x, _th| vec![c * s[0]]),
            output: Box::new(|s| vec![s[0]]),
            s0: vec![1.0],
            t_index: 0,
            steps_per_unit: DEFAULT_STEPS_PER_UNIT,
        };
        // ṡ = 0 → constant.
        let zero = make(0.0);
        assert_eq!(rk4_integrate(&zero, &[5.0], &[0.0], 5.0).unwrap()[0], 1.0);
        // ṡ = s → e; ṡ = −2s → e⁻².
        let grow = make(1.0);
        assert!((rk4_integrate(&grow, &[1.0], &[0.0], 1.0).unwrap()[0] - 1.0f64.exp()).abs() < 1e-8);
        let decay = make(-2.0);
        assert!((rk4_integrate(&decay, &[1.0], &[0.0], 1.0).unwrap()[0] - (-2.0f64).exp()).abs() < 1e-8);
    }

    #[test]
    fn rk4_step_halving_convergence() {
        // Halving the step changes the Williams–Otto output only marginally.
        let coarse = williams_otto(WilliamsOttoConstants::default());
        let mut fine_consts = WilliamsOttoConstants::default();
        fine_consts.steps_per_unit *= 2.0;
        let fine = williams_otto(fine_consts);
        let theta = WilliamsOttoConstants::default();
        let th = [
            theta.a[0], theta.b[0], theta.a[1], theta.b[1], theta.a[2], theta.b[2],
        ];
        let x = [21.0, 655.0, 10.0];
        let yc = coarse.predict(&x, &th).unwrap();
        let yf = fine.predict(&x, &th).unwrap();
        for i in 0..3 {
            let denom = yf[i].abs().max(1.0);
            assert!((yc[i] - yf[i]).abs() / denom <= 1e-6, "{yc:?} vs {yf:?}");
        }
    }

    #[test]
    fn case_study_atoms_are_psd() {
        use crate::matcone::eig_sym;
        let noise = NoiseSpec::identity(3);
        let benz = benzene_cstr(BenzeneConstants::default());
        for x in grid_points(&[(60.0, 70.0, 3), (10.0, 20.0, 3)]).unwrap() {
            let a = atom(&benz, &noise, &x, &[0.4, 0.0555]).unwrap();
            assert!(eig_sym(&a).unwrap().lambda_min() >= -1e-12 * a.frobenius_norm().max(1.0));
        }
        let wo = williams_otto(WilliamsOttoConstants::default());
        let c = WilliamsOttoConstants::default();
        let th = [c.a[0], c.b[0], c.a[1], c.b[1], c.a[2], c.b[2]];
        for x in grid_points(&[(20.0, 23.0, 2), (650.0, 660.0, 2), (1.0, 20.0, 2)]).unwrap() {
            let a = atom(&wo, &noise, &x, &th).unwrap();
            let s = eig_sym(&a).unwrap();
            assert!(s.lambda_min() >= -1e-9 * s.lambda_max().abs().max(1.0));
        }
    }

    #[test]
    fn grid_points_shapes() {
        let g = grid_points(&[(60.0, 70.0, 101), (10.0, 20.0, 101)]).unwrap();
        assert_eq!(g.len(), 10201);
        assert_eq!(g[0], vec![60.0, 10.0]);
        assert_eq!(*g.last().unwrap(), vec![70.0, 20.0]);
        assert!(grid_points(&[(0.0, 1.0, 0)]).is_err());
    }
}
