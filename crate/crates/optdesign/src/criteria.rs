//! Design criteria: evaluation, gradients, sensitivity functions, constants.
//!
//! A criterion Ψ maps information matrices to extended reals (+∞ on singular
//! matrices outside its domain). Supported families:
//!
//! - `D`: Ψ_0(M) = log det(M⁻¹) = −Σ log λ_i(M),
//! - `P(p)`: Ψ_p(M) = (tr M^{−p})^{1/p}, p > 0 (A-optimality is p = 1),
//! - `PQ(p, Q)`: Ψ_{p,Q}(M) = Ψ_p(C_Q(M)) with C_Q(M) = (Qᵀ M⁻ Q)⁻¹,
//! - `WeightedA(W)`: Ψ_W(M) = tr(W M⁻¹),
//! - `E`: Ψ_∞(M) = λ_max(M⁻¹) = 1/λ_min(M) (evaluation-only: non-smooth at
//!   eigenvalue multiplicities),
//! - `TildeP(p)`: Ψ̃_p = (Ψ_p)^p for p ≥ 1, Ψ̃_0 = Ψ_0 (strongly convex on
//!   bounded slices of the PD cone),
//!
//! each optionally wrapped by a two-stage shift M ↦ α M⁰ + (1−α) M.
//!
//! Gradients are returned as symmetric matrices G with DΨ(M)E = ⟨G, E⟩_F;
//! the sensitivity function is ψ(M, x) = DΨ(M)(m(x) − M) = ⟨G, m(x) − M⟩_F,
//! whose nonnegativity over the design space certifies ε-optimality.

use crate::matcone::{eig_sym, is_pd, mat_pow_neg, pinv, MatError, SymMatrix};
use nalgebra::DMatrix;
use thiserror::Error;

/// Relative rank cutoff for range tests and pseudo-inverses.
pub const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum CriterionError {
    /// Input outside the criterion's precondition (e.g. negative definite M).
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// Gradient requested where Ψ is infinite.
    #[error("domain violation: {0}")]
    Domain(String),
    /// Gradient requested at a non-smooth point (E-criterion multiplicity).
    #[error("non-smooth point: {0}")]
    NonSmooth(String),
    #[error(transparent)]
    Mat(#[from] MatError),
}

/// Extended real value: finite or +∞ (the value of Ψ outside its domain).
///
/// +∞ compares greater than every finite value; it is absorbing under
/// addition and positive scaling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtReal {
    Finite(f64),
    Infinity,
}

impl ExtReal {
    pub fn is_finite(&self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    /// Finite value, or None for +∞.
    pub fn finite(&self) -> Option<f64> {
        match self {
            ExtReal::Finite(v) => Some(*v),
            ExtReal::Infinity => None,
        }
    }

    /// Finite value; panics on +∞.
    pub fn unwrap_finite(&self) -> f64 {
        self.finite().expect("expected a finite criterion value")
    }

    /// Value as f64 with +∞ mapped to f64::INFINITY.
    pub fn as_f64(&self) -> f64 {
        match self {
            ExtReal::Finite(v) => *v,
            ExtReal::Infinity => f64::INFINITY,
        }
    }
}

impl PartialOrd for ExtReal {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        self.as_f64().partial_cmp(&other.as_f64())
    }
}

/// Criterion family with its parameters.
#[derive(Debug, Clone)]
pub enum Family {
    /// D-criterion Ψ_0.
    D,
    /// Ψ_p, p > 0; p = 1 is the A-criterion.
    P(f64),
    /// Ψ_{p,Q} for a full-column-rank d×s matrix Q, p ≥ 0.
    PQ { p: f64, q: DMatrix<f64> },
    /// Weighted A-criterion tr(W M⁻¹), W PSD.
    WeightedA(SymMatrix),
    /// E-criterion 1/λ_min(M); evaluation-only by default.
    E,
    /// Ψ̃_p = (Ψ_p)^p for p ≥ 1; Ψ̃_0 = Ψ_0.
    TildeP(f64),
}

/// Two-stage wrapper: evaluate at α M⁰ + (1−α) M.
#[derive(Debug, Clone)]
pub struct TwoStage {
    pub alpha: f64,
    pub m0: SymMatrix,
    /// Recorded at construction: M⁰ PD makes the wrapped criterion finite on
    /// the whole PSD cone (for α > 0).
    pub m0_pd: bool,
}

/// Declarative description of a design criterion.
#[derive(Debug, Clone)]
pub struct CriterionSpec {
    pub family: Family,
    pub two_stage: Option<TwoStage>,
}

impl CriterionSpec {
    /// Validates parameters and builds a spec.
    pub fn new(family: Family, two_stage: Option<(f64, SymMatrix)>) -> Result<Self, CriterionError> {
        match &family {
            Family::P(p) => {
                if *p <= 0.0 {
                    return Err(CriterionError::InvalidInput(format!("P requires p > 0, got {p}")));
                }
            }
            Family::TildeP(p) => {
                if *p < 0.0 || (*p > 0.0 && *p < 1.0) {
                    return Err(CriterionError::InvalidInput(format!(
                        "TildeP requires p = 0 or p >= 1, got {p}"
                    )));
                }
            }
            Family::PQ { p, q } => {
                if *p < 0.0 {
                    return Err(CriterionError::InvalidInput(format!("PQ requires p >= 0, got {p}")));
                }
                if q.ncols() > q.nrows() {
                    return Err(CriterionError::InvalidInput(format!(
                        "PQ requires s <= d, got Q of shape {}x{}",
                        q.nrows(),
                        q.ncols()
                    )));
                }
                let sv = q.clone().svd(false, false).singular_values;
                let smax = sv.iter().cloned().fold(0.0_f64, f64::max);
                if sv.iter().any(|&s| s <= RANK_TOL * smax.max(1.0)) {
                    return Err(CriterionError::InvalidInput(
                        "PQ requires Q of full column rank".into(),
                    ));
                }
            }
            Family::WeightedA(w) => {
                let lmin = eig_sym(w)?.lambda_min();
                if lmin < -1e-10 * w.operator_norm().max(1.0) {
                    return Err(CriterionError::InvalidInput(format!(
                        "WeightedA requires W PSD (lambda_min = {lmin:.3e})"
                    )));
                }
            }
            Family::D | Family::E => {}
        }
        let two_stage = match two_stage {
            None => None,
            Some((alpha, m0)) => {
                if !(0.0..1.0).contains(&alpha) {
                    return Err(CriterionError::InvalidInput(format!(
                        "two-stage alpha must lie in [0,1), got {alpha}"
                    )));
                }
                let lmin = eig_sym(&m0)?.lambda_min();
                if alpha > 0.0 && lmin < -1e-10 * m0.operator_norm().max(1.0) {
                    return Err(CriterionError::InvalidInput(format!(
                        "two-stage M0 must be PSD (lambda_min = {lmin:.3e})"
                    )));
                }
                let m0_pd = is_pd(&m0, m0.pd_tol());
                Some(TwoStage { alpha, m0, m0_pd })
            }
        };
        Ok(CriterionSpec { family, two_stage })
    }

    /// Plain (no two-stage) criterion.
    pub fn plain(family: Family) -> Result<Self, CriterionError> {
        Self::new(family, None)
    }

    /// The A-criterion, tr(M⁻¹).
    pub fn a_criterion() -> Self {
        Self::plain(Family::P(1.0)).unwrap()
    }

    /// The D-criterion, −log det M.
    pub fn d_criterion() -> Self {
        Self::plain(Family::D).unwrap()
    }

    /// True when the family has a continuous gradient on the PD cone
    /// (everything except E).
    pub fn is_smooth(&self) -> bool {
        !matches!(self.family, Family::E)
    }

    /// Effective argument: α M⁰ + (1−α) M under two-stage, else M itself.
    fn effective(&self, m: &SymMatrix) -> SymMatrix {
        match &self.two_stage {
            None => m.clone(),
            Some(ts) => ts.m0.scale(ts.alpha).add_scaled(m, 1.0 - ts.alpha),
        }
    }

    /// Chain-rule factor for the two-stage wrapper.
    fn outer_factor(&self) -> f64 {
        match &self.two_stage {
            None => 1.0,
            Some(ts) => 1.0 - ts.alpha,
        }
    }
}

/// Rejects matrices with a genuinely negative eigenvalue (distinct from the
/// merely-singular case that yields Ψ = +∞).
fn check_psd_input(m: &SymMatrix) -> Result<(), CriterionError> {
    let s = eig_sym(m)?;
    let tol = 1e-8 * s.lambda_max().abs().max(1.0);
    if s.lambda_min() < -tol {
        return Err(CriterionError::InvalidInput(format!(
            "matrix is not PSD (lambda_min = {:.3e})",
            s.lambda_min()
        )));
    }
    Ok(())
}

/// Evaluates Ψ(M), returning +∞ exactly when the (effective) matrix falls
/// outside the criterion's domain.
pub fn eval(spec: &CriterionSpec, m: &SymMatrix) -> Result<ExtReal, CriterionError> {
    check_psd_input(m)?;
    let me = spec.effective(m);
    let s = eig_sym(&me)?;
    let pd = s.lambda_min() > me.pd_tol();
    let val = match &spec.family {
        Family::D => {
            if !pd {
                return Ok(ExtReal::Infinity);
            }
            -s.eigenvalues.iter().map(|l| l.ln()).sum::<f64>()
        }
        Family::P(p) => {
            if !pd {
                return Ok(ExtReal::Infinity);
            }
            s.eigenvalues
                .iter()
                .map(|l| l.powf(-p))
                .sum::<f64>()
                .powf(1.0 / p)
        }
        Family::TildeP(p) => {
            if !pd {
                return Ok(ExtReal::Infinity);
            }
            if *p == 0.0 {
                -s.eigenvalues.iter().map(|l| l.ln()).sum::<f64>()
            } else {
                s.eigenvalues.iter().map(|l| l.powf(-p)).sum::<f64>()
            }
        }
        Family::WeightedA(w) => {
            if !pd {
                return Ok(ExtReal::Infinity);
            }
            w.inner(&mat_pow_neg(&me, 1.0)?)
        }
        Family::E => {
            if !pd {
                return Ok(ExtReal::Infinity);
            }
            1.0 / s.lambda_min()
        }
        Family::PQ { p, q } => {
            // Domain condition for singular M: ran(Q) ⊆ ran(M).
            let rank_cut = RANK_TOL * s.lambda_max().abs().max(1.0);
            let d = me.dim();
            let mut proj = DMatrix::zeros(d, d);
            for i in 0..d {
                if s.eigenvalues[i].abs() > rank_cut {
                    let v = s.eigenvectors.column(i);
                    proj += &v * v.transpose();
                }
            }
            let resid = (q - &proj * q).norm();
            if resid > 1e-8 * q.norm().max(1.0) {
                return Ok(ExtReal::Infinity);
            }
            let m_pinv = pinv(&me, RANK_TOL)?.to_dmatrix();
            let b = SymMatrix::from_dmatrix(&(q.transpose() * m_pinv * q));
            let sb = eig_sym(&b)?;
            if sb.lambda_min() <= b.pd_tol() {
                return Ok(ExtReal::Infinity);
            }
            if *p == 0.0 {
                sb.eigenvalues.iter().map(|l| l.ln()).sum::<f64>()
            } else {
                sb.eigenvalues
                    .iter()
                    .map(|l| l.powf(*p))
                    .sum::<f64>()
                    .powf(1.0 / p)
            }
        }
    };
    if !val.is_finite() {
        return Ok(ExtReal::Infinity);
    }
    Ok(ExtReal::Finite(val))
}

/// Gradient of Ψ_p at a PD matrix (base families only, no two-stage).
fn grad_p_family(p: f64, m: &SymMatrix) -> Result<SymMatrix, CriterionError> {
    if p == 0.0 {
        Ok(mat_pow_neg(m, 1.0)?.scale(-1.0))
    } else {
        let tr_mp = eig_sym(m)?
            .eigenvalues
            .iter()
            .map(|l| l.powf(-p))
            .sum::<f64>();
        let factor = -tr_mp.powf(1.0 / p - 1.0);
        Ok(mat_pow_neg(m, p + 1.0)?.scale(factor))
    }
}

/// Gradient matrix G with DΨ(M)E = ⟨G, E⟩_F.
pub fn grad(spec: &CriterionSpec, m: &SymMatrix) -> Result<SymMatrix, CriterionError> {
    match eval(spec, m)? {
        ExtReal::Infinity => {
            return Err(CriterionError::Domain(
                "gradient requested where the criterion is infinite".into(),
            ))
        }
        ExtReal::Finite(_) => {}
    }
    let me = spec.effective(m);
    let base = match &spec.family {
        Family::D => grad_p_family(0.0, &me)?,
        Family::P(p) => grad_p_family(*p, &me)?,
        Family::TildeP(p) => {
            if *p == 0.0 {
                grad_p_family(0.0, &me)?
            } else {
                // DΨ̃_p(M)E = −p·tr(M^{−p−1} E).
                mat_pow_neg(&me, p + 1.0)?.scale(-p)
            }
        }
        Family::WeightedA(w) => {
            let mi = mat_pow_neg(&me, 1.0)?.to_dmatrix();
            SymMatrix::from_dmatrix(&(-&mi * w.to_dmatrix() * &mi))
        }
        Family::E => {
            let s = eig_sym(&me)?;
            let d = me.dim();
            let gap = if d > 1 {
                (s.eigenvalues[1] - s.eigenvalues[0]) / s.lambda_max().abs().max(1e-300)
            } else {
                f64::INFINITY
            };
            if gap < 1e-8 {
                return Err(CriterionError::NonSmooth(format!(
                    "E-criterion gradient undefined: lambda_min has relative gap {gap:.3e}"
                )));
            }
            let v: nalgebra::DVector<f64> = s.eigenvectors.column(0).into();
            let vv = SymMatrix::from_dmatrix(&(&v * v.transpose()));
            vv.scale(-1.0 / (s.lambda_min() * s.lambda_min()))
        }
        Family::PQ { p, q } => {
            // Ψ_{p,Q}(M) = Ψ_p(C_Q(M)), C_Q(M) = (Qᵀ M⁻¹ Q)⁻¹; chain rule gives
            // grad = M⁻¹ Q C G_p(C) C Qᵀ M⁻¹ with G_p the Ψ_p gradient at C.
            let mi = mat_pow_neg(&me, 1.0)?.to_dmatrix();
            let b = SymMatrix::from_dmatrix(&(q.transpose() * &mi * q));
            let c = mat_pow_neg(&b, 1.0)?;
            let gp = grad_p_family(*p, &c)?;
            let cd = c.to_dmatrix();
            SymMatrix::from_dmatrix(&(&mi * q * &cd * gp.to_dmatrix() * &cd * q.transpose() * &mi))
        }
    };
    Ok(base.scale(spec.outer_factor()))
}

/// Sensitivity function ψ(M, x) = DΨ(M)(m(x) − M) = ⟨grad(M), atom − M⟩_F.
pub fn sensitivity(
    spec: &CriterionSpec,
    m: &SymMatrix,
    atom: &SymMatrix,
) -> Result<f64, CriterionError> {
    let g = grad(spec, m)?;
    Ok(g.inner(&atom.add_scaled(m, -1.0)))
}

/// Sensitivity against a precomputed gradient (hot path of violator scans).
pub fn sensitivity_with_grad(g: &SymMatrix, m: &SymMatrix, atom: &SymMatrix) -> f64 {
    g.inner(&atom.add_scaled(m, -1.0))
}

/// Strong-convexity constant μ = max{1,p}(p+1)/C^{p+2} of Ψ̃_p on
/// {A PD : A ⪯ C·I}.
pub fn strong_convexity_mu(p: u32, c: f64) -> f64 {
    assert!(c > 0.0, "strong_convexity_mu requires C > 0");
    let pf = p as f64;
    pf.max(1.0) * (pf + 1.0) / c.powf(pf + 2.0)
}

/// Lower bound μ_{p,R}(‖M‖) with M ⪰ μ_{p,R}(‖M‖)·I whenever Ψ_p(M) ≤ R:
/// e^{−R}·‖M‖^{−(d−1)} for p = 0 and 1/R for p > 0.
pub fn lower_bound_from_value(p: f64, r: f64, opnorm: f64, d: usize) -> Result<f64, CriterionError> {
    if opnorm <= 0.0 {
        return Err(CriterionError::InvalidInput("opnorm must be positive".into()));
    }
    if p == 0.0 {
        Ok((-r).exp() * opnorm.powi(-(d as i32 - 1)))
    } else {
        if r <= 0.0 {
            return Err(CriterionError::InvalidInput(format!(
                "lower bound for p > 0 requires R > 0, got {r}"
            )));
        }
        Ok(1.0 / r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn random_pd(d: usize, seed: u64) -> SymMatrix {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let a = DMatrix::from_fn(d, d, |_, _| rng.gen_range(-1.0..1.0));
        SymMatrix::from_dmatrix(&(&a * a.transpose() + DMatrix::identity(d, d) * 0.3))
    }

    fn random_sym(d: usize, seed: u64) -> SymMatrix {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        SymMatrix::from_dmatrix(&DMatrix::from_fn(d, d, |_, _| rng.gen_range(-1.0..1.0)))
    }

    /// All differentiable test specs at dimension d.
    fn smooth_specs(d: usize, seed: u64) -> Vec<CriterionSpec> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let q = DMatrix::from_fn(d, d - 1, |_, _| rng.gen_range(-1.0..1.0));
        let w = random_pd(d, seed.wrapping_add(1));
        vec![
            CriterionSpec::d_criterion(),
            CriterionSpec::a_criterion(),
            CriterionSpec::plain(Family::P(2.5)).unwrap(),
            CriterionSpec::plain(Family::TildeP(2.0)).unwrap(),
            CriterionSpec::plain(Family::PQ { p: 0.0, q: q.clone() }).unwrap(),
            CriterionSpec::plain(Family::PQ { p: 1.0, q }).unwrap(),
            CriterionSpec::plain(Family::WeightedA(w)).unwrap(),
            CriterionSpec::new(Family::D, Some((0.3, SymMatrix::identity(d)))).unwrap(),
            CriterionSpec::new(Family::TildeP(1.0), Some((0.1, SymMatrix::identity(d)))).unwrap(),
        ]
    }

    #[test]
    fn eval_trivial_cases() {
        let d = CriterionSpec::d_criterion();
        assert_eq!(eval(&d, &SymMatrix::identity(2)).unwrap(), ExtReal::Finite(0.0));
        let a = CriterionSpec::a_criterion();
        let v = eval(&a, &SymMatrix::from_diagonal(&[0.5, 0.5])).unwrap();
        assert!((v.unwrap_finite() - 4.0).abs() < 1e-12);
        assert_eq!(eval(&d, &SymMatrix::from_diagonal(&[1.0, 0.0])).unwrap(), ExtReal::Infinity);
    }

    #[test]
    fn eval_e_criterion() {
        let e = CriterionSpec::plain(Family::E).unwrap();
        let v = eval(&e, &SymMatrix::from_diagonal(&[0.25, 2.0])).unwrap();
        assert!((v.unwrap_finite() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn eval_rejects_negative_definite() {
        let d = CriterionSpec::d_criterion();
        let m = SymMatrix::from_diagonal(&[1.0, -1.0]);
        assert!(matches!(eval(&d, &m), Err(CriterionError::InvalidInput(_))));
    }

    #[test]
    fn eval_pq_matches_composition() {
        // Ψ_{p,Q} = Ψ_p((Qᵀ M⁻¹ Q)⁻¹) on PD input.
        let m = random_pd(3, 42);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let q = DMatrix::from_fn(3, 2, |_, _| rng.gen_range(-1.0..1.0));
        let spec = CriterionSpec::plain(Family::PQ { p: 1.0, q: q.clone() }).unwrap();
        let v = eval(&spec, &m).unwrap().unwrap_finite();
        let mi = mat_pow_neg(&m, 1.0).unwrap().to_dmatrix();
        let c = mat_pow_neg(&SymMatrix::from_dmatrix(&(q.transpose() * mi * q)), 1.0).unwrap();
        let want = eval(&CriterionSpec::a_criterion(), &c).unwrap().unwrap_finite();
        assert!((v - want).abs() < 1e-9 * want.abs().max(1.0));
    }

    #[test]
    fn eval_pq_range_condition() {
        // M = diag(1, 0): Q = e1 lies in ran(M) (finite); Q = e2 does not (+∞).
        let m = SymMatrix::from_diagonal(&[1.0, 0.0]);
        let q_in = DMatrix::from_column_slice(2, 1, &[1.0, 0.0]);
        let q_out = DMatrix::from_column_slice(2, 1, &[0.0, 1.0]);
        let in_spec = CriterionSpec::plain(Family::PQ { p: 1.0, q: q_in }).unwrap();
        let out_spec = CriterionSpec::plain(Family::PQ { p: 1.0, q: q_out }).unwrap();
        assert!(eval(&in_spec, &m).unwrap().is_finite());
        assert_eq!(eval(&out_spec, &m).unwrap(), ExtReal::Infinity);
    }

    #[test]
    fn grad_trivial_cases() {
        let d = CriterionSpec::d_criterion();
        let g = grad(&d, &SymMatrix::identity(3)).unwrap();
        assert!(g.add_scaled(&SymMatrix::identity(3), 1.0).frobenius_norm() < 1e-12);
        let tp = CriterionSpec::plain(Family::TildeP(1.0)).unwrap();
        let g = grad(&tp, &SymMatrix::from_diagonal(&[1.0, 2.0])).unwrap();
        let want = SymMatrix::from_diagonal(&[-1.0, -0.25]);
        assert!(g.add_scaled(&want, -1.0).frobenius_norm() < 1e-12);
    }

    /// Central finite-difference directional derivative of eval.
    fn fd_directional(spec: &CriterionSpec, m: &SymMatrix, e: &SymMatrix, h: f64) -> f64 {
        let fp = eval(spec, &m.add_scaled(e, h)).unwrap().unwrap_finite();
        let fm = eval(spec, &m.add_scaled(e, -h)).unwrap().unwrap_finite();
        (fp - fm) / (2.0 * h)
    }

    #[test]
    fn grad_matches_finite_differences() {
        for (k, seed) in (0..100).enumerate() {
            let m = random_pd(3, seed as u64 + 1000);
            for (j, spec) in smooth_specs(3, seed as u64).iter().enumerate() {
                let g = grad(spec, &m).unwrap();
                let e = random_sym(3, (k * 31 + j) as u64);
                let h = 1e-5 * (1.0 + m.operator_norm());
                let fd = fd_directional(spec, &m, &e, h);
                let an = g.inner(&e);
                let denom = fd.abs().max(an.abs()).max(1e-8);
                assert!(
                    (fd - an).abs() / denom <= 1e-6,
                    "family {j}, matrix {k}: fd {fd} vs grad {an}"
                );
            }
        }
    }

    #[test]
    fn grad_e_simple_eigenvalue() {
        let e = CriterionSpec::plain(Family::E).unwrap();
        let m = SymMatrix::from_diagonal(&[0.5, 2.0]);
        let g = grad(&e, &m).unwrap();
        // d(1/λ_min)/dM = −v vᵀ / λ_min².
        let want = SymMatrix::from_diagonal(&[-4.0, 0.0]);
        assert!(g.add_scaled(&want, -1.0).frobenius_norm() < 1e-10);
        // Multiplicity → non-smooth error.
        assert!(matches!(
            grad(&e, &SymMatrix::identity(2)),
            Err(CriterionError::NonSmooth(_))
        ));
    }

    #[test]
    fn sensitivity_cases() {
        let d = CriterionSpec::d_criterion();
        let i2 = SymMatrix::identity(2);
        assert!(sensitivity(&d, &i2, &i2).unwrap().abs() < 1e-12);
        assert!((sensitivity(&d, &i2, &i2.scale(2.0)).unwrap() + 2.0).abs() < 1e-12);
        // D with effective formula: ψ = d − tr(M⁻¹ atom) at α = 0.
        let m = random_pd(3, 77);
        let atom = random_pd(3, 78);
        let psi = sensitivity(&d, &m, &atom).unwrap();
        let want = 3.0 - mat_pow_neg(&m, 1.0).unwrap().inner(&atom);
        assert!((psi - want).abs() < 1e-10);
    }

    #[test]
    fn sensitivity_vanishes_at_simplex_optimum() {
        // Uniform design on atoms e_i e_iᵀ gives M = I/d, D-optimal; the
        // equivalence theorem forces ψ = 0 at every support atom.
        for d in [2usize, 3, 5] {
            let m = SymMatrix::identity(d).scale(1.0 / d as f64);
            let spec = CriterionSpec::d_criterion();
            for j in 0..d {
                let mut v = vec![0.0; d];
                v[j] = 1.0;
                let atom = SymMatrix::outer(&v);
                assert!(sensitivity(&spec, &m, &atom).unwrap().abs() < 1e-10);
            }
        }
    }

    #[test]
    fn two_stage_grad_factor() {
        // Two-stage D: gradient is −(1−α)(αM⁰+(1−α)M)⁻¹.
        let m0 = SymMatrix::identity(2);
        let spec = CriterionSpec::new(Family::D, Some((0.25, m0.clone()))).unwrap();
        let m = SymMatrix::from_diagonal(&[2.0, 3.0]);
        let me = m0.scale(0.25).add_scaled(&m, 0.75);
        let want = mat_pow_neg(&me, 1.0).unwrap().scale(-0.75);
        let g = grad(&spec, &m).unwrap();
        assert!(g.add_scaled(&want, -1.0).frobenius_norm() < 1e-12);
    }

    #[test]
    fn strong_convexity_mu_values() {
        assert_eq!(strong_convexity_mu(0, 1.0), 1.0);
        assert_eq!(strong_convexity_mu(1, 1.0), 2.0);
        assert!((strong_convexity_mu(2, 2.0) - 0.375).abs() < 1e-15);
    }

    #[test]
    fn lower_bound_values() {
        assert!((lower_bound_from_value(1.0, 4.0, 1.0, 2).unwrap() - 0.25).abs() < 1e-15);
        assert!((lower_bound_from_value(0.0, 0.0, 1.0, 2).unwrap() - 1.0).abs() < 1e-15);
        let v = lower_bound_from_value(0.0, 1.0, 2.0, 3).unwrap();
        assert!((v - (-1.0f64).exp() / 4.0).abs() < 1e-15);
        assert!(lower_bound_from_value(1.0, 0.0, 1.0, 2).is_err());
    }

    #[test]
    fn d_scale_law() {
        // eval(D, cM) = eval(D, M) − d log c.
        let m = random_pd(3, 4);
        let d = CriterionSpec::d_criterion();
        let base = eval(&d, &m).unwrap().unwrap_finite();
        for c in [0.5, 2.0, 10.0] {
            let v = eval(&d, &m.scale(c)).unwrap().unwrap_finite();
            assert!((v - (base - 3.0 * c.ln())).abs() < 1e-10);
        }
    }

    #[test]
    fn strong_convexity_certificate() {
        // Bregman gap of Ψ̃_p on {A PD : A ⪯ C·I} is ≥ (μ/2)|N−M|²_F.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
        for p in [0u32, 1, 2] {
            let spec = CriterionSpec::plain(Family::TildeP(p as f64)).unwrap();
            for c in [1.0, 2.0, 5.0] {
                let mu = strong_convexity_mu(p, c);
                for _ in 0..50 {
                    let (m, n) = (sample_bounded_pd(3, c, &mut rng), sample_bounded_pd(3, c, &mut rng));
                    let fm = eval(&spec, &m).unwrap().unwrap_finite();
                    let fn_ = eval(&spec, &n).unwrap().unwrap_finite();
                    let g = grad(&spec, &m).unwrap();
                    let diff = n.add_scaled(&m, -1.0);
                    let bregman = fn_ - fm - g.inner(&diff);
                    let bound = 0.5 * mu * diff.frobenius_norm().powi(2);
                    assert!(bregman - bound >= -1e-9, "p={p} C={c}: {bregman} < {bound}");
                }
            }
        }
    }

    /// Random PD matrix with 0 ≺ M ⪯ C·I.
    fn sample_bounded_pd(d: usize, c: f64, rng: &mut impl Rng) -> SymMatrix {
        let a = DMatrix::from_fn(d, d, |_, _| rng.gen_range(-1.0..1.0));
        let m = SymMatrix::from_dmatrix(&(&a * a.transpose() + DMatrix::identity(d, d) * 0.05));
        let lmax = eig_sym(&m).unwrap().lambda_max();
        m.scale(c * rng.gen_range(0.2..1.0) / lmax)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn convexity_along_segments(seed in 0u64..10_000) {
            let m = random_pd(3, seed);
            let n = random_pd(3, seed.wrapping_add(1));
            for spec in smooth_specs(3, seed) {
                let fm = eval(&spec, &m).unwrap().unwrap_finite();
                let fnn = eval(&spec, &n).unwrap().unwrap_finite();
                for alpha in [0.25, 0.5, 0.75] {
                    let mid = m.scale(alpha).add_scaled(&n, 1.0 - alpha);
                    let fmid = eval(&spec, &mid).unwrap().unwrap_finite();
                    prop_assert!(fmid <= alpha * fm + (1.0 - alpha) * fnn + 1e-9);
                }
            }
        }

        #[test]
        fn antitonicity(seed in 0u64..10_000) {
            let m = random_pd(3, seed);
            let bump = random_pd(3, seed.wrapping_add(7));
            let n = m.add_scaled(&bump, 0.5); // M ⪯ N
            for spec in smooth_specs(3, seed) {
                let fm = eval(&spec, &m).unwrap().unwrap_finite();
                let fnn = eval(&spec, &n).unwrap().unwrap_finite();
                prop_assert!(fnn <= fm + 1e-9);
            }
        }

        #[test]
        fn strict_midpoint_convexity_psi_p(seed in 0u64..10_000) {
            let m = random_pd(3, seed);
            let mut n = random_pd(3, seed.wrapping_add(1));
            if n.add_scaled(&m, -1.0).frobenius_norm() < 1e-3 {
                n = n.add_scaled(&SymMatrix::identity(3), 0.01);
            }
            for spec in [
                CriterionSpec::d_criterion(),
                CriterionSpec::a_criterion(),
                CriterionSpec::plain(Family::P(2.0)).unwrap(),
                CriterionSpec::plain(Family::TildeP(2.0)).unwrap(),
            ] {
                let fm = eval(&spec, &m).unwrap().unwrap_finite();
                let fnn = eval(&spec, &n).unwrap().unwrap_finite();
                let mid = m.scale(0.5).add_scaled(&n, 0.5);
                let fmid = eval(&spec, &mid).unwrap().unwrap_finite();
                prop_assert!(fmid < 0.5 * fm + 0.5 * fnn);
            }
        }
    }
}
