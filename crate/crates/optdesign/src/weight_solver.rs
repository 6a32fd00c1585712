//! Simplex-constrained weight solver with optimality certificates.
//!
//! Solves the discretized design problem min_{ξ ∈ Ξ(X^k)} Ψ(M(ξ)) by
//! Frank–Wolfe with away steps over the simplex of weights. The certificate
//! is native: the Frank–Wolfe gap equals −min_x ψ(M(ξ), x) over the active
//! set, which by the equivalence theorem is exactly the ε-optimality
//! quantity. Also provides the vertex-direction (Fedorov–Wynn) baseline over
//! the full space.

use crate::adaptive::{IterRecord, RunStatus, RunTrace};
use crate::criteria::{self, CriterionSpec, CriterionError, ExtReal, Family};
use crate::design_space::{info_matrix, Design, DesignSpace};
use crate::matcone::SymMatrix;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolveError {
    /// No design on the active set has finite Ψ.
    #[error("infeasible start: no design on the active set has a finite criterion value")]
    InfeasibleStart,
    #[error(transparent)]
    Criterion(#[from] CriterionError),
    #[error("invalid solver input: {0}")]
    InvalidInput(String),
}

/// Step-size rule for inner iterations.
#[derive(Debug, Clone, Copy)]
pub enum StepRule {
    /// Safeguarded scalar minimization (derivative bisection with finiteness
    /// backoff), tolerance 1e-12.
    ExactLineSearch,
    /// Backtracking with factor `beta` and slope fraction `sigma`.
    Armijo { beta: f64, sigma: f64 },
}

/// Settings for [`solve_weights`].
#[derive(Debug, Clone)]
pub struct SolveSettings {
    /// Target certificate gap δ̄ (≥ 0). Values below the floating-point gap
    /// floor 1e-10·(1+|Ψ|) are solved best-effort to that floor.
    pub delta_bar: f64,
    pub max_inner_iters: usize,
    pub step_rule: StepRule,
    pub away_steps: bool,
    /// Weights are never driven into (0, w_min): they either stay at ≥ w_min
    /// or are removed exactly (away drop steps).
    pub w_min: f64,
}

impl Default for SolveSettings {
    fn default() -> Self {
        SolveSettings {
            delta_bar: 1e-9,
            max_inner_iters: 20_000,
            step_rule: StepRule::ExactLineSearch,
            away_steps: true,
            w_min: 1e-9,
        }
    }
}

/// Optimality certificate over the active set: gap = −min_x ψ(M(ξ), x),
/// recomputed from scratch at return.
#[derive(Debug, Clone, Copy)]
pub struct Certificate {
    pub gap: f64,
    /// gap ≤ max(δ̄, gap_floor).
    pub achieved: bool,
}

/// Floating-point floor below which certificate gaps are not meaningful.
pub fn gap_floor(psi: f64) -> f64 {
    1e-10 * (1.0 + psi.abs())
}

/// Internal state: weights over the local (active-set) index space.
struct Weights {
    /// Parallel to the active-index list; zero entries are off-support.
    w: Vec<f64>,
}

impl Weights {
    fn support(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.w.iter().copied().enumerate().filter(|&(_, w)| w > 0.0)
    }
}

fn assemble(atoms: &[&SymMatrix], w: &Weights) -> SymMatrix {
    let mut m = SymMatrix::zeros(atoms[0].dim());
    for (i, wi) in w.support() {
        m = m.add_scaled(atoms[i], wi);
    }
    m
}

/// Finds a feasible (finite-Ψ) starting weight vector on the active atoms.
fn feasible_start(
    atoms: &[&SymMatrix],
    spec: &CriterionSpec,
    init: Option<&[f64]>,
) -> Result<Weights, SolveError> {
    let n = atoms.len();
    let finite = |w: &Weights| -> Result<bool, SolveError> {
        Ok(criteria::eval(spec, &assemble(atoms, w))?.is_finite())
    };
    if let Some(init_w) = init {
        let w = Weights { w: init_w.to_vec() };
        if init_w.iter().sum::<f64>() > 0.0 && finite(&w)? {
            return Ok(w);
        }
    }
    let uniform = Weights { w: vec![1.0 / n as f64; n] };
    if finite(&uniform)? {
        return Ok(uniform);
    }
    // Single-atom starts.
    for i in 0..n {
        let mut w = vec![0.0; n];
        w[i] = 1.0;
        let w = Weights { w };
        if finite(&w)? {
            return Ok(w);
        }
    }
    // Two-stage-regularized probe: minimize the regularized criterion a few
    // steps from uniform, then check original finiteness.
    let d = atoms[0].dim();
    if let Ok(reg_spec) = CriterionSpec::new(spec.family.clone(), Some((0.5, SymMatrix::identity(d)))) {
        let mut w = uniform;
        for _ in 0..50 {
            let m = assemble(atoms, &w);
            let g = match criteria::grad(&reg_spec, &m) {
                Ok(g) => g,
                Err(_) => break,
            };
            let scores: Vec<f64> = atoms.iter().map(|a| g.inner(a)).collect();
            let i_fw = argmin(&scores);
            let gamma = 0.2;
            for (j, wj) in w.w.iter_mut().enumerate() {
                *wj *= 1.0 - gamma;
                if j == i_fw {
                    *wj += gamma;
                }
            }
            if finite(&w)? {
                return Ok(w);
            }
        }
    }
    Err(SolveError::InfeasibleStart)
}

fn argmin(v: &[f64]) -> usize {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i] < v[best] {
            best = i;
        }
    }
    best
}

/// Exact line search: minimizes φ(γ) = Ψ(M + γ D) over [0, γ_max] by
/// bisection on the derivative, after backing γ_max off to the finite region.
/// φ is convex along the segment for every catalogue criterion.
fn line_search_exact(
    spec: &CriterionSpec,
    m: &SymMatrix,
    dir: &SymMatrix,
    gamma_max: f64,
) -> Result<f64, SolveError> {
    let phi_val = |g: f64| -> Result<ExtReal, SolveError> {
        Ok(criteria::eval(spec, &m.add_scaled(dir, g))?)
    };
    let phi_prime = |g: f64| -> Option<f64> {
        criteria::grad(spec, &m.add_scaled(dir, g))
            .ok()
            .map(|gr| gr.inner(dir))
    };
    // Back off from an infinite/non-differentiable right endpoint.
    let mut hi = gamma_max;
    let mut tries = 0;
    while hi > 0.0 && (!phi_val(hi)?.is_finite() || phi_prime(hi).is_none()) {
        hi *= 0.5;
        tries += 1;
        if tries > 200 {
            return Ok(0.0);
        }
    }
    if hi <= 0.0 {
        return Ok(0.0);
    }
    let d0 = phi_prime(0.0).ok_or_else(|| {
        SolveError::InvalidInput("criterion not differentiable at the current iterate".into())
    })?;
    if d0 >= 0.0 {
        return Ok(0.0);
    }
    if phi_prime(hi).map_or(false, |d| d <= 0.0) {
        return Ok(hi);
    }
    let mut lo = 0.0;
    let tol = 1e-12 * hi.max(1.0);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        match phi_prime(mid) {
            Some(d) if d < 0.0 => lo = mid,
            Some(_) => hi = mid,
            None => hi = mid,
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Armijo backtracking from γ_max.
fn line_search_armijo(
    spec: &CriterionSpec,
    m: &SymMatrix,
    dir: &SymMatrix,
    gamma_max: f64,
    slope: f64,
    f0: f64,
    beta: f64,
    sigma: f64,
) -> Result<f64, SolveError> {
    let mut gamma = gamma_max;
    for _ in 0..100 {
        if let Some(v) = criteria::eval(spec, &m.add_scaled(dir, gamma))?.finite() {
            if v <= f0 + sigma * gamma * slope {
                return Ok(gamma);
            }
        }
        gamma *= beta;
    }
    Ok(0.0)
}

/// Frank–Wolfe with away steps over the weight simplex of the active atoms.
///
/// Returns a design supported in `active` together with a certificate whose
/// gap is recomputed from scratch. Ψ never increases relative to a finite
/// initial design.
pub fn solve_weights(
    space: &DesignSpace,
    active: &[usize],
    spec: &CriterionSpec,
    settings: &SolveSettings,
    init: Option<&Design>,
) -> Result<(Design, Certificate), SolveError> {
    if active.is_empty() {
        return Err(SolveError::InvalidInput("active set is empty".into()));
    }
    let atoms: Vec<&SymMatrix> = active.iter().map(|&i| space.atom(i)).collect();
    let n = atoms.len();

    let init_local: Option<Vec<f64>> = init.map(|xi| {
        let mut w = vec![0.0; n];
        for &(gi, wi) in xi.entries() {
            if let Some(pos) = active.iter().position(|&a| a == gi) {
                w[pos] = wi;
            }
        }
        let total: f64 = w.iter().sum();
        if total > 0.0 {
            for wi in w.iter_mut() {
                *wi /= total;
            }
        }
        w
    });
    let mut w = feasible_start(&atoms, spec, init_local.as_deref())?;

    let mut stalls = 0;
    for _ in 0..settings.max_inner_iters {
        let m = assemble(&atoms, &w);
        let psi = match criteria::eval(spec, &m)? {
            ExtReal::Finite(v) => v,
            ExtReal::Infinity => return Err(SolveError::InfeasibleStart),
        };
        let g = criteria::grad(spec, &m)?;
        let base = g.inner(&m);
        let scores: Vec<f64> = atoms.iter().map(|a| g.inner(a)).collect();
        let i_fw = argmin(&scores);
        let gap = base - scores[i_fw]; // = −min_i ψ(M, a_i)
        let target = settings.delta_bar.max(gap_floor(psi));
        if gap <= target {
            break;
        }

        // Away direction over the support.
        let mut i_aw: Option<usize> = None;
        if settings.away_steps {
            for (i, _) in w.support() {
                if i_aw.map_or(true, |j| scores[i] > scores[j]) {
                    i_aw = Some(i);
                }
            }
        }
        let slope_fw = scores[i_fw] - base;
        let use_away = match i_aw {
            Some(j) => {
                let slope_aw = base - scores[j];
                slope_aw < slope_fw && w.w[j] < 1.0
            }
            None => false,
        };

        let (dir, gamma_max, slope) = if use_away {
            let j = i_aw.unwrap();
            let dir = m.add_scaled(atoms[j], -1.0); // M − a_j
            let gmax = w.w[j] / (1.0 - w.w[j]);
            (dir, gmax, base - scores[j])
        } else {
            let dir = atoms[i_fw].add_scaled(&m, -1.0); // a_fw − M
            (dir, 1.0, slope_fw)
        };

        let gamma = match settings.step_rule {
            StepRule::ExactLineSearch => line_search_exact(spec, &m, &dir, gamma_max)?,
            StepRule::Armijo { beta, sigma } => {
                line_search_armijo(spec, &m, &dir, gamma_max, slope, psi, beta, sigma)?
            }
        };
        if gamma <= 0.0 {
            stalls += 1;
            if stalls >= 3 {
                break;
            }
            continue;
        }
        stalls = 0;

        if use_away {
            let j = i_aw.unwrap();
            if gamma >= gamma_max * (1.0 - 1e-14) {
                // Drop step: the away atom leaves the support exactly.
                for (i, wi) in w.w.iter_mut().enumerate() {
                    *wi = if i == j { 0.0 } else { *wi * (1.0 + gamma_max) };
                }
            } else {
                for (i, wi) in w.w.iter_mut().enumerate() {
                    *wi *= 1.0 + gamma;
                    if i == j {
                        *wi -= gamma;
                    }
                }
            }
        } else {
            for (i, wi) in w.w.iter_mut().enumerate() {
                *wi *= 1.0 - gamma;
                if i == i_fw {
                    *wi += gamma;
                }
            }
        }
        // Keep weights out of (0, w_min): pin them at the floor.
        for wi in w.w.iter_mut() {
            if *wi > 0.0 && *wi < settings.w_min {
                *wi = settings.w_min;
            }
        }
        let total: f64 = w.w.iter().sum();
        for wi in w.w.iter_mut() {
            *wi /= total;
        }
    }

    // Final design and a from-scratch certificate.
    let entries: Vec<(usize, f64)> = w
        .support()
        .map(|(i, wi)| (active[i], wi))
        .collect();
    let xi = Design::new(entries)
        .map_err(|e| SolveError::InvalidInput(format!("solver produced invalid design: {e}")))?;
    let m = info_matrix(space, &xi);
    let psi = criteria::eval(spec, &m)?
        .finite()
        .ok_or(SolveError::InfeasibleStart)?;
    let g = criteria::grad(spec, &m)?;
    let base = g.inner(&m);
    let mut min_psi = f64::INFINITY;
    for &i in active {
        let v = g.inner(space.atom(i)) - base;
        if v < min_psi {
            min_psi = v;
        }
    }
    let gap = -min_psi.min(0.0);
    let achieved = gap <= settings.delta_bar.max(gap_floor(psi));
    Ok((xi, Certificate { gap, achieved }))
}

/// Step rule for the vertex-direction baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VertexStep {
    /// Exact line search (fallback 1/(k+2) on a zero step).
    ExactLineSearch,
    /// Classic diminishing step α_k = 1/(k+2).
    Diminishing,
}

/// Vertex-direction (Fedorov–Wynn) baseline over the full space:
/// ξ^{k+1} = (1−α_k) ξ^k + α_k δ_{x^k} with x^k the worst violator and α_k by
/// exact line search (fallback 1/(k+2)). Stops when min_x ψ ≥ −eps.
pub fn vertex_direction(
    space: &DesignSpace,
    spec: &CriterionSpec,
    eps: f64,
    max_iters: usize,
    init: &Design,
) -> Result<(Design, RunTrace), SolveError> {
    vertex_direction_with_step(space, spec, eps, max_iters, init, VertexStep::ExactLineSearch)
}

/// `vertex_direction` with an explicit step rule.
pub fn vertex_direction_with_step(
    space: &DesignSpace,
    spec: &CriterionSpec,
    eps: f64,
    max_iters: usize,
    init: &Design,
    step: VertexStep,
) -> Result<(Design, RunTrace), SolveError> {
    let mut xi = init.clone();
    let mut records = Vec::new();
    let start = std::time::Instant::now();
    for k in 0..max_iters {
        let m = info_matrix(space, &xi);
        let psi = criteria::eval(spec, &m)?
            .finite()
            .ok_or(SolveError::InfeasibleStart)?;
        let g = criteria::grad(spec, &m)?;
        let base = g.inner(&m);
        let (mut i_min, mut psi_min) = (0usize, f64::INFINITY);
        for i in 0..space.len() {
            let v = g.inner(space.atom(i)) - base;
            if v < psi_min {
                (i_min, psi_min) = (i, v);
            }
        }
        records.push(IterRecord {
            k,
            psi,
            cert_gap: -psi_min.min(0.0),
            violator: Some(i_min),
            violator_psi: psi_min,
            n_active: space.len(),
            n_support: xi.support_size(),
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
        });
        if psi_min >= -eps {
            return Ok((
                xi,
                RunTrace { records, status: RunStatus::TerminatedEpsOptimal, final_psi_min: psi_min },
            ));
        }
        let gamma = match step {
            VertexStep::ExactLineSearch => {
                let dir = space.atom(i_min).add_scaled(&m, -1.0);
                let g = line_search_exact(spec, &m, &dir, 1.0)?;
                if g <= 0.0 {
                    1.0 / (k as f64 + 2.0)
                } else {
                    g
                }
            }
            VertexStep::Diminishing => 1.0 / (k as f64 + 2.0),
        };
        xi = crate::design_space::mix(&xi, &Design::dirac(i_min), gamma);
    }
    // Iteration cap: recompute the final certificate.
    let m = info_matrix(space, &xi);
    let g = criteria::grad(spec, &m)?;
    let base = g.inner(&m);
    let psi_min = (0..space.len())
        .map(|i| g.inner(space.atom(i)) - base)
        .fold(f64::INFINITY, f64::min);
    Ok((xi, RunTrace { records, status: RunStatus::IterationCap, final_psi_min: psi_min }))
}

/// Convenience: is this a family with an exact line search guarantee (D/A)?
pub fn has_exact_line_search(spec: &CriterionSpec) -> bool {
    matches!(spec.family, Family::D | Family::P(_) | Family::TildeP(_) | Family::WeightedA(_) | Family::PQ { .. })
}
