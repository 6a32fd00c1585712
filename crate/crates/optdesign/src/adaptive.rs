//! Adaptive discretization algorithms.
//!
//! Four variants — strict/relaxed × without/with exchange — share the same
//! skeleton: solve the design problem on the current discretization X^k to
//! tolerance δ̄_k, search the full space for an optimality violator, terminate
//! when none is profitable enough, otherwise refine the discretization. The
//! strict variants use the worst violator and the test
//! ψ(M(ξ^k), x^k) ≥ −ε + δ̲_k; the relaxed variants accept any violator with
//! ψ < −ε and terminate when a full scan certifies there is none. Without
//! exchange, X^{k+1} = X^k ∪ {x^k}; with exchange, X^{k+1} = supp ξ^k ∪ {x^k}.
//!
//! Every terminating run is certified ε-optimal over the full space by a
//! final full scan (the equivalence theorem).

use crate::criteria::{self, CriterionError, CriterionSpec};
use crate::design_space::{info_matrix, prune, Design, DesignSpace};
use crate::matcone::SymMatrix;
use crate::weight_solver::{solve_weights, SolveError, SolveSettings};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AdaptiveError {
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Criterion(#[from] CriterionError),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

/// Rule for the subproblem tolerances δ̄_k.
#[derive(Debug, Clone, Copy)]
pub enum DeltaBarRule {
    Constant(f64),
    /// δ̄_k = c̄ / (k+1)².
    QuadraticDecay(f64),
    Zero,
}

/// Rule for the violator tolerances δ̲_k.
#[derive(Debug, Clone, Copy)]
pub enum DeltaUnderRule {
    Constant(f64),
    /// δ̲_k = c̲ / (k+2).
    HarmonicDecay(f64),
    Zero,
}

/// Tolerance schedule (ε, δ̄_k, δ̲_k) with auditable termination hypotheses.
#[derive(Debug, Clone, Copy)]
pub struct ToleranceSchedule {
    pub eps: f64,
    pub delta_bar_rule: DeltaBarRule,
    pub delta_under_rule: DeltaUnderRule,
}

impl ToleranceSchedule {
    /// Strict schedule with ε and δ̄_k = δ̲_k = 0.
    pub fn strict(eps: f64) -> Self {
        ToleranceSchedule {
            eps,
            delta_bar_rule: DeltaBarRule::Zero,
            delta_under_rule: DeltaUnderRule::Zero,
        }
    }

    pub fn delta_bar(&self, k: usize) -> f64 {
        match self.delta_bar_rule {
            DeltaBarRule::Constant(c) => c,
            DeltaBarRule::QuadraticDecay(c) => c / ((k as f64 + 1.0) * (k as f64 + 1.0)),
            DeltaBarRule::Zero => 0.0,
        }
    }

    pub fn delta_under(&self, k: usize) -> f64 {
        match self.delta_under_rule {
            DeltaUnderRule::Constant(c) => c,
            DeltaUnderRule::HarmonicDecay(c) => c / (k as f64 + 2.0),
            DeltaUnderRule::Zero => 0.0,
        }
    }

    fn delta_bar_limsup(&self) -> f64 {
        match self.delta_bar_rule {
            DeltaBarRule::Constant(c) => c,
            _ => 0.0,
        }
    }

    fn delta_under_limsup(&self) -> f64 {
        match self.delta_under_rule {
            DeltaUnderRule::Constant(c) => c,
            _ => 0.0,
        }
    }

    /// ε > limsup δ̄_k + limsup δ̲_k: guarantees termination of the strict
    /// no-exchange algorithm.
    pub fn termination_guaranteed_no_exchange(&self) -> bool {
        self.eps > self.delta_bar_limsup() + self.delta_under_limsup()
    }

    /// Σ δ̄_k < ∞.
    pub fn delta_bar_summable(&self) -> bool {
        match self.delta_bar_rule {
            DeltaBarRule::Constant(c) => c == 0.0,
            DeltaBarRule::QuadraticDecay(_) | DeltaBarRule::Zero => true,
        }
    }

    /// Summable δ̄_k and ε > limsup δ̲_k: guarantees termination of the strict
    /// exchange algorithm.
    pub fn termination_guaranteed_exchange(&self) -> bool {
        self.delta_bar_summable() && self.eps > self.delta_under_limsup()
    }
}

/// Algorithm variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    NoExchangeStrict,
    NoExchangeRelaxed,
    ExchangeStrict,
    ExchangeRelaxed,
}

impl Variant {
    pub fn is_strict(&self) -> bool {
        matches!(self, Variant::NoExchangeStrict | Variant::ExchangeStrict)
    }

    pub fn is_exchange(&self) -> bool {
        matches!(self, Variant::ExchangeStrict | Variant::ExchangeRelaxed)
    }
}

/// Scan order for relaxed-variant violator searches.
#[derive(Debug, Clone, Copy)]
pub enum ScanOrder {
    Index,
    Seeded(u64),
}

/// Caps and knobs for a run.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub variant: Variant,
    pub max_outer: usize,
    pub wall_limit: Option<std::time::Duration>,
    /// Support cutoff used by the exchange update's prune.
    pub w_min: f64,
    /// Use the accumulating update X^{k+1} = X^k ∪ {x^k} in place of the
    /// exchange update. Some published statements of the exchange algorithm
    /// print the accumulating form; both are available since the intended
    /// update is ambiguous there.
    pub literal_paper_update: bool,
    pub scan_order: ScanOrder,
    pub solve: SolveSettings,
}

impl RunOptions {
    pub fn new(variant: Variant) -> Self {
        RunOptions {
            variant,
            max_outer: 1000,
            wall_limit: None,
            w_min: 1e-9,
            literal_paper_update: false,
            scan_order: ScanOrder::Index,
            solve: SolveSettings::default(),
        }
    }
}

/// Per-iteration record of a run.
#[derive(Debug, Clone)]
pub struct IterRecord {
    pub k: usize,
    /// Ψ(M(ξ^k)).
    pub psi: f64,
    /// Subproblem certificate gap on X^k.
    pub cert_gap: f64,
    /// Violator index x^k (None when the termination test fired).
    pub violator: Option<usize>,
    /// ψ(M(ξ^k), x^k) — for strict variants the full-space minimum.
    pub violator_psi: f64,
    pub n_active: usize,
    pub n_support: usize,
    pub wall_ms: f64,
}

/// Final status of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    TerminatedEpsOptimal,
    IterationCap,
    Infeasible,
}

/// Full trace of an adaptive or baseline run.
#[derive(Debug, Clone)]
pub struct RunTrace {
    pub records: Vec<IterRecord>,
    pub status: RunStatus,
    /// Full-space min of ψ(M(ξ_final), ·): the final certificate.
    pub final_psi_min: f64,
}

impl RunTrace {
    /// Number of outer iterations performed.
    pub fn iterations(&self) -> usize {
        self.records.len()
    }
}

/// Exact worst-violator search: min over the full space of ψ(M, ·) by
/// enumeration, ties broken by smallest index. `delta_under` is recorded by
/// the caller only — enumeration returns an exact minimizer, which is in
/// particular δ̲-approximate.
pub fn worst_violator(
    space: &DesignSpace,
    spec: &CriterionSpec,
    m: &SymMatrix,
    _delta_under: f64,
) -> Result<(usize, f64), CriterionError> {
    let g = criteria::grad(spec, m)?;
    let base = g.inner(m);
    let (mut i_min, mut v_min) = (0usize, f64::INFINITY);
    for i in 0..space.len() {
        let v = g.inner(space.atom(i)) - base;
        if v < v_min {
            (i_min, v_min) = (i, v);
        }
    }
    Ok((i_min, v_min))
}

/// First index in scan order with ψ(M, x) < −ε, or None after a full scan
/// (which certifies the violator set is empty).
pub fn any_violator(
    space: &DesignSpace,
    spec: &CriterionSpec,
    m: &SymMatrix,
    eps: f64,
    scan_order: ScanOrder,
) -> Result<Option<usize>, CriterionError> {
    let g = criteria::grad(spec, m)?;
    let base = g.inner(m);
    let scan: Vec<usize> = match scan_order {
        ScanOrder::Index => (0..space.len()).collect(),
        ScanOrder::Seeded(seed) => {
            let mut idx: Vec<usize> = (0..space.len()).collect();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            idx.shuffle(&mut rng);
            idx
        }
    };
    for i in scan {
        if g.inner(space.atom(i)) - base < -eps {
            return Ok(Some(i));
        }
    }
    Ok(None)
}

/// Runs an adaptive discretization algorithm.
pub fn run(
    space: &DesignSpace,
    spec: &CriterionSpec,
    x0: &[usize],
    sched: &ToleranceSchedule,
    opts: &RunOptions,
) -> Result<(Design, RunTrace), AdaptiveError> {
    if x0.is_empty() {
        return Err(AdaptiveError::InvalidInput("X0 must be non-empty".into()));
    }
    let mut active: Vec<usize> = x0.to_vec();
    active.sort_unstable();
    active.dedup();

    let start = std::time::Instant::now();
    let mut records: Vec<IterRecord> = Vec::new();
    let mut xi_prev: Option<Design> = None;

    for k in 0..opts.max_outer {
        let mut solve_settings = opts.solve.clone();
        solve_settings.delta_bar = sched.delta_bar(k);
        solve_settings.w_min = solve_settings.w_min.max(0.0);
        let (xi, cert) = match solve_weights(space, &active, spec, &solve_settings, xi_prev.as_ref())
        {
            Ok(r) => r,
            Err(SolveError::InfeasibleStart) => {
                return Ok((
                    xi_prev.unwrap_or_else(|| Design::dirac(active[0])),
                    RunTrace {
                        records,
                        status: RunStatus::Infeasible,
                        final_psi_min: f64::NEG_INFINITY,
                    },
                ));
            }
            Err(e) => return Err(e.into()),
        };
        let m = info_matrix(space, &xi);
        let psi = criteria::eval(spec, &m)?.unwrap_finite();
        let delta_under_k = sched.delta_under(k);

        // Step 2: violator search and termination test.
        let (violator, violator_psi, terminate) = if opts.variant.is_strict() {
            let (i, v) = worst_violator(space, spec, &m, delta_under_k)?;
            let term = v >= -sched.eps + delta_under_k;
            (Some(i), v, term)
        } else {
            match any_violator(space, spec, &m, sched.eps, opts.scan_order)? {
                Some(i) => {
                    let v = criteria::sensitivity(spec, &m, space.atom(i))?;
                    (Some(i), v, false)
                }
                None => (None, f64::NAN, true),
            }
        };

        records.push(IterRecord {
            k,
            psi,
            cert_gap: cert.gap,
            violator,
            violator_psi,
            n_active: active.len(),
            n_support: xi.support_size(),
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
        });

        if terminate {
            // Certify over the full space (for strict variants this is the
            // already-computed full-space minimum).
            let final_psi_min = if opts.variant.is_strict() {
                violator_psi
            } else {
                worst_violator(space, spec, &m, 0.0)?.1
            };
            return Ok((
                xi,
                RunTrace { records, status: RunStatus::TerminatedEpsOptimal, final_psi_min },
            ));
        }

        if let Some(limit) = opts.wall_limit {
            if start.elapsed() > limit {
                let final_psi_min = worst_violator(space, spec, &m, 0.0)?.1;
                return Ok((
                    xi,
                    RunTrace { records, status: RunStatus::IterationCap, final_psi_min },
                ));
            }
        }

        // Step 3: refine the discretization.
        let xk = violator.expect("non-terminating iteration has a violator");
        if opts.variant.is_exchange() && !opts.literal_paper_update {
            let pruned = prune(&xi, opts.w_min)
                .map_err(|e| AdaptiveError::InvalidInput(format!("prune failed: {e}")))?;
            active = pruned.support();
        }
        if !active.contains(&xk) {
            active.push(xk);
            active.sort_unstable();
        }
        xi_prev = Some(xi);
    }

    // Iteration cap reached.
    let xi = xi_prev.unwrap_or_else(|| Design::dirac(active[0]));
    let m = info_matrix(space, &xi);
    let final_psi_min = worst_violator(space, spec, &m, 0.0)?.1;
    Ok((xi, RunTrace { records, status: RunStatus::IterationCap, final_psi_min }))
}

/// Smallest k ≥ 2 with (2/(k+2))·(Ψ(M(ξ¹)) − Ψ̲* + 2C′) ≤ ε − δ̲, where
/// C′ = L·diam²/2 + (c̄ + c̲)/2: an a-priori termination index under the
/// sublinear-rate hypotheses.
pub fn iteration_bound_sublinear(
    psi1_minus_lb: f64,
    l: f64,
    diam: f64,
    c_bar: f64,
    c_under: f64,
    eps: f64,
    delta_under_sup: f64,
) -> Result<u64, AdaptiveError> {
    if eps <= delta_under_sup {
        return Err(AdaptiveError::InvalidInput(format!(
            "need eps > delta_under_sup, got {eps} <= {delta_under_sup}"
        )));
    }
    let c_prime = l * diam * diam / 2.0 + (c_bar + c_under) / 2.0;
    let numerator = psi1_minus_lb + 2.0 * c_prime;
    let rhs = eps - delta_under_sup;
    let satisfied = |k: u64| 2.0 / (k as f64 + 2.0) * numerator <= rhs;
    let mut k = ((2.0 * numerator / rhs - 2.0).ceil().max(2.0)) as u64;
    // Guard against float rounding at the boundary.
    while !satisfied(k) {
        k += 1;
    }
    while k > 2 && satisfied(k - 1) {
        k -= 1;
    }
    Ok(k)
}

/// min{k ∈ ℕ₀ : r^k·h₀ ≤ ε} for a linear rate r ∈ (0, 1).
pub fn iteration_bound_linear(h0: f64, r: f64, eps: f64) -> Result<u64, AdaptiveError> {
    if !(0.0 < r && r < 1.0) {
        return Err(AdaptiveError::InvalidInput(format!("need r in (0,1), got {r}")));
    }
    if !(eps > 0.0) || h0 < 0.0 {
        return Err(AdaptiveError::InvalidInput("need eps > 0 and h0 >= 0".into()));
    }
    if h0 <= eps {
        return Ok(0);
    }
    let mut k = ((eps / h0).ln() / r.ln()).ceil().max(0.0) as u64;
    while r.powi(k as i32) * h0 > eps {
        k += 1;
    }
    while k > 0 && r.powi(k as i32 - 1) * h0 <= eps {
        k -= 1;
    }
    Ok(k)
}
