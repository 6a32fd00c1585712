//! Convergence-rate diagnostics.
//!
//! Computes the constants appearing in the sublinear and linear rate bounds —
//! polytope diameter, brute-force pyramidal width, sampled smoothness and
//! strong-convexity constants — and evaluates the bound curves against actual
//! iterate gaps. Sampled constants are one-sided: `l_est` ≤ the true
//! smoothness constant and `mu_est` ≥ the true strong-convexity constant, so
//! only inequalities sound under those directions are ever asserted.

use crate::criteria::{self, CriterionSpec};
use crate::design_space::{info_matrix, Design, DesignSpace};
use crate::matcone::SymMatrix;
use nalgebra::DVector;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RateError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("unsupported size: {0}")]
    UnsupportedSize(String),
    #[error("estimation failed: only {0} valid samples (need at least 10)")]
    TooFewSamples(usize),
    #[error(transparent)]
    Criterion(#[from] criteria::CriterionError),
}

/// Rate constants and bound-vs-actual comparison for one run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RateReport {
    pub l_est: f64,
    pub mu_est: f64,
    pub mu_psi_m_est: f64,
    pub c_psi_m_est: f64,
    pub diam: f64,
    pub pwidth: Option<f64>,
    pub r: Option<f64>,
    /// Pairs (h_k actual, bound value) per iteration.
    pub per_iteration: Vec<(f64, f64)>,
    /// Iterations where actual > bound + tol.
    pub violations: Vec<usize>,
    /// Tolerance used when computing `violations`.
    pub tol: f64,
    /// Sampled constants are one-sided estimates, not exact values.
    pub sample_based: bool,
}

impl RateReport {
    /// Records actual-vs-bound pairs and the violating indices at the given
    /// per-entry tolerance `tol_fn(bound)`.
    pub fn with_curves(mut self, actual: &[f64], bound: &[f64], tol: f64) -> Self {
        self.per_iteration = actual.iter().copied().zip(bound.iter().copied()).collect();
        self.violations = self
            .per_iteration
            .iter()
            .enumerate()
            .filter(|(_, (a, b))| *a > *b + tol * (1.0 + b.abs()))
            .map(|(i, _)| i)
            .collect();
        self.tol = tol;
        self
    }
}

/// Max pairwise Frobenius distance over the atoms; equals the diameter of
/// their convex hull since extreme points realize it.
pub fn diameter(atoms: &[SymMatrix]) -> Result<f64, RateError> {
    if atoms.is_empty() {
        return Err(RateError::InvalidInput("diameter of an empty set".into()));
    }
    let mut best: f64 = 0.0;
    for i in 0..atoms.len() {
        for j in (i + 1)..atoms.len() {
            best = best.max(atoms[i].add_scaled(&atoms[j], -1.0).frobenius_norm());
        }
    }
    Ok(best)
}

// ---- min-norm-point machinery (shared by vertex filtering, face detection,
// ---- and hull-to-hull distances) ----

/// dist(0, conv(points)) by away-step Frank–Wolfe on the quadratic
/// w ↦ ‖Σ w_i p_i‖² over the weight simplex; exact line search.
fn dist_to_origin_hull(points: &[DVector<f64>]) -> f64 {
    let n = points.len();
    assert!(n > 0);
    let scale = points.iter().map(|p| p.norm()).fold(0.0, f64::max).max(1.0);
    let mut w = vec![1.0 / n as f64; n];
    let mut x: DVector<f64> = points
        .iter()
        .zip(&w)
        .fold(DVector::zeros(points[0].len()), |acc, (p, wi)| acc + p * *wi);
    for _ in 0..100_000 {
        // Scores ⟨p_i, x⟩; FW vertex minimizes, away vertex maximizes over
        // the active set.
        let mut s_fw = (0usize, f64::INFINITY);
        let mut s_aw = (0usize, f64::NEG_INFINITY);
        for i in 0..n {
            let s = points[i].dot(&x);
            if s < s_fw.1 {
                s_fw = (i, s);
            }
            if w[i] > 0.0 && s > s_aw.1 {
                s_aw = (i, s);
            }
        }
        let gap = x.dot(&x) - s_fw.1;
        if gap <= 1e-16 * scale * scale {
            break;
        }
        let slope_fw = s_fw.1 - x.dot(&x);
        let slope_aw = x.dot(&x) - s_aw.1;
        let (d, gamma_max, idx, away): (DVector<f64>, f64, usize, bool) = if slope_aw < slope_fw {
            let gm = w[s_aw.0] / (1.0 - w[s_aw.0]).max(f64::MIN_POSITIVE);
            (&x - &points[s_aw.0], gm, s_aw.0, true)
        } else {
            (&points[s_fw.0] - &x, 1.0, s_fw.0, false)
        };
        let dd = d.dot(&d);
        if dd <= 0.0 {
            break;
        }
        let gamma = (-x.dot(&d) / dd).clamp(0.0, gamma_max);
        if gamma <= 0.0 {
            break;
        }
        if away {
            for wi in w.iter_mut() {
                *wi *= 1.0 + gamma;
            }
            w[idx] -= gamma;
            if w[idx] < 1e-15 {
                w[idx] = 0.0;
            }
        } else {
            for wi in w.iter_mut() {
                *wi *= 1.0 - gamma;
            }
            w[idx] += gamma;
        }
        x += d * gamma;
    }
    x.norm()
}

/// dist(conv(a), conv(b)) via dist(0, conv{a_i − b_j}).
fn hull_distance(a: &[DVector<f64>], b: &[DVector<f64>]) -> f64 {
    let mut diffs = Vec::with_capacity(a.len() * b.len());
    for p in a {
        for q in b {
            diffs.push(p - q);
        }
    }
    dist_to_origin_hull(&diffs)
}

fn vectorize(m: &SymMatrix) -> DVector<f64> {
    DVector::from_column_slice(m.entries())
}

/// Indices of the points that are vertices of the convex hull (a point is a
/// vertex iff it lies outside the hull of the others).
fn hull_vertices(pts: &[DVector<f64>], tol: f64) -> Vec<usize> {
    if pts.len() == 1 {
        return vec![0];
    }
    let mut verts = Vec::new();
    for i in 0..pts.len() {
        let others: Vec<DVector<f64>> = pts
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, p)| p - &pts[i])
            .collect();
        if dist_to_origin_hull(&others) > tol {
            verts.push(i);
        }
    }
    verts
}

/// Is the vertex subset S exactly the vertex set of a proper face of
/// conv(V)? Detected by strict supporting-hyperplane separation: after
/// quotienting aff(S), a separating normal exists iff 0 lies outside the hull
/// of the projected directions (Gordan's theorem).
fn is_face(verts: &[DVector<f64>], s: &[usize], tol: f64) -> bool {
    let v0 = &verts[s[0]];
    // Orthonormal basis of span{v − v0 : v ∈ S}.
    let mut basis: Vec<DVector<f64>> = Vec::new();
    for &i in &s[1..] {
        let mut d = &verts[i] - v0;
        for b in &basis {
            let c = d.dot(b);
            d -= b * c;
        }
        let nrm = d.norm();
        if nrm > tol {
            basis.push(d / nrm);
        }
    }
    let mut projected = Vec::new();
    for (i, v) in verts.iter().enumerate() {
        if s.contains(&i) {
            continue;
        }
        let mut c = v0 - v;
        for b in &basis {
            let dot = c.dot(b);
            c -= b * dot;
        }
        let nrm = c.norm();
        if nrm <= tol {
            // v lies in aff(S): no strict separation possible.
            return false;
        }
        projected.push(c / nrm);
    }
    dist_to_origin_hull(&projected) > 1e-7
}

/// Pyramidal width of conv(atoms) by brute force: min over proper non-empty
/// faces F of dist(F, conv(vertices ∖ F)). Non-vertex atoms are filtered out
/// first, so listed interior points do not change the result.
pub fn pwidth_bruteforce(atoms: &[SymMatrix]) -> Result<f64, RateError> {
    if atoms.is_empty() {
        return Err(RateError::InvalidInput("pwidth of an empty set".into()));
    }
    if atoms.len() > 8 {
        return Err(RateError::UnsupportedSize(format!(
            "pwidth_bruteforce supports at most 8 atoms, got {}",
            atoms.len()
        )));
    }
    if atoms[0].dim() > 6 {
        return Err(RateError::UnsupportedSize(format!(
            "pwidth_bruteforce supports matrix dimension at most 6, got {}",
            atoms[0].dim()
        )));
    }
    let pts: Vec<DVector<f64>> = atoms.iter().map(vectorize).collect();
    let scale = pts.iter().map(|p| p.norm()).fold(0.0, f64::max).max(1.0);
    let tol = 1e-9 * scale;
    let vert_idx = hull_vertices(&pts, tol);
    if vert_idx.len() < 2 {
        return Err(RateError::InvalidInput(
            "pwidth undefined: all atoms coincide".into(),
        ));
    }
    let verts: Vec<DVector<f64>> = vert_idx.iter().map(|&i| pts[i].clone()).collect();
    let n = verts.len();
    let mut best = f64::INFINITY;
    // Enumerate non-empty proper vertex subsets.
    for mask in 1u32..(1 << n) - 1 {
        let s: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        if !is_face(&verts, &s, tol) {
            continue;
        }
        let face: Vec<DVector<f64>> = s.iter().map(|&i| verts[i].clone()).collect();
        let rest: Vec<DVector<f64>> = (0..n)
            .filter(|i| !s.contains(i))
            .map(|i| verts[i].clone())
            .collect();
        best = best.min(hull_distance(&face, &rest));
    }
    if !best.is_finite() || best <= 0.0 {
        return Err(RateError::InvalidInput(
            "pwidth computation produced no positive face distance".into(),
        ));
    }
    Ok(best)
}

// ---- sampled smoothness / strong-convexity constants ----

/// Objective over the matrix cone for constant estimation. `None` marks a
/// point outside the (finite) domain; such samples are redrawn.
pub trait Objective {
    fn value(&self, m: &SymMatrix) -> Option<f64>;
    fn gradient(&self, m: &SymMatrix) -> Option<SymMatrix>;
}

impl Objective for CriterionSpec {
    fn value(&self, m: &SymMatrix) -> Option<f64> {
        criteria::eval(self, m).ok().and_then(|v| v.finite())
    }

    fn gradient(&self, m: &SymMatrix) -> Option<SymMatrix> {
        criteria::grad(self, m).ok()
    }
}

/// Quadratic test functional Ψ(M) = |M|²/2 with exact Hessian identity.
pub struct QuadraticObjective;

impl Objective for QuadraticObjective {
    fn value(&self, m: &SymMatrix) -> Option<f64> {
        Some(0.5 * m.frobenius_norm().powi(2))
    }

    fn gradient(&self, m: &SymMatrix) -> Option<SymMatrix> {
        Some(m.clone())
    }
}

/// Sampled constants; all one-sided (see module docs).
#[derive(Debug, Clone, Copy)]
pub struct ConstantEstimates {
    pub l_est: f64,
    pub mu_est: f64,
    pub mu_psi_m_est: f64,
    pub c_psi_m_est: f64,
    pub valid_samples: usize,
}

fn random_hull_point(atoms: &[SymMatrix], rng: &mut ChaCha8Rng) -> SymMatrix {
    // Exponential weights normalized to the simplex (flat Dirichlet).
    let mut w: Vec<f64> = (0..atoms.len())
        .map(|_| -(rng.gen::<f64>().max(f64::MIN_POSITIVE)).ln())
        .collect();
    let total: f64 = w.iter().sum();
    for wi in w.iter_mut() {
        *wi /= total;
    }
    let mut m = SymMatrix::zeros(atoms[0].dim());
    for (a, wi) in atoms.iter().zip(&w) {
        m = m.add_scaled(a, *wi);
    }
    m
}

fn bregman(obj: &dyn Objective, m: &SymMatrix, g: &SymMatrix, vm: f64, n: &SymMatrix) -> Option<f64> {
    let vn = obj.value(n)?;
    let diff = n.add_scaled(m, -1.0);
    Some(vn - vm - g.inner(&diff))
}

/// Samples Bregman-gap ratios over the atom hull.
///
/// `l_est`/`mu_est` are the max/min of 2·(Ψ(N)−Ψ(M)−⟨G,N−M⟩)/|N−M|² over
/// sampled pairs. `c_psi_m_est` samples the curvature-constant formula along
/// Frank–Wolfe directions M + α(m_M − M); `mu_psi_m_est` samples the
/// geometric strong-convexity formula with the step α(M,M′) =
/// ⟨−G, M′−M⟩ / ⟨G, n_M − m_M⟩ over pairs with descent alignment.
pub fn estimate_constants(
    obj: &dyn Objective,
    atoms: &[SymMatrix],
    samples: usize,
    seed: u64,
) -> Result<ConstantEstimates, RateError> {
    if atoms.is_empty() {
        return Err(RateError::InvalidInput("no atoms".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut l_est = f64::NEG_INFINITY;
    let mut mu_est = f64::INFINITY;
    let mut c_est = f64::NEG_INFINITY;
    let mut mu_geo_est = f64::INFINITY;
    let mut valid = 0usize;
    let max_draws = samples * 20;
    let mut draws = 0usize;
    while valid < samples && draws < max_draws {
        draws += 1;
        let m = random_hull_point(atoms, &mut rng);
        let n = random_hull_point(atoms, &mut rng);
        let (Some(vm), Some(g)) = (obj.value(&m), obj.gradient(&m)) else {
            continue;
        };
        let Some(breg) = bregman(obj, &m, &g, vm, &n) else {
            continue;
        };
        let diff = n.add_scaled(&m, -1.0);
        let dist2 = diff.frobenius_norm().powi(2);
        if dist2 > 1e-18 {
            let ratio = 2.0 * breg / dist2;
            l_est = l_est.max(ratio);
            mu_est = mu_est.min(ratio);
            valid += 1;
        } else {
            continue;
        }
        // Frank–Wolfe / away vertices at M (full support: sampled hull
        // points put mass on every atom).
        let scores: Vec<f64> = atoms.iter().map(|a| g.inner(a)).collect();
        let m_idx = scores
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        let n_idx = scores
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        // Curvature constant along the Frank–Wolfe direction.
        let alpha: f64 = rng.gen_range(0.05..=1.0);
        let fw_target = &atoms[m_idx];
        let step = m.scale(1.0 - alpha).add_scaled(fw_target, alpha);
        if let Some(b2) = bregman(obj, &m, &g, vm, &step) {
            c_est = c_est.max(2.0 / (alpha * alpha) * b2);
        }
        // Geometric strong convexity over the pair (M, N).
        let g_width = scores[n_idx] - scores[m_idx];
        let align = -g.inner(&diff);
        if g_width > 1e-14 && align > 1e-14 {
            let a = align / g_width;
            mu_geo_est = mu_geo_est.min(2.0 / (a * a) * breg);
        }
    }
    if valid < 10 {
        return Err(RateError::TooFewSamples(valid));
    }
    // The true constants satisfy μ_{Ψ,M} ≤ C_{Ψ,M}; independent one-sided
    // sampling can cross, so reconcile conservatively.
    if mu_geo_est.is_finite() && c_est.is_finite() && mu_geo_est > c_est {
        c_est = mu_geo_est;
    }
    Ok(ConstantEstimates {
        l_est,
        mu_est,
        mu_psi_m_est: mu_geo_est,
        c_psi_m_est: c_est,
        valid_samples: valid,
    })
}

/// Sublinear bound values (2/(k+2))·(h₁ + L·diam² + c̄ + c̲) for k = 2..=k_max.
pub fn sublinear_bound_curve(
    h1: f64,
    l: f64,
    diam: f64,
    c_bar: f64,
    c_under: f64,
    k_max: usize,
) -> Result<Vec<f64>, RateError> {
    for (name, v) in [("h1", h1), ("L", l), ("diam", diam), ("c_bar", c_bar), ("c_under", c_under)]
    {
        if v < 0.0 || !v.is_finite() {
            return Err(RateError::InvalidInput(format!("{name} must be non-negative, got {v}")));
        }
    }
    let c = h1 + l * diam * diam + c_bar + c_under;
    Ok((2..=k_max).map(|k| 2.0 / (k as f64 + 2.0) * c).collect())
}

/// Linear rate r = 1 − min{1/2, μ_{Ψ,M}/C_{Ψ,M}} and the curve r^k·h₀ for
/// k = 0..=k_max.
pub fn linear_bound_curve(
    h0: f64,
    mu_ratio: f64,
    k_max: usize,
) -> Result<(f64, Vec<f64>), RateError> {
    if !(mu_ratio > 0.0) {
        return Err(RateError::InvalidInput(format!("mu_ratio must be positive, got {mu_ratio}")));
    }
    if h0 < 0.0 {
        return Err(RateError::InvalidInput(format!("h0 must be non-negative, got {h0}")));
    }
    let r = 1.0 - mu_ratio.min(0.5);
    let curve = (0..=k_max).map(|k| r.powi(k as i32) * h0).collect();
    Ok((r, curve))
}

/// Coarser pwidth-based linear rate 1 − min{1/2, (μ/L)·(pwidth/diam)²};
/// always in [1/2, 1).
pub fn linear_rate_pwidth(mu: f64, l: f64, pwidth: f64, diam: f64) -> Result<f64, RateError> {
    if !(mu > 0.0 && l > 0.0 && pwidth > 0.0 && diam > 0.0) {
        return Err(RateError::InvalidInput("all rate inputs must be positive".into()));
    }
    let ratio = (mu / l) * (pwidth / diam).powi(2);
    Ok(1.0 - ratio.min(0.5))
}

/// Frank–Wolfe/away indices and the pairwise gap at ξ: m_M = argmin over all
/// atoms of ⟨G, a⟩, n_M = argmax over support atoms, g = ⟨G, a_n − a_m⟩.
/// Ties by smallest index.
pub fn active_set_quantities(
    space: &DesignSpace,
    spec: &CriterionSpec,
    xi: &Design,
) -> Result<(usize, usize, f64), RateError> {
    let m = info_matrix(space, xi);
    let g = criteria::grad(spec, &m)?;
    let mut m_idx = (0usize, f64::INFINITY);
    for i in 0..space.len() {
        let s = g.inner(space.atom(i));
        if s < m_idx.1 {
            m_idx = (i, s);
        }
    }
    let mut n_idx: Option<(usize, f64)> = None;
    for &i in &xi.support() {
        let s = g.inner(space.atom(i));
        if n_idx.map_or(true, |(_, best)| s > best) {
            n_idx = Some((i, s));
        }
    }
    let (n_i, n_s) = n_idx.expect("design has non-empty support");
    Ok((m_idx.0, n_i, n_s - m_idx.1))
}

/// Size of a greedily built subset pairwise separated by more than `radius`
/// in operator norm — a lower bound on the packing number.
pub fn greedy_packing_estimate(matrices: &[SymMatrix], radius: f64) -> Result<usize, RateError> {
    if !(radius > 0.0) {
        return Err(RateError::InvalidInput(format!("radius must be positive, got {radius}")));
    }
    let mut kept: Vec<&SymMatrix> = Vec::new();
    for m in matrices {
        if kept
            .iter()
            .all(|k| k.add_scaled(m, -1.0).operator_norm() > radius)
        {
            kept.push(m);
        }
    }
    Ok(kept.len())
}
