//! Finite design spaces and designs.
//!
//! A [`DesignSpace`] pairs a finite list of input points with their atoms
//! m(x) = J(x)ᵀ ς⁻¹ J(x); a [`Design`] is a probability vector over the
//! space's indices with positive weights. Information matrices are weighted
//! sums of atoms, so every M(ξ) lies in the convex hull of the atoms, and any
//! design can be reduced to at most d(d+1)/2 + 1 support points without
//! changing its information matrix (Carathéodory).

use crate::matcone::{eig_sym, SymMatrix};
use nalgebra::DMatrix;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DesignError {
    #[error("invalid design space: {0}")]
    InvalidSpace(String),
    #[error("invalid design: {0}")]
    InvalidDesign(String),
}

/// A finite design space: points with their precomputed atoms.
#[derive(Debug, Clone)]
pub struct DesignSpace {
    points: Vec<Vec<f64>>,
    atoms: Vec<SymMatrix>,
    labels: Option<Vec<String>>,
}

impl DesignSpace {
    pub fn new(
        points: Vec<Vec<f64>>,
        atoms: Vec<SymMatrix>,
        labels: Option<Vec<String>>,
    ) -> Result<Self, DesignError> {
        if points.is_empty() || points.len() != atoms.len() {
            return Err(DesignError::InvalidSpace(format!(
                "need equally many points and atoms, >= 1 (got {} points, {} atoms)",
                points.len(),
                atoms.len()
            )));
        }
        if let Some(l) = &labels {
            if l.len() != points.len() {
                return Err(DesignError::InvalidSpace("label count mismatch".into()));
            }
        }
        let d = atoms[0].dim();
        for (i, a) in atoms.iter().enumerate() {
            if a.dim() != d {
                return Err(DesignError::InvalidSpace(format!("atom {i} has wrong dimension")));
            }
            let s = eig_sym(a).map_err(|e| DesignError::InvalidSpace(e.to_string()))?;
            if s.lambda_min() < -1e-10 * s.lambda_max().abs().max(1.0) {
                return Err(DesignError::InvalidSpace(format!(
                    "atom {i} is not PSD (lambda_min = {:.3e})",
                    s.lambda_min()
                )));
            }
        }
        for i in 0..points.len() {
            for j in (i + 1)..points.len() {
                if points[i] == points[j] {
                    return Err(DesignError::InvalidSpace(format!(
                        "duplicate point at indices {i} and {j}"
                    )));
                }
            }
        }
        Ok(DesignSpace { points, atoms, labels })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false // invariant: at least one point
    }

    /// Matrix dimension d of the atoms.
    pub fn matrix_dim(&self) -> usize {
        self.atoms[0].dim()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i]
    }

    pub fn atom(&self, i: usize) -> &SymMatrix {
        &self.atoms[i]
    }

    pub fn atoms(&self) -> &[SymMatrix] {
        &self.atoms
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn label(&self, i: usize) -> Option<&str> {
        self.labels.as_ref().map(|l| l[i].as_str())
    }
}

/// A design: sparse probability vector over design-space indices.
///
/// Entries are kept sorted by index, with unique indices and strictly
/// positive weights normalized to sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    entries: Vec<(usize, f64)>,
}

impl Design {
    pub fn new(mut entries: Vec<(usize, f64)>) -> Result<Self, DesignError> {
        if entries.is_empty() {
            return Err(DesignError::InvalidDesign("design needs at least one entry".into()));
        }
        entries.sort_by_key(|e| e.0);
        for w in entries.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(DesignError::InvalidDesign(format!("duplicate index {}", w[0].0)));
            }
        }
        let total: f64 = entries.iter().map(|e| e.1).sum();
        if !(total > 0.0) || entries.iter().any(|e| e.1 <= 0.0) {
            return Err(DesignError::InvalidDesign(
                "weights must be strictly positive".into(),
            ));
        }
        for e in &mut entries {
            e.1 /= total;
        }
        Ok(Design { entries })
    }

    /// Point mass at a single index.
    pub fn dirac(index: usize) -> Self {
        Design { entries: vec![(index, 1.0)] }
    }

    /// Uniform design over the given indices.
    pub fn uniform(indices: &[usize]) -> Result<Self, DesignError> {
        let w = 1.0 / indices.len() as f64;
        Design::new(indices.iter().map(|&i| (i, w)).collect())
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn support(&self) -> Vec<usize> {
        self.entries.iter().map(|e| e.0).collect()
    }

    pub fn support_size(&self) -> usize {
        self.entries.len()
    }

    pub fn weight_of(&self, index: usize) -> f64 {
        self.entries
            .iter()
            .find(|e| e.0 == index)
            .map(|e| e.1)
            .unwrap_or(0.0)
    }
}

/// Information matrix M(ξ) = Σ w_i · atom_i.
pub fn info_matrix(space: &DesignSpace, xi: &Design) -> SymMatrix {
    let d = space.matrix_dim();
    let mut m = SymMatrix::zeros(d);
    for &(i, w) in xi.entries() {
        m = m.add_scaled(space.atom(i), w);
    }
    m
}

/// Convex mixture (1−α)ξ + αη, merged by index.
pub fn mix(xi: &Design, eta: &Design, alpha: f64) -> Design {
    assert!((0.0..=1.0).contains(&alpha));
    if alpha == 0.0 {
        return xi.clone();
    }
    if alpha == 1.0 {
        return eta.clone();
    }
    let mut acc: Vec<(usize, f64)> = Vec::new();
    for &(i, w) in xi.entries() {
        acc.push((i, (1.0 - alpha) * w));
    }
    for &(i, w) in eta.entries() {
        match acc.iter_mut().find(|e| e.0 == i) {
            Some(e) => e.1 += alpha * w,
            None => acc.push((i, alpha * w)),
        }
    }
    Design::new(acc).expect("mixture of valid designs is valid")
}

/// Drops entries with weight < w_min and renormalizes; errors if nothing
/// survives.
pub fn prune(xi: &Design, w_min: f64) -> Result<Design, DesignError> {
    assert!((0.0..0.5).contains(&w_min), "w_min must lie in [0, 0.5)");
    let kept: Vec<(usize, f64)> = xi
        .entries()
        .iter()
        .copied()
        .filter(|e| e.1 >= w_min)
        .collect();
    if kept.is_empty() {
        return Err(DesignError::InvalidDesign(
            "all weights below the pruning threshold".into(),
        ));
    }
    Design::new(kept)
}

/// Carathéodory support reduction: returns a design with at most
/// d(d+1)/2 + 1 support points and the same information matrix.
///
/// Each round finds a null-space direction c of the affine system
/// {Σ w_i (atom_i, 1) fixed}, takes the largest feasible step w − t·c ≥ 0
/// (max ratio test, ties by smallest index), and drops the zeroed entry.
pub fn caratheodory_reduce(space: &DesignSpace, xi: &Design) -> Design {
    let d = space.matrix_dim();
    let target = d * (d + 1) / 2 + 1;
    let mut entries: Vec<(usize, f64)> = xi.entries().to_vec();

    while entries.len() > target {
        let n = entries.len();
        // Rows: the d(d+1)/2 distinct atom entries plus the constant 1.
        let nrows = d * (d + 1) / 2 + 1;
        let mut a = DMatrix::zeros(nrows, n);
        for (col, &(idx, _)) in entries.iter().enumerate() {
            let atom = space.atom(idx);
            let mut row = 0;
            for i in 0..d {
                for j in i..d {
                    a[(row, col)] = atom.get(i, j);
                    row += 1;
                }
            }
            a[(row, col)] = 1.0;
        }
        // Null vector of A as the smallest eigenvector of AᵀA (the thin SVD
        // would omit null directions); exists since n > nrows.
        let gram = crate::matcone::SymMatrix::from_dmatrix(&(a.transpose() * &a));
        let spec = eig_sym(&gram).expect("eigendecomposition failed");
        let c: Vec<f64> = (0..n).map(|j| spec.eigenvectors[(j, 0)]).collect();

        // Largest feasible step t with w − t·c ≥ 0: min over c_i > 0 of
        // w_i/c_i. Flip the sign of c if it has no positive component.
        let step = |c: &[f64]| -> Option<(f64, usize)> {
            let mut best: Option<(f64, usize)> = None;
            for (i, &ci) in c.iter().enumerate() {
                if ci > 1e-14 {
                    let t = entries[i].1 / ci;
                    if best.map_or(true, |(bt, _)| t < bt - 1e-18 * bt.abs()) {
                        best = Some((t, i));
                    }
                }
            }
            best
        };
        let (t, drop_idx, c) = match step(&c) {
            Some((t, i)) => (t, i, c),
            None => {
                let neg: Vec<f64> = c.iter().map(|x| -x).collect();
                match step(&neg) {
                    Some((t, i)) => (t, i, neg),
                    // Degenerate null vector; give up (design returned as-is).
                    None => break,
                }
            }
        };
        for (i, e) in entries.iter_mut().enumerate() {
            e.1 -= t * c[i];
        }
        entries.remove(drop_idx);
        // Guard against roundoff: clamp stray negatives and renormalize.
        for e in entries.iter_mut() {
            e.1 = e.1.max(0.0);
        }
        entries.retain(|e| e.1 > 0.0);
        let total: f64 = entries.iter().map(|e| e.1).sum();
        for e in entries.iter_mut() {
            e.1 /= total;
        }
    }
    Design::new(entries).expect("reduction preserves a valid design")
}
