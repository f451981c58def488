//! Greedy sensor/actuator selection by column-pivoted QR, with an
//! optional per-location cost penalty.
//!
//! The candidate matrix `V` is r×n: one column per candidate location,
//! one row per basis mode (in practice `V = Ψ*`). Plain selection picks,
//! at each step, the column with the largest residual norm after
//! orthogonalization against the columns already chosen (implicitly, via
//! Householder reflections). Cost-aware selection subtracts `γ·η_j` from
//! each candidate's residual norm before taking the argmax, so expensive
//! locations must justify themselves with extra signal energy; `γ = 0`
//! reduces exactly to the plain pivoting order.

use ndarray::{Array2, ArrayView2};
use ndarray_linalg::Scalar;

use crate::error::{Error, Result};

/// Residual-norm floor for flagging rank deficiency, relative to the
/// largest initial column norm.
pub const RANK_DEFICIENCY_RTOL: f64 = 1e-12;

/// Per-location costs η plus the scalar weighting γ that scales them in
/// the pivoting criterion.
#[derive(Debug, Clone, PartialEq)]
pub struct CostField {
    pub eta: Vec<f64>,
    pub gamma: f64,
}

impl CostField {
    /// Validating constructor: η non-negative and finite, γ non-negative
    /// and finite.
    pub fn new(eta: Vec<f64>, gamma: f64) -> Result<Self> {
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(Error::invalid(format!("gamma must be finite and ≥ 0, got {gamma}")));
        }
        if let Some((j, &bad)) = eta.iter().enumerate().find(|(_, &e)| !(e >= 0.0) || !e.is_finite())
        {
            return Err(Error::invalid(format!("eta[{j}] must be finite and ≥ 0, got {bad}")));
        }
        Ok(CostField { eta, gamma })
    }

    /// Zero cost on `n` locations: selection with this field is identical
    /// to plain pivoting.
    pub fn zero(n: usize) -> Self {
        CostField { eta: vec![0.0; n], gamma: 0.0 }
    }

    /// Restricts the field to a subset of locations, preserving γ.
    /// `idx[k]` gives the original location of the k-th kept entry.
    pub fn subset(&self, idx: &[usize]) -> Result<Self> {
        let eta = idx
            .iter()
            .map(|&j| {
                self.eta
                    .get(j)
                    .copied()
                    .ok_or_else(|| Error::invalid(format!("cost subset index {j} out of range")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(CostField { eta, gamma: self.gamma })
    }

    /// Total cost of a set of locations.
    pub fn total(&self, indices: &[usize]) -> f64 {
        indices.iter().map(|&j| self.eta[j]).sum()
    }
}

/// An ordered set of selected locations. Order is pivot order: the
/// first index was chosen first and dominates the greedy criterion.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    /// Selected locations, pivot order, pairwise distinct.
    pub indices: Vec<usize>,
    /// Cost η of each selected location (same order as `indices`).
    pub costs: Vec<f64>,
    /// Sum of `costs`.
    pub total_cost: f64,
    /// Weighting γ in effect when the selection was made.
    pub gamma_used: f64,
    /// |r_kk| recorded at each pivot step — the residual norm of the
    /// chosen column. Their running product is the volume |det R_{1:k,1:k}|.
    pub pivot_magnitudes: Vec<f64>,
    /// Set when some pivot's residual norm fell below
    /// [`RANK_DEFICIENCY_RTOL`] times the largest initial column norm.
    pub rank_deficient: bool,
    /// Set for selections assembled by the half-principled/half-random
    /// strategy rather than pure pivoting.
    pub hybrid: bool,
}

impl Selection {
    /// Number of selected locations.
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Materializes the p×n measurement operator C whose rows are unit
    /// vectors at the selected locations.
    pub fn selection_matrix(&self, n: usize) -> Array2<f64> {
        let mut c = Array2::zeros((self.indices.len(), n));
        for (k, &j) in self.indices.iter().enumerate() {
            c[[k, j]] = 1.0;
        }
        c
    }
}

/// Plain column-pivoted QR selection: returns the first `p` pivot
/// locations, chosen by maximal residual column norm.
pub fn qr_pivot_select<A>(v: &ArrayView2<A>, p: usize) -> Result<Selection>
where
    A: Scalar<Real = f64>,
{
    qr_pivot_select_cost(v, &CostField::zero(v.ncols()), p)
}

/// Cost-penalized column-pivoted QR selection. At step k the pivot is
/// the unselected column maximizing ‖V_{k:r,j}‖ − γ·η_j, where the norm
/// is taken over the rows not yet eliminated. Costs follow their columns
/// through the permutation, so η_j always refers to the candidate's own
/// location. Argmax ties go to the lowest original location index.
pub fn qr_pivot_select_cost<A>(v: &ArrayView2<A>, cost: &CostField, p: usize) -> Result<Selection>
where
    A: Scalar<Real = f64>,
{
    let (r, n) = v.dim();
    if r == 0 || n == 0 {
        return Err(Error::invalid("candidate matrix must be nonempty"));
    }
    if p == 0 || p > r.min(n) {
        return Err(Error::invalid(format!(
            "p must satisfy 1 ≤ p ≤ min(r, n) = {}, got {p}",
            r.min(n)
        )));
    }
    if cost.eta.len() != n {
        return Err(Error::dims(format!(
            "cost field has {} entries but there are {n} candidates",
            cost.eta.len()
        )));
    }
    // Re-validate in case the CostField was built by hand.
    if !(cost.gamma >= 0.0 && cost.gamma.is_finite()) {
        return Err(Error::invalid(format!("gamma must be finite and ≥ 0, got {}", cost.gamma)));
    }
    if cost.eta.iter().any(|&e| !(e >= 0.0) || !e.is_finite()) {
        return Err(Error::invalid("eta entries must be finite and ≥ 0"));
    }
    if v.iter().any(|x| !x.re().is_finite() || !x.im().is_finite()) {
        return Err(Error::NonFinite("candidate matrix entry".into()));
    }

    let mut w = v.to_owned();
    // perm[pos] = original location currently sitting in column `pos`.
    let mut perm: Vec<usize> = (0..n).collect();
    let mut eta = cost.eta.clone();
    let gamma = cost.gamma;

    let max_initial_norm =
        (0..n).map(|j| tail_norm(&w, 0, j)).fold(0.0f64, f64::max);
    let deficiency_floor = RANK_DEFICIENCY_RTOL * max_initial_norm;

    let mut indices = Vec::with_capacity(p);
    let mut pivot_magnitudes = Vec::with_capacity(p);
    let mut rank_deficient = false;

    for k in 0..p {
        let mut best = k;
        let mut best_score = f64::NEG_INFINITY;
        let mut best_norm = 0.0f64;
        for pos in k..n {
            let norm = tail_norm(&w, k, pos);
            let score = norm - gamma * eta[pos];
            if score > best_score || (score == best_score && perm[pos] < perm[best]) {
                best = pos;
                best_score = score;
                best_norm = norm;
            }
        }
        if best_norm <= deficiency_floor {
            rank_deficient = true;
        }
        if best != k {
            swap_columns(&mut w, k, best);
            perm.swap(k, best);
            eta.swap(k, best);
        }
        indices.push(perm[k]);
        pivot_magnitudes.push(best_norm);
        reflect_column(&mut w, k, best_norm);
    }

    if rank_deficient {
        log::warn!(
            "selection is rank-deficient: some pivot residual norm ≤ {:.3e}",
            deficiency_floor
        );
    }

    let costs: Vec<f64> = indices.iter().map(|&j| cost.eta[j]).collect();
    let total_cost = costs.iter().sum();
    Ok(Selection {
        indices,
        costs,
        total_cost,
        gamma_used: gamma,
        pivot_magnitudes,
        rank_deficient,
        hybrid: false,
    })
}

/// Drops all columns except `allowed`, returning the submatrix plus the
/// local→original index map. Selections computed on the restriction are
/// translated back with [`translate_selection`]. This is the mechanism
/// for completely inaccessible locations (an effectively infinite cost).
pub fn restrict_candidates<A>(
    v: &ArrayView2<A>,
    allowed: &[usize],
) -> Result<(Array2<A>, Vec<usize>)>
where
    A: Scalar<Real = f64>,
{
    let n = v.ncols();
    if allowed.is_empty() {
        return Err(Error::invalid("allowed index set is empty"));
    }
    let mut seen = vec![false; n];
    for &j in allowed {
        if j >= n {
            return Err(Error::invalid(format!("allowed index {j} out of range (n = {n})")));
        }
        if seen[j] {
            return Err(Error::invalid(format!("allowed index {j} repeated")));
        }
        seen[j] = true;
    }
    let sub = Array2::from_shape_fn((v.nrows(), allowed.len()), |(i, l)| v[[i, allowed[l]]]);
    Ok((sub, allowed.to_vec()))
}

/// Maps a selection made on restricted candidates back to original
/// indexing via the map returned by [`restrict_candidates`].
pub fn translate_selection(sel: &Selection, map: &[usize]) -> Result<Selection> {
    let indices = sel
        .indices
        .iter()
        .map(|&l| {
            map.get(l)
                .copied()
                .ok_or_else(|| Error::invalid(format!("local index {l} outside restriction map")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Selection { indices, ..sel.clone() })
}

/// Norm of rows `k..` of column `j`.
fn tail_norm<A: Scalar<Real = f64>>(w: &Array2<A>, k: usize, j: usize) -> f64 {
    (k..w.nrows()).map(|i| w[[i, j]].square()).sum::<f64>().sqrt()
}

fn swap_columns<A: Scalar>(w: &mut Array2<A>, a: usize, b: usize) {
    for i in 0..w.nrows() {
        let t = w[[i, a]];
        w[[i, a]] = w[[i, b]];
        w[[i, b]] = t;
    }
}

/// Householder step: reflects rows `k..` so column `k` becomes
/// (−sign(v₁)·‖v‖, 0, …)ᵀ, and applies the same reflector to the
/// remaining columns. A zero pivot column needs no reflection.
fn reflect_column<A: Scalar<Real = f64>>(w: &mut Array2<A>, k: usize, norm: f64) {
    let (r, n) = w.dim();
    if norm == 0.0 {
        return;
    }
    // v = x + sign(x₁)‖x‖e₁, the cancellation-free choice.
    let x1 = w[[k, k]];
    let sign = if x1.abs() > 0.0 { x1.div_real(x1.abs()) } else { A::one() };
    let mut v: Vec<A> = (k..r).map(|i| w[[i, k]]).collect();
    v[0] = v[0] + sign.mul_real(norm);
    let vnorm2: f64 = v.iter().map(|z| z.square()).sum();
    if vnorm2 == 0.0 {
        return;
    }
    w[[k, k]] = sign.mul_real(-norm);
    for i in (k + 1)..r {
        w[[i, k]] = A::zero();
    }
    for j in (k + 1)..n {
        let mut t = A::zero();
        for (off, i) in (k..r).enumerate() {
            t = t + v[off].conj() * w[[i, j]];
        }
        let scale = t.mul_real(2.0 / vnorm2);
        for (off, i) in (k..r).enumerate() {
            let delta = v[off] * scale;
            w[[i, j]] = w[[i, j]] - delta;
        }
    }
}
