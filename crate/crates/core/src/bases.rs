//! Data-driven basis construction: truncated SVD, a randomized range
//! finder, and the half-principled/half-random selection strategy.

use ndarray::{s, Array1, Array2, ArrayView2};
use ndarray_linalg::{JobSvd, QR, SVDDC};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg;
use crate::pivoting::{CostField, Selection};
use crate::reconstruct::{Basis, BasisKind};
use crate::seeds::{self, tag};

/// Truncated SVD of a snapshot matrix: X ≈ U_r Σ_r V_rᵀ.
#[derive(Debug, Clone)]
pub struct SVDFactors {
    pub u_r: Array2<f64>,
    pub sigma: Array1<f64>,
    pub v_r: Array2<f64>,
}

/// Leading `r` factors of the SVD, with a deterministic sign convention:
/// the largest-magnitude entry of each left singular vector is positive
/// (the matching right vector is flipped along, preserving the product).
pub fn svd_factors(x: &ArrayView2<f64>, r: usize) -> Result<SVDFactors> {
    let (n, m) = x.dim();
    if r == 0 || r > n.min(m) {
        return Err(Error::invalid(format!(
            "rank must satisfy 1 ≤ r ≤ min(n, m) = {}, got {r}",
            n.min(m)
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("snapshot matrix entry".into()));
    }
    let (u, sigma, vt) = x.svddc(JobSvd::Some)?;
    let u = u.expect("JobSvd::Some returns U");
    let vt = vt.expect("JobSvd::Some returns VT");
    let mut u_r = u.slice(s![.., ..r]).to_owned();
    let mut v_r = vt.slice(s![..r, ..]).t().to_owned();
    for j in 0..r {
        if dominant_entry(&u_r.column(j).to_owned()) < 0.0 {
            u_r.column_mut(j).mapv_inplace(|v| -v);
            v_r.column_mut(j).mapv_inplace(|v| -v);
        }
    }
    Ok(SVDFactors { u_r, sigma: sigma.slice(s![..r]).to_owned(), v_r })
}

/// Basis of the leading `r` left singular vectors of `x`.
pub fn svd_basis(x: &ArrayView2<f64>, r: usize) -> Result<Basis> {
    let f = svd_factors(x, r)?;
    Ok(Basis::real(f.u_r, BasisKind::Svd, format!("svd r={r}")))
}

/// Randomized orthonormal range approximation of `x`: Gaussian sketch,
/// optional power iterations for sharper spectra, QR orthonormalization,
/// truncation to `r` columns. Deterministic per seed.
pub fn randomized_basis(
    x: &ArrayView2<f64>,
    r: usize,
    oversample: usize,
    power_iters: usize,
    seed: u64,
) -> Result<Basis> {
    let (n, m) = x.dim();
    let k = r + oversample;
    if r == 0 || k > n.min(m) {
        return Err(Error::invalid(format!(
            "need 1 ≤ r and r + oversample ≤ min(n, m) = {}; got r = {r}, oversample = {oversample}",
            n.min(m)
        )));
    }
    if power_iters > 3 {
        return Err(Error::invalid(format!("power_iters is limited to 0–3, got {power_iters}")));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("snapshot matrix entry".into()));
    }
    let mut rng = seeds::rng(seed, &[tag::SKETCH]);
    let g = Array2::from_shape_fn((m, k), |_| rng.sample::<f64, _>(StandardNormal));
    let mut y = x.dot(&g);
    for _ in 0..power_iters {
        // Re-orthonormalize between half-steps so repeated products do
        // not collapse onto the dominant direction.
        let (q, _) = y.qr()?;
        let z = x.t().dot(&q);
        let (qz, _) = z.qr()?;
        y = x.dot(&qz);
    }
    let (q, _) = y.qr()?;
    let mut basis = q.slice(s![.., ..r]).to_owned();
    for j in 0..r {
        if dominant_entry(&basis.column(j).to_owned()) < 0.0 {
            basis.column_mut(j).mapv_inplace(|v| -v);
        }
    }
    Ok(Basis::real(
        basis,
        BasisKind::Randomized,
        format!("randomized r={r} oversample={oversample} power_iters={power_iters} seed={seed}"),
    ))
}

/// Half-principled selection: ⌈p/2⌉ locations from cost-penalized
/// pivoting on the ⌈p/2⌉-mode SVD basis of `x`, the rest drawn uniformly
/// from the unchosen locations. The returned selection is flagged
/// `hybrid`; pivot magnitudes cover only the pivoted half.
pub fn hybrid_select(
    x: &ArrayView2<f64>,
    p: usize,
    cost: &CostField,
    seed: u64,
) -> Result<Selection> {
    let n = x.nrows();
    if p == 0 || p > n {
        return Err(Error::invalid(format!("p must satisfy 1 ≤ p ≤ n = {n}, got {p}")));
    }
    let p_qr = p.div_ceil(2);
    let basis = svd_basis(x, p_qr.min(x.ncols()))?;
    let principled = basis.select(cost, p_qr.min(basis.r()))?;

    let mut chosen = vec![false; n];
    for &j in &principled.indices {
        chosen[j] = true;
    }
    let mut pool: Vec<usize> = (0..n).filter(|&j| !chosen[j]).collect();
    let n_random = p - principled.indices.len();
    let mut rng = seeds::rng(seed, &[tag::HYBRID_FILL]);
    let mut indices = principled.indices.clone();
    for i in 0..n_random {
        let j = rng.gen_range(i..pool.len());
        pool.swap(i, j);
        indices.push(pool[i]);
    }

    let costs: Vec<f64> = indices.iter().map(|&j| cost.eta[j]).collect();
    let total_cost = costs.iter().sum();
    Ok(Selection {
        indices,
        costs,
        total_cost,
        gamma_used: cost.gamma,
        pivot_magnitudes: principled.pivot_magnitudes,
        rank_deficient: principled.rank_deficient,
        hybrid: true,
    })
}

/// Fractional residual of projecting `x` onto the span of a basis:
/// ‖X − QQᵀX‖_F / ‖X‖_F. Assumes orthonormal columns.
pub fn projection_residual(x: &ArrayView2<f64>, q: &ArrayView2<f64>) -> f64 {
    let proj = q.dot(&q.t().dot(x));
    let diff = x.to_owned() - proj;
    linalg::frob(&diff.view()) / linalg::frob(x)
}

fn dominant_entry(col: &Array1<f64>) -> f64 {
    let mut best = 0.0f64;
    for &v in col.iter() {
        if v.abs() > best.abs() {
            best = v;
        }
    }
    best
}
