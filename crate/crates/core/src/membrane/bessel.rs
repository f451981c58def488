//! Bessel functions of the first kind J_m and their positive zeros.
//!
//! Two evaluation regimes: the ascending power series for |x| ≤ 12,
//! where its cancellation stays near machine precision, and Miller's
//! downward-recurrence algorithm beyond, normalized by the identity
//! J₀(x) + 2·Σ_{k≥1} J_{2k}(x) = 1. The series region validates the
//! recurrence region in the overlap (see tests), so no asymptotic
//! expansion with its matching error is needed.
//!
//! Zeros come from bracketed bisection plus a Newton polish. Order 0
//! brackets come from the McMahon expansion; higher orders use the
//! interlacing theorem z_{m−1,n} < z_{m,n} < z_{m−1,n+1}, which gives
//! guaranteed sign changes and never skips a root.

use crate::error::{Error, Result};

/// Largest argument handled by the ascending series before switching
/// to downward recurrence.
const SERIES_MAX_X: f64 = 12.0;

/// Absolute accuracy target for computed zeros.
pub const ZERO_ATOL: f64 = 1e-12;

/// J_m(x) for a single order m ≥ 0.
pub fn bessel_j(m: usize, x: f64) -> f64 {
    if x < 0.0 {
        // J_m(−x) = (−1)^m J_m(x).
        let v = bessel_j(m, -x);
        return if m % 2 == 0 { v } else { -v };
    }
    if x <= SERIES_MAX_X {
        series_j(m, x)
    } else {
        miller_ladder(m, x)[m]
    }
}

/// J_0..J_{m_max} at a common argument, one pass.
pub fn bessel_j_ladder(m_max: usize, x: f64) -> Vec<f64> {
    if x < 0.0 {
        let mut v = bessel_j_ladder(m_max, -x);
        for (m, val) in v.iter_mut().enumerate() {
            if m % 2 == 1 {
                *val = -*val;
            }
        }
        return v;
    }
    if x <= SERIES_MAX_X {
        (0..=m_max).map(|m| series_j(m, x)).collect()
    } else {
        miller_ladder(m_max, x)
    }
}

/// d/dx J_m(x) via J_m' = J_{m−1} − (m/x)·J_m (and J_0' = −J_1).
pub fn bessel_j_prime(m: usize, x: f64) -> f64 {
    if m == 0 {
        return -bessel_j(1, x);
    }
    if x == 0.0 {
        // J_1'(0) = 1/2, higher orders flat at the origin.
        return if m == 1 { 0.5 } else { 0.0 };
    }
    let j = bessel_j_ladder(m, x);
    j[m - 1] - (m as f64 / x) * j[m]
}

/// Ascending series Σ (−1)^k (x/2)^{m+2k} / (k!(m+k)!), summed until
/// terms stop mattering. Reliable only for moderate x (callers gate at
/// [`SERIES_MAX_X`]): the terms reach ~(x/2)^{2k}/(k!)² before
/// alternation cancels them, which at x = 12 costs ~4 digits and past
/// x ≈ 25 would cost the whole mantissa.
fn series_j(m: usize, x: f64) -> f64 {
    if x == 0.0 {
        return if m == 0 { 1.0 } else { 0.0 };
    }
    let half = x / 2.0;
    // Leading term (x/2)^m / m!.
    let mut term = 1.0;
    for k in 1..=m {
        term *= half / k as f64;
    }
    let q = half * half;
    let mut sum = term;
    for k in 1..200 {
        term *= -q / (k as f64 * (m + k) as f64);
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(1e-30) {
            break;
        }
    }
    sum
}

/// Miller's algorithm: run the three-term recurrence
/// J_{k−1} = (2k/x)J_k − J_{k+1} downward from a start order well above
/// both m and x with arbitrary tiny seeds. The minimal solution (the
/// J's) dominates going down; dividing by the Neumann sum
/// f₀ + 2f₂ + 2f₄ + ... fixes the scale.
fn miller_ladder(m_max: usize, x: f64) -> Vec<f64> {
    debug_assert!(x > 0.0);
    let mut start = m_max.max(x.ceil() as usize) + 40;
    if start % 2 == 1 {
        start += 1;
    }
    let mut out = vec![0.0f64; m_max + 1];
    let mut f_next = 0.0f64; // f_{k+1}
    let mut f = 1e-30f64; // f_k at k = start
    let mut norm = 0.0f64; // accumulates f₀ + 2·Σ f_{2j}
    let mut k = start;
    loop {
        if k <= m_max {
            out[k] = f;
        }
        if k % 2 == 0 {
            norm += if k == 0 { f } else { 2.0 * f };
        }
        if k == 0 {
            break;
        }
        let f_prev = (2.0 * k as f64 / x) * f - f_next;
        f_next = f;
        f = f_prev;
        k -= 1;
        // Growth is geometric below the turning point; rescale before
        // anything overflows.
        if f.abs() > 1e250 {
            let scale = 1e-250;
            f *= scale;
            f_next *= scale;
            norm *= scale;
            for v in &mut out {
                *v *= scale;
            }
        }
    }
    for v in &mut out {
        *v /= norm;
    }
    out
}

/// The n-th positive zero z_{mn} of J_m (n is 1-based), accurate to
/// [`ZERO_ATOL`].
pub fn bessel_zero(m: usize, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("Bessel zeros are indexed from n = 1"));
    }
    let table = bessel_zeros_table(m, n)?;
    Ok(table[m][n - 1])
}

/// Zeros z_{mn} for all m = 0..=m_max, n = 1..=n_max. Row m of the
/// result holds n_max entries, strictly increasing.
///
/// Order 0 is found directly from McMahon-seeded brackets; each later
/// order is bracketed between consecutive zeros of the previous order,
/// so the ladder needs n_max + m_max zeros at order 0.
pub fn bessel_zeros_table(m_max: usize, n_max: usize) -> Result<Vec<Vec<f64>>> {
    if n_max == 0 {
        return Err(Error::invalid("need at least one zero per order"));
    }
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(m_max + 1);
    let mut row0 = Vec::with_capacity(n_max + m_max);
    for n in 1..=(n_max + m_max) {
        row0.push(order0_zero(n)?);
    }
    rows.push(row0);
    for m in 1..=m_max {
        let prev = &rows[m - 1];
        let count = n_max + m_max - m;
        let mut row = Vec::with_capacity(count);
        for n in 0..count {
            row.push(refine_zero(m, prev[n], prev[n + 1])?);
        }
        rows.push(row);
    }
    for row in &mut rows {
        row.truncate(n_max);
    }
    Ok(rows)
}

/// n-th zero of J₀: McMahon guess β + 1/(8β) (β = (n − 1/4)π), then
/// bracketed refinement. The guess is within ~5e-3 of the true zero
/// already at n = 1, so a ±0.5 bracket (zeros are ~π apart) is safe.
fn order0_zero(n: usize) -> Result<f64> {
    let beta = (n as f64 - 0.25) * std::f64::consts::PI;
    let guess = beta + 1.0 / (8.0 * beta);
    refine_zero(0, guess - 0.5, guess + 0.5)
}

/// Hybrid bisection/Newton root of J_m inside (lo, hi). The bracket
/// must contain exactly one simple zero; bisection guarantees progress
/// and Newton supplies the final digits.
fn refine_zero(m: usize, mut lo: f64, mut hi: f64) -> Result<f64> {
    let mut f_lo = bessel_j(m, lo);
    let f_hi = bessel_j(m, hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::Numerical(format!(
            "no sign change bracketing a zero of J_{m} in [{lo:.6}, {hi:.6}]"
        )));
    }
    // Bisect down to a tight interval.
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let f_mid = bessel_j(m, mid);
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-12 {
            break;
        }
    }
    // Newton polish from the midpoint; retreat to bisection if a step
    // ever leaves the bracket.
    let mut z = 0.5 * (lo + hi);
    for _ in 0..20 {
        let f = bessel_j(m, z);
        let d = bessel_j_prime(m, z);
        if d == 0.0 {
            break;
        }
        let step = f / d;
        let next = z - step;
        if next <= lo || next >= hi {
            z = 0.5 * (lo + hi);
            break;
        }
        z = next;
        if step.abs() < ZERO_ATOL {
            break;
        }
    }
    Ok(z)
}
