//! Small dense linear-algebra utilities shared across the crate:
//! truncated pseudoinverse, matrix exponential, a continuous Lyapunov
//! solver, log-determinants of SPD matrices, and real/complex glue.
//!
//! Everything here targets desk-scale problems (states ≤ a few hundred,
//! candidate sets ≤ ~10⁵); the implementations favor robustness and
//! auditability over asymptotics.

use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use ndarray_linalg::{Eigh, JobSvd, Lapack, Scalar, Solve, UPLO, SVDDC};

use crate::error::{Error, Result};

/// Relative singular-value cutoff used by [`pinv`]: directions with
/// σ ≤ `PINV_RTOL`·σ_max are treated as null.
pub const PINV_RTOL: f64 = 1e-12;

/// Frobenius norm, real or complex.
pub fn frob<A: Scalar<Real = f64>>(a: &ArrayView2<A>) -> f64 {
    a.iter().map(|x| x.square()).sum::<f64>().sqrt()
}

/// Moore–Penrose pseudoinverse via SVD with relative truncation at
/// [`PINV_RTOL`]. Returns the n×m pseudoinverse of an m×n input.
pub fn pinv<A>(a: &ArrayView2<A>) -> Result<Array2<A>>
where
    A: Scalar<Real = f64> + Lapack,
{
    if a.iter().any(|x| !x.re().is_finite() || !x.im().is_finite()) {
        return Err(Error::NonFinite("matrix passed to pseudoinverse".into()));
    }
    let (m, n) = a.dim();
    let (u, sigma, vt) = a.svddc(JobSvd::Some)?;
    let u = u.expect("JobSvd::Some returns U");
    let vt = vt.expect("JobSvd::Some returns VT");
    let smax = sigma.iter().cloned().fold(0.0f64, f64::max);
    if smax == 0.0 {
        // Zero matrix: pseudoinverse is the zero n×m matrix.
        return Ok(Array2::zeros((n, m)));
    }
    let cutoff = PINV_RTOL * smax;
    // A† = V Σ† U^H, keeping only directions above the cutoff.
    let k = sigma.iter().filter(|&&s| s > cutoff).count();
    let uh = u.slice(s![.., ..k]).mapv(|x| x.conj()).reversed_axes();
    let mut v = vt.slice(s![..k, ..]).mapv(|x| x.conj()).reversed_axes();
    for (j, mut col) in v.axis_iter_mut(Axis(1)).enumerate() {
        let inv = 1.0 / sigma[j];
        col.mapv_inplace(|x| x.mul_real(inv));
    }
    Ok(v.dot(&uh))
}

/// Matrix exponential by scaling-and-squaring with a degree-6 diagonal
/// Padé approximant. Scaling brings the 1-norm below 1/2, where the
/// Padé error is far below f64 resolution.
pub fn expm(a: &ArrayView2<f64>) -> Result<Array2<f64>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::dims(format!("expm needs square input, got {}×{}", n, a.ncols())));
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("matrix passed to expm".into()));
    }
    // 1-norm = max absolute column sum.
    let norm1 = (0..n)
        .map(|j| a.column(j).iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0f64, f64::max);
    let s = if norm1 > 0.5 { (norm1 / 0.5).log2().ceil() as u32 } else { 0 };
    let scaled = a.mapv(|x| x / f64::powi(2.0, s as i32));

    // Diagonal Padé [6/6]: N = Σ c_k A^k, D = Σ (−1)^k c_k A^k.
    let p = 6usize;
    let mut c = vec![1.0f64; p + 1];
    for k in 1..=p {
        c[k] = c[k - 1] * (p - k + 1) as f64 / ((k * (2 * p - k + 1)) as f64);
    }
    let eye = Array2::<f64>::eye(n);
    let mut power = eye.clone();
    let mut num = eye.clone();
    let mut den = eye.clone();
    for (k, &ck) in c.iter().enumerate().skip(1) {
        power = power.dot(&scaled);
        num = num + &power * ck;
        if k % 2 == 0 {
            den = den + &power * ck;
        } else {
            den = den - &power * ck;
        }
    }
    let mut x = solve_matrix(&den.view(), &num.view())?;
    for _ in 0..s {
        x = x.dot(&x);
    }
    Ok(x)
}

/// Solves A·X = B column-by-column with one LU factorization.
pub fn solve_matrix(a: &ArrayView2<f64>, b: &ArrayView2<f64>) -> Result<Array2<f64>> {
    use ndarray_linalg::Factorize;
    if a.nrows() != a.ncols() || a.nrows() != b.nrows() {
        return Err(Error::dims(format!(
            "solve_matrix: {}×{} vs {}×{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    let f = a.factorize()?;
    let mut out = Array2::zeros(b.dim());
    for (j, col) in b.axis_iter(Axis(1)).enumerate() {
        let x = f.solve(&col.to_owned())?;
        out.column_mut(j).assign(&x);
    }
    Ok(out)
}

/// Largest state dimension accepted by [`lyap_continuous`]. The solver
/// densifies the n²×n² Kronecker system, so memory grows as n⁴.
pub const LYAP_MAX_DIM: usize = 64;

/// Solves the continuous Lyapunov equation A·X + X·Aᵀ + Q = 0 by
/// vectorizing to (I⊗A + A⊗I)·vec(X) = −vec(Q) and solving densely.
///
/// Intended for small systems; refuses n > [`LYAP_MAX_DIM`].
pub fn lyap_continuous(a: &ArrayView2<f64>, q: &ArrayView2<f64>) -> Result<Array2<f64>> {
    let n = a.nrows();
    if a.ncols() != n || q.dim() != (n, n) {
        return Err(Error::dims(format!(
            "lyap_continuous: A is {}×{}, Q is {}×{}",
            a.nrows(),
            a.ncols(),
            q.nrows(),
            q.ncols()
        )));
    }
    if n > LYAP_MAX_DIM {
        return Err(Error::invalid(format!(
            "lyap_continuous is a dense Kronecker solver limited to n ≤ {LYAP_MAX_DIM}, got n = {n}"
        )));
    }
    // Column-stacked vectorization: vec(AX) = (I⊗A)vec(X),
    // vec(XAᵀ) = (A⊗I)vec(X).
    let nn = n * n;
    let mut m = Array2::<f64>::zeros((nn, nn));
    for j in 0..n {
        for i in 0..n {
            let row = i + n * j; // equation for entry (i, j)
            for k in 0..n {
                // (AX)(i,j) = Σ_k A[i,k] X[k,j]
                m[[row, k + n * j]] += a[[i, k]];
                // (XAᵀ)(i,j) = Σ_k X[i,k] A[j,k]
                m[[row, i + n * k]] += a[[j, k]];
            }
        }
    }
    let mut rhs = Array1::<f64>::zeros(nn);
    for j in 0..n {
        for i in 0..n {
            rhs[i + n * j] = -q[[i, j]];
        }
    }
    let x = m.solve_into(rhs)?;
    let mut out = Array2::<f64>::zeros((n, n));
    for j in 0..n {
        for i in 0..n {
            out[[i, j]] = x[i + n * j];
        }
    }
    Ok(out)
}

/// Log-determinant of a symmetric positive-definite matrix via an
/// in-place Cholesky factorization. Returns `None` when the matrix is
/// numerically singular or indefinite (a non-positive pivot appears).
pub fn logdet_spd(a: &ArrayView2<f64>) -> Option<f64> {
    let n = a.nrows();
    if a.ncols() != n {
        return None;
    }
    // Lower-triangular factor built row by row; only L is stored.
    let mut l = vec![0.0f64; n * n];
    let mut logdet = 0.0;
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[[i, j]];
            for k in 0..j {
                sum -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if !(sum > 0.0) || !sum.is_finite() {
                    return None;
                }
                let d = sum.sqrt();
                l[i * n + i] = d;
                logdet += d.ln();
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    Some(2.0 * logdet)
}

/// Extracts the principal submatrix A[idx, idx].
pub fn principal_submatrix(a: &ArrayView2<f64>, idx: &[usize]) -> Array2<f64> {
    let p = idx.len();
    Array2::from_shape_fn((p, p), |(i, j)| a[[idx[i], idx[j]]])
}

/// Symmetric positive-semidefinite square root via eigendecomposition,
/// clamping small negative eigenvalues at zero.
pub fn spd_sqrt(a: &ArrayView2<f64>) -> Result<Array2<f64>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::dims("spd_sqrt needs a square matrix"));
    }
    let sym = symmetrize(a);
    let (vals, vecs) = sym.eigh(UPLO::Lower)?;
    let mut scaled = vecs.clone();
    for (j, mut col) in scaled.axis_iter_mut(Axis(1)).enumerate() {
        let r = vals[j].max(0.0).sqrt();
        col.mapv_inplace(|x| x * r);
    }
    Ok(scaled.dot(&vecs.t()))
}

/// (A + Aᵀ)/2.
pub fn symmetrize(a: &ArrayView2<f64>) -> Array2<f64> {
    (a.to_owned() + a.t()) / 2.0
}

/// Worst absolute asymmetry max |A − Aᵀ|.
pub fn asymmetry(a: &ArrayView2<f64>) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((a[[i, j]] - a[[j, i]]).abs());
        }
    }
    worst
}
