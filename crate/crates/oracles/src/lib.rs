//! Reference implementations for cross-checking `sentry-core`.
//!
//! Everything here is deliberately written by a different route than the
//! production code: the greedy selector orthogonalizes explicitly with
//! modified Gram–Schmidt instead of Householder reflections, determinants
//! come from a hand-rolled partially pivoted LU, log-determinants go
//! through Jacobi eigenvalues instead of Cholesky, and Bessel functions
//! are evaluated by their integral representation instead of series or
//! recurrences. None of this is fast, and none of it is meant to ship —
//! it exists so tests can compare two independent derivations of the
//! same number.
//!
//! Being test-only code, functions panic on misuse (wrong shapes,
//! non-symmetric input, bad brackets) rather than returning errors.

use ndarray::{Array1, Array2, ArrayView2};
use num_complex::Complex64;

/// Greedy cost-penalized pivot selection on a real candidate matrix,
/// by explicit orthogonalization. `v` is r×n with one column per
/// candidate; at each step the unselected column maximizing
/// ‖residual against the chosen span‖ − γ·η wins, ties to the lowest
/// index. Returns the chosen column indices in pick order.
pub fn greedy_pivot_real(v: &ArrayView2<f64>, eta: &[f64], gamma: f64, p: usize) -> Vec<usize> {
    let vc = v.mapv(|x| Complex64::new(x, 0.0));
    greedy_pivot_complex(&vc.view(), eta, gamma, p)
}

/// Complex-arithmetic version of [`greedy_pivot_real`]; the score uses
/// the modulus norm of the residual.
pub fn greedy_pivot_complex(
    v: &ArrayView2<Complex64>,
    eta: &[f64],
    gamma: f64,
    p: usize,
) -> Vec<usize> {
    let (r, n) = v.dim();
    assert!(r >= 1 && n >= 1, "empty candidate matrix");
    assert!(p >= 1 && p <= r.min(n), "p = {p} out of range for {r}×{n}");
    assert_eq!(eta.len(), n, "cost length mismatch");

    let mut chosen: Vec<usize> = Vec::with_capacity(p);
    let mut basis: Vec<Array1<Complex64>> = Vec::new();
    for _ in 0..p {
        let mut best_j = usize::MAX;
        let mut best_score = f64::NEG_INFINITY;
        for j in 0..n {
            if chosen.contains(&j) {
                continue;
            }
            let res = residual_against(&v.column(j).to_owned(), &basis);
            let score = norm(&res) - gamma * eta[j];
            // Ascending j plus strict inequality = lowest index wins ties.
            if score > best_score {
                best_score = score;
                best_j = j;
            }
        }
        let res = residual_against(&v.column(best_j).to_owned(), &basis);
        let nrm = norm(&res);
        if nrm > 0.0 {
            basis.push(res.mapv(|z| z / nrm));
        }
        chosen.push(best_j);
    }
    chosen
}

/// Two passes of modified Gram–Schmidt against an orthonormal set; the
/// second pass mops up the O(ε·κ) leakage of the first.
fn residual_against(
    col: &Array1<Complex64>,
    basis: &[Array1<Complex64>],
) -> Array1<Complex64> {
    let mut res = col.clone();
    for _ in 0..2 {
        for q in basis {
            let coeff: Complex64 = q.iter().zip(res.iter()).map(|(a, b)| a.conj() * b).sum();
            res.zip_mut_with(q, |r, &qi| *r -= coeff * qi);
        }
    }
    res
}

fn norm(x: &Array1<Complex64>) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// |det| of a square real matrix via partially pivoted LU.
pub fn abs_det_real(m: &ArrayView2<f64>) -> f64 {
    abs_det_complex(&m.mapv(|x| Complex64::new(x, 0.0)).view())
}

/// |det| of a square complex matrix via partially pivoted LU (row swaps
/// only flip the sign, which the modulus ignores).
pub fn abs_det_complex(m: &ArrayView2<Complex64>) -> f64 {
    let (r, c) = m.dim();
    assert_eq!(r, c, "determinant needs a square matrix, got {r}×{c}");
    let mut a = m.to_owned();
    let mut det = 1.0f64;
    for k in 0..r {
        let (piv, mag) = (k..r)
            .map(|i| (i, a[[i, k]].norm()))
            .max_by(|x, y| x.1.partial_cmp(&y.1).expect("non-finite entry"))
            .expect("nonempty pivot range");
        if mag == 0.0 {
            return 0.0;
        }
        if piv != k {
            for j in 0..r {
                let t = a[[k, j]];
                a[[k, j]] = a[[piv, j]];
                a[[piv, j]] = t;
            }
        }
        det *= a[[k, k]].norm();
        for i in (k + 1)..r {
            let f = a[[i, k]] / a[[k, k]];
            for j in (k + 1)..r {
                let delta = f * a[[k, j]];
                a[[i, j]] -= delta;
            }
        }
    }
    det
}

/// Exhaustive search for the column subset of size `p` maximizing the
/// |det| of the square block they form with the first `p` rows (callers
/// pass p = r so the block is all rows). Returns the winning subset in
/// ascending order plus its |det|; exact ties keep the lexicographically
/// first subset.
pub fn best_subset_by_abs_det(v: &ArrayView2<f64>, p: usize) -> (Vec<usize>, f64) {
    let (r, n) = v.dim();
    assert!(p >= 1 && p <= n && p <= r, "p = {p} out of range for {r}×{n}");
    let mut best: Option<(Vec<usize>, f64)> = None;
    for subset in combinations(n, p) {
        let block = Array2::from_shape_fn((p, p), |(i, l)| v[[i, subset[l]]]);
        let det = abs_det_real(&block.view());
        let better = match &best {
            None => true,
            Some((_, b)) => det > *b,
        };
        if better {
            best = Some((subset, det));
        }
    }
    best.expect("at least one subset")
}

/// Lexicographic k-subsets of {0, …, n−1}. `combinations(4, 2)` yields
/// [0,1], [0,2], [0,3], [1,2], [1,3], [2,3].
pub fn combinations(n: usize, k: usize) -> Combinations {
    assert!(k <= n, "cannot choose {k} of {n}");
    let state = if k == 0 { Some(Vec::new()) } else { Some((0..k).collect()) };
    Combinations { n, k, state }
}

pub struct Combinations {
    n: usize,
    k: usize,
    state: Option<Vec<usize>>,
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let current = self.state.take()?;
        if self.k > 0 {
            let mut next = current.clone();
            // Rightmost position that can still move right.
            let mut i = self.k;
            loop {
                if i == 0 {
                    self.state = None;
                    break;
                }
                i -= 1;
                if next[i] + 1 <= self.n - self.k + i {
                    next[i] += 1;
                    for j in (i + 1)..self.k {
                        next[j] = next[j - 1] + 1;
                    }
                    self.state = Some(next);
                    break;
                }
            }
        }
        Some(current)
    }
}

/// Eigenvalues of a symmetric real matrix by cyclic Jacobi rotations,
/// sorted descending. Panics if the input is not square or departs from
/// symmetry by more than 1e-10 relative.
pub fn jacobi_eigenvalues(a: &ArrayView2<f64>) -> Vec<f64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "matrix must be square");
    let scale = a.iter().fold(0.0f64, |s, &x| s.max(x.abs())).max(1e-300);
    for i in 0..n {
        for j in 0..n {
            assert!(
                (a[[i, j]] - a[[j, i]]).abs() <= 1e-10 * scale,
                "matrix is not symmetric at ({i},{j})"
            );
        }
    }
    let mut m = a.to_owned();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .map(|(i, j)| m[[i, j]] * m[[i, j]])
            .sum();
        if off.sqrt() <= 1e-14 * scale * n as f64 {
            break;
        }
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                let apq = m[[p, q]];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (m[[q, q]] - m[[p, p]]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let app = m[[p, p]];
                let aqq = m[[q, q]];
                m[[p, p]] = app - t * apq;
                m[[q, q]] = aqq + t * apq;
                m[[p, q]] = 0.0;
                m[[q, p]] = 0.0;
                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    let akp = m[[k, p]];
                    let akq = m[[k, q]];
                    m[[k, p]] = c * akp - s * akq;
                    m[[p, k]] = m[[k, p]];
                    m[[k, q]] = s * akp + c * akq;
                    m[[q, k]] = m[[k, q]];
                }
            }
        }
    }
    let mut eigs: Vec<f64> = (0..n).map(|i| m[[i, i]]).collect();
    eigs.sort_by(|x, y| y.partial_cmp(x).expect("finite eigenvalues"));
    eigs
}

/// log det of a symmetric positive-definite matrix as the sum of the
/// logs of its Jacobi eigenvalues. Panics if any eigenvalue is ≤ 0.
pub fn logdet_spd(a: &ArrayView2<f64>) -> f64 {
    jacobi_eigenvalues(a)
        .into_iter()
        .map(|l| {
            assert!(l > 0.0, "matrix is not positive definite (eigenvalue {l})");
            l.ln()
        })
        .sum()
}

/// The square block of a symmetric matrix at `idx` × `idx`.
pub fn principal_block(a: &ArrayView2<f64>, idx: &[usize]) -> Array2<f64> {
    Array2::from_shape_fn((idx.len(), idx.len()), |(i, j)| a[[idx[i], idx[j]]])
}

/// Bessel function of the first kind, integer order, from the integral
/// representation J_m(x) = (1/π)∫₀^π cos(mτ − x sin τ) dτ. The even
/// periodic extension of the integrand is smooth, so the trapezoid rule
/// converges spectrally; 4096 panels reach machine precision for
/// |x| ≲ 50.
pub fn bessel_j_integral(m: u32, x: f64) -> f64 {
    let n = 4096usize;
    let h = std::f64::consts::PI / n as f64;
    let f = |tau: f64| (m as f64 * tau - x * tau.sin()).cos();
    let mut sum = 0.5 * (f(0.0) + f(std::f64::consts::PI));
    for i in 1..n {
        sum += f(i as f64 * h);
    }
    sum * h / std::f64::consts::PI
}

/// Root of x ↦ J_m(x) inside [lo, hi] by pure bisection on the integral
/// evaluator. Panics unless the bracket straddles a sign change.
pub fn bessel_zero_bisect(m: u32, lo: f64, hi: f64) -> f64 {
    let (mut lo, mut hi) = (lo, hi);
    let mut flo = bessel_j_integral(m, lo);
    let fhi = bessel_j_integral(m, hi);
    assert!(
        flo == 0.0 || fhi == 0.0 || (flo < 0.0) != (fhi < 0.0),
        "no sign change on [{lo}, {hi}] for order {m}"
    );
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fmid = bessel_j_integral(m, mid);
        if fmid == 0.0 {
            return mid;
        }
        if (fmid < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
