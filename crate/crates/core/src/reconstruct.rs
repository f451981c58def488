//! Full-state reconstruction from sparse measurements.
//!
//! A state x is modeled as Ψa for a basis Ψ and coefficients a. Given
//! measurements Y = CX at selected rows, the coefficients are recovered
//! through the pseudoinverse of Θ = CΨ and the state estimate is Ψâ.
//! This module also hosts the cost-versus-error sweep machinery and the
//! random-selection baseline used throughout the benchmarks.

use ndarray::{Array2, ArrayView2};
use ndarray_linalg::c64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg;
use crate::par;
use crate::pivoting::{qr_pivot_select_cost, CostField, Selection};
use crate::seeds::{self, tag};

/// How a basis was produced. Selection quality depends strongly on this;
/// it is recorded so persisted artifacts are self-describing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisKind {
    Svd,
    Randomized,
    Dmd,
    BalancedDirect,
    BalancedAdjoint,
    Analytic,
}

impl BasisKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            BasisKind::Svd => "svd",
            BasisKind::Randomized => "randomized",
            BasisKind::Dmd => "dmd",
            BasisKind::BalancedDirect => "balanced-direct",
            BasisKind::BalancedAdjoint => "balanced-adjoint",
            BasisKind::Analytic => "analytic",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "svd" => Some(BasisKind::Svd),
            "randomized" => Some(BasisKind::Randomized),
            "dmd" => Some(BasisKind::Dmd),
            "balanced-direct" => Some(BasisKind::BalancedDirect),
            "balanced-adjoint" => Some(BasisKind::BalancedAdjoint),
            "analytic" => Some(BasisKind::Analytic),
            _ => None,
        }
    }
}

/// Mode matrix, real or complex. Reconstructions through a complex
/// basis take the real part at the end.
#[derive(Debug, Clone)]
pub enum BasisModes {
    Real(Array2<f64>),
    Complex(Array2<c64>),
}

/// An n×r mode matrix with provenance. Orthonormality is not required —
/// selection and reconstruction work for any finite, nonzero modes.
#[derive(Debug, Clone)]
pub struct Basis {
    pub modes: BasisModes,
    pub kind: BasisKind,
    /// Human-readable note on how the basis was generated
    /// (parameters, source file, ...).
    pub provenance: String,
}

impl Basis {
    pub fn real(modes: Array2<f64>, kind: BasisKind, provenance: impl Into<String>) -> Self {
        Basis { modes: BasisModes::Real(modes), kind, provenance: provenance.into() }
    }

    pub fn complex(modes: Array2<c64>, kind: BasisKind, provenance: impl Into<String>) -> Self {
        Basis { modes: BasisModes::Complex(modes), kind, provenance: provenance.into() }
    }

    /// State dimension (rows).
    pub fn n(&self) -> usize {
        match &self.modes {
            BasisModes::Real(m) => m.nrows(),
            BasisModes::Complex(m) => m.nrows(),
        }
    }

    /// Mode count (columns).
    pub fn r(&self) -> usize {
        match &self.modes {
            BasisModes::Real(m) => m.ncols(),
            BasisModes::Complex(m) => m.ncols(),
        }
    }

    /// The candidate matrix for pivoting: Ψ* (conjugate transpose), one
    /// column per state location.
    pub fn candidate_matrix(&self) -> BasisModes {
        match &self.modes {
            BasisModes::Real(m) => BasisModes::Real(m.t().to_owned()),
            BasisModes::Complex(m) => BasisModes::Complex(m.mapv(|z| z.conj()).t().to_owned()),
        }
    }

    /// Cost-penalized pivot selection of `p` rows of this basis.
    pub fn select(&self, cost: &CostField, p: usize) -> Result<Selection> {
        match self.candidate_matrix() {
            BasisModes::Real(v) => qr_pivot_select_cost(&v.view(), cost, p),
            BasisModes::Complex(v) => qr_pivot_select_cost(&v.view(), cost, p),
        }
    }
}

/// Extracts the measured rows: row k of the output is row
/// `sel.indices[k]` of `x`.
pub fn measure(x: &ArrayView2<f64>, sel: &Selection) -> Result<Array2<f64>> {
    let n = x.nrows();
    if let Some(&bad) = sel.indices.iter().find(|&&j| j >= n) {
        return Err(Error::invalid(format!("selection index {bad} out of range (n = {n})")));
    }
    let mut y = Array2::zeros((sel.indices.len(), x.ncols()));
    for (k, &j) in sel.indices.iter().enumerate() {
        y.row_mut(k).assign(&x.row(j));
    }
    Ok(y)
}

/// Minimum-norm least-squares reconstruction: â = Θ†Y with Θ = CΨ,
/// X̂ = Re(Ψâ). Directions of Θ with singular values below
/// 1e-12·σ_max are truncated, so rank-deficient measurement maps give
/// the minimum-norm solution instead of noise amplification.
pub fn reconstruct(y: &ArrayView2<f64>, basis: &Basis, sel: &Selection) -> Result<Array2<f64>> {
    let p = sel.indices.len();
    if y.nrows() != p {
        return Err(Error::dims(format!(
            "measurements have {} rows but selection holds {p} indices",
            y.nrows()
        )));
    }
    let n = basis.n();
    if let Some(&bad) = sel.indices.iter().find(|&&j| j >= n) {
        return Err(Error::invalid(format!("selection index {bad} out of range (n = {n})")));
    }
    match &basis.modes {
        BasisModes::Real(psi) => {
            let theta = take_rows_real(psi, &sel.indices);
            if theta.iter().all(|&v| v == 0.0) {
                return Err(Error::Numerical("measurement matrix Θ is identically zero".into()));
            }
            let theta_pinv = linalg::pinv(&theta.view())?;
            let a_hat = theta_pinv.dot(y);
            Ok(psi.dot(&a_hat))
        }
        BasisModes::Complex(psi) => {
            let theta = take_rows_complex(psi, &sel.indices);
            if theta.iter().all(|&v| v == c64::new(0.0, 0.0)) {
                return Err(Error::Numerical("measurement matrix Θ is identically zero".into()));
            }
            let theta_pinv = linalg::pinv(&theta.view())?;
            let yc = y.mapv(|v| c64::new(v, 0.0));
            let a_hat = theta_pinv.dot(&yc);
            Ok(psi.dot(&a_hat).mapv(|z| z.re))
        }
    }
}

/// Fractional reconstruction error ‖X − X̂‖_F / ‖X‖_F.
pub fn fractional_error(x: &ArrayView2<f64>, xhat: &ArrayView2<f64>) -> Result<f64> {
    if x.dim() != xhat.dim() {
        return Err(Error::dims(format!("shapes differ: {:?} vs {:?}", x.dim(), xhat.dim())));
    }
    let denom = linalg::frob(x);
    if denom == 0.0 {
        return Err(Error::invalid("reference matrix has zero norm"));
    }
    let diff = x.to_owned() - xhat;
    Ok(linalg::frob(&diff.view()) / denom)
}

/// One point on a cost-versus-performance curve.
#[derive(Debug, Clone)]
pub struct ParetoPoint {
    pub gamma: f64,
    pub total_cost: f64,
    /// Value returned by the evaluator: fractional error, a control
    /// metric, etc., as named by `metric`.
    pub error: f64,
    pub metric: String,
    pub selection: Selection,
}

/// Sweeps the cost weighting γ over `gammas`: for each value, selects
/// `p` locations on the basis with the penalized pivoting criterion and
/// scores the result with `evaluate`. Points come back in `gammas`
/// order; the sweep is deterministic and safe to parallelize because
/// each γ is independent.
pub fn pareto_sweep<F>(
    basis: &Basis,
    eta: &[f64],
    gammas: &[f64],
    p: usize,
    metric: &str,
    evaluate: F,
) -> Result<Vec<ParetoPoint>>
where
    F: Fn(&Selection) -> Result<f64> + Sync + Send,
{
    if gammas.is_empty() {
        return Err(Error::invalid("gamma sweep list is empty"));
    }
    if let Some(&g) = gammas.iter().find(|&&g| !(g >= 0.0) || !g.is_finite()) {
        return Err(Error::invalid(format!("gamma values must be finite and ≥ 0, got {g}")));
    }
    par::try_map_indexed(gammas.len(), |i| {
        let gamma = gammas[i];
        let cost = CostField::new(eta.to_vec(), gamma)?;
        let selection = basis.select(&cost, p)?;
        let error = evaluate(&selection)?;
        Ok(ParetoPoint {
            gamma,
            total_cost: selection.total_cost,
            error,
            metric: metric.to_string(),
            selection,
        })
    })
}

/// Draws `trials` uniform random p-subsets of `0..n` (each a partial
/// Fisher–Yates shuffle). Trial `t` uses its own derived stream, so the
/// list does not depend on evaluation order or thread count.
pub fn random_selections(n: usize, p: usize, trials: usize, seed: u64) -> Result<Vec<Selection>> {
    if p > n {
        return Err(Error::invalid(format!("cannot draw {p} distinct indices from {n}")));
    }
    if trials == 0 {
        return Err(Error::invalid("trials must be ≥ 1"));
    }
    Ok(par::map_indexed(trials, |t| {
        let mut rng = seeds::rng(seed, &[tag::SENSOR_ARRAY, t as u64]);
        let mut pool: Vec<usize> = (0..n).collect();
        for i in 0..p {
            let j = rng.gen_range(i..n);
            pool.swap(i, j);
        }
        let indices = pool[..p].to_vec();
        Selection {
            indices,
            costs: vec![0.0; p],
            total_cost: 0.0,
            gamma_used: 0.0,
            pivot_magnitudes: Vec::new(),
            rank_deficient: false,
            hybrid: false,
        }
    }))
}

fn take_rows_real(m: &Array2<f64>, rows: &[usize]) -> Array2<f64> {
    let mut out = Array2::zeros((rows.len(), m.ncols()));
    for (k, &j) in rows.iter().enumerate() {
        out.row_mut(k).assign(&m.row(j));
    }
    out
}

fn take_rows_complex(m: &Array2<c64>, rows: &[usize]) -> Array2<c64> {
    let mut out = Array2::from_elem((rows.len(), m.ncols()), c64::new(0.0, 0.0));
    for (k, &j) in rows.iter().enumerate() {
        out.row_mut(k).assign(&m.row(j));
    }
    out
}
