//! Vibrating circular membrane: the analytic Fourier/Bessel mode basis,
//! cosine time evolution, weighted random initial conditions, the
//! radially symmetric sensor-cost profile, and the cost-versus-error
//! benchmark machinery built on them.
//!
//! The displacement of a clamped drum of radius a decomposes as
//! u(r, θ, t) = Σ (A_mn cos mθ + B_mn sin mθ) J_m(√λ_mn r) cos(c√λ_mn t)
//! with λ_mn = (z_mn/a)², z_mn the n-th zero of J_m. Truncating to a
//! finite set of angular orders and radial modes gives a concrete basis
//! matrix over a polar grid; everything else in the crate (pivoted
//! selection, reconstruction, Pareto sweeps) applies unchanged.

pub mod bessel;

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::par;
use crate::pivoting::Selection;
use crate::reconstruct::{pareto_sweep, Basis, BasisKind, ParetoPoint};
use crate::seeds::{self, tag};

pub use bessel::{bessel_j, bessel_j_ladder, bessel_j_prime, bessel_zero, bessel_zeros_table};

/// Truncated modal description of a clamped circular membrane, with the
/// polar sampling grid the basis is evaluated on.
///
/// `angular_orders` counts the orders m = 0, 1, ..., angular_orders−1;
/// each order m ≥ 1 contributes cos and sin families, so the basis has
/// `radial_modes·(2·angular_orders − 1)` columns. The default
/// configuration (6 orders × 5 radial modes) gives the 55-mode basis
/// used throughout the benchmarks.
#[derive(Debug, Clone)]
pub struct MembraneModel {
    /// Drum radius a.
    pub radius: f64,
    /// Wave speed c.
    pub wave_speed: f64,
    /// Number of angular orders, counting m = 0.
    pub angular_orders: usize,
    /// Radial modes per angular order (n = 1..=radial_modes).
    pub radial_modes: usize,
    /// Radial sample points, uniform on [0, a] including both ends.
    pub r_grid: Vec<f64>,
    /// Angular sample points, uniform on (−π, π]: the closed end π is
    /// kept, −π is excluded as its duplicate.
    pub theta_grid: Vec<f64>,
    /// zeros[m][n−1] = z_mn for the retained orders.
    pub zeros: Vec<Vec<f64>>,
    /// Membrane eigenvalues λ_mn = (z_mn/a)², same layout as `zeros`.
    pub lambda: Vec<Vec<f64>>,
}

/// Angular family of one basis column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AngularPart {
    /// m = 0: no angular dependence.
    Axisymmetric,
    Cos,
    Sin,
}

/// Identity of one basis column / coefficient slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModeLabel {
    pub m: usize,
    /// Radial index, 1-based.
    pub n: usize,
    pub part: AngularPart,
}

impl MembraneModel {
    /// The benchmark configuration: a = 10, c = 1, six angular orders,
    /// five radial modes, 101×101 grid.
    pub fn standard() -> Result<Self> {
        Self::new(10.0, 1.0, 6, 5, 101, 101)
    }

    pub fn new(
        radius: f64,
        wave_speed: f64,
        angular_orders: usize,
        radial_modes: usize,
        n_r: usize,
        n_theta: usize,
    ) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::invalid(format!("radius must be positive, got {radius}")));
        }
        if !(wave_speed.is_finite() && wave_speed > 0.0) {
            return Err(Error::invalid(format!("wave speed must be positive, got {wave_speed}")));
        }
        if angular_orders == 0 || radial_modes == 0 {
            return Err(Error::invalid("need at least one angular order and one radial mode"));
        }
        if n_r < 2 || n_theta < 2 {
            return Err(Error::invalid("grid needs at least 2 points per direction"));
        }
        let zeros = bessel::bessel_zeros_table(angular_orders - 1, radial_modes)?;
        for row in &zeros {
            for w in row.windows(2) {
                if !(w[0] < w[1]) {
                    return Err(Error::Numerical("Bessel zeros not strictly increasing".into()));
                }
            }
            if row[0] <= 0.0 {
                return Err(Error::Numerical("nonpositive Bessel zero".into()));
            }
        }
        let lambda = zeros
            .iter()
            .map(|row| row.iter().map(|z| (z / radius).powi(2)).collect())
            .collect();
        let r_grid = (0..n_r).map(|i| radius * i as f64 / (n_r - 1) as f64).collect();
        let step = 2.0 * std::f64::consts::PI / n_theta as f64;
        let theta_grid =
            (0..n_theta).map(|j| -std::f64::consts::PI + step * (j + 1) as f64).collect();
        Ok(MembraneModel {
            radius,
            wave_speed,
            angular_orders,
            radial_modes,
            r_grid,
            theta_grid,
            zeros,
            lambda,
        })
    }

    /// Grid size (basis rows).
    pub fn n_grid(&self) -> usize {
        self.r_grid.len() * self.theta_grid.len()
    }

    /// Mode count (basis columns / coefficient length).
    pub fn n_modes(&self) -> usize {
        self.radial_modes * (2 * self.angular_orders - 1)
    }

    /// Column labels in basis/coefficient order: the axisymmetric
    /// radial ladder first, then (cos, sin) interleaved per (m, n).
    pub fn mode_labels(&self) -> Vec<ModeLabel> {
        let mut labels = Vec::with_capacity(self.n_modes());
        for n in 1..=self.radial_modes {
            labels.push(ModeLabel { m: 0, n, part: AngularPart::Axisymmetric });
        }
        for m in 1..self.angular_orders {
            for n in 1..=self.radial_modes {
                labels.push(ModeLabel { m, n, part: AngularPart::Cos });
                labels.push(ModeLabel { m, n, part: AngularPart::Sin });
            }
        }
        labels
    }

    /// λ_mn per column, matching `mode_labels` order.
    pub fn mode_lambdas(&self) -> Vec<f64> {
        self.mode_labels().iter().map(|l| self.lambda[l.m][l.n - 1]).collect()
    }

    /// (r, θ) of a grid row. Rows are θ-major: the θ index varies
    /// slowest, r fastest.
    pub fn grid_point(&self, row: usize) -> (f64, f64) {
        let n_r = self.r_grid.len();
        (self.r_grid[row % n_r], self.theta_grid[row / n_r])
    }
}

/// Random modal coefficients with the lower modes weighted more
/// heavily: each entry is a standard normal scaled by the envelope
/// 1.5/(n(m+1)).
#[derive(Debug, Clone)]
pub struct CoefficientVector {
    pub values: Array1<f64>,
}

impl CoefficientVector {
    /// Wraps caller-supplied coefficients after length/finiteness
    /// checks.
    pub fn from_values(model: &MembraneModel, values: Array1<f64>) -> Result<Self> {
        if values.len() != model.n_modes() {
            return Err(Error::dims(format!(
                "coefficient vector has {} entries, model has {} modes",
                values.len(),
                model.n_modes()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("membrane coefficient".into()));
        }
        Ok(CoefficientVector { values })
    }

    /// A unit impulse on column `index` (handy for single-mode tests).
    pub fn unit(model: &MembraneModel, index: usize) -> Result<Self> {
        if index >= model.n_modes() {
            return Err(Error::invalid(format!(
                "mode index {index} out of range ({} modes)",
                model.n_modes()
            )));
        }
        let mut values = Array1::zeros(model.n_modes());
        values[index] = 1.0;
        Ok(CoefficientVector { values })
    }

    /// The deterministic envelope 1.5/(n(m+1)) of one column.
    pub fn envelope(label: &ModeLabel) -> f64 {
        1.5 / (label.n as f64 * (label.m + 1) as f64)
    }
}

/// Seeded draw of weighted random coefficients.
pub fn sample_coefficients(model: &MembraneModel, seed: u64) -> CoefficientVector {
    let mut rng = seeds::rng(seed, &[tag::INITIAL_CONDITION]);
    let values = model
        .mode_labels()
        .iter()
        .map(|label| {
            let g: f64 = rng.sample(StandardNormal);
            g * CoefficientVector::envelope(label)
        })
        .collect();
    CoefficientVector { values: Array1::from_vec(values) }
}

/// Assembles the basis matrix: one row per grid point (θ-major), one
/// column per mode in `mode_labels` order. Every column satisfies the
/// clamped boundary condition (zero on the ring r = a) because the
/// radial argument hits z_mn exactly there.
pub fn membrane_basis(model: &MembraneModel) -> Basis {
    let n_r = model.r_grid.len();
    let n_theta = model.theta_grid.len();
    let labels = model.mode_labels();
    let mut modes = Array2::<f64>::zeros((model.n_grid(), labels.len()));
    for (col, label) in labels.iter().enumerate() {
        let z = model.zeros[label.m][label.n - 1];
        // Radial profile J_m(z·r/a), shared by every θ ring.
        let radial: Vec<f64> = model
            .r_grid
            .iter()
            .map(|&r| bessel::bessel_j(label.m, z * r / model.radius))
            .collect();
        for (ti, &theta) in model.theta_grid.iter().enumerate() {
            let angular = match label.part {
                AngularPart::Axisymmetric => 1.0,
                AngularPart::Cos => (label.m as f64 * theta).cos(),
                AngularPart::Sin => (label.m as f64 * theta).sin(),
            };
            for (ri, &jr) in radial.iter().enumerate() {
                modes[[ti * n_r + ri, col]] = angular * jr;
            }
        }
    }
    Basis::real(
        modes,
        BasisKind::Analytic,
        format!(
            "membrane Fourier/Bessel modes: {} angular orders x {} radial, a = {}, \
             {}x{} polar grid, rows theta-major (theta in (-pi, pi], r in [0, a])",
            model.angular_orders,
            model.radial_modes,
            model.radius,
            n_theta,
            n_r,
        ),
    )
}

/// Per-column cosine factors cos(c·√λ·t) at time `t`.
pub fn modal_cosines(model: &MembraneModel, t: f64) -> Array1<f64> {
    Array1::from_vec(
        model
            .mode_lambdas()
            .iter()
            .map(|&l| (model.wave_speed * l.sqrt() * t).cos())
            .collect(),
    )
}

/// Membrane displacement at time `t` from initial coefficients `b`
/// (released from rest): u(t) = Ψ·(cos(c√Λt) ∘ b).
pub fn evolve(model: &MembraneModel, b: &CoefficientVector, t: f64) -> Result<Array1<f64>> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::invalid(format!("time must be finite and ≥ 0, got {t}")));
    }
    let basis = membrane_basis(model);
    let coeffs = &modal_cosines(model, t) * &b.values;
    match &basis.modes {
        crate::reconstruct::BasisModes::Real(psi) => Ok(psi.dot(&coeffs)),
        crate::reconstruct::BasisModes::Complex(_) => unreachable!("membrane basis is real"),
    }
}

/// Sensor-cost profile over the grid: η = 0.6 + 0.5·cos(2πr/13) at each
/// point's radius, so placement is most expensive at the center (1.1)
/// and cheapest on the ring r = 6.5 (0.1). Radially symmetric.
pub fn radial_cost(model: &MembraneModel) -> Vec<f64> {
    let per_radius: Vec<f64> = model
        .r_grid
        .iter()
        .map(|&r| 0.6 + 0.5 * (2.0 * std::f64::consts::PI * r / 13.0).cos())
        .collect();
    let mut eta = Vec::with_capacity(model.n_grid());
    for _ in 0..model.theta_grid.len() {
        eta.extend_from_slice(&per_radius);
    }
    eta
}

/// Reusable scoring context for sensor arrays on the membrane: the
/// basis, a snapshot time grid, and a fixed set of random initial
/// conditions.
///
/// Scoring works entirely in coefficient space. With U = ΨB and the
/// least-squares reconstruction Û = Ψ(Θ†Θ)B, the fractional error
/// satisfies ‖U − Û‖²_F = tr(EᵀGE) with E = B − Θ†ΘB and G = ΨᵀΨ, so
/// after the one-time Gram matrix no full-grid snapshot matrix is ever
/// formed. This is exact, not an approximation.
pub struct MembraneEvaluator {
    basis: Basis,
    /// ΨᵀΨ.
    gram: Array2<f64>,
    /// Modal cosine factors, one column per snapshot time.
    cosines: Array2<f64>,
    /// One coefficient draw per initial-condition set.
    coefficient_sets: Vec<Array1<f64>>,
}

impl MembraneEvaluator {
    /// Builds the context: `n_ic` seeded coefficient draws evaluated on
    /// `times`. Draw `i` uses a stream derived from (seed, i), so the
    /// same seed gives the same initial conditions to every competing
    /// sensor array.
    pub fn new(model: &MembraneModel, times: &[f64], n_ic: usize, seed: u64) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::invalid("snapshot time grid is empty"));
        }
        if let Some(&t) = times.iter().find(|&&t| !t.is_finite() || t < 0.0) {
            return Err(Error::invalid(format!("snapshot times must be finite and ≥ 0, got {t}")));
        }
        if n_ic == 0 {
            return Err(Error::invalid("need at least one initial-condition set"));
        }
        let basis = membrane_basis(model);
        let psi = match &basis.modes {
            crate::reconstruct::BasisModes::Real(m) => m,
            crate::reconstruct::BasisModes::Complex(_) => unreachable!("membrane basis is real"),
        };
        let gram = psi.t().dot(psi);
        let k = model.n_modes();
        let mut cosines = Array2::<f64>::zeros((k, times.len()));
        for (j, &t) in times.iter().enumerate() {
            cosines.column_mut(j).assign(&modal_cosines(model, t));
        }
        let coefficient_sets = (0..n_ic)
            .map(|i| {
                let mut rng = seeds::rng(seed, &[tag::INITIAL_CONDITION, i as u64]);
                Array1::from_vec(
                    model
                        .mode_labels()
                        .iter()
                        .map(|label| {
                            let g: f64 = rng.sample(StandardNormal);
                            g * CoefficientVector::envelope(label)
                        })
                        .collect(),
                )
            })
            .collect();
        Ok(MembraneEvaluator { basis, gram, cosines, coefficient_sets })
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    /// Mean fractional reconstruction error of `sel` over all stored
    /// initial-condition sets, each scored over the whole time grid.
    pub fn mean_error(&self, sel: &Selection) -> Result<f64> {
        let psi = match &self.basis.modes {
            crate::reconstruct::BasisModes::Real(m) => m,
            crate::reconstruct::BasisModes::Complex(_) => unreachable!(),
        };
        let k = psi.ncols();
        if sel.indices.is_empty() {
            return Err(Error::invalid("selection is empty"));
        }
        if let Some(&bad) = sel.indices.iter().find(|&&j| j >= psi.nrows()) {
            return Err(Error::invalid(format!(
                "selection index {bad} out of range (n = {})",
                psi.nrows()
            )));
        }
        let mut theta = Array2::<f64>::zeros((sel.indices.len(), k));
        for (row, &j) in sel.indices.iter().enumerate() {
            theta.row_mut(row).assign(&psi.row(j));
        }
        // Coefficient-space projector Θ†Θ.
        let projector = crate::linalg::pinv(&theta.view())?.dot(&theta);
        let errors = par::try_map_indexed(self.coefficient_sets.len(), |i| {
            let b = &self.coefficient_sets[i];
            // B: modal trajectories for this draw; E: projection defect.
            let mut traj = self.cosines.clone();
            for (row, &bv) in b.iter().enumerate() {
                traj.row_mut(row).mapv_inplace(|v| v * bv);
            }
            let defect = &traj - &projector.dot(&traj);
            let num = (&self.gram.dot(&defect) * &defect).sum();
            let den = (&self.gram.dot(&traj) * &traj).sum();
            if den <= 0.0 {
                return Err(Error::Numerical("degenerate (zero-energy) trajectory".into()));
            }
            Ok((num.max(0.0) / den).sqrt())
        })?;
        Ok(errors.iter().sum::<f64>() / errors.len() as f64)
    }
}

/// Uniform time grid 0, dt, ..., spanning [0, t_end].
pub fn time_grid(t_end: f64, dt: f64) -> Result<Vec<f64>> {
    if !(dt.is_finite() && dt > 0.0) || !(t_end.is_finite() && t_end >= 0.0) {
        return Err(Error::invalid(format!("bad time grid: t_end = {t_end}, dt = {dt}")));
    }
    let steps = (t_end / dt).round() as usize;
    Ok((0..=steps).map(|k| k as f64 * dt).collect())
}

/// Cost-versus-error sweep for membrane sensor arrays: for each γ,
/// selects `p` sensors against the radial cost profile and scores the
/// array as the mean fractional reconstruction error over `n_ic`
/// seeded initial conditions propagated across `times`.
pub fn membrane_benchmark(
    model: &MembraneModel,
    p: usize,
    gammas: &[f64],
    n_ic: usize,
    times: &[f64],
    seed: u64,
) -> Result<Vec<ParetoPoint>> {
    let evaluator = MembraneEvaluator::new(model, times, n_ic, seed)?;
    let eta = radial_cost(model);
    pareto_sweep(evaluator.basis(), &eta, gammas, p, "mean fractional reconstruction error", |sel| {
        evaluator.mean_error(sel)
    })
}

/// Outcome of the data-driven comparison protocol: reconstruction
/// errors of a rank-r SVD basis on held-out snapshots.
#[derive(Debug, Clone)]
pub struct SvdSplitOutcome {
    pub train_error: f64,
    pub test_error: f64,
    pub selection: Selection,
    pub basis: Basis,
}

/// Builds a data-driven basis for the membrane and scores sparse
/// reconstruction on held-out data: one random initial condition is
/// propagated for `n_snapshots` steps of `dt`, the snapshots are
/// randomly split `n_train`/rest, a rank-`rank` SVD basis is fit to the
/// training block, `p` sensors are selected on it against the radial
/// cost at weight `gamma`, and fractional errors are reported for both
/// blocks.
pub fn svd_split_benchmark(
    model: &MembraneModel,
    n_snapshots: usize,
    dt: f64,
    n_train: usize,
    rank: usize,
    p: usize,
    gamma: f64,
    seed: u64,
) -> Result<SvdSplitOutcome> {
    if n_train < 2 || n_train >= n_snapshots {
        return Err(Error::invalid(format!(
            "need 2 ≤ n_train < n_snapshots, got {n_train} of {n_snapshots}"
        )));
    }
    let b = sample_coefficients(model, seeds::derive(seed, &[tag::INITIAL_CONDITION]));
    let basis_full = membrane_basis(model);
    let psi = match &basis_full.modes {
        crate::reconstruct::BasisModes::Real(m) => m,
        crate::reconstruct::BasisModes::Complex(_) => unreachable!(),
    };
    // Modal trajectories, then one dense multiply up to grid space.
    let mut traj = Array2::<f64>::zeros((model.n_modes(), n_snapshots));
    for j in 0..n_snapshots {
        let c = &modal_cosines(model, j as f64 * dt) * &b.values;
        traj.column_mut(j).assign(&c);
    }
    let snapshots = psi.dot(&traj);

    // Random disjoint train/test split of the snapshot columns.
    let mut order: Vec<usize> = (0..n_snapshots).collect();
    let mut rng = seeds::rng(seed, &[tag::SPLIT]);
    for i in 0..n_snapshots - 1 {
        let j = rng.gen_range(i..n_snapshots);
        order.swap(i, j);
    }
    let take = |cols: &[usize]| {
        let mut block = Array2::<f64>::zeros((snapshots.nrows(), cols.len()));
        for (k, &c) in cols.iter().enumerate() {
            block.column_mut(k).assign(&snapshots.column(c));
        }
        block
    };
    let train = take(&order[..n_train]);
    let test = take(&order[n_train..]);

    let basis = crate::bases::svd_basis(&train.view(), rank)?;
    let cost = crate::pivoting::CostField::new(radial_cost(model), gamma)?;
    let selection = basis.select(&cost, p)?;

    let block_error = |block: &Array2<f64>| -> Result<f64> {
        let y = crate::reconstruct::measure(&block.view(), &selection)?;
        let xhat = crate::reconstruct::reconstruct(&y.view(), &basis, &selection)?;
        crate::reconstruct::fractional_error(&block.view(), &xhat.view())
    };
    let train_error = block_error(&train)?;
    let test_error = block_error(&test)?;
    Ok(SvdSplitOutcome { train_error, test_error, selection, basis })
}
