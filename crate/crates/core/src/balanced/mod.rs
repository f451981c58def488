//! Linear control systems: Gramians, balanced truncation, H2-proxy
//! selection of sensors and actuators, brute-force subset enumeration,
//! and the damped spring-mass benchmark chain.
//!
//! Sensor selection runs cost-penalized pivoting on the direct balanced
//! modes Ψ_r*; actuator selection runs it on the adjoint modes Φ_r*,
//! optionally restricted to the physically actuatable coordinates. Both
//! are scored by the log-determinant of the corresponding Gramian
//! submatrix, a surrogate for closed-loop output energy.

mod lqg;

pub use lqg::{
    dare_fixed_point, kalman_gain, lqg_simulate, lqr_gain, zoh_discretize, LqgResult, LqgDesign,
    LqgOptions,
};

use ndarray::{s, Array2, ArrayView2};
use ndarray_linalg::{Eig, JobSvd, SVDDC};

use crate::error::{Error, Result};
use crate::linalg;
use crate::par;
use crate::pivoting::{
    qr_pivot_select_cost, restrict_candidates, translate_selection, CostField, Selection,
};

/// ẋ = Ax + Bu, y = Cx.
#[derive(Debug, Clone)]
pub struct LinearControlSystem {
    pub a: Array2<f64>,
    pub b: Array2<f64>,
    pub c: Array2<f64>,
}

impl LinearControlSystem {
    pub fn new(a: Array2<f64>, b: Array2<f64>, c: Array2<f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::dims(format!("A must be square, got {}×{}", a.nrows(), a.ncols())));
        }
        if b.nrows() != n {
            return Err(Error::dims(format!("B has {} rows, expected {n}", b.nrows())));
        }
        if c.ncols() != n {
            return Err(Error::dims(format!("C has {} columns, expected {n}", c.ncols())));
        }
        for (name, m) in [("A", &a), ("B", &b), ("C", &c)] {
            if m.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("system matrix {name}")));
            }
        }
        Ok(LinearControlSystem { a, b, c })
    }

    pub fn n_states(&self) -> usize {
        self.a.nrows()
    }

    pub fn n_inputs(&self) -> usize {
        self.b.ncols()
    }

    pub fn n_outputs(&self) -> usize {
        self.c.nrows()
    }

    /// Largest real part over the eigenvalues of A.
    pub fn spectral_abscissa(&self) -> Result<f64> {
        let (eigs, _) = self.a.eig()?;
        Ok(eigs.iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max))
    }

    /// True when A is Hurwitz (all eigenvalues strictly in the left
    /// half-plane), the prerequisite for Gramians to exist.
    pub fn is_hurwitz(&self) -> Result<bool> {
        Ok(self.spectral_abscissa()? < 0.0)
    }

    /// Copy of the system with full actuation and sensing (B = C = I).
    /// Selection pipelines balance this system so every state coordinate
    /// is a candidate location.
    pub fn with_identity_io(&self) -> Self {
        let n = self.n_states();
        LinearControlSystem {
            a: self.a.clone(),
            b: Array2::eye(n),
            c: Array2::eye(n),
        }
    }
}

/// Damped spring-mass chain with `n` identical masses and fixed ends.
/// State is positions then velocities (dimension 2n); forces act on the
/// velocity block; every coordinate is sensed (C = I).
pub fn build_spring_mass(n: usize, mass: f64, stiffness: f64, damping: f64) -> Result<LinearControlSystem> {
    if n < 2 {
        return Err(Error::invalid(format!("chain needs at least 2 masses, got {n}")));
    }
    if !(mass > 0.0 && stiffness > 0.0 && damping > 0.0) {
        return Err(Error::invalid("mass, stiffness, and damping must all be positive"));
    }
    // tridiag(1, −2, 1), the fixed-end coupling stencil.
    let mut t = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        t[[i, i]] = -2.0;
        if i > 0 {
            t[[i, i - 1]] = 1.0;
        }
        if i + 1 < n {
            t[[i, i + 1]] = 1.0;
        }
    }
    let mut a = Array2::<f64>::zeros((2 * n, 2 * n));
    for i in 0..n {
        a[[i, n + i]] = 1.0;
        for j in 0..n {
            a[[n + i, j]] = stiffness / mass * t[[i, j]];
            a[[n + i, n + j]] = damping / mass * t[[i, j]];
        }
    }
    let mut b = Array2::<f64>::zeros((2 * n, n));
    for i in 0..n {
        b[[n + i, i]] = 1.0 / mass;
    }
    LinearControlSystem::new(a, b, Array2::eye(2 * n))
}

/// Relative residual tolerance required of Gramian solutions.
pub const GRAMIAN_RESIDUAL_RTOL: f64 = 1e-8;

/// Controllability and observability Gramians: the solutions of
/// A·Wc + Wc·Aᵀ + BBᵀ = 0 and Aᵀ·Wo + Wo·A + CᵀC = 0, symmetrized
/// after a residual and asymmetry check.
pub fn gramians(sys: &LinearControlSystem) -> Result<(Array2<f64>, Array2<f64>)> {
    let abscissa = sys.spectral_abscissa()?;
    if abscissa >= 0.0 {
        return Err(Error::Infeasible(format!(
            "A is not Hurwitz (max Re eigenvalue = {abscissa:.3e}); Gramians do not exist"
        )));
    }
    let qc = sys.b.dot(&sys.b.t());
    let qo = sys.c.t().dot(&sys.c);
    let wc = solve_gramian(&sys.a.view(), &qc.view())?;
    let wo = solve_gramian(&sys.a.t(), &qo.view())?;
    Ok((wc, wo))
}

fn solve_gramian(a: &ArrayView2<f64>, q: &ArrayView2<f64>) -> Result<Array2<f64>> {
    let x = linalg::lyap_continuous(a, q)?;
    let residual = a.dot(&x) + x.dot(&a.t()) + q;
    let scale = linalg::frob(q).max(f64::MIN_POSITIVE);
    let rel = linalg::frob(&residual.view()) / scale;
    if rel > GRAMIAN_RESIDUAL_RTOL {
        return Err(Error::Numerical(format!(
            "Gramian residual {rel:.3e} exceeds {GRAMIAN_RESIDUAL_RTOL:.0e}"
        )));
    }
    let skew = linalg::asymmetry(&x.view());
    if skew >= 1e-10 {
        return Err(Error::Numerical(format!("Gramian asymmetry {skew:.3e} ≥ 1e-10")));
    }
    Ok(linalg::symmetrize(&x.view()))
}

/// Truncated balancing transformation: direct modes Ψ_r, adjoint modes
/// Φ_r, and Hankel singular values. Satisfies WcWoΨ = ΨΣ², Φ*Ψ = I, and
/// both transformed Gramians equal diag(hsv).
#[derive(Debug, Clone)]
pub struct BalancedModes {
    pub psi_r: Array2<f64>,
    pub phi_r: Array2<f64>,
    /// Hankel singular values, positive and non-increasing.
    pub hsv: Vec<f64>,
}

/// Balances `sys` and keeps the leading `r` mode pairs.
///
/// Uses the square-root form: with Wc = LcLcᵀ and Wo = LoLoᵀ, the SVD
/// LoᵀLc = UΣVᵀ yields Ψ_r = LcV_rΣ_r^{−1/2} and Φ_r = LoU_rΣ_r^{−1/2}.
/// This realizes the eigenproblem WcWoΨ = ΨΣ² without ever forming the
/// non-symmetric product. Errors when r exceeds the numerical rank of
/// the Hankel spectrum (trailing σ below 1e-12·σ₁), where the
/// transformation becomes ill-conditioned.
pub fn balance(sys: &LinearControlSystem, r: usize) -> Result<BalancedModes> {
    let (wc, wo) = gramians(sys)?;
    balance_from_gramians(&wc.view(), &wo.view(), r)
}

/// Balancing given precomputed Gramians (avoids re-solving when both
/// sensor and actuator selections are needed).
pub fn balance_from_gramians(
    wc: &ArrayView2<f64>,
    wo: &ArrayView2<f64>,
    r: usize,
) -> Result<BalancedModes> {
    let n = wc.nrows();
    if r == 0 || r > n {
        return Err(Error::invalid(format!("mode count must satisfy 1 ≤ r ≤ {n}, got {r}")));
    }
    let lc = linalg::spd_sqrt(wc)?;
    let lo = linalg::spd_sqrt(wo)?;
    let m = lo.t().dot(&lc);
    let (u, sigma, vt) = m.svddc(JobSvd::Some)?;
    let u = u.expect("JobSvd::Some returns U");
    let vt = vt.expect("JobSvd::Some returns VT");
    if sigma[0] <= 0.0 || sigma[r - 1] <= 1e-12 * sigma[0] {
        return Err(Error::Numerical(format!(
            "balancing is ill-conditioned: Hankel value {r} is {:.3e} vs leading {:.3e}",
            sigma[r - 1],
            sigma[0]
        )));
    }
    let mut psi = lc.dot(&vt.slice(s![..r, ..]).t());
    let mut phi = lo.dot(&u.slice(s![.., ..r]));
    let mut hsv = Vec::with_capacity(r);
    for j in 0..r {
        let scale = 1.0 / sigma[j].sqrt();
        psi.column_mut(j).mapv_inplace(|v| v * scale);
        phi.column_mut(j).mapv_inplace(|v| v * scale);
        hsv.push(sigma[j]);
        // Deterministic orientation: largest-magnitude entry of the
        // direct mode is positive; the adjoint mode flips along to keep
        // Φ*Ψ = I.
        let mut dominant = 0.0f64;
        for &v in psi.column(j) {
            if v.abs() > dominant.abs() {
                dominant = v;
            }
        }
        if dominant < 0.0 {
            psi.column_mut(j).mapv_inplace(|v| -v);
            phi.column_mut(j).mapv_inplace(|v| -v);
        }
    }
    // A failed biorthogonality check means the Gramians fed in were
    // inconsistent (e.g. from different systems).
    let gram = phi.t().dot(&psi);
    let eye = Array2::<f64>::eye(r);
    let dev = linalg::frob(&(gram - eye).view());
    if dev > 1e-6 {
        return Err(Error::Numerical(format!("balanced modes lost biorthogonality: ‖Φ*Ψ − I‖ = {dev:.3e}")));
    }
    Ok(BalancedModes { psi_r: psi, phi_r: phi, hsv })
}

/// Sensor proxy log det C·Wc·Cᵀ = log det Wc[J, J]. Returns −∞ for a
/// numerically singular (or indefinite) submatrix rather than erroring:
/// −∞ simply ranks the subset below every non-degenerate one.
pub fn h2_proxy_sensors(wc: &ArrayView2<f64>, indices: &[usize]) -> f64 {
    gramian_subset_logdet(wc, indices)
}

/// Actuator proxy log det Bᵀ·Wo·B = log det Wo[J, J].
pub fn h2_proxy_actuators(wo: &ArrayView2<f64>, indices: &[usize]) -> f64 {
    gramian_subset_logdet(wo, indices)
}

fn gramian_subset_logdet(gram: &ArrayView2<f64>, indices: &[usize]) -> f64 {
    let sub = linalg::principal_submatrix(gram, indices);
    linalg::logdet_spd(&sub.view()).unwrap_or(f64::NEG_INFINITY)
}

/// Selects `p` sensor coordinates by cost-penalized pivoting on the
/// direct balanced modes of the fully sensed/actuated system (B and C
/// replaced by identity, so every coordinate is a candidate).
///
/// Each mode row is weighted by the square root of its Hankel singular
/// value before pivoting. The sensor objective log det C·Wc·Cᵀ factors
/// through exactly that weighted matrix — Wc = Ψ·Σ·Ψᵀ, so the selected
/// block has determinant vol²(C·Ψ_r·Σ_r^½) once r captures the
/// reachable subspace — which makes the greedy volume maximization
/// track the objective instead of treating weak and strong modes
/// alike. Larger `r` is therefore safe here: extra modes arrive
/// pre-attenuated rather than drowning the leading ones.
pub fn select_sensors(
    sys: &LinearControlSystem,
    r: usize,
    cost: &CostField,
    p: usize,
) -> Result<Selection> {
    let modes = balance(&sys.with_identity_io(), r)?;
    let mut weighted: Array2<f64> = modes.psi_r.t().to_owned();
    for (i, mut row) in weighted.rows_mut().into_iter().enumerate() {
        row *= modes.hsv[i].sqrt();
    }
    qr_pivot_select_cost(&weighted.view(), cost, p)
}

/// Selects `p` actuator coordinates by cost-penalized pivoting on the
/// adjoint balanced modes Φ_r*, optionally restricted to an allowed
/// coordinate set (for plants whose inputs can only reach some
/// coordinates — e.g. forces entering velocity rows). Returned indices
/// are in original state coordinates. The cost field is indexed by
/// original coordinates as well.
///
/// Unlike [`select_sensors`], the rows keep equal weight: actuator
/// placement works from a short truncation (r of about 2p), where the
/// truncation itself filters out weak modes and equal weighting makes
/// the pivoting spread actuators across everything retained instead of
/// concentrating authority on the top mode pair. Keep `r` small here;
/// the un-attenuated rows mean large `r` lets weak modes steer picks.
pub fn select_actuators(
    sys: &LinearControlSystem,
    r: usize,
    cost: &CostField,
    p: usize,
    allowed: Option<&[usize]>,
) -> Result<Selection> {
    let modes = balance(&sys.with_identity_io(), r)?;
    let candidates = modes.phi_r.t();
    match allowed {
        None => qr_pivot_select_cost(&candidates, cost, p),
        Some(idx) => {
            let (sub, map) = restrict_candidates(&candidates, idx)?;
            let sub_cost = cost.subset(idx)?;
            let local = qr_pivot_select_cost(&sub.view(), &sub_cost, p)?;
            translate_selection(&local, &map)
        }
    }
}

/// The velocity-coordinate block of a spring-mass chain (the second
/// half of the state), the physically actuatable set.
pub fn velocity_block(n_states: usize) -> Result<Vec<usize>> {
    if n_states % 2 != 0 {
        return Err(Error::invalid(format!(
            "state dimension {n_states} is odd; expected positions-then-velocities layout"
        )));
    }
    Ok((n_states / 2..n_states).collect())
}

/// Benchmark sensor cost for an `n_masses` chain: a Gaussian bump
/// centered mid-array (width n/5), applied identically to the position
/// and velocity coordinate of each mass, so sensing the middle is the
/// most expensive. Values lie in (0, 1].
pub fn sensor_cost_gaussian(n_masses: usize, gamma: f64) -> Result<CostField> {
    mass_cost_profile(n_masses, gamma, |g| g)
}

/// Benchmark actuator cost: one minus the same Gaussian, so pushing at
/// the edges of the chain is expensive and the middle is cheap.
pub fn actuator_cost_inverted_gaussian(n_masses: usize, gamma: f64) -> Result<CostField> {
    mass_cost_profile(n_masses, gamma, |g| 1.0 - g)
}

fn mass_cost_profile(
    n_masses: usize,
    gamma: f64,
    shape: impl Fn(f64) -> f64,
) -> Result<CostField> {
    if n_masses < 2 {
        return Err(Error::invalid(format!("chain needs at least 2 masses, got {n_masses}")));
    }
    let center = (n_masses as f64 - 1.0) / 2.0;
    let width = n_masses as f64 / 5.0;
    let per_mass: Vec<f64> = (0..n_masses)
        .map(|i| {
            let z = (i as f64 - center) / width;
            shape((-0.5 * z * z).exp())
        })
        .collect();
    let mut eta = per_mass.clone();
    eta.extend_from_slice(&per_mass);
    CostField::new(eta, gamma)
}

/// Hard cap on exhaustive enumeration size.
pub const ENUMERATION_LIMIT: u64 = 10_000_000;

/// Binomial coefficient C(n, k) in wide arithmetic (enumeration guard).
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Exhaustive proxy evaluation over every p-subset of `0..n`, in
/// lexicographic order. Holds one f64 per subset, so the guard keeps
/// memory and runtime bounded.
#[derive(Debug, Clone)]
pub struct ProxyEnumeration {
    /// log det Gramian[J, J] per subset, lexicographic subset order.
    pub values: Vec<f64>,
    /// Best subset and its value.
    pub best_subset: Vec<usize>,
    pub best_value: f64,
}

impl ProxyEnumeration {
    pub fn count(&self) -> usize {
        self.values.len()
    }

    /// Fraction of subsets with value ≤ `value` ("outperforms this
    /// share of all arrays"). Ranges over [0, 1].
    pub fn percentile_of(&self, value: f64) -> f64 {
        let below = self.values.iter().filter(|&&v| v <= value).count();
        below as f64 / self.values.len() as f64
    }

    /// 1-based rank from the top: 1 + number of subsets strictly better.
    pub fn rank_of(&self, value: f64) -> usize {
        1 + self.values.iter().filter(|&&v| v > value).count()
    }

    /// The `q`-quantile (0 ≤ q ≤ 1) of the value distribution.
    pub fn quantile(&self, q: f64) -> f64 {
        let mut sorted = self.values.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("proxy values are ordered"));
        let idx = ((sorted.len() - 1) as f64 * q.clamp(0.0, 1.0)).round() as usize;
        sorted[idx]
    }
}

/// Evaluates the Gramian-submatrix proxy for every p-subset of `0..n`.
/// Subsets are split into contiguous lexicographic chunks, evaluated in
/// parallel, and concatenated in order, so the result is independent of
/// thread count. Errors when C(n, p) exceeds [`ENUMERATION_LIMIT`].
pub fn enumerate_proxy(n: usize, p: usize, gram: &ArrayView2<f64>) -> Result<ProxyEnumeration> {
    if p == 0 || p > n {
        return Err(Error::invalid(format!("subset size must satisfy 1 ≤ p ≤ {n}, got {p}")));
    }
    if gram.nrows() != n || gram.ncols() != n {
        return Err(Error::dims(format!(
            "Gramian is {}×{} but candidate count is {n}",
            gram.nrows(),
            gram.ncols()
        )));
    }
    let total_wide = binomial(n, p);
    if total_wide > ENUMERATION_LIMIT as u128 {
        return Err(Error::CombinatorialGuard {
            n,
            p,
            count: total_wide,
            limit: ENUMERATION_LIMIT,
        });
    }
    let total = total_wide as usize;

    let chunk = 1 << 14;
    let n_chunks = total.div_ceil(chunk);
    let per_chunk: Vec<Vec<f64>> = par::map_indexed(n_chunks, |ci| {
        let start = ci * chunk;
        let stop = (start + chunk).min(total);
        let mut combo = unrank_combination(start as u128, n, p);
        let mut vals = Vec::with_capacity(stop - start);
        for _ in start..stop {
            vals.push(gramian_subset_logdet(gram, &combo));
            advance_combination(&mut combo, n);
        }
        vals
    });

    let mut values = Vec::with_capacity(total);
    for v in per_chunk {
        values.extend(v);
    }
    let (best_idx, best_value) = values
        .iter()
        .cloned()
        .enumerate()
        .max_by(|(_, a), (_, b)| a.partial_cmp(b).expect("proxy values are ordered"))
        .expect("at least one subset");
    let best_subset = unrank_combination(best_idx as u128, n, p);
    Ok(ProxyEnumeration { values, best_subset, best_value })
}

/// The combination at position `rank` in the lexicographic order of
/// ascending p-subsets of `0..n` (combinatorial number system).
fn unrank_combination(mut rank: u128, n: usize, p: usize) -> Vec<usize> {
    let mut combo = Vec::with_capacity(p);
    let mut x = 0usize;
    for slot in 0..p {
        loop {
            let with_x = binomial(n - x - 1, p - slot - 1);
            if rank < with_x {
                break;
            }
            rank -= with_x;
            x += 1;
        }
        combo.push(x);
        x += 1;
    }
    combo
}

/// Steps an ascending combination to its lexicographic successor.
/// The last combination wraps to an out-of-range state and must not be
/// advanced further (callers count iterations).
fn advance_combination(combo: &mut [usize], n: usize) {
    let p = combo.len();
    let mut i = p;
    while i > 0 {
        i -= 1;
        if combo[i] < n - (p - i) {
            combo[i] += 1;
            for j in (i + 1)..p {
                combo[j] = combo[j - 1] + 1;
            }
            return;
        }
    }
    // Past the end; leave a sentinel that would fail bounds checks.
    if p > 0 {
        combo[0] = n;
    }
}
