//! Cost-constrained sparse sensor and actuator selection over
//! dynamically relevant bases.
//!
//! The core primitive is column-pivoted QR selection with an optional
//! per-location cost penalty ([`pivoting`]). Candidate bases come from
//! data (truncated/randomized SVD in [`bases`], dynamic mode
//! decomposition in [`dmd`]), from control structure (balanced
//! truncation in [`balanced`]), or from analysis (the vibrating-membrane
//! Fourier/Bessel modes in [`membrane`]). Reconstruction, error metrics,
//! cost-sweep machinery, and random baselines live in [`reconstruct`];
//! [`io`] provides the on-disk formats used by the CLI.
//!
//! All randomized routines derive independent per-task streams from a
//! single root seed ([`seeds`]), so results are identical whether the
//! data-parallel feature (`parallel`, on by default) is enabled or not.

pub mod balanced;
pub mod bases;
pub mod dmd;
pub mod error;
pub mod io;
pub mod linalg;
pub mod membrane;
pub mod par;
pub mod pivoting;
pub mod reconstruct;
pub mod seeds;

pub use balanced::{
    balance, build_spring_mass, enumerate_proxy, gramians, lqg_simulate, select_actuators,
    select_sensors, BalancedModes, LinearControlSystem, LqgDesign, LqgOptions, ProxyEnumeration,
};
pub use dmd::{
    add_relative_noise, fit_dmd, kalman_estimate, predict_continuous, predict_discrete,
    proximity_cost_from_mask, synthetic_wave_field, train_test_split_errors, DmdModel,
    KalmanEstimate, SplitErrors,
};
pub use error::{Error, Result};
pub use io::{
    load_config, load_matrix, parse_gamma_grid, save_complex_matrix, save_config, save_matrix,
    save_pareto_csv, save_selection_csv, DemoConfig, ExperimentConfig, MatrixData, MatrixFile,
    SelectConfig,
};
pub use membrane::{
    bessel_zero, membrane_basis, membrane_benchmark, radial_cost, sample_coefficients,
    svd_split_benchmark, CoefficientVector, MembraneEvaluator, MembraneModel,
};
pub use pivoting::{
    qr_pivot_select, qr_pivot_select_cost, restrict_candidates, translate_selection, CostField,
    Selection,
};
pub use reconstruct::{
    fractional_error, measure, pareto_sweep, random_selections, reconstruct, Basis, BasisKind,
    BasisModes, ParetoPoint,
};
