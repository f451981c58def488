//! The `select` subcommand: one cost-penalized selection on a basis
//! read from disk, written back as a rank/index/cost CSV.

use std::path::Path;

use sentry_core::io::{load_matrix, save_selection_csv, MatrixData};
use sentry_core::pivoting::{
    qr_pivot_select_cost, restrict_candidates, translate_selection, CostField, Selection,
};
use sentry_core::reconstruct::{Basis, BasisKind, BasisModes};
use sentry_core::{Error, Result};

use crate::SelectArgs;

pub fn run(args: &SelectArgs) -> Result<()> {
    let basis = load_basis(&args.basis)?;
    let n = basis.n();
    let eta = match &args.cost {
        Some(path) => {
            let eta = load_vector(path)?;
            if eta.len() != n {
                return Err(Error::dims(format!(
                    "cost file has {} entries but the basis has {n} locations",
                    eta.len()
                )));
            }
            eta
        }
        None => vec![0.0; n],
    };
    let cost = CostField::new(eta, args.gamma)?;

    let selection = match &args.restrict {
        None => basis.select(&cost, args.p)?,
        Some(path) => {
            let allowed = load_indices(path, n)?;
            restricted_select(&basis, &cost, args.p, &allowed)?
        }
    };
    save_selection_csv(&args.out, &selection)
}

/// Runs a selection described by a manifest section instead of flags;
/// used when replaying saved configurations.
pub fn run_config(cfg: &sentry_core::io::SelectConfig, out: &Path) -> Result<()> {
    let args = SelectArgs {
        basis: cfg.basis.clone().into(),
        p: cfg.p,
        cost: cfg.cost.clone().map(Into::into),
        gamma: cfg.gamma,
        restrict: cfg.restrict.clone().map(Into::into),
        out: out.to_path_buf(),
        seed: 0,
    };
    run(&args)
}

/// Reads a matrix file and wraps it as a basis, trusting the `kind`
/// header; unknown kinds are a validation error so typos in hand-edited
/// files surface immediately.
pub fn load_basis(path: &Path) -> Result<Basis> {
    let file = load_matrix(path)?;
    let kind = BasisKind::parse(&file.kind).ok_or_else(|| {
        Error::invalid(format!(
            "unrecognized basis kind `{}` in {} (expected one of svd, randomized, dmd, \
             balanced-direct, balanced-adjoint, analytic)",
            file.kind,
            path.display()
        ))
    })?;
    let provenance = path.display().to_string();
    Ok(match file.data {
        MatrixData::Real(m) => Basis::real(m, kind, provenance),
        MatrixData::Complex(m) => Basis::complex(m, kind, provenance),
    })
}

/// Loads a single-row or single-column real matrix as a flat vector.
fn load_vector(path: &Path) -> Result<Vec<f64>> {
    let file = load_matrix(path)?;
    let m = match file.data {
        MatrixData::Real(m) => m,
        MatrixData::Complex(_) => {
            return Err(Error::invalid(format!(
                "{} is complex; cost and restriction files must be real",
                path.display()
            )))
        }
    };
    if m.nrows() != 1 && m.ncols() != 1 {
        return Err(Error::dims(format!(
            "{} is {}×{}; expected a single row or column",
            path.display(),
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(m.iter().copied().collect())
}

/// Loads a vector of candidate indices: integer-valued, within range.
fn load_indices(path: &Path, n: usize) -> Result<Vec<usize>> {
    load_vector(path)?
        .into_iter()
        .map(|v| {
            if v.fract() != 0.0 || v < 0.0 || v >= n as f64 {
                return Err(Error::invalid(format!(
                    "restriction entry {v} in {} is not an index in 0..{n}",
                    path.display()
                )));
            }
            Ok(v as usize)
        })
        .collect()
}

/// Selection over an allowed subset of candidates, mapped back to
/// original indexing.
pub fn restricted_select(
    basis: &Basis,
    cost: &CostField,
    p: usize,
    allowed: &[usize],
) -> Result<Selection> {
    let sub_cost = cost.subset(allowed)?;
    let local = match basis.candidate_matrix() {
        BasisModes::Real(v) => {
            let (sub, _) = restrict_candidates(&v.view(), allowed)?;
            qr_pivot_select_cost(&sub.view(), &sub_cost, p)?
        }
        BasisModes::Complex(v) => {
            let (sub, _) = restrict_candidates(&v.view(), allowed)?;
            qr_pivot_select_cost(&sub.view(), &sub_cost, p)?
        }
    };
    translate_selection(&local, allowed)
}
