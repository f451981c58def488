//! Sensor placement for a vibrating circular drum.
//!
//! The field is a superposition of analytic drum modes on a polar grid;
//! sensors pay a radial cost that oscillates with distance from the
//! center. The sweep selects arrays at increasing cost weighting and
//! scores each by mean fractional reconstruction error over seeded
//! initial conditions; random arrays of the same size give the
//! baseline distribution the sweep is judged against.
//!
//! Artifacts: `pareto.csv`, `random_baseline.csv`,
//! `sensor_locations.csv`, `snapshot.csv`, and `manifest.toml`.

use std::io::Write;
use std::path::Path;

use ndarray::Axis;
use sentry_core::io::{format_float, parse_gamma_grid, save_pareto_csv, DemoConfig, ExperimentConfig};
use sentry_core::membrane::{
    evolve, membrane_basis, radial_cost, sample_coefficients, time_grid, MembraneEvaluator,
    MembraneModel,
};
use sentry_core::reconstruct::{measure, random_selections, reconstruct, ParetoPoint};
use sentry_core::Result;

use super::artifact;

/// Snapshot horizon and spacing of the evaluation protocol.
const TIME_END: f64 = 10.0;
const TIME_STEP: f64 = 0.1;

pub fn run(manifest: &ExperimentConfig, demo: &DemoConfig, out_dir: &Path) -> Result<()> {
    let gammas = parse_gamma_grid(&demo.gammas)?;
    let model = MembraneModel::standard()?;
    let times = time_grid(TIME_END, TIME_STEP)?;
    let eta = radial_cost(&model);

    let evaluator =
        MembraneEvaluator::new(&model, &times, demo.initial_conditions, manifest.seed)?;
    let points = sentry_core::reconstruct::pareto_sweep(
        evaluator.basis(),
        &eta,
        &gammas,
        demo.p,
        "mean fractional reconstruction error",
        |sel| evaluator.mean_error(sel),
    )?;
    save_pareto_csv(out_dir.join("pareto.csv"), &points)?;

    // Random arrays of the same size, scored by the same evaluator.
    let mut baseline = artifact(out_dir, "random_baseline.csv")?;
    writeln!(baseline, "trial,total_cost,error")?;
    let arrays = random_selections(model.n_grid(), demo.p, demo.trials, manifest.seed)?;
    for (t, sel) in arrays.iter().enumerate() {
        let cost: f64 = sel.indices.iter().map(|&i| eta[i]).sum();
        let err = evaluator.mean_error(sel)?;
        writeln!(baseline, "{t},{},{}", format_float(cost), format_float(err))?;
    }
    baseline.flush()?;

    write_sensor_locations(out_dir, &model, &eta, &points)?;
    write_snapshot(out_dir, &model, manifest.seed, &points)?;
    Ok(())
}

/// Physical coordinates of the arrays at the sweep endpoints.
fn write_sensor_locations(
    out_dir: &Path,
    model: &MembraneModel,
    eta: &[f64],
    points: &[ParetoPoint],
) -> Result<()> {
    let mut w = artifact(out_dir, "sensor_locations.csv")?;
    writeln!(w, "gamma,rank,index,r,theta,eta")?;
    let last = points.len() - 1;
    let endpoints: &[usize] = if last == 0 { &[0] } else { &[0, last] };
    for &k in endpoints {
        let pt = &points[k];
        for (rank, &idx) in pt.selection.indices.iter().enumerate() {
            let (r, theta) = model.grid_point(idx);
            writeln!(
                w,
                "{},{},{idx},{},{},{}",
                format_float(pt.gamma),
                rank + 1,
                format_float(r),
                format_float(theta),
                format_float(eta[idx]),
            )?;
        }
    }
    w.flush()?;
    Ok(())
}

/// The field at the end of the horizon next to its reconstruction from
/// the unweighted array, one grid row per line.
fn write_snapshot(
    out_dir: &Path,
    model: &MembraneModel,
    seed: u64,
    points: &[ParetoPoint],
) -> Result<()> {
    let b = sample_coefficients(model, seed);
    let u = evolve(model, &b, TIME_END)?;
    let basis = membrane_basis(model);
    let sel = &points[0].selection;
    let field = u.clone().insert_axis(Axis(1));
    let y = measure(&field.view(), sel)?;
    let uhat = reconstruct(&y.view(), &basis, sel)?;

    let mut w = artifact(out_dir, "snapshot.csv")?;
    writeln!(w, "r,theta,u,uhat")?;
    for row in 0..model.n_grid() {
        let (r, theta) = model.grid_point(row);
        writeln!(
            w,
            "{},{},{},{}",
            format_float(r),
            format_float(theta),
            format_float(u[row]),
            format_float(uhat[[row, 0]]),
        )?;
    }
    w.flush()?;
    Ok(())
}
