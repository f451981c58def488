//! The built-in benchmark experiments behind `sentry demo` and
//! `sentry run`.
//!
//! Each demo is a pure function of its manifest (version, seed, and
//! resolved parameters): artifacts contain no timestamps, hostnames, or
//! directory names, so replaying a manifest into any directory must
//! reproduce every CSV byte for byte. The manifest itself is written
//! last, after all artifacts landed.

mod dmd_synth;
mod membrane;
mod spring_mass;

use std::fs;
use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use sentry_core::io::{load_config, save_config, DemoConfig, ExperimentConfig};
use sentry_core::{Error, Result};

use crate::{select_cmd, DemoArgs};

/// Per-demo default parameters, matching each benchmark's published
/// protocol; command-line flags override field by field.
fn defaults(name: &str) -> Result<DemoConfig> {
    let (p, gammas, trials, initial_conditions) = match name {
        "spring-mass" => (6, "0:10:6", 25, 1),
        "membrane" => (55, "0:20:11", 100, 50),
        "dmd-synthetic" => (10, "0:0:1", 100, 1),
        other => {
            return Err(Error::invalid(format!(
                "unknown demo `{other}`; expected spring-mass, membrane, or dmd-synthetic"
            )))
        }
    };
    Ok(DemoConfig {
        name: name.to_string(),
        p,
        gammas: gammas.to_string(),
        trials,
        initial_conditions,
        full_enumeration: false,
    })
}

pub fn run_from_args(args: &DemoArgs) -> Result<()> {
    let mut demo = defaults(&args.name)?;
    if let Some(p) = args.p {
        demo.p = p;
    }
    if let Some(g) = &args.gammas {
        demo.gammas = g.clone();
    }
    if let Some(t) = args.trials {
        demo.trials = t;
    }
    if let Some(ic) = args.initial_conditions {
        demo.initial_conditions = ic;
    }
    demo.full_enumeration = args.full_enumeration;
    let manifest = ExperimentConfig {
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: args.seed,
        demo: Some(demo),
        select: None,
    };
    execute(&manifest, &args.out_dir)
}

/// Replays a manifest: demos rerun their full pipeline; select
/// manifests rerun the one-off selection into `out_dir/selection.csv`.
pub fn replay(manifest_path: &Path, out_dir: &Path) -> Result<()> {
    let manifest = load_config(manifest_path)?;
    if manifest.select.is_some() {
        fs::create_dir_all(out_dir)?;
        let cfg = manifest.select.as_ref().expect("checked above");
        select_cmd::run_config(cfg, &out_dir.join("selection.csv"))?;
        return save_config(out_dir.join("manifest.toml"), &manifest);
    }
    execute(&manifest, out_dir)
}

fn execute(manifest: &ExperimentConfig, out_dir: &Path) -> Result<()> {
    manifest.validate()?;
    let demo = manifest
        .demo
        .as_ref()
        .ok_or_else(|| Error::invalid("manifest has no demo section"))?;
    fs::create_dir_all(out_dir)?;
    match demo.name.as_str() {
        "spring-mass" => spring_mass::run(manifest, demo, out_dir)?,
        "membrane" => membrane::run(manifest, demo, out_dir)?,
        "dmd-synthetic" => dmd_synth::run(manifest, demo, out_dir)?,
        other => {
            return Err(Error::invalid(format!(
                "unknown demo `{other}`; expected spring-mass, membrane, or dmd-synthetic"
            )))
        }
    }
    save_config(out_dir.join("manifest.toml"), manifest)
}

/// Buffered writer for a demo artifact.
pub(crate) fn artifact(out_dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(out_dir.join(name))?))
}
