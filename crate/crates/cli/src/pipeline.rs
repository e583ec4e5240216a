use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, Subcommand};
use printlab_annotate::SessionStore;
use printlab_core::io::write_placement;
use printlab_core::pipeline::{
    load_manifest, make_placement, run_evaluation, validate_manifest, write_outputs, write_synthetic_corpus,
    EvaluateOptions, LoadedManifest, PipelineError, PlacementSamplingConfig, SyntheticCorpusConfig,
};

use crate::{print_json, read_text, CliError, CliResult};

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Output directory for the report files.
    #[arg(long)]
    out: PathBuf,
    /// Replaces the manifest seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Extra override log applied to every pair it names.
    #[arg(long)]
    overrides: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum PlacementCmd {
    /// Sample a placement transform and write it as JSON.
    Make(MakeArgs),
}

#[derive(Debug, Args)]
pub struct MakeArgs {
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 512)]
    width: u32,
    #[arg(long, default_value_t = 512)]
    height: u32,
    /// Maximum absolute rotation in degrees.
    #[arg(long)]
    rotation_deg: Option<f64>,
    /// Maximum relative scale change.
    #[arg(long)]
    scale_delta: Option<f64>,
    /// Maximum translation per axis in pixels.
    #[arg(long)]
    translation: Option<f64>,
    /// Control points per side of the distortion grid.
    #[arg(long)]
    tps_grid: Option<u32>,
    /// Maximum control-point displacement in pixels.
    #[arg(long)]
    tps_jitter: Option<f64>,
    /// Maximum crop inset per side as a fraction of the frame.
    #[arg(long)]
    crop_margin: Option<f64>,
    /// Start from all-zero ranges instead of the defaults.
    #[arg(long)]
    zeroed: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 100)]
    pairs: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Skip the score and quality tables.
    #[arg(long)]
    no_metrics: bool,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Directory holding session state.
    #[arg(long, default_value = "annotation-store")]
    store: PathBuf,
    /// Base directory for relative manifest refs.
    #[arg(long, default_value = ".")]
    manifest_root: PathBuf,
    #[arg(long, default_value = "127.0.0.1:8080")]
    addr: SocketAddr,
}

fn load(path: &std::path::Path) -> Result<LoadedManifest, CliError> {
    load_manifest(path).map_err(|e| match e {
        PipelineError::Json(_) => CliError::Invalid(e.to_string()),
        other => CliError::from(other),
    })
}

pub fn evaluate(a: EvaluateArgs) -> CliResult {
    let loaded = load(&a.manifest)?;
    let override_log = a.overrides.as_deref().map(read_text).transpose()?;
    let report = run_evaluation(
        &loaded,
        &EvaluateOptions {
            seed: a.seed,
            override_log,
        },
    )?;
    write_outputs(&report, &a.out)?;
    for s in &report.skipped {
        eprintln!("skipped {}: {}", s.pair_id, s.reason);
    }
    println!(
        "evaluated {} pair(s), skipped {}; report written to {}",
        report.pairs.len(),
        report.skipped.len(),
        a.out.display()
    );
    Ok(())
}

pub fn placement(cmd: PlacementCmd) -> CliResult {
    let PlacementCmd::Make(a) = cmd;
    let mut cfg = if a.zeroed {
        PlacementSamplingConfig::zeroed(a.width, a.height)
    } else {
        PlacementSamplingConfig::new(a.width, a.height)
    };
    if let Some(v) = a.rotation_deg {
        cfg.rotation_deg = v;
    }
    if let Some(v) = a.scale_delta {
        cfg.scale_delta = v;
    }
    if let Some(v) = a.translation {
        cfg.translation = v;
    }
    if let Some(v) = a.tps_grid {
        cfg.tps_grid = v;
    }
    if let Some(v) = a.tps_jitter {
        cfg.tps_jitter = v;
    }
    if let Some(v) = a.crop_margin {
        cfg.crop_margin = v;
    }
    cfg.validate().map_err(|e| CliError::Invalid(e.to_string()))?;
    let t = make_placement(a.seed, &cfg)?;
    write_placement(&a.out, &t)?;
    Ok(())
}

pub fn validate(a: ValidateArgs) -> CliResult {
    let loaded = load(&a.manifest)?;
    let report = validate_manifest(&loaded);
    if a.json {
        print_json(&report)?;
    } else if report.is_valid() {
        println!("manifest ok: {} pair(s)", report.pairs);
    } else {
        for i in &report.issues {
            match &i.pair_id {
                Some(p) => println!("{p}: {}: {}", i.field, i.message),
                None => println!("{}: {}", i.field, i.message),
            }
        }
    }
    if report.is_valid() {
        Ok(())
    } else {
        Err(CliError::Invalid(format!("{} issue(s) found", report.issues.len())))
    }
}

pub fn synth(a: SynthArgs) -> CliResult {
    let mut cfg = SyntheticCorpusConfig::new(a.pairs, a.seed);
    cfg.with_metrics = !a.no_metrics;
    let corpus = write_synthetic_corpus(&a.out, &cfg)?;
    println!("{}", corpus.manifest_path.display());
    Ok(())
}

pub fn serve(a: ServeArgs) -> CliResult {
    let store = SessionStore::open(&a.store, &a.manifest_root)?;
    for (dir, e) in store.load_errors() {
        eprintln!("not serving {}: {e}", dir.display());
    }
    let rt = tokio::runtime::Runtime::new()?;
    eprintln!("listening on http://{}", a.addr);
    rt.block_on(printlab_annotate::serve(a.addr, Arc::new(store)))?;
    Ok(())
}
