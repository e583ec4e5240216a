use std::path::{Path, PathBuf};

use clap::Subcommand;
use printlab_core::hallucination::{
    aggregate_by_style, mask_iou, overlay_levels, render_style_table, IouResult, RateOptions,
    DEFAULT_BOOTSTRAP_RESAMPLES, DEFAULT_BOOTSTRAP_SEED, DEFAULT_IOU_THRESHOLD,
};
use printlab_core::io::{encode_gray, read_mask};
use printlab_core::report::{format_fixed_half_up, TextTable};
use serde::Deserialize;

use crate::{print_json, read_text, write_or_print, CliError, CliResult};

#[derive(Debug, Subcommand)]
pub enum HallucinationCmd {
    /// IoU between an expected and a generated foreground mask.
    Iou {
        #[arg(long)]
        expected: PathBuf,
        #[arg(long)]
        generated: PathBuf,
    },
    /// Per-style hallucination error rates over a pair list.
    Report {
        /// JSON list of {pair_id, expected_mask_ref, generated_mask_ref, style_label}.
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long, default_value_t = DEFAULT_IOU_THRESHOLD)]
        threshold: f64,
        #[arg(long, default_value_t = DEFAULT_BOOTSTRAP_RESAMPLES)]
        resamples: usize,
        #[arg(long, default_value_t = DEFAULT_BOOTSTRAP_SEED)]
        seed: u64,
        /// Leave pairs whose masks are both empty out of the rates.
        #[arg(long)]
        skip_degenerate: bool,
        /// Append a per-pair IoU table.
        #[arg(long)]
        per_pair: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Three-level PGM: 0 background, 128 overlap, 255 hallucinated.
    Overlay {
        #[arg(long)]
        expected: PathBuf,
        #[arg(long)]
        generated: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Deserialize)]
struct PairEntry {
    #[serde(default)]
    pair_id: Option<String>,
    expected_mask_ref: String,
    generated_mask_ref: String,
    style_label: String,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum PairList {
    Wrapped { pairs: Vec<PairEntry> },
    Bare(Vec<PairEntry>),
}

fn resolve(base: &Path, r: &str) -> PathBuf {
    let p = Path::new(r);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

pub fn run(cmd: HallucinationCmd) -> CliResult {
    match cmd {
        HallucinationCmd::Iou { expected, generated } => {
            print_json(&mask_iou(&read_mask(&expected)?, &read_mask(&generated)?)?)
        }
        HallucinationCmd::Report {
            pairs,
            threshold,
            resamples,
            seed,
            skip_degenerate,
            per_pair,
            out,
        } => {
            let list: PairList = serde_json::from_str(&read_text(&pairs)?)
                .map_err(|e| CliError::Invalid(format!("{}: {e}", pairs.display())))?;
            let entries = match list {
                PairList::Wrapped { pairs } | PairList::Bare(pairs) => pairs,
            };
            let base = pairs.parent().unwrap_or(Path::new("."));
            let mut results: Vec<(String, IouResult, String)> = Vec::with_capacity(entries.len());
            for (i, e) in entries.iter().enumerate() {
                let exp = read_mask(&resolve(base, &e.expected_mask_ref))?;
                let gen = read_mask(&resolve(base, &e.generated_mask_ref))?;
                let id = e.pair_id.clone().unwrap_or_else(|| format!("#{}", i + 1));
                let r = mask_iou(&exp, &gen).map_err(|err| CliError::Invalid(format!("pair {id}: {err}")))?;
                results.push((id, r, e.style_label.clone()));
            }
            let opts = RateOptions {
                threshold,
                resamples,
                seed,
                skip_degenerate,
            };
            let labelled: Vec<(IouResult, String)> = results.iter().map(|(_, r, s)| (*r, s.clone())).collect();
            let mut text = render_style_table(&aggregate_by_style(&labelled, &opts)?);
            if per_pair {
                let mut t = TextTable::new(["Pair", "Style", "IoU", "Hallucination"].map(String::from).to_vec());
                for (id, r, style) in &results {
                    t.row(vec![
                        id.clone(),
                        style.clone(),
                        format_fixed_half_up(r.iou, 4),
                        format_fixed_half_up(r.hallucination_score, 4),
                    ]);
                }
                text.push('\n');
                text.push_str(&t.render());
            }
            write_or_print(out.as_deref(), &text)
        }
        HallucinationCmd::Overlay {
            expected,
            generated,
            out,
        } => {
            let exp = read_mask(&expected)?;
            let gen = read_mask(&generated)?;
            let levels = overlay_levels(&exp, &gen)?;
            let bytes = encode_gray(exp.width(), exp.height(), levels.into_iter());
            std::fs::write(&out, bytes).map_err(|e| CliError::Runtime(format!("{}: {e}", out.display())))
        }
    }
}
