use std::path::PathBuf;

use clap::{Subcommand, ValueEnum};
use printlab_core::consistency::{
    aggregate_local, apply_overrides, classify, error_rates, match_minutiae, parse_override_log, render_local_table,
    LocalRecord, MatchTolerance, DEFAULT_BOX_SIZE,
};
use printlab_core::geometry::Provenance;
use printlab_core::io::read_minutiae;
use printlab_core::pipeline::EvaluationReport;
use serde::Deserialize;
use serde_json::json;

use crate::{print_json, read_text, write_or_print, CliError, CliResult};

#[derive(Debug, Subcommand)]
pub enum ConsistencyCmd {
    /// Match an expected set against a generated set and count errors.
    Match {
        #[arg(long)]
        expected: PathBuf,
        #[arg(long)]
        generated: PathBuf,
        /// Side of the tolerance box in pixels, centred on the expected minutia.
        #[arg(long, default_value_t = DEFAULT_BOX_SIZE)]
        box_size: f64,
        /// Optional orientation tolerance in degrees.
        #[arg(long)]
        angle_tolerance: Option<f64>,
        /// Override log applied after matching.
        #[arg(long)]
        overrides: Option<PathBuf>,
        /// Pair id used to select records from the override log.
        #[arg(long, default_value = "")]
        pair_id: String,
    },
    /// Local error table from per-pair records or an evaluation report.
    Report {
        #[arg(long)]
        records: PathBuf,
        #[arg(long, value_enum, default_value_t = GroupBy::Quality)]
        group_by: GroupBy,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GroupBy {
    Quality,
    None,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RecordsDoc {
    Report(Box<EvaluationReport>),
    Records(Vec<LocalRecord>),
}

pub fn run(cmd: ConsistencyCmd) -> CliResult {
    match cmd {
        ConsistencyCmd::Match {
            expected,
            generated,
            box_size,
            angle_tolerance,
            overrides,
            pair_id,
        } => {
            let tol = MatchTolerance::new(box_size / 2.0, angle_tolerance)
                .map_err(|e| CliError::Invalid(e.to_string()))?;
            let exp = read_minutiae(&expected, Provenance::Expected)?;
            let gen = read_minutiae(&generated, Provenance::Generated)?;
            let auto = match_minutiae(&exp, &gen, &tol);
            let ovr = match &overrides {
                Some(p) => parse_override_log(&read_text(p)?, &pair_id)?,
                None => Vec::new(),
            };
            let (assignment, _) = apply_overrides(&auto, &exp, &gen, &ovr)?;
            let counts = classify(&assignment);
            print_json(&json!({
                "assignment": assignment,
                "counts": counts,
                "rates": error_rates(counts),
                "overrides_applied": ovr.len(),
            }))
        }
        ConsistencyCmd::Report {
            records,
            group_by,
            out,
        } => {
            let doc: RecordsDoc = serde_json::from_str(&read_text(&records)?)
                .map_err(|e| CliError::Invalid(format!("{}: {e}", records.display())))?;
            let mut recs: Vec<LocalRecord> = match doc {
                RecordsDoc::Report(r) => r
                    .pairs
                    .iter()
                    .map(|p| LocalRecord {
                        pair_id: p.pair_id.clone(),
                        rates: p.rates,
                        quality_class: p.quality_class,
                    })
                    .collect(),
                RecordsDoc::Records(r) => r,
            };
            if group_by == GroupBy::None {
                recs.iter_mut().for_each(|r| r.quality_class = None);
            }
            write_or_print(out.as_deref(), &render_local_table(&aggregate_local(&recs)))
        }
    }
}
