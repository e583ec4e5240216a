use std::path::PathBuf;

use clap::{Subcommand, ValueEnum};
use printlab_core::metrics::{
    group_scores, overlap_by_style, per_style_quality_scatter, read_quality_csv, read_scores_csv, render_tmr_table,
    tmr_table, ChannelRanges, MetricsError, QualityChannel, DEFAULT_TMR_THRESHOLD,
};
use printlab_core::report::format_fixed_half_up;

use crate::{print_json, write_or_print, CliError, CliResult};

#[derive(Debug, Subcommand)]
pub enum MetricsCmd {
    /// TMR per style and protocol at a score threshold.
    Tmr {
        /// Score CSV: probe_ref, gallery_ref, score, label, protocol, style_label.
        #[arg(long)]
        scores: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TMR_THRESHOLD)]
        threshold: f64,
        #[arg(long)]
        json: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Average real vs synthetic quality per style.
    Scatter {
        /// Quality CSV: image_ref, q, channel, origin, style_label.
        #[arg(long)]
        quality: PathBuf,
        #[arg(long, value_enum)]
        channel: ChannelArg,
        #[command(flatten)]
        range: RangeArgs,
        #[arg(long)]
        json: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Histogram overlap of real and synthetic quality per style.
    HistOverlap {
        #[arg(long)]
        quality: PathBuf,
        #[arg(long, value_enum)]
        channel: ChannelArg,
        #[arg(long, default_value_t = 10.0)]
        bin_width: f64,
        #[command(flatten)]
        range: RangeArgs,
        #[arg(long)]
        json: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, clap::Args)]
pub struct RangeArgs {
    /// Accepted LFIQA range as MIN,MAX.
    #[arg(long, value_delimiter = ',', num_args = 2)]
    lfiqa_range: Option<Vec<i64>>,
}

impl RangeArgs {
    fn ranges(&self) -> ChannelRanges {
        let mut r = ChannelRanges::default();
        if let Some(v) = &self.lfiqa_range {
            r.lfiqa = (v[0], v[1]);
        }
        r
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ChannelArg {
    Nfiq2,
    Lfiqa,
}

impl From<ChannelArg> for QualityChannel {
    fn from(c: ChannelArg) -> Self {
        match c {
            ChannelArg::Nfiq2 => QualityChannel::Nfiq2,
            ChannelArg::Lfiqa => QualityChannel::Lfiqa,
        }
    }
}

fn input_error(e: MetricsError) -> CliError {
    match e {
        MetricsError::Io(_) => CliError::Runtime(e.to_string()),
        other => CliError::Invalid(other.to_string()),
    }
}

fn csv_text(header: &[&str], rows: Vec<Vec<String>>) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Runtime(e.to_string());
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(&r).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Runtime(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Runtime(e.to_string()))
}

pub fn run(cmd: MetricsCmd) -> CliResult {
    match cmd {
        MetricsCmd::Tmr {
            scores,
            threshold,
            json,
            out,
        } => {
            let rows = read_scores_csv(&scores).map_err(input_error)?;
            let table = tmr_table(&group_scores(&rows), threshold)?;
            if json {
                return print_json(&table);
            }
            write_or_print(out.as_deref(), &render_tmr_table(&table))
        }
        MetricsCmd::Scatter {
            quality,
            channel,
            range,
            json,
            out,
        } => {
            let recs = read_quality_csv(&quality, &range.ranges()).map_err(input_error)?;
            let report = per_style_quality_scatter(&recs, channel.into());
            if json {
                return print_json(&report);
            }
            let rows = report
                .rows
                .iter()
                .map(|r| {
                    vec![
                        r.style_label.clone(),
                        format_fixed_half_up(r.avg_real, 4),
                        format_fixed_half_up(r.avg_synthetic, 4),
                        r.n_real.to_string(),
                        r.n_synthetic.to_string(),
                        format_fixed_half_up(r.delta, 4),
                    ]
                })
                .collect();
            let text = csv_text(
                &["style_label", "avg_real", "avg_synthetic", "n_real", "n_synthetic", "delta"],
                rows,
            )?;
            write_or_print(out.as_deref(), &text)
        }
        MetricsCmd::HistOverlap {
            quality,
            channel,
            bin_width,
            range,
            json,
            out,
        } => {
            let recs = read_quality_csv(&quality, &range.ranges()).map_err(input_error)?;
            let rows = overlap_by_style(&recs, channel.into(), bin_width).map_err(input_error)?;
            if json {
                return print_json(&rows);
            }
            let text = csv_text(
                &["style_label", "overlap", "n_real", "n_synthetic"],
                rows.iter()
                    .map(|r| {
                        vec![
                            r.style_label.clone(),
                            format_fixed_half_up(r.overlap, 4),
                            r.n_real.to_string(),
                            r.n_synthetic.to_string(),
                        ]
                    })
                    .collect(),
            )?;
            write_or_print(out.as_deref(), &text)
        }
    }
}
