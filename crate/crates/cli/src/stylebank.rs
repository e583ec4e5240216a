use std::path::{Path, PathBuf};

use clap::{Args, Subcommand, ValueEnum};
use printlab_core::metrics::QualityClass;
use printlab_core::report::TextTable;
use printlab_core::stylebank::{
    bank_stats, nearest_styles, read_bank, render_prompt, sample_style, PromptTemplate, StyleBank, StyleBankError,
    StyleDescriptor,
};

use crate::{print_json, CliError, CliResult};

#[derive(Debug, Args)]
pub struct BankArgs {
    /// Bank manifest (JSON).
    #[arg(long)]
    manifest: PathBuf,
    /// Raw little-endian f32 embedding payload.
    #[arg(long)]
    payload: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum StylebankCmd {
    /// Ingest and validate a bank; prints a short summary.
    Build {
        #[command(flatten)]
        bank: BankArgs,
    },
    /// Per-style and per-dataset entry counts.
    Stats {
        #[command(flatten)]
        bank: BankArgs,
        #[arg(long)]
        json: bool,
    },
    /// Draw one entry of a style.
    Sample {
        #[command(flatten)]
        bank: BankArgs,
        #[arg(long)]
        surface: String,
        #[arg(long)]
        technique: String,
        #[arg(long)]
        seed: u64,
    },
    /// Entries ranked by cosine similarity to a query vector.
    Knn {
        #[command(flatten)]
        bank: BankArgs,
        /// JSON array, or raw little-endian f32 for any other extension.
        #[arg(long)]
        query_file: PathBuf,
        #[arg(long, default_value_t = 5)]
        k: usize,
    },
    /// Render a generator prompt.
    Prompt {
        #[arg(long, value_enum)]
        kind: PromptKindArg,
        /// Pattern class for exemplar prompts.
        #[arg(long)]
        class: Option<String>,
        #[arg(long, value_enum)]
        quality: Option<QualityArg>,
        #[arg(long)]
        surface: Option<String>,
        #[arg(long)]
        technique: Option<String>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PromptKindArg {
    Exemplar,
    Vanilla,
    Styled,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum QualityArg {
    High,
    Average,
    Low,
}

impl From<QualityArg> for QualityClass {
    fn from(q: QualityArg) -> Self {
        match q {
            QualityArg::High => QualityClass::High,
            QualityArg::Average => QualityClass::Average,
            QualityArg::Low => QualityClass::Low,
        }
    }
}

fn load(bank: &BankArgs) -> Result<StyleBank, CliError> {
    read_bank(&bank.manifest, &bank.payload).map_err(|e| match e {
        StyleBankError::Io { .. } | StyleBankError::Json(_) => CliError::Runtime(e.to_string()),
        other => CliError::Invalid(other.to_string()),
    })
}

fn read_query(path: &Path) -> Result<Vec<f32>, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
    if path.extension().is_some_and(|e| e == "json") {
        return Ok(serde_json::from_slice(&bytes)?);
    }
    if bytes.len() % 4 != 0 {
        return Err(CliError::Invalid(format!(
            "{}: {} bytes is not a whole number of f32 values",
            path.display(),
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect())
}

pub fn run(cmd: StylebankCmd) -> CliResult {
    match cmd {
        StylebankCmd::Build { bank } => {
            let b = load(&bank)?;
            println!(
                "bank ok: {} entries, dimension {}, {} styles",
                b.len(),
                b.dimension(),
                b.style_count()
            );
            Ok(())
        }
        StylebankCmd::Stats { bank, json } => {
            let stats = bank_stats(&load(&bank)?);
            if json {
                return print_json(&stats);
            }
            println!(
                "entries {}  dimension {}  styles {}  surfaces {}  techniques {}",
                stats.entries, stats.dimension, stats.styles, stats.surfaces, stats.techniques
            );
            let mut t = TextTable::new(["Style", "Entries"].map(String::from).to_vec());
            for s in &stats.per_style {
                t.row(vec![format!("{} + {}", s.surface, s.technique), s.count.to_string()]);
            }
            print!("{}", t.render());
            let mut d = TextTable::new(["Dataset", "Entries"].map(String::from).to_vec());
            for (name, n) in &stats.per_dataset {
                d.row(vec![name.clone(), n.to_string()]);
            }
            print!("{}", d.render());
            Ok(())
        }
        StylebankCmd::Sample {
            bank,
            surface,
            technique,
            seed,
        } => {
            let b = load(&bank)?;
            let entry = sample_style(&b, &StyleDescriptor::new(&surface, &technique), seed)?;
            print_json(entry)
        }
        StylebankCmd::Knn { bank, query_file, k } => {
            let b = load(&bank)?;
            let query = read_query(&query_file)?;
            print_json(&nearest_styles(&b, &query, k)?)
        }
        StylebankCmd::Prompt {
            kind,
            class,
            quality,
            surface,
            technique,
        } => {
            let need = |v: Option<QualityArg>| {
                v.map(QualityClass::from)
                    .ok_or_else(|| CliError::Invalid("--quality is required for this prompt kind".into()))
            };
            let template = match kind {
                PromptKindArg::Exemplar => PromptTemplate::exemplar(class.as_deref().unwrap_or("")),
                PromptKindArg::Vanilla => PromptTemplate::vanilla(need(quality)?),
                PromptKindArg::Styled => PromptTemplate::styled(
                    need(quality)?,
                    &StyleDescriptor::new(surface.as_deref().unwrap_or(""), technique.as_deref().unwrap_or("")),
                ),
            };
            let text = render_prompt(&template).map_err(|e| CliError::Invalid(e.to_string()))?;
            println!("{text}");
            Ok(())
        }
    }
}
