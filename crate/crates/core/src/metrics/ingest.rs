use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use serde::Deserialize;

use super::{MatchScoreSet, MetricsError, Origin, Protocol, QualityChannel, QualityRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreLabel {
    Genuine,
    Impostor,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRow {
    pub probe_ref: String,
    pub gallery_ref: String,
    pub score: f64,
    pub label: ScoreLabel,
    pub protocol: Protocol,
    pub style_label: String,
}

#[derive(Deserialize)]
struct RawScore {
    probe_ref: String,
    gallery_ref: String,
    score: f64,
    label: String,
    protocol: String,
    style_label: String,
}

#[derive(Deserialize)]
struct RawQuality {
    image_ref: String,
    q: i64,
    channel: String,
    origin: String,
    style_label: String,
}

/// Accepted closed ranges per quality channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelRanges {
    pub nfiq2: (i64, i64),
    pub lfiqa: (i64, i64),
}

impl Default for ChannelRanges {
    fn default() -> Self {
        ChannelRanges {
            nfiq2: (0, 100),
            lfiqa: (0, 100),
        }
    }
}

impl ChannelRanges {
    pub fn get(&self, c: QualityChannel) -> (i64, i64) {
        match c {
            QualityChannel::Nfiq2 => self.nfiq2,
            QualityChannel::Lfiqa => self.lfiqa,
        }
    }
}

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().trim(csv::Trim::All).comment(Some(b'#')).from_reader(input)
}

fn parse_err(line: u64, message: impl Into<String>) -> MetricsError {
    MetricsError::Parse {
        line,
        message: message.into(),
    }
}

/// Reads comma-separated score rows with a header
/// `probe_ref,gallery_ref,score,label,protocol,style_label`.
pub fn parse_scores_csv<R: Read>(input: R) -> Result<Vec<ScoreRow>, MetricsError> {
    let mut rdr = reader(input);
    let mut out = Vec::new();
    for rec in rdr.deserialize::<RawScore>() {
        let raw = rec?;
        let line = out.len() as u64 + 2;
        if !raw.score.is_finite() {
            return Err(parse_err(line, "non-finite score"));
        }
        let label = match raw.label.to_ascii_lowercase().as_str() {
            "genuine" => ScoreLabel::Genuine,
            "impostor" => ScoreLabel::Impostor,
            other => return Err(parse_err(line, format!("unknown label {other:?}"))),
        };
        let protocol = Protocol::parse(&raw.protocol)
            .ok_or_else(|| parse_err(line, format!("unknown protocol {:?}", raw.protocol)))?;
        out.push(ScoreRow {
            probe_ref: raw.probe_ref,
            gallery_ref: raw.gallery_ref,
            score: raw.score,
            label,
            protocol,
            style_label: raw.style_label,
        });
    }
    Ok(out)
}

/// Reads comma-separated quality rows with a header
/// `image_ref,q,channel,origin,style_label`.
pub fn parse_quality_csv<R: Read>(input: R, ranges: &ChannelRanges) -> Result<Vec<QualityRecord>, MetricsError> {
    let mut rdr = reader(input);
    let mut out = Vec::new();
    for rec in rdr.deserialize::<RawQuality>() {
        let raw = rec?;
        let line = out.len() as u64 + 2;
        let channel = match raw.channel.to_ascii_lowercase().as_str() {
            "nfiq2" => QualityChannel::Nfiq2,
            "lfiqa" => QualityChannel::Lfiqa,
            other => return Err(parse_err(line, format!("unknown channel {other:?}"))),
        };
        let origin = match raw.origin.to_ascii_lowercase().as_str() {
            "real" => Origin::Real,
            "synthetic" => Origin::Synthetic,
            other => return Err(parse_err(line, format!("unknown origin {other:?}"))),
        };
        let (min, max) = ranges.get(channel);
        if raw.q < min || raw.q > max {
            return Err(MetricsError::QualityOutOfRange {
                q: raw.q,
                min,
                max,
                channel,
            });
        }
        out.push(QualityRecord {
            image_ref: raw.image_ref,
            q: raw.q,
            channel,
            origin,
            style_label: raw.style_label,
        });
    }
    Ok(out)
}

pub fn read_scores_csv(path: &Path) -> Result<Vec<ScoreRow>, MetricsError> {
    parse_scores_csv(std::fs::File::open(path)?)
}

pub fn read_quality_csv(path: &Path, ranges: &ChannelRanges) -> Result<Vec<QualityRecord>, MetricsError> {
    parse_quality_csv(std::fs::File::open(path)?, ranges)
}

/// Groups score rows into one set per (style, protocol), ordered by style then
/// protocol.
pub fn group_scores(rows: &[ScoreRow]) -> Vec<MatchScoreSet> {
    let mut groups: BTreeMap<(String, Protocol), MatchScoreSet> = BTreeMap::new();
    for r in rows {
        let set = groups
            .entry((r.style_label.clone(), r.protocol))
            .or_insert_with(|| MatchScoreSet::new(r.style_label.clone(), r.protocol));
        match r.label {
            ScoreLabel::Genuine => set.genuine.push(r.score),
            ScoreLabel::Impostor => set.impostor.push(r.score),
        }
    }
    groups.into_values().collect()
}
