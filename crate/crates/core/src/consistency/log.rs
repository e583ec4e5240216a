//! Line-delimited override log shared by the annotation service and the
//! evaluation pipeline.

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{AnnotationOverride, ConsistencyError};

/// One appended decision of an annotation session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub session_id: String,
    pub pair_id: String,
    pub sequence: u64,
    pub timestamp: DateTime<Utc>,
    #[serde(rename = "override")]
    pub override_: AnnotationOverride,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum LogLine {
    Decision(Box<DecisionRecord>),
    Bare(AnnotationOverride),
}

/// Overrides for `pair_id` from a log whose lines are either decision records
/// or bare overrides. Bare overrides apply to every pair reading the log.
pub fn parse_override_log(text: &str, pair_id: &str) -> Result<Vec<AnnotationOverride>, ConsistencyError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let parsed: LogLine = serde_json::from_str(line)
            .map_err(|e| ConsistencyError::InvalidOverride(format!("log line {}: {e}", i + 1)))?;
        match parsed {
            LogLine::Decision(d) if d.pair_id == pair_id => out.push(d.override_),
            LogLine::Decision(_) => {}
            LogLine::Bare(o) => out.push(o),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::consistency::OverrideAction;

    #[test]
    fn mixed_lines() {
        let text = r#"
{"session_id":"s","pair_id":"p1","sequence":1,"timestamp":"2024-01-01T00:00:00Z","override":{"action":"mark_spurious","generated_id":"g1","annotator":"a","timestamp":"2024-01-01T00:00:00Z"}}
{"session_id":"s","pair_id":"p2","sequence":2,"timestamp":"2024-01-01T00:00:01Z","override":{"action":"mark_missing","expected_id":"e1","annotator":"a","timestamp":"2024-01-01T00:00:01Z"}}
{"action":"delete_generated_minutia","generated_id":"g9","annotator":"b","timestamp":"2024-01-01T00:00:02Z"}
"#;
        let p1 = parse_override_log(text, "p1").unwrap();
        assert_eq!(p1.len(), 2);
        assert!(matches!(p1[0].action, OverrideAction::MarkSpurious { .. }));
        assert!(matches!(p1[1].action, OverrideAction::DeleteGeneratedMinutia { .. }));
        assert_eq!(parse_override_log(text, "p2").unwrap().len(), 2);
        assert!(parse_override_log("{not json", "p1").is_err());
    }
}
