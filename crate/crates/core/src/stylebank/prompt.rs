use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{StyleBankError, StyleDescriptor};
use crate::metrics::QualityClass;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptKind {
    ExemplarStage1,
    LatentStage2Vanilla,
    LatentStage2Styled,
}

impl PromptKind {
    pub fn required_slots(self) -> &'static [&'static str] {
        match self {
            PromptKind::ExemplarStage1 => &["class"],
            PromptKind::LatentStage2Vanilla => &["quality_level"],
            PromptKind::LatentStage2Styled => &["quality_level", "surface", "technique"],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub kind: PromptKind,
    pub slots: BTreeMap<String, String>,
}

impl PromptTemplate {
    pub fn new(kind: PromptKind) -> Self {
        PromptTemplate {
            kind,
            slots: BTreeMap::new(),
        }
    }

    pub fn with(mut self, name: &str, value: impl Into<String>) -> Self {
        self.slots.insert(name.to_string(), value.into());
        self
    }

    pub fn exemplar(class: &str) -> Self {
        Self::new(PromptKind::ExemplarStage1).with("class", class)
    }

    pub fn vanilla(quality: QualityClass) -> Self {
        Self::new(PromptKind::LatentStage2Vanilla).with("quality_level", quality.label())
    }

    pub fn styled(quality: QualityClass, style: &StyleDescriptor) -> Self {
        Self::new(PromptKind::LatentStage2Styled)
            .with("quality_level", quality.label())
            .with("surface", style.surface.as_str())
            .with("technique", style.technique.as_str())
    }

    fn slot(&self, name: &str) -> Result<&str, StyleBankError> {
        self.slots
            .get(name)
            .map(|s| s.trim())
            .filter(|s| !s.is_empty())
            .ok_or_else(|| StyleBankError::MissingSlot(name.to_string()))
    }
}

pub fn render_prompt(t: &PromptTemplate) -> Result<String, StyleBankError> {
    Ok(match t.kind {
        PromptKind::ExemplarStage1 => format!(
            "a rolled fingerprint image, {} pattern, high quality, CrossMatch",
            t.slot("class")?
        ),
        PromptKind::LatentStage2Vanilla => {
            format!("latent, {} quality", t.slot("quality_level")?.to_lowercase())
        }
        PromptKind::LatentStage2Styled => format!(
            "a latent fingerprint, {} quality, {}, {}",
            t.slot("quality_level")?.to_lowercase(),
            t.slot("surface")?,
            t.slot("technique")?
        ),
    })
}
