use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{bail, Error, Result};

/// Partition of the training videos into partially labeled (`D_PL`) and
/// unlabeled (`D_U`) sets at one acquisition round.
///
/// On disk: `{"round": 1, "labeled": [...], "unlabeled": [...]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawSplit", into = "RawSplit")]
pub struct DatasetSplit {
    labeled: BTreeSet<String>,
    unlabeled: BTreeSet<String>,
    round_index: u32,
}

impl DatasetSplit {
    pub fn new(
        labeled: impl IntoIterator<Item = String>,
        unlabeled: impl IntoIterator<Item = String>,
        round_index: u32,
    ) -> Result<Self> {
        if round_index < 1 {
            bail!(Validation, "round index must be >= 1");
        }
        let labeled: BTreeSet<String> = labeled.into_iter().collect();
        let unlabeled: BTreeSet<String> = unlabeled.into_iter().collect();
        if let Some(v) = labeled.intersection(&unlabeled).next() {
            bail!(Validation, "video {v:?} is both labeled and unlabeled");
        }
        Ok(DatasetSplit { labeled, unlabeled, round_index })
    }

    /// Every video unlabeled, round 1.
    pub fn fresh(videos: impl IntoIterator<Item = String>) -> Self {
        DatasetSplit { labeled: BTreeSet::new(), unlabeled: videos.into_iter().collect(), round_index: 1 }
    }

    pub fn labeled(&self) -> &BTreeSet<String> {
        &self.labeled
    }

    pub fn unlabeled(&self) -> &BTreeSet<String> {
        &self.unlabeled
    }

    pub fn round_index(&self) -> u32 {
        self.round_index
    }

    pub fn total(&self) -> usize {
        self.labeled.len() + self.unlabeled.len()
    }

    pub fn labeled_percent(&self) -> f64 {
        if self.total() == 0 {
            0.0
        } else {
            100.0 * self.labeled.len() as f64 / self.total() as f64
        }
    }

    /// Move `videos` into the labeled set and advance the round counter.
    pub fn advance<'a>(&self, videos: impl IntoIterator<Item = &'a str>) -> Result<Self> {
        let mut next = self.clone();
        for v in videos {
            if !next.unlabeled.remove(v) {
                bail!(Validation, "video {v:?} is not in the unlabeled set");
            }
            next.labeled.insert(v.to_string());
        }
        next.round_index += 1;
        Ok(next)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let raw: RawSplit = serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
        Self::try_from(raw)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSplit {
    round: u32,
    labeled: Vec<String>,
    unlabeled: Vec<String>,
}

impl TryFrom<RawSplit> for DatasetSplit {
    type Error = Error;

    fn try_from(r: RawSplit) -> Result<Self> {
        DatasetSplit::new(r.labeled, r.unlabeled, r.round)
    }
}

impl From<DatasetSplit> for RawSplit {
    fn from(s: DatasetSplit) -> Self {
        RawSplit {
            round: s.round_index,
            labeled: s.labeled.into_iter().collect(),
            unlabeled: s.unlabeled.into_iter().collect(),
        }
    }
}
