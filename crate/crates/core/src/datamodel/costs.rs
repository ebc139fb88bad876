use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{bail, Error, Result};

/// Annotation unit a cost applies to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CostKind {
    Tag,
    Point,
    Scribble,
    Box,
    Mask,
}

impl CostKind {
    pub const ALL: [CostKind; 5] = [CostKind::Tag, CostKind::Point, CostKind::Scribble, CostKind::Box, CostKind::Mask];
}

impl fmt::Display for CostKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CostKind::Tag => "tag",
            CostKind::Point => "point",
            CostKind::Scribble => "scribble",
            CostKind::Box => "box",
            CostKind::Mask => "mask",
        };
        f.write_str(s)
    }
}

/// Seconds of human effort per annotated item.
///
/// A tag is paid once per video, the other kinds once per annotated frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostTable {
    pub tag_s: f64,
    pub point_s: f64,
    pub scribble_s: f64,
    pub box_s: f64,
    pub mask_s: f64,
}

impl Default for CostTable {
    fn default() -> Self {
        CostTable { tag_s: 1.0, point_s: 2.0, scribble_s: 11.0, box_s: 35.0, mask_s: 79.0 }
    }
}

impl CostTable {
    pub fn get(&self, kind: CostKind) -> f64 {
        match kind {
            CostKind::Tag => self.tag_s,
            CostKind::Point => self.point_s,
            CostKind::Scribble => self.scribble_s,
            CostKind::Box => self.box_s,
            CostKind::Mask => self.mask_s,
        }
    }

    pub fn set(&mut self, kind: CostKind, v: f64) {
        match kind {
            CostKind::Tag => self.tag_s = v,
            CostKind::Point => self.point_s = v,
            CostKind::Scribble => self.scribble_s = v,
            CostKind::Box => self.box_s = v,
            CostKind::Mask => self.mask_s = v,
        }
    }

    /// Every unit cost must be positive and finite. An ordering other than
    /// `mask >= box >= scribble >= point >= tag` is logged, not rejected.
    pub fn validate(&self) -> Result<()> {
        for k in CostKind::ALL {
            let v = self.get(k);
            if !(v > 0.0 && v.is_finite()) {
                bail!(Config, "{k} cost must be positive and finite, got {v}");
            }
        }
        if !self.is_conventionally_ordered() {
            log::warn!("cost table is not ordered mask >= box >= scribble >= point >= tag: {self:?}");
        }
        Ok(())
    }

    pub fn is_conventionally_ordered(&self) -> bool {
        self.mask_s >= self.box_s && self.box_s >= self.scribble_s && self.scribble_s >= self.point_s && self.point_s >= self.tag_s
    }

    /// `"default"` or a path to a JSON cost table.
    pub fn load(source: &str) -> Result<Self> {
        let table = if source == "default" {
            CostTable::default()
        } else {
            let path = Path::new(source);
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?
        };
        table.validate()?;
        Ok(table)
    }
}
