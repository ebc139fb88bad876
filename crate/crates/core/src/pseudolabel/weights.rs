use crate::error::{bail, Result};

/// Confidence of a pseudo-label as a function of its distance in frames to
/// the annotation it came from: `max(decay^d, floor)`, and exactly 1 at d = 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightConfig {
    pub decay: f64,
    pub floor: f64,
}

impl Default for WeightConfig {
    fn default() -> Self {
        WeightConfig { decay: 0.9, floor: 0.1 }
    }
}

impl WeightConfig {
    pub fn new(decay: f64, floor: f64) -> Result<Self> {
        let wc = WeightConfig { decay, floor };
        wc.validate()?;
        Ok(wc)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.decay > 0.0 && self.decay <= 1.0) {
            bail!(Parameter, "decay must be in (0, 1], got {}", self.decay);
        }
        if !(0.0..1.0).contains(&self.floor) {
            bail!(Parameter, "weight floor must be in [0, 1), got {}", self.floor);
        }
        Ok(())
    }

    pub fn weight(&self, distance: u32) -> f64 {
        if distance == 0 {
            return 1.0;
        }
        self.decay.powi(distance.min(i32::MAX as u32) as i32).max(self.floor)
    }
}

/// Distance from `t` to the nearest of the sorted `anchors`, with that anchor.
pub(crate) fn nearest(anchors: &[u32], t: u32) -> (u32, u32) {
    let i = anchors.partition_point(|&a| a < t);
    let after = anchors.get(i).map(|&a| (a - t, a));
    let before = i.checked_sub(1).map(|j| (t - anchors[j], anchors[j]));
    match (before, after) {
        (Some(b), Some(a)) => if a.0 < b.0 { a } else { b },
        (Some(b), None) => b,
        (None, Some(a)) => a,
        (None, None) => panic!("nearest() needs at least one anchor"),
    }
}
