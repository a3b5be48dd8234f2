use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An axis-aligned search box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Bounds {
    ranges: Vec<(f64, f64)>,
}

impl Bounds {
    pub fn new(ranges: Vec<(f64, f64)>) -> Result<Self> {
        if ranges.is_empty() {
            return Err(Error::input("bounds must have at least one dimension"));
        }
        for (i, &(lo, hi)) in ranges.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && hi > lo) {
                return Err(Error::input(format!(
                    "dimension {i}: need finite lo < hi, got [{lo}, {hi}]"
                )));
            }
        }
        Ok(Bounds { ranges })
    }

    /// The same interval repeated `dim` times.
    pub fn cube(lo: f64, hi: f64, dim: usize) -> Result<Self> {
        Self::new(vec![(lo, hi); dim])
    }

    pub fn unit(dim: usize) -> Self {
        Bounds {
            ranges: vec![(0.0, 1.0); dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.ranges.len()
    }

    pub fn ranges(&self) -> &[(f64, f64)] {
        &self.ranges
    }

    pub fn lower(&self) -> Vec<f64> {
        self.ranges.iter().map(|r| r.0).collect()
    }

    pub fn upper(&self) -> Vec<f64> {
        self.ranges.iter().map(|r| r.1).collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(&self.ranges)
                .all(|(&v, &(lo, hi))| v >= lo && v <= hi)
    }

    /// Maps a point of the unit cube into the box.
    pub fn from_unit(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .zip(&self.ranges)
            .map(|(&v, &(lo, hi))| (lo + v * (hi - lo)).clamp(lo, hi))
            .collect()
    }

    /// Maps a point of the box into the unit cube. Points outside the box map
    /// outside the cube.
    pub fn to_unit(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.ranges)
            .map(|(&v, &(lo, hi))| (v - lo) / (hi - lo))
            .collect()
    }
}
