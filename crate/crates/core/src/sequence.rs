use crate::error::{Error, Result};
use crate::geometry::{Part, PointCloud};

/// Estimator input: the labeled rest-state object plus time-ordered clouds of
/// the moving part alone.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservedSequence {
    pub rest: PointCloud,
    pub frames: Vec<PointCloud>,
}

impl ObservedSequence {
    pub fn new(rest: PointCloud, frames: Vec<PointCloud>) -> Result<Self> {
        let seq = Self { rest, frames };
        seq.validate()?;
        Ok(seq)
    }

    pub fn validate(&self) -> Result<()> {
        if self.frames.is_empty() {
            return Err(Error::EmptyInput("sequence has no frames"));
        }
        let labels = self
            .rest
            .labels()
            .ok_or_else(|| Error::InvalidCloud("rest cloud has no part labels".into()))?;
        for part in [Part::Static, Part::Dynamic] {
            if !labels.contains(&part) {
                return Err(Error::InvalidCloud(format!("rest cloud has no {part:?} points")));
            }
        }
        Ok(())
    }

    pub fn rest_dynamic(&self) -> Result<PointCloud> {
        self.rest
            .part(Part::Dynamic)
            .ok_or_else(|| Error::InvalidCloud("rest cloud has no Dynamic points".into()))
    }

    pub fn rest_static(&self) -> Option<PointCloud> {
        self.rest.part(Part::Static)
    }

    /// Diagonal of the whole rest-state object's bounding box; the length scale
    /// for noise levels and normalized errors.
    pub fn diagonal(&self) -> f64 {
        self.rest.diagonal()
    }
}
