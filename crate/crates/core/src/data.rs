use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::schema::{InputSpace, Level};

/// One mixed input `w = [x; t]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedSample {
    pub x: Vec<f64>,
    pub t: Vec<Level>,
}

impl MixedSample {
    pub fn new(x: Vec<f64>, t: Vec<Level>) -> Self {
        Self { x, t }
    }

    pub fn numeric(x: Vec<f64>) -> Self {
        Self { x, t: Vec::new() }
    }

    pub fn validate(&self, space: &InputSpace) -> Result<()> {
        if self.x.len() != space.dx() {
            return invalid(format!(
                "expected {} numeric inputs, got {}",
                space.dx(),
                self.x.len()
            ));
        }
        if self.x.iter().any(|v| !v.is_finite()) {
            return invalid("numeric inputs must be finite");
        }
        space.categorical.validate(&self.t)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedDataset {
    space: InputSpace,
    samples: Vec<MixedSample>,
    y: Vec<f64>,
}

impl MixedDataset {
    /// Validates sample shapes and levels against `space`. Duplicate inputs
    /// are accepted: every fit keeps the nugget strictly positive.
    pub fn new(space: InputSpace, samples: Vec<MixedSample>, y: Vec<f64>) -> Result<Self> {
        if samples.len() != y.len() {
            return invalid(format!(
                "{} samples but {} responses",
                samples.len(),
                y.len()
            ));
        }
        if samples.len() < 2 {
            return invalid("a dataset needs at least two samples");
        }
        for s in &samples {
            s.validate(&space)?;
        }
        if y.iter().any(|v| !v.is_finite()) {
            return invalid("responses must be finite");
        }
        Ok(Self { space, samples, y })
    }

    pub fn space(&self) -> &InputSpace {
        &self.space
    }

    pub fn samples(&self) -> &[MixedSample] {
        &self.samples
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn has_duplicate_inputs(&self) -> bool {
        for i in 0..self.samples.len() {
            for j in 0..i {
                if self.samples[i] == self.samples[j] {
                    return true;
                }
            }
        }
        false
    }

    /// Subset by row indices (order preserved as given).
    pub fn select(&self, rows: &[usize]) -> Result<Self> {
        let samples = rows.iter().map(|&i| self.samples[i].clone()).collect();
        let y = rows.iter().map(|&i| self.y[i]).collect();
        Self::new(self.space.clone(), samples, y)
    }

    pub fn with_responses(&self, y: Vec<f64>) -> Result<Self> {
        Self::new(self.space.clone(), self.samples.clone(), y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::{CategoricalSchema, CategoricalVariable, NumericVariable};

    fn space() -> InputSpace {
        InputSpace::new(
            vec![NumericVariable::new("x", 0.0, 1.0)],
            CategoricalSchema::new(vec![CategoricalVariable::indexed("t", 3)]).unwrap(),
        )
    }

    #[test]
    fn rejects_mismatched_lengths_and_bad_levels() {
        let s = vec![
            MixedSample::new(vec![0.1], vec![Some(1)]),
            MixedSample::new(vec![0.2], vec![Some(3)]),
        ];
        assert!(MixedDataset::new(space(), s.clone(), vec![1.0]).is_err());
        assert!(MixedDataset::new(space(), s[..1].to_vec(), vec![1.0]).is_err());
        let bad = vec![s[0].clone(), MixedSample::new(vec![0.2], vec![Some(4)])];
        assert!(MixedDataset::new(space(), bad, vec![1.0, 2.0]).is_err());
        let d = MixedDataset::new(space(), s, vec![1.0, 2.0]).unwrap();
        assert!(!d.has_duplicate_inputs());
    }
}
