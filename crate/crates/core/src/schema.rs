//! Input space descriptions: numeric ranges and categorical level tables.

use serde::{Deserialize, Serialize};
use std::collections::HashSet;

use crate::error::{invalid, Result};

/// A categorical level: 1-based index into the variable's level list, or
/// `None` when the variable is not an input for this combination (NaN).
pub type Level = Option<usize>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoricalVariable {
    pub name: String,
    pub levels: Vec<String>,
    #[serde(default)]
    pub nan_allowed: bool,
}

impl CategoricalVariable {
    pub fn new(name: impl Into<String>, levels: Vec<String>) -> Self {
        Self {
            name: name.into(),
            levels,
            nan_allowed: false,
        }
    }

    /// Variable whose levels are labelled `1..=m`.
    pub fn indexed(name: impl Into<String>, m: usize) -> Self {
        Self::new(name, (1..=m).map(|l| l.to_string()).collect())
    }

    pub fn with_nan(mut self) -> Self {
        self.nan_allowed = true;
        self
    }

    pub fn level_count(&self) -> usize {
        self.levels.len()
    }
}

/// Ordered list of categorical variables. Level order follows declaration
/// order; combinations enumerate with the last variable varying fastest.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<CategoricalVariable>", into = "Vec<CategoricalVariable>")]
pub struct CategoricalSchema {
    variables: Vec<CategoricalVariable>,
}

impl TryFrom<Vec<CategoricalVariable>> for CategoricalSchema {
    type Error = crate::Error;
    fn try_from(v: Vec<CategoricalVariable>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<CategoricalSchema> for Vec<CategoricalVariable> {
    fn from(s: CategoricalSchema) -> Self {
        s.variables
    }
}

impl CategoricalSchema {
    pub fn new(variables: Vec<CategoricalVariable>) -> Result<Self> {
        for v in &variables {
            if v.levels.len() < 2 {
                return invalid(format!(
                    "categorical variable '{}' needs at least 2 levels, got {}",
                    v.name,
                    v.levels.len()
                ));
            }
            let mut seen = HashSet::new();
            for l in &v.levels {
                if !seen.insert(l.as_str()) {
                    return invalid(format!(
                        "duplicate level label '{}' in variable '{}'",
                        l, v.name
                    ));
                }
            }
        }
        Ok(Self { variables })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn variables(&self) -> &[CategoricalVariable] {
        &self.variables
    }

    /// Number of categorical variables (d_t).
    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }

    pub fn level_counts(&self) -> Vec<usize> {
        self.variables.iter().map(|v| v.level_count()).collect()
    }

    /// Σ m_i, the width of a grouped one-hot prior.
    pub fn total_levels(&self) -> usize {
        self.variables.iter().map(|v| v.level_count()).sum()
    }

    /// Π m_i, the number of level combinations without NaN entries.
    pub fn combination_count(&self) -> usize {
        self.variables.iter().map(|v| v.level_count()).product()
    }

    /// Offset of each variable's block inside a grouped one-hot row.
    pub fn block_offsets(&self) -> Vec<usize> {
        let mut off = 0;
        self.variables
            .iter()
            .map(|v| {
                let o = off;
                off += v.level_count();
                o
            })
            .collect()
    }

    /// All NaN-free combinations in enumeration order (1-based levels).
    pub fn combinations(&self) -> Vec<Vec<Level>> {
        let counts = self.level_counts();
        let total = self.combination_count();
        (0..total)
            .map(|mut k| {
                let mut combo = vec![None; counts.len()];
                for (i, &m) in counts.iter().enumerate().rev() {
                    combo[i] = Some(k % m + 1);
                    k /= m;
                }
                combo
            })
            .collect()
    }

    /// Row of `combo` in [`combinations`](Self::combinations); `None` if any
    /// entry is NaN or out of range.
    pub fn combination_index(&self, combo: &[Level]) -> Option<usize> {
        if combo.len() != self.len() {
            return None;
        }
        let mut k = 0;
        for (v, l) in self.variables.iter().zip(combo) {
            let l = (*l)?;
            if l == 0 || l > v.level_count() {
                return None;
            }
            k = k * v.level_count() + (l - 1);
        }
        Some(k)
    }

    /// Index over the extended space where NaN is an extra level on
    /// NaN-permitting variables.
    pub fn extended_index(&self, combo: &[Level]) -> Option<usize> {
        let mut k = 0;
        for (v, l) in self.variables.iter().zip(combo) {
            let width = v.level_count() + usize::from(v.nan_allowed);
            let digit = match l {
                Some(l) if *l >= 1 && *l <= v.level_count() => l - 1,
                None if v.nan_allowed => v.level_count(),
                _ => return None,
            };
            k = k * width + digit;
        }
        Some(k)
    }

    /// Number of combinations in the extended (NaN-aware) space.
    pub fn extended_count(&self) -> usize {
        self.variables
            .iter()
            .map(|v| v.level_count() + usize::from(v.nan_allowed))
            .product()
    }

    /// Check a level combination against this schema.
    pub fn validate(&self, combo: &[Level]) -> Result<()> {
        if combo.len() != self.len() {
            return invalid(format!(
                "expected {} categorical levels, got {}",
                self.len(),
                combo.len()
            ));
        }
        for (v, l) in self.variables.iter().zip(combo) {
            match l {
                Some(l) if *l >= 1 && *l <= v.level_count() => {}
                Some(l) => {
                    return invalid(format!(
                        "level {} out of range 1..={} for '{}'",
                        l,
                        v.level_count(),
                        v.name
                    ))
                }
                None if v.nan_allowed => {}
                None => {
                    return invalid(format!(
                        "NaN level on variable '{}' which does not permit it",
                        v.name
                    ))
                }
            }
        }
        Ok(())
    }

    /// Slash-joined level labels, `NaN` for missing entries.
    pub fn combination_label(&self, combo: &[Level]) -> String {
        self.variables
            .iter()
            .zip(combo)
            .map(|(v, l)| match l {
                Some(l) => v
                    .levels
                    .get(l - 1)
                    .cloned()
                    .unwrap_or_else(|| format!("?{l}")),
                None => "NaN".to_string(),
            })
            .collect::<Vec<_>>()
            .join("/")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumericVariable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
}

impl NumericVariable {
    pub fn new(name: impl Into<String>, lower: f64, upper: f64) -> Self {
        Self {
            name: name.into(),
            lower,
            upper,
        }
    }
}

/// Full description of a mixed input space.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct InputSpace {
    pub numeric: Vec<NumericVariable>,
    pub categorical: CategoricalSchema,
}

impl InputSpace {
    pub fn new(numeric: Vec<NumericVariable>, categorical: CategoricalSchema) -> Self {
        Self {
            numeric,
            categorical,
        }
    }

    pub fn numeric_only(numeric: Vec<NumericVariable>) -> Self {
        Self::new(numeric, CategoricalSchema::empty())
    }

    pub fn dx(&self) -> usize {
        self.numeric.len()
    }

    pub fn dt(&self) -> usize {
        self.categorical.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zip_course() -> CategoricalSchema {
        CategoricalSchema::new(vec![
            CategoricalVariable::new("zip", vec!["92697".into(), "92093".into()]),
            CategoricalVariable::new(
                "course",
                vec!["math".into(), "physics".into(), "chemistry".into()],
            ),
        ])
        .unwrap()
    }

    #[test]
    fn combinations_enumerate_last_fastest() {
        let s = zip_course();
        let c = s.combinations();
        assert_eq!(c.len(), 6);
        assert_eq!(c[0], vec![Some(1), Some(1)]);
        assert_eq!(c[1], vec![Some(1), Some(2)]);
        assert_eq!(c[3], vec![Some(2), Some(1)]);
        for (k, combo) in c.iter().enumerate() {
            assert_eq!(s.combination_index(combo), Some(k));
        }
        assert_eq!(s.total_levels(), 5);
        assert_eq!(s.block_offsets(), vec![0, 2]);
    }

    #[test]
    fn rejects_single_level_and_duplicate_labels() {
        assert!(CategoricalSchema::new(vec![CategoricalVariable::indexed("a", 1)]).is_err());
        assert!(CategoricalSchema::new(vec![CategoricalVariable::new(
            "a",
            vec!["x".into(), "x".into()]
        )])
        .is_err());
    }

    #[test]
    fn validate_checks_nan_permission() {
        let s = CategoricalSchema::new(vec![
            CategoricalVariable::indexed("a", 2),
            CategoricalVariable::indexed("b", 3).with_nan(),
        ])
        .unwrap();
        assert!(s.validate(&[Some(2), None]).is_ok());
        assert!(s.validate(&[None, Some(1)]).is_err());
        assert!(s.validate(&[Some(3), Some(1)]).is_err());
        assert_eq!(s.combination_label(&[Some(2), None]), "2/NaN");
        assert_eq!(s.extended_count(), 8);
    }
}
