//! Prior vector representations ζ(t) of categorical level combinations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::schema::{CategoricalSchema, Level};

/// How a level combination is turned into a prior row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PriorStrategy {
    /// One indicator per variable, concatenated over variables.
    OneHotGrouped,
    /// IID Uniform(0, 1) rows, one per combination. `width` defaults to Σm_i.
    Random { seed: u64, width: Option<usize> },
    /// Every combination is its own level: identity prior of size b_t.
    Lumped,
}

impl Default for PriorStrategy {
    fn default() -> Self {
        Self::OneHotGrouped
    }
}

/// Fill rule for the one-hot block of a variable that is NaN.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum NanFill {
    #[default]
    Zero,
    /// IID Uniform(0, 1), drawn once per distinct combination.
    Random { seed: u64 },
}

/// Stateless encoder: the prior row of a combination depends only on the
/// schema, the strategy and the combination itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorEncoder {
    schema: CategoricalSchema,
    strategy: PriorStrategy,
    nan_fill: NanFill,
}

/// The full ζ matrix over NaN-free combinations.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorEncoding {
    pub strategy: PriorStrategy,
    /// b_t rows of width p.
    pub matrix: Vec<Vec<f64>>,
    /// Level combination for each row.
    pub combos: Vec<Vec<Level>>,
}

impl PriorEncoding {
    pub fn row_of(&self, combo: &[Level]) -> Option<&[f64]> {
        self.combos
            .iter()
            .position(|c| c == combo)
            .map(|i| self.matrix[i].as_slice())
    }
}

// Stream ids keep random prior rows and NaN fills independent of each other.
const STREAM_RANDOM_PRIOR: u64 = 1 << 40;
const STREAM_NAN_FILL: u64 = 2 << 40;

fn uniform_row(seed: u64, stream: u64, width: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    (0..width).map(|_| rng.random::<f64>()).collect()
}

impl PriorEncoder {
    pub fn new(schema: CategoricalSchema, strategy: PriorStrategy, nan_fill: NanFill) -> Result<Self> {
        if let PriorStrategy::Random { width: Some(0), .. } = strategy {
            return invalid("random prior width must be positive");
        }
        Ok(Self {
            schema,
            strategy,
            nan_fill,
        })
    }

    pub fn schema(&self) -> &CategoricalSchema {
        &self.schema
    }

    pub fn strategy(&self) -> PriorStrategy {
        self.strategy
    }

    pub fn nan_fill(&self) -> NanFill {
        self.nan_fill
    }

    /// Width p of each prior row.
    pub fn width(&self) -> usize {
        match self.strategy {
            PriorStrategy::OneHotGrouped => self.schema.total_levels(),
            PriorStrategy::Random { width, .. } => width.unwrap_or(self.schema.total_levels()),
            PriorStrategy::Lumped => self.schema.extended_count(),
        }
    }

    /// Prior row ζ(t) for one combination. NaN entries are only accepted on
    /// variables that permit them.
    pub fn row(&self, combo: &[Level]) -> Result<Vec<f64>> {
        self.schema.validate(combo)?;
        let key = self
            .schema
            .extended_index(combo)
            .expect("validated combination has an index") as u64;
        match self.strategy {
            PriorStrategy::OneHotGrouped => Ok(self.one_hot_row(combo, key)),
            PriorStrategy::Random { seed, .. } => {
                // Composes independently with the NaN rule: NaN acts as one
                // more level when keying the random row.
                Ok(uniform_row(seed, STREAM_RANDOM_PRIOR + key, self.width()))
            }
            PriorStrategy::Lumped => {
                let mut row = vec![0.0; self.width()];
                row[key as usize] = 1.0;
                Ok(row)
            }
        }
    }

    fn one_hot_row(&self, combo: &[Level], key: u64) -> Vec<f64> {
        let mut row = vec![0.0; self.schema.total_levels()];
        let offsets = self.schema.block_offsets();
        for (i, (var, level)) in self.schema.variables().iter().zip(combo).enumerate() {
            let block = &mut row[offsets[i]..offsets[i] + var.level_count()];
            match level {
                Some(l) => block[l - 1] = 1.0,
                None => {
                    if let NanFill::Random { seed } = self.nan_fill {
                        let fill = uniform_row(seed, STREAM_NAN_FILL + key * 64 + i as u64, block.len());
                        block.copy_from_slice(&fill);
                    }
                }
            }
        }
        row
    }
}

/// ζ matrix and combination index for every NaN-free combination.
pub fn encode_prior(schema: &CategoricalSchema, strategy: PriorStrategy) -> Result<PriorEncoding> {
    let enc = PriorEncoder::new(schema.clone(), strategy, NanFill::Zero)?;
    let combos = schema.combinations();
    let matrix = combos.iter().map(|c| enc.row(c)).collect::<Result<Vec<_>>>()?;
    Ok(PriorEncoding {
        strategy,
        matrix,
        combos,
    })
}

/// Grouped one-hot prior row for a combination that may contain NaN entries.
pub fn encode_variable_length(
    schema: &CategoricalSchema,
    combo: &[Level],
    nan_fill: NanFill,
) -> Result<Vec<f64>> {
    PriorEncoder::new(schema.clone(), PriorStrategy::OneHotGrouped, nan_fill)?.row(combo)
}
