//! Sobol low-discrepancy sequence (gray-code construction, 32 bits).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Result};

const BITS: usize = 32;
const DIRECTION_TABLE: &str = include_str!("../../data/new-joe-kuo-6.64.txt");

/// Highest dimension covered by the vendored direction numbers.
pub const MAX_DIMENSION: usize = 64;

fn direction_numbers(dim: usize) -> Result<Vec<[u32; BITS]>> {
    if dim == 0 || dim > MAX_DIMENSION {
        return invalid(format!("Sobol dimension must be in 1..={MAX_DIMENSION}, got {dim}"));
    }
    let mut out = Vec::with_capacity(dim);
    let mut first = [0u32; BITS];
    for (k, v) in first.iter_mut().enumerate() {
        *v = 1u32 << (31 - k);
    }
    out.push(first);
    let rows = DIRECTION_TABLE
        .lines()
        .filter(|l| l.trim_start().starts_with(|c: char| c.is_ascii_digit()));
    for line in rows.take(dim - 1) {
        let fields: Vec<u32> = line
            .split_whitespace()
            .map(|f| f.parse().expect("direction table holds integers"))
            .collect();
        let (s, a) = (fields[1] as usize, fields[2]);
        let m = &fields[3..3 + s];
        let mut v = [0u32; BITS];
        for k in 0..BITS {
            v[k] = if k < s {
                m[k] << (31 - k)
            } else {
                let mut x = v[k - s] ^ (v[k - s] >> s);
                for j in 1..s {
                    if (a >> (s - 1 - j)) & 1 == 1 {
                        x ^= v[k - j];
                    }
                }
                x
            };
        }
        out.push(v);
    }
    Ok(out)
}

/// Sobol generator. An optional digital shift (a seeded XOR mask per
/// coordinate) yields independent randomized replicates of the design.
#[derive(Debug, Clone)]
pub struct SobolSampler {
    directions: Vec<[u32; BITS]>,
    shift: Vec<u32>,
}

impl SobolSampler {
    pub fn new(dim: usize) -> Result<Self> {
        Ok(Self {
            directions: direction_numbers(dim)?,
            shift: vec![0; dim],
        })
    }

    pub fn with_digital_shift(mut self, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for s in &mut self.shift {
            *s = rng.random();
        }
        self
    }

    pub fn dim(&self) -> usize {
        self.directions.len()
    }

    /// Points `skip..skip + n` of the sequence.
    pub fn points(&self, n: usize, skip: usize) -> Vec<Vec<f64>> {
        let d = self.dim();
        let mut state = vec![0u32; d];
        let mut out = Vec::with_capacity(n);
        for i in 0..skip + n {
            if i >= skip {
                out.push(
                    state
                        .iter()
                        .zip(&self.shift)
                        .map(|(s, m)| f64::from(s ^ m) / 4_294_967_296.0)
                        .collect(),
                );
            }
            // gray code: flip the direction number of the lowest zero bit of i
            let c = (!(i as u64)).trailing_zeros() as usize;
            if c < BITS {
                for (st, v) in state.iter_mut().zip(&self.directions) {
                    *st ^= v[c];
                }
            }
        }
        out
    }
}

/// First `n` points after skipping `skip`, unshifted.
pub fn sobol_points(d: usize, n: usize, skip: usize) -> Result<Vec<Vec<f64>>> {
    Ok(SobolSampler::new(d)?.points(n, skip))
}
