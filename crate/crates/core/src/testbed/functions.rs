//! Analytic benchmark functions with some inputs converted to categorical
//! variables. Each level stands for an underlying numeric value that the
//! models never see.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::data::MixedSample;
use crate::error::{invalid, Error, Result};
use crate::schema::{CategoricalSchema, CategoricalVariable, InputSpace, Level, NumericVariable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FunctionId {
    Olt,
    Piston,
    Borehole,
    EffectivePotential,
    WingWeight,
    Custom,
}

impl FunctionId {
    pub const ALL: [FunctionId; 6] = [
        Self::Olt,
        Self::Piston,
        Self::Borehole,
        Self::EffectivePotential,
        Self::WingWeight,
        Self::Custom,
    ];

    pub fn number(self) -> u8 {
        self as u8 + 1
    }

    pub fn from_number(id: u8) -> Result<Self> {
        Self::ALL
            .get((id as usize).wrapping_sub(1))
            .copied()
            .ok_or_else(|| Error::InvalidArgument(format!("no benchmark function with id {id}")))
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Olt => "olt",
            Self::Piston => "piston",
            Self::Borehole => "borehole",
            Self::EffectivePotential => "effective-potential",
            Self::WingWeight => "wing-weight",
            Self::Custom => "custom",
        }
    }
}

impl std::fmt::Display for FunctionId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for FunctionId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if let Ok(n) = s.parse::<u8>() {
            return Self::from_number(n);
        }
        let key = s.to_ascii_lowercase().replace('_', "-");
        Self::ALL
            .into_iter()
            .find(|f| f.name() == key)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown benchmark function '{s}'")))
    }
}

/// A categorical input and the numeric value behind each level.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelTable {
    pub name: &'static str,
    pub values: &'static [f64],
    /// Value used by the true function when the variable is NaN.
    pub nan_value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkFunction {
    pub id: FunctionId,
    pub numeric: Vec<NumericVariable>,
    pub categorical: Vec<LevelTable>,
}

fn num(name: &str, lower: f64, upper: f64) -> NumericVariable {
    NumericVariable::new(name, lower, upper)
}

const fn table(name: &'static str, values: &'static [f64], nan_value: Option<f64>) -> LevelTable {
    LevelTable {
        name,
        values,
        nan_value,
    }
}

impl BenchmarkFunction {
    pub fn new(id: FunctionId) -> Self {
        let (numeric, categorical) = match id {
            FunctionId::Olt => (
                vec![num("R_b2", 50.0, 70.0), num("R_c1", 1.2, 2.5), num("R_c2", 0.01, 5.0)],
                vec![
                    table("R_b1", &[25.0, 32.5, 40.0], Some(35.0)),
                    table("R_f", &[0.5, 2.0, 3.0], Some(1.0)),
                    table("beta", &[1.0, 4.0, 5.0], Some(2.0)),
                ],
            ),
            FunctionId::Piston => (
                vec![
                    num("k", 2000.0, 3000.0),
                    num("P_0", 2e5, 1.5e6),
                    num("T", 10.0, 500.0),
                    num("T_0", 10.0, 760.0),
                ],
                vec![
                    table("M", &[30.0, 40.0, 50.0], None),
                    table("S", &[0.005, 1.0, 2.0], None),
                    table("V_0", &[0.002, 0.4, 1.0], None),
                ],
            ),
            FunctionId::Borehole => (
                vec![
                    num("T_u", 100.0, 1000.0),
                    num("H_u", 990.0, 1110.0),
                    num("H_l", 700.0, 820.0),
                    num("r", 100.0, 1e4),
                    num("r_w", 0.05, 0.15),
                ],
                vec![
                    table("T_l", &[10.0, 30.0, 100.0, 200.0, 500.0], Some(350.0)),
                    table("L", &[1000.0, 1400.0, 2000.0], Some(1100.0)),
                    table("K_w", &[6000.0, 10000.0, 12000.0], Some(8000.0)),
                ],
            ),
            FunctionId::EffectivePotential => (
                (1..=6).map(|i| num(&format!("x{i}"), 0.0, 1.0)).collect(),
                vec![
                    table("x7", &[0.1, 0.25, 0.7, 0.8, 1.0], None),
                    table("x8", &[1.0, 2.0, 4.0, 9.0, 10.0], None),
                    table("x9", &[5.0, 10.0, 12.5, 25.0, 30.0], None),
                    table("x10", &[0.01, 0.02, 0.1, 0.3, 0.5], None),
                ],
            ),
            FunctionId::WingWeight => (
                vec![
                    num("A", 6.0, 10.0),
                    num("Lambda", -10.0, 10.0),
                    num("q", 16.0, 45.0),
                    num("lambda", 0.5, 1.0),
                    num("N_z", 2.5, 6.0),
                    num("W_p", 0.025, 0.08),
                ],
                vec![
                    table("S_w", &[150.0, 180.0, 200.0], None),
                    table("W_fw", &[220.0, 250.0, 300.0], None),
                    table("t_c", &[0.08, 0.12, 0.18], None),
                    table("W_dg", &[1700.0, 2000.0, 2500.0], None),
                ],
            ),
            FunctionId::Custom => (
                ["x1", "x2", "x5", "x6", "x7"].iter().map(|n| num(n, 0.0, 1.0)).collect(),
                vec![
                    table("x3", &[0.0, 0.1, 0.3, 0.6, 0.7, 1.0], None),
                    table("x4", &[0.0, 0.2, 0.7, 1.0], None),
                    table("x8", &[0.0, 0.4, 1.0], None),
                ],
            ),
        };
        Self {
            id,
            numeric,
            categorical,
        }
    }

    pub fn dx(&self) -> usize {
        self.numeric.len()
    }

    pub fn dt(&self) -> usize {
        self.categorical.len()
    }

    /// Level-index schema (labels `1..=m`).
    pub fn schema(&self) -> CategoricalSchema {
        CategoricalSchema::new(
            self.categorical
                .iter()
                .map(|c| CategoricalVariable::indexed(c.name, c.values.len()))
                .collect(),
        )
        .expect("level tables have at least two distinct levels")
    }

    pub fn space(&self) -> InputSpace {
        InputSpace::new(self.numeric.clone(), self.schema())
    }

    /// Space in which every categorical variable may be NaN.
    pub fn variable_length_space(&self) -> Result<InputSpace> {
        if self.categorical.iter().any(|c| c.nan_value.is_none()) {
            return Err(Error::Unsupported(format!(
                "{} has no substitution values for NaN levels",
                self.id
            )));
        }
        let schema = CategoricalSchema::new(
            self.categorical
                .iter()
                .map(|c| CategoricalVariable::indexed(c.name, c.values.len()).with_nan())
                .collect(),
        )?;
        Ok(InputSpace::new(self.numeric.clone(), schema))
    }

    /// Input names: numeric first, then categorical, in model order.
    pub fn input_names(&self) -> Vec<String> {
        self.numeric
            .iter()
            .map(|v| v.name.clone())
            .chain(self.categorical.iter().map(|c| c.name.to_string()))
            .collect()
    }

    pub fn level_value(&self, variable: &str, level: usize) -> Result<f64> {
        let t = self
            .categorical
            .iter()
            .find(|c| c.name == variable)
            .ok_or_else(|| Error::InvalidArgument(format!("{} has no categorical variable '{variable}'", self.id)))?;
        t.values
            .get(level.wrapping_sub(1))
            .copied()
            .ok_or_else(|| Error::InvalidArgument(format!("'{variable}' has no level {level}")))
    }

    /// Underlying value of a level, or the NaN substitute.
    fn underlying(&self, var: usize, level: Level) -> Result<f64> {
        let t = &self.categorical[var];
        match level {
            Some(l) => self.level_value(t.name, l),
            None => t
                .nan_value
                .ok_or_else(|| Error::InvalidArgument(format!("'{}' cannot be NaN", t.name))),
        }
    }

    /// Evaluates at a mixed sample after checking ranges and levels.
    pub fn eval(&self, w: &MixedSample) -> Result<f64> {
        if w.x.len() != self.dx() || w.t.len() != self.dt() {
            return invalid(format!(
                "{} takes {} numeric and {} categorical inputs",
                self.id,
                self.dx(),
                self.dt()
            ));
        }
        for (v, x) in self.numeric.iter().zip(&w.x) {
            let slack = 1e-12 * (v.upper - v.lower);
            if !(*x >= v.lower - slack && *x <= v.upper + slack) {
                return invalid(format!("{} = {x} outside [{}, {}]", v.name, v.lower, v.upper));
            }
        }
        let cat = (0..self.dt())
            .map(|i| self.underlying(i, w.t[i]))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.eval_values(&w.x, &cat))
    }

    /// The formula on underlying values, without range checks.
    pub fn eval_values(&self, x: &[f64], c: &[f64]) -> f64 {
        match self.id {
            FunctionId::Olt => olt(c[0], x[0], c[1], x[1], x[2], c[2]),
            FunctionId::Piston => piston(c[0], c[1], c[2], x[0], x[1], x[2], x[3]),
            FunctionId::Borehole => borehole(x[0], x[1], x[2], x[3], x[4], c[0], c[1], c[2]),
            FunctionId::EffectivePotential => {
                let mut v = [0.0; 10];
                v[..6].copy_from_slice(x);
                v[6..].copy_from_slice(c);
                effective_potential(&v)
            }
            FunctionId::WingWeight => wing_weight(c[0], c[1], x[0], x[1], x[2], x[3], c[2], x[4], c[3], x[5]),
            FunctionId::Custom => custom(&[x[0], x[1], c[0], c[1], x[2], x[3], x[4], c[2]]),
        }
    }

    /// Range of every input over which it varies, categorical inputs
    /// spanning their smallest to largest underlying value.
    pub fn value_ranges(&self) -> Vec<(f64, f64)> {
        self.numeric
            .iter()
            .map(|v| (v.lower, v.upper))
            .chain(self.categorical.iter().map(|c| {
                let lo = c.values.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = c.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                (lo, hi)
            }))
            .collect()
    }
}

pub fn eval_function(id: FunctionId, w: &MixedSample) -> Result<f64> {
    BenchmarkFunction::new(id).eval(w)
}

pub fn level_value(id: FunctionId, variable: &str, level: usize) -> Result<f64> {
    BenchmarkFunction::new(id).level_value(variable, level)
}

/// L / K_w of the borehole levels, rounded to three decimals.
pub fn l_over_kw(l_level: usize, kw_level: usize) -> Result<f64> {
    let f = BenchmarkFunction::new(FunctionId::Borehole);
    let ratio = f.level_value("L", l_level)? / f.level_value("K_w", kw_level)?;
    Ok((ratio * 1000.0).round() / 1000.0)
}

/// Variable-length pattern shared by the borehole and OLT variants: the
/// third variable drops out at levels (1, 1, ·), the second at (2, ·, 2)
/// and the first at (·, 3, 3).
pub fn apply_variable_length_pattern(combo: &[Level]) -> Vec<Level> {
    let mut out = combo.to_vec();
    match combo {
        [Some(1), Some(1), _] => out[2] = None,
        [Some(2), _, Some(2)] => out[1] = None,
        [_, Some(3), Some(3)] => out[0] = None,
        _ => {}
    }
    out
}

fn olt(rb1: f64, rb2: f64, rf: f64, rc1: f64, rc2: f64, beta: f64) -> f64 {
    let vb1 = 12.0 * rb2 / (rb1 + rb2);
    let b = beta * (rc2 + 9.0);
    ((vb1 + 0.74) * b + 11.35 * rf) / (b + rf) + 0.74 * rf * b / ((b + rf) * rc1)
}

// The volume term follows the printed form V = S/(2k)·√(A² + 4k·P₀·T/T₀).
#[allow(clippy::too_many_arguments)]
fn piston(m: f64, s: f64, v0: f64, k: f64, p0: f64, t: f64, t0: f64) -> f64 {
    let a = p0 * s + 19.62 * m - k * v0 / s;
    let v = s / (2.0 * k) * (a * a + 4.0 * k * p0 / t0 * t).sqrt();
    2.0 * PI * (m / (k + s * s * p0 * v0 * t / (t0 * v * v))).sqrt()
}

#[allow(clippy::too_many_arguments)]
fn borehole(tu: f64, hu: f64, hl: f64, r: f64, rw: f64, tl: f64, l: f64, kw: f64) -> f64 {
    let lr = (r / rw).ln();
    2.0 * PI * tu * (hu - hl) / (lr * (1.0 + 2.0 * l * tu / (lr * rw * rw * kw) + tu / tl))
}

fn effective_potential(x: &[f64; 10]) -> f64 {
    let eps = [[x[0], x[5], x[4]], [x[5], x[1], x[3]], [x[4], x[3], x[2]]];
    let em = (eps[0][0] + eps[1][1] + eps[2][2]) / 3.0;
    let mut dd = 0.0;
    for (i, row) in eps.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            let d = v - if i == j { em } else { 0.0 };
            dd += d * d;
        }
    }
    let eq = (2.0f64 / 3.0).sqrt() * dd;
    let (x7, x8, x9, x10) = (x[6], x[7], x[8], x[9]);
    100.0 * 4.5 * x9 * em * em + x8 * x10 / (1.0 + x7) * (eq / x10).powf(1.0 + x7)
}

#[allow(clippy::too_many_arguments)]
fn wing_weight(
    sw: f64,
    wfw: f64,
    a: f64,
    lambda_deg: f64,
    q: f64,
    taper: f64,
    tc: f64,
    nz: f64,
    wdg: f64,
    wp: f64,
) -> f64 {
    let c = lambda_deg.to_radians().cos();
    0.036
        * sw.powf(0.758)
        * wfw.powf(0.0035)
        * (a / (c * c)).powf(0.6)
        * q.powf(0.006)
        * taper.powf(0.04)
        * (100.0 * tc / c).powf(-0.3)
        * (nz * wdg).powf(0.49)
        + sw * wp
}

fn custom(x: &[f64; 8]) -> f64 {
    let mut y = 4.0 * (x[0] - 2.0 + 8.0 * x[1] - 8.0 * x[1] * x[1]).powi(2)
        + (3.0 - 4.0 * x[1]).powi(2)
        + 16.0 * (x[2] + 1.0).sqrt() * (2.0 * x[2] - 1.0).powi(2);
    for i in 4..=8 {
        let inner: f64 = x[2..i].iter().sum();
        y += (1.0 + inner).ln();
    }
    y
}
