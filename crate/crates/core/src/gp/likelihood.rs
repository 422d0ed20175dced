//! Profile likelihood of a mixed-input GP and its analytic gradient over the
//! packed hyperparameter vector.

use std::collections::HashMap;
use std::f64::consts::LN_10;

use faer::{Mat, MatRef};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::linalg::{gls, sigma2_from_white, Factor, Gls, Sigma2};
use super::model::Standardization;
use super::{build_correlation_matrix, Hyperparameters, MeanBasis, ModelKind, CHOLESKY_JITTER};
use crate::data::{MixedDataset, MixedSample};
use crate::error::{invalid, Error, Result};
use crate::latent::map::{lvgp_free_coords, lvgp_free_count, lvgp_points_from_free};
use crate::latent::{LatentMap, NanFill, PriorEncoder, PriorStrategy};
use crate::optimize::Bounds;
use crate::schema::{CategoricalSchema, Level};

/// L = n log σ̂² + log|R_δ| for raw (unscaled) data with a constant mean.
/// Returns `+∞` when R_δ cannot be factorized.
pub fn neg_log_profile_likelihood(hypers: &Hyperparameters, data: &MixedDataset) -> Result<f64> {
    neg_log_profile_likelihood_with_basis(hypers, data, &MeanBasis::constant())
}

pub fn neg_log_profile_likelihood_with_basis(
    hypers: &Hyperparameters,
    data: &MixedDataset,
    basis: &MeanBasis,
) -> Result<f64> {
    basis.check(data.space().dx())?;
    let mut r = build_correlation_matrix(data, hypers)?;
    for i in 0..r.nrows() {
        r[(i, i)] += CHOLESKY_JITTER;
    }
    let f = basis_matrix(basis, data.samples().iter().map(|s| s.x.as_slice()));
    match condition_factored(r.as_ref(), f.as_ref(), data.y()) {
        Ok(c) => Ok(c.objective),
        Err(Error::FitFailure(_)) => Ok(f64::INFINITY),
        Err(e) => Err(e),
    }
}

pub(crate) fn basis_matrix<'a>(basis: &MeanBasis, rows: impl Iterator<Item = &'a [f64]>) -> Mat<f64> {
    let rows: Vec<Vec<f64>> = rows.map(|x| basis.evaluate(x)).collect();
    Mat::from_fn(rows.len(), basis.len(), |i, k| rows[i][k])
}

/// Everything prediction needs from one factorization of R_δ.
#[derive(Debug, Clone)]
pub(crate) struct Conditioned {
    pub factor: Factor,
    pub gls: Gls,
    pub sigma2: Sigma2,
    /// R_δ⁻¹(y − Fβ̂)
    pub alpha: Vec<f64>,
    pub objective: f64,
}

/// Factorizes `r` (already including δ and jitter) and profiles β̂, σ̂².
pub(crate) fn condition_factored(r: MatRef<'_, f64>, f: MatRef<'_, f64>, y: &[f64]) -> Result<Conditioned> {
    let factor =
        Factor::new(r).ok_or_else(|| Error::FitFailure("correlation matrix is not positive definite".into()))?;
    let g = gls(&factor, f, y)?;
    let sigma2 = sigma2_from_white(&g.resid_white);
    let mut alpha = super::linalg::column(&g.resid_white);
    factor.solve_lower_transpose_in_place(alpha.as_mut());
    let alpha = alpha.col_as_slice(0).to_vec();
    let objective = y.len() as f64 * sigma2.value.ln() + factor.log_det();
    Ok(Conditioned {
        factor,
        gls: g,
        sigma2,
        alpha,
        objective,
    })
}

/// Model structure shared by fitting and prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    #[serde(default)]
    pub prior: PriorStrategy,
    #[serde(default)]
    pub nan_fill: NanFill,
    #[serde(default = "default_latent_dim")]
    pub latent_dim: usize,
    #[serde(default)]
    pub basis: MeanBasis,
    #[serde(default = "default_true")]
    pub standardize: bool,
}

fn default_latent_dim() -> usize {
    2
}

fn default_true() -> bool {
    true
}

impl ModelSpec {
    pub fn new(kind: ModelKind) -> Self {
        Self {
            kind,
            prior: PriorStrategy::default(),
            nan_fill: NanFill::default(),
            latent_dim: 2,
            basis: MeanBasis::constant(),
            standardize: true,
        }
    }

    /// True when the kernel carries a latent map for the given schema.
    pub fn uses_map(&self, schema: &CategoricalSchema) -> bool {
        self.kind != ModelKind::Gp && !schema.is_empty()
    }
}

/// Box bounds for each block of the packed parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamBounds {
    pub omega: (f64, f64),
    pub map_entry: (f64, f64),
    pub lvgp_coord: (f64, f64),
    pub log10_delta: (f64, f64),
}

impl Default for ParamBounds {
    fn default() -> Self {
        Self {
            omega: (-8.0, 3.0),
            map_entry: (-1.0, 1.0),
            lvgp_coord: (-5.0, 5.0),
            log10_delta: (-10.0, -1.0),
        }
    }
}

/// Scaled training inputs grouped by distinct level combination.
#[derive(Debug, Clone)]
pub(crate) struct Design {
    pub n: usize,
    pub dim: usize,
    /// n × dim, row-major, model scale.
    pub x: Vec<f64>,
    pub combo_of: Vec<usize>,
    pub combos: Vec<Vec<Level>>,
}

impl Design {
    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.dim..(i + 1) * self.dim]
    }
}

/// Numeric features fed to the kernel, before scaling. The plain GP treats
/// level indices as numbers, with NaN as level 0.
pub(crate) fn raw_features(sample: &MixedSample, kind: ModelKind) -> Vec<f64> {
    let mut f = sample.x.clone();
    if kind == ModelKind::Gp {
        f.extend(sample.t.iter().map(|l| l.map_or(0.0, |v| v as f64)));
    }
    f
}

pub(crate) fn combo_key(sample: &MixedSample, uses_map: bool) -> Vec<Level> {
    if uses_map {
        sample.t.clone()
    } else {
        Vec::new()
    }
}

impl Design {
    pub fn build(data: &MixedDataset, spec: &ModelSpec, scaling: &Standardization) -> Self {
        let uses_map = spec.uses_map(&data.space().categorical);
        let mut index: HashMap<Vec<Level>, usize> = HashMap::new();
        let mut combos = Vec::new();
        let mut combo_of = Vec::with_capacity(data.len());
        let mut x = Vec::new();
        for s in data.samples() {
            x.extend(scaling.scale_x(&raw_features(s, spec.kind)));
            let key = combo_key(s, uses_map);
            let next = combos.len();
            let c = *index.entry(key.clone()).or_insert_with(|| {
                combos.push(key);
                next
            });
            combo_of.push(c);
        }
        let n = data.len();
        Self {
            n,
            dim: x.len() / n,
            x,
            combo_of,
            combos,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) enum MapLayout {
    None,
    Lmgp {
        encoder: PriorEncoder,
        latent_dim: usize,
        /// Prior row of every design combination.
        priors: Vec<Vec<f64>>,
    },
    Lvgp {
        schema: CategoricalSchema,
        latent_dim: usize,
    },
}

/// Packing of (ω, map, log10 δ) into one flat vector.
#[derive(Debug, Clone)]
pub(crate) struct ParamLayout {
    pub dim: usize,
    pub map: MapLayout,
}

impl ParamLayout {
    pub fn new(spec: &ModelSpec, schema: &CategoricalSchema, design: &Design) -> Result<Self> {
        if spec.latent_dim == 0 {
            return invalid("latent dimension must be positive");
        }
        let map = if !spec.uses_map(schema) {
            MapLayout::None
        } else if spec.kind == ModelKind::Lmgp {
            let encoder = PriorEncoder::new(schema.clone(), spec.prior, spec.nan_fill)?;
            let priors = design
                .combos
                .iter()
                .map(|c| encoder.row(c))
                .collect::<Result<Vec<_>>>()?;
            MapLayout::Lmgp {
                encoder,
                latent_dim: spec.latent_dim,
                priors,
            }
        } else {
            if design.combos.iter().flatten().any(Option::is_none) {
                return Err(Error::Unsupported("LVGP cannot model NaN levels".into()));
            }
            MapLayout::Lvgp {
                schema: schema.clone(),
                latent_dim: spec.latent_dim,
            }
        };
        Ok(Self { dim: design.dim, map })
    }

    pub fn map_len(&self) -> usize {
        match &self.map {
            MapLayout::None => 0,
            MapLayout::Lmgp {
                encoder, latent_dim, ..
            } => encoder.width() * latent_dim,
            MapLayout::Lvgp { schema, latent_dim } => schema
                .level_counts()
                .iter()
                .map(|&m| lvgp_free_count(m, *latent_dim))
                .sum(),
        }
    }

    pub fn len(&self) -> usize {
        self.dim + self.map_len() + 1
    }

    pub fn bounds(&self, b: &ParamBounds) -> Bounds {
        let mut lower = vec![b.omega.0; self.dim];
        let mut upper = vec![b.omega.1; self.dim];
        match &self.map {
            MapLayout::None => {}
            MapLayout::Lmgp { .. } => {
                lower.extend(std::iter::repeat_n(b.map_entry.0, self.map_len()));
                upper.extend(std::iter::repeat_n(b.map_entry.1, self.map_len()));
            }
            MapLayout::Lvgp { schema, latent_dim } => {
                for &m in &schema.level_counts() {
                    for j in 0..m {
                        for (_, nonneg) in lvgp_free_coords(j, *latent_dim) {
                            lower.push(if nonneg { b.lvgp_coord.0.max(0.0) } else { b.lvgp_coord.0 });
                            upper.push(b.lvgp_coord.1);
                        }
                    }
                }
            }
        }
        lower.push(b.log10_delta.0);
        upper.push(b.log10_delta.1);
        Bounds::new(lower, upper).expect("parameter bounds are ordered")
    }

    pub fn unpack(&self, theta: &[f64]) -> Result<Hyperparameters> {
        if theta.len() != self.len() {
            return invalid(format!("expected {} parameters, got {}", self.len(), theta.len()));
        }
        let omega = theta[..self.dim].to_vec();
        let block = &theta[self.dim..self.dim + self.map_len()];
        let map = match &self.map {
            MapLayout::None => None,
            MapLayout::Lmgp {
                encoder, latent_dim, ..
            } => Some(LatentMap::lmgp(encoder.clone(), block.to_vec(), *latent_dim)?),
            MapLayout::Lvgp { schema, latent_dim } => {
                let mut points = Vec::new();
                let mut k = 0;
                for &m in &schema.level_counts() {
                    let c = lvgp_free_count(m, *latent_dim);
                    points.push(lvgp_points_from_free(&block[k..k + c], m, *latent_dim)?);
                    k += c;
                }
                Some(LatentMap::lvgp(schema.clone(), points, *latent_dim)?)
            }
        };
        Ok(Hyperparameters {
            omega,
            map,
            delta: 10f64.powf(theta[theta.len() - 1]),
        })
    }

    pub fn pack(&self, h: &Hyperparameters) -> Result<Vec<f64>> {
        if h.omega.len() != self.dim {
            return invalid("roughness vector does not match the model inputs");
        }
        if !(h.delta > 0.0) {
            return invalid("nugget must be positive to be packed on a log scale");
        }
        let mut theta = h.omega.clone();
        match (&self.map, &h.map) {
            (MapLayout::None, None) => {}
            (MapLayout::Lmgp { encoder, latent_dim, .. }, Some(LatentMap::Lmgp { a, latent_dim: d, encoder: e }))
                if d == latent_dim && e == encoder =>
            {
                theta.extend_from_slice(a)
            }
            (MapLayout::Lvgp { schema, latent_dim }, Some(LatentMap::Lvgp { points, latent_dim: d, schema: s }))
                if d == latent_dim && s == schema =>
            {
                for (p, &m) in points.iter().zip(&schema.level_counts()) {
                    for j in 0..m {
                        for (c, _) in lvgp_free_coords(j, *latent_dim) {
                            theta.push(p[j * latent_dim + c]);
                        }
                    }
                }
            }
            _ => return invalid("latent map does not match the model structure"),
        }
        theta.push(h.delta.log10());
        Ok(theta)
    }

    /// Center start: ω = 0, small random map entries, log10 δ = −4.
    pub fn center_start(&self, bounds: &Bounds, rng: &mut impl Rng) -> Vec<f64> {
        let mut theta = vec![0.0; self.dim];
        theta.extend((0..self.map_len()).map(|_| rng.random_range(-0.1..0.1)));
        theta.push(-4.0);
        bounds.project(&mut theta);
        theta
    }
}

/// Profile likelihood over the packed parameter vector of one model on one
/// dataset, in model (scaled) coordinates.
#[derive(Debug, Clone)]
pub struct LikelihoodProblem {
    spec: ModelSpec,
    scaling: Standardization,
    design: Design,
    layout: ParamLayout,
    f: Mat<f64>,
    y: Vec<f64>,
}

impl LikelihoodProblem {
    pub fn new(data: &MixedDataset, spec: &ModelSpec) -> Result<Self> {
        let scaling = Standardization::fit(data, spec);
        let design = Design::build(data, spec, &scaling);
        spec.basis.check(design.dim)?;
        let layout = ParamLayout::new(spec, &data.space().categorical, &design)?;
        let f = basis_matrix(&spec.basis, (0..design.n).map(|i| design.row(i)));
        let y = data.y().iter().map(|v| scaling.scale_y(*v)).collect();
        Ok(Self {
            spec: spec.clone(),
            scaling,
            design,
            layout,
            f,
            y,
        })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn standardization(&self) -> &Standardization {
        &self.scaling
    }

    /// Number of packed parameters.
    pub fn len(&self) -> usize {
        self.layout.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn bounds(&self, b: &ParamBounds) -> Bounds {
        self.layout.bounds(b)
    }

    pub fn unpack(&self, theta: &[f64]) -> Result<Hyperparameters> {
        self.layout.unpack(theta)
    }

    pub fn pack(&self, hypers: &Hyperparameters) -> Result<Vec<f64>> {
        self.layout.pack(hypers)
    }

    pub fn center_start(&self, bounds: &Bounds, rng: &mut impl Rng) -> Vec<f64> {
        self.layout.center_start(bounds, rng)
    }

    pub(crate) fn design(&self) -> &Design {
        &self.design
    }

    /// Latent position of every design combination.
    pub(crate) fn positions(&self, hypers: &Hyperparameters) -> Result<Vec<Vec<f64>>> {
        match &hypers.map {
            None => Ok(vec![Vec::new(); self.design.combos.len()]),
            Some(map) => self.design.combos.iter().map(|c| map.position(c)).collect(),
        }
    }

    /// Correlation matrix without nugget or jitter.
    pub(crate) fn kernel_matrix(&self, omega: &[f64], positions: &[Vec<f64>]) -> Mat<f64> {
        let d = &self.design;
        let w: Vec<f64> = omega.iter().map(|o| 10f64.powf(*o)).collect();
        let kc = positions.len();
        let mut latent = vec![0.0; kc * kc];
        for a in 0..kc {
            for b in 0..a {
                let v = super::kernel::sq_dist(&positions[a], &positions[b]);
                latent[a * kc + b] = v;
                latent[b * kc + a] = v;
            }
        }
        let mut k = Mat::<f64>::zeros(d.n, d.n);
        for j in 0..d.n {
            k[(j, j)] = 1.0;
            let xj = d.row(j);
            let cj = d.combo_of[j];
            for i in 0..j {
                let xi = d.row(i);
                let mut e = latent[d.combo_of[i] * kc + cj];
                for ((a, b), wk) in xi.iter().zip(xj).zip(&w) {
                    e += wk * (a - b) * (a - b);
                }
                let v = (-e).exp();
                k[(i, j)] = v;
                k[(j, i)] = v;
            }
        }
        k
    }

    pub(crate) fn condition(&self, hypers: &Hyperparameters) -> Result<(Mat<f64>, Conditioned)> {
        let positions = self.positions(hypers)?;
        let k = self.kernel_matrix(&hypers.omega, &positions);
        let mut r = k.clone();
        for i in 0..r.nrows() {
            r[(i, i)] += hypers.delta + CHOLESKY_JITTER;
        }
        let c = condition_factored(r.as_ref(), self.f.as_ref(), &self.y)?;
        Ok((k, c))
    }

    /// Objective value; `+∞` where R_δ cannot be factorized.
    pub fn objective(&self, theta: &[f64]) -> f64 {
        self.evaluate(theta, false).0
    }

    /// Objective and analytic gradient. The gradient is `None` when the
    /// objective is infeasible at `theta`.
    pub fn objective_and_gradient(&self, theta: &[f64]) -> (f64, Option<Vec<f64>>) {
        self.evaluate(theta, true)
    }

    fn evaluate(&self, theta: &[f64], want_gradient: bool) -> (f64, Option<Vec<f64>>) {
        if theta.iter().any(|v| !v.is_finite()) {
            return (f64::INFINITY, None);
        }
        let Ok(hypers) = self.unpack(theta) else {
            return (f64::INFINITY, None);
        };
        let Ok((k, c)) = self.condition(&hypers) else {
            return (f64::INFINITY, None);
        };
        if !c.objective.is_finite() {
            return (f64::INFINITY, None);
        }
        if !want_gradient {
            return (c.objective, None);
        }
        let positions = self.positions(&hypers).expect("positions were computable above");
        let g = self.gradient(theta, &hypers, &positions, &k, &c);
        (c.objective, Some(g))
    }

    // ∂L/∂θ = tr(W ∂R/∂θ) with W = R⁻¹ − ααᵀ/σ̂².
    fn gradient(
        &self,
        theta: &[f64],
        hypers: &Hyperparameters,
        positions: &[Vec<f64>],
        k: &Mat<f64>,
        c: &Conditioned,
    ) -> Vec<f64> {
        let d = &self.design;
        let rinv = c.factor.inverse();
        let s2 = c.sigma2.value;
        let alpha = &c.alpha;
        let kc = positions.len();
        let mut grad = vec![0.0; theta.len()];

        // M = W∘K summed over numeric squared gaps and over combination pairs.
        let mut g_omega = vec![0.0; d.dim];
        let mut m_combo = vec![0.0; kc * kc];
        for j in 0..d.n {
            let xj = d.row(j);
            let cj = d.combo_of[j];
            let rcol = rinv.col_as_slice(j);
            let kcol = k.col_as_slice(j);
            for i in 0..j {
                let m = (rcol[i] - alpha[i] * alpha[j] / s2) * kcol[i];
                let xi = d.row(i);
                for ((acc, a), b) in g_omega.iter_mut().zip(xi).zip(xj) {
                    *acc += m * (a - b) * (a - b);
                }
                let ci = d.combo_of[i];
                m_combo[ci * kc + cj] += m;
                m_combo[cj * kc + ci] += m;
            }
        }
        for (dk, acc) in g_omega.iter().enumerate() {
            grad[dk] = -2.0 * LN_10 * 10f64.powf(hypers.omega[dk]) * acc;
        }

        let q = positions.first().map_or(0, Vec::len);
        let mut g_pos = vec![vec![0.0; q]; kc];
        for a in 0..kc {
            for b in 0..kc {
                let m = m_combo[a * kc + b];
                if m != 0.0 {
                    for (g, (za, zb)) in g_pos[a].iter_mut().zip(positions[a].iter().zip(&positions[b])) {
                        *g -= 4.0 * m * (za - zb);
                    }
                }
            }
        }
        let off = d.dim;
        match &self.layout.map {
            MapLayout::None => {}
            MapLayout::Lmgp {
                latent_dim, priors, ..
            } => {
                for (zeta, gz) in priors.iter().zip(&g_pos) {
                    for (p, zp) in zeta.iter().enumerate() {
                        if *zp != 0.0 {
                            for (qq, gzq) in gz.iter().enumerate() {
                                grad[off + p * latent_dim + qq] += zp * gzq;
                            }
                        }
                    }
                }
            }
            MapLayout::Lvgp { schema, latent_dim } => {
                let dz = *latent_dim;
                let counts = schema.level_counts();
                let mut g_pts: Vec<Vec<f64>> = counts.iter().map(|m| vec![0.0; m * dz]).collect();
                for (combo, gz) in d.combos.iter().zip(&g_pos) {
                    for (v, level) in combo.iter().enumerate() {
                        let l = level.expect("LVGP designs have no NaN levels") - 1;
                        for e in 0..dz {
                            g_pts[v][l * dz + e] += gz[v * dz + e];
                        }
                    }
                }
                let mut idx = off;
                for (v, &m) in counts.iter().enumerate() {
                    for j in 0..m {
                        for (e, _) in lvgp_free_coords(j, dz) {
                            grad[idx] = g_pts[v][j * dz + e];
                            idx += 1;
                        }
                    }
                }
            }
        }

        let trace_w: f64 = (0..d.n).map(|i| rinv[(i, i)] - alpha[i] * alpha[i] / s2).sum();
        let last = theta.len() - 1;
        grad[last] = LN_10 * hypers.delta * trace_w;
        grad
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::{CategoricalVariable, InputSpace, NumericVariable};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn mixed_data(n: usize, seed: u64) -> MixedDataset {
        let schema = CategoricalSchema::new(vec![
            CategoricalVariable::indexed("a", 2),
            CategoricalVariable::indexed("b", 3),
        ])
        .unwrap();
        let space = InputSpace::new(
            vec![NumericVariable::new("x1", 0.0, 1.0), NumericVariable::new("x2", -1.0, 1.0)],
            schema,
        );
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut samples = Vec::new();
        let mut y = Vec::new();
        for _ in 0..n {
            let x = vec![rng.random::<f64>(), rng.random_range(-1.0..1.0)];
            let t = vec![Some(rng.random_range(1..=2)), Some(rng.random_range(1..=3))];
            y.push((3.0 * x[0]).sin() + x[1] * t[1].unwrap() as f64 - t[0].unwrap() as f64);
            samples.push(MixedSample::new(x, t));
        }
        MixedDataset::new(space, samples, y).unwrap()
    }

    #[test]
    fn identity_correlation_value() {
        let space = InputSpace::numeric_only(vec![NumericVariable::new("x", 0.0, 1.0)]);
        let d = MixedDataset::new(
            space,
            vec![MixedSample::numeric(vec![0.0]), MixedSample::numeric(vec![1.0])],
            vec![0.0, 2.0],
        )
        .unwrap();
        // 10^3 roughness makes the off-diagonal e^-1000 = 0.
        let l = neg_log_profile_likelihood(&Hyperparameters::numeric(vec![3.0], 0.0), &d).unwrap();
        assert!(l.abs() < 1e-10);
    }

    #[test]
    fn pack_unpack_round_trip() {
        let data = mixed_data(12, 1);
        for kind in [ModelKind::Gp, ModelKind::Lmgp, ModelKind::Lvgp] {
            let p = LikelihoodProblem::new(&data, &ModelSpec::new(kind)).unwrap();
            let b = p.bounds(&ParamBounds::default());
            let mut rng = ChaCha8Rng::seed_from_u64(2);
            let theta = b.sample(&mut rng);
            let back = p.pack(&p.unpack(&theta).unwrap()).unwrap();
            for (u, v) in theta.iter().zip(&back) {
                assert!((u - v).abs() < 1e-14 * (1.0 + u.abs()));
            }
        }
    }

    #[test]
    fn layout_lengths() {
        let data = mixed_data(12, 1);
        let len = |kind| LikelihoodProblem::new(&data, &ModelSpec::new(kind)).unwrap().len();
        assert_eq!(len(ModelKind::Gp), 4 + 1);
        assert_eq!(len(ModelKind::Lmgp), 2 + 5 * 2 + 1);
        assert_eq!(len(ModelKind::Lvgp), 2 + 1 + 3 + 1);
    }

    #[test]
    fn gradient_matches_central_differences() {
        let data = mixed_data(15, 3);
        for kind in [ModelKind::Gp, ModelKind::Lmgp, ModelKind::Lvgp] {
            let p = LikelihoodProblem::new(&data, &ModelSpec::new(kind)).unwrap();
            let b = p.bounds(&ParamBounds::default());
            let mut rng = ChaCha8Rng::seed_from_u64(4);
            for _ in 0..3 {
                let mut theta = b.sample(&mut rng);
                for (k, t) in theta.iter_mut().enumerate() {
                    if k < 2 {
                        *t = rng.random_range(-1.0..1.0);
                    }
                }
                let last = theta.len() - 1;
                theta[last] = -3.0;
                let (_, g) = p.objective_and_gradient(&theta);
                let g = g.unwrap();
                for k in 0..theta.len() {
                    let h = 1e-6;
                    let mut tp = theta.clone();
                    tp[k] += h;
                    let mut tm = theta.clone();
                    tm[k] -= h;
                    let fd = (p.objective(&tp) - p.objective(&tm)) / (2.0 * h);
                    assert!(
                        (fd - g[k]).abs() <= 1e-5 * g[k].abs().max(1.0),
                        "{kind} component {k}: analytic {} vs fd {fd}",
                        g[k]
                    );
                }
            }
        }
    }
}
