//! Cholesky-based generalized least squares for the profiled β̂ and σ̂².

use faer::linalg::solvers::{DenseSolveCore, Llt, Solve};
use faer::linalg::triangular_solve::{solve_lower_triangular_in_place, solve_upper_triangular_in_place};
use faer::{Mat, MatMut, MatRef, Par, Side};

use crate::error::{Error, Result};

/// Lower Cholesky factor of a correlation matrix.
#[derive(Debug, Clone)]
pub struct Factor {
    llt: Llt<f64>,
    log_det: f64,
}

impl Factor {
    /// Factorizes `r`; `None` if it is not numerically positive definite.
    pub fn new(r: MatRef<'_, f64>) -> Option<Self> {
        let llt = r.llt(Side::Lower).ok()?;
        let l = llt.L();
        let mut log_det = 0.0;
        for i in 0..l.nrows() {
            let d = l[(i, i)];
            if !(d > 0.0) || !d.is_finite() {
                return None;
            }
            log_det += d.ln();
        }
        Some(Self {
            llt,
            log_det: 2.0 * log_det,
        })
    }

    pub fn dim(&self) -> usize {
        self.llt.L().nrows()
    }

    pub fn lower(&self) -> MatRef<'_, f64> {
        self.llt.L()
    }

    /// log|R| = 2 Σ log L_ii.
    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    /// b ← L⁻¹ b
    pub fn solve_lower_in_place(&self, b: MatMut<'_, f64>) {
        solve_lower_triangular_in_place(self.llt.L(), b, Par::Seq);
    }

    /// b ← L⁻ᵀ b
    pub fn solve_lower_transpose_in_place(&self, b: MatMut<'_, f64>) {
        solve_upper_triangular_in_place(self.llt.L().transpose(), b, Par::Seq);
    }

    pub fn solve(&self, b: MatRef<'_, f64>) -> Mat<f64> {
        self.llt.solve(b)
    }

    pub fn inverse(&self) -> Mat<f64> {
        self.llt.inverse()
    }
}

pub(crate) fn column(v: &[f64]) -> Mat<f64> {
    Mat::from_fn(v.len(), 1, |i, _| v[i])
}

/// Generalized least squares on a whitened system.
#[derive(Debug, Clone)]
pub(crate) struct Gls {
    /// L⁻¹F
    pub f_white: Mat<f64>,
    /// Cholesky factor of FᵀR⁻¹F.
    pub gram: Factor,
    pub beta: Vec<f64>,
    /// L⁻¹(y − Fβ̂)
    pub resid_white: Vec<f64>,
}

pub(crate) fn gls(factor: &Factor, f: MatRef<'_, f64>, y: &[f64]) -> Result<Gls> {
    let n = factor.dim();
    let h = f.ncols();
    if f.nrows() != n || y.len() != n {
        return Err(Error::InvalidArgument(format!(
            "system of size {n} with a {}x{h} basis and {} responses",
            f.nrows(),
            y.len()
        )));
    }
    let mut f_white = f.to_owned();
    factor.solve_lower_in_place(f_white.as_mut());
    let mut y_white = column(y);
    factor.solve_lower_in_place(y_white.as_mut());

    let mut gram = Mat::<f64>::zeros(h, h);
    let mut rhs = Mat::<f64>::zeros(h, 1);
    for a in 0..h {
        let ca = f_white.col_as_slice(a);
        for b in 0..=a {
            let cb = f_white.col_as_slice(b);
            let v: f64 = ca.iter().zip(cb).map(|(p, q)| p * q).sum();
            gram[(a, b)] = v;
            gram[(b, a)] = v;
        }
        rhs[(a, 0)] = ca.iter().zip(y_white.col_as_slice(0)).map(|(p, q)| p * q).sum();
    }
    let singular = || Error::FitFailure("FᵀR⁻¹F is singular; the mean basis is not identifiable".into());
    let gram_factor = Factor::new(gram.as_ref()).ok_or_else(singular)?;
    let l = gram_factor.lower();
    for k in 0..h {
        if l[(k, k)] * l[(k, k)] <= 1e-13 * gram[(k, k)] {
            return Err(singular());
        }
    }
    let beta_m = gram_factor.solve(rhs.as_ref());
    let beta: Vec<f64> = (0..h).map(|k| beta_m[(k, 0)]).collect();

    let mut resid_white = y_white.col_as_slice(0).to_vec();
    for (k, b) in beta.iter().enumerate() {
        for (r, fw) in resid_white.iter_mut().zip(f_white.col_as_slice(k)) {
            *r -= b * fw;
        }
    }
    Ok(Gls {
        f_white,
        gram: gram_factor,
        beta,
        resid_white,
    })
}

fn factor_or_fail(r: MatRef<'_, f64>) -> Result<Factor> {
    if r.nrows() != r.ncols() {
        return Err(Error::InvalidArgument("correlation matrix must be square".into()));
    }
    Factor::new(r).ok_or_else(|| Error::FitFailure("correlation matrix is not positive definite".into()))
}

/// β̂ = (FᵀR⁻¹F)⁻¹FᵀR⁻¹y through triangular solves on the Cholesky factor.
pub fn profile_beta(r_delta: MatRef<'_, f64>, f: MatRef<'_, f64>, y: &[f64]) -> Result<Vec<f64>> {
    let factor = factor_or_fail(r_delta)?;
    Ok(gls(&factor, f, y)?.beta)
}

/// Profiled process variance; `degenerate` marks a clamped nonpositive value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sigma2 {
    pub value: f64,
    pub degenerate: bool,
}

pub(crate) const SIGMA2_FLOOR: f64 = 1e-300;

pub(crate) fn sigma2_from_white(resid_white: &[f64]) -> Sigma2 {
    let n = resid_white.len() as f64;
    let v = resid_white.iter().map(|r| r * r).sum::<f64>() / n;
    if v > SIGMA2_FLOOR {
        Sigma2 {
            value: v,
            degenerate: false,
        }
    } else {
        Sigma2 {
            value: SIGMA2_FLOOR,
            degenerate: true,
        }
    }
}

/// σ̂² = (1/n)(y − Fβ)ᵀR⁻¹(y − Fβ).
pub fn profile_sigma2(r_delta: MatRef<'_, f64>, f: MatRef<'_, f64>, y: &[f64], beta: &[f64]) -> Result<Sigma2> {
    let factor = factor_or_fail(r_delta)?;
    if f.ncols() != beta.len() || f.nrows() != y.len() {
        return Err(Error::InvalidArgument("basis, coefficients and responses disagree in size".into()));
    }
    let resid: Vec<f64> = (0..y.len())
        .map(|i| y[i] - (0..beta.len()).map(|k| f[(i, k)] * beta[k]).sum::<f64>())
        .collect();
    let mut w = column(&resid);
    factor.solve_lower_in_place(w.as_mut());
    Ok(sigma2_from_white(w.col_as_slice(0)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ones(n: usize) -> Mat<f64> {
        Mat::from_fn(n, 1, |_, _| 1.0)
    }

    #[test]
    fn identity_correlation_gives_sample_mean() {
        let y = [1.0, 4.0, -2.0, 7.0];
        let beta = profile_beta(Mat::<f64>::identity(4, 4).as_ref(), ones(4).as_ref(), &y).unwrap();
        assert!((beta[0] - 2.5).abs() < 1e-14);
    }

    #[test]
    fn identity_basis_reproduces_responses() {
        let y = [1.0, 4.0, -2.0];
        let i3 = Mat::<f64>::identity(3, 3);
        let beta = profile_beta(i3.as_ref(), i3.as_ref(), &y).unwrap();
        for (b, v) in beta.iter().zip(y) {
            assert!((b - v).abs() < 1e-14);
        }
        let s = profile_sigma2(i3.as_ref(), i3.as_ref(), &y, &beta).unwrap();
        assert!(s.degenerate && s.value <= 1e-300);
    }

    #[test]
    fn whitened_sigma2_is_mean_square_residual() {
        let y = [1.0, 4.0, -2.0, 7.0];
        let i4 = Mat::<f64>::identity(4, 4);
        let s = profile_sigma2(i4.as_ref(), ones(4).as_ref(), &y, &[2.5]).unwrap();
        let expect = (1.5f64.powi(2) + 1.5f64.powi(2) + 4.5f64.powi(2) + 4.5f64.powi(2)) / 4.0;
        assert!((s.value - expect).abs() < 1e-13 && !s.degenerate);
    }

    #[test]
    fn collinear_basis_is_a_fit_failure() {
        let f = Mat::from_fn(3, 2, |_, _| 1.0);
        let err = profile_beta(Mat::<f64>::identity(3, 3).as_ref(), f.as_ref(), &[1.0, 2.0, 3.0]);
        assert!(matches!(err, Err(Error::FitFailure(_))));
    }

    #[test]
    fn indefinite_matrix_is_rejected() {
        let r = Mat::from_fn(2, 2, |i, j| if i == j { 1.0 } else { 2.0 });
        assert!(profile_beta(r.as_ref(), ones(2).as_ref(), &[1.0, 2.0]).is_err());
    }
}
