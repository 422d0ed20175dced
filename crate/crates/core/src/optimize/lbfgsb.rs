use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::{Bounds, Objective};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LbfgsOptions {
    /// Number of stored correction pairs.
    pub memory: usize,
    pub max_iter: usize,
    /// Stop when the projected gradient's max-norm falls below this.
    pub grad_tol: f64,
    /// Stop when an accepted step lowers the objective by less than this,
    /// relative to max(|f|, 1).
    pub f_tol: f64,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        Self {
            memory: 10,
            max_iter: 500,
            grad_tol: 1e-6,
            f_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    GradientTolerance,
    FunctionTolerance,
    MaxIterations,
    LineSearchFailed,
    /// The objective was infinite at the start point.
    Infeasible,
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::GradientTolerance => "gradient-tolerance",
            Self::FunctionTolerance => "function-tolerance",
            Self::MaxIterations => "max-iterations",
            Self::LineSearchFailed => "line-search-failed",
            Self::Infeasible => "infeasible",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalResult {
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub termination: Termination,
}

const C1: f64 = 1e-4;
const C2: f64 = 0.9;

/// Central differences, stepping inward at the bounds.
pub fn finite_difference_gradient<O: Objective + ?Sized>(obj: &O, bounds: &Bounds, x: &[f64]) -> Vec<f64> {
    let mut g = vec![0.0; x.len()];
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        let h = 1e-6 * x[i].abs().max(1.0);
        let lo = (x[i] - h).max(bounds.lower()[i]);
        let hi = (x[i] + h).min(bounds.upper()[i]);
        if hi <= lo {
            continue;
        }
        probe[i] = hi;
        let fp = obj.value(&probe);
        probe[i] = lo;
        let fm = obj.value(&probe);
        probe[i] = x[i];
        if fp.is_finite() && fm.is_finite() {
            g[i] = (fp - fm) / (hi - lo);
        }
    }
    g
}

struct Counted<'a, O: ?Sized> {
    obj: &'a O,
    bounds: &'a Bounds,
    evaluations: usize,
}

impl<O: Objective + ?Sized> Counted<'_, O> {
    fn eval(&mut self, x: &[f64]) -> (f64, Vec<f64>) {
        self.evaluations += 1;
        let (f, g) = self.obj.value_and_gradient(x);
        if !f.is_finite() {
            return (f64::INFINITY, Vec::new());
        }
        let g = match g {
            Some(g) if g.iter().all(|v| v.is_finite()) => g,
            _ => finite_difference_gradient(self.obj, self.bounds, x),
        };
        (f, g)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| u * v).sum()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Components pinned at a bound with the gradient pushing outward.
fn active_set(x: &[f64], g: &[f64], bounds: &Bounds) -> Vec<bool> {
    (0..x.len())
        .map(|i| (x[i] <= bounds.lower()[i] && g[i] > 0.0) || (x[i] >= bounds.upper()[i] && g[i] < 0.0))
        .collect()
}

struct Point {
    x: Vec<f64>,
    f: f64,
    g: Vec<f64>,
}

/// Projected limited-memory BFGS on a box.
///
/// Steps that stay feasible use a strong-Wolfe line search capped at the
/// distance to the boundary; steps that would leave the box backtrack along
/// the projected path with an Armijo test. Accepted iterates never increase
/// the objective and always satisfy the bounds exactly.
pub fn minimize_bounded<O: Objective + ?Sized>(
    obj: &O,
    bounds: &Bounds,
    x0: &[f64],
    opts: &LbfgsOptions,
) -> LocalResult {
    let mut ev = Counted {
        obj,
        bounds,
        evaluations: 0,
    };
    let mut x = x0.to_vec();
    bounds.project(&mut x);
    let (mut f, mut g) = ev.eval(&x);
    let finish = |x: Vec<f64>, f: f64, iterations: usize, evaluations: usize, termination| LocalResult {
        x,
        objective: f,
        iterations,
        evaluations,
        termination,
    };
    if !f.is_finite() {
        return finish(x, f, 0, ev.evaluations, Termination::Infeasible);
    }
    let n = x.len();
    let mut hist: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();

    for iter in 0..opts.max_iter {
        let active = active_set(&x, &g, bounds);
        let pg: Vec<f64> = (0..n).map(|i| if active[i] { 0.0 } else { g[i] }).collect();
        if inf_norm(&pg) <= opts.grad_tol {
            return finish(x, f, iter, ev.evaluations, Termination::GradientTolerance);
        }

        let mut d = two_loop(&pg, &hist);
        for i in 0..n {
            d[i] = if active[i] { 0.0 } else { -d[i] };
        }
        let mut gd = dot(&g, &d);
        if !(gd < 0.0) {
            hist.clear();
            d = pg.iter().map(|v| -v).collect();
            gd = dot(&g, &d);
        }
        let alpha0 = if hist.is_empty() {
            (1.0 / inf_norm(&d)).min(1.0)
        } else {
            1.0
        };

        let alpha_max = max_feasible_step(&x, &d, bounds);
        let step = if alpha_max >= 1.0 {
            wolfe_search(&mut ev, bounds, &x, f, &d, gd, alpha0, alpha_max)
        } else {
            projected_backtracking(&mut ev, bounds, &x, f, &g, &d, alpha0)
        };
        let Some(next) = step else {
            if hist.is_empty() {
                return finish(x, f, iter, ev.evaluations, Termination::LineSearchFailed);
            }
            hist.clear();
            continue;
        };

        let s: Vec<f64> = next.x.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = next.g.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-10 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            if hist.len() == opts.memory {
                hist.pop_front();
            }
            hist.push_back((s, y, 1.0 / sy));
        }
        let decrease = f - next.f;
        let scale = f.abs().max(next.f.abs()).max(1.0);
        x = next.x;
        f = next.f;
        g = next.g;
        if decrease <= opts.f_tol * scale {
            return finish(x, f, iter + 1, ev.evaluations, Termination::FunctionTolerance);
        }
    }
    finish(x, f, opts.max_iter, ev.evaluations, Termination::MaxIterations)
}

fn two_loop(g: &[f64], hist: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut a = vec![0.0; hist.len()];
    for (k, (s, y, rho)) in hist.iter().enumerate().rev() {
        a[k] = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a[k] * yi;
        }
    }
    if let Some((s, y, _)) = hist.back() {
        let gamma = dot(s, y) / dot(y, y);
        for qi in &mut q {
            *qi *= gamma;
        }
    }
    for (k, (s, y, rho)) in hist.iter().enumerate() {
        let b = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (a[k] - b) * si;
        }
    }
    q
}

fn max_feasible_step(x: &[f64], d: &[f64], bounds: &Bounds) -> f64 {
    let mut a = f64::INFINITY;
    for i in 0..x.len() {
        if d[i] > 0.0 {
            a = a.min((bounds.upper()[i] - x[i]) / d[i]);
        } else if d[i] < 0.0 {
            a = a.min((bounds.lower()[i] - x[i]) / d[i]);
        }
    }
    a.max(0.0)
}

fn point_along<O: Objective + ?Sized>(ev: &mut Counted<'_, O>, bounds: &Bounds, x: &[f64], d: &[f64], a: f64) -> Point {
    let mut xa: Vec<f64> = x.iter().zip(d).map(|(u, v)| u + a * v).collect();
    bounds.project(&mut xa);
    let (f, g) = ev.eval(&xa);
    Point { x: xa, f, g }
}

#[allow(clippy::too_many_arguments)]
fn wolfe_search<O: Objective + ?Sized>(
    ev: &mut Counted<'_, O>,
    bounds: &Bounds,
    x: &[f64],
    f0: f64,
    d: &[f64],
    gd0: f64,
    alpha0: f64,
    alpha_max: f64,
) -> Option<Point> {
    let armijo = |a: f64, fa: f64| fa.is_finite() && fa <= f0 + C1 * a * gd0;
    let mut prev = (0.0, f0, gd0);
    let mut a = alpha0.min(alpha_max);
    for k in 0..25 {
        let p = point_along(ev, bounds, x, d, a);
        let dphi = if p.f.is_finite() { dot(&p.g, d) } else { f64::NAN };
        if !armijo(a, p.f) || (k > 0 && p.f >= prev.1) {
            return zoom(ev, bounds, x, f0, d, gd0, prev, (a, p.f, dphi), None);
        }
        if dphi.abs() <= -C2 * gd0 {
            return Some(p);
        }
        if dphi >= 0.0 {
            return zoom(ev, bounds, x, f0, d, gd0, (a, p.f, dphi), prev, Some(p));
        }
        if a >= alpha_max {
            return Some(p);
        }
        prev = (a, p.f, dphi);
        a = (2.0 * a).min(alpha_max);
    }
    None
}

/// Zoom phase; `lo` satisfies the sufficient-decrease test. `lo_point` is
/// the evaluated point at `lo` when `lo > 0`.
#[allow(clippy::too_many_arguments)]
fn zoom<O: Objective + ?Sized>(
    ev: &mut Counted<'_, O>,
    bounds: &Bounds,
    x: &[f64],
    f0: f64,
    d: &[f64],
    gd0: f64,
    mut lo: (f64, f64, f64),
    mut hi: (f64, f64, f64),
    mut lo_point: Option<Point>,
) -> Option<Point> {
    for _ in 0..30 {
        let width = hi.0 - lo.0;
        if width.abs() <= 1e-14 * lo.0.abs().max(1e-14) {
            break;
        }
        let mut a = f64::NAN;
        if hi.1.is_finite() {
            let denom = 2.0 * (hi.1 - lo.1 - lo.2 * width);
            if denom != 0.0 {
                a = lo.0 - lo.2 * width * width / denom;
            }
        }
        let (left, right) = if lo.0 < hi.0 { (lo.0, hi.0) } else { (hi.0, lo.0) };
        let guard = 0.1 * (right - left);
        if !a.is_finite() || a < left + guard || a > right - guard {
            a = 0.5 * (lo.0 + hi.0);
        }
        let p = point_along(ev, bounds, x, d, a);
        if !(p.f.is_finite() && p.f <= f0 + C1 * a * gd0) || p.f >= lo.1 {
            let dphi = if p.f.is_finite() { dot(&p.g, d) } else { f64::NAN };
            hi = (a, p.f, dphi);
        } else {
            let dphi = dot(&p.g, d);
            if dphi.abs() <= -C2 * gd0 {
                return Some(p);
            }
            if dphi * (hi.0 - lo.0) >= 0.0 {
                hi = lo;
            }
            lo = (a, p.f, dphi);
            lo_point = Some(p);
        }
    }
    // Fall back to the best sufficient-decrease point found.
    lo_point.filter(|p| p.f < f0)
}

fn projected_backtracking<O: Objective + ?Sized>(
    ev: &mut Counted<'_, O>,
    bounds: &Bounds,
    x: &[f64],
    f0: f64,
    g: &[f64],
    d: &[f64],
    alpha0: f64,
) -> Option<Point> {
    let mut a = alpha0.min(1.0);
    for _ in 0..40 {
        let p = point_along(ev, bounds, x, d, a);
        let moved: Vec<f64> = p.x.iter().zip(x).map(|(u, v)| u - v).collect();
        let slope = dot(g, &moved);
        if slope >= 0.0 && inf_norm(&moved) == 0.0 {
            return None;
        }
        if p.f.is_finite() && slope < 0.0 && p.f <= f0 + C1 * slope {
            return Some(p);
        }
        a *= 0.5;
    }
    None
}
