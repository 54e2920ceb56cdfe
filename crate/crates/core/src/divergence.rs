//! Divergence of radial-geodesic pairs.
//!
//! For `γ₁(t) = h_t eᵛ` and `γ₂(t) = eʷ h_t eᵛ` the distance
//! `f(t) = d_cc(γ₁(t), γ₂(t))` equals `d_cc(e, h_t e^{−v} · eʷ · h_t eᵛ)` by left
//! invariance. In a Carnot group with `[v, w] ≠ 0` it grows like a power
//! strictly between 0 and 1, whereas geodesic pairs in the model spaces of
//! constant curvature either stay bounded or separate linearly.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::AlgebraVector;
use crate::error::{Error, Result};
use crate::group::GroupElement;
use crate::linalg::{dot, norm};
use crate::measure::linear_fit;
use crate::metric::CcSpace;

/// Geometric grid `lo, lo·r, lo·r², …` up to `hi` inclusive (within 1e-9).
pub fn geometric_grid(lo: f64, hi: f64, ratio: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut k = 0;
    loop {
        let t = lo * ratio.powi(k);
        if t > hi * (1.0 + 1e-9) {
            break;
        }
        out.push(t);
        k += 1;
    }
    out
}

/// The default grid: ratio `√2` from 1 to `tmax`.
pub fn default_grid(tmax: f64) -> Vec<f64> {
    geometric_grid(1.0, tmax, std::f64::consts::SQRT_2)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeodesicPair {
    pub v: Vec<f64>,
    pub w: Vec<f64>,
    pub t_grid: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceRow {
    pub t: f64,
    pub f_lower: f64,
    pub f_upper: f64,
    /// `false` when the optimizer failed at this `t`; such rows carry NaN
    /// bounds and are left out of the fit.
    pub complete: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sandwich {
    pub alpha: f64,
    pub beta: f64,
    pub c1: f64,
    pub c2: f64,
    /// `C1 t^α ≤ f_lower(t)` and `f_upper(t) ≤ C2 t^β` on every complete row.
    pub holds: bool,
    /// `0 < α < exponent < β < 1`.
    pub strictly_sublinear: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceFit {
    pub label: String,
    pub rows: Vec<DivergenceRow>,
    pub exponent: f64,
    pub exponent_stderr: f64,
    pub sandwich: Sandwich,
    pub complete: bool,
    /// `f_upper` is nondecreasing along the grid.
    pub upper_monotone: bool,
}

/// Half-width floor for the `(α, β)` window around the fitted exponent.
pub const SANDWICH_HALF_WIDTH: f64 = 0.05;

/// Log-log fit of the bracket midpoints and the sandwich around it.
fn fit_rows(label: String, rows: Vec<DivergenceRow>) -> DivergenceFit {
    let good: Vec<&DivergenceRow> = rows.iter().filter(|r| r.complete && r.f_upper > 0.0).collect();
    let complete = rows.iter().all(|r| r.complete);
    let (exponent, stderr) = if good.len() >= 2 {
        let xs: Vec<f64> = good.iter().map(|r| r.t.abs().ln()).collect();
        let ys: Vec<f64> = good.iter().map(|r| (0.5 * (r.f_lower + r.f_upper)).max(1e-300).ln()).collect();
        let (slope, intercept, _) = linear_fit(&xs, &ys);
        let k = xs.len();
        let se = if k > 2 {
            let mx = xs.iter().sum::<f64>() / k as f64;
            let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
            let resid: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
            (resid / (k - 2) as f64 / sxx.max(1e-300)).sqrt()
        } else {
            0.0
        };
        (slope, se)
    } else {
        (f64::NAN, f64::NAN)
    };
    let half = SANDWICH_HALF_WIDTH.max(3.0 * stderr);
    let alpha = exponent - half;
    let beta = exponent + half;
    let c1 = good.iter().map(|r| r.f_lower / r.t.abs().powf(alpha)).fold(f64::INFINITY, f64::min);
    let c2 = good.iter().map(|r| r.f_upper / r.t.abs().powf(beta)).fold(0.0, f64::max);
    let holds = !good.is_empty()
        && good.iter().all(|r| {
            let t = r.t.abs();
            c1 * t.powf(alpha) <= r.f_lower * (1.0 + 1e-12) && r.f_upper <= c2 * t.powf(beta) * (1.0 + 1e-12)
        });
    let strictly_sublinear = holds && c1 > 0.0 && 0.0 < alpha && alpha < exponent && exponent < beta && beta < 1.0;
    let upper_monotone = good.windows(2).all(|w| w[1].f_upper >= w[0].f_upper);
    DivergenceFit {
        label,
        rows,
        exponent,
        exponent_stderr: stderr,
        sandwich: Sandwich { alpha, beta, c1, c2, holds, strictly_sublinear },
        complete,
        upper_monotone,
    }
}

/// `log(h_t e^{−v} · eʷ · h_t eᵛ)`.
pub fn displacement(space: &CcSpace, v: &[f64], w: &[f64], t: f64) -> Result<GroupElement> {
    let g = space.group();
    let alg = g.algebra();
    let neg: Vec<f64> = v.iter().map(|c| -c).collect();
    let a = GroupElement::new(alg.dilate_coords(t, &neg));
    let b = GroupElement::new(alg.dilate_coords(t, v));
    g.bch(&g.bch(&a, &GroupElement::new(w.to_vec()))?, &b)
}

/// Bracketed `f(t)` on the pair's grid, then the fit.
pub fn divergence_profile(space: &CcSpace, pair: &GeodesicPair) -> Result<DivergenceFit> {
    let alg = space.group().algebra();
    if pair.v.len() != alg.dim() || pair.w.len() != alg.dim() {
        return Err(Error::DimensionMismatch { expected: alg.dim(), got: pair.v.len().min(pair.w.len()) });
    }
    let v = AlgebraVector::from(pair.v.as_slice());
    if !alg.is_horizontal(&v) {
        let layer = (2..=alg.step()).find(|&i| alg.project(&v, i).norm() > 0.0).unwrap_or(2);
        return Err(Error::NotHorizontal { layer, norm: alg.project(&v, layer).norm() });
    }
    if pair.t_grid.is_empty() || pair.t_grid.iter().any(|t| !(t.abs() >= 1.0) || !t.is_finite()) {
        return Err(Error::Input("divergence t grid must be non-empty with |t| ≥ 1".into()));
    }
    let id = space.group().identity();
    let rows: Vec<Result<DivergenceRow>> = pair
        .t_grid
        .par_iter()
        .map(|&t| {
            let p = displacement(space, &pair.v, &pair.w, t)?;
            let (lower, _) = space.lower(&id, &p)?;
            match space.cc_upper(&id, &p) {
                Ok(ub) => Ok(DivergenceRow { t, f_lower: lower.min(ub.upper), f_upper: ub.upper, complete: true }),
                Err(e) if !e.is_input() => Ok(DivergenceRow { t, f_lower: f64::NAN, f_upper: f64::NAN, complete: false }),
                Err(e) => Err(e),
            }
        })
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(fit_rows(space.group().algebra().name().to_string(), rows))
}

/// Simply connected model surfaces of constant curvature, and flat `ℝⁿ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ModelSpace {
    Euclidean { dim: usize },
    Hyperbolic { curvature: f64 },
    Sphere { curvature: f64 },
}

/// Unit-speed geodesic `γ(s)` given by a point and a direction.
///
/// Euclidean lines use plain coordinates. On the curved surfaces points live
/// in `ℝ³` (the hyperboloid `⟨p,p⟩_L = −1` or the unit sphere, rescaled to the
/// curvature); a 2-vector base is mapped by the exponential map at the pole
/// `(0, 0, 1)` and the direction is projected to the tangent plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelLine {
    pub base: Vec<f64>,
    pub dir: Vec<f64>,
}

impl ModelLine {
    pub fn new(base: Vec<f64>, dir: Vec<f64>) -> Self {
        Self { base, dir }
    }
}

fn lorentz(a: &[f64], b: &[f64]) -> f64 {
    a[0] * b[0] + a[1] * b[1] - a[2] * b[2]
}

impl ModelSpace {
    pub fn name(&self) -> String {
        match self {
            ModelSpace::Euclidean { dim } => format!("euclidean-{dim}"),
            ModelSpace::Hyperbolic { curvature } => format!("hyperbolic-{curvature}"),
            ModelSpace::Sphere { curvature } => format!("sphere-{curvature}"),
        }
    }

    fn check(&self) -> Result<()> {
        match *self {
            ModelSpace::Euclidean { dim } if dim == 0 => Err(Error::Input("Euclidean model needs dim ≥ 1".into())),
            ModelSpace::Hyperbolic { curvature } if !(curvature < 0.0) => Err(Error::Input("hyperbolic curvature must be negative".into())),
            ModelSpace::Sphere { curvature } if !(curvature > 0.0) => Err(Error::Input("sphere curvature must be positive".into())),
            _ => Ok(()),
        }
    }

    /// Normalized `(point, unit tangent)` for a line.
    fn frame(&self, line: &ModelLine) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check()?;
        match *self {
            ModelSpace::Euclidean { dim } => {
                if line.base.len() != dim || line.dir.len() != dim {
                    return Err(Error::DimensionMismatch { expected: dim, got: line.base.len() });
                }
                let n = norm(&line.dir);
                if n == 0.0 {
                    return Err(Error::Input("line direction must be nonzero".into()));
                }
                Ok((line.base.clone(), line.dir.iter().map(|c| c / n).collect()))
            }
            ModelSpace::Hyperbolic { .. } | ModelSpace::Sphere { .. } => {
                let hyperbolic = matches!(self, ModelSpace::Hyperbolic { .. });
                let p = match line.base.len() {
                    2 => {
                        let r = norm(&line.base);
                        let (s, c) = if hyperbolic { (r.sinh(), r.cosh()) } else { (r.sin(), r.cos()) };
                        let k = if r > 0.0 { s / r } else { 1.0 };
                        vec![k * line.base[0], k * line.base[1], c]
                    }
                    3 => line.base.clone(),
                    got => return Err(Error::DimensionMismatch { expected: 3, got }),
                };
                let pp = if hyperbolic { lorentz(&p, &p) } else { dot(&p, &p) };
                let target = if hyperbolic { -1.0 } else { 1.0 };
                if (pp - target).abs() > 1e-9 || (hyperbolic && p[2] <= 0.0) {
                    return Err(Error::Input("line base is not on the model surface".into()));
                }
                let mut u = match line.dir.len() {
                    2 => vec![line.dir[0], line.dir[1], 0.0],
                    3 => line.dir.clone(),
                    got => return Err(Error::DimensionMismatch { expected: 3, got }),
                };
                // Tangent projection: u − ⟨u,p⟩ p / ⟨p,p⟩.
                let up = if hyperbolic { lorentz(&u, &p) } else { dot(&u, &p) };
                for (ui, pi) in u.iter_mut().zip(&p) {
                    *ui -= up / pp * pi;
                }
                let un = if hyperbolic { lorentz(&u, &u) } else { dot(&u, &u) };
                if !(un > 1e-24) {
                    return Err(Error::Input("line direction has no tangent component".into()));
                }
                let un = un.sqrt();
                Ok((p, u.iter().map(|c| c / un).collect()))
            }
        }
    }

    /// Point at arclength `s`, in the model's coordinates.
    fn point(&self, frame: &(Vec<f64>, Vec<f64>), s: f64) -> Vec<f64> {
        let (p, u) = frame;
        match *self {
            ModelSpace::Euclidean { .. } => p.iter().zip(u).map(|(a, b)| a + s * b).collect(),
            ModelSpace::Hyperbolic { curvature } => {
                let x = s * (-curvature).sqrt();
                p.iter().zip(u).map(|(a, b)| x.cosh() * a + x.sinh() * b).collect()
            }
            ModelSpace::Sphere { curvature } => {
                let x = s * curvature.sqrt();
                p.iter().zip(u).map(|(a, b)| x.cos() * a + x.sin() * b).collect()
            }
        }
    }

    /// Closed-form distance between two points of the model.
    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            ModelSpace::Euclidean { .. } => norm(&a.iter().zip(b).map(|(x, y)| x - y).collect::<Vec<_>>()),
            ModelSpace::Hyperbolic { curvature } => {
                // Stable for nearby points: 2 asinh(|a − b|_L / 2).
                let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
                let q = lorentz(&d, &d).max(0.0).sqrt();
                2.0 * (q / 2.0).asinh() / (-curvature).sqrt()
            }
            ModelSpace::Sphere { curvature } => {
                let d = norm(&a.iter().zip(b).map(|(x, y)| x - y).collect::<Vec<_>>());
                2.0 * (d / 2.0).min(1.0).asin() / curvature.sqrt()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Growth {
    Bounded,
    Linear,
    /// Neither bounded nor linear on the grid.
    Other,
}

/// Threshold on the tail slope of `f` separating bounded from linear growth.
pub const LINEAR_THRESHOLD: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFit {
    pub model: ModelSpace,
    pub fit: DivergenceFit,
    pub tail_slope: f64,
    pub growth: Growth,
}

/// Exact `d(γ₁(t), γ₂(t))` for two model geodesics, classified by the tail.
///
/// The tail is the part of the grid with `t ≥ t_max/4` (at least three
/// points). Linear: tail slope above [`LINEAR_THRESHOLD`] and within 10% of
/// `f(t_max)/t_max`. Bounded: tail slope at most the threshold, or the tail
/// never exceeds 1.1 times the maximum before it.
pub fn model_divergence(model: ModelSpace, line1: &ModelLine, line2: &ModelLine, t_grid: &[f64]) -> Result<ModelFit> {
    if t_grid.len() < 3 || t_grid.windows(2).any(|w| w[1] <= w[0]) || t_grid[0] <= 0.0 {
        return Err(Error::Input("model grid must be increasing, positive, with at least 3 points".into()));
    }
    let f1 = model.frame(line1)?;
    let f2 = model.frame(line2)?;
    let rows: Vec<DivergenceRow> = t_grid
        .iter()
        .map(|&t| {
            let d = model.distance(&model.point(&f1, t), &model.point(&f2, t));
            DivergenceRow { t, f_lower: d, f_upper: d, complete: true }
        })
        .collect();
    let t_max = *t_grid.last().unwrap();
    let mut start = t_grid.iter().position(|&t| t >= t_max / 4.0).unwrap();
    start = start.min(t_grid.len() - 3);
    let ts: Vec<f64> = rows[start..].iter().map(|r| r.t).collect();
    let fs: Vec<f64> = rows[start..].iter().map(|r| r.f_upper).collect();
    let (slope, _, _) = linear_fit(&ts, &fs);
    let last = fs.last().unwrap() / t_max;
    let head_max = rows[..start].iter().map(|r| r.f_upper).fold(0.0, f64::max);
    let tail_max = fs.iter().copied().fold(0.0, f64::max);
    let growth = if slope > LINEAR_THRESHOLD && (slope - last).abs() <= 0.1 * slope.max(last) {
        Growth::Linear
    } else if slope <= LINEAR_THRESHOLD || (start > 0 && tail_max <= 1.1 * head_max) {
        Growth::Bounded
    } else {
        Growth::Other
    };
    let fit = fit_rows(model.name(), rows);
    Ok(ModelFit { model, fit, tail_slope: slope, growth })
}

/// Margin keeping the Carnot exponent away from 0 and 1.
pub const EXPONENT_MARGIN: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObstructionReport {
    pub verdict: String,
    pub carnot_label: String,
    pub carnot_exponent: f64,
    pub carnot_complete: bool,
    pub margin: f64,
    pub models: Vec<(String, Growth)>,
    pub diagnostics: Vec<String>,
}

pub const WITNESSED: &str = "obstruction witnessed";
pub const INCONCLUSIVE: &str = "inconclusive";

/// Compares a Carnot profile against model-space fits. An empirical witness,
/// not a proof.
pub fn obstruction_report(carnot: &DivergenceFit, models: &[ModelFit]) -> ObstructionReport {
    let mut diagnostics = Vec::new();
    if !carnot.complete {
        diagnostics.push("carnot profile is incomplete".to_string());
    }
    let p = carnot.exponent;
    if !(p > EXPONENT_MARGIN && p < 1.0 - EXPONENT_MARGIN) {
        diagnostics.push(format!("carnot exponent {p:.4} is not inside ({EXPONENT_MARGIN}, {})", 1.0 - EXPONENT_MARGIN));
    }
    if models.is_empty() {
        diagnostics.push("no model fits given".to_string());
    }
    for m in models {
        if m.growth == Growth::Other {
            diagnostics.push(format!("model {} is neither bounded nor linear", m.fit.label));
        }
    }
    let verdict = if diagnostics.is_empty() { WITNESSED } else { INCONCLUSIVE };
    ObstructionReport {
        verdict: verdict.to_string(),
        carnot_label: carnot.label.clone(),
        carnot_exponent: p,
        carnot_complete: carnot.complete,
        margin: EXPONENT_MARGIN,
        models: models.iter().map(|m| (m.fit.label.clone(), m.growth)).collect(),
        diagnostics,
    }
}

/// The Euclidean pairs used as the default comparison: parallel lines at
/// offset 1 and lines through the origin at angle `π/3`.
pub fn euclidean_reference(t_grid: &[f64]) -> Result<Vec<ModelFit>> {
    let plane = ModelSpace::Euclidean { dim: 2 };
    let (s, c) = (std::f64::consts::FRAC_PI_3).sin_cos();
    Ok(vec![
        model_divergence(plane, &ModelLine::new(vec![0.0, 0.0], vec![1.0, 0.0]), &ModelLine::new(vec![0.0, 1.0], vec![1.0, 0.0]), t_grid)?,
        model_divergence(plane, &ModelLine::new(vec![0.0, 0.0], vec![1.0, 0.0]), &ModelLine::new(vec![0.0, 0.0], vec![c, s]), t_grid)?,
    ])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CsvRow<'a> {
    t: f64,
    f_lower: f64,
    f_upper: f64,
    model: &'a str,
}

/// `(t, f_lower, f_upper, model)` rows for a Carnot profile and any models.
pub fn profile_csv(carnot: Option<&DivergenceFit>, models: &[ModelFit]) -> String {
    let mut rows = Vec::new();
    for fit in carnot.into_iter().chain(models.iter().map(|m| &m.fit)) {
        for r in &fit.rows {
            rows.push(CsvRow { t: r.t, f_lower: r.f_lower, f_upper: r.f_upper, model: &fit.label });
        }
    }
    crate::report::csv(&rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::Group;
    use crate::metric::OptimizerConfig;

    fn heis() -> CcSpace {
        CcSpace::standard(Group::heisenberg()).unwrap().with_config(OptimizerConfig::fast())
    }

    #[test]
    fn grid_shape() {
        let g = default_grid(128.0);
        assert_eq!(g.len(), 15);
        assert!((g[14] - 128.0).abs() < 1e-9);
    }

    #[test]
    fn heisenberg_displacement_closed_form() {
        let s = heis();
        for t in [1.0, 3.5, -2.0, 100.0] {
            let p = displacement(&s, &[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], t).unwrap();
            // w + t[w, v] with [Y, X] = −Z.
            assert_eq!(p.as_slice(), &[0.0, 1.0, -t]);
        }
    }

    #[test]
    fn reduction_orders_agree() {
        let s = CcSpace::standard(Group::engel()).unwrap();
        let g = s.group();
        let v = [0.3, -0.7, 0.0, 0.0];
        let w = [0.2, 0.5, -0.4, 0.9];
        for t in [1.0, 2.5, 7.0] {
            let a = displacement(&s, &v, &w, t).unwrap();
            let g1 = GroupElement::new(g.algebra().dilate_coords(t, &v));
            let g2 = g.bch(&GroupElement::new(w.to_vec()), &g1).unwrap();
            let b = g.difference(&g1, &g2).unwrap();
            let scale = a.as_slice().iter().fold(1.0f64, |m, c| m.max(c.abs()));
            for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
                assert!((x - y).abs() <= 1e-10 * scale, "{a:?} vs {b:?}");
            }
        }
    }

    #[test]
    fn heisenberg_exponent_is_half() {
        let s = heis();
        let pair = GeodesicPair { v: vec![1.0, 0.0, 0.0], w: vec![0.0, 1.0, 0.0], t_grid: default_grid(64.0) };
        let fit = divergence_profile(&s, &pair).unwrap();
        assert!(fit.complete);
        assert!((fit.exponent - 0.5).abs() < 0.1, "{}", fit.exponent);
        assert!(fit.sandwich.holds && fit.sandwich.strictly_sublinear, "{:?}", fit.sandwich);
        assert!(fit.upper_monotone);
        for r in &fit.rows {
            assert!(r.f_lower <= r.f_upper);
        }
    }

    #[test]
    fn commuting_pair_is_bounded() {
        let s = heis();
        let pair = GeodesicPair { v: vec![1.0, 0.0, 0.0], w: vec![2.0, 0.0, 0.0], t_grid: default_grid(32.0) };
        let fit = divergence_profile(&s, &pair).unwrap();
        assert!(fit.exponent.abs() <= 0.05, "{}", fit.exponent);
        assert!(!fit.sandwich.strictly_sublinear);
        let ab = CcSpace::standard(Group::abelian(2)).unwrap();
        let pair = GeodesicPair { v: vec![1.0, 0.0], w: vec![0.0, 3.0], t_grid: default_grid(32.0) };
        let fit = divergence_profile(&ab, &pair).unwrap();
        assert!(fit.rows.iter().all(|r| (r.f_upper - 3.0).abs() < 1e-12));
        let rep = obstruction_report(&fit, &euclidean_reference(&default_grid(32.0)).unwrap());
        assert_eq!(rep.verdict, INCONCLUSIVE);
    }

    #[test]
    fn profile_input_errors() {
        let s = heis();
        let bad = GeodesicPair { v: vec![1.0, 0.0, 0.0], w: vec![0.0, 1.0, 0.0], t_grid: vec![0.5, 2.0] };
        assert!(divergence_profile(&s, &bad).unwrap_err().is_input());
        let vert = GeodesicPair { v: vec![0.0, 0.0, 1.0], w: vec![0.0, 1.0, 0.0], t_grid: vec![1.0] };
        assert!(matches!(divergence_profile(&s, &vert), Err(Error::NotHorizontal { .. })));
    }

    #[test]
    fn euclidean_models() {
        let grid = default_grid(128.0);
        let fits = euclidean_reference(&grid).unwrap();
        assert_eq!(fits[0].growth, Growth::Bounded);
        assert!(fits[0].fit.rows.iter().all(|r| (r.f_upper - 1.0).abs() < 1e-12));
        assert_eq!(fits[1].growth, Growth::Linear);
        assert!((fits[1].tail_slope - 1.0).abs() < 1e-9);
        let space = ModelSpace::Euclidean { dim: 3 };
        let skew = model_divergence(
            space,
            &ModelLine::new(vec![0.0; 3], vec![1.0, 0.0, 0.0]),
            &ModelLine::new(vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]),
            &grid,
        )
        .unwrap();
        assert_eq!(skew.growth, Growth::Linear);
        for r in &skew.fit.rows {
            assert!((r.f_upper - (2.0 * r.t * r.t + 1.0).sqrt()).abs() < 1e-9);
        }
    }

    #[test]
    fn curved_models() {
        let grid = geometric_grid(1.0, 16.0, std::f64::consts::SQRT_2);
        let h = ModelSpace::Hyperbolic { curvature: -1.0 };
        let o = ModelLine::new(vec![0.0, 0.0], vec![1.0, 0.0]);
        let diverging = model_divergence(h, &o, &ModelLine::new(vec![0.0, 0.0], vec![0.0, 1.0]), &grid).unwrap();
        assert_eq!(diverging.growth, Growth::Linear);
        assert!((diverging.tail_slope - 2.0).abs() < 0.05, "{}", diverging.tail_slope);
        let same = model_divergence(h, &o, &o, &grid).unwrap();
        assert_eq!(same.growth, Growth::Bounded);
        let sphere = ModelSpace::Sphere { curvature: 1.0 };
        let orbit = model_divergence(sphere, &o, &ModelLine::new(vec![0.0, 0.0], vec![0.0, 1.0]), &default_grid(128.0)).unwrap();
        assert_eq!(orbit.growth, Growth::Bounded);
        assert!(orbit.fit.rows.iter().all(|r| r.f_upper <= std::f64::consts::PI + 1e-12));
        assert!(ModelSpace::Sphere { curvature: -1.0 }.frame(&o).is_err());
    }

    #[test]
    fn model_distance_is_a_metric() {
        let h = ModelSpace::Hyperbolic { curvature: -0.5 };
        let line = ModelLine::new(vec![0.3, -0.2], vec![0.4, 1.0]);
        let f = h.frame(&line).unwrap();
        let pts: Vec<Vec<f64>> = [-1.0, 0.5, 2.0].iter().map(|&s| h.point(&f, s)).collect();
        // Points on one geodesic: distances add.
        let d01 = h.distance(&pts[0], &pts[1]);
        let d12 = h.distance(&pts[1], &pts[2]);
        let d02 = h.distance(&pts[0], &pts[2]);
        assert!((d01 - 1.5).abs() < 1e-9 && (d12 - 1.5).abs() < 1e-9 && (d02 - 3.0).abs() < 1e-9);
        assert_eq!(h.distance(&pts[0], &pts[0]), 0.0);
    }

    #[test]
    fn verdicts() {
        let s = heis();
        let grid = default_grid(32.0);
        let pair = GeodesicPair { v: vec![1.0, 0.0, 0.0], w: vec![0.0, 1.0, 0.0], t_grid: grid.clone() };
        let fit = divergence_profile(&s, &pair).unwrap();
        let models = euclidean_reference(&grid).unwrap();
        assert_eq!(obstruction_report(&fit, &models).verdict, WITNESSED);
        let mut broken = fit.clone();
        broken.complete = false;
        assert_eq!(obstruction_report(&broken, &models).verdict, INCONCLUSIVE);
        let csv = profile_csv(Some(&fit), &models);
        assert!(csv.starts_with("t,f_lower,f_upper,model\n"));
        assert_eq!(csv.lines().count(), 1 + 3 * grid.len());
    }
}
