//! Difference quotients of distances along horizontal directions.
//!
//! For a distance `d` that is Lipschitz with respect to `d_cc`, the lower and
//! upper derivates at `x` in direction `v` are the `lim inf` / `lim sup` as
//! `t → 0` of `d(y, y·h_t eᵛ)/t` over `y ∈ B(x, t)`. Limits are not
//! computable, so each `t` on a decreasing grid gets the sampled inf and sup,
//! and the limits are estimated by a linear fit over the small-`t` tail.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::AlgebraVector;
use crate::error::{Error, Result};
use crate::group::GroupElement;
use crate::linalg::{self, norm};
use crate::measure::linear_fit;
use crate::metric::{CcSpace, OptimizerConfig};
use crate::rng::task_rng;

/// Smallest `t` accepted on a derivate grid.
pub const MIN_T: f64 = 1e-5;

/// A distance with a declared Lipschitz constant with respect to `d_cc`.
pub trait LipschitzDistance: Sync {
    fn name(&self) -> String;
    fn lipschitz(&self) -> f64;
    fn distance(&self, x: &GroupElement, y: &GroupElement) -> Result<f64>;
}

/// `d_cc` itself, evaluated by its certified upper bound.
pub struct CcDistance<'a> {
    pub space: &'a CcSpace,
}

impl LipschitzDistance for CcDistance<'_> {
    fn name(&self) -> String {
        "cc".into()
    }
    fn lipschitz(&self) -> f64 {
        1.0
    }
    fn distance(&self, x: &GroupElement, y: &GroupElement) -> Result<f64> {
        Ok(self.space.cc_upper(x, y)?.upper)
    }
}

/// Distance of the left-invariant Riemannian completion. Horizontal curves
/// have equal length in both metrics, so it is 1-Lipschitz. Approximate to
/// optimizer tolerance.
pub struct RiemannianDistance<'a> {
    pub space: &'a CcSpace,
}

impl LipschitzDistance for RiemannianDistance<'_> {
    fn name(&self) -> String {
        "riemannian".into()
    }
    fn lipschitz(&self) -> f64 {
        1.0
    }
    fn distance(&self, x: &GroupElement, y: &GroupElement) -> Result<f64> {
        self.space.riemannian_distance(x, y)
    }
}

/// `d_cc^α` for `0 < α < 1`. A metric, but not Lipschitz: small pairs
/// violate any declared constant.
pub struct SnowflakeDistance<'a> {
    pub space: &'a CcSpace,
    pub exponent: f64,
    pub declared: f64,
}

impl LipschitzDistance for SnowflakeDistance<'_> {
    fn name(&self) -> String {
        format!("snowflake-{}", self.exponent)
    }
    fn lipschitz(&self) -> f64 {
        self.declared
    }
    fn distance(&self, x: &GroupElement, y: &GroupElement) -> Result<f64> {
        Ok(self.space.cc_upper(x, y)?.upper.powf(self.exponent))
    }
}

/// `scale·|π₁(x⁻¹y)|`, pulled back from the abelianization. Lipschitz with
/// constant `scale`; declaring less exercises the violation path.
pub struct AbelianDistance<'a> {
    pub space: &'a CcSpace,
    pub scale: f64,
    pub declared: f64,
}

impl LipschitzDistance for AbelianDistance<'_> {
    fn name(&self) -> String {
        format!("abelian-{}", self.scale)
    }
    fn lipschitz(&self) -> f64 {
        self.declared
    }
    fn distance(&self, x: &GroupElement, y: &GroupElement) -> Result<f64> {
        Ok(self.scale * self.space.cc_lower_abelian(x, y)?)
    }
}

/// Names accepted by [`catalog_distance`].
pub const CATALOG: &[&str] = &["cc", "riemannian", "snowflake", "abelian"];

/// Built-in distances by name. `snowflake` uses exponent ½ and declares
/// `L = 1`; `abelian` uses scale 2 and declares `L = 1`, so both trip the
/// Lipschitz check.
pub fn catalog_distance<'a>(name: &str, space: &'a CcSpace) -> Result<Box<dyn LipschitzDistance + 'a>> {
    Ok(match name {
        "cc" => Box::new(CcDistance { space }),
        "riemannian" => Box::new(RiemannianDistance { space }),
        "snowflake" => Box::new(SnowflakeDistance { space, exponent: 0.5, declared: 1.0 }),
        "abelian" => Box::new(AbelianDistance { space, scale: 2.0, declared: 1.0 }),
        _ => return Err(Error::Input(format!("unknown distance '{name}' (expected one of {})", CATALOG.join(", ")))),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuotientRow {
    pub t: f64,
    pub inf_quotient: f64,
    pub sup_quotient: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    pub intercept: f64,
    pub slope: f64,
    pub stderr: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivateEstimate {
    pub distance: String,
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    pub rows: Vec<QuotientRow>,
    pub rho_lower: f64,
    pub rho_upper: f64,
    pub lower_fit: TailFit,
    pub upper_fit: TailFit,
}

/// Linear fit `q(t) = ρ + b t` over the smallest-`t` half of the grid.
fn tail_fit(ts: &[f64], qs: &[f64]) -> TailFit {
    let k = ts.len();
    let take = if k <= 3 { k } else { (k / 2).max(3) };
    // Grid is decreasing: the tail is the end.
    let xs = &ts[k - take..];
    let ys = &qs[k - take..];
    if take < 2 {
        return TailFit { intercept: ys[0], slope: 0.0, stderr: 0.0, points: take };
    }
    let (b, a, _) = linear_fit(xs, ys);
    let resid: f64 = xs.iter().zip(ys).map(|(x, y)| (y - a - b * x).powi(2)).sum();
    let stderr = if take > 2 {
        let mx = xs.iter().sum::<f64>() / take as f64;
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        let s2 = resid / (take - 2) as f64;
        (s2 * (1.0 / take as f64 + mx * mx / sxx.max(1e-300))).sqrt()
    } else {
        0.0
    };
    TailFit { intercept: a, slope: b, stderr, points: take }
}

fn check_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.is_empty() {
        return Err(Error::Input("empty t grid".into()));
    }
    if t_grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Input("t grid must be strictly decreasing".into()));
    }
    let last = *t_grid.last().unwrap();
    if last < MIN_T {
        return Err(Error::Input(format!("smallest t {last} is below the noise floor {MIN_T}")));
    }
    Ok(())
}

fn check_horizontal(space: &CcSpace, v: &[f64]) -> Result<()> {
    let alg = space.group().algebra();
    if v.len() != alg.dim() {
        return Err(Error::DimensionMismatch { expected: alg.dim(), got: v.len() });
    }
    let av = AlgebraVector::from(v);
    if !alg.is_horizontal(&av) {
        let layer = (2..=alg.step()).find(|&i| alg.project(&av, i).norm() > 0.0).unwrap_or(2);
        return Err(Error::NotHorizontal { layer, norm: alg.project(&av, layer).norm() });
    }
    Ok(())
}

/// Uniform samples of the unit ball `B(e, 1)` by rejection in the
/// calibrated enclosing box; a point is kept only if a witness of length
/// ≤ 1 certifies membership.
pub fn unit_ball_samples(space: &CcSpace, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let c = space.ballbox().ok_or_else(|| Error::Input("ball-box calibration missing".into()))?;
    let alg = space.group().algebra();
    let d1 = alg.horizontal_dim();
    let gram = space.metric().gram();
    let half: Vec<f64> = (0..alg.dim())
        .map(|i| {
            if i < d1 {
                let mut e = vec![0.0; d1];
                e[i] = 1.0;
                linalg::spd_solve(gram, d1, &e).expect("metric is positive definite")[i].sqrt()
            } else {
                c.extents[alg.weight(i) - 1]
            }
        })
        .collect();
    let batch = (count * 4).max(64);
    let mut out = Vec::with_capacity(count);
    let mut round = 0u64;
    while out.len() < count {
        if round > 200 {
            return Err(Error::Calibration { failed: vec![out.len()] });
        }
        let got: Vec<Option<Vec<f64>>> = (0..batch)
            .into_par_iter()
            .map(|k| {
                let mut rng = task_rng(seed, round * batch as u64 + k as u64);
                let p: Vec<f64> = half.iter().map(|&h| rng.random_range(-h..h)).collect();
                if space.lower_of(&p).0 > 1.0 {
                    return None;
                }
                match space.upper_from_identity(&p, Some(1.0)) {
                    Ok(ub) if ub.upper <= 1.0 => Some(p),
                    _ => None,
                }
            })
            .collect();
        out.extend(got.into_iter().flatten().take(count - out.len()));
        round += 1;
    }
    Ok(out)
}

/// Per-`t` inf and sup of `d(y, y·h_t eᵛ)/t` over `y ∈ B(x, t)`.
///
/// The ball samples are `y = x·h_t(q)` for one fixed set of unit-ball points
/// `q`, so all `t` share random numbers.
pub fn derivate(
    d: &dyn LipschitzDistance,
    space: &CcSpace,
    x: &GroupElement,
    v: &[f64],
    t_grid: &[f64],
    samples_per_t: usize,
    seed: u64,
) -> Result<DerivateEstimate> {
    check_grid(t_grid)?;
    check_horizontal(space, v)?;
    space.group().algebra().check_dim(&x.coords)?;
    if samples_per_t == 0 {
        return Err(Error::Input("samples per t must be positive".into()));
    }
    let group = space.group();
    let alg = group.algebra();
    let unit = unit_ball_samples(space, samples_per_t, seed)?;
    let speed = space.metric().norm(v);
    let mut rows = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let step = GroupElement::new(v.iter().map(|c| c * t).collect::<Vec<_>>());
        let quotients: Vec<Result<f64>> = unit
            .par_iter()
            .map(|q| {
                let y = group.bch(x, &GroupElement::new(alg.dilate_coords(t, q)))?;
                let z = group.bch(&y, &step)?;
                let value = d.distance(&y, &z)?;
                let bound = d.lipschitz() * t * speed;
                if value > bound * (1.0 + 1e-9) + 1e-12 {
                    return Err(Error::LipschitzViolation {
                        value,
                        bound,
                        pair: format!("{:?} -> {:?}", y.as_slice(), z.as_slice()),
                    });
                }
                Ok(value / t)
            })
            .collect();
        let quotients = quotients.into_iter().collect::<Result<Vec<f64>>>()?;
        let inf = quotients.iter().copied().fold(f64::INFINITY, f64::min);
        let sup = quotients.iter().copied().fold(0.0, f64::max);
        rows.push(QuotientRow { t, inf_quotient: inf, sup_quotient: sup, samples: quotients.len() });
    }
    let ts: Vec<f64> = rows.iter().map(|r| r.t).collect();
    let lower_fit = tail_fit(&ts, &rows.iter().map(|r| r.inf_quotient).collect::<Vec<_>>());
    let upper_fit = tail_fit(&ts, &rows.iter().map(|r| r.sup_quotient).collect::<Vec<_>>());
    Ok(DerivateEstimate {
        distance: d.name(),
        x: x.as_slice().to_vec(),
        v: v.to_vec(),
        rho_lower: lower_fit.intercept.max(0.0),
        rho_upper: upper_fit.intercept.max(0.0),
        rows,
        lower_fit,
        upper_fit,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomogeneityRow {
    pub tau: f64,
    pub rho_lower: f64,
    pub rho_upper: f64,
    /// `|τ|·ρ(x, v)` from the base estimate.
    pub expected_lower: f64,
    pub expected_upper: f64,
    pub residual: f64,
    /// `residual / (|τ|·|v|)`, or 0 when `τ = 0`.
    pub relative: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomogeneityReport {
    pub base: DerivateEstimate,
    pub rows: Vec<HomogeneityRow>,
    /// `|ρ(x, −v) − ρ(x, v)|` when `τ = −1` is on the grid.
    pub symmetry_residual: Option<f64>,
}

/// Compares estimates at `τv` against `|τ|` times the estimate at `v`.
pub fn check_homogeneity(base: &DerivateEstimate, scaled: &[(f64, DerivateEstimate)], speed: f64) -> HomogeneityReport {
    let mut symmetry_residual = None;
    let rows = scaled
        .iter()
        .map(|(tau, est)| {
            let el = tau.abs() * base.rho_lower;
            let eu = tau.abs() * base.rho_upper;
            let residual = (est.rho_lower - el).abs().max((est.rho_upper - eu).abs());
            if *tau == -1.0 {
                symmetry_residual = Some(residual);
            }
            let scale = tau.abs() * speed;
            HomogeneityRow {
                tau: *tau,
                rho_lower: est.rho_lower,
                rho_upper: est.rho_upper,
                expected_lower: el,
                expected_upper: eu,
                residual,
                relative: if scale > 0.0 { residual / scale } else { 0.0 },
            }
        })
        .collect();
    HomogeneityReport { base: base.clone(), rows, symmetry_residual }
}

/// Runs [`derivate`] at `v` and every `τv` with the same seed.
#[allow(clippy::too_many_arguments)]
pub fn homogeneity(
    d: &dyn LipschitzDistance,
    space: &CcSpace,
    x: &GroupElement,
    v: &[f64],
    taus: &[f64],
    t_grid: &[f64],
    samples_per_t: usize,
    seed: u64,
) -> Result<HomogeneityReport> {
    let base = derivate(d, space, x, v, t_grid, samples_per_t, seed)?;
    let mut scaled = Vec::with_capacity(taus.len());
    for &tau in taus {
        let tv: Vec<f64> = v.iter().map(|c| c * tau).collect();
        scaled.push((tau, derivate(d, space, x, &tv, t_grid, samples_per_t, seed)?));
    }
    Ok(check_homogeneity(&base, &scaled, space.metric().norm(v)))
}

pub fn derivate_csv(est: &DerivateEstimate) -> String {
    crate::report::csv(&est.rows)
}

// ---- End and Box ---------------------------------------------------------

fn ball_volume_unit(k: usize) -> f64 {
    match k {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * std::f64::consts::PI / k as f64 * ball_volume_unit(k - 2),
    }
}

/// `G`-orthonormal basis of the `G`-orthogonal complement of `u` in layer 1,
/// as full algebra vectors.
fn perp_basis(space: &CcSpace, u: &[f64]) -> Vec<Vec<f64>> {
    let n = space.group().dim();
    let frame = space.metric().orthonormal_frame(n);
    let d1 = frame.len();
    let a = space.metric().to_frame(&u[..d1]);
    let an = norm(&a);
    let mut basis: Vec<Vec<f64>> = vec![a.iter().map(|c| c / an).collect()];
    for k in 0..d1 {
        let mut e = vec![0.0; d1];
        e[k] = 1.0;
        for b in &basis {
            let p = linalg::dot(&e, b);
            linalg::axpy(-p, b, &mut e);
        }
        let en = norm(&e);
        if en > 1e-8 {
            basis.push(e.iter().map(|c| c / en).collect());
        }
        if basis.len() == d1 {
            break;
        }
    }
    basis[1..]
        .iter()
        .map(|b| {
            let mut v = vec![0.0; n];
            for (k, f) in frame.iter().enumerate() {
                linalg::axpy(b[k], f, &mut v);
            }
            v
        })
        .collect()
}

fn check_box_args(space: &CcSpace, u: &[f64], eps: f64) -> Result<()> {
    check_horizontal(space, u)?;
    if space.metric().norm(u) == 0.0 {
        return Err(Error::Input("box direction must be nonzero".into()));
    }
    if !(eps > 0.0) {
        return Err(Error::Input(format!("epsilon must be positive, got {eps}")));
    }
    Ok(())
}

/// Lebesgue volume of `Box(e, u, ε) = {e^w e^{su} : e^w ∈ End(e, u, ε), s ∈ [0,1]}`.
///
/// The map `(w, s) ↦ log(e^w e^{su})` is block unipotent over layer 1, so its
/// Jacobian determinant is the constant `|det[F_⊥ | u]|` on layer-1
/// coordinates.
pub fn box_volume(space: &CcSpace, u: &[f64], eps: f64) -> Result<f64> {
    check_box_args(space, u, eps)?;
    let alg = space.group().algebra();
    let d1 = alg.horizontal_dim();
    let perp = perp_basis(space, u);
    let mut m = vec![0.0; d1 * d1];
    for r in 0..d1 {
        for (c, f) in perp.iter().enumerate() {
            m[r * d1 + c] = f[r];
        }
        m[r * d1 + d1 - 1] = u[r];
    }
    let jac = linalg::determinant(&m, d1).abs();
    let mut vol = ball_volume_unit(d1 - 1) * eps.powi(d1 as i32 - 1);
    for i in 2..=alg.step() {
        let k = alg.layer_dims()[i - 1];
        vol *= ball_volume_unit(k) * eps.powi((i * k) as i32);
    }
    Ok(vol * jac)
}

/// Membership in `Box(e, u, ε)`.
pub fn in_box(space: &CcSpace, u: &[f64], eps: f64, p: &[f64]) -> Result<bool> {
    check_box_args(space, u, eps)?;
    let metric = space.metric();
    let sigma = metric.inner(p, u) / metric.inner(u, u);
    if !(0.0..=1.0).contains(&sigma) {
        return Ok(false);
    }
    let back = GroupElement::new(u.iter().map(|c| -c * sigma).collect::<Vec<_>>());
    let w = space.group().bch(&GroupElement::new(p.to_vec()), &back)?;
    let norms = space.layer_norms(w.as_slice());
    Ok(norms.iter().enumerate().all(|(k, &nv)| nv < eps.powi(k as i32 + 1)))
}

/// A uniform point of the parameter set of `End(e, u, 1)`: layer 1 in the
/// unit ball of `u^⊥`, each higher layer in its Euclidean unit ball.
fn unit_end_sample<R: Rng>(space: &CcSpace, perp: &[Vec<f64>], rng: &mut R) -> Vec<f64> {
    let alg = space.group().algebra();
    let n = alg.dim();
    let mut w = vec![0.0; n];
    let ball = |k: usize, rng: &mut R| -> Vec<f64> {
        if k == 0 {
            return Vec::new();
        }
        let g: Vec<f64> = (0..k).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let gn = norm(&g).max(1e-300);
        let r = rng.random::<f64>().powf(1.0 / k as f64);
        g.iter().map(|c| c * r / gn).collect()
    };
    let b = ball(perp.len(), rng);
    for (c, f) in b.iter().zip(perp) {
        linalg::axpy(*c, f, &mut w);
    }
    for i in 2..=alg.step() {
        let range = alg.layer_range(i);
        let b = ball(range.len(), rng);
        for (idx, c) in range.zip(b) {
            w[idx] = c;
        }
    }
    w
}

/// A point of `End(e, u, ε)` given a unit sample: layer `j` scaled by `εʲ`.
fn scale_end(space: &CcSpace, unit: &[f64], eps: f64) -> Vec<f64> {
    space.group().algebra().dilate_coords(eps, unit)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpreadRow {
    pub epsilon: f64,
    pub t: f64,
    pub sup: f64,
    pub sup_over_t: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpreadReport {
    pub v: Vec<f64>,
    pub rows: Vec<SpreadRow>,
    /// Per `ε`: mean of `sup/t` over the `t` grid.
    pub c_eps: Vec<(f64, f64)>,
    /// Per `ε`: `max(sup/t) / min(sup/t) − 1`.
    pub t_spread: Vec<(f64, f64)>,
    pub linear_within_10pct: bool,
    /// `C(ε)` strictly decreases as `ε` decreases.
    pub decreasing: bool,
}

/// Sup over `z ∈ End(y, tv, tε)` of `d_cc(y·h_t eᵛ, z·h_t eᵛ)`.
///
/// By left invariance `y = e`; the sampled End points are shared across the
/// whole `(ε, t)` grid.
pub fn spread_estimate(space: &CcSpace, v: &[f64], eps_grid: &[f64], t_grid: &[f64], samples: usize, seed: u64) -> Result<SpreadReport> {
    check_box_args(space, v, 1.0)?;
    if samples == 0 || eps_grid.is_empty() || t_grid.is_empty() {
        return Err(Error::Input("spread needs samples and non-empty ε and t grids".into()));
    }
    if eps_grid.iter().chain(t_grid).any(|&x| !(x > 0.0)) {
        return Err(Error::Input("ε and t values must be positive".into()));
    }
    let group = space.group();
    let perp = perp_basis(space, v);
    let units: Vec<Vec<f64>> = (0..samples)
        .map(|k| unit_end_sample(space, &perp, &mut task_rng(seed, k as u64)))
        .collect();
    let mut rows = Vec::new();
    for &eps in eps_grid {
        for &t in t_grid {
            let tv = GroupElement::new(v.iter().map(|c| c * t).collect::<Vec<_>>());
            let dists: Vec<Result<f64>> = units
                .par_iter()
                .map(|u| {
                    let z = GroupElement::new(scale_end(space, u, t * eps));
                    let moved = group.bch(&z, &tv)?;
                    Ok(space.cc_upper(&tv, &moved)?.upper)
                })
                .collect();
            let dists = dists.into_iter().collect::<Result<Vec<f64>>>()?;
            let sup = dists.iter().copied().fold(0.0, f64::max);
            rows.push(SpreadRow { epsilon: eps, t, sup, sup_over_t: sup / t, samples });
        }
    }
    let mut c_eps = Vec::new();
    let mut t_spread = Vec::new();
    for &eps in eps_grid {
        let vals: Vec<f64> = rows.iter().filter(|r| r.epsilon == eps).map(|r| r.sup_over_t).collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().copied().fold(0.0, f64::max);
        c_eps.push((eps, mean));
        t_spread.push((eps, if lo > 0.0 { hi / lo - 1.0 } else { f64::INFINITY }));
    }
    let linear_within_10pct = t_spread.iter().all(|(_, s)| *s <= 0.10);
    let mut by_eps = c_eps.clone();
    by_eps.sort_by(|a, b| b.0.total_cmp(&a.0));
    let decreasing = by_eps.windows(2).all(|w| w[1].1 < w[0].1);
    Ok(SpreadReport { v: v.to_vec(), rows, c_eps, t_spread, linear_within_10pct, decreasing })
}

/// Budget used by the labs for bulk distance evaluations.
pub fn lab_config(seed: u64) -> OptimizerConfig {
    OptimizerConfig { seed, ..OptimizerConfig::fast() }
}
