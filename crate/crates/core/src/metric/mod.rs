//! Carnot–Carathéodory distance with certified two-sided bounds.
//!
//! Upper bounds are lengths of explicit horizontal witness paths whose
//! endpoints are checked against the target. Lower bounds come from the
//! 1-Lipschitz abelianization, a calibrated ball-box comparison, and, for
//! three-dimensional Heisenberg algebras, the exact distance formula.

mod ladder;
mod optimizer;
mod path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::AlgebraVector;
use crate::error::{Error, Result};
use crate::group::{Group, GroupElement};
use crate::linalg::norm;
use crate::rng::task_rng;

use ladder::Ladder;
pub use optimizer::OptimizerConfig;
use optimizer::Problem;
pub use path::{ControlPath, HorizontalMetric, Segment};

/// Relative safety margin applied to the closed-form Heisenberg distance.
const CLOSED_FORM_MARGIN: f64 = 1e-10;
/// Safety factor on calibrated layer extents and on the ball-box constant.
const EXTENT_MARGIN: f64 = 1.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LowerMethod {
    /// Identical points.
    Trivial,
    /// Norm of the layer-1 displacement.
    Abelian,
    /// Calibrated ball-box comparison; certified only up to the empirical
    /// constant.
    BallBox,
    /// Exact Heisenberg distance formula.
    ClosedForm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpperMethod {
    Trivial,
    /// A single radial segment (horizontal displacement).
    Radial,
    /// Optimized piecewise-constant path, possibly with a correction tail.
    OptimizedPath,
}

/// Empirical constant `A` with `Σ_i |v_i|^{1/i} ≤ A·d(e, eᵛ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallBoxConstant {
    pub a: f64,
    pub samples: usize,
    pub seed: u64,
    /// Gauge of the calibration samples (all sampled at unit scale).
    pub radius: f64,
    /// Per-layer bound on `max|v_i| / d(e, eᵛ)ⁱ`, with a safety margin.
    /// Used to size sampling boxes.
    pub extents: Vec<f64>,
}

/// Upper bound together with its witness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpperBound {
    pub upper: f64,
    pub method: UpperMethod,
    pub witness: ControlPath,
    /// Largest coordinate error of the witness endpoint.
    pub endpoint_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceEstimate {
    pub lower: f64,
    pub lower_method: LowerMethod,
    pub upper: f64,
    pub upper_method: UpperMethod,
    pub witness: ControlPath,
    pub endpoint_residual: f64,
}

/// Flat record for JSON output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceReport {
    pub pair: [Vec<f64>; 2],
    pub lower: f64,
    pub lower_method: LowerMethod,
    pub upper: f64,
    pub witness_segments: usize,
    pub endpoint_residual: f64,
    pub seed: u64,
}

impl DistanceEstimate {
    pub fn report(&self, x: &GroupElement, y: &GroupElement, seed: u64) -> DistanceReport {
        DistanceReport {
            pair: [x.as_slice().to_vec(), y.as_slice().to_vec()],
            lower: self.lower,
            lower_method: self.lower_method,
            upper: self.upper,
            witness_segments: self.witness.len(),
            endpoint_residual: self.endpoint_residual,
            seed,
        }
    }
}

/// Parameters of a Heisenberg algebra `[e0,e1] = κ e2` seen through an
/// orthonormal frame: the vertical coordinate equals `κ/det L` times the
/// enclosed area.
#[derive(Debug, Clone, Copy)]
struct HeisenbergForm {
    area_per_z: f64,
}

/// Length of the shortest planar curve with chord `c` enclosing signed area
/// `a` against that chord: an arc of a circle.
pub fn heisenberg_distance(c: f64, a: f64) -> f64 {
    let (c, a) = (c.abs(), a.abs());
    if a == 0.0 {
        return c;
    }
    if c == 0.0 {
        return (4.0 * std::f64::consts::PI * a).sqrt();
    }
    // μ(θ) = (θ − sin θ) / (8 sin²(θ/2)) increases from 0 to ∞ on (0, 2π).
    let mu = |th: f64| {
        let num = if th < 0.1 {
            let t2 = th * th;
            th * t2 / 6.0 * (1.0 - t2 / 20.0 * (1.0 - t2 / 42.0 * (1.0 - t2 / 72.0)))
        } else {
            th - th.sin()
        };
        num / (8.0 * (th / 2.0).sin().powi(2))
    };
    let target = a / (c * c);
    let (mut lo, mut hi) = (0.0_f64, 2.0 * std::f64::consts::PI);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if mu(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let th = 0.5 * (lo + hi);
    let half = th / 2.0;
    if half < 1e-8 {
        c * (1.0 + half * half / 6.0)
    } else if th < std::f64::consts::PI {
        c * half / half.sin()
    } else {
        // Near a full circle the chord is tiny; use the radius from the area.
        th * (2.0 * a / (th - th.sin())).sqrt()
    }
}

/// A graded group with a left-invariant sub-Riemannian metric.
#[derive(Debug, Clone)]
pub struct CcSpace {
    group: Group,
    metric: HorizontalMetric,
    config: OptimizerConfig,
    ladder: Ladder,
    /// `G`-orthonormal frame of layer 1.
    frame: Vec<Vec<f64>>,
    /// Layer-1 frame completed by the unit basis of the higher layers.
    full_frame: Vec<Vec<f64>>,
    heisenberg: Option<HeisenbergForm>,
    ballbox: Option<BallBoxConstant>,
}

impl CcSpace {
    /// Fails with [`Error::Unreachable`] when layer 1 does not generate.
    pub fn new(group: Group, metric: HorizontalMetric) -> Result<Self> {
        let alg = group.algebra();
        let d1 = alg.horizontal_dim();
        if metric.dim() != d1 {
            return Err(Error::DimensionMismatch { expected: d1, got: metric.dim() });
        }
        let ladder = Ladder::new(alg)?;
        let n = alg.dim();
        let frame = metric.orthonormal_frame(n);
        let mut full_frame = frame.clone();
        for i in d1..n {
            full_frame.push(AlgebraVector::basis(n, i).into_vec());
        }
        let heisenberg = (alg.layer_dims() == [2, 1] && alg.constant(0, 1, 2) != 0.0)
            .then(|| HeisenbergForm { area_per_z: metric.sqrt_det() / alg.constant(0, 1, 2) });
        Ok(Self { group, metric, config: OptimizerConfig::default(), ladder, frame, full_frame, heisenberg, ballbox: None })
    }

    /// Euclidean horizontal metric in the declared basis.
    pub fn standard(group: Group) -> Result<Self> {
        let d1 = group.algebra().horizontal_dim();
        Self::new(group, HorizontalMetric::euclidean(d1))
    }

    pub fn with_config(mut self, config: OptimizerConfig) -> Self {
        self.config = config;
        self
    }

    pub fn with_ballbox(mut self, c: BallBoxConstant) -> Self {
        self.ballbox = Some(c);
        self
    }

    pub fn group(&self) -> &Group {
        &self.group
    }

    pub fn metric(&self) -> &HorizontalMetric {
        &self.metric
    }

    pub fn config(&self) -> &OptimizerConfig {
        &self.config
    }

    pub fn ballbox(&self) -> Option<&BallBoxConstant> {
        self.ballbox.as_ref()
    }

    /// True when the exact Heisenberg formula supplies the lower bound.
    pub fn has_closed_form(&self) -> bool {
        self.heisenberg.is_some()
    }

    pub(crate) fn displacement(&self, x: &GroupElement, y: &GroupElement) -> Result<Vec<f64>> {
        Ok(self.group.difference(x, y)?.coords.into_vec())
    }

    /// Layer norms of a displacement: `G`-norm on layer 1, Euclidean above.
    pub(crate) fn layer_norms(&self, p: &[f64]) -> Vec<f64> {
        let alg = self.group.algebra();
        (1..=alg.step())
            .map(|i| if i == 1 { self.metric.norm(p) } else { norm(&p[alg.layer_range(i)]) })
            .collect()
    }

    /// Homogeneous gauge `Σ_i |p_i|^{1/i}`.
    pub(crate) fn gauge(&self, p: &[f64]) -> f64 {
        self.layer_norms(p).iter().enumerate().map(|(k, v)| v.powf(1.0 / (k + 1) as f64)).sum()
    }

    pub fn path_endpoint(&self, path: &ControlPath) -> Result<GroupElement> {
        path.endpoint(&self.group)
    }

    /// `|π₁(x⁻¹y)|`: exact lower bound since abelianization is 1-Lipschitz.
    pub fn cc_lower_abelian(&self, x: &GroupElement, y: &GroupElement) -> Result<f64> {
        Ok(self.metric.norm(&self.displacement(x, y)?))
    }

    /// `(1/A) Σ_i |π_i(x⁻¹y)|^{1/i}`.
    pub fn cc_lower_ballbox(&self, x: &GroupElement, y: &GroupElement, c: &BallBoxConstant) -> Result<f64> {
        Ok(self.gauge(&self.displacement(x, y)?) / c.a)
    }

    fn closed_form(&self, p: &[f64]) -> Option<f64> {
        let h = self.heisenberg?;
        let w = self.metric.to_frame(&p[..2]);
        Some(heisenberg_distance(norm(&w), p[2] * h.area_per_z) * (1.0 - CLOSED_FORM_MARGIN))
    }

    pub(crate) fn lower_of(&self, p: &[f64]) -> (f64, LowerMethod) {
        let mut best = (0.0, LowerMethod::Trivial);
        let mut offer = |v: f64, m: LowerMethod| {
            if v > best.0 {
                best = (v, m);
            }
        };
        offer(self.metric.norm(p), LowerMethod::Abelian);
        if let Some(c) = &self.ballbox {
            offer(self.gauge(p) / c.a, LowerMethod::BallBox);
        }
        if let Some(v) = self.closed_form(p) {
            offer(v, LowerMethod::ClosedForm);
        }
        best
    }

    /// Best available lower bound and the method that produced it.
    pub fn lower(&self, x: &GroupElement, y: &GroupElement) -> Result<(f64, LowerMethod)> {
        Ok(self.lower_of(&self.displacement(x, y)?))
    }

    /// Certified upper bound with a witness path from `x` to `y`.
    pub fn cc_upper(&self, x: &GroupElement, y: &GroupElement) -> Result<UpperBound> {
        self.cc_upper_below(x, y, None)
    }

    /// As [`CcSpace::cc_upper`], but stops as soon as a witness no longer
    /// than `stop_below` is found. Used for ball membership.
    pub fn cc_upper_below(&self, x: &GroupElement, y: &GroupElement, stop_below: Option<f64>) -> Result<UpperBound> {
        let mut p = self.displacement(x, y)?;
        // Higher-layer coordinates at the rounding level of the product are
        // noise; dropping them lets exact horizontal displacements stay radial.
        let big = x.as_slice().iter().chain(y.as_slice()).fold(1.0f64, |m, c| m.max(c.abs()));
        let floor = 16.0 * f64::EPSILON * big.powi(self.group.degree() as i32);
        let d1 = self.group.algebra().horizontal_dim();
        for c in &mut p[d1..] {
            if c.abs() <= floor {
                *c = 0.0;
            }
        }
        let mut ub = self.upper_from_identity(&p, stop_below)?;
        ub.witness.basepoint = x.clone();
        let end = ub.witness.endpoint(&self.group)?;
        ub.endpoint_residual = max_abs_diff(end.as_slice(), y.as_slice());
        Ok(ub)
    }

    pub(crate) fn upper_from_identity(&self, p: &[f64], stop_below: Option<f64>) -> Result<UpperBound> {
        let id = self.group.identity();
        if p.iter().all(|&c| c == 0.0) {
            return Ok(UpperBound { upper: 0.0, method: UpperMethod::Trivial, witness: ControlPath::empty(id), endpoint_residual: 0.0 });
        }
        let d1 = self.group.algebra().horizontal_dim();
        if p[d1..].iter().all(|&c| c == 0.0) {
            let witness = ControlPath::new(id, vec![Segment::new(1.0, p.to_vec())]);
            let upper = witness.length(&self.group, &self.metric)?;
            return Ok(UpperBound { upper, method: UpperMethod::Radial, witness, endpoint_residual: 0.0 });
        }
        let segments = self.optimize(p, &self.frame, stop_below, |target| self.ladder.path(&self.group, target))?;
        let witness = ControlPath::new(id, segments);
        let upper = witness.length(&self.group, &self.metric)?;
        let end = witness.endpoint(&self.group)?;
        let residual = max_abs_diff(end.as_slice(), p);
        if residual > self.config.endpoint_tol {
            return Err(Error::Optimizer { residual, length: upper, best: Box::new(witness) });
        }
        Ok(UpperBound { upper, method: UpperMethod::OptimizedPath, witness, endpoint_residual: residual })
    }

    /// Frame coordinates of the deterministic first start.
    fn initial_weights(&self, p: &[f64], frame: &[Vec<f64>], m: usize) -> Vec<f64> {
        let alg = self.group.algebra();
        let d1 = alg.horizontal_dim();
        let d = frame.len();
        let mut base = self.metric.to_frame(&p[..d1]);
        if d > d1 {
            // Full frame: the straight segment e^{sp} already reaches p.
            base.extend_from_slice(&p[d1..]);
            return (0..m).flat_map(|_| base.clone()).collect();
        }
        let higher: f64 = self.layer_norms(p).iter().enumerate().skip(1).map(|(k, v)| v.powf(1.0 / (k + 1) as f64)).sum();
        let rho = higher / std::f64::consts::PI.sqrt();
        let mut orient = 1.0;
        if d >= 2 && alg.step() >= 2 {
            let b = alg.bracket_vec(&frame[0], &frame[1]);
            let r2 = alg.layer_range(2);
            if crate::linalg::dot(&b[r2.clone()], &p[r2]) < 0.0 {
                orient = -1.0;
            }
        }
        let mut w = Vec::with_capacity(m * d);
        for j in 0..m {
            let th = 2.0 * std::f64::consts::PI * (j as f64 + 0.5) / m as f64;
            let mut wj = base.clone();
            if d >= 2 {
                wj[0] += -2.0 * std::f64::consts::PI * rho * th.sin();
                wj[1] += orient * 2.0 * std::f64::consts::PI * rho * th.cos();
            }
            w.extend(wj);
        }
        w
    }

    /// Multi-start search over segment counts; the returned segments reach
    /// `p` up to a correction tail produced by `repair`.
    fn optimize(
        &self,
        p: &[f64],
        frame: &[Vec<f64>],
        stop_below: Option<f64>,
        repair: impl Fn(&[f64]) -> Vec<Segment>,
    ) -> Result<Vec<Segment>> {
        let cfg = &self.config;
        let problem = Problem { group: &self.group, frame, target: p };
        let scale = (self.gauge(p) + 1e-12) / (frame.len() as f64).sqrt();
        let mut best: Option<optimizer::Local> = None;
        let mut m = cfg.segments.max(2);
        loop {
            for start in 0..cfg.starts.max(1) {
                let w0 = if start == 0 {
                    self.initial_weights(p, frame, m)
                } else {
                    let mut rng = task_rng(cfg.seed, (m * 1000 + start) as u64);
                    let mut w = problem.random_start(m, scale, &mut rng);
                    let base = self.initial_weights(p, frame, m);
                    for (a, b) in w.iter_mut().zip(&base) {
                        *a += b;
                    }
                    w
                };
                if let Some(local) = problem.solve(w0, m, cfg, stop_below) {
                    let better = best.as_ref().is_none_or(|b| local.length < b.length);
                    if better {
                        best = Some(local);
                    }
                    if let (Some(limit), Some(b)) = (stop_below, &best) {
                        if b.length <= limit {
                            break;
                        }
                    }
                }
            }
            if best.is_some() || m * 2 > cfg.max_segments {
                break;
            }
            m *= 2;
        }
        let Some(local) = best else {
            // Nothing converged: the commutator ladder is always feasible.
            return Ok(repair(p));
        };
        let tau = 1.0 / local.m as f64;
        let mut segments: Vec<Segment> = local.controls.into_iter().map(|a| Segment::new(tau, a)).collect();
        let mut reached = vec![0.0; p.len()];
        for s in &segments {
            reached = self.group.mul_vec(&reached, &s.increment());
        }
        let neg: Vec<f64> = reached.iter().map(|c| -c).collect();
        let defect = self.group.mul_vec(&neg, p);
        if defect.iter().any(|&c| c != 0.0) {
            segments.extend(repair(&defect));
        }
        Ok(segments)
    }

    /// `n · e^{tv}` for horizontal `v`.
    pub fn radial_geodesic(&self, n: &GroupElement, v: &AlgebraVector, t: f64) -> Result<GroupElement> {
        let alg = self.group.algebra();
        alg.check_dim(v)?;
        if !alg.is_horizontal(v) {
            let layer = (2..=alg.step()).find(|&i| alg.project(v, i).norm() > 0.0).unwrap_or(2);
            return Err(Error::NotHorizontal { layer, norm: alg.project(v, layer).norm() });
        }
        self.group.bch(n, &GroupElement::new(v.scaled(t)))
    }

    /// Both bounds and the upper-bound witness.
    pub fn estimate(&self, x: &GroupElement, y: &GroupElement) -> Result<DistanceEstimate> {
        let (lower, lower_method) = self.lower(x, y)?;
        let ub = self.cc_upper(x, y)?;
        Ok(DistanceEstimate {
            lower: lower.min(ub.upper),
            lower_method,
            upper: ub.upper,
            upper_method: ub.method,
            witness: ub.witness,
            endpoint_residual: ub.endpoint_residual,
        })
    }

    /// Upper bound on the distance of the left-invariant Riemannian metric
    /// that extends `G` by an orthonormal unit basis on the higher layers.
    /// Computed by the same path optimizer with all directions allowed, so it
    /// is approximate to optimizer tolerance.
    pub fn riemannian_distance(&self, x: &GroupElement, y: &GroupElement) -> Result<f64> {
        let p = self.displacement(x, y)?;
        if p.iter().all(|&c| c == 0.0) {
            return Ok(0.0);
        }
        let direct = |target: &[f64]| vec![Segment::new(1.0, target.to_vec())];
        let segments = self.optimize(&p, &self.full_frame, None, direct)?;
        Ok(segments.iter().map(|s| s.duration * self.full_norm(s.control.as_slice())).sum())
    }

    fn full_norm(&self, v: &[f64]) -> f64 {
        let d1 = self.group.algebra().horizontal_dim();
        (self.metric.inner(v, v) + v[d1..].iter().map(|c| c * c).sum::<f64>()).sqrt()
    }

    /// Calibrates the ball-box constant on `samples` random unit-gauge
    /// displacements. Dilation invariance of the ratio makes unit scale
    /// sufficient.
    pub fn calibrate_ballbox(&self, samples: usize, seed: u64) -> Result<BallBoxConstant> {
        if samples < 100 {
            return Err(Error::Input(format!("ball-box calibration needs at least 100 samples, got {samples}")));
        }
        let alg = self.group.algebra();
        let n = alg.dim();
        let step = alg.step();
        let results: Vec<std::result::Result<(f64, Vec<f64>), usize>> = (0..samples)
            .into_par_iter()
            .map(|k| {
                let mut rng = task_rng(seed, k as u64);
                let raw: Vec<f64> = (0..n).map(|_| rand::Rng::sample::<f64, _>(&mut rng, rand_distr::StandardNormal)).collect();
                let g = self.gauge(&raw);
                let v = alg.dilate_coords(1.0 / g, &raw);
                let ub = self.upper_from_identity(&v, None).map_err(|_| k)?;
                let d = ub.upper;
                let layers: Vec<f64> = (1..=step)
                    .map(|i| v[alg.layer_range(i)].iter().fold(0.0_f64, |m, c| m.max(c.abs())) / d.powi(i as i32))
                    .collect();
                Ok((self.gauge(&v) / d, layers))
            })
            .collect();
        let failed: Vec<usize> = results.iter().filter_map(|r| r.as_ref().err().copied()).collect();
        if !failed.is_empty() {
            return Err(Error::Calibration { failed });
        }
        let mut a = 1.0_f64;
        let mut extents = vec![0.0_f64; step];
        for (ratio, layers) in results.into_iter().flatten() {
            a = a.max(ratio);
            for (e, l) in extents.iter_mut().zip(layers) {
                *e = e.max(l);
            }
        }
        extents[0] = 1.0;
        for e in extents.iter_mut().skip(1) {
            *e *= EXTENT_MARGIN;
        }
        // Sampled ratios use upper bounds on d, so they undershoot the true
        // supremum; pad unless the group is abelian, where d is the gauge.
        if step > 1 {
            a *= EXTENT_MARGIN;
        }
        Ok(BallBoxConstant { a, samples, seed, radius: 1.0, extents })
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
}
