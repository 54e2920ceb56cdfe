//! Volume growth of CC balls and the homogeneous dimension.
//!
//! Volumes are Lebesgue measure in exponential coordinates, which is a Haar
//! measure for nilpotent groups. Ball membership is decided by the certified
//! upper bound, so estimates lean towards exclusion; the fraction of samples
//! whose bounds straddle the radius is reported as `band`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::GradedAlgebra;
use crate::error::{Error, Result};
use crate::linalg;
use crate::metric::CcSpace;
use crate::rng::{derive_seed, task_rng};

/// `Q = Σ i·dim Vⁱ`.
pub fn homogeneous_dimension(alg: &GradedAlgebra) -> usize {
    alg.homogeneous_dimension()
}

/// Determinant of the coordinate Jacobian of the dilation `h_t`.
pub fn dilation_jacobian_det(alg: &GradedAlgebra, t: f64) -> f64 {
    alg.weights().iter().map(|&w| t.powi(w as i32)).product()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeEstimate {
    pub radius: f64,
    pub volume: f64,
    pub stderr: f64,
    pub samples: usize,
    pub seed: u64,
    /// Samples counted inside the ball.
    pub inside: usize,
    /// Samples with `lower ≤ r < upper`, as a fraction of `inside`.
    pub band: f64,
}

/// CSV row layout.
#[derive(Debug, Clone, Serialize)]
struct VolumeRow {
    radius: f64,
    volume: f64,
    stderr: f64,
    samples: usize,
    seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub r_min: f64,
    pub r_max: f64,
}

/// Half-widths of a coordinate box containing `B(e, r)`.
fn enclosing_box(space: &CcSpace, r: f64) -> Result<Vec<f64>> {
    let c = space.ballbox().ok_or_else(|| Error::Input("ball-box calibration missing".into()))?;
    let alg = space.group().algebra();
    let d1 = alg.horizontal_dim();
    // |u_k| ≤ r·√(G⁻¹)_kk on the G-ball of radius r.
    let gram = space.metric().gram();
    let mut half = Vec::with_capacity(alg.dim());
    for k in 0..d1 {
        let mut e = vec![0.0; d1];
        e[k] = 1.0;
        let col = linalg::spd_solve(gram, d1, &e).expect("metric is positive definite");
        half.push(r * col[k].sqrt());
    }
    for i in d1..alg.dim() {
        let w = alg.weight(i);
        half.push(c.extents[w - 1] * r.powi(w as i32));
    }
    Ok(half)
}

/// Monte-Carlo volume of `B(e, r)` from `samples` uniform points in an
/// enclosing box.
pub fn ball_volume(space: &CcSpace, r: f64, samples: usize, seed: u64) -> Result<VolumeEstimate> {
    if samples == 0 {
        return Err(Error::Input("sample budget must be positive".into()));
    }
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::Input(format!("radius must be positive, got {r}")));
    }
    let half = enclosing_box(space, r)?;
    let box_volume: f64 = half.iter().map(|h| 2.0 * h).product();
    // (inside, straddling)
    let counts: (usize, usize) = (0..samples)
        .into_par_iter()
        .map(|k| {
            let mut rng = task_rng(seed, k as u64);
            let p: Vec<f64> = half.iter().map(|&h| rng.random_range(-h..h)).collect();
            let (lower, _) = space.lower_of(&p);
            if lower > r {
                return (0, 0);
            }
            match space.upper_from_identity(&p, Some(r)) {
                Ok(ub) if ub.upper <= r => (1, 0),
                _ => (0, 1),
            }
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    let frac = counts.0 as f64 / samples as f64;
    Ok(VolumeEstimate {
        radius: r,
        volume: box_volume * frac,
        stderr: box_volume * (frac * (1.0 - frac) / samples as f64).sqrt(),
        samples,
        seed,
        inside: counts.0,
        band: if counts.0 > 0 { counts.1 as f64 / counts.0 as f64 } else { 0.0 },
    })
}

/// Volumes at several radii, each with its own derived seed.
pub fn volume_sweep(space: &CcSpace, radii: &[f64], samples: usize, seed: u64) -> Result<Vec<VolumeEstimate>> {
    radii.iter().enumerate().map(|(k, &r)| ball_volume(space, r, samples, derive_seed(seed, k as u64))).collect()
}

/// Least-squares fit of `log V = slope·log r + intercept`.
pub fn fit_dimension(estimates: &[VolumeEstimate]) -> Result<DimensionFit> {
    if estimates.len() < 3 {
        return Err(Error::Input(format!("dimension fit needs at least 3 radii, got {}", estimates.len())));
    }
    let r_min = estimates.iter().map(|e| e.radius).fold(f64::INFINITY, f64::min);
    let r_max = estimates.iter().map(|e| e.radius).fold(0.0, f64::max);
    if r_max < 4.0 * r_min {
        return Err(Error::Input(format!("radii must span a factor of at least 4, got {r_min}..{r_max}")));
    }
    if let Some(e) = estimates.iter().find(|e| e.volume <= 0.0) {
        return Err(Error::Input(format!("zero volume estimate at radius {}", e.radius)));
    }
    let xs: Vec<f64> = estimates.iter().map(|e| e.radius.ln()).collect();
    let ys: Vec<f64> = estimates.iter().map(|e| e.volume.ln()).collect();
    let (slope, intercept, r_squared) = linear_fit(&xs, &ys);
    Ok(DimensionFit { slope, intercept, r_squared, r_min, r_max })
}

/// Ordinary least squares `y ≈ a·x + b`, returning `(a, b, R²)`.
pub(crate) fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let a = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let b = my - a * mx;
    let r2 = if syy > 0.0 { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) } else { 1.0 };
    (a, b, r2)
}

/// Sweep CSV with the fit as a JSON footer.
pub fn volume_csv(estimates: &[VolumeEstimate], fit: Option<&DimensionFit>) -> String {
    let rows: Vec<VolumeRow> = estimates
        .iter()
        .map(|e| VolumeRow { radius: e.radius, volume: e.volume, stderr: e.stderr, samples: e.samples, seed: e.seed })
        .collect();
    match fit {
        Some(f) => crate::report::csv_with_footer(&rows, &[("dimension_fit", f)]),
        None => crate::report::csv(&rows),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityRow {
    pub t: f64,
    pub box_volume: f64,
    pub ball_volume: f64,
    pub ball_stderr: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityReport {
    pub beta: f64,
    /// Radius factor: balls have radius `t·R`.
    pub radius_factor: f64,
    pub rows: Vec<DensityRow>,
    pub min_ratio: f64,
    pub max_ratio: f64,
}

/// `vol Box(y, tv, tβ) / vol B(y, tR)` over `t_values`. The box volume is
/// exact; the ball volume is Monte-Carlo. Both sides are left invariant, so
/// `y` is the identity. `radius_factor` defaults to `|v| + 2β`.
pub fn box_ball_density(
    space: &CcSpace,
    v: &[f64],
    beta: f64,
    radius_factor: Option<f64>,
    t_values: &[f64],
    samples: usize,
    seed: u64,
) -> Result<DensityReport> {
    let big_r = radius_factor.unwrap_or(space.metric().norm(v) + 2.0 * beta);
    let mut rows = Vec::with_capacity(t_values.len());
    for (k, &t) in t_values.iter().enumerate() {
        let tv: Vec<f64> = v.iter().map(|c| c * t).collect();
        let box_volume = crate::derivate::box_volume(space, &tv, t * beta)?;
        let ball = ball_volume(space, t * big_r, samples, derive_seed(seed, k as u64))?;
        rows.push(DensityRow { t, box_volume, ball_volume: ball.volume, ball_stderr: ball.stderr, ratio: box_volume / ball.volume });
    }
    let min_ratio = rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    let max_ratio = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    Ok(DensityReport { beta, radius_factor: big_r, rows, min_ratio, max_ratio })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::Group;
    use crate::metric::{BallBoxConstant, OptimizerConfig};

    fn flat(n: usize) -> CcSpace {
        let s = CcSpace::standard(Group::abelian(n)).unwrap();
        let c = s.calibrate_ballbox(100, 0).unwrap();
        s.with_ballbox(c)
    }

    #[test]
    fn homogeneous_dimensions() {
        assert_eq!(homogeneous_dimension(&GradedAlgebra::heisenberg()), 4);
        assert_eq!(homogeneous_dimension(&GradedAlgebra::abelian(5)), 5);
        assert_eq!(homogeneous_dimension(&GradedAlgebra::engel()), 7);
        assert_eq!(dilation_jacobian_det(&GradedAlgebra::heisenberg(), 2.0), 16.0);
        assert_eq!(dilation_jacobian_det(&GradedAlgebra::engel(), 2.0), 128.0);
    }

    #[test]
    fn euclidean_disc() {
        let est = ball_volume(&flat(2), 1.0, 20_000, 5).unwrap();
        assert!((est.volume - std::f64::consts::PI).abs() <= 3.0 * est.stderr, "{est:?}");
        assert_eq!(est.band, 0.0);
    }

    #[test]
    fn flat_dimension_fit() {
        let s = flat(3);
        let est = volume_sweep(&s, &[0.5, 0.8, 1.2, 2.0], 20_000, 1).unwrap();
        let fit = fit_dimension(&est).unwrap();
        assert!((fit.slope - 3.0).abs() < 0.15, "{fit:?}");
        assert!(fit.r_squared > 0.99);
    }

    #[test]
    fn deterministic() {
        let s = flat(2);
        assert_eq!(ball_volume(&s, 0.7, 1000, 9).unwrap(), ball_volume(&s, 0.7, 1000, 9).unwrap());
    }

    #[test]
    fn input_errors() {
        let s = CcSpace::standard(Group::abelian(2)).unwrap();
        assert!(ball_volume(&s, 1.0, 10, 0).is_err());
        let s = flat(2);
        assert!(ball_volume(&s, 1.0, 0, 0).is_err());
        let e = |r: f64| VolumeEstimate { radius: r, volume: r * r, stderr: 0.0, samples: 1, seed: 0, inside: 1, band: 0.0 };
        assert!(fit_dimension(&[e(1.0), e(2.0)]).is_err());
        assert!(fit_dimension(&[e(1.0), e(1.5), e(2.0)]).is_err());
        let fit = fit_dimension(&[e(1.0), e(2.0), e(4.0)]).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-12);
    }

    #[test]
    fn heisenberg_scaling_small_budget() {
        let s = CcSpace::standard(Group::heisenberg()).unwrap().with_config(OptimizerConfig::fast());
        let c = BallBoxConstant { a: 1.5, samples: 0, seed: 0, radius: 1.0, extents: vec![1.0, 1.25 / (4.0 * std::f64::consts::PI)] };
        let s = s.with_ballbox(c);
        let v1 = ball_volume(&s, 0.5, 4000, 1).unwrap();
        let v2 = ball_volume(&s, 1.0, 4000, 2).unwrap();
        let ratio = v2.volume / v1.volume;
        assert!((ratio - 16.0).abs() < 3.0, "ratio {ratio}");
        assert!(v1.band < 0.05, "band {}", v1.band);
    }

    #[test]
    fn csv_layout() {
        let est = vec![VolumeEstimate { radius: 1.0, volume: 2.0, stderr: 0.1, samples: 10, seed: 3, inside: 5, band: 0.0 }];
        let fit = DimensionFit { slope: 4.0, intercept: 0.0, r_squared: 1.0, r_min: 1.0, r_max: 4.0 };
        let s = volume_csv(&est, Some(&fit));
        assert!(s.starts_with("radius,volume,stderr,samples,seed\n1.0,2.0,0.1,10,3\n# dimension_fit: {"));
    }
}
