//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Run with `cargo test -p carnot-cli --test acceptance`.

use std::process::Command;
use std::time::Instant;

use carnot::derivate::{self, CcDistance};
use carnot::divergence::{self, GeodesicPair, Growth};
use carnot::measure;
use carnot::metric::OptimizerConfig;
use carnot::rng::task_rng;
use carnot::{CcSpace, Group, GroupElement};
use rand::Rng;

const DIM_SAMPLES: usize = 200_000;
const DIM_SLOPE: (f64, f64) = (3.8, 4.2);
const SCALING_RATIO: (f64, f64) = (14.4, 17.6);
const GROUP_TRIPLES: usize = 10_000;
const GROUP_TOL: f64 = 1e-8;
const HOMOTHETY_PAIRS: usize = 100;
const HORIZONTAL_GAP: f64 = 0.01;
const SANITY_PAIRS: usize = 10_000;
const DERIVATE_TOL: f64 = 0.03;
const SPREAD_EPS: [f64; 4] = [0.4, 0.2, 0.1, 0.05];
const EXPONENT: (f64, f64) = (0.4, 0.6);
const COMMUTING_EXPONENT: f64 = 0.05;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn random_coords<R: Rng>(rng: &mut R, n: usize, half: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-half..half)).collect()
}

fn rel_diff(a: &GroupElement, b: &GroupElement) -> f64 {
    let scale = a.as_slice().iter().chain(b.as_slice()).fold(1.0f64, |m, c| m.max(c.abs()));
    a.as_slice().iter().zip(b.as_slice()).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())) / scale
}

fn heisenberg_space(config: OptimizerConfig) -> CcSpace {
    CcSpace::standard(Group::heisenberg()).unwrap().with_config(config)
}

fn c1_c2() -> (Outcome, Outcome) {
    let q = measure::homogeneous_dimension(Group::heisenberg().algebra());
    let s = heisenberg_space(OptimizerConfig { seed: 7, ..OptimizerConfig::fast() });
    let s = match s.calibrate_ballbox(2000, 7) {
        Ok(c) => s.with_ballbox(c),
        Err(e) => {
            let f = || outcome(false, format!("calibration failed: {e}"));
            return (f(), f());
        }
    };
    let radii = [0.5, 0.5 * 2f64.sqrt(), 1.0, 2f64.sqrt(), 2.0];
    let start = Instant::now();
    let ests = match measure::volume_sweep(&s, &radii, DIM_SAMPLES, 7) {
        Ok(e) => e,
        Err(e) => {
            let f = || outcome(false, format!("volume sweep failed: {e}"));
            return (f(), f());
        }
    };
    let secs = start.elapsed().as_secs_f64();
    let slope = measure::fit_dimension(&ests).map(|f| f.slope).unwrap_or(f64::NAN);
    let c1 = outcome(
        q == 4 && slope >= DIM_SLOPE.0 && slope <= DIM_SLOPE.1,
        format!("Q = {q}, fitted slope {slope:.4} in [{}, {}], {DIM_SAMPLES} samples/radius, {secs:.1} s", DIM_SLOPE.0, DIM_SLOPE.1),
    );
    let ratio = ests[4].volume / ests[2].volume;
    let ratio_half = ests[2].volume / ests[0].volume;
    let ok = |r: f64| r >= SCALING_RATIO.0 && r <= SCALING_RATIO.1;
    let c2 = outcome(
        ok(ratio_half) && ok(ratio),
        format!(
            "vol B(1)/vol B(0.5) = {ratio_half:.3}, vol B(2)/vol B(1) = {ratio:.3}, bounds [{}, {}]",
            SCALING_RATIO.0, SCALING_RATIO.1
        ),
    );
    (c1, c2)
}

fn c3() -> Outcome {
    let mut worst = 0.0f64;
    let mut details = Vec::new();
    for (k, name) in ["heisenberg", "engel", "abelian3", "free2-3"].iter().enumerate() {
        let g = Group::builtin(name).unwrap();
        let n = g.dim();
        let e = g.identity();
        let mut rng = task_rng(3, k as u64);
        let mut local = 0.0f64;
        for _ in 0..GROUP_TRIPLES {
            let a = GroupElement::new(random_coords(&mut rng, n, 2.0));
            let b = GroupElement::new(random_coords(&mut rng, n, 2.0));
            let c = GroupElement::new(random_coords(&mut rng, n, 2.0));
            let t = rng.random_range(0.0..3.0);
            let ab = g.bch(&a, &b).unwrap();
            let inv = g.inverse(&a);
            let checks = [
                rel_diff(&g.bch(&ab, &c).unwrap(), &g.bch(&a, &g.bch(&b, &c).unwrap()).unwrap()),
                rel_diff(&g.bch(&e, &a).unwrap(), &a),
                rel_diff(&g.bch(&a, &e).unwrap(), &a),
                rel_diff(&g.bch(&a, &inv).unwrap(), &e),
                rel_diff(&g.bch(&inv, &a).unwrap(), &e),
                rel_diff(&g.dilate(t, &ab), &g.bch(&g.dilate(t, &a), &g.dilate(t, &b)).unwrap()),
                // With h_{−t} g = h_t g⁻¹ negative parameters reverse products.
                rel_diff(&g.dilate(-t, &ab), &g.bch(&g.dilate(-t, &b), &g.dilate(-t, &a)).unwrap()),
            ];
            local = checks.iter().fold(local, |m, &r| m.max(r));
        }
        details.push(format!("{name} {local:.1e}"));
        worst = worst.max(local);
    }
    outcome(
        worst <= GROUP_TOL,
        format!("worst relative residual over {GROUP_TRIPLES} triples/group ({}) vs {GROUP_TOL:e}", details.join(", ")),
    )
}

fn c4() -> Outcome {
    let s = heisenberg_space(OptimizerConfig { seed: 4, ..OptimizerConfig::default() });
    let g = s.group().clone();
    let mut rng = task_rng(4, 0);
    let mut failures = 0;
    let mut errors = 0;
    for _ in 0..HOMOTHETY_PAIRS {
        let x = GroupElement::new(random_coords(&mut rng, 3, 1.0));
        let y = GroupElement::new(random_coords(&mut rng, 3, 1.0));
        let Ok(base) = s.estimate(&x, &y) else {
            errors += 1;
            continue;
        };
        for t in [0.5, 2.0] {
            match s.estimate(&g.dilate(t, &x), &g.dilate(t, &y)) {
                Ok(sc) => {
                    let lo = sc.lower.max(t * base.lower);
                    let hi = sc.upper.min(t * base.upper);
                    if lo > hi * (1.0 + 1e-12) {
                        failures += 1;
                    }
                }
                Err(_) => errors += 1,
            }
        }
    }
    outcome(
        failures == 0 && errors == 0,
        format!("{HOMOTHETY_PAIRS} pairs × t ∈ {{0.5, 2}}: {failures} disjoint intervals, {errors} optimizer errors"),
    )
}

fn c5() -> Outcome {
    let s = heisenberg_space(OptimizerConfig { seed: 5, ..OptimizerConfig::fast() });
    let s = match s.calibrate_ballbox(500, 5) {
        Ok(c) => s.with_ballbox(c),
        Err(e) => return outcome(false, format!("calibration failed: {e}")),
    };
    let id = s.group().identity();
    let mut rng = task_rng(5, 0);
    let mut worst_gap = 0.0f64;
    for k in 0..100 {
        let (a, b) = match k {
            0 => (1.0, 0.0),
            1 => (0.0, -2.5),
            _ => (rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)),
        };
        let est = s.estimate(&id, &GroupElement::new(vec![a, b, 0.0])).unwrap();
        worst_gap = worst_gap.max((est.upper - est.lower) / (a * a + b * b).sqrt());
    }
    let mut violations = 0;
    let mut errors = 0;
    for _ in 0..SANITY_PAIRS {
        let x = GroupElement::new(random_coords(&mut rng, 3, 1.5));
        let y = GroupElement::new(random_coords(&mut rng, 3, 1.5));
        match (s.lower(&x, &y), s.cc_upper(&x, &y)) {
            (Ok((lo, _)), Ok(up)) => {
                if lo > up.upper {
                    violations += 1;
                }
            }
            _ => errors += 1,
        }
    }
    outcome(
        worst_gap <= HORIZONTAL_GAP && violations == 0 && errors == 0,
        format!(
            "horizontal targets: worst (upper − lower)/|v| = {worst_gap:.2e} (≤ {HORIZONTAL_GAP}); {SANITY_PAIRS} random pairs: {violations} lower > upper, {errors} errors"
        ),
    )
}

fn c6() -> Outcome {
    let s = heisenberg_space(OptimizerConfig { seed: 6, ..OptimizerConfig::fast() });
    let s = match s.calibrate_ballbox(500, 6) {
        Ok(c) => s.with_ballbox(c),
        Err(e) => return outcome(false, format!("calibration failed: {e}")),
    };
    let d = CcDistance { space: &s };
    let x = GroupElement::new(vec![0.4, -0.3, 0.7]);
    let v = [0.6, -0.8, 0.0];
    let taus = [-2.0, -1.0, 0.5, 2.0];
    let grid = [0.1, 0.05, 0.025, 0.0125];
    match derivate::homogeneity(&d, &s, &x, &v, &taus, &grid, 16, 6) {
        Ok(rep) => {
            let worst = rep.rows.iter().map(|r| r.relative).fold(0.0f64, f64::max);
            outcome(
                worst <= DERIVATE_TOL,
                format!(
                    "ρ(x, v) ∈ [{:.6}, {:.6}]; worst |ρ(x, τv) − |τ|ρ(x, v)| / (|τ||v|) = {worst:.2e} over τ ∈ {taus:?} (≤ {DERIVATE_TOL})",
                    rep.base.rho_lower, rep.base.rho_upper
                ),
            )
        }
        Err(e) => outcome(false, format!("derivate failed: {e}")),
    }
}

fn c7() -> Outcome {
    let s = heisenberg_space(OptimizerConfig { seed: 7, ..OptimizerConfig::fast() });
    match derivate::spread_estimate(&s, &[1.0, 0.0, 0.0], &SPREAD_EPS, &[0.25, 0.5, 1.0], 64, 7) {
        Ok(rep) => {
            let worst = rep.t_spread.iter().map(|x| x.1).fold(0.0f64, f64::max);
            let cs: Vec<String> = rep.c_eps.iter().map(|(e, c)| format!("C({e}) = {c:.4}")).collect();
            outcome(
                rep.linear_within_10pct && rep.decreasing,
                format!("t ∈ [0.25, 1]: worst max/min − 1 of sup/t = {worst:.2e} (≤ 0.10); {}; decreasing: {}", cs.join(", "), rep.decreasing),
            )
        }
        Err(e) => outcome(false, format!("spread failed: {e}")),
    }
}

fn c8() -> Outcome {
    let s = heisenberg_space(OptimizerConfig { seed: 8, ..OptimizerConfig::default() });
    let grid = divergence::default_grid(128.0);
    let start = Instant::now();
    let xy = GeodesicPair { v: vec![1.0, 0.0, 0.0], w: vec![0.0, 1.0, 0.0], t_grid: grid.clone() };
    let same = GeodesicPair { v: vec![1.0, 0.0, 0.0], w: vec![1.0, 0.0, 0.0], t_grid: grid.clone() };
    let (fit, commuting) = match (divergence::divergence_profile(&s, &xy), divergence::divergence_profile(&s, &same)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return outcome(false, format!("profile failed: {e}")),
    };
    let models = divergence::euclidean_reference(&grid).unwrap();
    let growth: Vec<Growth> = models.iter().map(|m| m.growth).collect();
    let report = divergence::obstruction_report(&fit, &models);
    let sw = &fit.sandwich;
    let pass = fit.complete
        && fit.exponent >= EXPONENT.0
        && fit.exponent <= EXPONENT.1
        && sw.holds
        && sw.strictly_sublinear
        && commuting.exponent.abs() <= COMMUTING_EXPONENT
        && growth == [Growth::Bounded, Growth::Linear]
        && report.verdict == divergence::WITNESSED;
    outcome(
        pass,
        format!(
            "X/Y exponent {:.4} in [{}, {}], α = {:.3}, β = {:.3}, sandwich holds: {}; commuting exponent {:.1e}; Euclidean {:?}; verdict \"{}\"; {:.1} s",
            fit.exponent,
            EXPONENT.0,
            EXPONENT.1,
            sw.alpha,
            sw.beta,
            sw.holds,
            commuting.exponent,
            growth,
            report.verdict,
            start.elapsed().as_secs_f64()
        ),
    )
}

fn c9() -> Outcome {
    let cases: &[&[&str]] = &[
        &["check", "--group", "engel"],
        &["bch", "--group", "engel", "--x", "X1+X2", "--y", "X2-X4"],
        &["dilate", "--group", "heisenberg", "--t", "-1.5", "--x", "1,2,3"],
        &["inverse", "--group", "free2-3", "--x", "1,2,3,4,5,6"],
        &["distance", "--group", "engel", "--y", "0.3,-0.2,0.4,0.1", "--seed", "9"],
        &["ball-volume", "--group", "heisenberg", "--radius", "1", "--samples", "20000", "--calibration-samples", "300", "--seed", "9"],
        &["dimension", "--group", "heisenberg", "--radii", "0.5:2:3", "--samples", "5000", "--calibration-samples", "300", "--seed", "9"],
        &["density", "--group", "heisenberg", "--v", "X", "--samples", "5000", "--calibration-samples", "300", "--seed", "9"],
        &["derivate", "--group", "heisenberg", "--v", "X-Y", "--samples", "8", "--calibration-samples", "300", "--tau", "-1,0.5", "--seed", "9"],
        &["spread", "--group", "heisenberg", "--v", "Y", "--samples", "16", "--seed", "9"],
        &["divergence", "--group", "heisenberg", "--v", "X", "--w", "Y", "--tmax", "16", "--seed", "9"],
        &["obstruction", "--group", "heisenberg", "--v", "X", "--w", "Y", "--tmax", "16", "--seed", "9"],
    ];
    let mut mismatched = Vec::new();
    for args in cases {
        let run = |threads: &str| {
            Command::new(env!("CARGO_BIN_EXE_carnot"))
                .args(*args)
                .args(["--threads", threads])
                .env_remove("CARNOT_THREADS")
                .output()
                .expect("binary runs")
        };
        let (a, b) = (run("1"), run("4"));
        if !a.status.success() || a.stdout.is_empty() || a.stdout != b.stdout {
            mismatched.push(args[0]);
        }
    }
    outcome(
        mismatched.is_empty(),
        format!("{} subcommands run twice (1 and 4 threads): byte-identical except {:?}", cases.len(), mismatched),
    )
}

fn main() {
    let (c1, c2) = c1_c2();
    let results = [
        ("heisenberg homogeneous dimension", c1),
        ("dilation volume scaling", c2),
        ("group-law suite", c3()),
        ("homothety of d_cc", c4()),
        ("distance sanity", c5()),
        ("derivate homogeneity", c6()),
        ("spread estimate", c7()),
        ("divergence exponent and verdict", c8()),
        ("determinism", c9()),
    ];
    let mut failed = 0;
    for (k, (name, o)) in results.iter().enumerate() {
        println!("{} {}  {name}: {}", if o.pass { "PASS" } else { "FAIL" }, k + 1, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
