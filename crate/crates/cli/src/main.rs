//! `carnot`: command-line front end for the Carnot group labs.
//!
//! Exit status: 0 on success, 1 on input errors, 2 when an optimizer or a
//! calibration fails. Errors are one line on stderr: `error[kind]: message`.

mod parse;

use std::path::PathBuf;
use std::process::ExitCode;

use carnot::derivate::{self, catalog_distance};
use carnot::divergence::{self, GeodesicPair};
use carnot::groupfile::GroupFile;
use carnot::measure;
use carnot::metric::{CcSpace, HorizontalMetric, OptimizerConfig};
use carnot::{Error, GradedAlgebra, Group, GroupElement};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

/// Environment variable giving the default worker count.
const THREADS_ENV: &str = "CARNOT_THREADS";

#[derive(Parser, Debug)]
#[command(name = "carnot", version, about = "Sub-Riemannian geometry labs for Carnot groups")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Serialize)]
struct Common {
    /// Built-in group: heisenberg, engel, abelianN, free2-R.
    #[arg(long, global = true, conflicts_with = "group_file")]
    group: Option<String>,
    /// Group definition file (TOML).
    #[arg(long, global = true)]
    group_file: Option<PathBuf>,
    /// Write report files into this directory instead of stdout.
    #[arg(long, global = true)]
    #[serde(skip)]
    out: Option<PathBuf>,
    /// Worker threads (default: $CARNOT_THREADS, else all cores).
    #[arg(long, global = true)]
    #[serde(skip)]
    threads: Option<usize>,
    /// Optimizer budget (default depends on the subcommand).
    #[arg(long, global = true, value_enum)]
    budget: Option<Budget>,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize, PartialEq)]
#[serde(rename_all = "snake_case")]
enum Budget {
    Fast,
    Standard,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Verify the graded Lie algebra axioms.
    Check,
    /// Group product x·y in exponential coordinates.
    Bch {
        #[arg(long, allow_hyphen_values = true)]
        x: String,
        #[arg(long, allow_hyphen_values = true)]
        y: String,
    },
    /// Dilation h_t x.
    Dilate {
        #[arg(long, allow_hyphen_values = true)]
        t: f64,
        #[arg(long, allow_hyphen_values = true)]
        x: String,
    },
    /// Inverse x⁻¹.
    Inverse {
        #[arg(long, allow_hyphen_values = true)]
        x: String,
    },
    /// Certified bounds on d_cc(x, y).
    Distance {
        /// Start point (default: identity).
        #[arg(long, allow_hyphen_values = true)]
        x: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        y: String,
        #[arg(long)]
        seed: u64,
    },
    /// Monte-Carlo volume of B(e, r).
    BallVolume {
        #[arg(long)]
        radius: f64,
        #[arg(long, default_value_t = 200_000)]
        samples: usize,
        #[arg(long, default_value_t = 2000)]
        calibration_samples: usize,
        #[arg(long)]
        seed: u64,
    },
    /// Ball volumes over a radius grid and the fitted dimension.
    Dimension {
        /// Radius grid lo:hi:n.
        #[arg(long)]
        radii: String,
        #[arg(long, default_value_t = 200_000)]
        samples: usize,
        #[arg(long, default_value_t = 2000)]
        calibration_samples: usize,
        #[arg(long)]
        seed: u64,
    },
    /// Box-to-ball volume ratios vol Box(e, tv, tβ) / vol B(e, tR).
    Density {
        #[arg(long, allow_hyphen_values = true)]
        v: String,
        #[arg(long, default_value_t = 0.25)]
        beta: f64,
        /// Comma-separated t values.
        #[arg(long, default_value = "0.1,0.3,1")]
        t: String,
        /// R in B(e, tR) (default |v| + 2β).
        #[arg(long)]
        radius_factor: Option<f64>,
        #[arg(long, default_value_t = 50_000)]
        samples: usize,
        #[arg(long, default_value_t = 2000)]
        calibration_samples: usize,
        #[arg(long)]
        seed: u64,
    },
    /// Lower and upper derivates of a distance at x along v.
    Derivate {
        #[arg(long, allow_hyphen_values = true)]
        x: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        v: String,
        /// One of cc, riemannian, snowflake, abelian.
        #[arg(long, default_value = "cc")]
        distance: String,
        /// Decreasing t grid hi:lo:n.
        #[arg(long, default_value = "0.1:0.0125:4")]
        t_grid: String,
        #[arg(long, default_value_t = 32)]
        samples: usize,
        /// Comma-separated τ values for the homogeneity check.
        #[arg(long, allow_hyphen_values = true)]
        tau: Option<String>,
        #[arg(long, default_value_t = 500)]
        calibration_samples: usize,
        #[arg(long)]
        seed: u64,
    },
    /// Spread of End(y, tv, tε) under right translation by h_t eᵛ.
    Spread {
        #[arg(long, allow_hyphen_values = true)]
        v: String,
        /// Comma-separated ε values.
        #[arg(long, default_value = "0.4,0.2,0.1,0.05")]
        eps: String,
        /// t grid lo:hi:n.
        #[arg(long, default_value = "0.25:1:3")]
        t_grid: String,
        #[arg(long, default_value_t = 64)]
        samples: usize,
        #[arg(long)]
        seed: u64,
    },
    /// Divergence profile of the radial geodesics h_t eᵛ and eʷ h_t eᵛ.
    Divergence {
        #[arg(long, allow_hyphen_values = true)]
        v: String,
        #[arg(long, allow_hyphen_values = true)]
        w: String,
        #[arg(long, default_value_t = 128.0)]
        tmax: f64,
        #[arg(long)]
        seed: u64,
    },
    /// Divergence profile against Euclidean model pairs, with a verdict.
    Obstruction {
        #[arg(long, allow_hyphen_values = true)]
        v: String,
        #[arg(long, allow_hyphen_values = true)]
        w: String,
        #[arg(long, default_value_t = 128.0)]
        tmax: f64,
        #[arg(long)]
        seed: u64,
    },
}

struct Output {
    file: String,
    body: String,
}

fn input(msg: impl Into<String>) -> Error {
    Error::Input(msg.into())
}

fn load_group(common: &Common) -> carnot::Result<(GradedAlgebra, HorizontalMetric)> {
    match (&common.group, &common.group_file) {
        (_, Some(path)) => {
            let def = GroupFile::load(path)?;
            Ok((def.algebra, def.metric))
        }
        (Some(name), None) => {
            let alg = GradedAlgebra::builtin(name)?;
            let d1 = alg.horizontal_dim();
            Ok((alg, HorizontalMetric::euclidean(d1)))
        }
        (None, None) => Err(input("one of --group or --group-file is required")),
    }
}

fn space(alg: GradedAlgebra, metric: HorizontalMetric, budget: Budget, seed: u64) -> carnot::Result<CcSpace> {
    let base = match budget {
        Budget::Fast => OptimizerConfig::fast(),
        Budget::Standard => OptimizerConfig::default(),
    };
    Ok(CcSpace::new(Group::new(alg)?, metric)?.with_config(OptimizerConfig { seed, ..base }))
}

fn vector(text: &str, alg: &GradedAlgebra) -> carnot::Result<Vec<f64>> {
    parse::vector(text, alg).map_err(Error::Input)
}

fn grid(text: &str) -> carnot::Result<Vec<f64>> {
    parse::grid(text).map_err(Error::Input)
}

fn list(text: &str) -> carnot::Result<Vec<f64>> {
    parse::list(text).map_err(Error::Input)
}

/// JSON report: the result's fields plus the resolved configuration.
fn json_report<T: Serialize>(result: &T, config: &Value) -> String {
    let mut v = serde_json::to_value(result).expect("report serializes");
    match v.as_object_mut() {
        Some(obj) => {
            obj.insert("config".into(), config.clone());
        }
        None => v = json!({ "result": v, "config": config }),
    }
    carnot::report::json(&v)
}

fn with_config_footer(mut csv: String, config: &Value) -> String {
    csv.push_str(&format!("# config: {}\n", serde_json::to_string(config).expect("config serializes")));
    csv
}

fn coords_line(x: &GroupElement) -> String {
    format!("{}\n", serde_json::to_string(x.as_slice()).expect("coordinates serialize"))
}

fn run(cli: &Cli) -> carnot::Result<Vec<Output>> {
    let (alg, metric) = load_group(&cli.common)?;
    let config = json!({
        "group": alg.name(),
        "layer_dims": alg.layer_dims(),
        "metric": metric.gram(),
        "common": &cli.common,
        "command": &cli.command,
    });
    let budget = |default: Budget| cli.common.budget.unwrap_or(default);
    let out = |file: &str, body: String| Output { file: file.to_string(), body };
    let outputs = match &cli.command {
        Command::Check => {
            let report = alg.verify_graded();
            let result = json!({
                "valid": report.is_valid(),
                "homogeneous_dimension": alg.homogeneous_dimension(),
                "labels": alg.labels(),
                "report": report,
            });
            vec![out("check.json", json_report(&result, &config))]
        }
        Command::Bch { x, y } => {
            let g = Group::new(alg.clone())?;
            let p = g.bch(&GroupElement::new(vector(x, &alg)?), &GroupElement::new(vector(y, &alg)?))?;
            vec![out("bch.json", coords_line(&p))]
        }
        Command::Dilate { t, x } => {
            if !t.is_finite() {
                return Err(input("t must be finite"));
            }
            let g = Group::new(alg.clone())?;
            vec![out("dilate.json", coords_line(&g.dilate(*t, &GroupElement::new(vector(x, &alg)?))))]
        }
        Command::Inverse { x } => {
            let g = Group::new(alg.clone())?;
            vec![out("inverse.json", coords_line(&g.inverse(&GroupElement::new(vector(x, &alg)?))))]
        }
        Command::Distance { x, y, seed } => {
            let x = match x {
                Some(x) => GroupElement::new(vector(x, &alg)?),
                None => GroupElement::new(vec![0.0; alg.dim()]),
            };
            let y = GroupElement::new(vector(y, &alg)?);
            let s = space(alg, metric, budget(Budget::Standard), *seed)?;
            let est = s.estimate(&x, &y)?;
            vec![out("distance.json", json_report(&est.report(&x, &y, *seed), &config))]
        }
        Command::BallVolume { radius, samples, calibration_samples, seed } => {
            let s = space(alg, metric, budget(Budget::Fast), *seed)?;
            let c = s.calibrate_ballbox(*calibration_samples, *seed)?;
            let s = s.with_ballbox(c);
            let est = measure::ball_volume(&s, *radius, *samples, *seed)?;
            vec![out("ball-volume.csv", with_config_footer(measure::volume_csv(&[est], None), &config))]
        }
        Command::Dimension { radii, samples, calibration_samples, seed } => {
            let radii = grid(radii)?;
            let s = space(alg, metric, budget(Budget::Fast), *seed)?;
            let c = s.calibrate_ballbox(*calibration_samples, *seed)?;
            let s = s.with_ballbox(c);
            let ests = measure::volume_sweep(&s, &radii, *samples, *seed)?;
            let fit = measure::fit_dimension(&ests)?;
            vec![out("dimension.csv", with_config_footer(measure::volume_csv(&ests, Some(&fit)), &config))]
        }
        Command::Density { v, beta, t, radius_factor, samples, calibration_samples, seed } => {
            let v = vector(v, &alg)?;
            let ts = list(t)?;
            let s = space(alg, metric, budget(Budget::Fast), *seed)?;
            let c = s.calibrate_ballbox(*calibration_samples, *seed)?;
            let s = s.with_ballbox(c);
            let rep = measure::box_ball_density(&s, &v, *beta, *radius_factor, &ts, *samples, *seed)?;
            vec![out("density.json", json_report(&rep, &config))]
        }
        Command::Derivate { x, v, distance, t_grid, samples, tau, calibration_samples, seed } => {
            let x = match x {
                Some(x) => GroupElement::new(vector(x, &alg)?),
                None => GroupElement::new(vec![0.0; alg.dim()]),
            };
            let v = vector(v, &alg)?;
            let mut ts = grid(t_grid)?;
            ts.sort_by(|a, b| b.total_cmp(a));
            let s = space(alg, metric, budget(Budget::Fast), *seed)?;
            let c = s.calibrate_ballbox(*calibration_samples, *seed)?;
            let s = s.with_ballbox(c);
            let d = catalog_distance(distance, &s)?;
            match tau {
                None => {
                    let est = derivate::derivate(d.as_ref(), &s, &x, &v, &ts, *samples, *seed)?;
                    vec![
                        out("derivate.csv", with_config_footer(derivate::derivate_csv(&est), &config)),
                        out("derivate.json", json_report(&est, &config)),
                    ]
                }
                Some(tau) => {
                    let taus = list(tau)?;
                    let rep = derivate::homogeneity(d.as_ref(), &s, &x, &v, &taus, &ts, *samples, *seed)?;
                    vec![
                        out("derivate.csv", with_config_footer(derivate::derivate_csv(&rep.base), &config)),
                        out("derivate.json", json_report(&rep, &config)),
                    ]
                }
            }
        }
        Command::Spread { v, eps, t_grid, samples, seed } => {
            let v = vector(v, &alg)?;
            let eps = list(eps)?;
            let ts = grid(t_grid)?;
            let s = space(alg, metric, budget(Budget::Fast), *seed)?;
            let rep = derivate::spread_estimate(&s, &v, &eps, &ts, *samples, *seed)?;
            vec![
                out("spread.csv", with_config_footer(carnot::report::csv(&rep.rows), &config)),
                out("spread.json", json_report(&rep, &config)),
            ]
        }
        Command::Divergence { v, w, tmax, seed } | Command::Obstruction { v, w, tmax, seed } => {
            if !(*tmax >= 1.0) {
                return Err(input(format!("tmax must be at least 1, got {tmax}")));
            }
            let pair = GeodesicPair { v: vector(v, &alg)?, w: vector(w, &alg)?, t_grid: divergence::default_grid(*tmax) };
            let s = space(alg, metric, budget(Budget::Standard), *seed)?;
            let fit = divergence::divergence_profile(&s, &pair)?;
            if matches!(cli.command, Command::Divergence { .. }) {
                vec![
                    out("divergence.csv", with_config_footer(divergence::profile_csv(Some(&fit), &[]), &config)),
                    out("divergence.json", json_report(&fit, &config)),
                ]
            } else {
                let models = divergence::euclidean_reference(&pair.t_grid)?;
                let rep = divergence::obstruction_report(&fit, &models);
                vec![
                    out("obstruction.csv", with_config_footer(divergence::profile_csv(Some(&fit), &models), &config)),
                    out("obstruction.json", json_report(&rep, &config)),
                ]
            }
        }
    };
    Ok(outputs)
}

fn threads(flag: Option<usize>) -> carnot::Result<usize> {
    if let Some(n) = flag {
        return Ok(n);
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| input(format!("{THREADS_ENV}='{v}' is not a thread count"))),
        Err(_) => Ok(0),
    }
}

fn emit(outputs: &[Output], dir: Option<&PathBuf>) -> carnot::Result<()> {
    match dir {
        None => {
            for o in outputs {
                print!("{}", o.body);
            }
        }
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            for o in outputs {
                let path = dir.join(&o.file);
                std::fs::write(&path, &o.body)?;
                println!("{}", path.display());
            }
        }
    }
    Ok(())
}

fn kind(e: &Error) -> &'static str {
    match e {
        Error::Optimizer { .. } => "optimizer",
        Error::Calibration { .. } => "calibration",
        Error::Io(_) => "io",
        _ => "input",
    }
}

fn fail(kind: &str, msg: &str, code: u8) -> ExitCode {
    let line: String = msg.split_whitespace().collect::<Vec<_>>().join(" ");
    eprintln!("error[{kind}]: {line}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            return fail("input", first.trim_start_matches("error: "), 1);
        }
    };
    let n = match threads(cli.common.threads) {
        Ok(n) => n,
        Err(e) => return fail("input", &e.to_string(), 1),
    };
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
        return fail("input", &e.to_string(), 1);
    }
    let result = run(&cli).and_then(|o| emit(&o, cli.common.out.as_ref()));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(kind(&e), &e.to_string(), if e.is_input() { 1 } else { 2 }),
    }
}
