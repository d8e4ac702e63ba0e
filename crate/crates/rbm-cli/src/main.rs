//! Command-line front end: validation, kernel geometry, the discretized
//! contour, asymptotics classification, transform evaluation on grids,
//! closed-form comparison, simulation, and a combined report.
//!
//! Exit codes: 0 success, 2 invalid parameters or usage, 3 numerical failure.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::json;

use rbm::asymptotics::{self, CaseLabel};
use rbm::laplace::{self, Evaluator, Tolerances};
use rbm::mc::{self, SimConfig};
use rbm::model::{self, ModelParams};
use rbm::{Error, KernelGeometry};

type C = Complex64;

#[derive(Parser)]
#[command(
    name = "rbm",
    about = "Reflected Brownian motion in the quarter plane: stationary laplace transforms",
    version
)]
struct Cli {
    /// Parameter file (JSON); wedge files carry a "beta" key
    #[arg(long, global = true)]
    params: Option<PathBuf>,
    /// Output file; stdout when omitted
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Relative accuracy target for transform evaluation (default 1e-8)
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Refusal margin around the contour, fraction of the plane scale
    /// (default 1e-3)
    #[arg(long, global = true)]
    margin: Option<f64>,
    /// Equality tolerance for the asymptotics comparisons, fraction of scale
    /// (default 1e-8)
    #[arg(long, global = true)]
    table_tol: Option<f64>,
    /// Relative tolerance for the discrete predicates (default 1e-9)
    #[arg(long, global = true)]
    predicate_tol: Option<f64>,
    /// Master seed for simulation
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check the stationarity and positivity conditions, listing every one
    Validate,
    /// Print the derived kernel geometry as JSON
    Geometry,
    /// Dump the discretized hyperbola and unwrapped log G as CSV
    Curve {
        /// Tail bound target for the truncation point
        #[arg(long, default_value_t = 1e-8)]
        tail: f64,
    },
    /// Classify the boundary tail asymptotics
    Classify,
    /// Evaluate phi1 or phi2 on a grid, CSV output
    Eval(GridArgs),
    /// Same grid, adding the applicable closed form and the relative error
    Compare(GridArgs),
    /// Simulate the reflected SDE and estimate phi and the boundary masses
    Simulate {
        #[arg(long, default_value_t = 5e-5)]
        step: f64,
        #[arg(long, default_value_t = 50.0)]
        burnin: f64,
        #[arg(long, default_value_t = 51.0)]
        horizon: f64,
        #[arg(long, default_value_t = 10_000)]
        paths: usize,
        /// Evaluation point "a,b" for the transform estimate
        #[arg(long, default_value = "-1,-1", allow_hyphen_values = true)]
        theta: String,
    },
    /// Chain validation, geometry, index, classification, spot values and the
    /// closed-form comparison into one JSON document
    Report {
        /// Append a Monte Carlo cross-check (slower)
        #[arg(long)]
        mc: bool,
    },
}

#[derive(Args)]
struct GridArgs {
    /// theta1 or theta2
    #[arg(long, default_value = "theta2")]
    axis: String,
    /// "a:b" range on the chosen axis
    #[arg(long, default_value = "-5:-0.1", allow_hyphen_values = true)]
    range: String,
    #[arg(long, default_value_t = 51)]
    count: usize,
    /// Shorthand "axis:a:b:count", overriding the three flags
    #[arg(long, allow_hyphen_values = true)]
    grid: Option<String>,
}

struct Grid {
    axis: usize, // 0 = theta1, 1 = theta2
    points: Vec<f64>,
}

fn parse_grid(args: &GridArgs) -> Result<Grid, String> {
    let (axis_s, range_s, count) = match &args.grid {
        Some(spec) => {
            let parts: Vec<&str> = spec.split(':').collect();
            if parts.len() != 4 {
                return Err(format!("grid spec '{}' is not axis:a:b:count", spec));
            }
            let count: usize = parts[3].parse().map_err(|e| format!("bad count: {}", e))?;
            (
                parts[0].to_string(),
                format!("{}:{}", parts[1], parts[2]),
                count,
            )
        }
        None => (args.axis.clone(), args.range.clone(), args.count),
    };
    let axis = match axis_s.as_str() {
        "theta1" => 0,
        "theta2" => 1,
        other => return Err(format!("axis '{}' is neither theta1 nor theta2", other)),
    };
    let bounds: Vec<&str> = range_s.split(':').collect();
    if bounds.len() != 2 {
        return Err(format!("range '{}' is not a:b", range_s));
    }
    let a: f64 = bounds[0]
        .parse()
        .map_err(|e| format!("bad range start: {}", e))?;
    let b: f64 = bounds[1]
        .parse()
        .map_err(|e| format!("bad range end: {}", e))?;
    if count < 2 {
        return Err("count must be at least 2".into());
    }
    let points = (0..count)
        .map(|i| a + (b - a) * (i as f64) / ((count - 1) as f64))
        .collect();
    Ok(Grid { axis, points })
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("RBM_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global();
        }
    }
    let cli = Cli::parse();
    match run(&cli) {
        Ok(output) => {
            let result = match &cli.out {
                Some(path) => fs::write(path, output.as_bytes()).map_err(|e| e.to_string()),
                None => {
                    let mut stdout = std::io::stdout().lock();
                    stdout
                        .write_all(output.as_bytes())
                        .and_then(|_| stdout.flush())
                        .map_err(|e| e.to_string())
                }
            };
            match result {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: {}", e);
                    ExitCode::from(3)
                }
            }
        }
        Err(CliError { code, message }) => {
            eprintln!("error: {}", message);
            ExitCode::from(code)
        }
    }
}

struct CliError {
    code: u8,
    message: String,
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::InvalidParams(_)
            | Error::NonFinite(_)
            | Error::InvalidConfig(_)
            | Error::Json(_)
            | Error::Io(_) => 2,
            _ => 3,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

fn usage(message: String) -> CliError {
    CliError { code: 2, message }
}

fn load_model(cli: &Cli) -> Result<ModelParams, CliError> {
    let path = cli
        .params
        .as_ref()
        .ok_or_else(|| usage("--params FILE is required".into()))?;
    let text = fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read {}: {}", path.display(), e)))?;
    let input = model::parse_params(&text)?;
    let params = input.into_quadrant()?;
    Ok(params)
}

fn tolerances(cli: &Cli) -> Tolerances {
    let mut tol = Tolerances::default();
    if let Some(t) = cli.tol {
        tol.phi_rel = t;
    }
    if let Some(m) = cli.margin {
        tol.contour_margin = m;
    }
    if let Some(t) = cli.table_tol {
        tol.table = t;
    }
    if let Some(t) = cli.predicate_tol {
        tol.predicate = t;
    }
    tol
}

fn run(cli: &Cli) -> Result<String, CliError> {
    match &cli.cmd {
        Cmd::Validate => {
            let params = load_model(cli)?;
            let report = model::validate(&params)?;
            let text = serde_json::to_string_pretty(&report).unwrap() + "\n";
            if report.ok {
                Ok(text)
            } else {
                Err(CliError {
                    code: 2,
                    message: text,
                })
            }
        }
        Cmd::Geometry => {
            let params = load_model(cli)?;
            let geom = KernelGeometry::compute(&params)?;
            Ok(serde_json::to_string_pretty(&geom).unwrap() + "\n")
        }
        Cmd::Curve { tail } => {
            let params = load_model(cli)?;
            let path = rbm::curve::build_path(&params, *tail, 1e8)?;
            let mut out = String::from("s,re_theta2,im_theta2,re_logg,im_logg\n");
            for i in 0..path.node_params.len() {
                out.push_str(&format!(
                    "{},{},{},{},{}\n",
                    path.node_params[i],
                    path.nodes[i].0,
                    path.nodes[i].1,
                    path.log_g[i].0,
                    path.log_g[i].1
                ));
            }
            Ok(out)
        }
        Cmd::Classify => {
            let params = load_model(cli)?;
            let tol = tolerances(cli);
            let mut class = asymptotics::classify(&params, tol.table)?;
            if class.case == CaseLabel::C1a && class.ambiguous_with.is_empty() {
                let ev = Evaluator::with_tolerances(&params, tol)?;
                class.b = Some(asymptotics::constant_b_case1a(&ev)?);
            }
            Ok(serde_json::to_string_pretty(&class).unwrap() + "\n")
        }
        Cmd::Eval(grid_args) => {
            let params = load_model(cli)?;
            let grid = parse_grid(grid_args).map_err(usage)?;
            let ev = Evaluator::with_tolerances(&params, tolerances(cli))?;
            let rows: Result<Vec<String>, rbm::Error> = grid
                .points
                .par_iter()
                .map(|&t| {
                    let z = C::new(t, 0.0);
                    let v = if grid.axis == 1 {
                        ev.phi1(z)
                    } else {
                        ev.phi2(z)
                    }?;
                    Ok(format!(
                        "{},{},{},{},{}",
                        z.re, z.im, v.value.re, v.value.im, v.abs_error_estimate
                    ))
                })
                .collect();
            let mut out = String::from("re_theta,im_theta,re_phi,im_phi,err\n");
            for row in rows? {
                out.push_str(&row);
                out.push('\n');
            }
            Ok(out)
        }
        Cmd::Compare(grid_args) => {
            let params = load_model(cli)?;
            let grid = parse_grid(grid_args).map_err(usage)?;
            if grid.axis != 1 {
                return Err(usage("compare works on the theta2 axis".into()));
            }
            let skew = model::is_skew_symmetric(&params, tolerances(cli).predicate);
            let orthogonal = laplace::closed_form_orthogonal(&params, C::new(-1.0, 0.0)).is_ok();
            if !skew && !orthogonal {
                return Err(usage(
                    "no closed form applies: parameters are neither skew-symmetric nor orthogonally reflected".into(),
                ));
            }
            let ev = Evaluator::with_tolerances(&params, tolerances(cli))?;
            let rows: Result<Vec<String>, rbm::Error> = grid
                .points
                .par_iter()
                .map(|&t| {
                    let z = C::new(t, 0.0);
                    let v = ev.phi1(z)?;
                    let closed = if skew {
                        laplace::closed_form_skew(&params, z)?
                    } else {
                        ev.closed_form_orthogonal(z)?
                    };
                    let rel = (v.value - closed.value).norm() / closed.value.norm().max(1e-300);
                    Ok(format!(
                        "{},{},{},{},{},{},{},{}",
                        z.re,
                        z.im,
                        v.value.re,
                        v.value.im,
                        v.abs_error_estimate,
                        closed.value.re,
                        closed.value.im,
                        rel
                    ))
                })
                .collect();
            let mut out =
                String::from("re_theta,im_theta,re_phi,im_phi,err,re_closed,im_closed,rel_err\n");
            for row in rows? {
                out.push_str(&row);
                out.push('\n');
            }
            Ok(out)
        }
        Cmd::Simulate {
            step,
            burnin,
            horizon,
            paths,
            theta,
        } => {
            let params = load_model(cli)?;
            let parts: Vec<&str> = theta.split(',').collect();
            if parts.len() != 2 {
                return Err(usage(format!("theta '{}' is not a,b", theta)));
            }
            let t1: f64 = parts[0]
                .trim()
                .parse()
                .map_err(|e| usage(format!("{}", e)))?;
            let t2: f64 = parts[1]
                .trim()
                .parse()
                .map_err(|e| usage(format!("{}", e)))?;
            let config = SimConfig {
                step_h: *step,
                horizon_t: *horizon,
                burn_in: *burnin,
                n_paths: *paths,
                master_seed: cli.seed.unwrap_or(SimConfig::default().master_seed),
            };
            let samples = mc::simulate(&params, &config)?;
            let (phi, stderr) = mc::estimate_phi(&samples, (C::new(t1, 0.0), C::new(t2, 0.0)))?;
            let (masses, mass_se) = mc::estimate_boundary_masses(&samples);
            let doc = json!({
                "theta": [t1, t2],
                "phi_estimate": {"re": phi.re, "im": phi.im},
                "stderr": stderr,
                "nu1": masses[0],
                "nu2": masses[1],
                "stderrs": [mass_se[0], mass_se[1]],
                "paths": config.n_paths,
                "step_h": config.step_h,
                "seed": config.master_seed,
            });
            Ok(serde_json::to_string_pretty(&doc).unwrap() + "\n")
        }
        Cmd::Report { mc: with_mc } => {
            let params = load_model(cli)?;
            let validation = model::validate(&params)?;
            if !validation.ok {
                return Err(CliError {
                    code: 2,
                    message: serde_json::to_string_pretty(&validation).unwrap(),
                });
            }
            let tol = tolerances(cli);
            let geom = KernelGeometry::compute(&params)?;
            let ev = Evaluator::with_tolerances(&params, tol)?;
            let index = *ev.index();
            let mut class = asymptotics::classify(&params, tol.table)?;
            if class.case == CaseLabel::C1a && class.ambiguous_with.is_empty() {
                class.b = Some(asymptotics::constant_b_case1a(&ev)?);
            }
            let spots = [-2.0, -1.0, -0.5];
            let mut phi_samples = Vec::new();
            for t in spots {
                let v = ev.phi1(C::new(t, 0.0))?;
                phi_samples.push(json!({
                    "theta2": t,
                    "re": v.value.re,
                    "im": v.value.im,
                    "err": v.abs_error_estimate,
                }));
            }
            let skew = model::is_skew_symmetric(&params, tolerances(cli).predicate);
            let orthogonal = laplace::closed_form_orthogonal(&params, C::new(-1.0, 0.0)).is_ok();
            let closed_form = if skew || orthogonal {
                let mut rows = Vec::new();
                for t in spots {
                    let z = C::new(t, 0.0);
                    let closed = if skew {
                        laplace::closed_form_skew(&params, z)?
                    } else {
                        ev.closed_form_orthogonal(z)?
                    };
                    let v = ev.phi1(z)?;
                    rows.push(json!({
                        "theta2": t,
                        "closed": closed.value.re,
                        "integral": v.value.re,
                        "rel_err": (v.value - closed.value).norm()
                            / closed.value.norm().max(1e-300),
                    }));
                }
                Some(json!({
                    "kind": if skew { "skew_symmetric" } else { "orthogonal" },
                    "rows": rows,
                }))
            } else {
                None
            };
            let mc_doc = if *with_mc {
                let config = SimConfig {
                    master_seed: cli.seed.unwrap_or(SimConfig::default().master_seed),
                    ..SimConfig::default()
                };
                let samples = mc::simulate(&params, &config)?;
                let (phi, stderr) =
                    mc::estimate_phi(&samples, (C::new(-1.0, 0.0), C::new(-1.0, 0.0)))?;
                let analytic = ev.phi_interior(C::new(-1.0, 0.0), C::new(-1.0, 0.0))?;
                let (masses, mass_se) = mc::estimate_boundary_masses(&samples);
                let nu = ev.masses();
                Some(json!({
                    "theta": [-1.0, -1.0],
                    "phi_estimate": phi.re,
                    "stderr": stderr,
                    "phi_analytic": analytic.value.re,
                    "nu_estimates": [masses[0], masses[1]],
                    "nu_stderrs": [mass_se[0], mass_se[1]],
                    "nu_analytic": [nu.nu1_total, nu.nu2_total],
                }))
            } else {
                None
            };
            let doc = json!({
                "validation": validation,
                "geometry": geom,
                "index": index,
                "classification": class,
                "nu": {
                    "nu1": ev.masses().nu1_total,
                    "nu2": ev.masses().nu2_total,
                },
                "phi1_samples": phi_samples,
                "closed_form_comparison": closed_form,
                "mc_cross_check": mc_doc,
            });
            Ok(serde_json::to_string_pretty(&doc).unwrap() + "\n")
        }
    }
}
