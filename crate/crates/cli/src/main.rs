#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use sphere_inspect::curve::{AnyCurve, Curve3};
use sphere_inspect::horizon::{
    curve_efficiency, curve_horizon, instantaneous_efficiency, orthogonal_efficiency, spiral_edge_efficiency,
    PhasePoint,
};
use sphere_inspect::inspection::{baseball_seam, check_inspects, inradius_at_center, SeamSpec};
use sphere_inspect::oracle::{crofton_length, mc_horizon};
use sphere_inspect::shortener::{diagnose, shorten, ShortenConfig};
use sphere_inspect::sphere::{DirectionSampler, Scheme};
use sphere_inspect::unfold::{
    check_spiral_angle_bound, decompose_spirals, spiral_efficiency, unfold, SpiralTolerances,
};
use sphere_inspect::vector::{Point, Vec3};
use sphere_inspect::verify::{run_all, run_one, VerifyConfig};

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] sphere_inspect::Error),
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("{0}")]
    Failed(String),
}

type Res<T = ()> = Result<T, CliError>;

#[derive(Parser)]
#[command(name = "sphere-inspect", version, about = "Horizon, efficiency and inspection geometry of curves around the unit sphere")]
struct Cli {
    /// Worker threads (results do not depend on this)
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    Fibonacci,
    Uniform,
}

impl From<SchemeArg> for Scheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::Fibonacci => Scheme::Fibonacci,
            SchemeArg::Uniform => Scheme::Uniform,
        }
    }
}

#[derive(Args)]
struct CurveArg {
    /// Curve JSON file; `-` or omitted reads stdin
    #[arg(long)]
    curve: Option<PathBuf>,
}

#[derive(Args)]
struct OutArg {
    /// Write to this file instead of stdout
    #[arg(short = 'o', long = "out")]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo horizon of a space curve, with the closed form alongside
    Horizon {
        #[command(flatten)]
        curve: CurveArg,
        #[arg(long, default_value_t = 1_000_000)]
        samples: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, value_enum, default_value = "uniform")]
        scheme: SchemeArg,
    },
    /// Efficiency of a curve, of a phase point (h, alpha) or of a spiral edge (h0, h1)
    Efficiency {
        #[command(flatten)]
        curve: CurveArg,
        #[arg(long, conflicts_with_all = ["h0", "curve"])]
        h: Option<f64>,
        /// Radial angle in radians; defaults to pi/2
        #[arg(long, requires = "h")]
        alpha: Option<f64>,
        #[arg(long, requires = "h1", conflicts_with = "curve")]
        h0: Option<f64>,
        #[arg(long, requires = "h0")]
        h1: Option<f64>,
        /// Add a full diagnosis with a Monte Carlo horizon from this seed
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 1_000_000)]
        samples: usize,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// Cone unfolding of a space curve
    Unfold {
        #[command(flatten)]
        curve: CurveArg,
        /// Also write the planar curve as curve JSON
        #[command(flatten)]
        out: OutArg,
    },
    /// Spiral decomposition of a curve's unfolding (or of a planar curve)
    Spirals {
        #[command(flatten)]
        curve: CurveArg,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Write the discretized baseball seam
    Seam {
        #[arg(long, default_value_t = 256)]
        arcs: usize,
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        #[command(flatten)]
        out: OutArg,
    },
    /// Sampled hull test and inradius
    Inspect {
        #[command(flatten)]
        curve: CurveArg,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        /// Accept support down to 1 - tol; chords of a discretized seam dip
        /// by 1 - cos(pi/2n)
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
        /// Also report the inradius about this center, as x,y,z
        #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
        center: Option<Vec3>,
        #[arg(long, value_enum, default_value = "fibonacci")]
        scheme: SchemeArg,
        /// Required with --scheme uniform
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Shorten a curve under the inspection constraint
    Shorten {
        #[command(flatten)]
        curve: CurveArg,
        #[arg(long, default_value_t = 2000)]
        iters: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 0.5)]
        step: f64,
        #[arg(long, default_value_t = 0.5)]
        shrink: f64,
        #[arg(long, default_value_t = 1e-7)]
        stop_rel_tol: f64,
        /// Test feasibility against the exact hull (slow beyond a few hundred vertices)
        #[arg(long)]
        exact_hull: bool,
        #[command(flatten)]
        out: OutArg,
        /// CSV trace: iter,length,step,feasible,min_support
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Crofton length estimate of a curve on the unit sphere
    Crofton {
        #[command(flatten)]
        curve: CurveArg,
        #[arg(long, default_value_t = std::f64::consts::FRAC_PI_4)]
        rho: f64,
        #[arg(long, default_value_t = 1_000_000)]
        samples: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, value_enum, default_value = "uniform")]
        scheme: SchemeArg,
        /// Project the vertices onto the unit sphere first
        #[arg(long)]
        normalize: bool,
    },
    /// CSV grids of the efficiency functions
    Table {
        #[arg(long, default_value_t = 200)]
        grid: usize,
        #[arg(long, value_enum, default_value = "edge")]
        kind: TableKind,
        #[arg(long, default_value_t = 3.0)]
        hmax: f64,
        #[command(flatten)]
        out: OutArg,
    },
    /// Run the acceptance criteria
    Verify {
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 1_000_000)]
        samples: usize,
        /// Run a single criterion
        #[arg(long)]
        only: Option<usize>,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum TableKind {
    /// h0,h1,E for orthogonal-start edges
    Edge,
    /// h,alpha,E over the admissible phase region
    Phase,
}

fn parse_vec3(s: &str) -> Result<Vec3, String> {
    let c: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}")))
        .collect::<Result<_, _>>()?;
    match c.as_slice() {
        &[x, y, z] => Vec3::try_new(x, y, z).map_err(|e| e.to_string()),
        _ => Err(format!("expected x,y,z, got {} values", c.len())),
    }
}

fn read_text(path: Option<&Path>) -> Res<String> {
    let mut text = String::new();
    match path {
        None => {
            io::stdin().read_to_string(&mut text).map_err(|source| CliError::Io {
                path: "<stdin>".into(),
                source,
            })?;
        }
        Some(p) if p == Path::new("-") => return read_text(None),
        Some(p) => {
            text = fs::read_to_string(p).map_err(|source| CliError::Io {
                path: p.display().to_string(),
                source,
            })?;
        }
    }
    Ok(text)
}

fn label(path: Option<&Path>) -> String {
    path.map_or("<stdin>".into(), |p| p.display().to_string())
}

fn read_any(arg: &CurveArg) -> Res<AnyCurve> {
    let text = read_text(arg.curve.as_deref())?;
    AnyCurve::from_json(&text).map_err(|e| CliError::Failed(format!("{}: {e}", label(arg.curve.as_deref()))))
}

/// Planar curves are placed in the plane z = 0.
fn read_curve3(arg: &CurveArg) -> Res<Curve3> {
    Ok(match read_any(arg)? {
        AnyCurve::Spatial(c) => c,
        AnyCurve::Planar(c) => Curve3::new(
            c.points().iter().map(|p| Vec3::new(p.x, p.y, 0.0)).collect(),
            c.is_closed(),
        )?,
    })
}

fn emit(out: Option<&Path>, text: &str) -> Res {
    match out {
        Some(p) => fs::write(p, text).map_err(|source| CliError::Io {
            path: p.display().to_string(),
            source,
        }),
        None => {
            let mut stdout = io::stdout().lock();
            match stdout.write_all(text.as_bytes()).and_then(|_| stdout.flush()) {
                Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(CliError::Io {
                    path: "<stdout>".into(),
                    source: e,
                }),
                _ => Ok(()),
            }
        }
    }
}

fn emit_json<T: Serialize>(value: &T) -> Res {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Failed(e.to_string()))?;
    s.push('\n');
    emit(None, &s)
}

fn sampler(scheme: SchemeArg, samples: usize, seed: u64) -> Res<DirectionSampler> {
    if samples == 0 {
        return Err(CliError::Usage("--samples must be positive".into()));
    }
    Ok(DirectionSampler::new(scheme.into(), samples, seed))
}

fn run(cli: Cli) -> Res {
    match cli.command {
        Command::Horizon {
            curve,
            samples,
            seed,
            scheme,
        } => {
            let c = read_curve3(&curve)?;
            let est = mc_horizon(&c, &sampler(scheme, samples, seed)?)?;
            let closed = curve_horizon(&c).ok();
            emit_json(&json!({
                "value": est.value,
                "standard_error": est.standard_error,
                "samples": est.samples,
                "seed": est.seed,
                "scheme": est.scheme,
                "mean_count": est.mean_count,
                "closed_form": closed,
                "length": c.length(),
            }))
        }
        Command::Efficiency {
            curve,
            h,
            alpha,
            h0,
            h1,
            seed,
            samples,
            tol,
        } => {
            if let Some(h) = h {
                let alpha = alpha.unwrap_or(std::f64::consts::FRAC_PI_2);
                let e = instantaneous_efficiency(PhasePoint::new(h, alpha)?)?;
                return emit_json(&json!({ "h": h, "alpha": alpha, "efficiency": e }));
            }
            if let (Some(h0), Some(h1)) = (h0, h1) {
                let e = if h1 == h0 {
                    orthogonal_efficiency(h0)?
                } else {
                    spiral_edge_efficiency(h0.min(h1), h0.max(h1))?
                };
                return emit_json(&json!({ "h0": h0, "h1": h1, "efficiency": e }));
            }
            let c = read_curve3(&curve)?;
            match seed {
                Some(seed) => emit_json(&diagnose(&c, &sampler(SchemeArg::Uniform, samples, seed)?, tol)?),
                None => {
                    let e = curve_efficiency(&c)?;
                    emit_json(&json!({
                        "length": c.length(),
                        "efficiency": e,
                        "horizon": e * c.length(),
                    }))
                }
            }
        }
        Command::Unfold { curve, out } => {
            let c = read_curve3(&curve)?;
            let u = unfold(&c)?;
            if let Some(p) = out.out.as_deref() {
                emit(Some(p), &u.planar.to_json())?;
            }
            emit_json(&u)
        }
        Command::Spirals { curve, tol } => {
            let planar = match read_any(&curve)? {
                AnyCurve::Planar(c) => c,
                AnyCurve::Spatial(c) => {
                    let shift = if c.is_closed() { c.min_height_vertex() } else { 0 };
                    unfold(&c.shifted(shift))?.planar
                }
            };
            let tols = SpiralTolerances {
                height: tol,
                convexity: tol,
            };
            let d = decompose_spirals(&planar, &tols)?;
            let pieces: Vec<_> = d
                .pieces
                .iter()
                .map(|p| {
                    json!({
                        "piece": p,
                        "efficiency": spiral_efficiency(p).ok(),
                        "angle_bound": check_spiral_angle_bound(p, tol),
                    })
                })
                .collect();
            emit_json(&json!({
                "pieces": pieces,
                "flat_set_length": d.flat_set_length,
                "flat_ranges": d.flat_ranges,
                "orientation_flips": d.orientation_flips,
                "length": d.length,
            }))
        }
        Command::Seam { arcs, scale, out } => {
            let c = baseball_seam(&SeamSpec::new(arcs, scale)?)?;
            emit(out.out.as_deref(), &c.to_json())
        }
        Command::Inspect {
            curve,
            samples,
            tol,
            center,
            scheme,
            seed,
        } => {
            let seed = match (scheme, seed) {
                (SchemeArg::Uniform, None) => return Err(CliError::Usage("--scheme uniform requires --seed".into())),
                (_, s) => s.unwrap_or(0),
            };
            let c = read_curve3(&curve)?;
            let dirs = sampler(scheme, samples, seed)?;
            let report = check_inspects(&c, &dirs, tol);
            let mut value = serde_json::to_value(&report).map_err(|e| CliError::Failed(e.to_string()))?;
            if let Some(center) = center {
                value["center"] = json!([center.x, center.y, center.z]);
                value["inradius"] = json!(inradius_at_center(&c, center, &dirs));
            }
            emit_json(&value)
        }
        Command::Shorten {
            curve,
            iters,
            seed,
            samples,
            step,
            shrink,
            stop_rel_tol,
            exact_hull,
            out,
            trace,
        } => {
            let c = read_curve3(&curve)?;
            let cfg = ShortenConfig {
                max_iters: iters,
                step,
                shrink_factor: shrink,
                inspect_samples: samples,
                seed,
                stop_rel_tol,
                exact_hull,
                ..Default::default()
            };
            let t = shorten(&c, &cfg)?;
            if let Some(p) = trace.as_deref() {
                emit(Some(p), &t.to_csv())?;
            }
            let summary = json!({
                "initial_length": t.initial_length,
                "final_length": t.final_length(),
                "length_over_4pi": t.final_length() / (4.0 * std::f64::consts::PI),
                "iterations": t.records.len() - 1,
                "accepted_steps": t.accepted_steps,
                "final_min_support": t.records.iter().rev().find(|r| r.accepted).map(|r| r.min_support),
            });
            match out.out.as_deref() {
                Some(p) => {
                    emit(Some(p), &t.curve.to_json())?;
                    emit_json(&summary)
                }
                None => emit(None, &t.curve.to_json()),
            }
        }
        Command::Crofton {
            curve,
            rho,
            samples,
            seed,
            scheme,
            normalize,
        } => {
            let mut c = read_curve3(&curve)?;
            if normalize {
                if let Some(i) = c.points().iter().position(|p| p.norm() == 0.0) {
                    return Err(CliError::Failed(format!("vertex {i} is at the origin")));
                }
                c = c.map(|p| p * (1.0 / p.norm()))?;
            }
            emit_json(&crofton_length(&c, rho, &sampler(scheme, samples, seed)?)?)
        }
        Command::Table { grid, kind, hmax, out } => {
            if grid < 2 {
                return Err(CliError::Usage("--grid must be at least 2".into()));
            }
            if !(hmax > 1.0) {
                return Err(CliError::Usage("--hmax must exceed 1".into()));
            }
            emit(out.out.as_deref(), &table(grid, kind, hmax)?)
        }
        Command::Verify {
            seed,
            samples,
            only,
            json,
        } => {
            if samples == 0 {
                return Err(CliError::Usage("--samples must be positive".into()));
            }
            let cfg = VerifyConfig { seed, samples };
            let results = match only {
                Some(id) => vec![run_one(id, &cfg).ok_or_else(|| CliError::Usage(format!("no criterion {id}")))?],
                None => run_all(&cfg),
            };
            if json {
                emit_json(&results)?;
            } else {
                let mut text = String::new();
                for r in &results {
                    text.push_str(&format!("{r}\n"));
                }
                let passed = results.iter().filter(|r| r.passed()).count();
                text.push_str(&format!("{passed}/{} criteria passed\n", results.len()));
                emit(None, &text)?;
            }
            let failed: Vec<String> = results.iter().filter(|r| !r.passed()).map(|r| r.id.to_string()).collect();
            if failed.is_empty() {
                Ok(())
            } else {
                Err(CliError::Failed(format!("failed criteria: {}", failed.join(", "))))
            }
        }
    }
}

fn table(grid: usize, kind: TableKind, hmax: f64) -> Res<String> {
    let at = |i: usize| 1.0 + (hmax - 1.0) * i as f64 / (grid - 1) as f64;
    let mut s = String::new();
    match kind {
        TableKind::Edge => {
            s.push_str("h0,h1,E\n");
            for i in 0..grid {
                for j in i..grid {
                    let (h0, h1) = (at(i), at(j));
                    let e = if j == i {
                        orthogonal_efficiency(h0)?
                    } else {
                        spiral_edge_efficiency(h0, h1)?
                    };
                    s.push_str(&format!("{h0:.16e},{h1:.16e},{e:.16e}\n"));
                }
            }
        }
        TableKind::Phase => {
            s.push_str("h,alpha,E\n");
            for i in 0..grid {
                let h = at(i);
                let lo = (1.0 / h).asin();
                for j in 0..grid {
                    let alpha = lo + (std::f64::consts::FRAC_PI_2 - lo) * j as f64 / (grid - 1) as f64;
                    let e = instantaneous_efficiency(PhasePoint::new(h, alpha)?)?;
                    s.push_str(&format!("{h:.16e},{alpha:.16e},{e:.16e}\n"));
                }
            }
        }
    }
    Ok(s)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                CliError::Usage(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
