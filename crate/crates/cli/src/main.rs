//! `polarsym` command-line front end.
//!
//! Every analysis prints a JSON report (schema version 1) to stdout or to
//! `--out`. Exit status: 0 for a positive verdict, 2 for a negative one, 1 on
//! errors. `POLARSYM_THREADS` caps the worker pool.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use polarsym::ball::{ball_axis, example21, is_separable_ball, BallFn, BallGridParams};
use polarsym::choquard::{
    certify_theorem41, solve_ground_state, CertifyOptions, ChoquardProblem, GroundState, Init, SolveOptions,
};
use polarsym::circle::{circle_axis_and_profile, is_separable_circle, CircleFn};
use polarsym::field::{analyze_field, fixture, CartesianGrid, FieldFn, FieldOptions, DEFAULT_R_MAX, FIXTURE_NAMES};
use polarsym::geometry::HalfSpace;
use polarsym::green::{audit, GreenKernel};
use polarsym::io::{self, Envelope};
use polarsym::polarization::{decompose_d_difference, polarize, PairedGrid};
use polarsym::report::{AxisReport, SeparabilityReport};
use polarsym::sphere::{is_separable_sphere, sphere_caps_and_axis, LatLonGrid, SphereFn, DEFAULT_HALFSPACES};
use polarsym::Error;

#[derive(Parser)]
#[command(name = "polarsym", version, about = "Half-space separability and symmetry analysis")]
struct Cli {
    /// Omit the timestamp from JSON reports so reruns are byte-identical.
    #[arg(long, global = true)]
    no_timestamp: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Output {
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Sampling {
    /// Relative tolerance.
    #[arg(long, default_value_t = 1e-9)]
    eps: f64,
    /// Number of random half-spaces tested in addition to the grid-exact ones.
    #[arg(long, default_value_t = DEFAULT_HALFSPACES)]
    halfspaces: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Separability and axis of a circle function (CSV: theta,value).
    AnalyzeCircle {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 1e-9)]
        eps: f64,
        #[command(flatten)]
        out: Output,
    },
    /// Separability, caps and axis of a sphere function (CSV: lat_index,lon_index,value).
    AnalyzeSphere {
        #[arg(long = "in")]
        input: PathBuf,
        #[command(flatten)]
        sampling: Sampling,
        #[command(flatten)]
        out: Output,
    },
    /// Separability and shell axes of a ball function (CSV: shell_index,lat_index,lon_index,value).
    AnalyzeBall {
        #[arg(long = "in")]
        input: PathBuf,
        #[command(flatten)]
        sampling: Sampling,
        #[command(flatten)]
        out: Output,
    },
    /// Whole-space analysis of a binary grid file or a named fixture.
    AnalyzeField {
        #[command(flatten)]
        source: FieldSourceArgs,
        #[arg(long, default_value_t = 1e-6)]
        eps: f64,
        #[arg(long, default_value_t = 256)]
        halfspaces: usize,
        #[arg(long, default_value_t = 2000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: Output,
    },
    /// Polarize a field on a random paired grid in B_R and decompose D(u^H) − D(u).
    Polarize {
        #[command(flatten)]
        source: FieldSourceArgs,
        /// Normal of the half-space through the origin, e.g. `1,0,0`; rescaled to unit length.
        #[arg(long, value_delimiter = ',', default_values_t = [1.0, 0.0, 0.0])]
        normal: Vec<f64>,
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        #[arg(long, default_value_t = 400)]
        pairs: usize,
        #[arg(long, default_value_t = 40)]
        plane: usize,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: Output,
    },
    /// Randomized audit of the Green function identities and inequalities.
    CheckGreen {
        #[arg(long, default_value_t = 10_000)]
        draws: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        #[arg(long, default_value_t = 3)]
        dim: usize,
        #[command(flatten)]
        out: Output,
    },
    /// Compute a discrete Choquard ground state and write it as JSON.
    SolveChoquard {
        #[arg(long = "R", default_value_t = 1.0)]
        radius: f64,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[arg(long, default_value_t = 24)]
        n: usize,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long, default_value_t = 5000)]
        max_iters: usize,
        /// Seed for a perturbed initial guess; the plain bump is used without it.
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        out: Output,
    },
    /// Symmetry certification of a solved ground state.
    Certify {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 1e-3)]
        eps: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: Output,
    },
    /// Write a named closed-form fixture as a data file.
    Fixtures {
        #[arg(long, required_unless_present = "list")]
        name: Option<String>,
        #[arg(long, required_unless_present = "list")]
        out: Option<PathBuf>,
        /// Grid points per axis for field fixtures.
        #[arg(long, default_value_t = 65)]
        points: usize,
        #[arg(long)]
        list: bool,
    },
}

#[derive(Args)]
struct FieldSourceArgs {
    /// Binary grid file.
    #[arg(long = "in", conflicts_with = "fixture")]
    input: Option<PathBuf>,
    /// Named closed-form field.
    #[arg(long, required_unless_present = "input")]
    fixture: Option<String>,
    /// Analysis radius (grid input only).
    #[arg(long, default_value_t = DEFAULT_R_MAX)]
    r_max: f64,
    /// Assert that the field decays at infinity (grid input only).
    #[arg(long)]
    decay: bool,
}

impl FieldSourceArgs {
    fn load(&self) -> Result<FieldFn> {
        match (&self.input, &self.fixture) {
            (Some(path), _) => Ok(FieldFn::from_grid(io::read_grid(path)?, self.r_max, self.decay)),
            (None, Some(name)) => fixture(name).with_context(|| {
                format!("unknown field fixture '{name}' (known: {})", FIXTURE_NAMES.join(", "))
            }),
            (None, None) => bail!("either --in or --fixture is required"),
        }
    }
}

/// Pass / negative-verdict outcome of a subcommand.
enum Verdict {
    Pass,
    Negative,
}

struct Ctx {
    timestamp: bool,
}

impl Ctx {
    fn emit<T: Serialize>(&self, kind: &str, report: T, out: &Output) -> Result<()> {
        let stamp = self.timestamp.then(|| {
            let secs = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
            format!("unix:{secs}")
        });
        let env = Envelope::new(kind, report, stamp);
        match &out.out {
            Some(path) => io::write_json(path, &env)?,
            None => {
                let mut stdout = std::io::stdout().lock();
                match writeln!(stdout, "{}", io::to_json(&env)?) {
                    Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => return Err(e.into()),
                    _ => {}
                }
            }
        }
        Ok(())
    }
}

#[derive(Serialize)]
struct AnalysisReport {
    separability: SeparabilityReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    axis: Option<AxisReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

/// Runs the axis step only for separable inputs; analysis errors become part
/// of a negative report rather than a process failure.
fn analysis(separability: SeparabilityReport, axis: impl FnOnce() -> polarsym::Result<AxisReport>) -> (AnalysisReport, Verdict) {
    if !separability.separable {
        let rep = AnalysisReport {
            separability,
            axis: None,
            error: None,
        };
        return (rep, Verdict::Negative);
    }
    match axis() {
        Ok(a) => (
            AnalysisReport {
                separability,
                axis: Some(a),
                error: None,
            },
            Verdict::Pass,
        ),
        Err(e) => (
            AnalysisReport {
                separability,
                axis: None,
                error: Some(e.to_string()),
            },
            Verdict::Negative,
        ),
    }
}

#[derive(Serialize)]
struct PolarizeReport {
    halfspace: HalfSpace,
    nodes: usize,
    p: f64,
    d_u: f64,
    d_polarized: f64,
    i1: f64,
    i2: f64,
    i3: f64,
    i4: f64,
    plane_terms: f64,
    /// `|D(u^H) − D(u) − (I1 + I2 + I3 + I4 + plane)|` relative to `D(u)`.
    identity_residual: f64,
    l2_u: f64,
    l2_polarized: f64,
    inequality_holds: bool,
}

fn run(cli: Cli) -> Result<Verdict> {
    let ctx = Ctx {
        timestamp: !cli.no_timestamp,
    };
    match cli.command {
        Command::AnalyzeCircle { input, eps, out } => {
            let u = io::read_circle_csv(&input)?;
            let (rep, v) = analysis(is_separable_circle(&u, eps), || circle_axis_and_profile(&u, eps));
            ctx.emit("circle", rep, &out)?;
            Ok(v)
        }
        Command::AnalyzeSphere { input, sampling, out } => {
            let u = io::read_sphere_csv(&input)?;
            let sep = is_separable_sphere(&u, sampling.halfspaces, sampling.eps, sampling.seed);
            let (rep, v) = analysis(sep, || sphere_caps_and_axis(&u, sampling.eps));
            ctx.emit("sphere", rep, &out)?;
            Ok(v)
        }
        Command::AnalyzeBall { input, sampling, out } => {
            let u = io::read_ball_csv(&input)?;
            let sep = is_separable_ball(&u, sampling.halfspaces, sampling.eps, sampling.seed);
            let (rep, v) = analysis(sep, || ball_axis(&u, sampling.eps));
            ctx.emit("ball", rep, &out)?;
            Ok(v)
        }
        Command::AnalyzeField {
            source,
            eps,
            halfspaces,
            samples,
            seed,
            out,
        } => {
            let u = source.load()?;
            let opts = FieldOptions {
                n_halfspaces: halfspaces,
                n_samples: samples,
                eps,
                seed,
            };
            let rep = analyze_field(&u, opts)?;
            let v = if rep.separability.separable {
                Verdict::Pass
            } else {
                Verdict::Negative
            };
            ctx.emit("field", rep, &out)?;
            Ok(v)
        }
        Command::Polarize {
            source,
            normal,
            radius,
            pairs,
            plane,
            p,
            seed,
            out,
        } => {
            if normal.len() != 3 {
                bail!("--normal needs three comma-separated components");
            }
            let u = source.load()?;
            let h = HalfSpace::from_direction(&normal, 0.0)?;
            let grid = PairedGrid::random_in_ball(h.clone(), radius, pairs, plane, seed)?;
            let values = grid.sample(|x| u.eval(&[x[0], x[1], x[2]]));
            let w = grid.weights()[0];
            let k = GreenKernel::new(radius, 3, 1.0)?;
            let k = GreenKernel::new(radius, 3, k.cell_radius(w))?;
            let km = grid.kernel_matrix(&k)?;
            let dec = decompose_d_difference(&grid, &values, p, &km)?;
            let uh = polarize(&grid, &values, &h)?;
            let l2 = |v: &[f64]| polarsym::polarization::weighted_l2(&grid, v);
            let rep = PolarizeReport {
                halfspace: h,
                nodes: grid.len(),
                p,
                d_u: dec.d_u,
                d_polarized: dec.d_polarized,
                i1: dec.i1,
                i2: dec.i2,
                i3: dec.i3,
                i4: dec.i4,
                plane_terms: dec.plane_terms,
                identity_residual: (dec.difference() - dec.sum()).abs() / dec.d_u.abs().max(f64::MIN_POSITIVE),
                l2_u: l2(&values),
                l2_polarized: l2(&uh),
                inequality_holds: dec.d_polarized >= dec.d_u * (1.0 - 1e-12),
            };
            let v = if rep.inequality_holds {
                Verdict::Pass
            } else {
                Verdict::Negative
            };
            ctx.emit("polarize", rep, &out)?;
            Ok(v)
        }
        Command::CheckGreen {
            draws,
            seed,
            radius,
            dim,
            out,
        } => {
            let k = GreenKernel::new(radius, dim, 1e-3 * radius)?;
            let rep = audit(&k, draws, seed);
            let v = if rep.pass { Verdict::Pass } else { Verdict::Negative };
            ctx.emit("green-audit", rep, &out)?;
            Ok(v)
        }
        Command::SolveChoquard {
            radius,
            p,
            n,
            tol,
            max_iters,
            seed,
            out,
        } => {
            let prob = ChoquardProblem::new(radius, p, n)?;
            let init = match seed {
                Some(seed) => Init::Perturbed { seed, amplitude: 0.1 },
                None => Init::Bump,
            };
            let opts = SolveOptions {
                init,
                max_iters,
                tol,
                ..SolveOptions::default()
            };
            match solve_ground_state(&prob, &opts) {
                Ok(state) => {
                    ctx.emit("choquard-state", state, &out)?;
                    Ok(Verdict::Pass)
                }
                Err(Error::NonConvergence { best, .. }) => {
                    ctx.emit("choquard-state", *best, &out)?;
                    Ok(Verdict::Negative)
                }
                Err(e) => Err(e.into()),
            }
        }
        Command::Certify { input, eps, seed, out } => {
            let env: Envelope<GroundState> = io::read_json(&input)?;
            let opts = CertifyOptions {
                eps,
                seed,
                ..CertifyOptions::default()
            };
            let rep = certify_theorem41(&env.report, &opts)?;
            let v = if rep.passed { Verdict::Pass } else { Verdict::Negative };
            ctx.emit("certification", rep, &out)?;
            Ok(v)
        }
        Command::Fixtures {
            name,
            out,
            points,
            list,
        } => {
            if list {
                for n in fixture_names() {
                    println!("{n}");
                }
                return Ok(Verdict::Pass);
            }
            let (name, out) = (name.expect("required"), out.expect("required"));
            write_fixture(&name, &out, points)?;
            Ok(Verdict::Pass)
        }
    }
}

const CIRCLE_FIXTURES: [&str; 2] = ["cos", "cos2"];
const SPHERE_FIXTURES: [&str; 2] = ["sphere-axial", "sphere-saddle"];
const BALL_FIXTURES: [&str; 2] = ["example21", "ball-radial"];

fn fixture_names() -> Vec<&'static str> {
    CIRCLE_FIXTURES
        .iter()
        .chain(&SPHERE_FIXTURES)
        .chain(&BALL_FIXTURES)
        .chain(&FIXTURE_NAMES)
        .copied()
        .collect()
}

fn write_fixture(name: &str, out: &Path, points: usize) -> Result<()> {
    let grid = LatLonGrid::new(33, 64)?;
    match name {
        "cos" => io::write_circle_csv(out, &CircleFn::from_fn(64, |t| 2.0 + t.cos())?)?,
        "cos2" => io::write_circle_csv(out, &CircleFn::from_fn(64, |t| 2.0 + (2.0 * t).cos())?)?,
        "sphere-axial" => io::write_sphere_csv(out, &SphereFn::sampled(grid, |x| 1.0 + x[2].exp())?)?,
        "sphere-saddle" => io::write_sphere_csv(out, &SphereFn::sampled(grid, |x| 2.0 + x[0] * x[1])?)?,
        "example21" => {
            let params = BallGridParams {
                radius: 1.0,
                shells: 8,
                n_lat: 33,
                n_lon: 64,
            };
            io::write_ball_csv(out, &example21(params)?)?
        }
        "ball-radial" => io::write_ball_csv(
            out,
            &BallFn::sampled(1.0, 8, grid, |x| 3.0 - (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt())?,
        )?,
        _ => {
            let f = fixture(name).with_context(|| {
                format!("unknown fixture '{name}' (known: {})", fixture_names().join(", "))
            })?;
            let half = f.r_max();
            let g = CartesianGrid::sample_cube(points, half, move |x| f.eval(x))?;
            io::write_grid(out, &g)?
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = std::env::var("POLARSYM_THREADS").ok().and_then(|s| s.parse::<usize>().ok()) {
        // Only fails if a pool already exists, which cannot happen this early.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match run(cli) {
        Ok(Verdict::Pass) => ExitCode::SUCCESS,
        Ok(Verdict::Negative) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
