//! The `geolift` command line.
//!
//! Every solver command writes `results.json` (and `plot.svg` unless
//! `--no-plot`) into `--out`; failures with evidence also write
//! `witness.json`. Exit codes: 0 success, 1 usage or input error,
//! 2 inextensible lift or failed search, 3 budget exhausted.

mod plot;

use std::ffi::OsString;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use crate::connect::{
    avez_seifert, causal_seeds, connect_geodesic, enumerate_geodesics, great_circle_seeds, lattice_seeds,
    minimal_connect, straight_seed, ConnectError, ConnectOptions, MinimalOptions,
};
use crate::flow::{exp_map_tol, flow_endpoint, ExpResult};
use crate::geometry::{Point, Tangent};
use crate::lifting::{
    check_continuation, parse_seed_paths, quasi_lift, BasePath, ContinuationOptions, LiftOptions, LiftStatus,
    QuasiLift, Verdict,
};
use crate::manifold::MetricSpec;
use plot::{Curve, Panel};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_FAILURE: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

/// Comma-separated coordinates, e.g. `0.5,-1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Coords(pub Vec<f64>);

impl FromStr for Coords {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        s.split(',')
            .map(|c| {
                c.trim()
                    .parse::<f64>()
                    .map_err(|e| format!("bad coordinate {c:?}: {e}"))
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Coords)
    }
}

/// Semicolon-separated points, e.g. `1,0;0,0;-1,0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Vertices(pub Vec<Vec<f64>>);

impl FromStr for Vertices {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        s.split(';')
            .map(|p| Coords::from_str(p).map(|c| c.0))
            .collect::<Result<Vec<_>, _>>()
            .map(Vertices)
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "geolift",
    version,
    about = "Quasi-lifts of paths through the exponential map, and the connection problems built on them"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Manifold config (TOML). Names of the shipped configs, such as
    /// `sphere` or `torus.toml`, are accepted when no such file exists.
    #[arg(long)]
    pub manifold: String,
    /// Directory for results.json, plot.svg and witness.json.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Do not write plot.svg.
    #[arg(long)]
    pub no_plot: bool,
}

#[derive(Args, Debug, Clone, Default)]
pub struct LiftFlags {
    /// Bound on |E(alpha) - gamma(chi)| at every sample.
    #[arg(long)]
    pub lift_tol: Option<f64>,
    /// sigma_min below which dE counts as singular.
    #[arg(long)]
    pub sigma_threshold: Option<f64>,
    /// First regularization parameter of the xi schedule.
    #[arg(long)]
    pub xi0: Option<f64>,
    /// Hard cap on the arclength of alpha.
    #[arg(long)]
    pub max_arclength: Option<f64>,
    /// Longest single pause, in arclength.
    #[arg(long)]
    pub max_pause: Option<f64>,
    /// Integrator tolerance.
    #[arg(long)]
    pub ode_tol: Option<f64>,
}

impl LiftFlags {
    fn options(&self) -> LiftOptions {
        let mut o = LiftOptions::default();
        if let Some(v) = self.lift_tol {
            o.lift_tol = v;
        }
        if let Some(v) = self.sigma_threshold {
            o.sigma_threshold = v;
        }
        if let Some(v) = self.xi0 {
            o.xi0 = v;
        }
        if self.max_arclength.is_some() {
            o.max_arclength = self.max_arclength;
        }
        if let Some(v) = self.max_pause {
            o.max_pause = v;
        }
        if let Some(v) = self.ode_tol {
            o.ode_tol = v;
        }
        o
    }
}

#[derive(Args, Debug, Clone)]
pub struct Endpoints {
    /// Start point.
    #[arg(long, allow_hyphen_values = true)]
    pub p: Coords,
    /// End point.
    #[arg(long, allow_hyphen_values = true)]
    pub q: Coords,
    /// Required |E(v) - q|.
    #[arg(long, default_value_t = 1e-8)]
    pub connect_tol: f64,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// Chart segment (1,0) -> (-1,0) through the origin, then the unit
    /// circle from angle pi to pi + 1.
    SphereAntipode,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedFamily {
    /// Segments to lattice images of q (periodic charts).
    Lattice,
    /// Great-circle arcs with extra turns (stereographic unit sphere).
    GreatCircle,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Evaluate the exponential map E_p(v).
    Exp {
        #[command(flatten)]
        common: Common,
        /// Base point.
        #[arg(long, allow_hyphen_values = true)]
        p: Coords,
        /// Initial velocity.
        #[arg(long, allow_hyphen_values = true)]
        v: Coords,
        /// Integrator tolerance.
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Quasi-lift a base path through E_p.
    Lift {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        lift: LiftFlags,
        /// Base point of the seed vector; defaults to the path start.
        #[arg(long, allow_hyphen_values = true)]
        p: Option<Coords>,
        /// Seed vector with E_p(v0) = gamma(0); defaults to 0.
        #[arg(long, allow_hyphen_values = true)]
        v0: Option<Coords>,
        /// Polyline vertices, e.g. "0,0;1,0.3;2,0".
        #[arg(long, allow_hyphen_values = true, conflicts_with_all = ["seed_file", "preset"])]
        path: Option<Vertices>,
        /// Seed-path JSON file (first path is used).
        #[arg(long, conflicts_with = "preset")]
        seed_file: Option<PathBuf>,
        /// Built-in base path.
        #[arg(long, value_enum)]
        preset: Option<Preset>,
    },
    /// Geodesic from p to q by lifting a seed path.
    Connect {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        lift: LiftFlags,
        #[command(flatten)]
        ends: Endpoints,
        /// Interior vertices of the seed polyline.
        #[arg(long, allow_hyphen_values = true, conflicts_with = "seed_file")]
        via: Option<Vertices>,
        /// Seed-path JSON file (first path is used).
        #[arg(long)]
        seed_file: Option<PathBuf>,
    },
    /// Shortest geodesic from p to q (Riemannian).
    Minimal {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        lift: LiftFlags,
        #[command(flatten)]
        ends: Endpoints,
        /// Pieces of the broken geodesic during shortening.
        #[arg(long, default_value_t = 8)]
        partition: usize,
    },
    /// Distinct geodesics from p to q, shortest first.
    Enumerate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        lift: LiftFlags,
        #[command(flatten)]
        ends: Endpoints,
        /// Number of geodesics to report.
        #[arg(long, default_value_t = 5)]
        want: usize,
        /// Generated seed family; lattice on periodic charts and great-circle otherwise by default.
        #[arg(long, value_enum, conflicts_with = "seed_file")]
        seeds: Option<SeedFamily>,
        /// Largest lattice shift for lattice seeds.
        #[arg(long, default_value_t = 2)]
        radius: i64,
        /// Number of great-circle seeds.
        #[arg(long, default_value_t = 3)]
        count: usize,
        /// Seed-path JSON file.
        #[arg(long)]
        seed_file: Option<PathBuf>,
    },
    /// Causal geodesic of maximal proper time from p to q (Lorentzian).
    Avez {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        lift: LiftFlags,
        #[command(flatten)]
        ends: Endpoints,
        /// Number of generated causal seeds.
        #[arg(long, default_value_t = 3, conflicts_with = "seed_file")]
        seeds: usize,
        /// Seed-path JSON file.
        #[arg(long)]
        seed_file: Option<PathBuf>,
    },
    /// Probe the continuation property at p with random broken paths.
    CheckContinuation {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        lift: LiftFlags,
        /// Base point.
        #[arg(long, allow_hyphen_values = true)]
        p: Coords,
        /// Bound on the chart length of probe paths.
        #[arg(long)]
        length: f64,
        /// Number of probe paths.
        #[arg(long, default_value_t = 32)]
        budget: usize,
        /// RNG seed.
        #[arg(long, default_value_t = 0x5eed)]
        seed: u64,
        /// Most segments per probe path.
        #[arg(long, default_value_t = 4)]
        max_segments: usize,
        /// Keep probes within this chart distance of p.
        #[arg(long)]
        region: Option<f64>,
    },
}

#[derive(Debug)]
pub struct CliError(String);

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl<E: std::error::Error> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError(e.to_string())
    }
}

fn load_manifold(spec: &str) -> Result<MetricSpec, CliError> {
    let path = Path::new(spec);
    if path.exists() {
        return Ok(MetricSpec::from_file(path)?);
    }
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or(spec);
    MetricSpec::builtin(stem).ok_or_else(|| CliError(format!("{spec}: no such file or shipped config")))
}

fn read_seeds(path: &Path) -> Result<Vec<BasePath>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError(format!("{}: {e}", path.display())))?;
    Ok(parse_seed_paths(&text)?)
}

struct Outputs<'a> {
    dir: &'a Path,
    plot: bool,
}

impl Outputs<'_> {
    fn new(common: &Common) -> Result<Outputs<'_>, CliError> {
        std::fs::create_dir_all(&common.out).map_err(|e| CliError(format!("{}: {e}", common.out.display())))?;
        Ok(Outputs {
            dir: &common.out,
            plot: !common.no_plot,
        })
    }

    fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        std::fs::write(self.dir.join(name), text)?;
        Ok(())
    }

    fn svg(&self, panels: &[Panel]) -> Result<(), CliError> {
        if self.plot {
            std::fs::write(self.dir.join("plot.svg"), plot::render(panels))?;
        }
        Ok(())
    }
}

#[derive(Serialize)]
struct Record<'a, T: Serialize> {
    command: &'a str,
    manifold: &'a str,
    #[serde(flatten)]
    body: T,
}

fn xy(x: &[f64]) -> [f64; 2] {
    [x[0], x.get(1).copied().unwrap_or(0.0)]
}

fn sample_path(path: &BasePath, n: usize) -> Vec<Vec<f64>> {
    (0..=n).map(|i| path.point(i as f64 / n as f64)).collect()
}

/// Points `E_p(t v)` on a uniform grid of `t`; `None` past a domain exit.
fn geodesic_curve(m: &MetricSpec, p: &[f64], v: &[f64], n: usize) -> Vec<Option<Vec<f64>>> {
    (0..=n)
        .into_par_iter()
        .map(|i| {
            let t = i as f64 / n as f64;
            let w: Vec<f64> = v.iter().map(|c| t * c).collect();
            flow_endpoint(m, p, &w, 1e-10).ok()
        })
        .collect()
}

fn curve_xy(c: &[Option<Vec<f64>>]) -> Vec<[f64; 2]> {
    c.iter().flatten().map(|x| xy(x)).collect()
}

fn lift_code(status: &LiftStatus) -> i32 {
    match status {
        LiftStatus::Global => EXIT_OK,
        LiftStatus::InextensibleInDomain { .. } => EXIT_FAILURE,
        LiftStatus::BudgetExhausted { .. } => EXIT_BUDGET,
    }
}

fn preset_path(p: Preset) -> Result<BasePath, CliError> {
    match p {
        Preset::SphereAntipode => {
            let seg = BasePath::polyline(&[vec![1.0, 0.0], vec![0.0, 0.0], vec![-1.0, 0.0]])?;
            let arc = BasePath::from_fn(
                |t| {
                    let a = std::f64::consts::PI + t;
                    (vec![a.cos(), a.sin()], vec![-a.sin(), a.cos()])
                },
                200,
            )?;
            Ok(BasePath::chain(&[seg, arc])?)
        }
    }
}

#[derive(Serialize)]
struct LiftBody<'a> {
    options: &'a LiftOptions,
    /// `γ` on a uniform grid of 401 parameters.
    gamma: Vec<Vec<f64>>,
    /// `E(ᾱ)` at every lift sample.
    image: Vec<Option<Vec<f64>>>,
    plateaus: Vec<(usize, usize)>,
    lift: &'a QuasiLift,
}

fn lift_panels(gamma: &[Vec<f64>], image: &[Option<Vec<f64>>], lift: &QuasiLift) -> Vec<Panel> {
    let mut chart = Panel::new("path and E of the lift", "x1", "x2", true);
    chart
        .curves
        .push(Curve::new(gamma.iter().map(|x| xy(x)).collect(), "black"));
    chart.curves.push(Curve::new(curve_xy(image), "#d62728").dashed());
    let mut chi = Panel::new("chi against arclength", "s", "chi", false);
    chi.curves.push(Curve::new(
        lift.samples.iter().map(|s| [s.s, s.chi]).collect(),
        "#1f77b4",
    ));
    chi.bands = lift
        .plateaus()
        .iter()
        .map(|&(a, b)| (lift.samples[a.saturating_sub(1)].s, lift.samples[b].s))
        .collect();
    let mut tangent = Panel::new("lift in the tangent space", "v1", "v2", true);
    tangent.curves.push(Curve::new(
        lift.samples.iter().map(|s| xy(&s.alpha)).collect(),
        "#2ca02c",
    ));
    vec![chart, chi, tangent]
}

#[derive(Serialize)]
struct Failure<'a> {
    error: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    status: Option<&'a LiftStatus>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lift: Option<&'a QuasiLift>,
    #[serde(skip_serializing_if = "Option::is_none")]
    failures: Option<&'a [crate::connect::SeedFailure]>,
}

/// Writes the witness for a failed connection search and picks the exit code.
fn connect_failure(out: &Outputs, e: &ConnectError) -> Result<i32, CliError> {
    let (code, failure) = match e {
        ConnectError::Invalid(_) | ConnectError::NotRiemannian => return Err(CliError(e.to_string())),
        ConnectError::Lift { lift, .. } => (
            lift_code(&lift.status),
            Failure {
                error: e.to_string(),
                status: Some(&lift.status),
                lift: Some(lift),
                failures: None,
            },
        ),
        ConnectError::Polish { .. } => (
            EXIT_FAILURE,
            Failure {
                error: e.to_string(),
                status: None,
                lift: None,
                failures: None,
            },
        ),
        ConnectError::NoSolution { failures } => {
            let budget_only = !failures.is_empty()
                && failures
                    .iter()
                    .all(|f| matches!(f.status, Some(LiftStatus::BudgetExhausted { .. })));
            (
                if budget_only { EXIT_BUDGET } else { EXIT_FAILURE },
                Failure {
                    error: e.to_string(),
                    status: None,
                    lift: None,
                    failures: Some(failures),
                },
            )
        }
    };
    out.json("witness.json", &failure)?;
    eprintln!("{e}");
    Ok(code)
}

#[derive(Serialize)]
struct Solved<'a, T: Serialize> {
    #[serde(flatten)]
    report: &'a T,
    /// `E_p(t v)` at 65 uniform `t` per solution.
    curves: Vec<Vec<Option<Vec<f64>>>>,
}

fn solution_panels(title: &str, seeds: &[BasePath], curves: &[Vec<Option<Vec<f64>>>]) -> Vec<Panel> {
    let mut chart = Panel::new(title, "x1", "x2", true);
    for s in seeds {
        chart
            .curves
            .push(Curve::new(sample_path(s, 200).iter().map(|x| xy(x)).collect(), "#999999").dashed());
    }
    for c in curves {
        chart.curves.push(Curve::new(curve_xy(c), "#d62728"));
    }
    vec![chart]
}

fn connect_options(lift: &LiftFlags, ends: &Endpoints) -> ConnectOptions {
    ConnectOptions {
        lift: lift.options(),
        connect_tol: ends.connect_tol,
        ..ConnectOptions::default()
    }
}

fn check_dim(m: &MetricSpec, x: &[f64], what: &str) -> Result<(), CliError> {
    if x.len() != m.dim() {
        return Err(CliError(format!(
            "--{what} has {} coordinates, the manifold has dimension {}",
            x.len(),
            m.dim()
        )));
    }
    Ok(())
}

fn execute(cmd: Command) -> Result<i32, CliError> {
    match cmd {
        Command::Exp { common, p, v, tol } => {
            let m = load_manifold(&common.manifold)?;
            check_dim(&m, &p.0, "p")?;
            check_dim(&m, &v.0, "v")?;
            let out = Outputs::new(&common)?;
            let base = Point::new(p.0);
            let r = exp_map_tol(&m, &base, &Tangent::new(&base, v.0), tol);
            let rec = Record {
                command: "exp",
                manifold: m.name(),
                body: &r,
            };
            out.json("results.json", &rec)?;
            println!("{}", serde_json::to_string(&r)?);
            Ok(match r {
                ExpResult::Reached { .. } => EXIT_OK,
                _ => EXIT_FAILURE,
            })
        }
        Command::Lift {
            common,
            lift,
            p,
            v0,
            path,
            seed_file,
            preset,
        } => {
            let m = load_manifold(&common.manifold)?;
            let path = match (path, seed_file, preset) {
                (Some(v), _, _) => BasePath::polyline(&v.0)?,
                (_, Some(f), _) => read_seeds(&f)?.swap_remove(0),
                (_, _, Some(pr)) => preset_path(pr)?,
                _ => return Err(CliError("one of --path, --seed-file or --preset is required".into())),
            };
            let base = match (&p, &v0) {
                (Some(p), _) => Point::new(p.0.clone()),
                (None, None) => Point::new(path.start()),
                (None, Some(_)) => return Err(CliError("--v0 needs --p".into())),
            };
            check_dim(&m, base.coords(), "p")?;
            let v0 = match v0 {
                Some(v) => Tangent::new(&base, v.0),
                None => Tangent::zero(&base),
            };
            let opts = lift.options();
            let out = Outputs::new(&common)?;
            let q = quasi_lift(&m, &path, &v0, &opts)?;
            let image: Vec<Option<Vec<f64>>> = q
                .samples
                .par_iter()
                .map(|s| flow_endpoint(&m, &q.base_point, &s.alpha, 1e-10).ok())
                .collect();
            let gamma = sample_path(&path, 400);
            out.svg(&lift_panels(&gamma, &image, &q))?;
            let body = LiftBody {
                options: &opts,
                gamma,
                image,
                plateaus: q.plateaus(),
                lift: &q,
            };
            out.json(
                "results.json",
                &Record {
                    command: "lift",
                    manifold: m.name(),
                    body,
                },
            )?;
            if !q.is_global() {
                out.json(
                    "witness.json",
                    &Failure {
                        error: format!("lift ended: {}", q.status.label()),
                        status: Some(&q.status),
                        lift: None,
                        failures: None,
                    },
                )?;
            }
            println!(
                "status {} chi {} pauses {} samples {}",
                q.status.label(),
                q.chi_end(),
                q.stats.pauses,
                q.samples.len()
            );
            Ok(lift_code(&q.status))
        }
        Command::Connect {
            common,
            lift,
            ends,
            via,
            seed_file,
        } => {
            let m = load_manifold(&common.manifold)?;
            check_dim(&m, &ends.p.0, "p")?;
            check_dim(&m, &ends.q.0, "q")?;
            let (p, q) = (Point::new(ends.p.0.clone()), Point::new(ends.q.0.clone()));
            let seed = match (via, seed_file) {
                (Some(v), _) => {
                    let mut verts = vec![p.0.clone()];
                    verts.extend(v.0);
                    verts.push(q.0.clone());
                    BasePath::polyline(&verts)?
                }
                (_, Some(f)) => read_seeds(&f)?.swap_remove(0),
                _ => straight_seed(&p, &q)?,
            };
            let out = Outputs::new(&common)?;
            match connect_geodesic(&m, &p, &q, &seed, &connect_options(&lift, &ends)) {
                Ok(s) => {
                    let curves = vec![geodesic_curve(&m, &s.base, &s.v, 64)];
                    out.svg(&solution_panels(
                        "connecting geodesic",
                        std::slice::from_ref(&seed),
                        &curves,
                    ))?;
                    write_solved(&out, "connect", &m, &s, curves)?;
                    println!("v {:?} length {} residual {:e}", s.v, s.length, s.residual);
                    Ok(EXIT_OK)
                }
                Err(e) => connect_failure(&out, &e),
            }
        }
        Command::Minimal {
            common,
            lift,
            ends,
            partition,
        } => {
            let m = load_manifold(&common.manifold)?;
            check_dim(&m, &ends.p.0, "p")?;
            check_dim(&m, &ends.q.0, "q")?;
            let (p, q) = (Point::new(ends.p.0.clone()), Point::new(ends.q.0.clone()));
            let opts = MinimalOptions {
                connect: connect_options(&lift, &ends),
                partition,
                ..MinimalOptions::default()
            };
            let out = Outputs::new(&common)?;
            match minimal_connect(&m, &p, &q, &opts) {
                Ok(r) => {
                    let curves = vec![geodesic_curve(&m, &r.solution.base, &r.solution.v, 64)];
                    out.svg(&solution_panels("minimal geodesic", &[straight_seed(&p, &q)?], &curves))?;
                    write_solved(&out, "minimal", &m, &r, curves)?;
                    println!("length {}", r.solution.length);
                    Ok(EXIT_OK)
                }
                Err(e) => connect_failure(&out, &e),
            }
        }
        Command::Enumerate {
            common,
            lift,
            ends,
            want,
            seeds,
            radius,
            count,
            seed_file,
        } => {
            let m = load_manifold(&common.manifold)?;
            check_dim(&m, &ends.p.0, "p")?;
            check_dim(&m, &ends.q.0, "q")?;
            let (p, q) = (Point::new(ends.p.0.clone()), Point::new(ends.q.0.clone()));
            let family = seeds.unwrap_or(if m.is_periodic() {
                SeedFamily::Lattice
            } else {
                SeedFamily::GreatCircle
            });
            let seeds = match seed_file {
                Some(f) => read_seeds(&f)?,
                None => match family {
                    SeedFamily::Lattice => lattice_seeds(&m, &p, &q, radius)?,
                    SeedFamily::GreatCircle => great_circle_seeds(&p, &q, count)?,
                },
            };
            let out = Outputs::new(&common)?;
            match enumerate_geodesics(&m, &p, &q, want, &seeds, &connect_options(&lift, &ends)) {
                Ok(r) if !r.solutions.is_empty() => {
                    let curves: Vec<_> = r
                        .solutions
                        .iter()
                        .map(|s| geodesic_curve(&m, &s.base, &s.v, 64))
                        .collect();
                    out.svg(&solution_panels("distinct geodesics", &[], &curves))?;
                    let lengths: Vec<f64> = r.solutions.iter().map(|s| s.length).collect();
                    write_solved(&out, "enumerate", &m, &r, curves)?;
                    println!("{} geodesics, lengths {lengths:?}", r.solutions.len());
                    Ok(EXIT_OK)
                }
                Ok(r) => connect_failure(&out, &ConnectError::NoSolution { failures: r.failures }),
                Err(e) => connect_failure(&out, &e),
            }
        }
        Command::Avez {
            common,
            lift,
            ends,
            seeds,
            seed_file,
        } => {
            let m = load_manifold(&common.manifold)?;
            check_dim(&m, &ends.p.0, "p")?;
            check_dim(&m, &ends.q.0, "q")?;
            let (p, q) = (Point::new(ends.p.0.clone()), Point::new(ends.q.0.clone()));
            let seeds = match seed_file {
                Some(f) => read_seeds(&f)?,
                None => causal_seeds(&m, &p, &q, seeds)?,
            };
            let out = Outputs::new(&common)?;
            match avez_seifert(&m, &p, &q, &seeds, &connect_options(&lift, &ends)) {
                Ok(r) => {
                    let curves = vec![geodesic_curve(&m, &r.solution.base, &r.solution.v, 64)];
                    out.svg(&solution_panels("maximal causal geodesic", &seeds, &curves))?;
                    write_solved(&out, "avez", &m, &r, curves)?;
                    println!("proper time {} null boundary {}", r.proper_time, r.null_boundary);
                    Ok(EXIT_OK)
                }
                Err(e) => connect_failure(&out, &e),
            }
        }
        Command::CheckContinuation {
            common,
            lift,
            p,
            length,
            budget,
            seed,
            max_segments,
            region,
        } => {
            let m = load_manifold(&common.manifold)?;
            check_dim(&m, &p.0, "p")?;
            let opts = ContinuationOptions {
                length,
                budget,
                seed,
                max_segments,
                region,
                lift: lift.options(),
            };
            let out = Outputs::new(&common)?;
            let r = check_continuation(&m, &Point::new(p.0), &opts)?;
            let mut panel = Panel::new(
                format!("probe paths ({:?})", r.verdict).to_lowercase(),
                "x1",
                "x2",
                true,
            );
            for pr in &r.probes {
                let color = if Some(pr.index) == r.witness_index {
                    "#d62728"
                } else {
                    "#1f77b4"
                };
                panel
                    .curves
                    .push(Curve::new(pr.vertices.iter().map(|x| xy(x)).collect(), color));
            }
            out.svg(&[panel])?;
            out.json(
                "results.json",
                &Record {
                    command: "check-continuation",
                    manifold: m.name(),
                    body: &r,
                },
            )?;
            println!("verdict {:?}", r.verdict);
            match r.verdict {
                Verdict::Pass => Ok(EXIT_OK),
                Verdict::Fail => {
                    let w = r.witness.as_ref().expect("failing verdicts carry a witness");
                    out.json(
                        "witness.json",
                        &Failure {
                            error: format!("probe {} has an inextensible lift", r.witness_index.unwrap_or(0)),
                            status: Some(&w.status),
                            lift: Some(w),
                            failures: None,
                        },
                    )?;
                    Ok(EXIT_FAILURE)
                }
                Verdict::Inconclusive => Ok(EXIT_BUDGET),
            }
        }
    }
}

fn write_solved<T: Serialize>(
    out: &Outputs,
    command: &str,
    m: &MetricSpec,
    report: &T,
    curves: Vec<Vec<Option<Vec<f64>>>>,
) -> Result<(), CliError> {
    out.json(
        "results.json",
        &Record {
            command,
            manifold: m.name(),
            body: Solved { report, curves },
        },
    )
}

fn init_threads() {
    if let Some(n) = std::env::var("GEOLIFT_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&n| n > 0)
    {
        // A second call in the same process keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    init_threads();
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}
