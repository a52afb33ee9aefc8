//! Command-line front end: argument parsing, dispatch to the library, and
//! report rendering. `run` is pure apart from reading input files, so the
//! binary and the tests share it.

pub mod input;
pub mod output;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use num_bigint::BigUint;
use num_rational::BigRational;
use serde::Serialize;
use serde_json::{json, Value};

use arith_mm::acceptance::{self, AcceptanceConfig};
use arith_mm::algebra;
use arith_mm::arith;
use arith_mm::bounds::{self, BoundParams, XVariant};
use arith_mm::orbit::{self, FSubspace, OrbitAnalyzer, SubspaceLattice};
use arith_mm::torsion::{self, ModelAmbient};
use arith_mm::{Caps, Error, Result};

pub use output::Format;

/// Environment variable holding cap overrides, e.g. `ambient=4096,group=1000`.
pub const CAPS_ENV: &str = "ARITH_MM_CAPS";

#[derive(Debug, Parser)]
#[command(name = "arith-mm", version, about = "Exact effective bounds, torsion-coset models, orbit densities and idempotent lifting")]
pub struct Cli {
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    pub format: Format,
    /// Seed for the randomized checks of `selftest`.
    #[arg(long, default_value_t = 0, global = true)]
    pub seed: u64,
    /// Cap overrides as `key=value,...`; applied after the environment.
    #[arg(long, global = true)]
    pub caps: Option<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Jacobsthal's function g(d) and Kanold's bound.
    Jacobsthal { d: u64 },
    /// Smallest k with gcd(a + k n, d) = 1.
    CoprimeShift { a: u64, n: u64, d: u64 },
    /// Full effective-bound report.
    DeltaBound {
        #[arg(long = "D")]
        degree: u64,
        #[arg(long = "Delta")]
        dimension: u32,
        #[arg(long)]
        c: u32,
        #[arg(long, default_value_t = 1)]
        d: u64,
        #[arg(long, default_value_t = 0)]
        p: u64,
        /// Slack exponent as `num/den`.
        #[arg(long, default_value = "1/2")]
        eps: String,
        /// Use x = 2D + omega + 1 instead of the root form.
        #[arg(long)]
        doubled_x: bool,
    },
    /// The set of admissible multipliers below N.
    SigmaSet {
        #[arg(long = "D")]
        degree: u64,
        #[arg(long)]
        c: u32,
        #[arg(long, default_value_t = 1)]
        d: u64,
        #[arg(long, default_value_t = 0)]
        p: u64,
    },
    /// Lang orbit of a point of (Z/N)^(2g).
    LangOrbit {
        #[arg(long = "N")]
        n: u64,
        #[arg(long)]
        g: u32,
        #[arg(long)]
        c: u32,
        /// Coordinates, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        point: Vec<u64>,
    },
    /// Special closure of a point set (JSON file, `-` for stdin).
    SpecialClosure { input: PathBuf },
    /// Smallest-order coset between a Lang orbit and a set (JSON file).
    KeypropWitness { input: PathBuf },
    /// Orbit density report for a matrix group over F_l (JSON file).
    GlVerify { input: PathBuf },
    /// Lift an idempotent through a subalgebra (JSON file).
    IdempotentLift { input: PathBuf },
    /// Lift an idempotent modulo a central idempotent (JSON file).
    IdempotentLiftCentral { input: PathBuf },
    /// Run the acceptance suite.
    Selftest {
        /// Small ranges only.
        #[arg(long)]
        quick: bool,
    },
}

/// Everything `run` needs.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub format: Format,
    pub caps: Caps,
    pub seed: u64,
}

impl Cli {
    /// Resolve caps: defaults, then `env_caps`, then `--caps`.
    pub fn into_config(self, env_caps: Option<&str>) -> Result<RunConfig> {
        let mut caps = Caps::default();
        for spec in [env_caps, self.caps.as_deref()].into_iter().flatten() {
            caps = caps.with_overrides(spec)?;
        }
        Ok(RunConfig {
            command: self.command,
            format: self.format,
            caps,
            seed: self.seed,
        })
    }
}

/// Exit status, report and error line of one invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub status: u8,
    pub stdout: String,
    pub stderr: String,
}

pub fn exit_status(e: &Error) -> u8 {
    match e {
        Error::InvalidInput(_) | Error::NoSolution(_) => 1,
        Error::CapExceeded { .. } => 2,
        Error::Invariant(_) => 3,
    }
}

/// The one-line machine-readable error record.
pub fn error_line(e: &Error) -> String {
    let kind = match e {
        Error::InvalidInput(_) => "invalid_input",
        Error::NoSolution(_) => "no_solution",
        Error::CapExceeded { .. } => "cap_exceeded",
        Error::Invariant(_) => "invariant_violation",
    };
    format!("{}\n", json!({"error": kind, "status": exit_status(e), "message": e.to_string()}))
}

pub fn run(config: &RunConfig) -> Outcome {
    match execute(config) {
        Ok((report, failure)) => Outcome {
            status: failure.as_ref().map_or(0, exit_status),
            stdout: output::render(&report, config.format),
            stderr: failure.as_ref().map_or_else(String::new, error_line),
        },
        Err(e) => Outcome {
            status: exit_status(&e),
            stdout: String::new(),
            stderr: error_line(&e),
        },
    }
}

fn to_value<T: Serialize>(v: &T) -> Result<Value> {
    serde_json::to_value(v).map_err(|e| Error::Invariant(format!("serialization failed: {e}")))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = if path.as_os_str() == "-" {
        std::io::read_to_string(std::io::stdin())
    } else {
        std::fs::read_to_string(path)
    }
    .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
}

fn parse_rational(s: &str) -> Result<BigRational> {
    let bad = || Error::InvalidInput(format!("`{s}` is not a fraction num/den"));
    let (num, den) = s.split_once('/').unwrap_or((s, "1"));
    let num = num.trim().parse::<num_bigint::BigInt>().map_err(|_| bad())?;
    let den = den.trim().parse::<num_bigint::BigInt>().map_err(|_| bad())?;
    if den == 0.into() {
        return Err(bad());
    }
    Ok(BigRational::new(num, den))
}

fn big_strings(v: &[BigUint]) -> Vec<String> {
    v.iter().map(ToString::to_string).collect()
}

/// The report, plus an error to signal through the exit status when the
/// report itself records a failure.
fn execute(config: &RunConfig) -> Result<(Value, Option<Error>)> {
    let caps = &config.caps;
    let report = match &config.command {
        Command::Jacobsthal { d } => {
            let f = arith::factorize(*d)?;
            let g = arith::jacobsthal_factored(&f)?;
            let bounds = arith::jacobsthal_bounds::<f64>(&f);
            json!({"d": d, "g": g, "kanold": bounds.kanold})
        }
        Command::CoprimeShift { a, n, d } => to_value(&arith::minimal_coprime_shift(*a, *n, *d)?)?,
        Command::DeltaBound {
            degree,
            dimension,
            c,
            d,
            p,
            eps,
            doubled_x,
        } => {
            let mut params = BoundParams::new(*degree, *dimension, *c, *d, *p)?.with_eps(parse_rational(eps)?)?;
            if *doubled_x {
                params = params.with_x_variant(XVariant::Doubled);
            }
            to_value(&bounds::bound_report(&params, caps)?)?
        }
        Command::SigmaSet { degree, c, d, p } => {
            let params = BoundParams::new(*degree, 1, *c, *d, *p)?;
            let elements = bounds::sigma_set(&params, caps)?;
            json!({
                "N": bounds::capital_n(&params)?.to_string(),
                "c": c,
                "size": elements.len(),
                "elements": big_strings(&elements),
            })
        }
        Command::LangOrbit { n, g, c, point } => {
            let ambient = ModelAmbient::new(*n, *g)?;
            let orbit = torsion::lang_orbit(&ambient, point, *c)?;
            json!({
                "N": n,
                "g": g,
                "c": c,
                "point": point,
                "order": ambient.point_order(point),
                "orbit": orbit,
            })
        }
        Command::SpecialClosure { input } => {
            let inp: input::ClosureInput = read_json(input)?;
            let ambient = ModelAmbient::new(inp.n, inp.g)?;
            to_value(&torsion::special_closure(&ambient, &inp.points, inp.c, caps)?)?
        }
        Command::KeypropWitness { input } => {
            let inp: input::KeypropInput = read_json(input)?;
            let ambient = ModelAmbient::new(inp.n, inp.g)?;
            let cap = match &inp.delta_cap {
                Some(b) => b.to_big()?,
                None => BigUint::from(inp.n),
            };
            to_value(&torsion::keyprop_witness(&ambient, &inp.v, &inp.a, inp.c, &cap, caps)?)?
        }
        Command::GlVerify { input } => {
            let inp: input::GlInput = read_json(input)?;
            let group = orbit::generate_group(&inp.generators, inp.ell, inp.dim, caps)?;
            let lattice = SubspaceLattice::new(inp.ell, inp.dim, caps)?;
            let v = match &inp.v {
                Some(rows) => FSubspace::span(inp.ell, inp.dim, rows)?,
                None => FSubspace::full(inp.ell, inp.dim),
            };
            let vi = lattice
                .index_of(&v)
                .ok_or_else(|| Error::InvalidInput("V does not lie in F_l^dim".into()))?;
            let a: Vec<u32> = inp
                .a
                .iter()
                .map(|&x| x.rem_euclid(inp.ell as i64) as u32)
                .collect();
            let c = inp.c.as_ref().map(input::RationalIn::to_rational).transpose()?;
            let mut analyzer = OrbitAnalyzer::new(&group, &lattice)?;
            to_value(&analyzer.report(&a, vi, c.as_ref())?)?
        }
        Command::IdempotentLift { input } => {
            let inp: input::LiftInput = read_json(input)?;
            if inp.pi.is_some() {
                return Err(Error::InvalidInput(
                    "pi is only read by idempotent-lift-central".into(),
                ));
            }
            let prob = inp.build()?;
            let v = algebra::lift_idempotent(&prob.emb, &prob.rep, &prob.u, &prob.w)?;
            let dim = |x: &algebra::AlgebraElement| prob.rep.image(x).dim();
            json!({
                "v": to_value(&v)?,
                "image_dims": {
                    "w": dim(&prob.emb.apply(&prob.w)),
                    "v": dim(&prob.emb.apply(&v)),
                    "u": dim(&prob.u),
                },
            })
        }
        Command::IdempotentLiftCentral { input } => {
            let inp: input::LiftInput = read_json(input)?;
            let prob = inp.build()?;
            let pi = prob
                .pi
                .as_ref()
                .ok_or_else(|| Error::InvalidInput("idempotent-lift-central needs pi".into()))?;
            let v = algebra::lift_idempotent_central(&prob.emb, &prob.rep, pi, &prob.u, &prob.w)?;
            let pi_image = prob.rep.image(pi);
            let dim = |x: &algebra::AlgebraElement| prob.rep.image(x).sum(&pi_image).dim();
            json!({
                "v": to_value(&v)?,
                "image_dims": {
                    "w": dim(&prob.emb.apply(&prob.w)),
                    "v": dim(&prob.emb.apply(&v)),
                    "u": dim(&prob.u),
                    "pi": pi_image.dim(),
                },
            })
        }
        Command::Selftest { quick } => {
            let ac = AcceptanceConfig {
                seed: config.seed,
                caps: config.caps,
            };
            let jobs = if *quick {
                acceptance::quick_suite(&ac)
            } else {
                acceptance::full_suite(&ac)
            };
            let outcomes = acceptance::run_jobs(jobs);
            let failed: Vec<u32> = outcomes.iter().filter(|o| !o.passed).map(|o| o.id).collect();
            let report = json!({
                "seed": config.seed,
                "quick": quick,
                "passed": failed.is_empty(),
                "criteria": to_value(&outcomes)?,
            });
            let failure = (!failed.is_empty())
                .then(|| Error::Invariant(format!("acceptance criteria {failed:?} failed")));
            return Ok((report, failure));
        }
    };
    Ok((report, None))
}
