#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hadamard::format::{self, CycleFile};
use hadamard::geometry::JacobiField;
use hadamard::{bundled, cycles, filling, Error, Manifold, MassOptions, Structure};

/// Explicit linear isoperimetric fillings on homogeneous Hadamard manifolds.
#[derive(Parser)]
#[command(name = "hadamard", version)]
struct Cli {
    /// Worker threads for mass evaluation (overrides HADAMARD_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the structure constants and metric of a manifold spec.
    Validate {
        /// Spec file, or the name of a bundled spec.
        spec: String,
    },
    /// Compute the block decomposition, the cone and the growth rate.
    Decompose {
        spec: String,
        #[command(flatten)]
        structure: StructureArgs,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Tabulate |y(t)| for the Jacobi field y(t) = tξ + Ad(exp(-tH))X as CSV.
    Probe {
        spec: String,
        /// Geodesic direction H in a, comma separated.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        h: Vec<f64>,
        /// X in n, comma separated.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        x: Vec<f64>,
        /// ξ in a, comma separated (default zero).
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        xi: Vec<f64>,
        #[arg(long, default_value_t = 20)]
        steps: usize,
        #[command(flatten)]
        structure: StructureArgs,
    },
    /// Fill a cycle and write the filling report.
    Fill {
        spec: String,
        cycle: PathBuf,
        #[command(flatten)]
        structure: StructureArgs,
        #[command(flatten)]
        fill: FillArgs,
        /// Write the report here instead of stdout.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Fill chart dilations of a cycle and emit the ratios as CSV.
    Sweep {
        spec: String,
        cycle: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "1,10,100")]
        scales: Vec<f64>,
        #[command(flatten)]
        structure: StructureArgs,
        #[command(flatten)]
        fill: FillArgs,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Write a generated test cycle.
    Cycle {
        #[command(subcommand)]
        kind: CycleKind,
        #[arg(long, global = true)]
        output: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum CycleKind {
    /// Geodesic circle in the hyperbolic plane.
    Circle {
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        #[arg(long, default_value_t = 256)]
        vertices: usize,
    },
    /// Product of two circles in H2 x H2.
    Torus {
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        #[arg(long, default_value_t = 8)]
        grid: usize,
    },
    /// Closed loop in the complex hyperbolic plane.
    Ch2Loop {
        #[arg(long, default_value_t = 64)]
        vertices: usize,
    },
}

#[derive(Args)]
struct StructureArgs {
    /// Cone margin in (0, 1).
    #[arg(long, default_value_t = 0.5)]
    margin: f64,
    /// Seed of the multi-start ascent.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct FillArgs {
    /// Clearance of the translated cycle from M0 x N.
    #[arg(long, default_value_t = 10.0)]
    rho: f64,
    /// Relative quadrature tolerance.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// Subdivision depth cap.
    #[arg(long, default_value_t = 8)]
    depth: u32,
    /// Cylinder layers.
    #[arg(long, default_value_t = 8)]
    layers: usize,
}

impl FillArgs {
    fn config(&self) -> Result<filling::FillConfig, Error> {
        if !(self.rho > 0.0) || !(self.tol > 0.0) {
            return Err(Error::InvalidArgument("rho and tol must be positive".into()));
        }
        Ok(filling::FillConfig {
            rho: self.rho,
            mass: MassOptions {
                tol: self.tol,
                depth_cap: self.depth,
                ..MassOptions::default()
            },
            layers: self.layers,
        })
    }
}

fn load_manifold(spec: &str) -> Result<Manifold, Error> {
    let path = Path::new(spec);
    let parsed = if path.exists() {
        format::load_spec(path)?
    } else if let Ok(s) = bundled::spec(spec) {
        s
    } else {
        return Err(Error::InvalidArgument(format!(
            "{spec}: no such file and no bundled spec of that name ({})",
            bundled::SPEC_NAMES.join(", ")
        )));
    };
    Manifold::new(parsed)
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Error> {
    match out {
        Some(p) => fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn probe_csv(m: &Manifold, s: &Structure, h: Vec<f64>, x: Vec<f64>, xi: Vec<f64>, steps: usize) -> Result<String, Error> {
    let xi = if xi.is_empty() { vec![0.0; m.dim_a()] } else { xi };
    for (name, v, len) in [("h", &h, m.dim_a()), ("xi", &xi, m.dim_a()), ("x", &x, m.dim_n())] {
        if v.len() != len {
            return Err(Error::InvalidArgument(format!("--{name} needs {len} components, got {}", v.len())));
        }
    }
    if steps == 0 {
        return Err(Error::InvalidArgument("--steps must be positive".into()));
    }
    let field = JacobiField {
        h,
        xi,
        x,
        m0_vel: vec![0.0; m.dim_m0()],
    };
    let mut out = String::from("t,norm,half_dnorm2_dt\n");
    for i in 0..=steps {
        let t = i as f64 / steps as f64;
        out.push_str(&format!(
            "{},{},{}\n",
            hadamard::report::fmt_f64(t),
            hadamard::report::fmt_f64(field.norm_at(m, t)),
            hadamard::report::fmt_f64(hadamard::geometry::jacobi_norm_sq_derivative(m, &s.dec, &field, t)),
        ));
    }
    Ok(out)
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Validate { spec } => {
            let path = Path::new(&spec);
            let parsed = if path.exists() { format::load_spec(path)? } else { bundled::spec(&spec)? };
            let report = parsed.validate();
            print!("{}", report.to_text());
            Ok(if report.accepted() { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Decompose { spec, structure, output } => {
            let m = load_manifold(&spec)?;
            let s = Structure::new(&m, structure.margin, structure.seed)?;
            emit(output.as_deref(), &s.to_text(&m))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Probe {
            spec,
            h,
            x,
            xi,
            steps,
            structure,
        } => {
            let m = load_manifold(&spec)?;
            let s = Structure::new(&m, structure.margin, structure.seed)?;
            print!("{}", probe_csv(&m, &s, h, x, xi, steps)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Fill {
            spec,
            cycle,
            structure,
            fill,
            report,
        } => {
            let m = load_manifold(&spec)?;
            let s = Structure::new(&m, structure.margin, structure.seed)?;
            let z = format::load_cycle(&cycle, &m)?.to_chain(&m)?;
            let f = filling::fill(&m, &s, &z, &fill.config()?)?;
            emit(report.as_deref(), &f.report.to_text())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep {
            spec,
            cycle,
            scales,
            structure,
            fill,
            output,
        } => {
            let m = load_manifold(&spec)?;
            let s = Structure::new(&m, structure.margin, structure.seed)?;
            let c = format::load_cycle(&cycle, &m)?;
            let sweep = filling::verify_theorem(&m, &s, &c, &scales, &fill.config()?)?;
            emit(output.as_deref(), &sweep.to_csv())?;
            eprintln!(
                "empirical constant {}, drift {}",
                hadamard::report::fmt_f64(sweep.empirical_constant),
                sweep.drift
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Cycle { kind, output } => {
            let c: CycleFile = match kind {
                CycleKind::Circle { radius, vertices } => cycles::h2_circle(radius, vertices),
                CycleKind::Torus { radius, grid } => cycles::h2xh2_torus(radius, radius, grid),
                CycleKind::Ch2Loop { vertices } => cycles::ch2_loop(vertices),
            };
            emit(output.as_deref(), &format::emit_cycle(&c))?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn threads(flag: Option<usize>) -> Option<usize> {
    flag.or_else(|| std::env::var("HADAMARD_THREADS").ok()?.trim().parse().ok())
        .filter(|&n| n > 0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = threads(cli.threads) {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numeric() { 2 } else { 1 })
        }
    }
}
