// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nalgebra::Vector3;
use serde::Serialize;
use serde_json::json;
use spincharge::charge::{check_nonresonance, m_rho_ball};
use spincharge::kirchhoff::{
    f_eval, fit_power_law, geometric_times, kirchhoff_free, InitialFieldSpec, KirchhoffQuadrature, SupportQuadrature,
};
use spincharge::soliton::{functionals, soliton_a};
use spincharge::{ChargeProfile, ProfileKind, ProfileSpec, SpectralGrid, SystemModel};
use spincharge_cli::config::load_profile;
use spincharge_cli::scenario::ModelConstants;
use spincharge_cli::{output, run_scenario, CliError, CliResult, Scenario};

/// Spinning extended charge coupled to the Maxwell field.
#[derive(Debug, Parser)]
#[command(name = "spincharge", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a scenario config and write series.csv, report.json, meta.json and slice_z0.csv.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Dotted key=value applied to the config, e.g. integrator.dt=5e-4.
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Worker threads; results do not depend on this.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Positive zeros of g, the non-resonance check and, for the ball, exceptional masses.
    Zeros {
        #[arg(long)]
        profile: PathBuf,
        #[arg(long)]
        mu_max: f64,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        /// Window for μ_j + μ_k = μ_ℓ coincidences.
        #[arg(long, default_value_t = 1e-6)]
        resonance_tol: f64,
    },
    /// Grid soliton for a given ω: slice CSV plus invariants.
    Soliton {
        #[arg(long, value_parser = parse_vec3)]
        omega: Vector3<f64>,
        #[arg(long)]
        profile: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 48)]
        n: usize,
        #[arg(long, default_value_t = 24.0)]
        l: f64,
        #[arg(long)]
        allow_coarse: bool,
    },
    /// Decay fits of the free field at the origin and of f(t) for far-field data.
    Decay {
        #[arg(long)]
        sigma: f64,
        #[arg(long, value_parser = parse_range)]
        t_range: (f64, f64),
        #[arg(long, default_value_t = 12)]
        points: usize,
        #[arg(long, value_parser = parse_vec3, default_value = "0,0,1")]
        omega: Vector3<f64>,
        /// Charge profile; the unit ball when omitted.
        #[arg(long)]
        profile: Option<PathBuf>,
    },
}

fn parse_vec3(s: &str) -> Result<Vector3<f64>, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("'{p}': {e}")))
        .collect::<Result<_, _>>()?;
    match v.as_slice() {
        [x, y, z] => Ok(Vector3::new(*x, *y, *z)),
        _ => Err(format!("expected x,y,z, got '{s}'")),
    }
}

fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected a,b, got '{s}'"))?;
    let a: f64 = a.trim().parse().map_err(|e| format!("'{a}': {e}"))?;
    let b: f64 = b.trim().parse().map_err(|e| format!("'{b}': {e}"))?;
    if !(a > 0.0 && b > a) {
        return Err(format!("need 0 < a < b, got {a},{b}"));
    }
    Ok((a, b))
}

/// A closed stdout (e.g. piped into `head`) is not an error.
fn print_json<T: Serialize>(value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Core(e.into()))?;
    match writeln!(std::io::stdout().lock(), "{text}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(CliError::Io {
            path: "<stdout>".into(),
            source: e,
        }),
        _ => Ok(()),
    }
}

fn cmd_run(config: &Path, out: &Path, overrides: &[String], threads: Option<usize>) -> CliResult<()> {
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    let scenario = Scenario::load(config, overrides)?;
    let result = run_scenario(&scenario, out);
    match &result {
        Ok(o) => {
            let r = &o.report;
            println!(
                "{}: status {:?}, H drift {:.3e}, |pi| drift {:.3e}, outputs in {}",
                r.scenario,
                r.status,
                r.invariants.h_rel_drift,
                r.invariants.pi_rel_drift,
                out.display()
            );
            for w in &r.warnings {
                eprintln!("warning: {w}");
            }
        }
        Err(CliError::Invariant(_)) => eprintln!("artifacts written to {}", out.display()),
        Err(_) => {}
    }
    result.map(|_| ())
}

fn cmd_zeros(profile: &Path, mu_max: f64, tol: f64, resonance_tol: f64) -> CliResult<()> {
    let spec = load_profile(profile)?;
    let p = ChargeProfile::from_spec(&spec)?;
    let zeros = p.g_zeros(mu_max, tol)?;
    let nonresonance = check_nonresonance(&zeros, resonance_tol);
    let masses = (spec.kind == ProfileKind::UniformBall).then(|| m_rho_ball(&zeros)).transpose()?;
    for w in &zeros.warnings {
        eprintln!("warning: {w}");
    }
    print_json(&json!({ "zeros": zeros, "nonresonance": nonresonance, "m_rho": masses }))
}

fn cmd_soliton(omega: Vector3<f64>, profile: &Path, out: &Path, n: usize, l: f64, allow_coarse: bool) -> CliResult<()> {
    let spec: ProfileSpec = load_profile(profile)?;
    let p = ChargeProfile::from_spec(&spec)?;
    let grid = SpectralGrid::new(n, l)?;
    let model = if allow_coarse {
        SystemModel::new_coarse(&p, grid)?
    } else {
        SystemModel::new(&p, grid).map_err(|e| CliError::Config(format!("{e}; pass --allow-coarse to accept")))?
    };
    let s = soliton_a(omega, &model)?;
    output::create_dir(out)?;
    output::write_slice(&out.join("slice_z0.csv"), &s.field, model.grid())?;
    let summary = json!({
        "omega": [omega[0], omega[1], omega[2]],
        "profile": spec,
        "grid": { "N": n, "L": l },
        "functionals": functionals(&omega, &s.state(), &model),
        "constants": ModelConstants::of(&model),
        "warnings": model.warnings(),
    });
    output::write_json(&out.join("soliton.json"), &summary)?;
    print_json(&summary)
}

fn cmd_decay(sigma: f64, (a, b): (f64, f64), points: usize, omega: Vector3<f64>, profile: Option<&Path>) -> CliResult<()> {
    let init = InitialFieldSpec::far_field(sigma, 1.0)?;
    let p = match profile {
        Some(path) => ChargeProfile::from_spec(&load_profile(path)?)?,
        None => ChargeProfile::uniform_ball(1.0, 1.0, 1.0)?,
    };
    let kq = KirchhoffQuadrature::new(16);
    let sq = SupportQuadrature::new(&p, 6, 6, KirchhoffQuadrature::new(16));
    let ts = geometric_times(a, b, points);
    let mut free = Vec::with_capacity(ts.len());
    let mut f = Vec::with_capacity(ts.len());
    for &t in &ts {
        let ff = kirchhoff_free(&Vector3::zeros(), t, &init, &kq)?;
        free.push(ff.grad_a.norm() + ff.pi.norm());
        f.push(f_eval(t, &init, &omega, &p, &sq)?.norm());
    }
    let samples: Vec<_> = ts
        .iter()
        .zip(free.iter().zip(&f))
        .map(|(t, (g, fv))| json!({ "t": t, "free_field": g, "f": fv }))
        .collect();
    print_json(&json!({
        "sigma": sigma,
        "expected_exponent": -(1.0 + sigma),
        "free_field_fit": fit_power_law(&ts, &free)?,
        "f_fit": fit_power_law(&ts, &f)?,
        "samples": samples,
    }))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run {
            config,
            out,
            overrides,
            threads,
        } => cmd_run(config, out, overrides, *threads),
        Command::Zeros {
            profile,
            mu_max,
            tol,
            resonance_tol,
        } => cmd_zeros(profile, *mu_max, *tol, *resonance_tol),
        Command::Soliton {
            omega,
            profile,
            out,
            n,
            l,
            allow_coarse,
        } => cmd_soliton(*omega, profile, out, *n, *l, *allow_coarse),
        Command::Decay {
            sigma,
            t_range,
            points,
            omega,
            profile,
        } => cmd_decay(*sigma, *t_range, *points, *omega, profile.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
