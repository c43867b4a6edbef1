//! Builds the model and initial phase point of a scenario, runs it, and
//! writes the artifact directory.

use std::path::Path;

use nalgebra::Vector3;
use serde::Serialize;
use spincharge::dynamics::{self, wrap_cap, DiagnosticsSeries, RunOptions};
use spincharge::kirchhoff::{InitialFieldSpec, RotationalBlob};
use spincharge::soliton::{soliton_a, Perturbation};
use spincharge::{ChargeProfile, FieldState, SpectralGrid, SystemModel, SystemState};

use crate::config::{InitialSpec, Scenario};
use crate::error::{CliError, CliResult};
use crate::output;
use crate::report::{build_report, Report};

/// Spectral envelope scale of seeded perturbations.
pub const PERTURBATION_K0: f64 = 2.0;

pub fn build_model(s: &Scenario) -> CliResult<SystemModel> {
    let profile = ChargeProfile::from_spec(&s.profile)?;
    let grid = SpectralGrid::new(s.grid.n, s.grid.l)?;
    let model = if s.grid.allow_coarse {
        SystemModel::new_coarse(&profile, grid)?
    } else {
        SystemModel::new(&profile, grid).map_err(|e| CliError::Config(format!("{e}; set grid.allow_coarse to accept")))?
    };
    let cap = wrap_cap(&model);
    if s.integrator.t_max > cap && !s.allow_wrap {
        return Err(CliError::Config(format!(
            "t_max = {} exceeds the wrap cap (L - 2 R_rho)/2 = {cap}; set allow_wrap to override",
            s.integrator.t_max
        )));
    }
    s.integrator.validate(model.grid())?;
    Ok(model)
}

/// Free data of a far-field scenario, if any.
pub fn far_field_data(s: &Scenario) -> CliResult<Option<InitialFieldSpec>> {
    match s.initial {
        InitialSpec::FarField { sigma, amplitude, .. } => Ok(Some(InitialFieldSpec::far_field(sigma, amplitude)?)),
        _ => Ok(None),
    }
}

pub fn initial_state(s: &Scenario, model: &SystemModel) -> CliResult<SystemState> {
    let grid = model.grid();
    let v = Vector3::from;
    let state = match &s.initial {
        InitialSpec::Soliton { omega0 } => soliton_a(v(*omega0), model)?.state(),
        InitialSpec::PerturbedSoliton { omega0, amplitude, .. } => {
            let base = soliton_a(v(*omega0), model)?;
            let dy = Perturbation::random(model, PERTURBATION_K0, s.perturbation_seed(), *amplitude);
            SystemState::new(base.field.plus(&dy.field), base.omega + dy.omega)
        }
        InitialSpec::Kick { omega0, omega1 } => SystemState::new(soliton_a(v(*omega0), model)?.field, v(*omega1)),
        InitialSpec::FarField { omega0, omega1, .. } => {
            let data = far_field_data(s)?.expect("far-field scenario carries free data");
            let free = sample_blobs(grid, &[data.a0, data.pi0]);
            let base = soliton_a(v(*omega0), model)?;
            SystemState::new(base.field.plus(&free), v(omega1.unwrap_or(*omega0)))
        }
        InitialSpec::Custom { omega0, omega1, blobs } => {
            let init = blobs
                .iter()
                .map(|b| {
                    let g = InitialFieldSpec::gaussian(v(b.center), v(b.axis_a), v(b.axis_pi), b.width);
                    [g.a0, g.pi0]
                })
                .collect::<Vec<_>>();
            let mut free = FieldState::zeros(grid);
            for pair in &init {
                free = free.plus(&sample_blobs(grid, pair));
            }
            let base = soliton_a(v(*omega0), model)?;
            SystemState::new(base.field.plus(&free), v(omega1.unwrap_or(*omega0)))
        }
    };
    Ok(state)
}

fn sample_blobs(grid: &SpectralGrid, pair: &[Option<RotationalBlob>; 2]) -> FieldState {
    let [a0, pi0] = *pair;
    FieldState::sample(grid, |x| {
        (
            a0.map_or(Vector3::zeros(), |b| b.value(x)),
            pi0.map_or(Vector3::zeros(), |b| b.value(x)),
        )
    })
}

/// Everything a run produces, before any file is written.
#[derive(Debug)]
pub struct Outcome {
    pub scenario: Scenario,
    pub model: SystemModel,
    pub series: DiagnosticsSeries,
    pub final_state: SystemState,
    pub report: Report,
}

pub fn execute(s: &Scenario) -> CliResult<Outcome> {
    s.validate()?;
    let model = build_model(s)?;
    let state = initial_state(s, &model)?;
    let opts = RunOptions {
        sample_times: s.diagnostics.sample_times(s.integrator.t_max),
        radii: s.diagnostics.radii.clone(),
        track_step_change: matches!(s.initial, InitialSpec::Soliton { .. }),
    };
    let (final_state, series) = dynamics::run(state, &s.integrator, &model, &opts)?;
    let report = build_report(s, &series, far_field_data(s)?.as_ref())?;
    Ok(Outcome {
        scenario: s.clone(),
        model,
        series,
        final_state,
        report,
    })
}

#[derive(Debug, Serialize)]
struct Meta<'a> {
    config: &'a Scenario,
    versions: Versions,
    threads: usize,
    t_max: f64,
    steps: usize,
    wrap_cap: f64,
    wrap_contaminated: bool,
    model: ModelConstants,
    warnings: &'a [String],
}

#[derive(Debug, Serialize)]
struct Versions {
    spincharge: &'static str,
    spincharge_cli: &'static str,
}

#[derive(Debug, Serialize)]
pub struct ModelConstants {
    pub kappa0: f64,
    pub kappa0_grid: f64,
    pub i_bare: f64,
    pub i_eff: f64,
    pub i_eff_grid: f64,
}

impl ModelConstants {
    pub fn of(model: &SystemModel) -> Self {
        Self {
            kappa0: model.spectral().kappa0,
            kappa0_grid: model.kappa0_grid(),
            i_bare: model.inertia(),
            i_eff: model.spectral().i_eff,
            i_eff_grid: model.i_eff_grid(),
        }
    }
}

/// Runs the scenario and writes series.csv, report.json, meta.json and slice_z0.csv.
/// Invariant violations are reported after the artifacts are written.
pub fn run_scenario(s: &Scenario, out: &Path) -> CliResult<Outcome> {
    let outcome = execute(s)?;
    output::create_dir(out)?;
    output::write_series_csv(&out.join("series.csv"), &outcome.series)?;
    output::write_json(&out.join("report.json"), &outcome.report)?;
    let meta = Meta {
        config: s,
        versions: Versions {
            spincharge: spincharge::VERSION,
            spincharge_cli: env!("CARGO_PKG_VERSION"),
        },
        threads: rayon::current_num_threads(),
        t_max: s.integrator.t_max,
        steps: outcome.series.steps,
        wrap_cap: outcome.series.wrap_cap,
        wrap_contaminated: outcome.series.wrap_contaminated,
        model: ModelConstants::of(&outcome.model),
        warnings: &outcome.report.warnings,
    };
    output::write_json(&out.join("meta.json"), &meta)?;
    output::write_slice(&out.join("slice_z0.csv"), &outcome.final_state.field, outcome.model.grid())?;
    if !outcome.report.invariants.violations.is_empty() {
        return Err(CliError::Invariant(outcome.report.invariants.violations.clone()));
    }
    Ok(outcome)
}
