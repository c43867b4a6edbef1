//! Attraction diagnostics over a sampled run: ω̃, oscillation, distance
//! trends to the limiting soliton, and invariant checks.

use nalgebra::Vector3;
use serde::Serialize;
use spincharge::dynamics::DiagnosticsSeries;
use spincharge::kirchhoff::{drift_check, fit_power_law, DriftReport, InitialFieldSpec, PowerFit};
use spincharge::soliton::pi_invariant;
use spincharge::{Error, SystemModel, SystemState};

use crate::config::{InitialSpec, Scenario};
use crate::error::CliResult;

/// Required ratio between the maximum of a distance and its final-window value.
pub const REDUCTION_FACTOR: f64 = 10.0;
/// Largest accepted |ω(t_max) − ω̃(t_max)|.
pub const OMEGA_PLUS_TOL: f64 = 1e-3;
/// Fraction of samples forming the final window.
pub const FINAL_WINDOW: f64 = 0.1;
/// Distances below this throughout mark a stationary run.
pub const STATIONARY_TOL: f64 = 1e-9;
pub const H_DRIFT_TOL: f64 = 1e-6;
pub const PI_DRIFT_TOL: f64 = 1e-8;

/// π(Y)/I_eff, the soliton parameter whose invariant matches the state's.
pub fn omega_tilde(state: &SystemState, model: &SystemModel) -> Vector3<f64> {
    pi_invariant(state, model) / model.i_eff_grid()
}

/// sup over sample pairs with t ≥ T of |ω(t₁) − ω(t₂)|.
pub fn oscillation(series: &DiagnosticsSeries, t_from: f64) -> spincharge::Result<f64> {
    let tail: Vec<Vector3<f64>> = series
        .samples
        .iter()
        .filter(|s| s.t >= t_from)
        .map(|s| Vector3::from(s.omega))
        .collect();
    if tail.len() < 2 {
        return Err(Error::InsufficientSamples { need: 2, got: tail.len() });
    }
    let mut worst: f64 = 0.0;
    for (i, a) in tail.iter().enumerate() {
        for b in &tail[i + 1..] {
            worst = worst.max((a - b).norm());
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Trend {
    pub initial: f64,
    pub max: f64,
    pub t_of_max: f64,
    pub final_value: f64,
    /// Largest value over the final window of samples.
    pub final_window_max: f64,
    /// max / final_window_max.
    pub reduction: f64,
    pub reduced: bool,
    /// Fraction of consecutive sample pairs after the maximum that do not increase.
    pub monotone_fraction: f64,
}

impl Trend {
    pub fn of(ts: &[f64], values: &[f64]) -> Self {
        let n = values.len();
        let window = ((n as f64 * FINAL_WINDOW).ceil() as usize).clamp(1, n);
        let (imax, max) = values
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
        let final_window_max = values[n - window..].iter().copied().fold(0.0, f64::max);
        let reduction = if final_window_max > 0.0 {
            max / final_window_max
        } else {
            f64::INFINITY
        };
        let after = &values[imax..];
        let pairs = after.len().saturating_sub(1);
        let monotone_fraction = if pairs == 0 {
            1.0
        } else {
            after.windows(2).filter(|w| w[1] <= w[0]).count() as f64 / pairs as f64
        };
        Self {
            initial: values[0],
            max,
            t_of_max: ts[imax],
            final_value: values[n - 1],
            final_window_max,
            reduction,
            reduced: reduction >= REDUCTION_FACTOR,
            monotone_fraction,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttractionStatus {
    Stationary,
    Attracted,
    NotAttracted,
    /// ω(t_max) and ω̃(t_max) disagree beyond tolerance.
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
pub struct SeminormTrend {
    pub radius: f64,
    #[serde(flatten)]
    pub trend: Trend,
}

#[derive(Debug, Clone, Serialize)]
pub struct AttractionReport {
    pub status: AttractionStatus,
    pub attracted: bool,
    pub omega_plus: [f64; 3],
    pub omega_tilde_final: [f64; 3],
    pub omega_plus_discrepancy: f64,
    pub omega_distance: Trend,
    pub seminorms: Vec<SeminormTrend>,
    pub omega_dot: Trend,
    pub omega_dot_relaxed: bool,
    pub wrap_contaminated: bool,
}

/// ω₊ is the last sampled ω, cross-checked against ω̃ there.
pub fn attraction_report(series: &DiagnosticsSeries) -> spincharge::Result<AttractionReport> {
    let n = series.samples.len();
    if n < 2 {
        return Err(Error::InsufficientSamples { need: 2, got: n });
    }
    let ts = series.times();
    let last = &series.samples[n - 1];
    let omega_plus = Vector3::from(last.omega);
    let discrepancy = (omega_plus - Vector3::from(last.omega_tilde)).norm();
    let omega_dist: Vec<f64> = (0..n).map(|i| (series.omega(i) - omega_plus).norm()).collect();
    let omega_distance = Trend::of(&ts, &omega_dist);
    let seminorms: Vec<SeminormTrend> = series
        .radii
        .iter()
        .enumerate()
        .map(|(r, &radius)| {
            let d: Vec<f64> = (0..n).map(|i| series.distance_to(i, r, &omega_plus)).collect();
            SeminormTrend {
                radius,
                trend: Trend::of(&ts, &d),
            }
        })
        .collect();
    let omega_dot = Trend::of(&ts, &series.samples.iter().map(|s| s.omega_dot_norm).collect::<Vec<_>>());
    let omega_dot_relaxed = last.omega_dot_norm <= omega_dot.max / REDUCTION_FACTOR;
    let stationary =
        omega_distance.max <= STATIONARY_TOL && seminorms.iter().all(|s| s.trend.max <= STATIONARY_TOL);
    let status = if discrepancy > OMEGA_PLUS_TOL {
        AttractionStatus::Inconclusive
    } else if stationary {
        AttractionStatus::Stationary
    } else if omega_distance.reduced && seminorms.iter().all(|s| s.trend.reduced) && omega_dot_relaxed {
        AttractionStatus::Attracted
    } else {
        AttractionStatus::NotAttracted
    };
    Ok(AttractionReport {
        status,
        attracted: matches!(status, AttractionStatus::Attracted | AttractionStatus::Stationary),
        omega_plus: omega_plus.into(),
        omega_tilde_final: last.omega_tilde,
        omega_plus_discrepancy: discrepancy,
        omega_distance,
        seminorms,
        omega_dot,
        omega_dot_relaxed,
        wrap_contaminated: series.wrap_contaminated,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct InvariantSummary {
    pub h_rel_drift: f64,
    pub pi_rel_drift: f64,
    pub omega_norm_max: f64,
    pub omega_energy_bound: f64,
    pub violations: Vec<String>,
}

fn rel_drift(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let first = values.clone().next().unwrap_or(0.0);
    let scale = if first.abs() > 0.0 { first.abs() } else { 1.0 };
    values.map(|v| (v - first).abs() / scale).fold(0.0, f64::max)
}

pub fn check_invariants(series: &DiagnosticsSeries, osc: &[OscPoint]) -> InvariantSummary {
    let samples = &series.samples;
    let mut violations = Vec::new();
    let finite = samples.iter().all(|s| {
        s.omega.iter().chain(&s.omega_tilde).chain(&s.dist).all(|v| v.is_finite())
            && [s.t, s.omega_dot_norm, s.h, s.pi_norm].iter().all(|v| v.is_finite())
    });
    if !finite {
        violations.push("diagnostics columns must be finite".into());
    }
    if samples.windows(2).any(|w| w[1].t <= w[0].t) {
        violations.push("sample times must increase".into());
    }
    let h_rel_drift = rel_drift(samples.iter().map(|s| s.h));
    if !(h_rel_drift <= H_DRIFT_TOL) {
        violations.push(format!("energy drift {h_rel_drift:.3e} exceeds {H_DRIFT_TOL:e}"));
    }
    let pi_rel_drift = rel_drift(samples.iter().map(|s| s.pi_norm));
    if !(pi_rel_drift <= PI_DRIFT_TOL) {
        violations.push(format!("|omega_tilde| (Casimir |pi|) drift {pi_rel_drift:.3e} exceeds {PI_DRIFT_TOL:e}"));
    }
    if series.max_omega_norm > series.omega_bar * (1.0 + 1e-9) {
        violations.push(format!(
            "|omega| = {} exceeds the energy bound {}",
            series.max_omega_norm, series.omega_bar
        ));
    }
    if osc.windows(2).any(|w| w[1].osc > w[0].osc) {
        violations.push("oscillation must be nonincreasing in T".into());
    }
    InvariantSummary {
        h_rel_drift,
        pi_rel_drift,
        omega_norm_max: series.max_omega_norm,
        omega_energy_bound: series.omega_bar,
        violations,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OscPoint {
    #[serde(rename = "T")]
    pub t: f64,
    pub osc: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FarFieldSummary {
    pub sigma: f64,
    pub expected_exponent: f64,
    pub drift: Option<DriftReport>,
    /// log-log fit of |f(t)| over samples after the drift reference time.
    pub f_fit: Option<PowerFit>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub scenario: String,
    pub status: AttractionStatus,
    pub attraction: AttractionReport,
    pub oscillation: Vec<OscPoint>,
    pub invariants: InvariantSummary,
    pub far_field: Option<FarFieldSummary>,
    pub max_step_change: Option<f64>,
    pub wrap_contaminated: bool,
    pub warnings: Vec<String>,
}

pub fn build_report(s: &Scenario, series: &DiagnosticsSeries, far: Option<&InitialFieldSpec>) -> CliResult<Report> {
    let mut warnings = series.warnings.clone();
    let mut t_list = s.diagnostics.osc_t.clone();
    t_list.sort_by(f64::total_cmp);
    let oscillation = t_list
        .iter()
        .map(|&t| Ok(OscPoint { t, osc: oscillation(series, t)? }))
        .collect::<spincharge::Result<Vec<_>>>()?;
    let attraction = attraction_report(series)?;
    if series.wrap_contaminated {
        warnings.push("run is wrap-contaminated; attraction diagnostics are unreliable".into());
    }
    let invariants = check_invariants(series, &oscillation);
    let far_field = far.map(|init| {
        let t_ref = s.diagnostics.drift_t.unwrap_or(0.25 * s.integrator.t_max);
        let drift = drift_check(series, t_ref, init.sigma)
            .map_err(|e| warnings.push(format!("drift check skipped: {e}")))
            .ok();
        let (ts, fs): (Vec<f64>, Vec<f64>) = series
            .samples
            .iter()
            .filter(|x| x.t >= t_ref)
            .map(|x| (x.t, Vector3::from(x.f).norm()))
            .unzip();
        let f_fit = fit_power_law(&ts, &fs)
            .map_err(|e| warnings.push(format!("f(t) fit skipped: {e}")))
            .ok();
        FarFieldSummary {
            sigma: init.sigma,
            expected_exponent: -(1.0 + init.sigma),
            drift,
            f_fit,
        }
    });
    Ok(Report {
        scenario: s.initial.kind().to_string(),
        status: attraction.status,
        attraction,
        oscillation,
        invariants,
        far_field,
        max_step_change: matches!(s.initial, InitialSpec::Soliton { .. }).then_some(series.max_step_change),
        wrap_contaminated: series.wrap_contaminated,
        warnings,
    })
}
