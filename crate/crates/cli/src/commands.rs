// SPDX-License-Identifier: Apache-2.0

use serde::Serialize;

use arrtime_core::arrival::{
    arrival_amplitude_fast, arrival_amplitude_quadrature, arrival_distribution, arrival_moments, backflow_scan,
    default_time_grid, make_backflow_packet, negative_momentum_mass, Component, Moments,
};
use arrtime_core::classical::{
    l1_distance, momentum_density_histogram, momentum_from_position_limit, momentum_histogram, quantum_momentum_limit,
    Histogram, PhaseSpaceEnsemble,
};
use arrtime_core::flow::{classify_flow, FlowResult};
use arrtime_core::transforms::to_momentum;
use arrtime_core::{Error, Grid1D};

use crate::error::CliError;
use crate::output::OutDir;
use crate::scenario::{PacketSpec, Scenario};

/// Default number of arrival-time samples.
const DEFAULT_T_COUNT: usize = 1024;

#[derive(Serialize)]
struct FlowReport<'a> {
    scenario: &'a str,
    field: String,
    class: String,
    lost_mass_fraction: f64,
    gap_measure: f64,
    invariant_components: usize,
    escape_samples: Vec<FlowResult>,
}

pub fn flow_classify(s: &Scenario, out: &mut OutDir) -> Result<(), CliError> {
    let field = s.require(&s.field, "field")?.build(s.params()?)?;
    let (report, failure) = match classify_flow(&field, &s.probe) {
        Ok(c) => (
            FlowReport {
                scenario: &s.name,
                field: field.label().to_string(),
                class: format!("{:?}", c.verdict),
                lost_mass_fraction: c.diagnostics.lost_mass_fraction,
                gap_measure: c.diagnostics.gap_measure,
                invariant_components: c.diagnostics.invariant_components,
                escape_samples: c.escape_samples,
            },
            None,
        ),
        Err(e @ Error::InconclusiveClassification { lost_mass_fraction, gap_measure, invariant_components }) => (
            FlowReport {
                scenario: &s.name,
                field: field.label().to_string(),
                class: "Inconclusive".into(),
                lost_mass_fraction,
                gap_measure,
                invariant_components,
                escape_samples: Vec::new(),
            },
            Some(e),
        ),
        Err(e) => return Err(e.into()),
    };
    out.json("flow_classify.json", &report)?;
    println!("{}: {}", report.field, report.class);
    match failure {
        Some(e) => Err(e.into()),
        None => Ok(()),
    }
}

#[derive(Serialize)]
struct ArrivalSummary<'a> {
    scenario: &'a str,
    t_lo: f64,
    t_step: f64,
    t_count: usize,
    w_plus: f64,
    w_minus: f64,
    #[serde(rename = "mean_T_plus")]
    mean_t_plus: Option<f64>,
    #[serde(rename = "var_T_plus")]
    var_t_plus: Option<f64>,
    #[serde(rename = "mean_T_minus")]
    mean_t_minus: Option<f64>,
    #[serde(rename = "var_T_minus")]
    var_t_minus: Option<f64>,
    /// Left-mover arrival time in the physical convention, `-mean_T_minus`.
    mean_arrival_minus: Option<f64>,
    norm_defect: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle_l_inf: Option<f64>,
}

fn optional_moments(r: Result<Moments, Error>) -> Result<Option<Moments>, CliError> {
    match r {
        Ok(m) => Ok(Some(m)),
        Err(Error::ZeroWeightComponent(_)) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

pub fn arrival(s: &Scenario, oracle: bool, out: &mut OutDir) -> Result<(), CliError> {
    let params = s.params()?;
    let x_grid = s.require(&s.x_grid, "x_grid")?.grid()?;
    let psi = s.require(&s.packet, "packet")?.wave_function(x_grid, params)?;
    let gt = match &s.t_grid {
        Some(g) => g.grid()?,
        None => default_time_grid(&psi, DEFAULT_T_COUNT)?,
    };
    let dist = arrival_distribution(&psi, &gt)?;
    let plus = optional_moments(arrival_moments(&dist, Component::Plus))?;
    let minus = optional_moments(arrival_moments(&dist, Component::Minus))?;
    let oracle_l_inf = if oracle {
        let tilde = to_momentum(&psi)?;
        let (fast, _) = arrival_amplitude_fast(&tilde, &gt)?;
        let quad = arrival_amplitude_quadrature(&tilde, &gt)?;
        let peak = quad.values().iter().map(|v| v.norm()).fold(0.0, f64::max);
        let diff = fast.values().iter().zip(quad.values()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        Some(if peak > 0.0 { diff / peak } else { diff })
    } else {
        None
    };
    out.csv(
        "arrival.csv",
        &["T", "total", "plus", "minus", "interference"],
        (0..gt.count()).map(|i| vec![gt.point(i), dist.total[i], dist.plus[i], dist.minus[i], dist.interference[i]]),
    )?;
    let summary = ArrivalSummary {
        scenario: &s.name,
        t_lo: gt.origin(),
        t_step: gt.step(),
        t_count: gt.count(),
        w_plus: dist.weights.w_plus,
        w_minus: dist.weights.w_minus,
        mean_t_plus: plus.map(|m| m.mean),
        var_t_plus: plus.map(|m| m.variance),
        mean_t_minus: minus.map(|m| m.mean),
        var_t_minus: minus.map(|m| m.variance),
        mean_arrival_minus: minus.map(|m| -m.mean),
        norm_defect: dist.norm_defect,
        oracle_l_inf,
    };
    out.json("arrival.json", &summary)?;
    Ok(())
}

#[derive(Serialize)]
struct LimitPoint {
    t: f64,
    l1_error: f64,
}

#[derive(Serialize)]
struct LimitSummary<'a> {
    scenario: &'a str,
    seed: u64,
    samples: usize,
    ensemble: Vec<LimitPoint>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    quantum: Vec<LimitPoint>,
}

fn limit_csv(out: &mut OutDir, name: &str, exact: &Histogram, limit: &Histogram) -> Result<(), CliError> {
    let (e, l) = (exact.density(), limit.density());
    out.csv(
        name,
        &["p", "mu_exact", "mu_limit", "abs_err"],
        (0..exact.bins.count).map(|i| vec![exact.bins.center(i), e[i], l[i], (e[i] - l[i]).abs()]),
    )
}

pub fn classical_limit(s: &Scenario, seed: u64, out: &mut OutDir) -> Result<(), CliError> {
    let spec = s.require(&s.classical, "classical")?;
    if spec.times.is_empty() {
        return Err(CliError::Config("classical.times is empty".into()));
    }
    let params = s.params()?;
    let packet = s.require(&s.packet, "packet")?;
    let ensemble = match packet {
        PacketSpec::Point { x, p } => PhaseSpaceEnsemble::point(*x, *p, params),
        PacketSpec::Gaussian { center_x, center_p, sigma_p } => {
            let sigma_x = params.hbar() / (2.0 * sigma_p);
            PhaseSpaceEnsemble::gaussian(spec.samples, *center_x, sigma_x, *center_p, *sigma_p, params, seed)?
        }
        PacketSpec::Superposition { .. } => {
            return Err(CliError::Config("classical-limit needs a gaussian or point packet".into()))
        }
    };
    let mu = momentum_histogram(&ensemble, spec.p_bins);
    let mut summary =
        LimitSummary { scenario: &s.name, seed, samples: ensemble.len(), ensemble: Vec::new(), quantum: Vec::new() };
    for &t in &spec.times {
        let lim = momentum_from_position_limit(&ensemble, spec.x0, t, spec.p_bins)?;
        limit_csv(out, &format!("ensemble_t{t}.csv"), &mu, &lim)?;
        summary.ensemble.push(LimitPoint { t, l1_error: l1_distance(&lim, &mu)? });
    }
    if !matches!(packet, PacketSpec::Point { .. }) {
        let grid = s.require(&s.x_grid, "x_grid")?.grid()?;
        let psi = packet.wave_function(grid, params)?;
        let bins = spec.quantum_p_bins.unwrap_or(spec.p_bins);
        let exact = momentum_density_histogram(&psi, bins)?;
        for &t in &spec.times {
            let lim = quantum_momentum_limit(&psi, spec.x0, t, bins)?;
            limit_csv(out, &format!("quantum_t{t}.csv"), &exact, &lim)?;
            summary.quantum.push(LimitPoint { t, l1_error: l1_distance(&lim, &exact)? });
        }
    }
    out.json("classical_limit.json", &summary)?;
    Ok(())
}

#[derive(Serialize)]
struct BackflowSummary<'a> {
    scenario: &'a str,
    min_current: f64,
    argmin_x: f64,
    argmin_t: f64,
    negative_momentum_mass: f64,
}

pub fn backflow(s: &Scenario, out: &mut OutDir) -> Result<(), CliError> {
    let b = s.require(&s.backflow, "backflow")?;
    let grid: Grid1D = s.require(&s.x_grid, "x_grid")?.grid()?;
    let psi = make_backflow_packet(grid, s.params()?, &b.spec())?;
    let leak = negative_momentum_mass(&to_momentum(&psi)?);
    let times = b.scan_times()?;
    let scan = backflow_scan(&psi, &times, b.x_lo, b.x_hi)?;
    let nx = scan.xs.len();
    out.csv(
        "backflow.csv",
        &["t", "x", "j"],
        scan.current.iter().enumerate().map(|(k, j)| vec![scan.times[k / nx], scan.xs[k % nx], *j]),
    )?;
    out.json(
        "backflow.json",
        &BackflowSummary {
            scenario: &s.name,
            min_current: scan.min_current,
            argmin_x: scan.argmin_x,
            argmin_t: scan.argmin_t,
            negative_momentum_mass: leak,
        },
    )?;
    Ok(())
}
