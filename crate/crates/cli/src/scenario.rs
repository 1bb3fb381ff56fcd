// SPDX-License-Identifier: Apache-2.0

//! Scenario files: one JSON document per run. Unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use arrtime_core::arrival::BackflowSpec;
use arrtime_core::classical::Bins;
use arrtime_core::flow::{straighten, Domain, ProbeSpec, VectorField1D};
use arrtime_core::{gaussian_packet, Complex64, Grid1D, PhysicalParams, WaveFunction};

use crate::error::CliError;
use crate::expr::Expr;

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub params: Params,
    #[serde(default)]
    pub packet: Option<PacketSpec>,
    #[serde(default)]
    pub x_grid: Option<GridSpec>,
    #[serde(default)]
    pub t_grid: Option<GridSpec>,
    #[serde(default)]
    pub field: Option<FieldSpec>,
    #[serde(default)]
    pub probe: ProbeSpec,
    #[serde(default)]
    pub classical: Option<ClassicalSpec>,
    #[serde(default)]
    pub backflow: Option<BackflowScenario>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub hbar: f64,
    pub mass: f64,
}

impl Default for Params {
    fn default() -> Self {
        Self { hbar: 1.0, mass: 1.0 }
    }
}

/// Uniform grid of `count` points starting at `lo` with spacing
/// `(hi - lo) / count`.
#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl GridSpec {
    pub fn grid(&self) -> Result<Grid1D, CliError> {
        Ok(Grid1D::spanning(self.lo, self.hi, self.count)?)
    }
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Component {
    pub center_x: f64,
    pub center_p: f64,
    pub sigma_p: f64,
    #[serde(default = "one")]
    pub amplitude: f64,
    #[serde(default)]
    pub phase: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum PacketSpec {
    Gaussian {
        center_x: f64,
        center_p: f64,
        sigma_p: f64,
    },
    Superposition {
        components: Vec<Component>,
    },
    /// A single phase-space point; classical runs only.
    Point {
        x: f64,
        p: f64,
    },
}

impl PacketSpec {
    pub fn components(&self) -> Result<Vec<Component>, CliError> {
        match self {
            PacketSpec::Gaussian { center_x, center_p, sigma_p } => Ok(vec![Component {
                center_x: *center_x,
                center_p: *center_p,
                sigma_p: *sigma_p,
                amplitude: 1.0,
                phase: 0.0,
            }]),
            PacketSpec::Superposition { components } if !components.is_empty() => Ok(components.clone()),
            PacketSpec::Superposition { .. } => {
                Err(CliError::Config("superposition needs at least one component".into()))
            }
            PacketSpec::Point { .. } => Err(CliError::Config("a point packet has no wave function".into())),
        }
    }

    /// Normalized sum of the components on `grid`.
    pub fn wave_function(&self, grid: Grid1D, params: PhysicalParams) -> Result<WaveFunction, CliError> {
        let mut total: Option<WaveFunction> = None;
        for c in self.components()? {
            let g = gaussian_packet(grid, params, c.center_x, c.center_p, c.sigma_p)?
                .scaled(Complex64::from_polar(c.amplitude, c.phase));
            total = Some(match total {
                None => g,
                Some(t) => t.add(&g)?,
            });
        }
        Ok(total.expect("at least one component").normalized()?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldName {
    Const,
    X,
    X2,
    X3,
    Arrival,
    OrientedArrival,
    Expression,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    pub kind: FieldName,
    /// Constant value or monomial coefficient; defaults to 1.
    #[serde(default)]
    pub coefficient: Option<f64>,
    /// Only for `expression`.
    #[serde(default)]
    pub expr: Option<String>,
    /// Only for `expression`; defaults to the whole line.
    #[serde(default)]
    pub domain: Option<Domain>,
    /// Replace the field by its straightened form `∂/∂s`.
    #[serde(default)]
    pub straightened: bool,
    /// Reference point for straightening.
    #[serde(default)]
    pub x_ref: f64,
}

impl FieldSpec {
    pub fn build(&self, params: PhysicalParams) -> Result<VectorField1D, CliError> {
        let c = self.coefficient.unwrap_or(1.0);
        if self.kind != FieldName::Expression && (self.expr.is_some() || self.domain.is_some()) {
            return Err(CliError::Config("'expr' and 'domain' apply to expression fields only".into()));
        }
        let mass = params.mass();
        let field = match self.kind {
            FieldName::Const => VectorField1D::constant(c),
            FieldName::X => VectorField1D::linear(c),
            FieldName::X2 => VectorField1D::quadratic(c),
            FieldName::X3 => VectorField1D::cubic(c),
            FieldName::Arrival | FieldName::OrientedArrival if self.coefficient.is_some() => {
                return Err(CliError::Config("arrival fields take the mass from params".into()))
            }
            FieldName::Arrival => VectorField1D::arrival(mass),
            FieldName::OrientedArrival => VectorField1D::oriented_arrival(mass),
            FieldName::Expression => {
                let src =
                    self.expr.as_deref().ok_or_else(|| CliError::Config("expression field needs 'expr'".into()))?;
                let e = Expr::parse(src).map_err(|err| CliError::Config(format!("expression '{src}': {err}")))?;
                if self.coefficient.is_some() {
                    return Err(CliError::Config("expression fields take no coefficient".into()));
                }
                VectorField1D::new(src, self.domain.unwrap_or(Domain::Line), move |x| e.eval(x))
            }
        };
        if self.straightened {
            let label = format!("d/ds [{}]", field.label());
            return Ok(straighten(&field, self.x_ref)?.straightened()?.relabeled(label));
        }
        Ok(field)
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ClassicalSpec {
    pub samples: usize,
    pub times: Vec<f64>,
    pub p_bins: Bins,
    /// Bins for the quantum comparison; defaults to `p_bins`.
    #[serde(default)]
    pub quantum_p_bins: Option<Bins>,
    #[serde(default)]
    pub x0: f64,
}

/// Backflow packet and scan window. Packet parameters left out take the
/// library defaults.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct BackflowScenario {
    #[serde(default)]
    pub p1: Option<f64>,
    #[serde(default)]
    pub p2: Option<f64>,
    #[serde(default)]
    pub a1: Option<f64>,
    #[serde(default)]
    pub a2: Option<f64>,
    #[serde(default)]
    pub rel_phase: Option<f64>,
    #[serde(default)]
    pub sigma: Option<f64>,
    pub x_lo: f64,
    pub x_hi: f64,
    /// Scan times; `hi` is included.
    pub times: GridSpec,
}

impl BackflowScenario {
    pub fn spec(&self) -> BackflowSpec {
        let d = BackflowSpec::default();
        BackflowSpec {
            p1: self.p1.unwrap_or(d.p1),
            p2: self.p2.unwrap_or(d.p2),
            a1: self.a1.unwrap_or(d.a1),
            a2: self.a2.unwrap_or(d.a2),
            rel_phase: self.rel_phase.unwrap_or(d.rel_phase),
            sigma: self.sigma.unwrap_or(d.sigma),
        }
    }

    pub fn scan_times(&self) -> Result<Vec<f64>, CliError> {
        let GridSpec { lo, hi, count } = self.times;
        if count < 2 || !(hi > lo) {
            return Err(CliError::Config("backflow times need hi > lo and count >= 2".into()));
        }
        Ok((0..count).map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64).collect())
    }
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let s: Scenario =
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        if s.name.trim().is_empty() {
            return Err(CliError::Config("scenario name is empty".into()));
        }
        Ok(s)
    }

    pub fn params(&self) -> Result<PhysicalParams, CliError> {
        Ok(PhysicalParams::new(self.params.hbar, self.params.mass)?)
    }

    pub fn require<'a, T>(&self, v: &'a Option<T>, key: &str) -> Result<&'a T, CliError> {
        v.as_ref().ok_or_else(|| CliError::Config(format!("scenario '{}' has no '{key}' section", self.name)))
    }
}
