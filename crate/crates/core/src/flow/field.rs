// SPDX-License-Identifier: Apache-2.0

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Where a field is defined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Domain {
    Line,
    /// Open interval; either end may be infinite.
    Interval {
        lo: f64,
        hi: f64,
    },
    /// The line with one point removed.
    Punctured {
        at: f64,
    },
}

impl Domain {
    pub fn contains(&self, x: f64) -> bool {
        if !x.is_finite() {
            return false;
        }
        match *self {
            Domain::Line => true,
            Domain::Interval { lo, hi } => x > lo && x < hi,
            Domain::Punctured { at } => x != at,
        }
    }

    /// Finite boundary points, including a puncture.
    pub fn boundaries(&self) -> Vec<f64> {
        match *self {
            Domain::Line => vec![],
            Domain::Interval { lo, hi } => [lo, hi].into_iter().filter(|v| v.is_finite()).collect(),
            Domain::Punctured { at } => vec![at],
        }
    }

    /// Distance to the nearest finite boundary point.
    pub fn boundary_distance(&self, x: f64) -> f64 {
        self.boundaries().iter().map(|b| (x - b).abs()).fold(f64::INFINITY, f64::min)
    }

    /// True when `a` and `b` lie in the same connected piece of the domain.
    pub fn same_piece(&self, a: f64, b: f64) -> bool {
        match *self {
            Domain::Punctured { at } => self.contains(a) && self.contains(b) && (a - at).signum() == (b - at).signum(),
            _ => self.contains(a) && self.contains(b),
        }
    }
}

/// The built-in fields, kept so that closed forms and special constructions
/// can recognise them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum FieldKind {
    Constant(f64),
    Linear(f64),
    Quadratic(f64),
    Cubic(f64),
    /// `m/p` on `p ≠ 0`.
    Arrival {
        mass: f64,
    },
    /// `m/|p|` on `p ≠ 0`.
    OrientedArrival {
        mass: f64,
    },
    Custom,
}

/// A scalar vector field `X(x) ∂/∂x` on a 1-D domain.
#[derive(Clone)]
pub struct VectorField1D {
    x: ScalarFn,
    x_prime: Option<ScalarFn>,
    domain: Domain,
    label: String,
    kind: FieldKind,
}

impl fmt::Debug for VectorField1D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VectorField1D")
            .field("label", &self.label)
            .field("domain", &self.domain)
            .field("kind", &self.kind)
            .field("closed_form_derivative", &self.x_prime.is_some())
            .finish()
    }
}

impl VectorField1D {
    pub fn new<F>(label: impl Into<String>, domain: Domain, x: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self { x: Arc::new(x), x_prime: None, domain, label: label.into(), kind: FieldKind::Custom }
    }

    pub fn with_derivative<F>(mut self, x_prime: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        self.x_prime = Some(Arc::new(x_prime));
        self
    }

    fn tagged(mut self, kind: FieldKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn constant(c: f64) -> Self {
        let label = if c == 1.0 { "1".to_string() } else { format!("{c}") };
        Self::new(label, Domain::Line, move |_| c).with_derivative(|_| 0.0).tagged(FieldKind::Constant(c))
    }

    /// `a·x`.
    pub fn linear(a: f64) -> Self {
        Self::new(monomial_label(a, "x"), Domain::Line, move |x| a * x)
            .with_derivative(move |_| a)
            .tagged(FieldKind::Linear(a))
    }

    /// `a·x²`.
    pub fn quadratic(a: f64) -> Self {
        Self::new(monomial_label(a, "x^2"), Domain::Line, move |x| a * x * x)
            .with_derivative(move |x| 2.0 * a * x)
            .tagged(FieldKind::Quadratic(a))
    }

    /// `a·x³`.
    pub fn cubic(a: f64) -> Self {
        Self::new(monomial_label(a, "x^3"), Domain::Line, move |x| a * x * x * x)
            .with_derivative(move |x| 3.0 * a * x * x)
            .tagged(FieldKind::Cubic(a))
    }

    /// `m/p` on the punctured momentum line.
    pub fn arrival(mass: f64) -> Self {
        Self::new("m/p", Domain::Punctured { at: 0.0 }, move |p| mass / p)
            .with_derivative(move |p| -mass / (p * p))
            .tagged(FieldKind::Arrival { mass })
    }

    /// `m/|p|` on the punctured momentum line.
    pub fn oriented_arrival(mass: f64) -> Self {
        Self::new("m/|p|", Domain::Punctured { at: 0.0 }, move |p| mass / p.abs())
            .with_derivative(move |p| -mass * p.signum() / (p * p))
            .tagged(FieldKind::OrientedArrival { mass })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn kind(&self) -> FieldKind {
        self.kind
    }

    pub fn relabeled(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        (self.x)(x)
    }

    pub fn has_closed_form_derivative(&self) -> bool {
        self.x_prime.is_some()
    }

    /// `X'(x)`, by central differences when no closed form was given.
    pub fn derivative(&self, x: f64) -> f64 {
        match &self.x_prime {
            Some(d) => d(x),
            None => {
                let h = 1e-5 * x.abs().max(1.0);
                ((self.x)(x + h) - (self.x)(x - h)) / (2.0 * h)
            }
        }
    }
}

fn monomial_label(a: f64, m: &str) -> String {
    if a == 1.0 {
        m.to_string()
    } else {
        format!("{a}*{m}")
    }
}
