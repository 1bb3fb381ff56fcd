// SPDX-License-Identifier: Apache-2.0

//! Flows of 1-D vector fields and their lift to wave functions.

mod classify;
mod field;
mod integrate;
mod lie;
mod plug;
mod straighten;
mod transport;

pub use classify::{classify_flow, FlowClass, FlowDiagnostics, FlowVerdict, ProbeSpec};
pub use field::{Domain, FieldKind, VectorField1D};
pub use integrate::{
    flow_with_jacobian, integrate_flow, integrate_flow_with, Endpoint, EscapeKind, FlowOptions, FlowResult,
    DEFAULT_ESCAPE_RADIUS,
};
pub use lie::{lie_derivative, quantized_observable, ROUGHNESS_LIMIT};
pub use plug::pluggable_transport;
pub use straighten::{straighten, Straightening};
pub use transport::{transport, transport_complete, CompleteField};
