// SPDX-License-Identifier: Apache-2.0

//! Shared fixtures for the benchmarks.

use arrtime_core::{gaussian_packet, Grid1D, PhysicalParams, WaveFunction};

/// Right-moving reference packet on `n` points over `[-200, 200)`.
pub fn reference_packet(n: usize) -> WaveFunction {
    let grid = Grid1D::spanning(-200.0, 200.0, n).expect("grid");
    gaussian_packet(grid, PhysicalParams::natural(), -50.0, 2.0, 0.2).expect("packet")
}
