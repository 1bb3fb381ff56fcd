// SPDX-License-Identifier: Apache-2.0

//! Classical free-particle ensembles on the `(x, p)` plane, their marginals,
//! and the large-time limits that recover the momentum distribution from
//! the position density.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid1D, PhysicalParams, Representation, WaveFunction};
use crate::interp::amp_phase_cubic;
use crate::sum::pairwise;
use crate::transforms::{evolve_free, to_momentum, to_position_on};

/// Default lower bound on `|p|` for the arrival oracle.
pub const DEFAULT_MOMENTUM_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseSample {
    pub x: f64,
    pub p: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSpaceEnsemble {
    samples: Vec<PhaseSample>,
    params: PhysicalParams,
}

impl PhaseSpaceEnsemble {
    /// Rescales the weights to unit sum.
    pub fn new(samples: Vec<PhaseSample>, params: PhysicalParams) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidParameter("empty ensemble".into()));
        }
        if let Some(s) =
            samples.iter().find(|s| !(s.x.is_finite() && s.p.is_finite() && s.weight >= 0.0 && s.weight.is_finite()))
        {
            return Err(Error::InvalidParameter(format!("bad sample {s:?}")));
        }
        let total = pairwise(&samples.iter().map(|s| s.weight).collect::<Vec<_>>());
        if !(total > 0.0) {
            return Err(Error::InvalidParameter("ensemble has zero total weight".into()));
        }
        let samples = samples.into_iter().map(|s| PhaseSample { weight: s.weight / total, ..s }).collect();
        Ok(Self { samples, params })
    }

    /// All weight at `(x, p)`.
    pub fn point(x: f64, p: f64, params: PhysicalParams) -> Self {
        Self { samples: vec![PhaseSample { x, p, weight: 1.0 }], params }
    }

    /// `n` equally weighted draws from independent normal laws in `x` and
    /// `p`, reproducible from `seed`.
    pub fn gaussian(
        n: usize,
        x_mean: f64,
        sigma_x: f64,
        p_mean: f64,
        sigma_p: f64,
        params: PhysicalParams,
        seed: u64,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("sample count must be positive".into()));
        }
        for s in [sigma_x, sigma_p] {
            if !(s > 0.0) {
                return Err(Error::NonPositiveWidth(s));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let nx = Normal::new(x_mean, sigma_x).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        let np = Normal::new(p_mean, sigma_p).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        let w = 1.0 / n as f64;
        let samples =
            (0..n).map(|_| PhaseSample { x: nx.sample(&mut rng), p: np.sample(&mut rng), weight: w }).collect();
        Ok(Self { samples, params })
    }

    pub fn samples(&self) -> &[PhaseSample] {
        &self.samples
    }

    pub fn params(&self) -> &PhysicalParams {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Weighted mean and variance of `f` over the samples.
    pub fn moments(&self, f: impl Fn(&PhaseSample) -> f64 + Sync) -> (f64, f64) {
        weighted_moments(&self.samples.par_iter().map(|s| (f(s), s.weight)).collect::<Vec<_>>())
    }
}

fn weighted_moments(vw: &[(f64, f64)]) -> (f64, f64) {
    let w = pairwise(&vw.iter().map(|(_, w)| *w).collect::<Vec<_>>());
    let mean = pairwise(&vw.iter().map(|(v, w)| v * w).collect::<Vec<_>>()) / w;
    let var = pairwise(&vw.iter().map(|(v, w)| w * (v - mean) * (v - mean)).collect::<Vec<_>>()) / w;
    (mean, var)
}

/// Free motion `x ↦ x + (t/m) p`.
pub fn evolve_ensemble(e: &PhaseSpaceEnsemble, t: f64) -> PhaseSpaceEnsemble {
    let v = t / e.params.mass();
    let samples = e.samples.par_iter().map(|s| PhaseSample { x: s.x + v * s.p, ..*s }).collect();
    PhaseSpaceEnsemble { samples, params: e.params }
}

/// `count` equal bins on `[lo, hi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bins {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl Bins {
    pub fn new(lo: f64, hi: f64, count: usize) -> Result<Self> {
        if !(hi > lo) || count == 0 || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidParameter(format!("bad bins [{lo}, {hi}) x {count}")));
        }
        Ok(Self { lo, hi, count })
    }

    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.count as f64
    }

    pub fn center(&self, i: usize) -> f64 {
        self.lo + (i as f64 + 0.5) * self.width()
    }

    pub fn index(&self, v: f64) -> Option<usize> {
        let f = ((v - self.lo) / self.width()).floor();
        (f >= 0.0 && f < self.count as f64).then_some(f as usize)
    }
}

/// Probability mass per bin.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub bins: Bins,
    pub mass: Vec<f64>,
}

impl Histogram {
    pub fn total(&self) -> f64 {
        pairwise(&self.mass)
    }

    pub fn density(&self) -> Vec<f64> {
        let w = self.bins.width();
        self.mass.iter().map(|m| m / w).collect()
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.bins.count).map(|i| self.bins.center(i)).collect()
    }
}

/// `Σ_i |a_i - b_i|`, the L1 distance of two densities on the same bins.
pub fn l1_distance(a: &Histogram, b: &Histogram) -> Result<f64> {
    if a.bins != b.bins {
        return Err(Error::GridMismatch);
    }
    Ok(pairwise(&a.mass.iter().zip(&b.mass).map(|(u, v)| (u - v).abs()).collect::<Vec<_>>()))
}

/// Weighted histogram; samples outside the range are dropped and returned
/// as the first offending value.
fn histogram(values: &[(f64, f64)], bins: Bins) -> (Histogram, Option<f64>) {
    let mut keyed: Vec<(usize, f64)> = Vec::with_capacity(values.len());
    let mut outside = None;
    for &(v, w) in values {
        match bins.index(v) {
            Some(i) => keyed.push((i, w)),
            None => {
                outside.get_or_insert(v);
            }
        }
    }
    keyed.sort_by_key(|(i, _)| *i);
    let mut mass = vec![0.0; bins.count];
    for run in keyed.chunk_by(|a, b| a.0 == b.0) {
        mass[run[0].0] = pairwise(&run.iter().map(|(_, w)| *w).collect::<Vec<_>>());
    }
    (Histogram { bins, mass }, outside)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Marginals {
    pub rho: Histogram,
    pub mu: Histogram,
}

pub fn marginals(e: &PhaseSpaceEnsemble, x_bins: Bins, p_bins: Bins) -> Result<Marginals> {
    let (rho, out) = histogram(&e.samples.iter().map(|s| (s.x, s.weight)).collect::<Vec<_>>(), x_bins);
    if let Some(v) = out {
        return Err(Error::BinRangeTooSmall(v));
    }
    let (mu, out) = histogram(&e.samples.iter().map(|s| (s.p, s.weight)).collect::<Vec<_>>(), p_bins);
    if let Some(v) = out {
        return Err(Error::BinRangeTooSmall(v));
    }
    Ok(Marginals { rho, mu })
}

/// `(t/m) ρ(t, x0 + (t/m) p)` integrated over each momentum bin: the mass
/// of the evolved position histogram on the image bins.
pub fn momentum_from_position_limit(e: &PhaseSpaceEnsemble, x0: f64, t: f64, p_bins: Bins) -> Result<Histogram> {
    if !(t > 0.0) {
        return Err(Error::InvalidParameter(format!("time {t} must be positive")));
    }
    let v = t / e.params.mass();
    let evolved = evolve_ensemble(e, t);
    let pulled: Vec<(f64, f64)> = evolved.samples.iter().map(|s| ((s.x - x0) / v, s.weight)).collect();
    Ok(histogram(&pulled, p_bins).0)
}

/// Momentum marginal of the ensemble on `p_bins`, dropping samples outside.
pub fn momentum_histogram(e: &PhaseSpaceEnsemble, p_bins: Bins) -> Histogram {
    histogram(&e.samples.iter().map(|s| (s.p, s.weight)).collect::<Vec<_>>(), p_bins).0
}

/// `|ψ̃(p)|² Δp` at the bin centers.
pub fn momentum_density_histogram(psi: &WaveFunction, p_bins: Bins) -> Result<Histogram> {
    let tilde = match psi.rep() {
        Representation::Position => to_momentum(psi)?,
        Representation::Momentum => psi.clone(),
        found => return Err(Error::RepMismatch { expected: Representation::Position, found }),
    };
    let w = p_bins.width();
    let mass = (0..p_bins.count)
        .map(|i| amp_phase_cubic(tilde.values(), tilde.grid(), p_bins.center(i)).norm_sqr() * w)
        .collect();
    Ok(Histogram { bins: p_bins, mass })
}

/// Fraction of `‖ψ‖²` allowed within the outer edge bands after evolution.
const BOX_EDGE_MASS: f64 = 1e-8;

/// `(t/m) |ψ(t, x0 + (t/m) p)|² Δp` at the bin centers, with `ψ(t)` on the
/// grid of `psi`.
pub fn quantum_momentum_limit(psi: &WaveFunction, x0: f64, t: f64, p_bins: Bins) -> Result<Histogram> {
    psi.expect_rep(Representation::Position)?;
    if !(t > 0.0) {
        return Err(Error::InvalidParameter(format!("time {t} must be positive")));
    }
    let g = psi.grid();
    let evolved = to_position_on(&evolve_free(&to_momentum(psi)?, t)?, g.origin())?;
    let n = g.count();
    let band = ((n as f64) * crate::grid::EDGE_FRACTION) as usize;
    let dens: Vec<f64> = evolved.values().iter().map(|v| v.norm_sqr()).collect();
    let edge = (pairwise(&dens[..band]) + pairwise(&dens[n - band..])) * g.step();
    if edge > BOX_EDGE_MASS {
        return Err(Error::BoxOverflow(n));
    }
    let v = t / psi.params().mass();
    let w = p_bins.width();
    let mass = (0..p_bins.count)
        .map(|i| {
            let x = x0 + v * p_bins.center(i);
            if x < g.origin() || x > g.last() {
                0.0
            } else {
                v * amp_phase_cubic(evolved.values(), g, x).norm_sqr() * w
            }
        })
        .collect();
    Ok(Histogram { bins: p_bins, mass })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArrivalOracle {
    pub mean_t: f64,
    pub var_t: f64,
    pub histogram: Histogram,
}

/// Weighted statistics of `T = -m x / |p|` over the samples.
pub fn classical_arrival_oracle(e: &PhaseSpaceEnsemble, p_floor: f64, t_bins: Bins) -> Result<ArrivalOracle> {
    if let Some(s) = e.samples.iter().find(|s| s.p.abs() < p_floor) {
        return Err(Error::MomentumFloorViolated(s.p.abs()));
    }
    let m = e.params.mass();
    let vw: Vec<(f64, f64)> = e.samples.par_iter().map(|s| (-m * s.x / s.p.abs(), s.weight)).collect();
    let (mean_t, var_t) = weighted_moments(&vw);
    Ok(ArrivalOracle { mean_t, var_t, histogram: histogram(&vw, t_bins).0 })
}

/// Grid used for the quantum side of the momentum limit at the reference
/// resolution: `[-2000, 2000)` with 16384 points.
pub fn reference_limit_grid() -> Grid1D {
    Grid1D::spanning(-2000.0, 2000.0, 16384).expect("valid grid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::gaussian_packet;

    fn nat() -> PhysicalParams {
        PhysicalParams::natural()
    }

    #[test]
    fn straight_lines_and_group_law() {
        let e = PhaseSpaceEnsemble::point(1.0, 2.0, nat());
        assert_eq!(evolve_ensemble(&e, 3.0).samples()[0].x, 7.0);
        assert_eq!(evolve_ensemble(&e, 0.0), e);
        let g = PhaseSpaceEnsemble::gaussian(1000, 0.0, 1.0, 1.0, 0.5, nat(), 7).unwrap();
        let a = evolve_ensemble(&evolve_ensemble(&g, 0.5), 0.25);
        let b = evolve_ensemble(&g, 0.75);
        for (u, v) in a.samples().iter().zip(b.samples()) {
            assert!((u.x - v.x).abs() <= 1e-15 * u.x.abs().max(1.0));
        }
    }

    #[test]
    fn marginals_sum_to_one_and_mu_is_invariant() {
        let e = PhaseSpaceEnsemble::gaussian(20000, 0.0, 1.0, 1.0, 0.5, nat(), 1).unwrap();
        let xb = Bins::new(-30.0, 30.0, 120).unwrap();
        let pb = Bins::new(-3.0, 5.0, 80).unwrap();
        let m0 = marginals(&e, xb, pb).unwrap();
        assert!((m0.rho.total() - 1.0).abs() < 1e-12 && (m0.mu.total() - 1.0).abs() < 1e-12);
        let m1 = marginals(&evolve_ensemble(&e, 10.0), xb, pb).unwrap();
        for (a, b) in m0.mu.mass.iter().zip(&m1.mu.mass) {
            assert!((a - b).abs() <= 1e-12);
        }
        assert!(matches!(marginals(&e, Bins::new(-0.5, 0.5, 4).unwrap(), pb), Err(Error::BinRangeTooSmall(_))));
    }

    #[test]
    fn sample_moments_match_inputs() {
        let n = 100_000;
        let e = PhaseSpaceEnsemble::gaussian(n, -50.0, 2.5, 2.0, 0.2, nat(), 11).unwrap();
        let (mx, vx) = e.moments(|s| s.x);
        let (mp, vp) = e.moments(|s| s.p);
        let se = |s: f64| 3.0 * s / (n as f64).sqrt();
        assert!((mx + 50.0).abs() < se(2.5));
        assert!((mp - 2.0).abs() < se(0.2));
        assert!((vx.sqrt() - 2.5).abs() < 3.0 * 2.5 / (2.0 * n as f64).sqrt());
        assert!((vp.sqrt() - 0.2).abs() < 3.0 * 0.2 / (2.0 * n as f64).sqrt());
    }

    #[test]
    fn point_ensemble_occupies_single_bins() {
        let e = PhaseSpaceEnsemble::point(0.3, 1.0, nat());
        let m = marginals(&e, Bins::new(-1.0, 1.0, 20).unwrap(), Bins::new(0.0, 2.0, 20).unwrap()).unwrap();
        assert_eq!(m.rho.mass.iter().filter(|v| **v > 0.0).count(), 1);
        assert_eq!(m.mu.mass.iter().filter(|v| **v > 0.0).count(), 1);
        let lim = momentum_from_position_limit(
            &PhaseSpaceEnsemble::point(0.0, 1.0, nat()),
            0.0,
            50.0,
            Bins::new(0.0, 2.0, 20).unwrap(),
        )
        .unwrap();
        assert_eq!(lim.mass[10], 1.0);
    }

    #[test]
    fn ensemble_limit_converges() {
        let e = PhaseSpaceEnsemble::gaussian(200_000, 0.0, 1.0, 1.0, 0.5, nat(), 3).unwrap();
        let pb = Bins::new(-2.0, 4.0, 60).unwrap();
        let mu = momentum_histogram(&e, pb);
        let errs: Vec<f64> = [20.0, 50.0, 100.0, 200.0]
            .iter()
            .map(|&t| l1_distance(&momentum_from_position_limit(&e, 0.0, t, pb).unwrap(), &mu).unwrap())
            .collect();
        assert!(errs.windows(2).all(|w| w[1] <= w[0]), "{errs:?}");
        assert!(errs[3] <= 0.02);
        assert!(momentum_from_position_limit(&e, 0.0, 0.0, pb).is_err());
    }

    #[test]
    fn quantum_limit_converges() {
        let psi = gaussian_packet(reference_limit_grid(), nat(), 0.0, 1.0, 0.5).unwrap();
        let pb = Bins::new(-5.0, 7.0, 1200).unwrap();
        let exact = momentum_density_histogram(&psi, pb).unwrap();
        assert!((exact.total() - 1.0).abs() < 1e-10);
        let e200 = l1_distance(&quantum_momentum_limit(&psi, 0.0, 200.0, pb).unwrap(), &exact).unwrap();
        let e400 = l1_distance(&quantum_momentum_limit(&psi, 0.0, 400.0, pb).unwrap(), &exact).unwrap();
        assert!(e200 <= 0.02 && e400 < e200, "{e200} {e400}");
        let small = gaussian_packet(Grid1D::spanning(-100.0, 100.0, 2048).unwrap(), nat(), 0.0, 1.0, 0.5).unwrap();
        assert!(matches!(quantum_momentum_limit(&small, 0.0, 200.0, pb), Err(Error::BoxOverflow(_))));
    }

    #[test]
    fn arrival_oracle() {
        let tb = Bins::new(0.0, 60.0, 120).unwrap();
        let e = PhaseSpaceEnsemble::point(-50.0, 2.0, nat());
        assert_eq!(classical_arrival_oracle(&e, DEFAULT_MOMENTUM_FLOOR, tb).unwrap().mean_t, 25.0);
        let g = PhaseSpaceEnsemble::gaussian(100_000, -50.0, 2.5, 2.0, 0.2, nat(), 5).unwrap();
        let r = classical_arrival_oracle(&g, DEFAULT_MOMENTUM_FLOOR, tb).unwrap();
        assert!((r.mean_t - 25.0).abs() < 0.02 * 25.0);
        let flipped = PhaseSpaceEnsemble::new(
            g.samples().iter().map(|s| PhaseSample { x: -s.x, p: -s.p, weight: s.weight }).collect(),
            nat(),
        )
        .unwrap();
        let f = classical_arrival_oracle(&flipped, DEFAULT_MOMENTUM_FLOOR, tb).unwrap();
        assert!((f.mean_t + r.mean_t).abs() < 1e-12);
        // T depends on p only through |p|.
        let reversed =
            PhaseSpaceEnsemble::new(g.samples().iter().map(|s| PhaseSample { p: -s.p, ..*s }).collect(), nat())
                .unwrap();
        let b = classical_arrival_oracle(&reversed, DEFAULT_MOMENTUM_FLOOR, tb).unwrap();
        assert_eq!(b.mean_t, r.mean_t);
        let slow = PhaseSpaceEnsemble::point(1.0, 1e-8, nat());
        assert!(matches!(
            classical_arrival_oracle(&slow, DEFAULT_MOMENTUM_FLOOR, tb),
            Err(Error::MomentumFloorViolated(_))
        ));
    }
}
