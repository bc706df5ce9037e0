//! Post-quench quantities: eigenstate overlaps, effective dimension,
//! Loschmidt probability, energy expectation and local-observable dynamics.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::ConstrainedBasis;
use crate::error::{Error, Result};
use crate::operators::{build_post_quench, HamiltonianMatrix, ObservableMatrix};
use crate::sector::{all_sectors, SectorBasis};
use crate::spectra::{self, SpectralDecomposition};

/// Relative tolerance grouping exactly degenerate post-quench levels when
/// computing the effective dimension. It sits well below the splitting
/// produced by the default `ε = 1e-9` field and well above solver round-off.
pub const CLUSTER_RTOL: f64 = 1e-12;

/// Weights of an initial state over post-quench eigenstates, sorted by energy.
#[derive(Clone, Debug, Serialize)]
pub struct OverlapDistribution {
    pub energies: Vec<f64>,
    /// `cₙ = ⟨Eₙ|ψ(0)⟩`; real because every state and eigenvector here is real.
    pub amplitudes: Vec<f64>,
    pub weights: Vec<f64>,
    /// Absolute energy tolerance used to group degenerate levels.
    pub cluster_tol: f64,
}

impl OverlapDistribution {
    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Summed weight per cluster of degenerate levels, with the cluster's
    /// mean energy.
    pub fn clustered(&self) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64, usize)> = Vec::new();
        let mut last = f64::NEG_INFINITY;
        for (&e, &w) in self.energies.iter().zip(&self.weights) {
            match out.last_mut() {
                Some((se, sw, n)) if e - last <= self.cluster_tol => {
                    *se += e;
                    *sw += w;
                    *n += 1;
                }
                _ => out.push((e, w, 1)),
            }
            last = e;
        }
        out.into_iter().map(|(se, sw, n)| (se / n as f64, sw)).collect()
    }
}

/// Equally spaced times `0, dt, …` up to and including `t_max`.
#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub fn time_grid(t_max: f64, dt: f64) -> Result<Vec<f64>> {
    if !(dt > 0.0) || !(t_max >= 0.0) {
        return Err(Error::invalid(format!("bad time grid: t_max={t_max}, dt={dt}")));
    }
    let n = (t_max / dt + 1e-9).floor() as usize;
    // snapped to 12 decimals so 0.02 steps print as 2.8, not 2.8000000000000003
    Ok((0..=n).map(|i| (i as f64 * dt * 1e12).round() / 1e12).collect())
}

/// Default grid for figure-style output: `t ∈ [0, 40]`, step 0.02.
pub fn default_time_grid() -> Vec<f64> {
    time_grid(40.0, 0.02).expect("valid constants")
}

#[derive(Clone, Debug, Serialize)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl TimeSeries {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Indices of strict interior local maxima.
    pub fn local_maxima(&self) -> Vec<usize> {
        let v = &self.values;
        (1..v.len().saturating_sub(1)).filter(|&i| v[i] > v[i - 1] && v[i] >= v[i + 1]).collect()
    }

    /// First index where the series drops below `threshold`.
    pub fn first_decay(&self, threshold: f64) -> Option<usize> {
        self.values.iter().position(|&v| v < threshold)
    }

    /// First local maximum at or above `threshold` after the first decay
    /// below it, as `(t, value)`.
    pub fn first_revival(&self, threshold: f64) -> Option<(f64, f64)> {
        let start = self.first_decay(threshold)?;
        self.local_maxima()
            .into_iter()
            .find(|&i| i > start && self.values[i] >= threshold)
            .map(|i| (self.times[i], self.values[i]))
    }

    /// Largest value after the first decay below `threshold`, as `(t, value)`.
    pub fn max_after_decay(&self, threshold: f64) -> Option<(f64, f64)> {
        let start = self.first_decay(threshold)?;
        let mut best = (self.times[start], self.values[start]);
        for i in start..self.values.len() {
            if self.values[i] > best.1 {
                best = (self.times[i], self.values[i]);
            }
        }
        Some(best)
    }
}

fn check_norm(psi: &[f64]) -> Result<()> {
    let n: f64 = psi.iter().map(|x| x * x).sum();
    if (n - 1.0).abs() > 1e-8 {
        return Err(Error::invalid(format!("initial state not normalized (norm² = {n})")));
    }
    Ok(())
}

/// `cₙ = vₙᵀ ψ₀` for every eigenvector of the decomposition.
pub fn overlaps(psi0: &[f64], spectrum: &SpectralDecomposition) -> Result<OverlapDistribution> {
    if psi0.len() != spectrum.dim() {
        return Err(Error::invalid(format!(
            "state has {} components, eigensystem basis has {}",
            psi0.len(),
            spectrum.dim()
        )));
    }
    check_norm(psi0)?;
    let mut rows: Vec<(f64, f64)> = Vec::with_capacity(spectrum.dim());
    for block in spectrum.blocks() {
        let y = block.project(psi0);
        for k in 0..block.eig.len() {
            let c: f64 = block.eig.vector(k).iter().zip(&y).map(|(a, b)| a * b).sum();
            rows.push((block.eig.eigenvalues()[k], c));
        }
    }
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(OverlapDistribution {
        energies: rows.iter().map(|r| r.0).collect(),
        amplitudes: rows.iter().map(|r| r.1).collect(),
        weights: rows.iter().map(|r| r.1 * r.1).collect(),
        cluster_tol: CLUSTER_RTOL * spectrum.spectral_radius().max(1.0),
    })
}

/// `D_eff = 1 / Σ Wₖ²` over clusters of degenerate levels. With no exact
/// degeneracies among the populated levels this is `1 / Σₙ |cₙ|⁴`.
pub fn effective_dimension(ov: &OverlapDistribution) -> f64 {
    1.0 / ov.clustered().iter().map(|(_, w)| w * w).sum::<f64>()
}

/// `1 / Σₙ |cₙ|⁴` with no grouping of degenerate levels.
pub fn effective_dimension_unclustered(ov: &OverlapDistribution) -> f64 {
    1.0 / ov.weights.iter().map(|w| w * w).sum::<f64>()
}

/// `L(t) = |Σₙ |cₙ|² e^{−iEₙt}|²`.
pub fn loschmidt(ov: &OverlapDistribution, times: &[f64]) -> TimeSeries {
    let values = times
        .iter()
        .map(|&t| {
            let (mut re, mut im) = (0.0, 0.0);
            for (&e, &w) in ov.energies.iter().zip(&ov.weights) {
                let (s, c) = (e * t).sin_cos();
                re += w * c;
                im -= w * s;
            }
            re * re + im * im
        })
        .collect();
    TimeSeries { times: times.to_vec(), values }
}

/// `⟨ψ₀|H|ψ₀⟩`.
pub fn energy_expectation(psi0: &[f64], h: &HamiltonianMatrix) -> f64 {
    h.expectation(psi0)
}

/// Time evolution by spectral decomposition. Blocks where the initial state
/// has no weight are skipped.
pub struct Propagator<'a> {
    spectrum: &'a SpectralDecomposition,
    coeffs: Vec<Vec<f64>>,
}

impl<'a> Propagator<'a> {
    pub fn new(psi0: &[f64], spectrum: &'a SpectralDecomposition) -> Result<Self> {
        if psi0.len() != spectrum.dim() {
            return Err(Error::invalid("state and eigensystem live on different bases"));
        }
        let coeffs = spectrum
            .blocks()
            .iter()
            .map(|b| {
                let y = b.project(psi0);
                (0..b.eig.len()).map(|k| b.eig.vector(k).iter().zip(&y).map(|(a, c)| a * c).sum()).collect()
            })
            .collect();
        Ok(Self { spectrum, coeffs })
    }

    /// `ψ(t) = Σₙ cₙ e^{−iEₙt} vₙ` in full-basis coordinates.
    pub fn state_at(&self, t: f64) -> Vec<Complex64> {
        let dim = self.spectrum.dim();
        let mut re = vec![0.0; dim];
        let mut im = vec![0.0; dim];
        for (block, c) in self.spectrum.blocks().iter().zip(&self.coeffs) {
            if c.iter().all(|&x| x == 0.0) {
                continue;
            }
            let d = block.eig.dim();
            let mut yr = vec![0.0; d];
            let mut yi = vec![0.0; d];
            for (k, &ck) in c.iter().enumerate() {
                if ck == 0.0 {
                    continue;
                }
                let (s, co) = (block.eig.eigenvalues()[k] * t).sin_cos();
                let (ar, ai) = (ck * co, -ck * s);
                for (i, &v) in block.eig.vector(k).iter().enumerate() {
                    yr[i] += ar * v;
                    yi[i] += ai * v;
                }
            }
            match &block.sector {
                Some(sec) => {
                    sec.embed_into(&yr, &mut re);
                    sec.embed_into(&yi, &mut im);
                }
                None => {
                    for i in 0..d {
                        re[i] += yr[i];
                        im[i] += yi[i];
                    }
                }
            }
        }
        re.into_iter().zip(im).map(|(a, b)| Complex64::new(a, b)).collect()
    }
}

/// `Re ⟨ψ(t)|O|ψ(t)⟩` on a time grid.
pub fn observable_evolution(
    psi0: &[f64],
    spectrum: &SpectralDecomposition,
    observable: &ObservableMatrix,
    times: &[f64],
) -> Result<TimeSeries> {
    if observable.dim() != spectrum.dim() {
        return Err(Error::invalid("observable and eigensystem live on different bases"));
    }
    check_norm(psi0)?;
    let prop = Propagator::new(psi0, spectrum)?;
    let values = times.par_iter().map(|&t| observable.expectation(&prop.state_at(t))).collect();
    Ok(TimeSeries { times: times.to_vec(), values })
}

/// How the post-quench eigensystem is obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    /// One dense solve of the whole constrained space.
    Full,
    /// Momentum/parity blocks solved independently.
    Sectors,
}

impl std::str::FromStr for Route {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Route::Full),
            "sectors" => Ok(Route::Sectors),
            _ => Err(Error::invalid(format!("unknown route {s:?} (full|sectors)"))),
        }
    }
}

/// Everything that is fixed for a given chain length: basis, symmetry
/// sectors, post-quench Hamiltonian and its eigensystem.
pub struct PostQuench {
    pub basis: Arc<ConstrainedBasis>,
    pub sectors: Vec<Arc<SectorBasis>>,
    pub hamiltonian: HamiltonianMatrix,
    pub spectrum: SpectralDecomposition,
    pub eps: f64,
}

impl PostQuench {
    pub fn new(len: usize, eps: f64, route: Route) -> Result<Self> {
        let basis = Arc::new(ConstrainedBasis::new(len)?);
        let sectors: Vec<Arc<SectorBasis>> = all_sectors(&basis, true)?.into_iter().map(Arc::new).collect();
        let hamiltonian = build_post_quench(basis.clone(), 1.0, eps);
        let spectrum = match route {
            Route::Full => spectra::diagonalize_full(&hamiltonian)?.into(),
            Route::Sectors => spectra::diagonalize_sectors(&hamiltonian, &basis, &sectors)?,
        };
        Ok(Self { basis, sectors, hamiltonian, spectrum, eps })
    }

    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn overlaps(&self, psi0: &[f64]) -> Result<OverlapDistribution> {
        overlaps(psi0, &self.spectrum)
    }

    /// `D_eff` of an initial state.
    pub fn effective_dimension(&self, psi0: &[f64]) -> Result<f64> {
        Ok(effective_dimension(&self.overlaps(psi0)?))
    }

    /// Energy of `ψ₀` under the PXP part only (the ε field excluded).
    pub fn pxp_energy(&self, psi0: &[f64]) -> f64 {
        let z = crate::operators::build_zfield(self.basis.clone());
        energy_expectation(psi0, &self.hamiltonian) - self.eps * z.expectation(psi0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{neel, SpinConfiguration};
    use crate::operators::{build_local_observable, build_pxp, Axis};

    fn dot_c(a: &[f64], b: &[Complex64]) -> Complex64 {
        a.iter().zip(b).map(|(x, y)| y * *x).sum()
    }

    #[test]
    fn eigenstate_has_unit_weight_and_constant_echo() {
        let post = PostQuench::new(8, 1e-9, Route::Full).unwrap();
        let v = post.spectrum.blocks()[0].full_vector(5);
        let ov = post.overlaps(&v).unwrap();
        let big: Vec<&f64> = ov.weights.iter().filter(|&&w| w > 1e-12).collect();
        assert_eq!(big.len(), 1);
        assert!((effective_dimension(&ov) - 1.0).abs() < 1e-10);
        let echo = loschmidt(&ov, &[0.0, 1.0, 7.5]);
        assert!(echo.values.iter().all(|&x| (x - 1.0).abs() < 1e-10));
    }

    #[test]
    fn uniform_weights_give_n() {
        let ov = OverlapDistribution {
            energies: vec![-1.0, 0.0, 1.0, 2.0],
            amplitudes: vec![0.5; 4],
            weights: vec![0.25; 4],
            cluster_tol: 1e-12,
        };
        assert!((effective_dimension(&ov) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn clustered_weights_merge_degenerate_levels() {
        let ov = OverlapDistribution {
            energies: vec![0.0, 0.0, 1.0],
            amplitudes: vec![0.5, 0.5, 0.5f64.sqrt()],
            weights: vec![0.25, 0.25, 0.5],
            cluster_tol: 1e-12,
        };
        assert!((effective_dimension(&ov) - 2.0).abs() < 1e-12);
        assert!((effective_dimension_unclustered(&ov) - 1.0 / 0.375).abs() < 1e-12);
    }

    #[test]
    fn normalization_and_bounds_for_random_state() {
        let post = PostQuench::new(10, 1e-9, Route::Sectors).unwrap();
        let mut psi: Vec<f64> = (0..post.basis.dim()).map(|i| ((i * 7919) % 101) as f64 - 50.0).collect();
        let n = psi.iter().map(|x| x * x).sum::<f64>().sqrt();
        psi.iter_mut().for_each(|x| *x /= n);
        let ov = post.overlaps(&psi).unwrap();
        assert!((ov.total_weight() - 1.0).abs() < 1e-10);
        let d = effective_dimension(&ov);
        assert!(d >= 1.0 && d <= post.basis.dim() as f64);
        let times: Vec<f64> = (-50..=50).map(|i| i as f64 * 0.37).collect();
        let echo = loschmidt(&ov, &times);
        for i in 0..times.len() {
            assert!(echo.values[i] <= 1.0 + 1e-12 && echo.values[i] >= 0.0);
            assert!((echo.values[i] - echo.values[times.len() - 1 - i]).abs() < 1e-12);
        }
    }

    #[test]
    fn basis_mismatch_rejected() {
        let post = PostQuench::new(8, 0.0, Route::Full).unwrap();
        assert!(post.overlaps(&[1.0, 0.0]).is_err());
        assert!(post.overlaps(&vec![0.5; post.basis.dim()]).is_err());
    }

    #[test]
    fn propagator_matches_spectral_echo() {
        for route in [Route::Full, Route::Sectors] {
            let post = PostQuench::new(12, 1e-9, route).unwrap();
            let psi = post.basis.product_state(neel(12)).unwrap();
            let ov = post.overlaps(&psi).unwrap();
            let prop = Propagator::new(&psi, &post.spectrum).unwrap();
            let times = [0.0, 0.8, 2.3, 4.7, 11.0];
            let echo = loschmidt(&ov, &times);
            for (i, &t) in times.iter().enumerate() {
                let amp = dot_c(&psi, &prop.state_at(t));
                assert!((amp.norm_sqr() - echo.values[i]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn observables_at_time_zero() {
        let post = PostQuench::new(10, 1e-9, Route::Sectors).unwrap();
        let psi = post.basis.product_state(neel(10)).unwrap();
        let sy = build_local_observable(post.basis.clone(), 1, Axis::Y).unwrap();
        let sz = build_local_observable(post.basis.clone(), 1, Axis::Z).unwrap();
        let y = observable_evolution(&psi, &post.spectrum, &sy, &[0.0, 1.0]).unwrap();
        let z = observable_evolution(&psi, &post.spectrum, &sz, &[0.0, 1.0]).unwrap();
        assert!(y.values[0].abs() < 1e-10);
        assert!((z.values[0] - 1.0).abs() < 1e-10);
        assert!(y.values[1].abs() > 1e-3, "σʸ develops a nonzero expectation");
        assert!(z.values.iter().all(|v| v.abs() <= 1.0 + 1e-10));
    }

    #[test]
    fn pxp_energy_vanishes_for_product_states() {
        let b = Arc::new(ConstrainedBasis::new(8).unwrap());
        let h = build_pxp(b.clone(), 1.0);
        for c in [SpinConfiguration::ALL_DOWN, neel(8)] {
            assert_eq!(energy_expectation(&b.product_state(c).unwrap(), &h), 0.0);
        }
    }

    #[test]
    fn time_grid_shapes() {
        let g = default_time_grid();
        assert_eq!(g.len(), 2001);
        assert!((g[2000] - 40.0).abs() < 1e-9);
        assert!(time_grid(1.0, 0.0).is_err());
    }

    #[test]
    fn revival_helpers() {
        let series = TimeSeries {
            times: (0..8).map(f64::from).collect(),
            values: vec![1.0, 0.3, 0.01, 0.02, 0.01, 0.4, 0.2, 0.3],
        };
        assert_eq!(series.first_decay(0.05), Some(2));
        assert_eq!(series.first_revival(0.05), Some((5.0, 0.4)));
        assert_eq!(series.max_after_decay(0.05), Some((5.0, 0.4)));
        assert_eq!(series.first_revival(0.5), None);
    }
}
