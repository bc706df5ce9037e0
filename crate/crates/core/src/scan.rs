//! Sweeps of the pre-quench couplings `(g2x, g2y)` at fixed detuning.
//!
//! The post-quench eigensystem is computed once per chain length and shared
//! read-only by every grid point. Each point builds the pre-quench
//! Hamiltonian sector by sector from precomputed term blocks, resolves its
//! ground state and records the gap and effective dimension.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::groundstate::{GroundResolution, Resolver, SelectionBranch};
use crate::operators::{HamiltonianMatrix, PrequenchParams, PrequenchTerms};
use crate::quench::{effective_dimension, PostQuench, Route};
use crate::sector::SectorBasis;
use crate::spectra::project_to_sector;

/// Inclusive range `min, min + step, …, max`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisRange {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl AxisRange {
    pub fn new(min: f64, max: f64, step: f64) -> Result<Self> {
        let r = Self { min, max, step };
        r.validate()?;
        Ok(r)
    }

    pub fn single(value: f64) -> Self {
        Self { min: value, max: value, step: 1.0 }
    }

    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    fn validate(&self) -> Result<()> {
        if !(self.step > 0.0) {
            return Err(Error::invalid(format!("grid step must be positive, got {}", self.step)));
        }
        if !(self.max >= self.min) {
            return Err(Error::invalid(format!("empty range [{}, {}]", self.min, self.max)));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        let n = ((self.max - self.min) / self.step + 1e-9).floor() as usize;
        (0..=n)
            .map(|i| {
                let v = self.min + i as f64 * self.step;
                // snap to 12 decimals so grids built different ways coincide
                let snapped = (v * 1e12).round() / 1e12;
                if snapped == 0.0 {
                    0.0
                } else {
                    snapped
                }
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanGrid {
    pub len: usize,
    pub delta: f64,
    pub g2x: AxisRange,
    pub g2y: AxisRange,
}

impl ScanGrid {
    /// `g2x, g2y ∈ [−1, 1]`, step 0.02, `Δ = −1`.
    pub fn default_for(len: usize) -> Self {
        Self::square(len, 1.0, 0.02)
    }

    /// Symmetric square grid `[−half_width, half_width]²` at `Δ = −1`.
    pub fn square(len: usize, half_width: f64, step: f64) -> Self {
        let axis = AxisRange { min: -half_width, max: half_width, step };
        Self { len, delta: -1.0, g2x: axis, g2y: axis }
    }

    pub fn validate(&self) -> Result<()> {
        crate::basis::check_len(self.len)?;
        self.g2x.validate()?;
        self.g2y.validate()
    }

    /// Grid points in row-major order: `g2x` outer, `g2y` inner.
    pub fn points(&self) -> Vec<PrequenchParams> {
        let ys = self.g2y.values();
        self.g2x
            .values()
            .into_iter()
            .flat_map(|x| ys.iter().map(move |&y| PrequenchParams::new(x, y, self.delta)))
            .collect()
    }
}

/// Pre-quench ground-state solver sharing sectors with a [`PostQuench`].
pub struct PrequenchSolver {
    terms: PrequenchTerms,
    sectors: Vec<Arc<SectorBasis>>,
    /// Dense sector projections of the z-field, XX and YY terms.
    term_blocks: Vec<[Vec<f64>; 3]>,
    resolver: Resolver,
}

impl PrequenchSolver {
    pub fn new(post: &PostQuench) -> Self {
        let terms = PrequenchTerms::new(post.basis.clone());
        let term_blocks = post
            .sectors
            .iter()
            .map(|s| {
                [project_to_sector(&terms.zfield, s), project_to_sector(&terms.xx, s), project_to_sector(&terms.yy, s)]
            })
            .collect();
        Self { terms, sectors: post.sectors.clone(), term_blocks, resolver: Resolver::new(post.basis.clone()) }
    }

    pub fn resolver(&self) -> &Resolver {
        &self.resolver
    }

    pub fn resolver_mut(&mut self) -> &mut Resolver {
        &mut self.resolver
    }

    pub fn hamiltonian(&self, p: PrequenchParams) -> HamiltonianMatrix {
        self.terms.assemble(p)
    }

    /// Ground-state resolution through the symmetry sectors.
    pub fn resolve(&self, p: PrequenchParams) -> Result<GroundResolution> {
        let blocks: Vec<Vec<f64>> = self
            .term_blocks
            .iter()
            .map(|[z, xx, yy]| {
                z.iter().zip(xx).zip(yy).map(|((a, b), c)| p.delta / 2.0 * a + p.g2x * b + p.g2y * c).collect()
            })
            .collect();
        self.resolver.resolve_blocks(&self.sectors, &blocks)
    }

    /// Ground-state resolution by a single dense solve.
    pub fn resolve_full(&self, p: PrequenchParams) -> Result<GroundResolution> {
        self.resolver.resolve(&self.hamiltonian(p))
    }
}

/// Outcome at one grid point; physics fields are `None` when resolution failed.
#[derive(Clone, Debug, Serialize)]
pub struct PointRecord {
    pub g2x: f64,
    pub g2y: f64,
    pub gap: Option<f64>,
    pub degenerate: Option<bool>,
    pub deff: Option<f64>,
    /// `⟨ψ|H_PXP|ψ⟩` of the selected initial state.
    pub energy: Option<f64>,
    pub x: Option<f64>,
    pub diagonal: Option<[f64; 2]>,
    pub branch: Option<SelectionBranch>,
    pub particle_hole: Option<i8>,
    pub error: Option<String>,
}

impl PointRecord {
    pub fn succeeded(&self) -> bool {
        self.error.is_none()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Optimum {
    pub g2x: f64,
    pub g2y: f64,
    pub deff: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanResult {
    pub grid: ScanGrid,
    pub points: Vec<PointRecord>,
    pub optimum: Option<Optimum>,
}

impl ScanResult {
    pub fn failures(&self) -> impl Iterator<Item = &PointRecord> {
        self.points.iter().filter(|p| !p.succeeded())
    }
}

/// Evaluate one pre-quench parameter set against the shared post-quench data.
pub fn evaluate_point(post: &PostQuench, solver: &PrequenchSolver, p: PrequenchParams) -> PointRecord {
    let mut rec = PointRecord {
        g2x: p.g2x,
        g2y: p.g2y,
        gap: None,
        degenerate: None,
        deff: None,
        energy: None,
        x: None,
        diagonal: None,
        branch: None,
        particle_hole: None,
        error: None,
    };
    let outcome = solver.resolve(p).and_then(|r| {
        let deff = post.effective_dimension(&r.state)?;
        Ok((deff, post.pxp_energy(&r.state), r))
    });
    match outcome {
        Ok((deff, energy, r)) => {
            rec.gap = Some(r.delta);
            rec.degenerate = Some(r.degenerate);
            rec.deff = Some(deff);
            rec.energy = Some(energy);
            rec.x = r.x;
            rec.diagonal = r.diagonal;
            rec.branch = Some(r.selection_branch);
            rec.particle_hole = Some(r.particle_hole);
        }
        Err(e) => rec.error = Some(e.to_string()),
    }
    rec
}

/// Sweep every grid point. Failed points are recorded, not dropped.
pub fn scan_grid(grid: &ScanGrid, post: &PostQuench, solver: &PrequenchSolver) -> Result<ScanResult> {
    grid.validate()?;
    if grid.len != post.len() {
        return Err(Error::invalid(format!("grid is for L={}, post-quench data for L={}", grid.len, post.len())));
    }
    let points: Vec<PointRecord> = grid.points().into_par_iter().map(|p| evaluate_point(post, solver, p)).collect();
    let mut result = ScanResult { grid: *grid, points, optimum: None };
    result.optimum = find_optimum(&result).ok();
    Ok(result)
}

/// Global grid minimum of `D_eff`; ties go to smaller `g2x`, then `g2y`.
pub fn find_optimum(result: &ScanResult) -> Result<Optimum> {
    result
        .points
        .iter()
        .filter_map(|p| p.deff.map(|d| Optimum { g2x: p.g2x, g2y: p.g2y, deff: d }))
        .min_by(|a, b| a.deff.total_cmp(&b.deff).then(a.g2x.total_cmp(&b.g2x)).then(a.g2y.total_cmp(&b.g2y)))
        .ok_or(Error::EmptyResult)
}

/// Which pre-quench parameters each chain length uses.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum ScalingMode {
    Fixed(PrequenchParams),
    /// Coarse grid over `[−half_width, half_width]²`, then a fine grid of
    /// `±coarse_step` around the coarse optimum.
    Reoptimize {
        half_width: f64,
        coarse_step: f64,
        fine_step: f64,
    },
}

#[derive(Clone, Debug, Serialize)]
pub struct ScalingRow {
    pub len: usize,
    pub g2x: f64,
    pub g2y: f64,
    pub delta: f64,
    pub deff: Option<f64>,
    pub deff_per_site: Option<f64>,
    pub error: Option<String>,
}

/// Locate the optimum for one chain length by coarse-then-fine grids.
pub fn reoptimize(
    post: &PostQuench,
    solver: &PrequenchSolver,
    half_width: f64,
    coarse_step: f64,
    fine_step: f64,
) -> Result<Optimum> {
    let len = post.len();
    let coarse = scan_grid(&ScanGrid::square(len, half_width, coarse_step), post, solver)?;
    let best = find_optimum(&coarse)?;
    let around = |c: f64| AxisRange { min: c - coarse_step, max: c + coarse_step, step: fine_step };
    let fine = ScanGrid { len, delta: -1.0, g2x: around(best.g2x), g2y: around(best.g2y) };
    let refined = find_optimum(&scan_grid(&fine, post, solver)?)?;
    Ok(if refined.deff < best.deff { refined } else { best })
}

/// `D_eff` versus chain length.
pub fn size_scaling(lens: &[usize], mode: ScalingMode, eps: f64) -> Result<Vec<ScalingRow>> {
    lens.iter()
        .map(|&len| {
            let row = |p: PrequenchParams, deff: Result<f64>| match deff {
                Ok(d) => ScalingRow {
                    len,
                    g2x: p.g2x,
                    g2y: p.g2y,
                    delta: p.delta,
                    deff: Some(d),
                    deff_per_site: Some(d / len as f64),
                    error: None,
                },
                Err(e) => ScalingRow {
                    len,
                    g2x: p.g2x,
                    g2y: p.g2y,
                    delta: p.delta,
                    deff: None,
                    deff_per_site: None,
                    error: Some(e.to_string()),
                },
            };
            let post = match PostQuench::new(len, eps, Route::Sectors) {
                Ok(p) => p,
                Err(e) => {
                    let p = match mode {
                        ScalingMode::Fixed(p) => p,
                        ScalingMode::Reoptimize { .. } => PrequenchParams::new(f64::NAN, f64::NAN, -1.0),
                    };
                    return Ok(row(p, Err(e)));
                }
            };
            let solver = PrequenchSolver::new(&post);
            Ok(match mode {
                ScalingMode::Fixed(p) => {
                    let deff = solver.resolve(p).and_then(|r| post.effective_dimension(&r.state));
                    row(p, deff)
                }
                ScalingMode::Reoptimize { half_width, coarse_step, fine_step } => {
                    match reoptimize(&post, &solver, half_width, coarse_step, fine_step) {
                        Ok(opt) => row(PrequenchParams::new(opt.g2x, opt.g2y, -1.0), Ok(opt.deff)),
                        Err(e) => row(PrequenchParams::new(f64::NAN, f64::NAN, -1.0), Err(e)),
                    }
                }
            })
        })
        .collect()
}

/// `D_eff` of the resolved ground state at `p`, directly.
pub fn effective_dimension_at(post: &PostQuench, solver: &PrequenchSolver, p: PrequenchParams) -> Result<f64> {
    let r = solver.resolve(p)?;
    Ok(effective_dimension(&post.overlaps(&r.state)?))
}
