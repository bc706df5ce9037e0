//! Dense symmetric eigendecomposition, whole-space or block by block.

use std::sync::{Arc, Once};

use faer::{Mat, Side};
use rayon::prelude::*;

use crate::basis::ConstrainedBasis;
use crate::error::{Error, Result};
use crate::operators::HamiltonianMatrix;
use crate::sector::{SectorBasis, SectorLabel};

/// Largest matrix handed to the dense solver by [`diagonalize_full`].
pub const DEFAULT_DENSE_LIMIT: usize = 16_000;

/// Relative tolerance under which two eigenvalues count as equal.
pub const DEGENERACY_RTOL: f64 = 1e-10;

static SEQUENTIAL: Once = Once::new();

/// Dense solves run single-threaded; parallelism lives one level up
/// (sectors, grid points) so results do not depend on the thread count.
fn init_solver() {
    SEQUENTIAL.call_once(|| faer::set_global_parallelism(faer::Par::Seq));
}

fn to_faer(n: usize, dense: &[f64]) -> Mat<f64> {
    Mat::from_fn(n, n, |i, j| dense[i + j * n])
}

/// Eigenvalues and orthonormal eigenvectors of a real symmetric matrix.
#[derive(Clone, Debug)]
pub struct EigenSystem {
    dim: usize,
    eigenvalues: Vec<f64>,
    /// Column-major `dim × eigenvalues.len()`.
    vectors: Vec<f64>,
}

impl EigenSystem {
    /// Solve a dense column-major symmetric matrix of order `n`.
    pub fn from_dense(n: usize, dense: &[f64]) -> Result<Self> {
        assert_eq!(dense.len(), n * n);
        if n == 0 {
            return Ok(Self { dim: 0, eigenvalues: Vec::new(), vectors: Vec::new() });
        }
        init_solver();
        let evd = to_faer(n, dense).self_adjoint_eigen(Side::Lower).map_err(|_| Error::Eigensolver)?;
        let s = evd.S();
        let u = evd.U();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| s[a].total_cmp(&s[b]));
        let eigenvalues = order.iter().map(|&k| s[k]).collect();
        let mut vectors = Vec::with_capacity(n * n);
        for &k in &order {
            vectors.extend((0..n).map(|i| u[(i, k)]));
        }
        let mut out = Self { dim: n, eigenvalues, vectors };
        for k in 0..n {
            let sign = gauge_sign(out.vector(k));
            if sign < 0.0 {
                out.vector_mut(k).iter_mut().for_each(|x| *x = -*x);
            }
        }
        Ok(out)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn vector(&self, k: usize) -> &[f64] {
        &self.vectors[k * self.dim..(k + 1) * self.dim]
    }

    fn vector_mut(&mut self, k: usize) -> &mut [f64] {
        &mut self.vectors[k * self.dim..(k + 1) * self.dim]
    }

    /// `max_n ‖H vₙ − Eₙ vₙ‖`.
    pub fn max_residual(&self, h: &HamiltonianMatrix) -> f64 {
        (0..self.len())
            .map(|k| {
                let v = self.vector(k);
                let hv = h.apply(v);
                hv.iter().zip(v).map(|(a, b)| (a - self.eigenvalues[k] * b).powi(2)).sum::<f64>().sqrt()
            })
            .fold(0.0, f64::max)
    }

    /// `max |VᵀV − I|`.
    pub fn orthonormality_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for a in 0..self.len() {
            for b in a..self.len() {
                let d: f64 = self.vector(a).iter().zip(self.vector(b)).map(|(x, y)| x * y).sum();
                worst = worst.max((d - if a == b { 1.0 } else { 0.0 }).abs());
            }
        }
        worst
    }
}

/// Sign that makes the largest-magnitude component positive; near-ties
/// (within a relative 1e-8) go to the lowest index.
pub fn gauge_sign(v: &[f64]) -> f64 {
    let max = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if max == 0.0 {
        return 1.0;
    }
    let lead = v.iter().find(|x| x.abs() >= max * (1.0 - 1e-8)).copied().unwrap_or(1.0);
    if lead < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Flip `v` into the canonical gauge in place.
pub fn fix_gauge(v: &mut [f64]) {
    if gauge_sign(v) < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Eigenvalues only, ascending.
pub fn eigenvalues_dense(n: usize, dense: &[f64]) -> Result<Vec<f64>> {
    if n == 0 {
        return Ok(Vec::new());
    }
    init_solver();
    let mut ev = to_faer(n, dense).self_adjoint_eigenvalues(Side::Lower).map_err(|_| Error::Eigensolver)?;
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

/// Whole-space dense eigensolve.
pub fn diagonalize_full(h: &HamiltonianMatrix) -> Result<EigenSystem> {
    diagonalize_full_with_limit(h, DEFAULT_DENSE_LIMIT)
}

pub fn diagonalize_full_with_limit(h: &HamiltonianMatrix, limit: usize) -> Result<EigenSystem> {
    if h.dim() > limit {
        return Err(Error::ResourceLimit { dim: h.dim(), limit });
    }
    EigenSystem::from_dense(h.dim(), &h.to_dense())
}

/// Dense block `Vᵀ H V` of `h` in a sector, column-major.
pub fn project_to_sector(h: &HamiltonianMatrix, sector: &SectorBasis) -> Vec<f64> {
    let d = sector.dim();
    let mut m = vec![0.0; d * d];
    for a in 0..d {
        for &(i, ca) in sector.vector(a) {
            for (j, hij) in h.row(i) {
                for &(_, b, cb) in sector.slots_at(j) {
                    m[a + b * d] += ca * hij * cb;
                }
            }
        }
    }
    for a in 0..d {
        for b in a + 1..d {
            let avg = 0.5 * (m[a + b * d] + m[b + a * d]);
            m[a + b * d] = avg;
            m[b + a * d] = avg;
        }
    }
    m
}

/// Check the symmetry preconditions of a sector projection.
pub fn check_sector_symmetries(
    h: &HamiltonianMatrix,
    basis: &ConstrainedBasis,
    sectors: &[Arc<SectorBasis>],
) -> Result<()> {
    let tol = 1e-12 * h.max_abs().max(1.0);
    if !h.commutes_with_permutation(&basis.translation_permutation(), tol) {
        return Err(Error::SymmetryViolation("translation"));
    }
    if sectors.iter().any(|s| s.label().parity.is_some())
        && !h.commutes_with_permutation(&basis.reflection_permutation(), tol)
    {
        return Err(Error::SymmetryViolation("reflection"));
    }
    Ok(())
}

/// One diagonalized block; `sector == None` means the whole space.
#[derive(Clone, Debug)]
pub struct SpectralBlock {
    pub sector: Option<Arc<SectorBasis>>,
    pub eig: EigenSystem,
}

impl SpectralBlock {
    pub fn label(&self) -> Option<SectorLabel> {
        self.sector.as_ref().map(|s| s.label())
    }

    /// Coordinates of a full-basis vector in this block's basis.
    pub fn project(&self, psi: &[f64]) -> Vec<f64> {
        match &self.sector {
            Some(s) => s.project_vector(psi),
            None => psi.to_vec(),
        }
    }

    /// Eigenvector `k` in full-basis coordinates, canonical gauge.
    pub fn full_vector(&self, k: usize) -> Vec<f64> {
        let mut v = match &self.sector {
            Some(s) => s.embed(self.eig.vector(k)),
            None => self.eig.vector(k).to_vec(),
        };
        fix_gauge(&mut v);
        v
    }
}

/// A complete eigendecomposition assembled from one or more blocks.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    dim: usize,
    blocks: Vec<SpectralBlock>,
}

impl From<EigenSystem> for SpectralDecomposition {
    fn from(eig: EigenSystem) -> Self {
        Self { dim: eig.dim(), blocks: vec![SpectralBlock { sector: None, eig }] }
    }
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn blocks(&self) -> &[SpectralBlock] {
        &self.blocks
    }

    /// All eigenvalues with multiplicity, ascending.
    pub fn sorted_eigenvalues(&self) -> Vec<f64> {
        let mut all: Vec<f64> = self.blocks.iter().flat_map(|b| b.eig.eigenvalues().iter().copied()).collect();
        all.sort_by(f64::total_cmp);
        all
    }

    pub fn spectral_radius(&self) -> f64 {
        self.blocks.iter().flat_map(|b| b.eig.eigenvalues().iter()).fold(0.0f64, |m, e| m.max(e.abs()))
    }

    /// Absolute tolerance for "equal eigenvalues".
    pub fn degeneracy_tol(&self) -> f64 {
        DEGENERACY_RTOL * self.spectral_radius().max(1.0)
    }

    /// Every eigenvector in full-basis coordinates, block order.
    pub fn full_vectors(&self) -> impl Iterator<Item = (f64, Vec<f64>)> + '_ {
        self.blocks.iter().flat_map(|b| (0..b.eig.len()).map(move |k| (b.eig.eigenvalues()[k], b.full_vector(k))))
    }
}

/// Diagonalize `h` block by block over `sectors`, which must tile the basis.
pub fn diagonalize_sectors(
    h: &HamiltonianMatrix,
    basis: &ConstrainedBasis,
    sectors: &[Arc<SectorBasis>],
) -> Result<SpectralDecomposition> {
    check_sector_symmetries(h, basis, sectors)?;
    let total: usize = sectors.iter().map(|s| s.dim()).sum();
    if total != basis.dim() {
        return Err(Error::invalid(format!("sectors span {total} states, basis has {}", basis.dim())));
    }
    if let Some(big) = sectors.iter().map(|s| s.dim()).max().filter(|&d| d > DEFAULT_DENSE_LIMIT) {
        return Err(Error::ResourceLimit { dim: big, limit: DEFAULT_DENSE_LIMIT });
    }
    let blocks = sectors
        .par_iter()
        .map(|s| {
            let dense = project_to_sector(h, s);
            Ok(SpectralBlock { sector: Some(s.clone()), eig: EigenSystem::from_dense(s.dim(), &dense)? })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SpectralDecomposition { dim: basis.dim(), blocks })
}

/// `Π v`, i.e. `v` with each component multiplied by its particle-hole sign.
pub fn particle_hole_partner(v: &[f64], basis: &ConstrainedBasis) -> Vec<f64> {
    let len = basis.len();
    let mut out: Vec<f64> = v.iter().zip(basis.states()).map(|(x, c)| x * c.particle_hole_sign(len) as f64).collect();
    let norm = out.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        out.iter_mut().for_each(|x| *x /= norm);
    }
    out
}

/// Largest `|a_i − b_i|` between two sorted spectra of equal length.
pub fn multiset_distance(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "spectra differ in size");
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{build_post_quench, build_prequench, build_pxp, build_staggered, PrequenchParams};
    use crate::sector::all_sectors;

    fn basis(len: usize) -> Arc<ConstrainedBasis> {
        Arc::new(ConstrainedBasis::new(len).unwrap())
    }

    fn sectors(b: &ConstrainedBasis, parity: bool) -> Vec<Arc<SectorBasis>> {
        all_sectors(b, parity).unwrap().into_iter().map(Arc::new).collect()
    }

    #[test]
    fn trivial_matrices() {
        let e = EigenSystem::from_dense(1, &[3.5]).unwrap();
        assert_eq!(e.eigenvalues(), &[3.5]);
        assert_eq!(e.vector(0), &[1.0]);
        let d = [2.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 0.5];
        let e = EigenSystem::from_dense(3, &d).unwrap();
        assert_eq!(e.eigenvalues(), &[-1.0, 0.5, 2.0]);
        assert!(EigenSystem::from_dense(0, &[]).unwrap().is_empty());
    }

    #[test]
    fn pxp_l4_symmetric_spectrum() {
        let h = build_pxp(basis(4), 1.0);
        let e = diagonalize_full(&h).unwrap();
        let ev = e.eigenvalues();
        for i in 0..ev.len() {
            assert!((ev[i] + ev[ev.len() - 1 - i]).abs() < 1e-12);
        }
        assert!(e.max_residual(&h) < 1e-12);
        assert!(e.orthonormality_error() < 1e-12);
    }

    #[test]
    fn dense_limit_enforced() {
        let h = build_pxp(basis(8), 1.0);
        assert!(matches!(diagonalize_full_with_limit(&h, 10), Err(Error::ResourceLimit { dim: 47, limit: 10 })));
    }

    #[test]
    fn sector_route_matches_full() {
        let b = basis(10);
        for h in [
            build_pxp(b.clone(), 1.0),
            build_prequench(b.clone(), PrequenchParams::new(0.1, -0.2, -1.0)),
            build_post_quench(b.clone(), 1.0, 1e-9),
        ] {
            let full = diagonalize_full(&h).unwrap().eigenvalues().to_vec();
            for parity in [false, true] {
                let sec = diagonalize_sectors(&h, &b, &sectors(&b, parity)).unwrap();
                assert!(multiset_distance(&full, &sec.sorted_eigenvalues()) < 1e-8);
                for blk in sec.blocks() {
                    for k in 0..blk.eig.len() {
                        let v = blk.full_vector(k);
                        let hv = h.apply(&v);
                        let e = blk.eig.eigenvalues()[k];
                        let r: f64 = hv.iter().zip(&v).map(|(a, x)| (a - e * x).powi(2)).sum::<f64>().sqrt();
                        assert!(r < 1e-10);
                    }
                }
            }
        }
    }

    #[test]
    fn sector_route_rejects_asymmetric_operator() {
        let b = basis(8);
        let h = build_staggered(b.clone());
        let err = diagonalize_sectors(&h, &b, &sectors(&b, false)).unwrap_err();
        assert!(matches!(err, Error::SymmetryViolation("translation")));
    }

    #[test]
    fn empty_sector_block() {
        // L = 4 has no orbit compatible with the π/odd sector? check generically:
        let b = basis(4);
        let h = build_pxp(b.clone(), 1.0);
        let sec = diagonalize_sectors(&h, &b, &sectors(&b, true)).unwrap();
        for blk in sec.blocks() {
            assert_eq!(blk.eig.len(), blk.sector.as_ref().unwrap().dim());
        }
        assert!(sec.blocks().iter().any(|blk| blk.eig.is_empty()));
    }

    #[test]
    fn particle_hole_partners_pxp_l12() {
        let b = basis(12);
        let h = build_pxp(b.clone(), 1.0);
        let e = diagonalize_full(&h).unwrap();
        for k in 0..e.len() {
            let v = e.vector(k);
            let p = particle_hole_partner(v, &b);
            let back = particle_hole_partner(&p, &b);
            assert!(back.iter().zip(v).all(|(x, y)| (x - y).abs() < 1e-14));
            let hp = h.apply(&p);
            let r: f64 = hp.iter().zip(&p).map(|(a, x)| (a + e.eigenvalues()[k] * x).powi(2)).sum::<f64>().sqrt();
            assert!(r < 1e-8);
        }
    }

    #[test]
    fn gauge_is_deterministic() {
        let mut v = vec![0.1, -0.7, 0.7, 0.0];
        fix_gauge(&mut v);
        assert_eq!(v, vec![-0.1, 0.7, -0.7, -0.0]);
    }
}
