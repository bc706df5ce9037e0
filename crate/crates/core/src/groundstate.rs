//! Pre-quench ground-state selection.
//!
//! When the two lowest levels are degenerate, the physical state is picked by
//! first-order degenerate perturbation theory in an infinitesimal staggered
//! field `ε Σⱼ (−1)^j σᶻⱼ`. The pair is rotated into reflection eigenstates
//! `ψ₊` (p = +1) and `ψ₋` (p = −1); for even `L` the staggered field has no
//! diagonal elements in that pair, so the perturbation matrix is
//! `[[0, εx], [εx, 0]]` with `x = ⟨ψ₊|H_st|ψ₋⟩`. With `ε` fixed negative the
//! ground state of that 2×2 problem is the combination maximizing `⟨H_st⟩`,
//! namely `(ψ₊ + sign(x) ψ₋)/√2`. This form is independent of the
//! eigenvector signs and of the magnitude of `ε`.

use std::sync::Arc;

use serde::Serialize;

use crate::basis::ConstrainedBasis;
use crate::error::{Error, Result};
use crate::operators::{build_staggered, HamiltonianMatrix};
use crate::sector::{Parity, SectorBasis};
use crate::spectra::{self, fix_gauge, EigenSystem};

/// Bound on `|⟨ψ±|H_st|ψ±⟩|` for the even-L cancellation.
pub const DIAGONAL_TOL: f64 = 1e-8;
/// Tolerance on `|⟨ψ|R|ψ⟩| = 1` when classifying parity.
pub const PARITY_TOL: f64 = 1e-8;
/// `|x|` below this counts as an unsplit pair.
pub const X_ZERO_TOL: f64 = 1e-12;

/// Default absolute degeneracy tolerance for a ground energy `e0`.
pub fn default_degeneracy_tol(e0: f64) -> f64 {
    1e-8 * e0.abs().max(1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ParityClass {
    Even,
    Odd,
    Mixed,
}

/// `⟨a|R b⟩` for the reflection permutation `perm` (`R|i⟩ = |perm[i]⟩`).
fn reflect_overlap(perm: &[usize], a: &[f64], b: &[f64]) -> f64 {
    perm.iter().zip(b).map(|(&pi, bi)| a[pi] * bi).sum()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Reflection parity of a normalized state.
pub fn classify_parity(v: &[f64], basis: &ConstrainedBasis) -> ParityClass {
    classify_with(&basis.reflection_permutation(), v)
}

fn classify_with(perm: &[usize], v: &[f64]) -> ParityClass {
    let r = reflect_overlap(perm, v, v);
    if r > 1.0 - PARITY_TOL {
        ParityClass::Even
    } else if r < -(1.0 - PARITY_TOL) {
        ParityClass::Odd
    } else {
        ParityClass::Mixed
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionBranch {
    /// Non-degenerate ground state.
    Unique,
    /// `(ψ₊ + ψ₋)/√2`, chosen because `x > 0`.
    Symmetric,
    /// `(ψ₊ − ψ₋)/√2`, chosen because `x < 0`.
    Antisymmetric,
    /// `x` vanishes: the staggered field does not split the pair at first
    /// order; `(ψ₊ + ψ₋)/√2` is returned.
    Unsplit,
}

#[derive(Clone, Debug, Serialize)]
pub struct GroundResolution {
    pub e0: f64,
    /// `E₁ − E₀`
    pub delta: f64,
    pub degenerate: bool,
    /// Parities of `(ψ₊, ψ₋)` when degenerate, or of the unique ground state.
    pub parities: Vec<ParityClass>,
    /// `⟨ψ₊|H_st|ψ₊⟩, ⟨ψ₋|H_st|ψ₋⟩`
    pub diagonal: Option<[f64; 2]>,
    pub x: Option<f64>,
    pub selection_branch: SelectionBranch,
    /// `±1` when the selected state is a `Π` eigenstate, `0` otherwise.
    pub particle_hole: i8,
    #[serde(skip)]
    pub state: Vec<f64>,
}

impl GroundResolution {
    /// Scalar report (state vector omitted).
    pub fn report_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("plain data")
    }
}

/// The lowest eigenpairs needed for resolution: up to three energies and
/// the vectors of the lowest two (full-basis coordinates, normalized).
#[derive(Clone, Debug)]
pub struct LowLying {
    pub energies: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

impl LowLying {
    pub fn from_eigensystem(eig: &EigenSystem) -> Self {
        Self {
            energies: eig.eigenvalues().iter().take(3).copied().collect(),
            vectors: (0..eig.len().min(2)).map(|k| eig.vector(k).to_vec()).collect(),
        }
    }
}

/// `E₁ − E₀` from the full constrained matrix.
pub fn ground_gap(h_pre: &HamiltonianMatrix) -> Result<f64> {
    let ev = spectra::eigenvalues_dense(h_pre.dim(), &h_pre.to_dense())?;
    if ev.len() < 2 {
        return Err(Error::invalid("gap needs at least two levels"));
    }
    Ok(ev[1] - ev[0])
}

/// Shared state for repeated resolutions on one basis.
#[derive(Clone, Debug)]
pub struct Resolver {
    basis: Arc<ConstrainedBasis>,
    reflection: Vec<usize>,
    signs: Vec<f64>,
    staggered: HamiltonianMatrix,
    /// Fixed absolute tolerance; `None` uses [`default_degeneracy_tol`].
    pub degeneracy_tol: Option<f64>,
}

impl Resolver {
    pub fn new(basis: Arc<ConstrainedBasis>) -> Self {
        Self {
            reflection: basis.reflection_permutation(),
            signs: basis.particle_hole_signs(),
            staggered: build_staggered(basis.clone()),
            basis,
            degeneracy_tol: None,
        }
    }

    pub fn basis(&self) -> &Arc<ConstrainedBasis> {
        &self.basis
    }

    pub fn staggered(&self) -> &HamiltonianMatrix {
        &self.staggered
    }

    fn tol(&self, e0: f64) -> f64 {
        self.degeneracy_tol.unwrap_or_else(|| default_degeneracy_tol(e0))
    }

    /// Full-space route.
    pub fn resolve(&self, h_pre: &HamiltonianMatrix) -> Result<GroundResolution> {
        let eig = spectra::diagonalize_full(h_pre)?;
        self.resolve_low_lying(LowLying::from_eigensystem(&eig))
    }

    /// Sector route: `blocks[s]` is the dense projection of `H_pre` onto
    /// `sectors[s]` (column-major). Only blocks holding one of the two lowest
    /// levels are solved for eigenvectors.
    pub fn resolve_blocks(&self, sectors: &[Arc<SectorBasis>], blocks: &[Vec<f64>]) -> Result<GroundResolution> {
        let mut levels: Vec<(f64, usize, usize)> = Vec::new();
        for (s, (sector, block)) in sectors.iter().zip(blocks).enumerate() {
            let ev = spectra::eigenvalues_dense(sector.dim(), block)?;
            levels.extend(ev.into_iter().take(3).enumerate().map(|(k, e)| (e, s, k)));
        }
        levels.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        levels.truncate(3);
        let mut solved: Vec<(usize, EigenSystem)> = Vec::new();
        let mut vectors = Vec::new();
        for &(_, s, k) in levels.iter().take(2) {
            if !solved.iter().any(|(t, _)| *t == s) {
                solved.push((s, EigenSystem::from_dense(sectors[s].dim(), &blocks[s])?));
            }
            let eig = &solved.iter().find(|(t, _)| *t == s).unwrap().1;
            vectors.push(sectors[s].embed(eig.vector(k)));
        }
        self.resolve_low_lying(LowLying { energies: levels.iter().map(|l| l.0).collect(), vectors })
    }

    /// Core selection logic given the lowest levels.
    pub fn resolve_low_lying(&self, low: LowLying) -> Result<GroundResolution> {
        let e = &low.energies;
        if e.len() < 2 || low.vectors.len() < 2 {
            return Err(Error::invalid("resolution needs at least two levels"));
        }
        let tol = self.tol(e[0]);
        let delta = (e[1] - e[0]).max(0.0);

        if delta > tol {
            let mut state = low.vectors[0].clone();
            normalize(&mut state);
            fix_gauge(&mut state);
            return Ok(GroundResolution {
                e0: e[0],
                delta,
                degenerate: false,
                parities: vec![classify_with(&self.reflection, &state)],
                diagonal: None,
                x: None,
                selection_branch: SelectionBranch::Unique,
                particle_hole: self.particle_hole(&state),
                state,
            });
        }
        if e.len() > 2 && e[2] - e[0] <= tol {
            return Err(Error::ResolutionAbort(format!(
                "ground level is at least threefold degenerate (E0 = {:.12}, E2 - E0 = {:.3e})",
                e[0],
                e[2] - e[0]
            )));
        }

        let (mut even, mut odd) = self.split_by_parity(&low.vectors[0], &low.vectors[1])?;
        fix_gauge(&mut even);
        fix_gauge(&mut odd);

        let d_even = self.staggered.expectation(&even);
        let d_odd = self.staggered.expectation(&odd);
        if d_even.abs() > DIAGONAL_TOL || d_odd.abs() > DIAGONAL_TOL {
            return Err(Error::ResolutionAbort(format!(
                "staggered diagonal elements do not vanish: {d_even:.3e}, {d_odd:.3e}"
            )));
        }
        let x = self.staggered.bilinear(&even, &odd);
        let (branch, s) = if x.abs() <= X_ZERO_TOL {
            (SelectionBranch::Unsplit, 1.0)
        } else if x > 0.0 {
            (SelectionBranch::Symmetric, 1.0)
        } else {
            (SelectionBranch::Antisymmetric, -1.0)
        };
        let mut state: Vec<f64> = even.iter().zip(&odd).map(|(a, b)| a + s * b).collect();
        normalize(&mut state);
        fix_gauge(&mut state);

        Ok(GroundResolution {
            e0: e[0],
            delta,
            degenerate: true,
            parities: vec![ParityClass::Even, ParityClass::Odd],
            diagonal: Some([d_even, d_odd]),
            x: Some(x),
            selection_branch: branch,
            particle_hole: self.particle_hole(&state),
            state,
        })
    }

    /// Rotate a degenerate pair into reflection eigenstates `(even, odd)`.
    fn split_by_parity(&self, a: &[f64], b: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let raa = reflect_overlap(&self.reflection, a, a);
        let rbb = reflect_overlap(&self.reflection, b, b);
        let rab = 0.5 * (reflect_overlap(&self.reflection, a, b) + reflect_overlap(&self.reflection, b, a));
        let theta = 0.5 * (2.0 * rab).atan2(raa - rbb);
        let (sn, cs) = theta.sin_cos();
        let u: Vec<f64> = a.iter().zip(b).map(|(x, y)| cs * x + sn * y).collect();
        let w: Vec<f64> = a.iter().zip(b).map(|(x, y)| -sn * x + cs * y).collect();
        let (pu, pw) = (classify_with(&self.reflection, &u), classify_with(&self.reflection, &w));
        match (pu, pw) {
            (ParityClass::Even, ParityClass::Odd) => Ok((u, w)),
            (ParityClass::Odd, ParityClass::Even) => Ok((w, u)),
            _ => Err(Error::ResolutionAbort(format!(
                "degenerate pair is not split into reflection parities +1/-1 (found {pu:?}, {pw:?})"
            ))),
        }
    }

    fn particle_hole(&self, v: &[f64]) -> i8 {
        for sign in [1.0, -1.0] {
            let dev = v.iter().zip(&self.signs).map(|(x, s)| (s * x - sign * x).powi(2)).sum::<f64>().sqrt();
            if dev <= 1e-8 {
                return sign as i8;
            }
        }
        0
    }
}

fn normalize(v: &mut [f64]) {
    let n = dot(v, v).sqrt();
    v.iter_mut().for_each(|x| *x /= n);
}

/// Full-space resolution with an explicit or default tolerance.
pub fn resolve_ground_state(
    h_pre: &HamiltonianMatrix,
    basis: Arc<ConstrainedBasis>,
    degeneracy_tol: Option<f64>,
) -> Result<GroundResolution> {
    let mut r = Resolver::new(basis);
    r.degeneracy_tol = degeneracy_tol;
    r.resolve(h_pre)
}

/// Parity helper for [`Parity`] labels.
impl From<Parity> for ParityClass {
    fn from(p: Parity) -> Self {
        match p {
            Parity::Even => ParityClass::Even,
            Parity::Odd => ParityClass::Odd,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{neel, neel_shifted, SpinConfiguration};
    use crate::operators::{build_prequench, PrequenchParams};
    use crate::sector::all_sectors;
    use crate::spectra::project_to_sector;

    fn basis(len: usize) -> Arc<ConstrainedBasis> {
        Arc::new(ConstrainedBasis::new(len).unwrap())
    }

    fn neel_combo(b: &ConstrainedBasis, s: f64) -> Vec<f64> {
        let mut v = vec![0.0; b.dim()];
        v[b.index_of(neel(b.len())).unwrap()] = 1.0 / 2f64.sqrt();
        v[b.index_of(neel_shifted(b.len())).unwrap()] = s / 2f64.sqrt();
        v
    }

    #[test]
    fn parity_classification() {
        let b = basis(8);
        assert_eq!(classify_parity(&neel_combo(&b, 1.0), &b), ParityClass::Even);
        assert_eq!(classify_parity(&neel_combo(&b, -1.0), &b), ParityClass::Odd);
        assert_eq!(classify_parity(&b.product_state(neel(8)).unwrap(), &b), ParityClass::Mixed);
    }

    #[test]
    fn gap_examples() {
        let b = basis(8);
        assert!(ground_gap(&build_prequench(b.clone(), PrequenchParams::new(0.0, 0.0, 1.0))).unwrap() > 0.5);
        assert!(ground_gap(&build_prequench(b.clone(), PrequenchParams::new(0.0, 0.0, -1.0))).unwrap().abs() < 1e-12);
    }

    #[test]
    fn all_down_is_selected_for_positive_detuning() {
        let b = basis(8);
        let h = build_prequench(b.clone(), PrequenchParams::new(0.0, 0.0, 1.0));
        let r = resolve_ground_state(&h, b.clone(), None).unwrap();
        assert!(!r.degenerate);
        assert_eq!(r.state, b.product_state(SpinConfiguration::ALL_DOWN).unwrap());
    }

    #[test]
    fn neel_selected_for_negative_detuning() {
        for len in [8, 10, 12] {
            let b = basis(len);
            let h = build_prequench(b.clone(), PrequenchParams::new(0.0, 0.0, -1.0));
            let r = resolve_ground_state(&h, b.clone(), None).unwrap();
            assert!(r.degenerate);
            // maximal staggered expectation picks |Z2'⟩ (sites 2, 4, … excited)
            let i = b.index_of(neel_shifted(len)).unwrap();
            assert!((r.state[i] - 1.0).abs() < 1e-10, "L={len}");
            // canonical gauge gives ψ₋ = (Z2 − Z2')/√2, so x = −L
            assert!((r.x.unwrap() + len as f64).abs() < 1e-10);
            assert_eq!(r.selection_branch, SelectionBranch::Antisymmetric);
            assert_eq!(r.particle_hole, if (len / 2) % 2 == 0 { 1 } else { -1 });
        }
    }

    #[test]
    fn sector_route_agrees_with_full() {
        let b = basis(10);
        let sectors: Vec<Arc<SectorBasis>> = all_sectors(&b, true).unwrap().into_iter().map(Arc::new).collect();
        let resolver = Resolver::new(b.clone());
        for p in [
            PrequenchParams::new(0.0, 0.0, -1.0),
            PrequenchParams::new(0.3, 0.1, -1.0),
            PrequenchParams::new(-0.4, 0.6, -1.0),
            PrequenchParams::new(0.0, 0.0, 1.0),
        ] {
            let h = build_prequench(b.clone(), p);
            let full = resolver.resolve(&h).unwrap();
            let blocks: Vec<Vec<f64>> = sectors.iter().map(|s| project_to_sector(&h, s)).collect();
            let sec = resolver.resolve_blocks(&sectors, &blocks).unwrap();
            assert_eq!(full.degenerate, sec.degenerate);
            assert!((full.delta - sec.delta).abs() < 1e-9);
            let ov = dot(&full.state, &sec.state).abs();
            assert!((ov - 1.0).abs() < 1e-10, "{p:?}: overlap {ov}");
        }
    }

    #[test]
    fn gauge_flip_changes_x_not_state() {
        let b = basis(8);
        let resolver = Resolver::new(b.clone());
        let plus = neel_combo(&b, 1.0);
        let minus = neel_combo(&b, -1.0);
        let flipped: Vec<f64> = minus.iter().map(|x| -x).collect();
        let e0 = -2.0;
        let low = |m: &Vec<f64>| LowLying { energies: vec![e0, e0, e0 + 1.0], vectors: vec![plus.clone(), m.clone()] };
        let r1 = resolver.resolve_low_lying(low(&minus)).unwrap();
        let r2 = resolver.resolve_low_lying(low(&flipped)).unwrap();
        assert!((dot(&r1.state, &r2.state).abs() - 1.0).abs() < 1e-12);
        let x_raw = resolver.staggered().bilinear(&plus, &minus);
        let x_flip = resolver.staggered().bilinear(&plus, &flipped);
        assert_eq!(x_raw, -x_flip);
    }

    #[test]
    fn same_parity_pair_aborts() {
        let b = basis(8);
        let resolver = Resolver::new(b.clone());
        let mut other = vec![0.0; b.dim()];
        other[0] = 1.0; // all-down is reflection even
        let low = LowLying { energies: vec![0.0, 0.0, 1.0], vectors: vec![neel_combo(&b, 1.0), other] };
        assert!(matches!(resolver.resolve_low_lying(low), Err(Error::ResolutionAbort(_))));
    }

    #[test]
    fn threefold_degeneracy_aborts() {
        let b = basis(8);
        let resolver = Resolver::new(b.clone());
        let low = LowLying { energies: vec![0.0, 0.0, 0.0], vectors: vec![neel_combo(&b, 1.0), neel_combo(&b, -1.0)] };
        assert!(matches!(resolver.resolve_low_lying(low), Err(Error::ResolutionAbort(_))));
    }

    #[test]
    fn resolution_is_idempotent() {
        let b = basis(10);
        let h = build_prequench(b.clone(), PrequenchParams::new(0.25, -0.15, -1.0));
        let r1 = resolve_ground_state(&h, b.clone(), None).unwrap();
        let r2 = resolve_ground_state(&h, b.clone(), None).unwrap();
        assert_eq!(r1.state, r2.state);
    }
}
