//! Hamiltonians and observables restricted to the blockaded subspace.
//!
//! Every operator `P h P` is realized by applying `h` term by term to basis
//! configurations and discarding images that violate the blockade; the
//! unconstrained `2^L` space is never touched.

use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::basis::{ConstrainedBasis, SpinConfiguration};

/// Row-grouped sparse matrix over the constrained basis.
#[derive(Clone, Debug)]
pub struct SparseMatrix<T> {
    basis: Arc<ConstrainedBasis>,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<T>,
}

/// Real symmetric operator.
pub type HamiltonianMatrix = SparseMatrix<f64>;
/// Hermitian operator with complex entries.
pub type ObservableMatrix = SparseMatrix<Complex64>;

pub trait Scalar:
    Copy
    + Default
    + PartialEq
    + std::ops::Add<Output = Self>
    + std::ops::Sub<Output = Self>
    + std::ops::Mul<f64, Output = Self>
    + Send
    + Sync
{
    fn is_zero(self) -> bool;
    fn abs(self) -> f64;
    fn conj(self) -> Self;
}

impl Scalar for f64 {
    fn is_zero(self) -> bool {
        self == 0.0
    }
    fn abs(self) -> f64 {
        f64::abs(self)
    }
    fn conj(self) -> Self {
        self
    }
}

impl Scalar for Complex64 {
    fn is_zero(self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }
    fn abs(self) -> f64 {
        self.norm()
    }
    fn conj(self) -> Self {
        Complex64::conj(&self)
    }
}

impl<T: Scalar> SparseMatrix<T> {
    /// Assemble from a per-row generator. Duplicate columns are summed and
    /// exact zeros dropped; columns within a row are ascending.
    pub fn from_rows(
        basis: Arc<ConstrainedBasis>,
        mut row: impl FnMut(usize, SpinConfiguration, &mut Vec<(usize, T)>),
    ) -> Self {
        let dim = basis.dim();
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        let mut scratch = Vec::new();
        row_ptr.push(0);
        for (i, &c) in basis.states().iter().enumerate() {
            scratch.clear();
            row(i, c, &mut scratch);
            scratch.sort_by_key(|&(j, _)| j);
            let start = cols.len();
            for &(j, v) in &scratch {
                if cols.len() > start && *cols.last().unwrap() == j {
                    let last = vals.last_mut().unwrap();
                    *last = *last + v;
                } else {
                    cols.push(j);
                    vals.push(v);
                }
            }
            // drop exact cancellations
            let mut w = start;
            for r in start..cols.len() {
                if !vals[r].is_zero() {
                    cols[w] = cols[r];
                    vals[w] = vals[r];
                    w += 1;
                }
            }
            cols.truncate(w);
            vals.truncate(w);
            row_ptr.push(cols.len());
        }
        Self { basis, row_ptr, cols, vals }
    }

    pub fn basis(&self) -> &Arc<ConstrainedBasis> {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    /// All stored entries `(row, col, value)` in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.dim()).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[r.clone()].binary_search(&j) {
            Ok(p) => self.vals[r.start + p],
            Err(_) => T::default(),
        }
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.vals.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    /// Max over rows of the absolute row sum; an upper bound on the spectral radius.
    pub fn row_sum_norm(&self) -> f64 {
        (0..self.dim()).map(|i| self.row(i).map(|(_, v)| v.abs()).sum::<f64>()).fold(0.0, f64::max)
    }

    /// `true` when entry `(i, j)` equals the conjugate of `(j, i)` within `tol`.
    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.entries().all(|(i, j, v)| {
            let t = self.get(j, i).conj();
            (v.abs() - t.abs()).abs() <= tol && {
                let d = v + t * -1.0;
                d.abs() <= tol
            }
        })
    }

    /// Check `A[p(i), p(j)] = A[i, j]` for a basis permutation `p`.
    pub fn commutes_with_permutation(&self, perm: &[usize], tol: f64) -> bool {
        if self.entries().any(|(i, j, v)| (self.get(perm[i], perm[j]) - v).abs() > tol) {
            return false;
        }
        // equal row lengths rule out entries present only in the image
        (0..self.dim())
            .all(|i| self.row_ptr[i + 1] - self.row_ptr[i] == self.row_ptr[perm[i] + 1] - self.row_ptr[perm[i]])
    }

    /// Conjugation by a diagonal `±1` matrix: returns `S A S`.
    pub fn sign_conjugate(&self, signs: &[f64]) -> Self {
        let mut out = self.clone();
        for i in 0..self.dim() {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                out.vals[p] = self.vals[p] * (signs[i] * signs[self.cols[p]]);
            }
        }
        out
    }

    /// `y = A x` for complex `x`.
    pub fn apply_complex(&self, x: &[Complex64]) -> Vec<Complex64>
    where
        T: Into<Complex64>,
    {
        (0..self.dim()).map(|i| self.row(i).map(|(j, v)| v.into() * x[j]).sum()).collect()
    }
}

impl HamiltonianMatrix {
    /// `y = H x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.dim()).map(|i| self.row(i).map(|(j, v)| v * x[j]).sum()).collect()
    }

    /// `xᵀ H x`.
    pub fn expectation(&self, x: &[f64]) -> f64 {
        (0..self.dim()).map(|i| x[i] * self.row(i).map(|(j, v)| v * x[j]).sum::<f64>()).sum()
    }

    /// `xᵀ H y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        (0..self.dim()).map(|i| x[i] * self.row(i).map(|(j, v)| v * y[j]).sum::<f64>()).sum()
    }

    /// Column-major dense copy.
    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.dim();
        let mut out = vec![0.0; n * n];
        for (i, j, v) in self.entries() {
            out[i + j * n] = v;
        }
        out
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.is_hermitian(tol)
    }

    /// `Σ cₖ Hₖ` over matrices sharing one basis.
    pub fn linear_combination(terms: &[(f64, &HamiltonianMatrix)]) -> HamiltonianMatrix {
        let basis = terms[0].1.basis.clone();
        SparseMatrix::from_rows(basis, |i, _, out| {
            for &(c, h) in terms {
                if c != 0.0 {
                    out.extend(h.row(i).map(|(j, v)| (j, c * v)));
                }
            }
        })
    }

    /// Real diagonal-only matrix from a per-configuration value.
    pub fn diagonal(basis: Arc<ConstrainedBasis>, f: impl Fn(SpinConfiguration) -> f64) -> Self {
        SparseMatrix::from_rows(basis, |i, c, out| out.push((i, f(c))))
    }
}

impl ObservableMatrix {
    /// `Re ⟨ψ|O|ψ⟩`.
    pub fn expectation(&self, psi: &[Complex64]) -> f64 {
        (0..self.dim())
            .map(|i| psi[i].conj() * self.row(i).map(|(j, v)| v * psi[j]).sum::<Complex64>())
            .sum::<Complex64>()
            .re
    }
}

/// Push `(index, value)` for the image `c'` if it lies in the basis.
#[inline]
fn push_image<T>(basis: &ConstrainedBasis, image: SpinConfiguration, value: T, out: &mut Vec<(usize, T)>) {
    if image.is_valid(basis.len()) {
        if let Some(j) = basis.index_of(image) {
            out.push((j, value));
        }
    }
}

/// `P (Ω/2) Σⱼ σˣⱼ P`.
pub fn build_pxp(basis: Arc<ConstrainedBasis>, omega: f64) -> HamiltonianMatrix {
    let len = basis.len();
    let b = basis.clone();
    SparseMatrix::from_rows(basis, |_, c, out| {
        for site in 0..len {
            push_image(&b, SpinConfiguration(c.0 ^ 1 << site), omega / 2.0, out);
        }
    })
}

/// Couplings of the pre-quench Hamiltonian, in units of `Ω`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, serde::Deserialize)]
pub struct PrequenchParams {
    pub g2x: f64,
    pub g2y: f64,
    pub delta: f64,
}

impl PrequenchParams {
    pub const fn new(g2x: f64, g2y: f64, delta: f64) -> Self {
        Self { g2x, g2y, delta }
    }
}

/// Fixed operator pieces of the pre-quench Hamiltonian:
/// `H = (Δ/2) Z + g2x XX + g2y YY`.
#[derive(Clone, Debug)]
pub struct PrequenchTerms {
    /// `P Σⱼ σᶻⱼ P`
    pub zfield: HamiltonianMatrix,
    /// `P Σⱼ σˣⱼ σˣⱼ₊₂ P`
    pub xx: HamiltonianMatrix,
    /// `P Σⱼ σʸⱼ σʸⱼ₊₂ P`
    pub yy: HamiltonianMatrix,
}

impl PrequenchTerms {
    pub fn new(basis: Arc<ConstrainedBasis>) -> Self {
        Self {
            zfield: build_zfield(basis.clone()),
            xx: build_nnn(basis.clone(), 1.0, 1.0),
            yy: build_nnn(basis, 1.0, -1.0),
        }
    }

    pub fn assemble(&self, p: PrequenchParams) -> HamiltonianMatrix {
        HamiltonianMatrix::linear_combination(&[(p.delta / 2.0, &self.zfield), (p.g2x, &self.xx), (p.g2y, &self.yy)])
    }
}

/// Next-nearest-neighbour two-spin flips on pairs `(j, j+2)`: amplitude
/// `exchange` for `↑↓ ↔ ↓↑` and `pair` for `↓↓ ↔ ↑↑`.
fn build_nnn(basis: Arc<ConstrainedBasis>, exchange: f64, pair: f64) -> HamiltonianMatrix {
    let len = basis.len();
    let b = basis.clone();
    SparseMatrix::from_rows(basis, |_, c, out| {
        for j in 0..len {
            let k = (j + 2) % len;
            let flipped = SpinConfiguration(c.0 ^ (1 << j) ^ (1 << k));
            let aligned = (c.0 >> j & 1) == (c.0 >> k & 1);
            let amp = if aligned { pair } else { exchange };
            if amp != 0.0 {
                push_image(&b, flipped, amp, out);
            }
        }
    })
}

/// `P [(Δ/2) Σ σᶻ + Σⱼ (g2x σˣⱼσˣⱼ₊₂ + g2y σʸⱼσʸⱼ₊₂)] P`.
///
/// Exchange `↑↓ ↔ ↓↑` carries `g2x + g2y`; the double flip `↓↓ ↔ ↑↑`
/// carries `g2x − g2y`.
pub fn build_prequench(basis: Arc<ConstrainedBasis>, p: PrequenchParams) -> HamiltonianMatrix {
    let len = basis.len();
    let b = basis.clone();
    SparseMatrix::from_rows(basis, |i, c, out| {
        out.push((i, p.delta / 2.0 * c.magnetization(len) as f64));
        for j in 0..len {
            let k = (j + 2) % len;
            let flipped = SpinConfiguration(c.0 ^ (1 << j) ^ (1 << k));
            let aligned = (c.0 >> j & 1) == (c.0 >> k & 1);
            let amp = if aligned { p.g2x - p.g2y } else { p.g2x + p.g2y };
            if amp != 0.0 {
                push_image(&b, flipped, amp, out);
            }
        }
    })
}

/// Staggered potential `Σⱼ (−1)^j P σᶻⱼ P`, site 1 carrying `−1`.
pub fn build_staggered(basis: Arc<ConstrainedBasis>) -> HamiltonianMatrix {
    let len = basis.len();
    HamiltonianMatrix::diagonal(basis, |c| c.staggered(len) as f64)
}

/// Uniform field `Σⱼ P σᶻⱼ P`; callers scale it by `ε`.
pub fn build_zfield(basis: Arc<ConstrainedBasis>) -> HamiltonianMatrix {
    let len = basis.len();
    HamiltonianMatrix::diagonal(basis, |c| c.magnetization(len) as f64)
}

/// Post-quench Hamiltonian `PXP + ε Σ σᶻ`.
pub fn build_post_quench(basis: Arc<ConstrainedBasis>, omega: f64, eps: f64) -> HamiltonianMatrix {
    let pxp = build_pxp(basis.clone(), omega);
    if eps == 0.0 {
        return pxp;
    }
    let z = build_zfield(basis);
    HamiltonianMatrix::linear_combination(&[(1.0, &pxp), (eps, &z)])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl std::str::FromStr for Axis {
    type Err = crate::Error;
    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "x" | "X" => Ok(Axis::X),
            "y" | "Y" => Ok(Axis::Y),
            "z" | "Z" => Ok(Axis::Z),
            _ => Err(crate::Error::invalid(format!("unknown axis {s:?}"))),
        }
    }
}

impl std::fmt::Display for Axis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        })
    }
}

/// `P σʲ_axis P` at 1-based `site`. Uses `σʸ|↓⟩ = i|↑⟩`, `σʸ|↑⟩ = −i|↓⟩`.
pub fn build_local_observable(
    basis: Arc<ConstrainedBasis>,
    site: usize,
    axis: Axis,
) -> crate::Result<ObservableMatrix> {
    let len = basis.len();
    if site == 0 || site > len {
        return Err(crate::Error::invalid(format!("site {site} outside 1..={len}")));
    }
    let b = basis.clone();
    Ok(SparseMatrix::from_rows(basis, |i, c, out| {
        let up = c.is_up(site);
        match axis {
            Axis::Z => out.push((i, Complex64::new(if up { 1.0 } else { -1.0 }, 0.0))),
            Axis::X | Axis::Y => {
                let image = SpinConfiguration(c.0 ^ 1 << (site - 1));
                // entry (c, image) = ⟨c|σ|image⟩
                let amp = match axis {
                    Axis::X => Complex64::new(1.0, 0.0),
                    _ => {
                        if up {
                            Complex64::new(0.0, 1.0)
                        } else {
                            Complex64::new(0.0, -1.0)
                        }
                    }
                };
                push_image(&b, image, amp, out);
            }
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{neel, neel_shifted};

    fn basis(len: usize) -> Arc<ConstrainedBasis> {
        Arc::new(ConstrainedBasis::new(len).unwrap())
    }

    fn idx(b: &ConstrainedBasis, bits: u64) -> usize {
        b.index_of(SpinConfiguration(bits)).unwrap()
    }

    #[test]
    fn pxp_l4_couplings() {
        let b = basis(4);
        let h = build_pxp(b.clone(), 1.0);
        let down = idx(&b, 0);
        let neighbours: Vec<(usize, f64)> = h.row(down).collect();
        assert_eq!(neighbours.len(), 4);
        assert!(neighbours.iter().all(|&(_, v)| v == 0.5));
        let z2 = idx(&b, 0b0101);
        let row: Vec<(usize, f64)> = h.row(z2).collect();
        let mut targets: Vec<usize> = row.iter().map(|&(j, _)| j).collect();
        targets.sort();
        let mut want = vec![idx(&b, 0b0001), idx(&b, 0b0100)];
        want.sort();
        assert_eq!(targets, want);
        assert!(row.iter().all(|&(_, v)| v == 0.5));
        assert_eq!(h.get(z2, z2), 0.0);
    }

    #[test]
    fn hamiltonians_are_real_symmetric() {
        let b = basis(10);
        let p = PrequenchParams::new(0.3, -0.7, -1.0);
        for h in [
            build_pxp(b.clone(), 1.0),
            build_prequench(b.clone(), p),
            build_staggered(b.clone()),
            build_zfield(b.clone()),
        ] {
            assert!(h.is_symmetric(0.0));
        }
    }

    #[test]
    fn particle_hole_structure() {
        for len in (4..=12).step_by(2) {
            let b = basis(len);
            let s = b.particle_hole_signs();
            let pxp = build_pxp(b.clone(), 1.0);
            let flipped = pxp.sign_conjugate(&s);
            for (i, j, v) in pxp.entries() {
                assert_eq!(flipped.get(i, j), -v);
            }
            let pre = build_prequench(b.clone(), PrequenchParams::new(0.1, 0.1, -1.0));
            let same = pre.sign_conjugate(&s);
            for (i, j, v) in pre.entries() {
                assert_eq!(same.get(i, j), v);
            }
        }
    }

    #[test]
    fn lattice_symmetries_commute() {
        for len in (4..=10).step_by(2) {
            let b = basis(len);
            let t = b.translation_permutation();
            let r = b.reflection_permutation();
            let mats = [
                build_pxp(b.clone(), 1.0),
                build_prequench(b.clone(), PrequenchParams::new(0.4, -0.25, -1.0)),
                build_zfield(b.clone()),
            ];
            for h in &mats {
                assert!(h.commutes_with_permutation(&t, 1e-14));
                assert!(h.commutes_with_permutation(&r, 1e-14));
            }
            // staggered field is odd under a one-site translation
            assert!(!build_staggered(b.clone()).commutes_with_permutation(&t, 1e-14));
        }
    }

    #[test]
    fn prequench_matches_terms() {
        let b = basis(8);
        let p = PrequenchParams::new(0.3, -0.45, -1.0);
        let direct = build_prequench(b.clone(), p);
        let terms = PrequenchTerms::new(b.clone()).assemble(p);
        for (i, j, v) in direct.entries() {
            assert!((terms.get(i, j) - v).abs() < 1e-15);
        }
        assert_eq!(direct.nnz(), terms.nnz());
    }

    #[test]
    fn prequench_diagonal_and_amplitudes() {
        let b = basis(8);
        let h = build_prequench(b.clone(), PrequenchParams::new(0.0, 0.0, 1.0));
        assert_eq!(h.get(0, 0), -4.0);
        let h = build_prequench(b.clone(), PrequenchParams::new(0.2, 0.05, -1.0));
        // exchange ↑↓ ↔ ↓↑ on sites (1, 3): bit0 -> bit2
        assert!((h.get(idx(&b, 0b001), idx(&b, 0b100)) - 0.25).abs() < 1e-15);
        // double flip ↓↓ -> ↑↑ on sites (1, 3)
        assert!((h.get(idx(&b, 0), idx(&b, 0b101)) - 0.15).abs() < 1e-15);
    }

    #[test]
    fn staggered_and_zfield_values() {
        let b = basis(6);
        let st = build_staggered(b.clone());
        let z = build_zfield(b.clone());
        let i = idx(&b, neel(6).0);
        assert_eq!(st.get(i, i), -6.0);
        let i2 = idx(&b, neel_shifted(6).0);
        assert_eq!(st.get(i2, i2), 6.0);
        assert_eq!(st.get(0, 0), 0.0);
        assert_eq!(z.get(0, 0), -6.0);
        assert_eq!(z.get(i, i), 0.0);
    }

    #[test]
    fn local_observables() {
        let b = basis(6);
        let z2 = idx(&b, neel(6).0);
        let sz = build_local_observable(b.clone(), 1, Axis::Z).unwrap();
        assert_eq!(sz.get(z2, z2), Complex64::new(1.0, 0.0));
        let sx = build_local_observable(b.clone(), 3, Axis::X).unwrap();
        assert_eq!(sx.get(0, idx(&b, 0b100)), Complex64::new(1.0, 0.0));
        let sy = build_local_observable(b.clone(), 1, Axis::Y).unwrap();
        // σʸ|↓⟩ = i|↑⟩ ⇒ ⟨↑|σʸ|↓⟩ = i
        assert_eq!(sy.get(idx(&b, 1), 0), Complex64::new(0.0, 1.0));
        assert_eq!(sy.get(0, idx(&b, 1)), Complex64::new(0.0, -1.0));
        for o in [&sx, &sy, &sz] {
            assert!(o.is_hermitian(0.0));
        }
        let real: Vec<Complex64> = (0..b.dim()).map(|i| Complex64::new((i as f64).sin(), 0.0)).collect();
        assert!(sy.expectation(&real).abs() < 1e-14);
        assert!(build_local_observable(b, 7, Axis::Z).is_err());
    }
}
