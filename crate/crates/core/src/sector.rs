//! Momentum and reflection-parity blocks of the constrained basis.
//!
//! Every sector vector is real. Momenta `k = 0` and `k = π` use the plain
//! Bloch sums (phases ±1), optionally split by reflection parity. Any other
//! `k` is paired with `−k` into a real "doublet" block spanned by cosine and
//! sine combinations of each orbit; such a block has twice as many vectors as
//! compatible orbits and every eigenvalue in it is (at least) doubly
//! degenerate.

use std::f64::consts::PI;

use serde::Serialize;

use crate::basis::{ConstrainedBasis, SpinConfiguration};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn sign(self) -> f64 {
        match self {
            Parity::Even => 1.0,
            Parity::Odd => -1.0,
        }
    }

    pub fn from_sign(sign: f64) -> Parity {
        if sign >= 0.0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }
}

/// Sector identity: momentum index `n` (`k = 2πn/L`) and optional parity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct SectorLabel {
    pub momentum: i64,
    pub parity: Option<Parity>,
}

impl std::fmt::Display for SectorLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.parity {
            Some(p) => write!(f, "n={}:p={:+}", self.momentum, p.sign() as i32),
            None => write!(f, "n={}", self.momentum),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Component {
    Bloch,
    Cos,
    Sin,
}

#[derive(Clone, Debug, Serialize)]
pub struct Representative {
    pub config: SpinConfiguration,
    pub orbit_size: usize,
    pub component: Component,
    /// Factor turning the bare orbit sum into a unit vector.
    pub normalization: f64,
}

/// One symmetry block: orthonormal real vectors expressed in the full basis.
#[derive(Clone, Debug)]
pub struct SectorBasis {
    label: SectorLabel,
    full_dim: usize,
    representatives: Vec<Representative>,
    vectors: Vec<Vec<(usize, f64)>>,
    /// `(full index, vector index, coefficient)` sorted by full index.
    slots: Vec<(usize, usize, f64)>,
}

fn orbit_vector(
    basis: &ConstrainedBasis,
    rep: SpinConfiguration,
    size: usize,
    phase: impl Fn(usize) -> f64,
) -> Vec<(usize, f64)> {
    let len = basis.len();
    (0..size)
        .map(|j| {
            let c = rep.translate_by(len, j);
            (basis.index_of(c).expect("orbit stays in basis"), phase(j))
        })
        .filter(|&(_, a)| a != 0.0)
        .collect()
}

fn norm2(v: &[(usize, f64)]) -> f64 {
    v.iter().map(|(_, a)| a * a).sum()
}

/// Merge `a + s b` for sparse vectors sorted by nothing in particular.
fn combine(a: &[(usize, f64)], b: &[(usize, f64)], s: f64) -> Vec<(usize, f64)> {
    let mut out: Vec<(usize, f64)> = a.iter().copied().chain(b.iter().map(|&(i, x)| (i, s * x))).collect();
    out.sort_by_key(|&(i, _)| i);
    let mut merged: Vec<(usize, f64)> = Vec::with_capacity(out.len());
    for (i, x) in out {
        match merged.last_mut() {
            Some((j, y)) if *j == i => *y += x,
            _ => merged.push((i, x)),
        }
    }
    merged.retain(|&(_, x)| x.abs() > 1e-14);
    merged
}

fn reflect_vector(basis: &ConstrainedBasis, v: &[(usize, f64)]) -> Vec<(usize, f64)> {
    let len = basis.len();
    let mut out: Vec<(usize, f64)> =
        v.iter().map(|&(i, a)| (basis.index_of(basis.state(i).reflect(len)).unwrap(), a)).collect();
    out.sort_by_key(|&(i, _)| i);
    out
}

fn dot_sparse(a: &[(usize, f64)], b: &[(usize, f64)]) -> f64 {
    let mut bs: Vec<(usize, f64)> = b.to_vec();
    bs.sort_by_key(|&(i, _)| i);
    a.iter().filter_map(|&(i, x)| bs.binary_search_by_key(&i, |&(j, _)| j).ok().map(|p| x * bs[p].1)).sum()
}

/// Translation orbits as `(representative, size)`, ascending by representative.
pub fn orbits(basis: &ConstrainedBasis) -> Vec<(SpinConfiguration, usize)> {
    let len = basis.len();
    basis
        .states()
        .iter()
        .filter_map(|&c| {
            let (rep, size) = c.orbit_representative(len);
            (rep == c).then_some((rep, size))
        })
        .collect()
}

impl SectorBasis {
    /// Build the block for momentum index `n ∈ {−L/2+1, …, L/2}`.
    ///
    /// For `n ∉ {0, L/2}` the returned block is the real `±|n|` doublet and is
    /// labelled with `|n|`. Parity may only be requested for `k ∈ {0, π}`.
    pub fn new(basis: &ConstrainedBasis, n: i64, parity: Option<Parity>) -> Result<Self> {
        let len = basis.len() as i64;
        if n <= -len / 2 || n > len / 2 {
            return Err(Error::invalid(format!("momentum index {n} outside {}..={}", -len / 2 + 1, len / 2)));
        }
        let n = n.abs();
        let real_k = n == 0 || n == len / 2;
        if parity.is_some() && !real_k {
            return Err(Error::invalid(format!("parity is only resolved at k = 0 or k = π, got n = {n}")));
        }
        let k = 2.0 * PI * n as f64 / len as f64;
        let compatible = |size: usize| (n * size as i64) % len == 0;
        let mut representatives = Vec::new();
        let mut vectors = Vec::new();
        let lenu = basis.len();

        for (rep, size) in orbits(basis) {
            if !compatible(size) {
                continue;
            }
            if real_k {
                // e^{-ikj} is 1 at k = 0 and (-1)^j at k = π
                let bloch = orbit_vector(basis, rep, size, |j| if n == 0 || j % 2 == 0 { 1.0 } else { -1.0 });
                let v = match parity {
                    None => bloch,
                    Some(p) => {
                        let (rrep, _) = rep.reflect(lenu).orbit_representative(lenu);
                        if rrep < rep {
                            // handled when the partner orbit was visited
                            continue;
                        }
                        let r = reflect_vector(basis, &bloch);
                        combine(&bloch, &r, p.sign())
                    }
                };
                let nn = norm2(&v);
                if nn < 1e-12 {
                    continue;
                }
                let norm = 1.0 / nn.sqrt();
                representatives.push(Representative {
                    config: rep,
                    orbit_size: size,
                    component: Component::Bloch,
                    normalization: norm,
                });
                vectors.push(v.into_iter().map(|(i, a)| (i, a * norm)).collect());
            } else {
                for (component, f) in [(Component::Cos, f64::cos as fn(f64) -> f64), (Component::Sin, f64::sin)] {
                    let v = orbit_vector(basis, rep, size, |j| {
                        let a = f(k * j as f64);
                        if a.abs() < 1e-14 {
                            0.0
                        } else {
                            a
                        }
                    });
                    let norm = 1.0 / norm2(&v).sqrt();
                    representatives.push(Representative {
                        config: rep,
                        orbit_size: size,
                        component,
                        normalization: norm,
                    });
                    vectors.push(v.into_iter().map(|(i, a)| (i, a * norm)).collect());
                }
            }
        }

        let mut slots: Vec<(usize, usize, f64)> = vectors
            .iter()
            .enumerate()
            .flat_map(|(a, v): (usize, &Vec<(usize, f64)>)| v.iter().map(move |&(i, c)| (i, a, c)))
            .collect();
        slots.sort_by_key(|&(i, a, _)| (i, a));

        Ok(Self { label: SectorLabel { momentum: n, parity }, full_dim: basis.dim(), representatives, vectors, slots })
    }

    pub fn label(&self) -> SectorLabel {
        self.label
    }

    pub fn dim(&self) -> usize {
        self.vectors.len()
    }

    pub fn full_dim(&self) -> usize {
        self.full_dim
    }

    pub fn representatives(&self) -> &[Representative] {
        &self.representatives
    }

    /// Sparse unit vector `a` in full-basis coordinates.
    pub fn vector(&self, a: usize) -> &[(usize, f64)] {
        &self.vectors[a]
    }

    /// Sector vectors with support on full-basis index `i`.
    pub fn slots_at(&self, i: usize) -> &[(usize, usize, f64)] {
        let lo = self.slots.partition_point(|&(j, _, _)| j < i);
        let hi = self.slots.partition_point(|&(j, _, _)| j <= i);
        &self.slots[lo..hi]
    }

    /// Coordinates `Vᵀ ψ` of a full-basis vector.
    pub fn project_vector(&self, psi: &[f64]) -> Vec<f64> {
        self.vectors.iter().map(|v| v.iter().map(|&(i, c)| c * psi[i]).sum()).collect()
    }

    /// Full-basis vector `V y` for sector coordinates `y`.
    pub fn embed(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.full_dim];
        self.embed_into(y, &mut out);
        out
    }

    pub fn embed_into(&self, y: &[f64], out: &mut [f64]) {
        for (v, &ya) in self.vectors.iter().zip(y) {
            if ya == 0.0 {
                continue;
            }
            for &(i, c) in v {
                out[i] += c * ya;
            }
        }
    }

    /// Maximum deviation of `VᵀV` from the identity (test helper).
    pub fn orthonormality_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for a in 0..self.dim() {
            for b in a..self.dim() {
                let d = dot_sparse(&self.vectors[a], &self.vectors[b]);
                let want = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((d - want).abs());
            }
        }
        worst
    }
}

/// The canonical sector list covering the whole basis exactly once:
/// `n = 0` and `n = L/2` (each split by parity when `resolve_parity`), then
/// the doublets `n = 1, …, L/2 − 1`.
pub fn all_sectors(basis: &ConstrainedBasis, resolve_parity: bool) -> Result<Vec<SectorBasis>> {
    let half = basis.len() as i64 / 2;
    let mut out = Vec::new();
    for n in [0, half] {
        if resolve_parity {
            out.push(SectorBasis::new(basis, n, Some(Parity::Even))?);
            out.push(SectorBasis::new(basis, n, Some(Parity::Odd))?);
        } else {
            out.push(SectorBasis::new(basis, n, None)?);
        }
    }
    for n in 1..half {
        out.push(SectorBasis::new(basis, n, None)?);
    }
    Ok(out)
}
