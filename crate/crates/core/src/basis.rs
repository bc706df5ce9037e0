//! Blockaded Hilbert space of a periodic Rydberg ring.
//!
//! Sites are numbered `j = 1..=L` and site `j` is stored in bit `j - 1` of a
//! `u64`; a set bit means the atom is excited (`↑`). Bitstrings are printed
//! most-significant bit first, i.e. site `L` leftmost and site 1 rightmost.

use std::fmt;

use crate::error::{Error, Result};

/// Largest chain length representable in a `u64` mask.
pub const MAX_LEN: usize = 32;

/// A z-basis product state stored as a bitmask.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize)]
pub struct SpinConfiguration(pub u64);

#[inline]
fn mask(len: usize) -> u64 {
    if len >= 64 {
        u64::MAX
    } else {
        (1u64 << len) - 1
    }
}

impl SpinConfiguration {
    pub const ALL_DOWN: SpinConfiguration = SpinConfiguration(0);

    #[inline]
    pub fn bits(self) -> u64 {
        self.0
    }

    #[inline]
    pub fn popcount(self) -> u32 {
        self.0.count_ones()
    }

    /// Is site `j` (1-based) excited?
    #[inline]
    pub fn is_up(self, site: usize) -> bool {
        self.0 >> (site - 1) & 1 == 1
    }

    /// `true` when no two cyclically adjacent sites are both excited.
    #[inline]
    pub fn is_valid(self, len: usize) -> bool {
        let m = mask(len);
        if self.0 & !m != 0 {
            return false;
        }
        self.0 & self.translate(len).0 == 0
    }

    /// Translation `j -> j + 1`: bit `j - 1` moves to bit `j mod L`.
    #[inline]
    pub fn translate(self, len: usize) -> SpinConfiguration {
        let b = self.0;
        SpinConfiguration(((b << 1) | (b >> (len - 1))) & mask(len))
    }

    /// Translation by `shift` sites.
    #[inline]
    pub fn translate_by(self, len: usize, shift: usize) -> SpinConfiguration {
        let s = shift % len;
        if s == 0 {
            return self;
        }
        let b = self.0;
        SpinConfiguration(((b << s) | (b >> (len - s))) & mask(len))
    }

    /// Reflection `j -> L - j + 1`, i.e. a bit reversal of the low `L` bits.
    #[inline]
    pub fn reflect(self, len: usize) -> SpinConfiguration {
        SpinConfiguration(self.0.reverse_bits() >> (64 - len))
    }

    /// Eigenvalue of `Π = ⊗σᶻ`: `(-1)^(number of down sites)`.
    #[inline]
    pub fn particle_hole_sign(self, len: usize) -> i8 {
        if (len as u32 - self.popcount()).is_multiple_of(2) {
            1
        } else {
            -1
        }
    }

    /// `n↑ − n↓`, the eigenvalue of `Σⱼ σᶻⱼ`.
    #[inline]
    pub fn magnetization(self, len: usize) -> i64 {
        2 * self.popcount() as i64 - len as i64
    }

    /// `Σⱼ (−1)^j sᶻⱼ` with `sᶻ = ±1` and `j` starting at 1.
    pub fn staggered(self, len: usize) -> i64 {
        (1..=len)
            .map(|j| {
                let s = if self.is_up(j) { 1 } else { -1 };
                if j % 2 == 0 {
                    s
                } else {
                    -s
                }
            })
            .sum()
    }

    /// Smallest mask in the translation orbit, and the orbit size.
    pub fn orbit_representative(self, len: usize) -> (SpinConfiguration, usize) {
        let mut rep = self;
        let mut cur = self;
        for shift in 1..=len {
            cur = cur.translate(len);
            if cur == self {
                return (rep, shift);
            }
            if cur < rep {
                rep = cur;
            }
        }
        unreachable!("translation has order L")
    }

    pub fn bitstring(self, len: usize) -> String {
        format!("{:0width$b}", self.0, width = len)
    }
}

/// Néel state `|Z2⟩ = |↑↓↑↓…⟩` (sites 1, 3, 5, … excited).
pub fn neel(len: usize) -> SpinConfiguration {
    SpinConfiguration((0..len).step_by(2).fold(0u64, |acc, b| acc | 1 << b))
}

/// Shifted Néel state `|Z2'⟩ = |↓↑↓↑…⟩`.
pub fn neel_shifted(len: usize) -> SpinConfiguration {
    neel(len).translate(len)
}

/// Validate a chain length: even, at least 4, and fitting a `u64` mask.
pub fn check_len(len: usize) -> Result<()> {
    if len < 4 {
        return Err(Error::invalid(format!("chain length {len} < 4")));
    }
    if !len.is_multiple_of(2) {
        return Err(Error::invalid(format!("chain length {len} is odd")));
    }
    if len > MAX_LEN {
        return Err(Error::invalid(format!("chain length {len} > {MAX_LEN}")));
    }
    Ok(())
}

/// Ordered enumeration of all blockade-respecting configurations.
#[derive(Clone, Debug)]
pub struct ConstrainedBasis {
    len: usize,
    states: Vec<SpinConfiguration>,
}

impl ConstrainedBasis {
    /// Enumerate the basis for a ring of `len` sites.
    pub fn new(len: usize) -> Result<Self> {
        check_len(len)?;
        let mut states = Vec::new();
        // Depth-first from the top bit with 0 before 1 yields ascending order.
        fn walk(len: usize, bit: usize, acc: u64, out: &mut Vec<SpinConfiguration>) {
            if bit == 0 {
                out.push(SpinConfiguration(acc));
                return;
            }
            let b = bit - 1;
            walk(len, b, acc, out);
            let above_free = b + 1 == len || acc >> (b + 1) & 1 == 0;
            let wraps = b == 0 && acc >> (len - 1) & 1 == 1;
            if above_free && !wraps {
                walk(len, b, acc | 1 << b, out);
            }
        }
        walk(len, len, 0, &mut states);
        Ok(Self { len, states })
    }

    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[SpinConfiguration] {
        &self.states
    }

    pub fn state(&self, index: usize) -> SpinConfiguration {
        self.states[index]
    }

    /// Position of `c` in the basis, `None` for blockade-violating masks.
    pub fn index_of(&self, c: SpinConfiguration) -> Option<usize> {
        self.states.binary_search(&c).ok()
    }

    /// Image of every basis index under a configuration map.
    fn permutation(&self, f: impl Fn(SpinConfiguration) -> SpinConfiguration) -> Vec<usize> {
        self.states.iter().map(|&c| self.index_of(f(c)).expect("symmetry preserves the blockade")).collect()
    }

    pub fn translation_permutation(&self) -> Vec<usize> {
        let len = self.len;
        self.permutation(|c| c.translate(len))
    }

    pub fn reflection_permutation(&self) -> Vec<usize> {
        let len = self.len;
        self.permutation(|c| c.reflect(len))
    }

    /// Diagonal of `Π` in this basis.
    pub fn particle_hole_signs(&self) -> Vec<f64> {
        self.states.iter().map(|c| c.particle_hole_sign(self.len) as f64).collect()
    }

    /// Unit vector on a single configuration.
    pub fn product_state(&self, c: SpinConfiguration) -> Result<Vec<f64>> {
        let i = self
            .index_of(c)
            .ok_or_else(|| Error::invalid(format!("{} violates the blockade", c.bitstring(self.len))))?;
        let mut v = vec![0.0; self.dim()];
        v[i] = 1.0;
        Ok(v)
    }
}

impl fmt::Display for ConstrainedBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ConstrainedBasis(L={}, dim={})", self.len, self.dim())
    }
}
