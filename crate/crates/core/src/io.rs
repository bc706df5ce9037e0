//! File formats: CSV for arrays, JSON for scalar reports, and a small
//! little-endian binary container for eigenvectors.
//!
//! Every CSV starts with one comment line
//! `# scarquench <version> <config-json>` followed by a column header.

use std::io::{Read, Write};

use serde_json::Value;

use crate::basis::ConstrainedBasis;
use crate::error::{Error, Result};
use crate::operators::HamiltonianMatrix;
use crate::quench::{OverlapDistribution, TimeSeries};
use crate::scan::{ScalingRow, ScanResult};
use crate::spectra::SpectralDecomposition;

pub fn header_line(config: &Value) -> String {
    format!("# scarquench {} {}", crate::VERSION, config)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// `index,bitstring,popcount`
pub fn write_basis_csv(w: &mut impl Write, basis: &ConstrainedBasis, config: &Value) -> Result<()> {
    writeln!(w, "{}", header_line(config))?;
    writeln!(w, "index,bitstring,popcount")?;
    for (i, c) in basis.states().iter().enumerate() {
        writeln!(w, "{},{},{}", i, c.bitstring(basis.len()), c.popcount())?;
    }
    Ok(())
}

/// `row,col,value`
pub fn write_operator_csv(w: &mut impl Write, h: &HamiltonianMatrix, config: &Value) -> Result<()> {
    writeln!(w, "{}", header_line(config))?;
    writeln!(w, "row,col,value")?;
    for (i, j, v) in h.entries() {
        writeln!(w, "{i},{j},{v}")?;
    }
    Ok(())
}

/// `sector,index,eigenvalue`. Sector labels read `n=<momentum index>` or
/// `n=<index>:p=<±1>`; a whole-space solve is labelled `full`.
pub fn write_spectrum_csv(w: &mut impl Write, spectrum: &SpectralDecomposition, config: &Value) -> Result<()> {
    writeln!(w, "{}", header_line(config))?;
    writeln!(w, "sector,index,eigenvalue")?;
    for block in spectrum.blocks() {
        let label = block.label().map(|l| l.to_string()).unwrap_or_else(|| "full".into());
        for (k, e) in block.eig.eigenvalues().iter().enumerate() {
            writeln!(w, "{label},{k},{e}")?;
        }
    }
    Ok(())
}

/// `t,value`
pub fn write_series_csv(w: &mut impl Write, series: &TimeSeries, config: &Value) -> Result<()> {
    writeln!(w, "{}", header_line(config))?;
    writeln!(w, "t,value")?;
    for (t, v) in series.times.iter().zip(&series.values) {
        writeln!(w, "{t},{v}")?;
    }
    Ok(())
}

/// `energy,weight`
pub fn write_overlaps_csv(w: &mut impl Write, ov: &OverlapDistribution, config: &Value) -> Result<()> {
    writeln!(w, "{}", header_line(config))?;
    writeln!(w, "energy,weight")?;
    for (e, p) in ov.energies.iter().zip(&ov.weights) {
        writeln!(w, "{e},{p}")?;
    }
    Ok(())
}

/// Which scalar a heatmap carries.
#[derive(Clone, Copy, Debug)]
pub enum MapField {
    Gap,
    Deff,
}

/// `g2x,g2y,delta` or `g2x,g2y,deff`; failed points have an empty value.
pub fn write_map_csv(w: &mut impl Write, result: &ScanResult, field: MapField, config: &Value) -> Result<()> {
    writeln!(w, "{}", header_line(config))?;
    let name = match field {
        MapField::Gap => "delta",
        MapField::Deff => "deff",
    };
    writeln!(w, "g2x,g2y,{name}")?;
    for p in &result.points {
        let v = match field {
            MapField::Gap => p.gap,
            MapField::Deff => p.deff,
        };
        writeln!(w, "{},{},{}", p.g2x, p.g2y, opt(v))?;
    }
    Ok(())
}

/// `g2x,g2y,error`
pub fn write_failures_csv(w: &mut impl Write, result: &ScanResult, config: &Value) -> Result<()> {
    writeln!(w, "{}", header_line(config))?;
    writeln!(w, "g2x,g2y,error")?;
    for p in result.failures() {
        let msg = p.error.as_deref().unwrap_or("").replace('"', "'");
        writeln!(w, "{},{},\"{}\"", p.g2x, p.g2y, msg)?;
    }
    Ok(())
}

/// `L,g2x,g2y,delta,deff,deff_per_site,error`
pub fn write_scaling_csv(w: &mut impl Write, rows: &[ScalingRow], config: &Value) -> Result<()> {
    writeln!(w, "{}", header_line(config))?;
    writeln!(w, "L,g2x,g2y,delta,deff,deff_per_site,error")?;
    for r in rows {
        let msg = r.error.as_deref().unwrap_or("").replace('"', "'");
        writeln!(w, "{},{},{},{},{},{},\"{}\"", r.len, r.g2x, r.g2y, r.delta, opt(r.deff), opt(r.deff_per_site), msg)?;
    }
    Ok(())
}

const EIGVEC_MAGIC: &[u8; 8] = b"SQEIGVEC";

/// Eigenvectors stored in full-basis coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenvectorFile {
    pub len: u64,
    pub dim: u64,
    pub eigenvalues: Vec<f64>,
    /// Row-major `count × dim`: row `n` is eigenvector `n`.
    pub vectors: Vec<f64>,
}

impl EigenvectorFile {
    pub fn from_spectrum(len: usize, spectrum: &SpectralDecomposition) -> Self {
        let mut rows: Vec<(f64, Vec<f64>)> = spectrum.full_vectors().collect();
        rows.sort_by(|a, b| a.0.total_cmp(&b.0));
        Self {
            len: len as u64,
            dim: spectrum.dim() as u64,
            eigenvalues: rows.iter().map(|r| r.0).collect(),
            vectors: rows.into_iter().flat_map(|r| r.1).collect(),
        }
    }

    pub fn count(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn vector(&self, n: usize) -> &[f64] {
        let d = self.dim as usize;
        &self.vectors[n * d..(n + 1) * d]
    }

    /// Layout (little-endian): magic `SQEIGVEC`, `u64 L`, `u64 dim`,
    /// `u64 count`, `count` eigenvalues, then `count × dim` vector entries
    /// row by row.
    pub fn write(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(EIGVEC_MAGIC)?;
        for x in [self.len, self.dim, self.count() as u64] {
            w.write_all(&x.to_le_bytes())?;
        }
        for x in self.eigenvalues.iter().chain(&self.vectors) {
            w.write_all(&x.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read(r: &mut impl Read) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != EIGVEC_MAGIC {
            return Err(Error::invalid("not an eigenvector file"));
        }
        let mut word = [0u8; 8];
        let mut next_u64 = |r: &mut dyn Read| -> Result<u64> {
            r.read_exact(&mut word)?;
            Ok(u64::from_le_bytes(word))
        };
        let len = next_u64(r)?;
        let dim = next_u64(r)?;
        let count = next_u64(r)? as usize;
        let mut read_f64s = |n: usize| -> Result<Vec<f64>> {
            let mut buf = vec![0u8; n * 8];
            r.read_exact(&mut buf)?;
            Ok(buf.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
        };
        let eigenvalues = read_f64s(count)?;
        let vectors = read_f64s(count * dim as usize)?;
        Ok(Self { len, dim, eigenvalues, vectors })
    }
}
