//! Serialization of harmonic coefficients.
//!
//! The CSV layout has one row per coefficient with columns `n,k,re,im`,
//! ordered by `n` ascending and `k` from `-n` to `n`. The JSON form carries
//! the same records plus the degree.

use super::{basis_len, HarmonicCoeffs, HarmonicsError};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};

#[derive(Debug, Serialize, Deserialize)]
struct CoeffRecord {
    n: usize,
    k: i64,
    re: f64,
    im: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct CoeffFile {
    degree: usize,
    entries: Vec<CoeffRecord>,
}

fn records(y: &HarmonicCoeffs) -> Vec<CoeffRecord> {
    let mut out = Vec::with_capacity(y.len());
    for n in 0..=y.degree() {
        for k in -(n as i64)..=(n as i64) {
            let v = y.get(n, k);
            out.push(CoeffRecord {
                n,
                k,
                re: v.re,
                im: v.im,
            });
        }
    }
    out
}

/// Writes the `n,k,re,im` CSV representation.
pub fn coeffs_to_csv<W: Write>(y: &HarmonicCoeffs, mut w: W) -> Result<(), HarmonicsError> {
    writeln!(w, "n,k,re,im")?;
    for r in records(y) {
        writeln!(w, "{},{},{:.17e},{:.17e}", r.n, r.k, r.re, r.im)?;
    }
    Ok(())
}

/// Writes the JSON representation.
pub fn coeffs_to_json<W: Write>(y: &HarmonicCoeffs, w: W) -> Result<(), HarmonicsError> {
    let file = CoeffFile {
        degree: y.degree(),
        entries: records(y),
    };
    serde_json::to_writer_pretty(w, &file).map_err(|e| HarmonicsError::Parse(e.to_string()))?;
    Ok(())
}

/// Reads coefficients back from the CSV layout, inferring the degree from
/// the largest `n` present; every index up to that degree must be present
/// exactly once.
pub fn coeffs_from_csv<R: BufRead>(r: R) -> Result<HarmonicCoeffs, HarmonicsError> {
    let mut entries: Vec<(usize, i64, Complex64)> = Vec::new();
    let mut degree = 0usize;
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || (lineno == 0 && line.starts_with("n,")) {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(HarmonicsError::Parse(format!(
                "line {}: expected 4 fields, got {}",
                lineno + 1,
                fields.len()
            )));
        }
        let parse_err = |what: &str| HarmonicsError::Parse(format!("line {}: bad {what}", lineno + 1));
        let n: usize = fields[0].trim().parse().map_err(|_| parse_err("n"))?;
        let k: i64 = fields[1].trim().parse().map_err(|_| parse_err("k"))?;
        let re: f64 = fields[2].trim().parse().map_err(|_| parse_err("re"))?;
        let im: f64 = fields[3].trim().parse().map_err(|_| parse_err("im"))?;
        if k.unsigned_abs() as usize > n {
            return Err(HarmonicsError::OrderOutOfRange { n, k });
        }
        degree = degree.max(n);
        entries.push((n, k, Complex64::new(re, im)));
    }
    if entries.len() != basis_len(degree) {
        return Err(HarmonicsError::LengthMismatch {
            degree,
            expected: basis_len(degree),
            got: entries.len(),
        });
    }
    let mut y = HarmonicCoeffs::zeros(degree);
    let mut seen = vec![false; basis_len(degree)];
    for (n, k, v) in entries {
        let idx = super::coeff_index(n, k);
        if seen[idx] {
            return Err(HarmonicsError::Parse(format!("duplicate entry ({n},{k})")));
        }
        seen[idx] = true;
        y.set(n, k, v);
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let mut y = HarmonicCoeffs::zeros(3);
        for (i, v) in y.values_mut().iter_mut().enumerate() {
            *v = Complex64::new(i as f64 * 0.25, -(i as f64) * 0.5);
        }
        let mut buf = Vec::new();
        coeffs_to_csv(&y, &mut buf).unwrap();
        let back = coeffs_from_csv(buf.as_slice()).unwrap();
        assert_eq!(y, back);
    }

    #[test]
    fn rejects_incomplete_files() {
        let body = "n,k,re,im\n0,0,1.0,0.0\n1,0,0.5,0.0\n";
        assert!(coeffs_from_csv(body.as_bytes()).is_err());
    }

    #[test]
    fn json_has_degree_and_entries() {
        let y = HarmonicCoeffs::zeros(1);
        let mut buf = Vec::new();
        coeffs_to_json(&y, &mut buf).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(v["degree"], 1);
        assert_eq!(v["entries"].as_array().unwrap().len(), 4);
    }
}
