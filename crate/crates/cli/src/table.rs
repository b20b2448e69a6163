//! Initial data sampled in a CSV table with columns `x,V,E`.
//!
//! Values and slopes between samples come from the cubic through the four
//! nearest samples, wrapped around the period in periodic mode and shifted
//! inward at the ends of a truncated domain.

use std::path::Path;
use std::sync::Arc;

use coldplasma::characteristics::{CustomData, DomainMode, InitialData};
use serde::Deserialize;

use crate::error::{CliError, Result};

#[derive(Debug, Deserialize)]
struct Row {
    x: f64,
    #[serde(rename = "V")]
    v: f64,
    #[serde(rename = "E")]
    e: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampledData {
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    pub e: Vec<f64>,
    pub mode: DomainMode,
    /// Period in periodic mode; span of the samples otherwise.
    pub length: f64,
}

impl SampledData {
    pub fn read(path: &Path, mode: DomainMode, period: f64) -> Result<Self> {
        let field = |m: String| CliError::field("field.table", format!("{}: {m}", path.display()));
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| field(e.to_string()))?;
        let mut s = SampledData {
            x: Vec::new(),
            v: Vec::new(),
            e: Vec::new(),
            mode,
            length: period,
        };
        for row in rdr.deserialize::<Row>() {
            let r = row.map_err(|e| field(e.to_string()))?;
            s.x.push(r.x);
            s.v.push(r.v);
            s.e.push(r.e);
        }
        s.check().map_err(field)?;
        if mode == DomainMode::Truncated {
            s.length = s.x[s.x.len() - 1] - s.x[0];
        }
        Ok(s)
    }

    fn check(&self) -> std::result::Result<(), String> {
        if self.x.len() < 4 {
            return Err(format!("need at least 4 samples, got {}", self.x.len()));
        }
        if self.x.iter().chain(&self.v).chain(&self.e).any(|v| !v.is_finite()) {
            return Err("non-finite entry".into());
        }
        if self.x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err("x must be strictly increasing".into());
        }
        if self.mode == DomainMode::Periodic && !(self.x[self.x.len() - 1] < self.x[0] + self.length) {
            return Err(format!("samples must lie within one period of length {}", self.length));
        }
        Ok(())
    }

    /// Four sample indices around `x` and their abscissae (unwrapped).
    fn stencil(&self, x: f64) -> ([usize; 4], [f64; 4]) {
        let n = self.x.len();
        let x0 = self.x[0];
        match self.mode {
            DomainMode::Periodic => {
                let xr = x0 + (x - x0).rem_euclid(self.length);
                let j = self.x.partition_point(|&xi| xi <= xr) as isize - 1;
                let mut idx = [0; 4];
                let mut xs = [0.0; 4];
                for (k, off) in (-1isize..=2).enumerate() {
                    let m = j + off;
                    let wraps = m.div_euclid(n as isize);
                    let i = m.rem_euclid(n as isize) as usize;
                    idx[k] = i;
                    xs[k] = self.x[i] + wraps as f64 * self.length + (x - xr);
                }
                (idx, xs)
            }
            DomainMode::Truncated => {
                let j = self.x.partition_point(|&xi| xi <= x).saturating_sub(1);
                let start = j.saturating_sub(1).min(n - 4);
                let idx = [start, start + 1, start + 2, start + 3];
                (idx, idx.map(|i| self.x[i]))
            }
        }
    }

    /// Interpolated `(value, slope)` of `y` at `x`.
    fn interp(&self, y: &[f64], x: f64) -> (f64, f64) {
        let (idx, xs) = self.stencil(x);
        let (mut val, mut der) = (0.0, 0.0);
        for k in 0..4 {
            let mut basis = 1.0;
            let mut slope = 0.0;
            let mut denom = 1.0;
            for m in 0..4 {
                if m == k {
                    continue;
                }
                denom *= xs[k] - xs[m];
                basis *= x - xs[m];
                let mut prod = 1.0;
                for l in 0..4 {
                    if l != k && l != m {
                        prod *= x - xs[l];
                    }
                }
                slope += prod;
            }
            val += y[idx[k]] * basis / denom;
            der += y[idx[k]] * slope / denom;
        }
        (val, der)
    }

    pub fn into_initial_data(self) -> InitialData<f64> {
        let s = Arc::new(self);
        let (s1, s2, s3, s4) = (s.clone(), s.clone(), s.clone(), s.clone());
        InitialData::Custom(CustomData {
            v0: Arc::new(move |x| s1.interp(&s1.v, x).0),
            e0: Arc::new(move |x| s2.interp(&s2.e, x).0),
            v0_prime: Arc::new(move |x| s3.interp(&s3.v, x).1),
            e0_prime: Arc::new(move |x| s4.interp(&s4.e, x).1),
            x_start: s.x[0],
            length: s.length,
            mode: s.mode,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sampled(mode: DomainMode, f: impl Fn(f64) -> f64) -> SampledData {
        let n = 64;
        let tau = std::f64::consts::TAU;
        let x: Vec<f64> = (0..n).map(|i| i as f64 * tau / n as f64).collect();
        let v = x.iter().map(|&x| f(x)).collect();
        let e = vec![0.0; n];
        let length = if mode == DomainMode::Periodic {
            tau
        } else {
            x[n - 1] - x[0]
        };
        SampledData { x, v, e, mode, length }
    }

    #[test]
    fn cubics_are_reproduced_exactly() {
        let s = sampled(DomainMode::Truncated, |x| x * x * x - 2.0 * x);
        for x in [0.05, 1.234, 5.9, 6.1] {
            let (v, d) = s.interp(&s.v, x);
            assert!((v - (x * x * x - 2.0 * x)).abs() < 1e-10);
            assert!((d - (3.0 * x * x - 2.0)).abs() < 1e-9);
        }
    }

    #[test]
    fn periodic_wrap_is_smooth() {
        let s = sampled(DomainMode::Periodic, f64::sin);
        for x in [-0.03, 0.0, 6.25, 6.3, 12.6] {
            let (v, d) = s.interp(&s.v, x);
            assert!((v - x.sin()).abs() < 1e-5, "{x}");
            assert!((d - x.cos()).abs() < 1e-3, "{x}");
        }
    }

    #[test]
    fn rejects_unsorted_tables() {
        let mut s = sampled(DomainMode::Truncated, f64::sin);
        s.x.swap(3, 4);
        assert!(s.check().is_err());
    }
}
