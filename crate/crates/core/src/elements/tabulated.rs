use std::f64::consts::TAU;
use std::io::Read;
use std::path::Path;

use num_complex::Complex64;

use super::PASSIVITY_SLACK;
use crate::error::{Error, Result};
use crate::spectral::{EnergyEv, HC_EV_NM};

/// Which abscissa a transmission table is keyed by.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Abscissa {
    OmegaEv,
    WavelengthNm,
}

/// Measured transmission, interpolated linearly in magnitude and in
/// unwrapped phase. Queries outside the table clamp to the end values.
#[derive(Debug, Clone, PartialEq)]
pub struct Tabulated {
    omega: Vec<f64>,
    mag: Vec<f64>,
    phase: Vec<f64>,
    values: Vec<Complex64>,
}

impl Tabulated {
    /// Builds a table from `(ω, T)` points with strictly increasing ω.
    pub fn new(points: &[(EnergyEv, Complex64)]) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Tabulated(format!(
                "need at least 2 points, got {}",
                points.len()
            )));
        }
        for pair in points.windows(2) {
            if !(pair[1].0 .0 > pair[0].0 .0) {
                return Err(Error::Tabulated(format!(
                    "abscissae must be strictly increasing ({} then {})",
                    pair[0].0 .0, pair[1].0 .0
                )));
            }
        }
        let mut omega = Vec::with_capacity(points.len());
        let mut mag = Vec::with_capacity(points.len());
        let mut phase: Vec<f64> = Vec::with_capacity(points.len());
        for (w, t) in points {
            if !w.0.is_finite() || !t.re.is_finite() || !t.im.is_finite() {
                return Err(Error::Tabulated("non-finite entry".into()));
            }
            let m = t.norm();
            if m > 1.0 + PASSIVITY_SLACK {
                return Err(Error::Tabulated(format!(
                    "|T| = {m} at omega = {} exceeds 1",
                    w.0
                )));
            }
            let mut p = t.arg();
            if let Some(&prev) = phase.last() {
                p += TAU * ((prev - p) / TAU).round();
            }
            omega.push(w.0);
            mag.push(m);
            phase.push(p);
        }
        Ok(Tabulated {
            omega,
            mag,
            phase,
            values: points.iter().map(|p| p.1).collect(),
        })
    }

    /// Reads `omega_ev,mag,phase_rad` or `wavelength_nm,mag,phase_rad` CSV.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        let cols: Vec<&str> = headers.iter().collect();
        let abscissa = match cols.as_slice() {
            ["omega_ev", "mag", "phase_rad"] => Abscissa::OmegaEv,
            ["wavelength_nm", "mag", "phase_rad"] => Abscissa::WavelengthNm,
            _ => {
                return Err(Error::Tabulated(format!(
                    "expected header `omega_ev,mag,phase_rad` or `wavelength_nm,mag,phase_rad`, got `{}`",
                    cols.join(",")
                )))
            }
        };
        let mut raw = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let field = |k: usize| -> Result<f64> {
                rec.get(k)
                    .ok_or_else(|| Error::Tabulated(format!("row {}: missing column {}", i + 2, k + 1)))?
                    .parse::<f64>()
                    .map_err(|e| Error::Tabulated(format!("row {}: {e}", i + 2)))
            };
            raw.push((field(0)?, field(1)?, field(2)?));
        }
        for pair in raw.windows(2) {
            if !(pair[1].0 > pair[0].0) {
                return Err(Error::Tabulated(format!(
                    "abscissae must be strictly increasing ({} then {})",
                    pair[0].0, pair[1].0
                )));
            }
        }
        let mut points: Vec<(EnergyEv, Complex64)> = Vec::with_capacity(raw.len());
        for (x, m, p) in raw {
            if m < 0.0 {
                return Err(Error::Tabulated(format!("negative magnitude {m}")));
            }
            let w = match abscissa {
                Abscissa::OmegaEv => x,
                Abscissa::WavelengthNm => {
                    if !(x > 0.0) {
                        return Err(Error::Tabulated(format!("non-positive wavelength {x}")));
                    }
                    HC_EV_NM / x
                }
            };
            points.push((EnergyEv(w), Complex64::from_polar(m, p)));
        }
        if abscissa == Abscissa::WavelengthNm {
            points.reverse();
        }
        Self::new(&points)
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::from_csv_reader(file)
    }

    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.omega
    }

    pub fn eval(&self, omega: EnergyEv) -> Complex64 {
        let w = omega.0;
        let n = self.omega.len();
        if w <= self.omega[0] {
            return self.values[0];
        }
        if w >= self.omega[n - 1] {
            return self.values[n - 1];
        }
        // first node strictly greater than w
        let hi = self.omega.partition_point(|&x| x <= w);
        let lo = hi - 1;
        if self.omega[lo] == w {
            return self.values[lo];
        }
        let t = (w - self.omega[lo]) / (self.omega[hi] - self.omega[lo]);
        let m = self.mag[lo] + t * (self.mag[hi] - self.mag[lo]);
        let p = self.phase[lo] + t * (self.phase[hi] - self.phase[lo]);
        Complex64::from_polar(m, p)
    }
}
