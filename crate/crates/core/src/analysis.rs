//! Dip metrics: visibility, position, shift and asymmetry, plus θ sweeps of
//! a waveplate sample.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::elements::{loss_perfect_hwp, Transmission, WaveplateParams};
use crate::engine::{self, BackgroundModel, CoincidenceKernel, DipTrace, EngineConfig};
use crate::error::{Error, Result};
use crate::spectral::JsaParams;

/// Depth fraction (from the minimum) used to select points for the
/// parabolic dip fit.
pub const DEFAULT_DEPTH_BAND: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DipMetrics {
    pub visibility: f64,
    /// eV⁻¹.
    pub dip_position: f64,
    pub dip_depth: f64,
    pub asymmetry: f64,
    pub baseline: f64,
}

/// Result of the parabolic dip localisation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DipLocation {
    /// eV⁻¹.
    pub position: f64,
    /// Index of the lowest sample.
    pub min_index: usize,
    /// Set when fewer than three points qualified (or the fit was not convex)
    /// and the raw grid minimum was returned.
    pub fallback: bool,
}

fn check_trace(trace: &DipTrace, min_points: usize) -> Result<()> {
    if trace.len() < min_points {
        return Err(Error::Dip(format!(
            "need at least {min_points} samples, got {}",
            trace.len()
        )));
    }
    if !(trace.baseline > 0.0) {
        return Err(Error::Dip(format!("baseline must be positive, got {}", trace.baseline)));
    }
    Ok(())
}

fn argmin(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x < v[best] {
            best = i;
        }
    }
    best
}

/// Least-squares parabola through the lowest `band` of the dip depth.
pub fn locate_dip(trace: &DipTrace, band: f64) -> Result<DipLocation> {
    check_trace(trace, 3)?;
    let i0 = argmin(&trace.rates);
    if i0 == 0 || i0 + 1 == trace.len() {
        return Err(Error::Dip(format!(
            "minimum at the edge of the scan (tau = {} eV^-1); widen the delay range",
            trace.taus[i0]
        )));
    }
    let r0 = trace.rates[i0];
    let threshold = r0 + band * (trace.baseline - r0);
    let picked: Vec<(f64, f64)> = trace
        .taus
        .iter()
        .zip(&trace.rates)
        .filter(|(_, r)| **r <= threshold)
        .map(|(t, r)| (*t, *r))
        .collect();
    let raw = DipLocation {
        position: trace.taus[i0],
        min_index: i0,
        fallback: true,
    };
    if picked.len() < 3 {
        return Ok(raw);
    }
    let n = picked.len() as f64;
    let mean = picked.iter().map(|p| p.0).sum::<f64>() / n;
    let scale = picked
        .iter()
        .map(|p| (p.0 - mean).abs())
        .fold(0.0, f64::max);
    let Some([_, c1, c2]) = fit_parabola(picked.iter().map(|&(t, r)| ((t - mean) / scale, r))) else {
        return Ok(raw);
    };
    if !(c2 > 0.0) {
        return Ok(raw);
    }
    let x = -c1 / (2.0 * c2);
    if !(-1.0..=1.0).contains(&x) {
        return Ok(raw);
    }
    Ok(DipLocation {
        position: mean + scale * x,
        min_index: i0,
        fallback: false,
    })
}

/// Vertex abscissa of the parabolic dip fit (eV⁻¹).
pub fn dip_position(trace: &DipTrace) -> Result<f64> {
    Ok(locate_dip(trace, DEFAULT_DEPTH_BAND)?.position)
}

pub fn dip_shift(sample: &DipTrace, reference: &DipTrace) -> Result<f64> {
    Ok(dip_position(sample)? - dip_position(reference)?)
}

/// Coefficients of y ≈ c0 + c1 x + c2 x² by normal equations.
fn fit_parabola(points: impl Iterator<Item = (f64, f64)>) -> Option<[f64; 3]> {
    let mut s = [0.0f64; 5];
    let mut t = [0.0f64; 3];
    for (x, y) in points {
        let mut p = 1.0;
        for k in 0..5 {
            s[k] += p;
            if k < 3 {
                t[k] += p * y;
            }
            p *= x;
        }
    }
    let m = [
        [s[0], s[1], s[2]],
        [s[1], s[2], s[3]],
        [s[2], s[3], s[4]],
    ];
    crate::inversion::solve_spd(&m, &t)
}

/// Minimum of the trace refined by the parabola through the lowest sample
/// and its two neighbours.
pub fn refined_minimum(trace: &DipTrace) -> Result<f64> {
    check_trace(trace, 3)?;
    let i = argmin(&trace.rates);
    let raw = trace.rates[i];
    if i == 0 || i + 1 == trace.len() {
        return Ok(raw);
    }
    let (x0, x1, x2) = (trace.taus[i - 1], trace.taus[i], trace.taus[i + 1]);
    let (y0, y1, y2) = (trace.rates[i - 1], trace.rates[i], trace.rates[i + 1]);
    // centred at x1
    let (u0, u2) = (x0 - x1, x2 - x1);
    let d0 = (y0 - y1) / u0;
    let d2 = (y2 - y1) / u2;
    let a = (d2 - d0) / (u2 - u0);
    let b = d0 - a * u0;
    if !(a > 0.0) {
        return Ok(raw);
    }
    let vertex = y1 - b * b / (4.0 * a);
    Ok(vertex.min(raw).max(0.0))
}

/// V = (R∞ − R₀) / (R∞ + R₀).
pub fn visibility(trace: &DipTrace) -> Result<f64> {
    check_trace(trace, 5)?;
    let r_inf = trace.baseline;
    let r0 = refined_minimum(trace)?;
    Ok(((r_inf - r0) / (r_inf + r0)).clamp(0.0, 1.0))
}

/// Skewness of the dip deficit max(0, 1 − rate/baseline) treated as a
/// density over τ.
pub fn asymmetry(trace: &DipTrace) -> Result<f64> {
    check_trace(trace, 3)?;
    let n = trace.len();
    let deficit: Vec<f64> = trace
        .rates
        .iter()
        .map(|r| (1.0 - r / trace.baseline).max(0.0))
        .collect();
    // trapezoid weights on the (possibly non-uniform) delay grid
    let w: Vec<f64> = (0..n)
        .map(|i| {
            let left = if i > 0 { trace.taus[i] - trace.taus[i - 1] } else { 0.0 };
            let right = if i + 1 < n { trace.taus[i + 1] - trace.taus[i] } else { 0.0 };
            0.5 * (left + right) * deficit[i]
        })
        .collect();
    let mass: f64 = w.iter().sum();
    if !(mass > 0.0) {
        return Err(Error::Dip("dip deficit is zero everywhere".into()));
    }
    let mean = w.iter().zip(&trace.taus).map(|(w, t)| w * t).sum::<f64>() / mass;
    let (mut m2, mut m3) = (0.0, 0.0);
    for (wi, t) in w.iter().zip(&trace.taus) {
        let d = t - mean;
        m2 += wi * d * d;
        m3 += wi * d * d * d;
    }
    m2 /= mass;
    m3 /= mass;
    if !(m2 > 0.0) {
        return Ok(0.0);
    }
    Ok(m3 / m2.powf(1.5))
}

pub fn metrics(trace: &DipTrace) -> Result<DipMetrics> {
    let r0 = refined_minimum(trace)?;
    Ok(DipMetrics {
        visibility: visibility(trace)?,
        dip_position: dip_position(trace)?,
        dip_depth: (1.0 - r0 / trace.baseline).clamp(0.0, 1.0),
        asymmetry: asymmetry(trace)?,
        baseline: trace.baseline,
    })
}

/// A waveplate + polariser chain whose angle is swept.
#[derive(Debug, Clone)]
pub struct ThetaSweep {
    pub jsa: JsaParams,
    pub engine: EngineConfig,
    /// Plate parameters; `theta` is overwritten per row.
    pub plate: WaveplateParams,
    /// Delays in eV⁻¹.
    pub taus: Vec<f64>,
    /// Accidental model; its `mean_transmission` is replaced by the
    /// filter-weighted transmission of the chain at each angle.
    pub background: Option<BackgroundModel>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    /// rad.
    pub theta: f64,
    pub loss: f64,
    pub visibility: f64,
    /// eV⁻¹, relative to θ = 0 of the same chain.
    pub dip_shift: f64,
    /// Baseline relative to the θ = 0 baseline.
    pub mean_rate: f64,
    pub dip_position: f64,
    pub asymmetry: f64,
    pub mean_transmission: f64,
}

/// A trace at one angle together with the quantities the sweep derives
/// from it.
#[derive(Debug, Clone)]
pub struct ThetaTrace {
    pub theta: f64,
    pub trace: DipTrace,
    pub mean_transmission: f64,
}

impl ThetaSweep {
    pub fn trace_at(&self, theta: f64) -> Result<ThetaTrace> {
        let sample = Transmission::waveplate_pbs(self.plate.with_theta(theta))?;
        let kernel = CoincidenceKernel::new(&self.jsa, &sample, &self.engine)?;
        let reference = CoincidenceKernel::new(&self.jsa, &Transmission::Identity, &self.engine)?;
        let t_bar = (kernel.baseline() / reference.baseline()).clamp(0.0, 1.0);
        let bg = self.background.map(|b| b.with_transmission(t_bar));
        let trace = engine::trace_with_kernel(
            &kernel,
            &self.jsa,
            self.engine.normalization,
            &self.taus,
            bg.as_ref(),
        )?;
        Ok(ThetaTrace {
            theta,
            trace,
            mean_transmission: t_bar,
        })
    }

    pub fn traces(&self, thetas: &[f64]) -> Result<Vec<ThetaTrace>> {
        thetas.par_iter().map(|&t| self.trace_at(t)).collect()
    }
}

/// One row per angle; shifts and mean rates are relative to θ = 0.
pub fn sweep_theta(thetas: &[f64], setup: &ThetaSweep) -> Result<Vec<SweepRow>> {
    let reference = setup.trace_at(0.0)?;
    let traces = setup.traces(thetas)?;
    rows_from_traces(&traces, &reference)
}

pub fn rows_from_traces(traces: &[ThetaTrace], reference: &ThetaTrace) -> Result<Vec<SweepRow>> {
    let ref_pos = dip_position(&reference.trace)?;
    let ref_base = reference.trace.meta.raw_baseline;
    traces
        .iter()
        .map(|tt| {
            let m = metrics(&tt.trace)?;
            Ok(SweepRow {
                theta: tt.theta,
                loss: loss_perfect_hwp(tt.theta)?,
                visibility: m.visibility,
                dip_shift: m.dip_position - ref_pos,
                mean_rate: tt.trace.meta.raw_baseline / ref_base,
                dip_position: m.dip_position,
                asymmetry: m.asymmetry,
                mean_transmission: tt.mean_transmission,
            })
        })
        .collect()
}
