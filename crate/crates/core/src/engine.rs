//! Two-photon coincidence rate R_c(τ).
//!
//! The rate is `A − Re B(τ)` with
//!
//! ```text
//! A    = ∬ |f|² |T(ω₁)|² W dω₁dω₂
//! B(τ) = ∬ f*(ω₁,ω₂) f(ω₂,ω₁) T*(ω₁) T(ω₂) W e^{−i(ω₁−ω₂)τ} dω₁dω₂
//! W    = |T_f(ω₁)|² |T_f(ω₂)|²
//! ```
//!
//! The constant 1/8π² is dropped, so rates are in units where a lossless
//! unfiltered sample has baseline 1. The double integral is a trapezoid sum
//! on the rotated grid (ω₊, ω₋). Since the delay kernel depends only on ω₋,
//! the ω₊ sum is folded once per ω₋ node and every τ costs one pass over the
//! ω₋ axis.

use std::f64::consts::{FRAC_PI_4, PI};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::elements::{Transmission, WaveplateParams};
use crate::error::{Error, Result};
use crate::spectral::{
    default_grid, EnergyEv, FreqGrid2D, JsaParams, DEFAULT_N_MINUS, DEFAULT_N_PLUS,
};

/// Tail window for baseline estimation, in units of 1/σ₋.
pub const BASELINE_TAIL_SIGMAS: f64 = 6.0;
/// Minimum number of tail points for a unit-baseline normalisation.
pub const BASELINE_MIN_POINTS: usize = 4;
/// Largest phase advance of the delay kernel per ω₋ step.
pub const ALIASING_LIMIT: f64 = FRAC_PI_4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    Raw,
    #[default]
    UnitBaseline,
}

#[derive(Debug, Clone)]
pub struct EngineConfig {
    pub grid: FreqGrid2D,
    /// Band-pass applied to both photons as |T_f(ω₁)|²|T_f(ω₂)|².
    pub filter: Option<Transmission>,
    /// Replace the ω₊ integral by its value at ω₊ = ω_p.
    pub cw_limit: bool,
    pub normalization: Normalization,
}

impl EngineConfig {
    pub fn new(grid: FreqGrid2D) -> Self {
        EngineConfig {
            grid,
            filter: None,
            cw_limit: false,
            normalization: Normalization::UnitBaseline,
        }
    }

    /// Default 129 × 513 grid, no filter.
    pub fn default_for(jsa: &JsaParams) -> Result<Self> {
        Ok(Self::new(default_grid(jsa, DEFAULT_N_PLUS, DEFAULT_N_MINUS)?))
    }

    pub fn with_filter(mut self, filter: Transmission) -> Self {
        self.filter = Some(filter);
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()
    }
}

/// The τ-independent part of the coincidence integral, ready to be
/// evaluated at many delays.
#[derive(Debug, Clone)]
pub struct CoincidenceKernel {
    baseline: f64,
    minus_nodes: Vec<f64>,
    /// ½·w₋ⱼ·Σᵢ w₊ᵢ |f|² W T*(ω₁)T(ω₂) per ω₋ node.
    folded: Vec<Complex64>,
    minus_step: f64,
    minus_half_width: f64,
}

impl CoincidenceKernel {
    pub fn new(jsa: &JsaParams, sample: &Transmission, cfg: &EngineConfig) -> Result<Self> {
        jsa.validate()?;
        cfg.validate()?;

        let (plus_nodes, plus_weights) = if cfg.cw_limit {
            let w = (2.0 * PI).sqrt() * 2.0 * jsa.sigma_p.0;
            (vec![jsa.omega_p.0], vec![w])
        } else {
            (cfg.grid.plus_axis.nodes(), cfg.grid.plus_axis.weights())
        };
        let minus_nodes = cfg.grid.minus_axis.nodes();
        let minus_weights = cfg.grid.minus_axis.weights();

        let rows: Vec<(f64, Complex64)> = minus_nodes
            .par_iter()
            .zip(minus_weights.par_iter())
            .map(|(&m, &wm)| {
                let mut a_row = 0.0;
                let mut b_row = Complex64::new(0.0, 0.0);
                for (&s, &wp) in plus_nodes.iter().zip(&plus_weights) {
                    let w1 = EnergyEv(0.5 * (s + m));
                    let w2 = EnergyEv(0.5 * (s - m));
                    let f = jsa.amplitude_rotated(s, m);
                    let mut weight = wp * f * f;
                    if let Some(filter) = &cfg.filter {
                        weight *= filter.power(w1) * filter.power(w2);
                    }
                    let t1 = sample.eval(w1);
                    let t2 = sample.eval(w2);
                    a_row += weight * t1.norm_sqr();
                    b_row += weight * (t1.conj() * t2);
                }
                (0.5 * wm * a_row, 0.5 * wm * b_row)
            })
            .collect();

        let baseline = rows.iter().map(|r| r.0).sum();
        let folded = rows.into_iter().map(|r| r.1).collect();
        Ok(CoincidenceKernel {
            baseline,
            minus_nodes,
            folded,
            minus_step: cfg.grid.minus_axis.step(),
            minus_half_width: cfg.grid.minus_axis.half_width,
        })
    }

    /// A = R_c(∞).
    pub fn baseline(&self) -> f64 {
        self.baseline
    }

    /// Largest |τ| the grid resolves.
    pub fn max_delay(&self) -> f64 {
        ALIASING_LIMIT / self.minus_step
    }

    fn check_delay(&self, tau: f64) -> Result<()> {
        let advance = self.minus_step * tau.abs();
        if advance > ALIASING_LIMIT || !tau.is_finite() {
            let needed = (2.0 * self.minus_half_width * tau.abs() / ALIASING_LIMIT).ceil() as usize + 1;
            return Err(Error::Aliasing {
                tau,
                advance,
                required_points: needed | 1,
            });
        }
        Ok(())
    }

    /// B(τ).
    pub fn interference(&self, tau: f64) -> Result<Complex64> {
        self.check_delay(tau)?;
        let mut acc = Complex64::new(0.0, 0.0);
        for (&m, g) in self.minus_nodes.iter().zip(&self.folded) {
            acc += g * Complex64::from_polar(1.0, -m * tau);
        }
        Ok(acc)
    }

    /// A − Re B(τ) before clamping.
    pub fn rate_unclamped(&self, tau: f64) -> Result<f64> {
        Ok(self.baseline - self.interference(tau)?.re)
    }

    pub fn rate(&self, tau: f64) -> Result<f64> {
        Ok(self.rate_unclamped(tau)?.max(0.0))
    }
}

/// Coincidence rate at a single delay by 2-D quadrature.
pub fn coincidence_numeric(
    tau: f64,
    jsa: &JsaParams,
    sample: &Transmission,
    cfg: &EngineConfig,
) -> Result<f64> {
    CoincidenceKernel::new(jsa, sample, cfg)?.rate(tau)
}

/// Baseline A of the unfiltered waveplate sample, in closed form.
pub fn closed_form_baseline(jsa: &JsaParams, wp: &WaveplateParams) -> f64 {
    let (c, s2) = cos_sin2(wp.theta);
    let sp2 = jsa.sigma_p.0.powi(2);
    let sm2 = jsa.sigma_minus.0.powi(2);
    let carrier = (wp.alpha * jsa.omega_p.0 / 2.0 + wp.beta).cos();
    0.5 * (1.0 + c * c) + 0.5 * s2 * (-wp.alpha.powi(2) * (sp2 + sm2 / 4.0) / 2.0).exp() * carrier
}

/// Exact value of the unfiltered coincidence integral for the linear
/// retardance waveplate sample.
///
/// With C = cos 2θ and a = α/2 the interference term is
/// `¼(1+C)² g(τ−a) + ¼(1−C)² g(τ+a) + ½ sin²2θ · e^{−α²σ_P²/2} cos(αω_p/2+β) g(τ)`
/// where `g(t) = exp(−σ₋²t²/2)`.
pub fn coincidence_closed_form(tau: f64, jsa: &JsaParams, wp: &WaveplateParams) -> f64 {
    let (c, s2) = cos_sin2(wp.theta);
    let sp2 = jsa.sigma_p.0.powi(2);
    let sm2 = jsa.sigma_minus.0.powi(2);
    let alpha = wp.alpha;
    let x = sm2 * alpha * tau / 2.0;
    let envelope = (-sm2 * (alpha * alpha + 4.0 * tau * tau) / 8.0).exp();
    let carrier = (alpha * jsa.omega_p.0 / 2.0 + wp.beta).cos();
    let b = envelope * (0.5 * (1.0 + c * c) * x.cosh() + c * x.sinh())
        + 0.5 * s2 * (-alpha * alpha * sp2 / 2.0).exp() * (-sm2 * tau * tau / 2.0).exp() * carrier;
    closed_form_baseline(jsa, wp) - b
}

fn cos_sin2(theta: f64) -> (f64, f64) {
    let c = (2.0 * theta).cos();
    let s = (2.0 * theta).sin();
    (c, s * s)
}

/// Uncorrelated-detection background.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BackgroundModel {
    /// Singles rate of the arm without the sample.
    pub singles_signal: f64,
    /// Singles rate of the sample arm when no sample is present.
    pub singles_idler_nosample: f64,
    /// Coincidence window.
    pub window: f64,
    /// Average sample transmission t̄.
    pub mean_transmission: f64,
}

impl BackgroundModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.singles_signal >= 0.0) || !(self.singles_idler_nosample >= 0.0) {
            return Err(Error::param("background singles", "rates must be >= 0"));
        }
        if !(self.window > 0.0) {
            return Err(Error::param("background window", "must be > 0"));
        }
        if !(0.0..=1.0).contains(&self.mean_transmission) {
            return Err(Error::param(
                "background mean_transmission",
                format!("must lie in [0, 1], got {}", self.mean_transmission),
            ));
        }
        Ok(())
    }

    /// Scales the singles so that a perfect dip with baseline `ideal_baseline`
    /// shows `visibility` at t̄ = 1. `singles_ratio` is signal / idler singles.
    pub fn calibrated(
        visibility: f64,
        ideal_baseline: f64,
        singles_ratio: f64,
        window: f64,
    ) -> Result<Self> {
        if !(visibility > 0.0 && visibility <= 1.0) {
            return Err(Error::param("visibility", format!("must lie in (0, 1], got {visibility}")));
        }
        if !(ideal_baseline > 0.0) || !(singles_ratio >= 0.0) || !(window > 0.0) {
            return Err(Error::param("background calibration", "baseline, ratio and window must be positive"));
        }
        // V = A / (A + 2F)  =>  F = A (1 − V) / 2V
        let floor = ideal_baseline * (1.0 - visibility) / (2.0 * visibility);
        let idler = (floor / window).sqrt() / (1.0 + singles_ratio);
        let bg = BackgroundModel {
            singles_signal: singles_ratio * idler,
            singles_idler_nosample: idler,
            window,
            mean_transmission: 1.0,
        };
        bg.validate()?;
        Ok(bg)
    }

    pub fn with_transmission(self, mean_transmission: f64) -> Self {
        BackgroundModel {
            mean_transmission,
            ..self
        }
    }
}

/// (I_s + t̄·I_i0)² · window.
pub fn accidental_rate(bg: &BackgroundModel) -> f64 {
    let s = bg.singles_signal + bg.mean_transmission * bg.singles_idler_nosample;
    s * s * bg.window
}

/// Filter-weighted mean |T|² of a sample relative to no sample.
pub fn mean_transmission(jsa: &JsaParams, sample: &Transmission, cfg: &EngineConfig) -> Result<f64> {
    let with = CoincidenceKernel::new(jsa, sample, cfg)?.baseline();
    let without = CoincidenceKernel::new(jsa, &Transmission::Identity, cfg)?.baseline();
    Ok((with / without).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceMeta {
    pub sigma_minus: f64,
    /// A of the integral, before background.
    pub ideal_baseline: f64,
    /// Baseline of the un-normalised rates (integral + background).
    pub raw_baseline: f64,
    /// Whether `raw_baseline` came from tail samples or from A + floor.
    pub baseline_from_tail: bool,
    /// Smallest pre-clamp rate divided by A.
    pub min_unclamped_relative: f64,
    pub normalization: Normalization,
}

/// Sampled coincidence rate against delay.
#[derive(Debug, Clone, PartialEq)]
pub struct DipTrace {
    /// Delays in eV⁻¹, strictly increasing.
    pub taus: Vec<f64>,
    pub rates: Vec<f64>,
    /// R_c(∞) in the units of `rates`.
    pub baseline: f64,
    /// Accidental floor in the units of `rates`.
    pub background: f64,
    pub meta: TraceMeta,
}

impl DipTrace {
    /// Builds a trace from precomputed samples (e.g. measured data).
    pub fn from_samples(taus: Vec<f64>, rates: Vec<f64>, baseline: f64) -> Result<Self> {
        check_taus(&taus)?;
        if taus.len() != rates.len() {
            return Err(Error::param("rates", "length must match taus"));
        }
        if rates.iter().any(|r| !(*r >= 0.0)) {
            return Err(Error::param("rates", "must be non-negative"));
        }
        Ok(DipTrace {
            taus,
            rates,
            baseline,
            background: 0.0,
            meta: TraceMeta {
                sigma_minus: f64::NAN,
                ideal_baseline: baseline,
                raw_baseline: baseline,
                baseline_from_tail: false,
                min_unclamped_relative: 0.0,
                normalization: Normalization::Raw,
            },
        })
    }

    pub fn len(&self) -> usize {
        self.taus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taus.is_empty()
    }

    pub fn min_rate(&self) -> f64 {
        self.rates.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Rates divided by the baseline.
    pub fn normalized_rates(&self) -> Vec<f64> {
        self.rates.iter().map(|r| r / self.baseline).collect()
    }
}

fn check_taus(taus: &[f64]) -> Result<()> {
    if taus.is_empty() {
        return Err(Error::param("taus", "must not be empty"));
    }
    if taus.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::param("taus", "must be strictly increasing"));
    }
    Ok(())
}

/// Sweeps the delay, adds the accidental floor and normalises.
pub fn trace(
    jsa: &JsaParams,
    sample: &Transmission,
    cfg: &EngineConfig,
    taus: &[f64],
    bg: Option<&BackgroundModel>,
) -> Result<DipTrace> {
    let kernel = CoincidenceKernel::new(jsa, sample, cfg)?;
    trace_with_kernel(&kernel, jsa, cfg.normalization, taus, bg)
}

pub fn trace_with_kernel(
    kernel: &CoincidenceKernel,
    jsa: &JsaParams,
    normalization: Normalization,
    taus: &[f64],
    bg: Option<&BackgroundModel>,
) -> Result<DipTrace> {
    check_taus(taus)?;
    let floor = match bg {
        Some(b) => {
            b.validate()?;
            accidental_rate(b)
        }
        None => 0.0,
    };
    let a = kernel.baseline();
    let unclamped: Vec<f64> = taus
        .par_iter()
        .map(|&t| kernel.rate_unclamped(t))
        .collect::<Result<_>>()?;
    let min_rel = unclamped.iter().copied().fold(f64::INFINITY, f64::min) / a;
    let rates: Vec<f64> = unclamped.iter().map(|r| r.max(0.0) + floor).collect();

    let cutoff = BASELINE_TAIL_SIGMAS / jsa.sigma_minus.0;
    let tail: Vec<f64> = taus
        .iter()
        .zip(&rates)
        .filter(|(t, _)| t.abs() >= cutoff)
        .map(|(_, r)| *r)
        .collect();
    let from_tail = tail.len() >= BASELINE_MIN_POINTS;
    let raw_baseline = if from_tail {
        tail.iter().sum::<f64>() / tail.len() as f64
    } else if normalization == Normalization::UnitBaseline {
        return Err(Error::Baseline(format!(
            "unit-baseline normalisation needs at least {BASELINE_MIN_POINTS} delays with |tau| >= {cutoff:.1} eV^-1, found {}",
            tail.len()
        )));
    } else {
        a + floor
    };

    let meta = TraceMeta {
        sigma_minus: jsa.sigma_minus.0,
        ideal_baseline: a,
        raw_baseline,
        baseline_from_tail: from_tail,
        min_unclamped_relative: min_rel,
        normalization,
    };
    let trace = match normalization {
        Normalization::Raw => DipTrace {
            taus: taus.to_vec(),
            rates,
            baseline: raw_baseline,
            background: floor,
            meta,
        },
        Normalization::UnitBaseline => {
            if !(raw_baseline > 0.0) {
                return Err(Error::Baseline("baseline is not positive".into()));
            }
            DipTrace {
                taus: taus.to_vec(),
                rates: rates.iter().map(|r| r / raw_baseline).collect(),
                baseline: 1.0,
                background: floor / raw_baseline,
                meta,
            }
        }
    };
    Ok(trace)
}

/// `count` evenly spaced delays over [min, max] (eV⁻¹).
pub fn linspace(min: f64, max: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![min];
    }
    let step = (max - min) / (count - 1) as f64;
    (0..count).map(|i| min + step * i as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elements::{FilterParams, LinearPhaseParams, MO_ALPHA};
    use approx::assert_relative_eq;

    fn setup() -> (JsaParams, EngineConfig) {
        let jsa = JsaParams::default();
        (jsa, EngineConfig::default_for(&jsa).unwrap())
    }

    #[test]
    fn identity_gives_perfect_dip_and_recovers_baseline() {
        let (jsa, cfg) = setup();
        let k = CoincidenceKernel::new(&jsa, &Transmission::Identity, &cfg).unwrap();
        let a = k.baseline();
        assert!((a - 1.0).abs() < 1e-6);
        assert!(k.rate_unclamped(0.0).unwrap().abs() <= 1e-9 * a);
        let far = 8.0 / jsa.sigma_minus.0;
        assert!((k.rate(far).unwrap() - a).abs() <= 1e-6 * a);
        assert!((k.rate(-far).unwrap() - a).abs() <= 1e-6 * a);
    }

    #[test]
    fn mo_plate_at_zero_angle_shifts_dip_by_half_slope() {
        let (jsa, cfg) = setup();
        let sample = Transmission::waveplate_pbs(WaveplateParams::multi_order(0.0)).unwrap();
        let k = CoincidenceKernel::new(&jsa, &sample, &cfg).unwrap();
        let shift = MO_ALPHA / 2.0;
        assert!(k.rate(shift).unwrap() <= 1e-9 * k.baseline());
        let taus = linspace(shift - 5.0, shift + 5.0, 101);
        let rates: Vec<f64> = taus.iter().map(|&t| k.rate(t).unwrap()).collect();
        let imin = (0..rates.len()).min_by(|&i, &j| rates[i].total_cmp(&rates[j])).unwrap();
        assert!((taus[imin] - 20.15).abs() < 0.051);
        assert_relative_eq!(crate::spectral::ev_inv_to_fs(crate::spectral::DelayInvEv(shift)), 13.26, epsilon = 5e-3);
    }

    #[test]
    fn aliasing_guard_is_loud() {
        let jsa = JsaParams::default();
        let cfg = EngineConfig::new(default_grid(&jsa, 9, 17).unwrap());
        let k = CoincidenceKernel::new(&jsa, &Transmission::Identity, &cfg).unwrap();
        let limit = k.max_delay();
        assert!(k.rate(0.99 * limit).is_ok());
        match k.rate(1.01 * limit) {
            Err(Error::Aliasing { required_points, .. }) => assert!(required_points > 17 && required_points % 2 == 1),
            other => panic!("expected aliasing error, got {other:?}"),
        }
    }

    #[test]
    fn cw_limit_matches_finite_pump_for_narrow_pump() {
        let (jsa, cfg) = setup();
        let sample = Transmission::waveplate_pbs(WaveplateParams::multi_order(0.5)).unwrap();
        let cw = EngineConfig { cw_limit: true, ..cfg.clone() };
        for tau in [-100.0, 0.0, 20.0, 150.0] {
            let full = coincidence_numeric(tau, &jsa, &sample, &cfg).unwrap();
            let approx = coincidence_numeric(tau, &jsa, &sample, &cw).unwrap();
            assert!((full - approx).abs() < 1e-4);
        }
    }

    #[test]
    fn phase_ramp_translates_trace() {
        let (jsa, cfg) = setup();
        let delay = 30.0;
        let ramp = Transmission::LinearPhase(LinearPhaseParams { delay: delay / 2.0, offset: 0.4 });
        let k0 = CoincidenceKernel::new(&jsa, &Transmission::Identity, &cfg).unwrap();
        let k1 = CoincidenceKernel::new(&jsa, &ramp, &cfg).unwrap();
        for tau in linspace(-300.0, 300.0, 41) {
            let a = k0.rate(tau).unwrap();
            let b = k1.rate(tau + delay / 2.0).unwrap();
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn accidental_floor() {
        let bg = BackgroundModel {
            singles_signal: 3.0,
            singles_idler_nosample: 3.0,
            window: 0.5,
            mean_transmission: 1.0,
        };
        assert_relative_eq!(accidental_rate(&bg), 4.0 * 9.0 * 0.5);
        let dark = BackgroundModel { singles_signal: 0.0, mean_transmission: 0.0, ..bg };
        assert_eq!(accidental_rate(&dark), 0.0);
        // accidental/true with I_s = I_i0 grows like (1 + t)²/t
        let ratio = |t: f64| accidental_rate(&bg.with_transmission(t)) / (t * 9.0);
        assert!(ratio(0.01) > ratio(0.1) && ratio(0.1) > ratio(1.0));
        assert!(ratio(1e-6) > 1e5);
        assert!(BackgroundModel { window: 0.0, ..bg }.validate().is_err());
        assert!(BackgroundModel { mean_transmission: 1.5, ..bg }.validate().is_err());
    }

    #[test]
    fn calibrated_background_hits_target_visibility() {
        let bg = BackgroundModel::calibrated(0.967, 0.8, 0.3, 2.0).unwrap();
        let f = accidental_rate(&bg);
        let v = 0.8 / (0.8 + 2.0 * f);
        assert_relative_eq!(v, 0.967, max_relative = 1e-14);
        assert_relative_eq!(bg.singles_signal / bg.singles_idler_nosample, 0.3, max_relative = 1e-14);
    }

    #[test]
    fn trace_normalisation_and_errors() {
        let (jsa, cfg) = setup();
        let cutoff = BASELINE_TAIL_SIGMAS / jsa.sigma_minus.0;
        let taus = linspace(-1.5 * cutoff, 1.5 * cutoff, 201);
        let tr = trace(&jsa, &Transmission::Identity, &cfg, &taus, None).unwrap();
        assert_eq!(tr.baseline, 1.0);
        assert!(tr.min_rate() <= 1e-9);
        assert!(tr.meta.baseline_from_tail);

        let short = linspace(-300.0, 300.0, 201);
        assert!(matches!(
            trace(&jsa, &Transmission::Identity, &cfg, &short, None),
            Err(Error::Baseline(_))
        ));
        let raw = EngineConfig { normalization: Normalization::Raw, ..cfg.clone() };
        let tr = trace(&jsa, &Transmission::Identity, &raw, &short, None).unwrap();
        assert!(!tr.meta.baseline_from_tail);
        assert!((tr.baseline - 1.0).abs() < 1e-6);
        assert!(trace(&jsa, &Transmission::Identity, &cfg, &[1.0, 0.0], None).is_err());
    }

    #[test]
    fn background_equal_to_baseline_gives_one_third_visibility() {
        let (jsa, cfg) = setup();
        let a = CoincidenceKernel::new(&jsa, &Transmission::Identity, &cfg).unwrap().baseline();
        let bg = BackgroundModel { singles_signal: a.sqrt(), singles_idler_nosample: 0.0, window: 1.0, mean_transmission: 1.0 };
        let cutoff = BASELINE_TAIL_SIGMAS / jsa.sigma_minus.0;
        let taus = linspace(-1.5 * cutoff, 1.5 * cutoff, 201);
        let tr = trace(&jsa, &Transmission::Identity, &cfg, &taus, Some(&bg)).unwrap();
        assert!((tr.min_rate() - 0.5).abs() < 1e-8);
        let v = (1.0 - tr.min_rate()) / (1.0 + tr.min_rate());
        assert!((v - 1.0 / 3.0).abs() < 1e-8);
    }

    #[test]
    fn filtered_identity_is_still_a_perfect_dip() {
        let (jsa, cfg) = setup();
        let cfg = cfg.with_filter(Transmission::filter(FilterParams::default()).unwrap());
        let k = CoincidenceKernel::new(&jsa, &Transmission::Identity, &cfg).unwrap();
        assert!(k.baseline() < 1.0 && k.baseline() > 0.1);
        assert!(k.rate_unclamped(0.0).unwrap().abs() <= 1e-9 * k.baseline());
    }
}
