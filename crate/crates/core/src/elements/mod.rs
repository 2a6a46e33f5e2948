//! Complex transmission functions T(ω) of passive optical elements.
//!
//! A [`Transmission`] is an immutable value that can be evaluated at any
//! frequency. Elements cascade by pointwise multiplication ([`compose`]).

mod tabulated;

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::EnergyEv;

pub use tabulated::{Abscissa, Tabulated};

/// Slack allowed on |T| ≤ 1.
pub const PASSIVITY_SLACK: f64 = 1e-9;

/// Linear retardance φ(ω) = α·ω + β of a waveplate whose fast axis sits at θ,
/// followed by a polariser that keeps the input polarisation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveplateParams {
    /// Retardance slope in eV⁻¹.
    pub alpha: f64,
    /// Retardance intercept in rad.
    pub beta: f64,
    /// Fast-axis angle in rad, in [0, π/2].
    pub theta: f64,
}

/// Printed multi-order plate retardance slope (eV⁻¹) and intercept (rad).
pub const MO_ALPHA: f64 = 40.30;
pub const MO_BETA: f64 = -60.23;
/// Zero-order plate retardance slope (eV⁻¹) and intercept (rad).
pub const ZO_ALPHA: f64 = 2.18;
pub const ZO_BETA: f64 = -0.21;

impl WaveplateParams {
    pub fn new(alpha: f64, beta: f64, theta: f64) -> Result<Self> {
        let p = WaveplateParams { alpha, beta, theta };
        p.validate()?;
        Ok(p)
    }

    pub fn multi_order(theta: f64) -> Self {
        WaveplateParams {
            alpha: MO_ALPHA,
            beta: MO_BETA,
            theta,
        }
    }

    pub fn zero_order(theta: f64) -> Self {
        WaveplateParams {
            alpha: ZO_ALPHA,
            beta: ZO_BETA,
            theta,
        }
    }

    /// Moves the intercept so that φ(ω_c) = π exactly.
    pub fn reanchored(self, omega_c: EnergyEv) -> Self {
        WaveplateParams {
            beta: PI - self.alpha * omega_c.0,
            ..self
        }
    }

    pub fn with_theta(self, theta: f64) -> Self {
        WaveplateParams { theta, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.alpha.is_finite() || !self.beta.is_finite() {
            return Err(Error::param("waveplate", "alpha and beta must be finite"));
        }
        check_theta(self.theta)
    }

    #[inline]
    pub fn retardance(&self, omega: EnergyEv) -> f64 {
        self.alpha * omega.0 + self.beta
    }

    /// Phase ΔΥ(ω) of the projected transmission.
    pub fn phase(&self, omega: EnergyEv) -> f64 {
        let half = 0.5 * self.retardance(omega);
        (-half.sin() * (2.0 * self.theta).cos()).atan2(half.cos())
    }
}

fn check_theta(theta: f64) -> Result<()> {
    if (0.0..=FRAC_PI_2).contains(&theta) {
        Ok(())
    } else {
        Err(Error::param("theta", format!("must lie in [0, pi/2] rad, got {theta}")))
    }
}

/// Lorentz oscillator seen through a slab: T(ω) = exp(i·A / (Ω − ω − i/T₂)).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LorentzParams {
    /// A = B·L/c in eV.
    pub strength: f64,
    /// Resonance Ω.
    pub omega_res: EnergyEv,
    /// Dephasing time in eV⁻¹.
    pub t2: f64,
}

impl LorentzParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.strength >= 0.0) || !self.strength.is_finite() {
            return Err(Error::param("strength", format!("must be >= 0, got {}", self.strength)));
        }
        if !(self.t2 > 0.0) || !self.t2.is_finite() {
            return Err(Error::param("t2", format!("must be > 0, got {}", self.t2)));
        }
        if !(self.omega_res.0 > 0.0) {
            return Err(Error::param("omega_res", "must be > 0"));
        }
        Ok(())
    }

    /// Closed form of |T(ω)|².
    pub fn power(&self, omega: EnergyEv) -> f64 {
        let d = (self.omega_res.0 - omega.0) * self.t2;
        (-2.0 * self.strength * self.t2 / (d * d + 1.0)).exp()
    }
}

/// Super-Gaussian band-pass amplitude a·exp(−((ω−b)/c)⁶) + d.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterParams {
    pub a: f64,
    pub b: EnergyEv,
    pub c: EnergyEv,
    pub d: f64,
}

impl Default for FilterParams {
    /// Nominal 810 nm / 10 nm FWHM hard-coated band-pass.
    fn default() -> Self {
        FilterParams {
            a: 0.95,
            b: EnergyEv(1.5307),
            c: EnergyEv(0.01007),
            d: 0.001,
        }
    }
}

impl FilterParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0 && self.a <= 1.0) {
            return Err(Error::param("filter.a", format!("must lie in (0, 1], got {}", self.a)));
        }
        if !(self.d >= 0.0 && self.d < 1.0) {
            return Err(Error::param("filter.d", format!("must lie in [0, 1), got {}", self.d)));
        }
        if self.a + self.d > 1.0 + PASSIVITY_SLACK {
            return Err(Error::param("filter", "a + d must not exceed 1"));
        }
        if !(self.c.0 > 0.0) {
            return Err(Error::param("filter.c", "width must be positive"));
        }
        if !self.b.0.is_finite() {
            return Err(Error::param("filter.b", "centre must be finite"));
        }
        Ok(())
    }

    /// Half width at half maximum of the peak (ignoring the baseline).
    pub fn hwhm(&self) -> f64 {
        self.c.0 * std::f64::consts::LN_2.powf(1.0 / 6.0)
    }

    /// Full-width-at-half-maximum interval around the centre.
    pub fn fwhm_band(&self) -> (EnergyEv, EnergyEv) {
        let h = self.hwhm();
        (EnergyEv(self.b.0 - h), EnergyEv(self.b.0 + h))
    }
}

/// Pure linear phase exp(−i(τ₀·ω + φ₀)): a lossless group delay of τ₀.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearPhaseParams {
    /// Group delay in eV⁻¹.
    pub delay: f64,
    /// Constant phase in rad.
    pub offset: f64,
}

/// Kind tag of a [`Transmission`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Kind {
    Identity,
    Constant,
    WaveplatePbs,
    LinearPhase,
    Lorentz,
    SupergaussianFilter,
    Tabulated,
    Product,
}

/// An evaluable complex transmission T(ω).
#[derive(Debug, Clone, PartialEq)]
pub enum Transmission {
    Identity,
    /// Frequency-independent factor with |c| ≤ 1.
    Constant(Complex64),
    WaveplatePbs(WaveplateParams),
    LinearPhase(LinearPhaseParams),
    Lorentz(LorentzParams),
    SupergaussianFilter(FilterParams),
    Tabulated(Tabulated),
    Product(Box<Transmission>, Box<Transmission>),
}

impl Transmission {
    pub fn constant(c: Complex64) -> Result<Self> {
        if !(c.norm() <= 1.0 + PASSIVITY_SLACK) {
            return Err(Error::param("constant", format!("|c| = {} exceeds 1", c.norm())));
        }
        Ok(Transmission::Constant(c))
    }

    pub fn waveplate_pbs(p: WaveplateParams) -> Result<Self> {
        p.validate()?;
        Ok(Transmission::WaveplatePbs(p))
    }

    pub fn lorentz(p: LorentzParams) -> Result<Self> {
        p.validate()?;
        Ok(Transmission::Lorentz(p))
    }

    pub fn filter(p: FilterParams) -> Result<Self> {
        p.validate()?;
        Ok(Transmission::SupergaussianFilter(p))
    }

    pub fn kind(&self) -> Kind {
        match self {
            Transmission::Identity => Kind::Identity,
            Transmission::Constant(_) => Kind::Constant,
            Transmission::WaveplatePbs(_) => Kind::WaveplatePbs,
            Transmission::LinearPhase(_) => Kind::LinearPhase,
            Transmission::Lorentz(_) => Kind::Lorentz,
            Transmission::SupergaussianFilter(_) => Kind::SupergaussianFilter,
            Transmission::Tabulated(_) => Kind::Tabulated,
            Transmission::Product(..) => Kind::Product,
        }
    }

    pub fn eval(&self, omega: EnergyEv) -> Complex64 {
        match self {
            Transmission::Identity => Complex64::new(1.0, 0.0),
            Transmission::Constant(c) => *c,
            Transmission::WaveplatePbs(p) => waveplate_pbs(omega, p),
            Transmission::LinearPhase(p) => Complex64::from_polar(1.0, -(p.delay * omega.0 + p.offset)),
            Transmission::Lorentz(p) => lorentz_transmission(omega, p),
            Transmission::SupergaussianFilter(p) => Complex64::new(supergaussian(omega, p), 0.0),
            Transmission::Tabulated(t) => t.eval(omega),
            Transmission::Product(a, b) => a.eval(omega) * b.eval(omega),
        }
    }

    pub fn power(&self, omega: EnergyEv) -> f64 {
        self.eval(omega).norm_sqr()
    }

    pub fn then(self, other: Transmission) -> Transmission {
        compose(self, other)
    }
}

/// Cascade of two elements.
pub fn compose(t1: Transmission, t2: Transmission) -> Transmission {
    Transmission::Product(Box::new(t1), Box::new(t2))
}

/// Waveplate + polariser: cos(φ/2) − i·sin(φ/2)·cos 2θ.
pub fn waveplate_pbs(omega: EnergyEv, p: &WaveplateParams) -> Complex64 {
    let half = 0.5 * p.retardance(omega);
    Complex64::new(half.cos(), -half.sin() * (2.0 * p.theta).cos())
}

/// Loss of an ideal half-wave plate + polariser, 1 − cos²2θ.
pub fn loss_perfect_hwp(theta: f64) -> Result<f64> {
    check_theta(theta)?;
    let c = (2.0 * theta).cos();
    Ok(1.0 - c * c)
}

/// Retardance 2π·L·Δn/λ of a birefringent plate of thickness `length_um`.
pub fn birefringent_phase(length_um: f64, delta_n: f64, wavelength_nm: f64) -> Result<f64> {
    if !(length_um > 0.0) {
        return Err(Error::param("length", format!("must be positive, got {length_um}")));
    }
    if !(wavelength_nm > 0.0) {
        return Err(Error::param("wavelength", format!("must be positive, got {wavelength_nm}")));
    }
    Ok(2.0 * PI * (length_um * 1e3) * delta_n / wavelength_nm)
}

pub fn lorentz_transmission(omega: EnergyEv, p: &LorentzParams) -> Complex64 {
    let denom = Complex64::new(p.omega_res.0 - omega.0, -1.0 / p.t2);
    (Complex64::i() * p.strength / denom).exp()
}

pub fn supergaussian(omega: EnergyEv, p: &FilterParams) -> f64 {
    let x = (omega.0 - p.b.0) / p.c.0;
    let x2 = x * x;
    p.a * (-(x2 * x2 * x2)).exp() + p.d
}
