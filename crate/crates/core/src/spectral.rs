//! Units, quadrature grids and the Gaussian joint spectral amplitude.
//!
//! Everything inside the crate works in natural units with ħ = 1: angular
//! frequencies are photon energies in eV and delays are in eV⁻¹. Femtoseconds
//! and nanometres only appear at the I/O boundary.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// ħ in eV·fs.
pub const HBAR_EV_FS: f64 = 0.658_211_956_9;

/// h·c in eV·nm.
pub const HC_EV_NM: f64 = 1_239.841_984;

/// Angular frequency expressed as a photon energy in eV.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EnergyEv(pub f64);

/// Delay in eV⁻¹ (natural units).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DelayInvEv(pub f64);

impl EnergyEv {
    pub fn from_mev(mev: f64) -> Self {
        EnergyEv(mev * 1e-3)
    }

    pub fn from_wavelength_nm(nm: f64) -> Result<Self> {
        wavelength_nm_to_ev(nm)
    }

    #[inline]
    pub fn ev(self) -> f64 {
        self.0
    }

    pub fn wavelength_nm(self) -> f64 {
        HC_EV_NM / self.0
    }
}

impl DelayInvEv {
    pub fn from_fs(fs: f64) -> Self {
        fs_to_ev_inv(fs)
    }

    #[inline]
    pub fn inv_ev(self) -> f64 {
        self.0
    }

    pub fn fs(self) -> f64 {
        ev_inv_to_fs(self)
    }
}

pub fn ev_inv_to_fs(t: DelayInvEv) -> f64 {
    t.0 * HBAR_EV_FS
}

pub fn fs_to_ev_inv(fs: f64) -> DelayInvEv {
    DelayInvEv(fs / HBAR_EV_FS)
}

pub fn wavelength_nm_to_ev(nm: f64) -> Result<EnergyEv> {
    if !(nm > 0.0) || !nm.is_finite() {
        return Err(Error::param("wavelength_nm", format!("must be positive, got {nm}")));
    }
    Ok(EnergyEv(HC_EV_NM / nm))
}

/// Parameters of the Gaussian two-photon joint spectral amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JsaParams {
    /// Pump centre frequency.
    pub omega_p: EnergyEv,
    /// Pump bandwidth.
    pub sigma_p: EnergyEv,
    /// Pair (difference-frequency) bandwidth.
    pub sigma_minus: EnergyEv,
}

impl Default for JsaParams {
    /// 404 nm CW pump, 0.149 meV pump bandwidth, 6.8 meV pair bandwidth.
    fn default() -> Self {
        JsaParams {
            omega_p: EnergyEv(3.069),
            sigma_p: EnergyEv::from_mev(0.149),
            sigma_minus: EnergyEv::from_mev(6.8),
        }
    }
}

impl JsaParams {
    pub fn validate(&self) -> Result<()> {
        let check = |name: &'static str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::param(name, format!("must be positive and finite, got {v}")))
            }
        };
        check("omega_p", self.omega_p.0)?;
        check("sigma_p", self.sigma_p.0)?;
        check("sigma_minus", self.sigma_minus.0)
    }

    /// Degenerate centre frequency ω_p / 2 of each photon.
    pub fn center(&self) -> EnergyEv {
        EnergyEv(self.omega_p.0 / 2.0)
    }

    pub fn prefactor(&self) -> f64 {
        (2.0 * PI * self.sigma_p.0 * self.sigma_minus.0).sqrt().recip()
    }

    /// Amplitude in rotated coordinates ω₊ = ω₁ + ω₂, ω₋ = ω₁ − ω₂.
    #[inline]
    pub fn amplitude_rotated(&self, omega_plus: f64, omega_minus: f64) -> f64 {
        let dp = omega_plus - self.omega_p.0;
        let sp = self.sigma_p.0;
        let sm = self.sigma_minus.0;
        self.prefactor()
            * (-(dp * dp) / (16.0 * sp * sp) - omega_minus * omega_minus / (4.0 * sm * sm)).exp()
    }
}

/// Joint spectral amplitude f(ω₁, ω₂). Real, positive and exchange-symmetric.
pub fn jsa(omega1: EnergyEv, omega2: EnergyEv, p: &JsaParams) -> f64 {
    p.amplitude_rotated(omega1.0 + omega2.0, omega1.0 - omega2.0)
}

/// Uniform axis with an odd number of nodes so the centre is a node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub center: f64,
    pub half_width: f64,
    pub count: usize,
}

impl Axis {
    pub fn new(center: f64, half_width: f64, count: usize) -> Result<Self> {
        let axis = Axis {
            center,
            half_width,
            count,
        };
        axis.validate()?;
        Ok(axis)
    }

    pub fn validate(&self) -> Result<()> {
        if self.count < 3 || self.count % 2 == 0 {
            return Err(Error::param(
                "grid point count",
                format!("must be odd and >= 3, got {}", self.count),
            ));
        }
        if !(self.half_width > 0.0) || !self.half_width.is_finite() {
            return Err(Error::param(
                "grid half-width",
                format!("must be positive, got {}", self.half_width),
            ));
        }
        if !self.center.is_finite() {
            return Err(Error::param("grid center", "must be finite"));
        }
        Ok(())
    }

    pub fn step(&self) -> f64 {
        2.0 * self.half_width / (self.count - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        let mid = (self.count / 2) as f64;
        self.center + (i as f64 - mid) * self.step()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.count).map(|i| self.node(i)).collect()
    }

    /// Trapezoid weights.
    pub fn weights(&self) -> Vec<f64> {
        let h = self.step();
        (0..self.count)
            .map(|i| if i == 0 || i + 1 == self.count { 0.5 * h } else { h })
            .collect()
    }

    /// Same extent with `2n - 1` nodes (every old node is kept).
    pub fn refined(&self) -> Self {
        Axis {
            count: 2 * self.count - 1,
            ..*self
        }
    }
}

/// Tensor grid over the rotated frequency coordinates (ω₊, ω₋).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreqGrid2D {
    pub plus_axis: Axis,
    pub minus_axis: Axis,
}

pub const DEFAULT_N_PLUS: usize = 129;
pub const DEFAULT_N_MINUS: usize = 513;
/// Grid half-extent in standard deviations of each rotated marginal.
pub const GRID_SIGMAS: f64 = 8.0;

impl FreqGrid2D {
    pub fn validate(&self) -> Result<()> {
        self.plus_axis.validate()?;
        self.minus_axis.validate()?;
        if self.minus_axis.center != 0.0 {
            return Err(Error::param("minus axis", "must be centred at 0"));
        }
        Ok(())
    }

    pub fn refined(&self) -> Self {
        FreqGrid2D {
            plus_axis: self.plus_axis.refined(),
            minus_axis: self.minus_axis.refined(),
        }
    }
}

/// ±8σ grid around the JSA: the ω₊ marginal has standard deviation 2σ_P and
/// the ω₋ marginal σ₋.
pub fn default_grid(p: &JsaParams, n_plus: usize, n_minus: usize) -> Result<FreqGrid2D> {
    p.validate()?;
    let grid = FreqGrid2D {
        plus_axis: Axis::new(p.omega_p.0, GRID_SIGMAS * 2.0 * p.sigma_p.0, n_plus)?,
        minus_axis: Axis::new(0.0, GRID_SIGMAS * p.sigma_minus.0, n_minus)?,
    };
    Ok(grid)
}

/// Trapezoid estimate of ∬|f|² dω₁dω₂ (Jacobian ½ in rotated coordinates).
pub fn jsa_norm(p: &JsaParams, grid: &FreqGrid2D) -> f64 {
    let plus = grid.plus_axis.nodes();
    let wp = grid.plus_axis.weights();
    let minus = grid.minus_axis.nodes();
    let wm = grid.minus_axis.weights();
    let mut total = 0.0;
    for (m, wmj) in minus.iter().zip(&wm) {
        let mut row = 0.0;
        for (s, wpi) in plus.iter().zip(&wp) {
            let f = p.amplitude_rotated(*s, *m);
            row += wpi * f * f;
        }
        total += wmj * row;
    }
    0.5 * total
}
