//! Scenario files: TOML tables describing the source, sample, filter,
//! background, delay scan and outputs of one run.
//!
//! External units are the lab ones: eV / meV / nm for frequencies, fs for
//! delays, degrees for angles.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::elements::{
    FilterParams, LinearPhaseParams, LorentzParams, Transmission, WaveplateParams, MO_ALPHA, MO_BETA,
    ZO_ALPHA, ZO_BETA,
};
use crate::engine::{linspace, EngineConfig, Normalization};
use crate::error::{Error, Result};
use crate::spectral::{default_grid, fs_to_ev_inv, wavelength_nm_to_ev, EnergyEv, JsaParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Dip,
    Sweep,
    FitT2,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Dip => "dip",
            Command::Sweep => "sweep",
            Command::FitT2 => "fit-t2",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    /// Angles for dip overlays, sweeps and T₂ fits.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub thetas_deg: Option<Vec<f64>>,
    pub jsa: JsaSection,
    pub grid: GridSection,
    pub sample: SampleSection,
    pub filter: FilterSection,
    pub background: BackgroundSection,
    pub scan: ScanSection,
    pub fit: FitSection,
    pub output: OutputSection,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            thetas_deg: None,
            jsa: JsaSection::default(),
            grid: GridSection::default(),
            sample: SampleSection::default(),
            filter: FilterSection::default(),
            background: BackgroundSection::default(),
            scan: ScanSection::default(),
            fit: FitSection::default(),
            output: OutputSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JsaSection {
    pub omega_p_ev: f64,
    pub sigma_p_mev: f64,
    pub sigma_minus_mev: f64,
}

impl Default for JsaSection {
    fn default() -> Self {
        let p = JsaParams::default();
        JsaSection {
            omega_p_ev: p.omega_p.0,
            sigma_p_mev: p.sigma_p.0 * 1e3,
            sigma_minus_mev: p.sigma_minus.0 * 1e3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub n_plus: usize,
    pub n_minus: usize,
    /// Collapse the ω₊ axis (monochromatic pump).
    pub cw_limit: bool,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection {
            n_plus: crate::spectral::DEFAULT_N_PLUS,
            n_minus: crate::spectral::DEFAULT_N_MINUS,
            cw_limit: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleKind {
    Identity,
    Constant,
    WaveplatePbs,
    LinearPhase,
    Lorentz,
    Tabulated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Mo,
    Zo,
}

/// How the waveplate intercept is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BetaMode {
    /// Use β as given.
    Printed,
    /// β = π − α·ω_c, so the plate is exactly half-wave at `anchor_nm`.
    Reanchored,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleSection {
    pub kind: SampleKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<Preset>,
    /// eV⁻¹.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    /// rad.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    pub beta_mode: BetaMode,
    pub anchor_nm: f64,
    pub theta_deg: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delay_fs: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub offset_rad: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub strength_ev: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega_res_nm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t2_fs: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub re: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub im: Option<f64>,
}

impl Default for SampleSection {
    fn default() -> Self {
        SampleSection {
            kind: SampleKind::Identity,
            preset: None,
            alpha: None,
            beta: None,
            beta_mode: BetaMode::Printed,
            anchor_nm: 808.0,
            theta_deg: 0.0,
            delay_fs: None,
            offset_rad: None,
            strength_ev: None,
            omega_res_nm: None,
            t2_fs: None,
            path: None,
            re: None,
            im: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterSection {
    pub enabled: bool,
    pub a: f64,
    pub b_ev: f64,
    pub c_ev: f64,
    pub d: f64,
}

impl Default for FilterSection {
    fn default() -> Self {
        let f = FilterParams::default();
        FilterSection {
            enabled: false,
            a: f.a,
            b_ev: f.b.0,
            c_ev: f.c.0,
            d: f.d,
        }
    }
}

impl FilterSection {
    pub fn params(&self) -> FilterParams {
        FilterParams {
            a: self.a,
            b: EnergyEv(self.b_ev),
            c: EnergyEv(self.c_ev),
            d: self.d,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackgroundSection {
    pub enabled: bool,
    /// No-loss visibility the accidental floor is scaled to.
    pub calibrate_visibility: f64,
    /// I_s / I_i0.
    pub singles_ratio: f64,
    pub window: f64,
    /// Explicit singles; when both are set no calibration is done.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub singles_signal: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub singles_idler_nosample: Option<f64>,
}

impl Default for BackgroundSection {
    fn default() -> Self {
        BackgroundSection {
            enabled: false,
            calibrate_visibility: 0.967,
            singles_ratio: 0.3,
            window: 1.0,
            singles_signal: None,
            singles_idler_nosample: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanSection {
    pub min_fs: f64,
    pub max_fs: f64,
    pub count: usize,
    pub normalization: Normalization,
}

impl Default for ScanSection {
    fn default() -> Self {
        ScanSection {
            min_fs: -800.0,
            max_fs: 800.0,
            count: 201,
            normalization: Normalization::UnitBaseline,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitSection {
    /// [short, long] wavelength edges; defaults to the filter FWHM.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub band_nm: Option<[f64; 2]>,
    pub n_samples: usize,
    pub omega_res_nm: f64,
    /// Fit Ω as well instead of holding it at `omega_res_nm`.
    pub free_resonance: bool,
    /// Angles drawn in the spectrum plot; defaults to the last angle.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub show_thetas_deg: Option<Vec<f64>>,
}

impl Default for FitSection {
    fn default() -> Self {
        FitSection {
            band_nm: None,
            n_samples: 101,
            omega_res_nm: 808.0,
            free_resonance: false,
            show_thetas_deg: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    /// File name (pattern for `dip`: `{theta}` expands to the angle).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub csv: Option<String>,
    /// Set to "" to skip the plot.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub svg: Option<String>,
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

/// Applies `table.key=value` to a parsed TOML document. Values are read as
/// TOML literals when possible and as bare strings otherwise.
pub fn apply_override(doc: &mut toml::Table, spec: &str) -> Result<()> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| config_err(format!("override `{spec}`: expected key=value")))?;
    let path = path.trim();
    let raw = raw.trim();
    if path.is_empty() || path.split('.').any(str::is_empty) {
        return Err(config_err(format!("override `{spec}`: empty key")));
    }
    let value = match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let keys: Vec<&str> = path.split('.').collect();
    let (last, parents) = keys.split_last().expect("non-empty");
    let mut table = doc;
    for k in parents {
        let entry = table
            .entry(k.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| config_err(format!("override `{spec}`: `{k}` is not a table")))?;
    }
    table.insert(last.to_string(), value);
    Ok(())
}

impl Scenario {
    /// Parses a scenario (or a run manifest; its `[run]` table is ignored).
    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<Self> {
        let mut doc: toml::Table = text.parse().map_err(|e: toml::de::Error| config_err(e.to_string()))?;
        let is_manifest = doc.remove("run").is_some();
        if !is_manifest {
            // typed parse of the text itself so diagnostics carry line/column
            let direct: Scenario = toml::from_str(text).map_err(|e| config_err(e.to_string()))?;
            if overrides.is_empty() {
                return Ok(direct);
            }
        }
        for o in overrides {
            apply_override(&mut doc, o)?;
        }
        toml::Value::Table(doc)
            .try_into()
            .map_err(|e: toml::de::Error| config_err(format!("after --set overrides: {e}")))
    }

    /// Loads, applies overrides, resolves relative sample paths against the
    /// config directory and validates.
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
        let mut s = Self::from_toml_str(&text, overrides)
            .map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        if let Some(p) = &s.sample.path {
            if p.is_relative() {
                let base = path.parent().unwrap_or(Path::new("."));
                s.sample.path = Some(base.join(p));
            }
        }
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.scan.count < 5 {
            return Err(config_err(format!("scan.count must be >= 5, got {}", self.scan.count)));
        }
        if !(self.scan.max_fs > self.scan.min_fs) {
            return Err(config_err("scan.max_fs must exceed scan.min_fs"));
        }
        if let Some(t) = &self.thetas_deg {
            if let Some(bad) = t.iter().find(|t| !(0.0..=90.0).contains(*t)) {
                return Err(config_err(format!("thetas_deg: {bad} outside [0, 90]")));
            }
        }
        if matches!(&self.output.csv, Some(c) if c.trim().is_empty()) {
            return Err(config_err("output.csv must not be empty"));
        }
        if self.fit.n_samples < crate::inversion::MIN_FIT_SAMPLES {
            return Err(config_err(format!(
                "fit.n_samples must be >= {}",
                crate::inversion::MIN_FIT_SAMPLES
            )));
        }
        if self.background.enabled {
            let b = &self.background;
            if b.singles_signal.is_some() != b.singles_idler_nosample.is_some() {
                return Err(config_err(
                    "background: give both singles_signal and singles_idler_nosample, or neither",
                ));
            }
        }
        self.jsa_params()?;
        self.engine_config()?;
        self.sample_at(self.sample.theta_deg)?;
        Ok(())
    }

    pub fn jsa_params(&self) -> Result<JsaParams> {
        let p = JsaParams {
            omega_p: EnergyEv(self.jsa.omega_p_ev),
            sigma_p: EnergyEv::from_mev(self.jsa.sigma_p_mev),
            sigma_minus: EnergyEv::from_mev(self.jsa.sigma_minus_mev),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn engine_config(&self) -> Result<EngineConfig> {
        let jsa = self.jsa_params()?;
        let mut cfg = EngineConfig::new(default_grid(&jsa, self.grid.n_plus, self.grid.n_minus)?);
        cfg.cw_limit = self.grid.cw_limit;
        cfg.normalization = self.scan.normalization;
        if self.filter.enabled {
            cfg = cfg.with_filter(Transmission::filter(self.filter.params())?);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Waveplate parameters with preset and β mode applied (θ from the
    /// sample table).
    pub fn plate(&self) -> Result<WaveplateParams> {
        let s = &self.sample;
        let (pa, pb) = match s.preset {
            Some(Preset::Mo) => (Some(MO_ALPHA), Some(MO_BETA)),
            Some(Preset::Zo) => (Some(ZO_ALPHA), Some(ZO_BETA)),
            None => (None, None),
        };
        let alpha = s
            .alpha
            .or(pa)
            .ok_or_else(|| config_err("sample.alpha (or sample.preset) is required for waveplate_pbs"))?;
        let beta = s.beta.or(pb).unwrap_or(0.0);
        if s.beta.is_none() && pb.is_none() && s.beta_mode == BetaMode::Printed {
            return Err(config_err("sample.beta (or sample.preset, or beta_mode = \"reanchored\") is required"));
        }
        let mut p = WaveplateParams::new(alpha, beta, s.theta_deg.to_radians())?;
        if s.beta_mode == BetaMode::Reanchored {
            p = p.reanchored(wavelength_nm_to_ev(s.anchor_nm)?);
        }
        Ok(p)
    }

    pub fn sample_at(&self, theta_deg: f64) -> Result<Transmission> {
        let s = &self.sample;
        let need = |v: Option<f64>, name: &str| {
            v.ok_or_else(|| config_err(format!("sample.{name} is required for this kind")))
        };
        match s.kind {
            SampleKind::Identity => Ok(Transmission::Identity),
            SampleKind::Constant => Transmission::constant(Complex64::new(need(s.re, "re")?, s.im.unwrap_or(0.0))),
            SampleKind::WaveplatePbs => {
                Transmission::waveplate_pbs(self.plate()?.with_theta(theta_deg.to_radians()))
            }
            SampleKind::LinearPhase => Ok(Transmission::LinearPhase(LinearPhaseParams {
                delay: fs_to_ev_inv(need(s.delay_fs, "delay_fs")?).0,
                offset: s.offset_rad.unwrap_or(0.0),
            })),
            SampleKind::Lorentz => Transmission::lorentz(LorentzParams {
                strength: need(s.strength_ev, "strength_ev")?,
                omega_res: wavelength_nm_to_ev(s.omega_res_nm.unwrap_or(808.0))?,
                t2: fs_to_ev_inv(need(s.t2_fs, "t2_fs")?).0,
            }),
            SampleKind::Tabulated => {
                let path = s
                    .path
                    .as_ref()
                    .ok_or_else(|| config_err("sample.path is required for kind = \"tabulated\""))?;
                Ok(Transmission::Tabulated(crate::elements::Tabulated::from_csv_path(path)?))
            }
        }
    }

    /// Angles for this run: `thetas_deg`, or the sample's single angle.
    pub fn thetas(&self) -> Vec<f64> {
        match &self.thetas_deg {
            Some(t) => t.clone(),
            None => vec![self.sample.theta_deg],
        }
    }

    /// Delay grid in eV⁻¹.
    pub fn taus(&self) -> Vec<f64> {
        linspace(self.scan.min_fs, self.scan.max_fs, self.scan.count)
            .into_iter()
            .map(|t| fs_to_ev_inv(t).0)
            .collect()
    }

    /// Fit band in eV, low to high.
    pub fn fit_band(&self) -> Result<(EnergyEv, EnergyEv)> {
        let band = match self.fit.band_nm {
            Some([a, b]) => {
                let (x, y) = (wavelength_nm_to_ev(a)?, wavelength_nm_to_ev(b)?);
                if x.0 < y.0 { (x, y) } else { (y, x) }
            }
            None => {
                let p = self.filter.params();
                p.validate()?;
                p.fwhm_band()
            }
        };
        if !(band.1 .0 > band.0 .0) {
            return Err(config_err("fit.band_nm edges must differ"));
        }
        Ok(band)
    }

    /// Every default made explicit, so the echo alone reproduces the run.
    pub fn resolved(&self, command: Command) -> Result<Scenario> {
        let mut s = self.clone();
        if s.sample.kind == SampleKind::WaveplatePbs {
            let printed = {
                let mut t = s.clone();
                t.sample.beta_mode = BetaMode::Printed;
                t.sample.beta = Some(self.sample.beta.unwrap_or(match self.sample.preset {
                    Some(Preset::Mo) => MO_BETA,
                    Some(Preset::Zo) => ZO_BETA,
                    None => 0.0,
                }));
                t.plate()?
            };
            s.sample.alpha = Some(printed.alpha);
            s.sample.beta = Some(printed.beta);
        }
        if s.sample.kind == SampleKind::Lorentz && s.sample.omega_res_nm.is_none() {
            s.sample.omega_res_nm = Some(808.0);
        }
        if let Some(p) = &s.sample.path {
            s.sample.path = Some(std::fs::canonicalize(p).unwrap_or_else(|_| p.clone()));
        }
        if command == Command::FitT2 && s.fit.band_nm.is_none() {
            let (lo, hi) = self.fit_band()?;
            s.fit.band_nm = Some([hi.wavelength_nm(), lo.wavelength_nm()]);
        }
        if s.output.csv.is_none() {
            s.output.csv = Some(default_csv(command).to_string());
        }
        if s.output.svg.is_none() {
            s.output.svg = Some(default_svg(command).to_string());
        }
        Ok(s)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| config_err(e.to_string()))
    }
}

pub fn default_csv(command: Command) -> &'static str {
    match command {
        Command::Dip => "dip_theta{theta}.csv",
        Command::Sweep => "sweep.csv",
        Command::FitT2 => "t2.csv",
    }
}

pub fn default_svg(command: Command) -> &'static str {
    match command {
        Command::Dip => "dip.svg",
        Command::Sweep => "sweep.svg",
        Command::FitT2 => "t2_spectra.svg",
    }
}

/// `[run]` header of a manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunInfo {
    pub tool: String,
    pub version: String,
    pub command: Command,
    pub threads: usize,
    pub started_unix_s: u64,
    pub elapsed_s: f64,
    pub outputs: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run: RunInfo,
    #[serde(flatten)]
    pub scenario: Scenario,
}

impl RunManifest {
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| config_err(e.to_string()))
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| config_err(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_parse_from_empty_file() {
        let s = Scenario::from_toml_str("", &[]).unwrap();
        assert_eq!(s, Scenario::default());
        s.validate().unwrap();
    }

    #[test]
    fn unknown_keys_are_reported_with_position() {
        let err = Scenario::from_toml_str("[jsa]\nomega_p = 3.0\n", &[]).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("omega_p") && msg.contains("line 2"), "{msg}");
    }

    #[test]
    fn overrides_set_scalars_and_lists() {
        let s = Scenario::from_toml_str(
            "[sample]\nkind = \"waveplate_pbs\"\npreset = \"mo\"\n",
            &[
                "sample.theta_deg=12.5".into(),
                "thetas_deg=[0, 8]".into(),
                "sample.beta_mode=reanchored".into(),
            ],
        )
        .unwrap();
        assert_eq!(s.sample.theta_deg, 12.5);
        assert_eq!(s.thetas_deg, Some(vec![0.0, 8.0]));
        assert_eq!(s.sample.beta_mode, BetaMode::Reanchored);
        assert!(Scenario::from_toml_str("", &["sample.nope=1".into()]).is_err());
        assert!(Scenario::from_toml_str("", &["novalue".into()]).is_err());
    }

    #[test]
    fn reanchored_plate_is_half_wave_at_anchor() {
        let mut s = Scenario::default();
        s.sample.kind = SampleKind::WaveplatePbs;
        s.sample.preset = Some(Preset::Mo);
        s.sample.beta_mode = BetaMode::Reanchored;
        let p = s.plate().unwrap();
        let w = wavelength_nm_to_ev(808.0).unwrap();
        assert!((p.retardance(w) - std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn manifest_round_trip() {
        let mut s = Scenario::default();
        s.sample.kind = SampleKind::WaveplatePbs;
        s.sample.preset = Some(Preset::Zo);
        s.thetas_deg = Some(vec![0.0, 40.0]);
        s.background.enabled = true;
        let r = s.resolved(Command::Sweep).unwrap();
        let m = RunManifest {
            run: RunInfo {
                tool: "homdip".into(),
                version: "0".into(),
                command: Command::Sweep,
                threads: 1,
                started_unix_s: 0,
                elapsed_s: 0.5,
                outputs: vec!["sweep.csv".into()],
            },
            scenario: r.clone(),
        };
        let text = m.to_toml().unwrap();
        assert_eq!(RunManifest::from_toml_str(&text).unwrap(), m);
        // a manifest is also a valid scenario file
        assert_eq!(Scenario::from_toml_str(&text, &[]).unwrap(), r);
        // resolving twice changes nothing
        assert_eq!(r.resolved(Command::Sweep).unwrap(), r);
    }

    #[test]
    fn validation_catches_bad_scan() {
        assert!(Scenario::from_toml_str("[scan]\ncount = 3\n", &[]).unwrap().validate().is_err());
        let mut s = Scenario::default();
        s.sample.kind = SampleKind::WaveplatePbs;
        assert!(s.validate().is_err(), "waveplate without alpha");
    }
}
