//! The three scenario runs (`dip`, `sweep`, `fit-t2`): compute, then write
//! CSV tables, SVG charts and a manifest into an output directory.

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;

use crate::analysis::{sweep_theta, SweepRow, ThetaSweep};
use crate::elements::{waveplate_pbs, LorentzParams};
use crate::engine::{self, BackgroundModel, CoincidenceKernel, DipTrace};
use crate::error::{Error, Result};
use crate::inversion::{fit_lorentz, t2_vs_loss, T2Row};
use crate::plot::{fmt_g9, Chart, Series};
use crate::scenario::{default_csv, default_svg, Command, RunInfo, RunManifest, SampleKind, Scenario};
use crate::spectral::{ev_inv_to_fs, wavelength_nm_to_ev, DelayInvEv, EnergyEv};

pub const DIP_HEADER: [&str; 2] = ["tau_fs", "rate_norm"];
pub const SWEEP_HEADER: [&str; 5] = ["theta_deg", "loss", "visibility", "dip_shift_fs", "mean_rate_norm"];
pub const T2_HEADER: [&str; 6] = ["theta_deg", "loss", "A_ev", "t2_fs", "residual", "converged"];

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

/// Accidental model for the scenario, scaled against the no-sample
/// baseline of the same engine configuration.
pub fn background_model(s: &Scenario) -> Result<Option<BackgroundModel>> {
    let b = &s.background;
    if !b.enabled {
        return Ok(None);
    }
    let model = match (b.singles_signal, b.singles_idler_nosample) {
        (Some(si), Some(ii)) => BackgroundModel {
            singles_signal: si,
            singles_idler_nosample: ii,
            window: b.window,
            mean_transmission: 1.0,
        },
        _ => {
            let jsa = s.jsa_params()?;
            let cfg = s.engine_config()?;
            let ideal = CoincidenceKernel::new(&jsa, &crate::elements::Transmission::Identity, &cfg)?.baseline();
            BackgroundModel::calibrated(b.calibrate_visibility, ideal, b.singles_ratio, b.window)?
        }
    };
    model.validate()?;
    Ok(Some(model))
}

fn theta_sweep(s: &Scenario) -> Result<ThetaSweep> {
    Ok(ThetaSweep {
        jsa: s.jsa_params()?,
        engine: s.engine_config()?,
        plate: s.plate()?,
        taus: s.taus(),
        background: background_model(s)?,
    })
}

/// One trace per angle (or a single trace for samples without an angle).
pub fn dip_traces(s: &Scenario) -> Result<Vec<(f64, DipTrace)>> {
    let thetas = s.thetas();
    if s.sample.kind == SampleKind::WaveplatePbs {
        let setup = theta_sweep(s)?;
        return thetas
            .par_iter()
            .map(|&t| Ok((t, setup.trace_at(t.to_radians())?.trace)))
            .collect();
    }
    if thetas.len() > 1 {
        return Err(config_err("thetas_deg with several angles needs sample.kind = \"waveplate_pbs\""));
    }
    let jsa = s.jsa_params()?;
    let cfg = s.engine_config()?;
    let sample = s.sample_at(s.sample.theta_deg)?;
    let kernel = CoincidenceKernel::new(&jsa, &sample, &cfg)?;
    let bg = match background_model(s)? {
        Some(b) => {
            let reference = CoincidenceKernel::new(&jsa, &crate::elements::Transmission::Identity, &cfg)?;
            Some(b.with_transmission((kernel.baseline() / reference.baseline()).clamp(0.0, 1.0)))
        }
        None => None,
    };
    let trace = engine::trace_with_kernel(&kernel, &jsa, cfg.normalization, &s.taus(), bg.as_ref())?;
    Ok(vec![(thetas[0], trace)])
}

pub fn sweep_rows(s: &Scenario) -> Result<Vec<SweepRow>> {
    let thetas = match &s.thetas_deg {
        Some(t) if !t.is_empty() => t.clone(),
        _ => return Err(config_err("sweep needs a non-empty thetas_deg list")),
    };
    if s.sample.kind != SampleKind::WaveplatePbs {
        return Err(config_err("sweep needs sample.kind = \"waveplate_pbs\""));
    }
    let radians: Vec<f64> = thetas.iter().map(|t| t.to_radians()).collect();
    sweep_theta(&radians, &theta_sweep(s)?)
}

/// Fit rows plus the sampled spectra behind them.
pub struct T2Outcome {
    pub rows: Vec<T2Row>,
    pub spectra: Vec<Vec<(EnergyEv, f64)>>,
}

pub fn t2_rows(s: &Scenario) -> Result<T2Outcome> {
    let band = s.fit_band()?;
    let n = s.fit.n_samples;
    let omega_fixed = if s.fit.free_resonance {
        None
    } else {
        Some(wavelength_nm_to_ev(s.fit.omega_res_nm)?)
    };
    let sample_band = |f: &dyn Fn(EnergyEv) -> f64| -> Vec<(EnergyEv, f64)> {
        (0..n)
            .map(|i| {
                let w = EnergyEv(band.0 .0 + (band.1 .0 - band.0 .0) * i as f64 / (n - 1) as f64);
                (w, f(w))
            })
            .collect()
    };
    match s.sample.kind {
        SampleKind::WaveplatePbs => {
            let thetas = match &s.thetas_deg {
                Some(t) if !t.is_empty() => t.clone(),
                _ => return Err(config_err("fit-t2 needs a non-empty thetas_deg list")),
            };
            let radians: Vec<f64> = thetas.iter().map(|t| t.to_radians()).collect();
            let plate = s.plate()?;
            let rows = t2_vs_loss(&radians, &plate, band, n, omega_fixed)?;
            let spectra = radians
                .iter()
                .map(|&t| {
                    let p = plate.with_theta(t);
                    sample_band(&|w| waveplate_pbs(w, &p).norm_sqr())
                })
                .collect();
            Ok(T2Outcome { rows, spectra })
        }
        SampleKind::Lorentz | SampleKind::Tabulated => {
            if matches!(&s.thetas_deg, Some(t) if t.len() > 1) {
                return Err(config_err("thetas_deg only applies to waveplate_pbs samples"));
            }
            let sample = s.sample_at(s.sample.theta_deg)?;
            let spectrum = sample_band(&|w| sample.power(w));
            let row = match fit_lorentz(&spectrum, omega_fixed, None) {
                Ok(fit) => T2Row { theta: f64::NAN, loss: f64::NAN, fit: Some(fit), error: None },
                Err(e) => T2Row { theta: f64::NAN, loss: f64::NAN, fit: None, error: Some(e.to_string()) },
            };
            Ok(T2Outcome { rows: vec![row], spectra: vec![spectrum] })
        }
        _ => Err(config_err(
            "fit-t2 needs sample.kind = \"waveplate_pbs\", \"lorentz\" or \"tabulated\"",
        )),
    }
}

fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

fn write_svg(path: &Path, chart: &Chart) -> Result<()> {
    std::fs::write(path, chart.render())?;
    Ok(())
}

fn file_name(pattern: &str, theta: Option<f64>) -> String {
    match theta {
        Some(t) => pattern.replace("{theta}", &fmt_g9(t)),
        None => pattern.to_string(),
    }
}

fn svg_target(s: &Scenario, command: Command) -> Option<String> {
    let name = s.output.svg.clone().unwrap_or_else(|| default_svg(command).to_string());
    (!name.trim().is_empty()).then_some(name)
}

fn write_dip(s: &Scenario, out: &Path) -> Result<Vec<PathBuf>> {
    let traces = dip_traces(s)?;
    let pattern = s.output.csv.clone().unwrap_or_else(|| default_csv(Command::Dip).to_string());
    if traces.len() > 1 && !pattern.contains("{theta}") {
        return Err(config_err("output.csv needs a {theta} placeholder when several angles are run"));
    }
    let mut files = Vec::new();
    let mut chart = Chart::new("HOM dip", "delay tau (fs)", "normalised coincidence rate");
    for (theta, trace) in &traces {
        let path = out.join(file_name(&pattern, Some(*theta)));
        let norm = trace.normalized_rates();
        let taus_fs: Vec<f64> = trace.taus.iter().map(|t| ev_inv_to_fs(DelayInvEv(*t))).collect();
        write_csv(
            &path,
            &DIP_HEADER,
            taus_fs.iter().zip(&norm).map(|(t, r)| vec![fmt_g9(*t), fmt_g9(*r)]),
        )?;
        files.push(path);
        let label = if s.sample.kind == SampleKind::WaveplatePbs {
            format!("theta = {} deg", fmt_g9(*theta))
        } else {
            format!("{:?}", s.sample.kind).to_lowercase()
        };
        chart.push(Series::new(label, taus_fs.into_iter().zip(norm).collect()));
    }
    if let Some(svg) = svg_target(s, Command::Dip) {
        let path = out.join(svg);
        write_svg(&path, &chart)?;
        files.push(path);
    }
    Ok(files)
}

fn write_sweep(s: &Scenario, out: &Path) -> Result<Vec<PathBuf>> {
    let rows = sweep_rows(s)?;
    let path = out.join(s.output.csv.clone().unwrap_or_else(|| default_csv(Command::Sweep).to_string()));
    write_csv(
        &path,
        &SWEEP_HEADER,
        rows.iter().map(|r| {
            vec![
                fmt_g9(r.theta.to_degrees()),
                fmt_g9(r.loss),
                fmt_g9(r.visibility),
                fmt_g9(ev_inv_to_fs(DelayInvEv(r.dip_shift))),
                fmt_g9(r.mean_rate),
            ]
        }),
    )?;
    let mut files = vec![path];
    if let Some(svg) = svg_target(s, Command::Sweep) {
        let mut chart = Chart::new("Visibility, mean rate and dip shift vs loss", "optical loss", "visibility / mean rate")
            .with_y2("dip shift (fs)");
        chart.push(Series::new("visibility", rows.iter().map(|r| (r.loss, r.visibility)).collect()));
        chart.push(Series::new("mean rate", rows.iter().map(|r| (r.loss, r.mean_rate)).collect()).dashed());
        chart.push(
            Series::new(
                "dip shift",
                rows.iter().map(|r| (r.loss, ev_inv_to_fs(DelayInvEv(r.dip_shift)))).collect(),
            )
            .on_right(),
        );
        let path = out.join(svg);
        write_svg(&path, &chart)?;
        files.push(path);
    }
    Ok(files)
}

fn write_fit(s: &Scenario, out: &Path) -> Result<Vec<PathBuf>> {
    let outcome = t2_rows(s)?;
    let path = out.join(s.output.csv.clone().unwrap_or_else(|| default_csv(Command::FitT2).to_string()));
    write_csv(
        &path,
        &T2_HEADER,
        outcome.rows.iter().map(|r| {
            let (a, t2, res) = match &r.fit {
                Some(f) => (f.params.strength, ev_inv_to_fs(DelayInvEv(f.params.t2)), f.residual),
                None => (f64::NAN, f64::NAN, f64::NAN),
            };
            vec![
                fmt_g9(r.theta.to_degrees()),
                fmt_g9(r.loss),
                fmt_g9(a),
                fmt_g9(t2),
                fmt_g9(res),
                r.converged().to_string(),
            ]
        }),
    )?;
    let mut files = vec![path];

    if let Some(svg) = svg_target(s, Command::FitT2) {
        let mut chart = Chart::new("System transmission and Lorentz fit", "wavelength (nm)", "|T|^2");
        let wanted: Vec<usize> = match (&s.fit.show_thetas_deg, &s.thetas_deg) {
            (Some(show), Some(all)) => all
                .iter()
                .enumerate()
                .filter(|(_, t)| show.iter().any(|x| (*x - **t).abs() < 1e-9))
                .map(|(i, _)| i)
                .collect(),
            _ => vec![outcome.rows.len() - 1],
        };
        for i in wanted {
            let row = &outcome.rows[i];
            let spectrum = &outcome.spectra[i];
            let tag = if row.theta.is_nan() {
                String::new()
            } else {
                format!(" theta = {} deg", fmt_g9(row.theta.to_degrees()))
            };
            chart.push(Series::new(
                format!("|T_sys|^2{tag}"),
                spectrum.iter().map(|(w, y)| (w.wavelength_nm(), *y)).collect(),
            ));
            if let Some(f) = &row.fit {
                let p: LorentzParams = f.params;
                chart.push(
                    Series::new(
                        format!("Lorentz fit, T2 = {} fs", fmt_g9(ev_inv_to_fs(DelayInvEv(p.t2)))),
                        spectrum.iter().map(|(w, _)| (w.wavelength_nm(), p.power(*w))).collect(),
                    )
                    .dashed(),
                );
            }
        }
        let path = out.join(svg);
        write_svg(&path, &chart)?;
        files.push(path);
    }
    if !outcome.rows.iter().any(T2Row::converged) {
        let why: Vec<String> = outcome.rows.iter().filter_map(|r| r.error.clone()).collect();
        return Err(Error::DegenerateData(format!("no Lorentz fit converged {}", why.join("; "))));
    }
    Ok(files)
}

/// Runs `command`, writes its outputs and a manifest into `out_dir`, and
/// returns the written paths (manifest last).
pub fn run(command: Command, scenario: &Scenario, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let started = Instant::now();
    let started_unix_s = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let resolved = scenario.resolved(command)?;
    resolved.validate()?;
    std::fs::create_dir_all(out_dir)?;
    let mut files = match command {
        Command::Dip => write_dip(&resolved, out_dir)?,
        Command::Sweep => write_sweep(&resolved, out_dir)?,
        Command::FitT2 => write_fit(&resolved, out_dir)?,
    };
    let manifest = RunManifest {
        run: RunInfo {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command,
            threads: rayon::current_num_threads(),
            started_unix_s,
            elapsed_s: started.elapsed().as_secs_f64(),
            outputs: files
                .iter()
                .map(|p| p.file_name().unwrap_or_default().to_string_lossy().into_owned())
                .collect(),
        },
        scenario: resolved,
    };
    let path = out_dir.join(format!("{}_manifest.toml", command.name().replace('-', "_")));
    std::fs::write(&path, manifest.to_toml()?)?;
    files.push(path);
    Ok(files)
}

