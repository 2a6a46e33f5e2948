//! Measured-style transmission data from CSV: tabulate a Lorentz absorber,
//! read it back and compare its dip with the analytic element.
//!
//!     cargo run --release --example tabulated_sample

use std::io::Write;

use homdip::analysis::metrics;
use homdip::elements::{lorentz_transmission, LorentzParams, Tabulated, Transmission};
use homdip::engine::{linspace, trace, EngineConfig, Normalization};
use homdip::spectral::{ev_inv_to_fs, fs_to_ev_inv, DelayInvEv, EnergyEv, JsaParams};

fn main() -> homdip::Result<()> {
    let p = LorentzParams { strength: 0.002, omega_res: EnergyEv(1.5345), t2: 60.0 };
    let path = std::env::temp_dir().join("homdip_lorentz_table.csv");
    let mut f = std::fs::File::create(&path)?;
    writeln!(f, "omega_ev,mag,phase_rad")?;
    let mut phase_prev: Option<f64> = None;
    for w in linspace(1.45, 1.62, 2001) {
        let t = lorentz_transmission(EnergyEv(w), &p);
        let mut ph = t.arg();
        if let Some(prev) = phase_prev {
            ph += std::f64::consts::TAU * ((prev - ph) / std::f64::consts::TAU).round();
        }
        phase_prev = Some(ph);
        writeln!(f, "{w},{},{ph}", t.norm())?;
    }
    drop(f);
    let table = Tabulated::from_csv_path(&path)?;
    println!("read {} nodes from {}", table.len(), path.display());

    let jsa = JsaParams::default();
    let mut cfg = EngineConfig::default_for(&jsa)?;
    cfg.normalization = Normalization::UnitBaseline;
    let taus: Vec<f64> = linspace(-800.0, 800.0, 201).into_iter().map(|t| fs_to_ev_inv(t).0).collect();

    for (name, sample) in [("analytic", Transmission::lorentz(p)?), ("tabulated", Transmission::Tabulated(table))] {
        let m = metrics(&trace(&jsa, &sample, &cfg, &taus, None)?)?;
        println!(
            "{name:>9}: V = {:.6}  dip at {:+.3} fs  skew {:+.4}",
            m.visibility,
            ev_inv_to_fs(DelayInvEv(m.dip_position)),
            m.asymmetry
        );
    }
    Ok(())
}
