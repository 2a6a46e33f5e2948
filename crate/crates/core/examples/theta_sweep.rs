//! Visibility, dip shift and mean coincidence rate against loss, with the
//! accidental floor calibrated to 96.7% visibility at zero loss.
//!
//!     cargo run --release --example theta_sweep

use homdip::analysis::{sweep_theta, ThetaSweep};
use homdip::elements::{FilterParams, Transmission, WaveplateParams};
use homdip::engine::{linspace, BackgroundModel, CoincidenceKernel, EngineConfig, Normalization};
use homdip::spectral::{ev_inv_to_fs, fs_to_ev_inv, DelayInvEv, JsaParams};

fn main() -> homdip::Result<()> {
    let jsa = JsaParams::default();
    let mut cfg = EngineConfig::default_for(&jsa)?.with_filter(Transmission::filter(FilterParams::default())?);
    cfg.normalization = Normalization::UnitBaseline;
    let ideal = CoincidenceKernel::new(&jsa, &Transmission::Identity, &cfg)?.baseline();
    let bg = BackgroundModel::calibrated(0.967, ideal, 0.3, 1.0)?;
    let thetas: Vec<f64> = [0.0, 8.0, 16.0, 24.0, 32.0, 40.0, 41.0, 42.0, 43.0_f64].iter().map(|d| d.to_radians()).collect();

    for (name, plate) in [("ZO", WaveplateParams::zero_order(0.0)), ("MO", WaveplateParams::multi_order(0.0))] {
        let setup = ThetaSweep {
            jsa,
            engine: cfg.clone(),
            plate,
            taus: linspace(-800.0, 800.0, 201).into_iter().map(|t| fs_to_ev_inv(t).0).collect(),
            background: Some(bg),
        };
        println!("{name}\n  theta   loss     V       shift(fs)  mean rate");
        for r in sweep_theta(&thetas, &setup)? {
            println!(
                "  {:5.1}  {:.4}  {:.4}  {:9.3}  {:.4}",
                r.theta.to_degrees(),
                r.loss,
                r.visibility,
                ev_inv_to_fs(DelayInvEv(r.dip_shift)),
                r.mean_rate
            );
        }
    }
    Ok(())
}
