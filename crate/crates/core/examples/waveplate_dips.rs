//! Zero-order vs multi-order half-wave plate in front of a polariser:
//! where the dip sits and how lopsided it gets as the plate is rotated.
//!
//!     cargo run --example waveplate_dips

use homdip::analysis::{asymmetry, dip_position};
use homdip::elements::{loss_perfect_hwp, Transmission, WaveplateParams};
use homdip::engine::{linspace, trace, EngineConfig, Normalization};
use homdip::spectral::{ev_inv_to_fs, fs_to_ev_inv, DelayInvEv, JsaParams};

fn main() -> homdip::Result<()> {
    let jsa = JsaParams::default();
    let mut cfg = EngineConfig::default_for(&jsa)?;
    cfg.normalization = Normalization::UnitBaseline;
    let taus: Vec<f64> = linspace(-800.0, 800.0, 201).into_iter().map(|t| fs_to_ev_inv(t).0).collect();

    for (name, plate) in [
        ("zero-order", WaveplateParams::zero_order(0.0)),
        ("multi-order", WaveplateParams::multi_order(0.0)),
    ] {
        println!("{name}: alpha = {} eV^-1, beta = {} rad", plate.alpha, plate.beta);
        println!("  {:>5}  {:>6}  {:>12}  {:>10}", "theta", "loss", "dip (fs)", "skew");
        for deg in [0.0, 8.0, 16.0, 24.0, 32.0, 40.0, 43.0_f64] {
            let th = deg.to_radians();
            let tr = trace(&jsa, &Transmission::waveplate_pbs(plate.with_theta(th))?, &cfg, &taus, None)?;
            println!(
                "  {:5.0}  {:6.3}  {:12.4}  {:10.4}",
                deg,
                loss_perfect_hwp(th)?,
                ev_inv_to_fs(DelayInvEv(dip_position(&tr)?)),
                asymmetry(&tr)?
            );
        }
    }
    Ok(())
}
