//! Dip of two identical photons with nothing in the idler arm.
//!
//!     cargo run --example ideal_dip

use homdip::analysis::metrics;
use homdip::elements::Transmission;
use homdip::engine::{linspace, trace, EngineConfig, Normalization};
use homdip::spectral::{ev_inv_to_fs, fs_to_ev_inv, DelayInvEv, JsaParams};

fn main() -> homdip::Result<()> {
    let jsa = JsaParams::default();
    let mut cfg = EngineConfig::default_for(&jsa)?;
    cfg.normalization = Normalization::UnitBaseline;

    let taus: Vec<f64> = linspace(-800.0, 800.0, 201).into_iter().map(|t| fs_to_ev_inv(t).0).collect();
    let tr = trace(&jsa, &Transmission::Identity, &cfg, &taus, None)?;
    let m = metrics(&tr)?;

    println!("visibility    {:.9}", m.visibility);
    println!("dip position  {:.3e} fs", ev_inv_to_fs(DelayInvEv(m.dip_position)));
    println!("baseline from {} tail points", tr.taus.iter().filter(|t| t.abs() >= 6.0 / jsa.sigma_minus.0).count());
    println!();
    println!("{:>8}  {:>10}", "tau_fs", "rate");
    for (t, r) in tr.taus.iter().zip(tr.normalized_rates()).step_by(10) {
        println!("{:8.1}  {:10.6}", ev_inv_to_fs(DelayInvEv(*t)), r);
    }
    Ok(())
}
