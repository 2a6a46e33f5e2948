//! Band-pass filter and accidental coincidences: how the calibrated floor
//! eats visibility as the sample darkens, for a few singles ratios.
//!
//!     cargo run --release --example filter_and_background

use homdip::analysis::visibility;
use homdip::elements::{FilterParams, Transmission, WaveplateParams};
use homdip::engine::{linspace, trace, BackgroundModel, CoincidenceKernel, EngineConfig, Normalization};
use homdip::spectral::{fs_to_ev_inv, JsaParams};

fn main() -> homdip::Result<()> {
    let jsa = JsaParams::default();
    let filter = FilterParams::default();
    let (lo, hi) = filter.fwhm_band();
    println!("filter FWHM band {:.2}-{:.2} nm", hi.wavelength_nm(), lo.wavelength_nm());

    let mut cfg = EngineConfig::default_for(&jsa)?.with_filter(Transmission::filter(filter)?);
    cfg.normalization = Normalization::UnitBaseline;
    let ideal = CoincidenceKernel::new(&jsa, &Transmission::Identity, &cfg)?.baseline();
    let taus: Vec<f64> = linspace(-800.0, 800.0, 201).into_iter().map(|t| fs_to_ev_inv(t).0).collect();

    println!("zero-order plate, V(theta) for singles ratio I_s/I_i0:");
    println!("  ratio   0deg    24deg   40deg   43deg");
    for ratio in [0.0, 0.3, 1.0] {
        let bg = BackgroundModel::calibrated(0.967, ideal, ratio, 1.0)?;
        let mut line = format!("  {ratio:4.1}");
        for deg in [0.0, 24.0, 40.0, 43.0_f64] {
            let sample = Transmission::waveplate_pbs(WaveplateParams::zero_order(deg.to_radians()))?;
            let t_bar = CoincidenceKernel::new(&jsa, &sample, &cfg)?.baseline() / ideal;
            let tr = trace(&jsa, &sample, &cfg, &taus, Some(&bg.with_transmission(t_bar)))?;
            line.push_str(&format!("  {:.4}", visibility(&tr)?));
        }
        println!("{line}");
    }
    Ok(())
}
