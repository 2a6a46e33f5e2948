//! Lorentz-oscillator fits: a noiseless round trip, then the dephasing time
//! of the plate + polariser "sample" across the filter band.
//!
//!     cargo run --example dephasing_fit

use homdip::elements::{FilterParams, LorentzParams, WaveplateParams};
use homdip::inversion::{default_resonance, fit_lorentz, t2_vs_loss};
use homdip::spectral::{ev_inv_to_fs, DelayInvEv, EnergyEv};

fn main() -> homdip::Result<()> {
    let truth = LorentzParams { strength: 0.05, omega_res: default_resonance(), t2: 33.4 };
    let data: Vec<(EnergyEv, f64)> = (0..51)
        .map(|i| {
            let w = EnergyEv(truth.omega_res.0 - 0.02 + 0.0008 * i as f64);
            (w, truth.power(w))
        })
        .collect();
    let fit = fit_lorentz(&data, Some(truth.omega_res), None)?;
    println!(
        "round trip: A = {:.6} eV, T2 = {:.4} eV^-1 ({} iterations)",
        fit.params.strength, fit.params.t2, fit.iterations
    );

    let band = FilterParams::default().fwhm_band();
    let plate = WaveplateParams::multi_order(0.0).reanchored(default_resonance());
    let thetas: Vec<f64> = [8.0, 16.0, 24.0, 32.0, 40.0, 43.0_f64].iter().map(|d| d.to_radians()).collect();
    println!(
        "\nplate re-anchored to 808 nm, band {:.1}-{:.1} nm",
        band.1.wavelength_nm(),
        band.0.wavelength_nm()
    );
    println!("  theta   loss    T2 (fs)   rms");
    for row in t2_vs_loss(&thetas, &plate, band, 101, Some(default_resonance()))? {
        let f = row.fit.expect("fit");
        println!(
            "  {:5.1}  {:.4}  {:8.3}  {:.2e}",
            row.theta.to_degrees(),
            row.loss,
            ev_inv_to_fs(DelayInvEv(f.params.t2)),
            f.residual
        );
    }
    Ok(())
}
