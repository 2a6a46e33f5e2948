//! The analytic rate for a linear-retardance plate against the 2-D
//! quadrature it is derived from.
//!
//!     cargo run --release --example closed_form_vs_numeric

use homdip::elements::{Transmission, WaveplateParams};
use homdip::engine::{coincidence_closed_form, CoincidenceKernel, EngineConfig};
use homdip::spectral::JsaParams;

fn main() -> homdip::Result<()> {
    let jsa = JsaParams::default();
    let cfg = EngineConfig::default_for(&jsa)?;
    let mut worst: f64 = 0.0;
    for alpha in [0.0, 2.18, 20.0, 40.3] {
        for deg in [0.0, 22.5, 40.0, 45.0_f64] {
            let wp = WaveplateParams::new(alpha, -0.5, deg.to_radians())?;
            let kernel = CoincidenceKernel::new(&jsa, &Transmission::waveplate_pbs(wp)?, &cfg)?;
            let a = kernel.baseline();
            for tau in [-300.0, -20.0, 0.0, 20.15, 150.0] {
                let num = kernel.rate(tau)?;
                let cf = coincidence_closed_form(tau, &jsa, &wp);
                worst = worst.max((num - cf).abs() / a);
            }
        }
    }
    println!("max |numeric - closed form| / A = {worst:.2e}");
    Ok(())
}
