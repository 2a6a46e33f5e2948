//! One PASS/FAIL line per acceptance criterion.
//!
//! Four criteria are not met by the model with its published parameters;
//! the harness reports their measured values and asserts that exactly that
//! set is red, so a regression elsewhere (or an unexpected fix) fails loudly.
//! Green sub-clauses of red criteria are asserted on their own.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::Command as Process;
use std::time::Instant;

use homdip::analysis::{dip_shift, SweepRow};
use homdip::commands;
use homdip::elements::{LorentzParams, Transmission, WaveplateParams};
use homdip::engine::{closed_form_baseline, coincidence_closed_form, linspace, trace, CoincidenceKernel, EngineConfig};
use homdip::inversion::{default_resonance, fit_lorentz};
use homdip::scenario::{Command, Scenario};
use homdip::spectral::{ev_inv_to_fs, fs_to_ev_inv, DelayInvEv, EnergyEv, JsaParams};
use homdip::Error;

const KNOWN_RED: [u32; 4] = [4, 5, 6, 8];

/// High-loss MO shift at θ = 43°, printed β, filter and background on (fs).
const GOLDEN_MO_SHIFT_43: f64 = -11.2298913;

fn scenario(name: &str, overrides: &[&str]) -> Scenario {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name);
    let ov: Vec<String> = overrides.iter().map(|s| s.to_string()).collect();
    Scenario::load(&path, &ov).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn fs(t: f64) -> f64 {
    ev_inv_to_fs(DelayInvEv(t))
}

/// Straight to the stderr handle so the lines survive libtest's capture.
fn say(line: String) {
    let _ = writeln!(std::io::stderr(), "{line}");
}

struct Report {
    failed: BTreeSet<u32>,
}

impl Report {
    fn line(&mut self, n: u32, ok: bool, what: &str, measured: String) {
        say(format!("criterion {n:>2}: {}  {what}  [{measured}]", if ok { "PASS" } else { "FAIL" }));
        if !ok {
            self.failed.insert(n);
        }
    }
}

/// The historical typeset form of the double integral (known to be wrong).
fn printed_closed_form(tau: f64, jsa: &JsaParams, wp: &WaveplateParams) -> f64 {
    let c = (2.0 * wp.theta).cos();
    let s2 = (2.0 * wp.theta).sin().powi(2);
    let sm2 = jsa.sigma_minus.0.powi(2);
    let sp2 = jsa.sigma_p.0.powi(2);
    let a = wp.alpha;
    let x = sm2 * a * tau;
    let env = (-sm2 * (a * a + 4.0 * tau * tau) / 8.0).exp();
    let carrier = (wp.beta + a * jsa.omega_p.0 / 2.0).cos();
    1.0 + c / 2.0 * env * (x.sinh() - x.cosh() * c)
        - s2 / 2.0 * ((-sp2 * a * a / 2.0).exp() * (1.0 - (-sm2 * a * a / 8.0).exp()) * carrier + 1.0)
}

fn c1_oracle(r: &mut Report) {
    let jsa = JsaParams::default();
    let cfg = EngineConfig::default_for(&jsa).unwrap();
    let thetas = [0.0, 10.0, 22.5, 30.0, 40.0, 43.0, 45.0_f64];
    let alphas = [0.0, 1.0, 2.18, 5.0, 13.0, 25.0, 40.3];
    let taus = linspace(-250.0, 250.0, 11);
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for th in thetas {
        for (k, a) in alphas.iter().enumerate() {
            let wp = WaveplateParams::new(*a, -60.23 + 0.7 * k as f64, th.to_radians()).unwrap();
            let kernel = CoincidenceKernel::new(&jsa, &Transmission::waveplate_pbs(wp).unwrap(), &cfg).unwrap();
            let scale = closed_form_baseline(&jsa, &wp);
            for &t in &taus {
                let d = (kernel.rate(t).unwrap() - coincidence_closed_form(t, &jsa, &wp)).abs() / scale;
                worst = worst.max(d);
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    r.line(
        1,
        worst <= 1e-9 && secs < 10.0,
        "closed form == quadrature over 7x7x11 (theta, alpha, tau), < 10 s",
        format!("max rel diff {worst:.2e}, {secs:.2} s"),
    );
}

fn c2_ideal_dip(r: &mut Report) {
    let jsa = JsaParams::default();
    let cfg = EngineConfig::default_for(&jsa).unwrap();
    let taus: Vec<f64> = linspace(-800.0, 800.0, 201).into_iter().map(|t| fs_to_ev_inv(t).0).collect();
    let tr = trace(&jsa, &Transmission::Identity, &cfg, &taus, None).unwrap();
    let norm = tr.normalized_rates();
    let i0 = taus.iter().position(|t| *t == 0.0).unwrap();
    let min = norm.iter().cloned().fold(f64::INFINITY, f64::min);
    let tail_dev = taus
        .iter()
        .zip(&norm)
        .filter(|(t, _)| t.abs() >= 6.0 / jsa.sigma_minus.0)
        .map(|(_, v)| (v - 1.0).abs())
        .fold(0.0, f64::max);
    r.line(
        2,
        norm[i0] <= 1e-9 && norm[i0] == min && tail_dev <= 1e-6,
        "ideal dip: min <= 1e-9 at tau = 0, baseline 1 +- 1e-6",
        format!("R(0) = {:.2e}, max |baseline - 1| = {tail_dev:.2e}", norm[i0]),
    );
}

fn c3_erratum(r: &mut Report) {
    let jsa = JsaParams::default();
    let cfg = EngineConfig::default_for(&jsa).unwrap();
    let wp = WaveplateParams::new(0.0, std::f64::consts::PI, 0.0).unwrap();
    let printed = printed_closed_form(0.0, &jsa, &wp) / printed_closed_form(1e4, &jsa, &wp);
    let kernel = CoincidenceKernel::new(&jsa, &Transmission::waveplate_pbs(wp).unwrap(), &cfg).unwrap();
    let integral = kernel.rate(0.0).unwrap() / kernel.baseline();
    let shipped = coincidence_closed_form(0.0, &jsa, &wp) / closed_form_baseline(&jsa, &wp);
    r.line(
        3,
        (printed - 0.5).abs() < 1e-12 && integral <= 1e-9 && shipped.abs() <= 1e-12,
        "typeset closed form gives 0.5 at theta = alpha = tau = 0; integral gives 0",
        format!("typeset {printed}, integral {integral:.1e}, shipped closed form {shipped:.1e}"),
    );
}

fn c4_zo_invariance(r: &mut Report) {
    let s = scenario("fig3_zo.toml", &["thetas_deg=[0, 8, 16, 24, 32, 40]"]);
    let traces = commands::dip_traces(&s).unwrap();
    let norm: Vec<Vec<f64>> = traces.iter().map(|(_, t)| t.normalized_rates()).collect();
    let mut max_diff: f64 = 0.0;
    for a in &norm {
        for b in &norm {
            for (x, y) in a.iter().zip(b) {
                max_diff = max_diff.max((x - y).abs());
            }
        }
    }
    let shifts: Vec<f64> = traces.iter().map(|(_, t)| fs(dip_shift(t, &traces[0].1).unwrap())).collect();
    let max_shift = shifts.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    r.line(
        4,
        max_diff <= 1e-6 && max_shift < 0.5,
        "ZO theta 0..40 deg, no background: traces equal within 1e-6, shifts < 0.5 fs",
        format!(
            "max pointwise diff {max_diff:.2e}, shifts (fs) {:?}",
            shifts.iter().map(|v| (v * 1e3).round() / 1e3).collect::<Vec<_>>()
        ),
    );

    // alpha -> 0 is the constant-modulus limit the criterion presumes.
    let s0 = scenario("fig3_zo.toml", &["thetas_deg=[0, 8, 16, 24, 32, 40]", "sample.alpha=0.0"]);
    let t0 = commands::dip_traces(&s0).unwrap();
    let base = t0[0].1.normalized_rates();
    let d0 = t0
        .iter()
        .flat_map(|(_, t)| t.normalized_rates().into_iter().zip(base.clone()).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max);
    say(format!("    info: same sweep with alpha = 0: max pointwise diff {d0:.2e}"));
    assert!(d0 <= 1e-9, "constant-modulus limit broken: {d0}");
}

fn sweep(name: &str, overrides: &[&str]) -> Vec<SweepRow> {
    commands::sweep_rows(&scenario(name, overrides)).unwrap()
}

fn c5_mo_shift(r: &mut Report) {
    let rows = sweep("fig4_sweep.toml", &[]);
    let shifts: Vec<(f64, f64)> = rows.iter().map(|r| (r.theta.to_degrees(), fs(r.dip_shift))).collect();
    let worst_step = shifts.windows(2).map(|w| w[1].1 - w[0].1).fold(f64::NEG_INFINITY, f64::max);
    let monotone = worst_step <= 0.0;
    let low_loss = rows.iter().filter(|r| r.loss < 0.4).map(|r| fs(r.dip_shift).abs()).fold(0.0, f64::max);
    let at43 = shifts.iter().find(|(t, _)| (t - 43.0).abs() < 1e-9).unwrap().1;
    let golden_ok = (at43 - GOLDEN_MO_SHIFT_43).abs() < 1e-5;
    r.line(
        5,
        monotone && low_loss < 5.0 && golden_ok,
        "MO shift monotone toward -tau; |shift| < 5 fs below 40% loss; golden high-loss shift",
        format!(
            "largest step toward +tau {worst_step:+.4} fs; max |shift| below 40% loss {low_loss:.3} fs; \
             shift(43 deg) {at43:.7} fs (golden {GOLDEN_MO_SHIFT_43})"
        ),
    );
    assert!(low_loss < 5.0, "low-loss MO shift regressed: {low_loss}");
    assert!(golden_ok, "golden MO shift regressed: {at43}");
}

fn c6_visibility(r: &mut Report) {
    let mo = sweep("fig4_sweep.toml", &[]);
    let zo = sweep("fig4_sweep_zo.toml", &[]);
    let v0 = zo[0].visibility;
    let zo40 = zo.iter().find(|r| (r.theta.to_degrees() - 40.0).abs() < 1e-9).unwrap();
    let band = (0.90..=0.95).contains(&zo40.visibility);
    let excess: Vec<(f64, f64)> = mo
        .iter()
        .zip(&zo)
        .map(|(m, z)| (m.theta.to_degrees(), m.visibility - z.visibility))
        .filter(|(_, d)| *d > 1e-9)
        .collect();
    r.line(
        6,
        (v0 - 0.967).abs() < 1e-3 && band && excess.is_empty(),
        "background calibrated to V = 96.7%; ZO V(97% loss) in [0.90, 0.95]; MO V <= ZO V",
        format!(
            "V0 {v0:.6}; ZO V(40 deg, loss {:.4}) = {:.4}; MO exceeds ZO at {} of {} angles (max {:+.4})",
            zo40.loss,
            zo40.visibility,
            excess.len(),
            mo.len(),
            excess.iter().map(|e| e.1).fold(0.0, f64::max)
        ),
    );
    assert!((v0 - 0.967).abs() < 1e-3 && band, "visibility calibration or ZO band regressed");
}

fn affine_deviation(rows: &[SweepRow]) -> f64 {
    let n = rows.len() as f64;
    let (sx, sy) = rows.iter().fold((0.0, 0.0), |(a, b), r| (a + r.loss, b + r.mean_rate));
    let (mx, my) = (sx / n, sy / n);
    let sxy: f64 = rows.iter().map(|r| (r.loss - mx) * (r.mean_rate - my)).sum();
    let sxx: f64 = rows.iter().map(|r| (r.loss - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let scale = rows.iter().map(|r| r.mean_rate.abs()).fold(0.0, f64::max);
    rows.iter()
        .map(|r| (r.mean_rate - (my + slope * (r.loss - mx))).abs() / scale)
        .fold(0.0, f64::max)
}

fn c7_linearity(r: &mut Report) {
    let mo = affine_deviation(&sweep("fig4_sweep.toml", &["background.enabled=false"]));
    let zo = affine_deviation(&sweep("fig4_sweep_zo.toml", &["background.enabled=false"]));
    r.line(
        7,
        mo < 0.01 && zo < 0.01,
        "mean rate affine in loss within 1% (ZO and MO, no background)",
        format!("max deviation ZO {zo:.2e}, MO {mo:.2e}"),
    );
}

fn c8_t2(r: &mut Report) {
    let truth = LorentzParams { strength: 0.03, omega_res: default_resonance(), t2: 40.0 };
    let data: Vec<(EnergyEv, f64)> = linspace(truth.omega_res.0 - 0.02, truth.omega_res.0 + 0.02, 61)
        .into_iter()
        .map(|w| (EnergyEv(w), truth.power(EnergyEv(w))))
        .collect();
    let fixed = fit_lorentz(&data, Some(truth.omega_res), None).unwrap().params;
    let free = fit_lorentz(&data, None, None).unwrap().params;
    let rel = |p: &LorentzParams| ((p.strength / truth.strength - 1.0).abs()).max((p.t2 / truth.t2 - 1.0).abs());
    let round_trip = rel(&fixed).max(rel(&free));

    let out = commands::t2_rows(&scenario("fig6_t2.toml", &[])).unwrap();
    let all_converged = out.rows.iter().all(|r| r.converged());
    let t2_43 = out
        .rows
        .iter()
        .find(|r| (r.theta.to_degrees() - 43.0).abs() < 1e-9)
        .and_then(|r| r.fit.as_ref())
        .map(|f| fs(f.params.t2))
        .unwrap_or(f64::NAN);
    let span = out
        .rows
        .iter()
        .filter_map(|r| r.fit.as_ref())
        .map(|f| fs(f.params.t2))
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(v), hi.max(v)));
    r.line(
        8,
        round_trip < 1e-3 && (15.0..=30.0).contains(&t2_43) && all_converged,
        "Lorentz round trip within 0.1%; T2(43 deg, re-anchored) in [15, 30] fs; all rows converge",
        format!(
            "round-trip error {round_trip:.1e}; T2(43 deg) = {t2_43:.2} fs; {}/{} rows converged, T2 {:.1}-{:.1} fs",
            out.rows.iter().filter(|r| r.converged()).count(),
            out.rows.len(),
            span.0,
            span.1
        ),
    );
    assert!(round_trip < 1e-3 && all_converged, "T2 round trip or convergence regressed");
}

fn c9_hygiene(r: &mut Report) {
    let jsa = JsaParams::default();
    let cfg = EngineConfig::default_for(&jsa).unwrap();
    let mut fine = cfg.clone();
    fine.grid = cfg.grid.refined();
    let mut worst: f64 = 0.0;
    for sample in [
        Transmission::Identity,
        Transmission::waveplate_pbs(WaveplateParams::multi_order(40f64.to_radians())).unwrap(),
        Transmission::waveplate_pbs(WaveplateParams::zero_order(43f64.to_radians())).unwrap(),
    ] {
        let a = CoincidenceKernel::new(&jsa, &sample, &cfg).unwrap();
        let b = CoincidenceKernel::new(&jsa, &sample, &fine).unwrap();
        for t in [-200.0, -20.15, 0.0, 7.0, 20.15, 150.0] {
            worst = worst.max((a.rate(t).unwrap() - b.rate(t).unwrap()).abs() / a.baseline());
        }
    }
    let coarse = EngineConfig::new(homdip::spectral::default_grid(&jsa, 33, 17).unwrap());
    let kernel = CoincidenceKernel::new(&jsa, &Transmission::Identity, &coarse).unwrap();
    let beyond = 1.01 * kernel.max_delay();
    let guarded = matches!(kernel.rate(beyond), Err(Error::Aliasing { .. }))
        && kernel.rate(0.99 * kernel.max_delay()).is_ok();
    r.line(
        9,
        worst < 1e-8 && guarded,
        "grid doubling changes R_c < 1e-8; coarse grid past the guard is a hard error",
        format!("max rel change {worst:.2e}; guard at |tau| = {:.1} eV^-1 fires: {guarded}", kernel.max_delay()),
    );
}

fn run_bin(config: &Path, out: &Path, threads: &str) -> Vec<u8> {
    let status = Process::new(env!("CARGO_BIN_EXE_homdip"))
        .args(["sweep", "--config"])
        .arg(config)
        .arg("--out-dir")
        .arg(out)
        .env("HOMDIP_THREADS", threads)
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    std::fs::read(out.join("fig4_sweep_mo.csv")).unwrap()
}

fn c10_determinism(r: &mut Report) {
    let config = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios/fig4_sweep.toml");
    let dir = tempfile::tempdir().unwrap();
    let outs: Vec<Vec<u8>> = ["1", "3", "8"]
        .iter()
        .map(|t| run_bin(&config, &dir.path().join(format!("t{t}")), t))
        .collect();
    let same = outs.windows(2).all(|w| w[0] == w[1]);
    r.line(
        10,
        same && !outs[0].is_empty(),
        "sweep CSV byte-identical for HOMDIP_THREADS = 1, 3, 8",
        format!("{} bytes each, identical: {same}", outs[0].len()),
    );
}

fn c11_runtime(r: &mut Report) {
    let dir = tempfile::tempdir().unwrap();
    let start = Instant::now();
    for (cmd, name) in [
        (Command::Dip, "fig3_zo.toml"),
        (Command::Dip, "fig3_mo.toml"),
        (Command::Sweep, "fig4_sweep.toml"),
        (Command::Sweep, "fig4_sweep_zo.toml"),
        (Command::FitT2, "fig6_t2.toml"),
    ] {
        commands::run(cmd, &scenario(name, &[]), &dir.path().join(name)).unwrap();
    }
    let secs = start.elapsed().as_secs_f64();
    r.line(11, secs < 300.0, "figure 3 + 4 + 6 reproduction under 5 minutes", format!("{secs:.2} s"));
}

#[test]
fn acceptance_criteria() {
    let mut r = Report { failed: BTreeSet::new() };
    c1_oracle(&mut r);
    c2_ideal_dip(&mut r);
    c3_erratum(&mut r);
    c4_zo_invariance(&mut r);
    c5_mo_shift(&mut r);
    c6_visibility(&mut r);
    c7_linearity(&mut r);
    c8_t2(&mut r);
    c9_hygiene(&mut r);
    c10_determinism(&mut r);
    c11_runtime(&mut r);
    let expected: BTreeSet<u32> = KNOWN_RED.into_iter().collect();
    say(format!("failing: {:?} (known: {:?})", r.failed, expected));
    assert_eq!(r.failed, expected, "set of failing criteria changed");
}
