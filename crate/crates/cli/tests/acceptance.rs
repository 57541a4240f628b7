//! Acceptance suite: one test per criterion, each printing a verdict line
//! (run with `cargo test -p spinmotion-cli --test acceptance -- --nocapture`
//! to see the measured numbers).
//!
//! Criteria 3 (x-mode half) and 4 encode tolerances that the model itself
//! does not satisfy at the baseline parameters; those tests assert the
//! criteria as stated, print the measured values next to the independently
//! computed model truths, and fail honestly. The analysis lives in the
//! project notes; everything else passes.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use spinmotion::analysis::{
    apply_noise, calibrate_traps, calibrate_zeeman, compare_models, delta_grid_khz, fit_couplings,
    fit_line, measure_peak_near, min_gap, scan_delta, scan_max_psd, SplitMix64, SpectrumSettings,
    RAD_PER_KHZ,
};
use spinmotion::model::{
    build_dicke, build_lab_hamiltonian, build_two_mode, coupling_from_gradient,
    rabi_matrix_element, zeeman_splitting, ModelParams, PhysicalConstants, TWO_PI,
};
use spinmotion::qops::eigh;
use spinmotion::spectra::{
    emission_operator, render, transitions, uniform_grid, SpectatorMode,
    ThermalState, TransitionOptions,
};

struct TestRng(u64);

impl TestRng {
    fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * ((self.next_u64() >> 11) as f64 / (1u64 << 53) as f64)
    }
}

/// Criterion 1: Rabi identity: the matrix element of the coupled Hamiltonian between
/// the resonant low-energy pair equals 2g to 1e-12 relative, for 200
/// randomized (F, g, omega).
#[test]
fn criterion_01_rabi_identity() {
    let t0 = Instant::now();
    let mut rng = TestRng(0xc1);
    let mut worst = 0.0_f64;
    for _ in 0..200 {
        let twice_f = 1 + (rng.next_u64() % 8) as usize;
        let f = twice_f as f64 / 2.0;
        let omega = TWO_PI * rng.uniform(40e3, 300e3);
        let g = TWO_PI * rng.uniform(0.1e3, 40e3);
        let n_max = 2 + (rng.next_u64() % 5) as usize;
        let params = ModelParams {
            f,
            omega_y: omega,
            delta: omega,
            g_x: 0.0,
            g_y: g,
            n_max,
            ..Default::default()
        };
        let rabi = rabi_matrix_element(&params).unwrap();
        worst = worst.max((rabi - 2.0 * g).abs() / (2.0 * g));
    }
    let elapsed = t0.elapsed();
    let pass = worst <= 1e-12 && elapsed.as_secs_f64() < 1.0;
    println!(
        "criterion 01 (Rabi = 2g identity): {} — worst relative deviation {worst:.2e} over 200 draws, {elapsed:.1?}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(worst <= 1e-12, "worst relative deviation {worst:.2e}");
    assert!(elapsed.as_secs_f64() < 1.0, "runtime {elapsed:.1?} over budget");
}

/// Criterion 2: Mapping equivalence: lab-frame and mapped Hamiltonians share their
/// eigenvalue multiset to 1e-10 relative over 50 randomized parameter sets.
#[test]
fn criterion_02_mapping_equivalence() {
    let t0 = Instant::now();
    let consts = PhysicalConstants::cesium();
    let mut rng = TestRng(0xc2);
    let mut worst = 0.0_f64;
    for _ in 0..50 {
        let omega_y = TWO_PI * rng.uniform(50e3, 250e3);
        let b0 = rng.uniform(0.0, 1.2);
        let b_y = rng.uniform(0.0, 4.0e6);
        let lab = build_lab_hamiltonian(b0, b_y, omega_y, 4.0, 5, &consts).unwrap();
        let params = ModelParams {
            f: 4.0,
            omega_y,
            delta: zeeman_splitting(b0, &consts).unwrap(),
            g_x: 0.0,
            g_y: coupling_from_gradient(b_y, omega_y, 4.0, &consts).unwrap(),
            n_max: 5,
            ..Default::default()
        };
        let ev_lab = eigh(&lab).unwrap().energies;
        let ev_map = eigh(&build_dicke(&params).unwrap()).unwrap().energies;
        let scale = ev_lab.iter().fold(omega_y, |m, v| m.max(v.abs()));
        for (a, b) in ev_lab.iter().zip(&ev_map) {
            worst = worst.max((a - b).abs() / scale);
        }
    }
    let elapsed = t0.elapsed();
    let pass = worst <= 1e-10 && elapsed.as_secs_f64() < 5.0;
    println!(
        "criterion 02 (lab/mapped equivalence): {} — worst relative deviation {worst:.2e} over 50 sets, {elapsed:.1?}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(worst <= 1e-10, "worst relative deviation {worst:.2e}");
    assert!(elapsed.as_secs_f64() < 5.0, "runtime {elapsed:.1?} over budget");
}

/// Criterion 3: Avoided-crossing gaps on a 60-point sweep of the full two-mode model
/// at baseline parameters: the y gap must be 2 g_y = 35 kHz within 1 kHz,
/// the x gap 2 g_x = 36 kHz within 1 kHz. The model's exact gaps (from the
/// eigenvalue-difference oracle) are 34.942 and 33.794 kHz: the y half
/// holds, the x half cannot — cross-mode dressing renormalizes it.
#[test]
fn criterion_03_avoided_crossing_gaps() {
    let t0 = Instant::now();
    let params = ModelParams::default();
    let deltas = delta_grid_khz(0.0, 330.0, 330.0 / 59.0).unwrap();
    assert_eq!(deltas.len(), 60);
    let settings = SpectrumSettings {
        grid: uniform_grid(-200.0, 200.0, 0.25).unwrap(),
        include_carrier: false,
        ..Default::default()
    };
    let scan = scan_delta(&params, &deltas, &settings).unwrap();
    let (dy, gap_y) = min_gap(&scan, (58.0, 128.0)).unwrap();
    let (dx, gap_x) = min_gap(&scan, (114.0, 184.0)).unwrap();
    let gap_y_khz = gap_y / RAD_PER_KHZ;
    let gap_x_khz = gap_x / RAD_PER_KHZ;
    let elapsed = t0.elapsed();

    let y_ok = (gap_y_khz - 35.0).abs() <= 1.0;
    let x_ok = (gap_x_khz - 36.0).abs() <= 1.0;
    println!(
        "criterion 03 (avoided-crossing gap, y): {} — measured {gap_y_khz:.2} kHz at delta {:.1} kHz (criterion 35±1, exact model gap 34.942)",
        if y_ok { "PASS" } else { "FAIL" },
        dy / RAD_PER_KHZ
    );
    println!(
        "criterion 03 (avoided-crossing gap, x): {} — measured {gap_x_khz:.2} kHz at delta {:.1} kHz (criterion 36±1; the model's exact gap is 33.794 kHz — cross-mode dressing, see notes)",
        if x_ok { "PASS" } else { "FAIL" },
        dx / RAD_PER_KHZ
    );
    println!("criterion 03 runtime: {elapsed:.1?} (budget 30 s)");
    assert!(elapsed.as_secs_f64() < 30.0, "runtime {elapsed:.1?} over budget");
    assert!(y_ok, "y gap {gap_y_khz:.2} kHz outside 35±1 kHz");
    assert!(x_ok, "x gap {gap_x_khz:.2} kHz outside 36±1 kHz");
}

/// Criterion 4: Model comparison: simplified-model lines vs full-model ridges within
/// 2 kHz for the four low-energy transitions over the whole sweep. The
/// models genuinely deviate by up to ~5.6 kHz below 100 kHz splitting
/// (multi-level physics the 4-level model lacks); the threshold holds for
/// the upper part of the range.
#[test]
fn criterion_04_model_comparison() {
    let t0 = Instant::now();
    let params = ModelParams::default();
    let deltas = delta_grid_khz(0.0, 330.0, 5.0).unwrap();
    let settings = SpectrumSettings {
        grid: uniform_grid(-380.0, 380.0, 0.25).unwrap(),
        ..Default::default()
    };
    let report = compare_models(&params, &deltas, &settings, 10.0).unwrap();
    let mut max_above_110 = 0.0_f64;
    for track in &report.tracks {
        for pt in track {
            if let Some(r) = pt.ridge_khz {
                if pt.delta / RAD_PER_KHZ >= 110.0 {
                    max_above_110 = max_above_110.max((r - pt.line_khz).abs());
                }
            }
        }
    }
    let elapsed = t0.elapsed();
    let pass = report.max_deviation_khz <= 2.0;
    println!(
        "criterion 04 (model comparison): {} — max deviation {:.2} kHz over the full range \
         (criterion ≤2; {:.2} kHz for splittings ≥110 kHz; {} associated, {} failed, {} skipped; \
         the 4-level model breaks down below ~100 kHz, see notes), {elapsed:.1?}",
        if pass { "PASS" } else { "FAIL" },
        report.max_deviation_khz,
        max_above_110,
        report.n_associated,
        report.n_failed,
        report.n_skipped
    );
    assert!(elapsed.as_secs_f64() < 120.0, "runtime {elapsed:.1?} over budget");
    assert!(
        report.max_deviation_khz <= 2.0,
        "max deviation {:.2} kHz exceeds 2 kHz",
        report.max_deviation_khz
    );
}

/// Criterion 5: Round-trip calibration: 20 seeded 5%-noise realizations of a scan
/// generated at the published values; trap frequencies recover within
/// (2, 2, 5) kHz and coupling ratios within 0.01 in at least 18 of 20.
#[test]
fn criterion_05_round_trip_calibration() {
    let t0 = Instant::now();
    let params = ModelParams {
        omega_x: TWO_PI * 149e3,
        omega_y: TWO_PI * 93e3,
        omega_z: TWO_PI * 243e3,
        g_x: 0.12 * TWO_PI * 149e3,
        g_y: 0.19 * TWO_PI * 93e3,
        ..ModelParams::default()
    };
    let mut deltas = delta_grid_khz(60.0, 180.0, 4.0).unwrap();
    deltas.extend(delta_grid_khz(700.0, 900.0, 20.0).unwrap());
    let settings = SpectrumSettings {
        grid: uniform_grid(-380.0, 380.0, 0.1).unwrap(),
        linewidth_khz: 0.5,
        eta_z: Some(0.1),
        include_carrier: false,
        ..Default::default()
    };
    let base = scan_delta(&params, &deltas, &settings).unwrap();
    let sigma = 0.05 * scan_max_psd(&base);
    let far_window = (TWO_PI * 700e3, TWO_PI * 900e3);
    let mut ok = 0;
    let mut detail = String::new();
    for seed in 0..20u64 {
        let mut noisy = base.clone();
        apply_noise(&mut noisy, sigma, seed);
        let traps = calibrate_traps(&noisy, far_window).unwrap();
        let coup = fit_couplings(&noisy).unwrap();
        let ex = (traps.omega_x - params.omega_x).abs() / RAD_PER_KHZ;
        let ey = (traps.omega_y - params.omega_y).abs() / RAD_PER_KHZ;
        let ez = (traps.omega_z.expect("z sideband") - params.omega_z).abs() / RAD_PER_KHZ;
        let ry = coup.g_y / traps.omega_y;
        let rx = coup.g_x / traps.omega_x;
        let cal = spinmotion::analysis::CalibrationResult {
            traps,
            couplings: coup,
            zeeman: None,
        };
        let pass = ex <= 2.0
            && ey <= 2.0
            && ez <= 5.0
            && (ry - 0.19).abs() <= 0.01
            && (rx - 0.12).abs() <= 0.01
            && (cal.rabi_y_over_wy() - 0.38).abs() <= 0.01
            && (cal.rabi_x_over_wx() - 0.24).abs() <= 0.01;
        if pass {
            ok += 1;
        } else {
            detail.push_str(&format!(
                " [seed {seed}: ex {ex:.2} ey {ey:.2} ez {ez:.2} ry {ry:.4} rx {rx:.4}]"
            ));
        }
    }
    let elapsed = t0.elapsed();
    let pass = ok >= 18;
    println!(
        "criterion 05 (round-trip calibration): {} — {ok}/20 seeds recovered within tolerance{detail}, {elapsed:.1?}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(elapsed.as_secs_f64() < 300.0, "runtime {elapsed:.1?} over budget");
    assert!(ok >= 18, "only {ok}/20 seeds recovered");
}

/// Criterion 6: Zeeman calibration: the fitted scale satisfies scale x 0.2 G =
/// 2π x 70 kHz within 0.5 kHz, and a 2π x 3 kHz injected offset is
/// recovered within its fitted uncertainty (differentially against the
/// zero-injection control, which cancels the small dressing systematic of
/// the spin-flip line).
#[test]
fn criterion_06_zeeman_calibration() {
    let t0 = Instant::now();
    let consts = PhysicalConstants::cesium();
    let scale_true = consts.g_f * consts.mu_b / consts.hbar;
    // weak couplings keep the dressed shift of the spin-flip line small
    // while the line stays clearly visible (it vanishes entirely at g = 0)
    let params =
        ModelParams { g_x: TWO_PI * 2.5e3, g_y: TWO_PI * 2.5e3, ..ModelParams::default() };
    let nominal = delta_grid_khz(270.0, 330.0, 10.0).unwrap();
    let settings = SpectrumSettings {
        grid: uniform_grid(-360.0, 360.0, 0.25).unwrap(),
        include_carrier: false,
        ..Default::default()
    };
    let window = (TWO_PI * 269e3, TWO_PI * 331e3);

    // zero-injection control at low noise: the scale check and the
    // reference offset
    let mut control = scan_delta(&params, &nominal, &settings).unwrap();
    control.b0_gauss = Some(control.deltas.iter().map(|&d| d / scale_true).collect());
    let sigma0 = 3e-6 * scan_max_psd(&control);
    apply_noise(&mut control, sigma0, 1);
    let ctrl = calibrate_zeeman(&control, window).unwrap();
    let check_khz = ctrl.scale * 0.2 / RAD_PER_KHZ;
    let scale_ok = (check_khz - 70.0).abs() <= 0.5;

    // injected 2π x 3 kHz offset, 20 noise seeds
    let offset = TWO_PI * 3e3;
    let true_deltas: Vec<f64> = nominal.iter().map(|d| d + offset).collect();
    let mut base = scan_delta(&params, &true_deltas, &settings).unwrap();
    base.deltas = nominal.clone();
    base.b0_gauss = Some(nominal.iter().map(|&d| d / scale_true).collect());
    let sigma = 2.7e-5 * scan_max_psd(&base);
    let mut within_1 = 0;
    let mut within_3 = 0;
    for seed in 0..20u64 {
        let mut noisy = base.clone();
        apply_noise(&mut noisy, sigma, seed);
        let c = calibrate_zeeman(&noisy, window).unwrap();
        let pull = (c.offset - ctrl.offset - offset).abs() / c.sigma_offset;
        if pull <= 1.0 {
            within_1 += 1;
        }
        if pull <= 3.0 {
            within_3 += 1;
        }
    }
    let elapsed = t0.elapsed();
    let offsets_ok = within_1 >= 10 && within_3 == 20;
    println!(
        "criterion 06 (Zeeman calibration): {} — scale x 0.2 G = {check_khz:.3} kHz \
         (criterion 70±0.5); injected offset within 1σ in {within_1}/20, within 3σ in {within_3}/20, {elapsed:.1?}",
        if scale_ok && offsets_ok { "PASS" } else { "FAIL" }
    );
    assert!(elapsed.as_secs_f64() < 10.0, "runtime {elapsed:.1?} over budget");
    assert!(scale_ok, "scale x 0.2 G = {check_khz:.3} kHz outside 70±0.5");
    assert!(offsets_ok, "offset coverage {within_1}/20 within 1σ, {within_3}/20 within 3σ");
}

/// Criterion 7: Thermal asymmetry: at <n> = 0.5 the uncoupled model's red/blue
/// sideband height ratio is 1/3 within 1e-6, exactly as the truncated
/// geometric distribution demands.
#[test]
fn criterion_07_thermal_asymmetry() {
    let t0 = Instant::now();
    let params = ModelParams { g_x: 0.0, g_y: 0.0, delta: TWO_PI * 300e3, ..Default::default() };
    let h = build_two_mode(&params).unwrap();
    let es = eigh(&h).unwrap();
    let th =
        ThermalState::new(0.5, 0.5, ThermalState::spin_ground(params.f), params.n_max).unwrap();
    let v =
        emission_operator(0.1, 0.15, Some(0.1), params.n_max, params.f, params.f + 1.0).unwrap();
    let opts = TransitionOptions {
        include_carrier: true,
        spectator: Some(SpectatorMode {
            omega: params.omega_z,
            eta: 0.1,
            mean_n: 0.5,
            n_max: params.n_max,
        }),
    };
    let table = transitions(&es, &th, &v, &opts).unwrap();

    // table-level amplitude ratio for all three modes
    let ratio_at = |omega: f64| -> f64 {
        let mut up = 0.0;
        let mut down = 0.0;
        for rec in &table.records {
            if (rec.omega - omega).abs() < 1.0 {
                up += rec.amplitude;
            }
            if (rec.omega + omega).abs() < 1.0 {
                down += rec.amplitude;
            }
        }
        down / up
    };
    let mut worst = 0.0_f64;
    for omega in [params.omega_x, params.omega_y, params.omega_z] {
        worst = worst.max((ratio_at(omega) - 1.0 / 3.0).abs());
    }
    // rendered-spectrum height ratio
    let grid = uniform_grid(-350.0, 350.0, 0.25).unwrap();
    let spectrum = render(&table, &grid, 2.0).unwrap();
    for omega in [params.omega_x, params.omega_y, params.omega_z] {
        let f = omega / RAD_PER_KHZ;
        let up = measure_peak_near(&spectrum, f, 6.0).unwrap();
        let down = measure_peak_near(&spectrum, -f, 6.0).unwrap();
        worst = worst.max((down.height / up.height - 1.0 / 3.0).abs());
    }
    let elapsed = t0.elapsed();
    let pass = worst <= 1e-6;
    println!(
        "criterion 07 (thermal asymmetry): {} — worst |ratio - 1/3| = {worst:.2e} across x, y, z, {elapsed:.1?}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(elapsed.as_secs_f64() < 1.0 + 2.0, "runtime {elapsed:.1?} over budget");
    assert!(worst <= 1e-6, "asymmetry deviates by {worst:.2e}");
}

/// Criterion 8: Tune-out line fit: slope recovered within ±10 Hz/µW on every one of
/// 100 seeded noisy synthetic lines, with at least 95% 3σ coverage.
#[test]
fn criterion_08_tuneout_fit() {
    let t0 = Instant::now();
    let truth_slope = -0.120; // kHz per µW
    let truth_intercept = 35.0;
    let sigma = 0.2;
    let mut covered = 0;
    let mut all_within = true;
    let mut worst = 0.0_f64;
    for seed in 0..100u64 {
        let mut rng = SplitMix64::new(900 + seed);
        let pts: Vec<(f64, f64, f64)> = (0..11)
            .map(|k| {
                let p = 10.0 * k as f64;
                (p, truth_intercept + truth_slope * p + sigma * rng.next_normal(), sigma)
            })
            .collect();
        let fit = fit_line(&pts).unwrap();
        let err_hz = (fit.slope - truth_slope).abs() * 1e3;
        worst = worst.max(err_hz);
        if err_hz > 10.0 {
            all_within = false;
        }
        if (fit.slope - truth_slope).abs() <= 3.0 * fit.slope_sigma {
            covered += 1;
        }
    }
    let elapsed = t0.elapsed();
    let pass = all_within && covered >= 95;
    println!(
        "criterion 08 (tune-out slope): {} — worst |slope error| {worst:.1} Hz/µW (criterion ≤10), \
         3σ coverage {covered}/100, {elapsed:.1?}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(elapsed.as_secs_f64() < 5.0, "runtime {elapsed:.1?} over budget");
    assert!(all_within, "worst slope error {worst:.1} Hz/µW");
    assert!(covered >= 95, "3σ coverage {covered}/100");
}

/// Criterion 9: Sum rule and non-negativity on rendered spectra: on a grid covering
/// every transition, the integrated PSD equals the total amplitude times
/// the Gaussian norm to 1e-6 relative, and the PSD is nonnegative.
#[test]
fn criterion_09_sum_rule_and_nonnegativity() {
    let t0 = Instant::now();
    let configs: [(f64, f64, Option<f64>); 3] = [
        (0.5, TWO_PI * 93e3, None),
        (0.5, TWO_PI * 300e3, Some(0.1)),
        (0.0, TWO_PI * 40e3, None),
    ];
    let mut worst = 0.0_f64;
    for (mean_n, delta, eta_z) in configs {
        let params = ModelParams { delta, ..Default::default() };
        let h = build_two_mode(&params).unwrap();
        let es = eigh(&h).unwrap();
        let th = ThermalState::new(
            mean_n,
            mean_n,
            ThermalState::spin_ground(params.f),
            params.n_max,
        )
        .unwrap();
        let v =
            emission_operator(0.1, 0.15, eta_z, params.n_max, params.f, params.f + 1.0).unwrap();
        let opts = TransitionOptions {
            include_carrier: true,
            spectator: eta_z.map(|eta| SpectatorMode {
                omega: params.omega_z,
                eta,
                mean_n,
                n_max: params.n_max,
            }),
        };
        let table = transitions(&es, &th, &v, &opts).unwrap();
        // grid wide enough for every line in the table
        let span = table
            .records
            .iter()
            .map(|r| r.omega.abs() / RAD_PER_KHZ)
            .fold(0.0, f64::max);
        let sigma = 2.0;
        let grid = uniform_grid(-(span + 30.0 * sigma), span + 30.0 * sigma, 0.5).unwrap();
        let spectrum = render(&table, &grid, sigma).unwrap();
        assert!(spectrum.psd.iter().all(|&v| v >= 0.0), "negative PSD sample");
        let expect = table.total_amplitude()
            * (2.0 * std::f64::consts::PI).sqrt()
            * sigma;
        worst = worst.max((spectrum.integral() - expect).abs() / expect);
    }
    let elapsed = t0.elapsed();
    let pass = worst <= 1e-6;
    println!(
        "criterion 09 (sum rule / non-negativity): {} — worst relative sum-rule defect {worst:.2e}, {elapsed:.1?}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(worst <= 1e-6, "sum-rule defect {worst:.2e}");
}

/// Criterion 10: Determinism: every CLI command rerun with identical config and seed
/// produces byte-identical files.
#[test]
fn criterion_10_cli_determinism() {
    let t0 = Instant::now();
    let bin = env!("CARGO_BIN_EXE_spinmotion");
    let root = std::env::temp_dir().join(format!("spinmotion_acc10_{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&root);
    std::fs::create_dir_all(&root).unwrap();
    let config_path = root.join("run.cfg");
    std::fs::write(
        &config_path,
        "fock.n_max = 4\n\
         scan.delta_start_khz = 60\n\
         scan.delta_stop_khz = 330\n\
         scan.delta_step_khz = 6\n\
         spectrum.f_min_khz = -350\n\
         spectrum.f_max_khz = 350\n\
         spectrum.step_khz = 0.5\n\
         noise.sigma_rel = 0.02\n",
    )
    .unwrap();
    let compare_cfg = root.join("compare.cfg");
    std::fs::write(
        &compare_cfg,
        "fock.n_max = 4\n\
         scan.delta_start_khz = 80\n\
         scan.delta_stop_khz = 110\n\
         scan.delta_step_khz = 15\n\
         spectrum.f_min_khz = -200\n\
         spectrum.f_max_khz = 200\n\
         spectrum.step_khz = 0.5\n",
    )
    .unwrap();

    let run = |cmd: &[&str], out: &Path| {
        let status = Command::new(bin)
            .args(cmd)
            .arg("--out")
            .arg(out)
            .status()
            .expect("spawn spinmotion");
        assert!(status.success(), "command {cmd:?} failed with {status}");
    };
    let compare_dirs = |a: &Path, b: &Path, files: &[&str]| {
        for f in files {
            let ba = std::fs::read(a.join(f)).unwrap_or_else(|_| panic!("missing {f} in {a:?}"));
            let bb = std::fs::read(b.join(f)).unwrap_or_else(|_| panic!("missing {f} in {b:?}"));
            assert_eq!(ba, bb, "file {f} differs between reruns");
        }
    };

    let cfg = config_path.to_str().unwrap();
    let ccfg = compare_cfg.to_str().unwrap();
    for (i, out) in ["a", "b"].iter().enumerate() {
        let dir = root.join(out);
        run(&["spectrum", "--config", cfg, "--seed", "42"], &dir.join("spectrum"));
        run(&["scan", "--config", cfg, "--seed", "42"], &dir.join("scan"));
        let scan_csv = dir.join("scan").join("scan.csv");
        run(
            &["fit", scan_csv.to_str().unwrap(), "--config", cfg, "--seed", "42"],
            &dir.join("fit"),
        );
        run(&["compare", "--config", ccfg, "--seed", "42"], &dir.join("compare"));
        run(&["tuneout", "--config", cfg, "--seed", "42"], &dir.join("tuneout"));
        let _ = i;
    }
    let a = root.join("a");
    let b = root.join("b");
    compare_dirs(&a.join("spectrum"), &b.join("spectrum"), &["spectrum.csv"]);
    compare_dirs(&a.join("scan"), &b.join("scan"), &["scan.csv", "peaks.csv"]);
    compare_dirs(&a.join("fit"), &b.join("fit"), &["calibration.json"]);
    compare_dirs(
        &a.join("compare"),
        &b.join("compare"),
        &["compare.csv", "compare_summary.json"],
    );
    compare_dirs(
        &a.join("tuneout"),
        &b.join("tuneout"),
        &["tuneout.json", "tuneout_points.csv"],
    );
    let elapsed = t0.elapsed();
    println!(
        "criterion 10 (CLI determinism): PASS — spectrum, scan, fit, compare, tuneout byte-identical across reruns, {elapsed:.1?}"
    );
    let _ = std::fs::remove_dir_all(&root);
}

/// Companion check to criterion 3: the spectroscopic gap measurements agree
/// with the converged eigenvalue-difference oracle of the same model, for
/// both crossings. This is the dual-route verification that the x-half
/// failure above is the model's own physics, not a measurement artifact.
#[test]
fn criterion_03_oracle_companion() {
    let params = ModelParams::default();
    let oracle = |window: (f64, f64), pair: (usize, usize)| -> f64 {
        let mut best = f64::MAX;
        let mut d = window.0;
        while d <= window.1 {
            let p = ModelParams { delta: TWO_PI * d * 1e3, ..params.clone() };
            let es = eigh(&build_two_mode(&p).unwrap()).unwrap();
            best = best.min(es.energies[pair.1] - es.energies[pair.0]);
            d += 0.25;
        }
        best / RAD_PER_KHZ
    };
    let y_exact = oracle((95.0, 108.0), (1, 2));
    let x_exact = oracle((136.0, 148.0), (2, 3));
    println!(
        "criterion 03 oracle: exact y gap {y_exact:.3} kHz (frozen 34.942), exact x gap {x_exact:.3} kHz (frozen 33.794)"
    );
    assert!((y_exact - 34.942).abs() < 0.01);
    assert!((x_exact - 33.794).abs() < 0.01);
}
