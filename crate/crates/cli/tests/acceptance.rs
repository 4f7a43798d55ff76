//! Acceptance suite.  Each test covers one numbered criterion, prints one
//! `PASS`/`FAIL` line per sub-check, and then asserts.  Run with
//! `cargo test -p uniest-cli --test acceptance -- --nocapture --test-threads 1`.
//!
//! All runs use the CLI default seed (or fixed offsets from it) and the
//! trial counts stated next to each criterion.

use std::path::PathBuf;
use std::process::Command;

use uniest::fidelity::{
    blind_fidelity, entanglement_gain, estimate_avg_fidelity, f1_closed, f1_monte_carlo, optimal_n1, optimal_n2_d2,
    product_max, scan_argmax, scan_n2, separable_bound,
};
use uniest::haar::haar_su;
use uniest::numerics::{herm_eig, ComplexMatrix};
use uniest::probes::{max_entangled, optimal_n2_meas_weight, optimal_n2_prep_weight, su2_n2_irreps};
use uniest::strategies::{
    bell_strategy, blind_strategy, covariant_completeness, covariant_n1, covariant_n1_sampler, covariant_n2,
    covariant_n2_sampler, CovariantSampler,
};
use uniest::{Estimate, RngStream, C64};
use uniest_cli::config::DEFAULT_SEED;

const TRIALS: usize = 100_000;
const FIDELITY_ABS_TOL: f64 = 0.01;
const STDERR_MULTIPLE: f64 = 5.0;
const F1_ABS_TOL: f64 = 0.02;
const SPECTRAL_TOL: f64 = 1e-10;
const PRODUCT_MAX_TOL: f64 = 1e-6;
const SCAN_ARGMAX_TOL: f64 = 0.05;
const SCAN_MARGIN: f64 = 0.005;
const COMPLETENESS_N1_TOL: f64 = 0.02;
const COMPLETENESS_N2_TOL: f64 = 0.05;
const COMPLETENESS_OFF_MIN: f64 = 0.1;
const INVARIANCE_SIGMAS: f64 = 3.0;
const INVARIANCE_RUNS: u64 = 5;

fn line(criterion: u32, pass: bool, what: &str) -> bool {
    println!("criterion {criterion:>2} {} {what}", if pass { "PASS" } else { "FAIL" });
    pass
}

fn check_estimate(criterion: u32, label: &str, est: &Estimate, reference: f64) -> bool {
    let tol = FIDELITY_ABS_TOL.max(STDERR_MULTIPLE * est.stderr);
    let pass = (est.mean - reference).abs() <= tol;
    line(
        criterion,
        pass,
        &format!(
            "{label}: mean {:.6} ± {:.6}, reference {reference:.6}, tolerance {tol:.4}",
            est.mean, est.stderr
        ),
    )
}

#[test]
fn criterion_01_bell_strategy() {
    let est = estimate_avg_fidelity(&bell_strategy(), TRIALS, DEFAULT_SEED).unwrap();
    assert!(check_estimate(1, "Bell basis d=2", &est, 0.5));
}

#[test]
fn criterion_02_covariant_single_use() {
    let mut ok = true;
    for d in 2..=4 {
        let est = estimate_avg_fidelity(&covariant_n1(d).unwrap(), TRIALS, DEFAULT_SEED).unwrap();
        ok &= check_estimate(2, &format!("covariant d={d}"), &est, optimal_n1(d));
    }
    assert!(ok);
}

#[test]
fn criterion_03_blind_baseline() {
    let mut ok = true;
    for d in 2..=3 {
        let est = estimate_avg_fidelity(&blind_strategy(d).unwrap(), TRIALS, DEFAULT_SEED).unwrap();
        ok &= check_estimate(3, &format!("blind d={d}"), &est, blind_fidelity(d));
    }
    assert!(ok);
}

#[test]
fn criterion_04_f1_cross_check() {
    let mut ok = true;
    for d in 2..=3 {
        let mc = f1_monte_carlo(d, TRIALS, DEFAULT_SEED).unwrap();
        let exact = f1_closed(d);
        let mut worst_abs: f64 = 0.0;
        let mut worst_z: f64 = 0.0;
        let mut entries_ok = true;
        for i in 0..d * d {
            for j in 0..d * d {
                let dev = (mc.mean.get(i, j) - exact.get(i, j)).norm();
                let se = mc.stderr_at(i, j);
                entries_ok &= dev <= STDERR_MULTIPLE * se && dev <= F1_ABS_TOL;
                worst_abs = worst_abs.max(dev);
                worst_z = worst_z.max(dev / se);
            }
        }
        ok &= line(
            4,
            entries_ok,
            &format!("f1 d={d}: max |Δ| {worst_abs:.2e} (limit {F1_ABS_TOL}), max |Δ|/stderr {worst_z:.2} (limit {STDERR_MULTIPLE})"),
        );
    }
    assert!(ok);
}

#[test]
fn criterion_05_spectral_claim() {
    let mut ok = true;
    for d in 2..=6 {
        let eig = herm_eig(&f1_closed(d)).unwrap();
        let top = eig.vector(0);
        let overlap = max_entangled(d)
            .amplitudes()
            .iter()
            .zip(&top)
            .map(|(a, b)| a.conj() * b)
            .sum::<C64>()
            .norm_sqr();
        let value_err = (eig.values[0] - optimal_n1(d)).abs();
        ok &= line(
            5,
            value_err <= SPECTRAL_TOL && overlap >= 1.0 - SPECTRAL_TOL,
            &format!("f1 d={d}: |λ_max − 2/d²| {value_err:.1e}, overlap with Φ {overlap:.15}"),
        );
    }
    assert!(ok);
}

#[test]
fn criterion_06_separable_bound() {
    let mut ok = true;
    for d in 2..=4 {
        let pm = product_max(&f1_closed(d), d).unwrap();
        let err = (pm.value - separable_bound(d)).abs();
        ok &= line(
            6,
            err <= PRODUCT_MAX_TOL,
            &format!("product max d={d}: {:.10} vs {:.10}", pm.value, separable_bound(d)),
        );
    }
    assert!(ok);
}

#[test]
fn criterion_07_two_copy_optimum() {
    let a = optimal_n2_prep_weight();
    let a_meas = optimal_n2_meas_weight();
    assert!((a * a - (5.0 + 5f64.sqrt()) / 10.0).abs() < 1e-15);
    assert!((a_meas * a_meas - 0.9).abs() < 1e-15);
    let est = estimate_avg_fidelity(&covariant_n2(a_meas).unwrap(), TRIALS, DEFAULT_SEED).unwrap();
    assert!(check_estimate(7, "two-copy covariant d=2", &est, optimal_n2_d2()));
}

#[test]
fn criterion_08_two_copy_scan() {
    let grid: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
    let scan = scan_n2(&grid, optimal_n2_meas_weight(), TRIALS, DEFAULT_SEED).unwrap();
    for (a, e) in &scan {
        println!("    a={a:.1}  F={:.6} ± {:.6}", e.mean, e.stderr);
    }
    let (best_a, best) = scan_argmax(&scan).unwrap();
    let target = optimal_n2_prep_weight();
    let at_one = &scan.last().unwrap().1;
    let argmax_ok = line(
        8,
        (best_a - target).abs() <= SCAN_ARGMAX_TOL,
        &format!("scan argmax a={best_a:.1}, reference {target:.4} ± {SCAN_ARGMAX_TOL}"),
    );
    let margin = best.mean - at_one.mean;
    let margin_ok = line(
        8,
        margin > SCAN_MARGIN,
        &format!("peak exceeds triplet-only a=1 by {margin:.4} (need > {SCAN_MARGIN})"),
    );
    assert!(argmax_ok && margin_ok);
}

#[test]
fn criterion_09_completeness() {
    let n1 = covariant_completeness(&covariant_n1_sampler(2).unwrap(), &ComplexMatrix::identity(4), TRIALS, DEFAULT_SEED)
        .unwrap();
    let support = su2_n2_irreps().reachable_support(4).unwrap();
    let n2 = covariant_completeness(&covariant_n2_sampler(optimal_n2_meas_weight()).unwrap(), &support, TRIALS, DEFAULT_SEED)
        .unwrap();
    let off_sampler: CovariantSampler = covariant_n2_sampler(0.5f64.sqrt()).unwrap();
    let off = covariant_completeness(&off_sampler, &support, TRIALS, DEFAULT_SEED).unwrap();
    let a = line(
        9,
        n1.deviation <= COMPLETENESS_N1_TOL,
        &format!("N=1 d=2 c=4: ‖M − I₄‖_F = {:.4} (limit {COMPLETENESS_N1_TOL})", n1.deviation),
    );
    let b = line(
        9,
        n2.deviation <= COMPLETENESS_N2_TOL,
        &format!("N=2 c=10 a'²=0.9: ‖PMP − P‖_F = {:.4} (limit {COMPLETENESS_N2_TOL})", n2.deviation),
    );
    let c = line(
        9,
        off.deviation > COMPLETENESS_OFF_MIN,
        &format!("N=2 a'²=0.5: ‖PMP − P‖_F = {:.4} (must exceed {COMPLETENESS_OFF_MIN})", off.deviation),
    );
    assert!(a && b && c);
}

#[test]
fn criterion_10_invariance_suite() {
    let base = covariant_n1(2).unwrap();
    let baseline = estimate_avg_fidelity(&base, TRIALS, DEFAULT_SEED).unwrap();
    let phi = max_entangled(2);
    let mut ok = true;
    let compare = |label: String, est: &Estimate| {
        let combined = (baseline.stderr.powi(2) + est.stderr.powi(2)).sqrt();
        let diff = (est.mean - baseline.mean).abs();
        line(
            10,
            diff <= INVARIANCE_SIGMAS * combined,
            &format!(
                "{label}: {:.6} vs baseline {:.6}, |Δ| = {:.2} combined stderr",
                est.mean,
                baseline.mean,
                diff / combined
            ),
        )
    };
    for k in 0..INVARIANCE_RUNS {
        // probe (X⊗I)|Φ⟩, guesses shifted back by X†
        let x = haar_su(2, &mut RngStream::new(DEFAULT_SEED, 1_000_000 + k));
        let s = base
            .with_prepare(phi.apply_left(&x).unwrap())
            .unwrap()
            .map_guesses(x.adjoint())
            .unwrap();
        let est = estimate_avg_fidelity(&s, TRIALS, DEFAULT_SEED + 1 + k).unwrap();
        ok &= compare(format!("guess shift X#{k}"), &est);
    }
    for k in 0..INVARIANCE_RUNS {
        // probe (I⊗Y)|Φ⟩ = (Yᵀ⊗I)|Φ⟩, guesses corrected by (Yᵀ)† = Y*
        let y = haar_su(2, &mut RngStream::new(DEFAULT_SEED, 2_000_000 + k));
        let s = base
            .with_prepare(phi.apply_right(&y).unwrap())
            .unwrap()
            .map_guesses(y.conj())
            .unwrap();
        let est = estimate_avg_fidelity(&s, TRIALS, DEFAULT_SEED + 100 + k).unwrap();
        ok &= compare(format!("B-side absorption Y#{k}"), &est);
    }
    assert!(ok);
}

#[test]
fn criterion_11_channel_tuning_ratio() {
    let mut ok = true;
    for d in 2..=3 {
        let rep = uniest::demos::channel_tune(d, TRIALS, DEFAULT_SEED).unwrap();
        let tol = FIDELITY_ABS_TOL.max(STDERR_MULTIPLE * rep.entangled.stderr) / rep.separable_bound;
        assert!((rep.expected_ratio - entanglement_gain(d)).abs() < 1e-15);
        ok &= line(
            11,
            (rep.ratio - rep.expected_ratio).abs() <= tol,
            &format!(
                "d={d}: ratio {:.4} vs 2(d+1)/(d+2) = {:.4}, tolerance {tol:.4}",
                rep.ratio, rep.expected_ratio
            ),
        );
    }
    assert!(ok);
}

fn povm_file() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/bell_povm.json")
}

fn run_cli(args: &[&str], workers: &str) -> (i32, Vec<u8>) {
    let out = Command::new(env!("CARGO_BIN_EXE_uniest"))
        .args(args)
        .args(["--workers", workers, "--no-timestamp"])
        .env_remove("UNIEST_SEED")
        .output()
        .expect("binary runs");
    (out.status.code().unwrap_or(-1), out.stdout)
}

#[test]
fn criterion_12_determinism() {
    let povm = povm_file();
    let povm = povm.to_str().unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec!["fidelity-n1", "--d", "3", "--samples", "3000", "--seed", "5"],
        vec!["fidelity-n1", "--strategy", "bell", "--samples", "3000", "--seed", "5"],
        vec!["fidelity-n1", "--strategy", "blind", "--samples", "3000", "--format", "csv"],
        vec!["f1-check", "--d", "3", "--samples", "3000"],
        vec!["fidelity-n2", "--samples", "1000", "--grid", "0:1:0.5", "--format", "csv"],
        vec!["fidelity-n2", "--samples", "1000", "--seed", "9"],
        vec!["bfield", "--samples", "1000", "--per-trial"],
        vec!["bfield", "--samples", "1000", "--axis", "1,0,0", "--angle", "1.2"],
        vec!["channel-tune", "--d", "3", "--samples", "3000"],
        vec!["povm-validate", "--input", povm],
    ];
    let mut ok = true;
    for args in &cases {
        let (code1, first) = run_cli(args, "1");
        let (code2, again) = run_cli(args, "1");
        let (code3, threaded) = run_cli(args, "4");
        let same = first == again && first == threaded && code1 == code2 && code1 == code3 && !first.is_empty();
        ok &= line(
            12,
            same,
            &format!("{} ({} bytes, workers 1/1/4)", args.join(" "), first.len()),
        );
    }
    assert!(ok);
}
