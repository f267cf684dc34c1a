//! Acceptance gate: nine checks, one scoreboard line each.
//!
//! Every test prints `criterion N <label> ... PASS|FAIL` before asserting,
//! so a failing criterion still reports its line and `--nocapture` shows
//! the whole board. Tolerances are stated inline next to each check.

use pigeonsim::montecarlo::{compare_counts, run_ensemble, run_ensemble_mode, ExecMode, RunConfig};
use pigeonsim::pigeonhole::{build_scenario, correlation_pattern, verify_general, PairClass};
use pigeonsim::prepost::{abl_probabilities, chain_amplitude, weak_value, MeasurementSpec};
use pigeonsim::qstate::ProjectorSpec;
use pigeonsim::report::counts_csv;
use pigeonsim::weakcoupling::{deflection_scan, evolve, first_order_check, postselect};
use pigeonsim::C64;

fn verdict(number: usize, label: &str, pass: bool) {
    println!(
        "criterion {number} {label} ... {}",
        if pass { "PASS" } else { "FAIL" }
    );
}

/// Brute-force <Phi| Pi^same-or-diff |Psi> for the two-box register, all
/// phases spelled out with trigonometric calls so the check is independent
/// of the library's basis construction.
fn oracle_bracket(outcome: &[usize], i: usize, j: usize, same: bool) -> C64 {
    let n = outcome.len();
    let dim = 1usize << n;
    let mut acc = C64::new(0.0, 0.0);
    for config in 0..dim {
        let digit = |p: usize| (config >> (n - 1 - p)) & 1;
        if (digit(i) == digit(j)) != same {
            continue;
        }
        let mut post = C64::new(1.0, 0.0);
        for (p, &o) in outcome.iter().enumerate() {
            let theta = std::f64::consts::FRAC_PI_2 * (1.0 + 2.0 * o as f64) * digit(p) as f64;
            post *= C64::new(theta.cos(), theta.sin()) / 2.0f64.sqrt();
        }
        let pre = (1.0 / 2.0f64.sqrt()).powi(n as i32);
        acc += post.conj() * pre;
    }
    acc
}

fn oracle_p_same(outcome: &[usize], i: usize, j: usize) -> f64 {
    let s = oracle_bracket(outcome, i, j, true).norm_sqr();
    let d = oracle_bracket(outcome, i, j, false).norm_sqr();
    s / (s + d)
}

#[test]
fn criterion_1_pigeonhole_identity() {
    let sc = build_scenario(3, 2, &[0, 0, 0]).unwrap();
    let e = sc.ensemble().unwrap();
    let mut worst = 0.0f64;
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        let m = MeasurementSpec::same_diff(sc.shape(), i, j).unwrap();
        worst = worst.max(abl_probabilities(&e, &m).unwrap()[0]);
    }
    let pass = worst <= 1e-12;
    verdict(1, "pigeonhole identity", pass);
    assert!(pass, "max P(same) over pairs is {worst}");
}

#[test]
fn criterion_2_separate_measurement_contrast() {
    let sc = build_scenario(3, 2, &[0, 0, 0]).unwrap();
    let e = sc.ensemble().unwrap();
    let boxes = MeasurementSpec::box_pair_full(sc.shape(), 0, 1).unwrap();
    let probs = abl_probabilities(&e, &boxes).unwrap();
    let boxes_ok = probs.len() == 4 && probs.iter().all(|p| (p - 0.25).abs() <= 1e-12);
    let joint = MeasurementSpec::same_diff(sc.shape(), 0, 1).unwrap();
    let p_same = abl_probabilities(&e, &joint).unwrap()[0];
    let pass = boxes_ok && p_same <= 1e-12;
    verdict(2, "separate-measurement contrast", pass);
    assert!(pass, "box probabilities {probs:?}, joint P(same) {p_same}");
}

#[test]
fn criterion_3_outcome_pattern_table() {
    let mut pass = true;
    let mut detail = String::new();
    for idx in 0..8usize {
        let outcome = [(idx >> 2) & 1, (idx >> 1) & 1, idx & 1];
        let sc = build_scenario(3, 2, &outcome).unwrap();
        let pattern = correlation_pattern(&sc).unwrap();
        for entry in &pattern.pairs {
            let oracle = oracle_p_same(&outcome, entry.i, entry.j);
            if (entry.p_same - oracle).abs() > 1e-12 {
                pass = false;
                detail = format!(
                    "outcome {outcome:?} pair ({},{}) p_same {} vs oracle {oracle}",
                    entry.i, entry.j, entry.p_same
                );
            }
        }
    }
    let asserted: [([usize; 3], [PairClass; 3]); 3] = [
        ([0, 0, 0], [PairClass::Different; 3]),
        ([1, 1, 1], [PairClass::Different; 3]),
        (
            [1, 0, 0],
            [PairClass::Same, PairClass::Same, PairClass::Different],
        ),
    ];
    for (outcome, want) in asserted {
        let sc = build_scenario(3, 2, &outcome).unwrap();
        let pattern = correlation_pattern(&sc).unwrap();
        let got: Vec<PairClass> = pattern.pairs.iter().map(|p| p.class).collect();
        if got != want {
            pass = false;
            detail = format!("outcome {outcome:?} classes {got:?}, expected {want:?}");
        }
    }
    verdict(3, "outcome-pattern table", pass);
    assert!(pass, "{detail}");
}

#[test]
fn criterion_4_generalization() {
    let mut pass = true;
    let mut detail = String::new();
    for n in 3..=6usize {
        for m in 2..n {
            if (m as u128).pow(n as u32) > (1u128 << 20) {
                continue;
            }
            let r = verify_general(n, m).unwrap();
            if r.max_pair_same_probability > 1e-10 || r.roots_of_unity_residual > 1e-12 {
                pass = false;
                detail = format!(
                    "(N, M) = ({n}, {m}): max p_same {}, residual {}",
                    r.max_pair_same_probability, r.roots_of_unity_residual
                );
            }
        }
    }
    verdict(4, "generalization", pass);
    assert!(pass, "{detail}");
}

#[test]
fn criterion_5_disturbance_chain() {
    let sc = build_scenario(3, 2, &[0, 0, 0]).unwrap();
    let shape = sc.shape();
    let same_01 = ProjectorSpec::same_pair(shape, 0, 1).unwrap();
    let same_02 = ProjectorSpec::same_pair(shape, 0, 2).unwrap();
    let chain = chain_amplitude(sc.pre(), &[same_01, same_02], sc.post()).unwrap();
    let exact_ok = (chain.path_probability - 1.0 / 32.0).abs() <= 1e-12;

    let cfg = RunConfig {
        scenario: sc,
        intermediate: vec![
            MeasurementSpec::same_diff(shape, 0, 1).unwrap(),
            MeasurementSpec::same_diff(shape, 0, 2).unwrap(),
        ],
        samples: 100_000,
        seed: 42,
    };
    let cmp = compare_counts(&cfg, &run_ensemble(&cfg).unwrap()).unwrap();
    let cell = cmp
        .cells
        .iter()
        .find(|c| c.key.0 == [0, 0] && c.selected)
        .unwrap();
    let p = cell.exact_probability;
    let n = cfg.samples as f64;
    let within = (cell.count as f64 - n * p).abs() <= 3.0 * (n * p * (1.0 - p)).sqrt();
    let pass = exact_ok && within;
    verdict(5, "disturbance chain", pass);
    assert!(
        pass,
        "path probability {}, count {} vs expectation {}",
        chain.path_probability,
        cell.count,
        n * p
    );
}

#[test]
fn criterion_6_single_pair_elimination() {
    let sc = build_scenario(3, 2, &[0, 0, 0]).unwrap();
    let shape = sc.shape();
    let cfg = RunConfig {
        scenario: sc,
        intermediate: vec![MeasurementSpec::same_diff(shape, 0, 1).unwrap()],
        samples: 50_000,
        seed: 1,
    };
    let counts = run_ensemble(&cfg).unwrap();
    let cmp = compare_counts(&cfg, &counts).unwrap();
    let cell = cmp
        .cells
        .iter()
        .find(|c| c.key.0 == [0] && c.selected)
        .unwrap();
    let selected_total = counts.selected_total(&cfg.scenario);
    // The (same, selected) cell has exact probability 0, so its count is 0
    // at any sample size and the conditional frequency is exactly zero.
    let pass = cell.exact_probability == 0.0 && cell.count == 0 && selected_total > 0;
    verdict(6, "single-pair elimination", pass);
    assert!(
        pass,
        "exact {}, count {} of {selected_total} selected runs",
        cell.exact_probability, cell.count
    );
}

#[test]
fn criterion_7_first_order_cancellation() {
    let sc = build_scenario(3, 2, &[0, 0, 0]).unwrap();
    let coefficient = first_order_check(sc.pre(), sc.post()).unwrap();
    let coefficient_ok = coefficient <= 1e-12;

    let lambdas = [1e-3, 2e-3, 5e-3, 1e-2];
    let post_scan = deflection_scan(sc.pre(), Some(sc.post()), &lambdas, 1.0).unwrap();
    let post_slopes: Vec<f64> = post_scan.fits.iter().map(|f| f.slope.unwrap()).collect();
    let post_slope_ok = post_slopes.iter().all(|s| (s - 2.0).abs() <= 0.1);

    let free_scan = deflection_scan(sc.pre(), None, &lambdas, 1.0).unwrap();
    let free_slope_ok = free_scan
        .fits
        .iter()
        .all(|f| (f.slope.unwrap() - 1.0).abs() <= 0.05);
    let shift_ok = free_scan.rows.iter().all(|row| {
        row.mean_shifts
            .iter()
            .all(|shift| (shift - row.lambda / 2.0).abs() <= 1e-16)
    });

    let pass = coefficient_ok && post_slope_ok && free_slope_ok && shift_ok;
    verdict(7, "first-order cancellation", pass);
    assert!(
        pass,
        "coefficient {coefficient} (ok = {coefficient_ok}); post-selected \
         log-log slopes {post_slopes:?} against the required band 2 +/- 0.1 \
         (ok = {post_slope_ok}; the measured shift law is lambda^3 / (8 sigma^2), \
         a slope of 3); unconditioned slope band 1 +/- 0.05 ok = {free_slope_ok}; \
         exact lambda/2 mean shifts ok = {shift_ok}"
    );
}

#[test]
fn criterion_8_weak_value_pointer_law() {
    let sc = build_scenario(3, 2, &[1, 0, 0]).unwrap();
    let e = sc.ensemble().unwrap();
    let w01 = weak_value(&e, &ProjectorSpec::same_pair(sc.shape(), 0, 1).unwrap()).unwrap();
    let w_ok = (w01 - C64::new(1.0, 0.0)).norm() <= 1e-12;
    let lambda = 1e-3;
    let ps = postselect(&evolve(sc.pre(), lambda, 1.0).unwrap(), sc.post()).unwrap();
    let shifts = ps.mean_shifts();
    let first_ok = (shifts[0] / (lambda * w01.re) - 1.0).abs() <= 0.05;
    let tail_ok = shifts[2].abs() <= lambda * lambda;
    let pass = w_ok && first_ok && tail_ok;
    verdict(8, "weak-value pointer law", pass);
    assert!(pass, "weak value {w01}, mean shifts {shifts:?}");
}

#[test]
fn criterion_9_reproducibility() {
    let sc = build_scenario(3, 2, &[0, 0, 0]).unwrap();
    let shape = sc.shape();
    let cfg = RunConfig {
        scenario: sc,
        intermediate: vec![
            MeasurementSpec::same_diff(shape, 0, 1).unwrap(),
            MeasurementSpec::same_diff(shape, 0, 2).unwrap(),
        ],
        samples: 20_000,
        seed: 7,
    };
    let serial = counts_csv(&cfg, &run_ensemble_mode(&cfg, ExecMode::Serial).unwrap());
    let parallel = counts_csv(&cfg, &run_ensemble_mode(&cfg, ExecMode::Parallel).unwrap());
    let again = counts_csv(&cfg, &run_ensemble_mode(&cfg, ExecMode::Parallel).unwrap());
    let pass = serial == parallel && parallel == again;
    verdict(9, "reproducibility", pass);
    assert!(pass, "serial and parallel counts differ for equal seeds");
}
