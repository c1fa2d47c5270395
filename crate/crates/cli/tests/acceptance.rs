//! Acceptance suite: runs every criterion at its stated tolerance and prints
//! one PASS/FAIL line each. Exits with a failure status if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use abcpost::models::oracle::{gaussian_posterior_oracle, OracleFunction};
use abcpost::models::GaussianToy;
use abcpost::post::{
    correction_weights, corrected_mean, corrected_var_term, iact, sweep_values, weighted_least_squares,
};
use abcpost::{
    run_chain, ChainConfig, ChainSample, ChainTrace, CovarianceAdaptation, CutoffKernel, ProposalScheme,
    Start, StepSchedule,
};
use abcpost_cli::config::EstimatorKind;
use abcpost_cli::output::{flag, write_rows};
use abcpost_cli::{run_study, RunConfig, StudyOutput};
use proptest::prelude::*;
use proptest::test_runner::{Config as PropConfig, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

type Check = fn() -> Outcome;

struct Outcome {
    pass: bool,
    detail: String,
}

fn threads() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn study(text: &str) -> StudyOutput {
    let mut cfg = RunConfig::from_toml(text).expect("valid acceptance config");
    cfg.threads = threads();
    run_study(&cfg).expect("study runs")
}

fn gauss_fixed(delta: f64, epsilons: &str, reps: u64, seed: u64) -> String {
    format!(
        r#"
cutoff = "simple"
mode = "fixed"
delta = {delta}
n_burn = 1000
n_keep = 10000
epsilons = {epsilons}
functions = ["theta0"]
start = [0.0]
reps = {reps}
seed = {seed}

[model]
kind = "gaussian"
"#
    )
}

fn toy_chain(delta: f64, n_burn: usize, n_keep: usize, seed: u64) -> ChainTrace {
    let cfg = ChainConfig::new(
        delta,
        CutoffKernel::Simple,
        n_burn,
        n_keep,
        Start::Theta(vec![0.0]),
        ProposalScheme::Adaptive(CovarianceAdaptation::identity(&[0.0], StepSchedule::covariance_default())),
    );
    run_chain(&GaussianToy::default(), &cfg, seed).expect("chain runs")
}

fn a1() -> Outcome {
    let s = study(&gauss_fixed(3.0, "[0.1, 1.55, 3.0]", 500, 101));
    let mut pass = true;
    let mut detail = Vec::new();
    for a in &s.aggregate {
        let ok = (0.90..=1.00).contains(&a.coverage)
            && (a.epsilon != 3.0 || (0.92..=0.98).contains(&a.coverage));
        pass &= ok && a.truth == 0.0 && a.n_included == 500;
        detail.push(format!("eps {}: {:.3}", a.epsilon, a.coverage));
    }
    pass &= s.aggregate.len() == 3;
    Outcome {
        pass,
        detail: format!("coverage {}", detail.join(", ")),
    }
}

fn a2() -> Outcome {
    let post = study(&gauss_fixed(0.825, "[0.1]", 500, 202));
    let direct = study(&gauss_fixed(0.1, "[0.1]", 500, 303));
    let (rp, rd) = (post.aggregate[0].rmse, direct.aggregate[0].rmse);
    let pass = post.aggregate[0].n_included == 500 && direct.aggregate[0].n_included == 500 && rp <= 1.15 * rd;
    Outcome {
        pass,
        detail: format!("RMSE post {rp:.4} vs direct {rd:.4} (ratio {:.3}, limit 1.15)", rp / rd),
    }
}

fn a3() -> Outcome {
    let truth = gaussian_posterior_oracle(
        &GaussianToy::default(),
        OracleFunction::AbsoluteValue,
        0.5,
        &CutoffKernel::Simple,
    )
    .expect("oracle converges");
    let f = |t: &[f64]| t[0].abs();
    let hits = (0..100u64)
        .filter(|&i| {
            let tr = toy_chain(3.0, 1000, 200_000, 4000 + i);
            let e = corrected_mean(&tr, f, 0.5, &CutoffKernel::Simple).unwrap();
            let s = corrected_var_term(&tr, f, 0.5, &CutoffKernel::Simple).unwrap();
            let values: Vec<f64> = tr.thetas().map(f).collect();
            let tau = iact(&values).unwrap();
            (e - truth).abs() <= 4.0 * (s * tau).sqrt()
        })
        .count();
    Outcome {
        pass: hits >= 95,
        detail: format!("{hits}/100 within 4 sqrt(S tau) of oracle {truth:.6}"),
    }
}

fn a4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut max_diff: f64 = 0.0;
    for _ in 0..200 {
        let n = rng.random_range(1..=1000);
        let values: Vec<f64> = (0..n).map(|_| 5.0 * rng.sample::<f64, _>(StandardNormal)).collect();
        // coarse grid on half of the traces to produce ties
        let coarse = rng.random_bool(0.5);
        let distances: Vec<f64> = (0..n)
            .map(|_| {
                let d: f64 = rng.random_range(0.0..3.0);
                if coarse { (d * 10.0).floor() / 10.0 } else { d }
            })
            .collect();
        let curve = sweep_values(&values, &distances).unwrap();
        for p in curve.points() {
            let u: Vec<f64> = distances.iter().map(|&d| if d <= p.epsilon { 1.0 } else { 0.0 }).collect();
            let total: f64 = u.iter().sum();
            let e: f64 = values.iter().zip(&u).map(|(v, w)| v * w / total).sum();
            let s: f64 = values
                .iter()
                .zip(&u)
                .map(|(v, w)| (w / total * (v - e)).powi(2))
                .sum();
            max_diff = max_diff.max((p.mean - e).abs()).max((p.var_term - s).abs());
        }
    }
    Outcome {
        pass: max_diff <= 1e-10,
        detail: format!("max abs diff {max_diff:.3e} over 200 traces"),
    }
}

fn a5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let iid: Vec<f64> = (0..100_000).map(|_| StandardNormal.sample(&mut rng)).collect();
    let t_iid = iact(&iid).unwrap();
    let mut x = 0.0;
    let ar: Vec<f64> = (0..1_000_000)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            x = 0.5 * x + z;
            x
        })
        .collect();
    let t_ar = iact(&ar).unwrap();
    Outcome {
        pass: (0.9..=1.1).contains(&t_iid) && (2.7..=3.3).contains(&t_ar),
        detail: format!("iid tau {t_iid:.4}, AR(1) tau {t_ar:.4}"),
    }
}

fn a6() -> Outcome {
    let s = study(
        r#"
cutoff = "simple"
mode = "adaptive"
n_burn = 1000
n_keep = 10000
epsilons = [0.1]
functions = ["theta0"]
start = "prior"
reps = 100
seed = 606

[model]
kind = "gaussian"

[adapt]
target_rate = 0.1
exponent = 0.6666666666666666
"#,
    );
    let m = s.mean_acceptance_rate();
    let reps = s.trajectories.len();
    Outcome {
        pass: reps == 100 && (0.10..=0.25).contains(&m),
        detail: format!("mean acceptance {m:.4} over {reps} runs"),
    }
}

fn a7() -> Outcome {
    let cells = [(0.1, 0.03), (0.825, 0.22), (1.55, 0.33), (2.275, 0.40), (3.0, 0.43)];
    let mut pass = true;
    let mut detail = Vec::new();
    for (i, (delta, target)) in cells.iter().enumerate() {
        let tr = toy_chain(*delta, 1000, 99_000, 700 + i as u64);
        let r = tr.acceptance_rate();
        pass &= (r - target).abs() <= 0.03;
        detail.push(format!("delta {delta}: {r:.3} (target {target})"));
    }
    Outcome {
        pass,
        detail: detail.join(", "),
    }
}

const LV: &str = r#"
cutoff = "simple"
mode = "fixed"
delta = 200.0
n_burn = 10000
n_keep = 10000
functions = ["exp(theta0)", "exp(theta1)", "exp(theta2)"]
start = "mode"

[model]
kind = "lotka-volterra"
"#;

fn a8() -> Outcome {
    // (a) and (b): one chain, regression with Epanechnikov correction weights
    let single = study(&format!(
        "seed = 808\nreps = 1\npost_cutoff = \"epanechnikov\"\nestimators = [\"regression\"]\nepsilons = [80.0, 140.0, 200.0]\n{LV}"
    ));
    let acc = single.rows.first().map_or(f64::NAN, |r| r.acceptance_rate);
    let pass_a = single.failures.is_empty() && (0.10..=0.25).contains(&acc);
    let reg_ok = single.rows.len() == 9
        && single.rows.iter().all(|r| {
            r.estimator == EstimatorKind::Regression
                && (r.flag == flag::OK || r.flag == flag::CONSTANT_SERIES)
                && [r.e, r.s, r.tau, r.ci_low, r.ci_high].iter().all(|v| v.is_finite())
        });
    let support80 = single
        .rows
        .iter()
        .filter(|r| r.epsilon == 80.0)
        .map(|r| r.support_count)
        .min()
        .unwrap_or(0);
    let pass_b = reg_ok && support80 > 50;

    // (c): 50 replicates, post-correction at eps = delta = 200
    let mini = study(&format!("seed = 809\nreps = 50\nepsilons = [200.0]\n{LV}"));
    let cell = mini
        .aggregate
        .iter()
        .find(|a| a.function == "exp(theta0)" && a.epsilon == 200.0);
    let (cov, n) = cell.map_or((f64::NAN, 0), |a| (a.coverage, a.n_included));
    let pass_c = n == 50 && (0.85..=1.00).contains(&cov);
    Outcome {
        pass: pass_a && pass_b && pass_c,
        detail: format!(
            "(a) acceptance {acc:.3} [{}]; (b) finite regression rows {reg_ok}, support at eps 80 = {support80} [{}]; \
             (c) coverage theta1 {cov:.3} over {n} chains [{}]",
            if pass_a { "ok" } else { "fail" },
            if pass_b { "ok" } else { "fail" },
            if pass_c { "ok" } else { "fail" },
        ),
    }
}

fn trace(thetas: &[f64], distances: &[f64], delta: f64, cutoff: CutoffKernel) -> ChainTrace {
    ChainTrace {
        samples: thetas
            .iter()
            .zip(distances)
            .map(|(&t, &d)| ChainSample {
                theta: vec![t],
                distance: d,
                proposal: None,
                summaries: None,
            })
            .collect(),
        delta,
        cutoff,
        seed: 0,
        n_burn: 0,
        n_keep: thetas.len(),
        accept_count: 0,
    }
}

fn a9() -> Outcome {
    let mut failed = Vec::new();
    let runner = || TestRunner::new(PropConfig {
        cases: 256,
        failure_persistence: None,
        ..PropConfig::default()
    });
    let kernels = [CutoffKernel::Simple, CutoffKernel::Gaussian, CutoffKernel::Epanechnikov];

    let r = runner().run(
        &(proptest::collection::vec(0.0f64..3.0, 1..300), 0.01f64..1.0, 0usize..3),
        |(d, frac, k)| {
            if let Ok(w) = correction_weights(&d, 3.0, 3.0 * frac, &kernels[k]) {
                prop_assert!((w.w.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
                prop_assert!(w.w.iter().all(|&x| x >= 0.0));
            }
            Ok(())
        },
    );
    if r.is_err() {
        failed.push("weight normalization");
    }

    let r = runner().run(
        &(proptest::collection::vec((-5.0f64..5.0, 0.0f64..2.0), 1..200), 0usize..3),
        |(pts, k)| {
            let th: Vec<f64> = pts.iter().map(|p| p.0).collect();
            let d: Vec<f64> = pts.iter().map(|p| p.1).collect();
            let tr = trace(&th, &d, 2.0, kernels[k].clone());
            let n = th.len() as f64;
            let mean = th.iter().sum::<f64>() / n;
            let var = th.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (n * n);
            let e = corrected_mean(&tr, |t| t[0], 2.0, &kernels[k]).unwrap();
            let s = corrected_var_term(&tr, |t| t[0], 2.0, &kernels[k]).unwrap();
            prop_assert!((e - mean).abs() <= 1e-12 && (s - var).abs() <= 1e-12);
            Ok(())
        },
    );
    if r.is_err() {
        failed.push("eps = delta identities");
    }

    let r = runner().run(
        &(proptest::collection::vec(0.0f64..3.0, 1..300), 0.01f64..3.0, 0.01f64..3.0),
        |(d, e1, e2)| {
            let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
            let count = |e: f64| {
                correction_weights(&d, 3.0, e, &CutoffKernel::Simple).map_or(0, |w| w.support_count())
            };
            prop_assert!(count(lo) <= count(hi));
            Ok(())
        },
    );
    if r.is_err() {
        failed.push("support monotonicity");
    }

    let mut cfg = RunConfig::from_toml(&gauss_fixed(3.0, "[0.5, 3.0]", 8, 909)).unwrap();
    cfg.n_keep = 2000;
    cfg.estimators = vec![EstimatorKind::Post, EstimatorKind::Regression, EstimatorKind::WasteRecycled];
    let csv = |s: &StudyOutput| {
        let mut b = Vec::new();
        write_rows(&mut b, &s.rows).unwrap();
        b
    };
    cfg.threads = 1;
    let serial = run_study(&cfg).unwrap();
    cfg.threads = 4;
    let parallel = run_study(&cfg).unwrap();
    if csv(&serial) != csv(&parallel) {
        failed.push("determinism serial = parallel");
    }

    let r = runner().run(
        &(
            proptest::collection::vec((-3.0f64..3.0, -3.0f64..3.0, 0.01f64..1.0), 4..60),
            -5.0f64..5.0,
            -5.0f64..5.0,
            -5.0f64..5.0,
        ),
        |(pts, a, b1, b2)| {
            let s: Vec<Vec<f64>> = pts.iter().map(|p| vec![p.0, p.1]).collect();
            let refs: Vec<&[f64]> = s.iter().map(|v| v.as_slice()).collect();
            let y: Vec<f64> = pts.iter().map(|p| a + b1 * p.0 + b2 * p.1).collect();
            let w: Vec<f64> = pts.iter().map(|p| p.2).collect();
            if let Ok(fit) = weighted_least_squares(&refs, &y, &w) {
                let scale = 1.0 + a.abs() + b1.abs() + b2.abs();
                prop_assert!((fit.intercept - a).abs() <= 1e-8 * scale);
                prop_assert!((fit.slopes[0] - b1).abs() <= 1e-8 * scale);
                prop_assert!((fit.slopes[1] - b2).abs() <= 1e-8 * scale);
            }
            Ok(())
        },
    );
    if r.is_err() {
        failed.push("WLS exact fit");
    }

    Outcome {
        pass: failed.is_empty(),
        detail: if failed.is_empty() {
            "weights, identities, monotonicity, determinism, exact fit".into()
        } else {
            format!("failed: {}", failed.join(", "))
        },
    }
}

fn main() -> ExitCode {
    let criteria: [(&str, Check); 9] = [
        ("A1", a1),
        ("A2", a2),
        ("A3", a3),
        ("A4", a4),
        ("A5", a5),
        ("A6", a6),
        ("A7", a7),
        ("A8", a8),
        ("A9", a9),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| a.starts_with('A'))
        .collect();
    let mut all = true;
    for (name, run) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| f == name) {
            continue;
        }
        let t = Instant::now();
        let out = run();
        all &= out.pass;
        println!(
            "[{name}] {} ({:.1}s) {}",
            if out.pass { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64(),
            out.detail
        );
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
