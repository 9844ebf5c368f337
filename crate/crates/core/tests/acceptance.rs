//! Acceptance criteria. Each test prints one `PASS`/`FAIL` line with the
//! measured quantities; run with `--nocapture` to see them.
//!
//! Monte Carlo sizes are the reduced ones (T₁ = 200 trials, T₂ = 10
//! repetitions) and every experiment uses a fixed seed.

use std::time::{Duration, Instant};

use meanshift_core::covariance::CovOperator;
use meanshift_core::detectors::{sign_vector, threshold_cusum, CusumDomain};
use meanshift_core::sim::log_log_slope;
use meanshift_core::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const T1: usize = 200;
const T2: usize = 10;
const SEED: u64 = 1;

fn report(name: &str, ok: bool, detail: String, elapsed: Duration, budget: Duration) {
    let within = elapsed <= budget;
    let verdict = if ok && within { "PASS" } else { "FAIL" };
    println!(
        "{verdict} {name}: {detail} [{:.1}s of {}s budget]",
        elapsed.as_secs_f64(),
        budget.as_secs()
    );
    assert!(ok, "{name}: {detail}");
    assert!(within, "{name}: took {elapsed:?}, budget {budget:?}");
}

fn plugin() -> DetectorChoice {
    DetectorChoice::PluginGlrt {
        estimator: EstimatorChoice::GridMle {
            grid: ParamGrid::standard(),
        },
    }
}

#[test]
fn criterion_1_calibration() {
    let start = Instant::now();
    let n = 200;
    let dets = [
        DetectorChoice::Glrt,
        DetectorChoice::GlrtGeneral,
        DetectorChoice::Cusum,
    ];
    let mut worst = 0.0f64;
    let mut lines = Vec::new();
    for (label, spec) in [
        ("white", KernelSpec::white_noise(1.0, n).unwrap()),
        ("matern-0.5", KernelSpec::matern(1.0, 0.5, 0.5, n).unwrap()),
    ] {
        let exp = Experiment::new(&spec, 0.1, &dets).unwrap();
        let rates = exp.null_rejection_rates(&[0.05], 2000, SEED).unwrap();
        for (d, r) in dets.iter().zip(&rates) {
            worst = worst.max(r[0]);
            lines.push(format!("{label}/{}={:.4}", d.name(), r[0]));
        }
    }
    report(
        "criterion 1 (calibration, rate <= 0.07)",
        worst <= 0.07,
        lines.join(" "),
        start.elapsed(),
        Duration::from_secs(120),
    );
}

#[test]
fn criterion_2_fixed_domain_ordering() {
    let start = Instant::now();
    let n = 500;
    let mut ok = true;
    let mut detail = Vec::new();

    // ν = 1.5: GLRT saturates at jumps far below CUSUM's detection range.
    let smooth = KernelSpec::matern(1.0, 0.5, 1.5, n).unwrap();
    let exp =
        Experiment::new(&smooth, 0.1, &[DetectorChoice::Glrt, DetectorChoice::Cusum]).unwrap();
    let grid = [2.5e-4, 5e-4, 1e-3, 2e-3, 4e-3, 8e-3];
    let mut crossing = None;
    for &b in &grid {
        let s = exp.run(b, T1, T2, SEED).unwrap();
        if s[0].mean_auc > 0.9 {
            crossing = Some((b, s[0].mean_auc, s[1].mean_auc));
            break;
        }
    }
    match crossing {
        Some((b, g, c)) => {
            ok &= c <= 0.65;
            detail.push(format!(
                "nu=1.5 first b with GLRT>0.9: b={b} glrt={g:.3} cusum={c:.3}"
            ));
        }
        None => {
            ok = false;
            detail.push("nu=1.5 GLRT never exceeded 0.9 on the grid".into());
        }
    }

    // ν = 0.5: GLRT dominates CUSUM; the plug-in stays close to the GLRT.
    let rough = KernelSpec::matern(1.0, 0.5, 0.5, n).unwrap();
    let exp = Experiment::new(
        &rough,
        0.1,
        &[DetectorChoice::Glrt, plugin(), DetectorChoice::Cusum],
    )
    .unwrap();
    let mut worst_dom = f64::INFINITY;
    let mut worst_gap = 0.0f64;
    for b in [0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0] {
        let s = exp.run(b, T1, T2, SEED).unwrap();
        worst_dom = worst_dom.min(s[0].mean_auc - s[2].mean_auc);
        worst_gap = worst_gap.max((s[0].mean_auc - s[1].mean_auc).abs());
    }
    ok &= worst_dom >= -0.02 && worst_gap <= 0.07;
    detail.push(format!(
        "nu=0.5 min(glrt-cusum)={worst_dom:.3} max|glrt-plugin|={worst_gap:.3}"
    ));
    report(
        "criterion 2 (fixed-domain ordering)",
        ok,
        detail.join("; "),
        start.elapsed(),
        Duration::from_secs(900),
    );
}

#[test]
fn criterion_3_increasing_domain_parity() {
    let start = Instant::now();
    let n = 500;
    let grid: Vec<f64> = (1..=10).map(|k| k as f64 / 10.0).collect();
    let dets = [DetectorChoice::Glrt, DetectorChoice::Cusum];

    let exp = Experiment::new(&KernelSpec::exp_toeplitz(1.0, 2.0, n).unwrap(), 0.1, &dets).unwrap();
    let mut worst_parity = 0.0f64;
    let mut at = 0.0;
    for &b in &grid {
        let s = exp.run(b, T1, T2, SEED).unwrap();
        let d = (s[0].mean_auc - s[1].mean_auc).abs();
        if d > worst_parity {
            worst_parity = d;
            at = b;
        }
    }

    let exp = Experiment::new(
        &KernelSpec::poly_toeplitz(1.0, 2.0, 0.5, n).unwrap(),
        0.1,
        &dets,
    )
    .unwrap();
    let mut worst_dom = f64::INFINITY;
    for &b in &grid {
        let s = exp.run(b, T1, T2, SEED).unwrap();
        worst_dom = worst_dom.min(s[0].mean_auc - s[1].mean_auc);
    }
    report(
        "criterion 3 (increasing-domain parity)",
        worst_parity <= 0.05 && worst_dom >= -0.02,
        format!(
            "exp max|glrt-cusum|={worst_parity:.3} (b={at}); poly min(glrt-cusum)={worst_dom:.3}"
        ),
        start.elapsed(),
        Duration::from_secs(600),
    );
}

#[test]
fn criterion_4_rate_shapes() {
    let start = Instant::now();
    let ns = [100, 200, 400];
    // The ν = 1.5 GLRT detects jumps near 0.01 already at n = 100, so the
    // bracket is widened downward to keep every point unsaturated.
    let cfg = RateConfig {
        t1: T1,
        t2: T2,
        seed: SEED,
        bracket: (1e-4, 10.0),
        ..RateConfig::default()
    };
    let curve = |spec: KernelSpec, det: DetectorChoice| rate_curve(&spec, &det, &ns, &cfg).unwrap();
    let g05 = curve(
        KernelSpec::matern(1.0, 0.5, 0.5, 100).unwrap(),
        DetectorChoice::Glrt,
    );
    let g15 = curve(
        KernelSpec::matern(1.0, 0.5, 1.5, 100).unwrap(),
        DetectorChoice::Glrt,
    );
    let c10 = curve(
        KernelSpec::matern(1.0, 0.5, 1.0, 100).unwrap(),
        DetectorChoice::Cusum,
    );
    let gexp = curve(
        KernelSpec::exp_toeplitz(1.0, 2.0, 100).unwrap(),
        DetectorChoice::Glrt,
    );
    let saturated = [&g05, &g15, &c10, &gexp]
        .iter()
        .any(|c| c.iter().any(|p| p.saturated));

    let (s05, s15, sexp) = (
        log_log_slope(&g05),
        log_log_slope(&g15),
        log_log_slope(&gexp),
    );
    let flat = c10[2].b_min / c10[0].b_min;
    let ok_a = s15 <= s05 - 0.3;
    let ok_b = flat >= 0.8;
    let ok_c = (-0.7..=-0.3).contains(&sexp);
    report(
        "criterion 4 (rate shapes)",
        ok_a && ok_b && ok_c && !saturated,
        format!(
            "(a) slope nu=0.5 {s05:.3}, nu=1.5 {s15:.3}; (b) cusum b_min(400)/b_min(100)={flat:.3}; (c) exp slope {sexp:.3}; saturated={saturated}"
        ),
        start.elapsed(),
        Duration::from_secs(1200),
    );
}

/// Dense LU with partial pivoting, independent of the library's Cholesky.
fn lu_solve(a: &[f64], n: usize, rhs: &[f64]) -> Vec<f64> {
    let mut m = a.to_vec();
    let mut b = rhs.to_vec();
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| m[i * n + k].abs().total_cmp(&m[j * n + k].abs()))
            .unwrap();
        if p != k {
            for j in 0..n {
                m.swap(k * n + j, p * n + j);
            }
            b.swap(k, p);
        }
        for i in k + 1..n {
            let f = m[i * n + k] / m[k * n + k];
            for j in k..n {
                m[i * n + j] -= f * m[k * n + j];
            }
            b[i] -= f * b[k];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| m[i * n + j] * x[j]).sum();
        x[i] = (b[i] - s) / m[i * n + i];
    }
    x
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[test]
fn criterion_5_oracle_equivalence() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    let mut t_mismatch = 0;
    for case in 0..50 {
        let n = rng.random_range(20..=100);
        let spec = match case % 5 {
            0 => KernelSpec::matern(
                rng.random_range(0.5..2.0),
                rng.random_range(0.05..0.5),
                0.5,
                n,
            )
            .unwrap(),
            1 => KernelSpec::matern(
                1.0,
                rng.random_range(0.05..0.3),
                rng.random_range(0.6..1.6),
                n,
            )
            .unwrap(),
            2 => {
                KernelSpec::exp_toeplitz(rng.random_range(0.5..2.0), rng.random_range(0.5..5.0), n)
                    .unwrap()
            }
            3 => KernelSpec::poly_toeplitz(
                1.0,
                rng.random_range(0.5..3.0),
                rng.random_range(0.2..1.5),
                n,
            )
            .unwrap(),
            _ => KernelSpec::powered_exponential(
                1.0,
                rng.random_range(0.05..0.5),
                rng.random_range(0.5..1.5),
                n,
            )
            .unwrap(),
        };
        let cov = build_cov(&spec).unwrap();
        let window = ChangeWindow::new(n, rng.random_range(0.05..0.3)).unwrap();
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let got = glrt(&x, &cov, &window, 0.05).unwrap();

        let dense = cov.dense();
        let y = lu_solve(&dense, n, &x);
        let mut best = (f64::NEG_INFINITY, 0);
        for t in window.times() {
            let z = sign_vector(n, t);
            let w = lu_solve(&dense, n, &z);
            let s = dot(&z, &y);
            let score = s * s / dot(&z, &w);
            if score > best.0 {
                best = (score, t);
            }
        }
        worst = worst.max((got.statistic - best.0).abs() / best.0.abs());
        if got.t_hat != best.1 {
            t_mismatch += 1;
        }
    }
    report(
        "criterion 5 (incremental scan = direct solves)",
        worst <= 1e-9 && t_mismatch == 0,
        format!("max relative error {worst:.2e}, t_hat mismatches {t_mismatch}/50"),
        start.elapsed(),
        Duration::from_secs(60),
    );
}

fn pair_count_auc(h0: &[f64], h1: &[f64]) -> f64 {
    let mut s = 0.0;
    for a in h1 {
        for b in h0 {
            s += if a > b {
                1.0
            } else if a == b {
                0.5
            } else {
                0.0
            };
        }
    }
    s / (h0.len() * h1.len()) as f64
}

#[test]
fn criterion_6_analytic_identities() {
    let start = Instant::now();
    let mut detail = Vec::new();

    let m = KernelSpec::matern(1.3, 0.7, 0.5, 100).unwrap();
    let exp_err = (0..100)
        .map(|k| {
            let r = k as f64 * 0.05;
            (eval_cov(&m, r).unwrap() - 1.69 * (-r / 0.7).exp()).abs()
        })
        .fold(0.0, f64::max);
    detail.push(format!("matern/exp {exp_err:.1e}"));

    let r = threshold_glrt(500, 0.1, 0.05).unwrap();
    detail.push(format!("R={r:.4}"));
    let cusum_eq = threshold_cusum(500, 0.1, 0.05, CusumDomain::Fixed, None).unwrap() == r;

    let mut g0_err = 0.0f64;
    let mut g_max = 0.0f64;
    for k in 1..=9 {
        let beta = k as f64 / 10.0;
        g0_err = g0_err.max((gbeta(0.0, beta).unwrap() - (1.0 - 2.0 * beta).powi(2)).abs());
        for i in -2000..=2000 {
            g_max = g_max.max(gbeta(i as f64 * 0.05, beta).unwrap());
        }
    }
    detail.push(format!("G(0) err {g0_err:.1e}, max G {g_max:.12}"));

    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut auc_err = 0.0f64;
    for _ in 0..200 {
        let (n0, n1) = (rng.random_range(1..=100), rng.random_range(1..=100));
        // coarse values to force ties
        let h0: Vec<f64> = (0..n0)
            .map(|_| (rng.random_range(0.0..5.0f64) * 4.0).round() / 4.0)
            .collect();
        let h1: Vec<f64> = (0..n1)
            .map(|_| (rng.random_range(0.5..5.5f64) * 4.0).round() / 4.0)
            .collect();
        auc_err = auc_err.max((roc_auc(&h0, &h1).unwrap().auc - pair_count_auc(&h0, &h1)).abs());
    }
    detail.push(format!("roc vs pairs {auc_err:.1e}"));

    let ok = exp_err <= 1e-10
        && (r - 26.5833).abs() <= 1e-3
        && cusum_eq
        && g0_err <= 1e-12
        && g_max <= 1.0 + 1e-9
        && auc_err <= 1e-12;
    report(
        "criterion 6 (analytic identities)",
        ok,
        detail.join(", "),
        start.elapsed(),
        Duration::from_secs(60),
    );
}

fn kantorovich_cases(rng: &mut ChaCha8Rng) -> (usize, f64) {
    let mut violations = 0;
    let mut min_margin = f64::INFINITY;
    for case in 0..1000 {
        let n = rng.random_range(2..=60);
        let spec = match case % 4 {
            0 => KernelSpec::matern(
                rng.random_range(0.2..3.0),
                rng.random_range(0.05..2.0),
                rng.random_range(0.3..2.0),
                n,
            ),
            1 => {
                KernelSpec::exp_toeplitz(rng.random_range(0.2..3.0), rng.random_range(0.1..10.0), n)
            }
            2 => KernelSpec::poly_toeplitz(
                rng.random_range(0.2..3.0),
                rng.random_range(0.1..10.0),
                rng.random_range(0.1..2.0),
                n,
            ),
            _ => KernelSpec::powered_exponential(
                rng.random_range(0.2..3.0),
                rng.random_range(0.05..2.0),
                rng.random_range(0.2..1.9),
                n,
            ),
        }
        .unwrap();
        let Ok(cov) = build_cov(&spec) else { continue };
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let q = cov.quad_form(&v).unwrap();
        let vv = dot(&v, &v);
        let bound = vv * vv / dot(&v, &cov.mul(&v).unwrap());
        let margin = (q - bound) / bound;
        min_margin = min_margin.min(margin);
        if margin < -1e-10 {
            violations += 1;
        }
    }
    (violations, min_margin)
}

fn invariances(rng: &mut ChaCha8Rng) -> f64 {
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let n = rng.random_range(30..=120);
        let spec = KernelSpec::matern(1.0, rng.random_range(0.05..0.5), 0.5, n).unwrap();
        let cov = build_cov(&spec).unwrap();
        let w = ChangeWindow::new(n, 0.1).unwrap();
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let base = glrt(&x, &cov, &w, 0.05).unwrap().statistic;
        let c = rng.random_range(0.1..10.0);
        let scaled: Vec<f64> = x.iter().map(|v| c * v).collect();
        let negated: Vec<f64> = x.iter().map(|v| -v).collect();
        worst = worst
            .max((glrt(&scaled, &cov, &w, 0.05).unwrap().statistic / (c * c * base) - 1.0).abs());
        worst = worst.max((glrt(&negated, &cov, &w, 0.05).unwrap().statistic / base - 1.0).abs());
        let g = glrt_general(&x, &cov, &w, 0.05).unwrap().statistic;
        let mu = rng.random_range(-5.0..5.0);
        let shifted: Vec<f64> = x.iter().map(|v| v + mu).collect();
        worst =
            worst.max((glrt_general(&shifted, &cov, &w, 0.05).unwrap().statistic / g - 1.0).abs());
    }
    worst
}

fn inverse_decay_slope() -> f64 {
    let n = 300;
    let lambda = 0.5;
    let cov = build_cov(&KernelSpec::poly_toeplitz(1.0, 2.0, lambda, n).unwrap()).unwrap();
    let mut max_at = vec![0.0f64; n];
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        let col = cov.solve(&e).unwrap();
        for (i, v) in col.iter().enumerate() {
            let d = i.abs_diff(j);
            max_at[d] = max_at[d].max(v.abs());
        }
    }
    let pts: Vec<(f64, f64)> = (10..=100)
        .map(|d| ((d as f64).ln(), max_at[d].ln()))
        .collect();
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>()
}

fn tau_full(cov: &CovOperator) -> f64 {
    let all: Vec<usize> = (0..cov.n()).collect();
    cov.tau(true, &all, &all).unwrap()
}

#[test]
fn criterion_7_property_suites() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (violations, min_margin) = kantorovich_cases(&mut rng);
    let inv = invariances(&mut rng);
    let slope = inverse_decay_slope();
    let a = (-0.5f64).exp();
    let target = (1.0 - a) / (1.0 + a);
    let e100 = (tau_full(&build_cov(&KernelSpec::exp_toeplitz(1.0, 2.0, 100).unwrap()).unwrap())
        - target)
        .abs();
    let e500 = (tau_full(&build_cov(&KernelSpec::exp_toeplitz(1.0, 2.0, 500).unwrap()).unwrap())
        - target)
        .abs();
    let ok = violations == 0 && inv <= 1e-9 && slope <= -1.5 + 0.3 && e500 < e100;
    report(
        "criterion 7 (property suites)",
        ok,
        format!(
            "kantorovich violations {violations} (min margin {min_margin:.2e}), invariance err {inv:.1e}, inverse decay slope {slope:.3}, tau err n=100 {e100:.2e} n=500 {e500:.2e}"
        ),
        start.elapsed(),
        Duration::from_secs(60),
    );
}
