//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Exits with status 0 after printing every line, so that the workspace
//! test run completes; pass `--strict` (or set `ACCEPTANCE_STRICT=1`) to
//! turn any failure into a non-zero exit status.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use ekfadmm::experiment::{presets, runner, Dataset, ExperimentConfig, Filter, RunResult};
use ekfadmm::regret::RegretSeries;
use ekfadmm::selftest::{self, Check};
use ekfadmm::{RegSpec, Result};

const SEEDS: u64 = 10;

type Criterion<'a> = Box<dyn FnOnce() -> (Outcome, Duration) + 'a>;

struct Outcome {
    passed: bool,
    detail: String,
}

fn from_check(check: Result<Check>, budget: Option<Duration>) -> Outcome {
    match check {
        Ok(c) => Outcome {
            passed: c.passed() && budget.is_none_or(|b| c.elapsed < b),
            detail: format!("{c}"),
        },
        Err(e) => Outcome { passed: false, detail: format!("error: {e}") },
    }
}

fn mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, n) = values.into_iter().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    sum / n as f64
}

fn list(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.4e}")).collect::<Vec<_>>().join(", ")
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

fn lasso_trend() -> Result<Outcome> {
    let horizons = [500usize, 2000, 8000];
    let mut r_f = Vec::new();
    let mut r_c = Vec::new();
    let mut unmet = 0;
    for &n in &horizons {
        let (mut f, mut c) = (Vec::new(), Vec::new());
        for seed in 0..SEEDS {
            let mut cfg = presets::lasso(n);
            cfg.seed = seed;
            cfg.output.checkpoints = 0;
            let report = runner::run_experiment(&cfg)?.regret.expect("hindsight enabled");
            unmet += usize::from(!report.tolerance_met);
            f.push(report.series.final_r_f() / n as f64);
            c.push(report.series.final_r_c() / n as f64);
        }
        r_f.push(mean(f));
        r_c.push(mean(c));
    }
    Ok(Outcome {
        passed: strictly_decreasing(&r_f) && strictly_decreasing(&r_c),
        detail: format!(
            "N = {horizons:?}: mean R_f/N = [{}], mean R_c/N = [{}] ({unmet} comparator solves short of tolerance)",
            list(&r_f),
            list(&r_c)
        ),
    })
}

fn run_on(base: &ExperimentConfig, data: &Dataset, filter: Filter, edit: impl FnOnce(&mut ExperimentConfig)) -> Result<RunResult> {
    let mut cfg = base.clone();
    cfg.filter = filter;
    edit(&mut cfg);
    runner::run_online(&cfg, data)
}

fn static_l1() -> Result<Outcome> {
    let (mut tv_sparsity, mut tv_mse, mut tv_mse_x, mut ekf_mse, mut tv_loss, mut const_loss) =
        (Vec::new(), Vec::new(), Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for seed in 0..SEEDS {
        let mut base = presets::static_l1(20_000);
        base.seed = seed;
        base.output.checkpoints = 0;
        let data = runner::dataset(&base)?;
        let tv = run_on(&base, &data, Filter::EkfAdmmTv, |_| {})?;
        let constant = run_on(&base, &data, Filter::EkfAdmm, |_| {})?;
        let plain = run_on(&base, &data, Filter::PlainEkf, |c| c.reg = RegSpec::None)?;
        tv_sparsity.push(tv.at_nu.sparsity);
        tv_mse.push(tv.at_nu.mse);
        tv_mse_x.push(tv.at_x.mse);
        ekf_mse.push(plain.at_x.mse);
        tv_loss.push(tv.at_nu.loss);
        const_loss.push(constant.at_nu.loss);
    }
    let min_sparsity = tv_sparsity.iter().copied().fold(f64::INFINITY, f64::min);
    let worst_ratio = tv_mse.iter().zip(&ekf_mse).map(|(a, b)| a / b).fold(0.0, f64::max);
    let (a, b, c) = (
        min_sparsity >= 0.3,
        worst_ratio <= 3.0,
        mean(tv_loss.iter().copied()) <= mean(const_loss.iter().copied()),
    );
    Ok(Outcome {
        passed: a && b && c,
        detail: format!(
            "(a) {} min sparsity {:.3}; (b) {} worst Mse ratio {:.2} (mean Mse {:.3e} vs plain EKF {:.3e}; at x-hat {:.3e}); \
             (c) {} mean Loss {:.4e} vs constant rho {:.4e}",
            verdict(a),
            min_sparsity,
            verdict(b),
            worst_ratio,
            mean(tv_mse.iter().copied()),
            mean(ekf_mse.iter().copied()),
            mean(tv_mse_x),
            verdict(c),
            mean(tv_loss),
            mean(const_loss)
        ),
    })
}

fn bounds() -> Result<Outcome> {
    let (mut admm_mse, mut admm_mse_x, mut clip_mse, mut max_cv) = (Vec::new(), Vec::new(), Vec::new(), 0.0f64);
    for seed in 0..SEEDS {
        let mut base = presets::static_bounds(20_000);
        base.seed = seed;
        base.output.checkpoints = 0;
        let data = runner::dataset(&base)?;
        let admm = run_on(&base, &data, Filter::EkfAdmm, |_| {})?;
        let clip = run_on(&base, &data, Filter::EkfClip, |_| {})?;
        max_cv = max_cv.max(admm.max_cv_nu);
        admm_mse.push(admm.at_nu.mse);
        admm_mse_x.push(admm.at_x.mse);
        clip_mse.push(clip.at_x.mse);
    }
    let (a, b) = (max_cv == 0.0, mean(admm_mse.iter().copied()) < mean(clip_mse.iter().copied()));
    Ok(Outcome {
        passed: a && b,
        detail: format!(
            "(a) {} largest violation of nu {:e}; (b) {} mean Mse {:.4e} vs EKF-CLIP {:.4e} (EKF-ADMM at x-hat {:.4e})",
            verdict(a),
            max_cv,
            verdict(b),
            mean(admm_mse),
            mean(clip_mse),
            mean(admm_mse_x)
        ),
    })
}

fn switching() -> Result<Outcome> {
    const N: usize = 30_000;
    let mut forgetting = vec![0.0; N];
    let mut plain = vec![0.0; N];
    let mut segments = Vec::new();
    for seed in 0..SEEDS {
        let mut cfg = presets::switching_l0(N);
        cfg.seed = seed;
        cfg.output.checkpoints = 0;
        let data = runner::dataset(&cfg)?;
        let with = runner::run_online(&cfg, &data)?;
        let without = run_on(&cfg, &data, Filter::EkfAdmm, |c| c.hyper.alpha_forget = 1.0)?;
        let sol = runner::comparator(&cfg, &data, &runner::warm_starts(&with))?;
        for (acc, run) in [(&mut forgetting, &with), (&mut plain, &without)] {
            let report = runner::report(&cfg, &run.trace, &sol)?;
            for (a, s) in acc.iter_mut().zip(RegretSeries::sample(&report.series.r_f)) {
                *a += s / SEEDS as f64;
            }
        }
        segments = data.segments.clone();
    }

    // after each switch the sample regret must rise above its pre-switch
    // value and then fall back below the peak by the end of the segment
    let window = 2000;
    let mut ok = true;
    let mut parts = Vec::new();
    for w in segments.windows(2).skip(1) {
        let (start, end) = (w[0], w[1]);
        let before = forgetting[start - 1];
        let (peak_at, peak) = (start..(start + window).min(end))
            .map(|i| (i, forgetting[i]))
            .fold((start, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
        let last = forgetting[end - 1];
        ok &= peak > before && last < peak;
        parts.push(format!(
            "switch at {start}: {before:.4e} -> peak {peak:.4e} at {peak_at} -> {last:.4e} at {}",
            end - 1
        ));
    }
    let (last_with, last_without) = (forgetting[N - 1], plain[N - 1]);
    let ordered = last_with < last_without;
    Ok(Outcome {
        passed: ok && ordered,
        detail: format!(
            "{}; {} final sample regret {:.4e} (alpha 0.9) vs {:.4e} (alpha 1.0)",
            parts.join("; "),
            verdict(ordered),
            last_with,
            last_without
        ),
    })
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "not met"
    }
}

fn timed(budget: Option<Duration>, f: impl FnOnce() -> Result<Outcome>) -> (Outcome, Duration) {
    let started = Instant::now();
    let mut outcome = f().unwrap_or_else(|e| Outcome { passed: false, detail: format!("error: {e}") });
    let elapsed = started.elapsed();
    if let Some(b) = budget {
        if elapsed >= b {
            outcome.passed = false;
            outcome.detail.push_str(&format!("; over the {} s budget", b.as_secs()));
        }
    }
    (outcome, elapsed)
}

fn main() -> ExitCode {
    let strict = std::env::args().any(|a| a == "--strict")
        || std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let seed = 20_241;
    let secs = Duration::from_secs;
    let criteria: Vec<(&str, Criterion)> = vec![
        ("batch-recursive equivalence", Box::new(move || timed(None, || Ok(from_check(selftest::batch_recursive(50, seed), Some(secs(5))))))),
        ("fast-naive equivalence", Box::new(move || timed(None, || Ok(from_check(selftest::fast_naive(200, seed), Some(secs(10))))))),
        ("prox oracles", Box::new(move || timed(None, || Ok(from_check(selftest::prox_grid(1000, seed), Some(secs(5))))))),
        ("network Jacobian", Box::new(move || timed(None, || Ok(from_check(selftest::jacobian_fd(100, seed), None))))),
        ("vanishing-rho limit", Box::new(move || timed(None, || Ok(from_check(selftest::degenerate_limit(100, seed), None))))),
        ("LASSO regret trend", Box::new(|| timed(Some(secs(120)), lasso_trend))),
        ("static l1 network", Box::new(|| timed(Some(secs(600)), static_l1))),
        ("bounded network", Box::new(|| timed(Some(secs(600)), bounds))),
        ("switching network", Box::new(|| timed(Some(secs(600)), switching))),
        ("regret-bound schedule", Box::new(move || timed(None, || Ok(from_check(selftest::theorem_schedule_check(20, seed), None))))),
    ];

    let mut failed = 0;
    for (i, (name, run)) in criteria.into_iter().enumerate() {
        let (outcome, elapsed) = run();
        failed += usize::from(!outcome.passed);
        println!(
            "{} {:>2} {name} [{:.1} s]: {}",
            if outcome.passed { "PASS" } else { "FAIL" },
            i + 1,
            elapsed.as_secs_f64(),
            outcome.detail
        );
    }
    println!("{} of 10 criteria passed", 10 - failed);
    if strict && failed > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
