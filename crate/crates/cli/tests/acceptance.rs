//! Acceptance suite. Runs every criterion at its pinned tolerance, prints one
//! PASS/FAIL line per criterion and exits nonzero if any fails.

use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use autoconv_core::certify::{exact_c, render_decimal, RationalHeights};
use autoconv_core::fixtures::{appendix_a, appendix_a_exact, APPENDIX_A};
use autoconv_core::gradient::grad_objective;
use autoconv_core::refine::{ascend, refine_pipeline, upsample_2x, RefineConfig};
use autoconv_core::search::{run_search, SearchConfig, SearchOutcome};
use autoconv_core::{autoconvolve, exact_objective, objective_c, StepFunction};
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit_secs: u64) -> Result<(), String> {
    check(elapsed.as_secs() <= limit_secs, || {
        format!(
            "runtime {:.1}s exceeds {limit_secs}s",
            elapsed.as_secs_f64()
        )
    })
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_autoconv"))
}

fn field(text: &str, key: &str) -> Option<String> {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")))
        .map(|v| v.trim().to_string())
}

fn random_heights(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(lo..hi)).collect()
}

fn sf(h: Vec<f64>) -> StepFunction {
    StepFunction::new(h).expect("valid heights")
}

/// 1. Exact certificate of the published 559-interval bound.
fn published_certificate(dir: &Path) -> Outcome {
    let start = Instant::now();
    let fixture = dir.join("appendix_a.txt");
    std::fs::write(&fixture, APPENDIX_A).map_err(|e| e.to_string())?;
    let out = bin()
        .args(["verify", fixture.to_str().unwrap(), "--bound", ".9264"])
        .output()
        .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let text = String::from_utf8_lossy(&out.stdout);
    check(out.status.code() == Some(0), || {
        format!("verify exited {:?}:\n{text}", out.status.code())
    })?;
    check(field(&text, "passes").as_deref() == Some("true"), || {
        "certificate does not pass".into()
    })?;

    let (c, _) = exact_c(&appendix_a_exact()).map_err(|e| e.to_string())?;
    let six = render_decimal(&c, 6);
    let value: f64 = six.parse().map_err(|_| six.clone())?;
    check((0.92645..=0.92661).contains(&value), || {
        format!("6-decimal value {six} outside [0.92645, 0.92661]")
    })?;
    within(elapsed, 60)?;
    Ok(format!(
        "C = {six}..., passes .9264, {:.2}s",
        elapsed.as_secs_f64()
    ))
}

/// 2. Indicator functions score exactly 2/3.
fn indicator_closed_form() -> Outcome {
    let two_thirds = BigRational::new(2.into(), 3.into());
    for n in [1usize, 2, 10, 100] {
        let h = RationalHeights::from_integers(&vec![1; n]);
        let cert = exact_objective(&h, &two_thirds, "2/3").map_err(|e| e.to_string())?;
        check(cert.c_exact == two_thirds, || {
            format!("N = {n}: C = {}", cert.c_exact)
        })?;
    }
    Ok("exactly 2/3 for N in {1, 2, 10, 100}".into())
}

/// 3. Floating point agrees with exact arithmetic to 1e-10 relative.
fn float_exact_agreement() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    let mut cases = 0;
    for _ in 0..25 {
        let n = rng.random_range(1..=200);
        let h: Vec<f64> = (0..n)
            .map(|_| {
                if rng.random_bool(0.2) {
                    0.0
                } else {
                    rng.random_range(0.0..3.0)
                }
            })
            .chain(std::iter::once(1.0))
            .collect();
        let float = objective_c(&sf(h.clone())).map_err(|e| e.to_string())?;
        let exact = exact_c(&RationalHeights::from_f64(&h).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?
            .0;
        worst = worst.max(rel(float, exact.to_f64().unwrap()));
        cases += 1;
    }
    let float = objective_c(&appendix_a()).map_err(|e| e.to_string())?;
    let exact = exact_c(&appendix_a_exact()).map_err(|e| e.to_string())?.0;
    worst = worst.max(rel(float, exact.to_f64().unwrap()));
    cases += 1;
    check(worst <= 1e-10, || {
        format!("max relative deviation {worst:e}")
    })?;
    Ok(format!(
        "{cases} inputs, max relative deviation {worst:.1e}"
    ))
}

/// Central differences with both sides evaluated exactly on the perturbed doubles.
fn exact_central_difference(h: &[f64], step: f64) -> Vec<f64> {
    let mut probe = h.to_vec();
    (0..h.len())
        .map(|i| {
            let x = h[i];
            let delta = step * x.abs().max(1.0);
            probe[i] = x + delta;
            let up = BigRational::from_float(probe[i]).unwrap();
            let plus = exact_c(&RationalHeights::from_f64(&probe).unwrap())
                .unwrap()
                .0;
            probe[i] = x - delta;
            let down = BigRational::from_float(probe[i]).unwrap();
            let minus = exact_c(&RationalHeights::from_f64(&probe).unwrap())
                .unwrap()
                .0;
            probe[i] = x;
            ((plus - minus) / (up - down)).to_f64().unwrap()
        })
        .collect()
}

/// 4. Closed-form gradient against central differences.
fn gradient_correctness() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut checked, mut tied) = (0, 0);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let h = random_heights(&mut rng, 50, 0.1, 1.0);
        let report = grad_objective(&sf(h.clone())).map_err(|e| e.to_string())?;
        if report.argmax_tied {
            tied += 1;
            continue;
        }
        let fd = exact_central_difference(&h, 1e-6);
        for (a, b) in report.gradient.iter().zip(&fd) {
            worst = worst.max(rel(*a, *b));
        }
        checked += 1;
    }
    let elapsed = start.elapsed();
    check(worst < 1e-6, || {
        format!("max per-coordinate relative error {worst:e}")
    })?;
    check(checked >= 90, || format!("only {checked} untied vectors"))?;
    within(elapsed, 60)?;
    Ok(format!(
        "{checked} vectors checked, {tied} ties excluded, max rel err {worst:.1e}, {:.1}s",
        elapsed.as_secs_f64()
    ))
}

/// 5. Scale, reflection and zero-padding invariance; L1 identity; Euler orthogonality.
fn invariance_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut inputs: Vec<Vec<f64>> = (0..20)
        .map(|_| {
            let n = rng.random_range(2..=150);
            random_heights(&mut rng, n, 0.0, 2.0)
        })
        .collect();
    inputs.push(appendix_a().into_heights());

    let (mut inv, mut l1, mut euler) = (0.0f64, 0.0f64, 0.0f64);
    for h in &inputs {
        let f = sf(h.clone());
        let c = objective_c(&f).map_err(|e| e.to_string())?;
        for lambda in [1e-3, 1e3] {
            let scaled = sf(h.iter().map(|x| x * lambda).collect());
            inv = inv.max(rel(c, objective_c(&scaled).unwrap()));
        }
        inv = inv.max(rel(c, objective_c(&f.reversed()).unwrap()));
        let mut padded = vec![0.0; 7];
        padded.extend(h);
        padded.extend([0.0; 4]);
        inv = inv.max(rel(c, objective_c(&sf(padded)).unwrap()));

        let total: f64 = h.iter().sum();
        let conv_sum: f64 = autoconvolve(&f).values.iter().sum();
        l1 = l1.max(rel(conv_sum, total * total));

        let g = grad_objective(&f).map_err(|e| e.to_string())?.gradient;
        let dot: f64 = h.iter().zip(&g).map(|(a, b)| a * b).sum();
        let scale: f64 = h.iter().zip(&g).map(|(a, b)| (a * b).abs()).sum();
        euler = euler.max(dot.abs() / scale);
    }
    check(inv <= 1e-12, || format!("invariance deviation {inv:e}"))?;
    check(l1 <= 1e-12, || format!("L1 identity deviation {l1:e}"))?;
    check(euler <= 1e-9, || format!("Euler deviation {euler:e}"))?;
    Ok(format!(
        "{} inputs; invariance {inv:.1e}, L1 identity {l1:.1e}, Euler {euler:.1e}",
        inputs.len()
    ))
}

/// 6. Scaled search at n = 50 reaches 0.89 on at least two of three seeds.
fn scaled_search(outcomes: &mut Vec<SearchOutcome>) -> Outcome {
    let start = Instant::now();
    let mut values = Vec::new();
    for seed in [1u64, 2, 3] {
        let config = SearchConfig {
            n_intervals: 50,
            batch_size: 256,
            iterations: 30_000,
            explore_steps: 9_000,
            respawn_period: 6_000,
            seed,
            ..SearchConfig::default()
        };
        let out = run_search(&config).map_err(|e| e.to_string())?;
        values.push(out.best_value);
        outcomes.push(out);
    }
    let elapsed = start.elapsed();
    let hits = values.iter().filter(|&&c| c >= 0.89).count();
    check(hits >= 2, || format!("best C per seed {values:?}"))?;
    within(elapsed, 15 * 60)?;
    Ok(format!(
        "best C per seed {:?}, {hits}/3 >= 0.89, {:.0}s",
        values.iter().map(|c| format!("{c:.6}")).collect::<Vec<_>>(),
        elapsed.as_secs_f64()
    ))
}

/// 7. Refinement of the published solution improves it.
fn refinement_improves() -> Outcome {
    let start = Instant::now();
    let base = appendix_a();
    let start_c = objective_c(&base).map_err(|e| e.to_string())?;

    let up = upsample_2x(&base).map_err(|e| e.to_string())?;
    let one = ascend(
        &up,
        &RefineConfig {
            iterations: 20_000,
            ..RefineConfig::default()
        },
    )
    .map_err(|e| e.to_string())?;
    check(one.value > start_c, || {
        format!("one round: {} <= start {start_c}", one.value)
    })?;

    // Two rounds sharing a 50,000-step budget.
    let cfg = RefineConfig {
        upsample_rounds: 2,
        iterations: 25_000,
        ..RefineConfig::default()
    };
    let two = refine_pipeline(&base, &cfg).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    check(two.value >= 0.93, || {
        format!("two rounds: {} < 0.93", two.value)
    })?;
    check(!two.regressed, || "pipeline flagged a regression".into())?;
    within(elapsed, 30 * 60)?;
    Ok(format!(
        "start {start_c:.6}; 1 round/20k -> {:.6}; 2 rounds/50k -> {:.6} on {} intervals, {:.0}s",
        one.value,
        two.value,
        two.heights.len(),
        elapsed.as_secs_f64()
    ))
}

/// 8. cmd_search output is byte-identical across runs and thread counts.
fn search_determinism(dir: &Path) -> Outcome {
    let run = |sub: &str, threads: &str| -> Result<Vec<u8>, String> {
        let out_dir = dir.join(sub);
        let out = bin()
            .args([
                "search",
                "--n",
                "30",
                "--batch",
                "32",
                "--iters",
                "2000",
                "--seed",
                "11",
                "--threads",
                threads,
                "--out-dir",
                out_dir.to_str().unwrap(),
            ])
            .output()
            .map_err(|e| e.to_string())?;
        check(out.status.success(), || {
            String::from_utf8_lossy(&out.stderr).into_owned()
        })?;
        std::fs::read(out_dir.join("best.txt")).map_err(|e| e.to_string())
    };
    let a = run("det_a", "1")?;
    let b = run("det_b", "1")?;
    let c = run("det_c", "4")?;
    check(a == b, || "repeat run differs".into())?;
    check(a == c, || "thread count changed the output".into())?;
    Ok(format!("3 runs, {} identical bytes", a.len()))
}

/// 9. Best-C traces never decrease and stored heights are never negative.
fn monotone_bookkeeping(outcomes: &[SearchOutcome], dir: &Path) -> Outcome {
    check(!outcomes.is_empty(), || "no search runs recorded".into())?;
    let mut checkpoints = 0;
    for (i, out) in outcomes.iter().enumerate() {
        for w in out.history.windows(2) {
            check(w[0].best_c <= w[1].best_c, || {
                format!(
                    "run {i}: best C fell from {} to {} at {}",
                    w[0].best_c, w[1].best_c, w[1].iteration
                )
            })?;
        }
        for cp in &out.history {
            check(cp.min_height >= 0.0, || {
                format!("run {i}: negative height at {}", cp.iteration)
            })?;
        }
        checkpoints += out.history.len();
    }
    // The CLI trace of the determinism run as well.
    let trace =
        std::fs::read_to_string(dir.join("det_a").join("trace.csv")).map_err(|e| e.to_string())?;
    let values: Vec<f64> = trace
        .lines()
        .skip(1)
        .map(|l| l.split_once(',').unwrap().1.parse().unwrap())
        .collect();
    check(values.windows(2).all(|w| w[0] <= w[1]), || {
        "CLI trace decreases".into()
    })?;
    Ok(format!(
        "{} runs, {checkpoints} checkpoints, plus {} CLI trace rows",
        outcomes.len(),
        values.len()
    ))
}

fn main() -> ExitCode {
    let dir = tempfile::tempdir().expect("temp dir");
    let mut outcomes = Vec::new();
    let mut failed = 0;
    let mut report = |n: usize, name: &str, r: Outcome| match r {
        Ok(detail) => println!("criterion {n} [{name}]: PASS ({detail})"),
        Err(why) => {
            failed += 1;
            println!("criterion {n} [{name}]: FAIL ({why})");
        }
    };
    report(
        1,
        "published certificate",
        published_certificate(dir.path()),
    );
    report(2, "indicator closed form", indicator_closed_form());
    report(3, "float/exact agreement", float_exact_agreement());
    report(4, "gradient correctness", gradient_correctness());
    report(5, "invariance suite", invariance_suite());
    report(6, "scaled search", scaled_search(&mut outcomes));
    report(7, "refinement", refinement_improves());
    report(8, "determinism", search_determinism(dir.path()));
    report(
        9,
        "monotone bookkeeping",
        monotone_bookkeeping(&outcomes, dir.path()),
    );
    if failed == 0 {
        println!("acceptance: all 9 criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} of 9 criteria failed");
        ExitCode::FAILURE
    }
}
