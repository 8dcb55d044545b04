//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//!
//! Run with `cargo test -p mfode-cli --test acceptance`.

use mfode_core::encoding::{eval_f_direct, eval_f_tensor, AugmentedSystem};
use mfode_core::experiments::{
    catalog, comparator_trajectory, overlap_fraction, scaling_vs_dt, scaling_vs_n, Comparator, ExperimentConfig,
    RowStatus,
};
use mfode_core::fit::loglog_fit;
use mfode_core::history::{build_rhs, forward_solve, relative_residual, BlockSystem, FrozenSteps, LinearStep};
use mfode_core::linalg::{normalized, CMatrix, C64};
use mfode_core::meanfield::{evolve_exact, product_state, reduce_site, trace_distance, trotter_step, DensityMatrix};
use mfode_core::reference::euler_forward;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn random_unit(rng: &mut ChaCha8Rng, dim: usize) -> Vec<C64> {
    let v: Vec<C64> = (0..dim)
        .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    normalized(&v)
}

fn dist(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
}

fn encoding_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for seed in 0..100u64 {
        let d = 1 + (seed % 3) as usize;
        let m = 1 + ((seed / 3) % 2) as usize;
        let aug = catalog::random_system(d, m, 6, seed);
        for _ in 0..10 {
            let x = random_unit(&mut rng, aug.dim);
            let a = eval_f_tensor(&aug, &x).unwrap();
            let b = eval_f_direct(&aug, &x).unwrap();
            worst = worst.max((a - b).iter().map(|z| z.norm()).fold(0.0, f64::max));
        }
    }
    outcome(worst < 1e-12, format!("max |tensor - direct| = {worst:.3e} (< 1e-12)"))
}

/// `-f(x) x` summed monomial by monomial, without the crate's evaluator.
fn hand_euler(aug: &AugmentedSystem) -> Vec<Vec<C64>> {
    let mut x = aug.initial_state.clone();
    let mut out = vec![x.clone()];
    for k in 0..aug.steps {
        let mut next = x.clone();
        for mono in &aug.monomials {
            let mut w = mono.coeff;
            for &p in &mono.conj_idx {
                w *= x[p].conj();
            }
            for &q in &mono.unconj_idx {
                w *= x[q];
            }
            next[mono.row] -= w * x[mono.col] * aug.dt;
        }
        if let Some(b) = aug.driving.get(k) {
            for (n, bi) in next.iter_mut().zip(b) {
                *n += bi * aug.dt;
            }
        }
        out.push(next.clone());
        x = next;
    }
    out
}

fn history_solver() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut worst_res, mut worst_dev, mut runs): (f64, f64, usize) = (0.0, 0.0, 0);
    for seed in 0..24u64 {
        let (d, m) = if seed % 2 == 0 { (rng.gen_range(1..=15), 1) } else { (rng.gen_range(1..=3), 2) };
        let mut aug = catalog::random_system(d, m, 2 * d, 100 + seed);
        for mono in &mut aug.monomials {
            mono.coeff *= 0.5;
        }
        aug.dt = 0.005;
        aug.steps = rng.gen_range(1..=200);
        aug.driving = (0..aug.steps)
            .map(|_| {
                let mut b: Vec<C64> = (0..aug.dim).map(|_| C64::new(rng.gen_range(-0.1..0.1), 0.0)).collect();
                b[0] = C64::new(0.0, 0.0);
                b
            })
            .collect();
        let euler = euler_forward(&aug, false).unwrap();
        if euler.unstable {
            continue;
        }
        runs += 1;
        let sys = BlockSystem::new(FrozenSteps::along(&aug, &euler), aug.dt, build_rhs(&aug, 1, usize::MAX).unwrap())
            .unwrap();
        let h = forward_solve(&sys).unwrap();
        worst_res = worst_res.max(relative_residual(&sys, &h).unwrap());
        for (a, b) in h.states.iter().zip(hand_euler(&aug)) {
            let scale = b.iter().map(|z| z.norm()).fold(1.0, f64::max);
            worst_dev = worst_dev.max(dist(a, &b) / scale);
        }
    }
    outcome(
        runs >= 20 && worst_res < 1e-10 && worst_dev < 1e-12,
        format!("{runs} systems: residual {worst_res:.3e} (< 1e-10), block deviation {worst_dev:.3e} (< 1e-12)"),
    )
}

/// `x' = B x`, `B = [[1, 1/2], [0, -1/2]]`, in augmented coordinates.
fn unstable_closed_form(x0: &[C64], t: f64) -> Vec<C64> {
    let x2 = x0[2] * (-0.5 * t).exp();
    let x1 = (x0[1] + x0[2] / 3.0 * (1.0 - (-1.5 * t).exp())) * t.exp();
    vec![x0[0], x1, x2]
}

fn linear_closed_form() -> Outcome {
    let mut worst_power: f64 = 0.0;
    let (mut dts, mut devs) = (vec![], vec![]);
    for dt in [0.04, 0.02, 0.01, 0.005] {
        let mut aug = catalog::unstable_linear();
        aug.dt = dt;
        aug.steps = (1.0 / dt).round() as usize;
        let step = LinearStep::from_linear(&aug);
        let sys = BlockSystem::new(step, dt, build_rhs(&aug, 1, usize::MAX).unwrap()).unwrap();
        let h = forward_solve(&sys).unwrap();
        let s = CMatrix::identity(aug.dim, aug.dim) - aug.f(&aug.initial_state) * C64::new(dt, 0.0);
        let x0 = CMatrix::from_column_slice(aug.dim, 1, &aug.initial_state);
        let mut power = CMatrix::identity(aug.dim, aug.dim);
        for (k, block) in h.states.iter().enumerate() {
            let expect = &power * &x0;
            worst_power = worst_power.max(dist(block, expect.as_slice()) / expect.norm().max(1.0));
            if k < aug.steps {
                power = &s * power;
            }
        }
        dts.push(dt);
        devs.push(dist(h.states.last().unwrap(), &unstable_closed_form(&aug.initial_state, 1.0)));
    }
    let p = loglog_fit(&dts, &devs).map(|f| f.slope).unwrap_or(f64::NAN);
    outcome(
        worst_power < 1e-12 && (0.8..=1.2).contains(&p),
        format!("(I - dt A)^k x0 deviation {worst_power:.3e} (< 1e-12), order vs exp: p = {p:.4} (in [0.8, 1.2])"),
    )
}

fn mean_field_suppression() -> Outcome {
    let mut cfg = ExperimentConfig::new("quadratic", catalog::quadratic_test());
    cfg.copies = vec![4, 6, 8, 10, 12];
    cfg.cap = 1 << 12;
    cfg.comparator = Comparator::RoleComplete;
    let report = scaling_vs_n(&cfg).unwrap();
    let fit = report.fit("trace_distance", Some(Comparator::RoleComplete)).unwrap();
    let distances: Vec<String> = report.rows.iter().map(|r| format!("{:.3e}", r.trace_distance)).collect();

    // same grid with each first-order step replaced by exp(-dt L)
    let aug = catalog::quadratic_test();
    let reference = comparator_trajectory(&aug, Comparator::RoleComplete).unwrap();
    let rho_ref = DensityMatrix::pure(reference.last());
    let x0 = normalized(&aug.initial_state);
    let (mut ns, mut exact) = (vec![], vec![]);
    for n in [4usize, 6, 8, 10] {
        let mut psi = product_state(&x0, n, 1 << 12).unwrap();
        for _ in 0..aug.steps {
            psi = evolve_exact(&aug, &psi, aug.dt).unwrap().normalized();
        }
        ns.push(n as f64);
        exact.push(trace_distance(&reduce_site(&psi, 0).unwrap(), &rho_ref).unwrap());
    }
    let exact_slope = loglog_fit(&ns, &exact).map(|f| f.slope).unwrap_or(f64::NAN);
    outcome(
        (-1.4..=-0.6).contains(&fit.slope),
        format!(
            "Trotter slope = {:.4} (in [-1.4, -0.6]), distances [{}]; exp(-dt L) steps give slope {exact_slope:.4}",
            fit.slope,
            distances.join(", ")
        ),
    )
}

fn hermitian_conservation() -> Outcome {
    let aug = catalog::gp2();
    let x0 = normalized(&aug.initial_state);
    let run = |n: usize| {
        let psi = evolve_exact(&aug, &product_state(&x0, n, 1 << 12).unwrap(), 1.0).unwrap();
        (0..n).map(|s| reduce_site(&psi, s).unwrap()).collect::<Vec<_>>()
    };
    // the 1/n entanglement term, calibrated at n = 3
    let c = 3.0 * run(3).iter().map(|r| 1.0 - r.purity()).fold(0.0, f64::max);
    let sites = run(6);
    let drift = sites.iter().map(|r| (r.raw_trace - 1.0).abs()).fold(0.0, f64::max);
    let purity = sites.iter().map(|r| r.purity()).fold(1.0, f64::min);
    let floor = 1.0 - 1e-6 - c / 6.0;
    outcome(
        drift < 1e-10 && purity >= floor,
        format!("trace drift {drift:.3e} (< 1e-10), min purity {purity:.6} (>= {floor:.6} = 1 - 1e-6 - {c:.4}/n)"),
    )
}

fn trotter_order() -> Outcome {
    let aug = catalog::quadratic_test();
    let psi = product_state(&normalized(&aug.initial_state), 3, 1 << 12).unwrap();
    let dts = [1e-1, 1e-2, 1e-3];
    let errs: Vec<f64> = dts
        .iter()
        .map(|&dt| {
            let a = evolve_exact(&aug, &psi, dt).unwrap();
            let b = trotter_step(&aug, &psi, dt).unwrap();
            dist(a.amplitudes(), b.amplitudes())
        })
        .collect();
    let p = loglog_fit(&dts, &errs).map(|f| f.slope).unwrap_or(f64::NAN);
    outcome((1.8..=2.2).contains(&p), format!("exponent {p:.4} (in [1.8, 2.2])"))
}

fn stability_discriminator() -> Outcome {
    let mut cfg = ExperimentConfig::new("unstable_linear", catalog::unstable_linear());
    cfg.dts = vec![0.0005, 0.005, 0.05, 0.2, 0.5];
    cfg.horizon = Some(10.0);
    let report = scaling_vs_dt(&cfg).unwrap();
    let mut points: Vec<(f64, f64)> = report
        .rows
        .iter()
        .filter(|r| r.status == RowStatus::Ok)
        .map(|r| (r.margin, r.final_rel_error))
        .collect();
    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    let high: Vec<_> = points.iter().filter(|p| p.0 > 1.0).collect();
    let low: Vec<_> = points.iter().filter(|p| p.0 < 0.01).collect();
    let ok = points.len() == 5
        && !high.is_empty()
        && !low.is_empty()
        && high.iter().all(|p| p.1 > 0.1)
        && low.iter().all(|p| p.1 < 0.01)
        && points.windows(2).all(|w| w[1].1 >= w[0].1);
    let shown: Vec<String> = points.iter().map(|(m, e)| format!("{m:.3e}->{e:.3e}")).collect();
    outcome(ok, format!("margin->error [{}]", shown.join(", ")))
}

fn overlap_plug_in() -> Outcome {
    let exact = overlap_fraction(10, 2).unwrap() == (0.64, 0.60);
    let mut worst: f64 = 0.0;
    for m in 1..=4usize {
        for n in [10usize, 20, 50, 100, 1000] {
            let (a, b) = overlap_fraction(n, m).unwrap();
            worst = worst.max((a - b).abs() / ((m.pow(4)) as f64 / (n * n) as f64));
        }
    }
    outcome(
        exact && worst <= 1.0,
        format!("(10, 2) exact: {exact}; max |exact - approx| / (m^4/n^2) = {worst:.4} (<= 1) over 20 points"),
    )
}

fn run_cli(out: &Path, threads: usize) -> Vec<u8> {
    let status = Command::new(env!("CARGO_BIN_EXE_mfode"))
        .args(["experiment", "scaling_vs_n", "--comparator", "both", "--seed", "7", "--threads"])
        .arg(threads.to_string())
        .arg("--out")
        .arg(out)
        .output()
        .expect("run mfode");
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    std::fs::read(out.join("report.json")).unwrap()
}

fn reproducibility() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let runs: Vec<Vec<u8>> = [(1, "a"), (1, "b"), (4, "c"), (4, "d")]
        .iter()
        .map(|(t, name)| run_cli(&dir.path().join(name), *t))
        .collect();
    let same = runs.windows(2).all(|w| w[0] == w[1]);
    outcome(same, format!("4 runs (threads 1, 1, 4, 4), {} bytes each, identical: {same}", runs[0].len()))
}

type Criterion = (&'static str, fn() -> Outcome, Duration);

fn main() {
    let criteria: [Criterion; 9] = [
        ("1 encoding oracle equivalence", encoding_equivalence, Duration::from_secs(5)),
        ("2 history solver correctness", history_solver, Duration::from_secs(5)),
        ("3 linear closed form", linear_closed_form, Duration::from_secs(10)),
        ("4 mean-field 1/n suppression", mean_field_suppression, Duration::from_secs(300)),
        ("5 hermitian norm conservation", hermitian_conservation, Duration::from_secs(30)),
        ("6 trotter order", trotter_order, Duration::from_secs(10)),
        ("7 stability discriminator", stability_discriminator, Duration::from_secs(10)),
        ("8 overlap formula plug-in", overlap_plug_in, Duration::from_secs(1)),
        ("9 reproducibility", reproducibility, Duration::from_secs(120)),
    ];
    let mut failed = 0;
    for (name, check, budget) in criteria {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let pass = result.pass && elapsed <= budget;
        if !pass {
            failed += 1;
        }
        println!(
            "[{}] {name}: {} ({:.2}s, budget {}s)",
            if pass { "PASS" } else { "FAIL" },
            result.detail,
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
    }
    println!("acceptance: {} passed, {failed} failed", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
