//! End-to-end acceptance run: one PASS/FAIL line per criterion, nonzero
//! exit status when any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;

use pnp_stability::eigen::{complex_inverse_norm, eigenvalues, Complex64};
use pnp_stability::generate::{self, rng_for};
use pnp_stability::matrix::{validate_stochastic, DenseMatrix};
use pnp_stability::operators::{
    build_inpainting, kernel_denoiser, make_family, ForwardOperator, OperatorKind, Which,
};
use pnp_stability::pnp::{pgd_pnp_run, random_problem, InverseProblem};
use pnp_stability::stability::{
    check_theorem_bound, interior_grid, slope_check, stability_threshold, suite_instance,
    Classification, Theorem, ThresholdParams,
};
use pnp_stability_cli::repro::{closed_samples, open_samples, ExampleId};
use rand::Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn e<T: std::fmt::Display>(x: T) -> String {
    x.to_string()
}

fn sorted_real(values: &[Complex64], tol: f64) -> Result<Vec<f64>, String> {
    let mut out = Vec::new();
    for z in values {
        ensure(z.im.abs() <= tol, || format!("complex eigenvalue {z}"))?;
        out.push(z.re);
    }
    out.sort_by(f64::total_cmp);
    Ok(out)
}

fn closed_form_eigenvalues() -> Outcome {
    let p = ExampleId::Remark13P.family().map_err(e)?;
    let r = ExampleId::Remark13R.family().map_err(e)?;
    let mut worst: f64 = 0.0;
    for t in [0.1, 0.5, 1.0, 3.0] {
        let got = sorted_real(
            &eigenvalues(&p.p_at(t).map_err(e)?).map_err(e)?.values,
            1e-12,
        )?;
        let want = [-(1.0 + t), 1.0 - t];
        let got_r = sorted_real(
            &eigenvalues(&r.r_at(t).map_err(e)?).map_err(e)?.values,
            1e-12,
        )?;
        let want_r = [-1.0, 1.0 / (t + 1.0)];
        for (a, b) in got.iter().zip(&want).chain(got_r.iter().zip(&want_r)) {
            worst = worst.max((a - b).abs());
        }
    }
    ensure(worst <= 1e-12, || format!("max eigenvalue error {worst:e}"))?;
    Ok(format!("max eigenvalue error {worst:e}"))
}

fn counterexample() -> Outcome {
    let f = ExampleId::Remark16.family().map_err(e)?;
    let d = (f.pi_b_e() + 1.0 / 30.0).abs();
    ensure(d <= 1e-12, || format!("piTBe off by {d:e}"))?;
    let mut min_rho = f64::INFINITY;
    for t in open_samples(0.0, 0.5, 50) {
        for which in Which::BOTH {
            let rho = f.rho(which, t).map_err(e)?;
            ensure(rho > 1.0, || format!("rho_{which}({t}) = {rho}"))?;
            min_rho = min_rho.min(rho);
        }
    }
    Ok(format!(
        "piTBe = {:.15}, min rho on samples {min_rho:.6}",
        f.pi_b_e()
    ))
}

fn blur_example() -> Outcome {
    let f = ExampleId::Remark17.family().map_err(e)?;
    ensure((f.rho_b() - 1.0).abs() <= 1e-10, || {
        format!("rho(B) = {}", f.rho_b())
    })?;
    let r = stability_threshold(&f, Which::P, ThresholdParams::new(3.0)).map_err(e)?;
    ensure(
        r.classification == Classification::StableThenUnstable,
        || format!("{:?}", r.classification),
    )?;
    let t = r.t_star.ok_or("no crossing")?;
    ensure((t - 2.0).abs() <= 1e-3, || format!("T_star = {t}"))?;
    let mut max_r: f64 = 0.0;
    for t in open_samples(2.0, 3.0, 49).into_iter().chain([3.0]) {
        let rho = f.rho(Which::R, t).map_err(e)?;
        ensure(rho < 1.0, || format!("rho_R({t}) = {rho}"))?;
        max_r = max_r.max(rho);
    }
    Ok(format!("T_star = {t:.7}, max rho_R on (2,3] = {max_r:.4}"))
}

fn conjecture_counter_case() -> Outcome {
    let f = ExampleId::Example113.family().map_err(e)?;
    let bound = f.step_bound();
    ensure((bound - 3.9936).abs() <= 1e-3, || {
        format!("2/rho(B) = {bound}")
    })?;
    let h = pnp_stability::operators::conjecture_hypotheses(&f);
    ensure(!h.be_le_rho_b_e, || "Be <= rho(B)e reported".into())?;
    let be2 = f.b_times_e()[1];
    ensure((be2 - 0.52).abs() <= 1e-12 && be2 > f.rho_b(), || {
        format!("(Be)_2 = {be2}")
    })?;
    for t in closed_samples(3.87, 3.99, 20) {
        let rho = f.rho(Which::P, t).map_err(e)?;
        ensure(rho > 1.0, || format!("rho_P({t}) = {rho}"))?;
    }
    Ok(format!("2/rho(B) = {bound:.6}, (Be)_2 = {be2}"))
}

fn admm_thresholds() -> Outcome {
    let mut detail = Vec::new();
    for (id, t_want, bound_want) in [
        (ExampleId::Example114B1, 4.777, 2.0 / 3.0),
        (ExampleId::Example114B2, 11.904, 4.5308),
    ] {
        let f = id.family().map_err(e)?;
        let r = stability_threshold(&f, Which::R, ThresholdParams::new(20.0)).map_err(e)?;
        let t = r.t_star.ok_or("no crossing")?;
        let bound = f.step_bound();
        ensure((t - t_want).abs() <= 0.01, || format!("{id}: T_star = {t}"))?;
        ensure((bound - bound_want).abs() <= 1e-3, || {
            format!("{id}: 2/rho(B) = {bound}")
        })?;
        ensure(t > bound, || format!("{id}: T_star {t} <= bound {bound}"))?;
        detail.push(format!("{id}: T_star = {t:.6}, 2/rho(B) = {bound:.6}"));
    }
    Ok(detail.join("; "))
}

const SUITE_TRIALS: u64 = 200;
const SUITE_SEED: u64 = 20_240_601;

fn suite(theorem: Theorem) -> Outcome {
    let mut worst: f64 = 0.0;
    let mut saw_negative_beta = false;
    let mut saw_periodic = false;
    for i in 0..SUITE_TRIALS {
        let n = 2 + (i as usize % 7);
        let f = suite_instance(theorem, n, SUITE_SEED + i).map_err(e)?;
        if theorem == Theorem::AlphaBeta && f.b()[(0, 1)] < 0.0 {
            saw_negative_beta = true;
        }
        saw_periodic |= !f.structure().primitive;
        for which in Which::BOTH {
            let s = check_theorem_bound(&f, which, theorem, 64).map_err(e)?;
            if let Some(c) = s.violation {
                return Err(format!(
                    "seed {} n {n}: rho_{which}({}) = {}",
                    SUITE_SEED + i,
                    c.t,
                    c.rho
                ));
            }
            worst = worst.max(s.max_rho);
        }
    }
    if theorem == Theorem::AlphaBeta {
        ensure(saw_negative_beta, || {
            "no beta < 0 instance generated".into()
        })?;
    }
    let extra = if theorem == Theorem::Inpainting {
        format!(", periodic W present: {saw_periodic}")
    } else {
        String::new()
    };
    Ok(format!(
        "{SUITE_TRIALS} instances, max rho {worst:.10}{extra}"
    ))
}

fn slope() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut used = 0;
    for i in 0..SUITE_TRIALS {
        let n = 2 + (i as usize % 7);
        let f = suite_instance(Theorem::DblStochastic, n, SUITE_SEED + i).map_err(e)?;
        if !f.structure().primitive {
            continue;
        }
        used += 1;
        for which in Which::BOTH {
            let s = slope_check(&f, which, 1e-5).map_err(e)?;
            ensure(s.abs_error <= 1e-3, || {
                format!("seed {}: {s:?}", SUITE_SEED + i)
            })?;
            worst = worst.max(s.abs_error);
        }
    }
    ensure(used > 0, || "no primitive instances".into())?;
    Ok(format!(
        "{used} primitive instances, max |fd - predicted| = {worst:e}"
    ))
}

fn necessity() -> Outcome {
    let mut min_rho = f64::INFINITY;
    for seed in 0..50u64 {
        let mut rng = rng_for(9_000 + seed);
        let n = rng.gen_range(2..=8);
        let w = generate::positive_stochastic(n, &mut rng);
        let b = generate::psd_with_null_e(n, &mut rng).map_err(e)?;
        let f = make_family(w, b).map_err(e)?;
        let bound = if f.rho_b() > 0.0 {
            f.step_bound()
        } else {
            10.0
        };
        let mut ts = interior_grid(bound, 32);
        ts.extend(interior_grid(3.0 * bound, 16));
        for t in ts {
            for which in Which::BOTH {
                let rho = f.rho(which, t).map_err(e)?;
                ensure(rho >= 1.0 - 1e-10, || {
                    format!("seed {seed}: rho_{which}({t}) = {rho}")
                })?;
                min_rho = min_rho.min(rho);
            }
        }
    }
    Ok(format!("50 families with Be = 0, min rho {min_rho:.15}"))
}

fn inverse_bound() -> Outcome {
    let mut rng = rng_for(33);
    let mut worst: f64 = 0.0;
    for k in 0..100 {
        let n = rng.gen_range(1..=6);
        let b = generate::psd_matrix(n, &mut rng).map_err(e)?;
        let t = [0.1, 1.0, 10.0][k % 3];
        let modulus = if k % 2 == 0 {
            1.0
        } else {
            rng.gen_range(1.0..3.0)
        };
        let lambda = Complex64::from_polar(modulus, rng.gen_range(0.0..std::f64::consts::TAU));
        let id = DenseMatrix::identity(n);
        // C = λI + t(λ − 1)B, split into real and imaginary parts
        let re = id
            .scaled(lambda.re)
            .unwrap()
            .add(&b.scaled(t * (lambda.re - 1.0)).unwrap())
            .unwrap();
        let im = id
            .scaled(lambda.im)
            .unwrap()
            .add(&b.scaled(t * lambda.im).unwrap())
            .unwrap();
        let norm = complex_inverse_norm(&re, &im).map_err(e)?;
        ensure(norm <= 1.0 + 1e-10, || {
            format!("sample {k}: ||C^-1|| = {norm}")
        })?;
        worst = worst.max(norm);
    }
    Ok(format!("100 samples, max ||C^-1||_2 = {worst:.12}"))
}

/// Inpainting with one or two observed pixels and a narrow kernel: slow,
/// so the asymptotic rate is visible.
fn sparse_inpainting(n: usize, t: f64, seed: u64) -> Result<InverseProblem, String> {
    let mut rng = rng_for(seed);
    let signal = generate::uniform_vector(n, 0.0, 1.0, &mut rng);
    let w = kernel_denoiser(
        &signal,
        rng.gen_range(0.1..0.3),
        Some(rng.gen_range(1.0..3.0)),
    )
    .map_err(e)?;
    let mut mask = vec![0u8; n];
    for _ in 0..rng.gen_range(1..=2) {
        mask[rng.gen_range(0..n)] = 1;
    }
    let a = build_inpainting(&mask).map_err(e)?;
    let b = a.matrix().matvec(&signal).map_err(e)?;
    InverseProblem::new(a, b, w, t).map_err(e)
}

fn pnp_convergence() -> Outcome {
    let mut runs = 0;
    let mut rated = 0;
    let mut worst_rate: f64 = 0.0;
    for n in [4, 8, 12, 16] {
        for seed in 0..10u64 {
            for t in [0.5, 1.0, 1.5, 1.9] {
                let p = if seed < 5 {
                    random_problem(OperatorKind::Inpainting, n, t, 100 * n as u64 + seed)
                        .map_err(e)?
                        .0
                } else {
                    sparse_inpainting(n, t, 100 * n as u64 + seed)?
                };
                let x0 = vec![0.0; n];
                let trace = pgd_pnp_run(&p, &x0, 500_000, 1e-12).map_err(e)?;
                ensure(trace.converged, || {
                    format!("n {n} seed {seed} t {t}: no convergence")
                })?;
                runs += 1;
                if trace.iterations >= 300 {
                    let rho =
                        pnp_stability::eigen::spectral_radius(&p.iteration_matrix().map_err(e)?)
                            .map_err(e)?
                            .radius;
                    let rate = trace.estimated_rate.ok_or("no rate estimate")?;
                    let err = (rate - rho).abs();
                    ensure(err <= 0.02, || {
                        format!("n {n} seed {seed} t {t}: rate {rate} rho {rho}")
                    })?;
                    worst_rate = worst_rate.max(err);
                    rated += 1;
                }
            }
        }
    }

    ensure(rated >= 20, || {
        format!("only {rated} runs long enough to estimate a rate")
    })?;

    let w = validate_stochastic(
        &DenseMatrix::from_rows(&[[0.7, 0.3], [0.6, 0.4]]).unwrap(),
        1e-12,
    )
    .map_err(e)?;
    let l11 = 3.4f64.sqrt();
    let l21 = -6.5 / l11;
    let l22 = (12.6 - l21 * l21).sqrt();
    let a = DenseMatrix::from_rows(&[[l11, l21], [0.0, l22]]).unwrap();
    let p = InverseProblem::new(
        ForwardOperator::custom(a).map_err(e)?,
        vec![1.0, 1.0],
        w,
        0.25,
    )
    .map_err(e)?;
    let trace = pgd_pnp_run(&p, &[0.3, -0.2], 500, 1e-10).map_err(e)?;
    ensure(!trace.converged, || "counterexample converged".into())?;
    Ok(format!(
        "{runs} runs converged, {rated} rate estimates within {worst_rate:.2e}, counterexample diverges"
    ))
}

fn fuzzer() -> Outcome {
    let dir = tempfile::tempdir().map_err(e)?;
    let run = |workers: u32| -> Result<(String, i32), String> {
        let out = dir.path().join(format!("fuzz_{workers}.jsonl"));
        let status = Command::new(env!("CARGO_BIN_EXE_pnpstab"))
            .args([
                "fuzz",
                "--trials",
                "500",
                "--generator",
                "imaging",
                "--seed",
                "7",
            ])
            .args(["--workers", &workers.to_string()])
            .arg("--out")
            .arg(&out)
            .output()
            .map_err(e)?;
        let text = std::fs::read_to_string(&out).map_err(e)?;
        Ok((text, status.status.code().unwrap_or(-1)))
    };
    let (one, code1) = run(1)?;
    let (eight, code8) = run(8)?;
    ensure(one == eight, || {
        "output differs between 1 and 8 workers".into()
    })?;
    let summary: serde_json::Value =
        serde_json::from_str(one.lines().last().ok_or("empty output")?).map_err(e)?;
    let s = &summary["summary"];
    let violations = s["violation"].as_u64().ok_or("no violation count")?;
    ensure(violations == 0 && code1 == 0 && code8 == 0, || {
        format!(
            "{violations} violations, certificates {}",
            s["certificates"]
        )
    })?;
    Ok(format!(
        "identical output, pass {} hypotheses_unmet {} violation 0, max rho {}",
        s["pass"], s["hypotheses_unmet"], s["max_rho"]
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 13] = [
        (
            "closed-form eigenvalues of P(t) and R(t)",
            closed_form_eigenvalues,
        ),
        ("negative piTBe gives instability near zero", counterexample),
        ("blur example threshold 2 and stable R beyond", blur_example),
        (
            "unmet Be bound admits instability below 2/rho(B)",
            conjecture_counter_case,
        ),
        ("R thresholds exceed 2/rho(B)", admm_thresholds),
        ("doubly stochastic suite", || suite(Theorem::DblStochastic)),
        ("diagonal B suite", || suite(Theorem::Inpainting)),
        ("alpha I + beta E suite", || suite(Theorem::AlphaBeta)),
        ("slope of rho at zero", slope),
        ("Be = 0 never stable", necessity),
        ("inverse norm bound for |lambda| >= 1", inverse_bound),
        ("PnP convergence and rates", pnp_convergence),
        ("fuzzer determinism and health", fuzzer),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome =
            catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".to_string()));
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail}", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
