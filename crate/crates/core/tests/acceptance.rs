//! Acceptance criteria AC1–AC10. Prints one `[PASS]`/`[FAIL]` line per
//! criterion and exits nonzero if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use maskgrid::appendix::{cascade_scan, Branch, VANISH_TOL};
use maskgrid::families::{
    closed_form_3d, closed_form_4d_a, coupled_form_4d_b, invariants_3d, measure_anchor_3d,
    omega_3d, omega_4d, qubit_anchor, qubit_circle_family, Zeta4,
};
use maskgrid::figures::{fig2a, fig2b};
use maskgrid::geometry::{
    affine_rank, entries_from_constraints, masking_constraints, xi_embed, RANK_TOL,
};
use maskgrid::linalg::{complex_gaussian, max_abs_diff, substream};
use maskgrid::masker::{
    builtin_example_3d, builtin_example_4d, product_form_masker, qubit_circle_masker, Masker,
};
use maskgrid::measure::{control_band, epsilon_sweep, residual_fraction, DEFAULT_DELTA};
use maskgrid::protocol::{decode_fidelities, single_share_leakage, SecretFamily};
use maskgrid::reduce::{f_matrix, g_matrix, partial_trace_a, partial_trace_b, Side};
use maskgrid::search::{masking_objective, objective_gradient, optimize_masker, SearchConfig};
use maskgrid::statespace::{angles_to_amplitudes, ParamBox, PureState};
use num_complex::Complex64;
use rand::Rng;

type Outcome = (bool, String);

fn random_state(n: usize, seed: u64, index: u64) -> PureState {
    let g = complex_gaussian(n, 1, &mut substream(seed, index));
    PureState::normalized(g.as_slice().to_vec()).unwrap()
}

/// `(ε_0 / 2^i)`, eight points from 0.128 down to 0.001.
fn eps_grid() -> Vec<f64> {
    (0..8).map(|i| 0.128 / f64::powi(2.0, i)).collect()
}

fn ac1() -> Outcome {
    let start = Instant::now();
    let anchor = measure_anchor_3d();
    let (a, b) = invariants_3d(&anchor).unwrap();
    let want = closed_form_3d(a, b);
    let m = builtin_example_3d();
    let mut dev = 0.0_f64;
    for p in omega_3d(&anchor, 200, 1).unwrap() {
        let img = m.apply(&p).unwrap();
        dev = dev.max(max_abs_diff(partial_trace_b(&img).matrix(), &want));
        dev = dev.max(max_abs_diff(partial_trace_a(&img).matrix(), &want));
    }
    let elapsed = start.elapsed();
    (
        dev < 1e-10 && elapsed < Duration::from_secs(1),
        format!(
            "3-dim example, 200 states: max deviation {dev:.2e} (tol 1e-10), {:.3} s (limit 1 s)",
            elapsed.as_secs_f64()
        ),
    )
}

fn ac2() -> Outcome {
    let anchor = Zeta4::figure_anchor();
    let (c, d) = anchor.invariants();
    let (want_a, want_b) = (closed_form_4d_a(c, d), coupled_form_4d_b(c, d));
    let m = builtin_example_4d();
    let (mut dev_a, mut dev_b) = (0.0_f64, 0.0_f64);
    for p in omega_4d(&anchor, 200, 2).unwrap() {
        let img = m.apply(&p).unwrap();
        dev_a = dev_a.max(max_abs_diff(partial_trace_b(&img).matrix(), &want_a));
        dev_b = dev_b.max(max_abs_diff(partial_trace_a(&img).matrix(), &want_b));
    }
    (
        dev_a < 1e-10 && dev_b < 1e-10,
        format!(
            "4-dim example, 200 states: rho_A deviation {dev_a:.2e}, rho_B deviation from \
             I/4 + (c/4)(|1><2|+h.c.) + (d/4)(|3><4|+h.c.) {dev_b:.2e} (tol 1e-10, c = {c:.4})"
        ),
    )
}

fn ac3() -> Outcome {
    let mut rng = substream(3, 0);
    let mut worst = 0.0_f64;
    for i in 0..10_000u64 {
        let da = rng.random_range(2..=6);
        let db = rng.random_range(2..=6);
        let m = Masker::haar_random(da, db, &mut rng);
        let p = random_state(da, 30, i);
        let img = m.apply(&p).unwrap();
        worst = worst.max(max_abs_diff(
            &f_matrix(&m, &p).unwrap(),
            partial_trace_b(&img).matrix(),
        ));
        worst = worst.max(max_abs_diff(
            &g_matrix(&m, &p).unwrap(),
            partial_trace_a(&img).matrix(),
        ));
    }
    (
        worst < 1e-12,
        format!("Gram-tensor entries vs partial trace, 10^4 pairs, dims 2-6: max difference {worst:.2e} (tol 1e-12)"),
    )
}

fn codimension(states: &[PureState]) -> usize {
    let n = states[0].dim();
    let xis: Vec<_> = states.iter().map(xi_embed).collect();
    (n * n - 1) - affine_rank(&xis, RANK_TOL).unwrap()
}

fn ac4() -> Outcome {
    let mut norm_dev = 0.0_f64;
    for i in 0..10_000u64 {
        let n = 2 + (i % 5) as usize;
        norm_dev = norm_dev.max((xi_embed(&random_state(n, 40, i)).norm() - 1.0).abs());
    }

    let mut rng = substream(41, 0);
    let mut lin_dev = 0.0_f64;
    for i in 0..1000u64 {
        let da = rng.random_range(2..=6);
        let db = rng.random_range(2..=6);
        let m = Masker::haar_random(da, db, &mut rng);
        let cons = masking_constraints(&m, None).unwrap();
        let p = random_state(da, 42, i);
        let xi = xi_embed(&p);
        let img = m.apply(&p).unwrap();
        let fa = entries_from_constraints(&cons, &xi, Side::A, da);
        let fb = entries_from_constraints(&cons, &xi, Side::B, db);
        lin_dev = lin_dev.max(max_abs_diff(&fa, partial_trace_b(&img).matrix()));
        lin_dev = lin_dev.max(max_abs_diff(&fb, partial_trace_a(&img).matrix()));
    }

    let codim_qubit = codimension(&qubit_circle_family(0.0, &qubit_anchor(), 200, 43).unwrap());
    let codim_4d = codimension(&omega_4d(&Zeta4::figure_anchor(), 200, 44).unwrap());
    let codim_3d = codimension(&omega_3d(&measure_anchor_3d(), 200, 45).unwrap());

    let mut bloch_dev = 0.0_f64;
    for i in 0..1000u64 {
        let c = xi_embed(&random_state(2, 46, i)).coords().to_vec();
        let lhs = 4.0 * (c[0] - 0.5).powi(2) + 2.0 * c[2] * c[2] + 2.0 * c[3] * c[3];
        bloch_dev = bloch_dev.max((lhs - 1.0).abs());
    }

    let pass = norm_dev < 1e-12
        && lin_dev < 1e-10
        && codim_qubit >= 1
        && codim_4d >= 1
        && codim_3d >= 2
        && bloch_dev < 1e-12;
    (
        pass,
        format!(
            "embedding: |xi|-1 {norm_dev:.2e} (tol 1e-12); constraint rows vs entries {lin_dev:.2e} (tol 1e-10); \
             codimension qubit circle {codim_qubit}, 4-dim family {codim_4d} (need >= 1), 3-dim family {codim_3d} \
             (need >= 2); qubit sphere identity {bloch_dev:.2e} (tol 1e-12)"
        ),
    )
}

fn ac5() -> Outcome {
    let start = Instant::now();
    let anchor = angles_to_amplitudes(&measure_anchor_3d());
    let sweep = epsilon_sweep(
        &builtin_example_3d(),
        &anchor,
        &eps_grid(),
        10_000_000,
        5,
        DEFAULT_DELTA,
    )
    .unwrap();
    let last = sweep.estimates.last().unwrap();
    let slope = sweep.slope().unwrap_or(f64::NAN);

    let qanchor = angles_to_amplitudes(&qubit_anchor());
    let qsweep = epsilon_sweep(
        &qubit_circle_masker(0.0),
        &qanchor,
        &eps_grid(),
        1_000_000,
        6,
        DEFAULT_DELTA,
    )
    .unwrap();
    let qslope = qsweep.slope().unwrap_or(f64::NAN);

    let band = control_band(&measure_anchor_3d(), 0.01, 1_000_000, 7, DEFAULT_DELTA).unwrap();
    let elapsed = start.elapsed();

    let pass = last.fraction <= 1e-4
        && slope >= 1.5
        && qslope >= 0.8
        && band.z_score.abs() <= 3.0
        && elapsed <= Duration::from_secs(120);
    (
        pass,
        format!(
            "residual measure: 3-dim fraction at eps=1e-3 {:.2e} (<= 1e-4), slope {slope:.3} (>= 1.5); \
             qubit slope {qslope:.3} (>= 0.8); control band z {:.2} (|z| <= 3); {:.1} s (limit 120 s)",
            last.fraction,
            band.z_score,
            elapsed.as_secs_f64()
        ),
    )
}

fn ac6() -> Outcome {
    let mut rng = substream(60, 0);
    let boxed = ParamBox::new(3, DEFAULT_DELTA).unwrap();
    let mut worst = 0.0_f64;
    for i in 0..50u64 {
        let m = Masker::haar_random(3, 3, &mut rng);
        let anchor = angles_to_amplitudes(&boxed.sample_at(61, i));
        let est = residual_fraction(&m, &anchor, 0.01, 100_000, 62 + i, DEFAULT_DELTA).unwrap();
        worst = worst.max(est.fraction);
    }
    (
        worst < 0.05,
        format!("50 Haar isometries (n = 3), eps = 0.01: largest fraction {worst:.2e} (< 0.05)"),
    )
}

fn ac7() -> Outcome {
    let r3 = cascade_scan(&builtin_example_3d(), VANISH_TOL).unwrap();
    let ok3 = r3.branch == Branch::SolvablePhaseShifted { s: 1, t: 2 };

    let mut c = vec![Complex64::new(0.0, 0.0); 3];
    c[0] = Complex64::new(1.0, 0.0);
    let id = maskgrid::linalg::CMatrix::identity(3, 3);
    let rp = cascade_scan(&product_form_masker(&c, &id).unwrap(), VANISH_TOL).unwrap();
    let okp = rp.branch == Branch::ProductFormContradiction;

    let mut rng = substream(70, 0);
    let mut errors = 0;
    for _ in 0..500 {
        let da = rng.random_range(2..=5);
        let db = rng.random_range(1..=5);
        if cascade_scan(&Masker::haar_random(da, db, &mut rng), VANISH_TOL).is_err() {
            errors += 1;
        }
    }
    (
        ok3 && okp && errors == 0,
        format!(
            "cascade: 3-dim example {} pair {:?}; |k> -> |1>|k> {}; 500 fuzzed isometries (n = 2..5), {errors} errors",
            r3.branch.name(),
            match r3.branch {
                Branch::SolvablePhaseShifted { s, t } | Branch::SolvablePhase { s, t } => Some((s + 1, t + 1)),
                _ => None,
            },
            rp.branch.name()
        ),
    )
}

/// Relative error of the analytic gradient against central differences.
fn fd_error(m: &Masker, states: &[PureState]) -> f64 {
    let grad = objective_gradient(m, states).unwrap();
    let h = 1e-6;
    let base: Vec<Vec<Complex64>> = (0..m.da()).map(|k| m.column(k).to_vec()).collect();
    let len = m.da() * m.db();
    let (mut diff, mut norm) = (0.0, 0.0);
    for k in 0..m.da() {
        for r in 0..len {
            for (dir, real) in [
                (Complex64::new(h, 0.0), true),
                (Complex64::new(0.0, h), false),
            ] {
                let eval = |sign: f64| {
                    let mut cols = base.clone();
                    cols[k][r] += dir * sign;
                    masking_objective(
                        &Masker::new_unchecked(m.da(), m.db(), cols).unwrap(),
                        states,
                    )
                    .unwrap()
                };
                let fd = (eval(1.0) - eval(-1.0)) / (2.0 * h);
                let g = grad[k * len + r];
                let an = if real { 2.0 * g.re } else { 2.0 * g.im };
                diff += (fd - an) * (fd - an);
                norm += an * an;
            }
        }
    }
    (diff / norm).sqrt()
}

fn ac8() -> Outcome {
    let mut rng = substream(80, 0);
    let mut fd = 0.0_f64;
    for (i, (da, db)) in [(2, 2), (2, 3), (3, 3), (3, 4), (4, 4)]
        .into_iter()
        .enumerate()
    {
        let m = Masker::haar_random(da, db, &mut rng);
        let states: Vec<_> = (0..6).map(|j| random_state(da, 81 + i as u64, j)).collect();
        fd = fd.max(fd_error(&m, &states));
    }

    let mut recovered = 0;
    for seed in 0..10u64 {
        let states = qubit_circle_family(0.0, &qubit_anchor(), 20, 100 + seed).unwrap();
        let cfg = SearchConfig {
            seed,
            max_iter: 2000,
            ..SearchConfig::default()
        };
        if optimize_masker(&states, (2, 2), &cfg).unwrap().objective < 1e-8 {
            recovered += 1;
        }
    }

    let mut generic_min = f64::INFINITY;
    for seed in 0..10u64 {
        let states: Vec<_> = (0..20).map(|j| random_state(2, 200 + seed, j)).collect();
        let cfg = SearchConfig {
            seed,
            ..SearchConfig::default()
        };
        generic_min = generic_min.min(optimize_masker(&states, (2, 2), &cfg).unwrap().objective);
    }
    (
        fd < 1e-5 && recovered >= 8 && generic_min > 1e-3,
        format!(
            "search: gradient relative error {fd:.2e} (< 1e-5); circle recovered for {recovered}/10 seeds (>= 8); \
             generic 20-state sets min J {generic_min:.3e} (> 1e-3)"
        ),
    )
}

fn ac9() -> Outcome {
    let anchor = measure_anchor_3d();
    let book = omega_3d(&anchor, 16, 90).unwrap();
    let fam = SecretFamily::new(builtin_example_3d(), book, angles_to_amplitudes(&anchor)).unwrap();
    let leak = single_share_leakage(&fam).unwrap();
    let min_fid = decode_fidelities(&fam)
        .unwrap()
        .into_iter()
        .fold(1.0, f64::min);
    (
        leak.side_a < 1e-12 && leak.side_b < 1e-12 && min_fid >= 1.0 - 1e-10,
        format!(
            "sharing, 16 codewords: leakage A {:.2e}, B {:.2e} (< 1e-12); min decode fidelity 1 - {:.2e} (>= 1 - 1e-10)",
            leak.side_a,
            leak.side_b,
            1.0 - min_fid
        ),
    )
}

fn ac10() -> Outcome {
    let anchor = Zeta4::figure_anchor();
    let a = fig2a(&anchor, 64).unwrap();
    let b = fig2b(&anchor, 64).unwrap();
    let worst = a.max_residual().max(b.max_residual());
    (
        worst < 1e-9 && !a.rows.is_empty() && !b.rows.is_empty(),
        format!(
            "figure grids: {} + {} rows, max residual through the 4-dim masker {worst:.2e} (< 1e-9)",
            a.rows.len(),
            b.rows.len()
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("AC1", ac1),
        ("AC2", ac2),
        ("AC3", ac3),
        ("AC4", ac4),
        ("AC5", ac5),
        ("AC6", ac6),
        ("AC7", ac7),
        ("AC8", ac8),
        ("AC9", ac9),
        ("AC10", ac10),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let (pass, detail) = catch_unwind(AssertUnwindSafe(f))
            .unwrap_or_else(|e| (false, format!("panicked: {:?}", e.downcast_ref::<String>())));
        if !pass {
            failed += 1;
        }
        println!("[{}] {name} {detail}", if pass { "PASS" } else { "FAIL" });
    }
    println!("{} of 10 criteria passed", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
