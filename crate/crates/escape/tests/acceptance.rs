//! Acceptance gate: every release-blocking behavior in one target, one
//! verdict line per criterion. Each test prints `criterion N: PASS/FAIL`
//! with the measured numbers before asserting, so a failing run still
//! documents what was actually computed.
//!
//! Criterion 10 runs a 3-point smoke grid by default; the full grid sits
//! behind `--ignored`.

use std::f64::consts::PI;
use std::time::Instant;

use escape::action_angle::{
    aa_data, numeric_action, numeric_fourier_q1, numeric_frequency,
};
use escape::elliptic::{complete_e, complete_k, inv_cn, jacobi_sn_cn_dn};
use escape::fitting::{
    fit_geometry, fit_global_barrier, fit_global_inflection, fit_l2, fit_taylor, mems_fit_input,
};
use escape::potentials::{ElectrostaticWell, Potential, QuarticWell};
use escape::resonance::{
    conservation_c, critical_force_theory, integrate_slow_flow, maximum_line, ForcingParams,
    Mechanism, SlowState, SlowStatus,
};
use escape::simulator::{critical_force_bisect, integrate_orbit, sweep, SimConfig};

const PSI_BENCH: f64 = PI / 2.0;

fn report(id: &str, ok: bool, detail: &str) {
    let verdict = if ok { "PASS" } else { "FAIL" };
    println!("criterion {id}: {verdict}: {detail}");
    assert!(ok, "criterion {id} failed: {detail}");
}

fn case_i() -> QuarticWell {
    QuarticWell::new(-0.5, 0.05).unwrap()
}

fn case_ii() -> QuarticWell {
    QuarticWell::new(-0.06, -0.068).unwrap()
}

fn bench_config(omega: f64, horizon: u32) -> SimConfig {
    let params = ForcingParams::new(0.0, omega).unwrap().with_psi(PSI_BENCH);
    let mut c = SimConfig::new(params);
    c.horizon_periods = horizon;
    c
}

#[test]
fn criterion_01_barrier_position_and_height() {
    let well = case_i();
    let _ = well.barrier().unwrap(); // warm-up
    let start = Instant::now();
    let (q_thres, e_max) = well.barrier().unwrap();
    let elapsed = start.elapsed();
    let ok = (q_thres - 2.76393).abs() <= 1e-5
        && (e_max - 1.03006).abs() <= 1e-5
        && elapsed.as_micros() < 1000;
    report(
        "01",
        ok,
        &format!(
            "barrier at q = {q_thres:.6} (want 2.76393 +- 1e-5), height {e_max:.6} \
             (want 1.03006 +- 1e-5), {} us",
            elapsed.as_micros()
        ),
    );
}

#[test]
fn criterion_02_saddle_threshold_theory_and_simulation() {
    let start = Instant::now();
    let well = case_i();
    let (_, e_max) = well.barrier().unwrap();
    let (f_theory, _, mech) = critical_force_theory(&well, e_max, 0.85).unwrap();
    let geo = well.geometry().unwrap();
    let config = bench_config(0.85, 1000);
    let b = critical_force_bisect(&well, &geo, 0.85, (0.09, 0.11), &config).unwrap();
    let mid = 0.5 * (b.f_low + b.f_high);
    let rel = (mid - f_theory).abs() / f_theory;
    let elapsed = start.elapsed();
    let ok = (f_theory - 0.09946).abs() <= 5e-4
        && mech == Mechanism::Saddle
        && rel <= 0.05
        && elapsed.as_secs() < 120;
    report(
        "02",
        ok,
        &format!(
            "theory F(0.85) = {f_theory:.6} (want 0.09946 +- 5e-4, {mech:?}); simulated \
             bracket ({:.5}, {:.5}) at psi = pi/2, 1000 periods, off theory by {:.2}%; {:.1} s",
            b.f_low,
            b.f_high,
            rel * 100.0,
            elapsed.as_secs_f64()
        ),
    );
}

#[test]
fn criterion_03a_maximum_threshold_theory() {
    let well = case_i();
    let (_, e_max) = well.barrier().unwrap();
    let line = maximum_line(&well, e_max).unwrap();
    let f = line.f_at(0.92);
    let ok = (0.0840..=0.0870).contains(&f);
    report(
        "03a",
        ok,
        &format!("tangency line F(0.92) = {f:.6} (want within [0.0840, 0.0870])"),
    );
}

#[test]
fn criterion_03b_maximum_threshold_simulation() {
    let start = Instant::now();
    let well = case_i();
    let geo = well.geometry().unwrap();
    let config = bench_config(0.92, 1000);
    let b = critical_force_bisect(&well, &geo, 0.92, (0.03, 0.12), &config).unwrap();
    // how long the lower reference force actually survives
    let mut probe = config;
    probe.params.f = 0.0845;
    let r = integrate_orbit(&well, &geo, &probe).unwrap();
    let survived = r
        .t_escape
        .map_or("the whole horizon".to_string(), |t| {
            format!("{:.0} periods", t / (2.0 * PI / 0.92))
        });
    let elapsed = start.elapsed();
    let ok = b.f_low > 0.0845 && b.f_high < 0.0846 && elapsed.as_secs() < 120;
    report(
        "03b",
        ok,
        &format!(
            "simulated bracket ({:.6}, {:.6}) at psi = pi/2, 1000 periods \
             (want inside (0.0845, 0.0846)); F = 0.0845 itself lasts {survived}; {:.1} s",
            b.f_low,
            b.f_high,
            elapsed.as_secs_f64()
        ),
    );
}

#[test]
fn criterion_04_simulated_threshold_off_resonance() {
    let start = Instant::now();
    let well = case_i();
    let geo = well.geometry().unwrap();
    let config = bench_config(0.88, 1000);
    let b = critical_force_bisect(&well, &geo, 0.88, (0.06, 0.08), &config).unwrap();
    let elapsed = start.elapsed();
    let ok = b.f_low > 0.0709 && b.f_high < 0.0711 && elapsed.as_secs() < 120;
    report(
        "04",
        ok,
        &format!(
            "simulated bracket ({:.6}, {:.6}) at psi = pi/2, 1000 periods \
             (want inside (0.0709, 0.0711)); {:.1} s",
            b.f_low,
            b.f_high,
            elapsed.as_secs_f64()
        ),
    );
}

#[test]
fn criterion_05_inverted_well_saddle_point() {
    let well = case_ii();
    let (_, e_max) = well.barrier().unwrap();
    let (f, _, mech) = critical_force_theory(&well, e_max, 0.81859).unwrap();
    let rel = (f - 0.20873).abs() / 0.20873;
    let ok = rel <= 0.01;
    report(
        "05",
        ok,
        &format!(
            "inverted-well threshold F(0.81859) = {f:.6} [{mech:?}], reference 0.20873, \
             relative deviation {:.1}%",
            rel * 100.0
        ),
    );
}

#[test]
fn criterion_06_mems_fit_coefficients() {
    let mems = ElectrostaticWell::new(0.06, 1.0).unwrap();
    let (source, geo) = mems_fit_input(&mems).unwrap();
    let (q_min, q_max) = (geo.q_low, geo.q_thres);

    let close = |fit: &escape::fitting::FitPolynomial, want: [f64; 3]| -> (bool, String) {
        let got = [fit.coeffs[0], fit.coeffs[1], fit.coeffs[2]];
        let ok = got
            .iter()
            .zip(want.iter())
            .all(|(g, w)| (g - w).abs() <= 1e-4);
        (
            ok,
            format!("({:.6}, {:.6}, {:.6})", got[0], got[1], got[2]),
        )
    };
    let inflection = fit_global_inflection(&source, q_min, q_max).unwrap();
    let barrier = fit_global_barrier(&source, q_min, q_max).unwrap();
    let l2 = fit_l2(&source, q_min, q_max).unwrap();
    let (ok1, s1) = close(&inflection, [0.475492, -0.116032, -0.340386]);
    let (ok2, s2) = close(&barrier, [0.425583, -0.140409, -0.180387]);
    let (ok3, s3) = close(&l2, [0.45386, -0.103971, -0.276211]);
    let interval_ok = (q_max - 0.639856).abs() <= 1e-5 && (q_min + 0.487499).abs() <= 1e-5;
    let ok = ok1 && ok2 && ok3 && interval_ok;
    report(
        "06",
        ok,
        &format!(
            "interval ({q_min:.6}, {q_max:.6}) (want -0.487499, 0.639856 +- 1e-5); \
             inflection {s1}, barrier {s2}, least-squares {s3}, each +- 1e-4"
        ),
    );
}

#[test]
fn criterion_07_closed_forms_match_quadrature() {
    let mut worst: (f64, &str, f64) = (0.0, "", 0.0);
    for well in [case_i(), case_ii()] {
        let geo = well.geometry().unwrap();
        let (_, e_max) = well.barrier().unwrap();
        for i in 0..50 {
            let xi = e_max * (0.02 + 0.93 * i as f64 / 49.0);
            let aa = aa_data(&well, xi).unwrap();
            let j_q = numeric_action(&well, &geo, xi).unwrap();
            let om_q = numeric_frequency(&well, &geo, xi).unwrap();
            let q1_q = numeric_fourier_q1(&well, &geo, xi).unwrap();
            for (closed, quad, what) in [
                (aa.j, j_q, "J"),
                (aa.omega_nat, om_q, "Omega"),
                (aa.g, q1_q.abs(), "|q1|"),
            ] {
                let rel = (closed - quad).abs() / quad.abs();
                if rel > worst.0 {
                    worst = (rel, what, xi);
                }
            }
        }
    }
    let ok = worst.0 <= 1e-7;
    report(
        "07",
        ok,
        &format!(
            "closed forms vs quadrature on 50 energies per well, worst relative \
             deviation {:.2e} ({} at xi = {:.4}), bound 1e-7",
            worst.0, worst.1, worst.2
        ),
    );
}

#[test]
fn criterion_08_slow_flow_conserves_c() {
    // deterministic splitmix64 samples around the threshold-curve minimum
    let mut state: u64 = 0x5eed_cafe_f00d_beef;
    let mut uniform = move || {
        state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
        (z >> 11) as f64 / (1u64 << 53) as f64
    };
    let well = case_i();
    let (_, e_max) = well.barrier().unwrap();
    // both edges of the (theta, xi) annulus are singular: the origin circle
    // xi = 0 (a polar coordinate center, C = 0 there) and the separatrix
    // xi = e_max (infinite period; an orbit pumped that high is an escape
    // event, not a conservation probe). An orbit can only touch the
    // separatrix collar if its C level intersects the collar's C range, so
    // precompute that range's ingredients and redraw such level sets.
    let collar: Vec<(f64, f64, f64)> = [0.995, 0.997, 0.999, 0.9995, 0.9999, 1.0 - 1e-6]
        .iter()
        .map(|frac| {
            let xi = frac * e_max;
            let aa = aa_data(&well, xi).unwrap();
            (xi, aa.j, aa.g)
        })
        .collect();
    let mut worst = 0.0f64;
    let mut completed = 0;
    let mut accepted = 0;
    let mut candidates = 0;
    while accepted < 20 {
        candidates += 1;
        assert!(candidates < 500, "sample filter rejects nearly everything");
        let f = 0.03 + 0.06 * uniform();
        let omega = 0.85 + 0.10 * uniform();
        let xi0 = e_max * (0.05 + 0.30 * uniform());
        let theta0 = 2.0 * PI * uniform();
        let params = ForcingParams::new(f, omega).unwrap();
        let initial = SlowState {
            theta_slow: theta0,
            xi: xi0,
        };
        let c0 = conservation_c(&well, &params, &initial).unwrap();
        if c0.abs() < 5e-3 {
            continue;
        }
        let hull_lo = collar
            .iter()
            .map(|(xi, j, g)| xi - omega * j - f * g)
            .fold(f64::INFINITY, f64::min);
        let hull_hi = collar
            .iter()
            .map(|(xi, j, g)| xi - omega * j + f * g)
            .fold(f64::NEG_INFINITY, f64::max);
        if c0 > hull_lo - 5e-3 && c0 < hull_hi + 5e-3 {
            continue;
        }
        accepted += 1;
        let traj = integrate_slow_flow(&well, &params, initial, 100.0).unwrap();
        if traj.status == SlowStatus::Completed {
            completed += 1;
        }
        for (_, s) in &traj.states {
            let c = conservation_c(&well, &params, s).unwrap();
            worst = worst.max((c - c0).abs());
        }
    }
    let ok = worst <= 1e-6 && completed == 20;
    report(
        "08",
        ok,
        &format!(
            "20 random (F, Omega) slow-flow runs over 100 slow-time units: \
             {completed}/20 completed, worst |C - C0| = {worst:.2e}, bound 1e-6"
        ),
    );
}

#[test]
fn criterion_09_elliptic_identities() {
    let mut worst_legendre = 0.0f64;
    for i in 1..100 {
        let k = i as f64 / 100.0;
        let kc = ((1.0 - k) * (1.0 + k)).sqrt();
        let lhs = complete_e(k).unwrap() * complete_k(kc).unwrap()
            + complete_e(kc).unwrap() * complete_k(k).unwrap()
            - complete_k(k).unwrap() * complete_k(kc).unwrap();
        worst_legendre = worst_legendre.max((lhs - PI / 2.0).abs());
    }
    let mut worst_jacobi = 0.0f64;
    for ik in 0..=20 {
        let k = if ik == 20 { 0.999 } else { ik as f64 * 0.05 };
        for iu in -20..=20 {
            let u = iu as f64 * 0.5;
            let (sn, cn, dn) = jacobi_sn_cn_dn(u, k).unwrap();
            worst_jacobi = worst_jacobi.max((sn * sn + cn * cn - 1.0).abs());
            worst_jacobi = worst_jacobi.max((dn * dn + k * k * sn * sn - 1.0).abs());
        }
    }
    let mut worst_round = 0.0f64;
    for ix in 1..=19 {
        let x = ix as f64 * 0.05;
        for ik in 1..=9 {
            let k = ik as f64 * 0.1;
            let u = inv_cn(x, k).unwrap();
            let (_, cn, _) = jacobi_sn_cn_dn(u, k).unwrap();
            worst_round = worst_round.max((cn - x).abs());
        }
    }
    let ok = worst_legendre <= 1e-10 && worst_jacobi <= 1e-10 && worst_round <= 1e-10;
    report(
        "09",
        ok,
        &format!(
            "Legendre residual {worst_legendre:.2e}, Jacobi identity residual \
             {worst_jacobi:.2e}, inv_cn round trip {worst_round:.2e}, bound 1e-10"
        ),
    );
}

// max relative deviation of each truncated well's simulated threshold curve
// from the source well's, on a shared frequency grid
fn taylor_order_deviations(omegas: &[f64], horizon: u32) -> Vec<(u32, f64)> {
    let mems = ElectrostaticWell::new(0.06, 1.0).unwrap();
    let (source, geo) = mems_fit_input(&mems).unwrap();
    let config = bench_config(omegas[0], horizon);
    let exact = sweep(&source, &geo, omegas, &config, 0.01);
    assert!(
        exact.failures.is_empty(),
        "source sweep failed: {:?}",
        exact.failures
    );
    let mid = |rows: &[escape::simulator::SweepRow], i: usize| {
        0.5 * (rows[i].f_crit_low + rows[i].f_crit_high)
    };
    [4u32, 6, 8, 10]
        .iter()
        .map(|&order| {
            let fit = fit_taylor(&source, order).unwrap();
            let g = fit_geometry(&fit).unwrap();
            let rows = sweep(&fit, &g, omegas, &config, 0.01);
            assert!(
                rows.failures.is_empty(),
                "order {order} sweep failed: {:?}",
                rows.failures
            );
            let dev = (0..omegas.len())
                .map(|i| {
                    let e = mid(&exact.rows, i);
                    ((mid(&rows.rows, i) - e) / e).abs()
                })
                .fold(0.0f64, f64::max);
            (order, dev)
        })
        .collect()
}

fn run_criterion_10(omegas: &[f64], horizon: u32, limit_secs: u64, tag: &str) {
    let start = Instant::now();
    let devs = taylor_order_deviations(omegas, horizon);
    let elapsed = start.elapsed();
    let monotone = devs.windows(2).all(|w| w[0].1 > w[1].1);
    let ok = monotone && elapsed.as_secs() < limit_secs;
    let listing: Vec<String> = devs
        .iter()
        .map(|(o, d)| format!("order {o}: {:.3}%", d * 100.0))
        .collect();
    report(
        tag,
        ok,
        &format!(
            "max relative deviation from the source curve over {} frequencies \
             ({} periods): {}; want strictly decreasing; {:.0} s",
            omegas.len(),
            horizon,
            listing.join(", "),
            elapsed.as_secs_f64()
        ),
    );
}

// The shared grid spans the monotone branch left of the threshold-curve
// minimum. Each truncation order places its minimum at a slightly shifted
// frequency, so pointwise relative deviation near the minimum measures dip
// alignment against a near-zero denominator instead of approximation
// quality; on the shared branch the order trend is the meaningful signal.
#[test]
fn criterion_10_taylor_order_trend_smoke() {
    run_criterion_10(&[0.80, 0.84, 0.87], 300, 180, "10 (smoke)");
}

#[test]
#[ignore = "full grid; run with --ignored, budget 30 min"]
fn criterion_10_taylor_order_trend_full() {
    let omegas: Vec<f64> = (0..10).map(|i| 0.78 + 0.01 * i as f64).collect();
    run_criterion_10(&omegas, 1000, 1800, "10 (full)");
}
