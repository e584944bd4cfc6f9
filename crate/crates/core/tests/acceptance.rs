//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs with a custom harness so the timing-sensitive runs execute
//! sequentially on an otherwise idle process.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::process::ExitCode;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use hmfem::integrator::apriori_check;
use hmfem::oracle::{
    dense_advection_derivative, dense_assemble_all, dense_newton_step, fd_jacobian,
};
use hmfem::solvers::{jacobian, step_newton};
use hmfem::sparse::{m_norm, norm2, DenseMatrix};
use hmfem::{
    preset, run, DofGrid, FemOperators, Method, RunOptions, RunResult, SolverConfig, State,
    StopReason,
};

const N: usize = 17;
const TAU: f64 = 0.1;
const T_END: f64 = 10.0;

// tolerances
const REL_ERR_MAX: f64 = 1e-8;
const DUALITY_TOL: f64 = 1e-12;
const SKEW_TOL: f64 = 1e-13;
const LINEARITY_TOL: f64 = 1e-12;
const FD_JACOBIAN_TOL: f64 = 1e-5;
const FD_STEP: f64 = 1e-6;
const APRIORI_SLACK: f64 = 1e-9;
const GROWTH_FACTOR: f64 = 10.0;
const SEMILINEAR_CAP_WINDOW: (f64, f64) = (7.2, 12.0);
const ORACLE_TOL: f64 = 1e-10;
const AGREEMENT_TOL: f64 = 1e-6;
const CORRELATION_MIN: f64 = 0.9;
const RATIO_TWO_ITER: (f64, f64) = (1.0, 3.0);
const RATIO_ONE_ITER: (f64, f64) = (0.8, 1.2);
const TIMING_REPEATS: usize = 3;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn sim(test: u32, method: Method, t_end: f64) -> RunResult {
    let cfg = SolverConfig::new(method, TAU);
    run(&preset(test).unwrap(), &cfg, &RunOptions::new(N, t_end)).unwrap()
}

/// All Newton-type runs at the reference settings, keyed by (test, method).
struct Runs(HashMap<(u32, Method), RunResult>);

impl Runs {
    fn collect() -> Self {
        let mut map = HashMap::new();
        for test in 1..=5 {
            for m in Method::NEWTON_TYPE {
                map.insert((test, m), sim(test, m, T_END));
            }
        }
        Runs(map)
    }

    fn get(&self, test: u32, m: Method) -> &RunResult {
        &self.0[&(test, m)]
    }

    fn iter(&self) -> impl Iterator<Item = (u32, Method, &RunResult)> {
        (1..=5).flat_map(move |t| {
            Method::NEWTON_TYPE
                .into_iter()
                .map(move |m| (t, m, self.get(t, m)))
        })
    }
}

fn max_abs_diff(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

fn rel_dense(a: &DenseMatrix, reference: &DenseMatrix) -> f64 {
    max_abs_diff(a, reference) / reference.max_abs().max(f64::MIN_POSITIVE)
}

fn random_vec(rng: &mut StdRng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

fn random_ops(rng: &mut StdRng, n: usize) -> FemOperators {
    let side = rng.gen_range(0.5..4.0);
    let grid = DofGrid::new(side, side, n).unwrap();
    let (a, b) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
    FemOperators::new(grid, &|x, y| [a + (y * 0.7).sin(), b * x.cos()]).unwrap()
}

fn criterion_1(runs: &Runs) -> Outcome {
    let mut bad = Vec::new();
    for (test, m, r) in runs.iter() {
        let expected = if test == 3 { 1 } else { 2 };
        let ok = r.steps() == 100 && r.reports.iter().all(|s| s.iterations == expected);
        if !ok {
            let (lo, hi) = r.reports.iter().fold((usize::MAX, 0), |(lo, hi), s| {
                (lo.min(s.iterations), hi.max(s.iterations))
            });
            bad.push(format!(
                "test {test} {m}: {} steps, iters {lo}..={hi}",
                r.steps()
            ));
        }
    }
    let detail = if bad.is_empty() {
        "2 iterations per step on tests 1,2,4,5 and 1 on test 3, all methods, 100 steps".to_string()
    } else {
        bad.join("; ")
    };
    outcome(bad.is_empty(), detail)
}

fn criterion_2(runs: &Runs) -> Outcome {
    let worst = runs
        .iter()
        .flat_map(|(_, _, r)| r.reports.iter().map(|s| s.final_rel_err))
        .fold(0.0, f64::max);
    outcome(
        worst <= REL_ERR_MAX,
        format!("max final rel_err {worst:.3e} (limit {REL_ERR_MAX:.0e})"),
    )
}

fn criterion_3(runs: &Runs) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for test in 1..=5 {
        let mut best = HashMap::new();
        for m in Method::NEWTON_TYPE {
            let mut t = runs.get(test, m).total_wall_time().as_secs_f64();
            for _ in 1..TIMING_REPEATS {
                t = t.min(sim(test, m, T_END).total_wall_time().as_secs_f64());
            }
            best.insert(m, t);
        }
        let (tn, tc, tm) = (
            best[&Method::Newton],
            best[&Method::Chord],
            best[&Method::Modified],
        );
        let ratio = tn / tc;
        let (lo, hi) = if test == 3 {
            RATIO_ONE_ITER
        } else {
            RATIO_TWO_ITER
        };
        let order_ok = tm < tc && tc <= tn;
        let ratio_ok = (lo..=hi).contains(&ratio);
        pass &= order_ok && ratio_ok;
        parts.push(format!(
            "test {test}: newton {tn:.3}s chord {tc:.3}s modified {tm:.3}s, newton/chord {ratio:.2}{}{}",
            if order_ok { "" } else { " [order violated]" },
            if ratio_ok { "" } else { " [ratio out of range]" }
        ));
    }
    outcome(pass, parts.join("; "))
}

fn criterion_4() -> Outcome {
    let mut rng = StdRng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for n in [5, 9, 17] {
        let ops = random_ops(&mut rng, n);
        for _ in 0..100 {
            let u = random_vec(&mut rng, ops.num_dofs());
            let w = random_vec(&mut rng, ops.num_dofs());
            let bu = ops.advection_derivative(&w).unwrap().matvec(&u).unwrap();
            let sw = ops.advection(&u).unwrap().matvec(&w).unwrap();
            let diff: Vec<f64> = bu.iter().zip(&sw).map(|(a, b)| a - b).collect();
            worst = worst.max(norm2(&diff) / norm2(&sw));
        }
    }
    outcome(
        worst <= DUALITY_TOL,
        format!("max relative error {worst:.3e} over 300 pairs"),
    )
}

fn criterion_5() -> Outcome {
    let mut rng = StdRng::seed_from_u64(5);
    let (mut skew, mut lin): (f64, f64) = (0.0, 0.0);
    for n in [3, 5, 9, 17] {
        let ops = random_ops(&mut rng, n);
        for _ in 0..20 {
            let u = random_vec(&mut rng, ops.num_dofs());
            let v = random_vec(&mut rng, ops.num_dofs());
            let (a, b) = (rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
            let su = ops.advection(&u).unwrap();
            let sv = ops.advection(&v).unwrap();
            skew = skew.max(
                su.linear_combination(1.0, &su.transpose(), 1.0)
                    .unwrap()
                    .max_abs(),
            );
            let mix: Vec<f64> = u.iter().zip(&v).map(|(x, y)| a * x + b * y).collect();
            let lhs = ops.advection(&mix).unwrap();
            let rhs = su.linear_combination(a, &sv, b).unwrap();
            lin = lin.max(lhs.linear_combination(1.0, &rhs, -1.0).unwrap().max_abs());
        }
    }
    outcome(
        skew <= SKEW_TOL && lin <= LINEARITY_TOL,
        format!("max |S+S^T| {skew:.3e}, max linearity defect {lin:.3e}"),
    )
}

fn criterion_6() -> Outcome {
    let mut rng = StdRng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    for n in [3, 5, 9] {
        let ops = random_ops(&mut rng, n);
        for _ in 0..3 {
            let state = State::new(
                random_vec(&mut rng, ops.num_dofs()),
                random_vec(&mut rng, ops.num_dofs()),
            )
            .unwrap();
            let tau = rng.gen_range(0.01..1.0);
            let analytic = jacobian(&ops, &state, tau).unwrap().to_dense();
            let fd = fd_jacobian(&ops, &state, tau, FD_STEP).unwrap();
            let frob = |m: &DenseMatrix| m.as_slice().iter().map(|x| x * x).sum::<f64>().sqrt();
            let diff: f64 = analytic
                .as_slice()
                .iter()
                .zip(fd.as_slice())
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt();
            worst = worst.max(diff / frob(&fd));
        }
    }
    outcome(
        worst <= FD_JACOBIAN_TOL,
        format!("max relative Frobenius error {worst:.3e}"),
    )
}

fn criterion_7(runs: &Runs) -> Outcome {
    let mut growth: f64 = 0.0;
    let mut excess = f64::NEG_INFINITY;
    let mut ok = true;
    for (test, _, r) in runs.iter() {
        let rep = apriori_check(&r.diagnostics, preset(test).unwrap().p_norm_1inf);
        growth = growth.max(rep.max_growth_ratio);
        excess = excess.max(rep.max_u_excess);
        ok &= rep.max_growth_ratio <= 1.0 && rep.max_u_excess <= APRIORI_SLACK;
    }
    outcome(
        ok,
        format!("max ||W(t)||/(exp(3t|p|)||W0||) = {growth:.3e}, max ||U||-||W|| = {excess:.3e}"),
    )
}

fn criterion_8(runs: &Runs) -> Outcome {
    let mut ok = true;
    let mut worst: f64 = 0.0;
    let mut check = |r: &RunResult, t_end: f64| {
        let growth = r.max_u() / r.diagnostics[0].u_max;
        worst = worst.max(growth);
        ok &= r.stop_reason == StopReason::ReachedT
            && (r.final_time() - t_end).abs() < 1e-9
            && growth <= GROWTH_FACTOR;
    };
    for (_, _, r) in runs.iter() {
        check(r, T_END);
    }
    let long = sim(1, Method::Modified, 50.0);
    check(&long, 50.0);
    outcome(
        ok,
        format!("no cap stop; max growth of max|U| {worst:.3} (limit {GROWTH_FACTOR})"),
    )
}

fn criterion_9() -> Outcome {
    let semi = sim(2, Method::Semilinear, 20.0);
    let modified = sim(2, Method::Modified, 20.0);
    let t_cap = semi.final_time();
    let semi_ok = semi.stop_reason == StopReason::AmplitudeCap
        && (SEMILINEAR_CAP_WINDOW.0..=SEMILINEAR_CAP_WINDOW.1).contains(&t_cap);
    let mod_ok = modified.stop_reason == StopReason::ReachedT;
    outcome(
        semi_ok && mod_ok,
        format!(
            "semilinear stops ({}) at t = {t_cap:.1}; modified newton {} at t = {:.1} with max|U| {:.3e}",
            semi.stop_reason,
            modified.stop_reason,
            modified.final_time(),
            modified.max_u()
        ),
    )
}

fn criterion_10() -> Outcome {
    let mut rng = StdRng::seed_from_u64(10);
    let mut worst: f64 = 0.0;
    let track = |label: &str, e: f64, worst: &mut f64| {
        if e > ORACLE_TOL {
            eprintln!("  oracle mismatch in {label}: {e:.3e}");
        }
        *worst = worst.max(e);
    };
    for n in [3, 5, 9] {
        let p = preset(5).unwrap();
        let grid = p.grid(n).unwrap();
        let grad_p = |x: f64, y: f64| p.grad_p(x, y);
        let ops = FemOperators::new(grid.clone(), &grad_p).unwrap();
        let u = random_vec(&mut rng, ops.num_dofs());
        let w = random_vec(&mut rng, ops.num_dofs());
        let dense = dense_assemble_all(&grid, &grad_p, &u).unwrap();
        track(
            "M",
            rel_dense(&ops.mass.to_dense(), &dense.mass),
            &mut worst,
        );
        track(
            "A",
            rel_dense(&ops.stiffness.to_dense(), &dense.stiffness),
            &mut worst,
        );
        let mut k = dense.mass.clone();
        for (kv, av) in k.as_mut_slice().iter_mut().zip(dense.stiffness.as_slice()) {
            *kv += av;
        }
        track("K", rel_dense(&ops.system.to_dense(), &k), &mut worst);
        track(
            "R",
            rel_dense(&ops.drift.to_dense(), &dense.drift),
            &mut worst,
        );
        track(
            "S",
            rel_dense(&ops.advection(&u).unwrap().to_dense(), &dense.advection),
            &mut worst,
        );
        let b = dense_advection_derivative(&grid, &w).unwrap();
        track(
            "B",
            rel_dense(&ops.advection_derivative(&w).unwrap().to_dense(), &b),
            &mut worst,
        );

        // one full Newton step from a consistent state with O(1) amplitude
        let u0: Vec<f64> = u.iter().map(|x| 0.2 * x).collect();
        let w0 = hmfem::integrator::init_w0(&ops, &u0).unwrap();
        let start = State::new(u0, w0).unwrap();
        let cfg = SolverConfig::new(Method::Newton, TAU);
        let (fast, _) = step_newton(&ops, &start, &cfg).unwrap();
        let (slow, _) = dense_newton_step(&grid, &grad_p, &start, &cfg).unwrap();
        let diff: Vec<f64> = fast
            .stacked()
            .iter()
            .zip(slow.stacked())
            .map(|(a, b)| a - b)
            .collect();
        track(
            "Newton step",
            norm2(&diff) / norm2(&slow.stacked()),
            &mut worst,
        );
    }
    outcome(
        worst <= ORACLE_TOL,
        format!("max relative deviation {worst:.3e} on n = 3, 5, 9"),
    )
}

fn criterion_11(runs: &Runs) -> Outcome {
    let mut worst: f64 = 0.0;
    for test in 1..=5 {
        let r = runs.get(test, Method::Newton);
        let m = &r.ops.mass;
        let states: Vec<&State> = Method::NEWTON_TYPE
            .iter()
            .map(|&k| runs.get(test, k).final_state())
            .collect();
        for a in 0..3 {
            for b in a + 1..3 {
                for (x, y) in [(&states[a].u, &states[b].u), (&states[a].w, &states[b].w)] {
                    let d: Vec<f64> = x.iter().zip(y).map(|(p, q)| p - q).collect();
                    worst = worst.max(m_norm(m, &d).unwrap() / m_norm(m, y).unwrap());
                }
            }
        }
    }
    outcome(
        worst <= AGREEMENT_TOL,
        format!("max pairwise relative M-norm difference {worst:.3e}"),
    )
}

/// Location of the largest nodal value, refined by a separable parabola
/// through its four lattice neighbours.
fn subgrid_maximum(grid: &DofGrid, u: &[f64]) -> [f64; 2] {
    let m = grid.cells_per_side();
    let at = |i: usize, j: usize| u[grid.dof_of_node(i % m, j % m).unwrap()];
    let (mut bi, mut bj) = (0, 0);
    for j in 0..m {
        for i in 0..m {
            if at(i, j) > at(bi, bj) {
                (bi, bj) = (i, j);
            }
        }
    }
    let c = at(bi, bj);
    let (l, r) = (at(bi + m - 1, bj), at(bi + 1, bj));
    let (d, t) = (at(bi, bj + m - 1), at(bi, bj + 1));
    let h = grid.h();
    let [x, y] = grid.node_coords(bi, bj);
    [
        x + 0.5 * h * (l - r) / (l - 2.0 * c + r),
        y + 0.5 * h * (d - t) / (d - 2.0 * c + t),
    ]
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (ma, mb) = (mean(a), mean(b));
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}

fn criterion_12(runs: &Runs) -> Outcome {
    let r5 = runs.get(5, Method::Modified);
    let grid = r5.ops.grid();
    let mut angles: Vec<f64> = Vec::new();
    for snap in &r5.snapshots {
        let [x, y] = subgrid_maximum(grid, &snap.state.u);
        let mut a = (y - 10.0).atan2(x - 10.0);
        if let Some(&prev) = angles.last() {
            // unwrap across the branch cut
            while a - prev > PI {
                a -= 2.0 * PI;
            }
            while a - prev < -PI {
                a += 2.0 * PI;
            }
        }
        angles.push(a);
    }
    let steps: Vec<f64> = angles.windows(2).map(|w| w[1] - w[0]).collect();
    let monotone = steps.iter().all(|&d| d > 0.0) || steps.iter().all(|&d| d < 0.0);
    let sweep = angles.last().unwrap() - angles[0];

    let r1 = runs.get(1, Method::Modified);
    let snap = r1
        .snapshots
        .iter()
        .find(|s| (s.t - 5.0).abs() < 1e-9)
        .expect("snapshot at t = 5");
    let p1 = preset(1).unwrap();
    let coords = r1.ops.grid().dof_coords();
    let best = (0..2000)
        .map(|k| {
            let shift = k as f64 / 2000.0;
            let translate: Vec<f64> = coords.iter().map(|&[x, y]| p1.u0(x, y - shift)).collect();
            (pearson(&snap.state.u, &translate), shift)
        })
        .fold(
            (f64::NEG_INFINITY, 0.0),
            |a, b| if b.0 > a.0 { b } else { a },
        );
    outcome(
        monotone && steps.len() >= 2 && best.0 >= CORRELATION_MIN,
        format!(
            "test 5 maximum sweeps {sweep:+.4} rad over {} snapshots, monotone: {monotone}; \
             test 1 at t = 5 correlates {:.4} with the initial profile shifted by {:.4} in y",
            angles.len(),
            best.0,
            best.1
        ),
    )
}

fn main() -> ExitCode {
    // `cargo test -- --list` and friends must not trigger the full suite
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return ExitCode::SUCCESS;
    }
    let runs = Runs::collect();
    let results = [
        ("iteration counts", criterion_1(&runs)),
        ("final relative errors", criterion_2(&runs)),
        ("runtime ordering", criterion_3(&runs)),
        ("duality B(W)U = S(U)W", criterion_4()),
        ("skew-symmetry and linearity of S", criterion_5()),
        ("Jacobian vs finite differences", criterion_6()),
        ("a-priori bound", criterion_7(&runs)),
        ("boundedness without cap", criterion_8(&runs)),
        ("semilinear instability ordering", criterion_9()),
        ("oracle equivalence", criterion_10()),
        ("method agreement", criterion_11(&runs)),
        ("qualitative dynamics", criterion_12(&runs)),
    ];
    let mut failed = 0;
    for (k, (name, o)) in results.iter().enumerate() {
        println!(
            "criterion {:>2} {}: {name}: {}",
            k + 1,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        failed += usize::from(!o.pass);
    }
    println!(
        "{} of {} criteria passed",
        results.len() - failed,
        results.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
