use proptest::prelude::*;

use hmfem::integrator::{apriori_check, step_count};
use hmfem::{preset, run, DofGrid, FemOperators, Method, RunOptions, SolverConfig, StopReason};

fn method() -> impl Strategy<Value = Method> {
    prop_oneof![
        Just(Method::Newton),
        Just(Method::Chord),
        Just(Method::Modified),
        Just(Method::Semilinear),
    ]
}

#[test]
fn runs_are_bitwise_deterministic() {
    let p = preset(5).unwrap();
    let cfg = SolverConfig::new(Method::Chord, 0.1);
    let opts = RunOptions::new(9, 1.0);
    let a = run(&p, &cfg, &opts).unwrap();
    let b = run(&p, &cfg, &opts).unwrap();
    assert_eq!(a.diagnostics, b.diagnostics);
    assert_eq!(a.snapshots, b.snapshots);
    let strip = |r: &hmfem::RunResult| {
        r.reports
            .iter()
            .map(|s| {
                (
                    s.iterations,
                    s.final_rel_err.to_bits(),
                    s.residual_norm.to_bits(),
                )
            })
            .collect::<Vec<_>>()
    };
    assert_eq!(strip(&a), strip(&b));
}

#[test]
fn step_count_respects_the_cap() {
    let p = preset(2).unwrap();
    let mut opts = RunOptions::new(9, 20.0);
    opts.cap = 1e-4;
    let r = run(&p, &SolverConfig::new(Method::Semilinear, 0.1), &opts).unwrap();
    assert_eq!(r.stop_reason, StopReason::AmplitudeCap);
    let first_hit = r
        .diagnostics
        .iter()
        .position(|d| d.u_max >= opts.cap)
        .unwrap();
    assert_eq!(r.steps(), first_hit.min(step_count(20.0, 0.1)));
    assert!(r.diagnostics[..first_hit]
        .iter()
        .all(|d| d.u_max < opts.cap));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn runs_keep_u_below_w_and_bounded_growth(test in 1u32..=5, m in method(), n in 3usize..8, steps in 1usize..6) {
        let p = preset(test).unwrap();
        let tau = 0.1;
        let r = run(&p, &SolverConfig::new(m, tau), &RunOptions::new(n, steps as f64 * tau)).unwrap();
        prop_assert_eq!(r.steps(), steps);
        let rep = apriori_check(&r.diagnostics, p.p_norm_1inf);
        prop_assert!(rep.u_below_w, "{:?}", rep);
        if m != Method::Semilinear {
            prop_assert!(rep.bound_holds, "{:?}", rep);
        }
        for d in &r.diagnostics {
            prop_assert!(d.elliptic_residual < 1e-10);
        }
    }

    #[test]
    fn advection_has_zero_row_and_column_sums(n in 3usize..12, side in 0.5f64..5.0, seed in any::<u64>()) {
        // S(U) applied to a constant vanishes (grad of constant) and S is skew
        let grid = DofGrid::new(side, side, n).unwrap();
        let ops = FemOperators::new(grid, &|_, _| [1.0, 0.0]).unwrap();
        let u: Vec<f64> = (0..ops.num_dofs()).map(|k| ((k as u64 ^ seed) % 97) as f64 / 97.0 - 0.5).collect();
        let s = ops.advection(&u).unwrap();
        let ones = vec![1.0; ops.num_dofs()];
        let col = s.matvec(&ones).unwrap();
        let row = s.transpose().matvec(&ones).unwrap();
        for (a, b) in col.iter().zip(&row) {
            prop_assert!(a.abs() < 1e-13 && b.abs() < 1e-13);
        }
        // the energy identity W^T S(U) W = 0
        let sw = s.matvec(&u).unwrap();
        let e: f64 = sw.iter().zip(&u).map(|(a, b)| a * b).sum();
        prop_assert!(e.abs() < 1e-13);
    }
}
