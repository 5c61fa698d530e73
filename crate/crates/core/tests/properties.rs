use erw_core::arrow_env::{ArrowColumn, TailedColumn};
use erw_core::oracle::{survival_equivalence_on, tau_on, z_equals_w_on, Outcome};
use erw_core::walk::{edge_crossings, left_crossings, run_walk, StopRule, Termination};
use erw_core::zproc::{u_minus, u_plus, z_run, Direction, UResult};
use erw_core::{build_environment, realize, ArrowEnvironment, ArrowTable, EnvFamilySpec};
use proptest::prelude::*;

fn table() -> impl Strategy<Value = ArrowTable> {
    (-3i64..=0, 0i64..=4, 1u32..=5).prop_flat_map(|(lo, width, depth)| {
        let len = ((width + 1) as usize) * depth as usize;
        proptest::collection::vec(any::<bool>(), len)
            .prop_map(move |bits| ArrowTable::new(lo, lo + width, depth, bits).unwrap())
    })
}

fn column() -> impl Strategy<Value = Vec<bool>> {
    proptest::collection::vec(any::<bool>(), 0..12)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn shift_is_translation(t in table(), z in -5i64..=5, x in -8i64..=8, n in 1u32..=9) {
        let a: ArrowEnvironment = t.into();
        prop_assert_eq!(a.shift(z).arrow_at(x, n).unwrap(), a.arrow_at(x + z, n).unwrap());
    }

    #[test]
    fn walk_commutes_with_shift(t in table(), z in -5i64..=5, x in -3i64..=3) {
        let a: ArrowEnvironment = t.into();
        let stop = StopRule::horizon(60);
        let shifted = run_walk(&a.shift(z), x, &stop);
        let direct = run_walk(&a, x + z, &stop);
        let moved: Vec<i64> = shifted.positions.iter().map(|p| p + z).collect();
        prop_assert_eq!(moved, direct.positions);
    }

    #[test]
    fn walk_on_reflection_is_mirrored(t in table(), x in -3i64..=3) {
        let a: ArrowEnvironment = t.into();
        let stop = StopRule::horizon(60);
        let mirrored = run_walk(&a.reflect(), x, &stop);
        let direct = run_walk(&a, -x, &stop);
        let back: Vec<i64> = mirrored.positions.iter().map(|p| -p).collect();
        prop_assert!(direct.replays_on(&a));
        prop_assert_eq!(back, direct.positions);
    }

    #[test]
    fn reflection_swaps_z_processes(t in table(), y in 1u64..=4) {
        let a: ArrowEnvironment = t.into();
        let minus = z_run(&a, Direction::Minus, y, 8, 10_000).unwrap();
        let plus = z_run(&a.reflect(), Direction::Plus, y, 8, 10_000).unwrap();
        prop_assert_eq!(minus.values, plus.values);
        prop_assert_eq!(minus.status, plus.status);
    }

    #[test]
    fn table_identities_hold_on_wider_windows(t in table()) {
        let (_, hi) = t.window();
        let z_steps = (hi.max(0) + 2) as u64;
        for (name, outcome) in [
            ("z_equals_w", z_equals_w_on(&t, 5_000, z_steps)),
            ("survival", survival_equivalence_on(&t, 5_000, z_steps)),
            ("tau", tau_on(&t, 5_000)),
        ] {
            prop_assert!(!matches!(outcome, Outcome::Violation(_)), "{} on\n{}", name, t);
        }
    }

    #[test]
    fn crossings_count_consumed_zeros(t in table()) {
        let (lo, hi) = t.window();
        prop_assume!(lo <= 0);
        let a: ArrowEnvironment = t.into();
        let trace = run_walk(&a, 0, &StopRule::target(-1, 5_000).with_window(lo, hi));
        if let Termination::HitTarget { step, .. } = trace.termination {
            let z = z_run(&a, Direction::Plus, 1, (hi + 2) as u64, 10_000).unwrap();
            for n in 1..=hi.max(1) {
                let w = left_crossings(&trace, n, step);
                prop_assert_eq!(edge_crossings(&trace, n, step), 2 * w);
                prop_assert_eq!(Some(w), z.value_at(n as usize), "n = {}", n);
            }
        }
    }

    #[test]
    fn u_transforms_are_monotone_in_the_column(b in column(), flips in column(), x in 0u64..=8) {
        // b' >= b pointwise on the prefix
        let up: Vec<bool> = b.iter().zip(flips.iter().chain(std::iter::repeat(&false))).map(|(&p, &f)| p | f).collect();
        let (lo, hi) = (TailedColumn(&b), TailedColumn(&up));
        let (UResult::Finite(u), UResult::Finite(v)) = (u_plus(&lo, x, 10_000), u_plus(&hi, x, 10_000)) else {
            panic!("tailed columns are non-degenerate");
        };
        prop_assert!(u <= v);
        let (UResult::Finite(u), UResult::Finite(v)) = (u_minus(&lo, x, 10_000), u_minus(&hi, x, 10_000)) else {
            panic!("tailed columns are non-degenerate");
        };
        prop_assert!(u >= v);
    }

    #[test]
    fn u_plus_counts_ones_before_the_xth_zero(b in column(), x in 1u64..=8) {
        let col = TailedColumn(&b);
        let mut zeros = 0;
        let mut ones = 0;
        let mut i = 1;
        while zeros < x {
            if col.bit(i) { ones += 1 } else { zeros += 1 }
            i += 1;
        }
        prop_assert_eq!(u_plus(&col, x, 10_000), UResult::Finite(ones));
    }

    #[test]
    fn z_run_is_deterministic(seed in any::<u64>(), y in 1u64..=5) {
        let env = build_environment(&EnvFamilySpec::IidBounded { m: 2, p: 0.7 }, seed).unwrap();
        let a = realize(env, seed ^ 1);
        prop_assert_eq!(z_run(&a, Direction::Plus, y, 40, 100_000), z_run(&a, Direction::Plus, y, 40, 100_000));
    }
}
