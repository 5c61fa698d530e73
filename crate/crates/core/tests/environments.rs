use erw_core::cookie_env::stationary_distribution;
use erw_core::{build_environment, EnvFamilySpec};

fn chain() -> EnvFamilySpec {
    EnvFamilySpec::MarkovModulated {
        states: vec![vec![0.9, 0.8], vec![0.3], vec![0.6, 0.6, 0.2]],
        matrix: vec![vec![0.7, 0.2, 0.1], vec![0.3, 0.3, 0.4], vec![0.5, 0.1, 0.4]],
        window: 20,
    }
}

fn histogram(site: i64, seeds: u64) -> Vec<f64> {
    let mut h = vec![0.0; 3];
    for seed in 0..seeds {
        let env = build_environment(&chain(), seed).unwrap();
        h[env.state_at(site).unwrap()] += 1.0 / seeds as f64;
    }
    h
}

fn tv(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

#[test]
fn one_site_marginals_are_stationary() {
    let EnvFamilySpec::MarkovModulated { matrix, .. } = chain() else {
        unreachable!()
    };
    let pi = stationary_distribution(&matrix).unwrap();
    let seeds = 100_000;
    let at0 = histogram(0, seeds);
    let at17 = histogram(17, seeds);
    let at_neg = histogram(-17, seeds);
    let beyond = histogram(45, seeds);
    assert!(tv(&at0, &at17) <= 0.02, "{at0:?} vs {at17:?}");
    for h in [&at0, &at17, &at_neg, &beyond] {
        assert!(tv(h, &pi) <= 0.02, "{h:?} vs {pi:?}");
    }
}

#[test]
fn stationary_distribution_solves_balance() {
    let EnvFamilySpec::MarkovModulated { matrix, .. } = chain() else {
        unreachable!()
    };
    let pi = stationary_distribution(&matrix).unwrap();
    assert!((pi.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    for j in 0..3 {
        let flow: f64 = (0..3).map(|i| pi[i] * matrix[i][j]).sum();
        assert!((flow - pi[j]).abs() < 1e-10);
    }
}

#[test]
fn cookies_are_pure_and_elliptic() {
    for spec in [
        chain(),
        EnvFamilySpec::IidBounded { m: 3, p: 0.8 },
        EnvFamilySpec::SingleCookie { p: 0.9 },
        EnvFamilySpec::ConstantProfile {
            profile: vec![0.7, 0.3],
        },
    ] {
        let env = build_environment(&spec, 99).unwrap();
        for i in 0..10_000u64 {
            let x = (i as i64 % 301) - 150;
            let n = (i % 7) as u32 + 1;
            let v = env.cookie_at(x, n).unwrap();
            assert!(v > 0.0 && v < 1.0);
            if i < 10 {
                for _ in 0..1_000 {
                    assert_eq!(env.cookie_at(x, n).unwrap().to_bits(), v.to_bits());
                }
            }
        }
    }
}
