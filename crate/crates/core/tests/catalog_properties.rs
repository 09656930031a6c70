use biharm_core::catalog::{instantiate, list_entries, oracle_residual, sample_points, twisted_f, Params, ENTRY_IDS};
use biharm_core::jets::Jet;
use biharm_core::Error;
use proptest::prelude::*;

#[test]
fn twisted_warping_solves_the_ode() {
    for (c1, c2) in [(1.0, 1.0), (2.0, 0.5), (-1.0, 3.0), (0.5, 2.0)] {
        let e = instantiate("twisted_projection", &Params { c1, c2, ..Params::default() }).unwrap();
        for k in 0..=48 {
            let t = 0.2 + 0.1 * k as f64;
            let x = if c1 > 0.0 { t } else { -t };
            let p = [x, 0.3, -0.7];
            let ode = oracle_residual(&e, "ode", &p).unwrap().as_scalar().unwrap();
            assert!(ode.abs() < 1e-10, "c1={c1} x={x}: {ode:e}");
            // g_zz = β², so ∂_x g_zz / (2 g_zz) = β'/β
            let g = e.source_metric.components(&Jet::variables(&p, 1).unwrap()).unwrap();
            let log_deriv = g[8].gradient()[0] / (2.0 * g[8].value());
            let f = twisted_f(x, c1);
            assert!((log_deriv - f).abs() < 1e-10 * f.abs().max(1.0), "c1={c1} x={x}");
            let beta = oracle_residual(&e, "beta", &p).unwrap().as_scalar().unwrap();
            assert!(beta > 0.0 && (beta * beta - g[8].value()).abs() < 1e-12 * beta * beta);
        }
    }
}

#[test]
fn listing_is_complete_and_consistent() {
    let infos = list_entries();
    assert_eq!(infos.len(), ENTRY_IDS.len());
    for info in infos {
        let ex = info.expected;
        if let (Some(h), Some(b), Some(p)) = (ex.harmonic, ex.biharmonic, ex.proper) {
            assert_eq!(p, b && !h, "{}", info.id);
        }
        if ex.harmonic == Some(true) {
            assert_eq!(ex.biharmonic, Some(true), "{}", info.id);
        }
        assert!(!info.oracles.is_empty());
    }
}

#[test]
fn invalid_parameters_are_rejected() {
    assert!(matches!(instantiate("nope", &Params::default()), Err(Error::UnknownEntry(_))));
    for p in [
        Params { n: 1, ..Params::default() },
        Params { n: 9, ..Params::default() },
        Params { delta: -1.0, ..Params::default() },
    ] {
        assert!(instantiate("inversion", &p).is_err());
    }
    assert!(instantiate("radial", &Params { m: 2, ..Params::default() }).is_err());
    assert!(instantiate("twisted_projection", &Params { c1: 0.0, ..Params::default() }).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn sampling_is_deterministic_and_in_domain(which in 0..ENTRY_IDS.len(), seed in any::<u64>(), count in 1usize..30) {
        let e = instantiate(ENTRY_IDS[which], &Params::default()).unwrap();
        let a = sample_points(&e, count, seed);
        prop_assert_eq!(&a, &sample_points(&e, count, seed));
        prop_assert_eq!(a.len(), count);
        for x in &a {
            prop_assert!(e.region.contains(x));
            prop_assert!(e.map.contains(x));
            prop_assert!(e.source_metric.contains(x));
        }
    }
}
