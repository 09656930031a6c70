use biharm_core::catalog::{instantiate, sample_points, CatalogEntry, Params, ENTRY_IDS};
use biharm_core::fields::{bitension, differential, eqf_residual, hwc_check, p_tension, tension, SmoothMap};
use biharm_core::geometry::MetricPatch;
use biharm_core::morphism::condition_eqc;
use proptest::prelude::*;

const SEED: u64 = 4242;
const CONFORMAL_N4: [(&str, f64); 7] = [
    ("inversion", 1.0),
    ("stereo_identity", 1.0),
    ("stereo_identity", -1.0),
    ("ball_identity", -1.0),
    ("half_identity", 1.0),
    ("h4_flat", 1.0),
    ("conf_flat", 1.0),
];

fn entry(id: &str, n: usize, eps: f64) -> CatalogEntry {
    instantiate(id, &Params { n, eps, ..Params::default() }).unwrap()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn diff_norm(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn p_tension_at_two_is_tension(which in 0..ENTRY_IDS.len(), seed in any::<u64>()) {
        let e = instantiate(ENTRY_IDS[which], &Params::default()).unwrap();
        let x = &sample_points(&e, 1, seed)[0];
        let tau = tension(&e.map, &e.source_metric, &e.target_metric, x, 0).unwrap();
        let tp = p_tension(&e.map, &e.source_metric, &e.target_metric, 2.0, x).unwrap();
        prop_assert!(diff_norm(&tp, &tau.tau) < 1e-13 * norm(&tau.tau).max(1.0));
        prop_assert!(tau.tau_norm_sq >= 0.0);
    }

    #[test]
    fn conformality_data_is_consistent(which in 0..ENTRY_IDS.len(), seed in any::<u64>()) {
        let e = instantiate(ENTRY_IDS[which], &Params::default()).unwrap();
        let x = &sample_points(&e, 1, seed)[0];
        let c = hwc_check(&e.map, &e.source_metric, &e.target_metric, x, 1e-8).unwrap();
        prop_assert!(c.dilation_sq >= 0.0);
        prop_assert_eq!(c.is_regular, c.dilation_sq > 1e-12);
        if c.is_hwc {
            // |dφ|² = n λ²
            let d = differential(&e.map, x).unwrap();
            let g_inv = e.source_metric.jets(x, 0).unwrap().inv_values();
            let h = e.target_metric.jets(&e.map.eval(x).unwrap(), 0).unwrap().g_values();
            let energy = (&h * &d * &g_inv * d.transpose()).trace();
            let n = e.map.target_dim() as f64;
            prop_assert!((energy - n * c.dilation_sq).abs() < 1e-8 * energy.max(1.0));
        }
    }
}

#[test]
fn conformal_maps_in_dimension_four_are_four_harmonic() {
    for (id, eps) in CONFORMAL_N4 {
        let e = entry(id, 4, eps);
        for x in sample_points(&e, 10, SEED) {
            let tau = tension(&e.map, &e.source_metric, &e.target_metric, &x, 0).unwrap();
            let lambda_sq = hwc_check(&e.map, &e.source_metric, &e.target_metric, &x, 1e-8).unwrap().dilation_sq;
            let scale = (lambda_sq * norm(&tau.tau)).max(1.0);
            let t4 = p_tension(&e.map, &e.source_metric, &e.target_metric, 4.0, &x).unwrap();
            let eqc = condition_eqc(&e.map, &e.source_metric, &e.target_metric, &x).unwrap();
            assert!(norm(&t4) < 1e-9 * 4.0 * scale, "{id} tau_4 {t4:?}");
            assert!(norm(&eqc) < 1e-9 * scale, "{id} eqc {eqc:?}");
        }
    }
}

#[test]
fn bitension_and_eqf_vanish_together() {
    for n in [3, 4, 5] {
        for (id, eps) in CONFORMAL_N4 {
            let e = entry(id, n, eps);
            for x in sample_points(&e, 20, SEED) {
                let b = bitension(&e.map, &e.source_metric, &e.target_metric, &x).unwrap().normalized;
                let q = eqf_residual(&e.map, &e.source_metric, &e.target_metric, &x).unwrap().normalized;
                assert_eq!(b < 1e-8, q < 1e-8, "{id} n={n} at {x:?}: {b:e} vs {q:e}");
            }
        }
    }
}

#[test]
fn harmonic_radial_projection_is_biharmonic() {
    let e = instantiate("radial", &Params::default()).unwrap();
    for x in sample_points(&e, 10, SEED) {
        let b = bitension(&e.map, &e.source_metric, &e.target_metric, &x).unwrap();
        assert!(b.tension.tau_norm_sq.sqrt() < 1e-9);
        assert!(b.norm < 1e-9);
    }
}

#[test]
fn dimension_dichotomy() {
    for (id, eps) in [
        ("inversion", 1.0),
        ("stereo_identity", 1.0),
        ("stereo_identity", -1.0),
        ("ball_identity", -1.0),
        ("half_identity", 1.0),
    ] {
        for n in [3, 4, 5] {
            let e = entry(id, n, eps);
            for x in sample_points(&e, 20, SEED) {
                let r = bitension(&e.map, &e.source_metric, &e.target_metric, &x).unwrap().normalized;
                if n == 4 {
                    assert!(r < 1e-8, "{id} n=4: {r:e}");
                } else {
                    assert!(r > 1e-2, "{id} n={n}: {r:e}");
                }
            }
        }
    }
}

#[test]
fn constant_maps_are_critical_and_harmonic() {
    let map = SmoothMap::constant(3, vec![0.5, -1.0]);
    let g = MetricPatch::euclidean(3);
    let h = MetricPatch::euclidean(2);
    let x = [0.2, 0.1, -0.3];
    let c = hwc_check(&map, &g, &h, &x, 1e-8).unwrap();
    assert!(c.is_hwc && !c.is_regular);
    assert_eq!(c.dilation_sq, 0.0);
    assert!(norm(&tension(&map, &g, &h, &x, 0).unwrap().tau) == 0.0);
}
