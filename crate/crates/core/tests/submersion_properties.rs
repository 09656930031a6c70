use biharm_core::catalog::{instantiate, sample_points, CatalogEntry, Params};
use biharm_core::fields::differential;
use biharm_core::jets::Jet;
use biharm_core::submersion::{adapted_frame, constant_field, tension_via_x};

const SEED: u64 = 31;

fn submersions() -> Vec<CatalogEntry> {
    let mut out: Vec<CatalogEntry> = [4, 5, 6]
        .iter()
        .map(|&m| instantiate("radial", &Params { m, ..Params::default() }).unwrap())
        .collect();
    for (c1, c2) in [(1.0, 1.0), (2.0, 0.5), (-1.0, 3.0)] {
        out.push(instantiate("twisted_projection", &Params { c1, c2, ..Params::default() }).unwrap());
    }
    out
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[test]
fn frames_are_orthonormal_and_adapted() {
    for e in submersions() {
        for x in sample_points(&e, 30, SEED) {
            let frame = adapted_frame(&e.map, &e.source_metric, &x).unwrap();
            let (h, v) = (frame.horizontal_values(), frame.vertical_values());
            assert_eq!(h.len(), e.map.target_dim());
            assert_eq!(h.len() + v.len(), e.map.source_dim());
            let all: Vec<&Vec<f64>> = h.iter().chain(&v).collect();
            for (i, a) in all.iter().enumerate() {
                for (j, b) in all.iter().enumerate() {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((frame.inner(a, b) - want).abs() < 1e-10, "{}", e.id);
                }
            }
            let d = differential(&e.map, &x).unwrap();
            for u in &v {
                let image = &d * nalgebra::DVector::from_column_slice(u);
                assert!(image.amax() < 1e-10, "{} vertical vector not in the kernel", e.id);
            }
        }
    }
}

#[test]
fn radial_fibres_are_rays() {
    let e = instantiate("radial", &Params::default()).unwrap();
    for x in sample_points(&e, 30, SEED) {
        let frame = adapted_frame(&e.map, &e.source_metric, &x).unwrap();
        let v = &frame.vertical_values()[0];
        let cos = v.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>() / (norm(v) * norm(&x));
        assert!((cos.abs() - 1.0).abs() < 1e-10);
    }
}

#[test]
fn mean_curvatures_lie_in_their_distributions() {
    for e in submersions() {
        for x in sample_points(&e, 30, SEED) {
            let frame = adapted_frame(&e.map, &e.source_metric, &x).unwrap();
            let mc = frame.mean_curvatures().unwrap();
            assert!(norm(&frame.vertical_part(&mc.mu)) < 1e-10, "{}", e.id);
            assert!(norm(&frame.horizontal_part(&mc.nu)) < 1e-10, "{}", e.id);
        }
    }
}

#[test]
fn b_on_unit_vertical_is_fibre_mean_curvature() {
    for e in submersions() {
        assert_eq!(e.map.source_dim() - e.map.target_dim(), 1);
        for x in sample_points(&e, 30, SEED) {
            let frame = adapted_frame(&e.map, &e.source_metric, &x).unwrap();
            let v = frame.vertical_values()[0].clone();
            let field = constant_field(&v, &x).unwrap();
            let t = frame.fundamental_tensors(&field, &field).unwrap();
            let mu = frame.mean_curvatures().unwrap().mu;
            let diff: Vec<f64> = t.b.iter().zip(&mu).map(|(a, b)| a - b).collect();
            assert!(norm(&diff) < 1e-9, "{}: {:?} vs {:?}", e.id, t.b, mu);
        }
    }
}

/// Extension of `v` at `x` that varies to first order: `v + L(y − x)`.
fn tilted_field(v: &[f64], x: &[f64], seed: usize) -> Vec<Jet> {
    let vars = Jet::variables(x, 1).unwrap();
    v.iter()
        .enumerate()
        .map(|(a, &c)| {
            let mut acc = vars[0].lift(c);
            for (i, y) in vars.iter().enumerate() {
                let slope = (((a + 3 * i + seed) % 7) as f64 - 3.0) * 0.37;
                acc += &(&y.add_scalar(-x[i]) * slope);
            }
            acc
        })
        .collect()
}

#[test]
fn fundamental_tensors_do_not_depend_on_the_extension() {
    for e in submersions() {
        let m = e.map.source_dim();
        for (k, x) in sample_points(&e, 10, SEED).into_iter().enumerate() {
            let frame = adapted_frame(&e.map, &e.source_metric, &x).unwrap();
            let ev: Vec<f64> = (0..m).map(|i| 0.3 + 0.1 * i as f64).collect();
            let fv: Vec<f64> = (0..m).map(|i| 0.7 - 0.25 * i as f64).collect();
            let plain = frame
                .fundamental_tensors(&constant_field(&ev, &x).unwrap(), &constant_field(&fv, &x).unwrap())
                .unwrap();
            let tilted = frame
                .fundamental_tensors(&tilted_field(&ev, &x, k), &tilted_field(&fv, &x, k + 1))
                .unwrap();
            for (p, q) in plain.a.iter().chain(&plain.b).zip(tilted.a.iter().chain(&tilted.b)) {
                assert!((p - q).abs() < 1e-10, "{}: {p} vs {q}", e.id);
            }
        }
    }
}

#[test]
fn tension_is_the_image_of_x() {
    let entries: Vec<CatalogEntry> = ["inversion", "stereo_identity", "ball_identity", "half_identity", "conf_flat"]
        .iter()
        .flat_map(|id| [3, 4, 5].map(|n| instantiate(id, &Params { n, ..Params::default() }).unwrap()))
        .chain(submersions())
        .collect();
    for e in entries {
        for x in sample_points(&e, 10, SEED) {
            let t = tension_via_x(&e.map, &e.source_metric, &e.target_metric, &x).unwrap();
            assert!(t.mismatch < 1e-9 * norm(&t.tau).max(1.0), "{}: {:e}", e.id, t.mismatch);
        }
    }
}
