use dyadic_morrey::ensemble::{random_ensemble, EnsembleSpec};
use dyadic_morrey::estimation::{normalized_haar, probe_ratio};
use dyadic_morrey::*;

fn geo(n: usize, j0: i32, j1: i32) -> GridGeometry {
    GridGeometry::new(n, j0, j1).unwrap()
}

const PARAMS: (f64, f64) = (1.6, 1.2);

fn params() -> SpaceParams {
    SpaceParams::new(PARAMS.0, PARAMS.1).unwrap()
}

#[test]
fn probe_witness_reproduces_ratio() {
    let g = geo(1, 0, 6);
    let probes = random_ensemble(5, 30, &EnsembleSpec::new(g, -0.5, false));
    let a = random_ensemble(6, 1, &EnsembleSpec::new(g, -0.5, true))
        .pop()
        .unwrap();
    let alpha = 0.25;
    let target = FractionalParams::new(alpha, 1)
        .unwrap()
        .target(params())
        .unwrap();
    let op = |f: &GridFunction| commutator_direct(&a, f, alpha);
    let est = opnorm_probe(&op, params(), target, &probes).unwrap();
    let Witness::Ensemble(i) = est.witness else {
        panic!("probe witness must be an ensemble index");
    };
    let again = probe_ratio(&op, &probes[i], params(), target)
        .unwrap()
        .unwrap();
    assert!((again - est.probe_max).abs() <= 1e-9 * est.probe_max);
}

#[test]
fn cube_testing_witness_reproduces_lower_bound() {
    let g = geo(1, 0, 5);
    let a = random_ensemble(8, 1, &EnsembleSpec::new(g, -0.5, true))
        .pop()
        .unwrap();
    let alpha = 0.5;
    let target = FractionalParams::new(alpha, 1)
        .unwrap()
        .target(params())
        .unwrap();
    let t = cube_testing_lower(&a, alpha, params()).unwrap();
    let Witness::Haar { eps, cube } = &t.estimate.witness else {
        panic!("cube testing witness must be a Haar function");
    };
    let h = normalized_haar(*eps, cube, &g, params()).unwrap();
    assert!((morrey_value(&h, params()) - 1.0).abs() < 1e-12);
    let v = morrey_value(&commutator_direct(&a, &h, alpha).unwrap(), target);
    assert!((v - t.estimate.lower).abs() <= 1e-9 * t.estimate.lower);
    assert!((t.bmo_side - bmo_norm(&a)).abs() <= 1e-14);
}

#[test]
fn testing_a_haar_symbol_on_itself_is_positive() {
    let g = geo(1, 0, 5);
    let eps = SignPattern::new(&[1]).unwrap();
    let u = DyadicCube::new(2, vec![1]);
    let a = haar_function(eps, &u, &g).unwrap();
    let h = normalized_haar(eps, &u, &g, params()).unwrap();
    let target = FractionalParams::new(0.25, 1)
        .unwrap()
        .target(params())
        .unwrap();
    assert!(morrey_value(&commutator_direct(&a, &h, 0.25).unwrap(), target) > 0.0);
}

#[test]
fn cube_testing_rows_are_homogeneous() {
    let g = geo(1, 0, 5);
    let a = random_ensemble(9, 1, &EnsembleSpec::new(g, -0.5, true))
        .pop()
        .unwrap();
    let probes = random_ensemble(10, 20, &EnsembleSpec::new(g, -0.5, false));
    let symbols = [a.clone(), a.scale(2.0), a.scale(4.0)];
    let rows = cube_testing_report(&symbols, 0.25, params(), &probes).unwrap();
    for r in &rows[1..] {
        assert!((r.bmo_over_lower - rows[0].bmo_over_lower).abs() < 1e-12 * rows[0].bmo_over_lower);
        assert!((r.probe_over_bmo - rows[0].probe_over_bmo).abs() < 1e-12 * rows[0].probe_over_bmo);
    }
}

#[test]
fn finite_haar_expansion_has_zero_vmo_distance() {
    let g = geo(1, 0, 6);
    let eps = SignPattern::new(&[1]).unwrap();
    let mut a = GridFunction::zeros(g);
    for (k, cube) in [(0, 0), (1, 1), (2, 3), (3, 2)].iter().enumerate() {
        let q = DyadicCube::new(cube.0, vec![cube.1]);
        a = &a + &haar_function(eps, &q, &g).unwrap().scale(1.0 + k as f64);
    }
    let probes = random_ensemble(11, 10, &EnsembleSpec::new(g, -0.5, false));
    let grid: Vec<u32> = (0..=6).collect();
    let r = compactness_diagnostic(&a, 0.25, params(), &grid, &[0.0, 1.0, 2.0], &probes).unwrap();
    assert_eq!(r.vmo_distance.zero_from(), Some(3.0));
    assert!(r.vmo_distance.values()[2] > 0.0);
    assert!(r.high.is_nonincreasing(1e-12));
    assert!(r.vmo_distance.is_nonincreasing(1e-12));
}

#[test]
fn scale_ladder_keeps_a_positive_floor() {
    let g = geo(1, 0, 7);
    let eps = SignPattern::new(&[1]).unwrap();
    let mut a = GridFunction::zeros(g);
    for j in 0..7 {
        let q = DyadicCube::new(j, vec![0]);
        a = &a
            + &haar_function(eps, &q, &g)
                .unwrap()
                .scale(q.measure().sqrt());
    }
    let probes = random_ensemble(12, 5, &EnsembleSpec::new(g, -0.5, false));
    let grid: Vec<u32> = (0..=7).collect();
    let r = compactness_diagnostic(&a, 0.25, params(), &grid, &[0.0], &probes).unwrap();
    let v = r.vmo_distance.values();
    assert!(v[..6].iter().all(|&x| x >= 0.5), "{v:?}");
    assert_eq!(v[6], 0.0);
}

#[test]
fn base_indicator_bracket() {
    let g = geo(1, 0, 5);
    for (p, q) in [(2.0, 3.0), (1.5, 1.5), (1.2, 4.0)] {
        let r = duality_gap_report(
            &GridFunction::constant(g, 1.0),
            BlockParams::new(p, q).unwrap(),
        )
        .unwrap();
        assert!(r.upper <= 1.0 + 1e-9);
        assert!((r.lower - 1.0).abs() < 1e-6 && (r.upper - 1.0).abs() < 1e-6);
    }
}
