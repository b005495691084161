use dyadic_morrey::ensemble::{random_ensemble, EnsembleSpec};
use dyadic_morrey::*;
use proptest::prelude::*;

fn geometry() -> impl Strategy<Value = GridGeometry> {
    prop_oneof![
        (-2i32..=1, 1i32..=6).prop_map(|(j0, d)| GridGeometry::new(1, j0, j0 + d).unwrap()),
        (-1i32..=1, 1i32..=3).prop_map(|(j0, d)| GridGeometry::new(2, j0, j0 + d).unwrap()),
    ]
}

fn draw(g: GridGeometry, seed: u64, theta: f64, mean_zero: bool) -> GridFunction {
    random_ensemble(seed, 1, &EnsembleSpec::new(g, theta, mean_zero))
        .pop()
        .unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn round_trip(g in geometry(), seed in any::<u64>(), theta in -1.5f64..0.5) {
        let f = draw(g, seed, theta, false);
        let back = inverse_transform(&forward_transform(&f));
        prop_assert!(back.relative_l2_distance(&f).unwrap() < 1e-12);
    }

    #[test]
    fn parseval(g in geometry(), seed in any::<u64>()) {
        let f = draw(g, seed, -0.5, false);
        let c = forward_transform(&f);
        let lhs = lq_norm(&f, 2.0, None).unwrap().powi(2);
        let rhs = c.base_mean().powi(2) * g.base_measure() + c.energy();
        prop_assert!(rel(lhs, rhs) < 1e-10);
    }

    #[test]
    fn local_oscillation_identity(g in geometry(), seed in any::<u64>(), pick in any::<prop::sample::Index>()) {
        let f = draw(g, seed, -0.5, false);
        let cubes: Vec<DyadicCube> = g.all_cubes().collect();
        let r = pick.get(&cubes);
        let c = forward_transform(&f);
        let energy: f64 = c.entries().filter(|(_, q, _)| r.contains(q)).map(|(_, _, v)| v * v).sum();
        let osc = oscillation_norm(&f, r, 2.0).unwrap().powi(2);
        prop_assert!((osc - energy).abs() <= 1e-10 * (1.0 + osc));
    }

    #[test]
    fn eigen_relation(g in geometry(), pick in any::<prop::sample::Index>(), alpha_frac in 0.05f64..0.95) {
        let alpha = alpha_frac * g.dim() as f64;
        let cubes: Vec<DyadicCube> = g.all_cubes().filter(|q| q.level() < g.finest_level()).collect();
        let q = pick.get(&cubes);
        for eps in SignPattern::all(g.dim()) {
            let h = haar_function(eps, q, &g).unwrap();
            let expect = h.scale(q.measure().powf(alpha / g.dim() as f64));
            let got = fractional_integral(&h, alpha).unwrap();
            prop_assert!(got.max_abs_difference(&expect).unwrap() < 1e-12 * expect.max_abs());
        }
    }

    #[test]
    fn nonhomogeneous_expansion(g in geometry(), seed in any::<u64>(), k_off in 0i32..8) {
        let f = draw(g, seed, -0.5, false);
        let k = g.coarsest_level() + k_off.min(g.depth() as i32);
        let c = forward_transform(&f);
        let mut sum = expectation_projection(&f, k).unwrap();
        for j in k..g.finest_level() {
            sum = &sum + &level_slice(&c, j, None).unwrap();
        }
        prop_assert!(sum.relative_l2_distance(&f).unwrap() < 1e-12);
    }

    #[test]
    fn morrey_with_equal_exponents_is_lebesgue(g in geometry(), seed in any::<u64>(), q in 1.0f64..4.0) {
        let f = draw(g, seed, -0.5, false);
        let r = morrey_norm(&f, SpaceParams::new(q, q).unwrap());
        prop_assert!(rel(r.value, lq_norm(&f, q, None).unwrap()) < 1e-12);
        prop_assert_eq!(r.witness, g.base_cube());
    }

    #[test]
    fn bmo_is_a_seminorm(g in geometry(), seed in any::<u64>(), c in -5.0f64..5.0, s in -3.0f64..3.0) {
        let f = draw(g, seed, -0.5, false);
        let b = bmo_norm(&f);
        prop_assert!((bmo_norm(&f.map(|v| v + c)) - b).abs() <= 1e-12 * (1.0 + b));
        prop_assert!((bmo_norm(&f.scale(s)) - s.abs() * b).abs() <= 1e-12 * (1.0 + b));
        let m = sharp_maximal(&f);
        prop_assert!((m.max_abs() - b).abs() <= 1e-14 * (1.0 + b));
    }

    #[test]
    fn decomposition_identity(g in geometry(), seed in any::<u64>(), alpha_frac in 0.05f64..0.95) {
        let alpha = alpha_frac * g.dim() as f64;
        let a = draw(g, seed, -0.5, true);
        let f = draw(g, seed.wrapping_add(1), -0.5, true);
        let direct = commutator_direct(&a, &f, alpha).unwrap();
        let mut sum = GridFunction::zeros(g);
        for eps in SignPattern::all(g.dim()) {
            sum = &sum + &commutator_terms(&a, &f, alpha, eps).unwrap().combined();
        }
        prop_assert!(sum.relative_l2_distance(&direct).unwrap() < 1e-9);
    }

    #[test]
    fn fractional_integrals_compose(g in geometry(), seed in any::<u64>(), a in 0.05f64..0.45, b in 0.05f64..0.45) {
        let n = g.dim() as f64;
        let (alpha, beta) = (a * n, b * n);
        let f = draw(g, seed, -0.5, false);
        let twice = fractional_integral(&fractional_integral(&f, beta).unwrap(), alpha).unwrap();
        let once = fractional_integral(&f, alpha + beta).unwrap();
        prop_assert!(twice.max_abs_difference(&once).unwrap() <= 1e-12 * (1.0 + once.max_abs()));
    }

    #[test]
    fn commutator_tails_reassemble(g in geometry(), seed in any::<u64>(), cut in -3i32..=4) {
        let a = draw(g, seed, -0.5, true);
        let f = draw(g, seed.wrapping_add(1), -0.5, false);
        let direct = commutator_direct(&a, &f, 0.5).unwrap();
        let high = commutator_tail_high(&a, &f, 0.5, cut).unwrap().function;
        let below = haar_band(&direct, i64::MIN, cut as i64 - 1).function;
        let mean = direct.integral() / g.base_measure();
        let whole = &(&high + &below) + &GridFunction::constant(g, mean);
        prop_assert!(whole.max_abs_difference(&direct).unwrap() <= 1e-12 * (1.0 + direct.max_abs()));
        if cut > 0 {
            let low = commutator_tail_low(&a, &f, 0.5, cut).unwrap().function;
            let above = haar_band(&direct, 1 - cut as i64, i64::MAX).function;
            let whole = &(&low + &above) + &GridFunction::constant(g, mean);
            prop_assert!(whole.max_abs_difference(&direct).unwrap() <= 1e-12 * (1.0 + direct.max_abs()));
        }
    }

    #[test]
    fn truncation_distances_are_monotone(seed in any::<u64>()) {
        let g = GridGeometry::new(1, -2, 5).unwrap();
        let a = draw(g, seed, -0.5, true);
        let c = forward_transform(&a);
        let mut vmo = Vec::new();
        for l in 0..=5u32 {
            let kept = scale_truncate(&a, l).function;
            let mut rest = c.filter(|j, _, _| j.unsigned_abs() > l);
            rest.set_base_mean(0.0);
            let rest = inverse_transform(&rest);
            prop_assert!((&kept + &rest).max_abs_difference(&a).unwrap() <= 1e-12 * (1.0 + a.max_abs()));
            vmo.push(bmo_norm(&rest));
        }
        prop_assert!(vmo.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
        for level in -2..5 {
            let spatial: Vec<f64> = [0.0, 1.0, 2.0, 4.0, 8.0]
                .iter()
                .map(|&r| bmo_norm(&spatial_truncate(&a, level, r).unwrap()))
                .collect();
            prop_assert!(spatial.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
        }
    }

    #[test]
    fn majorant_never_violated(seed in any::<u64>(), theta in -1.5f64..0.5, alpha in prop::sample::select(vec![0.25, 0.5])) {
        let g = GridGeometry::new(1, 0, 7).unwrap();
        let f = draw(g, seed, theta, true);
        let params = SpaceParams::new(1.6, 1.2).unwrap();
        for m in pointwise_majorant(&f, alpha, params).unwrap() {
            prop_assert_eq!(m.violations(1e-12), 0);
        }
    }

    #[test]
    fn identity_probe(g in geometry(), seed in any::<u64>()) {
        let fs = random_ensemble(seed, 4, &EnsembleSpec::new(g, -0.5, false));
        let params = SpaceParams::new(3.0, 1.5).unwrap();
        let id = |f: &GridFunction| Ok(f.clone());
        let est = opnorm_probe(&id, params, params, &fs).unwrap();
        prop_assert!((est.probe_max - 1.0).abs() < 1e-14);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn block_bounds_bracket(seed in any::<u64>(), theta in -1.0f64..0.0) {
        let g = GridGeometry::new(1, 0, 5).unwrap();
        let params = BlockParams::new(2.0, 3.0).unwrap();
        let fs = random_ensemble(seed, 3, &EnsembleSpec::new(g, theta, false));
        let up = block_norm_upper(&fs[0], params).unwrap();
        for (_, block) in &up.decomposition.terms {
            prop_assert!(Block::new(block.support().clone(), block.data().clone(), params).is_ok());
        }
        prop_assert!(up.decomposition.residual() < 1e-9);
        prop_assert!((up.decomposition.cost() - up.value).abs() < 1e-12 * up.value);
        let low = block_norm_lower(&fs[0], params);
        prop_assert!(low.value <= up.value + 1e-9);
        let conj = params.conjugate();
        for g2 in &fs[1..] {
            let lhs = pairing(&fs[0], g2).unwrap().abs();
            prop_assert!(lhs <= up.value * morrey_value(g2, conj) * (1.0 + 1e-12));
        }
        let sum = block_norm_upper(&(&fs[0] + &fs[1]), params).unwrap().value;
        let parts = up.value + block_norm_upper(&fs[1], params).unwrap().value;
        prop_assert!(sum <= parts + 1e-6, "upper({}) > {}", sum, parts);
    }
}
