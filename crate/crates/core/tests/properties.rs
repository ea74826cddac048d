use proptest::prelude::*;
use translator_lab::hermann::{Layout, Rank2Model};
use translator_lab::ode::{advance, IntegratorConfig};
use translator_lab::rank1::{
    eta, h1_bound, psi_rhs, region_sign, solve_maximal, x_star, BoundValue, TranslatorConfig, TIE_GUARD,
};
use translator_lab::spaces::RankOneSpace;

fn layout_strategy() -> impl Strategy<Value = (Layout, usize)> {
    prop_oneof![Just((Layout::A1xA1, 2)), Just((Layout::A2, 3)), Just((Layout::B2, 4)), Just((Layout::G2, 6))]
}

/// Point of the guarded chamber from unit-square coordinates, or `None`.
fn chamber_point(model: &Rank2Model, u: f64, v: f64) -> Option<[f64; 2]> {
    let (lo, hi) = model.bounding_box();
    let x = [lo[0] + u * (hi[0] - lo[0]), lo[1] + v * (hi[1] - lo[1])];
    (model.in_chamber(x) && model.margin(x) > 1e-2).then_some(x)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn integrator_runs_backwards_to_its_start(y0 in -2.0..2.0f64, v0 in -2.0..2.0f64, t_end in 0.1..5.0f64) {
        let cfg = IntegratorConfig { rtol: 1e-11, atol: 1e-13, ..IntegratorConfig::default() };
        let rhs = |t: f64, y: &[f64], dy: &mut [f64]| {
            dy[0] = y[1];
            dy[1] = -y[0] - 0.1 * t.sin() * y[1];
        };
        let (mid, _) = advance(rhs, 0.0, &[y0, v0], t_end, &cfg).unwrap();
        let (back, _) = advance(rhs, t_end, &mid, 0.0, &cfg).unwrap();
        prop_assert!((back[0] - y0).abs() < 1e-8 && (back[1] - v0).abs() < 1e-8, "{back:?} vs {y0} {v0}");
    }

    #[test]
    fn region_sign_predicts_psi_rhs(n in 1u32..8, lx in -3.0..2.0f64, angle in -1.55..1.55f64) {
        let x = 10f64.powf(lx);
        let psi = angle.tan();
        prop_assume!((psi - eta(n, x).unwrap()).abs() > 10.0 * TIE_GUARD);
        let rhs = psi_rhs(n, x, psi).unwrap();
        prop_assert_eq!(region_sign(n, x, psi).unwrap(), rhs.partial_cmp(&0.0).unwrap() as i8);
    }

    #[test]
    fn comparison_bound_starts_at_the_initial_value(n in 1u32..6, frac in 0.05..0.95f64, lift in 0.0..5.0f64) {
        let x0 = frac * x_star(n);
        let psi0 = eta(n, x0).unwrap() + lift;
        match h1_bound(n, x0, x0, psi0).unwrap() {
            BoundValue::Finite(b) => prop_assert!((b - psi0).abs() <= 1e-12 * psi0.abs().max(1.0)),
            BoundValue::Exceeded => prop_assert!(false, "bound exceeded at x0"),
        }
    }

    #[test]
    fn vertical_translation_leaves_slopes_unchanged(frac in 0.05..0.95f64, angle in -1.5..1.5f64, c in -50.0..50.0f64) {
        let sp = RankOneSpace::quaternionic_projective(1).unwrap();
        let cfg = TranslatorConfig::default();
        let s0 = frac * sp.alpha();
        let a = solve_maximal(&sp, s0, 0.0, angle.tan(), &cfg).unwrap();
        let b = solve_maximal(&sp, s0, c, angle.tan(), &cfg).unwrap();
        prop_assert_eq!(a.trace.samples().len(), b.trace.samples().len());
        for (p, q) in a.trace.samples().iter().zip(b.trace.samples()) {
            prop_assert_eq!(p.y[0].to_bits(), q.y[0].to_bits());
        }
        let (lo, hi) = a.s_range();
        let s = 0.5 * (lo + hi);
        prop_assert!((b.value(s).unwrap() - a.value(s).unwrap() - c).abs() < 1e-12 * c.abs().max(1.0));
    }

    #[test]
    fn chamber_field_is_a_gradient((layout, _) in layout_strategy(), u in 0.0..1.0f64, v in 0.0..1.0f64) {
        let model = Rank2Model::from_layout(layout, None, None).unwrap();
        let Some(x) = chamber_point(&model, u, v) else { return Ok(()) };
        let j = model.jacobian(x).unwrap();
        let scale = j[0][0].abs().max(j[1][1].abs()).max(1.0);
        prop_assert!((j[0][1] - j[1][0]).abs() <= 1e-12 * scale);
        prop_assert!(model.curl_fd(x, 1e-5).unwrap().abs() <= 1e-5 * scale);
    }

    #[test]
    fn doubling_multiplicities_doubles_the_field((layout, roots) in layout_strategy(), base in 1u32..4, u in 0.0..1.0f64, v in 0.0..1.0f64) {
        let single = vec![base; roots];
        let double = vec![2 * base; roots];
        let m1 = Rank2Model::from_layout(layout, Some(&single), None).unwrap();
        let m2 = Rank2Model::from_layout(layout, Some(&double), None).unwrap();
        let Some(x) = chamber_point(&m1, u, v) else { return Ok(()) };
        let (f1, f2) = (m1.x_field(x).unwrap(), m2.x_field(x).unwrap());
        for k in 0..2 {
            prop_assert!((f2[k] - 2.0 * f1[k]).abs() <= 1e-12 * f1[k].abs().max(1.0));
        }
        let (d1, d2) = (m1.div_x(x).unwrap(), m2.div_x(x).unwrap());
        prop_assert!((d2 - 2.0 * d1).abs() <= 1e-12 * d1.abs().max(1.0));
        let (p1, p2) = (m1.potential(x).unwrap(), m2.potential(x).unwrap());
        prop_assert!((p2 - 2.0 * p1).abs() <= 1e-12 * p1.abs().max(1.0));
    }
}
