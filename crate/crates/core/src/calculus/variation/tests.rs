use super::*;
use crate::calculus::vfield::{Bump, FdField, ZeroField};
use crate::grid::Grid;
use proptest::prelude::*;

fn pulled_matrix(spec: &dyn VectorFieldSpec, x: &Point, t: f64) -> Matrix3<f64> {
    let (_, j) = FlowMap::new(spec).map_with_jacobian(x, t);
    let inv = j.try_inverse().unwrap();
    inv * inv.transpose() * j.determinant()
}

fn pulled_density(w: &ScalarData, spec: &dyn VectorFieldSpec, x: &Point, t: f64) -> f64 {
    let (y, j) = FlowMap::new(spec).map_with_jacobian(x, t);
    w.value(&y) * j.determinant()
}

#[test]
fn dilation_examples() {
    let b2 = Bump::radial(2, Point::zeros(), 1.0, 1.0);
    assert!(delta_a(&b2, &Point::zeros(), Order::First).norm() < 1e-14);
    let b3 = Bump::radial(3, Point::zeros(), 1.0, 1.0);
    assert!((delta_a(&b3, &Point::zeros(), Order::First) - Matrix3::identity()).norm() < 1e-14);
    let one = ScalarData::Constant(1.0);
    let v = delta_f(&one, &b2, &Point::zeros(), Order::Second, SecondOrderForm::AsPrinted).unwrap();
    assert!((v - 2.0).abs() < 1e-12);
    assert_eq!(delta_a(&ZeroField(2), &Point::zeros(), Order::Second), Matrix3::zeros());
}

#[test]
fn second_order_matrix_matches_flow_expansion() {
    let fields: Vec<Box<dyn VectorFieldSpec>> = vec![
        Box::new(Bump::directional(2, Point::new(0.1, 0.0, 0.0), 0.9, Point::new(0.7, -0.4, 0.0))),
        Box::new(Bump::radial(2, Point::zeros(), 0.8, 1.3)),
        Box::new(Bump::rotational(3, Point::new(0.0, 0.1, 0.0), 0.9, 0.8)),
        Box::new(Bump::directional(3, Point::zeros(), 1.0, Point::new(0.2, 0.5, -0.9))),
    ];
    let x = Point::new(0.25, -0.15, 0.1);
    let t = 1e-3;
    for f in &fields {
        let x = if f.dim() == 2 { Point::new(x[0], x[1], 0.0) } else { x };
        let (p, m) = (pulled_matrix(f.as_ref(), &x, t), pulled_matrix(f.as_ref(), &x, -t));
        let first = (p - m) / (2.0 * t);
        let second = (p + m - Matrix3::<f64>::identity() * 2.0) / (2.0 * t * t);
        let mut da = delta_a(f.as_ref(), &x, Order::First);
        let mut d2a = delta_a(f.as_ref(), &x, Order::Second);
        if f.dim() == 2 {
            // the flow leaves the third axis alone, where A_t = det J
            da[(2, 2)] = first[(2, 2)];
            d2a[(2, 2)] = second[(2, 2)];
        }
        assert!((first - da).norm() < 1e-6, "{first} {da}");
        assert!((second - d2a).norm() < 1e-5, "{second} {d2a}");
    }
}

#[test]
fn second_order_source_matches_flow_expansion() {
    let w = ScalarData::Gaussian { amp: 1.3, center: Point::new(0.2, -0.1, 0.0), width: 0.6 };
    let b = Bump::directional(2, Point::new(0.1, 0.1, 0.0), 0.9, Point::new(0.8, 0.5, 0.0));
    let x = Point::new(0.3, 0.0, 0.0);
    let t = 1e-3;
    let (p, m, z) = (pulled_density(&w, &b, &x, t), pulled_density(&w, &b, &x, -t), w.value(&x));
    let first = (p - m) / (2.0 * t);
    let second = (p + m - 2.0 * z) / (2.0 * t * t);
    let d1 = delta_f(&w, &b, &x, Order::First, SecondOrderForm::Corrected).unwrap();
    let d2 = delta_f(&w, &b, &x, Order::Second, SecondOrderForm::Corrected).unwrap();
    let printed = delta_f(&w, &b, &x, Order::Second, SecondOrderForm::AsPrinted).unwrap();
    assert!((first - d1).abs() < 2e-5, "{first} {d1}");
    assert!((second - d2).abs() < 1e-5, "{second} {d2}");
    // the printed weight formula misses ½∇w·(Dξ)ξ, which is not small here
    assert!((second - printed).abs() > 1e-2);
}

#[test]
fn sampled_data_needs_derivatives() {
    let g = Grid::centered(2, 1.0, 16).unwrap();
    let w = ScalarData::Sampled(ScalarField::constant(g, 1.0));
    let b = Bump::radial(2, Point::zeros(), 0.5, 1.0);
    assert!(matches!(
        delta_f(&w, &b, &Point::zeros(), Order::First, SecondOrderForm::Corrected),
        Err(Error::MissingDerivatives(_))
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn variation_matrices_are_symmetric(
        cx in -0.3..0.3f64, cy in -0.3..0.3f64, ax in -1.0..1.0f64, ay in -1.0..1.0f64,
        px in -0.5..0.5f64, py in -0.5..0.5f64, amp in -1.0..1.0f64,
    ) {
        let c = Point::new(cx, cy, 0.0);
        let x = Point::new(px, py, 0.0);
        let mut b = Bump::directional(2, c, 0.9, Point::new(ax, ay, 0.0));
        b.lin[(0, 1)] = amp;
        for order in [Order::First, Order::Second] {
            let m = delta_a(&b, &x, order);
            prop_assert!((m - m.transpose()).norm() < 1e-12);
        }
    }

    #[test]
    fn infinitesimal_rotation_leaves_metric_unchanged(
        amp in -2.0..2.0f64, px in -1.0..1.0f64, py in -1.0..1.0f64, pz in -1.0..1.0f64,
    ) {
        let rot = move |p: &Point| Point::new(-amp * p[1], amp * p[0], 0.0);
        let f = FdField::new(3, rot, None);
        let m = delta_a(&f, &Point::new(px, py, pz), Order::First);
        prop_assert!(m.norm() < 1e-8);
    }
}

fn gaussian_data(g: &Grid) -> ProblemData {
    let gauss = ScalarData::Gaussian { amp: 1.0, center: Point::zeros(), width: 0.5 };
    ProblemData::new(g, gauss.clone(), gauss, ScalarData::Constant(1.0 / 64.0)).unwrap()
}

#[test]
fn zero_field_has_zero_variations() {
    let g = Grid::centered(2, 1.5, 48).unwrap();
    let dom = DomainRep::ball(g, Point::zeros(), 0.9);
    let rep = second_variation(&dom, &gaussian_data(&g), &ZeroField(2), &VariationOptions::default()).unwrap();
    assert_eq!(rep.delta_f, 0.0);
    assert_eq!(rep.delta2_f, 0.0);
    assert!(rep.taylor.iter().all(|r| r.remainder < 1e-13), "{:?}", rep.taylor);
}

#[test]
fn field_away_from_domain_gives_zero() {
    let g = Grid::centered(2, 1.5, 48).unwrap();
    let dom = DomainRep::ball(g, Point::zeros(), 0.6);
    let b = Bump::axis(2, Point::new(1.1, 0.0, 0.0), 0.3, 0, 1.0);
    let fv = first_variation(&dom, &gaussian_data(&g), &b).unwrap();
    assert_eq!(fv.volume, 0.0);
    assert_eq!(fv.surface, 0.0);
}

#[test]
fn pullback_ladder_is_third_order() {
    let g = Grid::centered(2, 1.5, 64).unwrap();
    let dom = DomainRep::ball(g, Point::zeros(), 0.9);
    let b = Bump::directional(2, Point::new(0.7, 0.3, 0.0), 0.5, Point::new(1.0, 0.4, 0.0));
    let rep = second_variation(&dom, &gaussian_data(&g), &b, &VariationOptions::default()).unwrap();
    for e in rep.remainder_exponents() {
        assert!(e >= 2.5, "{:?}", rep.taylor);
    }
}

#[test]
fn swapping_sources_swaps_linearized_states() {
    let g = Grid::centered(2, 1.5, 48).unwrap();
    let gauss = ScalarData::Gaussian { amp: 1.0, center: Point::zeros(), width: 0.6 };
    let f = gauss.scaled(2.0);
    let data = ProblemData::new(&g, f, gauss, ScalarData::Constant(0.1)).unwrap();
    let dom = DomainRep::ball(g, Point::new(0.05, 0.0, 0.0), 0.8);
    let b = Bump::radial(2, Point::new(0.5, 0.2, 0.0), 0.6, 0.7);
    let opts = VariationOptions { ladder: vec![], ..Default::default() };
    let a = second_variation(&dom, &data, &b, &opts).unwrap();
    let s = second_variation(&dom, &data.swapped(), &b, &opts).unwrap();
    assert!((a.delta_f - s.delta_f).abs() < 1e-10 * a.delta_f.abs().max(1.0));
    assert!((a.delta2_f - s.delta2_f).abs() < 1e-10 * a.delta2_f.abs().max(1.0));
    let du = a.delta_u.zip_map(&s.delta_v, |x, y| x - y).unwrap();
    assert!(du.max_abs() < 1e-9 * a.delta_u.max_abs().max(1e-3));
}

#[test]
fn half_plane_is_one_phase_stationary() {
    let g = Grid::centered(2, 1.25, 100).unwrap();
    let u = ScalarField::from_fn(g, |p| p[0].max(0.0));
    let phase = DomainRep::from_fn(g, |p| p[0]);
    let b = Bump::directional(2, Point::new(0.0, 0.1, 0.0), 0.6, Point::new(1.0, 0.3, 0.0));
    let (d1, d2) = one_phase_variations(&u, &phase, 1.0, &b, 1e-12).unwrap();
    assert!(d1.abs() < 5.0 * g.h(), "{d1}");
    assert!(d2 > -5.0 * g.h(), "{d2}");
    assert_eq!(one_phase_variations(&u, &phase, 1.0, &ZeroField(2), 1e-12).unwrap(), (0.0, 0.0));
}

#[test]
fn non_harmonic_input_is_rejected() {
    let g = Grid::centered(2, 1.0, 32).unwrap();
    let u = ScalarField::from_fn(g, |p| (p[0] * p[0]).max(0.0) * p[0].signum().max(0.0));
    let phase = DomainRep::from_fn(g, |p| p[0]);
    let b = Bump::radial(2, Point::zeros(), 0.5, 1.0);
    assert!(matches!(one_phase_variations(&u, &phase, 1.0, &b, 1e-10), Err(Error::NotHarmonic(_))));
}

#[test]
fn report_csv_has_summary_row() {
    let rep = VariationReport {
        f0: 1.0,
        delta_f: 0.5,
        delta2_f: -0.25,
        delta_u: ScalarField::zeros(Grid::centered(2, 1.0, 16).unwrap()),
        delta_v: ScalarField::zeros(Grid::centered(2, 1.0, 16).unwrap()),
        taylor: vec![TaylorRow { t: 0.1, energy: 1.05, remainder: 1e-3 }],
    };
    let mut buf = Vec::new();
    rep.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(text.lines().last().unwrap().starts_with("summary,,,,1,0.5,-0.25"));
}
