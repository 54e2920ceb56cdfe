use carnot::derivate::box_volume;
use carnot::divergence::ModelSpace;
use carnot::metric::heisenberg_distance;
use carnot::{AlgebraVector, CcSpace, GradedAlgebra, Group, GroupElement};
use proptest::prelude::*;

const GROUPS: [&str; 4] = ["heisenberg", "engel", "free2-3", "abelian3"];

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    let scale = a.iter().chain(b).fold(1.0f64, |m, c| m.max(c.abs()));
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol * scale)
}

/// A group index and three coordinate vectors long enough for any of them.
fn triple() -> impl Strategy<Value = (usize, Vec<f64>, Vec<f64>, Vec<f64>)> {
    let v = || prop::collection::vec(-3.0..3.0f64, 6);
    (0..GROUPS.len(), v(), v(), v())
}

fn el(g: &Group, v: &[f64]) -> GroupElement {
    GroupElement::new(v[..g.dim()].to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn group_axioms((k, a, b, c) in triple()) {
        let g = Group::builtin(GROUPS[k]).unwrap();
        let (a, b, c) = (el(&g, &a), el(&g, &b), el(&g, &c));
        let left = g.bch(&g.bch(&a, &b).unwrap(), &c).unwrap();
        let right = g.bch(&a, &g.bch(&b, &c).unwrap()).unwrap();
        prop_assert!(close(left.as_slice(), right.as_slice(), 1e-10));
        let e = g.identity();
        prop_assert_eq!(g.bch(&a, &e).unwrap(), a.clone());
        let inv = g.inverse(&a);
        prop_assert!(close(g.bch(&a, &inv).unwrap().as_slice(), e.as_slice(), 1e-12));
    }

    #[test]
    fn dilations((k, a, b, _) in triple(), s in 0.05..4.0f64, t in 0.05..4.0f64) {
        let g = Group::builtin(GROUPS[k]).unwrap();
        let (a, b) = (el(&g, &a), el(&g, &b));
        let ab = g.bch(&a, &b).unwrap();
        let hom = g.bch(&g.dilate(t, &a), &g.dilate(t, &b)).unwrap();
        prop_assert!(close(g.dilate(t, &ab).as_slice(), hom.as_slice(), 1e-10));
        let anti = g.bch(&g.dilate(-t, &b), &g.dilate(-t, &a)).unwrap();
        prop_assert!(close(g.dilate(-t, &ab).as_slice(), anti.as_slice(), 1e-10));
        prop_assert!(close(g.dilate(s, &g.dilate(t, &a)).as_slice(), g.dilate(s * t, &a).as_slice(), 1e-12));
    }

    #[test]
    fn bracket_structure((k, x, y, z) in triple(), s in -2.0..2.0f64) {
        let alg = GradedAlgebra::builtin(GROUPS[k]).unwrap();
        let n = alg.dim();
        let v = |c: &[f64]| AlgebraVector::from(&c[..n]);
        let (x, y, z) = (v(&x), v(&y), v(&z));
        let br = |a: &AlgebraVector, b: &AlgebraVector| alg.bracket(a, b).unwrap();
        let add = |a: &AlgebraVector, b: &AlgebraVector| AlgebraVector::from(a.as_slice().iter().zip(b.as_slice()).map(|(p, q)| p + q).collect::<Vec<_>>());
        // Antisymmetry and bilinearity.
        prop_assert!(close(br(&x, &y).as_slice(), br(&y, &x).scaled(-1.0).as_slice(), 1e-12));
        let lin = br(&add(&x.scaled(s), &z), &y);
        prop_assert!(close(lin.as_slice(), add(&br(&x, &y).scaled(s), &br(&z, &y)).as_slice(), 1e-12));
        // Jacobi.
        let j = add(&add(&br(&x, &br(&y, &z)), &br(&y, &br(&z, &x))), &br(&z, &br(&x, &y)));
        prop_assert!(j.max_abs() <= 1e-10 * (1.0 + x.max_abs() * y.max_abs() * z.max_abs()));
        // Grading: layer i with layer j lands in layer i + j.
        for i in 1..=alg.step() {
            for l in 1..=alg.step() {
                let b = br(&alg.project(&x, i), &alg.project(&y, l));
                for m in 1..=alg.step() {
                    if m != i + l {
                        prop_assert!(alg.project(&b, m).max_abs() <= 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn heisenberg_closed_form(c in 0.0..3.0f64, a in -3.0..3.0f64, t in 0.1..5.0f64) {
        let d = heisenberg_distance(c, a);
        prop_assert!(d >= c && d >= 0.0);
        prop_assert!(d <= c + (4.0 * std::f64::consts::PI * a.abs()).sqrt() + 1e-12);
        let scaled = heisenberg_distance(t * c, t * t * a);
        prop_assert!((scaled - t * d).abs() <= 1e-9 * (1.0 + t * d));
    }

    #[test]
    fn heisenberg_metric_axioms(x in prop::collection::vec(-2.0..2.0f64, 3), y in prop::collection::vec(-2.0..2.0f64, 3), z in prop::collection::vec(-2.0..2.0f64, 3), g in prop::collection::vec(-2.0..2.0f64, 3), t in 0.1..3.0f64) {
        // The closed form is the exact distance up to a tiny relative margin.
        let s = CcSpace::standard(Group::heisenberg()).unwrap();
        let grp = s.group().clone();
        let (x, y, z, g) = (GroupElement::new(x), GroupElement::new(y), GroupElement::new(z), GroupElement::new(g));
        let d = |p: &GroupElement, q: &GroupElement| s.lower(p, q).unwrap().0;
        let (dxy, dyz, dxz) = (d(&x, &y), d(&y, &z), d(&x, &z));
        prop_assert!(dxz <= (dxy + dyz) * (1.0 + 1e-9) + 1e-12);
        prop_assert!((dxy - d(&y, &x)).abs() <= 1e-9 * (1.0 + dxy));
        let gx = grp.bch(&g, &x).unwrap();
        let gy = grp.bch(&g, &y).unwrap();
        prop_assert!((d(&gx, &gy) - dxy).abs() <= 1e-8 * (1.0 + dxy));
        let scaled = d(&grp.dilate(t, &x), &grp.dilate(t, &y));
        prop_assert!((scaled - t * dxy).abs() <= 1e-8 * (1.0 + t * dxy));
        prop_assert_eq!(d(&x, &x), 0.0);
    }

    #[test]
    fn box_volume_scaling(u in prop::collection::vec(-2.0..2.0f64, 2), eps in 0.01..1.0f64) {
        prop_assume!(u[0].abs() + u[1].abs() > 1e-3);
        let s = CcSpace::standard(Group::heisenberg()).unwrap();
        let u = [u[0], u[1], 0.0];
        let v1 = box_volume(&s, &u, eps).unwrap();
        let v2 = box_volume(&s, &u, 2.0 * eps).unwrap();
        // Q − 1 = 3 powers of ε.
        prop_assert!((v2 / v1 - 8.0).abs() < 1e-9);
        let n = (u[0] * u[0] + u[1] * u[1]).sqrt();
        // Segment of length 2ε across u, vertical interval of length 2ε², swept along u.
        prop_assert!((v1 - 4.0 * eps.powi(3) * n).abs() <= 1e-12 * v1);
    }

    #[test]
    fn hyperbolic_triangle(p in prop::collection::vec(-1.5..1.5f64, 6), kappa in -3.0..-0.1f64) {
        let m = ModelSpace::Hyperbolic { curvature: kappa };
        let lift = |x: f64, y: f64| vec![x, y, (1.0 + x * x + y * y).sqrt()];
        let (a, b, c) = (lift(p[0], p[1]), lift(p[2], p[3]), lift(p[4], p[5]));
        let (ab, bc, ac) = (m.distance(&a, &b), m.distance(&b, &c), m.distance(&a, &c));
        prop_assert!(ac <= ab + bc + 1e-9);
        prop_assert!((ab - m.distance(&b, &a)).abs() <= 1e-12);
        prop_assert!(m.distance(&a, &a) == 0.0);
    }
}
