use std::f64::consts::PI;

use acsplit::grid::SineTransform;
use acsplit::{DiscreteOperator, GridFunction, Mesh};
use proptest::prelude::*;

fn op(n: usize) -> DiscreteOperator {
    DiscreteOperator::new(Mesh::new(n).unwrap())
}

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let num = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    let den = b.iter().map(|y| y.abs()).fold(0.0, f64::max).max(1e-300);
    num / den
}

#[test]
fn eigenvalues_increase_and_approach_continuum() {
    for n in [1, 5, 63, 100] {
        let o = op(n);
        assert!(o.eigenvalues().windows(2).all(|w| w[0] < w[1]));
        assert!(o.eigenvalues().iter().all(|l| *l > 0.0));
    }
    // fixed k, two meshes: the error to k^2 pi^2 shrinks by ~4 when dx halves
    for k in 1..=3usize {
        let exact = (k as f64 * PI).powi(2);
        let coarse = (op(63).eigenvalues()[k - 1] - exact).abs();
        let fine = (op(127).eigenvalues()[k - 1] - exact).abs();
        assert!(fine < coarse);
        let ratio = coarse / fine;
        assert!((ratio - 4.0).abs() < 0.1, "k={k} ratio={ratio}");
        assert!(fine / exact < 1e-3);
    }
}

#[test]
fn sine_modes_are_eigenvectors() {
    let o = op(31);
    for k in [1, 2, 7, 31] {
        let v = GridFunction::sine_mode(o.mesh(), k);
        let lam = o.eigenvalues()[k - 1];
        let av = o.apply_laplacian(&v).unwrap();
        let expect: Vec<f64> = v.values().iter().map(|x| -lam * x).collect();
        assert!(rel_err(av.values(), &expect) < 1e-10, "k={k}");

        let dt = 0.013;
        let r = o.solve_resolvent(dt, &v).unwrap();
        let expect: Vec<f64> = v.values().iter().map(|x| x / (1.0 + dt * lam)).collect();
        assert!(rel_err(r.values(), &expect) < 1e-10, "k={k}");

        let s = o.apply_semigroup(dt, &v).unwrap();
        // high modes decay to ~1e-23, so compare on the scale of the input
        let expect: Vec<f64> = v.values().iter().map(|x| x * (-dt * lam).exp()).collect();
        let err = s
            .values()
            .iter()
            .zip(&expect)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-12, "k={k}");
    }
}

#[test]
fn norm_h_of_first_mode() {
    let v = GridFunction::sine_mode(Mesh::new(255).unwrap(), 1);
    // the trapezoid sum of sin^2 is exact here; dx^2 bound is what matters
    assert!((v.norm_h() - 0.5f64.sqrt()).abs() < (1.0 / 256.0f64).powi(2));
    assert!(v.norm_e() <= 1.0);
}

#[test]
fn resolvent_matrix_is_nonnegative_substochastic() {
    let o = op(20);
    for dt in [1e-4, 0.01, 0.3, 5.0] {
        let mut row_sums = [0.0; 20];
        for j in 0..20 {
            let mut e = vec![0.0; 20];
            e[j] = 1.0;
            let col = o
                .solve_resolvent(dt, &GridFunction::from_values(o.mesh(), e).unwrap())
                .unwrap();
            for (i, v) in col.values().iter().enumerate() {
                assert!(*v >= 0.0, "dt={dt} entry ({i},{j}) = {v}");
                row_sums[i] += v;
            }
        }
        assert!(row_sums.iter().all(|s| *s <= 1.0 + 1e-14), "dt={dt}");
    }
}

#[test]
fn semigroup_identity_at_zero() {
    let o = op(17);
    let x = GridFunction::from_fn(o.mesh(), |s| (9.0 * s).cos() + s);
    let y = o.apply_semigroup(0.0, &x).unwrap();
    assert!(rel_err(y.values(), x.values()) < 1e-12);
}

fn field(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0f64..10.0, n)
}

proptest! {
    #[test]
    fn dst_round_trip(n in 1usize..200, seed in any::<u64>()) {
        let mut x: Vec<f64> = (0..n).map(|j| ((j as u64).wrapping_mul(seed | 1) % 1000) as f64 / 77.0 - 6.0).collect();
        let orig = x.clone();
        let t = SineTransform::new(n);
        t.apply(&mut x);
        t.apply(&mut x);
        prop_assert!(rel_err(&x, &orig) < 1e-12);
    }

    #[test]
    fn resolvent_inverts_shifted_operator(x in field(40), dt in 1e-5f64..2.0) {
        let o = op(40);
        let rhs = GridFunction::from_values(o.mesh(), x).unwrap();
        let y = o.solve_resolvent(dt, &rhs).unwrap();
        let ay = o.apply_laplacian(&y).unwrap();
        let back: Vec<f64> = y.values().iter().zip(ay.values()).map(|(a, b)| a - dt * b).collect();
        let scale = rhs.norm_e().max(1e-300);
        let resid = back.iter().zip(rhs.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prop_assert!(resid <= 1e-10 * scale, "residual {resid}");
    }

    #[test]
    fn maximum_principle(x in field(33), dt in 1e-6f64..3.0) {
        let o = op(33);
        let g = GridFunction::from_values(o.mesh(), x).unwrap();
        let r = o.solve_resolvent(dt, &g).unwrap();
        prop_assert!(r.norm_e() <= g.norm_e() * (1.0 + 1e-14));
        let s = o.apply_semigroup(dt, &g).unwrap();
        // exp(dt A_h) is a positive contraction in sup-norm; the FFT adds rounding
        prop_assert!(s.norm_e() <= g.norm_e() * (1.0 + 1e-12));
        // stiff modes underflow to exactly zero
        prop_assert!(o.semigroup_factors(dt).iter().all(|f| *f >= 0.0 && *f <= 1.0));
    }

    #[test]
    fn semigroup_law(x in field(25), s in 0.0f64..0.5, t in 0.0f64..0.5) {
        let o = op(25);
        let g = GridFunction::from_values(o.mesh(), x).unwrap();
        let two = o.apply_semigroup(s, &o.apply_semigroup(t, &g).unwrap()).unwrap();
        let one = o.apply_semigroup(s + t, &g).unwrap();
        let err = two.values().iter().zip(one.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prop_assert!(err <= 1e-10 * g.norm_e().max(1.0));
    }

    #[test]
    fn laplacian_is_linear(x in field(12), y in field(12), a in -3.0f64..3.0) {
        let o = op(12);
        let gx = GridFunction::from_values(o.mesh(), x).unwrap();
        let gy = GridFunction::from_values(o.mesh(), y).unwrap();
        let lhs = o.apply_laplacian(&gx.clone().scaled(a).add(&gy).unwrap()).unwrap();
        let rhs = o.apply_laplacian(&gx).unwrap().scaled(a).add(&o.apply_laplacian(&gy).unwrap()).unwrap();
        prop_assert!(rel_err(lhs.values(), rhs.values()) < 1e-12 || lhs.norm_e() < 1e-9);
    }
}
