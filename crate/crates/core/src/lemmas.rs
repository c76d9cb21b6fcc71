//! Randomised checks of the flow and increment-map bounds.
//!
//! Each suite draws `(z1, z2, dt)` with `z` uniform in `[-50, 50]`; half
//! of the steps are uniform in `(0, 1)` and half log-uniform in
//! `[1e-12, 1)`, so the small-step regime is exercised too. A suite
//! reports the number of violated cases and the worst margin
//! `bound - lhs` (negative means violated).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::flows::{calibrate_error_psi_constant, lip_psi_constant, FlowParams};

pub const Z_RANGE: f64 = 50.0;

/// Slack on the one-sided condition, absorbing rounding in the product.
pub const ONE_SIDED_SLACK: f64 = 1e-12;

/// Step horizon at which the `errorPsi` constant is calibrated.
pub const ERROR_PSI_DT0: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct LemmaReport {
    pub name: &'static str,
    pub cases: usize,
    pub violations: usize,
    /// Smallest `bound - lhs` observed, relative to the bound.
    pub worst_margin: f64,
}

impl LemmaReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

struct Tally {
    name: &'static str,
    cases: usize,
    violations: usize,
    worst: f64,
}

impl Tally {
    fn new(name: &'static str) -> Self {
        Tally {
            name,
            cases: 0,
            violations: 0,
            worst: f64::INFINITY,
        }
    }

    fn record(&mut self, lhs: f64, bound: f64) {
        self.cases += 1;
        // NaN on either side counts as a violation
        if !(lhs <= bound) {
            self.violations += 1;
        }
        let margin = if bound > 0.0 {
            (bound - lhs) / bound
        } else {
            bound - lhs
        };
        if !(margin >= self.worst) {
            self.worst = margin;
        }
    }

    fn finish(self) -> LemmaReport {
        LemmaReport {
            name: self.name,
            cases: self.cases,
            violations: self.violations,
            worst_margin: self.worst,
        }
    }
}

fn draw_dt(rng: &mut ChaCha8Rng, i: usize) -> f64 {
    if i.is_multiple_of(2) {
        loop {
            let u: f64 = rng.random();
            if u > 0.0 {
                return u;
            }
        }
    } else {
        let e: f64 = rng.random_range(-12.0..0.0);
        10f64.powf(e)
    }
}

fn draw_z(rng: &mut ChaCha8Rng) -> f64 {
    rng.random_range(-Z_RANGE..=Z_RANGE)
}

/// `|phi(z2) - phi(z1)| <= e^{dt} |z2 - z1|`.
pub fn lip_phi_suite(cases: usize, seed: u64) -> LemmaReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = Tally::new("lip_phi");
    for i in 0..cases {
        let dt = draw_dt(&mut rng, i);
        let (z1, z2) = (draw_z(&mut rng), draw_z(&mut rng));
        let f = FlowParams::new(dt).expect("dt in (0,1)");
        t.record((f.phi(z2) - f.phi(z1)).abs(), dt.exp() * (z2 - z1).abs());
    }
    t.finish()
}

/// `(psi(z2) - psi(z1)) (z2 - z1) <= e^{dt} (z2 - z1)^2 + 1e-12`.
pub fn one_sided_suite(cases: usize, seed: u64) -> LemmaReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = Tally::new("one_sided");
    for i in 0..cases {
        let dt = draw_dt(&mut rng, i);
        let (z1, z2) = (draw_z(&mut rng), draw_z(&mut rng));
        let f = FlowParams::new(dt).expect("dt in (0,1)");
        let d = z2 - z1;
        t.record(
            (f.psi(z2) - f.psi(z1)) * d,
            dt.exp() * d * d + ONE_SIDED_SLACK,
        );
    }
    t.finish()
}

/// Local Lipschitz bound `|psi(z2) - psi(z1)| <= C |z2 - z1| (1 + |z1|^3 + |z2|^3)`
/// and growth bound `|psi(z)| <= C (1 + |z|^4)`, both with `C = 3 e^3`.
pub fn lip_psi_suite(cases: usize, seed: u64) -> LemmaReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = Tally::new("lip_psi");
    let c = lip_psi_constant(1.0);
    for i in 0..cases {
        let dt = draw_dt(&mut rng, i);
        let (z1, z2) = (draw_z(&mut rng), draw_z(&mut rng));
        let f = FlowParams::new(dt).expect("dt in (0,1)");
        let (p1, p2) = (f.psi(z1), f.psi(z2));
        let cubes = 1.0 + z1.abs().powi(3) + z2.abs().powi(3);
        t.record((p2 - p1).abs(), c * (z2 - z1).abs() * cubes);
        t.record(p1.abs(), c * (1.0 + z1.powi(4)));
    }
    t.finish()
}

/// `|psi(dt, z) - psi(0, z)| <= C dt (1 + |z|^5)` with `C` calibrated at
/// `dt0 = 0.5` from the Taylor envelope on a z-grid over `[-50, 50]`.
pub fn error_psi_suite(cases: usize, seed: u64) -> LemmaReport {
    let c = error_psi_constant();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = Tally::new("error_psi");
    for i in 0..cases {
        let dt = draw_dt(&mut rng, i);
        let z = draw_z(&mut rng);
        let f = FlowParams::new(dt).expect("dt in (0,1)");
        let z3 = z * z * z;
        let ratio = (f.psi(z) - (z - z3)).abs() / (dt * (1.0 + z.abs().powi(5)));
        t.record(ratio, c);
    }
    t.finish()
}

/// The calibrated `errorPsi` constant.
pub fn error_psi_constant() -> f64 {
    let grid = (0..=100_000).map(|i| -Z_RANGE + i as f64 * (2.0 * Z_RANGE / 100_000.0));
    calibrate_error_psi_constant(ERROR_PSI_DT0, grid)
}

/// All four suites with `cases` draws each.
pub fn run_all(cases: usize, seed: u64) -> Vec<LemmaReport> {
    vec![
        lip_phi_suite(cases, seed),
        one_sided_suite(cases, seed.wrapping_add(1)),
        lip_psi_suite(cases, seed.wrapping_add(2)),
        error_psi_suite(cases, seed.wrapping_add(3)),
    ]
}
