use lubrix_core::domain::{GapProfile, GridQ};
use lubrix_core::stagger::{Field, WField};
use lubrix_core::thinfilm::{cell_integral, solve_regularized_continuity, ContinuityOptions};
use proptest::prelude::*;

const NX: usize = 12;
const NZ: usize = 8;

fn grid() -> GridQ {
    GridQ::new(&GapProfile::cosine(1.0, vec![0.4]).unwrap(), NX, NZ, 0.2).unwrap()
}

fn velocity(vals: &[f64]) -> (Field<f64>, WField<f64>) {
    let mut u = Field::filled(NX, NZ, 0.0);
    let mut w = WField::filled(NX, NZ, 0.0);
    let mut it = vals.iter().cycle();
    for i in 0..NX {
        for j in 0..NZ {
            u.set(i, j, 3.0 * it.next().unwrap());
        }
        for k in 1..NZ {
            w.set(i, k, 3.0 * it.next().unwrap());
        }
    }
    (u, w)
}

fn field(vals: &[f64], scale: f64) -> Field<f64> {
    let mut f = Field::filled(NX, NZ, 0.0);
    for (d, v) in f.data.iter_mut().zip(vals.iter().cycle()) {
        *d = scale * v;
    }
    f
}

#[test]
fn rest_reproduces_mean_density() {
    let g = grid();
    let delta = 0.05;
    let (u, w) = (Field::filled(NX, NZ, 0.0), WField::filled(NX, NZ, 0.0));
    let src = Field::filled(NX, NZ, delta * 0.4);
    let sol = solve_regularized_continuity(&g, &u, &w, &src, delta, 1.0, &ContinuityOptions::default()).unwrap();
    assert!(sol.rho.data.iter().all(|r| (r - 0.4).abs() < 1e-13));
}

#[test]
fn rejects_nonpositive_delta() {
    let g = grid();
    let z = Field::filled(NX, NZ, 0.0);
    assert!(solve_regularized_continuity(&g, &z, &WField::filled(NX, NZ, 0.0), &z, 0.0, 1.0, &ContinuityOptions::default()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn mass_identity_and_positivity(
        vel in prop::collection::vec(-1.0f64..1.0, 64),
        src in prop::collection::vec(0.0f64..1.0, 32),
        delta in 0.01f64..1.0,
    ) {
        let g = grid();
        let (u, w) = velocity(&vel);
        let f = field(&src, 0.5 * delta);
        let sol = solve_regularized_continuity(&g, &u, &w, &f, delta, 1.0, &ContinuityOptions::default()).unwrap();
        let lhs = cell_integral(&g, &sol.rho);
        let rhs = cell_integral(&g, &f) / delta;
        prop_assert!((lhs - rhs).abs() < 1e-10 * rhs.abs().max(1.0), "{} vs {}", lhs, rhs);
        prop_assert!(sol.rho.data.iter().all(|r| *r >= 0.0));
    }

    #[test]
    fn comparison_principle(
        vel in prop::collection::vec(-1.0f64..1.0, 64),
        base in prop::collection::vec(0.0f64..1.0, 32),
        extra in prop::collection::vec(0.0f64..1.0, 32),
        delta in 0.01f64..1.0,
    ) {
        let g = grid();
        let (u, w) = velocity(&vel);
        let g2 = field(&base, 0.4 * delta);
        let mut g1 = g2.clone();
        for (a, e) in g1.data.iter_mut().zip(extra.iter().cycle()) {
            *a += 0.3 * delta * e;
        }
        let opts = ContinuityOptions::default();
        let r1 = solve_regularized_continuity(&g, &u, &w, &g1, delta, 1.0, &opts).unwrap().rho;
        let r2 = solve_regularized_continuity(&g, &u, &w, &g2, delta, 1.0, &opts).unwrap().rho;
        let worst = r1.data.iter().zip(&r2.data).map(|(a, b)| a - b).fold(f64::INFINITY, f64::min);
        prop_assert!(worst >= -1e-10, "min(rho1 - rho2) = {}", worst);
    }
}
