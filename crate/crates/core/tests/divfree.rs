use lubrix_core::divfree::{
    bogovskii_solve, corrected_extension_with, extension_defects, inequality_check, profile_lq_norm, simple_extension, BogovskiiSolver,
    CheckDomain, ExtensionSpec, InequalityKind, ModalField, ModalTerm, VectorModal, WallTrace,
};
use lubrix_core::domain::{GapProfile, GridQ};
use lubrix_core::stagger::Field;
use proptest::prelude::*;

fn grid(nx: usize, nz: usize) -> GridQ {
    GridQ::new(&GapProfile::cosine(1.0, vec![0.3]).unwrap(), nx, nz, 0.1).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn right_inverse_of_divergence(vals in prop::collection::vec(-1.0f64..1.0, 96)) {
        let g = grid(12, 8);
        let mut f = Field::filled(12, 8, 0.0);
        f.data.copy_from_slice(&vals);
        let b = bogovskii_solve(&g, &f).unwrap();
        prop_assert!(b.residual < 1e-8);
        prop_assert_eq!(b.field.wall_normal_trace(), 0.0);
        prop_assert!(b.field.u_bottom.iter().chain(&b.field.u_top).all(|v| *v == 0.0));
        prop_assert!(b.stability > 0.0 && b.stability < 10.0);
    }

    #[test]
    fn anisotropic_and_poincare_bounds(
        waves in prop::collection::vec(-3i32..=3, 4),
        powers in prop::collection::vec(0u32..3, 4),
        amps in prop::collection::vec(-1.0f64..1.0, 8),
        free_bottom in any::<bool>(),
    ) {
        let comp = |off: usize, bottom: bool| ModalField {
            terms: (0..4).map(|k| ModalTerm { wave: waves[k], power: powers[(k + off) % 4], amp: amps[k + off] }).collect(),
            vanish_top: true,
            vanish_bottom: bottom,
        };
        let field = VectorModal { horizontal: comp(0, !free_bottom), vertical: comp(4, true) };
        let dom = CheckDomain { gap: GapProfile::cosine(0.75, vec![0.25]).unwrap(), eps: 0.05, mu: 1.0, lambda_visc: 1.0 };
        let a4 = inequality_check(InequalityKind::Anisotropic, &field, &dom).unwrap();
        prop_assert!(a4.ratio <= 1.0 + 1e-8, "{:?}", a4);
        let j9 = inequality_check(InequalityKind::Poincare, &field, &dom).unwrap();
        prop_assert!(j9.ratio <= 1.0, "{:?}", j9);
    }
}

#[test]
fn extension_norms_shrink_with_layer() {
    let g = grid(32, 48);
    let solver = BogovskiiSolver::new(&g).unwrap();
    let trace = WallTrace::Fourier { mean: 1.0, cos: vec![], sin: vec![0.3] };
    let mut last = f64::INFINITY;
    for eta in [0.2, 0.1, 0.05] {
        let spec = ExtensionSpec { trace: trace.clone(), eta };
        let f = corrected_extension_with(&spec, &solver).unwrap();
        let (div, tr) = extension_defects(&f, &g, &trace);
        assert!(div < 1e-8, "eta {eta}: div {div}");
        assert_eq!(tr, 0.0);
        let n4 = f.lq_norm(&g, 4.0);
        assert!(n4 < last, "eta {eta}: {n4} !< {last}");
        last = n4;
    }
}

#[test]
fn simple_extension_matches_profile_norm() {
    let g = grid(16, 64);
    for eta in [0.2, 0.1] {
        let spec = ExtensionSpec { trace: WallTrace::Constant(1.0), eta };
        let f = simple_extension(&spec, &g).unwrap();
        let discrete = f.lq_norm(&g, 2.0);
        let exact = profile_lq_norm(1.0, eta, 2.0);
        assert!((discrete / exact - 1.0).abs() < 0.05, "eta {eta}: {discrete} vs {exact}");
    }
    let wide = ExtensionSpec { trace: WallTrace::Constant(1.0), eta: 0.69 };
    assert!(simple_extension(&wide, &g).is_ok());
    let too_wide = ExtensionSpec { trace: WallTrace::Constant(1.0), eta: 0.71 };
    assert!(simple_extension(&too_wide, &g).is_err());
}
