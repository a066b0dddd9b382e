//! Seeded random inputs for the sampling checks. Sample `k` of a run with
//! seed `s` always uses the generator seeded with `s + k`.

use lubrix_core::divfree::{InequalityKind, ModalField, ModalTerm, VectorModal};
use lubrix_core::domain::GridQ;
use lubrix_core::stagger::Field;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub fn rng(seed: u64, index: usize) -> StdRng {
    StdRng::seed_from_u64(seed.wrapping_add(index as u64))
}

fn modal(rng: &mut StdRng, vanish_bottom: bool) -> ModalField {
    ModalField {
        terms: (0..4)
            .map(|_| ModalTerm {
                wave: rng.gen_range(-3..=3),
                power: rng.gen_range(0..3),
                amp: rng.gen_range(-1.0..1.0),
            })
            .collect(),
        vanish_top: true,
        vanish_bottom,
    }
}

/// Random smooth field satisfying the wall conditions of `kind`.
pub fn random_field(seed: u64, index: usize, kind: InequalityKind) -> VectorModal {
    let mut r = rng(seed, index);
    let (hb, vb) = match kind {
        InequalityKind::Poincare => (r.gen(), r.gen()),
        InequalityKind::Anisotropic => (r.gen(), true),
        InequalityKind::Korn => (true, true),
    };
    VectorModal {
        horizontal: modal(&mut r, hb),
        vertical: modal(&mut r, vb),
    }
}

/// Random cell source with entries in `[-1, 1)`.
pub fn random_source(seed: u64, index: usize, grid: &GridQ) -> Field<f64> {
    let mut r = rng(seed, index);
    let mut f = Field::filled(grid.nx, grid.nz, 0.0);
    for v in f.data.iter_mut() {
        *v = r.gen_range(-1.0..1.0);
    }
    f
}

/// `n` densities uniform in `[0, hi]`.
pub fn random_densities(seed: u64, index: usize, n: usize, hi: f64) -> Vec<f64> {
    let mut r = rng(seed, index);
    (0..n).map(|_| r.gen_range(0.0..=hi)).collect()
}
