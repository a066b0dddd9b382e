//! Exact sparse Jacobians of staggered residuals by forward-mode
//! differentiation with column/level colouring.

use alloc::vec;
use alloc::vec::Vec;

use crate::dual::Dual;
use crate::linalg::BandMatrix;
use crate::stagger::{Layout, Slot};

/// Coupling reach of a residual on the staggered layout.
#[derive(Debug, Clone, Copy)]
pub struct Stencil {
    /// Residuals of column `r` depend on unknowns of columns
    /// `r + col_lo ..= r + col_hi`.
    pub col_lo: isize,
    pub col_hi: isize,
    /// Largest level distance between a residual and an unknown it reads.
    pub level_reach: usize,
}

fn slot_field(s: Slot) -> usize {
    match s {
        Slot::Cell(_) => 0,
        Slot::FaceU(_) => 1,
        Slot::FaceW(_) => 2,
    }
}

/// Number of column classes: the smallest divisor of `nx` exceeding the
/// stencil span, or `nx` itself.
fn column_classes(nx: usize, span: usize) -> usize {
    (span + 1..nx).find(|c| nx % c == 0).unwrap_or(nx)
}

/// Assembles `∂R/∂x` at `x` as a band matrix. `residual` must map a dual
/// vector laid out by `lay` to the residual vector in the same layout.
pub fn colored_jacobian<F>(lay: &Layout, x: &[f64], st: Stencil, mut residual: F) -> BandMatrix
where
    F: FnMut(&[Dual]) -> Vec<Dual>,
{
    let n = lay.len();
    let nx = lay.nx as isize;
    let span = (st.col_hi - st.col_lo) as usize;
    let classes = column_classes(lay.nx, span);
    let period = 2 * st.level_reach + 1;
    let color_of = |idx: usize| {
        let (c, s) = lay.locate(idx);
        ((c % classes) * 3 + slot_field(s)) * period + Layout::level(s) % period
    };
    let ncolors = classes * 3 * period;
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); ncolors];
    for idx in 0..n {
        members[color_of(idx)].push(idx);
    }

    let mut entries: Vec<(usize, usize, f64)> = Vec::new();
    let (mut kl, mut ku) = (0usize, 0usize);
    let mut xd: Vec<Dual> = x.iter().map(|v| Dual::var(*v, 0.0)).collect();
    for group in members.iter().filter(|g| !g.is_empty()) {
        for &idx in group {
            xd[idx].du = 1.0;
        }
        let r = residual(&xd);
        for &idx in group {
            xd[idx].du = 0.0;
            let (c, s) = lay.locate(idx);
            let lvl = Layout::level(s) as isize;
            for dc in -st.col_hi..=-st.col_lo {
                let rc = (c as isize + dc).rem_euclid(nx) as usize;
                for row in rows_of_column(lay, rc) {
                    let (_, rs) = lay.locate(row);
                    if (Layout::level(rs) as isize - lvl).unsigned_abs() > st.level_reach {
                        continue;
                    }
                    let v = r[row].du;
                    if v != 0.0 {
                        if row > idx {
                            kl = kl.max(row - idx);
                        } else {
                            ku = ku.max(idx - row);
                        }
                        entries.push((row, idx, v));
                    }
                }
            }
        }
    }
    let mut band = BandMatrix::zeros(n, kl, ku);
    for (r, c, v) in entries {
        band.add(r, c, v);
    }
    band
}

fn rows_of_column(lay: &Layout, col: usize) -> impl Iterator<Item = usize> {
    let start = lay.cell(col, 0);
    start..start + lay.block()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classes_divide() {
        assert_eq!(column_classes(64, 3), 4);
        assert_eq!(column_classes(10, 3), 5);
        assert_eq!(column_classes(7, 3), 7);
    }
}
