//! Right inverse of the divergence with zero wall traces, divergence-free
//! extensions of wall velocities, and checkers for the functional
//! inequalities of the film estimates.
//!
//! Discrete fields live on the staggered [`GridQ`] layout of the thin-film
//! solver: `u` on vertical faces, `W` on horizontal faces. The divergence is
//! the finite-volume one of [`crate::stagger::divergence`].

use alloc::vec;
use alloc::vec::Vec;

use crate::domain::{GapProfile, GridQ};
use crate::linalg::{BandLu, BandMatrix};
use crate::math::{abs, cos, max_abs, powf, powi, sin, sqrt, PI};
use crate::quad::GaussLegendre;
use crate::stagger::{divergence, u_at_wface, Field, Layout, WField};
use crate::{Error, Result};

/// Bump `ψ(t) = (1−t)³(1+3t)` on `[0, 1]`, zero beyond.
pub fn bump(t: f64) -> f64 {
    if t >= 1.0 {
        0.0
    } else {
        let c = 1.0 - t;
        c * c * c * (1.0 + 3.0 * t)
    }
}

/// `ψ'(t) = −12 t (1−t)²`.
pub fn bump_slope(t: f64) -> f64 {
    if t >= 1.0 {
        0.0
    } else {
        let c = 1.0 - t;
        -12.0 * t * c * c
    }
}

/// `∫₀ᵗ ψ`, constant [`BUMP_MASS`] for `t ≥ 1`.
pub fn bump_primitive(t: f64) -> f64 {
    let t = t.min(1.0);
    let t2 = t * t;
    t - 2.0 * t2 * t + 2.0 * t2 * t2 - 0.6 * t2 * t2 * t
}

pub const BUMP_MASS: f64 = 0.4;

/// `∫₀¹ |ψ|^q` by Gauss–Legendre (exact for integer `q ≤ 7`).
pub fn bump_power_integral(q: f64) -> f64 {
    GaussLegendre::new(24).integrate(|t| powf(abs(bump(t)), q), 0.0, 1.0)
}

/// `‖s ψ(Z/η)‖_{L^q(Q)}` for a layer lying inside the film (`η ≤ h_min`).
pub fn profile_lq_norm(s: f64, eta: f64, q: f64) -> f64 {
    abs(s) * powf(eta * bump_power_integral(q), 1.0 / q)
}

/// Velocity on the staggered grid together with its wall traces.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceField {
    pub u: Field<f64>,
    /// `W` including the zero wall rows `k = 0` and `k = nz`.
    pub w: WField<f64>,
    /// `u` at `Z = 0` below each vertical face.
    pub u_bottom: Vec<f64>,
    /// `u` at `Z = h` above each vertical face.
    pub u_top: Vec<f64>,
}

impl FaceField {
    pub fn zeros(grid: &GridQ) -> Self {
        Self {
            u: Field::filled(grid.nx, grid.nz, 0.0),
            w: WField::filled(grid.nx, grid.nz, 0.0),
            u_bottom: vec![0.0; grid.nx],
            u_top: vec![0.0; grid.nx],
        }
    }

    pub fn divergence(&self, grid: &GridQ) -> Field<f64> {
        divergence(grid, &self.u, &self.w)
    }

    /// Largest `|W|` on the two walls.
    pub fn wall_normal_trace(&self) -> f64 {
        let nz = self.w.nz;
        (0..self.w.nx).fold(0.0, |m, i| m.max(abs(self.w.at(i, 0))).max(abs(self.w.at(i, nz))))
    }

    /// `(Σ |v|^q vol)^{1/q}` with both components averaged to cell centres.
    pub fn lq_norm(&self, grid: &GridQ, q: f64) -> f64 {
        let mut acc = 0.0;
        for i in 0..grid.nx {
            let l = grid.left(i);
            let vol = grid.cell_volume(i);
            for j in 0..grid.nz {
                let uc = 0.5 * (self.u.at(l, j) + self.u.at(i, j));
                let wc = 0.5 * (self.w.at(i, j) + self.w.at(i, j + 1));
                acc += powf(sqrt(uc * uc + wc * wc), q) * vol;
            }
        }
        powf(acc, 1.0 / q)
    }

    /// Grid-aligned Dirichlet seminorm `‖∇v‖₂`, walls included.
    pub fn gradient_norm(&self, grid: &GridQ) -> f64 {
        let lay = Layout::new(grid);
        let x = self.packed(&lay);
        let mut e = 0.0;
        for_each_edge(grid, &lay, |a, b, c| {
            let d = x[a]
                - match b {
                    End::Node(k) => x[k],
                    End::Bottom(i) => self.u_bottom[i],
                    End::Top(i) => self.u_top[i],
                    End::Zero => 0.0,
                };
            e += c * d * d;
        });
        sqrt(e)
    }

    fn packed(&self, lay: &Layout) -> Vec<f64> {
        let mut x = vec![0.0; lay.len()];
        for i in 0..lay.nx {
            for j in 0..lay.nz {
                x[lay.face_u(i, j)] = self.u.at(i, j);
            }
            for k in 1..lay.nz {
                x[lay.face_w(i, k)] = self.w.at(i, k);
            }
        }
        x
    }

    fn subtract(&mut self, other: &FaceField) {
        for (a, b) in self.u.data.iter_mut().zip(&other.u.data) {
            *a -= b;
        }
        for (a, b) in self.w.data.iter_mut().zip(&other.w.data) {
            *a -= b;
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum End {
    Node(usize),
    Bottom(usize),
    Top(usize),
    Zero,
}

/// Visits every edge of the grid-aligned Dirichlet energy
/// `Σ c (x_a − x_b)²` between velocity unknowns and wall values.
fn for_each_edge<F: FnMut(usize, End, f64)>(grid: &GridQ, lay: &Layout, mut f: F) {
    let (nx, nz) = (grid.nx, grid.nz);
    let (dy, dz) = (grid.dy(), grid.dz());
    for i in 0..nx {
        let r = grid.right(i);
        // u on face i: levels, walls half a cell away
        let h = grid.hf[i][0];
        let cz = dy / (h * dz);
        for j in 0..nz {
            let a = lay.face_u(i, j);
            if j + 1 < nz {
                f(a, End::Node(lay.face_u(i, j + 1)), cz);
            }
            if j == 0 {
                f(a, End::Bottom(i), 2.0 * cz);
            }
            if j + 1 == nz {
                f(a, End::Top(i), 2.0 * cz);
            }
            f(a, End::Node(lay.face_u(r, j)), grid.hc[r][0] * dz / dy);
        }
        // W in column i, zero walls one cell away
        let h = grid.hc[i][0];
        let cz = dy / (h * dz);
        for k in 1..nz {
            let a = lay.face_w(i, k);
            if k + 1 < nz {
                f(a, End::Node(lay.face_w(i, k + 1)), cz);
            } else {
                f(a, End::Zero, cz);
            }
            if k == 1 {
                f(a, End::Zero, cz);
            }
            f(a, End::Node(lay.face_w(r, k)), grid.hf[i][0] * dz / dy);
        }
    }
}

/// Volume-weighted divergence row of cell `(i, j)` as `(unknown, coefficient)`.
fn divergence_row(grid: &GridQ, lay: &Layout, i: usize, j: usize) -> Vec<(usize, f64)> {
    let nz = grid.nz;
    let (dy, dz) = (grid.dy(), grid.dz());
    let l = grid.left(i);
    let mut row = vec![(lay.face_u(i, j), dz * grid.hf[i][0]), (lay.face_u(l, j), -dz * grid.hf[l][0])];
    let mut omega = |k: usize, sign: f64| {
        row.push((lay.face_w(i, k), sign * dy));
        let c = -sign * dy * 0.25 * grid.zf(k) * grid.hc[i][1];
        if c != 0.0 {
            for (col, lev) in [(l, k - 1), (l, k), (i, k - 1), (i, k)] {
                row.push((lay.face_u(col, lev), c));
            }
        }
    };
    if j + 1 < nz {
        omega(j + 1, 1.0);
    }
    if j > 0 {
        omega(j, -1.0);
    }
    row
}

/// Factored saddle-point system of the minimum-gradient right inverse of
/// the divergence on one grid.
///
/// Solves `min ½‖∇B‖²` subject to `div B = f − mean f` and `B = 0` on both
/// walls. The multiplier is pinned in cell `(0, 0)` and that (redundant)
/// divergence row is dropped.
#[derive(Debug, Clone)]
pub struct BogovskiiSolver {
    grid: GridQ,
    lay: Layout,
    lu: BandLu,
}

/// Output of [`BogovskiiSolver::solve`].
#[derive(Debug, Clone)]
pub struct Bogovskii {
    pub field: FaceField,
    /// `‖div B − (f − mean f)‖_∞`.
    pub residual: f64,
    /// `‖∇B‖₂ / ‖f − mean f‖₂`, the empirical stability constant.
    pub stability: f64,
}

impl BogovskiiSolver {
    pub fn new(grid: &GridQ) -> Result<Self> {
        let lay = Layout::new(grid);
        let bw = 3 * lay.block();
        let mut mat = BandMatrix::zeros(lay.len(), bw, bw);
        for_each_edge(grid, &lay, |a, b, c| {
            mat.add(a, a, c);
            if let End::Node(k) = b {
                mat.add(k, k, c);
                mat.add(a, k, -c);
                mat.add(k, a, -c);
            }
        });
        for i in 0..grid.nx {
            for j in 0..grid.nz {
                let p = lay.cell(i, j);
                if i == 0 && j == 0 {
                    mat.add(p, p, 1.0);
                    continue;
                }
                for (v, c) in divergence_row(grid, &lay, i, j) {
                    mat.add(p, v, c);
                    mat.add(v, p, c);
                }
            }
        }
        let lu = mat.lu()?;
        Ok(Self { grid: grid.clone(), lay, lu })
    }

    pub fn grid(&self) -> &GridQ {
        &self.grid
    }

    pub fn solve(&self, f: &Field<f64>) -> Result<Bogovskii> {
        let grid = &self.grid;
        let (nx, nz) = (grid.nx, grid.nz);
        if f.nx != nx || f.nz != nz {
            return Err(Error::InvalidInput(alloc::format!(
                "right-hand side is {}x{}, grid is {nx}x{nz}",
                f.nx, f.nz
            )));
        }
        if f.data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("right-hand side is not finite".into()));
        }
        let target = zero_mean(grid, f);
        let mut rhs = vec![0.0; self.lay.len()];
        for i in 0..nx {
            for j in 0..nz {
                if i == 0 && j == 0 {
                    continue;
                }
                rhs[self.lay.cell(i, j)] = target.at(i, j) * grid.cell_volume(i);
            }
        }
        let x = self.lu.solve(&rhs);
        let mut field = FaceField::zeros(grid);
        for i in 0..nx {
            for j in 0..nz {
                field.u.set(i, j, x[self.lay.face_u(i, j)]);
            }
            for k in 1..nz {
                field.w.set(i, k, x[self.lay.face_w(i, k)]);
            }
        }
        let div = field.divergence(grid);
        let residual = div.data.iter().zip(&target.data).fold(0.0_f64, |m, (a, b)| m.max(abs(a - b)));
        let fnorm = sqrt(weighted_square(grid, &target));
        let stability = if fnorm > 0.0 { field.gradient_norm(grid) / fnorm } else { 0.0 };
        Ok(Bogovskii { field, residual, stability })
    }
}

/// One-shot [`BogovskiiSolver`] solve.
pub fn bogovskii_solve(grid: &GridQ, f: &Field<f64>) -> Result<Bogovskii> {
    BogovskiiSolver::new(grid)?.solve(f)
}

fn zero_mean(grid: &GridQ, f: &Field<f64>) -> Field<f64> {
    let mut total = 0.0;
    for i in 0..grid.nx {
        for j in 0..grid.nz {
            total += f.at(i, j) * grid.cell_volume(i);
        }
    }
    let mean = total / grid.area();
    let mut out = f.clone();
    for v in out.data.iter_mut() {
        *v -= mean;
    }
    out
}

fn weighted_square(grid: &GridQ, f: &Field<f64>) -> f64 {
    let mut s = 0.0;
    for i in 0..grid.nx {
        for j in 0..grid.nz {
            s += f.at(i, j) * f.at(i, j) * grid.cell_volume(i);
        }
    }
    s
}

/// Tangential wall velocity `g(y)` at `Z = 0`.
#[derive(Debug, Clone, PartialEq)]
pub enum WallTrace {
    Constant(f64),
    /// `mean + Σ c_k cos 2πky + Σ s_k sin 2πky`, `k ≥ 1`.
    Fourier { mean: f64, cos: Vec<f64>, sin: Vec<f64> },
}

impl WallTrace {
    pub fn at(&self, y: f64) -> f64 {
        match self {
            WallTrace::Constant(s) => *s,
            WallTrace::Fourier { mean, cos: c, sin: s } => {
                let mut v = *mean;
                for (k, a) in c.iter().enumerate() {
                    v += a * cos(2.0 * PI * (k + 1) as f64 * y);
                }
                for (k, a) in s.iter().enumerate() {
                    v += a * sin(2.0 * PI * (k + 1) as f64 * y);
                }
                v
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtensionSpec {
    pub trace: WallTrace,
    /// Layer width `η` in rescaled `Z`.
    pub eta: f64,
}

impl ExtensionSpec {
    fn check(&self, gap: &GapProfile) -> Result<()> {
        if !(self.eta > 0.0 && self.eta < gap.h_min()) {
            return Err(Error::InvalidInput(alloc::format!(
                "layer width eta = {} must lie in (0, h_min = {})",
                self.eta,
                gap.h_min()
            )));
        }
        Ok(())
    }
}

/// Stream-function velocity of `Φ(y, Z) = −g(y) η (Ψ₁(1) − Ψ₁(Z/η))`:
/// `h u = ∂_ζ Φ` on vertical faces and `ω = −∂_y Φ` on interior horizontal
/// faces, so every cell not touching the bottom wall is exactly
/// divergence-free. Bottom wall `ω` is set to zero.
fn stream_field(grid: &GridQ, g: &dyn Fn(f64) -> f64, eta: f64) -> FaceField {
    let (nx, nz) = (grid.nx, grid.nz);
    let (dy, dz) = (grid.dy(), grid.dz());
    let phi = |i: usize, k: usize| {
        let z = grid.zf(k) * grid.hf[i][0];
        -g(grid.yf(i)) * eta * (BUMP_MASS - bump_primitive(z / eta))
    };
    let mut f = FaceField::zeros(grid);
    for i in 0..nx {
        for j in 0..nz {
            f.u.set(i, j, (phi(i, j + 1) - phi(i, j)) / (grid.hf[i][0] * dz));
        }
        f.u_bottom[i] = g(grid.yf(i));
    }
    for i in 0..nx {
        let l = grid.left(i);
        for k in 1..nz {
            let om = -(phi(i, k) - phi(l, k)) / dy;
            f.w.set(i, k, om + grid.zf(k) * grid.hc[i][1] * u_at_wface(grid, &f.u, i, k));
        }
    }
    f
}

/// Extension `(s ψ(Z/η), 0)` of a constant wall speed, discretely
/// divergence-free by construction.
pub fn simple_extension(spec: &ExtensionSpec, grid: &GridQ) -> Result<FaceField> {
    spec.check(&grid.gap)?;
    let s = match spec.trace {
        WallTrace::Constant(s) => s,
        _ => return Err(Error::InvalidInput("simple extension needs a constant wall trace".into())),
    };
    Ok(stream_field(grid, &|_| s, spec.eta))
}

/// Extension of a variable wall speed: the layer profile `g(y) ψ(Z/η)` minus
/// the right inverse of its divergence.
pub fn corrected_extension(spec: &ExtensionSpec, grid: &GridQ) -> Result<FaceField> {
    corrected_extension_with(spec, &BogovskiiSolver::new(grid)?)
}

/// [`corrected_extension`] reusing a factored solver.
pub fn corrected_extension_with(spec: &ExtensionSpec, solver: &BogovskiiSolver) -> Result<FaceField> {
    let grid = solver.grid();
    spec.check(&grid.gap)?;
    let trace = spec.trace.clone();
    let mut field = stream_field(grid, &|y| trace.at(y), spec.eta);
    let div = field.divergence(grid);
    if max_abs(&div.data) > 0.0 {
        let b = solver.solve(&div)?;
        field.subtract(&b.field);
    }
    Ok(field)
}

/// `div ū` max-norm and trace error of an extension of `g`.
pub fn extension_defects(field: &FaceField, grid: &GridQ, trace: &WallTrace) -> (f64, f64) {
    let div = max_abs(&field.divergence(grid).data);
    let mut t = field.wall_normal_trace();
    for i in 0..grid.nx {
        t = t.max(abs(field.u_bottom[i] - trace.at(grid.yf(i)))).max(abs(field.u_top[i]));
    }
    (div, t)
}

/// One separable term `amp · trig(2πky) · ζ^power` of a [`ModalField`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModalTerm {
    /// `0`: constant, `k > 0`: `cos 2πky`, `k < 0`: `sin 2π|k|y`.
    pub wave: i32,
    pub power: u32,
    pub amp: f64,
}

/// Smooth scalar field on `Q` in sigma coordinates,
/// `Σ terms · (1−ζ)^{top} · ζ^{bottom}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalField {
    pub terms: Vec<ModalTerm>,
    pub vanish_top: bool,
    pub vanish_bottom: bool,
}

impl ModalField {
    /// `(v, ∂_y v |_Z, ∂_Z v)` at `(y, ζ)` for the gap triple `[h, h', h'']`.
    fn eval(&self, y: f64, zeta: f64, hh: [f64; 3]) -> (f64, f64, f64) {
        let (h, hp) = (hh[0], hh[1]);
        let t = self.vanish_top as i32;
        let b = self.vanish_bottom as u32;
        let (mut v, mut vy, mut vz) = (0.0, 0.0, 0.0);
        for term in &self.terms {
            let k = 2.0 * PI * term.wave.unsigned_abs() as f64;
            let (tr, dtr) = match term.wave {
                0 => (1.0, 0.0),
                w if w > 0 => (cos(k * y), -k * sin(k * y)),
                _ => (sin(k * y), k * cos(k * y)),
            };
            let e = (term.power + b) as i32;
            let top = if t == 1 { 1.0 - zeta } else { 1.0 };
            let shape = powi(zeta, e) * top;
            let mut dshape = if e > 0 { e as f64 * powi(zeta, e - 1) * top } else { 0.0 };
            if t == 1 {
                dshape -= powi(zeta, e);
            }
            v += term.amp * tr * shape;
            vy += term.amp * (dtr * shape - tr * dshape * zeta * hp / h);
            vz += term.amp * tr * dshape / h;
        }
        (v, vy, vz)
    }

    fn top_trace(&self, gap: &GapProfile) -> f64 {
        let mut worst: f64 = 0.0;
        for n in 0..64 {
            let y = (n as f64 + 0.5) / 64.0;
            worst = worst.max(abs(self.eval(y, 1.0, [gap.h(y), gap.dh(y), 0.0]).0));
        }
        worst
    }

    fn bottom_trace(&self, gap: &GapProfile) -> f64 {
        let mut worst: f64 = 0.0;
        for n in 0..64 {
            let y = (n as f64 + 0.5) / 64.0;
            worst = worst.max(abs(self.eval(y, 0.0, [gap.h(y), gap.dh(y), 0.0]).0));
        }
        worst
    }
}

/// Two-component field `(v_y, v_Z)` built from [`ModalField`]s.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorModal {
    pub horizontal: ModalField,
    pub vertical: ModalField,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InequalityKind {
    /// `‖v‖₂ ≤ ε‖∇v‖₂` on the thin domain, `v = 0` at the top wall.
    Poincare,
    /// `‖∇v‖₂² ≤ c ∫ S(∇v):∇v` for fields vanishing on both walls.
    Korn,
    /// `‖v‖₄ ≤ (‖∇_h v‖₂ + ‖v‖₂)^{½}(‖∂_Z v‖₂ + ‖v‖₂)^{½}` on `Q`.
    Anisotropic,
}

impl InequalityKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            InequalityKind::Poincare => "poincare",
            InequalityKind::Korn => "korn",
            InequalityKind::Anisotropic => "anisotropic",
        }
    }
}

/// Setting of an inequality check.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckDomain {
    pub gap: GapProfile,
    pub eps: f64,
    pub mu: f64,
    pub lambda_visc: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InequalityReport {
    pub kind: InequalityKind,
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs / rhs`, zero when both vanish. For Korn this is the constant `c`.
    pub ratio: f64,
}

const TRACE_TOL: f64 = 1e-12;

#[derive(Default)]
struct Moments {
    l2: f64,
    l4: f64,
    dy2: f64,
    dz2: f64,
    grad2: f64,
    stress: f64,
}

fn moments(field: &VectorModal, dom: &CheckDomain, thin: bool) -> Moments {
    const NY: usize = 128;
    let gl = GaussLegendre::new(20);
    let eps = if thin { dom.eps } else { 1.0 };
    let mut m = Moments::default();
    for n in 0..NY {
        let y = (n as f64 + 0.5) / NY as f64;
        let hh = [dom.gap.h(y), dom.gap.dh(y), dom.gap.d2h(y)];
        // dZ = h dζ; physical dz = ε dZ
        for (zeta, wq) in gl.mapped(0.0, 1.0) {
            let wt = wq * hh[0] * eps / NY as f64;
            let (a, ay, az) = field.horizontal.eval(y, zeta, hh);
            let (b, by, bz) = field.vertical.eval(y, zeta, hh);
            let (az, bz) = (az / eps, bz / eps);
            let v2 = a * a + b * b;
            m.l2 += v2 * wt;
            m.l4 += v2 * v2 * wt;
            m.dy2 += (ay * ay + by * by) * wt;
            m.dz2 += (az * az + bz * bz) * wt;
            let grad = ay * ay + az * az + by * by + bz * bz;
            m.grad2 += grad * wt;
            let div = ay + bz;
            let off = 0.5 * (az + by);
            let sym = ay * ay + bz * bz + 2.0 * off * off;
            m.stress += (2.0 * dom.mu * sym + dom.lambda_visc * div * div) * wt;
        }
    }
    m
}

/// Evaluates one inequality on an analytic field by tensor quadrature
/// (midpoint in `y`, Gauss–Legendre in `ζ`).
pub fn inequality_check(kind: InequalityKind, field: &VectorModal, dom: &CheckDomain) -> Result<InequalityReport> {
    if !(dom.eps > 0.0) {
        return Err(Error::InvalidInput(alloc::format!("eps must be positive, got {}", dom.eps)));
    }
    let gap = &dom.gap;
    let top = field.horizontal.top_trace(gap).max(field.vertical.top_trace(gap));
    let bottom = match kind {
        InequalityKind::Poincare => 0.0,
        InequalityKind::Anisotropic => field.vertical.bottom_trace(gap),
        InequalityKind::Korn => field.horizontal.bottom_trace(gap).max(field.vertical.bottom_trace(gap)),
    };
    let trace = top.max(bottom);
    if trace > TRACE_TOL {
        return Err(Error::Hypothesis {
            kind: kind.as_str(),
            trace,
            tolerance: TRACE_TOL,
        });
    }
    let (lhs, rhs) = match kind {
        InequalityKind::Poincare => {
            let m = moments(field, dom, true);
            (sqrt(m.l2), dom.eps * sqrt(m.grad2))
        }
        InequalityKind::Korn => {
            let m = moments(field, dom, true);
            (m.grad2, m.stress)
        }
        InequalityKind::Anisotropic => {
            let m = moments(field, dom, false);
            let v = sqrt(m.l2);
            (sqrt(sqrt(m.l4)), sqrt((sqrt(m.dy2) + v) * (sqrt(m.dz2) + v)))
        }
    };
    let ratio = if lhs == 0.0 { 0.0 } else { lhs / rhs };
    Ok(InequalityReport { kind, lhs, rhs, ratio })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::GaussLegendre;

    struct Mix(u64);

    impl Mix {
        fn next(&mut self) -> f64 {
            self.0 = self.0.wrapping_add(0x9e3779b97f4a7c15);
            let mut z = self.0;
            z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
            ((z ^ (z >> 31)) >> 11) as f64 / (1u64 << 53) as f64
        }
    }

    fn wavy_grid(nx: usize, nz: usize) -> GridQ {
        GridQ::new(&GapProfile::cosine(1.0, vec![0.3]).unwrap(), nx, nz, 0.1).unwrap()
    }

    #[test]
    fn bump_closed_forms() {
        let gl = GaussLegendre::new(12);
        assert!((gl.integrate(bump, 0.0, 1.0) - BUMP_MASS).abs() < 1e-15);
        for t in [0.0, 0.2, 0.7, 1.0] {
            assert!((gl.integrate(bump, 0.0, t) - bump_primitive(t)).abs() < 1e-15);
            let e = 1e-6;
            let fd = (bump(t + e) - bump((t - e).max(0.0))) / (t + e - (t - e).max(0.0));
            assert!((fd - bump_slope(t)).abs() < 1e-5);
        }
        assert_eq!(bump(0.0), 1.0);
        assert_eq!(bump(1.3), 0.0);
        // ∫ψ² = 2/7 from exact rational expansion
        assert!((bump_power_integral(2.0) - 2.0 / 7.0).abs() < 1e-14);
    }

    #[test]
    fn constant_source_gives_zero_field() {
        let g = wavy_grid(8, 6);
        let b = bogovskii_solve(&g, &Field::filled(8, 6, 3.5)).unwrap();
        assert!(max_abs(&b.field.u.data) < 1e-12);
        assert!(max_abs(&b.field.w.data) < 1e-12);
    }

    #[test]
    fn sine_source_on_rectangle() {
        let g = GridQ::new(&GapProfile::constant(1.0).unwrap(), 16, 8, 1.0).unwrap();
        let mut f = Field::filled(16, 8, 0.0);
        for i in 0..16 {
            for j in 0..8 {
                f.set(i, j, sin(2.0 * PI * g.yc(i)));
            }
        }
        let b = bogovskii_solve(&g, &f).unwrap();
        assert!(b.residual < 1e-10, "{}", b.residual);
        assert_eq!(b.field.wall_normal_trace(), 0.0);
        assert!(b.stability > 0.0 && b.stability.is_finite());
    }

    #[test]
    fn solver_is_linear() {
        let g = wavy_grid(8, 6);
        let solver = BogovskiiSolver::new(&g).unwrap();
        let mut rng = Mix(11);
        let mut f1 = Field::filled(8, 6, 0.0);
        let mut f2 = Field::filled(8, 6, 0.0);
        for v in f1.data.iter_mut().chain(f2.data.iter_mut()) {
            *v = rng.next() - 0.5;
        }
        let mut comb = f1.clone();
        for (c, b) in comb.data.iter_mut().zip(&f2.data) {
            *c = 2.0 * *c - 3.0 * b;
        }
        let (b1, b2, bc) = (solver.solve(&f1).unwrap(), solver.solve(&f2).unwrap(), solver.solve(&comb).unwrap());
        for k in 0..b1.field.u.data.len() {
            let lin = 2.0 * b1.field.u.data[k] - 3.0 * b2.field.u.data[k];
            assert!((lin - bc.field.u.data[k]).abs() < 1e-11);
        }
        assert!(bc.residual < 1e-10);
    }

    #[test]
    fn simple_extension_is_divergence_free() {
        let g = wavy_grid(16, 24);
        let spec = ExtensionSpec { trace: WallTrace::Constant(1.5), eta: 0.2 };
        let f = simple_extension(&spec, &g).unwrap();
        let (div, trace) = extension_defects(&f, &g, &spec.trace);
        assert!(div < 1e-12, "{div}");
        assert_eq!(trace, 0.0);
        // cells entirely above the layer carry no velocity
        assert!(f.u.at(3, 23).abs() < 1e-15);
    }

    #[test]
    fn constant_trace_needs_no_correction() {
        let g = wavy_grid(8, 12);
        let spec = ExtensionSpec { trace: WallTrace::Constant(0.8), eta: 0.3 };
        let a = simple_extension(&spec, &g).unwrap();
        let b = corrected_extension(&spec, &g).unwrap();
        for (x, y) in a.u.data.iter().zip(&b.u.data) {
            assert!((x - y).abs() < 1e-13);
        }
    }

    #[test]
    fn variable_trace_extension() {
        let g = wavy_grid(16, 16);
        let spec = ExtensionSpec {
            trace: WallTrace::Fourier { mean: 1.0, cos: vec![], sin: vec![0.3] },
            eta: 0.1,
        };
        let f = corrected_extension(&spec, &g).unwrap();
        let (div, trace) = extension_defects(&f, &g, &spec.trace);
        assert!(div < 1e-8, "{div}");
        assert!(trace < 1e-10);
    }

    #[test]
    fn extension_rejects_wide_layer() {
        let g = wavy_grid(8, 6);
        let spec = ExtensionSpec { trace: WallTrace::Constant(1.0), eta: 0.8 };
        assert!(simple_extension(&spec, &g).is_err());
    }

    #[test]
    fn layer_norm_scaling() {
        for q in [2.0, 4.0] {
            let r = profile_lq_norm(1.0, 0.2, q) / profile_lq_norm(1.0, 0.1, q);
            assert!((r - powf(2.0, 1.0 / q)).abs() < 1e-12);
        }
    }

    fn random_field(rng: &mut Mix, vanish_bottom: bool) -> VectorModal {
        let mut comp = |bottom: bool| ModalField {
            terms: (0..4)
                .map(|_| ModalTerm {
                    wave: (rng.next() * 7.0) as i32 - 3,
                    power: (rng.next() * 3.0) as u32,
                    amp: 2.0 * rng.next() - 1.0,
                })
                .collect(),
            vanish_top: true,
            vanish_bottom: bottom,
        };
        VectorModal { horizontal: comp(vanish_bottom), vertical: comp(true) }
    }

    #[test]
    fn inequalities_hold_on_random_fields() {
        let mut rng = Mix(5);
        let dom = CheckDomain {
            gap: GapProfile::cosine(0.75, vec![0.25]).unwrap(),
            eps: 0.1,
            mu: 1.0,
            lambda_visc: 1.0,
        };
        for _ in 0..10 {
            let f = random_field(&mut rng, false);
            let a4 = inequality_check(InequalityKind::Anisotropic, &f, &dom).unwrap();
            assert!(a4.ratio <= 1.0, "{a4:?}");
            let j9 = inequality_check(InequalityKind::Poincare, &f, &dom).unwrap();
            assert!(j9.ratio <= 1.0, "{j9:?}");
            let k = inequality_check(InequalityKind::Korn, &random_field(&mut rng, true), &dom).unwrap();
            assert!(k.ratio > 0.0 && k.ratio.is_finite());
        }
    }

    #[test]
    fn zero_field_and_bad_trace() {
        let dom = CheckDomain { gap: GapProfile::constant(1.0).unwrap(), eps: 0.2, mu: 1.0, lambda_visc: 0.5 };
        let zero = ModalField { terms: vec![], vanish_top: true, vanish_bottom: true };
        let f = VectorModal { horizontal: zero.clone(), vertical: zero };
        assert_eq!(inequality_check(InequalityKind::Poincare, &f, &dom).unwrap().ratio, 0.0);
        let loose = ModalField { terms: vec![ModalTerm { wave: 0, power: 0, amp: 1.0 }], vanish_top: false, vanish_bottom: false };
        let g = VectorModal { horizontal: loose, vertical: f.vertical.clone() };
        assert!(matches!(inequality_check(InequalityKind::Poincare, &g, &dom), Err(Error::Hypothesis { .. })));
    }

    #[test]
    fn poincare_sharp_on_first_mode() {
        // cos(πζ/2)-like content: ratio approaches 2h/π from below
        let dom = CheckDomain { gap: GapProfile::constant(1.0).unwrap(), eps: 1e-3, mu: 1.0, lambda_visc: 1.0 };
        let f = VectorModal {
            horizontal: ModalField { terms: vec![ModalTerm { wave: 0, power: 0, amp: 1.0 }], vanish_top: true, vanish_bottom: false },
            vertical: ModalField { terms: vec![], vanish_top: true, vanish_bottom: true },
        };
        let r = inequality_check(InequalityKind::Poincare, &f, &dom).unwrap().ratio;
        // v = 1 − ζ: ‖v‖² = 1/3, ‖∂v‖² = 1
        assert!((r - sqrt(1.0 / 3.0)).abs() < 1e-10);
        assert!(r < 2.0 / PI);
    }
}
