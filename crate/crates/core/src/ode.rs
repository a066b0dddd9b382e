//! Adaptive Dormand–Prince 5(4) integration with bound events.

use crate::math::{abs, powf};
use crate::{Error, Result};

/// Why an integration stopped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exit {
    Completed,
    HitFloor { at: f64 },
    HitCeiling { at: f64 },
}

/// Bounds monitored on one state component.
#[derive(Debug, Clone, Copy)]
pub struct Bounds {
    pub component: usize,
    pub floor: f64,
    pub ceiling: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct Outcome<const N: usize> {
    pub t: f64,
    pub y: [f64; N],
    pub exit: Exit,
    pub steps: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct DormandPrince {
    pub rtol: f64,
    pub atol: f64,
    pub h_min: f64,
    pub max_steps: usize,
}

impl Default for DormandPrince {
    fn default() -> Self {
        Self {
            rtol: 1e-12,
            atol: 1e-14,
            h_min: 1e-14,
            max_steps: 1_000_000,
        }
    }
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// fifth-order weights are the last row of A; these are 5th minus 4th order
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

enum Violation {
    Floor,
    Ceiling,
}

impl DormandPrince {
    /// Integrates `y' = f(t, y)` from `t0` to `t1 > t0`. `f` returns `None`
    /// when the state is outside its domain; such steps are retried smaller.
    pub fn integrate<const N: usize, F>(
        &self,
        mut f: F,
        t0: f64,
        t1: f64,
        y0: [f64; N],
        bounds: Option<Bounds>,
    ) -> Result<Outcome<N>>
    where
        F: FnMut(f64, &[f64; N]) -> Option<[f64; N]>,
    {
        let mut t = t0;
        let mut y = y0;
        if t1 <= t0 {
            return Ok(Outcome { t, y, exit: Exit::Completed, steps: 0 });
        }
        let check = |y: &[f64; N]| -> Option<Violation> {
            let b = bounds?;
            let v = y[b.component];
            if !(v > b.floor) {
                Some(Violation::Floor)
            } else if !(v < b.ceiling) {
                Some(Violation::Ceiling)
            } else {
                None
            }
        };
        if let Some(v) = check(&y) {
            return Ok(Outcome { t, y, exit: exit_of(v, t), steps: 0 });
        }
        let mut k0 = match f(t, &y) {
            Some(k) => k,
            None => {
                return Err(Error::InvalidInput(alloc::string::String::from(
                    "initial state outside the right-hand side domain",
                )))
            }
        };
        let span = t1 - t0;
        let event_tol = span * 1e-10;
        let mut h = (span * 1e-3).max(self.h_min * 10.0);
        let mut steps = 0;
        let mut last_violation = Violation::Floor;
        while t < t1 {
            if steps >= self.max_steps {
                return Err(Error::StiffFailure { at: t, step: h });
            }
            let last = t + h >= t1;
            let step = if last { t1 - t } else { h };
            let mut k = [[0.0; N]; 7];
            k[0] = k0;
            let mut ok = true;
            let mut ynew = y;
            for s in 1..7 {
                let mut ys = y;
                for (i, yi) in ys.iter_mut().enumerate() {
                    let mut acc = 0.0;
                    for j in 0..s {
                        acc += A[s][j] * k[j][i];
                    }
                    *yi += step * acc;
                }
                if s == 6 {
                    ynew = ys;
                }
                if let Some(v) = check(&ys) {
                    last_violation = v;
                }
                match f(t + C[s] * step, &ys) {
                    Some(ks) => k[s] = ks,
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            steps += 1;
            if !ok {
                h = step * 0.25;
                if h < self.h_min {
                    return Ok(Outcome {
                        t,
                        y,
                        exit: exit_of(last_violation, t),
                        steps,
                    });
                }
                continue;
            }
            let mut err: f64 = 0.0;
            for i in 0..N {
                let mut e = 0.0;
                for s in 0..7 {
                    e += E[s] * k[s][i];
                }
                let sc = self.atol + self.rtol * abs(y[i]).max(abs(ynew[i]));
                err = err.max(abs(step * e) / sc);
            }
            if err <= 1.0 {
                if let Some(v) = check(&ynew) {
                    // localize the crossing by halving before reporting it
                    if step > event_tol {
                        h = step * 0.5;
                        last_violation = v;
                        continue;
                    }
                    return Ok(Outcome { t: t + step, y: ynew, exit: exit_of(v, t + step), steps });
                }
                t = if last { t1 } else { t + step };
                y = ynew;
                k0 = k[6];
                let fac = if err == 0.0 { 5.0 } else { 0.9 * powf(err, -0.2) };
                h = step * fac.clamp(0.2, 5.0);
            } else {
                let fac = 0.9 * powf(err, -0.2);
                h = step * fac.clamp(0.1, 0.9);
                if h < self.h_min {
                    // a bound approached with unbounded slope is an event, not stiffness
                    if let Some(b) = bounds {
                        let (v, dv) = (y[b.component], k0[b.component]);
                        let reach = span * 1e-6;
                        if dv < 0.0 && (v - b.floor) < -dv * reach {
                            return Ok(Outcome { t, y, exit: Exit::HitFloor { at: t }, steps });
                        }
                        if dv > 0.0 && (b.ceiling - v) < dv * reach {
                            return Ok(Outcome { t, y, exit: Exit::HitCeiling { at: t }, steps });
                        }
                    }
                    return Err(Error::StiffFailure { at: t, step: h });
                }
            }
        }
        Ok(Outcome { t, y, exit: Exit::Completed, steps })
    }
}

fn exit_of(v: Violation, t: f64) -> Exit {
    match v {
        Violation::Floor => Exit::HitFloor { at: t },
        Violation::Ceiling => Exit::HitCeiling { at: t },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{cos, exp, sin};

    #[test]
    fn exponential_and_oscillator() {
        let dp = DormandPrince::default();
        let out = dp
            .integrate(|_, y: &[f64; 1]| Some([-2.0 * y[0]]), 0.0, 1.5, [1.0], None)
            .unwrap();
        assert!((out.y[0] - exp(-3.0)).abs() < 1e-12);
        let out = dp
            .integrate(|_, y: &[f64; 2]| Some([y[1], -y[0]]), 0.0, 10.0, [0.0, 1.0], None)
            .unwrap();
        assert!((out.y[0] - sin(10.0)).abs() < 1e-10);
        assert!((out.y[1] - cos(10.0)).abs() < 1e-10);
    }

    #[test]
    fn floor_event() {
        let dp = DormandPrince::default();
        let b = Bounds { component: 0, floor: 0.1, ceiling: 10.0 };
        let out = dp
            .integrate(|_, _y: &[f64; 1]| Some([-1.0]), 0.0, 2.0, [1.0], Some(b))
            .unwrap();
        match out.exit {
            Exit::HitFloor { at } => assert!(at > 0.85 && at <= 1.0),
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn domain_barrier_is_classified() {
        // y' = -1/y reaches zero at t = 1/2 with a square-root singularity
        let dp = DormandPrince::default();
        let b = Bounds { component: 0, floor: 1e-9, ceiling: 10.0 };
        let out = dp
            .integrate(
                |_, y: &[f64; 1]| if y[0] > 0.0 { Some([-1.0 / y[0]]) } else { None },
                0.0,
                2.0,
                [1.0],
                Some(b),
            )
            .unwrap();
        assert!(matches!(out.exit, Exit::HitFloor { .. }), "{:?}", out.exit);
    }
}
