//! Explicit embedded Runge–Kutta integrator: Dormand–Prince 5(4) with FSAL,
//! PI step-size control and a max-norm error estimate.
//!
//! The right-hand side is fallible. A failing evaluation (or a non-finite
//! stage) is treated as a rejected step and the step is shrunk; the
//! integration only gives up once the step falls below `h_min`, in which
//! case the last right-hand-side error is returned to the caller.
//! Integration runs in either direction of the independent variable.

use crate::scalar::Real;

// Butcher tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
// Difference between the 5th and embedded 4th order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

// PI controller constants.
const SAFETY: f64 = 0.9;
const BETA: f64 = 0.04;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const RHS_FAILURE_SHRINK: f64 = 0.25;

#[derive(Debug, Clone, Copy)]
pub struct Dopri5Config<T> {
    pub rtol: T,
    pub atol: T,
    /// Initial step magnitude; estimated from the problem when `None`.
    pub h_init: Option<T>,
    /// Smallest admissible step magnitude.
    pub h_min: T,
    pub h_max: T,
    pub max_steps: usize,
}

impl<T: Real> Dopri5Config<T> {
    pub fn with_tol(tol: T) -> Self {
        Self {
            rtol: tol,
            atol: tol,
            h_init: None,
            h_min: T::lit(1e-14),
            h_max: T::infinity(),
            max_steps: 5_000_000,
        }
    }
}

/// Snapshot handed to the observer after every accepted step.
#[derive(Debug)]
pub struct StepInfo<'a, T> {
    pub t: T,
    pub y: &'a [T],
    /// Size of the step that was just accepted (signed).
    pub h: T,
    pub accepted: usize,
    pub rejected: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Termination<E> {
    /// The end point was reached.
    Reached,
    /// The observer requested a stop.
    Stopped,
    /// The step shrank below `h_min` (or below the resolution of `t`).
    StepCollapse {
        h: f64,
        last_error: Option<E>,
    },
    MaxSteps,
}

#[derive(Debug, Clone)]
pub struct Integration<T, E> {
    pub t: T,
    pub y: Vec<T>,
    pub termination: Termination<E>,
    pub accepted: usize,
    pub rejected: usize,
}

#[derive(Debug, Clone)]
pub struct Dopri5<T> {
    pub config: Dopri5Config<T>,
}

struct Work<T> {
    k: [Vec<T>; 7],
    ytmp: Vec<T>,
    ynew: Vec<T>,
}

impl<T: Real> Dopri5<T> {
    pub fn new(config: Dopri5Config<T>) -> Self {
        Self { config }
    }

    /// Integrates `y' = rhs(t, y)` from `t0` to `t_end`, calling `observer`
    /// after every accepted step.
    pub fn integrate<E, F, O>(&self, mut rhs: F, t0: T, y0: &[T], t_end: T, mut observer: O) -> Integration<T, E>
    where
        F: FnMut(T, &[T], &mut [T]) -> Result<(), E>,
        O: FnMut(&StepInfo<'_, T>) -> Control,
    {
        let cfg = &self.config;
        let dim = y0.len();
        let dir = if t_end >= t0 { T::one() } else { -T::one() };
        let mut t = t0;
        let mut y = y0.to_vec();
        let mut accepted = 0usize;
        let mut rejected = 0usize;
        let finish = |t, y, termination, accepted, rejected| Integration {
            t,
            y,
            termination,
            accepted,
            rejected,
        };

        if t0 == t_end {
            return finish(t, y, Termination::Reached, 0, 0);
        }

        let mut w = Work {
            k: std::array::from_fn(|_| vec![T::zero(); dim]),
            ytmp: vec![T::zero(); dim],
            ynew: vec![T::zero(); dim],
        };

        if let Err(e) = rhs(t, &y, &mut w.k[0]) {
            let term = Termination::StepCollapse {
                h: 0.0,
                last_error: Some(e),
            };
            return finish(t, y, term, 0, 0);
        }

        let span = (t_end - t0).abs();
        let h_max = cfg.h_max.min(span);
        let mut h = match cfg.h_init {
            Some(h) => h.abs().min(h_max),
            None => self.initial_step(&mut rhs, t, &y, dir, h_max, &mut w),
        } * dir;

        let expo1 = T::lit(0.2 - BETA * 0.75);
        let beta = T::lit(BETA);
        let safety = T::lit(SAFETY);
        let facc1 = T::lit(1.0 / FAC_MIN);
        let facc2 = T::lit(1.0 / FAC_MAX);
        let mut facold = T::lit(1e-4);
        let mut last_rejected = false;
        let mut last_error: Option<E> = None;

        loop {
            if accepted + rejected >= cfg.max_steps {
                return finish(t, y, Termination::MaxSteps, accepted, rejected);
            }
            // Clamp onto the end point.
            if ((t + h) - t_end) * dir > T::zero() {
                h = t_end - t;
            }
            if h.abs() < cfg.h_min || t + h == t {
                let term = Termination::StepCollapse {
                    h: h.abs().as_f64(),
                    last_error,
                };
                return finish(t, y, term, accepted, rejected);
            }

            let err = match self.try_step(&mut rhs, t, &y, h, &mut w) {
                Err(e) => {
                    last_error = Some(e);
                    T::infinity()
                }
                Ok(err) => err,
            };
            if !err.is_finite() {
                rejected += 1;
                last_rejected = true;
                h = h * T::lit(RHS_FAILURE_SHRINK);
                continue;
            }

            let fac11 = err.powf(expo1);
            if err <= T::one() {
                let fac = (fac11 / facold.powf(beta) / safety).max(facc2).min(facc1);
                facold = err.max(T::lit(1e-4));
                t = t + h;
                std::mem::swap(&mut y, &mut w.ynew);
                // FSAL: stage 7 is the derivative at the new point.
                w.k.swap(0, 6);
                accepted += 1;
                last_error = None;
                let mut hnew = (h.abs() / fac).min(cfg.h_max);
                if last_rejected {
                    hnew = hnew.min(h.abs());
                }
                last_rejected = false;
                let info = StepInfo {
                    t,
                    y: &y,
                    h,
                    accepted,
                    rejected,
                };
                if observer(&info) == Control::Stop {
                    return finish(t, y, Termination::Stopped, accepted, rejected);
                }
                if (t - t_end) * dir >= T::zero() {
                    return finish(t, y, Termination::Reached, accepted, rejected);
                }
                h = hnew * dir;
            } else {
                rejected += 1;
                last_rejected = true;
                h = h / (fac11 / safety).min(facc1);
            }
        }
    }

    /// One trial step from `(t, y)` with derivative in `k[0]`.
    /// Writes the candidate into `ynew` and the stage-7 derivative into
    /// `k[6]`; returns the scaled max-norm error.
    fn try_step<E, F>(&self, rhs: &mut F, t: T, y: &[T], h: T, w: &mut Work<T>) -> Result<T, E>
    where
        F: FnMut(T, &[T], &mut [T]) -> Result<(), E>,
    {
        let l = T::lit;
        let dim = y.len();
        let Work { k, ytmp, ynew } = w;

        for i in 0..dim {
            ytmp[i] = y[i] + h * l(A21) * k[0][i];
        }
        rhs(t + l(C2) * h, ytmp, &mut k[1])?;
        for i in 0..dim {
            ytmp[i] = y[i] + h * (l(A31) * k[0][i] + l(A32) * k[1][i]);
        }
        rhs(t + l(C3) * h, ytmp, &mut k[2])?;
        for i in 0..dim {
            ytmp[i] = y[i] + h * (l(A41) * k[0][i] + l(A42) * k[1][i] + l(A43) * k[2][i]);
        }
        rhs(t + l(C4) * h, ytmp, &mut k[3])?;
        for i in 0..dim {
            ytmp[i] = y[i] + h * (l(A51) * k[0][i] + l(A52) * k[1][i] + l(A53) * k[2][i] + l(A54) * k[3][i]);
        }
        rhs(t + l(C5) * h, ytmp, &mut k[4])?;
        for i in 0..dim {
            ytmp[i] = y[i]
                + h * (l(A61) * k[0][i] + l(A62) * k[1][i] + l(A63) * k[2][i] + l(A64) * k[3][i] + l(A65) * k[4][i]);
        }
        rhs(t + h, ytmp, &mut k[5])?;
        for i in 0..dim {
            ynew[i] = y[i]
                + h * (l(A71) * k[0][i] + l(A73) * k[2][i] + l(A74) * k[3][i] + l(A75) * k[4][i] + l(A76) * k[5][i]);
        }
        if ynew.iter().any(|v| !v.is_finite()) {
            return Ok(T::infinity());
        }
        rhs(t + h, ynew, &mut k[6])?;

        let cfg = &self.config;
        let mut err = T::zero();
        for i in 0..dim {
            let e = h
                * (l(E1) * k[0][i]
                    + l(E3) * k[2][i]
                    + l(E4) * k[3][i]
                    + l(E5) * k[4][i]
                    + l(E6) * k[5][i]
                    + l(E7) * k[6][i]);
            let sk = cfg.atol + cfg.rtol * y[i].abs().max(ynew[i].abs());
            let r = (e / sk).abs();
            // Written so that NaN propagates.
            if !(r <= err) {
                err = r;
            }
        }
        Ok(err)
    }

    fn initial_step<E, F>(&self, rhs: &mut F, t: T, y: &[T], dir: T, h_max: T, w: &mut Work<T>) -> T
    where
        F: FnMut(T, &[T], &mut [T]) -> Result<(), E>,
    {
        let cfg = &self.config;
        let scale = |v: T| cfg.atol + cfg.rtol * v.abs();
        let mut d0 = T::zero();
        let mut d1 = T::zero();
        for i in 0..y.len() {
            d0 = d0.max((y[i] / scale(y[i])).abs());
            d1 = d1.max((w.k[0][i] / scale(y[i])).abs());
        }
        let mut h0 = if d0 < T::lit(1e-10) || d1 < T::lit(1e-10) {
            T::lit(1e-6)
        } else {
            T::lit(0.01) * d0 / d1
        };
        h0 = h0.min(h_max);
        for i in 0..y.len() {
            w.ytmp[i] = y[i] + dir * h0 * w.k[0][i];
        }
        if rhs(t + dir * h0, &w.ytmp, &mut w.k[1]).is_err() {
            return (h0 * T::lit(1e-2)).max(cfg.h_min);
        }
        let mut d2 = T::zero();
        for i in 0..y.len() {
            d2 = d2.max(((w.k[1][i] - w.k[0][i]) / scale(y[i])).abs());
        }
        d2 = d2 / h0;
        let der = d1.max(d2);
        let h1 = if der <= T::lit(1e-15) {
            T::lit(1e-6).max(h0 * T::lit(1e-3))
        } else {
            (T::lit(0.01) / der).powf(T::lit(0.2))
        };
        let h = (T::lit(100.0) * h0).min(h1).min(h_max);
        if h.is_finite() && h > T::zero() {
            h
        } else {
            T::lit(1e-6).min(h_max)
        }
    }
}
