//! Affine solutions `V = a(t) x + A(t)`, `E = b(t) x + B(t)`.
//!
//! Substituting the ansatz reduces the field equations to
//!
//! ```text
//! a' = -a^2 - b - nu a        b' = (1 - b) a
//! A' = -A (a + nu) - B        B' = (1 - b) A        nu = eps f(1 - b)
//! ```
//!
//! The `(a, b)` pair decouples. For `eps = 0` it conserves
//! `C = (a^2 + 2b - 1)/(1 - b)^2`, whose sign decides between bounded
//! (ellipse) and escaping (parabola, hyperbola) phase curves.

use std::convert::Infallible;

use crate::damping::DampingSpec;
use crate::error::{Error, Result};
use crate::ode::{Control, Dopri5, Dopri5Config, Termination};
use crate::outcome::{BlowupThresholds, Verdict};
use crate::scalar::{median, Real};

/// Default tolerance on `C` for calling a conic a parabola.
pub const PARABOLA_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineState<T> {
    pub t: T,
    /// Velocity slope `V_x`.
    pub a: T,
    /// Field slope `E_x`; density is `1 - b`.
    pub b: T,
    /// Velocity offset `A`.
    pub v_offset: T,
    /// Field offset `B`.
    pub e_offset: T,
}

impl<T: Real> AffineState<T> {
    pub fn new(a: T, b: T, v_offset: T, e_offset: T) -> Self {
        Self {
            t: T::zero(),
            a,
            b,
            v_offset,
            e_offset,
        }
    }

    /// Slopes only, zero offsets.
    pub fn slopes(a: T, b: T) -> Self {
        Self::new(a, b, T::zero(), T::zero())
    }

    pub fn density(&self) -> T {
        T::one() - self.b
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConicKind {
    Ellipse,
    Parabola,
    Hyperbola,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConicClass<T> {
    pub c: T,
    pub kind: ConicKind,
}

/// The conserved quantity `(a^2 + 2b - 1)/(1 - b)^2` of the undamped flow.
#[inline]
pub fn conic_invariant<T: Real>(a: T, b: T) -> T {
    let m = T::one() - b;
    (a * a + b + b - T::one()) / (m * m)
}

pub fn conic_constant<T: Real>(a0: T, b0: T) -> Result<ConicClass<T>> {
    conic_constant_with_tol(a0, b0, T::lit(PARABOLA_TOL))
}

pub fn conic_constant_with_tol<T: Real>(a0: T, b0: T, tau: T) -> Result<ConicClass<T>> {
    if !(b0 < T::one()) {
        return Err(Error::NonPositiveDensity {
            density: (T::one() - b0).as_f64(),
            location: "conic constant".into(),
        });
    }
    let c = conic_invariant(a0, b0);
    let kind = if c.abs() <= tau {
        ConicKind::Parabola
    } else if c < T::zero() {
        ConicKind::Ellipse
    } else {
        ConicKind::Hyperbola
    };
    Ok(ConicClass { c, kind })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Upper,
    Lower,
}

impl Branch {
    pub fn sign<T: Real>(self) -> T {
        match self {
            Branch::Upper => T::one(),
            Branch::Lower => -T::one(),
        }
    }
}

/// Radicand `1 - 2b + C (1 - b)^2` of the undamped phase curve.
#[inline]
pub fn conic_radicand<T: Real>(b: T, c: T) -> T {
    let m = T::one() - b;
    T::one() - b - b + c * m * m
}

/// `a = ±sqrt(1 - 2b + C (1 - b)^2)`.
pub fn unperturbed_branch<T: Real>(b: T, c: T, branch: Branch) -> Result<T> {
    let r = conic_radicand(b, c);
    if r < T::zero() {
        return Err(Error::Domain(format!(
            "point b = {b} lies off the real locus of the conic C = {c} (radicand {r})"
        )));
    }
    Ok(branch.sign::<T>() * r.sqrt())
}

/// Which form of the offset equation `A'` to integrate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OffsetEquation {
    /// `A' = -A (a + nu) - B`, consistent with the field equations.
    #[default]
    Consistent,
    /// `A' = -A (a - nu) - B`, kept for comparison runs.
    FlippedSign,
}

#[derive(Debug, Clone, Copy)]
pub struct AffineOptions<T> {
    pub t_end: T,
    pub tol: T,
    pub thresholds: BlowupThresholds<T>,
    pub offset_equation: OffsetEquation,
}

impl<T: Real> AffineOptions<T> {
    pub fn new(t_end: T, tol: T) -> Self {
        Self {
            t_end,
            tol,
            thresholds: BlowupThresholds::default(),
            offset_equation: OffsetEquation::Consistent,
        }
    }
}

/// One accepted step of an affine run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineSample<T> {
    pub state: AffineState<T>,
    /// Size of the step that produced this sample; zero for the initial point.
    pub step: T,
}

impl<T: Real> AffineSample<T> {
    pub fn inv_c(&self) -> T {
        conic_invariant(self.state.a, self.state.b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineDiagnostics<T> {
    pub max_abs_a: T,
    pub min_b: T,
    pub min_density: T,
    pub accepted: usize,
    pub rejected: usize,
}

#[derive(Debug, Clone)]
pub struct AffineOutcome<T> {
    pub verdict: Verdict<T>,
    pub trace: Vec<AffineSample<T>>,
    pub diagnostics: AffineDiagnostics<T>,
}

/// Watches accepted steps for the blow-up signature: a slope beyond the
/// threshold together with a step that has collapsed relative to the
/// median step taken while the slope was moderate.
#[derive(Debug, Clone)]
pub(crate) struct CollapseMonitor<T> {
    thresholds: BlowupThresholds<T>,
    regular_cap: T,
    regular_steps: Vec<T>,
    first_step: Option<T>,
}

impl<T: Real> CollapseMonitor<T> {
    pub(crate) fn new(thresholds: BlowupThresholds<T>) -> Self {
        Self {
            thresholds,
            // Steps count as "regular" while |slope| <= threshold^(1/4).
            regular_cap: thresholds.slope.sqrt().sqrt(),
            regular_steps: Vec::new(),
            first_step: None,
        }
    }

    /// Feeds one accepted step; returns true once blow-up is confirmed.
    pub(crate) fn observe(&mut self, slope_abs: T, h: T) -> bool {
        let h = h.abs();
        if h == T::zero() {
            return false;
        }
        self.first_step.get_or_insert(h);
        if slope_abs <= self.regular_cap {
            self.regular_steps.push(h);
        }
        if slope_abs > self.thresholds.slope {
            let reference = median(&self.regular_steps).or(self.first_step).unwrap_or(h);
            return h * self.thresholds.step_shrink <= reference;
        }
        false
    }
}

/// Earliest time in `trace` where `|a|` exceeds the slope threshold while
/// the adaptive step has shrunk by at least `step_shrink` from its
/// regular-regime median.
pub fn detect_blowup<T: Real>(trace: &[AffineSample<T>], thresholds: &BlowupThresholds<T>) -> Option<T> {
    let mut monitor = CollapseMonitor::new(*thresholds);
    trace
        .iter()
        .find(|s| monitor.observe(s.state.a.abs(), s.step))
        .map(|s| s.state.t)
}

fn affine_rhs<T: Real>(spec: &DampingSpec<T>, offset_equation: OffsetEquation, y: &[T], dy: &mut [T]) -> Result<()> {
    let (a, b, va, eb) = (y[0], y[1], y[2], y[3]);
    let n = T::one() - b;
    if !(n > T::zero()) {
        return Err(Error::NonPositiveDensity {
            density: n.as_f64(),
            location: "affine slope b".into(),
        });
    }
    let nu = spec.rate(n);
    dy[0] = -a * a - b - nu * a;
    dy[1] = n * a;
    dy[2] = match offset_equation {
        OffsetEquation::Consistent => -va * (a + nu) - eb,
        OffsetEquation::FlippedSign => -va * (a - nu) - eb,
    };
    dy[3] = n * va;
    Ok(())
}

fn validate_tol<T: Real>(tol: T) -> Result<()> {
    if tol > T::zero() && tol <= T::lit(1e-3) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "tolerance must lie in (0, 1e-3], got {tol}"
        )))
    }
}

/// Integrates the affine system with default thresholds.
pub fn integrate_affine<T: Real>(
    init: AffineState<T>,
    spec: &DampingSpec<T>,
    t_end: T,
    tol: T,
) -> Result<AffineOutcome<T>> {
    integrate_affine_with(init, spec, &AffineOptions::new(t_end, tol))
}

pub fn integrate_affine_with<T: Real>(
    init: AffineState<T>,
    spec: &DampingSpec<T>,
    opts: &AffineOptions<T>,
) -> Result<AffineOutcome<T>> {
    if !(init.b < T::one()) {
        return Err(Error::NonPositiveDensity {
            density: init.density().as_f64(),
            location: "affine initial state".into(),
        });
    }
    validate_tol(opts.tol)?;
    if !(opts.t_end > init.t) {
        return Err(Error::InvalidInput(format!(
            "t_end = {} must exceed the initial time {}",
            opts.t_end, init.t
        )));
    }

    let mut cfg = Dopri5Config::with_tol(opts.tol);
    cfg.h_min = opts.thresholds.h_min;
    let solver = Dopri5::new(cfg);

    let mut trace = vec![AffineSample {
        state: init,
        step: T::zero(),
    }];
    let mut monitor = CollapseMonitor::new(opts.thresholds);
    let y0 = [init.a, init.b, init.v_offset, init.e_offset];
    let run = solver.integrate(
        |_, y: &[T], dy: &mut [T]| affine_rhs(spec, opts.offset_equation, y, dy),
        init.t,
        &y0,
        opts.t_end,
        |info| {
            let state = AffineState {
                t: info.t,
                a: info.y[0],
                b: info.y[1],
                v_offset: info.y[2],
                e_offset: info.y[3],
            };
            trace.push(AffineSample {
                state,
                step: info.h.abs(),
            });
            if monitor.observe(state.a.abs(), info.h) {
                Control::Stop
            } else {
                Control::Continue
            }
        },
    );

    let diagnostics = trace.iter().fold(
        AffineDiagnostics {
            max_abs_a: T::zero(),
            min_b: T::infinity(),
            min_density: T::infinity(),
            accepted: run.accepted,
            rejected: run.rejected,
        },
        |mut d, s| {
            d.max_abs_a = d.max_abs_a.max(s.state.a.abs());
            d.min_b = d.min_b.min(s.state.b);
            d.min_density = d.min_density.min(s.state.density());
            d
        },
    );

    let last = trace.last().map(|s| s.state).unwrap_or(init);
    let verdict = match run.termination {
        Termination::Reached => Verdict::GloballySmoothUpTo(run.t),
        Termination::Stopped => Verdict::BlowUpAt(run.t),
        Termination::StepCollapse { h, last_error } => {
            if last.a.abs() > opts.thresholds.slope {
                Verdict::BlowUpAt(last.t)
            } else {
                let reason = match last_error {
                    Some(e) => format!("step collapsed to {h:e}: {e}"),
                    None => format!("step collapsed to {h:e} with bounded state (a = {})", last.a),
                };
                return Err(Error::IntegrationFailure {
                    t: last.t.as_f64(),
                    reason,
                });
            }
        }
        Termination::MaxSteps => {
            return Err(Error::IntegrationFailure {
                t: run.t.as_f64(),
                reason: "step budget exhausted".into(),
            })
        }
    };

    Ok(AffineOutcome {
        verdict,
        trace,
        diagnostics,
    })
}

#[derive(Debug, Clone)]
pub struct PhaseCurve<T> {
    /// `(b, a)` samples in time order.
    pub points: Vec<(T, T)>,
    pub verdict: Verdict<T>,
}

impl<T: Real> PhaseCurve<T> {
    /// Whether the curve, after first entering `a < 0`, later returns to `a > 0`.
    pub fn returns_to_upper_half(&self) -> bool {
        let Some(first_neg) = self.points.iter().position(|&(_, a)| a < T::zero()) else {
            return false;
        };
        self.points[first_neg..].iter().any(|&(_, a)| a > T::zero())
    }
}

/// Samples the `(b, a)` phase curve of the slope subsystem.
pub fn phase_curve<T: Real>(init: AffineState<T>, spec: &DampingSpec<T>, t_end: T, tol: T) -> Result<PhaseCurve<T>> {
    let out = integrate_affine(init, spec, t_end, tol)?;
    Ok(PhaseCurve {
        points: out.trace.iter().map(|s| (s.state.b, s.state.a)).collect(),
        verdict: out.verdict,
    })
}

/// Slope `da/db` of the phase curve through `(b, a)`.
#[inline]
pub fn phase_slope<T: Real>(spec: &DampingSpec<T>, a: T, b: T) -> T {
    let n = T::one() - b;
    -(a * a + b) / (n * a) - spec.rate(n) / n
}

/// Integrates the phase equation `da/db` from `(b0, a0)` to `b_end`.
///
/// Fails with a branch-turning error if the curve reaches `a = 0` first.
pub fn integrate_phase_in_b<T: Real>(a0: T, b0: T, spec: &DampingSpec<T>, b_end: T, tol: T) -> Result<T> {
    if !(b0 < T::one()) || !(b_end < T::one()) {
        return Err(Error::NonPositiveDensity {
            density: (T::one() - b0.max(b_end)).as_f64(),
            location: "phase equation".into(),
        });
    }
    if a0 == T::zero() {
        return Err(Error::BranchTurning { s: b0.as_f64() });
    }
    let sign = a0.signum();
    let mut cfg = Dopri5Config::with_tol(tol);
    cfg.h_min = T::lit(1e-14);
    let run = Dopri5::new(cfg).integrate(
        |_, y: &[T], dy: &mut [T]| -> Result<(), Infallible> {
            dy[0] = phase_slope(spec, y[0], y[1]);
            dy[1] = T::one();
            Ok(())
        },
        b0,
        &[a0, b0],
        b_end,
        |info| {
            if info.y[0] * sign <= T::zero() {
                Control::Stop
            } else {
                Control::Continue
            }
        },
    );
    match run.termination {
        Termination::Reached if run.y[0] * sign > T::zero() => Ok(run.y[0]),
        _ => Err(Error::BranchTurning { s: run.t.as_f64() }),
    }
}

/// Direction field of the slope subsystem: `(b, a, b', a')` on a grid.
pub fn direction_field<T: Real>(
    spec: &DampingSpec<T>,
    b_range: (T, T),
    a_range: (T, T),
    nb: usize,
    na: usize,
) -> Vec<[T; 4]> {
    let bs = crate::scalar::linspace(b_range.0, b_range.1, nb);
    let as_ = crate::scalar::linspace(a_range.0, a_range.1, na);
    let mut out = Vec::with_capacity(nb * na);
    for &b in &bs {
        if !(b < T::one()) {
            continue;
        }
        let n = T::one() - b;
        for &a in &as_ {
            let da = -a * a - b - spec.rate(n) * a;
            let db = n * a;
            out.push([b, a, db, da]);
        }
    }
    out
}
