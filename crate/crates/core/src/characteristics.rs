//! Full-field solver on a Lagrangian ensemble of characteristics.
//!
//! Each particle carries `(x, V, E, q, s)` with `q = V_x`, `s = E_x`,
//! `n = 1 - s`, and obeys
//!
//! ```text
//! x' = V,  V' = -E - eps f(n) V,  E' = V,  s' = (1-s) q,
//! q' = -q^2 - s - eps (f(n) q - V f'(n) sigma),   sigma = s_x.
//! ```
//!
//! The only coupling between particles is `sigma`, rebuilt at every stage
//! by three-point finite differences over the current positions. All
//! particles share one adaptive step. A sixth component accumulates the
//! dissipated energy `int 2 eps f V^2 dt` so the energy budget can be
//! closed exactly.
//!
//! The Euler control system drops the field: `V' = -eps f(n) V`,
//! `n' = -n q`, `q' = -q^2 - eps (f q + V f'(n) n_x)`.

use std::fmt;

use crate::damping::{DampingSpec, ShapeFn};
use crate::error::{Error, Result};
use crate::ode::{Control, Dopri5, Dopri5Config, Termination};
use crate::outcome::{BlowupThresholds, Verdict};
use crate::scalar::Real;

/// Smallest admissible ensemble.
pub const MIN_PARTICLES: usize = 16;
/// Adjacent spacing below `SPACING_FLOOR * L` counts as a crossing.
pub const SPACING_FLOOR: f64 = 1e-10;
/// On step collapse, `min q` below this is read as divergence.
const COLLAPSE_SLOPE: f64 = 1e4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DomainMode {
    /// `[x0, x0 + L)` with periodic wrap.
    #[default]
    Periodic,
    /// `[x0, x0 + L]` with one-sided stencils at the ends.
    Truncated,
}

/// How `sigma = s_x` enters the `q` equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SigmaMode {
    #[default]
    Reconstructed,
    /// Forces `sigma = 0` (exact for affine data).
    Zero,
}

/// `E0 = e_mean + e_amp sin(kx)`, `V0 = v_mean + v_amp sin(kx + v_phase)`,
/// `k = 2 pi / period`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Harmonic<T> {
    pub e_amp: T,
    pub e_mean: T,
    pub v_amp: T,
    pub v_mean: T,
    pub v_phase: T,
    pub period: T,
}

#[derive(Clone)]
pub struct CustomData<T> {
    pub v0: ShapeFn<T>,
    pub e0: ShapeFn<T>,
    pub v0_prime: ShapeFn<T>,
    pub e0_prime: ShapeFn<T>,
    pub x_start: T,
    pub length: T,
    pub mode: DomainMode,
}

impl<T: fmt::Debug> fmt::Debug for CustomData<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomData")
            .field("x_start", &self.x_start)
            .field("length", &self.length)
            .field("mode", &self.mode)
            .finish_non_exhaustive()
    }
}

/// Cauchy data `(V0, E0)` with exact derivatives.
#[derive(Debug, Clone)]
pub enum InitialData<T> {
    Harmonic(Harmonic<T>),
    /// `V0 = a0 x + v_offset`, `E0 = b0 x + e_offset` on `[-w, w]`.
    Affine {
        a0: T,
        b0: T,
        v_offset: T,
        e_offset: T,
        half_width: T,
    },
    Custom(CustomData<T>),
}

impl<T: Real> InitialData<T> {
    /// `V0 = 0`, `E0 = d sin x` on `[0, 2 pi)`.
    pub fn sine(d: T) -> Self {
        Self::Harmonic(Harmonic {
            e_amp: d,
            e_mean: T::zero(),
            v_amp: T::zero(),
            v_mean: T::zero(),
            v_phase: T::zero(),
            period: T::TAU(),
        })
    }

    /// `V0 = drift - d sin x`, `E0 = d sin x`: the sine datum carried by a
    /// uniform stream, compressive where the density is lowest.
    pub fn drifting_sine(d: T, drift: T) -> Self {
        Self::Harmonic(Harmonic {
            v_amp: d,
            v_mean: drift,
            v_phase: T::PI(),
            ..match Self::sine(d) {
                Self::Harmonic(h) => h,
                _ => unreachable!(),
            }
        })
    }

    /// `(V0, E0, V0', E0')` at `x`.
    pub fn eval(&self, x: T) -> (T, T, T, T) {
        match self {
            Self::Harmonic(h) => {
                let k = T::TAU() / h.period;
                let th = k * x;
                let tv = th + h.v_phase;
                (
                    h.v_mean + h.v_amp * tv.sin(),
                    h.e_mean + h.e_amp * th.sin(),
                    h.v_amp * k * tv.cos(),
                    h.e_amp * k * th.cos(),
                )
            }
            Self::Affine {
                a0,
                b0,
                v_offset,
                e_offset,
                ..
            } => (*a0 * x + *v_offset, *b0 * x + *e_offset, *a0, *b0),
            Self::Custom(c) => ((c.v0)(x), (c.e0)(x), (c.v0_prime)(x), (c.e0_prime)(x)),
        }
    }

    pub fn x_start(&self) -> T {
        match self {
            Self::Harmonic(_) => T::zero(),
            Self::Affine { half_width, .. } => -*half_width,
            Self::Custom(c) => c.x_start,
        }
    }

    pub fn length(&self) -> T {
        match self {
            Self::Harmonic(h) => h.period,
            Self::Affine { half_width, .. } => *half_width + *half_width,
            Self::Custom(c) => c.length,
        }
    }

    pub fn mode(&self) -> DomainMode {
        match self {
            Self::Harmonic(_) => DomainMode::Periodic,
            Self::Affine { .. } => DomainMode::Truncated,
            Self::Custom(c) => c.mode,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Particle<T> {
    pub x: T,
    pub v: T,
    pub e: T,
    pub q: T,
    pub s: T,
}

impl<T: Real> Particle<T> {
    pub fn density(&self) -> T {
        T::one() - self.s
    }

    pub fn energy(&self) -> T {
        self.v * self.v + self.e * self.e
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CharacteristicEnsemble<T> {
    pub t: T,
    pub particles: Vec<Particle<T>>,
    pub length: T,
    pub mode: DomainMode,
}

impl<T: Real> CharacteristicEnsemble<T> {
    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    /// Index and value of the most negative `q`.
    pub fn min_q(&self) -> (usize, T) {
        argmin_q(self.particles.iter().map(|p| p.q))
    }
}

fn argmin_q<T: Real>(qs: impl Iterator<Item = T>) -> (usize, T) {
    qs.enumerate()
        .fold((0, T::infinity()), |acc, (i, q)| if q < acc.1 { (i, q) } else { acc })
}

/// Places `n` particles on the data's domain with exact pointwise values.
pub fn seed_ensemble<T: Real>(data: &InitialData<T>, n: usize) -> Result<CharacteristicEnsemble<T>> {
    if n < MIN_PARTICLES {
        return Err(Error::InvalidInput(format!(
            "ensemble needs at least {MIN_PARTICLES} particles, got {n}"
        )));
    }
    let (x0, length, mode) = (data.x_start(), data.length(), data.mode());
    if !(length > T::zero()) {
        return Err(Error::InvalidInput(format!(
            "domain length must be positive, got {length}"
        )));
    }
    let cells = match mode {
        DomainMode::Periodic => n,
        DomainMode::Truncated => n - 1,
    };
    let dx = length / T::lit(cells as f64);
    let mut particles = Vec::with_capacity(n);
    for i in 0..n {
        let x = x0 + T::lit(i as f64) * dx;
        let (v, e, q, s) = data.eval(x);
        if !(s < T::one()) {
            return Err(Error::NonPositiveDensity {
                density: (T::one() - s).as_f64(),
                location: format!("initial data at x = {x}"),
            });
        }
        particles.push(Particle { x, v, e, q, s });
    }
    Ok(CharacteristicEnsemble {
        t: T::zero(),
        particles,
        length,
        mode,
    })
}

/// Derivative of `vals` with respect to `xs` at every node; three-point
/// Lagrange stencils, exact on quadratics.
fn gradient<T: Real>(xs: &[T], vals: &[T], length: T, mode: DomainMode, out: &mut [T]) -> Result<()> {
    let n = xs.len();
    let floor = T::lit(SPACING_FLOOR) * length;
    let check = |h: T, index: usize| -> Result<()> {
        if h < floor {
            Err(Error::ImminentCrossing {
                spacing: h.as_f64(),
                limit: floor.as_f64(),
                index,
            })
        } else {
            Ok(())
        }
    };
    for i in 0..n - 1 {
        check(xs[i + 1] - xs[i], i)?;
    }
    let central = |xm: T, x0: T, xp: T, fm: T, f0: T, fp: T| {
        let (h1, h2) = (x0 - xm, xp - x0);
        let h = h1 + h2;
        -h2 / (h1 * h) * fm + (h2 - h1) / (h1 * h2) * f0 + h1 / (h2 * h) * fp
    };
    for i in 1..n - 1 {
        out[i] = central(xs[i - 1], xs[i], xs[i + 1], vals[i - 1], vals[i], vals[i + 1]);
    }
    match mode {
        DomainMode::Periodic => {
            check(xs[0] + length - xs[n - 1], n - 1)?;
            out[0] = central(xs[n - 1] - length, xs[0], xs[1], vals[n - 1], vals[0], vals[1]);
            out[n - 1] = central(xs[n - 2], xs[n - 1], xs[0] + length, vals[n - 2], vals[n - 1], vals[0]);
        }
        DomainMode::Truncated => {
            let (h1, h2) = (xs[1] - xs[0], xs[2] - xs[1]);
            let h = h1 + h2;
            out[0] = -(h1 + h) / (h1 * h) * vals[0] + h / (h1 * h2) * vals[1] - h1 / (h2 * h) * vals[2];
            let (h1, h2) = (xs[n - 2] - xs[n - 3], xs[n - 1] - xs[n - 2]);
            let h = h1 + h2;
            out[n - 1] = h2 / (h1 * h) * vals[n - 3] - h / (h1 * h2) * vals[n - 2] + (h2 + h) / (h2 * h) * vals[n - 1];
        }
    }
    Ok(())
}

/// `sigma_i = ds/dx` at each particle.
pub fn reconstruct_sigma<T: Real>(ens: &CharacteristicEnsemble<T>) -> Result<Vec<T>> {
    let xs: Vec<T> = ens.particles.iter().map(|p| p.x).collect();
    let ss: Vec<T> = ens.particles.iter().map(|p| p.s).collect();
    let mut out = vec![T::zero(); xs.len()];
    if xs.len() < 3 {
        return Err(Error::InvalidInput("need at least 3 particles".into()));
    }
    gradient(&xs, &ss, ens.length, ens.mode, &mut out)?;
    Ok(out)
}

/// A particle system integrated with a shared step.
trait Model<T: Real> {
    const WIDTH: usize;
    const Q: usize;
    fn rhs(&mut self, y: &[T], dy: &mut [T]) -> Result<()>;
    fn particle(p: &[T]) -> Particle<T>;
    fn pack(p: &Particle<T>, out: &mut Vec<T>);
    /// `(V^2 + E^2, dissipated)` when the model conserves that budget.
    fn energy(_p: &[T]) -> Option<(T, T)> {
        None
    }
}

struct Scratch<T> {
    xs: Vec<T>,
    vals: Vec<T>,
    grad: Vec<T>,
}

impl<T: Real> Scratch<T> {
    fn new(n: usize) -> Self {
        Self {
            xs: vec![T::zero(); n],
            vals: vec![T::zero(); n],
            grad: vec![T::zero(); n],
        }
    }

    /// Gradient of component `k` over particles of width `w`.
    fn gradient_of(&mut self, y: &[T], w: usize, k: usize, length: T, mode: DomainMode) -> Result<&[T]> {
        for (i, p) in y.chunks_exact(w).enumerate() {
            self.xs[i] = p[0];
            self.vals[i] = p[k];
        }
        gradient(&self.xs, &self.vals, length, mode, &mut self.grad)?;
        Ok(&self.grad)
    }
}

fn density_error(n: f64, i: usize) -> Error {
    Error::NonPositiveDensity {
        density: n,
        location: format!("particle {i}"),
    }
}

struct PlasmaModel<'a, T> {
    spec: &'a DampingSpec<T>,
    length: T,
    mode: DomainMode,
    sigma: SigmaMode,
    scratch: Scratch<T>,
}

impl<T: Real> Model<T> for PlasmaModel<'_, T> {
    const WIDTH: usize = 6;
    const Q: usize = 3;

    fn rhs(&mut self, y: &[T], dy: &mut [T]) -> Result<()> {
        let (length, mode) = (self.length, self.mode);
        let sigma: Option<&[T]> = match self.sigma {
            SigmaMode::Reconstructed => Some(self.scratch.gradient_of(y, Self::WIDTH, 4, length, mode)?),
            SigmaMode::Zero => None,
        };
        let eps = self.spec.epsilon;
        let two = T::lit(2.0);
        for (i, (p, d)) in y.chunks_exact(6).zip(dy.chunks_exact_mut(6)).enumerate() {
            let (v, e, q, s) = (p[1], p[2], p[3], p[4]);
            let n = T::one() - s;
            if !(n > T::zero()) {
                return Err(density_error(n.as_f64(), i));
            }
            let f = self.spec.shape(n);
            let nu = eps * f;
            let coupling = match sigma {
                Some(sg) if eps != T::zero() => v * self.spec.shape_derivative(n) * sg[i],
                _ => T::zero(),
            };
            d[0] = v;
            d[1] = -e - nu * v;
            d[2] = v;
            d[3] = -q * q - s - eps * (f * q - coupling);
            d[4] = n * q;
            d[5] = two * nu * v * v;
        }
        Ok(())
    }

    fn particle(p: &[T]) -> Particle<T> {
        Particle {
            x: p[0],
            v: p[1],
            e: p[2],
            q: p[3],
            s: p[4],
        }
    }

    fn pack(p: &Particle<T>, out: &mut Vec<T>) {
        out.extend_from_slice(&[p.x, p.v, p.e, p.q, p.s, T::zero()]);
    }

    fn energy(p: &[T]) -> Option<(T, T)> {
        Some((p[1] * p[1] + p[2] * p[2], p[5]))
    }
}

/// Euler control: state `(x, V, n, q)`; reported with `e = 0`, `s = 1 - n`.
struct EulerModel<'a, T> {
    spec: &'a DampingSpec<T>,
    length: T,
    mode: DomainMode,
    scratch: Scratch<T>,
}

impl<T: Real> Model<T> for EulerModel<'_, T> {
    const WIDTH: usize = 4;
    const Q: usize = 3;

    fn rhs(&mut self, y: &[T], dy: &mut [T]) -> Result<()> {
        let nx = self.scratch.gradient_of(y, Self::WIDTH, 2, self.length, self.mode)?;
        let eps = self.spec.epsilon;
        for (i, (p, d)) in y.chunks_exact(4).zip(dy.chunks_exact_mut(4)).enumerate() {
            let (v, n, q) = (p[1], p[2], p[3]);
            if !(n > T::zero()) {
                return Err(density_error(n.as_f64(), i));
            }
            let f = self.spec.shape(n);
            let coupling = if eps != T::zero() {
                v * self.spec.shape_derivative(n) * nx[i]
            } else {
                T::zero()
            };
            d[0] = v;
            d[1] = -eps * f * v;
            d[2] = -n * q;
            d[3] = -q * q - eps * (f * q + coupling);
        }
        Ok(())
    }

    fn particle(p: &[T]) -> Particle<T> {
        Particle {
            x: p[0],
            v: p[1],
            e: T::zero(),
            q: p[3],
            s: T::one() - p[2],
        }
    }

    fn pack(p: &Particle<T>, out: &mut Vec<T>) {
        out.extend_from_slice(&[p.x, p.v, T::one() - p.s, p.q]);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldOptions<T> {
    pub t_end: T,
    pub tol: T,
    pub particles: usize,
    /// Snapshot spacing in time; `None` keeps only the first and last states.
    pub snapshot_every: Option<T>,
    pub sigma: SigmaMode,
    pub thresholds: BlowupThresholds<T>,
}

impl<T: Real> FieldOptions<T> {
    pub fn new(t_end: T, tol: T, particles: usize) -> Self {
        Self {
            t_end,
            tol,
            particles,
            snapshot_every: None,
            sigma: SigmaMode::Reconstructed,
            thresholds: BlowupThresholds::default(),
        }
    }
}

/// What triggered a blow-up verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlowupSignal {
    SlopeThreshold,
    Crossing,
    StepCollapse,
}

/// The most compressive particle after an accepted step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinQSample<T> {
    pub t: T,
    pub index: usize,
    pub particle: Particle<T>,
}

/// Per-characteristic energy bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyLedger<T> {
    pub initial: Vec<T>,
    pub current: Vec<T>,
    pub running_min: Vec<T>,
    /// Largest rise of `V^2 + E^2` above its running minimum.
    pub max_increase: Vec<T>,
    /// `int 2 eps f V^2 dt` so far.
    pub dissipated: Vec<T>,
}

impl<T: Real> EnergyLedger<T> {
    fn new(initial: Vec<T>) -> Self {
        Self {
            current: initial.clone(),
            running_min: initial.clone(),
            max_increase: vec![T::zero(); initial.len()],
            dissipated: vec![T::zero(); initial.len()],
            initial,
        }
    }

    fn observe(&mut self, i: usize, w: T, d: T) {
        self.current[i] = w;
        self.dissipated[i] = d;
        self.running_min[i] = self.running_min[i].min(w);
        self.max_increase[i] = self.max_increase[i].max(w - self.running_min[i]);
    }

    /// Largest initial energy, the reference scale for relative checks.
    pub fn scale(&self) -> T {
        self.initial.iter().fold(T::zero(), |m, &w| m.max(w))
    }

    pub fn is_non_increasing(&self, abs_tol: T) -> bool {
        self.max_increase.iter().all(|&d| d <= abs_tol)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldDiagnostics<T> {
    pub accepted: usize,
    pub rejected: usize,
    pub min_q: T,
    pub max_density: T,
}

#[derive(Debug, Clone)]
pub struct FieldOutcome<T> {
    pub verdict: Verdict<T>,
    pub signal: Option<BlowupSignal>,
    /// Particle that triggered the blow-up verdict.
    pub blowup_index: Option<usize>,
    pub initial: CharacteristicEnsemble<T>,
    pub last: CharacteristicEnsemble<T>,
    /// States at `t0 + k * snapshot_every`, then the last state.
    pub snapshots: Vec<CharacteristicEnsemble<T>>,
    pub min_q_history: Vec<MinQSample<T>>,
    pub energy: Option<EnergyLedger<T>>,
    /// Whether the particle holding the running minimum of `q` later
    /// returned to `q > 0`.
    pub reentered: bool,
    pub diagnostics: FieldDiagnostics<T>,
}

impl<T: Real> FieldOutcome<T> {
    /// Reached `T_end`, the deepest compression relaxed to `q > 0`, and no
    /// characteristic gained energy beyond `abs_tol`.
    pub fn confirmed_smooth(&self, abs_tol: T) -> bool {
        !self.verdict.is_blowup() && self.reentered && self.energy.as_ref().is_none_or(|e| e.is_non_increasing(abs_tol))
    }
}

fn unpack<T: Real, M: Model<T>>(t: T, y: &[T], length: T, mode: DomainMode) -> CharacteristicEnsemble<T> {
    CharacteristicEnsemble {
        t,
        particles: y.chunks_exact(M::WIDTH).map(M::particle).collect(),
        length,
        mode,
    }
}

fn validate_field_options<T: Real>(opts: &FieldOptions<T>) -> Result<()> {
    if !(opts.tol > T::zero() && opts.tol <= T::lit(1e-3)) {
        return Err(Error::InvalidInput(format!(
            "tolerance must lie in (0, 1e-3], got {}",
            opts.tol
        )));
    }
    if !(opts.t_end > T::zero()) {
        return Err(Error::InvalidInput(format!(
            "T_end must be positive, got {}",
            opts.t_end
        )));
    }
    if let Some(dt) = opts.snapshot_every {
        if !(dt > T::zero()) {
            return Err(Error::InvalidInput(format!(
                "snapshot spacing must be positive, got {dt}"
            )));
        }
    }
    Ok(())
}

struct Tracker<T> {
    min_q: T,
    min_index: usize,
    reentered: bool,
    max_density: T,
    history: Vec<MinQSample<T>>,
    energy: Option<EnergyLedger<T>>,
    last_h: Option<T>,
}

fn drive<T: Real, M: Model<T>>(
    mut model: M,
    start: CharacteristicEnsemble<T>,
    opts: &FieldOptions<T>,
) -> Result<FieldOutcome<T>> {
    let (length, mode) = (start.length, start.mode);
    let mut y = Vec::with_capacity(start.len() * M::WIDTH);
    for p in &start.particles {
        M::pack(p, &mut y);
    }
    let energy0: Option<Vec<T>> = y.chunks_exact(M::WIDTH).map(|p| M::energy(p).map(|e| e.0)).collect();
    let (i0, q0) = start.min_q();
    let mut tr = Tracker {
        min_q: q0,
        min_index: i0,
        reentered: false,
        max_density: start.particles.iter().fold(T::zero(), |m, p| m.max(p.density())),
        history: vec![MinQSample {
            t: start.t,
            index: i0,
            particle: start.particles[i0],
        }],
        energy: energy0.map(EnergyLedger::new),
        last_h: None,
    };
    let theta = opts.thresholds.slope;
    let floor = T::lit(SPACING_FLOOR) * length;

    let mut cfg = Dopri5Config::with_tol(opts.tol);
    cfg.h_min = opts.thresholds.h_min;
    let mut t = start.t;
    let mut snapshots = vec![start.clone()];
    let (mut accepted, mut rejected) = (0usize, 0usize);
    let mut k = 1usize;
    let mut verdict = None;
    let mut signal = None;
    let mut blowup_index = None;

    while verdict.is_none() {
        let seg_end = match opts.snapshot_every {
            Some(dt) => (start.t + dt * T::lit(k as f64)).min(opts.t_end),
            None => opts.t_end,
        };
        k += 1;
        cfg.h_init = tr.last_h;
        let mut stop_signal = None;
        let run = Dopri5::new(cfg).integrate(
            |_, y: &[T], dy: &mut [T]| model.rhs(y, dy),
            t,
            &y,
            seg_end,
            |info| {
                tr.last_h = Some(info.h.abs());
                let mut best = (0usize, T::infinity());
                let mut prev_x = None;
                let mut crossing = None;
                for (i, p) in info.y.chunks_exact(M::WIDTH).enumerate() {
                    let q = p[M::Q];
                    if q < best.1 {
                        best = (i, q);
                    }
                    if let Some(px) = prev_x {
                        if p[0] - px < floor && crossing.is_none() {
                            crossing = Some(i);
                        }
                    }
                    prev_x = Some(p[0]);
                    if let (Some(led), Some((w, d))) = (tr.energy.as_mut(), M::energy(p)) {
                        led.observe(i, w, d);
                    }
                    tr.max_density = tr.max_density.max(M::particle(p).density());
                }
                let (bi, bq) = best;
                if bq < tr.min_q {
                    tr.min_q = bq;
                    tr.min_index = bi;
                    tr.reentered = false;
                } else if info.y[tr.min_index * M::WIDTH + M::Q] > T::zero() {
                    tr.reentered = true;
                }
                tr.history.push(MinQSample {
                    t: info.t,
                    index: bi,
                    particle: M::particle(&info.y[bi * M::WIDTH..(bi + 1) * M::WIDTH]),
                });
                if bq < -theta {
                    stop_signal = Some((BlowupSignal::SlopeThreshold, bi));
                    Control::Stop
                } else if let Some(ci) = crossing {
                    stop_signal = Some((BlowupSignal::Crossing, ci));
                    Control::Stop
                } else {
                    Control::Continue
                }
            },
        );
        accepted += run.accepted;
        rejected += run.rejected;
        let last_bq = tr.history.last().map(|s| (s.index, s.particle.q));
        match run.termination {
            Termination::Reached => {
                t = run.t;
                y = run.y;
                snapshots.push(unpack::<T, M>(t, &y, length, mode));
                if t >= opts.t_end {
                    verdict = Some(Verdict::GloballySmoothUpTo(t));
                }
            }
            Termination::Stopped => {
                t = run.t;
                y = run.y;
                let (sig, idx) = stop_signal.expect("observer stops only on a blow-up signal");
                signal = Some(sig);
                blowup_index = Some(idx);
                verdict = Some(Verdict::BlowUpAt(t));
            }
            Termination::StepCollapse { h, last_error } => {
                t = run.t;
                y = run.y;
                let crossing = matches!(last_error, Some(Error::ImminentCrossing { .. }));
                match last_bq {
                    Some((idx, q)) if crossing || q < -T::lit(COLLAPSE_SLOPE) => {
                        signal = Some(BlowupSignal::StepCollapse);
                        blowup_index = Some(idx);
                        verdict = Some(Verdict::BlowUpAt(t));
                    }
                    _ => {
                        let reason = match last_error {
                            Some(e) => format!("step collapsed to {h:e}: {e}"),
                            None => format!("step collapsed to {h:e} with bounded slopes"),
                        };
                        return Err(Error::IntegrationFailure { t: t.as_f64(), reason });
                    }
                }
            }
            Termination::MaxSteps => {
                return Err(Error::IntegrationFailure {
                    t: run.t.as_f64(),
                    reason: "step budget exhausted".into(),
                });
            }
        }
    }

    let last = unpack::<T, M>(t, &y, length, mode);
    if snapshots.last().map(|s| s.t) != Some(t) {
        snapshots.push(last.clone());
    }
    Ok(FieldOutcome {
        verdict: verdict.expect("loop exits with a verdict"),
        signal,
        blowup_index,
        initial: start,
        last,
        snapshots,
        min_q_history: tr.history,
        energy: tr.energy,
        reentered: tr.reentered,
        diagnostics: FieldDiagnostics {
            accepted,
            rejected,
            min_q: tr.min_q,
            max_density: tr.max_density,
        },
    })
}

/// Runs the coupled field system from `data` to `T_end` or blow-up.
pub fn run_field<T: Real>(
    data: &InitialData<T>,
    spec: &DampingSpec<T>,
    opts: &FieldOptions<T>,
) -> Result<FieldOutcome<T>> {
    validate_field_options(opts)?;
    let start = seed_ensemble(data, opts.particles)?;
    run_ensemble(start, spec, opts)
}

/// Runs the coupled field system from an existing ensemble.
pub fn run_ensemble<T: Real>(
    start: CharacteristicEnsemble<T>,
    spec: &DampingSpec<T>,
    opts: &FieldOptions<T>,
) -> Result<FieldOutcome<T>> {
    validate_field_options(opts)?;
    let t_end = opts.t_end;
    if !(t_end > start.t) {
        return Err(Error::InvalidInput(format!(
            "T_end = {t_end} must exceed t = {}",
            start.t
        )));
    }
    let model = PlasmaModel {
        spec,
        length: start.length,
        mode: start.mode,
        sigma: opts.sigma,
        scratch: Scratch::new(start.len()),
    };
    drive(model, start, opts)
}

/// Result of one adaptive step.
#[derive(Debug, Clone)]
pub struct FieldStep<T> {
    pub ensemble: CharacteristicEnsemble<T>,
    /// Step actually taken.
    pub h: T,
}

/// Advances the ensemble by one accepted adaptive step starting from `h_try`.
pub fn step_field<T: Real>(
    ens: &CharacteristicEnsemble<T>,
    spec: &DampingSpec<T>,
    h_try: T,
    tol: T,
    sigma: SigmaMode,
) -> Result<FieldStep<T>> {
    if !(h_try > T::zero()) {
        return Err(Error::InvalidInput(format!("trial step must be positive, got {h_try}")));
    }
    let mut model = PlasmaModel {
        spec,
        length: ens.length,
        mode: ens.mode,
        sigma,
        scratch: Scratch::new(ens.len()),
    };
    let mut y = Vec::with_capacity(ens.len() * 6);
    for p in &ens.particles {
        PlasmaModel::pack(p, &mut y);
    }
    let mut cfg = Dopri5Config::with_tol(tol);
    cfg.h_init = Some(h_try);
    cfg.h_max = h_try;
    let mut taken = T::zero();
    let run = Dopri5::new(cfg).integrate(
        |_, y: &[T], dy: &mut [T]| model.rhs(y, dy),
        ens.t,
        &y,
        ens.t + h_try,
        |info| {
            taken = info.h;
            Control::Stop
        },
    );
    match run.termination {
        Termination::Reached | Termination::Stopped => Ok(FieldStep {
            ensemble: unpack::<T, PlasmaModel<T>>(run.t, &run.y, ens.length, ens.mode),
            h: taken,
        }),
        Termination::StepCollapse {
            last_error: Some(e), ..
        } => Err(e),
        other => Err(Error::IntegrationFailure {
            t: run.t.as_f64(),
            reason: format!("single step failed: {other:?}"),
        }),
    }
}

/// Euler system without the field, seeded with `n0 = 1 - E0'`.
pub fn run_euler_analog<T: Real>(
    data: &InitialData<T>,
    spec: &DampingSpec<T>,
    opts: &FieldOptions<T>,
) -> Result<FieldOutcome<T>> {
    validate_field_options(opts)?;
    let start = seed_ensemble(data, opts.particles)?;
    let model = EulerModel {
        spec,
        length: start.length,
        mode: start.mode,
        scratch: Scratch::new(start.len()),
    };
    drive(model, start, opts)
}

/// Per-characteristic energy report.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyAudit<T> {
    /// Largest rise of `V^2 + E^2` along any characteristic, divided by the
    /// ensemble's largest initial energy.
    pub max_relative_increase: T,
    /// `max_i |W_i(t) + D_i(t) - W_i(0)|` divided by the same scale.
    pub budget_residual: T,
    /// Index of the worst monotonicity violation.
    pub worst: usize,
    /// Each characteristic within `10 tol (1 + W_i(0))`.
    pub monotone: bool,
    /// Largest `V^2 + E^2` over the run does not exceed the initial maximum.
    pub bounded: bool,
}

pub fn energy_audit<T: Real>(out: &FieldOutcome<T>, tol: T) -> Result<EnergyAudit<T>> {
    let led = out
        .energy
        .as_ref()
        .ok_or_else(|| Error::UnsupportedAnalysis("run carries no energy ledger".into()))?;
    let scale = led.scale();
    let rel = |x: T| if scale > T::zero() { x / scale } else { x };
    let (worst, inc) = led
        .max_increase
        .iter()
        .enumerate()
        .fold((0, T::zero()), |acc, (i, &d)| if d > acc.1 { (i, d) } else { acc });
    let budget = (0..led.initial.len())
        .map(|i| (led.current[i] + led.dissipated[i] - led.initial[i]).abs())
        .fold(T::zero(), T::max);
    let ten_tol = T::lit(10.0) * tol;
    let monotone = (0..led.initial.len()).all(|i| led.max_increase[i] <= ten_tol * (T::one() + led.initial[i]));
    let peak = out
        .snapshots
        .iter()
        .flat_map(|s| s.particles.iter().map(|p| p.energy()))
        .fold(T::zero(), T::max);
    Ok(EnergyAudit {
        max_relative_increase: rel(inc),
        budget_residual: rel(budget),
        worst,
        monotone,
        bounded: peak <= scale * (T::one() + ten_tol) + ten_tol,
    })
}

/// One point of the near-blow-up refinement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefinedSample<T> {
    /// `w = ln(1 - s)`.
    pub w: T,
    pub t: T,
    pub v: T,
    pub e: T,
    pub q: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VAtBlowup<T> {
    pub index: usize,
    /// `V` at the last resolved point of the refinement.
    pub v_last: T,
    /// `V` on the same characteristic at the snapshot nearest `t*/2`.
    pub v_mid: Option<T>,
    /// Refinement samples on a uniform grid in `w`.
    pub refined: Vec<RefinedSample<T>>,
}

impl<T: Real> VAtBlowup<T> {
    /// `|V|` one e-fold of `1 - s` before the end of the refinement.
    pub fn v_one_efold_earlier(&self) -> Option<T> {
        let last = self.refined.last()?;
        let target = last.w - T::one();
        let j = self.refined.iter().rposition(|r| r.w <= target)?;
        let (a, b) = (self.refined[j], self.refined[(j + 1).min(self.refined.len() - 1)]);
        if b.w == a.w {
            return Some(a.v);
        }
        let th = (target - a.w) / (b.w - a.w);
        Some(a.v + th * (b.v - a.v))
    }

    /// `|V|` shrinks over the final resolved e-fold.
    pub fn decreasing_last_efold(&self) -> Option<bool> {
        Some(self.v_last.abs() < self.v_one_efold_earlier()?.abs())
    }
}

/// Number of e-folds of `1 - s` added beyond the last resolved state.
const REFINE_EFOLDS: f64 = 8.0;
const REFINE_SAMPLES_PER_EFOLD: usize = 8;

/// Follows the blow-up characteristic past the last resolved step in the
/// variable `w = ln(1 - s)`, in which the approach to `t*` is regular:
///
/// ```text
/// dV/dw = (E + nu V)/q,  dE/dw = -V/q,  dq/dw = (q^2 + s + nu q)/q,  dt/dw = -1/q.
/// ```
///
/// The cross-characteristic term `V f' sigma` is dropped on this final
/// stretch; it vanishes identically for data symmetric about the blow-up point.
pub fn v_at_blowup<T: Real>(out: &FieldOutcome<T>, spec: &DampingSpec<T>) -> Result<VAtBlowup<T>> {
    let (index, t_star) = match (out.blowup_index, out.verdict) {
        (Some(i), Verdict::BlowUpAt(t)) => (i, t),
        _ => {
            return Err(Error::UnsupportedAnalysis(
                "V at blow-up requires a run classified as blow-up".into(),
            ))
        }
    };
    let p = out.last.particles[index];
    let eps = spec.epsilon;
    let w0 = p.density().ln();
    let rhs = |_: T, y: &[T], dy: &mut [T]| -> Result<()> {
        let (v, e, q) = (y[0], y[1], y[2]);
        let n = y[4].exp();
        let s = T::one() - n;
        let nu = eps * spec.shape(n);
        if q == T::zero() {
            return Err(Error::BranchTurning { s: s.as_f64() });
        }
        dy[0] = (e + nu * v) / q;
        dy[1] = -v / q;
        dy[2] = (q * q + s + nu * q) / q;
        dy[3] = -T::one() / q;
        dy[4] = T::one();
        Ok(())
    };
    let mut cfg = Dopri5Config::with_tol(T::lit(1e-12));
    cfg.atol = T::lit(1e-14);
    let solver = Dopri5::new(cfg);
    let mut y = vec![p.v, p.e, p.q, out.last.t, w0];
    let mut refined = vec![RefinedSample {
        w: w0,
        t: out.last.t,
        v: p.v,
        e: p.e,
        q: p.q,
    }];
    let dw = T::one() / T::lit(REFINE_SAMPLES_PER_EFOLD as f64);
    let steps = (REFINE_EFOLDS * REFINE_SAMPLES_PER_EFOLD as f64) as usize;
    let mut rhs = rhs;
    for k in 0..steps {
        let wa = w0 + dw * T::lit(k as f64);
        let run = solver.integrate(&mut rhs, wa, &y, wa + dw, |_| Control::Continue);
        if run.termination != Termination::Reached || !(run.y[2] < T::zero()) {
            break;
        }
        y = run.y;
        refined.push(RefinedSample {
            w: y[4],
            t: y[3],
            v: y[0],
            e: y[1],
            q: y[2],
        });
    }
    let half = t_star / T::lit(2.0);
    let v_mid = out
        .snapshots
        .iter()
        .min_by(|a, b| {
            (a.t - half)
                .abs()
                .partial_cmp(&(b.t - half).abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
        .map(|s| s.particles[index].v);
    Ok(VAtBlowup {
        index,
        v_last: refined.last().map(|r| r.v).unwrap_or(p.v),
        v_mid,
        refined,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::affine::{integrate_affine, AffineState};

    fn pl(gamma: f64, eps: f64) -> DampingSpec<f64> {
        DampingSpec::power_law(1.0, gamma, eps).unwrap()
    }

    fn ens_from(xs: &[f64], ss: &[f64], length: f64, mode: DomainMode) -> CharacteristicEnsemble<f64> {
        CharacteristicEnsemble {
            t: 0.0,
            particles: xs
                .iter()
                .zip(ss)
                .map(|(&x, &s)| Particle {
                    x,
                    s,
                    ..Default::default()
                })
                .collect(),
            length,
            mode,
        }
    }

    /// Exact undamped solution in Lagrangian form for sine data.
    fn exact_undamped(d: f64, x0: f64, t: f64) -> Particle<f64> {
        let (e0, s0) = (d * x0.sin(), d * x0.cos());
        let j = 1.0 + s0 * (t.cos() - 1.0);
        let n = (1.0 - s0) / j;
        let dj = -s0 * t.sin();
        Particle {
            x: x0 + e0 * (t.cos() - 1.0),
            v: -e0 * t.sin(),
            e: e0 * t.cos(),
            // q = V_x = (dV/dx0) / (dx/dx0) = J'/J.
            q: dj / j,
            s: 1.0 - n,
        }
    }

    #[test]
    fn seeding_examples() {
        let z = seed_ensemble(&InitialData::<f64>::sine(0.0), 32).unwrap();
        assert!(z
            .particles
            .iter()
            .all(|p| p.v == 0.0 && p.e == 0.0 && p.q == 0.0 && p.s == 0.0));
        let e = seed_ensemble(&InitialData::<f64>::sine(0.9), 256).unwrap();
        for p in &e.particles {
            assert!((p.s - 0.9 * p.x.cos()).abs() < 1e-15);
        }
        assert!((e.particles.iter().map(|p| p.density()).fold(f64::MAX, f64::min) - 0.1).abs() < 1e-12);
        assert!(matches!(
            seed_ensemble(&InitialData::<f64>::sine(1.0), 64),
            Err(Error::NonPositiveDensity { .. })
        ));
        assert!(matches!(
            seed_ensemble(&InitialData::<f64>::sine(0.5), 8),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn sigma_constant_and_linear_are_exact() {
        let xs: Vec<f64> = (0..20).map(|i| (i as f64 * 0.37).powf(1.3)).collect();
        let c = reconstruct_sigma(&ens_from(&xs, &[0.4; 20], 100.0, DomainMode::Truncated)).unwrap();
        assert!(c.iter().all(|v| v.abs() < 1e-12));
        let ss: Vec<f64> = xs.iter().map(|x| 2.0 * x * x - 0.5 * x).collect();
        let g = reconstruct_sigma(&ens_from(&xs, &ss, 100.0, DomainMode::Truncated)).unwrap();
        for (x, s) in xs.iter().zip(&g) {
            assert!((s - (4.0 * x - 0.5)).abs() < 1e-9, "quadratic not reproduced");
        }
    }

    #[test]
    fn sigma_second_order_on_sine() {
        let err = |n: usize| {
            let e = seed_ensemble(&InitialData::<f64>::sine(0.7), n).unwrap();
            let sg = reconstruct_sigma(&e).unwrap();
            e.particles
                .iter()
                .zip(&sg)
                .map(|(p, s)| (s + 0.7 * p.x.sin()).abs())
                .fold(0.0, f64::max)
        };
        let (e1, e2) = (err(64), err(128));
        let ratio = e1 / e2;
        assert!((ratio - 4.0).abs() < 0.2, "ratio {ratio}");
    }

    #[test]
    fn sigma_nonuniform_periodic_second_order() {
        let err = |n: usize| {
            let l = std::f64::consts::TAU;
            let xs: Vec<f64> = (0..n)
                .map(|i| i as f64 * l / n as f64)
                .map(|u| u + 0.3 * u.sin())
                .collect();
            let ss: Vec<f64> = xs.iter().map(|x| x.cos()).collect();
            let g = reconstruct_sigma(&ens_from(&xs, &ss, l, DomainMode::Periodic)).unwrap();
            xs.iter().zip(&g).map(|(x, s)| (s + x.sin()).abs()).fold(0.0, f64::max)
        };
        let ratio = err(128) / err(256);
        assert!(ratio > 3.5, "ratio {ratio}");
    }

    #[test]
    fn sigma_reports_imminent_crossing() {
        let xs = [0.0, 1.0, 1.0 + 1e-12, 2.0];
        let r = reconstruct_sigma(&ens_from(&xs, &[0.0; 4], 10.0, DomainMode::Truncated));
        assert!(matches!(r, Err(Error::ImminentCrossing { index: 1, .. })));
    }

    #[test]
    fn undamped_matches_exact_lagrangian_solution() {
        let d = 0.45;
        let mut opts = FieldOptions::new(10.0, 1e-10, 64);
        opts.snapshot_every = Some(2.5);
        let out = run_field(&InitialData::sine(d), &pl(2.0, 0.0), &opts).unwrap();
        assert_eq!(out.verdict, Verdict::GloballySmoothUpTo(10.0));
        for snap in &out.snapshots {
            for (p, p0) in snap.particles.iter().zip(&out.initial.particles) {
                let ex = exact_undamped(d, p0.x, snap.t);
                for (a, b) in [(p.x, ex.x), (p.v, ex.v), (p.e, ex.e), (p.s, ex.s), (p.q, ex.q)] {
                    assert!((a - b).abs() < 1e-6, "t = {} got {a} want {b}", snap.t);
                }
            }
        }
    }

    #[test]
    fn small_amplitude_oscillates_with_unit_frequency() {
        let mut opts = FieldOptions::new(4.0 * std::f64::consts::TAU, 1e-10, 32);
        opts.snapshot_every = Some(std::f64::consts::TAU);
        let out = run_field(&InitialData::sine(1e-3), &pl(2.0, 0.0), &opts).unwrap();
        for snap in &out.snapshots[1..] {
            for (p, p0) in snap.particles.iter().zip(&out.initial.particles) {
                assert!((p.e - p0.e).abs() < 1e-9 && (p.x - p0.x).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn undamped_breaking_time_matches_analytic() {
        for d in [0.9, 0.95] {
            let out = run_field(
                &InitialData::sine(d),
                &pl(2.0, 0.0),
                &FieldOptions::new(10.0, 1e-10, 64),
            )
            .unwrap();
            let t_star = out.verdict.blowup_time().expect("must break");
            let exact = (1.0 - 1.0 / d).acos();
            assert!((t_star - exact).abs() < 1e-3 * exact, "{t_star} vs {exact}");
            assert_eq!(out.blowup_index, Some(0));
        }
    }

    #[test]
    fn affine_data_with_zero_sigma_matches_affine_module() {
        let (a0, b0) = (0.4, 0.3);
        let data = InitialData::Affine {
            a0,
            b0,
            v_offset: 0.2,
            e_offset: -0.1,
            half_width: 1.0,
        };
        let mut opts = FieldOptions::new(3.0, 1e-10, 16);
        opts.sigma = SigmaMode::Zero;
        let spec = pl(2.0, 0.5);
        let out = run_field(&data, &spec, &opts).unwrap();
        let aff = integrate_affine(AffineState::slopes(a0, b0), &spec, 3.0, 1e-10).unwrap();
        let last = aff.trace.last().unwrap().state;
        for p in &out.last.particles {
            assert!((p.q - last.a).abs() < 1e-8 && (p.s - last.b).abs() < 1e-8);
        }
    }

    #[test]
    fn damped_energy_is_monotone_and_budget_closes() {
        let out = run_field(
            &InitialData::sine(0.5),
            &pl(2.0, 1.0),
            &FieldOptions::new(20.0, 1e-9, 64),
        )
        .unwrap();
        let audit = energy_audit(&out, 1e-9).unwrap();
        assert!(audit.monotone && audit.bounded, "{audit:?}");
        assert!(audit.budget_residual < 1e-6, "{audit:?}");
        assert!(out.confirmed_smooth(1e-7));
    }

    #[test]
    fn zero_data_has_zero_energy() {
        let out = run_field(
            &InitialData::sine(0.0),
            &pl(2.0, 1.0),
            &FieldOptions::new(5.0, 1e-8, 16),
        )
        .unwrap();
        let led = out.energy.as_ref().unwrap();
        assert!(led.current.iter().chain(&led.dissipated).all(|&w| w == 0.0));
        assert!(matches!(
            v_at_blowup(&out, &pl(2.0, 1.0)),
            Err(Error::UnsupportedAnalysis(_))
        ));
    }

    #[test]
    fn strong_damping_delays_breaking() {
        // The undamped sine datum breaks at arccos(1 - 1/d). Quadratic damping
        // must at least push any loss of smoothness well past that instant.
        let d: f64 = 0.95;
        let undamped = (1.0 - 1.0 / d).acos();
        let out = run_field(
            &InitialData::sine(d),
            &pl(2.0, 1.0),
            &FieldOptions::new(30.0, 1e-8, 128),
        )
        .unwrap();
        if let Some(t) = out.verdict.blowup_time() {
            assert!(t > 2.0 * undamped, "{t} vs {undamped}");
        }
        assert!(out.reentered);
    }

    #[test]
    fn euler_analog_breaks_despite_quadratic_damping() {
        let data = InitialData::<f64>::drifting_sine(0.95, 2.0);
        let (v, _, vp, _) = data.eval(0.0);
        assert!((v - 2.0).abs() < 1e-15 && (vp + 0.95).abs() < 1e-15);
        let out = run_euler_analog(&data, &pl(2.0, 1.0), &FieldOptions::new(10.0, 1e-8, 64)).unwrap();
        let t = out.verdict.blowup_time().expect("Euler analog should break");
        assert!(t < 1.0 / 0.95, "{t}");
    }

    #[test]
    fn euler_static_without_velocity() {
        let out = run_euler_analog(
            &InitialData::sine(0.9),
            &pl(2.0, 1.0),
            &FieldOptions::new(50.0, 1e-8, 32),
        )
        .unwrap();
        assert!(!out.verdict.is_blowup());
        for (p, p0) in out.last.particles.iter().zip(&out.initial.particles) {
            assert_eq!((p.v, p.q, p.x), (0.0, 0.0, p0.x));
            assert!((p.s - p0.s).abs() < 1e-15);
        }
    }

    #[test]
    fn euler_undamped_matches_burgers_breaking_time() {
        let d = 0.8;
        let data = InitialData::Harmonic(Harmonic {
            e_amp: 0.0,
            e_mean: 0.0,
            v_amp: d,
            v_mean: 0.0,
            v_phase: 0.0,
            period: std::f64::consts::TAU,
        });
        let out = run_euler_analog(&data, &DampingSpec::undamped(), &FieldOptions::new(5.0, 1e-10, 64)).unwrap();
        let t_star = out.verdict.blowup_time().unwrap();
        assert!((t_star - 1.0 / d).abs() < 1e-3, "{t_star}");
    }

    #[test]
    fn step_field_advances_one_step() {
        let e = seed_ensemble(&InitialData::<f64>::sine(0.5), 32).unwrap();
        let st = step_field(&e, &pl(2.0, 0.0), 0.1, 1e-10, SigmaMode::Reconstructed).unwrap();
        assert!(st.h > 0.0 && st.h <= 0.1);
        assert!((st.ensemble.t - st.h).abs() < 1e-15);
        for (p, p0) in st.ensemble.particles.iter().zip(&e.particles) {
            let ex = exact_undamped(0.5, p0.x, st.h);
            assert!((p.e - ex.e).abs() < 1e-9 && (p.s - ex.s).abs() < 1e-9);
        }
    }

    #[test]
    fn v_at_blowup_refines_the_breaking_characteristic() {
        let mut opts = FieldOptions::new(5.0, 1e-10, 64);
        opts.snapshot_every = Some(0.05);
        let data = InitialData::Harmonic(Harmonic {
            e_amp: 0.9,
            e_mean: -0.2,
            v_amp: 0.0,
            v_mean: 0.3,
            v_phase: 0.0,
            period: std::f64::consts::TAU,
        });
        let out = run_field(&data, &pl(0.25, 0.0), &opts).unwrap();
        assert!(out.verdict.is_blowup());
        let r = v_at_blowup(&out, &pl(0.25, 0.0)).unwrap();
        assert!(r.refined.len() > 10);
        assert!(r.refined.windows(2).all(|w| w[1].w > w[0].w && w[1].t >= w[0].t));
        assert!(r.v_mid.is_some() && r.v_last.is_finite());
    }

    #[test]
    fn rejects_bad_options() {
        let data = InitialData::sine(0.5);
        assert!(run_field(&data, &pl(1.0, 0.5), &FieldOptions::new(1.0, 1e-2, 32)).is_err());
        assert!(run_field(&data, &pl(1.0, 0.5), &FieldOptions::new(-1.0, 1e-8, 32)).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]

            // Amplitudes below 1/2 never break, damped or not.
            #[test]
            fn subcritical_sine_invariants(
                d in 0.0f64..0.45,
                v_mean in -1.0f64..1.0,
                eps in 0.0f64..1.0,
                g in 0.0f64..2.0,
            ) {
                let data = InitialData::Harmonic(Harmonic { v_mean, ..match InitialData::sine(d) {
                    InitialData::Harmonic(h) => h,
                    _ => unreachable!(),
                } });
                let out = run_field(&data, &pl(g, eps), &FieldOptions::new(6.0, 1e-9, 32)).unwrap();
                prop_assert!(!out.verdict.is_blowup());
                let (p0, p1) = (&out.initial.particles, &out.last.particles);
                prop_assert!(p1.iter().all(|p| p.density() > 0.0));
                prop_assert!(p1.windows(2).all(|w| w[1].x > w[0].x));
                prop_assert!(p1[p1.len() - 1].x < p1[0].x + out.last.length);
                // E - x is carried unchanged along each characteristic.
                for (a, b) in p0.iter().zip(p1) {
                    prop_assert!(((b.e - b.x) - (a.e - a.x)).abs() < 1e-6);
                }
                prop_assert!(out.energy.as_ref().unwrap().is_non_increasing(1e-7));
            }
        }
    }
}
