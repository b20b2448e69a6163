//! First-order corrector in `eps` for the damped phase curve, the
//! blow-up persistence bound, and the second-derivative system along the
//! undamped conic together with its closed-form solution.
//!
//! With `a(b) = a0(b) + eps alpha1(b) + ...` and `a0` on the lower branch of
//! the conic, the corrector is
//!
//! ```text
//! alpha1(b) = (1-b)^2 / a0(b) * int_b^{b0} a0(beta) f(1-beta) / (1-beta)^3 d beta
//! ```

use std::convert::Infallible;
use std::fmt;

use crate::affine::{conic_radicand, unperturbed_branch, Branch};
use crate::damping::{damping_integral, DampingIntegral, DampingSpec};
use crate::error::{Error, Result};
use crate::ode::{Control, Dopri5, Dopri5Config, Termination};
use crate::quadrature::{integrate, integrate_to_infinity, QuadConfig};
use crate::scalar::Real;

/// `alpha1` sampled on a grid of `b < b0`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrectorCurve<T> {
    pub b_grid: Vec<T>,
    pub alpha1: Vec<T>,
    pub b0: T,
    pub c: T,
}

impl<T: Real> CorrectorCurve<T> {
    /// First-order phase curve `a0(b) + eps alpha1(b)` on the grid.
    pub fn first_order_curve(&self, epsilon: T) -> Result<Vec<T>> {
        self.b_grid
            .iter()
            .zip(&self.alpha1)
            .map(|(&b, &al)| Ok(unperturbed_branch(b, self.c, Branch::Lower)? + epsilon * al))
            .collect()
    }
}

fn corrector_quad<T: Real>() -> QuadConfig<T> {
    QuadConfig::new(T::lit(1e-15), T::lit(1e-13))
}

fn check_corrector_pre<T: Real>(c: T, b0: T) -> Result<()> {
    if !(c >= T::zero()) {
        return Err(Error::Domain(format!("corrector requires C >= 0, got {c}")));
    }
    if !(b0 < T::one()) {
        return Err(Error::NonPositiveDensity {
            density: (T::one() - b0).as_f64(),
            location: "corrector base point b0".into(),
        });
    }
    // Tiny negative radicands at b0 are rounding noise on the vertex.
    if conic_radicand(b0, c) < -T::lit(1e-12) {
        return Err(Error::Domain(format!("b0 = {b0} lies off the conic C = {c}")));
    }
    Ok(())
}

/// Computes `alpha1` on `b_grid` by adaptive quadrature in `w = ln(1 - beta)`.
pub fn corrector_alpha1<T: Real>(c: T, b0: T, spec: &DampingSpec<T>, b_grid: &[T]) -> Result<CorrectorCurve<T>> {
    check_corrector_pre(c, b0)?;
    let lower = |beta: T| -conic_radicand(beta, c).max(T::zero()).sqrt();
    let w0 = (T::one() - b0).ln();
    let cfg = corrector_quad();
    let mut alpha1 = Vec::with_capacity(b_grid.len());
    for &b in b_grid {
        if !(b < b0) {
            return Err(Error::Domain(format!("grid point b = {b} must lie below b0 = {b0}")));
        }
        let r = conic_radicand(b, c);
        if !(r > T::zero()) {
            return Err(Error::Domain(format!(
                "a0 vanishes at grid point b = {b} (radicand {r})"
            )));
        }
        let m = T::one() - b;
        // beta = 1 - e^w maps [b, b0] onto [ln(1-b0), ln(1-b)].
        let q = integrate(
            |w: T| {
                let eta = w.exp();
                lower(T::one() - eta) * spec.shape(eta) / (eta * eta)
            },
            w0,
            m.ln(),
            &cfg,
        );
        if !q.converged {
            return Err(Error::IntegrationFailure {
                t: b.as_f64(),
                reason: format!("corrector quadrature did not converge (error {})", q.error),
            });
        }
        alpha1.push(m * m / -r.sqrt() * q.value);
    }
    Ok(CorrectorCurve {
        b_grid: b_grid.to_vec(),
        alpha1,
        b0,
        c,
    })
}

/// `lim_{b -> -inf} alpha1(b) / (1 - b)`, the growth rate of the corrector.
///
/// Equals `C^{-1/2} int_{eta0}^inf sqrt(C eta^2 + 2 eta - 1) f(eta) / eta^3`
/// with `eta0 = 1 - b0`; divergent exactly when the damping integral is.
pub fn corrector_growth_rate<T: Real>(c: T, b0: T, spec: &DampingSpec<T>) -> Result<DampingIntegral<T>> {
    check_corrector_pre(c, b0)?;
    if !(c > T::zero()) {
        return Err(Error::Domain(format!("growth rate requires C > 0, got {c}")));
    }
    let eta0 = T::one() - b0;
    if let DampingIntegral::Divergent = damping_integral(spec, eta0)? {
        return Ok(DampingIntegral::Divergent);
    }
    let r = integrate_to_infinity(
        |eta: T| (c * eta * eta + eta + eta - T::one()).max(T::zero()).sqrt() * spec.shape(eta) / (eta * eta * eta),
        eta0,
        &corrector_quad(),
    );
    if !r.converged {
        return Err(Error::UnsupportedAnalysis(format!(
            "corrector growth-rate quadrature did not converge (error {})",
            r.error
        )));
    }
    Ok(DampingIntegral::Finite(r.value / c.sqrt()))
}

/// Whether the first-order curve `a0 + eps alpha1` still escapes to `-inf`.
pub fn corrector_predicts_blowup<T: Real>(c: T, b0: T, spec: &DampingSpec<T>) -> Result<bool> {
    Ok(match corrector_growth_rate(c, b0, spec)? {
        DampingIntegral::Finite(rate) => spec.epsilon * rate < c.sqrt(),
        DampingIntegral::Divergent => spec.epsilon == T::zero(),
    })
}

/// Outcome of the persistence test `-sqrt(C) + eps I < 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PersistenceBound<T> {
    /// `I = int_{eta0}^inf f / eta^2`.
    pub integral: DampingIntegral<T>,
    /// `sqrt(C) / I`; zero when the integral diverges.
    pub epsilon_bound: T,
    /// Whether blow-up is guaranteed to survive at the spec's `eps`.
    pub persists: bool,
}

impl<T: Real> PersistenceBound<T> {
    pub fn infinite_damping_integral(&self) -> bool {
        matches!(self.integral, DampingIntegral::Divergent)
    }
}

impl<T: Real> fmt::Display for PersistenceBound<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.integral {
            DampingIntegral::Finite(i) => write!(
                f,
                "integral {i}, epsilon_bound {}, persists {}",
                self.epsilon_bound, self.persists
            ),
            DampingIntegral::Divergent => write!(f, "infinite damping integral, persists {}", self.persists),
        }
    }
}

pub fn blowup_persistence_bound<T: Real>(c: T, spec: &DampingSpec<T>, eta0: T) -> Result<PersistenceBound<T>> {
    if !(c > T::zero()) {
        return Err(Error::Domain(format!(
            "persistence bound needs hyperbolic data (C > 0), got C = {c}"
        )));
    }
    let integral = damping_integral(spec, eta0)?;
    Ok(match integral {
        DampingIntegral::Finite(i) => {
            let epsilon_bound = c.sqrt() / i;
            PersistenceBound {
                integral,
                epsilon_bound,
                persists: spec.epsilon < epsilon_bound,
            }
        }
        DampingIntegral::Divergent => PersistenceBound {
            integral,
            epsilon_bound: T::zero(),
            persists: spec.epsilon == T::zero(),
        },
    })
}

/// Which linear system to integrate for `(sigma0, xi0)` along the conic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Sigma0Form {
    /// `sigma' = ((1-s) xi - sigma q0) / ((1-s) q0)`,
    /// `xi' = -(2 q0 xi + sigma) / ((1-s) q0)`;
    /// solved by `sigma0 = (s-1)(C1 s + C2 q0)`.
    #[default]
    Standard,
    /// `sigma' = ((1-s) xi - 2 q0 sigma) / ((1-s) q0)`,
    /// `xi' = -(3 q0 xi + sigma) / ((1-s) q0)`, obtained by differentiating
    /// the characteristic system in `x`; solved by
    /// `sigma0 = (1-s)^2 (C1 s + C2 q0)`.
    Differentiated,
}

impl Sigma0Form {
    /// Basis `(phi1, phi2)` of the closed form at `s`.
    pub fn basis<T: Real>(self, s: T, q0: T) -> (T, T) {
        let m = T::one() - s;
        let w = match self {
            Sigma0Form::Standard => -m,
            Sigma0Form::Differentiated => m * m,
        };
        (w * s, w * q0)
    }

    fn rhs<T: Real>(self, s: T, q0: T, sigma: T, xi: T) -> (T, T) {
        let m = T::one() - s;
        let (k_sigma, k_xi) = match self {
            Sigma0Form::Standard => (T::one(), T::lit(2.0)),
            Sigma0Form::Differentiated => (T::lit(2.0), T::lit(3.0)),
        };
        let den = m * q0;
        ((m * xi - k_sigma * q0 * sigma) / den, -(k_xi * q0 * xi + sigma) / den)
    }
}

/// Samples of `(sigma0, xi0)` along `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sigma0Trace<T> {
    pub s: Vec<T>,
    pub sigma: Vec<T>,
    pub xi: Vec<T>,
    pub c: T,
    pub branch: Branch,
    pub form: Sigma0Form,
}

impl<T: Real> Sigma0Trace<T> {
    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    pub fn q0(&self, i: usize) -> T {
        self.branch.sign::<T>() * conic_radicand(self.s[i], self.c).max(T::zero()).sqrt()
    }
}

/// Integrates the `(sigma0, xi0)` system from `s_range.0` to `s_range.1`,
/// sampling at `samples` equispaced points (endpoints included).
pub fn sigma0_system<T: Real>(
    s_range: (T, T),
    init: (T, T),
    c: T,
    branch: Branch,
    form: Sigma0Form,
    samples: usize,
) -> Result<Sigma0Trace<T>> {
    let (s0, s1) = s_range;
    if samples < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 samples, got {samples}")));
    }
    if !(s0 < T::one() && s1 < T::one()) {
        return Err(Error::NonPositiveDensity {
            density: (T::one() - s0.max(s1)).as_f64(),
            location: "sigma0 range".into(),
        });
    }
    // The radicand is concave (C < 0) or decreasing (C >= 0) on s < 1, so its
    // minimum over the range sits at an endpoint.
    for s in [s0, s1] {
        if !(conic_radicand(s, c) > T::zero()) {
            return Err(Error::BranchTurning { s: s.as_f64() });
        }
    }
    let sign = branch.sign::<T>();
    let mut cfg = Dopri5Config::with_tol(T::lit(1e-12));
    cfg.atol = T::lit(1e-14);
    let solver = Dopri5::new(cfg);

    let grid = crate::scalar::linspace(s0, s1, samples);
    let mut trace = Sigma0Trace {
        s: vec![s0],
        sigma: vec![init.0],
        xi: vec![init.1],
        c,
        branch,
        form,
    };
    let mut y = [init.0, init.1];
    for w in grid.windows(2) {
        let run = solver.integrate(
            |s: T, y: &[T], dy: &mut [T]| -> Result<(), Infallible> {
                let q0 = sign * conic_radicand(s, c).sqrt();
                let (ds, dx) = form.rhs(s, q0, y[0], y[1]);
                dy[0] = ds;
                dy[1] = dx;
                Ok(())
            },
            w[0],
            &y,
            w[1],
            |_| Control::Continue,
        );
        if run.termination != Termination::Reached {
            return Err(Error::IntegrationFailure {
                t: run.t.as_f64(),
                reason: format!("sigma0 integration ended with {:?}", run.termination),
            });
        }
        y = [run.y[0], run.y[1]];
        trace.s.push(w[1]);
        trace.sigma.push(y[0]);
        trace.xi.push(y[1]);
    }
    Ok(trace)
}

/// Constants of the closed form fitted to a `sigma0` trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaZeroFit<T> {
    pub c1: T,
    pub c2: T,
    /// Max deviation over the remaining samples, relative to `max |sigma0|`.
    pub residual: T,
}

impl<T: Real> SigmaZeroFit<T> {
    pub fn eval(&self, form: Sigma0Form, s: T, q0: T) -> T {
        let (p1, p2) = form.basis(s, q0);
        self.c1 * p1 + self.c2 * p2
    }
}

/// Solves for `(C1, C2)` at the first and last samples and reports the
/// residual over the interior ones.
pub fn fit_sigma0<T: Real>(trace: &Sigma0Trace<T>) -> Result<SigmaZeroFit<T>> {
    let n = trace.len();
    if n < 3 {
        return Err(Error::Fit(format!("need at least 3 samples, got {n}")));
    }
    let scale = trace.sigma.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    if scale == T::zero() {
        return Ok(SigmaZeroFit {
            c1: T::zero(),
            c2: T::zero(),
            residual: T::zero(),
        });
    }
    let row = |i: usize| trace.form.basis(trace.s[i], trace.q0(i));
    let (a11, a12) = row(0);
    let (a21, a22) = row(n - 1);
    let det = a11 * a22 - a12 * a21;
    let norm = (a11.abs() + a12.abs()) * (a21.abs() + a22.abs());
    if !(det.abs() > T::lit(1e-12) * norm) {
        return Err(Error::Fit(format!("degenerate sample placement (determinant {det})")));
    }
    let (r1, r2) = (trace.sigma[0], trace.sigma[n - 1]);
    let c1 = (r1 * a22 - r2 * a12) / det;
    let c2 = (a11 * r2 - a21 * r1) / det;
    let fit = SigmaZeroFit {
        c1,
        c2,
        residual: T::zero(),
    };
    let residual = (1..n - 1)
        .map(|i| (trace.sigma[i] - fit.eval(trace.form, trace.s[i], trace.q0(i))).abs())
        .fold(T::zero(), T::max)
        / scale;
    Ok(SigmaZeroFit { residual, ..fit })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::affine::integrate_phase_in_b;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pl(gamma: f64, eps: f64) -> DampingSpec<f64> {
        DampingSpec::power_law(1.0, gamma, eps).unwrap()
    }

    /// Plain composite Simpson in the original variable, refined until stable.
    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
        let mut n = 1 << 10;
        let mut prev = f64::NAN;
        loop {
            let h = (b - a) / n as f64;
            let mut s = f(a) + f(b);
            for i in 1..n {
                s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
            }
            let v = s * h / 3.0;
            if (v - prev).abs() < 1e-14 * v.abs().max(1.0) || n > 1 << 22 {
                return v;
            }
            prev = v;
            n *= 2;
        }
    }

    #[test]
    fn zero_damping_gives_zero_corrector() {
        let zero = DampingSpec {
            epsilon: 1.0,
            form: crate::damping::DampingForm::Custom {
                f: std::sync::Arc::new(|_: f64| 0.0),
                fprime: std::sync::Arc::new(|_: f64| 0.0),
                tail_gamma: None,
            },
        };
        let c = corrector_alpha1(1.0, 0.0, &zero, &[-0.5, -1.0, -4.0]).unwrap();
        assert!(c.alpha1.iter().all(|&a| a == 0.0));
    }

    #[test]
    fn matches_independent_quadrature() {
        // C = 1, b0 = 0, f = eta: smooth integrand on [-1, 0].
        let got = corrector_alpha1(1.0, 0.0, &pl(1.0, 0.3), &[-1.0]).unwrap().alpha1[0];
        let a0 = |b: f64| -(1.0 - 2.0 * b + (1.0 - b).powi(2)).sqrt();
        let inner = simpson(|b| a0(b) * (1.0 - b) / (1.0 - b).powi(3), -1.0, 0.0);
        let oracle = 4.0 / a0(-1.0) * inner;
        assert!((got - oracle).abs() < 1e-8, "{got} vs {oracle}");
    }

    #[test]
    fn corrector_is_positive_and_handles_vertex() {
        // b0 on the conic vertex (a0(b0) = 0): C = 0, b0 = 1/2.
        let grid = [0.49, 0.3, 0.0, -2.0, -50.0];
        let c = corrector_alpha1(0.0, 0.5, &pl(2.0, 1.0), &grid).unwrap();
        assert!(c.alpha1.iter().all(|&a| a > 0.0), "{:?}", c.alpha1);
    }

    #[test]
    fn corrector_rejects_bad_input() {
        let s = pl(1.0, 1.0);
        assert!(matches!(
            corrector_alpha1(-0.1, 0.0, &s, &[-1.0]),
            Err(Error::Domain(_))
        ));
        assert!(matches!(corrector_alpha1(1.0, 0.0, &s, &[0.1]), Err(Error::Domain(_))));
        assert!(matches!(
            corrector_alpha1(1.0, 1.0, &s, &[0.1]),
            Err(Error::NonPositiveDensity { .. })
        ));
    }

    #[test]
    fn first_order_convergence() {
        let (c, b0, b) = (1.0, 0.0, -0.5);
        let a_start = unperturbed_branch(b0, c, Branch::Lower).unwrap();
        let a0 = unperturbed_branch(b, c, Branch::Lower).unwrap();
        let alpha = corrector_alpha1(c, b0, &pl(2.0, 0.0), &[b]).unwrap().alpha1[0];
        let err = |eps: f64| {
            let a = integrate_phase_in_b(a_start, b0, &pl(2.0, eps), b, 1e-13).unwrap();
            ((a - a0) / eps - alpha).abs()
        };
        let errs: Vec<f64> = [1e-2, 5e-3, 2.5e-3].iter().map(|&e| err(e)).collect();
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!((order - 1.0).abs() < 0.2, "{errs:?}");
        }
    }

    #[test]
    fn growth_rate_matches_corrector_asymptotics() {
        let (c, b0) = (4.0, 0.0);
        let s = pl(0.5, 1.0);
        let DampingIntegral::Finite(rate) = corrector_growth_rate(c, b0, &s).unwrap() else {
            panic!("expected a finite rate")
        };
        let b = -1e7;
        let al = corrector_alpha1(c, b0, &s, &[b]).unwrap().alpha1[0];
        // Tail of the growth-rate integral beyond 1 - b decays like (1-b)^{-1/2}.
        assert!(
            (al / (1.0 - b) - rate).abs() < 5e-3 * rate,
            "{} vs {rate}",
            al / (1.0 - b)
        );
        // sqrt(C eta^2 + 2 eta - 1) >= sqrt(C) eta on eta >= 1, so the rate exceeds I = 2.
        assert!(rate > 2.0);
        assert_eq!(
            corrector_growth_rate(c, b0, &pl(1.0, 1.0)).unwrap(),
            DampingIntegral::Divergent
        );
    }

    #[test]
    fn first_order_curve_sign_change_only_for_strong_damping() {
        let grid: Vec<f64> = crate::scalar::log_grid(1.0, 1e6, 40).iter().map(|x| -x).collect();
        let weak = corrector_alpha1(4.0, 0.0, &pl(0.5, 0.2), &grid).unwrap();
        assert!(weak.first_order_curve(0.2).unwrap().iter().all(|&a| a < 0.0));
        // gamma = 1: alpha1 ~ (1-b) ln(1-b), so the sign flips near ln(1-b) ~ 2 sqrt(C) / eps.
        let strong = corrector_alpha1(4.0, 0.0, &pl(1.0, 0.5), &grid).unwrap();
        assert!(strong.first_order_curve(0.5).unwrap().last().unwrap() > &0.0);
    }

    #[test]
    fn persistence_bound_examples() {
        let b = blowup_persistence_bound(4.0, &pl(0.5, 0.5), 1.0).unwrap();
        assert!((b.epsilon_bound - 1.0).abs() < 1e-12);
        assert!(b.persists);
        let d = blowup_persistence_bound(4.0, &pl(1.0, 0.01), 1.0).unwrap();
        assert!(d.infinite_damping_integral() && !d.persists);
        assert!(d.to_string().contains("infinite damping integral"));
        assert!(blowup_persistence_bound(0.0, &pl(0.5, 0.5), 1.0).is_err());
        // Quadrature cross-check for a custom shape with the same tail.
        let custom = DampingSpec::custom(|e: f64| e.sqrt(), |e: f64| 0.5 / e.sqrt(), Some(0.5), 0.5).unwrap();
        let cb = blowup_persistence_bound(4.0, &custom, 1.0).unwrap();
        assert!((cb.epsilon_bound - 1.0).abs() < 1e-9);
    }

    #[test]
    fn sigma0_zero_init_stays_zero() {
        let t = sigma0_system((-0.5, -5.0), (0.0, 0.0), 1.0, Branch::Lower, Sigma0Form::Standard, 10).unwrap();
        assert!(t.sigma.iter().chain(&t.xi).all(|&v| v == 0.0));
        let fit = fit_sigma0(&t).unwrap();
        assert_eq!((fit.c1, fit.c2, fit.residual), (0.0, 0.0, 0.0));
    }

    #[test]
    fn sigma0_examples_fit_closed_form() {
        for (init, c) in [((1.0, 0.0), 1.0), ((0.0, 1.0), 4.0)] {
            for form in [Sigma0Form::Standard, Sigma0Form::Differentiated] {
                let t = sigma0_system((-0.5, -5.0), init, c, Branch::Lower, form, 40).unwrap();
                assert!(t.sigma.iter().all(|v: &f64| v.is_finite() && v.abs() < 1e3));
                let fit = fit_sigma0(&t).unwrap();
                assert!(fit.residual < 1e-6, "{form:?} {fit:?}");
            }
        }
    }

    #[test]
    fn closed_forms_are_not_interchangeable() {
        // The standard basis does not solve the differentiated system and vice versa.
        let t = sigma0_system(
            (-0.5, -5.0),
            (1.0, 0.0),
            1.0,
            Branch::Lower,
            Sigma0Form::Differentiated,
            40,
        )
        .unwrap();
        let swapped = Sigma0Trace {
            form: Sigma0Form::Standard,
            ..t
        };
        assert!(fit_sigma0(&swapped).unwrap().residual > 1e-3);
    }

    #[test]
    fn sigma0_detects_branch_turning() {
        // Ellipse C = -0.5: radicand vanishes inside s in (-1, 1).
        let r = sigma0_system((-0.2, 0.9), (1.0, 0.0), -0.5, Branch::Lower, Sigma0Form::Standard, 5);
        assert!(matches!(r, Err(Error::BranchTurning { .. })));
    }

    #[test]
    fn fit_rejects_short_or_degenerate_traces() {
        let t = Sigma0Trace {
            s: vec![0.0, -1.0],
            sigma: vec![1.0, 2.0],
            xi: vec![0.0, 0.0],
            c: 1.0,
            branch: Branch::Lower,
            form: Sigma0Form::Standard,
        };
        assert!(matches!(fit_sigma0(&t), Err(Error::Fit(_))));
        let d = Sigma0Trace {
            s: vec![-1.0, -2.0, -1.0],
            sigma: vec![1.0, 2.0, 1.0],
            xi: vec![0.0; 3],
            ..t
        };
        assert!(matches!(fit_sigma0(&d), Err(Error::Fit(_))));
    }

    #[test]
    fn twenty_random_draws_fit() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let c = rng.gen_range(0.1..10.0);
            let init = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let t = sigma0_system((-0.5, -5.0), init, c, Branch::Lower, Sigma0Form::Standard, 30).unwrap();
            assert!(fit_sigma0(&t).unwrap().residual < 1e-6);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn corrector_positive(c in 0.0f64..10.0, b0 in -2.0f64..0.45, g in 0.0f64..2.5, depth in 0.01f64..100.0) {
            let a = corrector_alpha1(c, b0, &pl(g, 1.0), &[b0 - depth]).unwrap().alpha1[0];
            prop_assert!(a > 0.0);
        }

        #[test]
        fn sigma0_fit_any_form(c in 0.1f64..10.0, s0 in 0.0f64..1.0, x0 in -1.0f64..1.0, upper in any::<bool>()) {
            let branch = if upper { Branch::Upper } else { Branch::Lower };
            for form in [Sigma0Form::Standard, Sigma0Form::Differentiated] {
                let t = sigma0_system((-0.5, -5.0), (s0, x0), c, branch, form, 25).unwrap();
                prop_assert!(fit_sigma0(&t).unwrap().residual < 1e-6);
            }
        }
    }
}
