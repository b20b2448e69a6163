//! Density-dependent damping law `nu(n) = epsilon * f(n)` and the analytic
//! criteria on the shape `f` that decide whether damping suppresses
//! gradient catastrophes.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quadrature::{integrate_to_infinity, QuadConfig};
use crate::scalar::{log_grid, Real};

pub type ShapeFn<T> = Arc<dyn Fn(T) -> T + Send + Sync>;

/// Sampling range used to check `f >= 0`.
const SAMPLE_LO: f64 = 1e-3;
const SAMPLE_HI: f64 = 1e6;
const SAMPLE_POINTS: usize = 91;
/// Declared tail exponent must match `eta f'/f` at the top of the sample
/// range to within this absolute slack.
const DECLARED_TAIL_SLACK: f64 = 0.1;
/// Relative last-decade spread accepted by [`check_tail_regularity`].
const TAIL_SPREAD_TOL: f64 = 1e-3;

#[derive(Clone)]
pub enum DampingForm<T> {
    /// `f(n) = nu0 * n^gamma`.
    PowerLaw { nu0: T, gamma: T },
    /// Arbitrary shape with its derivative. Analyses that need the tail
    /// behaviour require `tail_gamma`.
    Custom {
        f: ShapeFn<T>,
        fprime: ShapeFn<T>,
        tail_gamma: Option<T>,
    },
}

impl<T: fmt::Debug> fmt::Debug for DampingForm<T> {
    fn fmt(&self, fmt: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::PowerLaw { nu0, gamma } => fmt
                .debug_struct("PowerLaw")
                .field("nu0", nu0)
                .field("gamma", gamma)
                .finish(),
            Self::Custom { tail_gamma, .. } => fmt
                .debug_struct("Custom")
                .field("tail_gamma", tail_gamma)
                .finish_non_exhaustive(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct DampingSpec<T> {
    pub epsilon: T,
    pub form: DampingForm<T>,
}

impl<T: Real> DampingSpec<T> {
    pub fn power_law(nu0: T, gamma: T, epsilon: T) -> Result<Self> {
        if !(nu0 > T::zero()) || !nu0.is_finite() {
            return Err(Error::InvalidInput(format!("nu0 must be positive, got {nu0}")));
        }
        if !gamma.is_finite() {
            return Err(Error::InvalidInput(format!("gamma must be finite, got {gamma}")));
        }
        check_epsilon(epsilon)?;
        Ok(Self {
            epsilon,
            form: DampingForm::PowerLaw { nu0, gamma },
        })
    }

    /// No damping at all (`epsilon = 0`).
    pub fn undamped() -> Self {
        Self {
            epsilon: T::zero(),
            form: DampingForm::PowerLaw {
                nu0: T::one(),
                gamma: T::zero(),
            },
        }
    }

    pub fn custom<F, D>(f: F, fprime: D, tail_gamma: Option<T>, epsilon: T) -> Result<Self>
    where
        F: Fn(T) -> T + Send + Sync + 'static,
        D: Fn(T) -> T + Send + Sync + 'static,
    {
        check_epsilon(epsilon)?;
        let spec = Self {
            epsilon,
            form: DampingForm::Custom {
                f: Arc::new(f),
                fprime: Arc::new(fprime),
                tail_gamma,
            },
        };
        spec.validate()?;
        if let Some(g) = tail_gamma {
            let eta = T::lit(SAMPLE_HI);
            let ratio = eta * spec.shape_derivative(eta) / spec.shape(eta);
            if !((ratio - g).abs() <= T::lit(DECLARED_TAIL_SLACK)) {
                return Err(Error::InvalidInput(format!(
                    "declared tail exponent {g} inconsistent with eta f'/f = {ratio} at eta = {eta}"
                )));
            }
        }
        Ok(spec)
    }

    pub fn with_epsilon(&self, epsilon: T) -> Self {
        Self {
            epsilon,
            form: self.form.clone(),
        }
    }

    /// Checks `f(eta) >= 0` on a log grid over `[1e-3, 1e6]`.
    pub fn validate(&self) -> Result<()> {
        check_epsilon(self.epsilon)?;
        for eta in log_grid(T::lit(SAMPLE_LO), T::lit(SAMPLE_HI), SAMPLE_POINTS) {
            let v = self.shape(eta);
            if !(v >= T::zero()) {
                return Err(Error::InvalidInput(format!(
                    "damping shape must be nonnegative; f({eta}) = {v}"
                )));
            }
        }
        Ok(())
    }

    /// The shape `f(n)` without the amplitude.
    #[inline]
    pub fn shape(&self, n: T) -> T {
        match &self.form {
            DampingForm::PowerLaw { nu0, gamma } => *nu0 * n.powf(*gamma),
            DampingForm::Custom { f, .. } => f(n),
        }
    }

    /// `f'(n)`.
    #[inline]
    pub fn shape_derivative(&self, n: T) -> T {
        match &self.form {
            DampingForm::PowerLaw { nu0, gamma } => {
                if *gamma == T::zero() {
                    T::zero()
                } else {
                    *nu0 * *gamma * n.powf(*gamma - T::one())
                }
            }
            DampingForm::Custom { fprime, .. } => fprime(n),
        }
    }

    /// `epsilon * f(n)` without the domain check; for inner loops where
    /// positivity of `n` is already guaranteed.
    #[inline]
    pub fn rate(&self, n: T) -> T {
        if self.epsilon == T::zero() {
            T::zero()
        } else {
            self.epsilon * self.shape(n)
        }
    }

    /// `epsilon * f'(n)`.
    #[inline]
    pub fn rate_derivative(&self, n: T) -> T {
        if self.epsilon == T::zero() {
            T::zero()
        } else {
            self.epsilon * self.shape_derivative(n)
        }
    }

    /// Damping coefficient `nu(n) = epsilon * f(n)` for a positive density.
    pub fn eval(&self, n: T) -> Result<T> {
        if !(n > T::zero()) {
            return Err(Error::NonPositiveDensity {
                density: n.as_f64(),
                location: "damping evaluation".into(),
            });
        }
        Ok(self.rate(n))
    }

    /// Power-law exponent of the tail of `f`.
    pub fn tail_exponent(&self) -> Result<T> {
        match &self.form {
            DampingForm::PowerLaw { gamma, .. } => Ok(*gamma),
            DampingForm::Custom {
                tail_gamma: Some(g), ..
            } => Ok(*g),
            DampingForm::Custom { tail_gamma: None, .. } => Err(Error::UnsupportedAnalysis(
                "custom damping shape without a declared tail exponent".into(),
            )),
        }
    }
}

fn check_epsilon<T: Real>(epsilon: T) -> Result<()> {
    if epsilon >= T::zero() && epsilon.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "epsilon must be a nonnegative finite number, got {epsilon}"
        )))
    }
}

/// Whether `int^inf f(eta)/eta^2 d eta` diverges, i.e. tail exponent >= 1.
pub fn check_suppression_condition<T: Real>(spec: &DampingSpec<T>) -> Result<bool> {
    Ok(spec.tail_exponent()? >= T::one())
}

/// Condition governing parabolic (`C = 0`) data: tail exponent > 1/2.
///
/// The boundary `gamma = 1/2` is excluded.
pub fn check_parabolic_condition<T: Real>(spec: &DampingSpec<T>) -> Result<bool> {
    Ok(spec.tail_exponent()? > T::lit(0.5))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TailReport<T> {
    /// `eta f'(eta)/f(eta)` at the largest grid point.
    pub limit_estimate: T,
    /// Relative spread of the ratio over the last decade of the grid.
    pub spread: T,
    pub passes: bool,
}

/// Estimates `lim eta f'(eta)/f(eta)` on the tail of `grid`.
///
/// The spread over the last decade `[max/10, max]` is measured relative to
/// `max(|limit|, 1)` and must stay below `1e-3`.
pub fn check_tail_regularity<T: Real>(spec: &DampingSpec<T>, grid: &[T]) -> Result<TailReport<T>> {
    if grid.len() < 2 || grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInput(
            "grid must be strictly increasing with at least two points".into(),
        ));
    }
    let top = *grid.last().unwrap();
    if top < T::lit(1e4) {
        return Err(Error::InvalidInput(format!("grid must reach at least 1e4, got {top}")));
    }
    if grid[0] <= T::zero() {
        return Err(Error::InvalidInput("grid must be positive".into()));
    }

    let zeros: Vec<f64> = grid
        .iter()
        .filter(|&&eta| spec.shape(eta) == T::zero())
        .map(|eta| eta.as_f64())
        .collect();
    if !zeros.is_empty() {
        return Err(Error::ZeroDamping { eta: zeros });
    }

    let ratio = |eta: T| eta * spec.shape_derivative(eta) / spec.shape(eta);
    let cut = top / T::lit(10.0);
    let tail: Vec<T> = grid.iter().filter(|&&eta| eta >= cut).map(|&eta| ratio(eta)).collect();
    let limit_estimate = ratio(top);
    let (lo, hi) = tail.iter().fold((T::infinity(), T::neg_infinity()), |(lo, hi), &r| {
        (lo.min(r), hi.max(r))
    });
    let spread = (hi - lo) / limit_estimate.abs().max(T::one());
    Ok(TailReport {
        limit_estimate,
        spread,
        passes: spread < T::lit(TAIL_SPREAD_TOL),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DampingIntegral<T> {
    Finite(T),
    Divergent,
}

/// `I = int_{eta0}^inf f(eta)/eta^2 d eta` (shape only, no epsilon).
///
/// Divergence is decided by the tail exponent; the value of a convergent
/// integral is exact for power laws and computed by quadrature otherwise.
pub fn damping_integral<T: Real>(spec: &DampingSpec<T>, eta0: T) -> Result<DampingIntegral<T>> {
    if !(eta0 > T::zero()) {
        return Err(Error::Domain(format!("eta0 must be positive, got {eta0}")));
    }
    if check_suppression_condition(spec)? {
        return Ok(DampingIntegral::Divergent);
    }
    match &spec.form {
        DampingForm::PowerLaw { nu0, gamma } => {
            let p = T::one() - *gamma;
            Ok(DampingIntegral::Finite(*nu0 * eta0.powf(-p) / p))
        }
        DampingForm::Custom { f, .. } => {
            let r = integrate_to_infinity(|eta: T| f(eta) / (eta * eta), eta0, &QuadConfig::default());
            if r.converged {
                Ok(DampingIntegral::Finite(r.value))
            } else {
                Err(Error::UnsupportedAnalysis(format!(
                    "quadrature of the damping integral did not converge (estimate {}, error {})",
                    r.value, r.error
                )))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate;
    use proptest::prelude::*;

    fn pl(gamma: f64, eps: f64) -> DampingSpec<f64> {
        DampingSpec::power_law(1.0, gamma, eps).unwrap()
    }

    #[test]
    fn eval_examples() {
        assert_eq!(pl(2.0, 0.8).eval(1.0).unwrap(), 0.8);
        assert_eq!(pl(1.0, 0.5).eval(2.0).unwrap(), 1.0);
        assert_eq!(pl(0.0, 0.3).eval(7.0).unwrap(), 0.3);
    }

    #[test]
    fn eval_rejects_nonpositive_density() {
        assert!(matches!(pl(2.0, 1.0).eval(0.0), Err(Error::NonPositiveDensity { .. })));
        assert!(matches!(pl(2.0, 1.0).eval(-1.0), Err(Error::NonPositiveDensity { .. })));
    }

    #[test]
    fn power_law_derivative_is_exact() {
        let s = DampingSpec::power_law(3.0, 2.5, 1.0).unwrap();
        assert_eq!(s.shape_derivative(4.0), 3.0 * 2.5 * 4f64.powf(1.5));
        assert_eq!(pl(0.0, 1.0).shape_derivative(5.0), 0.0);
    }

    #[test]
    fn constructor_validation() {
        assert!(DampingSpec::power_law(0.0, 1.0, 1.0).is_err());
        assert!(DampingSpec::power_law(1.0, 1.0, -0.1).is_err());
        assert!(DampingSpec::<f64>::custom(|n| n - 1.0, |_| 1.0, Some(1.0), 1.0).is_err());
        assert!(DampingSpec::<f64>::custom(|n| n * n, |n| 2.0 * n, Some(1.0), 1.0).is_err());
        assert!(DampingSpec::<f64>::custom(|n| n * n, |n| 2.0 * n, Some(2.0), 1.0).is_ok());
    }

    #[test]
    fn suppression_condition_examples() {
        assert!(check_suppression_condition(&pl(1.0, 1.0)).unwrap());
        assert!(check_suppression_condition(&pl(2.0, 1.0)).unwrap());
        assert!(!check_suppression_condition(&pl(0.5, 1.0)).unwrap());
    }

    #[test]
    fn convergent_case_quadrature_cross_check() {
        // gamma = 1/2: int_1^{1e8} eta^{-3/2} stays below 2 and approaches it.
        let cfg = QuadConfig::new(1e-12, 1e-12);
        let mut last = 0.0;
        for hi in [1e2, 1e4, 1e6, 1e8] {
            // log substitution eta = e^u for accuracy over many decades
            let r = integrate(|u: f64| (-0.5 * u).exp(), 0.0, f64::ln(hi), &cfg);
            assert!(r.value < 2.0 && r.value > last);
            last = r.value;
        }
        assert!((last - 2.0).abs() < 1e-3);
    }

    #[test]
    fn parabolic_condition_examples() {
        assert!(check_parabolic_condition(&pl(0.75, 1.0)).unwrap());
        assert!(!check_parabolic_condition(&pl(0.5, 1.0)).unwrap());
        assert!(check_parabolic_condition(&pl(2.0, 1.0)).unwrap());
    }

    #[test]
    fn undeclared_tail_is_unsupported() {
        let s = DampingSpec::<f64>::custom(|n| n, |_| 1.0, None, 1.0).unwrap();
        assert!(matches!(
            check_suppression_condition(&s),
            Err(Error::UnsupportedAnalysis(_))
        ));
        assert!(matches!(
            check_parabolic_condition(&s),
            Err(Error::UnsupportedAnalysis(_))
        ));
    }

    #[test]
    fn tail_regularity_power_laws() {
        let grid = log_grid(1.0, 1e6, 61);
        for g in [1.0, 2.0] {
            let r = check_tail_regularity(&pl(g, 1.0), &grid).unwrap();
            assert!((r.limit_estimate - g).abs() < 1e-12);
            assert!(r.passes);
        }
    }

    #[test]
    fn tail_regularity_eta_log_eta() {
        // eta f'/f = 1 + 1/ln(eta); its spread over a decade is about
        // ln(10)/ln(eta)^2, below 1e-3 only once ln(eta) > ~48.
        let s = DampingSpec::<f64>::custom(
            |n| if n >= 1.0 { n * n.ln() } else { n },
            |n| if n >= 1.0 { n.ln() + 1.0 } else { 1.0 },
            Some(1.0),
            1.0,
        )
        .unwrap();
        let grid = log_grid(10.0, 1e6, 51);
        let small = check_tail_regularity(&s, &grid).unwrap();
        assert!(!small.passes);
        let top = *grid.last().unwrap();
        let expected = 1.0 + 1.0 / top.ln();
        assert!((small.limit_estimate - expected).abs() < 1e-12);
        let first_tail = *grid.iter().find(|&&e| e >= top / 10.0).unwrap();
        let oracle_spread = 1.0 / first_tail.ln() - 1.0 / top.ln();
        assert!((small.spread - oracle_spread / expected).abs() < 1e-12);

        let large = check_tail_regularity(&s, &log_grid(10.0, 1e30, 300)).unwrap();
        assert!(large.passes, "{large:?}");
        assert!((large.limit_estimate - 1.0).abs() < 0.02);
    }

    #[test]
    fn tail_regularity_errors() {
        let s = pl(1.0, 1.0);
        assert!(check_tail_regularity(&s, &[1.0, 10.0, 100.0]).is_err());
        assert!(check_tail_regularity(&s, &[1.0, 1e5, 1e4]).is_err());
        let vanishing = DampingSpec::<f64>::custom(
            |n| if n > 5.0 && n < 20.0 { 0.0 } else { n },
            |n| if n > 5.0 && n < 20.0 { 0.0 } else { 1.0 },
            Some(1.0),
            1.0,
        )
        .unwrap();
        match check_tail_regularity(&vanishing, &[1.0, 10.0, 15.0, 1e4]) {
            Err(Error::ZeroDamping { eta }) => assert_eq!(eta, vec![10.0, 15.0]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn damping_integral_power_law() {
        match damping_integral(&pl(0.5, 1.0), 1.0).unwrap() {
            DampingIntegral::Finite(i) => assert!((i - 2.0).abs() < 1e-14),
            DampingIntegral::Divergent => panic!(),
        }
        assert_eq!(
            damping_integral(&pl(1.0, 1.0), 1.0).unwrap(),
            DampingIntegral::Divergent
        );
    }

    #[test]
    fn damping_integral_custom_matches_analytic() {
        let s = DampingSpec::<f64>::custom(|n| n.sqrt(), |n| 0.5 / n.sqrt(), Some(0.5), 1.0).unwrap();
        match damping_integral(&s, 1.0).unwrap() {
            DampingIntegral::Finite(i) => assert!((i - 2.0).abs() < 1e-8, "{i}"),
            DampingIntegral::Divergent => panic!(),
        }
    }

    proptest! {
        #[test]
        fn suppression_monotone_in_gamma(g in -2.0f64..4.0) {
            let s = pl(g, 1.0);
            prop_assert_eq!(check_suppression_condition(&s).unwrap(), g >= 1.0);
        }

        #[test]
        fn suppression_implies_parabolic(g in -2.0f64..4.0) {
            let s = pl(g, 1.0);
            if check_suppression_condition(&s).unwrap() {
                prop_assert!(check_parabolic_condition(&s).unwrap());
            }
        }

        #[test]
        fn eval_linear_in_epsilon(c in 0.0f64..10.0, g in -1.0f64..3.0, n in 1e-3f64..1e3) {
            let a = pl(g, 2.0 * c).eval(n).unwrap();
            let b = pl(g, c).eval(n).unwrap();
            prop_assert!((a - 2.0 * b).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }
}
