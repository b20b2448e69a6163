use crate::scalar::Real;

/// Classification of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Verdict<T> {
    /// The solution stayed smooth on `[t0, T_end]`.
    GloballySmoothUpTo(T),
    /// Gradient catastrophe detected at `t_star`.
    BlowUpAt(T),
}

impl<T: Real> Verdict<T> {
    pub fn is_blowup(&self) -> bool {
        matches!(self, Verdict::BlowUpAt(_))
    }

    pub fn blowup_time(&self) -> Option<T> {
        match *self {
            Verdict::BlowUpAt(t) => Some(t),
            Verdict::GloballySmoothUpTo(_) => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Verdict::GloballySmoothUpTo(_) => "smooth",
            Verdict::BlowUpAt(_) => "blowup",
        }
    }

    /// `T_end` for smooth runs, `t*` for blow-ups.
    pub fn time(&self) -> T {
        match *self {
            Verdict::GloballySmoothUpTo(t) | Verdict::BlowUpAt(t) => t,
        }
    }
}

/// Blow-up detection thresholds shared by the affine and field solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlowupThresholds<T> {
    /// Slope magnitude treated as infinite.
    pub slope: T,
    /// Step collapse threshold.
    pub h_min: T,
    /// Required shrink of the step relative to its regular-regime median.
    pub step_shrink: T,
}

impl<T: Real> Default for BlowupThresholds<T> {
    fn default() -> Self {
        Self {
            slope: T::lit(1e8),
            h_min: T::lit(1e-14),
            step_shrink: T::lit(1e6),
        }
    }
}
