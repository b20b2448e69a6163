//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point scalar: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Sum + Send + Sync + 'static
{
    /// Converts an `f64` literal into the scalar type.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// `n` logarithmically spaced points between `lo` and `hi` (inclusive).
pub fn log_grid<T: Real>(lo: T, hi: T, n: usize) -> Vec<T> {
    assert!(n >= 2 && lo > T::zero() && hi > lo);
    let (l0, l1) = (lo.ln(), hi.ln());
    let denom = T::from_usize(n - 1).unwrap();
    (0..n)
        .map(|i| {
            let w = T::from_usize(i).unwrap() / denom;
            (l0 + (l1 - l0) * w).exp()
        })
        .collect()
}

/// `n` equispaced points from `a` to `b` inclusive.
pub fn linspace<T: Real>(a: T, b: T, n: usize) -> Vec<T> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => {
            let denom = T::from_usize(n - 1).unwrap();
            (0..n)
                .map(|i| a + (b - a) * T::from_usize(i).unwrap() / denom)
                .collect()
        }
    }
}

/// Median of a slice (average of the two middle values for even lengths).
pub fn median<T: Real>(values: &[T]) -> Option<T> {
    if values.is_empty() {
        return None;
    }
    let mut v: Vec<T> = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        Some(v[m])
    } else {
        Some((v[m - 1] + v[m]) / T::lit(2.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        let g = log_grid(1e-3_f64, 1e6, 10);
        assert_eq!(g.len(), 10);
        assert!((g[0] - 1e-3).abs() < 1e-15);
        assert!((g[9] - 1e6).abs() < 1e-6);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(linspace(0.0_f32, 1.0, 3), vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn median_even_odd() {
        assert_eq!(median::<f64>(&[]), None);
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), Some(2.5));
    }
}
