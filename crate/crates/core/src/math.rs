//! Small numeric helpers shared across modules.

use crate::real::Real;

/// Complementary error function, Abramowitz & Stegun 7.1.26.
///
/// Absolute error below 1.5e-7, which is plenty for the error-probability
/// models it feeds.
pub fn erfc<T: Real>(x: T) -> T {
    let sign_neg = x < T::zero();
    let x = x.abs();
    let t = T::one() / (T::one() + T::lit(0.3275911) * x);
    let poly = t
        * (T::lit(0.254829592)
            + t * (T::lit(-0.284496736)
                + t * (T::lit(1.421413741)
                    + t * (T::lit(-1.453152027) + t * T::lit(1.061405429)))));
    let e = poly * (-x * x).exp();
    if sign_neg {
        T::lit(2.0) - e
    } else {
        e
    }
}

/// Upper tail of the standard normal distribution, Q(x) = P(Z > x).
pub fn gauss_tail<T: Real>(x: T) -> T {
    T::lit(0.5) * erfc(x / T::SQRT_2())
}

/// Ordinary least squares line through (x, y): returns (slope, intercept).
pub fn linear_fit<T: Real>(x: &[T], y: &[T]) -> (T, T) {
    assert_eq!(x.len(), y.len());
    let n = T::from_usize(x.len()).unwrap();
    let sx: T = x.iter().copied().sum();
    let sy: T = y.iter().copied().sum();
    let sxx: T = x.iter().map(|&v| v * v).sum();
    let sxy: T = x.iter().zip(y).map(|(&a, &b)| a * b).sum();
    let denom = n * sxx - sx * sx;
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    (slope, intercept)
}

/// Least-squares slope of a line constrained through the origin.
pub fn slope_through_origin<T: Real>(x: &[T], y: &[T]) -> T {
    let sxy: T = x.iter().zip(y).map(|(&a, &b)| a * b).sum();
    let sxx: T = x.iter().map(|&v| v * v).sum();
    sxy / sxx
}

/// Pearson correlation coefficient.
pub fn correlation<T: Real>(x: &[T], y: &[T]) -> T {
    let n = T::from_usize(x.len()).unwrap();
    let mx: T = x.iter().copied().sum::<T>() / n;
    let my: T = y.iter().copied().sum::<T>() / n;
    let mut sxy = T::zero();
    let mut sxx = T::zero();
    let mut syy = T::zero();
    for (&a, &b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}
