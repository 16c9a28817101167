//! Small numeric helpers shared across modules.

/// `integral_0^s exp(-lambda u) du = (1 - exp(-lambda s)) / lambda`,
/// with the `lambda -> 0` limit `s` taken analytically (never `0/0`).
pub(crate) fn exp_integral(lambda: f64, s: f64) -> f64 {
    if lambda == 0.0 {
        s
    } else {
        -f64::exp_m1(-lambda * s) / lambda
    }
}

/// Smaller real root of `a x^2 + b x + c = 0` for `a > 0`.
///
/// Uses the citardauq form on the branch where the textbook formula would
/// subtract nearly equal quantities, so the root stays accurate even when
/// the discriminant dwarfs the coefficients.
pub(crate) fn smaller_quadratic_root(a: f64, b: f64, c: f64) -> f64 {
    debug_assert!(a > 0.0);
    let disc = b * b - 4.0 * a * c;
    debug_assert!(disc >= 0.0, "discriminant must be nonnegative, got {disc}");
    let sqrt_disc = disc.max(0.0).sqrt();
    if b >= 0.0 {
        (-b - sqrt_disc) / (2.0 * a)
    } else {
        2.0 * c / (-b + sqrt_disc)
    }
}

/// Neumaier compensated summation. Accumulation order is fixed by the caller,
/// which keeps parallel reductions reproducible when paths are summed by
/// index.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Sample mean and standard error of a slice, via compensated two-pass sums.
/// Returns `(mean, stderr)`; the standard error is 0 for a single sample.
pub(crate) fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    assert!(!values.is_empty());
    let n = values.len() as f64;
    let mut s = CompensatedSum::default();
    for &v in values {
        s.add(v);
    }
    let mean = s.total() / n;
    if !mean.is_finite() {
        return (mean, f64::INFINITY);
    }
    if values.len() == 1 {
        return (mean, 0.0);
    }
    let mut sq = CompensatedSum::default();
    for &v in values {
        let d = v - mean;
        sq.add(d * d);
    }
    let variance = sq.total() / (n - 1.0);
    (mean, (variance / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exp_integral_limits() {
        assert_eq!(exp_integral(0.0, 3.0), 3.0);
        let lam = 0.4f64;
        let s = 2.0;
        let exact = (1.0 - (-lam * s).exp()) / lam;
        assert!((exp_integral(lam, s) - exact).abs() < 1e-15);
        // Continuity near lambda = 0.
        assert!((exp_integral(1e-12, 3.0) - 3.0).abs() < 1e-9);
    }

    #[test]
    fn quadratic_root_is_stable() {
        // x^2 - 3x + 2: roots 1 and 2.
        assert!((smaller_quadratic_root(1.0, -3.0, 2.0) - 1.0).abs() < 1e-15);
        // Small root near zero with a huge spread: x^2 - 1e8 x + 1.
        let r = smaller_quadratic_root(1.0, -1e8, 1.0);
        assert!((r - 1e-8).abs() / 1e-8 < 1e-12);
        // c = 0 gives an exact zero root.
        assert_eq!(smaller_quadratic_root(2.0, -5.0, 0.0), 0.0);
    }

    #[test]
    fn compensated_mean() {
        let values = vec![1.0, 1e16, 1.0, -1e16];
        let mut s = CompensatedSum::default();
        for v in &values {
            s.add(*v);
        }
        assert_eq!(s.total(), 2.0);

        let (mean, se) = mean_and_stderr(&[2.0, 4.0, 6.0]);
        assert_eq!(mean, 4.0);
        assert!((se - (4.0f64 / 3.0).sqrt()).abs() < 1e-14);
    }
}
