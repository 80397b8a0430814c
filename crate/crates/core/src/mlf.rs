//! One-parameter Mittag-Leffler function `E_β(z) = Σ_j z^j / Γ(βj + 1)` on the
//! real line.
//!
//! Every fractional operator in this crate uses the kernel
//! `E_β(−μ·d^β)` with a nonnegative displacement `d`, so only real arguments
//! are supported. The series is summed directly with Neumaier compensation.
//! Powers `z^j` are carried in double-double precision so that each term is
//! accurate to a couple of ulps before it reaches the accumulator.

use crate::error::{Error, Result};

/// Truncation controls for [`mittag_leffler`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MlEvalOptions {
    /// Summation stops once a term's magnitude falls below this value.
    pub abs_tol: f64,
    pub max_terms: usize,
}

impl Default for MlEvalOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-15,
            max_terms: 400,
        }
    }
}

impl MlEvalOptions {
    pub fn new(abs_tol: f64, max_terms: usize) -> Result<Self> {
        if !(abs_tol > 0.0) || !abs_tol.is_finite() {
            return Err(Error::Domain(format!("abs_tol must be positive, got {abs_tol}")));
        }
        if max_terms == 0 {
            return Err(Error::Domain("max_terms must be at least 1".into()));
        }
        Ok(Self { abs_tol, max_terms })
    }
}

/// Value plus summation diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MlEvaluation {
    pub value: f64,
    pub terms_used: usize,
    /// Largest term magnitude seen during summation.
    pub max_term: f64,
    /// Set when `max_term > 1e8 · |value|`: the alternating series lost
    /// roughly eight or more digits to cancellation.
    pub precision_warning: bool,
}

/// Ratio of largest intermediate term to result above which a precision
/// warning is raised.
pub const CANCELLATION_WARNING_RATIO: f64 = 1e8;

/// `E_β(z)` for real `z`.
pub fn mittag_leffler(beta: f64, z: f64, opts: MlEvalOptions) -> Result<f64> {
    mittag_leffler_eval(beta, z, opts).map(|e| e.value)
}

/// `E_β(z)` with diagnostics.
pub fn mittag_leffler_eval(beta: f64, z: f64, opts: MlEvalOptions) -> Result<MlEvaluation> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::Domain(format!("Mittag-Leffler parameter beta must be > 0, got {beta}")));
    }
    if !z.is_finite() {
        return Err(Error::Domain(format!("Mittag-Leffler argument must be finite, got {z}")));
    }
    if z == 0.0 {
        return Ok(MlEvaluation {
            value: 1.0,
            terms_used: 1,
            max_term: 1.0,
            precision_warning: false,
        });
    }

    let mut acc = Neumaier::default();
    let mut power = DoubleDouble::ONE;
    let mut log_abs_power_step = z.abs().ln();
    if log_abs_power_step == f64::NEG_INFINITY {
        log_abs_power_step = -f64::MAX;
    }
    let mut max_term: f64 = 0.0;
    let mut last = f64::INFINITY;

    for j in 0..opts.max_terms {
        let term = if j == 0 {
            1.0
        } else {
            power = power.mul_f64(z);
            series_term(power, z, beta, j, log_abs_power_step)
        };
        acc.add(term);
        max_term = max_term.max(term.abs());
        last = term.abs();
        if last < opts.abs_tol {
            let value = acc.sum();
            return Ok(MlEvaluation {
                value,
                terms_used: j + 1,
                max_term,
                precision_warning: max_term > CANCELLATION_WARNING_RATIO * value.abs(),
            });
        }
    }
    Err(Error::NonConvergence {
        terms: opts.max_terms,
        last_term: last,
    })
}

/// The operator kernel `E_β(−μ·d^β)` for a displacement `d ≥ 0`.
pub fn ml_kernel(beta: f64, mu: f64, d: f64, opts: MlEvalOptions) -> Result<f64> {
    if !(d >= 0.0) {
        return Err(Error::Domain(format!("kernel displacement must be >= 0, got {d}")));
    }
    if !(mu >= 0.0) {
        return Err(Error::Domain(format!("kernel rate mu must be >= 0, got {mu}")));
    }
    if d == 0.0 || mu == 0.0 {
        return mittag_leffler(beta, 0.0, opts);
    }
    mittag_leffler(beta, -mu * d.powf(beta), opts)
}

/// `z^j / Γ(βj + 1)`, direct when the pieces are representable and through
/// `exp(j·ln|z| − lnΓ(βj + 1))` otherwise.
fn series_term(power: DoubleDouble, z: f64, beta: f64, j: usize, ln_abs_z: f64) -> f64 {
    let arg = beta * j as f64 + 1.0;
    if power.hi.is_finite() && power.hi != 0.0 && arg < 171.0 {
        let g = libm::tgamma(arg);
        return power.hi / g + power.lo / g;
    }
    let log_mag = j as f64 * ln_abs_z - libm::lgamma(arg);
    let sign = if z < 0.0 && j % 2 == 1 { -1.0 } else { 1.0 };
    sign * log_mag.exp()
}

#[derive(Debug, Default, Clone, Copy)]
struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn sum(&self) -> f64 {
        self.sum + self.comp
    }
}

#[derive(Debug, Clone, Copy)]
struct DoubleDouble {
    hi: f64,
    lo: f64,
}

impl DoubleDouble {
    const ONE: Self = Self { hi: 1.0, lo: 0.0 };

    fn mul_f64(self, x: f64) -> Self {
        let p = self.hi * x;
        if !p.is_finite() {
            return Self { hi: p, lo: 0.0 };
        }
        let err = self.hi.mul_add(x, -p);
        let lo = err + self.lo * x;
        let hi = p + lo;
        Self {
            hi,
            lo: lo - (hi - p),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> MlEvalOptions {
        MlEvalOptions::default()
    }

    #[test]
    fn zero_argument_is_one() {
        for beta in [0.1, 0.5, 0.8, 1.0, 2.5] {
            assert_eq!(mittag_leffler(beta, 0.0, opts()).unwrap(), 1.0);
        }
    }

    #[test]
    fn exponential_case() {
        let v = mittag_leffler(1.0, 1.0, opts()).unwrap();
        assert!((v - std::f64::consts::E).abs() <= 1e-12);
    }

    #[test]
    fn half_order_matches_erfc_closed_form() {
        // E_{1/2}(z) = exp(z^2) erfc(-z); values from 40-digit arithmetic.
        let v = mittag_leffler(0.5, 1.0, opts()).unwrap();
        assert!((v - 5.0089800807622834).abs() <= 1e-10, "{v}");
        let v = mittag_leffler(0.5, -1.0, opts()).unwrap();
        assert!((v - 0.42758357615580700).abs() <= 1e-10, "{v}");
    }

    #[test]
    fn kernel_cases() {
        assert_eq!(ml_kernel(0.8, 123.0, 0.0, opts()).unwrap(), 1.0);
        let v = ml_kernel(1.0, 1.0, 1.0, opts()).unwrap();
        assert!((v - (-1.0f64).exp()).abs() <= 1e-12);
        let direct = mittag_leffler(0.5, -1.0, opts()).unwrap();
        let via_kernel = ml_kernel(0.5, 2.0, 0.25, opts()).unwrap();
        assert!((direct - via_kernel).abs() <= 1e-15);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(matches!(mittag_leffler(0.0, 1.0, opts()), Err(Error::Domain(_))));
        assert!(matches!(mittag_leffler(-1.0, 1.0, opts()), Err(Error::Domain(_))));
        assert!(matches!(mittag_leffler(1.0, f64::NAN, opts()), Err(Error::Domain(_))));
        assert!(MlEvalOptions::new(0.0, 10).is_err());
        assert!(MlEvalOptions::new(1e-10, 0).is_err());
    }

    #[test]
    fn reports_non_convergence() {
        let o = MlEvalOptions::new(1e-15, 5).unwrap();
        match mittag_leffler(1.0, 10.0, o) {
            Err(Error::NonConvergence { terms, .. }) => assert_eq!(terms, 5),
            other => panic!("expected NonConvergence, got {other:?}"),
        }
    }

    #[test]
    fn flags_cancellation() {
        let e = mittag_leffler_eval(1.0, -25.0, opts()).unwrap();
        assert!(e.precision_warning);
        let e = mittag_leffler_eval(1.0, -1.0, opts()).unwrap();
        assert!(!e.precision_warning);
    }

    #[test]
    fn exponential_and_cosine_lattices() {
        for k in 0..=100 {
            let z = -10.0 + 0.2 * k as f64;
            let v = mittag_leffler(1.0, z, opts()).unwrap();
            assert!((v - z.exp()).abs() <= 1e-11 * z.exp().max(1.0), "z={z}: {v} vs {}", z.exp());
        }
        for k in 0..=50 {
            let x = 0.1 * k as f64;
            let v = mittag_leffler(2.0, -x * x, opts()).unwrap();
            assert!((v - x.cos()).abs() <= 1e-10, "x={x}: {v} vs {}", x.cos());
        }
    }
}
