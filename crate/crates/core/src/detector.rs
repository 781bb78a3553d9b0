//! Synthetic photocurrent transient and boxcar charge.
//!
//! The measured response to a pair-symmetry deviation `q` is modeled as
//! `I(t) = gain * q * K(t)` with
//!
//! ```text
//! K(t) = (e^{-t/tau_fall} - e^{-t/tau_rise}) - beta (e^{-t/tau_slow} - e^{-t/tau_fall})
//! ```
//!
//! a fast rise, a slower fall that overshoots zero, and a very slow
//! recovery. The boxcar charge is the window integral of `K`, evaluated in
//! closed form, so `Q` is exactly linear in `q`.

use crate::error::{CoreError, Result};
use crate::scalar::Scalar;
use std::io::Write;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransientKernel<T: Scalar> {
    pub tau_rise: T,
    pub tau_fall: T,
    pub tau_slow: T,
    /// Overshoot weight beta of the slow recovery component.
    pub overshoot: T,
    /// Current per unit deviation, arbitrary units.
    pub gain: T,
}

impl<T: Scalar> Default for TransientKernel<T> {
    fn default() -> Self {
        TransientKernel {
            tau_rise: T::of(3e-6),
            tau_fall: T::of(11e-6),
            tau_slow: T::of(140e-6),
            overshoot: T::of(0.3),
            gain: T::one(),
        }
    }
}

impl<T: Scalar> TransientKernel<T> {
    pub fn validate(&self) -> Result<()> {
        if !(T::zero() < self.tau_rise && self.tau_rise < self.tau_fall && self.tau_fall < self.tau_slow)
        {
            return Err(CoreError::Config(
                "kernel needs 0 < tau_rise < tau_fall < tau_slow".into(),
            ));
        }
        if self.overshoot < T::zero() {
            return Err(CoreError::Config("overshoot must be non-negative".into()));
        }
        if !self.gain.is_finite() {
            return Err(CoreError::Config("gain must be finite".into()));
        }
        Ok(())
    }

    /// Dimensionless kernel K(t); K(0) = 0.
    pub fn value(&self, t: T) -> T {
        let e = |tau: T| (-t / tau).exp();
        (e(self.tau_fall) - e(self.tau_rise)) - self.overshoot * (e(self.tau_slow) - e(self.tau_fall))
    }

    /// Closed-form integral of K over [t_start, t_end].
    pub fn window_integral(&self, window: &BoxcarWindow<T>) -> T {
        // antiderivative of e^{-t/tau} is -tau e^{-t/tau}
        let anti = |t: T| {
            let term = |tau: T| -tau * (-t / tau).exp();
            (term(self.tau_fall) - term(self.tau_rise))
                - self.overshoot * (term(self.tau_slow) - term(self.tau_fall))
        };
        anti(window.t_end) - anti(window.t_start)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoxcarWindow<T: Scalar> {
    pub t_start: T,
    pub t_end: T,
}

impl<T: Scalar> Default for BoxcarWindow<T> {
    fn default() -> Self {
        BoxcarWindow {
            t_start: T::of(2e-6),
            t_end: T::of(22e-6),
        }
    }
}

impl<T: Scalar> BoxcarWindow<T> {
    pub fn validate(&self) -> Result<()> {
        if !(T::zero() <= self.t_start && self.t_start < self.t_end) {
            return Err(CoreError::Config(
                "boxcar window needs 0 <= t_start < t_end".into(),
            ));
        }
        Ok(())
    }
}

/// Synthetic current at time `t` after the sequence, arbitrary units.
pub fn transient<T: Scalar>(q: T, kernel: &TransientKernel<T>, t: T) -> Result<T> {
    kernel.validate()?;
    if t < T::zero() {
        return Err(CoreError::InvalidArgument("transient time must be >= 0".into()));
    }
    Ok(kernel.gain * q * kernel.value(t))
}

/// Boxcar charge Q = gain q Int K dt over the window (closed form).
pub fn boxcar_q<T: Scalar>(q: T, kernel: &TransientKernel<T>, window: &BoxcarWindow<T>) -> Result<T> {
    kernel.validate()?;
    window.validate()?;
    Ok(kernel.gain * q * kernel.window_integral(window))
}

/// Write a sampled transient as CSV with the mandatory header row.
pub fn write_transient_csv<T: Scalar, W: Write>(
    out: &mut W,
    q: T,
    kernel: &TransientKernel<T>,
    t_max: T,
    n_samples: usize,
) -> Result<()> {
    kernel.validate()?;
    writeln!(out, "time_s,current_au")?;
    for k in 0..n_samples {
        let t = t_max * T::of(k as f64) / T::of((n_samples - 1).max(1) as f64);
        let i = kernel.gain * q * kernel.value(t);
        writeln!(out, "{:e},{:e}", t, i)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_deviation_means_zero_signal() {
        let k = TransientKernel::<f64>::default();
        for t in [0.0, 1e-6, 5e-5] {
            assert_eq!(transient(0.0, &k, t).unwrap(), 0.0);
        }
        assert_eq!(boxcar_q(0.0, &k, &BoxcarWindow::default()).unwrap(), 0.0);
    }

    #[test]
    fn kernel_starts_at_zero() {
        let k = TransientKernel::<f64>::default();
        assert_eq!(k.value(0.0), 0.0);
    }

    #[test]
    fn kernel_has_single_positive_peak_then_negative_lobe() {
        let k = TransientKernel::<f64>::default();
        let n = 4000;
        let values: Vec<f64> = (0..n).map(|i| k.value(i as f64 * 200e-6 / n as f64)).collect();
        let imax = values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        let t_peak = imax as f64 * 200e-6 / n as f64;
        assert!(t_peak < 11e-6, "peak at {t_peak}");
        assert!(values[imax] > 0.0);
        // one sign change after the peak, then negative lobe
        let first_neg = values[imax..].iter().position(|v| *v < 0.0).unwrap() + imax;
        assert!(values[first_neg..].iter().take(500).all(|v| *v <= 0.0));
        // number of strict local maxima of the positive part is one
        let mut maxima = 0;
        for i in 1..first_neg - 1 {
            if values[i] > values[i - 1] && values[i] > values[i + 1] {
                maxima += 1;
            }
        }
        assert_eq!(maxima, 1);
    }

    #[test]
    fn linear_in_q() {
        let k = TransientKernel::<f64>::default();
        let w = BoxcarWindow::default();
        let q1 = boxcar_q(0.37, &k, &w).unwrap();
        let q2 = boxcar_q(0.74, &k, &w).unwrap();
        assert!((q2 - 2.0 * q1).abs() < 1e-15);
    }

    #[test]
    fn closed_form_matches_simpson_quadrature() {
        // independent oracle: composite Simpson with refinement
        fn simpson(k: &TransientKernel<f64>, a: f64, b: f64, n: usize) -> f64 {
            let h = (b - a) / n as f64;
            let mut s = k.value(a) + k.value(b);
            for i in 1..n {
                let c = if i % 2 == 1 { 4.0 } else { 2.0 };
                s += c * k.value(a + i as f64 * h);
            }
            s * h / 3.0
        }
        let mut rng_state = 888u64;
        let mut next = move || {
            // xorshift, deterministic parameter draws
            rng_state ^= rng_state << 13;
            rng_state ^= rng_state >> 7;
            rng_state ^= rng_state << 17;
            (rng_state % 10_000) as f64 / 10_000.0
        };
        for _ in 0..50 {
            let tau_rise = 0.5e-6 + 4e-6 * next();
            let tau_fall = tau_rise * (1.5 + 3.0 * next());
            let tau_slow = tau_fall * (3.0 + 20.0 * next());
            let k = TransientKernel {
                tau_rise,
                tau_fall,
                tau_slow,
                overshoot: next(),
                gain: 1.0,
            };
            let w = BoxcarWindow {
                t_start: 2e-6 * next(),
                t_end: 5e-6 + 30e-6 * next(),
            };
            let exact = k.window_integral(&w);
            let approx = simpson(&k, w.t_start, w.t_end, 1 << 14);
            assert!(
                (exact - approx).abs() <= 1e-9 * exact.abs().max(1e-12),
                "exact {exact} vs simpson {approx}"
            );
        }
    }

    #[test]
    fn rejects_bad_kernels() {
        let mut k = TransientKernel::<f64>::default();
        k.tau_fall = 1e-6; // below tau_rise
        assert!(k.validate().is_err());
        let w = BoxcarWindow { t_start: 5e-6, t_end: 2e-6 };
        assert!(w.validate().is_err());
    }

    #[test]
    fn transient_csv_has_header() {
        let mut buf = Vec::new();
        write_transient_csv(&mut buf, 1.0, &TransientKernel::<f64>::default(), 100e-6, 11).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("time_s,current_au\n"));
        assert_eq!(text.lines().count(), 12);
    }
}
