//! Background subtraction, nonlinear least-squares fits and the closed-form
//! relations used to interpret echo experiments.
//!
//! The fits use a damped Gauss-Newton (Levenberg) iteration with the
//! linearized covariance at the optimum for 1-sigma uncertainties.

use crate::error::{CoreError, Result};
use crate::scalar::constants::{bohr_magneton, planck};
use crate::scalar::Scalar;
use std::io::{BufRead, Write};

/// A sampled 1-D data series, x strictly increasing.
#[derive(Clone, Debug, PartialEq)]
pub struct Series<T: Scalar> {
    pub x: Vec<T>,
    pub y: Vec<T>,
    pub sigma: Option<Vec<T>>,
}

impl<T: Scalar> Series<T> {
    pub fn new(x: Vec<T>, y: Vec<T>, sigma: Option<Vec<T>>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(CoreError::InvalidArgument("x and y lengths differ".into()));
        }
        if let Some(s) = &sigma {
            if s.len() != x.len() {
                return Err(CoreError::InvalidArgument("sigma length differs".into()));
            }
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(CoreError::InvalidArgument("x must be strictly increasing".into()));
        }
        Ok(Series { x, y, sigma })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Read `x,y[,sigma]` CSV with a header row.
    pub fn from_csv<R: BufRead>(reader: R) -> Result<Self> {
        let mut x = Vec::new();
        let mut y = Vec::new();
        let mut sigma: Vec<T> = Vec::new();
        let mut has_sigma = false;
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if idx == 0 {
                let n = line.split(',').count();
                if n < 2 {
                    return Err(CoreError::InvalidArgument(
                        "CSV needs at least two columns (x,y)".into(),
                    ));
                }
                has_sigma = n >= 3;
                continue;
            }
            let mut it = line.split(',');
            let parse = |tok: Option<&str>| -> Result<T> {
                tok.ok_or_else(|| CoreError::InvalidArgument(format!("line {}: short row", idx + 1)))?
                    .trim()
                    .parse::<f64>()
                    .map(T::of)
                    .map_err(|_| CoreError::InvalidArgument(format!("line {}: bad number", idx + 1)))
            };
            x.push(parse(it.next())?);
            y.push(parse(it.next())?);
            if has_sigma {
                sigma.push(parse(it.next())?);
            }
        }
        Series::new(x, y, if has_sigma { Some(sigma) } else { None })
    }

    pub fn to_csv<W: Write>(&self, out: &mut W, x_name: &str, y_name: &str) -> Result<()> {
        if self.sigma.is_some() {
            writeln!(out, "{x_name},{y_name},sigma")?;
        } else {
            writeln!(out, "{x_name},{y_name}")?;
        }
        for i in 0..self.len() {
            match &self.sigma {
                Some(s) => writeln!(out, "{:e},{:e},{:e}", self.x[i], self.y[i], s[i])?,
                None => writeln!(out, "{:e},{:e}", self.x[i], self.y[i])?,
            }
        }
        Ok(())
    }
}

/// Least-squares line over the x-range tail, subtracted from all points.
///
/// `baseline_fraction` is the trailing fraction of the x range used for the
/// line fit (0.25 reproduces the usual "last quarter" convention).
pub fn subtract_linear_background<T: Scalar>(
    s: &Series<T>,
    baseline_fraction: T,
) -> Result<Series<T>> {
    if s.len() < 2 {
        return Err(CoreError::InvalidArgument("need at least two points".into()));
    }
    let x0 = *s.x.first().unwrap();
    let x1 = *s.x.last().unwrap();
    if !(x1 > x0) {
        return Err(CoreError::InvalidArgument("degenerate x range".into()));
    }
    let start = x1 - baseline_fraction * (x1 - x0);
    let pts: Vec<(T, T)> = s
        .x
        .iter()
        .zip(&s.y)
        .filter(|(x, _)| **x >= start)
        .map(|(x, y)| (*x, *y))
        .collect();
    if pts.len() < 2 {
        return Err(CoreError::InvalidArgument("baseline region too small".into()));
    }
    let n = T::of(pts.len() as f64);
    let sx: T = pts.iter().map(|(x, _)| *x).sum();
    let sy: T = pts.iter().map(|(_, y)| *y).sum();
    let sxx: T = pts.iter().map(|(x, _)| *x * *x).sum();
    let sxy: T = pts.iter().map(|(x, y)| *x * *y).sum();
    let den = n * sxx - sx * sx;
    if den.abs() < T::of(1e-300) {
        return Err(CoreError::InvalidArgument("degenerate baseline x values".into()));
    }
    let slope = (n * sxy - sx * sy) / den;
    let intercept = (sy - slope * sx) / n;
    let y = s
        .x
        .iter()
        .zip(&s.y)
        .map(|(x, y)| *y - (slope * *x + intercept))
        .collect();
    Series::new(s.x.clone(), y, s.sigma.clone())
}

/// Fit termination status.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FitStatus {
    Converged,
    MaxIterations,
    SingularJacobian,
}

/// One fitted parameter with its 1-sigma uncertainty.
#[derive(Clone, Debug, PartialEq)]
pub struct FitParam<T: Scalar> {
    pub name: &'static str,
    pub value: T,
    pub sigma: T,
}

/// Result of a nonlinear least-squares fit.
#[derive(Clone, Debug, PartialEq)]
pub struct FitResult<T: Scalar> {
    pub params: Vec<FitParam<T>>,
    pub residual_norm: T,
    pub converged: bool,
    pub status: FitStatus,
    pub iterations: usize,
}

impl<T: Scalar> FitResult<T> {
    pub fn get(&self, name: &str) -> Option<T> {
        self.params.iter().find(|p| p.name == name).map(|p| p.value)
    }

    pub fn get_sigma(&self, name: &str) -> Option<T> {
        self.params.iter().find(|p| p.name == name).map(|p| p.sigma)
    }

    /// Flat key=value block.
    pub fn to_key_value(&self) -> String {
        let mut s = String::new();
        for p in &self.params {
            s.push_str(&format!("{} = {:e}\n", p.name, p.value));
            s.push_str(&format!("{}_sigma = {:e}\n", p.name, p.sigma));
        }
        s.push_str(&format!("residual_norm = {:e}\n", self.residual_norm));
        s.push_str(&format!("converged = {}\n", self.converged));
        s.push_str(&format!("iterations = {}\n", self.iterations));
        s
    }

    /// Machine-readable CSV header + row.
    pub fn to_csv(&self) -> String {
        let mut header = String::new();
        let mut row = String::new();
        for p in &self.params {
            header.push_str(&format!("{},{}_sigma,", p.name, p.name));
            row.push_str(&format!("{:e},{:e},", p.value, p.sigma));
        }
        header.push_str("residual_norm,converged,iterations");
        row.push_str(&format!("{:e},{},{}", self.residual_norm, self.converged, self.iterations));
        format!("{header}\n{row}\n")
    }
}

/// Damped Gauss-Newton engine for a model with P parameters.
/// `eval(params, x) -> (value, gradient)`.
fn levenberg_fit<T: Scalar, const P: usize>(
    s: &Series<T>,
    mut params: [T; P],
    names: [&'static str; P],
    accept: impl Fn(&[T; P]) -> bool,
    eval: impl Fn(&[T; P], T) -> (T, [T; P]),
) -> Result<FitResult<T>> {
    let n = s.len();
    let weights: Vec<T> = match &s.sigma {
        Some(sig) => sig.iter().map(|v| T::one() / (*v * *v)).collect(),
        None => vec![T::one(); n],
    };
    let ssr = |p: &[T; P]| -> T {
        s.x.iter()
            .zip(&s.y)
            .zip(&weights)
            .map(|((x, y), w)| {
                let (m, _) = eval(p, *x);
                let r = *y - m;
                *w * r * r
            })
            .sum()
    };

    let mut lambda = T::of(1e-3);
    let mut cost = ssr(&params);
    let mut status = FitStatus::MaxIterations;
    let mut iterations = 0usize;
    for it in 0..200 {
        iterations = it + 1;
        // normal equations
        let mut jtj = [[T::zero(); P]; P];
        let mut jtr = [T::zero(); P];
        for ((x, y), w) in s.x.iter().zip(&s.y).zip(&weights) {
            let (m, g) = eval(&params, *x);
            let r = *y - m;
            for a in 0..P {
                jtr[a] = jtr[a] + *w * g[a] * r;
                for b in 0..P {
                    jtj[a][b] = jtj[a][b] + *w * g[a] * g[b];
                }
            }
        }
        // Levenberg damping on the diagonal
        let mut step = [T::zero(); P];
        let solved = solve_small::<T, P>(&mut {
            let mut m = jtj;
            for a in 0..P {
                m[a][a] = m[a][a] * (T::one() + lambda);
            }
            m
        }, &jtr, &mut step);
        if !solved {
            status = FitStatus::SingularJacobian;
            break;
        }
        let mut trial = params;
        for a in 0..P {
            trial[a] = trial[a] + step[a];
        }
        let trial_ok = accept(&trial);
        let trial_cost = if trial_ok { ssr(&trial) } else { T::infinity() };
        if trial_ok && trial_cost <= cost {
            // relative step size for convergence
            let pn: T = params.iter().map(|v| *v * *v).sum::<T>().sqrt();
            let sn: T = step.iter().map(|v| *v * *v).sum::<T>().sqrt();
            params = trial;
            cost = trial_cost;
            lambda = (lambda * T::of(0.1)).max(T::of(1e-14));
            if sn <= T::of(1e-10) * (pn + T::of(1e-30)) {
                status = FitStatus::Converged;
                break;
            }
        } else {
            lambda = lambda * T::of(10.0);
            if lambda > T::of(1e14) {
                status = FitStatus::MaxIterations;
                break;
            }
        }
    }

    // linearized covariance at the optimum, residual-scaled
    let mut jtj = [[T::zero(); P]; P];
    for (x, w) in s.x.iter().zip(&weights) {
        let (_, g) = eval(&params, *x);
        for a in 0..P {
            for b in 0..P {
                jtj[a][b] = jtj[a][b] + *w * g[a] * g[b];
            }
        }
    }
    let dof = if n > P { T::of((n - P) as f64) } else { T::one() };
    let s2 = cost / dof;
    let mut sigmas = [T::zero(); P];
    // invert via P solves against unit vectors
    for a in 0..P {
        let mut e = [T::zero(); P];
        e[a] = T::one();
        let mut col = [T::zero(); P];
        if solve_small::<T, P>(&mut jtj.clone(), &e, &mut col) {
            let var = col[a] * s2;
            sigmas[a] = if var > T::zero() { var.sqrt() } else { T::zero() };
        }
    }

    Ok(FitResult {
        params: (0..P)
            .map(|a| FitParam {
                name: names[a],
                value: params[a],
                sigma: sigmas[a],
            })
            .collect(),
        residual_norm: cost.sqrt(),
        converged: status == FitStatus::Converged,
        status,
        iterations,
    })
}

fn solve_small<T: Scalar, const P: usize>(m: &mut [[T; P]; P], rhs: &[T; P], out: &mut [T; P]) -> bool {
    let mut b = *rhs;
    for col in 0..P {
        let mut piv = col;
        for row in (col + 1)..P {
            if m[row][col].abs() > m[piv][col].abs() {
                piv = row;
            }
        }
        if m[piv][col].abs() < T::of(1e-300) {
            return false;
        }
        m.swap(piv, col);
        b.swap(piv, col);
        for row in (col + 1)..P {
            let f = m[row][col] / m[col][col];
            for j in col..P {
                m[row][j] = m[row][j] - f * m[col][j];
            }
            b[row] = b[row] - f * b[col];
        }
    }
    for col in (0..P).rev() {
        let mut s = b[col];
        for k in (col + 1)..P {
            s = s - m[col][k] * out[k];
        }
        out[col] = s / m[col][col];
    }
    true
}

/// Fit `A exp(-x/tau) + c`.
///
/// Default initialization: `c` from the series tail, then a log-linear
/// regression of |y - c| for `A` and `tau`. Deterministic for a given init.
pub fn fit_monoexp<T: Scalar>(s: &Series<T>, init: Option<[T; 3]>) -> Result<FitResult<T>> {
    if s.len() < 4 {
        return Err(CoreError::Fit("mono-exponential fit needs >= 4 points".into()));
    }
    let init = match init {
        Some(i) => i,
        None => {
            let n = s.len();
            let tail = n.max(4) / 4;
            let c0: T = s.y[n - tail..].iter().copied().sum::<T>() / T::of(tail as f64);
            let z0 = s.y[0] - c0;
            let sign = if z0 >= T::zero() { T::one() } else { -T::one() };
            // log-linear regression on usable points
            let mut sx = T::zero();
            let mut sy = T::zero();
            let mut sxx = T::zero();
            let mut sxy = T::zero();
            let mut m = 0usize;
            let floor = z0.abs() * T::of(0.02);
            for (x, y) in s.x.iter().zip(&s.y) {
                let z = (*y - c0) * sign;
                if z > floor && z > T::zero() {
                    let ly = z.ln();
                    sx = sx + *x;
                    sy = sy + ly;
                    sxx = sxx + *x * *x;
                    sxy = sxy + *x * ly;
                    m += 1;
                }
            }
            if m >= 3 {
                let den = T::of(m as f64) * sxx - sx * sx;
                let slope = (T::of(m as f64) * sxy - sx * sy) / den;
                let icpt = (sy - slope * sx) / T::of(m as f64);
                let tau0 = if slope < T::zero() {
                    -T::one() / slope
                } else {
                    (*s.x.last().unwrap() - s.x[0]) * T::of(10.0)
                };
                [sign * icpt.exp(), tau0, c0]
            } else {
                [z0, (*s.x.last().unwrap() - s.x[0]) / T::of(3.0), c0]
            }
        }
    };
    levenberg_fit(
        s,
        init,
        ["A", "tau", "c"],
        |p| p[1] > T::zero() && p.iter().all(|v| v.is_finite()),
        |p, x| {
            let e = (-x / p[1]).exp();
            let val = p[0] * e + p[2];
            let da = e;
            let dtau = p[0] * x * e / (p[1] * p[1]);
            (val, [da, dtau, T::one()])
        },
    )
}

/// Fit `amp exp(-4 ln2 (x-center)^2 / fwhm^2) + c`, moment-initialized.
pub fn fit_gaussian<T: Scalar>(s: &Series<T>) -> Result<FitResult<T>> {
    if s.len() < 5 {
        return Err(CoreError::Fit("gaussian fit needs >= 5 points".into()));
    }
    let c0 = s.y.iter().copied().fold(T::infinity(), |a, b| a.min(b));
    let mut wsum = T::zero();
    let mut xsum = T::zero();
    for (x, y) in s.x.iter().zip(&s.y) {
        let w = (*y - c0).max(T::zero());
        wsum = wsum + w;
        xsum = xsum + w * *x;
    }
    if wsum <= T::zero() {
        return Err(CoreError::Fit("flat series, no peak to fit".into()));
    }
    let center0 = xsum / wsum;
    let mut var = T::zero();
    for (x, y) in s.x.iter().zip(&s.y) {
        let w = (*y - c0).max(T::zero());
        var = var + w * (*x - center0) * (*x - center0);
    }
    var = var / wsum;
    let fwhm0 = T::of((8.0 * 2.0_f64.ln()).sqrt()) * var.sqrt();
    let amp0 = s.y.iter().copied().fold(T::neg_infinity(), |a, b| a.max(b)) - c0;
    let ln2x4 = T::of(4.0 * 2.0_f64.ln());
    levenberg_fit(
        s,
        [center0, fwhm0, amp0, c0],
        ["center", "fwhm", "amp", "c"],
        |p| p[1] > T::zero() && p.iter().all(|v| v.is_finite()),
        move |p, x| {
            let u = (x - p[0]) / p[1];
            let e = (-ln2x4 * u * u).exp();
            let val = p[2] * e + p[3];
            let dcenter = p[2] * e * T::two() * ln2x4 * u / p[1];
            let dfwhm = p[2] * e * T::two() * ln2x4 * u * u / p[1];
            (val, [dcenter, dfwhm, e, T::one()])
        },
    )
}

/// Temporal echo FWHM predicted from the inhomogeneous Gaussian linewidth:
/// `2 h / (g mu_B delta_b)`.
pub fn echo_width_from_linewidth<T: Scalar>(delta_b: T, g: T) -> Result<T> {
    if !(delta_b > T::zero()) || !(g > T::zero()) {
        return Err(CoreError::InvalidArgument(
            "echo_width_from_linewidth needs positive arguments".into(),
        ));
    }
    Ok(T::two() * planck::<T>() / (g * bohr_magneton::<T>() * delta_b))
}

/// Combined echo time constant from independent channels:
/// `1 / (1/t2 + r_s/4)`. Pass `T::infinity()` to disable the T2 channel.
pub fn tau_echo_combined<T: Scalar>(t2: T, r_s: T) -> Result<T> {
    if !(t2 > T::zero()) || r_s < T::zero() {
        return Err(CoreError::InvalidArgument(
            "tau_echo_combined needs t2 > 0 and r_s >= 0".into(),
        ));
    }
    let rate = T::one() / t2 + r_s / T::of(4.0);
    Ok(T::one() / rate)
}

/// Interface-noise decoherence estimate with its density extrapolation flag.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct T2Estimate<T: Scalar> {
    /// Estimated T2 in seconds.
    pub t2: T,
    /// True when the interface spin density differs from the 1e11 cm^-2 the
    /// formula was stated for, so the 1/sigma scaling is an extrapolation.
    pub extrapolated: bool,
}

/// T2 from donor depth and interface spin density:
/// `4e-8 s x (d/nm)^2 x (1e11 cm^-2 / sigma)`.
pub fn t2_interface<T: Scalar>(d_nm: T, sigma_cm2: T) -> Result<T2Estimate<T>> {
    if !(d_nm > T::zero()) || !(sigma_cm2 > T::zero()) {
        return Err(CoreError::InvalidArgument(
            "t2_interface needs positive depth and density".into(),
        ));
    }
    let reference = T::of(1e11);
    let t2 = T::of(4e-8) * d_nm * d_nm * (reference / sigma_cm2);
    let extrapolated = ((sigma_cm2 - reference) / reference).abs() > T::of(1e-6);
    Ok(T2Estimate { t2, extrapolated })
}
