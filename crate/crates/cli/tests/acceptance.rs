//! Acceptance suite: one test per acceptance criterion, each printing a
//! single PASS/FAIL line with the measured values.
//!
//! Run with `cargo test -p pedmr-cli --test acceptance -- --nocapture`
//! (release or the default optimized test profile).

use num_complex::Complex64;
use pedmr_cli::experiments::delta_q_row;
use pedmr_core::analysis::{
    echo_width_from_linewidth, fit_monoexp, subtract_linear_background, t2_interface,
    tau_echo_combined, Series,
};
use pedmr_core::ensemble::{
    average_q, echo_decay_series, sweep_q, QuadratureScheme, QuadratureSpec,
    SpectralModel,
};
use pedmr_core::sequence::{self, compile, parse, DiagnosticCode, Event};
use pedmr_core::spin::PairParams;
use rayon::prelude::*;
use std::time::Instant;

fn report(n: u32, name: &str, pass: bool, detail: &str) {
    println!(
        "ACCEPTANCE {n:2} {name}: {} — {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
}

fn default_params() -> PairParams<f64> {
    PairParams {
        r_s: 2.3e6,
        r_t: 1.0 / 140e-6,
        ..Default::default()
    }
}

fn gh(points: usize) -> QuadratureSpec {
    QuadratureSpec {
        scheme: QuadratureScheme::GaussHermite,
        points_per_spin: points,
        seed: 0,
    }
}

fn mc(points: usize, seed: u64) -> QuadratureSpec {
    QuadratureSpec {
        scheme: QuadratureScheme::MonteCarlo,
        points_per_spin: points,
        seed,
    }
}

fn sign_alternations(vals: &[f64]) -> usize {
    let signs: Vec<f64> = vals
        .iter()
        .filter(|v| **v != 0.0)
        .map(|v| v.signum())
        .collect();
    signs.windows(2).filter(|w| w[0] != w[1]).count()
}

/// Interpolated full width at half depth of the most negative dip.
fn dip_position_and_fwhm(x: &[f64], dq: &[f64]) -> (f64, f64) {
    let imin = dq
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap()
        .0;
    let half = dq[imin] / 2.0;
    let mut left = f64::NAN;
    let mut right = f64::NAN;
    for k in (1..=imin).rev() {
        if dq[k] <= half && half < dq[k - 1] {
            left = x[k - 1] + (x[k] - x[k - 1]) * (half - dq[k - 1]) / (dq[k] - dq[k - 1]);
            break;
        }
    }
    for k in imin..dq.len() - 1 {
        if dq[k] <= half && half < dq[k + 1] {
            right = x[k] + (x[k + 1] - x[k]) * (half - dq[k]) / (dq[k + 1] - dq[k]);
            break;
        }
    }
    (x[imin], right - left)
}

fn map_rows(
    model: &SpectralModel<f64>,
    quad: &QuadratureSpec,
    params: &PairParams<f64>,
    fields: &[f64],
    tau1: f64,
) -> (Vec<f64>, Vec<Vec<f64>>) {
    let w1 = model.rabi_angular_frequency();
    let seq = compile::<f64>(
        &parse(&sequence::cp_echo(tau1, 0.0, 900e-9, 10e-9)).unwrap(),
        w1,
    )
    .unwrap();
    let axis = seq.sweep_axes[0].values.clone();
    let rows: Vec<Vec<f64>> = fields
        .par_iter()
        .map(|b0| {
            let sw = sweep_q(model, quad, &seq, params, *b0, 0.0).unwrap();
            delta_q_row(&sw.axis, &sw.q, 500e-9)
        })
        .collect();
    (axis, rows)
}

#[test]
fn criterion_01_pulse_calibration() {
    let start = Instant::now();
    let model = SpectralModel::<f64>::default();
    let w1 = model.rabi_angular_frequency();
    let t90 = std::f64::consts::PI / 2.0 / w1;
    let pass = (28e-9..=33e-9).contains(&t90) && start.elapsed().as_secs_f64() < 1.0;
    report(
        1,
        "pulse calibration",
        pass,
        &format!("pi/2 duration {:.2} ns (accept [28, 33])", t90 * 1e9),
    );
    assert!(pass);
}

#[test]
fn criterion_02_resonance_fields() {
    let start = Instant::now();
    let model = SpectralModel::<f64>::default();
    let quad = gh(64);
    let w1 = model.rabi_angular_frequency();
    let t180 = std::f64::consts::PI / w1;
    let pulse = [Event::Pulse {
        angle: std::f64::consts::PI,
        phase: 0.0,
        duration: t180,
    }];
    let params = default_params();
    let n = 81;
    let fields: Vec<f64> = (0..n).map(|k| 0.345 + k as f64 * 1e-4).collect();
    let qs: Vec<f64> = fields
        .par_iter()
        .map(|b0| average_q(&model, &quad, &pulse, &params, *b0).unwrap())
        .collect();
    let qmax = qs.iter().cloned().fold(f64::MIN, f64::max);
    let peaks: Vec<f64> = (1..n - 1)
        .filter(|&i| qs[i] > qs[i - 1] && qs[i] > qs[i + 1] && qs[i] > 0.25 * qmax)
        .map(|i| fields[i])
        .collect();
    let near = |target: f64| {
        peaks
            .iter()
            .map(|p| (p - target).abs())
            .fold(f64::MAX, f64::min)
    };
    let d_low = near(0.3470);
    let d_high = near(0.3512);
    let merged = peaks.iter().any(|p| (0.3475..=0.3483).contains(p));
    let elapsed = start.elapsed().as_secs_f64();
    let pass = d_low <= 0.15e-3 && d_high <= 0.15e-3 && merged && elapsed < 60.0;
    report(
        2,
        "resonance fields",
        pass,
        &format!(
            "peaks at {:?} mT; P deviations {:.2}/{:.2} mT, merged Pb0 {}; {:.1} s",
            peaks.iter().map(|p| (p * 1e6).round() / 1e3).collect::<Vec<_>>(),
            d_low * 1e3,
            d_high * 1e3,
            merged,
            elapsed
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_03_echo_position_and_width() {
    let start = Instant::now();
    let model = SpectralModel::<f64>::default();
    let params = default_params();
    let quad = gh(256);
    let n = 81;
    let fields: Vec<f64> = (0..n).map(|k| 0.345 + k as f64 * 1e-4).collect();
    let (axis, rows) = map_rows(&model, &quad, &params, &fields, 200e-9);
    let elapsed = start.elapsed().as_secs_f64();
    let row_idx = fields
        .iter()
        .position(|b| (*b - 0.3512).abs() < 0.5e-4)
        .unwrap();
    let dq = &rows[row_idx];
    let (pos, fwhm) = dip_position_and_fwhm(&axis, dq);
    let depth = dq.iter().cloned().fold(f64::MAX, f64::min);
    let pos_ok = depth < 0.0 && (pos - 200e-9).abs() <= 10e-9 + 1e-15;
    let width_ok = (120e-9..=190e-9).contains(&fwhm);
    let runtime_ok = elapsed < 600.0;
    let pass = pos_ok && width_ok && runtime_ok;
    report(
        3,
        "echo position and width",
        pass,
        &format!(
            "dip at {:.0} ns (depth {:.4}), FWHM {:.1} ns (accept [120, 190]), map in {:.0} s",
            pos * 1e9,
            depth,
            fwhm * 1e9,
            elapsed
        ),
    );
    assert!(pos_ok, "dip position {pos:e} not at 200 ns +- one step");
    assert!(runtime_ok, "map runtime {elapsed} s exceeds 10 min");
    assert!(
        width_ok,
        "dip FWHM {:.1} ns outside [120, 190] ns",
        fwhm * 1e9
    );
}

#[test]
fn criterion_04_echo_amplitude_equivalence() {
    // identical dissipation settings (the config defaults) for both the
    // echo and the 2 pi rotation; tau1 = tau2 = 150 ns is the shortest
    // evolution clear of the Ramsey zone, where the ideal equality argument
    // applies with the least recombination loss.
    let model = SpectralModel::<f64>::default();
    let params = default_params();
    let quad = mc(256, 11);
    let w1 = model.rabi_angular_frequency();
    let b0 = model.high_field_donor_line().unwrap();
    let tau = 150e-9;
    let seq = compile::<f64>(
        &parse(&sequence::cp_echo(tau, tau, tau + 10e-9, 10e-9)).unwrap(),
        w1,
    )
    .unwrap();
    let q_echo = sweep_q(&model, &quad, &seq, &params, b0, 0.0).unwrap().q[0];
    let t90 = std::f64::consts::PI / 2.0 / w1;
    let two_pi_pulse = [Event::Pulse {
        angle: 2.0 * std::f64::consts::PI,
        phase: 0.0,
        duration: 4.0 * t90,
    }];
    let q_2pi = average_q(&model, &quad, &two_pi_pulse, &params, b0).unwrap();
    let ratio = q_echo.abs() / q_2pi.abs();
    let pass = (0.9..=1.1).contains(&ratio);
    report(
        4,
        "echo amplitude equivalence",
        pass,
        &format!("|Q(echo)| / |Q(2pi)| = {ratio:.3} (accept [0.9, 1.1])"),
    );
    assert!(pass);
}

#[test]
fn criterion_05_echo_decay() {
    let start = Instant::now();
    let model = SpectralModel::<f64>::default();
    let params = default_params(); // gamma_phi = 0, r_s = 2.3e6
    let quad = mc(128, 0);
    let b0 = model.high_field_donor_line().unwrap();
    let n = 48;
    let step = (7.0e-6 - 0.3e-6) / (n - 1) as f64;
    let taus: Vec<f64> = (0..n).map(|k| 0.3e-6 + k as f64 * step).collect();
    let ds = echo_decay_series(&model, &quad, &taus, &params, b0, 0.0).unwrap();
    let dq: Vec<f64> = ds.q.iter().zip(&ds.q_ref).map(|(q, r)| q - r).collect();
    let series = Series::new(ds.total.clone(), dq, None).unwrap();
    let cleaned = subtract_linear_background(&series, 0.25).unwrap();
    let fit = fit_monoexp(&cleaned, None).unwrap();
    let tau = fit.get("tau").unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let pass = fit.converged && (1.56e-6..=1.91e-6).contains(&tau) && elapsed < 300.0;
    report(
        5,
        "echo decay",
        pass,
        &format!(
            "fitted tau_echo {:.3} us (accept [1.56, 1.91]; 4/r_S = 1.739), {:.0} s",
            tau * 1e6,
            elapsed
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_06_matthiessen_property() {
    let model = SpectralModel::<f64>::default();
    let b0 = model.high_field_donor_line().unwrap();
    let boxes: Vec<(f64, f64)> = [2e-6, 5e-6, 20e-6]
        .iter()
        .flat_map(|t2| [0.0, 1e6, 2.3e6].iter().map(move |rs| (*t2, *rs)))
        .collect();
    let results: Vec<(f64, f64, f64, f64)> = boxes
        .par_iter()
        .map(|(t2, rs)| {
            let gamma_phi = 1.0 / t2;
            let want_rate = gamma_phi + rs / 4.0;
            let texp = 1.0 / want_rate;
            let tau_max = (3.0 * texp).clamp(2.5e-6, 60e-6);
            let n = 36;
            let step = (tau_max - 0.3e-6) / (n - 1) as f64;
            let taus: Vec<f64> = (0..n).map(|k| 0.3e-6 + k as f64 * step).collect();
            let params = PairParams {
                r_s: *rs,
                r_t: 0.0,
                gamma_phi,
                ..Default::default()
            };
            let ds = echo_decay_series(&model, &mc(128, 0), &taus, &params, b0, 0.0).unwrap();
            let dq: Vec<f64> = ds.q.iter().zip(&ds.q_ref).map(|(q, r)| q - r).collect();
            let series = Series::new(ds.total.clone(), dq, None).unwrap();
            let cleaned = subtract_linear_background(&series, 0.25).unwrap();
            let fit = fit_monoexp(&cleaned, None).unwrap();
            let rate = 1.0 / fit.get("tau").unwrap();
            (*t2, *rs, rate, want_rate)
        })
        .collect();
    let mut worst: f64 = 0.0;
    let mut all_ok = true;
    for (t2, rs, rate, want) in &results {
        let err = (rate - want).abs() / want;
        worst = worst.max(err);
        if err > 0.15 {
            all_ok = false;
            println!(
                "  box T2={:.0e} r_s={:.1e}: rate {rate:.3e} vs {want:.3e} ({:.1} %)",
                t2,
                rs,
                err * 100.0
            );
        }
    }
    report(
        6,
        "Matthiessen property",
        all_ok,
        &format!(
            "9 boxes, worst rate deviation {:.1} % (accept <= 15 %)",
            worst * 100.0
        ),
    );
    assert!(all_ok);
}

#[test]
fn criterion_07_ramsey_fringes() {
    // evaluated on the default-quadrature map (32 points per spin),
    // scanning the merged-Pb0 feature region where Ramsey structure is
    // most pronounced
    let model = SpectralModel::<f64>::default();
    let params = default_params();
    let quad = gh(32);
    let fields: Vec<f64> = (0..9).map(|k| 0.3474 + k as f64 * 1e-4).collect();
    let (axis, rows) = map_rows(&model, &quad, &params, &fields, 200e-9);
    let below_60: Vec<usize> = axis
        .iter()
        .enumerate()
        .filter(|(_, t)| **t < 60.5e-9)
        .map(|(i, _)| i)
        .collect();
    let window: Vec<usize> = axis
        .iter()
        .enumerate()
        .filter(|(_, t)| (99.5e-9..=150.5e-9).contains(*t))
        .map(|(i, _)| i)
        .collect();
    let mut found = None;
    for (b0, row) in fields.iter().zip(&rows) {
        let early: Vec<f64> = below_60.iter().map(|i| row[*i]).collect();
        let mid: Vec<f64> = window.iter().map(|i| row[*i]).collect();
        let a_early = sign_alternations(&early);
        let a_mid = sign_alternations(&mid);
        if a_early >= 2 && a_mid == 0 {
            found = Some((*b0, a_early));
            break;
        }
    }
    let pass = found.is_some();
    report(
        7,
        "Ramsey fringes",
        pass,
        &match found {
            Some((b0, n)) => format!(
                "row {:.1} mT: {n} sign alternations below 60 ns, none in 100-150 ns",
                b0 * 1e3
            ),
            None => "no Pb0-region row shows >= 2 alternations below 60 ns with a clean 100-150 ns window".into(),
        },
    );
    assert!(pass);
}

mod brute {
    //! Minimal independent oracle (Taylor-series exponential of an
    //! explicitly constructed Liouvillian) for criterion 8.
    use num_complex::Complex64 as C64;
    use pedmr_core::mat::CMatrix;
    use pedmr_core::spin::{PairParams, PairState};

    type M = Vec<Vec<C64>>;

    fn zeros(n: usize) -> M {
        vec![vec![C64::new(0.0, 0.0); n]; n]
    }
    fn eye(n: usize) -> M {
        let mut m = zeros(n);
        for i in 0..n {
            m[i][i] = C64::new(1.0, 0.0);
        }
        m
    }
    fn matmul(a: &M, b: &M) -> M {
        let n = a.len();
        let mut out = zeros(n);
        for i in 0..n {
            for k in 0..n {
                let v = a[i][k];
                for j in 0..n {
                    out[i][j] += v * b[k][j];
                }
            }
        }
        out
    }
    fn add(a: &M, b: &M) -> M {
        a.iter()
            .zip(b)
            .map(|(r1, r2)| r1.iter().zip(r2).map(|(x, y)| x + y).collect())
            .collect()
    }
    fn scale(a: &M, s: C64) -> M {
        a.iter()
            .map(|row| row.iter().map(|v| *v * s).collect())
            .collect()
    }
    fn kron(a: &M, b: &M) -> M {
        let (na, nb) = (a.len(), b.len());
        let mut out = zeros(na * nb);
        for i in 0..na * nb {
            for j in 0..na * nb {
                out[i][j] = a[i / nb][j / nb] * b[i % nb][j % nb];
            }
        }
        out
    }
    fn transpose(a: &M) -> M {
        let n = a.len();
        let mut out = zeros(n);
        for i in 0..n {
            for j in 0..n {
                out[i][j] = a[j][i];
            }
        }
        out
    }
    fn one_norm(a: &M) -> f64 {
        let n = a.len();
        (0..n)
            .map(|j| (0..n).map(|i| a[i][j].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }
    fn expm(a: &M) -> M {
        let norm = one_norm(a);
        let s = if norm > 0.25 {
            (norm / 0.25).log2().ceil() as u32
        } else {
            0
        };
        let a = scale(a, C64::new(0.5f64.powi(s as i32), 0.0));
        let mut term = eye(a.len());
        let mut sum = eye(a.len());
        for k in 1..90 {
            term = scale(&matmul(&term, &a), C64::new(1.0 / k as f64, 0.0));
            sum = add(&sum, &term);
            if one_norm(&term) < 1e-20 {
                break;
            }
        }
        let mut r = sum;
        for _ in 0..s {
            r = matmul(&r, &r);
        }
        r
    }

    pub fn propagate(state: &PairState<f64>, p: &PairParams<f64>, t: f64) -> CMatrix<f64, 4> {
        let i2 = eye(2);
        let mut sx = zeros(2);
        sx[0][1] = C64::new(1.0, 0.0);
        sx[1][0] = C64::new(1.0, 0.0);
        let mut sy = zeros(2);
        sy[0][1] = C64::new(0.0, -1.0);
        sy[1][0] = C64::new(0.0, 1.0);
        let mut sz = zeros(2);
        sz[0][0] = C64::new(1.0, 0.0);
        sz[1][1] = C64::new(-1.0, 0.0);
        let xa = kron(&sx, &i2);
        let xb = kron(&i2, &sx);
        let ya = kron(&sy, &i2);
        let yb = kron(&i2, &sy);
        let za = kron(&sz, &i2);
        let zb = kron(&i2, &sz);

        let mut ham = add(
            &scale(&za, C64::new(0.5 * p.delta_a, 0.0)),
            &scale(&zb, C64::new(0.5 * p.delta_b, 0.0)),
        );
        ham = add(
            &ham,
            &add(
                &scale(&add(&xa, &xb), C64::new(0.5 * p.omega1 * p.phase.cos(), 0.0)),
                &scale(&add(&ya, &yb), C64::new(0.5 * p.omega1 * p.phase.sin(), 0.0)),
            ),
        );
        let dot = add(
            &add(&matmul(&xa, &xb), &matmul(&ya, &yb)),
            &matmul(&za, &zb),
        );
        ham = add(&ham, &scale(&dot, C64::new(0.25 * p.j_ex, 0.0)));

        let mut ps = zeros(4);
        let amp = [0.0, 1.0, -1.0, 0.0].map(|v| C64::new(v / 2.0_f64.sqrt(), 0.0));
        for i in 0..4 {
            for j in 0..4 {
                ps[i][j] = amp[i] * amp[j].conj();
            }
        }
        let pt = add(&eye(4), &scale(&ps, C64::new(-1.0, 0.0)));

        let i4 = eye(4);
        let mut l = scale(
            &add(
                &kron(&i4, &ham),
                &scale(&kron(&transpose(&ham), &i4), C64::new(-1.0, 0.0)),
            ),
            C64::new(0.0, -1.0),
        );
        for (proj, rate) in [(&ps, p.r_s), (&pt, p.r_t)] {
            let anti = add(&kron(&i4, proj), &kron(&transpose(proj), &i4));
            l = add(&l, &scale(&anti, C64::new(-0.5 * rate, 0.0)));
        }
        if p.gamma_phi != 0.0 {
            let i16 = eye(16);
            for z in [&za, &zb] {
                let recyc = add(&kron(&transpose(z), z), &scale(&i16, C64::new(-1.0, 0.0)));
                l = add(&l, &scale(&recyc, C64::new(0.5 * p.gamma_phi, 0.0)));
            }
        }

        let prop = expm(&scale(&l, C64::new(t, 0.0)));
        let mut v = vec![C64::new(0.0, 0.0); 16];
        for j in 0..4 {
            for i in 0..4 {
                v[i + 4 * j] = state.matrix()[(i, j)];
            }
        }
        let mut w = vec![C64::new(0.0, 0.0); 16];
        for (i, wi) in w.iter_mut().enumerate() {
            for (j, vj) in v.iter().enumerate() {
                *wi += prop[i][j] * *vj;
            }
        }
        CMatrix::from_fn(|i, j| w[i + 4 * j])
    }
}

#[test]
fn criterion_08_oracle_equivalence() {
    use pedmr_core::spin::{
        propagate_free, propagate_pulse, singlet_fraction, PairState,
    };
    struct XorShift(u64);
    impl XorShift {
        fn unit(&mut self) -> f64 {
            self.0 ^= self.0 << 13;
            self.0 ^= self.0 >> 7;
            self.0 ^= self.0 << 17;
            (self.0 >> 11) as f64 / (1u64 << 53) as f64
        }
    }
    let mut rng = XorShift(0xACC3);
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut worst = 0.0f64;
    for k in 0..100 {
        // random sub-unit-trace PSD state
        let mut a = [[Complex64::new(0.0, 0.0); 4]; 4];
        for row in a.iter_mut() {
            for v in row.iter_mut() {
                *v = Complex64::new(rng.unit() - 0.5, rng.unit() - 0.5);
            }
        }
        let mut rho = pedmr_core::mat::CMatrix::<f64, 4>::zeros();
        for i in 0..4 {
            for j in 0..4 {
                let mut s = Complex64::new(0.0, 0.0);
                for l in 0..4 {
                    s += a[i][l] * a[j][l].conj();
                }
                rho[(i, j)] = s;
            }
        }
        let tr = rho.trace().re;
        let rho = rho.scale_re((0.2 + 0.8 * rng.unit()) / tr);
        let state = PairState::from_density_matrix(rho).unwrap();
        let params = PairParams {
            delta_a: two_pi * 50e6 * (2.0 * rng.unit() - 1.0),
            delta_b: two_pi * 50e6 * (2.0 * rng.unit() - 1.0),
            omega1: two_pi * 20e6 * rng.unit(),
            phase: two_pi * rng.unit(),
            r_s: 5e6 * rng.unit(),
            r_t: 5e6 * rng.unit(),
            gamma_phi: if rng.unit() < 0.4 { 0.0 } else { 1e6 * rng.unit() },
            j_ex: two_pi * 1e6 * (2.0 * rng.unit() - 1.0),
        };
        let t = 2e-6 * rng.unit();
        let (got, mut oracle_params) = if k % 2 == 0 {
            (propagate_pulse(&state, &params, t).unwrap(), params)
        } else {
            (propagate_free(&state, &params, t).unwrap(), params)
        };
        if k % 2 == 1 {
            oracle_params.omega1 = 0.0;
            oracle_params.phase = 0.0;
        }
        let want = brute::propagate(&state, &oracle_params, t);
        worst = worst.max(got.matrix().max_abs_diff(&want));
    }

    // singlet checkpoints: 0, 1/2, 1/4 to 1e-3
    let ss = PairState::<f64>::steady_state();
    let f0 = singlet_fraction(&ss);
    let mut amps = [Complex64::new(0.0, 0.0); 4];
    amps[1] = Complex64::new(1.0, 0.0);
    let f_half = singlet_fraction(&PairState::from_pure(amps));
    let w1 = two_pi * 8.3914e6;
    let p90 = PairParams {
        delta_b: two_pi * 5e9,
        omega1: w1,
        ..Default::default()
    };
    let quarter_state =
        propagate_pulse(&ss, &p90, std::f64::consts::PI / 2.0 / w1).unwrap();
    let f_quarter = singlet_fraction(&quarter_state);

    let pass = worst <= 1e-8
        && f0.abs() <= 1e-3
        && (f_half - 0.5).abs() <= 1e-3
        && (f_quarter - 0.25).abs() <= 1e-3;
    report(
        8,
        "oracle equivalence",
        pass,
        &format!(
            "worst propagator deviation {worst:.2e} (<= 1e-8); checkpoints {f0:.1e}, {f_half:.4}, {f_quarter:.4}"
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_09_fitting_oracle() {
    struct XorShift(u64);
    impl XorShift {
        fn unit(&mut self) -> f64 {
            self.0 ^= self.0 << 13;
            self.0 ^= self.0 >> 7;
            self.0 ^= self.0 << 17;
            (self.0 >> 11) as f64 / (1u64 << 53) as f64
        }
        fn gauss(&mut self) -> f64 {
            let u1 = self.unit().max(1e-16);
            let u2 = self.unit();
            (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
        }
    }
    let mut rng = XorShift(0xF17);
    let mut worst_clean = 0.0f64;
    for _ in 0..100 {
        let a = 0.1 + 5.0 * rng.unit();
        let tau = 1e-7 * 10f64.powf(3.0 * rng.unit());
        let c = 2.0 * rng.unit() - 1.0;
        let x: Vec<f64> = (0..30).map(|i| i as f64 * tau / 6.0).collect();
        let y: Vec<f64> = x.iter().map(|x| a * (-(x / tau)).exp() + c).collect();
        let fit = fit_monoexp(&Series::new(x, y, None).unwrap(), None).unwrap();
        worst_clean = worst_clean.max(((fit.get("tau").unwrap() - tau) / tau).abs());
    }
    // seeded 1 % noise
    let tau_true = 1.7e-6;
    let x: Vec<f64> = (0..25).map(|i| i as f64 * 0.2e-6).collect();
    let y: Vec<f64> = x
        .iter()
        .map(|x| (-(x / tau_true)).exp() + 0.01 * rng.gauss())
        .collect();
    let fit = fit_monoexp(&Series::new(x, y, None).unwrap(), None).unwrap();
    let noisy_err = ((fit.get("tau").unwrap() - tau_true) / tau_true).abs();

    let pass = worst_clean <= 1e-6 && noisy_err <= 0.02;
    report(
        9,
        "fitting oracle",
        pass,
        &format!(
            "noiseless worst relative error {worst_clean:.2e} (<= 1e-6); 1 % noise tau error {:.2} % (<= 2 %)",
            noisy_err * 100.0
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_10_formula_ops() {
    let w: f64 = echo_width_from_linewidth(0.4e-3, 1.9985).unwrap();
    let t2e = t2_interface::<f64>(15.0, 1e11).unwrap();
    let tau: f64 = tau_echo_combined(f64::INFINITY, 2.3e6).unwrap();
    let exact = 4.0 / 2.3e6;
    let pass = (w - 179e-9).abs() <= 1e-9
        && (t2e.t2 - 9.0e-6).abs() <= 0.1e-6
        && ((tau - exact) / exact).abs() <= 1e-15;
    report(
        10,
        "formula ops",
        pass,
        &format!(
            "echo width {:.2} ns (179 +- 1), T2(15 nm, 1e11) = {:.2} us (9.0 +- 0.1), tau_echo(inf, 2.3e6) exact to {:.1e}",
            w * 1e9,
            t2e.t2 * 1e6,
            ((tau - exact) / exact).abs()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_11_dsl_suite() {
    // round-trip on 50 generated programs
    let mut round_trips = 0;
    for k in 0..50u64 {
        let tau = 10 + (k * 13) % 500;
        let step = 1 + (k % 7);
        let nsweep = (k % 3) + 1;
        let mut src = format!("#pseq v1\nlet t{k} = {tau}ns\n");
        for s in 0..nsweep.min(2) {
            src.push_str(&format!(
                "sweep ax{s} from {}ns to {}ns step {step}ns\n",
                s * 5,
                s * 5 + step * (10 + k % 4)
            ));
        }
        src.push_str(&format!(
            "pulse 90 x\ndelay t{k}\npulse 180 y\ndelay ax0\npulse_t 35.5ns -y\n"
        ));
        let p = parse(&src).unwrap();
        if parse(&sequence::pretty_print(&p)).unwrap() == p {
            round_trips += 1;
        }
    }

    // all diagnostic codes exercised
    let cases: &[(&str, DiagnosticCode)] = &[
        ("wibble 1 2", DiagnosticCode::Syntax),
        ("delay 5", DiagnosticCode::Unit),
        ("delay nowhere", DiagnosticCode::UndefinedVariable),
        ("let a = 1ns\nlet a = 2ns", DiagnosticCode::DuplicateLet),
        ("sweep t from 0ns to 5ns step 0ns", DiagnosticCode::InvalidStep),
        (
            "sweep a from 0ns to 1ns step 1ns\nsweep b from 0ns to 1ns step 1ns\nsweep c from 0ns to 1ns step 1ns",
            DiagnosticCode::SweepOverflow,
        ),
    ];
    let mut codes_ok = true;
    for (src, code) in cases {
        let diags = parse(src).unwrap_err();
        if !diags.iter().any(|d| d.code == *code) {
            codes_ok = false;
            println!("  missing diagnostic {code:?} for {src:?}");
        }
    }

    // cp_echo builder totals exactly 2 pi of rotation
    let seq = compile::<f64>(
        &parse(&sequence::cp_echo(200e-9, 0.0, 900e-9, 10e-9)).unwrap(),
        5e7,
    )
    .unwrap();
    let rotation = seq.total_rotation();
    let rot_ok = (rotation - 2.0 * std::f64::consts::PI).abs() < 1e-15;

    let pass = round_trips == 50 && codes_ok && rot_ok;
    report(
        11,
        "DSL suite",
        pass,
        &format!(
            "{round_trips}/50 round trips, all 6 diagnostic codes exercised: {codes_ok}, cp_echo rotation {rotation:.15} rad"
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_12_determinism() {
    let bin = env!("CARGO_BIN_EXE_pedmr");
    let base = std::env::temp_dir().join(format!("pedmr-acc12-{}", std::process::id()));
    let cfg_path = base.join("run.cfg");
    std::fs::create_dir_all(&base).unwrap();
    std::fs::write(
        &cfg_path,
        "quad_scheme = monte-carlo\nquad_points = 24\nseed = 5\nspectrum_b0_start_t = 0.347\nspectrum_b0_stop_t = 0.349\nspectrum_b0_step_t = 1e-4\n",
    )
    .unwrap();
    let mut outputs = Vec::new();
    for run in 0..2 {
        let out = base.join(format!("run{run}"));
        let status = std::process::Command::new(bin)
            .args([
                "spectrum",
                "--config",
                cfg_path.to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
            ])
            .status()
            .unwrap();
        assert!(status.success());
        outputs.push(std::fs::read(out.join("spectrum.csv")).unwrap());
    }
    let pass = outputs[0] == outputs[1];
    report(
        12,
        "determinism",
        pass,
        &format!(
            "two runs, identical config and seed: spectrum.csv byte-identical = {pass} ({} bytes)",
            outputs[0].len()
        ),
    );
    let _ = std::fs::remove_dir_all(&base);
    assert!(pass);
}
