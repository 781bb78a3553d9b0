//! The four batch experiments. Each writes CSV plus a copy of the resolved
//! configuration and the DSL text actually executed; field grids run in
//! parallel with order-deterministic assembly.

use crate::config::RunConfig;
use pedmr_core::analysis::{fit_monoexp, subtract_linear_background, FitResult, Series};
use pedmr_core::ensemble::{
    average_q_with_leak, echo_decay_series, sweep_q, QuadratureScheme, QuadratureSpec,
};
use pedmr_core::sequence::{self, compile, parse};
use pedmr_core::{CoreError, Result};
use rayon::prelude::*;
use std::fs;
use std::path::Path;

const RABI_DEFAULT_POINTS: usize = 192;
const MAP_DEFAULT_POINTS: usize = 256;
const DECAY_DEFAULT_POINTS: usize = 128;
const SPECTRUM_DEFAULT_POINTS: usize = 64;

fn write_outputs(
    out_dir: &Path,
    cfg: &RunConfig,
    experiment: &str,
    quad: &QuadratureSpec,
    sequence_text: &str,
) -> Result<()> {
    fs::create_dir_all(out_dir)?;
    fs::write(
        out_dir.join("resolved_config.txt"),
        cfg.resolved_text(experiment, quad),
    )?;
    fs::write(out_dir.join("sequence.pseq"), sequence_text)?;
    Ok(())
}

fn field_grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
    (0..n).map(|k| start + k as f64 * step).collect()
}

/// Swept-pulse Rabi experiment at a single field: rabi.csv (tau_rabi_s, Q).
pub fn run_rabi(cfg: &RunConfig, out_dir: &Path, custom_seq: Option<&Path>) -> Result<()> {
    let quad = cfg.quad(QuadratureScheme::GaussHermite, RABI_DEFAULT_POINTS);
    let omega1 = cfg.model.rabi_angular_frequency();
    let text = match custom_seq {
        Some(p) => fs::read_to_string(p)
            .map_err(|e| CoreError::Config(format!("cannot read {}: {e}", p.display())))?,
        None => sequence::rabi(cfg.rabi_t_max, cfg.rabi_step),
    };
    let program = parse(&text).map_err(|d| diag_error(&d))?;
    let seq = compile::<f64>(&program, omega1)?;
    if seq.sweep_axes.len() != 1 {
        return Err(CoreError::Config(
            "rabi needs a sequence with exactly one sweep axis".into(),
        ));
    }
    let b0 = match cfg.b0 {
        Some(b) => b,
        None => cfg.model.high_field_donor_line()?,
    };
    write_outputs(out_dir, cfg, "rabi", &quad, &text)?;

    let swept = sweep_q(&cfg.model, &quad, &seq, &cfg.params, b0, cfg.omega1_leak)?;
    let kq = cfg.kernel.window_integral(&cfg.boxcar) * cfg.kernel.gain;
    let mut csv = String::from("tau_rabi_s,Q\n");
    for (t, q) in swept.axis.iter().zip(&swept.q) {
        csv.push_str(&format!("{:e},{:e}\n", t, q * kq));
    }
    fs::write(out_dir.join("rabi.csv"), csv)?;
    Ok(())
}

/// Two-dimensional echo tomography map: echo_map.csv (b0_T, tau2_s, dQ).
///
/// dQ is Q minus a per-field-line linear plateau fit over
/// tau2 >= map_plateau_start, making the echo a negative-going dip.
pub fn run_echo_map(cfg: &RunConfig, out_dir: &Path, custom_seq: Option<&Path>) -> Result<()> {
    let quad = cfg.quad(QuadratureScheme::GaussHermite, MAP_DEFAULT_POINTS);
    let omega1 = cfg.model.rabi_angular_frequency();
    let text = match custom_seq {
        Some(p) => fs::read_to_string(p)
            .map_err(|e| CoreError::Config(format!("cannot read {}: {e}", p.display())))?,
        None => sequence::cp_echo(cfg.map_tau1, 0.0, cfg.map_tau2_max, cfg.map_tau2_step),
    };
    let program = parse(&text).map_err(|d| diag_error(&d))?;
    let seq = compile::<f64>(&program, omega1)?;
    if seq.sweep_axes.len() != 1 {
        return Err(CoreError::Config(
            "echo-map needs a sequence with exactly one sweep axis".into(),
        ));
    }
    write_outputs(out_dir, cfg, "echo-map", &quad, &text)?;

    let fields = field_grid(cfg.map_b0_start, cfg.map_b0_stop, cfg.map_b0_step);
    let rows: Vec<Result<Vec<f64>>> = fields
        .par_iter()
        .map(|b0| {
            let swept = sweep_q(&cfg.model, &quad, &seq, &cfg.params, *b0, cfg.omega1_leak)?;
            Ok(delta_q_row(&swept.axis, &swept.q, cfg.map_plateau_start))
        })
        .collect();

    let kq = cfg.kernel.window_integral(&cfg.boxcar) * cfg.kernel.gain;
    let tau2s = &seq.sweep_axes[0].values;
    let mut csv = String::from("b0_T,tau2_s,dQ\n");
    for (b0, row) in fields.iter().zip(rows) {
        let row = row?;
        for (t2, dq) in tau2s.iter().zip(row) {
            csv.push_str(&format!("{:e},{:e},{:e}\n", b0, t2, dq * kq));
        }
    }
    fs::write(out_dir.join("echo_map.csv"), csv)?;
    Ok(())
}

/// Q minus the linear plateau fit over the tail of the tau2 axis.
pub fn delta_q_row(tau2: &[f64], q: &[f64], plateau_start: f64) -> Vec<f64> {
    let pts: Vec<(f64, f64)> = tau2
        .iter()
        .zip(q)
        .filter(|(t, _)| **t >= plateau_start)
        .map(|(t, v)| (*t, *v))
        .collect();
    if pts.len() < 2 {
        let mean = q.iter().sum::<f64>() / q.len().max(1) as f64;
        return q.iter().map(|v| v - mean).collect();
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|(x, _)| x).sum();
    let sy: f64 = pts.iter().map(|(_, y)| y).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| x * x).sum();
    let sxy: f64 = pts.iter().map(|(x, y)| x * y).sum();
    let den = n * sxx - sx * sx;
    let (slope, icpt) = if den.abs() < 1e-300 {
        (0.0, sy / n)
    } else {
        let s = (n * sxy - sx * sy) / den;
        (s, (sy - s * sx) / n)
    };
    tau2.iter()
        .zip(q)
        .map(|(t, v)| v - (slope * t + icpt))
        .collect()
}

/// Echo decay at tau1 = tau2 = tau: echo_decay.csv (total_tau_s, dQ) plus a
/// mono-exponential fit of the background-subtracted echo amplitude.
/// Returns the fit result so the caller can map non-convergence to exit 4.
pub fn run_echo_decay(cfg: &RunConfig, out_dir: &Path) -> Result<FitResult<f64>> {
    let quad = cfg.quad(QuadratureScheme::MonteCarlo, DECAY_DEFAULT_POINTS);
    let n = cfg.decay_steps;
    let step = (cfg.decay_tau_stop - cfg.decay_tau_start) / (n - 1) as f64;
    if !(step > 0.0) {
        return Err(CoreError::Config("decay tau range is empty".into()));
    }
    let taus: Vec<f64> = (0..n).map(|k| cfg.decay_tau_start + k as f64 * step).collect();
    let text = sequence::echo_decay(cfg.decay_tau_start, cfg.decay_tau_stop, step);
    write_outputs(out_dir, cfg, "echo-decay", &quad, &text)?;

    let b0 = match cfg.b0 {
        Some(b) => b,
        None => cfg.model.high_field_donor_line()?,
    };
    let series = echo_decay_series(&cfg.model, &quad, &taus, &cfg.params, b0, cfg.omega1_leak)?;
    let kq = cfg.kernel.window_integral(&cfg.boxcar) * cfg.kernel.gain;
    let dq: Vec<f64> = series
        .q
        .iter()
        .zip(&series.q_ref)
        .map(|(q, r)| (q - r) * kq)
        .collect();

    let mut csv = String::from("total_tau_s,dQ\n");
    for (x, y) in series.total.iter().zip(&dq) {
        csv.push_str(&format!("{:e},{:e}\n", x, y));
    }
    fs::write(out_dir.join("echo_decay.csv"), csv)?;

    let data = Series::new(series.total.clone(), dq, None)?;
    let cleaned = subtract_linear_background(&data, 0.25)?;
    let fit = fit_monoexp(&cleaned, None)?;
    fs::write(out_dir.join("fit_result.txt"), fit.to_key_value())?;
    fs::write(out_dir.join("fit_result.csv"), fit.to_csv())?;
    Ok(fit)
}

/// Field-swept spectrum under a fixed pi pulse: spectrum.csv (b0_T, Q).
pub fn run_spectrum(cfg: &RunConfig, out_dir: &Path, custom_seq: Option<&Path>) -> Result<()> {
    let quad = cfg.quad(QuadratureScheme::GaussHermite, SPECTRUM_DEFAULT_POINTS);
    let omega1 = cfg.model.rabi_angular_frequency();
    let text = match custom_seq {
        Some(p) => fs::read_to_string(p)
            .map_err(|e| CoreError::Config(format!("cannot read {}: {e}", p.display())))?,
        None => "#pseq v1\npulse 180 x\n".to_string(),
    };
    let program = parse(&text).map_err(|d| diag_error(&d))?;
    let seq = compile::<f64>(&program, omega1)?;
    if !seq.sweep_axes.is_empty() {
        return Err(CoreError::Config(
            "spectrum needs a sequence without sweep axes".into(),
        ));
    }
    let timeline = seq.timeline(&[]);
    write_outputs(out_dir, cfg, "spectrum", &quad, &text)?;

    let fields = field_grid(cfg.spectrum_b0_start, cfg.spectrum_b0_stop, cfg.spectrum_b0_step);
    let qs: Vec<Result<f64>> = fields
        .par_iter()
        .map(|b0| {
            average_q_with_leak(
                &cfg.model,
                &quad,
                &timeline,
                &cfg.params,
                *b0,
                cfg.omega1_leak,
            )
        })
        .collect();
    let kq = cfg.kernel.window_integral(&cfg.boxcar) * cfg.kernel.gain;
    let mut csv = String::from("b0_T,Q\n");
    for (b0, q) in fields.iter().zip(qs) {
        csv.push_str(&format!("{:e},{:e}\n", b0, q? * kq));
    }
    fs::write(out_dir.join("spectrum.csv"), csv)?;
    Ok(())
}

/// Fit subcommand: read a CSV series, fit the chosen model, emit both report
/// formats. The boolean is `converged`.
pub fn run_fit(
    input: &Path,
    model: &str,
    baseline_fraction: Option<f64>,
    out_dir: &Path,
) -> Result<FitResult<f64>> {
    let file = fs::File::open(input)
        .map_err(|e| CoreError::Config(format!("cannot open {}: {e}", input.display())))?;
    let mut series = Series::<f64>::from_csv(std::io::BufReader::new(file))?;
    if let Some(frac) = baseline_fraction {
        series = subtract_linear_background(&series, frac)?;
    }
    let fit = match model {
        "monoexp" => fit_monoexp(&series, None)?,
        "gaussian" => pedmr_core::analysis::fit_gaussian(&series)?,
        other => {
            return Err(CoreError::Config(format!(
                "unknown fit model `{other}` (expected monoexp or gaussian)"
            )))
        }
    };
    fs::create_dir_all(out_dir)?;
    fs::write(out_dir.join("fit_result.txt"), fit.to_key_value())?;
    fs::write(out_dir.join("fit_result.csv"), fit.to_csv())?;
    Ok(fit)
}

pub fn diag_error(diags: &[pedmr_core::sequence::Diagnostic]) -> CoreError {
    let text = diags
        .iter()
        .map(|d| d.to_string())
        .collect::<Vec<_>>()
        .join("\n");
    CoreError::Compile(text)
}
