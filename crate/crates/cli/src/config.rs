//! Run configuration: a plain-text key=value file plus command-line
//! overrides. Unknown keys are rejected so typos fail loudly.

use pedmr_core::detector::{BoxcarWindow, TransientKernel};
use pedmr_core::ensemble::{QuadratureScheme, QuadratureSpec, SpectralModel};
use pedmr_core::spin::PairParams;
use pedmr_core::{CoreError, Result};
use std::path::Path;

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub model: SpectralModel<f64>,
    pub params: PairParams<f64>,
    /// None means "use the experiment's default scheme" (Gauss-Hermite for
    /// field sweeps and maps, Monte Carlo for echo-decay runs, whose long
    /// free evolutions alias under any affordable Gauss-Hermite order).
    pub quad_scheme: Option<QuadratureScheme>,
    /// None means "use the experiment's default point count".
    pub quad_points: Option<usize>,
    pub seed: u64,
    pub omega1_leak: f64,
    pub kernel: TransientKernel<f64>,
    pub boxcar: BoxcarWindow<f64>,
    /// Static field for single-field experiments; None = high-field P line.
    pub b0: Option<f64>,

    pub rabi_t_max: f64,
    pub rabi_step: f64,

    pub map_b0_start: f64,
    pub map_b0_stop: f64,
    pub map_b0_step: f64,
    pub map_tau1: f64,
    pub map_tau2_max: f64,
    pub map_tau2_step: f64,
    pub map_plateau_start: f64,

    pub decay_tau_start: f64,
    pub decay_tau_stop: f64,
    pub decay_steps: usize,

    pub spectrum_b0_start: f64,
    pub spectrum_b0_stop: f64,
    pub spectrum_b0_step: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            model: SpectralModel::default(),
            params: PairParams {
                r_s: 2.3e6,
                r_t: 1.0 / 140e-6,
                ..Default::default()
            },
            quad_scheme: None,
            quad_points: None,
            seed: 0,
            omega1_leak: 0.0,
            kernel: TransientKernel::default(),
            boxcar: BoxcarWindow::default(),
            b0: None,
            rabi_t_max: 600e-9,
            rabi_step: 5e-9,
            map_b0_start: 0.345,
            map_b0_stop: 0.353,
            map_b0_step: 0.1e-3,
            map_tau1: 200e-9,
            map_tau2_max: 900e-9,
            map_tau2_step: 10e-9,
            map_plateau_start: 500e-9,
            decay_tau_start: 300e-9,
            decay_tau_stop: 5.2e-6,
            decay_steps: 40,
            spectrum_b0_start: 0.345,
            spectrum_b0_stop: 0.353,
            spectrum_b0_step: 0.1e-3,
        }
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CoreError::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        let base_dir = path.parent().map(|p| p.to_path_buf());
        Self::from_str_with_base(&text, base_dir.as_deref())
    }

    pub fn from_str_with_base(text: &str, base_dir: Option<&Path>) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut inline_model_lines: Vec<String> = Vec::new();
        let mut inline_model_header: Vec<String> = Vec::new();
        let mut model_from_file: Option<SpectralModel<f64>> = None;

        for (idx, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(p) => &raw[..p],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CoreError::Config(format!("line {}: expected key = value", idx + 1))
            })?;
            let key = key.trim();
            let value = value.trim();
            let num = |what: &str| -> Result<f64> {
                value.parse::<f64>().map_err(|_| {
                    CoreError::Config(format!("line {}: bad number for {what}: `{value}`", idx + 1))
                })
            };
            match key {
                "spectral_model" => {
                    let p = match base_dir {
                        Some(d) => d.join(value),
                        None => value.into(),
                    };
                    let t = std::fs::read_to_string(&p).map_err(|e| {
                        CoreError::Config(format!("cannot read spectral model {}: {e}", p.display()))
                    })?;
                    model_from_file = Some(SpectralModel::from_config_str(&t)?);
                }
                "line" => inline_model_lines.push(format!("line = {value}")),
                "f_mw_hz" => inline_model_header.push(format!("f_mw_hz = {value}")),
                "b1_t" => inline_model_header.push(format!("b1_t = {value}")),
                "r_s_per_s" => cfg.params.r_s = num("r_s_per_s")?,
                "r_t_per_s" => cfg.params.r_t = num("r_t_per_s")?,
                "gamma_phi_per_s" => cfg.params.gamma_phi = num("gamma_phi_per_s")?,
                "j_ex_rad_s" => cfg.params.j_ex = num("j_ex_rad_s")?,
                "omega1_leak_rad_s" => cfg.omega1_leak = num("omega1_leak_rad_s")?,
                "quad_scheme" => {
                    cfg.quad_scheme = match value {
                        "gauss-hermite" => Some(QuadratureScheme::GaussHermite),
                        "monte-carlo" => Some(QuadratureScheme::MonteCarlo),
                        other => {
                            return Err(CoreError::Config(format!(
                                "line {}: unknown quad_scheme `{other}`",
                                idx + 1
                            )))
                        }
                    }
                }
                "quad_points" => cfg.quad_points = Some(num("quad_points")? as usize),
                "seed" => cfg.seed = num("seed")? as u64,
                "b0_t" => cfg.b0 = Some(num("b0_t")?),
                "rabi_t_max_s" => cfg.rabi_t_max = num("rabi_t_max_s")?,
                "rabi_step_s" => cfg.rabi_step = num("rabi_step_s")?,
                "map_b0_start_t" => cfg.map_b0_start = num("map_b0_start_t")?,
                "map_b0_stop_t" => cfg.map_b0_stop = num("map_b0_stop_t")?,
                "map_b0_step_t" => cfg.map_b0_step = num("map_b0_step_t")?,
                "map_tau1_s" => cfg.map_tau1 = num("map_tau1_s")?,
                "map_tau2_max_s" => cfg.map_tau2_max = num("map_tau2_max_s")?,
                "map_tau2_step_s" => cfg.map_tau2_step = num("map_tau2_step_s")?,
                "map_plateau_start_s" => cfg.map_plateau_start = num("map_plateau_start_s")?,
                "decay_tau_start_s" => cfg.decay_tau_start = num("decay_tau_start_s")?,
                "decay_tau_stop_s" => cfg.decay_tau_stop = num("decay_tau_stop_s")?,
                "decay_steps" => cfg.decay_steps = num("decay_steps")? as usize,
                "spectrum_b0_start_t" => cfg.spectrum_b0_start = num("spectrum_b0_start_t")?,
                "spectrum_b0_stop_t" => cfg.spectrum_b0_stop = num("spectrum_b0_stop_t")?,
                "spectrum_b0_step_t" => cfg.spectrum_b0_step = num("spectrum_b0_step_t")?,
                "kernel_tau_rise_s" => cfg.kernel.tau_rise = num("kernel_tau_rise_s")?,
                "kernel_tau_fall_s" => cfg.kernel.tau_fall = num("kernel_tau_fall_s")?,
                "kernel_tau_slow_s" => cfg.kernel.tau_slow = num("kernel_tau_slow_s")?,
                "kernel_overshoot" => cfg.kernel.overshoot = num("kernel_overshoot")?,
                "kernel_gain" => cfg.kernel.gain = num("kernel_gain")?,
                "boxcar_start_s" => cfg.boxcar.t_start = num("boxcar_start_s")?,
                "boxcar_end_s" => cfg.boxcar.t_end = num("boxcar_end_s")?,
                other => {
                    return Err(CoreError::Config(format!(
                        "line {}: unknown key `{other}`",
                        idx + 1
                    )))
                }
            }
        }

        if let Some(m) = model_from_file {
            if !inline_model_lines.is_empty() {
                return Err(CoreError::Config(
                    "config mixes spectral_model = <file> with inline line = entries".into(),
                ));
            }
            cfg.model = m;
        } else if !inline_model_lines.is_empty() || !inline_model_header.is_empty() {
            let mut t = inline_model_header.join("\n");
            t.push('\n');
            if inline_model_lines.is_empty() {
                // header-only override on top of the default line set
                let d = SpectralModel::<f64>::default();
                for l in &d.lines {
                    t.push_str(&format!(
                        "line = {} g={:e} offset_t={:e} fwhm_t={:e} weight={:e}\n",
                        l.species, l.g_center, l.field_offset, l.fwhm, l.weight
                    ));
                }
            } else {
                t.push_str(&inline_model_lines.join("\n"));
            }
            cfg.model = SpectralModel::from_config_str(&t)?;
        }

        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.params.validate()?;
        self.kernel.validate()?;
        self.boxcar.validate()?;
        if let Some(p) = self.quad_points {
            if p < 1 {
                return Err(CoreError::Config("quad_points must be >= 1".into()));
            }
        }
        if self.decay_steps < 4 {
            return Err(CoreError::Config("decay_steps must be >= 4".into()));
        }
        for (name, v) in [
            ("rabi_step_s", self.rabi_step),
            ("map_b0_step_t", self.map_b0_step),
            ("map_tau2_step_s", self.map_tau2_step),
            ("spectrum_b0_step_t", self.spectrum_b0_step),
        ] {
            if !(v > 0.0) {
                return Err(CoreError::Config(format!("{name} must be positive")));
            }
        }
        if self.omega1_leak < 0.0 {
            return Err(CoreError::Config("omega1_leak_rad_s must be >= 0".into()));
        }
        Ok(())
    }

    pub fn quad(&self, default_scheme: QuadratureScheme, default_points: usize) -> QuadratureSpec {
        QuadratureSpec {
            scheme: self.quad_scheme.unwrap_or(default_scheme),
            points_per_spin: self.quad_points.unwrap_or(default_points),
            seed: self.seed,
        }
    }

    /// Canonical echo of every resolved setting, written into each output
    /// directory for reproducibility.
    pub fn resolved_text(&self, experiment: &str, quad: &QuadratureSpec) -> String {
        let mut s = String::new();
        s.push_str(&format!("experiment = {experiment}\n"));
        s.push_str(&format!(
            "quad_scheme = {}\n",
            match quad.scheme {
                QuadratureScheme::GaussHermite => "gauss-hermite",
                QuadratureScheme::MonteCarlo => "monte-carlo",
            }
        ));
        s.push_str(&format!("quad_points = {}\n", quad.points_per_spin));
        s.push_str(&format!("seed = {}\n", quad.seed));
        s.push_str(&format!("r_s_per_s = {:e}\n", self.params.r_s));
        s.push_str(&format!("r_t_per_s = {:e}\n", self.params.r_t));
        s.push_str(&format!("gamma_phi_per_s = {:e}\n", self.params.gamma_phi));
        s.push_str(&format!("j_ex_rad_s = {:e}\n", self.params.j_ex));
        s.push_str(&format!("omega1_leak_rad_s = {:e}\n", self.omega1_leak));
        s.push_str(&format!("kernel_tau_rise_s = {:e}\n", self.kernel.tau_rise));
        s.push_str(&format!("kernel_tau_fall_s = {:e}\n", self.kernel.tau_fall));
        s.push_str(&format!("kernel_tau_slow_s = {:e}\n", self.kernel.tau_slow));
        s.push_str(&format!("kernel_overshoot = {:e}\n", self.kernel.overshoot));
        s.push_str(&format!("kernel_gain = {:e}\n", self.kernel.gain));
        s.push_str(&format!("boxcar_start_s = {:e}\n", self.boxcar.t_start));
        s.push_str(&format!("boxcar_end_s = {:e}\n", self.boxcar.t_end));
        if let Some(b0) = self.b0 {
            s.push_str(&format!("b0_t = {b0:e}\n"));
        }
        s.push_str("# spectral model\n");
        s.push_str(&self.model.to_config_str());
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn parses_overrides() {
        let cfg = RunConfig::from_str_with_base(
            "r_s_per_s = 1e6\nquad_scheme = monte-carlo\nquad_points = 64\nseed = 9\nb0_t = 0.3512\n",
            None,
        )
        .unwrap();
        assert_eq!(cfg.params.r_s, 1e6);
        assert_eq!(cfg.quad_scheme, Some(QuadratureScheme::MonteCarlo));
        assert_eq!(cfg.quad_points, Some(64));
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.b0, Some(0.3512));
    }

    #[test]
    fn rejects_unknown_keys() {
        assert!(RunConfig::from_str_with_base("frobnicate = 1\n", None).is_err());
    }

    #[test]
    fn inline_model_lines() {
        let cfg = RunConfig::from_str_with_base(
            "f_mw_hz = 9.7e9\nline = P-hyperfine-low g=1.9985 offset_t=-2.1e-3 fwhm_t=4e-4 weight=1.0\n",
            None,
        )
        .unwrap();
        assert_eq!(cfg.model.lines.len(), 1);
        assert_eq!(cfg.model.f_mw, 9.7e9);
    }
}
