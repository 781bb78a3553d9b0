//! Inhomogeneously broadened spin-pair ensemble and its averages.
//!
//! A [`SpectralModel`] is a set of Gaussian resonance lines. Each detected
//! pair couples one donor spin (sampled from the P hyperfine lines) to one
//! interface spin (sampled from the Pb0 lines). Observables are averaged
//! over the joint detuning distribution with either Gauss-Hermite nodes or
//! seeded Monte Carlo draws; both reductions run in a fixed order so results
//! are bit-reproducible.
//!
//! The averaged observable is the absolute singlet excess per initial pair
//! ([`crate::spin::singlet_excess`]), which the boxcar charge is
//! proportional to.

use crate::error::{CoreError, Result};
use crate::scalar::constants::{bohr_magneton, gyro_angular, planck};
use crate::scalar::Scalar;
use crate::sequence::{Event, EventTemplate, PulseSequence};
use crate::spin::{
    propagate_free, propagate_pulse, singlet_excess, PairParams, PairState,
};
use rand_chacha::rand_core::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt;

/// Spectral species of a resonance line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SpeciesTag {
    PHyperfineLow,
    PHyperfineHigh,
    Pb0One,
    Pb0Two,
}

/// Which spin of the pair a species contributes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpeciesClass {
    /// The P donor electron (spin a).
    Donor,
    /// The Pb0 interface partner (spin b).
    Interface,
}

impl SpeciesTag {
    pub fn class(self) -> SpeciesClass {
        match self {
            SpeciesTag::PHyperfineLow | SpeciesTag::PHyperfineHigh => SpeciesClass::Donor,
            SpeciesTag::Pb0One | SpeciesTag::Pb0Two => SpeciesClass::Interface,
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "P-hyperfine-low" => Some(SpeciesTag::PHyperfineLow),
            "P-hyperfine-high" => Some(SpeciesTag::PHyperfineHigh),
            "Pb0-1" => Some(SpeciesTag::Pb0One),
            "Pb0-2" => Some(SpeciesTag::Pb0Two),
            _ => None,
        }
    }
}

impl fmt::Display for SpeciesTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SpeciesTag::PHyperfineLow => "P-hyperfine-low",
            SpeciesTag::PHyperfineHigh => "P-hyperfine-high",
            SpeciesTag::Pb0One => "Pb0-1",
            SpeciesTag::Pb0Two => "Pb0-2",
        };
        f.write_str(s)
    }
}

/// One Gaussian resonance line.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralLine<T: Scalar> {
    pub species: SpeciesTag,
    /// Dimensionless g-factor of the line center.
    pub g_center: T,
    /// Additional field shift in tesla (e.g. +-2.1 mT hyperfine).
    pub field_offset: T,
    /// Gaussian full width at half maximum in tesla.
    pub fwhm: T,
    /// Statistical weight within its species class.
    pub weight: T,
}

impl<T: Scalar> SpectralLine<T> {
    /// Standard deviation of the field offset distribution,
    /// fwhm = 2 sqrt(2 ln 2) sigma.
    pub fn sigma(&self) -> T {
        fwhm_to_sigma(self.fwhm)
    }
}

fn fwhm_to_sigma<T: Scalar>(fwhm: T) -> T {
    fwhm / T::of((8.0 * std::f64::consts::LN_2).sqrt())
}

/// Resonance field B0 = h f / (g mu_B) in tesla.
pub fn resonance_field<T: Scalar>(g: T, f_mw: T) -> Result<T> {
    if !(g > T::zero()) || !(f_mw > T::zero()) {
        return Err(CoreError::InvalidArgument(
            "resonance_field requires g > 0 and f_mw > 0".into(),
        ));
    }
    Ok(planck::<T>() * f_mw / (g * bohr_magneton::<T>()))
}

/// Rotating-frame detuning of a line member at static field `b0` with a
/// sampled inhomogeneous shift `offset` (tesla), in rad/s.
pub fn detuning<T: Scalar>(line: &SpectralLine<T>, b0: T, offset: T, f_mw: T) -> Result<T> {
    let center = resonance_field(line.g_center, f_mw)?;
    Ok(gyro_angular(line.g_center) * (b0 - center - line.field_offset - offset))
}

/// Set of resonance lines plus the spectrometer drive parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralModel<T: Scalar> {
    pub lines: Vec<SpectralLine<T>>,
    /// Microwave frequency in Hz.
    pub f_mw: T,
    /// Rotating-frame drive amplitude in tesla.
    pub b1: T,
}

impl<T: Scalar> Default for SpectralModel<T> {
    /// The Si:P / SiO2 system: hyperfine-split P doublet (4.2 mT splitting,
    /// 0.4 mT FWHM) around g = 1.9985 and two broad Pb0 lines at g = 2.008
    /// and 2.004 (1.0 mT FWHM each), driven at 9.765 GHz with B1 = 0.3 mT.
    fn default() -> Self {
        let line = |species, g: f64, off: f64, fwhm: f64, w: f64| SpectralLine {
            species,
            g_center: T::of(g),
            field_offset: T::of(off),
            fwhm: T::of(fwhm),
            weight: T::of(w),
        };
        SpectralModel {
            lines: vec![
                line(SpeciesTag::PHyperfineLow, 1.9985, -2.1e-3, 0.4e-3, 0.5),
                line(SpeciesTag::PHyperfineHigh, 1.9985, 2.1e-3, 0.4e-3, 0.5),
                line(SpeciesTag::Pb0One, 2.008, 0.0, 1.0e-3, 0.5),
                line(SpeciesTag::Pb0Two, 2.004, 0.0, 1.0e-3, 0.5),
            ],
            f_mw: T::of(9.765e9),
            b1: T::of(0.3e-3),
        }
    }
}

impl<T: Scalar> SpectralModel<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.f_mw > T::zero()) {
            return Err(CoreError::Config("f_mw must be positive".into()));
        }
        if self.b1 < T::zero() {
            return Err(CoreError::Config("b1 must be non-negative".into()));
        }
        if self.lines.is_empty() {
            return Err(CoreError::Config("spectral model has no lines".into()));
        }
        for class in [SpeciesClass::Donor, SpeciesClass::Interface] {
            let lines: Vec<_> = self.class_lines(class).collect();
            if lines.is_empty() {
                continue;
            }
            let mut wsum = T::zero();
            for l in &lines {
                if !(l.fwhm > T::zero()) {
                    return Err(CoreError::Config(format!("{}: fwhm must be positive", l.species)));
                }
                if l.weight < T::zero() {
                    return Err(CoreError::Config(format!("{}: negative weight", l.species)));
                }
                if !(l.g_center > T::zero()) {
                    return Err(CoreError::Config(format!("{}: g must be positive", l.species)));
                }
                wsum = wsum + l.weight;
            }
            if (wsum - T::one()).abs() > T::of(1e-9) {
                return Err(CoreError::Config(format!(
                    "weights of {class:?} lines must sum to 1 (got {wsum})"
                )));
            }
        }
        Ok(())
    }

    pub fn class_lines(&self, class: SpeciesClass) -> impl Iterator<Item = &SpectralLine<T>> {
        self.lines.iter().filter(move |l| l.species.class() == class)
    }

    /// Angular Rabi frequency g mu_B B1 / hbar of the drive, evaluated with
    /// the weighted mean donor g-factor (all lines if no donor lines exist).
    pub fn rabi_angular_frequency(&self) -> T {
        let donors: Vec<_> = self.class_lines(SpeciesClass::Donor).collect();
        let pool: Vec<&SpectralLine<T>> = if donors.is_empty() {
            self.lines.iter().collect()
        } else {
            donors
        };
        let mut g = T::zero();
        let mut w = T::zero();
        for l in &pool {
            g = g + l.g_center * l.weight;
            w = w + l.weight;
        }
        gyro_angular(g / w) * self.b1
    }

    /// Static field of the highest-field donor line center (the isolated
    /// high-field P resonance in the default model).
    pub fn high_field_donor_line(&self) -> Result<T> {
        let mut best: Option<T> = None;
        for l in self.class_lines(SpeciesClass::Donor) {
            let b = resonance_field(l.g_center, self.f_mw)? + l.field_offset;
            best = Some(match best {
                Some(x) if x > b => x,
                _ => b,
            });
        }
        best.ok_or_else(|| CoreError::Config("model has no donor lines".into()))
    }

    /// Parse the plain-text key=value schema. Keys: `f_mw_hz`, `b1_t`, and
    /// one `line = <species> g=<val> offset_t=<val> fwhm_t=<val> weight=<val>`
    /// per line. `#` starts a comment.
    pub fn from_config_str(text: &str) -> Result<Self> {
        let mut f_mw = T::of(9.765e9);
        let mut b1 = T::of(0.3e-3);
        let mut lines = Vec::new();
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
            let parse_num = |v: &str, what: &str| -> Result<T> {
                v.parse::<f64>()
                    .map(T::of)
                    .map_err(|_| CoreError::Config(format!("line {}: bad number for {what}: `{v}`", idx + 1)))
            };
            match key {
                "f_mw_hz" => f_mw = parse_num(value, "f_mw_hz")?,
                "b1_t" => b1 = parse_num(value, "b1_t")?,
                "line" => {
                    let mut toks = value.split_whitespace();
                    let species_tok = toks.next().ok_or_else(|| {
                        CoreError::Config(format!("line {}: missing species tag", idx + 1))
                    })?;
                    let species = SpeciesTag::parse(species_tok).ok_or_else(|| {
                        CoreError::Config(format!(
                            "line {}: unknown species `{species_tok}`",
                            idx + 1
                        ))
                    })?;
                    let mut g = None;
                    let mut off = T::zero();
                    let mut fwhm = None;
                    let mut weight = T::one();
                    for t in toks {
                        let (k, v) = t.split_once('=').ok_or_else(|| {
                            CoreError::Config(format!("line {}: expected k=v, got `{t}`", idx + 1))
                        })?;
                        match k {
                            "g" => g = Some(parse_num(v, "g")?),
                            "offset_t" => off = parse_num(v, "offset_t")?,
                            "fwhm_t" => fwhm = Some(parse_num(v, "fwhm_t")?),
                            "weight" => weight = parse_num(v, "weight")?,
                            other => {
                                return Err(CoreError::Config(format!(
                                    "line {}: unknown line field `{other}`",
                                    idx + 1
                                )))
                            }
                        }
                    }
                    lines.push(SpectralLine {
                        species,
                        g_center: g.ok_or_else(|| {
                            CoreError::Config(format!("line {}: line needs g=", idx + 1))
                        })?,
                        field_offset: off,
                        fwhm: fwhm.ok_or_else(|| {
                            CoreError::Config(format!("line {}: line needs fwhm_t=", idx + 1))
                        })?,
                        weight,
                    });
                }
                other => {
                    return Err(CoreError::Config(format!(
                        "line {}: unknown key `{other}`",
                        idx + 1
                    )))
                }
            }
        }
        let model = SpectralModel { lines, f_mw, b1 };
        model.validate()?;
        Ok(model)
    }

    /// Emit the key=value schema this type parses.
    pub fn to_config_str(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("f_mw_hz = {:e}\n", self.f_mw));
        s.push_str(&format!("b1_t = {:e}\n", self.b1));
        for l in &self.lines {
            s.push_str(&format!(
                "line = {} g={:e} offset_t={:e} fwhm_t={:e} weight={:e}\n",
                l.species, l.g_center, l.field_offset, l.fwhm, l.weight
            ));
        }
        s
    }
}

/// Quadrature scheme for the ensemble average.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QuadratureScheme {
    GaussHermite,
    MonteCarlo,
}

/// How the joint detuning distribution is sampled.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureSpec {
    pub scheme: QuadratureScheme,
    /// Offset samples per spin. The total number of pair evaluations is the
    /// square of this count for both schemes.
    pub points_per_spin: usize,
    /// Monte Carlo seed (ignored by Gauss-Hermite).
    pub seed: u64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            scheme: QuadratureScheme::GaussHermite,
            points_per_spin: 32,
            seed: 0,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.points_per_spin < 1 {
            return Err(CoreError::Config("points_per_spin must be >= 1".into()));
        }
        Ok(())
    }
}

/// One sampled pair: quadrature weight and the two detunings (rad/s).
#[derive(Clone, Copy, Debug)]
pub struct PairDraw<T: Scalar> {
    pub weight: T,
    pub delta_a: T,
    pub delta_b: T,
}

/// Gauss-Hermite nodes and weights for integrals against exp(-x^2),
/// physicists' convention. Computed by Newton iteration on the recurrence.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = (n + 1) / 2;
    let mut z = 0.0_f64;
    for i in 0..m {
        z = match i {
            0 => (2.0 * n as f64 + 1.0).sqrt() - 1.85575 * (2.0 * n as f64 + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * (n as f64).powf(0.426) / z,
            2 => 1.86 * z - 0.86 * nodes[0],
            3 => 1.91 * z - 0.91 * nodes[1],
            _ => 2.0 * z - nodes[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..200 {
            let mut p1 = std::f64::consts::PI.powf(-0.25);
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = z * (2.0 / (j as f64 + 1.0)).sqrt() * p2
                    - (j as f64 / (j as f64 + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * n as f64).sqrt() * p2;
            let dz = p1 / pp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = z;
        nodes[n - 1 - i] = -z;
        weights[i] = 2.0 / (pp * pp);
        weights[n - 1 - i] = weights[i];
    }
    // ascending order
    nodes.reverse();
    weights.reverse();
    (nodes, weights)
}

/// Detuning applied to a frozen partner when its species has no lines:
/// far enough off resonance that the spin is a spectator.
fn frozen_partner_detuning<T: Scalar>() -> T {
    T::of(2.0 * std::f64::consts::PI * 2.0e9)
}

fn class_samples<T: Scalar>(
    model: &SpectralModel<T>,
    class: SpeciesClass,
    points: usize,
    b0: T,
) -> Result<Vec<(T, T)>> {
    let lines: Vec<_> = model.class_lines(class).collect();
    let mut out = Vec::new();
    if lines.is_empty() {
        out.push((T::one(), frozen_partner_detuning::<T>()));
        return Ok(out);
    }
    for l in &lines {
        let n = ((T::of(points as f64) * l.weight)
            .round()
            .to_f64()
            .unwrap_or(1.0) as usize)
            .max(1);
        let (nodes, ws) = gauss_hermite(n);
        let sigma = fwhm_to_sigma(l.fwhm);
        let norm = T::of(std::f64::consts::PI.sqrt());
        for (x, w) in nodes.iter().zip(ws.iter()) {
            let offset = T::of(2.0_f64.sqrt()) * sigma * T::of(*x);
            let weight = l.weight * T::of(*w) / norm;
            out.push((weight, detuning(l, b0, offset, model.f_mw)?));
        }
    }
    Ok(out)
}

/// Deterministic pair draws for the joint (donor, interface) distribution.
///
/// Gauss-Hermite: `points_per_spin` nodes per spin, split across the
/// species' lines in proportion to their weights, tensored between the two
/// spins. Monte Carlo: `points_per_spin^2` seeded pair draws with equal
/// weights. Order is fixed in both cases.
pub fn pair_draws<T: Scalar>(
    model: &SpectralModel<T>,
    quad: &QuadratureSpec,
    b0: T,
) -> Result<Vec<PairDraw<T>>> {
    model.validate()?;
    quad.validate()?;
    if model.lines.is_empty() {
        return Err(CoreError::Config("spectral model has no lines".into()));
    }
    match quad.scheme {
        QuadratureScheme::GaussHermite => {
            let sa = class_samples(model, SpeciesClass::Donor, quad.points_per_spin, b0)?;
            let sb = class_samples(model, SpeciesClass::Interface, quad.points_per_spin, b0)?;
            let mut out = Vec::with_capacity(sa.len() * sb.len());
            for (wa, da) in &sa {
                for (wb, db) in &sb {
                    out.push(PairDraw {
                        weight: *wa * *wb,
                        delta_a: *da,
                        delta_b: *db,
                    });
                }
            }
            Ok(out)
        }
        QuadratureScheme::MonteCarlo => {
            let n = quad.points_per_spin * quad.points_per_spin;
            let mut rng = ChaCha8Rng::seed_from_u64(quad.seed);
            let donors: Vec<_> = model.class_lines(SpeciesClass::Donor).collect();
            let interfaces: Vec<_> = model.class_lines(SpeciesClass::Interface).collect();
            let w = T::one() / T::of(n as f64);
            let mut out = Vec::with_capacity(n);
            for _ in 0..n {
                let da = sample_class(&donors, model.f_mw, b0, &mut rng)?;
                let db = sample_class(&interfaces, model.f_mw, b0, &mut rng)?;
                out.push(PairDraw {
                    weight: w,
                    delta_a: da,
                    delta_b: db,
                });
            }
            Ok(out)
        }
    }
}

/// Uniform in [0, 1) from the top 53 bits of one u64 draw.
fn uniform01(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn sample_class<T: Scalar>(
    lines: &[&SpectralLine<T>],
    f_mw: T,
    b0: T,
    rng: &mut ChaCha8Rng,
) -> Result<T> {
    if lines.is_empty() {
        // burn the same number of random draws as the sampled branch so the
        // stream stays aligned across models
        let _ = uniform01(rng);
        let _ = standard_normal(rng);
        return Ok(frozen_partner_detuning::<T>());
    }
    let u = T::of(uniform01(rng));
    let mut acc = T::zero();
    let mut chosen = lines[lines.len() - 1];
    for l in lines {
        acc = acc + l.weight;
        if u < acc {
            chosen = l;
            break;
        }
    }
    let offset = fwhm_to_sigma(chosen.fwhm) * T::of(standard_normal(rng));
    detuning(chosen, b0, offset, f_mw)
}

/// Box-Muller standard normal; two uniforms per call keeps the stream layout
/// simple and platform-stable.
fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1 = uniform01(rng).max(1e-300);
    let u2 = uniform01(rng);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Pair parameters for one draw.
fn draw_params<T: Scalar>(base: &PairParams<T>, draw: &PairDraw<T>, omega1: T) -> PairParams<T> {
    PairParams {
        delta_a: draw.delta_a,
        delta_b: draw.delta_b,
        omega1,
        ..*base
    }
}

/// Propagate one resolved timeline from the steady state.
///
/// `leak_omega1 > 0` models residual drive during the nominal delays
/// (microwave switch leakage); zero gives strict free evolution.
pub fn run_timeline<T: Scalar>(
    events: &[Event<T>],
    params: &PairParams<T>,
    leak_omega1: T,
) -> Result<PairState<T>> {
    let mut state = PairState::steady_state();
    for ev in events {
        state = match ev {
            Event::Pulse {
                phase, duration, ..
            } => {
                let p = PairParams {
                    phase: *phase,
                    ..*params
                };
                propagate_pulse(&state, &p, *duration)?
            }
            Event::Delay { duration } => {
                if leak_omega1 > T::zero() {
                    let p = PairParams {
                        omega1: leak_omega1,
                        phase: T::zero(),
                        ..*params
                    };
                    propagate_pulse(&state, &p, *duration)?
                } else {
                    propagate_free(&state, params, *duration)?
                }
            }
        };
    }
    Ok(state)
}

/// Ensemble-averaged singlet excess of one resolved timeline at field `b0`.
///
/// Zero-duration sequences give exactly zero. The reduction order is the
/// draw order, so a fixed [`QuadratureSpec`] is bit-reproducible.
pub fn average_q<T: Scalar>(
    model: &SpectralModel<T>,
    quad: &QuadratureSpec,
    events: &[Event<T>],
    params_base: &PairParams<T>,
    b0: T,
) -> Result<T> {
    average_q_with_leak(model, quad, events, params_base, b0, T::zero())
}

pub fn average_q_with_leak<T: Scalar>(
    model: &SpectralModel<T>,
    quad: &QuadratureSpec,
    events: &[Event<T>],
    params_base: &PairParams<T>,
    b0: T,
    leak_omega1: T,
) -> Result<T> {
    let omega1 = model.rabi_angular_frequency();
    let ss = PairState::steady_state();
    let mut acc = T::zero();
    for draw in pair_draws(model, quad, b0)? {
        let p = draw_params(params_base, &draw, omega1);
        let end = run_timeline(events, &p, leak_omega1)?;
        acc = acc + draw.weight * singlet_excess(&end, &ss)?;
    }
    Ok(acc)
}

/// Per-draw compiled propagator for one event.
enum EventOp<T: Scalar> {
    /// gamma_phi = 0: rho -> U rho U^dagger.
    Sandwich(crate::mat::CMatrix<T, 4>),
    /// general: vec(rho) -> M vec(rho).
    Super(Box<crate::mat::CMatrix<T, 16>>),
}

impl<T: Scalar> EventOp<T> {
    fn build(params: &PairParams<T>, duration: T) -> Self {
        use num_complex::Complex;
        if params.gamma_phi == T::zero() {
            let heff = crate::spin::effective_hamiltonian(params)
                .scale(Complex::new(T::zero(), -duration));
            EventOp::Sandwich(heff.expm())
        } else {
            EventOp::Super(Box::new(
                crate::spin::liouvillian(params).scale_re(duration).expm(),
            ))
        }
    }

    fn compose_after(&self, earlier: &Self) -> Self {
        match (self, earlier) {
            (EventOp::Sandwich(a), EventOp::Sandwich(b)) => EventOp::Sandwich(a * b),
            (EventOp::Super(a), EventOp::Super(b)) => EventOp::Super(Box::new(&**a * &**b)),
            _ => unreachable!("mixed propagator routes within one draw"),
        }
    }

    fn apply(&self, rho: &PairState<T>) -> PairState<T> {
        match self {
            EventOp::Sandwich(u) => {
                let m = &(u * rho.matrix()) * &u.adjoint();
                PairState::from_matrix_unchecked(m)
            }
            EventOp::Super(m) => {
                let mut v = [num_complex::Complex::new(T::zero(), T::zero()); 16];
                for j in 0..4 {
                    for i in 0..4 {
                        v[i + 4 * j] = rho.matrix()[(i, j)];
                    }
                }
                let w = m.mul_vec(&v);
                PairState::from_matrix_unchecked(crate::mat::CMatrix::from_fn(|i, j| w[i + 4 * j]))
            }
        }
    }
}

/// Per-point results of a swept-sequence evaluation.
pub struct SweepResult<T: Scalar> {
    /// Sweep axis values (seconds).
    pub axis: Vec<T>,
    /// Averaged singlet excess per point.
    pub q: Vec<T>,
}

/// Evaluate a one-axis compiled sequence over its whole sweep, reusing the
/// per-draw event propagators across sweep points. Requires a uniform sweep
/// grid (the builders produce one); the step propagator is composed
/// incrementally, which is exact for a piecewise-constant generator.
pub fn sweep_q<T: Scalar>(
    model: &SpectralModel<T>,
    quad: &QuadratureSpec,
    seq: &PulseSequence<T>,
    params_base: &PairParams<T>,
    b0: T,
    leak_omega1: T,
) -> Result<SweepResult<T>> {
    if seq.sweep_axes.len() != 1 {
        return Err(CoreError::Compile(
            "sweep_q needs exactly one sweep axis".into(),
        ));
    }
    let axis = &seq.sweep_axes[0];
    if !axis.is_uniform() {
        return Err(CoreError::Compile("sweep axis must be uniform".into()));
    }
    let values = &axis.values;
    let npts = values.len();
    let omega1 = model.rabi_angular_frequency();
    let ss = PairState::steady_state();
    let ss_fraction = T::zero(); // steady state |dd> has zero singlet content
    debug_assert!(crate::spin::singlet_fraction(&ss) == ss_fraction);

    let mut q = vec![T::zero(); npts];
    for draw in pair_draws(model, quad, b0)? {
        let p = draw_params(params_base, &draw, omega1);
        let p_free = PairParams {
            omega1: leak_omega1,
            phase: T::zero(),
            ..p
        };
        // fixed-event propagators
        let fixed: Vec<Option<EventOp<T>>> = seq
            .events
            .iter()
            .map(|ev| match ev {
                EventTemplate::Pulse {
                    phase, duration, ..
                } => Some(EventOp::build(
                    &PairParams { phase: *phase, ..p },
                    *duration,
                )),
                EventTemplate::Delay { duration } => Some(EventOp::build(&p_free, *duration)),
                _ => None,
            })
            .collect();
        // swept propagators: start value and one uniform step
        let step = if npts > 1 {
            values[1] - values[0]
        } else {
            T::zero()
        };
        let mut swept_delay: Option<EventOp<T>> = None;
        let mut swept_pulse: Vec<Option<EventOp<T>>> =
            (0..seq.events.len()).map(|_| None).collect();
        let mut delay_step: Option<EventOp<T>> = None;
        let mut pulse_steps: Vec<Option<EventOp<T>>> =
            (0..seq.events.len()).map(|_| None).collect();
        for (k, ev) in seq.events.iter().enumerate() {
            match ev {
                EventTemplate::SweptDelay { .. } if swept_delay.is_none() => {
                    swept_delay = Some(EventOp::build(&p_free, values[0]));
                    delay_step = Some(EventOp::build(&p_free, step));
                }
                EventTemplate::SweptPulse { phase, .. } => {
                    let pp = PairParams { phase: *phase, ..p };
                    swept_pulse[k] = Some(EventOp::build(&pp, values[0]));
                    pulse_steps[k] = Some(EventOp::build(&pp, step));
                }
                _ => {}
            }
        }

        for (ki, qk) in q.iter_mut().enumerate() {
            let mut rho = ss.clone();
            for (k, ev) in seq.events.iter().enumerate() {
                rho = match ev {
                    EventTemplate::Pulse { .. } | EventTemplate::Delay { .. } => {
                        fixed[k].as_ref().unwrap().apply(&rho)
                    }
                    EventTemplate::SweptDelay { .. } => swept_delay.as_ref().unwrap().apply(&rho),
                    EventTemplate::SweptPulse { .. } => swept_pulse[k].as_ref().unwrap().apply(&rho),
                };
            }
            *qk = *qk + draw.weight * (crate::spin::singlet_fraction(&rho) - rho.trace() * ss_fraction);
            // advance the swept propagators to the next grid value
            if ki + 1 < npts {
                if let (Some(sd), Some(ds)) = (&swept_delay, &delay_step) {
                    swept_delay = Some(ds.compose_after(sd));
                }
                for k in 0..seq.events.len() {
                    if let Some(sp) = &swept_pulse[k] {
                        swept_pulse[k] = Some(pulse_steps[k].as_ref().unwrap().compose_after(sp));
                    }
                }
            }
        }
    }
    Ok(SweepResult {
        axis: values.clone(),
        q,
    })
}

/// Echo-decay series for the Carr-Purcell sequence with tau1 = tau2 = tau.
///
/// For every tau this returns the averaged singlet excess of the echo
/// sequence and of a dephased reference in which each delay is followed by
/// full loss of the inhomogeneous coherences (keeping only product-basis
/// populations). The reference is the non-refocused background; the
/// difference `q - q_ref` isolates the echo amplitude.
pub struct DecaySeries<T: Scalar> {
    /// Total free evolution per point, 2 tau (seconds).
    pub total: Vec<T>,
    /// Echo-sequence singlet excess.
    pub q: Vec<T>,
    /// Dephased-reference singlet excess.
    pub q_ref: Vec<T>,
}

pub fn echo_decay_series<T: Scalar>(
    model: &SpectralModel<T>,
    quad: &QuadratureSpec,
    taus: &[T],
    params_base: &PairParams<T>,
    b0: T,
    leak_omega1: T,
) -> Result<DecaySeries<T>> {
    if taus.len() < 2 {
        return Err(CoreError::Config("need at least two tau values".into()));
    }
    let step = taus[1] - taus[0];
    for w in taus.windows(2) {
        if ((w[1] - w[0]) - step).abs() > step.abs() * T::of(1e-9) {
            return Err(CoreError::Config("tau grid must be uniform".into()));
        }
    }
    let omega1 = model.rabi_angular_frequency();
    let t90 = T::pi() * T::half() / omega1;
    let ss = PairState::<T>::steady_state();

    let n = taus.len();
    let mut q = vec![T::zero(); n];
    let mut q_ref = vec![T::zero(); n];
    for draw in pair_draws(model, quad, b0)? {
        let p = draw_params(params_base, &draw, omega1);
        let p_free = PairParams {
            omega1: leak_omega1,
            phase: T::zero(),
            ..p
        };
        let p90 = EventOp::build(&p, t90);
        let p180 = p90.compose_after(&p90);
        let f_step = EventOp::build(&p_free, step);
        let mut f_tau = EventOp::build(&p_free, taus[0]);

        for k in 0..n {
            let a = p90.apply(&ss);
            // echo branch
            let e = p90.apply(&f_tau.apply(&p180.apply(&f_tau.apply(&a))));
            q[k] = q[k] + draw.weight * crate::spin::singlet_fraction(&e);
            // dephased reference branch
            let r1 = f_tau.apply(&a).dephased();
            let r2 = f_tau.apply(&p180.apply(&r1)).dephased();
            let r = p90.apply(&r2);
            q_ref[k] = q_ref[k] + draw.weight * crate::spin::singlet_fraction(&r);
            if k + 1 < n {
                f_tau = f_step.compose_after(&f_tau);
            }
        }
    }
    Ok(DecaySeries {
        total: taus.iter().map(|t| *t * T::two()).collect(),
        q,
        q_ref,
    })
}
