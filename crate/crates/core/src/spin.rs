//! Exact dynamics of one weakly coupled electron spin pair.
//!
//! The pair lives in the product basis `{|uu>, |ud>, |du>, |dd>}` where the
//! first arrow is spin a (donor) and the second spin b (interface partner),
//! `u` meaning m_s = +1/2. The rotating-frame generator is
//!
//! ```text
//! d rho/dt = -i [H, rho]
//!            - r_s/2 {P_S, rho} - r_t/2 {P_T, rho}
//!            + gamma_phi/2 (Za rho Za - rho) + gamma_phi/2 (Zb rho Zb - rho)
//!
//! H = delta_a/2 Za + delta_b/2 Zb
//!   + omega1/2 [cos(phase)(Xa + Xb) + sin(phase)(Ya + Yb)]
//!   + j_ex (Sa . Sb)
//! ```
//!
//! The recombination terms are plain anticommutators: singlet pairs leave the
//! ensemble at rate `r_s` (triplets at `r_t`), so the trace of `rho` shrinks.
//! The dephasing rate convention is chosen so a single-spin coherence decays
//! at exactly `gamma_phi = 1/T2`.
//!
//! Propagation over one piecewise-constant segment is an exact matrix
//! exponential, never a time-stepper. Two algebraically equivalent routes are
//! used: with `gamma_phi == 0` the whole generator is a similarity sandwich
//! `rho -> U rho U^dagger` with the non-Hermitian `U = exp(-i H_eff t)`,
//! `H_eff = H - i/2 (r_s P_S + r_t P_T)`; otherwise the full 16x16
//! Liouvillian is exponentiated. Both routes are checked against an
//! independent brute-force oracle in the tests.

use crate::error::{CoreError, Result};
use crate::mat::{kron4, CMatrix, C};
use crate::scalar::Scalar;
use num_traits::{One, Zero};

/// Density matrix of one P-Pb0 spin pair.
///
/// Invariants (enforced by [`PairState::from_density_matrix`]): Hermitian to
/// 1e-12, eigenvalues >= -1e-10, trace in [0, 1 + 1e-12]. Trace below one is
/// meaningful: recombined pairs have left the ensemble.
#[derive(Clone, Debug, PartialEq)]
pub struct PairState<T: Scalar> {
    rho: CMatrix<T, 4>,
}

/// Rotating-frame Hamiltonian and dissipation parameters. Angular
/// frequencies and rates are in rad/s and 1/s.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairParams<T: Scalar> {
    /// Detuning of spin a (the P donor) in rad/s.
    pub delta_a: T,
    /// Detuning of spin b (the interface partner) in rad/s.
    pub delta_b: T,
    /// Angular Rabi frequency g mu_B B1 / hbar in rad/s.
    pub omega1: T,
    /// Drive phase in rad (0 = x, pi/2 = y).
    pub phase: T,
    /// Singlet recombination rate in 1/s.
    pub r_s: T,
    /// Triplet recombination rate in 1/s.
    pub r_t: T,
    /// Pure dephasing rate 1/T2 per spin in 1/s.
    pub gamma_phi: T,
    /// Exchange coupling in rad/s. Zero in the weak-coupling regime.
    pub j_ex: T,
}

impl<T: Scalar> Default for PairParams<T> {
    fn default() -> Self {
        Self {
            delta_a: T::zero(),
            delta_b: T::zero(),
            omega1: T::zero(),
            phase: T::zero(),
            r_s: T::zero(),
            r_t: T::zero(),
            gamma_phi: T::zero(),
            j_ex: T::zero(),
        }
    }
}

impl<T: Scalar> PairParams<T> {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.delta_a,
            self.delta_b,
            self.omega1,
            self.phase,
            self.r_s,
            self.r_t,
            self.gamma_phi,
            self.j_ex,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(CoreError::InvalidArgument(
                "pair parameters must be finite".into(),
            ));
        }
        if self.r_s < T::zero()
            || self.r_t < T::zero()
            || self.gamma_phi < T::zero()
            || self.omega1 < T::zero()
        {
            return Err(CoreError::InvalidArgument(
                "rates and drive amplitude must be non-negative".into(),
            ));
        }
        Ok(())
    }

    fn free(&self) -> Self {
        Self {
            omega1: T::zero(),
            phase: T::zero(),
            ..*self
        }
    }
}

/// Singlet and triplet projectors of the pair.
pub struct Projectors<T: Scalar> {
    pub p_s: CMatrix<T, 4>,
    pub p_t: CMatrix<T, 4>,
}

impl<T: Scalar> Projectors<T> {
    pub fn new() -> Self {
        Self {
            p_s: singlet_projector(),
            p_t: triplet_projector(),
        }
    }
}

impl<T: Scalar> Default for Projectors<T> {
    fn default() -> Self {
        Self::new()
    }
}

/// |S><S| with |S> = (|ud> - |du>)/sqrt(2).
pub fn singlet_projector<T: Scalar>() -> CMatrix<T, 4> {
    let h = T::half();
    let mut p = CMatrix::zeros();
    p[(1, 1)] = C::new(h, T::zero());
    p[(2, 2)] = C::new(h, T::zero());
    p[(1, 2)] = C::new(-h, T::zero());
    p[(2, 1)] = C::new(-h, T::zero());
    p
}

/// I - |S><S|.
pub fn triplet_projector<T: Scalar>() -> CMatrix<T, 4> {
    CMatrix::identity() - singlet_projector()
}

fn sigma_x<T: Scalar>() -> CMatrix<T, 2> {
    let mut m = CMatrix::zeros();
    m[(0, 1)] = C::one();
    m[(1, 0)] = C::one();
    m
}

fn sigma_y<T: Scalar>() -> CMatrix<T, 2> {
    let mut m = CMatrix::zeros();
    m[(0, 1)] = C::new(T::zero(), -T::one());
    m[(1, 0)] = C::new(T::zero(), T::one());
    m
}

fn sigma_z<T: Scalar>() -> CMatrix<T, 2> {
    let mut m = CMatrix::zeros();
    m[(0, 0)] = C::one();
    m[(1, 1)] = -C::<T>::one();
    m
}

fn kron2<T: Scalar>(a: &CMatrix<T, 2>, b: &CMatrix<T, 2>) -> CMatrix<T, 4> {
    CMatrix::from_fn(|i, j| a[(i / 2, j / 2)] * b[(i % 2, j % 2)])
}

/// Pauli operator on spin a tensored with identity on b.
pub fn op_a<T: Scalar>(s: &CMatrix<T, 2>) -> CMatrix<T, 4> {
    kron2(s, &CMatrix::identity())
}

/// Identity on spin a tensored with a Pauli operator on b.
pub fn op_b<T: Scalar>(s: &CMatrix<T, 2>) -> CMatrix<T, 4> {
    kron2(&CMatrix::identity(), s)
}

/// Coherent rotating-frame Hamiltonian divided by hbar, in rad/s.
pub fn hamiltonian<T: Scalar>(p: &PairParams<T>) -> CMatrix<T, 4> {
    let h = T::half();
    let za = op_a(&sigma_z());
    let zb = op_b(&sigma_z());
    let xa = op_a(&sigma_x());
    let xb = op_b(&sigma_x());
    let ya = op_a(&sigma_y());
    let yb = op_b(&sigma_y());

    let mut ham = za.scale_re(p.delta_a * h) + zb.scale_re(p.delta_b * h);
    if p.omega1 != T::zero() {
        let cx = p.omega1 * h * p.phase.cos();
        let cy = p.omega1 * h * p.phase.sin();
        ham = ham + (xa + xb).scale_re(cx) + (ya + yb).scale_re(cy);
    }
    if p.j_ex != T::zero() {
        // Sa . Sb = (Xa Xb + Ya Yb + Za Zb)/4 in units of hbar^2
        let q = T::of(0.25);
        let dot = (&op_a(&sigma_x()) * &op_b(&sigma_x()))
            + (&op_a(&sigma_y()) * &op_b(&sigma_y()))
            + (&op_a(&sigma_z()) * &op_b(&sigma_z()));
        ham = ham + dot.scale_re(p.j_ex * q);
    }
    ham
}

/// Non-Hermitian effective Hamiltonian H - i/2 (r_s P_S + r_t P_T).
pub fn effective_hamiltonian<T: Scalar>(p: &PairParams<T>) -> CMatrix<T, 4> {
    let ham = hamiltonian(p);
    let decay = singlet_projector().scale_re(p.r_s) + triplet_projector().scale_re(p.r_t);
    ham + decay.scale(C::new(T::zero(), -T::half()))
}

/// Full 16x16 Liouvillian acting on column-stacked vec(rho).
pub fn liouvillian<T: Scalar>(p: &PairParams<T>) -> CMatrix<T, 16> {
    let id = CMatrix::<T, 4>::identity();
    let ham = hamiltonian(p);
    let mi = C::new(T::zero(), -T::one());
    // -i (I (x) H - H^T (x) I)
    let mut l = (kron4(&id, &ham) - kron4(&ham.transpose(), &id)).scale(mi);

    let half = T::half();
    let ps = singlet_projector::<T>();
    let pt = triplet_projector::<T>();
    let anti = |proj: &CMatrix<T, 4>, rate: T| -> CMatrix<T, 16> {
        (kron4(&id, proj) + kron4(&proj.transpose(), &id)).scale_re(-rate * half)
    };
    l = l + anti(&ps, p.r_s) + anti(&pt, p.r_t);

    if p.gamma_phi != T::zero() {
        let za = op_a(&sigma_z());
        let zb = op_b(&sigma_z());
        let i16 = CMatrix::<T, 16>::identity();
        let deph = |z: &CMatrix<T, 4>| -> CMatrix<T, 16> {
            (kron4(&z.transpose(), z) - i16.clone()).scale_re(p.gamma_phi * half)
        };
        l = l + deph(&za) + deph(&zb);
    }
    l
}

fn vec_rho<T: Scalar>(rho: &CMatrix<T, 4>) -> [C<T>; 16] {
    // column stacking: v[i + 4 j] = rho[i, j]
    let mut v = [C::zero(); 16];
    for j in 0..4 {
        for i in 0..4 {
            v[i + 4 * j] = rho[(i, j)];
        }
    }
    v
}

fn unvec_rho<T: Scalar>(v: &[C<T>; 16]) -> CMatrix<T, 4> {
    CMatrix::from_fn(|i, j| v[i + 4 * j])
}

impl<T: Scalar> PairState<T> {
    /// The steady-state pair configuration |dd><dd| (both spins down).
    pub fn steady_state() -> Self {
        let mut rho = CMatrix::zeros();
        rho[(3, 3)] = C::one();
        Self { rho }
    }

    /// Pure state from amplitudes in the product basis (normalized by the
    /// caller; the norm becomes the trace).
    pub fn from_pure(amplitudes: [C<T>; 4]) -> Self {
        let rho = CMatrix::from_fn(|i, j| amplitudes[i] * amplitudes[j].conj());
        Self { rho }
    }

    /// Validating constructor for an arbitrary density matrix.
    pub fn from_density_matrix(rho: CMatrix<T, 4>) -> Result<Self> {
        if !rho.is_finite() {
            return Err(CoreError::InvalidArgument(
                "density matrix has non-finite entries".into(),
            ));
        }
        let herm = rho.max_abs_diff(&rho.adjoint());
        if herm > T::of(1e-12) {
            return Err(CoreError::InvalidArgument(format!(
                "density matrix not Hermitian (deviation {herm:e})"
            )));
        }
        let tr = rho.trace().re;
        if tr < -T::of(1e-12) || tr > T::one() + T::of(1e-12) {
            return Err(CoreError::InvalidArgument(format!(
                "trace {tr} outside [0, 1]"
            )));
        }
        let ev = rho.hermitian_eigenvalues();
        if ev[0] < -T::of(1e-10) {
            return Err(CoreError::InvalidArgument(format!(
                "negative eigenvalue {:?}",
                ev[0]
            )));
        }
        Ok(Self { rho })
    }

    /// Direct wrapper without validation, for internal propagation results.
    pub(crate) fn from_matrix_unchecked(rho: CMatrix<T, 4>) -> Self {
        Self { rho }
    }

    pub fn matrix(&self) -> &CMatrix<T, 4> {
        &self.rho
    }

    pub fn trace(&self) -> T {
        self.rho.trace().re
    }

    pub fn purity(&self) -> T {
        (&self.rho * &self.rho).trace().re
    }

    /// Zero every element that carries an inhomogeneous precession phase,
    /// i.e. keep only the product-basis populations. This is the
    /// infinite-time dephasing limit of the static offset ensemble and is
    /// used to build non-refocused reference signals.
    pub fn dephased(&self) -> Self {
        let mut rho = CMatrix::zeros();
        for i in 0..4 {
            rho[(i, i)] = C::new(self.rho[(i, i)].re, T::zero());
        }
        Self { rho }
    }
}

fn check_inputs<T: Scalar>(state: &PairState<T>, params: &PairParams<T>, duration: T) -> Result<()> {
    if !state.rho.is_finite() {
        return Err(CoreError::InvalidArgument(
            "state matrix has non-finite entries".into(),
        ));
    }
    params.validate()?;
    if !(duration >= T::zero()) || !duration.is_finite() {
        return Err(CoreError::InvalidArgument(format!(
            "duration must be finite and non-negative, got {duration}"
        )));
    }
    Ok(())
}

fn propagate<T: Scalar>(
    state: &PairState<T>,
    params: &PairParams<T>,
    duration: T,
) -> Result<PairState<T>> {
    check_inputs(state, params, duration)?;
    if duration == T::zero() {
        return Ok(state.clone());
    }
    if params.gamma_phi == T::zero() {
        // rho -> U rho U^dagger with U = exp(-i H_eff t)
        let heff = effective_hamiltonian(params).scale(C::new(T::zero(), -duration));
        let u = heff.expm();
        let rho = &(&u * &state.rho) * &u.adjoint();
        Ok(PairState::from_matrix_unchecked(rho))
    } else {
        let l = liouvillian(params).scale_re(duration);
        let prop = l.expm();
        let v = prop.mul_vec(&vec_rho(&state.rho));
        Ok(PairState::from_matrix_unchecked(unvec_rho(&v)))
    }
}

/// Evolve under the full generator with the drive on, for `duration` seconds.
pub fn propagate_pulse<T: Scalar>(
    state: &PairState<T>,
    params: &PairParams<T>,
    duration: T,
) -> Result<PairState<T>> {
    propagate(state, params, duration)
}

/// Free evolution: same generator with the drive amplitude set to zero.
pub fn propagate_free<T: Scalar>(
    state: &PairState<T>,
    params: &PairParams<T>,
    duration: T,
) -> Result<PairState<T>> {
    propagate(state, &params.free(), duration)
}

/// Tr(P_S rho): singlet content of the pair, in [0, trace].
pub fn singlet_fraction<T: Scalar>(state: &PairState<T>) -> T {
    let ps = singlet_projector::<T>();
    (&ps * &state.rho).trace().re
}

/// Trace-normalized deviation of the singlet fraction from the steady state.
///
/// `Tr(P_S rho_end)/Tr(rho_end) - Tr(P_S rho_ss)/Tr(rho_ss)`; the per-state
/// normalization keeps pair loss during the sequence from masquerading as
/// singlet excess.
pub fn q_raw<T: Scalar>(state_end: &PairState<T>, state_steady: &PairState<T>) -> Result<T> {
    let tr_end = state_end.trace();
    let tr_ss = state_steady.trace();
    let tiny = T::of(1e-300);
    if tr_end.abs() < tiny || tr_ss.abs() < tiny {
        return Err(CoreError::DegenerateState(
            "zero-trace state in q_raw".into(),
        ));
    }
    Ok(singlet_fraction(state_end) / tr_end - singlet_fraction(state_steady) / tr_ss)
}

/// Absolute singlet excess per initial pair:
/// `Tr(P_S rho_end) - Tr(rho_end) * Tr(P_S rho_ss)/Tr(rho_ss)`.
///
/// This is the quantity the charge transient amplitude is proportional to:
/// every excess singlet pair present at the end of the sequence contributes
/// one recombination event. Unlike [`q_raw`] it weights surviving pairs
/// absolutely, which is what makes the echo-decay rate come out as
/// `1/T2 + r_s/4`.
pub fn singlet_excess<T: Scalar>(state_end: &PairState<T>, state_steady: &PairState<T>) -> Result<T> {
    let tr_ss = state_steady.trace();
    if tr_ss.abs() < T::of(1e-300) {
        return Err(CoreError::DegenerateState(
            "zero-trace steady state in singlet_excess".into(),
        ));
    }
    let ss_fraction = singlet_fraction(state_steady) / tr_ss;
    Ok(singlet_fraction(state_end) - state_end.trace() * ss_fraction)
}
