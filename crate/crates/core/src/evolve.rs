//! Time evolution through a pulse schedule.
//!
//! Closed dynamics use exact propagation in the eigenbasis of the chain
//! Hamiltonian (one eigendecomposition per distinct Hamiltonian, reused for
//! every segment). Noisy dynamics integrate the master equation
//!   dρ/dt = −i[H,ρ] + Σ_k (LρL† − ½{L†L, ρ})
//! with a fixed-step fourth-order scheme. Carrier-resolved pulses use a
//! midpoint-exponential stepper, which is unitary at every step.
//!
//! Sampling convention: observables are recorded on the uniform grid
//! t_j = j·T_D/sample_rate. The grid point at a period boundary is recorded
//! after the pulse completes, so index j = n·sample_rate always holds the
//! stroboscopic post-pulse state.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;

use crate::drive::{
    drive_hamiltonian_scaled, global_pulse_operator, PulseKind, PulseSchedule, PulseSpec, Segment,
};
use crate::error::{Error, Result};
use crate::linalg;
use crate::models::CircuitParams;
use crate::spin::{
    embed_single, pauli, DensityMatrix, HilbertSpace, Pauli, SpinOperator, State, StateVector,
};

/// Sub-steps per carrier period when resolving lab-frame pulses.
const LAB_STEPS_PER_CARRIER: f64 = 256.0;
/// Fixed master-equation steps per driving period (ζ-independent part).
const LINDBLAD_STEPS_PER_PERIOD: f64 = 256.0;
/// Positivity floor for final density-matrix checks.
const LINDBLAD_POSITIVITY_TOL: f64 = 1e-6;
/// Stability bound for the explicit master-equation stepper: the step is
/// shrunk until ‖H‖·dt stays below this during stiff (pulse) segments.
const RK4_NORM_DT_CAP: f64 = 0.1;

/// A unitary time-step operator e^{−iH·dt}.
#[derive(Clone, Debug)]
pub struct Propagator {
    pub unitary: Array2<C64>,
    pub duration: f64,
}

/// Exact propagator from the eigendecomposition of a hermitian H.
pub fn propagator(h: &SpinOperator, dt: f64) -> Result<Propagator> {
    if !h.is_hermitian() {
        return Err(Error::NotHermitian(linalg::hermiticity_deviation(
            h.matrix(),
        )));
    }
    let eig = EigenPropagator::new(h.matrix())?;
    let u = eig.unitary(dt);
    let dev = linalg::unitarity_deviation(&u);
    if dev > 1e-10 {
        return Err(Error::Linalg(format!(
            "propagator lost unitarity (deviation {dev:.3e})"
        )));
    }
    Ok(Propagator {
        unitary: u,
        duration: dt,
    })
}

/// Eigenbasis of a hermitian operator, used to advance states by arbitrary
/// durations without re-diagonalizing.
struct EigenPropagator {
    vals: Vec<f64>,
    vecs: Array2<C64>,
    vecs_adj: Array2<C64>,
}

impl EigenPropagator {
    fn new(h: &Array2<C64>) -> Result<Self> {
        let (vals, vecs) = linalg::eigh(h)?;
        let vecs_adj = linalg::adjoint(&vecs);
        Ok(Self {
            vals,
            vecs,
            vecs_adj,
        })
    }

    fn advance(&self, psi: &mut Array1<C64>, dt: f64) {
        if dt == 0.0 {
            return;
        }
        let mut tilde = self.vecs_adj.dot(psi);
        for (a, lam) in tilde.iter_mut().zip(&self.vals) {
            *a *= C64::from_polar(1.0, -lam * dt);
        }
        *psi = self.vecs.dot(&tilde);
    }

    fn unitary(&self, dt: f64) -> Array2<C64> {
        let phases = Array2::from_diag(
            &self
                .vals
                .iter()
                .map(|lam| C64::from_polar(1.0, -lam * dt))
                .collect::<Array1<C64>>(),
        );
        self.vecs.dot(&phases).dot(&self.vecs_adj)
    }
}

/// Noise channels attached to every site (or one collective channel).
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum NoiseChannel {
    Relaxation,
    Dephasing,
}

/// Noise rate and channel selection. Relaxation uses L = √ζ σ⁻ and
/// dephasing L = √(ζ/2) σᶻ; with `per_site` every site gets its own
/// channel, otherwise a single collective operator is used.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseSpec {
    pub zeta: f64,
    pub channels: Vec<NoiseChannel>,
    pub per_site: bool,
}

impl NoiseSpec {
    pub fn new(zeta: f64, channels: Vec<NoiseChannel>, per_site: bool) -> Result<Self> {
        if zeta.is_nan() || zeta < 0.0 || zeta.is_infinite() {
            return Err(Error::InvalidParameter(format!(
                "zeta must be finite and non-negative, got {zeta}"
            )));
        }
        Ok(Self {
            zeta,
            channels,
            per_site,
        })
    }

    pub fn none() -> Self {
        Self {
            zeta: 0.0,
            channels: Vec::new(),
            per_site: true,
        }
    }

    pub fn relaxation(zeta: f64) -> Result<Self> {
        Self::new(zeta, vec![NoiseChannel::Relaxation], true)
    }

    pub fn is_trivial(&self) -> bool {
        self.zeta == 0.0 || self.channels.is_empty()
    }

    /// Collapse operators on the full space.
    pub fn collapse_operators(&self, space: HilbertSpace) -> Result<Vec<Array2<C64>>> {
        let mut ops = Vec::new();
        if self.is_trivial() {
            return Ok(ops);
        }
        for ch in &self.channels {
            let (rate, p) = match ch {
                NoiseChannel::Relaxation => (self.zeta, Pauli::Minus),
                NoiseChannel::Dephasing => (self.zeta / 2.0, Pauli::Z),
            };
            let scale = C64::new(rate.sqrt(), 0.0);
            if self.per_site {
                for site in 1..=space.n_sites() {
                    let op = embed_single(&pauli(p), site, space)?;
                    ops.push(op.matrix() * scale);
                }
            } else {
                let mut m: Array2<C64> = Array2::zeros((space.dim(), space.dim()));
                for site in 1..=space.n_sites() {
                    m += embed_single(&pauli(p), site, space)?.matrix();
                }
                ops.push(m * scale);
            }
        }
        Ok(ops)
    }
}

/// Sampled evolution: matched `times` and `states`, with the indices of the
/// post-pulse (stroboscopic) samples marked.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<State>,
    pub stroboscopic_indices: Vec<usize>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

fn schedule_pulse_checks(schedule: &PulseSchedule, space: HilbertSpace) -> Result<()> {
    for seg in &schedule.segments {
        if let Segment::Pulse(p) = seg {
            if p.n_sites() != space.n_sites() {
                return Err(Error::DimensionMismatch(format!(
                    "pulse is specified for {} sites, space has {}",
                    p.n_sites(),
                    space.n_sites()
                )));
            }
        }
    }
    Ok(())
}

/// Pulse machinery shared by the closed and open walkers.
enum PulseAction {
    Unitary(Array2<C64>),
    ConstantHamiltonian(Array2<C64>),
    LabDrive {
        params: CircuitParams,
        scale: Vec<f64>,
        dt: f64,
    },
}

fn prepare_pulse(spec: &PulseSpec, h: &Array2<C64>, space: HilbertSpace) -> Result<PulseAction> {
    match spec.kind {
        PulseKind::Instantaneous => {
            let u = global_pulse_operator(spec.theta, space, &spec.per_site_scale)?;
            Ok(PulseAction::Unitary(u.into_matrix()))
        }
        PulseKind::FiniteRwa => {
            // chain Hamiltonian stays on; the averaged resonant drive adds
            // (A/2) Σ scaleᵢ σᵢʸ
            let a = spec.amplitude.expect("validated at construction");
            let mut hp = h.clone();
            for site in 1..=space.n_sites() {
                let y = embed_single(&pauli(Pauli::Y), site, space)?;
                hp.scaled_add(
                    C64::new(0.5 * a * spec.per_site_scale[site - 1], 0.0),
                    y.matrix(),
                );
            }
            Ok(PulseAction::ConstantHamiltonian(hp))
        }
        PulseKind::FiniteLab => {
            let carrier = spec.carrier.clone().expect("validated at construction");
            let a = spec.amplitude.expect("validated at construction");
            let omega_max = carrier.iter().cloned().fold(0.0, f64::max).max(1e-12);
            let dt = (std::f64::consts::TAU / omega_max / LAB_STEPS_PER_CARRIER)
                .min(spec.duration() / 8.0);
            let n = carrier.len();
            let params = CircuitParams::new(carrier, vec![0.0; n - 1], a, 0.0, 0.0)?;
            Ok(PulseAction::LabDrive {
                params,
                scale: spec.per_site_scale.clone(),
                dt,
            })
        }
    }
}

/// Apply exp(−i dᵢ(t)·dt) for every site's drive term
/// dᵢ(t) = Aᵢcos(ωᵢt)·i(σᵢ⁺e^{iΩᵢt} − σᵢ⁻e^{−iΩᵢt}), each an analytic 2×2
/// rotation. The site terms commute, so the product is exact.
fn apply_site_drives(
    psi: &mut Array1<C64>,
    t: f64,
    dt: f64,
    params: &CircuitParams,
    scale: &[f64],
    space: HilbertSpace,
) {
    let n = space.n_sites();
    let dim = space.dim();
    for site in 1..=n {
        let omega = params.omega_q[site - 1];
        let envelope = params.amplitude * scale[site - 1] * (omega * t).cos();
        if envelope == 0.0 {
            continue;
        }
        // 2×2 generator [[0, u], [conj(u), 0]] with |u| = |envelope|
        let u = C64::new(0.0, envelope) * C64::from_polar(1.0, omega * t);
        let phi = envelope.abs() * dt;
        let a = C64::new(phi.cos(), 0.0);
        let minus_i_sin = C64::new(0.0, -phi.sin());
        let b = minus_i_sin * (u / envelope.abs());
        let c = minus_i_sin * (u.conj() / envelope.abs());
        let mask = 1usize << (n - site);
        for base in 0..dim {
            if base & mask != 0 {
                continue;
            }
            let partner = base | mask;
            let up = psi[base];
            let down = psi[partner];
            psi[base] = a * up + b * down;
            psi[partner] = c * up + a * down;
        }
    }
}

/// Evolve a pure state through the schedule under the chain Hamiltonian `h`.
pub fn evolve_closed(
    psi0: &StateVector,
    h: &SpinOperator,
    schedule: &PulseSchedule,
) -> Result<Trajectory> {
    let space = psi0.space();
    if h.space() != space {
        return Err(Error::DimensionMismatch(
            "state and Hamiltonian spaces differ".into(),
        ));
    }
    if !h.is_hermitian() {
        return Err(Error::NotHermitian(linalg::hermiticity_deviation(
            h.matrix(),
        )));
    }
    schedule_pulse_checks(schedule, space)?;

    let free = EigenPropagator::new(h.matrix())?;
    let dt_s = schedule.period / schedule.sample_rate as f64;
    let n_samples = schedule.sample_rate * schedule.n_periods;
    let eps = dt_s * 1e-9;

    // one pulse spec per schedule in practice; cache its prepared action
    let mut cached: Option<(PulseSpec, PulseAction, Option<EigenPropagator>)> = None;

    let mut psi = psi0.amplitudes().clone();
    let mut t = 0.0_f64;
    let mut next = 1usize;
    let mut times = Vec::with_capacity(n_samples + 1);
    let mut states = Vec::with_capacity(n_samples + 1);
    times.push(0.0);
    states.push(State::Pure(psi0.clone()));

    let record =
        |times: &mut Vec<f64>, states: &mut Vec<State>, t: f64, psi: &Array1<C64>| -> Result<()> {
            times.push(t);
            states.push(State::Pure(StateVector::new(space, psi.clone())?));
            Ok(())
        };

    for (seg_idx, seg) in schedule.segments.iter().enumerate() {
        match seg {
            Segment::Free { duration } => {
                let t_end = t + duration;
                while next <= n_samples && (next as f64) * dt_s < t_end - eps {
                    let target = next as f64 * dt_s;
                    free.advance(&mut psi, target - t);
                    t = target;
                    record(&mut times, &mut states, t, &psi)?;
                    next += 1;
                }
                free.advance(&mut psi, t_end - t);
                t = t_end;
                // a grid point on the boundary is recorded now only when no
                // pulse follows; otherwise it holds the post-pulse state
                let followed_by_pulse = matches!(
                    schedule.segments.get(seg_idx + 1),
                    Some(Segment::Pulse(_))
                );
                if !followed_by_pulse {
                    while next <= n_samples && ((next as f64) * dt_s - t).abs() <= eps {
                        record(&mut times, &mut states, next as f64 * dt_s, &psi)?;
                        next += 1;
                    }
                }
            }
            Segment::Pulse(spec) => {
                let needs_prepare = match &cached {
                    Some((s, _, _)) => s != spec,
                    None => true,
                };
                if needs_prepare {
                    let action = prepare_pulse(spec, h.matrix(), space)?;
                    let eig = match &action {
                        PulseAction::ConstantHamiltonian(hp) => {
                            Some(EigenPropagator::new(hp)?)
                        }
                        _ => None,
                    };
                    cached = Some((spec.clone(), action, eig));
                }
                let (_, action, eig) = cached.as_ref().expect("just prepared");

                match action {
                    PulseAction::Unitary(u) => {
                        psi = u.dot(&psi);
                    }
                    PulseAction::ConstantHamiltonian(_) => {
                        let eig = eig.as_ref().expect("prepared alongside");
                        let t_end = t + spec.duration();
                        while next <= n_samples && (next as f64) * dt_s < t_end - eps {
                            let target = next as f64 * dt_s;
                            eig.advance(&mut psi, target - t);
                            t = target;
                            record(&mut times, &mut states, t, &psi)?;
                            next += 1;
                        }
                        eig.advance(&mut psi, t_end - t);
                        t = t_end;
                    }
                    PulseAction::LabDrive { params, scale, dt } => {
                        // Strang split: half a chain step in the eigenbasis,
                        // the per-site 2×2 drive exponentials at the midpoint
                        // time, then the other half chain step
                        let t_end = t + spec.duration();
                        let step_to = |psi: &mut Array1<C64>,
                                       from: f64,
                                       to: f64|
                         -> Result<()> {
                            let span = to - from;
                            if span <= 0.0 {
                                return Ok(());
                            }
                            let steps = (span / dt).ceil().max(1.0) as usize;
                            let hstep = span / steps as f64;
                            for k in 0..steps {
                                let tm = from + (k as f64 + 0.5) * hstep;
                                free.advance(psi, hstep / 2.0);
                                apply_site_drives(psi, tm, hstep, params, scale, space);
                                free.advance(psi, hstep / 2.0);
                            }
                            Ok(())
                        };
                        while next <= n_samples && (next as f64) * dt_s < t_end - eps {
                            let target = next as f64 * dt_s;
                            step_to(&mut psi, t, target)?;
                            t = target;
                            record(&mut times, &mut states, t, &psi)?;
                            next += 1;
                        }
                        step_to(&mut psi, t, t_end)?;
                        t = t_end;
                    }
                }

                // record boundary samples post-pulse
                while next <= n_samples && ((next as f64) * dt_s - t).abs() <= eps {
                    record(&mut times, &mut states, next as f64 * dt_s, &psi)?;
                    next += 1;
                }
            }
        }
    }

    if next <= n_samples {
        return Err(Error::Schedule(format!(
            "schedule ended before sample {next} of {n_samples} was reached"
        )));
    }

    let strobes = (0..=schedule.n_periods)
        .map(|n| n * schedule.sample_rate)
        .collect();
    Ok(Trajectory {
        times,
        states,
        stroboscopic_indices: strobes,
    })
}

struct LindbladRhs<'a> {
    collapse: Vec<CollapseTerms>,
    h_static: &'a Array2<C64>,
}

struct CollapseTerms {
    l: Array2<C64>,
    l_adj: Array2<C64>,
    ldl: Array2<C64>,
}

impl<'a> LindbladRhs<'a> {
    fn new(h_static: &'a Array2<C64>, collapse_ops: &[Array2<C64>]) -> Self {
        let collapse = collapse_ops
            .iter()
            .map(|l| {
                let l_adj = linalg::adjoint(l);
                let ldl = l_adj.dot(l);
                CollapseTerms {
                    l: l.clone(),
                    l_adj,
                    ldl,
                }
            })
            .collect();
        Self {
            collapse,
            h_static,
        }
    }

    /// dρ/dt with an optional extra hermitian piece added to H.
    fn eval(&self, rho: &Array2<C64>, h_extra: Option<&Array2<C64>>) -> Array2<C64> {
        let minus_i = C64::new(0.0, -1.0);
        let mut out = match h_extra {
            Some(hx) => {
                let h = self.h_static + hx;
                linalg::commutator(&h, rho).mapv(|z| z * minus_i)
            }
            None => linalg::commutator(self.h_static, rho).mapv(|z| z * minus_i),
        };
        let half = C64::new(0.5, 0.0);
        for c in &self.collapse {
            out += &c.l.dot(rho).dot(&c.l_adj);
            out.scaled_add(-half, &c.ldl.dot(rho));
            out.scaled_add(-half, &rho.dot(&c.ldl));
        }
        out
    }
}

fn hermitize(rho: &mut Array2<C64>) {
    let adj = linalg::adjoint(rho);
    *rho += &adj;
    rho.mapv_inplace(|z| z * 0.5);
}

fn rk4_const_step(rhs: &LindbladRhs, rho: &mut Array2<C64>, h_extra: Option<&Array2<C64>>, dt: f64) {
    let k1 = rhs.eval(rho, h_extra);
    let mut tmp = rho.clone();
    tmp.scaled_add(C64::new(dt / 2.0, 0.0), &k1);
    let k2 = rhs.eval(&tmp, h_extra);
    tmp.assign(rho);
    tmp.scaled_add(C64::new(dt / 2.0, 0.0), &k2);
    let k3 = rhs.eval(&tmp, h_extra);
    tmp.assign(rho);
    tmp.scaled_add(C64::new(dt, 0.0), &k3);
    let k4 = rhs.eval(&tmp, h_extra);
    rho.scaled_add(C64::new(dt / 6.0, 0.0), &k1);
    rho.scaled_add(C64::new(dt / 3.0, 0.0), &k2);
    rho.scaled_add(C64::new(dt / 3.0, 0.0), &k3);
    rho.scaled_add(C64::new(dt / 6.0, 0.0), &k4);
    hermitize(rho);
}

/// RK4 with H(t) = H_static + H_drive(t) evaluated at the stage times.
fn rk4_timedep_step<F>(
    rhs: &LindbladRhs,
    rho: &mut Array2<C64>,
    h_of_t: &F,
    t: f64,
    dt: f64,
) -> Result<()>
where
    F: Fn(f64) -> Result<Array2<C64>>,
{
    let h0 = h_of_t(t)?;
    let hm = h_of_t(t + dt / 2.0)?;
    let h1 = h_of_t(t + dt)?;
    let k1 = rhs.eval(rho, Some(&h0));
    let mut tmp = rho.clone();
    tmp.scaled_add(C64::new(dt / 2.0, 0.0), &k1);
    let k2 = rhs.eval(&tmp, Some(&hm));
    tmp.assign(rho);
    tmp.scaled_add(C64::new(dt / 2.0, 0.0), &k2);
    let k3 = rhs.eval(&tmp, Some(&hm));
    tmp.assign(rho);
    tmp.scaled_add(C64::new(dt, 0.0), &k3);
    let k4 = rhs.eval(&tmp, Some(&h1));
    rho.scaled_add(C64::new(dt / 6.0, 0.0), &k1);
    rho.scaled_add(C64::new(dt / 3.0, 0.0), &k2);
    rho.scaled_add(C64::new(dt / 3.0, 0.0), &k3);
    rho.scaled_add(C64::new(dt / 6.0, 0.0), &k4);
    hermitize(rho);
    Ok(())
}

/// Integrate the master equation through the schedule. Noise stays on during
/// pulses. The fixed step is min(T_D/256, 0.02/ζ); trace and hermiticity are
/// checked at every recorded sample and positivity at the end of the run.
pub fn evolve_lindblad(
    rho0: &DensityMatrix,
    h: &SpinOperator,
    noise: &NoiseSpec,
    schedule: &PulseSchedule,
) -> Result<Trajectory> {
    let space = rho0.space();
    if h.space() != space {
        return Err(Error::DimensionMismatch(
            "density matrix and Hamiltonian spaces differ".into(),
        ));
    }
    if !h.is_hermitian() {
        return Err(Error::NotHermitian(linalg::hermiticity_deviation(
            h.matrix(),
        )));
    }
    schedule_pulse_checks(schedule, space)?;

    let collapse = noise.collapse_operators(space)?;
    let rhs = LindbladRhs::new(h.matrix(), &collapse);

    let mut dt_base = schedule.period / LINDBLAD_STEPS_PER_PERIOD;
    if noise.zeta > 0.0 {
        dt_base = dt_base.min(0.02 / noise.zeta);
    }
    if dt_base.is_nan() || dt_base <= 0.0 {
        return Err(Error::StepUnderflow(dt_base));
    }
    // the explicit stepper must also resolve the free Hamiltonian
    let h_norm = linalg::op_norm(h.matrix());
    let dt_free = if h_norm > 0.0 {
        dt_base.min(RK4_NORM_DT_CAP / h_norm)
    } else {
        dt_base
    };

    let dt_s = schedule.period / schedule.sample_rate as f64;
    let n_samples = schedule.sample_rate * schedule.n_periods;
    let eps = dt_s * 1e-9;

    // (spec, action, step bound honoring the pulse Hamiltonian's norm)
    let mut cached: Option<(PulseSpec, PulseAction, f64)> = None;

    let mut rho = rho0.matrix().clone();
    let mut t = 0.0_f64;
    let mut next = 1usize;
    let mut times = Vec::with_capacity(n_samples + 1);
    let mut states = Vec::with_capacity(n_samples + 1);
    times.push(0.0);
    states.push(State::Mixed(rho0.clone()));

    let record = |times: &mut Vec<f64>,
                  states: &mut Vec<State>,
                  t: f64,
                  rho: &Array2<C64>|
     -> Result<()> {
        times.push(t);
        states.push(State::Mixed(DensityMatrix::from_parts(space, rho.clone())?));
        Ok(())
    };

    // advance by `span` with constant extra Hamiltonian, splitting into
    // equal steps no longer than dt_cap
    let advance_const =
        |rho: &mut Array2<C64>, span: f64, h_extra: Option<&Array2<C64>>, dt_cap: f64| {
            if span <= 0.0 {
                return;
            }
            let steps = (span / dt_cap).ceil().max(1.0) as usize;
            let h = span / steps as f64;
            for _ in 0..steps {
                rk4_const_step(&rhs, rho, h_extra, h);
            }
        };

    for (seg_idx, seg) in schedule.segments.iter().enumerate() {
        match seg {
            Segment::Free { duration } => {
                let t_end = t + duration;
                while next <= n_samples && (next as f64) * dt_s < t_end - eps {
                    let target = next as f64 * dt_s;
                    advance_const(&mut rho, target - t, None, dt_free);
                    t = target;
                    record(&mut times, &mut states, t, &rho)?;
                    next += 1;
                }
                advance_const(&mut rho, t_end - t, None, dt_free);
                t = t_end;
                let followed_by_pulse = matches!(
                    schedule.segments.get(seg_idx + 1),
                    Some(Segment::Pulse(_))
                );
                if !followed_by_pulse {
                    while next <= n_samples && ((next as f64) * dt_s - t).abs() <= eps {
                        record(&mut times, &mut states, next as f64 * dt_s, &rho)?;
                        next += 1;
                    }
                }
            }
            Segment::Pulse(spec) => {
                let needs_prepare = match &cached {
                    Some((s, _, _)) => s != spec,
                    None => true,
                };
                if needs_prepare {
                    // the Lindblad RHS owns the static H, so the pulse action
                    // only carries the drive part
                    let zero = Array2::zeros((space.dim(), space.dim()));
                    let action = prepare_pulse(spec, &zero, space)?;
                    let dt_cap = match &action {
                        PulseAction::Unitary(_) => dt_free,
                        PulseAction::ConstantHamiltonian(hp) => {
                            let norm = linalg::op_norm(&(hp + h.matrix()));
                            if norm > 0.0 {
                                dt_free.min(RK4_NORM_DT_CAP / norm)
                            } else {
                                dt_free
                            }
                        }
                        PulseAction::LabDrive { params, scale, .. } => {
                            // bound: every site contributes at most its
                            // scaled amplitude to the drive norm
                            let drive_bound: f64 = scale
                                .iter()
                                .map(|s| params.amplitude * s)
                                .sum();
                            let norm = h_norm + drive_bound;
                            if norm > 0.0 {
                                dt_free.min(RK4_NORM_DT_CAP / norm)
                            } else {
                                dt_free
                            }
                        }
                    };
                    cached = Some((spec.clone(), action, dt_cap));
                }
                let (_, action, dt_cap) = cached.as_ref().expect("just prepared");
                let dt_cap = *dt_cap;

                match action {
                    PulseAction::Unitary(u) => {
                        let u_adj = linalg::adjoint(u);
                        rho = u.dot(&rho).dot(&u_adj);
                        hermitize(&mut rho);
                    }
                    PulseAction::ConstantHamiltonian(hp) => {
                        let t_end = t + spec.duration();
                        while next <= n_samples && (next as f64) * dt_s < t_end - eps {
                            let target = next as f64 * dt_s;
                            advance_const(&mut rho, target - t, Some(hp), dt_cap);
                            t = target;
                            record(&mut times, &mut states, t, &rho)?;
                            next += 1;
                        }
                        advance_const(&mut rho, t_end - t, Some(hp), dt_cap);
                        t = t_end;
                    }
                    PulseAction::LabDrive { params, scale, dt } => {
                        let t_end = t + spec.duration();
                        let phases = vec![0.0; space.n_sites()];
                        let h_of_t = |tt: f64| -> Result<Array2<C64>> {
                            Ok(drive_hamiltonian_scaled(tt, params, &phases, scale)?
                                .into_matrix())
                        };
                        let dt_pulse = dt.min(dt_cap);
                        let step_to = |rho: &mut Array2<C64>,
                                           from: f64,
                                           to: f64|
                         -> Result<()> {
                            let span = to - from;
                            if span <= 0.0 {
                                return Ok(());
                            }
                            let steps = (span / dt_pulse).ceil().max(1.0) as usize;
                            let h = span / steps as f64;
                            for k in 0..steps {
                                rk4_timedep_step(
                                    &rhs,
                                    rho,
                                    &h_of_t,
                                    from + k as f64 * h,
                                    h,
                                )?;
                            }
                            Ok(())
                        };
                        while next <= n_samples && (next as f64) * dt_s < t_end - eps {
                            let target = next as f64 * dt_s;
                            step_to(&mut rho, t, target)?;
                            t = target;
                            record(&mut times, &mut states, t, &rho)?;
                            next += 1;
                        }
                        step_to(&mut rho, t, t_end)?;
                        t = t_end;
                    }
                }

                while next <= n_samples && ((next as f64) * dt_s - t).abs() <= eps {
                    record(&mut times, &mut states, next as f64 * dt_s, &rho)?;
                    next += 1;
                }
            }
        }
    }

    if next <= n_samples {
        return Err(Error::Schedule(format!(
            "schedule ended before sample {next} of {n_samples} was reached"
        )));
    }

    // final positivity certificate
    let (vals, _) = linalg::eigh(&rho)?;
    let min = vals.first().copied().unwrap_or(0.0);
    if min < -LINDBLAD_POSITIVITY_TOL {
        return Err(Error::InvalidDensityMatrix {
            what: "positivity",
            dev: -min,
        });
    }

    let strobes = (0..=schedule.n_periods)
        .map(|n| n * schedule.sample_rate)
        .collect();
    Ok(Trajectory {
        times,
        states,
        stroboscopic_indices: strobes,
    })
}

/// Unitary-preserving integration of ψ under H_static + H_t(t), sampling at
/// every step. Each step applies the exact exponential of the midpoint
/// Hamiltonian, so the norm is preserved to machine precision.
pub fn evolve_timedep<F>(
    psi0: &StateVector,
    h_static: &SpinOperator,
    h_t: F,
    t_span: (f64, f64),
    dt_max: f64,
) -> Result<Trajectory>
where
    F: Fn(f64) -> Array2<C64>,
{
    let space = psi0.space();
    if h_static.space() != space {
        return Err(Error::DimensionMismatch(
            "state and Hamiltonian spaces differ".into(),
        ));
    }
    let (t0, t1) = t_span;
    if t1.is_nan() || t0.is_nan() || t1 <= t0 {
        return Err(Error::InvalidParameter(format!(
            "empty time span [{t0}, {t1}]"
        )));
    }
    if dt_max.is_nan() || dt_max <= 0.0 || dt_max.is_infinite() {
        return Err(Error::StepUnderflow(dt_max));
    }
    let span = t1 - t0;
    let steps = (span / dt_max).ceil().max(1.0) as usize;
    let dt = span / steps as f64;

    let mut psi = psi0.amplitudes().clone();
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    times.push(t0);
    states.push(State::Pure(psi0.clone()));

    for k in 0..steps {
        let t_mid = t0 + (k as f64 + 0.5) * dt;
        let hd = h_t(t_mid);
        if hd.nrows() != space.dim() || hd.ncols() != space.dim() {
            return Err(Error::DimensionMismatch(
                "time-dependent term has wrong dimension".into(),
            ));
        }
        let total = h_static.matrix() + &hd;
        let hdev = linalg::hermiticity_deviation(&total);
        if hdev > 1e-10 {
            return Err(Error::NotHermitian(hdev));
        }
        let eig = EigenPropagator::new(&total)?;
        eig.advance(&mut psi, dt);
        times.push(t0 + (k as f64 + 1.0) * dt);
        states.push(State::Pure(StateVector::new(space, psi.clone())?));
    }

    Ok(Trajectory {
        times,
        states,
        stroboscopic_indices: Vec::new(),
    })
}
