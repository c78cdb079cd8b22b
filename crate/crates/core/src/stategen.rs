//! Purity-controlled ensembles of two-qubit mixed states.
//!
//! Seven preparation channels are sampled round-robin. For each record a
//! target purity is drawn uniformly from the requested band and the channel
//! parameter (p, γ or β) is found by bisection on the measured purity, with
//! the random ingredients (Haar state, GUE Hamiltonian) held fixed during the
//! search.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measurement::{expectations, MeasurementVector};
use crate::qcore::{
    apply_kraus, herm_eig, project_to_physical, purity, ComplexMatrix, DensityMatrix, C64, ONE,
    ZERO,
};
use crate::rng::{self, Rng};

pub const PURITY_TOLERANCE: f64 = 0.01;
pub const BISECTION_STEPS: usize = 60;
pub const MAX_RESAMPLES: usize = 25;
pub const THERMAL_BETA_MAX: f64 = 50.0;
const DAMPING_GRID: usize = 64;
const MONOTONE_SLACK: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelKind {
    Depolarized,
    Werner,
    Isotropic,
    AmplitudeDamped,
    PhaseDamped,
    Thermal,
    SeparableProduct,
}

impl ChannelKind {
    pub const ALL: [ChannelKind; 7] = [
        ChannelKind::Depolarized,
        ChannelKind::Werner,
        ChannelKind::Isotropic,
        ChannelKind::AmplitudeDamped,
        ChannelKind::PhaseDamped,
        ChannelKind::Thermal,
        ChannelKind::SeparableProduct,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ChannelKind::Depolarized => "depolarized",
            ChannelKind::Werner => "werner",
            ChannelKind::Isotropic => "isotropic",
            ChannelKind::AmplitudeDamped => "amplitude_damped",
            ChannelKind::PhaseDamped => "phase_damped",
            ChannelKind::Thermal => "thermal",
            ChannelKind::SeparableProduct => "separable_product",
        }
    }

    fn param_range(self) -> (f64, f64) {
        match self {
            ChannelKind::Thermal => (0.0, f64::INFINITY),
            _ => (0.0, 1.0),
        }
    }
}

impl fmt::Display for ChannelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ChannelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ChannelKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown channel {s:?}")))
    }
}

/// One generated state with its provenance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateRecord {
    pub id: usize,
    pub channel: ChannelKind,
    pub parameter: f64,
    pub target_purity: f64,
    pub purity: f64,
    pub rho: DensityMatrix,
    pub pauli: MeasurementVector,
}

/// Haar-random pure state on `n` qubits.
pub fn haar_pure(n: usize, rng: &mut Rng) -> DensityMatrix {
    DensityMatrix::new_unchecked(ComplexMatrix::projector(&haar_vector(n, rng)))
}

fn haar_vector(n: usize, rng: &mut Rng) -> Vec<C64> {
    let d = 1usize << n;
    loop {
        let v: Vec<C64> = (0..d).map(|_| rng::complex_normal(rng)).collect();
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-150 {
            return v.into_iter().map(|z| z / norm).collect();
        }
    }
}

/// GUE sample H = (A + A†)/2 with standard complex Gaussian entries.
pub fn gue_hamiltonian(d: usize, rng: &mut Rng) -> ComplexMatrix {
    let mut a = ComplexMatrix::zeros(d, d);
    for z in a.as_mut_slice() {
        *z = rng::complex_normal(rng);
    }
    a.hermitian_part()
}

fn bell_phi_plus() -> DensityMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    DensityMatrix::new_unchecked(ComplexMatrix::projector(&[
        C64::new(s, 0.0),
        ZERO,
        ZERO,
        C64::new(s, 0.0),
    ]))
}

/// `(1 − w)·ρ + w·I/d`
fn mix_with_identity(rho: &DensityMatrix, w: f64) -> ComplexMatrix {
    let d = rho.dim();
    let mut m = rho.matrix().scale(1.0 - w);
    for i in 0..d {
        m[(i, i)].re += w / d as f64;
    }
    m
}

fn on_qubit(op: &ComplexMatrix, qubit: usize) -> ComplexMatrix {
    let id = ComplexMatrix::identity(2);
    if qubit == 0 {
        op.kron(&id)
    } else {
        id.kron(op)
    }
}

/// Single-qubit amplitude damping Kraus pair.
pub fn amplitude_damping_kraus(gamma: f64) -> [ComplexMatrix; 2] {
    [
        ComplexMatrix::from_real_diagonal(&[1.0, (1.0 - gamma).sqrt()]),
        ComplexMatrix::from_rows(&[[ZERO, ONE * gamma.sqrt()], [ZERO, ZERO]]),
    ]
}

/// Single-qubit phase damping Kraus triple.
pub fn phase_damping_kraus(gamma: f64) -> [ComplexMatrix; 3] {
    [
        ComplexMatrix::identity(2).scale((1.0 - gamma).sqrt()),
        ComplexMatrix::from_real_diagonal(&[gamma.sqrt(), 0.0]),
        ComplexMatrix::from_real_diagonal(&[0.0, gamma.sqrt()]),
    ]
}

/// Applies a single-qubit channel to every qubit of a two-qubit state in turn.
fn damp_each_qubit(rho: &DensityMatrix, kraus: &[ComplexMatrix]) -> Result<DensityMatrix> {
    let mut out = rho.clone();
    for q in 0..2 {
        let lifted: Vec<ComplexMatrix> = kraus.iter().map(|k| on_qubit(k, q)).collect();
        out = apply_kraus(&out, &lifted)?;
    }
    Ok(out)
}

/// Random ingredients of one channel draw, fixed while its parameter varies.
#[derive(Clone, Debug)]
pub struct ChannelInstance {
    pub kind: ChannelKind,
    pure: Option<DensityMatrix>,
    factors: Option<[DensityMatrix; 2]>,
    hamiltonian: Option<ComplexMatrix>,
}

impl ChannelInstance {
    pub fn sample(kind: ChannelKind, rng: &mut Rng) -> Self {
        let mut inst = Self {
            kind,
            pure: None,
            factors: None,
            hamiltonian: None,
        };
        match kind {
            ChannelKind::Depolarized
            | ChannelKind::Isotropic
            | ChannelKind::AmplitudeDamped
            | ChannelKind::PhaseDamped => inst.pure = Some(haar_pure(2, rng)),
            ChannelKind::Werner => {}
            ChannelKind::Thermal => inst.hamiltonian = Some(gue_hamiltonian(4, rng)),
            ChannelKind::SeparableProduct => {
                inst.factors = Some([haar_pure(1, rng), haar_pure(1, rng)])
            }
        }
        inst
    }

    /// Instance built around a given pure state (ignored by Werner,
    /// Thermal and SeparableProduct).
    pub fn with_pure_state(kind: ChannelKind, psi: DensityMatrix) -> Self {
        Self {
            kind,
            pure: Some(psi),
            factors: None,
            hamiltonian: None,
        }
    }

    pub fn with_hamiltonian(h: ComplexMatrix) -> Self {
        Self {
            kind: ChannelKind::Thermal,
            pure: None,
            factors: None,
            hamiltonian: Some(h),
        }
    }

    /// The state produced by this instance at parameter `param`.
    pub fn state(&self, param: f64) -> Result<DensityMatrix> {
        let (lo, hi) = self.kind.param_range();
        if !(param >= lo && param <= hi) {
            return Err(Error::ParameterOutOfRange {
                name: match self.kind {
                    ChannelKind::Thermal => "beta",
                    ChannelKind::AmplitudeDamped | ChannelKind::PhaseDamped => "gamma",
                    _ => "p",
                },
                value: param,
                range: if self.kind == ChannelKind::Thermal { "[0, inf)" } else { "[0, 1]" },
            });
        }
        let pure = || self.pure.as_ref().expect("instance carries a pure state");
        let m = match self.kind {
            ChannelKind::Depolarized | ChannelKind::Isotropic => mix_with_identity(pure(), param),
            ChannelKind::Werner => mix_with_identity(&bell_phi_plus(), 1.0 - param),
            ChannelKind::AmplitudeDamped => {
                damp_each_qubit(pure(), &amplitude_damping_kraus(param))?.into_matrix()
            }
            ChannelKind::PhaseDamped => {
                damp_each_qubit(pure(), &phase_damping_kraus(param))?.into_matrix()
            }
            ChannelKind::Thermal => {
                let h = self.hamiltonian.as_ref().expect("thermal instance carries H");
                gibbs_state(h, param)?
            }
            ChannelKind::SeparableProduct => {
                let [a, b] = self.factors.as_ref().expect("separable instance carries factors");
                mix_with_identity(a, param).kron(&mix_with_identity(b, param))
            }
        };
        finalize(m.hermitian_part())
    }
}

/// e^{−βH} / Tr e^{−βH}, computed on the shifted spectrum for stability.
fn gibbs_state(h: &ComplexMatrix, beta: f64) -> Result<ComplexMatrix> {
    let spec = herm_eig(h)?;
    let ground = spec.min();
    let z: f64 = spec.values.iter().map(|e| (-beta * (e - ground)).exp()).sum();
    Ok(spec.map(|e| (-beta * (e - ground)).exp() / z))
}

/// Validates, falling back to spectral truncation for round-off violations.
fn finalize(m: ComplexMatrix) -> Result<DensityMatrix> {
    match DensityMatrix::new(m.clone()) {
        Ok(rho) => Ok(rho),
        Err(Error::NotPositive(_) | Error::InvalidTrace(_) | Error::NotHermitian(_)) => {
            project_to_physical(&m)
        }
        Err(e) => Err(e),
    }
}

/// Builds a state of channel `kind` at `param`, drawing fresh random
/// ingredients from `rng`.
pub fn make_state(kind: ChannelKind, param: f64, rng: &mut Rng) -> Result<DensityMatrix> {
    ChannelInstance::sample(kind, rng).state(param)
}

/// Closed-form purity of the depolarized family around a pure state.
pub fn depolarized_purity(p: f64, d: usize) -> f64 {
    let d = d as f64;
    (1.0 - p).powi(2) + p * p / d + 2.0 * p * (1.0 - p) / d
}

/// Closed-form purity of the two-qubit Werner family.
pub fn werner_purity(p: f64) -> f64 {
    p * p + p * (1.0 - p) / 2.0 + (1.0 - p).powi(2) / 4.0
}

#[derive(Debug)]
enum SearchFailure {
    Unreachable,
    NonMonotone,
    Numerical(Error),
}

impl From<Error> for SearchFailure {
    fn from(e: Error) -> Self {
        SearchFailure::Numerical(e)
    }
}

/// Bisection on a monotone purity curve between `lo` and `hi`.
fn bisect<F>(
    eval: F,
    mut lo: f64,
    mut hi: f64,
    target: f64,
) -> std::result::Result<(f64, DensityMatrix, f64), SearchFailure>
where
    F: Fn(f64) -> Result<DensityMatrix>,
{
    let rho_lo = eval(lo)?;
    let rho_hi = eval(hi)?;
    let (mut p_lo, mut p_hi) = (purity(&rho_lo), purity(&rho_hi));
    let increasing = p_hi >= p_lo;
    let sign = if increasing { 1.0 } else { -1.0 };
    // Work with g(x) = sign·(purity − target), which increases in x.
    let g_lo = sign * (p_lo - target);
    let g_hi = sign * (p_hi - target);
    if g_lo > 0.0 {
        if g_lo <= PURITY_TOLERANCE {
            return Ok((lo, rho_lo, p_lo));
        }
        return Err(SearchFailure::Unreachable);
    }
    if g_hi < 0.0 {
        if -g_hi <= PURITY_TOLERANCE {
            return Ok((hi, rho_hi, p_hi));
        }
        return Err(SearchFailure::Unreachable);
    }

    let mut best = if g_lo.abs() <= g_hi.abs() {
        (lo, rho_lo, p_lo)
    } else {
        (hi, rho_hi, p_hi)
    };
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let rho = eval(mid)?;
        let p = purity(&rho);
        let (pmin, pmax) = if p_lo <= p_hi { (p_lo, p_hi) } else { (p_hi, p_lo) };
        if p < pmin - MONOTONE_SLACK || p > pmax + MONOTONE_SLACK {
            return Err(SearchFailure::NonMonotone);
        }
        if (p - target).abs() < (best.2 - target).abs() {
            best = (mid, rho.clone(), p);
        }
        if sign * (p - target) < 0.0 {
            lo = mid;
            p_lo = p;
        } else {
            hi = mid;
            p_hi = p;
        }
    }
    if (best.2 - target).abs() <= PURITY_TOLERANCE {
        Ok(best)
    } else {
        Err(SearchFailure::Unreachable)
    }
}

/// Amplitude damping of a pure state is not monotone over γ ∈ [0, 1]: the
/// purity dips and returns to 1 at full relaxation. The search is bracketed
/// on the initial descending branch.
fn damping_bracket(
    inst: &ChannelInstance,
    target: f64,
) -> std::result::Result<(f64, f64), SearchFailure> {
    let mut prev_gamma = 0.0;
    let mut prev_purity = purity(&inst.state(0.0)?);
    for i in 1..=DAMPING_GRID {
        let gamma = i as f64 / DAMPING_GRID as f64;
        let p = purity(&inst.state(gamma)?);
        if p > prev_purity + MONOTONE_SLACK {
            return Err(SearchFailure::Unreachable);
        }
        if p <= target {
            return Ok((prev_gamma, gamma));
        }
        prev_gamma = gamma;
        prev_purity = p;
    }
    Err(SearchFailure::Unreachable)
}

fn search_instance(
    inst: &ChannelInstance,
    target: f64,
) -> std::result::Result<(f64, DensityMatrix, f64), SearchFailure> {
    match inst.kind {
        ChannelKind::AmplitudeDamped => {
            let (lo, hi) = damping_bracket(inst, target)?;
            bisect(|g| inst.state(g), lo, hi, target)
        }
        ChannelKind::Thermal => bisect(|b| inst.state(b), 0.0, THERMAL_BETA_MAX, target),
        ChannelKind::SeparableProduct => {
            // Each factor targets √t so that the product has purity t.
            let factor_target = target.sqrt();
            let [a, _] = inst.factors.as_ref().expect("separable instance carries factors");
            let single = |p: f64| -> Result<DensityMatrix> { finalize(mix_with_identity(a, p)) };
            let (p, _, _) = bisect(single, 0.0, 1.0, factor_target)?;
            let rho = inst.state(p)?;
            let pur = purity(&rho);
            if (pur - target).abs() > PURITY_TOLERANCE {
                return Err(SearchFailure::Unreachable);
            }
            Ok((p, rho, pur))
        }
        _ => bisect(|p| inst.state(p), 0.0, 1.0, target),
    }
}

/// Finds a channel parameter whose state has purity within
/// `PURITY_TOLERANCE` of `target`.
pub fn solve_purity(
    kind: ChannelKind,
    target: f64,
    rng: &mut Rng,
) -> Result<(f64, DensityMatrix)> {
    if !(target > 0.25 && target <= 1.0) {
        return Err(Error::ParameterOutOfRange {
            name: "target purity",
            value: target,
            range: "(0.25, 1]",
        });
    }
    for _ in 0..MAX_RESAMPLES {
        let inst = ChannelInstance::sample(kind, rng);
        match search_instance(&inst, target) {
            Ok((param, rho, _)) => return Ok((param, rho)),
            Err(SearchFailure::Numerical(e)) => return Err(e),
            Err(SearchFailure::Unreachable | SearchFailure::NonMonotone) => continue,
        }
    }
    Err(Error::UnreachablePurity {
        channel: kind.to_string(),
        target,
        attempts: MAX_RESAMPLES,
    })
}

/// Generates `n_states` records with channels assigned round-robin.
///
/// Record `i` draws from stream `stream_offset + i` of `seed`, so records
/// are independent of generation order.
pub fn sample_dataset(
    n_states: usize,
    purity_range: (f64, f64),
    seed: u64,
    stream_offset: u64,
) -> Result<Vec<StateRecord>> {
    let (lo, hi) = purity_range;
    if !(lo > 0.25 && lo <= hi && hi <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "purity range [{lo}, {hi}] must satisfy 0.25 < lo <= hi <= 1"
        )));
    }
    (0..n_states)
        .map(|id| {
            let mut rng = rng::stream(seed, stream_offset + id as u64);
            let channel = ChannelKind::ALL[id % ChannelKind::ALL.len()];
            let target = rng::uniform(&mut rng, lo, hi);
            let (parameter, rho) = solve_purity(channel, target, &mut rng)?;
            let pauli = expectations(&rho)?;
            Ok(StateRecord {
                id,
                channel,
                parameter,
                target_purity: target,
                purity: purity(&rho),
                rho,
                pauli,
            })
        })
        .collect()
}

/// Partial transpose on the second qubit.
pub fn partial_transpose(m: &ComplexMatrix) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(4, 4);
    for a in 0..2 {
        for b in 0..2 {
            for c in 0..2 {
                for d in 0..2 {
                    out[(2 * a + d, 2 * c + b)] = m[(2 * a + b, 2 * c + d)];
                }
            }
        }
    }
    out
}
