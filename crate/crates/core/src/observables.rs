//! Scalar observables of the three-qubit state and their closed forms.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hilbert::{DensityMatrix, MachineSpec, Matrix2c, Matrix8c, Qubit, DIM, LOWER_DEGENERATE, UPPER_DEGENERATE};
use crate::liouvillian::ReducedState;

/// Largest off-diagonal magnitude tolerated by [`effective_temperature`].
pub const DIAGONAL_TOL: f64 = 1e-10;
/// Ground populations this close to 1/2 map to infinite temperature.
pub const INFINITE_TEMPERATURE_TOL: f64 = 1e-12;
/// Smallest `|E_R/T_R - E_H/T_H|` for which the virtual qubit has a temperature.
pub const VIRTUAL_DENOMINATOR_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Positive,
    Infinite,
    Negative,
}

/// A temperature in units of `E_C` (with `k_B = 1`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Temperature {
    pub value: f64,
    pub regime: Regime,
}

impl Temperature {
    /// The value, with non-positive regimes mapped to `+inf`, so that
    /// orderings read "colder is smaller".
    pub fn coldness_key(&self) -> f64 {
        match self.regime {
            Regime::Positive => self.value,
            _ => f64::INFINITY,
        }
    }
}

/// Inverts `r = 1/(exp(-E/T) + 1)` for the temperature.
pub fn temperature_from_ground(ground: f64, energy: f64) -> Temperature {
    if (ground - 0.5).abs() <= INFINITE_TEMPERATURE_TOL {
        return Temperature {
            value: f64::INFINITY,
            regime: Regime::Infinite,
        };
    }
    // ln(r/(1-r)) written to stay accurate for r close to 1.
    let log_odds = ground.ln() - (-ground).ln_1p();
    let value = energy / log_odds;
    Temperature {
        value,
        regime: if ground > 0.5 {
            Regime::Positive
        } else {
            Regime::Negative
        },
    }
}

/// Temperature of a diagonal single-qubit state with level splitting `energy`.
pub fn effective_temperature(reduced: &Matrix2c, energy: f64) -> Result<Temperature> {
    let off = reduced[(0, 1)].norm().max(reduced[(1, 0)].norm());
    if off > DIAGONAL_TOL {
        return Err(Error::NonDiagonal(off));
    }
    Ok(temperature_from_ground(reduced[(0, 0)].re, energy))
}

/// `||a - b||_1 / 2` from the eigenvalues of the Hermitian part of `a - b`.
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> f64 {
    let diff: Matrix8c = a.matrix() - b.matrix();
    let herm = (diff + diff.adjoint()) * crate::hilbert::C64::from(0.5);
    let dynamic = nalgebra::DMatrix::from_iterator(DIM, DIM, herm.iter().copied());
    0.5 * dynamic.symmetric_eigenvalues().iter().map(|x| x.abs()).sum::<f64>()
}

/// Bipartitions probed by the witness, plus the genuine tripartite case.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Partition {
    /// `C|RH`
    CvsRH,
    /// `R|CH`
    RvsCH,
    /// `CR|H`
    CRvsH,
    Genuine,
}

impl Partition {
    pub const ALL: [Partition; 4] = [Partition::CvsRH, Partition::RvsCH, Partition::CRvsH, Partition::Genuine];

    /// Indices `j` whose antidiagonal partners `(j, 9 - j)` enter the
    /// penalty term. Each bipartition uses the one pair of basis states
    /// that differ on all three qubits and agree with `|010>, |101>` on the
    /// split: `|000>,|111>` for `R|CH`, `|001>,|110>` for `C|RH`,
    /// `|011>,|100>` for `CR|H`.
    pub fn indices(self) -> &'static [usize] {
        match self {
            Partition::RvsCH => &[1],
            Partition::CvsRH => &[2],
            Partition::CRvsH => &[4],
            Partition::Genuine => &[1, 2, 4],
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Partition::CvsRH => "C|RH",
            Partition::RvsCH => "R|CH",
            Partition::CRvsH => "CR|H",
            Partition::Genuine => "genuine",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WitnessValue {
    pub value: f64,
    pub partition: Partition,
}

impl WitnessValue {
    pub fn certifies_entanglement(&self) -> bool {
        self.value > 0.0
    }
}

fn witness_from(populations: &[f64; DIM], coherence_abs: f64, partition: Partition) -> f64 {
    let penalty: f64 = partition
        .indices()
        .iter()
        .map(|&j| (populations[j - 1] * populations[DIM - j]).max(0.0).sqrt())
        .sum();
    2.0 * (coherence_abs - penalty)
}

/// `2(|rho_36| - sum_j sqrt(rho_jj rho_{9-j,9-j}))`.
pub fn witness(rho: &DensityMatrix, partition: Partition) -> WitnessValue {
    let populations: [f64; DIM] = std::array::from_fn(|k| rho.population(k + 1));
    let coherence = rho.entry(LOWER_DEGENERATE, UPPER_DEGENERATE).norm();
    WitnessValue {
        value: witness_from(&populations, coherence, partition),
        partition,
    }
}

/// [`witness`] evaluated directly on reduced coordinates.
pub fn witness_reduced(state: &ReducedState, partition: Partition) -> WitnessValue {
    WitnessValue {
        value: witness_from(&state.populations(), state.coherence().norm(), partition),
        partition,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VirtualTemperature {
    pub value: f64,
    /// `0 <= T_V < T_C`: the machine can cool the cold qubit.
    pub cools: bool,
}

/// `T_V = E_C / (E_R/T_R - E_H/T_H)`.
pub fn virtual_temperature(spec: &MachineSpec) -> Result<VirtualTemperature> {
    let [e_c, e_r, e_h] = Qubit::ALL.map(|q| spec.energy(q));
    let [t_c, t_r, t_h] = Qubit::ALL.map(|q| spec.temperature(q));
    virtual_temperature_from(e_c, t_c, e_r, t_r, e_h, t_h)
}

/// [`virtual_temperature`] on raw energies and temperatures.
pub fn virtual_temperature_from(
    e_c: f64,
    t_c: f64,
    e_r: f64,
    t_r: f64,
    e_h: f64,
    t_h: f64,
) -> Result<VirtualTemperature> {
    let denom = e_r / t_r - e_h / t_h;
    if denom.abs() <= VIRTUAL_DENOMINATOR_TOL {
        return Err(Error::DegenerateVirtualQubit);
    }
    let value = e_c / denom;
    Ok(VirtualTemperature {
        value,
        cools: value >= 0.0 && value < t_c,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EntanglementKind {
    Bipartite,
    Genuine,
}

impl EntanglementKind {
    fn penalty_factor(self) -> f64 {
        match self {
            EntanglementKind::Bipartite => 2.0,
            EntanglementKind::Genuine => 6.0,
        }
    }
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Closed-form maximum of the witness over a dissipation-free trajectory
/// from the product thermal state:
/// `|tau_33 - tau_66| - factor sqrt(tau_11 tau_88)`, evaluated in log space.
pub fn max_entanglement(spec: &MachineSpec, kind: EntanglementKind) -> Result<f64> {
    let x = Qubit::ALL.map(|q| spec.energy(q) / spec.temperature(q));
    let log_norm: f64 = x.iter().map(|&v| softplus(v)).sum();
    let a = x[1];
    let b = x[0] + x[2];
    let first = (a.max(b) - log_norm).exp() * -(-(a - b).abs()).exp_m1();
    let second = kind.penalty_factor() * ((x[0] + x[1] + x[2]) / 2.0 - log_norm).exp();
    let value = first - second;
    if !value.is_finite() {
        return Err(Error::Overflow(format!("entanglement bound for E/T ratios {x:?}")));
    }
    Ok(value)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SwapBound {
    pub temperature: Temperature,
    /// Cold-qubit ground population after the complete swap.
    pub ground_population: f64,
    /// `pi / 2g`.
    pub time: f64,
}

/// Cold-qubit temperature after a complete `|010> <-> |101>` swap from the
/// product thermal state, with no dissipation.
pub fn min_unitary_temperature(spec: &MachineSpec) -> Result<SwapBound> {
    if !(spec.g() > 0.0) {
        return Err(Error::Domain("swap bound needs g > 0".into()));
    }
    let [c, r, h] = Qubit::ALL.map(|q| spec.thermal(q));
    let tau33 = c.ground * r.excited * h.ground;
    let tau66 = c.excited * r.ground * h.excited;
    let ground = c.ground - tau33 + tau33.max(tau66);
    Ok(SwapBound {
        temperature: temperature_from_ground(ground, spec.energy(Qubit::C)),
        ground_population: ground,
        time: std::f64::consts::FRAC_PI_2 / spec.g(),
    })
}

/// Everything reported per sample of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ObservableRecord {
    pub t_c: Temperature,
    pub t_r: Temperature,
    pub t_h: Temperature,
    /// Trace distance to the steady state; NaN when there is none.
    pub distance: f64,
    pub w_r_ch: f64,
    pub w_genuine: f64,
    pub populations: [f64; DIM],
    pub im_rho36: f64,
}

pub fn observe(spec: &MachineSpec, state: &ReducedState, steady: Option<&DensityMatrix>) -> ObservableRecord {
    let temp = |q| temperature_from_ground(state.ground_population(q), spec.energy(q));
    ObservableRecord {
        t_c: temp(Qubit::C),
        t_r: temp(Qubit::R),
        t_h: temp(Qubit::H),
        distance: steady.map_or(f64::NAN, |s| trace_distance(&state.embed(), s)),
        w_r_ch: witness_reduced(state, Partition::RvsCH).value,
        w_genuine: witness_reduced(state, Partition::Genuine).value,
        populations: state.populations(),
        im_rho36: state.coherence().im,
    }
}
