//! Three-qubit state space.
//!
//! Qubits are ordered C, R, H with C the most significant bit, so the basis
//! state |c r h> has 1-based index `4c + 2r + h + 1`. With this convention
//! the degenerate pair |010>, |101> sits at indices 3 and 6 and the only
//! coherence the machine ever builds up is the (3,6) element.
//!
//! Units: hbar = k_B = 1. Energies and temperatures are measured in units of
//! `E_C` in the canonical parametrization, times in units of `1/E_C`.

use nalgebra::{Complex, SMatrix};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type Matrix2c = SMatrix<C64, 2, 2>;
pub type Matrix4c = SMatrix<C64, 4, 4>;
pub type Matrix8c = SMatrix<C64, 8, 8>;

/// Hilbert-space dimension of the machine.
pub const DIM: usize = 8;

/// 1-based index of |010>.
pub const LOWER_DEGENERATE: usize = 3;
/// 1-based index of |101>.
pub const UPPER_DEGENERATE: usize = 6;

/// Maximum elementwise deviation from Hermiticity accepted for a state.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Maximum deviation of the trace from one accepted for a state.
pub const TRACE_TOL: f64 = 1e-10;
/// Most negative eigenvalue accepted for a state.
pub const POSITIVITY_TOL: f64 = 1e-10;
/// Hermiticity tolerance for the eigenvalue routine's precondition.
pub const EIGEN_HERMITIAN_TOL: f64 = 1e-10;

pub(crate) const ZERO: C64 = Complex { re: 0.0, im: 0.0 };

/// One of the three machine qubits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Qubit {
    /// The qubit being refrigerated.
    C,
    /// The "room" qubit.
    R,
    /// The hot qubit driving the machine.
    H,
}

impl Qubit {
    pub const ALL: [Qubit; 3] = [Qubit::C, Qubit::R, Qubit::H];

    /// Position in the C, R, H tensor ordering.
    pub fn position(self) -> usize {
        match self {
            Qubit::C => 0,
            Qubit::R => 1,
            Qubit::H => 2,
        }
    }

    /// Bit mask of this qubit inside a 0-based basis offset.
    pub fn mask(self) -> usize {
        4 >> self.position()
    }

    /// Excitation bit (0 or 1) of this qubit in the basis state at `offset`.
    pub fn bit(self, offset: usize) -> usize {
        usize::from(offset & self.mask() != 0)
    }

    fn shift(self) -> usize {
        2 - self.position()
    }

    /// Drops this qubit's bit from a 3-bit offset, giving a 2-bit offset.
    pub(crate) fn compress(self, offset: usize) -> usize {
        let b = self.shift();
        ((offset >> (b + 1)) << b) | (offset & ((1 << b) - 1))
    }

    /// Inverse of [`Qubit::compress`]: inserts `bit` at this qubit's position.
    pub(crate) fn expand(self, rest: usize, bit: usize) -> usize {
        let b = self.shift();
        ((rest >> b) << (b + 1)) | (bit << b) | (rest & ((1 << b) - 1))
    }
}

impl std::fmt::Display for Qubit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Qubit::C => "C",
            Qubit::R => "R",
            Qubit::H => "H",
        };
        f.write_str(s)
    }
}

/// A computational basis state |c r h>.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BasisState {
    pub c: u8,
    pub r: u8,
    pub h: u8,
}

impl BasisState {
    pub fn new(c: u8, r: u8, h: u8) -> Option<Self> {
        (c <= 1 && r <= 1 && h <= 1).then_some(Self { c, r, h })
    }

    /// 1-based matrix index.
    pub fn index(self) -> usize {
        self.offset() + 1
    }

    /// 0-based offset into storage.
    pub fn offset(self) -> usize {
        4 * self.c as usize + 2 * self.r as usize + self.h as usize
    }

    pub fn from_index(index: usize) -> Option<Self> {
        if !(1..=DIM).contains(&index) {
            return None;
        }
        let k = index - 1;
        Some(Self {
            c: ((k >> 2) & 1) as u8,
            r: ((k >> 1) & 1) as u8,
            h: (k & 1) as u8,
        })
    }
}

/// A qubit equilibrated with its bath.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalQubit {
    pub energy: f64,
    pub temperature: f64,
    /// Ground-state population `1/(exp(-E/T) + 1)`.
    pub ground: f64,
    /// Excited-state population, computed directly so it keeps full relative
    /// precision when it is exponentially small.
    pub excited: f64,
}

impl ThermalQubit {
    pub fn population(&self, bit: usize) -> f64 {
        if bit == 0 {
            self.ground
        } else {
            self.excited
        }
    }

    pub fn state(&self) -> Matrix2c {
        Matrix2c::new(C64::from(self.ground), ZERO, ZERO, C64::from(self.excited))
    }
}

/// Thermal populations of a qubit with gap `energy` at `temperature`.
pub fn thermal_qubit(energy: f64, temperature: f64) -> Result<ThermalQubit> {
    if !(energy > 0.0 && energy.is_finite()) {
        return Err(Error::Domain(format!("qubit energy must be positive, got {energy}")));
    }
    if !(temperature > 0.0 && temperature.is_finite()) {
        return Err(Error::Domain(format!(
            "temperature must be positive, got {temperature}"
        )));
    }
    let x = energy / temperature;
    Ok(ThermalQubit {
        energy,
        temperature,
        ground: 1.0 / (1.0 + (-x).exp()),
        excited: 1.0 / (1.0 + x.exp()),
    })
}

/// Raw physical parameters, as read from a config file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MachineParams {
    pub e_c: f64,
    pub e_h: f64,
    pub t_c: f64,
    pub t_r: f64,
    pub t_h: f64,
    pub p_c: f64,
    pub p_r: f64,
    pub p_h: f64,
    pub g: f64,
}

impl MachineParams {
    /// Energies and temperatures shared by every parameter set in the
    /// reference figures: `E_C = 1, E_H = 100, T_C = T_R = 1, T_H = 100`.
    pub fn reference(p_c: f64, p_r: f64, p_h: f64, g: f64) -> Self {
        Self {
            e_c: 1.0,
            e_h: 100.0,
            t_c: 1.0,
            t_r: 1.0,
            t_h: 100.0,
            p_c,
            p_r,
            p_h,
            g,
        }
    }
}

/// Validated machine parameters. `E_R = E_C + E_H` is derived.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MachineSpec {
    params: MachineParams,
}

impl MachineSpec {
    pub fn new(params: MachineParams) -> Result<Self> {
        let p = &params;
        let positive = [
            ("E_C", p.e_c),
            ("E_H", p.e_h),
            ("T_C", p.t_c),
            ("T_R", p.t_r),
            ("T_H", p.t_h),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::InvalidSpec(format!(
                    "{name} must be positive and finite, got {value}"
                )));
            }
        }
        let non_negative = [("p_C", p.p_c), ("p_R", p.p_r), ("p_H", p.p_h), ("g", p.g)];
        for (name, value) in non_negative {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(Error::InvalidSpec(format!(
                    "{name} must be non-negative and finite, got {value}"
                )));
            }
        }
        if p.e_c == p.e_h {
            return Err(Error::InvalidSpec("E_C and E_H must differ".into()));
        }
        if !(p.t_c <= p.t_r && p.t_r <= p.t_h) {
            return Err(Error::InvalidSpec(format!(
                "bath temperatures must satisfy T_C <= T_R <= T_H, got {}, {}, {}",
                p.t_c, p.t_r, p.t_h
            )));
        }
        Ok(Self { params })
    }

    pub fn params(&self) -> &MachineParams {
        &self.params
    }

    pub fn g(&self) -> f64 {
        self.params.g
    }

    pub fn energy(&self, q: Qubit) -> f64 {
        match q {
            Qubit::C => self.params.e_c,
            Qubit::R => self.params.e_c + self.params.e_h,
            Qubit::H => self.params.e_h,
        }
    }

    pub fn temperature(&self, q: Qubit) -> f64 {
        match q {
            Qubit::C => self.params.t_c,
            Qubit::R => self.params.t_r,
            Qubit::H => self.params.t_h,
        }
    }

    pub fn rate(&self, q: Qubit) -> f64 {
        match q {
            Qubit::C => self.params.p_c,
            Qubit::R => self.params.p_r,
            Qubit::H => self.params.p_h,
        }
    }

    /// `p_C + p_R + p_H`.
    pub fn total_rate(&self) -> f64 {
        Qubit::ALL.iter().map(|&q| self.rate(q)).sum()
    }

    /// Bath thermal state of qubit `q`.
    pub fn thermal(&self, q: Qubit) -> ThermalQubit {
        // Validated at construction.
        thermal_qubit(self.energy(q), self.temperature(q)).expect("validated spec")
    }

    /// Largest eigenvalue of the free Hamiltonian, `E_C + E_R + E_H`.
    pub fn max_energy(&self) -> f64 {
        Qubit::ALL.iter().map(|&q| self.energy(q)).sum()
    }

    /// Copy of this spec with different parameters, revalidated.
    pub fn with_params(&self, f: impl FnOnce(&mut MachineParams)) -> Result<Self> {
        let mut params = self.params;
        f(&mut params);
        Self::new(params)
    }
}

/// An 8x8 density matrix of the three qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(Matrix8c);

/// Deviations of a matrix from being a valid state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateDiagnostics {
    pub trace_error: f64,
    pub hermiticity_error: f64,
    pub min_eigenvalue: f64,
}

impl StateDiagnostics {
    pub fn is_valid(&self) -> bool {
        self.trace_error <= TRACE_TOL
            && self.hermiticity_error <= HERMITIAN_TOL
            && self.min_eigenvalue >= -POSITIVITY_TOL
    }
}

impl DensityMatrix {
    /// Checks Hermiticity, unit trace and positivity.
    pub fn new(m: Matrix8c) -> Result<Self> {
        let d = diagnostics(&m);
        if d.hermiticity_error > HERMITIAN_TOL {
            return Err(Error::NotHermitian {
                deviation: d.hermiticity_error,
            });
        }
        if d.trace_error > TRACE_TOL {
            return Err(Error::InvalidState(format!(
                "trace deviates from 1 by {:e}",
                d.trace_error
            )));
        }
        if d.min_eigenvalue < -POSITIVITY_TOL {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {:e}",
                d.min_eigenvalue
            )));
        }
        Ok(Self(m))
    }

    /// Wraps a matrix that is a valid state by construction.
    pub(crate) fn new_unchecked(m: Matrix8c) -> Self {
        Self(m)
    }

    pub fn matrix(&self) -> &Matrix8c {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix8c {
        self.0
    }

    /// Element `(i, j)` using 1-based indices.
    pub fn entry(&self, i: usize, j: usize) -> C64 {
        self.0[(i - 1, j - 1)]
    }

    /// Diagonal element `k` (1-based).
    pub fn population(&self, k: usize) -> f64 {
        self.0[(k - 1, k - 1)].re
    }

    pub fn diagnostics(&self) -> StateDiagnostics {
        diagnostics(&self.0)
    }
}

fn diagnostics(m: &Matrix8c) -> StateDiagnostics {
    let hermiticity_error = max_anti_hermitian(m);
    let trace_error = (m.trace() - C64::from(1.0)).norm();
    let sym = (m + m.adjoint()) * C64::from(0.5);
    let min_eigenvalue = sym
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    StateDiagnostics {
        trace_error,
        hermiticity_error,
        min_eigenvalue,
    }
}

fn max_anti_hermitian<const N: usize>(m: &SMatrix<C64, N, N>) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..N {
        for j in i..N {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// The product of the three bath thermal states, `tau_C (x) tau_R (x) tau_H`.
pub fn product_thermal(spec: &MachineSpec) -> DensityMatrix {
    let taus = Qubit::ALL.map(|q| spec.thermal(q));
    let mut m = Matrix8c::zeros();
    for k in 0..DIM {
        let p: f64 = Qubit::ALL
            .iter()
            .zip(&taus)
            .map(|(&q, t)| t.population(q.bit(k)))
            .product();
        m[(k, k)] = C64::from(p);
    }
    DensityMatrix::new_unchecked(m)
}

/// Partial trace over qubit `q`, leaving the other two in their original order.
pub fn trace_out(rho: &Matrix8c, q: Qubit) -> Matrix4c {
    let mut out = Matrix4c::zeros();
    for a in 0..4 {
        for b in 0..4 {
            out[(a, b)] = (0..2).map(|x| rho[(q.expand(a, x), q.expand(b, x))]).sum();
        }
    }
    out
}

/// Tensor product with `single` placed at qubit `q`'s position.
pub fn insert_qubit(single: &Matrix2c, rest: &Matrix4c, q: Qubit) -> Matrix8c {
    Matrix8c::from_fn(|a, b| single[(q.bit(a), q.bit(b))] * rest[(q.compress(a), q.compress(b))])
}

/// Reduced state of a single qubit.
pub fn reduce_to_qubit(rho: &Matrix8c, q: Qubit) -> Matrix2c {
    let mut out = Matrix2c::zeros();
    for a in 0..DIM {
        for b in 0..DIM {
            if q.compress(a) == q.compress(b) {
                out[(q.bit(a), q.bit(b))] += rho[(a, b)];
            }
        }
    }
    out
}

/// Eigenvalues of a Hermitian matrix in ascending order.
pub fn hermitian_eigenvalues<const N: usize>(m: &SMatrix<C64, N, N>) -> Result<Vec<f64>> {
    let deviation = max_anti_hermitian(m);
    if deviation > EIGEN_HERMITIAN_TOL {
        return Err(Error::NotHermitian { deviation });
    }
    let sym = nalgebra::DMatrix::from_iterator(N, N, ((m + m.adjoint()) * C64::from(0.5)).iter().copied());
    let mut values: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    values.sort_by(f64::total_cmp);
    Ok(values)
}
