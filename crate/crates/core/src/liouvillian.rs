//! The reset-model master equation
//!
//! ```text
//! d rho/dt = -i [H0 + Hint, rho] + sum_i p_i (tau_i (x) Tr_i(rho) - rho)
//! ```
//!
//! in three forms: applied directly to an 8x8 matrix, as a 64x64
//! superoperator on the column-stacked matrix, and as the 9-variable affine
//! system `dv/dt = A v + u` that is closed for states whose only coherence
//! is the (3,6) element.
//!
//! Reduced coordinates are `(rho_11, ..., rho_77, Re rho_36, Im rho_36)` with
//! `rho_88 = 1 - sum_{k<=7} rho_kk` eliminated through the trace.

use nalgebra::{DMatrix, DVector, SMatrix, SVector};

use crate::error::{Error, Result};
use crate::hilbert::{
    insert_qubit, trace_out, DensityMatrix, MachineSpec, Matrix2c, Matrix8c, Qubit, C64, DIM, LOWER_DEGENERATE,
    UPPER_DEGENERATE, ZERO,
};

/// Number of reduced coordinates.
pub const REDUCED_DIM: usize = 9;
/// Full vectorized dimension.
pub const FULL_DIM: usize = DIM * DIM;

/// Position of `Re rho_36` in a reduced vector.
pub const RE_COHERENCE: usize = 7;
/// Position of `Im rho_36` in a reduced vector.
pub const IM_COHERENCE: usize = 8;

/// Largest off-diagonal magnitude tolerated outside the (3,6) pair by
/// [`ReducedState::extract`].
pub const STRUCTURE_TOL: f64 = 1e-10;

const LO: usize = LOWER_DEGENERATE - 1;
const HI: usize = UPPER_DEGENERATE - 1;

pub type Matrix9 = SMatrix<f64, REDUCED_DIM, REDUCED_DIM>;
pub type Vector9 = SVector<f64, REDUCED_DIM>;

/// `H0 + Hint`.
#[derive(Debug, Clone, PartialEq)]
pub struct Hamiltonian(Matrix8c);

impl Hamiltonian {
    pub fn matrix(&self) -> &Matrix8c {
        &self.0
    }
}

pub fn build_hamiltonian(spec: &MachineSpec) -> Hamiltonian {
    let mut h = Matrix8c::zeros();
    for k in 0..DIM {
        let e: f64 = Qubit::ALL.iter().map(|&q| spec.energy(q) * q.bit(k) as f64).sum();
        h[(k, k)] = C64::from(e);
    }
    h[(LO, HI)] = C64::from(spec.g());
    h[(HI, LO)] = C64::from(spec.g());
    Hamiltonian(h)
}

/// Characteristic rates that bound the integrator step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateScales {
    /// Interaction strength `g`.
    pub coupling: f64,
    /// `p_C + p_R + p_H`.
    pub dissipation: f64,
    /// Largest Hamiltonian phase rate; `None` in the reduced frame, where the
    /// degenerate pair carries no free phase.
    pub max_energy: Option<f64>,
}

impl RateScales {
    const EPS: f64 = 1e-12;

    /// Largest stable RK4 step: `0.05 min(1/(2g), 1/sum p, 1/E_max)`.
    pub fn step_bound(&self) -> f64 {
        let mut fastest = (1.0 / (2.0 * self.coupling + Self::EPS)).min(1.0 / (self.dissipation + Self::EPS));
        if let Some(e) = self.max_energy {
            fastest = fastest.min(1.0 / (e + Self::EPS));
        }
        0.05 * fastest
    }
}

/// The generator applied to 8x8 matrices.
#[derive(Debug, Clone)]
pub struct MasterEquation {
    hamiltonian: Matrix8c,
    baths: [(f64, Matrix2c); 3],
}

impl MasterEquation {
    pub fn new(spec: &MachineSpec) -> Self {
        Self {
            hamiltonian: build_hamiltonian(spec).0,
            baths: Qubit::ALL.map(|q| (spec.rate(q), spec.thermal(q).state())),
        }
    }

    /// `d rho/dt` at `rho`.
    pub fn apply(&self, rho: &Matrix8c) -> Matrix8c {
        let h = &self.hamiltonian;
        let mut out = (h * rho - rho * h) * C64::new(0.0, -1.0);
        for (q, (rate, tau)) in Qubit::ALL.iter().zip(&self.baths) {
            if *rate == 0.0 {
                continue;
            }
            let reset = insert_qubit(tau, &trace_out(rho, *q), *q);
            out += (reset - rho) * C64::from(*rate);
        }
        out
    }
}

/// Instantaneous derivative of `rho` under the master equation.
pub fn apply_generator(spec: &MachineSpec, rho: &Matrix8c) -> Matrix8c {
    MasterEquation::new(spec).apply(rho)
}

/// Column-stacking index of element `(row, col)`.
pub fn vec_index(row: usize, col: usize) -> usize {
    row + DIM * col
}

pub fn vectorize(rho: &Matrix8c) -> DVector<C64> {
    DVector::from_iterator(FULL_DIM, rho.iter().copied())
}

pub fn unvectorize(v: &DVector<C64>) -> Matrix8c {
    Matrix8c::from_iterator(v.iter().copied())
}

/// The generator as a 64x64 matrix acting on `vec(rho)`.
#[derive(Debug, Clone)]
pub struct FullSuperoperator {
    dense: DMatrix<C64>,
    // CSR copy of `dense`; the integrator only needs sparse products.
    row_start: Vec<usize>,
    cols: Vec<usize>,
    values: Vec<C64>,
    scales: RateScales,
}

impl FullSuperoperator {
    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.dense
    }

    pub fn scales(&self) -> RateScales {
        self.scales
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// `L vec(rho)`.
    pub fn apply(&self, v: &DVector<C64>) -> DVector<C64> {
        let mut out = DVector::from_element(FULL_DIM, ZERO);
        self.apply_into(v, &mut out);
        out
    }

    pub(crate) fn apply_into(&self, v: &DVector<C64>, out: &mut DVector<C64>) {
        for row in 0..FULL_DIM {
            let mut acc = ZERO;
            for k in self.row_start[row]..self.row_start[row + 1] {
                acc += self.values[k] * v[self.cols[k]];
            }
            out[row] = acc;
        }
    }
}

pub fn build_full_superoperator(spec: &MachineSpec) -> FullSuperoperator {
    let h = build_hamiltonian(spec).0;
    let mut l = DMatrix::from_element(FULL_DIM, FULL_DIM, ZERO);
    let minus_i = C64::new(0.0, -1.0);
    for a in 0..DIM {
        for b in 0..DIM {
            let row = vec_index(a, b);
            for c in 0..DIM {
                // -i H rho
                if h[(a, c)] != ZERO {
                    l[(row, vec_index(c, b))] += minus_i * h[(a, c)];
                }
                // +i rho H
                if h[(c, b)] != ZERO {
                    l[(row, vec_index(a, c))] -= minus_i * h[(c, b)];
                }
            }
            for q in Qubit::ALL {
                let rate = spec.rate(q);
                if rate == 0.0 {
                    continue;
                }
                l[(row, row)] -= C64::from(rate);
                if q.bit(a) != q.bit(b) {
                    continue;
                }
                let weight = rate * spec.thermal(q).population(q.bit(a));
                for x in 0..2 {
                    let a2 = q.expand(q.compress(a), x);
                    let b2 = q.expand(q.compress(b), x);
                    l[(row, vec_index(a2, b2))] += C64::from(weight);
                }
            }
        }
    }

    let mut row_start = Vec::with_capacity(FULL_DIM + 1);
    let mut cols = Vec::new();
    let mut values = Vec::new();
    for row in 0..FULL_DIM {
        row_start.push(values.len());
        for col in 0..FULL_DIM {
            let z = l[(row, col)];
            if z != ZERO {
                cols.push(col);
                values.push(z);
            }
        }
    }
    row_start.push(values.len());

    FullSuperoperator {
        dense: l,
        row_start,
        cols,
        values,
        scales: RateScales {
            coupling: spec.g(),
            dissipation: spec.total_rate(),
            max_energy: Some(spec.max_energy()),
        },
    }
}

/// A state with diagonal populations plus the (3,6) coherence, in reduced
/// coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedState(Vector9);

impl ReducedState {
    pub fn from_vector(v: Vector9) -> Self {
        Self(v)
    }

    pub fn vector(&self) -> &Vector9 {
        &self.0
    }

    /// Population of basis state `k` (1-based, 1..=8).
    pub fn population(&self, k: usize) -> f64 {
        assert!((1..=DIM).contains(&k), "population index {k} out of range");
        if k == DIM {
            1.0 - self.0.rows(0, DIM - 1).sum()
        } else {
            self.0[k - 1]
        }
    }

    pub fn populations(&self) -> [f64; DIM] {
        std::array::from_fn(|i| self.population(i + 1))
    }

    /// `rho_36`.
    pub fn coherence(&self) -> C64 {
        C64::new(self.0[RE_COHERENCE], self.0[IM_COHERENCE])
    }

    /// Ground-state population of qubit `q`.
    pub fn ground_population(&self, q: Qubit) -> f64 {
        (0..DIM)
            .filter(|&k| q.bit(k) == 0)
            .map(|k| self.population(k + 1))
            .sum()
    }

    pub fn to_matrix(&self) -> Matrix8c {
        let mut m = Matrix8c::zeros();
        for k in 0..DIM {
            m[(k, k)] = C64::from(self.population(k + 1));
        }
        m[(LO, HI)] = self.coherence();
        m[(HI, LO)] = self.coherence().conj();
        m
    }

    /// Embeds into an 8x8 density matrix. The result is Hermitian with unit
    /// trace by construction; positivity holds whenever the coordinates come
    /// from a physical evolution.
    pub fn embed(&self) -> DensityMatrix {
        DensityMatrix::new_unchecked(self.to_matrix())
    }

    /// Reads the reduced coordinates of a matrix whose only coherence is the
    /// (3,6) pair.
    pub fn extract(rho: &Matrix8c) -> Result<Self> {
        for i in 0..DIM {
            for j in 0..DIM {
                if i == j || (i, j) == (LO, HI) || (i, j) == (HI, LO) {
                    continue;
                }
                let magnitude = rho[(i, j)].norm();
                if magnitude > STRUCTURE_TOL {
                    return Err(Error::Structure {
                        row: i + 1,
                        col: j + 1,
                        magnitude,
                    });
                }
            }
        }
        let mut v = Vector9::zeros();
        for k in 0..DIM - 1 {
            v[k] = rho[(k, k)].re;
        }
        v[RE_COHERENCE] = rho[(LO, HI)].re;
        v[IM_COHERENCE] = rho[(LO, HI)].im;
        Ok(Self(v))
    }
}

/// `dv/dt = A v + u` in reduced coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedSystem {
    pub a: Matrix9,
    pub u: Vector9,
    scales: RateScales,
}

impl ReducedSystem {
    pub fn scales(&self) -> RateScales {
        self.scales
    }

    pub fn rate(&self, v: &Vector9) -> Vector9 {
        self.a * v + self.u
    }
}

/// Builds `A` and `u` from the closed-form matrix elements of the reset
/// channels and the degenerate-pair exchange.
pub fn build_reduced_system(spec: &MachineSpec) -> ReducedSystem {
    // Population dynamics dP/dt = M P on all eight populations.
    let mut m = SMatrix::<f64, DIM, DIM>::zeros();
    for q in Qubit::ALL {
        let rate = spec.rate(q);
        let tau = spec.thermal(q);
        for k in 0..DIM {
            let flipped = k ^ q.mask();
            let target = tau.population(q.bit(k));
            m[(k, k)] += rate * (target - 1.0);
            m[(k, flipped)] += rate * target;
        }
    }

    // Eliminate P_8 = 1 - sum_{k<8} P_k.
    let last = DIM - 1;
    let mut a = Matrix9::zeros();
    let mut u = Vector9::zeros();
    for k in 0..last {
        for l in 0..last {
            a[(k, l)] = m[(k, l)] - m[(k, last)];
        }
        u[k] = m[(k, last)];
    }

    let g = spec.g();
    let total = spec.total_rate();
    // Exchange inside the degenerate pair: dP_3/dt = -2g Im rho_36, dP_6/dt = +2g Im rho_36.
    a[(LO, IM_COHERENCE)] -= 2.0 * g;
    a[(HI, IM_COHERENCE)] += 2.0 * g;
    // Every reset channel destroys the coherence; the free phase cancels by degeneracy.
    a[(RE_COHERENCE, RE_COHERENCE)] = -total;
    a[(IM_COHERENCE, IM_COHERENCE)] = -total;
    // d Im rho_36/dt = -g (P_6 - P_3) - (sum p) Im rho_36.
    a[(IM_COHERENCE, HI)] -= g;
    a[(IM_COHERENCE, LO)] += g;

    ReducedSystem {
        a,
        u,
        scales: RateScales {
            coupling: g,
            dissipation: total,
            max_energy: None,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{product_thermal, MachineParams};
    use proptest::prelude::*;

    fn spec(p_c: f64, p_r: f64, p_h: f64, g: f64) -> MachineSpec {
        MachineSpec::new(MachineParams::reference(p_c, p_r, p_h, g)).unwrap()
    }

    fn max_abs(m: &Matrix8c) -> f64 {
        m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// A random physical state restricted to the reduced form.
    fn reduced_from_seed(seed: &[f64]) -> ReducedState {
        let w: Vec<f64> = seed[..8].iter().map(|x| x.abs() + 1e-3).collect();
        let total: f64 = w.iter().sum();
        let mut v = Vector9::zeros();
        for k in 0..7 {
            v[k] = w[k] / total;
        }
        let bound = (w[LO] * w[HI]).sqrt() / total;
        let phase = seed[8] * std::f64::consts::PI;
        let radius = bound * seed[9].abs().min(1.0);
        v[RE_COHERENCE] = radius * phase.cos();
        v[IM_COHERENCE] = radius * phase.sin();
        ReducedState::from_vector(v)
    }

    #[test]
    fn hamiltonian_without_interaction() {
        let h = build_hamiltonian(&spec(1e-3, 1e-3, 1e-3, 0.0));
        let expected = [0.0, 100.0, 101.0, 201.0, 1.0, 101.0, 102.0, 202.0];
        for (k, e) in expected.iter().enumerate() {
            assert_eq!(h.matrix()[(k, k)], C64::from(*e));
        }
        assert_eq!(h.matrix()[(2, 2)], h.matrix()[(5, 5)]);
    }

    #[test]
    fn hamiltonian_interaction_support() {
        let h = build_hamiltonian(&spec(1e-3, 1e-3, 1e-3, 1e-2));
        for i in 0..8 {
            for j in 0..8 {
                if i == j {
                    continue;
                }
                let expected = if (i, j) == (2, 5) || (i, j) == (5, 2) {
                    1e-2
                } else {
                    0.0
                };
                assert_eq!(h.matrix()[(i, j)], C64::from(expected));
            }
        }
    }

    #[test]
    fn generator_fixes_product_state_without_interaction() {
        let s = spec(1e-5, 1e-3, 1e-5, 0.0);
        let rho = product_thermal(&s);
        assert_eq!(max_abs(&apply_generator(&s, rho.matrix())), 0.0);
    }

    #[test]
    fn generator_unitary_exchange_on_degenerate_pair() {
        let (a, b, g) = (0.3, 0.1, 0.02);
        let s = spec(0.0, 0.0, 0.0, g);
        let mut rho = Matrix8c::zeros();
        rho[(0, 0)] = C64::from(1.0 - a - b);
        rho[(2, 2)] = C64::from(a);
        rho[(5, 5)] = C64::from(b);
        let d = apply_generator(&s, &rho);
        // -i [H, rho]_36 = -i g (rho_66 - rho_33), no population drive at t = 0.
        assert!((d[(2, 5)] - C64::new(0.0, -g * (b - a))).norm() < 1e-18);
        assert!((d[(5, 2)] - d[(2, 5)].conj()).norm() < 1e-18);
        for k in 0..8 {
            assert_eq!(d[(k, k)], ZERO);
        }
    }

    #[test]
    fn generator_is_traceless_and_hermitian() {
        let s = spec(1e-4, 1e-3, 1e-5, 1e-2);
        let seed: Vec<f64> = (0..128).map(|i| ((i * 37 % 101) as f64 / 50.0) - 1.0).collect();
        let x = Matrix8c::from_fn(|i, j| C64::new(seed[i * 8 + j], seed[64 + i * 8 + j]));
        let rho = (x * x.adjoint()) / (x * x.adjoint()).trace();
        let d = apply_generator(&s, &rho);
        assert!(d.trace().norm() < 1e-12);
        assert!((d - d.adjoint()).iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn full_superoperator_is_trace_preserving() {
        let l = build_full_superoperator(&spec(1e-4, 1e-3, 1e-5, 1e-2));
        for col in 0..FULL_DIM {
            let s: C64 = (0..DIM).map(|k| l.matrix()[(vec_index(k, k), col)]).sum();
            assert!(s.norm() < 1e-12, "column {col}: {s}");
        }
    }

    #[test]
    fn full_superoperator_decouples_populations_without_interaction() {
        let l = build_full_superoperator(&spec(1e-4, 1e-3, 1e-5, 0.0));
        for a in 0..DIM {
            for b in 0..DIM {
                for c in 0..DIM {
                    let from_coherence = l.matrix()[(vec_index(a, a), vec_index(b, c))];
                    if b != c {
                        assert_eq!(from_coherence, ZERO);
                    }
                }
            }
        }
        // Population block: non-negative off-diagonal rates, zero column sums.
        for a in 0..DIM {
            for b in 0..DIM {
                let z = l.matrix()[(vec_index(a, a), vec_index(b, b))];
                assert_eq!(z.im, 0.0);
                if a != b {
                    assert!(z.re >= 0.0);
                }
            }
        }
    }

    #[test]
    fn reduced_rows_match_closed_form() {
        let (pc, pr, ph, g) = (1e-4, 1e-3, 2e-5, 3e-2);
        let sys = build_reduced_system(&spec(pc, pr, ph, g));
        let total = pc + pr + ph;
        let mut re_row = Vector9::zeros();
        re_row[RE_COHERENCE] = -total;
        assert_eq!(sys.a.row(RE_COHERENCE).transpose(), re_row);
        let mut im_row = Vector9::zeros();
        im_row[LO] = g;
        im_row[HI] = -g;
        im_row[IM_COHERENCE] = -total;
        assert_eq!(sys.a.row(IM_COHERENCE).transpose(), im_row);
        assert_eq!(sys.u[RE_COHERENCE], 0.0);
        assert_eq!(sys.u[IM_COHERENCE], 0.0);
    }

    #[test]
    fn reduced_system_is_homogeneous_without_baths() {
        let sys = build_reduced_system(&spec(0.0, 0.0, 0.0, 1e-2));
        assert_eq!(sys.u, Vector9::zeros());
    }

    #[test]
    fn extract_rejects_stray_coherence() {
        let mut rho = *product_thermal(&spec(1e-5, 1e-3, 1e-5, 1e-2)).matrix();
        let v = ReducedState::extract(&rho).unwrap();
        assert_eq!(v.coherence(), ZERO);
        rho[(1, 4)] = C64::new(1e-3, 0.0);
        rho[(4, 1)] = C64::new(1e-3, 0.0);
        assert!(matches!(
            ReducedState::extract(&rho),
            Err(Error::Structure { row: 2, col: 5, .. })
        ));
    }

    #[test]
    fn ground_population_matches_partial_trace() {
        let v = reduced_from_seed(&[0.3, 0.1, 0.5, 0.2, 0.7, 0.4, 0.05, 0.6, 0.25, 0.8]);
        let rho = v.to_matrix();
        for q in Qubit::ALL {
            let red = crate::hilbert::reduce_to_qubit(&rho, q);
            assert!((red[(0, 0)].re - v.ground_population(q)).abs() < 1e-15);
        }
    }

    proptest! {
        #[test]
        fn superoperator_matches_generator(seed in proptest::collection::vec(-1.0f64..1.0, 128), g in 0.0f64..0.1) {
            let s = spec(2e-4, 1e-3, 5e-5, g);
            let x = Matrix8c::from_fn(|i, j| C64::new(seed[i * 8 + j], seed[64 + i * 8 + j]));
            let h = x + x.adjoint();
            let rho = h / h.trace();
            let lhs = build_full_superoperator(&s).apply(&vectorize(&rho));
            let rhs = vectorize(&apply_generator(&s, &rho));
            for k in 0..FULL_DIM {
                prop_assert!((lhs[k] - rhs[k]).norm() <= 1e-12 * (1.0 + rhs[k].norm()));
            }
        }

        #[test]
        fn reduced_system_matches_generator(seed in proptest::collection::vec(-1.0f64..1.0, 10), g in 0.0f64..0.1) {
            let s = spec(2e-4, 1e-3, 5e-5, g);
            let v = reduced_from_seed(&seed);
            let sys = build_reduced_system(&s);
            let direct = apply_generator(&s, &v.to_matrix());
            let projected = ReducedState::extract(&direct).unwrap();
            let reduced = sys.rate(v.vector());
            for k in 0..REDUCED_DIM {
                prop_assert!((reduced[k] - projected.vector()[k]).abs() <= 1e-12);
            }
        }

        #[test]
        fn embed_extract_roundtrip(seed in proptest::collection::vec(-1.0f64..1.0, 10)) {
            let v = reduced_from_seed(&seed);
            let back = ReducedState::extract(&v.to_matrix()).unwrap();
            for k in 0..REDUCED_DIM {
                prop_assert!((back.vector()[k] - v.vector()[k]).abs() <= 1e-15);
            }
            prop_assert!(v.embed().diagnostics().is_valid());
        }
    }
}
