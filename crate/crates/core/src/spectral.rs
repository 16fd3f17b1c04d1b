//! Spectral solution of the reduced system.
//!
//! `v(t) = v_inf + sum_j c_j exp(lambda_j t) e_j` with `v_inf = -A^{-1} u`.
//!
//! Eigenvalues come from a real Schur decomposition. Eigenvectors are
//! computed as null vectors of `A - lambda I` through an SVD, one cluster of
//! (numerically) coincident eigenvalues at a time, so exactly degenerate but
//! diagonalizable generators (e.g. `g = 0`) still get a full eigenbasis.
//! Near-defective generators produce an ill-conditioned basis, which
//! [`solve_coefficients`] refuses.

use nalgebra::{Complex, SMatrix, SVector, Schur};

use crate::error::{Error, Result};
use crate::hilbert::C64;
use crate::liouvillian::{Matrix9, ReducedState, ReducedSystem, IM_COHERENCE, REDUCED_DIM, RE_COHERENCE};

/// Largest condition number of `A` accepted by [`steady_state`].
pub const STEADY_CONDITION_LIMIT: f64 = 1e14;
/// Largest eigenbasis condition number accepted by [`solve_coefficients`].
pub const BASIS_CONDITION_LIMIT: f64 = 1e12;
/// Eigenvalues closer than this (relative to `||A||`) are clustered.
pub const CLUSTER_TOL: f64 = 1e-8;
/// Eigenvalues with `|Im|` below this (relative to `||A||`) count as real.
pub const REAL_TOL: f64 = 1e-10;
/// Per-eigenpair residual bound, relative to `||A||`.
pub const EIGEN_RESIDUAL_TOL: f64 = 1e-9;
/// Absolute residual bound for the coefficient solve.
pub const COEFFICIENT_RESIDUAL_TOL: f64 = 1e-9;
/// Absolute residual bound for the steady-state solve.
pub const STEADY_RESIDUAL_TOL: f64 = 1e-11;

const SCHUR_MAX_ITER: usize = 10_000;

type Matrix9c = SMatrix<C64, REDUCED_DIM, REDUCED_DIM>;
type Vector9c = SVector<C64, REDUCED_DIM>;

fn condition_number<T: nalgebra::ComplexField<RealField = f64>>(m: &SMatrix<T, REDUCED_DIM, REDUCED_DIM>) -> f64 {
    let s = m.clone().singular_values();
    let max = s.max();
    let min = s.min();
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// `v_inf = -A^{-1} u`, with one round of iterative refinement.
pub fn steady_state(sys: &ReducedSystem) -> Result<ReducedState> {
    let condition = condition_number(&sys.a);
    if !(condition < STEADY_CONDITION_LIMIT) {
        return Err(Error::IllConditioned { condition });
    }
    let lu = sys.a.lu();
    let mut v = lu.solve(&(-sys.u)).ok_or(Error::IllConditioned { condition })?;
    if let Some(correction) = lu.solve(&sys.rate(&v)) {
        v -= correction;
    }
    let residual = sys.rate(&v).amax();
    if residual > STEADY_RESIDUAL_TOL {
        return Err(Error::IllConditioned { condition });
    }
    Ok(ReducedState::from_vector(v))
}

/// Eigenvalues and unit eigenvectors (as columns) of `A`.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigendecomposition {
    pub values: Vector9c,
    pub vectors: Matrix9c,
    /// Frobenius norm of `A`, the scale for all relative tolerances.
    pub norm: f64,
}

impl Eigendecomposition {
    pub fn vector(&self, j: usize) -> Vector9c {
        self.vectors.column(j).into_owned()
    }

    /// Largest `||A e_j - lambda_j e_j|| / ||A||` over all pairs.
    pub fn max_relative_residual(&self, a: &Matrix9) -> f64 {
        let ac = a.map(C64::from);
        (0..REDUCED_DIM)
            .map(|j| {
                let e = self.vector(j);
                (ac * e - e * self.values[j]).norm() / self.norm
            })
            .fold(0.0, f64::max)
    }
}

fn normalize(mut e: Vector9c) -> Vector9c {
    e /= C64::from(e.norm());
    // Fix the phase: largest component real and positive.
    let pivot = e
        .iter()
        .copied()
        .max_by(|a, b| a.norm().total_cmp(&b.norm()))
        .unwrap_or(C64::from(1.0));
    if pivot.norm() > 0.0 {
        e *= pivot.conj() / C64::from(pivot.norm());
    }
    e
}

/// The `count` right singular vectors of `m` with smallest singular values.
fn null_vectors(m: Matrix9c, count: usize) -> Option<Vec<Vector9c>> {
    let svd = m.svd(false, true);
    let v_t = svd.v_t?;
    let s = svd.singular_values;
    let mut order: Vec<usize> = (0..REDUCED_DIM).collect();
    order.sort_by(|&a, &b| s[a].total_cmp(&s[b]));
    Some(
        order[..count]
            .iter()
            .map(|&i| v_t.row(i).adjoint().into_owned())
            .collect(),
    )
}

fn null_vectors_real(m: Matrix9, count: usize) -> Option<Vec<Vector9c>> {
    let svd = m.svd(false, true);
    let v_t = svd.v_t?;
    let s = svd.singular_values;
    let mut order: Vec<usize> = (0..REDUCED_DIM).collect();
    order.sort_by(|&a, &b| s[a].total_cmp(&s[b]));
    Some(
        order[..count]
            .iter()
            .map(|&i| v_t.row(i).transpose().map(C64::from))
            .collect(),
    )
}

/// Eigenpairs for one group of eigenvalues sharing the shift `shift`.
fn cluster_pairs(a: &Matrix9, shift: C64, count: usize) -> Option<Vec<(C64, Vector9c)>> {
    let ac = a.map(C64::from);
    let vectors = if shift.im == 0.0 {
        null_vectors_real(a - Matrix9::identity() * shift.re, count)?
    } else {
        null_vectors(ac - Matrix9c::identity() * shift, count)?
    };
    Some(
        vectors
            .into_iter()
            .map(|e| {
                let e = normalize(e);
                // Rayleigh quotient; exact for a true eigenvector of any matrix.
                let mut lambda = (e.adjoint() * ac * e)[(0, 0)];
                if shift.im == 0.0 {
                    lambda.im = 0.0;
                }
                (lambda, e)
            })
            .collect(),
    )
}

fn residual(a: &Matrix9, lambda: C64, e: &Vector9c) -> f64 {
    (a.map(C64::from) * e - e * lambda).norm()
}

/// Diagonalizes `A`.
pub fn eigendecompose(sys: &ReducedSystem) -> Result<Eigendecomposition> {
    let a = sys.a;
    let norm = a.norm();
    if norm == 0.0 {
        return Ok(Eigendecomposition {
            values: Vector9c::zeros(),
            vectors: Matrix9c::identity(),
            norm,
        });
    }
    let schur = Schur::try_new(a, f64::EPSILON, SCHUR_MAX_ITER).ok_or_else(|| Error::NoConvergence {
        iterations: SCHUR_MAX_ITER,
        detail: "real Schur iteration did not converge".into(),
    })?;
    let mut raw: Vec<C64> = schur
        .complex_eigenvalues()
        .iter()
        .map(|z| {
            if z.im.abs() <= REAL_TOL * norm {
                Complex::new(z.re, 0.0)
            } else {
                *z
            }
        })
        .collect();
    raw.sort_by(|x, y| y.re.total_cmp(&x.re).then(y.im.total_cmp(&x.im)));

    // Single-linkage clustering.
    let n = raw.len();
    let mut label: Vec<usize> = (0..n).collect();
    for i in 0..n {
        for j in (i + 1)..n {
            if (raw[i] - raw[j]).norm() <= CLUSTER_TOL * norm {
                let (from, to) = (label[j], label[i]);
                for l in label.iter_mut() {
                    if *l == from {
                        *l = to;
                    }
                }
            }
        }
    }
    let mut clusters: Vec<Vec<C64>> = Vec::new();
    let mut seen = Vec::new();
    for i in 0..n {
        if !seen.contains(&label[i]) {
            seen.push(label[i]);
            clusters.push((0..n).filter(|&j| label[j] == label[i]).map(|j| raw[j]).collect());
        }
    }

    let tol = EIGEN_RESIDUAL_TOL * norm;
    let mut pairs: Vec<(C64, Vector9c)> = Vec::with_capacity(n);
    for members in &clusters {
        let mean = members.iter().sum::<C64>() / C64::from(members.len() as f64);
        let shift = if mean.im.abs() <= REAL_TOL * norm {
            Complex::new(mean.re, 0.0)
        } else {
            mean
        };
        if shift.im < 0.0 {
            // Filled in from the conjugate cluster below.
            continue;
        }
        let mut found = cluster_pairs(&a, shift, members.len());
        let clean = found
            .as_ref()
            .is_some_and(|ps| ps.iter().all(|(l, e)| residual(&a, *l, e) <= tol));
        if !clean && members.len() > 1 {
            // Probably a defective crossing: take one null vector per eigenvalue.
            let mut individual = Vec::new();
            for z in members {
                let mut ps = cluster_pairs(&a, *z, 1).unwrap_or_default();
                individual.append(&mut ps);
            }
            found = Some(individual);
        }
        let found = found.ok_or_else(|| Error::NoConvergence {
            iterations: SCHUR_MAX_ITER,
            detail: format!("SVD failed near eigenvalue {shift}"),
        })?;
        for (lambda, e) in found {
            let r = residual(&a, lambda, &e);
            if r > tol {
                return Err(Error::NoConvergence {
                    iterations: SCHUR_MAX_ITER,
                    detail: format!(
                        "eigenpair residual {:e} exceeds {:e} at {lambda}",
                        r / norm,
                        EIGEN_RESIDUAL_TOL
                    ),
                });
            }
            if lambda.im > 0.0 {
                pairs.push((lambda.conj(), e.map(|z| z.conj())));
            }
            pairs.push((lambda, e));
        }
    }
    if pairs.len() != n {
        return Err(Error::NoConvergence {
            iterations: SCHUR_MAX_ITER,
            detail: format!("recovered {} of {n} eigenpairs", pairs.len()),
        });
    }
    pairs.sort_by(|x, y| y.0.re.total_cmp(&x.0.re).then(y.0.im.total_cmp(&x.0.im)));

    let values = Vector9c::from_iterator(pairs.iter().map(|p| p.0));
    let mut vectors = Matrix9c::zeros();
    for (j, (_, e)) in pairs.iter().enumerate() {
        vectors.set_column(j, e);
    }
    Ok(Eigendecomposition { values, vectors, norm })
}

/// Eigendecomposition together with the expansion of one initial state.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub eigen: Eigendecomposition,
    pub coefficients: Vector9c,
    /// Condition number of the eigenvector matrix.
    pub condition_number: f64,
}

impl Spectrum {
    pub fn eigenvalues(&self) -> &Vector9c {
        &self.eigen.values
    }

    /// `sum_j c_j exp(lambda_j t) e_j`, before taking the real part.
    pub fn homogeneous(&self, t: f64) -> Vector9c {
        let weights = Vector9c::from_fn(|j, _| self.coefficients[j] * (self.eigen.values[j] * t).exp());
        self.eigen.vectors * weights
    }
}

/// Solves `sum_j c_j e_j = v0 - v_inf`.
pub fn solve_coefficients(eigen: Eigendecomposition, v0: &ReducedState, v_inf: &ReducedState) -> Result<Spectrum> {
    let condition = condition_number(&eigen.vectors);
    if !(condition < BASIS_CONDITION_LIMIT) {
        return Err(Error::DefectiveBasis { condition });
    }
    let rhs: Vector9c = (v0.vector() - v_inf.vector()).map(C64::from);
    let coefficients = eigen
        .vectors
        .lu()
        .solve(&rhs)
        .ok_or(Error::DefectiveBasis { condition })?;
    let residual = (eigen.vectors * coefficients - rhs).camax();
    if residual > COEFFICIENT_RESIDUAL_TOL {
        return Err(Error::DefectiveBasis { condition });
    }
    Ok(Spectrum {
        eigen,
        coefficients,
        condition_number: condition,
    })
}

/// `v(t) = v_inf + Re sum_j c_j exp(lambda_j t) e_j`.
pub fn evolve_spectral(spectrum: &Spectrum, v_inf: &ReducedState, t: f64) -> ReducedState {
    let h = spectrum.homogeneous(t);
    ReducedState::from_vector(v_inf.vector() + h.map(|z| z.re))
}

/// Steady state plus spectral expansion of a fixed initial state.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSolution {
    pub steady: ReducedState,
    pub spectrum: Spectrum,
}

impl SpectralSolution {
    pub fn new(sys: &ReducedSystem, initial: &ReducedState) -> Result<Self> {
        let steady = steady_state(sys)?;
        let spectrum = solve_coefficients(eigendecompose(sys)?, initial, &steady)?;
        Ok(Self { steady, spectrum })
    }

    pub fn state_at(&self, t: f64) -> ReducedState {
        evolve_spectral(&self.spectrum, &self.steady, t)
    }
}

/// Time-scale content of a spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumClassification {
    /// Real eigenvalue with the largest real part.
    pub lambda_max: C64,
    /// Complex eigenvalue of the coherent oscillation (positive imaginary part);
    /// `None` when the spectrum is entirely real.
    pub lambda_cp: Option<C64>,
    /// `-Re lambda_max`.
    pub decay_rate: f64,
    /// `-Re lambda_cp`.
    pub damping_rate: Option<f64>,
    /// `Im lambda_cp`.
    pub oscillation_angular_frequency: Option<f64>,
    /// Number of complex-conjugate pairs found.
    pub complex_pairs: usize,
}

fn overlap(e: &Vector9c, coords: std::ops::Range<usize>) -> f64 {
    coords.map(|k| e[k].norm_sqr()).sum()
}

pub fn classify(eigen: &Eigendecomposition) -> SpectrumClassification {
    let tol = REAL_TOL * eigen.norm;
    let vals = &eigen.values;

    let mut lambda_max: Option<usize> = None;
    for j in (0..REDUCED_DIM).filter(|&j| vals[j].im.abs() <= tol) {
        lambda_max = Some(match lambda_max {
            None => j,
            Some(best) => {
                let gap = vals[j].re - vals[best].re;
                let tied_with_more_population = gap.abs() <= tol
                    && overlap(&eigen.vector(j), 0..RE_COHERENCE) > overlap(&eigen.vector(best), 0..RE_COHERENCE);
                if gap > tol || tied_with_more_population {
                    j
                } else {
                    best
                }
            }
        });
    }
    // A real 9x9 matrix always has a real eigenvalue.
    let lambda_max = vals[lambda_max.unwrap_or(0)];

    let upper: Vec<usize> = (0..REDUCED_DIM).filter(|&j| vals[j].im > tol).collect();
    let lambda_cp = upper
        .iter()
        .copied()
        .max_by(|&x, &y| {
            let ox = overlap(&eigen.vector(x), RE_COHERENCE..IM_COHERENCE + 1);
            let oy = overlap(&eigen.vector(y), RE_COHERENCE..IM_COHERENCE + 1);
            ox.total_cmp(&oy).then(vals[x].im.total_cmp(&vals[y].im))
        })
        .map(|j| vals[j]);

    SpectrumClassification {
        lambda_max,
        lambda_cp,
        decay_rate: -lambda_max.re,
        damping_rate: lambda_cp.map(|z| -z.re),
        oscillation_angular_frequency: lambda_cp.map(|z| z.im),
        complex_pairs: upper.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{product_thermal, MachineParams, MachineSpec, Qubit};
    use crate::liouvillian::build_reduced_system;
    use approx::assert_relative_eq;

    fn spec(p_c: f64, p_r: f64, p_h: f64, g: f64) -> MachineSpec {
        MachineSpec::new(MachineParams::reference(p_c, p_r, p_h, g)).unwrap()
    }

    fn tau(s: &MachineSpec) -> ReducedState {
        ReducedState::extract(product_thermal(s).matrix()).unwrap()
    }

    #[test]
    fn steady_state_without_interaction_is_product_thermal() {
        let s = spec(1e-5, 1e-3, 1e-5, 0.0);
        let v = steady_state(&build_reduced_system(&s)).unwrap();
        for k in 0..REDUCED_DIM {
            assert!((v.vector()[k] - tau(&s).vector()[k]).abs() < 1e-14);
        }
    }

    #[test]
    fn steady_state_matches_independent_dense_solve() {
        // Cold-qubit ground populations from a separate numpy construction
        // (generator applied to basis matrices, dense solve).
        let s = spec(1e-5, 1e-3, 1e-5, 1e-2);
        let sys = build_reduced_system(&s);
        let v = steady_state(&sys).unwrap();
        assert!(sys.rate(v.vector()).amax() <= STEADY_RESIDUAL_TOL);
        assert_relative_eq!(v.population(1), 6.478_346_43e-1, max_relative = 1e-8);
        assert_relative_eq!(v.vector()[IM_COHERENCE], -4.642_818_42e-5, max_relative = 1e-7);
        assert!(v.embed().diagnostics().is_valid());
    }

    #[test]
    fn singular_generator_is_rejected() {
        let s = spec(0.0, 0.0, 0.0, 1e-2);
        assert!(matches!(
            steady_state(&build_reduced_system(&s)),
            Err(Error::IllConditioned { .. })
        ));
    }

    #[test]
    fn degenerate_spectrum_without_interaction() {
        let (pc, pr, ph) = (1e-4, 1e-3, 1e-5);
        let s = spec(pc, pr, ph, 0.0);
        let sys = build_reduced_system(&s);
        let eig = eigendecompose(&sys).unwrap();
        assert!(eig.max_relative_residual(&sys.a) <= EIGEN_RESIDUAL_TOL);
        let mut got: Vec<f64> = eig
            .values
            .iter()
            .map(|z| {
                assert_eq!(z.im, 0.0);
                -z.re
            })
            .collect();
        got.sort_by(f64::total_cmp);
        // Nonempty subset sums of {p_C, p_R, p_H}, plus two coherence modes at the full sum.
        let mut expected = vec![
            pc,
            pr,
            ph,
            pc + pr,
            pc + ph,
            pr + ph,
            pc + pr + ph,
            pc + pr + ph,
            pc + pr + ph,
        ];
        expected.sort_by(f64::total_cmp);
        for (x, y) in got.iter().zip(&expected) {
            assert_relative_eq!(x, y, max_relative = 1e-9);
        }
        // Full eigenbasis despite the triple degeneracy.
        let sol = solve_coefficients(eig, &tau(&s), &steady_state(&sys).unwrap()).unwrap();
        assert!(sol.condition_number < 1e3);
    }

    #[test]
    fn strong_coupling_pair_frequency() {
        let s = spec(1e-4, 1e-3, 1e-4, 1e-1);
        let sys = build_reduced_system(&s);
        let eig = eigendecompose(&sys).unwrap();
        assert!(eig.max_relative_residual(&sys.a) <= EIGEN_RESIDUAL_TOL);
        let class = classify(&eig);
        assert_eq!(class.complex_pairs, 1);
        let w = class.oscillation_angular_frequency.unwrap();
        assert!((w / 0.2 - 1.0).abs() < 0.01);
        // Conjugate partner present.
        let cp = class.lambda_cp.unwrap();
        assert!(eig.values.iter().any(|z| (*z - cp.conj()).norm() < 1e-15));
    }

    #[test]
    fn coefficients_vanish_at_steady_state() {
        let s = spec(1e-5, 1e-3, 1e-5, 1e-2);
        let sys = build_reduced_system(&s);
        let steady = steady_state(&sys).unwrap();
        let sp = solve_coefficients(eigendecompose(&sys).unwrap(), &steady, &steady).unwrap();
        assert!(sp.coefficients.iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn conjugate_pairs_have_conjugate_coefficients() {
        let s = spec(1e-4, 1e-3, 1e-5, 1e-2);
        let sys = build_reduced_system(&s);
        let sol = SpectralSolution::new(&sys, &tau(&s)).unwrap();
        let vals = sol.spectrum.eigenvalues();
        for i in 0..REDUCED_DIM {
            if vals[i].im > 0.0 {
                let j = (0..REDUCED_DIM).find(|&j| vals[j] == vals[i].conj()).unwrap();
                let (ci, cj) = (sol.spectrum.coefficients[i], sol.spectrum.coefficients[j]);
                assert!((ci - cj.conj()).norm() <= 1e-12 * (1.0 + ci.norm()));
            }
        }
    }

    #[test]
    fn evolution_starts_at_initial_state_and_is_real() {
        let s = spec(1e-5, 1e-3, 1e-5, 1e-2);
        let sys = build_reduced_system(&s);
        let v0 = tau(&s);
        let sol = SpectralSolution::new(&sys, &v0).unwrap();
        let back = sol.state_at(0.0);
        assert!((back.vector() - v0.vector()).amax() <= 1e-9);
        for t in [0.0, 10.0, 157.0, 1e4, 1e6] {
            let imag = sol.spectrum.homogeneous(t).map(|z| z.im.abs()).max();
            assert!(imag <= 1e-10, "t = {t}: {imag:e}");
        }
        let late = sol.state_at(20.0 / 1e-5);
        assert!((late.vector() - sol.steady.vector()).amax() < 1e-6);
    }

    #[test]
    fn decay_rate_equal_smaller_couplings() {
        for g in [1e-6, 1e-4, 1e-2, 1e-1] {
            let eig = eigendecompose(&build_reduced_system(&spec(2e-5, 1e-3, 2e-5, g))).unwrap();
            let c = classify(&eig);
            assert!((c.decay_rate / 2e-5 - 1.0).abs() < 0.01, "g = {g}: {}", c.decay_rate);
        }
    }

    #[test]
    fn damping_rate_limits() {
        let total = 1e-4 + 1e-3 + 1e-4;
        let weak = classify(&eigendecompose(&build_reduced_system(&spec(1e-4, 1e-3, 1e-4, 1e-6))).unwrap());
        assert!((weak.damping_rate.unwrap() / total - 1.0).abs() < 0.01);
        let strong = classify(&eigendecompose(&build_reduced_system(&spec(1e-4, 1e-3, 1e-4, 1e-1))).unwrap());
        assert!((strong.damping_rate.unwrap() / (0.75 * total) - 1.0).abs() < 0.05);
    }

    #[test]
    fn single_pair_when_coupling_dominates() {
        for g in [2e-3, 1e-2, 1e-1] {
            let eig = eigendecompose(&build_reduced_system(&spec(1e-4, 1e-3, 1e-5, g))).unwrap();
            assert_eq!(classify(&eig).complex_pairs, 1, "g = {g}");
        }
    }

    #[test]
    fn overdamped_pair_barely_oscillates() {
        // Deep in the overdamped regime the pair survives with |Im| << |Re|.
        let eig = eigendecompose(&build_reduced_system(&spec(1e-4, 1e-3, 1e-4, 1e-6))).unwrap();
        let c = classify(&eig);
        let quality = c.oscillation_angular_frequency.unwrap() / c.damping_rate.unwrap();
        assert!(quality < 1e-2, "{quality}");
    }

    #[test]
    fn all_eigenvalues_decay() {
        for (pc, pr, ph, g) in [
            (1e-5, 1e-3, 1e-5, 1e-2),
            (1e-4, 1e-3, 1e-5, 1e-4),
            (3e-3, 1e-4, 2e-4, 5e-2),
        ] {
            let eig = eigendecompose(&build_reduced_system(&spec(pc, pr, ph, g))).unwrap();
            assert!(eig.values.iter().all(|z| z.re < 0.0));
        }
    }

    #[test]
    fn ground_population_long_time_limit() {
        let s = spec(1e-5, 1e-3, 1e-5, 1e-2);
        let sys = build_reduced_system(&s);
        let sol = SpectralSolution::new(&sys, &tau(&s)).unwrap();
        let r = sol.steady.ground_population(Qubit::C);
        assert!(r > s.thermal(Qubit::C).ground);
    }
}
