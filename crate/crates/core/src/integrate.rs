//! Fixed-step classical RK4, used to cross-check the spectral solution.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::hilbert::{DensityMatrix, C64};
use crate::liouvillian::{unvectorize, vectorize, FullSuperoperator, RateScales, ReducedState, ReducedSystem, Vector9};

/// Default cap on the total number of RK4 steps for one run.
pub const DEFAULT_MAX_STEPS: u64 = 2_000_000_000;
/// The reduced system runs at this fraction of the stability bound by default.
pub const REDUCED_STEP_FRACTION: f64 = 0.1;

/// States the integrator can advance.
pub trait OdeState: Clone {
    /// `self + h k`.
    fn add_scaled(&self, k: &Self, h: f64) -> Self;
    fn is_finite(&self) -> bool;
}

impl OdeState for Vector9 {
    fn add_scaled(&self, k: &Self, h: f64) -> Self {
        self + k * h
    }

    fn is_finite(&self) -> bool {
        self.iter().all(|x| x.is_finite())
    }
}

impl OdeState for DVector<C64> {
    fn add_scaled(&self, k: &Self, h: f64) -> Self {
        self + k * C64::from(h)
    }

    fn is_finite(&self) -> bool {
        self.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

/// One classical RK4 step of the autonomous system `dy/dt = f(y)`.
pub fn rk4_step<S: OdeState>(f: &impl Fn(&S) -> S, y: &S, dt: f64) -> S {
    let k1 = f(y);
    let k2 = f(&y.add_scaled(&k1, 0.5 * dt));
    let k3 = f(&y.add_scaled(&k2, 0.5 * dt));
    let k4 = f(&y.add_scaled(&k3, dt));
    y.add_scaled(&k1, dt / 6.0)
        .add_scaled(&k2, dt / 3.0)
        .add_scaled(&k3, dt / 3.0)
        .add_scaled(&k4, dt / 6.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorOptions {
    /// Step size; the default depends on the system (see [`default_step`]).
    pub dt: Option<f64>,
    pub max_steps: u64,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self {
            dt: None,
            max_steps: DEFAULT_MAX_STEPS,
        }
    }
}

/// Default step for a system with the given scales.
pub fn default_step(scales: RateScales) -> f64 {
    if scales.max_energy.is_some() {
        scales.step_bound()
    } else {
        scales.step_bound() * REDUCED_STEP_FRACTION
    }
}

fn validate_times(times: &[f64]) -> Result<()> {
    if times.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(Error::InvalidSpec(
            "output times must be finite and non-negative".into(),
        ));
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidSpec("output times must be non-decreasing".into()));
    }
    Ok(())
}

fn substeps(span: f64, dt: f64) -> u64 {
    if span <= 0.0 {
        0
    } else {
        (span / dt).ceil() as u64
    }
}

/// Integrates from `t = 0` and records the state at each of `times`.
///
/// Each interval between consecutive output times is split into
/// `ceil(delta / dt)` equal steps, so grid points are hit exactly.
pub fn integrate_on_grid<S: OdeState>(
    f: impl Fn(&S) -> S,
    y0: &S,
    times: &[f64],
    dt: f64,
    bound: f64,
    max_steps: u64,
) -> Result<Vec<S>> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidSpec(format!("step size must be positive, got {dt}")));
    }
    if dt > bound {
        return Err(Error::StepTooLarge { dt, bound });
    }
    validate_times(times)?;
    let mut needed = 0u64;
    let mut prev = 0.0;
    for &t in times {
        needed = needed.saturating_add(substeps(t - prev, dt));
        prev = t;
    }
    if needed > max_steps {
        return Err(Error::TooManySteps { needed, max: max_steps });
    }

    let mut out = Vec::with_capacity(times.len());
    let mut y = y0.clone();
    let mut t_now = 0.0;
    let mut step = 0u64;
    for &t in times {
        let n = substeps(t - t_now, dt);
        if n > 0 {
            let h = (t - t_now) / n as f64;
            for _ in 0..n {
                y = rk4_step(&f, &y, h);
                step += 1;
            }
            if !y.is_finite() {
                return Err(Error::Diverged { step });
            }
        }
        t_now = t;
        out.push(y.clone());
    }
    Ok(out)
}

/// Integrates `dv/dt = A v + u`.
pub fn evolve_reduced(
    sys: &ReducedSystem,
    initial: &ReducedState,
    times: &[f64],
    options: IntegratorOptions,
) -> Result<Vec<ReducedState>> {
    let scales = sys.scales();
    let dt = options.dt.unwrap_or_else(|| default_step(scales));
    let states = integrate_on_grid(
        |v: &Vector9| sys.rate(v),
        initial.vector(),
        times,
        dt,
        scales.step_bound(),
        options.max_steps,
    )?;
    Ok(states.into_iter().map(ReducedState::from_vector).collect())
}

/// Integrates the full 64-dimensional master equation.
///
/// The returned matrices are not re-validated; RK4 preserves trace and
/// Hermiticity only up to round-off.
pub fn evolve_full(
    op: &FullSuperoperator,
    initial: &DensityMatrix,
    times: &[f64],
    options: IntegratorOptions,
) -> Result<Vec<DensityMatrix>> {
    let scales = op.scales();
    let dt = options.dt.unwrap_or_else(|| default_step(scales));
    let states = integrate_on_grid(
        |v: &DVector<C64>| op.apply(v),
        &vectorize(initial.matrix()),
        times,
        dt,
        scales.step_bound(),
        options.max_steps,
    )?;
    Ok(states
        .iter()
        .map(|v| DensityMatrix::new_unchecked(unvectorize(v)))
        .collect())
}
