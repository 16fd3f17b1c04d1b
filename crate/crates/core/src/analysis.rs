//! Experiments built on the solvers: time series, transient minima, decay
//! fits and parameter sweeps.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hilbert::{product_thermal, DensityMatrix, MachineSpec, Qubit};
use crate::integrate::{evolve_reduced, IntegratorOptions};
use crate::liouvillian::{build_reduced_system, ReducedState, ReducedSystem, Vector9};
use crate::observables::{
    max_entanglement, observe, temperature_from_ground, EntanglementKind, ObservableRecord, Temperature,
};
use crate::spectral::{
    classify, eigendecompose, evolve_spectral, solve_coefficients, steady_state, Spectrum, SpectrumClassification,
};

/// Minimum number of coarse grid points in [`find_min_temperature`].
pub const MIN_SEARCH_POINTS: usize = 2000;
/// Relative time tolerance of the golden-section refinement.
pub const MIN_SEARCH_REL_TOL: f64 = 1e-4;
/// Cap on the fine search grid near the origin.
const MAX_FINE_POINTS: usize = 100_000;
/// Ground populations within this relative margin count as tied.
const TIE_REL_TOL: f64 = 1e-12;
/// Trace distances below this are treated as numerical noise by the fit.
pub const FIT_FLOOR: f64 = 1e-12;
/// The fit window must start this many damping times after `t = 0`.
pub const FIT_MIN_DAMPING_TIMES: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverChoice {
    /// Spectral, falling back to the integrator when the eigenbasis is unusable.
    #[default]
    Auto,
    Spectral,
    Integrator,
}

impl FromStr for SolverChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Self::Auto),
            "spectral" => Ok(Self::Spectral),
            "integrator" => Ok(Self::Integrator),
            other => Err(Error::InvalidSpec(format!(
                "unknown solver '{other}' (expected auto, spectral or integrator)"
            ))),
        }
    }
}

impl fmt::Display for SolverChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Auto => "auto",
            Self::Spectral => "spectral",
            Self::Integrator => "integrator",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverUsed {
    Spectral,
    Integrator,
}

impl fmt::Display for SolverUsed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Spectral => "spectral",
            Self::Integrator => "integrator",
        })
    }
}

#[derive(Debug, Clone)]
enum Engine {
    Spectral(Box<Spectrum>),
    Integrator(IntegratorOptions),
}

/// A machine started from a fixed state, ready to be sampled at any time.
#[derive(Debug, Clone)]
pub struct Trajectory {
    spec: MachineSpec,
    system: ReducedSystem,
    initial: ReducedState,
    steady: Option<ReducedState>,
    steady_matrix: Option<DensityMatrix>,
    engine: Engine,
}

impl Trajectory {
    /// Starts from the product of the bath thermal states.
    pub fn new(spec: &MachineSpec, choice: SolverChoice) -> Result<Self> {
        let initial = ReducedState::extract(product_thermal(spec).matrix())?;
        Self::from_initial(spec, initial, choice, IntegratorOptions::default())
    }

    pub fn from_initial(
        spec: &MachineSpec,
        initial: ReducedState,
        choice: SolverChoice,
        options: IntegratorOptions,
    ) -> Result<Self> {
        let system = build_reduced_system(spec);
        // Without dissipation every diagonal state is stationary; `u` vanishes,
        // so the expansion is taken about the origin.
        let steady = if spec.total_rate() > 0.0 {
            Some(steady_state(&system)?)
        } else {
            None
        };
        let origin = ReducedState::from_vector(Vector9::zeros());
        let reference = steady.as_ref().unwrap_or(&origin);
        let spectral = || eigendecompose(&system).and_then(|e| solve_coefficients(e, &initial, reference));
        let engine = match choice {
            SolverChoice::Spectral => Engine::Spectral(Box::new(spectral()?)),
            SolverChoice::Integrator => Engine::Integrator(options),
            SolverChoice::Auto => match spectral() {
                Ok(s) => Engine::Spectral(Box::new(s)),
                Err(Error::DefectiveBasis { .. } | Error::NoConvergence { .. }) => Engine::Integrator(options),
                Err(e) => return Err(e),
            },
        };
        Ok(Self {
            spec: *spec,
            system,
            initial,
            steady_matrix: steady.as_ref().map(ReducedState::embed),
            steady,
            engine,
        })
    }

    pub fn spec(&self) -> &MachineSpec {
        &self.spec
    }

    pub fn system(&self) -> &ReducedSystem {
        &self.system
    }

    pub fn solver(&self) -> SolverUsed {
        match self.engine {
            Engine::Spectral(_) => SolverUsed::Spectral,
            Engine::Integrator(_) => SolverUsed::Integrator,
        }
    }

    pub fn spectrum(&self) -> Option<&Spectrum> {
        match &self.engine {
            Engine::Spectral(s) => Some(s),
            Engine::Integrator(_) => None,
        }
    }

    pub fn initial(&self) -> &ReducedState {
        &self.initial
    }

    /// `None` when every bath coupling is zero.
    pub fn steady(&self) -> Option<&ReducedState> {
        self.steady.as_ref()
    }

    pub fn steady_matrix(&self) -> Option<&DensityMatrix> {
        self.steady_matrix.as_ref()
    }

    fn expansion_point(&self) -> ReducedState {
        self.steady
            .unwrap_or_else(|| ReducedState::from_vector(Vector9::zeros()))
    }

    /// States at `times`, which must be non-decreasing.
    pub fn states(&self, times: &[f64]) -> Result<Vec<ReducedState>> {
        match &self.engine {
            Engine::Spectral(s) => {
                let reference = self.expansion_point();
                if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
                    return Err(Error::InvalidSpec(
                        "sample times must be finite and non-negative".into(),
                    ));
                }
                // t = 0 returns the initial state exactly rather than its
                // reconstruction from the eigenbasis.
                Ok(times
                    .iter()
                    .map(|&t| {
                        if t == 0.0 {
                            self.initial
                        } else {
                            evolve_spectral(s, &reference, t)
                        }
                    })
                    .collect())
            }
            Engine::Integrator(opts) => evolve_reduced(&self.system, &self.initial, times, *opts),
        }
    }

    pub fn state_at(&self, t: f64) -> Result<ReducedState> {
        Ok(self.states(&[t])?.remove(0))
    }

    pub fn observe(&self, state: &ReducedState) -> ObservableRecord {
        observe(&self.spec, state, self.steady_matrix.as_ref())
    }

    fn cold_ground(&self, t: f64) -> Result<f64> {
        Ok(self.state_at(t)?.ground_population(Qubit::C))
    }
}

/// Sampling times for a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TimeGrid {
    /// `samples` evenly spaced points on `[0, t_final]`.
    Linear { t_final: f64, samples: usize },
    /// `t = 0` followed by `samples - 1` geometrically spaced points on
    /// `[t_first, t_final]`.
    Log { t_first: f64, t_final: f64, samples: usize },
}

impl TimeGrid {
    pub fn points(&self) -> Result<Vec<f64>> {
        match *self {
            TimeGrid::Linear { t_final, samples } => {
                if samples < 2 || !(t_final > 0.0 && t_final.is_finite()) {
                    return Err(Error::InvalidSpec(
                        "linear grid needs t_final > 0 and at least 2 samples".into(),
                    ));
                }
                let mut out: Vec<f64> = (0..samples)
                    .map(|i| t_final * i as f64 / (samples - 1) as f64)
                    .collect();
                out[samples - 1] = t_final;
                Ok(out)
            }
            TimeGrid::Log {
                t_first,
                t_final,
                samples,
            } => {
                if samples < 3 || !(t_first > 0.0 && t_first < t_final && t_final.is_finite()) {
                    return Err(Error::InvalidSpec(
                        "log grid needs 0 < t_first < t_final and at least 3 samples".into(),
                    ));
                }
                let mut out = vec![0.0];
                out.extend(geomspace(t_first, t_final, samples - 1));
                Ok(out)
            }
        }
    }
}

/// `n` geometrically spaced points from `a` to `b` inclusive (`a, b > 0`).
pub fn geomspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    logspace(a.log10(), b.log10(), n)
        .into_iter()
        .enumerate()
        .map(|(i, x)| {
            if i == 0 {
                a
            } else if i + 1 == n {
                b
            } else {
                x
            }
        })
        .collect()
}

/// `n` points `10^x` with `x` evenly spaced on `[start, stop]`.
pub fn logspace(start: f64, stop: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![10f64.powf(start)],
        _ => (0..n)
            .map(|i| 10f64.powf(start + (stop - start) * i as f64 / (n - 1) as f64))
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    pub records: Vec<ObservableRecord>,
    pub solver: SolverUsed,
}

impl Trajectory {
    pub fn series(&self, times: &[f64]) -> Result<TimeSeries> {
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidSpec(
                "time series grid must be strictly increasing".into(),
            ));
        }
        let states = self.states(times)?;
        Ok(TimeSeries {
            times: times.to_vec(),
            records: states.iter().map(|s| self.observe(s)).collect(),
            solver: self.solver(),
        })
    }
}

pub fn run_timeseries(spec: &MachineSpec, grid: &TimeGrid, choice: SolverChoice) -> Result<TimeSeries> {
    Trajectory::new(spec, choice)?.series(&grid.points()?)
}

/// Location and depth of the lowest cold-qubit temperature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransientMinimum {
    pub time: f64,
    pub temperature: Temperature,
    /// Cold-qubit ground population at `time`; the search maximizes it.
    pub ground_population: f64,
}

/// Candidate times scanned before refinement: an even grid of at least
/// [`MIN_SEARCH_POINTS`] points on `[0, t_max]`, merged with a finer grid of
/// pitch `min(pi/20g, 1/sum p)` over the first `50/sum p`.
pub fn search_grid(spec: &MachineSpec, t_max: f64) -> Vec<f64> {
    let mut grid: Vec<f64> = (0..MIN_SEARCH_POINTS)
        .map(|i| t_max * i as f64 / (MIN_SEARCH_POINTS - 1) as f64)
        .collect();
    let total = spec.total_rate();
    let g = spec.g();
    let mut pitch = f64::INFINITY;
    if g > 0.0 {
        pitch = pitch.min(std::f64::consts::PI / (20.0 * g));
    }
    if total > 0.0 {
        pitch = pitch.min(1.0 / total);
    }
    if pitch.is_finite() {
        let span = if total > 0.0 { t_max.min(50.0 / total) } else { t_max };
        pitch = pitch.max(span / MAX_FINE_POINTS as f64);
        let n = (span / pitch).floor() as usize;
        grid.extend((1..=n).map(|i| i as f64 * pitch));
    }
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}

/// Maximizes `f` on `[a, b]`, stopping once the bracket is below
/// `max(rel_tol |t|, abs_tol)`.
pub fn golden_section_max(
    f: impl Fn(f64) -> Result<f64>,
    mut a: f64,
    mut b: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<(f64, f64)> {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if b - a <= (rel_tol * mid.abs()).max(abs_tol) {
            break;
        }
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2)?;
        }
    }
    Ok(if f1 >= f2 { (x1, f1) } else { (x2, f2) })
}

/// Lowest cold-qubit temperature on `[0, t_max]`.
///
/// Scans [`search_grid`], keeps the earliest of (numerically) tied best
/// points, then refines by golden section inside the neighbouring grid
/// interval. The refined point replaces the grid point only if strictly
/// colder.
pub fn find_min_temperature(traj: &Trajectory, t_max: f64) -> Result<TransientMinimum> {
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(Error::InvalidSpec(format!("t_max must be positive, got {t_max}")));
    }
    let grid = search_grid(traj.spec(), t_max);
    let ground: Vec<f64> = traj
        .states(&grid)?
        .iter()
        .map(|s| s.ground_population(Qubit::C))
        .collect();
    let mut best = 0;
    for (i, &r) in ground.iter().enumerate() {
        if r > ground[best] + TIE_REL_TOL * ground[best].abs() {
            best = i;
        }
    }
    let (mut time, mut r_best) = (grid[best], ground[best]);
    let lo = grid[best.saturating_sub(1)];
    let hi = grid[(best + 1).min(grid.len() - 1)];
    if hi > lo {
        let (t, r) = golden_section_max(|t| traj.cold_ground(t), lo, hi, MIN_SEARCH_REL_TOL, 1e-12 * t_max)?;
        if r > r_best {
            time = t;
            r_best = r;
        }
    }
    Ok(TransientMinimum {
        time,
        temperature: temperature_from_ground(r_best, traj.spec().energy(Qubit::C)),
        ground_population: r_best,
    })
}

/// Default fit window `[5, 20] / decay_rate`.
pub fn default_fit_window(decay_rate: f64) -> (f64, f64) {
    (5.0 / decay_rate, 20.0 / decay_rate)
}

/// Least-squares slope of `ln D` over the samples inside `window`, negated.
///
/// `damping_rate` guards the window: it must open after the coherent
/// oscillations have died down (`t1 >= 5 / damping_rate`).
pub fn fit_decay_rate(series: &TimeSeries, window: (f64, f64), damping_rate: f64) -> Result<f64> {
    let (t1, t2) = window;
    let min_start = FIT_MIN_DAMPING_TIMES / damping_rate;
    if !(t1 >= min_start && t2 > t1) {
        return Err(Error::FitWindow { t1, t2, min_start });
    }
    let points: Vec<(f64, f64)> = series
        .times
        .iter()
        .zip(&series.records)
        .filter(|(t, _)| **t >= t1 && **t <= t2)
        .map(|(t, r)| (*t, r.distance))
        .collect();
    if points.len() < 2 {
        return Err(Error::FitWindow { t1, t2, min_start });
    }
    if points.iter().any(|(_, d)| !(*d >= FIT_FLOOR)) {
        return Err(Error::Underflow { floor: FIT_FLOOR });
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|(t, d)| (*t, d.ln())).collect();
    Ok(-least_squares_slope(&logs))
}

/// Slope of the least-squares line through `points`.
pub fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|(x, y)| (x - mean_x) * (y - mean_y)).sum();
    let sxx: f64 = points.iter().map(|(x, _)| (x - mean_x).powi(2)).sum();
    sxy / sxx
}

/// Machine parameters a sweep can vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum SweepParameter {
    #[serde(rename = "g")]
    G,
    #[serde(rename = "p_C")]
    PC,
    #[serde(rename = "p_R")]
    PR,
    #[serde(rename = "p_H")]
    PH,
    #[serde(rename = "T_H")]
    TH,
    #[serde(rename = "E_H")]
    EH,
    #[serde(rename = "T_C")]
    TC,
    #[serde(rename = "T_R")]
    TR,
}

impl SweepParameter {
    pub const ALL: [SweepParameter; 8] = [
        Self::G,
        Self::PC,
        Self::PR,
        Self::PH,
        Self::TH,
        Self::EH,
        Self::TC,
        Self::TR,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::G => "g",
            Self::PC => "p_C",
            Self::PR => "p_R",
            Self::PH => "p_H",
            Self::TH => "T_H",
            Self::EH => "E_H",
            Self::TC => "T_C",
            Self::TR => "T_R",
        }
    }

    pub fn apply(self, spec: &MachineSpec, value: f64) -> Result<MachineSpec> {
        spec.with_params(|p| {
            let slot = match self {
                Self::G => &mut p.g,
                Self::PC => &mut p.p_c,
                Self::PR => &mut p.p_r,
                Self::PH => &mut p.p_h,
                Self::TH => &mut p.t_h,
                Self::EH => &mut p.e_h,
                Self::TC => &mut p.t_c,
                Self::TR => &mut p.t_r,
            };
            *slot = value;
        })
    }
}

impl FromStr for SweepParameter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::InvalidSpec(format!("cannot sweep '{s}'")))
    }
}

impl fmt::Display for SweepParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepOptions {
    /// Horizon of the transient-minimum search.
    pub t_max: f64,
    pub solver: SolverChoice,
}

/// Everything a sweep reports for one parameter value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSummary {
    pub steady_t_c: Temperature,
    pub min_t_c: TransientMinimum,
    pub classification: SpectrumClassification,
    pub w_max_bipartite: f64,
    pub w_max_genuine: f64,
    pub solver: SolverUsed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub outcome: Result<SweepSummary>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub parameter: SweepParameter,
    pub rows: Vec<SweepRow>,
}

/// Steady state, spectrum, closed forms and transient minimum of one machine.
pub fn evaluate_point(spec: &MachineSpec, options: &SweepOptions) -> Result<SweepSummary> {
    let traj = Trajectory::new(spec, options.solver)?;
    let classification = classify(&eigendecompose(traj.system())?);
    let steady = traj
        .steady()
        .ok_or_else(|| Error::Domain("no unique steady state without dissipation".into()))?;
    Ok(SweepSummary {
        steady_t_c: temperature_from_ground(steady.ground_population(Qubit::C), spec.energy(Qubit::C)),
        min_t_c: find_min_temperature(&traj, options.t_max)?,
        classification,
        w_max_bipartite: max_entanglement(spec, EntanglementKind::Bipartite)?,
        w_max_genuine: max_entanglement(spec, EntanglementKind::Genuine)?,
        solver: traj.solver(),
    })
}

/// Evaluates each value independently (in parallel); rows come back sorted
/// by value and carry their own errors.
pub fn sweep(template: &MachineSpec, parameter: SweepParameter, values: &[f64], options: &SweepOptions) -> SweepResult {
    let mut rows: Vec<SweepRow> = values
        .par_iter()
        .map(|&value| SweepRow {
            value,
            outcome: parameter
                .apply(template, value)
                .and_then(|s| evaluate_point(&s, options)),
        })
        .collect();
    rows.sort_by(|a, b| a.value.total_cmp(&b.value));
    SweepResult { parameter, rows }
}
