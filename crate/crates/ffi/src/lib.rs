//! C ABI over the `qfridge` library.
//!
//! Objects are opaque handles created by `qf_*_new` and released by the
//! matching `qf_*_free`. Every other function returns a [`QfStatus`]; on
//! failure a message is kept per thread and can be copied out with
//! [`qf_last_error_message`]. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};

use qfridge::analysis::{find_min_temperature, SolverChoice, SolverUsed, Trajectory};
use qfridge::observables::{
    max_entanglement, min_unitary_temperature, virtual_temperature, EntanglementKind, ObservableRecord,
};
use qfridge::spectral::{classify, eigendecompose};
use qfridge::{Error, MachineParams, MachineSpec};

/// Result code of every fallible call.
#[repr(i32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidSpec = 2,
    Solver = 3,
    InvalidArgument = 4,
    BufferTooSmall = 5,
    Panic = 6,
}

#[repr(i32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QfSolver {
    Auto = 0,
    Spectral = 1,
    Integrator = 2,
}

/// Machine parameters; energies and temperatures in units of `E_C`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QfMachineParams {
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

/// Observables at one time. Temperatures of population-inverted qubits are
/// negative, and exactly `1/2` ground population gives `+inf`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QfRecord {
    pub t_c: f64,
    pub t_r: f64,
    pub t_h: f64,
    pub distance: f64,
    pub w_r_ch: f64,
    pub w_genuine: f64,
    pub populations: [f64; 8],
    pub im_rho36: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QfClassification {
    pub lambda_max: f64,
    /// 0 when the spectrum is entirely real; the `lambda_cp` fields are then NaN.
    pub has_complex_pair: i32,
    pub lambda_cp_re: f64,
    pub lambda_cp_im: f64,
    pub decay_rate: f64,
    pub damping_rate: f64,
    pub oscillation_angular_frequency: f64,
    pub complex_pairs: u32,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QfMinimum {
    pub time: f64,
    pub temperature: f64,
    pub ground_population: f64,
}

/// A validated machine.
pub struct QfMachine(MachineSpec);

/// A machine started from its product thermal state.
pub struct QfTrajectory(Trajectory);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

struct Failure(QfStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::InvalidSpec(_) | Error::Domain(_) => QfStatus::InvalidSpec,
            _ => QfStatus::Solver,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(QfStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> QfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            QfStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            QfStatus::Panic
        }
    }
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

fn record(r: &ObservableRecord) -> QfRecord {
    QfRecord {
        t_c: r.t_c.value,
        t_r: r.t_r.value,
        t_h: r.t_h.value,
        distance: r.distance,
        w_r_ch: r.w_r_ch,
        w_genuine: r.w_genuine,
        populations: r.populations,
        im_rho36: r.im_rho36,
    }
}

/// Validates `params` and stores a new machine in `*out`.
///
/// # Safety
/// `params` must point to a valid struct and `out` to writable storage.
#[no_mangle]
pub unsafe extern "C" fn qf_machine_new(params: *const QfMachineParams, out_machine: *mut *mut QfMachine) -> QfStatus {
    guard(|| {
        let p = borrow(params, "params")?;
        let slot = out(out_machine, "out_machine")?;
        let spec = MachineSpec::new(MachineParams {
            e_c: p.e_c,
            e_h: p.e_h,
            t_c: p.t_c,
            t_r: p.t_r,
            t_h: p.t_h,
            p_c: p.p_c,
            p_r: p.p_r,
            p_h: p.p_h,
            g: p.g,
        })?;
        *slot = Box::into_raw(Box::new(QfMachine(spec)));
        Ok(())
    })
}

/// Releases a machine. Null is ignored.
///
/// # Safety
/// `machine` must come from [`qf_machine_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn qf_machine_free(machine: *mut QfMachine) {
    if !machine.is_null() {
        drop(Box::from_raw(machine));
    }
}

/// Virtual-qubit temperature; `*cools` is 1 when it lies in `[0, T_C)`.
///
/// # Safety
/// Pointers must be valid; `cools` may be null.
#[no_mangle]
pub unsafe extern "C" fn qf_virtual_temperature(
    machine: *const QfMachine,
    value: *mut f64,
    cools: *mut i32,
) -> QfStatus {
    guard(|| {
        let m = borrow(machine, "machine")?;
        let v = out(value, "value")?;
        let tv = virtual_temperature(&m.0)?;
        *v = tv.value;
        if let Some(c) = cools.as_mut() {
            *c = tv.cools as i32;
        }
        Ok(())
    })
}

/// Closed-form witness maximum: bipartite `R|CH` when `genuine` is 0,
/// genuine tripartite otherwise.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn qf_max_entanglement(machine: *const QfMachine, genuine: i32, value: *mut f64) -> QfStatus {
    guard(|| {
        let m = borrow(machine, "machine")?;
        let v = out(value, "value")?;
        let kind = if genuine != 0 {
            EntanglementKind::Genuine
        } else {
            EntanglementKind::Bipartite
        };
        *v = max_entanglement(&m.0, kind)?;
        Ok(())
    })
}

/// Cold-qubit temperature after a complete dissipation-free swap, and the
/// time `pi/2g` at which it happens.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn qf_min_unitary_temperature(
    machine: *const QfMachine,
    temperature: *mut f64,
    time: *mut f64,
) -> QfStatus {
    guard(|| {
        let m = borrow(machine, "machine")?;
        let t = out(temperature, "temperature")?;
        let at = out(time, "time")?;
        let b = min_unitary_temperature(&m.0)?;
        *t = b.temperature.value;
        *at = b.time;
        Ok(())
    })
}

/// Prepares the evolution from the product thermal state. `solver` is one
/// of the [`QfSolver`] values.
///
/// # Safety
/// `machine` must be valid and `out_trajectory` writable.
#[no_mangle]
pub unsafe extern "C" fn qf_trajectory_new(
    machine: *const QfMachine,
    solver: i32,
    out_trajectory: *mut *mut QfTrajectory,
) -> QfStatus {
    guard(|| {
        let m = borrow(machine, "machine")?;
        let slot = out(out_trajectory, "out_trajectory")?;
        // Taken as a plain integer: an out-of-range C enum must not reach Rust.
        let choice = match solver {
            x if x == QfSolver::Auto as i32 => SolverChoice::Auto,
            x if x == QfSolver::Spectral as i32 => SolverChoice::Spectral,
            x if x == QfSolver::Integrator as i32 => SolverChoice::Integrator,
            other => return Err(Failure(QfStatus::InvalidArgument, format!("unknown solver {other}"))),
        };
        *slot = Box::into_raw(Box::new(QfTrajectory(Trajectory::new(&m.0, choice)?)));
        Ok(())
    })
}

/// Releases a trajectory. Null is ignored.
///
/// # Safety
/// `trajectory` must come from [`qf_trajectory_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn qf_trajectory_free(trajectory: *mut QfTrajectory) {
    if !trajectory.is_null() {
        drop(Box::from_raw(trajectory));
    }
}

/// The solver actually in use (`Spectral` or `Integrator`).
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn qf_trajectory_solver(trajectory: *const QfTrajectory, solver: *mut QfSolver) -> QfStatus {
    guard(|| {
        let t = borrow(trajectory, "trajectory")?;
        *out(solver, "solver")? = match t.0.solver() {
            SolverUsed::Spectral => QfSolver::Spectral,
            SolverUsed::Integrator => QfSolver::Integrator,
        };
        Ok(())
    })
}

/// Writes the 9 eigenvalues of the reduced generator, slowest first.
///
/// # Safety
/// `re` and `im` must each have room for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn qf_trajectory_eigenvalues(
    trajectory: *const QfTrajectory,
    re: *mut f64,
    im: *mut f64,
    len: usize,
) -> QfStatus {
    guard(|| {
        let t = borrow(trajectory, "trajectory")?;
        if re.is_null() || im.is_null() {
            return Err(null("eigenvalue buffer"));
        }
        let eig = eigendecompose(t.0.system())?;
        if len < eig.values.len() {
            return Err(Failure(
                QfStatus::BufferTooSmall,
                format!("need {} entries, got {len}", eig.values.len()),
            ));
        }
        for (j, z) in eig.values.iter().enumerate() {
            *re.add(j) = z.re;
            *im.add(j) = z.im;
        }
        Ok(())
    })
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn qf_trajectory_classify(
    trajectory: *const QfTrajectory,
    result: *mut QfClassification,
) -> QfStatus {
    guard(|| {
        let t = borrow(trajectory, "trajectory")?;
        let slot = out(result, "result")?;
        let c = classify(&eigendecompose(t.0.system())?);
        *slot = QfClassification {
            lambda_max: c.lambda_max.re,
            has_complex_pair: c.lambda_cp.is_some() as i32,
            lambda_cp_re: c.lambda_cp.map_or(f64::NAN, |z| z.re),
            lambda_cp_im: c.lambda_cp.map_or(f64::NAN, |z| z.im),
            decay_rate: c.decay_rate,
            damping_rate: c.damping_rate.unwrap_or(f64::NAN),
            oscillation_angular_frequency: c.oscillation_angular_frequency.unwrap_or(f64::NAN),
            complex_pairs: c.complex_pairs as u32,
        };
        Ok(())
    })
}

/// Observables at each of `times` (non-decreasing) into `records`.
///
/// # Safety
/// `times` must hold `n` doubles and `records` room for `n` records.
#[no_mangle]
pub unsafe extern "C" fn qf_trajectory_sample(
    trajectory: *const QfTrajectory,
    times: *const f64,
    n: usize,
    records: *mut QfRecord,
) -> QfStatus {
    guard(|| {
        let t = borrow(trajectory, "trajectory")?;
        if n == 0 {
            return Ok(());
        }
        if times.is_null() || records.is_null() {
            return Err(null("sample buffer"));
        }
        let times = std::slice::from_raw_parts(times, n);
        if times.windows(2).any(|w| w[1] < w[0]) {
            return Err(Failure(
                QfStatus::InvalidArgument,
                "times must be non-decreasing".into(),
            ));
        }
        let states = t.0.states(times)?;
        for (i, s) in states.iter().enumerate() {
            *records.add(i) = record(&t.0.observe(s));
        }
        Ok(())
    })
}

/// Observables of the steady state. Fails with `QF_STATUS_INVALID_ARGUMENT`
/// when every bath coupling is zero.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn qf_trajectory_steady_record(
    trajectory: *const QfTrajectory,
    result: *mut QfRecord,
) -> QfStatus {
    guard(|| {
        let t = borrow(trajectory, "trajectory")?;
        let steady = t.0.steady().ok_or_else(|| {
            Failure(
                QfStatus::InvalidArgument,
                "no unique steady state without dissipation".into(),
            )
        })?;
        *out(result, "result")? = record(&t.0.observe(steady));
        Ok(())
    })
}

/// Lowest cold-qubit temperature on `[0, t_max]`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn qf_find_min_temperature(
    trajectory: *const QfTrajectory,
    t_max: f64,
    result: *mut QfMinimum,
) -> QfStatus {
    guard(|| {
        let t = borrow(trajectory, "trajectory")?;
        let slot = out(result, "result")?;
        if !(t_max > 0.0 && t_max.is_finite()) {
            return Err(Failure(
                QfStatus::InvalidArgument,
                format!("t_max must be positive, got {t_max}"),
            ));
        }
        let m = find_min_temperature(&t.0, t_max)?;
        *slot = QfMinimum {
            time: m.time,
            temperature: m.temperature.value,
            ground_population: m.ground_population,
        };
        Ok(())
    })
}

/// Copies the calling thread's last error message, NUL-terminated, into
/// `buffer`. Returns the size needed including the terminator; nothing is
/// written when `capacity` is smaller than that.
///
/// # Safety
/// `buffer` must have room for `capacity` bytes, or be null with `capacity` 0.
#[no_mangle]
pub unsafe extern "C" fn qf_last_error_message(buffer: *mut c_char, capacity: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let needed = msg.len() + 1;
        if !buffer.is_null() && capacity >= needed {
            std::ptr::copy_nonoverlapping(msg.as_ptr(), buffer.cast::<u8>(), msg.len());
            *buffer.add(msg.len()) = 0;
        }
        needed
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn qf_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(v) => v,
        Err(_) => panic!("version string"),
    };
    VERSION.as_ptr()
}
