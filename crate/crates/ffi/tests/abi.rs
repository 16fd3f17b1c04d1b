use std::ffi::CStr;
use std::ptr;

use qfridge_ffi::*;

fn fig2(g: f64) -> QfMachineParams {
    QfMachineParams {
        e_c: 1.0,
        e_h: 100.0,
        t_c: 1.0,
        t_r: 1.0,
        t_h: 100.0,
        p_c: 1e-5,
        p_r: 1e-3,
        p_h: 1e-5,
        g,
    }
}

fn last_error() -> String {
    unsafe {
        let n = qf_last_error_message(ptr::null_mut(), 0);
        let mut buf = vec![0 as std::ffi::c_char; n];
        assert_eq!(qf_last_error_message(buf.as_mut_ptr(), n), n);
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

struct Machine(*mut QfMachine);

impl Machine {
    fn new(p: QfMachineParams) -> Self {
        let mut m = ptr::null_mut();
        assert_eq!(unsafe { qf_machine_new(&p, &mut m) }, QfStatus::Ok);
        Machine(m)
    }
}

impl Drop for Machine {
    fn drop(&mut self) {
        unsafe { qf_machine_free(self.0) }
    }
}

struct Traj(*mut QfTrajectory);

impl Traj {
    fn new(m: &Machine, solver: QfSolver) -> Self {
        let mut t = ptr::null_mut();
        assert_eq!(unsafe { qf_trajectory_new(m.0, solver as i32, &mut t) }, QfStatus::Ok);
        Traj(t)
    }
}

impl Drop for Traj {
    fn drop(&mut self) {
        unsafe { qf_trajectory_free(self.0) }
    }
}

#[test]
fn closed_forms() {
    let m = Machine::new(fig2(1e-2));
    let (mut tv, mut cools) = (0.0, 0);
    let (mut w, mut tmin, mut topt) = (0.0, 0.0, 0.0);
    unsafe {
        assert_eq!(qf_virtual_temperature(m.0, &mut tv, &mut cools), QfStatus::Ok);
        assert_eq!(qf_max_entanglement(m.0, 0, &mut w), QfStatus::Ok);
        assert_eq!(qf_min_unitary_temperature(m.0, &mut tmin, &mut topt), QfStatus::Ok);
    }
    assert_eq!(tv, 0.01);
    assert_eq!(cools, 1);
    assert!((w - 0.07232948812851327).abs() < 1e-12);
    assert!((tmin - 0.7104260888768873).abs() < 1e-9);
    assert!((topt - std::f64::consts::PI / 2e-2).abs() < 1e-9);
}

#[test]
fn invalid_machine_reports_spec_error() {
    let mut p = fig2(1e-2);
    p.t_h = 0.5;
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { qf_machine_new(&p, &mut m) }, QfStatus::InvalidSpec);
    assert!(m.is_null());
    assert!(!last_error().is_empty());
}

#[test]
fn null_pointers_are_rejected() {
    let mut m = ptr::null_mut();
    unsafe {
        assert_eq!(qf_machine_new(ptr::null(), &mut m), QfStatus::NullPointer);
        assert_eq!(qf_machine_new(&fig2(1e-2), ptr::null_mut()), QfStatus::NullPointer);
        let mut v = 0.0;
        assert_eq!(
            qf_virtual_temperature(ptr::null(), &mut v, ptr::null_mut()),
            QfStatus::NullPointer
        );
        qf_machine_free(ptr::null_mut());
        qf_trajectory_free(ptr::null_mut());
    }
    assert!(last_error().contains("null"));
}

#[test]
fn unknown_solver_code() {
    let m = Machine::new(fig2(1e-2));
    let mut t = ptr::null_mut();
    assert_eq!(unsafe { qf_trajectory_new(m.0, 7, &mut t) }, QfStatus::InvalidArgument);
    assert!(t.is_null());
}

#[test]
fn spectrum_and_classification() {
    let m = Machine::new(fig2(1e-2));
    let t = Traj::new(&m, QfSolver::Auto);
    let mut solver = QfSolver::Integrator;
    let (mut re, mut im) = ([0.0; 9], [0.0; 9]);
    let mut class = std::mem::MaybeUninit::<QfClassification>::uninit();
    unsafe {
        assert_eq!(qf_trajectory_solver(t.0, &mut solver), QfStatus::Ok);
        assert_eq!(
            qf_trajectory_eigenvalues(t.0, re.as_mut_ptr(), im.as_mut_ptr(), 8),
            QfStatus::BufferTooSmall
        );
        assert_eq!(
            qf_trajectory_eigenvalues(t.0, re.as_mut_ptr(), im.as_mut_ptr(), 9),
            QfStatus::Ok
        );
        assert_eq!(qf_trajectory_classify(t.0, class.as_mut_ptr()), QfStatus::Ok);
    }
    let class = unsafe { class.assume_init() };
    assert_eq!(solver, QfSolver::Spectral);
    assert!(re.iter().all(|x| *x < 0.0));
    assert_eq!(class.lambda_max, re[0]);
    assert_eq!(class.has_complex_pair, 1);
    assert!((class.decay_rate + class.lambda_max).abs() == 0.0);
}

#[test]
fn sampling_matches_between_solvers() {
    let m = Machine::new(fig2(1e-2));
    let a = Traj::new(&m, QfSolver::Spectral);
    let b = Traj::new(&m, QfSolver::Integrator);
    let times = [0.0, 10.0, 157.0, 300.0];
    let blank = QfRecord {
        t_c: 0.0,
        t_r: 0.0,
        t_h: 0.0,
        distance: 0.0,
        w_r_ch: 0.0,
        w_genuine: 0.0,
        populations: [0.0; 8],
        im_rho36: 0.0,
    };
    let (mut ra, mut rb) = ([blank; 4], [blank; 4]);
    unsafe {
        assert_eq!(
            qf_trajectory_sample(a.0, times.as_ptr(), 4, ra.as_mut_ptr()),
            QfStatus::Ok
        );
        assert_eq!(
            qf_trajectory_sample(b.0, times.as_ptr(), 4, rb.as_mut_ptr()),
            QfStatus::Ok
        );
    }
    for (x, y) in ra.iter().zip(&rb) {
        assert!((x.t_c - y.t_c).abs() < 1e-7);
        assert!((x.distance - y.distance).abs() < 1e-7);
        assert!((x.populations.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
    let reversed = [10.0, 0.0];
    assert_eq!(
        unsafe { qf_trajectory_sample(a.0, reversed.as_ptr(), 2, ra.as_mut_ptr()) },
        QfStatus::InvalidArgument
    );
    let mut steady = blank;
    assert_eq!(unsafe { qf_trajectory_steady_record(a.0, &mut steady) }, QfStatus::Ok);
    assert_eq!(steady.distance, 0.0);
    assert!(steady.t_c < 1.0 && steady.t_c > 0.01);
}

#[test]
fn transient_minimum() {
    let m = Machine::new(fig2(1e-2));
    let t = Traj::new(&m, QfSolver::Auto);
    let mut min = QfMinimum {
        time: 0.0,
        temperature: 0.0,
        ground_population: 0.0,
    };
    unsafe {
        assert_eq!(qf_find_min_temperature(t.0, 500.0, &mut min), QfStatus::Ok);
        assert_eq!(qf_find_min_temperature(t.0, -1.0, &mut min), QfStatus::InvalidArgument);
    }
    assert!((min.time / (std::f64::consts::PI / 2e-2) - 1.0).abs() < 0.1);
    assert!(min.temperature < 0.73);
}

#[test]
fn errors_are_per_thread_and_cleared_on_success() {
    let mut p = fig2(1e-2);
    p.e_c = -1.0;
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { qf_machine_new(&p, &mut m) }, QfStatus::InvalidSpec);
    let msg = last_error();
    std::thread::spawn(|| assert_eq!(last_error(), "")).join().unwrap();
    assert!(!msg.is_empty());
    let _ok = Machine::new(fig2(1e-2));
    assert_eq!(last_error(), "");
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(qf_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
