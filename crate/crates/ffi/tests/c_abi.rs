use std::ffi::{CStr, CString};
use std::ptr;

use acsplit_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(acs_last_error_message()) }
        .to_string_lossy()
        .into_owned()
}

#[test]
fn scalar_flows() {
    let mut v = 0.0;
    unsafe {
        assert_eq!(acs_phi(1.0, 2.0, &mut v), AcsStatus::Ok);
        assert!((v - 1.05497).abs() < 1e-5);
        assert_eq!(acs_psi(0.0, 2.0, &mut v), AcsStatus::Ok);
        assert_eq!(v, -6.0);
        assert_eq!(acs_phi(-1.0, 2.0, &mut v), AcsStatus::InvalidArgument);
        assert!(last_error().contains("flow time"));
        assert_eq!(acs_phi(0.5, 2.0, ptr::null_mut()), AcsStatus::NullPointer);
        assert_eq!(acs_phi(0.5, 2.0, &mut v), AcsStatus::Ok);
        assert!(last_error().is_empty());
    }
}

#[test]
fn operator_handle_round_trip() {
    unsafe {
        let mut op = ptr::null_mut();
        assert_eq!(acs_operator_new(3, &mut op), AcsStatus::Ok);
        assert!(!op.is_null());
        assert_eq!(acs_operator_len(op), 3);
        assert_eq!(acs_operator_dx(op), 0.25);

        let x = [1.0, 0.0, 0.0];
        let mut y = [0.0; 3];
        assert_eq!(
            acs_operator_apply_laplacian(op, x.as_ptr(), y.as_mut_ptr(), 3),
            AcsStatus::Ok
        );
        assert_eq!(y, [-32.0, 16.0, 0.0]);

        let mut ev = [0.0; 3];
        assert_eq!(
            acs_operator_eigenvalues(op, ev.as_mut_ptr(), 3),
            AcsStatus::Ok
        );
        assert!(ev[0] < ev[1] && ev[1] < ev[2]);

        // resolvent undoes (I - dt A)
        let dt = 0.01;
        let mut r = [0.0; 3];
        assert_eq!(
            acs_operator_solve_resolvent(op, dt, x.as_ptr(), r.as_mut_ptr(), 3),
            AcsStatus::Ok
        );
        let mut ar = [0.0; 3];
        acs_operator_apply_laplacian(op, r.as_ptr(), ar.as_mut_ptr(), 3);
        for i in 0..3 {
            assert!((r[i] - dt * ar[i] - x[i]).abs() < 1e-13);
        }

        let mut s = x;
        assert_eq!(
            acs_operator_apply_semigroup(op, 0.0, s.as_ptr(), s.as_mut_ptr(), 3),
            AcsStatus::Ok
        );
        for i in 0..3 {
            assert!((s[i] - x[i]).abs() < 1e-14);
        }

        assert_eq!(
            acs_operator_apply_laplacian(op, x.as_ptr(), y.as_mut_ptr(), 2),
            AcsStatus::MeshMismatch
        );
        assert_eq!(
            acs_operator_apply_laplacian(op, ptr::null(), y.as_mut_ptr(), 3),
            AcsStatus::NullPointer
        );
        assert_eq!(
            acs_operator_solve_resolvent(op, -1.0, x.as_ptr(), y.as_mut_ptr(), 3),
            AcsStatus::InvalidArgument
        );
        acs_operator_free(op);
        acs_operator_free(ptr::null_mut());

        assert_eq!(acs_operator_new(0, &mut op), AcsStatus::InvalidArgument);
        assert_eq!(acs_operator_len(ptr::null()), 0);
        assert_eq!(
            acs_operator_eigenvalues(ptr::null(), ev.as_mut_ptr(), 3),
            AcsStatus::NullPointer
        );
    }
}

#[test]
fn experiments_through_handles() {
    unsafe {
        let text = CString::new(
            "n_interior = 7\ndt_list = 1/8, 1/16, 1/32\nn_replicas = 30\nmethod = M3\n",
        )
        .unwrap();
        let mut exp = ptr::null_mut();
        assert_eq!(
            acs_experiment_from_config(text.as_ptr(), &mut exp),
            AcsStatus::Ok
        );

        let mut row = AcsErrorRow::default();
        assert_eq!(acs_strong_error(exp, 0.125, &mut row), AcsStatus::Ok);
        assert_eq!(row.n_valid + row.n_blowup, 30);
        assert!(row.estimate > 0.0);
        let mut again = AcsErrorRow::default();
        acs_strong_error(exp, 0.125, &mut again);
        assert_eq!(row, again);

        assert_eq!(acs_weak_increment(exp, 0.125, &mut row), AcsStatus::Ok);
        assert!(row.estimate.is_finite());

        let mut out = [0.0; 7];
        let mut summary = AcsPathSummary::default();
        assert_eq!(
            acs_simulate(exp, 0.0625, 3, out.as_mut_ptr(), 7, &mut summary),
            AcsStatus::Ok
        );
        assert_eq!(summary.steps, 16);
        assert!(!summary.blown_up);
        assert!(summary.sup_norm_e >= out.iter().fold(0.0f64, |m, v| m.max(v.abs())));
        assert_eq!(
            acs_simulate(exp, 0.0625, 3, out.as_mut_ptr(), 6, &mut summary),
            AcsStatus::MeshMismatch
        );

        assert_eq!(
            acs_experiment_set_scheme(exp, AcsMethod::M2, AcsLinear::Exact),
            AcsStatus::Ok
        );
        assert_eq!(
            acs_strong_error(exp, 0.125, &mut row),
            AcsStatus::InvalidArgument
        );
        assert_eq!(
            acs_experiment_set_scheme(exp, AcsMethod::M1, AcsLinear::Exact),
            AcsStatus::Ok
        );
        assert_eq!(acs_strong_error(exp, 0.125, &mut row), AcsStatus::Ok);

        assert_eq!(
            acs_experiment_set_sampling(exp, 1, 1.0, 0),
            AcsStatus::InvalidArgument
        );
        assert_eq!(acs_experiment_set_sampling(exp, 10, 0.5, 8), AcsStatus::Ok);
        assert_eq!(acs_experiment_set_mesh(exp, 0), AcsStatus::InvalidArgument);
        assert_eq!(acs_experiment_set_mesh(exp, 4), AcsStatus::Ok);
        let mut four = [0.0; 4];
        assert_eq!(
            acs_simulate(exp, 0.125, 0, four.as_mut_ptr(), 4, ptr::null_mut()),
            AcsStatus::Ok
        );
        acs_experiment_free(exp);

        let bad = CString::new("T = 1\nmethod = nope\n").unwrap();
        assert_eq!(
            acs_experiment_from_config(bad.as_ptr(), &mut exp),
            AcsStatus::Config
        );
        assert!(last_error().contains("line 2"), "{}", last_error());

        assert_eq!(acs_experiment_new(&mut exp), AcsStatus::Ok);
        acs_experiment_free(exp);
        assert_eq!(
            acs_strong_error(ptr::null(), 0.1, &mut row),
            AcsStatus::NullPointer
        );
    }
}

#[test]
fn static_strings() {
    let v = unsafe { CStr::from_ptr(acs_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
    let n = unsafe { CStr::from_ptr(acs_status_name(AcsStatus::MeshMismatch)) };
    assert_eq!(n.to_str().unwrap(), "mesh mismatch");
}

#[test]
fn header_declares_the_interface() {
    let header = include_str!("../include/acsplit.h");
    for name in [
        "acs_phi",
        "acs_psi",
        "acs_operator_new",
        "acs_operator_free",
        "acs_operator_solve_resolvent",
        "acs_operator_apply_semigroup",
        "acs_experiment_from_config",
        "acs_simulate",
        "acs_strong_error",
        "acs_weak_increment",
        "typedef struct AcsOperator AcsOperator",
        "ACS_STATUS_MESH_MISMATCH",
    ] {
        assert!(header.contains(name), "missing {name}");
    }
}
