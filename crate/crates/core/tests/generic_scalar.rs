//! The numerical core is generic over the scalar; exercise the `f32`
//! instantiation end to end (with coarser tolerances) alongside `f64`.

use optlab_core::numkit::{jacobi_eigs, power_iteration, RngStream, SymMat, Vector};
use optlab_core::objectives::{Batch, QuadraticObjective};
use optlab_core::optimizers::{Method, Optimizer, OptimizerConfig, Schedule};
use optlab_core::{SymMat32, Vec32};

#[test]
fn jacobi_and_power_iteration_work_in_single_precision() {
    let mut rng = RngStream::new(5);
    let m: SymMat32 = SymMat::random_gaussian(8, &mut rng);
    let eig = jacobi_eigs(&m);
    let err = eig.reconstruct().sub(&m).frobenius_norm();
    assert!(err <= 1e-5 * m.frobenius_norm(), "reconstruction {err}");

    let m2: SymMat32 = SymMat::from_diag(&[4.0_f32, 1.0, 0.5]);
    let r = power_iteration(|v: &Vec32| Ok(m2.matvec(v)), 3, 500, 1e-6_f32).unwrap();
    assert!((r.value - 4.0).abs() < 1e-3);
}

#[test]
fn sassha_newton_step_in_single_precision() {
    let obj = QuadraticObjective::new(
        SymMat32::from_diag(&[1.0_f32]),
        Vector::from_vec(vec![0.0_f32]),
    )
    .unwrap();
    let mut cfg = OptimizerConfig::<f32>::new(Method::Sassha);
    cfg.beta1 = 0.0;
    cfg.beta2 = 0.0;
    cfg.epsilon = 0.0;
    cfg.k = 1;
    cfg.eta = Schedule::constant(1.0);
    let mut opt = Optimizer::new(cfg, Vector::from_vec(vec![1.0_f32]), 4).unwrap();
    opt.step(&obj, &Batch::all(1), &mut RngStream::new(0)).unwrap();
    assert!(opt.x()[0].abs() < 1e-6);
}

#[test]
fn both_precisions_agree_on_a_short_trajectory() {
    let h64 = vec![2.0_f64, 0.5];
    let obj64 = QuadraticObjective::new(
        SymMat::from_diag(&h64),
        Vector::from_vec(vec![0.1_f64, -0.2]),
    )
    .unwrap();
    let obj32 = QuadraticObjective::new(
        SymMat::from_diag(&[2.0_f32, 0.5]),
        Vector::from_vec(vec![0.1_f32, -0.2]),
    )
    .unwrap();

    let run64 = {
        let mut cfg = OptimizerConfig::<f64>::new(Method::Sassha);
        cfg.eta = Schedule::constant(0.1);
        cfg.rho = Schedule::constant(0.05);
        let mut opt = Optimizer::new(cfg, Vector::from_vec(vec![1.0, -1.0]), 20).unwrap();
        let mut rng = RngStream::new(3);
        for _ in 0..20 {
            opt.step(&obj64, &Batch::all(1), &mut rng).unwrap();
        }
        (opt.x()[0], opt.x()[1])
    };
    let run32 = {
        let mut cfg = OptimizerConfig::<f32>::new(Method::Sassha);
        cfg.eta = Schedule::constant(0.1);
        cfg.rho = Schedule::constant(0.05);
        let mut opt = Optimizer::new(cfg, Vector::from_vec(vec![1.0_f32, -1.0]), 20).unwrap();
        let mut rng = RngStream::new(3);
        for _ in 0..20 {
            opt.step(&obj32, &Batch::all(1), &mut rng).unwrap();
        }
        (opt.x()[0] as f64, opt.x()[1] as f64)
    };
    assert!((run64.0 - run32.0).abs() < 1e-4);
    assert!((run64.1 - run32.1).abs() < 1e-4);
}
