//! Dense linear algebra, seeded randomness, and eigen-routines shared by
//! the rest of the crate.

mod eigen;
mod rng;
mod symmat;
mod vector;

pub use eigen::{jacobi_eigs, power_iteration, EigDecomposition, PowerIteration};
pub use rng::{RngStream, RNG_ALGORITHM};
pub use symmat::SymMat;
pub use vector::Vector;

use crate::scalar::Real;

/// Random vector with independent ±1 entries.
pub fn rademacher<R: Real>(rng: &mut RngStream, d: usize) -> Vector<R> {
    assert!(d >= 1, "rademacher requires d >= 1");
    Vector::from_fn(d, |_| {
        if rng.next_u64() & 1 == 1 {
            R::one()
        } else {
            -R::one()
        }
    })
}

/// Standard Gaussian vector normalized to unit Euclidean norm.
pub fn unit_sphere_direction<R: Real>(rng: &mut RngStream, d: usize) -> Vector<R> {
    assert!(d >= 1, "unit_sphere_direction requires d >= 1");
    loop {
        let v: Vector<R> = Vector::from_fn(d, |_| R::of(rng.next_gaussian()));
        let norm = v.norm2();
        if norm > R::of(1e-30) {
            // Per-entry division keeps the 1-D case exactly +-1.
            return v.map(|x| x / norm);
        }
    }
}
