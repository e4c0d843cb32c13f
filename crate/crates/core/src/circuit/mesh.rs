//! Four-mode universal interferometer in the rectangular (Clements) layout.
//!
//! Six two-mode blocks act on mode pairs `(0,1), (2,3), (1,2), (0,1), (2,3),
//! (1,2)` in that order, followed by one output phase per mode. Each block is
//! two balanced beamsplitters with an internal phase `theta` and an input
//! phase `phi`:
//!
//! ```text
//! B(theta, phi) = i e^{i theta/2} [[e^{i phi} sin(theta/2),  cos(theta/2)],
//!                                  [e^{i phi} cos(theta/2), -sin(theta/2)]]
//! ```
//!
//! Angle layout: `(theta_k, phi_k)` for the six blocks, then four output
//! phases. `B(pi, pi)` is the identity, so the identity mesh is
//! `(pi, pi) x 6` followed by four zeros.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::qcore::{CMatrix, Unitary, C64};

pub const MESH_ANGLES: usize = 16;

/// Mode pairs in application order.
pub const BLOCK_ORDER: [(usize, usize); 6] = [(0, 1), (2, 3), (1, 2), (0, 1), (2, 3), (1, 2)];

/// Angles that make the whole mesh the identity.
pub fn identity_angles() -> [f64; MESH_ANGLES] {
    let mut a = [0.0; MESH_ANGLES];
    for v in a.iter_mut().take(12) {
        *v = PI;
    }
    a
}

pub(crate) fn block(theta: f64, phi: f64) -> [[C64; 2]; 2] {
    let (s, c) = (theta / 2.0).sin_cos();
    let pre = C64::i() * C64::from_polar(1.0, theta / 2.0);
    let e = C64::from_polar(1.0, phi);
    [
        [pre * e * s, pre * c],
        [pre * e * c, -pre * s],
    ]
}

pub fn clements_u4(angles: &[f64]) -> Result<Unitary> {
    if angles.len() != MESH_ANGLES {
        return Err(Error::DimensionMismatch {
            expected: MESH_ANGLES,
            got: angles.len(),
        });
    }
    if angles.iter().any(|a| !a.is_finite()) {
        return Err(Error::NonFinite("mesh angles"));
    }
    let mut u = CMatrix::identity(4, 4);
    for (k, &(m, n)) in BLOCK_ORDER.iter().enumerate() {
        let b = block(angles[2 * k], angles[2 * k + 1]);
        // left-multiply: only rows m and n change
        for col in 0..4 {
            let (um, un) = (u[(m, col)], u[(n, col)]);
            u[(m, col)] = b[0][0] * um + b[0][1] * un;
            u[(n, col)] = b[1][0] * um + b[1][1] * un;
        }
    }
    for row in 0..4 {
        let phase = C64::from_polar(1.0, angles[12 + row]);
        for col in 0..4 {
            u[(row, col)] *= phase;
        }
    }
    Ok(Unitary::new_unchecked(u))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::max_abs_diff;
    use crate::qcore::unitarity_residual;
    use crate::rng::rng_from_seed;
    use rand::Rng;

    #[test]
    fn block_is_two_beamsplitters_and_phases() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let bs = CMatrix::from_row_slice(
            2,
            2,
            &[C64::new(h, 0.0), C64::new(0.0, h), C64::new(0.0, h), C64::new(h, 0.0)],
        );
        let diag = |a: f64| {
            CMatrix::from_row_slice(
                2,
                2,
                &[C64::from_polar(1.0, a), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
            )
        };
        let mut rng = rng_from_seed(4);
        for _ in 0..20 {
            let (t, p) = (rng.random_range(-PI..PI), rng.random_range(-PI..PI));
            let expect = &bs * diag(t) * &bs * diag(p);
            let b = block(t, p);
            let got = CMatrix::from_row_slice(2, 2, &[b[0][0], b[0][1], b[1][0], b[1][1]]);
            assert!(max_abs_diff(&got, &expect) < 1e-14);
        }
    }

    #[test]
    fn identity_angles_give_identity() {
        let u = clements_u4(&identity_angles()).unwrap();
        assert!(max_abs_diff(u.matrix(), &CMatrix::identity(4, 4)) < 1e-12);
    }

    /// Finds the identity setting from scratch: each block must have zero
    /// cross-coupling, which pins `theta = pi`; the remaining diagonal phases
    /// are then solved block by block.
    #[test]
    fn identity_setting_is_recovered_by_nulling() {
        let theta = PI;
        let b = block(theta, 0.0);
        assert!(b[0][1].norm() < 1e-15 && b[1][0].norm() < 1e-15);
        // with theta fixed, b = diag(-e^{i phi}, 1); the input phase must cancel b[0][0] at phi = 0
        assert!((b[1][1] - C64::new(1.0, 0.0)).norm() < 1e-15);
        let phi = -b[0][0].arg();
        assert!((phi.abs() - PI).abs() < 1e-12);
        let b = block(theta, phi);
        assert!((b[0][0] - C64::new(1.0, 0.0)).norm() < 1e-12);
        assert!((b[1][1] - C64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn random_meshes_are_unitary() {
        let mut rng = rng_from_seed(5);
        for _ in 0..100 {
            let a: Vec<f64> = (0..16).map(|_| rng.random_range(-2.0 * PI..2.0 * PI)).collect();
            let u = clements_u4(&a).unwrap();
            assert!(unitarity_residual(u.matrix()) < 1e-10);
        }
    }

    #[test]
    fn single_block_support() {
        let mut rng = rng_from_seed(6);
        let mut a = identity_angles();
        a[0] = rng.random_range(-PI..PI);
        a[1] = rng.random_range(-PI..PI);
        let u = clements_u4(&a).unwrap();
        for r in 0..4 {
            for c in 0..4 {
                if r >= 2 || c >= 2 {
                    let expect = if r == c { 1.0 } else { 0.0 };
                    assert!((u.entry(r, c) - C64::new(expect, 0.0)).norm() < 1e-12);
                }
            }
        }
        assert!(u.entry(0, 1).norm() > 1e-6 || u.entry(1, 0).norm() > 1e-6);
    }

    #[test]
    fn mesh_reaches_a_swap() {
        // theta = 0 on the first block exchanges modes 0 and 1 up to phase
        let mut a = identity_angles();
        a[0] = 0.0;
        let u = clements_u4(&a).unwrap();
        assert!((u.entry(0, 1).norm() - 1.0).abs() < 1e-12);
        assert!((u.entry(1, 0).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(clements_u4(&[0.0; 15]).is_err());
        let mut a = identity_angles();
        a[3] = f64::NAN;
        assert!(clements_u4(&a).is_err());
    }
}
