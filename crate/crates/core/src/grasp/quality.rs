//! Friction-cone antipodal test and the descending friction sweep score.

use super::{Contacts, GraspError, GraspScore};
use crate::math::angle_between;

/// Friction coefficients visited by the sweep, in tenths, from 1.0 down to 0.1.
pub const MU_STEPS: [u8; 10] = [10, 9, 8, 7, 6, 5, 4, 3, 2, 1];

/// Angles (radians) between the contact line and each finger's pushing
/// direction. Fingers push against the outward normals, so finger 1 pushes
/// along `-n1` and should point along `u = (p2 - p1) / |p2 - p1|`; finger 2
/// pushes along `-n2` and should point along `-u`.
pub fn misalignment(c: &Contacts) -> Result<(f64, f64), GraspError> {
    let line = c.p2 - c.p1;
    if line.norm() <= f64::EPSILON {
        return Err(GraspError::ZeroLengthContact);
    }
    let u = line.normalize();
    Ok((angle_between(&u, &-c.n1), angle_between(&-u, &-c.n2)))
}

/// Whether the contact line lies inside both friction cones of half-angle
/// `atan(mu)`.
pub fn antipodal(c: &Contacts, mu: f64) -> Result<bool, GraspError> {
    if !(mu > 0.0) {
        return Err(GraspError::NonPositiveFriction(mu));
    }
    let (a1, a2) = misalignment(c)?;
    let half = mu.atan();
    Ok(a1 <= half && a2 <= half)
}

/// Lower mu from 1.0 in steps of 0.1 until the grasp stops being antipodal;
/// the last mu that held gives `s = 1.1 - mu`.
pub fn force_closure_score(c: &Contacts) -> Result<GraspScore, GraspError> {
    let mut held = None;
    for tenths in MU_STEPS {
        if antipodal(c, tenths as f64 / 10.0)? {
            held = Some(tenths);
        } else {
            break;
        }
    }
    let mu_min = held.ok_or(GraspError::NotAntipodal)?;
    Ok(GraspScore::from_mu_tenths(mu_min).expect("mu grid is 1..=10 tenths"))
}
