//! Linear-inversion state tomography under a dichotomic POVM triple.
//!
//! Bob's three binary measurements are `Pi_i = {B_i, I - B_i}` with
//! `B_i = (1/2)(b0_i I + b_i . sigma)`. The probability of outcome "0" on a
//! state with Bloch vector `r` is `p_i(0) = (1/2)(b0_i + b_i . r)`; inverting
//! the resulting 3x3 linear system reconstructs `r` exactly, without any
//! physicality projection. Unphysical reconstructions (`|r| > 1`) are flagged
//! and invalidate the candidate POVM set rather than being clamped back to
//! the Bloch ball.

use serde::{Deserialize, Serialize};

use crate::assemblage::{Assemblage, AssemblageMember};
use crate::counts::Estimates;
use crate::error::{Error, Result};
use crate::policy::NumericPolicy;
use crate::qmath::BlochVector;

/// Singular-matrix threshold for informational completeness.
pub const COMPLETENESS_TOL: f64 = 1e-10;

/// A triple of dichotomic POVMs given by bias terms and direction vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TomographySet {
    /// Bias terms `b0_i` in `[0, 2]`.
    pub bias: [f64; 3],
    /// Direction vectors `b_i` (length encodes sharpness).
    pub vectors: [[f64; 3]; 3],
}

/// Canonical-frame parameters of a set: `b3` along z, `b1` in the x-z
/// half-plane with positive x, `phi2` measured from the y-axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CanonicalAngles {
    pub theta1: f64,
    pub theta2: f64,
    pub phi2: f64,
}

fn norm3(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

impl TomographySet {
    /// The ideal projective set measuring the three Pauli components.
    pub fn ideal() -> Self {
        Self {
            bias: [1.0; 3],
            vectors: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        }
    }

    /// Builds a set after checking the POVM positivity constraint
    /// `|b_i| <= min(b0_i, 2 - b0_i)` and informational completeness.
    pub fn try_new(bias: [f64; 3], vectors: [[f64; 3]; 3]) -> Result<Self> {
        let set = Self { bias, vectors };
        let violation = set.positivity_violation();
        if violation > 1e-12 {
            return Err(Error::Domain(format!(
                "POVM positivity violated by {violation:.3e}"
            )));
        }
        if !set.is_informationally_complete() {
            return Err(Error::Domain("POVM direction matrix is singular".into()));
        }
        Ok(set)
    }

    /// Builds a set from canonical-frame parameters: lengths, biases and the
    /// three relative angles. No positivity check; callers exploring the
    /// search space handle violations by penalty.
    pub fn from_canonical(bias: [f64; 3], lengths: [f64; 3], angles: CanonicalAngles) -> Self {
        let CanonicalAngles { theta1, theta2, phi2 } = angles;
        let b1 = [
            lengths[0] * theta1.sin(),
            0.0,
            lengths[0] * theta1.cos(),
        ];
        let b2 = [
            -lengths[1] * phi2.sin() * theta2.sin(),
            lengths[1] * phi2.cos() * theta2.sin(),
            lengths[1] * theta2.cos(),
        ];
        let b3 = [0.0, 0.0, lengths[2]];
        Self { bias, vectors: [b1, b2, b3] }
    }

    /// Projective set (`b_i = b0_i = 1`) from the three relative angles.
    pub fn projective(angles: CanonicalAngles) -> Self {
        Self::from_canonical([1.0; 3], [1.0; 3], angles)
    }

    /// Amount by which `|b_i| <= min(b0_i, 2 - b0_i)` is violated (0 when
    /// the set is a proper POVM triple).
    pub fn positivity_violation(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..3 {
            let len = norm3(self.vectors[i]);
            let cap = self.bias[i].min(2.0 - self.bias[i]);
            worst = worst.max(len - cap);
            if !(0.0..=2.0).contains(&self.bias[i]) {
                worst = worst.max((self.bias[i] - 1.0).abs() - 1.0);
            }
        }
        worst.max(0.0)
    }

    pub fn direction_determinant(&self) -> f64 {
        let [b1, b2, b3] = self.vectors;
        dot3(b1, cross3(b2, b3))
    }

    pub fn is_informationally_complete(&self) -> bool {
        self.direction_determinant().abs() > COMPLETENESS_TOL
    }

    /// Born-rule outcome-"0" probabilities for a Bloch vector.
    pub fn born_probabilities(&self, r: &BlochVector) -> [f64; 3] {
        let mut p = [0.0; 3];
        for i in 0..3 {
            p[i] = 0.5 * (self.bias[i] + dot3(self.vectors[i], r.r));
        }
        p
    }

    /// Exact inverse of the Born rule: `r = B^{-1}(2p - b0)`. The result may
    /// leave the Bloch ball; it is returned as-is.
    pub fn linear_inversion(&self, p: [f64; 3]) -> Result<BlochVector> {
        let det = self.direction_determinant();
        if det.abs() <= COMPLETENESS_TOL {
            return Err(Error::Domain(
                "POVM set is not informationally complete (singular B)".into(),
            ));
        }
        let [b1, b2, b3] = self.vectors;
        // Rows of B are b_i; columns of B^{-1} are cross products / det.
        let inv_cols = [cross3(b2, b3), cross3(b3, b1), cross3(b1, b2)];
        let rhs = [
            2.0 * p[0] - self.bias[0],
            2.0 * p[1] - self.bias[1],
            2.0 * p[2] - self.bias[2],
        ];
        let mut r = [0.0; 3];
        for i in 0..3 {
            r[i] = (inv_cols[0][i] * rhs[0] + inv_cols[1][i] * rhs[1] + inv_cols[2][i] * rhs[2])
                / det;
        }
        Ok(BlochVector::new(r))
    }

    /// Canonical-frame angles after rotating `b3` onto z and `b1` into the
    /// x-z half-plane with positive x.
    pub fn canonical_angles(&self) -> Result<CanonicalAngles> {
        let [b1, b2, b3] = self.vectors;
        let (l1, l2, l3) = (norm3(b1), norm3(b2), norm3(b3));
        if l1 <= 1e-12 || l2 <= 1e-12 || l3 <= 1e-12 {
            return Err(Error::Domain("canonical frame undefined for zero-length vectors".into()));
        }
        // theta_1: angle between b1 and b3; theta_2: angle between b2 and b3.
        let theta1 = (dot3(b1, b3) / (l1 * l3)).clamp(-1.0, 1.0).acos();
        let theta2 = (dot3(b2, b3) / (l2 * l3)).clamp(-1.0, 1.0).acos();
        // Azimuth of b2 around b3, measured from the (rotated) y-axis which
        // is b3 x b1 direction; x-axis is the b1 component orthogonal to b3.
        let z_axis = [b3[0] / l3, b3[1] / l3, b3[2] / l3];
        let b1_perp = [
            b1[0] - dot3(b1, z_axis) * z_axis[0],
            b1[1] - dot3(b1, z_axis) * z_axis[1],
            b1[2] - dot3(b1, z_axis) * z_axis[2],
        ];
        let x_norm = norm3(b1_perp);
        if x_norm <= 1e-12 {
            return Err(Error::Domain("canonical frame undefined: b1 parallel to b3".into()));
        }
        let x_axis = [b1_perp[0] / x_norm, b1_perp[1] / x_norm, b1_perp[2] / x_norm];
        let y_axis = cross3(z_axis, x_axis);
        let bx = dot3(b2, x_axis);
        let by = dot3(b2, y_axis);
        // phi2 is measured from the y-axis; the canonical chart puts the
        // x-component at -sin(phi2) sin(theta2).
        let phi2 = (-bx).atan2(by);
        Ok(CanonicalAngles { theta1, theta2, phi2 })
    }
}

/// Result of assembling reconstructed states from probability estimates.
#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub assemblage: Assemblage,
    /// True when all nonzero reconstructed members lie in the Bloch ball
    /// (up to the validity tolerance).
    pub valid: bool,
    /// `max(0, max |r| - 1)` over nonzero members.
    pub worst_violation: f64,
}

/// Reconstructs the assemblage `sigma_{a|x} = p(a|x) rho_{a|x}` from
/// probability estimates under the given POVM-set assumption.
///
/// Empty bins become explicit zero members and are excluded from the
/// validity judgment.
pub fn reconstruct_assemblage(
    set: &TomographySet,
    estimates: &Estimates,
    policy: &NumericPolicy,
) -> Result<Reconstruction> {
    let mut members = Vec::new();
    let mut settings = Vec::new();
    let mut worst: f64 = 0.0;
    for strat in &estimates.strategies {
        settings.push(strat.setting.clone());
        for bin in &strat.bins {
            let bob = match (bin.bob_zero[0], bin.bob_zero[1], bin.bob_zero[2]) {
                (Some(a), Some(b), Some(c)) if bin.probability > 0.0 => [a, b, c],
                _ => {
                    members.push(AssemblageMember::zero(&strat.setting, &bin.outcome));
                    continue;
                }
            };
            let r = set.linear_inversion(bob)?;
            worst = worst.max(r.norm() - 1.0);
            members.push(AssemblageMember {
                setting: strat.setting.clone(),
                outcome: bin.outcome.clone(),
                probability: bin.probability,
                bloch: r.r,
            });
        }
    }
    let worst_violation = worst.max(0.0);
    Ok(Reconstruction {
        assemblage: Assemblage::new(settings, members),
        valid: worst_violation <= policy.tomography_validity,
        worst_violation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ideal_set_examples() {
        let set = TomographySet::ideal();
        assert_abs_diff_eq!(set.direction_determinant(), 1.0, epsilon = 1e-15);
        let p = set.born_probabilities(&BlochVector::new([0.0, 0.0, 1.0]));
        assert_eq!(p, [0.5, 0.5, 1.0]);
        let p = set.born_probabilities(&BlochVector::new([0.0, 0.0, 0.0]));
        assert_eq!(p, [0.5, 0.5, 0.5]);
        let angles = set.canonical_angles().unwrap();
        assert_abs_diff_eq!(angles.theta1, std::f64::consts::FRAC_PI_2, epsilon = 1e-12);
        assert_abs_diff_eq!(angles.theta2, std::f64::consts::FRAC_PI_2, epsilon = 1e-12);
        assert_abs_diff_eq!(angles.phi2, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn born_probability_examples() {
        let set = TomographySet::ideal();
        let p = set.born_probabilities(&BlochVector::new([1.0, 0.0, 0.0]));
        assert_eq!(p, [1.0, 0.5, 0.5]);
        let z = (-2.0f64).exp();
        let p = set.born_probabilities(&BlochVector::new([0.0, 0.0, z]));
        assert_abs_diff_eq!(p[2], 0.5677, epsilon = 1e-4);

        let biased = TomographySet {
            bias: [1.0, 1.0, 1.1],
            vectors: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 0.9]],
        };
        let p = biased.born_probabilities(&BlochVector::new([0.0, 0.0, 1.0]));
        assert_abs_diff_eq!(p[2], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn linear_inversion_examples() {
        let set = TomographySet::ideal();
        let r = set.linear_inversion([0.5, 0.5, 1.0]).unwrap();
        assert!(r.r[0].abs() < 1e-14 && r.r[1].abs() < 1e-14);
        assert_abs_diff_eq!(r.r[2], 1.0, epsilon = 1e-14);

        // Unphysical input stays unclamped and is merely flagged by norm.
        let r = set.linear_inversion([1.0, 1.0, 1.0]).unwrap();
        assert_eq!(r.r, [1.0, 1.0, 1.0]);
        assert!(r.norm() > 1.0);

        let singular = TomographySet {
            bias: [1.0; 3],
            vectors: [[1.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]],
        };
        assert!(singular.linear_inversion([0.5; 3]).is_err());
        assert!(TomographySet::try_new(singular.bias, singular.vectors).is_err());
    }

    #[test]
    fn positivity_constraint() {
        assert!(TomographySet::try_new(
            [1.2, 1.0, 1.0],
            [[0.7, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        )
        .is_ok());
        // |b| = 1 > min(1.2, 0.8) violates positivity.
        let bad = TomographySet::try_new(
            [1.2, 1.0, 1.0],
            [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        );
        assert!(bad.is_err());
    }

    fn random_valid_set(rng: &mut ChaCha8Rng) -> TomographySet {
        loop {
            let mut bias = [0.0f64; 3];
            let mut vectors = [[0.0; 3]; 3];
            for i in 0..3 {
                bias[i] = rng.gen_range(0.4..1.6);
                let cap = bias[i].min(2.0 - bias[i]);
                let len = rng.gen_range(0.3..1.0) * cap;
                let theta = rng.gen_range(0.0..std::f64::consts::PI);
                let phi = rng.gen_range(0.0..std::f64::consts::TAU);
                vectors[i] = [
                    len * theta.sin() * phi.cos(),
                    len * theta.sin() * phi.sin(),
                    len * theta.cos(),
                ];
            }
            if let Ok(set) = TomographySet::try_new(bias, vectors) {
                return set;
            }
        }
    }

    #[test]
    fn round_trip_on_random_sets_and_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let set = random_valid_set(&mut rng);
            let norm = rng.gen_range(0.0..1.0);
            let theta: f64 = rng.gen_range(0.0..std::f64::consts::PI);
            let phi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let r = BlochVector::new([
                norm * theta.sin() * phi.cos(),
                norm * theta.sin() * phi.sin(),
                norm * theta.cos(),
            ]);
            let p = set.born_probabilities(&r);
            let back = set.linear_inversion(p).unwrap();
            for i in 0..3 {
                assert_abs_diff_eq!(back.r[i], r.r[i], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn common_rotation_preserves_bloch_norms() {
        // Rotating both the set and the data-generating states is the
        // unitary freedom behind the canonical frame.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let angle: f64 = 0.9;
        let (c, s) = (angle.cos(), angle.sin());
        // Rotation about z.
        let rot = |v: [f64; 3]| [c * v[0] - s * v[1], s * v[0] + c * v[1], v[2]];
        for _ in 0..20 {
            let set = random_valid_set(&mut rng);
            let rotated = TomographySet {
                bias: set.bias,
                vectors: [rot(set.vectors[0]), rot(set.vectors[1]), rot(set.vectors[2])],
            };
            let r = BlochVector::new([0.3, -0.5, 0.2]);
            let r_rot = BlochVector::new(rot(r.r));
            let p = set.born_probabilities(&r);
            let p_rot = rotated.born_probabilities(&r_rot);
            let rec = set.linear_inversion(p).unwrap();
            let rec_rot = rotated.linear_inversion(p_rot).unwrap();
            assert_abs_diff_eq!(rec.norm(), rec_rot.norm(), epsilon = 1e-12);
            // The canonical angles agree as well.
            let a = set.canonical_angles().unwrap();
            let b = rotated.canonical_angles().unwrap();
            assert_abs_diff_eq!(a.theta1, b.theta1, epsilon = 1e-10);
            assert_abs_diff_eq!(a.theta2, b.theta2, epsilon = 1e-10);
            assert_abs_diff_eq!(a.phi2, b.phi2, epsilon = 1e-10);
        }
    }

    #[test]
    fn shrinking_vectors_inflates_reconstruction() {
        let c = 0.5;
        let shrunk = TomographySet {
            bias: [1.0; 3],
            vectors: [[c, 0.0, 0.0], [0.0, c, 0.0], [0.0, 0.0, c]],
        };
        let ideal = TomographySet::ideal();
        let r = BlochVector::new([0.2, -0.4, 0.6]);
        // Data generated by the ideal (projective) measurement...
        let p = ideal.born_probabilities(&r);
        // ...inverted under the shrunk assumption scales r by 1/c.
        let rec = shrunk.linear_inversion(p).unwrap();
        for i in 0..3 {
            assert_abs_diff_eq!(rec.r[i], r.r[i] / c, epsilon = 1e-12);
        }
    }

    #[test]
    fn canonical_round_trip() {
        let angles = CanonicalAngles { theta1: 1.2, theta2: 1.7, phi2: -0.4 };
        let set = TomographySet::projective(angles);
        let back = set.canonical_angles().unwrap();
        assert_abs_diff_eq!(back.theta1, angles.theta1, epsilon = 1e-12);
        assert_abs_diff_eq!(back.theta2, angles.theta2, epsilon = 1e-12);
        assert_abs_diff_eq!(back.phi2, angles.phi2, epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn born_then_invert_is_identity(seed in 0u64..300) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let set = random_valid_set(&mut rng);
            let r = BlochVector::new([
                rng.gen_range(-0.57..0.57),
                rng.gen_range(-0.57..0.57),
                rng.gen_range(-0.57..0.57),
            ]);
            let back = set.linear_inversion(set.born_probabilities(&r)).unwrap();
            for i in 0..3 {
                prop_assert!((back.r[i] - r.r[i]).abs() < 1e-12);
            }
        }
    }
}
