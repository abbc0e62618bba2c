//! Measurement strategies on the ancillas and the assemblages they steer.
//!
//! A strategy assigns one measurement direction per ancilla; an outcome
//! tuple `a` selects one projector per ancilla. The resulting subnormalized
//! steered states of the system qubit form the assemblage `{sigma_{a|x}}`.
//!
//! Outcome tuples are serialized as bit-strings with ancilla 1 as the
//! leftmost character. This convention also governs counts files.

use serde::{Deserialize, Serialize};

use crate::collision::CollisionConfig;
use crate::error::{Error, Result};
use crate::qmath::{
    bloch_from_matrix, direction_projector, kron, matrix_from_bloch, partial_trace, trace_norm2,
    BlochVector, ComplexMatrix, DensityMatrix,
};

/// One of Alice's measurement scenarios: a unit Bloch direction per ancilla.
/// The outcome-"0" POVM element on ancilla `i` is `(1/2)(I + a_i . sigma)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementStrategy {
    pub label: String,
    pub directions: Vec<[f64; 3]>,
}

impl MeasurementStrategy {
    pub fn new(label: impl Into<String>, directions: Vec<[f64; 3]>) -> Result<Self> {
        for d in &directions {
            let norm = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
            if (norm - 1.0).abs() > 1e-12 {
                return Err(Error::Domain(format!(
                    "measurement direction {d:?} has norm {norm}, expected 1"
                )));
            }
        }
        Ok(Self { label: label.into(), directions })
    }

    /// Same direction on every ancilla.
    pub fn uniform(label: impl Into<String>, direction: [f64; 3], ancillas: usize) -> Result<Self> {
        Self::new(label, vec![direction; ancillas])
    }

    pub fn ancilla_count(&self) -> usize {
        self.directions.len()
    }

    /// Tensor-product POVM element for an outcome bit-string, acting on the
    /// ancilla register only.
    pub fn povm_element(&self, outcome: &str) -> Result<ComplexMatrix> {
        if outcome.len() != self.directions.len() {
            return Err(Error::Domain(format!(
                "outcome '{outcome}' does not match {} ancillas",
                self.directions.len()
            )));
        }
        let mut acc: Option<ComplexMatrix> = None;
        for (bit, dir) in outcome.chars().zip(&self.directions) {
            let sign = match bit {
                '0' => 1.0,
                '1' => -1.0,
                _ => return Err(Error::Domain(format!("invalid outcome bit '{bit}'"))),
            };
            let local = direction_projector(*dir, sign);
            acc = Some(match acc {
                None => local,
                Some(prev) => kron(&prev, &local),
            });
        }
        Ok(acc.expect("at least one ancilla"))
    }
}

/// The three scenarios of the dephasing experiment: `x1` along z, `x2`
/// tilted by the coupling angle into the x-z plane, `x3` tilted into the
/// y-z plane by `theta_n`.
pub fn builtin_strategies(
    config: &CollisionConfig,
    theta_n: f64,
) -> Result<[MeasurementStrategy; 3]> {
    if !(theta_n > 0.0 && theta_n < std::f64::consts::PI) {
        return Err(Error::Domain(format!("theta_N {theta_n} outside (0, pi)")));
    }
    let n = config.collisions();
    let g = config.coupling();
    Ok([
        MeasurementStrategy::uniform("x1", [0.0, 0.0, 1.0], n)?,
        MeasurementStrategy::uniform("x2", [g.sin(), 0.0, g.cos()], n)?,
        MeasurementStrategy::uniform("x3", [0.0, theta_n.sin(), theta_n.cos()], n)?,
    ])
}

/// A subnormalized member `sigma_{a|x} = p(a|x) rho_{a|x}` stored as the
/// probability and the Bloch vector of the normalized part. Reconstruction
/// from data may produce `|bloch| > 1`; physicality is judged downstream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssemblageMember {
    /// Strategy label.
    #[serde(rename = "x")]
    pub setting: String,
    /// Outcome bit-string, ancilla 1 leftmost.
    #[serde(rename = "a")]
    pub outcome: String,
    #[serde(rename = "p")]
    pub probability: f64,
    pub bloch: [f64; 3],
}

impl AssemblageMember {
    pub fn zero(setting: impl Into<String>, outcome: impl Into<String>) -> Self {
        Self {
            setting: setting.into(),
            outcome: outcome.into(),
            probability: 0.0,
            bloch: [0.0; 3],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.probability <= 0.0
    }

    /// The subnormalized operator `(p/2)(I + r . sigma)`.
    pub fn operator(&self) -> ComplexMatrix {
        let v = BlochVector::new([
            self.probability * self.bloch[0],
            self.probability * self.bloch[1],
            self.probability * self.bloch[2],
        ]);
        matrix_from_bloch(self.probability, &v)
    }

    pub fn bloch_norm(&self) -> f64 {
        BlochVector::new(self.bloch).norm()
    }
}

/// The set `{sigma_{a|x}}` over all settings and outcomes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assemblage {
    pub settings: Vec<String>,
    pub members: Vec<AssemblageMember>,
}

impl Assemblage {
    pub fn new(settings: Vec<String>, members: Vec<AssemblageMember>) -> Self {
        Self { settings, members }
    }

    pub fn members_for<'a>(
        &'a self,
        setting: &'a str,
    ) -> impl Iterator<Item = &'a AssemblageMember> + 'a {
        self.members.iter().filter(move |m| m.setting == setting)
    }

    /// Outcome-averaged state per setting as `(total probability, summed
    /// subnormalized Bloch vector)`.
    fn setting_average(&self, setting: &str) -> (f64, [f64; 3]) {
        let mut p = 0.0;
        let mut v = [0.0; 3];
        for m in self.members_for(setting) {
            p += m.probability;
            for i in 0..3 {
                v[i] += m.probability * m.bloch[i];
            }
        }
        (p, v)
    }

    /// Largest pairwise trace-norm distance between the setting-averaged
    /// states; zero by convention for fewer than two settings.
    pub fn no_signaling_defect(&self) -> f64 {
        let mut defect: f64 = 0.0;
        for (i, a) in self.settings.iter().enumerate() {
            for b in &self.settings[i + 1..] {
                let (pa, va) = self.setting_average(a);
                let (pb, vb) = self.setting_average(b);
                let diff = matrix_from_bloch(
                    pa - pb,
                    &BlochVector::new([va[0] - vb[0], va[1] - vb[1], va[2] - vb[2]]),
                );
                defect = defect.max(trace_norm2(&diff));
            }
        }
        defect
    }

    /// Per-setting probability sums; should each be 1 for normalized data.
    pub fn probability_sums(&self) -> Vec<(String, f64)> {
        self.settings
            .iter()
            .map(|s| (s.clone(), self.members_for(s).map(|m| m.probability).sum()))
            .collect()
    }

    /// White-noise regularization `r -> (1 - lambda) r` on every member;
    /// probabilities are unchanged.
    pub fn add_white_noise(&self, lambda: f64) -> Result<Assemblage> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::Domain(format!("white-noise weight {lambda} outside [0, 1]")));
        }
        let members = self
            .members
            .iter()
            .map(|m| AssemblageMember {
                bloch: [
                    (1.0 - lambda) * m.bloch[0],
                    (1.0 - lambda) * m.bloch[1],
                    (1.0 - lambda) * m.bloch[2],
                ],
                ..m.clone()
            })
            .collect();
        Ok(Assemblage::new(self.settings.clone(), members))
    }

    /// Applies a rotation matrix to every member's Bloch vector (the Bloch
    /// picture of a common unitary conjugation).
    pub fn rotate(&self, rotation: &[[f64; 3]; 3]) -> Assemblage {
        let members = self
            .members
            .iter()
            .map(|m| {
                let mut r = [0.0; 3];
                for i in 0..3 {
                    r[i] = (0..3).map(|j| rotation[i][j] * m.bloch[j]).sum();
                }
                AssemblageMember { bloch: r, ..m.clone() }
            })
            .collect();
        Assemblage::new(self.settings.clone(), members)
    }
}

/// Exact assemblage of a joint state under the given strategies (Born rule).
///
/// Zero-probability outcomes are retained as explicit zero members so the
/// outcome-space shape stays uniform for the SDP.
pub fn ideal_assemblage(
    joint: &DensityMatrix,
    strategies: &[MeasurementStrategy],
) -> Result<Assemblage> {
    let ancillas = joint.qubit_count().checked_sub(1).filter(|&n| n > 0).ok_or_else(|| {
        Error::Domain("joint state must contain the system qubit and at least one ancilla".into())
    })?;
    let mut members = Vec::new();
    let mut settings = Vec::new();
    for strategy in strategies {
        if strategy.ancilla_count() != ancillas {
            return Err(Error::Domain(format!(
                "strategy '{}' has {} directions but the joint state has {} ancillas",
                strategy.label,
                strategy.ancilla_count(),
                ancillas
            )));
        }
        settings.push(strategy.label.clone());
        for outcome_index in 0..(1usize << ancillas) {
            let outcome = outcome_bits(outcome_index, ancillas);
            let element = strategy.povm_element(&outcome)?;
            let full = kron(&ComplexMatrix::identity(2), &element);
            let weighted = DensityMatrix::new_unchecked(joint.matrix().mul(&full));
            let sigma = partial_trace(&weighted, &[0])?;
            let p = sigma.matrix().trace().re;
            if p < 1e-14 {
                members.push(AssemblageMember::zero(&strategy.label, outcome));
                continue;
            }
            let normalized = sigma.matrix().scale(num_complex::Complex64::new(1.0 / p, 0.0));
            // Hermitize to scrub the imaginary dust left by the product.
            let herm = normalized.add(&normalized.adjoint()).scale(0.5.into());
            let r = bloch_from_matrix(&herm);
            members.push(AssemblageMember {
                setting: strategy.label.clone(),
                outcome,
                probability: p,
                bloch: r.r,
            });
        }
    }
    Ok(Assemblage::new(settings, members))
}

/// Bit-string for an outcome index; ancilla 1 is the leftmost character.
pub fn outcome_bits(index: usize, ancillas: usize) -> String {
    (0..ancillas)
        .map(|i| if (index >> (ancillas - 1 - i)) & 1 == 1 { '1' } else { '0' })
        .collect()
}

/// JSON document for assemblage files.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AssemblageFile {
    pub settings: Vec<String>,
    pub members: Vec<AssemblageMember>,
    pub meta: serde_json::Value,
}

impl AssemblageFile {
    pub fn new(assemblage: &Assemblage, meta: serde_json::Value) -> Self {
        Self {
            settings: assemblage.settings.clone(),
            members: assemblage.members.clone(),
            meta,
        }
    }

    pub fn assemblage(&self) -> Assemblage {
        Assemblage::new(self.settings.clone(), self.members.clone())
    }

    pub fn write(&self, path: &std::path::Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(path, json + "\n")?;
        Ok(())
    }

    pub fn read(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Input(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::Input(format!("malformed assemblage file {}: {e}", path.display())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collision::evolve_joint;
    use approx::assert_abs_diff_eq;

    fn n1_joint() -> (CollisionConfig, DensityMatrix) {
        let cfg = CollisionConfig::new(2.0, 1).unwrap();
        let joint = evolve_joint(&DensityMatrix::ground_state(1), &cfg).unwrap();
        (cfg, joint)
    }

    #[test]
    fn builtin_strategies_match_table1() {
        let cfg = CollisionConfig::new(2.0, 1).unwrap();
        let [x1, x2, x3] = builtin_strategies(&cfg, 1.570).unwrap();
        assert_eq!(x1.directions[0], [0.0, 0.0, 1.0]);
        assert_abs_diff_eq!(x2.directions[0][0], cfg.coupling().sin(), epsilon = 1e-12);
        // theta_1 = 1.570 points essentially along +y.
        assert_abs_diff_eq!(x3.directions[0][1], 1.0, epsilon = 1e-3);

        let cfg4 = CollisionConfig::new(2.0, 4).unwrap();
        let [_, x2, _] = builtin_strategies(&cfg4, 0.334).unwrap();
        for d in &x2.directions {
            assert_abs_diff_eq!(d[0], 0.919f64.sin(), epsilon = 1e-3);
            assert_abs_diff_eq!(d[2], 0.919f64.cos(), epsilon = 1e-3);
        }
        for strat in builtin_strategies(&cfg4, 0.334).unwrap() {
            for d in &strat.directions {
                let norm = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
                assert_abs_diff_eq!(norm, 1.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn n1_x1_assemblage_from_statevector_oracle() {
        // Joint state cos(g/2)|00> + sin(g/2)|11>; measuring the ancilla in
        // z steers the system to |0> or |1>.
        let (cfg, joint) = n1_joint();
        let [x1, _, _] = builtin_strategies(&cfg, 1.570).unwrap();
        let asm = ideal_assemblage(&joint, &[x1]).unwrap();
        let c2 = (cfg.coupling() / 2.0).cos().powi(2);
        let m0 = asm.members.iter().find(|m| m.outcome == "0").unwrap();
        let m1 = asm.members.iter().find(|m| m.outcome == "1").unwrap();
        assert_abs_diff_eq!(m0.probability, c2, epsilon = 1e-12);
        // Three-decimal g rounding shifts the reference values by ~1e-4.
        assert_abs_diff_eq!(m0.probability, 0.5679, epsilon = 5e-4);
        assert_abs_diff_eq!(m1.probability, 0.4321, epsilon = 5e-4);
        assert_abs_diff_eq!(m0.bloch[2], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m1.bloch[2], -1.0, epsilon = 1e-12);
    }

    #[test]
    fn averages_reproduce_reduced_state() {
        for n in 1..=3usize {
            let cfg = CollisionConfig::new(2.0, n).unwrap();
            let joint = evolve_joint(&DensityMatrix::ground_state(1), &cfg).unwrap();
            let strategies = builtin_strategies(&cfg, 0.7).unwrap();
            let asm = ideal_assemblage(&joint, &strategies).unwrap();
            assert!(asm.no_signaling_defect() <= 1e-12);
            for (_, sum) in asm.probability_sums() {
                assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-12);
            }
            for setting in &asm.settings {
                let (p, v) = asm.setting_average(setting);
                assert_abs_diff_eq!(p, 1.0, epsilon = 1e-12);
                assert_abs_diff_eq!(v[2], (-2.0f64).exp(), epsilon = 1e-10);
                assert!(v[0].abs() < 1e-10 && v[1].abs() < 1e-10);
            }
        }
    }

    #[test]
    fn product_state_steers_nothing() {
        let system = crate::qmath::density_from_bloch(&BlochVector::new([0.3, 0.1, -0.4]));
        let env = DensityMatrix::ground_state(2);
        let joint = DensityMatrix::new_unchecked(kron(system.matrix(), env.matrix()));
        let cfg = CollisionConfig::new(2.0, 2).unwrap();
        let strategies = builtin_strategies(&cfg, 0.7).unwrap();
        let asm = ideal_assemblage(&joint, &strategies).unwrap();
        for m in asm.members.iter().filter(|m| !m.is_zero()) {
            for i in 0..3 {
                assert_abs_diff_eq!(m.bloch[i], [0.3, 0.1, -0.4][i], epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn pure_joint_state_gives_pure_members() {
        for n in 1..=3usize {
            let cfg = CollisionConfig::new(2.0, n).unwrap();
            let joint = evolve_joint(&DensityMatrix::ground_state(1), &cfg).unwrap();
            let [x1, x2, _] = builtin_strategies(&cfg, 0.7).unwrap();
            let asm = ideal_assemblage(&joint, &[x1, x2]).unwrap();
            for m in asm.members.iter().filter(|m| !m.is_zero()) {
                assert_abs_diff_eq!(m.bloch_norm(), 1.0, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn white_noise_examples() {
        let (cfg, joint) = n1_joint();
        let strategies = builtin_strategies(&cfg, 1.570).unwrap();
        let asm = ideal_assemblage(&joint, &strategies).unwrap();
        let same = asm.add_white_noise(0.0).unwrap();
        assert_eq!(asm, same);
        let mixed = asm.add_white_noise(1.0).unwrap();
        for m in &mixed.members {
            assert!(m.bloch_norm() < 1e-14);
        }
        let slight = asm.add_white_noise(0.05).unwrap();
        for (a, b) in asm.members.iter().zip(&slight.members) {
            assert_abs_diff_eq!(b.probability, a.probability, epsilon = 1e-15);
            assert_abs_diff_eq!(b.bloch_norm(), 0.95 * a.bloch_norm(), epsilon = 1e-12);
        }
        assert!((slight.no_signaling_defect() - asm.no_signaling_defect()).abs() < 1e-12);
        assert!(asm.add_white_noise(1.5).is_err());
    }

    #[test]
    fn outcome_relabeling_keeps_sums() {
        let (cfg, joint) = n1_joint();
        let strategies = builtin_strategies(&cfg, 1.570).unwrap();
        let asm = ideal_assemblage(&joint, &strategies).unwrap();
        let mut relabeled = asm.clone();
        for m in &mut relabeled.members {
            if m.setting == "x1" {
                m.outcome = if m.outcome == "0" { "1".into() } else { "0".into() };
            }
        }
        let sums_a = asm.probability_sums();
        let sums_b = relabeled.probability_sums();
        assert_eq!(sums_a.len(), sums_b.len());
        for ((_, a), (_, b)) in sums_a.iter().zip(&sums_b) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(
            relabeled.no_signaling_defect(),
            asm.no_signaling_defect(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn single_setting_defect_is_zero() {
        let (cfg, joint) = n1_joint();
        let [x1, _, _] = builtin_strategies(&cfg, 1.570).unwrap();
        let asm = ideal_assemblage(&joint, &[x1]).unwrap();
        assert_eq!(asm.no_signaling_defect(), 0.0);
    }

    #[test]
    fn json_round_trip_is_lossless() {
        let (cfg, joint) = n1_joint();
        let strategies = builtin_strategies(&cfg, 1.570).unwrap();
        let asm = ideal_assemblage(&joint, &strategies).unwrap();
        let file = AssemblageFile::new(&asm, serde_json::json!({"N": 1, "T": 2.0}));
        let text = serde_json::to_string(&file).unwrap();
        let back: AssemblageFile = serde_json::from_str(&text).unwrap();
        // serde_json uses shortest-round-trip float formatting, so equality
        // here is bit-exact.
        assert_eq!(back.assemblage(), asm);
    }
}
