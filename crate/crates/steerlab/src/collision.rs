//! Collision-model dephasing dynamics.
//!
//! A single collision couples the system qubit to a fresh ancilla through
//! `W = CX (I (x) R_y(g))`, where the CNOT is controlled by the ancilla and
//! targets the system. Composing `N` collisions with coupling
//! `g = arccos(e^{-T/N})` realizes the dephasing channel
//! `diag(1, 1, e^{-T}, e^{-T})` on extended Bloch vectors, independent of the
//! discretization.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::policy::NumericPolicy;
use crate::qmath::{
    bloch_from_density, embed_two_qubit, kron, matrix_from_bloch, partial_trace, rotation_y,
    BlochVector, ComplexMatrix, DensityMatrix,
};

/// Largest joint register (system + ancillas) the dense representation
/// accepts.
pub const MAX_QUBITS: usize = 6;

/// Discretization of a total dephasing time `T` into `N` collisions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollisionConfig {
    total_time: f64,
    collisions: usize,
    step_time: f64,
    coupling: f64,
}

impl CollisionConfig {
    pub fn new(total_time: f64, collisions: usize) -> Result<Self> {
        if !(total_time > 0.0) || !total_time.is_finite() {
            return Err(Error::Domain(format!("total time {total_time} must be positive")));
        }
        if collisions == 0 {
            return Err(Error::Domain("collision count must be positive".into()));
        }
        if collisions + 1 > MAX_QUBITS {
            return Err(Error::Resource(format!(
                "{collisions} collisions need {} qubits, budget is {MAX_QUBITS}",
                collisions + 1
            )));
        }
        let step_time = total_time / collisions as f64;
        // Inverts t = -ln(cos g); t > 0 keeps g strictly inside (0, pi/2).
        let coupling = (-step_time).exp().acos();
        Ok(Self { total_time, collisions, step_time, coupling })
    }

    pub fn total_time(&self) -> f64 {
        self.total_time
    }

    pub fn collisions(&self) -> usize {
        self.collisions
    }

    /// Step time `t = T / N`.
    pub fn step_time(&self) -> f64 {
        self.step_time
    }

    /// Coupling angle `g = arccos(e^{-t})`.
    pub fn coupling(&self) -> f64 {
        self.coupling
    }
}

/// The collision unitary `W = CX^S_A (I (x) R_y(g))` on (system, ancilla).
///
/// Factor ordering follows the crate convention: the system qubit is the
/// more significant tensor factor.
pub fn collision_unitary(coupling: f64) -> Result<ComplexMatrix> {
    if !(coupling > 0.0 && coupling < std::f64::consts::FRAC_PI_2) {
        return Err(Error::Domain(format!(
            "coupling {coupling} outside (0, pi/2)"
        )));
    }
    Ok(collision_unitary_unchecked(coupling))
}

fn collision_unitary_unchecked(coupling: f64) -> ComplexMatrix {
    // Ancilla-controlled NOT targeting the system: |s, a> -> |s xor a, a>.
    let cx = ComplexMatrix::from_real(
        4,
        4,
        &[
            1.0, 0.0, 0.0, 0.0, //
            0.0, 0.0, 0.0, 1.0, //
            0.0, 0.0, 1.0, 0.0, //
            0.0, 1.0, 0.0, 0.0,
        ],
    );
    let rot = kron(&ComplexMatrix::identity(2), &rotation_y(coupling));
    cx.mul(&rot)
}

/// Joint (N+1)-qubit state after all collisions, starting from the given
/// system state with every ancilla in the ground state.
pub fn evolve_joint(rho0: &DensityMatrix, config: &CollisionConfig) -> Result<DensityMatrix> {
    if rho0.qubit_count() != 1 {
        return Err(Error::Domain("initial system state must be a single qubit".into()));
    }
    let n = config.collisions();
    let total_qubits = n + 1;
    let mut joint = rho0.matrix().clone();
    for _ in 0..n {
        joint = kron(&joint, DensityMatrix::ground_state(1).matrix());
    }
    let w = collision_unitary(config.coupling())?;
    let mut state = joint;
    for i in 1..=n {
        let full = embed_two_qubit(&w, 0, i, total_qubits)?;
        state = full.mul(&state).mul(&full.adjoint());
    }
    Ok(DensityMatrix::new_unchecked(state))
}

/// 4x4 real channel matrix acting on extended Bloch vectors `k = (1, r)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    entries: [[f64; 4]; 4],
}

impl ChannelMatrix {
    pub fn identity() -> Self {
        let mut entries = [[0.0; 4]; 4];
        for (i, row) in entries.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        Self { entries }
    }

    pub fn from_entries(entries: [[f64; 4]; 4]) -> Self {
        Self { entries }
    }

    pub fn entries(&self) -> &[[f64; 4]; 4] {
        &self.entries
    }

    pub fn apply(&self, k: [f64; 4]) -> [f64; 4] {
        let mut out = [0.0; 4];
        for (i, row) in self.entries.iter().enumerate() {
            out[i] = row.iter().zip(&k).map(|(a, b)| a * b).sum();
        }
        out
    }

    pub fn apply_bloch(&self, r: &BlochVector) -> BlochVector {
        let k = self.apply(r.extended());
        BlochVector::new([k[1], k[2], k[3]])
    }

    pub fn compose(&self, inner: &ChannelMatrix) -> ChannelMatrix {
        let mut out = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                out[i][j] = (0..4).map(|k| self.entries[i][k] * inner.entries[k][j]).sum();
            }
        }
        ChannelMatrix { entries: out }
    }

    pub fn pow(&self, exponent: usize) -> ChannelMatrix {
        let mut acc = ChannelMatrix::identity();
        for _ in 0..exponent {
            acc = self.compose(&acc);
        }
        acc
    }

    pub fn max_abs_diff(&self, other: &ChannelMatrix) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                d = d.max((self.entries[i][j] - other.entries[i][j]).abs());
            }
        }
        d
    }

    /// Applies the channel to an arbitrary 2x2 matrix by acting on its
    /// (complex) Pauli components.
    fn apply_matrix(&self, m: &ComplexMatrix) -> ComplexMatrix {
        // m = (1/2)(t0 I + v . sigma) with t0 = Tr m, v_i = Tr(sigma_i m),
        // all possibly complex for non-Hermitian inputs.
        let t0 = m.get(0, 0) + m.get(1, 1);
        let vx = m.get(0, 1) + m.get(1, 0);
        let vy = C64::new(0.0, 1.0) * (m.get(0, 1) - m.get(1, 0));
        let vz = m.get(0, 0) - m.get(1, 1);
        let comp = [t0, vx, vy, vz];
        let mut out = [C64::new(0.0, 0.0); 4];
        for (i, row) in self.entries.iter().enumerate() {
            for (j, &e) in row.iter().enumerate() {
                out[i] += comp[j] * e;
            }
        }
        let [o0, ox, oy, oz] = out;
        let half = C64::new(0.5, 0.0);
        let mut res = ComplexMatrix::zeros(2, 2);
        res.set(0, 0, half * (o0 + oz));
        res.set(1, 1, half * (o0 - oz));
        res.set(0, 1, half * (ox - C64::new(0.0, 1.0) * oy));
        res.set(1, 0, half * (ox + C64::new(0.0, 1.0) * oy));
        res
    }

    /// Choi operator `sum_ij E(|i><j|) (x) |i><j|`; PSD iff the channel is
    /// completely positive.
    pub fn choi(&self) -> ComplexMatrix {
        let mut choi = ComplexMatrix::zeros(4, 4);
        for i in 0..2 {
            for j in 0..2 {
                let mut unit = ComplexMatrix::zeros(2, 2);
                unit.set(i, j, C64::new(1.0, 0.0));
                let mapped = self.apply_matrix(&unit);
                for r in 0..2 {
                    for c in 0..2 {
                        let v = choi.get(2 * r + i, 2 * c + j) + mapped.get(r, c);
                        choi.set(2 * r + i, 2 * c + j, v);
                    }
                }
            }
        }
        choi
    }

    /// Smallest eigenvalue of the Choi operator.
    pub fn choi_min_eigenvalue(&self, policy: &NumericPolicy) -> Result<f64> {
        self.choi().min_eigenvalue(policy)
    }

    /// Checks the channel contract: trace-preserving first row and a PSD
    /// Choi operator.
    pub fn validate(&self, policy: &NumericPolicy) -> Result<()> {
        let first = self.entries[0];
        if (first[0] - 1.0).abs() > 1e-12
            || first[1].abs() > 1e-12
            || first[2].abs() > 1e-12
            || first[3].abs() > 1e-12
        {
            return Err(Error::Domain("channel first row is not (1,0,0,0)".into()));
        }
        let min_eig = self.choi_min_eigenvalue(policy)?;
        if min_eig < -policy.psd_slack {
            return Err(Error::Domain(format!(
                "channel is not completely positive (Choi eigenvalue {min_eig:.3e})"
            )));
        }
        Ok(())
    }
}

/// Bloch-channel matrix of a single collision, obtained by process
/// tomography of the reduced map on basis inputs.
pub fn single_step_channel(coupling: f64) -> Result<ChannelMatrix> {
    let w = collision_unitary(coupling)?;
    let map = |r: [f64; 3]| -> Result<[f64; 4]> {
        let rho = DensityMatrix::new_unchecked(matrix_from_bloch(1.0, &BlochVector::new(r)));
        let joint = DensityMatrix::new_unchecked(kron(
            rho.matrix(),
            DensityMatrix::ground_state(1).matrix(),
        ));
        let evolved = joint.conjugate(&w);
        let reduced = partial_trace(&evolved, &[0])?;
        let out = bloch_from_density(&reduced)?;
        Ok(out.extended())
    };
    let base = map([0.0, 0.0, 0.0])?;
    let mut entries = [[0.0; 4]; 4];
    for i in 0..4 {
        entries[i][0] = base[i];
    }
    for (j, dir) in [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]].iter().enumerate() {
        let shifted = map(*dir)?;
        for i in 0..4 {
            entries[i][j + 1] = shifted[i] - base[i];
        }
    }
    Ok(ChannelMatrix::from_entries(entries))
}

/// Bloch vectors of the system after `0..=N` collisions, starting from the
/// ground state.
pub fn stroboscopic_trajectory(config: &CollisionConfig) -> Result<Vec<BlochVector>> {
    let channel = single_step_channel(config.coupling())?;
    let mut out = Vec::with_capacity(config.collisions() + 1);
    let mut r = BlochVector::new([0.0, 0.0, 1.0]);
    out.push(r);
    for _ in 0..config.collisions() {
        r = channel.apply_bloch(&r);
        out.push(r);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::NumericPolicy;
    use crate::qmath::C64;
    use approx::assert_abs_diff_eq;

    const POLICY: NumericPolicy = NumericPolicy::new();

    /// Independent statevector oracle: applies a 4x4 unitary to qubits
    /// (q0, q1) of an n-qubit amplitude vector.
    fn apply_two_qubit_sv(state: &mut Vec<C64>, u: &ComplexMatrix, q0: usize, q1: usize, n: usize) {
        let dim = 1usize << n;
        let mut out = vec![C64::new(0.0, 0.0); dim];
        let bit = |i: usize, q: usize| (i >> (n - 1 - q)) & 1;
        for i in 0..dim {
            let sub = (bit(i, q0) << 1) | bit(i, q1);
            let spectator = i & !((1 << (n - 1 - q0)) | (1 << (n - 1 - q1)));
            for sub_src in 0..4 {
                let src = spectator
                    | (((sub_src >> 1) & 1) << (n - 1 - q0))
                    | ((sub_src & 1) << (n - 1 - q1));
                out[i] += u.get(sub, sub_src) * state[src];
            }
        }
        *state = out;
    }

    #[test]
    fn table1_parameters() {
        let expected_g = [1.435, 1.194, 1.032, 0.919];
        let expected_t = [2.000, 1.000, 0.667, 0.500];
        for n in 1..=4usize {
            let cfg = CollisionConfig::new(2.0, n).unwrap();
            assert_abs_diff_eq!(cfg.coupling(), expected_g[n - 1], epsilon = 5e-4);
            assert_abs_diff_eq!(cfg.step_time(), expected_t[n - 1], epsilon = 5e-4);
            // t = -ln(cos g) round-trips.
            assert_abs_diff_eq!(-cfg.coupling().cos().ln(), cfg.step_time(), epsilon = 1e-12);
            assert!(cfg.coupling() > 0.0 && cfg.coupling() < std::f64::consts::FRAC_PI_2);
        }
    }

    #[test]
    fn config_rejects_bad_input() {
        assert!(CollisionConfig::new(0.0, 2).is_err());
        assert!(CollisionConfig::new(2.0, 0).is_err());
        assert!(matches!(CollisionConfig::new(2.0, 9), Err(Error::Resource(_))));
    }

    #[test]
    fn unitary_small_coupling_approaches_cx() {
        let w = collision_unitary(1e-9).unwrap();
        let cx = collision_unitary_unchecked(0.0);
        assert!(w.max_abs_diff(&cx) < 1e-8);
        assert!(collision_unitary(0.0).is_err());
        assert!(collision_unitary(std::f64::consts::FRAC_PI_2).is_err());
    }

    #[test]
    fn unitary_action_on_ground_state() {
        // W |00> = cos(g/2)|00> + sin(g/2)|11>
        let g = 1.1;
        let w = collision_unitary(g).unwrap();
        let mut state = vec![C64::new(0.0, 0.0); 4];
        state[0] = C64::new(1.0, 0.0);
        apply_two_qubit_sv(&mut state, &w, 0, 1, 2);
        assert_abs_diff_eq!(state[0].re, (g / 2.0).cos(), epsilon = 1e-12);
        assert_abs_diff_eq!(state[3].re, (g / 2.0).sin(), epsilon = 1e-12);
        assert!(state[1].norm() < 1e-12 && state[2].norm() < 1e-12);
    }

    #[test]
    fn unitarity_at_table1_couplings() {
        let id = ComplexMatrix::identity(4);
        for n in 1..=4usize {
            let cfg = CollisionConfig::new(2.0, n).unwrap();
            let w = collision_unitary(cfg.coupling()).unwrap();
            assert!(w.adjoint().mul(&w).max_abs_diff(&id) <= 1e-12);
        }
    }

    #[test]
    fn single_collision_z_component() {
        // g = arccos(e^{-2}) reproduces the reduced z-component e^{-2}.
        let cfg = CollisionConfig::new(2.0, 1).unwrap();
        let joint = evolve_joint(&DensityMatrix::ground_state(1), &cfg).unwrap();
        let reduced = partial_trace(&joint, &[0]).unwrap();
        let r = bloch_from_density(&reduced).unwrap();
        assert_abs_diff_eq!(r.r[2], cfg.coupling().cos(), epsilon = 1e-12);
        assert_abs_diff_eq!(r.r[2], (-2.0f64).exp(), epsilon = 1e-12);
        assert!(r.r[0].abs() < 1e-12 && r.r[1].abs() < 1e-12);
    }

    #[test]
    fn evolve_joint_matches_statevector_oracle() {
        for n in 1..=3usize {
            let cfg = CollisionConfig::new(2.0, n).unwrap();
            let w = collision_unitary(cfg.coupling()).unwrap();
            let qubits = n + 1;
            let dim = 1usize << qubits;
            let mut sv = vec![C64::new(0.0, 0.0); dim];
            sv[0] = C64::new(1.0, 0.0);
            for i in 1..=n {
                apply_two_qubit_sv(&mut sv, &w, 0, i, qubits);
            }
            let joint = evolve_joint(&DensityMatrix::ground_state(1), &cfg).unwrap();
            for r in 0..dim {
                for c in 0..dim {
                    let want = sv[r] * sv[c].conj();
                    assert!((joint.matrix().get(r, c) - want).norm() < 1e-12);
                }
            }
            assert_abs_diff_eq!(joint.matrix().trace().re, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn reduced_state_endpoint_for_all_n() {
        for n in 1..=4usize {
            let cfg = CollisionConfig::new(2.0, n).unwrap();
            let joint = evolve_joint(&DensityMatrix::ground_state(1), &cfg).unwrap();
            let reduced = partial_trace(&joint, &[0]).unwrap();
            let r = bloch_from_density(&reduced).unwrap();
            assert_abs_diff_eq!(r.r[2], (-2.0f64).exp(), epsilon = 1e-10);
            assert!(r.r[0].abs() < 1e-10 && r.r[1].abs() < 1e-10);
        }
    }

    #[test]
    fn single_step_channel_is_diagonal() {
        for n in [1usize, 2] {
            let cfg = CollisionConfig::new(2.0, n).unwrap();
            let ch = single_step_channel(cfg.coupling()).unwrap();
            let cg = cfg.coupling().cos();
            let want = ChannelMatrix::from_entries([
                [1.0, 0.0, 0.0, 0.0],
                [0.0, 1.0, 0.0, 0.0],
                [0.0, 0.0, cg, 0.0],
                [0.0, 0.0, 0.0, cg],
            ]);
            assert!(ch.max_abs_diff(&want) < 1e-12);
            ch.validate(&POLICY).unwrap();
        }
        // g = 1.194 for N=2 gives cos g = e^{-1}.
        let cfg = CollisionConfig::new(2.0, 2).unwrap();
        let ch = single_step_channel(cfg.coupling()).unwrap();
        assert_abs_diff_eq!(ch.entries()[2][2], 0.3679, epsilon = 1e-4);
        assert_abs_diff_eq!(ch.entries()[2][2], (-1.0f64).exp(), epsilon = 1e-12);
    }

    #[test]
    fn discretization_independence() {
        // Lambda^N = diag(1, 1, e^{-T}, e^{-T}) for every N at T = 2.
        let decay = (-2.0f64).exp();
        let want = ChannelMatrix::from_entries([
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, decay, 0.0],
            [0.0, 0.0, 0.0, decay],
        ]);
        let mut composed = Vec::new();
        for n in 1..=4usize {
            let cfg = CollisionConfig::new(2.0, n).unwrap();
            let ch = single_step_channel(cfg.coupling()).unwrap().pow(n);
            assert!(ch.max_abs_diff(&want) < 1e-10);
            composed.push(ch);
        }
        for pair in composed.windows(2) {
            assert!(pair[0].max_abs_diff(&pair[1]) < 1e-10);
        }
    }

    #[test]
    fn joint_evolution_agrees_with_channel_on_random_states() {
        let states = [
            [0.3, -0.5, 0.2],
            [0.0, 0.0, -0.9],
            [0.57, 0.57, 0.57],
            [-0.2, 0.1, 0.4],
        ];
        for n in 1..=3usize {
            let cfg = CollisionConfig::new(2.0, n).unwrap();
            let ch = single_step_channel(cfg.coupling()).unwrap();
            for r0 in states {
                let rho0 =
                    DensityMatrix::new_unchecked(matrix_from_bloch(1.0, &BlochVector::new(r0)));
                let joint = evolve_joint(&rho0, &cfg).unwrap();
                let reduced = partial_trace(&joint, &[0]).unwrap();
                let got = bloch_from_density(&reduced).unwrap();
                let mut want = BlochVector::new(r0);
                for _ in 0..n {
                    want = ch.apply_bloch(&want);
                }
                for i in 0..3 {
                    assert_abs_diff_eq!(got.r[i], want.r[i], epsilon = 1e-10);
                }
            }
        }
    }

    #[test]
    fn trajectory_decays_exponentially() {
        let cfg = CollisionConfig::new(2.0, 4).unwrap();
        let traj = stroboscopic_trajectory(&cfg).unwrap();
        assert_eq!(traj.len(), 5);
        assert_abs_diff_eq!(traj[0].r[2], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(traj[2].r[2], (-1.0f64).exp(), epsilon = 1e-10);
        assert_abs_diff_eq!(traj[4].r[2], (-2.0f64).exp(), epsilon = 1e-10);
        for (k, point) in traj.iter().enumerate() {
            assert_abs_diff_eq!(point.r[2], (-(k as f64) * 0.5).exp(), epsilon = 1e-10);
            assert!(point.r[0].abs() < 1e-12 && point.r[1].abs() < 1e-12);
        }
    }
}
