//! Dense complex linear algebra and qubit-state primitives.
//!
//! Everything here is sized for at most a handful of qubits (the collision
//! model never exceeds a 32-dimensional Hilbert space), so the
//! implementations favor clarity over asymptotics: dense row-major storage,
//! closed-form 2x2 eigenvalues and cyclic Jacobi for anything larger.
//!
//! Qubit ordering convention: index 0 is the system qubit, indices `1..=N`
//! are the ancillas in collision order, and tensor factor 0 is the most
//! significant axis. The bit of qubit `q` inside a basis index `i` of an
//! `n`-qubit space is `(i >> (n - 1 - q)) & 1`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::policy::NumericPolicy;

pub type C64 = Complex64;

/// Dense complex matrix with row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Self { rows, cols, data: vec![C64::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m.set(i, i, C64::new(1.0, 0.0));
        }
        m
    }

    /// Builds a matrix from a row-major slice of entries.
    pub fn from_rows(rows: usize, cols: usize, entries: &[C64]) -> Self {
        assert_eq!(entries.len(), rows * cols, "entry count must match dimensions");
        Self { rows, cols, data: entries.to_vec() }
    }

    /// Real row-major entries, convenient for gate definitions.
    pub fn from_real(rows: usize, cols: usize, entries: &[f64]) -> Self {
        let data = entries.iter().map(|&x| C64::new(x, 0.0)).collect();
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: C64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn mul(&self, other: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.cols, other.rows, "inner dimensions must agree");
        let mut out = ComplexMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    let v = out.get(i, j) + a * other.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    pub fn add(&self, other: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        ComplexMatrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, other: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        ComplexMatrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn scale(&self, s: C64) -> ComplexMatrix {
        let data = self.data.iter().map(|a| a * s).collect();
        ComplexMatrix { rows: self.rows, cols: self.cols, data }
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.set(c, r, self.get(r, c).conj());
            }
        }
        out
    }

    pub fn trace(&self) -> C64 {
        assert_eq!(self.rows, self.cols, "trace of a non-square matrix");
        (0..self.rows).map(|i| self.get(i, i)).sum()
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &ComplexMatrix) -> f64 {
        self.sub(other).max_abs()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        if self.rows != self.cols {
            return false;
        }
        for r in 0..self.rows {
            for c in r..self.cols {
                if (self.get(r, c) - self.get(c, r).conj()).norm() > tol {
                    return false;
                }
            }
        }
        true
    }

    /// Eigenvalues of a Hermitian matrix, ascending. Closed form for 2x2,
    /// cyclic Jacobi otherwise.
    pub fn hermitian_eigenvalues(&self, policy: &NumericPolicy) -> Result<Vec<f64>> {
        if !self.is_hermitian(policy.hermiticity.max(1e-9 * self.max_abs())) {
            return Err(Error::Domain("eigenvalues requested for a non-Hermitian matrix".into()));
        }
        if self.rows == 1 {
            return Ok(vec![self.get(0, 0).re]);
        }
        if self.rows == 2 {
            let (lo, hi) = hermitian2_eigenvalues(self);
            return Ok(vec![lo, hi]);
        }
        Ok(jacobi_eigenvalues(self))
    }

    /// Smallest eigenvalue of a Hermitian matrix.
    pub fn min_eigenvalue(&self, policy: &NumericPolicy) -> Result<f64> {
        let eigs = self.hermitian_eigenvalues(policy)?;
        Ok(eigs[0])
    }
}

/// Closed-form eigenvalues of a Hermitian 2x2 matrix, (min, max).
pub fn hermitian2_eigenvalues(m: &ComplexMatrix) -> (f64, f64) {
    debug_assert_eq!(m.rows(), 2);
    let a = m.get(0, 0).re;
    let d = m.get(1, 1).re;
    let b = m.get(0, 1);
    let mean = 0.5 * (a + d);
    let disc = (0.5 * (a - d)).hypot(b.norm());
    (mean - disc, mean + disc)
}

/// Cyclic Jacobi eigenvalue iteration for complex Hermitian matrices.
fn jacobi_eigenvalues(m: &ComplexMatrix) -> Vec<f64> {
    let n = m.rows();
    let mut a = m.clone();
    // Off-diagonal Frobenius mass drives the sweep count.
    let off = |a: &ComplexMatrix| -> f64 {
        let mut s = 0.0;
        for r in 0..n {
            for c in 0..n {
                if r != c {
                    s += a.get(r, c).norm_sqr();
                }
            }
        }
        s
    };
    let scale = a.max_abs().max(1.0);
    for _sweep in 0..100 {
        if off(&a).sqrt() <= 1e-14 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if apq.norm() <= 1e-300 {
                    continue;
                }
                // Phase removal followed by a real Jacobi rotation:
                // V = diag(e^{i alpha}, 1) * R(theta) zeros the (p, q) entry.
                let phase = apq / apq.norm();
                let app = a.get(p, p).re;
                let aqq = a.get(q, q).re;
                let theta = 0.5 * (2.0 * apq.norm()).atan2(app - aqq);
                let (c, s) = (theta.cos(), theta.sin());
                // Column update: A <- A * V.
                for r in 0..n {
                    let arp = a.get(r, p);
                    let arq = a.get(r, q);
                    a.set(r, p, arp * (phase * c) + arq * s);
                    a.set(r, q, arp * (-phase * s) + arq * c);
                }
                // Row update: A <- V^H * A.
                for col in 0..n {
                    let apc = a.get(p, col);
                    let aqc = a.get(q, col);
                    a.set(p, col, apc * (phase.conj() * c) + aqc * s);
                    a.set(q, col, apc * (-phase.conj() * s) + aqc * c);
                }
            }
        }
    }
    let mut eigs: Vec<f64> = (0..n).map(|i| a.get(i, i).re).collect();
    eigs.sort_by(|x, y| x.partial_cmp(y).unwrap());
    eigs
}

/// Kronecker product; dimensions multiply, factor `a` is most significant.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(a.rows() * b.rows(), a.cols() * b.cols());
    for ar in 0..a.rows() {
        for ac in 0..a.cols() {
            let av = a.get(ar, ac);
            if av.norm_sqr() == 0.0 {
                continue;
            }
            for br in 0..b.rows() {
                for bc in 0..b.cols() {
                    out.set(ar * b.rows() + br, ac * b.cols() + bc, av * b.get(br, bc));
                }
            }
        }
    }
    out
}

/// Kronecker product of a sequence of matrices, left factor most significant.
pub fn kron_all(factors: &[&ComplexMatrix]) -> ComplexMatrix {
    assert!(!factors.is_empty());
    let mut acc = factors[0].clone();
    for f in &factors[1..] {
        acc = kron(&acc, f);
    }
    acc
}

pub fn pauli_x() -> ComplexMatrix {
    ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0])
}

pub fn pauli_y() -> ComplexMatrix {
    ComplexMatrix::from_rows(
        2,
        2,
        &[
            C64::new(0.0, 0.0),
            C64::new(0.0, -1.0),
            C64::new(0.0, 1.0),
            C64::new(0.0, 0.0),
        ],
    )
}

pub fn pauli_z() -> ComplexMatrix {
    ComplexMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, -1.0])
}

/// `R_y(g) = exp(-i g sigma_y / 2)`.
pub fn rotation_y(angle: f64) -> ComplexMatrix {
    let (c, s) = ((angle / 2.0).cos(), (angle / 2.0).sin());
    ComplexMatrix::from_real(2, 2, &[c, -s, s, c])
}

/// `R_x(g) = exp(-i g sigma_x / 2)`.
pub fn rotation_x(angle: f64) -> ComplexMatrix {
    let (c, s) = ((angle / 2.0).cos(), (angle / 2.0).sin());
    ComplexMatrix::from_rows(
        2,
        2,
        &[
            C64::new(c, 0.0),
            C64::new(0.0, -s),
            C64::new(0.0, -s),
            C64::new(c, 0.0),
        ],
    )
}

/// Outcome-"0" projector `(1/2)(I + a . sigma)` for a unit Bloch direction;
/// the sign flips the direction for outcome "1".
pub fn direction_projector(direction: [f64; 3], sign: f64) -> ComplexMatrix {
    let [ax, ay, az] = direction;
    let mut m = ComplexMatrix::identity(2);
    let x = pauli_x().scale(C64::new(sign * ax, 0.0));
    let y = pauli_y().scale(C64::new(sign * ay, 0.0));
    let z = pauli_z().scale(C64::new(sign * az, 0.0));
    m = m.add(&x).add(&y).add(&z);
    m.scale(C64::new(0.5, 0.0))
}

/// Qubit-count helper: `dim = 2^n` or a domain error.
fn qubit_count(dim: usize) -> Result<usize> {
    if dim.is_power_of_two() && dim >= 2 {
        Ok(dim.trailing_zeros() as usize)
    } else {
        Err(Error::Domain(format!("dimension {dim} is not a qubit dimension")))
    }
}

/// Bloch vector of a single qubit, `|r| <= 1` for physical states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochVector {
    pub r: [f64; 3],
}

impl BlochVector {
    pub fn new(r: [f64; 3]) -> Self {
        Self { r }
    }

    pub fn norm(&self) -> f64 {
        (self.r[0] * self.r[0] + self.r[1] * self.r[1] + self.r[2] * self.r[2]).sqrt()
    }

    /// Extended 4-vector `k = (1, r)`.
    pub fn extended(&self) -> [f64; 4] {
        [1.0, self.r[0], self.r[1], self.r[2]]
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { r: [self.r[0] * factor, self.r[1] * factor, self.r[2] * factor] }
    }
}

/// Qubit or multi-qubit density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
    qubits: usize,
}

impl DensityMatrix {
    /// Wraps a matrix after checking Hermiticity, unit trace and positivity.
    pub fn new(matrix: ComplexMatrix, policy: &NumericPolicy) -> Result<Self> {
        if matrix.rows() != matrix.cols() {
            return Err(Error::Domain("density matrix must be square".into()));
        }
        let qubits = qubit_count(matrix.rows())?;
        if !matrix.is_hermitian(policy.hermiticity) {
            return Err(Error::Domain("density matrix is not Hermitian".into()));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > policy.trace || tr.im.abs() > policy.trace {
            return Err(Error::Domain(format!("density matrix trace {} is not 1", tr.re)));
        }
        let min_eig = matrix.min_eigenvalue(policy)?;
        if min_eig < -policy.psd_slack {
            return Err(Error::Domain(format!(
                "density matrix has negative eigenvalue {min_eig:.3e}"
            )));
        }
        Ok(Self { matrix, qubits })
    }

    /// Wraps without validation; for internal construction of states that
    /// are PSD by algebra.
    pub(crate) fn new_unchecked(matrix: ComplexMatrix) -> Self {
        let qubits = qubit_count(matrix.rows()).expect("internal state has qubit dimension");
        Self { matrix, qubits }
    }

    /// `|0...0><0...0|` on `n` qubits.
    pub fn ground_state(qubits: usize) -> Self {
        let dim = 1usize << qubits;
        let mut m = ComplexMatrix::zeros(dim, dim);
        m.set(0, 0, C64::new(1.0, 0.0));
        Self { matrix: m, qubits }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn qubit_count(&self) -> usize {
        self.qubits
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    /// `U rho U^dagger`.
    pub fn conjugate(&self, u: &ComplexMatrix) -> Self {
        Self { matrix: u.mul(&self.matrix).mul(&u.adjoint()), qubits: self.qubits }
    }

    /// Convex mixture `(1 - w) rho + w tau`.
    pub fn mix(&self, other: &DensityMatrix, weight: f64) -> Self {
        let m = self
            .matrix
            .scale(C64::new(1.0 - weight, 0.0))
            .add(&other.matrix.scale(C64::new(weight, 0.0)));
        Self { matrix: m, qubits: self.qubits }
    }

    /// Maximally mixed state on `n` qubits.
    pub fn maximally_mixed(qubits: usize) -> Self {
        let dim = 1usize << qubits;
        Self {
            matrix: ComplexMatrix::identity(dim).scale(C64::new(1.0 / dim as f64, 0.0)),
            qubits,
        }
    }
}

/// Partial trace keeping the listed qubits (ascending order in the result).
pub fn partial_trace(state: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    let n = state.qubit_count();
    let mut keep = keep.to_vec();
    keep.sort_unstable();
    keep.dedup();
    if keep.is_empty() {
        return Err(Error::Domain("partial trace must keep at least one qubit".into()));
    }
    if keep.iter().any(|&q| q >= n) {
        return Err(Error::Domain(format!("kept qubit index out of range for {n} qubits")));
    }
    let traced: Vec<usize> = (0..n).filter(|q| !keep.contains(q)).collect();
    let k = keep.len();
    let out_dim = 1usize << k;
    let mut out = ComplexMatrix::zeros(out_dim, out_dim);
    let bit = |i: usize, q: usize| (i >> (n - 1 - q)) & 1;
    // Compose a full index from kept bits and traced bits.
    let assemble = |kept_bits: usize, traced_bits: usize| -> usize {
        let mut idx = 0usize;
        for (pos, &q) in keep.iter().enumerate() {
            let b = (kept_bits >> (k - 1 - pos)) & 1;
            idx |= b << (n - 1 - q);
        }
        for (pos, &q) in traced.iter().enumerate() {
            let b = (traced_bits >> (traced.len().saturating_sub(1) - pos)) & 1;
            idx |= b << (n - 1 - q);
        }
        idx
    };
    let traced_dim = 1usize << traced.len();
    for r in 0..out_dim {
        for c in 0..out_dim {
            let mut acc = C64::new(0.0, 0.0);
            for t in 0..traced_dim {
                acc += state.matrix().get(assemble(r, t), assemble(c, t));
            }
            out.set(r, c, acc);
        }
    }
    let _ = bit;
    Ok(DensityMatrix::new_unchecked(out))
}

/// Embeds a two-qubit operator acting on qubits `(q0, q1)` of an `n`-qubit
/// space; `q0` maps to the more significant bit of the 4-dimensional block.
pub fn embed_two_qubit(op: &ComplexMatrix, q0: usize, q1: usize, n: usize) -> Result<ComplexMatrix> {
    if op.rows() != 4 || op.cols() != 4 {
        return Err(Error::Domain("embed_two_qubit expects a 4x4 operator".into()));
    }
    if q0 == q1 || q0 >= n || q1 >= n {
        return Err(Error::Domain("invalid target qubits for embedding".into()));
    }
    let dim = 1usize << n;
    let mut out = ComplexMatrix::zeros(dim, dim);
    let bit = |i: usize, q: usize| (i >> (n - 1 - q)) & 1;
    for row in 0..dim {
        let sub_r = (bit(row, q0) << 1) | bit(row, q1);
        let spectator = row & !((1 << (n - 1 - q0)) | (1 << (n - 1 - q1)));
        for sub_c in 0..4 {
            let v = op.get(sub_r, sub_c);
            if v.norm_sqr() == 0.0 {
                continue;
            }
            let col = spectator
                | (((sub_c >> 1) & 1) << (n - 1 - q0))
                | ((sub_c & 1) << (n - 1 - q1));
            out.set(row, col, v);
        }
    }
    Ok(out)
}

/// Reorders the tensor factors of a multi-qubit matrix. `perm[new] = old`:
/// qubit `perm[i]` of the input becomes qubit `i` of the output.
pub fn permute_qubits(m: &ComplexMatrix, perm: &[usize]) -> Result<ComplexMatrix> {
    let n = perm.len();
    let dim = 1usize << n;
    if m.rows() != dim || m.cols() != dim {
        return Err(Error::Domain("permutation length does not match matrix size".into()));
    }
    let mut seen = vec![false; n];
    for &p in perm {
        if p >= n || seen[p] {
            return Err(Error::Domain("invalid qubit permutation".into()));
        }
        seen[p] = true;
    }
    let map_index = |i: usize| -> usize {
        let mut out = 0usize;
        for (new_q, &old_q) in perm.iter().enumerate() {
            let b = (i >> (n - 1 - old_q)) & 1;
            out |= b << (n - 1 - new_q);
        }
        out
    };
    let mut out = ComplexMatrix::zeros(dim, dim);
    for r in 0..dim {
        for c in 0..dim {
            out.set(map_index(r), map_index(c), m.get(r, c));
        }
    }
    Ok(out)
}

/// Bloch vector of a single-qubit density matrix.
pub fn bloch_from_density(rho: &DensityMatrix) -> Result<BlochVector> {
    if rho.qubit_count() != 1 {
        return Err(Error::Domain("Bloch vector requires a single-qubit state".into()));
    }
    Ok(bloch_from_matrix(rho.matrix()))
}

/// Bloch components `(Tr[sigma_i M])` of an arbitrary 2x2 Hermitian matrix.
pub fn bloch_from_matrix(m: &ComplexMatrix) -> BlochVector {
    let rx = (m.get(0, 1) + m.get(1, 0)).re;
    let ry = (C64::new(0.0, 1.0) * (m.get(0, 1) - m.get(1, 0))).re;
    let rz = (m.get(0, 0) - m.get(1, 1)).re;
    BlochVector::new([rx, ry, rz])
}

/// Density matrix `(1/2)(I + r . sigma)`; accepts `|r| > 1` inputs so that
/// tomography can materialize flagged unphysical reconstructions.
pub fn density_from_bloch(r: &BlochVector) -> DensityMatrix {
    DensityMatrix::new_unchecked(matrix_from_bloch(1.0, r))
}

/// `(1/2)(weight I + v . sigma)` as an explicit matrix.
pub fn matrix_from_bloch(weight: f64, v: &BlochVector) -> ComplexMatrix {
    let [x, y, z] = v.r;
    ComplexMatrix::from_rows(
        2,
        2,
        &[
            C64::new(0.5 * (weight + z), 0.0),
            C64::new(0.5 * x, -0.5 * y),
            C64::new(0.5 * x, 0.5 * y),
            C64::new(0.5 * (weight - z), 0.0),
        ],
    )
}

/// Trace norm (sum of absolute eigenvalues) of a Hermitian 2x2 matrix.
pub fn trace_norm2(m: &ComplexMatrix) -> f64 {
    let (lo, hi) = hermitian2_eigenvalues(m);
    lo.abs() + hi.abs()
}
