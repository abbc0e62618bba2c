//! Primal-dual interior-point solver specialized to the steering-weight SDP.
//!
//! Every positive-semidefinite variable is a 2x2 Hermitian block, stored in
//! Pauli coordinates: `M = (1/2)(m0 I + m . sigma) <-> [m0, m1, m2, m3]`.
//! In these coordinates the trace inner product, inverse, square root and
//! quadratic map `A -> W A W` all have closed forms, so one Newton step
//! reduces to assembling and factoring a dense Schur complement of size
//! `4 x (settings x outcomes)` — at most 192 for four ancillas.
//!
//! The solved problem is
//!
//! ```text
//! max  sum_l tr sigma_l
//! s.t. sum_l D_l(a|x) sigma_l + S_{a|x} = sigma_{a|x},   S, sigma_l >= 0
//! ```
//!
//! whose dual is the steering-functional program
//! `min sum tr(F_{a|x} sigma_{a|x})` with `F >= 0` and
//! `sum_x F_{a_l(x)|x} >= I`. The search direction uses
//! Nesterov-Todd scaling with a Mehrotra-style adaptive centering
//! parameter.

use crate::error::{Error, Result};
use crate::policy::NumericPolicy;

/// Pauli coordinates of a 2x2 Hermitian matrix `(1/2)(m0 I + m . sigma)`.
pub type Pauli4 = [f64; 4];

/// Coordinates of the 2x2 identity.
pub const IDENTITY4: Pauli4 = [2.0, 0.0, 0.0, 0.0];

pub fn vadd(a: Pauli4, b: Pauli4) -> Pauli4 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]]
}

pub fn vsub(a: Pauli4, b: Pauli4) -> Pauli4 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2], a[3] - b[3]]
}

pub fn vscale(a: Pauli4, s: f64) -> Pauli4 {
    [a[0] * s, a[1] * s, a[2] * s, a[3] * s]
}

fn dot4(a: Pauli4, b: Pauli4) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]
}

/// Trace inner product `tr(AB) = (1/2) a . b`.
pub fn inner(a: Pauli4, b: Pauli4) -> f64 {
    0.5 * dot4(a, b)
}

/// Frobenius norm `sqrt(tr(M^2))`.
pub fn fro_norm(a: Pauli4) -> f64 {
    inner(a, a).max(0.0).sqrt()
}

fn vec_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Eigenvalues `(1/2)(m0 -+ |m|)`, ascending.
pub fn eigenvalues(m: Pauli4) -> (f64, f64) {
    let n = (m[1] * m[1] + m[2] * m[2] + m[3] * m[3]).sqrt();
    (0.5 * (m[0] - n), 0.5 * (m[0] + n))
}

/// Inverse of a positive-definite block: `(m0, -m_vec) / det`.
pub fn inverse(m: Pauli4) -> Pauli4 {
    let det = 0.25 * (m[0] * m[0] - m[1] * m[1] - m[2] * m[2] - m[3] * m[3]);
    [m[0] / det, -m[1] / det, -m[2] / det, -m[3] / det]
}

/// Principal square root of a positive-semidefinite block.
pub fn sqrt(m: Pauli4) -> Pauli4 {
    let n = (m[1] * m[1] + m[2] * m[2] + m[3] * m[3]).sqrt();
    let hi = (0.5 * (m[0] + n)).max(0.0).sqrt();
    let lo = (0.5 * (m[0] - n)).max(0.0).sqrt();
    if n < 1e-300 {
        return [hi + lo, 0.0, 0.0, 0.0];
    }
    let c = (hi - lo) / n;
    [hi + lo, c * m[1], c * m[2], c * m[3]]
}

/// Quadratic map `Q_W(A) = W A W` for Hermitian `W`, `A`.
pub fn quad(w: Pauli4, a: Pauli4) -> Pauli4 {
    let ww = w[0] * w[0];
    let n2 = w[1] * w[1] + w[2] * w[2] + w[3] * w[3];
    let wa = w[1] * a[1] + w[2] * a[2] + w[3] * a[3];
    let r0 = 0.25 * (a[0] * (ww + n2) + 2.0 * w[0] * wa);
    let coeff = 0.25 * (ww - n2);
    let lift = 0.5 * (a[0] * w[0] + wa);
    [
        r0,
        coeff * a[1] + lift * w[1],
        coeff * a[2] + lift * w[2],
        coeff * a[3] + lift * w[3],
    ]
}

/// Nesterov-Todd scaling point: the unique positive `W` with `W Z W = X`.
fn nt_scaling(x: Pauli4, z: Pauli4) -> Pauli4 {
    let xs = sqrt(x);
    let middle = quad(xs, z);
    quad(xs, sqrt(inverse(middle)))
}

/// Largest `alpha` keeping `X + alpha D` positive semidefinite
/// (`f64::INFINITY` when unconstrained).
fn max_step(x: Pauli4, d: Pauli4) -> f64 {
    // X + a D >= 0 iff trace >= 0 and det >= 0. The boundary is the first
    // positive a violating either; a tangential det root (double root, e.g.
    // for blocks proportional to the identity) is caught by the trace term.
    let trace_bound = if d[0] < 0.0 { -x[0] / d[0] } else { f64::INFINITY };
    let qa = d[0] * d[0] - d[1] * d[1] - d[2] * d[2] - d[3] * d[3];
    let qb = 2.0 * (x[0] * d[0] - x[1] * d[1] - x[2] * d[2] - x[3] * d[3]);
    let qc = x[0] * x[0] - x[1] * x[1] - x[2] * x[2] - x[3] * x[3];
    let det_bound = if qa.abs() < 1e-300 {
        if qb < 0.0 {
            -qc / qb
        } else {
            f64::INFINITY
        }
    } else {
        let disc = qb * qb - 4.0 * qa * qc;
        if disc <= 0.0 {
            // qa < 0 implies disc > 0 (qc > 0 for interior X), so here the
            // determinant never becomes negative.
            f64::INFINITY
        } else {
            let s = disc.sqrt();
            // qa > 0: det is negative between the roots; the smaller one is
            // the crossing (if positive). qa < 0: det is negative beyond the
            // single positive root (-qb - s) / (2 qa).
            let r = (-qb - s) / (2.0 * qa);
            if r > 0.0 {
                r
            } else {
                f64::INFINITY
            }
        }
    };
    trace_bound.min(det_bound)
}

/// Dense symmetric positive-definite solve via Cholesky (in place).
struct Cholesky {
    n: usize,
    l: Vec<f64>,
}

impl Cholesky {
    fn factor(mut a: Vec<f64>, n: usize) -> Result<Self> {
        // Tiny relative regularization absorbs roundoff in near-degenerate
        // scalings without visibly perturbing the direction.
        for i in 0..n {
            a[i * n + i] *= 1.0 + 1e-14;
        }
        for j in 0..n {
            for k in 0..j {
                let ljk = a[j * n + k];
                for i in j..n {
                    a[i * n + j] -= a[i * n + k] * ljk;
                }
            }
            let d = a[j * n + j];
            if !(d > 0.0) {
                return Err(Error::Solver(format!(
                    "Schur complement not positive definite at pivot {j} ({d:.3e})"
                )));
            }
            let inv = 1.0 / d.sqrt();
            for i in j..n {
                a[i * n + j] *= inv;
            }
        }
        Ok(Self { n, l: a })
    }

    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y = rhs.to_vec();
        for i in 0..n {
            for k in 0..i {
                y[i] -= self.l[i * n + k] * y[k];
            }
            y[i] /= self.l[i * n + i];
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                y[i] -= self.l[k * n + i] * y[k];
            }
            y[i] /= self.l[i * n + i];
        }
        y
    }
}

/// Raw interior-point output in Pauli coordinates.
#[derive(Debug, Clone)]
pub struct RawSolution {
    /// Hidden-state blocks `sigma_lambda`, one per deterministic strategy.
    pub sigma_lambda: Vec<Pauli4>,
    /// Slack blocks `S_{a|x} = sigma_{a|x} - sum_l D_l sigma_l`.
    pub slack: Vec<Pauli4>,
    /// Dual multipliers, four per member; `F_{a|x} = 2 y_{a|x}` in Pauli
    /// coordinates.
    pub y: Vec<f64>,
    pub primal_objective: f64,
    pub dual_objective: f64,
    /// Complementarity `<X, Z>` at termination (absolute gap estimate).
    pub gap: f64,
    pub iterations: usize,
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
}

/// Solves the steering-weight SDP.
///
/// `members[j]` is `sigma_{a|x}` in Pauli coordinates for the j-th
/// (setting, outcome) pair; `strategy_members[l]` lists, per setting, the
/// member index the l-th deterministic strategy responds with.
pub fn solve_steering_sdp(
    members: &[Pauli4],
    strategy_members: &[Vec<usize>],
    policy: &NumericPolicy,
) -> Result<RawSolution> {
    let j_count = members.len();
    let l_count = strategy_members.len();
    let k_count = l_count + j_count;
    let m = 4 * j_count;
    let total_dim = 2.0 * k_count as f64;

    let mut b = vec![0.0; m];
    for (j, c) in members.iter().enumerate() {
        b[4 * j..4 * j + 4].copy_from_slice(c);
    }
    let b_norm = vec_norm(&b);
    let c_norm = (l_count as f64 * inner(IDENTITY4, IDENTITY4)).sqrt();

    // Blocks 0..l_count are sigma_lambda, then one slack per member.
    let mut x = vec![IDENTITY4; k_count];
    let mut z = vec![IDENTITY4; k_count];
    let mut y = vec![0.0; m];

    let cost = |block: usize| -> Pauli4 {
        if block < l_count {
            IDENTITY4
        } else {
            [0.0; 4]
        }
    };

    // A*(y) on one block.
    let adjoint_block = |y: &[f64], block: usize| -> Pauli4 {
        let mut acc = [0.0; 4];
        let mut add_member = |mi: usize| {
            for p in 0..4 {
                acc[p] += 2.0 * y[4 * mi + p];
            }
        };
        if block < l_count {
            for &mi in &strategy_members[block] {
                add_member(mi);
            }
        } else {
            add_member(block - l_count);
        }
        acc
    };

    let max_iterations = 200;
    let mut last = (f64::NAN, f64::NAN, f64::NAN);
    // Near-degenerate instances can become numerically singular while the
    // last digits are polished; an iterate within a small factor of the
    // target tolerances is kept as a fallback instead of failing.
    let relaxed_gap = 10.0 * policy.sdp_gap;
    let relaxed_feasibility = 100.0 * policy.sdp_feasibility;
    let mut fallback: Option<RawSolution> = None;
    for iteration in 0..max_iterations {
        // Residuals and objectives.
        let mut ax = vec![0.0; m];
        for (l, mems) in strategy_members.iter().enumerate() {
            for &mi in mems {
                for p in 0..4 {
                    ax[4 * mi + p] += x[l][p];
                }
            }
        }
        for j in 0..j_count {
            for p in 0..4 {
                ax[4 * j + p] += x[l_count + j][p];
            }
        }
        let r_p: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let r_d: Vec<Pauli4> = (0..k_count)
            .map(|bk| vadd(vsub(cost(bk), adjoint_block(&y, bk)), z[bk]))
            .collect();

        let compl: f64 = (0..k_count).map(|bk| inner(x[bk], z[bk])).sum();
        let mu = compl / total_dim;
        let pobj: f64 = (0..l_count).map(|l| x[l][0]).sum();
        let dobj: f64 = b.iter().zip(&y).map(|(bi, yi)| bi * yi).sum();

        let pinf = vec_norm(&r_p) / (1.0 + b_norm);
        let dinf = r_d.iter().map(|r| inner(*r, *r)).sum::<f64>().sqrt() / (1.0 + c_norm);
        let relgap = compl / (1.0 + pobj.abs() + dobj.abs());
        last = (pinf, dinf, relgap);
        if std::env::var_os("STEERLAB_SDP_TRACE").is_some() {
            eprintln!(
                "iter {iteration}: pobj {pobj:.10} dobj {dobj:.10} mu {mu:.3e} pinf {pinf:.3e} dinf {dinf:.3e} relgap {relgap:.3e}"
            );
        }
        if pinf <= policy.sdp_feasibility && dinf <= policy.sdp_feasibility && relgap <= policy.sdp_gap
        {
            return Ok(RawSolution {
                sigma_lambda: x[..l_count].to_vec(),
                slack: x[l_count..].to_vec(),
                y,
                primal_objective: pobj,
                dual_objective: dobj,
                gap: compl,
                iterations: iteration,
                primal_infeasibility: pinf,
                dual_infeasibility: dinf,
            });
        }
        if pinf <= relaxed_feasibility && dinf <= relaxed_feasibility && relgap <= relaxed_gap {
            fallback = Some(RawSolution {
                sigma_lambda: x[..l_count].to_vec(),
                slack: x[l_count..].to_vec(),
                y: y.clone(),
                primal_objective: pobj,
                dual_objective: dobj,
                gap: compl,
                iterations: iteration,
                primal_infeasibility: pinf,
                dual_infeasibility: dinf,
            });
        }

        // Nesterov-Todd scaling and the Schur complement M[j,k] =
        // sum_blocks <A_j, Q_W A_k>.
        let w: Vec<Pauli4> = (0..k_count).map(|bk| nt_scaling(x[bk], z[bk])).collect();
        let mut t = vec![[[0.0f64; 4]; 4]; k_count];
        for bk in 0..k_count {
            for q in 0..4 {
                let mut e = [0.0; 4];
                e[q] = 2.0;
                let img = quad(w[bk], e);
                for p in 0..4 {
                    t[bk][p][q] = img[p];
                }
            }
        }
        let mut schur = vec![0.0; m * m];
        let add_t = |schur: &mut Vec<f64>, mi: usize, mj: usize, tb: &[[f64; 4]; 4]| {
            for p in 0..4 {
                let row = (4 * mi + p) * m + 4 * mj;
                for q in 0..4 {
                    schur[row + q] += tb[p][q];
                }
            }
        };
        for (l, mems) in strategy_members.iter().enumerate() {
            for &mi in mems {
                for &mj in mems {
                    add_t(&mut schur, mi, mj, &t[l]);
                }
            }
        }
        for j in 0..j_count {
            add_t(&mut schur, j, j, &t[l_count + j]);
        }
        let chol = match Cholesky::factor(schur, m) {
            Ok(chol) => chol,
            // The Newton system can turn numerically indefinite once the
            // iterate is essentially optimal; fall back to the last iterate
            // that met the relaxed tolerance instead of failing.
            Err(e) => {
                if let Some(solution) = fallback {
                    return Ok(solution);
                }
                return Err(Error::Solver(format!(
                    "iteration {iteration}: {e} (mu {mu:.3e})"
                )));
            }
        };

        // One Newton direction for a given complementarity target R_c.
        let solve_direction = |r_c: &dyn Fn(usize) -> Pauli4| -> (Vec<Pauli4>, Vec<f64>, Vec<Pauli4>) {
            let mut rhs = vec![0.0; m];
            let accumulate = |rhs: &mut Vec<f64>, mi: usize, g: Pauli4| {
                for p in 0..4 {
                    rhs[4 * mi + p] += g[p];
                }
            };
            for bk in 0..k_count {
                let g = vadd(r_c(bk), quad(w[bk], r_d[bk]));
                if bk < l_count {
                    for &mi in &strategy_members[bk] {
                        accumulate(&mut rhs, mi, g);
                    }
                } else {
                    accumulate(&mut rhs, bk - l_count, g);
                }
            }
            for j in 0..m {
                rhs[j] -= r_p[j];
            }
            let dy = chol.solve(&rhs);
            let mut dz = Vec::with_capacity(k_count);
            let mut dx = Vec::with_capacity(k_count);
            for bk in 0..k_count {
                let dzb = vsub(adjoint_block(&dy, bk), r_d[bk]);
                dx.push(vsub(r_c(bk), quad(w[bk], dzb)));
                dz.push(dzb);
            }
            (dx, dy, dz)
        };

        // Predictor (affine direction, sigma = 0).
        let (dx_a, _, dz_a) = solve_direction(&|bk| vscale(x[bk], -1.0));
        let step_to_boundary = |v: &[Pauli4], dv: &[Pauli4]| -> f64 {
            v.iter().zip(dv).map(|(vb, db)| max_step(*vb, *db)).fold(f64::INFINITY, f64::min)
        };
        let ap_aff = step_to_boundary(&x, &dx_a).min(1.0);
        let ad_aff = step_to_boundary(&z, &dz_a).min(1.0);
        let mut compl_aff = 0.0;
        for bk in 0..k_count {
            compl_aff += inner(
                vadd(x[bk], vscale(dx_a[bk], ap_aff)),
                vadd(z[bk], vscale(dz_a[bk], ad_aff)),
            );
        }
        let sigma = ((compl_aff.max(0.0) / compl).powi(3)).clamp(0.0, 1.0);

        // Corrector with adaptive centering.
        let target = sigma * mu;
        let (dx, dy, dz) =
            solve_direction(&|bk| vsub(vscale(inverse(z[bk]), target), x[bk]));
        let tau = 0.99;
        let ap = (tau * step_to_boundary(&x, &dx)).min(1.0);
        let ad = (tau * step_to_boundary(&z, &dz)).min(1.0);
        for bk in 0..k_count {
            x[bk] = vadd(x[bk], vscale(dx[bk], ap));
            z[bk] = vadd(z[bk], vscale(dz[bk], ad));
        }
        for j in 0..m {
            y[j] += ad * dy[j];
        }
    }
    if let Some(solution) = fallback {
        return Ok(solution);
    }
    let (pinf, dinf, relgap) = last;
    Err(Error::Solver(format!(
        "no convergence in {max_iterations} iterations \
         (primal infeasibility {pinf:.3e}, dual infeasibility {dinf:.3e}, \
         relative gap {relgap:.3e})"
    )))
}
