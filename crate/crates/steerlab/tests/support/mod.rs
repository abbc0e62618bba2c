//! Shared helpers for the integration suites: a random-assemblage
//! generator and an independent first-order solver for the steering-weight
//! dual, used to cross-validate the interior-point results.
//!
//! The oracle deliberately re-implements its own Pauli algebra, strategy
//! enumeration and optimization instead of calling into the library's SDP
//! machinery.

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use steerlab::assemblage::{Assemblage, AssemblageMember};
use steerlab::qmath::ComplexMatrix;

// ---------------------------------------------------------------------------
// Random steered assemblages: sigma_{a|x} = Tr_A[(E_{a|x} (x) I) rho_AB]
// for a random two-qubit state and random Alice POVMs. These satisfy
// no-signaling exactly (up to arithmetic) by construction.

fn random_complex_matrix(rng: &mut ChaCha8Rng, dim: usize) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(dim, dim);
    for r in 0..dim {
        for c in 0..dim {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            m.set(r, c, C64::new(re, im));
        }
    }
    m
}

/// Random full-rank two-qubit density matrix: G G^dag normalized, mixed
/// with a little identity.
fn random_state(rng: &mut ChaCha8Rng) -> ComplexMatrix {
    let g = random_complex_matrix(rng, 4);
    let psd = g.mul(&g.adjoint());
    let tr = psd.trace().re;
    let rho = psd.scale(C64::new(0.95 / tr, 0.0));
    rho.add(&ComplexMatrix::identity(4).scale(C64::new(0.05 / 4.0, 0.0)))
}

/// Closed-form `S^{-1/2}` for a positive-definite 2x2 Hermitian matrix via
/// the two-point Lagrange form `f(S) = c0 I + c1 S`.
fn inverse_sqrt2(s: &ComplexMatrix) -> ComplexMatrix {
    let t = s.trace().re;
    let det = (s.get(0, 0) * s.get(1, 1) - s.get(0, 1) * s.get(1, 0)).re;
    let disc = (t * t - 4.0 * det).max(0.0).sqrt();
    let mu_hi = 0.5 * (t + disc);
    let mu_lo = 0.5 * (t - disc);
    let f = |x: f64| 1.0 / x.sqrt();
    let (c0, c1) = if disc > 1e-12 {
        (
            (mu_hi * f(mu_lo) - mu_lo * f(mu_hi)) / disc,
            (f(mu_hi) - f(mu_lo)) / disc,
        )
    } else {
        // Degenerate spectrum: first-order expansion around mu.
        let mu = 0.5 * t;
        (f(mu) + 0.5 * mu.powf(-1.5) * mu, -0.5 * mu.powf(-1.5))
    };
    ComplexMatrix::identity(2)
        .scale(C64::new(c0, 0.0))
        .add(&s.scale(C64::new(c1, 0.0)))
}

/// Random `outcomes`-element POVM on one qubit.
fn random_povm(rng: &mut ChaCha8Rng, outcomes: usize) -> Vec<ComplexMatrix> {
    let gs: Vec<ComplexMatrix> = (0..outcomes)
        .map(|_| {
            let m = random_complex_matrix(rng, 2);
            m.mul(&m.adjoint())
        })
        .collect();
    let mut sum = ComplexMatrix::zeros(2, 2);
    for g in &gs {
        sum = sum.add(g);
    }
    let w = inverse_sqrt2(&sum);
    gs.iter().map(|g| w.mul(g).mul(&w)).collect()
}

/// `Tr_A[(E (x) I) rho]` computed index-wise; Alice is the most significant
/// qubit of the 4x4 state.
fn steer(rho: &ComplexMatrix, e: &ComplexMatrix) -> ComplexMatrix {
    let mut sigma = ComplexMatrix::zeros(2, 2);
    for i in 0..2 {
        for j in 0..2 {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..2 {
                for l in 0..2 {
                    acc += e.get(k, l) * rho.get(2 * l + i, 2 * k + j);
                }
            }
            sigma.set(i, j, acc);
        }
    }
    sigma
}

/// Random valid assemblage with the given shape, deterministic in the seed.
pub fn random_assemblage(seed: u64, settings: usize, outcomes: usize) -> Assemblage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rho = random_state(&mut rng);
    let mut labels = Vec::new();
    let mut members = Vec::new();
    for x in 0..settings {
        let setting = format!("x{}", x + 1);
        labels.push(setting.clone());
        for (a, e) in random_povm(&mut rng, outcomes).iter().enumerate() {
            let sigma = steer(&rho, e);
            let p = sigma.trace().re;
            let (bx, by, bz) = if p > 1e-12 {
                (
                    2.0 * sigma.get(0, 1).re / p,
                    -2.0 * sigma.get(0, 1).im / p,
                    (sigma.get(0, 0) - sigma.get(1, 1)).re / p,
                )
            } else {
                (0.0, 0.0, 0.0)
            };
            members.push(AssemblageMember {
                setting: setting.clone(),
                outcome: format!("{a}"),
                probability: p,
                bloch: [bx, by, bz],
            });
        }
    }
    Assemblage::new(labels, members)
}

// ---------------------------------------------------------------------------
// Independent dual solver. The steering-weight dual is
//   minimize   sum_{a,x} tr(F_{a|x} sigma_{a|x})
//   subject to F_{a|x} >= 0,  sum_x F_{a_l(x)|x} >= I  for all l,
// with SW = 1 - optimum. We minimize the exact-penalty convex function
//   phi(F) = lin(F) + C max(0, 1 - h(F)),  h(F) = min_l lambda_min(A_l(F)),
// by projected subgradient over the PSD cone, and track the best feasible
// value lin(F)/h(F) (valid whenever h > 0).

/// Pauli coordinates `[w0, wx, wy, wz]` of `M = (w0 I + w . sigma)/2`.
type P4 = [f64; 4];

fn padd(a: P4, b: P4) -> P4 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]]
}

fn paxpy(a: &mut P4, s: f64, b: P4) {
    for i in 0..4 {
        a[i] += s * b[i];
    }
}

/// `tr(A B) = (a . b)/2` in this normalization.
fn ptrace_product(a: P4, b: P4) -> f64 {
    0.5 * (a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3])
}

fn pvec_norm(a: P4) -> f64 {
    (a[1] * a[1] + a[2] * a[2] + a[3] * a[3]).sqrt()
}

fn pmin_eig(a: P4) -> f64 {
    0.5 * (a[0] - pvec_norm(a))
}

/// Projector onto the eigenspace of the smaller eigenvalue.
fn pmin_projector(a: P4) -> P4 {
    let n = pvec_norm(a);
    if n < 1e-14 {
        // Degenerate: any direction works; pick a fixed one.
        return [1.0, 0.0, 0.0, -1.0];
    }
    [1.0, -a[1] / n, -a[2] / n, -a[3] / n]
}

/// Euclidean projection onto the PSD cone (eigenvalue clipping).
fn psd_project(a: P4) -> P4 {
    let n = pvec_norm(a);
    let hi = 0.5 * (a[0] + n);
    let lo = 0.5 * (a[0] - n);
    if lo >= 0.0 {
        return a;
    }
    if hi <= 0.0 {
        return [0.0; 4];
    }
    if n < 1e-14 {
        return [a[0].max(0.0), 0.0, 0.0, 0.0];
    }
    let scale = hi / n;
    [hi, a[1] * scale, a[2] * scale, a[3] * scale]
}

/// All deterministic response tables, via simple odometer counting.
fn response_tables(settings: usize, outcomes: usize) -> Vec<Vec<usize>> {
    let mut tables = Vec::new();
    let mut current = vec![0usize; settings];
    loop {
        tables.push(current.clone());
        let mut pos = settings;
        while pos > 0 {
            pos -= 1;
            current[pos] += 1;
            if current[pos] < outcomes {
                break;
            }
            current[pos] = 0;
            if pos == 0 {
                return tables;
            }
        }
    }
}

/// First-order estimate of the steering weight; deterministic.
pub fn dual_oracle_sw(asm: &Assemblage, iterations: usize) -> f64 {
    // Member grid in the same convention as the library: declared setting
    // order, outcomes sorted lexicographically.
    let mut sigmas: Vec<Vec<P4>> = Vec::new();
    for setting in &asm.settings {
        let mut ms: Vec<&AssemblageMember> = asm.members_for(setting).collect();
        ms.sort_by(|a, b| a.outcome.cmp(&b.outcome));
        sigmas.push(
            ms.iter()
                .map(|m| {
                    [
                        m.probability,
                        m.probability * m.bloch[0],
                        m.probability * m.bloch[1],
                        m.probability * m.bloch[2],
                    ]
                })
                .collect(),
        );
    }
    let settings = sigmas.len();
    let outcomes = sigmas[0].len();
    let tables = response_tables(settings, outcomes);
    let identity: P4 = [2.0, 0.0, 0.0, 0.0];

    let mut f: Vec<Vec<P4>> = vec![vec![identity; outcomes]; settings];
    let penalty = 5.0;
    let mut best = f64::INFINITY;
    for iter in 0..iterations {
        // h(F) and the active strategy.
        let mut h = f64::INFINITY;
        let mut active = 0usize;
        for (l, table) in tables.iter().enumerate() {
            let mut a = [0.0; 4];
            for (x, &out) in table.iter().enumerate() {
                a = padd(a, f[x][out]);
            }
            let eig = pmin_eig(a);
            if eig < h {
                h = eig;
                active = l;
            }
        }
        let lin: f64 = (0..settings)
            .map(|x| {
                (0..outcomes)
                    .map(|a| ptrace_product(f[x][a], sigmas[x][a]))
                    .sum::<f64>()
            })
            .sum();
        if h > 1e-9 {
            best = best.min(lin / h);
        }

        // Subgradient of the penalized objective.
        let mut grad: Vec<Vec<P4>> = vec![vec![[0.0; 4]; outcomes]; settings];
        for x in 0..settings {
            for a in 0..outcomes {
                grad[x][a] = sigmas[x][a];
            }
        }
        if h < 1.0 {
            let mut a_active = [0.0; 4];
            for (x, &out) in tables[active].iter().enumerate() {
                a_active = padd(a_active, f[x][out]);
            }
            let proj = pmin_projector(a_active);
            for (x, &out) in tables[active].iter().enumerate() {
                paxpy(&mut grad[x][out], -penalty, proj);
            }
        }
        let step = 2.0 / (iter as f64 + 1.0).sqrt();
        for x in 0..settings {
            for a in 0..outcomes {
                paxpy(&mut f[x][a], -step, grad[x][a]);
                f[x][a] = psd_project(f[x][a]);
            }
        }
    }
    (1.0 - best).clamp(0.0, 1.0)
}
