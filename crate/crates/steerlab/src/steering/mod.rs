//! Steering quantification: the steering-weight SDP with primal
//! decomposition and dual certificate.
//!
//! The steering weight of an assemblage `{sigma_{a|x}}` is the minimal `p`
//! such that `sigma_{a|x} = p gamma_{a|x} + (1 - p) sigma^LHS_{a|x}` with
//! an unsteerable (local-hidden-state) component. Since settings and
//! outcomes are finite, every hidden-variable response function is a convex
//! mixture of deterministic ones, so the LHS set is the convex hull of
//! finitely many deterministic strategies and the problem is a
//! semidefinite program.

pub mod sdp;

use serde::{Deserialize, Serialize};

use crate::assemblage::{Assemblage, AssemblageMember};
use crate::error::{Error, Result};
use crate::policy::NumericPolicy;
use sdp::{
    eigenvalues, fro_norm, inner, solve_steering_sdp, vadd, vscale, vsub, Pauli4, IDENTITY4,
};

/// Enumeration budget for deterministic strategies.
pub const MAX_DETERMINISTIC_STRATEGIES: usize = 10_000;

/// All deterministic response functions, lexicographically ordered: entry
/// `l` maps setting `x` to the outcome index `table[l][x]`.
pub fn enumerate_deterministic_strategies(
    num_settings: usize,
    outcomes_per_setting: usize,
) -> Result<Vec<Vec<usize>>> {
    if num_settings == 0 || outcomes_per_setting == 0 {
        return Err(Error::Domain("settings and outcomes must be positive".into()));
    }
    let count = outcomes_per_setting
        .checked_pow(num_settings as u32)
        .filter(|&c| c <= MAX_DETERMINISTIC_STRATEGIES)
        .ok_or_else(|| {
            Error::Resource(format!(
                "{outcomes_per_setting}^{num_settings} deterministic strategies exceed \
                 the budget of {MAX_DETERMINISTIC_STRATEGIES}"
            ))
        })?;
    let mut table = Vec::with_capacity(count);
    for l in 0..count {
        let mut row = vec![0usize; num_settings];
        let mut rest = l;
        for x in (0..num_settings).rev() {
            row[x] = rest % outcomes_per_setting;
            rest /= outcomes_per_setting;
        }
        table.push(row);
    }
    Ok(table)
}

/// Discrete local-hidden-state model: deterministic response table plus one
/// subnormalized hidden state per strategy (weight = trace).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LhsModel {
    pub strategies: Vec<Vec<usize>>,
    /// `sigma_lambda` in Pauli coordinates.
    pub hidden_states: Vec<Pauli4>,
}

/// A labelled 2x2 Hermitian operator in Pauli coordinates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OperatorEntry {
    pub setting: String,
    pub outcome: String,
    pub pauli: Pauli4,
}

/// Complete output of a steering-weight solve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SdpSolution {
    /// `SW`, clamped to `[0, 1]`.
    pub steering_weight: f64,
    /// Mixing weight `p` of the steerable component (equals `SW`).
    pub mixing_weight: f64,
    pub primal_objective: f64,
    pub dual_objective: f64,
    /// `|primal - dual|`.
    pub gap: f64,
    pub iterations: usize,
    pub no_signaling_defect: f64,
    pub no_signaling_warning: bool,
    /// Largest `epsilon I` lift applied to scrub negative input dust.
    pub lift_applied: f64,
    /// The (possibly lifted) inputs `sigma_{a|x}` the solver actually saw.
    pub members: Vec<OperatorEntry>,
    pub lhs: LhsModel,
    /// Normalized steerable component `gamma_{a|x}` (zero when `p ~ 0`).
    pub gamma: Vec<OperatorEntry>,
    /// Subnormalized unsteerable component `sigma^LHS_{a|x}` with per-
    /// setting trace `1 - p`.
    pub lhs_assemblage: Vec<OperatorEntry>,
    /// Dual steering functional `F_{a|x}`.
    pub dual_functional: Vec<OperatorEntry>,
}

fn member_pauli(m: &AssemblageMember) -> Pauli4 {
    [
        m.probability,
        m.probability * m.bloch[0],
        m.probability * m.bloch[1],
        m.probability * m.bloch[2],
    ]
}

/// Computes the steering weight of an assemblage.
///
/// Inputs with tiny negative member eigenvalues (within `policy.member_lift`)
/// are lifted by `epsilon I`; anything worse is a domain error. A
/// no-signaling defect above `policy.no_signaling_gate` refuses the solve;
/// above `policy.no_signaling_warn` it is flagged in the solution.
pub fn steering_weight(asm: &Assemblage, policy: &NumericPolicy) -> Result<SdpSolution> {
    let defect = asm.no_signaling_defect();
    if defect > policy.no_signaling_gate {
        return Err(Error::Input(format!(
            "no-signaling defect {defect:.3e} exceeds the gate {:.3e}",
            policy.no_signaling_gate
        )));
    }
    // Recorded in the solution; surfaced to users by the CLI layer.
    let warning = defect > policy.no_signaling_warn;

    // Fix the member grid: settings in declared order, outcomes sorted.
    let mut grid: Vec<(String, Vec<&AssemblageMember>)> = Vec::new();
    for setting in &asm.settings {
        let mut ms: Vec<&AssemblageMember> = asm.members_for(setting).collect();
        ms.sort_by(|a, b| a.outcome.cmp(&b.outcome));
        grid.push((setting.clone(), ms));
    }
    let outcomes = grid.first().map(|(_, ms)| ms.len()).unwrap_or(0);
    if outcomes == 0 || grid.iter().any(|(_, ms)| ms.len() != outcomes) {
        return Err(Error::Domain(
            "every setting must contribute the same nonzero number of outcomes".into(),
        ));
    }

    let mut members = Vec::with_capacity(grid.len() * outcomes);
    let mut labels = Vec::with_capacity(members.capacity());
    let mut lift_applied: f64 = 0.0;
    for (setting, ms) in &grid {
        for m in ms {
            let mut c = member_pauli(m);
            let (lo, _) = eigenvalues(c);
            if lo < -policy.member_lift {
                return Err(Error::Domain(format!(
                    "member ({setting}, {}) has eigenvalue {lo:.3e} below the \
                     lift tolerance -{:.1e}",
                    m.outcome, policy.member_lift
                )));
            }
            if lo < 0.0 {
                let eps = -lo;
                c[0] += 2.0 * eps;
                lift_applied = lift_applied.max(eps);
            }
            members.push(c);
            labels.push((setting.clone(), m.outcome.clone()));
        }
    }
    if lift_applied > 0.0 {
        // Restore per-setting normalization after the lift; the adjustment
        // is reported through `lift_applied`.
        for (xi, (_, ms)) in grid.iter().enumerate() {
            let orig: f64 = ms.iter().map(|m| m.probability).sum();
            let lifted: f64 = (0..outcomes).map(|a| members[xi * outcomes + a][0]).sum();
            if lifted > 0.0 {
                let scale = orig / lifted;
                for a in 0..outcomes {
                    members[xi * outcomes + a] = vscale(members[xi * outcomes + a], scale);
                }
            }
        }
    }

    let strategies = enumerate_deterministic_strategies(grid.len(), outcomes)?;
    let strategy_members: Vec<Vec<usize>> = strategies
        .iter()
        .map(|row| row.iter().enumerate().map(|(x, &a)| x * outcomes + a).collect())
        .collect();

    let raw = solve_steering_sdp(&members, &strategy_members, policy)?;

    let sw = (1.0 - raw.primal_objective).clamp(0.0, 1.0);
    let entry = |j: usize, pauli: Pauli4| OperatorEntry {
        setting: labels[j].0.clone(),
        outcome: labels[j].1.clone(),
        pauli,
    };
    let mut lhs_assemblage = Vec::with_capacity(members.len());
    for (j, _) in members.iter().enumerate() {
        let mut acc = [0.0; 4];
        for (l, mems) in strategy_members.iter().enumerate() {
            if mems.contains(&j) {
                acc = vadd(acc, raw.sigma_lambda[l]);
            }
        }
        lhs_assemblage.push(entry(j, acc));
    }
    let gamma: Vec<OperatorEntry> = members
        .iter()
        .enumerate()
        .map(|(j, &c)| {
            let pauli = if sw > 1e-9 {
                vscale(vsub(c, lhs_assemblage[j].pauli), 1.0 / sw)
            } else {
                [0.0; 4]
            };
            entry(j, pauli)
        })
        .collect();
    let dual_functional: Vec<OperatorEntry> = (0..members.len())
        .map(|j| {
            let y = &raw.y[4 * j..4 * j + 4];
            entry(j, [2.0 * y[0], 2.0 * y[1], 2.0 * y[2], 2.0 * y[3]])
        })
        .collect();

    Ok(SdpSolution {
        steering_weight: sw,
        mixing_weight: sw,
        primal_objective: raw.primal_objective,
        dual_objective: raw.dual_objective,
        gap: (raw.primal_objective - raw.dual_objective).abs(),
        iterations: raw.iterations,
        no_signaling_defect: defect,
        no_signaling_warning: warning,
        lift_applied,
        members: members.iter().enumerate().map(|(j, &c)| entry(j, c)).collect(),
        lhs: LhsModel { strategies, hidden_states: raw.sigma_lambda },
        gamma,
        lhs_assemblage,
        dual_functional,
    })
}

/// Margins reported by `dual_certificate_check`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertificateReport {
    pub pass: bool,
    /// Smallest eigenvalue over all `F_{a|x}` (must be >= -tolerance).
    pub functional_positivity: f64,
    /// Smallest eigenvalue of `sum_x F_{a_l(x)|x} - I` over strategies.
    pub normalization_margin: f64,
    /// Dual value `sum tr(F_{a|x} sigma_{a|x})` recomputed from scratch.
    pub dual_value: f64,
    /// `|primal - recomputed dual|`.
    pub gap: f64,
}

/// Independently re-verifies the dual certificate of a solve: positivity of
/// the functional, the 1-normalization over deterministic strategies, and
/// agreement of the recomputed dual value with the primal optimum.
pub fn dual_certificate_check(solution: &SdpSolution, policy: &NumericPolicy) -> CertificateReport {
    let outcomes = solution
        .lhs
        .strategies
        .iter()
        .flat_map(|row| row.iter().map(|&a| a + 1))
        .max()
        .unwrap_or(1);
    let mut functional_positivity = f64::INFINITY;
    for f in &solution.dual_functional {
        functional_positivity = functional_positivity.min(eigenvalues(f.pauli).0);
    }
    let mut normalization_margin = f64::INFINITY;
    for row in &solution.lhs.strategies {
        let mut sum = [0.0; 4];
        for (x, &a) in row.iter().enumerate() {
            sum = vadd(sum, solution.dual_functional[x * outcomes + a].pauli);
        }
        normalization_margin = normalization_margin.min(eigenvalues(vsub(sum, IDENTITY4)).0);
    }
    let dual_value: f64 = solution
        .members
        .iter()
        .zip(&solution.dual_functional)
        .map(|(m, f)| inner(m.pauli, f.pauli))
        .sum();
    let gap = (solution.primal_objective - dual_value).abs();
    let feas_tol = 1e-9;
    let pass = functional_positivity >= -feas_tol
        && normalization_margin >= -feas_tol
        && gap <= policy.certificate_gap;
    CertificateReport { pass, functional_positivity, normalization_margin, dual_value, gap }
}

/// Elementwise residual of the primal decomposition
/// `sigma = p gamma + sigma^LHS` (with `gamma` normalized and `sigma^LHS`
/// subnormalized).
pub fn decomposition_residual(solution: &SdpSolution) -> f64 {
    let mut worst: f64 = 0.0;
    for ((m, g), l) in solution
        .members
        .iter()
        .zip(&solution.gamma)
        .zip(&solution.lhs_assemblage)
    {
        let rebuilt = vadd(vscale(g.pauli, solution.mixing_weight), l.pauli);
        worst = worst.max(fro_norm(vsub(m.pauli, rebuilt)));
    }
    worst
}
