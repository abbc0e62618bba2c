//! Finite-shot emulation of the collision-model experiment.
//!
//! Sampling draws exact multinomial counts from the final outcome
//! distribution of the (possibly noisy) circuit rather than simulating
//! individual shots: the statistics are identical and the cost is
//! independent of the shot number. Noise enters in three places — a
//! two-qubit depolarizing channel after each CNOT (with optional extra
//! locations emulating SWAP overhead), asymmetric per-qubit readout flips
//! on the classical outcomes, and optional white noise on the final joint
//! state. Measurement rotations themselves are noiseless, so the noisy
//! joint state is independent of the measurement strategy.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assemblage::{ideal_assemblage, outcome_bits, MeasurementStrategy};
use crate::collision::{collision_unitary, CollisionConfig};
use crate::error::{Error, Result};
use crate::qmath::{
    direction_projector, embed_two_qubit, kron, partial_trace, permute_qubits, ComplexMatrix,
    DensityMatrix,
};

/// Shots per circuit used in the reference data sets for N = 1..4
/// (repetitions x 8 circuits x 8192 shots).
pub const DEFAULT_SHOTS: [u64; 4] = [655_360, 1_048_576, 1_966_080, 3_932_160];

/// Asymmetric classical readout-error probabilities for one qubit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReadoutFlip {
    /// P(read 1 | true 0).
    pub zero_to_one: f64,
    /// P(read 0 | true 1).
    pub one_to_zero: f64,
}

impl ReadoutFlip {
    pub const NONE: ReadoutFlip = ReadoutFlip { zero_to_one: 0.0, one_to_zero: 0.0 };
}

/// Noise configuration for sampled runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseModel {
    /// Two-qubit depolarizing probability applied after every CNOT.
    pub two_qubit_depolarizing: f64,
    /// Collision indices (1-based) that incur one extra depolarizing
    /// application, emulating routing SWAPs on constrained topologies.
    pub swap_depolarizing: Vec<usize>,
    /// Readout flips: empty for none, a single entry applied to every
    /// qubit, or one entry per qubit (system first).
    pub readout_flip: Vec<ReadoutFlip>,
    /// White-noise weight mixed into the final joint state.
    pub white_noise: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self::ideal()
    }
}

impl NoiseModel {
    pub fn ideal() -> Self {
        Self {
            two_qubit_depolarizing: 0.0,
            swap_depolarizing: Vec::new(),
            readout_flip: Vec::new(),
            white_noise: 0.0,
        }
    }

    pub fn validate(&self, qubits: usize) -> Result<()> {
        let check = |name: &str, p: f64| -> Result<()> {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Domain(format!("{name} = {p} outside [0, 1]")));
            }
            Ok(())
        };
        check("two_qubit_depolarizing", self.two_qubit_depolarizing)?;
        check("white_noise", self.white_noise)?;
        for f in &self.readout_flip {
            check("readout zero_to_one", f.zero_to_one)?;
            check("readout one_to_zero", f.one_to_zero)?;
        }
        if !matches!(self.readout_flip.len(), 0 | 1) && self.readout_flip.len() != qubits {
            return Err(Error::Domain(format!(
                "readout_flip has {} entries; expected 0, 1, or {qubits}",
                self.readout_flip.len()
            )));
        }
        for &k in &self.swap_depolarizing {
            if k == 0 || k >= qubits {
                return Err(Error::Domain(format!(
                    "swap_depolarizing collision index {k} outside 1..={}",
                    qubits - 1
                )));
            }
        }
        Ok(())
    }

    fn flips(&self, qubits: usize) -> Vec<ReadoutFlip> {
        match self.readout_flip.len() {
            0 => vec![ReadoutFlip::NONE; qubits],
            1 => vec![self.readout_flip[0]; qubits],
            _ => self.readout_flip.clone(),
        }
    }
}

/// Two-qubit depolarizing channel on qubits `(q0, q1)` of an n-qubit state:
/// with probability `p` the pair is replaced by the maximally mixed state.
fn depolarize_pair(state: &DensityMatrix, q0: usize, q1: usize, p: f64) -> Result<DensityMatrix> {
    if p == 0.0 {
        return Ok(state.clone());
    }
    let n = state.qubit_count();
    let keep: Vec<usize> = (0..n).filter(|&q| q != q0 && q != q1).collect();
    if keep.is_empty() {
        return Ok(state.mix(&DensityMatrix::maximally_mixed(2), p));
    }
    let reduced = partial_trace(state, &keep)?;
    // Tensor order after the product: kept qubits (ascending), then q0, q1.
    let mixed_pair = ComplexMatrix::identity(4).scale(num_complex::Complex64::new(0.25, 0.0));
    let product = kron(reduced.matrix(), &mixed_pair);
    let mut current = keep.clone();
    current.push(q0);
    current.push(q1);
    let mut perm = vec![0usize; n];
    for (pos, &orig) in current.iter().enumerate() {
        perm[orig] = pos;
    }
    let restored = permute_qubits(&product, &perm)?;
    let mixed = DensityMatrix::new_unchecked(restored);
    Ok(state.mix(&mixed, p))
}

/// Joint state after all collisions with mid-circuit depolarizing noise and
/// final white noise. With an ideal noise model this equals
/// `collision::evolve_joint` from the ground state.
pub fn noisy_joint_state(config: &CollisionConfig, noise: &NoiseModel) -> Result<DensityMatrix> {
    let n = config.collisions();
    let qubits = n + 1;
    noise.validate(qubits)?;
    let mut joint = DensityMatrix::ground_state(qubits);
    let w = collision_unitary(config.coupling())?;
    for i in 1..=n {
        let full = embed_two_qubit(&w, 0, i, qubits)?;
        joint = joint.conjugate(&full);
        joint = depolarize_pair(&joint, 0, i, noise.two_qubit_depolarizing)?;
        if noise.swap_depolarizing.contains(&i) {
            joint = depolarize_pair(&joint, 0, i, noise.two_qubit_depolarizing)?;
        }
    }
    if noise.white_noise > 0.0 {
        joint = joint.mix(&DensityMatrix::maximally_mixed(qubits), noise.white_noise);
    }
    Ok(joint)
}

/// Bloch direction of Bob's tomography setting `i` (1: x, 2: y, 3: z);
/// outcome "0" projects onto the +1 eigenspace.
pub fn bob_direction(setting: usize) -> Result<[f64; 3]> {
    match setting {
        1 => Ok([1.0, 0.0, 0.0]),
        2 => Ok([0.0, 1.0, 0.0]),
        3 => Ok([0.0, 0.0, 1.0]),
        other => Err(Error::Input(format!("Bob setting {other} outside 1..=3"))),
    }
}

/// Exact outcome distribution over joint indices. The system (Bob) qubit is
/// the most significant bit; ancilla bits follow with ancilla 1 first.
fn outcome_distribution(
    joint: &DensityMatrix,
    strategy: &MeasurementStrategy,
    bob_setting: usize,
) -> Result<Vec<f64>> {
    let qubits = joint.qubit_count();
    let ancillas = qubits - 1;
    if strategy.ancilla_count() != ancillas {
        return Err(Error::Domain(format!(
            "strategy '{}' has {} directions but the state has {ancillas} ancillas",
            strategy.label,
            strategy.ancilla_count()
        )));
    }
    let bob = bob_direction(bob_setting)?;
    let dim = 1usize << qubits;
    let mut probs = vec![0.0; dim];
    for (index, slot) in probs.iter_mut().enumerate() {
        let b = index >> ancillas;
        let a = outcome_bits(index & ((1 << ancillas) - 1), ancillas);
        let bob_proj = direction_projector(bob, if b == 0 { 1.0 } else { -1.0 });
        let full = kron(&bob_proj, &strategy.povm_element(&a)?);
        let mut p = 0.0;
        for r in 0..dim {
            for c in 0..dim {
                p += (joint.matrix().get(r, c) * full.get(c, r)).re;
            }
        }
        *slot = p.max(0.0);
    }
    let total: f64 = probs.iter().sum();
    for p in &mut probs {
        *p /= total;
    }
    Ok(probs)
}

/// Applies per-qubit classical readout flips to an outcome distribution
/// (index convention as in `outcome_distribution`).
fn apply_readout_flips(probs: &mut [f64], flips: &[ReadoutFlip]) {
    let n = flips.len();
    for (q, f) in flips.iter().enumerate() {
        if f.zero_to_one == 0.0 && f.one_to_zero == 0.0 {
            continue;
        }
        let mask = 1usize << (n - 1 - q);
        for i0 in 0..probs.len() {
            if i0 & mask != 0 {
                continue;
            }
            let i1 = i0 | mask;
            let (p0, p1) = (probs[i0], probs[i1]);
            probs[i0] = p0 * (1.0 - f.zero_to_one) + p1 * f.one_to_zero;
            probs[i1] = p0 * f.zero_to_one + p1 * (1.0 - f.one_to_zero);
        }
    }
}

/// Deterministic per-task stream id so parallel and serial sampling agree:
/// FNV-1a over the strategy label, mixed with the Bob setting.
fn task_stream(label: &str, bob_setting: usize) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h ^= bob_setting as u64;
    h.wrapping_mul(0x0000_0100_0000_01b3)
}

/// Multinomial draw by sequential binomial splitting.
fn multinomial_draw(rng: &mut ChaCha8Rng, shots: u64, probs: &[f64]) -> Vec<u64> {
    let mut out = vec![0u64; probs.len()];
    let mut remaining = shots;
    let mut mass: f64 = probs.iter().sum();
    for (k, &p) in probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if k + 1 == probs.len() || mass <= p {
            out[k] = remaining;
            break;
        }
        let ratio = (p / mass).clamp(0.0, 1.0);
        let draw = Binomial::new(remaining, ratio).expect("ratio in [0,1]").sample(rng);
        out[k] = draw;
        remaining -= draw;
        mass -= p;
    }
    out
}

/// Finite-shot count table for one (strategy, Bob setting) circuit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountsRecord {
    #[serde(rename = "x")]
    pub strategy: String,
    pub bob_setting: usize,
    pub shots: u64,
    /// Keys are "<Alice bits>|<Bob bit>", ancilla 1 leftmost.
    pub counts: BTreeMap<String, u64>,
    /// Unknown fields from ingested files, preserved for forward
    /// compatibility.
    #[serde(flatten, default, skip_serializing_if = "serde_json::Map::is_empty")]
    pub extra: serde_json::Map<String, serde_json::Value>,
}

impl CountsRecord {
    pub fn ancilla_count(&self) -> Result<usize> {
        let key = self
            .counts
            .keys()
            .next()
            .ok_or_else(|| Error::Input("counts table is empty".into()))?;
        key.find('|')
            .ok_or_else(|| Error::Input(format!("malformed counts key '{key}'")))
    }

    /// Checks key format, internal consistency and the shot-sum invariant.
    pub fn validate(&self) -> Result<()> {
        let ancillas = self.ancilla_count()?;
        let mut total = 0u64;
        for (key, &c) in &self.counts {
            let ok = key.len() == ancillas + 2
                && key.as_bytes()[ancillas] == b'|'
                && key.bytes().enumerate().all(|(i, b)| i == ancillas || b == b'0' || b == b'1');
            if !ok {
                return Err(Error::Input(format!(
                    "record {}/{}: malformed counts key '{key}'",
                    self.strategy, self.bob_setting
                )));
            }
            total += c;
        }
        if total != self.shots {
            return Err(Error::Input(format!(
                "record {}/{}: counts sum to {total} but shots = {}",
                self.strategy, self.bob_setting, self.shots
            )));
        }
        if !(1..=3).contains(&self.bob_setting) {
            return Err(Error::Input(format!(
                "record {}: bob_setting {} outside 1..=3",
                self.strategy, self.bob_setting
            )));
        }
        Ok(())
    }
}

fn joint_key(index: usize, ancillas: usize) -> String {
    let b = index >> ancillas;
    let a = outcome_bits(index & ((1 << ancillas) - 1), ancillas);
    format!("{a}|{b}")
}

fn sample_from_joint(
    joint: &DensityMatrix,
    strategy: &MeasurementStrategy,
    bob_setting: usize,
    noise: &NoiseModel,
    shots: u64,
    seed: u64,
) -> Result<CountsRecord> {
    if shots == 0 {
        return Err(Error::Input("shot count must be at least 1".into()));
    }
    let qubits = joint.qubit_count();
    let ancillas = qubits - 1;
    let mut probs = outcome_distribution(joint, strategy, bob_setting)?;
    apply_readout_flips(&mut probs, &noise.flips(qubits));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(task_stream(&strategy.label, bob_setting));
    let draw = multinomial_draw(&mut rng, shots, &probs);
    let counts = draw
        .into_iter()
        .enumerate()
        .map(|(i, c)| (joint_key(i, ancillas), c))
        .collect();
    Ok(CountsRecord {
        strategy: strategy.label.clone(),
        bob_setting,
        shots,
        counts,
        extra: serde_json::Map::new(),
    })
}

/// Samples one circuit: Alice's strategy with Bob's tomography setting.
/// Reproducible for a fixed seed; the random stream is derived per
/// (strategy, setting), so records are independent of sampling order.
pub fn sample_counts(
    config: &CollisionConfig,
    strategy: &MeasurementStrategy,
    bob_setting: usize,
    noise: &NoiseModel,
    shots: u64,
    seed: u64,
) -> Result<CountsRecord> {
    let joint = noisy_joint_state(config, noise)?;
    sample_from_joint(&joint, strategy, bob_setting, noise, shots, seed)
}

/// Samples all (strategy, Bob setting) circuits in parallel. Results are
/// identical to sequential `sample_counts` calls with the same seed.
pub fn sample_all(
    config: &CollisionConfig,
    strategies: &[MeasurementStrategy],
    noise: &NoiseModel,
    shots: u64,
    seed: u64,
) -> Result<Vec<CountsRecord>> {
    let joint = noisy_joint_state(config, noise)?;
    let tasks: Vec<(usize, usize)> = (0..strategies.len())
        .flat_map(|s| (1..=3).map(move |i| (s, i)))
        .collect();
    tasks
        .par_iter()
        .map(|&(s, i)| sample_from_joint(&joint, &strategies[s], i, noise, shots, seed))
        .collect()
}

/// How Alice's outcome marginal `p(a|x)` is formed from the three
/// Bob-setting records of a strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PoolingMode {
    /// Pool counts across Bob settings: `sum_i c_i(a) / sum_i S_i`.
    #[default]
    Pooled,
    /// Average the per-setting marginals `c_i(a) / S_i`.
    PerSetting,
}

/// Probability estimates for one Alice outcome bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinEstimate {
    pub outcome: String,
    /// Estimated `p(a|x)`.
    pub probability: f64,
    /// Estimated `p_i(0 | a, x)` per Bob setting; `None` marks an empty bin.
    pub bob_zero: [Option<f64>; 3],
}

/// Estimates for all outcome bins of one strategy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyEstimates {
    pub setting: String,
    pub bins: Vec<BinEstimate>,
}

/// Probability estimates grouped by strategy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimates {
    pub strategies: Vec<StrategyEstimates>,
}

/// Normalizes count records into probability estimates. Each strategy must
/// contribute exactly one record per Bob setting 1..=3.
pub fn estimate_probabilities(records: &[CountsRecord], mode: PoolingMode) -> Result<Estimates> {
    let mut order: Vec<String> = Vec::new();
    for r in records {
        r.validate()?;
        if !order.contains(&r.strategy) {
            order.push(r.strategy.clone());
        }
    }
    let mut strategies = Vec::new();
    for label in order {
        let mut per_setting: [Option<&CountsRecord>; 3] = [None; 3];
        for r in records.iter().filter(|r| r.strategy == label) {
            let slot = &mut per_setting[r.bob_setting - 1];
            if slot.is_some() {
                return Err(Error::Input(format!(
                    "strategy {label}: duplicate record for Bob setting {}",
                    r.bob_setting
                )));
            }
            *slot = Some(r);
        }
        let recs: Vec<&CountsRecord> = per_setting
            .iter()
            .enumerate()
            .map(|(i, r)| {
                r.ok_or_else(|| {
                    Error::Input(format!("strategy {label}: missing Bob setting {}", i + 1))
                })
            })
            .collect::<Result<_>>()?;
        let ancillas = recs[0].ancilla_count()?;
        let mut bins = Vec::with_capacity(1 << ancillas);
        for a_index in 0..(1usize << ancillas) {
            let a = outcome_bits(a_index, ancillas);
            let mut bin_counts = [0u64; 3];
            let mut zero_counts = [0u64; 3];
            for (i, r) in recs.iter().enumerate() {
                let c0 = r.counts.get(&format!("{a}|0")).copied().unwrap_or(0);
                let c1 = r.counts.get(&format!("{a}|1")).copied().unwrap_or(0);
                bin_counts[i] = c0 + c1;
                zero_counts[i] = c0;
            }
            let probability = match mode {
                PoolingMode::Pooled => {
                    let total: u64 = recs.iter().map(|r| r.shots).sum();
                    bin_counts.iter().sum::<u64>() as f64 / total as f64
                }
                PoolingMode::PerSetting => {
                    recs.iter()
                        .zip(&bin_counts)
                        .map(|(r, &c)| c as f64 / r.shots as f64)
                        .sum::<f64>()
                        / 3.0
                }
            };
            let mut bob_zero = [None; 3];
            for i in 0..3 {
                if bin_counts[i] > 0 {
                    bob_zero[i] = Some(zero_counts[i] as f64 / bin_counts[i] as f64);
                }
            }
            bins.push(BinEstimate { outcome: a, probability, bob_zero });
        }
        strategies.push(StrategyEstimates { setting: label, bins });
    }
    Ok(Estimates { strategies })
}

/// Exact (infinite-shot) estimates from a joint state via the Born rule,
/// with ideal Pauli tomography on Bob's side.
pub fn exact_estimates(
    joint: &DensityMatrix,
    strategies: &[MeasurementStrategy],
) -> Result<Estimates> {
    let asm = ideal_assemblage(joint, strategies)?;
    let out = asm
        .settings
        .iter()
        .map(|s| StrategyEstimates {
            setting: s.clone(),
            bins: asm
                .members_for(s)
                .map(|m| BinEstimate {
                    outcome: m.outcome.clone(),
                    probability: m.probability,
                    bob_zero: if m.is_zero() {
                        [None; 3]
                    } else {
                        [
                            Some(0.5 * (1.0 + m.bloch[0])),
                            Some(0.5 * (1.0 + m.bloch[1])),
                            Some(0.5 * (1.0 + m.bloch[2])),
                        ]
                    },
                })
                .collect(),
        })
        .collect();
    Ok(Estimates { strategies: out })
}

/// Experiment identification stored alongside counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentMeta {
    #[serde(rename = "N")]
    pub collisions: usize,
    #[serde(rename = "T")]
    pub total_time: f64,
}

/// On-disk counts document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountsFile {
    pub experiment: ExperimentMeta,
    pub records: Vec<CountsRecord>,
    #[serde(flatten, default, skip_serializing_if = "serde_json::Map::is_empty")]
    pub extra: serde_json::Map<String, serde_json::Value>,
}

pub fn write_counts(file: &CountsFile, path: &std::path::Path) -> Result<()> {
    for r in &file.records {
        r.validate()?;
    }
    let json = serde_json::to_string_pretty(file)?;
    std::fs::write(path, json + "\n")?;
    Ok(())
}

/// Reads and validates a counts document. Unknown fields are preserved and
/// reported on stderr rather than rejected.
pub fn read_counts(path: &std::path::Path) -> Result<CountsFile> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Input(format!("cannot read {}: {e}", path.display())))?;
    let file: CountsFile = serde_json::from_str(&text)
        .map_err(|e| Error::Input(format!("malformed counts file {}: {e}", path.display())))?;
    for (i, r) in file.records.iter().enumerate() {
        r.validate().map_err(|e| Error::Input(format!("{}: record {i}: {e}", path.display())))?;
        for key in r.extra.keys() {
            eprintln!(
                "warning: {}: record {i} has unknown field '{key}' (ignored)",
                path.display()
            );
        }
    }
    for key in file.extra.keys() {
        eprintln!("warning: {}: unknown top-level field '{key}' (ignored)", path.display());
    }
    Ok(file)
}
