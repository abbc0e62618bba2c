//! Command-line pipeline: simulate → sample → tomo → sw → lb →
//! find-strategy → plot, with file-based handoffs.
//!
//! Every stage is pure given its inputs and seed: outputs carry no
//! timestamps, so two runs with the same configuration produce
//! byte-identical files. Reports embed the resolved configuration and the
//! crate version for provenance.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::assemblage::{builtin_strategies, AssemblageFile};
use crate::collision::{evolve_joint, stroboscopic_trajectory, CollisionConfig};
use crate::counts::{
    estimate_probabilities, read_counts, sample_all, write_counts, CountsFile, ExperimentMeta,
    NoiseModel, PoolingMode, DEFAULT_SHOTS,
};
use crate::error::{Error, Result};
use crate::policy::NumericPolicy;
use crate::qmath::DensityMatrix;
use crate::search::{find_third_strategy, lower_bound, LbMode, SearchOptions};
use crate::steering::{dual_certificate_check, steering_weight};
use crate::tomography::{reconstruct_assemblage, TomographySet};

/// Optimal third-strategy polar angles `theta_N` for N = 1..4 at T = 2.
pub const THETA_TABLE: [f64; 4] = [1.570, 0.748, 0.456, 0.334];

/// Top-level run configuration (JSON, unknown keys rejected).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: ExperimentMeta,
    /// Third-strategy polar angle; defaults to the table value for N.
    #[serde(default)]
    pub theta_n: Option<f64>,
    #[serde(default)]
    pub noise: NoiseModel,
    /// Shots per circuit; defaults to the reference schedule for N.
    #[serde(default)]
    pub shots: Option<u64>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// White-noise regularization used by `find-strategy`.
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default)]
    pub search: SearchConfig,
    #[serde(default)]
    pub tolerances: ToleranceConfig,
}

fn default_seed() -> u64 {
    7
}

fn default_lambda() -> f64 {
    0.05
}

/// Outer-search knobs; anything unset falls back to library defaults.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchConfig {
    pub restarts: Option<usize>,
    /// Unset: multi-start for N <= 2, single gradient descent otherwise
    /// (bounding the number of SDP solves for the larger registers).
    pub multi_start: Option<bool>,
    pub max_evaluations: Option<usize>,
    pub validity_tolerance: Option<f64>,
}

/// Overrides of the numeric tolerance policy.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToleranceConfig {
    pub sdp_gap: Option<f64>,
    pub certificate_gap: Option<f64>,
    pub tomography_validity: Option<f64>,
    pub member_lift: Option<f64>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Input(format!("cannot read config {}: {e}", path.display())))?;
        let config: RunConfig = serde_json::from_str(&text).map_err(|e| {
            Error::Input(format!("invalid config {}: {e}", path.display()))
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        // Delegates range checks to the collision layer.
        self.collision_config()?;
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::Input(format!("lambda {} outside [0, 1]", self.lambda)));
        }
        Ok(())
    }

    pub fn collision_config(&self) -> Result<CollisionConfig> {
        CollisionConfig::new(self.experiment.total_time, self.experiment.collisions)
    }

    pub fn theta_n(&self) -> f64 {
        self.theta_n.unwrap_or_else(|| {
            THETA_TABLE
                .get(self.experiment.collisions - 1)
                .copied()
                .unwrap_or(THETA_TABLE[3])
        })
    }

    pub fn shots(&self) -> u64 {
        self.shots.unwrap_or_else(|| {
            DEFAULT_SHOTS
                .get(self.experiment.collisions - 1)
                .copied()
                .unwrap_or(DEFAULT_SHOTS[3])
        })
    }

    pub fn policy(&self) -> NumericPolicy {
        let mut p = NumericPolicy::new();
        if let Some(v) = self.tolerances.sdp_gap {
            p.sdp_gap = v;
        }
        if let Some(v) = self.tolerances.certificate_gap {
            p.certificate_gap = v;
        }
        if let Some(v) = self.tolerances.tomography_validity {
            p.tomography_validity = v;
        }
        if let Some(v) = self.tolerances.member_lift {
            p.member_lift = v;
        }
        p
    }

    pub fn search_options(&self, seed: u64) -> SearchOptions {
        let mut o = SearchOptions { seed, ..SearchOptions::default() };
        o.multi_start = self
            .search
            .multi_start
            .unwrap_or(self.experiment.collisions <= 2);
        if let Some(r) = self.search.restarts {
            o.restarts = r;
        }
        if let Some(m) = self.search.max_evaluations {
            o.optim.max_evaluations = m;
        }
        if let Some(t) = self.search.validity_tolerance {
            o.validity_tolerance = t;
        }
        o
    }

    fn meta(&self, seed: u64) -> serde_json::Value {
        json!({
            "version": env!("CARGO_PKG_VERSION"),
            "seed": seed,
            "config": self,
        })
    }
}

#[derive(Debug, Parser)]
#[command(name = "steerlab", version, about = "Collision-model steering pipeline")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Projective3,
    Full9,
}

impl From<ModeArg> for LbMode {
    fn from(m: ModeArg) -> LbMode {
        match m {
            ModeArg::Projective3 => LbMode::Projective3,
            ModeArg::Full9 => LbMode::Full9,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PoolingArg {
    Pooled,
    PerSetting,
}

impl From<PoolingArg> for PoolingMode {
    fn from(p: PoolingArg) -> PoolingMode {
        match p {
            PoolingArg::Pooled => PoolingMode::Pooled,
            PoolingArg::PerSetting => PoolingMode::PerSetting,
        }
    }
}

#[derive(Debug, Clone, clap::Args)]
pub struct CommonArgs {
    /// Run configuration file (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; stage files use fixed names within it.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Seed override.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact assemblage and decay trajectory of the noiseless model.
    Simulate(CommonArgs),
    /// Finite-shot counts under the configured noise model.
    Sample {
        #[command(flatten)]
        common: CommonArgs,
        /// Shots-per-circuit override.
        #[arg(long)]
        shots: Option<u64>,
    },
    /// Linear-inversion tomography: counts.json -> assemblage.json.
    Tomo {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_enum, default_value_t = PoolingArg::Pooled)]
        pooling: PoolingArg,
    },
    /// Steering weight with dual certificate: assemblage.json -> report.json.
    Sw(CommonArgs),
    /// Measurement-assumption lower bound: counts.json -> lb.json.
    Lb {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_enum, default_value_t = ModeArg::Projective3)]
        mode: ModeArg,
    },
    /// Optimal third-strategy angle search: config -> strategy.json.
    FindStrategy(CommonArgs),
    /// SVG + CSV figures from stage outputs.
    Plot {
        /// Trajectory CSV (decay-curve figure).
        #[arg(long)]
        trajectory: Option<PathBuf>,
        /// Assemblage JSON (Bloch-plane scatter figure).
        #[arg(long)]
        assemblage: Option<PathBuf>,
        /// Lower-bound JSON files (bar chart over N); repeatable.
        #[arg(long)]
        lb: Vec<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

/// Parses the process arguments, runs one stage, and returns the exit code.
pub fn run() -> i32 {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Simulate(common) => cmd_simulate(&common),
        Command::Sample { common, shots } => cmd_sample(&common, shots),
        Command::Tomo { common, pooling } => cmd_tomo(&common, pooling.into()),
        Command::Sw(common) => cmd_sw(&common),
        Command::Lb { common, mode } => cmd_lb(&common, mode.into()),
        Command::FindStrategy(common) => cmd_find_strategy(&common),
        Command::Plot { trajectory, assemblage, lb, out } => {
            cmd_plot(trajectory.as_deref(), assemblage.as_deref(), &lb, &out)
        }
    }
}

fn prepare(common: &CommonArgs) -> Result<(RunConfig, u64)> {
    let config = RunConfig::load(&common.config)?;
    let seed = common.seed.unwrap_or(config.seed);
    std::fs::create_dir_all(&common.out)?;
    Ok((config, seed))
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let json = serde_json::to_string_pretty(value)?;
    std::fs::write(path, json + "\n")?;
    Ok(())
}

pub fn cmd_simulate(common: &CommonArgs) -> Result<()> {
    let (config, seed) = prepare(common)?;
    let cc = config.collision_config()?;
    let joint = evolve_joint(&DensityMatrix::ground_state(1), &cc)?;
    let strategies = builtin_strategies(&cc, config.theta_n())?;
    let asm = crate::assemblage::ideal_assemblage(&joint, &strategies)?;
    AssemblageFile::new(&asm, config.meta(seed)).write(&common.out.join("assemblage.json"))?;

    let traj = stroboscopic_trajectory(&cc)?;
    let dt = config.experiment.total_time / config.experiment.collisions as f64;
    let mut csv = String::from("k,z,z_theory\n");
    for (k, r) in traj.iter().enumerate() {
        let theory = (-(k as f64) * dt).exp();
        csv.push_str(&format!("{k},{:.10},{:.10}\n", r.r[2], theory));
    }
    std::fs::write(common.out.join("trajectory.csv"), csv)?;
    Ok(())
}

pub fn cmd_sample(common: &CommonArgs, shots_override: Option<u64>) -> Result<()> {
    let (config, seed) = prepare(common)?;
    let cc = config.collision_config()?;
    let strategies = builtin_strategies(&cc, config.theta_n())?;
    let shots = shots_override.unwrap_or_else(|| config.shots());
    let records = sample_all(&cc, &strategies, &config.noise, shots, seed)?;
    let file = CountsFile {
        experiment: config.experiment.clone(),
        records,
        extra: serde_json::Map::new(),
    };
    write_counts(&file, &common.out.join("counts.json"))
}

pub fn cmd_tomo(common: &CommonArgs, pooling: PoolingMode) -> Result<()> {
    let (config, seed) = prepare(common)?;
    let counts = read_counts(&common.out.join("counts.json"))?;
    let estimates = estimate_probabilities(&counts.records, pooling)?;
    let policy = config.policy();
    let rec = reconstruct_assemblage(&TomographySet::ideal(), &estimates, &policy)?;
    if !rec.valid {
        eprintln!(
            "warning: reconstruction leaves the Bloch ball by {:.3e}; \
             members are flagged, not clamped",
            rec.worst_violation
        );
    }
    let mut meta = config.meta(seed);
    meta["tomography"] = json!({
        "set": TomographySet::ideal(),
        "valid": rec.valid,
        "worst_violation": rec.worst_violation,
    });
    AssemblageFile::new(&rec.assemblage, meta).write(&common.out.join("assemblage.json"))
}

pub fn cmd_sw(common: &CommonArgs) -> Result<()> {
    let (config, seed) = prepare(common)?;
    let file = AssemblageFile::read(&common.out.join("assemblage.json"))?;
    let mut policy = config.policy();
    // Tomography from finite-shot data leaves the Bloch ball by a small
    // statistical amount recorded by the tomo stage; widen the lift so the
    // solve treats that dust as such instead of rejecting the input.
    if let Some(v) = file.meta["tomography"]["worst_violation"].as_f64() {
        policy.member_lift = policy.member_lift.max(v);
    }
    let solution = steering_weight(&file.assemblage(), &policy)?;
    if solution.no_signaling_warning {
        eprintln!(
            "warning: no-signaling defect {:.3e} exceeds the warning threshold",
            solution.no_signaling_defect
        );
    }
    if solution.lift_applied > 0.0 {
        eprintln!(
            "warning: negative-eigenvalue dust lifted by {:.3e} before solving",
            solution.lift_applied
        );
    }
    let certificate = dual_certificate_check(&solution, &policy);
    let report = json!({
        "steering_weight": solution.steering_weight,
        "mixing_weight": solution.mixing_weight,
        "primal_objective": solution.primal_objective,
        "dual_objective": solution.dual_objective,
        "gap": solution.gap,
        "iterations": solution.iterations,
        "no_signaling_defect": solution.no_signaling_defect,
        "no_signaling_warning": solution.no_signaling_warning,
        "lift_applied": solution.lift_applied,
        "certificate": certificate,
        "meta": config.meta(seed),
    });
    write_json(&common.out.join("report.json"), &report)
}

pub fn cmd_lb(common: &CommonArgs, mode: LbMode) -> Result<()> {
    let (config, seed) = prepare(common)?;
    let counts = read_counts(&common.out.join("counts.json"))?;
    let estimates = estimate_probabilities(&counts.records, PoolingMode::Pooled)?;
    let policy = config.policy();
    let options = config.search_options(seed);
    let result = lower_bound(&estimates, mode, &options, &policy)?;
    let report = json!({ "result": result, "meta": config.meta(seed) });
    write_json(&common.out.join("lb.json"), &report)
}

pub fn cmd_find_strategy(common: &CommonArgs) -> Result<()> {
    let (config, seed) = prepare(common)?;
    let cc = config.collision_config()?;
    let policy = config.policy();
    let options = config.search_options(seed);
    let result = find_third_strategy(&cc, config.lambda, &options, &policy)?;
    let report = json!({ "result": result, "meta": config.meta(seed) });
    write_json(&common.out.join("strategy.json"), &report)
}

// ---------------------------------------------------------------------------
// Plotting: self-contained SVG plus CSV twins, no external dependencies.

struct Svg {
    body: String,
    width: f64,
    height: f64,
}

impl Svg {
    fn new(width: f64, height: f64) -> Self {
        Self { body: String::new(), width, height }
    }

    fn line(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, style: &str) {
        self.body.push_str(&format!(
            "<line x1=\"{x1:.2}\" y1=\"{y1:.2}\" x2=\"{x2:.2}\" y2=\"{y2:.2}\" {style}/>\n"
        ));
    }

    fn circle(&mut self, cx: f64, cy: f64, r: f64, style: &str) {
        self.body.push_str(&format!(
            "<circle cx=\"{cx:.2}\" cy=\"{cy:.2}\" r=\"{r:.2}\" {style}/>\n"
        ));
    }

    fn rect(&mut self, x: f64, y: f64, w: f64, h: f64, style: &str) {
        self.body.push_str(&format!(
            "<rect x=\"{x:.2}\" y=\"{y:.2}\" width=\"{w:.2}\" height=\"{h:.2}\" {style}/>\n"
        ));
    }

    fn polyline(&mut self, points: &[(f64, f64)], style: &str) {
        let pts: Vec<String> =
            points.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
        self.body.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" {style}/>\n",
            pts.join(" ")
        ));
    }

    fn text(&mut self, x: f64, y: f64, size: f64, content: &str) {
        self.body.push_str(&format!(
            "<text x=\"{x:.2}\" y=\"{y:.2}\" font-size=\"{size:.0}\" \
             font-family=\"sans-serif\">{content}</text>\n"
        ));
    }

    fn write(&self, path: &Path) -> Result<()> {
        let doc = format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0}\" height=\"{:.0}\" \
             viewBox=\"0 0 {:.0} {:.0}\">\n<rect width=\"100%\" height=\"100%\" \
             fill=\"white\"/>\n{}</svg>\n",
            self.width, self.height, self.width, self.height, self.body
        );
        std::fs::write(path, doc)?;
        Ok(())
    }
}

const MARGIN: f64 = 50.0;

fn plot_decay(trajectory: &Path, out: &Path) -> Result<()> {
    let text = std::fs::read_to_string(trajectory)
        .map_err(|e| Error::Input(format!("cannot read {}: {e}", trajectory.display())))?;
    let mut rows: Vec<(f64, f64, f64)> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 {
            continue; // header
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 3 {
            return Err(Error::Input(format!(
                "{}: line {}: expected 3 columns",
                trajectory.display(),
                i + 1
            )));
        }
        let parse = |s: &str| {
            s.trim().parse::<f64>().map_err(|e| {
                Error::Input(format!("{}: line {}: {e}", trajectory.display(), i + 1))
            })
        };
        rows.push((parse(cols[0])?, parse(cols[1])?, parse(cols[2])?));
    }
    if rows.is_empty() {
        return Err(Error::Input("trajectory file has no data rows".into()));
    }

    let mut csv = String::from("k,z,z_theory\n");
    for (k, z, t) in &rows {
        csv.push_str(&format!("{k},{z:.10},{t:.10}\n"));
    }
    std::fs::write(out.join("decay.csv"), csv)?;

    let (w, h) = (480.0, 320.0);
    let kmax = rows.last().unwrap().0.max(1.0);
    let sx = |k: f64| MARGIN + k / kmax * (w - 2.0 * MARGIN);
    let sy = |z: f64| h - MARGIN - z * (h - 2.0 * MARGIN);
    let mut svg = Svg::new(w, h);
    svg.line(MARGIN, h - MARGIN, w - MARGIN, h - MARGIN, "stroke=\"black\"");
    svg.line(MARGIN, MARGIN, MARGIN, h - MARGIN, "stroke=\"black\"");
    svg.text(w / 2.0 - 40.0, h - 12.0, 13.0, "collision k");
    svg.text(8.0, MARGIN - 10.0, 13.0, "z component");
    let theory: Vec<(f64, f64)> = rows.iter().map(|&(k, _, t)| (sx(k), sy(t))).collect();
    svg.polyline(&theory, "stroke=\"gray\" stroke-dasharray=\"5,4\"");
    let sim: Vec<(f64, f64)> = rows.iter().map(|&(k, z, _)| (sx(k), sy(z))).collect();
    svg.polyline(&sim, "stroke=\"steelblue\" stroke-width=\"2\"");
    for &(k, z, _) in &rows {
        svg.circle(sx(k), sy(z), 3.5, "fill=\"steelblue\"");
    }
    svg.text(w - MARGIN - 130.0, MARGIN, 12.0, "dashed: exp(-kT/N)");
    svg.write(&out.join("decay.svg"))
}

fn plot_bloch(assemblage: &Path, out: &Path) -> Result<()> {
    let file = AssemblageFile::read(assemblage)?;
    let mut csv = String::from("x,a,p,bloch_x,bloch_y,bloch_z\n");
    for m in &file.members {
        csv.push_str(&format!(
            "{},{},{:.10},{:.10},{:.10},{:.10}\n",
            m.setting, m.outcome, m.probability, m.bloch[0], m.bloch[1], m.bloch[2]
        ));
    }
    std::fs::write(out.join("bloch.csv"), csv)?;

    // x-z plane scatter; dot area proportional to p(a|x).
    let (w, h) = (420.0, 420.0);
    let (cx, cy) = (w / 2.0, h / 2.0);
    let radius = w / 2.0 - MARGIN;
    let colors = ["steelblue", "firebrick", "seagreen", "darkorange", "purple"];
    let mut svg = Svg::new(w, h);
    svg.circle(cx, cy, radius, "fill=\"none\" stroke=\"black\"");
    svg.line(cx - radius, cy, cx + radius, cy, "stroke=\"lightgray\"");
    svg.line(cx, cy - radius, cx, cy + radius, "stroke=\"lightgray\"");
    svg.text(cx + radius - 12.0, cy - 6.0, 12.0, "x");
    svg.text(cx + 6.0, cy - radius + 14.0, 12.0, "z");
    for m in &file.members {
        if m.probability <= 0.0 {
            continue;
        }
        let idx = file.settings.iter().position(|s| *s == m.setting).unwrap_or(0);
        let color = colors[idx % colors.len()];
        let px = cx + m.bloch[0] * radius;
        let py = cy - m.bloch[2] * radius;
        let r = (m.probability.sqrt() * 18.0).max(1.5);
        svg.circle(px, py, r, &format!("fill=\"{color}\" fill-opacity=\"0.6\""));
    }
    for (i, s) in file.settings.iter().enumerate() {
        let color = colors[i % colors.len()];
        svg.circle(16.0, 18.0 + 18.0 * i as f64, 5.0, &format!("fill=\"{color}\""));
        svg.text(26.0, 22.0 + 18.0 * i as f64, 12.0, s);
    }
    svg.write(&out.join("bloch.svg"))
}

fn plot_lb_bars(lb_files: &[PathBuf], out: &Path) -> Result<()> {
    let mut bars: Vec<(usize, f64)> = Vec::new();
    for path in lb_files {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Input(format!("cannot read {}: {e}", path.display())))?;
        let v: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| Error::Input(format!("malformed {}: {e}", path.display())))?;
        let n = v["meta"]["config"]["experiment"]["N"]
            .as_u64()
            .ok_or_else(|| Error::Input(format!("{}: missing experiment N", path.display())))?;
        let lb = v["result"]["lower_bound"]
            .as_f64()
            .ok_or_else(|| Error::Input(format!("{}: missing lower_bound", path.display())))?;
        bars.push((n as usize, lb));
    }
    bars.sort_by_key(|&(n, _)| n);

    let mut csv = String::from("N,lower_bound\n");
    for (n, lb) in &bars {
        csv.push_str(&format!("{n},{lb:.10}\n"));
    }
    std::fs::write(out.join("lb_bars.csv"), csv)?;

    let (w, h) = (420.0, 320.0);
    let mut svg = Svg::new(w, h);
    svg.line(MARGIN, h - MARGIN, w - MARGIN, h - MARGIN, "stroke=\"black\"");
    svg.line(MARGIN, MARGIN, MARGIN, h - MARGIN, "stroke=\"black\"");
    svg.text(w / 2.0 - 50.0, h - 12.0, 13.0, "collisions N");
    svg.text(8.0, MARGIN - 10.0, 13.0, "steering LB");
    let slot = (w - 2.0 * MARGIN) / bars.len().max(1) as f64;
    for (i, (n, lb)) in bars.iter().enumerate() {
        let bh = lb.clamp(0.0, 1.0) * (h - 2.0 * MARGIN);
        let x = MARGIN + slot * (i as f64 + 0.2);
        svg.rect(x, h - MARGIN - bh, slot * 0.6, bh, "fill=\"steelblue\"");
        svg.text(x + slot * 0.2, h - MARGIN + 16.0, 12.0, &format!("{n}"));
        svg.text(x - 4.0, h - MARGIN - bh - 6.0, 11.0, &format!("{lb:.3}"));
    }
    svg.write(&out.join("lb_bars.svg"))
}

pub fn cmd_plot(
    trajectory: Option<&Path>,
    assemblage: Option<&Path>,
    lb_files: &[PathBuf],
    out: &Path,
) -> Result<()> {
    if trajectory.is_none() && assemblage.is_none() && lb_files.is_empty() {
        return Err(Error::Input(
            "plot requires at least one of --trajectory, --assemblage, --lb".into(),
        ));
    }
    std::fs::create_dir_all(out)?;
    if let Some(t) = trajectory {
        plot_decay(t, out)?;
    }
    if let Some(a) = assemblage {
        plot_bloch(a, out)?;
    }
    if !lb_files.is_empty() {
        plot_lb_bars(lb_files, out)?;
    }
    Ok(())
}
