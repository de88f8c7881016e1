//! Configuration, scenarios and the end-to-end driver.

mod manifest;
mod scenarios;

pub use manifest::{load_sweepout, save_sweepout, Manifest, SliceEntry, MANIFEST_FILE};
pub use scenarios::{
    bump_profile, clifford_point, degenerate_angle, scenario, scenario_library, shear_side, sheared_mark,
    sheared_point, Outcome, ScenarioSpec, BUMP_AMPLITUDE, BUMP_CENTER, BUMP_RADIUS,
};

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bubbling::{extract_bubbles, BubbleOptions, BubbleTree, Verdict};
use crate::error::{Error, Result};
use crate::harmonic::{energy, Ball, CandidateFamily, MapSlice, ReplaceOptions, TargetManifold};
use crate::sweepout::{
    conformal_slice, is_constant, minmax_drive, CoveringOptions, DriveHistory, DriveOptions, ReparamOptions,
    RoundRecord, SmoothOptions, Sweepout, TightenOptions,
};

/// Run configuration, read from TOML. Unknown keys are rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub scenario: String,
    /// Overrides the scenario's target; must have the same ambient dimension.
    pub target: Option<String>,
    /// Nodes per side of the square parameter grid.
    pub grid: usize,
    /// Number of time steps `M`.
    pub samples: usize,
    pub rounds: usize,
    pub eps1: f64,
    /// Defaults to `eps1 / 12`.
    pub eps0: Option<f64>,
    pub epsilon_su: f64,
    /// First regularization `δ₀`, halved every round.
    pub delta0: f64,
    /// Regularization used for the marks of the analysed slices.
    pub analysis_delta: f64,
    /// Slices around the energy maximum handed to the bubble analysis.
    pub analysis_window: usize,
    pub uniformize_tol: f64,
    pub replace_tol: f64,
    pub stop_tol: f64,
    pub noise_floor: f64,
    pub smooth_width: f64,
    /// Disk `[x, y, radius]` on which interior slices are made constant.
    pub patch: Option<[f64; 3]>,
    pub family_stride: usize,
    pub time_stride: usize,
    pub property_samples: usize,
    pub neck_width: f64,
    /// Worker threads; 0 uses every core.
    pub threads: usize,
    pub seed: u64,
    pub out: PathBuf,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            scenario: "clifford".into(),
            target: None,
            grid: 64,
            samples: 64,
            rounds: 5,
            eps1: 0.5,
            eps0: None,
            epsilon_su: 1.0,
            delta0: 1e-2,
            analysis_delta: 1e-6,
            analysis_window: 6,
            uniformize_tol: 1e-10,
            replace_tol: 1e-9,
            stop_tol: 1e-6,
            noise_floor: 1e-6,
            smooth_width: 0.0,
            patch: None,
            family_stride: 8,
            time_stride: 4,
            property_samples: 8,
            neck_width: 0.15,
            threads: 0,
            seed: 0,
            out: PathBuf::from("out"),
        }
    }
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Config = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&fs::read_to_string(path)?)
    }

    pub fn eps0(&self) -> f64 {
        self.eps0.unwrap_or(self.eps1 / 12.0)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if !(self.eps1 > 0.0) || !(self.eps1 < self.epsilon_su) {
            return fail(format!("need 0 < eps1 < epsilon_su, got {} and {}", self.eps1, self.epsilon_su));
        }
        if !(self.eps0() > 0.0) {
            return fail(format!("eps0 must be positive, got {}", self.eps0()));
        }
        let tolerances = [
            ("uniformize_tol", self.uniformize_tol),
            ("replace_tol", self.replace_tol),
            ("stop_tol", self.stop_tol),
            ("noise_floor", self.noise_floor),
            ("delta0", self.delta0),
            ("analysis_delta", self.analysis_delta),
        ];
        for (name, v) in tolerances {
            if !(v > 0.0) || !v.is_finite() {
                return fail(format!("{name} must be positive, got {v}"));
            }
        }
        if self.grid < 8 || !self.grid.is_power_of_two() {
            return fail(format!("grid must be a power of two and at least 8, got {}", self.grid));
        }
        if self.samples < 2 {
            return fail(format!("need at least 2 time steps, got {}", self.samples));
        }
        if !(self.smooth_width >= 0.0) {
            return fail(format!("smooth_width must be nonnegative, got {}", self.smooth_width));
        }
        if !(self.neck_width > 0.0 && self.neck_width < 1.0) {
            return fail(format!("neck_width must lie in (0, 1), got {}", self.neck_width));
        }
        if self.analysis_window < 3 {
            return fail(format!("analysis_window must be at least 3, got {}", self.analysis_window));
        }
        scenario(&self.scenario)?;
        Ok(())
    }

    pub fn target_for(&self, spec: &ScenarioSpec) -> Result<TargetManifold> {
        let target = match &self.target {
            Some(name) => TargetManifold::by_name(name)?,
            None => spec.target(),
        };
        if target.ambient_dim() != spec.target().ambient_dim() {
            return Err(Error::Config(format!(
                "target `{}` has ambient dimension {}, scenario `{}` needs {}",
                self.target.as_deref().unwrap_or(spec.target),
                target.ambient_dim(),
                spec.name,
                spec.target().ambient_dim()
            )));
        }
        Ok(target)
    }

    pub fn drive_options(&self) -> DriveOptions {
        let replace = ReplaceOptions { tol: self.replace_tol, ..ReplaceOptions::default() };
        DriveOptions {
            rounds: self.rounds,
            delta0: self.delta0,
            uniformize_tol: self.uniformize_tol,
            smooth: SmoothOptions {
                width: self.smooth_width,
                patch: self.patch.map(|[x, y, r]| Ball::new((x, y), r)),
            },
            covering: CoveringOptions {
                eps1: self.eps1,
                family: CandidateFamily { stride: self.family_stride, ..CandidateFamily::default() },
                replace,
                noise_floor: self.noise_floor,
                time_stride: self.time_stride,
                strict: false,
            },
            tighten: TightenOptions { replace, ..TightenOptions::default() },
            eps0: self.eps0(),
            property_samples: self.property_samples,
            seed: self.seed,
            stop_tol: self.stop_tol,
        }
    }

    pub fn bubble_options(&self) -> BubbleOptions {
        BubbleOptions { neck_width: self.neck_width, ..BubbleOptions::new(self.eps1) }
    }
}

/// Header of the per-round history CSV.
pub const HISTORY_HEADER: &str = "round,maxE,maxArea,gap,worst_property_star";

pub fn history_csv(rounds: &[RoundRecord]) -> String {
    let mut out = String::from(HISTORY_HEADER);
    out.push('\n');
    for r in rounds {
        writeln!(out, "{},{},{},{},{}", r.round, r.max_energy, r.max_area, r.gap, r.worst_property_star)
            .expect("writing to a string");
    }
    out
}

/// The slices handed to the bubble analysis: up to `window` non-constant
/// interior slices nearest the energy maximum, ordered by increasing
/// energy, each reparametrized over its own uniformizing torus. A slice
/// whose uniformization fails enters with its current mark; the second
/// value counts those.
pub fn analysis_sequence(
    s: &Sweepout,
    target: &TargetManifold,
    window: usize,
    opts: &ReparamOptions,
) -> (Vec<MapSlice>, usize) {
    let energies: Vec<f64> = s.slices.par_iter().map(energy).collect();
    let candidates: Vec<usize> = s.interior().filter(|&i| !is_constant(&s.slices[i])).collect();
    let Some(&argmax) = candidates.iter().max_by(|&&a, &&b| energies[a].total_cmp(&energies[b]).then(b.cmp(&a)))
    else {
        return (Vec::new(), 0);
    };
    let mut nearest = candidates.clone();
    nearest.sort_by_key(|&i| (i.abs_diff(argmax), i));
    nearest.truncate(window);
    nearest.sort_by(|&a, &b| {
        energies[a].total_cmp(&energies[b]).then(b.abs_diff(argmax).cmp(&a.abs_diff(argmax))).then(a.cmp(&b))
    });
    let slices: Vec<(MapSlice, bool)> = nearest
        .par_iter()
        .map(|&i| match conformal_slice(&s.slices[i], target, opts) {
            Ok((u, _)) => (u, false),
            Err(_) => (s.slices[i].clone(), true),
        })
        .collect();
    let failed = slices.iter().filter(|p| p.1).count();
    (slices.into_iter().map(|p| p.0).collect(), failed)
}

/// Bubble report as written to `bubbles.json`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BubbleReport {
    #[serde(flatten)]
    pub verdict: Verdict,
    pub tau_sequence: Vec<[f64; 2]>,
    pub bubbles: Vec<BubbleEntry>,
    pub body_energy: f64,
    pub neck_energy: f64,
    pub identity_residual: f64,
    /// Analysed slices that kept their mark because uniformization failed.
    pub unreparametrized: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BubbleEntry {
    pub center: [f64; 2],
    pub scales: Vec<f64>,
    pub energy: f64,
}

impl BubbleReport {
    pub fn from_tree(tree: &BubbleTree, unreparametrized: usize) -> Self {
        let pair = |z: Complex64| [z.re, z.im];
        BubbleReport {
            verdict: tree.verdict,
            tau_sequence: tree.tau_sequence.iter().copied().map(pair).collect(),
            bubbles: tree
                .bubbles
                .iter()
                .map(|b| BubbleEntry { center: [b.center.0, b.center.1], scales: b.scales.clone(), energy: b.energy })
                .collect(),
            body_energy: tree.body_energy,
            neck_energy: tree.residual_neck_energy,
            identity_residual: tree.identity_residual,
            unreparametrized,
        }
    }

    /// An empty report for sweepouts with fewer than three analysable slices.
    fn inconclusive(unreparametrized: usize) -> Self {
        BubbleReport {
            verdict: Verdict::Inconclusive,
            tau_sequence: vec![],
            bubbles: vec![],
            body_energy: 0.0,
            neck_energy: 0.0,
            identity_residual: 0.0,
            unreparametrized,
        }
    }
}

/// Runs the bubble analysis on the slices around the energy maximum.
pub fn analyze_sweepout(s: &Sweepout, target: &TargetManifold, config: &Config) -> Result<BubbleReport> {
    let reparam = ReparamOptions { delta: config.analysis_delta, tol: config.uniformize_tol };
    let (sequence, failed) = analysis_sequence(s, target, config.analysis_window, &reparam);
    if sequence.len() < 3 {
        return Ok(BubbleReport::inconclusive(failed));
    }
    let tree = extract_bubbles(&sequence, &config.bubble_options())?;
    Ok(BubbleReport::from_tree(&tree, failed))
}

#[derive(Clone, Debug)]
pub struct RunSummary {
    pub scenario: String,
    pub initial_max_energy: f64,
    pub history: DriveHistory,
    /// Analysis of the scenario as constructed and of the driven sweepout.
    pub initial_bubbles: BubbleReport,
    pub bubbles: BubbleReport,
    pub out: PathBuf,
}

/// Builds the scenario, drives it, analyses the result and writes the
/// manifest and slices, `history.csv`, `rounds.json`, `bubbles.json` and
/// `bubbles_initial.json` under `config.out`.
pub fn run_pipeline(config: &Config) -> Result<RunSummary> {
    config.validate()?;
    let spec = scenario(&config.scenario)?;
    let target = config.target_for(&spec)?;
    let initial = spec.build(config.grid, config.samples).map_err(|e| e.in_stage("scenario"))?;
    initial.validate(&target).map_err(|e| e.in_stage("scenario"))?;
    let initial_bubbles =
        analyze_sweepout(&initial, &target, config).map_err(|e| e.in_stage("bubble analysis"))?;
    let history = minmax_drive(&initial, &target, &config.drive_options())?;
    let bubbles = analyze_sweepout(&history.last, &target, config).map_err(|e| e.in_stage("bubble analysis"))?;

    fs::create_dir_all(&config.out)?;
    save_sweepout(&history.last, &target, &config.out.join("sweepout"))?;
    fs::write(config.out.join("history.csv"), history_csv(&history.rounds))?;
    fs::write(config.out.join("rounds.json"), serde_json::to_string_pretty(&history.rounds)?)?;
    fs::write(config.out.join("bubbles_initial.json"), serde_json::to_string_pretty(&initial_bubbles)?)?;
    fs::write(config.out.join("bubbles.json"), serde_json::to_string_pretty(&bubbles)?)?;
    Ok(RunSummary {
        scenario: spec.name.to_string(),
        initial_max_energy: history.initial_max_energy,
        history,
        initial_bubbles,
        bubbles,
        out: config.out.clone(),
    })
}
