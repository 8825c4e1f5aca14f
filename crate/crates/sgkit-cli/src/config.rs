//! Run configuration: one JSON file with per-command sections, plus the
//! `--seed` / `--out` flag overrides (flags win). The effective config —
//! file content after overrides — is hashed and embedded in every report.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use sgkit::assignment::CostWeights;
use sgkit::distillation::DistillConfig;
use sgkit::losses::LossConfig;
use sgkit::metrics::EvalConfig;
use sgkit::target_gen::TargetGenConfig;

use crate::CliError;

/// Input files and directories. Relative entries resolve against the
/// config file's directory, so a config travels with its fixtures.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    /// Ground-truth fixture (evaluate, match, select-queries).
    pub ground_truth: Option<PathBuf>,
    /// Prediction fixture (evaluate, match).
    pub predictions: Option<PathBuf>,
    /// Fixture holding `student_edges_{i}` / `teacher_edges_{i}` /
    /// `negative_mask_{i}` embedding sets (distill-check).
    pub features: Option<PathBuf>,
    /// `image_id<TAB>caption` lines (generate-targets).
    pub captions: Option<PathBuf>,
    /// Directory of `{image_id}.json` scene scripts (generate-targets).
    pub scenes_dir: Option<PathBuf>,
    /// Planted-truth manifest to score generated targets against.
    pub manifest: Option<PathBuf>,
    /// Optional counter-action TSV; the bundled table when absent.
    pub counter_actions: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerateTargetsSection {
    pub settings: TargetGenConfig,
    /// Object-category-only baseline mode: ground bare class names
    /// instead of interaction phrases.
    pub baseline: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectQueriesSection {
    /// Total query count K.
    pub k: usize,
    /// Interaction query count L; ⌊K/2⌋ (at least 1) when absent.
    pub l: Option<usize>,
    /// Relevance blend γ, shared by both selection passes.
    pub gamma: f64,
    /// Stub-model embedding width.
    pub dim: usize,
    /// Visual tokens synthesized per image when the fixture carries no
    /// `visual:{index}` embedding.
    pub n_tokens: usize,
    /// Cap on stub-predicted triplets between the passes.
    pub max_triplets: usize,
}

impl Default for SelectQueriesSection {
    fn default() -> Self {
        SelectQueriesSection {
            k: 8,
            l: None,
            gamma: 0.5,
            dim: 16,
            n_tokens: 32,
            max_triplets: 4,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MatchSection {
    pub weights: CostWeights,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GradcheckSection {
    /// Random instances per operation.
    pub instances: usize,
    /// Central-difference step. The default is the balanced choice for
    /// unit-scale arguments (≈ cbrt of machine epsilon).
    pub step: f64,
    /// Maximum accepted relative error.
    pub tolerance: f64,
    /// Denominator floor of the relative error.
    pub floor: f64,
    /// Negative-control hook: deliberately corrupt every analytic
    /// gradient so the run must report failure (and exit 1).
    pub corrupt: bool,
}

impl Default for GradcheckSection {
    fn default() -> Self {
        GradcheckSection {
            instances: 100,
            step: 1e-5,
            tolerance: 1e-4,
            floor: 1e-6,
            corrupt: false,
        }
    }
}

/// The whole config file. Unknown keys are rejected so a typo cannot
/// silently fall back to a default.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Output directory. `--out` wins and resolves against the working
    /// directory like any command-line path; a value from the config file
    /// resolves against the config's directory like the input paths;
    /// `sgkit-out` when neither is set.
    pub out_dir: Option<PathBuf>,
    pub paths: PathsConfig,
    pub generate_targets: GenerateTargetsSection,
    pub select_queries: SelectQueriesSection,
    #[serde(rename = "match")]
    pub match_section: MatchSection,
    pub distill: DistillConfig,
    pub loss: LossConfig,
    pub eval: EvalConfig,
    pub gradcheck: GradcheckSection,
}

/// A loaded config with overrides applied, paths resolved and checked,
/// and the effective-config hash computed.
#[derive(Debug, Clone)]
pub struct ResolvedRun {
    pub config: RunConfig,
    pub out_dir: PathBuf,
    /// SHA-256 (hex) of the effective config: file content with flag
    /// overrides applied, before path resolution, so the hash is
    /// independent of where the archive is unpacked. The output
    /// directory is excluded — where a report lands does not change what
    /// it says, so `--out` redirection preserves byte-identical reports.
    pub config_hash: String,
}

fn resolve_path(entry: &mut Option<PathBuf>, base: &Path) {
    if let Some(p) = entry {
        if p.is_relative() {
            *p = base.join(&*p);
        }
    }
}

/// Load + validate a run: parse the config file, apply flag overrides,
/// hash the effective config, resolve paths against the config file's
/// directory, and require every referenced path to exist.
pub fn load_run(
    config_path: &Path,
    seed_flag: Option<u64>,
    out_flag: Option<PathBuf>,
) -> Result<ResolvedRun, CliError> {
    let text = fs::read_to_string(config_path).map_err(|e| {
        CliError::Input(format!("cannot read config {}: {e}", config_path.display()))
    })?;
    let mut config: RunConfig = serde_json::from_str(&text)
        .map_err(|e| CliError::Input(format!("invalid config {}: {e}", config_path.display())))?;
    if let Some(seed) = seed_flag {
        config.seed = seed;
    }
    let out_from_flag = out_flag.is_some();
    if let Some(out) = out_flag {
        config.out_dir = Some(out);
    }

    let canonical = {
        let mut for_hash = config.clone();
        for_hash.out_dir = None;
        serde_json::to_string(&for_hash).expect("config serializes")
    };
    let config_hash = format!("{:x}", Sha256::digest(canonical.as_bytes()));

    let base = config_path.parent().unwrap_or_else(|| Path::new("."));
    let p = &mut config.paths;
    for entry in [
        &mut p.ground_truth,
        &mut p.predictions,
        &mut p.features,
        &mut p.captions,
        &mut p.scenes_dir,
        &mut p.manifest,
        &mut p.counter_actions,
    ] {
        resolve_path(entry, base);
    }

    let p = &config.paths;
    for (name, entry) in [
        ("paths.ground_truth", &p.ground_truth),
        ("paths.predictions", &p.predictions),
        ("paths.features", &p.features),
        ("paths.captions", &p.captions),
        ("paths.scenes_dir", &p.scenes_dir),
        ("paths.manifest", &p.manifest),
        ("paths.counter_actions", &p.counter_actions),
    ] {
        if let Some(path) = entry {
            if !path.exists() {
                return Err(CliError::Input(format!(
                    "configured {name} does not exist: {}",
                    path.display()
                )));
            }
        }
    }
    if let Some(dir) = &p.scenes_dir {
        if !dir.is_dir() {
            return Err(CliError::Input(format!(
                "configured paths.scenes_dir is not a directory: {}",
                dir.display()
            )));
        }
    }

    let out_dir = match &config.out_dir {
        None => PathBuf::from("sgkit-out"),
        Some(p) if out_from_flag || p.is_absolute() => p.clone(),
        Some(p) => base.join(p),
    };

    Ok(ResolvedRun {
        config,
        out_dir,
        config_hash,
    })
}
