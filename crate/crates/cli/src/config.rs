//! TOML experiment configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    pub out: Option<PathBuf>,
    /// Group file, relative to the config file.
    pub group: Option<PathBuf>,
    #[serde(default)]
    pub source: SourceConfig,
    #[serde(default)]
    pub delta: DeltaConfig,
    #[serde(default)]
    pub measure: MeasureConfig,
    #[serde(default)]
    pub fourier: FourierConfig,
    #[serde(default)]
    pub nonconc: NonConcConfig,
    #[serde(default)]
    pub holonomy: HolonomyConfig,
}

/// Measure fed to the `fourier` and `nonconc` commands.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SourceConfig {
    /// Patterson-Sullivan approximation of the configured group.
    #[default]
    Ps,
    Segment {
        n: usize,
    },
    SegmentInPlane {
        n: usize,
        #[serde(default)]
        angle: f64,
    },
    Square {
        n: usize,
        seed: Option<u64>,
    },
    /// Normalized unstable conditional of the PS approximation, restricted
    /// to `|v| <= window`, at the frame `g_flow`.
    Conditional {
        window: f64,
        #[serde(default)]
        flow: f64,
    },
    PointMass {
        x: Vec<f64>,
    },
    File {
        path: PathBuf,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DeltaConfig {
    pub n_max: usize,
    pub tol: f64,
    /// Use this exponent instead of estimating it.
    pub value: Option<f64>,
}

impl Default for DeltaConfig {
    fn default() -> Self {
        DeltaConfig {
            n_max: 12,
            tol: 1e-6,
            value: None,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Construction {
    #[default]
    TopShell,
    OrbitSum,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeasureConfig {
    pub n_max: usize,
    pub eps: f64,
    pub construction: Construction,
    /// Half-width of the unstable-conditional window at the identity frame;
    /// no conditional is written when absent.
    pub window: Option<f64>,
}

impl Default for MeasureConfig {
    fn default() -> Self {
        MeasureConfig {
            n_max: 10,
            eps: 0.0,
            construction: Construction::TopShell,
            window: None,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Ray,
    #[default]
    Shell,
    Grid,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FourierConfig {
    pub mode: Mode,
    pub radial_samples: usize,
    pub r0: f64,
    pub ratio: f64,
    pub count: usize,
    pub grid_step: f64,
    pub cap: Option<f64>,
    pub directions: Option<Vec<Vec<f64>>>,
    pub l2_radii: Vec<f64>,
    pub exceptional_t: Vec<f64>,
    pub delta_exp: Vec<f64>,
    /// Growth exponent the exceptional-set sweep compares against.
    pub growth: f64,
    /// Frostman exponent for the `R^{d - alpha}` reference column; defaults
    /// to the critical exponent for PS sources.
    pub alpha: Option<f64>,
}

impl Default for FourierConfig {
    fn default() -> Self {
        FourierConfig {
            mode: Mode::Shell,
            radial_samples: 32,
            r0: 4.0,
            ratio: std::f64::consts::SQRT_2,
            count: 17,
            grid_step: 0.025,
            cap: None,
            directions: None,
            l2_radii: vec![32.0, 64.0, 128.0, 256.0],
            exceptional_t: vec![16.0, 64.0, 256.0],
            delta_exp: vec![0.1, 0.2, 0.3, 0.4],
            growth: 0.5,
            alpha: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NonConcConfig {
    pub eps: Vec<f64>,
    pub samples: usize,
    pub r_min: Option<f64>,
    pub r_max: f64,
    pub random_normals: usize,
}

impl Default for NonConcConfig {
    fn default() -> Self {
        NonConcConfig {
            eps: vec![0.4, 0.2, 0.1, 0.05],
            samples: 200,
            r_min: None,
            r_max: 1.0,
            random_normals: 16,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HolonomyConfig {
    pub d: usize,
    pub trials: usize,
    pub inject_sign_bug: bool,
    pub linearization_trials: usize,
    pub t1: f64,
    pub t2: f64,
}

impl Default for HolonomyConfig {
    fn default() -> Self {
        HolonomyConfig {
            d: 2,
            trials: 10_000,
            inject_sign_bug: false,
            linearization_trials: 100,
            t1: 5.0,
            t2: 10.0,
        }
    }
}

impl ExperimentConfig {
    /// Reads a config and resolves relative paths against its directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg: ExperimentConfig =
            toml::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(g) = cfg.group.as_mut() {
            resolve(g);
        }
        if let Some(o) = cfg.out.as_mut() {
            resolve(o);
        }
        if let SourceConfig::File { path } = &mut cfg.source {
            resolve(path);
        }
        Ok(cfg)
    }

    /// SHA-256 of the canonical serialization (after command-line overrides),
    /// ignoring the output directory.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.out = None;
        let text = toml::to_string(&c).expect("config serializes");
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn group_path(&self) -> Result<&Path, CliError> {
        self.group
            .as_deref()
            .ok_or_else(|| CliError::Validation("config has no `group` file".into()))
    }
}
