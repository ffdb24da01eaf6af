//! Run configuration: defaults, the flat `key = value` file format and
//! per-key overrides.
//!
//! Keys (defaults in parentheses):
//!
//! | key | meaning |
//! |-----|---------|
//! | `rows`, `cols` | lattice size (4, 4) |
//! | `layout` | `hex-offset` or `rectangular` (hex-offset) |
//! | `metric` | `manhattan` or `hex-axial` (manhattan) |
//! | `mode` | `mrf` or `som` (mrf) |
//! | `epochs` | training passes (100) |
//! | `alpha0`, `alpha_end` | learning rate decay (0.5, 0.01) |
//! | `sigma0`, `sigma_end` | neighborhood radius decay (2.0, 0.5) |
//! | `decay` | `exponential` or `linear` (exponential) |
//! | `seed` | seeds sampler, initialization and shuffling (42) |
//! | `bmu_scope` | `global-masked` or `per-group` (global-masked) |
//! | `distance_normalization` | `rms-per-active-dim` or `unnormalized` |
//! | `combination_threshold` | encoding report threshold (0.25) |
//! | `mask` | `default-paper` or a mask file path |
//! | `dataset` | CSV path or `synthesize:<n>` (synthesize:3216) |
//! | `out` | output directory (out) |
//! | `n` | postures written by `generate` (3216) |
//! | `max_attempts` | sampler budget, 0 = 50000 per posture (0) |
//! | `touch_radius`, `upper_arm`, `forearm_hand` | chain scalars, meters |
//! | `shoulder_offset`, `neck_offset`, `face_target` | `x,y,z` meters |
//! | `limit.<joint>` | `lo,hi` radians |
//! | `axis.<joint>` | `x`, `y` or `z` |

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::datagen::{Axis, ChainSpec, JOINT_NAMES};
use crate::error::{Error, Result};
use crate::lattice::{Layout, LatticeSpec, Metric};
use crate::mrf::{BmuScope, DistanceNormalization, MrfConfig};
use crate::som::{Decay, TrainSchedule};

pub const DEFAULT_MASK: &str = "default-paper";
const SYNTH_PREFIX: &str = "synthesize:";
const ATTEMPTS_PER_SAMPLE: u64 = 50_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Som,
    Mrf,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Som => "som",
            Mode::Mrf => "mrf",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "som" => Ok(Mode::Som),
            "mrf" => Ok(Mode::Mrf),
            other => Err(Error::Parameter(format!("unknown mode `{other}`"))),
        }
    }
}

/// Where training data comes from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DatasetSource {
    Synthesize(usize),
    File(String),
}

impl DatasetSource {
    pub fn parse(s: &str) -> Result<Self> {
        match s.strip_prefix(SYNTH_PREFIX) {
            Some(n) => {
                let n: usize = n
                    .parse()
                    .map_err(|_| Error::Configuration(format!("bad sample count in `{s}`")))?;
                if n == 0 {
                    return Err(Error::Configuration("synthesize:<n> needs n >= 1".into()));
                }
                Ok(DatasetSource::Synthesize(n))
            }
            None => Ok(DatasetSource::File(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub lattice: LatticeSpec,
    pub mode: Mode,
    pub schedule: TrainSchedule,
    pub mrf: MrfConfig,
    pub combination_threshold: f64,
    pub chain: ChainSpec,
    pub mask: String,
    pub dataset: String,
    pub out: String,
    pub n: usize,
    pub max_attempts: u64,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let seed = 42;
        Self {
            lattice: LatticeSpec::default(),
            mode: Mode::Mrf,
            schedule: TrainSchedule { seed, ..TrainSchedule::default() },
            mrf: MrfConfig::default(),
            combination_threshold: crate::analysis::COMBINATION_THRESHOLD,
            chain: ChainSpec::default(),
            mask: DEFAULT_MASK.to_string(),
            dataset: format!("{SYNTH_PREFIX}3216"),
            out: "out".to_string(),
            n: 3216,
            max_attempts: 0,
            seed,
        }
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Configuration(format!("`{value}` is not a valid value for `{key}`")))
}

fn parse_list<const N: usize>(key: &str, value: &str) -> Result<[f64; N]> {
    let parts: Vec<&str> = value.split(',').collect();
    if parts.len() != N {
        return Err(Error::Configuration(format!(
            "`{key}` expects {N} comma-separated numbers, got `{value}`"
        )));
    }
    let mut out = [0.0; N];
    for (slot, p) in out.iter_mut().zip(parts) {
        *slot = parse_value(key, p)?;
    }
    Ok(out)
}

fn parse_enum<T: FromStr<Err = Error>>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|e: Error| Error::Configuration(format!("{key}: {e}")))
}

impl RunConfig {
    /// Sets one key. The seed also reseeds the training schedule.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let joint = |name: &str| {
            JOINT_NAMES
                .iter()
                .position(|j| *j == name)
                .ok_or_else(|| Error::Configuration(format!("unknown joint `{name}` in `{key}`")))
        };
        match key {
            "rows" => self.lattice.rows = parse_value(key, value)?,
            "cols" => self.lattice.cols = parse_value(key, value)?,
            "layout" => self.lattice.layout = parse_enum::<Layout>(key, value)?,
            "metric" => self.lattice.metric = parse_enum::<Metric>(key, value)?,
            "mode" => self.mode = parse_enum(key, value)?,
            "epochs" => self.schedule.epochs = parse_value(key, value)?,
            "alpha0" => self.schedule.alpha0 = parse_value(key, value)?,
            "alpha_end" => self.schedule.alpha_end = parse_value(key, value)?,
            "sigma0" => self.schedule.sigma0 = parse_value(key, value)?,
            "sigma_end" => self.schedule.sigma_end = parse_value(key, value)?,
            "decay" => self.schedule.decay = parse_enum::<Decay>(key, value)?,
            "seed" => {
                self.seed = parse_value(key, value)?;
                self.schedule.seed = self.seed;
            }
            "bmu_scope" => self.mrf.bmu_scope = parse_enum::<BmuScope>(key, value)?,
            "distance_normalization" => {
                self.mrf.distance_normalization = parse_enum::<DistanceNormalization>(key, value)?
            }
            "combination_threshold" => self.combination_threshold = parse_value(key, value)?,
            "mask" => self.mask = value.trim().to_string(),
            "dataset" => self.dataset = value.trim().to_string(),
            "out" => self.out = value.trim().to_string(),
            "n" => self.n = parse_value(key, value)?,
            "max_attempts" => self.max_attempts = parse_value(key, value)?,
            "touch_radius" => self.chain.touch_radius = parse_value(key, value)?,
            "upper_arm" => self.chain.upper_arm = parse_value(key, value)?,
            "forearm_hand" => self.chain.forearm_hand = parse_value(key, value)?,
            "shoulder_offset" => self.chain.shoulder_offset = parse_list(key, value)?,
            "neck_offset" => self.chain.neck_offset = parse_list(key, value)?,
            "face_target" => self.chain.face_target = parse_list(key, value)?,
            _ => {
                if let Some(name) = key.strip_prefix("limit.") {
                    let [lo, hi] = parse_list(key, value)?;
                    self.chain.limits[joint(name)?] = (lo, hi);
                } else if let Some(name) = key.strip_prefix("axis.") {
                    self.chain.axes[joint(name)?] = match value.trim() {
                        "x" => Axis::X,
                        "y" => Axis::Y,
                        "z" => Axis::Z,
                        other => {
                            return Err(Error::Configuration(format!(
                                "`{other}` is not an axis for `{key}`"
                            )))
                        }
                    };
                } else {
                    return Err(Error::Configuration(format!("unknown config key `{key}`")));
                }
            }
        }
        Ok(())
    }

    /// Applies a flat `key = value` document; `#` starts a comment line.
    pub fn apply_text(&mut self, text: &str, source_name: &str) -> Result<()> {
        for (k, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::parse(source_name, format!("line {}", k + 1), "expected `key = value`")
            })?;
            self.set(key.trim(), value.trim()).map_err(|e| {
                Error::parse(source_name, format!("line {}", k + 1), e.to_string())
            })?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Configuration(format!("cannot read config {}: {e}", path.display())))?;
        self.apply_text(&text, &path.display().to_string())
    }

    pub fn dataset_source(&self) -> Result<DatasetSource> {
        DatasetSource::parse(&self.dataset)
    }

    pub fn sampler_budget(&self, n: usize) -> u64 {
        if self.max_attempts == 0 {
            ATTEMPTS_PER_SAMPLE.saturating_mul(n as u64)
        } else {
            self.max_attempts
        }
    }

    /// Checks every parameter and that referenced input files exist.
    pub fn validate(&self) -> Result<()> {
        let as_config = |e: Error| match e {
            Error::Configuration(_) => e,
            other => Error::Configuration(other.to_string()),
        };
        self.lattice.validate().map_err(as_config)?;
        self.schedule.validate().map_err(as_config)?;
        self.chain.validate()?;
        if !(0.0..=1.0).contains(&self.combination_threshold) {
            return Err(Error::Configuration(format!(
                "combination_threshold must lie in [0, 1], got {}",
                self.combination_threshold
            )));
        }
        if self.mask != DEFAULT_MASK && !Path::new(&self.mask).is_file() {
            return Err(Error::Configuration(format!("mask file `{}` does not exist", self.mask)));
        }
        if let DatasetSource::File(p) = self.dataset_source()? {
            if !Path::new(&p).is_file() {
                return Err(Error::Configuration(format!("dataset file `{p}` does not exist")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_the_reference_setup() {
        let c = RunConfig::default();
        assert_eq!((c.lattice.rows, c.lattice.cols), (4, 4));
        assert_eq!(c.lattice.metric, Metric::Manhattan);
        assert_eq!(c.lattice.layout, Layout::HexOffset);
        assert_eq!(c.mask, DEFAULT_MASK);
        assert_eq!(c.dataset_source().unwrap(), DatasetSource::Synthesize(3216));
        assert_eq!(c.schedule.seed, c.seed);
    }

    #[test]
    fn text_overrides() {
        let mut c = RunConfig::default();
        c.apply_text(
            "# comment\nrows = 2\nmetric=hex-axial\nseed = 9\nlimit.wrist = -1,1\naxis.wrist = y\n\nface_target = 0.1,0,0\n",
            "cfg",
        )
        .unwrap();
        assert_eq!(c.lattice.rows, 2);
        assert_eq!(c.lattice.metric, Metric::HexAxial);
        assert_eq!(c.schedule.seed, 9);
        assert_eq!(c.chain.limits[6], (-1.0, 1.0));
        assert_eq!(c.chain.axes[6], Axis::Y);
        assert_eq!(c.chain.face_target, [0.1, 0.0, 0.0]);
    }

    #[test]
    fn bad_lines_report_location() {
        let mut c = RunConfig::default();
        match c.apply_text("rows = 2\nbogus = 1\n", "cfg") {
            Err(Error::Parse { location, .. }) => assert_eq!(location, "line 2"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(c.apply_text("rows 2\n", "cfg").is_err());
        assert!(c.apply_text("epochs = many\n", "cfg").is_err());
        assert!(c.apply_text("limit.knee = 0,1\n", "cfg").is_err());
    }

    #[test]
    fn validation_checks_inputs() {
        let mut c = RunConfig::default();
        c.dataset = "/nonexistent/file.csv".into();
        assert!(matches!(c.validate(), Err(Error::Configuration(_))));
        let mut c = RunConfig::default();
        c.set("alpha0", "2").unwrap();
        assert!(matches!(c.validate(), Err(Error::Configuration(_))));
        let mut c = RunConfig::default();
        c.set("dataset", "synthesize:0").unwrap();
        assert!(c.validate().is_err());
    }

    #[test]
    fn sampler_budget_scales_with_n() {
        let c = RunConfig::default();
        assert_eq!(c.sampler_budget(10), 500_000);
        let c = RunConfig { max_attempts: 7, ..RunConfig::default() };
        assert_eq!(c.sampler_budget(10), 7);
    }
}
