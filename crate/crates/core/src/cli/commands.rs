use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::config::{DatasetSource, Mode, RunConfig, DEFAULT_MASK};
use crate::analysis::{
    build_distance_map, build_encoding_report, build_heatmaps, cluster_separation_ratio,
    AnalysisDocument,
};
use crate::datagen::{
    fit_normalization, load_csv, synthesize_self_touch, to_csv_string, ChainSpec,
    NormalizationParams,
};
use crate::error::{Error, Result};
use crate::io::write_atomic;
use crate::json::to_json_string;
use crate::lattice::LatticeSpec;
use crate::mrf::{
    default_paper_mask, load_mask, masked_quantization_error, masked_topographic_error, mrf_train,
    MrfConfig, ReceptiveFieldMask,
};
use crate::numfmt::sig17;
use crate::som::{init_codebook, quantization_error, topographic_error, train, Codebook, TrainLog};

pub const DATASET_FILE: &str = "dataset.csv";
pub const MANIFEST_FILE: &str = "generation.json";
pub const MODEL_FILE: &str = "model.json";
pub const TRAIN_LOG_FILE: &str = "train_log.csv";
pub const METRICS_FILE: &str = "metrics.json";
pub const ANALYSIS_FILE: &str = "analysis.json";

const MODEL_FORMAT: &str = "mrf-som-model/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationManifest {
    pub seed: u64,
    pub n: usize,
    pub max_attempts: u64,
    pub attempts: u64,
    pub acceptance_rate: f64,
    pub chain: ChainSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskRecord {
    pub rows: usize,
    pub cols: usize,
    pub active: Vec<Vec<u8>>,
    pub labels: Option<Vec<String>>,
}

/// Everything needed to rerun or analyse a trained map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub mode: Mode,
    pub lattice: LatticeSpec,
    pub mrf: MrfConfig,
    pub mask: MaskRecord,
    pub normalization: NormalizationParams,
    pub codebook: Vec<Vec<f64>>,
    pub config: RunConfig,
}

/// Validated in-memory form of a [`ModelFile`].
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub mode: Mode,
    pub mrf: MrfConfig,
    pub mask: ReceptiveFieldMask,
    pub normalization: NormalizationParams,
    pub codebook: Codebook,
    pub config: RunConfig,
}

impl Model {
    pub fn to_file(&self) -> ModelFile {
        ModelFile {
            format: MODEL_FORMAT.to_string(),
            mode: self.mode,
            lattice: self.codebook.lattice,
            mrf: self.mrf,
            mask: MaskRecord {
                rows: self.mask.rows,
                cols: self.mask.cols,
                active: self
                    .mask
                    .active
                    .rows()
                    .into_iter()
                    .map(|r| r.iter().map(|&a| a as u8).collect())
                    .collect(),
                labels: self.mask.labels.clone(),
            },
            normalization: self.normalization.clone(),
            codebook: self.codebook.weights.rows().into_iter().map(|r| r.to_vec()).collect(),
            config: self.config.clone(),
        }
    }

    pub fn from_file(file: ModelFile) -> Result<Self> {
        if file.format != MODEL_FORMAT {
            return Err(Error::Configuration(format!("unsupported model format `{}`", file.format)));
        }
        let dims = file.codebook.first().map_or(0, Vec::len);
        if file.codebook.iter().any(|r| r.len() != dims) {
            return Err(Error::Configuration("codebook rows differ in length".into()));
        }
        let weights = Array2::from_shape_vec(
            (file.codebook.len(), dims),
            file.codebook.into_iter().flatten().collect(),
        )
        .map_err(|e| Error::Configuration(format!("bad codebook shape: {e}")))?;
        let codebook = Codebook::new(file.lattice, weights)?;

        let mask_dims = file.mask.active.first().map_or(0, Vec::len);
        if file.mask.active.iter().any(|r| r.len() != mask_dims || r.iter().any(|&v| v > 1)) {
            return Err(Error::Configuration("mask rows must be equal-length 0/1 lists".into()));
        }
        let active = Array2::from_shape_vec(
            (file.mask.active.len(), mask_dims),
            file.mask.active.into_iter().flatten().map(|v| v == 1).collect(),
        )
        .map_err(|e| Error::Configuration(format!("bad mask shape: {e}")))?;
        let mask = ReceptiveFieldMask::new(file.mask.rows, file.mask.cols, active, file.mask.labels)?;
        check_mask_fits(&mask, &codebook.lattice, codebook.dims())?;

        let norm = file.normalization;
        if norm.mean.len() != codebook.dims()
            || norm.std.len() != codebook.dims()
            || norm.std.iter().any(|s| !(*s > 0.0))
        {
            return Err(Error::Configuration("normalization does not match the codebook".into()));
        }
        Ok(Self {
            mode: file.mode,
            mrf: file.mrf,
            mask,
            normalization: norm,
            codebook,
            config: file.config,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        to_json_string(&self.to_file())
    }

    pub fn from_json(text: &str, source_name: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text).map_err(|e| {
            Error::parse(source_name, format!("line {}, column {}", e.line(), e.column()), e.to_string())
        })?;
        Self::from_file(file)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| {
            if e.kind() == std::io::ErrorKind::NotFound {
                Error::Configuration(format!("model file `{}` does not exist", path.display()))
            } else {
                Error::io(path, e)
            }
        })?;
        Self::from_json(&text, &path.display().to_string())
    }
}

fn check_mask_fits(mask: &ReceptiveFieldMask, lattice: &LatticeSpec, dims: usize) -> Result<()> {
    if mask.rows != lattice.rows || mask.cols != lattice.cols || mask.dims() != dims {
        return Err(Error::Configuration(format!(
            "mask is {}x{} over {} inputs, expected {}x{} over {}",
            mask.rows,
            mask.cols,
            mask.dims(),
            lattice.rows,
            lattice.cols,
            dims
        )));
    }
    Ok(())
}

fn prepare_out_dir(cfg: &RunConfig) -> Result<PathBuf> {
    let dir = PathBuf::from(&cfg.out);
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    Ok(dir)
}

/// The built-in mask only fits a 4x4 map over 7 joints. In `som` mode the mask
/// just supplies group labels, so other shapes fall back to one unlabelled group.
fn resolve_mask(cfg: &RunConfig, dims: usize) -> Result<ReceptiveFieldMask> {
    let mask = if cfg.mask == DEFAULT_MASK {
        let builtin = default_paper_mask();
        if cfg.mode == Mode::Som && check_mask_fits(&builtin, &cfg.lattice, dims).is_err() {
            return ReceptiveFieldMask::all_true(cfg.lattice.rows, cfg.lattice.cols, dims);
        }
        builtin
    } else {
        load_mask(Path::new(&cfg.mask))?
    };
    check_mask_fits(&mask, &cfg.lattice, dims)?;
    Ok(mask)
}

fn load_dataset(cfg: &RunConfig) -> Result<Array2<f64>> {
    match cfg.dataset_source()? {
        DatasetSource::Synthesize(n) => {
            Ok(synthesize_self_touch(&cfg.chain, n, cfg.seed, cfg.sampler_budget(n))?.0)
        }
        DatasetSource::File(p) => load_csv(Path::new(&p)),
    }
}

/// Writes `dataset.csv` and `generation.json`.
pub fn cmd_generate(cfg: &RunConfig) -> Result<GenerationManifest> {
    cfg.chain.validate()?;
    if cfg.n == 0 {
        return Err(Error::Configuration("n must be at least 1".into()));
    }
    let budget = cfg.sampler_budget(cfg.n);
    let (data, report) = synthesize_self_touch(&cfg.chain, cfg.n, cfg.seed, budget)?;
    let manifest = GenerationManifest {
        seed: cfg.seed,
        n: cfg.n,
        max_attempts: budget,
        attempts: report.attempts,
        acceptance_rate: report.acceptance_rate,
        chain: cfg.chain.clone(),
    };
    let csv = to_csv_string(data.view())?;
    let manifest_json = to_json_string(&manifest)?;

    let dir = prepare_out_dir(cfg)?;
    write_atomic(&dir.join(DATASET_FILE), csv.as_bytes())?;
    write_atomic(&dir.join(MANIFEST_FILE), manifest_json.as_bytes())?;
    Ok(manifest)
}

pub fn train_log_csv(log: &TrainLog) -> String {
    let mut out = String::from("epoch,quantization_error,topographic_error\n");
    for (e, s) in log.epochs.iter().enumerate() {
        out.push_str(&format!(
            "{},{},{}\n",
            e + 1,
            sig17(s.quantization_error),
            sig17(s.topographic_error)
        ));
    }
    out
}

/// Normalizes the dataset, trains and returns the model with its log.
pub fn train_model(cfg: &RunConfig) -> Result<(Model, TrainLog)> {
    cfg.validate()?;
    let data = load_dataset(cfg)?;
    let dims = data.ncols();
    let mask = resolve_mask(cfg, dims)?;
    let normalization = fit_normalization(data.view())?;
    let z = normalization.apply(data.view())?;
    let init = init_codebook(cfg.lattice, dims, cfg.seed)?;
    let (codebook, log, mask) = match cfg.mode {
        Mode::Mrf => {
            let (cb, log) = mrf_train(&init, z.view(), &mask, &cfg.schedule, &cfg.mrf)?;
            (cb, log, mask)
        }
        Mode::Som => {
            let (cb, log) = train(&init, z.view(), &cfg.schedule)?;
            (cb, log, mask.fully_connected())
        }
    };
    let model = Model {
        mode: cfg.mode,
        mrf: cfg.mrf,
        mask,
        normalization,
        codebook,
        config: cfg.clone(),
    };
    Ok((model, log))
}

/// Writes `model.json` and `train_log.csv`.
pub fn cmd_train(cfg: &RunConfig) -> Result<Model> {
    let (model, log) = train_model(cfg)?;
    let model_json = model.to_json()?;
    let log_csv = train_log_csv(&log);
    let dir = prepare_out_dir(cfg)?;
    write_atomic(&dir.join(MODEL_FILE), model_json.as_bytes())?;
    write_atomic(&dir.join(TRAIN_LOG_FILE), log_csv.as_bytes())?;
    Ok(model)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub mode: Mode,
    pub samples: usize,
    pub quantization_error: f64,
    pub topographic_error: Option<f64>,
    pub cluster_separation_ratio: Option<f64>,
}

fn separation(model: &Model) -> Result<Option<f64>> {
    let report = build_encoding_report(&model.codebook, &model.mask, model.config.combination_threshold)?;
    Ok(match cluster_separation_ratio(&report) {
        Ok(r) if r.is_finite() => Some(r),
        Ok(_) => None,
        Err(Error::Report(msg)) => {
            log::info!("cluster separation ratio not available: {msg}");
            None
        }
        Err(e) => return Err(e),
    })
}

pub fn evaluate_model(model: &Model, cfg: &RunConfig) -> Result<Metrics> {
    cfg.validate()?;
    let data = load_dataset(cfg)?;
    if data.ncols() != model.codebook.dims() {
        return Err(Error::Data(format!(
            "dataset has {} columns but the model expects {}",
            data.ncols(),
            model.codebook.dims()
        )));
    }
    let z = model.normalization.apply(data.view())?;
    let two_plus = model.codebook.neurons() >= 2;
    let (qe, te) = match model.mode {
        Mode::Som => (
            quantization_error(&model.codebook, z.view())?,
            if two_plus { Some(topographic_error(&model.codebook, z.view())?) } else { None },
        ),
        Mode::Mrf => (
            masked_quantization_error(&model.codebook, z.view(), &model.mask, &model.mrf)?,
            if two_plus {
                Some(masked_topographic_error(&model.codebook, z.view(), &model.mask, &model.mrf)?)
            } else {
                None
            },
        ),
    };
    Ok(Metrics {
        mode: model.mode,
        samples: data.nrows(),
        quantization_error: qe,
        topographic_error: te,
        cluster_separation_ratio: separation(model)?,
    })
}

/// Writes `metrics.json`.
pub fn cmd_evaluate(model: &Model, cfg: &RunConfig) -> Result<Metrics> {
    let metrics = evaluate_model(model, cfg)?;
    let json = to_json_string(&metrics)?;
    let dir = prepare_out_dir(cfg)?;
    write_atomic(&dir.join(METRICS_FILE), json.as_bytes())?;
    Ok(metrics)
}

/// Writes per-joint heatmaps (CSV, PGM and PGM connection mask) and
/// `analysis.json`. Returns the written file names.
pub fn cmd_export(model: &Model, cfg: &RunConfig) -> Result<Vec<String>> {
    let heatmaps = build_heatmaps(&model.codebook, &model.mask)?;
    let doc = AnalysisDocument {
        distance_map: build_distance_map(&model.codebook, &model.mask)?,
        encoding_report: build_encoding_report(&model.codebook, &model.mask, cfg.combination_threshold)?,
        cluster_separation_ratio: separation(model)?,
    };
    let mut files: Vec<(String, Vec<u8>)> = Vec::new();
    for (j, name) in heatmaps.joints.iter().enumerate() {
        files.push((format!("heatmap_{name}.csv"), heatmaps.to_csv(j).into_bytes()));
        files.push((format!("heatmap_{name}.pgm"), heatmaps.to_pgm(j)));
        files.push((format!("heatmap_{name}.mask.pgm"), heatmaps.mask_pgm(j)));
    }
    files.push((ANALYSIS_FILE.to_string(), to_json_string(&doc)?.into_bytes()));

    let dir = prepare_out_dir(cfg)?;
    for (name, bytes) in &files {
        write_atomic(&dir.join(name), bytes)?;
    }
    Ok(files.into_iter().map(|(n, _)| n).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick_config(out: &Path) -> RunConfig {
        let mut cfg = RunConfig::default();
        cfg.set("dataset", "synthesize:60").unwrap();
        cfg.set("epochs", "3").unwrap();
        cfg.set("out", out.to_str().unwrap()).unwrap();
        cfg
    }

    #[test]
    fn model_json_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = quick_config(dir.path());
        let (model, _) = train_model(&cfg).unwrap();
        let text = model.to_json().unwrap();
        let back = Model::from_json(&text, "mem").unwrap();
        assert_eq!(back, model);
        assert_eq!(back.to_json().unwrap(), text);
    }

    #[test]
    fn corrupted_model_is_a_parse_error() {
        let dir = tempfile::tempdir().unwrap();
        let (model, _) = train_model(&quick_config(dir.path())).unwrap();
        let text = model.to_json().unwrap();
        let cut = &text[..text.len() / 2];
        assert!(matches!(Model::from_json(cut, "m"), Err(Error::Parse { .. })));
        let mut file = model.to_file();
        file.codebook.pop();
        assert!(Model::from_file(file).is_err());
    }

    #[test]
    fn train_log_has_one_line_per_epoch() {
        let dir = tempfile::tempdir().unwrap();
        let (_, log) = train_model(&quick_config(dir.path())).unwrap();
        let csv = train_log_csv(&log);
        assert_eq!(csv.lines().count(), 4);
        assert!(csv.starts_with("epoch,quantization_error,topographic_error\n1,"));
    }
}
