use std::path::{Path, PathBuf};

use semtune::filtering::{Dispersion, FilterConfig};
use semtune::matan::DEFAULT_COMPONENTS;
use semtune::metrics::DEFAULT_BIN_WIDTH;
use semtune::reweight::DEFAULT_GAMMA;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Everything a run depends on. Loaded from TOML, overridden by flags, and
/// echoed into every JSON output.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub paths: Paths,
    pub filter: FilterParams,
    pub reweight: ReweightParams,
    pub bins: BinParams,
    pub svd: SvdParams,
    pub pca: PcaParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Paths {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dataset: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pool: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub embeddings: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dw: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub features: Option<PathBuf>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub matrices: Vec<PathBuf>,
    pub out_dir: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Self {
            dataset: None,
            pool: None,
            embeddings: None,
            w: None,
            dw: None,
            features: None,
            matrices: Vec::new(),
            out_dir: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Baseline {
    #[default]
    None,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FilterParams {
    pub lambda_weight: f64,
    pub mean_min: f64,
    pub mean_max: f64,
    pub replace_fraction: f64,
    pub dispersion: Dispersion,
    pub baseline: Baseline,
}

impl Default for FilterParams {
    fn default() -> Self {
        let d = FilterConfig::default();
        Self {
            lambda_weight: d.lambda_weight,
            mean_min: d.mean_min,
            mean_max: d.mean_max,
            replace_fraction: d.replace_fraction,
            dispersion: d.dispersion,
            baseline: Baseline::None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReweightParams {
    pub gamma: f64,
}

impl Default for ReweightParams {
    fn default() -> Self {
        Self {
            gamma: DEFAULT_GAMMA,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BinParams {
    pub bin_width: f64,
    pub accuracy: bool,
    pub deviation: bool,
}

impl Default for BinParams {
    fn default() -> Self {
        Self {
            bin_width: DEFAULT_BIN_WIDTH,
            accuracy: true,
            deviation: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SvdParams {
    pub rank: usize,
}

impl Default for SvdParams {
    fn default() -> Self {
        Self { rank: 8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PcaParams {
    pub components: usize,
    pub write_projections: bool,
}

impl Default for PcaParams {
    fn default() -> Self {
        Self {
            components: DEFAULT_COMPONENTS,
            write_projections: false,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.message().to_string()))
    }

    pub fn filter_config(&self) -> FilterConfig {
        let f = &self.filter;
        FilterConfig {
            lambda_weight: f.lambda_weight,
            mean_min: f.mean_min,
            mean_max: f.mean_max,
            replace_fraction: f.replace_fraction,
            dispersion: f.dispersion,
            seed: self.seed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(RunConfig::parse("").unwrap(), RunConfig::default());
    }

    #[test]
    fn nested_values_are_read() {
        let cfg = RunConfig::parse(
            r#"
            seed = 9
            [paths]
            dataset = "d.jsonl"
            [filter]
            lambda_weight = 0.5
            dispersion = "std_dev"
            baseline = "random"
            [bins]
            bin_width = 0.1
            "#,
        )
        .unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.paths.dataset.as_deref(), Some(Path::new("d.jsonl")));
        assert_eq!(cfg.filter.dispersion, Dispersion::StdDev);
        assert_eq!(cfg.filter.baseline, Baseline::Random);
        assert_eq!(cfg.filter.mean_max, 0.8);
        assert_eq!(cfg.bins.bin_width, 0.1);
        assert_eq!(cfg.filter_config().seed, 9);
        assert_eq!(cfg.filter_config().lambda_weight, 0.5);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        for text in [
            "sed = 1",
            "[filter]\nlamda = 1.0",
            "[extra]\nx = 1",
            "[paths]\nout = \"o\"",
        ] {
            let err = RunConfig::parse(text).unwrap_err();
            assert!(matches!(err, CliError::Config(_)), "{text}");
        }
    }

    #[test]
    fn wrong_types_are_rejected() {
        assert!(RunConfig::parse("seed = \"x\"").is_err());
        assert!(RunConfig::parse("[svd]\nrank = -1").is_err());
    }
}
