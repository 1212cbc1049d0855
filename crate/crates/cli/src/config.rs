//! Run configuration: a JSON file, command-line overrides, and the hash that
//! names each run's output directory.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use metascreen::design::{LineDesignSpec, ReflectionGoal};
use metascreen::duct::UnitCellGeometry;
use metascreen::library::SweepGrid;
use metascreen::profiles::FocalPoint;
use metascreen::verify::RenderGrid;
use metascreen::wave::Medium;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// All lengths in metres, angles in radians, frequencies in hertz.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub geometry: UnitCellGeometry,
    pub medium: Medium,
    pub grid: SweepGrid,
    pub sweep: SweepConfig,
    pub design: DesignConfig,
    pub hologram: HologramConfig,
    pub propagate: PropagateConfig,
    pub seed: Option<u64>,
    pub strict: bool,
    pub output_dir: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            geometry: UnitCellGeometry::default(),
            medium: Medium::AIR,
            grid: SweepGrid::design_default(),
            sweep: SweepConfig::default(),
            design: DesignConfig::default(),
            hologram: HologramConfig::default(),
            propagate: PropagateConfig::default(),
            seed: None,
            strict: false,
            output_dir: None,
            cache_dir: None,
        }
    }
}

/// Where the one-dimensional slices cut the grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub reference_h1: f64,
    pub reference_w2: f64,
    pub reference_w: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            reference_h1: 0.031,
            reference_w2: 0.001,
            reference_w: 0.008,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DesignConfig {
    pub n_cells: usize,
    pub pitch: f64,
    pub design_frequency: f64,
    pub reflection: ReflectionGoal,
    pub transmission_focus: FocalPoint,
    pub eval_frequencies: Vec<f64>,
    pub amplitude_split: Option<f64>,
    pub render: RenderGrid,
}

impl Default for DesignConfig {
    fn default() -> Self {
        Self {
            n_cells: 24,
            pitch: 0.0143,
            design_frequency: 6000.0,
            reflection: ReflectionGoal::Steer {
                angle: 45f64.to_radians(),
            },
            transmission_focus: FocalPoint::on_axis(0.25),
            eval_frequencies: vec![5500.0, 6000.0, 6500.0],
            amplitude_split: None,
            render: RenderGrid::default(),
        }
    }
}

impl DesignConfig {
    pub fn spec(&self) -> Result<LineDesignSpec> {
        if self.n_cells == 0 {
            bail!("design.n_cells: layout needs at least one cell");
        }
        let mut eval = self.eval_frequencies.clone();
        if !eval.iter().any(|f| (f - self.design_frequency).abs() < 1e-6) {
            eval.push(self.design_frequency);
        }
        eval.sort_by(f64::total_cmp);
        Ok(LineDesignSpec {
            n_cells: self.n_cells,
            pitch: self.pitch,
            design_frequency: self.design_frequency,
            reflection: self.reflection,
            transmission_focus: self.transmission_focus,
            eval_frequencies: eval,
            amplitude_split: self.amplitude_split,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HologramConfig {
    /// A built-in letter (`"C"`, `"L"`) or a raster file (`.txt` or PGM).
    pub target_r: String,
    pub target_t: String,
    pub z_r: f64,
    pub z_t: f64,
    pub frequency: f64,
    /// Off-design frequencies to verify at.
    pub eval_frequencies: Vec<f64>,
    pub pitch: f64,
    /// Panel shape `[ny, nx]`; other raster shapes are resampled.
    pub shape: [usize; 2],
    pub max_iterations: usize,
    pub tolerance: f64,
    pub min_correlation: f64,
}

impl Default for HologramConfig {
    fn default() -> Self {
        Self {
            target_r: "C".into(),
            target_t: "L".into(),
            z_r: -0.12,
            z_t: 0.15,
            frequency: 6000.0,
            eval_frequencies: vec![5500.0, 6500.0],
            pitch: 0.0143,
            shape: [25, 25],
            max_iterations: 200,
            tolerance: 1e-4,
            min_correlation: 0.45,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum PaddingMode {
    #[default]
    Auto,
    None,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PropagateConfig {
    /// Field dump in the `x_mm,y_mm,re_p,im_p` format.
    pub input: Option<PathBuf>,
    pub plane_z: f64,
    pub frequency: f64,
    pub dz: f64,
    pub padding: PaddingMode,
}

impl Default for PropagateConfig {
    fn default() -> Self {
        Self {
            input: None,
            plane_z: 0.0,
            frequency: 6000.0,
            dz: 0.1,
            padding: PaddingMode::Auto,
        }
    }
}

/// Reads a config file, reporting the offending key path and position.
pub fn load(path: &Path) -> Result<RunConfig> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse(&text).with_context(|| format!("invalid config {}", path.display()))
}

pub fn parse(text: &str) -> Result<RunConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        anyhow::anyhow!("key `{path}`: {inner}")
    })
}

/// Hex SHA-256 of the canonical JSON of `value`.
pub fn hash_json<T: Serialize>(value: &T) -> Result<String> {
    let canonical = serde_json::to_value(value)?;
    let bytes = serde_json::to_vec(&canonical)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_is_default() {
        let cfg = parse("{}").unwrap();
        assert_eq!(cfg.design.n_cells, 24);
        assert_eq!(cfg.grid, SweepGrid::design_default());
    }

    #[test]
    fn unknown_keys_are_rejected_with_path() {
        let err = parse("{\"design\": {\"n_cell\": 3}}").unwrap_err().to_string();
        assert!(err.contains("design"), "{err}");
        assert!(err.contains("n_cell"), "{err}");
        let err = parse("{\"geometry\": {\"h9\": 1}}").unwrap_err().to_string();
        assert!(err.contains("h9"), "{err}");
        let err = parse("{\"design\": {\"transmission_focus\": {\"z\": 1, \"q\": 2}}}")
            .unwrap_err()
            .to_string();
        assert!(err.contains("q"), "{err}");
    }

    #[test]
    fn reports_line_of_syntax_errors() {
        let err = parse("{\n  \"seed\": ,\n}").unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
    }

    #[test]
    fn hash_is_key_order_independent() {
        let a: serde_json::Value = serde_json::from_str("{\"a\": 1, \"b\": [2.5]}").unwrap();
        let b: serde_json::Value = serde_json::from_str("{\"b\": [2.5], \"a\": 1}").unwrap();
        assert_eq!(hash_json(&a).unwrap(), hash_json(&b).unwrap());
    }

    #[test]
    fn zero_cells_rejected() {
        let cfg = DesignConfig {
            n_cells: 0,
            ..DesignConfig::default()
        };
        assert!(cfg.spec().unwrap_err().to_string().contains("at least one cell"));
    }
}
