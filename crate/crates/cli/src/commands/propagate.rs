//! `propagate`: moves a stored field dump to another plane.

use std::path::Path;

use anyhow::{Context, Result};
use metascreen::export::{read_field_csv, write_field_csv, write_pgm, FieldMetadata};
use metascreen::spectrum::{intensity, propagate_with, Padding};
use metascreen::wave::WaveContext;
use serde_json::json;
use sha2::{Digest, Sha256};

use super::Outcome;
use crate::config::{hash_json, PaddingMode, RunConfig};
use crate::output::RunDir;

pub fn run(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let p = &cfg.propagate;
    let input = p
        .input
        .as_ref()
        .context("propagate.input: no field file given")?;
    let bytes = std::fs::read(input).with_context(|| format!("reading {}", input.display()))?;
    let wave = WaveContext::new(p.frequency, &cfg.medium).context("propagate.frequency")?;
    let field = read_field_csv(bytes.as_slice(), p.plane_z, wave)
        .with_context(|| format!("parsing {}", input.display()))?;
    let padding = match p.padding {
        PaddingMode::Auto => Padding::Auto,
        PaddingMode::None => Padding::None,
    };
    let effective = json!({
        "medium": cfg.medium,
        "propagate": {
            "plane_z": p.plane_z,
            "frequency": p.frequency,
            "dz": p.dz,
            "padding": p.padding,
        },
        "input_sha256": hex::encode(Sha256::digest(&bytes)),
    });
    let hash = hash_json(&effective)?;
    let moved = propagate_with(&field, p.dz, padding);

    let mut dir = RunDir::create(out, "propagate", &hash)?;
    dir.write_with("field.csv", |w| write_field_csv(&moved, w))?;
    dir.json("field.json", &FieldMetadata::of(&moved))?;
    dir.write_with("intensity.pgm", |w| write_pgm(&intensity(&moved), w))?;
    let root = dir.finish("propagate", &hash, None, &effective, true)?;
    println!(
        "propagated {}×{} field by {:.1} mm; wrote {}",
        moved.ny(),
        moved.nx(),
        p.dz * 1e3,
        root.display()
    );
    Ok(Outcome::Met)
}
