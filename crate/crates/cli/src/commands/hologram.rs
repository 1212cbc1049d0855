//! `hologram`: two-sided IASA panel, quantisation and verification renders.

use std::path::Path;

use anyhow::{bail, Context, Result};
use metascreen::export::{write_field_csv, write_pgm, FieldMetadata, PanelExport};
use metascreen::iasa::{
    design_two_sided_panel, resample_nearest, verify_hologram, HologramSpec, PhaseInit,
    SideVerification,
};
use metascreen::letters;
use metascreen::library::Side;
use metascreen::spectrum::{intensity, propagate};
use ndarray::{Array2, Axis};
use serde::Serialize;
use serde_json::json;

use super::{grid_with, table, Check, Outcome};
use crate::config::{hash_json, RunConfig};
use crate::output::{freq_tag, RunDir};

const MM: f64 = 1e-3;

/// Resolves a built-in letter or raster file and fits it to `shape`.
fn resolve_target(source: &str, shape: [usize; 2], strict: bool) -> Result<Array2<f64>> {
    let mut chars = source.chars();
    let image = match (chars.next(), chars.next()) {
        (Some(c), None) => letters::letter(c)
            .with_context(|| format!("no built-in raster for {c:?} (have C, L)"))?,
        _ => letters::load_raster(Path::new(source))
            .with_context(|| format!("loading target raster {source}"))?,
    };
    let [ny, nx] = shape;
    if image.dim() != (ny, nx) {
        let (gy, gx) = image.dim();
        if strict {
            bail!("target {source} is {gy}×{gx}, panel is {ny}×{nx} (strict mode)");
        }
        eprintln!("warning: resampling target {source} from {gy}×{gx} to {ny}×{nx}");
        return Ok(resample_nearest(&image, ny, nx));
    }
    Ok(image)
}

#[derive(Serialize)]
struct SideMetrics {
    correlation: f64,
    ideal_correlation: f64,
    nominal_distance_mm: f64,
    best_plane_mm: f64,
    best_plane_offset_mm: f64,
    best_plane_correlation: f64,
}

#[derive(Serialize)]
struct FrequencyMetrics {
    frequency_hz: f64,
    reflection: SideMetrics,
    transmission: SideMetrics,
}

fn side_name(side: Side) -> &'static str {
    match side {
        Side::Reflection => "r",
        Side::Transmission => "t",
    }
}

fn metrics(v: &SideVerification, nominal: f64) -> SideMetrics {
    SideMetrics {
        correlation: v.correlation,
        ideal_correlation: v.ideal_correlation,
        nominal_distance_mm: nominal / MM,
        best_plane_mm: v.best_plane.distance / MM,
        best_plane_offset_mm: (v.best_plane.distance - nominal) / MM,
        best_plane_correlation: v.best_plane.correlation,
    }
}

/// Central-row intensity across the plane sweep, one row per distance.
fn sweep_stack(v: &SideVerification, nominal: f64) -> Array2<f64> {
    let mid = v.field.ny() / 2;
    let rows: Vec<_> = v
        .plane_scores
        .iter()
        .map(|p| {
            intensity(&propagate(&v.field, p.distance - nominal))
                .index_axis(Axis(0), mid)
                .to_owned()
        })
        .collect();
    let nx = v.field.nx();
    Array2::from_shape_fn((rows.len(), nx), |(i, x)| rows[i][x])
}

pub fn run(cfg: &RunConfig, out: &Path, cache: &Path) -> Result<Outcome> {
    let h = &cfg.hologram;
    let target_r = resolve_target(&h.target_r, h.shape, cfg.strict)?;
    let target_t = resolve_target(&h.target_t, h.shape, cfg.strict)?;
    let spec = HologramSpec {
        target_r,
        z_r: h.z_r,
        target_t,
        z_t: h.z_t,
        frequency: h.frequency,
        pitch: h.pitch,
        max_iterations: h.max_iterations,
        tolerance: h.tolerance,
        init: cfg.seed.map_or(PhaseInit::Zero, |seed| PhaseInit::Random { seed }),
    };
    spec.validate().context("hologram")?;
    let effective = json!({
        "geometry": cfg.geometry,
        "medium": cfg.medium,
        "grid": cfg.grid,
        "hologram": h,
        "seed": cfg.seed,
        "targets_sha256": hash_json(&(spec.target_r.iter().collect::<Vec<_>>(), spec.target_t.iter().collect::<Vec<_>>()))?,
    });
    let hash = hash_json(&effective)?;

    let mut freqs = vec![h.frequency];
    freqs.extend(h.eval_frequencies.iter().filter(|&&f| (f - h.frequency).abs() > 1e-6));
    let table = table(cfg, grid_with(cfg, &freqs), cache)?;
    let design = match design_two_sided_panel(&spec, &table) {
        Err(metascreen::Error::InfeasibleCells(cells)) => {
            bail!("cells {cells:?} have no feasible selection")
        }
        other => other?,
    };

    let mut dir = RunDir::create(out, "hologram", &hash)?;
    dir.json("panel.json", &PanelExport::of(&design))?;
    let to_unit = |m: &Array2<f64>| m.mapv(|p| p + std::f64::consts::PI);
    dir.write_with("phase_r.pgm", |w| write_pgm(&to_unit(&design.iasa_r.phase_map), w))?;
    dir.write_with("phase_t.pgm", |w| write_pgm(&to_unit(&design.iasa_t.phase_map), w))?;
    dir.write_with("h1_map.pgm", |w| write_pgm(&design.h1_map, w))?;
    dir.write_with("w2_map.pgm", |w| write_pgm(&design.w2_map, w))?;
    let (hr, ht) = (
        &design.iasa_r.correlation_history,
        &design.iasa_t.correlation_history,
    );
    let history: Vec<String> = (0..hr.len().max(ht.len()))
        .map(|i| {
            let cell = |v: &Vec<f64>| v.get(i).map_or(String::new(), |c| format!("{c:.12}"));
            format!("{},{},{}", i + 1, cell(hr), cell(ht))
        })
        .collect();
    dir.csv("iasa_history.csv", "iteration,correlation_r,correlation_t", &history)?;

    let mut checks = Vec::new();
    let mut per_freq = Vec::new();
    for &f in &freqs {
        let v = verify_hologram(&design, &table, &spec, f)?;
        let tag = freq_tag(f);
        for s in [&v.reflection, &v.transmission] {
            let name = side_name(s.side);
            let nominal = spec.distance(s.side);
            dir.write_with(&format!("render_{name}_{tag}.pgm"), |w| {
                write_pgm(&intensity(&s.field), w)
            })?;
            dir.write_with(&format!("field_{name}_{tag}.csv"), |w| write_field_csv(&s.field, w))?;
            dir.json(&format!("field_{name}_{tag}.json"), &FieldMetadata::of(&s.field))?;
            let rows: Vec<String> = s
                .plane_scores
                .iter()
                .map(|p| format!("{:.3},{:.12}", p.distance / MM, p.correlation))
                .collect();
            dir.csv(&format!("zsweep_{name}_{tag}.csv"), "distance_mm,correlation", &rows)?;
            let stack = sweep_stack(s, nominal);
            dir.write_with(&format!("zstack_{name}_{tag}.pgm"), |w| write_pgm(&stack, w))?;
            if f == h.frequency {
                checks.push(Check::at_least(
                    format!("{name} correlation at {tag}"),
                    s.correlation,
                    h.min_correlation,
                ));
            }
            println!(
                "{tag} {name}: correlation {:.3} (ideal {:.3}), best plane {:.0} mm ({:+.0} mm)",
                s.correlation,
                s.ideal_correlation,
                s.best_plane.distance / MM,
                (s.best_plane.distance - nominal) / MM
            );
        }
        per_freq.push(FrequencyMetrics {
            frequency_hz: f,
            reflection: metrics(&v.reflection, spec.distance(Side::Reflection)),
            transmission: metrics(&v.transmission, spec.distance(Side::Transmission)),
        });
    }
    let outcome = Outcome::from_checks(&checks);
    dir.json(
        "metrics.json",
        &json!({
            "iterations_r": hr.len(),
            "iterations_t": ht.len(),
            "iasa_correlation_r": design.iasa_r.final_correlation(),
            "iasa_correlation_t": design.iasa_t.final_correlation(),
            "quantization": design.stats,
            "frequencies": per_freq,
            "checks": checks,
        }),
    )?;
    let root = dir.finish(
        "hologram",
        &hash,
        Some(&table.content_hash()),
        &effective,
        outcome == Outcome::Met,
    )?;
    println!("wrote {}", root.display());
    Ok(outcome)
}
