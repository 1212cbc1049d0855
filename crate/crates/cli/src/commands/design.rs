//! `design`: line-array profile, cell selection and predicted fields.

use std::path::Path;

use anyhow::{Context, Result};
use metascreen::design::{design_line_array, ReflectionGoal};
use metascreen::export::{write_map_csv, write_pgm};
use metascreen::verify::{DesignReport, IntensityMap};
use metascreen::wave::{wrap_phase, WaveContext};
use metascreen::Error;
use serde::Serialize;
use serde_json::json;

use super::{grid_with, table, Check, Outcome};
use crate::config::{hash_json, RunConfig};
use crate::output::{freq_tag, RunDir};

const MM: f64 = 1e-3;
const STEERING_TOLERANCE_DEG: f64 = 3.0;
const SIDE_LOBE_LIMIT: f64 = 0.5;

#[derive(Serialize)]
struct SelectionRow {
    index: usize,
    x_mm: f64,
    h1_mm: f64,
    w2_mm: f64,
    w_mm: f64,
    target_phi_r_rad: f64,
    target_phi_t_rad: f64,
    achieved_phi_r_rad: f64,
    achieved_phi_t_rad: f64,
    abs_r: f64,
    abs_t: f64,
    err_r_rad: f64,
    err_t_rad: f64,
}

#[derive(Serialize)]
struct Summary {
    focus_x_mm: Option<f64>,
    focus_z_mm: Option<f64>,
    focus_error_mm: Option<f64>,
    focal_gain: f64,
    diffraction_only: bool,
    steering_angle_deg: Option<f64>,
    side_lobe_ratio: Option<f64>,
}

impl Summary {
    fn of(r: &DesignReport) -> Self {
        Self {
            focus_x_mm: r.focus.map(|f| f.x / MM),
            focus_z_mm: r.focus.map(|f| f.z / MM),
            focus_error_mm: r.focus_error.map(|e| e / MM),
            focal_gain: r.focal_gain,
            diffraction_only: r.diffraction_only,
            steering_angle_deg: r.steering.map(|l| l.angle.to_degrees()),
            side_lobe_ratio: r.steering.map(|l| l.side_lobe_ratio),
        }
    }
}

#[derive(Serialize)]
struct FrequencyEntry {
    frequency_hz: f64,
    ideal: Summary,
    quantized: Summary,
}

fn write_map(dir: &mut RunDir, stem: &str, map: &IntensityMap, with_csv: bool) -> Result<()> {
    dir.write_with(&format!("{stem}.pgm"), |w| write_pgm(&map.values, w))?;
    if with_csv {
        dir.write_with(&format!("{stem}.csv"), |w| write_map_csv(map, w))?;
    }
    Ok(())
}

pub fn run(cfg: &RunConfig, out: &Path, cache: &Path) -> Result<Outcome> {
    let spec = cfg.design.spec()?;
    cfg.design.render.validate().context("design.render")?;
    let effective = json!({
        "geometry": cfg.geometry,
        "medium": cfg.medium,
        "grid": cfg.grid,
        "design": cfg.design,
    });
    let hash = hash_json(&effective)?;
    let table = table(cfg, grid_with(cfg, &spec.eval_frequencies), cache)?;

    let design = match design_line_array(&spec, &table, &cfg.design.render) {
        Err(Error::InfeasibleCells(cells)) => {
            for &i in &cells {
                eprintln!("cell {i}: no grid cell meets the amplitude split");
            }
            anyhow::bail!("{} of {} cells have no feasible selection", cells.len(), spec.n_cells);
        }
        other => other?,
    };

    let mut dir = RunDir::create(out, "design", &hash)?;
    dir.write_with("profile.csv", |w| design.profile.write_csv(&design.layout, w))?;
    let xs = design.layout.xs();
    let rows: Vec<SelectionRow> = design
        .selections
        .iter()
        .enumerate()
        .map(|(i, s)| SelectionRow {
            index: i,
            x_mm: xs[i] / MM,
            h1_mm: s.h1 / MM,
            w2_mm: s.w2 / MM,
            w_mm: s.w / MM,
            target_phi_r_rad: wrap_phase(design.profile.phi_r[i]).unwrap_or(f64::NAN),
            target_phi_t_rad: wrap_phase(design.profile.phi_t[i]).unwrap_or(f64::NAN),
            achieved_phi_r_rad: s.achieved_r.arg(),
            achieved_phi_t_rad: s.achieved_t.arg(),
            abs_r: s.achieved_r.norm(),
            abs_t: s.achieved_t.norm(),
            err_r_rad: s.phase_error_r,
            err_t_rad: s.phase_error_t,
        })
        .collect();
    dir.json("selections.json", &rows)?;

    let mut checks = Vec::new();
    let mut entries = Vec::new();
    for rep in &design.reports {
        let f = rep.frequency;
        let tag = freq_tag(f);
        let lambda = WaveContext::new(f, &cfg.medium)?.wavelength;
        let on_design = (f - spec.design_frequency).abs() < 1e-6;
        write_map(&mut dir, &format!("map_t_quantized_{tag}"), &rep.quantized.transmission, true)?;
        write_map(&mut dir, &format!("map_r_quantized_{tag}"), &rep.quantized.reflection, true)?;
        write_map(&mut dir, &format!("map_t_ideal_{tag}"), &rep.ideal.transmission, false)?;
        write_map(&mut dir, &format!("map_r_ideal_{tag}"), &rep.ideal.reflection, false)?;
        let ff: Vec<String> = rep
            .ideal
            .reflection_far_field
            .angles
            .iter()
            .zip(&rep.ideal.reflection_far_field.intensity)
            .zip(&rep.quantized.reflection_far_field.intensity)
            .map(|((a, i), q)| format!("{:.4},{i:.11e},{q:.11e}", a.to_degrees()))
            .collect();
        dir.csv(
            &format!("far_field_r_{tag}.csv"),
            "angle_deg,intensity_ideal,intensity_quantized",
            &ff,
        )?;

        let err = |r: &DesignReport| r.focus_error.map_or(f64::INFINITY, |e| e / MM);
        if on_design {
            checks.push(Check::below(
                format!("ideal focus error at {tag} (mm)"),
                err(&rep.ideal),
                lambda / 2.0 / MM,
            ));
            checks.push(Check::below(
                format!("quantized focus error at {tag} (mm)"),
                err(&rep.quantized),
                lambda / MM,
            ));
        } else {
            checks.push(Check::below(
                format!("quantized focus |x| at {tag} (mm)"),
                rep.quantized.focus.map_or(f64::INFINITY, |p| p.x.abs() / MM),
                lambda / 2.0 / MM,
            ));
        }
        if let ReflectionGoal::Steer { angle } = spec.reflection {
            // the gradient is fixed, so the angle follows sin θ ∝ 1/f
            let expected = (spec.design_frequency / f * angle.sin()).clamp(-1.0, 1.0).asin();
            let lobe = rep.quantized.steering;
            checks.push(Check::below(
                format!("steering angle error at {tag} (deg)"),
                lobe.map_or(f64::INFINITY, |l| (l.angle - expected).to_degrees().abs()),
                STEERING_TOLERANCE_DEG,
            ));
            if on_design {
                checks.push(Check::below(
                    format!("side-lobe ratio at {tag}"),
                    lobe.map_or(f64::INFINITY, |l| l.side_lobe_ratio),
                    SIDE_LOBE_LIMIT,
                ));
            }
        }
        entries.push(FrequencyEntry {
            frequency_hz: f,
            ideal: Summary::of(&rep.ideal),
            quantized: Summary::of(&rep.quantized),
        });
    }
    let outcome = Outcome::from_checks(&checks);
    dir.json(
        "report.json",
        &json!({
            "design_frequency_hz": spec.design_frequency,
            "n_cells": spec.n_cells,
            "frequencies": entries,
            "checks": checks,
        }),
    )?;
    for c in &checks {
        println!(
            "{} {}: {:.3} (limit {:.3})",
            if c.pass { "ok  " } else { "FAIL" },
            c.name,
            c.value,
            c.limit
        );
    }
    let root = dir.finish(
        "design",
        &hash,
        Some(&table.content_hash()),
        &effective,
        outcome == Outcome::Met,
    )?;
    println!("wrote {}", root.display());
    Ok(outcome)
}
