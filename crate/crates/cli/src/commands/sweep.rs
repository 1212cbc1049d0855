//! `sweep`: cell response table, coverage report and phase maps.

use std::f64::consts::PI;
use std::path::Path;

use anyhow::Result;
use metascreen::library::{coverage_span, total_variation, CellResponseTable};
use metascreen::export::write_pgm;
use ndarray::Array2;
use serde_json::json;

use super::{table, Outcome};
use crate::config::{hash_json, RunConfig};
use crate::output::{freq_tag, RunDir};

const MM: f64 = 1e-3;

fn span(phases: &[f64]) -> f64 {
    if phases.len() < 2 {
        0.0
    } else {
        coverage_span(phases).unwrap_or(0.0)
    }
}

pub fn run(cfg: &RunConfig, out: &Path, cache: &Path) -> Result<Outcome> {
    let effective = json!({
        "geometry": cfg.geometry,
        "medium": cfg.medium,
        "grid": cfg.grid,
        "sweep": cfg.sweep,
    });
    let hash = hash_json(&effective)?;
    let table = table(cfg, cfg.grid.clone(), cache)?;
    let grid = table.grid().clone();
    let mut dir = RunDir::create(out, "sweep", &hash)?;
    dir.write_with("table.csv", |w| table.write_csv(w))?;
    if !table.failures().is_empty() {
        dir.json("failures.json", &table.failures())?;
    }

    let h1i = CellResponseTable::nearest(&grid.h1, cfg.sweep.reference_h1);
    let w2i = CellResponseTable::nearest(&grid.w2, cfg.sweep.reference_w2);
    let wi = CellResponseTable::nearest(&grid.w, cfg.sweep.reference_w);

    let mut coverage = Vec::new();
    println!("freq_hz  span_r(h1)  span_t(w2)");
    for (fi, &f) in grid.frequencies.iter().enumerate() {
        let along = |n: usize, pick: &dyn Fn(usize) -> (usize, usize, usize)| {
            (0..n)
                .filter_map(|i| {
                    let (h, k, w) = pick(i);
                    table.entry(fi, w, k, h).map(|e| (i, *e))
                })
                .collect::<Vec<_>>()
        };
        let h1_sweep = along(grid.h1.len(), &|i| (i, w2i, wi));
        let w2_sweep = along(grid.w2.len(), &|i| (h1i, i, wi));
        let w_sweep = along(grid.w.len(), &|i| (h1i, w2i, i));

        let phi = |s: &[(usize, metascreen::duct::ScatteringResult)], r: bool| -> Vec<f64> {
            s.iter()
                .map(|(_, e)| if r { e.phase_r() } else { e.phase_t() })
                .collect()
        };
        let span_r = span(&phi(&h1_sweep, true));
        let span_t = span(&phi(&w2_sweep, false));
        let tv_t = total_variation(&phi(&h1_sweep, false));
        let tv_r = total_variation(&phi(&w2_sweep, true));
        println!("{f:7.1}  {span_r:10.4}  {span_t:10.4}");
        coverage.push(format!("{f},{span_r:.6},{span_t:.6},{tv_t:.6},{tv_r:.6}"));

        for (axis, values, sweep) in [
            ("h1", &grid.h1, &h1_sweep),
            ("w2", &grid.w2, &w2_sweep),
            ("w", &grid.w, &w_sweep),
        ] {
            if values.len() < 2 {
                continue;
            }
            let rows: Vec<String> = sweep
                .iter()
                .map(|(i, e)| {
                    format!(
                        "{:.6},{:.11e},{:.11e},{:.11e},{:.11e},{:.11e},{:.11e},{:.11e},{:.11e}",
                        values[*i] / MM,
                        e.r.norm(),
                        e.phase_r(),
                        e.t.norm(),
                        e.phase_t(),
                        e.r.re,
                        e.r.im,
                        e.t.re,
                        e.t.im
                    )
                })
                .collect();
            dir.csv(
                &format!("slice_{axis}_{}.csv", freq_tag(f)),
                &format!("{axis}_mm,abs_r,phase_r_rad,abs_t,phase_t_rad,re_r,im_r,re_t,im_t"),
                &rows,
            )?;
        }

        if grid.h1.len() > 1 && grid.w2.len() > 1 {
            for (side, reflect) in [("r", true), ("t", false)] {
                // rows follow w2, columns follow h1; phase mapped to [0, 2π]
                let map = Array2::from_shape_fn((grid.w2.len(), grid.h1.len()), |(k, h)| {
                    table.entry(fi, wi, k, h).map_or(0.0, |e| {
                        PI + if reflect { e.phase_r() } else { e.phase_t() }
                    })
                });
                dir.write_with(&format!("phase_{side}_{}.pgm", freq_tag(f)), |w| {
                    write_pgm(&map, w)
                })?;
            }
        }
    }
    dir.csv(
        "coverage.csv",
        "frequency_hz,reflection_span_rad,transmission_span_rad,tv_phi_t_over_h1_rad,tv_phi_r_over_w2_rad",
        &coverage,
    )?;
    let root = dir.finish("sweep", &hash, Some(&table.content_hash()), &effective, true)?;
    println!("wrote {}", root.display());
    Ok(Outcome::Met)
}
