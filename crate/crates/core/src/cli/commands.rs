//! Subcommand bodies. Each writes its primary CSV plus JSON and PNG
//! artifacts into the output directory and returns a one-line summary.

use std::path::Path;

use serde_json::json;

use crate::baselines::compare_isovalue_selectors;
use crate::color::{ColorMetric, Colormap, RGBColor};
use crate::colormap_eval::{evaluate_colormap_2d, evaluate_colormap_3d, Eval2D};
use crate::contour::{extract_contour_2d, Contour2D};
use crate::error::{Error, Result};
use crate::field::Grid2D;
use crate::metrics::loglog_pearson;
use crate::render::{render_colormap_2d, ImageRGB};
use crate::sweep::{run_sweep, write_report};
use crate::viewpoint::evaluate_viewpoints;

use super::config::RunConfig;

const OVERLAY_SCALE: usize = 4;

fn write_text(dir: &Path, name: &str, text: &str) -> Result<()> {
    std::fs::write(dir.join(name), text)?;
    Ok(())
}

fn write_json(dir: &Path, name: &str, v: &serde_json::Value) -> Result<()> {
    write_text(dir, name, &(serde_json::to_string_pretty(v)? + "\n"))
}

fn ranks(errors: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..errors.len()).collect();
    order.sort_by(|&a, &b| errors[a].total_cmp(&errors[b]).then(a.cmp(&b)));
    let mut rank = vec![0; errors.len()];
    for (r, i) in order.into_iter().enumerate() {
        rank[i] = r + 1;
    }
    rank
}

/// Loglog correlation of discriminative power against error over the
/// order-preserving maps; `None` when it is undefined.
pub fn order_preserving_correlation(evals: &[Eval2D]) -> Option<f64> {
    let ok: Vec<&Eval2D> = evals.iter().filter(|e| e.order_preserving).collect();
    let x: Vec<f64> = ok.iter().map(|e| e.discriminative_power).collect();
    let y: Vec<f64> = ok.iter().map(|e| e.l2_error).collect();
    loglog_pearson(&x, &y).ok()
}

pub fn colormap_eval_2d(cfg: &RunConfig, out: &Path) -> Result<String> {
    let field = cfg.field_2d()?;
    let maps = cfg.colormaps()?;
    let evals = maps.iter().map(|cm| evaluate_colormap_2d(&field, cm)).collect::<Result<Vec<_>>>()?;
    let rank = ranks(&evals.iter().map(|e| e.l2_error).collect::<Vec<_>>());
    let mut csv = String::from(
        "colormap,order_preserving,inversions,arc_length,discriminative_power,bins,l2_error,rmse,worst_bin_ratio,rank\n",
    );
    let mut scatter = String::from("colormap,order_preserving,discriminative_power,l2_error\n");
    for (e, r) in evals.iter().zip(&rank) {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            e.colormap, e.order_preserving, e.inversions, e.arc_length, e.discriminative_power, e.bins, e.l2_error, e.rmse, e.worst_bin_ratio, r
        ));
        scatter.push_str(&format!("{},{},{},{}\n", e.colormap, e.order_preserving, e.discriminative_power, e.l2_error));
    }
    write_text(out, "results.csv", &csv)?;
    write_text(out, "scatter.csv", &scatter)?;
    let pearson = order_preserving_correlation(&evals);
    let best = evals
        .iter()
        .zip(&rank)
        .find(|(_, &r)| r == 1)
        .map(|(e, _)| e.colormap.clone())
        .unwrap_or_default();
    write_json(
        out,
        "summary.json",
        &json!({
            "field_dims": field.dims(),
            "best_colormap": best,
            "loglog_pearson_order_preserving": pearson,
            "results": evals,
        }),
    )?;
    Ok(format!(
        "best colormap {best}; loglog pearson over order-preserving maps {}",
        pearson.map_or("undefined".into(), |p| format!("{p:.4}"))
    ))
}

pub fn colormap_eval_3d(cfg: &RunConfig, metrics: &[ColorMetric], out: &Path) -> Result<String> {
    let field = cfg.field_2d()?;
    let maps = cfg.colormaps()?;
    let mut per_map = Vec::with_capacity(maps.len());
    for cm in &maps {
        per_map.push(evaluate_colormap_3d(&field, cm, metrics, cfg.z_scale, cfg.view.ambient)?);
    }
    let mut totals_csv = String::from("metric,total_colorful,total_all,colorful_maps\n");
    let mut totals = Vec::new();
    for (m, &metric) in metrics.iter().enumerate() {
        let mut csv = String::from("colormap,colorful,degenerate,l2_error,rmse\n");
        let (mut colorful_total, mut all_total, mut n_colorful) = (0.0, 0.0, 0);
        for evals in &per_map {
            let e = &evals[m];
            // hue carries no information for maps with achromatic samples
            let degenerate = metric == ColorMetric::HueAbs && !e.colorful;
            csv.push_str(&format!("{},{},{},{},{}\n", e.colormap, e.colorful, degenerate, e.l2_error, e.rmse));
            all_total += e.l2_error;
            if e.colorful {
                colorful_total += e.l2_error;
                n_colorful += 1;
            }
        }
        csv.push_str(&format!("total_colorful,true,false,{colorful_total},\n"));
        write_text(out, &format!("results_{}.csv", metric.name()), &csv)?;
        totals_csv.push_str(&format!("{},{colorful_total},{all_total},{n_colorful}\n", metric.name()));
        totals.push(json!({"metric": metric.name(), "total_colorful": colorful_total, "total_all": all_total}));
    }
    write_text(out, "totals.csv", &totals_csv)?;
    write_json(out, "summary.json", &json!({"field_dims": field.dims(), "z_scale": cfg.z_scale, "ambient": cfg.view.ambient, "totals": totals}))?;
    let line = totals
        .iter()
        .map(|t| format!("{}={:.1}", t["metric"].as_str().unwrap_or(""), t["total_colorful"].as_f64().unwrap_or(f64::NAN)))
        .collect::<Vec<_>>()
        .join(" ");
    Ok(format!("colorful-subset totals: {line}"))
}

/// Plots each polyline of `c` in `color` over an image from [`render_colormap_2d`].
fn draw_contour(img: &mut ImageRGB, g: &Grid2D, c: &Contour2D, scale: usize, color: RGBColor) {
    let (o, sp, ny) = (g.origin(), g.spacing(), g.dims()[1]);
    let to_px = |p: [f64; 2]| {
        let i = (p[0] - o[0]) / sp[0];
        let j = (p[1] - o[1]) / sp[1];
        ((i + 0.5) * scale as f64, ((ny - 1) as f64 - j + 0.5) * scale as f64)
    };
    let (w, h) = (img.width() as f64, img.height() as f64);
    for line in c.polylines() {
        for pair in line.windows(2) {
            let (a, b) = (to_px(pair[0]), to_px(pair[1]));
            let steps = ((b.0 - a.0).abs().max((b.1 - a.1).abs()).ceil() as usize).max(1);
            for s in 0..=steps {
                let t = s as f64 / steps as f64;
                let (x, y) = (a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1));
                if x >= 0.0 && y >= 0.0 && x < w && y < h {
                    img.set(x as usize, y as usize, color);
                }
            }
        }
    }
}

pub fn isovalue_select(cfg: &RunConfig, k: usize, out: &Path) -> Result<String> {
    if k < 2 {
        return Err(Error::Config(format!("k must be >= 2, got {k}")));
    }
    let field = cfg.field_2d()?;
    if field.stats().range <= 0.0 {
        return Err(Error::invalid("field is constant"));
    }
    let cmp = compare_isovalue_selectors(&field, k, &cfg.reconstruction, cfg.seed)?;
    let sel = &cmp.selection;
    let mut csv = String::from("index,isovalue,source,l2_error,hypothesis,status\n");
    for (i, &iso) in sel.candidates.iter().enumerate() {
        let source = match i.checked_sub(k) {
            None => "even",
            Some(j) => cmp.baselines()[j].0,
        };
        csv.push_str(&format!(
            "{i},{iso},{source},{},{},{}\n",
            sel.errors[i],
            sel.hypotheses[i].map_or("", |h| h.name()),
            sel.failures[i].as_deref().unwrap_or("ok")
        ));
    }
    write_text(out, "candidates.csv", &csv)?;
    write_json(out, "selection.json", &serde_json::to_value(&cmp)?)?;
    let gray = Colormap::bundled("gray").expect("gray is bundled");
    let base = render_colormap_2d(&field, &gray, OVERLAY_SCALE).image;
    let selectors = [
        ("ours", cmp.ours.isovalue, RGBColor::new(0.9, 0.1, 0.1)),
        ("kindlmann", cmp.kindlmann.isovalue, RGBColor::new(0.1, 0.7, 0.1)),
        ("carr", cmp.carr.isovalue, RGBColor::new(0.1, 0.3, 0.9)),
        ("bruckner", cmp.bruckner.isovalue, RGBColor::new(0.9, 0.7, 0.0)),
    ];
    let mut all = base.clone();
    for (name, iso, color) in selectors {
        let contour = extract_contour_2d(&field, iso);
        let mut img = base.clone();
        draw_contour(&mut img, &field, &contour, OVERLAY_SCALE, color);
        draw_contour(&mut all, &field, &contour, OVERLAY_SCALE, color);
        img.write_png(out.join(format!("contour_{name}.png")))?;
    }
    all.write_png(out.join("contours.png"))?;
    let b = cmp
        .baselines()
        .iter()
        .map(|(n, o)| format!("{n} {:.4} (error {:.4})", o.isovalue, o.error))
        .collect::<Vec<_>>()
        .join(", ");
    Ok(format!(
        "ours {:.4} (error {:.4}); {b}; dominates: {}",
        cmp.ours.isovalue,
        cmp.ours.error,
        cmp.dominates()
    ))
}

pub fn viewpoint_eval(cfg: &RunConfig, out: &Path) -> Result<String> {
    let mesh = cfg.mesh()?;
    let report = evaluate_viewpoints(&mesh, &cfg.view_azimuths, &cfg.view_elevations, &cfg.viewpoint_config())?;
    report.write(out)?;
    let side = report.mean_kept_chamfer(|e| (10.0..=30.0).contains(&e));
    let bottom = report.mean_kept_chamfer(|e| e <= -60.0);
    let best = report.entropy_best();
    write_json(
        out,
        "summary.json",
        &json!({
            "mean_chamfer_side": side,
            "mean_chamfer_bottom": bottom,
            "entropy_best": {"azimuth_deg": best.azimuth_deg, "elevation_deg": best.elevation_deg, "entropy": best.entropy},
            "kept": report.kept.iter().filter(|&&k| k).count(),
            "views": report.scores.len(),
        }),
    )?;
    let fmt = |v: Option<f64>| v.map_or("n/a".into(), |x| format!("{x:.4}"));
    Ok(format!(
        "mean chamfer side {} bottom {}; entropy prefers azimuth {} elevation {}",
        fmt(side),
        fmt(bottom),
        best.azimuth_deg,
        best.elevation_deg
    ))
}

pub fn sweep(cfg: &RunConfig, fresh: bool, out: &Path) -> Result<String> {
    let truth = cfg.field_3d()?;
    let grid = cfg.parameter_grid(&truth)?;
    let maps = {
        let all = cfg.colormaps()?;
        grid.colormaps
            .iter()
            .map(|n| {
                all.iter()
                    .find(|c| c.name() == n)
                    .cloned()
                    .ok_or_else(|| Error::Config(format!("unknown colormap {n}")))
            })
            .collect::<Result<Vec<_>>>()?
    };
    let journal = out.join("journal.csv");
    if fresh && journal.exists() {
        std::fs::remove_file(&journal)?;
    }
    let scfg = cfg.sweep_config();
    let report = run_sweep(&truth, &grid, &maps, &scfg, cfg.parallelism, Some(&journal))?;
    write_report(&report, &truth, &maps, &scfg, out)?;
    let tail = format!("{} candidates, {} failed", report.results.len(), report.failures);
    Ok(match report.best_result() {
        Some(b) => format!("best: {b}; {tail}"),
        None => format!("no valid optimum; {tail}"),
    })
}
