use std::path::Path;

use serde::Serialize;

use super::{candidate_camera, CandidateResult, Parameter, ParameterGrid, SweepConfig, SweepReport};
use crate::color::{Colormap, RGBColor};
use crate::error::{Error, Result};
use crate::field::Grid3D;
use crate::render::{render_isosurface, ImageRGB, ViewSetup};

const HEAT_CELL: usize = 24;
const THUMB: usize = 64;
const THUMB_BORDER: usize = 8;

/// Errors over two parameters with the other two held at the optimum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SliceTable {
    pub rows: Parameter,
    pub cols: Parameter,
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
    /// `errors[r][c]`; +inf (null in JSON) for failed candidates.
    pub errors: Vec<Vec<f64>>,
    /// Candidate index behind each entry.
    pub candidates: Vec<Vec<usize>>,
}

impl SliceTable {
    /// The six pairwise slices through the candidate at `optimum`.
    pub fn through(grid: &ParameterGrid, results: &[CandidateResult], optimum: [usize; 4]) -> Vec<SliceTable> {
        let mut out = Vec::with_capacity(6);
        for a in 0..4 {
            for b in a + 1..4 {
                let (rp, cp) = (Parameter::ALL[a], Parameter::ALL[b]);
                let mut errors = Vec::with_capacity(grid.size(rp));
                let mut candidates = Vec::with_capacity(grid.size(rp));
                for r in 0..grid.size(rp) {
                    let mut er = Vec::with_capacity(grid.size(cp));
                    let mut cr = Vec::with_capacity(grid.size(cp));
                    for c in 0..grid.size(cp) {
                        let mut coords = optimum;
                        coords[a] = r;
                        coords[b] = c;
                        let idx = grid.index_of(coords);
                        er.push(results[idx].error);
                        cr.push(idx);
                    }
                    errors.push(er);
                    candidates.push(cr);
                }
                out.push(SliceTable {
                    rows: rp,
                    cols: cp,
                    row_labels: grid.labels(rp),
                    col_labels: grid.labels(cp),
                    errors,
                    candidates,
                });
            }
        }
        out
    }

    fn axis(p: Parameter) -> usize {
        Parameter::ALL.iter().position(|&q| q == p).expect("known parameter")
    }

    /// Entry whose row and column positions are taken from `coords`.
    pub fn at(&self, coords: &[usize; 4]) -> f64 {
        self.errors[coords[Self::axis(self.rows)]][coords[Self::axis(self.cols)]]
    }

    /// Row labels down the first column, one column per `cols` value.
    pub fn to_csv_string(&self) -> String {
        let mut s = format!("{}\\{}", self.rows.name(), self.cols.name());
        for c in &self.col_labels {
            s.push(',');
            s.push_str(c);
        }
        s.push('\n');
        for (label, row) in self.row_labels.iter().zip(&self.errors) {
            s.push_str(label);
            for e in row {
                s.push(',');
                s.push_str(&e.to_string());
            }
            s.push('\n');
        }
        s
    }
}

/// Gray level per entry: darker is lower, white marks non-finite entries.
fn shades(values: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let finite: Vec<f64> = values.iter().flatten().cloned().filter(|e| e.is_finite()).collect();
    let lo = finite.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = finite.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    values
        .iter()
        .map(|row| {
            row.iter()
                .map(|&e| {
                    if !e.is_finite() {
                        1.0
                    } else if hi > lo {
                        0.1 + 0.7 * (e - lo) / (hi - lo)
                    } else {
                        0.1
                    }
                })
                .collect()
        })
        .collect()
}

/// Grayscale heat table of a slice, one square per entry.
pub fn write_heat_table_png(t: &SliceTable, path: &Path) -> Result<()> {
    write_heat_grid_png(&t.errors, path)
}

/// Grayscale heat table of a row-major value grid.
pub fn write_heat_grid_png(values: &[Vec<f64>], path: &Path) -> Result<()> {
    let shades = shades(values);
    let (rows, cols) = (values.len(), values.first().map_or(0, |r| r.len()));
    let mut img = ImageRGB::filled(cols * HEAT_CELL, rows * HEAT_CELL, RGBColor::BLACK);
    for (r, row) in shades.iter().enumerate() {
        for (c, &g) in row.iter().enumerate() {
            let cell = ImageRGB::filled(HEAT_CELL, HEAT_CELL, RGBColor::new(g, g, g));
            img.blit(&cell, c * HEAT_CELL, r * HEAT_CELL);
        }
    }
    img.write_png(path)
}

/// Central-view thumbnails of every entry, framed by the entry's heat shade.
pub fn write_slice_montage(
    t: &SliceTable,
    report: &SweepReport,
    truth: &Grid3D,
    colormaps: &[Colormap],
    cfg: &SweepConfig,
    path: &Path,
) -> Result<()> {
    let shades = shades(&t.errors);
    let stats = truth.stats();
    let view = ViewSetup {
        image_size: THUMB,
        ..cfg.view
    };
    let cell = THUMB + 2 * THUMB_BORDER;
    let (rows, cols) = (t.errors.len(), t.errors.first().map_or(0, |r| r.len()));
    let mut img = ImageRGB::filled(cols * cell, rows * cell, RGBColor::BLACK);
    for r in 0..rows {
        for c in 0..cols {
            let g = shades[r][c];
            img.blit(&ImageRGB::filled(cell, cell, RGBColor::new(g, g, g)), c * cell, r * cell);
            let cand = &report.results[t.candidates[r][c]].candidate;
            let cm = colormaps
                .iter()
                .find(|m| m.name() == cand.colormap)
                .ok_or_else(|| Error::Config(format!("unknown colormap {}", cand.colormap)))?;
            let color = cm.sample(stats.normalize_value(cand.isovalue));
            let cam = candidate_camera(truth, cand, &view)?;
            let thumb = render_isosurface(truth, cand.isovalue, color, &cam, view.ambient).image;
            img.blit(&thumb, c * cell + THUMB_BORDER, r * cell + THUMB_BORDER);
        }
    }
    img.write_png(path)
}
