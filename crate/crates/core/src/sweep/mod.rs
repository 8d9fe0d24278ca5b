//! Exhaustive sweep over isovalue, colormap, azimuth and elevation, scoring
//! each candidate by reconstructing the volume from its rendered views.

mod report;

pub use report::{write_heat_grid_png, write_heat_table_png, write_slice_montage, SliceTable};

use std::collections::HashMap;
use std::fmt;
use std::fs::OpenOptions;
use std::io::Write as _;
use std::path::Path;
use std::sync::Mutex;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::color::Colormap;
use crate::contour::Hypothesis;
use crate::error::{Error, Result};
use crate::field::{l2_error, Grid3D};
use crate::radiance::{reconstruct_field_from_views, PosedImage, ViewReconstructionConfig};
use crate::render::{render_isosurface, view_set_cameras, Camera, ViewSetup};

/// The four swept parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Parameter {
    Isovalue,
    Colormap,
    Azimuth,
    Elevation,
}

impl Parameter {
    pub const ALL: [Parameter; 4] = [Parameter::Isovalue, Parameter::Colormap, Parameter::Azimuth, Parameter::Elevation];

    pub fn name(self) -> &'static str {
        match self {
            Parameter::Isovalue => "isovalue",
            Parameter::Colormap => "colormap",
            Parameter::Azimuth => "azimuth_deg",
            Parameter::Elevation => "elevation_deg",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterGrid {
    pub isovalues: Vec<f64>,
    pub colormaps: Vec<String>,
    pub azimuths_deg: Vec<f64>,
    pub elevations_deg: Vec<f64>,
}

impl ParameterGrid {
    pub fn validate(&self) -> Result<()> {
        if self.isovalues.is_empty() || self.colormaps.is_empty() || self.azimuths_deg.is_empty() || self.elevations_deg.is_empty() {
            return Err(Error::Config("every parameter list needs at least one value".into()));
        }
        if let Some(e) = self.elevations_deg.iter().find(|e| !(-90.0..=90.0).contains(*e)) {
            return Err(Error::Config(format!("elevation {e} outside [-90, 90]")));
        }
        if let Some(v) = self.isovalues.iter().chain(&self.azimuths_deg).find(|v| !v.is_finite()) {
            return Err(Error::Config(format!("non-finite parameter value {v}")));
        }
        Ok(())
    }

    /// Number of values along `p`.
    pub fn size(&self, p: Parameter) -> usize {
        match p {
            Parameter::Isovalue => self.isovalues.len(),
            Parameter::Colormap => self.colormaps.len(),
            Parameter::Azimuth => self.azimuths_deg.len(),
            Parameter::Elevation => self.elevations_deg.len(),
        }
    }

    /// Value labels along `p`, as written to reports.
    pub fn labels(&self, p: Parameter) -> Vec<String> {
        match p {
            Parameter::Isovalue => self.isovalues.iter().map(|v| v.to_string()).collect(),
            Parameter::Colormap => self.colormaps.clone(),
            Parameter::Azimuth => self.azimuths_deg.iter().map(|v| v.to_string()).collect(),
            Parameter::Elevation => self.elevations_deg.iter().map(|v| v.to_string()).collect(),
        }
    }

    pub fn len(&self) -> usize {
        Parameter::ALL.iter().map(|&p| self.size(p)).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Cartesian product, isovalue slowest and elevation fastest.
    pub fn enumerate(&self) -> Vec<Candidate> {
        let mut out = Vec::with_capacity(self.len());
        for (i, &isovalue) in self.isovalues.iter().enumerate() {
            for (c, colormap) in self.colormaps.iter().enumerate() {
                for (a, &azimuth_deg) in self.azimuths_deg.iter().enumerate() {
                    for (e, &elevation_deg) in self.elevations_deg.iter().enumerate() {
                        out.push(Candidate {
                            index: out.len(),
                            coords: [i, c, a, e],
                            isovalue,
                            colormap: colormap.clone(),
                            azimuth_deg,
                            elevation_deg,
                        });
                    }
                }
            }
        }
        out
    }

    /// Enumeration index of the candidate at per-parameter positions `coords`.
    pub fn index_of(&self, coords: [usize; 4]) -> usize {
        let dims = Parameter::ALL.map(|p| self.size(p));
        ((coords[0] * dims[1] + coords[1]) * dims[2] + coords[2]) * dims[3] + coords[3]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub index: usize,
    /// Positions along the four parameter lists.
    pub coords: [usize; 4],
    pub isovalue: f64,
    pub colormap: String,
    pub azimuth_deg: f64,
    pub elevation_deg: f64,
}

/// FNV-1a over the concatenated parts: stable across platforms and
/// compiler versions, unlike the std hasher.
pub fn stable_hash(parts: &[&[u8]]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in parts.iter().flat_map(|p| p.iter()) {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Per-candidate seed from the global seed and the parameter values, so a
/// candidate's result does not depend on when or where it is evaluated.
pub fn candidate_seed(global_seed: u64, c: &Candidate) -> u64 {
    stable_hash(&[
        &global_seed.to_le_bytes(),
        &c.isovalue.to_bits().to_le_bytes(),
        c.colormap.as_bytes(),
        &[0xff],
        &c.azimuth_deg.to_bits().to_le_bytes(),
        &c.elevation_deg.to_bits().to_le_bytes(),
    ])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub seed: u64,
    pub view: ViewSetup,
    pub reconstruction: ViewReconstructionConfig,
    /// Record wall time per candidate; off by default so outputs are byte-stable.
    pub timing: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            seed: 0,
            view: ViewSetup::default(),
            reconstruction: ViewReconstructionConfig::default(),
            timing: false,
        }
    }
}

/// Outcome of one candidate; `error` is +inf exactly when the evaluation failed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateResult {
    pub candidate: Candidate,
    pub error: f64,
    pub decoded_isovalue: Option<f64>,
    pub hypothesis: Option<Hypothesis>,
    pub fit_final_loss: Option<f64>,
    pub wall_ms: u64,
    pub status: String,
}

impl CandidateResult {
    pub fn is_valid(&self) -> bool {
        self.error.is_finite()
    }

    fn failed(candidate: &Candidate, status: impl Into<String>, wall_ms: u64) -> Self {
        CandidateResult {
            candidate: candidate.clone(),
            error: f64::INFINITY,
            decoded_isovalue: None,
            hypothesis: None,
            fit_final_loss: None,
            wall_ms,
            status: status.into(),
        }
    }
}

/// Central camera of a candidate, aimed at the grid center.
pub fn candidate_camera(truth: &Grid3D, c: &Candidate, view: &ViewSetup) -> Result<Camera> {
    let (lo, hi) = (truth.origin(), truth.upper());
    view.camera(c.azimuth_deg, c.elevation_deg, std::array::from_fn(|a| 0.5 * (lo[a] + hi[a])))
}

/// The nine colored isosurface views of a candidate.
pub fn candidate_views(truth: &Grid3D, c: &Candidate, cm: &Colormap, view: &ViewSetup) -> Result<Vec<PosedImage>> {
    let stats = truth.stats();
    let color = cm.sample(stats.normalize_value(c.isovalue));
    let center = candidate_camera(truth, c, view)?;
    view_set_cameras(&center)
        .iter()
        .map(|cam| PosedImage::new(render_isosurface(truth, c.isovalue, color, cam, view.ambient).image, *cam))
        .collect()
}

/// Renders the candidate, reconstructs the volume from its views and scores
/// it against `truth`. Failures become +inf with the reason in `status`.
pub fn evaluate_candidate(truth: &Grid3D, c: &Candidate, cm: &Colormap, cfg: &SweepConfig) -> CandidateResult {
    let start = Instant::now();
    let elapsed = |s: Instant| if cfg.timing { s.elapsed().as_millis() as u64 } else { 0 };
    let stats = truth.stats();
    if !(c.isovalue >= stats.min && c.isovalue <= stats.max) {
        return CandidateResult::failed(c, "empty contour", elapsed(start));
    }
    let views = match candidate_views(truth, c, cm, &cfg.view) {
        Ok(v) => v,
        Err(e) => return CandidateResult::failed(c, format!("render failed: {e}"), elapsed(start)),
    };
    let mut rc = cfg.reconstruction.clone();
    rc.fit.seed = candidate_seed(cfg.seed, c);
    match reconstruct_field_from_views(&views, cm, stats, stats, truth, &rc, |g| l2_error(g, truth)) {
        Ok(r) => CandidateResult {
            candidate: c.clone(),
            error: r.error,
            decoded_isovalue: r.decoded_isovalue,
            hypothesis: r.hypothesis,
            fit_final_loss: Some(r.final_loss),
            wall_ms: elapsed(start),
            status: if r.error.is_finite() { "ok".into() } else { "empty surface".into() },
        },
        Err(e @ Error::Diverged { .. }) => CandidateResult::failed(c, format!("diverged: {e}"), elapsed(start)),
        Err(e) => CandidateResult::failed(c, format!("failed: {e}"), elapsed(start)),
    }
}

/// Ranked sweep results with slices through the optimum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub grid: ParameterGrid,
    /// In enumeration order.
    pub results: Vec<CandidateResult>,
    /// Candidate indices by ascending error; ties keep enumeration order.
    pub ranking: Vec<usize>,
    pub best: Option<usize>,
    pub no_valid_optimum: bool,
    pub failures: usize,
    /// One table per unordered parameter pair, empty without a valid optimum.
    pub slices: Vec<SliceTable>,
}

impl SweepReport {
    pub fn from_results(grid: ParameterGrid, results: Vec<CandidateResult>) -> Result<Self> {
        if results.len() != grid.len() || results.iter().enumerate().any(|(i, r)| r.candidate.index != i) {
            return Err(Error::invalid("results must cover the grid in enumeration order"));
        }
        let mut ranking: Vec<usize> = (0..results.len()).collect();
        ranking.sort_by(|&a, &b| results[a].error.total_cmp(&results[b].error).then(a.cmp(&b)));
        let failures = results.iter().filter(|r| !r.is_valid()).count();
        let best = ranking.first().copied().filter(|&i| results[i].is_valid());
        let slices = match best {
            Some(b) => SliceTable::through(&grid, &results, results[b].candidate.coords),
            None => Vec::new(),
        };
        Ok(SweepReport {
            grid,
            results,
            ranking,
            best,
            no_valid_optimum: best.is_none(),
            failures,
            slices,
        })
    }

    pub fn best_result(&self) -> Option<&CandidateResult> {
        self.best.map(|i| &self.results[i])
    }

    pub fn to_csv_string(&self) -> String {
        let mut s = String::from(CSV_HEADER);
        s.push('\n');
        for r in &self.results {
            s.push_str(&csv_row(r));
            s.push('\n');
        }
        s
    }
}

/// Columns of the results table.
pub const CSV_HEADER: &str =
    "isovalue,colormap,azimuth_deg,elevation_deg,l2_error,decoded_isovalue,hypothesis,fit_final_loss,wall_ms,status";

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn csv_row(r: &CandidateResult) -> String {
    let c = &r.candidate;
    format!(
        "{},{},{},{},{},{},{},{},{},{}",
        c.isovalue,
        csv_field(&c.colormap),
        c.azimuth_deg,
        c.elevation_deg,
        r.error,
        opt(r.decoded_isovalue),
        r.hypothesis.map(|h| h.name()).unwrap_or(""),
        opt(r.fit_final_loss),
        r.wall_ms,
        csv_field(&r.status)
    )
}

impl fmt::Display for CandidateResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = &self.candidate;
        write!(
            f,
            "isovalue={} colormap={} azimuth={} elevation={} l2_error={} status={}",
            c.isovalue, c.colormap, c.azimuth_deg, c.elevation_deg, self.error, self.status
        )
    }
}

fn parse_journal_row(rec: &csv::StringRecord, grid: &ParameterGrid, candidates: &[Candidate]) -> Option<CandidateResult> {
    let index: usize = rec.get(0)?.parse().ok()?;
    let c = candidates.get(index)?;
    let f = |i: usize| rec.get(i).unwrap_or("");
    let num = |i: usize| -> Option<Option<f64>> {
        let s = f(i);
        if s.is_empty() {
            Some(None)
        } else {
            s.parse().ok().map(Some)
        }
    };
    let same = f(1).parse::<f64>().ok()? == c.isovalue
        && f(2) == c.colormap
        && f(3).parse::<f64>().ok()? == c.azimuth_deg
        && f(4).parse::<f64>().ok()? == c.elevation_deg;
    if !same || grid.len() != candidates.len() {
        return None;
    }
    let hypothesis = match f(7) {
        "" => None,
        name => Some(Hypothesis::BOTH.into_iter().find(|h| h.name() == name)?),
    };
    Some(CandidateResult {
        candidate: c.clone(),
        error: f(5).parse().ok()?,
        decoded_isovalue: num(6)?,
        hypothesis,
        fit_final_loss: num(8)?,
        wall_ms: f(9).parse().ok()?,
        status: f(10).to_string(),
    })
}

/// Completed candidates recorded in a journal file; rows that do not match
/// the grid are ignored.
pub fn read_journal(path: &Path, grid: &ParameterGrid) -> Result<HashMap<usize, CandidateResult>> {
    let mut done = HashMap::new();
    if !path.exists() {
        return Ok(done);
    }
    let candidates = grid.enumerate();
    let mut rd = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_path(path)?;
    for rec in rd.records() {
        let Ok(rec) = rec else { continue };
        if let Some(r) = parse_journal_row(&rec, grid, &candidates) {
            done.insert(r.candidate.index, r);
        }
    }
    Ok(done)
}

/// Evaluates every candidate with up to `parallelism` workers and ranks
/// them. With a `journal` path, finished candidates are appended there as
/// they complete and already-journaled ones are skipped on the next run.
pub fn run_sweep(
    truth: &Grid3D,
    grid: &ParameterGrid,
    colormaps: &[Colormap],
    cfg: &SweepConfig,
    parallelism: usize,
    journal: Option<&Path>,
) -> Result<SweepReport> {
    grid.validate()?;
    let lookup: HashMap<&str, &Colormap> = colormaps.iter().map(|c| (c.name(), c)).collect();
    if let Some(missing) = grid.colormaps.iter().find(|n| !lookup.contains_key(n.as_str())) {
        return Err(Error::Config(format!("unknown colormap {missing}")));
    }
    let candidates = grid.enumerate();
    let mut done = match journal {
        Some(p) => read_journal(p, grid)?,
        None => HashMap::new(),
    };
    let writer = match journal {
        Some(p) => {
            let fresh = !p.exists() || std::fs::metadata(p)?.len() == 0;
            let mut f = OpenOptions::new().create(true).append(true).open(p)?;
            if fresh {
                writeln!(f, "index,{CSV_HEADER}")?;
            }
            Some(Mutex::new(f))
        }
        None => None,
    };
    let pending: Vec<&Candidate> = candidates.iter().filter(|c| !done.contains_key(&c.index)).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let fresh: Vec<CandidateResult> = pool.install(|| {
        pending
            .par_iter()
            .map(|c| {
                let r = evaluate_candidate(truth, c, lookup[c.colormap.as_str()], cfg);
                if let Some(w) = &writer {
                    let mut f = w.lock().unwrap_or_else(|p| p.into_inner());
                    let _ = writeln!(f, "{},{}", c.index, csv_row(&r));
                    let _ = f.flush();
                }
                r
            })
            .collect()
    });
    for r in fresh {
        done.insert(r.candidate.index, r);
    }
    let results = (0..candidates.len()).map(|i| done.remove(&i).expect("every candidate evaluated")).collect();
    SweepReport::from_results(grid.clone(), results)
}

/// Writes `results.csv`, `report.json`, and per-slice heat tables and
/// montages into `dir`.
pub fn write_report(report: &SweepReport, truth: &Grid3D, colormaps: &[Colormap], cfg: &SweepConfig, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("results.csv"), report.to_csv_string())?;
    std::fs::write(dir.join("report.json"), serde_json::to_string_pretty(report)?)?;
    for t in &report.slices {
        let stem = format!("slice_{}_{}", t.rows.name(), t.cols.name());
        std::fs::write(dir.join(format!("{stem}.csv")), t.to_csv_string())?;
        write_heat_table_png(t, &dir.join(format!("{stem}.png")))?;
        write_slice_montage(t, report, truth, colormaps, cfg, &dir.join(format!("{stem}_montage.png")))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: [usize; 4]) -> ParameterGrid {
        ParameterGrid {
            isovalues: (0..n[0]).map(|i| 0.1 * (i + 1) as f64).collect(),
            colormaps: ["viridis", "Spectral", "turbo", "plasma"][..n[1]].iter().map(|s| s.to_string()).collect(),
            azimuths_deg: (0..n[2]).map(|i| 45.0 * i as f64).collect(),
            elevations_deg: (0..n[3]).map(|i| -60.0 + 30.0 * i as f64).collect(),
        }
    }

    #[test]
    fn enumeration_is_lexicographic() {
        let g = grid([5, 4, 8, 5]);
        let c = g.enumerate();
        assert_eq!(c.len(), 800);
        assert_eq!(grid([1, 1, 1, 1]).enumerate().len(), 1);
        assert_eq!((c[1].coords, c[5].coords), ([0, 0, 0, 1], [0, 0, 1, 0]));
        assert_eq!(c[40].coords, [0, 1, 0, 0]);
        for (i, cand) in c.iter().enumerate() {
            assert_eq!(cand.index, i);
            assert_eq!(g.index_of(cand.coords), i);
        }
        assert!(c.windows(2).all(|w| w[0].coords < w[1].coords));
    }

    #[test]
    fn grid_validation() {
        let mut g = grid([1, 1, 1, 1]);
        assert!(g.validate().is_ok());
        g.elevations_deg = vec![95.0];
        assert!(g.validate().is_err());
        g.elevations_deg.clear();
        assert!(g.validate().is_err());
    }

    #[test]
    fn seeds_depend_on_parameters_only() {
        let c = grid([2, 2, 2, 2]).enumerate();
        let s: Vec<u64> = c.iter().map(|x| candidate_seed(9, x)).collect();
        let mut uniq = s.clone();
        uniq.sort();
        uniq.dedup();
        assert_eq!(uniq.len(), s.len());
        let mut moved = c[3].clone();
        moved.index = 99;
        moved.coords = [0; 4];
        assert_eq!(candidate_seed(9, &moved), s[3]);
        assert_ne!(candidate_seed(10, &c[3]), s[3]);
    }

    fn fake_results(g: &ParameterGrid, err: impl Fn(&Candidate) -> f64) -> Vec<CandidateResult> {
        g.enumerate()
            .into_iter()
            .map(|c| {
                let e = err(&c);
                CandidateResult {
                    candidate: c,
                    error: e,
                    decoded_isovalue: None,
                    hypothesis: None,
                    fit_final_loss: None,
                    wall_ms: 0,
                    status: if e.is_finite() { "ok".into() } else { "empty contour".into() },
                }
            })
            .collect()
    }

    #[test]
    fn report_ranks_and_slices_through_optimum() {
        let g = grid([3, 2, 3, 2]);
        let results = fake_results(&g, |c| {
            if c.coords[0] == 2 {
                f64::INFINITY
            } else {
                1.0 + c.coords.iter().map(|&k| (k as f64 - 1.0).powi(2)).sum::<f64>()
            }
        });
        let r = SweepReport::from_results(g.clone(), results).unwrap();
        let best = r.best_result().unwrap();
        assert!(r.results.iter().all(|x| best.error <= x.error));
        assert_eq!(r.failures, 12);
        assert_eq!(r.slices.len(), 6);
        for t in &r.slices {
            assert_eq!(t.at(&best.candidate.coords), best.error);
        }
        assert!(r.ranking.windows(2).all(|w| r.results[w[0]].error <= r.results[w[1]].error));
        assert!(!r.no_valid_optimum);
    }

    #[test]
    fn all_failures_flag_no_optimum() {
        let g = grid([2, 1, 1, 1]);
        let r = SweepReport::from_results(g.clone(), fake_results(&g, |_| f64::INFINITY)).unwrap();
        assert!(r.no_valid_optimum);
        assert!(r.best.is_none() && r.slices.is_empty());
    }

    #[test]
    fn journal_rows_round_trip() {
        let g = grid([2, 2, 1, 1]);
        let mut results = fake_results(&g, |c| 0.1 + c.index as f64 / 3.0);
        results[1].decoded_isovalue = Some(0.123456789);
        results[1].hypothesis = Some(Hypothesis::InsideLow);
        results[1].fit_final_loss = Some(1e-5);
        results[2].status = "failed: a, \"quoted\"".into();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("journal.csv");
        let mut text = format!("index,{CSV_HEADER}\n");
        for r in &results {
            text.push_str(&format!("{},{}\n", r.candidate.index, csv_row(r)));
        }
        text.push_str("17,garbage\n");
        std::fs::write(&path, text).unwrap();
        let back = read_journal(&path, &g).unwrap();
        assert_eq!(back.len(), results.len());
        for r in &results {
            assert_eq!(&back[&r.candidate.index], r);
        }
    }

    #[test]
    fn out_of_range_isovalue_scores_infinite() {
        let truth = crate::scenes::plume_field(8).unwrap();
        let g = ParameterGrid {
            isovalues: vec![5.0],
            colormaps: vec!["viridis".into()],
            azimuths_deg: vec![0.0],
            elevations_deg: vec![0.0],
        };
        let c = &g.enumerate()[0];
        let r = evaluate_candidate(&truth, c, &Colormap::bundled("viridis").unwrap(), &SweepConfig::default());
        assert_eq!(r.error, f64::INFINITY);
        assert_eq!(r.status, "empty contour");
        let unknown = ParameterGrid {
            colormaps: vec!["nope".into()],
            ..g
        };
        assert!(run_sweep(&truth, &unknown, &Colormap::all_bundled(), &SweepConfig::default(), 1, None).is_err());
    }
}
