//! Run configuration read from INI files with `[section]` headers.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use ini::Ini;

use crate::color::{ColorMetric, Colormap};
use crate::colormap_eval::DEFAULT_Z_SCALE;
use crate::contour::{ReconstructionConfig, ShapeParameter};
use crate::error::{Error, Result};
use crate::field::{read_csv_2d, read_vrgf, synth_gaussian_field, GaussianMixtureSpec, Grid2D, Grid3D};
use crate::metrics::DEFAULT_SURFACE_SAMPLES;
use crate::radiance::{FitConfig, ViewReconstructionConfig, DEFAULT_DENSITY_PERCENTILE, DEFAULT_SMOOTH_SIGMA};
use crate::render::{TriMesh, ViewSetup};
use crate::scenes::{ball_field, plume_field, teapot_like_mesh};
use crate::sweep::{ParameterGrid, SweepConfig};
use crate::viewpoint::{ViewpointConfig, DEFAULT_FILTER_FRACTION};

/// Where a scalar field comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldSource {
    /// Random Gaussian mixture.
    Synth,
    Plume,
    Ball,
    File,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldSpec {
    /// Unset means the subcommand's default scene.
    pub source: Option<FieldSource>,
    pub path: Option<PathBuf>,
    pub dims: Option<Vec<usize>>,
    /// Unset means the global seed.
    pub synth_seed: Option<u64>,
    pub gaussians: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub parallelism: usize,
    pub out: Option<PathBuf>,
    pub field: FieldSpec,
    pub colormap_dir: Option<PathBuf>,
    /// Restricts the loaded colormaps to these names, in this order.
    pub colormap_names: Option<Vec<String>>,
    pub view: ViewSetup,
    pub fit: FitConfig,
    pub reconstruction: ReconstructionConfig,
    pub smooth_sigma: f64,
    pub density_percentile: f64,
    pub metrics: Vec<ColorMetric>,
    pub z_scale: f64,
    pub k: usize,
    pub isovalues: Option<Vec<f64>>,
    /// Isovalues as fractions of the field range, used when `isovalues` is unset.
    pub isovalue_fractions: Option<Vec<f64>>,
    pub grid_colormaps: Vec<String>,
    pub grid_azimuths: Vec<f64>,
    pub grid_elevations: Vec<f64>,
    pub mesh: Option<PathBuf>,
    pub view_azimuths: Vec<f64>,
    pub view_elevations: Vec<f64>,
    pub surface_samples: usize,
    pub filter_fraction: f64,
    pub timing: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            parallelism: 1,
            out: None,
            field: FieldSpec {
                source: None,
                path: None,
                dims: None,
                synth_seed: None,
                gaussians: 10,
            },
            colormap_dir: None,
            colormap_names: None,
            view: ViewSetup::default(),
            fit: FitConfig::default(),
            reconstruction: ReconstructionConfig::default(),
            smooth_sigma: DEFAULT_SMOOTH_SIGMA,
            density_percentile: DEFAULT_DENSITY_PERCENTILE,
            metrics: ColorMetric::ALL.to_vec(),
            z_scale: DEFAULT_Z_SCALE,
            k: 20,
            isovalues: None,
            isovalue_fractions: None,
            grid_colormaps: Vec::new(),
            grid_azimuths: Vec::new(),
            grid_elevations: Vec::new(),
            mesh: None,
            view_azimuths: vec![0.0, 90.0, 180.0, 270.0],
            view_elevations: vec![-80.0, -60.0, 10.0, 20.0, 30.0],
            surface_samples: DEFAULT_SURFACE_SAMPLES,
            filter_fraction: DEFAULT_FILTER_FRACTION,
            timing: false,
        }
    }
}

fn parse<T: FromStr>(section: &str, key: &str, v: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| Error::Config(format!("[{section}] {key}: cannot parse {v:?}")))
}

/// Comma-separated list; empty entries are skipped.
pub fn parse_list<T: FromStr>(section: &str, key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(section, key, s))
        .collect()
}

fn parse_bool(section: &str, key: &str, v: &str) -> Result<bool> {
    match v.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::Config(format!("[{section}] {key}: expected a boolean, got {v:?}"))),
    }
}

fn parse_dims3(section: &str, key: &str, v: &str) -> Result<[usize; 3]> {
    let d: Vec<usize> = parse_list(section, key, v)?;
    match d[..] {
        [n] => Ok([n; 3]),
        [a, b, c] => Ok([a, b, c]),
        _ => Err(Error::Config(format!("[{section}] {key}: expected 1 or 3 sizes, got {v:?}"))),
    }
}

/// Relative paths resolve against the config file's directory.
fn resolve(base: &Path, v: &str) -> PathBuf {
    let p = PathBuf::from(v.trim());
    if p.is_absolute() {
        p
    } else {
        base.join(p)
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_ini_str(&text, base).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn from_ini_str(text: &str, base: &Path) -> Result<Self> {
        let ini = Ini::load_from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let mut c = RunConfig::default();
        for (section, props) in ini.iter() {
            let s = section.unwrap_or("general");
            for (key, v) in props.iter() {
                c.set(s, key, v, base)?;
            }
        }
        Ok(c)
    }

    fn set(&mut self, s: &str, key: &str, v: &str, base: &Path) -> Result<()> {
        match (s, key) {
            ("general", "seed") => self.seed = parse(s, key, v)?,
            ("general", "parallelism") => self.parallelism = parse(s, key, v)?,
            ("general", "out") => self.out = Some(resolve(base, v)),
            ("field", "source") => {
                self.field.source = Some(match v.trim() {
                    "synth" => FieldSource::Synth,
                    "plume" => FieldSource::Plume,
                    "ball" => FieldSource::Ball,
                    "file" => FieldSource::File,
                    _ => return Err(Error::Config(format!("[field] source: unknown source {v:?}"))),
                })
            }
            ("field", "path") => self.field.path = Some(resolve(base, v)),
            ("field", "dims") => self.field.dims = Some(parse_list(s, key, v)?),
            ("field", "synth_seed") => self.field.synth_seed = Some(parse(s, key, v)?),
            ("field", "gaussians") => self.field.gaussians = parse(s, key, v)?,
            ("colormaps", "dir") => self.colormap_dir = Some(resolve(base, v)),
            ("colormaps", "names") => self.colormap_names = Some(parse_list(s, key, v)?),
            ("view", "image_size") => self.view.image_size = parse(s, key, v)?,
            ("view", "vertical_fov_deg") => self.view.vertical_fov_deg = parse(s, key, v)?,
            ("view", "distance") => self.view.distance = parse(s, key, v)?,
            ("view", "ambient") => self.view.ambient = parse(s, key, v)?,
            ("fit", "iterations") => self.fit.iterations = parse(s, key, v)?,
            ("fit", "learning_rate") => self.fit.learning_rate = parse(s, key, v)?,
            ("fit", "rays_per_batch") => self.fit.rays_per_batch = parse(s, key, v)?,
            ("fit", "samples_per_ray") => self.fit.samples_per_ray = parse(s, key, v)?,
            ("fit", "grid_dims") => self.fit.grid_dims = parse_dims3(s, key, v)?,
            ("reconstruction", "n_points") => self.reconstruction.n_points = parse(s, key, v)?,
            ("reconstruction", "ridge") => self.reconstruction.ridge = parse(s, key, v)?,
            ("reconstruction", "epsilon") => {
                self.reconstruction.shape = match v.trim() {
                    "auto" => ShapeParameter::InverseMeanSpacing,
                    x => ShapeParameter::Fixed(parse(s, key, x)?),
                }
            }
            ("reconstruction", "smooth_sigma") => self.smooth_sigma = parse(s, key, v)?,
            ("reconstruction", "density_percentile") => self.density_percentile = parse(s, key, v)?,
            ("eval3d", "metrics") => self.metrics = parse_metrics(v)?,
            ("eval3d", "z_scale") => self.z_scale = parse(s, key, v)?,
            ("isovalue", "k") => self.k = parse(s, key, v)?,
            ("grid", "isovalues") => self.isovalues = Some(parse_list(s, key, v)?),
            ("grid", "isovalue_fractions") => self.isovalue_fractions = Some(parse_list(s, key, v)?),
            ("grid", "colormaps") => self.grid_colormaps = parse_list(s, key, v)?,
            ("grid", "azimuths_deg") => self.grid_azimuths = parse_list(s, key, v)?,
            ("grid", "elevations_deg") => self.grid_elevations = parse_list(s, key, v)?,
            ("viewpoint", "mesh") => self.mesh = Some(resolve(base, v)),
            ("viewpoint", "azimuths_deg") => self.view_azimuths = parse_list(s, key, v)?,
            ("viewpoint", "elevations_deg") => self.view_elevations = parse_list(s, key, v)?,
            ("viewpoint", "surface_samples") => self.surface_samples = parse(s, key, v)?,
            ("viewpoint", "filter_fraction") => self.filter_fraction = parse(s, key, v)?,
            ("sweep", "timing") => self.timing = parse_bool(s, key, v)?,
            _ => return Err(Error::Config(format!("unknown key {key:?} in [{s}]"))),
        }
        Ok(())
    }

    fn synth_seed(&self) -> u64 {
        self.field.synth_seed.unwrap_or(self.seed)
    }

    fn field_file(&self) -> Result<&Path> {
        let p = self
            .field
            .path
            .as_deref()
            .ok_or_else(|| Error::Config("[field] path is required for source = file".into()))?;
        if !p.exists() {
            return Err(Error::Config(format!("field file {} does not exist", p.display())));
        }
        Ok(p)
    }

    /// 2D field; defaults to a 64×64 ten-Gaussian terrain.
    pub fn field_2d(&self) -> Result<Grid2D> {
        let source = self.field.source.unwrap_or(if self.field.path.is_some() {
            FieldSource::File
        } else {
            FieldSource::Synth
        });
        let dims = match self.field.dims.as_deref() {
            None => [64, 64],
            Some(&[n]) => [n, n],
            Some(&[a, b]) => [a, b],
            Some(d) => return Err(Error::Config(format!("[field] dims: expected 1 or 2 sizes for a 2D field, got {d:?}"))),
        };
        match source {
            FieldSource::Synth => synth_gaussian_field(
                &GaussianMixtureSpec::Random {
                    count: self.field.gaussians,
                    seed: self.synth_seed(),
                },
                dims,
                [0.0; 2],
                [1.0; 2],
            ),
            FieldSource::File => {
                let p = self.field_file()?;
                if p.extension().is_some_and(|x| x == "csv") {
                    read_csv_2d(p)
                } else {
                    read_vrgf(p)?
                        .into_2d()
                        .ok_or_else(|| Error::malformed(p, "expected a 2D grid"))
                }
            }
            FieldSource::Plume | FieldSource::Ball => Err(Error::Config("plume and ball fields are 3D only".into())),
        }
    }

    /// 3D field; defaults to the 32³ plume.
    pub fn field_3d(&self) -> Result<Grid3D> {
        let source = self.field.source.unwrap_or(if self.field.path.is_some() {
            FieldSource::File
        } else {
            FieldSource::Plume
        });
        let dims = match self.field.dims.as_deref() {
            None => [32; 3],
            Some(&[n]) => [n; 3],
            Some(&[a, b, c]) => [a, b, c],
            Some(d) => return Err(Error::Config(format!("[field] dims: expected 1 or 3 sizes for a 3D field, got {d:?}"))),
        };
        let cube = |name: &str| {
            if dims.iter().all(|&d| d == dims[0]) {
                Ok(dims[0])
            } else {
                Err(Error::Config(format!("the {name} field needs equal dims, got {dims:?}")))
            }
        };
        match source {
            FieldSource::Plume => plume_field(cube("plume")?),
            FieldSource::Ball => ball_field(cube("ball")?),
            FieldSource::Synth => synth_gaussian_field(
                &GaussianMixtureSpec::Random {
                    count: self.field.gaussians,
                    seed: self.synth_seed(),
                },
                dims,
                [-1.0; 3],
                [1.0; 3],
            ),
            FieldSource::File => {
                let p = self.field_file()?;
                read_vrgf(p)?
                    .into_3d()
                    .ok_or_else(|| Error::malformed(p, "expected a 3D grid"))
            }
        }
    }

    /// Bundled maps, or every map in the configured directory, optionally
    /// filtered by name.
    pub fn colormaps(&self) -> Result<Vec<Colormap>> {
        let all = match &self.colormap_dir {
            Some(d) if !d.is_dir() => return Err(Error::Config(format!("colormap dir {} does not exist", d.display()))),
            Some(d) => Colormap::load_dir(d)?,
            None => Colormap::all_bundled(),
        };
        let maps = match &self.colormap_names {
            None => all,
            Some(names) => names
                .iter()
                .map(|n| {
                    all.iter()
                        .find(|c| c.name() == n)
                        .cloned()
                        .ok_or_else(|| Error::Config(format!("unknown colormap {n}")))
                })
                .collect::<Result<_>>()?,
        };
        if maps.is_empty() {
            return Err(Error::Config("no colormaps to evaluate".into()));
        }
        Ok(maps)
    }

    pub fn mesh(&self) -> Result<TriMesh> {
        match &self.mesh {
            None => Ok(teapot_like_mesh()),
            Some(p) if !p.exists() => Err(Error::Config(format!("mesh file {} does not exist", p.display()))),
            Some(p) => {
                let m = TriMesh::read_obj(p)?;
                if m.is_empty() {
                    return Err(Error::malformed(p, "mesh has no triangles"));
                }
                Ok(m)
            }
        }
    }

    pub fn view_reconstruction(&self) -> ViewReconstructionConfig {
        ViewReconstructionConfig {
            fit: self.fit.clone(),
            reconstruction: self.reconstruction,
            smooth_sigma: self.smooth_sigma,
            density_percentile: self.density_percentile,
        }
    }

    pub fn sweep_config(&self) -> SweepConfig {
        SweepConfig {
            seed: self.seed,
            view: self.view,
            reconstruction: self.view_reconstruction(),
            timing: self.timing,
        }
    }

    pub fn viewpoint_config(&self) -> ViewpointConfig {
        ViewpointConfig {
            seed: self.seed,
            view: self.view,
            fit: self.fit.clone(),
            surface_samples: self.surface_samples,
            filter_fraction: self.filter_fraction,
        }
    }

    /// Sweep grid with fractional isovalues resolved against `truth`.
    pub fn parameter_grid(&self, truth: &Grid3D) -> Result<ParameterGrid> {
        let isovalues = match (&self.isovalues, &self.isovalue_fractions) {
            (Some(v), _) => v.clone(),
            (None, Some(f)) => {
                let s = truth.stats();
                f.iter().map(|&t| s.denormalize(t)).collect()
            }
            (None, None) => return Err(Error::Config("[grid] needs isovalues or isovalue_fractions".into())),
        };
        let grid = ParameterGrid {
            isovalues,
            colormaps: self.grid_colormaps.clone(),
            azimuths_deg: self.grid_azimuths.clone(),
            elevations_deg: self.grid_elevations.clone(),
        };
        grid.validate()?;
        Ok(grid)
    }

    /// Checks settings every subcommand relies on.
    pub fn validate(&self) -> Result<()> {
        if self.parallelism == 0 {
            return Err(Error::Config("parallelism must be >= 1".into()));
        }
        self.fit.validate().map_err(|e| Error::Config(e.to_string()))?;
        if self.view.image_size == 0 {
            return Err(Error::Config("[view] image_size must be >= 1".into()));
        }
        if self.metrics.is_empty() {
            return Err(Error::Config("[eval3d] metrics must not be empty".into()));
        }
        Ok(())
    }
}

/// Metric names such as `de2000,hue`.
pub fn parse_metrics(v: &str) -> Result<Vec<ColorMetric>> {
    let names: Vec<&str> = v.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    if names.is_empty() {
        return Err(Error::Config("metric list is empty".into()));
    }
    names
        .iter()
        .map(|n| ColorMetric::from_name(n).ok_or_else(|| Error::Config(format!("unknown metric {n:?}"))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_without_sections() {
        let c = RunConfig::from_ini_str("", Path::new(".")).unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!(c.field_2d().unwrap().dims(), [64, 64]);
        assert_eq!(c.field_3d().unwrap().dims(), [32; 3]);
    }

    #[test]
    fn sections_and_lists() {
        let text = "seed = 9\nparallelism = 2\n[fit]\niterations = 5\ngrid_dims = 8\n[grid]\nisovalue_fractions = 0.1, 0.9\ncolormaps = viridis,gray\nazimuths_deg = 0\nelevations_deg = 10,20\n[eval3d]\nmetrics = hue, ab\n";
        let c = RunConfig::from_ini_str(text, Path::new("/cfg")).unwrap();
        assert_eq!((c.seed, c.parallelism, c.fit.iterations, c.fit.grid_dims), (9, 2, 5, [8; 3]));
        assert_eq!(c.metrics, vec![ColorMetric::HueAbs, ColorMetric::AbPlane]);
        let truth = plume_field(8).unwrap();
        let g = c.parameter_grid(&truth).unwrap();
        assert_eq!(g.len(), 8);
        let s = truth.stats();
        assert!((g.isovalues[0] - (s.min + 0.1 * s.range)).abs() < 1e-12);
    }

    #[test]
    fn relative_paths_follow_the_config_file() {
        let c = RunConfig::from_ini_str("[viewpoint]\nmesh = m.obj\n", Path::new("/a/b")).unwrap();
        assert_eq!(c.mesh, Some(PathBuf::from("/a/b/m.obj")));
        assert!(matches!(c.mesh(), Err(Error::Config(_))));
    }

    #[test]
    fn rejects_bad_input() {
        for text in ["[fit]\niterationz = 3\n", "[fit]\niterations = many\n", "[eval3d]\nmetrics = luma\n", "[field]\nsource = moon\n", "[sweep]\ntiming = maybe\n"] {
            let e = RunConfig::from_ini_str(text, Path::new(".")).unwrap_err();
            assert!(e.is_input_error(), "{text}: {e}");
        }
        let c = RunConfig {
            colormap_names: Some(vec!["nope".into()]),
            ..RunConfig::default()
        };
        assert!(c.colormaps().is_err());
        let c = RunConfig {
            parallelism: 0,
            ..RunConfig::default()
        };
        assert!(c.validate().is_err());
    }
}
