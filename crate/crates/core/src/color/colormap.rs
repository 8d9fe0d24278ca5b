use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ciede2000, srgb_to_lab, RGBColor, JND_DE2000};
use crate::error::{Error, Result};

/// Colormap files shipped with the crate, as `(name, json)` pairs.
pub const BUNDLED_COLORMAPS: [(&str, &str); 20] = [
    ("RdBu", include_str!("../../data/colormaps/RdBu.json")),
    ("Spectral", include_str!("../../data/colormaps/Spectral.json")),
    ("cividis", include_str!("../../data/colormaps/cividis.json")),
    ("coolwarm", include_str!("../../data/colormaps/coolwarm.json")),
    ("cubehelix", include_str!("../../data/colormaps/cubehelix.json")),
    ("flag", include_str!("../../data/colormaps/flag.json")),
    ("gist_ncar", include_str!("../../data/colormaps/gist_ncar.json")),
    ("gist_rainbow", include_str!("../../data/colormaps/gist_rainbow.json")),
    ("gray", include_str!("../../data/colormaps/gray.json")),
    ("hsv", include_str!("../../data/colormaps/hsv.json")),
    ("inferno", include_str!("../../data/colormaps/inferno.json")),
    ("jet", include_str!("../../data/colormaps/jet.json")),
    ("magma", include_str!("../../data/colormaps/magma.json")),
    ("plasma", include_str!("../../data/colormaps/plasma.json")),
    ("prism", include_str!("../../data/colormaps/prism.json")),
    ("rainbow", include_str!("../../data/colormaps/rainbow.json")),
    ("summer", include_str!("../../data/colormaps/summer.json")),
    ("turbo", include_str!("../../data/colormaps/turbo.json")),
    ("twilight", include_str!("../../data/colormaps/twilight.json")),
    ("viridis", include_str!("../../data/colormaps/viridis.json")),
];

#[derive(Deserialize, Serialize)]
struct ColormapFile {
    name: String,
    colors: Vec<[f64; 3]>,
}

/// A color ramp sampled at uniformly spaced parameters `t` in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct Colormap {
    name: String,
    samples: Vec<RGBColor>,
}

impl Colormap {
    pub fn new(name: impl Into<String>, samples: Vec<RGBColor>) -> Result<Self> {
        let name = name.into();
        if samples.len() < 2 {
            return Err(Error::invalid(format!(
                "colormap {name:?} needs at least 2 samples, got {}",
                samples.len()
            )));
        }
        if let Some(i) = samples.iter().position(|c| !c.is_valid()) {
            return Err(Error::invalid(format!(
                "colormap {name:?}: sample {i} outside [0,1]"
            )));
        }
        Ok(Colormap { name, samples })
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: ColormapFile = serde_json::from_str(text)?;
        let samples = file
            .colors
            .into_iter()
            .map(|[r, g, b]| RGBColor::new(r, g, b))
            .collect();
        Colormap::new(file.name, samples)
    }

    pub fn to_json_string(&self) -> String {
        let file = ColormapFile {
            name: self.name.clone(),
            colors: self.samples.iter().map(|c| [c.r, c.g, c.b]).collect(),
        };
        serde_json::to_string(&file).expect("colormap serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Colormap::from_json_str(&text).map_err(|e| Error::malformed(path, e.to_string()))
    }

    /// Loads every `*.json` file in `dir`, sorted by file name.
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Vec<Self>> {
        let dir = dir.as_ref();
        let mut paths: Vec<_> = std::fs::read_dir(dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        paths.sort();
        paths.iter().map(Colormap::load).collect()
    }

    pub fn bundled(name: &str) -> Option<Self> {
        BUNDLED_COLORMAPS
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, json)| Colormap::from_json_str(json).expect("bundled colormap is valid"))
    }

    pub fn all_bundled() -> Vec<Self> {
        BUNDLED_COLORMAPS
            .iter()
            .map(|(_, json)| Colormap::from_json_str(json).expect("bundled colormap is valid"))
            .collect()
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn samples(&self) -> &[RGBColor] {
        &self.samples
    }

    pub fn reversed(&self) -> Self {
        let mut samples = self.samples.clone();
        samples.reverse();
        Colormap {
            name: format!("{}_r", self.name),
            samples,
        }
    }

    /// Color at parameter `t`, linear in sRGB between neighboring samples.
    pub fn sample(&self, t: f64) -> RGBColor {
        let n = self.samples.len();
        let x = t.clamp(0.0, 1.0) * (n - 1) as f64;
        let i = (x.floor() as usize).min(n - 2);
        self.samples[i].lerp(self.samples[i + 1], x - i as f64)
    }

    /// Cumulative ΔE2000 arc length at each sample, starting at 0.
    pub(crate) fn cumulative_arc(&self) -> Vec<f64> {
        let labs: Vec<_> = self.samples.iter().map(|&c| srgb_to_lab(c)).collect();
        let mut acc = Vec::with_capacity(labs.len());
        let mut total = 0.0;
        acc.push(0.0);
        for w in labs.windows(2) {
            total += ciede2000(w[0], w[1]);
            acc.push(total);
        }
        acc
    }
}

/// Total ΔE2000 length along the provided samples.
pub fn arc_length(cm: &Colormap) -> f64 {
    *cm.cumulative_arc().last().expect("at least two samples")
}

/// Number of just-noticeable differences along the colormap.
pub fn discriminative_power(cm: &Colormap) -> f64 {
    arc_length(cm) / JND_DE2000
}
