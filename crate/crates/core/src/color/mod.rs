//! Color spaces, perceptual distances, colormaps and legend decoding.

mod binning;
mod ciede2000;
mod colormap;

pub use binning::{build_jnd_binning, decode_color, is_order_preserving, JndBin, JndBinning};
pub use ciede2000::ciede2000;
pub use colormap::{arc_length, discriminative_power, Colormap, BUNDLED_COLORMAPS};

use serde::{Deserialize, Serialize};

/// One just-noticeable difference, in ΔE2000 units.
pub const JND_DE2000: f64 = 2.9;

/// Chroma below which a color is treated as achromatic (hue forced to 0).
pub const ACHROMATIC_CHROMA: f64 = 1e-6;

/// sRGB color with components in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct RGBColor {
    pub r: f64,
    pub g: f64,
    pub b: f64,
}

impl RGBColor {
    pub const BLACK: RGBColor = RGBColor::new(0.0, 0.0, 0.0);
    pub const WHITE: RGBColor = RGBColor::new(1.0, 1.0, 1.0);

    pub const fn new(r: f64, g: f64, b: f64) -> Self {
        RGBColor { r, g, b }
    }

    pub fn is_valid(&self) -> bool {
        [self.r, self.g, self.b]
            .iter()
            .all(|c| c.is_finite() && (0.0..=1.0).contains(c))
    }

    pub fn clamped(self) -> Self {
        RGBColor::new(
            self.r.clamp(0.0, 1.0),
            self.g.clamp(0.0, 1.0),
            self.b.clamp(0.0, 1.0),
        )
    }

    pub fn to_linear(self) -> [f64; 3] {
        [
            srgb_decode(self.r),
            srgb_decode(self.g),
            srgb_decode(self.b),
        ]
    }

    pub fn from_linear(lin: [f64; 3]) -> Self {
        RGBColor::new(
            srgb_encode(lin[0]),
            srgb_encode(lin[1]),
            srgb_encode(lin[2]),
        )
        .clamped()
    }

    /// 8-bit quantization used for PNG output.
    pub fn to_u8(self) -> [u8; 3] {
        let q = |c: f64| (c.clamp(0.0, 1.0) * 255.0).round() as u8;
        [q(self.r), q(self.g), q(self.b)]
    }

    pub fn from_u8(px: [u8; 3]) -> Self {
        RGBColor::new(
            px[0] as f64 / 255.0,
            px[1] as f64 / 255.0,
            px[2] as f64 / 255.0,
        )
    }

    pub fn lerp(self, other: RGBColor, t: f64) -> Self {
        RGBColor::new(
            self.r + (other.r - self.r) * t,
            self.g + (other.g - self.g) * t,
            self.b + (other.b - self.b) * t,
        )
    }

    /// Rec. 709 relative luminance of the encoded components.
    pub fn luma709(self) -> f64 {
        0.2126 * self.r + 0.7152 * self.g + 0.0722 * self.b
    }
}

/// CIELAB color under D65.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct LabColor {
    pub l: f64,
    pub a: f64,
    pub b: f64,
}

impl LabColor {
    pub const fn new(l: f64, a: f64, b: f64) -> Self {
        LabColor { l, a, b }
    }
}

/// Cylindrical CIELAB: lightness, chroma, hue in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct LchColor {
    pub l: f64,
    pub c: f64,
    pub h: f64,
}

/// Distance used when matching a pixel color against legend bins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ColorMetric {
    /// Euclidean distance in CIELAB.
    DE1976,
    /// CIEDE2000.
    DE2000,
    /// Euclidean distance in the a*b* plane.
    AbPlane,
    /// Absolute hue-angle difference in CIELCH, with wrap-around.
    HueAbs,
}

impl ColorMetric {
    pub const ALL: [ColorMetric; 4] = [
        ColorMetric::DE1976,
        ColorMetric::DE2000,
        ColorMetric::AbPlane,
        ColorMetric::HueAbs,
    ];

    /// Short name used on the command line and in output files.
    pub fn name(self) -> &'static str {
        match self {
            ColorMetric::DE1976 => "de1976",
            ColorMetric::DE2000 => "de2000",
            ColorMetric::AbPlane => "ab",
            ColorMetric::HueAbs => "hue",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name.trim().to_ascii_lowercase().as_str() {
            "de1976" | "de76" => Some(ColorMetric::DE1976),
            "de2000" | "de00" => Some(ColorMetric::DE2000),
            "ab" | "ab_plane" => Some(ColorMetric::AbPlane),
            "hue" | "hue_abs" => Some(ColorMetric::HueAbs),
            _ => None,
        }
    }
}

fn srgb_decode(c: f64) -> f64 {
    if c <= 0.04045 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

fn srgb_encode(c: f64) -> f64 {
    if c <= 0.0031308 {
        12.92 * c
    } else {
        1.055 * c.powf(1.0 / 2.4) - 0.055
    }
}

const SRGB_TO_XYZ: [[f64; 3]; 3] = [
    [0.4124564, 0.3575761, 0.1804375],
    [0.2126729, 0.7151522, 0.0721750],
    [0.0193339, 0.1191920, 0.9503041],
];

// Reference white taken as the matrix row sums so that sRGB white lands on
// the neutral axis exactly.
const D65_WHITE: [f64; 3] = [
    SRGB_TO_XYZ[0][0] + SRGB_TO_XYZ[0][1] + SRGB_TO_XYZ[0][2],
    SRGB_TO_XYZ[1][0] + SRGB_TO_XYZ[1][1] + SRGB_TO_XYZ[1][2],
    SRGB_TO_XYZ[2][0] + SRGB_TO_XYZ[2][1] + SRGB_TO_XYZ[2][2],
];

pub fn srgb_to_lab(c: RGBColor) -> LabColor {
    let lin = c.to_linear();
    let mut xyz = [0.0; 3];
    for (i, row) in SRGB_TO_XYZ.iter().enumerate() {
        xyz[i] = row[0] * lin[0] + row[1] * lin[1] + row[2] * lin[2];
    }
    const DELTA: f64 = 6.0 / 29.0;
    let f = |t: f64| {
        if t > DELTA * DELTA * DELTA {
            t.cbrt()
        } else {
            t / (3.0 * DELTA * DELTA) + 4.0 / 29.0
        }
    };
    let fx = f(xyz[0] / D65_WHITE[0]);
    let fy = f(xyz[1] / D65_WHITE[1]);
    let fz = f(xyz[2] / D65_WHITE[2]);
    LabColor::new(116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz))
}

pub fn lab_to_lch(c: LabColor) -> LchColor {
    let chroma = c.a.hypot(c.b);
    let h = if chroma <= ACHROMATIC_CHROMA {
        0.0
    } else {
        normalize_degrees(c.b.atan2(c.a).to_degrees())
    };
    LchColor {
        l: c.l,
        c: chroma,
        h,
    }
}

pub(crate) fn normalize_degrees(h: f64) -> f64 {
    let h = h.rem_euclid(360.0);
    // rem_euclid can return exactly 360.0 for tiny negative inputs
    if h >= 360.0 {
        0.0
    } else {
        h
    }
}

pub fn color_distance(metric: ColorMetric, x: LabColor, y: LabColor) -> f64 {
    match metric {
        ColorMetric::DE1976 => {
            ((x.l - y.l).powi(2) + (x.a - y.a).powi(2) + (x.b - y.b).powi(2)).sqrt()
        }
        ColorMetric::DE2000 => ciede2000(x, y),
        ColorMetric::AbPlane => (x.a - y.a).hypot(x.b - y.b),
        ColorMetric::HueAbs => {
            let dh = (lab_to_lch(x).h - lab_to_lch(y).h).abs();
            dh.min(360.0 - dh)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn white_and_black() {
        let w = srgb_to_lab(RGBColor::WHITE);
        assert_abs_diff_eq!(w.l, 100.0, epsilon = 1e-9);
        assert_abs_diff_eq!(w.a, 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(w.b, 0.0, epsilon = 1e-9);
        let k = srgb_to_lab(RGBColor::BLACK);
        assert_abs_diff_eq!(k.l, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(k.a, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(k.b, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn lch_conventions() {
        let gray = lab_to_lch(LabColor::new(50.0, 0.0, 0.0));
        assert_eq!((gray.c, gray.h), (0.0, 0.0));
        let t = lab_to_lch(LabColor::new(50.0, 3.0, 4.0));
        assert_abs_diff_eq!(t.c, 5.0, epsilon = 1e-12);
        assert_abs_diff_eq!(t.h, 53.130_102_354_155_98, epsilon = 1e-9);
        let neg = lab_to_lch(LabColor::new(50.0, -1.0, 0.0));
        assert_abs_diff_eq!(neg.c, 1.0);
        assert_abs_diff_eq!(neg.h, 180.0);
    }

    #[test]
    fn metric_examples() {
        let white = LabColor::new(100.0, 0.0, 0.0);
        let black = LabColor::new(0.0, 0.0, 0.0);
        assert_abs_diff_eq!(color_distance(ColorMetric::DE1976, white, black), 100.0);
        let at = |deg: f64| {
            let r = deg.to_radians();
            LabColor::new(50.0, 20.0 * r.cos(), 20.0 * r.sin())
        };
        assert_abs_diff_eq!(
            color_distance(ColorMetric::HueAbs, at(350.0), at(10.0)),
            20.0,
            epsilon = 1e-9
        );
        for m in ColorMetric::ALL {
            assert_eq!(color_distance(m, at(33.0), at(33.0)), 0.0);
        }
    }

    #[test]
    fn achromatic_hue_is_zero() {
        let gray = srgb_to_lab(RGBColor::new(0.4, 0.4, 0.4));
        assert_eq!(lab_to_lch(gray).h, 0.0);
    }

    #[test]
    fn metric_names_roundtrip() {
        for m in ColorMetric::ALL {
            assert_eq!(ColorMetric::from_name(m.name()), Some(m));
        }
        assert_eq!(ColorMetric::from_name("cie94"), None);
    }

    fn lab_strategy() -> impl Strategy<Value = LabColor> {
        (0.0..100.0f64, -120.0..120.0f64, -120.0..120.0f64)
            .prop_map(|(l, a, b)| LabColor::new(l, a, b))
    }

    proptest! {
        #[test]
        fn distances_symmetric_nonnegative(x in lab_strategy(), y in lab_strategy()) {
            for m in ColorMetric::ALL {
                let d1 = color_distance(m, x, y);
                let d2 = color_distance(m, y, x);
                prop_assert!(d1 >= 0.0);
                prop_assert!((d1 - d2).abs() <= 1e-9 * (1.0 + d1));
                prop_assert_eq!(color_distance(m, x, x), 0.0);
            }
            prop_assert!(color_distance(ColorMetric::HueAbs, x, y) <= 180.0);
        }

        #[test]
        fn srgb_lab_lightness_in_range(r in 0.0..=1.0f64, g in 0.0..=1.0f64, b in 0.0..=1.0f64) {
            let lab = srgb_to_lab(RGBColor::new(r, g, b));
            prop_assert!(lab.l >= -1e-9 && lab.l <= 100.0 + 1e-9);
        }

        #[test]
        fn hue_normalized(x in lab_strategy()) {
            let lch = lab_to_lch(x);
            prop_assert!(lch.h >= 0.0 && lch.h < 360.0);
            prop_assert!(lch.c >= 0.0);
        }
    }
}
