//! Reference values produced by `oracles/color_oracle.py`, an independent
//! scalar implementation of the sRGB to CIELAB pipeline and CIEDE2000.

use visrecon::color::{arc_length, build_jnd_binning, srgb_to_lab, Colormap, RGBColor};

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * b.abs().max(1.0)
}

#[test]
fn lab_of_a_brown() {
    let l = srgb_to_lab(RGBColor::new(0.5, 0.25, 0.1));
    assert!(close(l.l, 34.524369575204595), "{l:?}");
    assert!(close(l.a, 24.610425028905507), "{l:?}");
    assert!(close(l.b, 34.58223753184119), "{l:?}");
}

#[test]
fn bundled_arc_lengths_and_bins() {
    for (name, arc, bins) in [
        ("gray", 75.1532476965109, 26),
        ("viridis", 120.54712585479209, 42),
        ("jet", 234.4991736003159, 81),
    ] {
        let cm = Colormap::bundled(name).unwrap();
        let a = arc_length(&cm);
        assert!(close(a, arc), "{name}: {a}");
        assert_eq!(build_jnd_binning(&cm).len(), bins, "{name}");
    }
}
