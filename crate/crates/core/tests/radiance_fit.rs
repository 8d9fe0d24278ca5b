//! Fitting a voxel radiance field to rendered views of a sphere.

use visrecon::radiance::{fit_radiance_field, volume_render, FitConfig, PosedImage};
use visrecon::render::{render_mesh, uv_sphere, view_set_cameras, ImageRGB, ViewSetup};
use visrecon::viewpoint::fit_box;

fn rmse(a: &ImageRGB, b: &ImageRGB) -> f64 {
    let sq: f64 = a
        .pixels()
        .iter()
        .zip(b.pixels())
        .map(|(p, q)| (p.r - q.r).powi(2) + (p.g - q.g).powi(2) + (p.b - q.b).powi(2))
        .sum();
    (sq / (3 * a.pixels().len()) as f64).sqrt()
}

#[test]
fn nine_view_fit_reproduces_training_views() {
    let mesh = uv_sphere([0.0; 3], 0.5, 24, 48);
    let bbox = fit_box(&mesh);
    let view = ViewSetup {
        image_size: 128,
        ..ViewSetup::default()
    };
    let center = view.camera(30.0, 20.0, bbox.center()).unwrap();
    let views: Vec<PosedImage> = view_set_cameras(&center)
        .iter()
        .map(|c| PosedImage::new(render_mesh(&mesh, c, view.ambient).image, *c).unwrap())
        .collect();
    assert_eq!(views.len(), 9);
    let cfg = FitConfig {
        iterations: 300,
        grid_dims: [64; 3],
        seed: 3,
        ..FitConfig::default()
    };
    let fit = fit_radiance_field(&views, bbox, &cfg).unwrap();
    let h = &fit.loss_history;
    assert_eq!(h.len(), 300);
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    assert!(mean(&h[250..]) < 0.5 * mean(&h[..50]), "loss {} -> {}", mean(&h[..50]), mean(&h[250..]));
    for (i, v) in views.iter().enumerate() {
        let e = rmse(&volume_render(&fit.field, &v.camera), &v.image);
        assert!(e <= 0.1, "view {i}: rmse {e}");
    }
}
