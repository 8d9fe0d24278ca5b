//! Values frozen after the first computation; the synthetic field checksum
//! is also reproduced by an independent Python evaluation of the kernels.

use visrecon::baselines::{bruckner_isovalue, carr_isovalue, compare_isovalue_selectors, evenly_spaced_isovalues, kindlmann_isovalue};
use visrecon::contour::{select_isovalue_by_reconstruction, Hypothesis, ReconstructionConfig};
use visrecon::field::{synth_gaussian_field, GaussianMixtureSpec};
use visrecon::scenes::smooth_terrain;

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * b.abs().max(1.0)
}

#[test]
fn ten_kernel_seed_42_checksum() {
    let spec = GaussianMixtureSpec::<2>::Random { count: 10, seed: 42 };
    let k = spec.kernels([0.0; 2], [1.0; 2]);
    assert_eq!(k.len(), 10);
    assert_eq!(k[0].center, [0.6818961923066714, 0.950275407672484]);
    assert_eq!(k[9].amplitude, 1.3815222248510222);
    let g = synth_gaussian_field(&spec, [64, 64], [0.0; 2], [1.0; 2]).unwrap();
    let sum: f64 = g.values().iter().sum();
    assert!(close(sum, 6302.232743618287), "{sum}");
    assert!(close(g.get([0, 0]), 1.7006050752826063));
    assert!(close(g.get([63, 63]), 0.2774169945879745));
    assert!(close(g.get([12, 40]), 0.6641305232710837));
}

#[test]
fn seed_7_reconstruction_selection() {
    let g = smooth_terrain([64, 64], 7).unwrap();
    let candidates = evenly_spaced_isovalues(g.stats(), 20);
    let s = select_isovalue_by_reconstruction(&g, &candidates, &ReconstructionConfig::default(), 0).unwrap();
    assert_eq!(s.best_index, 6);
    assert!(close(s.best_isovalue, 1.1017569397995908), "{}", s.best_isovalue);
    assert!(close(s.errors[6], 55.676532592828366), "{}", s.errors[6]);
    assert_eq!(s.hypotheses[6], Some(Hypothesis::InsideHigh));
    assert_eq!(s.hypotheses[1], Some(Hypothesis::InsideLow));
    assert!(close(s.errors[0], 84.81659737728914));
}

#[test]
fn seed_7_baselines() {
    let g = smooth_terrain([64, 64], 7).unwrap();
    let (b, map) = bruckner_isovalue(&g, 20).unwrap();
    assert_eq!(map.len(), 20);
    assert!(close(b, 2.5099153723197234), "{b}");
    assert!(close(kindlmann_isovalue(&g), 1.5401862540065516));
    let s = g.stats();
    assert_eq!(carr_isovalue(s), (s.min + s.max) / 2.0);
    let c = compare_isovalue_selectors(&g, 20, &ReconstructionConfig::default(), 0).unwrap();
    assert!(c.dominates());
    assert!(close(c.kindlmann.error, 60.50735690741343));
    assert!(close(c.carr.error, 63.543495476575295));
    assert!(close(c.bruckner.error, 101.77436627454398));
}
