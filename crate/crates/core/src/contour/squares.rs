use std::collections::HashMap;

use super::Contour2D;
use crate::field::Grid2D;

/// Global id of the grid edge leaving node (i, j) along `axis`.
fn edge_id(nx: usize, i: usize, j: usize, axis: usize) -> usize {
    2 * (j * nx + i) + axis
}

/// Marching squares with linear edge interpolation. A corner counts as
/// inside when its value is ≥ `isovalue`; saddles are split by the mean of
/// the four corners.
pub fn extract_contour_2d(g: &Grid2D, isovalue: f64) -> Contour2D {
    let stats = g.stats();
    if !(isovalue >= stats.min && isovalue <= stats.max) || stats.range == 0.0 {
        return Contour2D::new(Vec::new(), isovalue);
    }
    let [nx, ny] = g.dims();
    let mut points: HashMap<usize, [f64; 2]> = HashMap::new();
    let mut segments: Vec<[usize; 2]> = Vec::new();

    let crossing = |a: [usize; 2], b: [usize; 2]| -> [f64; 2] {
        let va = g.get(a);
        let vb = g.get(b);
        let t = if vb != va { (isovalue - va) / (vb - va) } else { 0.5 };
        let pa = g.position(a);
        let pb = g.position(b);
        [pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1])]
    };

    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            let c = [[i, j], [i + 1, j], [i + 1, j + 1], [i, j + 1]];
            let v = c.map(|n| g.get(n));
            let mut case = 0u8;
            for (k, &val) in v.iter().enumerate() {
                if val >= isovalue {
                    case |= 1 << k;
                }
            }
            if case == 0 || case == 15 {
                continue;
            }
            // cell edges: 0 bottom, 1 right, 2 top, 3 left
            let ids = [
                edge_id(nx, i, j, 0),
                edge_id(nx, i + 1, j, 1),
                edge_id(nx, i, j + 1, 0),
                edge_id(nx, i, j, 1),
            ];
            let ends = [(c[0], c[1]), (c[1], c[2]), (c[3], c[2]), (c[0], c[3])];
            let center_high = v.iter().sum::<f64>() / 4.0 >= isovalue;
            let pairs: &[(usize, usize)] = match case {
                1 | 14 => &[(0, 3)],
                2 | 13 => &[(0, 1)],
                3 | 12 => &[(1, 3)],
                4 | 11 => &[(1, 2)],
                6 | 9 => &[(0, 2)],
                7 | 8 => &[(2, 3)],
                5 if center_high => &[(0, 1), (2, 3)],
                5 => &[(0, 3), (1, 2)],
                10 if center_high => &[(0, 3), (1, 2)],
                10 => &[(0, 1), (2, 3)],
                _ => unreachable!(),
            };
            for &(ea, eb) in pairs {
                for e in [ea, eb] {
                    points.entry(ids[e]).or_insert_with(|| crossing(ends[e].0, ends[e].1));
                }
                segments.push([ids[ea], ids[eb]]);
            }
        }
    }
    Contour2D::new(link_segments(&segments, &points), isovalue)
}

/// Chains segments sharing edge ids into polylines; closed loops repeat
/// their first point at the end.
fn link_segments(segments: &[[usize; 2]], points: &HashMap<usize, [f64; 2]>) -> Vec<Vec<[f64; 2]>> {
    let mut incident: HashMap<usize, Vec<usize>> = HashMap::new();
    for (s, seg) in segments.iter().enumerate() {
        for &e in seg {
            incident.entry(e).or_default().push(s);
        }
    }
    let mut used = vec![false; segments.len()];
    let mut polylines = Vec::new();

    let walk = |start_seg: usize, start_edge: usize, used: &mut Vec<bool>| -> Vec<[f64; 2]> {
        let mut chain = vec![points[&start_edge]];
        let mut seg = start_seg;
        let mut at = start_edge;
        loop {
            used[seg] = true;
            let next = if segments[seg][0] == at { segments[seg][1] } else { segments[seg][0] };
            chain.push(points[&next]);
            at = next;
            match incident[&at].iter().find(|&&s| !used[s]) {
                Some(&s) => seg = s,
                None => break,
            }
        }
        chain
    };

    // open chains start at edge ids touched by a single segment
    let mut ends: Vec<usize> = incident
        .iter()
        .filter(|(_, segs)| segs.len() == 1)
        .map(|(&e, _)| e)
        .collect();
    ends.sort_unstable();
    for e in ends {
        let s = incident[&e][0];
        if !used[s] {
            polylines.push(walk(s, e, &mut used));
        }
    }
    for s in 0..segments.len() {
        if !used[s] {
            polylines.push(walk(s, segments[s][0], &mut used));
        }
    }
    polylines
}
