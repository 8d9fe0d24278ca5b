use std::collections::VecDeque;

use rayon::prelude::*;

use super::Surface;
use crate::error::{Error, Result};
use crate::field::Grid;

/// Irrational fractions of a cell used to nudge segment endpoints off the
/// grid lines the contour vertices sit on.
const NUDGE: [f64; 3] = [0.414_213_562_373_095, 0.732_050_807_568_877, 0.236_067_977_499_79];
const NUDGE_SCALE: f64 = 1e-6;

fn distances<const N: usize, S: Surface<N>>(grid: &Grid<N>, index: &S::Index) -> Vec<f64> {
    (0..grid.len())
        .into_par_iter()
        .map(|i| S::nearest_sq(index, grid.position_of(i)).sqrt())
        .collect()
}

/// Exact distance from every node to the nearest surface primitive.
pub fn unsigned_distance<const N: usize, S: Surface<N>>(grid: &Grid<N>, surface: &S) -> Result<Grid<N>> {
    if surface.is_empty() {
        return Err(Error::EmptyContour);
    }
    let index = surface.index();
    grid.with_values(distances::<N, S>(grid, &index))
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Signed distance, negative inside. Nodes are grouped into regions that
/// can be connected by grid edges without crossing the surface; regions
/// are two-colored across crossed edges, and the color holding most of the
/// domain boundary is the outside.
pub fn signed_distance<const N: usize, S: Surface<N>>(grid: &Grid<N>, surface: &S) -> Result<Grid<N>> {
    if surface.is_empty() {
        return Err(Error::EmptyContour);
    }
    let index = surface.index();
    let dist = distances::<N, S>(grid, &index);
    let dims = grid.dims();
    let spacing = grid.spacing();
    let mut strides = [1usize; N];
    for a in 1..N {
        strides[a] = strides[a - 1] * dims[a - 1];
    }
    let nudge: [f64; N] = std::array::from_fn(|a| spacing[a] * NUDGE_SCALE * NUDGE[a % 3]);
    // shift an edge off its grid lines, toward the interior so it stays inside the domain
    let shifted = |lin: usize, idx: &[usize; N], axis: usize| -> [f64; N] {
        let p = grid.position_of(lin);
        std::array::from_fn(|b| {
            if b != axis && idx[b] + 1 == dims[b] {
                p[b] - nudge[b]
            } else {
                p[b] + nudge[b]
            }
        })
    };

    // crossed[lin][a]: the edge leaving lin along axis a crosses the surface an odd number of times
    let crossed: Vec<[bool; N]> = (0..grid.len())
        .into_par_iter()
        .map(|lin| {
            let idx = grid.multi_index(lin);
            std::array::from_fn(|a| {
                if idx[a] + 1 >= dims[a] {
                    return false;
                }
                let q = lin + strides[a];
                // the segment cannot reach a surface farther away than its length
                let reach = spacing[a] * (1.0 + 1e-6);
                if dist[lin] > reach && dist[q] > reach {
                    return false;
                }
                S::crossings(&index, shifted(lin, &idx, a), shifted(q, &idx, a)) % 2 == 1
            })
        })
        .collect();

    let mut parent: Vec<usize> = (0..grid.len()).collect();
    for lin in 0..grid.len() {
        for a in 0..N {
            let idx = grid.multi_index(lin);
            if idx[a] + 1 < dims[a] && !crossed[lin][a] {
                let (ra, rb) = (find(&mut parent, lin), find(&mut parent, lin + strides[a]));
                if ra != rb {
                    parent[ra.max(rb)] = ra.min(rb);
                }
            }
        }
    }
    let mut comp_of_root = vec![usize::MAX; grid.len()];
    let mut comp = vec![0usize; grid.len()];
    let mut ncomp = 0;
    for lin in 0..grid.len() {
        let r = find(&mut parent, lin);
        if comp_of_root[r] == usize::MAX {
            comp_of_root[r] = ncomp;
            ncomp += 1;
        }
        comp[lin] = comp_of_root[r];
    }
    let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); ncomp];
    for lin in 0..grid.len() {
        for a in 0..N {
            if crossed[lin][a] {
                let (x, y) = (comp[lin], comp[lin + strides[a]]);
                if x != y {
                    adjacency[x].push(y);
                    adjacency[y].push(x);
                }
            }
        }
    }
    let mut color = vec![u8::MAX; ncomp];
    for start in 0..ncomp {
        if color[start] != u8::MAX {
            continue;
        }
        color[start] = 0;
        let mut queue = VecDeque::from([start]);
        while let Some(c) = queue.pop_front() {
            for &nb in &adjacency[c] {
                if color[nb] == u8::MAX {
                    color[nb] = 1 - color[c];
                    queue.push_back(nb);
                }
            }
        }
    }
    let mut boundary = [0usize; 2];
    for lin in 0..grid.len() {
        let idx = grid.multi_index(lin);
        if (0..N).any(|a| idx[a] == 0 || idx[a] + 1 == dims[a]) {
            boundary[color[comp[lin]] as usize] += 1;
        }
    }
    let outside = match boundary[0].cmp(&boundary[1]) {
        std::cmp::Ordering::Greater => 0,
        std::cmp::Ordering::Less => 1,
        std::cmp::Ordering::Equal => color[comp[0]],
    };
    let values = (0..grid.len())
        .map(|lin| if color[comp[lin]] == outside { dist[lin] } else { -dist[lin] })
        .collect();
    grid.with_values(values)
}
