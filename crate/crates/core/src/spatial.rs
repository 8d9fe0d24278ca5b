//! Bounding-volume hierarchy over segments, triangles and points.
//!
//! Used for exact nearest-distance queries (signed distance fields, surface
//! metrics), ray casting (mesh rendering) and segment crossing counts
//! (inside/outside classification).

pub type Vec3 = [f64; 3];

#[inline]
pub fn sub3(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn add3(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn scale3(a: Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline]
pub fn dot3(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn cross3(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub fn norm3(a: Vec3) -> f64 {
    dot3(a, a).sqrt()
}

pub fn normalize3(a: Vec3) -> Vec3 {
    let n = norm3(a);
    if n > 0.0 {
        scale3(a, 1.0 / n)
    } else {
        a
    }
}

#[inline]
pub fn dist_sq<const N: usize>(a: [f64; N], b: [f64; N]) -> f64 {
    let mut s = 0.0;
    for i in 0..N {
        let d = a[i] - b[i];
        s += d * d;
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb<const N: usize> {
    pub lo: [f64; N],
    pub hi: [f64; N],
}

impl<const N: usize> Aabb<N> {
    pub fn empty() -> Self {
        Aabb {
            lo: [f64::INFINITY; N],
            hi: [f64::NEG_INFINITY; N],
        }
    }

    pub fn of_point(p: [f64; N]) -> Self {
        Aabb { lo: p, hi: p }
    }

    pub fn grow(&mut self, p: [f64; N]) {
        for a in 0..N {
            self.lo[a] = self.lo[a].min(p[a]);
            self.hi[a] = self.hi[a].max(p[a]);
        }
    }

    pub fn union(mut self, o: &Aabb<N>) -> Self {
        self.grow(o.lo);
        self.grow(o.hi);
        self
    }

    pub fn center(&self) -> [f64; N] {
        std::array::from_fn(|a| 0.5 * (self.lo[a] + self.hi[a]))
    }

    pub fn overlaps(&self, o: &Aabb<N>) -> bool {
        (0..N).all(|a| self.lo[a] <= o.hi[a] && o.lo[a] <= self.hi[a])
    }

    /// Squared distance from `p` to the box (0 inside).
    pub fn distance_sq(&self, p: [f64; N]) -> f64 {
        let mut s = 0.0;
        for a in 0..N {
            let d = if p[a] < self.lo[a] {
                self.lo[a] - p[a]
            } else if p[a] > self.hi[a] {
                p[a] - self.hi[a]
            } else {
                0.0
            };
            s += d * d;
        }
        s
    }
}

impl Aabb<3> {
    /// Slab test; returns the entry/exit parameters clipped to `[t_min, t_max]`.
    pub fn ray_interval(&self, origin: Vec3, inv_dir: Vec3, t_min: f64, t_max: f64) -> Option<(f64, f64)> {
        let mut t0 = t_min;
        let mut t1 = t_max;
        for a in 0..3 {
            let mut ta = (self.lo[a] - origin[a]) * inv_dir[a];
            let mut tb = (self.hi[a] - origin[a]) * inv_dir[a];
            if ta > tb {
                std::mem::swap(&mut ta, &mut tb);
            }
            // NaN from 0 * inf means the ray lies in the slab plane
            if ta.is_nan() || tb.is_nan() {
                if origin[a] < self.lo[a] || origin[a] > self.hi[a] {
                    return None;
                }
                continue;
            }
            t0 = t0.max(ta);
            t1 = t1.min(tb);
            if t0 > t1 {
                return None;
            }
        }
        Some((t0, t1))
    }
}

pub trait Primitive<const N: usize> {
    fn bounds(&self) -> Aabb<N>;
    fn distance_sq(&self, p: [f64; N]) -> f64;
}

impl<const N: usize> Primitive<N> for [f64; N] {
    fn bounds(&self) -> Aabb<N> {
        Aabb::of_point(*self)
    }

    fn distance_sq(&self, p: [f64; N]) -> f64 {
        dist_sq(*self, p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment2 {
    pub a: [f64; 2],
    pub b: [f64; 2],
}

fn orient2(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

impl Segment2 {
    /// Proper crossing with the segment `p`–`q` (touching does not count).
    pub fn crosses(&self, p: [f64; 2], q: [f64; 2]) -> bool {
        let d1 = orient2(p, q, self.a);
        let d2 = orient2(p, q, self.b);
        let d3 = orient2(self.a, self.b, p);
        let d4 = orient2(self.a, self.b, q);
        d1 * d2 < 0.0 && d3 * d4 < 0.0
    }

    pub fn length(&self) -> f64 {
        dist_sq(self.a, self.b).sqrt()
    }
}

impl Primitive<2> for Segment2 {
    fn bounds(&self) -> Aabb<2> {
        let mut b = Aabb::of_point(self.a);
        b.grow(self.b);
        b
    }

    fn distance_sq(&self, p: [f64; 2]) -> f64 {
        let d = [self.b[0] - self.a[0], self.b[1] - self.a[1]];
        let len2 = d[0] * d[0] + d[1] * d[1];
        let t = if len2 > 0.0 {
            (((p[0] - self.a[0]) * d[0] + (p[1] - self.a[1]) * d[1]) / len2).clamp(0.0, 1.0)
        } else {
            0.0
        };
        dist_sq([self.a[0] + t * d[0], self.a[1] + t * d[1]], p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triangle3 {
    pub a: Vec3,
    pub b: Vec3,
    pub c: Vec3,
}

impl Triangle3 {
    pub fn normal(&self) -> Vec3 {
        normalize3(cross3(sub3(self.b, self.a), sub3(self.c, self.a)))
    }

    pub fn area(&self) -> f64 {
        0.5 * norm3(cross3(sub3(self.b, self.a), sub3(self.c, self.a)))
    }

    /// Möller–Trumbore; returns the ray parameter of a hit in `(t_min, t_max)`.
    pub fn intersect(&self, origin: Vec3, dir: Vec3, t_min: f64, t_max: f64) -> Option<f64> {
        let e1 = sub3(self.b, self.a);
        let e2 = sub3(self.c, self.a);
        let pv = cross3(dir, e2);
        let det = dot3(e1, pv);
        if det.abs() < 1e-300 {
            return None;
        }
        let inv = 1.0 / det;
        let tv = sub3(origin, self.a);
        let u = dot3(tv, pv) * inv;
        if !(0.0..=1.0).contains(&u) {
            return None;
        }
        let qv = cross3(tv, e1);
        let v = dot3(dir, qv) * inv;
        if v < 0.0 || u + v > 1.0 {
            return None;
        }
        let t = dot3(e2, qv) * inv;
        (t > t_min && t < t_max).then_some(t)
    }

    /// Closest point on the triangle to `p` (Ericson, Real-Time Collision Detection 5.1.5).
    pub fn closest_point(&self, p: Vec3) -> Vec3 {
        let (a, b, c) = (self.a, self.b, self.c);
        let ab = sub3(b, a);
        let ac = sub3(c, a);
        let ap = sub3(p, a);
        let d1 = dot3(ab, ap);
        let d2 = dot3(ac, ap);
        if d1 <= 0.0 && d2 <= 0.0 {
            return a;
        }
        let bp = sub3(p, b);
        let d3 = dot3(ab, bp);
        let d4 = dot3(ac, bp);
        if d3 >= 0.0 && d4 <= d3 {
            return b;
        }
        let vc = d1 * d4 - d3 * d2;
        if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
            let v = d1 / (d1 - d3);
            return add3(a, scale3(ab, v));
        }
        let cp = sub3(p, c);
        let d5 = dot3(ab, cp);
        let d6 = dot3(ac, cp);
        if d6 >= 0.0 && d5 <= d6 {
            return c;
        }
        let vb = d5 * d2 - d1 * d6;
        if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
            let w = d2 / (d2 - d6);
            return add3(a, scale3(ac, w));
        }
        let va = d3 * d6 - d5 * d4;
        if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
            let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
            return add3(b, scale3(sub3(c, b), w));
        }
        let denom = 1.0 / (va + vb + vc);
        let v = vb * denom;
        let w = vc * denom;
        add3(a, add3(scale3(ab, v), scale3(ac, w)))
    }
}

impl Primitive<3> for Triangle3 {
    fn bounds(&self) -> Aabb<3> {
        let mut b = Aabb::of_point(self.a);
        b.grow(self.b);
        b.grow(self.c);
        b
    }

    fn distance_sq(&self, p: Vec3) -> f64 {
        dist_sq(self.closest_point(p), p)
    }
}

#[derive(Debug, Clone)]
struct Node<const N: usize> {
    bounds: Aabb<N>,
    // leaf: start..start+count into `order`; inner: children at `left`, `left + 1`.
    start: usize,
    count: usize,
    left: usize,
}

const LEAF_SIZE: usize = 4;

/// Static median-split BVH.
#[derive(Debug, Clone)]
pub struct Bvh<const N: usize, P> {
    prims: Vec<P>,
    order: Vec<usize>,
    nodes: Vec<Node<N>>,
}

impl<const N: usize, P: Primitive<N>> Bvh<N, P> {
    pub fn build(prims: Vec<P>) -> Self {
        let bounds: Vec<Aabb<N>> = prims.iter().map(|p| p.bounds()).collect();
        let centers: Vec<[f64; N]> = bounds.iter().map(|b| b.center()).collect();
        let mut order: Vec<usize> = (0..prims.len()).collect();
        let mut nodes = Vec::with_capacity(2 * prims.len() / LEAF_SIZE + 1);
        if !prims.is_empty() {
            nodes.push(Node {
                bounds: Aabb::empty(),
                start: 0,
                count: prims.len(),
                left: 0,
            });
            let mut stack = vec![0usize];
            while let Some(ni) = stack.pop() {
                let (start, count) = (nodes[ni].start, nodes[ni].count);
                let slice = &mut order[start..start + count];
                let mut nb = Aabb::empty();
                let mut cb = Aabb::empty();
                for &i in slice.iter() {
                    nb = nb.union(&bounds[i]);
                    cb.grow(centers[i]);
                }
                nodes[ni].bounds = nb;
                if count <= LEAF_SIZE {
                    continue;
                }
                let axis = (0..N)
                    .max_by(|&a, &b| (cb.hi[a] - cb.lo[a]).total_cmp(&(cb.hi[b] - cb.lo[b])))
                    .unwrap_or(0);
                let mid = count / 2;
                slice.select_nth_unstable_by(mid, |&x, &y| {
                    centers[x][axis].total_cmp(&centers[y][axis]).then(x.cmp(&y))
                });
                let left = nodes.len();
                nodes.push(Node {
                    bounds: Aabb::empty(),
                    start,
                    count: mid,
                    left: 0,
                });
                nodes.push(Node {
                    bounds: Aabb::empty(),
                    start: start + mid,
                    count: count - mid,
                    left: 0,
                });
                nodes[ni].left = left;
                nodes[ni].count = 0;
                stack.push(left);
                stack.push(left + 1);
            }
        }
        Bvh { prims, order, nodes }
    }

    pub fn primitives(&self) -> &[P] {
        &self.prims
    }

    pub fn is_empty(&self) -> bool {
        self.prims.is_empty()
    }

    pub fn len(&self) -> usize {
        self.prims.len()
    }

    /// Exact nearest primitive: `(squared distance, primitive index)`.
    pub fn nearest(&self, p: [f64; N]) -> Option<(f64, usize)> {
        if self.nodes.is_empty() {
            return None;
        }
        let mut best = (f64::INFINITY, usize::MAX);
        let mut stack = vec![(self.nodes[0].bounds.distance_sq(p), 0usize)];
        while let Some((d_node, ni)) = stack.pop() {
            if d_node > best.0 {
                continue;
            }
            let node = &self.nodes[ni];
            if node.count > 0 {
                for &i in &self.order[node.start..node.start + node.count] {
                    let d = self.prims[i].distance_sq(p);
                    if d < best.0 || (d == best.0 && i < best.1) {
                        best = (d, i);
                    }
                }
            } else {
                let l = node.left;
                let dl = self.nodes[l].bounds.distance_sq(p);
                let dr = self.nodes[l + 1].bounds.distance_sq(p);
                // push the farther child first so the nearer is explored first
                if dl <= dr {
                    stack.push((dr, l + 1));
                    stack.push((dl, l));
                } else {
                    stack.push((dl, l));
                    stack.push((dr, l + 1));
                }
            }
        }
        Some(best)
    }

    /// Visits every primitive whose bounds overlap `query`.
    pub fn for_each_overlapping(&self, query: &Aabb<N>, mut f: impl FnMut(usize, &P)) {
        if self.nodes.is_empty() {
            return;
        }
        let mut stack = vec![0usize];
        while let Some(ni) = stack.pop() {
            let node = &self.nodes[ni];
            if !node.bounds.overlaps(query) {
                continue;
            }
            if node.count > 0 {
                for &i in &self.order[node.start..node.start + node.count] {
                    if self.prims[i].bounds().overlaps(query) {
                        f(i, &self.prims[i]);
                    }
                }
            } else {
                stack.push(node.left);
                stack.push(node.left + 1);
            }
        }
    }
}

impl Bvh<3, Triangle3> {
    /// Nearest hit along a ray: `(t, triangle index)`.
    pub fn raycast(&self, origin: Vec3, dir: Vec3, t_max: f64) -> Option<(f64, usize)> {
        if self.nodes.is_empty() {
            return None;
        }
        let inv = [1.0 / dir[0], 1.0 / dir[1], 1.0 / dir[2]];
        let mut best: Option<(f64, usize)> = None;
        let mut limit = t_max;
        let mut stack = vec![0usize];
        while let Some(ni) = stack.pop() {
            let node = &self.nodes[ni];
            if node.bounds.ray_interval(origin, inv, 0.0, limit).is_none() {
                continue;
            }
            if node.count > 0 {
                for &i in &self.order[node.start..node.start + node.count] {
                    if let Some(t) = self.prims[i].intersect(origin, dir, 1e-9, limit) {
                        if best.is_none_or(|(bt, bi)| t < bt || (t == bt && i < bi)) {
                            best = Some((t, i));
                            limit = t;
                        }
                    }
                }
            } else {
                stack.push(node.left);
                stack.push(node.left + 1);
            }
        }
        best
    }

    /// Number of triangles properly crossed by the segment `p`–`q`.
    pub fn segment_crossings(&self, p: Vec3, q: Vec3) -> usize {
        let mut query = Aabb::of_point(p);
        query.grow(q);
        let dir = sub3(q, p);
        let mut n = 0;
        self.for_each_overlapping(&query, |_, tri| {
            if tri.intersect(p, dir, 0.0, 1.0).is_some() {
                n += 1;
            }
        });
        n
    }
}

impl Bvh<2, Segment2> {
    pub fn segment_crossings(&self, p: [f64; 2], q: [f64; 2]) -> usize {
        let mut query = Aabb::of_point(p);
        query.grow(q);
        let mut n = 0;
        self.for_each_overlapping(&query, |_, s| {
            if s.crosses(p, q) {
                n += 1;
            }
        });
        n
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn segment_distance() {
        let s = Segment2 {
            a: [0.0, 0.0],
            b: [2.0, 0.0],
        };
        assert_eq!(s.distance_sq([1.0, 1.0]), 1.0);
        assert_eq!(s.distance_sq([3.0, 0.0]), 1.0);
        assert!(s.crosses([1.0, -1.0], [1.0, 1.0]));
        assert!(!s.crosses([3.0, -1.0], [3.0, 1.0]));
    }

    #[test]
    fn triangle_queries() {
        let t = Triangle3 {
            a: [0.0, 0.0, 0.0],
            b: [1.0, 0.0, 0.0],
            c: [0.0, 1.0, 0.0],
        };
        assert_eq!(t.distance_sq([0.2, 0.2, 2.0]), 4.0);
        assert_eq!(t.distance_sq([-1.0, 0.0, 0.0]), 1.0);
        assert_eq!(t.intersect([0.2, 0.2, 1.0], [0.0, 0.0, -1.0], 0.0, 10.0), Some(1.0));
        assert_eq!(t.intersect([2.0, 2.0, 1.0], [0.0, 0.0, -1.0], 0.0, 10.0), None);
        assert!((t.area() - 0.5).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn bvh_nearest_matches_brute_force(
            pts in proptest::collection::vec((-10.0..10.0f64, -10.0..10.0f64, -10.0..10.0f64), 1..200),
            q in (-12.0..12.0f64, -12.0..12.0f64, -12.0..12.0f64),
        ) {
            let pts: Vec<[f64; 3]> = pts.into_iter().map(|(x, y, z)| [x, y, z]).collect();
            let q = [q.0, q.1, q.2];
            let bvh = Bvh::build(pts.clone());
            let (d, _) = bvh.nearest(q).unwrap();
            let brute = pts.iter().map(|p| dist_sq(*p, q)).fold(f64::INFINITY, f64::min);
            prop_assert_eq!(d, brute);
        }

        #[test]
        fn bvh_raycast_matches_brute_force(
            seeds in proptest::collection::vec((-3.0..3.0f64, -3.0..3.0f64, -3.0..3.0f64), 3..60),
            ox in -1.0..1.0f64, oy in -1.0..1.0f64,
        ) {
            let tris: Vec<Triangle3> = seeds.chunks_exact(3).map(|c| Triangle3 {
                a: [c[0].0, c[0].1, c[0].2],
                b: [c[1].0, c[1].1, c[1].2],
                c: [c[2].0, c[2].1, c[2].2],
            }).collect();
            prop_assume!(!tris.is_empty());
            let origin = [ox, oy, 10.0];
            let dir = [0.01, -0.02, -1.0];
            let bvh = Bvh::build(tris.clone());
            let brute = tris.iter().filter_map(|t| t.intersect(origin, dir, 1e-9, f64::INFINITY)).fold(f64::INFINITY, f64::min);
            let got = bvh.raycast(origin, dir, f64::INFINITY).map_or(f64::INFINITY, |h| h.0);
            prop_assert_eq!(got, brute);
        }
    }
}
