//! Exact nearest-neighbour search over a static 3D point set.

use crate::geometry::Point3;

const LEAF_SIZE: usize = 8;

const NO_CHILD: u32 = u32::MAX;

/// Tree node with the tight bounding box of its points. Leaves have
/// `left == NO_CHILD` and own `coords[start..end]`.
#[derive(Debug, Clone, Copy)]
struct Node {
    lo: [f64; 3],
    hi: [f64; 3],
    start: u32,
    end: u32,
    left: u32,
    right: u32,
}

impl Node {
    /// Squared distance from `q` to the node's box (0 inside).
    #[inline]
    fn box_dist2(&self, q: &[f64; 3]) -> f64 {
        let mut d = 0.0;
        for k in 0..3 {
            let e = (self.lo[k] - q[k]).max(q[k] - self.hi[k]).max(0.0);
            d += e * e;
        }
        d
    }
}

/// Balanced kd-tree (median splits along the widest dimension), pruned by
/// per-node bounding boxes so that queries far from the cloud stay cheap.
///
/// Queries return a true nearest neighbour. Ties between equidistant points are
/// resolved by traversal order, which is fixed for a given input.
#[derive(Debug, Clone)]
pub struct KdTree {
    coords: Vec<[f64; 3]>,
    index: Vec<u32>,
    slots: Vec<u32>,
    nodes: Vec<Node>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    /// Index into the slice the tree was built from.
    pub index: usize,
    pub dist2: f64,
}

impl KdTree {
    pub fn new(points: &[Point3]) -> Self {
        let mut items: Vec<([f64; 3], u32)> = points
            .iter()
            .enumerate()
            .map(|(i, p)| ([p.x, p.y, p.z], i as u32))
            .collect();
        let mut nodes = Vec::with_capacity(2 * points.len() / LEAF_SIZE + 1);
        if !items.is_empty() {
            build(&mut items, 0, &mut nodes);
        }
        let (coords, index): (Vec<_>, Vec<u32>) = items.into_iter().unzip();
        let mut slots = vec![0u32; index.len()];
        for (slot, &orig) in index.iter().enumerate() {
            slots[orig as usize] = slot as u32;
        }
        Self {
            coords,
            index,
            slots,
            nodes,
        }
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// Nearest stored point to `q`. Panics on an empty tree.
    pub fn nearest(&self, q: &Point3) -> Neighbor {
        self.nearest_from(q, None)
    }

    /// Nearest stored point, seeding the search bound with a previously found
    /// neighbour index (e.g. from a nearby query). The result is exact either way.
    pub fn nearest_from(&self, q: &Point3, hint: Option<usize>) -> Neighbor {
        assert!(!self.is_empty(), "nearest neighbour query on empty tree");
        let q = [q.x, q.y, q.z];
        let mut best = match hint {
            Some(h) if h < self.slots.len() => {
                let slot = self.slots[h] as usize;
                (slot, dist2(&q, &self.coords[slot]))
            }
            Some(_) |
            None => (usize::MAX, f64::INFINITY),
        };
        self.search_root(&q, &mut best);
        Neighbor {
            index: self.index[best.0] as usize,
            dist2: best.1,
        }
    }

    /// Like [`nearest_from`](Self::nearest_from) but hints and results are
    /// internal slot positions, which avoids an index remap per query.
    pub(crate) fn nearest_slot_from(&self, q: &[f64; 3], hint: u32) -> (u32, f64) {
        let slot = hint as usize;
        let mut best = if slot < self.coords.len() {
            (slot, dist2(q, &self.coords[slot]))
        } else {
            (usize::MAX, f64::INFINITY)
        };
        self.search_root(q, &mut best);
        (best.0 as u32, best.1)
    }

    pub(crate) fn original_index(&self, slot: u32) -> usize {
        self.index[slot as usize] as usize
    }

    pub(crate) fn slot_point(&self, slot: u32) -> &[f64; 3] {
        &self.coords[slot as usize]
    }

    fn search(&self, node: usize, q: &[f64; 3], best: &mut (usize, f64)) {
        let n = &self.nodes[node];
        if n.left == NO_CHILD {
            for slot in n.start as usize..n.end as usize {
                let d = dist2(q, &self.coords[slot]);
                if d < best.1 {
                    *best = (slot, d);
                }
            }
            return;
        }
        let (l, r) = (n.left as usize, n.right as usize);
        let (dl, dr) = (self.nodes[l].box_dist2(q), self.nodes[r].box_dist2(q));
        let ((near, dn), (far, df)) = if dl <= dr { ((l, dl), (r, dr)) } else { ((r, dr), (l, dl)) };
        if dn < best.1 {
            self.search(near, q, best);
        }
        if df < best.1 {
            self.search(far, q, best);
        }
    }

    /// Appends the slots of all points with squared distance `<= r2` from `q`.
    pub(crate) fn within_slots(&self, q: &[f64; 3], r2: f64, out: &mut Vec<u32>) {
        let mut stack = vec![0usize];
        while let Some(node) = stack.pop() {
            let n = &self.nodes[node];
            if n.box_dist2(q) > r2 {
                continue;
            }
            if n.left == NO_CHILD {
                for slot in n.start..n.end {
                    if dist2(q, &self.coords[slot as usize]) <= r2 {
                        out.push(slot);
                    }
                }
            } else {
                stack.push(n.right as usize);
                stack.push(n.left as usize);
            }
        }
    }

    fn search_root(&self, q: &[f64; 3], best: &mut (usize, f64)) {
        if self.nodes[0].box_dist2(q) < best.1 {
            self.search(0, q, best);
        }
    }
}

fn build(items: &mut [([f64; 3], u32)], offset: usize, nodes: &mut Vec<Node>) -> u32 {
    let id = nodes.len();
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for (p, _) in items.iter() {
        for k in 0..3 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    nodes.push(Node {
        lo,
        hi,
        start: offset as u32,
        end: (offset + items.len()) as u32,
        left: NO_CHILD,
        right: NO_CHILD,
    });
    if items.len() <= LEAF_SIZE {
        return id as u32;
    }
    let dim = (0..3)
        .max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b])))
        .unwrap_or(0);
    let mid = items.len() / 2;
    items.select_nth_unstable_by(mid, |a, b| a.0[dim].total_cmp(&b.0[dim]).then(a.1.cmp(&b.1)));
    let (left_items, right_items) = items.split_at_mut(mid);
    let left = build(left_items, offset, nodes);
    let right = build(right_items, offset + mid, nodes);
    nodes[id].left = left;
    nodes[id].right = right;
    id as u32
}

#[inline]
pub(crate) fn dist2(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    dx * dx + dy * dy + dz * dz
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_points(rng: &mut ChaCha8Rng, n: usize) -> Vec<Point3> {
        (0..n)
            .map(|_| Point3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-0.2..0.2)))
            .collect()
    }

    #[test]
    fn matches_linear_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [1, 2, 7, 8, 9, 100, 1000] {
            let pts = random_points(&mut rng, n);
            let tree = KdTree::new(&pts);
            for _ in 0..200 {
                let q = Point3::new(rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5), rng.random_range(-1.0..1.0));
                let nn = tree.nearest(&q);
                let best = pts.iter().map(|p| (p - q).norm_squared()).fold(f64::INFINITY, f64::min);
                assert_eq!(nn.dist2, best);
                assert_eq!((pts[nn.index] - q).norm_squared(), best);
            }
        }
    }

    #[test]
    fn radius_query_matches_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let pts = random_points(&mut rng, 700);
        let tree = KdTree::new(&pts);
        for _ in 0..100 {
            let q = Point3::new(rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5), 0.0);
            let r2: f64 = rng.random_range(0.0..0.3);
            let mut out = Vec::new();
            tree.within_slots(&[q.x, q.y, q.z], r2, &mut out);
            let mut got: Vec<usize> = out.iter().map(|&s| tree.original_index(s)).collect();
            got.sort_unstable();
            let want: Vec<usize> = (0..pts.len()).filter(|&i| (pts[i] - q).norm_squared() <= r2).collect();
            assert_eq!(got, want);
        }
    }

    #[test]
    fn hinted_queries_are_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pts = random_points(&mut rng, 500);
        let tree = KdTree::new(&pts);
        for _ in 0..200 {
            let q = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), 0.0];
            let hint = rng.random_range(0..500u32);
            let (slot, d) = tree.nearest_slot_from(&q, hint);
            let (_, d_plain) = tree.nearest_slot_from(&q, u32::MAX);
            assert_eq!(d, d_plain);
            assert_eq!(dist2(&q, tree.slot_point(slot)), d);
        }
    }

    #[test]
    fn duplicate_points() {
        let pts = vec![Point3::new(1.0, 1.0, 1.0); 40];
        let tree = KdTree::new(&pts);
        let nn = tree.nearest(&Point3::origin());
        assert_eq!(nn.dist2, 3.0);
    }
}
