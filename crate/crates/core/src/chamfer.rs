//! Symmetric chamfer distance.
//!
//! Convention: `forward = mean_{p in a} min_{q in b} |p - q|^2`, `backward` the
//! same with the roles swapped, `value = forward + backward`. Nearest
//! neighbours come from an exact kd-tree; [`brute_force_chamfer`] is the
//! all-pairs reference.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{MotionAxis, MotionKind, PartMotion, Point3, PointCloud};
use crate::kdtree::{dist2, KdTree};

pub const CHAMFER_CONVENTION: &str =
    "squared euclidean nearest-neighbour distance, mean over each cloud, forward + backward";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChamferResult {
    pub value: f64,
    pub forward_term: f64,
    pub backward_term: f64,
}

/// Per-pair penalty. `Squared` is the default objective; `Euclidean` (unsquared
/// distances) exists to check that candidate rankings do not hinge on squaring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChamferVariant {
    #[default]
    Squared,
    Euclidean,
}

impl ChamferVariant {
    #[inline]
    fn penalty(self, dist2: f64) -> f64 {
        match self {
            ChamferVariant::Squared => dist2,
            ChamferVariant::Euclidean => dist2.sqrt(),
        }
    }
}

pub fn chamfer_distance(a: &[Point3], b: &[Point3]) -> Result<ChamferResult> {
    chamfer_distance_with(a, b, ChamferVariant::Squared)
}

pub fn chamfer_distance_with(a: &[Point3], b: &[Point3], variant: ChamferVariant) -> Result<ChamferResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyInput("chamfer distance needs two non-empty clouds"));
    }
    let tree_a = KdTree::new(a);
    let tree_b = KdTree::new(b);
    let one_way = |src: &[Point3], tree: &KdTree| {
        src.iter().map(|p| variant.penalty(tree.nearest(p).dist2)).sum::<f64>() / src.len() as f64
    };
    let forward_term = one_way(a, &tree_b);
    let backward_term = one_way(b, &tree_a);
    Ok(ChamferResult {
        value: forward_term + backward_term,
        forward_term,
        backward_term,
    })
}

/// O(|a|·|b|) reference implementation.
pub fn brute_force_chamfer(a: &[Point3], b: &[Point3]) -> Result<ChamferResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyInput("chamfer distance needs two non-empty clouds"));
    }
    let one_way = |src: &[Point3], dst: &[Point3]| {
        src.iter()
            .map(|p| dst.iter().map(|q| (p - q).norm_squared()).fold(f64::INFINITY, f64::min))
            .sum::<f64>()
            / src.len() as f64
    };
    let forward_term = one_way(a, b);
    let backward_term = one_way(b, a);
    Ok(ChamferResult {
        value: forward_term + backward_term,
        forward_term,
        backward_term,
    })
}

/// Sum of per-frame chamfer values over aligned frame lists.
pub fn chamfer_sequence(pred: &[PointCloud], obs: &[PointCloud]) -> Result<f64> {
    if pred.len() != obs.len() {
        return Err(Error::FrameCount {
            predicted: pred.len(),
            observed: obs.len(),
        });
    }
    if pred.is_empty() {
        return Err(Error::EmptyInput("no frames"));
    }
    pred.iter()
        .zip(obs)
        .map(|(p, o)| chamfer_distance(p.points(), o.points()).map(|r| r.value))
        .sum()
}

/// A point set with its kd-tree built once.
#[derive(Debug, Clone)]
pub struct IndexedCloud {
    points: Vec<Point3>,
    tree: KdTree,
    order: Vec<u32>,
}

impl IndexedCloud {
    pub fn new(points: Vec<Point3>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyInput("indexed cloud has no points"));
        }
        let tree = KdTree::new(&points);
        let order = scrambled_order(points.len());
        Ok(Self { points, tree, order })
    }

    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn tree(&self) -> &KdTree {
        &self.tree
    }
}

/// Visit order that spreads consecutive indices over the whole cloud, so a
/// running partial sum is representative early on.
fn scrambled_order(n: usize) -> Vec<u32> {
    let mut stride = ((n as f64) * 0.618_033_988_75) as usize | 1;
    while gcd(stride, n) != 1 {
        stride += 1;
    }
    (0..n).map(|i| ((i * stride) % n) as u32).collect()
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Nearest-neighbour assignment found during one evaluation.
#[derive(Debug, Clone, Default)]
pub struct Correspondences {
    /// For each source point, the index of its nearest target point.
    pub forward: Vec<usize>,
    /// For each target point, the index of its nearest moved-source point.
    pub backward: Vec<usize>,
}

const BLOCKS: usize = 32;

/// Chamfer between a rigidly moved source cloud and a fixed target, without
/// materializing the moved cloud or rebuilding trees.
///
/// Forward distances query `motion(s)` in the target tree; backward distances
/// query `motion⁻¹(t)` in the source tree, which is equivalent because the
/// motion is rigid. Previous nearest neighbours seed each query's bound.
#[derive(Debug, Clone)]
pub struct MotionMatcher<'a> {
    source: &'a IndexedCloud,
    target: &'a IndexedCloud,
    variant: ChamferVariant,
    forward_hint: Vec<u32>,
    backward_hint: Vec<u32>,
}

impl<'a> MotionMatcher<'a> {
    pub fn new(source: &'a IndexedCloud, target: &'a IndexedCloud, variant: ChamferVariant) -> Self {
        Self {
            source,
            target,
            variant,
            forward_hint: vec![u32::MAX; source.len()],
            backward_hint: vec![u32::MAX; target.len()],
        }
    }

    pub fn evaluate(&mut self, motion: &PartMotion) -> f64 {
        self.run(motion, f64::INFINITY, None, usize::MAX)
            .expect("unbounded evaluation cannot be pruned")
    }

    /// Returns `None` as soon as the partial sum exceeds `bound`; otherwise
    /// the same value [`evaluate`](Self::evaluate) would return.
    pub fn evaluate_bounded(&mut self, motion: &PartMotion, bound: f64) -> Option<f64> {
        self.run(motion, bound, None, usize::MAX)
    }

    /// Bounded evaluation over at most `count` points of each cloud (a fixed,
    /// spatially spread subset). Every query is still answered against the
    /// full opposite cloud, so each term is a subset mean of the exact
    /// nearest-neighbour distances.
    pub fn evaluate_sampled(&mut self, motion: &PartMotion, bound: f64, count: usize) -> Option<f64> {
        self.run(motion, bound, None, count.max(1))
    }

    pub fn evaluate_with_correspondences(&mut self, motion: &PartMotion) -> (f64, Correspondences) {
        let mut corr = Correspondences {
            forward: vec![0; self.source.len()],
            backward: vec![0; self.target.len()],
        };
        let value = self
            .run(motion, f64::INFINITY, Some(&mut corr), usize::MAX)
            .expect("unbounded evaluation cannot be pruned");
        (value, corr)
    }

    fn run(
        &mut self,
        motion: &PartMotion,
        bound: f64,
        mut corr: Option<&mut Correspondences>,
        limit: usize,
    ) -> Option<f64> {
        let inverse = motion.inverse();
        let (src, dst) = (self.source, self.target);
        let (n, m) = (src.len().min(limit), dst.len().min(limit));
        let (inv_n, inv_m) = (1.0 / n as f64, 1.0 / m as f64);
        let (mut fsum, mut bsum) = (0.0, 0.0);
        for block in 0..BLOCKS {
            for &i in &src.order[block * n / BLOCKS..(block + 1) * n / BLOCKS] {
                let p = motion.apply(&src.points[i as usize]);
                let (slot, d2) = dst.tree.nearest_slot_from(&[p.x, p.y, p.z], self.forward_hint[i as usize]);
                self.forward_hint[i as usize] = slot;
                fsum += self.variant.penalty(d2);
                if let Some(c) = corr.as_deref_mut() {
                    c.forward[i as usize] = dst.tree.original_index(slot);
                }
            }
            for &j in &dst.order[block * m / BLOCKS..(block + 1) * m / BLOCKS] {
                let q = inverse.apply(&dst.points[j as usize]);
                let (slot, d2) = src.tree.nearest_slot_from(&[q.x, q.y, q.z], self.backward_hint[j as usize]);
                self.backward_hint[j as usize] = slot;
                bsum += self.variant.penalty(d2);
                if let Some(c) = corr.as_deref_mut() {
                    c.backward[j as usize] = src.tree.original_index(slot);
                }
            }
            if fsum * inv_n + bsum * inv_m > bound {
                return None;
            }
        }
        Some(fsum * inv_n + bsum * inv_m)
    }
}

/// Candidate neighbour lists valid for every magnitude in
/// `[center - half_width, center + half_width]` about one axis.
///
/// Over that interval a point at distance `r` from the axis moves at most
/// `half_width * r` (revolute) or `half_width` (prismatic). Any point farther
/// than `d + 2δ` from a query's position at the center can never become its
/// nearest neighbour, so minimizing over the retained candidates is exact.
#[derive(Debug, Clone)]
pub struct LocalChamfer<'a> {
    source: &'a IndexedCloud,
    target: &'a IndexedCloud,
    variant: ChamferVariant,
    axis: MotionAxis,
    lo: f64,
    hi: f64,
    cache: MotionCache,
}

#[derive(Debug, Clone, Default)]
struct CandidateLists {
    offsets: Vec<u32>,
    slots: Vec<u32>,
}

impl CandidateLists {
    fn get(&self, i: usize) -> &[u32] {
        &self.slots[self.offsets[i] as usize..self.offsets[i + 1] as usize]
    }
}

/// Nearest-neighbour candidates for every forward and backward query, valid
/// for any motion under which each query point stays within its reach of
/// where the build motion put it.
#[derive(Debug, Clone, Default)]
pub(crate) struct MotionCache {
    forward: CandidateLists,
    backward: CandidateLists,
}

impl<'a> MotionMatcher<'a> {
    /// Builds a [`MotionCache`] at `motion`. `forward_reach(s)` bounds how far
    /// `motion(s)` may move for a source point `s`, `backward_reach(t)` how
    /// far `motion⁻¹(t)` may move for a target point `t`.
    pub(crate) fn cache(
        &mut self,
        motion: &PartMotion,
        forward_reach: impl Fn(&Point3) -> f64,
        backward_reach: impl Fn(&Point3) -> f64,
    ) -> MotionCache {
        let lists = |queries: &IndexedCloud,
                     tree: &KdTree,
                     hints: &mut [u32],
                     mv: &PartMotion,
                     reach: &dyn Fn(&Point3) -> f64| {
            let mut out = CandidateLists {
                offsets: Vec::with_capacity(queries.len() + 1),
                slots: Vec::new(),
            };
            out.offsets.push(0);
            for (i, p) in queries.points.iter().enumerate() {
                let q = mv.apply(p);
                let q = [q.x, q.y, q.z];
                let (slot, d2) = tree.nearest_slot_from(&q, hints[i]);
                hints[i] = slot;
                // Slack covers rounding in the moved coordinates.
                let r = (d2.sqrt() + 2.0 * reach(p)) * (1.0 + 1e-9) + 1e-12;
                tree.within_slots(&q, r * r, &mut out.slots);
                out.offsets.push(out.slots.len() as u32);
            }
            out
        };
        let (src, dst) = (self.source, self.target);
        MotionCache {
            forward: lists(src, dst.tree(), &mut self.forward_hint, motion, &forward_reach),
            backward: lists(dst, src.tree(), &mut self.backward_hint, &motion.inverse(), &backward_reach),
        }
    }

    /// Same value as [`evaluate`](Self::evaluate) (bitwise) for any motion
    /// inside the cache's validity region.
    pub(crate) fn evaluate_cached(
        &self,
        cache: &MotionCache,
        motion: &PartMotion,
        corr: Option<&mut Correspondences>,
    ) -> f64 {
        cached_sum(self.source, self.target, self.variant, cache, motion, corr)
    }

    /// Builds a [`LocalChamfer`] around `center` and returns it with the
    /// chamfer value at `center`.
    pub fn localize(&mut self, axis: &MotionAxis, center: f64, half_width: f64) -> (f64, LocalChamfer<'a>) {
        let motion = PartMotion::new_unchecked(axis, center);
        let half_width = half_width.abs();
        let reach = |p: &Point3| -> f64 {
            match axis.kind {
                MotionKind::Revolute => {
                    let v = p - axis.origin;
                    (v - axis.direction.into_inner() * v.dot(&axis.direction)).norm() * half_width
                }
                MotionKind::Prismatic => half_width,
            }
        };
        let cache = self.cache(&motion, reach, reach);
        let local = LocalChamfer {
            source: self.source,
            target: self.target,
            variant: self.variant,
            axis: *axis,
            lo: center - half_width,
            hi: center + half_width,
            cache,
        };
        let value = local.evaluate(center);
        (value, local)
    }
}

fn cached_sum(
    src: &IndexedCloud,
    dst: &IndexedCloud,
    variant: ChamferVariant,
    cache: &MotionCache,
    motion: &PartMotion,
    mut corr: Option<&mut Correspondences>,
) -> f64 {
    let inverse = motion.inverse();
    let (n, m) = (src.len(), dst.len());
    let nearest = |q: Point3, cands: &[u32], tree: &KdTree| {
        let q = [q.x, q.y, q.z];
        let mut best = (u32::MAX, f64::INFINITY);
        for &s in cands {
            let d2 = dist2(&q, tree.slot_point(s));
            if d2 < best.1 {
                best = (s, d2);
            }
        }
        best
    };
    let (mut fsum, mut bsum) = (0.0, 0.0);
    for block in 0..BLOCKS {
        for &i in &src.order[block * n / BLOCKS..(block + 1) * n / BLOCKS] {
            let p = motion.apply(&src.points[i as usize]);
            let (slot, d2) = nearest(p, cache.forward.get(i as usize), dst.tree());
            fsum += variant.penalty(d2);
            if let Some(c) = corr.as_deref_mut() {
                c.forward[i as usize] = dst.tree.original_index(slot);
            }
        }
        for &j in &dst.order[block * m / BLOCKS..(block + 1) * m / BLOCKS] {
            let q = inverse.apply(&dst.points[j as usize]);
            let (slot, d2) = nearest(q, cache.backward.get(j as usize), src.tree());
            bsum += variant.penalty(d2);
            if let Some(c) = corr.as_deref_mut() {
                c.backward[j as usize] = src.tree.original_index(slot);
            }
        }
    }
    fsum * (1.0 / n as f64) + bsum * (1.0 / m as f64)
}

impl LocalChamfer<'_> {
    pub fn interval(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    /// Exact chamfer at `magnitude`, which must lie inside [`interval`](Self::interval).
    /// Bitwise equal to [`MotionMatcher::evaluate`] at the same magnitude.
    pub fn evaluate(&self, magnitude: f64) -> f64 {
        debug_assert!(magnitude >= self.lo && magnitude <= self.hi);
        let motion = PartMotion::new_unchecked(&self.axis, magnitude);
        cached_sum(self.source, self.target, self.variant, &self.cache, &motion, None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{apply_motion, MotionAxis, Vec3};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_cloud(rng: &mut ChaCha8Rng, n: usize) -> Vec<Point3> {
        (0..n)
            .map(|_| Point3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect()
    }

    #[test]
    fn single_pair() {
        let r = chamfer_distance(&[Point3::origin()], &[Point3::new(1.0, 0.0, 0.0)]).unwrap();
        assert_eq!(r.forward_term, 1.0);
        assert_eq!(r.backward_term, 1.0);
        assert_eq!(r.value, 2.0);
    }

    #[test]
    fn identical_clouds_are_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_cloud(&mut rng, 300);
        assert_eq!(chamfer_distance(&a, &a).unwrap().value, 0.0);
    }

    #[test]
    fn empty_input_rejected() {
        assert!(matches!(chamfer_distance(&[], &[Point3::origin()]), Err(Error::EmptyInput(_))));
        assert!(matches!(brute_force_chamfer(&[Point3::origin()], &[]), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn sequence_sum_and_frame_mismatch() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = PointCloud::new(random_cloud(&mut rng, 50)).unwrap();
        let b = PointCloud::new(random_cloud(&mut rng, 60)).unwrap();
        let single = chamfer_distance(a.points(), b.points()).unwrap().value;
        assert_eq!(chamfer_sequence(&[a.clone()], &[b.clone()]).unwrap(), single);
        assert_eq!(chamfer_sequence(&[a.clone(), b.clone()], &[a.clone(), b.clone()]).unwrap(), 0.0);
        assert!(matches!(
            chamfer_sequence(&[a.clone()], &[a, b]),
            Err(Error::FrameCount { predicted: 1, observed: 2 })
        ));
        assert!(chamfer_sequence(&[], &[]).is_err());
    }

    #[test]
    fn matcher_agrees_with_materialized_cloud() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let src = PointCloud::new(random_cloud(&mut rng, 400)).unwrap();
        let dst = random_cloud(&mut rng, 350);
        let isrc = IndexedCloud::new(src.points().to_vec()).unwrap();
        let idst = IndexedCloud::new(dst.clone()).unwrap();
        let mut matcher = MotionMatcher::new(&isrc, &idst, ChamferVariant::Squared);
        let axis = MotionAxis::revolute(Vec3::new(0.2, 1.0, -0.3), Point3::new(0.4, 0.0, 0.1)).unwrap();
        for angle in [0.0, 0.3, -1.2, 2.9] {
            let moved = apply_motion(&src, &axis, angle).unwrap();
            let want = brute_force_chamfer(moved.points(), &dst).unwrap().value;
            let got = matcher.evaluate(&PartMotion::new(&axis, angle).unwrap());
            assert!((got - want).abs() <= 1e-12 * want, "{got} vs {want}");
        }
    }

    #[test]
    fn local_evaluation_is_bitwise_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let src = random_cloud(&mut rng, 300);
        let dst = random_cloud(&mut rng, 280);
        let isrc = IndexedCloud::new(src).unwrap();
        let idst = IndexedCloud::new(dst).unwrap();
        let axes = [
            MotionAxis::revolute(Vec3::new(0.3, -1.0, 0.2), Point3::new(0.5, 0.1, -0.2)).unwrap(),
            MotionAxis::prismatic(Vec3::new(1.0, 0.4, 0.0), Point3::origin()).unwrap(),
        ];
        for axis in axes {
            let mut full = MotionMatcher::new(&isrc, &idst, ChamferVariant::Squared);
            let mut local_builder = MotionMatcher::new(&isrc, &idst, ChamferVariant::Squared);
            let (center, w) = (0.7, 0.05);
            let (at_center, local) = local_builder.localize(&axis, center, w);
            assert_eq!(at_center, full.evaluate(&PartMotion::new(&axis, center).unwrap()));
            for k in 0..=20 {
                let m = center - w + 2.0 * w * k as f64 / 20.0;
                let want = full.evaluate(&PartMotion::new(&axis, m).unwrap());
                assert_eq!(local.evaluate(m).to_bits(), want.to_bits(), "m = {m}");
            }
        }
    }

    #[test]
    fn bounded_evaluation_prunes_only_above_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let src = random_cloud(&mut rng, 200);
        let dst = random_cloud(&mut rng, 200);
        let isrc = IndexedCloud::new(src).unwrap();
        let idst = IndexedCloud::new(dst).unwrap();
        let mut matcher = MotionMatcher::new(&isrc, &idst, ChamferVariant::Squared);
        let axis = MotionAxis::prismatic(Vec3::x(), Point3::origin()).unwrap();
        let motion = PartMotion::new(&axis, 0.5).unwrap();
        let full = matcher.evaluate(&motion);
        assert_eq!(matcher.evaluate_bounded(&motion, full * 1.0001), Some(full));
        assert_eq!(matcher.evaluate_bounded(&motion, full * 0.5), None);
    }

    #[test]
    fn scrambled_order_is_permutation() {
        for n in [1, 2, 10, 64, 1000, 2048] {
            let mut o = scrambled_order(n);
            o.sort_unstable();
            assert_eq!(o, (0..n as u32).collect::<Vec<_>>());
        }
    }
}
