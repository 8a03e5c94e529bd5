//! Discrete joint search over bounding-box candidates.
//!
//! The moving part's rest-state points are boxed (PCA), giving 7 candidate
//! origins and 6 candidate directions. For every (origin, direction, kind)
//! hypothesis the per-frame magnitude is fit by a coarse grid followed by
//! golden-section refinement, and hypotheses are ranked by the summed chamfer
//! residual between the moved rest part and each observed frame.

use std::f64::consts::PI;
use crate::clock::Stopwatch;

use serde::{Deserialize, Serialize};

use crate::chamfer::{ChamferVariant, IndexedCloud, MotionMatcher};
use crate::error::{Error, Result};
use crate::geometry::{MotionAxis, MotionKind, PartMotion, PointCloud};
use crate::obb::{enumerate_candidates, fit_obb, CandidateSet, OrientedBox};
use crate::par;
use crate::sequence::ObservedSequence;

/// Coarse grid size over the magnitude range.
pub const GRID_SAMPLES: usize = 64;
/// Final golden-section bracket width (radians; fraction of the part diagonal for prismatic).
pub const REFINE_WIDTH: f64 = 1e-4;
/// Residuals this close are ranked by candidate index instead.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Points per cloud used by the coarse pass.
pub const COARSE_POINTS: usize = 128;
/// Half-width of the full-resolution bracket, in refinement tolerances.
const POLISH_TOLS: f64 = 64.0;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Position of a hypothesis in the enumeration order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateId {
    pub origin: usize,
    pub direction: usize,
    pub kind: MotionKind,
}

impl CandidateId {
    /// Origin-major, direction-minor, revolute before prismatic.
    pub fn rank_index(&self) -> usize {
        let kind = match self.kind {
            MotionKind::Revolute => 0,
            MotionKind::Prismatic => 1,
        };
        (self.origin * 6 + self.direction) * 2 + kind
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hypothesis {
    pub axis: MotionAxis,
    /// One per frame: radians (revolute) or model units (prismatic).
    pub magnitudes: Vec<f64>,
    /// Sum over frames of the chamfer distance at the fitted magnitudes.
    pub residual: f64,
    /// Set for hypotheses produced by the discrete search.
    pub candidate: Option<CandidateId>,
}

impl Hypothesis {
    /// Flips the direction (and negates magnitudes) when most magnitudes are
    /// negative. The moved geometry is unchanged.
    pub fn canonicalize(&mut self) {
        let pos = self.magnitudes.iter().filter(|m| **m > 0.0).count();
        let neg = self.magnitudes.iter().filter(|m| **m < 0.0).count();
        if neg > pos {
            self.axis = self.axis.flipped();
            for m in &mut self.magnitudes {
                *m = -*m;
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct SearchConfig {
    pub kinds: Vec<MotionKind>,
    pub variant: ChamferVariant,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            kinds: MotionKind::ALL.to_vec(),
            variant: ChamferVariant::Squared,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EstimateReport {
    pub best: Hypothesis,
    /// Every hypothesis, ascending residual.
    pub ranked: Vec<Hypothesis>,
    pub obb: OrientedBox,
    pub candidates: CandidateSet,
    pub timing_s: f64,
}

/// Inclusive-exclusive magnitude range searched for `kind`.
fn magnitude_range(kind: MotionKind, part_diagonal: f64) -> f64 {
    match kind {
        MotionKind::Revolute => PI,
        MotionKind::Prismatic => part_diagonal,
    }
}

/// Finds the magnitude minimizing the chamfer distance between the moved rest
/// part and `frame`, returning `(magnitude, chamfer)`.
///
/// The range is `[-π, π)` for revolute axes and `[-D, D)` for prismatic ones
/// (`D` = rest part diagonal), sampled at [`GRID_SAMPLES`] points, then refined
/// by golden section around the best sample.
pub fn fit_magnitude(rest_dynamic: &PointCloud, frame: &PointCloud, axis: &MotionAxis) -> Result<(f64, f64)> {
    axis.validate()?;
    let source = IndexedCloud::new(rest_dynamic.points().to_vec())?;
    let target = IndexedCloud::new(frame.points().to_vec())?;
    let mut matcher = MotionMatcher::new(&source, &target, ChamferVariant::Squared);
    Ok(fit_with_matcher(&mut matcher, axis, rest_dynamic.diagonal()))
}

pub(crate) fn fit_with_matcher(matcher: &mut MotionMatcher<'_>, axis: &MotionAxis, part_diagonal: f64) -> (f64, f64) {
    let range = magnitude_range(axis.kind, part_diagonal);
    let step = 2.0 * range / GRID_SAMPLES as f64;
    let tol = match axis.kind {
        MotionKind::Revolute => REFINE_WIDTH,
        MotionKind::Prismatic => REFINE_WIDTH * part_diagonal,
    };
    // Revolute brackets may cross ±π; the result is wrapped at the end.
    let (lo, hi) = match axis.kind {
        MotionKind::Revolute => (f64::NEG_INFINITY, f64::INFINITY),
        MotionKind::Prismatic => (-range, range),
    };

    // Coarse pass on a spread subset locates the basin cheaply; the fine pass
    // polishes on all points inside a narrow bracket around it.
    let coarse = {
        let mut eval = |m: f64, bound: f64| {
            matcher
                .evaluate_sampled(&PartMotion::new_unchecked(axis, m), bound, COARSE_POINTS)
                .unwrap_or(f64::INFINITY)
        };
        let mut best = (0.0, f64::INFINITY);
        for k in 0..GRID_SAMPLES {
            let m = -range + k as f64 * step;
            let v = eval(m, best.1);
            if v < best.1 {
                best = (m, v);
            }
        }
        if best.1 > 0.0 {
            let (m, v) = golden(&mut eval, (best.0 - step).max(lo), (best.0 + step).min(hi), tol);
            if v < best.1 {
                best = (m, v);
            }
        }
        best
    };

    let w = POLISH_TOLS * tol;
    let (lo_f, hi_f) = ((coarse.0 - w).max(lo), (coarse.0 + w).min(hi));
    let (center_value, local) = matcher.localize(axis, coarse.0, w);
    let mut best = (coarse.0, center_value);
    if best.1 > 0.0 {
        let (m, v) = golden(&mut |m, _| local.evaluate(m), lo_f, hi_f, tol);
        if v < best.1 {
            best = (m, v);
        }
    }
    if axis.kind == MotionKind::Revolute {
        best.0 = wrap_angle(best.0);
    }
    best
}

/// Golden-section minimization of `f` on `[a, b]` down to width `tol`.
///
/// The retained interior point always holds an exact value; each new probe
/// only has to beat it, so `f` receives that value as a pruning bound.
fn golden(f: &mut impl FnMut(f64, f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c, f64::INFINITY);
    let mut fd = f(d, fc);
    while b - a > tol {
        if fd < fc {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d, fc);
        } else {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c, fd);
        }
    }
    if fd < fc {
        (d, fd)
    } else {
        (c, fc)
    }
}

/// Maps an angle into `(-π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w -= 2.0 * PI;
    }
    w
}

/// Runs the discrete search over both motion kinds.
pub fn search(seq: &ObservedSequence, kinds: &[MotionKind]) -> Result<EstimateReport> {
    search_with(
        seq,
        &SearchConfig {
            kinds: kinds.to_vec(),
            ..SearchConfig::default()
        },
    )
}

pub fn search_with(seq: &ObservedSequence, cfg: &SearchConfig) -> Result<EstimateReport> {
    let started = Stopwatch::start();
    if cfg.kinds.is_empty() {
        return Err(Error::InvalidConfig("no motion kinds to search".into()));
    }
    if seq.frames.is_empty() {
        return Err(Error::EmptyInput("sequence has no frames"));
    }
    seq.validate()?;
    let rest_dynamic = seq.rest_dynamic()?;
    let obb = fit_obb(rest_dynamic.points())?;
    let candidates = enumerate_candidates(&obb);
    let part_diagonal = rest_dynamic.diagonal();

    let source = IndexedCloud::new(rest_dynamic.into_points())?;
    let targets = seq
        .frames
        .iter()
        .map(|f| IndexedCloud::new(f.points().to_vec()))
        .collect::<Result<Vec<_>>>()?;

    let mut kinds = cfg.kinds.clone();
    kinds.sort();
    kinds.dedup();

    // Moving by -m about -d is the same rigid motion as by m about d, so only
    // one direction of each ± pair is fit. Prismatic motion also ignores the
    // origin, so one fit per direction serves all seven origins.
    let mut jobs: Vec<CandidateId> = Vec::new();
    for &kind in &kinds {
        let origins = match kind {
            MotionKind::Revolute => 0..7,
            MotionKind::Prismatic => 0..1,
        };
        for origin in origins {
            for direction in (0..6).step_by(2) {
                jobs.push(CandidateId { origin, direction, kind });
            }
        }
    }

    let fits = par::map(&jobs, |id| {
        let axis = MotionAxis {
            kind: id.kind,
            direction: candidates.directions[id.direction],
            origin: candidates.origins[id.origin],
        };
        let mut magnitudes = Vec::with_capacity(targets.len());
        let mut residual = 0.0;
        for target in &targets {
            let mut matcher = MotionMatcher::new(&source, target, cfg.variant);
            let (m, r) = fit_with_matcher(&mut matcher, &axis, part_diagonal);
            magnitudes.push(m);
            residual += r;
        }
        (magnitudes, residual)
    });

    let mut ranked = Vec::with_capacity(42 * kinds.len());
    for (id, (magnitudes, residual)) in jobs.iter().zip(fits) {
        let origins = match id.kind {
            MotionKind::Revolute => id.origin..id.origin + 1,
            MotionKind::Prismatic => 0..7,
        };
        let mirrored: Vec<f64> = magnitudes
            .iter()
            .map(|m| match id.kind {
                MotionKind::Revolute => wrap_angle(-m),
                MotionKind::Prismatic => -m,
            })
            .collect();
        for origin in origins {
            for (direction, mags) in [(id.direction, &magnitudes), (CandidateSet::negated_direction(id.direction), &mirrored)] {
                ranked.push(Hypothesis {
                    axis: MotionAxis {
                        kind: id.kind,
                        direction: candidates.directions[direction],
                        origin: candidates.origins[origin],
                    },
                    magnitudes: mags.clone(),
                    residual,
                    candidate: Some(CandidateId { origin, direction, kind: id.kind }),
                });
            }
        }
    }
    rank_hypotheses(&mut ranked);
    for h in &mut ranked {
        h.canonicalize();
    }
    Ok(EstimateReport {
        best: ranked[0].clone(),
        ranked,
        obb,
        candidates,
        timing_s: started.seconds(),
    })
}

/// Sorts by residual; residuals within [`TIE_TOLERANCE`] of a group's smallest
/// member are ordered by candidate index.
pub fn rank_hypotheses(hyps: &mut [Hypothesis]) {
    let index = |h: &Hypothesis| h.candidate.map(|c| c.rank_index()).unwrap_or(usize::MAX);
    hyps.sort_by(|a, b| a.residual.total_cmp(&b.residual).then(index(a).cmp(&index(b))));
    let mut start = 0;
    while start < hyps.len() {
        let anchor = hyps[start].residual;
        let mut end = start + 1;
        while end < hyps.len() && hyps[end].residual - anchor <= TIE_TOLERANCE {
            end += 1;
        }
        hyps[start..end].sort_by_key(index);
        start = end;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{apply_motion, Point3, Vec3};
    use crate::synth::{generate, ObjectTemplate, TemplateName};

    fn slab() -> PointCloud {
        let mut pts = Vec::new();
        for i in 0..20 {
            for j in 0..12 {
                for k in 0..2 {
                    pts.push(Point3::new(i as f64 * 0.05, j as f64 * 0.1, k as f64 * 0.03));
                }
            }
        }
        PointCloud::new(pts).unwrap()
    }

    #[test]
    fn identity_frame_fits_zero() {
        let rest = slab();
        let axis = MotionAxis::revolute(Vec3::y(), Point3::origin()).unwrap();
        let (m, r) = fit_magnitude(&rest, &rest, &axis).unwrap();
        assert!(m.abs() < 1e-3);
        assert!(r < 1e-12);
    }

    #[test]
    fn recovers_thirty_degrees() {
        let rest = slab();
        let axis = MotionAxis::revolute(Vec3::y(), Point3::new(0.0, 0.0, 0.0)).unwrap();
        let frame = apply_motion(&rest, &axis, 30f64.to_radians()).unwrap();
        let (m, r) = fit_magnitude(&rest, &frame, &axis).unwrap();
        assert!((m.to_degrees() - 30.0).abs() < 0.1, "{}", m.to_degrees());
        assert!(r <= 1e-6, "{r}");
    }

    #[test]
    fn recovers_prismatic_displacement() {
        let rest = slab();
        let d = rest.diagonal();
        let axis = MotionAxis::prismatic(Vec3::new(1.0, 1.0, 0.0), Point3::origin()).unwrap();
        let frame = apply_motion(&rest, &axis, 0.3 * d).unwrap();
        let (m, _) = fit_magnitude(&rest, &frame, &axis).unwrap();
        assert!((m - 0.3 * d).abs() < 1e-3 * d, "{m} vs {}", 0.3 * d);
    }

    #[test]
    fn negative_angles_and_wrap() {
        let rest = slab();
        let axis = MotionAxis::revolute(Vec3::x(), Point3::new(0.0, 0.6, 0.0)).unwrap();
        for deg in [-170.0, -45.0, 120.0, 179.0] {
            let frame = apply_motion(&rest, &axis, f64::to_radians(deg)).unwrap();
            let (m, _) = fit_magnitude(&rest, &frame, &axis).unwrap();
            let err = wrap_angle(m - f64::to_radians(deg)).to_degrees();
            assert!(err.abs() < 0.1, "{deg}: got {}", m.to_degrees());
        }
        assert!((wrap_angle(3.0 * PI) - PI).abs() < 1e-12);
        assert!((wrap_angle(-PI) - PI).abs() < 1e-12);
    }

    #[test]
    fn zero_motion_ties_go_to_first_candidate() {
        let t = ObjectTemplate::random(TemplateName::Door, 5, 3, 0.0).unwrap();
        let mut g = generate(&t, 300, 3, 5).unwrap();
        let rest = g.sequence.rest_dynamic().unwrap();
        g.sequence.frames = vec![rest.clone(), rest.clone(), rest];
        let report = search(&g.sequence, &MotionKind::ALL).unwrap();
        assert_eq!(report.ranked.len(), 84);
        assert!(report.ranked.iter().all(|h| h.residual < 1e-12));
        assert_eq!(
            report.best.candidate,
            Some(CandidateId {
                origin: 0,
                direction: 0,
                kind: MotionKind::Revolute
            })
        );
    }

    #[test]
    fn door_recovery_and_exhaustive_ranking() {
        let t = ObjectTemplate::random(TemplateName::Door, 1, 10, 0.0).unwrap();
        let g = generate(&t, 512, 10, 1).unwrap();
        let report = search(&g.sequence, &MotionKind::ALL).unwrap();
        assert_eq!(report.ranked.len(), 84);
        for kind in MotionKind::ALL {
            for o in 0..7 {
                for d in 0..6 {
                    let n = report
                        .ranked
                        .iter()
                        .filter(|h| h.candidate == Some(CandidateId { origin: o, direction: d, kind }))
                        .count();
                    assert_eq!(n, 1);
                }
            }
        }
        for w in report.ranked.windows(2) {
            assert!(w[1].residual >= w[0].residual - TIE_TOLERANCE);
        }
        let best = &report.best;
        assert_eq!(best.axis.kind, MotionKind::Revolute);
        let cos = best.axis.direction.dot(&g.ground_truth.direction).abs().min(1.0);
        assert!(cos.acos().to_degrees() < 0.5);
        // canonical direction: fitted magnitudes mostly positive
        assert!(best.magnitudes.iter().filter(|m| **m < 0.0).count() <= best.magnitudes.len() / 2);
    }

    #[test]
    fn empty_kinds_rejected() {
        let t = ObjectTemplate::random(TemplateName::Door, 1, 2, 0.0).unwrap();
        let g = generate(&t, 200, 2, 1).unwrap();
        assert!(search(&g.sequence, &[]).is_err());
        let mut s = g.sequence.clone();
        s.frames.clear();
        assert!(matches!(search(&s, &MotionKind::ALL), Err(Error::EmptyInput(_))));
    }
}
