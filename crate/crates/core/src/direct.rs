//! Continuous baseline: gradient descent on the summed chamfer loss over the
//! axis direction, origin and per-frame magnitudes.
//!
//! Parameters are scaled so one unit is one object diagonal for lengths and
//! one radian for angles. Each iteration takes a step of length `η` along the
//! normalized negative gradient, projects the direction back onto the unit
//! sphere, and halves `η` (up to 20 times) until the loss does not increase.
//! The gradient is analytic with nearest-neighbour assignments held fixed.

use nalgebra::Unit;
use rand_distr::{Distribution, UnitSphere};
use serde::{Deserialize, Serialize};

use crate::chamfer::{ChamferVariant, Correspondences, IndexedCloud, MotionCache, MotionMatcher};
use crate::error::{Error, Result};
use crate::geometry::{MotionAxis, MotionKind, PartMotion, Point3, UnitVec3, Vec3};
use crate::par;
use crate::rng::{derive_seed, stream_rng, Stream};
use crate::search::{fit_with_matcher, search, Hypothesis};
use crate::sequence::ObservedSequence;

const MAX_HALVINGS: usize = 20;
/// Window over which the relative loss change is measured for convergence.
const CONVERGENCE_WINDOW: usize = 10;
/// Trust-region radius, in step lengths, over which neighbour candidates are cached.
const TRUST_STEPS: f64 = 4.0;
/// Largest trust radius worth caching; beyond it candidate lists get too long.
const MAX_TRUST: f64 = 0.02;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub max_iters: usize,
    /// Largest step length, in diagonals (lengths) or radians (angles).
    pub step_size: f64,
    pub restarts: usize,
    /// Finite-difference step for [`numeric_gradient`], as a fraction of the diagonal.
    pub fd_step: f64,
    /// Stop once the loss drops by less than this fraction over 10 iterations.
    pub convergence_tol: f64,
    pub seed: u64,
    /// Start restart 0 from the discrete search's best hypothesis.
    pub seed_from_algo: bool,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            max_iters: 500,
            step_size: 0.1,
            restarts: 8,
            fd_step: 1e-4,
            convergence_tol: 1e-8,
            seed: 0,
            seed_from_algo: false,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if self.max_iters == 0 || self.restarts == 0 {
            return Err(Error::InvalidConfig("max_iters and restarts must be at least 1".into()));
        }
        if !positive(self.step_size) || !positive(self.fd_step) || !positive(self.convergence_tol) {
            return Err(Error::InvalidConfig(format!(
                "step_size {}, fd_step {} and convergence_tol {} must be positive",
                self.step_size, self.fd_step, self.convergence_tol
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptTrace {
    /// Loss before the first step, then after every accepted step.
    pub losses: Vec<f64>,
    /// Restart that produced the returned hypothesis.
    pub restart: usize,
    /// Final loss of every restart, by index.
    pub restart_losses: Vec<f64>,
    pub final_hypothesis: Hypothesis,
}

/// Free parameters of one hypothesis.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    pub direction: UnitVec3,
    pub origin: Point3,
    pub magnitudes: Vec<f64>,
}

/// Gradient in scaled units; `direction` is tangent to the sphere.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub direction: Vec3,
    pub origin: Vec3,
    pub magnitudes: Vec<f64>,
}

impl Gradient {
    pub fn norm(&self) -> f64 {
        (self.direction.norm_squared() + self.origin.norm_squared() + self.magnitudes.iter().map(|g| g * g).sum::<f64>())
            .sqrt()
    }
}

/// The loss over one observed sequence for a fixed motion kind.
#[derive(Debug)]
pub struct Objective {
    kind: MotionKind,
    source: IndexedCloud,
    targets: Vec<IndexedCloud>,
    /// Length unit (object diagonal).
    scale: f64,
    centroid: Point3,
    part_diagonal: f64,
}

impl Objective {
    pub fn new(seq: &ObservedSequence, kind: MotionKind) -> Result<Self> {
        seq.validate()?;
        let rest = seq.rest_dynamic()?;
        let scale = seq.diagonal();
        if !(scale > 0.0) {
            return Err(Error::DegenerateGeometry {
                rank: 0,
                points: seq.rest.len(),
            });
        }
        Ok(Self {
            kind,
            centroid: rest.centroid(),
            part_diagonal: rest.diagonal(),
            source: IndexedCloud::new(rest.into_points())?,
            targets: seq
                .frames
                .iter()
                .map(|f| IndexedCloud::new(f.points().to_vec()))
                .collect::<Result<_>>()?,
            scale,
        })
    }

    pub fn kind(&self) -> MotionKind {
        self.kind
    }

    pub fn frame_count(&self) -> usize {
        self.targets.len()
    }

    fn magnitude_scale(&self) -> f64 {
        match self.kind {
            MotionKind::Revolute => 1.0,
            MotionKind::Prismatic => self.scale,
        }
    }

    pub fn axis(&self, p: &Params) -> MotionAxis {
        MotionAxis {
            kind: self.kind,
            direction: p.direction,
            origin: p.origin,
        }
    }

    fn matchers(&self) -> Vec<MotionMatcher<'_>> {
        self.targets
            .iter()
            .map(|t| MotionMatcher::new(&self.source, t, ChamferVariant::Squared))
            .collect()
    }

    /// Summed chamfer over frames.
    pub fn loss(&self, p: &Params) -> f64 {
        self.loss_with(p, &mut self.matchers())
    }

    fn loss_with(&self, p: &Params, matchers: &mut [MotionMatcher<'_>]) -> f64 {
        self.evaluate(p, matchers, None, false).0
    }

    /// Loss and analytic gradient with nearest neighbours held fixed.
    pub fn loss_and_gradient(&self, p: &Params) -> (f64, Gradient) {
        let (loss, grad) = self.evaluate(p, &mut self.matchers(), None, true);
        (loss, grad.expect("gradient requested"))
    }

    /// Loss at `p`, plus its gradient when `gradient` is set. Uses the
    /// region's candidate caches when given; `p` must then lie inside it.
    fn evaluate(
        &self,
        p: &Params,
        matchers: &mut [MotionMatcher<'_>],
        region: Option<&Region>,
        gradient: bool,
    ) -> (f64, Option<Gradient>) {
        let axis = self.axis(p);
        let d = p.direction.into_inner();
        let o = p.origin.coords;
        let src = self.source.points();
        let inv_n = 1.0 / src.len() as f64;
        let mut loss = 0.0;
        let mut gd = Vec3::zeros();
        let mut go = Vec3::zeros();
        let mut gm = Vec::with_capacity(p.magnitudes.len());
        for (t, ((mm, target), &m)) in matchers.iter_mut().zip(&self.targets).zip(&p.magnitudes).enumerate() {
            let motion = PartMotion::new_unchecked(&axis, m);
            let mut corr = gradient.then(|| Correspondences {
                forward: vec![0; src.len()],
                backward: vec![0; target.len()],
            });
            loss += match (region, corr.as_mut()) {
                (Some(r), c) => mm.evaluate_cached(&r.caches[t], &motion, c),
                (None, Some(c)) => {
                    let (value, found) = mm.evaluate_with_correspondences(&motion);
                    *c = found;
                    value
                }
                (None, None) => mm.evaluate(&motion),
            };
            let Some(corr) = corr else { continue };
            let inv_m = 1.0 / target.len() as f64;
            let (s, c) = m.sin_cos();
            let mut dm = 0.0;
            // Each matched pair contributes w |T(s) - y|^2 with gradient g = 2w (T(s) - y) at T(s).
            let mut pair = |s_pt: &Point3, y: &Point3, w: f64| {
                let moved = motion.apply(s_pt);
                let g = (moved - y) * (2.0 * w);
                match self.kind {
                    MotionKind::Revolute => {
                        let v = s_pt.coords - o;
                        dm += g.dot(&d.cross(&(moved.coords - o)));
                        go += g - rotate(&d, -s, c, &g);
                        gd += v.cross(&g) * s + (g * d.dot(&v) + v * d.dot(&g)) * (1.0 - c);
                    }
                    MotionKind::Prismatic => {
                        dm += g.dot(&d);
                        gd += g * m;
                    }
                }
            };
            for (i, &j) in corr.forward.iter().enumerate() {
                pair(&src[i], &target.points()[j], inv_n);
            }
            for (j, &i) in corr.backward.iter().enumerate() {
                pair(&src[i], &target.points()[j], inv_m);
            }
            gm.push(dm * self.magnitude_scale());
        }
        let grad = gradient.then(|| Gradient {
            direction: gd - d * d.dot(&gd),
            origin: go * self.scale,
            magnitudes: gm,
        });
        (loss, grad)
    }

    /// Candidate caches exact for every parameter set within `tau` of
    /// `center` in each scaled block (direction angle, origin, each magnitude).
    fn build_region(&self, center: &Params, tau: f64, matchers: &mut [MotionMatcher<'_>]) -> Region {
        let axis = self.axis(center);
        let (lo, o) = (tau * self.scale, center.origin);
        let caches = matchers
            .iter_mut()
            .zip(&center.magnitudes)
            .map(|(mm, &m)| {
                let motion = PartMotion::new_unchecked(&axis, m);
                // Revolute: |ΔT(x)| <= (|Δm| + 2α)|x - o| + 2|Δo|; prismatic: |Δm| + |m|α.
                let reach = |x: &Point3| match self.kind {
                    MotionKind::Revolute => 3.0 * tau * ((x - o).norm() + lo) + 2.0 * lo,
                    MotionKind::Prismatic => lo + m.abs() * tau,
                };
                mm.cache(&motion, reach, reach)
            })
            .collect();
        Region {
            center: center.clone(),
            tau,
            caches,
        }
    }

    /// Central-difference gradient in the same scaled units as
    /// [`loss_and_gradient`](Self::loss_and_gradient). The direction part is
    /// taken along two tangent vectors, so it is directly comparable.
    pub fn numeric_gradient(&self, p: &Params, fd_step: f64) -> Gradient {
        let h = fd_step;
        let d = p.direction.into_inner();
        let helper = if d.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
        let t1 = d.cross(&helper).normalize();
        let t2 = d.cross(&t1);
        let diff = |plus: Params, minus: Params| (self.loss(&plus) - self.loss(&minus)) / (2.0 * h);

        let mut direction = Vec3::zeros();
        for t in [t1, t2] {
            let plus = Params {
                direction: Unit::new_normalize(d + t * h),
                ..p.clone()
            };
            let minus = Params {
                direction: Unit::new_normalize(d - t * h),
                ..p.clone()
            };
            direction += t * diff(plus, minus);
        }
        let mut origin = Vec3::zeros();
        for k in 0..3 {
            let mut e = Vec3::zeros();
            e[k] = h * self.scale;
            let plus = Params {
                origin: p.origin + e,
                ..p.clone()
            };
            let minus = Params {
                origin: p.origin - e,
                ..p.clone()
            };
            origin[k] = diff(plus, minus);
        }
        let magnitudes = (0..p.magnitudes.len())
            .map(|t| {
                let mut plus = p.clone();
                let mut minus = p.clone();
                plus.magnitudes[t] += h * self.magnitude_scale();
                minus.magnitudes[t] -= h * self.magnitude_scale();
                diff(plus, minus)
            })
            .collect();
        Gradient {
            direction,
            origin,
            magnitudes,
        }
    }

    /// Per-frame magnitudes minimizing each frame's chamfer for `axis`.
    pub fn fit_magnitudes(&self, direction: UnitVec3, origin: Point3) -> Vec<f64> {
        let axis = MotionAxis {
            kind: self.kind,
            direction,
            origin,
        };
        self.matchers()
            .iter_mut()
            .map(|mm| fit_with_matcher(mm, &axis, self.part_diagonal).0)
            .collect()
    }

    /// Descends from `start` until convergence, stagnation or `max_iters`.
    /// Returns the final parameters and the loss trace.
    pub fn descend(&self, start: Params, cfg: &OptimizerConfig) -> Result<(Params, Vec<f64>)> {
        if start.magnitudes.len() != self.targets.len() {
            return Err(Error::FrameCount {
                predicted: start.magnitudes.len(),
                observed: self.targets.len(),
            });
        }
        let mut matchers = self.matchers();
        let mut region: Option<Region> = None;
        let mut p = start;
        let mut eta = cfg.step_size;
        let (mut loss, grad) = self.evaluate_in(&p, eta, &mut matchers, &mut region, true);
        let mut grad = grad.expect("gradient requested");
        check_finite(loss, 0)?;
        let mut trace = vec![loss];
        while trace.len() < cfg.max_iters && loss > 0.0 {
            let norm = grad.norm();
            if !(norm > 0.0) {
                check_finite(norm, trace.len())?;
                break;
            }
            let mut accepted = None;
            for _ in 0..=MAX_HALVINGS {
                let trial = self.step(&p, &grad, eta / norm);
                let (trial_loss, _) = self.evaluate_in(&trial, eta, &mut matchers, &mut region, false);
                check_finite(trial_loss, trace.len())?;
                if trial_loss <= loss {
                    accepted = Some(trial);
                    break;
                }
                eta *= 0.5;
            }
            let Some(next) = accepted else { break };
            p = next;
            let (next_loss, next_grad) = self.evaluate_in(&p, eta, &mut matchers, &mut region, true);
            (loss, grad) = (next_loss, next_grad.expect("gradient requested"));
            check_finite(loss, trace.len())?;
            trace.push(loss);
            eta = (2.0 * eta).min(cfg.step_size);
            let k = trace.len() - 1;
            if k >= CONVERGENCE_WINDOW {
                let before = trace[k - CONVERGENCE_WINDOW];
                if before - loss <= cfg.convergence_tol * before {
                    break;
                }
            }
        }
        Ok((p, trace))
    }

    /// Evaluates at `p`, reusing `region` when it covers `p` and otherwise
    /// rebuilding it around `p` for steps of length `eta` (or dropping it
    /// when such a region would be too wide to pay off).
    fn evaluate_in(
        &self,
        p: &Params,
        eta: f64,
        matchers: &mut [MotionMatcher<'_>],
        region: &mut Option<Region>,
        gradient: bool,
    ) -> (f64, Option<Gradient>) {
        if !region.as_ref().is_some_and(|r| self.covers(r, p)) {
            let tau = TRUST_STEPS * eta;
            *region = (tau <= MAX_TRUST).then(|| self.build_region(p, tau, matchers));
        }
        self.evaluate(p, matchers, region.as_ref(), gradient)
    }

    fn covers(&self, r: &Region, p: &Params) -> bool {
        let c = &r.center;
        let (d, dc) = (p.direction.into_inner(), c.direction.into_inner());
        let angle = d.cross(&dc).norm().atan2(d.dot(&dc));
        let ms = self.magnitude_scale();
        angle <= r.tau
            && (p.origin - c.origin).norm() <= r.tau * self.scale
            && p.magnitudes.iter().zip(&c.magnitudes).all(|(a, b)| (a - b).abs() <= r.tau * ms)
    }

    fn step(&self, p: &Params, g: &Gradient, t: f64) -> Params {
        let ms = self.magnitude_scale();
        Params {
            direction: Unit::new_normalize(p.direction.into_inner() - g.direction * t),
            origin: p.origin - g.origin * (t * self.scale),
            magnitudes: p.magnitudes.iter().zip(&g.magnitudes).map(|(m, gm)| m - gm * t * ms).collect(),
        }
    }
}

/// Parameter neighbourhood with exact neighbour candidates per frame.
struct Region {
    center: Params,
    tau: f64,
    caches: Vec<MotionCache>,
}

/// Rodrigues rotation of `v` about unit `k` with the given sine and cosine.
fn rotate(k: &Vec3, sin: f64, cos: f64, v: &Vec3) -> Vec3 {
    v * cos + k.cross(v) * sin + k * (k.dot(v) * (1.0 - cos))
}

fn check_finite(value: f64, iteration: usize) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::NumericalFailure {
            iteration,
            what: format!("loss became {value}"),
        })
    }
}

/// Best-of-restarts descent for one motion kind.
pub fn optimize(seq: &ObservedSequence, kind: MotionKind, cfg: &OptimizerConfig) -> Result<(Hypothesis, OptTrace)> {
    cfg.validate()?;
    let objective = Objective::new(seq, kind)?;
    let algo_start = if cfg.seed_from_algo {
        let best = search(seq, &[kind])?.best;
        Some(Params {
            direction: best.axis.direction,
            origin: best.axis.origin,
            magnitudes: best.magnitudes,
        })
    } else {
        None
    };

    let restarts: Vec<usize> = (0..cfg.restarts).collect();
    let runs = par::map(&restarts, |&r| {
        let start = match (&algo_start, r) {
            (Some(p), 0) => p.clone(),
            _ => {
                let mut rng = stream_rng(derive_seed(cfg.seed, r as u64), Stream::Restarts);
                let [x, y, z]: [f64; 3] = UnitSphere.sample(&mut rng);
                let direction = Unit::new_normalize(Vec3::new(x, y, z));
                Params {
                    direction,
                    origin: objective.centroid,
                    magnitudes: objective.fit_magnitudes(direction, objective.centroid),
                }
            }
        };
        objective.descend(start, cfg)
    });
    let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
    let restart_losses: Vec<f64> = runs.iter().map(|(_, t)| *t.last().expect("trace is never empty")).collect();
    let best = (0..runs.len())
        .min_by(|&a, &b| restart_losses[a].total_cmp(&restart_losses[b]).then(a.cmp(&b)))
        .expect("at least one restart");
    let (params, losses) = runs.into_iter().nth(best).expect("index in range");
    let hypothesis = finalize(&objective, params, *losses.last().expect("trace is never empty"));
    Ok((
        hypothesis.clone(),
        OptTrace {
            losses,
            restart: best,
            restart_losses,
            final_hypothesis: hypothesis,
        },
    ))
}

/// Runs [`optimize`] for each kind and keeps the lower loss (ties go to the
/// earlier kind in `kinds`).
pub fn optimize_kinds(
    seq: &ObservedSequence,
    kinds: &[MotionKind],
    cfg: &OptimizerConfig,
) -> Result<(Hypothesis, OptTrace)> {
    let mut best: Option<(Hypothesis, OptTrace)> = None;
    for &kind in kinds {
        let run = optimize(seq, kind, cfg)?;
        if best.as_ref().is_none_or(|b| run.0.residual < b.0.residual) {
            best = Some(run);
        }
    }
    best.ok_or_else(|| Error::InvalidConfig("no motion kinds to optimize".into()))
}

/// Reports the revolute origin as the point of the axis line closest to the
/// part centroid (the origin is only identifiable up to sliding along the
/// line) and flips the direction so magnitudes are mostly positive.
fn finalize(objective: &Objective, p: Params, loss: f64) -> Hypothesis {
    let d = p.direction.into_inner();
    let origin = match objective.kind {
        MotionKind::Revolute => p.origin + d * (objective.centroid - p.origin).dot(&d),
        MotionKind::Prismatic => objective.centroid,
    };
    let mut h = Hypothesis {
        axis: MotionAxis {
            kind: objective.kind,
            direction: p.direction,
            origin,
        },
        magnitudes: p.magnitudes,
        residual: loss,
        candidate: None,
    };
    h.canonicalize();
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate, ObjectTemplate, TemplateName};

    fn door(points: usize, frames: usize, seed: u64) -> crate::synth::GeneratedObject {
        let t = ObjectTemplate::random(TemplateName::Door, seed, frames, 0.0).unwrap();
        generate(&t, points, frames, seed).unwrap()
    }

    #[test]
    fn ground_truth_is_a_fixed_point() {
        let g = door(400, 4, 2);
        let obj = Objective::new(&g.sequence, MotionKind::Revolute).unwrap();
        let start = Params {
            direction: g.ground_truth.direction,
            origin: g.ground_truth.origin,
            magnitudes: g.profile.clone(),
        };
        let (_, trace) = obj.descend(start, &OptimizerConfig::default()).unwrap();
        assert!(trace.len() <= 5, "{}", trace.len());
        assert!(*trace.last().unwrap() <= 1e-10);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let g = door(150, 2, 4);
        let obj = Objective::new(&g.sequence, MotionKind::Revolute).unwrap();
        let p = Params {
            direction: Unit::new_normalize(g.ground_truth.direction.into_inner() + Vec3::new(0.05, -0.03, 0.02)),
            origin: g.ground_truth.origin + Vec3::new(0.01, 0.02, -0.01),
            magnitudes: g.profile.iter().map(|m| m + 0.02).collect(),
        };
        let (_, analytic) = obj.loss_and_gradient(&p);
        let numeric = obj.numeric_gradient(&p, 1e-6);
        let diff = Gradient {
            direction: analytic.direction - numeric.direction,
            origin: analytic.origin - numeric.origin,
            magnitudes: analytic.magnitudes.iter().zip(&numeric.magnitudes).map(|(a, b)| a - b).collect(),
        };
        assert!(diff.norm() <= 1e-3 * analytic.norm(), "{:?} vs {:?}", analytic, numeric);
    }

    #[test]
    fn trace_never_increases_and_direction_stays_unit() {
        let g = door(300, 3, 6);
        let cfg = OptimizerConfig {
            restarts: 2,
            max_iters: 60,
            ..OptimizerConfig::default()
        };
        let (h, trace) = optimize(&g.sequence, MotionKind::Revolute, &cfg).unwrap();
        assert!(trace.losses.windows(2).all(|w| w[1] <= w[0]));
        assert!(trace.losses.len() <= cfg.max_iters);
        assert!((h.axis.direction.norm() - 1.0).abs() < 1e-9);
        let min = trace.restart_losses.iter().cloned().fold(f64::INFINITY, f64::min);
        assert_eq!(h.residual, min);
    }

    #[test]
    fn cached_region_matches_full_evaluation() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for (g, kind) in [
            (door(300, 3, 3), MotionKind::Revolute),
            (generate(&ObjectTemplate::random(TemplateName::Drawer, 5, 3, 0.0).unwrap(), 300, 3, 5).unwrap(), MotionKind::Prismatic),
        ] {
            let obj = Objective::new(&g.sequence, kind).unwrap();
            let center = Params {
                direction: Unit::new_normalize(g.ground_truth.direction.into_inner() + Vec3::new(0.02, 0.01, -0.03)),
                origin: g.ground_truth.origin + Vec3::new(0.01, -0.02, 0.0),
                magnitudes: g.profile.iter().map(|m| m * 0.9).collect(),
            };
            let tau = 0.01;
            let mut matchers = obj.matchers();
            let region = obj.build_region(&center, tau, &mut matchers);
            let ms = obj.magnitude_scale();
            for _ in 0..50 {
                let mut u = || rng.random_range(-1.0..1.0) * tau / 3f64.sqrt();
                let p = Params {
                    direction: Unit::new_normalize(center.direction.into_inner() + Vec3::new(u(), u(), u())),
                    origin: center.origin + Vec3::new(u(), u(), u()) * obj.scale,
                    magnitudes: center.magnitudes.iter().map(|m| m + u() * ms).collect(),
                };
                assert!(obj.covers(&region, &p));
                let (cached, cached_grad) = obj.evaluate(&p, &mut matchers, Some(&region), true);
                let (full, full_grad) = obj.evaluate(&p, &mut obj.matchers(), None, true);
                assert_eq!(cached.to_bits(), full.to_bits());
                assert_eq!(cached_grad, full_grad);
            }
        }
    }

    #[test]
    fn invalid_config_rejected() {
        let g = door(200, 2, 1);
        for cfg in [
            OptimizerConfig {
                restarts: 0,
                ..OptimizerConfig::default()
            },
            OptimizerConfig {
                step_size: -1.0,
                ..OptimizerConfig::default()
            },
        ] {
            assert!(matches!(
                optimize(&g.sequence, MotionKind::Revolute, &cfg),
                Err(Error::InvalidConfig(_))
            ));
        }
    }
}
