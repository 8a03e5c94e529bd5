//! PCA-fitted oriented bounding boxes and the candidate joint axes derived from them.

use std::cmp::Ordering;

use nalgebra::{Matrix3, SymmetricEigen, Unit};

use crate::error::{Error, Result};
use crate::geometry::{centroid, Point3, UnitVec3, Vec3};

/// Eigenvalues closer than this (relative to the largest) count as tied.
const EIGEN_TIE: f64 = 1e-12;
/// Eigenvalues below this fraction of the largest are treated as zero for rank.
const RANK_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientedBox {
    pub center: Point3,
    /// Principal axes ordered by descending variance; right-handed.
    pub frame: [UnitVec3; 3],
    pub half_extents: [f64; 3],
}

impl OrientedBox {
    pub fn diagonal(&self) -> f64 {
        2.0 * Vec3::from(self.half_extents).norm()
    }

    pub fn volume(&self) -> f64 {
        8.0 * self.half_extents.iter().product::<f64>()
    }

    /// Whether `p` lies in the box grown by `margin` on every side.
    pub fn contains(&self, p: &Point3, margin: f64) -> bool {
        let rel = p - self.center;
        self.frame
            .iter()
            .zip(&self.half_extents)
            .all(|(axis, h)| rel.dot(axis).abs() <= h + margin)
    }
}

/// Fits a box aligned with the principal components of `points`.
///
/// The frame is the covariance eigenbasis sorted by descending eigenvalue
/// (ties broken by lexicographic order of the sign-normalized eigenvectors) and
/// made right-handed by flipping the third axis. The box spans the min/max
/// projections along each axis. Planar clouds are accepted; collinear or
/// coincident ones are not.
pub fn fit_obb(points: &[Point3]) -> Result<OrientedBox> {
    let n = points.len();
    if n < 3 {
        return Err(Error::DegenerateGeometry {
            rank: n.saturating_sub(1),
            points: n,
        });
    }
    let mean = centroid(points);
    let mut cov = Matrix3::zeros();
    for p in points {
        let d = p - mean;
        cov += d * d.transpose();
    }
    cov /= n as f64;

    let eig = SymmetricEigen::new(cov);
    let max_ev = eig.eigenvalues.iter().cloned().fold(0.0_f64, f64::max);
    let rank = eig
        .eigenvalues
        .iter()
        .filter(|&&ev| max_ev > 0.0 && ev > RANK_TOL * max_ev)
        .count();
    if rank < 2 {
        return Err(Error::DegenerateGeometry { rank, points: n });
    }

    let mut pairs: Vec<(f64, Vec3)> = (0..3)
        .map(|i| (eig.eigenvalues[i], canonical_sign(eig.eigenvectors.column(i).into_owned())))
        .collect();
    pairs.sort_by(|a, b| {
        if (a.0 - b.0).abs() <= EIGEN_TIE * max_ev {
            lexicographic(&a.1, &b.1)
        } else {
            b.0.partial_cmp(&a.0).unwrap_or(Ordering::Equal)
        }
    });

    let e0 = pairs[0].1.normalize();
    let e1 = pairs[1].1.normalize();
    let mut e2 = pairs[2].1.normalize();
    if e0.cross(&e1).dot(&e2) < 0.0 {
        e2 = -e2;
    }
    let frame = [Unit::new_unchecked(e0), Unit::new_unchecked(e1), Unit::new_unchecked(e2)];

    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for p in points {
        let rel = p - mean;
        for k in 0..3 {
            let t = rel.dot(&frame[k]);
            lo[k] = lo[k].min(t);
            hi[k] = hi[k].max(t);
        }
    }
    let mut center = mean;
    let mut half_extents = [0.0; 3];
    for k in 0..3 {
        center += frame[k].into_inner() * (0.5 * (lo[k] + hi[k]));
        half_extents[k] = 0.5 * (hi[k] - lo[k]);
    }
    Ok(OrientedBox {
        center,
        frame,
        half_extents,
    })
}

/// Flip so the largest-magnitude component is positive.
fn canonical_sign(v: Vec3) -> Vec3 {
    let mut best = 0;
    for k in 1..3 {
        if v[k].abs() > v[best].abs() {
            best = k;
        }
    }
    if v[best] < 0.0 {
        -v
    } else {
        v
    }
}

fn lexicographic(a: &Vec3, b: &Vec3) -> Ordering {
    for k in 0..3 {
        match a[k].partial_cmp(&b[k]) {
            Some(Ordering::Equal) | None => continue,
            Some(o) => return o,
        }
    }
    Ordering::Equal
}

/// Where a candidate origin sits on the box: the center, or a face center.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OriginSite {
    Center,
    Face { axis: usize, positive: bool },
}

impl OriginSite {
    pub fn sign(self) -> f64 {
        match self {
            OriginSite::Center => 0.0,
            OriginSite::Face { positive: true, .. } => 1.0,
            OriginSite::Face { positive: false, .. } => -1.0,
        }
    }
}

/// Candidate joint origins and directions for one box.
///
/// Origins: `[center, +h0 e0, -h0 e0, +h1 e1, -h1 e1, +h2 e2, -h2 e2]` (offsets from
/// the center). Directions: `[e0, -e0, e1, -e1, e2, -e2]`. Coinciding origins
/// of flat boxes are kept so indices stay stable.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSet {
    pub origins: [Point3; 7],
    pub directions: [UnitVec3; 6],
}

impl CandidateSet {
    pub const ORIGIN_SITES: [OriginSite; 7] = [
        OriginSite::Center,
        OriginSite::Face { axis: 0, positive: true },
        OriginSite::Face { axis: 0, positive: false },
        OriginSite::Face { axis: 1, positive: true },
        OriginSite::Face { axis: 1, positive: false },
        OriginSite::Face { axis: 2, positive: true },
        OriginSite::Face { axis: 2, positive: false },
    ];

    pub fn pair_count(&self) -> usize {
        self.origins.len() * self.directions.len()
    }

    /// Index of the direction with the opposite sign.
    pub fn negated_direction(index: usize) -> usize {
        index ^ 1
    }
}

pub fn enumerate_candidates(obb: &OrientedBox) -> CandidateSet {
    let origins = CandidateSet::ORIGIN_SITES.map(|site| match site {
        OriginSite::Center => obb.center,
        OriginSite::Face { axis, .. } => {
            obb.center + obb.frame[axis].into_inner() * (site.sign() * obb.half_extents[axis])
        }
    });
    let f = &obb.frame;
    let directions = [f[0], -f[0], f[1], -f[1], f[2], -f[2]];
    CandidateSet { origins, directions }
}
