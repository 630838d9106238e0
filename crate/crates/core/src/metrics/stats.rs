use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asset::{Mesh, Region};
use crate::error::{Error, Result};
use crate::geom::{geodesic_angle, Mat3, Vec3};
use crate::topo::TriangleBvh;

/// Summary of a set of nonnegative distances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorStats {
    pub mean: f64,
    pub median: f64,
    pub p95: f64,
    pub max: f64,
    pub count: usize,
}

/// Percentile of sorted data by linear interpolation between order
/// statistics: position `q · (n − 1)`.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        1 => sorted[0],
        n => {
            let pos = q.clamp(0.0, 1.0) * (n - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = (lo + 1).min(n - 1);
            sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
        }
    }
}

impl ErrorStats {
    pub fn from_distances(d: &[f64]) -> Result<Self> {
        if d.is_empty() {
            return Err(Error::EmptySelection);
        }
        let mut s = d.to_vec();
        s.sort_by(f64::total_cmp);
        // summing sorted values makes the mean independent of input order
        let mean = (s.iter().sum::<f64>() / s.len() as f64).clamp(s[0], s[s.len() - 1]);
        Ok(Self {
            mean,
            median: percentile(&s, 0.5),
            p95: percentile(&s, 0.95),
            max: s[s.len() - 1],
            count: s.len(),
        })
    }

    /// Same statistics scaled to millimeters.
    pub fn in_mm(&self) -> Self {
        Self {
            mean: self.mean * 1e3,
            median: self.median * 1e3,
            p95: self.p95 * 1e3,
            max: self.max * 1e3,
            count: self.count,
        }
    }
}

fn masked(d: Vec<f64>, mask: Option<&[bool]>) -> Result<Vec<f64>> {
    match mask {
        None => Ok(d),
        Some(m) if m.len() != d.len() => Err(Error::SizeMismatch {
            what: "vertex mask",
            expected: d.len(),
            found: m.len(),
        }),
        Some(m) => Ok(d.into_iter().zip(m).filter(|(_, &keep)| keep).map(|(x, _)| x).collect()),
    }
}

/// Paired Euclidean distances.
pub fn vertex_distances(a: &[Vec3], b: &[Vec3]) -> Result<Vec<f64>> {
    if a.len() != b.len() {
        return Err(Error::SizeMismatch {
            what: "vertex arrays",
            expected: a.len(),
            found: b.len(),
        });
    }
    Ok(a.iter().zip(b).map(|(x, y)| (x - y).norm()).collect())
}

/// Statistics of paired distances over the vertices where `mask` is true
/// (all vertices without a mask).
pub fn vertex_error_stats(a: &[Vec3], b: &[Vec3], mask: Option<&[bool]>) -> Result<ErrorStats> {
    ErrorStats::from_distances(&masked(vertex_distances(a, b)?, mask)?)
}

/// Distance from each query to the nearest point of `surface`; excluded
/// queries are skipped.
pub fn closest_point_distances(query: &[Vec3], surface: &Mesh, exclude: Option<&[bool]>) -> Result<Vec<f64>> {
    let bvh = TriangleBvh::build(surface)?;
    if let Some(m) = exclude {
        if m.len() != query.len() {
            return Err(Error::SizeMismatch {
                what: "exclusion mask",
                expected: query.len(),
                found: m.len(),
            });
        }
    }
    Ok(query
        .par_iter()
        .enumerate()
        .filter(|(i, _)| !exclude.is_some_and(|m| m[*i]))
        .map(|(_, p)| bvh.closest(p).distance)
        .collect())
}

pub fn closest_point_error(query: &[Vec3], surface: &Mesh, exclude: Option<&[bool]>) -> Result<ErrorStats> {
    ErrorStats::from_distances(&closest_point_distances(query, surface, exclude)?)
}

/// Error statistics per region label; `all` covers every labeled vertex.
/// Regions without vertices are `None`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionBreakdown {
    pub all: ErrorStats,
    pub body: Option<ErrorStats>,
    pub hands: Option<ErrorStats>,
    pub feet: Option<ErrorStats>,
    pub head: Option<ErrorStats>,
}

impl RegionBreakdown {
    pub fn get(&self, r: Region) -> Option<&ErrorStats> {
        match r {
            Region::Body => self.body.as_ref(),
            Region::Hands => self.hands.as_ref(),
            Region::Feet => self.feet.as_ref(),
            Region::Head => self.head.as_ref(),
        }
    }

    pub fn in_mm(&self) -> Self {
        let f = |s: Option<ErrorStats>| s.map(|s| s.in_mm());
        Self {
            all: self.all.in_mm(),
            body: f(self.body),
            hands: f(self.hands),
            feet: f(self.feet),
            head: f(self.head),
        }
    }

    /// Rows in a fixed order: all, body, hands, feet, head.
    pub fn rows(&self) -> Vec<(&'static str, Option<ErrorStats>)> {
        vec![
            ("all", Some(self.all)),
            ("body", self.body),
            ("hands", self.hands),
            ("feet", self.feet),
            ("head", self.head),
        ]
    }
}

pub fn region_breakdown(a: &[Vec3], b: &[Vec3], regions: &[Region]) -> Result<RegionBreakdown> {
    let d = vertex_distances(a, b)?;
    if regions.len() != d.len() {
        return Err(Error::SizeMismatch {
            what: "region labels",
            expected: d.len(),
            found: regions.len(),
        });
    }
    let of = |r: Region| {
        let sel: Vec<f64> = d.iter().zip(regions).filter(|(_, &x)| x == r).map(|(v, _)| *v).collect();
        ErrorStats::from_distances(&sel).ok()
    };
    Ok(RegionBreakdown {
        all: ErrorStats::from_distances(&d)?,
        body: of(Region::Body),
        hands: of(Region::Hands),
        feet: of(Region::Feet),
        head: of(Region::Head),
    })
}

/// Frame-to-frame changes of a scalar series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stability {
    pub max_delta: f64,
    pub mean_delta: f64,
    pub deltas: Vec<f64>,
}

impl Stability {
    fn from_deltas(deltas: Vec<f64>) -> Self {
        Self {
            max_delta: deltas.iter().copied().fold(0.0, f64::max),
            mean_delta: deltas.iter().sum::<f64>() / deltas.len() as f64,
            deltas,
        }
    }
}

/// Deltas between consecutive per-frame region means of per-vertex errors.
/// Same units as the input.
pub fn temporal_stability(frames: &[Vec<f64>], mask: Option<&[bool]>) -> Result<Stability> {
    if frames.len() < 2 {
        return Err(Error::TooFewFrames);
    }
    let means: Vec<f64> = frames
        .par_iter()
        .map(|f| {
            let sel = masked(f.clone(), mask)?;
            if sel.is_empty() {
                return Err(Error::EmptySelection);
            }
            Ok(sel.iter().sum::<f64>() / sel.len() as f64)
        })
        .collect::<Result<_>>()?;
    Ok(Stability::from_deltas(means.windows(2).map(|w| (w[1] - w[0]).abs()).collect()))
}

/// Geodesic steps between consecutive rotations, in degrees.
pub fn rotation_stability(rotations: &[Mat3]) -> Result<Stability> {
    if rotations.len() < 2 {
        return Err(Error::TooFewFrames);
    }
    Ok(Stability::from_deltas(
        rotations.windows(2).map(|w| geodesic_angle(&w[0], &w[1]).to_degrees()).collect(),
    ))
}
