//! Weighted point clouds on `S²`, k-fans and sector masses.
//!
//! Sectors are half-open azimuth intervals `[φ_i, φ_{i+1})` around the fan
//! center. With smoothing of half-width `δ`, every point mass is spread evenly
//! over the azimuth arc `[ψ-δ, ψ+δ]`, which makes all CDFs continuous.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

pub type Vec3 = [f64; 3];

pub const DEFAULT_SMOOTHING: f64 = 1e-4;
/// Points closer than this (radians) to the fan axis have no azimuth.
pub const POLE_TOLERANCE: f64 = 1e-9;
const UNIT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MeasureError {
    #[error("cloud is empty")]
    Empty,
    #[error("{0} points but {1} weights")]
    LengthMismatch(usize, usize),
    #[error("non-finite value in input")]
    NonFinite,
    #[error("point {0} is not a unit vector")]
    NotUnit(usize),
    #[error("invalid weights: {0}")]
    BadWeights(String),
    #[error("point {index} lies on the fan axis")]
    PoleCollision { index: usize },
    #[error("invalid fan: {0}")]
    BadFan(String),
    #[error("quantiles collapse: mass too concentrated for {0} sectors")]
    DegenerateQuantiles(usize),
    #[error("invalid smoothing width {0}")]
    BadSmoothing(f64),
    #[error("measure JSON: {0}")]
    Json(String),
}

pub fn dot3(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn norm(a: Vec3) -> f64 {
    dot3(a, a).sqrt()
}

pub fn normalize(a: Vec3) -> Vec3 {
    let r = norm(a);
    [a[0] / r, a[1] / r, a[2] / r]
}

fn axpy(a: f64, x: Vec3, y: Vec3) -> Vec3 {
    [a * x[0] + y[0], a * x[1] + y[1], a * x[2] + y[2]]
}

pub type Rotation = [[f64; 3]; 3];

pub fn rotate(r: &Rotation, v: Vec3) -> Vec3 {
    [dot3(r[0], v), dot3(r[1], v), dot3(r[2], v)]
}

pub fn transpose(r: &Rotation) -> Rotation {
    std::array::from_fn(|i| std::array::from_fn(|j| r[j][i]))
}

/// Uniformly random rotation from a normalized Gaussian quaternion.
pub fn random_rotation<R: Rng>(rng: &mut R) -> Rotation {
    let q: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
    let n = q.iter().map(|x| x * x).sum::<f64>().sqrt();
    let [w, x, y, z] = q.map(|c| c / n);
    [
        [
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
        ],
        [
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
        ],
        [
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        ],
    ]
}

/// Rotation of `v` about the unit axis `k` by angle `a` (Rodrigues).
pub fn rotate_about(k: Vec3, a: f64, v: Vec3) -> Vec3 {
    let (s, c) = a.sin_cos();
    let kv = cross(k, v);
    let kd = dot3(k, v) * (1.0 - c);
    [
        v[0] * c + kv[0] * s + k[0] * kd,
        v[1] * c + kv[1] * s + k[1] * kd,
        v[2] * c + kv[2] * s + k[2] * kd,
    ]
}

/// A unit tangent vector at `center`, from the coordinate axis least aligned with it.
pub fn default_frame(center: Vec3) -> Vec3 {
    let axis = (0..3)
        .min_by(|&a, &b| center[a].abs().total_cmp(&center[b].abs()))
        .unwrap_or(0);
    let mut e = [0.0; 3];
    e[axis] = 1.0;
    normalize(axpy(-dot3(e, center), center, e))
}

/// Azimuth of `point` around `center`, counter-clockwise from `frame`, in `[0, 2π)`.
pub fn azimuth(center: Vec3, frame: Vec3, point: Vec3) -> Option<f64> {
    let u = axpy(-dot3(point, center), center, point);
    if norm(u) < POLE_TOLERANCE.sin() {
        return None;
    }
    let y = dot3(u, cross(center, frame));
    let x = dot3(u, frame);
    Some(y.atan2(x).rem_euclid(TAU))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureCloud {
    points: Vec<Vec3>,
    weights: Vec<f64>,
    smoothing: Option<f64>,
}

#[derive(Deserialize)]
struct MeasureJson {
    points: Vec<Vec3>,
    weights: Vec<f64>,
    #[serde(default = "default_smoothing")]
    smoothing: Option<f64>,
}

fn default_smoothing() -> Option<f64> {
    Some(DEFAULT_SMOOTHING)
}

impl MeasureCloud {
    pub fn new(
        points: Vec<Vec3>,
        weights: Vec<f64>,
        smoothing: Option<f64>,
    ) -> Result<Self, MeasureError> {
        if points.is_empty() {
            return Err(MeasureError::Empty);
        }
        if points.len() != weights.len() {
            return Err(MeasureError::LengthMismatch(points.len(), weights.len()));
        }
        if points
            .iter()
            .flatten()
            .chain(&weights)
            .any(|x| !x.is_finite())
        {
            return Err(MeasureError::NonFinite);
        }
        if let Some(i) = points
            .iter()
            .position(|p| (norm(*p) - 1.0).abs() > UNIT_TOLERANCE)
        {
            return Err(MeasureError::NotUnit(i));
        }
        if weights.iter().any(|&w| w <= 0.0) {
            return Err(MeasureError::BadWeights("weights must be positive".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > UNIT_TOLERANCE {
            return Err(MeasureError::BadWeights(format!("weights sum to {total}")));
        }
        if let Some(d) = smoothing {
            if !(d.is_finite() && d > 0.0 && d < std::f64::consts::PI) {
                return Err(MeasureError::BadSmoothing(d));
            }
        }
        Ok(MeasureCloud {
            points,
            weights,
            smoothing,
        })
    }

    /// Normalizes points and weights before validating.
    pub fn normalized(
        points: Vec<Vec3>,
        weights: Vec<f64>,
        smoothing: Option<f64>,
    ) -> Result<Self, MeasureError> {
        if points
            .iter()
            .flatten()
            .chain(&weights)
            .any(|x| !x.is_finite())
        {
            return Err(MeasureError::NonFinite);
        }
        if let Some(i) = points.iter().position(|p| norm(*p) == 0.0) {
            return Err(MeasureError::NotUnit(i));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(MeasureError::BadWeights(
                "total weight is not positive".into(),
            ));
        }
        let points = points.into_iter().map(normalize).collect();
        let weights = weights.into_iter().map(|w| w / total).collect();
        Self::new(points, weights, smoothing)
    }

    /// `{ "points": [[x,y,z],…], "weights": [w,…] }` with an optional `"smoothing"`.
    pub fn from_json(s: &str) -> Result<Self, MeasureError> {
        let raw: MeasureJson =
            serde_json::from_str(s).map_err(|e| MeasureError::Json(e.to_string()))?;
        Self::normalized(raw.points, raw.weights, raw.smoothing)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("plain data")
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn smoothing(&self) -> Option<f64> {
        self.smoothing
    }

    pub fn with_smoothing(mut self, smoothing: Option<f64>) -> Result<Self, MeasureError> {
        self.smoothing = smoothing;
        Self::new(self.points, self.weights, self.smoothing)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn max_weight(&self) -> f64 {
        self.weights.iter().copied().fold(0.0, f64::max)
    }

    pub fn rotated(&self, r: &Rotation) -> Self {
        MeasureCloud {
            points: self
                .points
                .iter()
                .map(|&p| normalize(rotate(r, p)))
                .collect(),
            weights: self.weights.clone(),
            smoothing: self.smoothing,
        }
    }

    /// Azimuths of all points around `center` relative to `frame`.
    pub fn azimuths(&self, center: Vec3, frame: Vec3) -> Result<Vec<f64>, MeasureError> {
        let side = cross(center, frame);
        let eps = POLE_TOLERANCE.sin();
        self.points
            .iter()
            .enumerate()
            .map(|(i, &p)| {
                let u = axpy(-dot3(p, center), center, p);
                if norm(u) < eps {
                    return Err(MeasureError::PoleCollision { index: i });
                }
                Ok(dot3(u, side).atan2(dot3(u, frame)).rem_euclid(TAU))
            })
            .collect()
    }
}

/// Gaussian blobs around random centers projected to the sphere, equal weights.
pub fn sample_mixture(seed: u64, points: usize, blobs: usize, spread: f64) -> MeasureCloud {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gauss = |rng: &mut ChaCha8Rng| -> Vec3 {
        std::array::from_fn(|_| rng.sample::<f64, _>(StandardNormal))
    };
    let centers: Vec<Vec3> = (0..blobs.max(1))
        .map(|_| normalize(gauss(&mut rng)))
        .collect();
    let pts = (0..points)
        .map(|_| {
            let c = centers[rng.gen_range(0..centers.len())];
            let d: Vec3 = gauss(&mut rng);
            normalize(axpy(spread, d, c))
        })
        .collect();
    let w = 1.0 / points as f64;
    let mut weights = vec![w; points];
    // Absorb rounding so the weights sum to 1 within the validation tolerance.
    let drift = 1.0 - weights.iter().sum::<f64>();
    weights[0] += drift;
    MeasureCloud::new(pts, weights, Some(DEFAULT_SMOOTHING)).expect("sampled cloud is valid")
}

/// `k`-fan: center, reference tangent direction and strictly increasing ray azimuths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fan {
    pub center: Vec3,
    pub frame: Vec3,
    pub azimuths: Vec<f64>,
}

impl Fan {
    pub fn new(center: Vec3, frame: Vec3, azimuths: Vec<f64>) -> Result<Self, MeasureError> {
        if azimuths.is_empty() {
            return Err(MeasureError::BadFan("no rays".into()));
        }
        if center
            .iter()
            .chain(&frame)
            .chain(&azimuths)
            .any(|x| !x.is_finite())
        {
            return Err(MeasureError::NonFinite);
        }
        if (norm(center) - 1.0).abs() > 1e-9
            || (norm(frame) - 1.0).abs() > 1e-9
            || dot3(center, frame).abs() > 1e-9
        {
            return Err(MeasureError::BadFan(
                "center and frame must be orthonormal".into(),
            ));
        }
        if azimuths.iter().any(|&a| !(0.0..TAU).contains(&a))
            || azimuths.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(MeasureError::BadFan(
                "azimuths must increase strictly within [0, 2π)".into(),
            ));
        }
        Ok(Fan {
            center,
            frame,
            azimuths,
        })
    }

    pub fn k(&self) -> usize {
        self.azimuths.len()
    }

    /// Unit tangent of ray `i` at the center.
    pub fn ray(&self, i: usize) -> Vec3 {
        rotate_about(self.center, self.azimuths[i], self.frame)
    }

    pub fn rotated(&self, r: &Rotation) -> Fan {
        Fan {
            center: normalize(rotate(r, self.center)),
            frame: normalize(rotate(r, self.frame)),
            azimuths: self.azimuths.clone(),
        }
    }

    /// Sector `[φ_i, φ_{i+1})` as up to two pieces inside `[0, 2π)`.
    fn sector_pieces(&self, i: usize) -> Vec<(f64, f64)> {
        let k = self.k();
        if k == 1 {
            return vec![(0.0, TAU)];
        }
        let a = self.azimuths[i];
        let b = self.azimuths[(i + 1) % k];
        if a < b {
            vec![(a, b)]
        } else {
            vec![(a, TAU), (0.0, b)]
        }
    }

    /// Index of the half-open sector containing azimuth `x`.
    pub fn sector_of(&self, x: f64) -> usize {
        let k = self.k();
        match self.azimuths.iter().rposition(|&a| a <= x) {
            Some(i) => i,
            None => k - 1,
        }
    }
}

/// Per-measure, per-sector masses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorMasses {
    pub masses: Vec<Vec<f64>>,
}

fn overlap(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.1.min(b.1) - a.0.max(b.0)).max(0.0)
}

/// Arc `[x-δ, x+δ]` as pieces inside `[0, 2π)`.
fn arc_pieces(x: f64, d: f64) -> ([(f64, f64); 2], usize) {
    let (lo, hi) = (x - d, x + d);
    if lo < 0.0 {
        ([(lo + TAU, TAU), (0.0, hi)], 2)
    } else if hi > TAU {
        ([(lo, TAU), (0.0, hi - TAU)], 2)
    } else {
        ([(lo, hi), (0.0, 0.0)], 1)
    }
}

pub fn cloud_sector_masses(fan: &Fan, cloud: &MeasureCloud) -> Result<Vec<f64>, MeasureError> {
    let az = cloud.azimuths(fan.center, fan.frame)?;
    let k = fan.k();
    let mut out = vec![0.0; k];
    match cloud.smoothing {
        None => {
            for (x, w) in az.iter().zip(&cloud.weights) {
                out[fan.sector_of(*x)] += w;
            }
        }
        Some(d) => {
            let sectors: Vec<Vec<(f64, f64)>> = (0..k).map(|i| fan.sector_pieces(i)).collect();
            let covered = |arcs: &[(f64, f64)], pieces: &[(f64, f64)]| -> f64 {
                arcs.iter()
                    .map(|&a| pieces.iter().map(|&p| overlap(a, p)).sum::<f64>())
                    .sum()
            };
            for (&x, &w) in az.iter().zip(&cloud.weights) {
                let (arcs, len) = arc_pieces(x, d);
                let arcs = &arcs[..len];
                let s = fan.sector_of(x);
                // Fast path: the whole arc sits in the point's own sector.
                if (covered(arcs, &sectors[s]) - 2.0 * d).abs() <= 1e-15 {
                    out[s] += w;
                    continue;
                }
                for (i, pieces) in sectors.iter().enumerate() {
                    out[i] += w * covered(arcs, pieces) / (2.0 * d);
                }
            }
        }
    }
    Ok(out)
}

pub fn sector_masses(fan: &Fan, measures: &[MeasureCloud]) -> Result<SectorMasses, MeasureError> {
    Ok(SectorMasses {
        masses: measures
            .iter()
            .map(|m| cloud_sector_masses(fan, m))
            .collect::<Result<_, _>>()?,
    })
}

/// Smoothed cumulative mass, `G(t) - G(0)` is the mass of `[0, t)`.
struct SmoothCdf {
    /// Azimuths with copies shifted by `±2π`, sorted.
    pos: Vec<f64>,
    weight: Vec<f64>,
    /// `prefix[i]` = total weight of `pos[..i]`.
    prefix: Vec<f64>,
    d: f64,
}

impl SmoothCdf {
    fn new(rel: &[f64], weights: &[f64], d: f64) -> Self {
        let mut pts: Vec<(f64, f64)> = Vec::with_capacity(rel.len() + 8);
        for (&x, &w) in rel.iter().zip(weights) {
            pts.push((x, w));
            if x < d {
                pts.push((x + TAU, w));
            }
            if x > TAU - d {
                pts.push((x - TAU, w));
            }
        }
        pts.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
        let mut prefix = Vec::with_capacity(pts.len() + 1);
        prefix.push(0.0);
        let mut acc = 0.0;
        for &(_, w) in &pts {
            acc += w;
            prefix.push(acc);
        }
        let (pos, weight) = pts.into_iter().unzip();
        SmoothCdf {
            pos,
            weight,
            prefix,
            d,
        }
    }

    fn g(&self, t: f64) -> f64 {
        let lo = self.pos.partition_point(|&x| x <= t - self.d);
        let hi = self.pos.partition_point(|&x| x < t + self.d);
        let mut v = self.prefix[lo];
        for i in lo..hi {
            v += self.weight[i] * (t - self.pos[i] + self.d) / (2.0 * self.d);
        }
        v
    }

    /// Least `t` in `[0, 2π]` with mass of `[0, t)` equal to `target`.
    fn quantile(&self, target: f64) -> f64 {
        let base = self.g(0.0);
        let goal = base + target;
        // Bracket on the step function, then bisect within a few δ.
        let i = self
            .prefix
            .partition_point(|&p| p < goal)
            .saturating_sub(1)
            .min(self.pos.len().saturating_sub(1));
        let centre = self.pos.get(i).copied().unwrap_or(0.0);
        let (mut a, mut b) = (
            (centre - 2.0 * self.d).max(0.0),
            (centre + 2.0 * self.d).min(TAU),
        );
        if self.g(a) > goal {
            a = 0.0;
        }
        if self.g(b) < goal {
            b = TAU;
        }
        for _ in 0..100 {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            if self.g(m) < goal {
                a = m;
            } else {
                b = m;
            }
        }
        b
    }
}

/// Positions `t` with `μ([0, t)) = target` for each cumulative target, where
/// `rel` are the point azimuths measured from the first ray.
fn quantiles(cloud: &MeasureCloud, rel: &[f64], targets: &[f64]) -> Vec<f64> {
    match cloud.smoothing {
        None => {
            let mut pts: Vec<(f64, f64)> = rel
                .iter()
                .copied()
                .zip(cloud.weights.iter().copied())
                .collect();
            pts.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
            targets
                .iter()
                .map(|&target| {
                    // Best cut between consecutive sorted points.
                    let mut acc = 0.0;
                    let mut best = (f64::INFINITY, 0.0);
                    let mut prev = 0.0;
                    for &(x, w) in &pts {
                        let cut = 0.5 * (prev + x);
                        if (acc - target).abs() < best.0 {
                            best = ((acc - target).abs(), cut);
                        }
                        acc += w;
                        prev = x;
                    }
                    best.1
                })
                .collect()
        }
        Some(d) => {
            let cdf = SmoothCdf::new(rel, &cloud.weights, d);
            targets.iter().map(|&t| cdf.quantile(t)).collect()
        }
    }
}

/// Fan whose first ray sits at `first_azimuth` and whose later rays cut `μ1`
/// at the cumulative fractions `cuts` (each in `(0, 1)`, increasing).
/// The returned fan's frame points along its first ray.
pub fn quantile_fan(
    center: Vec3,
    frame: Vec3,
    first_azimuth: f64,
    mu1: &MeasureCloud,
    cuts: &[f64],
) -> Result<Fan, MeasureError> {
    let ray1 = rotate_about(center, first_azimuth, frame);
    let rel = mu1.azimuths(center, ray1)?;
    let mut az = vec![0.0];
    az.extend(quantiles(mu1, &rel, cuts));
    if az.windows(2).any(|w| w[0] >= w[1]) || az.iter().any(|&a| a >= TAU) {
        return Err(MeasureError::DegenerateQuantiles(cuts.len() + 1));
    }
    Fan::new(center, ray1, az)
}

/// The point of the configuration space determined by `(center, first ray)`:
/// `n` sectors of `μ1`-mass `1/n` each.
pub fn equipartition_fan(
    center: Vec3,
    frame: Vec3,
    first_azimuth: f64,
    mu1: &MeasureCloud,
    n: usize,
) -> Result<Fan, MeasureError> {
    if n == 0 {
        return Err(MeasureError::BadFan("n must be positive".into()));
    }
    let cuts: Vec<f64> = (1..n).map(|i| i as f64 / n as f64).collect();
    quantile_fan(center, frame, first_azimuth, mu1, &cuts)
}

/// Rows `(μ_j(σ_1) - 1/n, …, μ_j(σ_n) - 1/n)` for `j = 2..m` over the
/// equipartition fan of `μ1`.
pub fn test_map_f(
    center: Vec3,
    frame: Vec3,
    first_azimuth: f64,
    measures: &[MeasureCloud],
    n: usize,
) -> Result<Vec<Vec<f64>>, MeasureError> {
    let (mu1, rest) = measures.split_first().ok_or(MeasureError::Empty)?;
    let fan = equipartition_fan(center, frame, first_azimuth, mu1, n)?;
    rest.iter()
        .map(|m| {
            Ok(cloud_sector_masses(&fan, m)?
                .into_iter()
                .map(|x| x - 1.0 / n as f64)
                .collect())
        })
        .collect()
}
