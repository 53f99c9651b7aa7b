//! Numerical search for fans partitioning several measures at once.
//!
//! The first ray is free, later rays are placed by quantiles of `μ1`, so a
//! candidate is `(center, first azimuth)`. A Fibonacci grid on `S² × S¹`
//! seeds Nelder–Mead runs in a local chart around each start.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::fanmeasure::{
    cross, default_frame, dot3, normalize, quantile_fan, random_rotation, rotate, sector_masses,
    Fan, MeasureCloud, MeasureError, Vec3,
};

pub const DEFAULT_BUDGET: usize = 20_000;
const AZIMUTH_STEPS: usize = 12;
/// Starts refined together; fixed so results do not depend on thread count.
const BATCH: usize = 4;
const PER_START: usize = 600;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolveError {
    #[error("expected {expected} measures, got {got}")]
    MeasureCount { expected: usize, got: usize },
    #[error("invalid alpha: {0}")]
    BadAlpha(String),
    #[error("tolerance {tolerance} is below the point granularity {granularity}")]
    BelowGranularity { tolerance: f64, granularity: f64 },
    #[error("invalid tolerance {0}")]
    BadTolerance(f64),
    #[error("budget must be positive")]
    ZeroBudget,
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

pub fn default_tolerance(measures: &[MeasureCloud]) -> f64 {
    let w = measures
        .iter()
        .map(MeasureCloud::max_weight)
        .fold(0.0, f64::max);
    (5.0 * w).max(1e-6)
}

fn check_tolerance(measures: &[MeasureCloud], tolerance: f64) -> Result<(), SolveError> {
    if !(tolerance.is_finite() && tolerance > 0.0) {
        return Err(SolveError::BadTolerance(tolerance));
    }
    let granularity = measures
        .iter()
        .map(MeasureCloud::max_weight)
        .fold(0.0, f64::max);
    if tolerance < granularity {
        return Err(SolveError::BelowGranularity {
            tolerance,
            granularity,
        });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveRequest {
    pub measures: Vec<MeasureCloud>,
    pub alpha: (f64, f64),
    pub tolerance: f64,
    pub seed: u64,
    pub budget: usize,
}

impl SolveRequest {
    /// Request with the default tolerance, seed 0 and the default budget.
    pub fn new(measures: Vec<MeasureCloud>, alpha: (f64, f64)) -> Self {
        let tolerance = default_tolerance(&measures);
        SolveRequest {
            measures,
            alpha,
            tolerance,
            seed: 0,
            budget: DEFAULT_BUDGET,
        }
    }

    pub fn validate(&self) -> Result<(), SolveError> {
        if self.measures.len() != 3 {
            return Err(SolveError::MeasureCount {
                expected: 3,
                got: self.measures.len(),
            });
        }
        let (s, t) = self.alpha;
        if !(s > 0.0 && t > 0.0 && s < 1.0 && t < 1.0 && (s + t - 1.0).abs() <= 1e-9) {
            return Err(SolveError::BadAlpha(format!(
                "({s}, {t}) must be positive and sum to 1"
            )));
        }
        if self.budget == 0 {
            return Err(SolveError::ZeroBudget);
        }
        check_tolerance(&self.measures, self.tolerance)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub fan: Fan,
    /// `|μ_j(σ₁) - s|` for each measure.
    pub residuals: Vec<f64>,
    pub objective: f64,
    pub tolerance: f64,
    pub evaluations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExploreRequest {
    pub measures: Vec<MeasureCloud>,
    pub alpha: [f64; 3],
    pub tolerance: f64,
    pub seed: u64,
    pub budget: usize,
}

impl ExploreRequest {
    pub fn new(measures: Vec<MeasureCloud>, alpha: [f64; 3]) -> Self {
        let tolerance = default_tolerance(&measures);
        ExploreRequest {
            measures,
            alpha,
            tolerance,
            seed: 0,
            budget: DEFAULT_BUDGET,
        }
    }

    /// `alpha = (p, q, r) / (p + q + r)`.
    pub fn from_parts(measures: Vec<MeasureCloud>, parts: [u32; 3]) -> Result<Self, SolveError> {
        if parts.contains(&0) {
            return Err(SolveError::BadAlpha(format!("{parts:?} has a zero entry")));
        }
        let n: u32 = parts.iter().sum();
        Ok(Self::new(measures, parts.map(|p| p as f64 / n as f64)))
    }

    pub fn validate(&self) -> Result<(), SolveError> {
        if self.measures.len() != 2 {
            return Err(SolveError::MeasureCount {
                expected: 2,
                got: self.measures.len(),
            });
        }
        if self.alpha.iter().any(|&a| !(a > 0.0))
            || (self.alpha.iter().sum::<f64>() - 1.0).abs() > 1e-9
        {
            return Err(SolveError::BadAlpha(format!(
                "{:?} must be positive and sum to 1",
                self.alpha
            )));
        }
        if self.budget == 0 {
            return Err(SolveError::ZeroBudget);
        }
        check_tolerance(&self.measures, self.tolerance)
    }
}

/// Outcome of a 3-fan search. No existence result backs it, so failure to
/// converge is an answer, not an error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExploreReport {
    pub exploratory: bool,
    pub fan: Fan,
    /// `|μ₂(σ_i) - α_i|` for the three sectors.
    pub residuals: Vec<f64>,
    pub mu1_masses: Vec<f64>,
    pub objective: f64,
    pub tolerance: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// Chart around a start: `(a, b, φ) ↦ (center, frame, first azimuth)`.
#[derive(Debug, Clone, Copy)]
struct Chart {
    c0: Vec3,
    u: Vec3,
    v: Vec3,
}

impl Chart {
    fn at(c0: Vec3) -> Self {
        let u = default_frame(c0);
        Chart {
            c0,
            u,
            v: cross(c0, u),
        }
    }

    fn point(&self, x: [f64; 3]) -> (Vec3, Vec3, f64) {
        let c = normalize([
            self.c0[0] + x[0] * self.u[0] + x[1] * self.v[0],
            self.c0[1] + x[0] * self.u[1] + x[1] * self.v[1],
            self.c0[2] + x[0] * self.u[2] + x[1] * self.v[2],
        ]);
        let d = dot3(self.u, c);
        let frame = normalize([
            self.u[0] - d * c[0],
            self.u[1] - d * c[1],
            self.u[2] - d * c[2],
        ]);
        (c, frame, x[2].rem_euclid(TAU))
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    value: f64,
    center: Vec3,
    frame: Vec3,
    phi: f64,
}

fn better(a: &Candidate, b: &Candidate) -> bool {
    let ka = (a.value, a.center, a.phi);
    let kb = (b.value, b.center, b.phi);
    ka.0.total_cmp(&kb.0)
        .then_with(|| {
            ka.1.iter()
                .zip(&kb.1)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
        .then_with(|| ka.2.total_cmp(&kb.2))
        .is_lt()
}

fn fibonacci_sphere(count: usize) -> Vec<Vec3> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..count)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / count as f64;
            let r = (1.0 - z * z).sqrt();
            let a = golden * i as f64;
            [r * a.cos(), r * a.sin(), z]
        })
        .collect()
}

/// Nelder–Mead on `f` from `x0` with axis steps `step`, stopping at `target`.
fn nelder_mead<F: Fn([f64; 3]) -> f64>(
    f: F,
    x0: [f64; 3],
    step: [f64; 3],
    target: f64,
    max_evals: usize,
) -> ([f64; 3], f64, usize) {
    let mut pts: Vec<([f64; 3], f64)> = Vec::with_capacity(4);
    pts.push((x0, f(x0)));
    for i in 0..3 {
        let mut x = x0;
        x[i] += step[i];
        pts.push((x, f(x)));
    }
    let mut evals = 4;
    let lin = |a: [f64; 3], b: [f64; 3], t: f64| -> [f64; 3] {
        std::array::from_fn(|i| a[i] + t * (b[i] - a[i]))
    };
    while evals < max_evals {
        pts.sort_by(|a, b| a.1.total_cmp(&b.1));
        if pts[0].1 <= target {
            break;
        }
        let size = (1..4)
            .map(|i| {
                (0..3)
                    .map(|k| (pts[i].0[k] - pts[0].0[k]).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if size < 1e-9 {
            break;
        }
        let centroid: [f64; 3] =
            std::array::from_fn(|k| (pts[0].0[k] + pts[1].0[k] + pts[2].0[k]) / 3.0);
        let worst = pts[3];
        let xr = lin(centroid, worst.0, -1.0);
        let fr = f(xr);
        evals += 1;
        if fr < pts[0].1 {
            let xe = lin(centroid, worst.0, -2.0);
            let fe = f(xe);
            evals += 1;
            pts[3] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < pts[2].1 {
            pts[3] = (xr, fr);
        } else {
            let (xc, fc) = if fr < worst.1 {
                let x = lin(centroid, worst.0, -0.5);
                (x, f(x))
            } else {
                let x = lin(centroid, worst.0, 0.5);
                (x, f(x))
            };
            evals += 1;
            if fc < worst.1.min(fr) {
                pts[3] = (xc, fc);
            } else {
                let best = pts[0].0;
                for p in pts.iter_mut().skip(1) {
                    p.0 = lin(best, p.0, 0.5);
                    p.1 = f(p.0);
                }
                evals += 3;
            }
        }
    }
    pts.sort_by(|a, b| a.1.total_cmp(&b.1));
    (pts[0].0, pts[0].1, evals)
}

/// Minimizes `objective(center, frame, φ)` (infinite where undefined).
fn search<F>(objective: F, tolerance: f64, seed: u64, budget: usize) -> (Candidate, usize)
where
    F: Fn(Vec3, Vec3, f64) -> f64 + Sync,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rot = random_rotation(&mut rng);
    let offset = rng.gen_range(0.0..TAU / AZIMUTH_STEPS as f64);

    let grid_budget = (budget / 5).max(1);
    let centers = (grid_budget / AZIMUTH_STEPS).max(1);
    let steps = AZIMUTH_STEPS.min(grid_budget);
    let cells: Vec<(Vec3, f64)> = fibonacci_sphere(centers)
        .into_iter()
        .flat_map(|c| {
            let c = normalize(rotate(&rot, c));
            (0..steps).map(move |k| (c, offset + TAU * k as f64 / steps as f64))
        })
        .collect();
    let mut scored: Vec<Candidate> = cells
        .par_iter()
        .map(|&(c, phi)| {
            let frame = default_frame(c);
            Candidate {
                value: objective(c, frame, phi),
                center: c,
                frame,
                phi,
            }
        })
        .collect();
    let mut evals = scored.len();
    scored.sort_by(|a, b| {
        if better(a, b) {
            std::cmp::Ordering::Less
        } else if better(b, a) {
            std::cmp::Ordering::Greater
        } else {
            std::cmp::Ordering::Equal
        }
    });
    let mut best = scored[0];
    let target = 0.5 * tolerance;
    if best.value <= target {
        return (best, evals);
    }

    let spacing = (4.0 * std::f64::consts::PI / centers as f64).sqrt();
    let step = [0.5 * spacing, 0.5 * spacing, 0.5 * TAU / steps as f64];
    for batch in scored.chunks(BATCH) {
        if evals >= budget {
            break;
        }
        let per = PER_START.min((budget - evals) / batch.len()).max(8);
        let runs: Vec<(Candidate, usize)> = batch
            .par_iter()
            .map(|start| {
                let chart = Chart::at(start.center);
                let g = |x: [f64; 3]| {
                    if x[0].abs() > 1.0 || x[1].abs() > 1.0 {
                        return f64::INFINITY;
                    }
                    let (c, fr, phi) = chart.point(x);
                    objective(c, fr, phi)
                };
                // Frame at the start differs from the chart frame only in rotation about c0.
                let (x, value, used) = nelder_mead(g, [0.0, 0.0, start.phi], step, target, per);
                let (center, frame, phi) = chart.point(x);
                (
                    Candidate {
                        value,
                        center,
                        frame,
                        phi,
                    },
                    used,
                )
            })
            .collect();
        for (cand, used) in runs {
            evals += used;
            if better(&cand, &best) {
                best = cand;
            }
        }
        if best.value <= target {
            break;
        }
    }
    (best, evals)
}

fn two_fan_objective(measures: &[MeasureCloud], s: f64, c: Vec3, frame: Vec3, phi: f64) -> f64 {
    let Ok(fan) = quantile_fan(c, frame, phi, &measures[0], &[s]) else {
        return f64::INFINITY;
    };
    match sector_masses(&fan, &measures[1..]) {
        Ok(m) => m
            .masses
            .iter()
            .map(|row| (row[0] - s).abs())
            .fold(0.0, f64::max),
        Err(_) => f64::INFINITY,
    }
}

pub fn solve_2fan_3measures(req: &SolveRequest) -> Result<SolveResult, SolveError> {
    req.validate()?;
    let s = req.alpha.0;
    let (best, evaluations) = search(
        |c, f, phi| two_fan_objective(&req.measures, s, c, f, phi),
        req.tolerance,
        req.seed,
        req.budget,
    );
    let fan = quantile_fan(best.center, best.frame, best.phi, &req.measures[0], &[s])?;
    let residuals: Vec<f64> = sector_masses(&fan, &req.measures)?
        .masses
        .iter()
        .map(|row| (row[0] - s).abs())
        .collect();
    let objective = residuals.iter().copied().fold(0.0, f64::max);
    Ok(SolveResult {
        fan,
        converged: objective <= req.tolerance,
        residuals,
        objective,
        tolerance: req.tolerance,
        evaluations,
    })
}

fn three_fan_objective(
    measures: &[MeasureCloud],
    alpha: [f64; 3],
    c: Vec3,
    frame: Vec3,
    phi: f64,
) -> f64 {
    let Ok(fan) = quantile_fan(
        c,
        frame,
        phi,
        &measures[0],
        &[alpha[0], alpha[0] + alpha[1]],
    ) else {
        return f64::INFINITY;
    };
    match sector_masses(&fan, &measures[1..]) {
        Ok(m) => m.masses[0]
            .iter()
            .zip(alpha)
            .map(|(x, a)| (x - a).abs())
            .fold(0.0, f64::max),
        Err(_) => f64::INFINITY,
    }
}

/// Looks for a 3-fan cutting both measures in proportions `alpha`.
pub fn explore_3fan_2measures(req: &ExploreRequest) -> Result<ExploreReport, SolveError> {
    req.validate()?;
    let a = req.alpha;
    let (best, evaluations) = search(
        |c, f, phi| three_fan_objective(&req.measures, a, c, f, phi),
        req.tolerance,
        req.seed,
        req.budget,
    );
    let fan = quantile_fan(
        best.center,
        best.frame,
        best.phi,
        &req.measures[0],
        &[a[0], a[0] + a[1]],
    )?;
    let masses = sector_masses(&fan, &req.measures)?.masses;
    let residuals: Vec<f64> = masses[1]
        .iter()
        .zip(a)
        .map(|(x, t)| (x - t).abs())
        .collect();
    let objective = residuals.iter().copied().fold(0.0, f64::max);
    Ok(ExploreReport {
        exploratory: true,
        fan,
        mu1_masses: masses[0].clone(),
        converged: objective <= req.tolerance,
        residuals,
        objective,
        tolerance: req.tolerance,
        evaluations,
    })
}

/// Pulls a fan found for rotated data back to the original frame.
pub fn pull_back(fan: &Fan, r: &crate::fanmeasure::Rotation) -> Fan {
    fan.rotated(&crate::fanmeasure::transpose(r))
}
