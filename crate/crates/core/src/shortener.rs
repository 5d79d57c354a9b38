//! Length descent under the hull-containment constraint, plus a one-stop
//! diagnostic report.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::curve::Curve3;
use crate::error::{Error, Result};
use crate::horizon::curve_efficiency;
use crate::inspection::{check_inspects, hull_planes, InspectionReport};
use crate::oracle::{mc_horizon, HorizonEstimate};
use crate::sphere::DirectionSampler;
use crate::unfold::{decompose_space_curve, spiral_efficiency, SpiralTolerances};
use crate::vector::{Point, Vec3};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ShortenConfig {
    pub max_iters: usize,
    /// Fraction of the way each vertex moves toward its neighbors' midpoint.
    pub step: f64,
    pub shrink_factor: f64,
    pub inspect_samples: usize,
    pub seed: u64,
    pub stop_rel_tol: f64,
    /// Starts whose support is at least `1 - start_tol` are projected onto
    /// the feasible set before the first step.
    pub start_tol: f64,
    /// Test feasibility against the exact hull instead of sampled directions.
    pub exact_hull: bool,
}

impl Default for ShortenConfig {
    fn default() -> Self {
        Self {
            max_iters: 2000,
            step: 0.5,
            shrink_factor: 0.5,
            inspect_samples: 100_000,
            seed: 0,
            stop_rel_tol: 1e-7,
            start_tol: 1e-2,
            exact_hull: false,
        }
    }
}

impl ShortenConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str, value: f64| Err(Error::InvalidArgument(format!("{what} out of range: {value}")));
        if self.max_iters == 0 {
            return bad("max_iters", 0.0);
        }
        if !(self.step > 0.0 && self.step <= 1.0) {
            return bad("step", self.step);
        }
        if !(self.shrink_factor > 0.0 && self.shrink_factor < 1.0) {
            return bad("shrink_factor", self.shrink_factor);
        }
        if self.inspect_samples == 0 {
            return bad("inspect_samples", 0.0);
        }
        if !(self.stop_rel_tol > 0.0) {
            return bad("stop_rel_tol", self.stop_rel_tol);
        }
        if !(self.start_tol >= 0.0 && self.start_tol < 1.0) {
            return bad("start_tol", self.start_tol);
        }
        Ok(())
    }

    /// The direction set used for every feasibility test of a run.
    pub fn sampler(&self) -> DirectionSampler {
        DirectionSampler::fibonacci(self.inspect_samples).with_random_rotation(self.seed)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TraceRecord {
    pub iter: usize,
    /// Length of the current iterate after this iteration's decision.
    pub length: f64,
    pub step: f64,
    /// Whether the proposal could be made feasible.
    pub feasible: bool,
    pub accepted: bool,
    /// Support of the proposal after projection.
    pub min_support: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ShortenTrace {
    pub records: Vec<TraceRecord>,
    pub initial_length: f64,
    pub accepted_steps: usize,
    pub curve: Curve3,
}

impl ShortenTrace {
    pub fn final_length(&self) -> f64 {
        self.curve.length()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("iter,length,step,feasible,min_support\n");
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{:.16e},{:.16e},{},{:.16e}",
                r.iter, r.length, r.step, r.feasible, r.min_support
            );
        }
        out
    }
}

const PROJECTION_ROUNDS: usize = 60;
const PUSH_MARGIN: f64 = 1e-12;

type Pushes = Vec<Option<(f64, Vec3)>>;

fn offer(slot: &mut Option<(f64, Vec3)>, deficit: f64, u: Vec3) {
    if deficit > 0.0 && slot.is_none_or(|(d, _)| deficit > d) {
        *slot = Some((deficit, u));
    }
}

/// The feasibility test: support at least 1 in every sampled direction, or
/// in every direction when `Exact`.
enum Wall {
    Sampled(Vec<Vec3>),
    Exact,
}

impl Wall {
    const BLOCK: usize = 4096;

    /// Minimum support and, per vertex, the largest push needed by any
    /// violated direction that vertex supports.
    fn scan(&self, pts: &[Vec3]) -> (f64, Pushes) {
        let mut push: Pushes = vec![None; pts.len()];
        match self {
            Wall::Exact => {
                let mut min = f64::INFINITY;
                for plane in hull_planes(pts) {
                    min = min.min(plane.offset);
                    for &i in &plane.vertices {
                        offer(&mut push[i], 1.0 - plane.offset, plane.normal);
                    }
                }
                (min, push)
            }
            Wall::Sampled(dirs) => {
                let parts: Vec<_> = dirs
                    .par_chunks(Self::BLOCK)
                    .map(|dirs| {
                        let mut min = f64::INFINITY;
                        let mut push: Pushes = vec![None; pts.len()];
                        for &u in dirs {
                            let (mut best, mut arg) = (f64::NEG_INFINITY, 0);
                            for (i, v) in pts.iter().enumerate() {
                                let s = v.dot(u);
                                if s > best {
                                    best = s;
                                    arg = i;
                                }
                            }
                            min = min.min(best);
                            offer(&mut push[arg], 1.0 - best, u);
                        }
                        (min, push)
                    })
                    .collect();
                let mut min = f64::INFINITY;
                for (m, p) in parts {
                    min = min.min(m);
                    for (acc, q) in push.iter_mut().zip(p) {
                        if let Some((d, u)) = q {
                            offer(acc, d, u);
                        }
                    }
                }
                (min, push)
            }
        }
    }

    /// Pushes violating vertices outward until every direction has support
    /// at least 1. Returns the final support, or `None` if rounds run out.
    fn project(&self, pts: &mut [Vec3]) -> (Option<f64>, f64) {
        let mut last = f64::NEG_INFINITY;
        for _ in 0..PROJECTION_ROUNDS {
            let (min, push) = self.scan(pts);
            last = min;
            if min >= 1.0 {
                return (Some(min), min);
            }
            for (v, p) in pts.iter_mut().zip(push) {
                if let Some((d, u)) = p {
                    *v += u * (d + PUSH_MARGIN);
                }
            }
        }
        (None, last)
    }
}

fn polygon_length(pts: &[Vec3]) -> f64 {
    let n = pts.len();
    (0..n).map(|i| (pts[(i + 1) % n] - pts[i]).norm()).sum()
}

/// Moves every vertex a fraction `step` toward the midpoint of its neighbors,
/// projects back onto the feasible set and keeps the batch only if it is
/// feasible and shorter. The step grows by 10% after an accepted batch and
/// shrinks by `shrink_factor` after a rejected one. Stops once the relative
/// decrease over the last 10 iterations is below `stop_rel_tol`.
pub fn shorten(curve: &Curve3, cfg: &ShortenConfig) -> Result<ShortenTrace> {
    cfg.validate()?;
    if !curve.is_closed() {
        return Err(Error::InvalidArgument("the shortener needs a closed curve".into()));
    }
    if curve.vertex_count() < 3 {
        return Err(Error::DegenerateCurve("need at least 3 vertices".into()));
    }
    let wall = if cfg.exact_hull {
        Wall::Exact
    } else {
        Wall::Sampled(cfg.sampler().sample_directions())
    };
    let mut pts = curve.points().to_vec();
    let (start_support, _) = wall.scan(&pts);
    if start_support < 1.0 - cfg.start_tol {
        return Err(Error::InfeasibleStart {
            min_support: start_support,
        });
    }
    let (ok, support) = wall.project(&mut pts);
    if ok.is_none() {
        return Err(Error::InfeasibleStart { min_support: support });
    }
    let initial_length = polygon_length(&pts);
    let mut length = initial_length;
    let mut step = cfg.step;
    let mut records = vec![TraceRecord {
        iter: 0,
        length,
        step,
        feasible: true,
        accepted: true,
        min_support: support,
    }];
    let mut accepted_steps = 0;
    let n = pts.len();
    for iter in 1..=cfg.max_iters {
        let mut trial: Vec<Vec3> = (0..n)
            .map(|i| {
                let mid = (pts[(i + n - 1) % n] + pts[(i + 1) % n]) * 0.5;
                pts[i].lerp(mid, step)
            })
            .collect();
        let (ok, support) = wall.project(&mut trial);
        let trial_length = polygon_length(&trial);
        let accepted = ok.is_some() && trial_length < length;
        if accepted {
            pts = trial;
            length = trial_length;
            accepted_steps += 1;
            step = (step * 1.1).min(1.0);
        } else {
            step *= cfg.shrink_factor;
        }
        records.push(TraceRecord {
            iter,
            length,
            step,
            feasible: ok.is_some(),
            accepted,
            min_support: support,
        });
        if iter >= 10 {
            let before = records[iter - 10].length;
            if (before - length) / before < cfg.stop_rel_tol {
                break;
            }
        }
    }
    Ok(ShortenTrace {
        records,
        initial_length,
        accepted_steps,
        curve: Curve3::new(pts, true)?,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SpiralSummary {
    pub pieces: usize,
    pub flat_set_length: f64,
    pub max_piece_efficiency: f64,
    pub max_orthogonal_start_defect: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Diagnosis {
    pub length: f64,
    pub length_over_4pi: f64,
    pub mc_horizon: HorizonEstimate,
    /// Monte Carlo horizon over length.
    pub efficiency: f64,
    pub efficiency_standard_error: f64,
    /// Quadrature efficiency; absent when the curve enters the unit ball.
    pub efficiency_quadrature: Option<f64>,
    pub efficiency_at_most_2: bool,
    pub tangent_feasible: bool,
    pub worst_line_distance: f64,
    pub inspection: InspectionReport,
    pub spirals: Option<SpiralSummary>,
}

/// Collects length, horizon, efficiency, feasibility and the spiral
/// structure of the unfolding. The efficiency test allows three standard
/// errors.
pub fn diagnose(curve: &Curve3, sampler: &DirectionSampler, inspect_tol: f64) -> Result<Diagnosis> {
    let length = curve.length();
    let mc = mc_horizon(curve, sampler)?;
    let efficiency = mc.value / length;
    let se = mc.standard_error / length;
    let feas = curve.validate_tangent_feasibility(1e-9);
    let quad = if curve.min_height() >= 1.0 {
        curve_efficiency(curve).ok()
    } else {
        None
    };
    let spirals = decompose_space_curve(curve, &SpiralTolerances::default())
        .ok()
        .map(|d| {
            let mut max_e = 0.0f64;
            let mut max_defect = 0.0f64;
            for p in &d.pieces {
                if let Ok(e) = spiral_efficiency(p) {
                    max_e = max_e.max(e);
                }
                max_defect = max_defect.max(p.orthogonal_start_defect);
            }
            SpiralSummary {
                pieces: d.pieces.len(),
                flat_set_length: d.flat_set_length,
                max_piece_efficiency: max_e,
                max_orthogonal_start_defect: max_defect,
            }
        });
    Ok(Diagnosis {
        length,
        length_over_4pi: length / (4.0 * PI),
        efficiency,
        efficiency_standard_error: se,
        efficiency_quadrature: quad,
        efficiency_at_most_2: efficiency <= 2.0 + 3.0 * se,
        tangent_feasible: feas.feasible,
        worst_line_distance: feas.worst_line_distance,
        inspection: check_inspects(curve, &DirectionSampler::fibonacci(sampler.count.min(100_000)), inspect_tol),
        spirals,
        mc_horizon: mc,
    })
}
