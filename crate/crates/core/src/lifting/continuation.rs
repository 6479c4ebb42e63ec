use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{quasi_lift, BasePath, LiftOptions, LiftStatus, QuasiLift};
use crate::error::LiftError;
use crate::geometry::{Point, Tangent};
use crate::manifold::MetricSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuationOptions {
    /// Bound `L` on the chart length of probe paths.
    pub length: f64,
    /// Number of probe paths.
    pub budget: usize,
    pub seed: u64,
    pub max_segments: usize,
    /// Keeps probe paths within this chart distance of the base point.
    pub region: Option<f64>,
    pub lift: LiftOptions,
}

impl ContinuationOptions {
    pub fn new(length: f64, budget: usize) -> ContinuationOptions {
        ContinuationOptions {
            length,
            budget,
            seed: 0x5eed,
            max_segments: 4,
            region: None,
            lift: LiftOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// Every probe lifted globally. Evidence, not proof.
    Pass,
    /// Some probe lift is inextensible in the domain.
    Fail,
    /// No inextensible lift, but some probe ran out of budget.
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeOutcome {
    pub index: usize,
    pub vertices: Vec<Vec<f64>>,
    pub status: String,
    pub chi_reached: f64,
    pub max_radius: f64,
    pub arclength: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuationReport {
    pub verdict: Verdict,
    pub length: f64,
    pub seed: u64,
    pub probes: Vec<ProbeOutcome>,
    /// Largest `‖ᾱ‖` over the globally lifted probes.
    pub max_lift_radius: f64,
    pub witness_index: Option<usize>,
    pub witness: Option<QuasiLift>,
    pub note: String,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn segment_ok(m: &MetricSpec, a: &[f64], b: &[f64], center: &[f64], region: Option<f64>) -> bool {
    let len = norm(&a.iter().zip(b).map(|(x, y)| x - y).collect::<Vec<_>>());
    let scale = m.feature_scale().min(1.0);
    let k = ((len / (0.25 * scale)).ceil() as usize).max(8);
    (0..=k).all(|i| {
        let th = i as f64 / k as f64;
        let x: Vec<f64> = a.iter().zip(b).map(|(p, q)| p + th * (q - p)).collect();
        let inside_region =
            region.is_none_or(|r| norm(&x.iter().zip(center).map(|(p, c)| p - c).collect::<Vec<_>>()) <= r);
        inside_region && m.margin(&x) > 0.0
    })
}

/// Random broken chart segments from `p`, each of length at most `L/4`.
fn sample_vertices(m: &MetricSpec, p: &[f64], opts: &ContinuationOptions, index: usize) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    rng.set_stream(index as u64);
    let n = p.len();
    let seg_max = opts.length / opts.max_segments.max(1) as f64;
    let segments = rng.gen_range(1..=opts.max_segments.max(1));
    let mut verts = vec![p.to_vec()];
    for _ in 0..segments {
        let last = verts.last().unwrap().clone();
        let mut placed = false;
        for _ in 0..256 {
            let dir: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let dn = norm(&dir);
            if !(0.1..=1.0).contains(&dn) {
                continue;
            }
            let len = rng.gen_range(0.05..=1.0) * seg_max;
            let cand: Vec<f64> = last.iter().zip(&dir).map(|(x, d)| x + len * d / dn).collect();
            if segment_ok(m, &last, &cand, p, opts.region) {
                verts.push(cand);
                placed = true;
                break;
            }
        }
        if !placed {
            break;
        }
    }
    verts
}

/// Probes the continuation property at `p`: quasi-lifts random broken paths
/// of chart length at most `L` from `v0 = 0` and reports whether all of
/// them lift globally, or the first probe whose lift is inextensible.
pub fn check_continuation(
    m: &MetricSpec,
    p: &Point,
    opts: &ContinuationOptions,
) -> Result<ContinuationReport, LiftError> {
    if !(opts.length > 0.0) {
        return Err(LiftError::InvalidOptions("length must be positive".into()));
    }
    if opts.budget == 0 || opts.max_segments == 0 {
        return Err(LiftError::InvalidOptions(
            "budget and max_segments must be positive".into(),
        ));
    }
    opts.lift.validate()?;
    if m.margin(p.coords()) <= 0.0 {
        return Err(LiftError::Flow("base point is outside the domain".into()));
    }
    let v0 = Tangent::zero(p);
    let results: Vec<(ProbeOutcome, Option<QuasiLift>)> = (0..opts.budget)
        .into_par_iter()
        .map(|index| {
            let vertices = sample_vertices(m, p.coords(), opts, index);
            let lift = if vertices.len() < 2 {
                Err(LiftError::InvalidPath("no admissible segment".into()))
            } else {
                BasePath::polyline(&vertices).and_then(|path| quasi_lift(m, &path, &v0, &opts.lift))
            };
            match lift {
                Ok(q) => (
                    ProbeOutcome {
                        index,
                        vertices,
                        status: q.status.label().into(),
                        chi_reached: q.chi_end(),
                        max_radius: q.max_radius(),
                        arclength: q.arclength,
                    },
                    Some(q),
                ),
                Err(e) => (
                    ProbeOutcome {
                        index,
                        vertices,
                        status: format!("error: {e}"),
                        chi_reached: 0.0,
                        max_radius: 0.0,
                        arclength: 0.0,
                    },
                    None,
                ),
            }
        })
        .collect();

    let mut probes = Vec::with_capacity(results.len());
    let mut witness = None;
    let mut undecided = false;
    let mut max_lift_radius: f64 = 0.0;
    for (outcome, lift) in results {
        match lift.as_ref().map(|q| &q.status) {
            Some(LiftStatus::Global) => max_lift_radius = max_lift_radius.max(outcome.max_radius),
            Some(LiftStatus::InextensibleInDomain { .. }) => {
                if witness.is_none() {
                    witness = Some((outcome.index, lift.clone().unwrap()));
                }
            }
            _ => undecided = true,
        }
        probes.push(outcome);
    }
    let verdict = if witness.is_some() {
        Verdict::Fail
    } else if undecided {
        Verdict::Inconclusive
    } else {
        Verdict::Pass
    };
    let note = match verdict {
        Verdict::Pass => "all probes lifted globally; sampled evidence, not a proof",
        Verdict::Fail => "a probe path has a lift that cannot be continued in the domain",
        Verdict::Inconclusive => "some probes exhausted their budget; no inextensible lift found",
    };
    let (witness_index, witness) = match witness {
        Some((i, q)) => (Some(i), Some(q)),
        None => (None, None),
    };
    Ok(ContinuationReport {
        verdict,
        length: opts.length,
        seed: opts.seed,
        probes,
        max_lift_radius,
        witness_index,
        witness,
        note: note.into(),
    })
}
