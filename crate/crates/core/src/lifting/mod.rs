//! Quasi-lifts `(ᾱ, χ)` of base paths through the exponential map.
//!
//! A quasi-lift satisfies `E(ᾱ(s)) = γ(χ(s))` with `χ` nondecreasing. Where
//! `dE` is invertible it is an ordinary lift advanced by a
//! predictor-corrector continuation. On the singular stratum the direction
//! comes from Tikhonov-regularized inversion down a schedule of `ξ`; when no
//! `ξ` reaches the path direction the lift pauses (`χ` frozen) and walks
//! along the kernel of `dE` until the path direction becomes reachable again.
//!
//! `ᾱ` is parametrized by Euclidean arclength in the chart of `T_pM`.

mod aztec;
mod continuation;
mod path;
mod regularize;

use serde::{Deserialize, Serialize};

use crate::error::LiftError;
use crate::flow::{flow_endpoint, flow_with_differential, FlowError, JacobiFrame, DEFAULT_TOL};
use crate::geometry::{Point, Tangent};
use crate::manifold::MetricSpec;

pub use aztec::aztec_normalize;
pub use continuation::{check_continuation, ContinuationOptions, ContinuationReport, ProbeOutcome, Verdict};
pub use path::{parse_seed_paths, BasePath, PathSample, SeedSample};
pub use regularize::{regularized_solve, RegularizedSolution};

/// Smallest ᾱ step before a stalled lift gives up.
const MIN_STEP: f64 = 1e-10;
/// Relative capture difference under which the two traverse directions tie.
const PROBE_TIE: f64 = 1e-3;
/// Bisection cap when locating the end of a pause.
const MAX_BISECT: usize = 48;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LiftOptions {
    /// Bound on `‖E(ᾱ) − γ(χ)‖` at every sample.
    pub lift_tol: f64,
    /// `σ_min` at or below which the frame counts as singular.
    pub sigma_threshold: f64,
    /// First entry of the schedule `ξ_k = ξ_0 2^{-k}`.
    pub xi0: f64,
    /// Nominal ᾱ step, and the fixed step of kernel traverses.
    pub step: f64,
    /// Largest ᾱ step in the regular regime.
    pub max_step: f64,
    /// Arclength budget; defaults to 1000 times the chart length of the path.
    pub max_arclength: Option<f64>,
    /// Longest single pause.
    pub max_pause: f64,
    pub newton_cap: usize,
    /// Integrator tolerance for `E` and `dE`.
    pub ode_tol: f64,
}

impl Default for LiftOptions {
    fn default() -> Self {
        LiftOptions {
            lift_tol: 1e-6,
            sigma_threshold: 1e-4,
            xi0: 1e-2,
            step: 1e-3,
            max_step: 0.05,
            max_arclength: None,
            max_pause: 25.0,
            newton_cap: 8,
            ode_tol: DEFAULT_TOL,
        }
    }
}

impl LiftOptions {
    pub fn validate(&self) -> Result<(), LiftError> {
        let positive = [
            ("lift_tol", self.lift_tol),
            ("sigma_threshold", self.sigma_threshold),
            ("xi0", self.xi0),
            ("step", self.step),
            ("max_step", self.max_step),
            ("max_pause", self.max_pause),
            ("ode_tol", self.ode_tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(LiftError::InvalidOptions(format!("{name} must be positive")));
            }
        }
        if let Some(l) = self.max_arclength {
            if !(l > 0.0) {
                return Err(LiftError::InvalidOptions("max_arclength must be positive".into()));
            }
        }
        if self.newton_cap == 0 {
            return Err(LiftError::InvalidOptions("newton_cap must be positive".into()));
        }
        if self.max_step < self.step {
            return Err(LiftError::InvalidOptions("max_step must be at least step".into()));
        }
        Ok(())
    }

    /// `ξ_0 2^{-k}` down to half the singular threshold.
    pub fn xi_schedule(&self) -> Vec<f64> {
        let floor = 0.5 * self.sigma_threshold;
        let mut out = vec![self.xi0];
        let mut xi = 0.5 * self.xi0;
        while xi >= floor {
            out.push(xi);
            xi *= 0.5;
        }
        out
    }
}

/// One sample of a quasi-lift.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiftSample {
    /// Cumulative ᾱ arclength.
    pub s: f64,
    pub chi: f64,
    pub alpha: Vec<f64>,
    pub sigma_min: f64,
    /// Regularization used by the step ending here (0 for plain Newton).
    pub xi: f64,
    /// `‖E(ᾱ) − γ(χ)‖`.
    pub residual: f64,
    /// The step ending here was a kernel traverse.
    pub pause: bool,
}

/// Evidence that a lift cannot be continued inside `𝒟`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub chi: f64,
    pub last_alpha: Vec<f64>,
    pub last_point: Vec<f64>,
    pub attempted_alpha: Vec<f64>,
    pub exit: FlowError,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LiftStatus {
    Global,
    InextensibleInDomain { chi_reached: f64, witness: Witness },
    BudgetExhausted { chi_reached: f64, reason: String },
}

impl LiftStatus {
    pub fn label(&self) -> &'static str {
        match self {
            LiftStatus::Global => "global",
            LiftStatus::InextensibleInDomain { .. } => "inextensible_in_domain",
            LiftStatus::BudgetExhausted { .. } => "budget_exhausted",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LiftStats {
    pub frames: usize,
    pub exp_evals: usize,
    pub rejected_steps: usize,
    pub pauses: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuasiLift {
    pub base_point: Vec<f64>,
    pub samples: Vec<LiftSample>,
    pub status: LiftStatus,
    /// Total ᾱ arclength.
    pub arclength: f64,
    pub stats: LiftStats,
}

impl QuasiLift {
    pub fn is_global(&self) -> bool {
        matches!(self.status, LiftStatus::Global)
    }

    pub fn chi_end(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.chi)
    }

    pub fn alpha_end(&self) -> &[f64] {
        &self.samples.last().expect("lifts have a first sample").alpha
    }

    pub fn end_tangent(&self) -> Tangent {
        Tangent::new(&Point(self.base_point.clone()), self.alpha_end().to_vec())
    }

    /// Index ranges `[first, last]` of maximal runs of pause samples.
    pub fn plateaus(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        let mut start = None;
        for (i, s) in self.samples.iter().enumerate() {
            match (s.pause, start) {
                (true, None) => start = Some(i),
                (false, Some(a)) => {
                    out.push((a, i - 1));
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(a) = start {
            out.push((a, self.samples.len() - 1));
        }
        out
    }

    /// Largest chart norm of ᾱ.
    pub fn max_radius(&self) -> f64 {
        self.samples.iter().map(|s| norm(&s.alpha)).fold(0.0, f64::max)
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn axpy(a: &[f64], k: f64, d: &[f64]) -> Vec<f64> {
    a.iter().zip(d).map(|(x, y)| x + k * y).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Current lift state with the frame at `v`.
#[derive(Clone)]
struct Cur {
    v: Vec<f64>,
    x: Vec<f64>,
    chi: f64,
    frame: JacobiFrame,
    residual: f64,
}

struct Fix {
    v: Vec<f64>,
    x: Vec<f64>,
    residual: f64,
    iters: usize,
}

enum Fail {
    Exit { attempted: Vec<f64>, err: FlowError },
    Stalled,
}

struct Lifter<'a> {
    m: &'a MetricSpec,
    p: Vec<f64>,
    path: &'a BasePath,
    opts: &'a LiftOptions,
    schedule: Vec<f64>,
    stats: LiftStats,
    samples: Vec<LiftSample>,
    s: f64,
    budget: f64,
}

impl<'a> Lifter<'a> {
    fn exp(&mut self, v: &[f64]) -> Result<Vec<f64>, FlowError> {
        self.stats.exp_evals += 1;
        flow_endpoint(self.m, &self.p, v, self.opts.ode_tol)
    }

    fn frame(&mut self, v: &[f64]) -> Result<(Vec<f64>, JacobiFrame), FlowError> {
        self.stats.frames += 1;
        let (x, jac) = flow_with_differential(self.m, &self.p, v, self.opts.ode_tol)?;
        Ok((x.clone(), JacobiFrame::new(jac, Point(x))))
    }

    fn solve(frame: &JacobiFrame, b: &[f64], mu: f64) -> Vec<f64> {
        regularized_solve(frame, b, mu).w
    }

    /// Frozen-Jacobian Newton (`mu = 0`) or Levenberg–Marquardt iteration
    /// for `E(v) = target`.
    fn correct(&mut self, v0: Vec<f64>, target: &[f64], frame: &JacobiFrame, mu: f64) -> Result<Fix, Fail> {
        let goal = (1e-3 * self.opts.lift_tol).max(1e-13);
        let accept = 0.5 * self.opts.lift_tol;
        let mut v = v0;
        let mut best: Option<Fix> = None;
        let mut prev = f64::INFINITY;
        for it in 0..=self.opts.newton_cap {
            let x = self.exp(&v).map_err(|err| Fail::Exit {
                attempted: v.clone(),
                err,
            })?;
            let r = sub(&x, target);
            let res = norm(&r);
            if best.as_ref().is_none_or(|b| res < b.residual) {
                best = Some(Fix {
                    v: v.clone(),
                    x,
                    residual: res,
                    iters: it,
                });
            }
            if res <= goal || it == self.opts.newton_cap || (it >= 2 && res > 2.0 * prev) {
                break;
            }
            prev = res;
            let d = Self::solve(frame, &r, mu);
            v = sub(&v, &d);
        }
        match best {
            Some(b) if b.residual <= accept => Ok(b),
            _ => Err(Fail::Stalled),
        }
    }

    /// Corrector with one re-assembly of the frame at the starting guess.
    fn correct_robust(&mut self, guess: Vec<f64>, target: &[f64], frame: &JacobiFrame, mu: f64) -> Result<Fix, Fail> {
        match self.correct(guess.clone(), target, frame, mu) {
            Err(Fail::Stalled) => {
                let (_, fresh) = self.frame(&guess).map_err(|err| Fail::Exit {
                    attempted: guess.clone(),
                    err,
                })?;
                let mu2 = if fresh.sigma_min() > self.opts.sigma_threshold {
                    0.0
                } else {
                    mu.max(self.opts.sigma_threshold)
                };
                self.correct(guess, target, &fresh, mu2)
            }
            r => r,
        }
    }

    fn finish(&mut self, fix: Fix, chi: f64) -> Result<Cur, Fail> {
        let (_, frame) = self.frame(&fix.v).map_err(|err| Fail::Exit {
            attempted: fix.v.clone(),
            err,
        })?;
        Ok(Cur {
            v: fix.v,
            x: fix.x,
            chi,
            frame,
            residual: fix.residual,
        })
    }

    /// First `ξ` of the schedule whose regularized solve reaches `ghat`.
    fn accept_xi(&self, frame: &JacobiFrame, ghat: &[f64]) -> Option<(f64, Vec<f64>)> {
        self.schedule.iter().find_map(|&xi| {
            let sol = regularized_solve(frame, ghat, xi);
            (sol.residual <= self.opts.lift_tol).then_some((xi, sol.w))
        })
    }

    /// Part of `ghat` outside the range of the nonsingular directions.
    fn unreachable(&self, frame: &JacobiFrame, ghat: &[f64]) -> Vec<f64> {
        let b = nalgebra::DVector::from_column_slice(ghat);
        frame
            .unreachable_part(&b, self.opts.sigma_threshold)
            .iter()
            .copied()
            .collect()
    }

    fn push(&mut self, cur: &Cur, xi: f64, pause: bool) {
        self.samples.push(LiftSample {
            s: self.s,
            chi: cur.chi,
            alpha: cur.v.clone(),
            sigma_min: cur.frame.sigma_min(),
            xi,
            residual: cur.residual,
            pause,
        });
    }

    /// Moves the arclength counter; refuses steps that overrun the budget.
    fn spend(&mut self, from: &[f64], to: &[f64]) -> Result<f64, LiftStatus> {
        let ds = norm(&sub(to, from));
        if self.s + ds > self.budget {
            return Err(LiftStatus::BudgetExhausted {
                chi_reached: self.samples.last().map_or(0.0, |s| s.chi),
                reason: "arclength budget exhausted".into(),
            });
        }
        self.s += ds;
        Ok(ds)
    }

    /// Advancing step with direction `dir` (`E`-preimage of `γ'`).
    fn advance(&mut self, cur: &Cur, dir: &[f64], xi: f64, h: f64) -> Result<(Cur, bool), Fail> {
        let wn = norm(dir);
        if !(wn > 0.0 && wn.is_finite()) {
            return Err(Fail::Stalled);
        }
        let nb = self.path.next_break(cur.chi);
        let mut chi_t = cur.chi + h / wn;
        if chi_t >= nb - 1e-13 {
            chi_t = nb;
        }
        let target = self.path.point(chi_t);
        let guess = sub(&cur.v, &Self::solve(&cur.frame, &sub(&cur.x, &target), xi));
        let fix = self.correct_robust(guess, &target, &cur.frame, xi)?;
        let quick = fix.iters <= 3;
        Ok((self.finish(fix, chi_t)?, quick))
    }

    /// Kernel step of length `len` along `d` with `χ` held fixed.
    fn traverse(&mut self, cur: &Cur, d: &[f64], len: f64) -> Result<Cur, Fail> {
        let target = self.path.point(cur.chi);
        let guess = axpy(&cur.v, len, d);
        let fix = self.correct_robust(guess, &target, &cur.frame, self.opts.sigma_threshold)?;
        self.finish(fix, cur.chi)
    }

    fn fail_status(&self, cur: &Cur, fail: Fail, what: &str) -> LiftStatus {
        match fail {
            Fail::Exit { attempted, err } => LiftStatus::InextensibleInDomain {
                chi_reached: cur.chi,
                witness: Witness {
                    chi: cur.chi,
                    last_alpha: cur.v.clone(),
                    last_point: cur.x.clone(),
                    attempted_alpha: attempted,
                    exit: err,
                },
            },
            Fail::Stalled => LiftStatus::BudgetExhausted {
                chi_reached: cur.chi,
                reason: what.into(),
            },
        }
    }

    /// Walks the kernel at fixed `χ` until the path direction is reachable
    /// or the frame recovers.
    fn pause(&mut self, start: Cur, ghat: &[f64], spent: &mut f64) -> Result<Cur, LiftStatus> {
        self.stats.pauses += 1;
        let step = self.opts.step;
        let d0: Vec<f64> = start.frame.kernel_direction().iter().copied().collect();
        let plus = self.traverse(&start, &d0, step);
        let minus = self.traverse(&start, &d0, -step);
        let capture = |lf: &Self, c: &Cur| 1.0 - norm(&lf.unreachable(&c.frame, ghat)).min(1.0);
        let (mut next, mut dir) = match (plus, minus) {
            (Ok(a), Ok(b)) => {
                let (ca, cb) = (capture(self, &a), capture(self, &b));
                if cb > ca + PROBE_TIE * ca.max(cb) {
                    (b, d0.iter().map(|x| -x).collect::<Vec<f64>>())
                } else {
                    (a, d0.clone())
                }
            }
            (Ok(a), Err(_)) => (a, d0.clone()),
            (Err(_), Ok(b)) => (b, d0.iter().map(|x| -x).collect()),
            (Err(e), Err(_)) => return Err(self.fail_status(&start, e, "kernel traverse stalled")),
        };
        let mut cur = start;
        loop {
            let r_cur = self.unreachable(&cur.frame, ghat);
            let r_next = self.unreachable(&next.frame, ghat);
            if dot(&r_cur, &r_next) < 0.0 {
                let hit = self.bisect(&cur, &dir, r_cur, ghat);
                let ds = self.spend(&cur.v, &hit.v)?;
                *spent += ds;
                self.push(&hit, self.opts.sigma_threshold, true);
                return Ok(hit);
            }
            let ds = self.spend(&cur.v, &next.v)?;
            *spent += ds;
            self.push(&next, self.opts.sigma_threshold, true);
            cur = next;
            if cur.frame.sigma_min() > self.opts.sigma_threshold || self.accept_xi(&cur.frame, ghat).is_some() {
                return Ok(cur);
            }
            if *spent > self.opts.max_pause {
                return Err(LiftStatus::BudgetExhausted {
                    chi_reached: cur.chi,
                    reason: "pause arclength cap reached".into(),
                });
            }
            let mut d: Vec<f64> = cur.frame.kernel_direction().iter().copied().collect();
            if dot(&d, &dir) < 0.0 {
                d.iter_mut().for_each(|x| *x = -*x);
            }
            dir = d;
            next = match self.traverse(&cur, &dir, step) {
                Ok(n) => n,
                Err(e) => return Err(self.fail_status(&cur, e, "kernel traverse stalled")),
            };
        }
    }

    /// Locates the point between `a` and one traverse step along `dir`
    /// where the unreachable part of the path direction vanishes.
    fn bisect(&mut self, a: &Cur, dir: &[f64], r_a: Vec<f64>, ghat: &[f64]) -> Cur {
        let (mut lo, mut hi) = (0.0, self.opts.step);
        let mut r_lo = r_a;
        let mut best: Option<(f64, Cur)> = None;
        for _ in 0..MAX_BISECT {
            let mid = 0.5 * (lo + hi);
            let Ok(c) = self.traverse(a, dir, mid) else {
                hi = mid;
                continue;
            };
            let r = self.unreachable(&c.frame, ghat);
            let rn = norm(&r);
            if best.as_ref().is_none_or(|(b, _)| rn < *b) {
                best = Some((rn, c.clone()));
            }
            if self.accept_xi(&c.frame, ghat).is_some() {
                return c;
            }
            if dot(&r_lo, &r) < 0.0 {
                hi = mid;
            } else {
                lo = mid;
                r_lo = r;
            }
        }
        best.map(|(_, c)| c).unwrap_or_else(|| a.clone())
    }

    fn run(&mut self, mut cur: Cur) -> LiftStatus {
        self.push(&cur, 0.0, false);
        let mut h = self.opts.step;
        let mut pause_spent = 0.0;
        loop {
            if cur.chi >= 1.0 {
                return LiftStatus::Global;
            }
            let g = self.path.velocity(cur.chi);
            let gn = norm(&g);
            let (xi, dir) = if cur.frame.sigma_min() > self.opts.sigma_threshold {
                (0.0, Self::solve(&cur.frame, &g, 0.0))
            } else {
                let ghat: Vec<f64> = g.iter().map(|x| x / gn).collect();
                match self.accept_xi(&cur.frame, &ghat) {
                    Some((xi, w)) => (xi, w.iter().map(|x| x * gn).collect()),
                    None => {
                        match self.pause(cur.clone(), &ghat, &mut pause_spent) {
                            Ok(next) => cur = next,
                            Err(status) => return status,
                        }
                        h = self.opts.step;
                        continue;
                    }
                }
            };
            match self.advance(&cur, &dir, xi, h) {
                Ok((next, quick)) => {
                    if let Err(status) = self.spend(&cur.v, &next.v) {
                        return status;
                    }
                    self.push(&next, xi, false);
                    cur = next;
                    pause_spent = 0.0;
                    if quick {
                        h = (1.5 * h).min(self.opts.max_step);
                    }
                }
                Err(fail) => {
                    self.stats.rejected_steps += 1;
                    h *= 0.5;
                    if h < MIN_STEP {
                        return self.fail_status(&cur, fail, "step size underflow");
                    }
                }
            }
        }
    }
}

/// Quasi-lift of `path` through `E_p` starting from the seed `v0 ∈ T_pM`
/// (`p` is the base point of `v0`), with `E(v0) = γ(0)`.
pub fn quasi_lift(m: &MetricSpec, path: &BasePath, v0: &Tangent, opts: &LiftOptions) -> Result<QuasiLift, LiftError> {
    opts.validate()?;
    let n = m.dim();
    if path.dim() != n || v0.components.len() != n || v0.base.dim() != n {
        return Err(LiftError::InvalidPath(format!("expected dimension {n}")));
    }
    if m.margin(v0.base.coords()) <= 0.0 {
        return Err(LiftError::Flow("base point is outside the domain".into()));
    }
    let budget = opts.max_arclength.unwrap_or(1e3 * path.aux_length());
    let mut lf = Lifter {
        m,
        p: v0.base.0.clone(),
        path,
        opts,
        schedule: opts.xi_schedule(),
        stats: LiftStats::default(),
        samples: Vec::new(),
        s: 0.0,
        budget,
    };
    let (x0, frame) = lf.frame(&v0.components).map_err(|e| LiftError::Flow(e.to_string()))?;
    let residual = norm(&sub(&x0, &path.start()));
    if residual > opts.lift_tol {
        return Err(LiftError::SeedMismatch { residual });
    }
    let cur = Cur {
        v: v0.components.clone(),
        x: x0,
        chi: 0.0,
        frame,
        residual,
    };
    let status = lf.run(cur);
    Ok(QuasiLift {
        base_point: lf.p,
        arclength: lf.s,
        samples: lf.samples,
        status,
        stats: lf.stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_halves_to_the_floor() {
        let o = LiftOptions::default();
        let s = o.xi_schedule();
        assert_eq!(s[0], 1e-2);
        assert!(s.windows(2).all(|w| w[1] == 0.5 * w[0]));
        assert!(*s.last().unwrap() >= 5e-5 && s.last().unwrap() * 0.5 < 5e-5);
    }

    #[test]
    fn invalid_options() {
        let o = LiftOptions {
            lift_tol: 0.0,
            ..LiftOptions::default()
        };
        assert!(o.validate().is_err());
    }

    #[test]
    fn euclidean_lift_is_the_path() {
        let m = MetricSpec::builtin("euclid").unwrap();
        let path = BasePath::polyline(&[vec![0.0, 0.0], vec![3.0, 4.0]]).unwrap();
        let p = Point::new(vec![0.0, 0.0]);
        let q = quasi_lift(&m, &path, &Tangent::zero(&p), &LiftOptions::default()).unwrap();
        assert!(q.is_global());
        assert_eq!(q.chi_end(), 1.0);
        assert!(q.plateaus().is_empty());
        for s in &q.samples {
            assert!((s.alpha[0] - 3.0 * s.chi).abs() < 1e-12 && (s.alpha[1] - 4.0 * s.chi).abs() < 1e-12);
            assert!((s.s - 5.0 * s.chi).abs() < 1e-12);
        }
    }

    #[test]
    fn seed_mismatch() {
        let m = MetricSpec::builtin("euclid").unwrap();
        let path = BasePath::polyline(&[vec![1.0, 0.0], vec![3.0, 4.0]]).unwrap();
        let p = Point::new(vec![0.0, 0.0]);
        let r = quasi_lift(&m, &path, &Tangent::zero(&p), &LiftOptions::default());
        assert!(matches!(r, Err(LiftError::SeedMismatch { .. })));
    }
}
