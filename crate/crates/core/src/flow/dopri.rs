//! Dormand–Prince 5(4) with PI step control, the native quartic dense
//! output and domain-exit event location.

use crate::error::GeometryError;

const A21: f64 = 0.2;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFE: f64 = 0.9;
const BETA: f64 = 0.04;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
/// Resolution of domain-exit location, in the flow parameter.
pub const EVENT_RESOLUTION: f64 = 1e-10;

/// A first-order system `z' = f(z)` with a domain margin on its state.
pub trait OdeSystem {
    fn len(&self) -> usize;
    fn rhs(&self, z: &[f64], out: &mut [f64]) -> Result<(), GeometryError>;
    /// Positive strictly inside the admissible region.
    fn margin(&self, z: &[f64]) -> f64;
    /// Displacement of one step, used to pick how densely a step is probed
    /// for domain exits.
    fn displacement(&self, a: &[f64], b: &[f64]) -> f64;
    fn feature_scale(&self) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Termination {
    Completed,
    LeftDomain { t_exit: f64 },
    StepFailure { t: f64 },
}

/// One accepted step's continuous extension.
#[derive(Debug, Clone)]
pub struct DenseStep {
    pub t0: f64,
    pub h: f64,
    cont: [Vec<f64>; 5],
}

impl DenseStep {
    pub fn eval(&self, t: f64, out: &mut [f64]) {
        let s = if self.h == 0.0 { 0.0 } else { (t - self.t0) / self.h };
        let s1 = 1.0 - s;
        let [c0, c1, c2, c3, c4] = &self.cont;
        for i in 0..out.len() {
            out[i] = c0[i] + s * (c1[i] + s1 * (c2[i] + s * (c3[i] + s1 * c4[i])));
        }
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub t_end: f64,
    pub z_end: Vec<f64>,
    pub termination: Termination,
    pub steps: Vec<DenseStep>,
    pub accepted: usize,
    pub rejected: usize,
}

impl Solution {
    /// Dense-output state at `t` within the integrated interval.
    pub fn state_at(&self, t: f64) -> Option<Vec<f64>> {
        let first = self.steps.first()?;
        if t < first.t0 - 1e-14 || t > self.t_end + 1e-14 {
            return None;
        }
        let idx = self.steps.partition_point(|s| s.t0 + s.h < t).min(self.steps.len() - 1);
        let mut out = vec![0.0; self.z_end.len()];
        self.steps[idx].eval(t, &mut out);
        Some(out)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Options {
    pub tol: f64,
    pub keep_dense: bool,
    pub max_steps: usize,
}

impl Options {
    pub fn new(tol: f64) -> Options {
        Options {
            tol,
            keep_dense: false,
            max_steps: 200_000,
        }
    }
}

fn error_norm(z0: &[f64], z1: &[f64], e: &[f64], tol: f64) -> f64 {
    let n = z0.len();
    let mut s = 0.0;
    for i in 0..n {
        let sk = tol + tol * z0[i].abs().max(z1[i].abs());
        let r = e[i] / sk;
        s += r * r;
    }
    (s / n as f64).sqrt()
}

fn initial_step<S: OdeSystem>(sys: &S, z0: &[f64], f0: &[f64], t_end: f64, tol: f64) -> f64 {
    let n = z0.len();
    let mut d0 = 0.0;
    let mut d1 = 0.0;
    for i in 0..n {
        let sk = tol + tol * z0[i].abs();
        d0 += (z0[i] / sk).powi(2);
        d1 += (f0[i] / sk).powi(2);
    }
    let (d0, d1) = ((d0 / n as f64).sqrt(), (d1 / n as f64).sqrt());
    let mut h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h = h.min(t_end);
    let z1: Vec<f64> = z0.iter().zip(f0).map(|(z, f)| z + h * f).collect();
    let mut f1 = vec![0.0; n];
    if sys.rhs(&z1, &mut f1).is_err() {
        return h * 0.1;
    }
    let mut d2 = 0.0;
    for i in 0..n {
        let sk = tol + tol * z0[i].abs();
        d2 += ((f1[i] - f0[i]) / sk).powi(2);
    }
    let d2 = (d2 / n as f64).sqrt() / h;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h).min(h1).min(t_end)
}

/// Integrates `sys` from `z0` over `[0, t_end]`.
pub fn integrate<S: OdeSystem>(sys: &S, z0: &[f64], t_end: f64, opts: Options) -> Solution {
    let n = sys.len();
    debug_assert_eq!(z0.len(), n);
    let tol = opts.tol;
    let mut sol = Solution {
        t_end: 0.0,
        z_end: z0.to_vec(),
        termination: Termination::Completed,
        steps: Vec::new(),
        accepted: 0,
        rejected: 0,
    };
    if sys.margin(z0) <= 0.0 {
        sol.termination = Termination::LeftDomain { t_exit: 0.0 };
        return sol;
    }
    if t_end == 0.0 {
        return sol;
    }
    let mut k1 = vec![0.0; n];
    if sys.rhs(z0, &mut k1).is_err() {
        sol.termination = Termination::StepFailure { t: 0.0 };
        return sol;
    }
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut k5 = vec![0.0; n];
    let mut k6 = vec![0.0; n];
    let mut k7 = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    let mut z1 = vec![0.0; n];
    let mut err = vec![0.0; n];
    let mut probe = vec![0.0; n];

    let mut z = z0.to_vec();
    let mut t = 0.0;
    let mut h = initial_step(sys, &z, &k1, t_end, tol);
    let h_min = 1e-14 * t_end.max(1.0);
    let mut facold: f64 = 1e-4;
    let mut last_rejected = false;
    let mut steps = 0usize;

    loop {
        if steps >= opts.max_steps {
            sol.termination = Termination::StepFailure { t };
            break;
        }
        steps += 1;
        let last = t + h >= t_end - 1e-15 * t_end.abs();
        if last {
            h = t_end - t;
        }
        macro_rules! stage {
            ($out:expr, $($a:expr, $k:expr),+) => {{
                for i in 0..n {
                    tmp[i] = z[i] + h * (0.0 $(+ $a * $k[i])+);
                }
                sys.rhs(&tmp, &mut $out)
            }};
        }
        let ok = stage!(k2, A21, k1).is_ok()
            && stage!(k3, A31, k1, A32, k2).is_ok()
            && stage!(k4, A41, k1, A42, k2, A43, k3).is_ok()
            && stage!(k5, A51, k1, A52, k2, A53, k3, A54, k4).is_ok()
            && stage!(k6, A61, k1, A62, k2, A63, k3, A64, k4, A65, k5).is_ok()
            && {
                for i in 0..n {
                    z1[i] = z[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
                }
                sys.rhs(&z1, &mut k7).is_ok()
            };
        if !ok {
            sol.rejected += 1;
            h *= 0.25;
            last_rejected = true;
            if h < h_min {
                sol.termination = Termination::StepFailure { t };
                break;
            }
            continue;
        }
        for i in 0..n {
            err[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        }
        let e = error_norm(&z, &z1, &err, tol);
        if !e.is_finite() {
            sol.rejected += 1;
            h *= 0.25;
            last_rejected = true;
            if h < h_min {
                sol.termination = Termination::StepFailure { t };
                break;
            }
            continue;
        }
        let expo1 = 0.2 - BETA * 0.75;
        let fac11 = e.powf(expo1);
        if e > 1.0 {
            sol.rejected += 1;
            h /= (1.0 / FAC_MIN).min(fac11 / SAFE);
            last_rejected = true;
            if h < h_min {
                sol.termination = Termination::StepFailure { t };
                break;
            }
            continue;
        }

        // Accepted: build the continuous extension.
        let mut cont: [Vec<f64>; 5] = Default::default();
        cont[0] = z.clone();
        cont[1] = (0..n).map(|i| z1[i] - z[i]).collect();
        cont[2] = (0..n).map(|i| h * k1[i] - cont[1][i]).collect();
        cont[3] = (0..n).map(|i| cont[1][i] - h * k7[i] - cont[2][i]).collect();
        cont[4] = (0..n)
            .map(|i| h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]))
            .collect();
        let step = DenseStep { t0: t, h, cont };

        // Domain exit: probe the dense output densely enough to see the
        // thinnest excluded feature, then bisect.
        let disp = sys.displacement(&z, &z1);
        let scale = sys.feature_scale();
        let nsub = if scale.is_finite() {
            ((disp / (0.25 * scale)).ceil() as usize).clamp(1, 4096)
        } else {
            1
        };
        let mut exit = None;
        let mut prev = 0.0;
        for k in 1..=nsub {
            let th = k as f64 / nsub as f64;
            step.eval(t + th * h, &mut probe);
            if sys.margin(&probe) <= 0.0 {
                let (mut lo, mut hi) = (prev, th);
                while (hi - lo) * h > EVENT_RESOLUTION {
                    let mid = 0.5 * (lo + hi);
                    step.eval(t + mid * h, &mut probe);
                    if sys.margin(&probe) > 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                exit = Some((lo, hi));
                break;
            }
            prev = th;
        }
        if let Some((lo, hi)) = exit {
            let t_in = t + lo * h;
            step.eval(t_in, &mut probe);
            sol.z_end = probe.clone();
            sol.t_end = t_in;
            sol.termination = Termination::LeftDomain {
                t_exit: t + 0.5 * (lo + hi) * h,
            };
            if opts.keep_dense {
                sol.steps.push(step);
            }
            sol.accepted += 1;
            break;
        }

        sol.accepted += 1;
        if opts.keep_dense {
            sol.steps.push(step);
        }
        let mut fac = fac11 / facold.powf(BETA);
        facold = e.max(1e-4);
        fac = (1.0 / FAC_MAX).max((1.0 / FAC_MIN).min(fac / SAFE));
        let mut h_new = h / fac;
        if last_rejected {
            h_new = h_new.min(h);
        }
        last_rejected = false;
        std::mem::swap(&mut k1, &mut k7);
        std::mem::swap(&mut z, &mut z1);
        t = if last { t_end } else { t + h };
        if last {
            sol.t_end = t_end;
            sol.z_end = z.clone();
            break;
        }
        h = h_new;
    }
    if let Termination::StepFailure { t } = sol.termination {
        sol.t_end = t;
        sol.z_end = z;
    }
    sol
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Harmonic oscillator in (q, p) with an optional wall at q = wall.
    struct Oscillator {
        wall: f64,
    }

    impl OdeSystem for Oscillator {
        fn len(&self) -> usize {
            2
        }
        fn rhs(&self, z: &[f64], out: &mut [f64]) -> Result<(), GeometryError> {
            out[0] = z[1];
            out[1] = -z[0];
            Ok(())
        }
        fn margin(&self, z: &[f64]) -> f64 {
            self.wall - z[0]
        }
        fn displacement(&self, a: &[f64], b: &[f64]) -> f64 {
            (a[0] - b[0]).abs()
        }
        fn feature_scale(&self) -> f64 {
            f64::INFINITY
        }
    }

    #[test]
    fn oscillator_accuracy_and_dense_output() {
        let sys = Oscillator { wall: 10.0 };
        let mut o = Options::new(1e-10);
        o.keep_dense = true;
        let sol = integrate(&sys, &[1.0, 0.0], 3.0, o);
        assert_eq!(sol.termination, Termination::Completed);
        assert!((sol.z_end[0] - 3.0f64.cos()).abs() < 1e-9);
        assert!((sol.z_end[1] + 3.0f64.sin()).abs() < 1e-9);
        for k in 0..=30 {
            let t = 0.1 * k as f64;
            let z = sol.state_at(t).unwrap();
            assert!((z[0] - t.cos()).abs() < 2e-9, "t={t} err={}", z[0] - t.cos());
        }
    }

    #[test]
    fn exit_is_located() {
        // q = cos t reaches 0.5 at t = pi/3; wall at q = 0.5 approached from
        // below means starting at q = -1 (t0 = pi): q(t) = -cos t.
        let sys = Oscillator { wall: 0.5 };
        let sol = integrate(&sys, &[-1.0, 0.0], 5.0, Options::new(1e-10));
        match sol.termination {
            Termination::LeftDomain { t_exit } => {
                let exact = std::f64::consts::PI - std::f64::consts::FRAC_PI_3;
                assert!((t_exit - exact).abs() < 1e-9, "{t_exit} vs {exact}");
            }
            other => panic!("{other:?}"),
        }
    }
}
