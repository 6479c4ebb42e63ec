use super::QuasiLift;

/// Reparametrizes a quasi-lift so that `χ` has slope 1 on advancing
/// segments and 0 on pauses: advancing segments are measured by their
/// `χ`-rise, pauses by their ᾱ arclength. Samples are otherwise unchanged.
pub fn aztec_normalize(q: &QuasiLift) -> QuasiLift {
    let mut out = q.clone();
    let mut s = 0.0;
    for j in 0..q.samples.len() {
        if j > 0 {
            let (a, b) = (&q.samples[j - 1], &q.samples[j]);
            s += if b.pause { b.s - a.s } else { b.chi - a.chi };
        }
        out.samples[j].s = s;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lifting::{LiftSample, LiftStats, LiftStatus};

    fn sample(s: f64, chi: f64, pause: bool) -> LiftSample {
        LiftSample {
            s,
            chi,
            alpha: vec![s, 0.0],
            sigma_min: 1.0,
            xi: 0.0,
            residual: 0.0,
            pause,
        }
    }

    fn lift(samples: Vec<LiftSample>) -> QuasiLift {
        QuasiLift {
            base_point: vec![0.0, 0.0],
            samples,
            status: LiftStatus::Global,
            arclength: 0.0,
            stats: LiftStats::default(),
        }
    }

    #[test]
    fn affine_chi_becomes_identity() {
        let q = lift((0..=4).map(|i| sample(3.0 * i as f64, i as f64 / 4.0, false)).collect());
        let a = aztec_normalize(&q);
        for s in &a.samples {
            assert!((s.s - s.chi).abs() < 1e-15);
        }
    }

    #[test]
    fn plateau_keeps_its_length() {
        let q = lift(vec![
            sample(0.0, 0.0, false),
            sample(2.0, 0.5, false),
            sample(2.7, 0.5, true),
            sample(3.4, 0.5, true),
            sample(5.0, 1.0, false),
        ]);
        let a = aztec_normalize(&q);
        let want = [0.0, 0.5, 1.2, 1.9, 2.4];
        for (x, w) in a.samples.iter().zip(want) {
            assert!((x.s - w).abs() < 1e-12);
        }
        assert_eq!(a.samples[2].alpha, q.samples[2].alpha);
    }
}
