//! Closed-form SINR expressions, empirical SINR measurement and the
//! Monte Carlo validators for the sub-block statistics.

pub mod empirical;
pub mod stats;
mod theory;

pub use empirical::{empirical_sinr, empirical_sinr_at, SignalEstimate, SinrMeasurement, SinrOptions};
pub use theory::*;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rdm::RdmKind;
    use crate::sensing_vcp::SegmentationParams;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const I: usize = 91_520;

    fn table2_seg() -> SegmentationParams {
        SegmentationParams::new(512, 128, 150)
    }

    fn vcp_inputs(gamma0: f64, seg: SegmentationParams) -> SinrInputs {
        SinrInputs {
            gamma0,
            sigma_p2: 1.0,
            epsilon: None,
            layout: Layout::Vcp { total: I, seg },
        }
    }

    fn cos_inputs(gamma0: f64) -> SinrInputs {
        SinrInputs {
            gamma0,
            sigma_p2: 1.0,
            epsilon: None,
            layout: Layout::Cos { m: 512, n: 143, q: 128 },
        }
    }

    #[test]
    fn test_b_forms_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let eps: f64 = rng.gen_range(1e-7..0.9);
            assert!((b_penalty(eps).unwrap() - b_penalty_expanded(eps).unwrap()).abs() < 1e-12);
        }
        assert!(b_penalty(0.0).is_err());
        assert!(b_penalty(1.0).is_err());
    }

    #[test]
    fn test_b_vanishes_where_log_argument_is_one() {
        // 2(1-e) = E sqrt(e(2-e)), solved by bisection.
        let f = |e: f64| 2.0 * (1.0 - e) - std::f64::consts::E * (e * (2.0 - e)).sqrt();
        let (mut lo, mut hi) = (1e-6, 0.9);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!(b_penalty(0.5 * (lo + hi)).unwrap().abs() < 1e-10);
    }

    #[test]
    fn test_b_at_full_block() {
        // 2(ln(2(I-1)/sqrt(2I-1)) - 1) evaluated in closed form.
        let i = I as f64;
        let oracle = 2.0 * ((2.0 * (i - 1.0) / (2.0 * i - 1.0).sqrt()).ln() - 1.0);
        let b = b_penalty(1.0 / i).unwrap();
        assert!((b - oracle).abs() < 1e-10);
        assert!((b - 10.117).abs() < 1e-3);
    }

    #[test]
    fn test_a_critical_property() {
        let a = a_critical(1.0, I).unwrap();
        let p = 1.0 - (-1.0 / (a * a)).exp();
        assert!((p * I as f64 - 1.0).abs() < 1e-9);
        assert!((a - (I as f64 - 0.5).sqrt()).abs() < 1e-3);
        assert!((a - 302.5).abs() < 0.05);
        let a2 = a_critical(4.0, I).unwrap();
        assert!((a2 - a / 2.0).abs() < 1e-9);
        assert!(a_critical(1.0, 1).is_err());
    }

    #[test]
    fn test_a_critical_monte_carlo() {
        let total = 1000;
        let a = a_critical(1.0, total).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let draws = 2_000_000;
        let hits = (0..draws)
            .filter(|_| {
                let u: f64 = rng.gen();
                // |S|^2 ~ Exp(1)
                let s2 = -(1.0 - u).ln();
                a * a * s2 < 1.0
            })
            .count();
        let ratio = hits as f64 / draws as f64 * total as f64;
        assert!((0.5..=2.0).contains(&ratio), "ratio {ratio}");
        assert!((ratio - 1.0).abs() < 0.1);
    }

    #[test]
    fn test_ratio_asymptotes() {
        let seg = table2_seg();
        let lo = vcp_inputs(1e-4, seg);
        let r = sinr_ratio_vcp(&lo).unwrap() / sinr_ratio_vcp_low(&lo).unwrap();
        assert!((r - 1.0).abs() < 0.01, "low {r}");
        let hi = vcp_inputs(1e4, seg);
        let r = sinr_ratio_vcp(&hi).unwrap() / sinr_ratio_vcp_high(&hi).unwrap();
        assert!((r - 1.0).abs() < 0.01, "high {r}");
    }

    #[test]
    fn test_table2_ratio_ceiling() {
        let inp = vcp_inputs(1e9, table2_seg());
        let b = b_penalty(1.0 / (512.0 * 252.0)).unwrap();
        let oracle = I as f64 / ((1.0 - 150.0 / 512.0) * 0.25 * b);
        let got = sinr_ratio_vcp_high(&inp).unwrap();
        assert!((got / oracle - 1.0).abs() < 1e-12);
        assert!((to_db(got) - 46.9).abs() < 0.05);
        // The same ceiling with b = 10.10 lands at 47.1 dB.
        let with_b = SinrInputs {
            epsilon: Some(1.0 / I as f64),
            ..inp
        };
        let b_i = b_penalty(1.0 / I as f64).unwrap();
        assert!((to_db(sinr_ratio_vcp_high(&with_b).unwrap()) - to_db(oracle * b / b_i)).abs() < 1e-9);
    }

    #[test]
    fn test_ccc_saturation() {
        let inp = vcp_inputs(1e9, table2_seg());
        let sat = sinr_ccc_vcp_saturation(&inp).unwrap();
        let oracle = 91_520.0 / ((362.0 / 512.0) * (640.0 / 512.0));
        assert!((sat - oracle).abs() < 1e-6);
        assert!((sat - 103_555.0).abs() < 5.0);
        assert!((to_db(sat) - 50.15).abs() < 0.01);
    }

    #[test]
    fn test_ccc_over_ratio_tends_to_b_at_low_snr() {
        let inp = vcp_inputs(1e-7, table2_seg());
        let b = b_penalty(1.0 / (512.0 * 252.0)).unwrap();
        let r = sinr_ccc_vcp(&inp).unwrap() / sinr_ratio_vcp(&inp).unwrap();
        assert!((r / b - 1.0).abs() < 1e-3);
    }

    #[test]
    fn test_sinr_functions_positive_monotone_continuous() {
        let seg = table2_seg();
        let grid: Vec<f64> = (-60..=60).map(|d| from_db(d as f64)).collect();
        let mut prev = [0.0f64; 4];
        for &g in &grid {
            let cur = [
                sinr_ratio_vcp(&vcp_inputs(g, seg)).unwrap(),
                sinr_ccc_vcp(&vcp_inputs(g, seg)).unwrap(),
                sinr_cos(&cos_inputs(g), RdmKind::Ratio).unwrap(),
                sinr_cos(&cos_inputs(g), RdmKind::Ccc).unwrap(),
            ];
            for (c, p) in cur.iter().zip(&prev) {
                assert!(c.is_finite() && *c > 0.0);
                assert!(c >= p);
                // 1 dB step never moves a curve by more than 1 dB.
                if *p > 0.0 {
                    assert!(to_db(*c) - to_db(*p) <= 1.0 + 1e-9);
                }
            }
            prev = cur;
        }
        assert!(sinr_ratio_vcp(&vcp_inputs(0.0, seg)).is_err());
        assert!(sinr_ratio_vcp(&cos_inputs(1.0)).is_err());
        assert!(sinr_cos(&vcp_inputs(1.0, seg), RdmKind::Ratio).is_err());
    }

    #[test]
    fn test_cos_ratio_substitution() {
        let g = 0.01;
        let inp = cos_inputs(g);
        let b = b_penalty(1.0 / (512.0 * 143.0)).unwrap();
        let via_i = I as f64 * g / ((1.0 + 128.0 / 512.0) * b);
        assert!((sinr_cos(&inp, RdmKind::Ratio).unwrap() / via_i - 1.0).abs() < 1e-12);
    }

    #[test]
    fn test_ratio_crossover_sign_change() {
        let seg = table2_seg();
        let g_star = ratio_crossover_gamma0(512, 128, &seg, 1.0);
        let diff = |g: f64| {
            let v = SinrInputs {
                epsilon: Some(1.0 / (512.0 * 143.0)),
                ..vcp_inputs(g, seg)
            };
            sinr_ratio_vcp(&v).unwrap() - sinr_cos(&cos_inputs(g), RdmKind::Ratio).unwrap()
        };
        // The closed form is where the COS curve meets the sub-block
        // ceiling; the finite-SNR curves cross below it, at
        // g = (M~N~/(MN) - 1 - r) / r with r = Q~/M~.
        assert!(diff(g_star / 10.0) > 0.0 && diff(g_star) < 0.0);
        let (mut lo, mut hi) = (g_star / 10.0, g_star);
        for _ in 0..200 {
            let mid = (lo * hi).sqrt();
            if diff(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let r = 0.25;
        let exact = ((512.0 * 252.0) / (512.0 * 143.0) - 1.0 - r) / r;
        assert!((lo / exact - 1.0).abs() < 1e-9, "root {lo} vs {exact}");
    }

    #[test]
    fn test_ccc_vcp_dominates_cos_when_vcp_is_shorter() {
        // Q~/M~ = 100/600 <= Q/M = 128/512
        let seg = SegmentationParams::new(600, 100, 150);
        for i in 0..20 {
            let g = from_db(-40.0 + 4.0 * i as f64);
            let v = sinr_ccc_vcp(&vcp_inputs(g, seg)).unwrap();
            let c = sinr_cos(&cos_inputs(g), RdmKind::Ccc).unwrap();
            assert!(v >= c, "gamma0 {g}: {v} < {c}");
        }
    }

    #[test]
    fn test_ccc_beats_ratio_when_b_is_large() {
        // b > M~/Q~ + 1 needs a long VCP relative to the sub-block.
        let seg = SegmentationParams::new(40, 12, 4);
        let total = 91_520;
        let inp = |g| SinrInputs {
            gamma0: g,
            sigma_p2: 1.0,
            epsilon: None,
            layout: Layout::Vcp { total, seg },
        };
        let b = b_penalty(1.0 / (40 * seg.n_tilde(total).unwrap()) as f64).unwrap();
        assert!(b > 40.0 / 12.0 + 1.0);
        for d in -60..=60 {
            let g = from_db(d as f64);
            assert!(sinr_ccc_vcp(&inp(g)).unwrap() > sinr_ratio_vcp(&inp(g)).unwrap());
        }
    }

    #[test]
    fn test_low_snr_ratio_gain_over_cos() {
        // Q~/M~ = 128/600 <= Q/M, gamma0 sigma_P2 <= 1e-2
        let seg = SegmentationParams::new(600, 128, 150);
        for g in [1e-4, 1e-3, 1e-2] {
            let v = sinr_ratio_vcp(&SinrInputs {
                epsilon: Some(1.0 / (512.0 * 143.0)),
                ..vcp_inputs(g, seg)
            })
            .unwrap();
            let c = sinr_cos(&cos_inputs(g), RdmKind::Ratio).unwrap();
            let bound = 1.0 / (1.0 - 150.0 / 600.0);
            assert!(v / c >= bound * 0.95, "gamma0 {g}: {} < {}", v / c, bound);
        }
    }

    #[test]
    fn test_qtilde_from_range() {
        assert_eq!(qtilde_from_range(10.0, 1.825e9), 122);
        assert_eq!(qtilde_from_range(0.0, 1.825e9), 1);
    }

    #[test]
    fn test_mtilde_from_vmax() {
        let nu = 2.0 * 139.0 * 60.48e9 / crate::waveform::C0;
        assert!((nu - 56_083.6).abs() < 0.1);
        let oracle = (1.825e9 / (2.0 * nu)).floor() as usize;
        assert_eq!(mtilde_from_vmax(139.0, 60.48e9, 1.0 / 1.825e9, 0), oracle);
        assert_eq!(oracle, 16_270);
        assert_eq!(mtilde_from_vmax(139.0, 60.48e9, 1.0 / 1.825e9, 150), oracle + 150);
    }

    #[test]
    fn test_db_roundtrip() {
        for x in [1e-6, 0.3, 1.0, 51_280.0] {
            assert!((from_db(to_db(x)) / x - 1.0).abs() < 1e-12);
        }
    }
}
