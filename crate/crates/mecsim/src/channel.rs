//! Stochastic vehicle-to-infrastructure channel realization and achievable
//! uplink rate.
//!
//! A link realization combines, per class x in {LoS, NLoS}:
//!   - small-scale Nakagami-m fading: |h|^2 ~ Gamma(m_x, 1/m_x), unit mean
//!     (mean power is carried entirely by the large-scale term);
//!   - large-scale loss: L = (4*pi*d_ref*f_c / c)^2 * (d/d_ref)^beta_x * chi_x
//!     with log-normal shadowing chi = 10^(X/10), X ~ N(0, sigma_x^2) in dB;
//!   - class gain g_x = |h|^2 / L.
//! The LoS probability follows the distance-dependent model
//! `P = min(a1/d, 1) * (1 - exp(-d/a2)) + exp(-d/a2)`.
//! The default mixture semantics realize both classes and blend them with
//! weight P; an optional Bernoulli mode draws the class instead.
//! The uplink rate is `B * log2(1 + p*g/N0)`.

use rand::Rng;
use rand_distr::{Distribution, Gamma, Normal};
use serde::Serialize;

use crate::scenario::{ChannelParams, LosMixture};

/// Propagation class of a link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LinkClass {
    Los,
    Nlos,
}

/// The small-scale and large-scale draws behind one class gain.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ClassDraw {
    pub small_scale_gain: f64,
    pub large_scale_loss: f64,
}

impl ClassDraw {
    pub fn gain(&self) -> f64 {
        self.small_scale_gain / self.large_scale_loss
    }
}

/// What was actually drawn for a link, depending on the mixture semantics.
#[derive(Debug, Clone, Copy, Serialize)]
pub enum LinkDraw {
    /// Both classes realized; gain = P*g_los + (1-P)*g_nlos.
    Mixture { los: ClassDraw, nlos: ClassDraw },
    /// Class drawn Bernoulli(P); gain is the drawn class gain.
    Bernoulli { is_los: bool, draw: ClassDraw },
}

/// One realized vehicle-to-server link.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ChannelRealization {
    pub distance_m: f64,
    pub los_prob: f64,
    pub link: LinkDraw,
    pub gain: f64,
    pub rate_bps: f64,
}

/// Line-of-sight probability as a function of link distance.
/// Clamped to [0, 1]; exactly 1 for d <= alpha1 (and at d = 0).
pub fn los_probability(distance_m: f64, alpha1_m: f64, alpha2_m: f64) -> f64 {
    debug_assert!(distance_m >= 0.0);
    if distance_m <= alpha1_m {
        return 1.0;
    }
    let decay = (-distance_m / alpha2_m).exp();
    ((alpha1_m / distance_m) * (1.0 - decay) + decay).clamp(0.0, 1.0)
}

/// Draw a Nakagami-m power gain |h|^2 ~ Gamma(shape = m, scale = 1/m).
/// Unit mean; m = 1 recovers Rayleigh (exponential power).
pub fn sample_small_scale(m_shape: f64, rng: &mut impl Rng) -> f64 {
    debug_assert!(m_shape >= 0.5);
    Gamma::new(m_shape, 1.0 / m_shape).expect("valid shape").sample(rng)
}

fn pathloss_params(cfg: &ChannelParams, class: LinkClass) -> (f64, f64) {
    match class {
        LinkClass::Los => (cfg.pathloss_exp_los, cfg.shadow_std_los_db),
        LinkClass::Nlos => (cfg.pathloss_exp_nlos, cfg.shadow_std_nlos_db),
    }
}

fn nakagami_shape(cfg: &ChannelParams, class: LinkClass) -> f64 {
    match class {
        LinkClass::Los => cfg.nakagami_m_los,
        LinkClass::Nlos => cfg.nakagami_m_nlos,
    }
}

/// Large-scale loss (path loss times shadowing) for one class.
/// `distance_m` must be at least the reference distance.
pub fn large_scale_loss(
    distance_m: f64,
    class: LinkClass,
    cfg: &ChannelParams,
    rng: &mut impl Rng,
) -> f64 {
    let (exponent, shadow_std_db) = pathloss_params(cfg, class);
    let reference = (4.0 * std::f64::consts::PI * cfg.ref_distance_m * cfg.carrier_freq_hz
        / cfg.light_speed_mps)
        .powi(2);
    let shadow_db = Normal::new(0.0, shadow_std_db.max(0.0))
        .expect("valid std")
        .sample(rng);
    let shadowing = 10f64.powf(shadow_db / 10.0);
    reference * (distance_m / cfg.ref_distance_m).powf(exponent) * shadowing
}

fn draw_class(distance_m: f64, class: LinkClass, cfg: &ChannelParams, rng: &mut impl Rng) -> ClassDraw {
    ClassDraw {
        small_scale_gain: sample_small_scale(nakagami_shape(cfg, class), rng),
        large_scale_loss: large_scale_loss(distance_m, class, cfg, rng),
    }
}

/// Realize the link gain at a forced LoS probability. Exposed so the mixture
/// collapse cases (P = 0, P = 1) are directly testable.
pub fn mixture_gain(
    distance_m: f64,
    los_prob: f64,
    cfg: &ChannelParams,
    rng: &mut impl Rng,
) -> (f64, LinkDraw) {
    match cfg.los_mixture {
        LosMixture::Expected => {
            let los = draw_class(distance_m, LinkClass::Los, cfg, rng);
            let nlos = draw_class(distance_m, LinkClass::Nlos, cfg, rng);
            let gain = los_prob * los.gain() + (1.0 - los_prob) * nlos.gain();
            (gain, LinkDraw::Mixture { los, nlos })
        }
        LosMixture::Bernoulli => {
            let is_los = rng.gen::<f64>() < los_prob;
            let class = if is_los { LinkClass::Los } else { LinkClass::Nlos };
            let draw = draw_class(distance_m, class, cfg, rng);
            (draw.gain(), LinkDraw::Bernoulli { is_los, draw })
        }
    }
}

/// Shannon-capacity uplink rate in bit/s.
pub fn transmission_rate(bandwidth_hz: f64, tx_power_w: f64, gain: f64, noise_power_w: f64) -> f64 {
    debug_assert!(bandwidth_hz > 0.0 && noise_power_w > 0.0);
    debug_assert!(tx_power_w >= 0.0 && gain >= 0.0);
    bandwidth_hz * (1.0 + tx_power_w * gain / noise_power_w).log2()
}

/// Realize one full link: LoS probability, class draws, gain, and rate.
/// Distances below the reference distance are clamped for the loss model.
pub fn realize_channel(
    distance_m: f64,
    tx_power_w: f64,
    cfg: &ChannelParams,
    rng: &mut impl Rng,
) -> ChannelRealization {
    let los_prob = los_probability(distance_m, cfg.alpha1_m, cfg.alpha2_m);
    let loss_distance = distance_m.max(cfg.ref_distance_m);
    let (gain, link) = mixture_gain(loss_distance, los_prob, cfg, rng);
    let rate_bps = transmission_rate(cfg.bandwidth_hz, tx_power_w, gain, cfg.noise_power_w);
    ChannelRealization {
        distance_m,
        los_prob,
        link,
        gain,
        rate_bps,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::ScenarioConfig;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn channel_cfg() -> ChannelParams {
        ScenarioConfig::table_defaults().channel
    }

    #[test]
    fn los_probability_is_one_near_the_mast() {
        assert_eq!(los_probability(0.0, 18.0, 36.0), 1.0);
        assert_eq!(los_probability(18.0, 18.0, 36.0), 1.0);
        assert_eq!(los_probability(5.0, 18.0, 36.0), 1.0);
    }

    #[test]
    fn los_probability_at_100m() {
        let p = los_probability(100.0, 18.0, 36.0);
        let expected = 0.23098474969813537;
        assert!((p - expected).abs() / expected < 1e-12, "p = {p}");
    }

    #[test]
    fn los_probability_bounded_and_decreasing_far_out() {
        let mut prev = 1.0;
        for i in 0..=10_000 {
            let d = i as f64;
            let p = los_probability(d, 18.0, 36.0);
            assert!((0.0..=1.0).contains(&p));
            if d >= 18.0 {
                assert!(p <= prev + 1e-15, "not monotone at d = {d}");
                prev = p;
            }
        }
    }

    #[test]
    fn free_space_reference_loss() {
        let mut cfg = channel_cfg();
        cfg.shadow_std_los_db = 0.0;
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let loss = large_scale_loss(1.0, LinkClass::Los, &cfg, &mut rng);
        let expected = 7018.385351885766; // (4*pi*f_c/c)^2 at 2 GHz
        assert!((loss - expected).abs() / expected < 1e-12, "loss = {loss}");
    }

    #[test]
    fn doubling_distance_scales_loss_by_exponent() {
        let mut cfg = channel_cfg();
        cfg.shadow_std_los_db = 0.0;
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let l1 = large_scale_loss(50.0, LinkClass::Los, &cfg, &mut rng);
        let l2 = large_scale_loss(100.0, LinkClass::Los, &cfg, &mut rng);
        let ratio = l2 / l1;
        let expected = 5.351710219144448; // 2^2.42
        assert!((ratio - expected).abs() / expected < 1e-12);
    }

    #[test]
    fn zero_shadow_std_means_unit_shadowing() {
        let mut cfg = channel_cfg();
        cfg.shadow_std_los_db = 0.0;
        let mut rng_a = ChaCha8Rng::seed_from_u64(1);
        let mut rng_b = ChaCha8Rng::seed_from_u64(2);
        // Different rng draws, identical loss: the shadowing factor is exactly 1.
        let a = large_scale_loss(10.0, LinkClass::Los, &cfg, &mut rng_a);
        let b = large_scale_loss(10.0, LinkClass::Los, &cfg, &mut rng_b);
        assert_eq!(a, b);
    }

    #[test]
    fn forced_los_probability_collapses_mixture() {
        let cfg = channel_cfg();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (gain, link) = mixture_gain(100.0, 1.0, &cfg, &mut rng);
        match link {
            LinkDraw::Mixture { los, .. } => assert_eq!(gain, los.gain()),
            _ => unreachable!(),
        }
        let (gain, link) = mixture_gain(100.0, 0.0, &cfg, &mut rng);
        match link {
            LinkDraw::Mixture { nlos, .. } => assert_eq!(gain, nlos.gain()),
            _ => unreachable!(),
        }
    }

    #[test]
    fn mixture_mean_is_probability_weighted_class_mean() {
        let cfg = channel_cfg();
        let d = 100.0;
        let p = los_probability(d, cfg.alpha1_m, cfg.alpha2_m);
        let n = 100_000;

        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mean_los: f64 =
            (0..n).map(|_| mixture_gain(d, 1.0, &cfg, &mut rng).0).sum::<f64>() / n as f64;
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mean_nlos: f64 =
            (0..n).map(|_| mixture_gain(d, 0.0, &cfg, &mut rng).0).sum::<f64>() / n as f64;
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mean_mix: f64 =
            (0..n).map(|_| mixture_gain(d, p, &cfg, &mut rng).0).sum::<f64>() / n as f64;

        let expected = p * mean_los + (1.0 - p) * mean_nlos;
        assert!(
            (mean_mix - expected).abs() / expected < 0.02,
            "mix {mean_mix} vs expected {expected}"
        );
    }

    #[test]
    fn bernoulli_mode_draws_single_class() {
        let mut cfg = channel_cfg();
        cfg.los_mixture = LosMixture::Bernoulli;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (gain, link) = mixture_gain(200.0, 0.5, &cfg, &mut rng);
        match link {
            LinkDraw::Bernoulli { draw, .. } => assert_eq!(gain, draw.gain()),
            _ => unreachable!(),
        }
    }

    #[test]
    fn rate_definition_points() {
        assert_eq!(transmission_rate(20e6, 0.1, 0.0, 1e-13), 0.0);
        // p*g/N0 = 3 => log2(4) = 2 => 40 Mbit/s at 20 MHz.
        let n0 = 1e-13;
        let rate = transmission_rate(20e6, 1.0, 3.0 * n0, n0);
        assert!((rate - 40e6).abs() / 40e6 < 1e-12);
    }

    #[test]
    fn rate_monotone_in_power_and_gain() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..100 {
            let g = rng.gen::<f64>() * 1e-9 + 1e-15;
            let p = rng.gen::<f64>() * 0.3 + 1e-3;
            let base = transmission_rate(20e6, p, g, 1.585e-13);
            assert!(transmission_rate(20e6, p * 1.1, g, 1.585e-13) > base);
            assert!(transmission_rate(20e6, p, g * 1.1, 1.585e-13) > base);
            assert!(base >= 0.0);
        }
    }

    #[test]
    fn realization_clamps_distance_for_loss_only() {
        let cfg = channel_cfg();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let r = realize_channel(0.0, 0.1, &cfg, &mut rng);
        assert_eq!(r.los_prob, 1.0);
        assert_eq!(r.distance_m, 0.0);
        assert!(r.gain.is_finite() && r.gain > 0.0);
        assert!(r.rate_bps.is_finite() && r.rate_bps > 0.0);
    }
}
