//! Rates, window/total latency, the regularized and equalized SINR
//! quantities, and the transmitter energy model.
//!
//! Latency follows from a capped modified-Shannon rate: a window is done
//! when its slowest receiver has decoded, windows run back to back with a
//! fixed beam-switching delay between them, and an undeliverable window
//! (a zero-SINR receiver) yields an infinite-latency sentinel so scheduler
//! comparisons stay total.

use crate::channel::ChannelSet;
use crate::precoder::{evaluate_sinr, HybridDesign, PrecoderMode};
use crate::scheduler::Schedule;

/// Capped modified-Shannon rate model.
///
/// `beta` is the SINR loss inside the log, `c_max` the spectral-efficiency
/// cap in bit/s/Hz, and `bandwidth_hz` converts spectral efficiency into a
/// rate. The defaults reproduce a 0.8333 ms latency floor for a 4 Mbit
/// payload at saturation.
#[derive(Debug, Clone, Copy)]
pub struct RateModel {
    pub beta: f64,
    pub c_max: f64,
    pub bandwidth_hz: f64,
}

impl Default for RateModel {
    fn default() -> Self {
        Self {
            beta: 0.5,
            c_max: 12.0,
            bandwidth_hz: 4.0e8,
        }
    }
}

impl RateModel {
    pub fn new(beta: f64, c_max: f64, bandwidth_hz: f64) -> Self {
        assert!(beta > 0.0 && beta <= 1.0, "beta must be in (0, 1]");
        assert!(c_max > 0.0 && bandwidth_hz > 0.0);
        Self {
            beta,
            c_max,
            bandwidth_hz,
        }
    }
}

/// Achievable rate in bit/s: `bandwidth * min(log2(1 + beta * sinr), c_max)`.
pub fn rate(sinr: f64, model: &RateModel) -> f64 {
    assert!(sinr >= 0.0, "SINR must be nonnegative");
    model.bandwidth_hz * (1.0 + model.beta * sinr).log2().min(model.c_max)
}

/// Latency of one window in seconds: the slowest receiver dominates.
/// A zero rate yields `f64::INFINITY` (window undeliverable).
pub fn window_latency(sinrs: &[f64], bits: &[f64], model: &RateModel) -> f64 {
    assert!(!sinrs.is_empty() && sinrs.len() == bits.len());
    sinrs
        .iter()
        .zip(bits)
        .map(|(&s, &b)| {
            let r = rate(s, model);
            if r > 0.0 {
                b / r
            } else {
                f64::INFINITY
            }
        })
        .fold(0.0, f64::max)
}

/// Regularized SINR `(1 + beta * sinr)^(1 / bits_norm)`.
pub fn r_sinr(sinr: f64, bits_norm: f64, beta: f64) -> f64 {
    assert!(sinr >= 0.0 && bits_norm > 0.0 && bits_norm <= 1.0);
    (1.0 + beta * sinr).powf(1.0 / bits_norm)
}

/// Equalized SINR `sinr / bits_norm`, the max-min design objective.
pub fn e_sinr(sinr: f64, bits_norm: f64) -> f64 {
    assert!(sinr >= 0.0 && bits_norm > 0.0 && bits_norm <= 1.0);
    sinr / bits_norm
}

/// Checks that the max-of-ratios window latency equals its closed form as a
/// reciprocal log of a combined min over regularized-SINR and cap terms.
///
/// This is a test oracle for the latency identity: both routes must agree
/// within 1e-9 relative (two infinite latencies also agree).
pub fn latency_sinr_identity_check(sinrs: &[f64], bits: &[f64], model: &RateModel) -> bool {
    let direct = window_latency(sinrs, bits, model);

    let mut inner = f64::INFINITY;
    for (&s, &b) in sinrs.iter().zip(bits) {
        let reg = (1.0 + model.beta * s).powf(1.0 / b);
        let cap = 2.0_f64.powf(model.c_max / b);
        inner = inner.min(reg.min(cap));
    }
    let log = inner.log2();
    let closed = if log > 0.0 {
        1.0 / (model.bandwidth_hz * log)
    } else {
        f64::INFINITY
    };

    if direct.is_infinite() || closed.is_infinite() {
        return direct.is_infinite() && closed.is_infinite();
    }
    (direct - closed).abs() <= 1e-9 * direct.max(closed)
}

/// Where the beam-switching delay is charged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SwitchingPlacement {
    /// `(T_s - 1)` delays, between consecutive windows.
    #[default]
    BetweenWindows,
    /// `T_s` delays, one per window (sensitivity variant).
    PerWindow,
}

/// Per-window and total latency of a full schedule.
#[derive(Debug, Clone)]
pub struct LatencyReport {
    /// Window latencies in seconds, schedule order.
    pub per_window: Vec<f64>,
    /// Switching delay in seconds.
    pub switching_delay: f64,
    /// Total latency in seconds including switching.
    pub total: f64,
    /// SINR per receiver (global receiver index).
    pub per_receiver_sinr: Vec<f64>,
}

impl LatencyReport {
    pub fn total_ms(&self) -> f64 {
        self.total * 1e3
    }

    /// Minimum equalized SINR across all receivers.
    pub fn min_esinr(&self, chs: &ChannelSet) -> f64 {
        let norm = chs.bits_normalized();
        self.per_receiver_sinr
            .iter()
            .enumerate()
            .map(|(k, &s)| s / norm[chs.group_of(k)])
            .fold(f64::INFINITY, f64::min)
    }
}

/// Evaluates every window of a schedule with its design and sums latencies
/// plus switching delays.
pub fn total_latency(
    schedule: &Schedule,
    per_window_designs: &[HybridDesign],
    chs: &ChannelSet,
    model: &RateModel,
    noise_power: f64,
    delta_sw: f64,
    placement: SwitchingPlacement,
) -> LatencyReport {
    assert_eq!(
        schedule.windows.len(),
        per_window_designs.len(),
        "one design per window required"
    );
    let mut per_window = Vec::with_capacity(schedule.windows.len());
    let mut per_receiver_sinr = vec![0.0; chs.n_receivers()];
    for (window, design) in schedule.windows.iter().zip(per_window_designs) {
        let sinrs = evaluate_sinr(chs, design, window, noise_power);
        let receivers = crate::precoder::window_receivers(chs, window);
        let bits: Vec<f64> = receivers
            .iter()
            .map(|&k| chs.bits[chs.group_of(k)])
            .collect();
        for (&k, &s) in receivers.iter().zip(&sinrs) {
            per_receiver_sinr[k] = s;
        }
        per_window.push(window_latency(&sinrs, &bits, model));
    }
    let switches = match placement {
        SwitchingPlacement::BetweenWindows => schedule.windows.len().saturating_sub(1),
        SwitchingPlacement::PerWindow => schedule.windows.len(),
    };
    let total = per_window.iter().sum::<f64>() + switches as f64 * delta_sw;
    LatencyReport {
        per_window,
        switching_delay: delta_sw,
        total,
        per_receiver_sinr,
    }
}

/// Transmitter hardware energy model.
#[derive(Debug, Clone, Copy)]
pub struct EnergyModel {
    /// Watts consumed per RF chain.
    pub p_rf: f64,
    /// Watts per phase shifter.
    pub p_ps: f64,
    /// Maximum transmit power in watts.
    pub p_tx_max: f64,
}

impl EnergyModel {
    pub fn new(p_rf: f64, p_ps: f64, p_tx_max: f64) -> Self {
        assert!(p_rf >= 0.0 && p_ps >= 0.0 && p_tx_max >= 0.0);
        Self {
            p_rf,
            p_ps,
            p_tx_max,
        }
    }
}

/// Instantaneous transmitter power by architecture: a fully digital
/// transmitter drives one RF chain per antenna and no phase shifters; the
/// hybrid and analog architectures share the same phase-shifter hardware.
pub fn energy(mode: PrecoderMode, n_tx: usize, n_rf: usize, model: &EnergyModel) -> f64 {
    match mode {
        PrecoderMode::Digital => model.p_tx_max + n_tx as f64 * model.p_rf,
        PrecoderMode::Hybrid | PrecoderMode::Analog => {
            model.p_tx_max + n_rf as f64 * model.p_rf + n_tx as f64 * model.p_ps
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    #[test]
    fn rate_zero_sinr_is_zero() {
        assert_eq!(rate(0.0, &RateModel::default()), 0.0);
    }

    #[test]
    fn rate_cap_binds_at_high_sinr() {
        let m = RateModel::default();
        assert_eq!(rate(1e12, &m), m.bandwidth_hz * m.c_max);
    }

    #[test]
    fn rate_hand_value() {
        // sinr = 3, beta = 0.5, W = 4e8, cap 12 -> 4e8 * log2(2.5).
        let m = RateModel::default();
        let want = 4.0e8 * 2.5_f64.log2();
        assert!((rate(3.0, &m) - want).abs() < 1.0);
        assert!((want - 5.2877e8).abs() < 1e5);
    }

    #[test]
    fn rate_monotone_in_sinr() {
        let m = RateModel::default();
        let mut prev = rate(0.0, &m);
        for i in 1..100 {
            let r = rate(i as f64 * 0.7, &m);
            assert!(r >= prev);
            prev = r;
        }
    }

    #[test]
    fn latency_floor_for_saturated_receiver() {
        // B = 4 Mbit at the capped rate 4.8 Gbit/s -> 0.8333 ms.
        let m = RateModel::default();
        let lat = window_latency(&[1e12], &[4.0e6], &m);
        assert!((lat - 4.0e6 / 4.8e9).abs() < 1e-12);
        assert!((lat * 1e3 - 0.8333).abs() < 1e-4);
    }

    #[test]
    fn window_latency_takes_the_max() {
        // Rates 1 Gbit/s and 2 Gbit/s for 4 Mbit payloads -> 4 ms and 2 ms,
        // and the window waits for the slower receiver.
        let m = RateModel::new(0.5, 1e18, 1e9);
        let sinr_for_eff = |c: f64| (2.0_f64.powf(c) - 1.0) / m.beta;
        let sinrs = [sinr_for_eff(1.0), sinr_for_eff(2.0)];
        assert!((rate(sinrs[0], &m) - 1e9).abs() < 1.0);
        assert!((rate(sinrs[1], &m) - 2e9).abs() < 1.0);
        let lat = window_latency(&sinrs, &[4.0e6, 4.0e6], &m);
        assert!((lat - 4.0e-3).abs() < 1e-12);
    }

    #[test]
    fn zero_sinr_window_is_undeliverable() {
        let m = RateModel::default();
        assert!(window_latency(&[0.0, 5.0], &[1.0, 1.0], &m).is_infinite());
    }

    #[test]
    fn equal_bits_latency_follows_min_sinr() {
        let m = RateModel::default();
        let a = window_latency(&[2.0, 9.0], &[1e6, 1e6], &m);
        let b = window_latency(&[2.0], &[1e6], &m);
        assert_eq!(a, b);
    }

    #[test]
    fn r_and_e_sinr_edge_values() {
        assert_eq!(r_sinr(0.0, 0.7, 0.5), 1.0);
        assert_eq!(e_sinr(0.0, 0.7), 0.0);
        assert!((r_sinr(3.0, 1.0, 0.5) - 2.5).abs() < 1e-15);
        // sinr = 3, beta = 0.5, bits 0.5 -> 2.5^2 = 6.25.
        assert!((r_sinr(3.0, 0.5, 0.5) - 6.25).abs() < 1e-12);
        assert!((e_sinr(3.0, 0.5) - 6.0).abs() < 1e-15);
    }

    #[test]
    fn identity_check_single_receiver() {
        let m = RateModel::new(0.5, 9.0, 1.0);
        assert!(latency_sinr_identity_check(&[4.2], &[0.8], &m));
    }

    #[test]
    fn identity_check_random_multi_receiver() {
        let mut rng = Rng::from_seed(41);
        let m = RateModel::new(0.5, 6.0, 1.0);
        for _ in 0..100 {
            let n = 1 + rng.index(5);
            let sinrs: Vec<f64> = (0..n).map(|_| rng.next_f64() * 200.0).collect();
            let bits: Vec<f64> = (0..n).map(|_| 0.25 + rng.next_f64() * 0.75).collect();
            assert!(latency_sinr_identity_check(&sinrs, &bits, &m));
        }
    }

    #[test]
    fn identity_check_mixed_cap_regimes() {
        // Low cap so some receivers saturate and others do not.
        let mut rng = Rng::from_seed(42);
        let m = RateModel::new(0.5, 2.0, 1.0);
        for _ in 0..100 {
            let sinrs = vec![
                rng.next_f64() * 0.5,
                100.0 + rng.next_f64() * 900.0,
                rng.next_f64() * 5.0,
            ];
            let bits = vec![0.5, 1.0, 0.9];
            assert!(latency_sinr_identity_check(&sinrs, &bits, &m));
        }
    }

    /// Same window, equal payloads, cap non-binding: the design with the
    /// larger min e-SINR has the strictly smaller latency.
    #[test]
    fn latency_orders_by_min_esinr_below_cap() {
        let mut rng = Rng::from_seed(43);
        let m = RateModel::default();
        for _ in 0..200 {
            let n = 2 + rng.index(4);
            let a: Vec<f64> = (0..n).map(|_| 0.5 + rng.next_f64() * 50.0).collect();
            let b: Vec<f64> = (0..n).map(|_| 0.5 + rng.next_f64() * 50.0).collect();
            // Cap check: C(sinr) < c_max for every entry.
            let below = |v: &[f64]| v.iter().all(|&s| (1.0 + m.beta * s).log2() < m.c_max);
            assert!(below(&a) && below(&b));
            let min_a = a.iter().cloned().fold(f64::INFINITY, f64::min);
            let min_b = b.iter().cloned().fold(f64::INFINITY, f64::min);
            if (min_a - min_b).abs() < 1e-9 {
                continue;
            }
            let bits = vec![4.0e6; n];
            let la = window_latency(&a, &bits, &m);
            let lb = window_latency(&b, &bits, &m);
            if min_a > min_b {
                assert!(la < lb);
            } else {
                assert!(lb < la);
            }
        }
    }

    #[test]
    fn switching_delay_placement() {
        use crate::channel::ChannelSet;
        use crate::linalg::{CMat, C64};
        use crate::precoder::window_receivers;
        use crate::scheduler::Schedule;
        let chs = ChannelSet::new(
            vec![
                CMat::from_rows(&[vec![C64::new(5.0, 0.0)]]),
                CMat::from_rows(&[vec![C64::new(4.0, 0.0)]]),
            ],
            vec![vec![0], vec![1]],
            vec![4.0e6, 4.0e6],
        )
        .unwrap();
        let design = |w: &[usize]| crate::precoder::HybridDesign {
            analog: CMat::identity(1),
            digital: CMat::identity(1).scale(C64::new(0.3, 0.0)),
            combiners: vec![vec![C64::new(1.0, 0.0)]],
            receivers: window_receivers(&chs, w),
            min_esinr: 0.0,
            progress: vec![],
        };
        let schedule = Schedule {
            windows: vec![vec![0], vec![1]],
        };
        let designs = vec![design(&[0]), design(&[1])];
        let m = RateModel::default();
        let delta = 0.5e-3;
        let between = total_latency(
            &schedule,
            &designs,
            &chs,
            &m,
            0.01,
            delta,
            SwitchingPlacement::BetweenWindows,
        );
        let per = total_latency(
            &schedule,
            &designs,
            &chs,
            &m,
            0.01,
            delta,
            SwitchingPlacement::PerWindow,
        );
        let base: f64 = between.per_window.iter().sum();
        assert!((between.total - (base + delta)).abs() < 1e-15);
        assert!((per.total - (base + 2.0 * delta)).abs() < 1e-15);
        // With no switching delay the total is exactly the window sum.
        let none = total_latency(
            &schedule,
            &designs,
            &chs,
            &m,
            0.01,
            0.0,
            SwitchingPlacement::BetweenWindows,
        );
        assert_eq!(none.total, base);
        // Four 1 ms windows with 0.5 ms switching -> 5.5 ms.
        assert!((4.0 * 1.0e-3 + 3.0 * delta - 5.5e-3).abs() < 1e-18);
    }

    #[test]
    fn latency_monotone_when_one_sinr_improves() {
        let m = RateModel::default();
        let bits = [4.0e6, 4.0e6, 4.0e6];
        let base = window_latency(&[2.0, 5.0, 9.0], &bits, &m);
        let better = window_latency(&[2.0, 8.0, 9.0], &bits, &m);
        let much_better = window_latency(&[4.0, 8.0, 9.0], &bits, &m);
        assert!(better <= base);
        assert!(much_better < base);
    }

    #[test]
    fn energy_matches_published_constants() {
        // Hybrid 1.82 W and digital 6.10 W for the reference hardware.
        let m = EnergyModel::new(0.25, 0.03, 0.1);
        let hybrid = energy(PrecoderMode::Hybrid, 24, 4, &m);
        let digital = energy(PrecoderMode::Digital, 24, 24, &m);
        assert!((hybrid - 1.82).abs() < 1e-12, "hybrid {hybrid}");
        assert!((digital - 6.10).abs() < 1e-12, "digital {digital}");
    }

    #[test]
    fn energy_zero_model_is_transmit_power_only() {
        let m = EnergyModel::new(0.0, 0.0, 0.37);
        assert_eq!(energy(PrecoderMode::Hybrid, 24, 4, &m), 0.37);
        assert_eq!(energy(PrecoderMode::Analog, 24, 4, &m), 0.37);
        assert_eq!(energy(PrecoderMode::Digital, 24, 24, &m), 0.37);
    }
}
