//! Performance measures for both links.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// `(R_a, R_b)`: plain sums of access and backhaul rates.
pub fn sum_rates(access: &[f64], backhaul: &[f64]) -> (f64, f64) {
    (access.iter().sum(), backhaul.iter().sum())
}

/// `R = B log2(1 + sinr)`.
pub fn shannon_rate(bandwidth_hz: f64, sinr: f64) -> f64 {
    bandwidth_hz * sinr.ln_1p() / std::f64::consts::LN_2
}

/// `(1/J) sum_j R_j / (f_j P_H + P_c2)`.
pub fn aee_backhaul(rates: &[f64], fractions: &[f64], p_haps_w: f64, p_circuit_w: f64) -> f64 {
    if rates.is_empty() {
        return 0.0;
    }
    rates
        .iter()
        .zip(fractions)
        .map(|(r, f)| r / (f * p_haps_w + p_circuit_w))
        .sum::<f64>()
        / rates.len() as f64
}

/// `(1/J) sum_j R_j / B_H`.
pub fn se_avg_backhaul(rates: &[f64], b_h: f64) -> f64 {
    if rates.is_empty() {
        return 0.0;
    }
    rates.iter().sum::<f64>() / b_h / rates.len() as f64
}

/// Backhaul spectral efficiency per square meter of the HAPS footprint.
pub fn ase_backhaul(rates: &[f64], b_h: f64, coverage_radius_m: f64) -> f64 {
    se_avg_backhaul(rates, b_h) / (PI * coverage_radius_m * coverage_radius_m)
}

/// `(1/K) sum_k R_k / B_k`.
pub fn se_avg_access(rates: &[f64], bandwidths: &[f64]) -> f64 {
    if rates.is_empty() {
        return 0.0;
    }
    rates.iter().zip(bandwidths).map(|(r, b)| r / b).sum::<f64>() / rates.len() as f64
}

/// `(1/K) sum_k R_k / (p_k P_k + P_c1)`.
pub fn aee_access(rates: &[f64], p: &[f64], tx_power_w: &[f64], p_circuit_w: f64) -> f64 {
    if rates.is_empty() {
        return 0.0;
    }
    rates
        .iter()
        .zip(p)
        .zip(tx_power_w)
        .map(|((r, p), pw)| r / (p * pw + p_circuit_w))
        .sum::<f64>()
        / rates.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jain {
    pub index: f64,
    /// All rates were zero; the index is reported as 1.
    pub degenerate: bool,
}

/// `(sum R)^2 / (K sum R^2)`.
pub fn jain_index(rates: &[f64]) -> Jain {
    let s: f64 = rates.iter().sum();
    let s2: f64 = rates.iter().map(|r| r * r).sum();
    if rates.is_empty() || s2 == 0.0 {
        return Jain {
            index: 1.0,
            degenerate: true,
        };
    }
    Jain {
        index: s * s / (rates.len() as f64 * s2),
        degenerate: false,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricBundle {
    pub sum_rate_access_bps: f64,
    pub sum_rate_access_actual_bps: f64,
    pub sum_rate_backhaul_bps: f64,
    pub aee_backhaul_bpj: f64,
    pub ase_backhaul_bps_hz_m2: f64,
    pub aee_access_bpj: f64,
    pub se_avg_access_bps_hz: f64,
    pub jain: f64,
    pub jain_degenerate: bool,
}

impl MetricBundle {
    pub fn ase_backhaul_per_km2(&self) -> f64 {
        self.ase_backhaul_bps_hz_m2 * 1e6
    }
}

/// Mean, sample standard deviation and count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
    pub count: usize,
}

pub fn summarize(values: &[f64]) -> Summary {
    let n = values.len();
    if n == 0 {
        return Summary {
            mean: f64::NAN,
            std: f64::NAN,
            count: 0,
        };
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let std = if n > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    Summary { mean, std, count: n }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jain_cases() {
        assert_eq!(jain_index(&[2.0; 5]).index, 1.0);
        assert_eq!(jain_index(&[0.0, 0.0, 3.0, 0.0]).index, 0.25);
        assert!((jain_index(&[1.0, 2.0, 3.0]).index - 36.0 / 42.0).abs() < 1e-15);
        let z = jain_index(&[0.0; 3]);
        assert!(z.degenerate && z.index == 1.0);
    }

    #[test]
    fn aee_hand_value() {
        assert!((aee_backhaul(&[1e6], &[1.0], 9.0, 1.0) - 1e5).abs() < 1e-9);
        assert_eq!(aee_backhaul(&[0.0], &[1.0], 9.0, 1.0), 0.0);
        assert!(aee_backhaul(&[1e6], &[0.5], 9.0, 2.0) < aee_backhaul(&[1e6], &[0.5], 9.0, 1.0));
    }

    #[test]
    fn ase_area_law() {
        let r = [3e6, 1e6];
        let a = ase_backhaul(&r, 1e6, 1e3);
        let b = ase_backhaul(&r, 1e6, 2e3);
        assert!((a / b - 4.0).abs() < 1e-12);
    }

    #[test]
    fn single_user_se() {
        let rate = shannon_rate(2e6, 1.0);
        assert!((se_avg_access(&[rate], &[2e6]) - 1.0).abs() < 1e-15);
        assert_eq!(sum_rates(&[shannon_rate(1.0, 1.0)], &[]), (1.0, 0.0));
    }
}
