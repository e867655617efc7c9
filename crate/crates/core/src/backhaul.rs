//! HAPS-to-NIB backhaul: channel ordering, NOMA power fractions with SIC, and
//! the orthogonal baseline.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Weakest first: descending `aleph`, ties by NIB id.
pub fn order_nibs(aleph: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..aleph.len()).collect();
    idx.sort_by(|&a, &b| aleph[b].total_cmp(&aleph[a]).then(a.cmp(&b)));
    idx
}

/// SINR of position `j` in the SIC order (0-based, strongest last).
pub fn backhaul_sinr(f: &[f64], aleph: &[f64], j: usize) -> f64 {
    let above: f64 = f[j + 1..].iter().sum();
    if j + 1 == f.len() {
        f[j] / aleph[j]
    } else {
        f[j] / (above + aleph[j])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NomaAllocation {
    /// NIB ids, weakest first.
    pub order: Vec<usize>,
    /// Normalized noise in SIC order.
    pub aleph: Vec<f64>,
    /// Threshold-meeting fractions before the leftover is assigned.
    pub f_hat: Vec<f64>,
    /// Final fractions in SIC order.
    pub fractions: Vec<f64>,
    /// First served position (0-based); `None` when even the strongest NIB
    /// misses the threshold.
    pub pivot: Option<usize>,
    pub leftover: f64,
    pub sinr: Vec<f64>,
    pub rates: Vec<f64>,
    pub served: Vec<bool>,
    /// Achieved sum rate of the final fractions.
    pub sum_rate: f64,
    /// Sum rate from the closed-form expression with the
    /// `1 - leftover + aleph_J` denominator taken literally.
    pub sum_rate_reference: f64,
    pub degraded: bool,
    pub threshold_bps: f64,
    pub bandwidth_hz: f64,
}

impl NomaAllocation {
    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Reorders an SIC-ordered vector into NIB id order.
    pub fn by_nib<T: Copy + Default>(&self, v: &[T]) -> Vec<T> {
        let mut out = vec![T::default(); v.len()];
        for (pos, &nib) in self.order.iter().enumerate() {
            out[nib] = v[pos];
        }
        out
    }
}

fn log2_1p(x: f64) -> f64 {
    x.ln_1p() / std::f64::consts::LN_2
}

/// NOMA power split for NIBs sorted weakest first. Every served NIB below the
/// strongest sits exactly on the threshold; the leftover goes to the strongest
/// one, with the weaker fractions re-solved so their SINR targets still hold
/// under the extra interference.
pub fn noma_closed_form(aleph: &[f64], r_th: f64, b_h: f64) -> Result<NomaAllocation> {
    let n = aleph.len();
    if n == 0 {
        return Err(Error::arg("noma_closed_form", "no NIBs"));
    }
    if !(b_h > 0.0) || !(r_th >= 0.0) || !r_th.is_finite() {
        return Err(Error::arg("noma_closed_form", "need B_H > 0 and finite R_th >= 0"));
    }
    if aleph.iter().any(|&a| !(a > 0.0) || !a.is_finite()) {
        return Err(Error::arg("noma_closed_form", "normalized noise must be positive"));
    }
    if aleph.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::arg("noma_closed_form", "normalized noise must be descending"));
    }
    let rho = r_th / b_h;
    let growth = 2f64.powf(rho);
    let t = growth - 1.0;
    // need[s]: budget to serve positions s.. at the threshold.
    let mut need = vec![0.0; n + 1];
    for s in (0..n).rev() {
        need[s] = growth * need[s + 1] + t * aleph[s];
    }
    let pivot = (0..n).find(|&s| need[s] <= 1.0);

    let mut f_hat = vec![0.0; n];
    let mut fractions = vec![0.0; n];
    let leftover;
    match pivot {
        Some(s) => {
            let mut above = 0.0;
            for j in (s..n).rev() {
                f_hat[j] = t * (above + aleph[j]);
                above += f_hat[j];
            }
            leftover = (1.0 - need[s]).max(0.0);
            fractions[n - 1] = f_hat[n - 1] + leftover / growth.powi((n - 1 - s) as i32);
            let mut above = fractions[n - 1];
            for j in (s..n - 1).rev() {
                fractions[j] = t * (above + aleph[j]);
                above += fractions[j];
            }
            // Absorb rounding so the budget is exactly spent.
            let total: f64 = fractions.iter().sum();
            fractions[n - 1] += 1.0 - total;
        }
        None => {
            leftover = 1.0;
            fractions[n - 1] = 1.0;
        }
    }
    let sinr: Vec<f64> = (0..n).map(|j| backhaul_sinr(&fractions, aleph, j)).collect();
    let rates: Vec<f64> = sinr.iter().map(|&g| b_h * log2_1p(g)).collect();
    let served: Vec<bool> = (0..n).map(|j| pivot.is_some_and(|s| j >= s)).collect();

    Ok(NomaAllocation {
        order: (0..n).collect(),
        aleph: aleph.to_vec(),
        f_hat,
        sum_rate: rates.iter().sum(),
        sum_rate_reference: reference_sum_rate(aleph, r_th, b_h),
        fractions,
        pivot,
        leftover,
        sinr,
        rates,
        served,
        degraded: pivot.is_none(),
        threshold_bps: r_th,
        bandwidth_hz: b_h,
    })
}

/// The closed-form sum rate as printed: 1-based pivot from the
/// `aleph_i 2^{(i-1) R_th / B_H}` condition, and
/// `(J - pivot) R_th + B_H log2(1 + df / (1 - df + aleph_J))`.
pub fn reference_sum_rate(aleph: &[f64], r_th: f64, b_h: f64) -> f64 {
    let n = aleph.len();
    let rho = r_th / b_h;
    let t = 2f64.powf(rho) - 1.0;
    let tail = |s: usize| -> f64 {
        t * (s..=n)
            .map(|i| aleph[i - 1] * 2f64.powf((i - 1) as f64 * rho))
            .sum::<f64>()
    };
    match (1..=n).find(|&s| tail(s) <= 1.0) {
        Some(s) => {
            let df = 1.0 - tail(s);
            (n - s) as f64 * r_th + b_h * log2_1p(df / (1.0 - df + aleph[n - 1]))
        }
        None => b_h * log2_1p(1.0 / aleph[n - 1]),
    }
}

/// Orders the NIBs and runs the closed form; outputs stay in SIC order.
pub fn noma_allocate(aleph_by_nib: &[f64], r_th: f64, b_h: f64) -> Result<NomaAllocation> {
    let order = order_nibs(aleph_by_nib);
    let sorted: Vec<f64> = order.iter().map(|&j| aleph_by_nib[j]).collect();
    let mut out = noma_closed_form(&sorted, r_th, b_h)?;
    out.order = order;
    Ok(out)
}

/// Equal bandwidth and power split. The noise shrinks with the sub-band, so
/// each NIB gets `(B_H / J) log2(1 + 1 / aleph_j)`.
pub fn oma_baseline(aleph: &[f64], b_h: f64) -> Vec<f64> {
    let j = aleph.len() as f64;
    aleph.iter().map(|&a| b_h / j * log2_1p(1.0 / a)).collect()
}
