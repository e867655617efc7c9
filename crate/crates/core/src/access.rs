//! Access-link resource allocation: RZF precoding per (NIB, RAT) cell and
//! successive convex approximation of the power split, plus the uniform
//! baseline.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::LN_2;

use crate::error::{Error, Result};
use crate::scenario::CapMode;

/// Above this many users the interference sums go through the M x M
/// covariance instead of the explicit pairwise loop.
const EXPLICIT_CROSS_LIMIT: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct PrecodingState {
    /// Channels, one column per user (M x K).
    pub h: DMatrix<Complex64>,
    /// Precoders, one column per user, with unit Frobenius norm.
    pub w: DMatrix<Complex64>,
    pub zeta: f64,
    pub omega: f64,
    /// `|h_k^H w_k|^2`.
    pub eff_gain: Vec<f64>,
}

impl PrecodingState {
    pub fn n_users(&self) -> usize {
        self.h.ncols()
    }

    pub fn n_antennas(&self) -> usize {
        self.h.nrows()
    }

    /// `|h_k^H w_l|^2`.
    pub fn cross_gain(&self, k: usize, l: usize) -> f64 {
        self.h.column(k).dotc(&self.w.column(l)).norm_sqr()
    }

    /// Residual interference `sum_{l != k} p_l |h_k^H w_l|^2` for every user.
    pub fn interference(&self, p: &[f64]) -> Vec<f64> {
        let k = self.n_users();
        if k <= EXPLICIT_CROSS_LIMIT {
            return (0..k)
                .map(|i| {
                    (0..k)
                        .filter(|&l| l != i)
                        .map(|l| p[l] * self.cross_gain(i, l))
                        .sum()
                })
                .collect();
        }
        let m = self.n_antennas();
        let mut q = DMatrix::<Complex64>::zeros(m, m);
        for (l, &pl) in p.iter().enumerate() {
            let wl = self.w.column(l);
            q += (&wl * wl.adjoint()) * Complex64::from(pl);
        }
        (0..k)
            .map(|i| {
                let hk = self.h.column(i);
                let total = hk.dotc(&(&q * hk)).re;
                (total - p[i] * self.eff_gain[i]).max(0.0)
            })
            .collect()
    }
}

/// `W = zeta (H H^H + omega I)^{-1} H` with `zeta` chosen so `||W||_F = 1`.
pub fn rzf_precoder(h: &DMatrix<Complex64>, omega: f64) -> Result<PrecodingState> {
    let (m, k) = h.shape();
    if m == 0 || k == 0 {
        return Err(Error::arg("rzf_precoder", "channel matrix is empty"));
    }
    if !(omega >= 0.0) || !omega.is_finite() {
        return Err(Error::arg("rzf_precoder", "regularization must be finite and >= 0"));
    }
    let gram = h * h.adjoint() + DMatrix::<Complex64>::identity(m, m) * Complex64::from(omega);
    let inv = gram
        .try_inverse()
        .filter(|inv| inv.iter().all(|z| z.re.is_finite() && z.im.is_finite()))
        .ok_or_else(|| {
            Error::arg(
                "rzf_precoder",
                "H H^H + omega I is singular; use omega > 0 for rank-deficient channels",
            )
        })?;
    let raw = inv * h;
    let norm = raw.norm();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::arg("rzf_precoder", "precoder has zero norm"));
    }
    let zeta = 1.0 / norm;
    let w = raw * Complex64::from(zeta);
    let eff_gain = (0..k).map(|i| h.column(i).dotc(&w.column(i)).norm_sqr()).collect();
    Ok(PrecodingState {
        h: h.clone(),
        w,
        zeta,
        omega,
        eff_gain,
    })
}

/// Received SINR of user `k` in a cell:
/// `p_k |h_k^H w_k|^2 / (sum_{l != k} p_l |h_k^H w_l|^2 + 1 / snr)`.
pub fn rzf_sinr(state: &PrecodingState, p: &[f64], k: usize, transmit_snr: f64) -> f64 {
    let interf: f64 = (0..state.n_users())
        .filter(|&l| l != k)
        .map(|l| p[l] * state.cross_gain(k, l))
        .sum();
    p[k] * state.eff_gain[k] / (interf + 1.0 / transmit_snr)
}

/// One (NIB, RAT) group as the allocator sees it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccessCell {
    pub nib: usize,
    pub rat: usize,
    /// Global user ids, aligned with the per-user vectors below.
    pub users: Vec<usize>,
    /// Effective SNR coefficient `c_k = snr_k |h_k^H w_k|^2`.
    pub gain: Vec<f64>,
    /// Whether the user's traffic rides the backhaul.
    pub capped: Vec<bool>,
    pub bandwidth_hz: f64,
    pub min_rate_bps: f64,
}

impl AccessCell {
    pub fn len(&self) -> usize {
        self.users.len()
    }

    pub fn is_empty(&self) -> bool {
        self.users.is_empty()
    }

    /// Smallest power fraction meeting the QoS floor, `(2^{R_min/B} - 1) / c`.
    pub fn p_min(&self, k: usize) -> f64 {
        (2f64.powf(self.min_rate_bps / self.bandwidth_hz) - 1.0) / self.gain[k]
    }

    pub fn rate(&self, k: usize, p: f64) -> f64 {
        self.bandwidth_hz * (self.gain[k] * p).ln_1p() / LN_2
    }

    pub fn rates(&self, p: &[f64]) -> Vec<f64> {
        (0..self.len()).map(|k| self.rate(k, p[k])).collect()
    }

    /// `dR_k/dp_k = B c / (ln 2 (1 + c p))`.
    pub fn rate_slope(&self, k: usize, p: f64) -> f64 {
        self.bandwidth_hz * self.gain[k] / (LN_2 * (1.0 + self.gain[k] * p))
    }
}

/// Backhaul coupling: which cap each cell answers to and the cap values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackhaulCap {
    pub mode: CapMode,
    /// `[R_b*]` for the global mode, one rate per NIB otherwise.
    pub caps: Vec<f64>,
}

impl BackhaulCap {
    pub fn unlimited() -> Self {
        Self {
            mode: CapMode::Global,
            caps: vec![f64::INFINITY],
        }
    }

    fn group(&self, cell: &AccessCell) -> usize {
        match self.mode {
            CapMode::Global => 0,
            CapMode::PerNib => cell.nib,
        }
    }

    fn cap(&self, group: usize) -> f64 {
        self.caps.get(group).copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccessAllocation {
    /// Power fractions per cell, aligned with `AccessCell::users`.
    pub p: Vec<Vec<f64>>,
    /// Interference-free rates implied by `p`.
    pub rates: Vec<Vec<f64>>,
    pub objective: f64,
    pub trace: Vec<f64>,
    pub qos_met: bool,
    pub cap_met: bool,
    pub iterations: usize,
    pub converged: bool,
}

pub fn objective(cells: &[AccessCell], p: &[Vec<f64>]) -> f64 {
    cells
        .iter()
        .zip(p)
        .map(|(c, pc)| (0..c.len()).map(|k| c.rate(k, pc[k])).sum::<f64>())
        .sum()
}

/// Sum rate of backhaul-dependent users per cap group.
pub fn capped_rates(cells: &[AccessCell], p: &[Vec<f64>], cap: &BackhaulCap) -> Vec<f64> {
    let mut out = vec![0.0; cap.caps.len()];
    for (c, pc) in cells.iter().zip(p) {
        let g = cap.group(c);
        for k in 0..c.len() {
            if c.capped[k] {
                if g >= out.len() {
                    out.resize(g + 1, 0.0);
                }
                out[g] += c.rate(k, pc[k]);
            }
        }
    }
    out
}

/// Gradient of the capped sum rate with respect to every power fraction.
pub fn capped_gradient(cells: &[AccessCell], p: &[Vec<f64>]) -> Vec<Vec<f64>> {
    cells
        .iter()
        .zip(p)
        .map(|(c, pc)| {
            (0..c.len())
                .map(|k| if c.capped[k] { c.rate_slope(k, pc[k]) } else { 0.0 })
                .collect()
        })
        .collect()
}

/// Equal split inside every cell.
pub fn uniform_allocation(cells: &[AccessCell], cap: &BackhaulCap) -> Result<AccessAllocation> {
    if cells.is_empty() || cells.iter().any(AccessCell::is_empty) {
        return Err(Error::arg("uniform_allocation", "cells must be non-empty"));
    }
    let p: Vec<Vec<f64>> = cells.iter().map(|c| vec![1.0 / c.len() as f64; c.len()]).collect();
    Ok(finish(cells, cap, p, Vec::new(), 0, true))
}

/// Throughput the backhaul can actually carry: in every cap group whose
/// backhaul-dependent users exceed the cap, their rates are scaled down
/// proportionally so the group sum equals the cap. `rates` is per cell.
pub fn delivered_rates(cells: &[AccessCell], rates: &[Vec<f64>], cap: &BackhaulCap) -> Vec<Vec<f64>> {
    let mut load = vec![0.0; cap.caps.len()];
    for (c, r) in cells.iter().zip(rates) {
        let g = cap.group(c);
        if g >= load.len() {
            load.resize(g + 1, 0.0);
        }
        load[g] += (0..c.len()).filter(|&k| c.capped[k]).map(|k| r[k]).sum::<f64>();
    }
    let scale: Vec<f64> = load
        .iter()
        .enumerate()
        .map(|(g, &l)| if l > cap.cap(g) { cap.cap(g) / l } else { 1.0 })
        .collect();
    cells
        .iter()
        .zip(rates)
        .map(|(c, r)| {
            let s = scale[cap.group(c)];
            (0..c.len()).map(|k| if c.capped[k] { r[k] * s } else { r[k] }).collect()
        })
        .collect()
}

fn finish(
    cells: &[AccessCell],
    cap: &BackhaulCap,
    p: Vec<Vec<f64>>,
    trace: Vec<f64>,
    iterations: usize,
    converged: bool,
) -> AccessAllocation {
    let rates: Vec<Vec<f64>> = cells.iter().zip(&p).map(|(c, pc)| c.rates(pc)).collect();
    let qos_met = cells
        .iter()
        .zip(&rates)
        .all(|(c, r)| r.iter().all(|&x| x >= c.min_rate_bps * (1.0 - 1e-9)));
    let cap_met = capped_rates(cells, &p, cap)
        .iter()
        .enumerate()
        .all(|(g, &r)| r <= cap.cap(g) * (1.0 + 1e-9) + 1e-9);
    AccessAllocation {
        objective: objective(cells, &p),
        p,
        rates,
        trace,
        qos_met,
        cap_met,
        iterations,
        converged,
    }
}

fn check_inputs(cells: &[AccessCell], cap: &BackhaulCap) -> Result<Vec<Vec<f64>>> {
    if cells.is_empty() {
        return Err(Error::arg("sca_allocate", "no cells"));
    }
    let mut pmin = Vec::with_capacity(cells.len());
    let mut bad = Vec::new();
    for c in cells {
        if c.is_empty() || c.gain.len() != c.len() || c.capped.len() != c.len() {
            return Err(Error::arg("sca_allocate", "cell vectors are inconsistent or empty"));
        }
        if c.gain.iter().any(|&g| !(g > 0.0) || !g.is_finite()) {
            return Err(Error::arg("sca_allocate", "effective gains must be positive"));
        }
        let pm: Vec<f64> = (0..c.len()).map(|k| c.p_min(k)).collect();
        let total: f64 = pm.iter().sum();
        if pm.iter().any(|&x| x > 1.0) || total > 1.0 {
            bad.push(format!(
                "NIB {} RAT {}: QoS floors need {:.4} of the power budget (users {:?})",
                c.nib,
                c.rat,
                total,
                c.users
                    .iter()
                    .zip(&pm)
                    .filter(|(_, &x)| x > 1.0 / c.len() as f64)
                    .map(|(u, _)| *u)
                    .collect::<Vec<_>>()
            ));
        }
        pmin.push(pm);
    }
    if !bad.is_empty() {
        return Err(Error::Infeasible(bad.join("; ")));
    }
    let floor = capped_rates(
        cells,
        &pmin,
        cap,
    );
    for (g, &r) in floor.iter().enumerate() {
        if r > cap.cap(g) * (1.0 + 1e-12) {
            return Err(Error::Infeasible(format!(
                "backhaul cap {:.6e} bps of group {g} is below the minimum capped access rate {:.6e} bps",
                cap.cap(g),
                r
            )));
        }
    }
    Ok(pmin)
}

/// Uniform split lifted onto the QoS floors, then capped users pulled toward
/// their floors until the backhaul cap holds.
fn initial_point(cells: &[AccessCell], cap: &BackhaulCap, pmin: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut p: Vec<Vec<f64>> = cells
        .iter()
        .zip(pmin)
        .map(|(c, pm)| {
            let n = c.len() as f64;
            let uni = 1.0 / n;
            if pm.iter().all(|&x| x <= uni) {
                vec![uni; c.len()]
            } else {
                let slack = (1.0 - pm.iter().sum::<f64>()).max(0.0) / n;
                pm.iter().map(|&x| x + slack).collect()
            }
        })
        .collect();
    let start = p.clone();
    let groups = cap.caps.len().max(
        cells
            .iter()
            .map(|c| cap.group(c) + 1)
            .max()
            .unwrap_or(0),
    );
    for g in 0..groups {
        let in_group = |c: &AccessCell| cap.group(c) == g;
        let rate_at = |t: f64| -> f64 {
            cells
                .iter()
                .enumerate()
                .filter(|(_, c)| in_group(c))
                .map(|(i, c)| {
                    (0..c.len())
                        .filter(|&k| c.capped[k])
                        .map(|k| c.rate(k, pmin[i][k] + t * (start[i][k] - pmin[i][k])))
                        .sum::<f64>()
                })
                .sum()
        };
        let limit = cap.cap(g);
        if rate_at(1.0) <= limit {
            continue;
        }
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if rate_at(mid) <= limit {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        for (i, c) in cells.iter().enumerate() {
            if in_group(c) {
                for k in 0..c.len() {
                    if c.capped[k] {
                        p[i][k] = pmin[i][k] + lo * (start[i][k] - pmin[i][k]);
                    }
                }
            }
        }
    }
    p
}

/// Water-filling in one cell for a given backhaul price `lambda`:
/// `p_k = clip(B / (ln2 (lambda a_k + mu)) - 1/c_k, p_min, 1)` with `mu >= 0`
/// the smallest price keeping `sum p <= 1`.
fn water_fill(cell: &AccessCell, lambda: f64, slope: &[f64], pmin: &[f64], out: &mut [f64]) {
    let level = |mu: f64, out: &mut [f64]| -> f64 {
        let mut s = 0.0;
        for k in 0..cell.len() {
            let price = lambda * slope[k] + mu;
            let v = if price > 0.0 {
                cell.bandwidth_hz / (LN_2 * price) - 1.0 / cell.gain[k]
            } else {
                1.0
            };
            out[k] = v.clamp(pmin[k], 1.0);
            s += out[k];
        }
        s
    };
    if level(0.0, out) <= 1.0 {
        return;
    }
    let mut hi = (0..cell.len())
        .map(|k| cell.bandwidth_hz * cell.gain[k] / (LN_2 * (1.0 + cell.gain[k] * pmin[k])))
        .fold(0.0, f64::max);
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if level(mid, out) <= 1.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let s = level(hi, out);
    if s > 1.0 {
        // Rounding at the floor-dominated end; scale the slack above the floors.
        let extra: f64 = out.iter().zip(pmin).map(|(x, m)| x - m).sum();
        let room = 1.0 - pmin.iter().sum::<f64>();
        let t = if extra > 0.0 { (room / extra).clamp(0.0, 1.0) } else { 0.0 };
        for (x, m) in out.iter_mut().zip(pmin) {
            *x = m + t * (*x - m);
        }
    }
}

/// Solves the concave surrogate around `base`: maximize the true objective
/// subject to the simplex, the box, and the linearized backhaul cap.
fn solve_surrogate(
    cells: &[AccessCell],
    cap: &BackhaulCap,
    pmin: &[Vec<f64>],
    base: &[Vec<f64>],
) -> Vec<Vec<f64>> {
    let slope = capped_gradient(cells, base);
    let base_rate = capped_rates(cells, base, cap);
    let mut p: Vec<Vec<f64>> = cells.iter().map(|c| vec![0.0; c.len()]).collect();
    let groups = base_rate.len();
    for g in 0..groups {
        let idx: Vec<usize> = (0..cells.len()).filter(|&i| cap.group(&cells[i]) == g).collect();
        if idx.is_empty() {
            continue;
        }
        let limit = cap.cap(g) - base_rate[g];
        let solve = |lambda: f64, p: &mut Vec<Vec<f64>>| -> f64 {
            let mut lin = 0.0;
            for &i in &idx {
                water_fill(&cells[i], lambda, &slope[i], &pmin[i], &mut p[i]);
                for k in 0..cells[i].len() {
                    lin += slope[i][k] * (p[i][k] - base[i][k]);
                }
            }
            lin
        };
        if solve(0.0, &mut p) <= limit || !limit.is_finite() {
            continue;
        }
        let mut hi = 1.0;
        let mut grow = 0;
        while solve(hi, &mut p) > limit && grow < 200 {
            hi *= 2.0;
            grow += 1;
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if solve(mid, &mut p) <= limit {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        if solve(hi, &mut p) > limit {
            // Stay on the previous iterate for this group.
            for &i in &idx {
                p[i].clone_from(&base[i]);
            }
        }
    }
    p
}

/// SCA power allocation. The trace holds the true objective after every
/// accepted iterate and never decreases.
pub fn sca_allocate(
    cells: &[AccessCell],
    cap: &BackhaulCap,
    max_iters: usize,
    tol: f64,
) -> Result<AccessAllocation> {
    let pmin = check_inputs(cells, cap)?;
    let mut p = initial_point(cells, cap, &pmin);
    let mut f = objective(cells, &p);
    let mut trace = vec![f];
    let mut converged = false;
    let mut iterations = 0;
    for _ in 0..max_iters {
        iterations += 1;
        let next = solve_surrogate(cells, cap, &pmin, &p);
        let fn_ = objective(cells, &next);
        let feasible = capped_rates(cells, &next, cap)
            .iter()
            .enumerate()
            .all(|(g, &r)| r <= cap.cap(g) * (1.0 + 1e-12));
        if !(fn_ >= f) || !feasible {
            converged = true;
            break;
        }
        let gain = fn_ - f;
        p = next;
        f = fn_;
        trace.push(f);
        if gain <= tol * f.abs().max(1.0) {
            converged = true;
            break;
        }
    }
    Ok(finish(cells, cap, p, trace, iterations, converged))
}

/// Rates and SINRs with and without the residual intra-cell interference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRates {
    pub idealized_sinr: Vec<f64>,
    pub actual_sinr: Vec<f64>,
    pub idealized_rate: Vec<f64>,
    pub actual_rate: Vec<f64>,
}

/// `transmit_snr[k] = P / sigma_k^2` for each user of the cell.
pub fn access_rates(
    p: &[f64],
    precoding: &PrecodingState,
    transmit_snr: &[f64],
    bandwidth_hz: f64,
) -> CellRates {
    let interf = precoding.interference(p);
    let n = precoding.n_users();
    let mut out = CellRates {
        idealized_sinr: Vec::with_capacity(n),
        actual_sinr: Vec::with_capacity(n),
        idealized_rate: Vec::with_capacity(n),
        actual_rate: Vec::with_capacity(n),
    };
    for k in 0..n {
        let s = p[k] * precoding.eff_gain[k];
        let ideal = transmit_snr[k] * s;
        let actual = s / (interf[k] + 1.0 / transmit_snr[k]);
        out.idealized_sinr.push(ideal);
        out.actual_sinr.push(actual);
        out.idealized_rate.push(bandwidth_hz * ideal.ln_1p() / LN_2);
        out.actual_rate.push(bandwidth_hz * actual.ln_1p() / LN_2);
    }
    out
}
