//! The sequential planning loop, Monte Carlo sweeps and persistence.

use log::{debug, info, warn};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::access::{
    access_rates, delivered_rates, rzf_precoder, sca_allocate, uniform_allocation, AccessAllocation, AccessCell, BackhaulCap,
    CellRates,
};
use crate::association::{
    associate_max_sinr, association_sinrs, candidate_links, AssociationMap, CandidateLink, LinkParams,
};
use crate::backhaul::{noma_allocate, oma_baseline, NomaAllocation};
use crate::beamopt::{optimize_beam, provisional_geometry, BeamGeometry};
use crate::channel::{
    access_channel_with_fading, build_backhaul_channel, haps_fspl, haps_peak_gain, noise_power_w, HapsLink,
};
use crate::deployment::{coverage_matrix, gdc_exact, gdc_greedy, hex_baseline, DeploymentPlan};
use crate::error::{Error, Result};
use crate::geometry::Point2;
use crate::metrics::{
    aee_access, aee_backhaul, ase_backhaul, jain_index, se_avg_access, summarize, MetricBundle, Summary,
};
use crate::rng::{substream, Stream};
use crate::scenario::{generate_users_indexed, CapMode, GroundUser, ScenarioConfig, UserSet};
use crate::units::{db_to_lin, dbw_to_w};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

fn stream_index(replica: u64, iteration: usize, trial: usize) -> u64 {
    (replica << 40) | ((iteration as u64) << 20) | trial as u64
}

/// Deployment for one radius: exact below the configured cap, greedy above.
pub fn deploy(points: &[Point2], r: f64, exact_cap: usize) -> Result<DeploymentPlan> {
    let d = coverage_matrix(points, r)?;
    if d.len() <= exact_cap {
        gdc_exact(&d, exact_cap)
    } else {
        Ok(gdc_greedy(&d))
    }
}

/// Carrier and wavelength used for beam geometry: the longest wavelength
/// gives the most restrictive diffraction floor.
fn geometry_carrier(cfg: &ScenarioConfig) -> (f64, f64) {
    let rat = cfg
        .rats
        .iter()
        .max_by(|a, b| a.wavelength().total_cmp(&b.wavelength()))
        .expect("validated config has RATs");
    (rat.carrier_freq_hz, rat.wavelength())
}

pub fn provisional_beams(cfg: &ScenarioConfig, plan: &DeploymentPlan) -> Result<Vec<BeamGeometry>> {
    let (fc, lambda) = geometry_carrier(cfg);
    plan.centers
        .iter()
        .map(|&c| provisional_geometry(c, plan.radius, &cfg.environment, fc, &cfg.nib, lambda))
        .collect()
}

pub fn haps_link(cfg: &ScenarioConfig) -> HapsLink {
    HapsLink {
        center: cfg.haps.center,
        altitude_m: cfg.haps.altitude_m,
        tx_power_w: cfg.haps.effective_tx_power(),
        wavelength_m: cfg.haps.wavelength(),
        aperture_efficiency: cfg.haps.aperture_efficiency,
        hpbw_deg: cfg.haps.hpbw_deg,
        bandwidth_hz: cfg.haps.bandwidth_hz,
    }
}

/// HAPS power giving a reference SNR `P_H G0 / (sigma^2 FSPL(H))` at the
/// sub-HAPS point.
pub fn haps_power_for_snr(cfg: &ScenarioConfig, snr_db: f64) -> Result<f64> {
    let h = &cfg.haps;
    let fspl = haps_fspl(h.altitude_m, h.wavelength())?;
    let g0 = haps_peak_gain(h.aperture_efficiency, h.hpbw_deg);
    let noise = noise_power_w(h.bandwidth_hz, cfg.nib.noise_figure_db);
    Ok(db_to_lin(snr_db) * noise * fspl / g0)
}

/// Association plus beam optimization. Returns the surviving (non-empty)
/// NIBs renumbered densely, their geometries, the map, and each user's
/// fading vector toward the assigned NIB.
pub struct Placement {
    pub deployed_ids: Vec<usize>,
    pub geometries: Vec<BeamGeometry>,
    pub association: AssociationMap,
    pub fading: Vec<Vec<Complex64>>,
    pub association_sinr: Vec<f64>,
}

pub fn place(
    cfg: &ScenarioConfig,
    users: &[GroundUser],
    beams: &[BeamGeometry],
    rng_index: u64,
) -> Result<Placement> {
    let params = LinkParams::from_config(cfg);
    let mut rng = substream(cfg.seed, Stream::AccessFading, rng_index);
    let links = candidate_links(users, beams, &params, &mut rng)?;
    let sinrs = association_sinrs(users, &links, &params)?;
    let map = associate_max_sinr(users, &links, &sinrs, beams.len(), cfg.rats.len())?;
    let deployed_ids: Vec<usize> = (0..beams.len()).filter(|&j| !map.members[j].is_empty()).collect();
    let mut renum = vec![usize::MAX; beams.len()];
    for (new, &old) in deployed_ids.iter().enumerate() {
        renum[old] = new;
    }
    let nib_of: Vec<usize> = map.nib_of.iter().map(|&j| renum[j]).collect();
    let association = AssociationMap::new(nib_of, users, deployed_ids.len(), cfg.rats.len());
    let (fc, lambda) = geometry_carrier(cfg);
    let geometries = association
        .members
        .iter()
        .map(|m| {
            let pts: Vec<Point2> = m.iter().map(|&k| users[k].position).collect();
            optimize_beam(&pts, &cfg.environment, fc, &cfg.nib, lambda, cfg.bcd_passes)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut fading = Vec::with_capacity(users.len());
    let mut association_sinr = Vec::with_capacity(users.len());
    for (k, ls) in links.iter().enumerate() {
        let j = deployed_ids[association.nib_of[k]];
        let l = pick(ls, j);
        fading.push(ls[l].channel.fading.clone());
        association_sinr.push(sinrs[k][l]);
    }
    Ok(Placement {
        deployed_ids,
        geometries,
        association,
        fading,
        association_sinr,
    })
}

fn pick(links: &[CandidateLink], nib: usize) -> usize {
    links.iter().position(|c| c.nib == nib).expect("assigned NIB is a candidate")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserRow {
    pub user: usize,
    pub nib: usize,
    pub rat: usize,
    pub backhaul_dependent: bool,
    pub association_sinr: f64,
    pub p: f64,
    pub rate_idealized_bps: f64,
    pub rate_actual_bps: f64,
    pub sinr_actual: f64,
    pub p_uniform: f64,
    pub rate_uniform_bps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackhaulRow {
    pub nib: usize,
    pub sic_position: usize,
    pub aleph: f64,
    pub fraction: f64,
    pub sinr: f64,
    pub rate_bps: f64,
    pub served: bool,
    pub oma_rate_bps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackhaulMetrics {
    pub noma_sum_rate_bps: f64,
    pub noma_sum_rate_reference_bps: f64,
    pub oma_sum_rate_bps: f64,
    pub noma_aee_bpj: f64,
    pub oma_aee_bpj: f64,
    pub noma_ase: f64,
    pub oma_ase: f64,
    pub haps_power_w: f64,
    pub degraded: bool,
}

/// Backhaul stage for a set of beams: channels, NOMA and OMA.
pub fn backhaul_stage(
    cfg: &ScenarioConfig,
    geometries: &[BeamGeometry],
    rng_index: u64,
) -> Result<(NomaAllocation, Vec<f64>, BackhaulMetrics)> {
    let link = haps_link(cfg);
    let mut rng = substream(cfg.seed, Stream::BackhaulFading, rng_index);
    let aleph = geometries
        .iter()
        .map(|g| {
            build_backhaul_channel(
                g.center,
                g.altitude_m,
                cfg.nib.noise_figure_db,
                &link,
                cfg.rician_k_factor,
                &mut rng,
            )
            .map(|c| c.aleph)
        })
        .collect::<Result<Vec<_>>>()?;
    let b_h = cfg.haps.bandwidth_hz;
    let noma = noma_allocate(&aleph, cfg.nib.backhaul_target_rate_bps, b_h)?;
    let oma = oma_baseline(&aleph, b_h);
    let pc = cfg.nib.circuit_power_backhaul_w;
    let r_cov = cfg.coverage_radius();
    let noma_rates = noma.by_nib(&noma.rates);
    let noma_f = noma.by_nib(&noma.fractions);
    let oma_f = vec![1.0 / aleph.len() as f64; aleph.len()];
    let m = BackhaulMetrics {
        noma_sum_rate_bps: noma.sum_rate,
        noma_sum_rate_reference_bps: noma.sum_rate_reference,
        oma_sum_rate_bps: oma.iter().sum(),
        noma_aee_bpj: aee_backhaul(&noma_rates, &noma_f, link.tx_power_w, pc),
        oma_aee_bpj: aee_backhaul(&oma, &oma_f, link.tx_power_w, pc),
        noma_ase: ase_backhaul(&noma_rates, b_h, r_cov),
        oma_ase: ase_backhaul(&oma, b_h, r_cov),
        haps_power_w: link.tx_power_w,
        degraded: noma.degraded,
    };
    Ok((noma, oma, m))
}

fn backhaul_rows(noma: &NomaAllocation, oma: &[f64]) -> Vec<BackhaulRow> {
    let mut rows: Vec<BackhaulRow> = noma
        .order
        .iter()
        .enumerate()
        .map(|(pos, &nib)| BackhaulRow {
            nib,
            sic_position: pos,
            aleph: noma.aleph[pos],
            fraction: noma.fractions[pos],
            sinr: noma.sinr[pos],
            rate_bps: noma.rates[pos],
            served: noma.served[pos],
            oma_rate_bps: oma[nib],
        })
        .collect();
    rows.sort_by_key(|r| r.nib);
    rows
}

/// Access cells, precoders and per-user SNRs for a placement.
pub struct AccessSetup {
    pub cells: Vec<AccessCell>,
    pub precoding: Vec<crate::access::PrecodingState>,
    pub snr: Vec<Vec<f64>>,
}

pub fn access_setup(cfg: &ScenarioConfig, users: &[GroundUser], placement: &Placement) -> Result<AccessSetup> {
    let params = LinkParams::from_config(cfg);
    let mut groups: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for (k, &j) in placement.association.nib_of.iter().enumerate() {
        groups.entry((j, users[k].rat)).or_default().push(k);
    }
    let mut setup = AccessSetup {
        cells: Vec::new(),
        precoding: Vec::new(),
        snr: Vec::new(),
    };
    for ((j, rat), members) in groups {
        let pose = placement.geometries[j].pose();
        let rp = &cfg.rats[rat];
        let chans = members
            .iter()
            .map(|&k| {
                access_channel_with_fading(
                    users[k].position,
                    &pose,
                    rp.carrier_freq_hz,
                    &params.env,
                    params.g_max,
                    placement.fading[k].clone(),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        let m = params.n_antennas;
        let h = DMatrix::<Complex64>::from_fn(m, members.len(), |a, i| chans[i].h[a]);
        let refs: Vec<&GroundUser> = members.iter().map(|&k| &users[k]).collect();
        let state = rzf_precoder(&h, params.omega(&refs))?;
        let snr: Vec<f64> = members.iter().map(|&k| params.transmit_snr(&users[k])).collect();
        setup.cells.push(AccessCell {
            nib: j,
            rat,
            gain: snr.iter().zip(&state.eff_gain).map(|(s, g)| s * g).collect(),
            capped: members.iter().map(|&k| users[k].backhaul_dependent).collect(),
            users: members,
            bandwidth_hz: rp.bandwidth_hz,
            min_rate_bps: rp.min_rate_bps,
        });
        setup.precoding.push(state);
        setup.snr.push(snr);
    }
    Ok(setup)
}

/// Per-cell rates, with backhaul-dependent users limited to what the backhaul
/// delivers.
fn cell_rates(setup: &AccessSetup, alloc: &AccessAllocation, cap: &BackhaulCap) -> Vec<CellRates> {
    let mut out: Vec<CellRates> = setup
        .cells
        .iter()
        .enumerate()
        .map(|(i, c)| access_rates(&alloc.p[i], &setup.precoding[i], &setup.snr[i], c.bandwidth_hz))
        .collect();
    let ideal: Vec<Vec<f64>> = out.iter().map(|r| r.idealized_rate.clone()).collect();
    let actual: Vec<Vec<f64>> = out.iter().map(|r| r.actual_rate.clone()).collect();
    let ideal = delivered_rates(&setup.cells, &ideal, cap);
    let actual = delivered_rates(&setup.cells, &actual, cap);
    for ((r, i), a) in out.iter_mut().zip(ideal).zip(actual) {
        r.idealized_rate = i;
        r.actual_rate = a;
    }
    out
}

fn access_metrics(
    cfg: &ScenarioConfig,
    users: &[GroundUser],
    setup: &AccessSetup,
    alloc: &AccessAllocation,
    rates: &[CellRates],
    backhaul: &BackhaulMetrics,
    noma: &NomaAllocation,
) -> MetricBundle {
    let mut ideal = vec![0.0; users.len()];
    let mut actual = vec![0.0; users.len()];
    let mut p = vec![0.0; users.len()];
    for (i, c) in setup.cells.iter().enumerate() {
        for (n, &k) in c.users.iter().enumerate() {
            ideal[k] = rates[i].idealized_rate[n];
            actual[k] = rates[i].actual_rate[n];
            p[k] = alloc.p[i][n];
        }
    }
    let bw: Vec<f64> = users.iter().map(|u| cfg.rats[u.rat].bandwidth_hz).collect();
    let pw: Vec<f64> = users.iter().map(|u| cfg.nib.tx_power_per_rat_w[u.rat]).collect();
    let jain = jain_index(&ideal);
    MetricBundle {
        sum_rate_access_bps: ideal.iter().sum(),
        sum_rate_access_actual_bps: actual.iter().sum(),
        sum_rate_backhaul_bps: noma.sum_rate,
        aee_backhaul_bpj: backhaul.noma_aee_bpj,
        ase_backhaul_bps_hz_m2: backhaul.noma_ase,
        aee_access_bpj: aee_access(&ideal, &p, &pw, cfg.nib.circuit_power_access_w),
        se_avg_access_bps_hz: se_avg_access(&ideal, &bw),
        jain: jain.index,
        jain_degenerate: jain.degenerate,
    }
}

/// Everything one fading realization of one epoch produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialDetail {
    pub trial: usize,
    pub deployed_ids: Vec<usize>,
    pub geometries: Vec<BeamGeometry>,
    pub nib_of: Vec<usize>,
    pub backhaul: Vec<BackhaulRow>,
    pub backhaul_metrics: BackhaulMetrics,
    pub users: Vec<UserRow>,
    pub sca_trace: Vec<f64>,
    pub sca_converged: bool,
    pub cap_met: bool,
    pub nupa: MetricBundle,
    pub upa: MetricBundle,
    pub upa_qos_met: bool,
    pub upa_cap_met: bool,
}

pub fn run_trial(
    cfg: &ScenarioConfig,
    users: &[GroundUser],
    beams: &[BeamGeometry],
    rng_index: u64,
    trial: usize,
) -> Result<TrialDetail> {
    let placement = place(cfg, users, beams, rng_index)?;
    let (noma, oma, bm) = backhaul_stage(cfg, &placement.geometries, rng_index)?;
    let setup = access_setup(cfg, users, &placement)?;
    let cap = match cfg.access.cap_mode {
        CapMode::Global => BackhaulCap {
            mode: CapMode::Global,
            caps: vec![noma.sum_rate],
        },
        CapMode::PerNib => BackhaulCap {
            mode: CapMode::PerNib,
            caps: noma.by_nib(&noma.rates),
        },
    };
    let alloc = sca_allocate(&setup.cells, &cap, cfg.access.sca_max_iters, cfg.access.sca_tol)?;
    let upa = uniform_allocation(&setup.cells, &cap)?;
    let nupa_rates = cell_rates(&setup, &alloc, &cap);
    let upa_rates = cell_rates(&setup, &upa, &cap);
    let mut rows: Vec<Option<UserRow>> = vec![None; users.len()];
    for (i, c) in setup.cells.iter().enumerate() {
        for (n, &k) in c.users.iter().enumerate() {
            rows[k] = Some(UserRow {
                user: users[k].id,
                nib: c.nib,
                rat: c.rat,
                backhaul_dependent: users[k].backhaul_dependent,
                association_sinr: placement.association_sinr[k],
                p: alloc.p[i][n],
                rate_idealized_bps: nupa_rates[i].idealized_rate[n],
                rate_actual_bps: nupa_rates[i].actual_rate[n],
                sinr_actual: nupa_rates[i].actual_sinr[n],
                p_uniform: upa.p[i][n],
                rate_uniform_bps: upa_rates[i].idealized_rate[n],
            });
        }
    }
    Ok(TrialDetail {
        trial,
        nupa: access_metrics(cfg, users, &setup, &alloc, &nupa_rates, &bm, &noma),
        upa: access_metrics(cfg, users, &setup, &upa, &upa_rates, &bm, &noma),
        upa_qos_met: upa.qos_met,
        upa_cap_met: upa.cap_met,
        backhaul: backhaul_rows(&noma, &oma),
        backhaul_metrics: bm,
        users: rows.into_iter().map(|r| r.expect("every user is in a cell")).collect(),
        sca_trace: alloc.trace.clone(),
        sca_converged: alloc.converged,
        cap_met: alloc.cap_met,
        deployed_ids: placement.deployed_ids,
        geometries: placement.geometries,
        nib_of: placement.association.nib_of,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochSummary {
    pub iteration: usize,
    pub radius_m: f64,
    pub n_deployed: usize,
    pub n_hex: usize,
    pub haps_power_w: f64,
    pub feasible: bool,
    pub feasible_trials: usize,
    pub trials: usize,
    pub reason: Option<String>,
    /// Trial-averaged metrics; absent for infeasible epochs.
    pub nupa: Option<MetricBundle>,
    pub upa: Option<MetricBundle>,
    pub epsilon_bps: Option<f64>,
    /// Running maximum of the access sum rate over feasible epochs so far.
    pub best_sum_rate_bps: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochDetail {
    pub iteration: usize,
    pub plan: DeploymentPlan,
    pub trial: TrialDetail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunArtifacts {
    pub version: String,
    pub seed: u64,
    pub replica: u64,
    pub config_hash: String,
    pub config: ScenarioConfig,
    pub n_users: usize,
    pub epochs: Vec<EpochSummary>,
    pub best_epoch: usize,
    /// First feasible trial of the best epoch.
    pub best: EpochDetail,
}

fn mean_bundle(bs: &[&MetricBundle]) -> MetricBundle {
    let m = |f: fn(&MetricBundle) -> f64| bs.iter().map(|b| f(b)).sum::<f64>() / bs.len() as f64;
    MetricBundle {
        sum_rate_access_bps: m(|b| b.sum_rate_access_bps),
        sum_rate_access_actual_bps: m(|b| b.sum_rate_access_actual_bps),
        sum_rate_backhaul_bps: m(|b| b.sum_rate_backhaul_bps),
        aee_backhaul_bpj: m(|b| b.aee_backhaul_bpj),
        ase_backhaul_bps_hz_m2: m(|b| b.ase_backhaul_bps_hz_m2),
        aee_access_bpj: m(|b| b.aee_access_bpj),
        se_avg_access_bps_hz: m(|b| b.se_avg_access_bps_hz),
        jain: m(|b| b.jain),
        jain_degenerate: bs.iter().all(|b| b.jain_degenerate),
    }
}

struct EpochOutcome {
    summary: EpochSummary,
    detail: Option<EpochDetail>,
}

fn run_epoch(cfg: &ScenarioConfig, users: &UserSet, replica: u64, iteration: usize, r: f64) -> EpochOutcome {
    let pts = users.positions();
    let mut summary = EpochSummary {
        iteration,
        radius_m: r,
        n_deployed: 0,
        n_hex: hex_baseline(cfg.coverage_radius(), r.min(cfg.coverage_radius()), cfg.haps.center)
            .map(|p| p.count())
            .unwrap_or(0),
        haps_power_w: cfg.haps.effective_tx_power(),
        feasible: false,
        feasible_trials: 0,
        trials: cfg.trials,
        reason: None,
        nupa: None,
        upa: None,
        epsilon_bps: None,
        best_sum_rate_bps: None,
    };
    let staged = deploy(&pts, r, cfg.exact_cap).and_then(|plan| {
        let beams = provisional_beams(cfg, &plan)?;
        Ok((plan, beams))
    });
    let (plan, beams) = match staged {
        Ok(x) => x,
        Err(e) => {
            summary.reason = Some(e.to_string());
            return EpochOutcome { summary, detail: None };
        }
    };
    summary.n_deployed = plan.count();
    let results: Vec<Result<TrialDetail>> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| run_trial(cfg, &users.users, &beams, stream_index(replica, iteration, t), t))
        .collect();
    let mut reasons = Vec::new();
    let mut ok = Vec::new();
    for r in results {
        match r {
            Ok(d) => ok.push(d),
            Err(e) => reasons.push(e.to_string()),
        }
    }
    summary.feasible_trials = ok.len();
    if !reasons.is_empty() {
        reasons.dedup();
        summary.reason = Some(reasons.join(" | "));
    }
    if ok.is_empty() {
        return EpochOutcome { summary, detail: None };
    }
    summary.feasible = true;
    summary.nupa = Some(mean_bundle(&ok.iter().map(|d| &d.nupa).collect::<Vec<_>>()));
    summary.upa = Some(mean_bundle(&ok.iter().map(|d| &d.upa).collect::<Vec<_>>()));
    let detail = EpochDetail {
        iteration,
        plan,
        trial: ok.swap_remove(0),
    };
    EpochOutcome {
        summary,
        detail: Some(detail),
    }
}

/// The sequential loop: grow the beam radius from `r_min` by `step` until the
/// sum-rate improvement drops below the tolerance or the radius leaves
/// `[r_min, r_max]`. Infeasible epochs are recorded and skipped.
pub fn run_plan(cfg: &ScenarioConfig) -> Result<RunArtifacts> {
    run_plan_replica(cfg, 0)
}

pub fn run_plan_replica(cfg: &ScenarioConfig, replica: u64) -> Result<RunArtifacts> {
    cfg.ensure_valid()?;
    let users = generate_users_indexed(cfg, replica)?;
    if users.users.is_empty() {
        return Err(Error::AllEpochsInfeasible("the user draw is empty".into()));
    }
    let delta = cfg.sweep.tolerance();
    let r_max = cfg.r_max();
    let mut r = cfg.sweep.r_min_m;
    let mut prev = 0.0;
    let mut best: Option<(f64, usize, EpochDetail)> = None;
    let mut epochs = Vec::new();
    let mut iteration = 1;
    while r <= r_max * (1.0 + 1e-12) {
        let out = run_epoch(cfg, &users, replica, iteration, r);
        let mut summary = out.summary;
        let mut stop = false;
        if let (Some(m), Some(detail)) = (summary.nupa.as_ref(), out.detail) {
            let ra = m.sum_rate_access_bps;
            let eps = ra - prev;
            prev = ra;
            summary.epsilon_bps = Some(eps);
            if best.as_ref().is_none_or(|(b, _, _)| ra > *b) {
                best = Some((ra, epochs.len(), detail));
            }
            stop = eps < delta;
        } else {
            warn!("epoch {iteration} at r = {r:.1} m infeasible: {}", summary.reason.as_deref().unwrap_or("?"));
        }
        summary.best_sum_rate_bps = best.as_ref().map(|b| b.0);
        info!(
            "epoch {iteration}: r = {r:.1} m, J = {}, feasible = {}",
            summary.n_deployed, summary.feasible
        );
        epochs.push(summary);
        if stop {
            break;
        }
        iteration += 1;
        r = cfg.sweep.r_min_m + (iteration - 1) as f64 * cfg.sweep.step_m;
    }
    let Some((_, best_epoch, detail)) = best else {
        let reasons: Vec<String> = epochs
            .iter()
            .map(|e| format!("r = {:.1} m: {}", e.radius_m, e.reason.as_deref().unwrap_or("infeasible")))
            .collect();
        return Err(Error::AllEpochsInfeasible(reasons.join("; ")));
    };
    Ok(RunArtifacts {
        version: VERSION.to_string(),
        seed: cfg.seed,
        replica,
        config_hash: cfg.hash(),
        config: cfg.clone(),
        n_users: users.users.len(),
        epochs,
        best_epoch,
        best: detail,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// HAPS coverage radius in meters.
    CoverageRadius,
    /// NIB transmit power per RAT in dBW.
    TxPower,
    /// HAPS reference transmit SNR in dB.
    TransmitSnr,
    NAntennas,
    /// Users per square kilometer.
    Density,
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.replace('-', "_").as_str() {
            "coverage_radius" => Self::CoverageRadius,
            "tx_power" => Self::TxPower,
            "transmit_snr" => Self::TransmitSnr,
            "n_antennas" => Self::NAntennas,
            "density" => Self::Density,
            other => return Err(Error::arg("sweep", format!("unknown axis {other:?}"))),
        })
    }
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            Self::CoverageRadius => "coverage_radius",
            Self::TxPower => "tx_power",
            Self::TransmitSnr => "transmit_snr",
            Self::NAntennas => "n_antennas",
            Self::Density => "density",
        }
    }
}

/// How much of the chain a sweep point runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepScope {
    /// Disk cover and hex baseline counts at `r_min`.
    Deployment,
    /// Deployment, association, beams and the NOMA/OMA backhaul at `r_min`.
    Backhaul,
    /// The full loop; the best epoch is reported.
    Full,
}

impl std::str::FromStr for SweepScope {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "deployment" => Self::Deployment,
            "backhaul" => Self::Backhaul,
            "full" => Self::Full,
            other => return Err(Error::arg("sweep", format!("unknown scope {other:?}"))),
        })
    }
}

/// Applies one axis value to a copy of the config.
pub fn apply_axis(cfg: &ScenarioConfig, axis: SweepAxis, value: f64) -> Result<ScenarioConfig> {
    let mut c = cfg.clone();
    match axis {
        SweepAxis::CoverageRadius => c.haps.coverage_radius_m = value,
        SweepAxis::TxPower => c.nib.tx_power_per_rat_w = vec![dbw_to_w(value); c.rats.len()],
        SweepAxis::TransmitSnr => {
            c.haps.tx_power_w = haps_power_for_snr(cfg, value)?;
            c.haps.power_schedule.clear();
        }
        SweepAxis::NAntennas => {
            if value < 1.0 || value.fract() != 0.0 {
                return Err(Error::arg("sweep", "n_antennas values must be positive integers"));
            }
            c.nib.n_antennas = value as usize;
        }
        SweepAxis::Density => c.user_density_per_km2 = value,
    }
    c.ensure_valid()?;
    Ok(c)
}

/// Metric values of one replica at one sweep point, in a fixed order.
pub fn replica_metrics(cfg: &ScenarioConfig, scope: SweepScope, replica: u64) -> Result<Vec<(String, f64)>> {
    let users = generate_users_indexed(cfg, replica)?;
    let pts = users.positions();
    let r = cfg.sweep.r_min_m;
    let n_hex = hex_baseline(cfg.coverage_radius(), r.min(cfg.coverage_radius()), cfg.haps.center)?.count();
    if pts.is_empty() {
        return Err(Error::Infeasible("the user draw is empty".into()));
    }
    let plan = deploy(&pts, r, cfg.exact_cap)?;
    let mut out = vec![
        ("n_users".to_string(), pts.len() as f64),
        ("j_gdc".to_string(), plan.count() as f64),
        ("j_hex".to_string(), n_hex as f64),
    ];
    match scope {
        SweepScope::Deployment => {}
        SweepScope::Backhaul => {
            let beams = provisional_beams(cfg, &plan)?;
            let idx = stream_index(replica, 0, 0);
            let placement = place(cfg, &users.users, &beams, idx)?;
            let (_, _, m) = backhaul_stage(cfg, &placement.geometries, idx)?;
            out.push(("n_active".into(), placement.geometries.len() as f64));
            out.extend(backhaul_pairs(&m));
        }
        SweepScope::Full => {
            let mut c = cfg.clone();
            c.trials = 1;
            let run = run_plan_replica(&c, replica)?;
            let e = &run.epochs[run.best_epoch];
            let t = &run.best.trial;
            out.push(("best_radius_m".into(), e.radius_m));
            out.push(("n_active".into(), t.geometries.len() as f64));
            out.extend(backhaul_pairs(&t.backhaul_metrics));
            out.extend(bundle_pairs("nupa", &t.nupa));
            out.extend(bundle_pairs("upa", &t.upa));
        }
    }
    Ok(out)
}

fn backhaul_pairs(m: &BackhaulMetrics) -> Vec<(String, f64)> {
    vec![
        ("haps_power_w".into(), m.haps_power_w),
        ("noma_sum_rate_bps".into(), m.noma_sum_rate_bps),
        ("noma_sum_rate_reference_bps".into(), m.noma_sum_rate_reference_bps),
        ("oma_sum_rate_bps".into(), m.oma_sum_rate_bps),
        ("noma_aee_bpj".into(), m.noma_aee_bpj),
        ("oma_aee_bpj".into(), m.oma_aee_bpj),
        ("noma_ase_per_km2".into(), m.noma_ase * 1e6),
        ("oma_ase_per_km2".into(), m.oma_ase * 1e6),
    ]
}

fn bundle_pairs(tag: &str, b: &MetricBundle) -> Vec<(String, f64)> {
    vec![
        (format!("{tag}_sum_rate_bps"), b.sum_rate_access_bps),
        (format!("{tag}_sum_rate_actual_bps"), b.sum_rate_access_actual_bps),
        (format!("{tag}_aee_bpj"), b.aee_access_bpj),
        (format!("{tag}_se_avg"), b.se_avg_access_bps_hz),
        (format!("{tag}_jain"), b.jain),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub metric: String,
    pub mean: f64,
    pub std: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRaw {
    pub value: f64,
    pub replica: u64,
    pub metric: String,
    pub x: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub axis: SweepAxis,
    pub scope: SweepScope,
    pub replicas: usize,
    pub rows: Vec<SweepRow>,
    pub raw: Vec<SweepRaw>,
    /// `(value, replica, reason)` for replicas that failed.
    pub failures: Vec<(f64, u64, String)>,
}

impl SweepTable {
    pub fn get(&self, value: f64, metric: &str) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.value == value && r.metric == metric)
    }

    /// Per-replica values of a metric at a point, in replica order.
    pub fn samples(&self, value: f64, metric: &str) -> Vec<f64> {
        self.raw
            .iter()
            .filter(|r| r.value == value && r.metric == metric)
            .map(|r| r.x)
            .collect()
    }
}

/// Monte Carlo sweep: `cfg.trials` independent replicas per axis value, each
/// with its own user draw and fading streams.
pub fn sweep(cfg: &ScenarioConfig, axis: SweepAxis, values: &[f64], scope: SweepScope) -> Result<SweepTable> {
    if values.is_empty() {
        return Err(Error::arg("sweep", "empty value list"));
    }
    cfg.ensure_valid()?;
    let mut table = SweepTable {
        axis,
        scope,
        replicas: cfg.trials,
        rows: Vec::new(),
        raw: Vec::new(),
        failures: Vec::new(),
    };
    for &v in values {
        let c = apply_axis(cfg, axis, v)?;
        let per: Vec<Result<Vec<(String, f64)>>> = (0..cfg.trials as u64)
            .into_par_iter()
            .map(|rep| replica_metrics(&c, scope, rep))
            .collect();
        let mut by_metric: Vec<(String, Vec<f64>)> = Vec::new();
        for (rep, res) in per.into_iter().enumerate() {
            match res {
                Ok(pairs) => {
                    for (name, x) in pairs {
                        table.raw.push(SweepRaw {
                            value: v,
                            replica: rep as u64,
                            metric: name.clone(),
                            x,
                        });
                        match by_metric.iter_mut().find(|(n, _)| *n == name) {
                            Some((_, xs)) => xs.push(x),
                            None => by_metric.push((name, vec![x])),
                        }
                    }
                }
                Err(e) => {
                    debug!("sweep {}={v} replica {rep}: {e}", axis.name());
                    table.failures.push((v, rep as u64, e.to_string()));
                }
            }
        }
        for (name, xs) in by_metric {
            let Summary { mean, std, count } = summarize(&xs);
            table.rows.push(SweepRow {
                value: v,
                metric: name,
                mean,
                std,
                count,
            });
        }
    }
    Ok(table)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(Error::arg("format", format!("unknown format {other:?}"))),
        }
    }
}

/// What is needed to reproduce an output directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    pub config: ScenarioConfig,
    #[serde(default)]
    pub args: BTreeMap<String, String>,
}

impl Manifest {
    pub fn new(command: &str, cfg: &ScenarioConfig) -> Self {
        Self {
            tool: "nibplan".into(),
            version: VERSION.into(),
            command: command.into(),
            config_hash: cfg.hash(),
            seed: cfg.seed,
            config: cfg.clone(),
            args: BTreeMap::new(),
        }
    }
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<Manifest> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| Error::Parse {
        path: path.to_path_buf(),
        source,
    })
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("serializable");
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct EpochCsvRow {
    iteration: usize,
    radius_m: f64,
    n_deployed: usize,
    n_hex: usize,
    feasible: bool,
    feasible_trials: usize,
    sum_rate_access_bps: Option<f64>,
    sum_rate_access_actual_bps: Option<f64>,
    sum_rate_backhaul_bps: Option<f64>,
    upa_sum_rate_bps: Option<f64>,
    jain: Option<f64>,
    upa_jain: Option<f64>,
    aee_backhaul_bpj: Option<f64>,
    ase_backhaul_per_km2: Option<f64>,
    aee_access_bpj: Option<f64>,
    se_avg_access: Option<f64>,
    epsilon_bps: Option<f64>,
    best_sum_rate_bps: Option<f64>,
    reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct NibCsvRow {
    nib: usize,
    deployed_id: usize,
    center_x: f64,
    center_y: f64,
    radius_m: f64,
    altitude_m: f64,
    hpbw_deg: f64,
    elevation_deg: f64,
    clamped: bool,
    members: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct TraceRow {
    iteration: usize,
    objective_bps: f64,
}

/// Files written for a run.
pub fn persist_run(art: &RunArtifacts, dir: &Path, format: OutputFormat, manifest: &Manifest) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let mut written = Vec::new();
    let mpath = dir.join("manifest.json");
    write_json(&mpath, manifest)?;
    written.push(mpath);
    match format {
        OutputFormat::Json => {
            let p = dir.join("run.json");
            write_json(&p, art)?;
            written.push(p);
        }
        OutputFormat::Csv => {
            let epochs: Vec<EpochCsvRow> = art
                .epochs
                .iter()
                .map(|e| EpochCsvRow {
                    iteration: e.iteration,
                    radius_m: e.radius_m,
                    n_deployed: e.n_deployed,
                    n_hex: e.n_hex,
                    feasible: e.feasible,
                    feasible_trials: e.feasible_trials,
                    sum_rate_access_bps: e.nupa.as_ref().map(|m| m.sum_rate_access_bps),
                    sum_rate_access_actual_bps: e.nupa.as_ref().map(|m| m.sum_rate_access_actual_bps),
                    sum_rate_backhaul_bps: e.nupa.as_ref().map(|m| m.sum_rate_backhaul_bps),
                    upa_sum_rate_bps: e.upa.as_ref().map(|m| m.sum_rate_access_bps),
                    jain: e.nupa.as_ref().map(|m| m.jain),
                    upa_jain: e.upa.as_ref().map(|m| m.jain),
                    aee_backhaul_bpj: e.nupa.as_ref().map(|m| m.aee_backhaul_bpj),
                    ase_backhaul_per_km2: e.nupa.as_ref().map(|m| m.ase_backhaul_per_km2()),
                    aee_access_bpj: e.nupa.as_ref().map(|m| m.aee_access_bpj),
                    se_avg_access: e.nupa.as_ref().map(|m| m.se_avg_access_bps_hz),
                    epsilon_bps: e.epsilon_bps,
                    best_sum_rate_bps: e.best_sum_rate_bps,
                    reason: e.reason.clone(),
                })
                .collect();
            let t = &art.best.trial;
            let mut counts = vec![0; t.geometries.len()];
            for &j in &t.nib_of {
                counts[j] += 1;
            }
            let nibs: Vec<NibCsvRow> = t
                .geometries
                .iter()
                .enumerate()
                .map(|(j, g)| NibCsvRow {
                    nib: j,
                    deployed_id: t.deployed_ids[j],
                    center_x: g.center.x,
                    center_y: g.center.y,
                    radius_m: g.radius_m,
                    altitude_m: g.altitude_m,
                    hpbw_deg: g.hpbw_deg,
                    elevation_deg: g.elevation_deg,
                    clamped: g.clamped,
                    members: counts[j],
                })
                .collect();
            let trace: Vec<TraceRow> = t
                .sca_trace
                .iter()
                .enumerate()
                .map(|(i, &o)| TraceRow {
                    iteration: i,
                    objective_bps: o,
                })
                .collect();
            for (name, res) in [
                ("epochs.csv", write_csv(&dir.join("epochs.csv"), &epochs)),
                ("nibs.csv", write_csv(&dir.join("nibs.csv"), &nibs)),
                ("backhaul.csv", write_csv(&dir.join("backhaul.csv"), &t.backhaul)),
                ("users.csv", write_csv(&dir.join("users.csv"), &t.users)),
                ("sca_trace.csv", write_csv(&dir.join("sca_trace.csv"), &trace)),
            ] {
                res?;
                written.push(dir.join(name));
            }
        }
    }
    Ok(written)
}

pub fn persist_sweep(table: &SweepTable, dir: &Path, format: OutputFormat, manifest: &Manifest) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let mpath = dir.join("manifest.json");
    write_json(&mpath, manifest)?;
    let mut written = vec![mpath];
    match format {
        OutputFormat::Json => {
            let p = dir.join("sweep.json");
            write_json(&p, table)?;
            written.push(p);
        }
        OutputFormat::Csv => {
            let p = dir.join("sweep.csv");
            write_csv(&p, &table.rows)?;
            written.push(p);
            let p = dir.join("sweep_raw.csv");
            write_csv(&p, &table.raw)?;
            written.push(p);
        }
    }
    Ok(written)
}
