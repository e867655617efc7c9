//! User association: max-SINR rule plus nearest-NIB and random baselines.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::access::rzf_precoder;
use crate::beamopt::BeamGeometry;
use crate::channel::{access_channel_with_fading, noise_power_w, sample_rayleigh, AccessChannel};
use crate::error::{Error, Result};
use crate::scenario::{Environment, GroundUser, RatProfile, ScenarioConfig};
use crate::units::db_to_lin;

/// Radio parameters shared by every access link of a scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkParams {
    pub env: Environment,
    pub g_max: f64,
    pub n_antennas: usize,
    pub rayleigh_scale: f64,
    pub rats: Vec<RatProfile>,
    pub tx_power_w: Vec<f64>,
    pub regularization: Option<f64>,
}

impl LinkParams {
    pub fn from_config(c: &ScenarioConfig) -> Self {
        Self {
            env: c.environment.clone(),
            g_max: db_to_lin(c.nib.g_max_dbi),
            n_antennas: c.nib.n_antennas,
            rayleigh_scale: c.rayleigh_scale,
            rats: c.rats.clone(),
            tx_power_w: c.nib.tx_power_per_rat_w.clone(),
            regularization: c.access.regularization,
        }
    }

    pub fn noise_w(&self, user: &GroundUser) -> f64 {
        noise_power_w(self.rats[user.rat].bandwidth_hz, user.noise_figure_db)
    }

    /// `P / sigma^2` for the user's RAT.
    pub fn transmit_snr(&self, user: &GroundUser) -> f64 {
        self.tx_power_w[user.rat] / self.noise_w(user)
    }

    /// `omega = K sigma^2 / P` unless configured.
    pub fn omega(&self, users: &[&GroundUser]) -> f64 {
        self.regularization
            .unwrap_or_else(|| users.iter().map(|u| 1.0 / self.transmit_snr(u)).sum())
    }
}

/// Access channel from one user to one NIB whose disk contains the user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateLink {
    pub nib: usize,
    pub channel: AccessChannel,
}

fn covers(beam: &BeamGeometry, u: &GroundUser) -> bool {
    u.position.dist(beam.center) <= beam.radius_m * (1.0 + 1e-12) + 1e-9
}

/// NIB ids whose disks contain each user, in id order.
pub fn covering_nibs(users: &[GroundUser], beams: &[BeamGeometry]) -> Result<Vec<Vec<usize>>> {
    users
        .iter()
        .map(|u| {
            let c: Vec<usize> = (0..beams.len()).filter(|&j| covers(&beams[j], u)).collect();
            if c.is_empty() {
                Err(Error::Uncovered { user: u.id })
            } else {
                Ok(c)
            }
        })
        .collect()
}

/// Draws small-scale fading for every covering (user, NIB) pair, users in id
/// order and NIBs in id order within a user.
pub fn candidate_links<R: Rng + ?Sized>(
    users: &[GroundUser],
    beams: &[BeamGeometry],
    params: &LinkParams,
    rng: &mut R,
) -> Result<Vec<Vec<CandidateLink>>> {
    let cover = covering_nibs(users, beams)?;
    let mut out = Vec::with_capacity(users.len());
    for (u, nibs) in users.iter().zip(cover) {
        let rat = &params.rats[u.rat];
        let mut links = Vec::with_capacity(nibs.len());
        for j in nibs {
            let fading = (0..params.n_antennas)
                .map(|_| sample_rayleigh(params.rayleigh_scale, rng).map(|s| s.coeff))
                .collect::<Result<Vec<_>>>()?;
            let channel = access_channel_with_fading(
                u.position,
                &beams[j].pose(),
                rat.carrier_freq_hz,
                &params.env,
                params.g_max,
                fading,
            )?;
            links.push(CandidateLink { nib: j, channel });
        }
        out.push(links);
    }
    Ok(out)
}

/// Per-(NIB, RAT) groups: `(user, link index)` pairs.
type Groups = BTreeMap<(usize, usize), Vec<(usize, usize)>>;

/// RZF SINR of every member of every group under RZF precoding over the
/// group and an equal power split.
fn group_sinrs(
    users: &[GroundUser],
    links: &[Vec<CandidateLink>],
    groups: &Groups,
    params: &LinkParams,
    out: &mut [Vec<f64>],
) -> Result<()> {
    let m = params.n_antennas;
    for members in groups.values() {
        let n = members.len();
        let h = DMatrix::<Complex64>::from_fn(m, n, |a, i| {
            let (k, l) = members[i];
            links[k][l].channel.h[a]
        });
        let refs: Vec<&GroundUser> = members.iter().map(|&(k, _)| &users[k]).collect();
        let state = rzf_precoder(&h, params.omega(&refs))?;
        let p = vec![1.0 / n as f64; n];
        let interf = state.interference(&p);
        for (i, &(k, l)) in members.iter().enumerate() {
            let snr = params.transmit_snr(&users[k]);
            out[k][l] = p[i] * state.eff_gain[i] / (interf[i] + 1.0 / snr);
        }
    }
    Ok(())
}

/// Association-stage SINR proxy for every candidate link: each NIB is assumed
/// to serve every covered user of a RAT, with equal power and RZF precoding
/// over that provisional group.
pub fn association_sinrs(
    users: &[GroundUser],
    links: &[Vec<CandidateLink>],
    params: &LinkParams,
) -> Result<Vec<Vec<f64>>> {
    let mut groups: Groups = BTreeMap::new();
    for (k, ls) in links.iter().enumerate() {
        for (l, link) in ls.iter().enumerate() {
            groups.entry((link.nib, users[k].rat)).or_default().push((k, l));
        }
    }
    let mut out: Vec<Vec<f64>> = links.iter().map(|l| vec![0.0; l.len()]).collect();
    group_sinrs(users, links, &groups, params, &mut out)?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssociationMap {
    pub nib_of: Vec<usize>,
    pub members: Vec<Vec<usize>>,
    /// `rat_counts[j][rat]`.
    pub rat_counts: Vec<Vec<usize>>,
}

impl AssociationMap {
    pub fn new(nib_of: Vec<usize>, users: &[GroundUser], n_nibs: usize, n_rats: usize) -> Self {
        let mut members = vec![Vec::new(); n_nibs];
        let mut rat_counts = vec![vec![0; n_rats]; n_nibs];
        for (k, &j) in nib_of.iter().enumerate() {
            members[j].push(k);
            rat_counts[j][users[k].rat] += 1;
        }
        Self {
            nib_of,
            members,
            rat_counts,
        }
    }

    pub fn nib_of(&self, user: usize) -> usize {
        self.nib_of[user]
    }

    pub fn n_nibs(&self) -> usize {
        self.members.len()
    }
}

/// Highest proxy SINR wins; ties go to the lowest NIB id.
pub fn associate_max_sinr(
    users: &[GroundUser],
    links: &[Vec<CandidateLink>],
    sinrs: &[Vec<f64>],
    n_nibs: usize,
    n_rats: usize,
) -> Result<AssociationMap> {
    let mut nib_of = Vec::with_capacity(users.len());
    for (k, (ls, ss)) in links.iter().zip(sinrs).enumerate() {
        let mut best: Option<(f64, usize)> = None;
        for (link, &s) in ls.iter().zip(ss) {
            match best {
                Some((bs, bj)) if s < bs || (s == bs && link.nib > bj) => {}
                _ => best = Some((s, link.nib)),
            }
        }
        let (_, j) = best.ok_or(Error::Uncovered { user: users[k].id })?;
        nib_of.push(j);
    }
    Ok(AssociationMap::new(nib_of, users, n_nibs, n_rats))
}

/// Closest covering beam center; ties go to the lowest NIB id.
pub fn associate_nearest(users: &[GroundUser], beams: &[BeamGeometry], n_rats: usize) -> Result<AssociationMap> {
    let cover = covering_nibs(users, beams)?;
    let nib_of = users
        .iter()
        .zip(&cover)
        .map(|(u, c)| {
            let mut best = c[0];
            for &j in &c[1..] {
                if u.position.dist2(beams[j].center) < u.position.dist2(beams[best].center) {
                    best = j;
                }
            }
            best
        })
        .collect();
    Ok(AssociationMap::new(nib_of, users, beams.len(), n_rats))
}

/// Uniform draw among the covering beams.
pub fn associate_random<R: Rng + ?Sized>(
    users: &[GroundUser],
    beams: &[BeamGeometry],
    n_rats: usize,
    rng: &mut R,
) -> Result<AssociationMap> {
    let cover = covering_nibs(users, beams)?;
    let nib_of = cover.iter().map(|c| c[rng.random_range(0..c.len())]).collect();
    Ok(AssociationMap::new(nib_of, users, beams.len(), n_rats))
}

/// RZF SINR each user sees from its assigned NIB when every (NIB, RAT)
/// group splits power equally under RZF precoding.
pub fn received_sinr(
    users: &[GroundUser],
    map: &AssociationMap,
    links: &[Vec<CandidateLink>],
    params: &LinkParams,
) -> Result<Vec<f64>> {
    let mut groups: Groups = BTreeMap::new();
    for (k, ls) in links.iter().enumerate() {
        let j = map.nib_of[k];
        let l = ls
            .iter()
            .position(|c| c.nib == j)
            .ok_or(Error::Uncovered { user: users[k].id })?;
        groups.entry((j, users[k].rat)).or_default().push((k, l));
    }
    let mut table: Vec<Vec<f64>> = links.iter().map(|l| vec![0.0; l.len()]).collect();
    group_sinrs(users, links, &groups, params, &mut table)?;
    Ok(groups
        .values()
        .flatten()
        .fold(vec![0.0; users.len()], |mut acc, &(k, l)| {
            acc[k] = table[k][l];
            acc
        }))
}
