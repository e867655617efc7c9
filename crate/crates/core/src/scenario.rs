//! Scenario configuration, validation and seeded user generation.

use std::path::Path;

use log::warn;
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result, Violation};
use crate::geometry::Point2;
use crate::rng::{substream, Stream};
use crate::units::wavelength;

/// Diffraction constant in the beam-radius floor `r >= 0.443 * lambda * H / D`.
pub const DIFFRACTION_FACTOR: f64 = 0.443;

/// One radio access technology offered by every NIB.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatProfile {
    pub id: String,
    pub carrier_freq_hz: f64,
    pub bandwidth_hz: f64,
    pub demand_prob: f64,
    pub min_rate_bps: f64,
}

impl RatProfile {
    pub fn wavelength(&self) -> f64 {
        wavelength(self.carrier_freq_hz)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AreaClass {
    SubUrban,
    Urban,
    DenseUrban,
    HighRise,
}

/// Air-to-ground propagation environment (excess losses in dB and the LOS
/// sigmoid parameters).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Environment {
    pub label: AreaClass,
    pub eta_los_db: f64,
    pub eta_nlos_db: f64,
    pub a: f64,
    pub b: f64,
}

impl Environment {
    pub const SIGMOID_A: f64 = 11.95;
    pub const SIGMOID_B: f64 = 0.136;

    pub fn sub_urban() -> Self {
        Self::with_excess(AreaClass::SubUrban, 0.1, 21.0)
    }

    pub fn urban() -> Self {
        Self::with_excess(AreaClass::Urban, 1.0, 20.0)
    }

    pub fn dense_urban() -> Self {
        Self::with_excess(AreaClass::DenseUrban, 1.6, 23.0)
    }

    /// High-rise excess losses (2.3, 34) dB with the shared sigmoid pair.
    pub fn high_rise() -> Self {
        Self::with_excess(AreaClass::HighRise, 2.3, 34.0)
    }

    pub fn preset(label: AreaClass) -> Self {
        match label {
            AreaClass::SubUrban => Self::sub_urban(),
            AreaClass::Urban => Self::urban(),
            AreaClass::DenseUrban => Self::dense_urban(),
            AreaClass::HighRise => Self::high_rise(),
        }
    }

    fn with_excess(label: AreaClass, eta_los_db: f64, eta_nlos_db: f64) -> Self {
        Self {
            label,
            eta_los_db,
            eta_nlos_db,
            a: Self::SIGMOID_A,
            b: Self::SIGMOID_B,
        }
    }

    /// `A = eta_LOS - eta_NLOS`, non-positive for valid environments.
    pub fn excess_gap_db(&self) -> f64 {
        self.eta_los_db - self.eta_nlos_db
    }
}

/// A point of the HAPS transmit power schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerSample {
    pub hour: f64,
    pub watts: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HapsConfig {
    pub altitude_m: f64,
    pub coverage_radius_m: f64,
    pub tx_power_w: f64,
    pub bandwidth_hz: f64,
    pub carrier_freq_hz: f64,
    pub aperture_efficiency: f64,
    pub hpbw_deg: f64,
    pub center: Point2,
    /// Optional time-of-day power table; when present it overrides
    /// `tx_power_w` at `hour_of_day` by linear interpolation (wrapping at 24 h).
    #[serde(default)]
    pub power_schedule: Vec<PowerSample>,
    #[serde(default)]
    pub hour_of_day: f64,
}

impl HapsConfig {
    pub fn wavelength(&self) -> f64 {
        wavelength(self.carrier_freq_hz)
    }

    /// Transmit power in effect at the configured hour.
    pub fn effective_tx_power(&self) -> f64 {
        if self.power_schedule.is_empty() {
            return self.tx_power_w;
        }
        let mut pts = self.power_schedule.clone();
        pts.sort_by(|a, b| a.hour.total_cmp(&b.hour));
        let h = self.hour_of_day.rem_euclid(24.0);
        if pts.len() == 1 {
            return pts[0].watts;
        }
        for w in pts.windows(2) {
            if h >= w[0].hour && h <= w[1].hour {
                let span = w[1].hour - w[0].hour;
                if span <= 0.0 {
                    return w[0].watts;
                }
                let t = (h - w[0].hour) / span;
                return w[0].watts + t * (w[1].watts - w[0].watts);
            }
        }
        // Wrap between the last sample and the first one of the next day.
        let (last, first) = (pts[pts.len() - 1], pts[0]);
        let span = first.hour + 24.0 - last.hour;
        let hh = if h < first.hour { h + 24.0 } else { h };
        let t = if span > 0.0 { (hh - last.hour) / span } else { 0.0 };
        last.watts + t * (first.watts - last.watts)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NibConfig {
    /// Per-RAT transmit power, aligned with `ScenarioConfig::rats`.
    pub tx_power_per_rat_w: Vec<f64>,
    pub n_antennas: usize,
    pub g_max_dbi: f64,
    pub altitude_bounds_m: [f64; 2],
    pub hpbw_bounds_deg: [f64; 2],
    pub aperture_diameter_m: f64,
    pub circuit_power_access_w: f64,
    pub circuit_power_backhaul_w: f64,
    pub noise_figure_db: f64,
    pub backhaul_target_rate_bps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSettings {
    pub r_min_m: f64,
    /// Upper radius bound; `None` means the coverage radius R.
    #[serde(default)]
    pub r_max_m: Option<f64>,
    pub step_m: f64,
    /// Termination tolerance on the sum-rate improvement; `None` is infinite.
    #[serde(default)]
    pub tolerance_bps: Option<f64>,
}

impl SweepSettings {
    pub fn tolerance(&self) -> f64 {
        self.tolerance_bps.unwrap_or(f64::INFINITY)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CapMode {
    /// One cap on the sum over all backhaul-dependent users.
    Global,
    /// A separate cap per NIB, using that NIB's own backhaul rate.
    PerNib,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AccessSettings {
    /// RZF regularization; `None` selects `K * sigma^2 / P` per cell.
    #[serde(default)]
    pub regularization: Option<f64>,
    pub cap_mode: CapMode,
    pub sca_max_iters: usize,
    pub sca_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub haps: HapsConfig,
    pub nib: NibConfig,
    pub environment: Environment,
    pub rats: Vec<RatProfile>,
    pub user_density_per_km2: f64,
    pub user_noise_figure_db: f64,
    pub seed: u64,
    pub sweep: SweepSettings,
    pub backhaul_fraction: f64,
    pub rayleigh_scale: f64,
    pub rician_k_factor: f64,
    pub access: AccessSettings,
    /// Monte Carlo fading realizations per epoch or sweep point.
    pub trials: usize,
    /// Largest user count handed to the exact disk-cover solver.
    pub exact_cap: usize,
    /// Block-coordinate passes of the beam optimizer.
    pub bcd_passes: usize,
}

pub fn default_rats() -> Vec<RatProfile> {
    let mk = |id: &str, f: f64, b: f64, p: f64| RatProfile {
        id: id.to_string(),
        carrier_freq_hz: f,
        bandwidth_hz: b,
        demand_prob: p,
        min_rate_bps: 1e6,
    };
    vec![
        mk("wifi", 2.4e9, 20e6, 0.1),
        mk("3g", 2.1e9, 5e6, 0.2),
        mk("4g", 1.8e9, 20e6, 0.3),
        mk("5g", 3.5e9, 100e6, 0.4),
    ]
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            haps: HapsConfig {
                altitude_m: 20e3,
                coverage_radius_m: 5e3,
                tx_power_w: 10.0,
                bandwidth_hz: 100e6,
                carrier_freq_hz: 6.4e9,
                aperture_efficiency: 0.8,
                hpbw_deg: 30.0,
                center: Point2::ORIGIN,
                power_schedule: Vec::new(),
                hour_of_day: 12.0,
            },
            nib: NibConfig {
                tx_power_per_rat_w: vec![10.0; 4],
                n_antennas: 2,
                g_max_dbi: 10.0,
                altitude_bounds_m: [100.0, 5000.0],
                hpbw_bounds_deg: [10.0, 80.0],
                aperture_diameter_m: 0.5,
                circuit_power_access_w: 1.0,
                circuit_power_backhaul_w: 1.0,
                noise_figure_db: 5.0,
                backhaul_target_rate_bps: 20e6,
            },
            environment: Environment::sub_urban(),
            rats: default_rats(),
            user_density_per_km2: 5.0,
            user_noise_figure_db: 7.0,
            seed: 1,
            sweep: SweepSettings {
                r_min_m: 1000.0,
                r_max_m: None,
                step_m: 500.0,
                tolerance_bps: Some(0.0),
            },
            backhaul_fraction: 1.0,
            rayleigh_scale: std::f64::consts::FRAC_1_SQRT_2,
            rician_k_factor: 10.0,
            access: AccessSettings {
                regularization: None,
                cap_mode: CapMode::Global,
                sca_max_iters: 100,
                sca_tol: 1e-9,
            },
            trials: 1,
            exact_cap: 20,
            bcd_passes: 1,
        }
    }
}

impl ScenarioConfig {
    pub fn coverage_radius(&self) -> f64 {
        self.haps.coverage_radius_m
    }

    pub fn r_max(&self) -> f64 {
        self.sweep.r_max_m.unwrap_or(self.haps.coverage_radius_m)
    }

    pub fn max_wavelength(&self) -> f64 {
        self.rats
            .iter()
            .map(RatProfile::wavelength)
            .fold(0.0, f64::max)
    }

    /// SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Checks every invariant and returns the violations with field paths.
    pub fn validate(&self) -> Vec<Violation> {
        let mut v = Vec::new();
        let mut check = |ok: bool, field: &str, msg: String| {
            if !ok {
                v.push(Violation::new(field, msg));
            }
        };
        let pos = |x: f64| x.is_finite() && x > 0.0;

        let h = &self.haps;
        check(
            (18e3..=24e3).contains(&h.altitude_m),
            "haps.altitude_m",
            format!("{} outside the stratospheric band [18000, 24000]", h.altitude_m),
        );
        check(pos(h.coverage_radius_m), "haps.coverage_radius_m", "must be > 0".into());
        check(pos(h.tx_power_w), "haps.tx_power_w", "must be > 0".into());
        check(pos(h.bandwidth_hz), "haps.bandwidth_hz", "must be > 0".into());
        check(pos(h.carrier_freq_hz), "haps.carrier_freq_hz", "must be > 0".into());
        check(
            h.aperture_efficiency > 0.0 && h.aperture_efficiency <= 1.0,
            "haps.aperture_efficiency",
            "must lie in (0, 1]".into(),
        );
        check(
            h.hpbw_deg > 0.0 && h.hpbw_deg < 180.0,
            "haps.hpbw_deg",
            "must lie in (0, 180)".into(),
        );
        check(
            h.center.x.is_finite() && h.center.y.is_finite(),
            "haps.center",
            "must be finite".into(),
        );
        for (i, s) in h.power_schedule.iter().enumerate() {
            check(
                (0.0..24.0).contains(&s.hour),
                &format!("haps.power_schedule[{i}].hour"),
                "must lie in [0, 24)".into(),
            );
            check(
                pos(s.watts),
                &format!("haps.power_schedule[{i}].watts"),
                "must be > 0".into(),
            );
        }

        let n = &self.nib;
        check(
            n.tx_power_per_rat_w.len() == self.rats.len(),
            "nib.tx_power_per_rat_w",
            format!(
                "has {} entries but {} RATs are configured",
                n.tx_power_per_rat_w.len(),
                self.rats.len()
            ),
        );
        for (i, p) in n.tx_power_per_rat_w.iter().enumerate() {
            check(pos(*p), &format!("nib.tx_power_per_rat_w[{i}]"), "must be > 0".into());
        }
        check(n.n_antennas >= 1, "nib.n_antennas", "must be >= 1".into());
        check(n.g_max_dbi.is_finite(), "nib.g_max_dbi", "must be finite".into());
        let [hmin, hmax] = n.altitude_bounds_m;
        check(pos(hmin), "nib.altitude_bounds_m[0]", "must be > 0".into());
        check(
            hmin <= hmax,
            "nib.altitude_bounds_m",
            format!("H_min {hmin} exceeds H_max {hmax}"),
        );
        check(
            hmax < h.altitude_m,
            "nib.altitude_bounds_m[1]",
            "must stay below the HAPS altitude".into(),
        );
        let [tmin, tmax] = n.hpbw_bounds_deg;
        check(
            tmin > 0.0 && tmax < 90.0,
            "nib.hpbw_bounds_deg",
            "must lie in (0, 90)".into(),
        );
        check(
            tmin <= tmax,
            "nib.hpbw_bounds_deg",
            format!("theta_min {tmin} exceeds theta_max {tmax}"),
        );
        check(pos(n.aperture_diameter_m), "nib.aperture_diameter_m", "must be > 0".into());
        check(
            n.circuit_power_access_w >= 0.0,
            "nib.circuit_power_access_w",
            "must be >= 0".into(),
        );
        check(
            n.circuit_power_backhaul_w >= 0.0,
            "nib.circuit_power_backhaul_w",
            "must be >= 0".into(),
        );
        check(
            n.backhaul_target_rate_bps >= 0.0,
            "nib.backhaul_target_rate_bps",
            "must be >= 0".into(),
        );

        let e = &self.environment;
        check(
            e.eta_nlos_db >= e.eta_los_db,
            "environment.eta_nlos_db",
            "must be >= eta_los_db".into(),
        );
        check(pos(e.a), "environment.a", "must be > 0".into());
        check(pos(e.b), "environment.b", "must be > 0".into());

        check(!self.rats.is_empty(), "rats", "at least one RAT is required".into());
        let mut total = 0.0;
        for (i, r) in self.rats.iter().enumerate() {
            total += r.demand_prob;
            check(
                (0.0..=1.0).contains(&r.demand_prob),
                &format!("rats[{i}].demand_prob"),
                "must lie in [0, 1]".into(),
            );
            check(pos(r.bandwidth_hz), &format!("rats[{i}].bandwidth_hz"), "must be > 0".into());
            check(
                pos(r.carrier_freq_hz),
                &format!("rats[{i}].carrier_freq_hz"),
                "must be > 0".into(),
            );
            check(
                r.min_rate_bps >= 0.0,
                &format!("rats[{i}].min_rate_bps"),
                "must be >= 0".into(),
            );
            if self.rats[..i].iter().any(|o| o.id == r.id) {
                check(false, &format!("rats[{i}].id"), format!("duplicate id {:?}", r.id));
            }
        }
        if !self.rats.is_empty() {
            check(
                (total - 1.0).abs() <= 1e-9,
                "rats.demand_prob",
                format!("probabilities sum to {total}, expected 1"),
            );
        }

        check(
            self.user_density_per_km2 >= 0.0 && self.user_density_per_km2.is_finite(),
            "user_density_per_km2",
            "must be >= 0".into(),
        );
        check(
            (0.0..=1.0).contains(&self.backhaul_fraction),
            "backhaul_fraction",
            "must lie in [0, 1]".into(),
        );
        check(pos(self.rayleigh_scale), "rayleigh_scale", "must be > 0".into());
        check(
            self.rician_k_factor >= 0.0,
            "rician_k_factor",
            "must be >= 0".into(),
        );

        let s = &self.sweep;
        check(pos(s.r_min_m), "sweep.r_min_m", "must be > 0".into());
        check(pos(s.step_m), "sweep.step_m", "must be > 0".into());
        if let Some(rmax) = s.r_max_m {
            check(
                rmax >= s.r_min_m && rmax <= h.coverage_radius_m,
                "sweep.r_max_m",
                "must lie in [r_min, R]".into(),
            );
        }
        check(
            s.r_min_m <= h.coverage_radius_m,
            "sweep.r_min_m",
            "must not exceed the coverage radius".into(),
        );
        if let Some(t) = s.tolerance_bps {
            check(t >= 0.0, "sweep.tolerance_bps", "must be >= 0".into());
        }
        if pos(n.aperture_diameter_m) {
            for (i, r) in self.rats.iter().enumerate() {
                if !pos(r.carrier_freq_hz) {
                    continue;
                }
                let floor = DIFFRACTION_FACTOR * r.wavelength() * hmin / n.aperture_diameter_m;
                check(
                    s.r_min_m >= floor,
                    "sweep.r_min_m",
                    format!(
                        "below the beam-radius floor {floor:.3} m for rats[{i}] ({})",
                        r.id
                    ),
                );
            }
        }

        if let Some(w) = self.access.regularization {
            check(w > 0.0, "access.regularization", "must be > 0".into());
        }
        check(
            self.access.sca_max_iters >= 1,
            "access.sca_max_iters",
            "must be >= 1".into(),
        );
        check(self.access.sca_tol >= 0.0, "access.sca_tol", "must be >= 0".into());
        check(self.trials >= 1, "trials", "must be >= 1".into());
        check(
            (1..=64).contains(&self.exact_cap),
            "exact_cap",
            "must lie in [1, 64]".into(),
        );
        check(self.bcd_passes >= 1, "bcd_passes", "must be >= 1".into());
        v
    }

    pub fn ensure_valid(&self) -> Result<()> {
        let v = self.validate();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(v))
        }
    }
}

/// Reads a JSON scenario file. Parsing only; call [`ScenarioConfig::validate`]
/// to check invariants.
pub fn load_config(path: impl AsRef<Path>) -> Result<ScenarioConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| Error::Parse {
        path: path.to_path_buf(),
        source,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundUser {
    pub id: usize,
    pub position: Point2,
    /// Index into `ScenarioConfig::rats`.
    pub rat: usize,
    pub noise_figure_db: f64,
    pub backhaul_dependent: bool,
    pub assoc_nib: Option<usize>,
    pub power_coeff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserSet {
    pub users: Vec<GroundUser>,
    /// Set when the Poisson draw produced no users.
    pub degenerate: bool,
}

impl UserSet {
    pub fn positions(&self) -> Vec<Point2> {
        self.users.iter().map(|u| u.position).collect()
    }
}

/// Draws the user population with the config seed.
pub fn generate_users(config: &ScenarioConfig) -> Result<UserSet> {
    generate_users_indexed(config, 0)
}

/// Draws the user population for Monte Carlo replica `index`.
pub fn generate_users_indexed(config: &ScenarioConfig, index: u64) -> Result<UserSet> {
    let density = config.user_density_per_km2;
    if !(density >= 0.0) || !density.is_finite() {
        return Err(Error::arg("generate_users", "density must be >= 0"));
    }
    if config.rats.is_empty() {
        return Err(Error::arg("generate_users", "no RAT profiles"));
    }
    let r = config.haps.coverage_radius_m;
    let mean = density * std::f64::consts::PI * r * r / 1e6;
    let mut rng = substream(config.seed, Stream::Users, index);
    let k = if mean > 0.0 {
        Poisson::new(mean)
            .map_err(|e| Error::arg("generate_users", e.to_string()))?
            .sample(&mut rng) as usize
    } else {
        0
    };
    let cdf: Vec<f64> = config
        .rats
        .iter()
        .scan(0.0, |acc, p| {
            *acc += p.demand_prob;
            Some(*acc)
        })
        .collect();
    let center = config.haps.center;
    let mut users = Vec::with_capacity(k);
    for id in 0..k {
        let rho = r * rng.random::<f64>().sqrt();
        let ang = std::f64::consts::TAU * rng.random::<f64>();
        let (s, c) = ang.sin_cos();
        let position = Point2::new(center.x + rho * c, center.y + rho * s);
        let u: f64 = rng.random::<f64>() * cdf[cdf.len() - 1];
        let rat = pick_rat(&cdf, &config.rats, u);
        let backhaul_dependent = rng.random::<f64>() < config.backhaul_fraction;
        users.push(GroundUser {
            id,
            position,
            rat,
            noise_figure_db: config.user_noise_figure_db,
            backhaul_dependent,
            assoc_nib: None,
            power_coeff: 0.0,
        });
    }
    let degenerate = users.is_empty();
    if degenerate {
        warn!("user draw is empty (mean {mean:.3}); scenario is degenerate");
    }
    Ok(UserSet { users, degenerate })
}

fn pick_rat(cdf: &[f64], rats: &[RatProfile], u: f64) -> usize {
    for (i, &c) in cdf.iter().enumerate() {
        if u < c && rats[i].demand_prob > 0.0 {
            return i;
        }
    }
    // u landed on the top edge; take the last RAT with positive mass.
    rats.iter().rposition(|r| r.demand_prob > 0.0).unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        let c = ScenarioConfig::default();
        assert_eq!(c.validate(), vec![]);
    }

    #[test]
    fn paper_environments_validate() {
        for env in [Environment::sub_urban(), Environment::urban(), Environment::dense_urban()] {
            let c = ScenarioConfig {
                environment: env,
                ..Default::default()
            };
            assert!(c.validate().is_empty());
        }
    }

    #[test]
    fn probability_mass_violation_names_field() {
        let mut c = ScenarioConfig::default();
        c.rats[3].demand_prob = 0.3;
        let v = c.validate();
        assert!(v.iter().any(|x| x.field == "rats.demand_prob"), "{v:?}");
    }

    #[test]
    fn altitude_bound_ordering() {
        let mut c = ScenarioConfig::default();
        c.nib.altitude_bounds_m = [3000.0, 200.0];
        let v = c.validate();
        assert!(v.iter().any(|x| x.field == "nib.altitude_bounds_m"), "{v:?}");
    }

    #[test]
    fn beam_floor_violation() {
        let mut c = ScenarioConfig::default();
        c.sweep.r_min_m = 1.0;
        assert!(c.validate().iter().any(|x| x.field == "sweep.r_min_m"));
    }

    #[test]
    fn zero_density_is_degenerate() {
        let c = ScenarioConfig {
            user_density_per_km2: 0.0,
            ..Default::default()
        };
        let u = generate_users(&c).unwrap();
        assert!(u.users.is_empty());
        assert!(u.degenerate);
    }

    #[test]
    fn degenerate_pmf() {
        let mut c = ScenarioConfig::default();
        for (r, p) in c.rats.iter_mut().zip([0.0, 0.0, 0.0, 1.0]) {
            r.demand_prob = p;
        }
        let u = generate_users(&c).unwrap();
        assert!(!u.users.is_empty());
        assert!(u.users.iter().all(|u| u.rat == 3));
    }

    #[test]
    fn schedule_interpolates_and_wraps() {
        let mut h = ScenarioConfig::default().haps;
        h.power_schedule = vec![
            PowerSample { hour: 6.0, watts: 10.0 },
            PowerSample { hour: 18.0, watts: 30.0 },
        ];
        h.hour_of_day = 12.0;
        assert!((h.effective_tx_power() - 20.0).abs() < 1e-12);
        h.hour_of_day = 0.0;
        assert!((h.effective_tx_power() - 20.0).abs() < 1e-12);
    }
}
