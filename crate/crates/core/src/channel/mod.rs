//! Link budget: fading samplers, beam gains, path losses, noise and the
//! assembled access and backhaul channels.

pub mod bessel;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point2;
use crate::scenario::Environment;
use crate::units::{db_to_lin, dbm_to_w, lin_to_db, SPEED_OF_LIGHT, THERMAL_NOISE_DBM_HZ};

/// The argument scale that puts the aperture pattern's half-power point at
/// the configured half-power angle.
pub const HALF_POWER_MU: f64 = 2.07123;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FadingDist {
    Rayleigh { scale: f64 },
    Rician { nu: f64, sigma: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FadingSample {
    pub coeff: Complex64,
    pub dist: FadingDist,
}

impl FadingSample {
    pub fn power(&self) -> f64 {
        self.coeff.norm_sqr()
    }
}

fn normal_pair<R: Rng + ?Sized>(rng: &mut R) -> (f64, f64) {
    let a: f64 = rng.sample(StandardNormal);
    let b: f64 = rng.sample(StandardNormal);
    (a, b)
}

/// Rayleigh fading: real and imaginary parts i.i.d. `N(0, scale^2)`.
pub fn sample_rayleigh<R: Rng + ?Sized>(scale: f64, rng: &mut R) -> Result<FadingSample> {
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::arg("sample_rayleigh", format!("scale must be > 0, got {scale}")));
    }
    let (a, b) = normal_pair(rng);
    Ok(FadingSample {
        coeff: Complex64::new(scale * a, scale * b),
        dist: FadingDist::Rayleigh { scale },
    })
}

/// Rician fading with K-factor `k = nu^2 / (2 sigma^2)` and `E|g|^2 = mean_power`.
/// The line-of-sight component is taken on the real axis.
pub fn sample_rician<R: Rng + ?Sized>(k: f64, mean_power: f64, rng: &mut R) -> Result<FadingSample> {
    if !(k >= 0.0) {
        return Err(Error::arg("sample_rician", format!("K-factor must be >= 0, got {k}")));
    }
    if !(mean_power > 0.0) {
        return Err(Error::arg("sample_rician", "mean power must be > 0"));
    }
    let (nu, sigma) = rician_params(k, mean_power);
    let (a, b) = normal_pair(rng);
    Ok(FadingSample {
        coeff: Complex64::new(nu + sigma * a, sigma * b),
        dist: FadingDist::Rician { nu, sigma },
    })
}

/// `(nu, sigma)` for a given K-factor and mean power.
pub fn rician_params(k: f64, mean_power: f64) -> (f64, f64) {
    if k.is_infinite() {
        return (mean_power.sqrt(), 0.0);
    }
    let nu = (k / (k + 1.0) * mean_power).sqrt();
    let sigma = (mean_power / (2.0 * (k + 1.0))).sqrt();
    (nu, sigma)
}

/// Access beam gain (linear) at off-axis angle `theta_off_deg` for a beam with
/// one-sided half-power angle `hpbw_deg` and peak gain `g_max` (linear).
pub fn al_beam_gain(theta_off_deg: f64, hpbw_deg: f64, g_max: f64) -> Result<f64> {
    if !(hpbw_deg > 0.0) {
        return Err(Error::arg("al_beam_gain", "half-power angle must be > 0"));
    }
    if !(0.0..90.0).contains(&theta_off_deg) {
        return Err(Error::arg(
            "al_beam_gain",
            format!("off-axis angle {theta_off_deg} outside [0, 90)"),
        ));
    }
    if theta_off_deg == 0.0 {
        return Ok(g_max);
    }
    let mu = HALF_POWER_MU * theta_off_deg.to_radians().sin() / hpbw_deg.to_radians().sin();
    let f = bessel::aperture_factor(mu);
    Ok(g_max * f * f)
}

/// Air-to-ground path loss in dB at slant distance `d` from a platform at
/// altitude `h`.
pub fn al_path_loss_db(d: f64, h: f64, carrier_hz: f64, env: &Environment) -> Result<f64> {
    if !(h > 0.0) || !(carrier_hz > 0.0) {
        return Err(Error::arg("al_path_loss", "altitude and carrier must be > 0"));
    }
    if d < h * (1.0 - 1e-12) {
        return Err(Error::arg(
            "al_path_loss",
            format!("slant distance {d} shorter than altitude {h}"),
        ));
    }
    let phi = (h / d).min(1.0).asin().to_degrees();
    let big_a = env.excess_gap_db();
    let sigmoid = big_a / (1.0 + env.a * (-env.b * (phi - env.a)).exp());
    Ok(sigmoid
        + 20.0 * d.log10()
        + 20.0 * (4.0 * std::f64::consts::PI * carrier_hz / SPEED_OF_LIGHT).log10()
        + env.eta_nlos_db)
}

/// Peak HAPS antenna gain `eta * (70 pi / theta3)^2` (linear, theta3 in degrees).
pub fn haps_peak_gain(eta: f64, hpbw_deg: f64) -> f64 {
    let x = 70.0 * std::f64::consts::PI / hpbw_deg;
    eta * x * x
}

/// HAPS antenna gain (linear) toward a NIB at `nib_center`, altitude `h_nib`.
pub fn haps_beam_gain(
    nib_center: Point2,
    beam_center: Point2,
    h_haps: f64,
    h_nib: f64,
    eta: f64,
    hpbw_deg: f64,
) -> Result<f64> {
    if !(h_haps > h_nib) {
        return Err(Error::arg(
            "haps_beam_gain",
            format!("HAPS altitude {h_haps} must exceed NIB altitude {h_nib}"),
        ));
    }
    if !(hpbw_deg > 0.0) || !(eta > 0.0) {
        return Err(Error::arg("haps_beam_gain", "efficiency and beamwidth must be > 0"));
    }
    let g0_db = lin_to_db(haps_peak_gain(eta, hpbw_deg));
    let theta = (nib_center.dist(beam_center) / (h_haps - h_nib)).atan().to_degrees();
    let ratio = theta / hpbw_deg;
    Ok(db_to_lin(g0_db - 12.0 * ratio * ratio))
}

/// Free-space loss `(4 pi d / lambda)^2`, linear.
pub fn haps_fspl(d: f64, lambda: f64) -> Result<f64> {
    if !(d > 0.0) || !(lambda > 0.0) {
        return Err(Error::arg("haps_fspl", "distance and wavelength must be > 0"));
    }
    let x = 4.0 * std::f64::consts::PI * d / lambda;
    Ok(x * x)
}

pub fn noise_power_dbm(bandwidth_hz: f64, nf_db: f64) -> f64 {
    THERMAL_NOISE_DBM_HZ + 10.0 * bandwidth_hz.log10() + nf_db
}

pub fn noise_power_w(bandwidth_hz: f64, nf_db: f64) -> f64 {
    dbm_to_w(noise_power_dbm(bandwidth_hz, nf_db))
}

/// Where a NIB beam points and how wide it is; enough to evaluate the access
/// link from any ground position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamPose {
    pub center: Point2,
    pub altitude_m: f64,
    pub hpbw_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccessChannel {
    /// Per-antenna composite gains `h = h~ * sqrt(G / L)`.
    pub h: Vec<Complex64>,
    pub fading: Vec<Complex64>,
    pub beam_gain: f64,
    pub path_loss: f64,
    pub off_axis_deg: f64,
    pub elevation_deg: f64,
    pub distance_m: f64,
}

impl AccessChannel {
    pub fn norm_sqr(&self) -> f64 {
        self.h.iter().map(|c| c.norm_sqr()).sum()
    }
}

/// Large-scale part of an access link: `(G, L, theta_off, phi, d)`.
pub fn access_large_scale(
    user: Point2,
    pose: &BeamPose,
    carrier_hz: f64,
    env: &Environment,
    g_max: f64,
) -> Result<(f64, f64, f64, f64, f64)> {
    let horiz = user.dist(pose.center);
    let d = horiz.hypot(pose.altitude_m);
    let off_axis = horiz.atan2(pose.altitude_m).to_degrees();
    let elevation = 90.0 - off_axis;
    let gain = al_beam_gain(off_axis.min(89.999_999), pose.hpbw_deg, g_max)?;
    let loss = db_to_lin(al_path_loss_db(d, pose.altitude_m, carrier_hz, env)?);
    Ok((gain, loss, off_axis, elevation, d))
}

/// Assembles an access channel from given small-scale coefficients.
pub fn access_channel_with_fading(
    user: Point2,
    pose: &BeamPose,
    carrier_hz: f64,
    env: &Environment,
    g_max: f64,
    fading: Vec<Complex64>,
) -> Result<AccessChannel> {
    let (gain, loss, off_axis, elevation, d) = access_large_scale(user, pose, carrier_hz, env, g_max)?;
    let amp = (gain / loss).sqrt();
    Ok(AccessChannel {
        h: fading.iter().map(|f| f * amp).collect(),
        fading,
        beam_gain: gain,
        path_loss: loss,
        off_axis_deg: off_axis,
        elevation_deg: elevation,
        distance_m: d,
    })
}

/// Draws `n_antennas` Rayleigh coefficients and assembles the access channel.
#[allow(clippy::too_many_arguments)]
pub fn build_access_channel<R: Rng + ?Sized>(
    user: Point2,
    pose: &BeamPose,
    carrier_hz: f64,
    env: &Environment,
    g_max: f64,
    n_antennas: usize,
    rayleigh_scale: f64,
    rng: &mut R,
) -> Result<AccessChannel> {
    let fading = (0..n_antennas)
        .map(|_| sample_rayleigh(rayleigh_scale, rng).map(|s| s.coeff))
        .collect::<Result<Vec<_>>>()?;
    access_channel_with_fading(user, pose, carrier_hz, env, g_max, fading)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackhaulChannel {
    pub g: Complex64,
    pub fading: Complex64,
    pub haps_gain: f64,
    pub fspl: f64,
    pub noise_w: f64,
    /// Normalized effective noise `sigma^2 L / (P_H |g~|^2 G)`.
    pub aleph: f64,
    pub distance_m: f64,
}

/// Static HAPS-side parameters of the backhaul link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HapsLink {
    pub center: Point2,
    pub altitude_m: f64,
    pub tx_power_w: f64,
    pub wavelength_m: f64,
    pub aperture_efficiency: f64,
    pub hpbw_deg: f64,
    pub bandwidth_hz: f64,
}

/// Assembles the backhaul channel from a given fading coefficient.
pub fn backhaul_channel_with_fading(
    nib_center: Point2,
    nib_altitude_m: f64,
    nib_noise_figure_db: f64,
    haps: &HapsLink,
    fading: Complex64,
) -> Result<BackhaulChannel> {
    let gain = haps_beam_gain(
        nib_center,
        haps.center,
        haps.altitude_m,
        nib_altitude_m,
        haps.aperture_efficiency,
        haps.hpbw_deg,
    )?;
    let d = nib_center
        .dist(haps.center)
        .hypot(haps.altitude_m - nib_altitude_m);
    let fspl = haps_fspl(d, haps.wavelength_m)?;
    let noise = noise_power_w(haps.bandwidth_hz, nib_noise_figure_db);
    let fp = fading.norm_sqr();
    if !(fp > 0.0) {
        return Err(Error::arg("build_backhaul_channel", "fading coefficient is zero"));
    }
    Ok(BackhaulChannel {
        g: fading * (gain / fspl).sqrt(),
        fading,
        haps_gain: gain,
        fspl,
        noise_w: noise,
        aleph: noise * fspl / (haps.tx_power_w * fp * gain),
        distance_m: d,
    })
}

/// Draws Rician fading (unit mean power) and assembles the backhaul channel.
pub fn build_backhaul_channel<R: Rng + ?Sized>(
    nib_center: Point2,
    nib_altitude_m: f64,
    nib_noise_figure_db: f64,
    haps: &HapsLink,
    k_factor: f64,
    rng: &mut R,
) -> Result<BackhaulChannel> {
    let f = sample_rician(k_factor, 1.0, rng)?;
    backhaul_channel_with_fading(nib_center, nib_altitude_m, nib_noise_figure_db, haps, f.coeff)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boresight_gain_is_exact() {
        assert_eq!(al_beam_gain(0.0, 12.0, 199.5).unwrap(), 199.5);
        assert!(al_beam_gain(1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn half_power_point() {
        for hp in [5.0, 12.0, 30.0, 60.0] {
            let g = al_beam_gain(hp, hp, 1.0).unwrap();
            assert!((g - 0.5).abs() < 0.01, "{hp}: {g}");
        }
    }

    #[test]
    fn fspl_reference_distance() {
        let lambda = 0.05;
        let l = haps_fspl(lambda / (4.0 * std::f64::consts::PI), lambda).unwrap();
        assert!((l - 1.0).abs() < 1e-12);
    }

    #[test]
    fn noise_floor_values() {
        assert!((noise_power_dbm(100e6, 0.0) + 94.0).abs() < 1e-12);
        assert_eq!(noise_power_dbm(1.0, 0.0), -174.0);
        assert!((noise_power_dbm(1e6, 7.0) - noise_power_dbm(1e6, 0.0) - 7.0).abs() < 1e-12);
    }

    #[test]
    fn path_loss_rejects_impossible_geometry() {
        assert!(al_path_loss_db(99.0, 100.0, 2e9, &Environment::urban()).is_err());
    }
}
