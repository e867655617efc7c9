//! Beam geometry per NIB: minimum enclosing circle of the associated users,
//! the path-loss-optimal elevation angle, and the bounded altitude/beamwidth.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::BeamPose;
use crate::error::{Error, Result};
use crate::geometry::Point2;
use crate::scenario::{Environment, NibConfig, DIFFRACTION_FACTOR};
use crate::units::SPEED_OF_LIGHT;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Circle {
    pub center: Point2,
    pub radius: f64,
}

impl Circle {
    fn holds(&self, p: Point2) -> bool {
        let slack = 1e-12 * (self.radius + self.center.x.abs() + self.center.y.abs()) + 1e-300;
        self.center.dist(p) <= self.radius + slack
    }
}

fn circle2(a: Point2, b: Point2) -> Circle {
    let center = Point2::new(0.5 * (a.x + b.x), 0.5 * (a.y + b.y));
    Circle {
        center,
        radius: 0.5 * a.dist(b),
    }
}

/// Circumcircle of three points; falls back to the widest pair when the
/// points are (nearly) collinear.
fn circle3(a: Point2, b: Point2, c: Point2) -> Circle {
    let (bx, by) = (b.x - a.x, b.y - a.y);
    let (cx, cy) = (c.x - a.x, c.y - a.y);
    let d = 2.0 * (bx * cy - by * cx);
    let scale = (bx * bx + by * by).max(cx * cx + cy * cy);
    if d.abs() <= 1e-14 * scale {
        let cands = [circle2(a, b), circle2(a, c), circle2(b, c)];
        return cands
            .into_iter()
            .max_by(|x, y| x.radius.total_cmp(&y.radius))
            .expect("three candidates");
    }
    let b2 = bx * bx + by * by;
    let c2 = cx * cx + cy * cy;
    let ux = (cy * b2 - by * c2) / d;
    let uy = (bx * c2 - cx * b2) / d;
    Circle {
        center: Point2::new(a.x + ux, a.y + uy),
        radius: ux.hypot(uy),
    }
}

/// Smallest circle containing all points (randomized incremental algorithm
/// with a fixed shuffle seed, so results are reproducible).
pub fn min_enclosing_circle(points: &[Point2]) -> Result<Circle> {
    if points.is_empty() {
        return Err(Error::arg("min_enclosing_circle", "empty point set"));
    }
    let mut p = points.to_vec();
    p.shuffle(&mut ChaCha8Rng::seed_from_u64(0x6d65_6321));
    let mut c = Circle {
        center: p[0],
        radius: 0.0,
    };
    for i in 1..p.len() {
        if c.holds(p[i]) {
            continue;
        }
        c = Circle {
            center: p[i],
            radius: 0.0,
        };
        for j in 0..i {
            if c.holds(p[j]) {
                continue;
            }
            c = circle2(p[i], p[j]);
            for k in 0..j {
                if !c.holds(p[k]) {
                    c = circle3(p[i], p[j], p[k]);
                }
            }
        }
    }
    Ok(c)
}

/// Dual quadratic-program view of the enclosing circle: simplex weights
/// `kappa` over the points, center `U^T kappa` and
/// `radius = sqrt(kappa^T Xi kappa - iota)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QpCircle {
    pub center: Point2,
    pub radius: f64,
    pub kappa: Vec<f64>,
    pub iota: f64,
}

fn project_simplex(v: &mut [f64]) {
    let mut s: Vec<f64> = v.to_vec();
    s.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut tau = 0.0;
    for (i, &x) in s.iter().enumerate() {
        cum += x;
        let t = (cum - 1.0) / (i + 1) as f64;
        if x - t > 0.0 {
            tau = t;
        }
    }
    for x in v.iter_mut() {
        *x = (*x - tau).max(0.0);
    }
}

/// Solves `min kappa^T Xi kappa - d^T kappa` over the simplex with
/// accelerated projected gradient, then polishes on the active support.
pub fn mec_qp(points: &[Point2], iters: usize) -> Result<QpCircle> {
    if points.is_empty() {
        return Err(Error::arg("mec_qp", "empty point set"));
    }
    let n = points.len();
    let mean = points.iter().fold(Point2::ORIGIN, |a, &p| a + p) * (1.0 / n as f64);
    let u: Vec<Point2> = points.iter().map(|&p| p - mean).collect();
    let d: Vec<f64> = u.iter().map(|p| p.x * p.x + p.y * p.y).collect();
    let (sxx, sxy, syy) = u.iter().fold((0.0, 0.0, 0.0), |(a, b, c), p| {
        (a + p.x * p.x, b + p.x * p.y, c + p.y * p.y)
    });
    let lmax = 0.5 * (sxx + syy) + (0.25 * (sxx - syy).powi(2) + sxy * sxy).sqrt();
    let lip = (2.0 * lmax).max(1e-300);
    let center_of = |k: &[f64]| {
        k.iter()
            .zip(&u)
            .fold(Point2::ORIGIN, |a, (&w, &p)| a + p * w)
    };
    let mut x = vec![1.0 / n as f64; n];
    let mut y = x.clone();
    let mut t = 1.0f64;
    for _ in 0..iters {
        let w = center_of(&y);
        let mut z: Vec<f64> = (0..n)
            .map(|k| y[k] - (2.0 * (u[k].x * w.x + u[k].y * w.y) - d[k]) / lip)
            .collect();
        project_simplex(&mut z);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let beta = (t - 1.0) / t_next;
        for k in 0..n {
            y[k] = z[k] + beta * (z[k] - x[k]);
        }
        x = z;
        t = t_next;
    }
    let kappa = polish(&u, &x).unwrap_or(x);
    let w = center_of(&kappa);
    let quad = w.x * w.x + w.y * w.y;
    // iota from stationarity on the support: 2 u_k^T w - |u_k|^2.
    let mut num = 0.0;
    let mut den = 0.0;
    for k in 0..n {
        if kappa[k] > 0.0 {
            num += kappa[k] * (2.0 * (u[k].x * w.x + u[k].y * w.y) - d[k]);
            den += kappa[k];
        }
    }
    let iota = num / den;
    Ok(QpCircle {
        center: w + mean,
        radius: (quad - iota).max(0.0).sqrt(),
        kappa,
        iota,
    })
}

/// Re-solves the KKT system exactly on the (at most three) heaviest weights
/// and keeps the result only if it is primal and dual feasible.
fn polish(u: &[Point2], k: &[f64]) -> Option<Vec<f64>> {
    let mut idx: Vec<usize> = (0..k.len()).filter(|&i| k[i] > 1e-9).collect();
    idx.sort_by(|&a, &b| k[b].total_cmp(&k[a]).then(a.cmp(&b)));
    idx.truncate(3);
    let circle = match idx.len() {
        1 => Circle {
            center: u[idx[0]],
            radius: 0.0,
        },
        2 => circle2(u[idx[0]], u[idx[1]]),
        _ => circle3(u[idx[0]], u[idx[1]], u[idx[2]]),
    };
    if !u.iter().all(|&p| circle.holds(p)) {
        return None;
    }
    // Barycentric weights of the center with respect to the support.
    let mut out = vec![0.0; k.len()];
    match idx.len() {
        1 => out[idx[0]] = 1.0,
        2 => {
            out[idx[0]] = 0.5;
            out[idx[1]] = 0.5;
        }
        _ => {
            let (a, b, c) = (u[idx[0]], u[idx[1]], u[idx[2]]);
            let w = circle.center;
            let det = (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y);
            if det.abs() < 1e-300 {
                return None;
            }
            let l1 = ((w.x - a.x) * (c.y - a.y) - (c.x - a.x) * (w.y - a.y)) / det;
            let l2 = ((b.x - a.x) * (w.y - a.y) - (w.x - a.x) * (b.y - a.y)) / det;
            let l0 = 1.0 - l1 - l2;
            if l0 < -1e-9 || l1 < -1e-9 || l2 < -1e-9 {
                return None;
            }
            out[idx[0]] = l0.max(0.0);
            out[idx[1]] = l1.max(0.0);
            out[idx[2]] = l2.max(0.0);
            let s: f64 = out.iter().sum();
            out.iter_mut().for_each(|x| *x /= s);
        }
    }
    Some(out)
}

/// Path loss (dB) at the edge of a beam of ground radius `r` seen from
/// elevation `phi_deg`: the air-to-ground model at `d = r sec(phi)`.
pub fn edge_path_loss_db(phi_deg: f64, r: f64, env: &Environment, carrier_hz: f64) -> f64 {
    let phi = phi_deg.to_radians();
    let sigmoid = env.excess_gap_db() / (1.0 + env.a * (-env.b * (phi_deg - env.a)).exp());
    sigmoid
        + 20.0 * (r / phi.cos()).log10()
        + 20.0 * (4.0 * std::f64::consts::PI * carrier_hz / SPEED_OF_LIGHT).log10()
        + env.eta_nlos_db
}

/// Derivative of [`edge_path_loss_db`] with respect to the elevation (dB per
/// degree). Independent of `r` and the carrier.
pub fn edge_path_loss_slope(phi_deg: f64, env: &Environment) -> f64 {
    let abar = env.a * (env.a * env.b).exp();
    let e = abar * (-env.b * phi_deg).exp();
    env.excess_gap_db() * env.b * e / ((1.0 + e) * (1.0 + e))
        + 20.0 / std::f64::consts::LN_10 * phi_deg.to_radians().tan() * std::f64::consts::PI / 180.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Elevation {
    pub phi_deg: f64,
    /// Set when the minimum sits on the boundary of (0, 90) degrees.
    pub boundary: bool,
    pub diagnostic: Option<String>,
}

/// Elevation angle minimizing the cell-edge path loss, by bisection on the
/// analytic slope.
pub fn optimal_elevation(r: f64, env: &Environment, carrier_hz: f64) -> Result<Elevation> {
    if !(r > 0.0) || !(carrier_hz > 0.0) {
        return Err(Error::arg("optimal_elevation", "radius and carrier must be > 0"));
    }
    if env.excess_gap_db() >= 0.0 {
        return Ok(Elevation {
            phi_deg: 0.0,
            boundary: true,
            diagnostic: Some("no LOS advantage (A >= 0); loss is minimized at the horizon".into()),
        });
    }
    let (mut lo, mut hi) = (1e-9, 90.0 - 1e-9);
    let (slo, shi) = (edge_path_loss_slope(lo, env), edge_path_loss_slope(hi, env));
    if slo >= 0.0 || shi <= 0.0 {
        let phi = if slo >= 0.0 { lo } else { hi };
        return Ok(Elevation {
            phi_deg: phi,
            boundary: true,
            diagnostic: Some(format!("slope has no sign change (ends {slo:.3e}, {shi:.3e})")),
        });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let s = edge_path_loss_slope(mid, env);
        if s.abs() < 1e-12 || hi - lo < 1e-13 {
            lo = mid;
            hi = mid;
            break;
        }
        if s < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Elevation {
        phi_deg: 0.5 * (lo + hi),
        boundary: false,
        diagnostic: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamGeometry {
    pub center: Point2,
    pub radius_m: f64,
    pub elevation_deg: f64,
    pub altitude_m: f64,
    pub hpbw_deg: f64,
    /// True when a bound moved the geometry away from the unconstrained optimum.
    pub clamped: bool,
}

impl BeamGeometry {
    pub fn pose(&self) -> BeamPose {
        BeamPose {
            center: self.center,
            altitude_m: self.altitude_m,
            hpbw_deg: self.hpbw_deg,
        }
    }
}

/// Turns an enclosing circle and elevation into altitude and beamwidth that
/// respect the altitude, beamwidth and diffraction bounds. The radius may only
/// grow, so coverage of the enclosed users is preserved.
pub fn finalize_geometry(circle: Circle, phi_deg: f64, nib: &NibConfig, wavelength_m: f64) -> Result<BeamGeometry> {
    let [hmin, hmax] = nib.altitude_bounds_m;
    let [tmin, tmax] = nib.hpbw_bounds_deg;
    let floor_coeff = DIFFRACTION_FACTOR * wavelength_m / nib.aperture_diameter_m;
    let infeasible = |why: String| Err(Error::Infeasible(format!("beam geometry: {why}")));
    if circle.radius > hmax * tmax.to_radians().tan() * (1.0 + 1e-12) {
        return infeasible(format!(
            "radius {:.1} m exceeds H_max tan(theta_max) = {:.1} m",
            circle.radius,
            hmax * tmax.to_radians().tan()
        ));
    }
    let mut clamped = false;
    let mut phi = phi_deg;
    if phi < 90.0 - tmax || phi > 90.0 - tmin {
        phi = phi.clamp(90.0 - tmax, 90.0 - tmin);
        clamped = true;
    }
    let mut r = circle.radius;
    let mut h = r * phi.to_radians().tan();
    if h > hmax {
        h = hmax;
        phi = (h / r).atan().to_degrees();
        clamped = true;
    } else if h < hmin {
        h = hmin;
        clamped = true;
        let theta = if r > 0.0 { 90.0 - (h / r).atan().to_degrees() } else { 0.0 };
        if theta < tmin {
            r = h * tmin.to_radians().tan();
        }
        phi = (h / r).atan().to_degrees();
    }
    let floor = floor_coeff * h;
    if r < floor {
        r = floor;
        phi = (h / r).atan().to_degrees();
        clamped = true;
    }
    let theta = 90.0 - phi;
    if theta > tmax * (1.0 + 1e-12) || theta < tmin * (1.0 - 1e-12) {
        return infeasible(format!(
            "no beamwidth in [{tmin}, {tmax}] deg fits radius {r:.1} m at altitude {h:.1} m"
        ));
    }
    Ok(BeamGeometry {
        center: circle.center,
        radius_m: r,
        elevation_deg: phi,
        altitude_m: h,
        hpbw_deg: theta,
        clamped,
    })
}

/// Beam optimization for one NIB: enclosing circle of its users, then the
/// elevation and bounds. Repeating the two blocks is a fixed point for fixed
/// membership, so extra passes only re-verify it.
pub fn optimize_beam(
    users: &[Point2],
    env: &Environment,
    carrier_hz: f64,
    nib: &NibConfig,
    wavelength_m: f64,
    passes: usize,
) -> Result<BeamGeometry> {
    let mut geom = None;
    for _ in 0..passes.max(1) {
        let mec = min_enclosing_circle(users)?;
        let phi = optimal_elevation(mec.radius.max(1e-9), env, carrier_hz)?.phi_deg;
        geom = Some(finalize_geometry(mec, phi, nib, wavelength_m)?);
    }
    Ok(geom.expect("at least one pass"))
}

/// Beam for a freshly deployed disk: the deployment radius itself with the
/// optimal elevation, before any users are associated.
pub fn provisional_geometry(
    center: Point2,
    radius_m: f64,
    env: &Environment,
    carrier_hz: f64,
    nib: &NibConfig,
    wavelength_m: f64,
) -> Result<BeamGeometry> {
    let phi = optimal_elevation(radius_m, env, carrier_hz)?.phi_deg;
    finalize_geometry(
        Circle {
            center,
            radius: radius_m,
        },
        phi,
        nib,
        wavelength_m,
    )
}
