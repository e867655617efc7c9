//! Bessel functions of the first kind for small integer orders, and the
//! aperture-pattern factor used by the access beam gain.

/// Below this magnitude the ascending series is used; above it the
/// Hankel asymptotic expansion.
const SERIES_LIMIT: f64 = 12.0;

/// `J_n(x)` for integer order `n`.
pub fn bessel_j(n: u32, x: f64) -> f64 {
    let sign = if x < 0.0 && n % 2 == 1 { -1.0 } else { 1.0 };
    let ax = x.abs();
    let v = if ax < SERIES_LIMIT {
        let mut lead = 1.0;
        for k in 1..=n {
            lead *= 0.5 * ax / k as f64;
        }
        lead * reduced_series(n, ax)
    } else {
        asymptotic(n, ax)
    };
    sign * v
}

/// `sum_k (-q)^k / (k! (k+n)!) * n!` with `q = (x/2)^2`, i.e. `J_n(x)` divided
/// by its leading term. Stays well conditioned as `x -> 0`.
fn reduced_series(n: u32, x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 0u32;
    loop {
        k += 1;
        term *= -q / (k as f64 * (k + n) as f64);
        sum += term;
        if term.abs() <= 1e-17 * sum.abs().max(1e-300) && k as f64 > 0.5 * x {
            return sum;
        }
        if k > 200 {
            return sum;
        }
    }
}

fn asymptotic(n: u32, x: f64) -> f64 {
    let mu = 4.0 * (n as f64) * (n as f64);
    let chi = x - (0.5 * n as f64 + 0.25) * std::f64::consts::PI;
    // P and Q share one running product of (mu - (2k-1)^2) / (k! (8x)^k).
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0;
    let mut prev = f64::INFINITY;
    for k in 1..60u32 {
        let odd = (2 * k - 1) as f64;
        term *= (mu - odd * odd) / (k as f64 * 8.0 * x);
        if term.abs() > prev || term == 0.0 {
            break;
        }
        prev = term.abs();
        // k odd feeds Q with signs +,-,+...; k even feeds P with -,+,-...
        match k % 4 {
            1 => q += term,
            2 => p -= term,
            3 => q -= term,
            _ => p += term,
        }
    }
    (2.0 / (std::f64::consts::PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}

/// `J1(mu)/(2 mu) + 36 J3(mu)/mu^3`, equal to exactly 1 at `mu = 0`.
pub fn aperture_factor(mu: f64) -> f64 {
    let m = mu.abs();
    if m < SERIES_LIMIT {
        0.25 * reduced_series(1, m) + 0.75 * reduced_series(3, m)
    } else {
        bessel_j(1, m) / (2.0 * m) + 36.0 * bessel_j(3, m) / (m * m * m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `J_n(x) = (1/pi) * int_0^pi cos(n t - x sin t) dt`; the trapezoid rule
    /// converges geometrically for this smooth periodic integrand.
    fn bessel_integral(n: u32, x: f64) -> f64 {
        let steps = 4000;
        let h = std::f64::consts::PI / steps as f64;
        let f = |t: f64| (n as f64 * t - x * t.sin()).cos();
        let mut s = 0.5 * (f(0.0) + f(std::f64::consts::PI));
        for i in 1..steps {
            s += f(i as f64 * h);
        }
        s * h / std::f64::consts::PI
    }

    #[test]
    fn matches_integral_representation() {
        for n in [0u32, 1, 2, 3] {
            let mut x = -30.0;
            while x <= 40.0 {
                let a = bessel_j(n, x);
                let b = bessel_integral(n, x);
                assert!((a - b).abs() < 1e-9, "J{n}({x}): {a} vs {b}");
                x += 0.173;
            }
        }
    }

    #[test]
    fn known_values() {
        // Abramowitz and Stegun table 9.1.
        assert!((bessel_j(0, 1.0) - 0.765_197_686_557_966_6).abs() < 1e-14);
        assert!((bessel_j(1, 1.0) - 0.440_050_585_744_933_5).abs() < 1e-14);
        assert!((bessel_j(3, 5.0) - 0.364_831_230_613_666_9).abs() < 1e-13);
    }

    #[test]
    fn aperture_factor_continuity_at_switch() {
        let lo = aperture_factor(SERIES_LIMIT - 1e-9);
        let hi = aperture_factor(SERIES_LIMIT + 1e-9);
        assert!((lo - hi).abs() < 1e-10);
        assert_eq!(aperture_factor(0.0), 1.0);
    }
}
