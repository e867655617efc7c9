//! dB conversions and physical constants. Everything inside the library is in
//! linear SI units; these helpers are used at the I/O boundary.

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Thermal noise density at 290 K in dBm/Hz.
pub const THERMAL_NOISE_DBM_HZ: f64 = -174.0;

pub fn db_to_lin(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn lin_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

pub fn dbm_to_w(dbm: f64) -> f64 {
    db_to_lin(dbm - 30.0)
}

pub fn w_to_dbm(w: f64) -> f64 {
    lin_to_db(w) + 30.0
}

pub fn dbw_to_w(dbw: f64) -> f64 {
    db_to_lin(dbw)
}

pub fn w_to_dbw(w: f64) -> f64 {
    lin_to_db(w)
}

pub fn wavelength(freq_hz: f64) -> f64 {
    SPEED_OF_LIGHT / freq_hz
}
