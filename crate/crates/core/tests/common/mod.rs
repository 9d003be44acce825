//! Independent reference computations shared by the integration tests.
//!
//! Nothing here calls into the crate's quadrature or phase-function code; the
//! integrand is rebuilt from the raw scattering formulas and integrated with
//! a fixed-step composite Simpson rule.

#![allow(dead_code)]

use std::f64::consts::PI;
use std::sync::OnceLock;

use uvscatter::gaintable::{build_table, grids, BuildInfo};
use uvscatter::{GainTable, Profile, QuadratureOptions};

/// Raw coefficients of the literature-default profile, restated here.
pub const K_RAY: f64 = 2.4e-4;
pub const K_MIE: f64 = 2.5e-4;
pub const K_A: f64 = 9.0e-4;
pub const G: f64 = 0.72;
pub const F: f64 = 0.5;
pub const GAMMA: f64 = 0.017;

pub fn oracle_phase(mu: f64) -> f64 {
    let k_s = K_RAY + K_MIE;
    let ray =
        3.0 * (1.0 + 3.0 * GAMMA + (1.0 - GAMMA) * mu * mu) / (16.0 * PI * (1.0 + 2.0 * GAMMA));
    let hg = (1.0 - G * G) / (4.0 * PI)
        * (1.0 / (1.0 + G * G - 2.0 * G * mu).powf(1.5)
            + F * (3.0 * mu * mu - 1.0) / (2.0 * (1.0 + G * G).powf(1.5)));
    (K_RAY * ray + K_MIE * hg) / k_s
}

/// Scattered-power density at path length `l` for receiver `(x, y)`, beam
/// elevation `alpha`, unit aperture, computed from 3D vectors.
pub fn oracle_integrand(x: f64, y: f64, alpha: f64, l: f64) -> f64 {
    let k_s = K_RAY + K_MIE;
    let k_e = k_s + K_A;
    let dir = [0.0, alpha.cos(), alpha.sin()];
    let p = [l * dir[0], l * dir[1], l * dir[2]];
    let to_rx = [x - p[0], y - p[1], -p[2]];
    let lp = (to_rx[0].powi(2) + to_rx[1].powi(2) + to_rx[2].powi(2)).sqrt();
    if lp == 0.0 {
        return 0.0;
    }
    let mu = (dir[0] * to_rx[0] + dir[1] * to_rx[1] + dir[2] * to_rx[2]) / lp;
    // horizontal aperture seen from height p_z at distance l′
    let omega = p[2] / lp / (lp * lp);
    oracle_phase(mu.clamp(-1.0, 1.0)) * omega * k_s * (-k_e * (l + lp)).exp()
}

/// Composite Simpson rule with `n` (even) steps over `[a, b]`.
pub fn simpson<Fn1: Fn(f64) -> f64>(f: Fn1, a: f64, b: f64, n: usize) -> f64 {
    assert!(n.is_multiple_of(2));
    let h = (b - a) / n as f64;
    let mut odd = 0.0;
    let mut even = 0.0;
    for k in 1..n {
        let v = f(a + k as f64 * h);
        if k % 2 == 1 {
            odd += v;
        } else {
            even += v;
        }
    }
    h / 3.0 * (f(a) + f(b) + 4.0 * odd + 2.0 * even)
}

/// Brute-force link gain: 10⁶-step Simpson over `[0, 30 / k_e]`.
pub fn simpson_gain(x: f64, y: f64, alpha: f64) -> f64 {
    let k_e = K_RAY + K_MIE + K_A;
    simpson(
        |l| oracle_integrand(x, y, alpha, l),
        0.0,
        30.0 / k_e,
        1_000_000,
    )
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Deterministic xorshift stream for picking test geometries.
pub struct Xorshift(pub u64);

impl Xorshift {
    pub fn next_f64(&mut self) -> f64 {
        self.0 ^= self.0 << 13;
        self.0 ^= self.0 >> 7;
        self.0 ^= self.0 << 17;
        (self.0 >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }
}

/// Desk-scale (201×100) table under the literature-default profile, built once per test binary.
pub fn desk_table() -> &'static GainTable {
    static TABLE: OnceLock<GainTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        let p = Profile::literature_default();
        build_table(
            &grids::desk_r(),
            &grids::desk_alpha(),
            &p.atmosphere,
            &p.phase,
            1.0,
            &QuadratureOptions::default(),
            BuildInfo::new(p.name, 0),
        )
        .expect("desk table builds")
    })
}
