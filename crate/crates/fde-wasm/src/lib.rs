//! Browser bindings for three small views of the `fde` crate: zero tables of
//! S± with their curves, the modulus of a homogeneous solution along a
//! vertical line, and the three-parameter Mittag-Leffler function.
//!
//! Every export returns plain numbers or JSON text so the page needs no glue
//! beyond what `wasm-bindgen` generates.

use fde::coefficient::catalog::tangent_spec;
use fde::coefficient::EquationParams;
use fde::factorization::{find_zeros, SParams, TrigCoefficientSpec};
use fde::homogeneous::{HomogeneousSolution, PeriodicPlugin};
use fde::specfun::mittag_leffler3;
use fde::C64;
use num_complex::Complex64;
use wasm_bindgen::prelude::*;

fn s_spec(plus: bool, theta1: f64, theta2: f64, p: u32, q: u32, q2: f64) -> TrigCoefficientSpec {
    let s = SParams { theta1, theta2, p, q, q2 };
    if plus {
        TrigCoefficientSpec::SPlus(s)
    } else {
        TrigCoefficientSpec::SMinus(s)
    }
}

/// Zero table of S± over one period as JSON (`period`, `entries`, `count`, `complex`, `lattice_rule`).
#[wasm_bindgen]
pub fn zero_table(plus: bool, theta1: f64, theta2: f64, p: u32, q: u32, q2: f64) -> Result<String, String> {
    let spec = s_spec(plus, theta1, theta2, p, q, q2);
    if let Some((s, _)) = spec.s_params() {
        s.validate().map_err(|e| e.to_string())?;
    }
    let table = find_zeros(&spec).map_err(|e| e.to_string())?;
    serde_json::to_string(&table).map_err(|e| e.to_string())
}

/// Samples of S± on [0, 4πq], interleaved as x₀, y₀, x₁, y₁, …
#[wasm_bindgen]
pub fn s_curve(plus: bool, theta1: f64, theta2: f64, p: u32, q: u32, q2: f64, samples: usize) -> Vec<f64> {
    let spec = s_spec(plus, theta1, theta2, p, q, q2);
    let period = 4.0 * std::f64::consts::PI * q as f64;
    let n = samples.max(2);
    (0..n)
        .flat_map(|k| {
            let x = period * k as f64 / (n - 1) as f64;
            [x, spec.eval(Complex64::new(x, 0.0)).re]
        })
        .collect()
}

/// ln|𝒴_h(z, σ)| for the tangent coefficient at z = re_z + i·t, t ∈ [−im_max, im_max].
/// Points that hit the excluded lattice come back as NaN so the plot shows a gap.
#[wasm_bindgen]
pub fn homogeneous_log_modulus(re_z: f64, im_max: f64, samples: usize, sigma: f64, truncation: usize) -> Result<Vec<f64>, String> {
    let params = EquationParams::unit(1.0, 0.5, 0.5);
    let sol = HomogeneousSolution::build(&tangent_spec(), &params, PeriodicPlugin::unit(), truncation.clamp(10, 20_000))
        .map_err(|e| e.to_string())?;
    let n = samples.max(2);
    let sigma = C64::new(sigma, 0.0);
    Ok((0..n)
        .flat_map(|k| {
            let t = -im_max + 2.0 * im_max * k as f64 / (n - 1) as f64;
            let v = sol.log_evaluate(C64::new(re_z, t), sigma).map_or(f64::NAN, |l| l.re);
            [t, v]
        })
        .collect())
}

/// E_{α,β}^γ(x) on a real interval, interleaved as x, Re E, Im E.
#[wasm_bindgen]
pub fn mittag_leffler(alpha: f64, beta: f64, gamma: f64, x_min: f64, x_max: f64, samples: usize) -> Result<Vec<f64>, String> {
    let n = samples.max(2);
    let mut out = Vec::with_capacity(3 * n);
    for k in 0..n {
        let x = x_min + (x_max - x_min) * k as f64 / (n - 1) as f64;
        let e = mittag_leffler3(alpha, C64::new(beta, 0.0), C64::new(gamma, 0.0), C64::new(x, 0.0)).map_err(|e| e.to_string())?;
        out.extend([x, e.re, e.im]);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn zero_table_json() {
        let json = zero_table(true, PI / 4.0, PI / 2.0, 4, 1, 0.5).unwrap();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["count"], 8);
        assert!(zero_table(true, 0.1, 0.2, 2, 1, 2.0).is_err());
    }

    #[test]
    fn curve_passes_through_the_zeros() {
        let c = s_curve(false, 0.0, 0.0, 3, 1, 2.0, 5);
        assert_eq!(c.len(), 10);
        assert_eq!(c[0], 0.0);
        assert!(c[1].abs() < 1e-15);
    }

    #[test]
    fn modulus_is_finite_on_the_line() {
        let m = homogeneous_log_modulus(0.3, 5.0, 11, 1.0, 200).unwrap();
        assert_eq!(m.len(), 22);
        assert!(m.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn mittag_leffler_exp_case() {
        let v = mittag_leffler(1.0, 1.0, 1.0, -2.0, 2.0, 5).unwrap();
        for k in 0..5 {
            assert!((v[3 * k + 1] - v[3 * k].exp()).abs() < 1e-12);
        }
        assert!(mittag_leffler(-1.0, 1.0, 1.0, 0.0, 1.0, 3).is_err());
    }
}
