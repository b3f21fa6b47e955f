//! Complex special functions: log-Gamma, digamma, trigamma, principal powers,
//! angle reductions and the three-parameter Mittag-Leffler function.
//!
//! Gamma-type functions push the argument to the right by recurrence and then
//! apply the Stirling series. Summing principal logarithms of the shifted
//! arguments gives the branch of ln Γ that is continuous off the negative real
//! axis, so log-space products stay smooth along vertical lines.

use crate::error::{FdeError, Result};
use num_complex::Complex64;
use std::f64::consts::PI;

pub type C64 = Complex64;

pub const LN_2PI: f64 = 1.837_877_066_409_345_5;
pub const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;
pub const TOL_POLE: f64 = 1e-12;

/// Stirling series needs |z| at least this large after shifting.
const ASYMPTOTIC_RADIUS: f64 = 17.0;

/// B_{2k} for k = 1..=10.
const BERNOULLI: [f64; 10] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
];

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn near_pole(z: C64, tol: f64) -> bool {
    let k = z.re.round();
    k <= 0.0 && (z.re - k).abs() < tol && z.im.abs() < tol
}

/// Number of unit shifts bringing `z` into the Stirling region.
fn shift_count(z: C64) -> usize {
    let mut m = 0usize;
    if z.re < 0.5 {
        m = (0.5 - z.re).ceil() as usize;
    }
    let mut w = z + m as f64;
    while w.norm() < ASYMPTOTIC_RADIUS {
        m += 1;
        w += 1.0;
    }
    m
}

/// Binet remainder μ(z) = ln Γ(z) − [(z−½)ln z − z + ½ln 2π] for large |z|, Re z > 0.
fn binet_series(z: C64) -> C64 {
    let zi = z.inv();
    let z2 = zi * zi;
    let mut term = zi;
    let mut sum = C64::new(0.0, 0.0);
    for (k, b) in BERNOULLI.iter().enumerate() {
        let k = (k + 1) as f64;
        sum += term * (b / (2.0 * k * (2.0 * k - 1.0)));
        term *= z2;
    }
    sum
}

/// Stirling leading part (z−½)ln z − z + ½ln 2π with the principal log.
pub fn stirling_leading(z: C64) -> C64 {
    (z - 0.5) * z.ln() - z + HALF_LN_2PI
}

/// Principal-branch-continuous ln Γ(z).
pub fn log_gamma(z: C64) -> Result<C64> {
    log_gamma_tol(z, TOL_POLE)
}

pub fn log_gamma_tol(z: C64, tol: f64) -> Result<C64> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(FdeError::OutOfRange(format!("non-finite argument {z}")));
    }
    if near_pole(z, tol) {
        return Err(FdeError::PoleProximity(format!("{z}")));
    }
    Ok(log_gamma_unchecked(z))
}

pub(crate) fn log_gamma_unchecked(z: C64) -> C64 {
    if z.re < -400.0 {
        // Far left: reflection. The branch may differ by 2πik from the shifted
        // scheme; callers this far out only exponentiate.
        let lg = log_gamma_unchecked(1.0 - z);
        return c(PI.ln(), 0.0) - ln_sin_pi(z) - lg;
    }
    let m = shift_count(z);
    let mut acc = C64::new(0.0, 0.0);
    for k in 0..m {
        acc += (z + k as f64).ln();
    }
    let w = z + m as f64;
    stirling_leading(w) + binet_series(w) - acc
}

/// Binet remainder μ(z) = ln Γ(z) − stirling_leading(z), valid for Re z > 0.
pub fn binet_remainder(z: C64) -> C64 {
    if z.norm() >= ASYMPTOTIC_RADIUS && z.re > 0.0 {
        binet_series(z)
    } else {
        log_gamma_unchecked(z) - stirling_leading(z)
    }
}

/// ln sin(πz) without overflow for large |Im z| (branch not normalized).
pub fn ln_sin_pi(z: C64) -> C64 {
    if z.im > 1.0 {
        // sin πz = (i/2) e^{−iπz} (1 − e^{2πiz})
        let q = (c(0.0, 2.0 * PI) * z).exp();
        c(0.0, -PI) * z + c(0.5f64.ln(), PI / 2.0) + ln1p(-q)
    } else if z.im < -1.0 {
        // sin πz = (−i/2) e^{iπz} (1 − e^{−2πiz})
        let q = (c(0.0, -2.0 * PI) * z).exp();
        c(0.0, PI) * z + c(0.5f64.ln(), -PI / 2.0) + ln1p(-q)
    } else {
        (z * PI).sin().ln()
    }
}

/// cot(πz) stable for large |Im z|.
pub fn cot_pi(z: C64) -> C64 {
    if z.im.abs() > 1.0 {
        let s = z.im.signum();
        // written with the exponential that decays on this side of the axis
        let q = (c(0.0, 2.0 * PI * s) * z).exp();
        c(0.0, -s) * (1.0 + q) / (1.0 - q)
    } else {
        let w = z * PI;
        w.cos() / w.sin()
    }
}

/// Accurate ln(1+w) for small complex w.
pub fn ln1p(w: C64) -> C64 {
    if w.norm() < 0.5 {
        let re = 0.5 * (2.0 * w.re + w.norm_sqr()).ln_1p();
        let im = w.im.atan2(1.0 + w.re);
        c(re, im)
    } else {
        (1.0 + w).ln()
    }
}

pub fn gamma(z: C64) -> Result<C64> {
    Ok(log_gamma(z)?.exp())
}

/// 1/Γ(z), entire; exactly zero at nonpositive integers.
pub fn recip_gamma(z: C64) -> C64 {
    if z.im == 0.0 && z.re <= 0.0 && z.re == z.re.round() {
        return C64::new(0.0, 0.0);
    }
    if z.re < 0.5 {
        // 1/Γ(z) = sin(πz) Γ(1−z)/π
        (z * PI).sin() * log_gamma_unchecked(1.0 - z).exp() / PI
    } else {
        (-log_gamma_unchecked(z)).exp()
    }
}

pub fn digamma(z: C64) -> Result<C64> {
    if near_pole(z, TOL_POLE) {
        return Err(FdeError::PoleProximity(format!("{z}")));
    }
    if z.re < 0.5 && z.im.abs() < 1.0 {
        // ψ(z) = ψ(1−z) − π cot πz
        return Ok(digamma(1.0 - z)? - cot_pi(z) * PI);
    }
    let m = shift_count(z);
    let mut acc = C64::new(0.0, 0.0);
    for k in 0..m {
        acc += (z + k as f64).inv();
    }
    let w = z + m as f64;
    let wi = w.inv();
    let w2 = wi * wi;
    let mut term = w2;
    let mut s = w.ln() - 0.5 * wi;
    for (k, b) in BERNOULLI.iter().enumerate() {
        let k = (k + 1) as f64;
        s -= term * (b / (2.0 * k));
        term *= w2;
    }
    Ok(s - acc)
}

pub fn polygamma1(z: C64) -> Result<C64> {
    if near_pole(z, TOL_POLE) {
        return Err(FdeError::PoleProximity(format!("{z}")));
    }
    if z.re < 0.5 && z.im.abs() < 1.0 {
        // ψ′(1−z) + ψ′(z) = π²/sin²(πz)
        let s = (z * PI).sin();
        return Ok(c(PI * PI, 0.0) / (s * s) - polygamma1(1.0 - z)?);
    }
    let m = shift_count(z);
    let mut acc = C64::new(0.0, 0.0);
    for k in 0..m {
        let t = (z + k as f64).inv();
        acc += t * t;
    }
    let w = z + m as f64;
    let wi = w.inv();
    let w2 = wi * wi;
    let mut s = wi + 0.5 * w2;
    let mut term = w2 * wi;
    for b in BERNOULLI.iter() {
        s += term * *b;
        term *= w2;
    }
    Ok(s + acc)
}

/// exp(exponent · Ln base) with the principal logarithm.
pub fn principal_power(base: C64, exponent: C64) -> Result<C64> {
    if base.re == 0.0 && base.im == 0.0 {
        return Err(FdeError::ZeroBase);
    }
    Ok((exponent * base.ln()).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct AngleReduction {
    pub theta: f64,
    pub theta_plus: f64,
    pub theta_minus: f64,
    /// θ₊ ∈ {0, π}: sin θ₊/θ₊ is taken as 1.
    pub sinc_convention: bool,
}

impl AngleReduction {
    /// sin θ₊ / θ₊ with the unit convention at θ₊ = 0.
    pub fn sinc_plus(&self) -> f64 {
        if self.sinc_convention {
            1.0
        } else {
            self.theta_plus.sin() / self.theta_plus
        }
    }
}

pub fn angle_reduce(theta: f64) -> Result<AngleReduction> {
    if !(0.0..2.0 * PI).contains(&theta) {
        return Err(FdeError::OutOfRange(format!("theta = {theta} not in [0, 2π)")));
    }
    let theta_plus = if theta < PI { theta } else { theta - PI };
    let theta_minus = if theta < PI / 2.0 {
        theta
    } else if theta < 1.5 * PI {
        theta - PI
    } else {
        theta - 2.0 * PI
    };
    Ok(AngleReduction {
        theta,
        theta_plus,
        theta_minus,
        sinc_convention: theta_plus == 0.0,
    })
}

pub const ML_MAX_TERMS: usize = 100_000;

/// Three-parameter Mittag-Leffler function E^γ_{α,β}(x) = Σ (γ)_k x^k / (k! Γ(αk+β)).
pub fn mittag_leffler3(alpha: f64, beta: C64, gamma_: C64, x: C64) -> Result<C64> {
    if alpha <= 0.0 || !alpha.is_finite() {
        return Err(FdeError::OutOfRange(format!("alpha = {alpha} must be positive")));
    }
    // coefficient (γ)_k x^k / k! kept in log form to avoid overflow in intermediate steps
    let mut log_coef = C64::new(0.0, 0.0);
    let mut coef_zero = false;
    let mut sum = recip_gamma(beta);
    let mut small_run = 0usize;
    let ln_x = if x.norm() == 0.0 {
        return Ok(sum);
    } else {
        x.ln()
    };
    for k in 1..ML_MAX_TERMS {
        let kf = k as f64;
        let g = gamma_ + (kf - 1.0);
        if g.norm() == 0.0 {
            coef_zero = true;
        }
        if coef_zero {
            break;
        }
        log_coef += g.ln() + ln_x - kf.ln();
        let arg = beta + alpha * kf;
        let term = if arg.re > 0.5 {
            (log_coef - log_gamma_unchecked(arg)).exp()
        } else {
            log_coef.exp() * recip_gamma(arg)
        };
        sum += term;
        let scale = sum.norm().max(f64::MIN_POSITIVE);
        // Terms must be past their peak before we trust smallness.
        let decaying = g.norm() * x.norm() / kf < (alpha * kf).max(1.0).powf(alpha);
        if term.norm() <= 1e-17 * scale && decaying {
            small_run += 1;
            if small_run >= 3 {
                return Ok(sum);
            }
        } else {
            small_run = 0;
        }
        if !sum.re.is_finite() || !sum.im.is_finite() {
            return Err(FdeError::NonConvergence("Mittag-Leffler series overflow".into()));
        }
    }
    if coef_zero {
        return Ok(sum);
    }
    Err(FdeError::NonConvergence(format!(
        "Mittag-Leffler series did not settle within {ML_MAX_TERMS} terms"
    )))
}
