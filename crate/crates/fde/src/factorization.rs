//! Zeros and infinite-product factorizations of trigonometric coefficients, and
//! their conversion to the Ω form.
//!
//! Every product is stored as
//! C · z^μ · Π(linear factors) · Π_lattices Π_{n=1}^{N} [(a+nT−z)/(a+nT)]·[(b+nT+z)/(b+nT)],
//! which maps one to one onto the h/γ (or ζ/η) families of an [`OmegaSpec`].

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::coefficient::{
    validate_hypotheses, Deltas, EquationParams, FamilyKind, Generator, OmegaSpec, SequenceFamily,
};
use crate::error::{FdeError, Result};
use crate::homogeneous::PeriodicPlugin;
use crate::particular::KernelSpec;
use crate::specfun::{angle_reduce, digamma, ln1p, ln_sin_pi, polygamma1, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

/// Parameters of 𝒮±(z) = sin(z−θ₁) ± q₂ sin(q₁z−θ₂) with q₁ = p/(2q).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SParams {
    pub theta1: f64,
    pub theta2: f64,
    pub p: u32,
    pub q: u32,
    pub q2: f64,
}

impl SParams {
    pub fn q1(&self) -> f64 {
        self.p as f64 / (2.0 * self.q as f64)
    }

    /// 𝕋_q = 4πq.
    pub fn period(&self) -> f64 {
        4.0 * PI * self.q as f64
    }

    pub fn validate(&self) -> Result<()> {
        let (p, q) = (self.p, self.q);
        if !(p > 2 * q && 2 * q > 1) {
            return Err(FdeError::InvalidSpec(format!("need p > 2q > 1, got p = {p}, q = {q}")));
        }
        if gcd(p, q) != 1 {
            return Err(FdeError::InvalidSpec(format!("q/p = {q}/{p} is reducible")));
        }
        if !(self.q2 > 0.0) || self.q2 == 1.0 {
            return Err(FdeError::InvalidSpec(format!("need q2 > 0, q2 != 1, got {}", self.q2)));
        }
        for t in [self.theta1, self.theta2] {
            if !(0.0..2.0 * PI).contains(&t) {
                return Err(FdeError::InvalidSpec(format!("angle {t} not in [0, 2π)")));
            }
        }
        Ok(())
    }
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum TrigCoefficientSpec {
    SinShift { q0: f64, theta: f64, sign: Sign },
    CosShift { q0: f64, theta: f64, sign: Sign },
    TanShift { q0: f64, theta: f64, sign: Sign },
    SPlus(SParams),
    SMinus(SParams),
    /// tan(ω₁z−θ₁) ± q₃ tan(ω₂z−θ₂).
    TanCombo {
        omega1: f64,
        omega2: f64,
        q3: f64,
        theta1: f64,
        theta2: f64,
        sign: Sign,
    },
    Quotient {
        numerator: Box<TrigCoefficientSpec>,
        denominator: Box<TrigCoefficientSpec>,
    },
}

impl TrigCoefficientSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| FdeError::Parse(e.to_string()))
    }

    /// Direct trigonometric evaluation.
    pub fn eval(&self, z: C64) -> C64 {
        use TrigCoefficientSpec::*;
        match self {
            SinShift { q0, theta, sign } => (*q0 * z + sign.value() * theta).sin(),
            CosShift { q0, theta, sign } => (*q0 * z + sign.value() * theta).cos(),
            TanShift { q0, theta, sign } => (*q0 * z + sign.value() * theta).tan(),
            SPlus(s) => s_eval(s, 1.0, z),
            SMinus(s) => s_eval(s, -1.0, z),
            TanCombo {
                omega1,
                omega2,
                q3,
                theta1,
                theta2,
                sign,
            } => (*omega1 * z - theta1).tan() + sign.value() * q3 * (*omega2 * z - theta2).tan(),
            Quotient { numerator, denominator } => numerator.eval(z) / denominator.eval(z),
        }
    }

    /// (params, ±1) for the 𝒮± forms.
    pub fn s_params(&self) -> Option<(SParams, f64)> {
        match self {
            TrigCoefficientSpec::SPlus(s) => Some((*s, 1.0)),
            TrigCoefficientSpec::SMinus(s) => Some((*s, -1.0)),
            _ => None,
        }
    }
}

fn s_eval(s: &SParams, pm: f64, z: C64) -> C64 {
    (z - s.theta1).sin() + pm * s.q2 * (s.q1() * z - s.theta2).sin()
}

/// k-th derivative of 𝒮± on the real line.
fn s_deriv(s: &SParams, pm: f64, x: f64, k: u32) -> f64 {
    let q1 = s.q1();
    let a = x - s.theta1;
    let b = q1 * x - s.theta2;
    let shift = k as f64 * PI / 2.0;
    (a + shift).sin() + pm * s.q2 * q1.powi(k as i32) * (b + shift).sin()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZeroEntry {
    pub location: f64,
    pub multiplicity: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LatticeRule {
    /// z_i + n𝕋 and z_i − n𝕋.
    Translates,
    /// z_i + n𝕋 and −(z_i + n𝕋), used for odd functions (θ₁, θ₂ ∈ {0, π}).
    OddReflection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroTable {
    pub period: f64,
    /// Real zeros in [0, period), increasing.
    pub entries: Vec<ZeroEntry>,
    /// Number of real zeros counted with multiplicity.
    pub count: u32,
    /// Non-real zeros with real part in [0, period).
    pub complex: Vec<C64>,
    pub lattice_rule: LatticeRule,
}

impl ZeroTable {
    /// Real zeros repeated by multiplicity.
    pub fn expanded(&self) -> Vec<f64> {
        self.entries
            .iter()
            .flat_map(|e| std::iter::repeat_n(e.location, e.multiplicity as usize))
            .collect()
    }

    pub fn origin_multiplicity(&self) -> u32 {
        self.entries.first().filter(|e| e.location == 0.0).map_or(0, |e| e.multiplicity)
    }
}

const ZERO_TOL: f64 = 1e-10;
const D1_TOL: f64 = 1e-6;
const D3_TOL: f64 = 1e-3;

/// Safeguarded Newton iteration on a sign-changing bracket.
fn refine(f: impl Fn(f64) -> f64, df: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> Result<f64> {
    let (flo, fhi) = (f(lo), f(hi));
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo * fhi > 0.0 {
        return Err(FdeError::BracketFailure { lo, hi });
    }
    if flo > 0.0 {
        std::mem::swap(&mut lo, &mut hi);
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let fx = f(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if fx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let d = df(x);
        let newton = x - fx / d;
        let inside = (newton - lo) * (newton - hi) < 0.0;
        let next = if d != 0.0 && inside { newton } else { 0.5 * (lo + hi) };
        if (next - x).abs() <= 1e-15 * (1.0 + x.abs()) || (hi - lo).abs() <= 4.0 * f64::EPSILON * (1.0 + x.abs()) {
            return Ok(next);
        }
        x = next;
    }
    Ok(x)
}

/// Multiplicity from derivative magnitudes; triple zeros are relocated to the zero of 𝒮″.
fn classify(s: &SParams, pm: f64, r: f64) -> ZeroEntry {
    let d = |x: f64, k: u32| s_deriv(s, pm, x, k);
    if d(r, 1).abs() > D1_TOL {
        return ZeroEntry { location: r, multiplicity: 1 };
    }
    let mut x = r;
    for _ in 0..60 {
        let step = d(x, 2) / d(x, 3);
        x -= step;
        if step.abs() < 1e-16 * (1.0 + x.abs()) {
            break;
        }
    }
    if (x - r).abs() < 1e-3 && d(x, 0).abs() < ZERO_TOL && d(x, 1).abs() < D1_TOL && d(x, 2).abs() < D1_TOL && d(x, 3).abs() > D3_TOL {
        ZeroEntry { location: x, multiplicity: 3 }
    } else {
        ZeroEntry { location: r, multiplicity: 1 }
    }
}

fn real_zeros(s: &SParams, pm: f64) -> Result<Vec<ZeroEntry>> {
    let t = s.period();
    let d = |x: f64, k: u32| s_deriv(s, pm, x, k);
    let n = 4096 * (s.p as usize).max(1);
    let h = t / n as f64;

    // critical points split [0, T) into monotone pieces
    let mut breaks = vec![0.0];
    let mut prev = d(0.0, 1);
    for k in 1..=n {
        let x = k as f64 * h;
        let cur = d(x, 1);
        if prev * cur < 0.0 {
            breaks.push(refine(|y| d(y, 1), |y| d(y, 2), x - h, x)?);
        }
        prev = cur;
    }
    breaks.push(t);

    let mut found: Vec<ZeroEntry> = Vec::new();
    if (s.theta1.sin() + pm * s.q2 * s.theta2.sin()).abs() < 1e-12 || d(0.0, 0).abs() < 1e-14 {
        let e = classify(s, pm, 0.0);
        found.push(ZeroEntry { location: 0.0, ..e });
    }
    for w in breaks.windows(2) {
        let (l, r) = (w[0], w[1]);
        let (fl, fr) = (d(l, 0), d(r, 0));
        if fl * fr < 0.0 && !(l == 0.0 && found.first().is_some_and(|e| e.location == 0.0) && fl.abs() < 1e-12) {
            let x = refine(|y| d(y, 0), |y| d(y, 1), l, r)?;
            if x < t && t - x > 1e-12 {
                found.push(classify(s, pm, x));
            }
        } else if l > 0.0 && fl.abs() < ZERO_TOL {
            // a zero that is also a critical point
            found.push(classify(s, pm, l));
        }
    }
    found.sort_by(|a, b| a.location.total_cmp(&b.location));
    found.dedup_by(|a, b| (a.location - b.location).abs() < 1e-7);
    Ok(found)
}

/// Aberth–Ehrlich iteration for all roots of Σ c_k u^k.
pub fn polynomial_roots(coeffs: &[C64]) -> Vec<C64> {
    let deg = coeffs.len() - 1;
    let lead = coeffs[deg];
    let c: Vec<C64> = coeffs.iter().map(|x| x / lead).collect();
    let radius = 1.0 + c[..deg].iter().map(|x| x.norm()).fold(0.0, f64::max);
    let r0 = c[0].norm().powf(1.0 / deg as f64).clamp(1e-3, radius);
    let mut z: Vec<C64> = (0..deg)
        .map(|k| C64::from_polar(r0, 2.0 * PI * (k as f64 + 0.25) / deg as f64 + 0.4))
        .collect();
    let eval = |x: C64| {
        let mut p = C64::new(0.0, 0.0);
        let mut dp = C64::new(0.0, 0.0);
        for &a in c.iter().rev() {
            dp = dp * x + p;
            p = p * x + a;
        }
        (p, dp)
    };
    for _ in 0..2000 {
        let mut moved = 0.0f64;
        for i in 0..deg {
            let (p, dp) = eval(z[i]);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / dp;
            let sum: C64 = (0..deg).filter(|&j| j != i).map(|j| 1.0 / (z[i] - z[j])).sum();
            let w = ratio / (1.0 - ratio * sum);
            z[i] -= w;
            moved = moved.max(w.norm() / (1.0 + z[i].norm()));
        }
        if moved < 1e-15 {
            break;
        }
    }
    z
}

/// All zeros of 𝒮± in the strip 0 ≤ Re z < 𝕋_q, as roots of the degree-2p polynomial in u = e^{iz/(2q)}.
fn all_zeros(s: &SParams, pm: f64) -> Vec<C64> {
    let (p, q) = (s.p as usize, s.q as usize);
    let mut c = vec![C64::new(0.0, 0.0); 2 * p + 1];
    let e = |t: f64| C64::from_polar(1.0, t);
    // 2i·u^p·𝒮 = e^{−iθ₁}u^{p+2q} − e^{iθ₁}u^{p−2q} ± q₂(e^{−iθ₂}u^{2p} − e^{iθ₂})
    c[p + 2 * q] += e(-s.theta1);
    c[p - 2 * q] -= e(s.theta1);
    c[2 * p] += pm * s.q2 * e(-s.theta2);
    c[0] -= pm * s.q2 * e(s.theta2);
    let t = s.period();
    polynomial_roots(&c)
        .into_iter()
        .map(|u| {
            let z = C64::new(2.0 * q as f64 * u.arg(), -2.0 * q as f64 * u.norm().ln());
            C64::new(z.re.rem_euclid(t), z.im)
        })
        .collect()
}

fn polish_complex(s: &SParams, pm: f64, mut z: C64) -> C64 {
    let q1 = s.q1();
    for _ in 0..50 {
        let f = s_eval(s, pm, z);
        let df = (z - s.theta1).cos() + pm * s.q2 * q1 * (q1 * z - s.theta2).cos();
        let step = f / df;
        z -= step;
        if step.norm() < 1e-15 * (1.0 + z.norm()) {
            break;
        }
    }
    z
}

/// Real zeros of 𝒮± in [0, 4πq) with multiplicities, plus the non-real zeros of the same strip.
pub fn find_zeros(spec: &TrigCoefficientSpec) -> Result<ZeroTable> {
    let (s, pm) = spec
        .s_params()
        .ok_or_else(|| FdeError::InvalidSpec("zero tables exist for the S+/S- forms only".into()))?;
    s.validate()?;
    let entries = real_zeros(&s, pm)?;
    let count: u32 = entries.iter().map(|e| e.multiplicity).sum();
    let t = s.period();

    let near_real = |z: C64| {
        entries.iter().any(|e| {
            let dx = (z.re - e.location).abs();
            z.im.abs() < 1e-3 && dx.min(t - dx) < 1e-3
        })
    };
    let mut complex: Vec<C64> = all_zeros(&s, pm).into_iter().filter(|&z| !near_real(z)).map(|z| polish_complex(&s, pm, z)).collect();
    complex.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    if count as usize + complex.len() != 2 * s.p as usize {
        return Err(FdeError::InsufficientZeros(format!(
            "{count} real and {} complex zeros, expected {} per period",
            complex.len(),
            2 * s.p
        )));
    }
    let odd = [s.theta1, s.theta2].iter().all(|&th| th == 0.0 || th == PI);
    Ok(ZeroTable {
        period: t,
        entries,
        count,
        complex,
        lattice_rule: if odd { LatticeRule::OddReflection } else { LatticeRule::Translates },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFactor {
    pub root: C64,
    pub power: i32,
    /// (r − z)/r when set, (z − r) otherwise.
    pub normalized: bool,
}

/// Π_{n=1}^{N} [(a+nT−z)/(a+nT)]^k [(b+nT+z)/(b+nT)]^k.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticePair {
    pub a: C64,
    pub b: C64,
    pub period: C64,
    pub power: i32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductForm {
    pub label: String,
    pub leading: C64,
    /// μ in z^μ (negative for a pole at the origin).
    pub origin_power: i32,
    pub linear: Vec<LinearFactor>,
    pub lattices: Vec<LatticePair>,
    pub truncation: usize,
}

const POLE_TOL: f64 = 1e-13;

impl ProductForm {
    fn constant(label: impl Into<String>, c: C64, truncation: usize) -> Self {
        ProductForm {
            label: label.into(),
            leading: c,
            origin_power: 0,
            linear: Vec::new(),
            lattices: Vec::new(),
            truncation,
        }
    }

    fn push_unnormalized(&mut self, root: C64, power: i32) {
        if root.norm() == 0.0 {
            self.origin_power += power;
        } else {
            self.linear.push(LinearFactor { root, power, normalized: false });
        }
    }

    pub fn with_truncation(mut self, truncation: usize) -> Self {
        self.truncation = truncation;
        self
    }

    pub fn log_evaluate(&self, z: C64) -> Result<C64> {
        let mut s = self.leading.ln();
        if self.origin_power != 0 {
            if z.norm() < POLE_TOL && self.origin_power < 0 {
                return Err(FdeError::PoleProximity(format!("z = {z} at a pole of order {}", -self.origin_power)));
            }
            s += self.origin_power as f64 * z.ln();
        }
        let pole = |w: C64, p: i32| p < 0 && w.norm() < POLE_TOL;
        for f in &self.linear {
            let w = if f.normalized { 1.0 - z / f.root } else { z - f.root };
            if pole(w, f.power) {
                return Err(FdeError::PoleProximity(format!("z = {z} at the pole {}", f.root)));
            }
            s += f.power as f64 * if f.normalized { ln1p(-z / f.root) } else { w.ln() };
        }
        for l in &self.lattices {
            let k = l.power as f64;
            let mut acc = C64::new(0.0, 0.0);
            for n in 1..=self.truncation {
                let ta = l.a + l.period * n as f64;
                let tb = l.b + l.period * n as f64;
                if pole(1.0 - z / ta, l.power) || pole(1.0 + z / tb, l.power) {
                    return Err(FdeError::PoleProximity(format!("z = {z} at a lattice pole, n = {n}")));
                }
                acc += ln1p(-z / ta) + ln1p(z / tb);
            }
            s += k * acc;
        }
        Ok(s)
    }

    pub fn evaluate(&self, z: C64) -> Result<C64> {
        Ok(self.log_evaluate(z)?.exp())
    }

    /// ln of the untruncated product: the omitted factors n > N are summed through
    /// their first two Taylor orders with ψ and ψ′, leaving an O(N⁻³) error.
    pub fn log_evaluate_corrected(&self, z: C64) -> Result<C64> {
        let mut s = self.log_evaluate(z)?;
        let m = self.truncation as f64 + 1.0;
        for l in &self.lattices {
            let (xa, xb) = (m + l.a / l.period, m + l.b / l.period);
            let first = z / l.period * (digamma(xa)? - digamma(xb)?);
            let second = -z * z / (2.0 * l.period * l.period) * (polygamma1(xa)? + polygamma1(xb)?);
            s += l.power as f64 * (first + second);
        }
        Ok(s)
    }

    pub fn mul(mut self, other: ProductForm) -> Self {
        self.label = format!("({}) * ({})", self.label, other.label);
        self.leading *= other.leading;
        self.origin_power += other.origin_power;
        self.linear.extend(other.linear);
        self.lattices.extend(other.lattices);
        self.truncation = self.truncation.max(other.truncation);
        self
    }

    pub fn recip(mut self) -> Self {
        self.label = format!("1 / ({})", self.label);
        self.leading = 1.0 / self.leading;
        self.origin_power = -self.origin_power;
        for f in &mut self.linear {
            f.power = -f.power;
        }
        for l in &mut self.lattices {
            l.power = -l.power;
        }
        self
    }

    pub fn div(self, other: ProductForm) -> Self {
        self.mul(other.recip())
    }

    pub fn times(mut self, c: C64) -> Self {
        self.leading *= c;
        self
    }

    /// The product of g(c·z) given the product of g(z).
    pub fn scaled(mut self, c: C64) -> Self {
        self.leading *= c.powi(self.origin_power);
        for f in &mut self.linear {
            if !f.normalized {
                self.leading *= c.powi(f.power);
            }
            f.root /= c;
        }
        for l in &mut self.lattices {
            l.a /= c;
            l.b /= c;
            l.period /= c;
        }
        self
    }

    /// Zeros (positive multiplicity) and poles with |z| ≤ radius, from the stored factors.
    pub fn singular_points(&self, radius: f64) -> Vec<(C64, i32)> {
        let mut out = Vec::new();
        if self.origin_power != 0 {
            out.push((C64::new(0.0, 0.0), self.origin_power));
        }
        for f in &self.linear {
            if f.root.norm() <= radius {
                out.push((f.root, f.power));
            }
        }
        for l in &self.lattices {
            for n in 1..=self.truncation {
                let (za, zb) = (l.a + l.period * n as f64, -(l.b + l.period * n as f64));
                if za.norm() > radius && zb.norm() > radius {
                    break;
                }
                for x in [za, zb] {
                    if x.norm() <= radius {
                        out.push((x, l.power));
                    }
                }
            }
        }
        out
    }
}

fn check_angle(theta: f64) -> Result<()> {
    let bad = [PI / 2.0, 1.5 * PI];
    if bad.iter().any(|b| (theta - b).abs() < 1e-14) {
        return Err(FdeError::ExcludedAngle(format!("theta = {theta}")));
    }
    Ok(())
}

fn floor_sign(x: f64) -> f64 {
    if x.floor().rem_euclid(2.0) == 0.0 {
        1.0
    } else {
        -1.0
    }
}

fn sin_product(q0: f64, theta: f64, sign: Sign, truncation: usize) -> Result<ProductForm> {
    if q0 == 0.0 || !q0.is_finite() {
        return Err(FdeError::InvalidSpec(format!("q0 = {q0}")));
    }
    if q0 < 0.0 {
        // sin(−|q₀|z ± θ) = −sin(|q₀|z ∓ θ)
        return Ok(sin_product(-q0, theta, sign.flip(), truncation)?.times(C64::new(-1.0, 0.0)));
    }
    let ar = angle_reduce(theta)?;
    let s = sign.value();
    let r = -s * ar.theta_plus / q0;
    let mut f = ProductForm::constant(
        format!("sin({q0} z {} {theta})", if s > 0.0 { '+' } else { '-' }),
        C64::new(floor_sign(theta / PI) * q0 * ar.sinc_plus(), 0.0),
        truncation,
    );
    f.push_unnormalized(r.into(), 1);
    f.lattices.push(LatticePair {
        a: r.into(),
        b: (-r).into(),
        period: (PI / q0).into(),
        power: 1,
    });
    Ok(f)
}

fn cos_product(q0: f64, theta: f64, sign: Sign, truncation: usize) -> Result<ProductForm> {
    if q0 == 0.0 || !q0.is_finite() {
        return Err(FdeError::InvalidSpec(format!("q0 = {q0}")));
    }
    if q0 < 0.0 {
        return cos_product(-q0, theta, sign.flip(), truncation);
    }
    let ar = angle_reduce(theta)?;
    let s = sign.value();
    let tm = ar.theta_minus;
    let mut f = ProductForm::constant(
        format!("cos({q0} z {} {theta})", if s > 0.0 { '+' } else { '-' }),
        C64::new(floor_sign(theta / PI + 0.5) * tm.cos(), 0.0),
        truncation,
    );
    f.lattices.push(LatticePair {
        a: ((-PI / 2.0 - s * tm) / q0).into(),
        b: ((-PI / 2.0 + s * tm) / q0).into(),
        period: (PI / q0).into(),
        power: 1,
    });
    Ok(f)
}

/// sin(q₀z ± θ) = (−1)^{⌊θ/π⌋} q₀ (sin θ₊/θ₊)(z ± θ₊/q₀) Π …
pub fn factorize_sin(q0: f64, theta: f64, sign: Sign, truncation: usize) -> Result<ProductForm> {
    check_angle(theta)?;
    sin_product(q0, theta, sign, truncation)
}

/// cos(q₀z ± θ) = (−1)^{⌊θ/π+½⌋} cos θ₋ Π …
pub fn factorize_cos(q0: f64, theta: f64, sign: Sign, truncation: usize) -> Result<ProductForm> {
    check_angle(theta)?;
    cos_product(q0, theta, sign, truncation)
}

/// tan(q₀z ± θ) as the quotient of the sine and cosine products.
pub fn factorize_tan(q0: f64, theta: f64, sign: Sign, truncation: usize) -> Result<ProductForm> {
    check_angle(theta)?;
    let mut f = sin_product(q0, theta, sign, truncation)?.div(cos_product(q0, theta, sign, truncation)?);
    f.label = format!("tan({q0} z {} {theta})", if sign == Sign::Plus { '+' } else { '-' });
    Ok(f)
}

/// sinh(q₀z) = −i·sin(iq₀z).
pub fn factorize_sinh(q0: f64, truncation: usize) -> Result<ProductForm> {
    let f = sin_product(q0, 0.0, Sign::Plus, truncation)?.scaled(C64::i()).times(-C64::i());
    Ok(ProductForm { label: format!("sinh({q0} z)"), ..f })
}

/// cosh(q₀z) = cos(iq₀z).
pub fn factorize_cosh(q0: f64, truncation: usize) -> Result<ProductForm> {
    let f = cos_product(q0, 0.0, Sign::Plus, truncation)?.scaled(C64::i());
    Ok(ProductForm { label: format!("cosh({q0} z)"), ..f })
}

/// Rewrite angles in (π, 2π) into [0, π] by the reflection identities;
/// returns (factor, equivalent spec) with 𝒮(z; spec) = factor·𝒮(z; equivalent).
pub fn reflect_angles(s: SParams, pm: f64) -> (f64, SParams, f64) {
    let hi1 = s.theta1 > PI;
    let hi2 = s.theta2 > PI;
    let mut t = s;
    match (hi1, hi2) {
        (true, true) => {
            t.theta1 -= PI;
            t.theta2 -= PI;
            (-1.0, t, pm)
        }
        (false, true) => {
            t.theta2 -= PI;
            (1.0, t, -pm)
        }
        (true, false) => {
            t.theta1 -= PI;
            (-1.0, t, -pm)
        }
        (false, false) => (1.0, t, pm),
    }
}

fn s_spec(s: SParams, pm: f64) -> TrigCoefficientSpec {
    if pm > 0.0 {
        TrigCoefficientSpec::SPlus(s)
    } else {
        TrigCoefficientSpec::SMinus(s)
    }
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Product form of 𝒮± built from its zero table (real and complex zeros).
pub fn factorize_s(spec: &TrigCoefficientSpec, truncation: usize) -> Result<ProductForm> {
    let (s0, pm0) = spec
        .s_params()
        .ok_or_else(|| FdeError::InvalidSpec("factorize_s needs an S+/S- form".into()))?;
    s0.validate()?;
    let (factor, s, pm) = reflect_angles(s0, pm0);
    let table = find_zeros(&s_spec(s, pm))?;
    let mu = table.origin_multiplicity();
    let lead = factor * s_deriv(&s, pm, 0.0, mu) / factorial(mu);
    let t = C64::new(table.period, 0.0);
    let mut f = ProductForm::constant(
        format!("S{}(z; {}, {}, {}/{}, {})", if pm0 > 0.0 { '+' } else { '-' }, s0.theta1, s0.theta2, s0.p, 2 * s0.q, s0.q2),
        C64::new(lead, 0.0),
        truncation,
    );
    f.origin_power = mu as i32;

    let odd = table.lattice_rule == LatticeRule::OddReflection && table.complex.is_empty();
    let mut zeros: Vec<(C64, i32)> = table.entries.iter().map(|e| (C64::new(e.location, 0.0), e.multiplicity as i32)).collect();
    zeros.extend(table.complex.iter().map(|&z| (z, 1)));
    for (r, m) in zeros {
        if r.norm() > 0.0 {
            f.linear.push(LinearFactor { root: r, power: m, normalized: true });
            if odd {
                f.linear.push(LinearFactor { root: -r, power: m, normalized: true });
            }
        }
        f.lattices.push(LatticePair {
            a: r,
            b: if odd { r } else { -r },
            period: t,
            power: m,
        });
    }
    Ok(f)
}

/// Closest p/(2q) to `x` with q ≤ 256, if exact to 1e−12.
fn rational_q1(x: f64) -> Option<(u32, u32)> {
    (1..=256u32).find_map(|q| {
        let p = (x * 2.0 * q as f64).round();
        (p > 0.0 && (p / (2.0 * q as f64) - x).abs() < 1e-12 && gcd(p as u32, q) == 1).then_some((p as u32, q))
    })
}

/// tan(ω₁z−θ₁) ± q₃ tan(ω₂z−θ₂).
pub fn factorize_tan_combo(spec: &TrigCoefficientSpec, truncation: usize) -> Result<ProductForm> {
    let TrigCoefficientSpec::TanCombo {
        omega1: w1,
        omega2: w2,
        q3,
        theta1: t1,
        theta2: t2,
        sign,
    } = *spec
    else {
        return Err(FdeError::InvalidSpec("factorize_tan_combo needs a tan_combo form".into()));
    };
    if !(w1 > 0.0 && w1 <= w2 && q3 > 0.0 && (0.0..2.0 * PI).contains(&t1) && t1 <= t2 && t2 < 2.0 * PI) {
        return Err(FdeError::InvalidSpec("need 0 < ω1 ≤ ω2, q3 > 0, 0 ≤ θ1 ≤ θ2 < 2π".into()));
    }
    let s = sign.value();
    let denominator = cos_product(w1, t1, Sign::Minus, truncation)?.mul(cos_product(w2, t2, Sign::Minus, truncation)?);
    check_angle(t1)?;
    check_angle(t2)?;
    let numerator = if q3 == 1.0 {
        if s < 0.0 {
            // tan A − tan B = −sin((ω₂−ω₁)z − (θ₂−θ₁)) / (cos A cos B)
            if w1 == w2 {
                let c = (t2 - t1).sin();
                if c.abs() < 1e-15 {
                    return Err(FdeError::InvalidSpec("the combination vanishes identically".into()));
                }
                ProductForm::constant("sin(θ2 − θ1)", C64::new(c, 0.0), truncation)
            } else {
                sin_product(w2 - w1, (t2 - t1).rem_euclid(2.0 * PI), Sign::Minus, truncation)?.times(C64::new(-1.0, 0.0))
            }
        } else {
            sin_product(w1 + w2, (t1 + t2).rem_euclid(2.0 * PI), Sign::Minus, truncation)?
        }
    } else {
        // numerator = −½(1 − s q₃)[sin(y − φ₁) − ρ sin(q₁y − φ₂)], y = (ω₂−ω₁)z, ρ = (1 + s q₃)/(1 − s q₃)
        if w1 == w2 {
            return Err(FdeError::InvalidSpec("q3 != 1 requires ω2 > ω1".into()));
        }
        let q1 = (w1 + w2) / (w2 - w1);
        let (p, q) = rational_q1(q1).ok_or_else(|| FdeError::InvalidSpec(format!("(ω1+ω2)/(ω2−ω1) = {q1} is not p/(2q)")))?;
        let rho = (1.0 + s * q3) / (1.0 - s * q3);
        let params = SParams {
            theta1: (t2 - t1).rem_euclid(2.0 * PI),
            theta2: (t1 + t2).rem_euclid(2.0 * PI),
            p,
            q,
            q2: rho.abs(),
        };
        let inner = if rho > 0.0 { TrigCoefficientSpec::SMinus(params) } else { TrigCoefficientSpec::SPlus(params) };
        factorize_s(&inner, truncation)?
            .scaled(C64::new(w2 - w1, 0.0))
            .times(C64::new(-0.5 * (1.0 - s * q3), 0.0))
    };
    let mut f = numerator.div(denominator);
    f.label = format!("tan({w1} z - {t1}) {} {q3} tan({w2} z - {t2})", if s > 0.0 { '+' } else { '-' });
    Ok(f)
}

/// Dispatch on the form.
pub fn factorize(spec: &TrigCoefficientSpec, truncation: usize) -> Result<ProductForm> {
    use TrigCoefficientSpec::*;
    match spec {
        SinShift { q0, theta, sign } => factorize_sin(*q0, *theta, *sign, truncation),
        CosShift { q0, theta, sign } => factorize_cos(*q0, *theta, *sign, truncation),
        TanShift { q0, theta, sign } => factorize_tan(*q0, *theta, *sign, truncation),
        SPlus(_) | SMinus(_) => factorize_s(spec, truncation),
        TanCombo { .. } => factorize_tan_combo(spec, truncation),
        Quotient { numerator, denominator } => Ok(factorize(numerator, truncation)?.div(factorize(denominator, truncation)?)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConversionNotes {
    /// Net power of z at the origin (μ₁ − μ₂).
    pub origin_power: i32,
    pub numerator_lattices: usize,
    pub denominator_lattices: usize,
    pub linear_factors: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConversionResult {
    pub omega: OmegaSpec,
    /// δ₀★ = δ₀·β^{−μ}.
    pub delta0_star: C64,
    /// Coefficient of the exponential factor; zero for these forms.
    pub b_star: C64,
    pub notes: ConversionNotes,
}

/// Map a product form onto the Ω form and check the hypotheses for step β.
pub fn to_omega(product: &ProductForm, beta: f64) -> Result<ConversionResult> {
    let mut delta0 = product.leading;
    let mut deltas = Deltas::default();
    let mu = product.origin_power;
    for _ in 0..mu.max(0) {
        deltas.d2.push(0.0.into());
    }
    for _ in 0..(-mu).max(0) {
        deltas.d4.push(0.0.into());
    }
    for f in &product.linear {
        let k = f.power.unsigned_abs() as usize;
        let num = f.power > 0;
        for _ in 0..k {
            if f.normalized {
                // roots left of the origin go in as (δ + z)/δ so that ±r pairs give (r² − z²)/r²
                let left = f.root.re < 0.0;
                match (num, left) {
                    (true, false) => deltas.d1.push(f.root),
                    (true, true) => deltas.d2.push(-f.root),
                    (false, false) => deltas.d3.push(f.root),
                    (false, true) => deltas.d4.push(-f.root),
                }
                let scale = if left { -f.root } else { f.root };
                if num {
                    delta0 /= scale;
                } else {
                    delta0 *= scale;
                }
            } else if num {
                deltas.d2.push(-f.root);
            } else {
                deltas.d4.push(-f.root);
            }
        }
    }
    let mut families = Vec::new();
    let (mut up, mut down) = (0, 0);
    for l in &product.lattices {
        if l.period.im != 0.0 || l.period.re <= 0.0 {
            return Err(FdeError::InvalidHypotheses(format!("lattice period {} is not a positive real", l.period)));
        }
        let (ka, kb) = if l.power > 0 {
            up += 1;
            (FamilyKind::H, FamilyKind::Gamma)
        } else {
            down += 1;
            (FamilyKind::Zeta, FamilyKind::Eta)
        };
        for _ in 0..l.power.unsigned_abs() {
            families.push(SequenceFamily::new(ka, 1, Generator::lattice(l.a, l.period.re)));
            families.push(SequenceFamily::new(kb, 1, Generator::lattice(l.b, l.period.re)));
        }
    }
    let omega = OmegaSpec {
        delta0,
        a: 0.0.into(),
        b: 0.0.into(),
        deltas,
        finite: families.is_empty(),
        families,
    };
    let report = validate_hypotheses(&omega, &EquationParams { beta, ..EquationParams::unit(1.0, 0.0, 0.5) }, 2000);
    let failures: Vec<String> = report.failures().iter().map(|c| format!("{}: {}", c.id, c.detail)).collect();
    if !failures.is_empty() {
        let msg = failures.join("; ");
        return Err(if failures.iter().all(|f| f.starts_with("sequences.sum")) {
            FdeError::SummabilityFailure(msg)
        } else {
            FdeError::InvalidHypotheses(msg)
        });
    }
    Ok(ConversionResult {
        delta0_star: delta0 * C64::new(beta, 0.0).powi(-mu),
        b_star: 0.0.into(),
        notes: ConversionNotes {
            origin_power: mu,
            numerator_lattices: up,
            denominator_lattices: down,
            linear_factors: product.linear.len(),
        },
        omega,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ForcingClass {
    /// |F| tends to a constant as |Im z| → ∞.
    Bounded,
    /// |F| ≲ e^{−c★π|Im z|}.
    Decaying,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PluginKind {
    I,
    II,
    III,
}

/// Problem descriptor for the quotient 𝒮⁺(z;θ₁,θ₂,q₁,q₂)/𝒮⁺(z;0,0,q₁,q₂★).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemClass {
    pub forcing: ForcingClass,
    pub plugin: PluginKind,
    /// Nonzero zeros in [0, 𝕋) of the numerator 𝒮⁺.
    pub zeros: Vec<f64>,
    /// Nonzero zeros in [0, 𝕋) of the denominator 𝒮⁺(·;0,0,…).
    pub zeros_star: Vec<f64>,
    pub theta2: f64,
    pub d0: f64,
    #[serde(default = "default_eps")]
    pub epsilon: f64,
}

fn default_eps() -> f64 {
    0.01
}

impl ProblemClass {
    /// "bounded/I", "decaying/III", …
    pub fn parse_kind(text: &str) -> Result<(ForcingClass, PluginKind)> {
        let (f, p) = text.split_once('/').ok_or_else(|| FdeError::UnknownClass(text.into()))?;
        let forcing = match f {
            "bounded" => ForcingClass::Bounded,
            "decaying" => ForcingClass::Decaying,
            _ => return Err(FdeError::UnknownClass(text.into())),
        };
        let plugin = match p {
            "I" => PluginKind::I,
            "II" => PluginKind::II,
            "III" => PluginKind::III,
            _ => return Err(FdeError::UnknownClass(text.into())),
        };
        Ok((forcing, plugin))
    }

    /// K★,⁺: number of denominator zeros per period, counting the origin.
    pub fn k_star(&self) -> usize {
        self.zeros_star.len() + 1
    }
}

/// ln Π sin π(zᵢ − w + 1)·e^{iπ(zᵢ − w + 1)}.
fn log_sine_block(zeros: &[f64], w: C64) -> C64 {
    zeros
        .iter()
        .map(|&z| {
            let x = z - w + 1.0;
            ln_sin_pi(x) + C64::new(0.0, PI) * x
        })
        .sum()
}

#[derive(Debug, Clone)]
pub struct KernelChoice {
    pub kernel: KernelSpec,
    pub plugin: PeriodicPlugin,
    /// Shift d of the sine-power kernel (0 < d − d₀ < 1), if one is used.
    pub d: Option<f64>,
    pub power: u32,
}

/// Matched (𝒦₁, ℙ₁) pair for the problem class.
pub fn kernel_catalog(class: &ProblemClass) -> Result<KernelChoice> {
    let zs = class.zeros_star.clone();
    let z = class.zeros.clone();
    let plugin = match class.plugin {
        PluginKind::I => PeriodicPlugin::unit(),
        PluginKind::II => PeriodicPlugin::from_log_fn("P_II", move |w| log_sine_block(&zs, w)),
        PluginKind::III => PeriodicPlugin::from_log_fn("P_III", move |w| {
            log_sine_block(&zs, w) - log_sine_block(&z, w) - C64::new(0.0, PI) * w - ln_sin_pi(w)
        }),
    };
    let power = match (class.forcing, class.plugin) {
        (ForcingClass::Decaying, PluginKind::I | PluginKind::II) => 0,
        (ForcingClass::Decaying, PluginKind::III) => 2,
        (ForcingClass::Bounded, PluginKind::I) => 2,
        (ForcingClass::Bounded, PluginKind::II) => {
            let k = class.k_star() as f64;
            if PI * (2.5 - 2.0 * k) - class.theta2 - class.epsilon > 0.0 {
                2
            } else {
                2 * class.k_star() as u32
            }
        }
        (ForcingClass::Bounded, PluginKind::III) => 4,
    };
    if power == 0 {
        return Ok(KernelChoice {
            kernel: KernelSpec::unit(),
            plugin,
            d: None,
            power,
        });
    }
    let d = KernelSpec::default_shift(class.d0);
    Ok(KernelChoice {
        kernel: KernelSpec::sine_power(d, power),
        plugin,
        d: Some(d),
        power,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficient::catalog::tangent_spec;
    use crate::coefficient::evaluate_omega;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn rel(a: C64, b: C64) -> f64 {
        (a - b).norm() / b.norm().max(1e-300)
    }

    fn example_s(theta1: f64, q2: f64) -> TrigCoefficientSpec {
        TrigCoefficientSpec::SPlus(SParams {
            theta1,
            theta2: 2.0 * theta1,
            p: 4,
            q: 1,
            q2,
        })
    }

    #[test]
    fn double_angle_zero_tables() {
        for th in [PI / 4.0, PI / 3.0] {
            let t = find_zeros(&example_s(th, 2.0)).unwrap();
            let a = (1.0f64 / 4.0).acos();
            let expect = [
                th,
                PI + th - a,
                PI + th,
                PI + th + a,
                2.0 * PI + th,
                3.0 * PI + th - a,
                3.0 * PI + th,
                3.0 * PI + th + a,
            ];
            assert_eq!(t.count, 8);
            for (e, x) in t.entries.iter().zip(expect) {
                assert!((e.location - x).abs() < 1e-12, "{} vs {x}", e.location);
                assert_eq!(e.multiplicity, 1);
            }
            let half = find_zeros(&example_s(th, 0.5)).unwrap();
            assert_eq!(half.count, 8);
            let m: Vec<u32> = half.entries.iter().map(|e| e.multiplicity).collect();
            assert_eq!(m, vec![1, 3, 1, 3]);
            assert!((half.entries[1].location - (PI + th)).abs() < 1e-9);
            assert!((half.entries[3].location - (3.0 * PI + th)).abs() < 1e-9);
            let quarter = find_zeros(&example_s(th, 0.25)).unwrap();
            assert_eq!(quarter.count, 4);
            // the remaining zeros of 1 + 2q₂cos w are complex: w = π ± i·arccosh(2)
            assert_eq!(quarter.complex.len(), 4);
            for z in &quarter.complex {
                assert!((z.im.abs() - 2.0f64.acosh()).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn zeros_satisfy_the_equation_and_cover_the_period() {
        let specs = [
            TrigCoefficientSpec::SMinus(SParams { theta1: 0.7, theta2: 2.1, p: 5, q: 1, q2: 1.7 }),
            TrigCoefficientSpec::SPlus(SParams { theta1: 0.3, theta2: 0.9, p: 3, q: 1, q2: 3.0 }),
            TrigCoefficientSpec::SPlus(SParams { theta1: 0.0, theta2: 0.0, p: 4, q: 1, q2: 2.0 }),
        ];
        for spec in &specs {
            let t = find_zeros(spec).unwrap();
            let (s, pm) = spec.s_params().unwrap();
            assert_eq!(t.count, 2 * s.p, "{spec:?}");
            for e in &t.entries {
                assert!(s_deriv(&s, pm, e.location, 0).abs() < 1e-9);
            }
            let n = 10_000;
            let mut sign_changes = 0;
            for k in 0..n {
                let (x0, x1) = (t.period * k as f64 / n as f64, t.period * (k + 1) as f64 / n as f64);
                if s_deriv(&s, pm, x0, 0) * s_deriv(&s, pm, x1, 0) < 0.0 {
                    sign_changes += 1;
                    assert!(t.entries.iter().any(|e| e.location >= x0 - 1e-9 && e.location <= x1 + 1e-9));
                }
            }
            assert!(sign_changes >= t.entries.len() - 1);
        }
    }

    #[test]
    fn sine_product_identities() {
        let n = 10_000;
        let f = factorize_sin(1.0, 0.0, Sign::Plus, n).unwrap();
        assert_eq!(f.origin_power, 1);
        assert!((f.evaluate(c(PI / 2.0, 0.0)).unwrap() - 1.0).norm() < 3e-5);
        let pi = factorize_sin(1.0, PI, Sign::Plus, n).unwrap();
        assert_eq!(pi.leading, c(-1.0, 0.0));
        for (q0, th, sg) in [(1.5, 0.4, Sign::Plus), (0.7, 4.0, Sign::Minus), (-1.2, 2.5, Sign::Plus)] {
            let f = factorize_sin(q0, th, sg, n).unwrap();
            for z in [c(0.3, 0.2), c(-2.0, 1.0), c(4.0, -0.5)] {
                let direct = TrigCoefficientSpec::SinShift { q0, theta: th, sign: sg }.eval(z);
                assert!(rel(f.evaluate(z).unwrap(), direct) < 1e-3, "{q0} {th} {z}");
            }
        }
    }

    #[test]
    fn cosine_and_tangent_products() {
        let n = 10_000;
        let f = factorize_cos(2.0, PI / 3.0, Sign::Minus, n).unwrap();
        assert!(rel(f.evaluate(c(1.0, 0.0)).unwrap(), c((2.0 - PI / 3.0).cos(), 0.0)) < 1e-4);
        let f = factorize_cos(1.3, 2.0, Sign::Plus, n).unwrap();
        assert!((f.evaluate(c(0.0, 0.0)).unwrap() - (2.0f64).cos()).norm() < 1e-15);
        let t = factorize_tan(1.0, 0.0, Sign::Plus, n).unwrap();
        assert!((t.evaluate(c(PI / 4.0, 0.0)).unwrap() - 1.0).norm() < 3e-4);
        let t = factorize_tan(1.0, 0.6, Sign::Minus, n).unwrap();
        assert!(rel(t.evaluate(c(0.0, 0.0)).unwrap(), c((-0.6f64).tan(), 0.0)) < 1e-4);
        let t = factorize_tan(2.5, 0.6, Sign::Plus, n).unwrap();
        assert!(rel(t.evaluate(c(0.3, 0.1)).unwrap(), (2.5 * c(0.3, 0.1) + 0.6).tan()) < 1e-3);
        assert!(matches!(factorize_cos(1.0, PI / 2.0, Sign::Plus, n), Err(FdeError::ExcludedAngle(_))));
        assert!(matches!(t.evaluate(c((PI / 2.0 - 0.6) / 2.5, 0.0)), Err(FdeError::PoleProximity(_))));
    }

    #[test]
    fn tangent_converts_to_the_tangent_spec() {
        let t = factorize_tan(1.0, 0.0, Sign::Plus, 1000).unwrap();
        let conv = to_omega(&t, 1.0).unwrap();
        let reference = tangent_spec();
        assert_eq!(conv.omega.deltas, reference.deltas);
        assert_eq!(conv.omega.delta0, reference.delta0);
        let kinds = |s: &OmegaSpec| s.family_counts();
        assert_eq!(kinds(&conv.omega), kinds(&reference));
        for kind in [FamilyKind::H, FamilyKind::Gamma, FamilyKind::Zeta, FamilyKind::Eta] {
            for n in 1..50 {
                let a: Vec<C64> = conv.omega.terms(kind, n).collect();
                let b: Vec<C64> = reference.terms(kind, n).collect();
                assert!((a[0] - b[0]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn s_products_match_direct_values() {
        let n = 10_000;
        let cases = [
            example_s(PI / 4.0, 2.0),
            example_s(PI / 3.0, 0.5),
            example_s(PI / 4.0, 0.25),
            TrigCoefficientSpec::SPlus(SParams { theta1: 0.0, theta2: 0.0, p: 3, q: 1, q2: 2.0 }),
            TrigCoefficientSpec::SMinus(SParams { theta1: 0.0, theta2: 0.0, p: 4, q: 1, q2: 0.5 }),
            TrigCoefficientSpec::SMinus(SParams { theta1: 4.0, theta2: 5.0, p: 5, q: 2, q2: 1.5 }),
        ];
        for spec in &cases {
            let f = factorize_s(spec, n).unwrap();
            for z in [c(1.0, 0.0), c(-2.5, 0.7), c(3.3, -1.2), c(0.4, 2.0)] {
                let d = spec.eval(z);
                assert!(rel(f.evaluate(z).unwrap(), d) < 1e-3, "{spec:?} at {z}: {} vs {d}", f.evaluate(z).unwrap());
            }
        }
        // leading constants at the origin
        let f = factorize_s(&TrigCoefficientSpec::SPlus(SParams { theta1: 0.0, theta2: 0.0, p: 3, q: 1, q2: 2.0 }), n).unwrap();
        assert_eq!(f.origin_power, 1);
        assert!((f.leading.re - (1.0 + 1.5 * 2.0)).abs() < 1e-14);
        let f = factorize_s(&TrigCoefficientSpec::SMinus(SParams { theta1: 0.0, theta2: 0.0, p: 4, q: 1, q2: 0.5 }), n).unwrap();
        assert_eq!(f.origin_power, 3);
        // S⁽³⁾(0)/3! = −(1 − q₁³q₂)/6
        assert!((f.leading.re + (1.0 - 8.0 * 0.5) / 6.0).abs() < 1e-14);
    }

    #[test]
    fn reflection_identities_hold() {
        let base = SParams { theta1: 0.0, theta2: 0.0, p: 5, q: 1, q2: 1.3 };
        for (t1, t2) in [(4.0, 5.0), (1.0, 4.5), (4.2, 2.0), (0.5, 0.7)] {
            for pm in [1.0, -1.0] {
                let s = SParams { theta1: t1, theta2: t2, ..base };
                let (k, r, rpm) = reflect_angles(s, pm);
                for z in [c(0.3, 0.0), c(-1.7, 0.4), c(5.0, -0.2)] {
                    let lhs = s_eval(&s, pm, z);
                    let rhs = k * s_eval(&r, rpm, z);
                    assert!((lhs - rhs).norm() < 1e-10);
                }
            }
        }
        // sin(z+θ₁) ± q₂ sin(q₁z+θ₂) = 𝒮±(z; 2π−θ₁, 2π−θ₂)
        let s = SParams { theta1: 2.0 * PI - 0.8, theta2: 2.0 * PI - 1.1, ..base };
        let z = c(0.9, 0.3);
        let lhs = (z + 0.8).sin() + 1.3 * (2.5 * z + 1.1).sin();
        assert!((lhs - s_eval(&s, 1.0, z)).norm() < 1e-12);
    }

    #[test]
    fn tan_combinations() {
        let n = 10_000;
        let z = c(0.3, 0.0);
        let unit = TrigCoefficientSpec::TanCombo { omega1: 1.0, omega2: 2.0, q3: 1.0, theta1: 0.0, theta2: 0.0, sign: Sign::Minus };
        let f = factorize_tan_combo(&unit, n).unwrap();
        assert!(rel(f.evaluate(z).unwrap(), c(0.3f64.tan() - 0.6f64.tan(), 0.0)) < 1e-3);
        let plus = TrigCoefficientSpec::TanCombo { omega1: 1.0, omega2: 1.5, q3: 1.0, theta1: 0.2, theta2: 0.9, sign: Sign::Plus };
        let f = factorize_tan_combo(&plus, n).unwrap();
        assert!(rel(f.evaluate(c(0.4, 0.3)).unwrap(), plus.eval(c(0.4, 0.3))) < 1e-3);
        for (q3, sign) in [(3.0, Sign::Plus), (0.4, Sign::Plus), (3.0, Sign::Minus), (0.4, Sign::Minus)] {
            let spec = TrigCoefficientSpec::TanCombo { omega1: 1.0, omega2: 3.0, q3, theta1: 0.3, theta2: 0.8, sign };
            let f = factorize_tan_combo(&spec, n).unwrap();
            for z in [c(0.2, 0.0), c(-0.4, 0.5), c(1.1, -0.3)] {
                assert!(rel(f.evaluate(z).unwrap(), spec.eval(z)) < 1e-3, "{q3} {sign:?} {z}");
            }
        }
        let zero = TrigCoefficientSpec::TanCombo { omega1: 1.0, omega2: 1.0, q3: 1.0, theta1: 0.5, theta2: 0.5, sign: Sign::Minus };
        assert!(matches!(factorize_tan_combo(&zero, n), Err(FdeError::InvalidSpec(_))));
    }

    #[test]
    fn tail_correction_removes_the_truncation_error() {
        let spec = TrigCoefficientSpec::SMinus(SParams { theta1: 0.4, theta2: 1.3, p: 5, q: 2, q2: 1.5 });
        let f = factorize_s(&spec, 2000).unwrap();
        for z in [c(1.5, 0.3), c(-4.0, 1.0)] {
            let d = spec.eval(z);
            let plain = rel(f.evaluate(z).unwrap(), d);
            let corrected = rel(f.log_evaluate_corrected(z).unwrap().exp(), d);
            assert!(corrected < 1e-10 && corrected < plain * 1e-4, "{plain} {corrected}");
        }
    }

    #[test]
    fn hyperbolic_wrappers() {
        let f = factorize_sinh(0.8, 10_000).unwrap();
        let z = c(0.7, 0.4);
        assert!(rel(f.evaluate(z).unwrap(), (0.8 * z).sinh()) < 1e-3);
        let g = factorize_cosh(0.8, 10_000).unwrap();
        assert!(rel(g.evaluate(z).unwrap(), (0.8 * z).cosh()) < 1e-3);
    }

    #[test]
    fn conversion_round_trip_and_table_constants() {
        let n = 10_000;
        let f = factorize_sin(1.3, 0.8, Sign::Plus, n).unwrap();
        let conv = to_omega(&f, 1.0).unwrap();
        let ar = angle_reduce(0.8).unwrap();
        assert!((conv.delta0_star.re - 1.3 * ar.sinc_plus()).abs() < 1e-14);

        let spec = example_s(PI / 4.0, 2.0);
        let f = factorize_s(&spec, n).unwrap();
        let conv = to_omega(&f, 1.0).unwrap();
        let z0: f64 = find_zeros(&spec).unwrap().entries.iter().map(|e| e.location).product();
        let expect = -((PI / 4.0).sin() + 2.0 * (PI / 2.0).sin()) / z0;
        assert!((conv.delta0_star.re - expect).abs() < 1e-12 * expect.abs());
        for z in [c(0.5, 0.0), c(-1.3, 0.4), c(2.2, -0.8)] {
            let om = evaluate_omega(&conv.omega, z, n).unwrap().value;
            assert!(rel(om, spec.eval(z)) < 1e-3);
            assert!(rel(om, f.evaluate(z).unwrap()) < 1e-10);
        }
    }

    #[test]
    fn complex_zeros_break_the_sign_hypothesis() {
        let f = factorize_s(&example_s(PI / 4.0, 0.25), 100).unwrap();
        assert!(matches!(to_omega(&f, 1.0), Err(FdeError::InvalidHypotheses(_))));
    }

    #[test]
    fn kernel_table_rows() {
        let class = |forcing, plugin| ProblemClass {
            forcing,
            plugin,
            zeros: vec![1.0, 2.0],
            zeros_star: vec![1.5, 3.0, 4.0],
            theta2: 0.5,
            d0: 0.3,
            epsilon: 0.01,
        };
        let k = kernel_catalog(&class(ForcingClass::Bounded, PluginKind::I)).unwrap();
        assert_eq!(k.power, 2);
        assert!(k.d.unwrap() - 0.3 > 0.0 && k.d.unwrap() - 0.3 < 1.0);
        assert_eq!(kernel_catalog(&class(ForcingClass::Decaying, PluginKind::I)).unwrap().power, 0);
        assert_eq!(kernel_catalog(&class(ForcingClass::Decaying, PluginKind::II)).unwrap().power, 0);
        assert_eq!(kernel_catalog(&class(ForcingClass::Decaying, PluginKind::III)).unwrap().power, 2);
        assert_eq!(kernel_catalog(&class(ForcingClass::Bounded, PluginKind::III)).unwrap().power, 4);
        // K★ = 4 makes π(5/2 − 2K★) − θ₂ − ε negative
        assert_eq!(kernel_catalog(&class(ForcingClass::Bounded, PluginKind::II)).unwrap().power, 8);
        assert!(matches!(ProblemClass::parse_kind("weird/I"), Err(FdeError::UnknownClass(_))));
        let p = kernel_catalog(&class(ForcingClass::Bounded, PluginKind::III)).unwrap().plugin;
        assert!(p.periodicity_defect(&[c(0.37, 0.2), c(-0.8, -0.4)]) < 1e-9);
    }
}
