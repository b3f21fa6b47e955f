//! Transmission problem in a plane corner with a fractional dynamic condition on the
//! interface: reduction to the difference equation in ρ, factorization of 𝒢, the
//! homogeneous and particular solutions, transform-domain fields and demo-scale inversion.
//!
//! After x₁ = ln r, u = e^{𝔰x₁}U and the Fourier/Laplace transforms, the jump
//! 𝒰 = U₁* − U₂* on the interface solves
//!   (a₁σ + a₂σ^ν)·V(ρ+1) − (𝔰 − 𝔰★ρ)·𝒢(i𝔰★ρ)·V(ρ) = 𝔉(ρ, σ),   λ = i𝔰★ρ.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::coefficient::{
    evaluate_omega, validate_hypotheses, Clause, Deltas, EquationParams, FamilyKind, Generator, OmegaSpec,
    SequenceFamily, ValidationReport,
};
use crate::error::{FdeError, Result};
use crate::factorization::{factorize_s, find_zeros, SParams, TrigCoefficientSpec, ZeroTable};
use crate::homogeneous::{HomogeneousSolution, PeriodicPlugin};
use crate::particular::{ContourSpec, DecayClass, ForcingSpec, KernelSpec, ParticularProblem, ParticularValue};
use crate::specfun::{ln_sin_pi, log_gamma, mittag_leffler3, C64};

/// ω₀ = qπ/p.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CornerAngle {
    pub q: u32,
    pub p: u32,
}

/// Separable forcing f(x₁, t) = g(x₁)·h(t) on the interface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ForcingModel {
    Zero,
    /// g = A·exp(−((x₁ − ln r₀)/w)²), h = 1 − e^{−t/t_ramp} for t > 0.
    GaussianBump {
        r0: f64,
        width: f64,
        t_ramp: f64,
        #[serde(default = "one")]
        amplitude: f64,
    },
}

fn one() -> f64 {
    1.0
}

fn half() -> f64 {
    0.5
}

impl ForcingModel {
    /// ln g̃(μ), g̃(μ) = ∫ e^{−iμx} g(x) dx.
    pub fn log_spatial_transform(&self, mu: C64) -> Option<C64> {
        match *self {
            ForcingModel::Zero => None,
            ForcingModel::GaussianBump { r0, width, amplitude, .. } => {
                let x0 = r0.ln();
                let i = C64::i();
                Some((amplitude * width * PI.sqrt()).ln() - i * mu * x0 - mu * mu * width * width / 4.0)
            }
        }
    }

    /// ln ĥ(σ).
    pub fn log_time_laplace(&self, sigma: C64) -> Option<C64> {
        match *self {
            ForcingModel::Zero => None,
            ForcingModel::GaussianBump { t_ramp, .. } => Some(-(sigma.ln() + (1.0 + sigma * t_ramp).ln())),
        }
    }

    pub fn time_profile(&self, t: f64) -> f64 {
        match *self {
            ForcingModel::Zero => 0.0,
            ForcingModel::GaussianBump { t_ramp, .. } => {
                if t <= 0.0 {
                    0.0
                } else {
                    -(-t / t_ramp).exp_m1()
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, ForcingModel::Zero)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransmissionProblem {
    pub omega0: CornerAngle,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub a4: f64,
    /// Jump coefficient 𝔎 of the flux condition.
    pub kappa: f64,
    /// Degeneracy exponent 𝔰₀; 𝔰★ = 𝔰₀ + 1.
    pub s0: f64,
    pub nu: f64,
    /// Weight 𝔰 of the substitution u = e^{𝔰x₁}U.
    pub s: f64,
    pub forcing: ForcingModel,
    /// Contour abscissa for the particular solution.
    #[serde(default = "half")]
    pub d0: f64,
}

impl TransmissionProblem {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| FdeError::Parse(e.to_string()))
    }

    pub fn omega0(&self) -> f64 {
        self.omega0.q as f64 * PI / self.omega0.p as f64
    }

    pub fn s_star(&self) -> f64 {
        self.s0 + 1.0
    }

    pub fn params(&self) -> EquationParams {
        EquationParams {
            a1: self.a1,
            a2: self.a2,
            nu: self.nu,
            beta: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let CornerAngle { q, p } = self.omega0;
        SParams {
            theta1: 0.0,
            theta2: 0.0,
            p,
            q,
            q2: 2.0,
        }
        .validate()?;
        if self.kappa == 1.0 {
            return Err(FdeError::DegenerateCoefficients("kappa = 1".into()));
        }
        let ok = self.a1 >= 0.0 && self.a2 >= 0.0 && self.a1 + self.a2 > 0.0 && self.a3 > 0.0 && self.a4 > 0.0 && self.kappa > 0.0;
        if !ok {
            return Err(FdeError::InvalidSpec("need a1, a2 ≥ 0 with a1 + a2 > 0 and a3, a4, kappa > 0".into()));
        }
        if !(self.nu > 0.0 && self.nu < 1.0) {
            return Err(FdeError::InvalidSpec(format!("nu = {} not in (0, 1)", self.nu)));
        }
        if self.s == 0.0 {
            return Err(FdeError::InvalidWeight("s = 0".into()));
        }
        Ok(())
    }

    /// sgn(𝔎 − 1).
    pub fn kappa_sign(&self) -> f64 {
        (self.kappa - 1.0).signum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AngleData {
    pub theta1: f64,
    pub theta2: f64,
    pub q2: f64,
    pub q2_star: f64,
    /// |sin θ₁ + q₂ sin θ₂ − 2/√(1+a₃²)|.
    pub identity_defect: f64,
}

pub fn derive_angles(p: &TransmissionProblem) -> Result<AngleData> {
    let k = p.kappa;
    if k == 1.0 {
        return Err(FdeError::DegenerateCoefficients("kappa = 1".into()));
    }
    let a3 = p.a3;
    let b = a3 * (k + 1.0) + 2.0 * k * p.a4;
    let km1 = k - 1.0;
    let r3 = (1.0 + a3 * a3).sqrt();
    let (s1, c1) = (1.0 / r3, a3 / r3);
    let s2 = 1.0 / (1.0 + b * b / (km1 * km1)).sqrt();
    let c2 = b * km1.signum() / (km1 * km1 + b * b).sqrt();
    let q2 = ((b * b + km1 * km1) / (km1 * km1 * (1.0 + a3 * a3))).sqrt();
    let q2_star = (k + 1.0) / km1.abs();
    let theta1 = s1.atan2(c1);
    let theta2 = s2.atan2(c2);
    Ok(AngleData {
        theta1,
        theta2,
        q2,
        q2_star,
        identity_defect: (theta1.sin() + q2 * theta2.sin() - 2.0 / r3).abs(),
    })
}

/// 𝒢(λ) in closed form, 𝔵 = iλ + 𝔰.
pub fn build_g(p: &TransmissionProblem, lambda: C64) -> Result<C64> {
    let ang = derive_angles(p)?;
    let x = C64::i() * lambda + p.s;
    let w0 = p.omega0();
    let den = (2.0 * w0 * x).sin() + p.kappa_sign() * ang.q2_star * (PI * x).sin();
    if den.norm() < 1e-14 {
        return Err(FdeError::DenominatorZero(format!("lambda = {lambda}")));
    }
    let num = (2.0 * x * w0 - ang.theta1).sin() + ang.q2 * (PI * x - ang.theta2).sin();
    Ok(-(1.0 + p.a3 * p.a3).sqrt() * num / den)
}

/// 𝒩(λ) from the flux condition.
pub fn n_ratio(p: &TransmissionProblem, x: C64) -> C64 {
    let w0 = p.omega0();
    let (m, pl) = (x * (w0 - PI / 2.0), x * (w0 + PI / 2.0));
    (m.cos() + p.a4 * m.sin()) / (pl.cos() + p.kappa * p.a4 * pl.sin())
}

/// 𝒩₁ = 𝔎𝒩 sin 𝔵(ω₀+π/2) − sin 𝔵(ω₀−π/2), the interface jump per unit ℳ₂.
pub fn n1(p: &TransmissionProblem, x: C64) -> C64 {
    let w0 = p.omega0();
    p.kappa * n_ratio(p, x) * (x * (w0 + PI / 2.0)).sin() - (x * (w0 - PI / 2.0)).sin()
}

/// 𝒢(λ) composed from 𝒩 and 𝒩₁ without simplification.
pub fn build_g_composed(p: &TransmissionProblem, lambda: C64) -> Result<C64> {
    if p.kappa == 1.0 {
        return Err(FdeError::DegenerateCoefficients("kappa = 1".into()));
    }
    let x = C64::i() * lambda + p.s;
    let w0 = p.omega0();
    let d = n1(p, x);
    if d.norm() < 1e-14 {
        return Err(FdeError::DenominatorZero(format!("lambda = {lambda}")));
    }
    Ok((p.kappa * n_ratio(p, x) * (x * (w0 + PI / 2.0)).cos() - (x * (w0 - PI / 2.0)).cos()) / d - p.a3)
}

/// With 𝔰★ = 0 the equation is algebraic: 𝒰 = 𝔉/(a₁σ + a₂σ^ν − 𝔵𝒢(λ)).
pub fn jump_without_shift(p: &TransmissionProblem, lambda: C64, sigma: C64) -> Result<C64> {
    if p.s_star() != 0.0 {
        return Err(FdeError::IncompatibleParams(format!("s_star = {} is not zero", p.s_star())));
    }
    let lf = p.forcing.log_spatial_transform(lambda + C64::i() * (1.0 - p.s));
    let (Some(lg), Some(lh)) = (lf, p.forcing.log_time_laplace(sigma)) else {
        return Ok(C64::new(0.0, 0.0));
    };
    let x = C64::i() * lambda + p.s;
    let den = p.params().lead(sigma) - x * build_g(p, lambda)?;
    if den.norm() < 1e-14 {
        return Err(FdeError::DenominatorZero(format!("lambda = {lambda}")));
    }
    Ok((lg + lh).exp() / den)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransmissionFactorization {
    pub angles: AngleData,
    pub p: u32,
    pub q: u32,
    pub omega0: f64,
    pub s: f64,
    pub s_star: f64,
    pub kappa_above_one: bool,
    /// Zeros of 𝒮⁺(·; θ₁, θ₂, p/2q, q₂) in [0, 4πq).
    pub numerator: ZeroTable,
    /// Zeros of 𝒮^{sgn(𝔎−1)}(·; 0, 0, p/2q, q₂*) in [0, 4πq).
    pub denominator: ZeroTable,
    pub delta0_kappa: C64,
    /// Ω(ρ) = (𝔰 − 𝔰★ρ)𝒢(i𝔰★ρ) in product form, step 1.
    pub omega: OmegaSpec,
}

impl TransmissionFactorization {
    pub fn period(&self) -> f64 {
        4.0 * PI * self.q as f64
    }

    fn shift(&self) -> f64 {
        2.0 * self.omega0 * self.s
    }

    fn scale(&self) -> f64 {
        2.0 * self.omega0 * self.s_star.abs()
    }

    /// Lattice step in ρ.
    pub fn rho_period(&self) -> f64 {
        self.period() / self.scale()
    }

    fn num_zeros(&self) -> Vec<f64> {
        self.numerator.expanded()
    }

    fn den_zeros(&self) -> Vec<f64> {
        self.denominator.expanded()
    }

    /// Z̄⁺_{i,n} (n ≥ 0) and Z̄⁺_{i,−n} (n < 0 gives the mirrored branch, with −0 as `neg = true`).
    pub fn zbar(&self, i: usize, n: usize, neg: bool) -> Option<f64> {
        let z = *self.num_zeros().get(i)?;
        let t = n as f64 * self.period();
        Some(if neg { (self.shift() - z + t) / self.scale() } else { (z + t - self.shift()) / self.scale() })
    }

    /// Z_{j,n}, or Z_{j,−n} with `neg = true`.
    pub fn zden(&self, j: usize, n: usize, neg: bool) -> Option<f64> {
        let z = *self.den_zeros().get(j)?;
        let t = n as f64 * self.period();
        Some(if neg { (z + t + self.shift()) / self.scale() } else { (z + t - self.shift()) / self.scale() })
    }

    fn problem_g(&self, p: &TransmissionProblem, rho: C64) -> Result<C64> {
        build_g(p, C64::i() * self.s_star * rho)
    }

    /// Ω(ρ) from the closed form of 𝒢.
    pub fn omega_closed(&self, p: &TransmissionProblem, rho: C64) -> Result<C64> {
        Ok((self.s - self.s_star * rho) * self.problem_g(p, rho)?)
    }

    /// Rates of ln|V_h(ρ)|⁻¹ per unit |Im ρ| as Im ρ → +∞ and −∞ with a unit plug-in, from
    /// |Γ(ρ)| ~ e^{−π|Im ρ|/2} and the limit phase of Ω(ρ)/ρ. Periodic factors shift them by 2πk.
    pub fn inverse_growth_rates(&self, p: &TransmissionProblem) -> Result<(f64, f64)> {
        // large enough for the limit phase, small enough that |den|² stays finite
        let t = 60.0 / self.s_star.abs();
        let phase = |im: f64| -> Result<f64> {
            let rho = C64::new(0.25, im);
            Ok((self.omega_closed(p, rho)? / rho).arg())
        };
        Ok((PI / 2.0 + phase(t)?, PI / 2.0 - phase(-t)?))
    }

    /// 𝒢(λ) from the zero-table products of numerator and denominator, with the
    /// truncation tail summed analytically.
    pub fn g_product(&self, p: &TransmissionProblem, lambda: C64, truncation: usize) -> Result<C64> {
        let (num, den) = self.trig_specs();
        let fnum = factorize_s(&num, truncation)?;
        let fden = factorize_s(&den, truncation)?;
        let w = 2.0 * self.omega0 * (C64::i() * lambda + self.s);
        let r = fnum.log_evaluate_corrected(w)? - fden.log_evaluate_corrected(w)?;
        Ok(-(1.0 + p.a3 * p.a3).sqrt() * r.exp())
    }

    pub fn trig_specs(&self) -> (TrigCoefficientSpec, TrigCoefficientSpec) {
        let num = SParams {
            theta1: self.angles.theta1,
            theta2: self.angles.theta2,
            p: self.p,
            q: self.q,
            q2: self.angles.q2,
        };
        let den = SParams {
            theta1: 0.0,
            theta2: 0.0,
            p: self.p,
            q: self.q,
            q2: self.angles.q2_star,
        };
        let den = if self.kappa_above_one { TrigCoefficientSpec::SPlus(den) } else { TrigCoefficientSpec::SMinus(den) };
        (TrigCoefficientSpec::SPlus(num), den)
    }
}

/// Angles, zero tables and the Ω(ρ) spec. Fails if a zero table has non-real
/// entries or the weight puts ρ = 0 on a zero of Ω.
pub fn factorize_transmission(p: &TransmissionProblem) -> Result<TransmissionFactorization> {
    p.validate()?;
    if p.s_star() == 0.0 {
        return Err(FdeError::IncompatibleParams("s_star = 0: the equation is algebraic, use jump_without_shift".into()));
    }
    let angles = derive_angles(p)?;
    let CornerAngle { q, p: pp } = p.omega0;
    let mut fact = TransmissionFactorization {
        angles,
        p: pp,
        q,
        omega0: p.omega0(),
        s: p.s,
        s_star: p.s_star(),
        kappa_above_one: p.kappa > 1.0,
        numerator: ZeroTable {
            period: 0.0,
            entries: vec![],
            count: 0,
            complex: vec![],
            lattice_rule: crate::factorization::LatticeRule::Translates,
        },
        denominator: ZeroTable {
            period: 0.0,
            entries: vec![],
            count: 0,
            complex: vec![],
            lattice_rule: crate::factorization::LatticeRule::OddReflection,
        },
        delta0_kappa: C64::new(0.0, 0.0),
        omega: OmegaSpec {
            delta0: C64::new(1.0, 0.0),
            a: C64::new(0.0, 0.0),
            b: C64::new(0.0, 0.0),
            deltas: Deltas::default(),
            finite: false,
            families: vec![],
        },
    };
    let (num, den) = fact.trig_specs();
    fact.numerator = find_zeros(&num)?;
    fact.denominator = find_zeros(&den)?;
    for (name, t) in [("numerator", &fact.numerator), ("denominator", &fact.denominator)] {
        if !t.complex.is_empty() {
            return Err(FdeError::InvalidHypotheses(format!("{name} of G has {} non-real zeros", t.complex.len())));
        }
    }
    if fact.denominator.origin_multiplicity() != 1 {
        return Err(FdeError::InvalidSpec("denominator zero at the origin is not simple".into()));
    }

    let sgn = fact.s_star.signum();
    let t = fact.rho_period();
    let nz = fact.num_zeros().len();
    let kz = fact.den_zeros().len();
    let mut deltas = Deltas::default();
    let mut families = Vec::new();
    let fam = |kind, x: f64| SequenceFamily::new(kind, 1, Generator::lattice(x.into(), t));
    let g0 = fact.problem_g(p, C64::new(0.0, 0.0)).map_err(|_| FdeError::InvalidWeight(format!("s = {} puts a pole of G on the real axis", p.s)))?;
    let mut delta0 = C64::new(fact.s, 0.0) * g0;
    for i in 0..nz {
        let (zp, zm) = (fact.zbar(i, 0, false).unwrap(), fact.zbar(i, 0, true).unwrap());
        if zp == 0.0 {
            return Err(FdeError::InvalidWeight(format!("2 omega0 s hits the numerator zero {i}")));
        }
        delta0 /= zp;
        if sgn > 0.0 {
            deltas.d2.push(zp.into());
            families.push(fam(FamilyKind::Gamma, zp));
            families.push(fam(FamilyKind::H, zm));
        } else {
            deltas.d1.push(zp.into());
            families.push(fam(FamilyKind::H, zp));
            families.push(fam(FamilyKind::Gamma, zm));
        }
    }
    for j in 0..kz {
        let (zp, zm) = (fact.zden(j, 0, false).unwrap(), fact.zden(j, 0, true).unwrap());
        if j > 0 {
            delta0 *= zp * zm;
            if sgn > 0.0 {
                deltas.d4.push(zp.into());
                deltas.d3.push(zm.into());
            } else {
                deltas.d3.push(zp.into());
                deltas.d4.push(zm.into());
            }
        }
        if sgn > 0.0 {
            families.push(fam(FamilyKind::Eta, zp));
            families.push(fam(FamilyKind::Zeta, zm));
        } else {
            families.push(fam(FamilyKind::Zeta, zp));
            families.push(fam(FamilyKind::Eta, zm));
        }
    }
    fact.delta0_kappa = delta0;
    fact.omega = OmegaSpec {
        delta0,
        a: C64::new(0.0, 0.0),
        b: C64::new(0.0, 0.0),
        deltas,
        finite: false,
        families,
    };
    Ok(fact)
}

#[derive(Debug, Clone, Serialize)]
pub struct WeightReport {
    pub report: ValidationReport,
    /// Admissible 𝔰-interval from the Re ρ = 0 reading of the λ-window.
    pub interval: (f64, f64),
}

/// Checks of the weight 𝔰 against the zero lattices and the λ-window at Im λ = 0.
pub fn admissible_weight(p: &TransmissionProblem, fact: &TransmissionFactorization) -> WeightReport {
    let mut r = ValidationReport::default();
    let w0 = fact.omega0;
    let s = p.s;
    let ang = fact.angles;
    let den = (2.0 * w0 * s).sin() + p.kappa_sign() * ang.q2_star * (PI * s).sin();
    r.push(Clause::new("h15.denominator", den.abs() > 1e-12, format!("sin 2w0 s + sgn q2* sin pi s = {den:e}")));
    let t = fact.period();
    r.push(Clause::new("h15.abs_s", s.abs() < t, format!("|s| = {} vs 4 pi q = {t}", s.abs())));
    let a = 2.0 * w0 * s;
    let dist = |z: f64| {
        let d = (a - z).rem_euclid(t);
        d.min(t - d)
    };
    let num_hit = fact.numerator.entries.iter().map(|e| dist(e.location)).fold(f64::INFINITY, f64::min);
    r.push(Clause::new("h15.numerator_lattice", num_hit > 1e-9, format!("distance of 2w0 s to the numerator lattice {num_hit:e}")));
    let den_hit = fact
        .denominator
        .entries
        .iter()
        .flat_map(|e| [dist(e.location), dist(-e.location)])
        .fold(f64::INFINITY, f64::min);
    r.push(Clause::new("h15.denominator_lattice", den_hit > 1e-9, format!("distance of 2w0 s to the denominator lattice {den_hit:e}")));

    let nz = fact.numerator.expanded();
    let kz = fact.denominator.expanded();
    let ss = fact.s_star.abs();
    let (lo, hi) = if fact.s_star < 0.0 {
        (-kz.get(1).copied().unwrap_or(f64::NAN) / (2.0 * w0), nz.get(3).copied().unwrap_or(f64::NAN) / (2.0 * w0))
    } else {
        (-kz.get(1).copied().unwrap_or(f64::NAN) / (2.0 * w0) - ss, kz.get(4).copied().unwrap_or(f64::NAN) / (2.0 * w0))
    };
    r.push(Clause::new("window.interval", lo < s && s < hi, format!("s = {s} vs ({lo}, {hi})")));

    // isolated exclusions, taken over all integers m ≥ 1 inside the window
    let mut excluded = Vec::new();
    let d0 = p.d0;
    let ms = 1..=64;
    if fact.s_star < 0.0 {
        for z in nz.iter().take(3) {
            excluded.extend(ms.clone().map(|m| z / (2.0 * w0) - ss * (m as f64 - 1.0)));
        }
        for z in kz.iter().take(6) {
            excluded.extend(ms.clone().map(|m| ss * (m as f64 - d0) - z / (2.0 * w0)));
        }
    } else {
        for z in kz.iter().take(5) {
            excluded.extend(ms.clone().map(|m| z / (2.0 * w0) + ss * (1.0 - m as f64 - d0)));
        }
        for z in kz.iter().skip(1).take(3) {
            excluded.extend(ms.clone().map(|m| -ss * m as f64 + z / (2.0 * w0)));
        }
    }
    let near = excluded.iter().map(|x| (x - s).abs()).fold(f64::INFINITY, f64::min);
    r.push(Clause::new("window.exclusions", near > 1e-9, format!("nearest excluded weight at distance {near:e}")));
    WeightReport { report: r, interval: (lo, hi) }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RhoWindows {
    /// V_h(·; ℙ₁) has no poles for Re ρ here.
    pub pole_free: (f64, f64),
    /// V_h(·; ℙ₁) does not vanish for Re ρ here.
    pub nonvanishing: (f64, f64),
    /// Range of Re ρ for the particular solution and for Im λ/𝔰★.
    pub particular: (f64, f64),
}

fn need(v: Option<f64>, what: &str) -> Result<f64> {
    v.ok_or_else(|| FdeError::InsufficientZeros(what.into()))
}

pub fn rho_windows(fact: &TransmissionFactorization) -> Result<RhoWindows> {
    let z = |j, n, neg| need(fact.zden(j, n, neg), "denominator table too short");
    let zb = |i, n, neg| need(fact.zbar(i, n, neg), "numerator table too short");
    if fact.s_star > 0.0 {
        Ok(RhoWindows {
            pole_free: (-zb(5, 0, false)?, 1.0 + z(1, 0, true)?),
            nonvanishing: (-z(4, 0, false)?, 1.0 + zb(0, 1, true)?),
            particular: (-z(4, 0, false)?, zb(0, 1, true)?),
        })
    } else {
        let kz = fact.den_zeros().len();
        let zstar = if kz > 6 { 1.0 + z(6, 0, true)? } else { fact.period() };
        Ok(RhoWindows {
            pole_free: (-zb(0, 1, true)?, zstar),
            nonvanishing: (-z(1, 0, true)?, 1.0 + zb(3, 0, false)?),
            particular: (-z(1, 0, true)?, zb(3, 0, false)?),
        })
    }
}

/// The periodic plug-in ℙ₁ cancelling the finite Gamma poles of V_h near the window.
pub fn build_p1(fact: &TransmissionFactorization) -> Result<PeriodicPlugin> {
    let zb = |i| need(fact.zbar(i, 0, false), "numerator table too short for P1");
    let z = |j| need(fact.zden(j, 0, false), "denominator table too short for P1");
    if fact.s_star > 0.0 {
        let up: Vec<f64> = (0..5).map(zb).collect::<Result<_>>()?;
        let down: Vec<f64> = (1..4).map(z).collect::<Result<_>>()?;
        Ok(PeriodicPlugin::from_log_fn("P1 (s* > 0)", move |r| {
            up.iter().map(|&x| ln_sin_pi(x + r)).sum::<C64>() - down.iter().map(|&x| ln_sin_pi(x + r)).sum::<C64>()
        }))
    } else {
        let up: Vec<f64> = (1..6).map(z).collect::<Result<_>>()?;
        let down: Vec<f64> = (0..3).map(zb).collect::<Result<_>>()?;
        Ok(PeriodicPlugin::from_log_fn("P1 (s* < 0)", move |r| {
            up.iter().map(|&x| ln_sin_pi(1.0 + x - r)).sum::<C64>() - down.iter().map(|&x| ln_sin_pi(1.0 + x - r)).sum::<C64>()
        }))
    }
}

/// V_h(ρ, σ; ℙ₁) as the homogeneous solution of the ρ-equation.
pub fn build_vh(p: &TransmissionProblem, fact: &TransmissionFactorization, truncation: usize) -> Result<HomogeneousSolution> {
    let w = admissible_weight(p, fact);
    if !w.report.passed() {
        let ids: Vec<String> = w.report.failures().iter().map(|c| format!("{}: {}", c.id, c.detail)).collect();
        return Err(FdeError::InvalidWeight(ids.join("; ")));
    }
    let hyp = validate_hypotheses(&fact.omega, &p.params(), 1000);
    if !hyp.passed() {
        let ids: Vec<String> = hyp.failures().iter().map(|c| format!("{}: {}", c.id, c.detail)).collect();
        return Err(FdeError::InvalidWeight(ids.join("; ")));
    }
    HomogeneousSolution::build(&fact.omega, &p.params(), build_p1(fact)?, truncation)
}

/// 𝔉(ρ, σ) = f*(i𝔰★ρ + i(1−𝔰), σ).
pub fn transmission_forcing(p: &TransmissionProblem) -> ForcingSpec {
    if p.forcing.is_zero() {
        return ForcingSpec::zero();
    }
    let model = p.forcing;
    let (ss, s) = (p.s_star(), p.s);
    ForcingSpec::from_log_fn("interface forcing", DecayClass::ExpDecay(f64::INFINITY), move |rho, sigma| {
        let mu = C64::i() * (ss * rho + 1.0 - s);
        model.log_spatial_transform(mu).unwrap() + model.log_time_laplace(sigma).unwrap()
    })
}

/// ℒ(t, y): inverse Laplace transform of (a₁σ + a₂σ^ν)^{−b}, b = d₀ − iy.
pub fn laplace_kernel(a1: f64, a2: f64, nu: f64, t: f64, b: C64) -> Result<C64> {
    if t <= 0.0 {
        return Ok(C64::new(0.0, 0.0));
    }
    let lt = t.ln();
    if a1 == 0.0 || a2 == 0.0 {
        let e = (a1 + a2 * nu) / (a1 + a2) * b;
        return Ok(((e - 1.0) * lt - log_gamma(e)? - b * (a1 + a2).ln()).exp());
    }
    let ml = mittag_leffler3(1.0 - nu, b, b, C64::new(-(a2 / a1) * t.powf(1.0 - nu), 0.0))?;
    Ok((-b * a1.ln() + (b - 1.0) * lt).exp() * ml)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadConfig {
    pub lambda_nodes: usize,
    pub lambda_max: f64,
    pub y_nodes: usize,
    pub y_max: f64,
    pub tau_nodes: usize,
    /// Re ρ of the λ-line; the middle of the admissible window when absent.
    #[serde(default)]
    pub rho_re: Option<f64>,
    #[serde(default = "default_budget")]
    pub max_evaluations: usize,
}

fn default_budget() -> usize {
    200_000
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig {
            lambda_nodes: 32,
            lambda_max: 8.0,
            y_nodes: 32,
            y_max: 6.0,
            tau_nodes: 24,
            rho_re: None,
            max_evaluations: default_budget(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FieldValue {
    pub u1: C64,
    pub u2: C64,
    /// Difference to the same quadrature on every other node.
    pub error_estimate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransformValue {
    pub u1: C64,
    pub u2: C64,
}

/// The assembled pipeline for one problem.
#[derive(Debug, Clone)]
pub struct TransmissionSolver {
    pub problem: TransmissionProblem,
    pub fact: TransmissionFactorization,
    pub windows: RhoWindows,
    pub vh: HomogeneousSolution,
    pub particular: ParticularProblem,
}

impl TransmissionSolver {
    /// Paper kernel sin²πd/sin²π(ξ+d) with d from [`KernelSpec::default_shift`].
    pub fn new(problem: TransmissionProblem, truncation: usize, contour: ContourSpec) -> Result<Self> {
        let d = KernelSpec::default_shift(contour.d0);
        Self::with_kernel(problem, truncation, contour, KernelSpec::sine_power(d, 2))
    }

    pub fn with_kernel(problem: TransmissionProblem, truncation: usize, contour: ContourSpec, kernel: KernelSpec) -> Result<Self> {
        let fact = factorize_transmission(&problem)?;
        let windows = rho_windows(&fact)?;
        let vh = build_vh(&problem, &fact, truncation)?;
        let particular = ParticularProblem::new(vh.clone(), transmission_forcing(&problem), kernel, contour)?;
        Ok(TransmissionSolver {
            problem,
            fact,
            windows,
            vh,
            particular,
        })
    }

    pub fn solve_v(&self, rho: C64, sigma: C64) -> Result<ParticularValue> {
        self.particular.solve(rho, sigma)
    }

    /// |c·V_h(ρ+1) − Ω(ρ)V_h(ρ)| / |Ω(ρ)V_h(ρ)| with Ω from the closed form of 𝒢.
    pub fn residual_homogeneous(&self, rho: C64, sigma: C64) -> Result<f64> {
        let lhs = self.vh.lead(sigma).ln() + self.vh.log_evaluate(rho + 1.0, sigma)?;
        let rhs = self.fact.omega_closed(&self.problem, rho)?.ln() + self.vh.log_evaluate(rho, sigma)?;
        Ok(((lhs - rhs).exp() - 1.0).norm())
    }

    /// Relative residual of the ρ-equation for Y = V_h + V, scaled by the largest term.
    pub fn residual_full(&self, rho: C64, sigma: C64) -> Result<f64> {
        let y = |r: C64| -> Result<C64> { Ok(self.vh.evaluate(r, sigma)? + self.solve_v(r, sigma)?.value) };
        let c = self.vh.lead(sigma);
        let a = c * y(rho + 1.0)?;
        let b = self.fact.omega_closed(&self.problem, rho)? * y(rho)?;
        let f = self.particular.forcing.eval(rho, sigma);
        Ok((a - b - f).norm() / a.norm().max(b.norm()).max(f.norm()))
    }

    /// Same for the particular part alone, against the truncated Ω of V_h.
    pub fn residual_particular(&self, rho: C64, sigma: C64) -> Result<f64> {
        self.particular.residual(rho, sigma)
    }

    fn require_window(&self, re_rho: f64) -> Result<()> {
        let (lo, hi) = self.windows.particular;
        if !(lo < re_rho && re_rho < hi) {
            return Err(FdeError::WindowViolation(format!("Re rho = {re_rho} outside ({lo}, {hi})")));
        }
        Ok(())
    }

    /// (ℳ₁, ℳ₂) for a jump value 𝒰 at 𝔵.
    fn amplitudes(&self, x: C64, jump: C64) -> Result<(C64, C64)> {
        let d = n1(&self.problem, x);
        if d.norm() < 1e-14 {
            return Err(FdeError::DenominatorZero(format!("N1 vanishes at x = {x}")));
        }
        let m2 = jump / d;
        Ok((self.problem.kappa * n_ratio(&self.problem, x) * m2, m2))
    }

    /// U₁*(λ, x₂, σ) and U₂*(λ, x₂, σ); the field U_k* is only meaningful on its own sector.
    pub fn u_transform(&self, lambda: C64, x2: f64, sigma: C64) -> Result<TransformValue> {
        let rho = -C64::i() * lambda / self.fact.s_star;
        self.require_window(rho.re)?;
        let v = self.solve_v(rho, sigma)?.value;
        let x = C64::i() * lambda + self.problem.s;
        let (m1, m2) = self.amplitudes(x, v)?;
        Ok(TransformValue {
            u1: m1 * (x * (x2 + PI / 2.0)).sin(),
            u2: m2 * (x * (x2 - PI / 2.0)).sin(),
        })
    }

    /// Relative residual of the flux condition ∂U₁* − 𝔎∂U₂* + 𝔎a₄𝔵(U₁* − U₂*) = 0 on the interface.
    pub fn flux_residual(&self, lambda: C64, sigma: C64) -> Result<f64> {
        let rho = -C64::i() * lambda / self.fact.s_star;
        let v = self.solve_v(rho, sigma)?.value;
        let x = C64::i() * lambda + self.problem.s;
        let (m1, m2) = self.amplitudes(x, v)?;
        let w0 = self.fact.omega0;
        let (sp, sm) = ((x * (w0 + PI / 2.0)).sin(), (x * (w0 - PI / 2.0)).sin());
        let (cp, cm) = ((x * (w0 + PI / 2.0)).cos(), (x * (w0 - PI / 2.0)).cos());
        let k = self.problem.kappa;
        let d1 = x * m1 * cp;
        let d2 = x * m2 * cm;
        let jump = m1 * sp - m2 * sm;
        let r = d1 - k * d2 + k * self.problem.a4 * x * jump;
        Ok(r.norm() / (d1.norm() + k * d2.norm() + k * self.problem.a4 * (x * jump).norm()))
    }

    /// |U₁* − U₂* − V| / |V| on the interface.
    pub fn jump_residual(&self, lambda: C64, sigma: C64) -> Result<f64> {
        let rho = -C64::i() * lambda / self.fact.s_star;
        let v = self.solve_v(rho, sigma)?.value;
        let u = self.u_transform(lambda, self.fact.omega0, sigma)?;
        Ok((u.u1 - u.u2 - v).norm() / v.norm())
    }

    /// Slope of ln|V_h| in Im ρ between two heights.
    pub fn vh_growth_rate(&self, re_rho: f64, im_lo: f64, im_hi: f64, sigma: C64) -> Result<f64> {
        let l = |t: f64| -> Result<f64> { Ok(self.vh.log_evaluate(C64::new(re_rho, t), sigma)?.re) };
        Ok((l(im_hi)? - l(im_lo)?) / (im_hi - im_lo))
    }

    /// U₁, U₂ at (x₁, x₂, t) by nested quadrature: λ along Im λ = 𝔰★·Re ρ, the contour
    /// variable y, and the time convolution with ℒ(t, y).
    pub fn inverse_transforms(&self, x1: f64, x2: f64, t: f64, quad: &QuadConfig) -> Result<FieldValue> {
        let zero = FieldValue {
            u1: C64::new(0.0, 0.0),
            u2: C64::new(0.0, 0.0),
            error_estimate: 0.0,
        };
        if self.problem.forcing.is_zero() || t <= 0.0 {
            return Ok(zero);
        }
        let evals = quad.lambda_nodes * quad.y_nodes;
        if evals > quad.max_evaluations {
            return Err(FdeError::BudgetExceeded(format!("{evals} integrand evaluations > {}", quad.max_evaluations)));
        }
        let (lo, hi) = self.windows.particular;
        let re_rho = quad.rho_re.unwrap_or(0.5 * (lo + hi));
        self.require_window(re_rho)?;
        let p = &self.problem;
        let d0 = self.particular.contour.d0;
        let ss = self.fact.s_star;
        let kappa_line = ss * re_rho;
        let ln_delta = self.fact.delta0_kappa.ln();
        let kernel = &self.particular.kernel;

        // y grid with the time convolution (h ∗ ℒ(·, y))(t)
        let ny = quad.y_nodes;
        let hy = 2.0 * quad.y_max / ny as f64;
        let ys: Vec<f64> = (0..=ny).map(|k| -quad.y_max + k as f64 * hy).collect();
        let (gx, gw) = crate::particular::gauss_legendre(quad.tau_nodes);
        let m = (2.0 / d0).ceil();
        let conv = |y: f64| -> Result<C64> {
            let b = C64::new(d0, -y);
            let mut acc = C64::new(0.0, 0.0);
            for (x, w) in gx.iter().zip(&gw) {
                let v = 0.5 * (x + 1.0);
                let tau = t * v.powf(m);
                let jac = t * m * v.powf(m - 1.0) * 0.5 * w;
                acc += jac * p.forcing.time_profile(t - tau) * laplace_kernel(p.a1, p.a2, p.nu, tau, b)?;
            }
            Ok(acc)
        };
        let convs: Vec<C64> = ys.iter().map(|&y| conv(y)).collect::<Result<_>>()?;

        let nl = quad.lambda_nodes;
        let hl = 2.0 * quad.lambda_max / nl as f64;
        let mut full = (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
        let mut coarse = full;
        for kl in 0..=nl {
            let lr = -quad.lambda_max + kl as f64 * hl;
            let lambda = C64::new(lr, kappa_line);
            let rho = -C64::i() * lambda / ss;
            let u_rho = self.vh.log_evaluate_unpowered(rho)?;
            let mut inner_full = C64::new(0.0, 0.0);
            let mut inner_coarse = C64::new(0.0, 0.0);
            for (ky, (&y, cv)) in ys.iter().zip(&convs).enumerate() {
                let xi = C64::new(-d0, y);
                let arg = lambda + C64::i() * (ss * xi + 1.0 - p.s);
                let lg = p.forcing.log_spatial_transform(arg).unwrap();
                let l = -(1.0 + xi) * ln_delta + u_rho - self.vh.log_evaluate_unpowered(rho + 1.0 + xi)? + lg + kernel.log_kernel(xi);
                // dξ = i dy
                let term = C64::i() * l.exp() * cv;
                let wy = if ky == 0 || ky == ny { 0.5 } else { 1.0 };
                inner_full += wy * hy * term;
                if ky % 2 == 0 {
                    let wc = if ky == 0 || ky == ny { 0.5 } else { 1.0 };
                    inner_coarse += wc * 2.0 * hy * term;
                }
            }
            let x = C64::i() * lambda + p.s;
            let phase = (C64::i() * lambda * x1).exp() / (2.0 * PI);
            let field = |jump: C64| -> Result<(C64, C64)> {
                let (m1, m2) = self.amplitudes(x, jump)?;
                Ok((m1 * (x * (x2 + PI / 2.0)).sin(), m2 * (x * (x2 - PI / 2.0)).sin()))
            };
            let (f1, f2) = field(inner_full)?;
            let (c1, c2) = field(inner_coarse)?;
            let wl = if kl == 0 || kl == nl { 0.5 } else { 1.0 };
            full.0 += wl * hl * phase * f1;
            full.1 += wl * hl * phase * f2;
            if kl % 2 == 0 {
                coarse.0 += wl * 2.0 * hl * phase * c1;
                coarse.1 += wl * 2.0 * hl * phase * c2;
            }
        }
        let (u1, u2) = full;
        if !(u1.re.is_finite() && u2.re.is_finite()) {
            return Err(FdeError::NonConvergence("non-finite field value".into()));
        }
        Ok(FieldValue {
            u1,
            u2,
            error_estimate: (full.0 - coarse.0).norm().max((full.1 - coarse.1).norm()),
        })
    }
}

/// Three-way check of 𝒢: closed form, composition through 𝒩/𝒩₁, and the factorized product.
pub fn g_agreement(p: &TransmissionProblem, fact: &TransmissionFactorization, lambda: C64, truncation: usize) -> Result<(f64, f64)> {
    let closed = build_g(p, lambda)?;
    let composed = build_g_composed(p, lambda)?;
    let product = fact.g_product(p, lambda, truncation)?;
    let rel = |a: C64| (a - closed).norm() / closed.norm();
    Ok((rel(composed), rel(product)))
}

/// Ω(ρ) from the truncated spec, for comparison with [`TransmissionFactorization::omega_closed`].
pub fn omega_from_spec(fact: &TransmissionFactorization, rho: C64, truncation: usize) -> Result<C64> {
    Ok(evaluate_omega(&fact.omega, rho, truncation)?.value)
}

/// Relative gap between ℒ at a₂ = 0 and the Mittag-Leffler branch at a small a₂.
pub fn laplace_branch_gap(a1: f64, nu: f64, t: f64, b: C64, a2_small: f64) -> Result<f64> {
    let closed = laplace_kernel(a1, 0.0, nu, t, b)?;
    let series = laplace_kernel(a1, a2_small, nu, t, b)?;
    Ok((closed - series).norm() / closed.norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::particular::ContourSpec;
    use crate::specfun::gamma;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn demo_problem() -> TransmissionProblem {
        TransmissionProblem {
            omega0: CornerAngle { q: 1, p: 3 },
            a1: 1.0,
            a2: 0.5,
            a3: 1.0,
            a4: 0.5,
            kappa: 2.0,
            s0: -0.5,
            nu: 0.5,
            s: 0.3,
            forcing: ForcingModel::GaussianBump {
                r0: 1.0,
                width: 0.8,
                t_ramp: 1.0,
                amplitude: 1.0,
            },
            d0: 0.5,
        }
    }

    #[test]
    fn angle_identity_and_ranges() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let mut p = demo_problem();
            p.a3 = rng.random_range(0.01..5.0);
            p.a4 = rng.random_range(0.01..5.0);
            p.kappa = if rng.random_bool(0.5) { rng.random_range(1.01..10.0) } else { rng.random_range(0.05..0.99) };
            let a = derive_angles(&p).unwrap();
            assert!(a.identity_defect < 1e-12);
            assert!(a.theta1 > 0.0 && a.theta1 < PI / 2.0);
            assert!(a.theta2 > 0.0 && a.theta2 < PI);
            assert!(a.q2 > 1.0 && a.q2_star > 1.0);
        }
        let a = derive_angles(&demo_problem()).unwrap();
        assert!((a.theta1 - PI / 4.0).abs() < 1e-15);
        let mut p = demo_problem();
        p.kappa = 0.5;
        assert!(derive_angles(&p).unwrap().theta2 > PI / 2.0);
        p.kappa = 1.0;
        assert!(matches!(derive_angles(&p), Err(FdeError::DegenerateCoefficients(_))));
    }

    #[test]
    fn closed_form_matches_composition() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for kappa in [2.0, 0.4] {
            let p = TransmissionProblem { kappa, ..demo_problem() };
            for _ in 0..20 {
                let l = C64::new(rng.random_range(-3.0..3.0), rng.random_range(-1.0..1.0));
                let (a, b) = (build_g(&p, l).unwrap(), build_g_composed(&p, l).unwrap());
                assert!((a - b).norm() < 1e-12 * a.norm());
            }
        }
        let p = demo_problem();
        let g0 = build_g(&p, C64::new(0.0, 0.0)).unwrap();
        let a = derive_angles(&p).unwrap();
        let (w0, s) = (p.omega0(), p.s);
        let direct = -(2.0f64).sqrt() * ((2.0 * w0 * s - a.theta1).sin() + a.q2 * (PI * s - a.theta2).sin())
            / ((2.0 * w0 * s).sin() + a.q2_star * (PI * s).sin());
        assert!((g0.re - direct).abs() < 1e-14);
    }

    #[test]
    fn factorized_g_agrees() {
        for kappa in [2.0, 0.4] {
            let p = TransmissionProblem { kappa, ..demo_problem() };
            let f = factorize_transmission(&p).unwrap();
            assert_eq!(f.numerator.count, 6);
            assert_eq!(f.denominator.count, 6);
            for l in [C64::new(0.4, 0.1), C64::new(-2.0, 0.3), C64::new(1.3, -0.2)] {
                let (c, prod) = g_agreement(&p, &f, l, 2000).unwrap();
                assert!(c < 1e-12 && prod < 1e-6, "{c} {prod}");
            }
        }
    }

    #[test]
    fn omega_spec_reproduces_the_coefficient() {
        for (kappa, s0) in [(2.0, -0.5), (0.4, -0.5), (2.0, -1.6)] {
            let p = TransmissionProblem { kappa, s0, ..demo_problem() };
            let f = factorize_transmission(&p).unwrap();
            for rho in [C64::new(0.2, 0.3), C64::new(-0.4, 1.0)] {
                let spec = omega_from_spec(&f, rho, 20_000).unwrap();
                let closed = f.omega_closed(&p, rho).unwrap();
                assert!((spec - closed).norm() < 1e-3 * closed.norm(), "{kappa} {s0}: {spec} vs {closed}");
            }
        }
    }

    #[test]
    fn weight_checks() {
        let p = demo_problem();
        let f = factorize_transmission(&p).unwrap();
        let w = admissible_weight(&p, &f);
        assert!(w.report.passed(), "{:?}", w.report.failures());
        let hit = TransmissionProblem {
            s: f.numerator.entries[0].location / (2.0 * p.omega0()),
            ..p
        };
        let fh = factorize_transmission(&hit);
        let failed = match fh {
            Ok(fh) => !admissible_weight(&hit, &fh).report.clause("h15.numerator_lattice").unwrap().passed,
            Err(e) => matches!(e, FdeError::InvalidWeight(_)),
        };
        assert!(failed);
        let far = TransmissionProblem { s: 13.0, ..p };
        let ff = factorize_transmission(&far).unwrap();
        assert!(!admissible_weight(&far, &ff).report.clause("h15.abs_s").unwrap().passed);
        // interior of the window for s* < 0, kappa > 1
        let neg = TransmissionProblem { s0: -1.5, s: 0.2, ..p };
        let fneg = factorize_transmission(&neg).unwrap();
        let wn = admissible_weight(&neg, &fneg);
        assert!(wn.interval.0 < 0.2 && 0.2 < wn.interval.1);
        assert!(wn.report.clause("window.interval").unwrap().passed);
    }

    #[test]
    fn plugin_is_periodic_with_two_pi_growth() {
        for s0 in [-0.5, -1.5] {
            let p = TransmissionProblem { s0, ..demo_problem() };
            let f = factorize_transmission(&p).unwrap();
            let pl = build_p1(&f).unwrap();
            assert!(pl.periodicity_defect(&[C64::new(0.13, 0.4), C64::new(-0.6, -1.1), C64::new(0.37, 2.0)]) < 1e-10);
            let g = |t: f64| pl.log_eval(C64::new(0.21, t)).re;
            let rate = (g(50.0) - g(5.0)) / 45.0;
            assert!((rate / (2.0 * PI) - 1.0).abs() < 0.05, "{rate}");
        }
    }

    #[test]
    fn laplace_kernel_branches_join() {
        for y in [0.0, 1.5, -2.0] {
            let b = C64::new(0.5, -y);
            let gap = laplace_branch_gap(1.0, 0.5, 0.7, b, 1e-7).unwrap();
            assert!(gap < 1e-4, "{gap}");
        }
        // a₁ = 0: pure fractional branch
        let b = C64::new(0.5, 0.0);
        let v = laplace_kernel(0.0, 2.0, 0.5, 1.0, b).unwrap();
        let expect = 1.0 / (gamma(C64::new(0.25, 0.0)).unwrap() * 2.0f64.sqrt());
        assert!((v - expect).norm() < 1e-12);
        assert_eq!(laplace_kernel(1.0, 1.0, 0.5, 0.0, b).unwrap(), C64::new(0.0, 0.0));
    }

    #[test]
    fn shortcut_requires_zero_shift() {
        let p = demo_problem();
        assert!(matches!(jump_without_shift(&p, C64::new(0.1, 0.0), C64::new(1.0, 0.0)), Err(FdeError::IncompatibleParams(_))));
        let z = TransmissionProblem { s0: -1.0, ..p };
        assert!(matches!(factorize_transmission(&z), Err(FdeError::IncompatibleParams(_))));
        let u = jump_without_shift(&z, C64::new(0.1, 0.0), C64::new(1.0, 0.0)).unwrap();
        let x = C64::new(p.s, 0.0) + C64::i() * 0.1;
        let f = (z.forcing.log_spatial_transform(C64::new(0.1, 1.0 - p.s)).unwrap() + z.forcing.log_time_laplace(C64::new(1.0, 0.0)).unwrap()).exp();
        let lead = z.params().lead(C64::new(1.0, 0.0));
        assert!((lead * u - x * build_g(&z, C64::new(0.1, 0.0)).unwrap() * u - f).norm() < 1e-12 * f.norm());
    }

    #[test]
    fn solver_satisfies_the_shift_equation_and_interface_conditions() {
        let s = TransmissionSolver::new(demo_problem(), 2000, ContourSpec::line(0.5)).unwrap();
        let sig = C64::new(1.0, 0.0);
        for rho in [C64::new(0.2, 0.0), C64::new(0.1, 1.5)] {
            assert!(s.residual_homogeneous(rho, sig).unwrap() < 1e-3);
            assert!(s.residual_full(rho, sig).unwrap() < 1e-3);
            let lam = C64::i() * s.fact.s_star * rho;
            assert!(s.flux_residual(lam, sig).unwrap() < 1e-12);
            assert!(s.jump_residual(lam, sig).unwrap() < 1e-12);
            let left = s.u_transform(lam, -PI / 2.0, sig).unwrap();
            let right = s.u_transform(lam, PI / 2.0, sig).unwrap();
            assert!(left.u1.norm() < 1e-15 && right.u2.norm() < 1e-15);
        }
        assert!(matches!(
            s.u_transform(C64::new(0.0, 0.5 * 20.0), 0.0, sig),
            Err(FdeError::WindowViolation(_))
        ));
    }

    #[test]
    fn inverse_transform_vanishes_without_forcing_or_time() {
        let q = QuadConfig {
            lambda_nodes: 4,
            y_nodes: 4,
            tau_nodes: 8,
            ..Default::default()
        };
        let s = TransmissionSolver::new(demo_problem(), 200, ContourSpec::line(0.5)).unwrap();
        let v = s.inverse_transforms(0.1, 0.3, 0.0, &q).unwrap();
        assert_eq!((v.u1, v.u2), (C64::new(0.0, 0.0), C64::new(0.0, 0.0)));
        let z = TransmissionSolver::new(TransmissionProblem { forcing: ForcingModel::Zero, ..demo_problem() }, 200, ContourSpec::line(0.5)).unwrap();
        let v = z.inverse_transforms(0.1, 0.3, 1.0, &q).unwrap();
        assert_eq!((v.u1, v.u2), (C64::new(0.0, 0.0), C64::new(0.0, 0.0)));
        let v = s.inverse_transforms(0.1, 0.3, 1.0, &q).unwrap();
        assert!(v.u1.norm().is_finite() && v.error_estimate.is_finite());
        let big = QuadConfig { max_evaluations: 10, ..q };
        assert!(matches!(s.inverse_transforms(0.1, 0.3, 1.0, &big), Err(FdeError::BudgetExceeded(_))));
    }

    #[test]
    fn homogeneous_decay_along_imaginary_direction() {
        use crate::homogeneous::{HomogeneousSolution, PeriodicPlugin};
        let sig = C64::new(1.0, 0.0);
        for (s0, kappa) in [(-0.5, 2.0), (-0.5, 0.4), (-1.5, 2.0)] {
            let p = TransmissionProblem { s0, kappa, ..demo_problem() };
            let f = factorize_transmission(&p).unwrap();
            let h = HomogeneousSolution::build(&f.omega, &p.params(), PeriodicPlugin::unit(), 4000).unwrap();
            let l = |t: f64| -h.log_evaluate(C64::new(0.2, t), sig).unwrap().re;
            let (up, down) = f.inverse_growth_rates(&p).unwrap();
            let measured = [(l(120.0) - l(60.0)) / 60.0, (l(-120.0) - l(-60.0)) / 60.0];
            for (m, pred) in measured.into_iter().zip([up, down]) {
                let gap = (m - pred).rem_euclid(2.0 * PI);
                let gap = gap.min(2.0 * PI - gap);
                assert!(gap < 0.05 * pred.abs().max(1.0), "{s0} {kappa}: {m} vs {pred}");
            }
            if f.s_star < 0.0 {
                // π/2 − θ₂ for a negative shift step
                let printed = PI / 2.0 - f.angles.theta2;
                assert!((measured[0].abs() - printed).abs() < 0.1 * printed);
            }
        }
    }
}
