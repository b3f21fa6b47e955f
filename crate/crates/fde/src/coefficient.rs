//! The coefficient Ω(z): an exponential factor, a finite rational factor and a
//! normalized infinite product Ω₁(z) built from four sequence families.

use crate::error::{FdeError, Result};
use crate::specfun::{ln1p, C64};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyKind {
    /// numerator, enters as (h − z)
    H,
    /// numerator, enters as (γ + z)
    Gamma,
    /// denominator, enters as (ζ − z)
    Zeta,
    /// denominator, enters as (η + z)
    Eta,
}

/// Closed form term(i, n) = c₁·nᵖ + c₂·n + c₃ + c₄·i.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "kebab-case")]
pub enum Generator {
    AffinePower { p: f64, coeffs: [C64; 4] },
}

impl Generator {
    pub fn affine_power(p: f64, c1: f64, c2: f64, c3: f64, c4: f64) -> Self {
        Generator::AffinePower {
            p,
            coeffs: [c1.into(), c2.into(), c3.into(), c4.into()],
        }
    }

    /// Lattice offset + n·step, the shape produced by trigonometric zero sets.
    pub fn lattice(offset: C64, step: f64) -> Self {
        Generator::AffinePower {
            p: 1.0,
            coeffs: [C64::new(0.0, 0.0), step.into(), offset, C64::new(0.0, 0.0)],
        }
    }

    pub fn value(&self, i: usize, n: usize) -> C64 {
        match self {
            Generator::AffinePower { p, coeffs } => {
                let nf = n as f64;
                let np = if coeffs[0].norm() == 0.0 { 0.0 } else { nf.powf(*p) };
                coeffs[0] * np + coeffs[1] * nf + coeffs[2] + coeffs[3] * i as f64
            }
        }
    }

    fn scaled(&self, factor: f64) -> Self {
        match self {
            Generator::AffinePower { p, coeffs } => Generator::AffinePower {
                p: *p,
                coeffs: coeffs.map(|c| c * factor),
            },
        }
    }

    /// True when the term is affine in n, so lattice clauses can be solved exactly.
    pub fn affine_step(&self) -> Option<(C64, C64, C64)> {
        match self {
            Generator::AffinePower { p, coeffs } => {
                if coeffs[0].norm() == 0.0 {
                    Some((coeffs[1], coeffs[2], coeffs[3]))
                } else if *p == 1.0 {
                    Some((coeffs[0] + coeffs[1], coeffs[2], coeffs[3]))
                } else if *p == 0.0 {
                    Some((coeffs[1], coeffs[2] + coeffs[0], coeffs[3]))
                } else {
                    None
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceFamily {
    pub kind: FamilyKind,
    pub count: usize,
    pub generator: Generator,
}

impl SequenceFamily {
    pub fn new(kind: FamilyKind, count: usize, generator: Generator) -> Self {
        Self { kind, count, generator }
    }

    /// Term for index i ∈ 1..=count and n ≥ 1.
    pub fn term(&self, i: usize, n: usize) -> C64 {
        self.generator.value(i, n)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Deltas {
    #[serde(default)]
    pub d1: Vec<C64>,
    #[serde(default)]
    pub d2: Vec<C64>,
    #[serde(default)]
    pub d3: Vec<C64>,
    #[serde(default)]
    pub d4: Vec<C64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OmegaSpec {
    pub delta0: C64,
    #[serde(rename = "A", default)]
    pub a: C64,
    #[serde(rename = "B", default)]
    pub b: C64,
    #[serde(default)]
    pub deltas: Deltas,
    #[serde(default)]
    pub families: Vec<SequenceFamily>,
    /// Ω₁ ≡ 1 when set; families are then ignored.
    #[serde(default)]
    pub finite: bool,
}

impl OmegaSpec {
    pub fn constant(delta0: C64) -> Self {
        OmegaSpec {
            delta0,
            a: C64::new(0.0, 0.0),
            b: C64::new(0.0, 0.0),
            deltas: Deltas::default(),
            families: Vec::new(),
            finite: true,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| FdeError::Parse(e.to_string()))
    }

    pub fn has_product(&self) -> bool {
        !self.finite && self.families.iter().any(|f| f.count > 0)
    }

    /// M₅..M₈ in the order h, γ, ζ, η.
    pub fn family_counts(&self) -> [usize; 4] {
        let mut m = [0usize; 4];
        if self.finite {
            return m;
        }
        for f in &self.families {
            m[kind_index(f.kind)] += f.count;
        }
        m
    }

    /// M₁ + M₂ − M₃ − M₄.
    pub fn finite_degree(&self) -> i32 {
        self.deltas.d1.len() as i32 + self.deltas.d2.len() as i32
            - self.deltas.d3.len() as i32
            - self.deltas.d4.len() as i32
    }

    /// Iterate terms of every family of `kind` at level n.
    pub fn terms(&self, kind: FamilyKind, n: usize) -> impl Iterator<Item = C64> + '_ {
        self.families
            .iter()
            .filter(move |f| f.kind == kind && !self.finite)
            .flat_map(move |f| (1..=f.count).map(move |i| f.term(i, n)))
    }

    pub fn is_complex(&self) -> bool {
        let probe = [1usize, 2, 7];
        self.families.iter().any(|f| {
            (1..=f.count).any(|i| probe.iter().any(|&n| f.term(i, n).im != 0.0))
        })
    }
}

pub(crate) fn kind_index(kind: FamilyKind) -> usize {
    match kind {
        FamilyKind::H => 0,
        FamilyKind::Gamma => 1,
        FamilyKind::Zeta => 2,
        FamilyKind::Eta => 3,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquationParams {
    pub a1: f64,
    pub a2: f64,
    pub nu: f64,
    pub beta: f64,
}

impl EquationParams {
    pub fn unit(a1: f64, a2: f64, nu: f64) -> Self {
        Self { a1, a2, nu, beta: 1.0 }
    }

    /// a₁σ + a₂σ^ν with the principal power.
    pub fn lead(&self, sigma: C64) -> C64 {
        let frac = if self.a2 == 0.0 {
            C64::new(0.0, 0.0)
        } else if sigma.norm() == 0.0 {
            C64::new(0.0, 0.0)
        } else {
            (self.nu * sigma.ln()).exp()
        };
        self.a1 * sigma + self.a2 * frac
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Clause {
    pub id: String,
    pub passed: bool,
    pub detail: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    /// Accepted, but close to the threshold.
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub borderline: bool,
}

impl Clause {
    pub fn new(id: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Clause {
            id: id.into(),
            passed,
            detail: detail.into(),
            value: None,
            borderline: false,
        }
    }

    fn with_value(mut self, v: f64) -> Self {
        self.value = Some(v);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct ValidationReport {
    pub clauses: Vec<Clause>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.clauses.iter().all(|c| c.passed)
    }

    pub fn push(&mut self, c: Clause) {
        self.clauses.push(c);
    }

    pub fn failures(&self) -> Vec<&Clause> {
        self.clauses.iter().filter(|c| !c.passed).collect()
    }

    pub fn clause(&self, id: &str) -> Option<&Clause> {
        self.clauses.iter().find(|c| c.id == id)
    }
}

/// Accepted ceiling for the estimated H2 series values.
pub const SUMMABILITY_CEILING: f64 = 1e6;

/// Tail of Σ_{n>N} t(n) from the decay between N/2 and N (power-law model).
/// Returns None when the terms do not decay faster than 1/n.
pub fn power_tail(t_half: f64, t_full: f64, n: usize) -> Option<(f64, f64)> {
    if t_full == 0.0 {
        return Some((0.0, f64::INFINITY));
    }
    if t_half == 0.0 {
        return None;
    }
    let s = (t_half / t_full).log2();
    if !(s > 1.02) {
        return None;
    }
    Some((t_full * n as f64 / (s - 1.0), s))
}

fn sq_term(spec: &OmegaSpec, n: usize, hatted: bool, const_im: &[bool]) -> f64 {
    let mut s = 0.0;
    let mut k = 0;
    for f in spec.families.iter() {
        for i in 1..=f.count {
            let x = f.term(i, n);
            let q = if !hatted {
                x.norm()
            } else if const_im[k] {
                x.re
            } else {
                x.re.min(x.im)
            };
            s += if q == 0.0 { f64::INFINITY } else { 1.0 / (q * q) };
            k += 1;
        }
    }
    s
}

/// |Σh⁻¹ − Σγ⁻¹ − Σζ⁻¹ + Ση⁻¹| at level n.
fn linear_term(spec: &OmegaSpec, n: usize) -> f64 {
    let sign = [1.0, -1.0, -1.0, 1.0];
    let mut s = C64::new(0.0, 0.0);
    for f in &spec.families {
        for i in 1..=f.count {
            s += sign[kind_index(f.kind)] * f.term(i, n).inv();
        }
    }
    s.norm()
}

fn series_clause(id: &str, term: impl Fn(usize) -> f64, depth: usize) -> Clause {
    let mut partial = 0.0;
    for n in 1..=depth {
        partial += term(n);
    }
    match power_tail(term(depth / 2), term(depth), depth) {
        Some((tail, s)) if (partial + tail).is_finite() => {
            let total = partial + tail;
            let ok = total < SUMMABILITY_CEILING;
            let mut c = Clause::new(
                id,
                ok,
                format!("partial sum {partial:.6e} + tail {tail:.3e} (decay exponent {s:.3})"),
            )
            .with_value(total);
            c.borderline = ok && (s < 1.2 || total > 0.1 * SUMMABILITY_CEILING);
            c
        }
        _ => Clause::new(
            id,
            false,
            format!("terms decay no faster than 1/n; partial sum to {depth} is {partial:.6e}"),
        )
        .with_value(f64::INFINITY),
    }
}

/// Check the parameter, finite-factor and sequence hypotheses numerically.
pub fn validate_hypotheses(spec: &OmegaSpec, params: &EquationParams, probe_depth: usize) -> ValidationReport {
    let depth = probe_depth.max(10);
    let mut r = ValidationReport::default();

    let p = params;
    r.push(Clause::new("params.a1", p.a1 >= 0.0, format!("a1 = {}", p.a1)));
    r.push(Clause::new("params.a2", p.a2 >= 0.0, format!("a2 = {}", p.a2)));
    r.push(Clause::new("params.a1+a2", p.a1 + p.a2 > 0.0, format!("a1 + a2 = {}", p.a1 + p.a2)));
    r.push(Clause::new("params.nu", p.nu > 0.0 && p.nu < 1.0, format!("nu = {}", p.nu)));
    r.push(Clause::new("params.beta", p.beta != 0.0 && p.beta.is_finite(), format!("beta = {}", p.beta)));
    r.push(Clause::new("finite.delta0", spec.delta0.norm() > 0.0, format!("delta0 = {}", spec.delta0)));

    let complex = spec.is_complex()
        || [&spec.deltas.d1, &spec.deltas.d2, &spec.deltas.d3, &spec.deltas.d4]
            .iter()
            .any(|v| v.iter().any(|d| d.im != 0.0));
    r.push(Clause::new(
        "finite.delta1",
        spec.deltas.d1.iter().all(|d| d.norm() > 0.0),
        "delta^1 entries nonzero",
    ));
    r.push(Clause::new(
        "finite.delta3",
        spec.deltas.d3.iter().all(|d| d.norm() > 0.0),
        "delta^3 entries nonzero",
    ));

    if !spec.has_product() {
        return r;
    }

    let mut const_im = Vec::new();
    for (fi, f) in spec.families.iter().enumerate() {
        for i in 1..=f.count {
            let mut ok = true;
            let mut detail = String::from("ok");
            let first_im = f.term(i, 1).im;
            let mut im_const = true;
            for n in 1..=depth {
                let a = f.term(i, n);
                let b = f.term(i, n + 1);
                if b.im != first_im || a.im != first_im {
                    im_const = false;
                }
                let bad = if complex {
                    !(a.re > 0.0 && a.re < b.re && a.im >= 0.0 && a.im <= b.im)
                } else {
                    !(a.re > 0.0 && a.re < b.re && a.im == 0.0)
                };
                if bad {
                    ok = false;
                    detail = format!("n = {n}: {a} -> {b}");
                    break;
                }
            }
            const_im.push(im_const);
            r.push(Clause::new(
                format!("sequences.monotone[{fi}:{:?}:{i}]", f.kind),
                ok,
                detail,
            ));
        }
    }

    let sq = |n: usize| sq_term(spec, n, complex, &const_im);
    r.push(series_clause("sequences.sum_inverse_squares", sq, depth));
    r.push(series_clause(
        "sequences.sum_signed_inverses",
        |n| linear_term(spec, n),
        depth,
    ));
    r
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OmegaValue {
    pub value: C64,
    pub tail_estimate: f64,
}

pub const TOL_FACTOR: f64 = 1e-12;

/// ln of the finite part δ₀·exp(Az²+Bz)·Π(δ¹−z)Π(δ²+z)/[Π(δ³−z)Π(δ⁴+z)].
pub fn log_omega_finite(spec: &OmegaSpec, z: C64) -> Result<C64> {
    let mut s = spec.delta0.ln() + spec.a * z * z + spec.b * z;
    for d in &spec.deltas.d1 {
        s += (d - z).ln();
    }
    for d in &spec.deltas.d2 {
        s += (d + z).ln();
    }
    for d in &spec.deltas.d3 {
        let w = d - z;
        if w.norm() < TOL_FACTOR {
            return Err(FdeError::PoleProximity(format!("z = {z} hits delta^3 = {d}")));
        }
        s -= w.ln();
    }
    for d in &spec.deltas.d4 {
        let w = d + z;
        if w.norm() < TOL_FACTOR {
            return Err(FdeError::PoleProximity(format!("z = {z} hits -delta^4 = {}", -d)));
        }
        s -= w.ln();
    }
    Ok(s)
}

/// ln of the n-th normalized factor of Ω₁.
pub fn log_omega1_factor(spec: &OmegaSpec, z: C64, n: usize) -> Result<C64> {
    let mut s = C64::new(0.0, 0.0);
    for f in &spec.families {
        for i in 1..=f.count {
            let x = f.term(i, n);
            let (w, sign) = match f.kind {
                FamilyKind::H => (-z / x, 1.0),
                FamilyKind::Gamma => (z / x, 1.0),
                FamilyKind::Zeta => (-z / x, -1.0),
                FamilyKind::Eta => (z / x, -1.0),
            };
            if sign < 0.0 && (1.0 + w).norm() < TOL_FACTOR {
                return Err(FdeError::PoleProximity(format!("z = {z} hits a denominator zero at n = {n}")));
            }
            s += sign * ln1p(w);
        }
    }
    Ok(s)
}

/// ln Ω₁ truncated after `truncation` factors.
pub fn log_omega1(spec: &OmegaSpec, z: C64, truncation: usize) -> Result<C64> {
    let mut s = C64::new(0.0, 0.0);
    if !spec.has_product() {
        return Ok(s);
    }
    for n in 1..=truncation {
        s += log_omega1_factor(spec, z, n)?;
    }
    Ok(s)
}

/// Estimated tails beyond `truncation` of Σ|signed inverse sum| and Σ|x|⁻²,
/// or None when either series fails to converge.
pub fn summability_tails(spec: &OmegaSpec, truncation: usize) -> Option<(f64, f64)> {
    if !spec.has_product() {
        return Some((0.0, 0.0));
    }
    let n = truncation.max(4);
    let plain = vec![false; spec.families.iter().map(|f| f.count).sum()];
    let t1 = power_tail(linear_term(spec, n / 2), linear_term(spec, n), n)?;
    let t2 = power_tail(sq_term(spec, n / 2, false, &plain), sq_term(spec, n, false, &plain), n)?;
    Some((t1.0, t2.0))
}

/// Bound on |ln Ω₁ − ln Ω₁,N| from the tails of the two summability series.
pub fn omega1_tail_bound(spec: &OmegaSpec, z: C64, truncation: usize) -> f64 {
    match summability_tails(spec, truncation) {
        Some((a, b)) => z.norm() * a + z.norm_sqr() * b,
        None => f64::INFINITY,
    }
}

pub fn evaluate_omega(spec: &OmegaSpec, z: C64, truncation: usize) -> Result<OmegaValue> {
    let log = log_omega_finite(spec, z)? + log_omega1(spec, z, truncation)?;
    let value = log.exp();
    let tail = omega1_tail_bound(spec, z, truncation);
    Ok(OmegaValue {
        value,
        tail_estimate: value.norm() * tail.exp_m1(),
    })
}

/// Like `evaluate_omega`, failing when the truncation error estimate exceeds `tol`.
pub fn evaluate_omega_within(spec: &OmegaSpec, z: C64, truncation: usize, tol: f64) -> Result<OmegaValue> {
    let v = evaluate_omega(spec, z, truncation)?;
    if v.tail_estimate > tol {
        return Err(FdeError::TruncationTooSmall {
            estimate: v.tail_estimate,
            requested: tol,
        });
    }
    Ok(v)
}

/// Rescale to unit step in y = z/|β|; the sign of β is kept in the returned params.
pub fn rescale_to_unit_step(spec: &OmegaSpec, params: &EquationParams) -> (OmegaSpec, EquationParams) {
    let b = params.beta.abs();
    if b == 1.0 {
        return (spec.clone(), *params);
    }
    let scale = |v: &Vec<C64>| v.iter().map(|d| d / b).collect::<Vec<_>>();
    let out = OmegaSpec {
        delta0: spec.delta0 * b.powi(spec.finite_degree()),
        a: spec.a * b * b,
        b: spec.b * b,
        deltas: Deltas {
            d1: scale(&spec.deltas.d1),
            d2: scale(&spec.deltas.d2),
            d3: scale(&spec.deltas.d3),
            d4: scale(&spec.deltas.d4),
        },
        families: spec
            .families
            .iter()
            .map(|f| SequenceFamily::new(f.kind, f.count, f.generator.scaled(1.0 / b)))
            .collect(),
        finite: spec.finite,
    };
    (out, EquationParams { beta: params.beta.signum(), ..*params })
}

/// Ready-made coefficient specifications.
pub mod catalog {
    use super::*;
    use std::f64::consts::PI;

    /// tan z = z ∏ (nπ−z)(nπ+z)/(((2n−1)π/2)² − z²) · ((2n−1)π/2)²/(nπ)².
    pub fn tangent_spec() -> OmegaSpec {
        OmegaSpec {
            delta0: 1.0.into(),
            a: 0.0.into(),
            b: 0.0.into(),
            deltas: Deltas {
                d2: vec![0.0.into()],
                ..Deltas::default()
            },
            families: vec![
                SequenceFamily::new(FamilyKind::H, 1, Generator::affine_power(1.0, 0.0, PI, 0.0, 0.0)),
                SequenceFamily::new(FamilyKind::Gamma, 1, Generator::affine_power(1.0, 0.0, PI, 0.0, 0.0)),
                SequenceFamily::new(FamilyKind::Zeta, 1, Generator::affine_power(1.0, 0.0, PI, -PI / 2.0, 0.0)),
                SequenceFamily::new(FamilyKind::Eta, 1, Generator::affine_power(1.0, 0.0, PI, -PI / 2.0, 0.0)),
            ],
            finite: false,
        }
    }

    /// Families with mixed growth rates: γ = n² − i/(M₆+1), η = n^{3/2} + i,
    /// h = 2A₀n − Aᵢ, ζ = 2A₀n + Aᵢ with Aᵢ = i·A₀/(M+1).
    /// The γ offset uses M₆+1 so that γ_{M₆,1} stays positive.
    pub fn mixed_growth_families(m: usize, m6: usize, m8: usize, a0: f64) -> Vec<SequenceFamily> {
        let ai = a0 / (m as f64 + 1.0);
        vec![
            SequenceFamily::new(FamilyKind::Gamma, m6, Generator::affine_power(2.0, 1.0, 0.0, 0.0, -1.0 / (m6 as f64 + 1.0))),
            SequenceFamily::new(FamilyKind::Eta, m8, Generator::affine_power(1.5, 1.0, 0.0, 0.0, 1.0)),
            SequenceFamily::new(FamilyKind::H, m, Generator::affine_power(1.0, 0.0, 2.0 * a0, 0.0, -ai)),
            SequenceFamily::new(FamilyKind::Zeta, m, Generator::affine_power(1.0, 0.0, 2.0 * a0, 0.0, ai)),
        ]
    }

    /// Mixed-growth families with a nontrivial exponential and finite part.
    pub fn mixed_growth_spec() -> OmegaSpec {
        OmegaSpec {
            delta0: C64::new(1.5, 0.2),
            a: C64::new(0.05, 0.01),
            b: C64::new(0.2, -0.1),
            deltas: Deltas {
                d1: vec![C64::new(0.7, 0.0)],
                d2: vec![C64::new(0.3, 0.0)],
                d3: vec![C64::new(1.1, 0.0)],
                d4: vec![C64::new(0.4, 0.0)],
            },
            families: mixed_growth_families(2, 2, 2, 1.0),
            finite: false,
        }
    }

    /// The bare infinite product of the mixed-growth families, δ₀ = 1.
    pub fn mixed_growth_product() -> OmegaSpec {
        OmegaSpec {
            delta0: 1.0.into(),
            a: 0.0.into(),
            b: 0.0.into(),
            deltas: Deltas::default(),
            families: mixed_growth_families(2, 2, 2, 1.0),
            finite: false,
        }
    }
}
