//! General solution of the homogeneous equation c·Y(z+β) = Ω(z)·Y(z),
//! c = a₁σ + a₂σ^ν, built from Gamma ratios and a regularized infinite product.
//!
//! Everything is evaluated in the rescaled variable y = z/|β| with unit step
//! of sign s = sgn β; the per-factor logarithms are accumulated and
//! exponentiated once.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::coefficient::{
    log_omega1, log_omega_finite, power_tail, rescale_to_unit_step, summability_tails, validate_hypotheses,
    EquationParams, FamilyKind, OmegaSpec, SequenceFamily,
};
use crate::error::{FdeError, Result};
use crate::specfun::{binet_remainder, ln1p, ln_sin_pi, log_gamma, stirling_leading, C64, HALF_LN_2PI};

pub const DEFAULT_TRUNCATION: usize = 10_000;
pub const TOL_REGION: f64 = 1e-9;

/// A 1-periodic function ℙ(w), stored through its logarithm so that
/// exponentially growing plug-ins can be combined without overflow.
#[derive(Clone)]
pub struct PeriodicPlugin {
    pub label: String,
    log_eval: Arc<dyn Fn(C64) -> C64 + Send + Sync>,
}

impl fmt::Debug for PeriodicPlugin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PeriodicPlugin").field("label", &self.label).finish()
    }
}

impl PeriodicPlugin {
    pub fn unit() -> Self {
        Self::from_log_fn("1", |_| C64::new(0.0, 0.0))
    }

    pub fn constant(c: C64) -> Self {
        let l = c.ln();
        Self::from_log_fn(format!("{c}"), move |_| l)
    }

    pub fn from_fn(label: impl Into<String>, f: impl Fn(C64) -> C64 + Send + Sync + 'static) -> Self {
        Self::from_log_fn(label, move |w| f(w).ln())
    }

    pub fn from_log_fn(label: impl Into<String>, f: impl Fn(C64) -> C64 + Send + Sync + 'static) -> Self {
        PeriodicPlugin {
            label: label.into(),
            log_eval: Arc::new(f),
        }
    }

    /// e^{iπw}·sin πw.
    pub fn sine_exponential() -> Self {
        Self::from_log_fn("exp(i pi w) sin(pi w)", |w| C64::new(0.0, std::f64::consts::PI) * w + ln_sin_pi(w))
    }

    pub fn log_eval(&self, w: C64) -> C64 {
        (self.log_eval)(w)
    }

    pub fn eval(&self, w: C64) -> C64 {
        self.log_eval(w).exp()
    }

    /// max |ℙ(w+1) − ℙ(w)| / (1 + |ℙ(w)|) over the probes.
    pub fn periodicity_defect(&self, probes: &[C64]) -> f64 {
        probes
            .iter()
            .map(|&w| {
                let a = self.eval(w);
                (self.eval(w + 1.0) - a).norm() / (1.0 + a.norm())
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub clause: String,
    /// Entry index within the list or family (1-based).
    pub index: usize,
    /// Sequence level n, 0 for finite lists.
    pub level: usize,
    /// The lattice integer m that was hit.
    pub m: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionReport {
    pub admissible: bool,
    pub violated_clauses: Vec<Violation>,
}

impl RegionReport {
    /// Admissible with respect to the clauses whose id starts with `prefix`.
    pub fn admissible_for(&self, prefix: &str) -> bool {
        !self.violated_clauses.iter().any(|v| v.clause.starts_with(prefix))
    }
}

/// Re(expr) must avoid base + dir·m, m = 0, 1, 2, …
fn lattice_hit(e: f64, base: f64, dir: f64, tol: f64) -> Option<i64> {
    let t = dir * (e - base);
    if t < -tol {
        return None;
    }
    let m = t.round();
    ((t - m).abs() < tol).then_some(m as i64)
}

struct Rule {
    id: &'static str,
    base: f64,
    dir: f64,
}

fn check_list(out: &mut Vec<Violation>, rule: Rule, values: impl Iterator<Item = f64>, tol: f64) {
    for (k, e) in values.enumerate() {
        if let Some(m) = lattice_hit(e, rule.base, rule.dir, tol) {
            out.push(Violation {
                clause: rule.id.to_string(),
                index: k + 1,
                level: 0,
                m,
            });
        }
    }
}

fn check_family(
    out: &mut Vec<Violation>,
    rule: Rule,
    spec: &OmegaSpec,
    kind: FamilyKind,
    expr: impl Fn(C64) -> f64,
    depth: usize,
    tol: f64,
) {
    for f in spec.families.iter().filter(|f| f.kind == kind) {
        for i in 1..=f.count {
            // the sequences increase, so once a term is on the safe side the rest are too
            for n in 1..=depth {
                let e = expr(f.term(i, n));
                if let Some(m) = lattice_hit(e, rule.base, rule.dir, tol) {
                    out.push(Violation {
                        clause: rule.id.to_string(),
                        index: i,
                        level: n,
                        m,
                    });
                }
                if rule.dir * (e - rule.base) < -tol {
                    break;
                }
            }
        }
    }
}

/// Evaluate every analyticity clause at y for a unit-step spec with step sign `s`.
///
/// Clause ids: `pole:*` guard the Gamma factors of the solution, `zero:*` the
/// reciprocal Gamma factors, `shifted:*` the d₀-shifted reciprocal.
fn region_unit(spec: &OmegaSpec, s: f64, y: C64, d0: f64, depth: usize, tol: f64) -> RegionReport {
    let mut v = Vec::new();
    let d = &spec.deltas;
    let plus = |list: &Vec<C64>| list.iter().map(|x| s * (y + x).re).collect::<Vec<_>>();
    let minus = |list: &Vec<C64>| list.iter().map(|x| s * (y - x).re).collect::<Vec<_>>();

    check_list(&mut v, Rule { id: "pole:delta2", base: 0.0, dir: -1.0 }, plus(&d.d2).into_iter(), tol);
    check_list(&mut v, Rule { id: "pole:delta3", base: 1.0, dir: 1.0 }, minus(&d.d3).into_iter(), tol);
    check_list(&mut v, Rule { id: "zero:delta4", base: 0.0, dir: -1.0 }, plus(&d.d4).into_iter(), tol);
    check_list(&mut v, Rule { id: "zero:delta1", base: 1.0, dir: 1.0 }, minus(&d.d1).into_iter(), tol);
    check_list(&mut v, Rule { id: "shifted:delta4", base: d0 - 1.0, dir: -1.0 }, plus(&d.d4).into_iter(), tol);
    check_list(&mut v, Rule { id: "shifted:delta1", base: d0, dir: 1.0 }, minus(&d.d1).into_iter(), tol);

    if spec.has_product() {
        let add = |x: C64| (y + x).re;
        let sub = |x: C64| (y - x).re;
        use FamilyKind::*;
        let rules: Vec<(Rule, FamilyKind, bool)> = if s > 0.0 {
            vec![
                (Rule { id: "pole:gamma", base: 0.0, dir: -1.0 }, Gamma, true),
                (Rule { id: "pole:zeta", base: 1.0, dir: 1.0 }, Zeta, false),
                (Rule { id: "zero:eta", base: 0.0, dir: -1.0 }, Eta, true),
                (Rule { id: "zero:h", base: 1.0, dir: 1.0 }, H, false),
                (Rule { id: "shifted:eta", base: d0 - 1.0, dir: -1.0 }, Eta, true),
                (Rule { id: "shifted:h", base: d0, dir: 1.0 }, H, false),
            ]
        } else {
            vec![
                (Rule { id: "pole:h", base: 0.0, dir: 1.0 }, H, false),
                (Rule { id: "pole:eta", base: -1.0, dir: -1.0 }, Eta, true),
                (Rule { id: "zero:gamma", base: -1.0, dir: -1.0 }, Gamma, true),
                (Rule { id: "zero:zeta", base: 0.0, dir: 1.0 }, Zeta, false),
                (Rule { id: "shifted:gamma", base: -d0, dir: -1.0 }, Gamma, true),
                (Rule { id: "shifted:zeta", base: 1.0 - d0, dir: 1.0 }, Zeta, false),
            ]
        };
        for (rule, kind, is_plus) in rules {
            if is_plus {
                check_family(&mut v, rule, spec, kind, add, depth, tol);
            } else {
                check_family(&mut v, rule, spec, kind, sub, depth, tol);
            }
        }
    }
    RegionReport {
        admissible: v.is_empty(),
        violated_clauses: v,
    }
}

/// Analyticity clauses at z for the original (unscaled) spec.
pub fn check_region(spec: &OmegaSpec, params: &EquationParams, z: C64, d0: f64, depth: usize) -> RegionReport {
    check_region_tol(spec, params, z, d0, depth, TOL_REGION)
}

pub fn check_region_tol(spec: &OmegaSpec, params: &EquationParams, z: C64, d0: f64, depth: usize, tol: f64) -> RegionReport {
    let (bar, p) = rescale_to_unit_step(spec, params);
    region_unit(&bar, p.beta, z / params.beta.abs(), d0, depth.max(1), tol)
}

/// lnΓ(a+w) − [(a−½)ln a − a + ½ln2π] − w·ln a, without cancellation for large a.
fn g_term(a: C64, w: C64) -> Result<C64> {
    if a.re > 0.0 && w.norm() < 0.5 * a.norm() {
        Ok((a + w - 0.5) * ln1p(w / a) - w + binet_remainder(a + w))
    } else {
        Ok(log_gamma(a + w)? - stirling_leading(a) - w * a.ln())
    }
}

fn x_ln_x(x: C64) -> C64 {
    x * (x.ln() - 1.0)
}

#[derive(Debug, Clone)]
pub struct HomogeneousSolution {
    spec: OmegaSpec,
    params: EquationParams,
    scale: f64,
    plugin: PeriodicPlugin,
    truncation: usize,
}

impl HomogeneousSolution {
    pub fn build(spec: &OmegaSpec, params: &EquationParams, plugin: PeriodicPlugin, truncation: usize) -> Result<Self> {
        let report = validate_hypotheses(spec, params, truncation.clamp(10, 1000));
        if !report.passed() {
            let ids: Vec<_> = report.failures().iter().map(|c| c.id.clone()).collect();
            return Err(FdeError::InvalidHypotheses(ids.join(", ")));
        }
        let (bar, p) = rescale_to_unit_step(spec, params);
        Ok(HomogeneousSolution {
            spec: bar,
            params: p,
            scale: params.beta.abs(),
            plugin,
            truncation: truncation.max(1),
        })
    }

    pub fn with_plugin(&self, plugin: PeriodicPlugin) -> Self {
        HomogeneousSolution { plugin, ..self.clone() }
    }

    pub fn with_truncation(&self, truncation: usize) -> Self {
        HomogeneousSolution {
            truncation: truncation.max(1),
            ..self.clone()
        }
    }

    pub fn sign_beta(&self) -> f64 {
        self.params.beta
    }

    /// The original step β.
    pub fn beta(&self) -> f64 {
        self.params.beta * self.scale
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn params(&self) -> EquationParams {
        EquationParams { beta: self.beta(), ..self.params }
    }

    pub fn barred_spec(&self) -> &OmegaSpec {
        &self.spec
    }

    pub fn plugin(&self) -> &PeriodicPlugin {
        &self.plugin
    }

    pub fn lead(&self, sigma: C64) -> C64 {
        self.params.lead(sigma)
    }

    fn y(&self, z: C64) -> C64 {
        z / self.scale
    }

    pub fn region(&self, z: C64, d0: f64) -> RegionReport {
        region_unit(&self.spec, self.params.beta, self.y(z), d0, self.truncation, TOL_REGION)
    }

    fn require_region(&self, y: C64) -> Result<()> {
        let r = region_unit(&self.spec, self.params.beta, y, 0.5, self.truncation, TOL_REGION);
        if let Some(v) = r.violated_clauses.iter().find(|v| v.clause.starts_with("pole:")) {
            return Err(FdeError::RegionViolation(format!(
                "z = {} hits {} (index {}, level {}, m = {})",
                y * self.scale,
                v.clause,
                v.index,
                v.level,
                v.m
            )));
        }
        Ok(())
    }

    /// ln of δ̄₀·s^{M₁+M₂−M₃−M₄}/c, principal branch.
    pub fn log_power_base(&self, sigma: C64) -> Result<C64> {
        let c = self.lead(sigma);
        if c.norm() == 0.0 {
            return Err(FdeError::DegenerateCoefficients(format!("a1 sigma + a2 sigma^nu vanishes at sigma = {sigma}")));
        }
        let base = self.spec.delta0 * self.params.beta.powi(self.spec.finite_degree()) / c;
        if base.norm() == 0.0 {
            return Err(FdeError::ZeroBase);
        }
        Ok(base.ln())
    }

    pub fn log_exp_prefactor(&self, y: C64) -> C64 {
        let s = self.params.beta;
        let (a, b) = (self.spec.a, self.spec.b);
        a * y * y * y / (3.0 * s) + (b - a * s) / (2.0 * s) * y * y + (a * s - 3.0 * b) / 6.0 * y
    }

    /// ln of the finite Gamma ratio.
    pub fn log_gamma_ratio(&self, y: C64) -> Result<C64> {
        let s = self.params.beta;
        let d = &self.spec.deltas;
        let mut acc = C64::new(0.0, 0.0);
        for x in &d.d2 {
            acc += log_gamma((x + y) / s)?;
        }
        for x in &d.d3 {
            acc += log_gamma((x - y) / s + 1.0)?;
        }
        for x in &d.d4 {
            acc -= log_gamma((x + y) / s)?;
        }
        for x in &d.d1 {
            acc -= log_gamma((x - y) / s + 1.0)?;
        }
        Ok(acc)
    }

    /// ln of the n-th regularized factor of the infinite product, power factor and
    /// correction exponent folded in.
    pub fn log_product_factor(&self, y: C64, n: usize) -> Result<C64> {
        let mut acc = C64::new(0.0, 0.0);
        let one = C64::new(1.0, 0.0);
        let up = self.params.beta > 0.0;
        for f in &self.spec.families {
            for i in 1..=f.count {
                let x = f.term(i, n);
                acc += match (f.kind, up) {
                    (FamilyKind::Gamma, true) => g_term(x, y)?,
                    (FamilyKind::Zeta, true) => g_term(x, one - y)?,
                    (FamilyKind::Eta, true) => -g_term(x, y)?,
                    (FamilyKind::H, true) => -g_term(x, one - y)?,
                    (FamilyKind::H, false) => g_term(x, -y)?,
                    (FamilyKind::Eta, false) => g_term(x, one + y)?,
                    (FamilyKind::Zeta, false) => -g_term(x, -y)?,
                    (FamilyKind::Gamma, false) => -g_term(x, one + y)?,
                };
            }
        }
        Ok(acc)
    }

    /// The same factor written literally: Gamma ratio, power of the sequence
    /// ratio and e^{ℛ(n)}. Loses accuracy for large sequence values.
    pub fn log_product_factor_literal(&self, y: C64, n: usize) -> Result<C64> {
        let s = self.params.beta;
        let mut lg = C64::new(0.0, 0.0);
        let mut ratio = C64::new(0.0, 0.0);
        for f in &self.spec.families {
            for i in 1..=f.count {
                let x = f.term(i, n);
                let (g, r) = if s > 0.0 {
                    match f.kind {
                        FamilyKind::Gamma => (log_gamma(x + y)?, -x.ln()),
                        FamilyKind::Zeta => (log_gamma(x - y + 1.0)?, x.ln()),
                        FamilyKind::Eta => (-log_gamma(x + y)?, x.ln()),
                        FamilyKind::H => (-log_gamma(x - y + 1.0)?, -x.ln()),
                    }
                } else {
                    match f.kind {
                        FamilyKind::H => (log_gamma(x - y)?, -x.ln()),
                        FamilyKind::Eta => (log_gamma(x + y + 1.0)?, x.ln()),
                        FamilyKind::Zeta => (-log_gamma(x - y)?, x.ln()),
                        FamilyKind::Gamma => (-log_gamma(x + y + 1.0)?, -x.ln()),
                    }
                };
                lg += g;
                ratio += r;
            }
        }
        Ok(lg + (y / s - 0.5) * ratio + self.correction_exponent(n))
    }

    /// ℛ(n) in the rescaled variable.
    pub fn correction_exponent(&self, n: usize) -> C64 {
        let [m5, m6, m7, m8] = self.spec.family_counts().map(|m| m as f64);
        let mut acc = C64::new(-HALF_LN_2PI * (m6 - m5 + m7 - m8), 0.0);
        for f in &self.spec.families {
            for i in 1..=f.count {
                let x = f.term(i, n);
                acc += match f.kind {
                    FamilyKind::Gamma | FamilyKind::Zeta => -x_ln_x(x),
                    FamilyKind::H | FamilyKind::Eta => x_ln_x(x),
                };
            }
        }
        self.params.beta * acc
    }

    /// ln of the truncated regularized product at y.
    pub fn log_product(&self, y: C64) -> Result<C64> {
        if !self.spec.has_product() {
            return Ok(C64::new(0.0, 0.0));
        }
        let mut acc = C64::new(0.0, 0.0);
        for n in 1..=self.truncation {
            acc += self.log_product_factor(y, n)?;
        }
        Ok(acc)
    }

    /// Estimated |ln 𝕃₁ − ln 𝕃₁,N| at z from the summability tails.
    pub fn product_tail_bound(&self, z: C64) -> f64 {
        if !self.spec.has_product() {
            return 0.0;
        }
        let y = self.y(z);
        match summability_tails(&self.spec, self.truncation) {
            Some((t1, t2)) => {
                let w = y.norm() + 1.0;
                0.5 * (y * y - y + 1.0 / 6.0).norm() * t1 + w * w * w / 3.0 * t2
            }
            None => f64::INFINITY,
        }
    }

    /// Smallest power-of-two multiple of 1000 whose product tail estimate at z is below tol.
    pub fn required_truncation(&self, z: C64, tol: f64) -> Result<usize> {
        let mut n = 1000;
        loop {
            let t = self.with_truncation(n).product_tail_bound(z);
            if t < tol {
                return Ok(n);
            }
            if n >= 1 << 24 {
                return Err(FdeError::TruncationTooSmall { estimate: t, requested: tol });
            }
            n *= 2;
        }
    }

    /// ln 𝕃(z) = ln of Gamma ratio plus the regularized product.
    pub fn log_l(&self, z: C64) -> Result<C64> {
        let y = self.y(z);
        Ok(self.log_gamma_ratio(y)? + self.log_product(y)?)
    }

    /// ln Y_h without the power factor (exponential prefactor, plug-in and 𝕃).
    pub fn log_evaluate_unpowered(&self, z: C64) -> Result<C64> {
        let y = self.y(z);
        self.require_region(y)?;
        Ok(self.log_exp_prefactor(y) + self.plugin.log_eval(y / self.params.beta) + self.log_gamma_ratio(y)? + self.log_product(y)?)
    }

    pub fn log_evaluate(&self, z: C64, sigma: C64) -> Result<C64> {
        let y = self.y(z);
        let w = y / self.params.beta - 0.5;
        Ok(w * self.log_power_base(sigma)? + self.log_evaluate_unpowered(z)?)
    }

    pub fn evaluate(&self, z: C64, sigma: C64) -> Result<C64> {
        Ok(self.log_evaluate(z, sigma)?.exp())
    }

    /// ln Ω(z) with the infinite part truncated at the same depth as the solution.
    pub fn log_omega(&self, z: C64) -> Result<C64> {
        let y = self.y(z);
        Ok(log_omega_finite(&self.spec, y)? + log_omega1(&self.spec, y, self.truncation)?)
    }

    /// |c·Y(z+β) − Ω_N(z)·Y(z)| / (1 + |Ω_N(z)·Y(z)|).
    pub fn residual(&self, z: C64, sigma: C64) -> Result<f64> {
        let lhs = self.lead(sigma).ln() + self.log_evaluate(z + self.beta(), sigma)?;
        let rhs = self.log_omega(z)? + self.log_evaluate(z, sigma)?;
        Ok(log_space_residual(lhs, rhs))
    }

    /// Φ(z) = ln 𝕃(z) − (z/β − ½)·ln[Ω(z)δ₀⁻¹e^{−Az²−Bz}], using continuous logarithms.
    pub fn asymptotic_phi(&self, z: C64) -> Result<C64> {
        let y = self.y(z);
        self.require_region(y)?;
        let d = &self.spec.deltas;
        let mut lo = C64::new(0.0, 0.0);
        for x in &d.d1 {
            lo += (x - y).ln();
        }
        for x in &d.d2 {
            lo += (x + y).ln();
        }
        for x in &d.d3 {
            lo -= (x - y).ln();
        }
        for x in &d.d4 {
            lo -= (x + y).ln();
        }
        lo += log_omega1(&self.spec, y, self.truncation)?;
        Ok(self.log_gamma_ratio(y)? + self.log_product(y)? - (y / self.params.beta - 0.5) * lo)
    }

    /// |Φ(z)| / (|z|² ln|z|) along Re z = re_z at the given imaginary parts.
    pub fn asymptotic_ratio(&self, re_z: f64, im_grid: &[f64]) -> Result<Vec<f64>> {
        im_grid
            .par_iter()
            .map(|&t| {
                let z = C64::new(re_z, t);
                let r = z.norm();
                Ok(self.asymptotic_phi(z)?.norm() / (r * r * r.ln()))
            })
            .collect()
    }
}

/// |e^{lhs} − e^{rhs}| / (1 + |e^{rhs}|) without forming large exponentials.
pub fn log_space_residual(lhs: C64, rhs: C64) -> f64 {
    let rel = ((lhs - rhs).exp() - 1.0).norm();
    // |e^{rhs}| / (1 + |e^{rhs}|)
    let weight = 1.0 / (1.0 + (-rhs.re).exp());
    rel * weight
}

/// Product solution of the k-dimensional equation with shift vector (β₁, …, β_k).
#[derive(Debug, Clone)]
pub struct MultiSolution {
    components: Vec<HomogeneousSolution>,
    delta0: C64,
}

/// Combine component solutions; the components' own δ₀ are replaced by the single `delta0`.
pub fn compose_multidimensional(solutions: Vec<HomogeneousSolution>, delta0: C64) -> Result<MultiSolution> {
    let first = solutions
        .first()
        .ok_or_else(|| FdeError::IncompatibleParams("no components".into()))?
        .params;
    for s in &solutions {
        let p = s.params;
        if p.a1 != first.a1 || p.a2 != first.a2 || p.nu != first.nu {
            return Err(FdeError::IncompatibleParams(format!(
                "components disagree on (a1, a2, nu): {:?} vs {:?}",
                (first.a1, first.a2, first.nu),
                (p.a1, p.a2, p.nu)
            )));
        }
    }
    Ok(MultiSolution { components: solutions, delta0 })
}

impl MultiSolution {
    pub fn dimension(&self) -> usize {
        self.components.len()
    }

    pub fn shifts(&self) -> Vec<f64> {
        self.components.iter().map(|c| c.beta()).collect()
    }

    fn check_dim(&self, z: &[C64]) -> Result<()> {
        if z.len() != self.components.len() {
            return Err(FdeError::IncompatibleParams(format!(
                "point has {} coordinates, solution has {}",
                z.len(),
                self.components.len()
            )));
        }
        Ok(())
    }

    pub fn log_evaluate(&self, z: &[C64], sigma: C64) -> Result<C64> {
        self.check_dim(z)?;
        let c = self.components[0].lead(sigma);
        let mut base = self.delta0 / c;
        for comp in &self.components {
            base *= comp.beta().powi(comp.spec.finite_degree());
        }
        if base.norm() == 0.0 {
            return Err(FdeError::ZeroBase);
        }
        let lead = &self.components[0];
        let mut acc = (z[0] / lead.beta() - 0.5) * base.ln();
        for (comp, &zj) in self.components.iter().zip(z) {
            acc += comp.log_evaluate_unpowered(zj)?;
        }
        Ok(acc)
    }

    pub fn evaluate(&self, z: &[C64], sigma: C64) -> Result<C64> {
        Ok(self.log_evaluate(z, sigma)?.exp())
    }

    /// ln S(z) = ln δ₀ + Σ_j ln[Ω_j(z_j)/δ₀_j], truncated like the components.
    pub fn log_coefficient(&self, z: &[C64]) -> Result<C64> {
        self.check_dim(z)?;
        let mut acc = self.delta0.ln();
        for (comp, &zj) in self.components.iter().zip(z) {
            let own_delta0 = comp.spec.delta0 / comp.scale.powi(comp.spec.finite_degree());
            acc += comp.log_omega(zj)? - own_delta0.ln();
        }
        Ok(acc)
    }

    pub fn residual(&self, z: &[C64], sigma: C64) -> Result<f64> {
        let shifted: Vec<C64> = z.iter().zip(self.shifts()).map(|(zj, b)| zj + b).collect();
        let c = self.components[0].lead(sigma);
        let lhs = c.ln() + self.log_evaluate(&shifted, sigma)?;
        let rhs = self.log_coefficient(z)? + self.log_evaluate(z, sigma)?;
        Ok(log_space_residual(lhs, rhs))
    }
}

/// Closed forms of x³Σ_{j≥1} x^j/(j+3) and x³Σ_{j≥1} (−1)^j x^j/(j+3).
fn cubic_tail_plus(x: C64) -> C64 {
    if x.norm() < 0.5 {
        series_tail(x)
    } else {
        -ln1p(-x) - x - x * x / 2.0 - x * x * x / 3.0
    }
}

fn cubic_tail_minus(x: C64) -> C64 {
    if x.norm() < 0.5 {
        -series_tail(-x)
    } else {
        ln1p(x) - x + x * x / 2.0 - x * x * x / 3.0
    }
}

fn series_tail(x: C64) -> C64 {
    let mut p = x * x * x * x;
    let mut acc = C64::new(0.0, 0.0);
    for k in 4..80 {
        let t = p / k as f64;
        acc += t;
        if t.norm() < 1e-18 * acc.norm() {
            break;
        }
        p *= x;
    }
    acc
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AppendixSums {
    pub z: C64,
    /// First index 𝔑 of the sums.
    pub start: usize,
    /// Last index summed.
    pub depth: usize,
    /// Values of the four estimated quantities.
    pub sums: [f64; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub reference: AppendixSums,
    /// Constants fitted at the reference point, one per envelope.
    pub constants: [f64; 4],
    pub probes: Vec<AppendixSums>,
    /// sum / (C·envelope) per probe; above 1.5 counts as a breach.
    pub envelope_ratios: Vec<[f64; 4]>,
    /// (probe index, estimate index) pairs that breached.
    pub breaches: Vec<(usize, usize)>,
}

pub const ENVELOPE_SLACK: f64 = 1.5;

fn envelopes(z: C64) -> [f64; 4] {
    let r = z.norm();
    let l = r.ln();
    [1.0 + l, 1.0, 1.0 + r * r + r * r * l, 1.0 + r]
}

/// The four sums over n ≥ 𝔑 for the increasing sequence 𝔟(n) = Re term(1, n).
pub fn appendix_sums(seq: &SequenceFamily, c_star: f64, z: C64) -> Result<AppendixSums> {
    if z.norm() < 2.0 {
        return Err(FdeError::OutOfRange(format!("|z| = {} must be at least 2", z.norm())));
    }
    let b = |n: usize| seq.term(1, n).re;
    let z1 = z.re.abs();
    let mut start = 1;
    while !(b(start) > 4.0 * z1 && b(start) + 2.0 * c_star > 4.0 * z1 && b(start) > z1 && b(start) + c_star > z1) {
        start += 1;
        if start > 1 << 24 {
            return Err(FdeError::SummabilityFailure("no admissible starting index".into()));
        }
    }
    if power_tail(b(512).powi(-2), b(1024).powi(-2), 1024).is_none() {
        return Err(FdeError::SummabilityFailure("sum of 1/b(n)^2 diverges".into()));
    }

    let terms = |n: usize| -> ([f64; 3], [C64; 4]) {
        let bn = b(n);
        let c = c_star;
        let t1 = (z / (bn * (bn + z))).norm() + (z / (bn * (bn - z))).norm();
        let t2 = (z / ((bn + z + c) * (bn + z))).norm()
            + (z / ((bn - z + c) * (bn - z))).norm()
            + (z / ((bn - z + c) * (bn + z))).norm();
        let p = bn * cubic_tail_plus(z / (bn + z));
        let q = bn * cubic_tail_minus(z / (bn - z));
        let pc = (bn + c) * cubic_tail_plus(z / (bn + c + z));
        let qc = (bn + c) * cubic_tail_minus(z / (bn + c - z));
        ([t1, t2, p.norm() + q.norm()], [p, pc, q, qc])
    };

    let mut abs = [0.0f64; 3];
    let mut signed = [C64::new(0.0, 0.0); 4];
    let mut n = start;
    let mut target = start + 1024;
    let (sums, depth) = loop {
        while n <= target {
            let (a, s) = terms(n);
            for k in 0..3 {
                abs[k] += a[k];
            }
            for k in 0..4 {
                signed[k] += s[k];
            }
            n += 1;
        }
        let mag = |m: usize| {
            let (a, s) = terms(m);
            [a[0], a[1], a[2], (s[0] - s[1]).norm() + (s[2] - s[3]).norm()]
        };
        let half = start + (target - start) / 2;
        let (mh, mt) = (mag(half), mag(target));
        // power-law decay fitted between `half` and `target`
        let power_tail = |th: f64, tt: f64, _: usize| -> Option<(f64, f64)> {
            if tt == 0.0 {
                return Some((0.0, f64::INFINITY));
            }
            let p = (th / tt).ln() / (target as f64 / half as f64).ln();
            (p > 1.02).then(|| (tt * target as f64 / (p - 1.0), p))
        };
        let iv = (signed[0] - signed[1]).norm() + (signed[2] - signed[3]).norm();
        let totals = [abs[0], abs[1], abs[2], iv];
        let tails: Option<Vec<f64>> = (0..4).map(|k| power_tail(mh[k], mt[k], target - start).map(|t| t.0)).collect();
        match tails {
            Some(t) if (0..4).all(|k| t[k] < 1e-12 * (1.0 + totals[k])) => {
                break (totals, target);
            }
            // slowly decaying terms: add the extrapolated tail
            Some(t) if target >= 1 << 20 => {
                break ([0, 1, 2, 3].map(|k| totals[k] + t[k]), target);
            }
            _ if target >= 1 << 22 => {
                return Err(FdeError::SummabilityFailure(format!("sums not settled after {target} terms")));
            }
            _ => target *= 2,
        }
    };
    Ok(AppendixSums { z, start, depth, sums })
}

/// Fit the envelope constants at `reference` and test them at `probes`.
pub fn appendix_bounds(seq: &SequenceFamily, c_star: f64, reference: C64, probes: &[C64]) -> Result<BoundReport> {
    let r = appendix_sums(seq, c_star, reference)?;
    let e = envelopes(reference);
    let constants = [0, 1, 2, 3].map(|k| r.sums[k] / e[k]);
    let mut out = Vec::new();
    let mut ratios = Vec::new();
    let mut breaches = Vec::new();
    for (j, &z) in probes.iter().enumerate() {
        let p = appendix_sums(seq, c_star, z)?;
        let e = envelopes(z);
        let ratio = [0, 1, 2, 3].map(|k| {
            if constants[k] == 0.0 {
                if p.sums[k] == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            } else {
                p.sums[k] / (constants[k] * e[k])
            }
        });
        for (k, &q) in ratio.iter().enumerate() {
            if q > ENVELOPE_SLACK {
                breaches.push((j, k));
            }
        }
        out.push(p);
        ratios.push(ratio);
    }
    Ok(BoundReport {
        reference: r,
        constants,
        probes: out,
        envelope_ratios: ratios,
        breaches,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficient::catalog::*;
    use crate::coefficient::{evaluate_omega, Generator};
    use crate::specfun::gamma;
    use std::f64::consts::PI;

    fn params() -> EquationParams {
        EquationParams::unit(1.0, 0.5, 0.5)
    }

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn pure_power_solution() {
        let spec = OmegaSpec::constant(c(2.0, 1.0));
        let sol = HomogeneousSolution::build(&spec, &params(), PeriodicPlugin::unit(), 10).unwrap();
        let sigma = c(1.3, 0.4);
        let z = c(0.7, -2.0);
        let expect = (spec.delta0 / params().lead(sigma)).powc(z - 0.5);
        assert!((sol.evaluate(z, sigma).unwrap() - expect).norm() < 1e-13 * expect.norm());
        assert!(sol.residual(z, sigma).unwrap() < 1e-12);
    }

    #[test]
    fn exponential_prefactor() {
        let mut spec = OmegaSpec::constant(c(1.0, 0.0));
        spec.a = c(0.3, 0.1);
        spec.b = c(-0.2, 0.5);
        let sol = HomogeneousSolution::build(&spec, &EquationParams::unit(1.0, 0.0, 0.5), PeriodicPlugin::unit(), 10).unwrap();
        let z = c(0.4, 1.1);
        let (a, b) = (spec.a, spec.b);
        let expect = (a * z * z * z / 3.0 + (b - a) * z * z / 2.0 + (a - 3.0 * b) * z / 6.0).exp();
        assert!((sol.evaluate(z, c(1.0, 0.0)).unwrap() - expect).norm() < 1e-14 * expect.norm());
        assert!(sol.residual(z, c(1.0, 0.0)).unwrap() < 1e-13);
    }

    #[test]
    fn half_step_kills_power() {
        let spec = mixed_growth_spec();
        for beta in [1.0, 2.0, -1.5] {
            let p = EquationParams { beta, ..params() };
            let sol = HomogeneousSolution::build(&spec, &p, PeriodicPlugin::unit(), 200).unwrap();
            let z = c(beta / 2.0, 0.0);
            let y = z / beta.abs();
            let expect = sol.log_exp_prefactor(y) + sol.log_l(z).unwrap();
            let got = sol.log_evaluate(z, c(3.0, 1.0)).unwrap();
            assert!((got.exp() - expect.exp()).norm() < 1e-12 * expect.exp().norm());
        }
    }

    #[test]
    fn tangent_residual() {
        let sol = HomogeneousSolution::build(&tangent_spec(), &params(), PeriodicPlugin::unit(), 10_000).unwrap();
        let r = sol.residual(c(0.3, 0.0), c(2.0, 0.0)).unwrap();
        assert!(r < 1e-8, "{r}");
    }

    #[test]
    fn mixed_growth_residual_both_signs() {
        for beta in [1.0, -1.0, 0.6, -2.3] {
            let p = EquationParams { beta, ..params() };
            let sol = HomogeneousSolution::build(&mixed_growth_spec(), &p, PeriodicPlugin::sine_exponential(), 2000).unwrap();
            for &z in &[c(0.3, 5.0), c(-0.4, -1.7), c(1.9, 0.3)] {
                let r = sol.residual(z, c(1.0, 0.5)).unwrap();
                assert!(r < 1e-9, "beta {beta} z {z}: {r}");
            }
        }
    }

    #[test]
    fn mixed_growth_value_finite() {
        let sol = HomogeneousSolution::build(&mixed_growth_spec(), &params(), PeriodicPlugin::unit(), 10_000).unwrap();
        let v = sol.evaluate(c(0.3, 5.0), c(1.0, 0.0)).unwrap();
        assert!(v.norm().is_finite() && v.norm() > 0.0);
    }

    #[test]
    fn stable_factor_matches_literal() {
        for beta in [1.0, -1.0] {
            let p = EquationParams { beta, ..params() };
            let sol = HomogeneousSolution::build(&mixed_growth_spec(), &p, PeriodicPlugin::unit(), 10).unwrap();
            for n in [1, 2, 5, 20] {
                let y = c(0.35, 1.2);
                let a = sol.log_product_factor(y, n).unwrap();
                let b = sol.log_product_factor_literal(y, n).unwrap();
                assert!(((a - b).exp() - 1.0).norm() < 1e-10, "beta {beta} n {n}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn finite_gamma_part_for_tangent_at_small_z() {
        // only δ² = 0: 𝕃 = Γ(z)·𝕃₁
        let sol = HomogeneousSolution::build(&tangent_spec(), &params(), PeriodicPlugin::unit(), 5).unwrap();
        let z = c(0.5, 0.0);
        assert!((sol.log_gamma_ratio(z).unwrap().exp() - gamma(z).unwrap()).norm() < 1e-13);
    }

    #[test]
    fn plugin_enters_multiplicatively() {
        let base = HomogeneousSolution::build(&mixed_growth_spec(), &params(), PeriodicPlugin::unit(), 300).unwrap();
        let p = PeriodicPlugin::sine_exponential();
        let with = base.with_plugin(p.clone());
        for &z in &[c(0.3, 0.7), c(-0.2, 3.0)] {
            let q = (with.log_evaluate(z, c(1.0, 0.0)).unwrap() - base.log_evaluate(z, c(1.0, 0.0)).unwrap()).exp();
            assert!((q - p.eval(z)).norm() < 1e-12 * p.eval(z).norm());
        }
    }

    #[test]
    fn sine_plugin_is_periodic() {
        let p = PeriodicPlugin::sine_exponential();
        let probes: Vec<C64> = (0..20).map(|k| c(0.05 * k as f64 - 0.3, 0.4 * k as f64 - 4.0)).collect();
        assert!(p.periodicity_defect(&probes) < 1e-10);
    }

    #[test]
    fn product_convergence_within_tail() {
        let sol = HomogeneousSolution::build(&mixed_growth_spec(), &params(), PeriodicPlugin::unit(), 1000).unwrap();
        let z = c(0.3, 2.0);
        let a = sol.log_l(z).unwrap();
        let b = sol.with_truncation(2000).log_l(z).unwrap();
        assert!((a - b).norm() < sol.product_tail_bound(z));
        assert!(sol.with_truncation(8000).product_tail_bound(z) < sol.product_tail_bound(z));
    }

    #[test]
    fn region_examples() {
        let spec = tangent_spec();
        assert!(check_region(&spec, &params(), c(0.3, 0.0), 0.5, 100).admissible);

        let mut hit = OmegaSpec::constant(c(1.0, 0.0));
        hit.deltas.d2 = vec![c(0.25, 0.0)];
        let r = check_region(&hit, &params(), c(-0.25, 3.0), 0.5, 10);
        assert_eq!(r.violated_clauses[0].clause, "pole:delta2");

        let mut shift = OmegaSpec::constant(c(1.0, 0.0));
        shift.deltas.d1 = vec![c(0.2, 0.0)];
        let r = check_region(&shift, &params(), c(0.7, 1.0), 0.5, 10);
        assert!(!r.admissible_for("shifted:"));
        assert!(r.admissible_for("pole:"));
    }

    #[test]
    fn region_violation_reported_by_evaluate() {
        let mut spec = OmegaSpec::constant(c(1.0, 0.0));
        spec.deltas.d2 = vec![c(0.5, 0.0)];
        let sol = HomogeneousSolution::build(&spec, &params(), PeriodicPlugin::unit(), 1).unwrap();
        let e = sol.evaluate(c(-2.5, 0.1), c(1.0, 0.0));
        assert!(matches!(e, Err(FdeError::RegionViolation(_))));
    }

    #[test]
    fn family_pole_located() {
        let sol_spec = tangent_spec();
        // ζ₁ = π/2: Re(z − ζ) = 1 at z = 1 + π/2
        let r = check_region(&sol_spec, &params(), c(1.0 + PI / 2.0, 0.0), 0.5, 100);
        assert!(r.violated_clauses.iter().any(|v| v.clause == "pole:zeta" && v.level == 1 && v.m == 0));
    }

    #[test]
    fn correction_exponent_closed_form() {
        let sol = HomogeneousSolution::build(&tangent_spec(), &params(), PeriodicPlugin::unit(), 5).unwrap();
        let n = 3usize;
        let (h, z) = (PI * n as f64, (2.0 * n as f64 - 1.0) * PI / 2.0);
        let expect = -(h * (h.ln() - 1.0)) - z * (z.ln() - 1.0) + h * (h.ln() - 1.0) + z * (z.ln() - 1.0);
        assert!((sol.correction_exponent(n) - expect).norm() < 1e-12);
    }

    #[test]
    fn phi_growth_tangent() {
        let sol = HomogeneousSolution::build(&tangent_spec(), &params(), PeriodicPlugin::unit(), 4000).unwrap();
        let grid = [10.0, 30.0, 100.0, 300.0];
        let r = sol.asymptotic_ratio(0.3, &grid).unwrap();
        let cmax = r.iter().cloned().fold(0.0, f64::max);
        assert!(r.iter().all(|x| x.is_finite()));
        assert!(r[3] <= 1.5 * cmax);
    }

    #[test]
    fn phi_finite_product_fits_log_linear() {
        let mut spec = OmegaSpec::constant(c(1.3, 0.0));
        spec.deltas.d1 = vec![c(0.4, 0.0)];
        spec.deltas.d2 = vec![c(0.9, 0.0)];
        spec.deltas.d3 = vec![c(1.7, 0.0)];
        let sol = HomogeneousSolution::build(&spec, &params(), PeriodicPlugin::unit(), 1).unwrap();
        let grid = [20.0, 100.0, 1000.0];
        let r = sol.asymptotic_ratio(0.2, &grid).unwrap();
        assert!(r[2] < r[1] && r[1] < r[0]);
        assert!(r[2] < 1e-3);
    }

    #[test]
    fn appendix_examples() {
        let seq = SequenceFamily::new(FamilyKind::Gamma, 1, Generator::affine_power(2.0, 1.0, 0.0, 0.0, 0.0));
        let rep = appendix_bounds(&seq, 1.0, c(0.0, 50.0), &[c(0.0, 100.0), c(0.0, 200.0)]).unwrap();
        for r in &rep.envelope_ratios {
            assert!(r[0] <= ENVELOPE_SLACK && r[1] <= ENVELOPE_SLACK, "{r:?}");
        }
        assert!(appendix_sums(&seq, 1.0, c(1.0, 0.0)).is_err());
    }

    #[test]
    fn appendix_sum_one_against_direct() {
        let seq = SequenceFamily::new(FamilyKind::Gamma, 1, Generator::affine_power(2.0, 1.0, 0.0, 0.0, 0.0));
        let z = c(0.0, 50.0);
        let s = appendix_sums(&seq, 1.0, z).unwrap();
        let mut direct = 0.0;
        for n in s.start..2_000_000 {
            let b = (n * n) as f64;
            direct += (z / (b * (b + z))).norm() + (z / (b * (b - z))).norm();
        }
        assert!((s.sums[0] - direct).abs() < 1e-9 * direct, "{s:?} {direct}");
    }

    #[test]
    fn cubic_tails_match_series() {
        for &x in &[c(0.3, 0.1), c(-0.45, 0.2), c(0.6, 0.3), c(0.2, -0.7)] {
            let mut p = C64::new(0.0, 0.0);
            let mut q = C64::new(0.0, 0.0);
            for j in 1..400 {
                p += x.powi(j) / (j as f64 + 3.0);
                q += (-x).powi(j) / (j as f64 + 3.0);
            }
            let x3 = x * x * x;
            assert!((cubic_tail_plus(x) - x3 * p).norm() < 1e-14);
            assert!((cubic_tail_minus(x) - x3 * q).norm() < 1e-14);
        }
    }

    #[test]
    fn multidimensional_components() {
        let p = params();
        let tan = HomogeneousSolution::build(&tangent_spec(), &p, PeriodicPlugin::unit(), 3000).unwrap();
        let single = compose_multidimensional(vec![tan.clone()], tangent_spec().delta0).unwrap();
        let z = c(0.3, 0.4);
        let a = single.evaluate(&[z], c(2.0, 0.0)).unwrap();
        let b = tan.evaluate(z, c(2.0, 0.0)).unwrap();
        assert!((a - b).norm() < 1e-12 * b.norm());

        let other = HomogeneousSolution::build(&tangent_spec(), &EquationParams { beta: 0.5, ..p }, PeriodicPlugin::unit(), 3000).unwrap();
        let m = compose_multidimensional(vec![tan, other], c(1.5, 0.0)).unwrap();
        let r = m.residual(&[c(0.3, 0.2), c(0.2, -0.6)], c(1.0, 1.0)).unwrap();
        assert!(r < 1e-7, "{r}");

        let pw1 = HomogeneousSolution::build(&OmegaSpec::constant(c(2.0, 0.0)), &p, PeriodicPlugin::unit(), 1).unwrap();
        let pw2 = HomogeneousSolution::build(&OmegaSpec::constant(c(3.0, 0.0)), &EquationParams { beta: 2.0, ..p }, PeriodicPlugin::unit(), 1).unwrap();
        let m = compose_multidimensional(vec![pw1, pw2], c(0.7, 0.0)).unwrap();
        assert!(m.residual(&[c(0.1, 0.2), c(1.0, 3.0)], c(1.0, 0.0)).unwrap() < 1e-12);

        let bad = HomogeneousSolution::build(&tangent_spec(), &EquationParams::unit(2.0, 0.5, 0.5), PeriodicPlugin::unit(), 1).unwrap();
        let good = HomogeneousSolution::build(&tangent_spec(), &p, PeriodicPlugin::unit(), 1).unwrap();
        assert!(matches!(compose_multidimensional(vec![good, bad], c(1.0, 0.0)), Err(FdeError::IncompatibleParams(_))));
    }

    #[test]
    fn omega_consistency_with_coefficient_module() {
        let spec = mixed_growth_spec();
        let p = EquationParams { beta: -1.7, ..params() };
        let sol = HomogeneousSolution::build(&spec, &p, PeriodicPlugin::unit(), 500).unwrap();
        let z = c(0.6, 1.4);
        let a = sol.log_omega(z).unwrap().exp();
        let b = evaluate_omega(&spec, z, 500).unwrap().value;
        assert!((a - b).norm() < 1e-10 * b.norm());
    }
}
