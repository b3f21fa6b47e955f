//! Particular solution of the inhomogeneous equation as a contour integral
//!
//! Y_ih(z) = Y_h(z)/𝒦₁(0) · ∫_ℓ F(z+βξ)𝒦(ξ) / (c·Y_h(z+βξ+β)) dξ,
//! 𝒦(ξ) = (1/2i)(cot πξ + i)𝒦₁(ξ),
//!
//! over the vertical contour ℓ_{d₀}.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::coefficient::{Clause, ValidationReport};
use crate::error::{FdeError, Result};
use crate::homogeneous::HomogeneousSolution;
use crate::specfun::{ln1p, ln_sin_pi, C64};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct ContourSpec {
    pub d0: f64,
    /// Radius of the half-circle detour used when d₀ ∈ {0, 1}.
    pub d1: f64,
    pub half_height: f64,
    pub nodes_per_unit: usize,
}

impl Default for ContourSpec {
    fn default() -> Self {
        ContourSpec {
            d0: 0.5,
            d1: 0.05,
            half_height: 40.0,
            nodes_per_unit: 40,
        }
    }
}

impl ContourSpec {
    pub fn line(d0: f64) -> Self {
        ContourSpec { d0, ..Default::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuadraturePath {
    pub nodes: Vec<C64>,
    /// Weights already include dξ.
    pub weights: Vec<C64>,
    /// Index ranges of the pieces, in traversal order.
    pub pieces: Vec<(usize, usize)>,
}

impl QuadraturePath {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(C64) -> C64) -> C64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// Gauss–Legendre nodes and weights on [−1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut t = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, t);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * t * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 1 { t } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (t * p - pm) / (t * t - 1.0);
            let dt = p / dp;
            t -= dt;
            if dt.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -t;
        x[n - 1 - i] = t;
        w[i] = 2.0 / ((1.0 - t * t) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

const GL_ORDER: usize = 8;

fn gl_segment(nodes: &mut Vec<C64>, weights: &mut Vec<C64>, a: C64, b: C64, gl: &(Vec<f64>, Vec<f64>)) {
    let mid = (a + b) / 2.0;
    let half = (b - a) / 2.0;
    for (t, w) in gl.0.iter().zip(&gl.1) {
        nodes.push(mid + half * *t);
        weights.push(half * *w);
    }
}

/// Panel breakpoints on [lo, hi] graded geometrically away from `lo`.
fn graded_breaks(lo: f64, hi: f64, first: f64, max_len: f64) -> Vec<f64> {
    let mut b = vec![lo];
    let mut len = first;
    let mut x = lo;
    while x < hi {
        let step = len.min(max_len).min(hi - x);
        x += step;
        if hi - x < 1e-12 {
            x = hi;
        }
        b.push(x);
        len *= 2.0;
    }
    b
}

pub fn build_contour(spec: &ContourSpec) -> Result<QuadraturePath> {
    let ContourSpec {
        d0,
        d1,
        half_height: t,
        nodes_per_unit: npu,
    } = *spec;
    if !(0.0..=1.0).contains(&d0) {
        return Err(FdeError::BadContour(format!("d0 = {d0} outside [0, 1]")));
    }
    if t < 10.0 {
        return Err(FdeError::BadContour(format!("half height {t} below 10")));
    }
    if npu == 0 {
        return Err(FdeError::BadContour("nodes_per_unit must be positive".into()));
    }
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    let mut pieces = Vec::new();
    if d0 > 0.0 && d0 < 1.0 {
        let h = 1.0 / npu as f64;
        let k = (t * npu as f64).ceil() as i64;
        for j in -k..=k {
            nodes.push(C64::new(-d0, j as f64 * h));
            weights.push(C64::new(0.0, h));
        }
        pieces.push((0, nodes.len()));
        return Ok(QuadraturePath { nodes, weights, pieces });
    }
    if !(d1 > 0.0 && d1 < 0.125) {
        return Err(FdeError::BadContour(format!("detour radius {d1} outside (0, 1/8)")));
    }
    let re = if d0 == 1.0 { -1.0 } else { 0.0 };
    let gl = gauss_legendre(GL_ORDER);
    let panel = GL_ORDER as f64 / npu as f64;
    let breaks = graded_breaks(d1, t, d1, panel);

    let start = nodes.len();
    for w in breaks.windows(2).rev() {
        gl_segment(&mut nodes, &mut weights, C64::new(re, -w[1]), C64::new(re, -w[0]), &gl);
    }
    pieces.push((start, nodes.len()));

    let start = nodes.len();
    let arcs = 4;
    for k in 0..arcs {
        let p0 = -PI / 2.0 + PI * k as f64 / arcs as f64;
        let p1 = p0 + PI / arcs as f64;
        let (mid, half) = ((p0 + p1) / 2.0, (p1 - p0) / 2.0);
        for (s, w) in gl.0.iter().zip(&gl.1) {
            let phi = mid + half * s;
            let e = C64::from_polar(d1, phi);
            nodes.push(C64::new(re, 0.0) + e);
            weights.push(C64::new(0.0, 1.0) * e * half * *w);
        }
    }
    pieces.push((start, nodes.len()));

    let start = nodes.len();
    for w in breaks.windows(2) {
        gl_segment(&mut nodes, &mut weights, C64::new(re, w[0]), C64::new(re, w[1]), &gl);
    }
    pieces.push((start, nodes.len()));
    Ok(QuadraturePath { nodes, weights, pieces })
}

/// The periodic factor 𝒦₁ of the kernel, through its logarithm.
#[derive(Clone)]
pub struct KernelSpec {
    pub label: String,
    log_k1: Arc<dyn Fn(C64) -> C64 + Send + Sync>,
}

impl std::fmt::Debug for KernelSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("KernelSpec").field("label", &self.label).finish()
    }
}

impl KernelSpec {
    pub fn from_log_fn(label: impl Into<String>, f: impl Fn(C64) -> C64 + Send + Sync + 'static) -> Self {
        KernelSpec {
            label: label.into(),
            log_k1: Arc::new(f),
        }
    }

    pub fn unit() -> Self {
        Self::from_log_fn("1", |_| C64::new(0.0, 0.0))
    }

    /// sin^k(πd) / sin^k(π(ξ+d)).
    /// Default shift d for a contour at d₀: d₀ + ½, moved to d₀ + 0.4 when that is an
    /// integer (sin πd = 0 makes the sine-power kernel degenerate).
    pub fn default_shift(d0: f64) -> f64 {
        let d = d0 + 0.5;
        if (d - d.round()).abs() < 1e-9 {
            d0 + 0.4
        } else {
            d
        }
    }

    pub fn sine_power(d: f64, k: u32) -> Self {
        let top = (PI * d).sin().ln();
        Self::from_log_fn(format!("sin^{k}(pi {d}) / sin^{k}(pi (xi + {d}))"), move |x| {
            k as f64 * (top - ln_sin_pi(x + d))
        })
    }

    pub fn log_k1(&self, xi: C64) -> C64 {
        (self.log_k1)(xi)
    }

    pub fn k1(&self, xi: C64) -> C64 {
        self.log_k1(xi).exp()
    }

    /// ln 𝒦(ξ) with 𝒦 = 𝒦₁·q/(q−1), q = e^{2πiξ}.
    pub fn log_kernel(&self, xi: C64) -> C64 {
        log_cot_factor(xi) + self.log_k1(xi)
    }

    pub fn kernel(&self, xi: C64) -> C64 {
        self.log_kernel(xi).exp()
    }
}

/// ln[(cot πξ + i)/(2i)] = ln[q/(q−1)], q = e^{2πiξ}, stable off the real axis.
pub fn log_cot_factor(xi: C64) -> C64 {
    let two_pi_i = C64::new(0.0, 2.0 * PI);
    if xi.im > 0.0 {
        let q = (two_pi_i * xi).exp();
        two_pi_i * xi - (q - 1.0).ln()
    } else {
        let qi = (-two_pi_i * xi).exp();
        -ln1p(-qi)
    }
}

/// Decay of |g(x+it)| between |t| = 5 and |t| = 10, per unit height.
fn decay_rate(g: &dyn Fn(C64) -> f64, x: f64, sign: f64) -> f64 {
    let a = g(C64::new(x, 5.0 * sign));
    let b = g(C64::new(x, 10.0 * sign));
    (a / b).ln() / 5.0
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelReport {
    pub report: ValidationReport,
    /// Decay rates of |𝒦₁| and |𝒦| as Im ξ → +∞ and −∞ (minimum over Re ξ ∈ [−1, 0]).
    pub k1_decay: (f64, f64),
    pub kernel_decay: (f64, f64),
    /// Points of the closed strip Re ξ ∈ [−1, 0] where 𝒦₁ blew up.
    pub poles: Vec<C64>,
}

pub const POLE_THRESHOLD: f64 = 1e8;

/// Probe the kernel conditions: periodicity, pole freedom on the closed strip,
/// 𝒦₁(0) ≠ 0 and decay in both vertical directions.
pub fn validate_kernel(k: &KernelSpec) -> KernelReport {
    let mut rep = ValidationReport::default();

    let grid: Vec<C64> = (0..=20)
        .flat_map(|i| (0..=16).map(move |j| C64::new(-1.0 + 0.05 * i as f64 + 0.013, -2.0 + 0.25 * j as f64 + 0.007)))
        .collect();
    let defect = grid
        .iter()
        .map(|&x| {
            let a = k.k1(x);
            (k.k1(x + 1.0) - a).norm() / (1.0 + a.norm())
        })
        .fold(0.0, f64::max);
    rep.push(Clause::new("kernel.periodic", defect < 1e-10, format!("max relative defect {defect:.2e}")));

    // pole scan: local maxima of |𝒦₁| on a fine grid along the real direction, refined
    let k0 = k.k1(C64::new(0.0, 0.0));
    let scale = 1.0f64.max(k0.norm());
    let mut poles = Vec::new();
    let steps = 2000;
    for im in [0.0, 0.3, -0.3] {
        for i in 0..=steps {
            let x = C64::new(-1.0 + i as f64 / steps as f64, im);
            let v = k.log_k1(x).re;
            if !v.is_finite() || v > (POLE_THRESHOLD * scale).ln() {
                poles.push(x);
            }
        }
    }
    poles.dedup_by(|a, b| (*a - *b).norm() < 0.02);
    rep.push(Clause::new(
        "kernel.pole_free",
        poles.is_empty(),
        if poles.is_empty() {
            "no blow-up on the closed strip".to_string()
        } else {
            format!("|K1| exceeds {POLE_THRESHOLD:e} near {:?}", poles.iter().map(|p| p.re).collect::<Vec<_>>())
        },
    ));

    rep.push(Clause::new("kernel.nonzero_at_origin", k0.norm() > 1e-14 && k0.norm().is_finite(), format!("K1(0) = {k0}")));

    let k1_abs = |x: C64| k.log_k1(x).re.exp();
    let kern_abs = |x: C64| k.log_kernel(x).re.exp();
    let xs = [-1.0, -0.75, -0.5, -0.25, 0.0].map(|x| x + 1e-3);
    let min_rate = |g: &dyn Fn(C64) -> f64, sign: f64| xs.iter().map(|&x| decay_rate(g, x, sign)).fold(f64::INFINITY, f64::min);
    let k1_decay = (min_rate(&k1_abs, 1.0), min_rate(&k1_abs, -1.0));
    let kernel_decay = (min_rate(&kern_abs, 1.0), min_rate(&kern_abs, -1.0));
    rep.push(Clause::new(
        "kernel.decay",
        k1_decay.0 > 0.1 && k1_decay.1 > 0.1,
        format!("|K1| decay rates {:.3} (up), {:.3} (down)", k1_decay.0, k1_decay.1),
    ));
    KernelReport {
        report: rep,
        k1_decay,
        kernel_decay,
        poles,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum DecayClass {
    Bounded,
    /// |F| ≲ e^{−rate·|Im z|}·(polynomial) or faster.
    ExpDecay(f64),
}

/// Right-hand side F(z, σ), through its logarithm.
#[derive(Clone)]
pub struct ForcingSpec {
    pub label: String,
    log_f: Option<Arc<dyn Fn(C64, C64) -> C64 + Send + Sync>>,
    pub decay: DecayClass,
    /// Strip z₀−1 < Re(z/β) < z₀+d₀ of analyticity; None means entire.
    pub analytic_strip: Option<(f64, f64)>,
}

impl std::fmt::Debug for ForcingSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ForcingSpec").field("label", &self.label).field("decay", &self.decay).finish()
    }
}

impl ForcingSpec {
    pub fn from_log_fn(label: impl Into<String>, decay: DecayClass, f: impl Fn(C64, C64) -> C64 + Send + Sync + 'static) -> Self {
        ForcingSpec {
            label: label.into(),
            log_f: Some(Arc::new(f)),
            decay,
            analytic_strip: None,
        }
    }

    pub fn zero() -> Self {
        ForcingSpec {
            label: "0".into(),
            log_f: None,
            decay: DecayClass::Bounded,
            analytic_strip: None,
        }
    }

    /// σ·sin πz.
    pub fn sigma_sine() -> Self {
        Self::from_log_fn("sigma sin(pi z)", DecayClass::Bounded, |z, s| s.ln() + ln_sin_pi(z))
    }

    /// exp(c·z²): entire, with Gaussian decay e^{−c(Im z)²} along every vertical line.
    pub fn gaussian(c: f64) -> Self {
        Self::from_log_fn(format!("exp({c} z^2)"), DecayClass::ExpDecay(f64::INFINITY), move |z, _| c * z * z)
    }

    pub fn is_zero(&self) -> bool {
        self.log_f.is_none()
    }

    pub fn log_eval(&self, z: C64, sigma: C64) -> Option<C64> {
        self.log_f.as_ref().map(|f| f(z, sigma))
    }

    pub fn eval(&self, z: C64, sigma: C64) -> C64 {
        self.log_eval(z, sigma).map_or(C64::new(0.0, 0.0), |l| l.exp())
    }

    /// Measured growth rate of ln|F| per unit |Im z| between heights 5 and 10 (negative = decay).
    pub fn measured_growth(&self, re_z: f64, sigma: C64) -> Option<f64> {
        let f = self.log_f.as_ref()?;
        let r = |t: f64| f(C64::new(re_z, t), sigma).re;
        let up = (r(10.0) - r(5.0)) / 5.0;
        let down = (r(-10.0) - r(-5.0)) / 5.0;
        Some(up.max(down))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParticularValue {
    pub value: C64,
    /// Estimated magnitude of the discarded quadrature tail.
    pub tail_estimate: f64,
    pub nodes_used: usize,
    /// Largest |Im ξ| reached.
    pub height_reached: f64,
}

/// Below this fraction of the running sum an outer chunk stops the march.
const TAIL_STOP: f64 = 1e-17;
const CHUNK: usize = 64;
/// Tail estimates above this fraction of the integral count as a decay failure.
pub const TAIL_TOL: f64 = 1e-3;
const ROUNDING_FLOOR: f64 = 16.0 * f64::EPSILON;

fn log_sum_exp(ls: &[C64]) -> (f64, C64) {
    let m = ls.iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return (0.0, C64::new(0.0, 0.0));
    }
    (m, ls.iter().map(|l| (l - m).exp()).sum())
}

/// Integral ∫_ℓ F(z+βξ)𝒦(ξ)/(c·Y_h(z+βξ+β)) dξ in log-scaled form (scale, mantissa),
/// marching outward in |Im ξ| until the terms are negligible.
fn contour_integral(
    sol: &HomogeneousSolution,
    forcing: &ForcingSpec,
    kernel: &KernelSpec,
    path: &QuadraturePath,
    z: C64,
    sigma: C64,
) -> Result<(f64, C64, f64, f64, usize, f64)> {
    let beta = sol.beta();
    let ln_c = sol.lead(sigma).ln();
    let mut order: Vec<usize> = (0..path.len()).collect();
    order.sort_by(|&a, &b| path.nodes[a].im.abs().total_cmp(&path.nodes[b].im.abs()).then(a.cmp(&b)));

    let term = |k: usize| -> Result<C64> {
        let xi = path.nodes[k];
        let lf = forcing.log_eval(z + beta * xi, sigma).expect("nonzero forcing");
        let ly = sol.log_evaluate(z + beta * xi + beta, sigma)?;
        Ok(path.weights[k].ln() + lf + kernel.log_kernel(xi) - ln_c - ly)
    };

    let mut logs: Vec<(usize, C64)> = Vec::with_capacity(path.len());
    let mut prev_chunk_max = f64::INFINITY;
    let mut tail = f64::INFINITY;
    let mut height = 0.0;
    for chunk in order.chunks(CHUNK) {
        let vals: Vec<Result<C64>> = chunk.par_iter().map(|&k| term(k)).collect();
        let mut chunk_max = f64::NEG_INFINITY;
        for (&k, v) in chunk.iter().zip(vals) {
            let v = v?;
            chunk_max = chunk_max.max(v.re);
            logs.push((k, v));
        }
        height = path.nodes[*chunk.last().unwrap()].im.abs();
        let (m, s) = log_sum_exp(&logs.iter().map(|x| x.1).collect::<Vec<_>>());
        let running = m + s.norm().ln();
        let rel = (chunk_max - running).exp() * chunk.len() as f64;
        tail = rel;
        if height > 2.0 && rel < TAIL_STOP && chunk_max < prev_chunk_max {
            break;
        }
        prev_chunk_max = chunk_max;
    }
    // path order for a deterministic reduction
    logs.sort_by_key(|x| x.0);
    let (m, s) = log_sum_exp(&logs.iter().map(|x| x.1).collect::<Vec<_>>());
    // rounding: exp(L) inherits the absolute error of L, which scales with |L|
    let mut err: f64 = logs.iter().map(|x| (x.1.re - m).exp() * (1.0 + x.1.norm())).sum::<f64>() * ROUNDING_FLOOR;
    if path.pieces.len() == 1 {
        // trapezoid on a line: E(h) ≈ E(2h)²/|S| with E(2h) from the even-indexed nodes
        let half: C64 = logs.iter().filter(|x| x.0 % 2 == 0).map(|x| 2.0 * (x.1 - m).exp()).sum();
        let e2 = (half - s).norm();
        if s.norm() > 0.0 {
            err += e2 * e2 / s.norm();
        }
    }
    Ok((m, s, err, tail, logs.len(), height))
}

fn require_shifted_region(sol: &HomogeneousSolution, z: C64, d0: f64) -> Result<()> {
    let r = sol.region(z, d0);
    if let Some(v) = r.violated_clauses.first() {
        return Err(FdeError::RegionViolation(format!(
            "z = {z} violates {} (index {}, level {}, m = {})",
            v.clause, v.index, v.level, v.m
        )));
    }
    Ok(())
}

pub fn solve_particular(
    sol_h: &HomogeneousSolution,
    forcing: &ForcingSpec,
    kernel: &KernelSpec,
    contour: &ContourSpec,
    z: C64,
    sigma: C64,
) -> Result<ParticularValue> {
    let path = build_contour(contour)?;
    solve_on_path(sol_h, forcing, kernel, &path, contour.d0, z, sigma)
}

pub fn solve_on_path(
    sol_h: &HomogeneousSolution,
    forcing: &ForcingSpec,
    kernel: &KernelSpec,
    path: &QuadraturePath,
    d0: f64,
    z: C64,
    sigma: C64,
) -> Result<ParticularValue> {
    if forcing.is_zero() {
        return Ok(ParticularValue {
            value: C64::new(0.0, 0.0),
            tail_estimate: 0.0,
            nodes_used: 0,
            height_reached: 0.0,
        });
    }
    let lk0 = kernel.log_k1(C64::new(0.0, 0.0));
    if !lk0.re.is_finite() {
        return Err(FdeError::KernelInvalid(format!("K1(0) = {}", lk0.exp())));
    }
    require_shifted_region(sol_h, z, d0)?;
    let (m, s, quad_err, rel_tail, used, height) = contour_integral(sol_h, forcing, kernel, path, z, sigma)?;
    if rel_tail > TAIL_TOL {
        return Err(FdeError::DecayViolation(format!(
            "integrand at |Im xi| = {height} is {rel_tail:.2e} of the integral"
        )));
    }
    if s.norm() == 0.0 {
        return Ok(ParticularValue {
            value: C64::new(0.0, 0.0),
            tail_estimate: 0.0,
            nodes_used: used,
            height_reached: height,
        });
    }
    let log_pre = sol_h.log_evaluate(z, sigma)? - lk0 + m;
    let value = (log_pre + s.ln()).exp();
    // truncated tail, quadrature and rounding error of the node sum, rounding of the prefactor
    let floor = quad_err * log_pre.re.exp() + ROUNDING_FLOOR * (1.0 + log_pre.norm()) * value.norm();
    Ok(ParticularValue {
        value,
        tail_estimate: rel_tail * value.norm() + floor,
        nodes_used: used,
        height_reached: height,
    })
}

/// A fixed particular-solution setup: homogeneous solution with its plug-in ℙ₁,
/// forcing, kernel and contour.
#[derive(Debug, Clone)]
pub struct ParticularProblem {
    pub sol: HomogeneousSolution,
    pub forcing: ForcingSpec,
    pub kernel: KernelSpec,
    pub contour: ContourSpec,
    path: QuadraturePath,
}

impl ParticularProblem {
    pub fn new(sol: HomogeneousSolution, forcing: ForcingSpec, kernel: KernelSpec, contour: ContourSpec) -> Result<Self> {
        let path = build_contour(&contour)?;
        Ok(ParticularProblem {
            sol,
            forcing,
            kernel,
            contour,
            path,
        })
    }

    pub fn solve(&self, z: C64, sigma: C64) -> Result<ParticularValue> {
        solve_on_path(&self.sol, &self.forcing, &self.kernel, &self.path, self.contour.d0, z, sigma)
    }

    /// |c·Y(z+β) − Ω_N(z)·Y(z) − F(z)| / (1 + |F(z)|).
    pub fn residual(&self, z: C64, sigma: C64) -> Result<f64> {
        let a = self.solve(z + self.sol.beta(), sigma)?.value;
        let b = self.solve(z, sigma)?.value;
        let f = self.forcing.eval(z, sigma);
        let omega = self.sol.log_omega(z)?.exp();
        Ok((self.sol.lead(sigma) * a - omega * b - f).norm() / (1.0 + f.norm()))
    }

    /// 2πi·Σ residues of the integrand inside the circle |ξ − center| = radius,
    /// by the trapezoid rule on the circle.
    pub fn enclosed_residue(&self, z: C64, sigma: C64, center: C64, radius: f64) -> Result<C64> {
        let beta = self.sol.beta();
        let ln_c = self.sol.lead(sigma).ln();
        let n = 256;
        let mut acc = C64::new(0.0, 0.0);
        for k in 0..n {
            let e = C64::from_polar(radius, 2.0 * PI * k as f64 / n as f64);
            let xi = center + e;
            let lf = self.forcing.log_eval(z + beta * xi, sigma).unwrap_or(C64::new(f64::NEG_INFINITY, 0.0));
            let ly = self.sol.log_evaluate(z + beta * xi + beta, sigma)?;
            let dxi = C64::new(0.0, 2.0 * PI / n as f64) * e;
            acc += dxi * (lf + self.kernel.log_kernel(xi) - ln_c - ly).exp();
        }
        Ok(acc)
    }

    /// The defect a pole of the integrand at `center` inside the strip between ℓ
    /// and ℓ+1 adds to c·Y(z+β) − Ω(z)Y(z) − F(z).
    pub fn pole_defect(&self, z: C64, sigma: C64, center: C64, radius: f64) -> Result<C64> {
        let r = self.enclosed_residue(z, sigma, center, radius)?;
        let lk0 = self.kernel.log_k1(C64::new(0.0, 0.0));
        let pre = (self.sol.lead(sigma).ln() + self.sol.log_evaluate(z + self.sol.beta(), sigma)? - lk0).exp();
        Ok(pre * r)
    }
}

pub fn residual_inhomogeneous(
    sol_h: &HomogeneousSolution,
    forcing: &ForcingSpec,
    kernel: &KernelSpec,
    contour: &ContourSpec,
    z: C64,
    sigma: C64,
) -> Result<f64> {
    ParticularProblem::new(sol_h.clone(), forcing.clone(), kernel.clone(), *contour)?.residual(z, sigma)
}

/// Y = Y_h(·;ℙ) + Y_ih; `homogeneous = None` stands for ℙ ≡ 0.
#[derive(Debug, Clone)]
pub struct GeneralSolution {
    pub homogeneous: Option<HomogeneousSolution>,
    pub particular: ParticularProblem,
}

pub fn assemble_general(homogeneous: Option<HomogeneousSolution>, particular: ParticularProblem) -> GeneralSolution {
    GeneralSolution { homogeneous, particular }
}

impl GeneralSolution {
    pub fn evaluate(&self, z: C64, sigma: C64) -> Result<C64> {
        let h = match &self.homogeneous {
            Some(s) => s.evaluate(z, sigma)?,
            None => C64::new(0.0, 0.0),
        };
        Ok(h + self.particular.solve(z, sigma)?.value)
    }

    pub fn residual(&self, z: C64, sigma: C64) -> Result<f64> {
        let p = &self.particular;
        let a = self.evaluate(z + p.sol.beta(), sigma)?;
        let b = self.evaluate(z, sigma)?;
        let f = p.forcing.eval(z, sigma);
        let omega = p.sol.log_omega(z)?.exp();
        Ok((p.sol.lead(sigma) * a - omega * b - f).norm() / (1.0 + f.norm()))
    }
}
