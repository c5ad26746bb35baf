//! Problem data for the slow-fast system
//!
//! ```text
//! u' = ε R(u, σ(v)),      R(u, σ) = 1 / ((1 + u)(1 + σ²))
//! v_i' + λ_i(u) v_i = f_i(t),   f_i(t + 1) = f_i(t)
//! σ(v) = σ₀⁻¹ Σ_i w_i v_i
//! ```
//!
//! A scalar problem is the special case of one mode with `w = 1`, `σ₀ = 1`.
//! Structural assumptions (decay floor, bounded derivative, periodic forcing)
//! are checked by dense sampling when the objects are built, so user-supplied
//! laws go through the same validation as the presets.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Number of grid points used for the sampling-based invariant checks.
pub const INVARIANT_SAMPLES: usize = 10_000;

/// ε, the horizon and the admissible range of the slow variable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleParams {
    epsilon: f64,
    t_end: f64,
    u_max: f64,
    u0: f64,
}

impl ScaleParams {
    pub fn new(epsilon: f64, t_end: f64, u_max: f64, u0: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::invariant("ScaleParams", format!("epsilon must be > 0, got {epsilon}")));
        }
        let p = Self::build(epsilon, t_end, u_max, u0)?;
        if epsilon * t_end > 10.0 {
            log::warn!(
                "epsilon * T_end = {} exceeds 10; the horizon is expected to be O(1/epsilon)",
                epsilon * t_end
            );
        }
        Ok(p)
    }

    /// Parameters with ε = 0: the slow variable stays at `u0`. Used for
    /// diagnostics that need the uncoupled fast dynamics.
    pub fn frozen(t_end: f64, u_max: f64, u0: f64) -> Result<Self> {
        Self::build(0.0, t_end, u_max, u0)
    }

    fn build(epsilon: f64, t_end: f64, u_max: f64, u0: f64) -> Result<Self> {
        if !(t_end > 0.0 && t_end.is_finite()) {
            return Err(Error::invariant("ScaleParams", format!("T_end must be > 0, got {t_end}")));
        }
        if !(u_max.is_finite() && u0 >= 0.0 && u0 <= u_max) {
            return Err(Error::invariant(
                "ScaleParams",
                format!("need 0 <= u0 <= u_max, got u0 = {u0}, u_max = {u_max}"),
            ));
        }
        Ok(Self {
            epsilon,
            t_end,
            u_max,
            u0,
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn u_max(&self) -> f64 {
        self.u_max
    }

    pub fn u0(&self) -> f64 {
        self.u0
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        Self::new(epsilon, self.t_end, self.u_max, self.u0)
    }

    pub fn with_t_end(&self, t_end: f64) -> Result<Self> {
        if self.epsilon == 0.0 {
            Self::frozen(t_end, self.u_max, self.u0)
        } else {
            Self::new(self.epsilon, t_end, self.u_max, self.u0)
        }
    }

    pub fn check_u(&self, u: f64) -> Result<()> {
        check_domain(u, self.u_max)
    }
}

fn check_domain(u: f64, u_max: f64) -> Result<()> {
    if u >= 0.0 && u <= u_max {
        Ok(())
    } else {
        Err(Error::Domain { u, u_max })
    }
}

/// A scalar function of one variable.
#[derive(Clone)]
pub enum ScalarLaw {
    /// Σ c_j x^j, coefficients in ascending order.
    Polynomial(Vec<f64>),
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl ScalarLaw {
    pub fn constant(c: f64) -> Self {
        ScalarLaw::Polynomial(vec![c])
    }

    pub fn affine(a: f64, b: f64) -> Self {
        ScalarLaw::Polynomial(vec![a, b])
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            ScalarLaw::Polynomial(c) => c.iter().rev().fold(0.0, |acc, &cj| acc * x + cj),
            ScalarLaw::Custom(f) => f(x),
        }
    }
}

impl fmt::Debug for ScalarLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarLaw::Polynomial(c) => f.debug_tuple("Polynomial").field(c).finish(),
            ScalarLaw::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// Decay rate λ(u) of one fast mode, validated on [0, u_max].
#[derive(Debug, Clone)]
pub struct DecayLaw {
    law: ScalarLaw,
    lambda_floor: f64,
    derivative_bound: f64,
    u_max: f64,
}

impl DecayLaw {
    pub fn new(law: ScalarLaw, lambda_floor: f64, derivative_bound: f64, u_max: f64) -> Result<Self> {
        if !(lambda_floor > 0.0) {
            return Err(Error::invariant(
                "DecayLaw",
                format!("declared lambda_floor must be > 0, got {lambda_floor}"),
            ));
        }
        if !(derivative_bound >= 0.0 && derivative_bound.is_finite()) {
            return Err(Error::invariant(
                "DecayLaw",
                format!("declared derivative_bound must be finite and >= 0, got {derivative_bound}"),
            ));
        }
        if !(u_max >= 0.0 && u_max.is_finite()) {
            return Err(Error::invariant("DecayLaw", format!("u_max must be finite and >= 0, got {u_max}")));
        }

        let n = INVARIANT_SAMPLES;
        let h = u_max / (n - 1) as f64;
        let mut prev = law.eval(0.0);
        for i in 0..n {
            let u = i as f64 * h;
            let lam = law.eval(u);
            if !lam.is_finite() || lam < lambda_floor {
                return Err(Error::invariant(
                    "DecayLaw",
                    format!("lambda({u}) = {lam} is below the declared floor {lambda_floor}"),
                ));
            }
            if i > 0 && h > 0.0 {
                let slope = (lam - prev).abs() / h;
                // roundoff in the difference quotient scales like |λ| ε_mach / h
                let slack = 1e-9 * derivative_bound + 64.0 * f64::EPSILON * lam.abs() / h;
                if slope > derivative_bound + slack {
                    return Err(Error::invariant(
                        "DecayLaw",
                        format!("|dlambda/du| ~ {slope} near u = {u} exceeds the declared bound {derivative_bound}"),
                    ));
                }
            }
            prev = lam;
        }
        Ok(Self {
            law,
            lambda_floor,
            derivative_bound,
            u_max,
        })
    }

    /// Constant decay rate λ(u) ≡ λ.
    pub fn constant(lambda: f64, u_max: f64) -> Result<Self> {
        Self::new(ScalarLaw::constant(lambda), lambda, 0.0, u_max)
    }

    pub fn eval(&self, u: f64) -> f64 {
        self.law.eval(u)
    }

    pub fn law(&self) -> &ScalarLaw {
        &self.law
    }

    pub fn lambda_floor(&self) -> f64 {
        self.lambda_floor
    }

    pub fn derivative_bound(&self) -> f64 {
        self.derivative_bound
    }

    pub fn u_max(&self) -> f64 {
        self.u_max
    }
}

/// 1-periodic forcing of one fast mode.
#[derive(Clone)]
pub enum Forcing {
    /// mean + Σ_j cos_j cos(2π j t) + sin_j sin(2π j t), harmonics j = 1, 2, ...
    Fourier { mean: f64, cos: Vec<f64>, sin: Vec<f64> },
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl Forcing {
    pub fn zero() -> Self {
        Forcing::constant(0.0)
    }

    pub fn constant(c: f64) -> Self {
        Forcing::Fourier {
            mean: c,
            cos: vec![],
            sin: vec![],
        }
    }

    /// a sin(2πt)
    pub fn sine(a: f64) -> Self {
        Forcing::Fourier {
            mean: 0.0,
            cos: vec![],
            sin: vec![a],
        }
    }

    /// a sin²(πt) = a/2 - a/2 cos(2πt)
    pub fn sine_squared(a: f64) -> Self {
        Forcing::Fourier {
            mean: 0.5 * a,
            cos: vec![-0.5 * a],
            sin: vec![],
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Forcing::Fourier { mean, cos, sin } => {
                let mut acc = *mean;
                for (j, c) in cos.iter().enumerate() {
                    acc += c * (2.0 * PI * (j + 1) as f64 * t).cos();
                }
                for (j, s) in sin.iter().enumerate() {
                    acc += s * (2.0 * PI * (j + 1) as f64 * t).sin();
                }
                acc
            }
            Forcing::Custom(f) => f(t),
        }
    }

    /// max |f| over a dense sample of one period.
    pub fn sup_norm(&self) -> f64 {
        (0..INVARIANT_SAMPLES)
            .map(|i| self.eval(i as f64 / INVARIANT_SAMPLES as f64).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Forcing::Fourier { mean, cos, sin }
            if *mean == 0.0 && cos.iter().all(|c| *c == 0.0) && sin.iter().all(|s| *s == 0.0))
    }

    fn check_periodic(&self) -> Result<()> {
        let scale = 1.0 + self.sup_norm();
        for i in 0..INVARIANT_SAMPLES {
            let t = i as f64 / INVARIANT_SAMPLES as f64;
            let (a, b) = (self.eval(t), self.eval(t + 1.0));
            if !a.is_finite() || (a - b).abs() > 1e-10 * scale {
                return Err(Error::invariant(
                    "FastSystem",
                    format!("forcing is not 1-periodic: f({t}) = {a}, f({}) = {b}", t + 1.0),
                ));
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Forcing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Forcing::Fourier { mean, cos, sin } => f
                .debug_struct("Fourier")
                .field("mean", mean)
                .field("cos", cos)
                .field("sin", sin)
                .finish(),
            Forcing::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// One decoupled fast mode: decay law, forcing and wall-functional weight.
#[derive(Debug, Clone)]
pub struct Mode {
    pub decay: DecayLaw,
    pub forcing: Forcing,
    pub weight: f64,
}

/// The fast dynamics v_i' + λ_i(u) v_i = f_i(t), i = 1..m.
#[derive(Debug, Clone)]
pub struct FastSystem {
    modes: Vec<Mode>,
    sigma0: f64,
    u_max: f64,
}

impl FastSystem {
    pub fn new(modes: Vec<Mode>, sigma0: f64) -> Result<Self> {
        if modes.is_empty() {
            return Err(Error::invariant("FastSystem", "need at least one mode"));
        }
        if !(sigma0 > 0.0 && sigma0.is_finite()) {
            return Err(Error::invariant("FastSystem", format!("sigma0 must be > 0, got {sigma0}")));
        }
        for m in &modes {
            if !m.weight.is_finite() {
                return Err(Error::invariant("FastSystem", "wall weights must be finite"));
            }
            m.forcing.check_periodic()?;
        }
        let u_max = modes.iter().map(|m| m.decay.u_max()).fold(f64::INFINITY, f64::min);
        Ok(Self { modes, sigma0, u_max })
    }

    /// Single mode with unit weight and σ₀ = 1, so σ(v) = v.
    pub fn scalar(decay: DecayLaw, forcing: Forcing) -> Result<Self> {
        Self::new(
            vec![Mode {
                decay,
                forcing,
                weight: 1.0,
            }],
            1.0,
        )
    }

    pub fn dim(&self) -> usize {
        self.modes.len()
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn sigma0(&self) -> f64 {
        self.sigma0
    }

    /// Upper end of the range on which every decay law was validated.
    pub fn u_max(&self) -> f64 {
        self.u_max
    }

    pub fn decay_rates(&self, u: f64) -> Result<Vec<f64>> {
        check_domain(u, self.u_max)?;
        Ok(self.modes.iter().map(|m| m.decay.eval(u)).collect())
    }

    pub(crate) fn decay_rates_into(&self, u: f64, out: &mut [f64]) {
        for (o, m) in out.iter_mut().zip(&self.modes) {
            *o = m.decay.eval(u);
        }
    }

    pub fn forcing_at(&self, t: f64) -> Vec<f64> {
        self.modes.iter().map(|m| m.forcing.eval(t)).collect()
    }

    pub fn is_unforced(&self) -> bool {
        self.modes.iter().all(|m| m.forcing.is_zero())
    }

    /// Checks that `scale` only asks for slow values the decay laws were validated on.
    pub fn check_scale(&self, scale: &ScaleParams) -> Result<()> {
        if scale.u_max() > self.u_max {
            return Err(Error::invariant(
                "ScaleParams",
                format!(
                    "u_max = {} exceeds the range [0, {}] the decay laws were validated on",
                    scale.u_max(),
                    self.u_max
                ),
            ));
        }
        Ok(())
    }

    pub(crate) fn sigma_of(&self, v: &[f64]) -> f64 {
        let s: f64 = self.modes.iter().zip(v).map(|(m, x)| m.weight * x).sum();
        s / self.sigma0
    }
}

/// Amplitudes of the fast modes.
#[derive(Debug, Clone, PartialEq)]
pub struct FastState(Vec<f64>);

impl FastState {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|x| !x.is_finite()) {
            return Err(Error::invariant("FastState", "entries must be finite"));
        }
        Ok(Self(values))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    pub fn scalar(v: f64) -> Self {
        Self(vec![v])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Euclidean norm over modes.
    pub fn norm(&self) -> f64 {
        euclid(&self.0)
    }

    pub fn distance(&self, other: &FastState) -> f64 {
        diff_norm(&self.0, &other.0)
    }

    pub(crate) fn from_raw(values: Vec<f64>) -> Self {
        Self(values)
    }
}

pub(crate) fn euclid(x: &[f64]) -> f64 {
    x.iter().map(|a| a * a).sum::<f64>().sqrt()
}

pub(crate) fn diff_norm(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// σ = σ₀⁻¹ Σ w_i v_i, the linear surrogate of the wall shear stress.
pub fn wall_functional(sys: &FastSystem, v: &FastState) -> Result<f64> {
    if v.dim() != sys.dim() {
        return Err(Error::DimensionMismatch {
            expected: sys.dim(),
            found: v.dim(),
        });
    }
    Ok(sys.sigma_of(v.as_slice()))
}

#[inline]
pub(crate) fn reaction_value(u: f64, sigma: f64) -> f64 {
    1.0 / ((1.0 + u) * (1.0 + sigma * sigma))
}

/// R(u, σ) = 1 / ((1 + u)(1 + σ²)) for 0 <= u <= u_max.
pub fn reaction(u: f64, sigma: f64, u_max: f64) -> Result<f64> {
    check_domain(u, u_max)?;
    Ok(reaction_value(u, sigma))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LipschitzBounds {
    pub bound_u: f64,
    pub bound_sigma: f64,
}

/// Largest sampled difference quotients of R in each argument over an
/// `n_samples × n_samples` grid. A range collapsed to a point contributes 0.
pub fn lipschitz_probe(
    u_range: (f64, f64),
    sigma_range: (f64, f64),
    n_samples: usize,
) -> Result<LipschitzBounds> {
    if n_samples < 2 {
        return Err(Error::invariant("lipschitz_probe", "n_samples must be >= 2"));
    }
    for (name, (lo, hi)) in [("u_range", u_range), ("sigma_range", sigma_range)] {
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::invariant("lipschitz_probe", format!("{name} must satisfy lo <= hi")));
        }
    }
    if u_range.0 <= -1.0 {
        return Err(Error::invariant("lipschitz_probe", "reaction is undefined for u <= -1"));
    }
    let grid = |(lo, hi): (f64, f64)| -> Vec<f64> {
        if lo == hi {
            vec![lo]
        } else {
            (0..n_samples)
                .map(|i| lo + (hi - lo) * i as f64 / (n_samples - 1) as f64)
                .collect()
        }
    };
    let us = grid(u_range);
    let ss = grid(sigma_range);

    let mut bound_u = 0.0_f64;
    let mut bound_sigma = 0.0_f64;
    for &s in &ss {
        for w in us.windows(2) {
            let q = (reaction_value(w[1], s) - reaction_value(w[0], s)).abs() / (w[1] - w[0]);
            bound_u = bound_u.max(q);
        }
    }
    for &u in &us {
        for w in ss.windows(2) {
            let q = (reaction_value(u, w[1]) - reaction_value(u, w[0])).abs() / (w[1] - w[0]);
            bound_sigma = bound_sigma.max(q);
        }
    }
    Ok(LipschitzBounds { bound_u, bound_sigma })
}

/// Built-in problem definitions.
pub mod presets {
    use super::*;

    pub const SCALAR_DEFAULT: &str = "scalar-default";
    pub const MODAL_DEFAULT: &str = "modal-default";

    pub const DEFAULT_U_MAX: f64 = 1.0;
    pub const MODAL_DIM: usize = 4;

    /// σ₀ for the modal preset, fixed so that max_t |σ| = 1 for the periodic
    /// solution at u = 0.
    pub const MODAL_SIGMA0: f64 = 0.6979;

    /// λ(u) = 1 + u, f(t) = sin(2πt).
    pub fn scalar_default() -> FastSystem {
        let decay = DecayLaw::new(ScalarLaw::affine(1.0, 1.0), 1.0, 1.0, DEFAULT_U_MAX)
            .expect("scalar preset decay law is valid");
        FastSystem::scalar(decay, Forcing::sine(1.0)).expect("scalar preset is valid")
    }

    /// λ_i(u) = i (1 + u), f_i(t) = sin²(πt) / i, w_i = 1 / i, i = 1..4.
    pub fn modal_default() -> FastSystem {
        let modes = (1..=MODAL_DIM)
            .map(|i| {
                let fi = i as f64;
                Mode {
                    decay: DecayLaw::new(ScalarLaw::affine(fi, fi), fi, fi, DEFAULT_U_MAX)
                        .expect("modal preset decay law is valid"),
                    forcing: Forcing::sine_squared(1.0 / fi),
                    weight: 1.0 / fi,
                }
            })
            .collect();
        FastSystem::new(modes, MODAL_SIGMA0).expect("modal preset is valid")
    }

    /// Same decay law as the scalar preset but with f ≡ 0.
    pub fn scalar_unforced() -> FastSystem {
        let decay = DecayLaw::new(ScalarLaw::affine(1.0, 1.0), 1.0, 1.0, DEFAULT_U_MAX)
            .expect("valid decay law");
        FastSystem::scalar(decay, Forcing::zero()).expect("valid system")
    }

    pub fn by_name(name: &str) -> Option<FastSystem> {
        match name {
            SCALAR_DEFAULT => Some(scalar_default()),
            MODAL_DEFAULT => Some(modal_default()),
            _ => None,
        }
    }

    /// ε = 1e-3, T = 1000, u_max = 1, u0 = 0.
    pub fn default_scale() -> ScaleParams {
        ScaleParams::new(1e-3, 1000.0, DEFAULT_U_MAX, 0.0).expect("valid scale")
    }
}
