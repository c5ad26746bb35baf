//! Periodic micro problems on one period [0, 1].
//!
//! The fast system is advanced with Crank–Nicolson at a frozen slow value.
//! Two iterations look for the initial value that closes the orbit:
//!
//! * fixed point: restart each cycle from the previous end point, error
//!   contracts by e^{-λ} per cycle;
//! * averaged: restart from `v(1) + w̄` where `λ w̄ = v(1) - v(0)`, which
//!   predicts the mean drift; contraction |e^{-λ} + (e^{-λ} - 1)/λ|.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{diff_norm, reaction_value, FastState, FastSystem};

/// Uniform subdivision of [0, 1] into `M` steps, k = 1/M.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MicroGrid {
    steps: usize,
}

impl MicroGrid {
    pub fn new(steps: usize) -> Result<Self> {
        if steps < 2 {
            return Err(Error::invariant("MicroGrid", format!("M must be >= 2, got {steps}")));
        }
        Ok(Self { steps })
    }

    /// M
    pub fn steps(&self) -> usize {
        self.steps
    }

    /// k = 1/M
    pub fn step(&self) -> f64 {
        1.0 / self.steps as f64
    }

    pub fn time(&self, m: usize) -> f64 {
        m as f64 / self.steps as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PeriodicMethod {
    FixedPoint,
    Averaged,
}

impl std::str::FromStr for PeriodicMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed-point" | "fixed_point" => Ok(PeriodicMethod::FixedPoint),
            "averaged" => Ok(PeriodicMethod::Averaged),
            other => Err(Error::config(
                "micro.method",
                None,
                format!("unknown periodic method `{other}` (expected fixed-point | averaged)"),
            )),
        }
    }
}

impl std::fmt::Display for PeriodicMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PeriodicMethod::FixedPoint => "fixed-point",
            PeriodicMethod::Averaged => "averaged",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodicSolverConfig {
    tol_p: f64,
    max_cycles: usize,
    method: PeriodicMethod,
}

impl PeriodicSolverConfig {
    pub fn new(tol_p: f64, max_cycles: usize, method: PeriodicMethod) -> Result<Self> {
        if !(tol_p > 0.0) {
            return Err(Error::invariant("PeriodicSolverConfig", format!("tol_P must be > 0, got {tol_p}")));
        }
        if max_cycles < 1 {
            return Err(Error::invariant("PeriodicSolverConfig", "max_cycles must be >= 1"));
        }
        Ok(Self {
            tol_p,
            max_cycles,
            method,
        })
    }

    pub fn tol_p(&self) -> f64 {
        self.tol_p
    }

    pub fn max_cycles(&self) -> usize {
        self.max_cycles
    }

    pub fn method(&self) -> PeriodicMethod {
        self.method
    }

    pub fn with_tol_p(&self, tol_p: f64) -> Result<Self> {
        Self::new(tol_p, self.max_cycles, self.method)
    }

    pub fn with_method(&self, method: PeriodicMethod) -> Self {
        Self { method, ..*self }
    }
}

/// One cycle of the fast trajectory at a frozen slow value.
#[derive(Debug, Clone, PartialEq)]
pub struct MicroSolution {
    grid: MicroGrid,
    dim: usize,
    /// node-major: data[m * dim + i] = v_i(t_m)
    data: Vec<f64>,
    periodicity_residual: f64,
    cycles_used: usize,
    u_frozen: f64,
    residual_history: Vec<f64>,
    cycle_mean: Vec<f64>,
}

impl MicroSolution {
    pub fn grid(&self) -> MicroGrid {
        self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// ‖v(1) − v(0)‖, Euclidean over modes.
    pub fn periodicity_residual(&self) -> f64 {
        self.periodicity_residual
    }

    pub fn cycles_used(&self) -> usize {
        self.cycles_used
    }

    pub fn u_frozen(&self) -> f64 {
        self.u_frozen
    }

    /// Periodicity residual after each cycle, in order.
    pub fn residual_history(&self) -> &[f64] {
        &self.residual_history
    }

    /// Box-rule average of the last cycle.
    pub fn cycle_mean(&self) -> FastState {
        FastState::from_raw(self.cycle_mean.clone())
    }

    pub fn sample_slice(&self, m: usize) -> &[f64] {
        &self.data[m * self.dim..(m + 1) * self.dim]
    }

    pub fn sample(&self, m: usize) -> FastState {
        FastState::from_raw(self.sample_slice(m).to_vec())
    }

    /// The M + 1 samples at t_0, ..., t_M.
    pub fn samples(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn initial(&self) -> FastState {
        self.sample(0)
    }

    /// ‖samples[M] − samples[0]‖ recomputed from the stored samples.
    pub fn recompute_residual(&self) -> f64 {
        diff_norm(self.sample_slice(self.grid.steps), self.sample_slice(0))
    }

    /// Largest Euclidean distance between corresponding samples.
    pub fn max_distance(&self, other: &MicroSolution) -> f64 {
        self.samples()
            .zip(other.samples())
            .map(|(a, b)| diff_norm(a, b))
            .fold(0.0, f64::max)
    }
}

/// Forcing sampled at the nodes of one period plus per-solve scratch space.
pub(crate) struct MicroWorkspace<'a> {
    sys: &'a FastSystem,
    grid: MicroGrid,
    dim: usize,
    forcing: Vec<f64>,
    lambdas: Vec<f64>,
    buf: Vec<f64>,
    start: Vec<f64>,
}

impl<'a> MicroWorkspace<'a> {
    pub(crate) fn new(sys: &'a FastSystem, grid: MicroGrid) -> Self {
        let dim = sys.dim();
        let m = grid.steps();
        let mut forcing = Vec::with_capacity((m + 1) * dim);
        for j in 0..=m {
            forcing.extend(sys.forcing_at(grid.time(j)));
        }
        Self {
            sys,
            grid,
            dim,
            forcing,
            lambdas: vec![0.0; dim],
            buf: vec![0.0; (m + 1) * dim],
            start: vec![0.0; dim],
        }
    }

    /// f(t_j) for j = 0..=M.
    pub(crate) fn forcing_node(&self, j: usize) -> &[f64] {
        &self.forcing[j * self.dim..(j + 1) * self.dim]
    }

    fn set_slow(&mut self, u: f64) -> Result<()> {
        if !(u >= 0.0 && u <= self.sys.u_max()) {
            return Err(Error::Domain {
                u,
                u_max: self.sys.u_max(),
            });
        }
        self.sys.decay_rates_into(u, &mut self.lambdas);
        Ok(())
    }

    /// Runs one CN cycle from `self.start` into `self.buf`.
    fn run_cycle(&mut self) {
        let k = self.grid.step();
        let d = self.dim;
        self.buf[..d].copy_from_slice(&self.start);
        for m in 1..=self.grid.steps() {
            for i in 0..d {
                let lam = self.lambdas[i];
                let prev = self.buf[(m - 1) * d + i];
                let fsum = self.forcing[(m - 1) * d + i] + self.forcing[m * d + i];
                self.buf[m * d + i] = ((1.0 - 0.5 * k * lam) * prev + 0.5 * k * fsum) / (1.0 + 0.5 * k * lam);
            }
        }
    }

    fn end_residual(&self) -> f64 {
        let d = self.dim;
        let m = self.grid.steps();
        diff_norm(&self.buf[m * d..(m + 1) * d], &self.buf[..d])
    }

    fn snapshot(&self, u: f64, cycles_used: usize, history: Vec<f64>) -> MicroSolution {
        let d = self.dim;
        let m = self.grid.steps();
        let mut mean = vec![0.0; d];
        for j in 1..=m {
            for i in 0..d {
                mean[i] += self.buf[j * d + i];
            }
        }
        mean.iter_mut().for_each(|x| *x /= m as f64);
        MicroSolution {
            grid: self.grid,
            dim: d,
            data: self.buf.clone(),
            periodicity_residual: self.end_residual(),
            cycles_used,
            u_frozen: u,
            residual_history: history,
            cycle_mean: mean,
        }
    }

    pub(crate) fn cycle(&mut self, u: f64, v_init: &[f64]) -> Result<MicroSolution> {
        self.check_dim(v_init.len())?;
        self.set_slow(u)?;
        self.start.copy_from_slice(v_init);
        self.run_cycle();
        let r = self.end_residual();
        Ok(self.snapshot(u, 1, vec![r]))
    }

    pub(crate) fn solve(&mut self, u: f64, guess: &[f64], cfg: &PeriodicSolverConfig) -> Result<MicroSolution> {
        self.check_dim(guess.len())?;
        self.set_slow(u)?;
        self.start.copy_from_slice(guess);
        let d = self.dim;
        let m = self.grid.steps();
        let mut history = Vec::new();
        for cycle in 1..=cfg.max_cycles() {
            self.run_cycle();
            let r = self.end_residual();
            history.push(r);
            if r < cfg.tol_p() {
                return Ok(self.snapshot(u, cycle, history));
            }
            let (head, tail) = self.buf.split_at(m * d);
            let v0 = &head[..d];
            let v1 = &tail[..d];
            match cfg.method() {
                PeriodicMethod::FixedPoint => self.start.copy_from_slice(v1),
                PeriodicMethod::Averaged => {
                    // stationary update λ_i w̄_i = v_i(1) − v_i(0)
                    for i in 0..d {
                        let w = (v1[i] - v0[i]) / self.lambdas[i];
                        self.start[i] = v1[i] + w;
                    }
                }
            }
        }
        Err(Error::NonConvergence {
            cycles: cfg.max_cycles(),
            residual: history.last().copied().unwrap_or(f64::NAN),
            step: None,
        })
    }

    /// Steady state of the cycle-averaged problem: λ_i(u) v_i = mean_box(f_i).
    pub(crate) fn stationary_guess(&mut self, u: f64) -> Result<Vec<f64>> {
        self.set_slow(u)?;
        let d = self.dim;
        let m = self.grid.steps();
        let mut out = vec![0.0; d];
        for j in 1..=m {
            for i in 0..d {
                out[i] += self.forcing[j * d + i];
            }
        }
        for i in 0..d {
            out[i] /= m as f64 * self.lambdas[i];
        }
        Ok(out)
    }

    fn check_dim(&self, found: usize) -> Result<()> {
        if found != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found,
            });
        }
        Ok(())
    }
}

/// One Crank–Nicolson cycle over [0, 1] from `v_init` at frozen `u`.
pub fn cn_cycle(sys: &FastSystem, u: f64, v_init: &FastState, grid: MicroGrid) -> Result<MicroSolution> {
    MicroWorkspace::new(sys, grid).cycle(u, v_init.as_slice())
}

/// Initial value of the exact periodic solution of v' + λ(u) v = f for one
/// mode, from v(0) = e^{-λ}/(1 - e^{-λ}) ∫₀¹ f(s) e^{λs} ds with composite
/// Simpson on `n_quad` panels.
pub fn periodic_exact_scalar(sys: &FastSystem, u: f64, n_quad: usize) -> Result<f64> {
    if sys.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            found: sys.dim(),
        });
    }
    if n_quad < 16 || !n_quad.is_multiple_of(2) {
        return Err(Error::invariant(
            "periodic_exact_scalar",
            format!("n_quad must be even and >= 16, got {n_quad}"),
        ));
    }
    let lam = sys.decay_rates(u)?[0];
    let f = &sys.modes()[0].forcing;
    let h = 1.0 / n_quad as f64;
    let g = |s: f64| f.eval(s) * (lam * s).exp();
    let mut acc = g(0.0) + g(1.0);
    for j in 1..n_quad {
        let w = if j % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * g(j as f64 * h);
    }
    let integral = acc * h / 3.0;
    let decay = (-lam).exp();
    Ok(decay / (1.0 - decay) * integral)
}

/// Periodic solution by plain cycle iteration v⁽ˡ⁺¹⁾(0) := v⁽ˡ⁾(1).
pub fn solve_periodic_fixed_point(
    sys: &FastSystem,
    u: f64,
    v_guess: &FastState,
    grid: MicroGrid,
    cfg: &PeriodicSolverConfig,
) -> Result<MicroSolution> {
    let cfg = cfg.with_method(PeriodicMethod::FixedPoint);
    MicroWorkspace::new(sys, grid).solve(u, v_guess.as_slice(), &cfg)
}

/// Periodic solution by the averaging acceleration scheme.
pub fn solve_periodic_averaged(
    sys: &FastSystem,
    u: f64,
    v_guess: &FastState,
    grid: MicroGrid,
    cfg: &PeriodicSolverConfig,
) -> Result<MicroSolution> {
    let cfg = cfg.with_method(PeriodicMethod::Averaged);
    MicroWorkspace::new(sys, grid).solve(u, v_guess.as_slice(), &cfg)
}

/// Dispatches on `cfg.method()`.
pub fn solve_periodic(
    sys: &FastSystem,
    u: f64,
    v_guess: &FastState,
    grid: MicroGrid,
    cfg: &PeriodicSolverConfig,
) -> Result<MicroSolution> {
    MicroWorkspace::new(sys, grid).solve(u, v_guess.as_slice(), cfg)
}

/// Cold-start guess: the steady state of the period-averaged fast problem.
pub fn stationary_guess(sys: &FastSystem, u: f64, grid: MicroGrid) -> Result<FastState> {
    Ok(FastState::from_raw(MicroWorkspace::new(sys, grid).stationary_guess(u)?))
}

/// Box-rule average of the reaction over one period,
/// R̄ = (1/M) Σ_{m=1}^{M} R(u, σ(v_m)).
pub fn averaged_reaction(sys: &FastSystem, u: f64, sol: &MicroSolution) -> Result<f64> {
    if sol.dim() != sys.dim() {
        return Err(Error::DimensionMismatch {
            expected: sys.dim(),
            found: sol.dim(),
        });
    }
    if !(u >= 0.0 && u <= sys.u_max()) {
        return Err(Error::Domain { u, u_max: sys.u_max() });
    }
    Ok(averaged_reaction_unchecked(sys, u, sol))
}

pub(crate) fn averaged_reaction_unchecked(sys: &FastSystem, u: f64, sol: &MicroSolution) -> f64 {
    let m = sol.grid().steps();
    let sum: f64 = (1..=m)
        .map(|j| reaction_value(u, sys.sigma_of(sol.sample_slice(j))))
        .sum();
    sum / m as f64
}
