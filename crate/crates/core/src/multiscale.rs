//! Explicit temporal multiscale method.
//!
//! For n = 1..N: solve the periodic micro problem at U_{n-1}, average the
//! reaction over the period, then advance the slow variable with forward
//! Euler (n = 1) or two-step Adams–Bashforth (n >= 2).

use crate::error::{Error, Result};
use crate::micro::{averaged_reaction_unchecked, MicroGrid, MicroWorkspace, PeriodicSolverConfig};
use crate::model::{FastState, FastSystem, ScaleParams};

/// Uniform macro partition 0 = T_0 < ... < T_N = T_end.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MacroGrid {
    steps: usize,
    step_size: f64,
}

impl MacroGrid {
    /// N steps of size K = T_end / N.
    pub fn from_steps(steps: usize, t_end: f64) -> Result<Self> {
        if steps < 1 {
            return Err(Error::invariant("MacroGrid", "N must be >= 1"));
        }
        if !(t_end > 0.0) {
            return Err(Error::invariant("MacroGrid", format!("T_end must be > 0, got {t_end}")));
        }
        Ok(Self::build(steps, t_end / steps as f64))
    }

    /// Step size K; T_end / K must be an integer up to roundoff.
    pub fn from_step_size(step_size: f64, t_end: f64) -> Result<Self> {
        if !(step_size > 0.0 && step_size.is_finite()) {
            return Err(Error::invariant("MacroGrid", format!("K must be > 0, got {step_size}")));
        }
        let n = t_end / step_size;
        let rounded = n.round();
        if rounded < 1.0 || (n - rounded).abs() > 1e-9 * n.max(1.0) {
            return Err(Error::invariant(
                "MacroGrid",
                format!("T_end / K = {n} is not a positive integer"),
            ));
        }
        Ok(Self::build(rounded as usize, step_size))
    }

    fn build(steps: usize, step_size: f64) -> Self {
        if step_size < 1.0 {
            log::warn!("macro step K = {step_size} is shorter than one fast period");
        }
        Self { steps, step_size }
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn step_size(&self) -> f64 {
        self.step_size
    }

    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.step_size
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Completed,
    /// The slow variable left [0, u_max] while computing step `step`.
    DomainExhausted { step: usize },
}

/// Macro trajectory with its averaged reactions and micro-solver cost.
#[derive(Debug, Clone, PartialEq)]
pub struct MacroTrajectory {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// R̄_0 .. R̄_{N-1}
    pub reactions: Vec<f64>,
    /// Periodic-solver cycles used at each macro step.
    pub cycles: Vec<usize>,
    /// Crank–Nicolson steps executed in total (cycles × M summed).
    pub cn_steps: u64,
    pub micro_steps: usize,
    pub status: RunStatus,
}

impl MacroTrajectory {
    pub fn final_value(&self) -> f64 {
        *self.values.last().expect("trajectory holds U_0")
    }

    pub fn total_cycles(&self) -> usize {
        self.cycles.iter().sum()
    }

    /// Average number of periodic cycles per macro step.
    pub fn mean_cycles(&self) -> f64 {
        if self.cycles.is_empty() {
            0.0
        } else {
            self.total_cycles() as f64 / self.cycles.len() as f64
        }
    }

    pub fn max_cycles(&self) -> usize {
        self.cycles.iter().copied().max().unwrap_or(0)
    }

    /// max_n |U_{n+1} − 2U_n + U_{n−1}|
    pub fn max_second_difference(&self) -> f64 {
        self.values
            .windows(3)
            .map(|w| (w[2] - 2.0 * w[1] + w[0]).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_completed(&self) -> bool {
        self.status == RunStatus::Completed
    }
}

fn check_reaction(r: f64) -> Result<()> {
    if r > 0.0 && r <= 1.0 {
        Ok(())
    } else {
        Err(Error::invariant("MacroTrajectory", format!("averaged reaction {r} outside (0, 1]")))
    }
}

fn check_slow(value: f64, u_max: f64) -> Result<f64> {
    if value > u_max {
        Err(Error::DomainExhausted {
            step: None,
            value,
            u_max,
        })
    } else if value < 0.0 {
        Err(Error::IntegratorFailure { step: None, value })
    } else {
        Ok(value)
    }
}

/// U_1 = U_0 + K ε R̄_0
pub fn euler_bootstrap(u0: f64, r0: f64, step_size: f64, epsilon: f64, u_max: f64) -> Result<f64> {
    check_reaction(r0)?;
    check_slow(u0 + step_size * epsilon * r0, u_max)
}

/// U_n = U_{n−1} + (3K/2) ε R̄_{n−1} − (K/2) ε R̄_{n−2}
pub fn ab2_step(u_prev: f64, r_prev: f64, r_prev2: f64, step_size: f64, epsilon: f64, u_max: f64) -> Result<f64> {
    check_reaction(r_prev)?;
    check_reaction(r_prev2)?;
    check_slow(
        u_prev + 1.5 * step_size * epsilon * r_prev - 0.5 * step_size * epsilon * r_prev2,
        u_max,
    )
}

/// Runs the multiscale scheme over `macro_grid`. The first periodic solve
/// starts from the steady state of the period-averaged fast problem; every
/// later one is warm-started from the previous converged initial value.
pub fn run_multiscale(
    sys: &FastSystem,
    scale: &ScaleParams,
    macro_grid: MacroGrid,
    micro_grid: MicroGrid,
    psolver: &PeriodicSolverConfig,
) -> Result<MacroTrajectory> {
    sys.check_scale(scale)?;
    let eps = scale.epsilon();
    let k_macro = macro_grid.step_size();
    let u_max = scale.u_max();
    let m = micro_grid.steps();

    let mut ws = MicroWorkspace::new(sys, micro_grid);
    let mut guess = ws.stationary_guess(scale.u0())?;

    let n_steps = macro_grid.steps();
    let mut traj = MacroTrajectory {
        times: Vec::with_capacity(n_steps + 1),
        values: Vec::with_capacity(n_steps + 1),
        reactions: Vec::with_capacity(n_steps),
        cycles: Vec::with_capacity(n_steps),
        cn_steps: 0,
        micro_steps: m,
        status: RunStatus::Completed,
    };
    traj.times.push(0.0);
    traj.values.push(scale.u0());

    for n in 1..=n_steps {
        let u_prev = traj.values[n - 1];
        let sol = ws.solve(u_prev, &guess, psolver).map_err(|e| match e {
            Error::NonConvergence { cycles, residual, .. } => Error::NonConvergence {
                cycles,
                residual,
                step: Some(n),
            },
            other => other,
        })?;
        let r = averaged_reaction_unchecked(sys, u_prev, &sol);
        traj.cycles.push(sol.cycles_used());
        traj.cn_steps += (sol.cycles_used() * m) as u64;
        traj.reactions.push(r);
        guess = sol.initial().into_inner();

        let next = if n == 1 {
            euler_bootstrap(u_prev, r, k_macro, eps, u_max)
        } else {
            ab2_step(u_prev, r, traj.reactions[n - 2], k_macro, eps, u_max)
        };
        match next {
            Ok(u) => {
                traj.times.push(macro_grid.time(n));
                traj.values.push(u);
            }
            Err(Error::DomainExhausted { .. }) => {
                traj.status = RunStatus::DomainExhausted { step: n };
                break;
            }
            Err(Error::IntegratorFailure { value, .. }) => {
                return Err(Error::IntegratorFailure { step: Some(n), value });
            }
            Err(e) => return Err(e),
        }
    }
    Ok(traj)
}

/// Initial value the first macro step starts its periodic solve from.
pub fn initial_micro_guess(sys: &FastSystem, u0: f64, micro_grid: MicroGrid) -> Result<FastState> {
    crate::micro::stationary_guess(sys, u0, micro_grid)
}
