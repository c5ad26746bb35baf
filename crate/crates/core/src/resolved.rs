//! Fully resolved forward simulation of the coupled system.
//!
//! Each fast step first advances u with explicit AB2 on pointwise reaction
//! values (forward Euler on the first step), then advances v with one
//! Crank–Nicolson step using λ evaluated at the new u. The step size is
//! k = 1/M so that the nodes line up with the periodic micro grid.

use crate::error::{Error, Result};
use crate::micro::{MicroGrid, MicroWorkspace, PeriodicMethod, PeriodicSolverConfig};
use crate::model::{diff_norm, reaction_value, FastState, FastSystem, ScaleParams};
use crate::multiscale::RunStatus;

/// Largest number of fast steps a resolved run will attempt.
pub const MAX_RESOLVED_STEPS: f64 = 1e9;

/// Periodicity tolerance used when the resolved module needs a periodic
/// solution as an initial value or as a comparison.
pub const REFERENCE_TOL_P: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedTrajectory {
    pub grid: MicroGrid,
    /// Every `stride`-th node is stored; the last node is always stored.
    pub stride: usize,
    pub times: Vec<f64>,
    pub slow: Vec<f64>,
    /// node-major fast samples, `dim` values per stored node
    fast: Vec<f64>,
    dim: usize,
    pub final_u: f64,
    pub final_v: FastState,
    /// Fast steps executed.
    pub steps: u64,
    pub status: RunStatus,
}

impl ResolvedTrajectory {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn fast_slice(&self, j: usize) -> &[f64] {
        &self.fast[j * self.dim..(j + 1) * self.dim]
    }

    pub fn fast_state(&self, j: usize) -> FastState {
        FastState::from_raw(self.fast_slice(j).to_vec())
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectory stores t_0")
    }

    pub fn is_completed(&self) -> bool {
        self.status == RunStatus::Completed
    }
}

/// T_end · M, the number of fast steps a resolved run over `scale` needs.
pub fn projected_steps(scale: &ScaleParams, grid: MicroGrid) -> f64 {
    scale.t_end() * grid.steps() as f64
}

fn step_count(scale: &ScaleParams, grid: MicroGrid) -> Result<usize> {
    let projected = projected_steps(scale, grid);
    if projected > MAX_RESOLVED_STEPS {
        return Err(Error::InfeasibleCost {
            projected_steps: projected,
            limit: MAX_RESOLVED_STEPS,
        });
    }
    let rounded = projected.round();
    if rounded < 1.0 || (projected - rounded).abs() > 1e-9 * projected.max(1.0) {
        return Err(Error::invariant(
            "run_resolved",
            format!("T_end / k = {projected} is not a positive integer"),
        ));
    }
    Ok(rounded as usize)
}

/// Resolved run storing every `stride`-th node.
pub fn run_resolved(
    sys: &FastSystem,
    scale: &ScaleParams,
    grid: MicroGrid,
    v_init: &FastState,
    stride: usize,
) -> Result<ResolvedTrajectory> {
    run_resolved_with(sys, scale, grid, v_init, stride, |_, _, _, _| {})
}

/// Like [`run_resolved`], calling `observer(m, t_m, u_m, v_m)` at every node
/// (including m = 0) so error functionals can be accumulated at full
/// resolution while storage stays strided.
pub fn run_resolved_with<F>(
    sys: &FastSystem,
    scale: &ScaleParams,
    grid: MicroGrid,
    v_init: &FastState,
    stride: usize,
    mut observer: F,
) -> Result<ResolvedTrajectory>
where
    F: FnMut(usize, f64, f64, &[f64]),
{
    sys.check_scale(scale)?;
    if v_init.dim() != sys.dim() {
        return Err(Error::DimensionMismatch {
            expected: sys.dim(),
            found: v_init.dim(),
        });
    }
    if stride < 1 {
        return Err(Error::invariant("run_resolved", "stride must be >= 1"));
    }
    let total = step_count(scale, grid)?;

    let d = sys.dim();
    let m_per = grid.steps();
    let k = grid.step();
    let eps = scale.epsilon();
    let u_max = scale.u_max();
    let ws = MicroWorkspace::new(sys, grid);

    let mut u = scale.u0();
    let mut v = v_init.as_slice().to_vec();
    let mut lambdas = vec![0.0; d];

    let stored = total / stride + 2;
    let mut traj = ResolvedTrajectory {
        grid,
        stride,
        times: Vec::with_capacity(stored),
        slow: Vec::with_capacity(stored),
        fast: Vec::with_capacity(stored * d),
        dim: d,
        final_u: u,
        final_v: v_init.clone(),
        steps: 0,
        status: RunStatus::Completed,
    };
    let store = |traj: &mut ResolvedTrajectory, t: f64, u: f64, v: &[f64]| {
        traj.times.push(t);
        traj.slow.push(u);
        traj.fast.extend_from_slice(v);
    };

    store(&mut traj, 0.0, u, &v);
    observer(0, 0.0, u, &v);

    let mut r_prev = reaction_value(u, sys.sigma_of(&v));
    let mut r_prev2 = r_prev;
    for m in 1..=total {
        let slope = if m == 1 { r_prev } else { 1.5 * r_prev - 0.5 * r_prev2 };
        let u_new = u + k * eps * slope;
        if u_new > u_max {
            traj.status = RunStatus::DomainExhausted { step: m };
            break;
        }
        if u_new < 0.0 {
            return Err(Error::IntegratorFailure {
                step: Some(m),
                value: u_new,
            });
        }
        u = u_new;

        sys.decay_rates_into(u, &mut lambdas);
        let j_prev = (m - 1) % m_per;
        let j_cur = if m % m_per == 0 { m_per } else { m % m_per };
        let f0 = ws.forcing_node(j_prev);
        let f1 = ws.forcing_node(j_cur);
        for i in 0..d {
            let lam = lambdas[i];
            v[i] = ((1.0 - 0.5 * k * lam) * v[i] + 0.5 * k * (f0[i] + f1[i])) / (1.0 + 0.5 * k * lam);
        }
        traj.steps += 1;

        r_prev2 = r_prev;
        r_prev = reaction_value(u, sys.sigma_of(&v));

        let t = m as f64 / m_per as f64;
        observer(m, t, u, &v);
        if m % stride == 0 || m == total {
            store(&mut traj, t, u, &v);
        }
    }
    // the exhausted case may end between stored nodes
    let t_last = traj.steps as f64 / m_per as f64;
    if traj.times.last().copied() != Some(t_last) {
        store(&mut traj, t_last, u, &v);
    }
    traj.final_u = u;
    traj.final_v = FastState::from_raw(v);
    Ok(traj)
}

/// Periodic initial value at `u`, the default start for resolved runs.
pub fn periodic_initial(sys: &FastSystem, u: f64, grid: MicroGrid) -> Result<FastState> {
    let cfg = PeriodicSolverConfig::new(REFERENCE_TOL_P, 10_000, PeriodicMethod::Averaged)?;
    let mut ws = MicroWorkspace::new(sys, grid);
    let guess = ws.stationary_guess(u)?;
    Ok(ws.solve(u, &guess, &cfg)?.initial())
}

/// Closed-form slow solution for f ≡ 0: u' = ε/(1+u) gives
/// (1 + u)² = (1 + u0)² + 2εt.
pub fn closed_form_slow_f0(scale: &ScaleParams, t: f64) -> f64 {
    let a = 1.0 + scale.u0();
    (a * a + 2.0 * scale.epsilon() * t).sqrt() - 1.0
}

/// Largest sampled distance ‖v(t) − v_{u(t)}(t mod 1)‖ between the resolved
/// fast trajectory started on the periodic orbit at u0 and the periodic
/// solutions at the current slow value.
pub fn periodic_gap(sys: &FastSystem, scale: &ScaleParams, grid: MicroGrid, n_samples: usize) -> Result<f64> {
    if n_samples < 1 {
        return Err(Error::invariant("periodic_gap", "n_samples must be >= 1"));
    }
    let total = step_count(scale, grid)?;
    let m_per = grid.steps();
    // spread samples over [0, T] and over the phases of the period
    let mut idx: Vec<usize> = (0..n_samples)
        .map(|j| ((j * total) / n_samples + (j * 7919) % m_per).min(total))
        .collect();
    idx.sort_unstable();
    idx.dedup();

    let v_init = periodic_initial(sys, scale.u0(), grid)?;
    let mut picked: Vec<(usize, f64, Vec<f64>)> = Vec::with_capacity(idx.len());
    let mut next = 0;
    run_resolved_with(sys, scale, grid, &v_init, total.max(1), |m, _, u, v| {
        if next < idx.len() && idx[next] == m {
            picked.push((m, u, v.to_vec()));
            next += 1;
        }
    })?;

    let cfg = PeriodicSolverConfig::new(REFERENCE_TOL_P, 10_000, PeriodicMethod::Averaged)?;
    let mut ws = MicroWorkspace::new(sys, grid);
    let mut guess = v_init.into_inner();
    let mut gap = 0.0_f64;
    for (m, u, v) in picked {
        let sol = ws.solve(u, &guess, &cfg)?;
        gap = gap.max(diff_norm(&v, sol.sample_slice(m % m_per)));
        guess = sol.initial().into_inner();
    }
    Ok(gap)
}

/// Trapezoid integral over one period starting at stored node `j`, for a
/// trajectory stored at full resolution.
fn window_trapezoid(values: &[f64], j: usize, m: usize, k: f64) -> f64 {
    let inner: f64 = values[j + 1..j + m].iter().sum();
    k * (inner + 0.5 * (values[j] + values[j + m]))
}

fn require_full_resolution(traj: &ResolvedTrajectory, what: &'static str) -> Result<usize> {
    if traj.stride != 1 {
        return Err(Error::invariant(what, "needs a trajectory stored with stride 1"));
    }
    let m = traj.grid.steps();
    if traj.len() < m + 1 {
        return Err(Error::invariant(what, "trajectory shorter than one period"));
    }
    Ok(m)
}

/// max over window starts t of |∫_t^{t+1} R(U(t), v(s)) − R(u(s), v(s)) ds|
/// with U(t) = ∫_t^{t+1} u(s) ds, evaluated every `window_stride` nodes.
pub fn averaging_error(sys: &FastSystem, traj: &ResolvedTrajectory, window_stride: usize) -> Result<f64> {
    let m = require_full_resolution(traj, "averaging_error")?;
    let k = traj.grid.step();
    let sigma: Vec<f64> = (0..traj.len()).map(|j| sys.sigma_of(traj.fast_slice(j))).collect();
    let mut worst = 0.0_f64;
    let mut j = 0;
    while j + m < traj.len() {
        let avg_u = window_trapezoid(&traj.slow, j, m, k);
        let diff: Vec<f64> = (j..=j + m)
            .map(|s| reaction_value(avg_u, sigma[s]) - reaction_value(traj.slow[s], sigma[s]))
            .collect();
        worst = worst.max(window_trapezoid(&diff, 0, m, k).abs());
        j += window_stride.max(1);
    }
    Ok(worst)
}

/// max over window starts t of |u(t) − ∫_t^{t+1} u(s) ds|, the size of the
/// slow variable's deviation from its period average.
pub fn slow_window_deviation(traj: &ResolvedTrajectory) -> Result<f64> {
    let m = require_full_resolution(traj, "slow_window_deviation")?;
    let k = traj.grid.step();
    let mut worst = 0.0_f64;
    for j in 0..traj.len() - m {
        worst = worst.max((traj.slow[j] - window_trapezoid(&traj.slow, j, m, k)).abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::presets;
    use crate::study::richardson_extrapolate;

    #[test]
    fn closed_form_examples() {
        let s = presets::default_scale();
        assert_eq!(closed_form_slow_f0(&s, 0.0), 0.0);
        assert!((closed_form_slow_f0(&s, 1000.0) - 0.7320508).abs() < 1e-7);
        let s2 = ScaleParams::new(0.5, 1.0, 1.0, 0.0).unwrap();
        assert!((closed_form_slow_f0(&s2, 1.0) - 0.4142136).abs() < 1e-7);
    }

    #[test]
    fn unforced_matches_closed_form() {
        let sys = presets::scalar_unforced();
        let scale = presets::default_scale();
        let traj = run_resolved(&sys, &scale, MicroGrid::new(100).unwrap(), &FastState::zeros(1), 1000).unwrap();
        assert!((traj.final_u - (3f64.sqrt() - 1.0)).abs() <= 1e-5);
        assert_eq!(traj.steps, 100_000);
        assert_eq!(traj.final_time(), 1000.0);
        assert_eq!(traj.len(), 101);
        assert!(traj.slow.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn frozen_slow_variable_relaxes_to_periodic_orbit() {
        let sys = presets::scalar_default();
        let u0 = 0.25;
        let scale = ScaleParams::frozen(8.0, 1.0, u0).unwrap();
        let grid = MicroGrid::new(100).unwrap();
        let traj = run_resolved(&sys, &scale, grid, &FastState::zeros(1), 100).unwrap();
        assert!(traj.slow.iter().all(|&u| u == u0));
        // stored nodes are the period starts
        let d: Vec<f64> = traj.slow.windows(2).enumerate().map(|(p, _)| {
            (traj.fast_slice(p + 1)[0] - traj.fast_slice(p)[0]).abs()
        }).collect();
        let expected = (-(1.0 + u0)).exp();
        for w in d.windows(2) {
            assert!((w[1] / w[0] / expected - 1.0).abs() < 0.1);
        }
    }

    #[test]
    fn second_order_in_fast_step() {
        let sys = presets::scalar_default();
        let scale = presets::default_scale();
        let u_t = |m: usize| {
            let grid = MicroGrid::new(m).unwrap();
            let v0 = periodic_initial(&sys, 0.0, grid).unwrap();
            run_resolved(&sys, &scale, grid, &v0, 1_000_000).unwrap().final_u
        };
        let vals = [u_t(50), u_t(100), u_t(200), u_t(400)];
        let extrap = richardson_extrapolate([vals[1], vals[2], vals[3]]);
        let errs: Vec<f64> = vals.iter().map(|v| (v - extrap.limit).abs()).collect();
        for w in errs[..3].windows(2) {
            let ratio = w[0] / w[1];
            assert!((3.2..=4.8).contains(&ratio), "ratio {ratio}");
        }
    }

    #[test]
    fn infeasible_cost_is_refused() {
        let sys = presets::scalar_default();
        let scale = ScaleParams::new(1e-6, 2.5e6, 1.0, 0.0).unwrap();
        let err = run_resolved(&sys, &scale, MicroGrid::new(800).unwrap(), &FastState::zeros(1), 1).unwrap_err();
        match err {
            Error::InfeasibleCost { projected_steps, .. } => assert_eq!(projected_steps, 2.0e9),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_integral_horizon_is_rejected() {
        let sys = presets::scalar_default();
        let scale = ScaleParams::new(1e-3, 10.005, 1.0, 0.0).unwrap();
        assert!(run_resolved(&sys, &scale, MicroGrid::new(100).unwrap(), &FastState::zeros(1), 1).is_err());
    }

    #[test]
    fn observer_sees_every_node() {
        let sys = presets::modal_default();
        let scale = presets::default_scale().with_t_end(3.0).unwrap();
        let grid = MicroGrid::new(20).unwrap();
        let mut seen = 0usize;
        let traj = run_resolved_with(&sys, &scale, grid, &FastState::zeros(4), 7, |m, _, _, v| {
            assert_eq!(m, seen);
            assert_eq!(v.len(), 4);
            seen += 1;
        })
        .unwrap();
        assert_eq!(seen, 61);
        // 0, 7, ..., 56, 60
        assert_eq!(traj.len(), 10);
        assert_eq!(traj.final_time(), 3.0);
    }

    #[test]
    fn periodic_gap_examples() {
        let grid = MicroGrid::new(50).unwrap();
        let frozen = ScaleParams::frozen(20.0, 1.0, 0.0).unwrap();
        let floor = periodic_gap(&presets::scalar_default(), &frozen, grid, 50).unwrap();
        assert!(floor < 1e-10, "floor {floor}");

        let unforced = presets::scalar_unforced();
        let scale = ScaleParams::new(1e-2, 100.0, 1.0, 0.0).unwrap();
        assert_eq!(periodic_gap(&unforced, &scale, grid, 50).unwrap(), 0.0);
    }
}
