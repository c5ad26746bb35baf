//! Convergence studies: Richardson extrapolation, the power-law error fit,
//! cost accounting and parameter sweeps.

use nalgebra::{Matrix5, Vector5};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::micro::{MicroGrid, PeriodicMethod, PeriodicSolverConfig};
use crate::model::{FastState, FastSystem, ScaleParams};
use crate::multiscale::{run_multiscale, MacroGrid, MacroTrajectory};
use crate::resolved::{closed_form_slow_f0, periodic_initial, run_resolved};

/// Result of extrapolating a halving chain v_k, v_{k/2}, v_{k/4}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Richardson {
    pub limit: f64,
    /// log2(|v_k − v_{k/2}| / |v_{k/2} − v_{k/4}|); `None` when a
    /// successive difference vanishes.
    pub order: Option<f64>,
    /// False when the differences do not shrink geometrically with a common
    /// sign, in which case `limit` is the finest value.
    pub extrapolated: bool,
}

pub fn richardson_extrapolate(values: [f64; 3]) -> Richardson {
    let [coarse, mid, fine] = values;
    let d1 = coarse - mid;
    let d2 = mid - fine;
    let unextrapolated = |order| Richardson {
        limit: fine,
        order,
        extrapolated: false,
    };
    if d1 == 0.0 || d2 == 0.0 {
        return unextrapolated(None);
    }
    let rho = (d1 / d2).abs();
    let order = Some(rho.log2());
    if d1 * d2 < 0.0 || rho <= 1.0 {
        return unextrapolated(order);
    }
    Richardson {
        limit: fine - d2 / (rho - 1.0),
        order,
        extrapolated: true,
    }
}

/// One observation U(k, K).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceSample {
    /// micro step k
    pub k: f64,
    /// macro step K
    pub macro_step: f64,
    pub value: f64,
}

/// Fit of U(k, K) = U* + C_k k^{q_k} + C_K K^{q_K}.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub u_star: f64,
    pub c_micro: f64,
    pub q_micro: f64,
    pub c_macro: f64,
    pub q_macro: f64,
    /// Euclidean norm of the residual vector.
    pub residual_norm: f64,
    /// Relative standard errors of (U*, C_k, q_k, C_K, q_K) from
    /// s²(JᵀJ)⁻¹ at the optimum; infinite when the curvature is singular.
    pub confidence: [f64; 5],
    pub iterations: usize,
}

impl FitResult {
    fn params(&self) -> Vector5<f64> {
        Vector5::new(self.u_star, self.c_micro, self.q_micro, self.c_macro, self.q_macro)
    }

    pub fn predict(&self, k: f64, macro_step: f64) -> f64 {
        model_value(&self.params(), k, macro_step)
    }
}

pub const FIT_MAX_ITERATIONS: usize = 500;

fn model_value(p: &Vector5<f64>, k: f64, kk: f64) -> f64 {
    p[0] + p[1] * k.powf(p[2]) + p[3] * kk.powf(p[4])
}

fn residuals(p: &Vector5<f64>, samples: &[ConvergenceSample]) -> Vec<f64> {
    samples.iter().map(|s| model_value(p, s.k, s.macro_step) - s.value).collect()
}

fn cost(r: &[f64]) -> f64 {
    r.iter().map(|x| x * x).sum()
}

fn jacobian_row(p: &Vector5<f64>, k: f64, kk: f64) -> [f64; 5] {
    let a = k.powf(p[2]);
    let b = kk.powf(p[4]);
    [1.0, a, p[1] * a * k.ln(), b, p[3] * b * kk.ln()]
}

/// (JᵀJ, Jᵀr)
fn normal_equations(p: &Vector5<f64>, samples: &[ConvergenceSample], r: &[f64]) -> (Matrix5<f64>, Vector5<f64>) {
    let mut jtj = Matrix5::zeros();
    let mut jtr = Vector5::zeros();
    for (s, &ri) in samples.iter().zip(r) {
        let row = Vector5::from(jacobian_row(p, s.k, s.macro_step));
        jtj += row * row.transpose();
        jtr += row * ri;
    }
    (jtj, jtr)
}

fn distinct(mut xs: Vec<f64>) -> Vec<f64> {
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    xs
}

/// Exponent from the log-log slope of successive differences along one
/// slice, plus the coefficient solved from its two end points.
fn slice_power_law(points: &[(f64, f64)]) -> (f64, f64) {
    let mut slopes = Vec::new();
    let diffs: Vec<(f64, f64)> = points
        .windows(2)
        .map(|w| (w[0].0, (w[1].1 - w[0].1).abs()))
        .collect();
    for w in diffs.windows(2) {
        let s = (w[1].1.ln() - w[0].1.ln()) / (w[1].0.ln() - w[0].0.ln());
        if s.is_finite() && s > 0.0 {
            slopes.push(s);
        }
    }
    let q = if slopes.is_empty() {
        2.0
    } else {
        slopes.iter().sum::<f64>() / slopes.len() as f64
    };
    let (x0, y0) = points[0];
    let (x1, y1) = points[points.len() - 1];
    let denom = x1.powf(q) - x0.powf(q);
    let c = if denom != 0.0 { (y1 - y0) / denom } else { 0.0 };
    (q, c)
}

fn initial_guess(samples: &[ConvergenceSample], ks: &[f64], kks: &[f64]) -> Vector5<f64> {
    let (k_min, kk_min) = (ks[0], kks[0]);
    let lookup = |k: f64, kk: f64| {
        samples
            .iter()
            .find(|s| s.k == k && s.macro_step == kk)
            .map(|s| s.value)
    };
    let k_slice: Vec<(f64, f64)> = ks
        .iter()
        .filter_map(|&k| lookup(k, kk_min).map(|v| (k, v)))
        .collect();
    let kk_slice: Vec<(f64, f64)> = kks
        .iter()
        .filter_map(|&kk| lookup(k_min, kk).map(|v| (kk, v)))
        .collect();
    let (q_k, c_k) = if k_slice.len() >= 2 { slice_power_law(&k_slice) } else { (2.0, 0.0) };
    let (q_kk, c_kk) = if kk_slice.len() >= 2 { slice_power_law(&kk_slice) } else { (2.0, 0.0) };
    let corner = lookup(k_min, kk_min).unwrap_or_else(|| samples.iter().map(|s| s.value).sum::<f64>() / samples.len() as f64);
    let u_star = corner - c_k * k_min.powf(q_k) - c_kk * kk_min.powf(q_kk);
    Vector5::new(u_star, c_k, q_k, c_kk, q_kk)
}

fn confidence(p: &Vector5<f64>, jtj: &Matrix5<f64>, sum_sq: f64, n: usize) -> [f64; 5] {
    let mut out = [f64::INFINITY; 5];
    if n <= 5 {
        return out;
    }
    let s2 = sum_sq / (n - 5) as f64;
    if let Some(inv) = jtj.try_inverse() {
        for i in 0..5 {
            let var = s2 * inv[(i, i)];
            if var >= 0.0 {
                out[i] = var.sqrt() / p[i].abs();
            }
        }
    }
    out
}

/// Damped Gauss–Newton (Levenberg–Marquardt with diag(JᵀJ) scaling) fit of
/// the five-parameter error model.
pub fn fit_convergence(samples: &[ConvergenceSample]) -> Result<FitResult> {
    if samples.len() < 6 {
        return Err(Error::DegenerateDesign(format!(
            "{} samples, at least 6 are needed",
            samples.len()
        )));
    }
    if samples
        .iter()
        .any(|s| !(s.k > 0.0 && s.macro_step > 0.0 && s.value.is_finite()))
    {
        return Err(Error::DegenerateDesign(
            "step sizes must be positive and values finite".into(),
        ));
    }
    let ks = distinct(samples.iter().map(|s| s.k).collect());
    let kks = distinct(samples.iter().map(|s| s.macro_step).collect());
    if ks.len() < 2 || kks.len() < 2 {
        return Err(Error::DegenerateDesign(format!(
            "{} distinct k and {} distinct K, at least 2 of each are needed",
            ks.len(),
            kks.len()
        )));
    }

    let mut p = initial_guess(samples, &ks, &kks);
    let mut r = residuals(&p, samples);
    let mut c = cost(&r);
    let mut mu = 1e-3;
    let mut converged = c == 0.0;
    let mut iterations = 0;

    while !converged && iterations < FIT_MAX_ITERATIONS {
        iterations += 1;
        let (jtj, jtr) = normal_equations(&p, samples, &r);
        let max_diag = (0..5).map(|i| jtj[(i, i)]).fold(0.0, f64::max);
        let mut accepted = false;
        while mu < 1e20 {
            let mut a = jtj;
            for i in 0..5 {
                a[(i, i)] += mu * jtj[(i, i)].max(f64::EPSILON * max_diag);
            }
            let Some(step) = a.lu().solve(&(-jtr)) else {
                mu *= 4.0;
                continue;
            };
            let trial = p + step;
            let r_trial = residuals(&trial, samples);
            let c_trial = cost(&r_trial);
            if c_trial.is_finite() && c_trial < c {
                let small_step = (0..5).all(|i| step[i].abs() <= 1e-12 * (trial[i].abs() + 1e-300));
                let small_gain = c - c_trial <= 1e-15 * c;
                p = trial;
                r = r_trial;
                c = c_trial;
                mu = (mu / 3.0).max(1e-12);
                converged = small_step || small_gain || c == 0.0;
                accepted = true;
                break;
            }
            mu *= 4.0;
        }
        if !accepted {
            // no descent direction left at machine precision
            converged = true;
        }
    }

    let (jtj, _) = normal_equations(&p, samples, &r);
    let fit = FitResult {
        u_star: p[0],
        c_micro: p[1],
        q_micro: p[2],
        c_macro: p[3],
        q_macro: p[4],
        residual_norm: c.sqrt(),
        confidence: confidence(&p, &jtj, c, samples.len()),
        iterations,
    };
    if !converged || !(fit.q_micro > 0.0 && fit.q_macro > 0.0) || !fit.residual_norm.is_finite() {
        return Err(Error::FitFailed {
            iterations,
            residual_norm: fit.residual_norm,
            best: Box::new(fit),
        });
    }
    Ok(fit)
}

/// C_K(ε) / C_K(ε/α) for two fits over the same grids.
pub fn epsilon_scaling_of_ck(at_eps: &FitResult, at_reduced: &FitResult) -> Result<f64> {
    if at_reduced.c_macro == 0.0 || !at_eps.c_macro.is_finite() {
        return Err(Error::invariant(
            "epsilon_scaling_of_ck",
            "macro error constant is zero or non-finite",
        ));
    }
    Ok(at_eps.c_macro / at_reduced.c_macro)
}

/// Fast-step counts of a fully resolved run and of a multiscale run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeedupEstimate {
    /// T / k
    pub e_fwd: f64,
    /// (T / K) · n_period · (1 / k)
    pub e_ms: f64,
    /// e_fwd / e_ms
    pub ratio: f64,
    /// k / (ε n_period), reported when K = k / ε.
    pub epsilon_form: Option<f64>,
}

/// Counts are integers whenever the steps divide T; products of step sizes
/// like 1/M pick up rounding noise, which is removed here.
fn snap_count(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * x.abs().max(1.0) {
        r
    } else {
        x
    }
}

pub fn speedup_estimate(k: f64, macro_step: f64, epsilon: f64, n_period: f64, t_end: f64) -> Result<SpeedupEstimate> {
    if !(k > 0.0 && macro_step > 0.0 && epsilon > 0.0 && n_period > 0.0 && t_end > 0.0) {
        return Err(Error::invariant("speedup_estimate", "all arguments must be positive"));
    }
    let e_fwd = snap_count(t_end / k);
    let n_macro = snap_count(t_end / macro_step);
    let e_ms = snap_count(snap_count(n_macro * n_period) / k);
    let matched = ((macro_step - k / epsilon) / macro_step).abs() <= 1e-9;
    Ok(SpeedupEstimate {
        e_fwd,
        e_ms,
        ratio: e_fwd / e_ms,
        epsilon_form: matched.then(|| k / (epsilon * n_period)),
    })
}

/// Speedup accounting of an actual multiscale trajectory, with n_period the
/// mean number of cycles per macro step. A run stopped by domain exhaustion
/// is accounted over the macro steps it executed.
pub fn speedup_of_run(traj: &MacroTrajectory, scale: &ScaleParams, macro_grid: MacroGrid) -> Result<SpeedupEstimate> {
    speedup_estimate(
        1.0 / traj.micro_steps as f64,
        macro_grid.step_size(),
        scale.epsilon(),
        traj.mean_cycles(),
        macro_grid.time(traj.cycles.len()),
    )
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::invariant("worker pool", e.to_string()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TolPRow {
    pub tol_p: f64,
    pub u_t: f64,
    /// |U(T) − U(T) at the smallest tolerance|
    pub difference: f64,
    pub total_cycles: usize,
    pub cn_steps: u64,
}

/// One multiscale run per tolerance; rows sorted by descending tol_P and
/// compared with the run at the smallest tolerance.
#[allow(clippy::too_many_arguments)]
pub fn tolp_sensitivity(
    sys: &FastSystem,
    scale: &ScaleParams,
    macro_grid: MacroGrid,
    micro_grid: MicroGrid,
    base: &PeriodicSolverConfig,
    tolerances: &[f64],
    workers: usize,
) -> Result<Vec<TolPRow>> {
    if tolerances.is_empty() {
        return Err(Error::invariant("tolp_sensitivity", "empty tolerance list"));
    }
    let mut tols = distinct(tolerances.to_vec());
    tols.reverse();
    let runs: Vec<Result<MacroTrajectory>> = pool(workers)?.install(|| {
        tols.par_iter()
            .map(|&tol| run_multiscale(sys, scale, macro_grid, micro_grid, &base.with_tol_p(tol)?))
            .collect()
    });
    let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
    let reference = runs.last().expect("non-empty").final_value();
    Ok(tols
        .iter()
        .zip(&runs)
        .map(|(&tol_p, t)| TolPRow {
            tol_p,
            u_t: t.final_value(),
            difference: (t.final_value() - reference).abs(),
            total_cycles: t.total_cycles(),
            cn_steps: t.cn_steps,
        })
        .collect())
}

/// How the error column of a sweep is computed.
#[derive(Debug, Clone, PartialEq)]
pub enum Reference {
    None,
    Value(f64),
    /// Closed form for f ≡ 0.
    Unforced,
    /// Resolved runs with M, 2M, 4M steps per period, extrapolated.
    Resolved { coarse_steps: usize },
}

#[derive(Debug, Clone)]
pub struct StudyPlan {
    pub system: FastSystem,
    pub scale: ScaleParams,
    /// Micro step counts M (k = 1/M).
    pub micro_steps: Vec<usize>,
    pub macro_steps: Vec<f64>,
    pub tolerances: Vec<f64>,
    pub epsilons: Vec<f64>,
    /// Keep ε·T fixed when ε varies; otherwise T stays fixed.
    pub scale_horizon: bool,
    pub method: PeriodicMethod,
    pub max_cycles: usize,
    pub reference: Reference,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudyRow {
    pub epsilon: f64,
    pub k: f64,
    pub macro_step: f64,
    pub tol_p: f64,
    pub u_t: f64,
    /// |U_N − u_ref(T)|, NaN without a reference.
    pub error: f64,
    /// CN steps of the multiscale run.
    pub e_ms: u64,
    pub cycles_total: usize,
    pub completed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyTable {
    pub rows: Vec<StudyRow>,
    /// (ε, reference value) pairs in ascending ε.
    pub references: Vec<(f64, Option<Richardson>)>,
}

impl StudyTable {
    pub fn samples(&self, epsilon: f64, tol_p: f64) -> Vec<ConvergenceSample> {
        self.rows
            .iter()
            .filter(|r| r.epsilon == epsilon && r.tol_p == tol_p && r.completed)
            .map(|r| ConvergenceSample {
                k: r.k,
                macro_step: r.macro_step,
                value: r.u_t,
            })
            .collect()
    }
}

impl StudyPlan {
    fn validate(&self) -> Result<()> {
        if self.micro_steps.is_empty()
            || self.macro_steps.is_empty()
            || self.tolerances.is_empty()
            || self.epsilons.is_empty()
        {
            return Err(Error::invariant("StudyPlan", "all sweep lists must be non-empty"));
        }
        Ok(())
    }

    pub fn scale_for(&self, epsilon: f64) -> Result<ScaleParams> {
        let t_end = if self.scale_horizon {
            self.scale.t_end() * self.scale.epsilon() / epsilon
        } else {
            self.scale.t_end()
        };
        ScaleParams::new(epsilon, t_end, self.scale.u_max(), self.scale.u0())
    }

    fn reference_value(&self, scale: &ScaleParams) -> Result<Option<Richardson>> {
        Ok(match self.reference {
            Reference::None => None,
            Reference::Value(v) => Some(Richardson {
                limit: v,
                order: None,
                extrapolated: false,
            }),
            Reference::Unforced => Some(Richardson {
                limit: closed_form_slow_f0(scale, scale.t_end()),
                order: None,
                extrapolated: false,
            }),
            Reference::Resolved { coarse_steps } => {
                let mut vals = [0.0; 3];
                for (i, m) in [coarse_steps, 2 * coarse_steps, 4 * coarse_steps].into_iter().enumerate() {
                    vals[i] = resolved_final(&self.system, scale, m)?;
                }
                Some(richardson_extrapolate(vals))
            }
        })
    }

    /// Runs every grid point on a pool of `workers` threads. Rows come back
    /// sorted by (ε, k, K, tol_P) whatever the completion order.
    pub fn run(&self, workers: usize) -> Result<StudyTable> {
        self.validate()?;
        let pool = pool(workers)?;
        let epsilons = distinct(self.epsilons.clone());
        let references: Vec<(f64, Option<Richardson>)> = pool.install(|| {
            epsilons
                .par_iter()
                .map(|&eps| Ok((eps, self.reference_value(&self.scale_for(eps)?)?)))
                .collect::<Result<Vec<_>>>()
        })?;

        let mut points = Vec::new();
        for &eps in &epsilons {
            for &m in &self.micro_steps {
                for &kk in &self.macro_steps {
                    for &tol in &self.tolerances {
                        points.push((eps, m, kk, tol));
                    }
                }
            }
        }
        let mut rows: Vec<StudyRow> = pool.install(|| {
            points
                .par_iter()
                .map(|&(eps, m, kk, tol)| {
                    let scale = self.scale_for(eps)?;
                    let macro_grid = MacroGrid::from_step_size(kk, scale.t_end())?;
                    let micro_grid = MicroGrid::new(m)?;
                    let cfg = PeriodicSolverConfig::new(tol, self.max_cycles, self.method)?;
                    let traj = run_multiscale(&self.system, &scale, macro_grid, micro_grid, &cfg)?;
                    let reference = references
                        .iter()
                        .find(|(e, _)| *e == eps)
                        .and_then(|(_, r)| r.map(|r| r.limit));
                    Ok(StudyRow {
                        epsilon: eps,
                        k: micro_grid.step(),
                        macro_step: macro_grid.step_size(),
                        tol_p: tol,
                        u_t: traj.final_value(),
                        error: reference.map_or(f64::NAN, |r| (traj.final_value() - r).abs()),
                        e_ms: traj.cn_steps,
                        cycles_total: traj.total_cycles(),
                        completed: traj.is_completed(),
                    })
                })
                .collect::<Result<Vec<_>>>()
        })?;
        rows.sort_by(|a, b| {
            a.epsilon
                .total_cmp(&b.epsilon)
                .then(a.k.total_cmp(&b.k))
                .then(a.macro_step.total_cmp(&b.macro_step))
                .then(a.tol_p.total_cmp(&b.tol_p))
        });
        Ok(StudyTable { rows, references })
    }
}

/// u(T) of a resolved run with `steps` nodes per period, started on the
/// periodic orbit at u0.
pub fn resolved_final(sys: &FastSystem, scale: &ScaleParams, steps: usize) -> Result<f64> {
    let grid = MicroGrid::new(steps)?;
    let v0 = if sys.is_unforced() {
        FastState::zeros(sys.dim())
    } else {
        periodic_initial(sys, scale.u0(), grid)?
    };
    let stride = (scale.t_end() * steps as f64).round().max(1.0) as usize;
    Ok(run_resolved(sys, scale, grid, &v0, stride)?.final_u)
}

/// Least-squares slope of log(y) against log(x).
pub fn log_log_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    slope.is_finite().then_some(slope)
}
