//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the process exits non-zero if any of them fails.

use std::f64::consts::PI;
use std::time::Instant;

use msperiodic::micro::{
    cn_cycle, periodic_exact_scalar, solve_periodic_averaged, solve_periodic_fixed_point, stationary_guess,
};
use msperiodic::model::presets;
use msperiodic::report::{write_macro_csv, write_micro_csv, write_resolved_csv, write_study_csv, write_tolp_csv};
use msperiodic::resolved::{
    averaging_error, closed_form_slow_f0, periodic_gap, periodic_initial, projected_steps, run_resolved,
};
use msperiodic::study::{
    epsilon_scaling_of_ck, fit_convergence, log_log_slope, richardson_extrapolate, speedup_of_run, tolp_sensitivity,
    Reference, StudyPlan, StudyTable,
};
use msperiodic::{
    run_multiscale, DecayLaw, Error, FastState, FastSystem, Forcing, MacroGrid, MicroGrid, PeriodicMethod,
    PeriodicSolverConfig, ScaleParams,
};

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: String) -> Self {
        Self { pass, detail }
    }
}

type Check = fn() -> Outcome;

fn main() {
    let checks: [(&str, Check); 10] = [
        ("micro solver order", micro_order),
        ("periodic oracle match", periodic_oracle),
        ("acceleration", acceleration),
        ("error decomposition sweep", decomposition_sweep),
        ("fit reproduction", fit_reproduction),
        ("unforced closed form", unforced_closed_form),
        ("periodic-solution properties", periodic_properties),
        ("tol_P sensitivity", tolp_study),
        ("cost accounting", cost_accounting),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in checks.iter().enumerate() {
        let started = Instant::now();
        let out = std::panic::catch_unwind(check).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Outcome::new(false, format!("panicked: {msg}"))
        });
        let verdict = if out.pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {} ({name}): {verdict} [{:.2}s] {}",
            i + 1,
            started.elapsed().as_secs_f64(),
            out.detail
        );
        if !out.pass {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}

// shared sweep for criteria 4 and 5

const SWEEP_M: [usize; 9] = [10, 20, 25, 40, 50, 100, 200, 400, 800];
const SWEEP_N: [usize; 7] = [16, 32, 64, 128, 256, 512, 1024];
const SWEEP_TOL: f64 = 1e-10;
const SWEEP_EPS: [f64; 2] = [1e-3, 1e-4];

struct Sweep {
    table: StudyTable,
    seconds: f64,
}

fn sweep() -> &'static Sweep {
    static SWEEP: std::sync::OnceLock<Sweep> = std::sync::OnceLock::new();
    SWEEP.get_or_init(|| {
        let plan = StudyPlan {
            system: presets::scalar_default(),
            scale: presets::default_scale(),
            micro_steps: SWEEP_M.to_vec(),
            macro_steps: SWEEP_N.iter().map(|&n| 1000.0 / n as f64).collect(),
            tolerances: vec![SWEEP_TOL],
            epsilons: SWEEP_EPS.to_vec(),
            scale_horizon: true,
            method: PeriodicMethod::Averaged,
            max_cycles: 1000,
            reference: Reference::Resolved { coarse_steps: 200 },
        };
        let workers = std::thread::available_parallelism().map_or(1, |n| n.get());
        let started = Instant::now();
        let table = plan.run(workers).expect("sweep runs");
        Sweep {
            table,
            seconds: started.elapsed().as_secs_f64(),
        }
    })
}

fn reference(table: &StudyTable, eps: f64) -> f64 {
    table
        .references
        .iter()
        .find(|(e, _)| *e == eps)
        .and_then(|(_, r)| *r)
        .expect("resolved reference")
        .limit
}

fn value_at(table: &StudyTable, eps: f64, m: usize, n: usize) -> f64 {
    let k = 1.0 / m as f64;
    let kk = 1000.0 / n as f64;
    table
        .rows
        .iter()
        .find(|r| r.epsilon == eps && r.k == k && r.macro_step == kk && r.completed)
        .unwrap_or_else(|| panic!("no completed row for eps={eps} M={m} N={n}"))
        .u_t
}

/// Limit of U as K → 0 and then k → 0, Richardson in each direction over the
/// three finest grid values.
fn double_limit(table: &StudyTable, eps: f64) -> f64 {
    let fine_n = &SWEEP_N[SWEEP_N.len() - 3..];
    let fine_m = &SWEEP_M[SWEEP_M.len() - 3..];
    let mut in_k = [0.0; 3];
    for (i, &m) in fine_m.iter().enumerate() {
        let vals = [
            value_at(table, eps, m, fine_n[0]),
            value_at(table, eps, m, fine_n[1]),
            value_at(table, eps, m, fine_n[2]),
        ];
        in_k[i] = richardson_extrapolate(vals).limit;
    }
    richardson_extrapolate(in_k).limit
}

/// Points of a one-parameter sweep whose error is at least ten times the
/// sweep's own floor, together with the fitted slope.
fn pre_plateau_slope(points: &[(f64, f64)], limit: f64, u_ref: f64) -> (Option<f64>, usize, f64) {
    let floor = (limit - u_ref).abs();
    let kept: Vec<(f64, f64)> = points
        .iter()
        .map(|&(h, u)| (h, (u - u_ref).abs()))
        .filter(|&(_, e)| e > 10.0 * floor)
        .collect();
    (log_log_slope(&kept), kept.len(), floor)
}

fn sci(values: impl Iterator<Item = f64>) -> String {
    let parts: Vec<String> = values.map(|v| format!("{v:.3e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn micro_order() -> Outcome {
    let started = Instant::now();
    let sys = presets::scalar_default();
    let lam = 1.0;
    let w = 2.0 * PI;
    // periodic solution of v' + v = sin(2πt)
    let exact = |t: f64| (lam * (w * t).sin() - w * (w * t).cos()) / (lam * lam + w * w);
    let mut pts = Vec::new();
    for m in [25, 50, 100, 200] {
        let grid = MicroGrid::new(m).unwrap();
        let sol = cn_cycle(&sys, 0.0, &FastState::scalar(exact(0.0)), grid).unwrap();
        let err = (0..=m)
            .map(|j| (sol.sample_slice(j)[0] - exact(grid.time(j))).abs())
            .fold(0.0, f64::max);
        pts.push((grid.step(), err));
    }
    let order = log_log_slope(&pts).unwrap_or(f64::NAN);
    let secs = started.elapsed().as_secs_f64();
    Outcome::new(
        (1.8..=2.2).contains(&order) && secs < 1.0,
        format!("order={order:.4} runtime={secs:.3}s errors={}", sci(pts.iter().map(|p| p.1))),
    )
}

fn periodic_oracle() -> Outcome {
    let sys = presets::scalar_default();
    let grid = MicroGrid::new(400).unwrap();
    let tol = 1e-8;
    let cfg = PeriodicSolverConfig::new(tol, 10_000, PeriodicMethod::Averaged).unwrap();
    let zero = FastState::zeros(1);
    let avg = solve_periodic_averaged(&sys, 0.0, &zero, grid, &cfg).unwrap();
    let fp = solve_periodic_fixed_point(&sys, 0.0, &zero, grid, &cfg).unwrap();
    let exact = periodic_exact_scalar(&sys, 0.0, 4096).unwrap();
    let oracle_gap = (avg.initial().as_slice()[0] - exact).abs();
    let mutual = avg.max_distance(&fp);
    Outcome::new(
        oracle_gap <= 1e-4 && mutual <= 2.0 * tol,
        format!("|averaged - exact|={oracle_gap:.3e} |averaged - fixed point|={mutual:.3e}"),
    )
}

fn acceleration() -> Outcome {
    let grid = MicroGrid::new(200).unwrap();
    let mut pass = true;
    let mut detail = String::new();
    for lam in [0.25, 0.5, 1.0] {
        let sys = FastSystem::scalar(DecayLaw::constant(lam, 1.0).unwrap(), Forcing::zero()).unwrap();
        let predicted = ((-lam).exp() + ((-lam).exp() - 1.0) / lam).abs();
        let cfg = PeriodicSolverConfig::new(1e-12, 10_000, PeriodicMethod::Averaged).unwrap();
        let avg = solve_periodic_averaged(&sys, 0.0, &FastState::scalar(1.0), grid, &cfg).unwrap();
        let h = avg.residual_history();
        let measured = (h[1] / h[0]).abs();
        let rel = (measured / predicted - 1.0).abs();

        let cfg6 = cfg.with_tol_p(1e-6).unwrap();
        let n_avg = solve_periodic_averaged(&sys, 0.0, &FastState::scalar(1.0), grid, &cfg6)
            .unwrap()
            .cycles_used();
        let n_fp = solve_periodic_fixed_point(&sys, 0.0, &FastState::scalar(1.0), grid, &cfg6)
            .unwrap()
            .cycles_used();
        pass &= rel <= 0.05 && n_avg < n_fp;
        detail.push_str(&format!(
            "λ={lam}: contraction {measured:.4} vs {predicted:.4} ({:.2}%), cycles {n_avg} < {n_fp}; ",
            100.0 * rel
        ));
    }

    // modal preset inside the macro loop at K = k/ε, tol_P = 1e-4
    let sys = presets::modal_default();
    let scale = presets::default_scale();
    let cfg = PeriodicSolverConfig::new(1e-4, 1000, PeriodicMethod::Averaged).unwrap();
    let micro = MicroGrid::new(100).unwrap();
    let macro_grid = MacroGrid::from_step_size(micro.step() / scale.epsilon(), scale.t_end()).unwrap();
    let traj = run_multiscale(&sys, &scale, macro_grid, micro, &cfg).unwrap();
    let warm_max = traj.cycles[1..].iter().copied().max().unwrap_or(0);
    pass &= warm_max <= 5;
    detail.push_str(&format!(
        "modal tol 1e-4: first (cold) solve {} cycles, warm-started max {warm_max}",
        traj.cycles[0]
    ));
    Outcome::new(pass, detail)
}

fn decomposition_sweep() -> Outcome {
    let s = sweep();
    let t = &s.table;
    let eps = SWEEP_EPS[0];
    let u_ref = reference(t, eps);

    // a. K-sweep at k = 1/800
    let m_fine = 800;
    let k_points: Vec<(f64, f64)> = SWEEP_N
        .iter()
        .map(|&n| (1000.0 / n as f64, value_at(t, eps, m_fine, n)))
        .collect();
    let k_limit = richardson_extrapolate([k_points[4].1, k_points[5].1, k_points[6].1]).limit;
    let (slope_k_macro, used_a, floor_a) = pre_plateau_slope(&k_points, k_limit, u_ref);
    let slope_a = slope_k_macro.unwrap_or(f64::NAN);
    let pass_a = (1.7..=2.3).contains(&slope_a);

    // b. k-sweep at K = T/256
    let n_fixed = 256;
    let m_points: Vec<(f64, f64)> = SWEEP_M
        .iter()
        .map(|&m| (1.0 / m as f64, value_at(t, eps, m, n_fixed)))
        .collect();
    let m_limit = richardson_extrapolate([m_points[6].1, m_points[7].1, m_points[8].1]).limit;
    let (slope_k_micro, used_b, floor_b) = pre_plateau_slope(&m_points, m_limit, u_ref);
    let slope_b = slope_k_micro.unwrap_or(f64::NAN);
    let pass_b = (1.7..=2.3).contains(&slope_b);

    // c. plateau at ε and ε/10
    let plateau_hi = (double_limit(t, SWEEP_EPS[0]) - u_ref).abs();
    let plateau_lo = (double_limit(t, SWEEP_EPS[1]) - reference(t, SWEEP_EPS[1])).abs();
    let ratio = plateau_hi / plateau_lo;
    let pass_c = (5.0..=20.0).contains(&ratio);

    let pass_time = s.seconds < 300.0;
    Outcome::new(
        pass_a && pass_b && pass_c && pass_time,
        format!(
            "a: K slope {slope_a:.3} over {used_a} points (floor {floor_a:.2e}); \
             b: k slope {slope_b:.3} over {used_b} points (floor {floor_b:.2e}); \
             c: plateau {plateau_hi:.3e} / {plateau_lo:.3e} = {ratio:.2}; sweep {:.1}s",
            s.seconds
        ),
    )
}

fn fit_reproduction() -> Outcome {
    let t = &sweep().table;
    let hi = fit_convergence(&t.samples(SWEEP_EPS[0], SWEEP_TOL)).unwrap();
    let lo = fit_convergence(&t.samples(SWEEP_EPS[1], SWEEP_TOL)).unwrap();
    let ratio = epsilon_scaling_of_ck(&hi, &lo).unwrap();
    let orders = [hi.q_micro, hi.q_macro, lo.q_micro, lo.q_macro];
    let pass = orders.iter().all(|q| (1.7..=2.3).contains(q)) && (50.0..=200.0).contains(&ratio);
    Outcome::new(
        pass,
        format!(
            "ε=1e-3: q_k={:.3} q_K={:.3}; ε=1e-4: q_k={:.3} q_K={:.3}; C_K ratio {ratio:.1}",
            hi.q_micro, hi.q_macro, lo.q_micro, lo.q_macro
        ),
    )
}

fn unforced_closed_form() -> Outcome {
    let sys = presets::scalar_unforced();
    let scale = presets::default_scale();
    let exact = 3.0_f64.sqrt() - 1.0;
    assert_eq!(closed_form_slow_f0(&scale, 1000.0), exact);
    let grid = MicroGrid::new(100).unwrap();
    let res = run_resolved(&sys, &scale, grid, &FastState::zeros(1), 1000).unwrap();
    let err_res = (res.final_u - exact).abs();
    let cfg = PeriodicSolverConfig::new(1e-10, 1000, PeriodicMethod::Averaged).unwrap();
    let ms = run_multiscale(&sys, &scale, MacroGrid::from_step_size(1.0, 1000.0).unwrap(), grid, &cfg).unwrap();
    let err_ms = (ms.final_value() - exact).abs();
    Outcome::new(
        err_res <= 1e-5 && err_ms <= 1e-3,
        format!("resolved error {err_res:.3e}, multiscale (K=1, M=100) error {err_ms:.3e}"),
    )
}

fn periodic_properties() -> Outcome {
    let tol = 1e-10;
    let grid = MicroGrid::new(200).unwrap();
    let cfg = PeriodicSolverConfig::new(tol, 10_000, PeriodicMethod::Averaged).unwrap();
    let us: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();

    let mut bound_worst = f64::NEG_INFINITY;
    let mut pair_worst = f64::NEG_INFINITY;
    for sys in [presets::scalar_default(), presets::modal_default()] {
        let sols: Vec<_> = us
            .iter()
            .map(|&u| {
                let guess = stationary_guess(&sys, u, grid).unwrap();
                solve_periodic_averaged(&sys, u, &guess, grid, &cfg).unwrap()
            })
            .collect();
        for (sol, &u) in sols.iter().zip(&us) {
            for (i, mode) in sys.modes().iter().enumerate() {
                let bound = 2.0 * mode.forcing.sup_norm() / mode.decay.eval(u) + tol;
                let peak = sol.samples().map(|v| v[i].abs()).fold(0.0, f64::max);
                bound_worst = bound_worst.max(peak - bound);
            }
        }
        for a in 0..us.len() {
            for b in a + 1..us.len() {
                for (i, mode) in sys.modes().iter().enumerate() {
                    let (la, lb) = (mode.decay.eval(us[a]), mode.decay.eval(us[b]));
                    let bound = 4.0 / (la * lb) * (la - lb).abs() * mode.forcing.sup_norm()
                        + 2.0 * tol
                        + grid.step() * grid.step();
                    let gap = sols[a]
                        .samples()
                        .zip(sols[b].samples())
                        .map(|(x, y)| (x[i] - y[i]).abs())
                        .fold(0.0, f64::max);
                    pair_worst = pair_worst.max(gap - bound);
                }
            }
        }
    }

    // linear-in-ε scaling of the periodic gap and the averaging error, ε·T = 1
    let sys = presets::scalar_default();
    let grid = MicroGrid::new(50).unwrap();
    let floor_scale = ScaleParams::frozen(1.0 / 1e-2, 1.0, 0.0).unwrap();
    let gap_floor = periodic_gap(&sys, &floor_scale, grid, 400).unwrap();
    let mut gaps = Vec::new();
    let mut avgs = Vec::new();
    for eps in [1e-2, 1e-3, 1e-4] {
        let scale = ScaleParams::new(eps, 1.0 / eps, 1.0, 0.0).unwrap();
        gaps.push(periodic_gap(&sys, &scale, grid, 400).unwrap() - gap_floor);
        let v0 = periodic_initial(&sys, 0.0, grid).unwrap();
        let traj = run_resolved(&sys, &scale, grid, &v0, 1).unwrap();
        avgs.push(averaging_error(&sys, &traj, 1).unwrap());
    }
    let ratios = |v: &[f64]| [v[1] / v[0], v[2] / v[1]];
    let gap_ratios = ratios(&gaps);
    let avg_ratios = ratios(&avgs);
    let in_band = |r: &[f64; 2]| r.iter().all(|x| (0.05..=0.2).contains(x));

    let pass = bound_worst <= 0.0 && pair_worst <= 0.0 && in_band(&gap_ratios) && in_band(&avg_ratios);
    Outcome::new(
        pass,
        format!(
            "amplitude bound margin {:.3e}, pair bound margin {:.3e}, gap ratios {gap_ratios:.3?} \
             (floor {gap_floor:.1e}), averaging-error ratios {avg_ratios:.3?}",
            -bound_worst, -pair_worst
        ),
    )
}

fn tolp_study() -> Outcome {
    let sys = presets::scalar_default();
    let scale = presets::default_scale();
    let base = PeriodicSolverConfig::new(1e-6, 10_000, PeriodicMethod::Averaged).unwrap();
    let rows = tolp_sensitivity(
        &sys,
        &scale,
        MacroGrid::from_steps(100, 1000.0).unwrap(),
        MicroGrid::new(100).unwrap(),
        &base,
        &[1e-1, 1e-2, 1e-3, 1e-4, 1e-8],
        1,
    )
    .unwrap();
    let diffs: Vec<f64> = rows.iter().filter(|r| r.tol_p > 1e-8).map(|r| r.difference).collect();
    let monotone = diffs.windows(2).all(|w| w[1] <= w[0]);
    let small = diffs.iter().all(|&d| d <= 1e-3);
    Outcome::new(
        diffs.len() == 4 && monotone && small,
        format!("differences for tol_P 1e-1..1e-4: {}", sci(diffs.iter().copied())),
    )
}

fn cost_accounting() -> Outcome {
    let sys = presets::scalar_default();
    let cfg = PeriodicSolverConfig::new(1e-6, 1000, PeriodicMethod::Averaged).unwrap();

    // counters on a case small enough to resolve: K = k/ε
    let scale = presets::default_scale();
    let grid = MicroGrid::new(100).unwrap();
    let macro_grid = MacroGrid::from_step_size(grid.step() / scale.epsilon(), scale.t_end()).unwrap();
    let ms = run_multiscale(&sys, &scale, macro_grid, grid, &cfg).unwrap();
    let v0 = periodic_initial(&sys, 0.0, grid).unwrap();
    let res = run_resolved(&sys, &scale, grid, &v0, 100_000).unwrap();
    let est = speedup_of_run(&ms, &scale, macro_grid).unwrap();
    let counters = est.e_fwd == res.steps as f64 && est.e_ms == ms.cn_steps as f64;
    let form_small = est.epsilon_form.is_some_and(|f| ((est.ratio - f) / f).abs() <= 1e-12);
    let small_detail = format!(
        "ε=1e-3: E_fwd {} = {} resolved steps, E_ms {} = {} CN steps",
        est.e_fwd, res.steps, est.e_ms, ms.cn_steps
    );

    // ε = 1e-6: resolution is refused, the multiscale run completes
    let scale = ScaleParams::new(1e-6, 1.4e6, 1.0, 0.0).unwrap();
    let grid = MicroGrid::new(800).unwrap();
    let projected = projected_steps(&scale, grid);
    let refused = match run_resolved(&sys, &scale, grid, &FastState::zeros(1), 1000) {
        Err(Error::InfeasibleCost { projected_steps, .. }) => projected_steps == scale.t_end() / grid.step(),
        _ => false,
    };
    let macro_grid = MacroGrid::from_step_size(grid.step() / scale.epsilon(), scale.t_end()).unwrap();
    let ms = run_multiscale(&sys, &scale, macro_grid, grid, &cfg).unwrap();
    let est_big = speedup_of_run(&ms, &scale, macro_grid).unwrap();
    let form = grid.step() / (scale.epsilon() * ms.mean_cycles());
    let form_big = est_big.epsilon_form == Some(form) && ((est_big.ratio - form) / form).abs() <= 1e-12;
    let big_counter = est_big.e_ms == ms.cn_steps as f64 && est_big.e_fwd == projected;

    Outcome::new(
        counters && form_small && refused && ms.is_completed() && form_big && big_counter,
        format!(
            "{small_detail}; ε=1e-6: projected E_fwd {projected:e} refused={refused}, \
             multiscale completed={} (U_T {:.6}), ratio {:.3} vs k/(ε n̄) {form:.3}",
            ms.is_completed(),
            ms.final_value(),
            est_big.ratio
        ),
    )
}

fn csv_bytes<F: Fn(&mut Vec<u8>)>(f: F) -> Vec<u8> {
    let mut buf = Vec::new();
    f(&mut buf);
    buf
}

fn determinism() -> Outcome {
    let sys = presets::scalar_default();
    let scale = presets::default_scale();
    let cfg = PeriodicSolverConfig::new(1e-8, 1000, PeriodicMethod::Averaged).unwrap();
    let grid = MicroGrid::new(100).unwrap();
    let macro_grid = MacroGrid::from_steps(64, 1000.0).unwrap();

    let macro_csv = || {
        csv_bytes(|b| {
            let t = run_multiscale(&sys, &scale, macro_grid, grid, &cfg).unwrap();
            write_macro_csv(b, &t).unwrap();
        })
    };
    let resolved_csv = || {
        csv_bytes(|b| {
            let v0 = periodic_initial(&sys, 0.0, grid).unwrap();
            let t = run_resolved(&sys, &scale, grid, &v0, 500).unwrap();
            write_resolved_csv(b, &t).unwrap();
        })
    };
    let micro_csv = || {
        csv_bytes(|b| {
            let s = solve_periodic_averaged(&presets::modal_default(), 0.3, &FastState::zeros(4), grid, &cfg).unwrap();
            write_micro_csv(b, &s).unwrap();
        })
    };
    let plan = StudyPlan {
        system: sys.clone(),
        scale,
        micro_steps: vec![20, 40],
        macro_steps: vec![1000.0 / 32.0, 1000.0 / 64.0],
        tolerances: vec![1e-8],
        epsilons: vec![1e-3, 5e-4],
        scale_horizon: true,
        method: PeriodicMethod::Averaged,
        max_cycles: 1000,
        reference: Reference::Unforced,
    };
    let study_csv = |workers: usize| csv_bytes(|b| write_study_csv(b, &plan.run(workers).unwrap().rows).unwrap());
    let tolp_csv = |workers: usize| {
        csv_bytes(|b| {
            let rows =
                tolp_sensitivity(&sys, &scale, macro_grid, grid, &cfg, &[1e-2, 1e-4, 1e-8], workers).unwrap();
            write_tolp_csv(b, &rows).unwrap();
        })
    };

    let checks = [
        ("macro", macro_csv() == macro_csv()),
        ("resolved", resolved_csv() == resolved_csv()),
        ("periodic", micro_csv() == micro_csv()),
        ("study", study_csv(1) == study_csv(1) && study_csv(1) == study_csv(3)),
        ("tolp", tolp_csv(1) == tolp_csv(2)),
    ];
    let differing: Vec<&str> = checks.iter().filter(|c| !c.1).map(|c| c.0).collect();
    Outcome::new(
        differing.is_empty(),
        if differing.is_empty() {
            "macro, resolved, periodic, study and tol_P CSVs byte-identical across runs and worker counts".into()
        } else {
            format!("differing outputs: {differing:?}")
        },
    )
}
