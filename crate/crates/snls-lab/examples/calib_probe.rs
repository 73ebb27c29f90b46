// Scratch calibration probe (removed before release).
use snls_lab::harness::experiments::{
    double_limit_experiment, stopping_time_experiment, uniform_bound_experiment,
    DoubleLimitParams, StoppingTimeParams, UniformBoundParams,
};
use snls_lab::harness::{initial_datum, DataFamily};
use snls_lab::integrator::{solve, SolverConfig};
use snls_lab::noise::build_noise_model;
use snls_lab::nonlinearity::{CutoffSpec, NonlinearityExponent};
use snls_lab::{Scheme, SpectralGrid};

fn cfg(eps: f64, mu: f64, m: f64, dt: f64, horizon: f64) -> SolverConfig {
    SolverConfig {
        exponent: NonlinearityExponent::new(eps, mu).unwrap(),
        cutoff: CutoffSpec::new(m, 0.0).unwrap(),
        dt,
        horizon,
        noise: None,
        scheme: Scheme::Strang,
        record_stride: usize::MAX,
        seed: 0,
    }
}

fn main() {
    let grid = SpectralGrid::new(10.0 * std::f64::consts::PI, 512).unwrap();
    let model = build_noise_model(8, 1.5, 3.0, grid.clone()).unwrap();

    // Accumulator magnitudes for the bank.
    println!("== accumulator totals (eps=0.5, m=inf, T=1)");
    for (f, m) in [
        (DataFamily::Gaussian, 1.0),
        (DataFamily::Gaussian, 2.0),
        (DataFamily::TwoBump, 2.0),
    ] {
        let u0 = initial_datum(grid.clone(), f, m).unwrap();
        let traj = solve(&u0, &cfg(0.5, 1.0, f64::INFINITY, 1e-3, 1.0)).unwrap();
        println!(
            "  {f:?} M={m}: acc={:.4} x2={:.4}",
            traj.accumulator().power_integral(),
            traj.x2_norm(0.0, 1.0).unwrap()
        );
    }

    // X2 trend in m.
    println!("== X2 vs m (gaussian M=2, eps=0.5)");
    let u0 = initial_datum(grid.clone(), DataFamily::Gaussian, 2.0).unwrap();
    for m in [0.5, 1.0, 2.0, 4.0, 8.0, f64::INFINITY] {
        let traj = solve(&u0, &cfg(0.5, 1.0, m, 1e-3, 1.0)).unwrap();
        println!(
            "  m={m:>8}: x2={:.6} tau={:?}",
            traj.x2_norm(0.0, 1.0).unwrap(),
            traj.stopping_time()
        );
    }

    // Deterministic uniform bound slice (criterion-9 shape: mu = 1 only).
    println!("== uniform bound det slice (mu=1, dt=2e-3, full bank)");
    let params = UniformBoundParams {
        grid: grid.clone(),
        epsilons: vec![0.0, 0.125, 0.25, 0.375, 0.5, 0.625, 0.75, 0.875, 1.0],
        scales: vec![0.5, 1.0, 2.0, 4.0, 8.0, f64::INFINITY],
        couplings: vec![1.0],
        offset: 0.0,
        dt: 2e-3,
        horizon: 1.0,
        scheme: Scheme::Strang,
        bank: vec![
            (DataFamily::Gaussian, 1.0),
            (DataFamily::Gaussian, 2.0),
            (DataFamily::Modulated, 1.0),
            (DataFamily::Modulated, 2.0),
            (DataFamily::TwoBump, 1.0),
            (DataFamily::TwoBump, 2.0),
        ],
        noise: None,
        paths: 1,
        rho: 5.0,
        seed: 42,
    };
    let t0 = std::time::Instant::now();
    let rep = uniform_bound_experiment(&params).unwrap();
    println!(
        "  finite={} slope={:.5} ratio={:.4} noninc={:.3} nondec={:.3} pass={} [{:.1}s]",
        rep.all_finite,
        rep.log_slope,
        rep.cell_ratio,
        rep.frac_nonincreasing_in_scale,
        rep.frac_nondecreasing_in_scale,
        rep.pass,
        t0.elapsed().as_secs_f64()
    );
    for (e, v) in &rep.eps_marginal {
        print!("  ({e:.3},{v:.4})");
    }
    println!();

    // Stochastic slice at moderate P.
    println!("== uniform bound stochastic (P=24, gaussian bank, dt=2e-3)");
    let sparams = UniformBoundParams {
        bank: vec![(DataFamily::Gaussian, 1.0), (DataFamily::Gaussian, 2.0)],
        noise: Some(model.clone()),
        paths: 24,
        ..params
    };
    let t0 = std::time::Instant::now();
    let srep = uniform_bound_experiment(&sparams).unwrap();
    println!(
        "  finite={} slope={:.5} se={:.5} pass={} [{:.1}s]",
        srep.all_finite,
        srep.log_slope,
        srep.log_slope_se,
        srep.pass,
        t0.elapsed().as_secs_f64()
    );

    // Double limit.
    println!("== double limit (P=16, dt=2e-3, gaussian M=2)");
    let dparams = DoubleLimitParams {
        grid: grid.clone(),
        epsilons: vec![1.0, 0.5, 0.25, 0.125],
        scales: vec![0.5, 1.0, 2.0, 4.0, 8.0, f64::INFINITY],
        coupling: 1.0,
        offset: 0.0,
        dt: 2e-3,
        horizon: 1.0,
        scheme: Scheme::Strang,
        family: DataFamily::Gaussian,
        l2_norm: 2.0,
        noise: Some(model.clone()),
        paths: 16,
        rho: 5.0,
        seed: 42,
    };
    let t0 = std::time::Instant::now();
    let drep = double_limit_experiment(&dparams).unwrap();
    println!(
        "  [{:.1}s] diag scale: {:?}",
        t0.elapsed().as_secs_f64(),
        drep.diagonal_scale
            .iter()
            .map(|p| (p.0, (p.1 * 1e4).round() / 1e4))
            .collect::<Vec<_>>()
    );
    println!(
        "  diag eps:   {:?}",
        drep.diagonal_epsilon
            .iter()
            .map(|p| (p.0, (p.1 * 1e4).round() / 1e4))
            .collect::<Vec<_>>()
    );
    println!(
        "  corner d={:.3e} gap={:.4} bound={:.4} mono=({}, {}) pass={}",
        drep.corner_d_ref,
        drep.corner_gap,
        drep.corner_bound,
        drep.monotone_in_scale,
        drep.monotone_in_epsilon,
        drep.pass
    );

    // Deterministic double limit slice: saturation equality.
    println!("== double limit deterministic slice");
    let ddet = DoubleLimitParams {
        noise: None,
        paths: 1,
        ..dparams
    };
    let drep2 = double_limit_experiment(&ddet).unwrap();
    println!(
        "  diag scale: {:?}",
        drep2
            .diagonal_scale
            .iter()
            .map(|p| (p.0, p.1))
            .collect::<Vec<_>>()
    );

    // Stopping time.
    println!("== stopping time (P=32, dt=2e-3)");
    let stparams = StoppingTimeParams {
        grid,
        scales: vec![0.5, 1.0, 2.0, 4.0],
        epsilon: 0.5,
        coupling: 1.0,
        dt: 2e-3,
        horizon: 1.0,
        family: DataFamily::Gaussian,
        l2_norm: 2.0,
        noise: model,
        paths: 32,
        seed: 42,
    };
    let t0 = std::time::Instant::now();
    let strep = stopping_time_experiment(&stparams).unwrap();
    println!(
        "  violations={} max_gap={:.3e} pass={} [{:.1}s]",
        strep.violations,
        strep.max_pre_tau_gap,
        strep.pass,
        t0.elapsed().as_secs_f64()
    );
    let taus: Vec<(f64, f64)> = strep.rows.iter().take(6).map(|r| (r.tau_low, r.tau_high)).collect();
    println!("  sample taus: {taus:?}");
}
