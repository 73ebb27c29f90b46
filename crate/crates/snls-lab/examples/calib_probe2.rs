// Scratch calibration probe #2 (removed before release).
use snls_lab::harness::{initial_datum, DataFamily};
use snls_lab::integrator::{solve, solve_path, stability_experiment, SolverConfig};
use snls_lab::noise::build_noise_model;
use snls_lab::nonlinearity::{CutoffSpec, NonlinearityExponent};
use snls_lab::symmetry::{group_apply, transported_solution, SymmetryParams};
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
    // A. Candidate solver grid: L = 10*pi, N = 512 (k_max = 25.6).
    println!("== candidate solver grid L=10pi N=512, sigma=3 noise");
    let grid = SpectralGrid::new(10.0 * std::f64::consts::PI, 512).unwrap();
    match build_noise_model(8, 1.5, 3.0, grid.clone()) {
        Ok(model) => {
            println!("  noise model ok, F boundary decay fine");
            for (family, m_norm) in [
                (DataFamily::Gaussian, 1.0),
                (DataFamily::Gaussian, 2.0),
                (DataFamily::Modulated, 1.0),
                (DataFamily::Modulated, 2.0),
                (DataFamily::TwoBump, 1.0),
                (DataFamily::TwoBump, 2.0),
            ] {
                let u0 = initial_datum(grid.clone(), family, m_norm).unwrap();
                let mut c = cfg(0.0, 1.0, f64::INFINITY, 1e-3, 1.0);
                c.noise = Some(model.clone());
                c.seed = 42;
                c.record_stride = 250;
                match solve_path(&u0, &c, 0) {
                    Ok(traj) => {
                        let worst = traj
                            .snapshots()
                            .iter()
                            .map(|s| s.boundary_mass_fraction(0.9))
                            .fold(0.0_f64, f64::max);
                        let high_k = traj
                            .final_field()
                            .spectral_mass_above(grid.max_wavenumber() / 2.0);
                        println!(
                            "  {family:?} M=2 stoch eps=0: worst boundary {worst:.2e}, final high-k {high_k:.2e}"
                        );
                    }
                    Err(e) => println!("  {family:?} M=2 FAILED: {e}"),
                }
            }
        }
        Err(e) => println!("  noise build failed: {e}"),
    }

    // B. Transported-vs-direct floor: mu = 0 and N sweep on L = 20pi.
    println!("== transported gap dissection (lambda=2, xi=0.5, x0=3, dt=2e-3, T=0.25)");
    for (n, mu) in [(512usize, 0.0), (512, 1.0), (1024, 1.0), (2048, 1.0)] {
        let g = SpectralGrid::new(20.0 * std::f64::consts::PI, n).unwrap();
        let w0 = initial_datum(g.clone(), DataFamily::Gaussian, 1.0).unwrap();
        let p = SymmetryParams::new(3.0, 0.5, 2.0, 0.0).unwrap();
        let mut c1 = cfg(0.0, mu, f64::INFINITY, 2e-3, 0.25);
        c1.record_stride = 1;
        let traj = solve(&w0, &c1).unwrap();
        let moved = transported_solution(&traj, &p).unwrap();
        let u0t = group_apply(&w0, &p).unwrap();
        let mut c2 = cfg(0.0, mu, f64::INFINITY, 8e-3, 1.0);
        c2.record_stride = 1;
        let direct = solve(&u0t, &c2).unwrap();
        let gap = moved
            .final_field()
            .sub(direct.final_field())
            .unwrap()
            .lebesgue_norm(2.0)
            .unwrap();
        println!("  N={n} mu={mu}: final gap={gap:.4e}");
    }

    // C. Offset channel with genuinely active truncation (m = 1) on the new grid.
    println!("== offset channel, m=1 (active transition)");
    let w0_big = initial_datum(grid.clone(), DataFamily::Gaussian, 2.0).unwrap();
    let cw = cfg(0.5, 1.0, 1.0, 1e-3, 1.0);
    for da in [1e-2, 1e-3, 1e-4] {
        let mut cv = cw.clone();
        cv.cutoff = CutoffSpec::new(1.0, da).unwrap();
        let r = stability_experiment(&w0_big, &w0_big, None, &cw, &cv).unwrap();
        println!(
            "  offset gap={da:.0e}: response={:.4e} ratio={:.4}",
            r.response, r.ratio
        );
    }

    // D. Strichartz (5,10) ratio values over random data.
    println!("== (5,10) ratios over random unit data (default box)");
    let bigg = SpectralGrid::default_box();
    let pair = snls_lab::AdmissiblePair::new(5.0, 10.0).unwrap();
    let mut max_r = 0.0f64;
    let mut min_r = f64::INFINITY;
    for i in 0..20 {
        let f = snls_lab::harness::experiments::random_low_frequency_field(&bigg, 42, i);
        let r = snls_lab::propagator::strichartz_ratio(&f, pair, 1.0).unwrap();
        max_r = max_r.max(r);
        min_r = min_r.min(r);
    }
    println!("  min={min_r:.4} max={max_r:.4}");

    // E. mu=0 stochastic cells across eps identical (CRN sanity)?
    println!("== mu=0 stochastic cells across eps identical?");
    let model = build_noise_model(8, 1.5, 3.0, grid.clone()).unwrap();
    let u0 = initial_datum(grid.clone(), DataFamily::Gaussian, 2.0).unwrap();
    let mut base: Option<snls_lab::Field> = None;
    for eps in [0.0, 0.5, 1.0] {
        let mut cs = cfg(eps, 0.0, 1.0, 4e-3, 0.5);
        cs.noise = Some(model.clone());
        cs.seed = 7;
        let traj = solve_path(&u0, &cs, 0).unwrap();
        match &base {
            None => base = Some(traj.final_field().clone()),
            Some(b) => {
                let gap = traj
                    .final_field()
                    .sub(b)
                    .unwrap()
                    .lebesgue_norm(2.0)
                    .unwrap();
                println!("  eps={eps}: gap from eps=0 run = {gap:.3e}");
            }
        }
    }
}
