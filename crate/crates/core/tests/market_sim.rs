use xva_core::market::{hw, simulate_defaults, simulate_risk_factors, CirParams, ModelParams, Shock, ShockStructure, SimulationGrid};

fn grid(horizon: f64, paths: usize) -> SimulationGrid {
    SimulationGrid { horizon_years: horizon, fine_steps_per_year: 32, coarse_steps_per_year: 16, paths }
}

#[test]
fn hull_white_moments_match_closed_form() {
    let g = grid(5.0, 50_000);
    let p = ModelParams::desk(1, 1, 1);
    let cube = simulate_risk_factors(&g, &p, 2024).unwrap();
    let k = g.n_fine();
    let r: Vec<f64> = (0..g.paths).map(|i| cube.path(i).rate(k, 0)).collect();
    let n = r.len() as f64;
    let m = r.iter().sum::<f64>() / n;
    let v = r.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    let hwp = p.rates[0];
    let mean_exact = hw::short_rate_mean(&hwp, 5.0);
    let var_exact = hw::short_rate_variance(&hwp, 5.0);
    let se_mean = (var_exact / n).sqrt();
    let se_var = var_exact * (2.0 / (n - 1.0)).sqrt();
    assert!((m - mean_exact).abs() < 3.0 * se_mean, "mean {m} vs {mean_exact}");
    assert!((v - var_exact).abs() < 3.0 * se_var, "var {v} vs {var_exact}");
}

#[test]
fn cir_full_truncation_stays_non_negative() {
    let g = grid(10.0, 2_000);
    let mut p = ModelParams::desk(1, 2, 3);
    for c in &mut p.intensities {
        c.sigma = 0.4; // far outside Feller
    }
    assert_eq!(p.feller_violations().len(), 3);
    let cube = simulate_risk_factors(&g, &p, 5).unwrap();
    let mut min = f64::INFINITY;
    for i in 0..g.paths {
        for k in 0..=g.n_fine() {
            for j in 0..3 {
                min = min.min(cube.path(i).intensity(k, j));
            }
        }
    }
    assert!(min >= 0.0);
}

#[test]
fn worker_count_does_not_change_the_cube() {
    let g = grid(3.0, 257);
    let p = ModelParams::desk(2, 3, 4);
    let run = |workers| {
        rayon::ThreadPoolBuilder::new().num_threads(workers).build().unwrap().install(|| {
            let cube = simulate_risk_factors(&g, &p, 77).unwrap();
            let d = simulate_defaults(&cube, &ShockStructure::desk(3), 78).unwrap();
            let bits: Vec<u64> = (0..g.paths).flat_map(|i| cube.path_data(i).to_vec()).map(f64::to_bits).collect();
            let taus: Vec<u64> = (0..g.paths).flat_map(|i| (0..3).map(move |c| (i, c))).map(|(i, c)| d.tau(i, c).to_bits()).collect();
            (bits, taus)
        })
    };
    assert_eq!(run(1), run(3));
}

#[test]
fn constant_intensity_default_frequency() {
    let g = grid(1.0, 50_000);
    let mut p = ModelParams::desk(1, 1, 1);
    p.intensities[0] = CirParams { kappa: 0.0, theta: 0.05, sigma: 0.0, lambda0: 0.05 };
    let cube = simulate_risk_factors(&g, &p, 1).unwrap();
    let d = simulate_defaults(&cube, &ShockStructure::singletons(1), 2).unwrap();
    let hits = (0..g.paths).filter(|&i| d.tau(i, 0) <= 1.0).count() as f64;
    let n = g.paths as f64;
    let pd = 1.0 - (-0.05f64).exp();
    let se = (pd * (1.0 - pd) / n).sqrt();
    assert!((hits / n - pd).abs() < 3.0 * se, "{} vs {pd}", hits / n);
}

#[test]
fn marginal_default_probabilities_match_integrated_intensities() {
    let g = grid(5.0, 20_000);
    let p = ModelParams::desk(1, 3, 4);
    let shocks = ShockStructure::desk(3);
    let cube = simulate_risk_factors(&g, &p, 31).unwrap();
    let d = simulate_defaults(&cube, &shocks, 32).unwrap();
    let n = g.paths as f64;
    for c in 0..3 {
        let cover = shocks.covering(c);
        for t in [1.0, 2.5, 5.0] {
            let k = g.fine_steps_for(t);
            let emp = (0..g.paths).filter(|&i| d.tau(i, c) <= t).count() as f64 / n;
            let model = (0..g.paths)
                .map(|i| 1.0 - (-cover.iter().map(|&s| cube.path(i).cum_intensity(k, s)).sum::<f64>()).exp())
                .sum::<f64>()
                / n;
            let se = (model * (1.0 - model) / n).sqrt();
            assert!((emp - model).abs() < 3.0 * se, "name {c} t {t}: {emp} vs {model}");
        }
    }
}

#[test]
fn common_shock_names_default_together() {
    let g = grid(10.0, 3_000);
    let mut p = ModelParams::desk(1, 3, 4);
    p.intensities[3].lambda0 = 0.2;
    p.intensities[3].theta = 0.2;
    let shocks = ShockStructure {
        n_names: 3,
        shocks: vec![
            Shock { names: vec![0], intensity: 0 },
            Shock { names: vec![1], intensity: 1 },
            Shock { names: vec![2], intensity: 2 },
            Shock { names: vec![0, 1], intensity: 3 },
        ],
    };
    let cube = simulate_risk_factors(&g, &p, 3).unwrap();
    let d = simulate_defaults(&cube, &shocks, 4).unwrap();
    let joint = (0..g.paths).filter(|&i| d.tau(i, 0).is_finite() && d.tau(i, 0) == d.tau(i, 1)).count();
    assert!(joint > 500, "{joint} joint defaults");
    assert!((0..g.paths).all(|i| d.tau(i, 2) > 0.0 && d.tau(i, 0) > 0.0));
}

#[test]
fn integrated_intensity_error_halves_with_the_step() {
    // deterministic CIR: lambda(t) = theta + (lambda0 - theta) e^{-kappa t}
    let (kappa, theta, l0) = (0.5, 0.02, 0.08);
    let exact = theta * 1.0 + (l0 - theta) * (1.0 - (-kappa * 1.0f64).exp()) / kappa;
    let err = |fine: usize| {
        let g = SimulationGrid { horizon_years: 1.0, fine_steps_per_year: fine, coarse_steps_per_year: 1, paths: 1 };
        let mut p = ModelParams::desk(1, 1, 1);
        p.intensities[0] = CirParams { kappa, theta, sigma: 0.0, lambda0: l0 };
        let cube = simulate_risk_factors(&g, &p, 0).unwrap();
        cube.path(0).cum_intensity(g.n_fine(), 0) - exact
    };
    let (e1, e2) = (err(16), err(32));
    assert!(e1 > 0.0 && e2 > 0.0, "left-point rule overestimates a decreasing intensity");
    let ratio = e1 / e2;
    assert!((1.8..2.2).contains(&ratio), "ratio {ratio}");
}
