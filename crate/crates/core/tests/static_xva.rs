use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use xva_core::static_xva::*;
use xva_core::XvaError;

// (P, client survives, bank survives, probability)
type Outcome = (f64, bool, bool, f64);

fn enumerate(points: &[(f64, f64)], client_default: f64, gamma: f64) -> Vec<Outcome> {
    let mut out = Vec::new();
    for &(p, wp) in points {
        for (j1, w1) in [(true, 1.0 - client_default), (false, client_default)] {
            for (j, wj) in [(true, 1.0 - gamma), (false, gamma)] {
                out.push((p, j1, j, wp * w1 * wj));
            }
        }
    }
    out
}

fn scenario(outcomes: &[Outcome]) -> StaticScenario {
    StaticScenario::new(
        outcomes
            .iter()
            .map(|&(p, a, b, w)| StaticSample { cash_flow: p, client_survives: a, bank_survives: b, weight: w })
            .collect(),
    )
    .unwrap()
}

fn survival_mean(outcomes: &[Outcome], f: impl Fn(&Outcome) -> f64) -> f64 {
    let den: f64 = outcomes.iter().filter(|o| o.2).map(|o| o.3).sum();
    outcomes.iter().filter(|o| o.2).map(|o| o.3 * f(o)).sum::<f64>() / den
}

fn q_mean(outcomes: &[Outcome], f: impl Fn(&Outcome) -> f64) -> f64 {
    outcomes.iter().map(|o| o.3 * f(o)).sum()
}

// ES by integrating the quantile function over the top tail of the survival law
fn tail_es(outcomes: &[Outcome], loss: impl Fn(&Outcome) -> f64, alpha: f64) -> f64 {
    let den: f64 = outcomes.iter().filter(|o| o.2).map(|o| o.3).sum();
    let mut pts: Vec<(f64, f64)> = outcomes.iter().filter(|o| o.2).map(|o| (loss(o), o.3 / den)).collect();
    pts.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut left = 1.0 - alpha;
    let mut acc = 0.0;
    for (l, w) in pts {
        let take = w.min(left);
        acc += take * l;
        left -= take;
        if left <= 1e-15 {
            break;
        }
    }
    acc / (1.0 - alpha)
}

struct Oracle {
    mtm: f64,
    cva: f64,
    fva: f64,
    dva: f64,
    fda: f64,
    ec: f64,
    kva: f64,
}

fn baseline_oracle(outcomes: &[Outcome], gamma: f64, h: f64) -> Oracle {
    let mtm = survival_mean(outcomes, |o| o.0);
    let cva = survival_mean(outcomes, |o| if o.1 { 0.0 } else { o.0.max(0.0) });
    let fva = gamma / (1.0 + gamma) * (mtm - cva).max(0.0);
    let ca = cva + fva;
    let borrowed = (mtm - ca).max(0.0);
    let dead = |o: &Outcome| if o.2 { 0.0 } else { 1.0 };
    let dva = q_mean(outcomes, |o| dead(o) * ((-o.0).max(0.0) - if o.1 { 0.0 } else { o.0.max(0.0) }) + dead(o) * cva);
    let fda = q_mean(outcomes, |o| dead(o) * (borrowed - gamma * borrowed) + dead(o) * fva);
    let loss = |o: &Outcome| (if o.1 { 0.0 } else { o.0.max(0.0) }) + gamma * borrowed - ca;
    let ec = tail_es(outcomes, loss, 0.975);
    Oracle { mtm, cva, fva, dva, fda, ec, kva: h / (1.0 + h) * ec }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + b.abs())
}

#[test]
fn two_point_deal_matches_enumeration() {
    let gamma = 0.02;
    let par = StaticParams { gamma, hurdle: 0.1, ..StaticParams::default() };
    for points in [vec![(100.0, 0.5), (-100.0, 0.5)], vec![(150.0, 0.5), (-50.0, 0.5)]] {
        let outcomes = enumerate(&points, 0.1, gamma);
        assert_eq!(outcomes.len(), 8);
        let r = solve_static_baseline(&scenario(&outcomes), &par).unwrap();
        let o = baseline_oracle(&outcomes, gamma, 0.1);
        for (got, want, name) in [
            (r.mtm, o.mtm, "mtm"),
            (r.cva, o.cva, "cva"),
            (r.fva, o.fva, "fva"),
            (r.dva, o.dva, "dva"),
            (r.fda, o.fda, "fda"),
            (r.ec, o.ec, "ec"),
            (r.kva, o.kva, "kva"),
            (r.mva, 0.0, "mva"),
        ] {
            assert!(close(got, want, 1e-12), "{name}: {got} vs {want}");
        }
        assert!(close(r.fda, r.fva, 1e-12));
        assert!(close(r.fv, r.cva - r.dva, 1e-12));
        assert!(close(r.fv, r.ca - r.cl, 1e-12));
        assert!(close(r.ftp, r.ca + r.kva, 1e-12));
        assert!(close(r.ftp, (r.cva - r.dva) + (r.dva + r.fda + r.mda) + r.kva, 1e-12));
        // the FVA solves its own semilinear equation
        assert!((r.fva - gamma * (r.mtm - r.cva - r.fva).max(0.0)).abs() < 1e-12);
        let e_l: f64 = r.l_circ.iter().zip(&outcomes).map(|(l, o)| l * o.3).sum();
        assert!(e_l.abs() < 1e-12);
    }
    // the first example in closed form
    let r = solve_static_baseline(&scenario(&enumerate(&[(100.0, 0.5), (-100.0, 0.5)], 0.1, gamma)), &par).unwrap();
    assert!(close(r.cva, 5.0, 1e-14) && r.fva == 0.0 && r.mtm.abs() < 1e-12, "{} {} {}", r.cva, r.fva, r.mtm);
}

#[test]
fn degenerate_rates_switch_off_adjustments() {
    let outcomes = enumerate(&[(150.0, 0.5), (-50.0, 0.5)], 0.1, 0.0);
    let r = solve_static_baseline(&scenario(&outcomes), &StaticParams { gamma: 0.0, hurdle: 0.0, ..StaticParams::default() }).unwrap();
    assert_eq!((r.fva, r.fda, r.kva), (0.0, 0.0, 0.0));
    assert!(r.cva > 0.0);
}

#[test]
fn refined_without_collateral_is_the_baseline() {
    let outcomes = enumerate(&[(150.0, 0.3), (-80.0, 0.7)], 0.05, 0.03);
    let scen = scenario(&outcomes);
    let par = StaticParams { gamma: 0.03, ..StaticParams::default() };
    let a = solve_static_baseline(&scen, &par).unwrap();
    let b = solve_static_refined(&scen, &par).unwrap();
    assert_eq!(a.rows(), b.rows());
    assert_eq!(a.l_circ, b.l_circ);
}

#[test]
fn mva_is_funding_cost_of_posted_margin() {
    let outcomes = enumerate(&[(100.0, 0.5), (-100.0, 0.5)], 0.1, 0.01);
    let par = StaticParams { gamma: 0.01, pim: Margin::Fixed(50.0), ..StaticParams::default() };
    let r = solve_static_refined(&scenario(&outcomes), &par).unwrap();
    assert!((r.mva - 0.5).abs() < 1e-15);
    assert!(close(r.mda, r.mva, 1e-12));
}

#[test]
fn full_variation_margin_removes_credit_and_funding() {
    let gamma = 0.05;
    let outcomes = enumerate(&[(120.0, 0.25), (-40.0, 0.75)], 0.2, gamma);
    let vm: Vec<f64> = outcomes.iter().map(|o| o.0).collect();
    let par = StaticParams {
        gamma,
        vm: VariationMargin::Pathwise(vm),
        rim: Margin::Quantile(0.75),
        pim: Margin::Quantile(0.99),
        capital_funding: true,
        ..StaticParams::default()
    };
    let r = solve_static_refined(&scenario(&outcomes), &par).unwrap();
    assert_eq!((r.cva, r.fva, r.rim, r.pim, r.mva), (0.0, 0.0, 0.0, 0.0, 0.0));
    assert!(r.l_circ.iter().all(|l| *l == 0.0));
    let ec = tail_es(&outcomes, |_| 0.0, 0.975);
    assert_eq!(r.ec, ec);
}

fn mc_scenario(n: usize, gamma: f64, seed: u64) -> StaticScenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p: Vec<f64> = (0..n).map(|_| {
        let z: f64 = StandardNormal.sample(&mut rng);
        60.0 + 100.0 * z
    }).collect();
    let alive: Vec<bool> = (0..n).map(|_| rng.random::<f64>() > 0.08).collect();
    StaticScenario::from_draws(&p, &alive, gamma).unwrap()
}

fn refined_params(gamma: f64) -> StaticParams {
    StaticParams {
        gamma,
        hurdle: 0.1,
        vm: VariationMargin::Constant(10.0),
        rim: Margin::Quantile(0.75),
        pim: Margin::Quantile(0.99),
        capital_funding: true,
        ..StaticParams::default()
    }
}

#[test]
fn picard_converges_and_contracts() {
    for gamma in [0.0, 0.01, 0.05, 0.10] {
        let scen = mc_scenario(2000, gamma, 3);
        let par = refined_params(gamma);
        let r = solve_static_refined(&scen, &par).unwrap();
        assert!(r.iterations <= 20, "gamma {gamma}: {} iterations", r.iterations);
        // fixed-point residuals with an independently computed ES
        let outcomes: Vec<Outcome> = scen.samples().iter().map(|s| (s.cash_flow, s.client_survives, s.bank_survives, s.weight)).collect();
        let l = r.l_circ.clone();
        let with_index: Vec<Outcome> = outcomes.iter().enumerate().map(|(i, o)| (l[i], o.1, o.2, o.3)).collect();
        let es = tail_es(&with_index, |o| o.0, 0.975);
        assert!((r.ec - es).abs() < 1e-10 * (1.0 + es.abs()), "{} vs {es}", r.ec);
        assert!((r.kva - 0.1 / 1.1 * es).abs() < 1e-10 * (1.0 + es.abs()));
        let fva_eq = gamma * (r.mtm - r.vm - r.ca - r.ec.max(r.kva)).max(0.0);
        assert!((r.fva - fva_eq).abs() < 1e-10, "{} vs {fva_eq}", r.fva);
        let c = gamma / (1.0 + gamma);
        for w in r.fva_history.windows(3) {
            let (d0, d1) = ((w[1] - w[0]).abs(), (w[2] - w[1]).abs());
            assert!(d1 <= c * d0 + 1e-13, "gamma {gamma}: {d1} > {c} * {d0}");
        }
        let b = balance_sheet_check(&r, &scen).unwrap();
        assert!(b.max() < 1e-10, "{b:?}");
        // capital used as funding can only reduce the FVA
        let plain = solve_static_refined(&scen, &StaticParams { capital_funding: false, ..par.clone() }).unwrap();
        assert!(r.fva <= plain.fva);
    }
}

#[test]
fn balance_sheet_identities_hold() {
    let zero = enumerate(&[(0.0, 1.0)], 0.1, 0.02);
    let r = solve_static_baseline(&scenario(&zero), &StaticParams::default()).unwrap();
    assert_eq!(balance_sheet_check(&r, &scenario(&zero)).unwrap().max(), 0.0);
    let two = enumerate(&[(100.0, 0.5), (-100.0, 0.5)], 0.1, 0.02);
    let r = solve_static_baseline(&scenario(&two), &StaticParams::default()).unwrap();
    assert!(balance_sheet_check(&r, &scenario(&two)).unwrap().max() < 1e-12);
}

#[test]
fn inconsistent_inputs_are_rejected() {
    let outcomes = enumerate(&[(100.0, 1.0)], 0.1, 0.02);
    let par = StaticParams { gamma: 0.05, ..StaticParams::default() };
    assert!(matches!(solve_static_baseline(&scenario(&outcomes), &par), Err(XvaError::InconsistentBankDefault { .. })));
    assert!(matches!(StaticScenario::new(vec![]), Err(XvaError::Empty(_))));
    let collat = StaticParams { gamma: 0.02, pim: Margin::Fixed(1.0), ..StaticParams::default() };
    assert!(solve_static_baseline(&scenario(&outcomes), &collat).is_err());
}

fn gaussian_losses(n: usize, sigma: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut l: Vec<f64> = (0..n).map(|_| { let z: f64 = StandardNormal.sample(&mut rng); sigma * z }).collect();
    let m = l.iter().sum::<f64>() / n as f64;
    l.iter_mut().for_each(|x| *x -= m);
    l
}

#[test]
fn indifference_margin_limits() {
    let sigma = 50.0;
    let l = gaussian_losses(100_000, sigma, 4);
    let w = vec![1.0; l.len()];
    let sd = (l.iter().map(|x| x * x).sum::<f64>() / l.len() as f64).sqrt();
    let tiny = indifference_risk_margin(&l, &w, 1e-6, 0.975).unwrap();
    assert!(tiny.rm.abs() < 1e-4 * sd, "{}", tiny.rm);
    let rho = 0.1 / sigma;
    let r = indifference_risk_margin(&l, &w, rho, 0.975).unwrap();
    let closed = rho * sigma * sigma / 2.0;
    assert!((r.rm / closed - 1.0).abs() < 0.05, "{} vs {closed}", r.rm);
    let rho = 0.01 / sigma;
    let r = indifference_risk_margin(&l, &w, rho, 0.975).unwrap();
    let approx = sd * sd * rho / (2.0 * r.es);
    let h = r.implied_hurdle.unwrap();
    assert!((h / approx - 1.0).abs() < 0.10, "{h} vs {approx}");
    let flat = indifference_risk_margin(&[0.0; 10], &[1.0; 10], 0.5, 0.975).unwrap();
    assert_eq!(flat.implied_hurdle, None);
    assert!(indifference_risk_margin(&l, &w, 0.0, 0.975).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn accounting_identities_hold_for_random_laws(
        pts in prop::collection::vec((-200.0f64..200.0, 0.01f64..1.0), 1..6),
        pd in 0.0f64..0.5, gamma in 0.0f64..0.3, h in 0.0f64..0.5,
        vm in -50.0f64..50.0, funded in any::<bool>()
    ) {
        let total: f64 = pts.iter().map(|p| p.1).sum();
        let points: Vec<(f64, f64)> = pts.iter().map(|&(p, w)| (p, w / total)).collect();
        let outcomes = enumerate(&points, pd, gamma);
        let scen = match StaticScenario::new(outcomes.iter().map(|&(p, a, b, w)| StaticSample { cash_flow: p, client_survives: a, bank_survives: b, weight: w }).collect()) {
            Ok(s) => s,
            Err(_) => return Ok(()),
        };
        let par = StaticParams {
            gamma, hurdle: h, vm: VariationMargin::Constant(vm),
            rim: Margin::Quantile(0.75), pim: Margin::Quantile(0.99), capital_funding: funded,
            ..StaticParams::default()
        };
        let r = solve_static_refined(&scen, &par).unwrap();
        let tol = 1e-11 * (1.0 + r.ca.abs() + r.kva.abs() + 200.0);
        prop_assert!((r.fda - r.fva).abs() < tol);
        prop_assert!((r.mda - r.mva).abs() < tol);
        prop_assert!((r.fv - (r.cva - r.dva)).abs() < tol);
        prop_assert!((r.fv - (r.ca - r.cl)).abs() < tol);
        prop_assert!((r.ftp - ((r.cva - r.dva) + (r.dva + r.fda + r.mda) + r.kva)).abs() < tol);
        prop_assert!(r.cva >= 0.0 && r.mva >= 0.0 && r.fva >= 0.0);
        // ES of a centred loss is non-negative up to rounding
        prop_assert!(r.kva >= -tol && r.ec >= -tol, "kva {} ec {}", r.kva, r.ec);
        prop_assert!(balance_sheet_check(&r, &scen).unwrap().max() < 1e-9);
        let c = gamma / (1.0 + gamma);
        for w in r.fva_history.windows(3) {
            prop_assert!((w[2] - w[1]).abs() <= c * (w[1] - w[0]).abs() + 1e-12);
        }
    }
}
