//! Property suites shared by the `invariants` and `acceptance` targets.

use abm_eql::eql_core::differentiate;
use abm_eql::lattice_abm::{BdmConfig, BdmSimulation, SirConfig, SirSimulation, Step, Trace};
use abm_eql::model_selection::{build_candidate_libraries, vote_select};
use abm_eql::ode_models::rk4;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

fn runner(cases: u32) -> TestRunner {
    TestRunner::new(Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    })
}

fn report<T: std::fmt::Debug>(r: Result<(), proptest::test_runner::TestError<T>>) -> Result<(), String> {
    r.map_err(|e| e.to_string())
}

/// Cached counts, the occupied-site index and the agent count agree with a
/// fresh census after every BDM event.
pub fn census_consistency(cases: u32) -> Result<(), String> {
    let strat = (3usize..12, 0.0f64..1.0, 0.0f64..1.0, 0.0f64..2.0, 0.05f64..0.6, any::<u64>());
    report(runner(cases).run(&strat, |(x, pp, pd, pm, f0, seed)| {
        let cfg = BdmConfig::new(pp, pd, pm).with_size(x).with_init_fraction(f0).with_seed(seed);
        let mut sim = BdmSimulation::new(&cfg).unwrap();
        for _ in 0..200 {
            let census = sim.lattice().census();
            prop_assert_eq!(census, sim.lattice().cached_counts());
            prop_assert_eq!(census.iter().sum::<usize>(), x * x);
            prop_assert_eq!(sim.agent_count(), sim.lattice().occupied());
            prop_assert!(sim.index_consistent());
            match sim.step(f64::INFINITY) {
                Step::Event { .. } => {}
                _ => break,
            }
        }
        Ok(())
    }))
}

/// SIR events never create or destroy agents: `S + I + R` stays at the
/// initial occupied fraction.
pub fn sir_conservation(cases: u32) -> Result<(), String> {
    let strat = (4usize..12, 0.0f64..1.0, 0.0f64..0.5, 0.0f64..2.0, any::<u64>());
    report(runner(cases).run(&strat, |(x, pi, pr, pm, seed)| {
        let cfg = SirConfig::new(pi, pr, pm).with_size(x).with_seed(seed);
        let mut sim = SirSimulation::new(&cfg).unwrap();
        let m0: f64 = sim.fractions().iter().sum();
        let n0 = sim.agent_count();
        for _ in 0..200 {
            prop_assert!(sim.index_consistent());
            prop_assert_eq!(sim.agent_count(), n0);
            let m: f64 = sim.fractions().iter().sum();
            prop_assert!((m - m0).abs() < 1e-12);
            match sim.step(f64::INFINITY) {
                Step::Event { .. } => {}
                _ => break,
            }
        }
        Ok(())
    }))
}

/// Halving the RK4 step on `y' = -k y` cuts the global error by about 2⁴.
pub fn rk4_order(cases: u32) -> Result<(), String> {
    let strat = (0.5f64..3.0, 0.1f64..2.0);
    report(runner(cases).run(&strat, |(k, y0)| {
        let times = [0.0, 2.0];
        let err = |steps: usize| {
            let (y, _) = rk4(|_, y, dy| dy[0] = -k * y[0], &[y0], &times, steps);
            (y[1][0] - y0 * (-2.0 * k).exp()).abs()
        };
        let order = (err(32) / err(64)).log2();
        prop_assert!((order - 4.0).abs() < 0.3, "observed order {}", order);
        Ok(())
    }))
}

fn density_trace(c: Vec<f64>, f: Option<Vec<f64>>) -> Trace {
    let n = c.len();
    let times: Vec<f64> = (0..n).map(|k| k as f64).collect();
    Trace::new(times, vec!["C".into()], vec![c], f, 1).unwrap()
}

/// With `F ≡ 1` the correlation-corrected library equals the logistic one.
pub fn saturation_identity(cases: u32) -> Result<(), String> {
    let strat = prop::collection::vec(0.0f64..1.0, 4..40);
    report(runner(cases).run(&strat, |c| {
        let ones = vec![1.0; c.len()];
        let tr = density_trace(c, Some(ones));
        let (a, b) = build_candidate_libraries(&tr, &tr).unwrap();
        prop_assert_eq!(a.theta, b.theta);
        Ok(())
    }))
}

/// `d(αx + βy) = α dx + β dy` on a uniform grid.
pub fn differentiate_linearity(cases: u32) -> Result<(), String> {
    let strat = (3usize..40)
        .prop_flat_map(|n| (prop::collection::vec(-5.0f64..5.0, n), prop::collection::vec(-5.0f64..5.0, n)))
        .prop_flat_map(|(x, y)| (Just(x), Just(y), -3.0f64..3.0, -3.0f64..3.0, 0.01f64..10.0));
    report(runner(cases).run(&strat, |(x, y, a, b, dt)| {
        let t: Vec<f64> = (0..x.len()).map(|k| k as f64 * dt).collect();
        let z: Vec<f64> = x.iter().zip(&y).map(|(p, q)| a * p + b * q).collect();
        let dx = differentiate(&x, &t).unwrap().values;
        let dy = differentiate(&y, &t).unwrap().values;
        let dz = differentiate(&z, &t).unwrap().values;
        for k in 0..z.len() {
            let want = a * dx[k] + b * dy[k];
            prop_assert!((dz[k] - want).abs() <= 1e-9 * (1.0 + want.abs()));
        }
        Ok(())
    }))
}

/// The two candidates' votes always add up to the number of splits.
pub fn vote_sum_identity(cases: u32) -> Result<(), String> {
    let strat = (8usize..30)
        .prop_flat_map(|n| {
            (
                prop::collection::vec(0.01f64..0.9, n),
                prop::collection::vec(0.5f64..2.0, n),
                prop::collection::vec(-1.0f64..1.0, n),
            )
        })
        .prop_flat_map(|(c, f, b)| (Just(c), Just(f), Just(b), 1usize..40, any::<u64>()));
    report(runner(cases).run(&strat, |(c, f, b, splits, seed)| {
        let tr = density_trace(c, Some(f));
        let (l1, l2) = build_candidate_libraries(&tr, &tr).unwrap();
        let r = vote_select(&l1, &l2, &b, splits, seed).unwrap();
        prop_assert_eq!(r.votes[0] + r.votes[1], splits);
        prop_assert_eq!(r.records.len(), splits);
        Ok(())
    }))
}

pub type Suite = (&'static str, fn(u32) -> Result<(), String>);

pub const ALL: [Suite; 6] = [
    ("census consistency", census_consistency),
    ("SIR conservation", sir_conservation),
    ("RK4 order", rk4_order),
    ("F = 1 saturation identity", saturation_identity),
    ("differentiate linearity", differentiate_linearity),
    ("vote-sum identity", vote_sum_identity),
];
