use std::sync::Arc;

use growthflow::dynamics::{
    auxiliary_gain, discrete_growth_update, energy, growth_map, homotopy_step, lambda_auto, run, DynamicsConfig,
    LFunctional,
};
use growthflow::oracle::{brute_force_argmin, high_precision_replay};
use growthflow::{DriverState, Grid, PotentialField, StopReason};
use proptest::prelude::*;

fn field_on(values: Vec<f64>, dv: f64) -> PotentialField {
    let n = values.len();
    let grid = Arc::new(Grid::line(0.0, dv * (n - 1) as f64, n).unwrap());
    PotentialField::from_table(values, grid).unwrap()
}

fn instance() -> impl Strategy<Value = (Vec<f64>, f64, f64, u64)> {
    (2usize..=64)
        .prop_flat_map(|n| {
            (
                prop::collection::vec(-5.0f64..5.0, n),
                prop::sample::select(vec![0.25, 0.5, 1.0, 2.0]),
                0.01f64..2.0,
                any::<u64>(),
            )
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn trajectory_conserves_mass_and_descends((q, dv, nu, seed) in instance()) {
        let f = field_on(q, dv);
        let l = LFunctional::minimizing();
        let s = DriverState::random(f.grid().clone(), nu, seed).unwrap();
        let cfg = DynamicsConfig { nu, max_steps: 400, stop_mass: 1.0, stop_change: 0.0, ..Default::default() };
        let lambda = lambda_auto(&f, nu, &l, 1.0).unwrap();
        let mut prev_energy = f64::INFINITY;
        let mut worst_gain = f64::INFINITY;
        run(s, &f, &cfg, |st, row| {
            assert!(row.mass_error <= 1e-12, "mass error {}", row.mass_error);
            assert!(st.values().iter().all(|h| h.is_finite() && *h >= 0.0));
            assert!(row.energy <= prev_energy + 1e-12, "energy rose {} -> {}", prev_energy, row.energy);
            prev_energy = row.energy;

            let p = st.budgeted_masses();
            let grad: Vec<f64> = st.values().iter().zip(f.values()).map(|(&h, &q)| -l.eval(q, nu * h) / nu).collect();
            let next = discrete_growth_update(&p, &grad, lambda).unwrap();
            worst_gain = worst_gain.min(auxiliary_gain(&p, &next, &grad, lambda));
        })
        .unwrap();
        prop_assert!(worst_gain >= -1e-12, "auxiliary gain {}", worst_gain);
    }

    #[test]
    fn growth_map_matches_discrete_update((q, dv, nu, seed) in instance()) {
        let f = field_on(q, dv);
        let l = LFunctional::minimizing();
        let s = DriverState::random(f.grid().clone(), nu, seed).unwrap();
        let lambda = lambda_auto(&f, nu, &l, 1.0).unwrap();
        let g = growth_map(&s, &f, lambda, &l).unwrap();
        let p = s.budgeted_masses();
        let grad: Vec<f64> = s.values().iter().zip(f.values()).map(|(&h, &q)| -l.eval(q, nu * h) / nu).collect();
        let next = discrete_growth_update(&p, &grad, lambda).unwrap();
        for (a, b) in g.budgeted_masses().iter().zip(&next) {
            prop_assert!((a - b).abs() <= 1e-12, "{} vs {}", a, b);
        }
    }

    #[test]
    fn energy_gradient_matches_l((q, dv, nu, seed) in instance()) {
        let f = field_on(q, dv);
        let l = LFunctional::minimizing();
        let s = DriverState::random(f.grid().clone(), nu, seed).unwrap();
        let delta = 1e-4;
        for i in 0..s.len() {
            let bump = |d: f64| {
                let mut v = s.values().to_vec();
                v[i] += d;
                // off the simplex, so evaluate the closed form directly
                growthflow_energy(&v, f.values(), nu, dv, &l)
            };
            let fd = (bump(delta) - bump(-delta)) / (2.0 * delta);
            let exact = -l.eval(f.values()[i], nu * s.values()[i]) * dv;
            prop_assert!((fd - exact).abs() <= 1e-6 * exact.abs() + 1e-9, "cell {}: {} vs {}", i, fd, exact);
        }
        let direct = energy(&s, &f, &l).unwrap();
        let raw = growthflow_energy(s.values(), f.values(), nu, dv, &l);
        prop_assert!((direct - raw).abs() <= 1e-12 * (1.0 + raw.abs()));
    }

    #[test]
    fn uniform_constant_field_is_fixed(n in 2usize..64, c in -5.0f64..5.0, nu in 0.01f64..2.0) {
        let f = field_on(vec![c; n], 0.5);
        let l = LFunctional::minimizing();
        let s = DriverState::uniform(f.grid().clone(), nu).unwrap();
        let lambda = lambda_auto(&f, nu, &l, 1.0).unwrap();
        let g = growth_map(&s, &f, lambda, &l).unwrap();
        for (a, b) in g.values().iter().zip(s.values()) {
            prop_assert!((a - b).abs() <= 1e-14 * b);
        }
    }

    #[test]
    fn vertices_are_fixed(q in prop::collection::vec(-5.0f64..5.0, 2..32), pick in any::<usize>(), nu in 0.01f64..2.0, dv in 0.05f64..3.0, alpha in 0.01f64..0.99) {
        let f = field_on(q, dv);
        let l = LFunctional::minimizing();
        let cell = pick % f.values().len();
        let s = DriverState::vertex(f.grid().clone(), nu, cell).unwrap();
        let lambda = lambda_auto(&f, nu, &l, 1.0).unwrap();
        let g = growth_map(&s, &f, lambda, &l).unwrap();
        prop_assert_eq!(g.values(), s.values());
        let h = homotopy_step(&s, &g, alpha).unwrap();
        prop_assert_eq!(h.values(), s.values());
    }

    #[test]
    fn zeros_stay_zero(q in prop::collection::vec(0.0f64..5.0, 3..20), seed in any::<u64>()) {
        let f = field_on(q, 1.0);
        let mut v = DriverState::random(f.grid().clone(), 0.1, seed).unwrap().values().to_vec();
        v[1] = 0.0;
        let s = DriverState::normalize(v, f.grid().clone(), 0.1).unwrap();
        let cfg = DynamicsConfig { nu: 0.1, max_steps: 200, ..Default::default() };
        let out = run(s, &f, &cfg, |st, _| assert_eq!(st.values()[1], 0.0)).unwrap();
        prop_assert_eq!(out.state.values()[1], 0.0);
    }
}

fn growthflow_energy(h: &[f64], q: &[f64], nu: f64, dv: f64, l: &LFunctional) -> f64 {
    let s = l.sigma();
    h.iter().zip(q).map(|(&h, &q)| -s * q * h - 0.5 * nu * h * h).sum::<f64>() * dv
}

#[test]
fn replay_bounds_double_precision_drift() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(16);
    let q: Vec<f64> = (0..16).map(|_| rng.gen_range(0.0..4.0)).collect();
    let f = field_on(q, 1.0);
    let nu = 0.1 * f.smallest_gap().unwrap();
    let s = DriverState::random(f.grid().clone(), nu, 3).unwrap();
    let cfg = DynamicsConfig { nu, max_steps: 1000, stop_mass: 1.0, stop_change: 0.0, ..Default::default() };
    let main = run(s.clone(), &f, &cfg, |_, _| {}).unwrap();
    assert_eq!(main.stop, StopReason::MaxSteps);
    let hp = high_precision_replay(&s, &f, &cfg, 1000).unwrap();
    let drift = main
        .state
        .values()
        .iter()
        .zip(hp.values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(drift <= 1e-9, "drift {drift}");
}

#[test]
fn three_cell_table_reaches_oracle() {
    let f = field_on(vec![0.0, 1.0, 2.0], 1.0);
    let s = DriverState::uniform(f.grid().clone(), 0.1).unwrap();
    let out = run(s, &f, &DynamicsConfig { nu: 0.1, ..Default::default() }, |_, _| {}).unwrap();
    let oracle = brute_force_argmin(&f);
    assert!(out.state.max_mass() >= 0.99);
    assert!(oracle.agrees_with(&out.state));
    assert_eq!(out.state.argmax().index, 0);
}
