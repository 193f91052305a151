use delay_consensus::dde::{modal_closed_form, simulate, tracking_error, zero_input_simulate};
use delay_consensus::gain::{critical_x, gain, peak_x, unity_crossing_x};
use delay_consensus::graph::{example_graph, laplacian, Graph, Spectrum};
use delay_consensus::network::{
    convergence_rate, mode_landmarks, optimal_network_delay, rate_increase_window, ultimate_rate_bound, ConsensusParams,
};
use delay_consensus::reference::{Reference, SmoothSinusoid};
use delay_consensus::scalar::{admissible_delay, decay_rate, decay_rate_via_gain, optimal_delay, ScalarSystem};
use delay_consensus::Landmark;
use proptest::prelude::*;

fn graph_strategy(max_n: usize) -> impl Strategy<Value = Graph> {
    (2..=max_n, 0.0f64..0.6, any::<u64>()).prop_map(|(n, p, seed)| Graph::random_connected(n, p, seed).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn laplacian_is_diagonalised(g in graph_strategy(50)) {
        let l = laplacian(&g);
        for row in l.row_iter() {
            prop_assert!(row.sum().abs() <= 1e-12);
        }
        let spec = Spectrum::of_graph(&g).unwrap();
        let d = spec.transform.transpose() * &l * &spec.transform;
        let mut off = 0.0;
        for i in 0..g.n() {
            for j in 0..g.n() {
                if i != j {
                    off += d[(i, j)] * d[(i, j)];
                }
            }
        }
        prop_assert!(off.sqrt() <= 1e-9);
        prop_assert_eq!(spec.eigenvalues.iter().filter(|l| l.abs() < 1e-9).count(), 1);
    }

    #[test]
    fn mode_landmarks_are_ordered(g in graph_strategy(15), k in 0.05f64..2.0) {
        let spec = Spectrum::of_graph(&g).unwrap();
        let rho0 = spec.lambda2();
        let lms: Vec<_> = spec.distinct_modes().iter().map(|&l| mode_landmarks(l, 1.0, k, rho0).unwrap()).collect();
        for w in lms.windows(2) {
            let (lo, hi) = (&w[0], &w[1]);
            prop_assert!(hi.tau_star <= lo.tau_star * (1.0 + 1e-9));
            prop_assert!(hi.tau_tilde <= lo.tau_tilde * (1.0 + 1e-9));
            if let (Landmark::Finite(a), Landmark::Finite(b)) = (lo.tau_bar, hi.tau_bar) {
                prop_assert!(b <= a * (1.0 + 1e-12));
            }
        }
        for m in &lms {
            prop_assert!(m.tau_star < m.tau_tilde);
            if let Landmark::Finite(b) = m.tau_bar {
                prop_assert!(m.tau_tilde < b);
            }
        }
    }

    #[test]
    fn acceleration_window_exists(g in graph_strategy(20), k in 0.05f64..2.0) {
        let spec = Spectrum::of_graph(&g).unwrap();
        let rho0 = spec.lambda2();
        let tau_hat = rate_increase_window(&spec, 1.0, k).unwrap();
        prop_assert!(tau_hat > 0.0);
        for i in 1..40 {
            let tau = tau_hat * i as f64 / 40.0;
            let p = ConsensusParams::new(1.0, k, tau).unwrap();
            prop_assert!(convergence_rate(&spec, &p).unwrap() > rho0);
        }
        let p = ConsensusParams::new(1.0, k, tau_hat * 1.01).unwrap();
        prop_assert!(convergence_rate(&spec, &p).unwrap() < rho0);
    }

    #[test]
    fn optimum_stays_under_ultimate_bound(g in graph_strategy(15), k in 0.05f64..2.0) {
        let spec = Spectrum::of_graph(&g).unwrap();
        let opt = optimal_network_delay(&spec, 1.0, k).unwrap();
        prop_assert!(opt.tau_star >= opt.bracket.0 && opt.tau_star <= opt.bracket.1);
        prop_assert!(opt.rho_star > spec.lambda2());
        prop_assert!(opt.rho_star <= ultimate_rate_bound(k, spec.lambda2()).unwrap() * (1.0 + 1e-12));
    }

    #[test]
    fn gain_limit_and_unity_window(gamma in -3.0f64..0.95) {
        prop_assert!((gain(gamma, -1e-9).unwrap() - 1.0).abs() < 1e-6);
        let xt = unity_crossing_x(gamma).unwrap();
        let (xs, gmax) = peak_x(gamma).unwrap();
        prop_assert!(xt < xs && xs < 0.0);
        if let Some(xb) = critical_x(gamma) {
            prop_assert!(xb < xt);
        }
        for i in 1..20 {
            let x = xt * i as f64 / 20.0;
            prop_assert!(gain(gamma, x).unwrap() > 1.0);
            prop_assert!(gain(gamma, x).unwrap() <= gmax * (1.0 + 1e-12));
        }
        prop_assert!(gain(gamma, xt * 1.01).unwrap() < 1.0);
    }

    #[test]
    fn gain_above_one_is_increasing(gamma in 1.05f64..5.0, x in 1e-3f64..10.0) {
        let g1 = gain(gamma, x).unwrap();
        prop_assert!(g1 < gamma);
        prop_assert!(gain(gamma, x * 1.1).unwrap() > g1);
    }

    #[test]
    fn scalar_rate_forms_agree(a in -3.0f64..-0.1, ratio in -0.9f64..3.0, frac in 0.01f64..0.99) {
        let b = a * ratio;
        let sys = ScalarSystem::new(a, b).unwrap();
        let tau = match admissible_delay(&sys) {
            Landmark::Finite(t) => t * frac,
            _ => 3.0 * frac,
        };
        let r1 = decay_rate(&sys, tau).unwrap();
        let r2 = decay_rate_via_gain(&sys, tau).unwrap();
        prop_assert!((r1 - r2).abs() <= 1e-10 * (1.0 + r1.abs()));
        let (ts, rs) = optimal_delay(&sys).unwrap();
        prop_assert!(rs >= r1 - 1e-9);
        // τ* sits on the branch point, where W amplifies rounding to its square root
        prop_assert!((decay_rate(&sys, ts).unwrap() - rs).abs() < 1e-6 * rs);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn closed_form_matches_simulation(k in 0.1f64..1.6, frac in 0.1f64..0.9, seed in any::<u64>()) {
        let g = example_graph();
        let spec = Spectrum::of_graph(&g).unwrap();
        let tau = match delay_consensus::network::mode_admissible_delay(spec.lambda_max(), 1.0, k) {
            Landmark::Finite(t) => t * frac,
            _ => 0.3 * frac,
        };
        let p = ConsensusParams::new(1.0, k, tau).unwrap();
        let x0: Vec<f64> = (0..5).map(|i| ((seed % 97) as f64 + 1.7 * i as f64).sin()).collect();
        let z0 = spec.to_modal(&x0).unwrap();
        let tr = zero_input_simulate(&g, &p, &x0, 2.0 * tau, tau / 40.0).unwrap();
        for (t, x) in tr.times.iter().zip(&tr.states) {
            let z = spec.to_modal(x.as_slice()).unwrap();
            for i in 1..5 {
                let exact = modal_closed_form(spec.eigenvalues[i], &p, z0[i], *t).unwrap();
                prop_assert!((z[i] - exact).abs() <= 1e-6 * z0[i].abs().max(1e-12));
            }
        }
    }

    #[test]
    fn tracking_ceiling_holds_with_delay(ki in 0usize..5, frac in 0.0f64..0.9, omega in 0.2f64..0.7) {
        let k = [-0.5, 0.0, 0.5, 1.0, 1.5][ki];
        let g = example_graph();
        let spec = Spectrum::of_graph(&g).unwrap();
        let tau = match delay_consensus::network::mode_admissible_delay(spec.lambda_max(), 1.0, k) {
            Landmark::Finite(t) => t * frac,
            _ => 0.5 * frac,
        };
        let r = SmoothSinusoid::new(vec![-0.55, 1.0, 0.6, -0.9, -0.6], vec![1.1, 1.0, 0.9, 1.05, 0.96], omega).unwrap();
        let ceiling = r.gamma().unwrap() / spec.lambda2();
        let p = ConsensusParams::new(1.0, k, tau).unwrap();
        let rate = convergence_rate(&spec, &p).unwrap();
        let horizon = 30.0 + 25.0 / rate;
        let tr = simulate(&g, &p, &r, horizon, 0.01).unwrap();
        let err = tracking_error(&tr, &r);
        let start = tr.index_at(25.0 / rate);
        let tail = err[start..].iter().copied().fold(0.0, f64::max);
        prop_assert!(tail <= ceiling * 1.02, "k={} τ={} ω={}: {} vs {}", k, tau, omega, tail, ceiling);
    }
}

#[test]
fn tracking_ceiling_fails_at_resonance() {
    // Near the stability limit the loop has a lightly damped pole pair; a
    // reference oscillating at that frequency pushes the error past γ/ρ0.
    let g = example_graph();
    let spec = Spectrum::of_graph(&g).unwrap();
    let p = ConsensusParams::new(1.0, 1.0, 0.28).unwrap();
    let r = SmoothSinusoid::new(vec![-0.55, 1.0, 0.6, -0.9, -0.6], vec![1.1, 1.0, 0.9, 1.05, 0.96], 5.0).unwrap();
    let ceiling = r.gamma().unwrap() / spec.lambda2();
    let rate = convergence_rate(&spec, &p).unwrap();
    let tr = simulate(&g, &p, &r, 30.0 + 25.0 / rate, 0.005).unwrap();
    let err = tracking_error(&tr, &r);
    let tail = err[tr.index_at(25.0 / rate)..].iter().copied().fold(0.0, f64::max);
    assert!(tail > 2.0 * ceiling, "{tail} vs {ceiling}");
}
