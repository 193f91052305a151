use std::f64::consts::{E, PI};
use std::process::ExitCode;
use std::time::Duration;

use delay_consensus::dde::{
    estimate_decay_rate, modal_closed_form, series_resolvent_sum, series_solution, simulate, tracking_error,
    zero_input_simulate,
};
use delay_consensus::experiment::{cmd_admissible, cmd_control_effort, ExperimentConfig, TauGrid};
use delay_consensus::gain::{critical_x, gain, peak_x, unity_crossing_x};
use delay_consensus::graph::{example_graph, Graph, Spectrum};
use delay_consensus::lambertw::{lambert_w, INV_E};
use delay_consensus::network::{
    convergence_rate, mode_landmarks, optimal_network_delay, rate_increase_window, ultimate_rate_bound, ConsensusParams,
};
use delay_consensus::reference::{Reference, SampledSinusoid, SmoothSinusoid};
use delay_consensus::Landmark;
use delay_consensus_validation::{run, Criterion, Recorder};
use num_complex::Complex64;

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

fn example_spectrum() -> Spectrum {
    Spectrum::of_graph(&example_graph()).unwrap()
}

fn params(k: f64, tau: f64) -> ConsensusParams {
    ConsensusParams::new(1.0, k, tau).unwrap()
}

fn example_start() -> Vec<f64> {
    SampledSinusoid::example(42).value(0.0)
}

fn admissible_delays() -> Criterion {
    run(1, "admissible delays on the example graph", secs(1), |r| {
        let cfg = ExperimentConfig { k: vec![-0.5, 0.5, 1.0, 1.5], ..Default::default() };
        let rows = cmd_admissible(&cfg).unwrap();
        for row in &rows[..2] {
            r.check(format!("k={} unbounded", row.k), row.tau_bar == Landmark::Unbounded, format!("{:?}", row.tau_bar));
        }
        let k1 = rows[2].tau_bar.finite().unwrap_or(f64::NAN);
        r.close("k=1 closed form", k1, 0.0f64.acos() / 5.0, 1e-3);
        r.close("k=1 printed value", k1, 0.3142, 1e-3);
        let k15 = rows[3].tau_bar.finite().unwrap_or(f64::NAN);
        r.close("k=1.5 closed form", k15, (1.0f64 / 3.0).acos() / (5.0 * 2.0f64.sqrt()), 1e-3);
        r.close("k=1.5 printed value", k15, 0.1741, 1e-3);
    })
}

fn rate_landmarks() -> Criterion {
    run(2, "rate curve landmarks for k=1.5", secs(10), |r| {
        let spec = example_spectrum();
        let rho0 = spec.lambda2();
        let tau_hat = rate_increase_window(&spec, 1.0, 1.5).unwrap();
        r.close("rate increase window", tau_hat, 0.14, 0.01);
        let opt = optimal_network_delay(&spec, 1.0, 1.5).unwrap();
        r.within("rho*/rho0", opt.rho_star / rho0, 1.8, 2.2);
        r.within("tau*", opt.tau_star, 0.055, 0.12);
        let l2 = mode_landmarks(spec.lambda2(), 1.0, 1.5, rho0).unwrap();
        let ln = mode_landmarks(spec.lambda_max(), 1.0, 1.5, rho0).unwrap();
        let (lo, hi) = (ln.tau_star, l2.tau_star.min(tau_hat));
        r.check(
            "bracket containment",
            opt.bracket == (lo, hi) && opt.tau_star >= lo && opt.tau_star <= hi,
            format!("{} in [{lo}, {hi}]", opt.tau_star),
        );
    })
}

fn ultimate_bound() -> Criterion {
    run(3, "ultimate rate bound", secs(60), |r| {
        let rho0 = 3.0;
        r.close("k=1 gives e*rho0", ultimate_rate_bound(1.0, rho0).unwrap(), E * rho0, 1e-10);
        r.close("k=1e-6 approaches rho0", ultimate_rate_bound(1e-6, rho0).unwrap(), rho0, 1e-6);
        let ks = [0.25, 0.5, 0.75, 1.0, 1.25, 1.5];
        let mut worst = f64::NEG_INFINITY;
        let mut ok = true;
        for seed in 0..10u64 {
            let n = 5 + (seed as usize % 11);
            let g = Graph::random_connected(n, 0.3, 7000 + seed).unwrap();
            let spec = Spectrum::of_graph(&g).unwrap();
            for &k in &ks {
                let bound = ultimate_rate_bound(k, spec.lambda2()).unwrap();
                let span = 2.0 * rate_increase_window(&spec, 1.0, k).unwrap();
                let scanned = (1..=2000)
                    .map(|i| convergence_rate(&spec, &params(k, span * i as f64 / 2000.0)).unwrap())
                    .fold(f64::NEG_INFINITY, f64::max);
                let found = optimal_network_delay(&spec, 1.0, k).unwrap().rho_star;
                let ratio = scanned.max(found) / bound;
                worst = worst.max(ratio);
                ok &= ratio <= 1.0;
            }
        }
        r.check("scanned rho* <= bound on 10 random graphs", ok, format!("largest rho*/bound {worst:.6}"));
    })
}

fn analytic_vs_empirical() -> Criterion {
    run(4, "fitted decay rate matches analytic rate", secs(30), |r| {
        let g = example_graph();
        let spec = example_spectrum();
        let x0 = example_start();
        for k in [0.5, 1.0] {
            for tau in [0.05, 0.1, 0.15] {
                let p = params(k, tau);
                let tr = zero_input_simulate(&g, &p, &x0, 10.0, 0.005).unwrap();
                let fitted = estimate_decay_rate(&tr).unwrap();
                let exact = convergence_rate(&spec, &p).unwrap();
                let rel = (fitted / exact - 1.0).abs();
                r.check(
                    format!("k={k} tau={tau}"),
                    rel <= 0.05,
                    format!("{fitted:.6} vs {exact:.6} ({:.2}%)", 100.0 * rel),
                );
            }
        }
    })
}

fn control_effort() -> Criterion {
    run(5, "control effort ordering", secs(10), |r| {
        let cfg =
            ExperimentConfig { k: vec![0.0, 0.5, 1.0, 1.5], tau: TauGrid::Values(vec![0.1]), ..Default::default() };
        let runs = cmd_control_effort(&cfg).unwrap();
        let e: Vec<f64> = runs.iter().map(|x| x.max_effort).collect();
        r.check("k=0.5 <= k=0", e[1] <= e[0] + 1e-9, format!("{:.9} vs {:.9}", e[1], e[0]));
        r.check("k=1 <= k=0", e[2] <= e[0] + 1e-9, format!("{:.9} vs {:.9}", e[2], e[0]));
        let floor = (0.5f64 * 3.0 * 0.1).exp() * e[0];
        r.check("k=1.5 blow-up floor", e[3] >= floor, format!("{:.9} >= {:.9}", e[3], floor));
    })
}

fn tracking_ceiling() -> Criterion {
    run(6, "tracking error ceiling is delay independent", secs(60), |r| {
        let g = example_graph();
        let spec = example_spectrum();
        let reference =
            SmoothSinusoid::new(vec![-0.55, 1.0, 0.6, -0.9, -0.6], vec![1.1, 1.0, 0.9, 1.05, 0.96], 0.5).unwrap();
        let ceiling = reference.gamma().unwrap() / spec.lambda2();
        for k in [0.0, 0.5, 1.0] {
            for tau in [0.0, 0.1, 0.2] {
                let p = params(k, tau);
                let rate = convergence_rate(&spec, &p).unwrap();
                let settle = 25.0 / rate;
                let tr = simulate(&g, &p, &reference, settle + 30.0, 0.01).unwrap();
                let err = tracking_error(&tr, &reference);
                let tail = err[tr.index_at(settle)..].iter().copied().fold(0.0, f64::max);
                r.check(
                    format!("k={k} tau={tau}"),
                    tail <= 1.02 * ceiling,
                    format!("limsup {tail:.6} vs gamma/rho0 {ceiling:.6}"),
                );
            }
        }
    })
}

fn oracle_equivalence() -> Criterion {
    run(7, "closed-form and series oracles match the simulator", secs(30), |r| {
        let g = example_graph();
        let spec = example_spectrum();
        let x0 = example_start();
        let z0 = spec.to_modal(&x0).unwrap();

        for k in [0.25, 0.5, 1.0, 1.5] {
            let p = params(k, 0.1);
            let tr = zero_input_simulate(&g, &p, &x0, 0.2, 0.002).unwrap();
            let mut worst = 0.0f64;
            for (t, x) in tr.times.iter().zip(&tr.states) {
                let z = spec.to_modal(x.as_slice()).unwrap();
                for i in 1..z.len() {
                    let exact = modal_closed_form(spec.eigenvalues[i], &p, z0[i], *t).unwrap();
                    worst = worst.max((z[i] - exact).abs() / z0[i].abs());
                }
            }
            r.check(format!("closed form k={k}"), worst <= 1e-6, format!("max relative error {worst:.3e}"));
        }

        let p = params(1.0, 0.2);
        let norm = z0[1..].iter().map(|v| v * v).sum::<f64>().sqrt();
        let tr = zero_input_simulate(&g, &p, &x0, 5.0 * p.tau, 0.002).unwrap();
        let (mut worst, mut worst_t, mut worst_open) = (0.0f64, 0.0, 0.0f64);
        for (t, x) in tr.times.iter().zip(&tr.states) {
            let z = spec.to_modal(x.as_slice()).unwrap();
            let s = series_solution(&spec, &p, &z0, *t, 200).unwrap();
            let e = (1..z.len()).map(|i| (s[i] - z[i]).abs()).fold(0.0, f64::max) / norm;
            if e > worst {
                worst = e;
                worst_t = *t;
            }
            if *t > 0.0 {
                worst_open = worst_open.max(e);
            }
        }
        r.check(
            "series J=200 on [0, 5 tau]",
            worst <= 1e-3,
            format!("max error {worst:.3e}*|z0| at t={worst_t}; {worst_open:.3e}*|z0| for t > 0"),
        );

        for lambda in [3.0, 5.0] {
            let s = series_resolvent_sum(lambda, &p, 500).unwrap();
            r.close(format!("sum C/S = 1/(alpha lambda), lambda={lambda}"), s.re, 1.0 / lambda, 1e-6);
        }
    })
}

fn lambert_checks(r: &mut Recorder) {
    let mut residual_ok = 0usize;
    let mut residual_total = 0usize;
    let mut dominance_ok = true;
    for i in 0..100 {
        let radius = 10.0 * ((i % 10) as f64 + 1.0) / 10.0 * (1.0 - 0.999 * ((i / 10) as f64 / 10.0));
        let theta = -PI + 2.0 * PI * (i as f64 + 0.5) / 100.0;
        let z = Complex64::from_polar(radius, theta);
        let w0 = lambert_w(0, z).unwrap();
        for k in -5..=5 {
            let w = lambert_w(k, z).unwrap();
            residual_total += 1;
            if (w * w.exp() - z).norm() <= 1e-10 * (1.0 + z.norm()) {
                residual_ok += 1;
            }
            if k != 0 && w.re > w0.re + 1e-12 {
                dominance_ok = false;
            }
        }
    }
    r.check("lambert residual", residual_ok == residual_total, format!("{residual_ok}/{residual_total} samples"));
    r.check("principal branch dominance", dominance_ok, "Re W0 >= Re Wk, |k| <= 5");

    let equal = (1..50).all(|i| {
        let z = Complex64::new(-INV_E - 0.2 * i as f64, 0.0);
        (lambert_w(0, z).unwrap().re - lambert_w(-1, z).unwrap().re).abs() <= 1e-10
    });
    r.check("equal real parts of W0 and W-1 below -1/e", equal, "49 points on (-10, -1/e)");

    let mut prev = f64::NEG_INFINITY;
    let monotone = (1..=1000).all(|i| {
        let w = lambert_w(0, Complex64::new(0.1 * i as f64, 0.0)).unwrap().re;
        let ok = w > prev;
        prev = w;
        ok
    });
    r.check("W0 increasing on (0, 100]", monotone, "1000 points");

    let mut ranges_ok = true;
    for i in 0..400 {
        let x = -INV_E + 1e-9 + 0.025 * i as f64;
        let w = lambert_w(0, Complex64::new(x, 0.0)).unwrap();
        ranges_ok &= w.im == 0.0 && w.re > -1.0;
        if x < 0.0 {
            let wm = lambert_w(-1, Complex64::new(x, 0.0)).unwrap();
            ranges_ok &= wm.im == 0.0 && wm.re < -1.0;
        }
        let off = lambert_w(0, Complex64::new(-INV_E - 1e-3 - 0.025 * i as f64, 0.0)).unwrap();
        ranges_ok &= off.im != 0.0 && off.im.abs() < PI && off.re > -1.0;
    }
    r.check("real-line ranges of W0 and W-1", ranges_ok, "400 points each side of -1/e");
}

fn gain_shape_checks(r: &mut Recorder) {
    let limit = [-2.0, -1.0, 0.0, 0.5, 2.0]
        .iter()
        .all(|&g| [1e-9, -1e-9].iter().all(|&x| (gain(g, x).unwrap() - 1.0).abs() < 1e-6));
    r.check("gain tends to 1 at x=0", limit, "gamma in {-2,-1,0,0.5,2}");

    let mut above = true;
    for gamma in [1.5, 2.0, 4.0] {
        let mut prev = 0.0;
        for i in 0..=60 {
            let x = 1e-3 * 10f64.powf(4.0 * i as f64 / 60.0);
            let v = gain(gamma, x).unwrap();
            above &= v < gamma && v > prev;
            prev = v;
        }
    }
    r.check("gamma > 1: gain below gamma and increasing", above, "x in [1e-3, 10]");

    let mut below = true;
    for gamma in [-1.0, 0.0, 1.0 / 3.0, 0.9] {
        let lo = critical_x(gamma).unwrap_or(-20.0);
        for i in 1..400 {
            below &= gain(gamma, lo * i as f64 / 400.0).unwrap() > gamma;
        }
    }
    r.check("gamma < 1: gain above gamma before the stability edge", below, "400 points per gamma");

    let mut shape = true;
    for gamma in [-1.0, 0.0, 1.0 / 3.0, 0.9] {
        let (xs, _) = peak_x(gamma).unwrap();
        let lo = critical_x(gamma).unwrap_or(-20.0);
        let step = |a: f64, b: f64, n: usize| (0..=n).map(move |i| a + (b - a) * i as f64 / n as f64);
        let rising: Vec<f64> = step(lo * 0.999, xs, 300).map(|x| gain(gamma, x).unwrap()).collect();
        let falling: Vec<f64> = step(xs, -1e-6, 300).map(|x| gain(gamma, x).unwrap()).collect();
        shape &= rising.windows(2).all(|w| w[1] >= w[0] - 1e-12);
        shape &= falling.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    }
    r.check("single peak at x*", shape, "finite differences on both sides");

    let mut window = true;
    for gamma in [-1.0, 0.0, 1.0 / 3.0, 0.9] {
        let xt = unity_crossing_x(gamma).unwrap();
        window &= (gain(gamma, xt).unwrap() - 1.0).abs() <= 1e-10;
        let lo = critical_x(gamma).unwrap_or(4.0 * xt);
        for i in 1..400 {
            let x = lo + (0.0 - lo) * i as f64 / 400.0;
            let v = gain(gamma, x).unwrap();
            if (x - xt).abs() > 1e-9 {
                window &= (v > 1.0) == (x > xt);
            }
        }
    }
    r.check("gain above 1 exactly right of the unity crossing", window, "400 points per gamma");
}

fn network_checks(r: &mut Recorder) {
    let spec = example_spectrum();
    let rho0 = spec.lambda2();
    let mut prev = f64::INFINITY;
    let degrading = (1..=400).all(|i| {
        let v = convergence_rate(&spec, &params(-0.5, 0.005 * i as f64)).unwrap();
        let ok = v < prev && v < rho0;
        prev = v;
        ok
    });
    r.check("k=-0.5 rate strictly decreasing", degrading, "tau in (0, 2]");

    let mut chains = true;
    let graphs: Vec<Graph> = std::iter::once(example_graph())
        .chain((0..10).map(|s| Graph::random_connected(8 + s as usize, 0.3, 40 + s).unwrap()))
        .collect();
    for g in &graphs {
        let spec = Spectrum::of_graph(g).unwrap();
        for k in [0.25, 0.5, 1.0, 1.5] {
            let lms: Vec<_> =
                spec.distinct_modes().iter().map(|&l| mode_landmarks(l, 1.0, k, spec.lambda2()).unwrap()).collect();
            for w in lms.windows(2) {
                chains &= w[1].tau_star <= w[0].tau_star && w[1].tau_tilde <= w[0].tau_tilde;
                if let (Some(a), Some(b)) = (w[0].tau_bar.finite(), w[1].tau_bar.finite()) {
                    chains &= b <= a;
                }
            }
        }
    }
    r.check("mode landmark ordering chains", chains, format!("{} graphs x 4 split factors", graphs.len()));
}

fn property_suites() -> Criterion {
    run(8, "shape and ordering property suites", secs(60), |r| {
        lambert_checks(r);
        gain_shape_checks(r);
        network_checks(r);
    })
}

fn main() -> ExitCode {
    let criteria = [
        admissible_delays(),
        rate_landmarks(),
        ultimate_bound(),
        analytic_vs_empirical(),
        control_effort(),
        tracking_ceiling(),
        oracle_equivalence(),
        property_suites(),
    ];
    for c in &criteria {
        print!("{c}");
    }
    let passed = criteria.iter().filter(|c| c.passed()).count();
    println!("acceptance: {passed}/{} criteria passed", criteria.len());
    if passed == criteria.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
