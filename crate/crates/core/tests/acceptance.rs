//! Acceptance suite. Every criterion prints one PASS/FAIL line; the test
//! fails if any criterion does.

use std::f64::consts::PI;
use std::io::Write;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use peristalsis_core::controllability::analyze_with_tol;
use peristalsis_core::experiments::{
    run_frequency_grid, run_phase_sweep, run_trace, ExperimentConfig, REFERENCE_SPEED,
};
use peristalsis_core::gait::{
    pid_track, simulate_gait, Actuator, PressureProfile, ValvePlant, DEFAULT_SETTLING_WINDOW_S,
};
use peristalsis_core::model::{
    build_mimo, build_siso, center_of_mass, frictionless_reachable_directions, RobotParams, StateVec,
};
use peristalsis_core::numerics::zoh_discretize;
use peristalsis_core::simulation::{
    mechanical_energy, simulate, simulate_from, DriveSignals, FrictionMode, SignalKind, SignalSpec, SimTrace,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn report(id: usize, name: &str, budget: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let mut out = f();
    let elapsed = start.elapsed();
    if elapsed > budget {
        out.pass = false;
        out.detail.push_str(&format!("; over the {budget:?} budget"));
    }
    let line = format!(
        "[{}] criterion {id:>2} {name}: {} ({:.2} s)\n",
        if out.pass { "PASS" } else { "FAIL" },
        out.detail,
        elapsed.as_secs_f64()
    );
    // written past the test harness capture so the lines always show
    let _ = std::io::stderr().write_all(line.as_bytes());
    out.pass
}

fn random_params(rng: &mut ChaCha8Rng) -> RobotParams {
    let log_uniform = |rng: &mut ChaCha8Rng, lo: f64, hi: f64| (rng.random_range(lo.ln()..hi.ln())).exp();
    RobotParams {
        m1: log_uniform(rng, 0.01, 10.0),
        m2: log_uniform(rng, 0.01, 10.0),
        k: log_uniform(rng, 1.0, 1e4),
        c: rng.random_range(0.0..10.0),
        ..RobotParams::default()
    }
}

fn matrix_of(v: &[[f64; 4]]) -> DMatrix<f64> {
    DMatrix::from_fn(4, v.len(), |r, c| v[c][r])
}

/// `X (XᵀX)⁻¹ Xᵀ`
fn projector(x: &DMatrix<f64>) -> DMatrix<f64> {
    let gram = x.transpose() * x;
    x * gram.try_inverse().expect("independent columns") * x.transpose()
}

/// Friction acceleration times velocity must never be positive.
fn dissipation_violations(trace: &SimTrace, p: &RobotParams) -> usize {
    trace
        .states
        .iter()
        .zip(&trace.inputs)
        .filter(|(s, u)| -u.f1 / p.m1 * s.v1 > 0.0 || -u.f2 / p.m2 * s.v2 > 0.0)
        .count()
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut bad = Vec::new();
    for _ in 0..100 {
        let p = random_params(&mut rng);
        for tol in [1e-12, 1e-9, 1e-6] {
            let siso = analyze_with_tol(&build_siso(&p).unwrap(), &p, tol).unwrap().rank;
            let mimo = analyze_with_tol(&build_mimo(&p).unwrap(), &p, tol).unwrap().rank;
            if siso != 2 || mimo != 4 {
                bad.push(format!("{p:?} tol {tol}: {siso}/{mimo}"));
            }
        }
    }
    Outcome {
        pass: bad.is_empty(),
        detail: match bad.first() {
            None => "100 draws x 3 tolerances, siso rank 2 and mimo rank 4 throughout".into(),
            Some(b) => format!("{} rank mismatches, first {b}", bad.len()),
        },
    }
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let p = random_params(&mut rng);
        let r = analyze_with_tol(&build_siso(&p).unwrap(), &p, 1e-9).unwrap();
        let [c1, c2] = frictionless_reachable_directions(&p);
        let chi = DMatrix::from_fn(4, 2, |r, c| if c == 0 { c1[r] } else { c2[r] });
        let diff = projector(&matrix_of(&r.basis)) - projector(&chi);
        worst = worst.max(diff.norm());
    }
    Outcome {
        pass: worst <= 1e-8,
        detail: format!("max projector distance {worst:.2e} over 100 draws (limit 1e-8)"),
    }
}

fn random_drive(rng: &mut ChaCha8Rng) -> SignalSpec {
    let kind = match rng.random_range(0..3) {
        0 => SignalKind::Sine,
        1 => SignalKind::Square,
        _ => SignalKind::Constant,
    };
    SignalSpec {
        kind,
        freq: rng.random_range(0.05..1.0),
        amplitude: rng.random_range(0.0..20.0),
        bias: rng.random_range(-10.0..20.0),
        phase: rng.random_range(0.0..2.0 * PI),
        duty: rng.random_range(0.1..0.9),
    }
}

fn criterion_3(traces: &mut Vec<(SimTrace, RobotParams)>) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let p = RobotParams {
            m1: rng.random_range(0.05..1.0),
            m2: rng.random_range(0.05..1.0),
            k: rng.random_range(50.0..500.0),
            c: rng.random_range(0.0..2.0),
            ..RobotParams::default()
        };
        let s = DriveSignals {
            fa: random_drive(&mut rng),
            mu1: SignalSpec::constant(0.0),
            mu2: SignalSpec::constant(0.0),
        };
        let t = simulate(&p, &s, 60.0, 1e-3, FrictionMode::SignOnly).unwrap();
        worst = worst.max(t.states.iter().map(|x| center_of_mass(x, &p).abs()).fold(0.0, f64::max));
        traces.push((t, p));
    }
    Outcome {
        pass: worst <= 1e-9,
        detail: format!("max |x_cm| = {worst:.2e} m over 10 random drives (limit 1e-9)"),
    }
}

/// Substepped Taylor series: `Ad = E(h)^N`, `Bd = Σ E(h)^j Γ(h) B`.
fn series_zoh(a: &DMatrix<f64>, b: &DMatrix<f64>, t: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let norm = a.row_iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
    let n = ((norm * t / 0.05).ceil() as usize).max(1);
    let h = t / n as f64;
    let id = DMatrix::<f64>::identity(4, 4);
    let mut e = id.clone();
    let mut gamma = id.clone() * h;
    let mut term = id.clone();
    for k in 1..=24 {
        term = &term * a * (h / k as f64);
        e += &term;
        gamma += &term * (h / (k + 1) as f64);
    }
    let bh = gamma * b;
    let mut ad = id;
    let mut bd = DMatrix::zeros(4, b.ncols());
    for _ in 0..n {
        bd += &ad * &bh;
        ad = &e * ad;
    }
    (ad, bd)
}

fn rel(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).amax() / b.amax()
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst_series: f64 = 0.0;
    let mut worst_nil: f64 = 0.0;
    for _ in 0..50 {
        let p = RobotParams {
            m1: rng.random_range(0.05..5.0),
            m2: rng.random_range(0.05..5.0),
            k: rng.random_range(1.0..1e3),
            c: rng.random_range(0.0..10.0),
            ..RobotParams::default()
        };
        let sys = build_mimo(&p).unwrap();
        let t = [1e-3, 5e-3, 1e-2][rng.random_range(0..3)];
        let d = zoh_discretize(&sys, t).unwrap();
        let (ad, bd) = series_zoh(&sys.a, &sys.b, t);
        worst_series = worst_series.max(rel(&d.ad, &ad)).max(rel(&d.bd, &bd));

        let q = RobotParams { k: 0.0, c: 0.0, ..p };
        let d = zoh_discretize(&build_mimo(&q).unwrap(), t).unwrap();
        let (h1, h2) = (t * t / (2.0 * q.m1), t * t / (2.0 * q.m2));
        let (g1, g2) = (t / q.m1, t / q.m2);
        #[rustfmt::skip]
        let ad = DMatrix::from_row_slice(4, 4, &[
            1.0, t, 0.0, 0.0,
            0.0, 1.0, 0.0, 0.0,
            0.0, 0.0, 1.0, t,
            0.0, 0.0, 0.0, 1.0,
        ]);
        #[rustfmt::skip]
        let bd = DMatrix::from_row_slice(4, 3, &[
            -h1, -h1, 0.0,
            -g1, -g1, 0.0,
            h2, 0.0, -h2,
            g2, 0.0, -g2,
        ]);
        let entrywise = |x: &DMatrix<f64>, y: &DMatrix<f64>| {
            x.iter()
                .zip(y.iter())
                .map(|(u, v)| (u - v).abs() / v.abs().max(1.0))
                .fold(0.0, f64::max)
        };
        let relwise = |x: &DMatrix<f64>, y: &DMatrix<f64>| {
            x.iter()
                .zip(y.iter())
                .map(|(u, v)| if *v == 0.0 { u.abs() } else { ((u - v) / v).abs() })
                .fold(0.0, f64::max)
        };
        worst_nil = worst_nil.max(entrywise(&d.ad, &ad)).max(relwise(&d.bd, &bd));
    }
    Outcome {
        pass: worst_series <= 1e-10 && worst_nil <= 1e-14,
        detail: format!(
            "series oracle rel {worst_series:.2e} (limit 1e-10), nilpotent closed form {worst_nil:.2e} (limit 1e-14), 50 draws"
        ),
    }
}

fn criterion_5(traces: &mut Vec<(SimTrace, RobotParams)>) -> Outcome {
    let cfg = ExperimentConfig::default();
    let (trace, s) = run_trace(&cfg).unwrap();
    let speed = s.average_speed;
    // direction depends on the phase sign convention; magnitude is compared
    let err = (speed.abs() - REFERENCE_SPEED) / REFERENCE_SPEED;
    traces.push((trace, cfg.params));
    Outcome {
        pass: err.abs() <= 0.2 && s.linearity_r2 >= 0.99,
        detail: format!(
            "fa amplitude = bias = {} N: speed {speed:.5} m/s (|v| {:+.2}% vs {REFERENCE_SPEED}), r2 {:.5}",
            cfg.signals.fa.amplitude,
            100.0 * err,
            s.linearity_r2
        ),
    }
}

fn criterion_6() -> Outcome {
    let cfg = ExperimentConfig::default();
    let sweep = run_phase_sweep(&cfg, 0).unwrap();
    let light = sweep.mass_trials.iter().position(|&m| m == 0.1).unwrap();
    let heavy = sweep.mass_trials.iter().position(|&m| m == 0.2).unwrap();
    let both_signs = (0..sweep.mass_trials.len()).all(|j| {
        let t = sweep.trial(j);
        t.iter().any(|&d| d > 0.0) && t.iter().any(|&d| d < 0.0)
    });
    let (p1, p2) = (sweep.peak(light), sweep.peak(heavy));
    Outcome {
        pass: both_signs && p2 >= p1,
        detail: format!(
            "{} phases: both signs {both_signs}; peak |dx1| m=0.2 {p2:.4} m vs m=0.1 {p1:.4} m (ratio {:.3}, need >= 1)",
            sweep.phases.len(),
            p2 / p1
        ),
    }
}

fn criterion_7() -> Outcome {
    let cfg = ExperimentConfig::default();
    let grid = run_frequency_grid(&cfg, 0).unwrap();
    let mut off = grid.off_diagonal();
    off.sort_by(f64::total_cmp);
    let n = off.len();
    let median = if n % 2 == 1 { off[n / 2] } else { 0.5 * (off[n / 2 - 1] + off[n / 2]) };
    let diag = grid.diagonal();
    let min_ratio = diag.iter().map(|d| d.1 / median).fold(f64::INFINITY, f64::min);
    let at = |f: f64| diag.iter().find(|d| d.0 == f).map(|d| d.1).unwrap();
    let monotone = at(0.25) < at(0.5) && at(0.5) < at(1.0);
    Outcome {
        pass: min_ratio >= 10.0 && monotone,
        detail: format!(
            "min diagonal/median off-diagonal = {min_ratio:.1} (need >= 10); |dx1| at 0.25/0.5/1 Hz = {:.3}/{:.3}/{:.3} m",
            at(0.25),
            at(0.5),
            at(1.0)
        ),
    }
}

fn four_phase_config() -> ExperimentConfig {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/gait.json");
    ExperimentConfig::load(Some(path.as_ref()), &[]).unwrap()
}

fn criterion_8(traces: &mut Vec<(SimTrace, RobotParams)>) -> Outcome {
    let cfg = four_phase_config();
    let run = simulate_gait(&cfg.gait.schedule, &cfg.params, &cfg.gait.options).unwrap();
    let m = run.metrics;
    let anchored = run.anchoring.len() == 2 && run.anchoring.iter().all(|c| c.feasible);
    let forward = run.stride_displacements.iter().all(|&d| d > 0.0);
    let band = (0.003..=0.30).contains(&m.stride_length);
    let pass = anchored
        && run.max_anchored_slip < 1e-3
        && m.stride_period == 4.0
        && m.protrusion_time == 1.6
        && m.stance_time == 2.4
        && forward
        && band;
    traces.push((run.trace, cfg.params));
    Outcome {
        pass,
        detail: format!(
            "anchoring {anchored}, max anchored slip {:.2e} m, period {} s, every stride forward {forward}, stride {:.4} m",
            run.max_anchored_slip, m.stride_period, m.stride_length
        ),
    }
}

fn criterion_9() -> Outcome {
    let cfg = four_phase_config();
    let opts = cfg.gait.options;
    let mut rmse = Vec::new();
    for a in Actuator::ALL {
        let profile = PressureProfile::from_schedule(&cfg.gait.schedule, a, opts.strides);
        rmse.push(pid_track(&profile, opts.gains.get(a), &opts.plant, opts.dt).unwrap().1);
    }
    let slow = ValvePlant {
        tau_deflate: 3.0 * opts.plant.tau_inflate,
        ..opts.plant
    };
    let stride = cfg.gait.schedule.phase_steps(opts.dt).unwrap().iter().sum::<usize>();
    let profile = PressureProfile::from_schedule(&cfg.gait.schedule, Actuator::Central, opts.strides);
    let (trace, _) = pid_track(&profile, opts.gains.central, &slow, opts.dt).unwrap();
    let residual = (1..=opts.strides)
        .map(|k| trace.measured[k * stride - 1])
        .fold(f64::INFINITY, f64::min);
    Outcome {
        pass: rmse.iter().all(|&r| r < 0.02) && residual > 0.0,
        detail: format!(
            "rmse rear/central/front = {:.2e}/{:.2e}/{:.2e} psi after {DEFAULT_SETTLING_WINDOW_S} s windows (limit 0.02); slow deflation leaves >= {residual:.3} psi",
            rmse[0], rmse[1], rmse[2]
        ),
    }
}

fn criterion_10(traces: &[(SimTrace, RobotParams)]) -> Outcome {
    let samples: usize = traces.iter().map(|t| t.0.len()).sum();
    let violations: usize = traces.iter().map(|(t, p)| dissipation_violations(t, p)).sum();

    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst_karnopp = f64::NEG_INFINITY;
    let mut worst_sign = f64::NEG_INFINITY;
    for _ in 0..5 {
        let p = RobotParams {
            c: 0.0,
            ..RobotParams::default().with_masses(rng.random_range(0.05..1.0), rng.random_range(0.05..1.0))
        };
        let s = DriveSignals {
            fa: SignalSpec::constant(0.0),
            mu1: SignalSpec::square(rng.random_range(0.1..1.0), 0.1, 1.0, 0.5, 0.0),
            mu2: SignalSpec::square(rng.random_range(0.1..1.0), 0.1, 1.0, 0.5, 1.0),
        };
        let init = StateVec::new(
            rng.random_range(-0.05..0.05),
            rng.random_range(-0.5..0.5),
            rng.random_range(-0.05..0.05),
            rng.random_range(-0.5..0.5),
        );
        let e0 = mechanical_energy(&init, &p);
        for (mode, worst) in [
            (FrictionMode::karnopp(), &mut worst_karnopp),
            (FrictionMode::SignOnly, &mut worst_sign),
        ] {
            let t = simulate_from(&p, &s, 10.0, 1e-3, mode, init).unwrap();
            for w in t.states.windows(2) {
                let growth = (mechanical_energy(&w[1], &p) - mechanical_energy(&w[0], &p)) / e0;
                *worst = worst.max(growth);
            }
        }
    }
    let asserted = cfg!(debug_assertions);
    Outcome {
        pass: asserted && violations == 0 && worst_karnopp <= 1e-6,
        detail: format!(
            "debug assertions {asserted}; {violations} sign violations in {samples} retained samples; \
             f_a = 0 audit worst step growth {worst_karnopp:.1e} E0 stick-slip (limit 1e-6), \
             {worst_sign:.1e} E0 sign-only (diagnostic)"
        ),
    }
}

#[test]
fn acceptance_criteria() {
    let mut traces = Vec::new();
    let s = Duration::from_secs;
    let results = [
        report(1, "controllability ranks", s(1), criterion_1),
        report(2, "controllable subspace", s(1), criterion_2),
        report(3, "frictionless immobility", s(10), || criterion_3(&mut traces)),
        report(4, "discretization oracle", s(5), criterion_4),
        report(5, "calibrated 1 Hz run", s(5), || criterion_5(&mut traces)),
        report(6, "phase sweep properties", s(120), criterion_6),
        report(7, "frequency grid diagonal", s(300), criterion_7),
        report(8, "gait feasibility", s(10), || criterion_8(&mut traces)),
        report(9, "pressure tracking", s(5), criterion_9),
        report(10, "friction dissipation", s(60), || criterion_10(&traces)),
    ];
    let failed: Vec<usize> = (1..=10).filter(|&i| !results[i - 1]).collect();
    let summary = format!("acceptance: {}/10 criteria pass\n", 10 - failed.len());
    let _ = std::io::stderr().write_all(summary.as_bytes());
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
