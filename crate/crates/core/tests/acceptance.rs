//! Acceptance checks, one line per criterion. Runs as a plain binary under
//! `cargo test` and exits nonzero if any criterion fails.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::Rng;
use twotime::boundary::{classify_boundary_solution, construct_consistent_pair, roundtrip_consistent, BoundaryPair, Branch};
use twotime::cli::EXIT_IMPOSSIBLE_BOUNDARY;
use twotime::hilbert::{c64, ComplexOperator, DensityOperator, Projector, StateVector, SubsystemLayout, UnitaryOperator};
use twotime::histories::{chain_operator, history_distribution, HistorySequence, HistorySlot};
use twotime::random::{random_density, random_state, random_unitary, run_rng};
use twotime::scenarios::{
    beam_splitter, born_recovery_experiment, classify_subsystems, computational_bases, mzi_closed_form,
    mzi_distribution, sqm_reference, EventType, FactoredSchedule, IntervalFactor, MeasurementDims, MziSetup,
};
use twotime::scenarios::mzi::{A, B, C, D, E, F};
use twotime::Error;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn lib<T>(r: twotime::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

/// 50×50 grid over (0, π/2)², excluding |θ + φ − π/2| < 1e-6.
fn criterion_1() -> Outcome {
    const TOL: f64 = 1e-12;
    let grid: Vec<f64> = (1..=50).map(|i| i as f64 * FRAC_PI_2 / 51.0).collect();
    let start = Instant::now();
    let (mut worst, mut worst_sum, mut points) = (0.0f64, 0.0f64, 0);
    for &theta in &grid {
        for &phi in &grid {
            if (theta + phi - FRAC_PI_2).abs() < 1e-6 {
                continue;
            }
            let out = lib(mzi_distribution(theta, phi))?;
            let (c, d) = mzi_closed_form(theta, phi);
            worst = worst.max((out.two_boundary.c - c).abs()).max((out.two_boundary.d - d).abs());
            worst_sum = worst_sum.max((out.two_boundary.c + out.two_boundary.d - 1.0).abs());
            points += 1;
        }
    }
    let elapsed = start.elapsed();
    check(
        worst <= TOL && worst_sum <= TOL && elapsed < Duration::from_secs(1),
        format!("{points} points, max |Δ| {worst:.2e}, max |sum − 1| {worst_sum:.2e}, {elapsed:.2?} (< 1 s)"),
    )
}

/// K_c = −sinθ sinφ |a⟩⟨e| and K_d = cosθ cosφ |a⟩⟨e| entrywise.
fn criterion_2() -> Outcome {
    const TOL: f64 = 1e-12;
    let mut rng = run_rng(2, 0);
    let unit = ComplexOperator::diagonal(&[1.0, 0.0]); // |a⟩⟨e| with a = e = 0
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let (theta, phi) = (rng.random_range(0.0..FRAC_PI_2), rng.random_range(0.0..FRAC_PI_2));
        let s = MziSetup::new(theta, phi);
        let kc = lib(chain_operator(&s.slots, &HistorySequence::new(vec![A, C, E]), &s.intervals))?;
        let kd = lib(chain_operator(&s.slots, &HistorySequence::new(vec![A, D, E]), &s.intervals))?;
        worst = worst
            .max(kc.operator().max_deviation(&unit.scale(c64(-theta.sin() * phi.sin(), 0.0))))
            .max(kd.operator().max_deviation(&unit.scale(c64(theta.cos() * phi.cos(), 0.0))));
    }
    check(worst <= TOL, format!("10 random angle pairs, max entry deviation {worst:.2e}"))
}

/// Every sequence through |b⟩ or |f⟩ has weight below 1e-14.
fn criterion_3() -> Outcome {
    const TOL: f64 = 1e-14;
    let mut rng = run_rng(3, 0);
    let (mut worst, mut checked) = (0.0f64, 0);
    for _ in 0..200 {
        let (theta, phi) = (rng.random_range(0.0..FRAC_PI_2), rng.random_range(0.0..FRAC_PI_2));
        if (theta + phi - FRAC_PI_2).abs() < 1e-6 {
            continue;
        }
        let out = lib(mzi_distribution(theta, phi))?;
        for e in &out.distribution.entries {
            let l = e.sequence.labels();
            if l[0] == B || l[2] == F {
                worst = worst.max(e.weight);
                checked += 1;
            }
        }
    }
    check(worst < TOL, format!("{checked} sequences through b or f, max weight {worst:.2e}"))
}

/// Prob(c) = sin²θ at θ = φ; at (π/3, π/4) the gap is (3 − √3)/2 − 3/4.
fn criterion_4() -> Outcome {
    const TOL: f64 = 1e-12;
    let mut worst = 0.0f64;
    for i in 1..50 {
        let theta = i as f64 * FRAC_PI_2 / 50.0;
        if (2.0 * theta - FRAC_PI_2).abs() < 1e-6 {
            continue; // θ = φ = π/4 cannot reach |e⟩
        }
        let out = lib(mzi_distribution(theta, theta))?;
        worst = worst.max((out.two_boundary.c - theta.sin().powi(2)).abs());
    }
    let out = lib(mzi_distribution(FRAC_PI_3, FRAC_PI_4))?;
    let exact = (3.0 - 3f64.sqrt()) / 2.0;
    let gap = out.two_boundary.c - sqm_reference(FRAC_PI_3).0;
    let ok = worst <= TOL && (out.two_boundary.c - exact).abs() <= TOL && (gap - (exact - 0.75)).abs() <= TOL;
    check(
        ok,
        format!(
            "θ = φ max |Prob(c) − sin²θ| {worst:.2e}; at (π/3, π/4) Prob(c) = {:.12} vs sin²θ = 0.75, gap {gap:.12}",
            out.two_boundary.c
        ),
    )
}

/// μ = (√0.3, √0.7), 10⁵ runs: outcome-1 frequency within 0.005 of 0.3.
fn criterion_5() -> Outcome {
    let mu = [c64(0.3f64.sqrt(), 0.0), c64(0.7f64.sqrt(), 0.0)];
    let start = Instant::now();
    let report = lib(born_recovery_experiment(&mu, MeasurementDims::default(), 100_000, 20240611))?;
    let elapsed = start.elapsed();
    let f = report.outcomes[0].frequency;
    check(
        (f - 0.3).abs() <= 0.005 && elapsed < Duration::from_secs(30),
        format!(
            "frequency {f:.5} (σ {:.5}), |Δ| {:.5} ≤ 0.005, {elapsed:.2?} (< 30 s)",
            report.outcomes[0].std_error,
            (f - 0.3).abs()
        ),
    )
}

/// Constructed pairs are pure and round-trip consistent, mixed pairs with
/// rank-1 projectors are inconsistent, and the (ρ_i = ρ_f, P = I) family is
/// the single-boundary branch.
fn criterion_6() -> Outcome {
    let mut rng = run_rng(6, 0);
    let mut pure = 0;
    for _ in 0..1000 {
        let dim = rng.random_range(2..=4);
        let u = random_unitary(dim, &mut rng);
        let p_b = random_state(dim, &mut rng).projector();
        let pair = lib(construct_consistent_pair(&random_state(dim, &mut rng), &p_b, &u))?;
        let verdict = lib(classify_boundary_solution(&pair))?;
        let rt = lib(roundtrip_consistent(&pair))?;
        ensure(verdict.branch == Branch::Pure && rt.consistent, || format!("constructed pair gave {}", verdict.branch))?;
        pure += 1;
    }
    let mut inconsistent = 0;
    for _ in 0..1000 {
        let dim = rng.random_range(2..=4);
        let rank_i = rng.random_range(2..=dim);
        let rank_f = rng.random_range(2..=dim);
        let pair = lib(BoundaryPair::new(
            random_density(dim, rank_i, &mut rng),
            random_density(dim, rank_f, &mut rng),
            random_state(dim, &mut rng).projector(),
            random_state(dim, &mut rng).projector(),
            random_unitary(dim, &mut rng),
        ))?;
        let verdict = lib(classify_boundary_solution(&pair))?;
        let rt = lib(roundtrip_consistent(&pair))?;
        // A consistent mixed pair would contradict the dichotomy.
        ensure(verdict.branch == Branch::Inconsistent && !rt.consistent, || {
            format!("mixed pair gave {} (round trip consistent: {})", verdict.branch, rt.consistent)
        })?;
        inconsistent += 1;
    }
    let mut sqm = 0;
    for k in 0..200 {
        let dim = rng.random_range(2..=4);
        let rho = random_density(dim, rng.random_range(1..=dim), &mut rng);
        // half with trivial dynamics, half with ρ_f the evolved ρ_i
        let u = if k % 2 == 0 { UnitaryOperator::identity(dim) } else { random_unitary(dim, &mut rng) };
        let rho_f = DensityOperator::new(lib(u.conjugate(rho.operator()))?).map_err(|e| e.to_string())?;
        let pair =
            lib(BoundaryPair::new(rho, rho_f, Projector::identity(dim), Projector::identity(dim), u))?;
        let verdict = lib(classify_boundary_solution(&pair))?;
        ensure(verdict.branch == Branch::Sqm, || format!("single-boundary family gave {}", verdict.branch))?;
        sqm += 1;
    }
    Ok(format!("{pure}/1000 pure, {inconsistent}/1000 inconsistent, {sqm}/200 sqm, no counterexample"))
}

/// θ + φ = π/2 is impossible in the library and exits 3 from the CLI.
fn criterion_7() -> Outcome {
    let mut cases = 0;
    for theta in [0.1, 0.4, FRAC_PI_4, 1.0, 1.4] {
        let phi = FRAC_PI_2 - theta;
        let s = MziSetup::new(theta, phi);
        let u = lib(UnitaryOperator::sequence(2, &s.intervals))?;
        let constructed = construct_consistent_pair(&lib(StateVector::basis(2, A))?, &lib(Projector::basis(2, E))?, &u);
        ensure(matches!(constructed, Err(Error::ImpossibleBoundary { .. })), || {
            format!("construct_consistent_pair at θ = {theta} did not fail as impossible")
        })?;
        ensure(matches!(mzi_distribution(theta, phi), Err(Error::ImpossibleBoundary { .. })), || {
            format!("mzi_distribution at θ = {theta} did not fail as impossible")
        })?;
        let out = Command::new(env!("CARGO_BIN_EXE_twotime"))
            .args(["mzi", "--theta", &theta.to_string(), "--phi", &phi.to_string()])
            .output()
            .map_err(|e| e.to_string())?;
        ensure(out.status.code() == Some(EXIT_IMPOSSIBLE_BOUNDARY), || {
            format!("CLI at θ = {theta} exited with {:?}", out.status.code())
        })?;
        cases += 1;
    }
    Ok(format!("{cases} angle pairs: ImpossibleBoundary from both constructors, CLI exit code 3"))
}

/// 500 random instances: probabilities in [0, 1], sum to 1, time-reversal
/// symmetric weights.
fn criterion_8() -> Outcome {
    let (mut worst_sum, mut worst_rev, mut instances) = (0.0f64, 0.0f64, 0);
    for i in 0..500 {
        let mut rng = run_rng(8, i);
        let dim = rng.random_range(2..=4);
        let k = rng.random_range(2..=4);
        let slots: Vec<HistorySlot> = (0..k)
            .map(|t| {
                let u = random_unitary(dim, &mut rng);
                HistorySlot::new(t, (0..dim).map(|c| u.column(c).projector()).collect())
            })
            .collect::<twotime::Result<_>>()
            .map_err(|e| e.to_string())?;
        let intervals: Vec<UnitaryOperator> = (0..k - 1).map(|_| random_unitary(dim, &mut rng)).collect();
        let rho_p = random_state(dim, &mut rng).density();
        let rho_m = random_state(dim, &mut rng).density();
        let dist = lib(history_distribution(&rho_p, &slots, &intervals, &rho_m))?;
        ensure(dist.entries.iter().all(|e| (0.0..=1.0).contains(&e.probability)), || {
            format!("instance {i}: probability outside [0, 1]")
        })?;
        worst_sum = worst_sum.max((dist.total_probability() - 1.0).abs());

        let rev_slots: Vec<HistorySlot> = slots
            .iter()
            .rev()
            .enumerate()
            .map(|(t, s)| HistorySlot::new(t, s.basis().to_vec()))
            .collect::<twotime::Result<_>>()
            .map_err(|e| e.to_string())?;
        let rev_intervals: Vec<UnitaryOperator> = intervals.iter().rev().map(UnitaryOperator::adjoint).collect();
        let rev = lib(history_distribution(&rho_m, &rev_slots, &rev_intervals, &rho_p))?;
        for e in &dist.entries {
            let mut labels = e.sequence.labels().to_vec();
            labels.reverse();
            let w = rev.weight(&labels).ok_or("reversed sequence missing")?;
            worst_rev = worst_rev.max((w - e.weight).abs());
        }
        instances += 1;
    }
    check(
        worst_sum <= 1e-10 && worst_rev <= 1e-12,
        format!("{instances} instances, max |Σp − 1| {worst_sum:.2e} (≤ 1e-10), max reversal |Δw| {worst_rev:.2e} (≤ 1e-12)"),
    )
}

fn cnot() -> UnitaryOperator {
    let rows = [[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 0.0, 1.0], [0.0, 0.0, 1.0, 0.0]];
    let rows: Vec<Vec<f64>> = rows.iter().map(|r| r.to_vec()).collect();
    UnitaryOperator::new(ComplexOperator::from_real_rows(&rows).unwrap()).unwrap()
}

/// Free evolution is Type I, the MZI interior Type II, the recording
/// instrument's parts Type I and Type II, and composites follow their parts.
fn criterion_9() -> Outcome {
    let x = UnitaryOperator::new(ComplexOperator::from_real_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap()).unwrap();
    let qubit = lib(SubsystemLayout::single(2))?;

    let free = lib(FactoredSchedule::new(
        qubit.clone(),
        vec![vec![IntervalFactor::local(0, x.clone())], vec![IntervalFactor::local(0, UnitaryOperator::identity(2))]],
    ))?;
    for t in 0..free.times() {
        let r = lib(classify_subsystems(&free, &computational_bases(free.layout()), t))?;
        ensure(r.overall == EventType::TypeI, || format!("free evolution at t = {t} is {}", r.overall))?;
    }

    let mzi = lib(FactoredSchedule::new(
        qubit,
        vec![vec![IntervalFactor::local(0, beam_splitter(0.4))], vec![IntervalFactor::local(0, beam_splitter(0.9))]],
    ))?;
    let r = lib(classify_subsystems(&mzi, &computational_bases(mzi.layout()), 1))?;
    ensure(r.overall == EventType::TypeII, || format!("MZI interior is {}", r.overall))?;

    // particle, M1, M2: both instrument parts record the path, then only M2
    // (and the particle) pass a further splitter.
    let layout = lib(SubsystemLayout::new(vec![2, 2, 2]))?;
    let instrument = lib(FactoredSchedule::new(
        layout,
        vec![
            vec![IntervalFactor::local(0, beam_splitter(FRAC_PI_4))],
            vec![IntervalFactor::new(vec![0, 1], cnot()), IntervalFactor::new(vec![0, 2], cnot())],
            vec![IntervalFactor::local(2, beam_splitter(FRAC_PI_4)), IntervalFactor::local(0, beam_splitter(0.3))],
        ],
    ))?;
    let r = lib(classify_subsystems(&instrument, &computational_bases(instrument.layout()), 2))?;
    let events: Vec<EventType> = r.subsystems.iter().map(|v| v.event).collect();
    ensure(events[1] == EventType::TypeI && events[2] == EventType::TypeII, || {
        format!("instrument subsystems 1, 2 are {}, {}", events[1], events[2])
    })?;
    ensure(r.composite(&[1, 2]) == EventType::TypeI, || "composite M1+M2 is not Type I".into())?;
    ensure(r.composite(&[0, 2]) == EventType::TypeII, || "composite particle+M2 is not Type II".into())?;
    ensure(r.overall == EventType::TypeI, || "overall verdict is not Type I".into())?;
    Ok("free → Type I, MZI interior → Type II, M1 → Type I, M2 → Type II, composites follow any-Type-I rule".into())
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("MZI closed form over a 50×50 grid", criterion_1),
        ("chain operators K_c, K_d", criterion_2),
        ("zero-weight sequences through b or f", criterion_3),
        ("comparison with the single-boundary value", criterion_4),
        ("Born recovery", criterion_5),
        ("boundary dichotomy", criterion_6),
        ("impossible boundary", criterion_7),
        ("probability-measure properties", criterion_8),
        ("classifier fixtures", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("criterion {}: PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL  {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
