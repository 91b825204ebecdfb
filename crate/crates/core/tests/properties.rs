use proptest::prelude::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use twotime::boundary::{
    classify_boundary_solution, evolve, lueders, roundtrip_consistent, BoundaryPair, Branch, Direction,
};
use twotime::hilbert::{
    c64, partial_trace, reconstruct, spectral_decompose, tensor, validate, ComplexOperator, DensityOperator,
    OperatorKind, Projector, SubsystemLayout, Tolerances, UnitaryOperator,
};
use twotime::random::{random_density, random_state, random_unitary, run_rng};
use twotime::scenarios::{
    beam_splitter, born_recovery_experiment, classify_subsystems, computational_bases, mzi_closed_form,
    mzi_distribution, EventType, FactoredSchedule, IntervalFactor, MeasurementDims,
};

fn random_operator(dim: usize, rng: &mut ChaCha8Rng) -> ComplexOperator {
    let rows: Vec<Vec<_>> = (0..dim)
        .map(|_| (0..dim).map(|_| c64(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect())
        .collect();
    ComplexOperator::from_rows(&rows).unwrap()
}

fn passes(op: &ComplexOperator, kind: OperatorKind) -> bool {
    validate(op, kind, &Tolerances::default()).passed()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tensor_is_associative(seed in any::<u64>(), da in 1usize..4, db in 1usize..4, dc in 1usize..4) {
        let mut rng = run_rng(seed, 0);
        let (a, b, c) = (random_operator(da, &mut rng), random_operator(db, &mut rng), random_operator(dc, &mut rng));
        let left = tensor(&[tensor(&[a.clone(), b.clone()]).unwrap(), c.clone()]).unwrap();
        let right = tensor(&[a.clone(), tensor(&[b.clone(), c.clone()]).unwrap()]).unwrap();
        let flat = tensor(&[a, b, c]).unwrap();
        prop_assert!(left.max_deviation(&right) <= 1e-9);
        prop_assert!(left.max_deviation(&flat) <= 1e-9);
    }

    #[test]
    fn tensor_respects_products(seed in any::<u64>(), da in 1usize..4, db in 1usize..4) {
        let mut rng = run_rng(seed, 0);
        let (a, c) = (random_operator(da, &mut rng), random_operator(da, &mut rng));
        let (b, d) = (random_operator(db, &mut rng), random_operator(db, &mut rng));
        let lhs = tensor(&[a.clone(), b.clone()]).unwrap().product(&tensor(&[c.clone(), d.clone()]).unwrap()).unwrap();
        let rhs = tensor(&[a.product(&c).unwrap(), b.product(&d).unwrap()]).unwrap();
        prop_assert!(lhs.max_deviation(&rhs) <= 1e-9);
    }

    #[test]
    fn partial_trace_preserves_the_trace(seed in any::<u64>(), dims in prop::collection::vec(1usize..4, 1..4), mask in any::<u8>()) {
        let mut rng = run_rng(seed, 0);
        let layout = SubsystemLayout::new(dims.clone()).unwrap();
        let rho = random_density(layout.total(), 1 + seed as usize % layout.total(), &mut rng);
        let keep: Vec<usize> = (0..dims.len()).filter(|i| mask & (1 << i) != 0).collect();
        let reduced = partial_trace(rho.operator(), &layout, &keep).unwrap();
        prop_assert!((reduced.trace() - rho.operator().trace()).norm() <= 1e-10);
        prop_assert!(passes(&reduced, OperatorKind::Density));
        let all = partial_trace(rho.operator(), &layout, &[]).unwrap();
        prop_assert_eq!(all.dim(), 1);
        prop_assert!((all.entry(0, 0) - c64(1.0, 0.0)).norm() <= 1e-10);
    }

    #[test]
    fn spectral_projectors_are_orthogonal_and_reconstruct(seed in any::<u64>(), dim in 1usize..6, rank in 1usize..6) {
        let mut rng = run_rng(seed, 0);
        let rho = random_density(dim, rank.min(dim), &mut rng);
        let tol = Tolerances::default();
        let terms = spectral_decompose(&rho, tol.degen);
        for (i, p) in terms.iter().enumerate() {
            prop_assert!(passes(p.projector.operator(), OperatorKind::Projector));
            for q in &terms[i + 1..] {
                let overlap = p.projector.operator().product(q.projector.operator()).unwrap();
                prop_assert!(overlap.max_deviation(&ComplexOperator::zeros(dim)) <= tol.idem);
            }
        }
        prop_assert!(reconstruct(&terms, dim).max_deviation(rho.operator()) <= tol.recon);
    }

    #[test]
    fn constructed_objects_validate(seed in any::<u64>(), dim in 1usize..6) {
        let mut rng = run_rng(seed, 0);
        let psi = random_state(dim, &mut rng);
        let u = random_unitary(dim, &mut rng);
        let rho = random_density(dim, 1 + seed as usize % dim, &mut rng);
        prop_assert!(passes(&ComplexOperator::outer(&psi, &psi).unwrap(), OperatorKind::State));
        prop_assert!(passes(psi.density().operator(), OperatorKind::Density));
        prop_assert!(passes(psi.projector().operator(), OperatorKind::Projector));
        prop_assert!(passes(u.operator(), OperatorKind::Unitary));
        prop_assert!(passes(u.adjoint().operator(), OperatorKind::Unitary));
        prop_assert!(passes(rho.operator(), OperatorKind::Density));
        prop_assert!(passes(DensityOperator::maximally_mixed(dim).operator(), OperatorKind::Density));
        let evolved = evolve(&rho, &u, Direction::Forward).unwrap();
        prop_assert!(passes(evolved.operator(), OperatorKind::Density));
        let onto = Projector::onto(&[u.column(0)]).unwrap();
        prop_assert!(passes(onto.operator(), OperatorKind::Projector));
        if let Ok(projected) = lueders(&rho, &psi.projector()) {
            prop_assert!(passes(projected.state.operator(), OperatorKind::Density));
        }
        let angle = rng.random_range(-4.0..4.0);
        prop_assert!(passes(beam_splitter(angle).operator(), OperatorKind::Unitary));
    }

    /// Random trials in which every pair that passes the round trip with
    /// non-identity projectors also meets the rank-1 purity conditions.
    #[test]
    fn consistency_implies_pure_rays(seed in any::<u64>(), dim in 2usize..5, pure_initial in any::<bool>()) {
        let mut rng = run_rng(seed, 0);
        let u = random_unitary(dim, &mut rng);
        let p_a = random_state(dim, &mut rng).projector();
        let p_b = random_state(dim, &mut rng).projector();
        let rho_i = if pure_initial { p_a.to_density() } else { random_density(dim, rng.random_range(1..=dim), &mut rng) };
        let rho_f = match lueders(&evolve(&rho_i, &u, Direction::Forward).unwrap(), &p_b) {
            Ok(projected) => projected.state,
            Err(_) => return Ok(()),
        };
        let pair = BoundaryPair::new(rho_i, rho_f, p_a, p_b, u).unwrap();
        if roundtrip_consistent(&pair).unwrap().consistent {
            let tol = Tolerances::default().recon;
            prop_assert!(pair.rho_i().operator().max_deviation(pair.p_a().operator()) <= tol);
            prop_assert!(pair.rho_f().operator().max_deviation(pair.p_b().operator()) <= tol);
            prop_assert_eq!(classify_boundary_solution(&pair).unwrap().branch, Branch::Pure);
        } else {
            prop_assert_eq!(classify_boundary_solution(&pair).unwrap().branch, Branch::Inconsistent);
        }
    }

    #[test]
    fn mzi_mirror_symmetry(theta in 0.0..std::f64::consts::FRAC_PI_2, phi in 0.0..std::f64::consts::FRAC_PI_2) {
        use std::f64::consts::FRAC_PI_2;
        prop_assume!((theta + phi - FRAC_PI_2).abs() > 1e-6);
        let here = mzi_distribution(theta, phi).unwrap();
        let mirror = mzi_distribution(FRAC_PI_2 - theta, FRAC_PI_2 - phi).unwrap();
        prop_assert!((here.two_boundary.c - mirror.two_boundary.d).abs() <= 1e-12);
        prop_assert!((here.two_boundary.d - mirror.two_boundary.c).abs() <= 1e-12);
        let (c, _) = mzi_closed_form(theta, phi);
        let (_, d) = mzi_closed_form(FRAC_PI_2 - theta, FRAC_PI_2 - phi);
        prop_assert!((c - d).abs() <= 1e-12);
    }
}

/// A schedule of local splitters and flips plus CNOT records on qubits.
fn random_schedule(qubits: usize, intervals: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<IntervalFactor>> {
    let x = UnitaryOperator::new(ComplexOperator::from_real_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap()).unwrap();
    let mut rows = vec![vec![0.0; 4]; 4];
    rows[0][0] = 1.0;
    rows[1][1] = 1.0;
    rows[2][3] = 1.0;
    rows[3][2] = 1.0;
    let cnot = UnitaryOperator::new(ComplexOperator::from_real_rows(&rows).unwrap()).unwrap();
    (0..intervals)
        .map(|_| {
            (0..rng.random_range(1..=2))
                .map(|_| {
                    let s = rng.random_range(0..qubits);
                    match rng.random_range(0..4) {
                        0 => IntervalFactor::local(s, beam_splitter(rng.random_range(0.1..1.4))),
                        1 => IntervalFactor::local(s, x.clone()),
                        2 if qubits > 1 => {
                            let t = (s + rng.random_range(1..qubits)) % qubits;
                            IntervalFactor::new(vec![s, t], cnot.clone())
                        }
                        _ => IntervalFactor::local(s, UnitaryOperator::identity(2)),
                    }
                })
                .collect()
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn appending_an_identity_interval_keeps_every_verdict(seed in any::<u64>(), qubits in 1usize..4, n in 1usize..5) {
        let mut rng = run_rng(seed, 0);
        let layout = SubsystemLayout::new(vec![2; qubits]).unwrap();
        let schedule = FactoredSchedule::new(layout.clone(), random_schedule(qubits, n, &mut rng)).unwrap();
        let idle: Vec<IntervalFactor> = (0..qubits).map(|s| IntervalFactor::local(s, UnitaryOperator::identity(2))).collect();
        let longer = schedule.clone().with_interval(idle).unwrap();
        let bases = computational_bases(&layout);
        for t in 0..=n {
            let before = classify_subsystems(&schedule, &bases, t).unwrap();
            let after = classify_subsystems(&longer, &bases, t).unwrap();
            let a: Vec<EventType> = before.subsystems.iter().map(|v| v.event).collect();
            let b: Vec<EventType> = after.subsystems.iter().map(|v| v.event).collect();
            prop_assert_eq!(a, b, "t = {}", t);
        }
    }

    #[test]
    fn adding_a_type_i_subsystem_makes_the_composite_type_i(seed in any::<u64>(), qubits in 1usize..4, n in 1usize..5) {
        let mut rng = run_rng(seed, 0);
        let mut intervals = random_schedule(qubits, n, &mut rng);
        // an extra qubit that only ever idles
        for interval in &mut intervals {
            interval.push(IntervalFactor::local(qubits, UnitaryOperator::identity(2)));
        }
        let layout = SubsystemLayout::new(vec![2; qubits + 1]).unwrap();
        let schedule = FactoredSchedule::new(layout.clone(), intervals).unwrap();
        let everyone: Vec<usize> = (0..=qubits).collect();
        for t in 0..=n {
            let r = classify_subsystems(&schedule, &computational_bases(&layout), t).unwrap();
            prop_assert_eq!(r.subsystems[qubits].event, EventType::TypeI);
            prop_assert_eq!(r.composite(&everyone), EventType::TypeI);
            prop_assert_eq!(r.overall, EventType::TypeI);
        }
    }
}

#[test]
fn born_frequencies_converge_at_the_binomial_rate() {
    let p: f64 = 0.3;
    let mu = [c64(p.sqrt(), 0.0), c64((1.0 - p).sqrt(), 0.0)];
    let sigma1 = (p * (1.0 - p)).sqrt();
    let mut runs = 2_000;
    for _ in 0..5 {
        let report = born_recovery_experiment(&mu, MeasurementDims::default(), runs, 77).unwrap();
        let sigma = sigma1 / (runs as f64).sqrt();
        assert!(report.max_deviation() <= 3.0 * sigma, "runs {runs}: deviation {} > 3σ = {}", report.max_deviation(), 3.0 * sigma);
        // the reported standard error follows 1/√runs
        let scaled = report.outcomes[0].std_error * (runs as f64).sqrt();
        assert!((scaled - sigma1).abs() < 0.02, "runs {runs}: σ√runs = {scaled}");
        runs *= 2;
    }
}
