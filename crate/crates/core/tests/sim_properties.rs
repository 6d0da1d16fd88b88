//! Property tests for the statevector engine.

mod common;

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use qpca_core::sim::unitarity_deviation;
use qpca_core::{Circuit, GateOp, PhaseEstimationSpec, StateVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const QUBITS: usize = 4;

fn random_gate(rng: &mut ChaCha8Rng) -> GateOp {
    let t = rng.gen_range(0..QUBITS);
    let op = match rng.gen_range(0..5) {
        0 => GateOp::h(t),
        1 => GateOp::x(t),
        2 => GateOp::ry(t, rng.gen_range(-6.3..6.3)),
        3 => GateOp::phase(t, rng.gen_range(-6.3..6.3)),
        _ => {
            let u = (t + 1) % QUBITS;
            let mut perm: Vec<usize> = (0..4).collect();
            for i in (1..4).rev() {
                perm.swap(i, rng.gen_range(0..=i));
            }
            GateOp::permutation(perm, vec![t, u]).unwrap()
        }
    };
    let c = (t + 2) % QUBITS;
    if rng.gen_bool(0.4) && !op.targets().contains(&c) {
        op.with_control(c, rng.gen_bool(0.5)).unwrap()
    } else {
        op
    }
}

fn random_circuit(seed: u64, len: usize) -> Circuit {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = Circuit::new(QUBITS).unwrap();
    for _ in 0..len {
        c.push(random_gate(&mut rng)).unwrap();
    }
    c
}

fn random_state(seed: u64) -> StateVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amps: Vec<Complex64> = (0..1 << QUBITS)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    StateVector::from_amplitudes(amps.iter().map(|a| a / norm).collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn norm_is_preserved(seed in any::<u64>(), len in 0usize..40) {
        let out = random_state(seed).run(&random_circuit(seed ^ 1, len)).unwrap();
        prop_assert!((out.norm_sqr() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn runs_compose(seed in any::<u64>(), a in 0usize..20, b in 0usize..20) {
        let s = random_state(seed);
        let c1 = random_circuit(seed ^ 2, a);
        let c2 = random_circuit(seed ^ 3, b);
        let mut joined = c1.clone();
        joined.append(&c2).unwrap();
        let once = s.run(&joined).unwrap();
        let twice = s.run(&c1).unwrap().run(&c2).unwrap();
        for (x, y) in once.amplitudes().iter().zip(twice.amplitudes()) {
            prop_assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn runs_are_deterministic(seed in any::<u64>()) {
        let s = random_state(seed);
        let c = random_circuit(seed, 25);
        prop_assert_eq!(s.run(&c).unwrap(), s.run(&c).unwrap());
        prop_assert_eq!(s.sample(500, seed).unwrap(), s.sample(500, seed).unwrap());
    }

    #[test]
    fn outcome_probabilities_sum_to_one(seed in any::<u64>(), q in 0usize..QUBITS) {
        let s = random_state(seed).run(&random_circuit(seed ^ 4, 10)).unwrap();
        let p0 = s.outcome_probability(q, false).unwrap();
        let p1 = s.outcome_probability(q, true).unwrap();
        prop_assert!((p0 + p1 - 1.0).abs() < 1e-9);
        let (p, collapsed) = s.post_select(q, true).unwrap();
        prop_assert!((p - p1).abs() < 1e-15);
        prop_assert!((collapsed.norm_sqr() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn constructed_gates_are_unitary(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_gate(&mut rng);
        prop_assert!(unitarity_deviation(&g.matrix()) < 1e-10);
        prop_assert!(unitarity_deviation(&g.inverse().matrix()) < 1e-10);
    }
}

/// `exp(X)` by scaling and squaring a truncated Taylor series; no eigensolver.
fn taylor_expm(x: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let norm = x.map(|z| z.norm()).sum();
    let squarings = (norm.max(1.0).log2().ceil() as u32) + 4;
    let scaled = x / Complex64::new(2f64.powi(squarings as i32), 0.0);
    let d = x.nrows();
    let mut term = DMatrix::<Complex64>::identity(d, d);
    let mut sum = term.clone();
    for k in 1..30 {
        term = &term * &scaled / Complex64::new(k as f64, 0.0);
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

#[test]
fn spectral_exponential_matches_taylor_series() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for trial in 0..10 {
        let d = if trial % 2 == 0 { 2 } else { 4 };
        let values: Vec<f64> = (0..d).map(|_| rng.gen_range(-2.0..7.0)).collect();
        let a = common::symmetric_with_spectrum(&mut rng, &values);
        let n = 3;
        let spec = PhaseEstimationSpec::new(a.clone(), n).unwrap();
        for j in 0..n {
            let factor = 2.0 * std::f64::consts::PI * (1 << j) as f64 / (1 << n) as f64;
            let x = a.map(|v| Complex64::new(0.0, v * factor));
            let dev = (spec.unitary_power(j).unwrap() - taylor_expm(&x)).map(|z| z.norm()).max();
            assert!(dev < 1e-9, "trial {trial} j={j}: {dev}");
        }
    }
}
