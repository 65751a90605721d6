use std::f64::consts::{FRAC_PI_2, PI};

use georabi::dynamics::{lz_probability, rwa_closed_form, PairAmplitudes};
use georabi::geometry::{curvature, metric, Coupling, LocalGeometry};
use georabi::models::{builtin_model, random_unitary, Band, ModelSettings, ParameterPoint};
use georabi::numerics::linalg::{c, max_abs, max_diff};
use georabi::numerics::{CMatrix, CVector, HermitianMatrix, Propagator, Spectrum};
use georabi::protocols::{hadamard_in_subspace, plan_preparation, Partition, PlanRequest};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn generic_geometry(lambda: [f64; 4]) -> Option<LocalGeometry> {
    let m = builtin_model("dirac4_generic", &ModelSettings::default()).unwrap();
    LocalGeometry::new(m.as_ref(), &ParameterPoint::from(lambda)).ok()
}

fn angles() -> impl Strategy<Value = [f64; 4]> {
    prop::array::uniform4(-PI..PI)
}

fn hermitian(n: usize) -> impl Strategy<Value = HermitianMatrix> {
    prop::collection::vec(-1.0..1.0f64, 2 * n * n).prop_map(move |v| {
        let a = CMatrix::from_fn(n, n, |i, j| c(v[2 * (i * n + j)], v[2 * (i * n + j) + 1]));
        HermitianMatrix::symmetrized(&a + a.adjoint())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn qgt_is_hermitian_with_psd_diagonal(l in angles(), j in 0usize..4) {
        let Some(geo) = generic_geometry(l) else { return Ok(()) };
        for band in [Band::Minus, Band::Plus] {
            let q = geo.qgt(band, j, j).unwrap().matrix;
            prop_assert!(max_diff(&q, &q.adjoint()) <= 1e-12 * max_abs(&q).max(1.0));
            let eig = geo.diagonalize(&geo.coupling_operator(band, Coupling::Single { j }).unwrap()).unwrap();
            prop_assert!(eig.eigenvalues.iter().all(|&x| x > -1e-12));
        }
    }

    #[test]
    fn qgt_transposition_is_adjoint(l in angles(), j in 0usize..4, k in 0usize..4) {
        let Some(geo) = generic_geometry(l) else { return Ok(()) };
        let a = geo.qgt(Band::Minus, j, k).unwrap().matrix;
        let b = geo.qgt(Band::Minus, k, j).unwrap().matrix;
        prop_assert!(max_diff(&a, &b.adjoint()) < 1e-12 * max_abs(&a).max(1.0));
    }

    #[test]
    fn two_tone_identities(l in angles(), j in 0usize..4, k in 0usize..4) {
        prop_assume!(j != k);
        let Some(geo) = generic_geometry(l) else { return Ok(()) };
        for band in [Band::Minus, Band::Plus] {
            let sum = geo.qgt(band, j, j).unwrap().matrix + geo.qgt(band, k, k).unwrap().matrix;
            let q = geo.qgt(band, j, k).unwrap();
            let half = geo.coupling_operator(band, Coupling::TwoTone { j, k, phase: FRAC_PI_2 }).unwrap();
            let zero = geo.coupling_operator(band, Coupling::TwoTone { j, k, phase: 0.0 }).unwrap();
            let f = curvature(&q).matrix() * c(band.sign(), 0.0);
            let g = metric(&q).matrix() * c(2.0, 0.0);
            let scale = max_abs(&sum).max(1.0);
            prop_assert!(max_diff(&(half.matrix - &sum), &f) < 1e-12 * scale);
            prop_assert!(max_diff(&(zero.matrix - &sum), &g) < 1e-12 * scale);
        }
    }

    #[test]
    fn coupling_spectrum_is_gauge_invariant(l in angles(), seed in any::<u64>(), phase in -PI..PI) {
        let Some(geo) = generic_geometry(l) else { return Ok(()) };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = geo.degeneracy();
        let g = geo.regauged(&random_unitary(&mut rng, n), &random_unitary(&mut rng, n));
        for band in [Band::Minus, Band::Plus] {
            let coupling = Coupling::TwoTone { j: 0, k: 3, phase };
            let a = geo.diagonalize(&geo.coupling_operator(band, coupling).unwrap()).unwrap().eigenvalues;
            let b = g.diagonalize(&g.coupling_operator(band, coupling).unwrap()).unwrap().eigenvalues;
            prop_assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-8));
        }
    }

    #[test]
    fn propagation_preserves_norm(h in hermitian(4), dt in 1e-3..2.0f64, re in prop::array::uniform4(-1.0..1.0f64)) {
        let prop = Propagator::new(&h, dt).unwrap();
        let mut psi = CVector::from_iterator(4, re.iter().map(|&x| c(x, 0.5 * x)));
        prop_assume!(psi.norm() > 1e-3);
        psi /= c(psi.norm(), 0.0);
        for _ in 0..200 {
            psi = prop.apply(&psi);
        }
        prop_assert!((psi.norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn closed_form_conserves_pair_weight(q in prop::collection::vec(0.0..1.0f64, 1..5), t in 0.0..500.0f64) {
        let n = q.len();
        let c0 = PairAmplitudes::new(CVector::from_element(n, c(1.0 / (n as f64).sqrt(), 0.0)), CVector::zeros(n));
        let out = rwa_closed_form(&q, 0.0, 0.03, t, &c0).unwrap();
        for nu in 0..n {
            let w = out.minus[nu].norm_sqr() + out.plus[nu].norm_sqr();
            prop_assert!((w - 1.0 / n as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn lz_probability_is_a_probability(q in 0.0..2.0f64, a in 0.0..0.5f64, alpha in 1e-4..1.0f64) {
        let p = lz_probability(q, a, alpha);
        prop_assert!((0.0..=1.0).contains(&p));
        prop_assert!(lz_probability(q, a, 2.0 * alpha) >= p);
    }

    #[test]
    fn planner_output_is_admissible(ratio in 1.05..6.0f64, even_first in any::<bool>()) {
        let partition = if even_first { Partition::new(vec![0], vec![1]) } else { Partition::new(vec![1], vec![0]) };
        if let Ok(plan) = plan_preparation(&[1.0, ratio], &partition, &PlanRequest::new(60.0)) {
            prop_assert!(plan.duration <= 60.0 + 1e-9);
            prop_assert!(plan.landing.iter().all(|&p| p > 0.5));
            prop_assert!(plan.predicted_fidelity >= 0.5 && plan.predicted_fidelity <= 1.0 + 1e-12);
            prop_assert!(plan.overlap_fidelity <= plan.predicted_fidelity + 1e-12);
        }
    }

    #[test]
    fn hadamard_is_an_involution(seed in any::<u64>(), m1 in 0usize..3, m2 in 0usize..3) {
        prop_assume!(m1 != m2);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let frame = random_unitary(&mut rng, 6).columns(0, 3).into_owned();
        let h = hadamard_in_subspace(&frame, (m1, m2)).unwrap();
        let id = CMatrix::identity(6, 6);
        prop_assert!(max_diff(&(&h * h.adjoint()), &id) < 1e-12);
        prop_assert!(max_diff(&(&h * &h), &id) < 1e-12);
    }

    #[test]
    fn spectrum_finds_a_pure_tone(f in 0.05..0.4f64, amp in 0.1..1.0f64) {
        let dt = 1.0;
        let trace: Vec<f64> = (0..4096).map(|i| 0.5 + amp * (std::f64::consts::TAU * f * i as f64 * dt).cos()).collect();
        let s = Spectrum::new(&trace, dt).unwrap();
        let top = s.peaks()[0];
        prop_assert!((top.frequency - std::f64::consts::TAU * f).abs() < s.resolution);
    }
}
