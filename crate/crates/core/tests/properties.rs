//! Randomized invariants across the simulator, training and data modules.

use std::f64::consts::PI;

use adeqnn::circuit::{
    apply_mcry, cccz_angle, clements_u4, denoiser_forward, forward, mcry_expanded_oracle,
    CircuitConfig, ParamVector, Readout, N_PARAMS,
};
use adeqnn::datasets::{forward_diffuse, gen_circle, gen_spiral, linear_schedule};
use adeqnn::metrics::{ssim, statistical_fidelity};
use adeqnn::qcore::{
    apply_gate, hermitian_residual, partial_trace, purify, sample_counts, uhlmann_fidelity,
    unitarity_residual, CMatrix, DensityMatrix, StateVector, C64,
};
use adeqnn::rng::rng_from_seed;
use adeqnn::tasks::qgan::{generator_circuit, generator_forward, PATCHES};
use adeqnn::tasks::tomography::{mle_tomography, TomographyCounts};
use adeqnn::train::{shots_at, OptimizerConfig, OptimizerState, ShotSchedule};
use adeqnn::circuit::ShotsMode;
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;

fn random_state(n: usize, rng: &mut impl Rng) -> StateVector {
    let amps = (0..1 << n)
        .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    StateVector::from_amplitudes(n, amps).unwrap().normalized().unwrap()
}

fn random_mixed(n: usize, rank: usize, rng: &mut impl Rng) -> DensityMatrix {
    let d = 1 << n;
    let mut m = CMatrix::zeros(d, d);
    let mut total = 0.0;
    for _ in 0..rank {
        let w: f64 = rng.random::<f64>() + 0.05;
        m += random_state(n, rng).outer().scale(w);
        total += w;
    }
    DensityMatrix::new(m.unscale(total)).unwrap()
}

fn assert_valid(rho: &DensityMatrix) {
    assert!(hermitian_residual(rho.matrix()) < 1e-10);
    assert!((rho.trace() - 1.0).abs() < 1e-10);
    assert!(rho.eigenvalues()[0] > -1e-9);
}

/// Explicit index summation: entries whose traced bits agree are added
/// into the reduced index built from `keep` (first entry most significant).
fn partial_trace_oracle(m: &CMatrix, n: usize, keep: &[usize]) -> CMatrix {
    let k = keep.len();
    let reduced = |i: usize| keep.iter().fold(0, |acc, &q| (acc << 1) | ((i >> q) & 1));
    let traced_bits = |i: usize| (0..n).filter(|q| !keep.contains(q)).map(|q| (i >> q) & 1).collect::<Vec<_>>();
    let mut out = CMatrix::zeros(1 << k, 1 << k);
    for i in 0..1 << n {
        for j in 0..1 << n {
            if traced_bits(i) == traced_bits(j) {
                out[(reduced(i), reduced(j))] += m[(i, j)];
            }
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn apply_gate_preserves_norm(seed in any::<u64>(), a in 0usize..4, b in 0usize..4) {
        prop_assume!(a != b);
        let mut rng = rng_from_seed(seed);
        let angles: Vec<f64> = (0..16).map(|_| rng.random_range(-PI..PI)).collect();
        let u = clements_u4(&angles).unwrap();
        let s = random_state(4, &mut rng);
        let out = apply_gate(&s, &u, &[a, b]).unwrap();
        prop_assert!((out.norm_sqr() - 1.0).abs() < 1e-12);
        prop_assert!(unitarity_residual(u.matrix()) < 1e-10);
    }

    #[test]
    fn mcry_fast_path_matches_oracle(seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        let s = random_state(4, &mut rng);
        let angles: Vec<f64> = (0..7).map(|_| rng.random_range(-PI..PI)).collect();
        let (fast, p) = apply_mcry(&s, &angles).unwrap();
        let (slow, q) = mcry_expanded_oracle(&s, &angles).unwrap();
        prop_assert!((p - q).abs() < 1e-12);
        for i in 0..16 {
            prop_assert!((fast.amp(i) - slow.amp(i)).norm() < 1e-12);
        }
    }

    #[test]
    fn cccz_success_is_one_ninth(seed in any::<u64>()) {
        let s = random_state(4, &mut rng_from_seed(seed));
        let (_, p) = apply_mcry(&s, &[cccz_angle(); 7]).unwrap();
        prop_assert!((p - 1.0 / 9.0).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn partial_trace_matches_oracle(seed in any::<u64>(), n in 2usize..5, pick in 1usize..64) {
        let mut rng = rng_from_seed(seed);
        let rho = random_mixed(n, 3, &mut rng);
        let mut keep: Vec<usize> = (0..n).filter(|q| pick >> q & 1 == 1).collect();
        prop_assume!(!keep.is_empty() && keep.len() < n);
        if seed % 2 == 1 {
            keep.reverse();
        }
        let got = partial_trace(&rho, &keep).unwrap();
        let want = partial_trace_oracle(rho.matrix(), n, &keep);
        for (g, w) in got.matrix().iter().zip(want.iter()) {
            prop_assert!((g - w).norm() < 1e-12);
        }
        assert_valid(&got);
    }

    #[test]
    fn fidelity_symmetric_and_pure(seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        let (a, b) = (random_mixed(2, 3, &mut rng), random_mixed(2, 2, &mut rng));
        let f = uhlmann_fidelity(&a, &b).unwrap();
        prop_assert!((f - uhlmann_fidelity(&b, &a).unwrap()).abs() < 1e-9);
        let (x, y) = (random_state(2, &mut rng), random_state(2, &mut rng));
        let pure = uhlmann_fidelity(&DensityMatrix::from_pure(&x).unwrap(), &DensityMatrix::from_pure(&y).unwrap()).unwrap();
        prop_assert!((pure - x.inner(&y).norm_sqr()).abs() < 1e-9);
    }

    #[test]
    fn purification_round_trips(seed in any::<u64>(), rank in 1usize..5) {
        let rho = random_mixed(2, rank, &mut rng_from_seed(seed));
        let psi = purify(&rho).unwrap();
        let back = partial_trace(&DensityMatrix::from_pure(&psi).unwrap(), &[3, 1]).unwrap();
        for (g, w) in back.matrix().iter().zip(rho.matrix().iter()) {
            prop_assert!((g - w).norm() < 1e-9);
        }
    }

    #[test]
    fn forward_distribution_normalized(seed in any::<u64>(), x in -1.0f64..1.0, y in -1.0f64..1.0) {
        let params = ParamVector::random_init(&mut rng_from_seed(seed));
        for cfg in [CircuitConfig::ade(Readout::TwoClass), CircuitConfig::baseline(Readout::ThreeClass)] {
            let d = forward(&cfg, &params, &cfg.data_angles(&[x, y]).unwrap()).unwrap();
            prop_assert!((d.p.iter().sum::<f64>() - 1.0).abs() < 1e-10);
            prop_assert!(d.p.iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn forward_is_continuous(seed in any::<u64>(), k in 0usize..N_PARAMS) {
        let cfg = CircuitConfig::ade(Readout::TwoClass);
        let params = ParamVector::random_init(&mut rng_from_seed(seed));
        let angles = cfg.data_angles(&[0.3, -0.6]).unwrap();
        let mut moved = params.values().to_vec();
        moved[k] += 1e-6;
        let a = forward(&cfg, &params, &angles).unwrap();
        let b = forward(&cfg, &ParamVector::new(moved).unwrap(), &angles).unwrap();
        let l1: f64 = a.p.iter().zip(&b.p).map(|(p, q)| (p - q).abs()).sum();
        prop_assert!(l1 < 1e-4);
    }

    #[test]
    fn denoiser_output_valid(seed in any::<u64>(), rank in 1usize..5) {
        let mut rng = rng_from_seed(seed);
        let params = ParamVector::random_init(&mut rng);
        let rho = random_mixed(2, rank, &mut rng);
        assert_valid(&denoiser_forward(&params, &rho, true, 1, &mut rng).unwrap());
    }

    #[test]
    fn diffusion_stays_valid(seed in any::<u64>(), t in 1usize..8) {
        let rho = random_mixed(2, 2, &mut rng_from_seed(seed));
        let chain = forward_diffuse(&rho, &linear_schedule(t).unwrap()).unwrap();
        prop_assert_eq!(chain.len(), t);
        for r in &chain {
            assert_valid(r);
        }
        let end = chain.last().unwrap().matrix();
        let mixed = DensityMatrix::maximally_mixed(4).unwrap();
        prop_assert_eq!(end, mixed.matrix());
    }

    #[test]
    fn mle_output_valid(seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        let mut counts: TomographyCounts = [[0; 4]; 9];
        for row in &mut counts {
            for c in row.iter_mut() {
                *c = rng.random_range(0..50);
            }
            row[0] += 1;
        }
        assert_valid(&mle_tomography(&counts).unwrap());
    }

    #[test]
    fn generator_images_normalized(seed in any::<u64>(), z0 in 0.0f64..1.0, z1 in 0.0f64..1.0) {
        let mut rng = rng_from_seed(seed);
        let patches: Vec<ParamVector> = (0..PATCHES).map(|_| ParamVector::random_init(&mut rng)).collect();
        let circuit = generator_circuit(true, ShotsMode::Exact);
        let img = generator_forward(&circuit, &patches, [z0, z1], 1, &mut rng).unwrap();
        for band in img.chunks(16) {
            prop_assert!(band.iter().all(|v| (0.0..=1.0).contains(v)));
            prop_assert_eq!(band.iter().cloned().fold(0.0, f64::max), 1.0);
        }
    }

    #[test]
    fn metrics_symmetric(seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        let x: Vec<f64> = (0..64).map(|_| rng.random()).collect();
        let y: Vec<f64> = (0..64).map(|_| rng.random()).collect();
        prop_assert!((ssim(&x, &y).unwrap() - ssim(&y, &x).unwrap()).abs() < 1e-12);
        prop_assert!((ssim(&x, &x).unwrap() - 1.0).abs() < 1e-12);
        let (sx, sy): (f64, f64) = (x.iter().sum(), y.iter().sum());
        let p: Vec<f64> = x.iter().map(|v| v / sx).collect();
        let q: Vec<f64> = y.iter().map(|v| v / sy).collect();
        prop_assert_eq!(statistical_fidelity(&p, &q).unwrap(), statistical_fidelity(&q, &p).unwrap());
        prop_assert!((statistical_fidelity(&p, &p).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn params_json_round_trip_exactly(seed in any::<u64>()) {
        let p = ParamVector::random_init(&mut rng_from_seed(seed));
        let text = serde_json::to_string(&p).unwrap();
        let back: ParamVector = serde_json::from_str(&text).unwrap();
        for (a, b) in p.values().iter().zip(back.values()) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn features_in_unit_square(seed in any::<u64>()) {
        let (a, b) = gen_circle(50, 200, seed);
        let (c, d) = gen_spiral(50, 200, seed);
        for p in a.iter().chain(&b).chain(&c).chain(&d) {
            prop_assert!(p.features.iter().all(|v| (-1.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn schedule_nondecreasing(s0 in 1u64..1000, doublings in 0u32..8, total in 1usize..500) {
        let sched = ShotSchedule::new(s0, doublings, total).unwrap();
        let mut last = 0;
        for i in 0..total {
            let s = shots_at(&sched, i).unwrap();
            prop_assert!(s >= last && s <= sched.max_shots());
            last = s;
        }
        prop_assert_eq!(shots_at(&sched, 0).unwrap(), s0);
    }

    #[test]
    fn amsgrad_second_moment_never_decreases(seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        let mut state = OptimizerState::new(OptimizerConfig::amsgrad(), 5).unwrap();
        let mut theta = vec![0.0; 5];
        let mut prev = vec![0.0; 5];
        for _ in 0..100 {
            let g: Vec<f64> = (0..5).map(|_| rng.sample::<f64, _>(StandardNormal) * 3.0).collect();
            state.update(&mut theta, &g).unwrap();
            for (a, b) in state.max_second_moment.iter().zip(&prev) {
                prop_assert!(a >= b);
            }
            prev = state.max_second_moment.clone();
        }
    }

    #[test]
    fn uniform_counts_within_five_sigma(seed in any::<u64>(), k in 2usize..17) {
        let shots = 10_000u64;
        let probs = vec![1.0 / k as f64; k];
        let counts = sample_counts(&probs, shots, &mut rng_from_seed(seed)).unwrap();
        prop_assert_eq!(counts.iter().sum::<u64>(), shots);
        let p = 1.0 / k as f64;
        let sigma = (shots as f64 * p * (1.0 - p)).sqrt();
        for &c in &counts {
            prop_assert!((c as f64 - shots as f64 * p).abs() < 5.0 * sigma);
        }
    }
}
