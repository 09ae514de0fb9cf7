//! Property tests over randomized inputs: linalg contracts, modem
//! round-trips, the real-decomposition homomorphism, and the encoder
//! optimality chain.

use proptest::prelude::*;

use lattice_precode::channel;
use lattice_precode::encoders::{self, Criterion, SphereRadius};
use lattice_precode::linalg::{self, RealMatrix};
use lattice_precode::modem::{self, Constellation, PerturbSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

fn square_matrix(max_n: usize) -> impl Strategy<Value = RealMatrix> {
    (2..=max_n)
        .prop_flat_map(|n| {
            (
                Just(n),
                proptest::collection::vec(-10.0f64..10.0, n * n),
            )
        })
        .prop_map(|(n, data)| RealMatrix::new(n, n, data))
}

fn seeded_problem(k_dim: usize, t: u32, seed: u64) -> encoders::PerturbationProblem {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let c = Constellation::qpsk();
    loop {
        let ch = channel::draw_channel(k_dim / 2, &mut rng);
        let bits: Vec<bool> = (0..k_dim).map(|_| rng.random()).collect();
        let s = modem::map_bits(&bits, &c).unwrap();
        if let Ok(p) = encoders::build_problem(
            &ch.h_real,
            s,
            modem::tau(&c),
            PerturbSet::with_cardinality(t),
            Criterion::Zf,
            0.0,
            k_dim as f64,
        ) {
            return p;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn qr_contract(m in square_matrix(10)) {
        match linalg::qr_decompose(&m) {
            Ok(f) => {
                let n = m.rows();
                let qtq = f.q.transpose().mat_mul(&f.q);
                let orth = qtq.sub(&RealMatrix::identity(n)).frobenius_norm_sq().sqrt();
                prop_assert!(orth <= 1e-10 * n as f64);
                for i in 0..n {
                    prop_assert!(f.r.get(i, i) >= 0.0);
                    for j in 0..i {
                        prop_assert!(f.r.get(i, j).abs() <= 1e-12);
                    }
                }
                let rel = f.q.mat_mul(&f.r).sub(&m).frobenius_norm_sq().sqrt()
                    / m.frobenius_norm_sq().sqrt().max(1e-300);
                prop_assert!(rel <= 1e-9);
            }
            Err(lattice_precode::Error::RankDeficient { .. }) => {}
            Err(e) => return Err(TestCaseError::fail(format!("unexpected: {e}"))),
        }
    }

    #[test]
    fn singular_values_sum_rule(m in square_matrix(10)) {
        let sv = linalg::singular_values(&m).unwrap();
        let sum: f64 = sv.iter().map(|s| s * s).sum();
        let fro = m.frobenius_norm_sq();
        prop_assert!((sum - fro).abs() <= 1e-9 * fro.max(1.0));
    }

    #[test]
    fn modulo_reduce_contract(
        vals in proptest::collection::vec(-50.0f64..50.0, 1..12),
        shift in -10i32..=10,
    ) {
        let tau = 4.0;
        let reduced = modem::modulo_reduce(&vals, tau);
        for &v in &reduced {
            prop_assert!((-tau / 2.0..tau / 2.0).contains(&v));
        }
        // Idempotence.
        prop_assert_eq!(modem::modulo_reduce(&reduced, tau).len(), reduced.len());
        for (a, b) in modem::modulo_reduce(&reduced, tau).iter().zip(reduced.iter()) {
            prop_assert_eq!(a, b);
        }
        // Integer shifts of strictly interior points are invisible.
        let interior: Vec<f64> = vals.iter().map(|v| modem::modulo_scalar(*v, tau) * 0.999).collect();
        let shifted: Vec<f64> = interior.iter().map(|v| v + tau * shift as f64).collect();
        for (a, b) in modem::modulo_reduce(&shifted, tau).iter().zip(interior.iter()) {
            prop_assert!((a - b).abs() <= 1e-9);
        }
    }

    #[test]
    fn map_demap_roundtrip(bits in proptest::collection::vec(any::<bool>(), 1..64)) {
        let c = Constellation::qpsk();
        let s = modem::map_bits(&bits, &c).unwrap();
        prop_assert_eq!(modem::demap(&s, &c), bits);
    }

    #[test]
    fn real_decompose_homomorphism(seed in any::<u64>()) {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let a = channel::draw_channel(3, &mut rng).h_complex;
        let b = channel::draw_channel(3, &mut rng).h_complex;
        let lhs = channel::real_decompose(&a.mat_mul(&b));
        let rhs = channel::real_decompose(&a).mat_mul(&channel::real_decompose(&b));
        prop_assert!(lhs.sub(&rhs).frobenius_norm_sq().sqrt() <= 1e-12);
        let ht = channel::real_decompose(&a.hermitian());
        prop_assert!(ht.sub(&channel::real_decompose(&a).transpose()).frobenius_norm_sq().sqrt() <= 1e-12);
    }

    #[test]
    fn optimality_chain(seed in any::<u64>()) {
        // THP >= FSE(p) >= exhaustive; sphere == exhaustive bit-exactly.
        let prob = seeded_problem(4, 3, seed);
        let oracle = encoders::encode_exhaustive(&prob).unwrap();
        let thp = encoders::encode_thp(&prob);
        let sphere = encoders::encode_sphere(&prob, SphereRadius::DfeMetric);
        prop_assert_eq!(&sphere.t, &oracle.t);
        prop_assert_eq!(sphere.metric, oracle.metric);
        prop_assert!(thp.metric >= oracle.metric - 1e-12);
        for p in 1..=4usize {
            let fse = encoders::encode_fse(&prob, p, None, false);
            prop_assert!(fse.metric <= thp.metric + 1e-12);
            prop_assert!(fse.metric >= oracle.metric - 1e-12);
        }
        // Degenerate beam identities.
        let beam1 = encoders::encode_qrdm(&prob, 1);
        prop_assert_eq!(&beam1.t, &thp.t);
        let full = encoders::encode_qrdm(&prob, 81);
        prop_assert_eq!(&full.t, &oracle.t);
    }

    #[test]
    fn csi_bound_holds(seed in any::<u64>()) {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let h = channel::draw_channel(2, &mut rng).h_real;
        let b = channel::draw_channel(2, &mut rng).h_real.scale(0.05);
        if let Ok((bound, actual)) = lattice_precode::complexity::csi_error_bound(&h, &b) {
            prop_assert!(actual <= bound * (1.0 + 1e-12));
        }
    }
}

/// Closed-form node counts equal the instrumented tallies over the whole
/// (K, T, p) grid.
#[test]
fn node_count_formulas_match_instrumented_grid() {
    use lattice_precode::complexity;
    for k_dim in [4usize, 8, 16] {
        for t in [3u32, 5, 7, 9] {
            let prob = seeded_problem(k_dim, t, 0xC0DE + k_dim as u64 * 31 + t as u64);
            let qrdm = encoders::encode_qrdm(&prob, t as usize);
            assert_eq!(
                qrdm.counts.nodes_visited,
                complexity::qrdme_nodes(k_dim as u32, t).unwrap(),
                "qrdm K={k_dim} T={t}"
            );
            for p in [1usize, 2] {
                let fse = encoders::encode_fse(&prob, p, None, false);
                assert_eq!(
                    fse.counts.nodes_visited,
                    complexity::fse_nodes(k_dim as u32, t, p as u32).unwrap(),
                    "fse K={k_dim} T={t} p={p}"
                );
            }
            let se = encoders::encode_sphere(&prob, SphereRadius::DfeMetric);
            assert!(
                se.counts.nodes_visited <= complexity::se_worst_case_nodes(k_dim as u32, t).unwrap(),
                "sphere bound K={k_dim} T={t}"
            );
        }
    }
}

/// BER ordering of the encoder family at a mid-waterfall SNR point: the
/// linear precoders trail the perturbation searches, the greedy DFE trails
/// the wider searches, and the exact sphere search is best. Single-antenna
/// statistical noise is absorbed with a two-sigma slack per comparison.
/// (Sphere == exhaustive is asserted bit-exactly elsewhere; the exhaustive
/// oracle cannot run at T = 9, K = 8.)
#[test]
fn ber_ordering_at_mid_snr() {
    use lattice_precode::sim::{self, EncoderSpec, SimConfig};
    let cfg = SimConfig {
        n_antennas: 4,
        encoders: vec![
            EncoderSpec::Lzf,
            EncoderSpec::Lmmse,
            EncoderSpec::Thp { t: 9 },
            EncoderSpec::Fse {
                t: 9,
                p: 1,
                use_precompute: false,
                compare_before_square: false,
            },
            EncoderSpec::Qrdm { t: 9, m: None },
            EncoderSpec::Sphere { t: 9 },
        ],
        snr_db: vec![12.0],
        target_min_bit_errors: 500,
        max_vectors: 4_000_000,
        seed: 17,
        zeta_db: None,
        n_f: 1,
        criterion: Criterion::Mmse,
        p_total: None,
    };
    let report = sim::sweep(&cfg).unwrap();
    let bers: Vec<(String, f64, f64)> = report
        .rows
        .iter()
        .map(|r| {
            let se = if r.errors > 0 {
                r.ber / (r.errors as f64).sqrt()
            } else {
                0.0
            };
            (r.encoder.clone(), r.ber, se)
        })
        .collect();
    for pair in bers.windows(2) {
        let (ref a, ba, sa) = pair[0];
        let (ref b, bb, sb) = pair[1];
        assert!(
            ba >= bb - 2.0 * (sa + sb),
            "{a} (ber {ba:.3e}) should not beat {b} (ber {bb:.3e})"
        );
    }

    // At 20 dB plain channel inversion is orders of magnitude worse than
    // the fixed-complexity search.
    let mut cfg20 = cfg;
    cfg20.encoders = vec![
        EncoderSpec::Lzf,
        EncoderSpec::Fse {
            t: 9,
            p: 1,
            use_precompute: false,
            compare_before_square: false,
        },
    ];
    cfg20.snr_db = vec![20.0];
    cfg20.max_vectors = 150_000;
    let lzf = sim::run_point(&cfg20, 0, 0).unwrap();
    let fse = sim::run_point(&cfg20, 1, 0).unwrap();
    assert!(
        lzf.ber > fse.ber,
        "LZF {:.3e} not strictly worse than FSE-p1 {:.3e} at 20 dB",
        lzf.ber,
        fse.ber
    );
}

/// QRD-M with beam width T against FSE-p1 at the same T. The beam keeps
/// the globally best T prefixes per level while the FSE keeps one DFE
/// continuation per first-level candidate, so the beam usually wins — but
/// not pointwise: the beam can prune the prefix whose completion would
/// have won. Measured on this corpus the beam loses 8.2% of draws at
/// T = 3 and 1.4% at T = 9, so the dominance is asserted statistically:
/// strictly lower mean metric and a win rate with headroom below the
/// measured rates.
#[test]
fn qrdm_beam_dominates_fse_p1_statistically() {
    const TRIALS: u64 = 4000;
    for (t, min_win_rate) in [(3u32, 0.85), (9, 0.95)] {
        let mut wins = 0u64;
        let mut sum_beam = 0.0;
        let mut sum_fse = 0.0;
        for seed in 0..TRIALS {
            let prob = seeded_problem(8, t, 0x9_0000 + seed);
            let qrdm = encoders::encode_qrdm(&prob, t as usize);
            let fse = encoders::encode_fse(&prob, 1, None, false);
            sum_beam += qrdm.metric;
            sum_fse += fse.metric;
            if qrdm.metric <= fse.metric + 1e-12 {
                wins += 1;
            }
        }
        let rate = wins as f64 / TRIALS as f64;
        assert!(
            rate >= min_win_rate,
            "T={t}: beam win rate {rate:.3} below {min_win_rate}"
        );
        assert!(
            sum_beam < sum_fse,
            "T={t}: beam mean {sum_beam} not below FSE mean {sum_fse}"
        );
    }
}
