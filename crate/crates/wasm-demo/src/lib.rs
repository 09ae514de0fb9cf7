//! Browser bindings for the precoding simulator.
//!
//! Three interactive operations, each returning a JSON string for the
//! static page in `www/` to render:
//!
//! - [`complexity_profile`] — closed-form visited-node counts and the
//!   FSE/QRD-M ratio across lattice dimensions,
//! - [`encode_showcase`] — one seeded channel and data vector pushed
//!   through the whole encoder family, with the traced FSE search tree,
//! - [`ber_curve`] — a small in-browser Monte Carlo BER sweep.
//!
//! Everything is seeded and deterministic; rerunning with the same inputs
//! redraws the same picture.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::Serialize;
use wasm_bindgen::prelude::*;

use lattice_precode::channel;
use lattice_precode::complexity;
use lattice_precode::encoders::{self, Criterion, EncoderResult, SphereRadius};
use lattice_precode::modem::{self, Constellation, PerturbSet};
use lattice_precode::sim::{self, EncoderSpec, SimConfig};

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).unwrap_or_else(|e| format!("{{\"error\":\"{e}\"}}"))
}

#[derive(Serialize)]
struct ComplexityRow {
    k: u32,
    se_worst: Option<u64>,
    qrdm: u64,
    fse: u64,
    rho: f64,
}

#[derive(Serialize)]
struct ComplexityProfile {
    t: u32,
    p: u32,
    rows: Vec<ComplexityRow>,
}

/// Closed-form complexity versus the real lattice dimension K = 2, 4, ...,
/// `k_max`, at candidate-set size `t` and FSE depth `p`.
#[wasm_bindgen]
pub fn complexity_profile(k_max: u32, t: u32, p: u32) -> String {
    let mut rows = Vec::new();
    for k in (2..=k_max.max(2)).step_by(2) {
        let p_eff = p.clamp(1, k);
        let (Ok(qrdm), Ok(fse)) = (complexity::qrdme_nodes(k, t), complexity::fse_nodes(k, t, p_eff))
        else {
            continue;
        };
        rows.push(ComplexityRow {
            k,
            se_worst: complexity::se_worst_case_nodes(k, t).ok(),
            qrdm,
            fse,
            rho: fse as f64 / qrdm as f64,
        });
    }
    to_json(&ComplexityProfile { t, p, rows })
}

#[derive(Serialize)]
struct ShowcaseEntry {
    name: String,
    t: Vec<i32>,
    metric: f64,
    gamma: f64,
    nodes: u64,
    mults: u64,
    adds: u64,
}

#[derive(Serialize)]
struct Showcase {
    k: usize,
    t_count: usize,
    entries: Vec<ShowcaseEntry>,
    tree: encoders::FseTrace,
    tree_p: usize,
}

fn entry(name: &str, r: &EncoderResult) -> ShowcaseEntry {
    ShowcaseEntry {
        name: name.to_string(),
        t: r.t.clone(),
        metric: r.metric,
        gamma: r.gamma,
        nodes: r.counts.nodes_visited,
        mults: r.counts.real_mults,
        adds: r.counts.real_adds,
    }
}

/// Draws one seeded channel and data vector at `n` antennas and runs the
/// whole encoder family on it; also returns the traced FSE tree at depth
/// `p` for rendering.
#[wasm_bindgen]
pub fn encode_showcase(seed: u32, n: u32, t: u32, p: u32, snr_db: f64) -> String {
    let n = n.clamp(1, 8) as usize;
    let t = if t.is_multiple_of(2) { t + 1 } else { t }.clamp(3, 11);
    let k_dim = 2 * n;
    let p = (p as usize).clamp(1, k_dim);
    let c = Constellation::qpsk();
    let tau = modem::tau(&c);
    let set = PerturbSet::with_cardinality(t);
    let sigma_n_sq = 2.0 * 10f64.powf(-snr_db / 10.0);

    let mut rng = ChaCha12Rng::seed_from_u64(seed as u64);
    let prob = loop {
        let ch = channel::draw_channel(n, &mut rng);
        let bits: Vec<bool> = (0..k_dim).map(|_| rng.random()).collect();
        let s = modem::map_bits(&bits, &c).expect("bit length");
        match encoders::build_problem(
            &ch.h_real,
            s,
            tau,
            set,
            Criterion::Mmse,
            sigma_n_sq,
            k_dim as f64,
        ) {
            Ok(p) => break p,
            Err(_) => continue,
        }
    };

    let mut entries = vec![
        entry("THP", &encoders::encode_thp(&prob)),
        entry("FSE-p1", &encoders::encode_fse(&prob, 1, None, false)),
    ];
    if p > 1 {
        entries.push(entry(
            &format!("FSE-p{p}"),
            &encoders::encode_fse(&prob, p, None, false),
        ));
    }
    entries.push(entry(
        "QRDM-E",
        &encoders::encode_qrdm(&prob, set.cardinality()),
    ));
    entries.push(entry(
        "SE (optimal)",
        &encoders::encode_sphere(&prob, SphereRadius::DfeMetric),
    ));

    let tree = encoders::fse_trace(&prob, p);
    to_json(&Showcase {
        k: k_dim,
        t_count: set.cardinality(),
        entries,
        tree,
        tree_p: p,
    })
}

#[derive(Serialize)]
struct BerPoint {
    snr_db: f64,
    ber: f64,
    bits: u64,
    errors: u64,
    avg_nodes: f64,
}

#[derive(Serialize)]
struct BerCurve {
    encoder: String,
    points: Vec<BerPoint>,
}

/// Small in-browser BER sweep for one encoder. `encoder` is one of
/// "lzf", "lmmse", "thp", "se", "qrdm", "fse".
#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn ber_curve(
    seed: u32,
    n: u32,
    encoder: &str,
    t: u32,
    p: u32,
    snr_lo: f64,
    snr_hi: f64,
    snr_step: f64,
    max_vectors: u32,
) -> String {
    let n = n.clamp(1, 4) as usize;
    let t = if t.is_multiple_of(2) { t + 1 } else { t }.clamp(3, 9);
    let k_dim = 2 * n;
    let p = (p as usize).clamp(1, k_dim);
    let spec = match encoder {
        "lzf" => EncoderSpec::Lzf,
        "lmmse" => EncoderSpec::Lmmse,
        "thp" => EncoderSpec::Thp { t },
        "se" => EncoderSpec::Sphere { t },
        "qrdm" => EncoderSpec::Qrdm { t, m: None },
        _ => EncoderSpec::Fse {
            t,
            p,
            use_precompute: false,
            compare_before_square: false,
        },
    };

    let mut snrs = Vec::new();
    let mut s = snr_lo;
    let step = snr_step.max(0.5);
    while s <= snr_hi + 1e-9 && snrs.len() < 40 {
        snrs.push(s);
        s += step;
    }

    let cfg = SimConfig {
        n_antennas: n,
        encoders: vec![spec.clone()],
        snr_db: snrs.clone(),
        target_min_bit_errors: 200,
        max_vectors: max_vectors.clamp(100, 2_000_000) as u64,
        seed: seed as u64,
        zeta_db: None,
        n_f: 1,
        criterion: Criterion::Mmse,
        p_total: None,
    };
    let mut points = Vec::new();
    for (i, &snr) in snrs.iter().enumerate() {
        match sim::run_point(&cfg, 0, i) {
            Ok(row) => points.push(BerPoint {
                snr_db: snr,
                ber: row.ber,
                bits: row.bits,
                errors: row.errors,
                avg_nodes: row.avg_nodes,
            }),
            Err(_) => break,
        }
    }
    to_json(&BerCurve {
        encoder: spec.label().to_string(),
        points,
    })
}
