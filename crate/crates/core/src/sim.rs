//! Monte Carlo BER engine: per-point simulation, SNR sweeps,
//! retained-metric statistics, and the deterministic seeding scheme.
//!
//! The transmit chain per vector: map random bits onto the QPSK lattice,
//! pick the perturbation vector with the configured encoder (built from
//! the transmitter's channel estimate), precode, scale to the block power
//! budget, pass through the true channel, add receiver noise, then at each
//! user scale by sqrt(gamma), reduce modulo tau, and slice.
//!
//! The SNR axis maps to the noise variance through the mean complex symbol
//! energy of the unnormalized QPSK lattice (2 per complex symbol):
//! `sigma_n^2 = 2 * 10^(-snr_db/10)` with the power budget defaulting to
//! P_T = K, so the nominal axis equals the receive SNR at unit gamma. The
//! per-realization gamma of each encoder is what separates the curves.
//!
//! Every (encoder, SNR) point derives its own RNG stream from
//! (master seed, encoder index, snr index) via a SplitMix64 mix, so sweep
//! results are independent of the execution schedule and thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::channel;
use crate::encoders::{self, Criterion, EncoderResult, PerturbationProblem, PrecomputeTable};
use crate::error::Error;
use crate::linalg::RealMatrix;
use crate::modem::{self, Constellation, PerturbSet};

/// Encoder selection for a simulation row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum EncoderSpec {
    Lzf,
    Lmmse,
    Thp {
        t: u32,
    },
    Sphere {
        t: u32,
    },
    Qrdm {
        t: u32,
        /// Beam width; defaults to T.
        #[serde(default)]
        m: Option<usize>,
    },
    Fse {
        t: u32,
        p: usize,
        #[serde(default)]
        use_precompute: bool,
        #[serde(default)]
        compare_before_square: bool,
    },
}

impl EncoderSpec {
    pub fn label(&self) -> &'static str {
        match self {
            EncoderSpec::Lzf => "lzf",
            EncoderSpec::Lmmse => "lmmse",
            EncoderSpec::Thp { .. } => "thp",
            EncoderSpec::Sphere { .. } => "se",
            EncoderSpec::Qrdm { .. } => "qrdm",
            EncoderSpec::Fse { .. } => "fse",
        }
    }

    pub fn t(&self) -> Option<u32> {
        match *self {
            EncoderSpec::Lzf | EncoderSpec::Lmmse => None,
            EncoderSpec::Thp { t }
            | EncoderSpec::Sphere { t }
            | EncoderSpec::Qrdm { t, .. }
            | EncoderSpec::Fse { t, .. } => Some(t),
        }
    }

    pub fn p(&self) -> Option<usize> {
        match *self {
            EncoderSpec::Fse { p, .. } => Some(p),
            _ => None,
        }
    }

    pub fn m(&self) -> Option<usize> {
        match *self {
            EncoderSpec::Qrdm { t, m } => Some(m.unwrap_or(t as usize)),
            _ => None,
        }
    }

    fn is_linear(&self) -> bool {
        matches!(self, EncoderSpec::Lzf | EncoderSpec::Lmmse)
    }
}

/// Full simulation configuration; mirrors the CLI config file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimConfig {
    /// Number of transmit antennas N (= users); K = 2N real dimensions.
    pub n_antennas: usize,
    pub encoders: Vec<EncoderSpec>,
    /// Ascending SNR grid in dB.
    pub snr_db: Vec<f64>,
    #[serde(default = "default_min_errors")]
    pub target_min_bit_errors: u64,
    #[serde(default = "default_max_vectors")]
    pub max_vectors: u64,
    #[serde(default)]
    pub seed: u64,
    /// Transmitter CSI quality in dB; absent means perfect CSI.
    #[serde(default)]
    pub zeta_db: Option<f64>,
    /// Vectors transmitted per channel realization.
    #[serde(default = "default_n_f")]
    pub n_f: u64,
    #[serde(default = "default_criterion")]
    pub criterion: Criterion,
    /// Total transmit power budget; defaults to K.
    #[serde(default)]
    pub p_total: Option<f64>,
}

fn default_min_errors() -> u64 {
    500
}

fn default_max_vectors() -> u64 {
    20_000_000
}

fn default_n_f() -> u64 {
    1
}

fn default_criterion() -> Criterion {
    Criterion::Mmse
}

impl SimConfig {
    /// Real lattice dimension K = 2N.
    pub fn k_dim(&self) -> usize {
        2 * self.n_antennas
    }

    pub fn p_total_or_default(&self) -> f64 {
        self.p_total.unwrap_or(self.k_dim() as f64)
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.n_antennas == 0 {
            return Err(Error::ConfigInvalid("n_antennas must be >= 1".into()));
        }
        if self.encoders.is_empty() {
            return Err(Error::ConfigInvalid("no encoders configured".into()));
        }
        if self.snr_db.is_empty() {
            return Err(Error::ConfigInvalid("empty SNR list".into()));
        }
        if self.snr_db.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::ConfigInvalid("SNR list must be strictly ascending".into()));
        }
        if self.max_vectors == 0 {
            return Err(Error::ConfigInvalid("max_vectors must be >= 1".into()));
        }
        if self.n_f == 0 {
            return Err(Error::ConfigInvalid("n_f must be >= 1".into()));
        }
        if let Some(p_total) = self.p_total {
            if p_total <= 0.0 || p_total.is_nan() {
                return Err(Error::ConfigInvalid("p_total must be positive".into()));
            }
        }
        if let Some(z) = self.zeta_db {
            if z.is_nan() {
                return Err(Error::ConfigInvalid("zeta_db must not be NaN".into()));
            }
        }
        for spec in &self.encoders {
            if let Some(t) = spec.t() {
                if t < 3 || t % 2 == 0 {
                    return Err(Error::ConfigInvalid(format!(
                        "T must be odd and >= 3, got {t}"
                    )));
                }
            }
            if let EncoderSpec::Fse { p, .. } = spec {
                if *p < 1 || *p > self.k_dim() {
                    return Err(Error::ConfigInvalid(format!(
                        "FSE depth p = {p} outside 1..=K"
                    )));
                }
            }
            if let EncoderSpec::Qrdm { m: Some(m), .. } = spec {
                if *m == 0 {
                    return Err(Error::ConfigInvalid("QRD-M beam width must be >= 1".into()));
                }
            }
        }
        Ok(())
    }
}

/// One (encoder, SNR) result row.
#[derive(Debug, Clone, Serialize)]
pub struct ReportRow {
    pub encoder: String,
    pub k: usize,
    pub t: Option<u32>,
    pub p: Option<usize>,
    pub m: Option<usize>,
    pub criterion: Criterion,
    pub snr_db: f64,
    pub zeta_db: Option<f64>,
    pub bits: u64,
    pub errors: u64,
    pub ber: f64,
    pub avg_nodes: f64,
    pub avg_mults: f64,
    pub avg_adds: f64,
    /// Mean of the final accumulated metrics of all retained FSE leaves.
    pub metric_mean: Option<f64>,
    /// Population standard deviation of the same pool.
    pub metric_std: Option<f64>,
    /// Per-point derived seed.
    pub seed: u64,
    pub wall_time_s: f64,
    #[serde(skip)]
    pub redraws: u64,
    #[serde(skip)]
    pub channel_draws: u64,
}

/// Sweep output: config echo plus one row per (encoder, SNR) point.
#[derive(Debug, Clone, Serialize)]
pub struct SimReport {
    pub config: SimConfig,
    pub rows: Vec<ReportRow>,
}

impl SimReport {
    /// Fraction of channel draws that had to be redrawn for rank
    /// deficiency; a value above 0.01 signals a numerical failure storm.
    pub fn redraw_fraction(&self) -> f64 {
        let redraws: u64 = self.rows.iter().map(|r| r.redraws).sum();
        let draws: u64 = self.rows.iter().map(|r| r.channel_draws).sum();
        if draws == 0 {
            0.0
        } else {
            redraws as f64 / draws as f64
        }
    }
}

/// SplitMix64 finalizer; the documented per-point seed mix.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-point seed = mix(master, encoder index, snr index); schedule
/// independent by construction.
pub fn point_seed(master: u64, encoder_index: usize, snr_index: usize) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ encoder_index as u64) ^ snr_index as u64)
}

struct Timer {
    #[cfg(not(target_arch = "wasm32"))]
    start: std::time::Instant,
}

impl Timer {
    fn start() -> Self {
        Self {
            #[cfg(not(target_arch = "wasm32"))]
            start: std::time::Instant::now(),
        }
    }

    fn elapsed_s(&self) -> f64 {
        #[cfg(not(target_arch = "wasm32"))]
        {
            self.start.elapsed().as_secs_f64()
        }
        #[cfg(target_arch = "wasm32")]
        {
            0.0
        }
    }
}

/// Per-channel state: either the cached linear filter or the perturbation
/// problem template.
enum ChannelState {
    Linear {
        filter: RealMatrix,
        gamma: f64,
    },
    Search {
        problem: PerturbationProblem,
        table: Option<PrecomputeTable>,
    },
}

struct Welford {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn new() -> Self {
        Self { n: 0, mean: 0.0, m2: 0.0 }
    }

    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    /// Population standard deviation.
    fn std(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            (self.m2 / self.n as f64).sqrt()
        }
    }
}

/// Runs one (encoder, SNR) Monte Carlo point to the stopping rule:
/// `target_min_bit_errors` accumulated bit errors or `max_vectors`
/// transmitted vectors, whichever comes first.
pub fn run_point(cfg: &SimConfig, encoder_index: usize, snr_index: usize) -> Result<ReportRow, Error> {
    cfg.validate()?;
    if encoder_index >= cfg.encoders.len() || snr_index >= cfg.snr_db.len() {
        return Err(Error::ConfigInvalid("point index out of range".into()));
    }
    let spec = cfg.encoders[encoder_index].clone();
    let snr_db = cfg.snr_db[snr_index];
    let timer = Timer::start();

    let n = cfg.n_antennas;
    let k_dim = cfg.k_dim();
    let constellation = Constellation::qpsk();
    let tau = modem::tau(&constellation);
    let es_complex = 2.0 * constellation.mean_energy_per_real_dim();
    let sigma_n_sq = es_complex * 10f64.powf(-snr_db / 10.0);
    let p_total = cfg.p_total_or_default();

    let seed = point_seed(cfg.seed, encoder_index, snr_index);
    let mut rng = ChaCha12Rng::seed_from_u64(seed);

    let mut bits_total: u64 = 0;
    let mut errors: u64 = 0;
    let mut nodes_sum: u64 = 0;
    let mut mults_sum: u64 = 0;
    let mut adds_sum: u64 = 0;
    let mut redraws: u64 = 0;
    let mut channel_draws: u64 = 0;
    let mut leaf_stats = Welford::new();

    let mut state: Option<ChannelState> = None;
    let mut h_true: Option<RealMatrix> = None;

    let mut vectors: u64 = 0;
    while vectors < cfg.max_vectors && errors < cfg.target_min_bit_errors {
        if vectors.is_multiple_of(cfg.n_f) || state.is_none() {
            let (st, h) = draw_channel_state(
                cfg, &spec, n, tau, sigma_n_sq, p_total, &mut rng, &mut redraws, &mut channel_draws,
            )?;
            state = Some(st);
            h_true = Some(h);
        }
        let st = state.as_mut().unwrap();
        let h = h_true.as_ref().unwrap();

        let bits: Vec<bool> = (0..k_dim).map(|_| rng.random()).collect();
        let s = modem::map_bits(&bits, &constellation)?;

        let (x, gamma) = match st {
            ChannelState::Linear { filter, gamma } => {
                let scale = 1.0 / gamma.sqrt();
                let x: Vec<f64> = filter.mat_vec(&s).iter().map(|v| v * scale).collect();
                (x, *gamma)
            }
            ChannelState::Search { problem, table } => {
                problem.s = s.clone();
                let res = dispatch_search(
                    &spec,
                    problem,
                    table.as_ref(),
                    &mut leaf_stats,
                    metric_scale(cfg.criterion, k_dim, sigma_n_sq, p_total),
                );
                nodes_sum += res.counts.nodes_visited;
                mults_sum += res.counts.real_mults;
                adds_sum += res.counts.real_adds;
                (res.x, res.gamma)
            }
        };

        let y = channel::add_noise(&h.mat_vec(&x), sigma_n_sq, &mut rng);
        let sqrt_gamma = gamma.sqrt();
        let scaled: Vec<f64> = y.iter().map(|v| v * sqrt_gamma).collect();
        let reduced = modem::modulo_reduce(&scaled, tau);
        let bits_hat = modem::demap(&reduced, &constellation);

        errors += bits
            .iter()
            .zip(bits_hat.iter())
            .filter(|(a, b)| a != b)
            .count() as u64;
        bits_total += k_dim as u64;
        vectors += 1;
    }

    let v = vectors.max(1) as f64;
    let is_fse = matches!(spec, EncoderSpec::Fse { .. });
    Ok(ReportRow {
        encoder: spec.label().to_string(),
        k: k_dim,
        t: spec.t(),
        p: spec.p(),
        m: spec.m(),
        criterion: cfg.criterion,
        snr_db,
        zeta_db: cfg.zeta_db,
        bits: bits_total,
        errors,
        ber: if bits_total == 0 { 0.0 } else { errors as f64 / bits_total as f64 },
        avg_nodes: nodes_sum as f64 / v,
        avg_mults: mults_sum as f64 / v,
        avg_adds: adds_sum as f64 / v,
        metric_mean: if is_fse { Some(leaf_stats.mean) } else { None },
        metric_std: if is_fse { Some(leaf_stats.std()) } else { None },
        seed,
        wall_time_s: timer.elapsed_s(),
        redraws,
        channel_draws,
    })
}

#[allow(clippy::too_many_arguments)]
fn draw_channel_state(
    cfg: &SimConfig,
    spec: &EncoderSpec,
    n: usize,
    tau: f64,
    sigma_n_sq: f64,
    p_total: f64,
    rng: &mut ChaCha12Rng,
    redraws: &mut u64,
    channel_draws: &mut u64,
) -> Result<(ChannelState, RealMatrix), Error> {
    let k_dim = 2 * n;
    loop {
        *channel_draws += 1;
        let ch = channel::draw_channel(n, rng);
        let h_true = ch.h_real;
        let h_tx = match cfg.zeta_db {
            Some(zeta) => inject_or_redraw(&h_true, zeta, rng)?,
            None => h_true.clone(),
        };

        let built: Result<ChannelState, Error> = if spec.is_linear() {
            let alpha = match spec {
                EncoderSpec::Lzf => 0.0,
                _ => k_dim as f64 * sigma_n_sq / p_total,
            };
            let filter = if alpha == 0.0 {
                crate::linalg::qr_decompose(&h_tx.transpose()).and_then(|qr| {
                    crate::linalg::lower_from_r_inverse(&qr.r).map(|l| qr.q.mat_mul(&l))
                })
            } else {
                crate::linalg::pseudo_inverse(&h_tx, alpha)
            };
            filter.map(|filter| {
                let gamma = filter.frobenius_norm_sq() / p_total;
                ChannelState::Linear { filter, gamma }
            })
        } else {
            let t = spec.t().unwrap();
            let set = PerturbSet::with_cardinality(t);
            encoders::build_problem(
                &h_tx,
                vec![0.0; k_dim],
                tau,
                set,
                cfg.criterion,
                sigma_n_sq,
                p_total,
            )
            .map(|problem| {
                let table = match spec {
                    EncoderSpec::Fse {
                        use_precompute: true,
                        ..
                    } => Some(encoders::build_precompute_table(
                        &problem.l,
                        &Constellation::qpsk(),
                        set,
                    )),
                    _ => None,
                };
                ChannelState::Search { problem, table }
            })
        };

        match built {
            Ok(state) => return Ok((state, h_true)),
            Err(Error::RankDeficient { .. }) | Err(Error::Singular { .. }) => {
                *redraws += 1;
                continue;
            }
            Err(e) => return Err(e),
        }
    }
}

fn inject_or_redraw(
    h: &RealMatrix,
    zeta: f64,
    rng: &mut ChaCha12Rng,
) -> Result<RealMatrix, Error> {
    // Ensemble-scaled error: the estimate quality does not improve on weak
    // channel draws, which is what produces the observed floors and dB
    // degradations.
    let (h_hat, _) = channel::inject_csi_error_expected(h, zeta, rng)?;
    Ok(h_hat)
}

/// Retained-leaf metrics are reported in the (R^-1)^T normalization: under
/// the MMSE criterion the search runs on L = Q2^T = sqrt(alpha) (R^-1)^T,
/// so the pooled metrics are divided by alpha before aggregation.
fn metric_scale(criterion: Criterion, k_dim: usize, sigma_n_sq: f64, p_total: f64) -> f64 {
    match criterion {
        Criterion::Zf => 1.0,
        Criterion::Mmse => {
            let alpha = k_dim as f64 * sigma_n_sq / p_total;
            if alpha > 0.0 {
                1.0 / alpha
            } else {
                1.0
            }
        }
    }
}

fn dispatch_search(
    spec: &EncoderSpec,
    problem: &PerturbationProblem,
    table: Option<&PrecomputeTable>,
    leaf_stats: &mut Welford,
    leaf_scale: f64,
) -> EncoderResult {
    match *spec {
        EncoderSpec::Thp { .. } => encoders::encode_thp(problem),
        EncoderSpec::Sphere { .. } => {
            encoders::encode_sphere(problem, encoders::SphereRadius::DfeMetric)
        }
        EncoderSpec::Qrdm { t, m } => encoders::encode_qrdm(problem, m.unwrap_or(t as usize)),
        EncoderSpec::Fse {
            p,
            compare_before_square,
            ..
        } => {
            let (res, leaves) =
                encoders::fse_encode_with_leaves(problem, p, table, compare_before_square);
            for metric in leaves {
                leaf_stats.push(metric * leaf_scale);
            }
            res
        }
        EncoderSpec::Lzf | EncoderSpec::Lmmse => unreachable!("linear encoders have no search"),
    }
}

/// Runs every (encoder, SNR) pair of the config. Rows come back in
/// (encoder, SNR) order regardless of how the points were scheduled.
pub fn sweep(cfg: &SimConfig) -> Result<SimReport, Error> {
    cfg.validate()?;
    let points: Vec<(usize, usize)> = (0..cfg.encoders.len())
        .flat_map(|e| (0..cfg.snr_db.len()).map(move |s| (e, s)))
        .collect();

    #[cfg(feature = "parallel")]
    let rows: Result<Vec<ReportRow>, Error> = {
        use rayon::prelude::*;
        points
            .par_iter()
            .map(|&(e, s)| run_point(cfg, e, s))
            .collect()
    };
    #[cfg(not(feature = "parallel"))]
    let rows: Result<Vec<ReportRow>, Error> =
        points.iter().map(|&(e, s)| run_point(cfg, e, s)).collect();

    Ok(SimReport {
        config: cfg.clone(),
        rows: rows?,
    })
}

/// Pooled mean and population standard deviation of the final accumulated
/// metrics of all T^p retained FSE leaves over `n_realizations` independent
/// channel and data draws. No noise is involved; under the MMSE criterion
/// the regularization uses the first configured SNR point and the metrics
/// are reported in the (R^-1)^T normalization (see [`metric_scale`]).
pub fn retained_metric_stats(
    cfg: &SimConfig,
    spec: &EncoderSpec,
    n_realizations: u64,
) -> Result<(f64, f64), Error> {
    cfg.validate()?;
    let (t, p, use_precompute, compare_before_square) = match *spec {
        EncoderSpec::Fse {
            t,
            p,
            use_precompute,
            compare_before_square,
        } => (t, p, use_precompute, compare_before_square),
        _ => {
            return Err(Error::ConfigInvalid(
                "retained-metric statistics are defined for the FSE only".into(),
            ))
        }
    };

    let n = cfg.n_antennas;
    let k_dim = cfg.k_dim();
    let constellation = Constellation::qpsk();
    let tau = modem::tau(&constellation);
    let set = PerturbSet::with_cardinality(t);
    let p_total = cfg.p_total_or_default();
    let es_complex = 2.0 * constellation.mean_energy_per_real_dim();
    let sigma_n_sq = match cfg.criterion {
        Criterion::Zf => 0.0,
        Criterion::Mmse => es_complex * 10f64.powf(-cfg.snr_db[0] / 10.0),
    };

    let seed = splitmix64(splitmix64(cfg.seed) ^ 0x6d65_7472_6963_7374);
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut stats = Welford::new();
    let scale = metric_scale(cfg.criterion, k_dim, sigma_n_sq, p_total);

    for _ in 0..n_realizations {
        let problem = loop {
            let ch = channel::draw_channel(n, &mut rng);
            let bits: Vec<bool> = (0..k_dim).map(|_| rng.random()).collect();
            let s = modem::map_bits(&bits, &constellation)?;
            match encoders::build_problem(
                &ch.h_real,
                s,
                tau,
                set,
                cfg.criterion,
                sigma_n_sq,
                p_total,
            ) {
                Ok(p) => break p,
                Err(Error::RankDeficient { .. }) | Err(Error::Singular { .. }) => continue,
                Err(e) => return Err(e),
            }
        };
        let table = if use_precompute {
            Some(encoders::build_precompute_table(
                &problem.l,
                &constellation,
                set,
            ))
        } else {
            None
        };
        let (_, leaves) = encoders::fse_encode_with_leaves(
            &problem,
            p,
            table.as_ref(),
            compare_before_square,
        );
        for metric in leaves {
            stats.push(metric * scale);
        }
    }
    Ok((stats.mean, stats.std()))
}
