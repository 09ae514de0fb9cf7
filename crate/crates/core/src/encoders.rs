//! The precoder family.
//!
//! All vector-perturbation encoders minimize the same lattice metric
//! `|L (s + tau t)|^2` over integer candidate vectors drawn from the
//! symmetric set A = [-a, a]^K, differing only in how they traverse the
//! search tree:
//!
//! - [`encode_thp`] — successive single-branch decisions (DFE path),
//! - [`encode_exhaustive`] — brute-force oracle over all T^K vectors,
//! - [`encode_sphere`] — depth-first exact search with Schnorr-Euchner
//!   child ordering and a shrinking radius,
//! - [`encode_qrdm`] — breadth-M beam search retaining the M best
//!   accumulated metrics per level,
//! - [`encode_fse`] — fixed-complexity search: full expansion for the
//!   first `p` levels, then a single DFE expansion per retained branch.
//!
//! Linear ZF/MMSE precoding ([`encode_lzf`], [`encode_lmmse`]) round out
//! the baseline set.
//!
//! Every tree search is instrumented. `nodes_visited` counts metric
//! computations: each child whose accumulated metric is evaluated during a
//! full expansion is one node, and each single (DFE) expansion is one node
//! regardless of how many candidates were compared to pick it.
//! `real_mults`/`real_adds` tally the floating-point operations actually
//! performed by the metric evaluations of the tree-search phase;
//! comparisons are tallied separately. Problem construction, precoding, and
//! power scaling are not tallied.
//!
//! Tie-breaking everywhere is lexicographic on (branch creation order,
//! candidate value ascending), so all encoders are deterministic functions
//! of (problem, flags).

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::linalg::{self, QrFactors, RealMatrix};
use crate::modem::{Constellation, PerturbSet};

/// Search criterion: which filter shapes the metric matrix L and the
/// precode matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    Zf,
    Mmse,
}

/// One encoding instance: the lower-triangular metric matrix, the precode
/// filter, the data vector, and the candidate set.
#[derive(Debug, Clone)]
pub struct PerturbationProblem {
    /// K x K lower triangular metric matrix with positive diagonal.
    pub l: RealMatrix,
    /// Transmit filter applied to the perturbed vector: H^-1 under ZF, the
    /// regularized MMSE filter otherwise.
    pub precode_matrix: RealMatrix,
    /// Data vector, length K.
    pub s: Vec<f64>,
    /// Perturbation modulus.
    pub tau: f64,
    /// Symmetric integer candidate set.
    pub set: PerturbSet,
    pub criterion: Criterion,
    /// Total transmit power budget used by the per-block normalization.
    pub p_total: f64,
}

impl PerturbationProblem {
    /// Real lattice dimension K.
    pub fn dimension(&self) -> usize {
        self.l.rows()
    }
}

/// Instrumented tally of one tree search.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OpCounter {
    /// Metric computations (see module docs).
    pub nodes_visited: u64,
    pub real_mults: u64,
    pub real_adds: u64,
    /// Pairwise metric comparisons; excluded from the closed-form checks.
    pub comparisons: u64,
}

/// Output of one encoder run.
#[derive(Debug, Clone)]
pub struct EncoderResult {
    /// Chosen perturbation vector, entries in [-a, a].
    pub t: Vec<i32>,
    /// Accumulated squared metric |L (s + tau t)|^2 of the chosen vector.
    pub metric: f64,
    /// Precoded transmit vector, scaled so |x|^2 = P_T for this block.
    pub x: Vec<f64>,
    /// Power normalization |P (s + tau t)|^2 / P_T applied at transmit.
    pub gamma: f64,
    /// Tree-search phase tallies.
    pub counts: OpCounter,
    /// (mults, adds) spent building the precompute table, when one was
    /// used; amortize over the channel coherence length.
    pub precompute_ops: Option<(u64, u64)>,
}

/// Which instrumented phase a tally is requested for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Precompute,
    TreeSearch,
}

/// Instrumented (multiplications, additions) of one phase of a run.
pub fn count_arithmetic(run: &EncoderResult, phase: Phase) -> Result<(u64, u64), Error> {
    match phase {
        Phase::TreeSearch => Ok((run.counts.real_mults, run.counts.real_adds)),
        Phase::Precompute => run.precompute_ops.ok_or(Error::CountersDisabled),
    }
}

/// Initial radius policy for the sphere encoder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SphereRadius {
    /// Metric of the DFE (THP) point; guarantees a non-empty result.
    #[default]
    DfeMetric,
    /// No initial constraint; the first leaf reached sets the radius.
    Unbounded,
}

// ---------------------------------------------------------------------------
// Problem construction
// ---------------------------------------------------------------------------

/// Builds the perturbation problem seen by the transmitter.
///
/// ZF: QR of H^T gives L = (R^-1)^T and the precode matrix H^-1 = Q L.
/// MMSE: QR of the extended matrix [H^T; sqrt(alpha) I] gives L = Q2^T
/// (the bottom block of Q transposed, equal to (R^-1)^T up to the positive
/// factor sqrt(alpha), which does not affect the argmin), and the precode
/// matrix H^T (H H^T + alpha I)^-1 with alpha = K sigma_n^2 / P_T.
pub fn build_problem(
    h_at_tx: &RealMatrix,
    s: Vec<f64>,
    tau: f64,
    set: PerturbSet,
    criterion: Criterion,
    sigma_n_sq: f64,
    p_total: f64,
) -> Result<PerturbationProblem, Error> {
    assert_eq!(h_at_tx.rows(), h_at_tx.cols(), "square channel expected");
    assert!(p_total > 0.0 && sigma_n_sq >= 0.0);
    let k = h_at_tx.rows();
    assert_eq!(s.len(), k);

    let alpha = k as f64 * sigma_n_sq / p_total;
    let (l, precode_matrix) = if criterion == Criterion::Zf || alpha == 0.0 {
        let qr = linalg::qr_decompose(&h_at_tx.transpose())?;
        let l = linalg::lower_from_r_inverse(&qr.r)?;
        // H^-1 = Q (R^-1)^T since H^T = Q R.
        let h_inv = qr.q.mat_mul(&l);
        (l, h_inv)
    } else {
        // R factor of [H^T; sqrt(alpha) I] without accumulating Q:
        // Q2^T = sqrt(alpha) (R^-1)^T, and the Gram inverse (H H^T +
        // alpha I)^-1 = R^-1 R^-T falls out of the same factor.
        let r = linalg::qr_r_factor(&extended_matrix(h_at_tx, alpha))?;
        let l_unscaled = linalg::lower_from_r_inverse(&r)?;
        let gram_inv = l_unscaled.transpose().mat_mul(&l_unscaled);
        let precode = h_at_tx.transpose().mat_mul(&gram_inv);
        (l_unscaled.scale(alpha.sqrt()), precode)
    };

    Ok(PerturbationProblem {
        l,
        precode_matrix,
        s,
        tau,
        set,
        criterion,
        p_total,
    })
}

/// The 2K x K extended matrix [H^T; sqrt(alpha) I].
fn extended_matrix(h: &RealMatrix, alpha: f64) -> RealMatrix {
    assert!(alpha > 0.0);
    let k = h.rows();
    let sqrt_alpha = alpha.sqrt();
    RealMatrix::from_fn(2 * k, k, |r, c| {
        if r < k {
            // Row r of H^T is column r of H.
            h.get(c, r)
        } else if r - k == c {
            sqrt_alpha
        } else {
            0.0
        }
    })
}

/// Full QR of the 2K x K extended matrix [H^T; sqrt(alpha) I]; exposes the
/// Q2 block for the R^-1 = Q2 / sqrt(alpha) identity checks.
pub fn extended_qr(h: &RealMatrix, alpha: f64) -> Result<QrFactors, Error> {
    linalg::qr_decompose(&extended_matrix(h, alpha))
}

// ---------------------------------------------------------------------------
// Linear precoders
// ---------------------------------------------------------------------------

/// Linear zero-forcing precoding: x = H^-1 s / sqrt(gamma) with the
/// expected-power normalization gamma = Tr((H H^T)^-1) / P_T.
pub fn encode_lzf(h: &RealMatrix, s: &[f64], p_total: f64) -> Result<(Vec<f64>, f64), Error> {
    let qr = linalg::qr_decompose(&h.transpose())?;
    let l = linalg::lower_from_r_inverse(&qr.r)?;
    let h_inv = qr.q.mat_mul(&l);
    // Tr((H H^T)^-1) = |H^-1|_F^2.
    let gamma = h_inv.frobenius_norm_sq() / p_total;
    let scale = 1.0 / gamma.sqrt();
    let x = h_inv.mat_vec(s).iter().map(|v| v * scale).collect();
    Ok((x, gamma))
}

/// Linear MMSE precoding: x = H^T (H H^T + alpha I)^-1 s / sqrt(gamma),
/// alpha = K sigma_n^2 / P_T, with the expected-power normalization
/// gamma = |P|_F^2 / P_T matching the ZF convention.
pub fn encode_lmmse(
    h: &RealMatrix,
    s: &[f64],
    sigma_n_sq: f64,
    p_total: f64,
) -> Result<(Vec<f64>, f64), Error> {
    let k = h.rows();
    let alpha = k as f64 * sigma_n_sq / p_total;
    if alpha == 0.0 {
        return encode_lzf(h, s, p_total);
    }
    let p = linalg::pseudo_inverse(h, alpha)?;
    let gamma = p.frobenius_norm_sq() / p_total;
    let scale = 1.0 / gamma.sqrt();
    let x = p.mat_vec(s).iter().map(|v| v * scale).collect();
    Ok((x, gamma))
}

// ---------------------------------------------------------------------------
// Precompute table
// ---------------------------------------------------------------------------

/// Pre-computed products L_ij (level_d + tau t_k) for every lower-triangle
/// position, constellation level, and candidate, indexed during the tree
/// search instead of recomputed. Built once per channel update and shared
/// by the N_f vectors transmitted under the same CSI.
#[derive(Debug, Clone)]
pub struct PrecomputeTable {
    k_dim: usize,
    levels: Vec<f64>,
    t_count: usize,
    data: Vec<f64>,
    /// Real multiplications spent building the table.
    pub build_mults: u64,
    /// Real additions spent building the table.
    pub build_adds: u64,
}

/// Builds the lookup table for a given metric matrix, constellation, and
/// candidate set. Entries are computed with exactly the arithmetic the
/// direct path uses, so table-backed searches are bit-identical.
pub fn build_precompute_table(
    l: &RealMatrix,
    c: &Constellation,
    set: PerturbSet,
) -> PrecomputeTable {
    let k_dim = l.rows();
    let tau = crate::modem::tau(c);
    let t_count = set.cardinality();
    let d_count = c.level_count();
    let mut mults = 0u64;
    let mut adds = 0u64;

    // Shared offsets tau * t_k; the t = 0 product is free.
    let offsets: Vec<f64> = (0..t_count)
        .map(|k| {
            let t = set.value(k);
            if t != 0 {
                mults += 1;
            }
            tau * t as f64
        })
        .collect();

    // Perturbed levels level_d + tau t_k; adding zero is free.
    let mut perturbed = vec![0.0; d_count * t_count];
    for (d, &level) in c.real_points.iter().enumerate() {
        for k in 0..t_count {
            if set.value(k) != 0 {
                adds += 1;
            }
            perturbed[d * t_count + k] = level + offsets[k];
        }
    }

    // One multiplication per (lower-triangle position, level, candidate).
    let pairs = k_dim * (k_dim + 1) / 2;
    let mut data = vec![0.0; pairs * d_count * t_count];
    for i in 0..k_dim {
        for j in 0..=i {
            let lij = l.get(i, j);
            let base = (pair_index(i, j)) * d_count * t_count;
            for d in 0..d_count {
                for k in 0..t_count {
                    mults += 1;
                    data[base + d * t_count + k] = lij * perturbed[d * t_count + k];
                }
            }
        }
    }

    PrecomputeTable {
        k_dim,
        levels: c.real_points.clone(),
        t_count,
        data,
        build_mults: mults,
        build_adds: adds,
    }
}

#[inline]
fn pair_index(i: usize, j: usize) -> usize {
    i * (i + 1) / 2 + j
}

impl PrecomputeTable {
    /// Total number of stored entries: K(K+1)/2 * D * T.
    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    fn lookup(&self, i: usize, j: usize, d: usize, k: usize) -> f64 {
        debug_assert!(j <= i && i < self.k_dim);
        let dt = self.levels.len() * self.t_count;
        self.data[pair_index(i, j) * dt + d * self.t_count + k]
    }

    /// Level index of a data entry, for table addressing.
    fn level_index(&self, v: f64) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, &p) in self.levels.iter().enumerate() {
            let d = (v - p).abs();
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }
}

// ---------------------------------------------------------------------------
// Shared metric evaluation
// ---------------------------------------------------------------------------

/// Evaluates branch-metric terms, either directly from L or via the
/// precompute table. One summation order everywhere keeps encoder outputs
/// bit-comparable across strategies and flags.
///
/// The direct path stages the perturbed data values s_j + tau t_k once per
/// problem; those setup operations are charged to the search counter when
/// the search starts, so one metric term costs one multiplication on
/// either path.
struct MetricEval<'a> {
    prob: &'a PerturbationProblem,
    table: Option<&'a PrecomputeTable>,
    /// Level index of each data entry, used for table addressing.
    d_idx: Vec<usize>,
    /// Direct path: s_j + tau t_k, flattened [j * T + k].
    perturbed: Vec<f64>,
    setup_mults: u64,
    setup_adds: u64,
}

impl<'a> MetricEval<'a> {
    fn new(prob: &'a PerturbationProblem, table: Option<&'a PrecomputeTable>) -> Self {
        let t_count = prob.set.cardinality();
        let mut eval = Self {
            prob,
            table,
            d_idx: Vec::new(),
            perturbed: Vec::new(),
            setup_mults: 0,
            setup_adds: 0,
        };
        match table {
            Some(tab) => {
                eval.d_idx = prob.s.iter().map(|&v| tab.level_index(v)).collect();
            }
            None => {
                // Offsets tau t_k (the t = 0 product is free), then one add
                // per perturbed data value.
                let offsets: Vec<f64> = (0..t_count)
                    .map(|k| {
                        let t = prob.set.value(k);
                        if t != 0 {
                            eval.setup_mults += 1;
                        }
                        prob.tau * t as f64
                    })
                    .collect();
                eval.perturbed = Vec::with_capacity(prob.s.len() * t_count);
                for &s in &prob.s {
                    for (k, &off) in offsets.iter().enumerate() {
                        if prob.set.value(k) != 0 {
                            eval.setup_adds += 1;
                        }
                        eval.perturbed.push(s + off);
                    }
                }
            }
        }
        eval
    }

    /// Adds the per-problem staging cost to a search counter.
    fn charge_setup(&self, ops: &mut OpCounter) {
        ops.real_mults += self.setup_mults;
        ops.real_adds += self.setup_adds;
    }

    fn dimension(&self) -> usize {
        self.prob.dimension()
    }

    fn t_count(&self) -> usize {
        self.prob.set.cardinality()
    }

    /// L_ij (s_j + tau t_k).
    #[inline]
    fn term(&self, i: usize, j: usize, k: usize, ops: &mut OpCounter) -> f64 {
        match self.table {
            Some(tab) => tab.lookup(i, j, self.d_idx[j], k),
            None => {
                ops.real_mults += 1;
                self.prob.l.get(i, j) * self.perturbed[j * self.t_count() + k]
            }
        }
    }

    /// Sum over the settled prefix: sum_{j < i} L_ij (s_j + tau t_hat_j).
    fn common(&self, i: usize, prefix: &[usize], ops: &mut OpCounter) -> f64 {
        if i == 0 {
            return 0.0;
        }
        let cols = self.prob.l.cols();
        let row = &self.prob.l.data()[i * cols..i * cols + i];
        let t_count = self.t_count();
        let mut sum = 0.0;
        match self.table {
            Some(tab) => {
                for (j, &kj) in prefix.iter().enumerate().take(i) {
                    let t = tab.lookup(i, j, self.d_idx[j], kj);
                    if j == 0 {
                        sum = t;
                    } else {
                        sum += t;
                    }
                }
                ops.real_adds += i as u64 - 1;
            }
            None => {
                for (j, &kj) in prefix.iter().enumerate().take(i) {
                    let t = row[j] * self.perturbed[j * t_count + kj];
                    if j == 0 {
                        sum = t;
                    } else {
                        sum += t;
                    }
                }
                ops.real_mults += i as u64;
                ops.real_adds += i as u64 - 1;
            }
        }
        sum
    }

    /// Unsquared branch metric of candidate k at `level` given the prefix
    /// sum.
    #[inline]
    fn child_metric(&self, level: usize, k: usize, common: f64, ops: &mut OpCounter) -> f64 {
        let diag = self.term(level, level, k, ops);
        if level == 0 {
            diag
        } else {
            ops.real_adds += 1;
            diag + common
        }
    }

    /// Squares the branch metric and accumulates it onto the parent.
    #[inline]
    fn square_acc(&self, parent_acc: f64, m: f64, level: usize, ops: &mut OpCounter) -> f64 {
        ops.real_mults += 1;
        let inc = m * m;
        if level == 0 {
            inc
        } else {
            ops.real_adds += 1;
            parent_acc + inc
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Branch {
    pub(crate) ks: Vec<usize>,
    pub(crate) acc: f64,
}

fn finalize(
    prob: &PerturbationProblem,
    ks: &[usize],
    metric: f64,
    counts: OpCounter,
    precompute_ops: Option<(u64, u64)>,
) -> EncoderResult {
    let t: Vec<i32> = ks.iter().map(|&k| prob.set.value(k)).collect();
    let s_pert: Vec<f64> = prob
        .s
        .iter()
        .zip(t.iter())
        .map(|(&s, &ti)| s + prob.tau * ti as f64)
        .collect();
    let x_unnorm = prob.precode_matrix.mat_vec(&s_pert);
    let power: f64 = x_unnorm.iter().map(|v| v * v).sum();
    let gamma = power / prob.p_total;
    let x = if gamma > 0.0 {
        let scale = 1.0 / gamma.sqrt();
        x_unnorm.iter().map(|v| v * scale).collect()
    } else {
        x_unnorm
    };
    EncoderResult {
        t,
        metric,
        x,
        gamma,
        counts,
        precompute_ops,
    }
}

// ---------------------------------------------------------------------------
// THP (DFE path)
// ---------------------------------------------------------------------------

/// Core DFE descent: at each level keep the single candidate with the
/// smallest accumulated metric. Shared by THP and the sphere encoder's
/// radius initialization.
fn dfe_descent(eval: &MetricEval, ops: &mut OpCounter) -> (Vec<usize>, f64) {
    let k_dim = eval.dimension();
    let t_count = eval.t_count();
    let mut ks: Vec<usize> = Vec::with_capacity(k_dim);
    let mut acc = 0.0;
    for level in 0..k_dim {
        let c = eval.common(level, &ks, ops);
        let mut best_k = 0;
        let mut best_acc = f64::INFINITY;
        for k in 0..t_count {
            let m = eval.child_metric(level, k, c, ops);
            let a = eval.square_acc(acc, m, level, ops);
            ops.nodes_visited += 1;
            if k > 0 {
                ops.comparisons += 1;
            }
            // Strict improvement keeps the smallest candidate on ties.
            if a < best_acc {
                best_acc = a;
                best_k = k;
            }
        }
        ks.push(best_k);
        acc = best_acc;
    }
    (ks, acc)
}

/// Tomlinson-Harashima precoding: the successive (DFE-path) perturbation
/// choice, equivalent to the beam search with a single retained branch.
pub fn encode_thp(prob: &PerturbationProblem) -> EncoderResult {
    let eval = MetricEval::new(prob, None);
    let mut ops = OpCounter::default();
    eval.charge_setup(&mut ops);
    let (ks, acc) = dfe_descent(&eval, &mut ops);
    finalize(prob, &ks, acc, ops, None)
}

// ---------------------------------------------------------------------------
// Exhaustive oracle
// ---------------------------------------------------------------------------

const EXHAUSTIVE_GUARD: u128 = 10_000_000;

/// Brute-force global minimum over the full candidate grid A^K; ties go to
/// the lexicographically smallest t. The oracle the fast encoders are
/// checked against.
pub fn encode_exhaustive(prob: &PerturbationProblem) -> Result<EncoderResult, Error> {
    let k_dim = prob.dimension();
    let t_count = prob.set.cardinality();
    let size = (t_count as u128).pow(k_dim as u32);
    if size > EXHAUSTIVE_GUARD {
        return Err(Error::SearchSpaceTooLarge { size });
    }

    let eval = MetricEval::new(prob, None);
    let mut ops = OpCounter::default();
    eval.charge_setup(&mut ops);
    let mut best_ks: Vec<usize> = Vec::new();
    let mut best_acc = f64::INFINITY;
    let mut prefix: Vec<usize> = Vec::with_capacity(k_dim);

    exhaustive_rec(
        &eval,
        0,
        0.0,
        &mut prefix,
        &mut best_ks,
        &mut best_acc,
        &mut ops,
    );
    Ok(finalize(prob, &best_ks, best_acc, ops, None))
}

fn exhaustive_rec(
    eval: &MetricEval,
    level: usize,
    acc: f64,
    prefix: &mut Vec<usize>,
    best_ks: &mut Vec<usize>,
    best_acc: &mut f64,
    ops: &mut OpCounter,
) {
    let k_dim = eval.dimension();
    let c = eval.common(level, prefix, ops);
    for k in 0..eval.t_count() {
        let m = eval.child_metric(level, k, c, ops);
        let a = eval.square_acc(acc, m, level, ops);
        ops.nodes_visited += 1;
        if level + 1 == k_dim {
            ops.comparisons += 1;
            // Lexicographic scan order + strict improvement = smallest t on
            // ties.
            if a < *best_acc {
                *best_acc = a;
                best_ks.clear();
                best_ks.extend_from_slice(prefix);
                best_ks.push(k);
            }
        } else {
            prefix.push(k);
            exhaustive_rec(eval, level + 1, a, prefix, best_ks, best_acc, ops);
            prefix.pop();
        }
    }
}

// ---------------------------------------------------------------------------
// Sphere encoder
// ---------------------------------------------------------------------------

/// Depth-first exact search: children at each level are visited in
/// ascending order of their accumulated metric (Schnorr-Euchner), branches
/// whose partial metric exceeds the best known leaf are pruned, and the
/// radius shrinks every time a better leaf is found.
///
/// The initial radius comes from the DFE point (not tallied; only the
/// enumeration itself counts), so the search always returns a vector.
/// Output is identical to [`encode_exhaustive`], including ties, which are
/// resolved toward the lexicographically smallest t.
pub fn encode_sphere(prob: &PerturbationProblem, policy: SphereRadius) -> EncoderResult {
    let eval = MetricEval::new(prob, None);
    let mut ops = OpCounter::default();
    eval.charge_setup(&mut ops);

    let (mut best_ks, mut best_acc) = match policy {
        SphereRadius::DfeMetric => {
            let mut scratch = OpCounter::default();
            dfe_descent(&eval, &mut scratch)
        }
        SphereRadius::Unbounded => (Vec::new(), f64::INFINITY),
    };

    let mut prefix: Vec<usize> = Vec::with_capacity(eval.dimension());
    sphere_rec(&eval, 0, 0.0, &mut prefix, &mut best_ks, &mut best_acc, &mut ops);
    finalize(prob, &best_ks, best_acc, ops, None)
}

fn sphere_rec(
    eval: &MetricEval,
    level: usize,
    acc: f64,
    prefix: &mut Vec<usize>,
    best_ks: &mut Vec<usize>,
    best_acc: &mut f64,
    ops: &mut OpCounter,
) {
    let k_dim = eval.dimension();
    let t_count = eval.t_count();
    let c = eval.common(level, prefix, ops);

    let mut children: Vec<(usize, f64)> = Vec::with_capacity(t_count);
    for k in 0..t_count {
        let m = eval.child_metric(level, k, c, ops);
        let a = eval.square_acc(acc, m, level, ops);
        ops.nodes_visited += 1;
        children.push((k, a));
    }
    // Schnorr-Euchner ordering; equal metrics keep the smaller candidate
    // first.
    children.sort_unstable_by(|x, y| x.1.partial_cmp(&y.1).unwrap().then(x.0.cmp(&y.0)));

    for &(k, a) in &children {
        ops.comparisons += 1;
        if a > *best_acc {
            // Children are sorted, so the rest are outside the radius too.
            break;
        }
        if level + 1 == k_dim {
            if a < *best_acc {
                *best_acc = a;
                best_ks.clear();
                best_ks.extend_from_slice(prefix);
                best_ks.push(k);
            } else if a == *best_acc {
                // Equal-metric leaf: keep the lexicographically smaller t.
                let candidate_better = {
                    let mut better = false;
                    for (idx, &pk) in prefix.iter().chain(std::iter::once(&k)).enumerate() {
                        match best_ks.get(idx) {
                            Some(&bk) if pk < bk => {
                                better = true;
                                break;
                            }
                            Some(&bk) if pk > bk => break,
                            _ => {}
                        }
                    }
                    better
                };
                if candidate_better {
                    best_ks.clear();
                    best_ks.extend_from_slice(prefix);
                    best_ks.push(k);
                }
            }
        } else {
            prefix.push(k);
            sphere_rec(eval, level + 1, a, prefix, best_ks, best_acc, ops);
            prefix.pop();
        }
    }
}

// ---------------------------------------------------------------------------
// QRD-M encoder
// ---------------------------------------------------------------------------

/// Breadth-M beam search: each retained branch expands to all T children,
/// the pool is sorted by accumulated metric with ties resolved to parent
/// order then to the smaller candidate (i.e. creation order, as a stable
/// sort would), and the best M survive to the next level.
pub fn encode_qrdm(prob: &PerturbationProblem, m_breadth: usize) -> EncoderResult {
    assert!(m_breadth >= 1);
    let eval = MetricEval::new(prob, None);
    let mut ops = OpCounter::default();
    eval.charge_setup(&mut ops);
    let k_dim = eval.dimension();
    let t_count = eval.t_count();

    // Flat frontier storage, double buffered: branch b occupies
    // ks[b * level .. (b + 1) * level].
    let mut ks_flat: Vec<usize> = Vec::new();
    let mut ks_next: Vec<usize> = Vec::new();
    let mut acc: Vec<f64> = vec![0.0];
    let mut acc_next: Vec<f64> = Vec::new();
    // (parent index, candidate, accumulated metric); (parent, candidate)
    // is the creation order.
    let mut pool: Vec<(u32, u32, f64)> = Vec::new();
    for level in 0..k_dim {
        pool.clear();
        pool.reserve(acc.len() * t_count);
        for pi in 0..acc.len() {
            let prefix = &ks_flat[pi * level..(pi + 1) * level];
            let c = eval.common(level, prefix, &mut ops);
            for k in 0..t_count {
                let m = eval.child_metric(level, k, c, &mut ops);
                let a = eval.square_acc(acc[pi], m, level, &mut ops);
                ops.nodes_visited += 1;
                pool.push((pi as u32, k as u32, a));
            }
        }
        let cmp_count = std::cell::Cell::new(0u64);
        let by_metric = |x: &(u32, u32, f64), y: &(u32, u32, f64)| {
            cmp_count.set(cmp_count.get() + 1);
            x.2.partial_cmp(&y.2)
                .unwrap()
                .then_with(|| (x.0, x.1).cmp(&(y.0, y.1)))
        };
        // Partial selection: only the M best need ordering. The creation
        // order tie-break makes the comparator a total order, so the
        // retained set matches a full stable sort.
        if m_breadth < pool.len() {
            pool.select_nth_unstable_by(m_breadth - 1, by_metric);
            pool.truncate(m_breadth);
        }
        pool.sort_unstable_by(by_metric);
        ops.comparisons += cmp_count.get();

        ks_next.clear();
        acc_next.clear();
        for &(pi, k, a) in pool.iter() {
            let parent = &ks_flat[pi as usize * level..(pi as usize + 1) * level];
            ks_next.extend_from_slice(parent);
            ks_next.push(k as usize);
            acc_next.push(a);
        }
        std::mem::swap(&mut ks_flat, &mut ks_next);
        std::mem::swap(&mut acc, &mut acc_next);
    }

    finalize(prob, &ks_flat[0..k_dim], acc[0], ops, None)
}

// ---------------------------------------------------------------------------
// Fixed-complexity sphere encoder
// ---------------------------------------------------------------------------

/// Fixed-complexity search and the final leaf set.
///
/// Levels 0..p expand every retained branch to all T children and keep them
/// all (T^p branches after level p); the remaining levels extend each
/// branch by its single best DFE child. Returns all T^p leaves in creation
/// order plus the search tallies.
pub(crate) fn fse_search(
    prob: &PerturbationProblem,
    p: usize,
    table: Option<&PrecomputeTable>,
    compare_before_square: bool,
) -> (Vec<Branch>, OpCounter) {
    let k_dim = prob.dimension();
    assert!((1..=k_dim).contains(&p), "full-expansion depth out of range");
    let eval = MetricEval::new(prob, table);
    let t_count = eval.t_count();
    let mut ops = OpCounter::default();
    eval.charge_setup(&mut ops);

    let mut frontier = vec![Branch {
        ks: Vec::new(),
        acc: 0.0,
    }];

    // Full expansion.
    for level in 0..p {
        let mut next = Vec::with_capacity(frontier.len() * t_count);
        for branch in &frontier {
            let c = eval.common(level, &branch.ks, &mut ops);
            for k in 0..t_count {
                let m = eval.child_metric(level, k, c, &mut ops);
                let a = eval.square_acc(branch.acc, m, level, &mut ops);
                ops.nodes_visited += 1;
                let mut ks = branch.ks.clone();
                ks.push(k);
                next.push(Branch { ks, acc: a });
            }
        }
        frontier = next;
    }

    // Single (DFE) expansion: one metric computation per branch and level.
    for level in p..k_dim {
        for branch in &mut frontier {
            let c = eval.common(level, &branch.ks, &mut ops);
            let mut best_k = 0;
            let mut best_key = f64::INFINITY;
            let mut best_m = 0.0;
            for k in 0..t_count {
                let m = eval.child_metric(level, k, c, &mut ops);
                let key = if compare_before_square {
                    // Absolute metric: defer the squaring to the winner.
                    m.abs()
                } else {
                    ops.real_mults += 1;
                    m * m
                };
                if k > 0 {
                    ops.comparisons += 1;
                }
                if key < best_key {
                    best_key = key;
                    best_k = k;
                    best_m = m;
                }
            }
            let inc = if compare_before_square {
                ops.real_mults += 1;
                best_m * best_m
            } else {
                best_key
            };
            ops.real_adds += 1;
            branch.acc += inc;
            branch.ks.push(best_k);
            ops.nodes_visited += 1;
        }
    }

    (frontier, ops)
}

/// The fixed-complexity sphere encoder.
///
/// `p` is the full-expansion depth (1 <= p <= K; p = K degenerates to the
/// exhaustive search). Passing a [`PrecomputeTable`] switches the metric
/// terms to table lookups; `compare_before_square` selects DFE children by
/// absolute metric before squaring. Both options leave the chosen vector
/// bit-identical and only change the arithmetic tallies.
pub fn encode_fse(
    prob: &PerturbationProblem,
    p: usize,
    table: Option<&PrecomputeTable>,
    compare_before_square: bool,
) -> EncoderResult {
    fse_encode_with_leaves(prob, p, table, compare_before_square).0
}

/// Like [`encode_fse`] but also returns the final accumulated metrics of
/// all T^p retained leaves, which the harness pools for the retained-metric
/// statistics.
pub(crate) fn fse_encode_with_leaves(
    prob: &PerturbationProblem,
    p: usize,
    table: Option<&PrecomputeTable>,
    compare_before_square: bool,
) -> (EncoderResult, Vec<f64>) {
    let (leaves, mut ops) = fse_search(prob, p, table, compare_before_square);
    let mut best = 0;
    for i in 1..leaves.len() {
        ops.comparisons += 1;
        // Strict improvement: ties resolve to the smallest branch index.
        if leaves[i].acc < leaves[best].acc {
            best = i;
        }
    }
    let pre = table.map(|t| (t.build_mults, t.build_adds));
    let metrics = leaves.iter().map(|b| b.acc).collect();
    (
        finalize(prob, &leaves[best].ks, leaves[best].acc, ops, pre),
        metrics,
    )
}

/// One node of a traced FSE search.
#[derive(Debug, Clone, serde::Serialize)]
pub struct FseTraceNode {
    /// Tree level, 0-based.
    pub level: usize,
    /// Index of the parent in the node list; the root is implicit.
    pub parent: Option<usize>,
    /// Candidate value added at this node.
    pub t_value: i32,
    /// Squared branch metric increment.
    pub increment: f64,
    /// Accumulated metric up to this node.
    pub acc_metric: f64,
}

/// Full node-level record of an FSE search, for inspection and
/// visualization. The winner agrees with [`encode_fse`] by construction
/// (and by test).
#[derive(Debug, Clone, serde::Serialize)]
pub struct FseTrace {
    pub nodes: Vec<FseTraceNode>,
    /// Node index of the winning leaf.
    pub winner: usize,
    pub metric: f64,
    pub t: Vec<i32>,
}

/// Traces the FSE search tree: every created node with its parent link,
/// increment, and accumulated metric.
pub fn fse_trace(prob: &PerturbationProblem, p: usize) -> FseTrace {
    let k_dim = prob.dimension();
    assert!((1..=k_dim).contains(&p));
    let eval = MetricEval::new(prob, None);
    let t_count = eval.t_count();
    let mut scratch = OpCounter::default();

    let mut nodes: Vec<FseTraceNode> = Vec::new();
    // (node index, candidate prefix, accumulated metric)
    let mut frontier: Vec<(Option<usize>, Vec<usize>, f64)> = vec![(None, Vec::new(), 0.0)];

    for level in 0..k_dim {
        let mut next = Vec::with_capacity(frontier.len() * t_count.min(4));
        for (node_idx, ks, acc) in &frontier {
            let c = eval.common(level, ks, &mut scratch);
            if level < p {
                for k in 0..t_count {
                    let m = eval.child_metric(level, k, c, &mut scratch);
                    let a = eval.square_acc(*acc, m, level, &mut scratch);
                    let mut ks2 = ks.clone();
                    ks2.push(k);
                    nodes.push(FseTraceNode {
                        level,
                        parent: *node_idx,
                        t_value: prob.set.value(k),
                        increment: m * m,
                        acc_metric: a,
                    });
                    next.push((Some(nodes.len() - 1), ks2, a));
                }
            } else {
                let mut best_k = 0;
                let mut best_sq = f64::INFINITY;
                for k in 0..t_count {
                    let m = eval.child_metric(level, k, c, &mut scratch);
                    let sq = m * m;
                    if sq < best_sq {
                        best_sq = sq;
                        best_k = k;
                    }
                }
                let a = if level == 0 { best_sq } else { acc + best_sq };
                let mut ks2 = ks.clone();
                ks2.push(best_k);
                nodes.push(FseTraceNode {
                    level,
                    parent: *node_idx,
                    t_value: prob.set.value(best_k),
                    increment: best_sq,
                    acc_metric: a,
                });
                next.push((Some(nodes.len() - 1), ks2, a));
            }
        }
        frontier = next;
    }

    let mut winner_pos = 0;
    for i in 1..frontier.len() {
        if frontier[i].2 < frontier[winner_pos].2 {
            winner_pos = i;
        }
    }
    let (winner_node, winner_ks, metric) = (
        frontier[winner_pos].0.unwrap(),
        frontier[winner_pos].1.clone(),
        frontier[winner_pos].2,
    );
    FseTrace {
        nodes,
        winner: winner_node,
        metric,
        t: winner_ks.iter().map(|&k| prob.set.value(k)).collect(),
    }
}
