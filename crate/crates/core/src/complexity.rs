//! Closed-form complexity of the vector-perturbation encoders, the
//! FSE/QRD-M complexity ratio, and the imperfect-CSI perturbation bound.
//!
//! Node counts are exact integers with explicit overflow errors; the
//! arithmetic totals are exact rationals reported as reals.

use crate::error::Error;
use crate::linalg::{self, RealMatrix};

/// Worst-case visited nodes of the sphere encoder: sum_{i=1..K} T^i.
pub fn se_worst_case_nodes(k: u32, t: u32) -> Result<u64, Error> {
    assert!(t >= 2 && k >= 1);
    let mut total: u64 = 0;
    let mut power: u64 = 1;
    for _ in 0..k {
        power = power.checked_mul(t as u64).ok_or(Error::Overflow)?;
        total = total.checked_add(power).ok_or(Error::Overflow)?;
    }
    Ok(total)
}

/// Visited nodes of the QRD-M encoder with M = T: T + (K - 1) T^2.
pub fn qrdme_nodes(k: u32, t: u32) -> Result<u64, Error> {
    assert!(k >= 1 && t >= 1);
    let t = t as u64;
    let sq = t.checked_mul(t).ok_or(Error::Overflow)?;
    (k as u64 - 1)
        .checked_mul(sq)
        .and_then(|v| v.checked_add(t))
        .ok_or(Error::Overflow)
}

/// Visited nodes of the FSE: sum_{i=1..p} T^i + (K - p) T^p.
///
/// The p = 1 case collapses to K T; general p follows from expanding every
/// branch for p levels and then performing one DFE expansion per branch.
pub fn fse_nodes(k: u32, t: u32, p: u32) -> Result<u64, Error> {
    assert!(p >= 1 && p <= k, "full-expansion depth out of range");
    let t = t as u64;
    let mut total: u64 = 0;
    let mut power: u64 = 1;
    for _ in 0..p {
        power = power.checked_mul(t).ok_or(Error::Overflow)?;
        total = total.checked_add(power).ok_or(Error::Overflow)?;
    }
    let tail = (k as u64 - p as u64)
        .checked_mul(power)
        .ok_or(Error::Overflow)?;
    total.checked_add(tail).ok_or(Error::Overflow)
}

/// Complexity ratio FSE(p = 1) / QRD-M at equal T.
pub fn rho(k: u32, t: u32) -> Result<f64, Error> {
    let (num, den) = rho_fraction(k, t)?;
    Ok(num as f64 / den as f64)
}

/// The ratio as a reduced exact fraction.
pub fn rho_fraction(k: u32, t: u32) -> Result<(u64, u64), Error> {
    let num = fse_nodes(k, t, 1)?;
    let den = qrdme_nodes(k, t)?;
    let g = gcd(num, den);
    Ok((num / g, den / g))
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let r = a % b;
        a = b;
        b = r;
    }
    a.max(1)
}

/// Total (multiplications, additions) per transmitted vector for the FSE
/// with p = 1, pre-computation amortized over `n_f` transmissions:
///
/// C_mul = (D T K (K + 1) + 2 T - 2) / (2 N_f) + K T
/// C_add = D (T - 1) / N_f + T^2 K (K - 1) / 2 + T - 1
///
/// The addition form counts a full metric recomputation per candidate plus
/// the final comparisons; an implementation that factors the shared prefix
/// sums performs fewer additions (see the instrumented tallies), so both
/// are reported side by side rather than forced to agree.
pub fn arithmetic_totals(k: u32, t: u32, d: u32, n_f: u32) -> (f64, f64) {
    assert!(n_f >= 1);
    let (k, t, d, n_f) = (k as f64, t as f64, d as f64, n_f as f64);
    let mul = (d * t * k * (k + 1.0) + 2.0 * t - 2.0) / (2.0 * n_f) + k * t;
    let add = d * (t - 1.0) / n_f + 0.5 * t * t * k * (k - 1.0) + t - 1.0;
    (mul, add)
}

/// Pre-computation phase (multiplications, additions) amortized over `n_f`.
pub fn precompute_costs(k: u32, t: u32, d: u32, n_f: u32) -> (f64, f64) {
    assert!(n_f >= 1);
    let (k, t, d, n_f) = (k as f64, t as f64, d as f64, n_f as f64);
    let mul = (d * t * k * (k + 1.0) + 2.0 * t - 2.0) / (2.0 * n_f);
    let add = d * (t - 1.0) / n_f;
    (mul, add)
}

/// Upper bound on the precoding-matrix error power under imperfect CSI.
///
/// Returns `(bound, actual)` where
/// `actual = |H^-1 B H^-1|_F^2` and
/// `bound = (sum_i 1/sigma_i(H)^2)^2 * (sum_i sigma_i(B)^2)`,
/// the two sides computed through independent routes (explicit inversion
/// versus singular values).
pub fn csi_error_bound(h: &RealMatrix, b: &RealMatrix) -> Result<(f64, f64), Error> {
    assert_eq!(h.rows(), h.cols());
    assert_eq!(b.rows(), h.rows());
    assert_eq!(b.cols(), h.cols());

    let sv_h = linalg::singular_values(h)?;
    if sv_h.last().copied().unwrap_or(0.0) <= linalg::RANK_TOL {
        return Err(Error::RankDeficient {
            pivot: sv_h.last().copied().unwrap_or(0.0),
        });
    }
    let inv_power: f64 = sv_h.iter().map(|s| 1.0 / (s * s)).sum();
    let sv_b = linalg::singular_values(b)?;
    let b_power: f64 = sv_b.iter().map(|s| s * s).sum();
    let bound = inv_power * inv_power * b_power;

    let h_inv = linalg::pseudo_inverse(h, 0.0)?;
    let actual = h_inv.mat_mul(b).mat_mul(&h_inv).frobenius_norm_sq();
    Ok((bound, actual))
}

/// Residual of the first-order Neumann approximation of the perturbed
/// inverse: |(H + B)^-1 - (H^-1 - H^-1 B H^-1)|_F.
///
/// Applicable only when the spectral norm of H^-1 B is below one, checked
/// with a power iteration capped at `order_cap` steps. The residual is
/// second order in |B|: halving B shrinks it roughly fourfold.
pub fn neumann_first_order_check(
    h: &RealMatrix,
    b: &RealMatrix,
    order_cap: usize,
) -> Result<f64, Error> {
    assert_eq!(h.rows(), h.cols());
    let h_inv = linalg::pseudo_inverse(h, 0.0)?;
    let m = h_inv.mat_mul(b);

    let norm = spectral_norm_estimate(&m, order_cap.max(4));
    if norm >= 1.0 || norm.is_nan() {
        return Err(Error::InapplicableExpansion { norm });
    }

    let perturbed_inv = linalg::pseudo_inverse(&h.add(b), 0.0)?;
    let first_order = h_inv.sub(&m.mat_mul(&h_inv));
    Ok(perturbed_inv.sub(&first_order).frobenius_norm_sq().sqrt())
}

/// Largest singular value via power iteration on M^T M.
fn spectral_norm_estimate(m: &RealMatrix, iterations: usize) -> f64 {
    let n = m.cols();
    let gram = m.transpose().mat_mul(m);
    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    let mut lambda = 0.0;
    for _ in 0..iterations {
        let w = gram.mat_vec(&v);
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        lambda = norm;
        v = w.iter().map(|x| x / norm).collect();
    }
    lambda.sqrt()
}
