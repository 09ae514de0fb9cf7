//! Symbol mapping in the real lattice domain, the perturbation modulus tau,
//! and the receiver-side modulo reduction.
//!
//! QPSK ships with unnormalized per-dimension levels {-1, +1} (complex
//! points +-1 +- j), which keeps the perturbation arithmetic on the integer
//! lattice exact and gives tau = 4. The `Constellation` type carries enough
//! structure for square QAM extensions, but only QPSK is exercised.

use crate::error::Error;

/// Per-real-dimension amplitude levels of a square constellation.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    /// Ascending, symmetric about zero, uniformly spaced.
    pub real_points: Vec<f64>,
    /// Spacing between adjacent levels.
    pub delta: f64,
    /// Largest level magnitude.
    pub c_max_abs: f64,
    pub bits_per_real_dim: usize,
}

impl Constellation {
    /// Builds a constellation from ascending uniformly spaced levels
    /// symmetric about zero; the level count must be a power of two.
    pub fn from_levels(real_points: Vec<f64>) -> Self {
        let n = real_points.len();
        assert!(n >= 2 && n.is_power_of_two(), "level count must be a power of two");
        let delta = real_points[1] - real_points[0];
        assert!(delta > 0.0);
        for w in real_points.windows(2) {
            assert!((w[1] - w[0] - delta).abs() <= 1e-12 * delta, "levels not uniform");
        }
        for i in 0..n {
            let mirror = -real_points[n - 1 - i];
            assert!((real_points[i] - mirror).abs() <= 1e-12 * delta.max(1.0), "levels not symmetric");
        }
        let c_max_abs = real_points.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        Self {
            bits_per_real_dim: n.trailing_zeros() as usize,
            real_points,
            delta,
            c_max_abs,
        }
    }

    /// Unnormalized QPSK: levels {-1, +1} per real dimension.
    pub fn qpsk() -> Self {
        Self::from_levels(vec![-1.0, 1.0])
    }

    /// Number of real levels D.
    pub fn level_count(&self) -> usize {
        self.real_points.len()
    }

    /// Index of the level nearest to `v`, ties to the lower level.
    pub fn nearest_level(&self, v: f64) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, &p) in self.real_points.iter().enumerate() {
            let d = (v - p).abs();
            // Strict improvement keeps the lower level on a midpoint tie.
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }

    /// Mean squared level (symbol energy per real dimension).
    pub fn mean_energy_per_real_dim(&self) -> f64 {
        let n = self.real_points.len() as f64;
        self.real_points.iter().map(|x| x * x).sum::<f64>() / n
    }
}

/// Symmetric integer candidate set [-a, a]; T = 2a + 1 is the number of
/// children expanded per tree level and the performance/complexity knob.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PerturbSet {
    a: u32,
}

impl PerturbSet {
    pub fn new(a: u32) -> Self {
        Self { a }
    }

    /// Set with T = 2a + 1 elements; `t` must be odd and >= 1.
    pub fn with_cardinality(t: u32) -> Self {
        assert!(t >= 1 && t % 2 == 1, "T must be odd");
        Self { a: (t - 1) / 2 }
    }

    pub fn a(&self) -> u32 {
        self.a
    }

    /// T = 2a + 1.
    pub fn cardinality(&self) -> usize {
        2 * self.a as usize + 1
    }

    /// Candidate value for index k in 0..T, ascending: -a, ..., a.
    #[inline]
    pub fn value(&self, k: usize) -> i32 {
        k as i32 - self.a as i32
    }

    pub fn values(&self) -> impl Iterator<Item = i32> + '_ {
        (0..self.cardinality()).map(|k| self.value(k))
    }
}

/// Perturbation modulus tau = 2 (|c|_max + delta / 2).
pub fn tau(c: &Constellation) -> f64 {
    2.0 * (c.c_max_abs + c.delta / 2.0)
}

/// Gray-maps bits onto real constellation levels, `bits_per_real_dim` bits
/// per entry. All-zero bits map to the most negative level.
pub fn map_bits(bits: &[bool], c: &Constellation) -> Result<Vec<f64>, Error> {
    let b = c.bits_per_real_dim;
    if !bits.len().is_multiple_of(b) {
        return Err(Error::LengthMismatch {
            got: bits.len(),
            divisor: b,
        });
    }
    let mut s = Vec::with_capacity(bits.len() / b);
    for chunk in bits.chunks(b) {
        let mut label = 0usize;
        for &bit in chunk {
            label = (label << 1) | bit as usize;
        }
        // Gray label g(i) = i ^ (i >> 1); invert to get the level index.
        let mut idx = label;
        let mut mask = label >> 1;
        while mask != 0 {
            idx ^= mask;
            mask >>= 1;
        }
        s.push(c.real_points[idx]);
    }
    Ok(s)
}

/// Hard-decision slicer followed by the inverse Gray map. Midpoint ties go
/// to the lower level.
pub fn demap(s_hat: &[f64], c: &Constellation) -> Vec<bool> {
    let b = c.bits_per_real_dim;
    let mut bits = Vec::with_capacity(s_hat.len() * b);
    for &v in s_hat {
        let idx = c.nearest_level(v);
        let label = idx ^ (idx >> 1);
        for bit in (0..b).rev() {
            bits.push((label >> bit) & 1 == 1);
        }
    }
    bits
}

/// Maps each entry into the half-open fundamental region [-tau/2, tau/2) by
/// subtracting integer multiples of tau.
pub fn modulo_reduce(y: &[f64], tau: f64) -> Vec<f64> {
    assert!(tau > 0.0);
    y.iter().map(|&v| modulo_scalar(v, tau)).collect()
}

#[inline]
pub fn modulo_scalar(v: f64, tau: f64) -> f64 {
    let out = v - tau * (v / tau + 0.5).floor();
    // Guard the upper boundary: rounding can land exactly on tau/2.
    if out >= tau / 2.0 {
        out - tau
    } else {
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tau_values() {
        assert_eq!(tau(&Constellation::qpsk()), 4.0);

        let inv = 1.0 / 2.0f64.sqrt();
        let c = Constellation::from_levels(vec![-inv, inv]);
        assert!((tau(&c) - 2.0 * 2.0f64.sqrt()).abs() <= 1e-15);

        // Homogeneity: scaling the levels by k scales tau by k.
        let k = 3.5;
        let scaled = Constellation::from_levels(vec![-k, k]);
        assert!((tau(&scaled) - k * tau(&Constellation::qpsk())).abs() <= 1e-12);
    }

    #[test]
    fn perturb_set_layout() {
        let set = PerturbSet::with_cardinality(5);
        assert_eq!(set.a(), 2);
        assert_eq!(set.cardinality(), 5);
        let vals: Vec<i32> = set.values().collect();
        assert_eq!(vals, vec![-2, -1, 0, 1, 2]);
    }

    #[test]
    fn map_all_zero_bits() {
        let c = Constellation::qpsk();
        let s = map_bits(&[false; 8], &c).unwrap();
        assert_eq!(s, vec![-1.0; 8]);
    }

    #[test]
    fn map_demap_roundtrip_exhaustive() {
        let c = Constellation::qpsk();
        for pattern in 0u32..256 {
            let bits: Vec<bool> = (0..8).map(|i| (pattern >> i) & 1 == 1).collect();
            let s = map_bits(&bits, &c).unwrap();
            assert_eq!(demap(&s, &c), bits, "pattern {pattern}");
        }
    }

    #[test]
    fn single_bit_flip_moves_one_entry() {
        let c = Constellation::qpsk();
        let bits: Vec<bool> = (0..8).map(|i| i % 3 == 0).collect();
        let s = map_bits(&bits, &c).unwrap();
        for flip in 0..8 {
            let mut b2 = bits.clone();
            b2[flip] = !b2[flip];
            let s2 = map_bits(&b2, &c).unwrap();
            let changed = s.iter().zip(s2.iter()).filter(|(a, b)| a != b).count();
            assert_eq!(changed, 1);
        }
    }

    #[test]
    fn map_demap_roundtrip_four_levels() {
        let c = Constellation::from_levels(vec![-3.0, -1.0, 1.0, 3.0]);
        assert_eq!(c.bits_per_real_dim, 2);
        for pattern in 0u32..raw_pow(2, 8) {
            let bits: Vec<bool> = (0..8).map(|i| (pattern >> i) & 1 == 1).collect();
            let s = map_bits(&bits, &c).unwrap();
            assert_eq!(demap(&s, &c), bits);
        }
    }

    fn raw_pow(b: u32, e: u32) -> u32 {
        b.pow(e)
    }

    #[test]
    fn map_length_mismatch() {
        let c = Constellation::from_levels(vec![-3.0, -1.0, 1.0, 3.0]);
        match map_bits(&[true; 5], &c) {
            Err(Error::LengthMismatch { got: 5, divisor: 2 }) => {}
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn demap_tie_goes_low() {
        let c = Constellation::qpsk();
        let bits = demap(&[0.0], &c);
        // Level -1 carries Gray label 0.
        assert_eq!(bits, vec![false]);
    }

    #[test]
    fn modulo_inverts_perturbation() {
        let t = 4.0;
        for s in [-1.9, -1.0, -0.5, 0.0, 0.3, 1.0, 1.99] {
            for k in -10i32..=10 {
                let y = s + t * k as f64;
                let r = modulo_scalar(y, t);
                assert!((r - s).abs() <= 1e-9, "s={s} k={k} got {r}");
            }
        }
    }

    #[test]
    fn modulo_boundary_and_idempotence() {
        let t = 4.0;
        assert_eq!(modulo_scalar(2.0, t), -2.0);
        assert_eq!(modulo_scalar(0.0, t), 0.0);
        assert_eq!(modulo_scalar(-2.0, t), -2.0);
        for v in [-7.3, -2.0, -0.1, 1.3, 5.5, 2.0] {
            let once = modulo_scalar(v, t);
            assert!((-t / 2.0..t / 2.0).contains(&once));
            assert_eq!(modulo_scalar(once, t), once);
        }
    }
}
