//! Exact accumulation of f64 sums.
//!
//! [`ExactSum`] is a 2176-bit two's-complement fixed-point register covering
//! the full finite f64 range (bit 0 weighs 2^-1074, the subnormal LSB).
//! Adding or removing a double is exact integer arithmetic, so the register
//! state depends only on the multiset of values currently held, never on the
//! order of operations, and [`ExactSum::value`] returns the correctly rounded
//! (nearest, ties to even) f64 of the exact sum.
//!
//! The streaming tail statistics lean on this: their incremental exceedance
//! sums must equal a from-scratch recomputation bit for bit, which no plain
//! floating accumulator can promise once elements migrate in and out of the
//! tail.

const LIMBS: usize = 34;

/// Exact signed sum of finitely many f64 values.
///
/// About 80 bits of headroom remain above the largest finite double, so
/// overflow would take more than 2^78 max-magnitude addends.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExactSum {
    limbs: [u64; LIMBS],
}

impl Default for ExactSum {
    fn default() -> Self {
        Self::new()
    }
}

impl ExactSum {
    pub fn new() -> Self {
        ExactSum { limbs: [0; LIMBS] }
    }

    /// Accumulates the exact sum of `values`.
    pub fn of(values: impl IntoIterator<Item = f64>) -> Self {
        let mut s = Self::new();
        for v in values {
            s.add(v);
        }
        s
    }

    /// Adds `x` exactly. `x` must be finite.
    pub fn add(&mut self, x: f64) {
        let (neg, m, p) = split(x);
        if m == 0 {
            return;
        }
        if neg {
            self.sub_at(p / 64, (m as u128) << (p % 64));
        } else {
            self.add_at(p / 64, (m as u128) << (p % 64));
        }
    }

    /// Removes `x` exactly: `s.sub(x)` undoes an earlier `s.add(x)`.
    pub fn sub(&mut self, x: f64) {
        let (neg, m, p) = split(x);
        if m == 0 {
            return;
        }
        if neg {
            self.add_at(p / 64, (m as u128) << (p % 64));
        } else {
            self.sub_at(p / 64, (m as u128) << (p % 64));
        }
    }

    pub fn is_zero(&self) -> bool {
        self.limbs.iter().all(|&l| l == 0)
    }

    /// The exact sum rounded once to f64 (nearest, ties to even).
    pub fn value(&self) -> f64 {
        if self.is_negative() {
            let mut mag = self.clone();
            mag.negate();
            -mag.magnitude_to_f64()
        } else {
            self.magnitude_to_f64()
        }
    }

    fn is_negative(&self) -> bool {
        self.limbs[LIMBS - 1] >> 63 == 1
    }

    fn negate(&mut self) {
        let mut carry: u128 = 1;
        for l in self.limbs.iter_mut() {
            let w = (!*l) as u128 + carry;
            *l = w as u64;
            carry = w >> 64;
        }
    }

    fn add_at(&mut self, mut limb: usize, val: u128) {
        let mut carry = val;
        while carry != 0 && limb < LIMBS {
            let (s, o) = self.limbs[limb].overflowing_add(carry as u64);
            self.limbs[limb] = s;
            carry = (carry >> 64) + u128::from(o);
            limb += 1;
        }
    }

    fn sub_at(&mut self, mut limb: usize, val: u128) {
        let mut borrow = val;
        while borrow != 0 && limb < LIMBS {
            let (s, o) = self.limbs[limb].overflowing_sub(borrow as u64);
            self.limbs[limb] = s;
            borrow = (borrow >> 64) + u128::from(o);
            limb += 1;
        }
    }

    fn magnitude_to_f64(&self) -> f64 {
        let Some(tl) = (0..LIMBS).rev().find(|&i| self.limbs[i] != 0) else {
            return 0.0;
        };
        let tb = 63 - self.limbs[tl].leading_zeros() as usize;
        let p = tl * 64 + tb;
        if p <= 51 {
            // Below 2^-1022: the subnormal grid is the register grid, exact.
            return f64::from_bits(self.limbs[0]);
        }
        let mut mant = self.extract_53(p - 52);
        let mut e_top = p as i64 - 1074;
        let (round, sticky) = if p >= 53 {
            (self.bit(p - 53), self.any_below(p - 53))
        } else {
            (false, false)
        };
        if round && (sticky || mant & 1 == 1) {
            mant += 1;
            if mant == 1 << 53 {
                mant >>= 1;
                e_top += 1;
            }
        }
        if e_top > 1023 {
            return f64::INFINITY;
        }
        let bits = (((e_top + 1023) as u64) << 52) | (mant & ((1u64 << 52) - 1));
        f64::from_bits(bits)
    }

    /// 53 bits starting at absolute position `lo`.
    fn extract_53(&self, lo: usize) -> u64 {
        let limb = lo / 64;
        let sh = lo % 64;
        let mut v = self.limbs[limb] >> sh;
        if sh != 0 && limb + 1 < LIMBS {
            v |= self.limbs[limb + 1] << (64 - sh);
        }
        v & ((1u64 << 53) - 1)
    }

    fn bit(&self, p: usize) -> bool {
        self.limbs[p / 64] >> (p % 64) & 1 == 1
    }

    fn any_below(&self, p: usize) -> bool {
        let limb = p / 64;
        let sh = p % 64;
        if self.limbs[..limb].iter().any(|&l| l != 0) {
            return true;
        }
        self.limbs[limb] & ((1u64 << sh) - 1) != 0
    }
}

/// Splits a finite f64 into (negative, mantissa, register bit position of the
/// mantissa LSB). `x == sign * mantissa * 2^(position - 1074)`.
fn split(x: f64) -> (bool, u64, usize) {
    assert!(x.is_finite(), "ExactSum requires finite values, got {x}");
    let bits = x.to_bits();
    let neg = bits >> 63 == 1;
    let be = (bits >> 52) & 0x7ff;
    let frac = bits & ((1u64 << 52) - 1);
    if be == 0 {
        (neg, frac, 0)
    } else {
        (neg, frac | 1 << 52, (be - 1) as usize)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // ---- Oracle: exact i128 fixed point for exponents within [-73, 93] ----
    //
    // For |v| in [2^-20, 2^20], v * 2^73 is an integer-valued f64 (exact
    // power-of-two scaling), so summing as i128 and rounding once at the end
    // is an independent route to the correctly rounded sum.

    const POW73: f64 = 9444732965739290427392.0; // 2^73

    fn oracle_sum(values: &[f64]) -> f64 {
        let total: i128 = values
            .iter()
            .map(|&v| {
                let scaled = v * POW73;
                assert_eq!(scaled.fract(), 0.0, "oracle domain violated for {v}");
                scaled as i128
            })
            .sum();
        (total as f64) / POW73
    }

    fn splitmix(state: &mut u64) -> u64 {
        *state = state.wrapping_add(0x9E3779B97F4A7C15);
        let mut z = *state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z ^ (z >> 31)
    }

    fn rand_in_oracle_domain(state: &mut u64) -> f64 {
        // Uniform mantissa, exponent in [-20, 19], random sign.
        let r = splitmix(state);
        let exp = ((r >> 53) % 40) as i32 - 20;
        let frac = (r & ((1 << 52) - 1)) as f64 / (1u64 << 52) as f64 + 1.0;
        let v = frac * 2f64.powi(exp);
        if r & (1 << 62) == 0 {
            v
        } else {
            -v
        }
    }

    #[test]
    fn matches_i128_oracle_on_random_multisets() {
        let mut state = 0xD1CEu64;
        for round in 0..200 {
            let n = 2 + (splitmix(&mut state) % 64) as usize;
            let values: Vec<f64> = (0..n).map(|_| rand_in_oracle_domain(&mut state)).collect();
            let want = oracle_sum(&values);
            let got = ExactSum::of(values.iter().copied()).value();
            assert_eq!(
                got.to_bits(),
                want.to_bits(),
                "round {round}: got {got:e}, oracle {want:e}"
            );
        }
    }

    #[test]
    fn add_then_remove_matches_oracle_of_survivors() {
        let mut state = 0xFEED5EEDu64;
        for _ in 0..100 {
            let n = 8 + (splitmix(&mut state) % 48) as usize;
            let values: Vec<f64> = (0..n).map(|_| rand_in_oracle_domain(&mut state)).collect();
            let mut acc = ExactSum::of(values.iter().copied());
            let mut survivors = Vec::new();
            for &v in &values {
                if splitmix(&mut state) % 2 == 0 {
                    acc.sub(v);
                } else {
                    survivors.push(v);
                }
            }
            let want = oracle_sum(&survivors);
            assert_eq!(acc.value().to_bits(), want.to_bits());
        }
    }

    #[test]
    fn order_and_churn_invariant_across_full_range() {
        // Exponents far outside the i128 oracle's domain: verify the register
        // state itself is order-invariant and removal restores it exactly.
        let mut state = 0xABCDu64;
        let values: Vec<f64> = (0..80)
            .map(|_| {
                let r = splitmix(&mut state);
                let exp = ((r >> 53) % 600) as i32 - 300;
                let frac = (r & ((1 << 52) - 1)) as f64 / (1u64 << 52) as f64 + 1.0;
                if r & (1 << 62) == 0 {
                    frac * 2f64.powi(exp)
                } else {
                    -frac * 2f64.powi(exp)
                }
            })
            .collect();
        let forward = ExactSum::of(values.iter().copied());
        let backward = ExactSum::of(values.iter().rev().copied());
        assert_eq!(forward, backward);

        let mut churned = forward.clone();
        for &v in values.iter().step_by(3) {
            churned.sub(v);
        }
        for &v in values.iter().step_by(3) {
            churned.add(v);
        }
        assert_eq!(churned, forward);
        assert_eq!(churned.value().to_bits(), forward.value().to_bits());
    }

    // ---- Hand-pinned rounding edges ----

    #[test]
    fn ties_round_to_even() {
        // 1 + 2^-53 is exactly halfway between 1.0 and 1.0 + 2^-52.
        let s = ExactSum::of([1.0, 2f64.powi(-53)]);
        assert_eq!(s.value().to_bits(), 1.0f64.to_bits());
        // Any dust below the halfway point breaks the tie upward.
        let s = ExactSum::of([1.0, 2f64.powi(-53), 2f64.powi(-105)]);
        assert_eq!(s.value(), 1.0 + 2f64.powi(-52));
    }

    #[test]
    fn representable_sums_are_exact() {
        let s = ExactSum::of([1.0, 2f64.powi(-52)]);
        assert_eq!(s.value(), 1.0 + 2f64.powi(-52));
        let s = ExactSum::of([0.5, 0.25, 0.125]);
        assert_eq!(s.value(), 0.875);
    }

    #[test]
    fn subnormals_are_exact() {
        let tiny = f64::from_bits(1); // 2^-1074
        let s = ExactSum::of([tiny, tiny, tiny]);
        assert_eq!(s.value().to_bits(), f64::from_bits(3).to_bits());
        let mut s = ExactSum::of([tiny]);
        s.sub(tiny);
        assert!(s.is_zero());
        assert_eq!(s.value(), 0.0);
    }

    #[test]
    fn survives_intermediate_overflow_of_f64() {
        // 1e308 + 1e308 exceeds f64::MAX, but the register holds it exactly
        // and the cancelled remainder comes back out unharmed.
        let mut s = ExactSum::new();
        s.add(1e308);
        s.add(1e308);
        s.sub(1e308);
        assert_eq!(s.value(), 1e308);
        s.add(1e308); // 2e308 again
        assert_eq!(s.value(), f64::INFINITY); // honest: past the finite range
        s.sub(1e308);
        assert_eq!(s.value(), 1e308);
    }

    #[test]
    fn signed_cancellation_is_exact() {
        let mut state = 77u64;
        for _ in 0..50 {
            let v = rand_in_oracle_domain(&mut state);
            let mut s = ExactSum::new();
            s.add(v);
            s.add(-v);
            assert!(s.is_zero());
        }
        // Mixed-sign partial cancellation against the oracle.
        let vals = [3.5, -1.25, 0.0625, -2.3125];
        assert_eq!(
            ExactSum::of(vals).value().to_bits(),
            oracle_sum(&vals).to_bits()
        );
    }

    #[test]
    fn negative_totals_round_like_positive_ones() {
        let vals = [-1.0, -(2f64.powi(-53))];
        let s = ExactSum::of(vals);
        assert_eq!(s.value().to_bits(), (-1.0f64).to_bits());
        let vals = [-1.0, -(2f64.powi(-53)), -(2f64.powi(-105))];
        let s = ExactSum::of(vals);
        assert_eq!(s.value(), -(1.0 + 2f64.powi(-52)));
    }

    #[test]
    fn zero_values_are_ignored() {
        let mut s = ExactSum::new();
        s.add(0.0);
        s.add(-0.0);
        assert!(s.is_zero());
        s.add(2.0);
        s.add(0.0);
        assert_eq!(s.value(), 2.0);
    }
}
