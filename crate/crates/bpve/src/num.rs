//! Scalar abstraction and the numerical kernels shared across the crate:
//! compensated summation, log-scaled accumulation for quantities spanning
//! hundreds of decades, `ln n!`, and a small radix-2 FFT.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point scalar the whole library is generic over: f32 or f64.
pub trait Real:
    Float + NumAssign + FromPrimitive + ToPrimitive + Sum<Self> + Debug + Display + Send + Sync + 'static
{
}

impl<T> Real for T where
    T: Float + NumAssign + FromPrimitive + ToPrimitive + Sum<T> + Debug + Display + Send + Sync + 'static
{
}

/// Convert an f64 constant into the working scalar.
#[inline]
pub(crate) fn cast<T: Real>(x: f64) -> T {
    T::from(x).expect("f64 constant representable in scalar type")
}

/// Convert a count into the working scalar (rounds above 2^53 for f64).
#[inline]
pub(crate) fn cast_u64<T: Real>(x: u64) -> T {
    T::from_u64(x).expect("u64 representable in scalar type")
}

/// Kahan compensated summation.
#[derive(Debug, Clone, Copy)]
pub struct KahanSum<T> {
    sum: T,
    comp: T,
}

impl<T: Real> Default for KahanSum<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Real> KahanSum<T> {
    pub fn new() -> Self {
        Self { sum: T::zero(), comp: T::zero() }
    }

    #[inline]
    pub fn add(&mut self, value: T) {
        let y = value - self.comp;
        let t = self.sum + y;
        self.comp = (t - self.sum) - y;
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> T {
        self.sum
    }
}

/// A non-negative quantity stored as `mantissa * exp(ln_scale)`.
///
/// Keeps full relative precision for values far outside the representable
/// range of the scalar (supercritical mean products reach e^4000 and beyond).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogScaled<T> {
    ln_scale: T,
    mantissa: T,
}

impl<T: Real> LogScaled<T> {
    pub fn zero() -> Self {
        Self { ln_scale: T::zero(), mantissa: T::zero() }
    }

    pub fn one() -> Self {
        Self { ln_scale: T::zero(), mantissa: T::one() }
    }

    /// Wrap a plain non-negative value.
    pub fn from_value(v: T) -> Self {
        debug_assert!(v >= T::zero());
        let mut x = Self { ln_scale: T::zero(), mantissa: v };
        x.renorm();
        x
    }

    /// Value `exp(ln)`.
    pub fn from_ln(ln: T) -> Self {
        Self { ln_scale: ln, mantissa: T::one() }
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa == T::zero()
    }

    /// Collapse to a plain scalar; overflows to `inf` and underflows to 0.
    pub fn value(&self) -> T {
        if self.is_zero() {
            T::zero()
        } else {
            self.mantissa * self.ln_scale.exp()
        }
    }

    /// Natural log of the value; `-inf` for zero.
    pub fn ln(&self) -> T {
        if self.is_zero() {
            T::neg_infinity()
        } else {
            self.ln_scale + self.mantissa.ln()
        }
    }

    fn renorm(&mut self) {
        if self.mantissa == T::zero() {
            self.ln_scale = T::zero();
            return;
        }
        let bound = Self::renorm_bound();
        if self.mantissa > bound || self.mantissa < bound.recip() {
            self.ln_scale = self.ln_scale + self.mantissa.ln();
            self.mantissa = T::one();
        }
    }

    fn renorm_bound() -> T {
        // e^(max_exp/4): far from overflow in the scalar type.
        (T::max_value().ln() * cast(0.25)).exp()
    }

    pub fn add(self, other: Self) -> Self {
        if self.is_zero() {
            return other;
        }
        if other.is_zero() {
            return self;
        }
        let (hi, lo) = if self.ln() >= other.ln() { (self, other) } else { (other, self) };
        let shifted = (lo.ln() - hi.ln_scale).exp();
        let mut out = Self { ln_scale: hi.ln_scale, mantissa: hi.mantissa + shifted };
        out.renorm();
        out
    }

    /// `self - other`, clamped at zero (used only where the true result is >= 0).
    pub fn sub_clamped(self, other: Self) -> Self {
        if other.is_zero() {
            return self;
        }
        if self.is_zero() {
            return Self::zero();
        }
        let shifted = (other.ln() - self.ln_scale).exp();
        let m = self.mantissa - shifted;
        if m <= T::zero() {
            return Self::zero();
        }
        let mut out = Self { ln_scale: self.ln_scale, mantissa: m };
        out.renorm();
        out
    }

    pub fn mul(self, other: Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let mut out = Self {
            ln_scale: self.ln_scale + other.ln_scale,
            mantissa: self.mantissa * other.mantissa,
        };
        out.renorm();
        out
    }

    /// Relative difference |a-b| / max(a, b, floor).
    pub fn rel_diff(self, other: Self, floor: T) -> T {
        if self.is_zero() && other.is_zero() {
            return T::zero();
        }
        let la = self.ln();
        let lb = other.ln();
        let (hi, lo) = if la >= lb { (la, lb) } else { (lb, la) };
        if hi <= floor.ln() {
            // Both below the floor: difference measured against the floor.
            return (hi.exp() - lo.exp()).abs() / floor;
        }
        -(lo - hi).exp_m1()
    }
}

/// Accumulator for sums of non-negative terms whose magnitudes may span
/// hundreds of decades: compensated summation on a sliding log scale.
#[derive(Debug, Clone, Copy)]
pub struct ScaledAccumulator<T> {
    ln_scale: T,
    sum: KahanSum<T>,
    started: bool,
}

impl<T: Real> Default for ScaledAccumulator<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Real> ScaledAccumulator<T> {
    pub fn new() -> Self {
        Self { ln_scale: T::zero(), sum: KahanSum::new(), started: false }
    }

    /// Add `exp(ln_term)`.
    pub fn add_ln(&mut self, ln_term: T) {
        if ln_term == T::neg_infinity() {
            return;
        }
        let guard = T::max_value().ln() * cast(0.5);
        if !self.started {
            self.ln_scale = ln_term;
            self.sum.add(T::one());
            self.started = true;
            return;
        }
        let mut delta = ln_term - self.ln_scale;
        if delta > guard * cast(0.5) || self.sum.value() > guard.exp() {
            self.rescale(ln_term.max(self.ln_scale + self.sum.value().ln()));
            delta = ln_term - self.ln_scale;
        }
        self.sum.add(delta.exp());
    }

    /// Add a plain non-negative value.
    pub fn add_value(&mut self, v: T) {
        debug_assert!(v >= T::zero());
        if v > T::zero() {
            self.add_ln(v.ln());
        }
    }

    fn rescale(&mut self, new_scale: T) {
        let factor = (self.ln_scale - new_scale).exp();
        let mut fresh = KahanSum::new();
        fresh.add(self.sum.value() * factor);
        self.sum = fresh;
        self.ln_scale = new_scale;
    }

    pub fn snapshot(&self) -> LogScaled<T> {
        if !self.started || self.sum.value() == T::zero() {
            LogScaled::zero()
        } else {
            let mut out = LogScaled { ln_scale: self.ln_scale, mantissa: self.sum.value() };
            out.renorm();
            out
        }
    }
}

const LN_FACT_SMALL: [f64; 31] = [
    0.0,
    0.0,
    0.6931471805599453,
    1.791759469228055,
    3.1780538303479458,
    4.787491742782046,
    6.579251212010101,
    8.525161361065415,
    10.60460290274525,
    12.80182748008147,
    15.104412573075516,
    17.502307845873887,
    19.98721449566189,
    22.552163853123425,
    25.19122118273868,
    27.899271383840894,
    30.671860106080675,
    33.50507345013689,
    36.39544520803305,
    39.339884187199495,
    42.335616460753485,
    45.38013889847691,
    48.47118135183523,
    51.60667556776437,
    54.78472939811232,
    58.00360522298052,
    61.261701761002,
    64.55753862700634,
    67.88974313718154,
    71.25703896716801,
    74.65823634883016,
];

/// ln(n!) via a table for n <= 30 and a Stirling series above.
pub fn ln_factorial<T: Real>(n: u64) -> T {
    if n <= 30 {
        return cast(LN_FACT_SMALL[n as usize]);
    }
    let x = cast_u64::<T>(n);
    let inv = x.recip();
    let inv2 = inv * inv;
    let two_pi = cast::<T>(2.0 * std::f64::consts::PI);
    // x ln x - x + ln(2 pi x)/2 + 1/(12x) - 1/(360x^3) + 1/(1260x^5) - 1/(1680x^7)
    let series = inv * cast(1.0 / 12.0)
        - inv * inv2 * cast(1.0 / 360.0)
        + inv * inv2 * inv2 * cast(1.0 / 1260.0)
        - inv * inv2 * inv2 * inv2 * cast(1.0 / 1680.0);
    x * x.ln() - x + (two_pi * x).ln() * cast(0.5) + series
}

/// In-place radix-2 FFT; `inverse` divides by the length.
///
/// Length must be a power of two. Precision is the usual O(eps log n),
/// plenty for the characteristic-function inversion this crate does.
pub fn fft<T: Real>(data: &mut [Complex<T>], inverse: bool) {
    let n = data.len();
    assert!(n.is_power_of_two(), "fft length must be a power of two");
    // Bit-reversal permutation.
    let mut j = 0usize;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            data.swap(i, j);
        }
    }
    let sign = if inverse { T::one() } else { -T::one() };
    let mut len = 2usize;
    while len <= n {
        let ang = sign * cast::<T>(2.0 * std::f64::consts::PI) / cast_u64::<T>(len as u64);
        let wlen = Complex::new(ang.cos(), ang.sin());
        let mut i = 0usize;
        while i < n {
            let mut w = Complex::new(T::one(), T::zero());
            for k in 0..len / 2 {
                let u = data[i + k];
                let v = data[i + k + len / 2] * w;
                data[i + k] = u + v;
                data[i + k + len / 2] = u - v;
                w = w * wlen;
            }
            i += len;
        }
        len <<= 1;
    }
    if inverse {
        let scale = cast_u64::<T>(n as u64).recip();
        for x in data.iter_mut() {
            *x = Complex::new(x.re * scale, x.im * scale);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn kahan_beats_naive_on_small_terms() {
        let mut k = KahanSum::<f64>::new();
        k.add(1.0);
        for _ in 0..1_000_000 {
            k.add(1e-17);
        }
        assert_relative_eq!(k.value(), 1.0 + 1e-11, max_relative = 1e-12);
    }

    #[test]
    fn log_scaled_roundtrip_and_algebra() {
        let a = LogScaled::<f64>::from_value(3.5);
        let b = LogScaled::from_value(1.5);
        assert_relative_eq!(a.add(b).value(), 5.0, max_relative = 1e-14);
        assert_relative_eq!(a.sub_clamped(b).value(), 2.0, max_relative = 1e-14);
        assert_relative_eq!(a.mul(b).value(), 5.25, max_relative = 1e-14);
        // Values far outside f64 range keep relative precision in ln.
        let huge = LogScaled::<f64>::from_ln(5000.0);
        let sum = huge.add(huge);
        assert_relative_eq!(sum.ln(), 5000.0 + std::f64::consts::LN_2, max_relative = 1e-14);
    }

    #[test]
    fn scaled_accumulator_matches_plain_sum() {
        let mut acc = ScaledAccumulator::<f64>::new();
        let mut plain = 0.0;
        for k in 1..=50 {
            let t = (k as f64).powi(2) * 0.37;
            acc.add_value(t);
            plain += t;
        }
        assert_relative_eq!(acc.snapshot().value(), plain, max_relative = 1e-13);
    }

    #[test]
    fn scaled_accumulator_geometric_growth() {
        // Terms 2^k for k = 0..4000 overflow f64; the ln must still be right.
        let ln2 = std::f64::consts::LN_2;
        let mut acc = ScaledAccumulator::<f64>::new();
        for k in 0..=4000 {
            acc.add_ln(k as f64 * ln2);
        }
        // Sum = 2^4001 - 1.
        assert_relative_eq!(acc.snapshot().ln(), 4001.0 * ln2, epsilon = 1e-9);
    }

    #[test]
    fn ln_factorial_against_direct_product() {
        for n in [0u64, 1, 2, 5, 10, 30, 31, 50, 100, 1000] {
            let direct: f64 = (1..=n).map(|i| (i as f64).ln()).sum();
            assert_relative_eq!(ln_factorial::<f64>(n), direct, epsilon = 1e-9, max_relative = 1e-12);
        }
    }

    #[test]
    fn fft_roundtrip() {
        let mut data: Vec<Complex<f64>> =
            (0..64).map(|i| Complex::new((i as f64).sin(), (i as f64 * 0.3).cos())).collect();
        let orig = data.clone();
        fft(&mut data, false);
        fft(&mut data, true);
        for (a, b) in data.iter().zip(orig.iter()) {
            assert_relative_eq!(a.re, b.re, epsilon = 1e-12);
            assert_relative_eq!(a.im, b.im, epsilon = 1e-12);
        }
    }
}
