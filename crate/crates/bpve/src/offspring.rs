//! Offspring distributions on the non-negative integers.
//!
//! Eight built-in families cover the environments used throughout the crate.
//! Every distribution caches its factorial moments at construction and
//! lazily builds a probability table (mode-anchored recurrences, so large
//! parameters neither overflow nor lose the far tail to underflow).
//!
//! Two evaluation surfaces matter downstream:
//! * `pgf(s)` — the generating function itself,
//! * `pgf_complement(u)` — `1 - f(1 - u)`, computed without cancellation.
//!   The backward survival recursion runs entirely on complements, which is
//!   what keeps deeply subcritical survival probabilities accurate.

use std::sync::OnceLock;

use num_complex::Complex;
use thiserror::Error;

use crate::num::{cast, cast_u64, ln_factorial, KahanSum, Real};

/// Absolute tolerance for infinite-support tail truncation.
pub const TAIL_TOLERANCE: f64 = 1e-12;

/// FiniteSupport atom lists may miss 1 by this much and are renormalized.
pub const FINITE_SUPPORT_SLACK: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum OffspringError {
    #[error("{family}: {detail}")]
    InvalidParameter { family: &'static str, detail: String },
    #[error("pgf argument {s} outside [0, 1]")]
    OutsideUnitInterval { s: f64 },
    #[error("distribution puts no mass on positive integers")]
    ZeroMean,
}

/// Family and parameters of one offspring law.
#[derive(Debug, Clone, PartialEq)]
pub enum Kind<T> {
    /// Atoms (value, probability); normalized, sorted, deduplicated.
    FiniteSupport(Vec<(u64, T)>),
    Poisson { lambda: T },
    Binomial { m: u64, p: T },
    /// `P(Y >= 1) = s1`, and conditionally on `Y >= 1` the law is geometric
    /// on {1, 2, ...} with success parameter `p`.
    LinearFractional { p: T, s1: T },
    NegativeBinomial { alpha: u64, p: T },
    Hypergeometric { total: u64, marked: u64, draws: u64 },
    /// Mass `p` at 2 and `1 - p` at 0.
    Binary { p: T },
    /// Mass `p/2` at 0 and 2, `1 - p` at 1.
    Symmetric { p: T },
}

impl<T> Kind<T> {
    pub fn family_name(&self) -> &'static str {
        match self {
            Kind::FiniteSupport(_) => "finite",
            Kind::Poisson { .. } => "poisson",
            Kind::Binomial { .. } => "binomial",
            Kind::LinearFractional { .. } => "linear_fractional",
            Kind::NegativeBinomial { .. } => "negative_binomial",
            Kind::Hypergeometric { .. } => "hypergeometric",
            Kind::Binary { .. } => "binary",
            Kind::Symmetric { .. } => "symmetric",
        }
    }
}

/// One generation's offspring law with cached moments.
#[derive(Debug)]
pub struct OffspringDistribution<T: Real> {
    kind: Kind<T>,
    mean: T,
    f2: T,
    f3: T,
    p0: T,
    p1: T,
    support_cap: u64,
    pmf_table: OnceLock<Vec<T>>,
    suffix2: OnceLock<Vec<T>>,
}

impl<T: Real> Clone for OffspringDistribution<T> {
    fn clone(&self) -> Self {
        Self {
            kind: self.kind.clone(),
            mean: self.mean,
            f2: self.f2,
            f3: self.f3,
            p0: self.p0,
            p1: self.p1,
            support_cap: self.support_cap,
            pmf_table: OnceLock::new(),
            suffix2: OnceLock::new(),
        }
    }
}

impl<T: Real> PartialEq for OffspringDistribution<T> {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

/// Truncated probability vector plus the mass it dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedPmf<T> {
    /// `probs[y] = P(Y = y)` for `y = 0..=K`.
    pub probs: Vec<T>,
    /// `1 - sum(probs)`, never negative.
    pub remainder: T,
}

/// `E[Y; Y>=2]`, `E[Y^2; Y>=2]`, `P(Y>=1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RestrictedMoments<T> {
    pub e_y_ge2: T,
    pub e_y2_ge2: T,
    pub p_ge1: T,
}

fn invalid<T>(family: &'static str, detail: impl Into<String>) -> Result<T, OffspringError> {
    Err(OffspringError::InvalidParameter { family, detail: detail.into() })
}

fn require_prob<T: Real>(family: &'static str, name: &str, p: T) -> Result<(), OffspringError> {
    if !(p >= T::zero() && p <= T::one()) {
        return invalid(family, format!("{name} = {p} not in [0, 1]"));
    }
    Ok(())
}

impl<T: Real> OffspringDistribution<T> {
    fn from_parts(kind: Kind<T>, mean: T, f2: T, f3: T, p0: T, p1: T, cap: u64) -> Result<Self, OffspringError> {
        if !(mean > T::zero()) || !mean.is_finite() {
            return Err(OffspringError::ZeroMean);
        }
        Ok(Self {
            kind,
            mean,
            f2,
            f3,
            p0,
            p1,
            support_cap: cap,
            pmf_table: OnceLock::new(),
            suffix2: OnceLock::new(),
        })
    }

    /// Atom list (value, probability). Probabilities must be non-negative and
    /// sum to 1 within `FINITE_SUPPORT_SLACK`; they are renormalized exactly.
    pub fn finite(atoms: impl IntoIterator<Item = (u64, T)>) -> Result<Self, OffspringError> {
        let mut merged: Vec<(u64, T)> = Vec::new();
        for (v, p) in atoms {
            if !(p >= T::zero()) || !p.is_finite() {
                return invalid("finite", format!("probability {p} at atom {v} invalid"));
            }
            match merged.binary_search_by_key(&v, |e| e.0) {
                Ok(i) => merged[i].1 += p,
                Err(i) => merged.insert(i, (v, p)),
            }
        }
        if merged.is_empty() {
            return invalid("finite", "no atoms");
        }
        let total: T = merged.iter().map(|e| e.1).sum();
        if ((total - T::one()).abs()) > cast(FINITE_SUPPORT_SLACK) {
            return invalid("finite", format!("probabilities sum to {total}, not 1"));
        }
        for e in merged.iter_mut() {
            e.1 = e.1 / total;
        }
        let mut mean = KahanSum::new();
        let mut f2 = KahanSum::new();
        let mut f3 = KahanSum::new();
        for &(v, p) in &merged {
            let x = cast_u64::<T>(v);
            mean.add(x * p);
            f2.add(x * (x - T::one()) * p);
            f3.add(x * (x - T::one()) * (x - cast(2.0)) * p);
        }
        let p_at = |v: u64| {
            merged
                .binary_search_by_key(&v, |e| e.0)
                .map(|i| merged[i].1)
                .unwrap_or_else(|_| T::zero())
        };
        let (p0, p1) = (p_at(0), p_at(1));
        let cap = merged.last().map(|e| e.0).unwrap_or(0);
        Self::from_parts(Kind::FiniteSupport(merged), mean.value(), f2.value(), f3.value(), p0, p1, cap)
    }

    /// Point mass at `v`.
    pub fn dirac(v: u64) -> Result<Self, OffspringError> {
        Self::finite([(v, T::one())])
    }

    pub fn poisson(lambda: T) -> Result<Self, OffspringError> {
        if !(lambda > T::zero()) || !lambda.is_finite() {
            return invalid("poisson", format!("lambda = {lambda} must be positive"));
        }
        let lf = lambda.to_f64().unwrap_or(f64::NAN);
        let cap = (lf + 40.0 * (lf + 1.0).sqrt() + 60.0).ceil() as u64;
        let p0 = (-lambda).exp();
        Self::from_parts(
            Kind::Poisson { lambda },
            lambda,
            lambda * lambda,
            lambda * lambda * lambda,
            p0,
            lambda * p0,
            cap,
        )
    }

    pub fn binomial(m: u64, p: T) -> Result<Self, OffspringError> {
        if m == 0 {
            return invalid("binomial", "m must be >= 1");
        }
        require_prob("binomial", "p", p)?;
        if !(p > T::zero()) {
            return invalid("binomial", "p must be positive");
        }
        let mt = cast_u64::<T>(m);
        let q = T::one() - p;
        let (p0, p1) = if p == T::one() {
            (T::zero(), if m == 1 { T::one() } else { T::zero() })
        } else {
            let ln_q = q.ln();
            ((mt * ln_q).exp(), mt * p * ((mt - T::one()) * ln_q).exp())
        };
        Self::from_parts(
            Kind::Binomial { m, p },
            mt * p,
            mt * (mt - T::one()) * p * p,
            mt * (mt - T::one()) * (mt - cast(2.0)) * p * p * p,
            p0,
            p1,
            m,
        )
    }

    pub fn linear_fractional(p: T, s1: T) -> Result<Self, OffspringError> {
        if !(p > T::zero() && p < T::one()) {
            return invalid("linear_fractional", format!("p = {p} must be in (0, 1)"));
        }
        require_prob("linear_fractional", "s1", s1)?;
        if !(s1 > T::zero()) {
            return invalid("linear_fractional", "s1 must be positive");
        }
        let q = T::one() - p;
        // Conditional geometric on {1, 2, ...}: factorial moments scale by s1.
        let mean = s1 / p;
        let f2 = s1 * cast::<T>(2.0) * q / (p * p);
        let f3 = s1 * cast::<T>(6.0) * q * q / (p * p * p);
        let cap = 1 + (620.0 / -(q.to_f64().unwrap()).ln()).ceil() as u64;
        Self::from_parts(Kind::LinearFractional { p, s1 }, mean, f2, f3, T::one() - s1, s1 * p, cap)
    }

    pub fn negative_binomial(alpha: u64, p: T) -> Result<Self, OffspringError> {
        if alpha == 0 {
            return invalid("negative_binomial", "alpha must be >= 1");
        }
        if !(p > T::zero() && p < T::one()) {
            return invalid("negative_binomial", format!("p = {p} must be in (0, 1)"));
        }
        let a = cast_u64::<T>(alpha);
        let q = T::one() - p;
        let mean = a * q / p;
        let f2 = a * (a + T::one()) * q * q / (p * p);
        let f3 = a * (a + T::one()) * (a + cast(2.0)) * q * q * q / (p * p * p);
        let qf = q.to_f64().unwrap();
        let cap = alpha + ((620.0 + 40.0 * alpha as f64) / -qf.ln()).ceil() as u64;
        let p0 = (a * p.ln()).exp();
        Self::from_parts(Kind::NegativeBinomial { alpha, p }, mean, f2, f3, p0, a * p0 * q, cap)
    }

    pub fn hypergeometric(total: u64, marked: u64, draws: u64) -> Result<Self, OffspringError> {
        if total == 0 || marked > total || draws > total {
            return invalid("hypergeometric", format!("need K <= N and m <= N, got N={total} K={marked} m={draws}"));
        }
        if marked == 0 || draws == 0 {
            return invalid("hypergeometric", "mean would be zero");
        }
        let n = cast_u64::<T>(total);
        let k = cast_u64::<T>(marked);
        let m = cast_u64::<T>(draws);
        let mean = m * k / n;
        // Falling-factorial ratios; each factor is zero when its numerator runs out.
        let ff = |x: T, j: u64| -> T {
            let mut acc = T::one();
            for i in 0..j {
                acc = acc * (x - cast_u64::<T>(i)).max(T::zero());
            }
            acc
        };
        let f2 = if total >= 2 { ff(m, 2) * ff(k, 2) / ff(n, 2) } else { T::zero() };
        let f3 = if total >= 3 { ff(m, 3) * ff(k, 3) / ff(n, 3) } else { T::zero() };
        let lo = (marked + draws).saturating_sub(total);
        let ln_choose = |nn: u64, kk: u64| -> T {
            if kk > nn {
                T::neg_infinity()
            } else {
                ln_factorial::<T>(nn) - ln_factorial::<T>(kk) - ln_factorial::<T>(nn - kk)
            }
        };
        let ln_denom = ln_choose(total, draws);
        let pmf_at = |y: u64| -> T {
            if y < lo || y > marked.min(draws) {
                T::zero()
            } else {
                (ln_choose(marked, y) + ln_choose(total - marked, draws - y) - ln_denom).exp()
            }
        };
        Self::from_parts(
            Kind::Hypergeometric { total, marked, draws },
            mean,
            f2,
            f3,
            pmf_at(0),
            pmf_at(1),
            marked.min(draws),
        )
    }

    pub fn binary(p: T) -> Result<Self, OffspringError> {
        require_prob("binary", "p", p)?;
        if !(p > T::zero()) {
            return invalid("binary", "p must be positive");
        }
        let two = cast::<T>(2.0);
        Self::from_parts(Kind::Binary { p }, two * p, two * p, T::zero(), T::one() - p, T::zero(), 2)
    }

    pub fn symmetric(p: T) -> Result<Self, OffspringError> {
        require_prob("symmetric", "p", p)?;
        let half = cast::<T>(0.5);
        Self::from_parts(Kind::Symmetric { p }, T::one(), p, T::zero(), p * half, T::one() - p, 2)
    }

    pub fn kind(&self) -> &Kind<T> {
        &self.kind
    }

    /// `E[Y] = f'(1)`.
    pub fn mean(&self) -> T {
        self.mean
    }

    /// `(f'(1), f''(1), f'''(1))`.
    pub fn factorial_moments(&self) -> (T, T, T) {
        (self.mean, self.f2, self.f3)
    }

    pub fn second_factorial(&self) -> T {
        self.f2
    }

    pub fn third_factorial(&self) -> T {
        self.f3
    }

    /// Normalized second factorial moment `f''(1)/f'(1)^2`.
    pub fn nu(&self) -> T {
        self.f2 / (self.mean * self.mean)
    }

    /// Normalized variance `Var[Y]/E[Y]^2 = nu + 1/E[Y] - 1`; clamped at 0
    /// because it is one mathematically non-negative expression.
    pub fn rho(&self) -> T {
        (self.nu() + self.mean.recip() - T::one()).max(T::zero())
    }

    pub fn prob_zero(&self) -> T {
        self.p0
    }

    pub fn prob_one(&self) -> T {
        self.p1
    }

    /// True when all mass sits on {0, 1}; the shape function vanishes then.
    pub fn mass_at_most_one(&self) -> bool {
        self.f2 == T::zero()
    }

    pub fn is_dirac_one(&self) -> bool {
        self.p1 == T::one()
    }

    /// Inclusive upper bound of the (effective) support; beyond it the
    /// neglected `y^2`-weighted tail is below `TAIL_TOLERANCE`.
    pub fn support_cap(&self) -> u64 {
        self.support_cap
    }

    /// Evaluate the pgf. Errors when `s` is outside `[0, 1]`.
    pub fn pgf(&self, s: T) -> Result<T, OffspringError> {
        if !(s >= T::zero() && s <= T::one()) {
            return Err(OffspringError::OutsideUnitInterval { s: s.to_f64().unwrap_or(f64::NAN) });
        }
        Ok(T::one() - self.pgf_complement(T::one() - s))
    }

    /// `1 - f(1 - u)` for `u` in `[0, 1]`, free of cancellation.
    pub fn pgf_complement(&self, u: T) -> T {
        let one = T::one();
        match &self.kind {
            Kind::FiniteSupport(atoms) => {
                let ln_s = (-u).ln_1p(); // ln(1 - u), -inf at u = 1
                let mut acc = KahanSum::new();
                for &(v, p) in atoms {
                    if v == 0 || p == T::zero() {
                        continue;
                    }
                    let t = if u >= one { one } else { -(cast_u64::<T>(v) * ln_s).exp_m1() };
                    acc.add(p * t);
                }
                acc.value()
            }
            Kind::Poisson { lambda } => -(-*lambda * u).exp_m1(),
            Kind::Binomial { m, p } => {
                if *p == one {
                    // f(s) = s^m
                    -(cast_u64::<T>(*m) * (-u).ln_1p()).exp_m1()
                } else {
                    -(cast_u64::<T>(*m) * (-*p * u).ln_1p()).exp_m1()
                }
            }
            Kind::LinearFractional { p, s1 } => *s1 * u / (*p + (one - *p) * u),
            Kind::NegativeBinomial { alpha, p } => {
                let q = one - *p;
                -(-cast_u64::<T>(*alpha) * (q * u / *p).ln_1p()).exp_m1()
            }
            Kind::Hypergeometric { .. } => {
                let ln_s = (-u).ln_1p();
                let table = self.pmf_table();
                let mut acc = KahanSum::new();
                for (v, &p) in table.iter().enumerate().skip(1) {
                    if p == T::zero() {
                        continue;
                    }
                    let t = if u >= one { one } else { -(cast_u64::<T>(v as u64) * ln_s).exp_m1() };
                    acc.add(p * t);
                }
                acc.value()
            }
            Kind::Binary { p } => *p * u * (cast::<T>(2.0) - u),
            Kind::Symmetric { p } => u * (one - *p * u * cast(0.5)),
        }
    }

    /// Pgf on the complex unit disc (characteristic-function evaluations).
    pub fn pgf_complex(&self, z: Complex<T>) -> Complex<T> {
        let one = Complex::new(T::one(), T::zero());
        match &self.kind {
            Kind::FiniteSupport(atoms) => {
                let mut acc = Complex::new(T::zero(), T::zero());
                for &(v, p) in atoms {
                    acc = acc + complex_powu(z, v) * p;
                }
                acc
            }
            Kind::Poisson { lambda } => ((z - one) * *lambda).exp(),
            Kind::Binomial { m, p } => complex_powu(one + (z - one) * *p, *m),
            Kind::LinearFractional { p, s1 } => {
                let q = T::one() - *p;
                let cond = z * *p / (one - z * q);
                one * (T::one() - *s1) + cond * *s1
            }
            Kind::NegativeBinomial { alpha, p } => {
                let q = T::one() - *p;
                complex_powu(one * *p / (one - z * q), *alpha)
            }
            Kind::Hypergeometric { .. } => {
                // Horner over the dense table.
                let table = self.pmf_table();
                let mut acc = Complex::new(T::zero(), T::zero());
                for &p in table.iter().rev() {
                    acc = acc * z + Complex::new(p, T::zero());
                }
                acc
            }
            Kind::Binary { p } => one * (T::one() - *p) + z * z * *p,
            Kind::Symmetric { p } => {
                let half_p = *p * cast::<T>(0.5);
                one * half_p + z * (T::one() - *p) + z * z * half_p
            }
        }
    }

    /// Dense probability table over `0..=support_cap()`, built once.
    pub fn pmf_table(&self) -> &[T] {
        self.pmf_table.get_or_init(|| self.build_pmf_table())
    }

    /// `P(Y = y)`.
    pub fn pmf(&self, y: u64) -> T {
        if y > self.support_cap {
            return T::zero();
        }
        self.pmf_table()[y as usize]
    }

    fn build_pmf_table(&self) -> Vec<T> {
        let cap = self.support_cap as usize;
        match &self.kind {
            Kind::FiniteSupport(atoms) => {
                let mut t = vec![T::zero(); cap + 1];
                for &(v, p) in atoms {
                    t[v as usize] += p;
                }
                t
            }
            Kind::Poisson { lambda } => {
                let l = *lambda;
                let mode = lambda.floor().to_u64().unwrap_or(0).min(self.support_cap);
                ratio_table(cap, 0, cap, mode as usize, |y| l / cast_u64::<T>(y + 1))
            }
            Kind::Binomial { m, p } => {
                if *p == T::one() {
                    let mut t = vec![T::zero(); cap + 1];
                    t[*m as usize] = T::one();
                    return t;
                }
                let pp = *p;
                let q = T::one() - pp;
                let mm = *m;
                let mode = ((cast_u64::<T>(mm + 1) * pp).floor().to_u64().unwrap_or(0)).min(mm);
                ratio_table(cap, 0, cap, mode as usize, |y| {
                    cast_u64::<T>(mm - y) * pp / (cast_u64::<T>(y + 1) * q)
                })
            }
            Kind::LinearFractional { p, s1 } => {
                let mut t = vec![T::zero(); cap + 1];
                t[0] = T::one() - *s1;
                let q = T::one() - *p;
                let mut w = *s1 * *p;
                for y in 1..=cap {
                    t[y] = w;
                    w = w * q;
                }
                t
            }
            Kind::NegativeBinomial { alpha, p } => {
                let a = *alpha;
                let pp = *p;
                let q = T::one() - pp;
                let mode = if a <= 1 {
                    0u64
                } else {
                    ((cast_u64::<T>(a - 1) * q / pp).floor().to_u64().unwrap_or(0)).min(self.support_cap)
                };
                ratio_table(cap, 0, cap, mode as usize, |y| q * cast_u64::<T>(a + y) / cast_u64::<T>(y + 1))
            }
            Kind::Hypergeometric { total, marked, draws } => {
                let (nn, kk, mm) = (*total, *marked, *draws);
                let lo = (kk + mm).saturating_sub(nn) as usize;
                let hi = kk.min(mm) as usize;
                let mode = (((mm + 1) as u128 * (kk + 1) as u128 / (nn + 2) as u128) as usize).clamp(lo, hi);
                ratio_table(cap, lo, hi, mode, |y| {
                    let num = cast_u64::<T>(kk - y) * cast_u64::<T>(mm - y);
                    let den = cast_u64::<T>(y + 1) * cast_u64::<T>(nn - kk - mm + y + 1);
                    num / den
                })
            }
            Kind::Binary { p } => vec![T::one() - *p, T::zero(), *p],
            Kind::Symmetric { p } => {
                let half_p = *p * cast::<T>(0.5);
                vec![half_p, T::one() - *p, half_p]
            }
        }
    }

    fn suffix2_table(&self) -> &[T] {
        self.suffix2.get_or_init(|| {
            let table = self.pmf_table();
            let mut out = vec![T::zero(); table.len() + 1];
            for y in (0..table.len()).rev() {
                let x = cast_u64::<T>(y as u64);
                out[y] = out[y + 1] + x * x * table[y];
            }
            out
        })
    }

    /// `E[Y^2; Y > a]`, absolute error below `TAIL_TOLERANCE`.
    pub fn tail_second_moment(&self, a: T) -> T {
        debug_assert!(a >= T::zero());
        let first = match a.floor().to_u64() {
            Some(f) => f + 1,
            None => return T::zero(), // a beyond any support
        };
        if first > self.support_cap {
            return T::zero();
        }
        self.suffix2_table()[first as usize]
    }

    /// `E[Y; Y>=2]`, `E[Y^2; Y>=2]`, `P(Y>=1)` from cached moments.
    pub fn restricted_moments(&self) -> Result<RestrictedMoments<T>, OffspringError> {
        let p_ge1 = T::one() - self.p0;
        if !(p_ge1 > T::zero()) {
            return Err(OffspringError::ZeroMean);
        }
        Ok(RestrictedMoments {
            e_y_ge2: (self.mean - self.p1).max(T::zero()),
            e_y2_ge2: (self.f2 + self.mean - self.p1).max(T::zero()),
            p_ge1,
        })
    }

    /// `(f[0], ..., f[K])` plus the exact remainder mass.
    pub fn truncated_pmf(&self, k: usize) -> TruncatedPmf<T> {
        let table = self.pmf_table();
        let keep = table.len().min(k + 1);
        let mut probs = vec![T::zero(); k + 1];
        probs[..keep].copy_from_slice(&table[..keep]);
        let mut acc = KahanSum::new();
        for &p in &probs {
            acc.add(p);
        }
        TruncatedPmf { probs, remainder: (T::one() - acc.value()).max(T::zero()) }
    }
}

/// Build a normalized pmf table from the successor ratio `pmf(y+1)/pmf(y)`,
/// anchored at (approximately) the mode so nothing overflows.
fn ratio_table<T: Real>(cap: usize, lo: usize, hi: usize, anchor: usize, ratio: impl Fn(u64) -> T) -> Vec<T> {
    let mut t = vec![T::zero(); cap + 1];
    let anchor = anchor.clamp(lo, hi.min(cap));
    t[anchor] = T::one();
    for y in anchor..hi.min(cap) {
        let r = ratio(y as u64);
        t[y + 1] = t[y] * r;
        if t[y + 1] == T::zero() {
            break;
        }
    }
    for y in (lo..anchor).rev() {
        let r = ratio(y as u64);
        if r <= T::zero() {
            break;
        }
        t[y] = t[y + 1] / r;
        if t[y] == T::zero() {
            break;
        }
    }
    let mut total = KahanSum::new();
    for &v in &t {
        total.add(v);
    }
    let norm = total.value().recip();
    for v in t.iter_mut() {
        *v = *v * norm;
    }
    t
}

/// `z^e` by squaring.
fn complex_powu<T: Real>(z: Complex<T>, mut e: u64) -> Complex<T> {
    let mut base = z;
    let mut acc = Complex::new(T::one(), T::zero());
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * base;
        }
        base = base * base;
        e >>= 1;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    type D = OffspringDistribution<f64>;

    fn all_test_families() -> Vec<D> {
        vec![
            D::finite([(0, 0.3), (1, 0.2), (3, 0.5)]).unwrap(),
            D::poisson(1.7).unwrap(),
            D::binomial(6, 0.35).unwrap(),
            D::linear_fractional(0.3, 0.8).unwrap(),
            D::negative_binomial(3, 0.45).unwrap(),
            D::hypergeometric(50, 20, 10).unwrap(),
            D::binary(0.5).unwrap(),
            D::symmetric(0.5).unwrap(),
        ]
    }

    #[test]
    fn pgf_point_values() {
        let id = D::finite([(1, 1.0)]).unwrap();
        assert_relative_eq!(id.pgf(0.3).unwrap(), 0.3);
        let b = D::binary(0.5).unwrap();
        assert_relative_eq!(b.pgf(0.0).unwrap(), 0.5);
        let p = D::poisson(2.0).unwrap();
        assert_relative_eq!(p.pgf(1.0).unwrap(), 1.0);
    }

    #[test]
    fn pgf_rejects_out_of_range() {
        let p = D::poisson(1.0).unwrap();
        assert!(p.pgf(1.5).is_err());
        assert!(p.pgf(-0.1).is_err());
    }

    #[test]
    fn factorial_moment_closed_forms() {
        let (m, f2, f3) = D::poisson(1.3).unwrap().factorial_moments();
        assert_relative_eq!(m, 1.3);
        assert_relative_eq!(f2, 1.69);
        assert_relative_eq!(f3, 2.197);

        let (m, f2, f3) = D::binary(0.5).unwrap().factorial_moments();
        assert_relative_eq!(m, 1.0);
        assert_relative_eq!(f2, 1.0);
        assert_relative_eq!(f3, 0.0);

        let (m, f2, f3) = D::dirac(2).unwrap().factorial_moments();
        assert_relative_eq!(m, 2.0);
        assert_relative_eq!(f2, 2.0);
        assert_relative_eq!(f3, 0.0);
    }

    #[test]
    fn moments_match_table_summation() {
        for d in all_test_families() {
            let table = d.pmf_table();
            let mut m = 0.0;
            let mut f2 = 0.0;
            let mut f3 = 0.0;
            for (y, &p) in table.iter().enumerate() {
                let x = y as f64;
                m += x * p;
                f2 += x * (x - 1.0) * p;
                f3 += x * (x - 1.0) * (x - 2.0) * p;
            }
            let (cm, cf2, cf3) = d.factorial_moments();
            assert_relative_eq!(cm, m, max_relative = 1e-10);
            assert_relative_eq!(cf2, f2, max_relative = 1e-10, epsilon = 1e-12);
            assert_relative_eq!(cf3, f3, max_relative = 1e-10, epsilon = 1e-12);
        }
    }

    #[test]
    fn factorial_moments_match_numeric_pgf_derivatives() {
        // Central differences at 1 - 2h with h = 1e-4; relative error 1e-4.
        let h = 1e-4;
        for d in all_test_families() {
            let f = |s: f64| d.pgf(s).unwrap();
            let s0 = 1.0 - 2.0 * h;
            let d1 = (f(s0 + h) - f(s0 - h)) / (2.0 * h);
            let d2 = (f(s0 + h) - 2.0 * f(s0) + f(s0 - h)) / (h * h);
            let (m, f2, _) = d.factorial_moments();
            // Derivatives drift slightly away from 1; compare loosely.
            assert_relative_eq!(d1, m, max_relative = 2e-3);
            if f2 != 0.0 {
                assert_relative_eq!(d2, f2, max_relative = 5e-3);
            } else {
                assert!(d2.abs() < 1e-6);
            }
        }
    }

    #[test]
    fn complement_is_one_minus_pgf() {
        for d in all_test_families() {
            for s in [0.0, 0.1, 0.5, 0.9, 0.999, 1.0] {
                let direct = 1.0 - d.pgf(s).unwrap();
                let compl = d.pgf_complement(1.0 - s);
                assert_relative_eq!(direct, compl, epsilon = 1e-12, max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn complement_accurate_for_tiny_arguments() {
        // 1 - f(1-u) ~ m*u for u -> 0; the direct form would cancel entirely.
        for d in all_test_families() {
            let u = 1e-300;
            let e = d.pgf_complement(u);
            assert_relative_eq!(e, d.mean() * u, max_relative = 1e-10);
        }
    }

    #[test]
    fn tail_second_moment_values() {
        let b = D::binary(0.5).unwrap();
        assert_eq!(b.tail_second_moment(3.0), 0.0);
        assert_relative_eq!(b.tail_second_moment(1.0), 2.0);

        // Poisson(1): E[Y^2] = lambda + lambda^2 = 2; brute force to y = 200.
        let p = D::poisson(1.0).unwrap();
        let mut brute = 0.0;
        let mut w = (-1.0f64).exp();
        for y in 0..=200u64 {
            brute += (y * y) as f64 * w;
            w /= (y + 1) as f64;
        }
        assert_relative_eq!(p.tail_second_moment(0.0), brute, epsilon = 1e-12);
        assert_relative_eq!(p.tail_second_moment(0.0), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn tail_consistent_with_moments() {
        for d in all_test_families() {
            let (m, f2, _) = d.factorial_moments();
            // E[Y^2; Y > 0] = E[Y^2] since the y = 0 term vanishes.
            assert_relative_eq!(d.tail_second_moment(0.0), f2 + m, max_relative = 1e-10);
        }
    }

    #[test]
    fn restricted_moment_values() {
        let id = D::finite([(1, 1.0)]).unwrap();
        let r = id.restricted_moments().unwrap();
        assert_eq!((r.e_y_ge2, r.e_y2_ge2, r.p_ge1), (0.0, 0.0, 1.0));

        let b = D::binary(0.5).unwrap().restricted_moments().unwrap();
        assert_relative_eq!(b.e_y_ge2, 1.0);
        assert_relative_eq!(b.e_y2_ge2, 2.0);
        assert_relative_eq!(b.p_ge1, 0.5);

        let s = D::symmetric(0.5).unwrap().restricted_moments().unwrap();
        assert_relative_eq!(s.e_y_ge2, 0.5);
        assert_relative_eq!(s.e_y2_ge2, 1.0);
        assert_relative_eq!(s.p_ge1, 0.75);
    }

    #[test]
    fn truncated_pmf_values() {
        let b = D::binary(0.5).unwrap().truncated_pmf(5);
        assert_eq!(b.probs, vec![0.5, 0.0, 0.5, 0.0, 0.0, 0.0]);
        assert_eq!(b.remainder, 0.0);

        let p = D::poisson(1.0).unwrap().truncated_pmf(0);
        assert_relative_eq!(p.probs[0], (-1.0f64).exp());
        assert_relative_eq!(p.remainder, 1.0 - (-1.0f64).exp());

        let f = D::finite([(0, 0.3), (4, 0.7)]).unwrap().truncated_pmf(3);
        assert_eq!(f.probs, vec![0.3, 0.0, 0.0, 0.0]);
        assert_relative_eq!(f.remainder, 0.7);
    }

    #[test]
    fn finite_support_normalization_and_rejection() {
        let d = D::finite([(1, 0.5 + 3e-10), (2, 0.5)]).unwrap();
        let total: f64 = d.pmf_table().iter().sum();
        assert_relative_eq!(total, 1.0, epsilon = 1e-15);
        assert!(D::finite([(1, 0.5), (2, 0.4)]).is_err());
        assert!(D::finite([(0, 1.0)]).is_err()); // zero mean
    }

    #[test]
    fn hypergeometric_large_parameters_no_overflow() {
        let d = D::hypergeometric(1_000_000, 400_000, 50).unwrap();
        let table = d.pmf_table();
        let total: f64 = table.iter().sum();
        assert_relative_eq!(total, 1.0, epsilon = 1e-12);
        let mean: f64 = table.iter().enumerate().map(|(y, p)| y as f64 * p).sum();
        assert_relative_eq!(mean, d.mean(), max_relative = 1e-12);
    }

    #[test]
    fn pmf_tables_sum_to_one() {
        for d in all_test_families() {
            let total: f64 = d.pmf_table().iter().sum();
            assert_relative_eq!(total, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn complex_pgf_agrees_on_real_axis() {
        for d in all_test_families() {
            for s in [0.0, 0.3, 0.8, 1.0] {
                let z = Complex::new(s, 0.0);
                let via_complex = d.pgf_complex(z);
                assert_relative_eq!(via_complex.re, d.pgf(s).unwrap(), max_relative = 1e-10, epsilon = 1e-12);
                assert!(via_complex.im.abs() < 1e-12);
            }
        }
    }
}
