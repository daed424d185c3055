//! Multivariate Laurent polynomials with exact coefficients.
//!
//! Infinite formal series only ever appear truncated to a [`TruncationWindow`].
//! Two-variable binomial powers `(a + b)^n` are always expanded in nonnegative
//! powers of the *second* variable `b`.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, Zero};

use crate::arith::{binomial, format_rational, rat, Rational};
use crate::error::{Error, Result};

/// A formal variable name such as `x0` or `y2`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(pub String);

impl Var {
    pub fn new(name: impl Into<String>) -> Self {
        Var(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Var {
    fn from(s: &str) -> Self {
        Var(s.to_string())
    }
}

/// Exponent vector with finite support, kept sorted by variable name and free
/// of zero exponents.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Monomial(Vec<(Var, i64)>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn var(v: &Var, e: i64) -> Self {
        Monomial::from_pairs([(v.clone(), e)])
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (Var, i64)>) -> Self {
        let mut map: BTreeMap<Var, i64> = BTreeMap::new();
        for (v, e) in pairs {
            *map.entry(v).or_insert(0) += e;
        }
        Monomial(map.into_iter().filter(|(_, e)| *e != 0).collect())
    }

    pub fn exponent(&self, v: &Var) -> i64 {
        self.0.iter().find(|(w, _)| w == v).map_or(0, |(_, e)| *e)
    }

    pub fn pairs(&self) -> &[(Var, i64)] {
        &self.0
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        Monomial::from_pairs(self.0.iter().chain(other.0.iter()).cloned())
    }

    pub fn without(&self, v: &Var) -> Monomial {
        Monomial(self.0.iter().filter(|(w, _)| w != v).cloned().collect())
    }

    pub fn with_exponent(&self, v: &Var, e: i64) -> Monomial {
        Monomial::from_pairs(self.without(v).0.into_iter().chain([(v.clone(), e)]))
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn render(&self) -> String {
        self.0
            .iter()
            .map(|(v, e)| {
                if *e == 1 {
                    v.to_string()
                } else {
                    format!("{v}^{e}")
                }
            })
            .collect::<Vec<_>>()
            .join("*")
    }
}

/// Coefficient types a [`LaurentPoly`] can carry: exact rationals, or
/// vectors of a graded space whose arithmetic stays exact.
pub trait Coefficient: Clone + PartialEq + fmt::Debug {
    fn zero_coeff() -> Self;
    fn is_zero_coeff(&self) -> bool;
    fn add_scaled(&mut self, other: &Self, factor: &Rational);
    fn scaled(&self, factor: &Rational) -> Self;
    fn render(&self) -> String;
}

impl Coefficient for Rational {
    fn zero_coeff() -> Self {
        Zero::zero()
    }

    fn is_zero_coeff(&self) -> bool {
        Zero::is_zero(self)
    }

    fn add_scaled(&mut self, other: &Self, factor: &Rational) {
        *self += other * factor;
    }

    fn scaled(&self, factor: &Rational) -> Self {
        self * factor
    }

    fn render(&self) -> String {
        format_rational(self)
    }
}

/// Per-variable inclusive exponent bounds. Variables without an entry are
/// unbounded.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TruncationWindow {
    bounds: BTreeMap<Var, (i64, i64)>,
}

impl TruncationWindow {
    pub fn new() -> Self {
        TruncationWindow::default()
    }

    pub fn with(mut self, v: impl Into<Var>, lo: i64, hi: i64) -> Result<Self> {
        let v = v.into();
        if lo > hi {
            return Err(Error::InvalidArgument(format!(
                "window for {v}: {lo} > {hi}"
            )));
        }
        self.bounds.insert(v, (lo, hi));
        Ok(self)
    }

    pub fn upper(mut self, v: impl Into<Var>, hi: i64) -> Self {
        self.bounds.insert(v.into(), (i64::MIN / 4, hi));
        self
    }

    pub fn bounds(&self, v: &Var) -> Option<(i64, i64)> {
        self.bounds.get(v).copied()
    }

    pub fn contains(&self, m: &Monomial) -> bool {
        self.bounds.iter().all(|(v, &(lo, hi))| {
            let e = m.exponent(v);
            lo <= e && e <= hi
        })
    }

    /// Every upper bound raised by `by`.
    pub fn widened(&self, by: i64) -> Self {
        TruncationWindow {
            bounds: self
                .bounds
                .iter()
                .map(|(v, &(lo, hi))| (v.clone(), (lo.saturating_sub(by), hi + by)))
                .collect(),
        }
    }

    pub fn vars(&self) -> impl Iterator<Item = &Var> {
        self.bounds.keys()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LaurentPoly<C: Coefficient = Rational> {
    terms: BTreeMap<Monomial, C>,
}

impl<C: Coefficient> Default for LaurentPoly<C> {
    fn default() -> Self {
        LaurentPoly {
            terms: BTreeMap::new(),
        }
    }
}

impl<C: Coefficient> LaurentPoly<C> {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn term(m: Monomial, c: C) -> Self {
        let mut p = Self::zero();
        p.add_term(m, &c, &Rational::one());
        p
    }

    pub fn constant(c: C) -> Self {
        Self::term(Monomial::one(), c)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &C)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, m: &Monomial) -> C {
        self.terms.get(m).cloned().unwrap_or_else(C::zero_coeff)
    }

    /// `self += factor * c * m`.
    pub fn add_term(&mut self, m: Monomial, c: &C, factor: &Rational) {
        if factor.is_zero() || c.is_zero_coeff() {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(existing) => {
                existing.add_scaled(c, factor);
                if existing.is_zero_coeff() {
                    self.terms.remove(&m);
                }
            }
            None => {
                self.terms.insert(m, c.scaled(factor));
            }
        }
    }

    pub fn add_scaled(&mut self, other: &Self, factor: &Rational) {
        for (m, c) in &other.terms {
            self.add_term(m.clone(), c, factor);
        }
    }

    pub fn scale(&self, factor: &Rational) -> Self {
        let mut out = Self::zero();
        out.add_scaled(self, factor);
        out
    }

    /// Product with a rational Laurent polynomial.
    pub fn mul_scalar_poly(&self, s: &LaurentPoly<Rational>) -> Self {
        let mut out = Self::zero();
        for (ms, cs) in &s.terms {
            for (m, c) in &self.terms {
                out.add_term(m.mul(ms), c, cs);
            }
        }
        out
    }

    pub fn mul_monomial(&self, m: &Monomial) -> Self {
        LaurentPoly {
            terms: self
                .terms
                .iter()
                .map(|(k, c)| (k.mul(m), c.clone()))
                .collect(),
        }
    }

    /// Coefficient of `v^{-1}`, as a Laurent polynomial in the other variables.
    pub fn residue(&self, v: &Var) -> Self {
        self.coefficient_in(v, -1)
    }

    /// Coefficient of `v^e`.
    pub fn coefficient_in(&self, v: &Var, e: i64) -> Self {
        let mut out = Self::zero();
        for (m, c) in &self.terms {
            if m.exponent(v) == e {
                out.add_term(m.without(v), c, &Rational::one());
            }
        }
        out
    }

    pub fn derivative(&self, v: &Var) -> Self {
        let mut out = Self::zero();
        for (m, c) in &self.terms {
            let e = m.exponent(v);
            if e != 0 {
                out.add_term(m.with_exponent(v, e - 1), c, &rat(e));
            }
        }
        out
    }

    /// Substitutes `v := coeff * target`. Negative powers of `v` need an
    /// invertible coefficient, so a zero coefficient is rejected.
    pub fn substitute_monomial(
        &self,
        v: &Var,
        coeff: &Rational,
        target: &Monomial,
    ) -> Result<Self> {
        if coeff.is_zero() {
            return Err(Error::SubstitutionByZero(v.to_string()));
        }
        let mut out = Self::zero();
        for (m, c) in &self.terms {
            let e = m.exponent(v);
            let mut factor = Rational::one();
            let base = if e >= 0 {
                coeff.clone()
            } else {
                Rational::one() / coeff
            };
            for _ in 0..e.unsigned_abs() {
                factor *= &base;
            }
            let mut mono = m.without(v);
            for (w, k) in target.pairs() {
                mono = mono.mul(&Monomial::var(w, k * e));
            }
            out.add_term(mono, c, &factor);
        }
        Ok(out)
    }

    pub fn truncate(&self, window: &TruncationWindow) -> Self {
        LaurentPoly {
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| window.contains(m))
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect(),
        }
    }

    pub fn map_coefficients<D: Coefficient>(&self, mut f: impl FnMut(&C) -> D) -> LaurentPoly<D> {
        let mut out = LaurentPoly::zero();
        for (m, c) in &self.terms {
            out.add_term(m.clone(), &f(c), &Rational::one());
        }
        out
    }

    pub fn exponent_range(&self, v: &Var) -> Option<(i64, i64)> {
        let mut it = self.terms.keys().map(|m| m.exponent(v));
        let first = it.next()?;
        Some(it.fold((first, first), |(lo, hi), e| (lo.min(e), hi.max(e))))
    }

    /// Canonical text: terms in monomial order, `coefficient*monomial`.
    pub fn render(&self) -> String {
        if self.terms.is_empty() {
            return "0".to_string();
        }
        self.terms
            .iter()
            .map(|(m, c)| {
                let cs = c.render();
                if m.is_one() {
                    cs
                } else {
                    format!("({cs})*{}", m.render())
                }
            })
            .collect::<Vec<_>>()
            .join(" + ")
    }
}

impl LaurentPoly<Rational> {
    pub fn one() -> Self {
        Self::constant(Rational::one())
    }

    pub fn var_power(v: &Var, e: i64) -> Self {
        Self::term(Monomial::var(v, e), Rational::one())
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (Monomial, Rational)>) -> Self {
        let mut p = Self::zero();
        for (m, c) in terms {
            p.add_term(m, &c, &Rational::one());
        }
        p
    }
}

impl<C: Coefficient> Add for &LaurentPoly<C> {
    type Output = LaurentPoly<C>;
    fn add(self, rhs: Self) -> LaurentPoly<C> {
        let mut out = self.clone();
        out.add_scaled(rhs, &Rational::one());
        out
    }
}

impl<C: Coefficient> Sub for &LaurentPoly<C> {
    type Output = LaurentPoly<C>;
    fn sub(self, rhs: Self) -> LaurentPoly<C> {
        let mut out = self.clone();
        out.add_scaled(rhs, &(-Rational::one()));
        out
    }
}

impl<C: Coefficient> Neg for &LaurentPoly<C> {
    type Output = LaurentPoly<C>;
    fn neg(self) -> LaurentPoly<C> {
        self.scale(&(-Rational::one()))
    }
}

impl Mul for &LaurentPoly<Rational> {
    type Output = LaurentPoly<Rational>;
    fn mul(self, rhs: Self) -> LaurentPoly<Rational> {
        self.mul_scalar_poly(rhs)
    }
}

/// `(first + second)^n`, expanded in nonnegative powers of `second`.
///
/// For `n >= 0` the sum is finite and the window is ignored. For `n < 0` the
/// series is infinite and the window must bound either the power of `second`
/// from above or the power of `first` from below.
pub fn binomial_expand(
    first: &Var,
    second: &Var,
    n: i64,
    window: &TruncationWindow,
) -> Result<LaurentPoly> {
    let top = if n >= 0 {
        n
    } else {
        let from_second = window.bounds(second).map(|(_, hi)| hi);
        let from_first = window.bounds(first).map(|(lo, _)| n.saturating_sub(lo));
        match (from_second, from_first) {
            (Some(a), Some(b)) => a.min(b),
            (Some(a), None) => a,
            (None, Some(b)) if b < i64::MAX / 8 => b,
            _ => {
                return Err(Error::WindowTooSmall {
                    var: second.to_string(),
                    detail: format!("({first}+{second})^{n} needs an upper bound on {second}"),
                })
            }
        }
    };
    Ok(LaurentPoly::from_terms((0..=top).map(|i| {
        (
            Monomial::from_pairs([(first.clone(), n - i), (second.clone(), i)]),
            binomial(n, i),
        )
    })))
}

/// `(x + 1)^n = sum_i C(n, i) x^i`, truncated to the window for negative `n`.
pub fn binomial_expand_unit(x: &Var, n: i64, window: &TruncationWindow) -> Result<LaurentPoly> {
    let top = if n >= 0 {
        n
    } else {
        window
            .bounds(x)
            .map(|(_, hi)| hi)
            .ok_or_else(|| Error::WindowTooSmall {
                var: x.to_string(),
                detail: format!("({x}+1)^{n} needs an upper bound on {x}"),
            })?
    };
    Ok(LaurentPoly::from_terms(
        (0..=top).map(|i| (Monomial::var(x, i), binomial(n, i))),
    ))
}

/// `sum_{i=0}^{k-q-1} C(p-l, i) x0^{p-l-i} x2^i`: the first `k - q` terms of
/// `(x0 + x2)^{p-l}`.
pub fn truncating_polynomial(p: i64, l: i64, k: i64, q: i64) -> Result<LaurentPoly> {
    if k - q <= 0 {
        return Err(Error::InvalidArgument(format!(
            "k - q must be positive, got {}",
            k - q
        )));
    }
    let x0 = Var::from("x0");
    let x2 = Var::from("x2");
    Ok(LaurentPoly::from_terms((0..k - q).map(|i| {
        (
            Monomial::from_pairs([(x0.clone(), p - l - i), (x2.clone(), i)]),
            binomial(p - l, i),
        )
    })))
}
