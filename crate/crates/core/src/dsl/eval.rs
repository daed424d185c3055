//! Exact evaluation of identities.
//!
//! A side is compiled into a graph of operators and asked for individual
//! coefficients. Each node carries a support: per-variable exponent bounds
//! and the constant `degree - total exponent`, which is well defined because
//! every slot is homogeneous. Those bounds turn every inner sum into a finite
//! enumeration. When a sum cannot be bounded the evaluation fails with
//! `WindowTooSmall` instead of truncating.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_traits::{One, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::arith::{binomial, rat, Rational};
use crate::error::{Error, Result};
use crate::series::{LaurentPoly, Monomial, Var};
use crate::voa::{index_box, BasisRef, CandidateModule, GradedVector, VertexAlgebra};

use super::{Decl, Expr, Factor, Identity, IntExpr, IntRange, Space, VarExpr};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotValue {
    Int(i64),
    Elem(Space, BasisRef),
}

/// Slot values in declaration order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Assignment(pub Vec<(String, SlotValue)>);

impl Assignment {
    pub fn get(&self, name: &str) -> Option<SlotValue> {
        self.0
            .iter()
            .rev()
            .find(|(n, _)| n == name)
            .map(|(_, v)| *v)
    }

    pub fn with(&self, name: &str, v: SlotValue) -> Assignment {
        let mut out = self.clone();
        out.0.push((name.to_string(), v));
        out
    }

    pub fn render(&self, va: &dyn VertexAlgebra, m: &dyn CandidateModule) -> String {
        self.0
            .iter()
            .map(|(n, v)| match v {
                SlotValue::Int(i) => format!("{n}={i}"),
                SlotValue::Elem(Space::V, b) => format!("{n}={}", va.label(*b)),
                SlotValue::Elem(Space::W, b) => format!("{n}={}", m.label(*b)),
            })
            .collect::<Vec<_>>()
            .join(", ")
    }
}

struct Ctx<'a> {
    va: &'a dyn VertexAlgebra,
    m: &'a dyn CandidateModule,
    cutoff: i64,
}

fn int(e: &IntExpr, a: &Assignment, cutoff: i64) -> Result<i64> {
    let grade = |s: &str| match a.get(s) {
        Some(SlotValue::Elem(_, b)) => Ok(b.0 as i64),
        _ => Err(Error::InvalidArgument(format!(
            "`{s}` is not an element slot"
        ))),
    };
    Ok(match e {
        IntExpr::Lit(n) => *n,
        IntExpr::Slot(s) => match a.get(s) {
            Some(SlotValue::Int(i)) => i,
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "`{s}` has no integer value"
                )))
            }
        },
        IntExpr::Wt(s) | IntExpr::Deg(s) => grade(s)?,
        IntExpr::Cutoff => cutoff,
        IntExpr::Neg(x) => -int(x, a, cutoff)?,
        IntExpr::Add(x, y) => int(x, a, cutoff)? + int(y, a, cutoff)?,
        IntExpr::Sub(x, y) => int(x, a, cutoff)? - int(y, a, cutoff)?,
        IntExpr::Mul(x, y) => int(x, a, cutoff)? * int(y, a, cutoff)?,
    })
}

// ---------------------------------------------------------------- graph

type Range = (Option<i64>, Option<i64>);

const POINT: Range = (Some(0), Some(0));
const MAX_SPAN: i64 = 10_000;

fn add_opt(a: Option<i64>, b: Option<i64>) -> Option<i64> {
    Some(a? + b?)
}

fn add_range(a: Range, b: Range) -> Range {
    (add_opt(a.0, b.0), add_opt(a.1, b.1))
}

fn tighter(a: Option<i64>, b: Option<i64>, f: fn(i64, i64) -> i64) -> Option<i64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(f(x, y)),
        (x, None) => x,
        (None, y) => y,
    }
}

#[derive(Debug, Clone)]
struct Support {
    ranges: BTreeMap<Var, Range>,
    /// `degree - total exponent`, when the node is homogeneous.
    c: Option<i64>,
}

impl Support {
    fn range(&self, v: &Var) -> Range {
        self.ranges.get(v).copied().unwrap_or(POINT)
    }

    fn contains(&self, m: &Monomial) -> bool {
        let inside =
            |r: Range, e: i64| r.0.is_none_or(|l| e >= l) && r.1.is_none_or(|h| e <= h);
        m.pairs().iter().all(|(v, e)| inside(self.range(v), *e))
            && self
                .ranges
                .iter()
                .all(|(v, r)| m.exponent(v) != 0 || inside(*r, 0))
    }

    fn max_total(&self) -> Option<i64> {
        self.ranges.values().try_fold(0, |acc, r| Some(acc + r.1?))
    }

    fn merged_vars<'a>(&'a self, other: &'a Support) -> BTreeSet<&'a Var> {
        self.ranges.keys().chain(other.ranges.keys()).collect()
    }
}

#[derive(Debug, Clone)]
enum Kind {
    Zero,
    Elem(GradedVector),
    Poly(LaurentPoly, usize),
    /// `(x + y)^n` with `n < 0`, expanded in nonnegative powers of `y`.
    Binom {
        x: Var,
        y: Var,
        n: i64,
        inner: usize,
    },
    /// `Y(arg, x)` or, with `y` present, `Y(arg, x + y)` expanded in powers of `y`.
    Op {
        space: Space,
        arg: usize,
        x: Var,
        y: Option<Var>,
        inner: usize,
    },
    Mode {
        space: Space,
        arg: usize,
        n: i64,
        inner: usize,
    },
    Res(Var, usize),
    Add(Vec<usize>),
}

struct Node {
    kind: Kind,
    space: Option<Space>,
    sup: Option<Support>,
}

#[derive(Default)]
struct Graph {
    nodes: Vec<Node>,
}

impl Graph {
    fn sup(&self, id: usize) -> Option<&Support> {
        self.nodes[id].sup.as_ref()
    }

    fn space(&self, id: usize) -> Option<Space> {
        self.nodes[id].space
    }

    fn push(&mut self, kind: Kind, space: Option<Space>) -> usize {
        let sup = self.support(&kind);
        self.nodes.push(Node { kind, space, sup });
        self.nodes.len() - 1
    }

    fn support(&self, kind: &Kind) -> Option<Support> {
        match kind {
            Kind::Zero => None,
            Kind::Elem(v) => (!v.is_zero()).then(|| Support {
                ranges: BTreeMap::new(),
                c: v.homogeneous_grade().map(i64::from),
            }),
            Kind::Poly(p, inner) => {
                let s = self.sup(*inner)?;
                if p.is_zero() {
                    return None;
                }
                let mut vars: BTreeSet<Var> = s.ranges.keys().cloned().collect();
                for (m, _) in p.terms() {
                    vars.extend(m.pairs().iter().map(|(v, _)| v.clone()));
                }
                let ranges = vars
                    .into_iter()
                    .map(|v| {
                        let es: Vec<i64> = p.terms().map(|(m, _)| m.exponent(&v)).collect();
                        let shift = (es.iter().min().copied(), es.iter().max().copied());
                        let r = add_range(s.range(&v), shift);
                        (v, r)
                    })
                    .collect();
                let totals: BTreeSet<i64> = p
                    .terms()
                    .map(|(m, _)| m.pairs().iter().map(|(_, e)| e).sum())
                    .collect();
                let c = if totals.len() == 1 {
                    add_opt(s.c, totals.first().map(|d| -d))
                } else {
                    None
                };
                Some(Support { ranges, c })
            }
            Kind::Binom { x, y, n, inner } => {
                let s = self.sup(*inner)?;
                let mut ranges = s.ranges.clone();
                ranges.insert(y.clone(), (s.range(y).0, None));
                ranges.insert(x.clone(), (None, s.range(x).1.map(|h| h + n)));
                Some(Support {
                    ranges,
                    c: s.c.map(|c| c - n),
                })
            }
            Kind::Op {
                arg, x, y, inner, ..
            } => {
                let (a, s) = (self.sup(*arg)?, self.sup(*inner)?);
                let mut ranges: BTreeMap<Var, Range> = a
                    .merged_vars(s)
                    .into_iter()
                    .map(|v| (v.clone(), add_range(a.range(v), s.range(v))))
                    .collect();
                match y {
                    None => {
                        // -n-1 >= -(wt a + deg b)
                        let drop =
                            add_opt(add_opt(a.max_total(), a.c), add_opt(s.max_total(), s.c));
                        let lo = add_opt(add_range(a.range(x), s.range(x)).0, drop.map(|d| -d));
                        ranges.insert(x.clone(), (lo, None));
                    }
                    Some(y) => {
                        ranges.insert(y.clone(), (add_opt(a.range(y).0, s.range(y).0), None));
                        ranges.insert(x.clone(), (None, None));
                    }
                }
                Some(Support {
                    ranges,
                    c: add_opt(a.c, s.c),
                })
            }
            Kind::Mode { arg, n, inner, .. } => {
                let (a, s) = (self.sup(*arg)?, self.sup(*inner)?);
                let ranges = a
                    .merged_vars(s)
                    .into_iter()
                    .map(|v| (v.clone(), add_range(a.range(v), s.range(v))))
                    .collect();
                Some(Support {
                    ranges,
                    c: add_opt(a.c, s.c).map(|c| c - n - 1),
                })
            }
            Kind::Res(x, inner) => {
                let s = self.sup(*inner)?;
                let mut ranges = s.ranges.clone();
                ranges.remove(x);
                Some(Support {
                    ranges,
                    c: s.c.map(|c| c - 1),
                })
            }
            Kind::Add(items) => {
                let sups: Vec<&Support> = items.iter().filter_map(|i| self.sup(*i)).collect();
                let first = sups.first()?;
                let vars: BTreeSet<&Var> = sups.iter().flat_map(|s| s.ranges.keys()).collect();
                let ranges = vars
                    .into_iter()
                    .map(|v| {
                        let rs: Vec<Range> = sups.iter().map(|s| s.range(v)).collect();
                        let lo = rs.iter().try_fold(i64::MAX, |acc, r| Some(acc.min(r.0?)));
                        let hi = rs.iter().try_fold(i64::MIN, |acc, r| Some(acc.max(r.1?)));
                        (v.clone(), (lo, hi))
                    })
                    .collect();
                let c = if sups.iter().all(|s| s.c.is_some() && s.c == first.c) {
                    first.c
                } else {
                    None
                };
                Some(Support { ranges, c })
            }
        }
    }
}

// ---------------------------------------------------------------- elaboration

enum Scalar {
    Poly(LaurentPoly),
    Binom { x: Var, y: Var, n: i64 },
}

fn binom_poly(x: &Var, y: &Var, n: i64, terms: i64) -> LaurentPoly {
    LaurentPoly::from_terms((0..terms).map(|i| {
        (
            Monomial::from_pairs([(x.clone(), n - i), (y.clone(), i)]),
            binomial(n, i),
        )
    }))
}

fn split(var: &VarExpr) -> (Var, Option<Var>) {
    match var {
        VarExpr::Single(x) => (Var::from(x.as_str()), None),
        VarExpr::Sum { left, right, dir } => {
            let other = if dir == left { right } else { left };
            (Var::from(other.as_str()), Some(Var::from(dir.as_str())))
        }
    }
}

/// `X^k` for `k >= 0`.
fn var_power(var: &VarExpr, k: i64) -> LaurentPoly {
    match split(var) {
        (x, None) => LaurentPoly::var_power(&x, k),
        (x, Some(y)) => binom_poly(&x, &y, k, k + 1),
    }
}

struct Elab<'a> {
    ctx: &'a Ctx<'a>,
    g: Graph,
}

impl<'a> Elab<'a> {
    fn expr(&mut self, e: &Expr, a: &Assignment) -> Result<usize> {
        let mut items = Vec::new();
        for t in &e.terms {
            let mut id = self.product(&t.factors, a)?;
            if t.negative {
                let sp = self.g.space(id);
                id = self
                    .g
                    .push(Kind::Poly(LaurentPoly::constant(rat(-1)), id), sp);
            }
            items.push(id);
        }
        if items.len() == 1 {
            return Ok(items[0]);
        }
        let space = self.common_space(&items)?;
        Ok(self.g.push(Kind::Add(items), space))
    }

    fn common_space(&self, items: &[usize]) -> Result<Option<Space>> {
        let spaces: BTreeSet<Space> = items.iter().filter_map(|i| self.g.space(*i)).collect();
        match spaces.len() {
            0 => Ok(None),
            1 => Ok(spaces.into_iter().next()),
            _ => Err(Error::InvalidArgument(
                "a sum mixes elements of V and W".into(),
            )),
        }
    }

    fn product(&mut self, fs: &[Factor], a: &Assignment) -> Result<usize> {
        let (last, init) = fs
            .split_last()
            .ok_or_else(|| Error::InvalidArgument("empty product".into()))?;
        let mut node = match last {
            Factor::Res { var, body } => {
                let inner = self.product(body, a)?;
                let sp = self.g.space(inner);
                self.g.push(Kind::Res(Var::from(var.as_str()), inner), sp)
            }
            Factor::Sum {
                index,
                lo,
                hi,
                body,
            } => {
                let (lo, hi) = (int(lo, a, self.ctx.cutoff)?, int(hi, a, self.ctx.cutoff)?);
                let mut items = Vec::new();
                for i in lo..=hi {
                    items.push(self.product(body, &a.with(index, SlotValue::Int(i)))?);
                }
                let sp = self.common_space(&items)?;
                self.g.push(Kind::Add(items), sp)
            }
            f => self.element(f, a)?,
        };
        for f in init.iter().rev() {
            node = self.apply(f, node, a)?;
        }
        Ok(node)
    }

    fn element(&mut self, f: &Factor, a: &Assignment) -> Result<usize> {
        match f {
            Factor::Slot(s) => match a.get(s) {
                Some(SlotValue::Elem(sp, b)) => Ok(self
                    .g
                    .push(Kind::Elem(GradedVector::basis(b.0, b.1)), Some(sp))),
                _ => Err(Error::InvalidArgument(format!(
                    "product ends with the integer `{s}`, not an element"
                ))),
            },
            Factor::Number(r) if r.is_zero() => Ok(self.g.push(Kind::Zero, None)),
            Factor::Number(r) => Ok(self
                .g
                .push(Kind::Elem(self.ctx.va.vacuum().scaled(r)), Some(Space::V))),
            Factor::Group(e) => self.expr(e, a),
            Factor::ScaleL0 { var, arg } => {
                let inner = self.expr(arg, a)?;
                if self
                    .g
                    .sup(inner)
                    .is_some_and(|s| s.ranges.values().any(|r| *r != POINT))
                {
                    return Err(Error::InvalidArgument(
                        "scaleL0 needs an argument without formal variables".into(),
                    ));
                }
                let sp = self.g.space(inner);
                let v = Eval::new(self.ctx, &self.g).coeff(inner, &Monomial::one())?;
                let mut items = Vec::new();
                for (k, part) in v.homogeneous_parts() {
                    let e = self.g.push(Kind::Elem(part), sp);
                    items.push(self.g.push(Kind::Poly(var_power(var, k as i64), e), sp));
                }
                Ok(self.g.push(Kind::Add(items), sp))
            }
            Factor::Y { .. } | Factor::Mode { .. } => Err(Error::InvalidArgument(format!(
                "`{}` has nothing to act on",
                f.render()
            ))),
            _ => Err(Error::InvalidArgument(format!(
                "product ends with the scalar `{}`",
                f.render()
            ))),
        }
    }

    fn scalar(&self, f: &Factor, a: &Assignment) -> Result<Scalar> {
        let cut = self.ctx.cutoff;
        Ok(match f {
            Factor::Number(r) => Scalar::Poly(LaurentPoly::constant(r.clone())),
            Factor::Slot(s) => match a.get(s) {
                Some(SlotValue::Int(i)) => Scalar::Poly(LaurentPoly::constant(rat(i))),
                _ => {
                    return Err(Error::InvalidArgument(format!(
                        "element `{s}` must be the rightmost factor of its product"
                    )))
                }
            },
            Factor::Power { var, exp } => Scalar::Poly(LaurentPoly::var_power(
                &Var::from(var.as_str()),
                int(exp, a, cut)?,
            )),
            Factor::Choose(n, k) => Scalar::Poly(LaurentPoly::constant(binomial(
                int(n, a, cut)?,
                int(k, a, cut)?,
            ))),
            Factor::Binom { var, exp } => {
                let n = int(exp, a, cut)?;
                match split(var) {
                    (x, None) => Scalar::Poly(LaurentPoly::var_power(&x, n)),
                    (x, Some(y)) if n >= 0 => Scalar::Poly(binom_poly(&x, &y, n, n + 1)),
                    (x, Some(y)) => Scalar::Binom { x, y, n },
                }
            }
            Factor::Trunc { var, bound, inner } => {
                let v = Var::from(var.as_str());
                let b = int(bound, a, cut)?;
                match self.scalar(inner, a)? {
                    Scalar::Poly(p) => Scalar::Poly(LaurentPoly::from_terms(
                        p.terms()
                            .filter(|(m, _)| m.exponent(&v) < b)
                            .map(|(m, c)| (m.clone(), c.clone())),
                    )),
                    Scalar::Binom { x, y, n } if y == v => {
                        Scalar::Poly(binom_poly(&x, &y, n, b.max(0)))
                    }
                    Scalar::Binom { .. } => {
                        return Err(Error::WindowTooSmall {
                            var: var.clone(),
                            detail: "truncation leaves an infinite series".into(),
                        })
                    }
                }
            }
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "`{}` is not a scalar factor",
                    f.render()
                )))
            }
        })
    }

    fn apply(&mut self, f: &Factor, node: usize, a: &Assignment) -> Result<usize> {
        let sp = self.g.space(node);
        match f {
            Factor::Y { space, arg, var } => {
                let arg = self.arg(arg, a)?;
                self.check_space(*space, sp, f)?;
                let (x, y) = split(var);
                Ok(self.g.push(
                    Kind::Op {
                        space: *space,
                        arg,
                        x,
                        y,
                        inner: node,
                    },
                    Some(*space),
                ))
            }
            Factor::Mode { space, arg, index } => {
                let arg = self.arg(arg, a)?;
                self.check_space(*space, sp, f)?;
                let n = int(index, a, self.ctx.cutoff)?;
                Ok(self.g.push(
                    Kind::Mode {
                        space: *space,
                        arg,
                        n,
                        inner: node,
                    },
                    Some(*space),
                ))
            }
            Factor::Group(_) | Factor::ScaleL0 { .. } | Factor::Res { .. } | Factor::Sum { .. } => {
                Err(Error::InvalidArgument(format!(
                    "`{}` must be the rightmost factor of its product",
                    f.render()
                )))
            }
            _ => match self.scalar(f, a)? {
                Scalar::Poly(p) => Ok(self.g.push(Kind::Poly(p, node), sp)),
                Scalar::Binom { x, y, n } => Ok(self.g.push(
                    Kind::Binom {
                        x,
                        y,
                        n,
                        inner: node,
                    },
                    sp,
                )),
            },
        }
    }

    fn arg(&mut self, e: &Expr, a: &Assignment) -> Result<usize> {
        let id = self.expr(e, a)?;
        if self.g.space(id) == Some(Space::W) {
            return Err(Error::InvalidArgument(format!(
                "operator argument `{}` lies in W, not V",
                e.render()
            )));
        }
        Ok(id)
    }

    fn check_space(&self, op: Space, inner: Option<Space>, f: &Factor) -> Result<()> {
        match inner {
            Some(s) if s != op => Err(Error::InvalidArgument(format!(
                "`{}` acts on {} but is applied to an element of {}",
                f.render(),
                op.name(),
                s.name()
            ))),
            _ => Ok(()),
        }
    }
}

// ---------------------------------------------------------------- evaluation

fn inverse(m: &Monomial) -> Monomial {
    Monomial::from_pairs(m.pairs().iter().map(|(v, e)| (v.clone(), -e)))
}

fn total(m: &Monomial) -> i64 {
    m.pairs().iter().map(|(_, e)| e).sum()
}

fn span(var: &Var, lo: Option<i64>, hi: Option<i64>, what: &str) -> Result<(i64, i64)> {
    match (lo, hi) {
        (Some(l), Some(h)) if h - l <= MAX_SPAN => Ok((l, h)),
        (Some(_), Some(_)) => Err(Error::WindowTooSmall {
            var: var.to_string(),
            detail: format!("{what} is too long"),
        }),
        _ => Err(Error::WindowTooSmall {
            var: var.to_string(),
            detail: format!("{what} is unbounded"),
        }),
    }
}

struct Eval<'g> {
    ctx: &'g Ctx<'g>,
    g: &'g Graph,
    memo: HashMap<(usize, Monomial), GradedVector>,
}

impl<'g> Eval<'g> {
    fn new(ctx: &'g Ctx<'g>, g: &'g Graph) -> Self {
        Eval {
            ctx,
            g,
            memo: HashMap::new(),
        }
    }

    fn act(
        &self,
        space: Space,
        a: &GradedVector,
        n: i64,
        b: &GradedVector,
    ) -> Result<GradedVector> {
        match space {
            Space::V => self.ctx.va.component(a, n, b),
            Space::W => self.ctx.m.act(a, n, b),
        }
    }

    fn coeff(&mut self, id: usize, mu: &Monomial) -> Result<GradedVector> {
        match self.g.sup(id) {
            Some(s) if s.contains(mu) => {}
            _ => return Ok(GradedVector::zero()),
        }
        if let Some(v) = self.memo.get(&(id, mu.clone())) {
            return Ok(v.clone());
        }
        let v = self.compute(id, mu)?;
        self.memo.insert((id, mu.clone()), v.clone());
        Ok(v)
    }

    fn compute(&mut self, id: usize, mu: &Monomial) -> Result<GradedVector> {
        let g = self.g;
        let mut out = GradedVector::zero();
        match &g.nodes[id].kind {
            Kind::Zero => {}
            Kind::Elem(v) => {
                if mu.is_one() {
                    out = v.clone();
                }
            }
            Kind::Poly(p, inner) => {
                for (m, c) in p.terms() {
                    let b = self.coeff(*inner, &mu.mul(&inverse(m)))?;
                    out.axpy(c, &b);
                }
            }
            Kind::Binom { x, y, n, inner } => {
                let s = g.sup(*inner).expect("support of a nonzero node");
                let (rx, ry) = (s.range(x), s.range(y));
                let (ex, ey) = (mu.exponent(x), mu.exponent(y));
                let hi = tighter(ry.0.map(|l| ey - l), rx.1.map(|h| h - ex + n), i64::min);
                let lo = rx.0.map_or(0, |l| (l - ex + n).max(0));
                let (_, hi) = span(y, Some(lo), hi, "binomial expansion")?;
                for i in lo..=hi {
                    let beta = mu.mul(&Monomial::from_pairs([(x.clone(), i - n), (y.clone(), -i)]));
                    let b = self.coeff(*inner, &beta)?;
                    out.axpy(&binomial(*n, i), &b);
                }
            }
            Kind::Op {
                space,
                arg,
                x,
                y,
                inner,
            } => {
                let (sa, s) = match (g.sup(*arg), g.sup(*inner)) {
                    (Some(a), Some(b)) => (a, b),
                    _ => return Ok(out),
                };
                let xvars: Vec<&Var> = std::iter::once(x).chain(y.iter()).collect();
                for alpha in arg_points(sa, s, mu, &xvars)? {
                    let a = self.coeff(*arg, &alpha)?;
                    if a.is_zero() {
                        continue;
                    }
                    let nu = mu.mul(&inverse(&alpha));
                    let (rx, ex) = (s.range(x), nu.exponent(x));
                    let deg_lo = s.c.map(|c| -c - total(&nu) - 1);
                    let i_hi = match y {
                        None => 0,
                        Some(y) => {
                            span(
                                y,
                                Some(0),
                                s.range(y).0.map(|l| nu.exponent(y) - l),
                                "expansion of Y",
                            )?
                            .1
                        }
                    };
                    for i in 0..=i_hi {
                        let lo = tighter(rx.0.map(|l| l - ex - 1 - i), deg_lo, i64::max);
                        let (lo, hi) = span(x, lo, rx.1.map(|h| h - ex - 1 - i), "mode sum of Y")?;
                        for n in lo..=hi {
                            let mut shift = vec![(x.clone(), n + 1 + i)];
                            let mut c = Rational::one();
                            if let Some(y) = y {
                                shift.push((y.clone(), -i));
                                c = binomial(-n - 1, i);
                                if c.is_zero() {
                                    continue;
                                }
                            }
                            let beta = nu.mul(&Monomial::from_pairs(shift));
                            let b = self.coeff(*inner, &beta)?;
                            if b.is_zero() {
                                continue;
                            }
                            out.axpy(&c, &self.act(*space, &a, n, &b)?);
                        }
                    }
                }
            }
            Kind::Mode {
                space,
                arg,
                n,
                inner,
            } => {
                let (sa, s) = match (g.sup(*arg), g.sup(*inner)) {
                    (Some(a), Some(b)) => (a, b),
                    _ => return Ok(out),
                };
                for alpha in arg_points(sa, s, mu, &[])? {
                    let a = self.coeff(*arg, &alpha)?;
                    if a.is_zero() {
                        continue;
                    }
                    let b = self.coeff(*inner, &mu.mul(&inverse(&alpha)))?;
                    if !b.is_zero() {
                        out = out.add(&self.act(*space, &a, *n, &b)?);
                    }
                }
            }
            Kind::Res(x, inner) => {
                out = self.coeff(*inner, &mu.mul(&Monomial::var(x, -1)))?;
            }
            Kind::Add(items) => {
                for i in items {
                    out = out.add(&self.coeff(*i, mu)?);
                }
            }
        }
        Ok(out)
    }
}

/// Exponent vectors of an operator argument that can contribute to the
/// coefficient of `mu`.
fn arg_points(
    arg: &Support,
    inner: &Support,
    mu: &Monomial,
    xvars: &[&Var],
) -> Result<Vec<Monomial>> {
    let mut pts = vec![Monomial::one()];
    for (v, r) in &arg.ranges {
        let (mut lo, mut hi) = *r;
        if !xvars.contains(&v) {
            let (ilo, ihi) = inner.range(v);
            let e = mu.exponent(v);
            lo = tighter(lo, ihi.map(|h| e - h), i64::max);
            hi = tighter(hi, ilo.map(|l| e - l), i64::min);
        }
        let (lo, hi) = span(v, lo, hi, "sum over an operator argument")?;
        pts = pts
            .iter()
            .flat_map(|p| (lo..=hi).map(move |e| p.mul(&Monomial::var(v, e))))
            .collect();
    }
    Ok(pts)
}

// ---------------------------------------------------------------- identities

fn windows(id: &Identity, a: &Assignment, cutoff: i64) -> Result<BTreeMap<Var, (i64, i64)>> {
    let mut out = BTreeMap::new();
    for d in &id.decls {
        if let Decl::Window { var, lo, hi } = d {
            out.insert(
                Var::from(var.as_str()),
                (int(lo, a, cutoff)?, int(hi, a, cutoff)?),
            );
        }
    }
    Ok(out)
}

type Sides = (LaurentPoly<GradedVector>, LaurentPoly<GradedVector>);

fn eval_sides(id: &Identity, ctx: &Ctx<'_>, a: &Assignment) -> Result<(Sides, Option<Space>)> {
    let mut el = Elab {
        ctx,
        g: Graph::default(),
    };
    let lhs = el.expr(&id.lhs, a)?;
    let rhs = el.expr(&id.rhs, a)?;
    if let (Some(s), Some(t)) = (el.g.space(lhs), el.g.space(rhs)) {
        if s != t {
            return Err(Error::InvalidArgument(
                "the two sides lie in different spaces".into(),
            ));
        }
    }
    let space = el.g.space(lhs).or(el.g.space(rhs));
    let g = el.g;
    let win = windows(id, a, ctx.cutoff)?;
    let free: BTreeSet<Var> = [lhs, rhs]
        .iter()
        .filter_map(|i| g.sup(*i))
        .flat_map(|s| s.ranges.keys().cloned())
        .collect();
    let mut monos = vec![Monomial::one()];
    for v in &free {
        let (lo, hi) = *win.get(v).ok_or_else(|| Error::WindowTooSmall {
            var: v.to_string(),
            detail: "free variable without a window".into(),
        })?;
        monos = monos
            .iter()
            .flat_map(|m| (lo..=hi).map(move |e| m.mul(&Monomial::var(v, e))))
            .collect();
    }
    let mut ev = Eval::new(ctx, &g);
    let (mut l, mut r) = (LaurentPoly::zero(), LaurentPoly::zero());
    for m in monos {
        l.add_term(m.clone(), &ev.coeff(lhs, &m)?, &Rational::one());
        let rc = ev.coeff(rhs, &m)?;
        r.add_term(m, &rc, &Rational::one());
    }
    Ok(((l, r), space))
}

/// Both sides of an identity under one assignment, on the declared windows
/// of its free variables.
pub fn evaluate_sides(
    id: &Identity,
    va: &dyn VertexAlgebra,
    m: &dyn CandidateModule,
    a: &Assignment,
    cutoff: i64,
) -> Result<Sides> {
    Ok(eval_sides(id, &Ctx { va, m, cutoff }, a)?.0)
}

/// `lhs - rhs` under one assignment.
pub fn evaluate(
    id: &Identity,
    va: &dyn VertexAlgebra,
    m: &dyn CandidateModule,
    a: &Assignment,
    cutoff: i64,
) -> Result<LaurentPoly<GradedVector>> {
    let (l, r) = evaluate_sides(id, va, m, a, cutoff)?;
    let mut d = l;
    d.add_scaled(&r, &rat(-1));
    Ok(d)
}

/// Which slot values a check visits.
#[derive(Debug, Clone, serde::Serialize)]
pub struct CheckPlan {
    /// Element slots of `V` range over basis vectors of weight `<= weight`.
    pub weight: u32,
    /// Element slots of `W` range over basis vectors of degree `<= degree`.
    pub degree: u32,
    /// Degree bound for `box(..)` ranges, also the value of `cutoff`.
    pub box_degree: u32,
    /// Seeded random subsample `(count, seed)`; `None` checks everything.
    pub sample: Option<(usize, u64)>,
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct Witness {
    pub sample: usize,
    pub assignment: String,
    pub monomial: String,
    pub lhs: String,
    pub rhs: String,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct CheckReport {
    pub identity: String,
    pub algebra: String,
    pub module: String,
    pub plan: CheckPlan,
    pub samples: usize,
    pub passed: usize,
    pub failed: usize,
    pub holds: bool,
    /// True when every assignment in the declared ranges was checked.
    pub exhaustive: bool,
    /// One character per sample in enumeration order: `.` holds, `F` fails.
    pub verdicts: String,
    pub first_failure: Option<Witness>,
    pub digest: String,
}

impl CheckReport {
    pub fn render_text(&self) -> String {
        let mut s = format!(
            "{}: {} on {} over {} ({} samples, {} failed, {})\n  plan: weight<={} degree<={} box<={}\n  digest {}\n",
            self.identity,
            if self.holds { "holds" } else { "FAILS" },
            self.module,
            self.algebra,
            self.samples,
            self.failed,
            if self.exhaustive { "exhaustive" } else { "subsampled" },
            self.plan.weight,
            self.plan.degree,
            self.plan.box_degree,
            self.digest
        );
        if let Some(w) = &self.first_failure {
            s.push_str(&format!(
                "  witness #{}: {}\n    at {}: lhs = {}, rhs = {}\n",
                w.sample, w.assignment, w.monomial, w.lhs, w.rhs
            ));
        }
        s
    }
}

fn assignments(
    id: &Identity,
    va: &dyn VertexAlgebra,
    m: &dyn CandidateModule,
    plan: &CheckPlan,
) -> Result<Vec<Assignment>> {
    let cutoff = plan.box_degree as i64;
    let mut level = vec![Assignment::default()];
    for d in &id.decls {
        let mut next = Vec::new();
        for a in &level {
            match d {
                Decl::Elements { names, space } => {
                    let basis = match space {
                        Space::V => va.basis_refs(plan.weight),
                        Space::W => m.basis_refs(plan.degree),
                    };
                    let mut partial = vec![a.clone()];
                    for n in names {
                        partial = partial
                            .iter()
                            .flat_map(|p| {
                                basis.iter().map(|b| p.with(n, SlotValue::Elem(*space, *b)))
                            })
                            .collect();
                    }
                    next.extend(partial);
                }
                Decl::Integers {
                    names,
                    range: IntRange::Span(lo, hi),
                } => {
                    let (lo, hi) = (int(lo, a, cutoff)?, int(hi, a, cutoff)?);
                    let mut partial = vec![a.clone()];
                    for n in names {
                        partial = partial
                            .iter()
                            .flat_map(|p| (lo..=hi).map(|i| p.with(n, SlotValue::Int(i))))
                            .collect();
                    }
                    next.extend(partial);
                }
                Decl::Integers {
                    names,
                    range: IntRange::Box { u, v, w },
                } => {
                    let g = |s: &str| int(&IntExpr::Wt(s.to_string()), a, cutoff);
                    for (p, q) in index_box(g(u)?, g(v)?, g(w)?, cutoff) {
                        next.push(
                            a.with(&names[0], SlotValue::Int(p))
                                .with(&names[1], SlotValue::Int(q)),
                        );
                    }
                }
                Decl::Let { name, value } => {
                    next.push(a.with(name, SlotValue::Int(int(value, a, cutoff)?)))
                }
                Decl::Window { .. } => next.push(a.clone()),
            }
        }
        level = next;
    }
    let mut out = Vec::new();
    for a in level {
        let mut keep = true;
        for g in &id.guards {
            keep &=
                g.op.holds(int(&g.lhs, &a, cutoff)?, int(&g.rhs, &a, cutoff)?);
        }
        if keep {
            out.push(a);
        }
    }
    Ok(out)
}

/// Checks an identity on every assignment of its declared ranges, or on a
/// seeded subsample of them. Evaluation errors are returned, not counted as
/// failures.
pub fn check(
    id: &Identity,
    va: &dyn VertexAlgebra,
    m: &dyn CandidateModule,
    plan: &CheckPlan,
) -> Result<CheckReport> {
    let mut all = assignments(id, va, m, plan)?;
    let mut exhaustive = true;
    if let Some((count, seed)) = plan.sample {
        if count < all.len() {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut picked = rand::seq::index::sample(&mut rng, all.len(), count).into_vec();
            picked.sort_unstable();
            all = picked.into_iter().map(|i| all[i].clone()).collect();
            exhaustive = false;
        }
    }
    let ctx = Ctx {
        va,
        m,
        cutoff: plan.box_degree as i64,
    };
    let results: Vec<Result<Option<(String, String, String)>>> = all
        .par_iter()
        .map(|a| {
            let ((l, r), space) = eval_sides(id, &ctx, a)?;
            if l == r {
                return Ok(None);
            }
            let mut d = l.clone();
            d.add_scaled(&r, &rat(-1));
            let (mono, _) = d.terms().next().expect("nonzero difference");
            let show = |v: &GradedVector| match space {
                Some(Space::V) => va.render(v),
                _ => m.render(v),
            };
            Ok(Some((
                mono.render(),
                show(&l.coefficient(mono)),
                show(&r.coefficient(mono)),
            )))
        })
        .collect();
    let mut verdicts = String::new();
    let mut first_failure = None;
    let mut failed = 0;
    for (i, (res, a)) in results.into_iter().zip(&all).enumerate() {
        match res? {
            None => verdicts.push('.'),
            Some((monomial, lhs, rhs)) => {
                verdicts.push('F');
                failed += 1;
                if first_failure.is_none() {
                    first_failure = Some(Witness {
                        sample: i,
                        assignment: a.render(va, m),
                        monomial: if monomial.is_empty() {
                            "1".into()
                        } else {
                            monomial
                        },
                        lhs,
                        rhs,
                    });
                }
            }
        }
    }
    let name = id.name.clone().unwrap_or_else(|| "identity".into());
    let mut h = Sha256::new();
    h.update(name.as_bytes());
    h.update(va.name().as_bytes());
    h.update(m.name().as_bytes());
    h.update(verdicts.as_bytes());
    if let Some(w) = &first_failure {
        h.update(format!("{w:?}").as_bytes());
    }
    Ok(CheckReport {
        identity: name,
        algebra: va.name(),
        module: m.name(),
        plan: plan.clone(),
        samples: verdicts.len(),
        passed: verdicts.len() - failed,
        failed,
        holds: failed == 0,
        exhaustive,
        verdicts,
        first_failure,
        digest: hex::encode(h.finalize()),
    })
}
