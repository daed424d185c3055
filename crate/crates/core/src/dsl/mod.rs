//! A small language for residue identities.
//!
//! An identity file declares slots, then states `lhs == rhs` with optional
//! `where` guards:
//!
//! ```text
//! # vanishing of the x2-residue on the product side
//! identity product_vanishing
//! forall u, v in V
//! forall w in W
//! let l = wt(u) + deg(w)
//! let k = wt(v) + deg(w)
//! forall q in k .. k + 2
//! window x0 in -6 .. 2
//! Res[x2] x2^q * (x0 + x2 @x2)^l * Y[W](u, x0 + x2 @x2) * Y[W](v, x2) * w == 0
//!   where q >= k
//! ```
//!
//! Products are operator compositions read right to left: every factor acts
//! on everything to its right, and the rightmost factor is the element acted
//! on. `Res[x]` and `Sum[i = a .. b]` bind the rest of the product.
//! `(x + y @y)^n` is expanded in nonnegative powers of `y`. Formal variables
//! are the identifiers `x`, `x0`, `x1`, …; every other identifier is a slot
//! declared by `forall` or `let`.

mod eval;
mod parse;

use std::fmt::Write as _;

use crate::arith::{format_rational, Rational};

pub use eval::{
    check, evaluate, evaluate_sides, Assignment, CheckPlan, CheckReport, SlotValue, Witness,
};
pub use parse::parse_identity;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize)]
pub enum Space {
    V,
    W,
}

impl Space {
    fn name(self) -> &'static str {
        match self {
            Space::V => "V",
            Space::W => "W",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IntExpr {
    Lit(i64),
    Slot(String),
    Wt(String),
    Deg(String),
    /// The degree bound of the sampling plan.
    Cutoff,
    Neg(Box<IntExpr>),
    Add(Box<IntExpr>, Box<IntExpr>),
    Sub(Box<IntExpr>, Box<IntExpr>),
    Mul(Box<IntExpr>, Box<IntExpr>),
}

/// The argument of a vertex operator or of `scaleL0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VarExpr {
    Single(String),
    /// `left + right`, expanded in nonnegative powers of `dir`.
    Sum {
        left: String,
        right: String,
        dir: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Factor {
    Number(Rational),
    Slot(String),
    Power {
        var: String,
        exp: IntExpr,
    },
    Binom {
        var: VarExpr,
        exp: IntExpr,
    },
    Choose(IntExpr, IntExpr),
    /// Keeps the terms of `inner` whose `var` exponent is below `bound`.
    Trunc {
        var: String,
        bound: IntExpr,
        inner: Box<Factor>,
    },
    Y {
        space: Space,
        arg: Box<Expr>,
        var: VarExpr,
    },
    Mode {
        space: Space,
        arg: Box<Expr>,
        index: IntExpr,
    },
    ScaleL0 {
        var: VarExpr,
        arg: Box<Expr>,
    },
    Group(Box<Expr>),
    Res {
        var: String,
        body: Vec<Factor>,
    },
    Sum {
        index: String,
        lo: IntExpr,
        hi: IntExpr,
        body: Vec<Factor>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Term {
    pub negative: bool,
    pub factors: Vec<Factor>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Expr {
    pub terms: Vec<Term>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IntRange {
    Span(IntExpr, IntExpr),
    /// `(p, q)` with both `v_q w` and `u_p v_q w` of degree within the cutoff.
    Box {
        u: String,
        v: String,
        w: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Decl {
    Elements {
        names: Vec<String>,
        space: Space,
    },
    Integers {
        names: Vec<String>,
        range: IntRange,
    },
    Let {
        name: String,
        value: IntExpr,
    },
    Window {
        var: String,
        lo: IntExpr,
        hi: IntExpr,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl CmpOp {
    fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
        }
    }

    fn holds(self, a: i64, b: i64) -> bool {
        match self {
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Gt => a > b,
            CmpOp::Ge => a >= b,
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Guard {
    pub lhs: IntExpr,
    pub op: CmpOp,
    pub rhs: IntExpr,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Identity {
    pub name: Option<String>,
    pub decls: Vec<Decl>,
    pub lhs: Expr,
    pub rhs: Expr,
    pub guards: Vec<Guard>,
}

pub(crate) fn is_formal_var(s: &str) -> bool {
    s.starts_with('x') && s[1..].chars().all(|c| c.is_ascii_digit())
}

pub(crate) const KEYWORDS: &[&str] = &[
    "identity", "forall", "let", "window", "in", "where", "and", "box", "Res", "Sum", "Y", "Mode",
    "C", "Trunc", "scaleL0", "wt", "deg", "cutoff", "V", "W",
];

// Precedence: 1 for sums, 2 for products, 3 for atoms and negation.
fn int_prec(e: &IntExpr) -> u8 {
    match e {
        IntExpr::Add(..) | IntExpr::Sub(..) => 1,
        IntExpr::Mul(..) => 2,
        IntExpr::Lit(n) if *n < 0 => 2,
        _ => 3,
    }
}

fn render_int_at(e: &IntExpr, min: u8, out: &mut String) {
    if int_prec(e) < min {
        out.push('(');
        render_int_at(e, 0, out);
        out.push(')');
        return;
    }
    match e {
        IntExpr::Lit(n) => {
            let _ = write!(out, "{n}");
        }
        IntExpr::Slot(s) => out.push_str(s),
        IntExpr::Wt(s) => {
            let _ = write!(out, "wt({s})");
        }
        IntExpr::Deg(s) => {
            let _ = write!(out, "deg({s})");
        }
        IntExpr::Cutoff => out.push_str("cutoff"),
        IntExpr::Neg(a) => {
            out.push('-');
            render_int_at(a, 3, out);
        }
        IntExpr::Add(a, b) | IntExpr::Sub(a, b) => {
            render_int_at(a, 1, out);
            out.push_str(if matches!(e, IntExpr::Add(..)) {
                " + "
            } else {
                " - "
            });
            render_int_at(b, 2, out);
        }
        IntExpr::Mul(a, b) => {
            render_int_at(a, 2, out);
            out.push_str(" * ");
            render_int_at(b, 3, out);
        }
    }
}

impl IntExpr {
    pub fn render(&self) -> String {
        let mut s = String::new();
        render_int_at(self, 0, &mut s);
        s
    }

    fn render_exponent(&self) -> String {
        match self {
            IntExpr::Lit(n) if *n >= 0 => n.to_string(),
            IntExpr::Slot(_) | IntExpr::Wt(_) | IntExpr::Deg(_) | IntExpr::Cutoff => self.render(),
            _ => format!("({})", self.render()),
        }
    }
}

impl VarExpr {
    pub fn render(&self) -> String {
        match self {
            VarExpr::Single(x) => x.clone(),
            VarExpr::Sum { left, right, dir } => format!("{left} + {right} @{dir}"),
        }
    }
}

impl Factor {
    pub fn render(&self) -> String {
        match self {
            Factor::Number(r) => format_rational(r),
            Factor::Slot(s) => s.clone(),
            Factor::Power { var, exp } => match exp {
                IntExpr::Lit(1) => var.clone(),
                _ => format!("{var}^{}", exp.render_exponent()),
            },
            Factor::Binom { var, exp } => match exp {
                IntExpr::Lit(1) => format!("({})", var.render()),
                _ => format!("({})^{}", var.render(), exp.render_exponent()),
            },
            Factor::Choose(n, k) => format!("C({}, {})", n.render(), k.render()),
            Factor::Trunc { var, bound, inner } => {
                format!("Trunc[{var} < {}] {}", bound.render(), inner.render())
            }
            Factor::Y { space, arg, var } => {
                format!("Y[{}]({}, {})", space.name(), arg.render(), var.render())
            }
            Factor::Mode { space, arg, index } => {
                format!(
                    "Mode[{}]({}, {})",
                    space.name(),
                    arg.render(),
                    index.render()
                )
            }
            Factor::ScaleL0 { var, arg } => format!("scaleL0({}, {})", var.render(), arg.render()),
            Factor::Group(e) => format!("({})", e.render()),
            Factor::Res { var, body } => format!("Res[{var}] {}", render_factors(body)),
            Factor::Sum {
                index,
                lo,
                hi,
                body,
            } => {
                format!(
                    "Sum[{index} = {} .. {}] {}",
                    lo.render(),
                    hi.render(),
                    render_factors(body)
                )
            }
        }
    }
}

fn render_factors(fs: &[Factor]) -> String {
    fs.iter()
        .map(Factor::render)
        .collect::<Vec<_>>()
        .join(" * ")
}

impl Expr {
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (i, t) in self.terms.iter().enumerate() {
            match (i, t.negative) {
                (0, true) => out.push('-'),
                (0, false) => {}
                (_, true) => out.push_str(" - "),
                (_, false) => out.push_str(" + "),
            }
            out.push_str(&render_factors(&t.factors));
        }
        out
    }
}

impl Identity {
    /// Canonical source text; parsing it gives back an equal identity.
    pub fn render(&self) -> String {
        let mut out = String::new();
        if let Some(n) = &self.name {
            let _ = writeln!(out, "identity {n}");
        }
        for d in &self.decls {
            match d {
                Decl::Elements { names, space } => {
                    let _ = writeln!(out, "forall {} in {}", names.join(", "), space.name());
                }
                Decl::Integers { names, range } => {
                    let r = match range {
                        IntRange::Span(a, b) => format!("{} .. {}", a.render(), b.render()),
                        IntRange::Box { u, v, w } => format!("box({u}, {v}, {w})"),
                    };
                    let _ = writeln!(out, "forall {} in {r}", names.join(", "));
                }
                Decl::Let { name, value } => {
                    let _ = writeln!(out, "let {name} = {}", value.render());
                }
                Decl::Window { var, lo, hi } => {
                    let _ = writeln!(out, "window {var} in {} .. {}", lo.render(), hi.render());
                }
            }
        }
        let _ = write!(out, "{} == {}", self.lhs.render(), self.rhs.render());
        for (i, g) in self.guards.iter().enumerate() {
            out.push_str(if i == 0 { "\n  where " } else { " and " });
            let _ = write!(
                out,
                "{} {} {}",
                g.lhs.render(),
                g.op.symbol(),
                g.rhs.render()
            );
        }
        out.push('\n');
        out
    }
}
