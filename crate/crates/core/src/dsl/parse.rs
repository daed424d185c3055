use std::collections::{BTreeSet, HashMap};

use crate::arith::{parse_rational, rat, Rational};
use crate::error::{Error, Result};

use super::{
    is_formal_var, CmpOp, Decl, Expr, Factor, Guard, Identity, IntExpr, IntRange, Space, Term,
    VarExpr, KEYWORDS,
};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(i64),
    Ratio(Rational),
    Sym(&'static str),
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(n) => format!("`{n}`"),
            Tok::Ratio(r) => format!("`{r}`"),
            Tok::Sym(s) => format!("`{s}`"),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

const SYMBOLS: &[&str] = &[
    "==", "!=", "<=", ">=", "..", "(", ")", "[", "]", ",", "+", "-", "*", "^", "@", "=", "<", ">",
];

fn lex(src: &str) -> Result<Vec<Spanned>> {
    let mut out = Vec::new();
    for (li, line) in src.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("");
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let (lnum, col) = (li + 1, i + 1);
            if c.is_whitespace() {
                i += 1;
            } else if c.is_ascii_alphabetic() || c == '_' {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                let word: String = chars[start..i].iter().collect();
                out.push(Spanned {
                    tok: Tok::Ident(word),
                    line: lnum,
                    col,
                });
            } else if c.is_ascii_digit() {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let mut ratio = false;
                if i + 1 < chars.len() && chars[i] == '/' && chars[i + 1].is_ascii_digit() {
                    ratio = true;
                    i += 1;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                let text: String = chars[start..i].iter().collect();
                let tok = if ratio {
                    Tok::Ratio(parse_rational(&text).map_err(|e| Error::Parse {
                        line: lnum,
                        col,
                        message: e.to_string(),
                    })?)
                } else {
                    Tok::Int(text.parse().map_err(|_| Error::Parse {
                        line: lnum,
                        col,
                        message: format!("integer literal `{text}` out of range"),
                    })?)
                };
                out.push(Spanned {
                    tok,
                    line: lnum,
                    col,
                });
            } else {
                let rest: String = chars[i..].iter().take(2).collect();
                let sym = SYMBOLS
                    .iter()
                    .find(|s| rest.starts_with(**s))
                    .ok_or_else(|| Error::Parse {
                        line: lnum,
                        col,
                        message: format!("unexpected character `{c}`"),
                    })?;
                out.push(Spanned {
                    tok: Tok::Sym(sym),
                    line: lnum,
                    col,
                });
                i += sym.len();
            }
        }
    }
    let (line, col) = out.last().map_or((1, 1), |s| (s.line, s.col + 1));
    out.push(Spanned {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SlotKind {
    Elem(Space),
    Int,
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    slots: HashMap<String, SlotKind>,
    bound: Vec<String>,
    windows: BTreeSet<String>,
    // inside a declaration bound, a line break ends the integer expression
    line_ends: bool,
}

/// Parses identity source text. Errors carry `line:col` and, for syntax
/// errors, the set of tokens that would have been accepted.
pub fn parse_identity(src: &str) -> Result<Identity> {
    let mut p = Parser {
        toks: lex(src)?,
        pos: 0,
        slots: HashMap::new(),
        bound: Vec::new(),
        windows: BTreeSet::new(),
        line_ends: false,
    };
    p.identity()
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err_here(&self, message: String) -> Error {
        let s = &self.toks[self.pos];
        Error::Parse {
            line: s.line,
            col: s.col,
            message,
        }
    }

    fn expected(&self, what: &[&str]) -> Error {
        self.err_here(format!(
            "expected one of {}, found {}",
            what.join(", "),
            self.peek().describe()
        ))
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(t) if *t == s)
    }

    fn is_word(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Ident(t) if t == s)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        let hit = self.is_sym(s);
        if hit {
            self.bump();
        }
        hit
    }

    fn eat_word(&mut self, s: &str) -> bool {
        let hit = self.is_word(s);
        if hit {
            self.bump();
        }
        hit
    }

    fn expect_sym(&mut self, s: &'static str) -> Result<()> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            Err(self.expected(&[&format!("`{s}`")]))
        }
    }

    fn expect_word(&mut self, s: &str) -> Result<()> {
        if self.eat_word(s) {
            Ok(())
        } else {
            Err(self.expected(&[&format!("`{s}`")]))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.bump();
                Ok(s)
            }
            _ => Err(self.expected(&[what])),
        }
    }

    fn formal_var(&mut self) -> Result<String> {
        match self.peek().clone() {
            Tok::Ident(s) if is_formal_var(&s) => {
                self.bump();
                Ok(s)
            }
            _ => Err(self.expected(&["a formal variable"])),
        }
    }

    fn declare(&mut self, name: String, kind: SlotKind) -> Result<String> {
        if is_formal_var(&name) {
            return Err(self.err_here(format!(
                "`{name}` is a formal variable name and cannot be a slot"
            )));
        }
        if self.slots.contains_key(&name) {
            return Err(self.err_here(format!("slot `{name}` declared twice")));
        }
        self.slots.insert(name.clone(), kind);
        Ok(name)
    }

    fn space(&mut self) -> Result<Space> {
        if self.eat_word("V") {
            Ok(Space::V)
        } else if self.eat_word("W") {
            Ok(Space::W)
        } else {
            Err(self.expected(&["`V`", "`W`"]))
        }
    }

    fn identity(&mut self) -> Result<Identity> {
        let mut name = None;
        let mut decls = Vec::new();
        loop {
            if self.eat_word("identity") {
                name = Some(self.ident("an identity name")?);
            } else if self.eat_word("forall") {
                decls.push(self.forall()?);
            } else if self.eat_word("let") {
                let n = self.ident("a slot name")?;
                self.expect_sym("=")?;
                let value = self.decl_bound()?;
                let n = self.declare(n, SlotKind::Int)?;
                decls.push(Decl::Let { name: n, value });
            } else if self.eat_word("window") {
                let var = self.formal_var()?;
                self.expect_word("in")?;
                let lo = self.int_expr()?;
                self.expect_sym("..")?;
                let hi = self.decl_bound()?;
                self.windows.insert(var.clone());
                decls.push(Decl::Window { var, lo, hi });
            } else {
                break;
            }
        }
        if matches!(self.peek(), Tok::Eof) {
            return Err(self.expected(&[
                "`identity`",
                "`forall`",
                "`let`",
                "`window`",
                "an expression",
            ]));
        }
        let lhs = self.expr()?;
        if !self.eat_sym("==") {
            return Err(self.expected(&["`==`", "`+`", "`-`", "`*`"]));
        }
        let rhs = self.expr()?;
        let mut guards = Vec::new();
        if self.eat_word("where") {
            loop {
                guards.push(self.guard()?);
                if !self.eat_word("and") {
                    break;
                }
            }
        }
        if !matches!(self.peek(), Tok::Eof) {
            let mut want = vec!["`+`", "`-`", "`*`", "end of input"];
            if guards.is_empty() {
                want.push("`where`");
            } else {
                want.push("`and`");
            }
            return Err(self.expected(&want));
        }
        Ok(Identity {
            name,
            decls,
            lhs,
            rhs,
            guards,
        })
    }

    fn forall(&mut self) -> Result<Decl> {
        let mut raw = vec![self.ident("a slot name")?];
        while self.eat_sym(",") {
            raw.push(self.ident("a slot name")?);
        }
        self.expect_word("in")?;
        if self.is_word("V") || self.is_word("W") {
            let space = self.space()?;
            let names = raw
                .into_iter()
                .map(|n| self.declare(n, SlotKind::Elem(space)))
                .collect::<Result<_>>()?;
            return Ok(Decl::Elements { names, space });
        }
        let range = if self.eat_word("box") {
            if raw.len() != 2 {
                return Err(self.err_here("`box` ranges bind exactly two integer slots".into()));
            }
            self.expect_sym("(")?;
            let u = self.elem_slot(Space::V)?;
            self.expect_sym(",")?;
            let v = self.elem_slot(Space::V)?;
            self.expect_sym(",")?;
            let w = self.elem_slot(Space::W)?;
            self.expect_sym(")")?;
            IntRange::Box { u, v, w }
        } else {
            let lo = self.int_expr()?;
            self.expect_sym("..")?;
            let hi = self.decl_bound()?;
            IntRange::Span(lo, hi)
        };
        let names = raw
            .into_iter()
            .map(|n| self.declare(n, SlotKind::Int))
            .collect::<Result<_>>()?;
        Ok(Decl::Integers { names, range })
    }

    fn elem_slot(&mut self, space: Space) -> Result<String> {
        let name = self.ident("an element slot")?;
        match self.slots.get(&name) {
            Some(SlotKind::Elem(s)) if *s == space => Ok(name),
            Some(_) => {
                Err(self.err_here(format!("`{name}` is not an element of {}", space.name())))
            }
            None => Err(self.err_here(format!("unbound variable `{name}`"))),
        }
    }

    fn guard(&mut self) -> Result<Guard> {
        let lhs = self.int_expr()?;
        let op = match self.peek() {
            Tok::Sym("<") => CmpOp::Lt,
            Tok::Sym("<=") => CmpOp::Le,
            Tok::Sym(">") => CmpOp::Gt,
            Tok::Sym(">=") => CmpOp::Ge,
            Tok::Sym("==") => CmpOp::Eq,
            Tok::Sym("!=") => CmpOp::Ne,
            _ => return Err(self.expected(&["`<`", "`<=`", "`>`", "`>=`", "`==`", "`!=`"])),
        };
        self.bump();
        let rhs = self.int_expr()?;
        Ok(Guard { lhs, op, rhs })
    }

    // ---- integer expressions

    /// The last integer of a declaration. It stops at the end of its line, so
    /// `window x0 in 0 .. 2` followed by a line `-w == ...` is not read as `2 - w`.
    fn decl_bound(&mut self) -> Result<IntExpr> {
        self.line_ends = true;
        let e = self.int_expr();
        self.line_ends = false;
        e
    }

    fn same_line(&self) -> bool {
        !self.line_ends || self.pos == 0 || self.toks[self.pos].line == self.toks[self.pos - 1].line
    }

    fn int_expr(&mut self) -> Result<IntExpr> {
        let mut acc = self.int_product()?;
        while self.same_line() {
            if self.eat_sym("+") {
                acc = IntExpr::Add(Box::new(acc), Box::new(self.int_product()?));
            } else if self.eat_sym("-") {
                acc = IntExpr::Sub(Box::new(acc), Box::new(self.int_product()?));
            } else {
                break;
            }
        }
        Ok(acc)
    }

    fn int_product(&mut self) -> Result<IntExpr> {
        let mut acc = self.int_unary()?;
        while self.same_line() && self.eat_sym("*") {
            acc = IntExpr::Mul(Box::new(acc), Box::new(self.int_unary()?));
        }
        Ok(acc)
    }

    fn int_unary(&mut self) -> Result<IntExpr> {
        if self.eat_sym("-") {
            if let Tok::Int(n) = *self.peek() {
                self.bump();
                return Ok(IntExpr::Lit(-n));
            }
            return Ok(IntExpr::Neg(Box::new(self.int_unary()?)));
        }
        self.int_atom()
    }

    fn int_atom(&mut self) -> Result<IntExpr> {
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                Ok(IntExpr::Lit(n))
            }
            Tok::Ratio(r) => Err(self.err_here(format!("non-integer exponent or index `{r}`"))),
            Tok::Sym("(") => {
                self.bump();
                let outer = std::mem::replace(&mut self.line_ends, false);
                let e = self.int_expr();
                self.line_ends = outer;
                let e = e?;
                self.expect_sym(")")?;
                Ok(e)
            }
            Tok::Ident(w) if w == "wt" || w == "deg" => {
                self.bump();
                self.expect_sym("(")?;
                let name = self.ident("an element slot")?;
                match self.slots.get(&name) {
                    Some(SlotKind::Elem(_)) => {}
                    Some(SlotKind::Int) => {
                        return Err(
                            self.err_here(format!("`{name}` is an integer, not an element"))
                        );
                    }
                    None => return Err(self.err_here(format!("unbound variable `{name}`"))),
                }
                self.expect_sym(")")?;
                Ok(if w == "wt" {
                    IntExpr::Wt(name)
                } else {
                    IntExpr::Deg(name)
                })
            }
            Tok::Ident(w) if w == "cutoff" => {
                self.bump();
                Ok(IntExpr::Cutoff)
            }
            Tok::Ident(w) if !KEYWORDS.contains(&w.as_str()) => match self.slots.get(&w) {
                Some(SlotKind::Int) => {
                    self.bump();
                    Ok(IntExpr::Slot(w))
                }
                Some(SlotKind::Elem(_)) => Err(self.err_here(format!(
                    "non-integer exponent or index: `{w}` is an element slot"
                ))),
                None if is_formal_var(&w) => Err(self.err_here(format!(
                    "non-integer exponent or index: `{w}` is a formal variable"
                ))),
                None => Err(self.err_here(format!("unbound variable `{w}`"))),
            },
            _ => Err(self.expected(&[
                "an integer",
                "an integer slot",
                "`wt(..)`",
                "`deg(..)`",
                "`cutoff`",
                "`(`",
            ])),
        }
    }

    fn exponent(&mut self) -> Result<IntExpr> {
        if !self.eat_sym("^") {
            return Ok(IntExpr::Lit(1));
        }
        if self.eat_sym("-") {
            return match self.int_atom()? {
                IntExpr::Lit(n) => Ok(IntExpr::Lit(-n)),
                e => Ok(IntExpr::Neg(Box::new(e))),
            };
        }
        self.int_atom()
    }

    // ---- series expressions

    fn expr(&mut self) -> Result<Expr> {
        let mut terms = Vec::new();
        let mut negative = if self.eat_sym("-") {
            true
        } else {
            self.eat_sym("+");
            false
        };
        loop {
            terms.push(Term {
                negative,
                factors: self.product()?,
            });
            if self.eat_sym("+") {
                negative = false;
            } else if self.eat_sym("-") {
                negative = true;
            } else {
                return Ok(Expr { terms });
            }
        }
    }

    fn product(&mut self) -> Result<Vec<Factor>> {
        let mut out = Vec::new();
        loop {
            let f = self.factor()?;
            let binder = matches!(f, Factor::Res { .. } | Factor::Sum { .. });
            out.push(f);
            if binder || !self.eat_sym("*") {
                return Ok(out);
            }
        }
    }

    fn var_use(&mut self, v: String) -> Result<String> {
        if !self.bound.contains(&v) && !self.windows.contains(&v) {
            return Err(self.err_here(format!(
                "free variable `{v}` is neither bound by `Res[{v}]` nor given a `window`"
            )));
        }
        Ok(v)
    }

    fn var_expr(&mut self) -> Result<VarExpr> {
        let left = self.formal_var()?;
        let left = self.var_use(left)?;
        if !self.eat_sym("+") {
            return Ok(VarExpr::Single(left));
        }
        let right = self.formal_var()?;
        let right = self.var_use(right)?;
        if !self.eat_sym("@") {
            return Err(self.err_here(format!(
                "missing expansion direction: write `{left} + {right} @{right}` or `@{left}`"
            )));
        }
        let dir = self.formal_var()?;
        if dir != left && dir != right {
            return Err(self.err_here(format!(
                "expansion direction `{dir}` is not one of `{left}`, `{right}`"
            )));
        }
        Ok(VarExpr::Sum { left, right, dir })
    }

    fn factor(&mut self) -> Result<Factor> {
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                Ok(Factor::Number(rat(n)))
            }
            Tok::Ratio(r) => {
                self.bump();
                Ok(Factor::Number(r))
            }
            Tok::Sym("(") => {
                let binom = matches!(self.peek_at(1), Tok::Ident(a) if is_formal_var(a))
                    && matches!(self.peek_at(2), Tok::Sym("+"))
                    && matches!(self.peek_at(3), Tok::Ident(b) if is_formal_var(b));
                self.bump();
                if binom {
                    let var = self.var_expr()?;
                    self.expect_sym(")")?;
                    let exp = self.exponent()?;
                    return Ok(Factor::Binom { var, exp });
                }
                let e = self.expr()?;
                self.expect_sym(")")?;
                Ok(Factor::Group(Box::new(e)))
            }
            Tok::Ident(w) => {
                self.bump();
                match w.as_str() {
                    "Res" => {
                        self.expect_sym("[")?;
                        let var = self.formal_var()?;
                        if self.bound.contains(&var) || self.windows.contains(&var) {
                            return Err(self.err_here(format!("variable `{var}` is bound twice")));
                        }
                        self.expect_sym("]")?;
                        self.bound.push(var.clone());
                        let body = self.product();
                        self.bound.pop();
                        Ok(Factor::Res { var, body: body? })
                    }
                    "Sum" => {
                        self.expect_sym("[")?;
                        let index = self.ident("an index name")?;
                        self.expect_sym("=")?;
                        let lo = self.int_expr()?;
                        self.expect_sym("..")?;
                        let hi = self.int_expr()?;
                        self.expect_sym("]")?;
                        let index = self.declare(index, SlotKind::Int)?;
                        let body = self.product();
                        self.slots.remove(&index);
                        Ok(Factor::Sum {
                            index,
                            lo,
                            hi,
                            body: body?,
                        })
                    }
                    "Y" | "Mode" => {
                        self.expect_sym("[")?;
                        let space = self.space()?;
                        self.expect_sym("]")?;
                        self.expect_sym("(")?;
                        let arg = Box::new(self.expr()?);
                        self.expect_sym(",")?;
                        let f = if w == "Y" {
                            Factor::Y {
                                space,
                                arg,
                                var: self.var_expr()?,
                            }
                        } else {
                            Factor::Mode {
                                space,
                                arg,
                                index: self.int_expr()?,
                            }
                        };
                        self.expect_sym(")")?;
                        Ok(f)
                    }
                    "scaleL0" => {
                        self.expect_sym("(")?;
                        let var = self.var_expr()?;
                        self.expect_sym(",")?;
                        let arg = Box::new(self.expr()?);
                        self.expect_sym(")")?;
                        Ok(Factor::ScaleL0 { var, arg })
                    }
                    "C" => {
                        self.expect_sym("(")?;
                        let n = self.int_expr()?;
                        self.expect_sym(",")?;
                        let k = self.int_expr()?;
                        self.expect_sym(")")?;
                        Ok(Factor::Choose(n, k))
                    }
                    "Trunc" => {
                        self.expect_sym("[")?;
                        let var = self.formal_var()?;
                        self.expect_sym("<")?;
                        let bound = self.int_expr()?;
                        self.expect_sym("]")?;
                        let inner = self.factor()?;
                        if matches!(inner, Factor::Res { .. } | Factor::Sum { .. }) {
                            return Err(
                                self.err_here("`Trunc` applies to a single scalar factor".into())
                            );
                        }
                        Ok(Factor::Trunc {
                            var,
                            bound,
                            inner: Box::new(inner),
                        })
                    }
                    _ if is_formal_var(&w) => {
                        self.pos -= 1;
                        let var = self.formal_var()?;
                        let var = self.var_use(var)?;
                        let exp = self.exponent()?;
                        Ok(Factor::Power { var, exp })
                    }
                    _ if KEYWORDS.contains(&w.as_str()) => {
                        self.pos -= 1;
                        Err(self.expected(FACTOR_STARTS))
                    }
                    _ => match self.slots.get(&w) {
                        Some(_) => Ok(Factor::Slot(w)),
                        None => {
                            self.pos -= 1;
                            Err(self.err_here(format!("unbound variable `{w}`")))
                        }
                    },
                }
            }
            _ => Err(self.expected(FACTOR_STARTS)),
        }
    }
}

const FACTOR_STARTS: &[&str] = &[
    "a number",
    "a slot",
    "a formal variable",
    "`(`",
    "`Res`",
    "`Sum`",
    "`Y`",
    "`Mode`",
    "`C`",
    "`Trunc`",
    "`scaleL0`",
];
