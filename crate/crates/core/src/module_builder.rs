//! The induced module `S(M)` of an `A(V)`-module `M`, built from generators
//! and relations at finite truncation.
//!
//! Normal forms. Rewriting the leftmost pair of a word with the associativity
//! relation reduces every word of `T(V[t, t^-1]) ⊗ M` to a combination of
//! words of length at most one, so `S₁(M)` is a quotient of the space `L`
//! with basis
//!
//! * degree 0: a basis `w0` of `M`;
//! * degree `d > 0`: `x_[d] w0 = x(wt x - d - 1) w0` for `x` a basis element
//!   of `V` and `w0` a basis element of `M`.
//!
//! A letter `a(s)` acts on `L` by that rewriting (see [`Builder::act_word`]);
//! a word of degree 0 is replaced by `ρ(x) w0`. Words of negative degree are
//! never created. The remaining relations of `S₁(M)` are the failures of that
//! action to satisfy the associativity relation ([`Builder::defect`]), and
//! `S(M)` further divides by the `𝓙` generators ([`Builder::j_generator`]).
//!
//! Truncation. Representatives are words with `wt x <= window`; relations
//! are generated among words with `wt x <= window + slack` and only their
//! intersection with the window is used, so nothing is approximated. Columns
//! are ordered heaviest first, which keeps light words as representatives.
//! The slack grows in steps of 2 until two consecutive slacks give the same
//! dimensions at every degree.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, RwLock};

use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::arith::{binomial, format_rational, Rational};
use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, EchelonBasis, SparseVec};
use crate::voa::{BasisRef, CandidateModule, GradedVector, VertexAlgebra};
use crate::zhu::{top_level, zero_mode, AVModule};

/// A length-at-most-one word: `x_[d] w0` for `d > 0`, or `w0 ∈ M` for `d = 0`
/// (then `x` is the vacuum).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Word {
    pub degree: u32,
    pub x: BasisRef,
    pub w0: usize,
}

impl Word {
    pub fn top(w0: usize) -> Self {
        Word {
            degree: 0,
            x: (0, 0),
            w0,
        }
    }

    /// Mode index `m` of the letter `x(m)`.
    pub fn mode(&self) -> i64 {
        self.x.0 as i64 - self.degree as i64 - 1
    }

    pub fn weight(&self) -> u32 {
        self.x.0
    }
}

/// A general word `u_1(m_1) ... u_k(m_k) w0` of the free module.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FreeWord {
    pub letters: Vec<(BasisRef, i64)>,
    pub tail: usize,
}

impl FreeWord {
    /// `sum (wt u_i - m_i - 1)`.
    pub fn degree(&self) -> i64 {
        self.letters.iter().map(|(u, m)| u.0 as i64 - m - 1).sum()
    }
}

/// Sparse combination of words.
pub type WordVec = BTreeMap<Word, Rational>;

fn wv_add(into: &mut WordVec, w: Word, c: &Rational) {
    if c.is_zero() {
        return;
    }
    let slot = into.entry(w).or_insert_with(Rational::zero);
    *slot += c;
    if slot.is_zero() {
        into.remove(&w);
    }
}

fn wv_axpy(into: &mut WordVec, c: &Rational, v: &WordVec) {
    if c.is_zero() {
        return;
    }
    for (w, x) in v {
        wv_add(into, *w, &(c * x));
    }
}

/// `None` when a computation needs words beyond the weight limit.
pub type Bounded<T> = Option<T>;

/// Rewriting engine for one `A(V)`-module and one weight limit.
pub struct Builder {
    va: Arc<dyn VertexAlgebra>,
    m: Arc<AVModule>,
    weight_limit: u32,
    memo: RwLock<HashMap<(BasisRef, i64, Word), Bounded<WordVec>>>,
}

impl Builder {
    pub fn new(m: Arc<AVModule>, weight_limit: u32) -> Self {
        Builder {
            va: m.algebra().clone(),
            m,
            weight_limit,
            memo: RwLock::new(HashMap::new()),
        }
    }

    pub fn weight_limit(&self) -> u32 {
        self.weight_limit
    }

    pub fn module(&self) -> &Arc<AVModule> {
        &self.m
    }

    fn rho_word(&self, x: BasisRef, w0: usize, out: &mut WordVec, c: &Rational) -> Result<()> {
        let r = self.m.rho_basis(x)?;
        for row in 0..self.m.dim() {
            let e = r.get(row, w0);
            if !e.is_zero() {
                wv_add(out, Word::top(row), &(c * e));
            }
        }
        Ok(())
    }

    /// Adds `c · y(n) w0` in normal form. `false` if a word is too heavy.
    fn place(
        &self,
        y: &GradedVector,
        n: i64,
        w0: usize,
        out: &mut WordVec,
        c: &Rational,
    ) -> Result<bool> {
        for (b, yc) in y.entries() {
            let t = b.0 as i64 - n - 1;
            if t < 0 {
                continue;
            }
            let coeff = c * yc;
            if t == 0 {
                self.rho_word(*b, w0, out, &coeff)?;
            } else {
                if b.0 > self.weight_limit {
                    return Ok(false);
                }
                wv_add(
                    out,
                    Word {
                        degree: t as u32,
                        x: *b,
                        w0,
                    },
                    &coeff,
                );
            }
        }
        Ok(true)
    }

    /// `a(s)` applied to a normal-form word.
    ///
    /// On `w0 ∈ M` this is the word `a(s) w0` (or `ρ(a) w0` in degree 0). On
    /// `x(r) w0` of degree `e` it is
    /// `sum_{i=0}^{e} sum_{j=0}^{wt a} C(s - wt a, i) C(wt a, j)
    /// (a_{s-wt a-i+j} x)(r + wt a + i - j) w0`.
    pub fn act_word(&self, a: BasisRef, s: i64, word: Word) -> Result<Bounded<WordVec>> {
        let wa = a.0 as i64;
        let e = word.degree as i64;
        let t = wa - s - 1 + e;
        if t < 0 {
            return Ok(Some(WordVec::new()));
        }
        let key = (a, s, word);
        if let Some(hit) = self.memo.read().unwrap().get(&key) {
            return Ok(hit.clone());
        }
        let mut out = WordVec::new();
        let av = GradedVector::basis(a.0, a.1);
        let ok = if e == 0 {
            self.place(&av, s, word.w0, &mut out, &Rational::one())?
        } else {
            let xv = GradedVector::basis(word.x.0, word.x.1);
            let r = word.mode();
            let mut ok = true;
            'outer: for i in 0..=e {
                let ci = binomial(s - wa, i);
                if ci.is_zero() {
                    continue;
                }
                for j in 0..=wa {
                    let k = s - wa - i + j;
                    let wt_y = wa + word.x.0 as i64 - k - 1;
                    if wt_y < 0 {
                        continue;
                    }
                    if wt_y > self.weight_limit as i64 && t > 0 {
                        ok = false;
                        break 'outer;
                    }
                    let y = self.va.component(&av, k, &xv)?;
                    if y.is_zero() {
                        continue;
                    }
                    let c = &ci * binomial(wa, j);
                    if !self.place(&y, r + wa + i - j, word.w0, &mut out, &c)? {
                        ok = false;
                        break 'outer;
                    }
                }
            }
            ok
        };
        let result = ok.then_some(out);
        self.memo.write().unwrap().insert(key, result.clone());
        Ok(result)
    }

    pub fn act(&self, a: BasisRef, s: i64, v: &WordVec) -> Result<Bounded<WordVec>> {
        let mut out = WordVec::new();
        for (w, c) in v {
            match self.act_word(a, s, *w)? {
                Some(r) => wv_axpy(&mut out, c, &r),
                None => return Ok(None),
            }
        }
        Ok(Some(out))
    }

    /// `y(n)` for a vector `y` of `V`.
    pub fn act_vector(&self, y: &GradedVector, n: i64, v: &WordVec) -> Result<Bounded<WordVec>> {
        let mut out = WordVec::new();
        for (b, c) in y.entries() {
            match self.act(*b, n, v)? {
                Some(r) => wv_axpy(&mut out, c, &r),
                None => return Ok(None),
            }
        }
        Ok(Some(out))
    }

    /// Rewrites a general word letter by letter, innermost first.
    pub fn normal_form(&self, w: &FreeWord) -> Result<Bounded<WordVec>> {
        let mut v = WordVec::from([(Word::top(w.tail), Rational::one())]);
        for &(u, m) in w.letters.iter().rev() {
            match self.act(u, m, &v)? {
                Some(r) => v = r,
                None => return Ok(None),
            }
        }
        Ok(Some(v))
    }

    /// `u(p) v(q) ℓ - sum_{i,j} C(p-wt u-e, i) C(wt u+e, j)
    /// (u_{p-wt u-e-i+j} v)(q+wt u+e+i-j) ℓ` over `0 <= i < wt v + e - q`,
    /// `0 <= j <= wt u + e`, for a word `ℓ` of degree `e`.
    pub fn defect(
        &self,
        u: BasisRef,
        p: i64,
        v: BasisRef,
        q: i64,
        ell: Word,
    ) -> Result<Bounded<WordVec>> {
        let (wu, wv) = (u.0 as i64, v.0 as i64);
        let e = ell.degree as i64;
        let start = WordVec::from([(ell, Rational::one())]);
        let Some(inner) = self.act(v, q, &start)? else {
            return Ok(None);
        };
        let Some(mut out) = self.act(u, p, &inner)? else {
            return Ok(None);
        };
        let uv = GradedVector::basis(u.0, u.1);
        let vv = GradedVector::basis(v.0, v.1);
        let l = wu + e;
        for i in 0..(wv + e - q) {
            let ci = binomial(p - l, i);
            if ci.is_zero() {
                continue;
            }
            for j in 0..=l {
                let k = p - l - i + j;
                if wu + wv - k - 1 > self.weight_limit as i64 {
                    return Ok(None);
                }
                let y = self.va.component(&uv, k, &vv)?;
                if y.is_zero() {
                    continue;
                }
                let Some(r) = self.act_vector(&y, q + l + i - j, &start)? else {
                    return Ok(None);
                };
                wv_axpy(&mut out, &-(&ci * binomial(l, j)), &r);
            }
        }
        Ok(Some(out))
    }

    /// `sum_{j=0}^{wt u+e} C(wt u+e, j) (u_{j+m} v)(K + wt u + wt v - j - m - 2) ℓ`
    /// for a word `ℓ` of degree `e`; a generator of `𝓙` when `m <= K - 2e - 2`.
    pub fn j_generator(
        &self,
        u: BasisRef,
        v: BasisRef,
        ell: Word,
        big_k: i64,
        m: i64,
    ) -> Result<Bounded<WordVec>> {
        let (wu, wv) = (u.0 as i64, v.0 as i64);
        let top = wu + ell.degree as i64;
        let start = WordVec::from([(ell, Rational::one())]);
        let uv = GradedVector::basis(u.0, u.1);
        let vv = GradedVector::basis(v.0, v.1);
        let mut out = WordVec::new();
        for j in 0..=top {
            if wu + wv - (j + m) - 1 > self.weight_limit as i64 {
                return Ok(None);
            }
            let y = self.va.component(&uv, j + m, &vv)?;
            if y.is_zero() {
                continue;
            }
            let Some(r) = self.act_vector(&y, big_k + wu + wv - j - m - 2, &start)? else {
                return Ok(None);
            };
            wv_axpy(&mut out, &binomial(top, j), &r);
        }
        Ok(Some(out))
    }
}

/// Which quotient to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Family {
    /// `S₁(M)`: associativity relations only.
    S1,
    /// `S(M)`: associativity relations and `𝓙`.
    S,
}

/// Cutoffs for [`build_s1`] and [`build_s`].
#[derive(Debug, Clone, Serialize)]
pub struct BuildConfig {
    /// Largest degree `D`.
    pub degree: u32,
    /// Representative window `N_V`: words `x_[d] w0` with `wt x <= N_V`.
    pub window: u32,
    /// Largest slack tried by the stabilization protocol.
    pub slack_ceiling: u32,
    /// Largest degree of the word a relation is applied to. Relations on
    /// heavier sources are sound but were never needed in practice.
    pub source_degree: u32,
}

impl BuildConfig {
    pub fn new(degree: u32) -> Self {
        BuildConfig {
            degree,
            window: degree.max(1),
            slack_ceiling: 12,
            source_degree: 0,
        }
    }
}

/// One slack of the stabilization protocol.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ModuleStep {
    pub slack: u32,
    pub weight_limit: u32,
    pub dims: Vec<usize>,
    pub relations: usize,
    pub skipped: usize,
}

/// Relations per degree as echelon bases over the words of that degree with
/// `wt x <= limit`, columns ordered heaviest first.
pub struct RelationSpace {
    pub limit: u32,
    pub columns: Vec<Vec<Word>>,
    index: Vec<HashMap<Word, usize>>,
    pub echelon: Vec<EchelonBasis>,
    pub generated: usize,
    pub skipped: usize,
}

impl RelationSpace {
    fn new(va: &dyn VertexAlgebra, m_dim: usize, degree: u32, limit: u32) -> Self {
        let mut xs = va.basis_refs(limit);
        xs.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        let mut columns = Vec::new();
        for d in 0..=degree {
            let cols: Vec<Word> = if d == 0 {
                (0..m_dim).map(Word::top).collect()
            } else {
                xs.iter()
                    .flat_map(|&x| (0..m_dim).map(move |w0| Word { degree: d, x, w0 }))
                    .collect()
            };
            columns.push(cols);
        }
        let index = columns
            .iter()
            .map(|c| c.iter().enumerate().map(|(i, w)| (*w, i)).collect())
            .collect();
        let echelon = columns.iter().map(|c| EchelonBasis::new(c.len())).collect();
        RelationSpace {
            limit,
            columns,
            index,
            echelon,
            generated: 0,
            skipped: 0,
        }
    }

    fn degree_of(rel: &WordVec) -> Result<Option<u32>> {
        let Some(first) = rel.keys().next() else {
            return Ok(None);
        };
        if rel.keys().any(|w| w.degree != first.degree) {
            return Err(Error::InvalidArgument(
                "relation is not degree-homogeneous".into(),
            ));
        }
        Ok(Some(first.degree))
    }

    fn add(&mut self, rel: Bounded<WordVec>) -> Result<()> {
        let Some(rel) = rel else {
            self.skipped += 1;
            return Ok(());
        };
        let Some(d) = Self::degree_of(&rel)? else {
            return Ok(());
        };
        if d as usize >= self.columns.len() {
            return Ok(());
        }
        self.generated += 1;
        let sv = self
            .to_sparse(d, &rel)
            .expect("relation words lie inside the weight limit");
        self.echelon[d as usize].insert(sv);
        Ok(())
    }

    fn to_sparse(&self, d: u32, v: &WordVec) -> Option<SparseVec> {
        v.iter()
            .map(|(w, c)| self.index[d as usize].get(w).map(|&i| (i, c.clone())))
            .collect()
    }

    /// Window columns that are not pivots: representatives of the quotient.
    fn representatives(&self, d: u32, window: u32) -> Vec<usize> {
        let cols = &self.columns[d as usize];
        (0..cols.len())
            .filter(|&i| cols[i].weight() <= window && !self.echelon[d as usize].is_pivot(i))
            .collect()
    }

    fn dims(&self, window: u32) -> Vec<usize> {
        (0..self.columns.len() as u32)
            .map(|d| self.representatives(d, window).len())
            .collect()
    }
}

fn source_words(va: &dyn VertexAlgebra, m_dim: usize, max_degree: u32, weight: u32) -> Vec<Word> {
    let mut out: Vec<Word> = (0..m_dim).map(Word::top).collect();
    let xs = va.basis_refs(weight);
    for e in 1..=max_degree {
        for &x in &xs {
            out.extend((0..m_dim).map(|w0| Word { degree: e, x, w0 }));
        }
    }
    out
}

/// Associativity defects landing in degrees `0..=degree`, applied to `ell`.
fn defects_for(
    b: &Builder,
    u: BasisRef,
    v: BasisRef,
    ell: Word,
    degree: u32,
    middle: u32,
) -> Result<Vec<Bounded<WordVec>>> {
    let (wu, wv) = (u.0 as i64, v.0 as i64);
    let e = ell.degree as i64;
    let mut out = Vec::new();
    for mid in 0..=middle as i64 {
        // with deg ℓ = 0 and a positive middle degree both sides agree by construction
        if e == 0 && mid > 0 {
            continue;
        }
        let q = wv + e - mid - 1;
        for d in 0..=degree as i64 {
            out.push(b.defect(u, wu + mid - d - 1, v, q, ell)?);
        }
    }
    Ok(out)
}

/// The `(K, m)` box of `𝓙` generators on `ell` landing in degrees
/// `0..=degree` whose terms can stay within the weight limit.
fn j_box(b: &Builder, u: BasisRef, v: BasisRef, ell: Word, degree: u32) -> Vec<(i64, i64)> {
    let e = ell.degree as i64;
    let mut out = Vec::new();
    for d in 0..=degree as i64 {
        let big_k = e - d;
        let m_hi = big_k - 2 * e - 2;
        let m_lo = u.0 as i64 + v.0 as i64 - 1 - b.weight_limit as i64;
        for m in (m_lo..=m_hi).rev() {
            out.push((big_k, m));
        }
    }
    out
}

/// Generates every relation of the family at one weight limit.
pub fn generate_relations(
    b: &Builder,
    family: Family,
    config: &BuildConfig,
) -> Result<RelationSpace> {
    let va = b.va.as_ref();
    let m_dim = b.m.dim();
    let limit = b.weight_limit;
    let mut space = RelationSpace::new(va, m_dim, config.degree, limit);
    let sources = source_words(va, m_dim, config.source_degree, limit);
    let vbasis = va.basis_refs(limit);
    let mut tasks = Vec::new();
    for &ell in &sources {
        let budget = (limit - ell.weight()) as i64 + 2 * config.degree as i64 + 2;
        for &u in &vbasis {
            for &v in &vbasis {
                if (u.0 + v.0) as i64 <= budget {
                    tasks.push((ell, u, v));
                }
            }
        }
    }
    let results: Vec<Vec<Bounded<WordVec>>> = tasks
        .par_iter()
        .map(|&(ell, u, v)| {
            let mut rels = defects_for(b, u, v, ell, config.degree, config.degree)?;
            if family == Family::S {
                for (big_k, m) in j_box(b, u, v, ell, config.degree) {
                    rels.push(b.j_generator(u, v, ell, big_k, m)?);
                }
            }
            Ok(rels)
        })
        .collect::<Result<_>>()?;
    for rel in results.into_iter().flatten() {
        space.add(rel)?;
    }
    Ok(space)
}

/// A finite truncation of `S₁(M)` or `S(M)`: canonical representatives per
/// degree and a lazily tabulated action.
pub struct TruncatedModule {
    family: Family,
    config: BuildConfig,
    slack: u32,
    trace: Vec<ModuleStep>,
    builder: Builder,
    space: RelationSpace,
    basis: Vec<Vec<Word>>,
    basis_index: Vec<HashMap<usize, usize>>,
    action: RwLock<HashMap<(BasisRef, i64, BasisRef), GradedVector>>,
}

fn build(m: Arc<AVModule>, config: &BuildConfig, family: Family) -> Result<TruncatedModule> {
    if config.window < 1 {
        return Err(Error::InvalidArgument("window must be at least 1".into()));
    }
    let mut trace: Vec<ModuleStep> = Vec::new();
    let mut slack = 0;
    while slack <= config.slack_ceiling {
        let builder = Builder::new(m.clone(), config.window + slack);
        let space = generate_relations(&builder, family, config)?;
        let dims = space.dims(config.window);
        let stable = trace.last().is_some_and(|prev| prev.dims == dims);
        trace.push(ModuleStep {
            slack,
            weight_limit: builder.weight_limit,
            dims,
            relations: space.generated,
            skipped: space.skipped,
        });
        if stable {
            return Ok(TruncatedModule::assemble(
                family,
                config.clone(),
                slack,
                trace,
                builder,
                space,
            ));
        }
        slack += 2;
    }
    let trace = trace
        .iter()
        .map(|s| format!("slack {}: {:?}", s.slack, s.dims))
        .collect::<Vec<_>>()
        .join("; ");
    Err(Error::Unstable {
        cutoff: config.slack_ceiling,
        trace,
    })
}

/// `S₁(M)` in degrees `0..=D`.
pub fn build_s1(m: Arc<AVModule>, config: &BuildConfig) -> Result<TruncatedModule> {
    build(m, config, Family::S1)
}

/// `S(M) = S₁(M)/𝓙` in degrees `0..=D`.
pub fn build_s(m: Arc<AVModule>, config: &BuildConfig) -> Result<TruncatedModule> {
    build(m, config, Family::S)
}

impl TruncatedModule {
    fn assemble(
        family: Family,
        config: BuildConfig,
        slack: u32,
        trace: Vec<ModuleStep>,
        builder: Builder,
        space: RelationSpace,
    ) -> Self {
        let mut basis = Vec::new();
        let mut basis_index = Vec::new();
        for d in 0..=config.degree {
            let reps = space.representatives(d, config.window);
            basis.push(reps.iter().map(|&c| space.columns[d as usize][c]).collect());
            basis_index.push(reps.iter().enumerate().map(|(i, &c)| (c, i)).collect());
        }
        TruncatedModule {
            family,
            config,
            slack,
            trace,
            builder,
            space,
            basis,
            basis_index,
            action: RwLock::new(HashMap::new()),
        }
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn config(&self) -> &BuildConfig {
        &self.config
    }

    pub fn slack(&self) -> u32 {
        self.slack
    }

    pub fn trace(&self) -> &[ModuleStep] {
        &self.trace
    }

    pub fn dims(&self) -> Vec<usize> {
        self.basis.iter().map(Vec::len).collect()
    }

    pub fn basis_words(&self, degree: u32) -> &[Word] {
        &self.basis[degree as usize]
    }

    pub fn builder(&self) -> &Builder {
        &self.builder
    }

    pub fn top_module(&self) -> &Arc<AVModule> {
        &self.builder.m
    }

    pub fn algebra(&self) -> &Arc<dyn VertexAlgebra> {
        &self.builder.va
    }

    /// Relation rows stored at degree `d`, as word combinations.
    pub fn relation_rows(&self, d: u32) -> Vec<WordVec> {
        let cols = &self.space.columns[d as usize];
        self.space.echelon[d as usize]
            .rows()
            .iter()
            .map(|r| r.iter().map(|(&c, x)| (cols[c], x.clone())).collect())
            .collect()
    }

    pub fn relation_count(&self) -> usize {
        self.space.echelon.iter().map(EchelonBasis::rank).sum()
    }

    /// Class of a combination of words in canonical coordinates.
    pub fn reduce(&self, v: &WordVec) -> Result<GradedVector> {
        let mut by_degree: BTreeMap<u32, WordVec> = BTreeMap::new();
        for (w, c) in v {
            by_degree.entry(w.degree).or_default().insert(*w, c.clone());
        }
        let mut out = GradedVector::zero();
        for (d, part) in by_degree {
            if d > self.config.degree {
                return Err(Error::CutoffExceeded {
                    what: "module degree",
                    needed: d as i64,
                    cutoff: self.config.degree as i64,
                });
            }
            let heaviest = part.keys().map(Word::weight).max().unwrap_or(0);
            let mut sv = self
                .space
                .to_sparse(d, &part)
                .ok_or(Error::CutoffExceeded {
                    what: "relation weight",
                    needed: heaviest as i64,
                    cutoff: self.space.limit as i64,
                })?;
            self.space.echelon[d as usize].reduce(&mut sv);
            for (c, x) in sv {
                let Some(&i) = self.basis_index[d as usize].get(&c) else {
                    return Err(Error::CutoffExceeded {
                        what: "reducible weight",
                        needed: self.space.columns[d as usize][c].weight() as i64,
                        cutoff: self.space.limit as i64,
                    });
                };
                out.add_entry((d, i), &x);
            }
        }
        Ok(out)
    }

    /// `e_M`: the class of `w0 ∈ M`.
    pub fn embed(&self, w0: &SparseVec) -> Result<GradedVector> {
        let v: WordVec = w0.iter().map(|(&i, c)| (Word::top(i), c.clone())).collect();
        self.reduce(&v)
    }

    /// Digest of `u_n` on every basis element for basis `u` with
    /// `wt u <= weight_bound`, over all `n` with target degree `<= max_degree`.
    pub fn action_digest(&self, weight_bound: u32, max_degree: u32) -> Result<String> {
        let va = self.algebra().clone();
        let mut hasher = Sha256::new();
        for u in va.basis_refs(weight_bound) {
            for (d, words) in self.basis.iter().enumerate().take(max_degree as usize + 1) {
                for i in 0..words.len() {
                    for t in 0..=max_degree as i64 {
                        let n = u.0 as i64 + d as i64 - t - 1;
                        let img = self.act_basis(u, n, (d as u32, i))?;
                        let entries: Vec<String> = img
                            .entries()
                            .map(|((g, j), c)| format!("{g}.{j}:{}", format_rational(c)))
                            .collect();
                        hasher.update(format!("{u:?} {n} {d}.{i} -> {}\n", entries.join(",")));
                    }
                }
            }
        }
        Ok(hex::encode(hasher.finalize()))
    }
}

impl CandidateModule for TruncatedModule {
    fn name(&self) -> String {
        let tag = match self.family {
            Family::S1 => "S1",
            Family::S => "S",
        };
        format!("{tag}({})", self.builder.m.name())
    }

    fn dim(&self, degree: u32) -> usize {
        self.basis.get(degree as usize).map_or(0, Vec::len)
    }

    fn label(&self, b: BasisRef) -> String {
        let w = self.basis[b.0 as usize][b.1];
        if w.degree == 0 {
            format!("w{}", w.w0)
        } else {
            format!("[{}]({})w{}", self.algebra().label(w.x), w.mode(), w.w0)
        }
    }

    fn degree_cutoff(&self) -> u32 {
        self.config.degree
    }

    fn act_basis(&self, u: BasisRef, n: i64, w: BasisRef) -> Result<GradedVector> {
        let key = (u, n, w);
        if let Some(hit) = self.action.read().unwrap().get(&key) {
            return Ok(hit.clone());
        }
        let word = self.basis[w.0 as usize][w.1];
        let image = self
            .builder
            .act_word(u, n, word)?
            .ok_or(Error::CutoffExceeded {
                what: "relation weight",
                needed: u.0 as i64 + word.weight() as i64,
                cutoff: self.space.limit as i64,
            })?;
        let out = self.reduce(&image)?;
        self.action.write().unwrap().insert(key, out.clone());
        Ok(out)
    }
}

/// One `𝓙` generator with its value in `L`.
#[derive(Debug, Clone)]
pub struct JGenerator {
    pub u: BasisRef,
    pub v: BasisRef,
    pub ell: Word,
    pub big_k: i64,
    pub m: i64,
    pub value: WordVec,
}

impl JGenerator {
    pub fn degree(&self) -> i64 {
        self.ell.degree as i64 - self.big_k
    }
}

/// All `𝓙` generators on the basis of a truncated module, with `u, v` basis
/// elements of weight `<= window` and value in degrees `0..=D`.
pub struct JGenerators {
    pub generators: Vec<JGenerator>,
    pub skipped: usize,
}

pub fn j_generators(s1: &TruncatedModule) -> Result<JGenerators> {
    let b = s1.builder();
    let us = s1.algebra().basis_refs(s1.config.window);
    let mut tasks = Vec::new();
    for words in &s1.basis {
        for &ell in words {
            for &u in &us {
                for &v in &us {
                    tasks.push((ell, u, v));
                }
            }
        }
    }
    let found: Vec<Vec<(JGenerator, bool)>> = tasks
        .par_iter()
        .map(|&(ell, u, v)| {
            let mut out = Vec::new();
            for (big_k, m) in j_box(b, u, v, ell, s1.config.degree) {
                let r = b.j_generator(u, v, ell, big_k, m)?;
                let ok = r.is_some();
                out.push((
                    JGenerator {
                        u,
                        v,
                        ell,
                        big_k,
                        m,
                        value: r.unwrap_or_default(),
                    },
                    ok,
                ));
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let mut generators = Vec::new();
    let mut skipped = 0;
    for (g, ok) in found.into_iter().flatten() {
        if ok {
            generators.push(g);
        } else {
            skipped += 1;
        }
    }
    Ok(JGenerators {
        generators,
        skipped,
    })
}

/// Outcome of [`verify_j_cap_m`].
#[derive(Debug, Clone, Serialize)]
pub struct JCapM {
    pub holds: bool,
    /// Degree-0 elements of `𝓙` examined.
    pub checked: usize,
    pub skipped: usize,
    /// A nonzero element of `𝓙 ∩ M`, in coordinates of `M`.
    pub witness: Option<Vec<String>>,
    pub witness_source: Option<String>,
}

/// Checks that `𝓙 ∩ M = 0` at truncation.
///
/// Degree-0 elements of `𝓙` are `a(wt a + g - 1) J` for `𝓙` generators `J`
/// of degree `g >= 0` (the `a(..)` is omitted when `g = 0`). They are
/// enumerated on words `ℓ = b_[N] w0` with `N <= source_degree` and `a, b, u,
/// v` of weight `<= weight`. `injected` vectors of `M` are added to the span
/// unchanged; used to confirm that the check can fail.
pub fn verify_j_cap_m(
    s1: &TruncatedModule,
    source_degree: u32,
    weight: u32,
    injected: &[SparseVec],
) -> Result<JCapM> {
    verify_j_cap_m_with(s1.builder(), source_degree, weight, injected)
}

/// [`verify_j_cap_m`] on a bare rewriting engine. The elements examined all
/// have degree 0, where `S₁(M)` is `M` itself, so no quotient is needed.
pub fn verify_j_cap_m_with(
    b: &Builder,
    source_degree: u32,
    weight: u32,
    injected: &[SparseVec],
) -> Result<JCapM> {
    let va = b.m.algebra().clone();
    let window = weight.min(b.weight_limit);
    let m_dim = b.m.dim();
    let us = va.basis_refs(window);
    let sources = source_words(va.as_ref(), m_dim, source_degree, window);
    let mut tasks = Vec::new();
    for &ell in &sources {
        for &u in &us {
            for &v in &us {
                tasks.push((ell, u, v));
            }
        }
    }
    let per_task: Vec<(Vec<(String, WordVec)>, usize)> = tasks
        .par_iter()
        .map(|&(ell, u, v)| {
            let mut found = Vec::new();
            let mut skipped = 0;
            for (big_k, m) in j_box(b, u, v, ell, ell.degree) {
                let Some(j) = b.j_generator(u, v, ell, big_k, m)? else {
                    skipped += 1;
                    continue;
                };
                let g = ell.degree as i64 - big_k;
                let tag = |a: Option<BasisRef>| {
                    format!(
                        "{}J(u={}, v={}, l={:?}, K={big_k}, m={m})",
                        a.map(|a| format!("{}({}) ", va.label(a), a.0 as i64 + g - 1))
                            .unwrap_or_default(),
                        va.label(u),
                        va.label(v),
                        ell
                    )
                };
                if g == 0 {
                    found.push((tag(None), j));
                    continue;
                }
                for &a in &us {
                    match b.act(a, a.0 as i64 + g - 1, &j)? {
                        Some(low) => found.push((tag(Some(a)), low)),
                        None => skipped += 1,
                    }
                }
            }
            Ok((found, skipped))
        })
        .collect::<Result<_>>()?;
    let mut checked = 0;
    let mut skipped = 0;
    let mut witness = None;
    let mut witness_source = None;
    let injected_values = injected.iter().enumerate().map(|(i, v)| {
        (
            format!("injected #{i}"),
            v.iter()
                .map(|(&c, x)| (Word::top(c), x.clone()))
                .collect::<WordVec>(),
        )
    });
    let all = per_task.into_iter().flat_map(|(found, s)| {
        skipped += s;
        found
    });
    for (source, value) in all.chain(injected_values) {
        checked += 1;
        debug_assert!(value.keys().all(|w| w.degree == 0));
        if witness.is_none() && !value.is_empty() {
            let mut coords = vec![Rational::zero(); m_dim];
            for (w, c) in &value {
                coords[w.w0] = c.clone();
            }
            witness = Some(coords.iter().map(format_rational).collect());
            witness_source = Some(source);
        }
    }
    Ok(JCapM {
        holds: witness.is_none(),
        checked,
        skipped,
        witness,
        witness_source,
    })
}

/// A degree-preserving linear map between truncated graded spaces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModuleMap {
    /// `matrices[d]` maps degree `d` of the source to degree `d` of the target.
    pub matrices: Vec<DenseMatrix>,
}

impl ModuleMap {
    pub fn apply(&self, v: &GradedVector) -> GradedVector {
        let mut out = GradedVector::zero();
        for (d, part) in v.homogeneous_parts() {
            let sv: SparseVec = part.entries().map(|(b, c)| (b.1, c.clone())).collect();
            for (i, c) in self.matrices[d as usize].apply(&sv) {
                out.add_entry((d, i), &c);
            }
        }
        out
    }

    pub fn ranks(&self) -> Vec<usize> {
        self.matrices
            .iter()
            .map(|m| {
                let mut e = EchelonBasis::new(m.cols);
                for r in 0..m.rows {
                    let row: SparseVec = (0..m.cols)
                        .filter(|&c| !m.get(r, c).is_zero())
                        .map(|c| (c, m.get(r, c).clone()))
                        .collect();
                    e.insert(row);
                }
                e.rank()
            })
            .collect()
    }
}

/// Checks `f(u_n w) = u_n f(w)` for basis `u` with `wt u <= weight_bound` and
/// basis `w`, whenever source and target degree are `<= max_degree`.
/// Returns the first failure.
pub fn check_intertwines(
    src: &dyn CandidateModule,
    dst: &dyn CandidateModule,
    va: &dyn VertexAlgebra,
    f: &ModuleMap,
    weight_bound: u32,
    max_degree: u32,
) -> Result<Option<String>> {
    for u in va.basis_refs(weight_bound) {
        let uv = GradedVector::basis(u.0, u.1);
        for d in 0..=max_degree {
            for i in 0..src.dim(d) {
                let w = GradedVector::basis(d, i);
                let fw = f.apply(&w);
                for t in 0..=max_degree as i64 {
                    let n = u.0 as i64 + d as i64 - t - 1;
                    let lhs = f.apply(&src.act(&uv, n, &w)?);
                    let rhs = dst.act(&uv, n, &fw)?;
                    if lhs != rhs {
                        return Ok(Some(format!(
                            "{}({n}) on {}: {} vs {}",
                            va.label(u),
                            src.label((d, i)),
                            dst.render(&lhs),
                            dst.render(&rhs)
                        )));
                    }
                }
            }
        }
    }
    Ok(None)
}

/// `f ∘ ρ(u) = o(u) ∘ f` on `M` for basis `u` with `wt u <= weight_bound`.
fn check_av_map(
    m: &AVModule,
    w: &dyn CandidateModule,
    f: &[GradedVector],
    weight_bound: u32,
) -> Result<Option<String>> {
    let va = m.algebra().clone();
    for u in va.basis_refs(weight_bound) {
        let r = m.rho_basis(u)?;
        let uv = GradedVector::basis(u.0, u.1);
        for (i, fi) in f.iter().enumerate() {
            let mut lhs = GradedVector::zero();
            for (k, fk) in f.iter().enumerate() {
                lhs.axpy(r.get(k, i), fk);
            }
            let rhs = zero_mode(w, &uv, fi)?;
            if lhs != rhs {
                return Ok(Some(format!(
                    "f rho({}) != o({}) f on w{i}",
                    va.label(u),
                    va.label(u)
                )));
            }
        }
    }
    Ok(None)
}

/// The map `S(M) -> W` determined by `f: M -> T(W)`, sending the class of
/// `u(m) w0` to `u_m f(w0)`.
pub struct InducedMap {
    pub map: ModuleMap,
    pub relations_checked: usize,
}

impl InducedMap {
    /// Bijective at every degree of the truncation.
    pub fn is_isomorphism(&self, s: &TruncatedModule) -> bool {
        let dims = s.dims();
        self.map
            .ranks()
            .iter()
            .zip(&self.map.matrices)
            .zip(&dims)
            .all(|((r, m), d)| *r == *d && m.rows == *d)
    }
}

/// `f[i]` is the image of the `i`-th basis vector of `M`. Errors with
/// [`Error::NotWellDefined`] when `f` is not an `A(V)`-map, when a stored
/// relation does not vanish in `W`, or when the result fails to intertwine
/// `u_n` for `wt u <= weight_bound` up to degree `check_degree`.
pub fn induced_map(
    s: &TruncatedModule,
    w: &dyn CandidateModule,
    f: &[GradedVector],
    weight_bound: u32,
    check_degree: u32,
) -> Result<InducedMap> {
    let m = s.top_module();
    if f.len() != m.dim() {
        return Err(Error::DimensionMismatch {
            expected: m.dim(),
            got: f.len(),
        });
    }
    if let Some(why) = check_av_map(m, w, f, weight_bound)? {
        return Err(Error::NotWellDefined(why));
    }
    let va = s.algebra().clone();
    let image = |word: &Word| -> Result<GradedVector> {
        if word.degree == 0 {
            return Ok(f[word.w0].clone());
        }
        w.act(
            &GradedVector::basis(word.x.0, word.x.1),
            word.mode(),
            &f[word.w0],
        )
    };
    let mut checked = 0;
    for d in 0..=s.config.degree {
        for rel in s.relation_rows(d) {
            let mut total = GradedVector::zero();
            for (word, c) in &rel {
                total.axpy(c, &image(word)?);
            }
            checked += 1;
            if !total.is_zero() {
                let shown: Vec<String> = rel
                    .iter()
                    .map(|(wd, c)| {
                        format!(
                            "{}*{}({})w{}",
                            format_rational(c),
                            va.label(wd.x),
                            wd.mode(),
                            wd.w0
                        )
                    })
                    .collect();
                return Err(Error::NotWellDefined(format!(
                    "relation {} maps to {}",
                    shown.join(" + "),
                    w.render(&total)
                )));
            }
        }
    }
    let mut matrices = Vec::new();
    for d in 0..=s.config.degree {
        let words = s.basis_words(d);
        let mut mat = DenseMatrix::zero(w.dim(d), words.len());
        for (i, word) in words.iter().enumerate() {
            for (b, c) in image(word)?.entries() {
                mat.set(b.1, i, c.clone());
            }
        }
        matrices.push(mat);
    }
    let map = ModuleMap { matrices };
    if let Some(why) = check_intertwines(s, w, va.as_ref(), &map, weight_bound, check_degree)? {
        return Err(Error::NotWellDefined(why));
    }
    Ok(InducedMap {
        map,
        relations_checked: checked,
    })
}

/// `S(f)` for an `A(V)`-map `f: M₁ -> M₂` (a `dim M₂ × dim M₁` matrix), on
/// representatives. Errors with [`Error::NotWellDefined`] when a relation of
/// the source does not map into the relations of the target.
pub fn functor_map(
    f: &DenseMatrix,
    src: &TruncatedModule,
    dst: &TruncatedModule,
) -> Result<ModuleMap> {
    let (m1, m2) = (src.top_module(), dst.top_module());
    if f.cols != m1.dim() || f.rows != m2.dim() {
        return Err(Error::DimensionMismatch {
            expected: m1.dim() * m2.dim(),
            got: f.rows * f.cols,
        });
    }
    let push = |v: &WordVec| -> WordVec {
        let mut out = WordVec::new();
        for (word, c) in v {
            for r in 0..f.rows {
                let x = f.get(r, word.w0);
                if !x.is_zero() {
                    wv_add(&mut out, Word { w0: r, ..*word }, &(c * x));
                }
            }
        }
        out
    };
    for d in 0..=src.config.degree.min(dst.config.degree) {
        for rel in src.relation_rows(d) {
            let image = push(&rel);
            match dst.reduce(&image) {
                Ok(v) if v.is_zero() => {}
                Ok(v) => {
                    return Err(Error::NotWellDefined(format!(
                        "relation maps to {}",
                        dst.render(&v)
                    )))
                }
                // relations too heavy for the target's window carry no information
                Err(Error::CutoffExceeded { .. }) => {}
                Err(e) => return Err(e),
            }
        }
    }
    let mut matrices = Vec::new();
    for d in 0..=src.config.degree.min(dst.config.degree) {
        let words = src.basis_words(d);
        let mut mat = DenseMatrix::zero(dst.dim(d), words.len());
        for (i, word) in words.iter().enumerate() {
            let img = dst.reduce(&push(&WordVec::from([(*word, Rational::one())])))?;
            for (b, c) in img.entries() {
                mat.set(b.1, i, c.clone());
            }
        }
        matrices.push(mat);
    }
    Ok(ModuleMap { matrices })
}

/// Outcome of [`check_t_after_s`].
#[derive(Debug, Clone, Serialize)]
pub struct TAfterS {
    pub holds: bool,
    pub top_dim: usize,
    pub top_degrees: Vec<u32>,
    pub detail: Option<String>,
}

/// `T(S(M)) ≅ M` via `e_M`: the top level computed up to `max_degree` with
/// lowering operators of weight `<= weight_bound` is exactly the image of `M`,
/// and `e_M ρ(u) = o(u) e_M` for basis `u` with `wt u <= weight_bound`.
pub fn check_t_after_s(s: &TruncatedModule, max_degree: u32, weight_bound: u32) -> Result<TAfterS> {
    let va = s.algebra().clone();
    let m = s.top_module();
    let top = top_level(va.clone(), s, max_degree.min(s.config.degree), weight_bound)?;
    let top_degrees: Vec<u32> = top.vectors.iter().filter_map(|v| v.max_grade()).collect();
    let mut detail = None;
    if top.vectors.len() != m.dim() || top_degrees.iter().any(|&d| d != 0) {
        detail = Some(format!(
            "top level has dimension {} in degrees {:?}",
            top.vectors.len(),
            top_degrees
        ));
    }
    if detail.is_none() {
        'outer: for u in va.basis_refs(weight_bound) {
            let r = m.rho_basis(u)?;
            let uv = GradedVector::basis(u.0, u.1);
            for i in 0..m.dim() {
                let lhs = s.embed(&r.column(i))?;
                let rhs = zero_mode(s, &uv, &s.embed(&SparseVec::from([(i, Rational::one())]))?)?;
                if lhs != rhs {
                    detail = Some(format!(
                        "e_M does not intertwine rho({}) on w{i}",
                        va.label(u)
                    ));
                    break 'outer;
                }
            }
        }
    }
    Ok(TAfterS {
        holds: detail.is_none(),
        top_dim: top.vectors.len(),
        top_degrees,
        detail,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::rat;
    use crate::backends::Heisenberg;

    fn scalar(lambda: Rational) -> Arc<AVModule> {
        let h: Arc<dyn VertexAlgebra> = Arc::new(Heisenberg::new(24));
        Arc::new(
            AVModule::from_generator(
                h,
                DenseMatrix::from_rows(&[vec![lambda]]).unwrap(),
                "scalar",
            )
            .unwrap(),
        )
    }

    #[test]
    fn free_word_degree() {
        let w = FreeWord {
            letters: vec![((1, 0), -1), ((2, 0), 0)],
            tail: 0,
        };
        assert_eq!(w.degree(), 2);
    }

    #[test]
    fn degree_one_is_alpha() {
        let s = build_s(scalar(rat(2)), &BuildConfig::new(2)).unwrap();
        assert_eq!(s.dims(), vec![1, 1, 2]);
        assert_eq!(
            s.basis_words(1),
            &[Word {
                degree: 1,
                x: (1, 0),
                w0: 0
            }]
        );
        // α(0) w = λ w
        let w = GradedVector::basis(0, 0);
        let r = s.act(&GradedVector::basis(1, 0), 0, &w).unwrap();
        assert_eq!(r, w.scaled(&rat(2)));
    }

    #[test]
    fn zero_module_is_zero() {
        let h: Arc<dyn VertexAlgebra> = Arc::new(Heisenberg::new(12));
        let m = Arc::new(AVModule::from_generator(h, DenseMatrix::zero(0, 0), "zero").unwrap());
        let s = build_s(m, &BuildConfig::new(3)).unwrap();
        assert_eq!(s.dims(), vec![0, 0, 0, 0]);
    }
}
