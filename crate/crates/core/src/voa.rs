//! Generic vertex-algebra layer: graded vectors, the algebra and module
//! interfaces, and both sides of the residue formulas computed from component
//! actions alone.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_traits::{One, Zero};

use crate::arith::{binomial, format_rational, Rational};
use crate::error::{Error, Result};
use crate::series::{Coefficient, LaurentPoly, Monomial, TruncationWindow, Var};

/// A basis element of a graded space: `(grade, index within that grade)`.
pub type BasisRef = (u32, usize);

/// Finite rational combination of basis elements of a graded space.
#[derive(Clone, PartialEq, Eq, Default, Hash)]
pub struct GradedVector {
    entries: BTreeMap<BasisRef, Rational>,
}

impl GradedVector {
    pub fn zero() -> Self {
        GradedVector::default()
    }

    pub fn basis(grade: u32, idx: usize) -> Self {
        let mut v = GradedVector::zero();
        v.entries.insert((grade, idx), Rational::one());
        v
    }

    pub fn from_entries(entries: impl IntoIterator<Item = (BasisRef, Rational)>) -> Self {
        let mut v = GradedVector::zero();
        for (k, c) in entries {
            v.add_entry(k, &c);
        }
        v
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&BasisRef, &Rational)> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn coeff(&self, b: BasisRef) -> Rational {
        self.entries.get(&b).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn add_entry(&mut self, b: BasisRef, c: &Rational) {
        if c.is_zero() {
            return;
        }
        let slot = self.entries.entry(b).or_insert_with(Rational::zero);
        *slot += c;
        if slot.is_zero() {
            self.entries.remove(&b);
        }
    }

    pub fn axpy(&mut self, factor: &Rational, other: &GradedVector) {
        if factor.is_zero() {
            return;
        }
        for (b, c) in &other.entries {
            self.add_entry(*b, &(c * factor));
        }
    }

    pub fn scaled(&self, factor: &Rational) -> GradedVector {
        let mut out = GradedVector::zero();
        out.axpy(factor, self);
        out
    }

    pub fn sub(&self, other: &GradedVector) -> GradedVector {
        let mut out = self.clone();
        out.axpy(&-Rational::one(), other);
        out
    }

    pub fn add(&self, other: &GradedVector) -> GradedVector {
        let mut out = self.clone();
        out.axpy(&Rational::one(), other);
        out
    }

    /// The grade if every entry sits in a single grade.
    pub fn homogeneous_grade(&self) -> Option<u32> {
        let mut grades = self.entries.keys().map(|(g, _)| *g);
        let first = grades.next()?;
        grades.all(|g| g == first).then_some(first)
    }

    pub fn max_grade(&self) -> Option<u32> {
        self.entries.keys().map(|(g, _)| *g).max()
    }

    pub fn homogeneous_parts(&self) -> BTreeMap<u32, GradedVector> {
        let mut parts: BTreeMap<u32, GradedVector> = BTreeMap::new();
        for (&(g, i), c) in &self.entries {
            parts
                .entry(g)
                .or_default()
                .entries
                .insert((g, i), c.clone());
        }
        parts
    }

    pub fn render_with(&self, label: impl Fn(BasisRef) -> String) -> String {
        if self.entries.is_empty() {
            return "0".to_string();
        }
        self.entries
            .iter()
            .map(|(b, c)| format!("({})*{}", format_rational(c), label(*b)))
            .collect::<Vec<_>>()
            .join(" + ")
    }
}

impl fmt::Debug for GradedVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render_with(|(g, i)| format!("e[{g},{i}]")))
    }
}

impl Coefficient for GradedVector {
    fn zero_coeff() -> Self {
        GradedVector::zero()
    }

    fn is_zero_coeff(&self) -> bool {
        self.is_zero()
    }

    fn add_scaled(&mut self, other: &Self, factor: &Rational) {
        self.axpy(factor, other);
    }

    fn scaled(&self, factor: &Rational) -> Self {
        GradedVector::scaled(self, factor)
    }

    fn render(&self) -> String {
        format!("{self:?}")
    }
}

/// An ℕ-graded vertex algebra given by finite weight spaces and a computable
/// component action `u_n v`.
pub trait VertexAlgebra: Send + Sync {
    fn name(&self) -> String;

    fn dim(&self, weight: u32) -> usize;

    fn label(&self, b: BasisRef) -> String;

    /// Largest weight any computation may touch.
    fn weight_cutoff(&self) -> u32;

    /// `u_n v` on basis elements.
    fn component_basis(&self, u: BasisRef, n: i64, v: BasisRef) -> Result<GradedVector>;

    fn vacuum(&self) -> GradedVector {
        GradedVector::basis(0, 0)
    }

    /// The strong generator `a` when every basis element is a monomial
    /// `a_{m1} ... a_{mk} 1` in its negative modes.
    fn strong_generator(&self) -> Option<BasisRef> {
        None
    }

    /// For a basis element `a_m u'` built from the strong generator, returns
    /// `(m, u')`; `None` for the vacuum.
    fn pbw_split(&self, _u: BasisRef) -> Option<(i64, BasisRef)> {
        None
    }

    fn component(&self, u: &GradedVector, n: i64, v: &GradedVector) -> Result<GradedVector> {
        let mut out = GradedVector::zero();
        for (&ub, uc) in u.entries() {
            for (&vb, vc) in v.entries() {
                let target = ub.0 as i64 + vb.0 as i64 - n - 1;
                if target < 0 {
                    continue;
                }
                if target > self.weight_cutoff() as i64 {
                    return Err(Error::CutoffExceeded {
                        what: "algebra weight",
                        needed: target,
                        cutoff: self.weight_cutoff() as i64,
                    });
                }
                let r = self.component_basis(ub, n, vb)?;
                out.axpy(&(uc * vc), &r);
            }
        }
        Ok(out)
    }

    fn basis_refs(&self, max_weight: u32) -> Vec<BasisRef> {
        (0..=max_weight)
            .flat_map(|g| (0..self.dim(g)).map(move |i| (g, i)))
            .collect()
    }

    fn render(&self, v: &GradedVector) -> String {
        v.render_with(|b| self.label(b))
    }
}

/// A degree-graded space with a candidate vertex operator map. Nothing beyond
/// lower truncation and the grading-shift law is assumed.
pub trait CandidateModule: Send + Sync {
    fn name(&self) -> String;

    fn dim(&self, degree: u32) -> usize;

    fn label(&self, b: BasisRef) -> String;

    fn degree_cutoff(&self) -> u32;

    /// `u_n w` on basis elements, for `u` a basis element of the algebra.
    fn act_basis(&self, u: BasisRef, n: i64, w: BasisRef) -> Result<GradedVector>;

    fn act(&self, u: &GradedVector, n: i64, w: &GradedVector) -> Result<GradedVector> {
        let mut out = GradedVector::zero();
        for (&ub, uc) in u.entries() {
            for (&wb, wc) in w.entries() {
                let target = ub.0 as i64 + wb.0 as i64 - n - 1;
                if target < 0 {
                    continue;
                }
                if target > self.degree_cutoff() as i64 {
                    return Err(Error::CutoffExceeded {
                        what: "module degree",
                        needed: target,
                        cutoff: self.degree_cutoff() as i64,
                    });
                }
                let r = self.act_basis(ub, n, wb)?;
                debug_assert!(r.homogeneous_grade().is_none_or(|g| g as i64 == target));
                out.axpy(&(uc * wc), &r);
            }
        }
        Ok(out)
    }

    fn basis_refs(&self, max_degree: u32) -> Vec<BasisRef> {
        (0..=max_degree)
            .flat_map(|g| (0..self.dim(g)).map(move |i| (g, i)))
            .collect()
    }

    fn render(&self, v: &GradedVector) -> String {
        v.render_with(|b| self.label(b))
    }
}

/// The algebra as a module over itself.
pub struct AdjointModule {
    va: Arc<dyn VertexAlgebra>,
}

impl AdjointModule {
    pub fn new(va: Arc<dyn VertexAlgebra>) -> Self {
        AdjointModule { va }
    }
}

impl CandidateModule for AdjointModule {
    fn name(&self) -> String {
        format!("adjoint({})", self.va.name())
    }

    fn dim(&self, degree: u32) -> usize {
        self.va.dim(degree)
    }

    fn label(&self, b: BasisRef) -> String {
        self.va.label(b)
    }

    fn degree_cutoff(&self) -> u32 {
        self.va.weight_cutoff()
    }

    fn act_basis(&self, u: BasisRef, n: i64, w: BasisRef) -> Result<GradedVector> {
        self.va.component_basis(u, n, w)
    }
}

/// A module whose action has one entry `u_n w` shifted by a fixed vector of
/// the right degree. The result is still lower-truncated and graded but in
/// general no longer satisfies weak associativity.
pub struct PerturbedModule<M> {
    inner: M,
    entry: (BasisRef, i64, BasisRef),
    delta: GradedVector,
}

impl<M: CandidateModule> PerturbedModule<M> {
    pub fn new(inner: M, u: BasisRef, n: i64, w: BasisRef, delta: GradedVector) -> Result<Self> {
        let target = u.0 as i64 + w.0 as i64 - n - 1;
        match delta.homogeneous_grade() {
            Some(g) if g as i64 == target => {}
            None if delta.is_zero() => {}
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "perturbation must be homogeneous of degree {target}"
                )))
            }
        }
        Ok(PerturbedModule {
            inner,
            entry: (u, n, w),
            delta,
        })
    }

    pub fn entry(&self) -> (BasisRef, i64, BasisRef) {
        self.entry
    }

    pub fn delta(&self) -> &GradedVector {
        &self.delta
    }
}

/// One corrupted action-table entry: `u_n w` gains `delta`.
#[derive(Debug, Clone, PartialEq)]
pub struct Corruption {
    pub u: BasisRef,
    pub n: i64,
    pub w: BasisRef,
    pub delta: GradedVector,
}

impl Corruption {
    /// Draws an entry with `wt u <= weight`, `deg w <= degree` and target
    /// degree `<= target_degree`, shifted by a small nonzero multiple of a
    /// basis vector. The same seed always gives the same entry.
    pub fn seeded(
        va: &dyn VertexAlgebra,
        m: &dyn CandidateModule,
        weight: u32,
        degree: u32,
        target_degree: u32,
        seed: u64,
    ) -> Result<Self> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let us = va.basis_refs(weight);
        let ws = m.basis_refs(degree);
        let targets: Vec<u32> = (0..=target_degree).filter(|&t| m.dim(t) > 0).collect();
        if us.is_empty() || ws.is_empty() || targets.is_empty() {
            return Err(Error::InvalidArgument("no action entry to corrupt".into()));
        }
        let u = us[rng.gen_range(0..us.len())];
        let w = ws[rng.gen_range(0..ws.len())];
        let t = targets[rng.gen_range(0..targets.len())];
        let idx = rng.gen_range(0..m.dim(t));
        let mut c: i64 = rng.gen_range(1..=3);
        if rng.gen_bool(0.5) {
            c = -c;
        }
        let n = u.0 as i64 + w.0 as i64 - t as i64 - 1;
        Ok(Corruption {
            u,
            n,
            w,
            delta: GradedVector::basis(t, idx).scaled(&Rational::from_integer(c.into())),
        })
    }

    pub fn apply<M: CandidateModule>(&self, inner: M) -> Result<PerturbedModule<M>> {
        PerturbedModule::new(inner, self.u, self.n, self.w, self.delta.clone())
    }

    pub fn render(&self, va: &dyn VertexAlgebra, m: &dyn CandidateModule) -> String {
        format!(
            "{}_({}) {} += {}",
            va.label(self.u),
            self.n,
            m.label(self.w),
            m.render(&self.delta)
        )
    }
}

impl<M: CandidateModule> CandidateModule for PerturbedModule<M> {
    fn name(&self) -> String {
        let ((ug, ui), n, (wg, wi)) = self.entry;
        format!(
            "{}+perturbed[u=({ug},{ui}),n={n},w=({wg},{wi})]",
            self.inner.name()
        )
    }

    fn dim(&self, degree: u32) -> usize {
        self.inner.dim(degree)
    }

    fn label(&self, b: BasisRef) -> String {
        self.inner.label(b)
    }

    fn degree_cutoff(&self) -> u32 {
        self.inner.degree_cutoff()
    }

    fn act_basis(&self, u: BasisRef, n: i64, w: BasisRef) -> Result<GradedVector> {
        let mut r = self.inner.act_basis(u, n, w)?;
        if (u, n, w) == self.entry {
            r.axpy(&Rational::one(), &self.delta);
        }
        Ok(r)
    }
}

impl<T: CandidateModule + ?Sized> CandidateModule for Arc<T> {
    fn name(&self) -> String {
        (**self).name()
    }
    fn dim(&self, degree: u32) -> usize {
        (**self).dim(degree)
    }
    fn label(&self, b: BasisRef) -> String {
        (**self).label(b)
    }
    fn degree_cutoff(&self) -> u32 {
        (**self).degree_cutoff()
    }
    fn act_basis(&self, u: BasisRef, n: i64, w: BasisRef) -> Result<GradedVector> {
        (**self).act_basis(u, n, w)
    }
}

/// Weight of a homogeneous algebra element.
pub fn weight_of(u: &GradedVector) -> Result<i64> {
    if u.is_zero() {
        return Ok(0);
    }
    u.homogeneous_grade()
        .map(|g| g as i64)
        .ok_or_else(|| Error::InvalidArgument("expected a homogeneous element".into()))
}

/// Smallest `l` from the grading with `u_n w = 0` for all `n >= l`.
pub fn minimal_l(u: &GradedVector, w: &GradedVector) -> i64 {
    let wu = u.max_grade().map_or(0, |g| g as i64);
    let dw = w.max_grade().map_or(0, |g| g as i64);
    (wu + dw).max(0)
}

/// `u_p (v_q w)`.
pub fn product_side(
    m: &dyn CandidateModule,
    u: &GradedVector,
    v: &GradedVector,
    w: &GradedVector,
    p: i64,
    q: i64,
) -> Result<GradedVector> {
    let inner = m.act(v, q, w)?;
    m.act(u, p, &inner)
}

/// `sum_{i=0}^{k-q-1} sum_{j=0}^{l} C(p-l,i) C(l,j) (u_{p-l-i+j} v)_{q+l+i-j} w`.
#[allow(clippy::too_many_arguments)]
pub fn iterate_side(
    va: &dyn VertexAlgebra,
    m: &dyn CandidateModule,
    u: &GradedVector,
    v: &GradedVector,
    w: &GradedVector,
    p: i64,
    q: i64,
    l: i64,
    k: i64,
) -> Result<GradedVector> {
    if k - q <= 0 {
        return Err(Error::InvalidArgument(format!(
            "k - q must be positive, got {}",
            k - q
        )));
    }
    let mut out = GradedVector::zero();
    for i in 0..k - q {
        let ci = binomial(p - l, i);
        for j in 0..=l {
            let c = &ci * binomial(l, j);
            if c.is_zero() {
                continue;
            }
            let uv = va.component(u, p - l - i + j, v)?;
            if uv.is_zero() {
                continue;
            }
            out.axpy(&c, &m.act(&uv, q + l + i - j, w)?);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Discrepancy {
    pub holds: bool,
    pub lhs: GradedVector,
    pub rhs: GradedVector,
    pub difference: GradedVector,
}

impl Discrepancy {
    pub fn compare(lhs: GradedVector, rhs: GradedVector) -> Self {
        let difference = lhs.sub(&rhs);
        Discrepancy {
            holds: difference.is_zero(),
            lhs,
            rhs,
            difference,
        }
    }
}

/// Checks the component form of the associativity formula for one `(p, q)`
/// using minimal `l, k`. For `q >= k` both sides vanish by truncation.
pub fn check_prop21(
    va: &dyn VertexAlgebra,
    m: &dyn CandidateModule,
    u: &GradedVector,
    v: &GradedVector,
    w: &GradedVector,
    p: i64,
    q: i64,
) -> Result<Discrepancy> {
    let l = minimal_l(u, w);
    let k = minimal_l(v, w);
    let lhs = product_side(m, u, v, w, p, q)?;
    let rhs = if k - q > 0 {
        iterate_side(va, m, u, v, w, p, q, l, k)?
    } else {
        GradedVector::zero()
    };
    Ok(Discrepancy::compare(lhs, rhs))
}

/// Finite range of mode indices for which a component expression can be
/// nonzero, derived from grading: `(p, q)` such that `v_q w` and `u_p v_q w`
/// both have degree in `[0, max_degree]`.
pub fn index_box(wt_u: i64, wt_v: i64, deg_w: i64, max_degree: i64) -> Vec<(i64, i64)> {
    let mut out = Vec::new();
    for mid in 0..=max_degree {
        let q = wt_v + deg_w - mid - 1;
        for fin in 0..=max_degree {
            let p = wt_u + mid - fin - 1;
            out.push((p, q));
        }
    }
    out
}

/// Both sides of weak associativity,
/// `(x0+x2)^l Y(u, x0+x2) Y(v, x2) w` and `(x0+x2)^l Y(Y(u, x0) v, x2) w`,
/// restricted to the monomials of `window`, which must bound both `x0` and
/// `x2`. `Y(u, x0+x2)` is expanded in nonnegative powers of `x2`.
///
/// Each coefficient inside the window is a finite sum and is computed in
/// full; a term needing a degree beyond the module cutoff is an error.
pub fn weak_associativity_sides(
    va: &dyn VertexAlgebra,
    m: &dyn CandidateModule,
    u: &GradedVector,
    v: &GradedVector,
    w: &GradedVector,
    l: i64,
    window: &TruncationWindow,
) -> Result<(LaurentPoly<GradedVector>, LaurentPoly<GradedVector>)> {
    let x0 = Var::from("x0");
    let x2 = Var::from("x2");
    let bounds = |x: &Var| {
        window.bounds(x).ok_or_else(|| Error::WindowTooSmall {
            var: x.to_string(),
            detail: "weak associativity needs explicit bounds".into(),
        })
    };
    let (x0_lo, x0_hi) = bounds(&x0)?;
    let (x2_lo, x2_hi) = bounds(&x2)?;
    let wv = weight_of(v)?;
    let dw = weight_of(w)?;

    // Left: u_a v_b w C(l-a-1, i) x0^{l-a-1-i} x2^{i-b-1}.
    let mut lhs: LaurentPoly<GradedVector> = LaurentPoly::zero();
    for b in (-x2_hi - 1)..(wv + dw) {
        let vw = m.act(v, b, w)?;
        if vw.is_zero() {
            continue;
        }
        for i in 0..=(x2_hi + b + 1) {
            let e2 = i - b - 1;
            if e2 < x2_lo {
                continue;
            }
            for e0 in x0_lo..=x0_hi {
                let a = l - 1 - i - e0;
                let c = binomial(l - a - 1, i);
                if c.is_zero() {
                    continue;
                }
                let r = m.act(u, a, &vw)?;
                let mono = Monomial::from_pairs([(x0.clone(), e0), (x2.clone(), e2)]);
                lhs.add_term(mono, &r, &c);
            }
        }
    }

    // Right: C(l, j) (u_a v)_b w x0^{l-j-a-1} x2^{j-b-1}.
    let mut rhs: LaurentPoly<GradedVector> = LaurentPoly::zero();
    for j in 0..=l.max(0) {
        for e0 in x0_lo..=x0_hi {
            let a = l - j - 1 - e0;
            let uv = va.component(u, a, v)?;
            if uv.is_zero() {
                continue;
            }
            for e2 in x2_lo..=x2_hi {
                let b = j - 1 - e2;
                let r = m.act(&uv, b, w)?;
                let mono = Monomial::from_pairs([(x0.clone(), e0), (x2.clone(), e2)]);
                rhs.add_term(mono, &r, &binomial(l, j));
            }
        }
    }
    Ok((lhs, rhs))
}

/// Result of [`audit_weak_associativity`].
#[derive(Debug, Clone, serde::Serialize)]
pub struct AssociativityAudit {
    pub holds: bool,
    pub triples: usize,
    pub witness: Option<String>,
}

/// Weak associativity with minimal `l` for all basis `u, v` with
/// `wt <= weight` and basis `w` with `deg w <= max_w_degree`, on the box of
/// monomials whose coefficients and intermediate vectors stay in degrees
/// `<= max_degree`.
pub fn audit_weak_associativity(
    va: &dyn VertexAlgebra,
    m: &dyn CandidateModule,
    weight: u32,
    max_w_degree: u32,
    max_degree: u32,
) -> Result<AssociativityAudit> {
    let mut triples = 0;
    let budget = max_degree as i64;
    for u in va.basis_refs(weight) {
        for v in va.basis_refs(weight) {
            for w in m.basis_refs(max_w_degree) {
                let (wu, wv, dw) = (u.0 as i64, v.0 as i64, w.0 as i64);
                // coefficient of x0^e0 x2^e2 has degree wt v + e0 + e2; v_b w has degree <= wt v + deg w + e2
                let x2_hi = budget - wv - dw;
                if x2_hi < 0 || budget < wv {
                    continue;
                }
                let x2_lo = -(wv + dw);
                let x0_hi = budget - wv - x2_hi;
                let x0_lo = -wv - x2_hi - 1;
                let window = TruncationWindow::new()
                    .with("x0", x0_lo, x0_hi)?
                    .with("x2", x2_lo, x2_hi)?;
                let (uv, vv, ww) = (
                    GradedVector::basis(u.0, u.1),
                    GradedVector::basis(v.0, v.1),
                    GradedVector::basis(w.0, w.1),
                );
                let (lhs, rhs) = weak_associativity_sides(va, m, &uv, &vv, &ww, wu + dw, &window)?;
                triples += 1;
                if lhs != rhs {
                    return Ok(AssociativityAudit {
                        holds: false,
                        triples,
                        witness: Some(format!(
                            "u={}, v={}, w={}: {} vs {}",
                            va.label(u),
                            va.label(v),
                            m.label(w),
                            lhs.render(),
                            rhs.render()
                        )),
                    });
                }
            }
        }
    }
    Ok(AssociativityAudit {
        holds: true,
        triples,
        witness: None,
    })
}

/// Which vanishing statement to check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VanishingForm {
    /// `Res_x2 x2^q (x0+x2)^l Y(u, x0+x2) Y(v, x2) w = 0` for `q >= k`.
    Product,
    /// `Res_x2 x2^q (x0+x2)^l Y(Y(u, x0) v, x2) w = 0` for `q >= k`.
    Iterate,
}

/// The `x2`-residue statements as Laurent polynomials in `x0`, coefficientwise.
///
/// Both are series in `x0`; the coefficients for exponents in `x0_range` are
/// each finite sums and are computed in full.
#[allow(clippy::too_many_arguments)]
pub fn vanishing_residue(
    va: &dyn VertexAlgebra,
    m: &dyn CandidateModule,
    u: &GradedVector,
    v: &GradedVector,
    w: &GradedVector,
    q: i64,
    l: i64,
    form: VanishingForm,
    x0_range: (i64, i64),
) -> Result<LaurentPoly<GradedVector>> {
    let x0 = Var::from("x0");
    let wv = weight_of(v)?;
    let dw = weight_of(w)?;
    let mut out: LaurentPoly<GradedVector> = LaurentPoly::zero();
    match form {
        VanishingForm::Product => {
            // Res_x2 x2^q (x0+x2)^{l-a-1} x2^{-b-1} picks i = b - q.
            for b in q..(wv + dw) {
                let vw = m.act(v, b, w)?;
                if vw.is_zero() {
                    continue;
                }
                let i = b - q;
                for e in x0_range.0..=x0_range.1 {
                    let a = l - 1 - i - e;
                    let r = m.act(u, a, &vw)?;
                    out.add_term(Monomial::var(&x0, e), &r, &binomial(l - a - 1, i));
                }
            }
        }
        VanishingForm::Iterate => {
            // (x0+x2)^l x0^{-a-1} x2^{-b-1} with x2^q picks b = q + j.
            for j in 0..=l.max(0) {
                for e in x0_range.0..=x0_range.1 {
                    let a = l - j - 1 - e;
                    let uv = va.component(u, a, v)?;
                    if uv.is_zero() {
                        continue;
                    }
                    let r = m.act(&uv, q + j, w)?;
                    out.add_term(Monomial::var(&x0, e), &r, &binomial(l, j));
                }
            }
        }
    }
    Ok(out)
}

/// `Res_x0 Res_x2 x0^{p-l-i} x2^{q+i} (x0+x2)^l Y(Y(u, x0) v, x2) w`
/// `= sum_j C(l, j) (u_{p-l-i+j} v)_{q+l+i-j} w`.
#[allow(clippy::too_many_arguments)]
pub fn iterate_component_residue(
    va: &dyn VertexAlgebra,
    m: &dyn CandidateModule,
    u: &GradedVector,
    v: &GradedVector,
    w: &GradedVector,
    p: i64,
    q: i64,
    l: i64,
    i: i64,
) -> Result<GradedVector> {
    let mut out = GradedVector::zero();
    for j in 0..=l {
        let uv = va.component(u, p - l - i + j, v)?;
        if uv.is_zero() {
            continue;
        }
        out.axpy(&binomial(l, j), &m.act(&uv, q + l + i - j, w)?);
    }
    Ok(out)
}

/// Component form of the weight-free vanishing statement:
/// `sum_{j=0}^{wt u+deg w} C(wt u+deg w, j) (u_{j+m} v)_{K+wt u+wt v-j-m-2} w`,
/// which vanishes for `m <= K - 2 deg w - 2` in a genuine module.
pub fn weight_free_component(
    va: &dyn VertexAlgebra,
    m_mod: &dyn CandidateModule,
    u: &GradedVector,
    v: &GradedVector,
    w: &GradedVector,
    big_k: i64,
    m: i64,
) -> Result<GradedVector> {
    let wu = weight_of(u)?;
    let wv = weight_of(v)?;
    let dw = weight_of(w)?;
    let top = wu + dw;
    let mut out = GradedVector::zero();
    for j in 0..=top {
        let uv = va.component(u, j + m, v)?;
        if uv.is_zero() {
            continue;
        }
        out.axpy(
            &binomial(top, j),
            &m_mod.act(&uv, big_k + wu + wv - j - m - 2, w)?,
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::rat;

    #[test]
    fn graded_vector_arithmetic() {
        let a = GradedVector::from_entries([((1, 0), rat(2)), ((2, 1), rat(1))]);
        let b = GradedVector::from_entries([((1, 0), rat(-2))]);
        let s = a.add(&b);
        assert_eq!(s, GradedVector::basis(2, 1));
        assert_eq!(s.homogeneous_grade(), Some(2));
        assert_eq!(a.homogeneous_grade(), None);
        assert_eq!(a.homogeneous_parts().len(), 2);
        assert!(a.sub(&a).is_zero());
    }

    #[test]
    fn index_box_is_graded() {
        let b = index_box(1, 1, 0, 1);
        assert!(b.contains(&(0, 0)));
        assert!(b.contains(&(1, -1)));
        assert!(b.contains(&(-1, 0)));
        assert_eq!(b.len(), 4);
    }
}
