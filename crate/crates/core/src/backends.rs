//! Concrete vertex algebras generated by a single field: the rank-one
//! Heisenberg algebra with its Fock modules, and the universal Virasoro
//! vertex algebra.
//!
//! Both share one engine. Basis vectors are partitions labelling ordered
//! monomials `X(-n1) X(-n2) ... X(-nk) w` with `n1 >= n2 >= ...`, where `X` is
//! the mode family of the generating field `a` of weight `h` (`a_k = X(k-h+1)`).
//! Components of arbitrary basis elements come from the iterate formula
//!
//! `(a_m b)_N = sum_j (-1)^j C(m, j) [a_{m-j} b_{N+j} - (-1)^m b_{m+N-j} a_j]`
//!
//! applied to `a_m b` with `b` the shorter monomial, memoized per label.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, RwLock};

use num_traits::{One, Zero};

use crate::arith::{binomial, format_rational, rat, sign_power, Rational};
use crate::error::{Error, Result};
use crate::voa::{BasisRef, CandidateModule, GradedVector, VertexAlgebra};

/// Weakly decreasing list of positive parts.
pub type Partition = Vec<u32>;

type PVec = BTreeMap<Partition, Rational>;

fn pvec_add(into: &mut PVec, p: &Partition, c: &Rational) {
    if c.is_zero() {
        return;
    }
    let slot = into.entry(p.clone()).or_insert_with(Rational::zero);
    *slot += c;
    if slot.is_zero() {
        into.remove(p);
    }
}

fn weight(p: &Partition) -> i64 {
    p.iter().map(|&x| x as i64).sum()
}

fn insert_part(p: &Partition, part: u32) -> Partition {
    let mut q = p.clone();
    let pos = q.iter().position(|&x| x < part).unwrap_or(q.len());
    q.insert(pos, part);
    q
}

/// Partitions of `n` with all parts at least `min_part`, largest first part
/// first, then lexicographically decreasing.
pub fn partitions(n: u32, min_part: u32) -> Vec<Partition> {
    fn go(n: u32, max: u32, min: u32, prefix: &mut Partition, out: &mut Vec<Partition>) {
        if n == 0 {
            out.push(prefix.clone());
            return;
        }
        for part in (min..=max.min(n)).rev() {
            prefix.push(part);
            go(n - part, part, min, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    go(n, n, min_part.max(1), &mut Vec::new(), &mut out);
    out
}

/// The mode algebra of the generating field acting on one module.
pub trait ModeRules: Send + Sync {
    /// Weight `h` of the generating field.
    fn field_weight(&self) -> i64;

    /// Smallest part allowed in a basis label.
    fn min_part(&self) -> u32;

    /// `X(k)` applied to a basis monomial.
    fn apply(&self, k: i64, p: &Partition) -> PVec;

    fn symbol(&self) -> &'static str;
}

/// Rank-one Heisenberg modes `α(k)` on the Fock module with `α(0) = λ`.
#[derive(Debug, Clone)]
pub struct HeisenbergRules {
    lambda: Rational,
}

impl ModeRules for HeisenbergRules {
    fn field_weight(&self) -> i64 {
        1
    }

    fn min_part(&self) -> u32 {
        1
    }

    fn apply(&self, k: i64, p: &Partition) -> PVec {
        let mut out = PVec::new();
        match k {
            k if k < 0 => {
                out.insert(insert_part(p, (-k) as u32), Rational::one());
            }
            0 => pvec_add(&mut out, p, &self.lambda),
            k => {
                let count = p.iter().filter(|&&x| x as i64 == k).count() as i64;
                if count > 0 {
                    let mut q = p.clone();
                    let pos = q.iter().position(|&x| x as i64 == k).unwrap();
                    q.remove(pos);
                    out.insert(q, rat(k * count));
                }
            }
        }
        out
    }

    fn symbol(&self) -> &'static str {
        "a"
    }
}

#[cfg(feature = "virasoro")]
/// Virasoro modes `L(k)` on the universal vacuum module with central charge `c`,
/// straightened into decreasing PBW order.
#[derive(Debug)]
pub struct VirasoroRules {
    c: Rational,
    memo: RwLock<HashMap<(i64, Partition), PVec>>,
}

#[cfg(feature = "virasoro")]
impl VirasoroRules {
    fn straighten(&self, k: i64, p: &Partition) -> PVec {
        if let Some(hit) = self.memo.read().unwrap().get(&(k, p.clone())) {
            return hit.clone();
        }
        let mut out = PVec::new();
        match p.first() {
            None => {
                if k <= -2 {
                    out.insert(vec![(-k) as u32], Rational::one());
                }
            }
            Some(&n1) if -k >= n1 as i64 => {
                out.insert(insert_part(p, (-k) as u32), Rational::one());
            }
            Some(&n1) => {
                let n1 = n1 as i64;
                let rest: Partition = p[1..].to_vec();
                // L(k) L(-n1) R = L(-n1) L(k) R + (k+n1) L(k-n1) R + c/12 (k^3-k) δ_{k,n1} R
                for (q, c) in self.straighten(k, &rest) {
                    for (r, d) in self.straighten(-n1, &q) {
                        pvec_add(&mut out, &r, &(&c * &d));
                    }
                }
                for (q, c) in self.straighten(k - n1, &rest) {
                    pvec_add(&mut out, &q, &(c * rat(k + n1)));
                }
                if k == n1 {
                    let central = &self.c * rat(k * k * k - k) / rat(12);
                    pvec_add(&mut out, &rest, &central);
                }
            }
        }
        self.memo
            .write()
            .unwrap()
            .insert((k, p.clone()), out.clone());
        out
    }
}

#[cfg(feature = "virasoro")]
impl ModeRules for VirasoroRules {
    fn field_weight(&self) -> i64 {
        2
    }

    fn min_part(&self) -> u32 {
        2
    }

    fn apply(&self, k: i64, p: &Partition) -> PVec {
        self.straighten(k, p)
    }

    fn symbol(&self) -> &'static str {
        "L"
    }
}

type MemoKey = (Partition, i64, Partition);

/// Component engine: the algebra generated by one field acting on a module
/// whose basis is labelled by partitions. Construction fixes the largest
/// grade any computation may reach.
pub struct ModeEngine<R> {
    rules: R,
    cutoff: u32,
    bases: Vec<Vec<Partition>>,
    index: HashMap<Partition, usize>,
    memo: RwLock<HashMap<MemoKey, Arc<PVec>>>,
}

impl<R: ModeRules> ModeEngine<R> {
    fn new(rules: R, cutoff: u32) -> Self {
        let bases: Vec<Vec<Partition>> = (0..=cutoff)
            .map(|n| partitions(n, rules.min_part()))
            .collect();
        let index = bases
            .iter()
            .flat_map(|b| b.iter().enumerate().map(|(i, p)| (p.clone(), i)))
            .collect();
        ModeEngine {
            rules,
            cutoff,
            bases,
            index,
            memo: RwLock::new(HashMap::new()),
        }
    }

    pub fn cutoff(&self) -> u32 {
        self.cutoff
    }

    pub fn dim(&self, grade: u32) -> usize {
        self.bases.get(grade as usize).map_or(0, Vec::len)
    }

    pub fn partition(&self, b: BasisRef) -> &Partition {
        &self.bases[b.0 as usize][b.1]
    }

    pub fn basis_ref(&self, p: &Partition) -> Option<BasisRef> {
        self.index.get(p).map(|&i| (weight(p) as u32, i))
    }

    pub fn label(&self, b: BasisRef, tail: &str) -> String {
        let p = self.partition(b);
        let sym = self.rules.symbol();
        let mut s = String::new();
        for part in p {
            s.push_str(&format!("{sym}(-{part})"));
        }
        s.push_str(tail);
        s
    }

    fn to_graded(&self, v: &PVec) -> Result<GradedVector> {
        let mut out = GradedVector::zero();
        for (p, c) in v {
            let b = self.basis_ref(p).ok_or(Error::CutoffExceeded {
                what: "basis weight",
                needed: weight(p),
                cutoff: self.cutoff as i64,
            })?;
            out.add_entry(b, c);
        }
        Ok(out)
    }

    fn pvec_of(&self, v: &GradedVector) -> PVec {
        let mut out = PVec::new();
        for (b, c) in v.entries() {
            pvec_add(&mut out, self.partition(*b), c);
        }
        out
    }

    /// `X(k)` on a module vector.
    pub fn apply_mode(&self, k: i64, v: &GradedVector) -> Result<GradedVector> {
        let mut out = PVec::new();
        for (p, c) in self.pvec_of(v) {
            for (q, d) in self.rules.apply(k, &p) {
                pvec_add(&mut out, &q, &(&c * &d));
            }
        }
        self.to_graded(&out)
    }

    fn component_labels(&self, u: &Partition, n: i64, w: &Partition) -> Result<Arc<PVec>> {
        let target = weight(u) + weight(w) - n - 1;
        if target < 0 {
            return Ok(Arc::new(PVec::new()));
        }
        if target > self.cutoff as i64 {
            return Err(Error::CutoffExceeded {
                what: "component grade",
                needed: target,
                cutoff: self.cutoff as i64,
            });
        }
        if u.is_empty() {
            let mut out = PVec::new();
            if n == -1 {
                out.insert(w.clone(), Rational::one());
            }
            return Ok(Arc::new(out));
        }
        let key = (u.clone(), n, w.clone());
        if let Some(hit) = self.memo.read().unwrap().get(&key) {
            return Ok(hit.clone());
        }

        let h = self.rules.field_weight();
        let n1 = u[0] as i64;
        let rest: Partition = u[1..].to_vec();
        let m = h - 1 - n1;
        let sign_m = sign_power(m);
        let mut out = PVec::new();

        let first_top = weight(&rest) + weight(w) - n - 1;
        for j in 0..=first_top {
            let c = sign_power(j) * binomial(m, j);
            for (q, d) in self.component_labels(&rest, n + j, w)?.iter() {
                for (r, e) in self.rules.apply(m - j - h + 1, q) {
                    pvec_add(&mut out, &r, &(&c * d * e));
                }
            }
        }
        let second_top = weight(w) + h - 1;
        for j in 0..=second_top {
            let c = -(sign_power(j) * binomial(m, j) * &sign_m);
            for (q, d) in self.rules.apply(j - h + 1, w) {
                for (r, e) in self.component_labels(&rest, m + n - j, &q)?.iter() {
                    pvec_add(&mut out, r, &(&c * &d * e));
                }
            }
        }
        let out = Arc::new(out);
        self.memo.write().unwrap().insert(key, out.clone());
        Ok(out)
    }

    pub fn component(&self, u: BasisRef, n: i64, w: BasisRef) -> Result<GradedVector> {
        let r = self.component_labels(self.partition(u), n, self.partition(w))?;
        self.to_graded(&r)
    }

    fn pbw_split(&self, u: BasisRef) -> Option<(i64, BasisRef)> {
        let p = self.partition(u);
        let first = *p.first()? as i64;
        let rest: Partition = p[1..].to_vec();
        Some((
            self.rules.field_weight() - 1 - first,
            self.basis_ref(&rest)?,
        ))
    }

    pub fn memo_len(&self) -> usize {
        self.memo.read().unwrap().len()
    }
}

/// The rank-one Heisenberg vertex algebra, generated by `α = α(-1)1` of weight 1.
pub struct Heisenberg {
    engine: ModeEngine<HeisenbergRules>,
}

impl Heisenberg {
    pub fn new(cutoff: u32) -> Self {
        Heisenberg {
            engine: ModeEngine::new(
                HeisenbergRules {
                    lambda: Rational::zero(),
                },
                cutoff,
            ),
        }
    }

    pub fn engine(&self) -> &ModeEngine<HeisenbergRules> {
        &self.engine
    }

    /// `α = α(-1)1`.
    pub fn alpha(&self) -> GradedVector {
        GradedVector::basis(1, 0)
    }

    /// The basis element `α(-n1)...α(-nk)1`.
    pub fn monomial(&self, parts: &[u32]) -> Result<GradedVector> {
        basis_vector(&self.engine, parts)
    }

    /// `α(m)` for `m >= 0`, applied by the commutation relations.
    pub fn annihilator(&self, m: i64, v: &GradedVector) -> Result<GradedVector> {
        if m < 0 {
            return Err(Error::InvalidArgument(format!(
                "annihilation mode must be >= 0, got {m}"
            )));
        }
        self.engine.apply_mode(m, v)
    }
}

fn basis_vector<R: ModeRules>(engine: &ModeEngine<R>, parts: &[u32]) -> Result<GradedVector> {
    let mut p = parts.to_vec();
    p.sort_unstable_by(|a, b| b.cmp(a));
    let b = engine.basis_ref(&p).ok_or_else(|| {
        Error::InvalidArgument(format!("no basis element {parts:?} within cutoff"))
    })?;
    Ok(GradedVector::basis(b.0, b.1))
}

impl VertexAlgebra for Heisenberg {
    fn name(&self) -> String {
        "heisenberg".into()
    }

    fn dim(&self, weight: u32) -> usize {
        self.engine.dim(weight)
    }

    fn label(&self, b: BasisRef) -> String {
        self.engine.label(b, "1")
    }

    fn weight_cutoff(&self) -> u32 {
        self.engine.cutoff
    }

    fn component_basis(&self, u: BasisRef, n: i64, v: BasisRef) -> Result<GradedVector> {
        self.engine.component(u, n, v)
    }
    fn strong_generator(&self) -> Option<BasisRef> {
        Some((1, 0))
    }

    fn pbw_split(&self, u: BasisRef) -> Option<(i64, BasisRef)> {
        self.engine.pbw_split(u)
    }
}

/// Fock module of the Heisenberg algebra generated by `w_λ` with `α(0) = λ`.
pub struct FockModule {
    engine: ModeEngine<HeisenbergRules>,
}

impl FockModule {
    pub fn new(lambda: Rational, cutoff: u32) -> Self {
        FockModule {
            engine: ModeEngine::new(HeisenbergRules { lambda }, cutoff),
        }
    }

    pub fn lambda(&self) -> &Rational {
        &self.engine.rules.lambda
    }

    pub fn lowest(&self) -> GradedVector {
        GradedVector::basis(0, 0)
    }

    pub fn monomial(&self, parts: &[u32]) -> Result<GradedVector> {
        basis_vector(&self.engine, parts)
    }

    pub fn partition(&self, b: BasisRef) -> &Partition {
        self.engine.partition(b)
    }

    pub fn basis_ref(&self, p: &Partition) -> Option<BasisRef> {
        self.engine.basis_ref(p)
    }

    pub fn annihilator(&self, m: i64, v: &GradedVector) -> Result<GradedVector> {
        if m < 0 {
            return Err(Error::InvalidArgument(format!(
                "annihilation mode must be >= 0, got {m}"
            )));
        }
        self.engine.apply_mode(m, v)
    }

    pub fn creation(&self, m: i64, v: &GradedVector) -> Result<GradedVector> {
        self.engine.apply_mode(-m, v)
    }
}

impl CandidateModule for FockModule {
    fn name(&self) -> String {
        format!("fock(lambda={})", format_rational(self.lambda()))
    }

    fn dim(&self, degree: u32) -> usize {
        self.engine.dim(degree)
    }

    fn label(&self, b: BasisRef) -> String {
        self.engine.label(b, "w")
    }

    fn degree_cutoff(&self) -> u32 {
        self.engine.cutoff
    }

    fn act_basis(&self, u: BasisRef, n: i64, w: BasisRef) -> Result<GradedVector> {
        // Algebra labels and module labels are the same partitions.
        let label = if u.0 <= self.engine.cutoff {
            self.engine.partition(u).clone()
        } else {
            partitions_label(u, &self.engine)?
        };
        let r = self
            .engine
            .component_labels(&label, n, self.engine.partition(w))?;
        self.engine.to_graded(&r)
    }
}

fn partitions_label<R: ModeRules>(u: BasisRef, engine: &ModeEngine<R>) -> Result<Partition> {
    let ps = partitions(u.0, engine.rules.min_part());
    ps.get(u.1)
        .cloned()
        .ok_or_else(|| Error::InvalidArgument(format!("no algebra basis element {u:?}")))
}

#[cfg(feature = "virasoro")]
/// The universal Virasoro vertex algebra with central charge `c`, generated
/// by `ω = L(-2)1` of weight 2.
pub struct Virasoro {
    engine: ModeEngine<VirasoroRules>,
}

#[cfg(feature = "virasoro")]
impl Virasoro {
    pub fn new(c: Rational, cutoff: u32) -> Self {
        let rules = VirasoroRules {
            c,
            memo: RwLock::new(HashMap::new()),
        };
        Virasoro {
            engine: ModeEngine::new(rules, cutoff),
        }
    }

    pub fn central_charge(&self) -> &Rational {
        &self.engine.rules.c
    }

    pub fn omega(&self) -> GradedVector {
        GradedVector::basis(2, 0)
    }

    pub fn monomial(&self, parts: &[u32]) -> Result<GradedVector> {
        basis_vector(&self.engine, parts)
    }
}

#[cfg(feature = "virasoro")]
impl VertexAlgebra for Virasoro {
    fn name(&self) -> String {
        format!("virasoro:c={}", format_rational(self.central_charge()))
    }

    fn dim(&self, weight: u32) -> usize {
        self.engine.dim(weight)
    }

    fn label(&self, b: BasisRef) -> String {
        self.engine.label(b, "1")
    }

    fn weight_cutoff(&self) -> u32 {
        self.engine.cutoff
    }

    fn component_basis(&self, u: BasisRef, n: i64, v: BasisRef) -> Result<GradedVector> {
        self.engine.component(u, n, v)
    }
    fn strong_generator(&self) -> Option<BasisRef> {
        Some((2, 0))
    }

    fn pbw_split(&self, u: BasisRef) -> Option<(i64, BasisRef)> {
        self.engine.pbw_split(u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::ratio;

    #[test]
    fn partition_counts() {
        let counts: Vec<usize> = (0..=6).map(|n| partitions(n, 1).len()).collect();
        assert_eq!(counts, vec![1, 1, 2, 3, 5, 7, 11]);
        let vir: Vec<usize> = (0..=6).map(|n| partitions(n, 2).len()).collect();
        assert_eq!(vir, vec![1, 0, 1, 1, 2, 2, 4]);
        assert_eq!(partitions(3, 1), vec![vec![3], vec![2, 1], vec![1, 1, 1]]);
    }

    #[test]
    fn heisenberg_alpha_modes() {
        let h = Heisenberg::new(6);
        let a = h.alpha();
        assert_eq!(h.component(&a, 1, &a).unwrap(), h.vacuum());
        assert!(h.component(&a, 0, &a).unwrap().is_zero());
        assert!(h.component(&a, 2, &a).unwrap().is_zero());
        assert_eq!(
            h.component(&a, -1, &a).unwrap(),
            h.monomial(&[1, 1]).unwrap()
        );
        let v = h.monomial(&[2, 1]).unwrap();
        assert_eq!(h.component(&h.vacuum(), -1, &v).unwrap(), v);
        assert!(h.component(&h.vacuum(), 0, &v).unwrap().is_zero());
        let a2 = h.monomial(&[2]).unwrap();
        assert_eq!(h.component(&a2, -1, &h.vacuum()).unwrap(), a2);
    }

    #[test]
    fn heisenberg_annihilators() {
        let h = Heisenberg::new(4);
        assert_eq!(h.annihilator(1, &h.alpha()).unwrap(), h.vacuum());
        assert!(h
            .annihilator(2, &h.monomial(&[1, 1]).unwrap())
            .unwrap()
            .is_zero());
        let f = FockModule::new(ratio(3, 2), 4);
        assert_eq!(
            f.annihilator(0, &f.lowest()).unwrap(),
            f.lowest().scaled(&ratio(3, 2))
        );
    }

    #[test]
    fn fock_quadratic_modes() {
        let lam = rat(3);
        let f = FockModule::new(lam.clone(), 5);
        let h = Heisenberg::new(5);
        let aa = h.monomial(&[1, 1]).unwrap();
        let w = f.lowest();
        assert_eq!(f.act(&aa, 1, &w).unwrap(), w.scaled(&(&lam * &lam)));
        // (α(-1)^2 1)_0 α(-1) w_3 = 6 α(-1)^2 w + 2 α(-2) w
        let a1w = f.monomial(&[1]).unwrap();
        let expect = f
            .monomial(&[1, 1])
            .unwrap()
            .scaled(&rat(6))
            .add(&f.monomial(&[2]).unwrap().scaled(&rat(2)));
        assert_eq!(f.act(&aa, 0, &a1w).unwrap(), expect);
    }

    #[cfg(feature = "virasoro")]
    #[test]
    fn virasoro_omega_modes() {
        let c = ratio(1, 2);
        let v = Virasoro::new(c.clone(), 6);
        let w = v.omega();
        assert_eq!(
            v.component(&w, 3, &w).unwrap(),
            v.vacuum().scaled(&(c / rat(2)))
        );
        assert_eq!(v.component(&w, 1, &w).unwrap(), w.scaled(&rat(2)));
        assert!(v.component(&w, 2, &w).unwrap().is_zero());
        assert_eq!(v.component(&w, 0, &w).unwrap(), v.monomial(&[3]).unwrap());
        assert_eq!(
            v.component(&w, -1, &w).unwrap(),
            v.monomial(&[2, 2]).unwrap()
        );
    }

    #[test]
    fn cutoff_is_enforced() {
        let h = Heisenberg::new(2);
        let a = h.alpha();
        let aa = h.monomial(&[1, 1]).unwrap();
        assert!(matches!(
            h.component(&a, -1, &aa),
            Err(Error::CutoffExceeded { .. })
        ));
    }
}
