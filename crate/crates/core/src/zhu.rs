//! Zhu's algebra `A(V) = V/O(V)`, its modules, and the top level of a module.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::{Arc, RwLock};

use num_traits::{One, Zero};
use serde::Serialize;

use crate::arith::binomial;
use crate::error::{Error, Result};
use crate::linalg::{
    intersect_with_coordinate_subspace, kernel, DenseMatrix, EchelonBasis, SparseMatrix, SparseVec,
    SubspaceBasis,
};
use crate::voa::{BasisRef, CandidateModule, GradedVector, VertexAlgebra};

/// `u * v = sum_{j=0}^{wt u} C(wt u, j) u_{j-1} v`, extended bilinearly over
/// the homogeneous parts of `u`.
pub fn star(va: &dyn VertexAlgebra, u: &GradedVector, v: &GradedVector) -> Result<GradedVector> {
    let mut out = GradedVector::zero();
    for (wt, part) in u.homogeneous_parts() {
        let wt = wt as i64;
        for j in 0..=wt {
            out.axpy(&binomial(wt, j), &va.component(&part, j - 1, v)?);
        }
    }
    Ok(out)
}

/// `Res_x x^n Y((x+1)^{L(0)} u, x) v = sum_{j=0}^{wt u} C(wt u, j) u_{n+j} v`.
pub fn ov_value(
    va: &dyn VertexAlgebra,
    u: &GradedVector,
    v: &GradedVector,
    n: i64,
) -> Result<GradedVector> {
    let mut out = GradedVector::zero();
    for (wt, part) in u.homogeneous_parts() {
        let wt = wt as i64;
        for j in 0..=wt {
            out.axpy(&binomial(wt, j), &va.component(&part, n + j, v)?);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OvGenerator {
    pub u: BasisRef,
    pub v: BasisRef,
    pub n: i64,
    pub value: GradedVector,
}

impl OvGenerator {
    /// Weights the value can occupy: `[wt v - n - 1, wt u + wt v - n - 1]`.
    pub fn support(&self) -> (i64, i64) {
        let (wu, wv) = (self.u.0 as i64, self.v.0 as i64);
        (wv - self.n - 1, wu + wv - self.n - 1)
    }
}

/// Every generator with basis `u, v` and `n <= -2` whose support lies in
/// weights `<= n_support`.
pub fn ov_generators(va: &dyn VertexAlgebra, n_support: u32) -> Result<Vec<OvGenerator>> {
    let top = n_support as i64;
    let mut out = Vec::new();
    let basis = va.basis_refs(n_support);
    for &u in &basis {
        for &v in &basis {
            let base = u.0 as i64 + v.0 as i64;
            // highest weight wt u + wt v - n - 1 <= top
            for n in (base - 1 - top..=-2).rev() {
                let value = ov_value(
                    va,
                    &GradedVector::basis(u.0, u.1),
                    &GradedVector::basis(v.0, v.1),
                    n,
                )?;
                out.push(OvGenerator { u, v, n, value });
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StabilizationStep {
    pub slack: u32,
    pub support: u32,
    pub generators: usize,
    pub relation_dim: usize,
}

/// Ordering of the basis of `V_{<= top}` used for elimination: heaviest
/// weights first, so pivots fall on heavy elements and light elements remain
/// as coset representatives.
fn elimination_columns(va: &dyn VertexAlgebra, top: u32) -> Vec<BasisRef> {
    let mut cols = va.basis_refs(top);
    cols.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    cols
}

/// Truncated presentation of `A(V)` on `V_{<= cutoff}`.
#[derive(Debug, Clone)]
pub struct ZhuPresentation {
    pub cutoff: u32,
    pub slack: u32,
    pub trace: Vec<StabilizationStep>,
    /// Basis of `V_{<= cutoff}` in elimination order.
    pub columns: Vec<BasisRef>,
    /// `O(V) ∩ V_{<= cutoff}` in the coordinates of `columns`.
    pub relations: SubspaceBasis,
    /// Coset representatives, a subset of `columns`.
    pub basis: Vec<BasisRef>,
    /// `(i, j) -> b_i * b_j` in coordinates of `basis`, for pairs whose
    /// weights sum to at most the cutoff.
    pub structure: BTreeMap<(usize, usize), SparseVec>,
}

impl ZhuPresentation {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    fn column_of(&self) -> HashMap<BasisRef, usize> {
        self.columns
            .iter()
            .enumerate()
            .map(|(i, b)| (*b, i))
            .collect()
    }

    /// Coordinates of the class of `v` in the representative basis.
    pub fn coordinates(&self, v: &GradedVector) -> Result<SparseVec> {
        let col = self.column_of();
        let mut sv = SparseVec::new();
        for (b, c) in v.entries() {
            let idx = col.get(b).ok_or(Error::CutoffExceeded {
                what: "Zhu cutoff",
                needed: b.0 as i64,
                cutoff: self.cutoff as i64,
            })?;
            sv.insert(*idx, c.clone());
        }
        self.relations.reduce(&mut sv);
        let basis_pos: HashMap<BasisRef, usize> = self
            .basis
            .iter()
            .enumerate()
            .map(|(i, b)| (*b, i))
            .collect();
        Ok(sv
            .into_iter()
            .map(|(c, x)| (basis_pos[&self.columns[c]], x))
            .collect())
    }

    /// Canonical representative of the class of `v`.
    pub fn representative(&self, v: &GradedVector) -> Result<GradedVector> {
        Ok(self.from_coordinates(&self.coordinates(v)?))
    }

    pub fn from_coordinates(&self, c: &SparseVec) -> GradedVector {
        GradedVector::from_entries(c.iter().map(|(&i, x)| (self.basis[i], x.clone())))
    }

    pub fn congruent(&self, a: &GradedVector, b: &GradedVector) -> Result<bool> {
        Ok(self.coordinates(&a.sub(b))?.is_empty())
    }

    /// Star product of two classes given by coordinates, as long as the
    /// representatives' weights stay within the cutoff.
    pub fn star_classes(
        &self,
        va: &dyn VertexAlgebra,
        a: &SparseVec,
        b: &SparseVec,
    ) -> Result<SparseVec> {
        let prod = star(va, &self.from_coordinates(a), &self.from_coordinates(b))?;
        self.coordinates(&prod)
    }

    /// Checks associativity of the star product on every basis triple whose
    /// weights sum to at most the cutoff; returns the first failing triple.
    pub fn check_associative(
        &self,
        va: &dyn VertexAlgebra,
    ) -> Result<Option<(usize, usize, usize)>> {
        let n = self.dim();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let w = self.basis[i].0 + self.basis[j].0 + self.basis[k].0;
                    if w > self.cutoff {
                        continue;
                    }
                    let e = |x: usize| SparseVec::from([(x, num_traits::One::one())]);
                    let left =
                        self.star_classes(va, &self.star_classes(va, &e(i), &e(j))?, &e(k))?;
                    let right =
                        self.star_classes(va, &e(i), &self.star_classes(va, &e(j), &e(k))?)?;
                    if left != right {
                        return Ok(Some((i, j, k)));
                    }
                }
            }
        }
        Ok(None)
    }

    pub fn check_commutative(&self) -> Option<(usize, usize)> {
        self.structure
            .iter()
            .find(|((i, j), v)| self.structure.get(&(*j, *i)) != Some(v))
            .map(|(k, _)| *k)
    }

    /// Whether the star powers of `g` span the truncated quotient.
    pub fn generated_by(&self, va: &dyn VertexAlgebra, g: &GradedVector) -> Result<bool> {
        let gw = g.max_grade().unwrap_or(0).max(1);
        let mut span = EchelonBasis::new(self.dim());
        let mut power = va.vacuum();
        let mut weight = 0;
        loop {
            span.insert(self.coordinates(&power)?);
            weight += gw;
            if weight > self.cutoff {
                break;
            }
            power = star(va, g, &power)?;
        }
        Ok(span.rank() == self.dim())
    }
}

/// Computes `O(V) ∩ V_{<= n}` from generators supported up to `n + slack`,
/// raising the slack by `step` until two consecutive slacks give the same
/// intersection dimension.
pub fn zhu_quotient(
    va: &dyn VertexAlgebra,
    n: u32,
    step: u32,
    ceiling: u32,
) -> Result<ZhuPresentation> {
    if step == 0 {
        return Err(Error::InvalidArgument("slack step must be positive".into()));
    }
    let mut trace = Vec::new();
    let mut previous: Option<usize> = None;
    let mut slack = 0;
    loop {
        let support = n + slack;
        if support > va.weight_cutoff() {
            return Err(Error::CutoffExceeded {
                what: "algebra weight",
                needed: support as i64,
                cutoff: va.weight_cutoff() as i64,
            });
        }
        let cols = elimination_columns(va, support);
        let col_of: HashMap<BasisRef, usize> =
            cols.iter().enumerate().map(|(i, b)| (*b, i)).collect();
        let gens = ov_generators(va, support)?;
        let mut e = EchelonBasis::new(cols.len());
        for g in &gens {
            let sv: SparseVec = g
                .value
                .entries()
                .map(|(b, c)| (col_of[b], c.clone()))
                .collect();
            e.insert(sv);
        }
        let keep: BTreeSet<usize> = (0..cols.len()).filter(|&i| cols[i].0 <= n).collect();
        let inter = intersect_with_coordinate_subspace(&e.into_rref(), &keep);
        trace.push(StabilizationStep {
            slack,
            support,
            generators: gens.len(),
            relation_dim: inter.rank(),
        });
        if previous == Some(inter.rank()) {
            let window: Vec<BasisRef> = keep.iter().map(|&i| cols[i]).collect();
            return finish(va, n, slack, trace, window, inter);
        }
        previous = Some(inter.rank());
        if slack + step > ceiling {
            let dims: Vec<String> = trace
                .iter()
                .map(|s| format!("slack {}: {}", s.slack, s.relation_dim))
                .collect();
            return Err(Error::Unstable {
                cutoff: n,
                trace: dims.join(", "),
            });
        }
        slack += step;
    }
}

fn finish(
    va: &dyn VertexAlgebra,
    cutoff: u32,
    slack: u32,
    trace: Vec<StabilizationStep>,
    columns: Vec<BasisRef>,
    relations: SubspaceBasis,
) -> Result<ZhuPresentation> {
    let basis: Vec<BasisRef> = relations
        .free_cols()
        .into_iter()
        .map(|c| columns[c])
        .collect();
    let mut pres = ZhuPresentation {
        cutoff,
        slack,
        trace,
        columns,
        relations,
        basis,
        structure: BTreeMap::new(),
    };
    let n = pres.dim();
    let mut structure = BTreeMap::new();
    for i in 0..n {
        for j in 0..n {
            let (bi, bj) = (pres.basis[i], pres.basis[j]);
            if bi.0 + bj.0 > cutoff {
                continue;
            }
            let prod = star(
                va,
                &GradedVector::basis(bi.0, bi.1),
                &GradedVector::basis(bj.0, bj.1),
            )?;
            structure.insert((i, j), pres.coordinates(&prod)?);
        }
    }
    pres.structure = structure;
    Ok(pres)
}

/// A finite-dimensional `A(V)`-module, given either by the image of the
/// strong generator (every other `ρ(u)` follows from the Zhu relations) or by
/// an explicit table on algebra basis elements.
pub struct AVModule {
    va: Arc<dyn VertexAlgebra>,
    dim: usize,
    generator_image: Option<DenseMatrix>,
    table: RwLock<HashMap<BasisRef, DenseMatrix>>,
    name: String,
}

impl AVModule {
    pub fn from_generator(
        va: Arc<dyn VertexAlgebra>,
        image: DenseMatrix,
        name: impl Into<String>,
    ) -> Result<Self> {
        if image.rows != image.cols {
            return Err(Error::DimensionMismatch {
                expected: image.rows,
                got: image.cols,
            });
        }
        if va.strong_generator().is_none() {
            return Err(Error::InvalidArgument(format!(
                "{} has no strong generator",
                va.name()
            )));
        }
        Ok(AVModule {
            va,
            dim: image.rows,
            generator_image: Some(image),
            table: RwLock::new(HashMap::new()),
            name: name.into(),
        })
    }

    pub fn from_table(
        va: Arc<dyn VertexAlgebra>,
        dim: usize,
        table: HashMap<BasisRef, DenseMatrix>,
        name: impl Into<String>,
    ) -> Self {
        AVModule {
            va,
            dim,
            generator_image: None,
            table: RwLock::new(table),
            name: name.into(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn algebra(&self) -> &Arc<dyn VertexAlgebra> {
        &self.va
    }

    pub fn generator_image(&self) -> Option<&DenseMatrix> {
        self.generator_image.as_ref()
    }

    /// `ρ(u)` for a basis element `u`.
    pub fn rho_basis(&self, u: BasisRef) -> Result<DenseMatrix> {
        if let Some(m) = self.table.read().unwrap().get(&u) {
            return Ok(m.clone());
        }
        let Some(image) = &self.generator_image else {
            return Err(Error::CutoffExceeded {
                what: "A(V)-module table weight",
                needed: u.0 as i64,
                cutoff: self
                    .table
                    .read()
                    .unwrap()
                    .keys()
                    .map(|b| b.0 as i64)
                    .max()
                    .unwrap_or(0),
            });
        };
        let m = if u.0 == 0 {
            DenseMatrix::identity(self.dim)
        } else if Some(u) == self.va.strong_generator() {
            image.clone()
        } else {
            let (m, rest) = self.va.pbw_split(u).ok_or_else(|| {
                Error::InvalidArgument(format!("{} is not a PBW monomial", self.va.label(u)))
            })?;
            let a = self.va.strong_generator().unwrap();
            let h = a.0 as i64;
            let av = GradedVector::basis(a.0, a.1);
            let rv = GradedVector::basis(rest.0, rest.1);
            // a * u' = sum_j C(h, j) a_{j-1} u', and sum_j C(h, j) a_{m+j} u' ∈ O(V) for m <= -2.
            let mut out = if m == -1 {
                image.mul(&self.rho_basis(rest)?)?
            } else {
                DenseMatrix::zero(self.dim, self.dim)
            };
            for j in 1..=h {
                let term = self.va.component(&av, m + j, &rv)?;
                out.add_scaled(&-binomial(h, j), &self.rho(&term)?);
            }
            out
        };
        self.table.write().unwrap().insert(u, m.clone());
        Ok(m)
    }

    pub fn rho(&self, u: &GradedVector) -> Result<DenseMatrix> {
        let mut out = DenseMatrix::zero(self.dim, self.dim);
        for (b, c) in u.entries() {
            out.add_scaled(c, &self.rho_basis(*b)?);
        }
        Ok(out)
    }

    /// Checks that `ρ` kills `O(V) ∩ V_{<= cutoff}` and is multiplicative on
    /// the structure constants of `pres`. Returns a description of the first
    /// failure.
    pub fn check_representation(&self, pres: &ZhuPresentation) -> Result<Option<String>> {
        for row in &pres.relations.vectors {
            let v =
                GradedVector::from_entries(row.iter().map(|(&c, x)| (pres.columns[c], x.clone())));
            if !self.rho(&v)?.is_zero() {
                return Ok(Some(format!(
                    "rho does not vanish on {}",
                    self.va.render(&v)
                )));
            }
        }
        for (&(i, j), coords) in &pres.structure {
            let (bi, bj) = (pres.basis[i], pres.basis[j]);
            let lhs = self.rho(&pres.from_coordinates(coords))?;
            let rhs = self.rho_basis(bi)?.mul(&self.rho_basis(bj)?)?;
            if lhs != rhs {
                return Ok(Some(format!(
                    "rho({} * {}) != rho({}) rho({})",
                    self.va.label(bi),
                    self.va.label(bj),
                    self.va.label(bi),
                    self.va.label(bj)
                )));
            }
        }
        if self.rho(&self.va.vacuum())? != DenseMatrix::identity(self.dim) {
            return Ok(Some("rho(1) is not the identity".into()));
        }
        Ok(None)
    }
}

/// `o(u) = u_{wt u - 1}` on each homogeneous part.
pub fn zero_mode(
    m: &dyn CandidateModule,
    u: &GradedVector,
    w: &GradedVector,
) -> Result<GradedVector> {
    let mut out = GradedVector::zero();
    for (wt, part) in u.homogeneous_parts() {
        out.axpy(&One::one(), &m.act(&part, wt as i64 - 1, w)?);
    }
    Ok(out)
}

/// The top level of a module together with its `A(V)`-module structure.
pub struct TopLevel {
    /// Basis of `T(W)` as vectors of `W`.
    pub vectors: Vec<GradedVector>,
    pub module: AVModule,
}

/// `T(W)`: vectors of degree `<= max_degree` killed by every
/// degree-lowering component `u_n` with `wt u <= weight_bound`, with
/// `ρ(u) = o(u)` tabulated for basis `u` up to `weight_bound`.
pub fn top_level(
    va: Arc<dyn VertexAlgebra>,
    w: &dyn CandidateModule,
    max_degree: u32,
    weight_bound: u32,
) -> Result<TopLevel> {
    let us = va.basis_refs(weight_bound);
    let mut vectors = Vec::new();
    let mut free_positions: Vec<(u32, usize)> = Vec::new();
    for d in 0..=max_degree {
        let dim = w.dim(d);
        if dim == 0 {
            continue;
        }
        let mut rows: Vec<SparseVec> = Vec::new();
        for &u in &us {
            let uv = GradedVector::basis(u.0, u.1);
            // lowering by s = n + 1 - wt u in 1..=d
            for s in 1..=d as i64 {
                let n = u.0 as i64 + s - 1;
                let images: Vec<GradedVector> = (0..dim)
                    .map(|i| w.act(&uv, n, &GradedVector::basis(d, i)))
                    .collect::<Result<_>>()?;
                let target_dim = w.dim(d - s as u32);
                for t in 0..target_dim {
                    let row: SparseVec = images
                        .iter()
                        .enumerate()
                        .filter_map(|(i, img)| {
                            let x = img.coeff((d - s as u32, t));
                            (!x.is_zero()).then_some((i, x))
                        })
                        .collect();
                    if !row.is_empty() {
                        rows.push(row);
                    }
                }
            }
        }
        let basis = if rows.is_empty() {
            (0..dim)
                .map(|i| SparseVec::from([(i, One::one())]))
                .collect()
        } else {
            kernel(&SparseMatrix::from_rows(dim, rows))
        };
        for v in basis {
            let free = *v
                .iter()
                .rev()
                .find(|(_, x)| x.is_one())
                .map(|(c, _)| c)
                .unwrap();
            free_positions.push((d, free));
            vectors.push(GradedVector::from_entries(
                v.into_iter().map(|(i, x)| ((d, i), x)),
            ));
        }
    }
    // Coordinates in the kernel basis are read off at each vector's free column.
    let coords = |img: &GradedVector| -> SparseVec {
        free_positions
            .iter()
            .enumerate()
            .filter_map(|(k, &(d, i))| {
                let x = img.coeff((d, i));
                (!x.is_zero()).then_some((k, x))
            })
            .collect()
    };
    let dim = vectors.len();
    let mut table = HashMap::new();
    for &u in &us {
        let uv = GradedVector::basis(u.0, u.1);
        let mut m = DenseMatrix::zero(dim, dim);
        for (c, t) in vectors.iter().enumerate() {
            let img = zero_mode(w, &uv, t)?;
            for (r, x) in coords(&img) {
                m.set(r, c, x);
            }
        }
        table.insert(u, m);
    }
    let name = format!("T({})", w.name());
    Ok(TopLevel {
        vectors,
        module: AVModule::from_table(va, dim, table, name),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::rat;
    use crate::backends::{FockModule, Heisenberg};

    #[test]
    fn star_examples() {
        let h = Heisenberg::new(6);
        let a = h.alpha();
        assert_eq!(star(&h, &h.vacuum(), &a).unwrap(), a);
        assert_eq!(star(&h, &a, &a).unwrap(), h.monomial(&[1, 1]).unwrap());
    }

    #[test]
    fn heisenberg_zhu_small() {
        let h = Heisenberg::new(12);
        let p0 = zhu_quotient(&h, 0, 2, 8).unwrap();
        assert_eq!(p0.dim(), 1);
        let p2 = zhu_quotient(&h, 2, 2, 8).unwrap();
        assert_eq!(p2.dim(), 3);
        assert!(p2.check_associative(&h).unwrap().is_none());
        // u = v = α, n = -2: α_{-2}α + α_{-1}α ∈ O(V)
        let p3 = zhu_quotient(&h, 3, 2, 8).unwrap();
        let a21 = h.monomial(&[2, 1]).unwrap();
        let a11 = h.monomial(&[1, 1]).unwrap();
        assert!(p3.congruent(&a21, &a11.scaled(&rat(-1))).unwrap());
        // u = α, v = 1, n = -2: α(-2)1 + α ∈ O(V)
        let a2 = h.monomial(&[2]).unwrap();
        assert!(p2.congruent(&a2, &h.alpha().scaled(&rat(-1))).unwrap());
        assert!(!p2.congruent(&a2, &a11.scaled(&rat(-1))).unwrap());
    }

    #[test]
    fn generated_representation_is_consistent() {
        let h: Arc<dyn VertexAlgebra> = Arc::new(Heisenberg::new(10));
        let m = AVModule::from_generator(
            h.clone(),
            DenseMatrix::from_rows(&[vec![rat(2)]]).unwrap(),
            "scalar",
        )
        .unwrap();
        let pres = zhu_quotient(h.as_ref(), 3, 2, 8).unwrap();
        assert_eq!(m.check_representation(&pres).unwrap(), None);
    }

    #[test]
    fn fock_top_level() {
        let h: Arc<dyn VertexAlgebra> = Arc::new(Heisenberg::new(6));
        let f = FockModule::new(rat(5), 3);
        let t = top_level(h.clone(), &f, 3, 2).unwrap();
        assert_eq!(t.vectors, vec![f.lowest()]);
        assert_eq!(
            t.module.rho_basis((1, 0)).unwrap(),
            DenseMatrix::from_rows(&[vec![rat(5)]]).unwrap()
        );
        assert_eq!(
            t.module.rho_basis((0, 0)).unwrap(),
            DenseMatrix::identity(1)
        );
    }
}
