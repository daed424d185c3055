use std::sync::Arc;

use num_traits::Zero;
use proptest::prelude::*;

use voxcalc::arith::{rat, ratio, Rational};
use voxcalc::backends::{partitions, FockModule, Heisenberg};
use voxcalc::dsl::{
    parse_identity, CmpOp, Decl, Expr, Factor, Guard, Identity, IntExpr, IntRange, Space, Term,
    VarExpr,
};
use voxcalc::linalg::{kernel, quotient_coordinates, rref, SparseMatrix, SparseVec, SubspaceBasis};
use voxcalc::series::{binomial_expand, LaurentPoly, Monomial, TruncationWindow, Var};
use voxcalc::voa::{CandidateModule, GradedVector, VertexAlgebra};
use voxcalc::zhu::{star, zhu_quotient, AVModule};

fn small_rat() -> impl Strategy<Value = Rational> {
    (-4i64..=4, 1i64..=3).prop_map(|(n, d)| ratio(n, d))
}

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = SparseMatrix> {
    // mostly zeros, so that rank deficiency is common
    prop::collection::vec(
        prop_oneof![3 => Just(rat(0)), 2 => small_rat()],
        rows * cols,
    )
    .prop_map(move |xs| {
        let dense: Vec<Vec<Rational>> = xs.chunks(cols).map(<[Rational]>::to_vec).collect();
        SparseMatrix::from_dense(&dense)
    })
}

fn vector(cols: usize) -> impl Strategy<Value = SparseVec> {
    prop::collection::vec(small_rat(), cols).prop_map(|xs| {
        xs.into_iter()
            .enumerate()
            .filter(|(_, x)| !x.is_zero())
            .collect()
    })
}

fn sub(a: &SparseVec, b: &SparseVec) -> SparseVec {
    let mut out = a.clone();
    voxcalc::linalg::axpy(&mut out, &rat(-1), b);
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rank_nullity(m in (1usize..5, 1usize..6).prop_flat_map(|(r, c)| matrix(r, c))) {
        let k = kernel(&m);
        prop_assert_eq!(rref(&m).rank() + k.len(), m.cols);
        for v in &k {
            for r in m.row_vectors() {
                let dot: Rational = r.iter().map(|(c, x)| x * v.get(c).cloned().unwrap_or_else(Rational::zero)).sum();
                prop_assert!(dot.is_zero());
            }
        }
    }

    #[test]
    fn rref_is_idempotent(m in (1usize..5, 1usize..6).prop_flat_map(|(r, c)| matrix(r, c))) {
        let once = rref(&m);
        let twice = SubspaceBasis::from_vectors(once.ambient_dim, once.vectors.clone());
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn quotient_coordinates_detect_cosets(
        (m, v, w) in (1usize..4, 1usize..5).prop_flat_map(|(r, c)| (matrix(r, c), vector(c), vector(c)))
    ) {
        let rel = rref(&m);
        let same = quotient_coordinates(m.cols, &rel, &v).unwrap() == quotient_coordinates(m.cols, &rel, &w).unwrap();
        prop_assert_eq!(same, rel.contains(&sub(&v, &w)));
        // v and v plus a relation always agree
        if let Some(r) = rel.vectors.first() {
            let mut shifted = v.clone();
            voxcalc::linalg::axpy(&mut shifted, &rat(2), r);
            prop_assert_eq!(
                quotient_coordinates(m.cols, &rel, &v).unwrap(),
                quotient_coordinates(m.cols, &rel, &shifted).unwrap()
            );
        }
    }
}

fn poly() -> impl Strategy<Value = LaurentPoly> {
    prop::collection::vec((-3i64..=3, -3i64..=3, small_rat()), 0..6).prop_map(|ts| {
        LaurentPoly::from_terms(ts.into_iter().map(|(a, b, c)| {
            (
                Monomial::from_pairs([(Var::from("x0"), a), (Var::from("x2"), b)]),
                c,
            )
        }))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn derivative_has_no_residue(p in poly()) {
        let x0 = Var::from("x0");
        prop_assert!(p.derivative(&x0).residue(&x0).is_zero());
    }

    #[test]
    fn residue_is_linear_and_extracts(p in poly(), q in poly(), c in small_rat(), m in -3i64..=3) {
        let x = Var::from("x2");
        let mut sum = p.clone();
        sum.add_scaled(&q, &c);
        let mut expect = p.residue(&x);
        expect.add_scaled(&q.residue(&x), &c);
        prop_assert_eq!(sum.residue(&x), expect);
        prop_assert_eq!(p.mul_monomial(&Monomial::var(&x, m)).residue(&x), p.coefficient_in(&x, -1 - m));
    }

    #[test]
    fn binomial_exponents_add(n1 in -3i64..=3, n2 in -3i64..=3, top in 0i64..6) {
        let (x0, x2) = (Var::from("x0"), Var::from("x2"));
        let window = TruncationWindow::new().upper("x2", top);
        let a = binomial_expand(&x0, &x2, n1, &window).unwrap();
        let b = binomial_expand(&x0, &x2, n2, &window).unwrap();
        let ab = (&a * &b).truncate(&window);
        let direct = binomial_expand(&x0, &x2, n1 + n2, &window).unwrap().truncate(&window);
        prop_assert_eq!(ab, direct);
    }

    #[test]
    fn binomial_matches_repeated_product(n in 0i64..6) {
        let (x0, x2) = (Var::from("x0"), Var::from("x2"));
        let window = TruncationWindow::new();
        let base = LaurentPoly::from_terms([(Monomial::var(&x0, 1), rat(1)), (Monomial::var(&x2, 1), rat(1))]);
        let mut power = LaurentPoly::one();
        for _ in 0..n {
            power = &power * &base;
        }
        prop_assert_eq!(binomial_expand(&x0, &x2, n, &window).unwrap(), power);
    }
}

fn fock_basis(m: &FockModule, max: u32) -> impl Strategy<Value = (u32, usize)> {
    let refs = m.basis_refs(max);
    (0..refs.len()).prop_map(move |i| refs[i])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn grading_shift_law(
        (u, w, n, lambda) in {
            let h = Heisenberg::new(10);
            let f = FockModule::new(rat(0), 10);
            let us = h.basis_refs(3);
            (0..us.len(), fock_basis(&f, 3), -4i64..4, small_rat()).prop_map(move |(i, w, n, l)| (us[i], w, n, l))
        }
    ) {
        let f = FockModule::new(lambda, 10);
        let out = f.act(&GradedVector::basis(u.0, u.1), n, &GradedVector::basis(w.0, w.1)).unwrap();
        let target = u.0 as i64 + w.0 as i64 - n - 1;
        prop_assert!(target >= 0 || out.is_zero());
        if let Some(g) = out.homogeneous_grade() {
            prop_assert_eq!(g as i64, target);
        }
        prop_assert!(out.is_zero() || out.homogeneous_grade().is_some());
    }

    #[test]
    fn vacuum_acts_as_identity(w in fock_basis(&FockModule::new(rat(0), 8), 4), n in -4i64..4, lambda in small_rat()) {
        let f = FockModule::new(lambda, 8);
        let wv = GradedVector::basis(w.0, w.1);
        let out = f.act(&GradedVector::basis(0, 0), n, &wv).unwrap();
        prop_assert_eq!(out, if n == -1 { wv } else { GradedVector::zero() });
    }

    #[test]
    fn creation_operators_commute(a in 1i64..4, b in 1i64..4, w in fock_basis(&FockModule::new(rat(0), 12), 3)) {
        let f = FockModule::new(ratio(1, 2), 12);
        let wv = GradedVector::basis(w.0, w.1);
        let ab = f.creation(a, &f.creation(b, &wv).unwrap()).unwrap();
        let ba = f.creation(b, &f.creation(a, &wv).unwrap()).unwrap();
        prop_assert_eq!(ab, ba);
    }

    #[test]
    fn vacuum_is_a_star_unit(i in 0usize..5) {
        let h = Heisenberg::new(12);
        let p = zhu_quotient(&h, 4, 2, 8).unwrap();
        prop_assume!(i < p.dim());
        let e = |k: usize| SparseVec::from([(k, rat(1))]);
        let one = p.coordinates(&h.vacuum()).unwrap();
        prop_assert_eq!(p.star_classes(&h, &one, &e(i)).unwrap(), e(i));
        prop_assert_eq!(p.star_classes(&h, &e(i), &one).unwrap(), e(i));
    }

    #[test]
    fn rho_is_multiplicative(lambda in small_rat(), i in 0usize..12, j in 0usize..12) {
        let h: Arc<dyn VertexAlgebra> = Arc::new(Heisenberg::new(10));
        let basis = h.basis_refs(3);
        let (u, v) = (basis[i % basis.len()], basis[j % basis.len()]);
        prop_assume!(u.0 + v.0 <= 3);
        let m = AVModule::from_generator(
            h.clone(),
            voxcalc::linalg::DenseMatrix::from_rows(&[vec![lambda]]).unwrap(),
            "scalar",
        ).unwrap();
        let (uv, vv) = (GradedVector::basis(u.0, u.1), GradedVector::basis(v.0, v.1));
        let lhs = m.rho(&star(h.as_ref(), &uv, &vv).unwrap()).unwrap();
        let rhs = m.rho(&uv).unwrap().mul(&m.rho(&vv).unwrap()).unwrap();
        prop_assert_eq!(lhs, rhs);
    }
}

#[test]
fn heisenberg_dims_are_partition_counts() {
    let h = Heisenberg::new(6);
    let dims: Vec<usize> = (0..=6).map(|n| h.dim(n)).collect();
    assert_eq!(dims, vec![1, 1, 2, 3, 5, 7, 11]);
    assert!((0..=6).all(|n| partitions(n, 1).len() == dims[n as usize]));
}

// ---- DSL render/parse round trip over random well-scoped identities

fn int_leaf(extra: Vec<&'static str>) -> BoxedStrategy<IntExpr> {
    let mut slots = vec!["p", "q"];
    slots.extend(extra);
    prop_oneof![
        (-6i64..=6).prop_map(IntExpr::Lit),
        prop::sample::select(slots).prop_map(|s| IntExpr::Slot(s.into())),
        prop::sample::select(vec!["u", "v"]).prop_map(|s| IntExpr::Wt(s.into())),
        Just(IntExpr::Deg("w".into())),
        Just(IntExpr::Cutoff),
    ]
    .boxed()
}

fn int_expr(extra: Vec<&'static str>) -> BoxedStrategy<IntExpr> {
    int_leaf(extra)
        .prop_recursive(3, 12, 2, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone())
                    .prop_map(|(a, b)| IntExpr::Add(Box::new(a), Box::new(b))),
                (inner.clone(), inner.clone())
                    .prop_map(|(a, b)| IntExpr::Sub(Box::new(a), Box::new(b))),
                (inner.clone(), inner.clone())
                    .prop_map(|(a, b)| IntExpr::Mul(Box::new(a), Box::new(b))),
                // `-3` reads back as a literal, so negation wraps non-literals only
                inner.prop_filter_map("negated literal", |a| match a {
                    IntExpr::Lit(_) => None,
                    a => Some(IntExpr::Neg(Box::new(a))),
                }),
            ]
        })
        .boxed()
}

fn var_expr(vars: Vec<&'static str>) -> BoxedStrategy<VarExpr> {
    let single = prop::sample::select(vars.clone()).prop_map(|v| VarExpr::Single(v.into()));
    let pair = (
        prop::sample::select(vars.clone()),
        prop::sample::select(vars),
        any::<bool>(),
    )
        .prop_filter_map("distinct", |(a, b, dir_right)| {
            (a != b).then(|| VarExpr::Sum {
                left: a.into(),
                right: b.into(),
                dir: (if dir_right { b } else { a }).into(),
            })
        });
    prop_oneof![single, pair].boxed()
}

fn element(space: Space) -> BoxedStrategy<Expr> {
    let names = match space {
        Space::V => vec!["u", "v"],
        Space::W => vec!["w"],
    };
    prop::sample::select(names)
        .prop_map(|n| Expr {
            terms: vec![Term {
                negative: false,
                factors: vec![Factor::Slot(n.into())],
            }],
        })
        .boxed()
}

fn scalar_factor(vars: Vec<&'static str>, ints: Vec<&'static str>) -> BoxedStrategy<Factor> {
    let power = (prop::sample::select(vars.clone()), int_expr(ints.clone()))
        .prop_map(|(v, exp)| Factor::Power { var: v.into(), exp });
    let binom = (
        var_expr(vars.clone()).prop_filter("sum", |v| matches!(v, VarExpr::Sum { .. })),
        int_expr(ints.clone()),
    )
        .prop_map(|(var, exp)| Factor::Binom { var, exp });
    prop_oneof![
        (0i64..5, 1i64..4).prop_map(|(n, d)| Factor::Number(ratio(n, d))),
        power.clone(),
        binom.clone(),
        (int_expr(ints.clone()), int_expr(ints.clone())).prop_map(|(n, k)| Factor::Choose(n, k)),
        (
            prop::sample::select(vars),
            int_expr(ints),
            prop_oneof![power, binom]
        )
            .prop_map(|(v, b, inner)| Factor::Trunc {
                var: v.into(),
                bound: b,
                inner: Box::new(inner)
            }),
    ]
    .boxed()
}

fn operator(vars: Vec<&'static str>, ints: Vec<&'static str>) -> BoxedStrategy<Factor> {
    let space = prop_oneof![Just(Space::V), Just(Space::W)];
    prop_oneof![
        (space.clone(), var_expr(vars.clone())).prop_flat_map(|(s, var)| {
            element(Space::V).prop_map(move |arg| Factor::Y {
                space: s,
                arg: Box::new(arg),
                var: var.clone(),
            })
        }),
        (space, int_expr(ints)).prop_flat_map(|(s, index)| {
            element(Space::V).prop_map(move |arg| Factor::Mode {
                space: s,
                arg: Box::new(arg),
                index: index.clone(),
            })
        }),
        (var_expr(vars), element(Space::V)).prop_map(|(var, arg)| Factor::ScaleL0 {
            var,
            arg: Box::new(arg)
        }),
    ]
    .boxed()
}

fn plain_product(vars: Vec<&'static str>, ints: Vec<&'static str>) -> BoxedStrategy<Vec<Factor>> {
    (
        prop::collection::vec(scalar_factor(vars.clone(), ints.clone()), 0..3),
        prop::collection::vec(operator(vars, ints), 0..3),
    )
        .prop_map(|(mut s, ops)| {
            s.extend(ops);
            s.push(Factor::Slot("w".into()));
            s
        })
        .boxed()
}

fn product() -> BoxedStrategy<Vec<Factor>> {
    let windowed = vec!["x0", "x1", "x2"];
    let plain = plain_product(windowed.clone(), vec![]);
    let res = (
        plain_product(vec!["x0", "x1", "x2", "x3"], vec![]),
        plain_product(windowed.clone(), vec![]),
    )
        .prop_map(|(body, mut head)| {
            head.pop();
            head.push(Factor::Res {
                var: "x3".into(),
                body,
            });
            head
        });
    let sum = (
        int_expr(vec![]),
        int_expr(vec![]),
        plain_product(windowed, vec!["i"]),
    )
        .prop_map(|(lo, hi, body)| {
            vec![Factor::Sum {
                index: "i".into(),
                lo,
                hi,
                body,
            }]
        });
    prop_oneof![3 => plain, 1 => res, 1 => sum].boxed()
}

fn expr() -> BoxedStrategy<Expr> {
    prop::collection::vec((any::<bool>(), product()), 1..3)
        .prop_map(|ts| Expr {
            terms: ts
                .into_iter()
                .map(|(negative, factors)| Term { negative, factors })
                .collect(),
        })
        .boxed()
}

fn identity() -> impl Strategy<Value = Identity> {
    let ops = prop::sample::select(vec![
        CmpOp::Lt,
        CmpOp::Le,
        CmpOp::Gt,
        CmpOp::Ge,
        CmpOp::Eq,
        CmpOp::Ne,
    ]);
    let guard =
        (int_expr(vec![]), ops, int_expr(vec![])).prop_map(|(lhs, op, rhs)| Guard { lhs, op, rhs });
    let bound = || prop_oneof![(-6i64..=6).prop_map(IntExpr::Lit), Just(IntExpr::Cutoff)];
    (
        any::<bool>(),
        bound(),
        bound(),
        expr(),
        expr(),
        prop::collection::vec(guard, 0..3),
    )
        .prop_map(|(named, lo, hi, lhs, rhs, guards)| {
            let mut decls = vec![
                Decl::Elements {
                    names: vec!["u".into(), "v".into()],
                    space: Space::V,
                },
                Decl::Elements {
                    names: vec!["w".into()],
                    space: Space::W,
                },
                Decl::Integers {
                    names: vec!["p".into(), "q".into()],
                    range: IntRange::Span(lo.clone(), hi.clone()),
                },
            ];
            for x in ["x0", "x1", "x2"] {
                decls.push(Decl::Window {
                    var: x.into(),
                    lo: lo.clone(),
                    hi: hi.clone(),
                });
            }
            Identity {
                name: named.then(|| "random".into()),
                decls,
                lhs,
                rhs,
                guards,
            }
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn render_then_parse_is_identity(id in identity()) {
        let text = id.render();
        let back = parse_identity(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
        prop_assert_eq!(back, id, "{}", text);
    }
}
