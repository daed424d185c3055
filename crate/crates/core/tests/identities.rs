use std::path::PathBuf;

use voxcalc::arith::{rat, ratio};
use voxcalc::backends::{FockModule, Heisenberg};
use voxcalc::dsl::{
    check, evaluate, evaluate_sides, parse_identity, Assignment, CheckPlan, Identity, SlotValue,
    Space,
};
use voxcalc::series::{Monomial, Var};
use voxcalc::voa::{
    index_box, iterate_component_residue, iterate_side, product_side, vanishing_residue,
    weight_free_component, CandidateModule, GradedVector, PerturbedModule, VanishingForm,
    VertexAlgebra,
};

fn corpus() -> Vec<(String, Identity)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../identities");
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    files.sort();
    files
        .into_iter()
        .map(|f| {
            let src = std::fs::read_to_string(&f).unwrap();
            let id = parse_identity(&src).unwrap_or_else(|e| panic!("{}: {e}", f.display()));
            (f.file_stem().unwrap().to_string_lossy().into_owned(), id)
        })
        .collect()
}

fn load(name: &str) -> Identity {
    corpus().into_iter().find(|(n, _)| n == name).unwrap().1
}

fn elem(s: Space, b: (u32, usize)) -> SlotValue {
    SlotValue::Elem(s, b)
}

fn triple(u: (u32, usize), v: (u32, usize), w: (u32, usize)) -> Assignment {
    Assignment(vec![
        ("u".into(), elem(Space::V, u)),
        ("v".into(), elem(Space::V, v)),
        ("w".into(), elem(Space::W, w)),
    ])
}

fn with_lk(a: &Assignment) -> Assignment {
    let g = |n: &str| match a.get(n) {
        Some(SlotValue::Elem(_, b)) => b.0 as i64,
        _ => unreachable!(),
    };
    a.with("l", SlotValue::Int(g("u") + g("w")))
        .with("k", SlotValue::Int(g("v") + g("w")))
}

fn basis(g: (u32, usize)) -> GradedVector {
    GradedVector::basis(g.0, g.1)
}

type Ref = (u32, usize);

fn triples(h: &Heisenberg, m: &FockModule, wt: u32, deg: u32) -> Vec<(Ref, Ref, Ref)> {
    let mut out = Vec::new();
    for u in h.basis_refs(wt) {
        for v in h.basis_refs(wt) {
            for w in m.basis_refs(deg) {
                out.push((u, v, w));
            }
        }
    }
    out
}

#[test]
fn corpus_renders_back_to_itself() {
    let all = corpus();
    assert_eq!(all.len(), 12);
    for (name, id) in all {
        assert_eq!(parse_identity(&id.render()).unwrap(), id, "{name}");
        assert_eq!(id.name.as_deref(), Some(name.as_str()));
    }
}

#[test]
fn corpus_holds_on_a_small_plan() {
    let h = Heisenberg::new(16);
    let m = FockModule::new(rat(1), 12);
    let plan = CheckPlan {
        weight: 2,
        degree: 1,
        box_degree: 2,
        sample: None,
    };
    for (name, id) in corpus() {
        let r = check(&id, &h, &m, &plan).unwrap();
        assert!(
            r.holds && r.exhaustive && r.samples > 0,
            "{name}: {}",
            r.render_text()
        );
    }
}

#[test]
fn component_form_matches_native() {
    let h = Heisenberg::new(12);
    let m = FockModule::new(ratio(-1, 2), 10);
    let id = load("associativity_components");
    let mut nonzero = 0;
    for (u, v, w) in triples(&h, &m, 2, 2) {
        let base = with_lk(&triple(u, v, w));
        for (p, q) in index_box(u.0 as i64, v.0 as i64, w.0 as i64, 3) {
            let k = (v.0 + w.0) as i64;
            if k - q <= 0 {
                continue;
            }
            let a = base
                .with("p", SlotValue::Int(p))
                .with("q", SlotValue::Int(q));
            let (lhs, rhs) = evaluate_sides(&id, &h, &m, &a, 3).unwrap();
            let (bu, bv, bw) = (basis(u), basis(v), basis(w));
            let native_l = product_side(&m, &bu, &bv, &bw, p, q).unwrap();
            let native_r =
                iterate_side(&h, &m, &bu, &bv, &bw, p, q, (u.0 + w.0) as i64, k).unwrap();
            assert_eq!(lhs.coefficient(&Monomial::one()), native_l);
            assert_eq!(rhs.coefficient(&Monomial::one()), native_r);
            nonzero += usize::from(!native_l.is_zero());
        }
    }
    assert!(nonzero > 100, "only {nonzero} nonzero samples");
}

#[test]
fn vanishing_forms_match_native() {
    let h = Heisenberg::new(12);
    let m = FockModule::new(rat(1), 10);
    let x0 = Var::from("x0");
    for (form, name) in [
        (VanishingForm::Product, "product_vanishing"),
        (VanishingForm::Iterate, "iterate_vanishing"),
    ] {
        let id = load(name);
        for (u, v, w) in triples(&h, &m, 2, 1) {
            let a = with_lk(&triple(u, v, w));
            let k = (v.0 + w.0) as i64;
            for q in k..k + 2 {
                let aq = a.with("q", SlotValue::Int(q));
                let (lhs, _) = evaluate_sides(&id, &h, &m, &aq, 2).unwrap();
                let lo = -((u.0 + v.0 + w.0) as i64) - 2;
                let native = vanishing_residue(
                    &h,
                    &m,
                    &basis(u),
                    &basis(v),
                    &basis(w),
                    q,
                    (u.0 + w.0) as i64,
                    form,
                    (lo, 2),
                )
                .unwrap();
                assert_eq!(lhs, native, "{name}");
                assert!(lhs
                    .terms()
                    .all(|(mono, _)| mono.pairs().iter().all(|(x, _)| *x == x0)));
            }
        }
    }
}

#[test]
fn iterate_coefficients_match_native() {
    let h = Heisenberg::new(12);
    let m = FockModule::new(rat(1), 10);
    let six = load("iterate_coefficient_vanishing");
    let nine = load("graded_vanishing_components");
    for (u, v, w) in triples(&h, &m, 2, 1) {
        let a = with_lk(&triple(u, v, w));
        let (bu, bv, bw) = (basis(u), basis(v), basis(w));
        for (p, q) in index_box(u.0 as i64, v.0 as i64, w.0 as i64, 2) {
            let i = (v.0 + w.0) as i64 - q;
            let ai = a
                .with("p", SlotValue::Int(p))
                .with("q", SlotValue::Int(q))
                .with("i", SlotValue::Int(i));
            let (lhs, _) = evaluate_sides(&six, &h, &m, &ai, 2).unwrap();
            let native =
                iterate_component_residue(&h, &m, &bu, &bv, &bw, p, q, (u.0 + w.0) as i64, i)
                    .unwrap();
            assert_eq!(lhs.coefficient(&Monomial::one()), native);
        }
        let plain = triple(u, v, w);
        for big_k in -1..=w.0 as i64 {
            for mm in big_k - 2 * w.0 as i64 - 4..=big_k - 2 * w.0 as i64 - 2 {
                let am = plain
                    .with("K", SlotValue::Int(big_k))
                    .with("m", SlotValue::Int(mm));
                let (lhs, _) = evaluate_sides(&nine, &h, &m, &am, 2).unwrap();
                let native = weight_free_component(&h, &m, &bu, &bv, &bw, big_k, mm).unwrap();
                assert_eq!(lhs.coefficient(&Monomial::one()), native);
            }
        }
    }
}

#[test]
fn corrupted_action_is_caught_with_a_witness() {
    let h = Heisenberg::new(12);
    let fock = FockModule::new(rat(0), 10);
    // alpha_{-1} on the lowest vector gets an extra multiple of itself
    let delta = GradedVector::basis(1, 0).scaled(&rat(3));
    let bad = PerturbedModule::new(fock, (1, 0), -1, (0, 0), delta).unwrap();
    let plan = CheckPlan {
        weight: 2,
        degree: 1,
        box_degree: 2,
        sample: None,
    };
    let r = check(&load("associativity_components"), &h, &bad, &plan).unwrap();
    assert!(!r.holds);
    let w = r.first_failure.unwrap();
    assert_eq!(r.verdicts.as_bytes()[w.sample], b'F');
    assert_ne!(w.lhs, w.rhs);
}

#[test]
fn difference_is_zero_on_a_genuine_module() {
    let h = Heisenberg::new(12);
    let m = FockModule::new(rat(2), 10);
    let a = with_lk(&triple((1, 0), (2, 0), (1, 0))).with("q", SlotValue::Int(3));
    assert!(evaluate(&load("product_vanishing"), &h, &m, &a, 2)
        .unwrap()
        .is_zero());
}

#[test]
fn subsampling_is_seeded() {
    let h = Heisenberg::new(12);
    let m = FockModule::new(rat(1), 10);
    let id = load("associativity_shifted");
    let plan = CheckPlan {
        weight: 2,
        degree: 1,
        box_degree: 2,
        sample: Some((20, 7)),
    };
    let a = check(&id, &h, &m, &plan).unwrap();
    let b = check(&id, &h, &m, &plan).unwrap();
    assert_eq!(a.samples, 20);
    assert!(!a.exhaustive);
    assert_eq!(a.digest, b.digest);
}
