//! Acceptance run: one line per criterion, nonzero exit if any fails.
//!
//! Runs as a plain binary (`harness = false`) so the lines appear in the
//! output of `cargo test`.

use std::path::PathBuf;
use std::sync::Arc;
use std::time::{Duration, Instant};

use voxcalc::arith::{format_rational, rat, ratio, Rational};
use voxcalc::backends::{partitions, FockModule, Heisenberg};
use voxcalc::dsl::{check, parse_identity, CheckPlan, CheckReport, Identity};
use voxcalc::error::Result;
use voxcalc::linalg::DenseMatrix;
use voxcalc::module_builder::{
    build_s, check_intertwines, check_t_after_s, functor_map, induced_map, verify_j_cap_m_with,
    BuildConfig, Builder, TruncatedModule,
};
use voxcalc::voa::{
    audit_weak_associativity, CandidateModule, Corruption, GradedVector, PerturbedModule,
    VertexAlgebra,
};
use voxcalc::zhu::{zhu_quotient, AVModule};

const WEIGHT: u32 = 3;
const DEGREE: u32 = 2;
const BOX: u32 = 4;
const S_DEGREE: u32 = 5;

struct Outcome {
    pass: bool,
    summary: String,
    notes: Vec<String>,
}

impl Outcome {
    fn new(pass: bool, summary: impl Into<String>) -> Self {
        Outcome {
            pass,
            summary: summary.into(),
            notes: Vec::new(),
        }
    }
}

fn corpus() -> Vec<Identity> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../identities");
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    files.sort();
    files
        .iter()
        .map(|f| parse_identity(&std::fs::read_to_string(f).unwrap()).unwrap())
        .collect()
}

fn name(id: &Identity) -> &str {
    id.name.as_deref().unwrap_or("?")
}

fn lambdas() -> [Rational; 3] {
    [rat(0), rat(1), ratio(-1, 2)]
}

fn plan() -> CheckPlan {
    CheckPlan {
        weight: WEIGHT,
        degree: DEGREE,
        box_degree: BOX,
        sample: None,
    }
}

fn fock(lambda: &Rational) -> FockModule {
    FockModule::new(lambda.clone(), BOX + 2 * WEIGHT + 2)
}

fn witness(r: &CheckReport) -> String {
    match &r.first_failure {
        Some(w) => format!(
            "{} at {}: lhs = {}, rhs = {}",
            w.assignment, w.monomial, w.lhs, w.rhs
        ),
        None => "none".into(),
    }
}

fn scalar(va: &Arc<dyn VertexAlgebra>, lambda: &Rational) -> Arc<AVModule> {
    let m = DenseMatrix::from_rows(&[vec![lambda.clone()]]).unwrap();
    Arc::new(
        AVModule::from_generator(
            va.clone(),
            m,
            format!("scalar({})", format_rational(lambda)),
        )
        .unwrap(),
    )
}

fn jordan2(va: &Arc<dyn VertexAlgebra>, lambda: &Rational) -> Arc<AVModule> {
    let m = DenseMatrix::from_rows(&[vec![lambda.clone(), rat(1)], vec![rat(0), lambda.clone()]])
        .unwrap();
    Arc::new(
        AVModule::from_generator(
            va.clone(),
            m,
            format!("jordan2({})", format_rational(lambda)),
        )
        .unwrap(),
    )
}

fn partition_counts(upto: u32, times: usize) -> Vec<usize> {
    (0..=upto).map(|n| times * partitions(n, 1).len()).collect()
}

fn criterion1(h: &Heisenberg, ids: &[Identity]) -> Result<Outcome> {
    let t = Instant::now();
    let mut checked = 0;
    let mut samples = 0;
    let mut failures = Vec::new();
    for lambda in lambdas() {
        let m = fock(&lambda);
        for id in ids {
            let r = check(id, h, &m, &plan())?;
            checked += 1;
            samples += r.samples;
            if !r.holds || !r.exhaustive {
                failures.push(format!("{} on {}: {}", name(id), m.name(), witness(&r)));
            }
        }
    }
    let elapsed = t.elapsed();
    let in_time = elapsed < Duration::from_secs(120);
    let mut o = Outcome::new(
        failures.is_empty() && in_time,
        format!(
            "{checked} identity checks, {samples} assignments, exact, {} failures, {:.1}s (limit 120s)",
            failures.len(),
            elapsed.as_secs_f64()
        ),
    );
    o.notes = failures;
    Ok(o)
}

fn criterion2(va: &dyn VertexAlgebra, built: &[TruncatedModule]) -> Result<Outcome> {
    let mut triples = 0;
    let mut notes = Vec::new();
    for s in built {
        // representatives reduce exactly up to degree D - 1 for wt u <= 2
        let a = audit_weak_associativity(va, s, 2, 2, S_DEGREE - 1)?;
        triples += a.triples;
        if !a.holds {
            notes.push(format!("{}: {}", s.name(), a.witness.unwrap_or_default()));
        }
    }
    let mut o = Outcome::new(
        notes.is_empty() && triples > 0,
        format!(
            "{} modules, {triples} triples (wt u, wt v <= 2, deg w <= 2, degrees <= {})",
            built.len(),
            S_DEGREE - 1
        ),
    );
    o.notes = notes;
    Ok(o)
}

fn criterion3(h: &Heisenberg, ids: &[Identity]) -> Result<Outcome> {
    let aa = h.monomial(&[1, 1])?;
    let u = *aa.entries().next().unwrap().0;
    let base = fock(&ratio(-1, 2));
    // (α(-1)²1)_1 on the lowest weight vector lands in degree 0
    let bad = PerturbedModule::new(
        base,
        u,
        1,
        (0, 0),
        GradedVector::basis(0, 0).scaled(&rat(3)),
    )?;
    let find = |n: &str| ids.iter().find(|i| name(i) == n).unwrap();
    let product = check(find("product_vanishing"), h, &bad, &plan())?;
    let iterate = check(find("iterate_vanishing"), h, &bad, &plan())?;
    let mut o = Outcome::new(
        product.holds && !iterate.holds && iterate.first_failure.is_some(),
        format!(
            "product form {} ({} samples), iterate form {} ({} of {} samples fail)",
            if product.holds { "holds" } else { "FAILS" },
            product.samples,
            if iterate.holds { "holds" } else { "fails" },
            iterate.failed,
            iterate.samples
        ),
    );
    o.notes.push(format!("perturbation: {}", bad.name()));
    o.notes.push(format!("witness: {}", witness(&iterate)));
    Ok(o)
}

fn criterion4(h: &Heisenberg) -> Result<Outcome> {
    let mut pass = true;
    let mut dims = Vec::new();
    let mut notes = Vec::new();
    for (n, expect) in [(2, 3), (3, 4), (4, 5)] {
        let p = zhu_quotient(h, n, 2, 8)?;
        let stable = p.trace.len() >= 2 && {
            let k = p.trace.len();
            p.trace[k - 1].relation_dim == p.trace[k - 2].relation_dim
        };
        let commutative = p.check_commutative().is_none();
        let associative = p.check_associative(h)?.is_none();
        let generated = p.generated_by(h, &h.alpha())?;
        pass &= p.dim() == expect && stable && commutative && associative && generated;
        dims.push(p.dim().to_string());
        let trace: Vec<String> = p
            .trace
            .iter()
            .map(|s| format!("slack {}: {}", s.slack, s.relation_dim))
            .collect();
        notes.push(format!(
            "N={n}: dim {} (expected {expect}), commutative {commutative}, associative {associative}, generated by [α] {generated}, stabilization {}",
            p.dim(),
            trace.join(", ")
        ));
    }
    let p3 = zhu_quotient(h, 3, 2, 8)?;
    let a21 = h.monomial(&[2, 1])?;
    let a11 = h.monomial(&[1, 1])?;
    let a2 = h.monomial(&[2])?;
    let corrected = p3.congruent(&a21, &a11.scaled(&rat(-1)))?;
    let literal = p3.congruent(&a2, &a11.scaled(&rat(-1)))?;
    let alpha_class = p3.congruent(&a2, &h.alpha().scaled(&rat(-1)))?;
    pass &= corrected && alpha_class;
    notes.push(format!("[α(-2)α(-1)1] = -[α(-1)²1]: {corrected}"));
    notes.push(format!("[α(-2)1] = -[α]: {alpha_class}"));
    notes.push(format!(
        "[α(-2)1] = -[α(-1)²1] (literal form, expected false): {literal}"
    ));
    let mut o = Outcome::new(pass, format!("dims {} at N = 2,3,4", dims.join(",")));
    o.notes = notes;
    Ok(o)
}

fn criterion5(built: &[TruncatedModule], build_time: Duration) -> Result<Outcome> {
    let t = Instant::now();
    let expect = partition_counts(S_DEGREE, 1);
    let mut pass = true;
    let mut notes = Vec::new();
    for (lambda, s) in lambdas().iter().zip(built) {
        let dims = s.dims();
        let b = Builder::new(s.top_module().clone(), s.builder().weight_limit());
        let j = verify_j_cap_m_with(&b, 1, 3, &[])?;
        let top = check_t_after_s(s, S_DEGREE, 1)?;
        let f = FockModule::new(lambda.clone(), S_DEGREE + 2);
        let map = induced_map(s, &f, &[f.lowest()], 2, S_DEGREE - 2)?;
        let iso = map.is_isomorphism(s);
        pass &= dims == expect && j.holds && top.holds && iso;
        notes.push(format!(
            "λ={}: dims {:?}, slack {}, J∩M=0 {} ({} elements), T∘S {}, induced map ranks {:?} isomorphism {}",
            format_rational(lambda),
            dims,
            s.slack(),
            j.holds,
            j.checked,
            top.holds,
            map.map.ranks(),
            iso
        ));
    }
    let elapsed = build_time + t.elapsed();
    let in_time = elapsed < Duration::from_secs(300);
    let mut o = Outcome::new(
        pass && in_time,
        format!(
            "dims {:?} for λ = 0, 1, -1/2, {:.1}s (limit 300s)",
            expect,
            elapsed.as_secs_f64()
        ),
    );
    o.notes = notes;
    Ok(o)
}

fn criterion6(h: &Arc<dyn VertexAlgebra>) -> Result<Outcome> {
    let d = 4;
    let mut pass = true;
    let mut notes = Vec::new();
    for lambda in [rat(0), rat(1)] {
        let cfg = BuildConfig::new(d);
        let sc = build_s(scalar(h, &lambda), &cfg)?;
        let sj = build_s(jordan2(h, &lambda), &cfg)?;
        let dims_ok = sj.dims() == partition_counts(d, 2);
        // e1 spans the eigenline; the second coordinate is the quotient
        let incl = DenseMatrix::from_rows(&[vec![rat(1)], vec![rat(0)]])?;
        let proj = DenseMatrix::from_rows(&[vec![rat(0), rat(1)]])?;
        let fi = functor_map(&incl, &sc, &sj)?;
        let fp = functor_map(&proj, &sj, &sc)?;
        let ci = check_intertwines(&sc, &sj, h.as_ref(), &fi, 2, d - 1)?;
        let cp = check_intertwines(&sj, &sc, h.as_ref(), &fp, 2, d - 1)?;
        let p = partition_counts(d, 1);
        let exact = fi.ranks() == p
            && fp.ranks() == p
            && (0..=d as usize).all(|k| fp.matrices[k].mul(&fi.matrices[k]).unwrap().is_zero());
        pass &= dims_ok && ci.is_none() && cp.is_none() && exact;
        notes.push(format!(
            "λ={}: dims {:?}, S(incl) commutes {}, S(proj) commutes {}, ranks {:?}/{:?}, S(proj)S(incl) = 0 {}",
            format_rational(&lambda),
            sj.dims(),
            ci.as_deref().unwrap_or("yes"),
            cp.as_deref().unwrap_or("yes"),
            fi.ranks(),
            fp.ranks(),
            exact
        ));
    }
    let mut o = Outcome::new(
        pass,
        format!("jordan2 at degree <= {d}, dims 2·p(n), functoriality on inclusion and projection"),
    );
    o.notes = notes;
    Ok(o)
}

fn criterion7(h: &Heisenberg, ids: &[Identity]) -> Result<Outcome> {
    let mut caught = 0;
    let mut notes = Vec::new();
    for seed in 0..10 {
        let base = fock(&rat(0));
        let c = Corruption::seeded(h, &base, WEIGHT, DEGREE, DEGREE, seed)?;
        let shown = c.render(h, &base);
        let bad = c.apply(base)?;
        let mut hit = None;
        for id in ids {
            let r = check(id, h, &bad, &plan())?;
            if !r.holds {
                hit = Some(format!("{}: {}", name(id), witness(&r)));
                break;
            }
        }
        match hit {
            Some(w) => {
                caught += 1;
                notes.push(format!("seed {seed}: {shown} caught by {w}"));
            }
            None => notes.push(format!("seed {seed}: {shown} NOT caught")),
        }
    }
    let mut o = Outcome::new(
        caught == 10,
        format!("{caught}/10 seeded corruptions caught"),
    );
    o.notes = notes;
    Ok(o)
}

fn report(k: usize, r: Result<Outcome>, all: &mut bool) {
    match r {
        Ok(o) => {
            *all &= o.pass;
            println!(
                "criterion {k}: {} | {}",
                if o.pass { "PASS" } else { "FAIL" },
                o.summary
            );
            for n in o.notes {
                println!("    {n}");
            }
        }
        Err(e) => {
            *all = false;
            println!("criterion {k}: FAIL | error: {e}");
        }
    }
}

fn main() {
    let ids = corpus();
    let h = Heisenberg::new(2 * WEIGHT + DEGREE + BOX + 8);
    let mut all = true;

    report(1, criterion1(&h, &ids), &mut all);

    let va: Arc<dyn VertexAlgebra> = Arc::new(Heisenberg::new(S_DEGREE + 12 + 8));
    let t = Instant::now();
    let built: Result<Vec<TruncatedModule>> = lambdas()
        .iter()
        .map(|l| build_s(scalar(&va, l), &BuildConfig::new(S_DEGREE)))
        .collect();
    let build_time = t.elapsed();

    match &built {
        Ok(b) => report(2, criterion2(va.as_ref(), b), &mut all),
        Err(e) => report(2, Err(e.clone()), &mut all),
    }
    report(3, criterion3(&h, &ids), &mut all);
    report(4, criterion4(&h), &mut all);
    match &built {
        Ok(b) => report(5, criterion5(b, build_time), &mut all),
        Err(e) => report(5, Err(e.clone()), &mut all),
    }
    report(6, criterion6(&va), &mut all);
    report(7, criterion7(&h, &ids), &mut all);

    println!(
        "acceptance: {}",
        if all { "all criteria pass" } else { "FAILED" }
    );
    if !all {
        std::process::exit(1);
    }
}
