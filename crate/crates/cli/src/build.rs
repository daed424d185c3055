use std::sync::Arc;

use voxcalc::backends::{partitions, FockModule};
use voxcalc::error::Result;
use voxcalc::module_builder::{
    build_s, check_t_after_s, induced_map, verify_j_cap_m_with, BuildConfig, Builder,
};
use voxcalc::voa::audit_weak_associativity;

use crate::report::{Report, Status};
use crate::spec::{Backend, ModuleSpec};

pub struct BuildArgs {
    pub backend: Backend,
    pub module: ModuleSpec,
    pub degree: u32,
    pub slack_ceiling: u32,
    pub weight: u32,
}

fn list(v: &[usize]) -> String {
    v.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
}

/// Records a fallible step as an error verdict instead of aborting the run.
fn attempt<T>(report: &mut Report, check: &str, r: Result<T>) -> Option<T> {
    match r {
        Ok(x) => Some(x),
        Err(e) => {
            report.verdict(check, Status::Error, Some(e.to_string()));
            None
        }
    }
}

pub fn run(args: &BuildArgs, report: &mut Report) -> Result<()> {
    let d = args.degree;
    let va = args.backend.algebra(d.max(1) + args.slack_ceiling + 8)?;
    let m = Arc::new(args.module.build(va.clone())?);
    let mut config = BuildConfig::new(d);
    config.slack_ceiling = args.slack_ceiling;

    let s = build_s(m.clone(), &config)?;
    let trace: Vec<String> = s
        .trace()
        .iter()
        .map(|t| {
            format!(
                "slack {}: weight limit {}, dims {}, {} relations, {} skipped",
                t.slack,
                t.weight_limit,
                list(&t.dims),
                t.relations,
                t.skipped
            )
        })
        .collect();
    report.section(
        "stabilization of S(M)",
        trace,
        Some(serde_json::to_value(s.trace()).expect("trace serializes")),
    );
    report.pass_if(
        "S(M) stabilized",
        true,
        Some(format!("slack {}", s.slack())),
    );

    let dims = s.dims();
    let table: Vec<String> = dims
        .iter()
        .enumerate()
        .map(|(n, k)| format!("degree {n}: {k}"))
        .collect();
    report.section(
        format!("dimensions of S({})", m.name()),
        table,
        Some(serde_json::json!(dims)),
    );
    if args.backend == Backend::Heisenberg {
        let expect: Vec<usize> = (0..=d).map(|n| m.dim() * partitions(n, 1).len()).collect();
        report.pass_if(
            "dimensions are dim M times partition counts",
            dims == expect,
            Some(format!("expected {}", list(&expect))),
        );
    }

    let b = Builder::new(m.clone(), s.builder().weight_limit());
    if let Some(j) = attempt(
        report,
        "J ∩ M = 0",
        verify_j_cap_m_with(&b, d.min(1), 3, &[]),
    ) {
        let detail = match &j.witness {
            Some(w) => format!(
                "nonzero element ({}) from {}",
                w.join(", "),
                j.witness_source.clone().unwrap_or_default()
            ),
            None => format!("{} elements checked, {} skipped", j.checked, j.skipped),
        };
        report.pass_if("J ∩ M = 0", j.holds, Some(detail));
    }

    if let Some(t) = attempt(report, "T(S(M)) = M", check_t_after_s(&s, d, 1)) {
        let detail = t
            .detail
            .clone()
            .unwrap_or_else(|| format!("top level of dimension {}", t.top_dim));
        report.pass_if("T(S(M)) = M", t.holds, Some(detail));
    }

    let audit_degree = d.saturating_sub(1);
    if d >= 2 {
        let check = format!("weak associativity up to degree {audit_degree}");
        if let Some(a) = attempt(
            report,
            &check,
            audit_weak_associativity(va.as_ref(), &s, args.weight, 2, audit_degree),
        ) {
            let detail = a
                .witness
                .clone()
                .unwrap_or_else(|| format!("{} triples", a.triples));
            report.pass_if(check, a.holds, Some(detail));
        }
    }

    if let (Backend::Heisenberg, ModuleSpec::Scalar(lambda)) = (&args.backend, &args.module) {
        let fock = FockModule::new(lambda.clone(), d + 2);
        let check = "induced map to the Fock module is an isomorphism";
        if let Some(f) = attempt(
            report,
            check,
            induced_map(
                &s,
                &fock,
                &[fock.lowest()],
                args.weight,
                d.saturating_sub(2),
            ),
        ) {
            let ranks = f.map.ranks();
            report.section("induced map ranks", vec![list(&ranks)], None);
            report.pass_if(
                check,
                f.is_isomorphism(&s),
                Some(format!("{} relations mapped to zero", f.relations_checked)),
            );
        }
    }

    match s.action_digest(args.weight, audit_degree) {
        Ok(h) => report.section(
            "action table digest",
            vec![format!(
                "sha256 {h} (weight <= {}, degree <= {audit_degree})",
                args.weight
            )],
            None,
        ),
        Err(e) => report.verdict("action table digest", Status::Error, Some(e.to_string())),
    }
    Ok(())
}
