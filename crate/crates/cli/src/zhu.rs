use voxcalc::arith::format_rational;
use voxcalc::error::Result;
use voxcalc::linalg::SparseVec;
use voxcalc::voa::{GradedVector, VertexAlgebra};
use voxcalc::zhu::{star, zhu_quotient, ZhuPresentation};

use crate::report::Report;
use crate::spec::Backend;

pub struct ZhuArgs {
    pub backend: Backend,
    pub cutoff: u32,
    pub slack_ceiling: u32,
}

fn class(va: &dyn VertexAlgebra, p: &ZhuPresentation, v: &SparseVec) -> String {
    if v.is_empty() {
        return "0".into();
    }
    let terms: Vec<String> = v
        .iter()
        .map(|(i, c)| {
            let l = format!("[{}]", va.label(p.basis[*i]));
            match format_rational(c).as_str() {
                "1" => l,
                "-1" => format!("-{l}"),
                s => format!("{s}*{l}"),
            }
        })
        .collect();
    terms.join(" + ").replace("+ -", "- ")
}

pub fn run(args: &ZhuArgs, report: &mut Report) -> Result<()> {
    let va = args.backend.algebra(args.cutoff + args.slack_ceiling + 2)?;
    let va = va.as_ref();
    let p = zhu_quotient(va, args.cutoff, 2, args.slack_ceiling)?;

    let trace: Vec<String> = p
        .trace
        .iter()
        .map(|s| {
            format!(
                "slack {}: support {}, {} generators, relation dim {}",
                s.slack, s.support, s.generators, s.relation_dim
            )
        })
        .collect();
    report.section(
        "stabilization",
        trace,
        Some(serde_json::to_value(&p.trace).expect("trace serializes")),
    );
    report.pass_if(
        "stabilized",
        true,
        Some(format!(
            "slacks {} and {} agree",
            p.slack.saturating_sub(2),
            p.slack
        )),
    );

    let basis: Vec<String> = p
        .basis
        .iter()
        .map(|b| format!("[{}]  weight {}", va.label(*b), b.0))
        .collect();
    report.section(
        format!(
            "A(V) truncated at weight {}: dimension {}",
            p.cutoff,
            p.dim()
        ),
        basis,
        None,
    );

    let mut table = Vec::new();
    for ((i, j), v) in &p.structure {
        table.push(format!(
            "[{}] * [{}] = {}",
            va.label(p.basis[*i]),
            va.label(p.basis[*j]),
            class(va, &p, v)
        ));
    }
    report.section("star products within the cutoff", table, None);

    let assoc = p.check_associative(va)?;
    report.pass_if(
        "associative on basis triples",
        assoc.is_none(),
        assoc.map(|(i, j, k)| format!("fails on basis triple ({i}, {j}, {k})")),
    );
    let comm = p.check_commutative();
    report.section(
        "commutativity",
        vec![match comm {
            None => "commutative on the tabulated products".into(),
            Some((i, j)) => format!(
                "[{}] * [{}] differs from the reverse product",
                va.label(p.basis[i]),
                va.label(p.basis[j])
            ),
        }],
        None,
    );

    if let Some(g) = va.strong_generator() {
        let gv = GradedVector::basis(g.0, g.1);
        let label = format!("[{}]", va.label(g));
        report.pass_if(
            format!("generated by {label}"),
            p.generated_by(va, &gv)?,
            None,
        );
        let line = if 2 * g.0 <= p.cutoff {
            let c = p.coordinates(&gv)?;
            format!(
                "{label} * {label} = {}",
                class(va, &p, &p.star_classes(va, &c, &c)?)
            )
        } else {
            format!(
                "{label} * {label} = [{}] (above the cutoff, shown by a representative)",
                va.render(&star(va, &gv, &gv)?)
            )
        };
        report.section("generator", vec![line], None);
    }
    Ok(())
}
