use std::path::{Path, PathBuf};

use voxcalc::arith::{format_rational, parse_rational, Rational};
use voxcalc::backends::FockModule;
use voxcalc::dsl::{check, parse_identity, CheckPlan, Identity};
use voxcalc::error::{Error, Result};
use voxcalc::voa::{AdjointModule, CandidateModule, Corruption, VertexAlgebra};

use crate::report::{Report, Status};
use crate::spec::Backend;

/// The shipped corpus, used when no paths are given.
const CORPUS: &[(&str, &str)] = &[
    (
        "associativity_components",
        include_str!("../../../identities/associativity_components.vid"),
    ),
    (
        "associativity_residues",
        include_str!("../../../identities/associativity_residues.vid"),
    ),
    (
        "associativity_shifted",
        include_str!("../../../identities/associativity_shifted.vid"),
    ),
    (
        "product_vanishing",
        include_str!("../../../identities/product_vanishing.vid"),
    ),
    (
        "iterate_vanishing",
        include_str!("../../../identities/iterate_vanishing.vid"),
    ),
    (
        "iterate_coefficient_vanishing",
        include_str!("../../../identities/iterate_coefficient_vanishing.vid"),
    ),
    (
        "graded_vanishing_residue",
        include_str!("../../../identities/graded_vanishing_residue.vid"),
    ),
    (
        "graded_vanishing_scaled",
        include_str!("../../../identities/graded_vanishing_scaled.vid"),
    ),
    (
        "graded_vanishing_components",
        include_str!("../../../identities/graded_vanishing_components.vid"),
    ),
    (
        "rewriting_relation",
        include_str!("../../../identities/rewriting_relation.vid"),
    ),
    (
        "second_family_generator",
        include_str!("../../../identities/second_family_generator.vid"),
    ),
    (
        "scaled_associativity",
        include_str!("../../../identities/scaled_associativity.vid"),
    ),
];

pub struct CheckArgs {
    pub backend: Backend,
    pub weight: u32,
    pub degree: u32,
    pub box_degree: u32,
    pub lambdas: Vec<Rational>,
    pub sample: Option<usize>,
    pub mutate: Option<u64>,
    pub seed: u64,
    pub paths: Vec<PathBuf>,
}

pub fn parse_lambdas(s: &str) -> Result<Vec<Rational>> {
    s.split(',').map(|x| parse_rational(x.trim())).collect()
}

/// Identity sources in a fixed order: files as given, directories by sorted
/// `.vid` entries.
fn sources(paths: &[PathBuf]) -> Result<Vec<(String, String)>> {
    if paths.is_empty() {
        return Ok(CORPUS
            .iter()
            .map(|(n, t)| (format!("<corpus>/{n}.vid"), t.to_string()))
            .collect());
    }
    let read = |p: &Path| {
        std::fs::read_to_string(p)
            .map_err(|e| Error::InvalidArgument(format!("{}: {e}", p.display())))
    };
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut files: Vec<PathBuf> = std::fs::read_dir(p)
                .map_err(|e| Error::InvalidArgument(format!("{}: {e}", p.display())))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x == "vid"))
                .collect();
            files.sort();
            for f in files {
                out.push((f.display().to_string(), read(&f)?));
            }
        } else {
            out.push((p.display().to_string(), read(p)?));
        }
    }
    Ok(out)
}

fn modules(
    args: &CheckArgs,
    va: &std::sync::Arc<dyn VertexAlgebra>,
) -> Vec<Box<dyn CandidateModule>> {
    match args.backend {
        Backend::Heisenberg => args
            .lambdas
            .iter()
            .map(|l| {
                Box::new(FockModule::new(
                    l.clone(),
                    args.box_degree + 2 * args.weight + 2,
                )) as Box<dyn CandidateModule>
            })
            .collect(),
        Backend::Virasoro(_) => vec![Box::new(AdjointModule::new(va.clone()))],
    }
}

struct Boxed(Box<dyn CandidateModule>);

impl CandidateModule for Boxed {
    fn name(&self) -> String {
        self.0.name()
    }
    fn dim(&self, degree: u32) -> usize {
        self.0.dim(degree)
    }
    fn label(&self, b: voxcalc::voa::BasisRef) -> String {
        self.0.label(b)
    }
    fn degree_cutoff(&self) -> u32 {
        self.0.degree_cutoff()
    }
    fn act_basis(
        &self,
        u: voxcalc::voa::BasisRef,
        n: i64,
        w: voxcalc::voa::BasisRef,
    ) -> Result<voxcalc::voa::GradedVector> {
        self.0.act_basis(u, n, w)
    }
}

pub fn run(args: &CheckArgs, report: &mut Report) -> Result<()> {
    let plan = CheckPlan {
        weight: args.weight,
        degree: args.degree,
        box_degree: args.box_degree,
        sample: args.sample.map(|n| (n, args.seed)),
    };
    let va = args
        .backend
        .algebra(2 * args.weight + args.degree + args.box_degree + 8)?;
    let mut ids: Vec<(String, Identity)> = Vec::new();
    let mut parse_lines = Vec::new();
    for (path, text) in sources(&args.paths)? {
        match parse_identity(&text) {
            Ok(id) => {
                parse_lines.push(format!(
                    "{path}: {}",
                    id.name.as_deref().unwrap_or("(unnamed)")
                ));
                ids.push((path, id));
            }
            Err(e) => report.verdict(format!("parse {path}"), Status::Error, Some(e.to_string())),
        }
    }
    report.section(format!("identities ({})", ids.len()), parse_lines, None);

    for m in modules(args, &va) {
        let m: Box<dyn CandidateModule> = match args.mutate {
            None => m,
            Some(k) => {
                let c = Corruption::seeded(
                    va.as_ref(),
                    m.as_ref(),
                    args.weight,
                    args.degree,
                    args.degree,
                    k,
                )?;
                report.section(
                    format!("mutation {k} on {}", m.name()),
                    vec![c.render(va.as_ref(), m.as_ref())],
                    None,
                );
                Box::new(c.apply(Boxed(m))?)
            }
        };
        let mut lines = Vec::new();
        let mut data = Vec::new();
        for (path, id) in &ids {
            let name = id.name.clone().unwrap_or_else(|| path.clone());
            let check_name = format!("{name} on {}", m.name());
            match check(id, va.as_ref(), m.as_ref(), &plan) {
                Ok(r) => {
                    lines.extend(r.render_text().lines().map(str::to_string));
                    let detail = r.first_failure.as_ref().map(|w| {
                        format!(
                            "{} at {}: lhs = {}, rhs = {}",
                            w.assignment, w.monomial, w.lhs, w.rhs
                        )
                    });
                    report.pass_if(check_name, r.holds, detail);
                    data.push(serde_json::to_value(&r).expect("check report serializes"));
                }
                Err(e) => {
                    lines.push(format!("{name}: error: {e}"));
                    report.verdict(check_name, Status::Error, Some(e.to_string()));
                }
            }
        }
        report.section(
            format!("checks on {}", m.name()),
            lines,
            Some(serde_json::Value::Array(data)),
        );
    }
    Ok(())
}

pub fn config(args: &CheckArgs, backend: &str) -> Vec<(String, String)> {
    let lambdas: Vec<String> = args.lambdas.iter().map(format_rational).collect();
    let paths: Vec<String> = args.paths.iter().map(|p| p.display().to_string()).collect();
    vec![
        ("backend".into(), backend.into()),
        ("weight".into(), args.weight.to_string()),
        ("degree".into(), args.degree.to_string()),
        ("box-degree".into(), args.box_degree.to_string()),
        ("lambda".into(), lambdas.join(",")),
        (
            "sample".into(),
            args.sample.map_or("all".into(), |n| n.to_string()),
        ),
        (
            "mutate".into(),
            args.mutate.map_or("none".into(), |k| k.to_string()),
        ),
        ("seed".into(), args.seed.to_string()),
        (
            "paths".into(),
            if paths.is_empty() {
                "<corpus>".into()
            } else {
                paths.join(" ")
            },
        ),
    ]
}
