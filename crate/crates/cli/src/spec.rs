//! Backend and module spec strings.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::Arc;

use voxcalc::arith::{parse_rational, rat, Rational};
use voxcalc::backends::Heisenberg;
#[cfg(feature = "virasoro")]
use voxcalc::backends::Virasoro;
use voxcalc::error::{Error, Result};
use voxcalc::linalg::DenseMatrix;
use voxcalc::voa::{BasisRef, VertexAlgebra};
use voxcalc::zhu::AVModule;

#[derive(Debug, Clone, PartialEq)]
pub enum Backend {
    Heisenberg,
    Virasoro(Rational),
}

impl Backend {
    pub fn parse(s: &str) -> Result<Self> {
        let (name, params) = split_spec(s);
        match name {
            "heisenberg" if params.is_empty() => Ok(Backend::Heisenberg),
            "virasoro" => {
                let c = param(&params, &["c"])?.ok_or_else(|| {
                    Error::InvalidArgument(
                        "virasoro needs a central charge, e.g. virasoro:c=1/2".into(),
                    )
                })?;
                Ok(Backend::Virasoro(c))
            }
            _ => Err(Error::InvalidArgument(format!("unknown backend `{s}`"))),
        }
    }

    pub fn algebra(&self, cutoff: u32) -> Result<Arc<dyn VertexAlgebra>> {
        match self {
            Backend::Heisenberg => Ok(Arc::new(Heisenberg::new(cutoff))),
            #[cfg(feature = "virasoro")]
            Backend::Virasoro(c) => Ok(Arc::new(Virasoro::new(c.clone(), cutoff))),
            #[cfg(not(feature = "virasoro"))]
            Backend::Virasoro(_) => Err(Error::InvalidArgument(
                "built without the virasoro backend".into(),
            )),
        }
    }
}

/// `name:k=v,k=v` into the name and its parameters.
fn split_spec(s: &str) -> (&str, Vec<(&str, &str)>) {
    match s.split_once(':') {
        None => (s, Vec::new()),
        Some((name, rest)) => {
            let params = rest
                .split(',')
                .filter(|p| !p.is_empty())
                .map(|p| {
                    p.split_once('=')
                        .map_or((p, ""), |(k, v)| (k.trim(), v.trim()))
                })
                .collect();
            (name, params)
        }
    }
}

fn param(params: &[(&str, &str)], keys: &[&str]) -> Result<Option<Rational>> {
    let mut found = None;
    for (k, v) in params {
        if !keys.contains(k) {
            return Err(Error::InvalidArgument(format!("unknown parameter `{k}`")));
        }
        found = Some(parse_rational(v)?);
    }
    Ok(found)
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModuleSpec {
    Scalar(Rational),
    Jordan2(Rational),
    Zero,
    File(PathBuf),
}

const LAMBDA: &[&str] = &["λ", "lambda", "l"];

impl ModuleSpec {
    pub fn parse(s: &str) -> Result<Self> {
        if let Some(path) = s.strip_prefix("file:") {
            return Ok(ModuleSpec::File(PathBuf::from(path)));
        }
        let (name, params) = split_spec(s);
        let lambda = || Ok::<_, Error>(param(&params, LAMBDA)?.unwrap_or_else(|| rat(0)));
        match name {
            "scalar" => Ok(ModuleSpec::Scalar(lambda()?)),
            "jordan2" => Ok(ModuleSpec::Jordan2(lambda()?)),
            "zero" if params.is_empty() => Ok(ModuleSpec::Zero),
            _ => Err(Error::InvalidArgument(format!("unknown module `{s}`"))),
        }
    }

    pub fn build(&self, va: Arc<dyn VertexAlgebra>) -> Result<AVModule> {
        let name = self.render();
        match self {
            ModuleSpec::Scalar(l) => {
                AVModule::from_generator(va, DenseMatrix::from_rows(&[vec![l.clone()]])?, name)
            }
            ModuleSpec::Jordan2(l) => {
                let m =
                    DenseMatrix::from_rows(&[vec![l.clone(), rat(1)], vec![rat(0), l.clone()]])?;
                AVModule::from_generator(va, m, name)
            }
            ModuleSpec::Zero => AVModule::from_generator(va, DenseMatrix::zero(0, 0), name),
            ModuleSpec::File(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| Error::InvalidArgument(format!("{}: {e}", p.display())))?;
                module_from_json(va, &text, name)
            }
        }
    }

    pub fn render(&self) -> String {
        use voxcalc::arith::format_rational;
        match self {
            ModuleSpec::Scalar(l) => format!("scalar:λ={}", format_rational(l)),
            ModuleSpec::Jordan2(l) => format!("jordan2:λ={}", format_rational(l)),
            ModuleSpec::Zero => "zero".into(),
            ModuleSpec::File(p) => format!("file:{}", p.display()),
        }
    }
}

#[derive(serde::Deserialize)]
struct ModuleFile {
    dimension: usize,
    generators: std::collections::BTreeMap<String, Vec<Vec<serde_json::Value>>>,
}

fn json_rational(v: &serde_json::Value) -> Result<Rational> {
    match v {
        serde_json::Value::Number(n) if n.is_i64() => Ok(rat(n.as_i64().unwrap())),
        serde_json::Value::String(s) => parse_rational(s),
        _ => Err(Error::InvalidArgument(format!(
            "matrix entry {v} is not an integer or a \"p/q\" string"
        ))),
    }
}

/// `{"dimension": n, "generators": {label: [[..], ..]}}`, keyed by algebra
/// basis labels such as `a(-1)1`. A file giving only the strong generator is
/// extended through the Zhu relations; otherwise the table is used as is.
pub fn module_from_json(va: Arc<dyn VertexAlgebra>, text: &str, name: String) -> Result<AVModule> {
    let f: ModuleFile = serde_json::from_str(text)
        .map_err(|e| Error::InvalidArgument(format!("module file: {e}")))?;
    let mut table: HashMap<BasisRef, DenseMatrix> = HashMap::new();
    for (label, rows) in &f.generators {
        let b = find_label(va.as_ref(), label)?;
        let rows: Vec<Vec<Rational>> = rows
            .iter()
            .map(|r| r.iter().map(json_rational).collect())
            .collect::<Result<_>>()?;
        let m = if rows.is_empty() {
            DenseMatrix::zero(0, 0)
        } else {
            DenseMatrix::from_rows(&rows)?
        };
        if m.rows != f.dimension || m.cols != f.dimension {
            return Err(Error::DimensionMismatch {
                expected: f.dimension,
                got: m.rows.max(m.cols),
            });
        }
        table.insert(b, m);
    }
    match va.strong_generator() {
        Some(g) if table.len() == 1 && table.contains_key(&g) => {
            AVModule::from_generator(va, table.remove(&g).unwrap(), name)
        }
        _ => Ok(AVModule::from_table(va, f.dimension, table, name)),
    }
}

fn find_label(va: &dyn VertexAlgebra, label: &str) -> Result<BasisRef> {
    let label = label.trim().trim_start_matches('[').trim_end_matches(']');
    va.basis_refs(va.weight_cutoff())
        .into_iter()
        .find(|&b| va.label(b) == label)
        .ok_or_else(|| Error::InvalidArgument(format!("no basis element labelled `{label}`")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use voxcalc::arith::ratio;

    #[test]
    fn parses_specs() {
        assert_eq!(Backend::parse("heisenberg").unwrap(), Backend::Heisenberg);
        assert_eq!(
            Backend::parse("virasoro:c=1/2").unwrap(),
            Backend::Virasoro(ratio(1, 2))
        );
        assert!(Backend::parse("virasoro").is_err());
        assert!(Backend::parse("lattice").is_err());
        assert_eq!(
            ModuleSpec::parse("scalar:λ=2").unwrap(),
            ModuleSpec::Scalar(rat(2))
        );
        assert_eq!(
            ModuleSpec::parse("jordan2:lambda=-1/2").unwrap(),
            ModuleSpec::Jordan2(ratio(-1, 2))
        );
        assert_eq!(ModuleSpec::parse("zero").unwrap(), ModuleSpec::Zero);
        assert!(ModuleSpec::parse("scalar:mu=1").is_err());
    }

    #[test]
    fn json_module_uses_labels() {
        let h: Arc<dyn VertexAlgebra> = Arc::new(Heisenberg::new(6));
        let m = module_from_json(
            h.clone(),
            r#"{"dimension": 1, "generators": {"a(-1)1": [["3/2"]]}}"#,
            "m".into(),
        )
        .unwrap();
        assert_eq!(m.generator_image().unwrap().get(0, 0), &ratio(3, 2));
        let bad = module_from_json(
            h,
            r#"{"dimension": 2, "generators": {"a(-1)1": [[1]]}}"#,
            "m".into(),
        );
        assert!(bad.is_err());
    }
}
