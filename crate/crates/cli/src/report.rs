use std::fmt::Write as _;

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Error,
}

impl Status {
    fn word(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "FAIL",
            Status::Error => "ERROR",
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Verdict {
    pub check: String,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

/// A titled block of report lines, with optional structured data that only
/// appears in JSON output.
#[derive(Debug, Serialize)]
pub struct Section {
    pub title: String,
    pub lines: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<serde_json::Value>,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub command: String,
    pub config: Vec<(String, String)>,
    pub sections: Vec<Section>,
    pub verdicts: Vec<Verdict>,
}

impl Report {
    pub fn new(command: &str, config: Vec<(String, String)>) -> Self {
        Report {
            command: command.into(),
            config,
            sections: Vec::new(),
            verdicts: Vec::new(),
        }
    }

    pub fn section(
        &mut self,
        title: impl Into<String>,
        lines: Vec<String>,
        data: Option<serde_json::Value>,
    ) {
        self.sections.push(Section {
            title: title.into(),
            lines,
            data,
        });
    }

    pub fn verdict(&mut self, check: impl Into<String>, status: Status, detail: Option<String>) {
        self.verdicts.push(Verdict {
            check: check.into(),
            status,
            detail,
        });
    }

    pub fn pass_if(&mut self, check: impl Into<String>, ok: bool, detail: Option<String>) {
        self.verdict(check, if ok { Status::Pass } else { Status::Fail }, detail);
    }

    /// 0 when every verdict passes, 2 if anything errored, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.verdicts.iter().any(|v| v.status == Status::Error) {
            2
        } else if self.verdicts.iter().any(|v| v.status == Status::Fail) {
            1
        } else {
            0
        }
    }

    pub fn render_text(&self) -> String {
        let mut s = format!("voxcalc {}\n\nconfig\n", self.command);
        for (k, v) in &self.config {
            let _ = writeln!(s, "  {k} = {v}");
        }
        for sec in &self.sections {
            let _ = writeln!(s, "\n{}", sec.title);
            for l in &sec.lines {
                let _ = writeln!(s, "  {l}");
            }
        }
        s.push_str("\nverdicts\n");
        for v in &self.verdicts {
            let _ = write!(s, "  {:<5} {}", v.status.word(), v.check);
            if let Some(d) = &v.detail {
                let _ = write!(s, ": {d}");
            }
            s.push('\n');
        }
        let passed = self
            .verdicts
            .iter()
            .filter(|v| v.status == Status::Pass)
            .count();
        let _ = writeln!(
            s,
            "\nresult: {passed}/{} pass, exit {}",
            self.verdicts.len(),
            self.exit_code()
        );
        s
    }

    pub fn render_json(&self) -> String {
        #[derive(Serialize)]
        struct Doc<'a> {
            command: &'a str,
            config: serde_json::Map<String, serde_json::Value>,
            sections: &'a [Section],
            verdicts: &'a [Verdict],
            exit_code: i32,
        }
        let config = self
            .config
            .iter()
            .map(|(k, v)| (k.clone(), serde_json::Value::String(v.clone())))
            .collect();
        let doc = Doc {
            command: &self.command,
            config,
            sections: &self.sections,
            verdicts: &self.verdicts,
            exit_code: self.exit_code(),
        };
        let mut out = serde_json::to_string_pretty(&doc).expect("report serializes");
        out.push('\n');
        out
    }
}
