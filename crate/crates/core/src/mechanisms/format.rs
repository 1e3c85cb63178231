//! Plain-text mechanism files.
//!
//! ```text
//! format: redaction-mechanism/1
//! kind: 3r-relaxation
//! n: 3
//! p: 1
//! alpha: 2.5000000000000000e-1
//! beta: 5.0000000000000000e-1
//! table:
//! 1 1.0000000000000000e0 1.0000000000000000e0
//! 2 1.2500000000000000e-1 1.0000000000000000e0
//! 3 0.0000000000000000e0 0.0000000000000000e0
//! ```
//!
//! Rows are `t r_t(0) r_t(1)` for `t = 1..n` in order. Lines starting with
//! `#` and blank lines are ignored.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use super::{MechanismKind, RedactionMechanism};
use crate::error::{Error, Result};
use crate::markov::MarkovModel;

const MAGIC: &str = "redaction-mechanism/1";

#[derive(Debug, Clone, PartialEq)]
pub struct MechanismFile {
    pub model: MarkovModel,
    pub mechanism: RedactionMechanism,
}

impl MechanismFile {
    pub fn new(model: MarkovModel, mechanism: RedactionMechanism) -> Result<Self> {
        if model.n() != mechanism.n() {
            return Err(Error::InvalidMechanism(format!(
                "mechanism has {} rows but the model has n = {}",
                mechanism.n(),
                model.n()
            )));
        }
        Ok(Self { model, mechanism })
    }

    pub fn to_text(&self) -> String {
        let m = &self.mechanism;
        let mut s = String::new();
        let _ = writeln!(s, "format: {MAGIC}");
        let _ = writeln!(s, "kind: {}", m.kind());
        let _ = writeln!(s, "n: {}", m.n());
        let _ = writeln!(s, "p: {}", m.p());
        let _ = writeln!(s, "alpha: {:.16e}", self.model.alpha());
        let _ = writeln!(s, "beta: {:.16e}", self.model.beta());
        s.push_str("table:\n");
        for (i, r) in m.table().iter().enumerate() {
            let _ = writeln!(s, "{} {:.16e} {:.16e}", i + 1, r[0], r[1]);
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        Parser::default().run(text)
    }
}

fn perr(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

#[derive(Default)]
struct Parser {
    format: Option<String>,
    kind: Option<MechanismKind>,
    n: Option<usize>,
    p: Option<usize>,
    alpha: Option<f64>,
    beta: Option<f64>,
    table: Option<Vec<[f64; 2]>>,
}

fn set<T>(slot: &mut Option<T>, value: T, key: &str, line: usize) -> Result<()> {
    if slot.is_some() {
        return Err(perr(line, format!("duplicate field '{key}'")));
    }
    *slot = Some(value);
    Ok(())
}

fn number<T: std::str::FromStr>(s: &str, key: &str, line: usize) -> Result<T> {
    s.parse()
        .map_err(|_| perr(line, format!("invalid value for '{key}': '{s}'")))
}

impl Parser {
    fn run(mut self, text: &str) -> Result<MechanismFile> {
        let mut last_line = 0;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            last_line = line;
            let content = raw.trim();
            if content.is_empty() || content.starts_with('#') {
                continue;
            }
            if let Some(rows) = self.table.as_mut() {
                let fields: Vec<&str> = content.split_whitespace().collect();
                let [t, r0, r1] = fields[..] else {
                    return Err(perr(line, format!("expected 't r0 r1', got '{content}'")));
                };
                let t: usize = number(t, "t", line)?;
                if t != rows.len() + 1 {
                    return Err(perr(
                        line,
                        format!("expected row {}, got {t}", rows.len() + 1),
                    ));
                }
                rows.push([number(r0, "r0", line)?, number(r1, "r1", line)?]);
                continue;
            }
            let (key, value) = content
                .split_once(':')
                .ok_or_else(|| perr(line, format!("expected 'key: value', got '{content}'")))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "format" => {
                    if value != MAGIC {
                        return Err(perr(line, format!("unsupported format '{value}'")));
                    }
                    set(&mut self.format, value.to_string(), key, line)?;
                }
                "kind" => {
                    let k = value
                        .parse()
                        .map_err(|e: Error| perr(line, e.to_string()))?;
                    set(&mut self.kind, k, key, line)?;
                }
                "n" => set(&mut self.n, number(value, key, line)?, key, line)?,
                "p" => set(&mut self.p, number(value, key, line)?, key, line)?,
                "alpha" => set(&mut self.alpha, number(value, key, line)?, key, line)?,
                "beta" => set(&mut self.beta, number(value, key, line)?, key, line)?,
                "table" => {
                    if !value.is_empty() {
                        return Err(perr(line, "'table:' takes no inline value"));
                    }
                    self.table = Some(Vec::new());
                }
                other => return Err(perr(line, format!("unknown field '{other}'"))),
            }
        }
        let end = last_line + 1;
        let missing = |k: &str| perr(end, format!("missing field '{k}'"));
        self.format.ok_or_else(|| missing("format"))?;
        let kind = self.kind.ok_or_else(|| missing("kind"))?;
        let n = self.n.ok_or_else(|| missing("n"))?;
        let p = self.p.ok_or_else(|| missing("p"))?;
        let alpha = self.alpha.ok_or_else(|| missing("alpha"))?;
        let beta = self.beta.ok_or_else(|| missing("beta"))?;
        let table = self.table.ok_or_else(|| missing("table"))?;
        if table.len() != n {
            return Err(perr(
                end,
                format!("table has {} rows but n = {n}", table.len()),
            ));
        }
        let model = MarkovModel::new(n, alpha, beta).map_err(|e| perr(end, e.to_string()))?;
        let mechanism =
            RedactionMechanism::new(p, kind, table).map_err(|e| perr(end, e.to_string()))?;
        MechanismFile::new(model, mechanism)
    }
}

pub fn read_mechanism_file(path: &Path) -> Result<MechanismFile> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    MechanismFile::parse(&text)
}

/// Writes atomically through a temporary file in the target directory.
pub fn write_mechanism_file(path: &Path, file: &MechanismFile) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(file.to_text().as_bytes())
        .map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}
