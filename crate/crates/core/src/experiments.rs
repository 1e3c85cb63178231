//! Sweeps and reports behind the command-line tool, rendered as CSV tables.

use std::fmt;
use std::io::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::audit::exact_leakage_capped;
use crate::error::{Error, Result};
use crate::influence::{check_index, influence_high, influence_low};
use crate::markov::MarkovModel;
use crate::mechanisms::{
    build_3r_numerical, build_3r_relaxation, build_mq, dim_upper_bound, mq_utility_bounds,
    three_r_utility, MechanismKind, NumericalSearch, RedactionMechanism,
};
use crate::utility::monte_carlo_utility;

/// Formats a float as its shortest round-trip decimal, `inf` for +inf.
pub fn fmt_f64(x: f64) -> String {
    if x == f64::INFINITY {
        "inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else if x.is_nan() {
        "nan".into()
    } else {
        x.to_string()
    }
}

/// Inverse of [`fmt_f64`].
pub fn parse_f64(s: &str) -> Option<f64> {
    s.parse().ok()
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// Cell of row `i` in column `name`.
    pub fn get(&self, i: usize, name: &str) -> Option<&str> {
        self.rows
            .get(i)?
            .get(self.column(name)?)
            .map(String::as_str)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let to_err = |e: csv::Error| Error::Domain(format!("csv encoding failed: {e}"));
        w.write_record(&self.header).map_err(to_err)?;
        for row in &self.rows {
            w.write_record(row).map_err(to_err)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| Error::Domain(format!("csv encoding failed: {e}")))?;
        String::from_utf8(bytes).map_err(|e| Error::Domain(e.to_string()))
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let to_err = |e: csv::Error| Error::Domain(format!("csv decoding failed: {e}"));
        let header = r
            .headers()
            .map_err(to_err)?
            .iter()
            .map(String::from)
            .collect();
        let mut rows = Vec::new();
        for rec in r.records() {
            rows.push(rec.map_err(to_err)?.iter().map(String::from).collect());
        }
        Ok(Self { header, rows })
    }
}

/// Replaces `path` with `contents` via a temporary file in the same directory.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(contents).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

/// Rows `t, delta, i_low, i_high` for `t` in `[t_from, t_to]`.
pub fn influence_curve(model: &MarkovModel, p: usize, t_from: usize, t_to: usize) -> Result<Table> {
    check_index(model, p)?;
    check_index(model, t_from)?;
    check_index(model, t_to)?;
    if t_from > t_to {
        return Err(Error::Domain(format!("empty range [{t_from}, {t_to}]")));
    }
    let mut table = Table::new(["t", "delta", "i_low", "i_high"]);
    for t in t_from..=t_to {
        let d = p.abs_diff(t);
        table.push(vec![
            t.to_string(),
            d.to_string(),
            fmt_f64(influence_low(model, d).value()),
            fmt_f64(influence_high(model, d).value()),
        ]);
    }
    Ok(table)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SweepMechanism {
    DimUb,
    Mq,
    MqLb,
    ThreeRRelaxation,
    ThreeRNumerical,
}

impl SweepMechanism {
    pub const ALL: [SweepMechanism; 5] = [
        SweepMechanism::DimUb,
        SweepMechanism::Mq,
        SweepMechanism::MqLb,
        SweepMechanism::ThreeRRelaxation,
        SweepMechanism::ThreeRNumerical,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SweepMechanism::DimUb => "dim-ub",
            SweepMechanism::Mq => "mq",
            SweepMechanism::MqLb => "mq-lb",
            SweepMechanism::ThreeRRelaxation => "3r-relaxation",
            SweepMechanism::ThreeRNumerical => "3r-numerical",
        }
    }

    /// The constructed mechanism kind, for entries that build a table.
    pub fn kind(self) -> Option<MechanismKind> {
        match self {
            SweepMechanism::Mq => Some(MechanismKind::Mq),
            SweepMechanism::ThreeRRelaxation => Some(MechanismKind::ThreeRRelaxation),
            SweepMechanism::ThreeRNumerical => Some(MechanismKind::ThreeRNumerical),
            SweepMechanism::DimUb | SweepMechanism::MqLb => None,
        }
    }
}

impl fmt::Display for SweepMechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SweepMechanism {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Domain(format!("unknown mechanism '{s}'")))
    }
}

/// `count` log-spaced budgets over `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..count)
                .map(|i| {
                    if i == 0 {
                        lo
                    } else if i + 1 == count {
                        hi
                    } else {
                        (a + (b - a) * i as f64 / (count - 1) as f64).exp()
                    }
                })
                .collect()
        }
    }
}

pub fn default_eps_grid() -> Vec<f64> {
    log_grid(0.05, 6.0, 60)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub model: MarkovModel,
    pub p: usize,
    pub eps_grid: Vec<f64>,
    pub mechanisms: Vec<SweepMechanism>,
    pub split: Option<(f64, f64)>,
    pub search: NumericalSearch,
    pub trials: u64,
    pub seed: u64,
}

impl SweepSpec {
    pub fn new(model: MarkovModel, p: usize) -> Self {
        Self {
            model,
            p,
            eps_grid: default_eps_grid(),
            mechanisms: SweepMechanism::ALL.to_vec(),
            split: None,
            search: NumericalSearch::default(),
            trials: 0,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_index(&self.model, self.p)?;
        if self.mechanisms.is_empty() {
            return Err(Error::Domain("no mechanisms selected".into()));
        }
        if self.eps_grid.is_empty() {
            return Err(Error::Domain("empty eps grid".into()));
        }
        if self.eps_grid.iter().any(|e| !(*e > 0.0) || !e.is_finite()) {
            return Err(Error::Domain(
                "eps grid values must be positive and finite".into(),
            ));
        }
        if self.eps_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Domain("eps grid must be strictly increasing".into()));
        }
        if self.has(SweepMechanism::ThreeRNumerical) && self.model.n() > self.search.cap {
            return Err(Error::EnumerationLimit {
                what: "chain length for numerical 3R search",
                requested: self.model.n(),
                cap: self.search.cap,
            });
        }
        Ok(())
    }

    fn has(&self, m: SweepMechanism) -> bool {
        self.mechanisms.contains(&m)
    }

    fn selected(&self) -> Vec<SweepMechanism> {
        let mut v = self.mechanisms.clone();
        v.sort();
        v.dedup();
        v
    }
}

/// Audit result of one constructed mechanism; `None` when `n` exceeds the cap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Audited {
    pub utility: f64,
    pub leakage: Option<f64>,
    pub monte_carlo: Option<(f64, f64)>,
}

impl Audited {
    pub fn passes(&self, eps: f64) -> Option<bool> {
        self.leakage.map(|l| l <= eps)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub eps: f64,
    pub dim_ub: Option<f64>,
    pub mq_exact: Option<Audited>,
    pub mq_lb: Option<f64>,
    pub relax: Option<Audited>,
    pub numerical: Option<Audited>,
}

fn audit_mechanism(
    spec: &SweepSpec,
    mech: &RedactionMechanism,
    utility: f64,
    audit: bool,
) -> Result<Audited> {
    let leakage = if audit && spec.model.n() <= spec.search.cap {
        Some(exact_leakage_capped(&spec.model, mech, spec.search.cap)?.leakage)
    } else {
        None
    };
    let monte_carlo = if spec.trials > 0 {
        monte_carlo_utility(&spec.model, mech, spec.trials, spec.seed)?
            .monte_carlo
            .map(|m| (m.estimate, m.standard_error))
    } else {
        None
    };
    Ok(Audited {
        utility,
        leakage,
        monte_carlo,
    })
}

pub fn sweep_row(spec: &SweepSpec, eps: f64) -> Result<SweepRow> {
    let model = &spec.model;
    let p = spec.p;
    let mut row = SweepRow {
        eps,
        dim_ub: None,
        mq_exact: None,
        mq_lb: None,
        relax: None,
        numerical: None,
    };
    if spec.has(SweepMechanism::DimUb) {
        row.dim_ub = Some(dim_upper_bound(model, p, eps)?.value);
    }
    if spec.has(SweepMechanism::Mq) {
        let (plan, mech) = build_mq(model, p, eps)?;
        row.mq_exact = Some(audit_mechanism(
            spec,
            &mech,
            plan.utility(model.n()),
            false,
        )?);
    }
    if spec.has(SweepMechanism::MqLb) {
        row.mq_lb = Some(mq_utility_bounds(model, p, eps)?.lower);
    }
    if spec.has(SweepMechanism::ThreeRRelaxation) {
        let (design, mech) = build_3r_relaxation(model, p, eps, spec.split)?;
        row.relax = Some(audit_mechanism(
            spec,
            &mech,
            three_r_utility(&design, model),
            true,
        )?);
    }
    if spec.has(SweepMechanism::ThreeRNumerical) {
        let (design, mech) = build_3r_numerical(model, p, eps, spec.split, &spec.search)?;
        row.numerical = Some(audit_mechanism(
            spec,
            &mech,
            three_r_utility(&design, model),
            true,
        )?);
    }
    Ok(row)
}

pub fn utility_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    spec.eps_grid
        .iter()
        .map(|&eps| sweep_row(spec, eps))
        .collect()
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn pass_cell(a: &Audited, eps: f64) -> String {
    match a.passes(eps) {
        Some(true) => "true".into(),
        Some(false) => "false".into(),
        None => String::new(),
    }
}

/// Renders sweep rows. Column order is fixed; unselected columns are omitted.
pub fn sweep_table(spec: &SweepSpec, rows: &[SweepRow]) -> Table {
    let sel = spec.selected();
    let has = |m| sel.contains(&m);
    let mut header = vec!["eps"];
    if has(SweepMechanism::DimUb) {
        header.push("dim_ub");
    }
    if has(SweepMechanism::Mq) {
        header.push("nu_mq_exact");
    }
    if has(SweepMechanism::MqLb) {
        header.push("nu_mq_lb");
    }
    if has(SweepMechanism::ThreeRRelaxation) {
        header.push("nu_3r_relax");
    }
    if has(SweepMechanism::ThreeRNumerical) {
        header.push("nu_3r_numerical");
    }
    if has(SweepMechanism::ThreeRRelaxation) {
        header.extend(["leak_3r_relax", "pass_3r_relax"]);
    }
    if has(SweepMechanism::ThreeRNumerical) {
        header.extend(["leak_3r_numerical", "pass_3r_numerical"]);
    }
    let mc_names = [
        (SweepMechanism::Mq, "mq"),
        (SweepMechanism::ThreeRRelaxation, "3r_relax"),
        (SweepMechanism::ThreeRNumerical, "3r_numerical"),
    ];
    let mc_cols: Vec<(SweepMechanism, String, String)> = if spec.trials > 0 {
        mc_names
            .iter()
            .filter(|(m, _)| has(*m))
            .map(|(m, s)| (*m, format!("mc_{s}"), format!("mc_se_{s}")))
            .collect()
    } else {
        Vec::new()
    };
    let mut table = Table::new(header);
    for (_, a, b) in &mc_cols {
        table.header.push(a.clone());
        table.header.push(b.clone());
    }

    for r in rows {
        let mut cells = vec![fmt_f64(r.eps)];
        if has(SweepMechanism::DimUb) {
            cells.push(opt(r.dim_ub));
        }
        if has(SweepMechanism::Mq) {
            cells.push(opt(r.mq_exact.map(|a| a.utility)));
        }
        if has(SweepMechanism::MqLb) {
            cells.push(opt(r.mq_lb));
        }
        if has(SweepMechanism::ThreeRRelaxation) {
            cells.push(opt(r.relax.map(|a| a.utility)));
        }
        if has(SweepMechanism::ThreeRNumerical) {
            cells.push(opt(r.numerical.map(|a| a.utility)));
        }
        for a in [
            has(SweepMechanism::ThreeRRelaxation).then_some(&r.relax),
            has(SweepMechanism::ThreeRNumerical).then_some(&r.numerical),
        ]
        .into_iter()
        .flatten()
        {
            match a {
                Some(a) => {
                    cells.push(opt(a.leakage));
                    cells.push(pass_cell(a, r.eps));
                }
                None => cells.extend([String::new(), String::new()]),
            }
        }
        for (m, _, _) in &mc_cols {
            let a = match m {
                SweepMechanism::Mq => r.mq_exact,
                SweepMechanism::ThreeRRelaxation => r.relax,
                _ => r.numerical,
            };
            let mc = a.and_then(|a| a.monte_carlo);
            cells.push(opt(mc.map(|m| m.0)));
            cells.push(opt(mc.map(|m| m.1)));
        }
        table.push(cells);
    }
    table
}

pub fn utility_curve(spec: &SweepSpec) -> Result<Table> {
    let rows = utility_sweep(spec)?;
    Ok(sweep_table(spec, &rows))
}

/// Rows `t, mechanism, r_t0, r_t1` for each requested mechanism.
pub fn redaction_profile(
    model: &MarkovModel,
    p: usize,
    eps: f64,
    mechanisms: &[MechanismKind],
    split: Option<(f64, f64)>,
    search: &NumericalSearch,
) -> Result<Table> {
    let mut table = Table::new(["t", "mechanism", "r_t0", "r_t1"]);
    for &kind in mechanisms {
        let mech = build(model, p, eps, kind, split, search)?;
        for t in 1..=model.n() {
            let r = mech.row(t);
            table.push(vec![
                t.to_string(),
                kind.to_string(),
                fmt_f64(r[0]),
                fmt_f64(r[1]),
            ]);
        }
    }
    Ok(table)
}

/// Constructs a mechanism of the given kind with default settings.
pub fn build(
    model: &MarkovModel,
    p: usize,
    eps: f64,
    kind: MechanismKind,
    split: Option<(f64, f64)>,
    search: &NumericalSearch,
) -> Result<RedactionMechanism> {
    match kind {
        MechanismKind::Mq => Ok(build_mq(model, p, eps)?.1),
        MechanismKind::ThreeRRelaxation => Ok(build_3r_relaxation(model, p, eps, split)?.1),
        MechanismKind::ThreeRNumerical => Ok(build_3r_numerical(model, p, eps, split, search)?.1),
        MechanismKind::Custom => Err(Error::Domain("cannot construct a custom mechanism".into())),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub expected: f64,
    pub actual: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Example1Report {
    /// `ratios[x][x2] = Pr[X_2 = x2 | X_1 = x] / Pr[X_2 = x2 | X_1 = 1 - x]`.
    pub ratios: [[f64; 2]; 2],
    pub influence_low: f64,
    pub influence_high: f64,
    pub leakage: f64,
    pub utility: f64,
    pub checks: Vec<Check>,
}

impl Example1Report {
    pub fn passes(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

const EXAMPLE1_TOL: f64 = 1e-9;

/// Two records with `alpha = 0.25`, `beta = 0.5`, private index 1, budget 0.5
/// and the mechanism redacting a released 0 with probability 1/8.
pub fn example1() -> Result<Example1Report> {
    let model = MarkovModel::new(2, 0.25, 0.5)?;
    let eps = 0.5;
    let p = model.one_step();
    let mut ratios = [[0.0; 2]; 2];
    for (x, row) in ratios.iter_mut().enumerate() {
        for (x2, cell) in row.iter_mut().enumerate() {
            *cell = p[x][x2] / p[1 - x][x2];
        }
    }
    let mech = RedactionMechanism::new(1, MechanismKind::Custom, vec![[1.0, 1.0], [0.125, 1.0]])?;
    let leakage = crate::audit::exact_leakage(&model, &mech)?.leakage;
    let utility = crate::utility::exact_utility(&model, &mech)?.exact;
    let il = influence_low(&model, 1).value();
    let ih = influence_high(&model, 1).value();

    let mut checks = Vec::new();
    let mut eq = |name: &str, expected: f64, actual: f64| {
        checks.push(Check {
            name: name.into(),
            expected,
            actual,
            pass: (expected - actual).abs() <= EXAMPLE1_TOL,
        })
    };
    eq("ratio x=0 x2=0", 1.5, ratios[0][0]);
    eq("ratio x=0 x2=1", 0.5, ratios[0][1]);
    eq("ratio x=1 x2=0", 2.0 / 3.0, ratios[1][0]);
    eq("ratio x=1 x2=1", 2.0, ratios[1][1]);
    eq("influence low", 1.5f64.ln(), il);
    eq("influence high", 2.0f64.ln(), ih);
    eq("leakage", (0.5625f64 / 0.34375).ln(), leakage);
    eq("utility", 7.0 / 24.0, utility);
    checks.push(Check {
        name: "leakage within budget".into(),
        expected: eps,
        actual: leakage,
        pass: leakage <= eps,
    });
    Ok(Example1Report {
        ratios,
        influence_low: il,
        influence_high: ih,
        leakage,
        utility,
        checks,
    })
}
