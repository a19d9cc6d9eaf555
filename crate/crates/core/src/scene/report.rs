//! Run reports and their JSON and CSV serializations.

use std::fmt::Write as _;

use nalgebra::DVector;
use serde_json::{json, Map, Value};

use super::Tolerances;
use crate::emt::Sector;
use crate::energycond::{ConditionVerdict, Status, TableEntry};
use crate::error::Result;

/// Fixed CSV header.
pub const CSV_HEADER: [&str; 10] = [
    "kind",
    "index",
    "parameter",
    "coordinates",
    "sector",
    "condition",
    "status",
    "value",
    "tolerance",
    "vector",
];

#[derive(Clone, Debug, PartialEq)]
pub struct Provenance {
    pub command: String,
    pub scene_hash: String,
    pub builtin: Option<String>,
    pub tolerances: Tolerances,
    pub seed: u64,
    pub tool_version: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SectorRecord {
    pub sector: Sector,
    /// Frame components, row-major.
    pub tensor: Vec<f64>,
    pub trace: f64,
    pub verdicts: Vec<ConditionVerdict>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PointRecord {
    pub coordinates: Vec<f64>,
    pub sectors: Vec<SectorRecord>,
}

/// One identity residual compared with its tolerance.
#[derive(Clone, Debug, PartialEq)]
pub struct ResidualRecord {
    pub suite: String,
    /// Point index, absent for region-wide checks.
    pub index: Option<usize>,
    pub coordinates: Vec<f64>,
    pub sector: String,
    pub value: f64,
    pub tolerance: f64,
}

impl ResidualRecord {
    pub fn holds(&self) -> bool {
        self.value.is_finite() && self.value <= self.tolerance
    }
}

/// Aggregate table at one value of a swept parameter.
#[derive(Clone, Debug, PartialEq)]
pub struct ScanRecord {
    pub parameter: String,
    pub value: f64,
    pub table: Vec<TableEntry>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub provenance: Provenance,
    pub points: Vec<PointRecord>,
    /// Aggregate of the point verdicts.
    pub table: Vec<TableEntry>,
    pub residuals: Vec<ResidualRecord>,
    pub scan: Vec<ScanRecord>,
}

impl Report {
    pub fn new(provenance: Provenance) -> Self {
        Self {
            provenance,
            points: Vec::new(),
            table: Vec::new(),
            residuals: Vec::new(),
            scan: Vec::new(),
        }
    }

    /// Whether any verdict is a violation or any residual exceeds its bound.
    pub fn has_violation(&self) -> bool {
        let violated = |t: &[TableEntry]| t.iter().any(|e| e.status == Status::Violated);
        self.points
            .iter()
            .flat_map(|p| &p.sectors)
            .flat_map(|s| &s.verdicts)
            .any(|v| v.status == Status::Violated)
            || violated(&self.table)
            || self.scan.iter().any(|s| violated(&s.table))
            || self.residuals.iter().any(|r| !r.holds())
    }

    pub fn exit_code(&self) -> i32 {
        if self.has_violation() {
            2
        } else {
            0
        }
    }

    pub fn to_json(&self) -> String {
        let mut out = String::new();
        write_value(&mut out, &self.json_value(), 0);
        out.push('\n');
        out
    }

    fn json_value(&self) -> Value {
        let p = &self.provenance;
        let t = &p.tolerances;
        json!({
            "provenance": {
                "command": p.command,
                "scene_hash": p.scene_hash,
                "builtin": p.builtin,
                "seed": format!("{:#x}", p.seed),
                "tool_version": p.tool_version,
                "tolerances": {
                    "h": num(t.h),
                    "inner_h": num(t.inner_h),
                    "order": t.order,
                    "residual": num(t.residual),
                    "variational": num(t.variational),
                },
            },
            "points": self.points.iter().enumerate().map(|(i, p)| json!({
                "index": i,
                "coordinates": nums(&p.coordinates),
                "sectors": p.sectors.iter().map(sector_json).collect::<Vec<_>>(),
            })).collect::<Vec<_>>(),
            "table": self.table.iter().map(entry_json).collect::<Vec<_>>(),
            "residuals": self.residuals.iter().map(|r| json!({
                "suite": r.suite,
                "index": r.index,
                "coordinates": nums(&r.coordinates),
                "sector": r.sector,
                "value": num(r.value),
                "tolerance": num(r.tolerance),
                "holds": r.holds(),
            })).collect::<Vec<_>>(),
            "scan": self.scan.iter().map(|s| json!({
                "parameter": s.parameter,
                "value": num(s.value),
                "table": s.table.iter().map(entry_json).collect::<Vec<_>>(),
            })).collect::<Vec<_>>(),
        })
    }

    /// One row per (point, sector, condition), then aggregate, residual and
    /// scan rows. Tensor rows are written when a point has no verdicts.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_HEADER)?;
        for (i, p) in self.points.iter().enumerate() {
            let coords = list(&p.coordinates);
            for s in &p.sectors {
                if s.verdicts.is_empty() {
                    w.write_record([
                        "tensor",
                        &i.to_string(),
                        "",
                        &coords,
                        s.sector.name(),
                        "trace",
                        "",
                        &fmt_f64(s.trace),
                        "",
                        &list(&s.tensor),
                    ])?;
                }
                for v in &s.verdicts {
                    w.write_record([
                        "point",
                        &i.to_string(),
                        "",
                        &coords,
                        s.sector.name(),
                        v.condition.name(),
                        v.status.name(),
                        &fmt_f64(v.margin),
                        &fmt_f64(v.tolerance),
                        &vector(&v.witness),
                    ])?;
                }
            }
        }
        for e in &self.table {
            write_entry(&mut w, "aggregate", "", e)?;
        }
        for r in &self.residuals {
            w.write_record([
                r.suite.as_str(),
                &r.index.map(|i| i.to_string()).unwrap_or_default(),
                "",
                &list(&r.coordinates),
                &r.sector,
                "",
                if r.holds() { "holds" } else { "violated" },
                &fmt_f64(r.value),
                &fmt_f64(r.tolerance),
                "",
            ])?;
        }
        for s in &self.scan {
            let param = format!("{}={}", s.parameter, fmt_f64(s.value));
            for e in &s.table {
                write_entry(&mut w, "scan", &param, e)?;
            }
        }
        let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
        Ok(String::from_utf8_lossy(&bytes).into_owned())
    }

    /// Human-readable aggregate table.
    pub fn summary_table(&self) -> String {
        table_text(&self.table)
    }
}

/// Rows of sectors and columns NEC, WEC, SEC, DEC.
pub fn table_text(table: &[TableEntry]) -> String {
    let mut sectors: Vec<Sector> = Vec::new();
    for e in table {
        if !sectors.contains(&e.sector) {
            sectors.push(e.sector);
        }
    }
    let mut out = format!("{:<8} {:<12} {:<12} {:<12} {:<12}\n", "sector", "NEC", "WEC", "SEC", "DEC");
    for s in sectors {
        let _ = write!(out, "{:<8}", s.name());
        for c in crate::energycond::Condition::ALL {
            let cell = table
                .iter()
                .find(|e| e.sector == s && e.condition == c)
                .map(|e| e.status.name())
                .unwrap_or("-");
            let _ = write!(out, " {cell:<12}");
        }
        out = out.trim_end().to_string();
        out.push('\n');
    }
    out
}

fn write_entry(w: &mut csv::Writer<Vec<u8>>, kind: &str, param: &str, e: &TableEntry) -> Result<()> {
    let (coords, witness) = match &e.witness {
        Some(wt) => (list(&wt.point), vector(&wt.verdict.witness)),
        None => (String::new(), String::new()),
    };
    w.write_record([
        kind,
        "",
        param,
        &coords,
        e.sector.name(),
        e.condition.name(),
        e.status.name(),
        &fmt_f64(e.worst_margin),
        "",
        &witness,
    ])?;
    Ok(())
}

fn sector_json(s: &SectorRecord) -> Value {
    json!({
        "sector": s.sector.name(),
        "tensor": nums(&s.tensor),
        "trace": num(s.trace),
        "verdicts": s.verdicts.iter().map(verdict_json).collect::<Vec<_>>(),
    })
}

fn verdict_json(v: &ConditionVerdict) -> Value {
    let mut m = Map::new();
    m.insert("condition".into(), json!(v.condition.name()));
    m.insert("status".into(), json!(v.status.name()));
    m.insert("margin".into(), num(v.margin));
    m.insert("tolerance".into(), num(v.tolerance));
    m.insert("witness".into(), nums(v.witness.as_slice()));
    if let Some(d) = &v.dec {
        m.insert(
            "dec".into(),
            json!({"weak": num(d.weak), "causal": num(d.causal), "future": num(d.future)}),
        );
    }
    Value::Object(m)
}

fn entry_json(e: &TableEntry) -> Value {
    json!({
        "sector": e.sector.name(),
        "condition": e.condition.name(),
        "status": e.status.name(),
        "worst_margin": num(e.worst_margin),
        "witness": e.witness.as_ref().map(|w| json!({
            "point": nums(&w.point),
            "xi": nums(w.verdict.witness.as_slice()),
            "margin": num(w.verdict.margin),
        })),
    })
}

fn num(x: f64) -> Value {
    super::json_f64(x)
}

fn nums(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|x| num(*x)).collect())
}

/// Decimal with 17 significant digits.
pub(crate) fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

fn list(xs: &[f64]) -> String {
    xs.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(" ")
}

fn vector(v: &DVector<f64>) -> String {
    list(v.as_slice())
}

fn indent(out: &mut String, level: usize) {
    for _ in 0..level {
        out.push_str("  ");
    }
}

/// Pretty JSON with sorted keys and 17-digit floats.
fn write_value(out: &mut String, v: &Value, level: usize) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => match (n.as_u64(), n.as_i64()) {
            (Some(u), _) if !n.is_f64() => {
                let _ = write!(out, "{u}");
            }
            (_, Some(i)) if !n.is_f64() => {
                let _ = write!(out, "{i}");
            }
            _ => out.push_str(&fmt_f64(n.as_f64().unwrap_or(f64::NAN))),
        },
        Value::String(s) => out.push_str(&serde_json::to_string(s).unwrap_or_default()),
        Value::Array(a) => {
            if a.is_empty() {
                out.push_str("[]");
                return;
            }
            if a.iter().all(|x| x.is_number() || x.is_null()) {
                out.push('[');
                for (i, x) in a.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    write_value(out, x, level);
                }
                out.push(']');
                return;
            }
            out.push_str("[\n");
            for (i, x) in a.iter().enumerate() {
                indent(out, level + 1);
                write_value(out, x, level + 1);
                out.push_str(if i + 1 < a.len() { ",\n" } else { "\n" });
            }
            indent(out, level);
            out.push(']');
        }
        Value::Object(m) => {
            if m.is_empty() {
                out.push_str("{}");
                return;
            }
            let mut keys: Vec<&String> = m.keys().collect();
            keys.sort();
            out.push_str("{\n");
            for (i, k) in keys.iter().enumerate() {
                indent(out, level + 1);
                out.push_str(&serde_json::to_string(k).unwrap_or_default());
                out.push_str(": ");
                write_value(out, &m[*k], level + 1);
                out.push_str(if i + 1 < keys.len() { ",\n" } else { "\n" });
            }
            indent(out, level);
            out.push('}');
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn empty() -> Report {
        Report::new(Provenance {
            command: "classify".into(),
            scene_hash: "00".into(),
            builtin: None,
            tolerances: Tolerances::default(),
            seed: 0x5EED,
            tool_version: "0.1.0".into(),
        })
    }

    #[test]
    fn empty_region_gives_header_only_csv() {
        let csv = empty().to_csv().unwrap();
        assert_eq!(csv, format!("{}\n", CSV_HEADER.join(",")));
    }

    #[test]
    fn floats_have_seventeen_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(-2.0), "-2.0000000000000000e0");
        let j = empty().to_json();
        assert!(j.contains("\"h\": 1.0000000000000000e-3"), "{j}");
        assert!(j.contains("\"seed\": \"0x5eed\""));
        let parsed: Value = serde_json::from_str(&j).unwrap();
        assert_eq!(parsed["provenance"]["tolerances"]["order"], 4);
    }
}
