//! Scene documents: a JSON description of the background, the gauge theory,
//! the fields as coordinate expressions, the sample region and the checks to
//! run.

mod catalog;
mod expr;
mod report;
mod run;

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::Serialize;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

pub use catalog::{builtin_names, dirac_plane_wave_spinor, expand_builtin};
pub use expr::{parse_expression, parse_in, BinaryOp, Expression, Function, Scope};
pub use report::{
    PointRecord, Provenance, Report, ResidualRecord, ScanRecord, SectorRecord, CSV_HEADER,
};
pub use run::{run_check, run_classify, run_emt, run_scan, run_verify, RunOptions};

use crate::clifford::Chirality;
use crate::error::{Error, Result};
use crate::gauge::{
    build_lie_algebra, FieldConfiguration, FieldFn, LieAlgebraModel, Potential,
    RepresentationModel, Theory, YukawaKind,
};
use crate::geometry::{AdmMetric, DeSitter, MetricField, Minkowski, ScalarFn};
use crate::numerics::{Region, Stencil};
use crate::{CMatrix, C64};

const TOP_LEVEL_KEYS: [&str; 12] = [
    "dimension",
    "metric",
    "algebra",
    "representations",
    "fields",
    "potential",
    "yukawa",
    "region",
    "checks",
    "tolerances",
    "builtin",
    "solution_flag",
];

/// Keys a document may set next to `builtin`.
const BUILTIN_OVERRIDES: [&str; 4] = ["fields", "region", "checks", "tolerances"];

/// What a run may evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Check {
    Nec,
    Wec,
    Sec,
    Dec,
    Trace,
    Divergence,
    FieldEquations,
    Weitzenboeck,
    Variational,
}

impl Check {
    pub const ALL: [Check; 9] = [
        Check::Nec,
        Check::Wec,
        Check::Sec,
        Check::Dec,
        Check::Trace,
        Check::Divergence,
        Check::FieldEquations,
        Check::Weitzenboeck,
        Check::Variational,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Check::Nec => "nec",
            Check::Wec => "wec",
            Check::Sec => "sec",
            Check::Dec => "dec",
            Check::Trace => "trace",
            Check::Divergence => "divergence",
            Check::FieldEquations => "field-equations",
            Check::Weitzenboeck => "weitzenboeck",
            Check::Variational => "variational",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == s)
    }

    pub fn is_energy_condition(self) -> bool {
        matches!(self, Check::Nec | Check::Wec | Check::Sec | Check::Dec)
    }
}

/// Numerical settings of a scene.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Tolerances {
    /// Finite-difference step.
    pub h: f64,
    /// Step of the inner jets when a tensor is differentiated again.
    pub inner_h: f64,
    /// Stencil order, 2 or 4.
    pub order: usize,
    /// Absolute bound on identity residuals.
    pub residual: f64,
    /// Relative bound for the variational check.
    pub variational: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            h: 1e-3,
            inner_h: 1e-3,
            order: 4,
            residual: 1e-6,
            variational: 1e-5,
        }
    }
}

impl Tolerances {
    pub fn stencil(&self) -> Result<Stencil> {
        Stencil::new(self.order, self.h)
    }

    pub fn inner_stencil(&self) -> Result<Stencil> {
        Stencil::new(self.order, self.inner_h)
    }
}

/// A validated scene with compiled field expressions.
#[derive(Clone)]
pub struct Scene {
    /// The document as given, used to re-load with changed parameters.
    pub source: Value,
    /// Fully expanded document.
    pub document: Value,
    /// SHA-256 of the canonical expanded document.
    pub hash: String,
    pub builtin: Option<String>,
    pub params: BTreeMap<String, f64>,
    pub config: FieldConfiguration,
    pub region: Region,
    pub checks: Vec<Check>,
    pub tolerances: Tolerances,
}

impl Scene {
    pub fn dimension(&self) -> usize {
        self.config.dimension()
    }

    pub fn solution(&self) -> bool {
        self.config.solution
    }

    /// Re-loads the scene with one parameter changed.
    pub fn with_param(&self, name: &str, value: f64) -> Result<Scene> {
        if !self.params.contains_key(name) {
            return Err(Error::Parameter(format!("scene has no parameter '{name}'")));
        }
        let mut doc = self.source.clone();
        let obj = doc
            .as_object_mut()
            .ok_or_else(|| Error::Validation(vec!["document must be an object".into()]))?;
        let fields = obj
            .entry("fields")
            .or_insert_with(|| Value::Object(Map::new()));
        let fields = fields
            .as_object_mut()
            .ok_or_else(|| Error::Validation(vec!["fields must be an object".into()]))?;
        let params = fields
            .entry("params")
            .or_insert_with(|| Value::Object(Map::new()));
        let params = params
            .as_object_mut()
            .ok_or_else(|| Error::Validation(vec!["fields.params must be an object".into()]))?;
        params.insert(name.to_string(), number(value)?);
        let mut s = load_scene(&doc)?;
        s.tolerances = self.tolerances;
        s.region = self.region.clone();
        Ok(s)
    }

    /// Every axis with positive half-width gets `n` samples.
    pub fn set_samples(&mut self, n: usize) {
        for (s, w) in self.region.samples.iter_mut().zip(&self.region.half_widths) {
            *s = if *w > 0.0 { n } else { n.min(1) };
        }
    }

    /// Requested energy conditions, all four when none is listed.
    pub fn conditions(&self) -> Vec<crate::energycond::Condition> {
        use crate::energycond::Condition;
        let listed: Vec<Condition> = self
            .checks
            .iter()
            .filter_map(|c| match c {
                Check::Nec => Some(Condition::Nec),
                Check::Wec => Some(Condition::Wec),
                Check::Sec => Some(Condition::Sec),
                Check::Dec => Some(Condition::Dec),
                _ => None,
            })
            .collect();
        if listed.is_empty() {
            Condition::ALL.to_vec()
        } else {
            listed
        }
    }
}

fn number(v: f64) -> Result<Value> {
    serde_json::Number::from_f64(v)
        .map(Value::Number)
        .ok_or_else(|| Error::Parameter(format!("{v} is not a finite number")))
}

/// SHA-256 of the canonical (key-sorted, compact) serialization.
pub fn scene_hash(doc: &Value) -> String {
    let canonical = canonicalize(doc);
    let text = serde_json::to_string(&canonical).unwrap_or_default();
    hex::encode(Sha256::digest(text.as_bytes()))
}

fn canonicalize(v: &Value) -> Value {
    match v {
        Value::Object(m) => {
            let sorted: BTreeMap<&String, Value> =
                m.iter().map(|(k, v)| (k, canonicalize(v))).collect();
            Value::Object(sorted.into_iter().map(|(k, v)| (k.clone(), v)).collect())
        }
        Value::Array(a) => Value::Array(a.iter().map(canonicalize).collect()),
        other => other.clone(),
    }
}

pub fn load_scene_str(text: &str) -> Result<Scene> {
    let doc: Value = serde_json::from_str(text)?;
    load_scene(&doc)
}

pub fn load_scene_file(path: &Path) -> Result<Scene> {
    let text = std::fs::read_to_string(path)?;
    load_scene_str(&text)
}

/// Validates a scene document, expanding built-in scenarios, and compiles
/// its expressions. All schema failures are reported together.
pub fn load_scene(doc: &Value) -> Result<Scene> {
    let obj = doc
        .as_object()
        .ok_or_else(|| Error::Validation(vec!["document must be a JSON object".into()]))?;
    let mut errors = Vec::new();
    for k in obj.keys() {
        if !TOP_LEVEL_KEYS.contains(&k.as_str()) {
            errors.push(format!("unknown top-level key '{k}'"));
        }
    }
    let (expanded, builtin) = match obj.get("builtin") {
        None => (doc.clone(), None),
        Some(Value::String(name)) => {
            for k in obj.keys() {
                if k != "builtin" && TOP_LEVEL_KEYS.contains(&k.as_str())
                    && !BUILTIN_OVERRIDES.contains(&k.as_str())
                {
                    errors.push(format!("key '{k}' is fixed by builtin '{name}'"));
                }
            }
            let overrides = obj
                .get("fields")
                .and_then(|f| f.get("params"))
                .cloned()
                .unwrap_or(Value::Object(Map::new()));
            if let Some(f) = obj.get("fields").and_then(|f| f.as_object()) {
                for k in f.keys() {
                    if k != "params" {
                        errors.push(format!("fields.{k} is fixed by builtin '{name}'"));
                    }
                }
            }
            if !errors.is_empty() {
                return Err(Error::Validation(errors));
            }
            let mut full = expand_builtin(name, &overrides)?;
            let target = full.as_object_mut().expect("builtin expands to an object");
            for k in ["region", "checks", "tolerances"] {
                if let Some(v) = obj.get(k) {
                    target.insert(k.to_string(), v.clone());
                }
            }
            (full, Some(name.clone()))
        }
        Some(_) => {
            errors.push("builtin must be a string".into());
            (doc.clone(), None)
        }
    };
    if !errors.is_empty() {
        return Err(Error::Validation(errors));
    }
    let mut v = Validator::default();
    let compiled = v.scene(&expanded);
    if !v.errors.is_empty() {
        return Err(Error::Validation(v.errors));
    }
    let c = compiled.ok_or_else(|| Error::Validation(vec!["invalid scene".into()]))?;
    Ok(Scene {
        source: doc.clone(),
        hash: scene_hash(&expanded),
        document: expanded,
        builtin,
        params: c.params,
        config: c.config,
        region: c.region,
        checks: c.checks,
        tolerances: c.tolerances,
    })
}

struct Compiled {
    params: BTreeMap<String, f64>,
    config: FieldConfiguration,
    region: Region,
    checks: Vec<Check>,
    tolerances: Tolerances,
}

#[derive(Default)]
struct Validator {
    errors: Vec<String>,
}

/// Parameter names and values in sorted order.
struct Params {
    names: Vec<String>,
    values: Arc<Vec<f64>>,
}

impl Validator {
    fn fail(&mut self, msg: impl Into<String>) {
        self.errors.push(msg.into());
    }

    fn scene(&mut self, doc: &Value) -> Option<Compiled> {
        let obj = doc.as_object()?;
        for k in obj.keys() {
            if !TOP_LEVEL_KEYS.contains(&k.as_str()) || k == "builtin" {
                self.fail(format!("unknown top-level key '{k}'"));
            }
        }
        for k in [
            "dimension",
            "metric",
            "algebra",
            "fields",
            "potential",
            "yukawa",
            "region",
        ] {
            if !obj.contains_key(k) {
                self.fail(format!("missing key '{k}'"));
            }
        }
        let m = match obj.get("dimension").and_then(Value::as_u64) {
            Some(m) if (2..=8).contains(&m) => Some(m as usize),
            Some(m) => {
                self.fail(format!("dimension must be between 2 and 8, got {m}"));
                None
            }
            None => {
                if obj.contains_key("dimension") {
                    self.fail("dimension must be a positive integer");
                }
                None
            }
        };
        let empty = Value::Object(Map::new());
        let fields = obj.get("fields").unwrap_or(&empty);
        if !fields.is_object() {
            self.fail("fields must be an object");
        }
        let params = self.params(fields.get("params"));
        let algebra = obj.get("algebra").and_then(|a| match a.as_str() {
            Some(s) => match build_lie_algebra(s) {
                Ok(g) => Some(g),
                Err(e) => {
                    self.fail(format!("algebra: {e}"));
                    None
                }
            },
            None => {
                self.fail("algebra must be a string such as \"su2+u1\"");
                None
            }
        });
        let solution = match obj.get("solution_flag") {
            None => false,
            Some(Value::Bool(b)) => *b,
            Some(_) => {
                self.fail("solution_flag must be a boolean");
                false
            }
        };
        let checks = self.checks(obj.get("checks"));
        let tolerances = self.tolerances(obj.get("tolerances"));
        let m = m?;
        let syntax_ok = self.field_syntax(fields, &Scope::new(m, params.names.clone()));
        let metric = obj.get("metric").and_then(|v| self.metric(v, m, &params));
        let reps = obj.get("representations").unwrap_or(&empty);
        let potential = obj.get("potential").and_then(|v| self.potential(v, &params));
        let region = obj.get("region").and_then(|v| self.region(v, m));
        let algebra = algebra?;
        let higgs_rep = self.representation(reps.get("higgs"), &algebra, "higgs");
        let twist_plus = self.representation(reps.get("twist_plus"), &algebra, "twist_plus");
        let twist_minus = match reps.get("twist_minus") {
            None | Some(Value::Null) => None,
            Some(v) => self.representation(Some(v), &algebra, "twist_minus"),
        };
        if let Some(r) = reps.as_object() {
            for k in r.keys() {
                if !["higgs", "twist_plus", "twist_minus"].contains(&k.as_str()) {
                    self.fail(format!("unknown representation '{k}'"));
                }
            }
        }
        if m % 2 == 1 && reps.get("twist_minus").is_some_and(|v| !v.is_null()) {
            self.fail("twist_minus is only allowed in even dimensions");
        }
        let yukawa = obj.get("yukawa").and_then(|v| self.yukawa(v, &params));
        let (higgs_rep, twist_plus, potential, yukawa, metric, region) =
            (higgs_rep?, twist_plus?, potential?, yukawa?, metric?, region?);
        let theory = match Theory::new(
            m,
            algebra.clone(),
            higgs_rep,
            twist_plus,
            twist_minus,
            potential,
            yukawa,
        ) {
            Ok(t) => Arc::new(t),
            Err(e) => {
                self.fail(format!("theory: {e}"));
                return None;
            }
        };
        let mut config = match FieldConfiguration::new(theory.clone(), metric) {
            Ok(c) => c.with_solution(solution),
            Err(e) => {
                self.fail(format!("metric: {e}"));
                return None;
            }
        };
        if !syntax_ok {
            return None;
        }
        let scope = Scope::new(m, params.names.clone());
        if let Some(c) = fields.get("connection") {
            if let Some(f) = self.connection(c, m, algebra.dim(), &scope, &params) {
                config = config.with_connection(f);
            }
        }
        if let Some(h) = fields.get("higgs") {
            if let Some(f) = self.complex_list(h, theory.higgs.dim(), "fields.higgs", &scope, &params)
            {
                config = config.with_higgs(f);
            }
        }
        if let Some(s) = fields.get("spinor") {
            if let Some((f, chirality)) = self.spinor(s, m, theory.twisted.dim(), &scope, &params) {
                config = config.with_spinor(f, chirality);
            }
        }
        if let Some(f) = fields.as_object() {
            for k in f.keys() {
                if !["params", "connection", "higgs", "spinor"].contains(&k.as_str()) {
                    self.fail(format!("unknown field '{k}'"));
                }
            }
        }
        if !self.errors.is_empty() {
            return None;
        }
        Some(Compiled {
            params: params
                .names
                .iter()
                .cloned()
                .zip(params.values.iter().copied())
                .collect(),
            config,
            region,
            checks,
            tolerances,
        })
    }

    /// Parses every expression string under the field entries so that syntax
    /// errors are reported even when other parts of the document fail.
    fn field_syntax(&mut self, fields: &Value, scope: &Scope) -> bool {
        fn walk(v: &Value, path: String, out: &mut Vec<(String, String)>) {
            match v {
                Value::String(s) => out.push((path, s.clone())),
                Value::Array(a) => {
                    for (i, x) in a.iter().enumerate() {
                        walk(x, format!("{path}[{i}]"), out);
                    }
                }
                _ => {}
            }
        }
        let mut exprs = Vec::new();
        for key in ["connection", "higgs"] {
            if let Some(v) = fields.get(key) {
                walk(v, format!("fields.{key}"), &mut exprs);
            }
        }
        if let Some(v) = fields.get("spinor").and_then(|s| s.get("components")) {
            walk(v, "fields.spinor.components".into(), &mut exprs);
        }
        let before = self.errors.len();
        for (path, src) in exprs {
            if let Err(e) = parse_in(&src, scope) {
                self.fail(format!("{path}: {e}"));
            }
        }
        self.errors.len() == before
    }

    fn params(&mut self, v: Option<&Value>) -> Params {
        let mut names = Vec::new();
        let mut values = Vec::new();
        match v {
            None => {}
            Some(Value::Object(map)) => {
                let sorted: BTreeMap<&String, &Value> = map.iter().collect();
                for (k, val) in sorted {
                    let reserved = k == "t"
                        || k == "pi"
                        || k == "e"
                        || Function::ALL.iter().any(|f| f.name() == k)
                        || (k.starts_with('x') && k[1..].parse::<usize>().is_ok());
                    let valid = k.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
                        && k.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
                    if reserved || !valid {
                        self.fail(format!("'{k}' cannot be used as a parameter name"));
                        continue;
                    }
                    match val.as_f64() {
                        Some(x) if x.is_finite() => {
                            names.push(k.clone());
                            values.push(x);
                        }
                        _ => self.fail(format!("parameter '{k}' must be a number")),
                    }
                }
            }
            Some(_) => self.fail("fields.params must be an object of numbers"),
        }
        Params {
            names,
            values: Arc::new(values),
        }
    }

    /// A number, or an expression over the parameters only.
    fn scalar(&mut self, v: Option<&Value>, what: &str, params: &Params) -> Option<f64> {
        match v {
            Some(Value::Number(n)) => n.as_f64(),
            Some(Value::String(s)) => {
                let scope = Scope::constants(params.names.clone());
                match parse_in(s, &scope).and_then(|e| e.eval(&[], &params.values)) {
                    Ok(x) => Some(x),
                    Err(e) => {
                        self.fail(format!("{what}: {e}"));
                        None
                    }
                }
            }
            None => {
                self.fail(format!("{what} is required"));
                None
            }
            Some(_) => {
                self.fail(format!("{what} must be a number or an expression"));
                None
            }
        }
    }

    fn expression(&mut self, v: &Value, what: &str, scope: &Scope) -> Option<Expression> {
        let src = match v {
            Value::String(s) => s.clone(),
            Value::Number(n) => n.to_string(),
            _ => {
                self.fail(format!("{what} must be an expression string"));
                return None;
            }
        };
        match parse_in(&src, scope) {
            Ok(e) => Some(e),
            Err(e) => {
                self.fail(format!("{what}: {e}"));
                None
            }
        }
    }

    fn metric(&mut self, v: &Value, m: usize, params: &Params) -> Option<Arc<dyn MetricField>> {
        let family = v.get("family").and_then(Value::as_str);
        match family {
            Some("minkowski") => Some(Arc::new(Minkowski { dimension: m })),
            Some("de-sitter") => {
                let hubble = self.scalar(v.get("hubble"), "metric.hubble", params)?;
                Some(Arc::new(DeSitter {
                    dimension: m,
                    hubble,
                }))
            }
            Some("adm") => {
                let scope = Scope::new(m, params.names.clone());
                let lapse = v
                    .get("lapse")
                    .and_then(|l| self.expression(l, "metric.lapse", &scope));
                if v.get("lapse").is_none() {
                    self.fail("metric.lapse is required");
                }
                let shift = self.expression_list(v.get("shift"), m - 1, "shift", &scope);
                let n_spatial = (m - 1) * m / 2;
                let spatial = self.expression_list(v.get("spatial"), n_spatial, "spatial", &scope);
                let (lapse, shift, spatial) = (lapse?, shift?, spatial?);
                let wrap = |e: Expression| -> ScalarFn {
                    let p = params.values.clone();
                    Arc::new(move |x: &[f64]| e.eval(x, &p))
                };
                Some(Arc::new(AdmMetric {
                    dimension: m,
                    lapse: wrap(lapse),
                    shift: shift.into_iter().map(wrap).collect(),
                    spatial: spatial.into_iter().map(wrap).collect(),
                }))
            }
            Some(other) => {
                self.fail(format!(
                    "unknown metric family '{other}' (expected minkowski, de-sitter or adm)"
                ));
                None
            }
            None => {
                self.fail("metric.family must be a string");
                None
            }
        }
    }

    fn expression_list(
        &mut self,
        v: Option<&Value>,
        len: usize,
        what: &str,
        scope: &Scope,
    ) -> Option<Vec<Expression>> {
        let Some(arr) = v.and_then(Value::as_array) else {
            self.fail(format!("{what} must be an array of {len} expressions"));
            return None;
        };
        if arr.len() != len {
            let expected = if what == "shift" {
                "m-1".to_string()
            } else {
                len.to_string()
            };
            self.fail(format!("{what} must have length {expected}, got {}", arr.len()));
            return None;
        }
        let out: Vec<Option<Expression>> = arr
            .iter()
            .enumerate()
            .map(|(i, e)| self.expression(e, &format!("{what}[{i}]"), scope))
            .collect();
        out.into_iter().collect()
    }

    fn representation(
        &mut self,
        v: Option<&Value>,
        algebra: &LieAlgebraModel,
        what: &str,
    ) -> Option<RepresentationModel> {
        let Some(v) = v else {
            return Some(RepresentationModel::trivial(algebra, 1));
        };
        let dim = v.get("dim").and_then(Value::as_u64).map(|d| d as usize);
        let result = if let Some(images) = v.get("images") {
            let Some(list) = images.as_array() else {
                self.fail(format!("representations.{what}.images must be an array"));
                return None;
            };
            let mut mats = Vec::new();
            for (a, img) in list.iter().enumerate() {
                mats.push(self.complex_matrix(img, &format!("representations.{what}.images[{a}]"))?);
            }
            RepresentationModel::new(algebra, mats)
        } else {
            match v.get("preset").and_then(Value::as_str) {
                Some("trivial") => Ok(RepresentationModel::trivial(algebra, dim.unwrap_or(1))),
                Some("su2-fundamental") => RepresentationModel::su2_fundamental(algebra),
                Some(p) if p.starts_with("u1-charge") => {
                    let q = match p.strip_prefix("u1-charge-") {
                        Some(q) => q.parse::<f64>().ok(),
                        None => v.get("charge").and_then(Value::as_f64),
                    };
                    match q {
                        Some(q) => RepresentationModel::u1_charge(algebra, q, dim.unwrap_or(1)),
                        None => Err(Error::Parameter(
                            "u1-charge needs a numeric charge".into(),
                        )),
                    }
                }
                Some(p) => Err(Error::Parameter(format!("unknown preset '{p}'"))),
                None => Err(Error::Parameter("needs a preset or images".into())),
            }
        };
        match result {
            Ok(r) => Some(r),
            Err(e) => {
                self.fail(format!("representations.{what}: {e}"));
                None
            }
        }
    }

    /// Rows of `[re, im]` pairs.
    fn complex_matrix(&mut self, v: &Value, what: &str) -> Option<CMatrix> {
        let rows = v.as_array()?;
        let n = rows.len();
        let mut out = CMatrix::zeros(n, rows.first().and_then(Value::as_array).map_or(0, Vec::len));
        for (i, row) in rows.iter().enumerate() {
            let Some(row) = row.as_array().filter(|r| r.len() == out.ncols()) else {
                self.fail(format!("{what} must be a rectangular matrix of [re, im] pairs"));
                return None;
            };
            for (j, z) in row.iter().enumerate() {
                match z.as_array().map(|p| p.iter().map(Value::as_f64).collect::<Vec<_>>()) {
                    Some(p) if p.len() == 2 && p.iter().all(Option::is_some) => {
                        out[(i, j)] = C64::new(p[0].unwrap_or(0.0), p[1].unwrap_or(0.0));
                    }
                    _ => {
                        self.fail(format!("{what}[{i}][{j}] must be a [re, im] pair"));
                        return None;
                    }
                }
            }
        }
        Some(out)
    }

    fn potential(&mut self, v: &Value, params: &Params) -> Option<Potential> {
        let r = match v.get("kind").and_then(Value::as_str) {
            Some("none") => Ok(Potential::None),
            Some("mexican-hat") => {
                let lambda = self.scalar(v.get("lambda"), "potential.lambda", params);
                let mu = self.scalar(v.get("mu"), "potential.mu", params);
                Potential::mexican_hat(lambda?, mu?)
            }
            Some("conformal") => {
                let lambda = self.scalar(v.get("lambda"), "potential.lambda", params)?;
                Potential::conformal(lambda)
            }
            Some(k) => Err(Error::Parameter(format!(
                "unknown kind '{k}' (expected none, mexican-hat or conformal)"
            ))),
            None => Err(Error::Parameter("kind must be a string".into())),
        };
        r.map_err(|e| self.fail(format!("potential: {e}"))).ok()
    }

    fn yukawa(&mut self, v: &Value, params: &Params) -> Option<YukawaKind> {
        match v.get("kind").and_then(Value::as_str) {
            Some("zero") => Some(YukawaKind::Zero),
            Some("mass") => Some(YukawaKind::Mass {
                mass: self.scalar(v.get("mass"), "yukawa.mass", params)?,
            }),
            Some("block") => {
                let Some(list) = v.get("couplings").and_then(Value::as_array) else {
                    self.fail("yukawa.couplings must be an array of matrices");
                    return None;
                };
                let mut couplings = Vec::new();
                for (k, c) in list.iter().enumerate() {
                    couplings.push(self.complex_matrix(c, &format!("yukawa.couplings[{k}]"))?);
                }
                let antilinear = v.get("antilinear").and_then(Value::as_bool).unwrap_or(false);
                Some(YukawaKind::Block {
                    couplings,
                    antilinear,
                })
            }
            Some(k) => {
                self.fail(format!("yukawa: unknown kind '{k}' (expected zero, mass or block)"));
                None
            }
            None => {
                self.fail("yukawa.kind must be a string");
                None
            }
        }
    }

    fn region(&mut self, v: &Value, m: usize) -> Option<Region> {
        let list = |key: &str| -> Option<Vec<f64>> {
            v.get(key)?.as_array()?.iter().map(Value::as_f64).collect()
        };
        let center = list("center");
        let half = list("half_widths");
        let samples: Option<Vec<usize>> = v
            .get("samples")
            .and_then(Value::as_array)
            .and_then(|a| a.iter().map(|s| s.as_u64().map(|n| n as usize)).collect());
        for (name, len) in [
            ("center", center.as_ref().map(Vec::len)),
            ("half_widths", half.as_ref().map(Vec::len)),
            ("samples", samples.as_ref().map(Vec::len)),
        ] {
            match len {
                None => self.fail(format!("region.{name} must be an array of numbers")),
                Some(l) if l != m => {
                    self.fail(format!("region.{name} must have length m={m}, got {l}"))
                }
                _ => {}
            }
        }
        match Region::new(center?, half?, samples?) {
            Ok(r) if r.dimension() == m => Some(r),
            Ok(_) => None,
            Err(e) => {
                self.fail(format!("region: {e}"));
                None
            }
        }
    }

    fn checks(&mut self, v: Option<&Value>) -> Vec<Check> {
        let Some(v) = v else {
            return Vec::new();
        };
        let Some(list) = v.as_array() else {
            self.fail("checks must be an array of names");
            return Vec::new();
        };
        let mut out = Vec::new();
        for c in list {
            match c.as_str().and_then(Check::parse) {
                Some(c) if !out.contains(&c) => out.push(c),
                Some(_) => {}
                None => self.fail(format!("unknown check {c}")),
            }
        }
        out
    }

    fn tolerances(&mut self, v: Option<&Value>) -> Tolerances {
        let mut t = Tolerances::default();
        let Some(v) = v else {
            return t;
        };
        let Some(map) = v.as_object() else {
            self.fail("tolerances must be an object");
            return t;
        };
        let mut inner_set = false;
        for (k, val) in map {
            let x = val.as_f64();
            match (k.as_str(), x) {
                ("h", Some(x)) if x > 0.0 => t.h = x,
                ("inner_h", Some(x)) if x > 0.0 => {
                    t.inner_h = x;
                    inner_set = true;
                }
                ("order", Some(x)) if x == 2.0 || x == 4.0 => t.order = x as usize,
                ("residual", Some(x)) if x > 0.0 => t.residual = x,
                ("variational", Some(x)) if x > 0.0 => t.variational = x,
                ("h" | "inner_h" | "residual" | "variational", _) => {
                    self.fail(format!("tolerances.{k} must be a positive number"))
                }
                ("order", _) => self.fail("tolerances.order must be 2 or 4"),
                _ => self.fail(format!("unknown tolerance '{k}'")),
            }
        }
        if !inner_set {
            t.inner_h = t.h;
        }
        t
    }

    fn connection(
        &mut self,
        v: &Value,
        m: usize,
        g: usize,
        scope: &Scope,
        params: &Params,
    ) -> Option<FieldFn> {
        let Some(rows) = v.as_array().filter(|r| r.len() == m) else {
            self.fail(format!("fields.connection must have m={m} rows"));
            return None;
        };
        let mut exprs = Vec::new();
        for (mu, row) in rows.iter().enumerate() {
            let Some(row) = row.as_array().filter(|r| r.len() == g) else {
                self.fail(format!(
                    "fields.connection[{mu}] must have dim(g)={g} components"
                ));
                continue;
            };
            for (a, e) in row.iter().enumerate() {
                if let Some(e) = self.expression(e, &format!("fields.connection[{mu}][{a}]"), scope) {
                    exprs.push(e);
                }
            }
        }
        (exprs.len() == m * g).then(|| field_fn(exprs, params))
    }

    fn complex_list(
        &mut self,
        v: &Value,
        n: usize,
        what: &str,
        scope: &Scope,
        params: &Params,
    ) -> Option<FieldFn> {
        let Some(list) = v.as_array() else {
            self.fail(format!("{what} must be an array of [re, im] pairs"));
            return None;
        };
        if list.len() != n {
            self.fail(format!("{what} must have {n} components, got {}", list.len()));
            return None;
        }
        let mut exprs = Vec::new();
        for (i, pair) in list.iter().enumerate() {
            match pair.as_array().filter(|p| p.len() == 2) {
                Some(p) => {
                    for (part, e) in ["re", "im"].iter().zip(p) {
                        if let Some(e) = self.expression(e, &format!("{what}[{i}].{part}"), scope) {
                            exprs.push(e);
                        }
                    }
                }
                None => self.fail(format!("{what}[{i}] must be a [re, im] pair")),
            }
        }
        (exprs.len() == 2 * n).then(|| field_fn(exprs, params))
    }

    fn spinor(
        &mut self,
        v: &Value,
        m: usize,
        n: usize,
        scope: &Scope,
        params: &Params,
    ) -> Option<(FieldFn, Chirality)> {
        let chirality = match v.get("chirality").and_then(Value::as_str).unwrap_or("full") {
            "full" => Chirality::Full,
            "plus" => Chirality::Plus,
            "minus" => Chirality::Minus,
            other => {
                self.fail(format!("unknown chirality '{other}'"));
                return None;
            }
        };
        if m % 2 == 1 && chirality != Chirality::Full {
            self.fail("chiral spinors need an even dimension");
        }
        let comps = v.get("components").unwrap_or(&Value::Null);
        let f = self.complex_list(comps, n, "fields.spinor.components", scope, params)?;
        Some((f, chirality))
    }
}

fn field_fn(exprs: Vec<Expression>, params: &Params) -> FieldFn {
    let p = params.values.clone();
    Arc::new(move |x: &[f64]| exprs.iter().map(|e| e.eval(x, &p)).collect())
}

pub(crate) fn json_f64(x: f64) -> Value {
    number(x).unwrap_or(Value::Null)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn minimal() -> Value {
        json!({
            "dimension": 4,
            "metric": {"family": "minkowski"},
            "algebra": "u1",
            "fields": {"params": {"k": 2.0}, "higgs": [["cos(k*x1)", "0"]]},
            "potential": {"kind": "mexican-hat", "lambda": 1, "mu": "k/2"},
            "yukawa": {"kind": "zero"},
            "region": {"center": [0, 0, 0, 0], "half_widths": [0, 0.5, 0, 0], "samples": [1, 3, 1, 1]},
        })
    }

    #[test]
    fn loads_and_evaluates() {
        let s = load_scene(&minimal()).unwrap();
        assert_eq!(s.dimension(), 4);
        assert_eq!(s.params["k"], 2.0);
        let f = s.config.higgs.as_ref().unwrap();
        let v = f(&[0.0, 0.25, 0.0, 0.0]).unwrap();
        assert!((v[0] - 0.5f64.cos()).abs() < 1e-15);
        assert_eq!(s.region.points().len(), 3);
        assert_eq!(s.config.theory.potential, Potential::MexicanHat { lambda: 1.0, mu: 1.0 });
    }

    #[test]
    fn lists_every_failure() {
        let mut d = minimal();
        d["metric"] = json!({"family": "adm", "lapse": "1", "shift": ["0", "0", "0", "0"], "spatial": ["1", "0", "0", "1", "0", "1"]});
        d["fields"]["higgs"] = json!([["cos(q)", "0"]]);
        d["extra"] = json!(1);
        match load_scene(&d) {
            Err(Error::Validation(errs)) => {
                assert!(errs.iter().any(|e| e.contains("extra")), "{errs:?}");
            }
            other => panic!("{:?}", other.err()),
        }
        d.as_object_mut().unwrap().remove("extra");
        match load_scene(&d) {
            Err(Error::Validation(errs)) => {
                assert!(errs.iter().any(|e| e.contains("shift must have length m-1")), "{errs:?}");
                assert!(errs.iter().any(|e| e.contains("unknown identifier 'q'")), "{errs:?}");
            }
            other => panic!("{:?}", other.err()),
        }
    }

    #[test]
    fn odd_dimension_rejects_chiral_spinors() {
        let mut d = minimal();
        d["dimension"] = json!(3);
        d["region"] = json!({"center": [0, 0, 0], "half_widths": [0, 0, 0], "samples": [1, 1, 1]});
        d["potential"] = json!({"kind": "none"});
        d["fields"] = json!({"spinor": {"chirality": "plus", "components": [["1", "0"], ["0", "0"]]}});
        match load_scene(&d) {
            Err(Error::Validation(errs)) => {
                assert!(errs.iter().any(|e| e.contains("even dimension")), "{errs:?}")
            }
            other => panic!("{:?}", other.err()),
        }
    }

    #[test]
    fn hash_ignores_key_order() {
        let a = load_scene_str(r#"{"builtin": "higgs-vacuum-mexhat", "fields": {"params": {"amp": 1.5, "lambda": 1}}}"#).unwrap();
        let b = load_scene_str(r#"{"fields": {"params": {"lambda": 1, "amp": 1.5}}, "builtin": "higgs-vacuum-mexhat"}"#).unwrap();
        assert_eq!(a.hash, b.hash);
        let c = a.with_param("amp", 1.25).unwrap();
        assert_ne!(a.hash, c.hash);
    }
}
