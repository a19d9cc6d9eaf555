//! Built-in scenes with known analytic content.

use serde_json::{json, Map, Value};

use crate::clifford::build_clifford_model;
use crate::error::{Error, Result};
use crate::{CMatrix, CVector, C64};

const NAMES: [&str; 5] = [
    "minkowski-constant-em",
    "higgs-null-planewave",
    "higgs-vacuum-mexhat",
    "dirac-planewave-m4",
    "desitter-conformal-higgs",
];

pub fn builtin_names() -> &'static [&'static str] {
    &NAMES
}

fn defaults(name: &str) -> Option<Vec<(&'static str, f64)>> {
    Some(match name {
        "minkowski-constant-em" => vec![
            ("E1", 1.0),
            ("E2", 0.0),
            ("E3", 0.0),
            ("B1", 0.0),
            ("B2", 0.0),
            ("B3", 0.0),
        ],
        "higgs-null-planewave" => vec![("amp", 1.0), ("k", 1.0)],
        "higgs-vacuum-mexhat" => vec![("lambda", 1.0), ("mu", 1.0), ("amp", 1.0)],
        "dirac-planewave-m4" => vec![
            ("mass", 1.0),
            ("kx", 0.5),
            ("branch", -1.0),
            ("polarization", 0.0),
        ],
        "desitter-conformal-higgs" => vec![("H", 0.5), ("amp", 1.0), ("k", 1.0)],
        _ => return None,
    })
}

fn merge(name: &str, overrides: &Value) -> Result<Map<String, Value>> {
    let defaults = defaults(name).ok_or_else(|| {
        Error::Validation(vec![format!(
            "unknown builtin '{name}' (known: {})",
            NAMES.join(", ")
        )])
    })?;
    let mut params = Map::new();
    for (k, v) in defaults {
        params.insert(k.to_string(), json!(v));
    }
    let over = overrides
        .as_object()
        .ok_or_else(|| Error::Validation(vec!["fields.params must be an object".into()]))?;
    let mut errors = Vec::new();
    for (k, v) in over {
        if !params.contains_key(k) {
            errors.push(format!("builtin '{name}' has no parameter '{k}'"));
        } else if !v.as_f64().is_some_and(f64::is_finite) {
            errors.push(format!("parameter '{k}' must be a number"));
        } else {
            params.insert(k.clone(), v.clone());
        }
    }
    if errors.is_empty() {
        Ok(params)
    } else {
        Err(Error::Validation(errors))
    }
}

fn get(p: &Map<String, Value>, k: &str) -> f64 {
    p.get(k).and_then(Value::as_f64).unwrap_or(0.0)
}

fn cube_region(m: usize, half: f64, n: usize) -> Value {
    json!({
        "center": vec![0.0; m],
        "half_widths": vec![half; m],
        "samples": vec![n; m],
    })
}

/// Full scene document of a built-in scenario with `overrides` applied to
/// its parameters.
pub fn expand_builtin(name: &str, overrides: &Value) -> Result<Value> {
    let params = merge(name, overrides)?;
    let conditions = json!(["nec", "wec", "sec", "dec"]);
    let doc = match name {
        "minkowski-constant-em" => json!({
            "dimension": 4,
            "metric": {"family": "minkowski"},
            "algebra": "u1",
            "fields": {
                "params": params,
                "connection": [
                    ["0"],
                    ["E1*t - 0.5*(x2*B3 - x3*B2)"],
                    ["E2*t - 0.5*(x3*B1 - x1*B3)"],
                    ["E3*t - 0.5*(x1*B2 - x2*B1)"],
                ],
            },
            "potential": {"kind": "none"},
            "yukawa": {"kind": "zero"},
            "region": cube_region(4, 0.5, 2),
            "checks": ["nec", "wec", "sec", "dec", "trace", "divergence", "field-equations"],
            "solution_flag": true,
        }),
        "higgs-null-planewave" => json!({
            "dimension": 4,
            "metric": {"family": "minkowski"},
            "algebra": "u1",
            "representations": {"higgs": {"preset": "trivial", "dim": 1}},
            "fields": {
                "params": params,
                "higgs": [["amp*cos(k*(t - x1))", "amp*sin(k*(t - x1))"]],
            },
            "potential": {"kind": "conformal", "lambda": 0},
            "yukawa": {"kind": "zero"},
            "region": cube_region(4, 0.5, 2),
            "checks": ["nec", "wec", "sec", "dec", "trace", "divergence", "field-equations"],
            "tolerances": {"inner_h": 1e-2},
            "solution_flag": true,
        }),
        "higgs-vacuum-mexhat" => {
            let (lambda, mu, amp) = (get(&params, "lambda"), get(&params, "mu"), get(&params, "amp"));
            let vacuum = lambda == 0.0 || (amp * amp - mu / lambda).abs() <= 1e-12;
            json!({
                "dimension": 4,
                "metric": {"family": "minkowski"},
                "algebra": "u1",
                "representations": {"higgs": {"preset": "trivial", "dim": 1}},
                "fields": {"params": params, "higgs": [["amp", "0"]]},
                "potential": {"kind": "mexican-hat", "lambda": "lambda", "mu": "mu"},
                "yukawa": {"kind": "zero"},
                "region": cube_region(4, 0.5, 2),
                "checks": conditions,
                "solution_flag": vacuum,
            })
        }
        "dirac-planewave-m4" => {
            let (u, omega) = dirac_plane_wave_spinor(
                get(&params, "mass"),
                get(&params, "kx"),
                get(&params, "branch"),
                get(&params, "polarization"),
            )?;
            let phase = format!("({:?})*t + ({:?})*x1", -omega, get(&params, "kx"));
            let components: Vec<Value> = u
                .iter()
                .map(|z| {
                    json!([
                        format!("({:?})*cos({phase}) - ({:?})*sin({phase})", z.re, z.im),
                        format!("({:?})*sin({phase}) + ({:?})*cos({phase})", z.re, z.im),
                    ])
                })
                .collect();
            json!({
                "dimension": 4,
                "metric": {"family": "minkowski"},
                "algebra": "u1",
                "representations": {"twist_plus": {"preset": "trivial", "dim": 1}},
                "fields": {
                    "params": params,
                    "spinor": {"chirality": "full", "components": components},
                },
                "potential": {"kind": "none"},
                "yukawa": {"kind": "mass", "mass": "mass"},
                "region": cube_region(4, 0.5, 2),
                "checks": [
                    "nec", "wec", "sec", "dec", "trace", "divergence", "field-equations", "weitzenboeck"
                ],
                "tolerances": {"residual": 1e-8},
                "solution_flag": true,
            })
        }
        "desitter-conformal-higgs" => {
            if get(&params, "H") == 0.0 {
                return Err(Error::Validation(vec!["H must be non-zero".into()]));
            }
            let wave = "k*(-exp(-H*t)/H - x1)";
            json!({
                "dimension": 4,
                "metric": {"family": "de-sitter", "hubble": "H"},
                "algebra": "u1",
                "representations": {"higgs": {"preset": "trivial", "dim": 1}},
                "fields": {
                    "params": params,
                    "higgs": [[
                        format!("amp*exp(-H*t)*cos({wave})"),
                        format!("amp*exp(-H*t)*sin({wave})"),
                    ]],
                },
                "potential": {"kind": "conformal", "lambda": 0},
                "yukawa": {"kind": "zero"},
                "region": cube_region(4, 0.5, 2),
                "checks": ["nec", "wec", "sec", "dec", "trace", "divergence", "field-equations"],
                "tolerances": {"h": 2e-3, "inner_h": 1e-2},
                "solution_flag": true,
            })
        }
        _ => unreachable!("merge rejects unknown names"),
    };
    Ok(doc)
}

/// Unit spinor `u` and frequency `ω` with `Ψ = u exp(i(-ωt + kx x1))` solving
/// the massive Dirac equation in four-dimensional Minkowski space.
///
/// `ω = branch·sqrt(mass² + kx²)`; `u` is the normalized projection
/// `(k^a γ_a + mass) e_p` of the first basis vector from `polarization` on
/// that is not annihilated.
pub fn dirac_plane_wave_spinor(
    mass: f64,
    kx: f64,
    branch: f64,
    polarization: f64,
) -> Result<(CVector, f64)> {
    if branch != 1.0 && branch != -1.0 {
        return Err(Error::Parameter("branch must be +1 or -1".into()));
    }
    if !(polarization >= 0.0) || polarization.fract() != 0.0 {
        return Err(Error::Parameter(
            "polarization must be a non-negative integer".into(),
        ));
    }
    let c = build_clifford_model(4)?;
    let omega = branch * (mass * mass + kx * kx).sqrt();
    let k = c.gamma(0) * C64::new(omega, 0.0) + c.gamma(1) * C64::new(kx, 0.0);
    let p = &k + CMatrix::identity(4, 4) * C64::new(mass, 0.0);
    let start = polarization as usize;
    for j in 0..4 {
        let u = p.column((start + j) % 4).into_owned();
        let n = u.norm();
        if n > 1e-8 {
            return Ok((u / C64::new(n, 0.0), omega));
        }
    }
    Err(Error::Parameter(
        "no plane-wave spinor for these parameters".into(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spinor_lies_in_the_kernel() {
        let c = build_clifford_model(4).unwrap();
        for (mass, kx, branch) in [(1.0, 0.5, -1.0), (1.0, 0.5, 1.0), (0.0, 0.7, 1.0), (2.0, 0.0, -1.0)] {
            let (u, omega) = dirac_plane_wave_spinor(mass, kx, branch, 0.0).unwrap();
            let k = c.gamma(0) * C64::new(omega, 0.0) + c.gamma(1) * C64::new(kx, 0.0);
            let r = &k * &u - &u * C64::new(mass, 0.0);
            assert!(r.norm() < 1e-14, "{mass} {kx} {branch}");
            assert!((u.norm() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_unknown_parameters() {
        assert!(expand_builtin("higgs-vacuum-mexhat", &json!({"bogus": 1})).is_err());
        assert!(expand_builtin("nope", &json!({})).is_err());
    }
}
