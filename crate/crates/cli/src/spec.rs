//! Connection spec files: a JSON object or `key = value` lines.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use stl_core::connection::{presets, SymplecticConnection};
use stl_core::exprfield::{Expr, Predicate, VarScheme};
use stl_core::linalg::RMat;

use crate::CliError;

/// A DSL field; bare numbers are accepted as constant expressions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Dsl {
    Text(String),
    Number(f64),
}

impl Dsl {
    fn text(&self) -> String {
        match self {
            Dsl::Text(s) => s.clone(),
            Dsl::Number(v) => format!("{v:?}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConnSpec {
    #[serde(default = "one")]
    pub n: usize,
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Dsl>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<Dsl>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<Dsl>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Dsl>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<Dsl>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<Dsl>,
    /// `A[i]` as row-major `2n × 2n` matrices.
    #[serde(default, rename = "A", skip_serializing_if = "Option::is_none")]
    pub matrices: Option<Vec<Vec<Vec<f64>>>>,
    /// `gamma[k][i][j] = Γ^k_{ij}`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<Vec<Vec<Vec<Dsl>>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_box: Option<Vec<(f64, f64)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

fn one() -> usize {
    1
}

const JSON_KEYS: [&str; 4] = ["A", "gamma", "sample_box", "n"];

impl ConnSpec {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let trimmed = text.trim_start();
        let value = if trimmed.starts_with('{') {
            serde_json::from_str::<serde_json::Value>(text).map_err(|e| CliError::Spec(format!("invalid JSON: {e}")))?
        } else {
            key_value_to_json(text)?
        };
        serde_json::from_value(value).map_err(|e| CliError::Spec(e.to_string()))
    }

    pub fn build(&self) -> Result<SymplecticConnection, CliError> {
        let n = self.n;
        if n == 0 {
            return Err(CliError::Spec("n must be positive".into()));
        }
        let scheme = VarScheme::base(n);
        let expr = |name: &str, f: &Option<Dsl>| -> Result<Expr, CliError> {
            let f = f.as_ref().ok_or_else(|| CliError::Spec(format!("kind `{}` needs field `{name}`", self.kind)))?;
            Expr::parse_with(&f.text(), &scheme).map_err(|e| CliError::Spec(format!("{name}: {e}")))
        };
        let need_plane = || {
            if n != 1 {
                Err(CliError::Spec(format!("kind `{}` requires n = 1", self.kind)))
            } else {
                Ok(())
            }
        };
        let conn = match self.kind.as_str() {
            "alpha_beta" => {
                need_plane()?;
                SymplecticConnection::from_alpha_beta(expr("alpha", &self.alpha)?, expr("beta", &self.beta)?)
            }
            "real_coeffs" => {
                need_plane()?;
                SymplecticConnection::from_real_coeffs(expr("a", &self.a)?, expr("b", &self.b)?, expr("c", &self.c)?, expr("d", &self.d)?)
            }
            "constant_A" => {
                let ms = self.matrices.as_ref().ok_or_else(|| CliError::Spec("kind `constant_A` needs field `A`".into()))?;
                let dim = 2 * n;
                let mut out = Vec::new();
                for (i, m) in ms.iter().enumerate() {
                    if m.len() != dim || m.iter().any(|r| r.len() != dim) {
                        return Err(CliError::Spec(format!("A[{i}] must be {dim}×{dim}")));
                    }
                    out.push(RMat::from_fn(dim, dim, |r, c| m[r][c]));
                }
                if out.len() != dim {
                    return Err(CliError::Spec(format!("A needs {dim} matrices, got {}", out.len())));
                }
                SymplecticConnection::constant(out)
            }
            "general_gamma" | "linear_gamma" => {
                let g = self.gamma.as_ref().ok_or_else(|| CliError::Spec(format!("kind `{}` needs field `gamma`", self.kind)))?;
                let mut parsed = Vec::new();
                for (k, plane) in g.iter().enumerate() {
                    let mut rows = Vec::new();
                    for (i, row) in plane.iter().enumerate() {
                        let mut cells = Vec::new();
                        for (j, cell) in row.iter().enumerate() {
                            cells.push(
                                Expr::parse_with(&cell.text(), &scheme).map_err(|e| CliError::Spec(format!("gamma[{k}][{i}][{j}]: {e}")))?,
                            );
                        }
                        rows.push(cells);
                    }
                    parsed.push(rows);
                }
                let conn = if self.kind == "linear_gamma" { SymplecticConnection::linear(parsed) } else { SymplecticConnection::from_gamma(parsed) };
                conn.and_then(|c| {
                    if c.n() != n {
                        Err(stl_core::Error::Dimension(format!("gamma describes n = {}, spec says n = {n}", c.n())))
                    } else {
                        Ok(c)
                    }
                })
            }
            other => {
                return Err(CliError::Spec(format!(
                    "unknown kind `{other}` (expected alpha_beta, real_coeffs, constant_A, general_gamma or linear_gamma)"
                )))
            }
        }
        .map_err(|e| CliError::Spec(e.to_string()))?;
        let mut conn = conn;
        if let Some(d) = &self.domain {
            conn = conn.with_domain(Predicate::parse_with(d, &scheme).map_err(|e| CliError::Spec(format!("domain: {e}")))?);
        }
        if let Some(bx) = &self.sample_box {
            if bx.len() != 2 * n || bx.iter().any(|(lo, hi)| !(lo < hi)) {
                return Err(CliError::Spec(format!("sample_box needs {} intervals with lo < hi", 2 * n)));
            }
            conn = conn.with_sample_box(bx.clone());
        }
        if let Some(l) = &self.label {
            conn = conn.with_label(l);
        }
        Ok(conn)
    }
}

fn key_value_to_json(text: &str) -> Result<serde_json::Value, CliError> {
    let mut map = serde_json::Map::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| CliError::Spec(format!("line {}: expected key = value", no + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        if map.contains_key(k) {
            return Err(CliError::Spec(format!("line {}: duplicate key `{k}`", no + 1)));
        }
        let value = if JSON_KEYS.contains(&k) {
            serde_json::from_str(v).map_err(|e| CliError::Spec(format!("line {}: `{k}` must be JSON: {e}", no + 1)))?
        } else {
            serde_json::Value::String(v.trim_matches('"').to_string())
        };
        map.insert(k.to_string(), value);
    }
    Ok(serde_json::Value::Object(map))
}

/// Where the connection came from, echoed into the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputEcho {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conn_file: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec: Option<ConnSpec>,
    pub args: BTreeMap<String, serde_json::Value>,
}

pub fn load(preset: Option<&str>, file: Option<&str>) -> Result<(SymplecticConnection, InputEcho), CliError> {
    match (preset, file) {
        (Some(_), Some(_)) => Err(CliError::Usage("--conn and --preset are mutually exclusive".into())),
        (None, None) => Err(CliError::Usage("a connection is required: pass --conn FILE or --preset NAME".into())),
        (Some(name), None) => {
            let conn = presets::by_name(name).map_err(|e| CliError::Usage(e.to_string()))?;
            Ok((conn, InputEcho { preset: Some(name.into()), conn_file: None, spec: None, args: BTreeMap::new() }))
        }
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Spec(format!("{path}: {e}")))?;
            let spec = ConnSpec::parse(&text)?;
            let conn = spec.build()?;
            Ok((conn, InputEcho { preset: None, conn_file: Some(path.into()), spec: Some(spec), args: BTreeMap::new() }))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_and_key_value_agree() {
        let j = ConnSpec::parse(r#"{"n":1, "kind":"alpha_beta", "alpha":"-2*zb/(1+abs2(z))", "beta":"0"}"#).unwrap();
        let k = ConnSpec::parse("# sphere\nkind = alpha_beta\nalpha = -2*zb/(1+abs2(z))\nbeta = 0\n").unwrap();
        assert_eq!(j, k);
        let c = j.build().unwrap();
        let s = presets::sphere();
        for p in [[0.2, 0.3], [-0.5, 0.1]] {
            let (a, b) = (c.christoffel(&p).unwrap(), s.christoffel(&p).unwrap());
            assert!(a.iter().zip(&b).all(|(u, v)| (u - v).amax() < 1e-15));
        }
    }

    #[test]
    fn numbers_accepted_as_expressions() {
        let j = ConnSpec::parse(r#"{"kind":"real_coeffs", "a":1, "b":0, "c":0, "d":0}"#).unwrap();
        let c = j.build().unwrap();
        assert!((c.christoffel(&[0.1, 0.2]).unwrap()[0].amax() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn constant_and_gamma_kinds() {
        let a = ConnSpec::parse("kind = constant_A\nA = [[[0,0],[-1,0]],[[0,0],[0,0]]]\n").unwrap();
        assert!(a.build().is_ok());
        let g = ConnSpec::parse(
            r#"{"kind":"general_gamma", "gamma":[[["0","0"],["0","0"]],[["0","0"],["0","0"]]], "domain":"x > 0", "sample_box":[[0.5,1],[0,1]]}"#,
        )
        .unwrap();
        let c = g.build().unwrap();
        assert!(!c.contains(&[-1.0, 0.0]));
        assert_eq!(c.sample_box(), &[(0.5, 1.0), (0.0, 1.0)]);
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(ConnSpec::parse(r#"{"kind":"alpha_beta", "alpha":"0", "beta":"0", "colour":"red"}"#).is_err());
        assert!(ConnSpec::parse("kind = alpha_beta\nalpha = 0\n").unwrap().build().is_err());
        assert!(ConnSpec::parse("kind = nope\n").unwrap().build().is_err());
        assert!(ConnSpec::parse("kind alpha_beta\n").is_err());
        // torsion is rejected for constant matrices
        assert!(ConnSpec::parse("kind = constant_A\nA = [[[0,1],[0,0]],[[0,0],[0,0]]]\n").unwrap().build().is_err());
        assert!(matches!(load(None, None), Err(CliError::Usage(_))));
        assert!(matches!(load(Some("nope"), None), Err(CliError::Usage(_))));
    }
}
