// SPDX-License-Identifier: Apache-2.0

//! JSON system files.
//!
//! ```json
//! {"kind": "lti", "A": [[...]], "B": [[...]], "C": [[...]], "H": [1, 2], "meta": {}}
//! {"kind": "ls", "A_i": [[[...]], ...], "B_i": [[[...]], ...], "C": [[...]], "H": [...]}
//! ```
//!
//! Matrices are row-major nested arrays. `H` is optional; for `ls` files it
//! lists the interval of each mode in order.

use std::path::Path;

use sdmor::matops::{from_rows, to_rows};
use sdmor::systems::{Mode, Validate};
use sdmor::{ContinuousLtiSystem, Matrix, SwitchedLinearSystem};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, CliResult};
use crate::io::read_text;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Kind {
    Lti,
    Ls,
}

type Rows = Vec<Vec<f64>>;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Raw {
    kind: Kind,
    #[serde(rename = "A", default, skip_serializing_if = "Option::is_none")]
    a: Option<Rows>,
    #[serde(rename = "B", default, skip_serializing_if = "Option::is_none")]
    b: Option<Rows>,
    #[serde(rename = "A_i", default, skip_serializing_if = "Option::is_none")]
    a_i: Option<Vec<Rows>>,
    #[serde(rename = "B_i", default, skip_serializing_if = "Option::is_none")]
    b_i: Option<Vec<Rows>>,
    #[serde(rename = "C", default, skip_serializing_if = "Option::is_none")]
    c: Option<Rows>,
    #[serde(rename = "H", default, skip_serializing_if = "Option::is_none")]
    h: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    meta: Option<Value>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SystemData {
    Lti(ContinuousLtiSystem),
    Ls(SwitchedLinearSystem),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemFile {
    pub data: SystemData,
    pub h: Option<Vec<f64>>,
    pub meta: Option<Value>,
}

fn matrix(rows: Option<Rows>, name: &str) -> CliResult<Matrix> {
    let rows = rows.ok_or_else(|| CliError::validate(format!("missing field \"{name}\"")))?;
    from_rows(&rows, None).map_err(|e| CliError::validate(format!("\"{name}\": {e}")))
}

fn parse_json<T: for<'de> Deserialize<'de>>(text: &str, origin: &str) -> CliResult<T> {
    serde_json::from_str(text).map_err(|e| {
        CliError::parse(format!(
            "{origin}: line {}, column {}: {e}",
            e.line(),
            e.column()
        ))
    })
}

impl SystemFile {
    pub fn lti(plant: ContinuousLtiSystem, h: Option<Vec<f64>>, meta: Option<Value>) -> Self {
        Self {
            data: SystemData::Lti(plant),
            h,
            meta,
        }
    }

    pub fn ls(sys: SwitchedLinearSystem, h: Option<Vec<f64>>, meta: Option<Value>) -> Self {
        Self {
            data: SystemData::Ls(sys),
            h,
            meta,
        }
    }

    pub fn parse(text: &str, origin: &str) -> CliResult<Self> {
        let raw: Raw = parse_json(text, origin)?;
        let invalid = |msg: String| CliError::validate(format!("{origin}: {msg}"));
        let data = match raw.kind {
            Kind::Lti => {
                if raw.a_i.is_some() || raw.b_i.is_some() {
                    return Err(invalid("\"A_i\"/\"B_i\" are only allowed for kind \"ls\"".into()));
                }
                let plant = ContinuousLtiSystem {
                    a: matrix(raw.a, "A")?,
                    b: matrix(raw.b, "B")?,
                    c: matrix(raw.c, "C")?,
                };
                plant.validate().map_err(|e| invalid(e.to_string()))?;
                SystemData::Lti(plant)
            }
            Kind::Ls => {
                if raw.a.is_some() || raw.b.is_some() {
                    return Err(invalid("\"A\"/\"B\" are only allowed for kind \"lti\"".into()));
                }
                let a_i = raw.a_i.ok_or_else(|| invalid("missing field \"A_i\"".into()))?;
                let b_i = raw.b_i.ok_or_else(|| invalid("missing field \"B_i\"".into()))?;
                if a_i.len() != b_i.len() {
                    return Err(invalid(format!("{} A_i but {} B_i", a_i.len(), b_i.len())));
                }
                let modes = a_i
                    .into_iter()
                    .zip(b_i)
                    .enumerate()
                    .map(|(i, (a, b))| {
                        Ok(Mode {
                            a: matrix(Some(a), &format!("A_i[{i}]"))?,
                            b: matrix(Some(b), &format!("B_i[{i}]"))?,
                        })
                    })
                    .collect::<CliResult<Vec<_>>>()?;
                let sys = SwitchedLinearSystem {
                    modes,
                    c: matrix(raw.c, "C")?,
                };
                sys.validate().map_err(|e| invalid(e.to_string()))?;
                if let Some(h) = &raw.h {
                    if h.len() != sys.num_modes() {
                        return Err(invalid(format!(
                            "\"H\" has {} entries for {} modes",
                            h.len(),
                            sys.num_modes()
                        )));
                    }
                }
                SystemData::Ls(sys)
            }
        };
        Ok(Self {
            data,
            h: raw.h,
            meta: raw.meta,
        })
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        Self::parse(&read_text(path)?, &path.display().to_string())
    }

    pub fn to_json(&self) -> String {
        let mut raw = Raw {
            kind: Kind::Lti,
            a: None,
            b: None,
            a_i: None,
            b_i: None,
            c: None,
            h: self.h.clone(),
            meta: self.meta.clone(),
        };
        match &self.data {
            SystemData::Lti(p) => {
                raw.a = Some(to_rows(&p.a));
                raw.b = Some(to_rows(&p.b));
                raw.c = Some(to_rows(&p.c));
            }
            SystemData::Ls(s) => {
                raw.kind = Kind::Ls;
                raw.a_i = Some(s.modes.iter().map(|m| to_rows(&m.a)).collect());
                raw.b_i = Some(s.modes.iter().map(|m| to_rows(&m.b)).collect());
                raw.c = Some(to_rows(&s.c));
            }
        }
        serde_json::to_string_pretty(&raw).expect("system file serializes") + "\n"
    }

    pub fn plant(&self) -> CliResult<&ContinuousLtiSystem> {
        match &self.data {
            SystemData::Lti(p) => Ok(p),
            SystemData::Ls(_) => Err(CliError::validate("expected a system file of kind \"lti\"")),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawP {
    #[serde(rename = "P")]
    p: Rows,
}

/// `{"P": [[...]]}`
pub fn load_p(path: &Path) -> CliResult<Matrix> {
    let origin = path.display().to_string();
    let raw: RawP = parse_json(&read_text(path)?, &origin)?;
    let p = from_rows(&raw.p, None).map_err(|e| CliError::validate(format!("{origin}: \"P\": {e}")))?;
    if p.nrows() != p.ncols() {
        return Err(CliError::validate(format!("{origin}: \"P\" is not square")));
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    const PLANT: &str = r#"{"kind": "lti", "A": [[-1, 0.5], [0, -2]], "B": [[1], [0.25]], "C": [[1, 0]], "H": [1, 2]}"#;

    #[test]
    fn parses_plant() {
        let f = SystemFile::parse(PLANT, "t").unwrap();
        let p = f.plant().unwrap();
        assert_eq!(p.a[(0, 1)], 0.5);
        assert_eq!(p.b[(1, 0)], 0.25);
        assert_eq!(f.h, Some(vec![1.0, 2.0]));
    }

    #[test]
    fn round_trip_is_exact() {
        let awkward = [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE, std::f64::consts::PI];
        let a = Matrix::from_fn(6, 6, |i, j| awkward[(i + j) % 6] * (i as f64 + 1.0));
        let plant = ContinuousLtiSystem {
            a,
            b: Matrix::from_fn(6, 2, |i, j| awkward[(i * 2 + j) % 6]),
            c: Matrix::from_fn(1, 6, |_, j| awkward[j].abs().sqrt()),
        };
        let f = SystemFile::lti(plant, Some(vec![0.1, 0.15]), Some(serde_json::json!({"note": "x"})));
        assert_eq!(SystemFile::parse(&f.to_json(), "t").unwrap(), f);
        let ls = SwitchedLinearSystem {
            modes: vec![
                Mode {
                    a: Matrix::from_element(2, 2, 0.1),
                    b: Matrix::from_element(2, 1, 1.0 / 7.0),
                },
                Mode {
                    a: Matrix::from_element(2, 2, -0.3),
                    b: Matrix::from_element(2, 1, 2.0 / 3.0),
                },
            ],
            c: Matrix::from_element(1, 2, 1.0),
        };
        let f = SystemFile::ls(ls, Some(vec![0.2, 0.4]), None);
        assert_eq!(SystemFile::parse(&f.to_json(), "t").unwrap(), f);
    }

    #[test]
    fn malformed_json_reports_position() {
        let err = SystemFile::parse("{\"kind\": \"lti\",\n \"A\": [[1,]]}", "bad.json").unwrap_err();
        assert_eq!(err.code, crate::error::ExitCode::Parse);
        assert!(err.message.contains("line 2"), "{}", err.message);
    }

    #[test]
    fn shape_errors_are_validation_errors() {
        let bad = r#"{"kind": "lti", "A": [[-1, 0], [0, -2]], "B": [[1]], "C": [[1, 0]]}"#;
        assert_eq!(SystemFile::parse(bad, "t").unwrap_err().code, crate::error::ExitCode::Validate);
        let ragged = r#"{"kind": "lti", "A": [[-1, 0], [0]], "B": [[1], [1]], "C": [[1, 0]]}"#;
        assert_eq!(SystemFile::parse(ragged, "t").unwrap_err().code, crate::error::ExitCode::Validate);
        let h = r#"{"kind": "ls", "A_i": [[[0.5]]], "B_i": [[[1]]], "C": [[1]], "H": [1, 2]}"#;
        assert_eq!(SystemFile::parse(h, "t").unwrap_err().code, crate::error::ExitCode::Validate);
    }
}
