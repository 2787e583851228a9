use serde::Serialize;

use crate::scalar::{parse_scalar, Scalar};
use crate::transport::Distribution;
use crate::{Error, Result};

/// Coefficient array `pi`: row `n` is a probability vector on `0..=n` and row 0 is `delta^0`.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound = "")]
pub struct TriangularArray<S: Scalar = f64> {
    rows: Vec<Distribution<S>>,
}

impl<S: Scalar> TriangularArray<S> {
    pub fn new(rows: Vec<Distribution<S>>) -> Result<Self> {
        let Some(first) = rows.first() else {
            return Err(Error::InvalidInput("array needs at least row 0".into()));
        };
        if first.len() != 1 {
            return Err(Error::DimensionMismatch(format!("row 0 has {} weights, expected 1", first.len())));
        }
        for (n, row) in rows.iter().enumerate() {
            if row.len() != n + 1 {
                return Err(Error::DimensionMismatch(format!("row {n} has {} weights, expected {}", row.len(), n + 1)));
            }
        }
        Ok(Self { rows })
    }

    /// Validates raw weight rows.
    pub fn from_weights(rows: Vec<Vec<S>>) -> Result<Self> {
        let rows = rows
            .into_iter()
            .enumerate()
            .map(|(n, w)| {
                Distribution::new(w).map_err(|e| match e {
                    Error::NotAProbability(detail) => Error::NegativeWeight { row: n, detail },
                    other => other,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(rows)
    }

    /// The array holding only `pi^0 = delta^0`.
    pub fn initial() -> Self {
        Self { rows: vec![Distribution::dirac(0, 0)] }
    }

    pub fn horizon(&self) -> usize {
        self.rows.len() - 1
    }

    pub fn row(&self, n: usize) -> &Distribution<S> {
        &self.rows[n]
    }

    pub fn rows(&self) -> &[Distribution<S>] {
        &self.rows
    }

    /// Appends row `N + 1`.
    pub fn push(&mut self, row: Distribution<S>) -> Result<()> {
        let n = self.rows.len();
        if row.len() != n + 1 {
            return Err(Error::DimensionMismatch(format!("row {n} has {} weights, expected {}", row.len(), n + 1)));
        }
        self.rows.push(row);
        Ok(())
    }

    /// Rows `0..=horizon`.
    pub fn truncated(&self, horizon: usize) -> Result<Self> {
        if horizon > self.horizon() {
            return Err(Error::InvalidInput(format!(
                "horizon {horizon} exceeds the array horizon {}",
                self.horizon()
            )));
        }
        Ok(Self { rows: self.rows[..=horizon].to_vec() })
    }

    pub fn to_f64(&self) -> TriangularArray<f64> {
        TriangularArray { rows: self.rows.iter().map(Distribution::to_f64).collect() }
    }

    pub fn weights(&self) -> Vec<Vec<S>> {
        self.rows.iter().map(|r| r.weights().to_vec()).collect()
    }
}

/// Parses an array from JSON (`[[1], [0.5, 0.5], ...]`, numbers or `"p/q"`
/// strings) or from text with one row per line, entries separated by commas or
/// whitespace. Blank lines and lines starting with `#` are skipped. Errors name
/// the offending line (text) or row (JSON).
pub fn parse_array<S: Scalar>(input: &str) -> Result<TriangularArray<S>> {
    let trimmed = input.trim_start();
    let rows: Vec<Vec<S>> = if trimmed.starts_with('[') {
        let value: serde_json::Value = serde_json::from_str(input).map_err(|e| {
            Error::InvalidInput(format!("line {}: malformed JSON array: {e}", e.line()))
        })?;
        let outer = value
            .as_array()
            .ok_or_else(|| Error::InvalidInput("expected a JSON array of rows".into()))?;
        outer
            .iter()
            .enumerate()
            .map(|(n, row)| {
                let entries = row
                    .as_array()
                    .ok_or_else(|| Error::InvalidInput(format!("row {n}: expected an array of weights")))?;
                entries
                    .iter()
                    .enumerate()
                    .map(|(i, v)| {
                        let parsed = match v {
                            serde_json::Value::Number(x) => parse_scalar(&x.to_string()),
                            serde_json::Value::String(s) => parse_scalar(s),
                            _ => None,
                        };
                        parsed.ok_or_else(|| Error::InvalidInput(format!("row {n}, entry {i}: cannot parse {v}")))
                    })
                    .collect()
            })
            .collect::<Result<_>>()?
    } else {
        let mut rows = Vec::new();
        for (k, line) in input.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let row = line
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|t| !t.is_empty())
                .map(|t| {
                    parse_scalar(t).ok_or_else(|| Error::InvalidInput(format!("line {}: cannot parse {t:?}", k + 1)))
                })
                .collect::<Result<Vec<S>>>()?;
            rows.push(row);
        }
        rows
    };
    TriangularArray::from_weights(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    #[test]
    fn shape_is_enforced() {
        assert!(TriangularArray::from_weights(vec![vec![1.0], vec![0.5, 0.5]]).is_ok());
        assert!(TriangularArray::from_weights(vec![vec![1.0], vec![1.0]]).is_err());
        assert!(TriangularArray::<f64>::from_weights(vec![]).is_err());
        let err = TriangularArray::from_weights(vec![vec![1.0], vec![1.5, -0.5]]).unwrap_err();
        assert!(matches!(err, Error::NegativeWeight { row: 1, .. }));
    }

    #[test]
    fn parses_json_and_text() {
        let a: TriangularArray<Rational> = parse_array(r#"[[1], ["1/2", 0.5], [0, 0, 1]]"#).unwrap();
        assert_eq!(a.horizon(), 2);
        assert_eq!(a.row(1).weights()[0], Rational::ratio(1, 2));
        let b: TriangularArray<f64> = parse_array("# pi\n1\n0.5, 0.5\n\n0 0 1\n").unwrap();
        assert_eq!(b.row(2).weights(), &[0.0, 0.0, 1.0]);
        let err = parse_array::<f64>("1\n0.5 x\n").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }
}
