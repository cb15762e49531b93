use std::fmt;
use std::io::Read;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::model::Label;
use crate::numeric::FixedPoint;

/// Standardized, quantized features with binary labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dataset {
    pub name: String,
    pub d: usize,
    pub scale: i64,
    pub rows: Vec<Vec<i64>>,
    pub labels: Vec<Label>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Write as CSV with a header `f0..f{d-1},label`, values as decimals.
    pub fn to_csv(&self) -> Result<String, EvalError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header: Vec<String> = (0..self.d).map(|j| format!("f{j}")).collect();
        header.push("label".into());
        w.write_record(&header)?;
        for (row, label) in self.rows.iter().zip(&self.labels) {
            let mut rec: Vec<String> = row
                .iter()
                .map(|&v| FixedPoint::new(v, self.scale).to_string())
                .collect();
            rec.push(label.to_string());
            w.write_record(&rec)?;
        }
        let bytes = w.into_inner().map_err(|e| EvalError::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// Column-wise z-score; constant columns become 0.
pub fn standardize(rows: &mut [Vec<f64>]) {
    let Some(d) = rows.first().map(Vec::len) else {
        return;
    };
    let n = rows.len() as f64;
    for j in 0..d {
        let mean = rows.iter().map(|r| r[j]).sum::<f64>() / n;
        let var = rows.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n;
        let sd = var.sqrt();
        for r in rows.iter_mut() {
            r[j] = if sd > 0.0 { (r[j] - mean) / sd } else { 0.0 };
        }
    }
}

fn quantize_rows(rows: &[Vec<f64>], scale: i64) -> Result<Vec<Vec<i64>>, EvalError> {
    rows.iter()
        .map(|r| {
            r.iter()
                .map(|&v| Ok(FixedPoint::quantize(v, scale)?.raw))
                .collect::<Result<Vec<_>, EvalError>>()
        })
        .collect()
}

/// Shapes of the three tabular benchmarks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetShape {
    Adult,
    Credit,
    German,
}

impl DatasetShape {
    pub fn dim(self) -> usize {
        match self {
            DatasetShape::Adult => 14,
            DatasetShape::Credit => 23,
            DatasetShape::German => 20,
        }
    }

    pub fn all() -> [DatasetShape; 3] {
        [DatasetShape::Adult, DatasetShape::Credit, DatasetShape::German]
    }
}

impl fmt::Display for DatasetShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DatasetShape::Adult => "adult",
            DatasetShape::Credit => "credit",
            DatasetShape::German => "german",
        })
    }
}

impl FromStr for DatasetShape {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "adult" => Ok(DatasetShape::Adult),
            "credit" => Ok(DatasetShape::Credit),
            "german" => Ok(DatasetShape::German),
            _ => Err(EvalError::Input(format!("unknown dataset {s:?}"))),
        }
    }
}

/// Correlated gaussian features, a few heavy-tailed columns, and labels
/// from a noisy random hyperplane with a quadratic term.
pub fn synthetic(shape: DatasetShape, rows: usize, seed: u64, scale: i64) -> Result<Dataset, EvalError> {
    let d = shape.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (d as u64) << 32);
    let mix: Vec<f64> = (0..d).map(|_| rng.random_range(-0.5..0.5)).collect();
    let coef: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
    let mut feats = Vec::with_capacity(rows);
    let mut labels = Vec::with_capacity(rows);
    for _ in 0..rows {
        let common: f64 = StandardNormal.sample(&mut rng);
        let row: Vec<f64> = (0..d)
            .map(|j| {
                let g: f64 = StandardNormal.sample(&mut rng);
                let v = g + mix[j] * common;
                // every fourth column is log-normal, like counts and amounts
                if j % 4 == 3 {
                    v.exp()
                } else {
                    v
                }
            })
            .collect();
        let noise: f64 = StandardNormal.sample(&mut rng);
        let score: f64 =
            row.iter().zip(&coef).map(|(a, b)| a * b).sum::<f64>() + 0.3 * row[0] * row[0] + 0.5 * noise;
        labels.push(Label((score > 0.0) as u8));
        feats.push(row);
    }
    standardize(&mut feats);
    Ok(Dataset {
        name: shape.to_string(),
        d,
        scale,
        rows: quantize_rows(&feats, scale)?,
        labels,
    })
}

/// Load a CSV with a header. The label column is `label_column` or the
/// last one; labels must be 0/1. Features are standardized.
pub fn load_csv<R: Read>(
    reader: R,
    name: &str,
    label_column: Option<&str>,
    scale: i64,
) -> Result<Dataset, EvalError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.len() < 2 {
        return Err(EvalError::Input(
            "need at least one feature and a label column".into(),
        ));
    }
    let label_idx = match label_column {
        Some(c) => headers
            .iter()
            .position(|h| h == c)
            .ok_or_else(|| EvalError::Input(format!("no column named {c:?}")))?,
        None => headers.len() - 1,
    };
    let mut feats = Vec::new();
    let mut labels = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let mut row = Vec::with_capacity(headers.len() - 1);
        for (j, field) in rec.iter().enumerate() {
            let v: f64 = field.trim().parse().map_err(|_| {
                EvalError::Input(format!(
                    "line {line}, column {:?}: not a number: {field:?}",
                    &headers[j]
                ))
            })?;
            if j == label_idx {
                if v != 0.0 && v != 1.0 {
                    return Err(EvalError::Input(format!(
                        "line {line}: label must be 0 or 1, got {v}"
                    )));
                }
                labels.push(Label(v as u8));
            } else {
                row.push(v);
            }
        }
        feats.push(row);
    }
    if feats.is_empty() {
        return Err(EvalError::Input("no data rows".into()));
    }
    standardize(&mut feats);
    Ok(Dataset {
        name: name.to_string(),
        d: headers.len() - 1,
        scale,
        rows: quantize_rows(&feats, scale)?,
        labels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::DEFAULT_SCALE;

    #[test]
    fn synthetic_shapes() {
        for shape in DatasetShape::all() {
            let ds = synthetic(shape, 500, 1, DEFAULT_SCALE).unwrap();
            assert_eq!(ds.d, shape.dim());
            assert_eq!(ds.len(), 500);
            assert!(ds.rows.iter().all(|r| r.len() == ds.d));
            let ones = ds.labels.iter().filter(|l| l.0 == 1).count();
            assert!(ones > 50 && ones < 450, "{shape}: {ones}");
            // standardized columns
            for j in 0..ds.d {
                let mean = ds.rows.iter().map(|r| r[j] as f64).sum::<f64>() / 500.0 / DEFAULT_SCALE as f64;
                assert!(mean.abs() < 1e-3);
            }
        }
        assert_eq!(
            synthetic(DatasetShape::German, 10, 3, DEFAULT_SCALE).unwrap(),
            synthetic(DatasetShape::German, 10, 3, DEFAULT_SCALE).unwrap()
        );
    }

    #[test]
    fn csv_round_trip() {
        let ds = synthetic(DatasetShape::Adult, 40, 2, DEFAULT_SCALE).unwrap();
        let text = ds.to_csv().unwrap();
        let back = load_csv(text.as_bytes(), "adult", None, DEFAULT_SCALE).unwrap();
        assert_eq!(back.labels, ds.labels);
        for (a, b) in back.rows.iter().flatten().zip(ds.rows.iter().flatten()) {
            // re-standardizing standardized data moves values by rounding only
            assert!((a - b).abs() <= 2, "{a} vs {b}");
        }
    }

    #[test]
    fn csv_errors_carry_context() {
        let err = load_csv("a,b,label\n1,2,0\n3,x,1\n".as_bytes(), "t", None, DEFAULT_SCALE).unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
        let err = load_csv("a,label\n1,2\n".as_bytes(), "t", None, DEFAULT_SCALE).unwrap_err();
        assert!(err.to_string().contains("label must be 0 or 1"));
        let ds = load_csv("y,a,b\n1,5,6\n0,7,8\n".as_bytes(), "t", Some("y"), DEFAULT_SCALE).unwrap();
        assert_eq!(ds.d, 2);
        assert_eq!(ds.labels, vec![Label::ONE, Label::ZERO]);
        assert_eq!(ds.rows[0], vec![-DEFAULT_SCALE, -DEFAULT_SCALE]);
    }
}
