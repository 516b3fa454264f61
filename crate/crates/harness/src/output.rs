//! CSV layouts for per-run artifacts.

use std::path::Path;

use qdiv_core::agents::TrainingRecord;
use qdiv_core::regularizers::{gini, NormList};

use crate::error::{read_file, HarnessError, Result};

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// `step, return_mean, return_std, loss, reg_value, l2_norm_1..N`.
pub fn training_csv(records: &[TrainingRecord], members: usize) -> String {
    let mut out = String::from("step,return_mean,return_std,loss,reg_value");
    for i in 1..=members {
        out.push_str(&format!(",l2_norm_{i}"));
    }
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{}",
            r.step,
            r.return_mean,
            r.return_std,
            opt(r.loss),
            opt(r.reg_value)
        ));
        for n in &r.norms {
            out.push_str(&format!(",{n}"));
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormRow {
    pub step: u64,
    pub norms: Vec<f64>,
    pub gini: f64,
}

/// Norm inequality at each evaluation point; needs at least two members.
pub fn norm_log(records: &[TrainingRecord]) -> Result<Vec<NormRow>> {
    records
        .iter()
        .map(|r| {
            Ok(NormRow {
                step: r.step,
                gini: gini(&NormList::new(r.norms.clone())?),
                norms: r.norms.clone(),
            })
        })
        .collect()
}

/// `step, l2_norm_1..N, gini`.
pub fn norm_csv(rows: &[NormRow]) -> String {
    let n = rows.first().map_or(0, |r| r.norms.len());
    let mut out = String::from("step");
    for i in 1..=n {
        out.push_str(&format!(",l2_norm_{i}"));
    }
    out.push_str(",gini\n");
    for r in rows {
        out.push_str(&r.step.to_string());
        for v in &r.norms {
            out.push_str(&format!(",{v}"));
        }
        out.push_str(&format!(",{}\n", r.gini));
    }
    out
}

/// One parsed row of a training CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainRow {
    pub step: u64,
    pub return_mean: f64,
    pub return_std: f64,
    pub loss: Option<f64>,
    pub reg_value: Option<f64>,
    pub norms: Vec<f64>,
}

pub fn parse_training_csv(text: &str, file: &str) -> Result<Vec<TrainRow>> {
    let mut reader = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| parse_err(file, 1, e.to_string()))?
        .clone();
    let expected = ["step", "return_mean", "return_std", "loss", "reg_value"];
    if headers.len() < expected.len() || headers.iter().zip(expected).any(|(h, e)| h != e) {
        return Err(parse_err(file, 1, format!("unexpected header {:?}", headers.iter().collect::<Vec<_>>())));
    }
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        // header is row 1
        let row = i + 2;
        let rec = rec.map_err(|e| parse_err(file, row, e.to_string()))?;
        if rec.len() != headers.len() {
            return Err(parse_err(file, row, format!("{} fields, expected {}", rec.len(), headers.len())));
        }
        let num = |k: usize| -> Result<f64> {
            rec[k]
                .trim()
                .parse::<f64>()
                .map_err(|_| parse_err(file, row, format!("column `{}`: bad number `{}`", &headers[k], &rec[k])))
        };
        let opt_num = |k: usize| -> Result<Option<f64>> {
            if rec[k].trim().is_empty() {
                Ok(None)
            } else {
                num(k).map(Some)
            }
        };
        let step = rec[0]
            .trim()
            .parse::<u64>()
            .map_err(|_| parse_err(file, row, format!("column `step`: bad integer `{}`", &rec[0])))?;
        rows.push(TrainRow {
            step,
            return_mean: num(1)?,
            return_std: num(2)?,
            loss: opt_num(3)?,
            reg_value: opt_num(4)?,
            norms: (5..rec.len()).map(num).collect::<Result<_>>()?,
        });
    }
    Ok(rows)
}

pub fn read_training_csv(path: &Path) -> Result<Vec<TrainRow>> {
    parse_training_csv(&read_file(path)?, &path.display().to_string())
}

fn parse_err(file: &str, row: usize, msg: String) -> HarnessError {
    HarnessError::Parse {
        file: file.to_string(),
        row,
        msg,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(step: u64, loss: Option<f64>) -> TrainingRecord {
        TrainingRecord {
            step,
            return_mean: 1.5,
            return_std: 0.25,
            loss,
            reg_value: None,
            norms: vec![2.0, 6.0],
        }
    }

    #[test]
    fn training_csv_round_trips() {
        let recs = vec![rec(10, None), rec(20, Some(0.125))];
        let text = training_csv(&recs, 2);
        assert!(text.starts_with("step,return_mean,return_std,loss,reg_value,l2_norm_1,l2_norm_2\n"));
        let rows = parse_training_csv(&text, "t.csv").unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].loss, None);
        assert_eq!(rows[1].loss, Some(0.125));
        assert_eq!(rows[1].norms, vec![2.0, 6.0]);
    }

    #[test]
    fn norm_log_has_gini() {
        let rows = norm_log(&[rec(10, None)]).unwrap();
        assert_eq!(rows[0].gini, 0.25);
        assert_eq!(norm_csv(&rows), "step,l2_norm_1,l2_norm_2,gini\n10,2,6,0.25\n");
    }

    #[test]
    fn parse_errors_name_the_row() {
        let text = "step,return_mean,return_std,loss,reg_value\n1,2,3,,\n2,oops,3,,\n";
        match parse_training_csv(text, "x.csv") {
            Err(HarnessError::Parse { row, msg, .. }) => {
                assert_eq!(row, 3);
                assert!(msg.contains("return_mean"));
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            parse_training_csv("a,b\n", "x.csv"),
            Err(HarnessError::Parse { row: 1, .. })
        ));
    }
}
