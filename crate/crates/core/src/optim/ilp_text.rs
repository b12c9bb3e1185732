//! Line-oriented text form of an [`IlpInstance`]:
//!
//! ```text
//! # comment
//! c <amplitude>
//! w <w_1> ... <w_n>
//! a <a_11> ... <a_1n>      one line per constraint row
//! b <b_1> ... <b_k>
//! l <lambda objective> <g_1> ... <g_k>   optional continuous variable
//! ```
//!
//! Numbers use the shortest representation that round-trips exactly.

use std::fmt::Write as _;

use nalgebra::DMatrix;

use super::realify::{ContinuousVar, IlpInstance};
use crate::error::{IsacError, Result};

fn join(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| format!("{v:?}"))
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn write_ilp(inst: &IlpInstance) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "c {:?}", inst.amplitude);
    let _ = writeln!(out, "w {}", join(&inst.objective));
    for i in 0..inst.n_constraints() {
        let row: Vec<f64> = inst.constraint_matrix.row(i).iter().copied().collect();
        let _ = writeln!(out, "a {}", join(&row));
    }
    let _ = writeln!(out, "b {}", join(&inst.rhs));
    if let Some(cv) = &inst.continuous_var {
        let _ = writeln!(out, "l {:?} {}", cv.objective, join(&cv.coupling));
    }
    out
}

pub fn parse_ilp(text: &str) -> Result<IlpInstance> {
    let err = |line: usize, msg: &str| IsacError::Parse {
        line,
        msg: msg.to_string(),
    };
    let mut amplitude = None;
    let mut objective = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut rhs = None;
    let mut lambda = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let key = parts.next().unwrap_or_default();
        let values = parts
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| err(line_no, &format!("bad number {t:?}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        match key {
            "c" if values.len() == 1 && amplitude.is_none() => amplitude = Some(values[0]),
            "w" if objective.is_none() => objective = Some(values),
            "a" => rows.push(values),
            "b" if rhs.is_none() => rhs = Some(values),
            "l" if !values.is_empty() && lambda.is_none() => {
                lambda = Some(ContinuousVar {
                    objective: values[0],
                    coupling: values[1..].to_vec(),
                })
            }
            _ => return Err(err(line_no, &format!("unexpected or repeated record {key:?}"))),
        }
    }
    let objective = objective.ok_or_else(|| err(0, "missing objective record 'w'"))?;
    let n = objective.len();
    if let Some(bad) = rows.iter().position(|r| r.len() != n) {
        return Err(err(0, &format!("constraint row {} has the wrong length", bad + 1)));
    }
    let k = rows.len();
    let constraint_matrix = DMatrix::from_fn(k, n, |i, j| rows[i][j]);
    let inst = IlpInstance {
        objective,
        constraint_matrix,
        rhs: rhs.unwrap_or_default(),
        amplitude: amplitude.ok_or_else(|| err(0, "missing amplitude record 'c'"))?,
        continuous_var: lambda,
    };
    inst.validate()?;
    Ok(inst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let inst = IlpInstance {
            objective: vec![0.1, -2.5e-17, 3.0],
            constraint_matrix: DMatrix::from_row_slice(2, 3, &[1.0, 1.0 / 3.0, -0.7, 0.0, 2.0, 1e300]),
            rhs: vec![0.25, -1.0],
            amplitude: (1.0f64 / 6.0).sqrt(),
            continuous_var: Some(ContinuousVar {
                objective: 1.0,
                coupling: vec![1.0, 0.5],
            }),
        };
        let text = write_ilp(&inst);
        assert_eq!(parse_ilp(&text).unwrap(), inst);
    }

    #[test]
    fn comments_and_missing_rows() {
        let inst = parse_ilp("# tiny\nc 1\nw 1 -1\n").unwrap();
        assert_eq!(inst.n_constraints(), 0);
        assert!(parse_ilp("c 1\nw 1 2\na 1\nb 0\n").is_err());
        assert!(parse_ilp("w 1\n").is_err());
        assert!(matches!(
            parse_ilp("c 1\nw 1 x\n"),
            Err(IsacError::Parse { line: 2, .. })
        ));
    }
}
