//! Trace CSV and run-summary JSON.
//!
//! Trace columns, in order:
//! `k, x_0 .. x_{n-1}, err_xy, err_step, sigma, rho, m, prox_flag`.
//! The `x_i` columns hold the point handed on by iteration `k` (the iterate
//! itself when that iteration stopped before stepping). `err_step` is empty
//! when no projected step was taken. Reals are printed with 17 significant
//! digits.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::solver::{IterationRecord, SolveResult, Status};

/// Formats a real with 17 significant digits.
pub fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn trace_header(n: usize) -> String {
    let mut cols = vec!["k".to_string()];
    cols.extend((0..n).map(|i| format!("x_{i}")));
    cols.extend(
        ["err_xy", "err_step", "sigma", "rho", "m", "prox_flag"]
            .iter()
            .map(|s| s.to_string()),
    );
    cols.join(",")
}

pub fn trace_row(r: &IterationRecord) -> String {
    let mut cols = vec![r.k.to_string()];
    cols.extend(r.x_next.iter().map(|&v| fmt_real(v)));
    cols.push(fmt_real(r.err_xy));
    cols.push(r.err_step.map(fmt_real).unwrap_or_default());
    cols.push(fmt_real(r.sigma));
    cols.push(fmt_real(r.rho));
    cols.push(r.m.to_string());
    cols.push(u8::from(r.prox_flag).to_string());
    cols.join(",")
}

pub fn write_trace_csv<W: Write>(mut out: W, n: usize, trace: &[IterationRecord]) -> std::io::Result<()> {
    writeln!(out, "{}", trace_header(n))?;
    for r in trace {
        writeln!(out, "{}", trace_row(r))?;
    }
    Ok(())
}

pub fn trace_csv_string(n: usize, trace: &[IterationRecord]) -> String {
    let mut buf = Vec::new();
    write_trace_csv(&mut buf, n, trace).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("ascii output")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub problem: String,
    pub status: Status,
    pub note: String,
    pub iterations: usize,
    #[serde(rename = "final")]
    pub final_point: Vec<f64>,
    pub final_error: Option<f64>,
    pub wall_time_s: f64,
    pub start_projected: bool,
}

impl Summary {
    pub fn new(problem: &str, result: &SolveResult, wall_time_s: f64) -> Self {
        let err = result.final_error();
        Summary {
            problem: problem.to_string(),
            status: result.status,
            note: result.status.note().to_string(),
            iterations: result.iterations,
            final_point: result.final_point.as_slice().to_vec(),
            final_error: err.is_finite().then_some(err),
            wall_time_s,
            start_projected: result.start_projected,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::Point;

    fn record(k: usize, step: Option<f64>) -> IterationRecord {
        IterationRecord {
            k,
            x: Point::new(vec![1.0, 2.0]).unwrap(),
            y: Point::new(vec![0.0, 0.0]).unwrap(),
            z: None,
            m: 3,
            g: None,
            rho: 1.0,
            sigma: 0.5,
            x_next: Point::new(vec![0.1, 1.0 / 3.0]).unwrap(),
            err_xy: 0.25,
            err_step: step,
            prox_flag: false,
        }
    }

    #[test]
    fn golden_trace_format() {
        let csv = trace_csv_string(2, &[record(0, Some(1.5)), record(1, None)]);
        let expected = "\
k,x_0,x_1,err_xy,err_step,sigma,rho,m,prox_flag
0,1.0000000000000001e-1,3.3333333333333331e-1,2.5000000000000000e-1,1.5000000000000000e0,5.0000000000000000e-1,1.0000000000000000e0,3,0
1,1.0000000000000001e-1,3.3333333333333331e-1,2.5000000000000000e-1,,5.0000000000000000e-1,1.0000000000000000e0,3,0
";
        assert_eq!(csv, expected);
    }

    #[test]
    fn seventeen_digits_round_trip() {
        for v in [0.1, 1.0 / 3.0, 2.0f64.sqrt(), 1e-300, -7.25e12] {
            assert_eq!(fmt_real(v).parse::<f64>().unwrap(), v);
        }
    }
}
