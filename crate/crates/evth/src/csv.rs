//! Per-step monitor table.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use evth_core::MonitorReport;

use crate::error::RunError;

pub const SCHEMA: &str = "# evth-monitors v1";

pub const COLUMNS: [&str; 16] = [
    "step",
    "tau",
    "dt",
    "gauge_residual",
    "ham_sup",
    "ham_l2",
    "mom_sup",
    "breakdown_pointwise",
    "breakdown_integral",
    "pi_l1",
    "curvature_l2",
    "spectrum_min",
    "spectrum_max",
    "domain_radius",
    "wave_energy",
    "proper_time",
];

/// Values in column order. Floats use the shortest decimal that reads back to the same bits.
pub fn row(r: &MonitorReport) -> String {
    let vals = [
        r.tau,
        r.dt,
        r.gauge_residual,
        r.ham_sup,
        r.ham_l2,
        r.mom_sup,
        r.breakdown_pointwise,
        r.breakdown_integral_accum,
        r.pi_l1linf_accum,
        r.curvature_l2,
        r.spectrum_min,
        r.spectrum_max,
        r.domain_radius,
        r.wave_energy,
        r.proper_time,
    ];
    let mut s = r.step.to_string();
    for v in vals {
        s.push(',');
        s.push_str(&format!("{v:e}"));
    }
    s
}

pub struct CsvWriter {
    out: BufWriter<File>,
    path: PathBuf,
}

impl CsvWriter {
    pub fn create(path: &Path) -> Result<Self, RunError> {
        let file = File::create(path).map_err(|e| RunError::io(path, e))?;
        let mut w = CsvWriter {
            out: BufWriter::new(file),
            path: path.to_owned(),
        };
        w.line(SCHEMA)?;
        w.line(&COLUMNS.join(","))?;
        Ok(w)
    }

    fn line(&mut self, s: &str) -> Result<(), RunError> {
        writeln!(self.out, "{s}").map_err(|e| RunError::io(&self.path, e))
    }

    pub fn push(&mut self, r: &MonitorReport) -> Result<(), RunError> {
        self.line(&row(r))
    }

    pub fn finish(mut self) -> Result<(), RunError> {
        self.out.flush().map_err(|e| RunError::io(&self.path, e))
    }
}

/// Parse a monitor table back into rows of numbers, checking the schema line and header.
pub fn parse(text: &str) -> Result<Vec<[f64; 16]>, String> {
    let mut lines = text.lines();
    if lines.next() != Some(SCHEMA) {
        return Err("missing schema line".into());
    }
    if lines.next() != Some(COLUMNS.join(",").as_str()) {
        return Err("unexpected header".into());
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let vals: Vec<f64> = line
                .split(',')
                .map(|v| v.parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| format!("row {i}: {e}"))?;
            vals.try_into()
                .map_err(|v: Vec<f64>| format!("row {i}: {} columns", v.len()))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_read_back_exactly() {
        let r = MonitorReport {
            step: 7,
            tau: -0.1,
            dt: 1.0 / 3.0,
            domain_radius: f64::INFINITY,
            ham_sup: 3.2e-17,
            ..Default::default()
        };
        let text = format!("{SCHEMA}\n{}\n{}\n", COLUMNS.join(","), row(&r));
        let rows = parse(&text).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0][0], 7.0);
        assert_eq!(rows[0][2].to_bits(), (1.0f64 / 3.0).to_bits());
        assert_eq!(rows[0][4], 3.2e-17);
        assert!(rows[0][13].is_infinite());
    }
}
