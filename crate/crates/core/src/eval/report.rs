use std::fmt::Write as _;
use std::path::Path;

use super::metrics::{mean_std, Metrics, METRIC_NAMES};
use crate::error::{Error, Result};

/// Per-repeat metrics of one run plus the settings that produced them.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricsReport {
    pub mode: String,
    pub provenance: Vec<(String, String)>,
    pub repeats: Vec<[f64; 4]>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SummaryRow {
    pub name: &'static str,
    pub mean: f64,
    pub std: f64,
}

impl MetricsReport {
    pub fn new(mode: impl Into<String>, provenance: Vec<(String, String)>, metrics: &[Metrics]) -> Self {
        MetricsReport {
            mode: mode.into(),
            provenance,
            repeats: metrics.iter().map(Metrics::values).collect(),
        }
    }

    pub fn summary(&self) -> Vec<SummaryRow> {
        METRIC_NAMES
            .iter()
            .enumerate()
            .map(|(j, &name)| {
                let col: Vec<f64> = self.repeats.iter().map(|r| r[j]).collect();
                let (mean, std) = mean_std(&col);
                SummaryRow { name, mean, std }
            })
            .collect()
    }

    pub fn mean(&self, metric: &str) -> Option<f64> {
        self.summary().into_iter().find(|r| r.name == metric).map(|r| r.mean)
    }

    /// `# key=value` provenance lines, one row per repeat, a blank line, then
    /// the mean and standard deviation of each metric.
    pub fn render_csv(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.provenance {
            let _ = writeln!(out, "# {k}={v}");
        }
        let _ = writeln!(out, "mode,repeat,{}", METRIC_NAMES.join(","));
        for (r, vals) in self.repeats.iter().enumerate() {
            let _ = write!(out, "{},{r}", self.mode);
            for v in vals {
                let _ = write!(out, ",{v:?}");
            }
            out.push('\n');
        }
        out.push('\n');
        out.push_str("metric,mean,std\n");
        for row in self.summary() {
            let _ = writeln!(out, "{},{:.6},{:.6}", row.name, row.mean, row.std);
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.render_csv())?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<MetricsReport> {
        parse_report(&std::fs::read_to_string(path)?, path)
    }

    /// Human-readable table of the summary.
    pub fn render_table(&self) -> String {
        let mut out = format!("mode: {} ({} repeats)\n", self.mode, self.repeats.len());
        let _ = writeln!(out, "{:<10} {:>9} {:>9}", "metric", "mean", "std");
        for row in self.summary() {
            let _ = writeln!(out, "{:<10} {:>9.4} {:>9.4}", row.name, row.mean, row.std);
        }
        out
    }
}

fn parse_error(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        column: 1,
        message: message.into(),
    }
}

/// Inverse of [`MetricsReport::render_csv`]; the summary block is recomputed
/// rather than read.
pub fn parse_report(text: &str, path: &Path) -> Result<MetricsReport> {
    let mut provenance = Vec::new();
    let mut repeats = Vec::new();
    let mut mode = None;
    let mut in_rows = false;
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if let Some(rest) = line.strip_prefix('#') {
            let (k, v) = rest
                .trim()
                .split_once('=')
                .ok_or_else(|| parse_error(path, lineno, "expected `# key=value`"))?;
            provenance.push((k.to_string(), v.to_string()));
            continue;
        }
        if line.starts_with("mode,repeat") {
            in_rows = true;
            continue;
        }
        if line.trim().is_empty() {
            if in_rows {
                break;
            }
            continue;
        }
        if !in_rows {
            return Err(parse_error(path, lineno, "missing `mode,repeat,...` header"));
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 2 + METRIC_NAMES.len() {
            return Err(parse_error(path, lineno, format!("expected {} fields", 2 + METRIC_NAMES.len())));
        }
        mode.get_or_insert_with(|| fields[0].to_string());
        let mut vals = [0.0; 4];
        for (j, raw) in fields[2..].iter().enumerate() {
            vals[j] = raw
                .parse()
                .map_err(|_| parse_error(path, lineno, format!("`{raw}` is not a number")))?;
        }
        repeats.push(vals);
    }
    let mode = mode.ok_or_else(|| parse_error(path, 1, "report has no rows"))?;
    Ok(MetricsReport {
        mode,
        provenance,
        repeats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::metrics::compute_metrics;

    #[test]
    fn render_parse_round_trip() {
        let ms = [
            compute_metrics(&[1, 0, 1, 1], &[1, 0, 0, 1], 1).unwrap(),
            compute_metrics(&[0, 0, 1, 1], &[1, 0, 0, 1], 1).unwrap(),
        ];
        let r = MetricsReport::new("mvl", vec![("seed".into(), "3".into())], &ms);
        let text = r.render_csv();
        assert!(text.starts_with("# seed=3\nmode,repeat,accuracy,precision,recall,f1\nmvl,0,0.75,"));
        assert!(text.contains("\n\nmetric,mean,std\naccuracy,0.625000,0.125000\n"));
        let back = parse_report(&text, Path::new("r.csv")).unwrap();
        assert_eq!(back.mode, "mvl");
        assert_eq!(back.provenance, r.provenance);
        assert_eq!(back.repeats.len(), 2);
        assert_eq!(back.render_csv(), text);
    }

    #[test]
    fn malformed_row() {
        let err = parse_report("mode,repeat,accuracy,precision,recall,f1\nmvl,0,x,1,1,1\n", Path::new("r"));
        assert!(matches!(err, Err(Error::Parse { line: 2, .. })));
    }
}
