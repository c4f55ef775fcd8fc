//! On-disk dataset formats.
//!
//! A multi-view dataset directory holds `manifest.txt` (flat `key=value`
//! lines), one `view_{k}.csv` per view with header `f0,..,f{d_k-1}`, and
//! `labels.csv` with header `class`. Floats are written with Rust's
//! shortest round-trip formatting, so save → load is bitwise.
//!
//! A sequence directory holds `manifest.txt`, `client_{l}_labels.csv`
//! (`sample_id,class`) and `client_{l}_view_{k}.csv`
//! (`sample_id,t,f0,..`), one record per time step.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::{LabelMatrix, MultiViewDataset, MultiViewSequences, SequenceDataset, ViewMatrix};
use crate::error::{Error, Result};
use crate::numerics::Matrix;

pub const MANIFEST_FILE: &str = "manifest.txt";

/// Flat `key=value` file. Blank lines and `#` comments are ignored.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Manifest {
    pub entries: BTreeMap<String, String>,
}

impl Manifest {
    pub fn parse(text: &str, path: &Path) -> Result<Manifest> {
        let mut entries = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let Some((k, v)) = trimmed.split_once('=') else {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: lineno + 1,
                    column: 1,
                    message: format!("expected key=value, got `{trimmed}`"),
                });
            };
            entries.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(Manifest { entries })
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn require<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let raw = self
            .get(key)
            .ok_or_else(|| Error::Shape(format!("manifest is missing `{key}`")))?;
        raw.parse()
            .map_err(|_| Error::Shape(format!("manifest value `{key}={raw}` is not valid")))
    }

    pub fn require_list(&self, key: &str) -> Result<Vec<usize>> {
        let raw = self
            .get(key)
            .ok_or_else(|| Error::Shape(format!("manifest is missing `{key}`")))?;
        raw.split(',')
            .map(|s| {
                s.trim()
                    .parse()
                    .map_err(|_| Error::Shape(format!("manifest value `{key}={raw}` is not a list")))
            })
            .collect()
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(out, "{k}={v}");
        }
        out
    }
}

pub fn write_manifest(dir: &Path, manifest: &Manifest) -> Result<()> {
    fs::write(dir.join(MANIFEST_FILE), manifest.render())?;
    Ok(())
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let path = dir.join(MANIFEST_FILE);
    Manifest::parse(&fs::read_to_string(&path)?, &path)
}

fn join_list(v: &[usize]) -> String {
    v.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(",")
}

pub(crate) fn format_f64(v: f64) -> String {
    format!("{v:?}")
}

pub(crate) fn feature_header(prefix: &str, d: usize) -> String {
    (0..d).map(|j| format!("{prefix}{j}")).collect::<Vec<_>>().join(",")
}

pub(crate) fn write_matrix_csv(path: &Path, header: &str, m: &Matrix, extra: Option<&[usize]>) -> Result<()> {
    let mut out = String::with_capacity(m.rows() * m.cols() * 20);
    out.push_str(header);
    out.push('\n');
    for r in 0..m.rows() {
        let mut first = true;
        for &v in m.row(r) {
            if !first {
                out.push(',');
            }
            first = false;
            out.push_str(&format_f64(v));
        }
        if let Some(extra) = extra {
            if !first {
                out.push(',');
            }
            let _ = write!(out, "{}", extra[r]);
        }
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

struct CsvTable {
    path: PathBuf,
    header: Vec<String>,
    /// (line number, fields)
    rows: Vec<(usize, Vec<String>)>,
}

fn read_csv(path: &Path) -> Result<CsvTable> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| Error::Parse {
        path: path.to_path_buf(),
        line: 1,
        column: 1,
        message: "missing header".into(),
    })?;
    let header: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
    let mut rows = Vec::new();
    for (i, line) in lines {
        let fields: Vec<String> = line.split(',').map(|s| s.trim().to_string()).collect();
        if fields.len() != header.len() {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                column: fields.len().min(header.len()) + 1,
                message: format!("expected {} fields, found {}", header.len(), fields.len()),
            });
        }
        rows.push((i + 1, fields));
    }
    Ok(CsvTable {
        path: path.to_path_buf(),
        header,
        rows,
    })
}

impl CsvTable {
    fn expect_header(&self, expected: &str) -> Result<()> {
        let want: Vec<&str> = expected.split(',').collect();
        for (j, w) in want.iter().enumerate() {
            if self.header.get(j).map(String::as_str) != Some(*w) {
                return Err(Error::Parse {
                    path: self.path.clone(),
                    line: 1,
                    column: j + 1,
                    message: format!("expected header `{expected}`"),
                });
            }
        }
        if self.header.len() != want.len() {
            return Err(Error::Parse {
                path: self.path.clone(),
                line: 1,
                column: want.len() + 1,
                message: format!("expected header `{expected}`"),
            });
        }
        Ok(())
    }

    fn parse<T: std::str::FromStr>(&self, line: usize, column: usize, raw: &str) -> Result<T> {
        raw.parse().map_err(|_| Error::Parse {
            path: self.path.clone(),
            line,
            column: column + 1,
            message: format!("cannot parse `{raw}`"),
        })
    }

    fn float(&self, line: usize, column: usize, raw: &str) -> Result<f64> {
        let v: f64 = self.parse(line, column, raw)?;
        if !v.is_finite() {
            return Err(Error::Parse {
                path: self.path.clone(),
                line,
                column: column + 1,
                message: format!("non-finite value `{raw}`"),
            });
        }
        Ok(v)
    }
}

pub(crate) fn read_matrix_csv(path: &Path, header_prefix: &str, cols: usize) -> Result<Matrix> {
    let table = read_csv(path)?;
    table.expect_header(&feature_header(header_prefix, cols))?;
    let mut data = Vec::with_capacity(table.rows.len() * cols);
    for (line, fields) in &table.rows {
        for (j, f) in fields.iter().enumerate() {
            data.push(table.float(*line, j, f)?);
        }
    }
    Matrix::new(table.rows.len(), cols, data)
}

/// Matrix columns `{prefix}0..` followed by one trailing integer column.
pub(crate) fn read_matrix_with_index(path: &Path, header_prefix: &str, cols: usize, last: &str) -> Result<(Matrix, Vec<usize>)> {
    let table = read_csv(path)?;
    let mut header = feature_header(header_prefix, cols);
    if cols > 0 {
        header.push(',');
    }
    header.push_str(last);
    table.expect_header(&header)?;
    let mut data = Vec::with_capacity(table.rows.len() * cols);
    let mut index = Vec::with_capacity(table.rows.len());
    for (line, fields) in &table.rows {
        for (j, f) in fields[..cols].iter().enumerate() {
            data.push(table.float(*line, j, f)?);
        }
        index.push(table.parse(*line, cols, &fields[cols])?);
    }
    Ok((Matrix::new(table.rows.len(), cols, data)?, index))
}

fn read_labels(table: &CsvTable, column: usize, classes: usize) -> Result<Vec<usize>> {
    let mut out = Vec::with_capacity(table.rows.len());
    for (line, fields) in &table.rows {
        let c: usize = table.parse(*line, column, &fields[column])?;
        if c >= classes {
            return Err(Error::Shape(format!(
                "{}:{line}: class {c} is not a valid one-hot index for {classes} classes",
                table.path.display()
            )));
        }
        out.push(c);
    }
    Ok(out)
}

pub fn save_dataset(data: &MultiViewDataset, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut m = Manifest::default();
    m.set("kind", "multiview");
    m.set("views", data.num_views());
    m.set("samples", data.num_samples());
    m.set("classes", data.num_classes());
    m.set("dims", join_list(&data.dims()));
    write_manifest(dir, &m)?;
    for (k, v) in data.views().iter().enumerate() {
        write_matrix_csv(
            &dir.join(format!("view_{k}.csv")),
            &feature_header("f", v.cols()),
            v.matrix(),
            None,
        )?;
    }
    let mut labels = String::from("class\n");
    for c in data.labels().classes() {
        let _ = writeln!(labels, "{c}");
    }
    fs::write(dir.join("labels.csv"), labels)?;
    Ok(())
}

pub fn load_dataset(dir: &Path) -> Result<MultiViewDataset> {
    let m = read_manifest(dir)?;
    let k: usize = m.require("views")?;
    let n: usize = m.require("samples")?;
    let classes: usize = m.require("classes")?;
    let dims = m.require_list("dims")?;
    if dims.len() != k {
        return Err(Error::Shape(format!("manifest lists {} dims for {k} views", dims.len())));
    }
    let mut views = Vec::with_capacity(k);
    for (i, &d) in dims.iter().enumerate() {
        let x = read_matrix_csv(&dir.join(format!("view_{i}.csv")), "f", d)?;
        if x.rows() != n {
            return Err(Error::Shape(format!("view {i} has {} rows, manifest says {n}", x.rows())));
        }
        views.push(ViewMatrix::new(x));
    }
    let table = read_csv(&dir.join("labels.csv"))?;
    table.expect_header("class")?;
    let labels = read_labels(&table, 0, classes)?;
    if labels.len() != n {
        return Err(Error::Shape(format!("{} labels, manifest says {n}", labels.len())));
    }
    MultiViewDataset::new(views, LabelMatrix::from_classes(labels, classes)?)
}

pub fn save_sequences(clients: &[MultiViewSequences], dir: &Path) -> Result<()> {
    let first = clients.first().ok_or(Error::EmptyDataset)?;
    fs::create_dir_all(dir)?;
    let dims: Vec<usize> = first.views().iter().map(|v| v.step_dim()).collect();
    let mut m = Manifest::default();
    m.set("kind", "sequences");
    m.set("clients", clients.len());
    m.set("views", first.num_views());
    m.set("classes", first.labels().num_classes());
    m.set("step_dims", join_list(&dims));
    m.set(
        "samples",
        join_list(&clients.iter().map(|c| c.num_samples()).collect::<Vec<_>>()),
    );
    write_manifest(dir, &m)?;
    for (l, client) in clients.iter().enumerate() {
        let mut labels = String::from("sample_id,class\n");
        for (i, c) in client.labels().classes().iter().enumerate() {
            let _ = writeln!(labels, "{i},{c}");
        }
        fs::write(dir.join(format!("client_{l}_labels.csv")), labels)?;
        for (k, view) in client.views().iter().enumerate() {
            let mut out = format!("sample_id,t,{}\n", feature_header("f", view.step_dim()));
            for (i, s) in view.sequences().iter().enumerate() {
                for t in 0..s.rows() {
                    let _ = write!(out, "{i},{t}");
                    for &v in s.row(t) {
                        out.push(',');
                        out.push_str(&format_f64(v));
                    }
                    out.push('\n');
                }
            }
            fs::write(dir.join(format!("client_{l}_view_{k}.csv")), out)?;
        }
    }
    Ok(())
}

pub fn load_sequences(dir: &Path) -> Result<Vec<MultiViewSequences>> {
    let m = read_manifest(dir)?;
    let clients: usize = m.require("clients")?;
    let k: usize = m.require("views")?;
    let classes: usize = m.require("classes")?;
    let dims = m.require_list("step_dims")?;
    if dims.len() != k {
        return Err(Error::Shape(format!("manifest lists {} step dims for {k} views", dims.len())));
    }
    let mut out = Vec::with_capacity(clients);
    for l in 0..clients {
        let table = read_csv(&dir.join(format!("client_{l}_labels.csv")))?;
        table.expect_header("sample_id,class")?;
        for (pos, (line, fields)) in table.rows.iter().enumerate() {
            let id: usize = table.parse(*line, 0, &fields[0])?;
            if id != pos {
                return Err(Error::Shape(format!(
                    "{}:{line}: sample ids must be 0..N-1 in order",
                    table.path.display()
                )));
            }
        }
        let labels = read_labels(&table, 1, classes)?;
        let n = labels.len();
        let mut views = Vec::with_capacity(k);
        for (v, &p) in dims.iter().enumerate() {
            let table = read_csv(&dir.join(format!("client_{l}_view_{v}.csv")))?;
            table.expect_header(&format!("sample_id,t,{}", feature_header("f", p)))?;
            let mut steps: Vec<Vec<f64>> = vec![Vec::new(); n];
            let mut lens = vec![0usize; n];
            for (line, fields) in &table.rows {
                let id: usize = table.parse(*line, 0, &fields[0])?;
                let t: usize = table.parse(*line, 1, &fields[1])?;
                if id >= n {
                    return Err(Error::Shape(format!(
                        "{}:{line}: sample id {id} has no label",
                        table.path.display()
                    )));
                }
                if t != lens[id] {
                    return Err(Error::Shape(format!(
                        "{}:{line}: expected t={} for sample {id}",
                        table.path.display(),
                        lens[id]
                    )));
                }
                lens[id] += 1;
                for (j, f) in fields[2..].iter().enumerate() {
                    steps[id].push(table.float(*line, j + 2, f)?);
                }
            }
            let seqs = steps
                .into_iter()
                .zip(&lens)
                .map(|(data, &t)| Matrix::new(t, p, data))
                .collect::<Result<Vec<_>>>()?;
            views.push(SequenceDataset::new(p, seqs)?);
        }
        out.push(MultiViewSequences::new(views, LabelMatrix::from_classes(labels, classes)?)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{gen_multiview, gen_sequences, GeneratorSpec, SeqGeneratorSpec};
    use crate::numerics::RngSeed;

    #[test]
    fn dataset_round_trip_is_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let d = gen_multiview(&GeneratorSpec::new(40, vec![3, 2], 3, 2)).unwrap();
        save_dataset(&d, dir.path()).unwrap();
        let back = load_dataset(dir.path()).unwrap();
        for (a, b) in d.views().iter().zip(back.views()) {
            assert_eq!(a.matrix().to_bits(), b.matrix().to_bits());
        }
        assert_eq!(back.labels(), d.labels());
    }

    #[test]
    fn row_length_mismatch_is_parse_error() {
        let dir = tempfile::tempdir().unwrap();
        let d = gen_multiview(&GeneratorSpec::new(10, vec![2], 2, 2)).unwrap();
        save_dataset(&d, dir.path()).unwrap();
        let p = dir.path().join("view_0.csv");
        let mut text = fs::read_to_string(&p).unwrap();
        text.push_str("1.0,2.0,3.0\n");
        fs::write(&p, text).unwrap();
        match load_dataset(dir.path()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 12),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn out_of_range_label_is_shape_error() {
        let dir = tempfile::tempdir().unwrap();
        let d = gen_multiview(&GeneratorSpec::new(10, vec![2], 2, 2)).unwrap();
        save_dataset(&d, dir.path()).unwrap();
        let p = dir.path().join("labels.csv");
        let text = fs::read_to_string(&p).unwrap().replacen("\n1\n", "\n7\n", 1);
        fs::write(&p, text).unwrap();
        assert!(matches!(load_dataset(dir.path()), Err(Error::Shape(_))));
    }

    #[test]
    fn sequence_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let spec = SeqGeneratorSpec {
            samples: 12,
            step_dims: vec![2, 3],
            min_len: 1,
            max_len: 4,
            classes: 2,
            drift: vec![1.0, 1.0],
            noise: 0.2,
            seed: RngSeed(8),
        };
        let all = gen_sequences(&spec).unwrap();
        let clients = vec![all.select_rows(&[0, 1, 2, 3, 4]), all.select_rows(&[5, 6, 7, 8, 9, 10, 11])];
        save_sequences(&clients, dir.path()).unwrap();
        assert_eq!(load_sequences(dir.path()).unwrap(), clients);
    }
}
