use std::fs;
use std::path::Path;

use crate::data::io::{feature_header, read_matrix_csv, read_matrix_with_index, write_matrix_csv};
use crate::data::{read_manifest, write_manifest, Manifest, MultiViewDataset, MultiViewSequences, ViewMatrix};
use crate::error::{Error, Result};
use crate::mvl::predict_mvl;
use crate::numerics::Matrix;
use crate::sfed::{extract_features, EncoderParams, EncoderShape};

/// Everything needed to score new samples: per-view transforms, optional
/// sequence encoders in front of them, and the test-phase settings.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub mode: String,
    pub w: Vec<Matrix>,
    pub zeta: Vec<f64>,
    pub tol: f64,
    pub max_outer: usize,
    /// Views of the source data the transforms apply to; `None` keeps all.
    pub views: Option<Vec<bool>>,
    pub encoders: Vec<EncoderParams>,
}

impl Model {
    pub fn classes(&self) -> usize {
        self.w.first().map_or(0, Matrix::cols)
    }

    pub fn has_encoders(&self) -> bool {
        !self.encoders.is_empty()
    }

    fn select(&self, data: &MultiViewDataset) -> Result<MultiViewDataset> {
        match &self.views {
            Some(mask) => data.select_views(mask),
            None => Ok(data.clone()),
        }
    }

    /// Consensus scores `Z` for a multi-view dataset.
    pub fn scores(&self, data: &MultiViewDataset) -> Result<Matrix> {
        let data = self.select(data)?;
        predict_mvl(data.views(), &self.w, &self.zeta, self.tol, self.max_outer)
    }

    /// Encoder features of sequence data.
    pub fn embed(&self, data: &MultiViewSequences) -> Result<MultiViewDataset> {
        if !self.has_encoders() {
            return Err(Error::Shape("model has no sequence encoders".into()));
        }
        extract_features(&self.encoders, data)
    }

    pub fn predict(&self, data: &MultiViewDataset) -> Result<Vec<usize>> {
        Ok(self.scores(data)?.row_argmax())
    }
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

fn parse_floats(m: &Manifest, key: &str) -> Result<Vec<f64>> {
    let raw = m
        .get(key)
        .ok_or_else(|| Error::Shape(format!("model manifest is missing `{key}`")))?;
    raw.split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| Error::Shape(format!("model value `{key}={raw}` is not a list of numbers")))
        })
        .collect()
}

pub fn save_model(model: &Model, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut m = Manifest::default();
    m.set("kind", "model");
    m.set("mode", &model.mode);
    m.set("views", model.w.len());
    m.set("classes", model.classes());
    m.set("dims", join(&model.w.iter().map(Matrix::rows).collect::<Vec<_>>()));
    m.set("zeta", model.zeta.iter().map(|z| format!("{z:?}")).collect::<Vec<_>>().join(","));
    m.set("tol", format!("{:?}", model.tol));
    m.set("max_outer", model.max_outer);
    if let Some(mask) = &model.views {
        m.set("view_mask", join(&mask.iter().map(|&b| u8::from(b)).collect::<Vec<_>>()));
    }
    if let Some(first) = model.encoders.first() {
        let shape = first.shape();
        m.set("embed_dim", shape.embed_dim);
        m.set(
            "step_dims",
            join(&model.encoders.iter().map(|e| e.shape().input_dim).collect::<Vec<_>>()),
        );
    }
    write_manifest(dir, &m)?;
    for (k, w) in model.w.iter().enumerate() {
        write_matrix_csv(&dir.join(format!("w_{k}.csv")), &feature_header("c", w.cols()), w, None)?;
    }
    for (k, e) in model.encoders.iter().enumerate() {
        let col = Matrix::new(e.as_slice().len(), 1, e.as_slice().to_vec())?;
        write_matrix_csv(&dir.join(format!("encoder_{k}.csv")), "p0", &col, None)?;
    }
    Ok(())
}

pub fn load_model(dir: &Path) -> Result<Model> {
    let m = read_manifest(dir)?;
    if m.get("kind") != Some("model") {
        return Err(Error::Shape(format!("{} is not a model directory", dir.display())));
    }
    let views: usize = m.require("views")?;
    let classes: usize = m.require("classes")?;
    let dims = m.require_list("dims")?;
    let zeta = parse_floats(&m, "zeta")?;
    if dims.len() != views || zeta.len() != views {
        return Err(Error::Shape("model manifest lists disagree on the number of views".into()));
    }
    let w = dims
        .iter()
        .enumerate()
        .map(|(k, &d)| {
            let w = read_matrix_csv(&dir.join(format!("w_{k}.csv")), "c", classes)?;
            if w.rows() != d {
                return Err(Error::dims("load_model", d, w.rows()));
            }
            Ok(w)
        })
        .collect::<Result<Vec<_>>>()?;
    let view_mask = m.get("view_mask").map(|raw| raw.split(',').map(|s| s.trim() == "1").collect());
    let mut encoders = Vec::new();
    if m.get("step_dims").is_some() {
        let embed_dim: usize = m.require("embed_dim")?;
        for (k, input_dim) in m.require_list("step_dims")?.into_iter().enumerate() {
            let shape = EncoderShape {
                input_dim,
                embed_dim,
                classes,
            };
            let col = read_matrix_csv(&dir.join(format!("encoder_{k}.csv")), "p", 1)?;
            encoders.push(EncoderParams::new(shape, col.into_data())?);
        }
    }
    Ok(Model {
        mode: m.get("mode").unwrap_or("unknown").to_string(),
        w,
        zeta,
        tol: m.require("tol")?,
        max_outer: m.require("max_outer")?,
        views: view_mask,
        encoders,
    })
}

/// Writes `e0..e{D-1},label` rows.
pub fn write_embeddings(path: &Path, features: &Matrix, labels: &[usize]) -> Result<()> {
    if features.rows() != labels.len() {
        return Err(Error::LengthMismatch(features.rows(), labels.len()));
    }
    let mut header = feature_header("e", features.cols());
    if features.cols() > 0 {
        header.push(',');
    }
    header.push_str("label");
    write_matrix_csv(path, &header, features, Some(labels))
}

pub fn read_embeddings(path: &Path, dim: usize) -> Result<(Matrix, Vec<usize>)> {
    read_matrix_with_index(path, "e", dim, "label")
}

/// Side-by-side concatenation of the views.
pub fn concat_views(views: &[ViewMatrix]) -> Matrix {
    let n = views.first().map_or(0, ViewMatrix::rows);
    let total: usize = views.iter().map(ViewMatrix::cols).sum();
    Matrix::from_fn(n, total, |i, j| {
        let mut j = j;
        for v in views {
            if j < v.cols() {
                return v.matrix().row(i)[j];
            }
            j -= v.cols();
        }
        unreachable!("column index within total width")
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::RngSeed;

    #[test]
    fn save_load_round_trip() {
        let shape = EncoderShape {
            input_dim: 3,
            embed_dim: 2,
            classes: 2,
        };
        let model = Model {
            mode: "sfed".into(),
            w: vec![Matrix::gaussian(2, 2, RngSeed(1)), Matrix::gaussian(2, 2, RngSeed(2))],
            zeta: vec![8.0, 0.5],
            tol: 1e-6,
            max_outer: 100,
            views: Some(vec![true, false, true]),
            encoders: vec![EncoderParams::init(shape, RngSeed(3)), EncoderParams::init(shape, RngSeed(4))],
        };
        let tmp = tempfile::tempdir().unwrap();
        let dir = tmp.path().join("m");
        save_model(&model, &dir).unwrap();
        assert_eq!(load_model(&dir).unwrap(), model);
    }

    #[test]
    fn embeddings_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.csv");
        let x = Matrix::gaussian(5, 3, RngSeed(9));
        write_embeddings(&path, &x, &[0, 1, 1, 0, 1]).unwrap();
        let (back, labels) = read_embeddings(&path, 3).unwrap();
        assert_eq!(back, x);
        assert_eq!(labels, vec![0, 1, 1, 0, 1]);
    }

    #[test]
    fn concat_keeps_view_order() {
        let a = ViewMatrix::new(Matrix::from_rows(&[&[1.0], &[2.0]]).unwrap());
        let b = ViewMatrix::new(Matrix::from_rows(&[&[3.0, 4.0], &[5.0, 6.0]]).unwrap());
        assert_eq!(concat_views(&[a, b]), Matrix::from_rows(&[&[1.0, 3.0, 4.0], &[2.0, 5.0, 6.0]]).unwrap());
    }
}
