//! Labeled feature matrix shared by balancing, selection, learners and evaluation.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::signal::Class;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    /// Class index into `classes` per row.
    pub labels: Vec<usize>,
    pub classes: Vec<String>,
    /// True for rows created by oversampling.
    pub synthetic: Vec<bool>,
    pub ids: Vec<String>,
}

impl FeatureMatrix {
    pub fn new(
        columns: Vec<String>,
        rows: Vec<Vec<f64>>,
        labels: Vec<usize>,
        classes: Vec<String>,
    ) -> Result<Self> {
        let ids = (0..rows.len()).map(|i| format!("r{i}")).collect();
        let synthetic = vec![false; rows.len()];
        let m = Self {
            columns,
            rows,
            labels,
            classes,
            synthetic,
            ids,
        };
        m.validate()?;
        Ok(m)
    }

    /// Builds a Nor/Pre/Post matrix from extracted vectors, using the first vector's name order.
    pub fn from_vectors(vectors: &[FeatureVector]) -> Result<Self> {
        let Some(first) = vectors.first() else {
            return Err(Error::Precondition("no feature vectors".into()));
        };
        let columns = first.names.clone();
        let mut rows = Vec::with_capacity(vectors.len());
        let mut labels = Vec::with_capacity(vectors.len());
        let mut ids = Vec::with_capacity(vectors.len());
        for v in vectors {
            if v.names != columns {
                return Err(Error::Precondition(format!("vector {} has a different schema", v.segment_id)));
            }
            rows.push(v.values.clone());
            labels.push(v.label.index());
            ids.push(v.segment_id.clone());
        }
        let mut m = Self::new(columns, rows, labels, Class::names())?;
        m.ids = ids;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.rows.len();
        if self.labels.len() != n || self.synthetic.len() != n || self.ids.len() != n {
            return Err(Error::Precondition("rows, labels, flags and ids differ in length".into()));
        }
        let p = self.columns.len();
        for (i, row) in self.rows.iter().enumerate() {
            if row.len() != p {
                return Err(Error::Precondition(format!("row {i} has {} values, expected {p}", row.len())));
            }
            if let Some(j) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::Precondition(format!(
                    "non-finite value at row {i}, column {}",
                    self.columns[j]
                )));
            }
        }
        if let Some(&l) = self.labels.iter().find(|&&l| l >= self.classes.len()) {
            return Err(Error::Precondition(format!("label index {l} out of range")));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.classes.len()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        self.rows.iter().map(move |r| r[j])
    }

    pub fn subset_rows(&self, idx: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            columns: self.columns.clone(),
            rows: idx.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            classes: self.classes.clone(),
            synthetic: idx.iter().map(|&i| self.synthetic[i]).collect(),
            ids: idx.iter().map(|&i| self.ids[i].clone()).collect(),
        }
    }

    pub fn select_columns(&self, names: &[String]) -> Result<FeatureMatrix> {
        let idx = names
            .iter()
            .map(|n| {
                self.columns
                    .iter()
                    .position(|c| c == n)
                    .ok_or_else(|| Error::Precondition(format!("unknown column `{n}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(self.select_column_indices(&idx))
    }

    pub fn select_column_indices(&self, idx: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            columns: idx.iter().map(|&j| self.columns[j].clone()).collect(),
            rows: self
                .rows
                .iter()
                .map(|r| idx.iter().map(|&j| r[j]).collect())
                .collect(),
            ..self.clone_without_rows()
        }
    }

    /// Columns whose names end with `suffix` (e.g. `__w30`).
    pub fn columns_with_suffix(&self, suffix: &str) -> Vec<String> {
        self.columns.iter().filter(|c| c.ends_with(suffix)).cloned().collect()
    }

    fn clone_without_rows(&self) -> FeatureMatrix {
        FeatureMatrix {
            columns: Vec::new(),
            rows: Vec::new(),
            labels: self.labels.clone(),
            classes: self.classes.clone(),
            synthetic: self.synthetic.clone(),
            ids: self.ids.clone(),
        }
    }

    /// Writes `segment_id,label,<features...>`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let header: Vec<&str> = ["segment_id", "label"]
            .into_iter()
            .chain(self.columns.iter().map(String::as_str))
            .collect();
        w.write_record(&header)?;
        for i in 0..self.len() {
            let mut rec = vec![self.ids[i].clone(), self.classes[self.labels[i]].clone()];
            rec.extend(self.rows[i].iter().map(f64::to_string));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<features csv>", e))?;
        Ok(())
    }

    /// Reads the CSV produced by [`FeatureMatrix::write_csv`]; labels must be Nor/Pre/Post.
    pub fn read_csv<R: Read>(input: R) -> Result<FeatureMatrix> {
        let mut rdr = csv::Reader::from_reader(input);
        let headers = rdr.headers()?.clone();
        if headers.get(0) != Some("segment_id") {
            return Err(Error::MissingColumn("segment_id".into()));
        }
        if headers.get(1) != Some("label") {
            return Err(Error::MissingColumn("label".into()));
        }
        let columns: Vec<String> = headers.iter().skip(2).map(str::to_string).collect();
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        let mut ids = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let row_no = rec.position().map(|p| p.line() as usize).unwrap_or(0);
            ids.push(rec.get(0).unwrap_or("").to_string());
            let class: Class = rec.get(1).unwrap_or("").parse()?;
            labels.push(class.index());
            let values = rec
                .iter()
                .skip(2)
                .map(|s| {
                    s.parse::<f64>().map_err(|_| Error::Ingest {
                        row: row_no,
                        message: format!("bad feature value `{s}`"),
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            rows.push(values);
        }
        let mut m = FeatureMatrix::new(columns, rows, labels, Class::names())?;
        m.ids = ids;
        Ok(m)
    }
}
