use crate::{Error, Result};

/// An `n × l` table of observations: one column per location, one row per
/// independent event. Stored column-major since every estimator works on a
/// single location at a time.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatrix {
    columns: Vec<Vec<f64>>,
    rows: usize,
}

impl SampleMatrix {
    /// Builds a matrix from columns of equal, nonzero length.
    pub fn from_columns(columns: Vec<Vec<f64>>) -> Result<Self> {
        let rows = columns
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::invalid("sample matrix needs at least one column"))?;
        if rows == 0 {
            return Err(Error::invalid("sample matrix needs at least one row"));
        }
        if let Some((j, c)) = columns.iter().enumerate().find(|(_, c)| c.len() != rows) {
            return Err(Error::invalid(format!(
                "column {j} has {} rows, expected {rows}",
                c.len()
            )));
        }
        Ok(SampleMatrix { columns, rows })
    }

    /// Builds a matrix from row-major data.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let width = rows
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::invalid("sample matrix needs at least one row"))?;
        let mut columns = vec![Vec::with_capacity(rows.len()); width];
        for (i, row) in rows.iter().enumerate() {
            if row.len() != width {
                return Err(Error::invalid(format!(
                    "row {i} has {} values, expected {width}",
                    row.len()
                )));
            }
            for (col, &v) in columns.iter_mut().zip(row) {
                col.push(v);
            }
        }
        Self::from_columns(columns)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn locations(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j]
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn into_columns(self) -> Vec<Vec<f64>> {
        self.columns
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[i]).collect()
    }

    /// Returns a new matrix with the columns reordered by `order`.
    pub fn select_columns(&self, order: &[usize]) -> Result<Self> {
        let mut cols = Vec::with_capacity(order.len());
        for &j in order {
            let c = self
                .columns
                .get(j)
                .ok_or_else(|| Error::invalid(format!("no column {j}")))?;
            cols.push(c.clone());
        }
        Self::from_columns(cols)
    }
}
