//! Bivariate sample container shared by the estimators, samplers and CLI.

use crate::error::{Error, Result};

/// An `n x 2` array of finite real pairs, stored column-wise.
#[derive(Debug, Clone, PartialEq)]
pub struct BivariateSample {
    x: Vec<f64>,
    y: Vec<f64>,
}

impl BivariateSample {
    /// Builds a sample from two equally long columns of finite values.
    pub fn from_columns(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::Config(format!(
                "column lengths differ: {} vs {}",
                x.len(),
                y.len()
            )));
        }
        if x.is_empty() {
            return Err(Error::InsufficientData {
                required: 1,
                actual: 0,
            });
        }
        if let Some(index) = x
            .iter()
            .zip(&y)
            .position(|(a, b)| !a.is_finite() || !b.is_finite())
        {
            return Err(Error::NonFinite {
                index,
                detail: format!("({}, {})", x[index], y[index]),
            });
        }
        Ok(Self { x, y })
    }

    pub fn from_points<I>(points: I) -> Result<Self>
    where
        I: IntoIterator<Item = (f64, f64)>,
    {
        let (x, y) = points.into_iter().unzip();
        Self::from_columns(x, y)
    }

    /// Caller guarantees equal, non-zero lengths and finite values.
    pub(crate) fn from_columns_unchecked(x: Vec<f64>, y: Vec<f64>) -> Self {
        debug_assert_eq!(x.len(), y.len());
        Self { x, y }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn point(&self, i: usize) -> (f64, f64) {
        (self.x[i], self.y[i])
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = (f64, f64)> + '_ {
        self.x.iter().copied().zip(self.y.iter().copied())
    }

    /// Applies a coordinate-wise map; fails if it produces non-finite values.
    pub fn map<F, G>(&self, fx: F, fy: G) -> Result<Self>
    where
        F: Fn(f64) -> f64,
        G: Fn(f64) -> f64,
    {
        Self::from_columns(
            self.x.iter().map(|&a| fx(a)).collect(),
            self.y.iter().map(|&b| fy(b)).collect(),
        )
    }

    pub(crate) fn columns_mut(&mut self) -> (&mut [f64], &mut [f64]) {
        (&mut self.x, &mut self.y)
    }

    /// Two-column CSV, one row per point, no header.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for (a, b) in self.points() {
            w.write_record([format!("{a:e}"), format!("{b:e}")])?;
        }
        w.flush()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite() {
        let err = BivariateSample::from_columns(vec![1.0, f64::NAN], vec![0.0, 1.0]).unwrap_err();
        assert!(matches!(err, Error::NonFinite { index: 1, .. }));
    }

    #[test]
    fn rejects_mismatched_columns() {
        assert!(BivariateSample::from_columns(vec![1.0, 2.0], vec![0.0]).is_err());
        assert!(BivariateSample::from_columns(vec![], vec![]).is_err());
    }

    #[test]
    fn csv_round_trips_exactly() {
        let s = BivariateSample::from_points([(0.1, -3.5e-12), (1.0 / 3.0, 7.25e8)]).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let parsed: Vec<(f64, f64)> = text
            .lines()
            .map(|l| {
                let (a, b) = l.split_once(',').unwrap();
                (a.parse().unwrap(), b.parse().unwrap())
            })
            .collect();
        assert_eq!(parsed, s.points().collect::<Vec<_>>());
    }
}
