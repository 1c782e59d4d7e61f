use std::cmp::Ordering;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use super::{HermitianMatrix, ProductLabel, SpinError};

/// Minimum squared amplitude the dominant product component must carry for a
/// label to be assigned.
pub const LABEL_DOMINANCE_MIN: f64 = 0.9;

/// Eigen-decomposition with one product-basis label per eigenstate, sorted by
/// energy and then by label.
#[derive(Debug, Clone)]
pub struct SpectrumResult {
    pub eigenvalues: Vec<f64>,
    /// Column `k` is the eigenvector of `eigenvalues[k]`.
    pub eigenvectors: DMatrix<Complex64>,
    pub labels: Vec<ProductLabel>,
    /// Squared amplitude of the labelling component.
    pub dominance: Vec<f64>,
}

impl SpectrumResult {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn energy_of(&self, label: &ProductLabel) -> Option<f64> {
        self.labels.iter().position(|l| l == label).map(|k| self.eigenvalues[k])
    }

    /// `max |V†V - 1|`.
    pub fn orthonormality_error(&self) -> f64 {
        let g = self.eigenvectors.adjoint() * &self.eigenvectors;
        let n = g.nrows();
        let mut err: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { 1.0 } else { 0.0 };
                err = err.max((g[(i, j)] - Complex64::new(target, 0.0)).norm());
            }
        }
        err
    }

    /// CSV with columns `index,label,energy_MHz,dominance`.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["index", "label", "energy_MHz", "dominance"]).expect("in-memory write");
        for k in 0..self.len() {
            w.write_record([
                k.to_string(),
                self.labels[k].to_string(),
                format!("{:.9}", self.eigenvalues[k]),
                format!("{:.9}", self.dominance[k]),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
    }
}

pub fn spectrum(h: &HermitianMatrix) -> Result<SpectrumResult, SpinError> {
    spectrum_with_threshold(h, LABEL_DOMINANCE_MIN)
}

pub fn spectrum_with_threshold(h: &HermitianMatrix, threshold: f64) -> Result<SpectrumResult, SpinError> {
    let eig = SymmetricEigen::new(h.matrix().clone());
    let n = h.dim();
    let basis = h.basis().labels();

    let mut records = Vec::with_capacity(n);
    for k in 0..n {
        let col = eig.eigenvectors.column(k);
        let (best, weight) = col
            .iter()
            .enumerate()
            .map(|(i, z)| (i, z.norm_sqr()))
            .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if weight < threshold {
            return Err(SpinError::WeakDominance { index: k, weight, threshold });
        }
        records.push((eig.eigenvalues[k], best, weight, k));
    }

    let mut owner = vec![None; n];
    for &(_, best, _, k) in &records {
        if let Some(first) = owner[best] {
            return Err(SpinError::AmbiguousLabel { label: basis[best].to_string(), first, second: k });
        }
        owner[best] = Some(k);
    }

    records.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .unwrap_or(Ordering::Equal)
            .then_with(|| basis[a.1].cmp(&basis[b.1]))
    });

    let mut eigenvectors = DMatrix::zeros(n, n);
    for (dst, &(_, best, _, src)) in records.iter().enumerate() {
        let mut col = eig.eigenvectors.column(src).into_owned();
        // fix the global phase: dominant component real and positive
        let c = col[best];
        if c.norm() > 0.0 {
            col *= c.conj() / c.norm();
        }
        eigenvectors.set_column(dst, &col);
    }

    Ok(SpectrumResult {
        eigenvalues: records.iter().map(|r| r.0).collect(),
        eigenvectors,
        labels: records.iter().map(|r| basis[r.1].clone()).collect(),
        dominance: records.iter().map(|r| r.2).collect(),
    })
}
