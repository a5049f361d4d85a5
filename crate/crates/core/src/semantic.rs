//! tf-idf weighting, latent semantic indexing and cosine similarity.
//!
//! Documents are weighted with `count * log2(N / n_t)`, L2-normalized, and
//! projected onto the left singular vectors of the term-by-document matrix.
//! The projection `uᵀx` is used for training documents and queries alike, so
//! a training document's coordinates equal its column of `S·Vᵀ`.

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::corpus::{read_json, write_json, BowVector, Dictionary};
use crate::error::{Error, Result};

/// Upper bound on the default number of latent concepts.
pub const DEFAULT_MAX_CONCEPTS: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfIdfModel {
    idf: Vec<f64>,
}

impl TfIdfModel {
    pub fn fit(dict: &Dictionary) -> Self {
        let n = dict.n_docs() as f64;
        let idf = dict
            .doc_freqs()
            .iter()
            .map(|&nt| if nt == dict.n_docs() { 0.0 } else { (n / nt as f64).log2() })
            .collect();
        Self { idf }
    }

    pub fn from_idf(idf: Vec<f64>) -> Result<Self> {
        if let Some(bad) = idf.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::InvalidModel(format!("idf weight {bad} is not a non-negative number")));
        }
        Ok(Self { idf })
    }

    pub fn idf(&self) -> &[f64] {
        &self.idf
    }

    pub fn n_terms(&self) -> usize {
        self.idf.len()
    }

    /// `count * idf`, scaled to unit L2 norm. An all-zero product gives the
    /// zero vector.
    pub fn apply(&self, bow: &BowVector) -> TfIdfVector {
        let mut entries: Vec<(usize, f64)> = bow
            .entries
            .iter()
            .filter_map(|&(t, c)| {
                let w = f64::from(c) * self.idf.get(t).copied().unwrap_or(0.0);
                (w != 0.0).then_some((t, w))
            })
            .collect();
        let norm = entries.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
        if norm > 0.0 {
            for (_, w) in &mut entries {
                *w /= norm;
            }
        }
        TfIdfVector { entries }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_json(path.as_ref(), self)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let model: TfIdfModel = read_json(path.as_ref())?;
        Self::from_idf(model.idf)
    }
}

/// Sparse unit-norm (or zero) weight vector, sorted by term id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TfIdfVector {
    pub entries: Vec<(usize, f64)>,
}

impl TfIdfVector {
    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|(_, w)| w * w).sum::<f64>().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn weight(&self, term_id: usize) -> f64 {
        self.entries
            .binary_search_by_key(&term_id, |&(t, _)| t)
            .map(|i| self.entries[i].1)
            .unwrap_or(0.0)
    }
}

/// Dense coordinates in the latent concept space.
#[derive(Debug, Clone, PartialEq)]
pub struct ConceptVector {
    pub weights: Vec<f64>,
}

impl ConceptVector {
    pub fn zeros(k: usize) -> Self {
        Self { weights: vec![0.0; k] }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.weights.iter().map(|w| w * w).sum::<f64>().sqrt()
    }

    /// `(dimension, weight)` pairs of the non-zero coordinates.
    pub fn sparse(&self) -> Vec<(usize, f64)> {
        self.weights
            .iter()
            .copied()
            .enumerate()
            .filter(|&(_, w)| w != 0.0)
            .collect()
    }
}

/// Truncated SVD basis: `u` is `n_terms × k`, row-major, with orthonormal
/// columns; `s` holds the matching singular values in non-increasing order.
#[derive(Debug, Clone, PartialEq)]
pub struct LsiModel {
    n_terms: usize,
    k: usize,
    u: Vec<f64>,
    s: Vec<f64>,
}

const LSI_MAGIC: &[u8; 8] = b"ITLSI001";

impl LsiModel {
    pub fn default_k(n_docs: usize, n_terms: usize) -> usize {
        n_docs.min(n_terms).min(DEFAULT_MAX_CONCEPTS)
    }

    /// Fits the basis on the term-by-document matrix whose columns are
    /// `docs`. The concept count is `min(k_requested, rank)`.
    pub fn fit(docs: &[TfIdfVector], n_terms: usize, k_requested: usize) -> Result<Self> {
        if k_requested == 0 {
            return Err(Error::InvalidConfig("number of concepts must be at least 1".into()));
        }
        let mut x = DMatrix::<f64>::zeros(n_terms, docs.len());
        for (j, doc) in docs.iter().enumerate() {
            for &(t, w) in &doc.entries {
                if t >= n_terms {
                    return Err(Error::DimensionMismatch {
                        expected: n_terms,
                        found: t + 1,
                    });
                }
                x[(t, j)] = w;
            }
        }
        if x.iter().all(|&v| v == 0.0) {
            return Err(Error::DegenerateMatrix);
        }

        let svd = x.svd(true, false);
        let u_full = svd.u.expect("left singular vectors requested");
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));

        let s_max = svd.singular_values[order[0]];
        let tol = s_max * n_terms.max(docs.len()) as f64 * f64::EPSILON;
        let rank = order.iter().filter(|&&i| svd.singular_values[i] > tol).count();
        let k = k_requested.min(rank);

        let mut u = vec![0.0; n_terms * k];
        let mut s = Vec::with_capacity(k);
        for (c, &src) in order.iter().take(k).enumerate() {
            s.push(svd.singular_values[src]);
            let column = u_full.column(src);
            // Canonical sign: the largest-magnitude component is positive.
            let pivot = column
                .iter()
                .enumerate()
                .fold((0, 0.0f64), |best, (i, &v)| if v.abs() > best.1.abs() { (i, v) } else { best });
            let sign = if pivot.1 < 0.0 { -1.0 } else { 1.0 };
            for t in 0..n_terms {
                u[t * k + c] = sign * column[t];
            }
        }
        Ok(Self { n_terms, k, u, s })
    }

    pub fn from_parts(n_terms: usize, k: usize, u: Vec<f64>, s: Vec<f64>) -> Result<Self> {
        if u.len() != n_terms * k || s.len() != k {
            return Err(Error::InvalidModel(format!(
                "basis of {} values and {} singular values do not fit {n_terms} terms × {k} concepts",
                u.len(),
                s.len()
            )));
        }
        Ok(Self { n_terms, k, u, s })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_terms(&self) -> usize {
        self.n_terms
    }

    pub fn singular_values(&self) -> &[f64] {
        &self.s
    }

    pub fn basis(&self, term: usize, concept: usize) -> f64 {
        self.u[term * self.k + concept]
    }

    /// Row-major `n_terms × k` basis.
    pub fn basis_row_major(&self) -> &[f64] {
        &self.u
    }

    pub fn with_flipped_concept(&self, concept: usize) -> Self {
        let mut flipped = self.clone();
        for t in 0..self.n_terms {
            flipped.u[t * self.k + concept] = -flipped.u[t * self.k + concept];
        }
        flipped
    }

    /// `uᵀ · vec`. For unit-norm input every coordinate is clamped to
    /// `[-1, 1]` to absorb rounding.
    pub fn project(&self, vec: &TfIdfVector) -> Result<ConceptVector> {
        let mut weights = vec![0.0; self.k];
        for &(t, w) in &vec.entries {
            if t >= self.n_terms {
                return Err(Error::DimensionMismatch {
                    expected: self.n_terms,
                    found: t + 1,
                });
            }
            let row = &self.u[t * self.k..(t + 1) * self.k];
            for (acc, &b) in weights.iter_mut().zip(row) {
                *acc += w * b;
            }
        }
        if vec.norm() <= 1.0 + 1e-9 {
            for w in &mut weights {
                *w = w.clamp(-1.0, 1.0);
            }
        }
        Ok(ConceptVector { weights })
    }

    /// Binary layout: 8-byte magic `ITLSI001`, `n_terms` and `k` as u64 LE,
    /// the basis row-major as f64 LE, then the `k` singular values as f64 LE.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(24 + 8 * (self.u.len() + self.s.len()));
        out.extend_from_slice(LSI_MAGIC);
        out.extend_from_slice(&(self.n_terms as u64).to_le_bytes());
        out.extend_from_slice(&(self.k as u64).to_le_bytes());
        for v in self.u.iter().chain(&self.s) {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |m: &str| Error::InvalidModel(format!("model.lsi: {m}"));
        if bytes.len() < 24 || &bytes[..8] != LSI_MAGIC {
            return Err(bad("missing header"));
        }
        let read_u64 = |at: usize| u64::from_le_bytes(bytes[at..at + 8].try_into().unwrap());
        let n_terms = usize::try_from(read_u64(8)).map_err(|_| bad("term count overflow"))?;
        let k = usize::try_from(read_u64(16)).map_err(|_| bad("concept count overflow"))?;
        let n_values = n_terms
            .checked_mul(k)
            .and_then(|n| n.checked_add(k))
            .ok_or_else(|| bad("size overflow"))?;
        if bytes.len() - 24 != n_values * 8 {
            return Err(bad("payload length does not match header"));
        }
        let values: Vec<f64> = bytes[24..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let (u, s) = values.split_at(n_terms * k);
        Self::from_parts(n_terms, k, u.to_vec(), s.to_vec())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

/// `a·b / (‖a‖‖b‖)`, clamped to `[-1, 1]`; 0 when either vector is zero.
pub fn cosine_similarity(a: &ConceptVector, b: &ConceptVector) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        return Ok(0.0);
    }
    let dot: f64 = a.weights.iter().zip(&b.weights).map(|(x, y)| x * y).sum();
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(entries: &[(usize, f64)]) -> TfIdfVector {
        let n = entries.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
        TfIdfVector {
            entries: entries.iter().map(|&(t, w)| (t, w / n)).collect(),
        }
    }

    #[test]
    fn idf_values() {
        let dict = Dictionary::from_parts(vec!["a".into(), "b".into()], vec![4, 1], 4).unwrap();
        let m = TfIdfModel::fit(&dict);
        assert_eq!(m.idf(), &[0.0, 2.0]);
    }

    #[test]
    fn single_term_becomes_unit() {
        let m = TfIdfModel::from_idf(vec![2.0]).unwrap();
        let v = m.apply(&BowVector { entries: vec![(0, 3)] });
        assert_eq!(v.entries, vec![(0, 1.0)]);
        assert!(m.apply(&BowVector::default()).is_zero());
    }

    #[test]
    fn rank_one_collapse() {
        let col = unit(&[(0, 1.0), (1, 2.0), (2, 2.0)]);
        let docs = vec![col.clone(); 4];
        let lsi = LsiModel::fit(&docs, 3, 10).unwrap();
        assert_eq!(lsi.k(), 1);
        assert!((lsi.singular_values()[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn diagonal_matrix() {
        let docs = vec![
            TfIdfVector { entries: vec![(0, 3.0)] },
            TfIdfVector { entries: vec![(1, 1.0)] },
        ];
        let lsi = LsiModel::fit(&docs, 2, 2).unwrap();
        assert_eq!(lsi.k(), 2);
        assert!((lsi.singular_values()[0] - 3.0).abs() < 1e-12);
        assert!((lsi.singular_values()[1] - 1.0).abs() < 1e-12);
        for (t, c, e) in [(0, 0, 1.0), (1, 0, 0.0), (0, 1, 0.0), (1, 1, 1.0)] {
            assert!((lsi.basis(t, c).abs() - e).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_and_invalid_fits() {
        assert!(matches!(
            LsiModel::fit(&[TfIdfVector::default()], 3, 2),
            Err(Error::DegenerateMatrix)
        ));
        assert!(LsiModel::fit(&[unit(&[(0, 1.0)])], 3, 0).is_err());
        assert!(LsiModel::fit(&[unit(&[(5, 1.0)])], 3, 1).is_err());
    }

    #[test]
    fn projection_of_basis_vector_is_row() {
        let docs = vec![unit(&[(0, 1.0), (1, 1.0)]), unit(&[(1, 1.0), (2, 3.0)]), unit(&[(0, 2.0), (2, 1.0)])];
        let lsi = LsiModel::fit(&docs, 3, 3).unwrap();
        let p = lsi.project(&TfIdfVector { entries: vec![(1, 1.0)] }).unwrap();
        for c in 0..lsi.k() {
            assert_eq!(p.weights[c], lsi.basis(1, c));
        }
        let zero = lsi.project(&TfIdfVector::default()).unwrap();
        assert!(zero.weights.iter().all(|&w| w == 0.0));
    }

    #[test]
    fn lsi_bytes_round_trip() {
        let docs = vec![unit(&[(0, 1.0), (1, 1.0)]), unit(&[(1, 1.0), (2, 3.0)])];
        let lsi = LsiModel::fit(&docs, 3, 2).unwrap();
        let bytes = lsi.to_bytes();
        assert_eq!(bytes.len(), 24 + 8 * (3 * 2 + 2));
        assert_eq!(LsiModel::from_bytes(&bytes).unwrap(), lsi);
        assert!(LsiModel::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        assert!(LsiModel::from_bytes(b"garbage").is_err());
    }

    #[test]
    fn cosine_examples() {
        let v = |w: &[f64]| ConceptVector { weights: w.to_vec() };
        assert!((cosine_similarity(&v(&[1.0, 2.0]), &v(&[1.0, 2.0])).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(cosine_similarity(&v(&[1.0, 0.0]), &v(&[0.0, 3.0])).unwrap(), 0.0);
        let s = cosine_similarity(&v(&[1.0, 1.0]), &v(&[1.0, 0.0])).unwrap();
        assert!((s - 0.5f64.sqrt()).abs() < 1e-12);
        assert!((s - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-9);
        assert_eq!(cosine_similarity(&v(&[0.0, 0.0]), &v(&[1.0, 0.0])).unwrap(), 0.0);
        assert!(cosine_similarity(&v(&[1.0]), &v(&[1.0, 0.0])).is_err());
    }
}
