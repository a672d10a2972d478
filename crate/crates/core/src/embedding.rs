//! Face-identity feature vectors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A finite feature vector of dimension `d >= 1`.
///
/// Embeddings are stored as `f64` even when ingested from `f32` sidecar files,
/// so similarities are evaluated at full precision.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    values: Vec<f64>,
    degenerate: bool,
}

impl Embedding {
    /// Builds an embedding, rejecting empty, non-finite or zero-norm input.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        let e = Self::degenerate(values)?;
        if e.norm() == 0.0 {
            return Err(Error::ZeroNorm("embedding".into()));
        }
        Ok(Embedding {
            degenerate: false,
            ..e
        })
    }

    /// Builds an embedding that is allowed to have zero norm. Any cosine
    /// similarity taken against a zero vector still fails.
    pub fn degenerate(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Precondition("embedding dimension must be >= 1".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("embedding[{i}]")));
        }
        Ok(Embedding {
            values,
            degenerate: true,
        })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_flagged_degenerate(&self) -> bool {
        self.degenerate
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Returns a copy multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let values = self.values.iter().map(|v| v * factor).collect();
        if self.degenerate {
            Self::degenerate(values)
        } else {
            Self::new(values)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbeddingRole {
    Reference,
    Generated,
}

/// An ordered set of embeddings sharing one dimension. Index order is the
/// identity order used by every downstream operation.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    dim: usize,
    role: EmbeddingRole,
    items: Vec<Embedding>,
}

impl EmbeddingSet {
    pub fn new(role: EmbeddingRole, dim: usize, items: Vec<Embedding>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Precondition("embedding dimension must be >= 1".into()));
        }
        for (i, e) in items.iter().enumerate() {
            if e.dim() != dim {
                return Err(Error::invalid(
                    format!("[{i}]"),
                    format!("dimension mismatch: expected {dim}, got {}", e.dim()),
                ));
            }
        }
        Ok(EmbeddingSet { dim, role, items })
    }

    /// Builds a set from row vectors; the dimension is taken from the first
    /// row, so `rows` must be non-empty.
    pub fn from_rows(role: EmbeddingRole, rows: Vec<Vec<f64>>) -> Result<Self> {
        let dim = rows
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::Precondition("cannot infer dimension of an empty set".into()))?;
        let items = rows
            .into_iter()
            .enumerate()
            .map(|(i, r)| Embedding::new(r).map_err(|e| e.within(&format!("[{i}]"))))
            .collect::<Result<Vec<_>>>()?;
        Self::new(role, dim, items)
    }

    pub fn empty(role: EmbeddingRole, dim: usize) -> Result<Self> {
        Self::new(role, dim, Vec::new())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn role(&self) -> EmbeddingRole {
        self.role
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> &[Embedding] {
        &self.items
    }

    pub fn get(&self, i: usize) -> Option<&Embedding> {
        self.items.get(i)
    }

    /// Row-major flattening of all items.
    pub fn flat(&self) -> Vec<f64> {
        self.items.iter().flat_map(|e| e.values.iter().copied()).collect()
    }

    /// Returns a new set with items reordered so that `result[i] = self[perm[i]]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        EmbeddingSet {
            dim: self.dim,
            role: self.role,
            items: perm.iter().map(|&p| self.items[p].clone()).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_zero_norm_unless_degenerate() {
        assert!(matches!(Embedding::new(vec![0.0, 0.0]), Err(Error::ZeroNorm(_))));
        let e = Embedding::degenerate(vec![0.0, 0.0]).unwrap();
        assert!(e.is_flagged_degenerate());
        assert_eq!(e.norm(), 0.0);
    }

    #[test]
    fn rejects_non_finite_and_empty() {
        assert!(Embedding::new(vec![]).is_err());
        assert!(matches!(
            Embedding::new(vec![1.0, f64::NAN]),
            Err(Error::NonFinite(_))
        ));
        assert!(Embedding::new(vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn set_dimension_must_agree() {
        let err = EmbeddingSet::from_rows(
            EmbeddingRole::Reference,
            vec![vec![1.0, 0.0], vec![1.0, 0.0, 0.0]],
        )
        .unwrap_err();
        assert!(err.to_string().contains("[1]"), "{err}");
    }

    #[test]
    fn permuted_preserves_items() {
        let s = EmbeddingSet::from_rows(
            EmbeddingRole::Generated,
            vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]],
        )
        .unwrap();
        let p = s.permuted(&[2, 0, 1]);
        assert_eq!(p.get(0), s.get(2));
        assert_eq!(p.get(1), s.get(0));
        assert_eq!(p.len(), 3);
    }
}
