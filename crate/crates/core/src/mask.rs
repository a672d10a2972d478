//! Self-attention masks for a unified multimodal backbone.
//!
//! The base mask makes text queries causal and every other query
//! bidirectional. The isolated mask additionally confines each reference
//! image's queries to its own region of the latent grid: an image-`k` query
//! may attend to every non-latent token and to the latent tokens in `R_k`.

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use bitvec::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layout::{validate_layout, TokenKind, TokenLayout};
use crate::region_map::RegionMap;

/// Binary `L x L` mask, one packed row per query token. `get(i, j)` is true
/// when query `i` may attend to key `j`.
#[derive(Clone, PartialEq, Eq)]
pub struct AttentionMask {
    len: usize,
    rows: Vec<BitVec<u8, Msb0>>,
}

impl std::fmt::Debug for AttentionMask {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "AttentionMask {0}x{0}", self.len)?;
        for row in &self.rows {
            let line: String = row.iter().map(|b| if *b { '1' } else { '0' }).collect();
            writeln!(f, "  {line}")?;
        }
        Ok(())
    }
}

impl AttentionMask {
    fn from_rows(len: usize, rows: Vec<BitVec<u8, Msb0>>) -> Self {
        AttentionMask { len, rows }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.rows[i][j]
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = bool> + '_ {
        self.rows[i].iter().by_vals()
    }

    /// True when every allowed entry of `self` is also allowed in `other`.
    pub fn is_subset_of(&self, other: &AttentionMask) -> bool {
        self.len == other.len
            && self
                .rows
                .iter()
                .zip(&other.rows)
                .all(|(a, b)| (a.clone() & !b.clone()).not_any())
    }

    /// Dense row-major export with one byte (0 or 1) per entry.
    pub fn to_dense(&self) -> Vec<u8> {
        self.rows
            .iter()
            .flat_map(|r| r.iter().map(|b| u8::from(*b)))
            .collect()
    }

    /// Packed MSB-first bytes of row `i`, zero-padded to a whole byte.
    pub fn packed_row(&self, i: usize) -> Vec<u8> {
        let mut row = self.rows[i].clone();
        row.set_uninitialized(false);
        row.into_vec()
    }

    pub fn export(&self) -> MaskExport {
        MaskExport {
            len: self.len,
            rows: (0..self.len)
                .map(|i| BASE64.encode(self.packed_row(i)))
                .collect(),
        }
    }

    pub fn import(export: &MaskExport) -> Result<Self> {
        if export.rows.len() != export.len {
            return Err(Error::ShapeMismatch {
                expected: format!("{} rows", export.len),
                actual: format!("{} rows", export.rows.len()),
            });
        }
        let want = export.len.div_ceil(8);
        let rows = export
            .rows
            .iter()
            .enumerate()
            .map(|(i, text)| {
                let bytes = BASE64
                    .decode(text.as_bytes())
                    .map_err(|e| Error::invalid(format!("rows[{i}]"), e.to_string()))?;
                if bytes.len() != want {
                    return Err(Error::invalid(
                        format!("rows[{i}]"),
                        format!("expected {want} bytes, got {}", bytes.len()),
                    ));
                }
                let mut bits = BitVec::<u8, Msb0>::from_vec(bytes);
                bits.truncate(export.len);
                Ok(bits)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(AttentionMask::from_rows(export.len, rows))
    }
}

/// Interchange form: `{"L": int, "rows": [base64 of each packed row]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskExport {
    #[serde(rename = "L")]
    pub len: usize,
    pub rows: Vec<String>,
}

fn causal_row(len: usize, i: usize) -> BitVec<u8, Msb0> {
    let mut row = BitVec::repeat(false, len);
    row[..=i].fill(true);
    row
}

/// Base mask: text queries attend causally (including themselves), all other
/// queries attend everywhere.
///
/// Only the partition invariants of the layout are required; the latent grid
/// size plays no part here.
pub fn build_base_mask(layout: &TokenLayout) -> Result<AttentionMask> {
    let kinds = layout.classify()?;
    let len = layout.len();
    let rows = kinds
        .iter()
        .enumerate()
        .map(|(i, kind)| match kind {
            TokenKind::Text => causal_row(len, i),
            _ => BitVec::repeat(true, len),
        })
        .collect();
    Ok(AttentionMask::from_rows(len, rows))
}

/// Layout plus one latent region per reference image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IsolationSpec {
    layout: TokenLayout,
    rois: Vec<Vec<usize>>,
}

impl IsolationSpec {
    /// Sorts and deduplicates each region, then checks there is one region
    /// per image group and that every region index is a latent token.
    pub fn new(layout: TokenLayout, rois: Vec<Vec<usize>>) -> Result<Self> {
        layout.check_partition()?;
        if rois.len() != layout.image_count() {
            return Err(Error::Precondition(format!(
                "{} regions given for {} image groups",
                rois.len(),
                layout.image_count()
            )));
        }
        let rois = rois
            .into_iter()
            .enumerate()
            .map(|(k, mut roi)| {
                roi.sort_unstable();
                roi.dedup();
                if let Some(bad) = roi.iter().find(|i| layout.latent().binary_search(i).is_err()) {
                    return Err(Error::invalid(
                        format!("rois[{k}]"),
                        format!("index {bad} is not a latent token"),
                    ));
                }
                Ok(roi)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(IsolationSpec { layout, rois })
    }

    /// Converts `D x D` region maps to latent index sets first.
    pub fn from_region_maps(layout: TokenLayout, maps: &[RegionMap]) -> Result<Self> {
        let rois = maps
            .iter()
            .enumerate()
            .map(|(k, m)| roi_from_region_map(m, &layout).map_err(|e| e.within(&format!("rois[{k}]"))))
            .collect::<Result<Vec<_>>>()?;
        Self::new(layout, rois)
    }

    pub fn layout(&self) -> &TokenLayout {
        &self.layout
    }

    pub fn rois(&self) -> &[Vec<usize>] {
        &self.rois
    }
}

/// Isolated mask. Text rows are causal; an image-`k` row allows every
/// non-latent key plus the latent keys in `R_k`; timestep, latent and
/// undeclared rows allow everything.
pub fn build_isolated_mask(spec: &IsolationSpec) -> Result<AttentionMask> {
    let layout = &spec.layout;
    let kinds = layout.classify()?;
    let len = layout.len();

    let mut non_latent = BitVec::<u8, Msb0>::repeat(true, len);
    for &j in layout.latent() {
        non_latent.set(j, false);
    }
    let image_rows: Vec<BitVec<u8, Msb0>> = spec
        .rois
        .iter()
        .map(|roi| {
            let mut row = non_latent.clone();
            for &j in roi {
                row.set(j, true);
            }
            row
        })
        .collect();

    let rows = kinds
        .iter()
        .enumerate()
        .map(|(i, kind)| match *kind {
            TokenKind::Text => causal_row(len, i),
            TokenKind::Image(k) => image_rows[k].clone(),
            TokenKind::Timestep | TokenKind::Latent | TokenKind::Other => {
                BitVec::repeat(true, len)
            }
        })
        .collect();
    Ok(AttentionMask::from_rows(len, rows))
}

/// Latent token indices selected by a `D x D` map: cell `(p, r)` is the
/// `(p * D + r)`-th latent index in ascending order.
pub fn roi_from_region_map(map: &RegionMap, layout: &TokenLayout) -> Result<Vec<usize>> {
    validate_layout(layout)?;
    let d = layout.grid_side();
    if map.shape() != (d, d) {
        return Err(Error::ShapeMismatch {
            expected: format!("{d}x{d}"),
            actual: format!("{}x{}", map.height(), map.width()),
        });
    }
    Ok(map.ones_indices().map(|cell| layout.latent()[cell]).collect())
}
