//! Binary spatial masks and real-valued similarity grids.

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use bitvec::prelude::*;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Largest supported `height * width`.
pub const MAX_CELLS: usize = 1 << 31;

/// A `height x width` binary mask, row-major.
///
/// Serialized as `{"h":int,"w":int,"bits":"<base64>"}` where the payload is
/// the row-major cell sequence packed MSB-first into bytes, zero-padded to a
/// whole byte.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RegionMap {
    height: usize,
    width: usize,
    bits: BitVec<u8, Msb0>,
}

impl std::fmt::Debug for RegionMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "RegionMap {}x{}", self.height, self.width)?;
        for row in self.bits.chunks(self.width.max(1)) {
            let line: String = row.iter().map(|b| if *b { '1' } else { '0' }).collect();
            writeln!(f, "  {line}")?;
        }
        Ok(())
    }
}

fn cell_count(height: usize, width: usize) -> Result<usize> {
    height
        .checked_mul(width)
        .filter(|&n| n <= MAX_CELLS)
        .ok_or_else(|| Error::Precondition(format!("region map {height}x{width} is too large")))
}

impl RegionMap {
    pub fn zeros(height: usize, width: usize) -> Result<Self> {
        Self::filled(height, width, false)
    }

    pub fn ones(height: usize, width: usize) -> Result<Self> {
        Self::filled(height, width, true)
    }

    pub fn filled(height: usize, width: usize, value: bool) -> Result<Self> {
        let n = cell_count(height, width)?;
        Ok(RegionMap {
            height,
            width,
            bits: BitVec::repeat(value, n),
        })
    }

    /// Builds a map from nested rows of 0/1 values.
    pub fn from_rows<R: AsRef<[u8]>>(rows: &[R]) -> Result<Self> {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.as_ref().len());
        let mut map = Self::zeros(height, width)?;
        for (p, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != width {
                return Err(Error::ShapeMismatch {
                    expected: format!("row of width {width}"),
                    actual: format!("row {p} of width {}", row.len()),
                });
            }
            for (r, &v) in row.iter().enumerate() {
                match v {
                    0 => {}
                    1 => map.set(p, r, true),
                    other => {
                        return Err(Error::invalid(
                            format!("bits[{p}][{r}]"),
                            format!("entry {other} is not 0 or 1"),
                        ))
                    }
                }
            }
        }
        Ok(map)
    }

    /// Builds a map from row-major booleans.
    pub fn from_cells(height: usize, width: usize, cells: &[bool]) -> Result<Self> {
        let n = cell_count(height, width)?;
        if cells.len() != n {
            return Err(Error::ShapeMismatch {
                expected: format!("{n} cells"),
                actual: format!("{} cells", cells.len()),
            });
        }
        Ok(RegionMap {
            height,
            width,
            bits: cells.iter().copied().collect(),
        })
    }

    /// Decodes the packed MSB-first payload.
    pub fn from_packed(height: usize, width: usize, bytes: &[u8]) -> Result<Self> {
        let n = cell_count(height, width)?;
        let want = n.div_ceil(8);
        if bytes.len() != want {
            return Err(Error::ShapeMismatch {
                expected: format!("{want} packed bytes for {height}x{width}"),
                actual: format!("{} bytes", bytes.len()),
            });
        }
        let mut bits = BitVec::<u8, Msb0>::from_slice(bytes);
        if bits[n..].any() {
            return Err(Error::Malformed("non-zero padding bits in region map".into()));
        }
        bits.truncate(n);
        Ok(RegionMap {
            height,
            width,
            bits,
        })
    }

    pub fn to_packed(&self) -> Vec<u8> {
        let mut bits = self.bits.clone();
        bits.set_uninitialized(false);
        bits.into_vec()
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn get(&self, p: usize, r: usize) -> bool {
        assert!(p < self.height && r < self.width, "cell ({p},{r}) out of bounds");
        self.bits[p * self.width + r]
    }

    pub fn set(&mut self, p: usize, r: usize, value: bool) {
        assert!(p < self.height && r < self.width, "cell ({p},{r}) out of bounds");
        self.bits.set(p * self.width + r, value);
    }

    /// Row-major cell iterator.
    pub fn cells(&self) -> impl Iterator<Item = bool> + '_ {
        self.bits.iter().by_vals()
    }

    /// Row-major indices of the set cells.
    pub fn ones_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter_ones()
    }

    /// Number of set cells.
    pub fn area(&self) -> u64 {
        self.bits.count_ones() as u64
    }

    pub fn is_all(&self, value: bool) -> bool {
        if value {
            self.bits.all()
        } else {
            self.bits.not_any()
        }
    }

    fn check_same_shape(&self, other: &RegionMap) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch {
                expected: format!("{}x{}", self.height, self.width),
                actual: format!("{}x{}", other.height, other.width),
            });
        }
        Ok(())
    }

    pub fn intersection_area(&self, other: &RegionMap) -> Result<u64> {
        self.check_same_shape(other)?;
        let shared = self.bits.clone() & other.bits.as_bitslice();
        Ok(shared.count_ones() as u64)
    }

    /// Intersection over union. Two empty masks have IoU 0.
    pub fn iou(&self, other: &RegionMap) -> Result<f64> {
        let inter = self.intersection_area(other)?;
        let union = self.area() + other.area() - inter;
        if union == 0 {
            return Ok(0.0);
        }
        Ok(inter as f64 / union as f64)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RegionMapRepr {
    h: usize,
    w: usize,
    bits: String,
}

impl Serialize for RegionMap {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RegionMapRepr {
            h: self.height,
            w: self.width,
            bits: BASE64.encode(self.to_packed()),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for RegionMap {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = RegionMapRepr::deserialize(d)?;
        let bytes = BASE64.decode(repr.bits.as_bytes()).map_err(D::Error::custom)?;
        RegionMap::from_packed(repr.h, repr.w, &bytes).map_err(D::Error::custom)
    }
}

/// A `side x side` grid of non-negative attention mass, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMap {
    side: usize,
    values: Vec<f64>,
}

impl SimilarityMap {
    pub fn zeros(side: usize) -> Self {
        SimilarityMap {
            side,
            values: vec![0.0; side * side],
        }
    }

    pub fn new(side: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != side * side {
            return Err(Error::ShapeMismatch {
                expected: format!("{} values for a {side}x{side} grid", side * side),
                actual: format!("{} values", values.len()),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::invalid(
                format!("grid[{i}]"),
                format!("entry {} is not finite and non-negative", values[i]),
            ));
        }
        Ok(SimilarityMap { side, values })
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let side = rows.len();
        if rows.iter().any(|r| r.len() != side) {
            return Err(Error::ShapeMismatch {
                expected: format!("{side}x{side}"),
                actual: "ragged rows".into(),
            });
        }
        Self::new(side, rows.iter().flat_map(|r| r.iter().copied()).collect())
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, p: usize, r: usize) -> f64 {
        self.values[p * self.side + r]
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// `sum over cells of self[p,r] * mask[p,r]`.
    pub fn overlap(&self, mask: &RegionMap) -> Result<f64> {
        if mask.shape() != (self.side, self.side) {
            return Err(Error::ShapeMismatch {
                expected: format!("{0}x{0}", self.side),
                actual: format!("{}x{}", mask.height(), mask.width()),
            });
        }
        Ok(mask.ones_indices().map(|i| self.values[i]).sum())
    }
}
