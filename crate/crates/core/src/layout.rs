//! Token layout of a unified multimodal sequence.
//!
//! Indices are 0-based. The JSON form is
//! `{"L":int, "text":[..], "images":[[..]..], "timestep":[..], "latent":[..], "grid_side":int}`
//! and index arrays are canonicalized to ascending order on construction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenLayout {
    #[serde(rename = "L")]
    len: usize,
    text: Vec<usize>,
    images: Vec<Vec<usize>>,
    timestep: Vec<usize>,
    latent: Vec<usize>,
    grid_side: usize,
}

/// Role of a single token position.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Text,
    /// Token of reference image `k` (0-based group index).
    Image(usize),
    Timestep,
    Latent,
    /// Token in no declared set; queries from it behave like non-text tokens.
    Other,
}

impl TokenLayout {
    /// Builds a layout, sorting every index set. No validation is performed;
    /// see [`validate_layout`].
    pub fn new(
        len: usize,
        text: Vec<usize>,
        images: Vec<Vec<usize>>,
        timestep: Vec<usize>,
        latent: Vec<usize>,
        grid_side: usize,
    ) -> Self {
        TokenLayout {
            len,
            text,
            images,
            timestep,
            latent,
            grid_side,
        }
        .canonical()
    }

    /// Parses the JSON form and canonicalizes index order.
    pub fn from_json(s: &str) -> Result<Self> {
        let layout: TokenLayout =
            serde_json::from_str(s).map_err(|e| Error::Malformed(e.to_string()))?;
        Ok(layout.canonical())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("layout serializes")
    }

    pub(crate) fn canonical(mut self) -> Self {
        self.text.sort_unstable();
        for img in &mut self.images {
            img.sort_unstable();
        }
        self.timestep.sort_unstable();
        self.latent.sort_unstable();
        self
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn text(&self) -> &[usize] {
        &self.text
    }

    pub fn images(&self) -> &[Vec<usize>] {
        &self.images
    }

    pub fn image_count(&self) -> usize {
        self.images.len()
    }

    pub fn timestep(&self) -> &[usize] {
        &self.timestep
    }

    /// Latent token indices in ascending order; position `p * D + r` of this
    /// slice is grid cell `(p, r)`.
    pub fn latent(&self) -> &[usize] {
        &self.latent
    }

    pub fn grid_side(&self) -> usize {
        self.grid_side
    }

    /// Checks that the index sets are in range, duplicate-free and pairwise
    /// disjoint. Does not check the latent grid size.
    pub fn check_partition(&self) -> Result<()> {
        self.classify().map(|_| ())
    }

    /// Role of every position `0..L`. Fails if the sets overlap, repeat an
    /// index or reach past `L`.
    pub fn classify(&self) -> Result<Vec<TokenKind>> {
        let mut kinds = vec![TokenKind::Other; self.len];
        let groups = std::iter::once(("text", TokenKind::Text, &self.text))
            .chain(
                self.images
                    .iter()
                    .enumerate()
                    .map(|(k, s)| ("images", TokenKind::Image(k), s)),
            )
            .chain(std::iter::once(("timestep", TokenKind::Timestep, &self.timestep)))
            .chain(std::iter::once(("latent", TokenKind::Latent, &self.latent)));
        for (name, kind, set) in groups {
            for &i in set {
                if i >= self.len {
                    return Err(Error::Layout(format!(
                        "index {i} in {} is >= L = {}",
                        describe(name, kind),
                        self.len
                    )));
                }
                if kinds[i] != TokenKind::Other {
                    return Err(Error::Layout(format!(
                        "index {i} appears in {} and {}",
                        describe_kind(kinds[i]),
                        describe(name, kind)
                    )));
                }
                kinds[i] = kind;
            }
        }
        Ok(kinds)
    }
}

fn describe(name: &str, kind: TokenKind) -> String {
    match kind {
        TokenKind::Image(k) => format!("{name}[{k}]"),
        _ => name.to_string(),
    }
}

fn describe_kind(kind: TokenKind) -> String {
    match kind {
        TokenKind::Text => "text".into(),
        TokenKind::Image(k) => format!("images[{k}]"),
        TokenKind::Timestep => "timestep".into(),
        TokenKind::Latent => "latent".into(),
        TokenKind::Other => "none".into(),
    }
}

/// Succeeds iff every layout invariant holds: sets disjoint and in range, and
/// `|latent| == grid_side^2`.
pub fn validate_layout(layout: &TokenLayout) -> Result<()> {
    layout.check_partition()?;
    let want = layout.grid_side.checked_mul(layout.grid_side);
    if want != Some(layout.latent.len()) {
        return Err(Error::Layout(format!(
            "|latent| = {} but grid_side^2 = {}",
            layout.latent.len(),
            want.map_or_else(|| "overflow".to_string(), |w| w.to_string())
        )));
    }
    Ok(())
}
