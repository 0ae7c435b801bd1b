//! Instance files: JSON documents holding the frames, symbol and auxiliary
//! operators of one problem. Complex entries are `[re, im]` pairs and matrices
//! are lists of rows.
//!
//! ```json
//! {
//!   "ambient_dim": 2,
//!   "block_sizes": [1, 1],
//!   "frames": {
//!     "Lambda": [[[[1, 0], [0, 0]]], [[[0, 0], [1, 0]]]]
//!   },
//!   "symbol": { "weights": [[2, 0], [3, 0]] }
//! }
//! ```

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gframe::GFrame;
use crate::opspace::{c64, CMatrix, SpaceLayout, Tolerances};
use crate::symbol::Symbol;

/// A matrix as rows of `[re, im]` entries.
pub type RawMatrix = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub ambient_dim: usize,
    pub block_sizes: Vec<usize>,
    #[serde(default)]
    pub frames: BTreeMap<String, Vec<RawMatrix>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symbol: Option<SymbolSpec>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub operators: BTreeMap<String, RawMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<ToleranceSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum SymbolSpec {
    Weights(Vec<[f64; 2]>),
    Blocks(Vec<RawMatrix>),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub invert: Option<f64>,
}

/// A parsed and validated instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub file: InstanceFile,
    pub layout: SpaceLayout,
    pub frames: BTreeMap<String, GFrame>,
    pub symbol: Option<Symbol>,
    pub operators: BTreeMap<String, CMatrix>,
}

pub fn matrix_from_raw(raw: &RawMatrix, field: &str) -> Result<CMatrix> {
    let rows = raw.len();
    let cols = raw.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidInput(format!("{field}: empty matrix")));
    }
    if let Some(r) = raw.iter().position(|row| row.len() != cols) {
        return Err(Error::InvalidInput(format!(
            "{field}: row {r} has {} entries, expected {cols}",
            raw[r].len()
        )));
    }
    for (r, row) in raw.iter().enumerate() {
        for (c, [re, im]) in row.iter().enumerate() {
            if !re.is_finite() || !im.is_finite() {
                return Err(Error::InvalidInput(format!("{field}: non-finite entry at ({r}, {c})")));
            }
        }
    }
    Ok(CMatrix::from_fn(rows, cols, |r, c| {
        let [re, im] = raw[r][c];
        c64(re, im)
    }))
}

pub fn matrix_to_raw(m: &CMatrix) -> RawMatrix {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| [m[(r, c)].re, m[(r, c)].im]).collect())
        .collect()
}

fn expect_shape(m: &CMatrix, shape: (usize, usize), field: &str) -> Result<()> {
    if m.shape() == shape {
        Ok(())
    } else {
        Err(Error::ShapeMismatch(format!(
            "{field}: expected {}×{}, got {}×{}",
            shape.0,
            shape.1,
            m.nrows(),
            m.ncols()
        )))
    }
}

impl InstanceFile {
    /// Parse JSON text; syntax errors carry line and column.
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("parse error: {e}")))
    }

    /// Pretty JSON with a trailing newline.
    pub fn emit(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("instance serializes");
        s.push('\n');
        s
    }

    /// Tolerances from the file, falling back to the defaults.
    pub fn tolerances(&self) -> Tolerances {
        let d = Tolerances::default();
        match self.tolerances {
            Some(t) => Tolerances {
                rank: t.rank.unwrap_or(d.rank),
                invert: t.invert.unwrap_or(d.invert),
            },
            None => d,
        }
    }

    pub fn validate(self) -> Result<Instance> {
        let n = self.ambient_dim;
        if n == 0 {
            return Err(Error::InvalidInput("ambient_dim: must be positive".into()));
        }
        let layout =
            SpaceLayout::new(self.block_sizes.clone()).map_err(|e| Error::InvalidInput(format!("block_sizes: {e}")))?;
        self.tolerances().validate()?;

        let mut frames = BTreeMap::new();
        for (name, blocks) in &self.frames {
            if blocks.len() != layout.len() {
                return Err(Error::ShapeMismatch(format!(
                    "frames.{name}: {} blocks, expected {}",
                    blocks.len(),
                    layout.len()
                )));
            }
            let mats = blocks
                .iter()
                .enumerate()
                .map(|(i, b)| {
                    let field = format!("frames.{name}[{i}]");
                    let m = matrix_from_raw(b, &field)?;
                    expect_shape(&m, (layout.size(i), n), &field)?;
                    Ok(m)
                })
                .collect::<Result<Vec<_>>>()?;
            frames.insert(name.clone(), GFrame::with_layout(layout.clone(), n, mats)?);
        }

        let symbol = match &self.symbol {
            None => None,
            Some(SymbolSpec::Weights(w)) => {
                if w.len() != layout.len() {
                    return Err(Error::ShapeMismatch(format!(
                        "symbol.weights: {} weights, expected {}",
                        w.len(),
                        layout.len()
                    )));
                }
                if let Some(i) = w.iter().position(|[re, im]| !re.is_finite() || !im.is_finite()) {
                    return Err(Error::InvalidInput(format!("symbol.weights[{i}]: non-finite entry")));
                }
                let weights: Vec<_> = w.iter().map(|&[re, im]| c64(re, im)).collect();
                Some(Symbol::from_weights(&layout, &weights)?)
            }
            Some(SymbolSpec::Blocks(blocks)) => {
                if blocks.len() != layout.len() {
                    return Err(Error::ShapeMismatch(format!(
                        "symbol.blocks: {} blocks, expected {}",
                        blocks.len(),
                        layout.len()
                    )));
                }
                let mats = blocks
                    .iter()
                    .enumerate()
                    .map(|(i, b)| {
                        let field = format!("symbol.blocks[{i}]");
                        let m = matrix_from_raw(b, &field)?;
                        expect_shape(&m, (layout.size(i), layout.size(i)), &field)?;
                        Ok(m)
                    })
                    .collect::<Result<Vec<_>>>()?;
                Some(Symbol::with_layout(layout.clone(), mats)?)
            }
        };

        let k = layout.total();
        let mut operators = BTreeMap::new();
        for (name, raw) in &self.operators {
            let field = format!("operators.{name}");
            let m = matrix_from_raw(raw, &field)?;
            let shape = match name.as_str() {
                "Phi" => Some((k, n)),
                "Psi" => Some((n, k)),
                "T" | "T1" | "T2" => Some((n, n)),
                _ => None,
            };
            if let Some(shape) = shape {
                expect_shape(&m, shape, &field)?;
            }
            operators.insert(name.clone(), m);
        }

        Ok(Instance {
            file: self,
            layout,
            frames,
            symbol,
            operators,
        })
    }
}

impl Instance {
    pub fn parse(text: &str) -> Result<Self> {
        InstanceFile::parse(text)?.validate()
    }

    pub fn ambient_dim(&self) -> usize {
        self.file.ambient_dim
    }

    pub fn frame(&self, name: &str) -> Result<&GFrame> {
        self.frames
            .get(name)
            .ok_or_else(|| Error::InvalidInput(format!("frames.{name}: missing")))
    }

    pub fn symbol(&self) -> Result<&Symbol> {
        self.symbol
            .as_ref()
            .ok_or_else(|| Error::InvalidInput("symbol: missing".into()))
    }

    pub fn operator(&self, name: &str) -> Result<&CMatrix> {
        self.operators
            .get(name)
            .ok_or_else(|| Error::InvalidInput(format!("operators.{name}: missing")))
    }
}

/// Assemble a file from library objects; all frames must share `layout`.
pub fn build_file(
    ambient_dim: usize,
    layout: &SpaceLayout,
    frames: &[(&str, &GFrame)],
    symbol: Option<&Symbol>,
    operators: &[(&str, &CMatrix)],
    seed: Option<u64>,
) -> InstanceFile {
    InstanceFile {
        ambient_dim,
        block_sizes: layout.block_sizes().to_vec(),
        frames: frames
            .iter()
            .map(|(name, f)| (name.to_string(), f.blocks().iter().map(matrix_to_raw).collect()))
            .collect(),
        symbol: symbol.map(|u| SymbolSpec::Blocks(u.blocks().iter().map(matrix_to_raw).collect())),
        operators: operators
            .iter()
            .map(|(name, m)| (name.to_string(), matrix_to_raw(m)))
            .collect(),
        seed,
        tolerances: None,
    }
}
