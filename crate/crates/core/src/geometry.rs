use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shape of the attention stack under analysis.
///
/// Serialized with the short keys used by manifests and mask files
/// (`L`, `H`, `D`, `D_prime`, `max_seq_len`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModelGeometry {
    #[serde(rename = "L")]
    pub num_layers: usize,
    #[serde(rename = "H")]
    pub num_heads: usize,
    #[serde(rename = "D")]
    pub hidden_dim: usize,
    #[serde(rename = "D_prime")]
    pub head_dim: usize,
    pub max_seq_len: usize,
}

impl ModelGeometry {
    /// Builds a geometry with `head_dim = hidden_dim / num_heads`.
    pub fn new(
        num_layers: usize,
        num_heads: usize,
        hidden_dim: usize,
        max_seq_len: usize,
    ) -> Result<Self> {
        if num_heads == 0 {
            return Err(Error::Geometry("H must be positive".into()));
        }
        if !hidden_dim.is_multiple_of(num_heads) {
            return Err(Error::Geometry("D not divisible by H".into()));
        }
        let g = Self {
            num_layers,
            num_heads,
            hidden_dim,
            head_dim: hidden_dim / num_heads,
            max_seq_len,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("L", self.num_layers),
            ("H", self.num_heads),
            ("D", self.hidden_dim),
            ("D_prime", self.head_dim),
            ("max_seq_len", self.max_seq_len),
        ];
        for (name, v) in fields {
            if v == 0 {
                return Err(Error::Geometry(format!("{name} must be positive")));
            }
        }
        if !self.hidden_dim.is_multiple_of(self.num_heads) {
            return Err(Error::Geometry("D not divisible by H".into()));
        }
        if self.head_dim * self.num_heads != self.hidden_dim {
            return Err(Error::Geometry(format!(
                "D_prime * H = {} but D = {}",
                self.head_dim * self.num_heads,
                self.hidden_dim
            )));
        }
        Ok(())
    }

    pub fn check_layer(&self, layer: usize) -> Result<()> {
        if layer >= self.num_layers {
            return Err(Error::OutOfRange(format!(
                "layer {layer} >= L = {}",
                self.num_layers
            )));
        }
        Ok(())
    }

    pub fn check_head(&self, head: usize) -> Result<()> {
        if head >= self.num_heads {
            return Err(Error::OutOfRange(format!(
                "head {head} >= H = {}",
                self.num_heads
            )));
        }
        Ok(())
    }
}
