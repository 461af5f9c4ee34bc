//! Window shapes and the row permutations that partition a token grid into
//! windows.
//!
//! Tokens are stored as rows of a `[B·H·W, D]` matrix, batch-major, then
//! row-major over the grid. Partitioning reorders the rows so that each
//! window's tokens are contiguous: windows in row-major window order, tokens
//! row-major inside each window.

use std::sync::Arc;

use cvc_tensor::{Graph, Real, Result, Var};
use serde::{Deserialize, Serialize};

use crate::error::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowKind {
    Square,
    EastWest,
    NorthSouth,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WindowSpec {
    pub win_h: usize,
    pub win_w: usize,
    pub kind: WindowKind,
}

impl WindowSpec {
    /// Validates that the aspect matches the kind: square windows are square,
    /// east-west windows are wider than tall, north-south taller than wide.
    pub fn new(kind: WindowKind, win_h: usize, win_w: usize) -> crate::Result<Self> {
        let ok = win_h > 0
            && win_w > 0
            && match kind {
                WindowKind::Square => win_h == win_w,
                WindowKind::EastWest => win_w > win_h,
                WindowKind::NorthSouth => win_h > win_w,
            };
        if !ok {
            return Err(Error::Config(format!("{kind:?} window cannot be {win_h}x{win_w}")));
        }
        Ok(Self { win_h, win_w, kind })
    }

    pub fn tokens(&self) -> usize {
        self.win_h * self.win_w
    }

    pub fn check_divides(&self, h: usize, w: usize) -> crate::Result<()> {
        if h % self.win_h != 0 || w % self.win_w != 0 {
            return Err(Error::Config(format!(
                "{:?} window {}x{} does not divide the {h}x{w} token grid",
                self.kind, self.win_h, self.win_w
            )));
        }
        Ok(())
    }

    pub fn count(&self, h: usize, w: usize) -> usize {
        (h / self.win_h) * (w / self.win_w)
    }

    /// `rows[r]` is the source row of partitioned row `r`.
    pub fn partition_rows(&self, batch: usize, h: usize, w: usize) -> Vec<usize> {
        let (wh, ww) = (self.win_h, self.win_w);
        let mut rows = Vec::with_capacity(batch * h * w);
        for b in 0..batch {
            for wy in 0..h / wh {
                for wx in 0..w / ww {
                    for iy in 0..wh {
                        for ix in 0..ww {
                            rows.push((b * h + wy * wh + iy) * w + wx * ww + ix);
                        }
                    }
                }
            }
        }
        rows
    }
}

pub fn invert(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (i, &p) in perm.iter().enumerate() {
        inv[p] = i;
    }
    inv
}

/// Flat element indices that gather whole rows of width `d`.
pub fn row_gather_index(rows: &[usize], d: usize) -> Arc<[usize]> {
    rows.iter()
        .flat_map(|&r| (r * d)..(r * d + d))
        .collect::<Vec<_>>()
        .into()
}

pub fn gather_rows<T: Real>(g: &mut Graph<T>, x: Var, rows: &[usize]) -> Result<Var> {
    let d = g.shape(x)[1];
    g.gather(x, row_gather_index(rows, d), vec![rows.len(), d])
}

pub fn window_partition<T: Real>(
    g: &mut Graph<T>,
    x: Var,
    batch: usize,
    h: usize,
    w: usize,
    spec: &WindowSpec,
) -> Result<Var> {
    gather_rows(g, x, &spec.partition_rows(batch, h, w))
}

pub fn window_merge<T: Real>(
    g: &mut Graph<T>,
    x: Var,
    batch: usize,
    h: usize,
    w: usize,
    spec: &WindowSpec,
) -> Result<Var> {
    gather_rows(g, x, &invert(&spec.partition_rows(batch, h, w)))
}
