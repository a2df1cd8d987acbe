//! Block states and decisions of the recursive planner.

use serde::{Deserialize, Serialize};

use crate::stochastic::Evidence;

/// Which endpoint skeletons of a block are known.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BlockKind {
    /// Both `x_l` and `x_h` measured.
    Type1,
    /// Only the left endpoint `x_l` measured; the block runs to the
    /// trajectory end.
    Type2,
    /// Only the right endpoint `x_h` measured; the block starts at the
    /// trajectory head (`x_l = 0`).
    Type3,
}

/// A contiguous index range `{x_l+1, ..., x_h}` together with the measured
/// endpoint states. `s_l`/`s_h` are state indices of the skeleton process at
/// locations `x_l`/`x_h`; exactly the fields demanded by `kind` are present.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BlockState {
    pub x_l: usize,
    pub x_h: usize,
    pub kind: BlockKind,
    pub s_l: Option<usize>,
    pub s_h: Option<usize>,
}

impl BlockState {
    pub fn type1(x_l: usize, x_h: usize, s_l: usize, s_h: usize) -> Self {
        Self {
            x_l,
            x_h,
            kind: BlockKind::Type1,
            s_l: Some(s_l),
            s_h: Some(s_h),
        }
    }

    pub fn type2(x_l: usize, x_h: usize, s_l: usize) -> Self {
        Self {
            x_l,
            x_h,
            kind: BlockKind::Type2,
            s_l: Some(s_l),
            s_h: None,
        }
    }

    pub fn type3(x_l: usize, x_h: usize, s_h: usize) -> Self {
        Self {
            x_l,
            x_h,
            kind: BlockKind::Type3,
            s_l: None,
            s_h: Some(s_h),
        }
    }

    /// Number of locations inside the block.
    pub fn len(&self) -> usize {
        self.x_h - self.x_l
    }

    pub fn is_empty(&self) -> bool {
        self.x_l == self.x_h
    }

    /// Conditioning evidence carried by the measured endpoints.
    pub fn evidence(&self) -> Evidence {
        match self.kind {
            BlockKind::Type1 => Evidence::Both {
                x_l: self.x_l,
                s_l: self.s_l.unwrap(),
                x_h: self.x_h,
                s_h: self.s_h.unwrap(),
            },
            BlockKind::Type2 => Evidence::Left {
                x_l: self.x_l,
                s_l: self.s_l.unwrap(),
            },
            BlockKind::Type3 => Evidence::Right {
                x_h: self.x_h,
                s_h: self.s_h.unwrap(),
            },
        }
    }
}

/// Per-block policy action.
///
/// `NoRef { alpha }` fixes the region boundary inside a feasible block: the
/// left piece `{x_l+1..alpha}` reuses the reference at `x_l`, the right piece
/// `{alpha+1..x_h}` the reference at `x_h` (whichever pieces are non-empty
/// for the block's kind). `NewRef { x }` measures the skeleton at `x`, which
/// becomes the next reference point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Decision {
    NoRef { alpha: usize },
    NewRef { x: usize },
}
