//! Block-periodic model of the Calkin quotient.
//!
//! A [`BlockOperator`] acts block-diagonally on `⊕_{n≥0} ℂ^d`: finitely many
//! exceptional `d×d` blocks followed by one tail block repeated forever.
//! Operators with zero tail play the role of the compact ideal, and the
//! quotient map sends an operator to its tail. Every quantity in this model
//! (norms, nullities of the infinite sum, the quotient) is a finite
//! computation on `d×d` matrices.

mod lift;
mod sequence;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geodesic::GeodesicError;
use crate::numkernel::random::random_complex;
use crate::numkernel::{op_norm, CMatrix, NumError};
use crate::projection::{IndexPair, ProjectionError};

pub use lift::{
    block_geodesic_point, existence_dichotomy, lift_geodesic, lift_projection, quotient_geodesic,
    quotient_geodesic_point, random_block_pair, random_fiber_projection, truncation_oracle, Dichotomy, DichotomyCase, QuotientGeodesic,
    TruncationOracle, SPECTRAL_GAP,
};
pub use sequence::{minimal_norm_lift, random_diagonal_sequence, DiagonalSequence};

/// Longest exceptional list a [`BlockOperator`] may carry in normal form.
pub const MAX_EXCEPTIONAL: usize = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CalkinError {
    #[error("block dimensions differ: {0} vs {1}")]
    BlockDimMismatch(usize, usize),
    #[error("block {index} is {rows}x{cols}, expected {dim}x{dim}")]
    BadBlock { index: usize, rows: usize, cols: usize, dim: usize },
    #[error("block dimension must be positive")]
    ZeroBlockDim,
    #[error("{0} exceptional blocks exceed the cap of {MAX_EXCEPTIONAL}")]
    TooManyBlocks(usize),
    #[error("block {0} is not selfadjoint")]
    NotSelfadjoint(BlockIndex),
    #[error("{0} is not a projection")]
    NotProjection(&'static str),
    #[error("eigenvalue {eigenvalue} of block {block} lies within the spectral gap around 1/2")]
    NoSpectralGap { block: BlockIndex, eigenvalue: f64 },
    #[error("quotient exponent is not skew-Hermitian (residual {0:e})")]
    NotSkew(f64),
    #[error("quotient exponent is not codiagonal (residual {0:e})")]
    NotCodiagonal(f64),
    #[error("quotient exponent has norm {0} > π/2")]
    NormTooLarge(f64),
    #[error("lift does not lie over the quotient projection (residual {0:e})")]
    FiberMismatch(f64),
    #[error("no geodesic: quotient nullities ({}, {})", .0.d_plus, .0.d_minus)]
    NoGeodesic(IndexPair),
    #[error("quotient nullities ({}, {}) are both infinite but unequal per block; not representable by a block-diagonal geodesic", .0.d_plus, .0.d_minus)]
    Unrepresentable(IndexPair),
    #[error("lifted exponent disagrees with the quotient exponent by {0:e}")]
    LiftMismatch(f64),
    #[error("diagonal sequence needs a non-empty finite tail cycle")]
    BadSequence,
    #[error(transparent)]
    Geodesic(#[from] GeodesicError),
    #[error(transparent)]
    Projection(#[from] ProjectionError),
    #[error(transparent)]
    Numerical(#[from] NumError),
}

/// Position of a block: exceptional index or the tail.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlockIndex {
    Exceptional(usize),
    Tail,
}

impl std::fmt::Display for BlockIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BlockIndex::Exceptional(i) => write!(f, "{i}"),
            BlockIndex::Tail => write!(f, "tail"),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct BlockRepr {
    block_dim: usize,
    exceptional: Vec<CMatrix>,
    tail: CMatrix,
}

/// Block-diagonal operator with finitely many exceptional blocks and a
/// repeating tail. Always kept in normal form: the last exceptional block
/// differs from the tail.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BlockRepr", into = "BlockRepr")]
pub struct BlockOperator {
    block_dim: usize,
    exceptional: Vec<CMatrix>,
    tail: CMatrix,
}

impl TryFrom<BlockRepr> for BlockOperator {
    type Error = CalkinError;

    fn try_from(r: BlockRepr) -> Result<Self, CalkinError> {
        BlockOperator::new(r.block_dim, r.exceptional, r.tail)
    }
}

impl From<BlockOperator> for BlockRepr {
    fn from(b: BlockOperator) -> Self {
        BlockRepr { block_dim: b.block_dim, exceptional: b.exceptional, tail: b.tail }
    }
}

impl BlockOperator {
    pub fn new(block_dim: usize, exceptional: Vec<CMatrix>, tail: CMatrix) -> Result<Self, CalkinError> {
        if block_dim == 0 {
            return Err(CalkinError::ZeroBlockDim);
        }
        let shape_ok = |m: &CMatrix| m.rows() == block_dim && m.cols() == block_dim;
        if !shape_ok(&tail) {
            return Err(CalkinError::BadBlock { index: exceptional.len(), rows: tail.rows(), cols: tail.cols(), dim: block_dim });
        }
        if let Some((index, m)) = exceptional.iter().enumerate().find(|(_, m)| !shape_ok(m)) {
            return Err(CalkinError::BadBlock { index, rows: m.rows(), cols: m.cols(), dim: block_dim });
        }
        if !tail.is_finite() || exceptional.iter().any(|m| !m.is_finite()) {
            return Err(NumError::NonFinite.into());
        }
        let mut op = Self { block_dim, exceptional, tail };
        op.normalize();
        if op.exceptional.len() > MAX_EXCEPTIONAL {
            return Err(CalkinError::TooManyBlocks(op.exceptional.len()));
        }
        Ok(op)
    }

    /// Operator whose every block is `tail`.
    pub fn constant(tail: CMatrix) -> Result<Self, CalkinError> {
        Self::new(tail.rows(), Vec::new(), tail)
    }

    pub fn zeros(d: usize) -> Self {
        Self { block_dim: d, exceptional: Vec::new(), tail: CMatrix::zeros(d, d) }
    }

    pub fn identity(d: usize) -> Self {
        Self { block_dim: d, exceptional: Vec::new(), tail: CMatrix::identity(d) }
    }

    fn normalize(&mut self) {
        while self.exceptional.last() == Some(&self.tail) {
            self.exceptional.pop();
        }
    }

    pub fn block_dim(&self) -> usize {
        self.block_dim
    }

    pub fn exceptional(&self) -> &[CMatrix] {
        &self.exceptional
    }

    pub fn tail(&self) -> &CMatrix {
        &self.tail
    }

    /// Block `i` of the infinite sum.
    pub fn block(&self, i: usize) -> &CMatrix {
        self.exceptional.get(i).unwrap_or(&self.tail)
    }

    pub fn is_compact(&self) -> bool {
        self.tail.max_abs() == 0.0
    }

    /// Applies `f` to every block, including the tail.
    pub fn map_blocks(&self, mut f: impl FnMut(&CMatrix) -> CMatrix) -> Result<Self, CalkinError> {
        let exceptional = self.exceptional.iter().map(&mut f).collect();
        let tail = f(&self.tail);
        Self::new(self.block_dim, exceptional, tail)
    }

    /// Same, for fallible block maps.
    pub fn try_map_blocks<E>(&self, mut f: impl FnMut(BlockIndex, &CMatrix) -> Result<CMatrix, E>) -> Result<Self, CalkinError>
    where
        CalkinError: From<E>,
    {
        let mut exceptional = Vec::with_capacity(self.exceptional.len());
        for (i, m) in self.exceptional.iter().enumerate() {
            exceptional.push(f(BlockIndex::Exceptional(i), m)?);
        }
        let tail = f(BlockIndex::Tail, &self.tail)?;
        Self::new(self.block_dim, exceptional, tail)
    }

    /// Blockwise combination, padding the shorter exceptional list with its tail.
    pub fn zip_blocks(&self, other: &Self, f: impl Fn(&CMatrix, &CMatrix) -> CMatrix) -> Result<Self, CalkinError> {
        if self.block_dim != other.block_dim {
            return Err(CalkinError::BlockDimMismatch(self.block_dim, other.block_dim));
        }
        let m = self.exceptional.len().max(other.exceptional.len());
        let exceptional = (0..m).map(|i| f(self.block(i), other.block(i))).collect();
        Self::new(self.block_dim, exceptional, f(&self.tail, &other.tail))
    }

    pub fn add(&self, other: &Self) -> Result<Self, CalkinError> {
        self.zip_blocks(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, CalkinError> {
        self.zip_blocks(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Self) -> Result<Self, CalkinError> {
        self.zip_blocks(other, |a, b| a * b)
    }

    pub fn adjoint(&self) -> Self {
        let mut op = Self {
            block_dim: self.block_dim,
            exceptional: self.exceptional.iter().map(CMatrix::adjoint).collect(),
            tail: self.tail.adjoint(),
        };
        op.normalize();
        op
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let mut op = Self {
            block_dim: self.block_dim,
            exceptional: self.exceptional.iter().map(|m| m.scale(s)).collect(),
            tail: self.tail.scale(s),
        };
        op.normalize();
        op
    }

    /// Operator norm: the largest block norm.
    pub fn norm(&self) -> Result<f64, CalkinError> {
        let mut best = op_norm(&self.tail)?;
        for m in &self.exceptional {
            best = best.max(op_norm(m)?);
        }
        Ok(best)
    }

    /// Dense matrix of the first `n_blocks` blocks.
    pub fn truncate(&self, n_blocks: usize) -> CMatrix {
        let blocks: Vec<&CMatrix> = (0..n_blocks).map(|i| self.block(i)).collect();
        CMatrix::direct_sum(&blocks)
    }
}

/// Image of an operator in the quotient: its tail block.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct QuotientElement(pub CMatrix);

impl QuotientElement {
    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.rows()
    }

    pub fn norm(&self) -> Result<f64, NumError> {
        op_norm(&self.0)
    }
}

pub fn quotient(a: &BlockOperator) -> QuotientElement {
    QuotientElement(a.tail.clone())
}

/// Random operator with `m` Gaussian exceptional blocks and a Gaussian tail.
pub fn random_block_operator(d: usize, m: usize, rng: &mut impl Rng) -> BlockOperator {
    let exceptional = (0..m).map(|_| random_complex(d, d, rng)).collect();
    BlockOperator::new(d, exceptional, random_complex(d, d, rng)).expect("random blocks are well formed")
}
