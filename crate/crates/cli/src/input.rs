//! JSON input files. Unknown fields are rejected everywhere.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use serde::Deserialize;

use arith_mm::algebra::{AlgebraElement, AlgebraEmbedding, Representation, SplitSemisimpleAlgebra};
use arith_mm::linalg::Matrix;
use arith_mm::{Error, Result};

/// An integer, a `[num, den]` pair, or a pair of decimal strings.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum RationalIn {
    Int(i64),
    Pair([i64; 2]),
    Text([String; 2]),
}

impl RationalIn {
    pub fn to_rational(&self) -> Result<BigRational> {
        let (num, den): (BigInt, BigInt) = match self {
            RationalIn::Int(v) => ((*v).into(), 1.into()),
            RationalIn::Pair([n, d]) => ((*n).into(), (*d).into()),
            RationalIn::Text([n, d]) => (
                n.parse().map_err(|_| Error::InvalidInput(format!("`{n}` is not an integer")))?,
                d.parse().map_err(|_| Error::InvalidInput(format!("`{d}` is not an integer")))?,
            ),
        };
        if den == BigInt::from(0) {
            return Err(Error::InvalidInput("zero denominator".into()));
        }
        Ok(BigRational::new(num, den))
    }
}

/// A non-negative integer given as a JSON number or a decimal string.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum BigIn {
    Int(u64),
    Text(String),
}

impl BigIn {
    pub fn to_big(&self) -> Result<BigUint> {
        match self {
            BigIn::Int(v) => Ok((*v).into()),
            BigIn::Text(s) => s
                .parse()
                .map_err(|_| Error::InvalidInput(format!("`{s}` is not a non-negative integer"))),
        }
    }
}

pub type MatrixIn = Vec<Vec<RationalIn>>;

pub fn matrix(rows: &MatrixIn) -> Result<Matrix<BigRational>> {
    let cols = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || rows.iter().any(|r| r.len() != cols) {
        return Err(Error::InvalidInput("matrix rows must be non-empty and of equal length".into()));
    }
    let rows = rows
        .iter()
        .map(|r| r.iter().map(RationalIn::to_rational).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    Ok(Matrix::from_rows(rows))
}

/// One matrix per block.
pub type ElementIn = Vec<MatrixIn>;

pub fn element(algebra: &SplitSemisimpleAlgebra, blocks: &ElementIn) -> Result<AlgebraElement> {
    let blocks = blocks.iter().map(matrix).collect::<Result<Vec<_>>>()?;
    algebra.from_blocks(&blocks)
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClosureInput {
    #[serde(rename = "N")]
    pub n: u64,
    pub g: u32,
    pub c: u32,
    pub points: Vec<Vec<u64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KeypropInput {
    #[serde(rename = "N")]
    pub n: u64,
    pub g: u32,
    pub c: u32,
    #[serde(rename = "V")]
    pub v: Vec<Vec<u64>>,
    pub a: Vec<u64>,
    /// Defaults to `N`, which every coset order divides.
    pub delta_cap: Option<BigIn>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GlInput {
    pub ell: u32,
    pub dim: usize,
    pub generators: Vec<Vec<Vec<i64>>>,
    pub a: Vec<i64>,
    /// Spanning vectors of `V`; the whole space when absent.
    #[serde(rename = "V")]
    pub v: Option<Vec<Vec<i64>>>,
    #[serde(rename = "C")]
    pub c: Option<RationalIn>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum EmbeddingIn {
    /// Image of each matrix unit of `M`, in order.
    Images(Vec<ElementIn>),
    BlockDiagonal {
        layout: Vec<Vec<usize>>,
        conjugators: Option<Vec<MatrixIn>>,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum RepresentationIn {
    /// Action matrix of each matrix unit of `N`, in order.
    Action(Vec<MatrixIn>),
    Natural {
        multiplicities: Vec<usize>,
        conjugator: Option<MatrixIn>,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LiftInput {
    #[serde(rename = "M")]
    pub m: Vec<usize>,
    #[serde(rename = "N")]
    pub n: Vec<usize>,
    pub embedding: EmbeddingIn,
    pub representation: RepresentationIn,
    pub u: ElementIn,
    pub w: ElementIn,
    pub pi: Option<ElementIn>,
}

/// The parsed algebra problem.
pub struct LiftProblem {
    pub emb: AlgebraEmbedding,
    pub rep: Representation,
    pub u: AlgebraElement,
    pub w: AlgebraElement,
    pub pi: Option<AlgebraElement>,
}

impl LiftInput {
    pub fn build(&self) -> Result<LiftProblem> {
        let m = SplitSemisimpleAlgebra::new(self.m.clone())?;
        let n = SplitSemisimpleAlgebra::new(self.n.clone())?;
        let emb = match &self.embedding {
            EmbeddingIn::Images(images) => {
                let images = images.iter().map(|x| element(&n, x)).collect::<Result<Vec<_>>>()?;
                AlgebraEmbedding::new(m.clone(), n.clone(), images)?
            }
            EmbeddingIn::BlockDiagonal { layout, conjugators } => {
                let conj = conjugators
                    .as_ref()
                    .map(|cs| cs.iter().map(matrix).collect::<Result<Vec<_>>>())
                    .transpose()?;
                let emb = AlgebraEmbedding::block_diagonal(m.clone(), layout, conj.as_deref())?;
                if emb.target != n {
                    return Err(Error::InvalidInput(format!(
                        "layout produces blocks {:?}, but N has blocks {:?}",
                        emb.target.blocks, n.blocks
                    )));
                }
                emb
            }
        };
        let rep = match &self.representation {
            RepresentationIn::Action(mats) => {
                Representation::new(n.clone(), mats.iter().map(matrix).collect::<Result<Vec<_>>>()?)?
            }
            RepresentationIn::Natural {
                multiplicities,
                conjugator,
            } => {
                let p = conjugator.as_ref().map(matrix).transpose()?;
                Representation::natural(n.clone(), multiplicities, p.as_ref())?
            }
        };
        Ok(LiftProblem {
            u: element(&n, &self.u)?,
            w: element(&m, &self.w)?,
            pi: self.pi.as_ref().map(|p| element(&n, p)).transpose()?,
            emb,
            rep,
        })
    }
}
