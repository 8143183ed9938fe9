//! Quantum texts: ordered sets of distinct unit states, represented solely by
//! their Gram matrix `z_ij = ⟨ψ_i|ψ_j⟩`.
//!
//! Working definitions used throughout the crate:
//!
//! * **classical**: every pair of distinct states is orthogonal.
//! * **fully-quantum**: no pair of distinct states is orthogonal.
//! * **efficient**: the states are linearly independent (the Gram matrix is
//!   positive definite).
//! * **uniform**: all off-diagonal inner products are equal.
//! * **equivalent**: two texts of the same length whose Gram matrices differ
//!   by a per-state phase, `y_ij = conj(d_i) z_ij d_j` with `|d_i| = 1`.
//!   Texts are ordered; permutations are not quotiented out.
//! * **dialect**: the span of the text's states inside its language.

use std::collections::{BTreeSet, VecDeque};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::json::{self, JsonMatrix};
use crate::linalg;
use crate::C64;

/// An inner product counts as zero (an orthogonality) below this modulus.
pub const ZERO_TOL: f64 = 1e-9;
/// Tolerance on Hermiticity, unit diagonal, distinctness and entry equality.
pub const ENTRY_TOL: f64 = 1e-12;
/// Tolerance for the embedding round trip.
pub const EMBED_TOL: f64 = 1e-10;

/// Eigenvalue slack for PSD decisions on an `n`-state Gram matrix.
pub fn psd_tol(n: usize) -> f64 {
    1e-9 * n as f64
}

/// Eigenvalue floor for positive-definiteness (efficiency) decisions.
pub fn pd_tol(n: usize) -> f64 {
    1e-9 * n as f64
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TextError {
    #[error("gram matrix must be square and non-empty (got {rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("gram entry ({i},{j}) is not finite")]
    NonFinite { i: usize, j: usize },
    #[error("gram matrix is not Hermitian at ({i},{j}): deviation {deviation:e}")]
    NotHermitian { i: usize, j: usize, deviation: f64 },
    #[error("diagonal entry {i} is not 1 (deviation {deviation:e})")]
    BadDiagonal { i: usize, deviation: f64 },
    #[error("gram matrix is not positive semi-definite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },
    #[error("states {i} and {j} are not distinct (|z_ij| = {modulus})")]
    DuplicateStates { i: usize, j: usize, modulus: f64 },
    #[error("declared size {declared} does not match the gram matrix ({actual})")]
    SizeField { declared: usize, actual: usize },
    #[error("malformed gram matrix: {0}")]
    Shape(#[from] json::ShapeError),
    #[error("texts have different sizes ({0} vs {1})")]
    SizeMismatch(usize, usize),
}

/// A validated quantum text.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TextFile", into = "TextFile")]
pub struct Text {
    gram: DMatrix<C64>,
}

/// On-disk form: `{"n": int, "gram": [[[re,im],...],...]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TextFile {
    pub n: usize,
    pub gram: JsonMatrix,
}

impl TryFrom<TextFile> for Text {
    type Error = TextError;

    fn try_from(file: TextFile) -> Result<Self, Self::Error> {
        let gram = json::matrix_from_json(&file.gram)?;
        if gram.nrows() != file.n {
            return Err(TextError::SizeField { declared: file.n, actual: gram.nrows() });
        }
        validate_text(&gram)
    }
}

impl From<Text> for TextFile {
    fn from(t: Text) -> Self {
        TextFile { n: t.n(), gram: json::matrix_to_json(&t.gram) }
    }
}

impl Text {
    pub fn n(&self) -> usize {
        self.gram.nrows()
    }

    pub fn gram(&self) -> &DMatrix<C64> {
        &self.gram
    }

    pub fn z(&self, i: usize, j: usize) -> C64 {
        self.gram[(i, j)]
    }

    /// The classical text with `n` orthonormal states.
    pub fn identity(n: usize) -> Text {
        Text { gram: DMatrix::identity(n, n) }
    }

    /// Uniform real text with off-diagonal inner product `z`.
    pub fn uniform(n: usize, z: f64) -> Result<Text, TextError> {
        let gram = DMatrix::from_fn(n, n, |i, j| if i == j { C64::new(1.0, 0.0) } else { C64::new(z, 0.0) });
        validate_text(&gram)
    }

    /// Gram matrix of the columns of `vectors` (each normalized first).
    pub fn from_vectors(vectors: &DMatrix<C64>) -> Result<Text, TextError> {
        let mut v = vectors.clone();
        for mut col in v.column_iter_mut() {
            let norm = col.norm();
            col /= C64::new(norm, 0.0);
        }
        validate_text(&(v.adjoint() * v))
    }

    /// The subtext on `indices`, in the given order.
    pub fn subtext(&self, indices: &[usize]) -> Text {
        let k = indices.len();
        Text { gram: DMatrix::from_fn(k, k, |a, b| self.gram[(indices[a], indices[b])]) }
    }

    pub fn is_zero(&self, i: usize, j: usize) -> bool {
        self.gram[(i, j)].norm() <= ZERO_TOL
    }

    /// Appends `extra` states orthogonal to each other and to every existing
    /// state (a direct sum with a classical text).
    pub fn with_classical_summand(&self, extra: usize) -> Text {
        let n = self.n();
        let total = n + extra;
        let gram = DMatrix::from_fn(total, total, |i, j| {
            if i < n && j < n {
                self.gram[(i, j)]
            } else if i == j {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        Text { gram }
    }
}

/// Validates a raw square matrix as the Gram matrix of a text.
///
/// Checks run in order: finiteness, Hermiticity, unit diagonal, positive
/// semi-definiteness, distinctness. The stored Gram matrix is the Hermitian
/// part of the input with an exact unit diagonal.
pub fn validate_text(raw: &DMatrix<C64>) -> Result<Text, TextError> {
    let (rows, cols) = raw.shape();
    if rows != cols || rows == 0 {
        return Err(TextError::NotSquare { rows, cols });
    }
    let n = rows;
    for i in 0..n {
        for j in 0..n {
            let z = raw[(i, j)];
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(TextError::NonFinite { i, j });
            }
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            let deviation = (raw[(i, j)] - raw[(j, i)].conj()).norm();
            if deviation > ENTRY_TOL {
                return Err(TextError::NotHermitian { i, j, deviation });
            }
        }
    }
    for i in 0..n {
        let deviation = (raw[(i, i)] - C64::new(1.0, 0.0)).norm();
        if deviation > ENTRY_TOL {
            return Err(TextError::BadDiagonal { i, deviation });
        }
    }
    let mut gram = linalg::hermitian_part(raw);
    for i in 0..n {
        gram[(i, i)] = C64::new(1.0, 0.0);
    }
    let min_eigenvalue = linalg::min_eigenvalue(&gram);
    if min_eigenvalue < -psd_tol(n) {
        return Err(TextError::NotPsd { min_eigenvalue });
    }
    for i in 0..n {
        for j in i + 1..n {
            let modulus = gram[(i, j)].norm();
            if modulus >= 1.0 - ENTRY_TOL {
                return Err(TextError::DuplicateStates { i, j, modulus });
            }
        }
    }
    Ok(Text { gram })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextProperties {
    pub classical: bool,
    pub fully_quantum: bool,
    pub efficient: bool,
    pub uniform: bool,
    pub real_text: bool,
}

pub fn text_properties(t: &Text) -> TextProperties {
    let n = t.n();
    let off_diag: Vec<C64> = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| t.z(i, j)).collect();
    let classical = off_diag.iter().all(|z| z.norm() <= ZERO_TOL);
    let fully_quantum = off_diag.iter().all(|z| z.norm() > ZERO_TOL);
    let efficient = linalg::min_eigenvalue(t.gram()) > pd_tol(n);
    let uniform = off_diag.windows(2).all(|w| (w[0] - w[1]).norm() <= ENTRY_TOL)
        && (0..n).all(|i| (i + 1..n).all(|j| (t.z(i, j) - off_diag[0]).norm() <= ENTRY_TOL));
    let real_text = t.gram().iter().all(|z| z.im.abs() <= ENTRY_TOL);
    TextProperties { classical, fully_quantum, efficient, uniform, real_text }
}

/// The pairs `(i, j)`, `i < j`, of orthogonal states.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NullIndexSet {
    pub pairs: BTreeSet<(usize, usize)>,
}

impl NullIndexSet {
    pub fn contains(&self, i: usize, j: usize) -> bool {
        i != j && self.pairs.contains(&(i.min(j), i.max(j)))
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

pub fn null_index_set(t: &Text) -> NullIndexSet {
    let n = t.n();
    let pairs = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .filter(|&(i, j)| t.is_zero(i, j))
        .collect();
    NullIndexSet { pairs }
}

/// Coordinates realizing a text as unit vectors: column `k` of `vectors` is
/// `|ψ_k⟩`. When `padded`, the last coordinate is an extra direction
/// orthogonal to every state.
#[derive(Clone, Debug, PartialEq)]
pub struct StateEmbedding {
    pub dim: usize,
    pub vectors: DMatrix<C64>,
    pub padded: bool,
}

impl StateEmbedding {
    pub fn state(&self, k: usize) -> DVector<C64> {
        self.vectors.column(k).into_owned()
    }

    /// Overlaps `⟨ψ_i|v⟩` of every state with a coordinate vector.
    pub fn overlaps(&self, v: &DVector<C64>) -> DVector<C64> {
        self.vectors.adjoint() * v
    }

    /// Rank of the text (dimension of its dialect).
    pub fn rank(&self) -> usize {
        self.dim - usize::from(self.padded)
    }
}

/// Embeds a text via the eigendecomposition `Z = V Λ V†`, taking the rows of
/// `Λ^{1/2} V†` for the numerically non-zero eigenvalues. Deterministic.
pub fn embed_gram(gram: &DMatrix<C64>, pad_extra_dim: bool) -> StateEmbedding {
    let n = gram.nrows();
    let eig = linalg::hermitian_eigen(gram);
    let scale = eig.values.first().copied().unwrap_or(1.0).max(1.0);
    let rank = eig.values.iter().filter(|&&l| l > 1e-12 * scale).count();
    let dim = rank + usize::from(pad_extra_dim);
    let mut vectors = DMatrix::<C64>::zeros(dim, n);
    for k in 0..rank {
        let s = eig.values[k].sqrt();
        for i in 0..n {
            vectors[(k, i)] = eig.vectors[(i, k)].conj() * s;
        }
    }
    StateEmbedding { dim, vectors, padded: pad_extra_dim }
}

pub fn embed_text(t: &Text, pad_extra_dim: bool) -> StateEmbedding {
    embed_gram(t.gram(), pad_extra_dim)
}

/// Decides whether `b` is `a` up to per-state phases.
pub fn texts_equivalent(a: &Text, b: &Text) -> Result<bool, TextError> {
    const TOL: f64 = 1e-9;
    let n = a.n();
    if b.n() != n {
        return Err(TextError::SizeMismatch(n, b.n()));
    }
    for i in 0..n {
        for j in 0..n {
            if (a.z(i, j).norm() - b.z(i, j).norm()).abs() > TOL {
                return Ok(false);
            }
        }
    }
    // propagate phases along a spanning forest of the non-null pattern
    let mut phase: Vec<Option<C64>> = vec![None; n];
    for root in 0..n {
        if phase[root].is_some() {
            continue;
        }
        phase[root] = Some(C64::new(1.0, 0.0));
        let mut queue = VecDeque::from([root]);
        while let Some(i) = queue.pop_front() {
            let di = phase[i].expect("visited vertex has a phase");
            for j in 0..n {
                if j == i || phase[j].is_some() || a.is_zero(i, j) {
                    continue;
                }
                let dj = di * b.z(i, j) / a.z(i, j);
                phase[j] = Some(dj / dj.norm());
                queue.push_back(j);
            }
        }
    }
    let d: Vec<C64> = phase.into_iter().map(|p| p.expect("every vertex reached")).collect();
    for i in 0..n {
        for j in 0..n {
            if (d[i].conj() * a.z(i, j) * d[j] - b.z(i, j)).norm() > TOL {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
