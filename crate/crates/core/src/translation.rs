//! The translation equations.
//!
//! For a text `{ψ_i}`, a tablet `ψ_0` and a complex `q`, the entangled states
//! are `Ω_i = (ψ_i⊗ψ_0 + q ψ_0⊗ψ_i)/√A_i` with
//! `A_i = 1 + |q|² + 2 Re(q) |⟨ψ_i|ψ_0⟩|²`. A translation is a unitary `U`
//! with `U Ω_i = χ_i⊗ψ_i`. It exists iff the Gram matrices agree, which with
//! `w_i = ⟨ψ_i|ψ_0⟩`, `Q = 2 Re(q)/(1+|q|²)` and `B_i = 1 + Q|w_i|²` reads
//!
//! ```text
//! z_ij + Q w_i conj(w_j) = √(B_i B_j) y_ij z_ij        (i < j)
//! ```
//!
//! where `y_ij = ⟨χ_i|χ_j⟩`. Entries `y_ij` with `z_ij = 0` are left free.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::json::{self, JsonComplex, JsonMatrix};
use crate::linalg;
use crate::text::{self, embed_gram, embed_text, null_index_set, validate_text, NullIndexSet, StateEmbedding, Text, TextError};
use crate::C64;

/// Bound on the Gram-condition residual and the unitary-action residual.
pub const WITNESS_TOL: f64 = 1e-8;
/// Bound on `‖U†U − I‖_max`.
pub const UNITARITY_TOL: f64 = 1e-10;
/// Normalizers `A_i`, `B_i` must exceed this.
pub const NORMALIZER_FLOOR: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TranslateError {
    #[error("entanglement parameter {0} outside [-1, 1]")]
    QOutOfRange(f64),
    #[error("normalizer A_{index} = {value:e} is degenerate")]
    DegenerateNormalizer { index: usize, value: f64 },
    #[error("B_{index} = {value:e} is degenerate")]
    DegenerateB { index: usize, value: f64 },
    #[error("no valid output text: {0}")]
    Infeasible(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("Gram matrices of the entangled and product frames differ by {0:e}")]
    GramMismatch(f64),
    #[error("overlaps cannot be realized by a unit tablet (squared norm {0})")]
    TabletNotRealizable(f64),
    #[error(transparent)]
    Text(#[from] TextError),
}

/// `Q = 2 Re(q) / (1 + |q|²)`.
pub fn entanglement_parameter(q: C64) -> f64 {
    2.0 * q.re / (1.0 + q.norm_sqr())
}

/// The real representative `q = (1 − √(1 − Q²))/Q`, evaluated as
/// `Q/(1 + √(1 − Q²))` to avoid cancellation.
pub fn q_from_entanglement(big_q: f64) -> Result<C64, TranslateError> {
    if !(-1.0..=1.0).contains(&big_q) || big_q.is_nan() {
        return Err(TranslateError::QOutOfRange(big_q));
    }
    Ok(C64::new(big_q / (1.0 + (1.0 - big_q * big_q).sqrt()), 0.0))
}

/// The entangled states `Ω_i` in `d²` tensor coordinates.
#[derive(Clone, Debug)]
pub struct OmegaSystem {
    pub q: C64,
    pub tablet: DVector<C64>,
    pub normalizers: Vec<f64>,
    pub omegas: Vec<DVector<C64>>,
}

pub fn build_omega(emb: &StateEmbedding, tablet: &DVector<C64>, q: C64) -> Result<OmegaSystem, TranslateError> {
    if tablet.len() != emb.dim {
        return Err(TranslateError::DimensionMismatch(format!("tablet has {} coordinates, embedding {}", tablet.len(), emb.dim)));
    }
    let overlaps = emb.overlaps(tablet);
    let n = emb.vectors.ncols();
    let mut normalizers = Vec::with_capacity(n);
    let mut omegas = Vec::with_capacity(n);
    for i in 0..n {
        let a = 1.0 + q.norm_sqr() + 2.0 * q.re * overlaps[i].norm_sqr();
        if a <= NORMALIZER_FLOOR {
            return Err(TranslateError::DegenerateNormalizer { index: i, value: a });
        }
        let psi = emb.state(i);
        let omega = (linalg::kron(&psi, tablet) + linalg::kron(tablet, &psi) * q) / C64::new(a.sqrt(), 0.0);
        normalizers.push(a);
        omegas.push(omega);
    }
    Ok(OmegaSystem { q, tablet: tablet.clone(), normalizers, omegas })
}

/// `B_i = 1 + Q |w_i|²`.
pub fn b_factors(big_q: f64, overlaps: &DVector<C64>) -> Vec<f64> {
    overlaps.iter().map(|w| 1.0 + big_q * w.norm_sqr()).collect()
}

/// Output Gram entries fixed by the translation equations; entries on the
/// null index set are free (and stored as zero).
#[derive(Clone, Debug, PartialEq)]
pub struct PartialGram {
    pub fixed: DMatrix<C64>,
    pub free: NullIndexSet,
}

/// Fixed output entries from the overlaps `w_i = ⟨ψ_i|ψ_0⟩`:
/// `y_kl = (1 + Q w_k conj(w_l)/z_kl)/√(B_k B_l)`.
pub fn output_gram_from_overlaps(t: &Text, big_q: f64, overlaps: &DVector<C64>) -> Result<PartialGram, TranslateError> {
    if !(-1.0..=1.0).contains(&big_q) {
        return Err(TranslateError::QOutOfRange(big_q));
    }
    let n = t.n();
    if overlaps.len() != n {
        return Err(TranslateError::DimensionMismatch(format!("{} overlaps for {} states", overlaps.len(), n)));
    }
    let b = b_factors(big_q, overlaps);
    if let Some((index, &value)) = b.iter().enumerate().find(|(_, &v)| v <= NORMALIZER_FLOOR) {
        return Err(TranslateError::DegenerateB { index, value });
    }
    let free = null_index_set(t);
    let mut fixed = DMatrix::<C64>::identity(n, n);
    for k in 0..n {
        for l in 0..n {
            if k == l || free.contains(k, l) {
                continue;
            }
            let ratio = overlaps[k] * overlaps[l].conj() / t.z(k, l);
            fixed[(k, l)] = (C64::new(1.0, 0.0) + ratio * big_q) / (b[k] * b[l]).sqrt();
        }
    }
    Ok(PartialGram { fixed, free })
}

pub fn output_gram(t: &Text, big_q: f64, tablet: &DVector<C64>, emb: &StateEmbedding) -> Result<PartialGram, TranslateError> {
    if tablet.len() != emb.dim || emb.vectors.ncols() != t.n() {
        return Err(TranslateError::DimensionMismatch("tablet, embedding and text disagree".into()));
    }
    output_gram_from_overlaps(t, big_q, &emb.overlaps(tablet))
}

/// Fills the free entries of a partial output Gram matrix. Zeros are tried
/// first; if that is not a valid text, alternating projections between the
/// PSD cone and the affine set of matrices agreeing with the fixed entries
/// search for a completion (at most 500 rounds).
pub fn complete_output_gram(partial: &PartialGram) -> Result<Text, TranslateError> {
    let n = partial.fixed.nrows();
    for k in 0..n {
        for l in k + 1..n {
            if partial.free.contains(k, l) {
                continue;
            }
            let m = partial.fixed[(k, l)].norm();
            if m >= 1.0 - text::ENTRY_TOL {
                return Err(TranslateError::Infeasible(format!("fixed entry y_{k}{l} has modulus {m}")));
            }
        }
    }
    if let Ok(t) = validate_text(&partial.fixed) {
        return Ok(t);
    }
    if partial.free.is_empty() {
        let err = validate_text(&partial.fixed).unwrap_err();
        return Err(TranslateError::Infeasible(err.to_string()));
    }
    let margin = 1e-6;
    let mut y = partial.fixed.clone();
    for _ in 0..500 {
        let eig = linalg::hermitian_eigen(&y);
        let clipped = DVector::from_iterator(n, eig.values.iter().map(|&l| C64::new(l.max(margin), 0.0)));
        y = &eig.vectors * DMatrix::from_diagonal(&clipped) * eig.vectors.adjoint();
        for k in 0..n {
            for l in 0..n {
                if k == l || !partial.free.contains(k, l) {
                    y[(k, l)] = partial.fixed[(k, l)];
                }
            }
        }
        if let Ok(t) = validate_text(&y) {
            return Ok(t);
        }
    }
    Err(TranslateError::Infeasible("no positive semi-definite completion found".into()))
}

/// Residual diagnostics stored with a witness.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    pub eq4: f64,
    pub eq2: Option<f64>,
}

/// A concrete translation: entanglement parameter, tablet coordinates in the
/// padded embedding of the input text, output Gram matrix and (optionally)
/// the unitary on the `d²`-dimensional composite space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WitnessFile", into = "WitnessFile")]
pub struct TranslationWitness {
    pub big_q: f64,
    pub q: C64,
    pub tablet: DVector<C64>,
    pub output_gram: DMatrix<C64>,
    pub unitary: Option<DMatrix<C64>>,
    pub residuals: Residuals,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WitnessFile {
    #[serde(rename = "Q")]
    pub big_q: f64,
    pub q: JsonComplex,
    pub tablet: Vec<JsonComplex>,
    pub embedding_dim: usize,
    pub output_gram: JsonMatrix,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unitary: Option<JsonMatrix>,
    pub residuals: Residuals,
}

impl TryFrom<WitnessFile> for TranslationWitness {
    type Error = TranslateError;

    fn try_from(f: WitnessFile) -> Result<Self, Self::Error> {
        if f.tablet.len() != f.embedding_dim {
            return Err(TranslateError::DimensionMismatch(format!("embedding_dim {} but {} tablet coordinates", f.embedding_dim, f.tablet.len())));
        }
        let output_gram = json::matrix_from_json(&f.output_gram).map_err(TextError::from)?;
        let unitary = f.unitary.as_ref().map(json::matrix_from_json).transpose().map_err(TextError::from)?;
        Ok(TranslationWitness {
            big_q: f.big_q,
            q: json::complex_from_json(f.q),
            tablet: json::vector_from_json(&f.tablet),
            output_gram,
            unitary,
            residuals: f.residuals,
        })
    }
}

impl From<TranslationWitness> for WitnessFile {
    fn from(w: TranslationWitness) -> Self {
        WitnessFile {
            big_q: w.big_q,
            q: json::complex_to_json(w.q),
            embedding_dim: w.tablet.len(),
            tablet: json::vector_to_json(&w.tablet),
            output_gram: json::matrix_to_json(&w.output_gram),
            unitary: w.unitary.as_ref().map(json::matrix_to_json),
            residuals: w.residuals,
        }
    }
}

/// Tablet coordinates in `emb` with prescribed overlaps `⟨ψ_i|ψ_0⟩ = w_i`.
/// The component in the dialect is fixed by `w`; the remaining norm goes to
/// the padding direction, which must be present unless the dialect part is
/// already a unit vector.
pub fn tablet_from_overlaps(emb: &StateEmbedding, overlaps: &DVector<C64>) -> Result<DVector<C64>, TranslateError> {
    let rank = emb.rank();
    let e_r = emb.vectors.rows(0, rank).into_owned();
    let lambda = &e_r * e_r.adjoint();
    let rhs = &e_r * overlaps;
    let x = linalg::solve_hpd(&lambda, &rhs).ok_or_else(|| TranslateError::DimensionMismatch("degenerate embedding".into()))?;
    let realized = e_r.adjoint() * &x;
    let miss = (realized - overlaps).camax();
    if miss > 1e-9 {
        return Err(TranslateError::DimensionMismatch(format!("overlaps outside the range of the Gram matrix (miss {miss:e})")));
    }
    let sq = x.norm_squared();
    let mut tablet = DVector::<C64>::zeros(emb.dim);
    tablet.rows_mut(0, rank).copy_from(&x);
    if sq <= 1.0 {
        if emb.padded {
            tablet[emb.dim - 1] = C64::new((1.0 - sq).sqrt(), 0.0);
        } else if sq < 1.0 - 1e-10 {
            return Err(TranslateError::TabletNotRealizable(sq));
        }
    } else if sq <= 1.0 + 1e-10 {
        tablet /= C64::new(sq.sqrt(), 0.0);
    } else {
        return Err(TranslateError::TabletNotRealizable(sq));
    }
    Ok(tablet)
}

impl TranslationWitness {
    /// Assembles a witness from overlaps and an output Gram matrix, placing
    /// the tablet in the padded embedding of `t`. Residuals are filled in.
    pub fn from_overlaps(t: &Text, big_q: f64, overlaps: &DVector<C64>, output_gram: DMatrix<C64>) -> Result<Self, TranslateError> {
        let emb = embed_text(t, true);
        let tablet = tablet_from_overlaps(&emb, overlaps)?;
        let mut w = TranslationWitness {
            big_q,
            q: q_from_entanglement(big_q)?,
            tablet,
            output_gram,
            unitary: None,
            residuals: Residuals::default(),
        };
        w.residuals.eq4 = eq4_residual(t, &w, &emb);
        Ok(w)
    }

    /// Overlaps `⟨ψ_i|ψ_0⟩` of the tablet with the text's states.
    pub fn overlaps(&self, t: &Text) -> DVector<C64> {
        embed_text(t, true).overlaps(&self.tablet)
    }

    /// Attaches a synthesized unitary and records its residual.
    pub fn with_unitary(mut self, t: &Text) -> Result<Self, TranslateError> {
        let u = synthesize_unitary(t, &self)?;
        self.unitary = Some(u);
        let report = check_witness(t, &self)?;
        self.residuals = Residuals { eq4: report.eq4, eq2: report.eq2 };
        Ok(self)
    }
}

fn eq4_residual(t: &Text, w: &TranslationWitness, emb: &StateEmbedding) -> f64 {
    let overlaps = emb.overlaps(&w.tablet);
    let b = b_factors(w.big_q, &overlaps);
    let n = t.n();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let lhs = t.z(i, j) + overlaps[i] * overlaps[j].conj() * w.big_q;
            let rhs = w.output_gram[(i, j)] * t.z(i, j) * (b[i] * b[j]).sqrt();
            worst = worst.max((lhs - rhs).norm());
        }
    }
    worst
}

/// Verification report for a witness against a text.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    /// Largest violation of the Gram condition over all pairs.
    pub eq4: f64,
    /// Why the output Gram matrix is not a valid text, if it is not.
    pub output_error: Option<String>,
    /// `max_i ‖U Ω_i − χ_i⊗ψ_i‖` when a unitary is present.
    pub eq2: Option<f64>,
    /// `‖U†U − I‖_max` when a unitary is present.
    pub unitarity: Option<f64>,
    pub tablet_norm_error: f64,
    pub q_consistency: f64,
    pub b: Vec<f64>,
    pub pass: bool,
}

pub fn check_witness(t: &Text, w: &TranslationWitness) -> Result<CheckReport, TranslateError> {
    let n = t.n();
    let emb = embed_text(t, true);
    if w.tablet.len() != emb.dim {
        return Err(TranslateError::DimensionMismatch(format!("tablet has {} coordinates, expected {}", w.tablet.len(), emb.dim)));
    }
    if w.output_gram.shape() != (n, n) {
        return Err(TranslateError::DimensionMismatch(format!("output Gram is {:?}, text has {n} states", w.output_gram.shape())));
    }
    if let Some(u) = &w.unitary {
        let dd = emb.dim * emb.dim;
        if u.shape() != (dd, dd) {
            return Err(TranslateError::DimensionMismatch(format!("unitary is {:?}, expected {dd}x{dd}", u.shape())));
        }
    }
    let eq4 = eq4_residual(t, w, &emb);
    let output = validate_text(&w.output_gram);
    let output_error = output.as_ref().err().map(ToString::to_string);
    let tablet_norm_error = (w.tablet.norm() - 1.0).abs();
    let q_consistency = (entanglement_parameter(w.q) - w.big_q).abs();
    let b = b_factors(w.big_q, &emb.overlaps(&w.tablet));

    let (eq2, unitarity) = match (&w.unitary, &output) {
        (Some(u), Ok(out)) => {
            let dd = u.nrows();
            let unitarity = linalg::max_abs_diff(&(u.adjoint() * u), &DMatrix::identity(dd, dd));
            let eq2 = match (build_omega(&emb, &w.tablet, w.q), product_frame(out, &emb)) {
                (Ok(sys), Some(targets)) => sys.omegas.iter().zip(&targets).map(|(o, p)| (u * o - p).norm()).fold(0.0, f64::max),
                _ => f64::INFINITY,
            };
            (Some(eq2), Some(unitarity))
        }
        (Some(_), Err(_)) => (Some(f64::INFINITY), None),
        (None, _) => (None, None),
    };
    let pass = eq4 <= WITNESS_TOL
        && output_error.is_none()
        && tablet_norm_error <= text::EMBED_TOL
        && q_consistency <= 1e-12
        && w.big_q.abs() <= 1.0
        && eq2.is_none_or(|r| r <= WITNESS_TOL)
        && unitarity.is_none_or(|r| r <= UNITARITY_TOL);
    Ok(CheckReport { eq4, output_error, eq2, unitarity, tablet_norm_error, q_consistency, b, pass })
}

/// `χ_i⊗ψ_i` with `χ` from the deterministic embedding of the output text,
/// zero-padded to the language dimension. `None` if the output text does not
/// fit in the language.
fn product_frame(output: &Text, emb: &StateEmbedding) -> Option<Vec<DVector<C64>>> {
    let out = embed_gram(output.gram(), false);
    if out.dim > emb.dim {
        return None;
    }
    let n = output.n();
    Some(
        (0..n)
            .map(|i| {
                let mut chi = DVector::<C64>::zeros(emb.dim);
                chi.rows_mut(0, out.dim).copy_from(&out.state(i));
                linalg::kron(&chi, &emb.state(i))
            })
            .collect(),
    )
}

/// Builds a unitary with `U Ω_i = χ_i⊗ψ_i`: both frames are orthonormalized
/// through the shared Gram matrix, the map between the resulting bases is
/// extended by an arbitrary unitary on the orthogonal complement, and the
/// result is polished to the nearest unitary.
pub fn synthesize_unitary(t: &Text, w: &TranslationWitness) -> Result<DMatrix<C64>, TranslateError> {
    let emb = embed_text(t, true);
    let output = validate_text(&w.output_gram)?;
    let sys = build_omega(&emb, &w.tablet, w.q)?;
    let targets = product_frame(&output, &emb).ok_or_else(|| TranslateError::DimensionMismatch("output text does not fit in the language".into()))?;
    let f1 = DMatrix::from_columns(&sys.omegas);
    let f2 = DMatrix::from_columns(&targets);
    let g1 = f1.adjoint() * &f1;
    let g2 = f2.adjoint() * &f2;
    let mismatch = linalg::max_abs_diff(&g1, &g2);
    if mismatch > WITNESS_TOL {
        return Err(TranslateError::GramMismatch(mismatch));
    }
    let eig = linalg::hermitian_eigen(&g1);
    let scale = eig.values.first().copied().unwrap_or(1.0).max(1.0);
    let keep: Vec<usize> = (0..eig.values.len()).filter(|&k| eig.values[k] > 1e-12 * scale).collect();
    let inv_sqrt = |k: usize| C64::new(1.0 / eig.values[k].sqrt(), 0.0);
    let cols1: Vec<DVector<C64>> = keep.iter().map(|&k| &f1 * eig.vectors.column(k) * inv_sqrt(k)).collect();
    let cols2: Vec<DVector<C64>> = keep.iter().map(|&k| &f2 * eig.vectors.column(k) * inv_sqrt(k)).collect();
    let basis1 = linalg::complete_orthonormal_basis(&orthonormalize(&cols1));
    let basis2 = linalg::complete_orthonormal_basis(&orthonormalize(&cols2));
    let u = basis2 * basis1.adjoint();
    Ok(linalg::nearest_unitary(&u))
}

/// Löwdin orthonormalization of nearly orthonormal columns.
fn orthonormalize(cols: &[DVector<C64>]) -> DMatrix<C64> {
    let m = DMatrix::from_columns(cols);
    if cols.is_empty() {
        return m;
    }
    let s = m.adjoint() * &m;
    let eig = linalg::hermitian_eigen(&s);
    let d = DVector::from_iterator(eig.values.len(), eig.values.iter().map(|&l| C64::new(1.0 / l.sqrt(), 0.0)));
    m * (&eig.vectors * DMatrix::from_diagonal(&d) * eig.vectors.adjoint())
}

/// Restricts a witness to the subtext on `indices`: same `Q`, the
/// corresponding overlaps and output entries. The tablet is re-placed in the
/// subtext's own padded embedding.
pub fn restrict_witness(t: &Text, w: &TranslationWitness, indices: &[usize]) -> Result<(Text, TranslationWitness), TranslateError> {
    let sub = t.subtext(indices);
    let overlaps = w.overlaps(t);
    let sub_overlaps = DVector::from_iterator(indices.len(), indices.iter().map(|&i| overlaps[i]));
    let k = indices.len();
    let sub_gram = DMatrix::from_fn(k, k, |a, b| w.output_gram[(indices[a], indices[b])]);
    let witness = TranslationWitness::from_overlaps(&sub, w.big_q, &sub_overlaps, sub_gram)?;
    Ok((sub, witness))
}
