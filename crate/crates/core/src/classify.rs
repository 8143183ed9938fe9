//! Translatability decisions.
//!
//! The procedure:
//!
//! 1. translatable texts are efficient;
//! 2. classical texts are translatable (by cloning);
//! 3. the orthogonality graph of a translatable text is well-split;
//! 4. isolated states form a classical direct summand and can be set aside;
//! 5. a fully-quantum remainder is translatable iff the non-zero eigenvalues of
//!    its Hadamard inverse `M_ij = 1/z_ij` share one sign `ε` except for a
//!    single simple eigenvalue, and then `sign(Q) = ε`;
//! 6. a connected remainder that is not fully-quantum is translatable iff its
//!    maximal fully-quantum part (the clique of the splitting) is translatable
//!    with `Q > 0`, and every translation has `Q > 0`.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{self, ForbiddenWitness, GraphClass};
use crate::linalg;
use crate::text::{text_properties, Text};
use crate::translation::{complete_output_gram, output_gram_from_overlaps};
use crate::C64;

/// Relative threshold below which an eigenvalue of `M` counts as zero.
pub const SIGNATURE_ZERO_REL: f64 = 1e-9;
/// Eigenvalues between the zero threshold and this relative bound are too
/// close to call and abort the decision.
pub const SIGNATURE_BORDERLINE_REL: f64 = 1e-7;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClassifyError {
    #[error("states {0} and {1} are orthogonal; the Hadamard inverse is undefined")]
    HasOrthogonalPair(usize, usize),
    #[error("eigenvalue {eigenvalue:e} of the Hadamard inverse is within the threshold band (scale {scale:e})")]
    BorderlineSignature { eigenvalue: f64, scale: f64 },
}

/// Inertia of the Hadamard inverse `M` of a fully-quantum text.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenSignature {
    pub n_pos: usize,
    pub n_neg: usize,
    pub n_zero: usize,
    /// Values of `ε` (`+1`/`-1`) for which the sign pattern is admissible.
    pub admissible_signs: Vec<i8>,
    pub det_nonzero: bool,
    pub eigenvalues: Vec<f64>,
}

impl EigenSignature {
    pub fn from_counts(n_pos: usize, n_neg: usize, n_zero: usize) -> Self {
        let mut admissible_signs = Vec::new();
        if n_pos == 1 && n_neg >= 1 {
            admissible_signs.push(-1);
        }
        if n_neg == 1 && n_pos >= 1 {
            admissible_signs.push(1);
        }
        EigenSignature { n_pos, n_neg, n_zero, admissible_signs, det_nonzero: n_zero == 0, eigenvalues: Vec::new() }
    }

    pub fn counts(&self) -> (usize, usize, usize) {
        (self.n_pos, self.n_neg, self.n_zero)
    }

    pub fn admits(&self, sign: i8) -> bool {
        self.admissible_signs.contains(&sign)
    }
}

/// `M_ij = 1/z_ij` (unit diagonal).
pub fn hadamard_inverse(t: &Text) -> Result<DMatrix<C64>, ClassifyError> {
    let n = t.n();
    for i in 0..n {
        for j in i + 1..n {
            if t.is_zero(i, j) {
                return Err(ClassifyError::HasOrthogonalPair(i, j));
            }
        }
    }
    Ok(DMatrix::from_fn(n, n, |i, j| C64::new(1.0, 0.0) / t.z(i, j)))
}

pub fn hadamard_inverse_signature(t: &Text) -> Result<EigenSignature, ClassifyError> {
    let m = hadamard_inverse(t)?;
    let values = linalg::eigenvalues(&m);
    let scale = values.iter().fold(0.0_f64, |acc, l| acc.max(l.abs()));
    let zero = SIGNATURE_ZERO_REL * scale;
    let borderline = SIGNATURE_BORDERLINE_REL * scale;
    if let Some(&eigenvalue) = values.iter().find(|l| l.abs() > zero && l.abs() <= borderline) {
        return Err(ClassifyError::BorderlineSignature { eigenvalue, scale });
    }
    let n_pos = values.iter().filter(|&&l| l > zero).count();
    let n_neg = values.iter().filter(|&&l| l < -zero).count();
    let mut sig = EigenSignature::from_counts(n_pos, n_neg, values.len() - n_pos - n_neg);
    sig.eigenvalues = values;
    Ok(sig)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TheoremF {
    pub translatable: bool,
    pub admissible_signs: Vec<i8>,
    /// Whether some translation has an efficient output text (`det M ≠ 0`).
    pub efficient_output_possible: bool,
}

pub fn theorem_f_decide(sig: &EigenSignature) -> TheoremF {
    TheoremF {
        translatable: !sig.admissible_signs.is_empty(),
        admissible_signs: sig.admissible_signs.clone(),
        efficient_output_possible: sig.det_nonzero,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Reason {
    OkClassical,
    OkFullyQuantum,
    OkMixed,
    NotEfficient,
    NotWellSplit,
    TheoremFFail,
    TheoremIFail,
    /// Rejected under the `Q = 0` restriction: not classical.
    NotClassicalQ0,
}

impl Reason {
    pub fn is_ok(self) -> bool {
        matches!(self, Reason::OkClassical | Reason::OkFullyQuantum | Reason::OkMixed)
    }
}

/// Split of a text into a classical part and a maximal fully-quantum part.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decomposition {
    pub classical_part: Vec<usize>,
    pub quantum_part: Vec<usize>,
    /// Unique fully-quantum neighbour of each classical state, if any.
    pub attachment: BTreeMap<usize, Option<usize>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub translatable: bool,
    pub reason: Reason,
    pub signature: Option<EigenSignature>,
    pub decomposition: Option<Decomposition>,
    /// Signs of `Q` a translation may have; empty when unconstrained.
    pub sign_constraint: Vec<i8>,
    pub forbidden_witness: Option<ForbiddenWitness>,
}

impl Decision {
    fn new(reason: Reason) -> Self {
        Decision {
            translatable: reason.is_ok(),
            reason,
            signature: None,
            decomposition: None,
            sign_constraint: Vec::new(),
            forbidden_witness: None,
        }
    }
}

pub fn decide_translatable(t: &Text) -> Result<Decision, ClassifyError> {
    let props = text_properties(t);
    if !props.efficient {
        return Ok(Decision::new(Reason::NotEfficient));
    }
    let g = graph::graph_of_text(t);
    let rec = graph::recognize(&g);
    if rec.class == GraphClass::Independent {
        let mut d = Decision::new(Reason::OkClassical);
        d.decomposition = Some(Decomposition {
            classical_part: (0..t.n()).collect(),
            quantum_part: Vec::new(),
            attachment: (0..t.n()).map(|i| (i, None)).collect(),
        });
        return Ok(d);
    }
    if !rec.is_well_split() {
        let mut d = Decision::new(Reason::NotWellSplit);
        d.forbidden_witness = rec.witness;
        return Ok(d);
    }

    let (remainder, isolated) = split_off_isolated(&g);
    let sub = t.subtext(&remainder);
    let sub_graph = graph::graph_of_text(&sub);
    if text_properties(&sub).fully_quantum {
        let sig = hadamard_inverse_signature(&sub)?;
        let f = theorem_f_decide(&sig);
        let mut d = Decision::new(if f.translatable { Reason::OkFullyQuantum } else { Reason::TheoremFFail });
        d.sign_constraint = f.admissible_signs;
        d.signature = Some(sig);
        d.decomposition = Some(Decomposition {
            attachment: isolated.iter().map(|&i| (i, None)).collect(),
            classical_part: isolated,
            quantum_part: remainder,
        });
        return Ok(d);
    }

    let splitting = graph::recognize(&sub_graph).splitting.expect("well-split graphs carry a splitting");
    let quantum_part: Vec<usize> = splitting.v2.iter().map(|&k| remainder[k]).collect();
    let mut attachment: BTreeMap<usize, Option<usize>> = isolated.iter().map(|&i| (i, None)).collect();
    for &k in &splitting.v1 {
        let anchor = sub_graph.neighbors(k).next().map(|a| remainder[a]);
        attachment.insert(remainder[k], anchor);
    }
    let mut classical_part: Vec<usize> = attachment.keys().copied().collect();
    classical_part.sort_unstable();

    let sig = hadamard_inverse_signature(&t.subtext(&quantum_part))?;
    let ok = sig.admits(1);
    let mut d = Decision::new(if ok { Reason::OkMixed } else { Reason::TheoremIFail });
    d.sign_constraint = vec![1];
    d.signature = Some(sig);
    d.decomposition = Some(Decomposition { classical_part, quantum_part, attachment });
    Ok(d)
}

/// Indices of the one non-trivial component and of the isolated vertices of
/// a non-independent split graph.
pub(crate) fn split_off_isolated(g: &graph::SimpleGraph) -> (Vec<usize>, Vec<usize>) {
    let mut remainder = Vec::new();
    let mut isolated = Vec::new();
    for comp in graph::connected_components(g) {
        if comp.len() == 1 {
            isolated.push(comp[0]);
        } else {
            debug_assert!(remainder.is_empty(), "split graph with two non-trivial components");
            remainder = comp;
        }
    }
    (remainder, isolated)
}

/// Decision restricted to `Q = 0`: the output entries on non-orthogonal
/// pairs are forced to 1, so only classical texts pass.
pub fn decide_translatable_q0(t: &Text) -> Decision {
    let zeros = DVector::<C64>::zeros(t.n());
    let feasible = output_gram_from_overlaps(t, 0.0, &zeros).ok().map(|p| complete_output_gram(&p).is_ok()).unwrap_or(false);
    let mut d = Decision::new(if feasible { Reason::OkClassical } else { Reason::NotClassicalQ0 });
    if feasible {
        d.sign_constraint = vec![0];
    }
    d
}
