//! Random text generators and a brute-force feasibility oracle.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::hadamard_inverse_signature;
use crate::graph::SimpleGraph;
use crate::linalg;
use crate::synth::{Solution, MODULUS_CAP};
use crate::text::{embed_text, null_index_set, validate_text, Text};
use crate::translation::{check_witness, output_gram_from_overlaps, TranslationWitness};
use crate::C64;

/// Rejection-sampling limit for [`GenMode::Untranslatable4`].
pub const MAX_REJECTION_TRIES: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GenMode {
    RandomEfficient,
    FromGraph,
    Uniform,
    Untranslatable4,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenSpec {
    pub mode: GenMode,
    #[serde(default)]
    pub n: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph: Option<SimpleGraph>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenError {
    #[error("infeasible generator spec: {0}")]
    InfeasibleSpec(String),
}

pub fn gen_text(spec: &GenSpec) -> Result<Text, GenError> {
    let infeasible = |msg: String| GenError::InfeasibleSpec(msg);
    match spec.mode {
        GenMode::RandomEfficient => {
            if spec.n == 0 {
                return Err(infeasible("n must be positive".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            Ok(dominant_text(&SimpleGraph::complete(spec.n), &mut rng))
        }
        GenMode::FromGraph => {
            let g = spec.graph.as_ref().ok_or_else(|| infeasible("from_graph needs a graph".into()))?;
            if g.n() == 0 {
                return Err(infeasible("graph has no vertices".into()));
            }
            if spec.n != 0 && spec.n != g.n() {
                return Err(infeasible(format!("n = {} but the graph has {} vertices", spec.n, g.n())));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            Ok(dominant_text(g, &mut rng))
        }
        GenMode::Uniform => {
            let z = spec.z.ok_or_else(|| infeasible("uniform needs z".into()))?;
            let n = spec.n;
            if n < 2 {
                return Err(infeasible("uniform texts need n ≥ 2".into()));
            }
            let lower = -1.0 / (n as f64 - 1.0);
            if !(z > lower && z < 1.0) || z == 0.0 {
                return Err(infeasible(format!("z = {z} outside ({lower}, 1) \\ {{0}}")));
            }
            Text::uniform(n, z).map_err(|e| infeasible(e.to_string()))
        }
        GenMode::Untranslatable4 => {
            if spec.n != 0 && spec.n != 4 {
                return Err(infeasible("untranslatable4 produces 4-texts".into()));
            }
            gen_untranslatable4(spec.seed).map(|(t, _)| t)
        }
    }
}

/// Hermitian matrix with unit diagonal, random off-diagonal entries on the
/// edges of `g` (moduli in `[0.2, 1]`, uniform phases), scaled so that every
/// row's off-diagonal sum is at most 0.9. Strictly diagonally dominant,
/// hence an efficient text with orthogonality graph `g`.
fn dominant_text(g: &SimpleGraph, rng: &mut ChaCha8Rng) -> Text {
    let n = g.n();
    let mut gram = DMatrix::<C64>::identity(n, n);
    for (i, j) in g.edges() {
        let z = C64::from_polar(rng.gen_range(0.2..=1.0), rng.gen_range(0.0..std::f64::consts::TAU));
        gram[(i, j)] = z;
        gram[(j, i)] = z.conj();
    }
    let row_max = (0..n)
        .map(|i| (0..n).filter(|&j| j != i).map(|j| gram[(i, j)].norm()).sum::<f64>())
        .fold(0.0_f64, f64::max);
    if row_max > 0.0 {
        let s = 0.9 / row_max;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    gram[(i, j)] *= s;
                }
            }
        }
    }
    validate_text(&gram).expect("diagonally dominant Hermitian matrices are valid texts")
}

/// Random fully-quantum efficient 4-texts until one has Hadamard-inverse
/// signature (2, 2, 0). Returns the text and the number of draws.
pub fn gen_untranslatable4(seed: u64) -> Result<(Text, usize), GenError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k4 = SimpleGraph::complete(4);
    for attempt in 1..=MAX_REJECTION_TRIES {
        let t = dominant_text(&k4, &mut rng);
        if let Ok(sig) = hadamard_inverse_signature(&t) {
            if sig.counts() == (2, 2, 0) {
                return Ok((t, attempt));
            }
        }
    }
    Err(GenError::InfeasibleSpec(format!("no (2,2,0) text in {MAX_REJECTION_TRIES} draws")))
}

#[derive(Clone, Debug)]
pub struct OracleParams {
    pub samples: usize,
    pub seed: u64,
    /// Keep sampling after the first hit and record every accepted `Q`.
    pub exhaustive: bool,
}

impl Default for OracleParams {
    fn default() -> Self {
        OracleParams { samples: 100_000, seed: 0, exhaustive: false }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OracleReport {
    pub found: bool,
    pub best_penalty: f64,
    pub samples: usize,
    pub seed: u64,
    #[serde(skip)]
    pub witness: Option<TranslationWitness>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub accepted_q: Vec<f64>,
}

/// Brute-force search for a translation by random sampling of `Q`, the
/// tablet and the free output entries, independent of the decision
/// procedure. Sample 0 is `Q = 0` with the tablet orthogonal to the text.
/// A sample is accepted when the completed output is a valid text with all
/// off-diagonal moduli at most [`MODULUS_CAP`] and the assembled witness
/// passes verification.
pub fn oracle_feasible(t: &Text, params: &OracleParams) -> OracleReport {
    let n = t.n();
    let emb = embed_text(t, true);
    let rank = emb.rank();
    let pad = emb.dim - 1;
    let free: Vec<(usize, usize)> = null_index_set(t).pairs.iter().copied().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut report = OracleReport { found: false, best_penalty: f64::INFINITY, samples: 0, seed: params.seed, witness: None, accepted_q: Vec::new() };

    for sample in 0..params.samples {
        report.samples = sample + 1;
        let (big_q, tablet) = if sample == 0 {
            let mut tablet = DVector::<C64>::zeros(emb.dim);
            tablet[pad] = C64::new(1.0, 0.0);
            (0.0, tablet)
        } else {
            let big_q = if rng.gen::<bool>() {
                rng.gen_range(-1.0..=1.0)
            } else {
                let s = if rng.gen::<bool>() { 1.0 } else { -1.0 };
                s * 10f64.powf(-rng.gen_range(0.0..3.0))
            };
            let mut u = DVector::from_fn(rank, |_, _| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
            let norm = u.norm();
            u /= C64::new(norm, 0.0);
            let r = if rng.gen::<bool>() { rng.gen_range(0.0..=1.0) } else { 10f64.powf(-rng.gen_range(0.0..3.0)) };
            let mut tablet = DVector::<C64>::zeros(emb.dim);
            tablet.rows_mut(0, rank).copy_from(&(u * C64::new(r, 0.0)));
            tablet[pad] = C64::new((1.0 - r * r).max(0.0).sqrt(), 0.0);
            (big_q, tablet)
        };
        let overlaps = emb.overlaps(&tablet);
        let Ok(partial) = output_gram_from_overlaps(t, big_q, &overlaps) else {
            continue;
        };
        let mut y = partial.fixed;
        if sample % 2 == 1 {
            for &(k, l) in &free {
                let z = C64::from_polar(rng.gen_range(0.0_f64..1.0).sqrt(), rng.gen_range(0.0..std::f64::consts::TAU));
                y[(k, l)] = z;
                y[(l, k)] = z.conj();
            }
        }
        let lmin = linalg::min_eigenvalue(&y);
        let mut penalty = (-lmin).max(0.0).powi(2);
        let mut capped = true;
        for k in 0..n {
            for l in k + 1..n {
                let excess = y[(k, l)].norm() - MODULUS_CAP;
                capped &= excess <= 0.0;
                penalty += excess.max(0.0).powi(2);
            }
        }
        report.best_penalty = report.best_penalty.min(penalty);
        if !capped || !linalg::cholesky_ok(&y, crate::text::psd_tol(n)) {
            continue;
        }
        let Ok(_) = validate_text(&y) else {
            continue;
        };
        let Ok(witness) = (Solution { big_q, overlaps, output: y }).into_witness(t) else {
            continue;
        };
        if !check_witness(t, &witness).map(|r| r.pass).unwrap_or(false) {
            continue;
        }
        report.found = true;
        report.accepted_q.push(big_q);
        if report.witness.is_none() {
            report.witness = Some(witness);
        }
        if !params.exhaustive {
            break;
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::text_properties;

    #[test]
    fn generators() {
        let spec = GenSpec { mode: GenMode::RandomEfficient, n: 5, seed: 1, z: None, graph: None };
        let a = gen_text(&spec).unwrap();
        assert_eq!(a, gen_text(&spec).unwrap());
        let p = text_properties(&a);
        assert!(p.efficient && p.fully_quantum);

        let g = SimpleGraph::from_edges(4, [(0, 1), (1, 2)]).unwrap();
        let t = gen_text(&GenSpec { mode: GenMode::FromGraph, n: 4, seed: 2, z: None, graph: Some(g.clone()) }).unwrap();
        assert_eq!(crate::graph::graph_of_text(&t), g);

        let u = gen_text(&GenSpec { mode: GenMode::Uniform, n: 3, seed: 0, z: Some(0.5), graph: None }).unwrap();
        assert_eq!(u, Text::uniform(3, 0.5).unwrap());
        for z in [-0.5, 0.0, 1.0, 1.5] {
            assert!(gen_text(&GenSpec { mode: GenMode::Uniform, n: 3, seed: 0, z: Some(z), graph: None }).is_err());
        }

        let (t, tries) = gen_untranslatable4(0).unwrap();
        assert!(tries <= MAX_REJECTION_TRIES);
        assert_eq!(hadamard_inverse_signature(&t).unwrap().counts(), (2, 2, 0));
    }

    #[test]
    fn spec_json() {
        let spec: GenSpec = serde_json::from_str(r#"{"mode":"uniform","n":3,"seed":4,"z":0.25}"#).unwrap();
        assert_eq!(spec.mode, GenMode::Uniform);
        assert!(serde_json::from_str::<GenSpec>(r#"{"mode":"uniform","bogus":1}"#).is_err());
    }

    #[test]
    fn oracle_basics() {
        let r = oracle_feasible(&Text::identity(3), &OracleParams::default());
        assert!(r.found && r.samples == 1);
        let r = oracle_feasible(&Text::uniform(3, 0.5).unwrap(), &OracleParams { samples: 20_000, seed: 1, exhaustive: false });
        assert!(r.found, "{r:?}");
        assert!(r.witness.unwrap().big_q < 0.0);
    }
}
