//! Construction of translation witnesses.
//!
//! Internally a translation is carried as a [`Solution`]: the entanglement
//! parameter `Q`, the tablet overlaps `w_i = ⟨ψ_i|ψ_0⟩` and the output Gram
//! matrix `Y`. The tablet itself is recovered from the overlaps when the
//! solution is turned into a [`TranslationWitness`].

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use thiserror::Error;

use crate::classify::{self, decide_translatable, ClassifyError, Decision, Decomposition, Reason, SIGNATURE_ZERO_REL};
use crate::graph::{self, GraphClass, GraphError, SimpleGraph, VertexLabel, WellSplitShape};
use crate::linalg;
use crate::text::{self, embed_text, text_properties, validate_text, Text, TextError, ZERO_TOL};
use crate::translation::{check_witness, complete_output_gram, output_gram_from_overlaps, CheckReport, TranslateError, TranslationWitness};
use crate::C64;

pub const DEFAULT_BUDGET: usize = 100_000;
/// Starting `|Q|` of the search and of mixed constructions.
pub const INITIAL_Q: f64 = 0.05;
/// A search candidate is accepted when its penalty is at most this.
pub const PENALTY_TOL: f64 = 1e-16;
/// Bound on off-diagonal output moduli used by the penalty. Outputs closer
/// to 1 are near-copies of each other, where tolerance-level validation can
/// no longer tell feasible from infeasible.
pub const MODULUS_CAP: f64 = 1.0 - 1e-6;
const SEARCH_MARGIN: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("text is not translatable ({:?})", .0.reason)]
    Untranslatable(Box<Decision>),
    #[error("search budget exhausted after {evaluations} evaluations (best penalty {best_penalty:e})")]
    SearchBudgetExhausted { evaluations: usize, best_penalty: f64 },
    #[error("text is not classical")]
    NotClassical,
    #[error("text is not a uniform, real, efficient quantum text")]
    NotUniformRealEfficient,
    #[error("graph is not well-split")]
    NotWellSplit,
    #[error("attachment would need Q = {0} > 1")]
    QTooLarge(f64),
    #[error("bad overlap pattern: {0}")]
    BadOverlapPattern(String),
    #[error("sign {0} is not admissible for this text")]
    SignNotAdmissible(i8),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("constructed witness failed verification")]
    VerificationFailed(Box<CheckReport>),
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error(transparent)]
    Translate(#[from] TranslateError),
    #[error(transparent)]
    Text(#[from] TextError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// `(Q, w, Y)` for a fixed ordering of the states of a text.
#[derive(Clone, Debug, PartialEq)]
pub struct Solution {
    pub big_q: f64,
    pub overlaps: DVector<C64>,
    pub output: DMatrix<C64>,
}

impl Solution {
    pub fn from_witness(t: &Text, w: &TranslationWitness) -> Self {
        Solution { big_q: w.big_q, overlaps: w.overlaps(t), output: w.output_gram.clone() }
    }

    /// Output from the translation equations, free entries completed.
    pub fn from_overlaps(t: &Text, big_q: f64, overlaps: DVector<C64>) -> Result<Self, SynthError> {
        let y = complete_output_gram(&output_gram_from_overlaps(t, big_q, &overlaps)?)?;
        Ok(Solution { big_q, overlaps, output: y.gram().clone() })
    }

    pub fn into_witness(self, t: &Text) -> Result<TranslationWitness, SynthError> {
        Ok(TranslationWitness::from_overlaps(t, self.big_q, &self.overlaps, self.output)?)
    }

    /// Places a solution for the subtext `indices` into an `n`-text whose
    /// remaining states are classical summands (zero overlap, fresh
    /// orthonormal outputs).
    pub fn embed(&self, n: usize, indices: &[usize]) -> Solution {
        let mut overlaps = DVector::zeros(n);
        let mut output = DMatrix::identity(n, n);
        for (a, &ga) in indices.iter().enumerate() {
            overlaps[ga] = self.overlaps[a];
            for (b, &gb) in indices.iter().enumerate() {
                output[(ga, gb)] = self.output[(a, b)];
            }
        }
        Solution { big_q: self.big_q, overlaps, output }
    }
}

/// `max(0, margin − λ_min(Y))² + Σ_{k<l} max(0, |y_kl| − cap)²` for the
/// output determined by `(Q, w)` with free entries set to zero.
pub fn penalty(t: &Text, big_q: f64, overlaps: &DVector<C64>, margin: f64) -> f64 {
    let Ok(partial) = output_gram_from_overlaps(t, big_q, overlaps) else {
        return 1e6;
    };
    let y = &partial.fixed;
    let n = y.nrows();
    let lmin = linalg::min_eigenvalue(y);
    let mut p = (margin - lmin).max(0.0).powi(2);
    for k in 0..n {
        for l in k + 1..n {
            p += (y[(k, l)].norm() - MODULUS_CAP).max(0.0).powi(2);
        }
    }
    p
}

/// Checks a finished witness and attaches the unitary if asked.
fn finish(t: &Text, sol: Solution, with_unitary: bool) -> Result<TranslationWitness, SynthError> {
    let mut w = sol.into_witness(t)?;
    if with_unitary {
        w = w.with_unitary(t)?;
    }
    let report = check_witness(t, &w)?;
    if report.pass {
        Ok(w)
    } else {
        Err(SynthError::VerificationFailed(Box::new(report)))
    }
}

/// Faithful cloning of a classical text (`Q = 0`). The output defaults to an
/// orthonormal set; any other output text of the same size is also a valid
/// target.
pub fn clone_classical(t: &Text, target: Option<&Text>) -> Result<TranslationWitness, SynthError> {
    if !text_properties(t).classical {
        return Err(SynthError::NotClassical);
    }
    let n = t.n();
    let output = match target {
        Some(y) if y.n() != n => {
            return Err(TranslateError::DimensionMismatch(format!("target has {} states, text has {n}", y.n())).into())
        }
        Some(y) => y.gram().clone(),
        None => DMatrix::identity(n, n),
    };
    finish(t, Solution { big_q: 0.0, overlaps: DVector::zeros(n), output }, false)
}

/// Closed-form translation of a real uniform efficient text with Gram entry
/// `z ≠ 0`: overlaps `c` along the centre of the text, `sign(Q) = −sign(z)`,
/// `|Q|` halved from 1/2 until the uniform output `y = (1 + Qc²/z)/(1 + Qc²)`
/// is a valid text.
pub fn central_translate_uniform(t: &Text, eps_overlap: f64) -> Result<TranslationWitness, SynthError> {
    finish(t, uniform_solution(t, eps_overlap)?, false)
}

fn uniform_solution(t: &Text, eps_overlap: f64) -> Result<Solution, SynthError> {
    if !(eps_overlap > 0.0 && eps_overlap <= 1.0) {
        return Err(SynthError::InvalidParameter(format!("overlap scale {eps_overlap} not in (0, 1]")));
    }
    let n = t.n();
    let props = text_properties(t);
    if n < 2 || !props.uniform || !props.real_text || !props.efficient || props.classical {
        return Err(SynthError::NotUniformRealEfficient);
    }
    let z = t.z(0, 1).re;
    let nf = n as f64;
    let c = eps_overlap.min(0.5 * ((1.0 + (nf - 1.0) * z) / nf).sqrt());
    let sign = -z.signum();
    let mut delta = 0.5;
    for _ in 0..64 {
        let big_q = sign * delta;
        let y = (1.0 + big_q * c * c / z) / (1.0 + big_q * c * c);
        if y < 1.0 - 1e-9 && 1.0 + (nf - 1.0) * y > 1e-9 {
            let output = Text::uniform(n, y)?.gram().clone();
            return Ok(Solution { big_q, overlaps: DVector::from_element(n, C64::new(c, 0.0)), output });
        }
        delta *= 0.5;
    }
    Err(SynthError::NotUniformRealEfficient)
}

/// Constructive translation of a fully-quantum text with `Q = sign·|Q|`.
///
/// With `u_k = 1/w_k` the output is positive semi-definite iff
/// `uu† + QM ⪰ 0` (`M` the Hadamard inverse). When `εM` has a single
/// negative eigenvalue this holds iff `u` lies in the range of `M` and
/// `ε u†M⁺u ≤ −|Q|`. `u` is taken along the eigenvector of the odd
/// eigenvalue (nudged inside the range if it has tiny entries) and scaled with
/// a factor-2 margin on both this bound and tablet realizability.
pub fn spectral_solution(t: &Text, sign: i8, q_abs: f64) -> Result<Solution, SynthError> {
    if sign != 1 && sign != -1 {
        return Err(SynthError::InvalidParameter(format!("sign must be ±1, got {sign}")));
    }
    if !(q_abs > 0.0 && q_abs <= 1.0) {
        return Err(SynthError::InvalidParameter(format!("|Q| = {q_abs} not in (0, 1]")));
    }
    let n = t.n();
    let m = classify::hadamard_inverse(t)?;
    let eig = linalg::hermitian_eigen(&m);
    let scale = eig.values.iter().fold(0.0_f64, |a, l| a.max(l.abs()));
    let zero = SIGNATURE_ZERO_REL * scale;
    let eps = f64::from(sign);
    let odd = if sign < 0 { 0 } else { n - 1 };
    if eig.values.iter().filter(|&&l| -eps * l > zero).count() != 1 || -eps * eig.values[odd] <= zero {
        return Err(SynthError::SignNotAdmissible(sign));
    }
    let range: Vec<usize> = (0..n).filter(|&k| eig.values[k].abs() > zero).collect();
    let pinv_form = |u: &DVector<C64>| -> f64 {
        range.iter().map(|&k| eig.vectors.column(k).dotc(u).norm_sqr() / eig.values[k]).sum()
    };
    let project = |r: &DVector<C64>| -> DVector<C64> {
        range.iter().fold(DVector::zeros(n), |acc, &k| {
            let col = eig.vectors.column(k);
            acc + col * col.dotc(r)
        })
    };

    let v = eig.vectors.column(odd).into_owned();
    let floor = 1e-2 / (n as f64).sqrt();
    let nudges = [
        project(&DVector::from_element(n, C64::new(1.0, 0.0))),
        project(&DVector::from_fn(n, |i, _| C64::from_polar(1.0, 0.7 * i as f64 + 0.3))),
    ];
    let mut chosen = None;
    'outer: for delta in [0.0, 0.3, 0.1, 0.03, 0.01, 0.003] {
        for r in &nudges {
            let mut u = &v + r * C64::new(delta, 0.0);
            let norm = u.norm();
            if norm == 0.0 {
                continue;
            }
            u /= C64::new(norm, 0.0);
            let g = -eps * pinv_form(&u);
            if g > 0.0 && u.iter().all(|x| x.norm() >= floor) {
                chosen = Some((u, g));
                break 'outer;
            }
            if delta == 0.0 {
                break;
            }
        }
    }
    let (u, g) = chosen.ok_or_else(|| SynthError::BadOverlapPattern("no usable spectral direction".into()))?;
    let inv_u = u.map(|x| C64::new(1.0, 0.0) / x);
    let realizability = linalg::inverse_quadratic_form(t.gram(), &inv_u)
        .ok_or_else(|| SynthError::InvalidParameter("text is not efficient".into()))?;
    let s_sq = (2.0 * q_abs / g).max(2.0 * realizability);
    let overlaps = inv_u / C64::new(s_sq.sqrt(), 0.0);
    Solution::from_overlaps(t, eps * q_abs, overlaps)
}

#[derive(Clone, Debug)]
pub struct SearchOptions {
    pub seed: u64,
    pub budget: usize,
    /// Start from the spectral construction before any random restart.
    pub spectral_start: bool,
    pub initial_q: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions { seed: 0, budget: DEFAULT_BUDGET, spectral_start: true, initial_q: INITIAL_Q }
    }
}

#[derive(Clone, Debug)]
pub struct SearchResult {
    pub witness: TranslationWitness,
    pub evaluations: usize,
    pub restarts: usize,
    pub penalty: f64,
}

/// Multistart Nelder–Mead over `(logit |Q|, tablet)` with the sign of `Q`
/// fixed; the tablet ranges over unit vectors of the padded embedding.
/// Deterministic for a given seed.
pub fn search_translation(t: &Text, sign: i8, opts: &SearchOptions) -> Result<SearchResult, SynthError> {
    if sign != 1 && sign != -1 {
        return Err(SynthError::InvalidParameter(format!("sign must be ±1, got {sign}")));
    }
    let mut evaluations = 0usize;
    let mut best_penalty = f64::INFINITY;
    let accept = |big_q: f64, overlaps: DVector<C64>| -> Option<TranslationWitness> {
        let sol = Solution::from_overlaps(t, big_q, overlaps).ok()?;
        finish(t, sol, false).ok()
    };

    if opts.spectral_start {
        evaluations += 1;
        if let Ok(sol) = spectral_solution(t, sign, opts.initial_q) {
            let p = penalty(t, sol.big_q, &sol.overlaps, 0.0);
            best_penalty = best_penalty.min(p);
            if p <= PENALTY_TOL {
                if let Some(witness) = accept(sol.big_q, sol.overlaps) {
                    return Ok(SearchResult { witness, evaluations, restarts: 0, penalty: p });
                }
            }
        }
    }

    let emb = embed_text(t, true);
    let d = emb.dim;
    let eps = f64::from(sign);
    let decode = |x: &[f64]| -> Option<(f64, DVector<C64>)> {
        let q_abs = 1.0 / (1.0 + (-x[0]).exp());
        let mut tablet = DVector::from_fn(d, |i, _| C64::new(x[1 + 2 * i], x[2 + 2 * i]));
        let norm = tablet.norm();
        if norm.is_nan() || norm <= 1e-12 {
            return None;
        }
        tablet /= C64::new(norm, 0.0);
        Some((eps * q_abs, emb.overlaps(&tablet)))
    };
    let params = 1 + 2 * d;
    let per_restart = (400 * params).max(2000);
    // Restarts run in batches; restart r has its own random stream and its
    // allotment depends only on the evaluations spent by earlier batches, so
    // the accepted restart (lowest index) does not depend on scheduling.
    let run = |r: usize, allot: usize| -> (usize, Option<(f64, TranslationWitness)>, f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        rng.set_stream(r as u64);
        let q_start = (opts.initial_q * 0.5f64.powi(r.min(40) as i32)).max(1e-6);
        let mut x0 = vec![(q_start / (1.0 - q_start)).ln()];
        x0.extend((0..2 * d).map(|_| rng.sample::<f64, _>(StandardNormal)));
        let objective = |x: &[f64]| decode(x).map_or(1e6, |(q, w)| penalty(t, q, &w, SEARCH_MARGIN));
        let min = crate::optimize::nelder_mead(objective, &x0, 0.5, allot, 0.0, 1e-15);
        let Some((big_q, overlaps)) = decode(&min.x) else {
            return (min.evaluations, None, f64::INFINITY);
        };
        let p = penalty(t, big_q, &overlaps, 0.0);
        let found = if p <= PENALTY_TOL { accept(big_q, overlaps).map(|w| (p, w)) } else { None };
        (min.evaluations, found, p)
    };
    const BATCH: usize = 8;
    let mut next = 0usize;
    while opts.budget.saturating_sub(evaluations) > params + 1 {
        let allot = per_restart.min((opts.budget - evaluations).div_ceil(BATCH));
        let results: Vec<_> = (next..next + BATCH).into_par_iter().map(|r| run(r, allot)).collect();
        for (k, (evals, found, p)) in results.into_iter().enumerate() {
            evaluations += evals;
            best_penalty = best_penalty.min(p);
            if let Some((penalty, witness)) = found {
                return Ok(SearchResult { witness, evaluations, restarts: next + k + 1, penalty });
            }
        }
        next += BATCH;
    }
    Err(SynthError::SearchBudgetExhausted { evaluations, best_penalty })
}

/// Record of one classical attachment.
#[derive(Clone, Debug, PartialEq)]
pub struct AttachStep {
    /// Index of the new state (in the enlarged text, or in the input text
    /// when attachments are chained by [`attach_chain`]).
    pub phi_index: usize,
    pub anchor_index: usize,
    pub alpha: f64,
    pub beta: C64,
    /// `B` of the anchor; the new output is `χ_anchor/√B + √((B−1)/B) χ_⊥`.
    pub b1: f64,
    /// Position of the fresh output direction `χ_⊥` in the output frame.
    pub chi_perp_dim: usize,
    /// Overlaps of the previous tablet after moving it into the dialect.
    pub eta0: DVector<C64>,
    /// Rank of the projector onto the dialect before the attachment.
    pub projector_rank: usize,
    /// Squared norm of the previous tablet's dialect part.
    pub kappa_sq: f64,
    /// `⟨φ|η_0⟩`.
    pub phi_eta0: C64,
    /// `⟨φ|(I−P)|φ⟩`.
    pub p: f64,
    pub big_q_before: f64,
    pub big_q_after: f64,
}

#[derive(Clone, Debug)]
pub struct Attached {
    pub text: Text,
    pub witness: TranslationWitness,
    pub step: AttachStep,
}

/// Extends a translation with `Q > 0` by a state `φ` whose overlaps with the
/// text (`phi_overlaps[i] = ⟨ψ_i|φ⟩`) vanish except at `anchor`.
pub fn attach_classical(t: &Text, w: &TranslationWitness, phi_overlaps: &DVector<C64>, anchor: usize) -> Result<Attached, SynthError> {
    let sol = Solution::from_witness(t, w);
    let (text, next, step) = attach_step(t, &sol, phi_overlaps, anchor)?;
    let witness = finish(&text, next, false)?;
    Ok(Attached { text, witness, step })
}

fn attach_step(t: &Text, sol: &Solution, f: &DVector<C64>, anchor: usize) -> Result<(Text, Solution, AttachStep), SynthError> {
    let n = t.n();
    if f.len() != n || anchor >= n {
        return Err(SynthError::InvalidParameter(format!("{} overlaps and anchor {anchor} for {n} states", f.len())));
    }
    let support: Vec<usize> = (0..n).filter(|&i| f[i].norm() > ZERO_TOL).collect();
    if support != [anchor] {
        return Err(SynthError::BadOverlapPattern(format!("new state overlaps states {support:?}, expected only {anchor}")));
    }
    if sol.big_q <= 0.0 {
        return Err(SynthError::InvalidParameter("classical attachment needs Q > 0".into()));
    }
    if sol.overlaps[anchor].norm() <= ZERO_TOL {
        return Err(SynthError::BadOverlapPattern(format!("tablet is orthogonal to anchor {anchor}")));
    }
    let z = t.gram();
    let degenerate = || SynthError::InvalidParameter("text is not efficient".into());
    let zf = linalg::solve_hpd(z, f).ok_or_else(degenerate)?;
    let p = 1.0 - f.dotc(&zf).re;
    if p <= text::pd_tol(n + 1) {
        return Err(SynthError::BadOverlapPattern("new state lies in the span of the text".into()));
    }
    let kappa_sq = linalg::inverse_quadratic_form(z, &sol.overlaps).ok_or_else(degenerate)?;
    let w_eta = &sol.overlaps / C64::new(kappa_sq.sqrt(), 0.0);
    let q_eta = sol.big_q * kappa_sq;
    let coeffs = linalg::solve_hpd(z, &w_eta).ok_or_else(degenerate)?;
    let phi_eta0 = f.dotc(&coeffs);
    let alpha_sq = 1.0 / (1.0 + phi_eta0.norm_sqr() / p);
    let alpha = alpha_sq.sqrt();
    let beta = -phi_eta0 * (alpha / p);
    let big_q = q_eta / alpha_sq;
    if big_q > 1.0 {
        return Err(SynthError::QTooLarge(big_q));
    }

    let mut gram = DMatrix::identity(n + 1, n + 1);
    gram.view_mut((0, 0), (n, n)).copy_from(z);
    let mut overlaps = DVector::zeros(n + 1);
    let mut output = DMatrix::identity(n + 1, n + 1);
    output.view_mut((0, 0), (n, n)).copy_from(&sol.output);
    let b_anchor = 1.0 + sol.big_q * sol.overlaps[anchor].norm_sqr();
    let inv_sqrt_b = 1.0 / b_anchor.sqrt();
    for i in 0..n {
        gram[(i, n)] = f[i];
        gram[(n, i)] = f[i].conj();
        overlaps[i] = w_eta[i] * alpha;
        output[(i, n)] = sol.output[(i, anchor)] * inv_sqrt_b;
        output[(n, i)] = output[(i, n)].conj();
    }
    let text = validate_text(&gram)?;
    let step = AttachStep {
        phi_index: n,
        anchor_index: anchor,
        alpha,
        beta,
        b1: b_anchor,
        chi_perp_dim: n,
        eta0: w_eta,
        projector_rank: n,
        kappa_sq,
        phi_eta0,
        p,
        big_q_before: sol.big_q,
        big_q_after: big_q,
    };
    Ok((text, Solution { big_q, overlaps, output }, step))
}

#[derive(Clone, Debug)]
pub struct TranslateOptions {
    pub seed: u64,
    pub budget: usize,
    /// Required sign of `Q` (`-1`, `0` or `1`).
    pub sign: Option<i8>,
    pub spectral_start: bool,
    pub with_unitary: bool,
}

impl Default for TranslateOptions {
    fn default() -> Self {
        TranslateOptions { seed: 0, budget: DEFAULT_BUDGET, sign: None, spectral_start: true, with_unitary: true }
    }
}

/// Decides translatability and, if positive, builds a verified witness.
pub fn translate(t: &Text, opts: &TranslateOptions) -> Result<TranslationWitness, SynthError> {
    translate_with_decision(t, opts).map(|(w, _)| w)
}

pub fn translate_with_decision(t: &Text, opts: &TranslateOptions) -> Result<(TranslationWitness, Decision), SynthError> {
    let decision = decide_translatable(t)?;
    if !decision.translatable {
        return Err(SynthError::Untranslatable(Box::new(decision)));
    }
    if let Some(s) = opts.sign {
        if !(-1..=1).contains(&s) {
            return Err(SynthError::InvalidParameter(format!("sign must be -1, 0 or 1, got {s}")));
        }
        if !decision.sign_constraint.is_empty() && !decision.sign_constraint.contains(&s) {
            return Err(SynthError::SignNotAdmissible(s));
        }
    }
    let n = t.n();
    let dec = decision.decomposition.as_ref().expect("positive decisions carry a decomposition");
    let sol = match decision.reason {
        Reason::OkClassical => {
            let big_q = opts.sign.map_or(0.0, |s| 0.5 * f64::from(s));
            Solution { big_q, overlaps: DVector::zeros(n), output: DMatrix::identity(n, n) }
        }
        Reason::OkFullyQuantum => {
            let sign = opts.sign.unwrap_or(decision.sign_constraint[0]);
            let sub = t.subtext(&dec.quantum_part);
            fully_quantum_solution(&sub, sign, opts)?.embed(n, &dec.quantum_part)
        }
        Reason::OkMixed => mixed_solution(t, dec, opts)?,
        _ => unreachable!("negative decisions return early"),
    };
    Ok((finish(t, sol, opts.with_unitary)?, decision))
}

fn fully_quantum_solution(t: &Text, sign: i8, opts: &TranslateOptions) -> Result<Solution, SynthError> {
    let props = text_properties(t);
    if props.uniform && props.real_text && -t.z(0, 1).re.signum() == f64::from(sign) {
        if let Ok(sol) = uniform_solution(t, 0.1) {
            return Ok(sol);
        }
    }
    let search = SearchOptions { seed: opts.seed, budget: opts.budget, spectral_start: opts.spectral_start, initial_q: INITIAL_Q };
    let found = search_translation(t, sign, &search)?;
    Ok(Solution::from_witness(t, &found.witness))
}

/// Translation of the clique with `Q > 0`, then the pendants attached one at
/// a time in ascending index order. `|Q|` of the clique translation is halved
/// whenever an attachment would push `Q` above 1.
fn mixed_solution(t: &Text, dec: &Decomposition, opts: &TranslateOptions) -> Result<Solution, SynthError> {
    let quantum = &dec.quantum_part;
    let pendants: Vec<(usize, usize)> = dec.attachment.iter().filter_map(|(&p, &a)| a.map(|a| (p, a))).collect();
    let t2 = t.subtext(quantum);
    let mut q_abs = INITIAL_Q;
    let mut last = SynthError::QTooLarge(f64::INFINITY);
    for _ in 0..48 {
        let base = match spectral_solution(&t2, 1, q_abs).ok().filter(|_| opts.spectral_start) {
            Some(sol) => sol,
            None => {
                let search = SearchOptions { seed: opts.seed, budget: opts.budget, spectral_start: false, initial_q: q_abs };
                Solution::from_witness(&t2, &search_translation(&t2, 1, &search)?.witness)
            }
        };
        match attach_chain(t, quantum, &pendants, base) {
            Ok((order, sol, _)) => return Ok(sol.embed(t.n(), &order)),
            Err(e @ SynthError::QTooLarge(_)) => last = e,
            Err(e) => return Err(e),
        }
        q_abs *= 0.5;
    }
    Err(last)
}

/// Attaches `pendants` (`(state, anchor)` in input indices) to a solution
/// for the subtext `quantum`. Returns the final ordering of input indices.
pub fn attach_chain(
    t: &Text,
    quantum: &[usize],
    pendants: &[(usize, usize)],
    base: Solution,
) -> Result<(Vec<usize>, Solution, Vec<AttachStep>), SynthError> {
    let mut order = quantum.to_vec();
    let mut sol = base;
    let mut steps = Vec::with_capacity(pendants.len());
    for &(p, anchor) in pendants {
        let cur = t.subtext(&order);
        let f = DVector::from_iterator(order.len(), order.iter().map(|&i| t.z(i, p)));
        let a = order
            .iter()
            .position(|&i| i == anchor)
            .ok_or_else(|| SynthError::BadOverlapPattern(format!("anchor {anchor} of state {p} is not attached yet")))?;
        let (_, next, mut step) = attach_step(&cur, &sol, &f, a)?;
        step.phi_index = p;
        step.anchor_index = anchor;
        order.push(p);
        sol = next;
        steps.push(step);
    }
    Ok((order, sol, steps))
}

/// A text with prescribed orthogonality graph and a witness for it.
#[derive(Clone, Debug)]
pub struct Realization {
    pub text: Text,
    pub witness: TranslationWitness,
    /// Shape of the non-trivial component, if there is one.
    pub shape: Option<WellSplitShape>,
}

/// Builds a translatable text whose orthogonality graph is exactly `g`
/// (well-split), together with a verified witness.
///
/// The clique states share a real negative overlap `z`; the pendants of a
/// clique vertex `k` overlap it by a real `z_k` and are orthogonal to
/// everything else. The tablet overlaps the clique states by `t` and the
/// pendants by zero, with `Q t² = −z`, so the clique outputs come out
/// orthonormal. Overlaps are shrunk until the text is efficient and the
/// tablet fits.
pub fn realize_graph(g: &SimpleGraph, seed: u64) -> Result<Realization, SynthError> {
    let n = g.n();
    if n == 0 {
        return Err(SynthError::InvalidParameter("empty graph".into()));
    }
    let rec = graph::recognize(g);
    if !rec.is_well_split() {
        return Err(SynthError::NotWellSplit);
    }
    if rec.class == GraphClass::Independent {
        let text = Text::identity(n);
        let overlap = if n == 1 { 0.5 } else { 0.0 };
        let sol = Solution { big_q: 0.5, overlaps: DVector::from_element(n, C64::new(overlap, 0.0)), output: DMatrix::identity(n, n) };
        let witness = finish(&text, sol, false)?;
        return Ok(Realization { text, witness, shape: None });
    }

    let (component, _) = classify::split_off_isolated(g);
    let shape = graph::parameterize(&g.induced(&component))?;
    let n2 = shape.n2;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pendant_base: Vec<f64> = (0..shape.ell)
        .map(|_| {
            let m: f64 = rng.gen_range(0.5..1.0);
            if rng.gen::<bool>() {
                m
            } else {
                -m
            }
        })
        .collect();
    let clique_of: Vec<Option<usize>> = (0..n)
        .map(|v| component.iter().position(|&c| c == v).and_then(|a| match shape.labels[a] {
            VertexLabel::Clique(j) => Some(j),
            VertexLabel::Pendant(..) => None,
        }))
        .collect();
    let anchor_of: Vec<Option<usize>> = (0..n)
        .map(|v| component.iter().position(|&c| c == v).and_then(|a| match shape.labels[a] {
            VertexLabel::Pendant(i, _) => Some(i),
            VertexLabel::Clique(_) => None,
        }))
        .collect();

    let mut z = -(0.1f64).min(0.5 / (n2 as f64 - 1.0));
    let mut scale = 0.3;
    for _ in 0..60 {
        let mut gram = DMatrix::<C64>::identity(n, n);
        for a in 0..n {
            for b in 0..n {
                if a == b {
                    continue;
                }
                let value = match (clique_of[a], clique_of[b], anchor_of[a], anchor_of[b]) {
                    (Some(_), Some(_), _, _) => z,
                    (Some(j), None, _, Some(i)) | (None, Some(j), Some(i), _) if i == j => pendant_base[i - 1] * scale,
                    _ => 0.0,
                };
                gram[(a, b)] = C64::new(value, 0.0);
            }
        }
        let Ok(text) = validate_text(&gram) else {
            z *= 0.5;
            scale *= 0.5;
            continue;
        };
        let indicator = DVector::from_fn(n, |v, _| C64::new(if clique_of[v].is_some() { 1.0 } else { 0.0 }, 0.0));
        let lower = linalg::inverse_quadratic_form(text.gram(), &indicator).map(|form| z.abs() * form);
        match lower {
            Some(lb) if text_properties(&text).efficient && lb < 1.0 - 1e-9 => {
                let big_q = lb.sqrt();
                let t_overlap = (z.abs() / big_q).sqrt();
                let overlaps = &indicator * C64::new(t_overlap, 0.0);
                let partial = output_gram_from_overlaps(&text, big_q, &overlaps)?;
                let mut output = partial.fixed.clone();
                let c = 1.0 / (1.0 - z).sqrt();
                for a in 0..n {
                    for b in 0..n {
                        if a != b && partial.free.contains(a, b) {
                            let same_anchor = matches!((anchor_of[a], anchor_of[b]), (Some(i), Some(j)) if i == j);
                            output[(a, b)] = C64::new(if same_anchor { c } else { 0.0 }, 0.0);
                        }
                    }
                }
                let sol = Solution { big_q, overlaps, output };
                let witness = finish(&text, sol, false)?;
                return Ok(Realization { text, witness, shape: Some(shape) });
            }
            _ => {
                z *= 0.5;
                scale *= 0.5;
            }
        }
    }
    Err(SynthError::InvalidParameter("could not find feasible overlaps".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::translation::synthesize_unitary;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn p3() -> Text {
        let g = DMatrix::from_row_slice(3, 3, &[c(1.0), c(0.5), c(0.2), c(0.5), c(1.0), c(0.0), c(0.2), c(0.0), c(1.0)]);
        validate_text(&g).unwrap()
    }

    #[test]
    fn classical_clone() {
        let t = Text::identity(3);
        let w = clone_classical(&t, None).unwrap();
        assert_eq!(w.big_q, 0.0);
        assert!(check_witness(&t, &w).unwrap().pass);
        let target = Text::uniform(3, 0.3).unwrap();
        let w = clone_classical(&t, Some(&target)).unwrap();
        assert!(linalg::max_abs_diff(&w.output_gram, target.gram()) < 1e-15);
        assert!(matches!(clone_classical(&Text::uniform(2, 0.1).unwrap(), None), Err(SynthError::NotClassical)));
    }

    #[test]
    fn uniform_closed_form() {
        let t = Text::uniform(3, 0.5).unwrap();
        let w = central_translate_uniform(&t, 0.1).unwrap();
        assert!(w.big_q < 0.0);
        assert!(check_witness(&t, &w).unwrap().pass);
        let y = w.output_gram[(0, 1)].re;
        let qc2 = w.big_q * 0.01;
        assert!((y - (1.0 + qc2 / 0.5) / (1.0 + qc2)).abs() < 1e-14);

        let t = Text::uniform(4, -0.2).unwrap();
        let w = central_translate_uniform(&t, 0.1).unwrap();
        assert!(w.big_q > 0.0 && check_witness(&t, &w).unwrap().pass);

        assert!(matches!(central_translate_uniform(&p3(), 0.1), Err(SynthError::NotUniformRealEfficient)));
    }

    #[test]
    fn spectral_seed_translates() {
        for (t, sign) in [
            (Text::uniform(3, 0.5).unwrap(), -1),
            (Text::uniform(2, 0.5).unwrap(), 1),
            (Text::uniform(2, 0.5).unwrap(), -1),
            (Text::uniform(4, -0.2).unwrap(), 1),
        ] {
            let sol = spectral_solution(&t, sign, INITIAL_Q).unwrap();
            assert_eq!(sol.big_q, f64::from(sign) * INITIAL_Q);
            assert!(sol.overlaps.iter().all(|w| w.norm() > ZERO_TOL));
            let w = finish(&t, sol, true).unwrap();
            assert!(check_witness(&t, &w).unwrap().pass);
        }
        assert!(matches!(spectral_solution(&Text::uniform(3, 0.5).unwrap(), 1, 0.05), Err(SynthError::SignNotAdmissible(1))));
    }

    #[test]
    fn random_search_without_seed() {
        for (t, sign) in [(Text::uniform(4, 0.5).unwrap(), -1), (Text::uniform(2, 0.3).unwrap(), 1)] {
            let opts = SearchOptions { seed: 7, spectral_start: false, ..SearchOptions::default() };
            let found = search_translation(&t, sign, &opts).unwrap();
            assert!(found.restarts >= 1);
            assert!(found.witness.big_q * f64::from(sign) > 0.0);
            assert!(check_witness(&t, &found.witness).unwrap().pass);
            let again = search_translation(&t, sign, &opts).unwrap();
            assert_eq!(found.witness, again.witness);
        }
    }

    #[test]
    fn attachment_matches_closed_form() {
        let t2 = Text::uniform(2, 0.3).unwrap();
        let base = spectral_solution(&t2, 1, INITIAL_Q).unwrap();
        let w2 = base.clone().into_witness(&t2).unwrap();
        let f = DVector::from_vec(vec![c(0.2), c(0.0)]);
        let att = attach_classical(&t2, &w2, &f, 0).unwrap();
        assert!(check_witness(&att.text, &att.witness).unwrap().pass);

        // independent recomputation of α from the enlarged text
        let s = &att.step;
        let zinv = t2.gram().clone().try_inverse().unwrap();
        let p = 1.0 - (f.adjoint() * &zinv * &f)[(0, 0)].re;
        let kappa_sq = (base.overlaps.adjoint() * &zinv * &base.overlaps)[(0, 0)].re;
        let eta = &base.overlaps / C64::new(kappa_sq.sqrt(), 0.0);
        let phi_eta = (f.adjoint() * &zinv * &eta)[(0, 0)];
        assert!((s.p - p).abs() < 1e-14);
        assert!((s.alpha.powi(2) - 1.0 / (1.0 + phi_eta.norm_sqr() / p)).abs() < 1e-14);
        assert!((s.big_q_after - base.big_q * kappa_sq / s.alpha.powi(2)).abs() < 1e-14);
        // new state is orthogonal to the tablet, and its output is χ_anchor/√B
        let w = att.witness.overlaps(&att.text);
        assert!(w[2].norm() < 1e-12);
        assert!((att.witness.output_gram[(0, 2)].re - 1.0 / s.b1.sqrt()).abs() < 1e-12);

        let bad = DVector::from_vec(vec![c(0.2), c(0.1)]);
        assert!(matches!(attach_classical(&t2, &w2, &bad, 0), Err(SynthError::BadOverlapPattern(_))));
    }

    #[test]
    fn two_attachments_make_a_star() {
        let t2 = Text::uniform(2, 0.3).unwrap();
        let w2 = spectral_solution(&t2, 1, INITIAL_Q).unwrap().into_witness(&t2).unwrap();
        let first = attach_classical(&t2, &w2, &DVector::from_vec(vec![c(0.2), c(0.0)]), 0).unwrap();
        let second = attach_classical(&first.text, &first.witness, &DVector::from_vec(vec![c(-0.25), c(0.0), c(0.0)]), 0).unwrap();
        assert_eq!(second.text.n(), 4);
        let star = SimpleGraph::from_edges(4, [(0, 1), (0, 2), (0, 3)]).unwrap();
        assert_eq!(graph::graph_of_text(&second.text), star);
        assert!(check_witness(&second.text, &second.witness).unwrap().pass);
        assert!(second.step.big_q_after > first.step.big_q_after && second.witness.big_q <= 1.0);
    }

    #[test]
    fn translate_routes() {
        for t in [Text::identity(3), Text::uniform(3, 0.5).unwrap(), p3(), Text::uniform(2, 0.4).unwrap().with_classical_summand(2)] {
            let w = translate(&t, &TranslateOptions::default()).unwrap();
            let report = check_witness(&t, &w).unwrap();
            assert!(report.pass && report.eq2.unwrap() <= 1e-8, "{report:?}");
        }
        let w = translate(&p3(), &TranslateOptions::default()).unwrap();
        assert!(w.big_q > 0.0);
        assert!(matches!(
            translate(&p3(), &TranslateOptions { sign: Some(-1), ..TranslateOptions::default() }),
            Err(SynthError::SignNotAdmissible(-1))
        ));
        let g = DMatrix::from_row_slice(4, 4, &[
            c(1.0), c(0.5), c(0.0), c(0.0),
            c(0.5), c(1.0), c(0.0), c(0.0),
            c(0.0), c(0.0), c(1.0), c(0.5),
            c(0.0), c(0.0), c(0.5), c(1.0),
        ]);
        assert!(matches!(translate(&validate_text(&g).unwrap(), &TranslateOptions::default()), Err(SynthError::Untranslatable(_))));
    }

    #[test]
    fn star_with_many_pendants() {
        // clique {0,1}, pendants 2,3,4 on vertex 0 and 5 on vertex 1
        let mut g = DMatrix::<C64>::identity(6, 6);
        for (i, j, v) in [(0, 1, 0.3), (0, 2, 0.2), (0, 3, -0.25), (0, 4, 0.1), (1, 5, 0.3)] {
            g[(i, j)] = c(v);
            g[(j, i)] = c(v);
        }
        let t = validate_text(&g).unwrap();
        let w = translate(&t, &TranslateOptions::default()).unwrap();
        assert!(w.big_q > 0.0 && check_witness(&t, &w).unwrap().pass);
        let u = synthesize_unitary(&t, &w).unwrap();
        assert_eq!(u.nrows(), 49);
    }

    #[test]
    fn realized_graphs() {
        let fig = SimpleGraph::from_edges(6, [(0, 1), (1, 2), (0, 2), (0, 3), (1, 4), (1, 5)]).unwrap();
        let r = realize_graph(&fig, 3).unwrap();
        assert_eq!(graph::graph_of_text(&r.text), fig);
        assert!(check_witness(&r.text, &r.witness).unwrap().pass);
        assert!(r.witness.big_q > 0.0 && r.witness.big_q <= 1.0);

        let single = realize_graph(&SimpleGraph::empty(1), 0).unwrap();
        assert_eq!(single.witness.big_q, 0.5);
        assert!((single.witness.overlaps(&single.text)[0].re - 0.5).abs() < 1e-12);

        let edge = realize_graph(&SimpleGraph::complete(2), 0).unwrap();
        assert!(edge.text.z(0, 1).re < 0.0);

        let with_isolated = SimpleGraph::from_edges(5, [(0, 1), (1, 2)]).unwrap();
        let r = realize_graph(&with_isolated, 1).unwrap();
        assert_eq!(graph::graph_of_text(&r.text), with_isolated);
        assert!(check_witness(&r.text, &r.witness).unwrap().pass);

        let c4 = SimpleGraph::from_edges(4, [(0, 1), (1, 2), (2, 3), (0, 3)]).unwrap();
        assert!(matches!(realize_graph(&c4, 0), Err(SynthError::NotWellSplit)));
    }
}
