//! Derivative-free minimization (Nelder–Mead, standard coefficients).

#[derive(Clone, Debug, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
}

/// Minimizes `f` from `x0` with an axis-aligned initial simplex of size
/// `step`. Stops after about `max_evals` evaluations (a step may overrun by
/// two), once the value drops to `target`, or when the simplex collapses
/// (spread of values below `ftol`).
pub fn nelder_mead<F>(mut f: F, x0: &[f64], step: f64, max_evals: usize, target: f64, ftol: f64) -> Minimum
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let v0 = eval(x0, &mut evals);
    simplex.push((x0.to_vec(), v0));
    for i in 0..n {
        if evals >= max_evals || v0 <= target {
            break;
        }
        let mut x = x0.to_vec();
        x[i] += step;
        let v = eval(&x, &mut evals);
        simplex.push((x, v));
    }
    let sort = |s: &mut Vec<(Vec<f64>, f64)>| s.sort_by(|a, b| a.1.total_cmp(&b.1));
    sort(&mut simplex);
    if simplex.len() < n + 1 {
        let (x, value) = simplex.swap_remove(0);
        return Minimum { x, value, evaluations: evals };
    }

    let point = |c: &[f64], d: &[f64], t: f64| -> Vec<f64> { c.iter().zip(d).map(|(a, b)| a + t * (b - a)).collect() };

    while evals < max_evals && simplex[0].1 > target {
        if (simplex[n].1 - simplex[0].1).abs() <= ftol * (1.0 + simplex[0].1.abs()) && simplex[0].1.is_finite() {
            break;
        }
        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (c, v) in centroid.iter_mut().zip(x) {
                *c += v / n as f64;
            }
        }
        let worst = simplex[n].0.clone();
        let reflected = point(&centroid, &worst, -1.0);
        let fr = eval(&reflected, &mut evals);
        if fr < simplex[0].1 {
            let expanded = point(&centroid, &worst, -2.0);
            let fe = eval(&expanded, &mut evals);
            simplex[n] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (reflected, fr);
        } else {
            let (contracted, fc) = if fr < simplex[n].1 {
                let c = point(&centroid, &worst, -0.5);
                let v = eval(&c, &mut evals);
                (c, v)
            } else {
                let c = point(&centroid, &worst, 0.5);
                let v = eval(&c, &mut evals);
                (c, v)
            };
            if fc < simplex[n].1.min(fr) {
                simplex[n] = (contracted, fc);
            } else {
                let best = simplex[0].0.clone();
                for entry in simplex.iter_mut().skip(1) {
                    if evals >= max_evals {
                        break;
                    }
                    let x = point(&best, &entry.0, 0.5);
                    let v = eval(&x, &mut evals);
                    *entry = (x, v);
                }
            }
        }
        sort(&mut simplex);
    }
    let (x, value) = simplex.swap_remove(0);
    Minimum { x, value, evaluations: evals }
}
