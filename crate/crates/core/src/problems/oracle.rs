use crate::error::ProblemError;
use crate::model::{GroundTruth, Iterate, Problem};

fn ground_truth(p: &Problem) -> Result<&GroundTruth, ProblemError> {
    let gt = p.metadata().ok_or(ProblemError::MetadataAbsent)?;
    match gt.slam_vertices.len() {
        1 | 2 => Ok(gt),
        k => Err(ProblemError::UnsupportedVertexCount(k)),
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Euclidean distance from `it` to `{z*} x S_lambda`, with `S_lambda` a point
/// or a segment.
pub fn distance_to_solution(p: &Problem, it: &Iterate) -> Result<f64, ProblemError> {
    let gt = ground_truth(p)?;
    if it.z().len() != p.n() || it.lambda().len() != p.m() {
        return Err(crate::error::ModelError::DimensionMismatch {
            expected: p.n() + p.m(),
            found: it.z().len() + it.lambda().len(),
        }
        .into());
    }
    let dz2 = sq_dist(it.z(), &gt.z_star);
    let lam = it.lambda();
    let dl2 = match gt.slam_vertices.as_slice() {
        [v] => sq_dist(lam, v),
        [a, b] => {
            let d: Vec<f64> = b.iter().zip(a).map(|(x, y)| x - y).collect();
            let dd: f64 = d.iter().map(|x| x * x).sum();
            let t = if dd == 0.0 {
                0.0
            } else {
                let proj: f64 = lam.iter().zip(a).zip(&d).map(|((l, a), d)| (l - a) * d).sum();
                (proj / dd).clamp(0.0, 1.0)
            };
            lam.iter()
                .zip(a)
                .zip(&d)
                .map(|((l, a), d)| {
                    let r = l - a - t * d;
                    r * r
                })
                .sum()
        }
        _ => unreachable!(),
    };
    Ok((dz2 + dl2).sqrt())
}

const SWEEP_STEP: f64 = 1e-6;
const REFINE_TOL: f64 = 1e-12;

/// `max_{lambda in S_lambda} min_{i in B+} lambda_i`, or `None` when `B+` is
/// empty.
///
/// The segment is swept with parameter step 1e-6 and the best grid point is
/// refined by interval shrinking on the concave, piecewise-linear objective.
pub fn epsilon_lambda(p: &Problem) -> Result<Option<f64>, ProblemError> {
    let gt = ground_truth(p)?;
    if gt.b_plus.is_empty() {
        return Ok(None);
    }
    let min_plus = |lam: &dyn Fn(usize) -> f64| {
        gt.b_plus
            .iter()
            .map(lam)
            .fold(f64::INFINITY, f64::min)
    };
    let (a, b) = match gt.slam_vertices.as_slice() {
        [v] => return Ok(Some(min_plus(&|i| v[i]))),
        [a, b] => (a, b),
        _ => unreachable!(),
    };
    let f = |t: f64| min_plus(&|i| a[i] + t * (b[i] - a[i]));

    let steps = (1.0 / SWEEP_STEP).round() as usize;
    let (mut best_t, mut best) = (0.0, f(0.0));
    for k in 1..=steps {
        let t = k as f64 * SWEEP_STEP;
        let v = f(t);
        if v > best {
            best = v;
            best_t = t;
        }
    }

    let mut lo = (best_t - SWEEP_STEP).max(0.0);
    let mut hi = (best_t + SWEEP_STEP).min(1.0);
    while hi - lo > REFINE_TOL {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if f(m1) < f(m2) {
            lo = m1;
        } else {
            hi = m2;
        }
    }
    Ok(Some(best.max(f(0.5 * (lo + hi)))))
}
