//! Test-only oracles and instance generators shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use degen_nlp::lp::LpProblem;

/// Exhaustive vertex enumeration for an LP whose rows and variables all have
/// finite bounds. Returns the best objective over all feasible vertices, or
/// `None` when no vertex is feasible.
pub fn enumerate_vertices(lp: &LpProblem) -> Option<f64> {
    let a = lp.rows();
    let (q, p) = a.shape();
    let (rl, ru) = lp.row_bounds();
    let (vl, vu) = lp.var_bounds();
    let c = lp.objective();
    let objects = q + p;
    let row_of = |k: usize| -> Vec<f64> {
        if k < q {
            a.row(k).iter().copied().collect()
        } else {
            let mut e = vec![0.0; p];
            e[k - q] = 1.0;
            e
        }
    };
    let bounds_of = |k: usize| if k < q { (rl[k], ru[k]) } else { (vl[k - q], vu[k - q]) };
    let feasible = |x: &DVector<f64>| {
        let tol = 1e-9;
        (0..q).all(|i| {
            let v: f64 = (0..p).map(|j| a[(i, j)] * x[j]).sum();
            v >= rl[i] - tol && v <= ru[i] + tol
        }) && (0..p).all(|j| x[j] >= vl[j] - tol && x[j] <= vu[j] + tol)
    };

    let mut best: Option<f64> = None;
    let mut subset: Vec<usize> = (0..p).collect();
    loop {
        let m = DMatrix::from_fn(p, p, |r, j| row_of(subset[r])[j]);
        if let Some(inv) = m.clone().lu().try_inverse() {
            for pattern in 0..(1u32 << p) {
                let rhs = DVector::from_fn(p, |r, _| {
                    let (lo, hi) = bounds_of(subset[r]);
                    if pattern & (1 << r) == 0 { lo } else { hi }
                });
                let x = &inv * rhs;
                if feasible(&x) {
                    let v: f64 = (0..p).map(|j| c[j] * x[j]).sum();
                    best = Some(best.map_or(v, |b: f64| b.max(v)));
                }
            }
        }
        // next combination of p out of `objects`
        let mut i = p;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if subset[i] < objects - p + i {
                break;
            }
            if i == 0 && subset[0] >= objects - p {
                return best;
            }
        }
        subset[i] += 1;
        for k in i + 1..p {
            subset[k] = subset[k - 1] + 1;
        }
    }
}

/// Random LP with `p <= 6` columns, `q <= 8` rows and finite bounds
/// everywhere. Most instances are feasible by construction around a random
/// interior point; about one in ten is shifted to be infeasible.
pub fn random_lp(rng: &mut Xoshiro256PlusPlus) -> LpProblem {
    let p = rng.random_range(1..=6);
    let q = rng.random_range(1..=8);
    let c: Vec<f64> = (0..p).map(|_| rng.random_range(-1.0..1.0)).collect();
    let a = DMatrix::from_fn(q, p, |_, _| {
        if rng.random_bool(0.2) { 0.0 } else { rng.random_range(-1.0..1.0) }
    });
    let vl: Vec<f64> = (0..p).map(|_| rng.random_range(-1.0..0.0)).collect();
    let vu: Vec<f64> = vl.iter().map(|l| l + rng.random_range(0.5..2.0)).collect();
    let x0: Vec<f64> = vl.iter().zip(&vu).map(|(l, u)| rng.random_range(*l..*u)).collect();
    let mut rl = Vec::with_capacity(q);
    let mut ru = Vec::with_capacity(q);
    for i in 0..q {
        let v: f64 = (0..p).map(|j| a[(i, j)] * x0[j]).sum();
        if rng.random_bool(0.1) {
            rl.push(v);
            ru.push(v);
        } else {
            rl.push(v - rng.random_range(0.0..1.0));
            ru.push(v + rng.random_range(0.0..1.0));
        }
    }
    if rng.random_bool(0.1) {
        // Push one row interval beyond what the variable box can reach.
        let i = rng.random_range(0..q);
        let reach: f64 = (0..p)
            .map(|j| a[(i, j)].abs() * vl[j].abs().max(vu[j].abs()))
            .sum();
        rl[i] = reach + 1.0;
        ru[i] = reach + 2.0;
    }
    LpProblem::new(c, a, rl, ru).unwrap().with_var_bounds(vl, vu).unwrap()
}

pub fn rng(seed: u64) -> Xoshiro256PlusPlus {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}
