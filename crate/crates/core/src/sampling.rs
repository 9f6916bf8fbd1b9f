//! Seeded random starting points near a known solution.
//!
//! The generator is `Xoshiro256PlusPlus` seeded through `seed_from_u64`,
//! which expands the seed with SplitMix64. Directions are normalized
//! standard normal vectors, radii `r * U^(1/d)`.

use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::error::ProblemError;
use crate::model::{Iterate, Problem};

pub type StartRng = Xoshiro256PlusPlus;

pub fn start_rng(seed: u64) -> StartRng {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}

/// Uniform sample from the Euclidean ball of `radius` around `center`.
pub fn uniform_in_ball<R: Rng + ?Sized>(rng: &mut R, center: &[f64], radius: f64) -> Vec<f64> {
    let d = center.len();
    if d == 0 {
        return Vec::new();
    }
    let dir = loop {
        let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|x: &f64| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            break v.into_iter().map(|x| x / norm).collect::<Vec<_>>();
        }
    };
    let u: f64 = rng.random();
    let r = radius * u.powf(1.0 / d as f64);
    center.iter().zip(dir).map(|(c, x)| c + r * x).collect()
}

/// `z` uniform in the ball of `radius` around `z*`; `lambda` a uniformly
/// chosen multiplier vertex plus a uniform perturbation of the same radius,
/// clamped to be non-negative.
pub fn perturbed_start<R: Rng + ?Sized>(p: &Problem, radius: f64, rng: &mut R) -> Result<Iterate, ProblemError> {
    let gt = p.metadata().ok_or(ProblemError::MetadataAbsent)?;
    let z = uniform_in_ball(rng, &gt.z_star, radius);
    let vertex = &gt.slam_vertices[rng.random_range(0..gt.slam_vertices.len())];
    let lambda = uniform_in_ball(rng, vertex, radius)
        .into_iter()
        .map(|l| l.max(0.0))
        .collect();
    Ok(Iterate::new(z, lambda)?)
}

/// [`perturbed_start`] with a fresh generator for `seed`.
pub fn perturbed_start_seeded(p: &Problem, radius: f64, seed: u64) -> Result<Iterate, ProblemError> {
    perturbed_start(p, radius, &mut start_rng(seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{distance_to_solution, get_problem, REGISTRY};

    #[test]
    fn samples_stay_in_ball() {
        let mut rng = start_rng(3);
        for _ in 0..1000 {
            let v = uniform_in_ball(&mut rng, &[1.0, -2.0, 0.5], 0.1);
            let d: f64 = v.iter().zip([1.0, -2.0, 0.5]).map(|(a, b)| (a - b) * (a - b)).sum();
            assert!(d.sqrt() <= 0.1 + 1e-15);
        }
    }

    #[test]
    fn radius_distribution_is_uniform_in_volume() {
        // P(r <= R/2) = 1/4 in two dimensions.
        let mut rng = start_rng(11);
        let inside = (0..20000)
            .filter(|_| {
                let v = uniform_in_ball(&mut rng, &[0.0, 0.0], 1.0);
                v[0] * v[0] + v[1] * v[1] <= 0.25
            })
            .count();
        let frac = inside as f64 / 20000.0;
        assert!((frac - 0.25).abs() < 0.015, "{frac}");
    }

    #[test]
    fn perturbed_starts_are_close_and_reproducible() {
        for name in REGISTRY {
            let p = get_problem(name).unwrap();
            for seed in 0..50 {
                let a = perturbed_start_seeded(&p, 1e-3, seed).unwrap();
                let b = perturbed_start_seeded(&p, 1e-3, seed).unwrap();
                assert_eq!(a, b);
                assert!(a.lambda().iter().all(|l| *l >= 0.0));
                let d = distance_to_solution(&p, &a).unwrap();
                assert!(d <= 2f64.sqrt() * 1e-3 + 1e-15, "{name} {d}");
            }
        }
    }

    #[test]
    fn metadata_required() {
        let p = get_problem("weak1").unwrap();
        let bare = Problem::new("x", p.objective().clone(), p.constraints().to_vec(), None).unwrap();
        assert_eq!(
            perturbed_start_seeded(&bare, 1e-3, 0),
            Err(ProblemError::MetadataAbsent)
        );
    }
}
