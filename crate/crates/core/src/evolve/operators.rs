//! Real-coded variation: simulated binary crossover and polynomial mutation.

use rand::Rng;

/// Simulated binary crossover on one gene pair. Returns the two children.
pub fn sbx_gene<R: Rng + ?Sized>(p1: f64, p2: f64, eta: f64, rng: &mut R) -> (f64, f64) {
    let u: f64 = rng.gen();
    let beta = if u <= 0.5 {
        (2.0 * u).powf(1.0 / (eta + 1.0))
    } else {
        (1.0 / (2.0 * (1.0 - u))).powf(1.0 / (eta + 1.0))
    };
    (
        0.5 * ((1.0 + beta) * p1 + (1.0 - beta) * p2),
        0.5 * ((1.0 - beta) * p1 + (1.0 + beta) * p2),
    )
}

/// Bounded polynomial mutation of one gene.
pub fn polynomial_mutation<R: Rng + ?Sized>(
    y: f64,
    lo: f64,
    hi: f64,
    eta: f64,
    rng: &mut R,
) -> f64 {
    let width = hi - lo;
    let u: f64 = rng.gen();
    if width <= 0.0 {
        return y;
    }
    let d1 = (y - lo) / width;
    let d2 = (hi - y) / width;
    let pow = 1.0 / (eta + 1.0);
    let dq = if u < 0.5 {
        let v = 2.0 * u + (1.0 - 2.0 * u) * (1.0 - d1).powf(eta + 1.0);
        v.powf(pow) - 1.0
    } else {
        let v = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * (1.0 - d2).powf(eta + 1.0);
        1.0 - v.powf(pow)
    };
    (y + dq * width).clamp(lo, hi)
}

/// Crossover of a parent pair (probability `p_c`, each gene swapped through
/// SBX with probability 1/2) followed by per-gene mutation with probability
/// `p_m`; children are clamped to `bounds`.
#[allow(clippy::too_many_arguments)]
pub fn breed<R: Rng + ?Sized>(
    a: &[f64],
    b: &[f64],
    bounds: &[(f64, f64)],
    p_c: f64,
    p_m: f64,
    eta_c: f64,
    eta_m: f64,
    rng: &mut R,
) -> (Vec<f64>, Vec<f64>) {
    let mut c1 = a.to_vec();
    let mut c2 = b.to_vec();
    if rng.gen::<f64>() < p_c {
        for i in 0..c1.len() {
            if rng.gen::<bool>() && (a[i] - b[i]).abs() > 1e-14 {
                let (x, y) = sbx_gene(a[i], b[i], eta_c, rng);
                c1[i] = x;
                c2[i] = y;
            }
        }
    }
    for child in [&mut c1, &mut c2] {
        for (g, &(lo, hi)) in child.iter_mut().zip(bounds) {
            if p_m > 0.0 && rng.gen::<f64>() < p_m {
                *g = polynomial_mutation(*g, lo, hi, eta_m, rng);
            }
            *g = g.clamp(lo, hi);
        }
    }
    (c1, c2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn degenerate_operators_clone() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let bounds = vec![(-1.0, 1.0); 3];
        let a = vec![0.1, -0.2, 0.3];
        let b = vec![0.5, 0.6, -0.7];
        let (c1, c2) = breed(&a, &b, &bounds, 0.0, 0.0, 15.0, 20.0, &mut rng);
        assert_eq!((c1, c2), (a, b));
    }

    #[test]
    fn zero_width_bounds_freeze_genes() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let bounds = vec![(0.5, 0.5); 4];
        let a = vec![0.5; 4];
        let (c1, c2) = breed(&a, &a, &bounds, 1.0, 1.0, 15.0, 20.0, &mut rng);
        assert_eq!(c1, a);
        assert_eq!(c2, a);
    }

    #[test]
    fn sbx_preserves_pair_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let (x, y) = sbx_gene(0.2, 0.9, 15.0, &mut rng);
            assert!((x + y - 1.1).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn mutation_stays_in_bounds(y in 0.0..1.0f64, seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = polynomial_mutation(y, 0.0, 1.0, 20.0, &mut rng);
            prop_assert!((0.0..=1.0).contains(&m));
        }
    }
}
