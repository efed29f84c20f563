//! Seeded pseudo-random sampling with a stable, dependency-free generator.
//!
//! Reproducibility across runs and platforms is part of the crate's contract
//! (CSV outputs must be bitwise identical for identical seeds), so sampling is
//! built on splitmix64 rather than an external RNG whose stream may change
//! between releases.

use crate::linalg;

#[derive(Debug, Clone)]
pub struct Rng {
    state: u64,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1).
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Standard normal via Box-Muller. One draw per call; the spare is discarded
    /// so the stream position stays easy to reason about.
    pub fn standard_normal(&mut self) -> f64 {
        let u1 = loop {
            let u = self.uniform();
            if u > 0.0 {
                break u;
            }
        };
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    pub fn unit_vector(&mut self, dim: usize) -> Vec<f64> {
        loop {
            let v: Vec<f64> = (0..dim).map(|_| self.standard_normal()).collect();
            let n = linalg::norm(&v);
            if n > 1e-12 {
                return linalg::scaled(1.0 / n, &v);
            }
        }
    }

    /// Uniform in the closed ball of the given radius around `center`.
    pub fn in_ball(&mut self, center: &[f64], radius: f64) -> Vec<f64> {
        let dim = center.len();
        let dir = self.unit_vector(dim);
        let r = radius * self.uniform().powf(1.0 / dim as f64);
        center.iter().zip(&dir).map(|(c, d)| c + r * d).collect()
    }
}

/// Orthonormal matrix from Gram-Schmidt on a Gaussian matrix. Used to build
/// norm-preserving disturbance directions and rotated test problems.
pub fn random_orthogonal(rng: &mut Rng, dim: usize) -> Vec<Vec<f64>> {
    loop {
        let mut q: Vec<Vec<f64>> = Vec::with_capacity(dim);
        let mut ok = true;
        for _ in 0..dim {
            let mut v: Vec<f64> = (0..dim).map(|_| rng.standard_normal()).collect();
            for prev in &q {
                let c = linalg::dot(&v, prev);
                linalg::axpy(-c, prev, &mut v);
            }
            let n = linalg::norm(&v);
            if n < 1e-8 {
                ok = false;
                break;
            }
            q.push(linalg::scaled(1.0 / n, &v));
        }
        if ok {
            return q;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{dot, norm};

    #[test]
    fn deterministic_stream() {
        let mut a = Rng::new(7);
        let mut b = Rng::new(7);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn ball_samples_stay_inside() {
        let mut rng = Rng::new(3);
        let center = [1.0, -2.0, 0.5];
        for _ in 0..1000 {
            let x = rng.in_ball(&center, 4.0);
            let d: f64 = x
                .iter()
                .zip(&center)
                .map(|(a, c)| (a - c) * (a - c))
                .sum::<f64>()
                .sqrt();
            assert!(d <= 4.0 + 1e-12);
        }
    }

    #[test]
    fn orthogonal_matrix_preserves_norm() {
        let mut rng = Rng::new(11);
        let q = random_orthogonal(&mut rng, 5);
        for i in 0..5 {
            for j in 0..5 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((dot(&q[i], &q[j]) - expect).abs() < 1e-12);
            }
        }
        let x = rng.in_ball(&[0.0; 5], 3.0);
        let qx = crate::linalg::matvec(&q, &x);
        assert!((norm(&qx) - norm(&x)).abs() < 1e-12);
    }
}
