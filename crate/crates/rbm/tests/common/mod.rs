//! Shared random-model generators for the integration suites. Everything is
//! seeded, so failures reproduce exactly.
#![allow(dead_code)] // each test target uses its own subset

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use rbm::model::ModelParams;

pub fn rng(seed: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(seed)
}

/// A random model satisfying the stationarity inequalities with comfortable
/// margins, so quadrature-based checks are not run arbitrarily close to the
/// degenerate boundaries.
pub fn random_valid_model(rng: &mut ChaCha12Rng) -> ModelParams {
    loop {
        let s11: f64 = rng.gen_range(0.6..1.8);
        let s22: f64 = rng.gen_range(0.6..1.8);
        let rho: f64 = rng.gen_range(-0.7..0.7);
        let s12 = rho * (s11 * s22).sqrt();
        let mu1 = -rng.gen_range(0.25..1.8);
        let mu2 = -rng.gen_range(0.25..1.8);
        let r12 = rng.gen_range(-0.8..0.8);
        let r21 = rng.gen_range(-0.8..0.8);
        let p = ModelParams::new(
            [[s11, s12], [s12, s22]],
            [mu1, mu2],
            [[1.0, r12], [r21, 1.0]],
        );
        if p.det_r() < 0.2 {
            continue;
        }
        if p.r22 * p.mu1 - p.r12 * p.mu2 > -0.05 || p.r11 * p.mu2 - p.r21 * p.mu1 > -0.05 {
            continue;
        }
        // keep a margin to the tangency boundary so the index regime is stable
        if let Ok(g) = rbm::KernelGeometry::compute(&p) {
            let scale = g.scale();
            if g.gamma1_at_tangency.abs() > 1e-4 * scale {
                return p;
            }
        }
    }
}

/// Random model with orthogonal reflection (identity matrix).
pub fn random_orthogonal_model(rng: &mut ChaCha12Rng) -> ModelParams {
    loop {
        let s11: f64 = rng.gen_range(0.6..1.8);
        let s22: f64 = rng.gen_range(0.6..1.8);
        let rho: f64 = rng.gen_range(-0.7..0.7);
        let s12 = rho * (s11 * s22).sqrt();
        let mu1 = -rng.gen_range(0.25..1.8);
        let mu2 = -rng.gen_range(0.25..1.8);
        let p = ModelParams::new(
            [[s11, s12], [s12, s22]],
            [mu1, mu2],
            [[1.0, 0.0], [0.0, 1.0]],
        );
        if rbm::KernelGeometry::compute(&p).is_ok() {
            return p;
        }
    }
}

/// Random skew-symmetric model: the covariance off-diagonal is forced by the
/// reflection entries.
pub fn random_skew_model(rng: &mut ChaCha12Rng) -> ModelParams {
    loop {
        let s11: f64 = rng.gen_range(0.7..1.6);
        let s22: f64 = rng.gen_range(0.7..1.6);
        let r12: f64 = rng.gen_range(-0.6..0.6);
        let r21: f64 = rng.gen_range(-0.6..0.6);
        let s12: f64 = 0.5 * (r21 * s11 + r12 * s22);
        if s12.abs() > 0.7 * (s11 * s22).sqrt() {
            continue;
        }
        let mu1 = -rng.gen_range(0.3..1.6);
        let mu2 = -rng.gen_range(0.3..1.6);
        let p = ModelParams::new(
            [[s11, s12], [s12, s22]],
            [mu1, mu2],
            [[1.0, r12], [r21, 1.0]],
        );
        if p.det_r() < 0.3 {
            continue;
        }
        if p.r22 * p.mu1 - p.r12 * p.mu2 > -0.05 || p.r11 * p.mu2 - p.r21 * p.mu1 > -0.05 {
            continue;
        }
        if !rbm::model::is_skew_symmetric(&p, 1e-9) {
            continue;
        }
        if let Ok(g) = rbm::KernelGeometry::compute(&p) {
            if g.gamma1_at_tangency.abs() > 1e-4 * g.scale() {
                return p;
            }
        }
    }
}
