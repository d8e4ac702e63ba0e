//! Monte Carlo oracle: Euler steps of the reflected stochastic differential
//! equation, with each boundary crossing resolved by the exact small-step
//! complementarity problem `Z = Z_free + R dL, dL >= 0, Z >= 0, dL . Z = 0`.
//! Everything downstream of the analytic machinery can be cross-checked
//! against the sample estimates produced here.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{self, ModelParams};

type C = Complex64;

#[derive(Debug, Clone, Copy)]
pub struct SimConfig {
    pub step_h: f64,
    pub horizon_t: f64,
    pub burn_in: f64,
    pub n_paths: usize,
    pub master_seed: u64,
}

impl Default for SimConfig {
    /// The step default is calibrated against the scheme's boundary bias:
    /// discretely reflected Euler walks sit about `0.47 sqrt(h)` too close to
    /// the axes (measured on the exponential closed form), so the default
    /// keeps that bias inside the statistical band of a 10^4-path estimate.
    fn default() -> Self {
        SimConfig {
            step_h: 5e-5,
            horizon_t: 51.0,
            burn_in: 50.0,
            n_paths: 10_000,
            master_seed: 0x5eed_0001,
        }
    }
}

impl SimConfig {
    #[allow(clippy::neg_cmp_op_on_partial_ord)] // NaN must fail these checks
    pub fn validate(&self) -> Result<()> {
        if !(self.step_h > 0.0 && self.step_h.is_finite()) {
            return Err(Error::InvalidConfig("step_h must be positive".into()));
        }
        if !(self.burn_in > 10.0 * self.step_h) {
            return Err(Error::InvalidConfig(
                "burn_in must be much larger than step_h".into(),
            ));
        }
        if !(self.horizon_t >= self.burn_in + 1.0) {
            return Err(Error::InvalidConfig(
                "horizon_t must leave a unit measurement window after burn_in".into(),
            ));
        }
        if self.n_paths == 0 {
            return Err(Error::InvalidConfig("n_paths must be at least 1".into()));
        }
        Ok(())
    }
}

/// Terminal state of one path plus its local-time increments over the final
/// unit time window.
#[derive(Debug, Clone, Copy)]
pub struct PathSample {
    pub z: [f64; 2],
    pub local_time_window: [f64; 2],
}

/// One reflection step: given the freely stepped point, find `dL >= 0` with
/// `z_new = z_free + R dL >= 0` and `dL_i z_new_i = 0`. With positive
/// diagonal and positive determinant R is a P-matrix, so the solution is
/// unique and one of the three binding patterns applies.
pub fn lcp_reflect(r: &[[f64; 2]; 2], z_free: [f64; 2]) -> Result<([f64; 2], [f64; 2])> {
    const EPS: f64 = 1e-12;
    let [zf1, zf2] = z_free;
    if zf1 >= 0.0 && zf2 >= 0.0 {
        return Ok(([zf1, zf2], [0.0, 0.0]));
    }
    // only the first constraint binds
    if zf1 < 0.0 {
        let dl1 = -zf1 / r[0][0];
        let z2 = zf2 + r[1][0] * dl1;
        if z2 >= -EPS {
            return Ok(([0.0, z2.max(0.0)], [dl1, 0.0]));
        }
    }
    // only the second constraint binds
    if zf2 < 0.0 {
        let dl2 = -zf2 / r[1][1];
        let z1 = zf1 + r[0][1] * dl2;
        if z1 >= -EPS {
            return Ok(([z1.max(0.0), 0.0], [0.0, dl2]));
        }
    }
    // both bind: R dL = -z_free
    let det = r[0][0] * r[1][1] - r[0][1] * r[1][0];
    let dl1 = (-zf1 * r[1][1] + zf2 * r[0][1]) / det;
    let dl2 = (-zf2 * r[0][0] + zf1 * r[1][0]) / det;
    if dl1 >= -EPS && dl2 >= -EPS {
        return Ok(([0.0, 0.0], [dl1.max(0.0), dl2.max(0.0)]));
    }
    Err(Error::LcpInfeasible)
}

fn cholesky2(p: &ModelParams) -> [[f64; 2]; 2] {
    let l11 = p.sigma11.sqrt();
    let l21 = p.sigma12 / l11;
    let l22 = (p.sigma22 - l21 * l21).sqrt();
    [[l11, 0.0], [l21, l22]]
}

fn path_seed(master: u64, index: u64) -> u64 {
    // splitmix64 of the counter, xored into the master seed
    let mut x = master ^ (index.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Simulate all paths. Each path derives its own counter-based seed, so the
/// ensemble is bit-identical for a given config regardless of how many
/// workers run it.
pub fn simulate(params: &ModelParams, config: &SimConfig) -> Result<Vec<PathSample>> {
    model::require_valid(params)?;
    config.validate()?;
    let chol = cholesky2(params);
    let h = config.step_h;
    let sqrt_h = h.sqrt();
    let n_steps = (config.horizon_t / h).round() as u64;
    let window_start = ((config.horizon_t - 1.0) / h).round() as u64;
    let r = params.r();
    let drift = [params.mu1 * h, params.mu2 * h];

    let samples: Vec<Result<PathSample>> = (0..config.n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha12Rng::seed_from_u64(path_seed(config.master_seed, i));
            let mut z = [0.0_f64; 2];
            let mut window = [0.0_f64; 2];
            for k in 0..n_steps {
                let g1: f64 = StandardNormal.sample(&mut rng);
                let g2: f64 = StandardNormal.sample(&mut rng);
                let z_free = [
                    z[0] + drift[0] + sqrt_h * (chol[0][0] * g1),
                    z[1] + drift[1] + sqrt_h * (chol[1][0] * g1 + chol[1][1] * g2),
                ];
                let (z_new, dl) = lcp_reflect(&r, z_free)?;
                z = z_new;
                if k >= window_start {
                    window[0] += dl[0];
                    window[1] += dl[1];
                }
            }
            Ok(PathSample {
                z,
                local_time_window: window,
            })
        })
        .collect();
    samples.into_iter().collect()
}

/// Sample estimate of `E exp(theta . Z)` with its standard error.
pub fn estimate_phi(samples: &[PathSample], theta: (C, C)) -> Result<(C, f64)> {
    if theta.0.re > 0.0 || theta.1.re > 0.0 {
        return Err(Error::OutsideDomain(
            "estimate_phi needs Re theta <= 0 (bounded integrand)".into(),
        ));
    }
    let n = samples.len() as f64;
    let mut mean = C::new(0.0, 0.0);
    for s in samples {
        mean += (theta.0 * s.z[0] + theta.1 * s.z[1]).exp();
    }
    mean /= n;
    let mut var = 0.0;
    for s in samples {
        let d = (theta.0 * s.z[0] + theta.1 * s.z[1]).exp() - mean;
        var += d.norm_sqr();
    }
    var /= (n - 1.0).max(1.0);
    Ok((mean, (var / n).sqrt()))
}

/// Mean local-time increments over the unit window, per axis, with standard
/// errors.
pub fn estimate_boundary_masses(samples: &[PathSample]) -> ([f64; 2], [f64; 2]) {
    let n = samples.len() as f64;
    let mut mean = [0.0_f64; 2];
    for s in samples {
        mean[0] += s.local_time_window[0];
        mean[1] += s.local_time_window[1];
    }
    mean[0] /= n;
    mean[1] /= n;
    let mut var = [0.0_f64; 2];
    for s in samples {
        var[0] += (s.local_time_window[0] - mean[0]).powi(2);
        var[1] += (s.local_time_window[1] - mean[1]).powi(2);
    }
    let denom = (n - 1.0).max(1.0);
    (
        [mean[0], mean[1]],
        [(var[0] / denom / n).sqrt(), (var[1] / denom / n).sqrt()],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn identity_model() -> ModelParams {
        ModelParams::new(
            [[1.0, 0.0], [0.0, 1.0]],
            [-1.0, -1.0],
            [[1.0, 0.0], [0.0, 1.0]],
        )
    }

    fn small_config() -> SimConfig {
        SimConfig {
            step_h: 1e-3,
            horizon_t: 11.0,
            burn_in: 10.0,
            n_paths: 400,
            master_seed: 42,
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let p = identity_model();
        let a = simulate(&p, &small_config()).unwrap();
        let b = simulate(&p, &small_config()).unwrap();
        for (x, y) in a.iter().zip(b.iter()) {
            assert_eq!(x.z, y.z);
            assert_eq!(x.local_time_window, y.local_time_window);
        }
    }

    #[test]
    fn deterministic_across_worker_counts() {
        let p = identity_model();
        let cfg = small_config();
        let pool1 = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let pool4 = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap();
        let a = pool1.install(|| simulate(&p, &cfg)).unwrap();
        let b = pool4.install(|| simulate(&p, &cfg)).unwrap();
        for (x, y) in a.iter().zip(b.iter()) {
            assert_eq!(x.z, y.z);
            assert_eq!(x.local_time_window, y.local_time_window);
        }
    }

    #[test]
    fn samples_stay_in_quadrant() {
        let p = ModelParams::new(
            [[1.0, 0.4], [0.4, 1.2]],
            [-0.8, -1.1],
            [[1.0, 0.3], [0.2, 1.0]],
        );
        for s in simulate(&p, &small_config()).unwrap() {
            assert!(s.z[0] >= 0.0 && s.z[1] >= 0.0);
            assert!(s.local_time_window[0] >= 0.0 && s.local_time_window[1] >= 0.0);
        }
    }

    #[test]
    fn lcp_complementarity_random_cases() {
        let r = [[1.0, 0.4], [-0.3, 1.0]];
        let mut state = 1234567u64;
        let mut next = || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 33) as f64 / (1u64 << 31) as f64) - 1.0
        };
        for _ in 0..2000 {
            let zf = [2.0 * next(), 2.0 * next()];
            let (z, dl) = lcp_reflect(&r, zf).unwrap();
            assert!(z[0] >= 0.0 && z[1] >= 0.0);
            assert!(dl[0] >= 0.0 && dl[1] >= 0.0);
            assert!(dl[0] * z[0] <= 1e-10 && dl[1] * z[1] <= 1e-10);
            let back = [
                z[0] - r[0][0] * dl[0] - r[0][1] * dl[1],
                z[1] - r[1][0] * dl[0] - r[1][1] * dl[1],
            ];
            assert!((back[0] - zf[0]).abs() < 1e-12 && (back[1] - zf[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_noise_collapses_to_corner() {
        let p = ModelParams::new(
            [[1e-12, 0.0], [0.0, 1e-12]],
            [-1.0, -1.0],
            [[1.0, 0.0], [0.0, 1.0]],
        );
        let cfg = SimConfig {
            n_paths: 3,
            ..small_config()
        };
        for s in simulate(&p, &cfg).unwrap() {
            assert!(s.z[0].abs() < 1e-4 && s.z[1].abs() < 1e-4);
            // drift into the corner is absorbed by the local time
            assert_relative_eq!(s.local_time_window[0], 1.0, epsilon = 1e-2);
            assert_relative_eq!(s.local_time_window[1], 1.0, epsilon = 1e-2);
        }
    }

    #[test]
    fn estimates_on_identity_model() {
        let p = identity_model();
        let cfg = SimConfig {
            step_h: 1e-3,
            horizon_t: 21.0,
            burn_in: 20.0,
            n_paths: 2500,
            master_seed: 7,
        };
        let samples = simulate(&p, &cfg).unwrap();
        // stationary density 4 e^{-2 x1 - 2 x2}: mean (1/2, 1/2)
        let mean_z: [f64; 2] = samples.iter().fold([0.0, 0.0], |m, s| {
            [
                m[0] + s.z[0] / cfg.n_paths as f64,
                m[1] + s.z[1] / cfg.n_paths as f64,
            ]
        });
        assert_relative_eq!(mean_z[0], 0.5, epsilon = 0.05);
        assert_relative_eq!(mean_z[1], 0.5, epsilon = 0.05);

        let (phi, se) = estimate_phi(&samples, (C::new(-1.0, 0.0), C::new(-1.0, 0.0))).unwrap();
        assert!((phi.re - 4.0 / 9.0).abs() < 4.0 * se + 0.01);

        let (phi0, _) = estimate_phi(&samples, (C::new(0.0, 0.0), C::new(0.0, 0.0))).unwrap();
        assert_eq!(phi0.re, 1.0);

        let (masses, se_m) = estimate_boundary_masses(&samples);
        assert!((masses[0] - 1.0).abs() < 4.0 * se_m[0] + 0.05);
        assert!((masses[1] - 1.0).abs() < 4.0 * se_m[1] + 0.05);
    }

    #[test]
    fn halving_step_moves_estimate_within_band() {
        let p = identity_model();
        let coarse = SimConfig {
            step_h: 2e-3,
            horizon_t: 16.0,
            burn_in: 15.0,
            n_paths: 2000,
            master_seed: 11,
        };
        let fine = SimConfig {
            step_h: 1e-3,
            ..coarse
        };
        let theta = (C::new(-1.0, 0.0), C::new(-1.0, 0.0));
        let (a, se_a) = estimate_phi(&simulate(&p, &coarse).unwrap(), theta).unwrap();
        let (b, se_b) = estimate_phi(&simulate(&p, &fine).unwrap(), theta).unwrap();
        assert!((a - b).norm() < 2.0 * (se_a + se_b) + 5e-3);
    }

    #[test]
    fn positive_real_part_refused() {
        let samples = vec![PathSample {
            z: [0.1, 0.2],
            local_time_window: [0.0, 0.0],
        }];
        assert!(estimate_phi(&samples, (C::new(0.1, 0.0), C::new(0.0, 0.0))).is_err());
    }

    #[test]
    fn config_validation() {
        let bad = SimConfig {
            horizon_t: 50.2,
            ..SimConfig::default()
        };
        assert!(bad.validate().is_err());
        assert!(SimConfig::default().validate().is_ok());
    }
}
