//! Model parameters for reflected Brownian motion in the quarter plane,
//! their validation, the wedge/quadrant change of coordinates, and the
//! structural predicates (skew-symmetry, sum-of-exponentials criterion).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default relative tolerance for the discrete predicates.
pub const PREDICATE_TOL: f64 = 1e-9;

/// The triple (Sigma, mu, R) defining the reflected Brownian motion.
///
/// `sigma*` are the covariance entries, `mu*` the interior drift, `r*` the
/// columns of the reflection matrix R = (R^1, R^2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub sigma11: f64,
    pub sigma12: f64,
    pub sigma22: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub r11: f64,
    pub r12: f64,
    pub r21: f64,
    pub r22: f64,
}

/// Reflected Brownian motion in a wedge of opening angle `beta`,
/// with reflection angles `delta` and `epsilon` on the two edges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WedgeParams {
    /// Opening angle, in (0, pi).
    pub beta: f64,
    /// Reflection angle on the edge hit by R^2, in (0, pi).
    pub delta: f64,
    /// Reflection angle on the edge hit by R^1, in (0, pi).
    pub epsilon: f64,
    /// Covariance of the wedge process, row-major [[s11, s12], [s12, s22]].
    pub sigma: [[f64; 2]; 2],
    pub mu: [f64; 2],
    pub r: [[f64; 2]; 2],
}

/// One named stationarity/validity check.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub value: f64,
}

/// Outcome of [`validate`]: every condition is listed, not just the first failure.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
    pub ok: bool,
}

impl ModelParams {
    pub fn new(sigma: [[f64; 2]; 2], mu: [f64; 2], r: [[f64; 2]; 2]) -> Self {
        Self {
            sigma11: sigma[0][0],
            sigma12: sigma[0][1],
            sigma22: sigma[1][1],
            mu1: mu[0],
            mu2: mu[1],
            r11: r[0][0],
            r12: r[0][1],
            r21: r[1][0],
            r22: r[1][1],
        }
    }

    pub fn sigma(&self) -> [[f64; 2]; 2] {
        [[self.sigma11, self.sigma12], [self.sigma12, self.sigma22]]
    }

    pub fn mu(&self) -> [f64; 2] {
        [self.mu1, self.mu2]
    }

    pub fn r(&self) -> [[f64; 2]; 2] {
        [[self.r11, self.r12], [self.r21, self.r22]]
    }

    pub fn det_sigma(&self) -> f64 {
        self.sigma11 * self.sigma22 - self.sigma12 * self.sigma12
    }

    pub fn det_r(&self) -> f64 {
        self.r11 * self.r22 - self.r12 * self.r21
    }

    /// Exchange the roles of the two coordinates:
    /// sigma11 <-> sigma22, mu1 <-> mu2, r11 <-> r22, r12 <-> r21.
    pub fn swap(&self) -> Self {
        Self {
            sigma11: self.sigma22,
            sigma12: self.sigma12,
            sigma22: self.sigma11,
            mu1: self.mu2,
            mu2: self.mu1,
            r11: self.r22,
            r12: self.r21,
            r21: self.r12,
            r22: self.r11,
        }
    }

    pub fn is_finite(&self) -> bool {
        [
            self.sigma11,
            self.sigma12,
            self.sigma22,
            self.mu1,
            self.mu2,
            self.r11,
            self.r12,
            self.r21,
            self.r22,
        ]
        .iter()
        .all(|v| v.is_finite())
    }

    /// Opening angle of the equivalent wedge, `arccos(-sigma12/sqrt(sigma11*sigma22))`.
    pub fn beta(&self) -> f64 {
        (-self.sigma12 / (self.sigma11 * self.sigma22).sqrt()).acos()
    }
}

/// Check positive-definiteness of the covariance, the stationarity inequalities
/// and the negativity of both drift coordinates. Every condition gets its own
/// entry so a CLI user sees all failures at once.
pub fn validate(p: &ModelParams) -> Result<ValidationReport> {
    if !p.is_finite() {
        return Err(Error::NonFinite("model parameters"));
    }
    let checks = vec![
        Check {
            name: "sigma11_positive",
            passed: p.sigma11 > 0.0,
            value: p.sigma11,
        },
        Check {
            name: "sigma22_positive",
            passed: p.sigma22 > 0.0,
            value: p.sigma22,
        },
        Check {
            name: "sigma_det_positive",
            passed: p.det_sigma() > 0.0,
            value: p.det_sigma(),
        },
        Check {
            name: "r11_positive",
            passed: p.r11 > 0.0,
            value: p.r11,
        },
        Check {
            name: "r22_positive",
            passed: p.r22 > 0.0,
            value: p.r22,
        },
        Check {
            name: "det_r_positive",
            passed: p.det_r() > 0.0,
            value: p.det_r(),
        },
        Check {
            name: "r22_mu1_minus_r12_mu2_negative",
            passed: p.r22 * p.mu1 - p.r12 * p.mu2 < 0.0,
            value: p.r22 * p.mu1 - p.r12 * p.mu2,
        },
        Check {
            name: "r11_mu2_minus_r21_mu1_negative",
            passed: p.r11 * p.mu2 - p.r21 * p.mu1 < 0.0,
            value: p.r11 * p.mu2 - p.r21 * p.mu1,
        },
        Check {
            name: "mu1_negative",
            passed: p.mu1 < 0.0,
            value: p.mu1,
        },
        Check {
            name: "mu2_negative",
            passed: p.mu2 < 0.0,
            value: p.mu2,
        },
    ];
    let ok = checks.iter().all(|c| c.passed);
    Ok(ValidationReport { checks, ok })
}

/// Validate and turn failures into an error. Convenience for call sites that
/// only need the happy path.
pub fn require_valid(p: &ModelParams) -> Result<()> {
    let report = validate(p)?;
    if report.ok {
        Ok(())
    } else {
        let failed: Vec<&str> = report
            .checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name)
            .collect();
        Err(Error::InvalidParams(failed.join(", ")))
    }
}

/// Map a quadrant model to the wedge of angle beta with identity covariance.
///
/// The reflection angles come from the sine/cosine pair so they land in
/// (0, pi) unambiguously; the tangent alone is pi-periodic.
pub fn quadrant_to_wedge(p: &ModelParams) -> Result<WedgeParams> {
    require_valid(p)?;
    let beta = p.beta();
    let (sb, cb) = (beta.sin(), beta.cos());
    let a = (p.r12 / p.r22) * (p.sigma22 / p.sigma11).sqrt();
    let b = (p.r21 / p.r11) * (p.sigma11 / p.sigma22).sqrt();
    let delta = sb.atan2(a + cb);
    let epsilon = sb.atan2(b + cb);

    // T = T1 * diag(1/sqrt(sigma11), 1/sqrt(sigma22)) maps the quadrant onto the wedge.
    let (d1, d2) = (p.sigma11.sqrt(), p.sigma22.sqrt());
    let t = [[1.0 / (sb * d1), cb / (sb * d2)], [0.0, 1.0 / d2]];
    let mu = mat_vec(&t, &p.mu());
    let r = mat_mat(&t, &p.r());
    let sigma = mat_mat(&mat_mat(&t, &p.sigma()), &transpose(&t));
    Ok(WedgeParams {
        beta,
        delta,
        epsilon,
        sigma,
        mu,
        r,
    })
}

/// Map a wedge model back to a quadrant model with the transform
/// `Sigma = T1^-1 Sigma~ T1^-T`, `mu = T1^-1 mu~`, `R = T1^-1 R~`.
pub fn wedge_to_quadrant(w: &WedgeParams) -> Result<ModelParams> {
    if !(w.beta > 0.0 && w.beta < std::f64::consts::PI) {
        return Err(Error::InvalidParams(format!(
            "wedge angle {} outside (0, pi): transform is singular",
            w.beta
        )));
    }
    let (sb, cb) = (w.beta.sin(), w.beta.cos());
    let t1_inv = [[sb, -cb], [0.0, 1.0]];
    let sigma = mat_mat(&mat_mat(&t1_inv, &w.sigma), &transpose(&t1_inv));
    if sigma[0][0] <= 0.0 || sigma[0][0] * sigma[1][1] - sigma[0][1] * sigma[0][1] <= 0.0 {
        return Err(Error::InvalidParams(
            "wedge covariance not positive definite".into(),
        ));
    }
    let mu = mat_vec(&t1_inv, &w.mu);
    let r = mat_mat(&t1_inv, &w.r);
    Ok(ModelParams::new(sigma, mu, r))
}

/// Skew-symmetry condition `2*sigma12 = (r21/r11)*sigma11 + (r12/r22)*sigma22`.
pub fn is_skew_symmetric(p: &ModelParams, tol: f64) -> bool {
    let lhs = 2.0 * p.sigma12;
    let t1 = (p.r21 / p.r11) * p.sigma11;
    let t2 = (p.r12 / p.r22) * p.sigma22;
    let scale = lhs
        .abs()
        .max(t1.abs())
        .max(t2.abs())
        .max(p.sigma11)
        .max(p.sigma22);
    (lhs - t1 - t2).abs() <= tol * scale
}

/// Sum-of-exponentials criterion: `(epsilon + delta - pi)/beta` must be a
/// non-positive integer. Returns the integer when the criterion holds.
pub fn dieker_moriarty(p: &ModelParams, tol: f64) -> Result<(bool, Option<i64>)> {
    let w = quadrant_to_wedge(p)?;
    let quantity = (w.epsilon + w.delta - std::f64::consts::PI) / w.beta;
    let nearest = quantity.round();
    let is_int = (quantity - nearest).abs() <= tol * (1.0 + quantity.abs());
    if is_int && nearest <= 0.5 {
        let n = nearest.min(0.0) as i64;
        Ok((true, Some(n)))
    } else {
        Ok((false, None))
    }
}

// --- small dense 2x2 helpers ---

pub(crate) fn mat_vec(m: &[[f64; 2]; 2], v: &[f64; 2]) -> [f64; 2] {
    [
        m[0][0] * v[0] + m[0][1] * v[1],
        m[1][0] * v[0] + m[1][1] * v[1],
    ]
}

pub(crate) fn mat_mat(a: &[[f64; 2]; 2], b: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
    [
        [
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
        ],
        [
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        ],
    ]
}

pub(crate) fn transpose(m: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
    [[m[0][0], m[1][0]], [m[0][1], m[1][1]]]
}

// --- parameter files ---

#[derive(Serialize, Deserialize)]
struct QuadrantFile {
    sigma: [[f64; 2]; 2],
    mu: [f64; 2],
    #[serde(rename = "R")]
    r: [[f64; 2]; 2],
}

#[derive(Serialize, Deserialize)]
struct WedgeFile {
    beta: f64,
    #[serde(default)]
    delta: Option<f64>,
    #[serde(default)]
    epsilon: Option<f64>,
    sigma: [[f64; 2]; 2],
    mu: [f64; 2],
    #[serde(rename = "R")]
    r: [[f64; 2]; 2],
}

/// A parameter file is either a quadrant model or a wedge model; wedge files
/// carry a `beta` key.
pub enum ParamsInput {
    Quadrant(ModelParams),
    Wedge(WedgeParams),
}

impl ParamsInput {
    /// Reduce either representation to a quadrant model.
    pub fn into_quadrant(self) -> Result<ModelParams> {
        match self {
            ParamsInput::Quadrant(p) => Ok(p),
            ParamsInput::Wedge(w) => wedge_to_quadrant(&w),
        }
    }
}

/// Parse a parameter file. Covariance symmetry is enforced.
pub fn parse_params(json: &str) -> Result<ParamsInput> {
    let value: serde_json::Value = serde_json::from_str(json)?;
    let has_beta = value.get("beta").is_some();
    if has_beta {
        let f: WedgeFile = serde_json::from_value(value)?;
        check_symmetric(&f.sigma)?;
        let quad = wedge_to_quadrant(&WedgeParams {
            beta: f.beta,
            delta: f.delta.unwrap_or(f64::NAN),
            epsilon: f.epsilon.unwrap_or(f64::NAN),
            sigma: f.sigma,
            mu: f.mu,
            r: f.r,
        })?;
        // Round-trip through the quadrant model to recover the angles when the
        // file omitted them.
        let w = quadrant_to_wedge(&quad)?;
        Ok(ParamsInput::Wedge(WedgeParams {
            beta: f.beta,
            delta: f.delta.unwrap_or(w.delta),
            epsilon: f.epsilon.unwrap_or(w.epsilon),
            sigma: f.sigma,
            mu: f.mu,
            r: f.r,
        }))
    } else {
        let f: QuadrantFile = serde_json::from_value(value)?;
        check_symmetric(&f.sigma)?;
        Ok(ParamsInput::Quadrant(ModelParams::new(f.sigma, f.mu, f.r)))
    }
}

/// Serialize a quadrant model in the parameter-file layout.
pub fn params_to_json(p: &ModelParams) -> String {
    serde_json::to_string_pretty(&QuadrantFile {
        sigma: p.sigma(),
        mu: p.mu(),
        r: p.r(),
    })
    .expect("serialization of plain floats cannot fail")
}

fn check_symmetric(sigma: &[[f64; 2]; 2]) -> Result<()> {
    let scale = sigma[0][1].abs().max(sigma[1][0].abs()).max(1.0);
    if (sigma[0][1] - sigma[1][0]).abs() > 1e-12 * scale {
        return Err(Error::InvalidParams(
            "covariance matrix not symmetric".into(),
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    pub(crate) fn identity_model() -> ModelParams {
        ModelParams::new(
            [[1.0, 0.0], [0.0, 1.0]],
            [-1.0, -1.0],
            [[1.0, 0.0], [0.0, 1.0]],
        )
    }

    #[test]
    fn validate_identity_all_pass() {
        let report = validate(&identity_model()).unwrap();
        assert!(report.ok);
        assert!(report.checks.iter().all(|c| c.passed));
    }

    #[test]
    fn validate_flags_positive_drift() {
        let mut p = identity_model();
        p.mu1 = 1.0;
        let report = validate(&p).unwrap();
        assert!(!report.ok);
        let failed: Vec<_> = report
            .checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name)
            .collect();
        assert!(failed.contains(&"mu1_negative"));
    }

    #[test]
    fn validate_flags_reflection_determinant() {
        let mut p = identity_model();
        p.r12 = 2.0;
        p.r21 = 2.0;
        let report = validate(&p).unwrap();
        assert!(!report.ok);
        assert!(report
            .checks
            .iter()
            .any(|c| c.name == "det_r_positive" && !c.passed));
    }

    #[test]
    fn validate_rejects_non_finite() {
        let mut p = identity_model();
        p.sigma12 = f64::NAN;
        assert!(matches!(validate(&p), Err(Error::NonFinite(_))));
    }

    #[test]
    fn wedge_angles_identity() {
        let w = quadrant_to_wedge(&identity_model()).unwrap();
        assert_relative_eq!(w.beta, PI / 2.0, max_relative = 1e-14);
        assert_relative_eq!(w.delta, PI / 2.0, max_relative = 1e-14);
        assert_relative_eq!(w.epsilon, PI / 2.0, max_relative = 1e-14);
    }

    #[test]
    fn beta_continuous_at_diagonal_covariance() {
        let mut p = identity_model();
        p.sigma12 = -1e-12;
        let w = quadrant_to_wedge(&p).unwrap();
        assert_relative_eq!(w.beta, PI / 2.0, epsilon = 1e-11);
    }

    #[test]
    fn beta_pi_over_three() {
        let p = ModelParams::new(
            [[1.0, -0.5], [-0.5, 1.0]],
            [-1.0, -1.0],
            [[1.0, 0.0], [0.0, 1.0]],
        );
        let w = quadrant_to_wedge(&p).unwrap();
        assert_relative_eq!(w.beta, PI / 3.0, max_relative = 1e-14);
    }

    #[test]
    fn wedge_to_quadrant_right_angle_is_identity_transform() {
        let w = WedgeParams {
            beta: PI / 2.0,
            delta: PI / 2.0,
            epsilon: PI / 2.0,
            sigma: [[1.0, 0.0], [0.0, 1.0]],
            mu: [-0.3, -0.7],
            r: [[1.0, 0.2], [-0.1, 1.0]],
        };
        let q = wedge_to_quadrant(&w).unwrap();
        assert_relative_eq!(q.sigma11, 1.0, max_relative = 1e-14);
        assert_relative_eq!(q.sigma12, 0.0, epsilon = 1e-14);
        assert_relative_eq!(q.mu1, -0.3, max_relative = 1e-14);
        assert_relative_eq!(q.r21, -0.1, max_relative = 1e-14);
    }

    #[test]
    fn wedge_to_quadrant_pi_over_three_covariance() {
        let w = WedgeParams {
            beta: PI / 3.0,
            delta: PI / 2.0,
            epsilon: PI / 2.0,
            sigma: [[1.0, 0.0], [0.0, 1.0]],
            mu: [-1.0, -1.0],
            r: [[1.0, 0.0], [0.0, 1.0]],
        };
        let q = wedge_to_quadrant(&w).unwrap();
        assert_relative_eq!(q.sigma11, 1.0, max_relative = 1e-14);
        assert_relative_eq!(q.sigma22, 1.0, max_relative = 1e-14);
        assert_relative_eq!(q.sigma12, -0.5, max_relative = 1e-14);
        assert_relative_eq!(q.beta(), PI / 3.0, max_relative = 1e-12);
    }

    #[test]
    fn wedge_to_quadrant_rejects_degenerate_angle() {
        let w = WedgeParams {
            beta: PI,
            delta: PI / 2.0,
            epsilon: PI / 2.0,
            sigma: [[1.0, 0.0], [0.0, 1.0]],
            mu: [-1.0, -1.0],
            r: [[1.0, 0.0], [0.0, 1.0]],
        };
        assert!(wedge_to_quadrant(&w).is_err());
    }

    #[test]
    fn skew_symmetry_cases() {
        assert!(is_skew_symmetric(&identity_model(), PREDICATE_TOL));

        let mut p = identity_model();
        p.r21 = 1.0; // 0 != 1 + 0
        assert!(!is_skew_symmetric(&p, PREDICATE_TOL));

        let p = ModelParams::new(
            [[1.0, 0.5], [0.5, 1.0]],
            [-1.0, -2.0],
            [[1.0, 0.0], [1.0, 1.0]],
        );
        assert!(is_skew_symmetric(&p, PREDICATE_TOL));
    }

    #[test]
    fn dieker_moriarty_identity_is_zero() {
        let (hit, n) = dieker_moriarty(&identity_model(), PREDICATE_TOL).unwrap();
        assert!(hit);
        assert_eq!(n, Some(0));
    }

    #[test]
    fn dieker_moriarty_skew_is_zero() {
        let p = ModelParams::new(
            [[1.0, 0.5], [0.5, 1.0]],
            [-1.0, -2.0],
            [[1.0, 0.0], [1.0, 1.0]],
        );
        assert!(is_skew_symmetric(&p, PREDICATE_TOL));
        let (hit, n) = dieker_moriarty(&p, PREDICATE_TOL).unwrap();
        assert!(hit);
        assert_eq!(n, Some(0));
    }

    #[test]
    fn dieker_moriarty_generic_is_false() {
        let p = ModelParams::new(
            [[1.0, 0.3], [0.3, 1.3]],
            [-0.9, -1.4],
            [[1.0, 0.17], [-0.23, 1.0]],
        );
        let (hit, n) = dieker_moriarty(&p, PREDICATE_TOL).unwrap();
        assert!(!hit);
        assert_eq!(n, None);
    }

    #[test]
    fn params_json_roundtrip() {
        let p = identity_model();
        let json = params_to_json(&p);
        match parse_params(&json).unwrap() {
            ParamsInput::Quadrant(q) => assert_eq!(p, q),
            _ => panic!("expected quadrant params"),
        }
    }

    #[test]
    fn wedge_file_parses() {
        let json = r#"{"beta": 1.0471975511965976, "sigma": [[1,0],[0,1]],
                       "mu": [-1,-1], "R": [[1,0],[0,1]]}"#;
        match parse_params(json).unwrap() {
            ParamsInput::Wedge(w) => {
                assert_relative_eq!(w.beta, PI / 3.0, max_relative = 1e-12);
                let q = wedge_to_quadrant(&w).unwrap();
                assert_relative_eq!(q.sigma12, -0.5, max_relative = 1e-12);
            }
            _ => panic!("expected wedge params"),
        }
    }
}
