//! The kernel gamma, the boundary polynomials gamma1/gamma2, their algebraic
//! branch functions, branch points, and the distinguished points p, p', q.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{self, ModelParams};

type C = Complex64;

/// Kernel `gamma(theta) = (theta . Sigma theta)/2 + theta . mu`.
pub fn gamma(p: &ModelParams, t1: C, t2: C) -> C {
    0.5 * (p.sigma11 * t1 * t1 + 2.0 * p.sigma12 * t1 * t2 + p.sigma22 * t2 * t2)
        + p.mu1 * t1
        + p.mu2 * t2
}

/// `gamma1(theta) = R^1 . theta`.
pub fn gamma1(p: &ModelParams, t1: C, t2: C) -> C {
    p.r11 * t1 + p.r21 * t2
}

/// `gamma2(theta) = R^2 . theta`.
pub fn gamma2(p: &ModelParams, t1: C, t2: C) -> C {
    p.r12 * t1 + p.r22 * t2
}

pub fn gamma1_real(p: &ModelParams, t1: f64, t2: f64) -> f64 {
    p.r11 * t1 + p.r21 * t2
}

pub fn gamma2_real(p: &ModelParams, t1: f64, t2: f64) -> f64 {
    p.r12 * t1 + p.r22 * t2
}

pub fn gamma_real(p: &ModelParams, t1: f64, t2: f64) -> f64 {
    0.5 * (p.sigma11 * t1 * t1 + 2.0 * p.sigma12 * t1 * t2 + p.sigma22 * t2 * t2)
        + p.mu1 * t1
        + p.mu2 * t2
}

/// Discriminant of `gamma(., theta2) = 0` seen as a quadratic in theta1.
pub fn theta1_discriminant(p: &ModelParams, t2: C) -> C {
    t2 * t2 * (p.sigma12 * p.sigma12 - p.sigma11 * p.sigma22)
        + 2.0 * t2 * (p.mu1 * p.sigma12 - p.mu2 * p.sigma11)
        + p.mu1 * p.mu1
}

/// Discriminant of `gamma(theta1, .) = 0` seen as a quadratic in theta2.
pub fn theta2_discriminant(p: &ModelParams, t1: C) -> C {
    t1 * t1 * (p.sigma12 * p.sigma12 - p.sigma11 * p.sigma22)
        + 2.0 * t1 * (p.mu2 * p.sigma12 - p.mu1 * p.sigma22)
        + p.mu2 * p.mu2
}

/// Both branches of the algebraic function `Theta1` solving
/// `gamma(Theta1(theta2), theta2) = 0`. The minus branch uses the principal
/// square root, which makes it the small branch (value 0 at 0) under
/// negative drift.
pub fn theta1_branches(p: &ModelParams, t2: C) -> (C, C) {
    let s = theta1_discriminant(p, t2).sqrt();
    let b = -(p.sigma12 * t2 + p.mu1);
    ((b - s) / p.sigma11, (b + s) / p.sigma11)
}

/// Both branches of `Theta2` solving `gamma(theta1, Theta2(theta1)) = 0`.
pub fn theta2_branches(p: &ModelParams, t1: C) -> (C, C) {
    let s = theta2_discriminant(p, t1).sqrt();
    let b = -(p.sigma12 * t1 + p.mu2);
    ((b - s) / p.sigma22, (b + s) / p.sigma22)
}

/// Real branches of Theta2 at a real abscissa inside `[theta1_minus, theta1_plus]`.
/// Returns `(lower, upper)` or `None` when the discriminant is negative.
/// Rounding-level negative discriminants (an abscissa sitting on a branch
/// point) count as zero.
pub fn theta2_branches_real(p: &ModelParams, t1: f64) -> Option<(f64, f64)> {
    let d = theta2_discriminant(p, C::new(t1, 0.0)).re;
    let m = (t1 * t1 * (p.sigma12 * p.sigma12 - p.sigma11 * p.sigma22)).abs()
        + (2.0 * t1 * (p.mu2 * p.sigma12 - p.mu1 * p.sigma22)).abs()
        + p.mu2 * p.mu2;
    if d < -1e-12 * m {
        return None;
    }
    let s = d.max(0.0).sqrt();
    let b = -(p.sigma12 * t1 + p.mu2);
    Some(((b - s) / p.sigma22, (b + s) / p.sigma22))
}

/// Real branches of Theta1 at a real ordinate inside `[theta2_minus, theta2_plus]`.
pub fn theta1_branches_real(p: &ModelParams, t2: f64) -> Option<(f64, f64)> {
    let d = theta1_discriminant(p, C::new(t2, 0.0)).re;
    let m = (t2 * t2 * (p.sigma12 * p.sigma12 - p.sigma11 * p.sigma22)).abs()
        + (2.0 * t2 * (p.mu1 * p.sigma12 - p.mu2 * p.sigma11)).abs()
        + p.mu1 * p.mu1;
    if d < -1e-12 * m {
        return None;
    }
    let s = d.max(0.0).sqrt();
    let b = -(p.sigma12 * t2 + p.mu1);
    Some(((b - s) / p.sigma11, (b + s) / p.sigma11))
}

/// The four real branch points, zeros of the two discriminants.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BranchPoints {
    pub theta1_minus: f64,
    pub theta1_plus: f64,
    pub theta2_minus: f64,
    pub theta2_plus: f64,
}

pub fn branch_points(p: &ModelParams) -> Result<BranchPoints> {
    let det = p.det_sigma();
    if det <= 0.0 {
        return Err(Error::InvalidParams(
            "covariance not positive definite".into(),
        ));
    }
    let b2 = p.mu1 * p.sigma12 - p.mu2 * p.sigma11;
    let d2 = (b2 * b2 + p.mu1 * p.mu1 * det).sqrt();
    let b1 = p.mu2 * p.sigma12 - p.mu1 * p.sigma22;
    let d1 = (b1 * b1 + p.mu2 * p.mu2 * det).sqrt();
    Ok(BranchPoints {
        theta1_minus: (b1 - d1) / det,
        theta1_plus: (b1 + d1) / det,
        theta2_minus: (b2 - d2) / det,
        theta2_plus: (b2 + d2) / det,
    })
}

/// Closed form for the candidate pole ordinate p, the non-zero intersection of
/// the line `gamma1 = 0` with the ellipse `gamma = 0`.
pub fn p_closed_form(p: &ModelParams) -> f64 {
    2.0 * p.r11 * (p.mu1 * p.r21 - p.mu2 * p.r11)
        / (p.r11 * p.r11 * p.sigma22 - 2.0 * p.r11 * p.r21 * p.sigma12 + p.r21 * p.r21 * p.sigma11)
}

/// Abscissa of the topmost point of the ellipse, `Theta1(theta2_plus)` where
/// both Theta1 branches coincide.
pub fn theta1_at_theta2_plus(p: &ModelParams, bp: &BranchPoints) -> f64 {
    -(p.sigma12 * bp.theta2_plus + p.mu1) / p.sigma11
}

/// Abscissa of the bottommost point of the ellipse.
pub fn theta1_at_theta2_minus(p: &ModelParams, bp: &BranchPoints) -> f64 {
    -(p.sigma12 * bp.theta2_minus + p.mu1) / p.sigma11
}

/// Derived scalar geometry of the kernel: branch points, wedge angle, the
/// tangency ordinate `Theta2(theta1_minus)`, the distinguished points p, p'
/// and q, and the sign of `gamma1` at the tangency point.
#[derive(Debug, Clone, Serialize)]
pub struct KernelGeometry {
    pub theta1_minus: f64,
    pub theta1_plus: f64,
    pub theta2_minus: f64,
    pub theta2_plus: f64,
    pub beta: f64,
    /// Ordinate of the hyperbola vertex, `Theta2(theta1_minus)`.
    pub theta2_at_t1m: f64,
    pub p: Option<f64>,
    pub p_exists: bool,
    pub p_prime: Option<f64>,
    pub q: f64,
    /// Sign of `gamma1(theta1_minus, Theta2(theta1_minus))`: -1, 0 or +1,
    /// with 0 decided within `tol * scale`.
    pub gamma1_tangency_sign: i32,
    /// Raw value behind the sign, for diagnostics.
    pub gamma1_at_tangency: f64,
    /// `gamma1` at the topmost ellipse point; p exists iff this is >= 0.
    pub p_existence_margin: f64,
}

impl KernelGeometry {
    /// Characteristic scale of the theta2 plane.
    pub fn scale(&self) -> f64 {
        self.theta2_plus - self.theta2_minus
    }

    pub fn compute(p: &ModelParams) -> Result<Self> {
        Self::compute_with_tol(p, model::PREDICATE_TOL)
    }

    pub fn compute_with_tol(params: &ModelParams, tol: f64) -> Result<Self> {
        model::require_valid(params)?;
        let bp = branch_points(params)?;
        if !(bp.theta1_minus < 0.0 && bp.theta1_plus > 0.0) {
            return Err(Error::CrossCheck(format!(
                "theta1 branch points {} {} not of opposite signs",
                bp.theta1_minus, bp.theta1_plus
            )));
        }
        if !(bp.theta2_minus < 0.0 && bp.theta2_plus > 0.0) {
            return Err(Error::CrossCheck(format!(
                "theta2 branch points {} {} not of opposite signs",
                bp.theta2_minus, bp.theta2_plus
            )));
        }
        let beta = params.beta();
        let scale = bp.theta2_plus - bp.theta2_minus;

        // Tangency ordinate by the cosine identity, cross-checked against the
        // double root of gamma(theta1_minus, .).
        let mid = 0.5 * (bp.theta2_plus + bp.theta2_minus);
        let half = 0.5 * (bp.theta2_plus - bp.theta2_minus);
        let vertex_cos = mid - half * beta.cos();
        let vertex_root = -(params.sigma12 * bp.theta1_minus + params.mu2) / params.sigma22;
        if (vertex_cos - vertex_root).abs() > 1e-10 * scale.max(1.0) {
            return Err(Error::CrossCheck(format!(
                "tangency ordinate mismatch: cosine identity {} vs double root {}",
                vertex_cos, vertex_root
            )));
        }
        let vertex = vertex_cos;
        if !(vertex > bp.theta2_minus && vertex < bp.theta2_plus) {
            return Err(Error::CrossCheck(
                "tangency ordinate outside branch points".into(),
            ));
        }
        if vertex <= 0.0 {
            return Err(Error::CrossCheck(
                "hyperbola vertex not on the positive real axis".into(),
            ));
        }

        let g1_tan = gamma1_real(params, bp.theta1_minus, vertex);
        let g1_scale = (params.r11 * bp.theta1_minus).abs() + (params.r21 * vertex).abs();
        let tangency_sign = if g1_tan.abs() <= tol * g1_scale.max(1e-300) {
            0
        } else if g1_tan > 0.0 {
            1
        } else {
            -1
        };

        let t1_top = theta1_at_theta2_plus(params, &bp);
        let p_margin = gamma1_real(params, t1_top, bp.theta2_plus);
        let margin_scale = (params.r11 * t1_top).abs() + (params.r21 * bp.theta2_plus).abs();
        let p_exists = p_margin >= -tol * margin_scale.max(1e-300);
        let p_val = if p_exists {
            let pv = p_closed_form(params);
            // residual of the defining equation at the closed form
            let (t1_lo, _) = theta1_branches_real(params, pv).ok_or_else(|| {
                Error::CrossCheck(format!("p = {} has no real Theta1 branches", pv))
            })?;
            let res = gamma1_real(params, t1_lo, pv);
            let res_scale = (params.r11 * t1_lo).abs() + (params.r21 * pv).abs();
            if res.abs() > 1e-9 * res_scale.max(1.0) {
                return Err(Error::CrossCheck(format!(
                    "closed-form p = {} fails gamma1(Theta1_minus(p), p) = 0: residual {}",
                    pv, res
                )));
            }
            Some(pv)
        } else {
            None
        };

        let p_prime = compute_p_prime_inner(params, &bp, tol);

        let q = match tangency_sign {
            1 => p_val.ok_or_else(|| {
                Error::CrossCheck("positive tangency sign but p does not exist".into())
            })?,
            _ => 0.5 * vertex,
        };
        if !(q > 0.0 && q < bp.theta2_plus) {
            return Err(Error::CrossCheck(format!(
                "q = {} outside (0, theta2_plus)",
                q
            )));
        }

        Ok(KernelGeometry {
            theta1_minus: bp.theta1_minus,
            theta1_plus: bp.theta1_plus,
            theta2_minus: bp.theta2_minus,
            theta2_plus: bp.theta2_plus,
            beta,
            theta2_at_t1m: vertex,
            p: p_val,
            p_exists,
            p_prime,
            q,
            gamma1_tangency_sign: tangency_sign,
            gamma1_at_tangency: g1_tan,
            p_existence_margin: p_margin,
        })
    }
}

/// The ordinate of the tangency point `Theta2(theta1_minus)` alone.
pub fn tangency_ordinate(p: &ModelParams) -> Result<f64> {
    Ok(KernelGeometry::compute(p)?.theta2_at_t1m)
}

/// p when it exists (see [`KernelGeometry`]).
pub fn compute_p(p: &ModelParams) -> Result<Option<f64>> {
    Ok(KernelGeometry::compute(p)?.p)
}

/// p' when it exists.
pub fn compute_p_prime(p: &ModelParams) -> Result<Option<f64>> {
    Ok(KernelGeometry::compute(p)?.p_prime)
}

/// q per the tangency-sign rule.
pub fn compute_q(p: &ModelParams) -> Result<f64> {
    Ok(KernelGeometry::compute(p)?.q)
}

/// p' is the upper ordinate `Theta2_plus(r)` over an abscissa r solving
/// `gamma2(r, Theta2_minus(r)) = 0` with `r <= Theta1(theta2_plus)`.
///
/// The first candidate for r is the closed form obtained by the coordinate
/// swap; it is accepted only after verifying the defining equations. When it
/// fails, a bracketed search over the admissible abscissa interval takes over
/// (the trivial root r = 0 is always present). Among the verified candidates
/// the smallest positive ordinate wins.
fn compute_p_prime_inner(params: &ModelParams, bp: &BranchPoints, tol: f64) -> Option<f64> {
    let t1_top = theta1_at_theta2_plus(params, bp);
    let scale = bp.theta2_plus - bp.theta2_minus;

    let verify = |r: f64| -> Option<f64> {
        if r > t1_top + tol * scale {
            return None;
        }
        if r < bp.theta1_minus - tol * scale || r > bp.theta1_plus + tol * scale {
            return None;
        }
        let (lo, hi) = theta2_branches_real(params, r.clamp(bp.theta1_minus, bp.theta1_plus))?;
        let res = gamma2_real(params, r, lo);
        let res_scale = ((params.r12 * r).abs() + (params.r22 * lo).abs()).max(1.0);
        if res.abs() > 1e-7 * res_scale {
            return None;
        }
        if hi.abs() <= tol * scale {
            return None; // the non-zero ordinate convention
        }
        Some(hi)
    };

    let mut candidates: Vec<f64> = Vec::new();
    // Swap-symmetry closed form: the "p" of the swapped model is the abscissa
    // of the non-origin intersection of gamma2 = 0 with the ellipse.
    let r_closed = p_closed_form(&params.swap());
    if let Some(pp) = verify(r_closed) {
        candidates.push(pp);
    }
    if candidates.is_empty() {
        // Bracketed root search of h(r) = gamma2(r, Theta2_minus(r)) over the
        // admissible interval.
        let hi_end = t1_top.min(bp.theta1_plus);
        let lo_end = bp.theta1_minus;
        if hi_end > lo_end {
            let h = |r: f64| -> f64 {
                let (lo, _) = theta2_branches_real(params, r).unwrap_or((f64::NAN, f64::NAN));
                gamma2_real(params, r, lo)
            };
            // r = 0 is an exact root whenever it is admissible.
            if 0.0 >= lo_end && 0.0 <= hi_end {
                if let Some(pp) = verify(0.0) {
                    candidates.push(pp);
                }
            }
            let n = 400;
            let mut prev_r = lo_end;
            let mut prev_h = h(prev_r);
            for i in 1..=n {
                let r = lo_end + (hi_end - lo_end) * (i as f64) / (n as f64);
                let cur = h(r);
                if prev_h.is_finite() && cur.is_finite() && prev_h * cur < 0.0 {
                    let root = bisect(&h, prev_r, r, 200);
                    if root.abs() > tol * scale {
                        if let Some(pp) = verify(root) {
                            candidates.push(pp);
                        }
                    }
                }
                prev_r = r;
                prev_h = cur;
            }
        }
    }
    candidates
        .into_iter()
        .filter(|v| *v > 0.0)
        .min_by(|a, b| a.partial_cmp(b).unwrap())
}

pub(crate) fn bisect<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64, iters: usize) -> f64 {
    let mut fa = f(a);
    for _ in 0..iters {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm == 0.0 || (b - a).abs() < 1e-15 * (1.0 + m.abs()) {
            return m;
        }
        if fa * fm < 0.0 {
            b = m;
        } else {
            a = m;
            fa = fm;
        }
    }
    0.5 * (a + b)
}
