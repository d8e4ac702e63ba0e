//! The hyperbola branch carrying the boundary condition, the jump function G
//! with its continuous logarithm, and the index data (delta, Delta, chi).
//!
//! The branch is parametrized by `theta1 = theta1_minus - s^2`, which removes
//! the square-root singularity of the ordinate at the vertex: both the point
//! and its derivative are analytic in s. Writing
//! `u(s) = gamma1(theta1, conj theta2)` and `v(s) = gamma2(theta1, conj theta2)`,
//! the jump function is `G = conj(u) v / (conj(v) u)`, so
//! `arg G = 2(arg v - arg u)` where each factor stays in one half plane for
//! s > 0. Principal arguments are therefore already continuous, and the whole
//! unwrapped determination is pinned by a single constant fixed at the vertex.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::{self, KernelGeometry};
use crate::model::ModelParams;

type C = Complex64;
use std::f64::consts::PI;

/// Maximum phase increment between neighbouring path nodes.
pub const MAX_PHASE_STEP: f64 = PI / 8.0;

/// Discretization of the lower half-branch with unwrapped log G values.
#[derive(Debug, Clone, Serialize)]
pub struct HyperbolaPath {
    /// Points on the curve, vertex first, ordered outward.
    pub nodes: Vec<(f64, f64)>,
    /// The underlying parameter values s (theta1 = theta1_minus - s^2).
    pub node_params: Vec<f64>,
    /// log G at the nodes, phase-unwrapped, starting at i*delta.
    pub log_g: Vec<(f64, f64)>,
    /// d theta2 / d s at the nodes.
    pub dtheta_ds: Vec<(f64, f64)>,
    pub s_max: f64,
    /// Tail bound achieved at s_max for the reference evaluation point.
    pub tail_bound: f64,
}

/// Index of the boundary-value problem.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct IndexData {
    /// arg G at the vertex: 0, or pi in the tangency regime.
    pub delta: f64,
    /// Total argument variation along the lower half-branch.
    pub delta_cap: f64,
    pub chi: i32,
    /// delta + Delta from the closed-form limit at infinity, branch pinned by
    /// the sign rule.
    pub delta_plus_cap_from_formula: f64,
    /// delta + Delta from phase tracking along the curve.
    pub delta_plus_cap_from_tracking: f64,
    /// Set when the tangency value sits within ten tolerances of zero. The
    /// regimes differ genuinely across that boundary, so the index under the
    /// alternative routing is reported alongside.
    pub near_tangency: bool,
    /// chi under the alternative regime routing, present in the near-tangency
    /// band only.
    pub chi_alternative: Option<i32>,
}

/// Everything needed to evaluate points, derivatives and log G anywhere on
/// the curve in O(1). Immutable once built.
#[derive(Debug, Clone)]
pub struct CurveContext {
    params: ModelParams,
    pub theta1_minus: f64,
    /// Distance between the theta1 branch points.
    pub span: f64,
    det_sigma: f64,
    pub vertex: f64,
    pub tangency_sign: i32,
    /// Raw value of gamma1 at the tangency point, kept for the near-band
    /// regime comparison.
    gamma1_at_tangency: f64,
    pub delta: f64,
    /// Continuity constant: canonical arg = raw(s) - raw0 + delta.
    raw0: f64,
    pub scale: f64,
    pub near_tangency: bool,
}

impl CurveContext {
    pub fn new(params: &ModelParams, geom: &KernelGeometry) -> Result<Self> {
        let tol = 1e-9;
        let g1_scale =
            (params.r11 * geom.theta1_minus).abs() + (params.r21 * geom.theta2_at_t1m).abs();
        let near = geom.gamma1_at_tangency.abs() <= 10.0 * tol * g1_scale.max(1e-300);
        let delta = if geom.gamma1_tangency_sign == 0 {
            PI
        } else {
            0.0
        };
        // arg u at the vertex decides the continuity constant; v is positive there.
        let arg_u0 = match geom.gamma1_tangency_sign {
            1 => 0.0,
            -1 => {
                if params.r21 > 0.0 {
                    PI
                } else if params.r21 < 0.0 {
                    -PI
                } else {
                    PI
                }
            }
            _ => {
                // u vanishes at the vertex; it leaves along the imaginary axis
                // on the side of r21 (positive in this regime).
                if params.r21 >= 0.0 {
                    PI / 2.0
                } else {
                    -PI / 2.0
                }
            }
        };
        let g2v = kernel::gamma2_real(params, geom.theta1_minus, geom.theta2_at_t1m);
        if g2v <= 0.0 {
            return Err(Error::CrossCheck(format!(
                "gamma2 at the tangency point must be positive, got {}",
                g2v
            )));
        }
        Ok(CurveContext {
            params: *params,
            theta1_minus: geom.theta1_minus,
            span: geom.theta1_plus - geom.theta1_minus,
            det_sigma: params.det_sigma(),
            vertex: geom.theta2_at_t1m,
            tangency_sign: geom.gamma1_tangency_sign,
            gamma1_at_tangency: geom.gamma1_at_tangency,
            delta,
            raw0: -2.0 * arg_u0,
            scale: geom.theta2_plus - geom.theta2_minus,
            near_tangency: near,
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    /// theta1 along the curve.
    pub fn theta1(&self, s: f64) -> f64 {
        self.theta1_minus - s * s
    }

    /// Point on the lower half-branch; s = 0 gives the vertex.
    pub fn theta(&self, s: f64) -> C {
        let p = &self.params;
        let t1 = self.theta1(s);
        let x = (-(p.sigma12 * t1 + p.mu2)) / p.sigma22;
        let y = s * (self.det_sigma * (s * s + self.span)).sqrt() / p.sigma22;
        C::new(x, -y)
    }

    pub fn dtheta_ds(&self, s: f64) -> C {
        let p = &self.params;
        let dx = 2.0 * p.sigma12 * s / p.sigma22;
        let root = (self.det_sigma * (s * s + self.span)).sqrt();
        let dy = self.det_sigma * (2.0 * s * s + self.span) / root / p.sigma22;
        C::new(dx, -dy)
    }

    fn u_v(&self, s: f64) -> (C, C) {
        let p = &self.params;
        let t1 = self.theta1(s);
        let tc = self.theta(s).conj();
        (
            kernel::gamma1(p, C::new(t1, 0.0), tc),
            kernel::gamma2(p, C::new(t1, 0.0), tc),
        )
    }

    /// Unwrapped argument of G, pinned to `delta` at the vertex.
    pub fn arg_g(&self, s: f64) -> f64 {
        if s == 0.0 {
            return self.delta;
        }
        let (u, v) = self.u_v(s);
        let raw = 2.0 * (v.im.atan2(v.re) - u.im.atan2(u.re));
        raw - self.raw0 + self.delta
    }

    /// log G with the canonical determination. The modulus of G is one by
    /// construction, so the real part vanishes identically.
    pub fn log_g(&self, s: f64) -> C {
        C::new(0.0, self.arg_g(s))
    }

    /// The jump function evaluated literally from its defining quotient.
    pub fn g_literal(&self, s: f64) -> Result<C> {
        let p = &self.params;
        let t1 = C::new(self.theta1(s), 0.0);
        let th = self.theta(s);
        let thc = th.conj();
        let den = kernel::gamma2(p, t1, th) * kernel::gamma1(p, t1, thc);
        if den.norm() < 1e-14 * self.scale * self.scale {
            return Err(Error::AtPole(
                "jump function undefined at the vertex: tangency regime boundary".into(),
            ));
        }
        Ok(kernel::gamma1(p, t1, th) * kernel::gamma2(p, t1, thc) / den)
    }

    /// Limit of the unwrapped argument at infinity, evaluated far out on the
    /// curve where the direction has converged.
    pub fn arg_g_at_infinity(&self) -> f64 {
        self.arg_g(1e6)
    }

    /// delta + Delta from the closed-form limit, with the branch pinned by the
    /// sign rule `sgn Delta = -sgn gamma1(tangency)`. Expanding the limit of G
    /// along the curve gives `exp(i(delta+Delta)) = (n - i d)/(n + i d)` with
    /// `d = det R sqrt(det Sigma)`; the square root matters as soon as the
    /// covariance is not unimodular.
    pub fn delta_plus_cap_formula(&self) -> f64 {
        let p = &self.params;
        let d = p.det_r() * p.det_sigma().sqrt();
        let n = p.sigma22 * p.r11 * p.r12 + p.sigma11 * p.r22 * p.r21
            - p.sigma12 * (p.r11 * p.r22 + p.r12 * p.r21);
        let alpha = d.atan2(n); // in (0, pi) since d > 0
        if self.tangency_sign > 0 {
            -2.0 * alpha
        } else {
            2.0 * PI - 2.0 * alpha
        }
    }

    /// Index data with both determinations cross-checked.
    pub fn index(&self) -> Result<IndexData> {
        let tracked = self.arg_g_at_infinity();
        let formula = self.delta_plus_cap_formula();
        if (tracked - formula).abs() > 1e-6 {
            return Err(Error::CrossCheck(format!(
                "index determination mismatch: tracked {} vs formula {}",
                tracked, formula
            )));
        }
        let chi_sign = if self.tangency_sign > 0 { -1 } else { 0 };
        let chi_floor = (formula / (2.0 * PI)).floor() as i32;
        if chi_sign != chi_floor {
            return Err(Error::CrossCheck(format!(
                "index mismatch: sign rule {} vs floor rule {}",
                chi_sign, chi_floor
            )));
        }
        // In the near-tangency band the routed regime is a tolerance call;
        // report what the other routing would have concluded.
        let chi_alternative = if self.near_tangency {
            Some(if self.tangency_sign == 0 {
                if self.gamma1_at_tangency > 0.0 {
                    -1
                } else {
                    0
                }
            } else {
                0 // the tangency routing always yields chi = 0
            })
        } else {
            None
        };
        Ok(IndexData {
            delta: self.delta,
            delta_cap: tracked - self.delta,
            chi: chi_sign,
            delta_plus_cap_from_formula: formula,
            delta_plus_cap_from_tracking: tracked,
            near_tangency: self.near_tangency,
            chi_alternative,
        })
    }

    /// Abscissa of the curve at height |y|; the branch is a graph over the
    /// imaginary axis.
    fn s_at_height(&self, y: f64) -> f64 {
        // y^2 sigma22^2 = s^2 det(s^2 + span)
        let c = self.params.sigma22 * self.params.sigma22 * y * y / self.det_sigma;
        let s2 = 0.5 * (-self.span + (self.span * self.span + 4.0 * c).sqrt());
        s2.max(0.0).sqrt()
    }

    /// Whether a point lies in the component of the complement containing 0.
    pub fn contains(&self, z: C) -> bool {
        let s = self.s_at_height(z.im.abs());
        z.re < self.theta(s).re
    }

    /// Euclidean distance to the full curve (both half-branches).
    pub fn distance_to_curve(&self, z: C) -> f64 {
        let zr = C::new(z.re, -z.im.abs()); // lower half by symmetry
        let d = |s: f64| (self.theta(s) - zr).norm();
        // Bracket the minimum on a growing grid, then refine by golden section.
        let mut best_s = 0.0;
        let mut best = d(0.0);
        let mut s_hi = 1.0_f64.max(self.s_at_height(zr.im.abs()) * 2.0);
        // extend until the curve runs away from the point
        while (self.theta(s_hi) - zr).norm() < 2.0 * best + self.scale && s_hi < 1e8 {
            s_hi *= 2.0;
        }
        let n = 200;
        for i in 0..=n {
            let s = s_hi * (i as f64) / (n as f64);
            let v = d(s);
            if v < best {
                best = v;
                best_s = s;
            }
        }
        let lo = (best_s - s_hi / n as f64).max(0.0);
        let hi = best_s + s_hi / n as f64;
        golden_min(&d, lo, hi)
    }

    /// Adaptive node ladder with phase steps below `MAX_PHASE_STEP` and the
    /// integrand tail below `tol` at `s_max`.
    pub fn build_path(&self, tol: f64, s_max_cap: f64) -> Result<HyperbolaPath> {
        let gluing = crate::conformal::GluingMap::new(&self.params)?;
        let m_ref = gluing.w_at_zero.abs().max(gluing.w_at_q.abs()).max(1.0);
        let mut s_max = (1.0 + self.span.sqrt()) * 4.0;
        let mut bound = f64::INFINITY;
        while s_max <= s_max_cap {
            bound = tail_bound(&gluing, self.theta(s_max), m_ref, m_ref, 2.0 * m_ref);
            if bound < tol {
                break;
            }
            s_max *= 2.0;
        }
        if bound >= tol {
            return Err(Error::TailBound {
                achieved: bound,
                requested: tol,
            });
        }

        // geometric seed grid, then refinement on the phase increment
        let mut s_vals = vec![0.0];
        let s0 = 1e-3 * (1.0 + self.span.sqrt());
        let mut s = s0;
        while s < s_max {
            s_vals.push(s);
            s *= 1.25;
        }
        s_vals.push(s_max);
        let mut i = 0;
        while i + 1 < s_vals.len() {
            let (a, b) = (s_vals[i], s_vals[i + 1]);
            if (self.arg_g(b) - self.arg_g(a)).abs() > MAX_PHASE_STEP && b - a > 1e-12 * s_max {
                s_vals.insert(i + 1, 0.5 * (a + b));
            } else {
                i += 1;
            }
        }

        let nodes = s_vals
            .iter()
            .map(|&s| {
                let t = self.theta(s);
                (t.re, t.im)
            })
            .collect();
        let log_g = s_vals
            .iter()
            .map(|&s| {
                let l = self.log_g(s);
                (l.re, l.im)
            })
            .collect();
        let dtheta = s_vals
            .iter()
            .map(|&s| {
                let d = self.dtheta_ds(s);
                (d.re, d.im)
            })
            .collect();
        Ok(HyperbolaPath {
            nodes,
            node_params: s_vals,
            log_g,
            dtheta_ds: dtheta,
            s_max,
            tail_bound: bound,
        })
    }
}

/// Bound on the modulus of the truncated part of the main integral,
/// `(1/2pi) int_{s > s_max} log G [K(c2) - K(c0)] d theta`, obtained by the
/// substitution W = |w| and the closed-form tail integral
/// `int_W^inf dW/((W-m2)(W-m0))`. `lambda` caps |log G|, and a fixed phase
/// safety factor covers |dw| vs d|w|.
pub fn tail_bound(
    gluing: &crate::conformal::GluingMap,
    theta_at_smax: C,
    m2: f64,
    m0: f64,
    dc: f64,
) -> f64 {
    let kappa = 4.0;
    let lambda = 2.0 * PI + 1.0;
    let ln_wm = match gluing.ln_abs_w(theta_at_smax) {
        Ok(v) => v,
        Err(_) => return f64::INFINITY,
    };
    let m_big = m2.max(m0).max(1.0);
    if ln_wm > 600.0 {
        return kappa * lambda * dc / (2.0 * PI) * (-ln_wm).exp();
    }
    let wm = ln_wm.exp();
    if wm <= 2.0 * m_big {
        return f64::INFINITY;
    }
    let ilog = if (m2 - m0).abs() > 1e-12 * (1.0 + m2.abs() + m0.abs()) {
        ((wm - m0) / (wm - m2)).ln() / (m2 - m0)
    } else {
        1.0 / (wm - 0.5 * (m2 + m0))
    };
    kappa * lambda * dc * ilog / (2.0 * PI)
}

fn golden_min<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64) -> f64 {
    let phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..200 {
        if (b - a).abs() < 1e-13 * (1.0 + a.abs() + b.abs()) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d);
        }
    }
    f(0.5 * (a + b))
}

/// Point on the lower half-branch at parameter s (convenience wrapper).
pub fn hyperbola_point(params: &ModelParams, s: f64) -> Result<C> {
    let geom = KernelGeometry::compute(params)?;
    Ok(CurveContext::new(params, &geom)?.theta(s))
}

/// The jump function at parameter s, from its literal defining quotient.
pub fn g_eval(params: &ModelParams, s: f64) -> Result<C> {
    let geom = KernelGeometry::compute(params)?;
    CurveContext::new(params, &geom)?.g_literal(s)
}

/// Residual of the hyperbola equation
/// `s22 (s12^2 - s11 s22) x^2 + s12^2 s22 y^2 - 2 s22 (s11 mu2 - s12 mu1) x
///  = mu2 (s11 mu2 - 2 s12 mu1)` at a point x + i y.
pub fn hyperbola_residual(p: &ModelParams, z: C) -> f64 {
    let (x, y) = (z.re, z.im);
    let lhs = p.sigma22 * (p.sigma12 * p.sigma12 - p.sigma11 * p.sigma22) * x * x
        + p.sigma12 * p.sigma12 * p.sigma22 * y * y
        - 2.0 * p.sigma22 * (p.sigma11 * p.mu2 - p.sigma12 * p.mu1) * x;
    let rhs = p.mu2 * (p.sigma11 * p.mu2 - 2.0 * p.sigma12 * p.mu1);
    let scale = lhs.abs().max(rhs.abs()).max(1.0);
    (lhs - rhs).abs() / scale
}

/// Index data for a model (convenience wrapper).
pub fn compute_index(params: &ModelParams) -> Result<IndexData> {
    let geom = KernelGeometry::compute(params)?;
    CurveContext::new(params, &geom)?.index()
}

/// Adaptive path for a model (convenience wrapper).
pub fn build_path(params: &ModelParams, tol: f64, s_max: f64) -> Result<HyperbolaPath> {
    let geom = KernelGeometry::compute(params)?;
    CurveContext::new(params, &geom)?.build_path(tol, s_max)
}
