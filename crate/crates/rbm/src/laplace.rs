//! Stationary Laplace transforms: the main Cauchy-integral formula on the
//! hyperbola, the meromorphic continuation through the kernel, the
//! closed-form special cases (skew-symmetric, orthogonal reflection), and the
//! boundary-condition residual used to test everything without evaluating on
//! the contour itself.

use num_complex::Complex64;
use serde::Serialize;

use crate::conformal::GluingMap;
use crate::curve::{tail_bound, CurveContext, IndexData};
use crate::error::{Error, Result};
use crate::kernel::{self, KernelGeometry};
use crate::model::{self, ModelParams};
use crate::quad::{integrate_decaying, GaussLegendre};

type C = Complex64;
use std::f64::consts::PI;

/// Numerical knobs. The defaults are the ones the acceptance suite pins.
#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    /// Relative tolerance for discrete predicates.
    pub predicate: f64,
    /// Relative accuracy target for the boundary transforms.
    pub phi_rel: f64,
    /// Refusal margin around the contour, as a fraction of the plane scale.
    pub contour_margin: f64,
    /// Refusal margin around the boundary pole in the tangency regime.
    pub tangency_pole_margin: f64,
    /// Equality tolerance for the asymptotics table, as a fraction of scale.
    pub table: f64,
    /// Hard cap on the truncation parameter of the contour integral.
    pub s_max_cap: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            predicate: 1e-9,
            phi_rel: 1e-8,
            contour_margin: 1e-3,
            tangency_pole_margin: 1e-2,
            table: 1e-8,
            s_max_cap: 1e8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Method {
    Integral,
    Continuation,
    ClosedFormSkew,
    ClosedFormOrthogonal,
}

/// A transform value with the quadrature error estimate attached.
#[derive(Debug, Clone, Copy)]
pub struct LaplaceValue {
    pub value: C,
    pub abs_error_estimate: f64,
    pub method: Method,
}

/// Total masses of the two boundary measures, `-R^{-1} mu`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BoundaryMasses {
    pub nu1_total: f64,
    pub nu2_total: f64,
}

pub fn nu_masses(p: &ModelParams) -> Result<BoundaryMasses> {
    model::require_valid(p)?;
    let det = p.det_r();
    let nu1 = (p.r12 * p.mu2 - p.r22 * p.mu1) / det;
    let nu2 = (p.r21 * p.mu1 - p.r11 * p.mu2) / det;
    if !(nu1 > 0.0 && nu2 > 0.0) {
        return Err(Error::CrossCheck(format!(
            "boundary masses must be positive under stationarity: {} {}",
            nu1, nu2
        )));
    }
    Ok(BoundaryMasses {
        nu1_total: nu1,
        nu2_total: nu2,
    })
}

/// Per-model machinery for one of the two boundary transforms.
pub(crate) struct Side {
    pub params: ModelParams,
    pub geom: KernelGeometry,
    pub gluing: GluingMap,
    pub curve: CurveContext,
    pub index: IndexData,
    pub nu_total: f64,
}

impl Side {
    fn new(params: ModelParams) -> Result<Self> {
        let geom = KernelGeometry::compute(&params)?;
        let gluing = GluingMap::from_geometry(&geom)?;
        let curve = CurveContext::new(&params, &geom)?;
        let index = curve.index()?;
        let nu_total = nu_masses(&params)?.nu1_total;
        Ok(Side {
            params,
            geom,
            gluing,
            curve,
            index,
            nu_total,
        })
    }
}

/// Evaluator bundling both coordinate orders of one model, so that phi1, phi2
/// and everything derived from them share caches and tolerances.
pub struct Evaluator {
    sides: [Side; 2],
    rule: GaussLegendre,
    pub tol: Tolerances,
}

impl Evaluator {
    pub fn new(params: &ModelParams) -> Result<Self> {
        Self::with_tolerances(params, Tolerances::default())
    }

    pub fn with_tolerances(params: &ModelParams, tol: Tolerances) -> Result<Self> {
        model::require_valid(params)?;
        Ok(Evaluator {
            sides: [Side::new(*params)?, Side::new(params.swap())?],
            rule: GaussLegendre::new(15),
            tol,
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.sides[0].params
    }

    pub fn geometry(&self) -> &KernelGeometry {
        &self.sides[0].geom
    }

    pub fn gluing(&self) -> &GluingMap {
        &self.sides[0].gluing
    }

    pub fn curve(&self) -> &CurveContext {
        &self.sides[0].curve
    }

    pub fn index(&self) -> &IndexData {
        &self.sides[0].index
    }

    pub fn masses(&self) -> BoundaryMasses {
        BoundaryMasses {
            nu1_total: self.sides[0].nu_total,
            nu2_total: self.sides[1].nu_total,
        }
    }

    /// The exponent of the main formula:
    /// `(1/2 pi i) int log G(theta) [w'/(w - c2) - w'/(w - w(0))] d theta`
    /// over the lower half-branch, plus a certified truncation bound.
    fn integral_part(&self, which: usize, c2: C) -> Result<(C, f64)> {
        let side = &self.sides[which];
        let w0 = C::new(side.gluing.w_at_zero, 0.0);
        let dc = (c2 - w0).norm();
        if dc == 0.0 {
            return Ok((C::new(0.0, 0.0), 0.0));
        }
        let tol_quad = 0.25 * self.tol.phi_rel;
        let tol_tail = 0.25 * self.tol.phi_rel;

        let m2 = c2.norm();
        let m0 = w0.norm();
        let mut s_end = 4.0 * (1.0 + side.curve.span.sqrt());
        let mut tail = f64::INFINITY;
        while s_end <= self.tol.s_max_cap {
            tail = tail_bound(&side.gluing, side.curve.theta(s_end), m2, m0, dc);
            if tail < tol_tail {
                break;
            }
            s_end *= 2.0;
        }
        if tail >= tol_tail {
            return Err(Error::TailBound {
                achieved: tail,
                requested: tol_tail,
            });
        }

        let f = |s: f64| -> C {
            let th = side.curve.theta(s);
            let lg = side.curve.log_g(s);
            let k2 = side
                .gluing
                .cauchy_kernel(th, c2)
                .expect("contour stays off the cut of w");
            let k0 = side
                .gluing
                .cauchy_kernel(th, w0)
                .expect("contour stays off the cut of w");
            lg * (k2 - k0) * side.curve.dtheta_ds(s)
        };
        let first = 1.0 + side.curve.span.sqrt();
        let (raw, qerr) = integrate_decaying(&self.rule, &f, s_end, first, tol_quad);
        let value = raw / C::new(0.0, 2.0 * PI);
        Ok((value, qerr / (2.0 * PI) + tail))
    }

    /// Admission checks for the direct integral representation of side `which`
    /// at the point z. Returns the distance to the contour.
    fn admit_interior(&self, which: usize, z: C) -> Result<f64> {
        let side = &self.sides[which];
        if !z.re.is_finite() || !z.im.is_finite() {
            return Err(Error::NonFinite("evaluation point"));
        }
        let scale = side.geom.scale();
        if side.geom.gamma1_tangency_sign == 0 {
            let vertex = C::new(side.geom.theta2_at_t1m, 0.0);
            if (z - vertex).norm() < self.tol.tangency_pole_margin * scale {
                return Err(Error::AtPole(format!(
                    "boundary pole at the vertex {} in the tangency regime",
                    vertex.re
                )));
            }
        }
        if !side.curve.contains(z) {
            return Err(Error::OutsideDomain(format!(
                "{} is outside the domain bounded by the hyperbola",
                z
            )));
        }
        let dist = side.curve.distance_to_curve(z);
        let margin = self.tol.contour_margin * scale;
        if dist < margin {
            return Err(Error::TooCloseToContour { dist, margin });
        }
        if side.index.chi == -1 {
            let p = side.geom.p.expect("chi = -1 implies the pole exists");
            if (z - C::new(p, 0.0)).norm() < 1e-9 * scale {
                return Err(Error::AtPole(format!("simple pole at p = {}", p)));
            }
        }
        Ok(dist)
    }

    fn phi_boundary(&self, which: usize, z: C) -> Result<LaplaceValue> {
        self.admit_interior(which, z)?;
        let side = &self.sides[which];
        let wz = side.gluing.w(z)?;
        let (ipart, ierr) = self.integral_part(which, wz)?;
        let prefactor = if side.index.chi == -1 {
            let wp = C::new(
                side.gluing
                    .w_at_p
                    .expect("chi = -1 implies the pole exists"),
                0.0,
            );
            (C::new(side.gluing.w_at_zero, 0.0) - wp) / (wz - wp)
        } else {
            C::new(1.0, 0.0)
        };
        let value = side.nu_total * prefactor * ipart.exp();
        Ok(LaplaceValue {
            value,
            abs_error_estimate: value.norm() * (ierr + 1e-14),
            method: Method::Integral,
        })
    }

    /// First boundary transform by the main integral formula.
    pub fn phi1(&self, theta2: C) -> Result<LaplaceValue> {
        self.phi_boundary(0, theta2)
    }

    /// Second boundary transform: the same formula after the coordinate swap.
    pub fn phi2(&self, theta1: C) -> Result<LaplaceValue> {
        self.phi_boundary(1, theta1)
    }

    /// Meromorphic continuation through the kernel:
    /// `phi1(z) = -(gamma2/gamma1)(Theta1_minus(z), z) phi2(Theta1_minus(z))`,
    /// valid on `{Re z <= 0 or Re Theta1_minus(z) < 0}`.
    fn continuation(&self, which: usize, z: C) -> Result<LaplaceValue> {
        let side = &self.sides[which];
        let (t, _) = kernel::theta1_branches(&side.params, z);
        let g1 = kernel::gamma1(&side.params, t, z);
        let g1_scale = (side.params.r11 * t.norm()).abs()
            + (side.params.r21 * z.norm()).abs()
            + 1e-3 * side.geom.scale();
        if g1.norm() < 1e-12 * g1_scale {
            return Err(Error::AtPole(format!(
                "continuation denominator gamma1 vanishes near z = {} (the pole p)",
                z
            )));
        }
        if !(z.re <= 0.0 || t.re < 0.0) {
            return Err(Error::OutsideDomain(format!(
                "{} outside the continuation domain (Re Theta1_minus = {})",
                z, t.re
            )));
        }
        let inner = self.phi_boundary(1 - which, t)?;
        let factor = -kernel::gamma2(&side.params, t, z) / g1;
        Ok(LaplaceValue {
            value: factor * inner.value,
            abs_error_estimate: factor.norm() * inner.abs_error_estimate,
            method: Method::Continuation,
        })
    }

    pub fn phi1_continuation(&self, theta2: C) -> Result<LaplaceValue> {
        self.continuation(0, theta2)
    }

    /// The exponent of the main formula at an arbitrary w-target. Exposed for
    /// the asymptotics constant, which reuses the same integral with the
    /// target placed at the pole.
    pub fn integral_at(&self, c2: C) -> Result<(C, f64)> {
        self.integral_part(0, c2)
    }

    pub fn phi2_continuation(&self, theta1: C) -> Result<LaplaceValue> {
        self.continuation(1, theta1)
    }

    /// Direct integral when the point qualifies, continuation otherwise.
    pub(crate) fn phi_any(&self, which: usize, z: C) -> Result<LaplaceValue> {
        match self.phi_boundary(which, z) {
            Ok(v) => Ok(v),
            Err(Error::OutsideDomain(_))
            | Err(Error::TooCloseToContour { .. })
            | Err(Error::AtPole(_)) => self.continuation(which, z),
            Err(e) => Err(e),
        }
    }

    pub fn phi1_any(&self, theta2: C) -> Result<LaplaceValue> {
        self.phi_any(0, theta2)
    }

    /// Bivariate transform from the functional equation,
    /// `phi = -(gamma1 phi1(theta2) + gamma2 phi2(theta1))/gamma`.
    pub fn phi_interior(&self, theta1: C, theta2: C) -> Result<LaplaceValue> {
        let p = &self.sides[0].params;
        if theta1.re > 1e-12 || theta2.re > 1e-12 {
            return Err(Error::OutsideDomain(
                "phi is evaluated for Re theta1 <= 0 and Re theta2 <= 0".into(),
            ));
        }
        let g = kernel::gamma(p, theta1, theta2);
        let g_scale = 0.5
            * (p.sigma11 * theta1.norm_sqr()
                + 2.0 * (p.sigma12 * theta1 * theta2).norm()
                + p.sigma22 * theta2.norm_sqr())
            + (p.mu1 * theta1).norm()
            + (p.mu2 * theta2).norm();
        if g.norm() < 1e-10 * g_scale.max(1e-300) {
            return Err(Error::KernelZero);
        }
        let v1 = self.phi1(theta2)?;
        let v2 = self.phi2(theta1)?;
        let g1 = kernel::gamma1(p, theta1, theta2);
        let g2 = kernel::gamma2(p, theta1, theta2);
        let value = -(g1 * v1.value + g2 * v2.value) / g;
        let err =
            (g1.norm() * v1.abs_error_estimate + g2.norm() * v2.abs_error_estimate) / g.norm();
        Ok(LaplaceValue {
            value,
            abs_error_estimate: err,
            method: Method::Integral,
        })
    }

    /// Relative residual of the two-branch identity
    /// `(gamma1/gamma2)(t1, Theta2_plus) phi1(Theta2_plus)
    ///   = (gamma1/gamma2)(t1, Theta2_minus) phi1(Theta2_minus)`
    /// for real `t1 in (theta1_minus, 0)`. The upper point is reached by
    /// continuation and the lower by the direct integral, so the residual
    /// genuinely cross-checks the two independent formulas.
    pub fn jump_consistency_residual(&self, theta1: f64) -> Result<f64> {
        let side = &self.sides[0];
        let p = &side.params;
        if !(theta1 > side.geom.theta1_minus && theta1 < 0.0) {
            return Err(Error::OutsideDomain(format!(
                "theta1 = {} not in (theta1_minus, 0)",
                theta1
            )));
        }
        let (lo, hi) = kernel::theta2_branches_real(p, theta1).ok_or_else(|| {
            Error::OutsideDomain("Theta2 branches not real at this abscissa".into())
        })?;
        let mut sides_vals = [C::new(0.0, 0.0); 2];
        for (i, y) in [hi, lo].iter().enumerate() {
            let g2 = kernel::gamma2_real(p, theta1, *y);
            let g_scale = (p.r12 * theta1).abs() + (p.r22 * y).abs();
            if g2.abs() < 1e-10 * g_scale.max(1e-300) {
                return Err(Error::KernelZero);
            }
            let g1 = kernel::gamma1_real(p, theta1, *y);
            let v = self.phi_any(0, C::new(*y, 0.0))?;
            sides_vals[i] = (g1 / g2) * v.value;
        }
        let denom = sides_vals[0].norm().max(sides_vals[1].norm()).max(1e-300);
        Ok((sides_vals[0] - sides_vals[1]).norm() / denom)
    }

    /// Closed form under orthogonal reflection,
    /// `phi1 = -mu1 w'(0) theta2 / (w(theta2) - w(0))`.
    pub fn closed_form_orthogonal(&self, theta2: C) -> Result<LaplaceValue> {
        closed_form_orthogonal_with(&self.sides[0].params, &self.sides[0].gluing, theta2)
    }
}

/// Exponential rates of the product-form density in the skew-symmetric case,
/// `alpha = -2 diag(Sigma)^{-1} diag(R) R^{-1} mu`.
pub fn skew_alphas(p: &ModelParams) -> Result<[f64; 2]> {
    model::require_valid(p)?;
    if !model::is_skew_symmetric(p, model::PREDICATE_TOL) {
        return Err(Error::NotSkewSymmetric);
    }
    let det = p.det_r();
    let rinv_mu = [
        (p.r22 * p.mu1 - p.r12 * p.mu2) / det,
        (p.r11 * p.mu2 - p.r21 * p.mu1) / det,
    ];
    Ok([
        -2.0 * (p.r11 / p.sigma11) * rinv_mu[0],
        -2.0 * (p.r22 / p.sigma22) * rinv_mu[1],
    ])
}

/// `phi1(theta2) = C/(alpha2 - theta2)` with `C = sigma11 alpha1 alpha2 / (2 r11)`.
pub fn closed_form_skew(p: &ModelParams, theta2: C) -> Result<LaplaceValue> {
    let [a1, a2] = skew_alphas(p)?;
    let den = C::new(a2, 0.0) - theta2;
    if den.norm() < 1e-12 * (1.0 + a2.abs()) {
        return Err(Error::AtPole(format!("pole at alpha2 = {}", a2)));
    }
    let c = p.sigma11 * a1 * a2 / (2.0 * p.r11);
    Ok(LaplaceValue {
        value: c / den,
        abs_error_estimate: 0.0,
        method: Method::ClosedFormSkew,
    })
}

/// Product-form stationary density `alpha1 alpha2 exp(-alpha1 x1 - alpha2 x2)`
/// on the quadrant.
pub fn density_skew(p: &ModelParams, x1: f64, x2: f64) -> Result<f64> {
    let [a1, a2] = skew_alphas(p)?;
    if x1 < 0.0 || x2 < 0.0 {
        return Ok(0.0);
    }
    Ok(a1 * a2 * (-a1 * x1 - a2 * x2).exp())
}

pub(crate) fn is_identity_reflection(p: &ModelParams) -> bool {
    (p.r11 - 1.0).abs() <= 1e-12
        && (p.r22 - 1.0).abs() <= 1e-12
        && p.r12.abs() <= 1e-12
        && p.r21.abs() <= 1e-12
}

fn closed_form_orthogonal_with(
    p: &ModelParams,
    gluing: &GluingMap,
    theta2: C,
) -> Result<LaplaceValue> {
    if !is_identity_reflection(p) {
        return Err(Error::NotOrthogonal);
    }
    let scale = gluing.theta2_plus - gluing.theta2_minus;
    if theta2.norm() <= 1e-10 * scale {
        // analytic limit at the origin: phi1(0) = -mu1
        return Ok(LaplaceValue {
            value: C::new(-p.mu1, 0.0),
            abs_error_estimate: 0.0,
            method: Method::ClosedFormOrthogonal,
        });
    }
    let w0 = C::new(gluing.w_at_zero, 0.0);
    let wz = gluing.w(theta2)?;
    let den = wz - w0;
    if den.norm() < 1e-12 * (1.0 + wz.norm()) {
        return Err(Error::AtPole(format!(
            "w(theta2) = w(0) at theta2 = {}",
            theta2
        )));
    }
    let wp0 = gluing.w_prime(C::new(0.0, 0.0))?;
    Ok(LaplaceValue {
        value: -p.mu1 * wp0 * theta2 / den,
        abs_error_estimate: 0.0,
        method: Method::ClosedFormOrthogonal,
    })
}

/// Free-standing variant of the orthogonal closed form.
pub fn closed_form_orthogonal(p: &ModelParams, theta2: C) -> Result<LaplaceValue> {
    let gluing = GluingMap::new(p)?;
    closed_form_orthogonal_with(p, &gluing, theta2)
}
