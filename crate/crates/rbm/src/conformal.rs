//! Generalized Chebyshev function and the conformal gluing map w on which the
//! whole boundary-value machinery rests.
//!
//! `T_a` is evaluated through the exponential form
//! `(1/2)[(x + sqrt(x^2-1))^a + (x - sqrt(x^2-1))^a]` with the square root
//! branch pinned so that `sqrt(x^2-1) ~ x` at infinity. The composed map then
//! has its only discontinuity on the real ray beyond `theta2_plus`, and
//! requests on that cut are refused rather than silently one-sided.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::kernel::KernelGeometry;
use crate::model::ModelParams;

type C = Complex64;

const INT_TOL: f64 = 1e-9;

fn is_nonneg_integer(a: f64) -> Option<u32> {
    let n = a.round();
    if n >= -0.5 && (a - n).abs() <= INT_TOL {
        Some(n as u32)
    } else {
        None
    }
}

/// `z = x + sqrt(x^2 - 1)` with `|z| >= 1`, continuous off the segment [-1, 1].
/// Both T and its derivative are invariant under `z -> 1/z`, so taking the
/// larger-modulus root is safe everywhere.
fn z_of(x: C) -> C {
    let s = (x * x - C::new(1.0, 0.0)).sqrt();
    let zp = x + s;
    let zm = x - s;
    if zp.norm_sqr() >= zm.norm_sqr() {
        zp
    } else {
        zm
    }
}

/// Generalized Chebyshev function `T_a(x) = cos(a arccos x)`.
///
/// For non-integer `a` the ray `x in (-inf, -1)` is a genuine branch cut and
/// evaluation there is refused; the caller must take one-sided limits.
pub fn chebyshev_t(a: f64, x: C) -> Result<C> {
    if a < 0.0 {
        return Err(Error::InvalidParams(format!(
            "chebyshev exponent {} < 0",
            a
        )));
    }
    let integer = is_nonneg_integer(a);
    if integer.is_none() && x.im == 0.0 && x.re < -1.0 {
        return Err(Error::OnCut);
    }
    // On the real segment the direct trigonometric form is exact and cheap.
    if x.im == 0.0 && x.re.abs() <= 1.0 {
        return Ok(C::new((a * x.re.acos()).cos(), 0.0));
    }
    let z = z_of(x);
    let m = a * z.ln();
    if m.re > 700.0 {
        return Err(Error::Overflow("chebyshev_t"));
    }
    Ok(0.5 * (m.exp() + (-m).exp()))
}

/// Derivative `T_a'(x) = a sin(a arccos x)/sin(arccos x)`, with the removable
/// singularity at `x = 1` handled by series.
pub fn chebyshev_t_prime(a: f64, x: C) -> Result<C> {
    if a < 0.0 {
        return Err(Error::InvalidParams(format!(
            "chebyshev exponent {} < 0",
            a
        )));
    }
    let integer = is_nonneg_integer(a);
    if integer.is_none() && x.im == 0.0 && x.re <= -1.0 {
        // T' blows up at -1 for non-integer a; on the ray it is two-sided.
        return Err(Error::OnCut);
    }
    if (x - C::new(1.0, 0.0)).norm() < 1e-8 {
        // T' -> a^2 (1 - (a^2-1)(1-x)/3 + ...)
        let one = C::new(1.0, 0.0);
        return Ok(a * a * (one - (a * a - 1.0) * (one - x) / 3.0));
    }
    if let Some(n) = integer {
        if x.im == 0.0 && (x.re + 1.0).abs() < 1e-8 {
            // T_n'(-1) = (-1)^(n+1) n^2
            let sign = if n % 2 == 0 { -1.0 } else { 1.0 };
            return Ok(C::new(sign * (n as f64) * (n as f64), 0.0));
        }
    }
    let z = z_of(x);
    let s = 0.5 * (z - z.inv()); // sqrt(x^2-1) consistent with z
    let m = a * z.ln();
    if m.re > 700.0 {
        return Err(Error::Overflow("chebyshev_t_prime"));
    }
    Ok(a * 0.5 * (m.exp() - (-m).exp()) / s)
}

/// Classical three-term recurrence for integer orders; the independent check
/// for the exponential form.
pub fn chebyshev_t_recurrence(n: u32, x: C) -> C {
    let mut t_prev = C::new(1.0, 0.0);
    if n == 0 {
        return t_prev;
    }
    let mut t = x;
    for _ in 1..n {
        let next = 2.0 * x * t - t_prev;
        t_prev = t;
        t = next;
    }
    t
}

/// The gluing map `w(theta2) = T_{pi/beta}(x(theta2))` with the affine
/// rescaling `x = -(2 theta2 - (theta2_plus + theta2_minus))/(theta2_plus - theta2_minus)`,
/// plus the cached values entering the main formula.
#[derive(Debug, Clone)]
pub struct GluingMap {
    pub beta: f64,
    /// Exponent a = pi/beta.
    pub exponent: f64,
    pub theta2_minus: f64,
    pub theta2_plus: f64,
    /// Vertex of the hyperbola, where w = -1.
    pub vertex: f64,
    pub q: f64,
    pub w_at_zero: f64,
    pub w_at_q: f64,
    pub w_at_p: Option<f64>,
}

impl GluingMap {
    pub fn new(params: &ModelParams) -> Result<Self> {
        Self::from_geometry(&KernelGeometry::compute(params)?)
    }

    pub fn from_geometry(geom: &KernelGeometry) -> Result<Self> {
        let mut map = GluingMap {
            beta: geom.beta,
            exponent: std::f64::consts::PI / geom.beta,
            theta2_minus: geom.theta2_minus,
            theta2_plus: geom.theta2_plus,
            vertex: geom.theta2_at_t1m,
            q: geom.q,
            w_at_zero: 0.0,
            w_at_q: 0.0,
            w_at_p: None,
        };
        map.w_at_zero = map.w(C::new(0.0, 0.0))?.re;
        map.w_at_q = map.w(C::new(geom.q, 0.0))?.re;
        map.w_at_p = match geom.p {
            Some(p) => Some(map.w(C::new(p, 0.0))?.re),
            None => None,
        };
        let w_vertex = map.w(C::new(map.vertex, 0.0))?.re;
        if (w_vertex + 1.0).abs() > 1e-12 * (1.0 + w_vertex.abs()) {
            return Err(Error::CrossCheck(format!(
                "w at the vertex is {} instead of -1",
                w_vertex
            )));
        }
        Ok(map)
    }

    /// Affine change of variable onto the Chebyshev frame.
    pub fn x_of(&self, theta2: C) -> C {
        -(2.0 * theta2 - (self.theta2_plus + self.theta2_minus))
            / (self.theta2_plus - self.theta2_minus)
    }

    fn check_cut(&self, theta2: C) -> Result<()> {
        if is_nonneg_integer(self.exponent).is_some() {
            return Ok(()); // w is a polynomial: entire
        }
        if theta2.im == 0.0 && theta2.re > self.theta2_plus {
            return Err(Error::OnCut);
        }
        Ok(())
    }

    pub fn w(&self, theta2: C) -> Result<C> {
        self.check_cut(theta2)?;
        chebyshev_t(self.exponent, self.x_of(theta2))
    }

    /// Exact derivative by the chain rule on the exponential form.
    pub fn w_prime(&self, theta2: C) -> Result<C> {
        self.check_cut(theta2)?;
        let dx = -2.0 / (self.theta2_plus - self.theta2_minus);
        Ok(chebyshev_t_prime(self.exponent, self.x_of(theta2))? * dx)
    }

    /// `w'(theta)/(w(theta) - c)` in a form that never materializes `w` when
    /// it is astronomically large: with `m = a log z`,
    /// `w'/(w - c) = a x'(theta) (1 - e^{-2m}) / (s (1 + e^{-2m} - 2 c e^{-m}))`.
    pub fn cauchy_kernel(&self, theta: C, c: C) -> Result<C> {
        self.check_cut(theta)?;
        let a = self.exponent;
        let x = self.x_of(theta);
        let dx = -2.0 / (self.theta2_plus - self.theta2_minus);
        let z = z_of(x);
        let s = 0.5 * (z - z.inv());
        if s.norm() < 1e-12 {
            // At a Chebyshev node edge; fall back to the direct quotient.
            let w = chebyshev_t(a, x)?;
            let wp = chebyshev_t_prime(a, x)? * dx;
            return Ok(wp / (w - c));
        }
        let m = a * z.ln();
        let em = (-m).exp(); // |em| <= 1 since |z| >= 1
        let em2 = em * em;
        let num = a * dx * (C::new(1.0, 0.0) - em2);
        let den = s * (C::new(1.0, 0.0) + em2 - 2.0 * c * em);
        Ok(num / den)
    }

    /// `ln |w(theta)|`, finite even when w itself would overflow.
    pub fn ln_abs_w(&self, theta: C) -> Result<f64> {
        self.check_cut(theta)?;
        let x = self.x_of(theta);
        let z = z_of(x);
        let m = self.exponent * z.ln();
        if m.re > 50.0 {
            // w = e^m (1 + e^{-2m})/2
            Ok(m.re + (0.5 * (C::new(1.0, 0.0) + (-2.0 * m).exp())).norm().ln())
        } else {
            Ok(chebyshev_t(self.exponent, x)?.norm().max(1e-300).ln())
        }
    }

    /// Normalized map `W = (w + 1)/(w - w(q))`, gluing the hyperbola onto
    /// [0, 1] with `W(vertex) = 0` and a pole at q.
    pub fn big_w(&self, theta2: C) -> Result<C> {
        let w = self.w(theta2)?;
        let den = w - self.w_at_q;
        if den.norm() < 1e-12 * (1.0 + w.norm()) {
            return Err(Error::AtPole(format!("W has its pole at q = {}", self.q)));
        }
        Ok((w + 1.0) / den)
    }
}
