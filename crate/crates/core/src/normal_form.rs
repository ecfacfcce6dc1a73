//! Reduction of an admissible deformation to the normal form
//!
//! ```text
//! (u, u^2 F21(u) + v^2 + u s F24(u, s),
//!     u^2 F31(u) + v^2 F32(u, v, s) + v F33(u, s) + u s F34(u, s))
//! ```
//!
//! using a target rotation and source changes of deformation type.

use nalgebra::{Matrix3, Vector2, Vector3};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::germ::{admissibility_check, null_vector_of, MapGerm, VANISH_TOL};
use crate::jet::{implicit_solve, invert_component, map_invert, series_reversion, Jet, HADAMARD_TOL};
use crate::pointwise::{PointFrame, Surface};

/// Extra orders carried through the pipeline to absorb the order loss of
/// the Hadamard divisions.
const GUARD_ORDERS: usize = 2;

/// Sign tolerance for the classification discriminant and genericity tests.
pub const CLASSIFY_TOL: f64 = 1e-9;

/// One recorded source change. Each maps new coordinates to old ones.
#[derive(Clone, Debug, PartialEq)]
pub enum SourceChange {
    /// `(u, v) -> u a + v n` with `n` spanning the kernel at the origin.
    Linear { a: [f64; 2], n: [f64; 2] },
    /// `u -> U(u, v, s)` making the first component equal to `u`.
    Straighten { u_of: Jet },
    /// `v -> v + sigma(u, s)` moving the fold set of the projection to `v = 0`.
    Shift { sigma: Jet },
    /// `v -> W(u, v, s)`, the inverse of `v -> v sqrt(f22)`.
    Rescale { v_of: Jet },
    /// `s -> q(s)` making `F33(0, s) = s`.
    Reparametrize { s_of: Jet },
}

impl SourceChange {
    pub fn label(&self) -> &'static str {
        match self {
            SourceChange::Linear { .. } => "linear",
            SourceChange::Straighten { .. } => "straighten",
            SourceChange::Shift { .. } => "shift",
            SourceChange::Rescale { .. } => "rescale",
            SourceChange::Reparametrize { .. } => "reparametrize",
        }
    }

    /// The change as a map of `(u, v, s)` jets at `order`.
    fn as_map(&self, order: usize) -> [Jet; 3] {
        let id = |i| Jet::var(3, order, i);
        match self {
            SourceChange::Linear { a, n } => [
                &id(0).scale(a[0]) + &id(1).scale(n[0]),
                &id(0).scale(a[1]) + &id(1).scale(n[1]),
                id(2),
            ],
            SourceChange::Straighten { u_of } => [u_of.with_order(order), id(1), id(2)],
            SourceChange::Shift { sigma } => [id(0), &id(1) + &sigma.insert_var(1).with_order(order), id(2)],
            SourceChange::Rescale { v_of } => [id(0), v_of.with_order(order), id(2)],
            SourceChange::Reparametrize { s_of } => {
                [id(0), id(1), s_of.insert_var(0).insert_var(0).with_order(order)]
            }
        }
    }
}

fn compose_map(outer: &[Jet; 3], inner: &[Jet; 3]) -> Result<[Jet; 3]> {
    Ok([
        outer[0].compose(inner)?,
        outer[1].compose(inner)?,
        outer[2].compose(inner)?,
    ])
}

fn rotate(rot: &Matrix3<f64>, j: &[Jet; 3]) -> [Jet; 3] {
    let row = |i: usize| {
        let mut acc = j[0].scale(rot[(i, 0)]);
        for (k, jk) in j.iter().enumerate().skip(1) {
            acc = &acc + &jk.scale(rot[(i, k)]);
        }
        acc
    };
    [row(0), row(1), row(2)]
}

/// Rotation taking the unit vector `w` to `e1`: a Givens rotation in the
/// `(y, z)` plane zeroing `z`, followed by one in the `(x, y)` plane.
fn rotation_to_e1(w: &Vector3<f64>) -> Matrix3<f64> {
    let rho = w[1].hypot(w[2]);
    let g1 = if rho > 0.0 {
        let (c, s) = (w[1] / rho, w[2] / rho);
        Matrix3::new(1.0, 0.0, 0.0, 0.0, c, s, 0.0, -s, c)
    } else {
        Matrix3::identity()
    };
    let r2 = w[0].hypot(rho);
    let (c, s) = (w[0] / r2, rho / r2);
    let g2 = Matrix3::new(c, s, 0.0, -s, c, 0.0, 0.0, 0.0, 1.0);
    g2 * g1
}

fn rotation_about_x(theta: f64) -> Matrix3<f64> {
    let (s, c) = theta.sin_cos();
    Matrix3::new(1.0, 0.0, 0.0, 0.0, c, s, 0.0, -s, c)
}

/// The six component series, truncated at the output order.
#[derive(Clone, Debug, PartialEq)]
pub struct Components {
    /// in `u`
    pub f21: Jet,
    /// in `(u, s)`
    pub f24: Jet,
    /// in `u`
    pub f31: Jet,
    /// in `(u, v, s)`
    pub f32: Jet,
    /// in `(u, s)`
    pub f33: Jet,
    /// in `(u, s)`
    pub f34: Jet,
}

/// Hadamard splitting of `f2 = f2(u, 0, s) + v^2` and `f3` (working order)
/// into the component series at `order`. Remainders are tested against
/// `HADAMARD_TOL` relative to `scale`, the largest coefficient seen in the
/// intermediate series.
fn split(f2: &Jet, f3: &Jet, order: usize, scale: f64) -> Result<Components> {
    let tol = HADAMARD_TOL * scale;
    let on_axis = |f: &Jet| f.drop_var(1); // f(u, 0, s)
    let at_s0 = |g: &Jet| g.drop_var(1); // g(u, 0)
    let f2_0s = on_axis(f2);
    let f3_0s = on_axis(f3);
    let f21 = at_s0(&f2_0s).div_monomial(&[2], tol)?;
    let f31 = at_s0(&f3_0s).div_monomial(&[2], tol)?;
    let f24 = (&f2_0s - &at_s0(&f2_0s).insert_var(1)).div_monomial(&[1, 1], tol)?;
    let f34 = (&f3_0s - &at_s0(&f3_0s).insert_var(1)).div_monomial(&[1, 1], tol)?;
    let f33 = on_axis(&f3.partial(1)?);
    let v = Jet::var(3, f3.order(), 1);
    let rest = &(f3 - &f3_0s.insert_var(1)) - &(&v * &f33.insert_var(1));
    let f32 = rest.div_monomial(&[0, 2, 0], tol)?;

    let v2_residual = (&(f2 - &f2_0s.insert_var(1)) - &(&v * &v)).max_abs();
    if v2_residual > tol {
        return Err(Error::Consistency(format!(
            "second component is not f2(u, 0, s) + v^2 (residual {v2_residual:e})"
        )));
    }
    Ok(Components {
        f21: f21.with_order(order),
        f24: f24.with_order(order),
        f31: f31.with_order(order),
        f32: f32.with_order(order),
        f33: f33.with_order(order),
        f34: f34.with_order(order),
    })
}

impl Components {
    /// The normal form map at `order` rebuilt from the component series.
    pub fn assemble(&self, order: usize) -> [Jet; 3] {
        let u = Jet::var(3, order, 0);
        let v = Jet::var(3, order, 1);
        let s = Jet::var(3, order, 2);
        let uu = &u * &u;
        let us = &u * &s;
        let lift1 = |j: &Jet| j.insert_var(1).insert_var(1).with_order(order);
        let lift2 = |j: &Jet| j.insert_var(1).with_order(order);
        let f2 = &(&(&uu * &lift1(&self.f21)) + &(&v * &v)) + &(&us * &lift2(&self.f24));
        let f3 = &(&(&uu * &lift1(&self.f31)) + &(&(&v * &v) * &self.f32.with_order(order)))
            + &(&(&v * &lift2(&self.f33)) + &(&us * &lift2(&self.f34)));
        [u, f2, f3]
    }
}

#[derive(Clone, Debug)]
pub struct NormalFormData {
    order: usize,
    rotation: Matrix3<f64>,
    source_log: Vec<SourceChange>,
    components: Components,
    parameter_normalized: bool,
    parameter_reversed: bool,
    /// Largest coefficient magnitude among the intermediate series (at least 1).
    scale: f64,
    /// `f2, f3` at the working order.
    working: [Jet; 2],
    assembled: [Jet; 3],
    /// `f, f_u, f_v, f_uu, f_uv, f_vv` of the assembled map.
    derivs: Vec<[Jet; 3]>,
}

impl NormalFormData {
    fn build(
        order: usize,
        rotation: Matrix3<f64>,
        source_log: Vec<SourceChange>,
        working: [Jet; 2],
        parameter_normalized: bool,
        parameter_reversed: bool,
        scale: f64,
    ) -> Result<NormalFormData> {
        let components = split(&working[0], &working[1], order, scale)?;
        let assembled = components.assemble(order);
        let d = |j: &[Jet; 3], var: usize| -> Result<[Jet; 3]> {
            Ok([j[0].partial(var)?, j[1].partial(var)?, j[2].partial(var)?])
        };
        let fu = d(&assembled, 0)?;
        let fv = d(&assembled, 1)?;
        let derivs = vec![assembled.clone(), d(&fu, 0)?, d(&fu, 1)?, d(&fv, 1)?, fu, fv];
        Ok(NormalFormData {
            order,
            rotation,
            source_log,
            components,
            parameter_normalized,
            parameter_reversed,
            scale,
            working,
            assembled,
            derivs,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// The target rotation `T` with `T . f . phi` in normal form.
    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn source_log(&self) -> &[SourceChange] {
        &self.source_log
    }

    pub fn components(&self) -> &Components {
        &self.components
    }

    /// Largest coefficient magnitude met during the reduction. Roundoff in
    /// the component series is relative to it.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn parameter_normalized(&self) -> bool {
        self.parameter_normalized
    }

    /// Set when the parameter change needed for `F33(0, s) = s` reverses the
    /// direction of `s`.
    pub fn parameter_reversed(&self) -> bool {
        self.parameter_reversed
    }

    /// The normal form map `(u, f2, f3)` as jets in `(u, v, s)`.
    pub fn assembled(&self) -> &[Jet; 3] {
        &self.assembled
    }

    /// The composite source change `phi` (in working-order jets) with
    /// `T . f . phi` equal to the normal form.
    pub fn source_map(&self) -> Result<[Jet; 3]> {
        let w = self.working[0].order();
        let mut m = [Jet::var(3, w, 0), Jet::var(3, w, 1), Jet::var(3, w, 2)];
        for step in &self.source_log {
            m = compose_map(&m, &step.as_map(w))?;
        }
        Ok(m)
    }

    /// The normal form as a polynomial germ.
    pub fn to_map_germ(&self) -> MapGerm {
        MapGerm::from_jets(&self.assembled)
    }

    /// `F33(., s)` as polynomial coefficients in `u` (lowest degree first).
    pub fn f33_polynomial(&self, s: f64) -> Vec<f64> {
        let f33 = &self.components.f33;
        (0..=self.order)
            .map(|k| {
                (0..=self.order - k)
                    .map(|j| f33.coeff(&[k, j]) * s.powi(j as i32))
                    .sum()
            })
            .collect()
    }

    /// Replaces the deformation parameter by `F33(0, s)`.
    pub fn normalize_parameter(&self) -> Result<NormalFormData> {
        let w = self.working[1].order();
        let p = self.working[1].partial(1)?.drop_var(1).drop_var(0);
        let slope = p.coeff(&[1]);
        if slope.abs() < CLASSIFY_TOL {
            return Err(Error::Degenerate(format!(
                "deformation is not generic: d F33 / ds (0, 0) = {slope:e}"
            )));
        }
        let q = series_reversion(&p)?;
        let inner = SourceChange::Reparametrize { s_of: q.clone() }.as_map(w);
        let f2 = self.working[0].compose(&inner)?;
        let f3 = self.working[1].compose(&inner)?;
        let scale = [&q, &f2, &f3].iter().fold(self.scale, |m, c| m.max(c.max_abs()));
        let mut log = self.source_log.clone();
        log.push(SourceChange::Reparametrize { s_of: q });
        NormalFormData::build(
            self.order,
            self.rotation,
            log,
            [f2, f3],
            true,
            self.parameter_reversed != (slope < 0.0),
            scale,
        )
    }
}

impl Surface for NormalFormData {
    fn frame(&self, u: f64, v: f64, s: f64) -> Result<PointFrame> {
        let at = |j: &[Jet; 3]| {
            Vector3::new(j[0].eval(&[u, v, s]), j[1].eval(&[u, v, s]), j[2].eval(&[u, v, s]))
        };
        Ok(PointFrame {
            f: at(&self.derivs[0]),
            fuu: at(&self.derivs[1]),
            fuv: at(&self.derivs[2]),
            fvv: at(&self.derivs[3]),
            fu: at(&self.derivs[4]),
            fv: at(&self.derivs[5]),
        })
    }
}

/// Reduces an admissible deformation to normal form with series valid to `order`.
pub fn reduce(f: &MapGerm, order: usize) -> Result<NormalFormData> {
    if order < 2 {
        return Err(Error::Usage("jet order must be at least 2".into()));
    }
    admissibility_check(f, order)?.into_result()?;
    let w = order + GUARD_ORDERS;
    let jets = f.jet_at([0.0; 3], w)?;
    let fr = f.frame(0.0, 0.0, 0.0)?;

    // kernel and a complementary direction with positive u-component
    let n0 = null_vector_of(&fr)?;
    let mut a = Vector2::new(n0[1], -n0[0]);
    if a[0] < 0.0 || (a[0] == 0.0 && a[1] < 0.0) {
        a = -a;
    }
    let n = Vector2::new(-a[1], a[0]);
    let image = (fr.fu * a[0] + fr.fv * a[1]).normalize();
    let r1 = rotation_to_e1(&image);

    let linear = SourceChange::Linear {
        a: a.into(),
        n: n.into(),
    };
    let mut j = rotate(&r1, &compose_map(&jets, &linear.as_map(w))?);

    let (y_nn, z_nn) = (j[1].coeff(&[0, 2, 0]), j[2].coeff(&[0, 2, 0]));
    let rx = rotation_about_x(z_nn.atan2(y_nn));
    j = rotate(&rx, &j);
    let rotation = rx * r1;

    let u_of = invert_component(&j[0], 0)?;
    let straighten = SourceChange::Straighten { u_of };
    j = compose_map(&j, &straighten.as_map(w))?;
    j[0] = Jet::var(3, w, 0);

    let mut scale = straighten.as_map(w)[0].max_abs();
    scale = j.iter().fold(scale.max(1.0), |m, c| m.max(c.max_abs()));
    let sigma = implicit_solve(&j[1].partial(1)?)?;
    scale = scale.max(sigma.max_abs());
    let shift = SourceChange::Shift { sigma };
    j = compose_map(&j, &shift.as_map(w))?;
    for (name, comp) in [("second", &j[1]), ("third", &j[2])] {
        for k in 0..=w {
            let c = comp.coeff(&[0, 0, k]);
            if c.abs() > VANISH_TOL * scale {
                return Err(Error::Precondition(format!(
                    "the fold curve of the projection leaves u = v = 0: {name} component has \
                     coefficient {c:e} at s^{k} after straightening"
                )));
            }
        }
    }

    let f2_axis = j[1].drop_var(1).insert_var(1);
    let f22 = (&j[1] - &f2_axis).div_monomial(&[0, 2, 0], HADAMARD_TOL * scale)?;
    let v = Jet::var(3, w, 1);
    let big_v = &v * &f22.sqrt()?;
    let inv = map_invert(&[Jet::var(3, w, 0), big_v, Jet::var(3, w, 2)])?;
    let rescale = SourceChange::Rescale {
        v_of: inv[1].clone(),
    };
    scale = [&f22, &inv[1], &j[1], &j[2]].iter().fold(scale, |m, c| m.max(c.max_abs()));
    j = compose_map(&j, &inv)?;

    let nf = NormalFormData::build(
        order,
        rotation,
        vec![linear, straighten, shift, rescale],
        [j[1].clone(), j[2].clone()],
        false,
        false,
        scale,
    )?;
    let f33 = &nf.components.f33;
    if f33.coeff(&[1, 0]).abs() > CLASSIFY_TOL {
        return Err(Error::Precondition(format!(
            "d F33 / du (0, 0) = {:e} is not zero: the base germ is a Whitney umbrella",
            f33.coeff(&[1, 0])
        )));
    }
    Ok(nf)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CoefficientSet {
    pub f21_0: f64,
    pub f21_u: f64,
    pub f31_0: f64,
    pub f31_u: f64,
    pub f24_00: f64,
    pub f34_00: f64,
    pub c1_0: f64,
    pub c2_0: f64,
    pub c20: f64,
    pub c2_s0: f64,
    pub c3_0: f64,
    pub c4_00: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
    pub df33_ds: f64,
}

impl CoefficientSet {
    pub fn max_abs_diff(&self, other: &CoefficientSet) -> f64 {
        let a = self.as_array();
        let b = other.as_array();
        a.iter().zip(&b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
    }

    pub fn as_array(&self) -> [f64; 16] {
        [
            self.f21_0, self.f21_u, self.f31_0, self.f31_u, self.f24_00, self.f34_00, self.c1_0,
            self.c2_0, self.c20, self.c2_s0, self.c3_0, self.c4_00, self.d1, self.d2, self.d3,
            self.df33_ds,
        ]
    }
}

/// Reads the scalar coefficients off the component series.
pub fn scalar_coefficients(nf: &NormalFormData) -> CoefficientSet {
    let c = &nf.components;
    let c2_0 = c.f33.coeff(&[2, 0]);
    CoefficientSet {
        f21_0: c.f21.coeff(&[0]),
        f21_u: c.f21.coeff(&[1]),
        f31_0: c.f31.coeff(&[0]),
        f31_u: c.f31.coeff(&[1]),
        f24_00: c.f24.coeff(&[0, 0]),
        f34_00: c.f34.coeff(&[0, 0]),
        c1_0: c.f33.coeff(&[1, 1]),
        c2_0,
        c20: c2_0.abs().sqrt(),
        c2_s0: c.f33.coeff(&[2, 1]),
        c3_0: c.f33.coeff(&[3, 0]),
        c4_00: c.f33.coeff(&[4, 0]),
        d1: c.f32.coeff(&[1, 0, 0]),
        d2: c.f32.coeff(&[0, 1, 0]),
        d3: c.f32.coeff(&[0, 0, 1]),
        df33_ds: c.f33.coeff(&[0, 1]),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ClassKind {
    S1Plus,
    S1Minus,
    Degenerate,
}

impl ClassKind {
    pub fn label(self) -> &'static str {
        match self {
            ClassKind::S1Plus => "S1+",
            ClassKind::S1Minus => "S1-",
            ClassKind::Degenerate => "degenerate",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Classification {
    pub kind: ClassKind,
    /// `(F32)_v (0) * (F33)_uu (0, 0)`
    pub discriminant: f64,
}

pub fn classify(nf: &NormalFormData) -> Classification {
    let c = &nf.components;
    let discriminant = c.f32.coeff(&[0, 1, 0]) * 2.0 * c.f33.coeff(&[2, 0]);
    let kind = if discriminant > CLASSIFY_TOL {
        ClassKind::S1Plus
    } else if discriminant < -CLASSIFY_TOL {
        ClassKind::S1Minus
    } else {
        ClassKind::Degenerate
    };
    Classification { kind, discriminant }
}

/// Constant and `s`-linear part of one coefficient of the expanded form,
/// read off the assembled map and computed from the component series.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonomialEntry {
    pub name: String,
    pub expanded: [f64; 2],
    pub from_components: [f64; 2],
}

/// Coefficients `b_i(s)` of `u^i` in the second component and `a_ij(s)` of
/// `u^i v^j` in the third (plain monomial coefficients), to first order in
/// `s`. Both computation routes must agree within `1e-9`.
pub fn monomial_coefficients(nf: &NormalFormData) -> Result<Vec<MonomialEntry>> {
    let c = &nf.components;
    let [_, f2, f3] = &nf.assembled;
    let d1 = |j: &Jet, e: &[usize]| j.derivative_at_zero(e);
    let table: Vec<(String, &Jet, [usize; 2], [f64; 2])> = vec![
        ("b1".into(), f2, [1, 0], [0.0, d1(&c.f24, &[0, 0])]),
        ("b2".into(), f2, [2, 0], [d1(&c.f21, &[0]), d1(&c.f24, &[1, 0])]),
        ("b3".into(), f2, [3, 0], [d1(&c.f21, &[1]), d1(&c.f24, &[2, 0]) / 2.0]),
        ("a10".into(), f3, [1, 0], [0.0, d1(&c.f34, &[0, 0])]),
        ("a01".into(), f3, [0, 1], [0.0, d1(&c.f33, &[0, 1])]),
        ("a20".into(), f3, [2, 0], [d1(&c.f31, &[0]), d1(&c.f34, &[1, 0])]),
        ("a11".into(), f3, [1, 1], [0.0, d1(&c.f33, &[1, 1])]),
        ("a02".into(), f3, [0, 2], [0.0, d1(&c.f32, &[0, 0, 1])]),
        ("a30".into(), f3, [3, 0], [d1(&c.f31, &[1]), d1(&c.f34, &[2, 0]) / 2.0]),
        ("a21".into(), f3, [2, 1], [d1(&c.f33, &[2, 0]) / 2.0, d1(&c.f33, &[2, 1]) / 2.0]),
        ("a12".into(), f3, [1, 2], [d1(&c.f32, &[1, 0, 0]), d1(&c.f32, &[1, 0, 1])]),
        ("a03".into(), f3, [0, 3], [d1(&c.f32, &[0, 1, 0]), d1(&c.f32, &[0, 1, 1])]),
    ];
    let mut out = Vec::with_capacity(table.len());
    for (name, comp, [i, j], formula) in table {
        let expanded = [comp.coeff(&[i, j, 0]), comp.coeff(&[i, j, 1])];
        for k in 0..2 {
            let diff = (expanded[k] - formula[k]).abs();
            if diff > 1e-9 * (1.0 + formula[k].abs()) {
                return Err(Error::Consistency(format!(
                    "coefficient {name} (order {k} in s): expanded form gives {}, component series give {}",
                    expanded[k], formula[k]
                )));
            }
        }
        out.push(MonomialEntry {
            name,
            expanded,
            from_components: formula,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::germ::{apply_equivalence, random_rotation, DiffeoSpec};
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const S1_PLUS: &str = "u; v^2; v*(u^2+v^2)+s*v";
    const S1_MINUS: &str = "u; v^2; v*(u^2-v^2)+s*v";

    fn nf(text: &str) -> NormalFormData {
        reduce(&MapGerm::parse(text).unwrap(), 8).unwrap()
    }

    #[test]
    fn rotation_to_e1_maps_vector() {
        let w = Vector3::new(0.3, -0.4, 0.5).normalize();
        let r = rotation_to_e1(&w);
        assert!((r * w - Vector3::x()).norm() < 1e-15);
        assert_abs_diff_eq!(r.determinant(), 1.0, epsilon = 1e-15);
        let w = -Vector3::x();
        assert!((rotation_to_e1(&w) * w - Vector3::x()).norm() < 1e-15);
    }

    #[test]
    fn model_is_a_fixed_point() {
        let n = nf(S1_PLUS);
        let c = n.components();
        assert!(c.f21.is_zero() && c.f24.is_zero() && c.f31.is_zero() && c.f34.is_zero());
        assert!(c.f32.max_abs_diff(&Jet::var(3, 8, 1)) < 1e-12);
        let expected = Jet::from_terms(2, 8, &[(&[0, 1], 1.0), (&[2, 0], 1.0)]);
        assert!(c.f33.max_abs_diff(&expected) < 1e-12);
        assert!((n.rotation() - Matrix3::identity()).abs().max() < 1e-15);
        assert_eq!(classify(&n).kind, ClassKind::S1Plus);
        assert_eq!(classify(&nf(S1_MINUS)).kind, ClassKind::S1Minus);
    }

    #[test]
    fn polynomial_already_in_form() {
        let cs = scalar_coefficients(&nf("u; v^2+u*s; u^2+v^3+u^2*v+v*s"));
        assert_abs_diff_eq!(cs.f21_0, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(cs.f31_0, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(cs.f24_00, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(cs.c20, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(cs.d2, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn invariance_under_rotation_and_shear() {
        let f = MapGerm::parse(S1_PLUS).unwrap();
        let rot = nalgebra::Rotation3::from_axis_angle(&Vector3::x_axis(), std::f64::consts::FRAC_PI_6)
            .into_inner();
        let d = DiffeoSpec::parse("u; v + u^2; s").unwrap();
        let g = apply_equivalence(&f, &d, &rot).unwrap();
        let a = scalar_coefficients(&reduce(&f, 8).unwrap());
        let b = scalar_coefficients(&reduce(&g, 8).unwrap());
        assert!(a.max_abs_diff(&b) < 1e-8, "{a:?}\n{b:?}");
    }

    #[test]
    fn parameter_normalization() {
        let n = nf("u; v^2; v*(u^2+2*s)").normalize_parameter().unwrap();
        let expected = Jet::from_terms(2, 8, &[(&[0, 1], 1.0), (&[2, 0], 1.0)]);
        assert!(n.components().f33.max_abs_diff(&expected) < 1e-12);
        assert!(n.parameter_normalized() && !n.parameter_reversed());

        let err = nf("u; v^2; v*(u^2+s^2)").normalize_parameter().unwrap_err();
        assert!(matches!(err, Error::Degenerate(_)));

        let n = nf("u; v^2; v*(u^2-s+s^2)").normalize_parameter().unwrap();
        assert!(n.parameter_reversed());
        let p: Vec<f64> = (0..=8).map(|k| n.components().f33.coeff(&[0, k])).collect();
        assert_abs_diff_eq!(p[1], 1.0, epsilon = 1e-12);
        assert!(p[2..].iter().all(|c| c.abs() < 1e-10));
    }

    #[test]
    fn scalar_coefficient_examples() {
        let cs = scalar_coefficients(&nf(S1_PLUS));
        assert_eq!(
            (cs.c1_0, cs.c20, cs.c3_0, cs.c4_00, cs.d1, cs.d3),
            (0.0, 1.0, 0.0, 0.0, 0.0, 0.0)
        );
        assert_abs_diff_eq!(cs.d2, 1.0);
        let cs = scalar_coefficients(&nf("u; v^2; v*(s+u^2+u^3)"));
        assert_abs_diff_eq!(cs.c3_0, 1.0, epsilon = 1e-12);
        let cs = scalar_coefficients(&nf("u; v^2; v^3+u^2*v+v*s-v*s*u"));
        assert_abs_diff_eq!(cs.c1_0, -1.0, epsilon = 1e-12);
    }

    #[test]
    fn degenerate_classification() {
        let n = nf("u; v^2; v*s");
        assert_eq!(classify(&n).kind, ClassKind::Degenerate);
    }

    #[test]
    fn monomial_table_examples() {
        let t = monomial_coefficients(&nf(S1_PLUS)).unwrap();
        let get = |t: &[MonomialEntry], k: &str| t.iter().find(|e| e.name == k).unwrap().expanded;
        assert_eq!(get(&t, "a21")[0], 1.0);
        assert_eq!(get(&t, "a03")[0], 1.0);
        for b in ["b1", "b2", "b3"] {
            assert_eq!(get(&t, b), [0.0, 0.0]);
        }
        let t = monomial_coefficients(&nf(S1_MINUS)).unwrap();
        assert_eq!(get(&t, "a03")[0], -1.0);
        let t = monomial_coefficients(&nf("u; v^2+u*s; u^2+v^3+u^2*v+v*s")).unwrap();
        assert_abs_diff_eq!(get(&t, "b1")[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn source_map_reproduces_normal_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let f = MapGerm::parse("u; v^2+u*s; u^2+v^3+u^2*v+v*s").unwrap();
        let g = apply_equivalence(&f, &DiffeoSpec::random(&mut rng, 3, 0.5), &random_rotation(&mut rng)).unwrap();
        let n = reduce(&g, 8).unwrap().normalize_parameter().unwrap();
        let phi = n.source_map().unwrap();
        let w = phi[0].order();
        let jets = g.jet_at([0.0; 3], w).unwrap();
        let pulled = rotate(n.rotation(), &compose_map(&jets, &phi).unwrap());
        for (k, (p, a)) in pulled.iter().zip(n.assembled()).enumerate() {
            let diff = p.with_order(8).max_abs_diff(a);
            assert!(diff < 1e-9, "component {k}: {diff:e}");
        }
    }

    #[test]
    fn random_equivalences_keep_coefficients() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for model in [S1_PLUS, S1_MINUS] {
            let f = MapGerm::parse(model).unwrap();
            let base = scalar_coefficients(&reduce(&f, 8).unwrap().normalize_parameter().unwrap());
            for _ in 0..5 {
                let d = DiffeoSpec::random(&mut rng, 3, 0.5);
                let g = apply_equivalence(&f, &d, &random_rotation(&mut rng)).unwrap();
                let n = reduce(&g, 8).unwrap().normalize_parameter().unwrap();
                let diff = base.max_abs_diff(&scalar_coefficients(&n));
                assert!(diff < 1e-8, "{diff:e} for {d:?}");
            }
        }
    }

    #[test]
    fn fold_curve_off_axis_is_reported() {
        let err = reduce(&MapGerm::parse("u; v^2+v*s; v*(u^2+v^2)+s*v").unwrap(), 8).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
    }
}
