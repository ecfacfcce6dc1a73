//! Second-order geometry at a point of a parametrized surface: the umbrella
//! test, umbrella invariants, curvature parabola, focal conic, and the
//! fundamental forms.

use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::germ::{null_vector_of, rank_of};
use crate::jet::Jet;

/// Position and derivatives up to order two at one source point.
#[derive(Clone, Debug, PartialEq)]
pub struct PointFrame {
    pub f: Vector3<f64>,
    pub fu: Vector3<f64>,
    pub fv: Vector3<f64>,
    pub fuu: Vector3<f64>,
    pub fuv: Vector3<f64>,
    pub fvv: Vector3<f64>,
}

/// Anything that can report a [`PointFrame`] at `(u, v)` for parameter `s`.
pub trait Surface {
    fn frame(&self, u: f64, v: f64, s: f64) -> Result<PointFrame>;
}

impl PointFrame {
    /// Reads the frame off three jets in `(u, v)` about the point.
    pub fn from_quadratic_jets(j: &[Jet; 3]) -> PointFrame {
        let read = |e: &[usize], k: f64| Vector3::new(j[0].coeff(e), j[1].coeff(e), j[2].coeff(e)) * k;
        PointFrame {
            f: read(&[0, 0], 1.0),
            fu: read(&[1, 0], 1.0),
            fv: read(&[0, 1], 1.0),
            fuu: read(&[2, 0], 2.0),
            fuv: read(&[1, 1], 1.0),
            fvv: read(&[0, 2], 2.0),
        }
    }

    /// Frame in source coordinates `(u', v')` with `(u, v) = u' a + v' b`.
    pub fn linear_change(&self, a: Vector2<f64>, b: Vector2<f64>) -> PointFrame {
        let d1 = |x: Vector2<f64>| self.fu * x[0] + self.fv * x[1];
        let d2 = |x: Vector2<f64>, y: Vector2<f64>| {
            self.fuu * (x[0] * y[0]) + self.fuv * (x[0] * y[1] + x[1] * y[0]) + self.fvv * (x[1] * y[1])
        };
        PointFrame {
            f: self.f,
            fu: d1(a),
            fv: d1(b),
            fuu: d2(a, a),
            fuv: d2(a, b),
            fvv: d2(b, b),
        }
    }

    /// Applies a rigid motion `x -> rot x + shift` to the target.
    pub fn moved(&self, rot: &Matrix3<f64>, shift: &Vector3<f64>) -> PointFrame {
        PointFrame {
            f: rot * self.f + shift,
            fu: rot * self.fu,
            fv: rot * self.fv,
            fuu: rot * self.fuu,
            fuv: rot * self.fuv,
            fvv: rot * self.fvv,
        }
    }
}

fn det3(a: &Vector3<f64>, b: &Vector3<f64>, c: &Vector3<f64>) -> f64 {
    a.dot(&b.cross(c))
}

/// A rank-1 frame re-expressed so that the kernel is `d/dv`.
#[derive(Clone, Debug)]
pub struct AlignedFrame {
    pub frame: PointFrame,
    /// Kernel direction in the original source coordinates.
    pub null: Vector2<f64>,
    /// Whether `v` was negated to make `|f_u, f_uv, f_vv| >= 0`.
    pub v_flipped: bool,
}

/// Rotates the source so that the kernel is `d/dv`; flips `v` when
/// `flip_for_positive_c` is set and `|f_u, f_uv, f_vv| < 0`.
pub fn align(fr: &PointFrame, flip_for_positive_c: bool) -> Result<AlignedFrame> {
    let n = null_vector_of(fr)?;
    let a = Vector2::new(n[1], -n[0]);
    let mut aligned = fr.linear_change(a, n);
    aligned.fv = Vector3::zeros();
    let mut v_flipped = false;
    if flip_for_positive_c && det3(&aligned.fu, &aligned.fuv, &aligned.fvv) < 0.0 {
        aligned = aligned.linear_change(Vector2::new(1.0, 0.0), Vector2::new(0.0, -1.0));
        v_flipped = true;
    }
    Ok(AlignedFrame {
        frame: aligned,
        null: n,
        v_flipped,
    })
}

fn require_rank_one(fr: &PointFrame) -> Result<()> {
    let r = rank_of(&fr.fu, &fr.fv);
    if r != 1 {
        return Err(Error::Precondition(format!(
            "expected a rank-1 point, found rank {r}"
        )));
    }
    Ok(())
}

fn umbrella_det(fr: &PointFrame) -> (f64, f64) {
    let det = det3(&fr.fu, &fr.fvv, &fr.fuv);
    let scale = fr.fu.norm() * fr.fvv.norm() * fr.fuv.norm();
    (det, scale)
}

/// Whitney umbrella criterion `|f_u, f_vv, f_uv| != 0` in kernel-aligned
/// coordinates.
pub fn whitney_test(fr: &PointFrame) -> Result<bool> {
    require_rank_one(fr)?;
    let al = align(fr, false)?;
    let (det, scale) = umbrella_det(&al.frame);
    Ok(det.abs() > 1e-9 * (scale + 1.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FundamentalScalars {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e_inv: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct UmbrellaInvariants {
    pub a20: f64,
    pub a11: f64,
    pub a02: f64,
    pub ku_ext: f64,
    pub ka: f64,
    pub v_flipped: bool,
}

/// `A..E` on a kernel-aligned frame with `|f_u, f_uv, f_vv| > 0`.
pub fn fundamental_scalars(fr: &PointFrame) -> FundamentalScalars {
    let (fu, fuu, fuv, fvv) = (&fr.fu, &fr.fuu, &fr.fuv, &fr.fvv);
    let a = fu.dot(fu);
    let b = fu.cross(fvv).norm_squared();
    let c = det3(fu, fuv, fvv);
    let m = det3(fu, fuu, fvv);
    let d = m * m + 4.0 * c * det3(fu, fuv, fuu);
    let gram = a * fvv.dot(fuv) - fu.dot(fuv) * fvv.dot(fu);
    let e_inv = 2.0 * c * gram - b * m;
    FundamentalScalars { a, b, c, d, e_inv }
}

/// The umbrella invariants `a20, a11, a02` (and the derived umbilic and
/// axial curvatures) at an umbrella point.
pub fn umbrella_invariants(fr: &PointFrame) -> Result<(FundamentalScalars, UmbrellaInvariants)> {
    if !whitney_test(fr)? {
        return Err(Error::Precondition("point is not a Whitney umbrella".into()));
    }
    let al = align(fr, true)?;
    let sc = fundamental_scalars(&al.frame);
    let FundamentalScalars { a, b, c, d, e_inv } = sc;
    let c2 = c * c;
    let a20 = 0.25 * a.powf(-1.5) * b.sqrt() * d / c2;
    let a11 = 0.5 * a.powf(-0.5) * e_inv / c2;
    let a02 = a.sqrt() * b.powf(1.5) / c2;
    let inv = UmbrellaInvariants {
        a20,
        a11,
        a02,
        ku_ext: 2.0 * (a11 / a02).abs(),
        ka: ((a20 * a02 - a11 * a11) / a02).abs(),
        v_flipped: al.v_flipped,
    };
    Ok((sc, inv))
}

/// Orthonormal basis of the plane orthogonal to `t`, obtained from
/// `e2, e3` (or `e3, e1` when `t` is close to `e2`) by Gram–Schmidt; the
/// first vector's largest component is positive and the second is `t x b1`.
pub fn normal_plane_basis(t: &Vector3<f64>) -> [Vector3<f64>; 2] {
    let t = t.normalize();
    let mut b1 = Vector3::zeros();
    for e in [Vector3::y(), Vector3::z(), Vector3::x()] {
        let c = e - t * t.dot(&e);
        if c.norm() > 1e-6 {
            b1 = c.normalize();
            break;
        }
    }
    let imax = b1.iamax();
    if b1[imax] < 0.0 {
        b1 = -b1;
    }
    let b2 = t.cross(&b1);
    [b1, b2]
}

fn plane_coords(basis: &[Vector3<f64>; 2], x: &Vector3<f64>) -> Vector2<f64> {
    Vector2::new(basis[0].dot(x), basis[1].dot(x))
}

fn cross2(a: &Vector2<f64>, b: &Vector2<f64>) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ParabolaKind {
    Parabola,
    HalfLine,
    Line,
    Point,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurvatureParabola {
    pub plane_basis: [[f64; 3]; 2],
    pub kind: ParabolaKind,
    pub vertex: [f64; 2],
    pub axis_dir: [f64; 2],
    /// Umbilic curvature; only defined for half-lines.
    pub ku: Option<f64>,
    /// Distance of the vertex from the axis line through the origin.
    pub ku_ext: Option<f64>,
    pub ka: Option<f64>,
}

/// The curve `b -> II(X, X)` over unit vectors `X = a d/du + b d/dv` in
/// kernel-aligned coordinates.
pub fn curvature_parabola(fr: &PointFrame) -> Result<CurvatureParabola> {
    require_rank_one(fr)?;
    let al = align(fr, false)?.frame;
    let basis = normal_plane_basis(&al.fu);
    let a = 1.0 / al.fu.norm();
    // P(b) = p0 + b q + b^2 w
    let p0 = plane_coords(&basis, &al.fuu) * (a * a);
    let q = plane_coords(&basis, &al.fuv) * (2.0 * a);
    let w = plane_coords(&basis, &al.fvv);
    let (qn, wn) = (q.norm(), w.norm());
    let perp = |d: &Vector2<f64>| Vector2::new(-d[1], d[0]);
    let result = |kind, vertex: Vector2<f64>, axis: Vector2<f64>, ku, ku_ext, ka| CurvatureParabola {
        plane_basis: [basis[0].into(), basis[1].into()],
        kind,
        vertex: vertex.into(),
        axis_dir: axis.into(),
        ku,
        ku_ext,
        ka,
    };
    if wn <= 1e-12 {
        if qn <= 1e-12 {
            return Ok(result(ParabolaKind::Point, p0, Vector2::zeros(), None, None, None));
        }
        return Ok(result(ParabolaKind::Line, p0, q / qn, None, None, None));
    }
    let axis = w / wn;
    let nu = perp(&axis);
    if cross2(&q, &w).abs() <= 1e-9 * (qn * wn + 1.0) {
        let qa = q.dot(&axis);
        let vertex = p0 - axis * (qa * qa / (4.0 * wn));
        let ku = vertex.dot(&nu).abs();
        let ka = vertex.dot(&axis).abs();
        return Ok(result(ParabolaKind::HalfLine, vertex, axis, Some(ku), Some(ku), Some(ka)));
    }
    let bstar = -q.dot(&w) / (2.0 * wn * wn);
    let vertex = p0 + q * bstar + w * (bstar * bstar);
    Ok(result(
        ParabolaKind::Parabola,
        vertex,
        axis,
        None,
        Some(vertex.dot(&nu).abs()),
        Some(vertex.dot(&axis).abs()),
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConicKind {
    Ellipse,
    Parabola,
    Hyperbola,
    TwoLines,
    DoubleOrSingleLine,
    DegenerateOther,
}

impl ConicKind {
    pub fn label(self) -> &'static str {
        match self {
            ConicKind::Ellipse => "ellipse",
            ConicKind::Parabola => "parabola",
            ConicKind::Hyperbola => "hyperbola",
            ConicKind::TwoLines => "two_lines",
            ConicKind::DoubleOrSingleLine => "double_or_single_line",
            ConicKind::DegenerateOther => "degenerate_other",
        }
    }
}

/// Conic `y^T M y + l . y + c = 0` in plane coordinates `y` of the plane
/// through `f(p)` orthogonal to `f_u`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FocalConic {
    pub quadratic: [[f64; 2]; 2],
    pub linear: [f64; 2],
    pub constant: f64,
    pub plane_basis: [[f64; 3]; 2],
    pub origin: [f64; 3],
    pub kind: ConicKind,
    /// `det M`
    pub delta: f64,
    /// Determinant of the full 3x3 symmetric matrix.
    pub big_delta: f64,
    /// Kind predicted from the sign of `a20 a02` at umbrella points.
    pub invariant_kind: Option<ConicKind>,
}

impl FocalConic {
    pub fn eval(&self, y: [f64; 2]) -> f64 {
        let m = &self.quadratic;
        let q = m[0][0] * y[0] * y[0] + 2.0 * m[0][1] * y[0] * y[1] + m[1][1] * y[1] * y[1];
        q + self.linear[0] * y[0] + self.linear[1] * y[1] + self.constant
    }
}

/// Returns the kind, `det M`, the full determinant and the squared
/// Frobenius norm of the full matrix.
fn classify_conic(m: &Matrix2<f64>, l: &Vector2<f64>, c: f64) -> (ConicKind, f64, f64, f64) {
    let full = Matrix3::new(
        m[(0, 0)],
        m[(0, 1)],
        l[0] / 2.0,
        m[(1, 0)],
        m[(1, 1)],
        l[1] / 2.0,
        l[0] / 2.0,
        l[1] / 2.0,
        c,
    );
    let scale = full.norm_squared();
    let delta = m.determinant();
    let big = full.determinant();
    if scale == 0.0 {
        return (ConicKind::DegenerateOther, delta, big, scale);
    }
    let delta_zero = delta.abs() <= 1e-9 * scale;
    let big_zero = big.abs() <= 1e-9 * scale.powf(1.5);
    let kind = if !big_zero {
        if delta_zero {
            ConicKind::Parabola
        } else if delta < 0.0 {
            ConicKind::Hyperbola
        } else if big * (m[(0, 0)] + m[(1, 1)]) < 0.0 {
            ConicKind::Ellipse
        } else {
            ConicKind::DegenerateOther
        }
    } else if delta_zero {
        if m.norm() <= 1e-12 * scale.sqrt() && l.norm() <= 1e-12 * scale.sqrt() {
            ConicKind::DegenerateOther
        } else {
            ConicKind::DoubleOrSingleLine
        }
    } else if delta < 0.0 {
        ConicKind::TwoLines
    } else {
        ConicKind::DegenerateOther
    };
    (kind, delta, big, scale)
}

fn invariant_conic_kind(inv: &UmbrellaInvariants) -> (ConicKind, f64) {
    let size = inv.a20.abs() + inv.a11.abs() + inv.a02.abs();
    let rel = inv.a20.abs() / size;
    let kind = if rel <= 1e-9 {
        ConicKind::Parabola
    } else if inv.a20 * inv.a02 < 0.0 {
        ConicKind::Ellipse
    } else {
        ConicKind::Hyperbola
    };
    (kind, rel)
}

/// Focal conic from the distance-squared family. At umbrella points the
/// classification is cross-checked against the sign of `a20 a02`.
pub fn focal_conic(fr: &PointFrame) -> Result<FocalConic> {
    require_rank_one(fr)?;
    let al = align(fr, false)?.frame;
    let basis = normal_plane_basis(&al.fu);
    let p = plane_coords(&basis, &al.fuu);
    let q = plane_coords(&basis, &al.fuv);
    let r = plane_coords(&basis, &al.fvv);
    let a = al.fu.norm_squared();
    // (A - w.f_uu)(-w.f_vv) - (w.f_uv)^2 = 0 with w = y1 b1 + y2 b2
    let pr = p * r.transpose();
    let m = (pr + pr.transpose()) * 0.5 - q * q.transpose();
    let l = -r * a;
    let (kind, delta, big_delta, scale) = classify_conic(&m, &l, 0.0);

    let mut invariant_kind = None;
    if whitney_test(fr)? {
        let (_, inv) = umbrella_invariants(fr)?;
        let (ik, rel) = invariant_conic_kind(&inv);
        let def_margin = delta.abs() / scale;
        let both_confident = rel > 1e-6 && def_margin > 1e-6;
        if ik != kind && both_confident {
            return Err(Error::Consistency(format!(
                "focal conic classified as {} from the distance-squared family but {} from a20 a02",
                kind.label(),
                ik.label()
            )));
        }
        invariant_kind = Some(ik);
    }
    Ok(FocalConic {
        quadratic: [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]],
        linear: l.into(),
        constant: 0.0,
        plane_basis: [basis[0].into(), basis[1].into()],
        origin: fr.f.into(),
        kind,
        delta,
        big_delta,
        invariant_kind,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FormBundle {
    pub e1: f64,
    pub f1: f64,
    pub g1: f64,
    pub l: f64,
    pub m: f64,
    pub n: f64,
    pub k: f64,
}

/// First fundamental form, the unnormalized second fundamental form, and
/// `K = L N - M^2` whose sign is the Gaussian curvature sign at regular points.
pub fn form_bundle(fr: &PointFrame) -> FormBundle {
    let nrm = fr.fu.cross(&fr.fv);
    let l = fr.fuu.dot(&nrm);
    let m = fr.fuv.dot(&nrm);
    let n = fr.fvv.dot(&nrm);
    FormBundle {
        e1: fr.fu.dot(&fr.fu),
        f1: fr.fu.dot(&fr.fv),
        g1: fr.fv.dot(&fr.fv),
        l,
        m,
        n,
        k: l * n - m * m,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::germ::{random_rotation, MapGerm};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn frame(text: &str, u: f64, v: f64, s: f64) -> PointFrame {
        MapGerm::parse(text).unwrap().frame(u, v, s).unwrap()
    }

    fn umbrella_model(a20: f64, a11: f64, a02: f64) -> PointFrame {
        PointFrame {
            f: Vector3::zeros(),
            fu: Vector3::x(),
            fv: Vector3::zeros(),
            fuu: Vector3::new(0.0, 0.0, a20),
            fuv: Vector3::new(0.0, 1.0, a11),
            fvv: Vector3::new(0.0, 0.0, a02),
        }
    }

    #[test]
    fn whitney_examples() {
        assert!(whitney_test(&frame("u; u*v; v^2", 0.0, 0.0, 0.0)).unwrap());
        assert!(!whitney_test(&frame("u; v^2; v*(u^2+v^2)", 0.0, 0.0, 0.0)).unwrap());
        let fr = frame("u; v^2; v*(u^2+v^2)+s*v", 1.0, 0.0, -1.0);
        assert!(whitney_test(&fr).unwrap());
        assert_abs_diff_eq!(umbrella_det(&fr).0, 4.0);
        assert!(whitney_test(&frame("u; v; 0", 0.0, 0.0, 0.0)).is_err());
    }

    #[test]
    fn umbrella_model_invariants() {
        let (sc, inv) = umbrella_invariants(&umbrella_model(0.7, -0.3, 1.5)).unwrap();
        assert_abs_diff_eq!(sc.a, 1.0);
        assert_abs_diff_eq!(sc.b, 1.5 * 1.5);
        assert_abs_diff_eq!(sc.c, 1.5);
        assert_abs_diff_eq!(sc.d, 4.0 * 0.7 * 1.5, epsilon = 1e-14);
        assert_abs_diff_eq!(sc.e_inv, 2.0 * -0.3 * 1.5 * 1.5, epsilon = 1e-14);
        assert_abs_diff_eq!(inv.a20, 0.7, epsilon = 1e-14);
        assert_abs_diff_eq!(inv.a11, -0.3, epsilon = 1e-14);
        assert_abs_diff_eq!(inv.a02, 1.5, epsilon = 1e-14);
        assert!(!inv.v_flipped);
    }

    #[test]
    fn s1_deformation_umbrella_point() {
        let s = 0.1;
        let fr = frame("u; v^2; v*(u^2+v^2)+s*v", s, 0.0, -s * s);
        let (_, inv) = umbrella_invariants(&fr).unwrap();
        assert_abs_diff_eq!(inv.a20, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(inv.a11, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(inv.a02, 50.0, epsilon = 1e-9);
    }

    #[test]
    fn umbrella_closed_form_along_deformation() {
        // (u, v^2, u^2 + v^3 + u^2 v + s v) at (u0, 0), s = -u0^2
        let u0: f64 = 0.3;
        let fr = frame("u; v^2; u^2+v^3+u^2*v+s*v", u0, 0.0, -u0 * u0);
        let (_, inv) = umbrella_invariants(&fr).unwrap();
        let w = 1.0 + 4.0 * u0 * u0;
        let k = 1.0 / (2.0 * u0 * u0);
        assert_abs_diff_eq!(inv.a20, k / w, epsilon = 1e-12);
        assert_abs_diff_eq!(inv.a11, k * w.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(inv.a02, k * w * w, epsilon = 1e-12);
    }

    #[test]
    fn half_line_examples() {
        let cp = curvature_parabola(&frame("u; v^2; v*(u^2+v^2)", 0.0, 0.0, 0.0)).unwrap();
        assert_eq!(cp.kind, ParabolaKind::HalfLine);
        assert_abs_diff_eq!(cp.vertex[0], 0.0);
        assert_abs_diff_eq!(cp.vertex[1], 0.0);
        assert_eq!(cp.axis_dir, [1.0, 0.0]);
        assert_eq!((cp.ku, cp.ka), (Some(0.0), Some(0.0)));

        let cp = curvature_parabola(&frame("u; v^2+u^2; u^2+v^3+u^2*v", 0.0, 0.0, 0.0)).unwrap();
        assert_eq!(cp.kind, ParabolaKind::HalfLine);
        assert_abs_diff_eq!(cp.vertex[0], 2.0);
        assert_abs_diff_eq!(cp.vertex[1], 2.0);
        assert_abs_diff_eq!(cp.ku.unwrap(), 2.0);
        assert_abs_diff_eq!(cp.ka.unwrap(), 2.0);
    }

    #[test]
    fn parabola_of_umbrella_model() {
        let (a20, a11, a02) = (0.4, 0.25, 2.0);
        let cp = curvature_parabola(&umbrella_model(a20, a11, a02)).unwrap();
        assert_eq!(cp.kind, ParabolaKind::Parabola);
        assert_abs_diff_eq!(cp.vertex[0], -2.0 * a11 / a02, epsilon = 1e-14);
        assert_abs_diff_eq!(cp.vertex[1], (a20 * a02 - a11 * a11) / a02, epsilon = 1e-14);
        assert_abs_diff_eq!(cp.axis_dir[0], 0.0);
        assert_abs_diff_eq!(cp.axis_dir[1], 1.0);
        assert_abs_diff_eq!(cp.ku_ext.unwrap(), 2.0 * (a11 / a02).abs(), epsilon = 1e-14);
        assert_eq!(cp.ku, None);
    }

    #[test]
    fn focal_conic_of_model_umbrellas() {
        for (a20, kind) in [(0.5, ConicKind::Hyperbola), (-0.5, ConicKind::Ellipse), (0.0, ConicKind::Parabola)] {
            let c = focal_conic(&umbrella_model(a20, 0.3, 1.2)).unwrap();
            assert_eq!(c.kind, kind);
            assert_eq!(c.invariant_kind, Some(kind));
            assert_abs_diff_eq!(c.delta, -a20 * 1.2, epsilon = 1e-14);
            assert_abs_diff_eq!(c.big_delta, 1.2 * 1.2 / 4.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn focal_conic_example_thresholds() {
        let g = "u; -u^2+v^2; u^2+v^3+v*s+u^2*v";
        for (s, kind) in [
            (-1.0_f64, ConicKind::Ellipse),
            (-0.25, ConicKind::Parabola),
            (-0.2, ConicKind::Hyperbola),
        ] {
            let u0 = (-s).sqrt();
            let c = focal_conic(&frame(g, u0, 0.0, s)).unwrap();
            assert_eq!(c.kind, kind, "s = {s}");
        }
        let c = focal_conic(&frame(g, 0.0, 0.0, 0.0)).unwrap();
        assert_eq!(c.kind, ConicKind::TwoLines);
        let c = focal_conic(&frame("u; v^2; v^3 - v*s^2 + u^2*v", 1.0, 0.0, -1.0)).unwrap();
        assert_eq!(c.kind, ConicKind::Parabola);
        let c = focal_conic(&frame("u; v^2; v*(u^2+v^2)", 0.0, 0.0, 0.0)).unwrap();
        assert_eq!(c.kind, ConicKind::DoubleOrSingleLine);
    }

    #[test]
    fn form_bundle_examples() {
        assert_eq!(form_bundle(&frame("u; v; 0", 0.2, 0.1, 0.0)).k, 0.0);
        let fb = form_bundle(&frame("u; v; sqrt(1-u^2-v^2)", 0.0, 0.0, 0.0));
        assert_abs_diff_eq!(fb.k, 1.0, epsilon = 1e-14);
        let fb = form_bundle(&frame("u; v^2; v*(u^2+v^2)+s*v", 0.3, 0.0, -0.01));
        assert_eq!((fb.l, fb.m, fb.k), (0.0, 0.0, 0.0));
    }

    #[test]
    fn isometry_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let fr = frame("u; v^2+u*s; u^2+v^3+u^2*v+v*s", 0.2, 0.0, -0.04);
        let (_, inv) = umbrella_invariants(&fr).unwrap();
        let conic = focal_conic(&fr).unwrap();
        for _ in 0..10 {
            let rot = random_rotation(&mut rng);
            let moved = fr.moved(&rot, &Vector3::new(0.3, -1.0, 2.0));
            let (_, inv2) = umbrella_invariants(&moved).unwrap();
            for (x, y) in [(inv.a20, inv2.a20), (inv.a11, inv2.a11), (inv.a02, inv2.a02), (inv.ku_ext, inv2.ku_ext), (inv.ka, inv2.ka)] {
                assert_abs_diff_eq!(x, y, epsilon = 1e-9 * (1.0 + x.abs()));
            }
            assert_eq!(focal_conic(&moved).unwrap().kind, conic.kind);
        }
    }

    proptest! {
        #[test]
        fn umbrella_model_round_trip(a20 in -3.0..3.0f64, a11 in -3.0..3.0f64, a02 in 0.01..3.0f64) {
            let (_, inv) = umbrella_invariants(&umbrella_model(a20, a11, a02)).unwrap();
            prop_assert!((inv.a20 - a20).abs() <= 1e-12);
            prop_assert!((inv.a11 - a11).abs() <= 1e-12);
            prop_assert!((inv.a02 - a02).abs() <= 1e-12);
            let cp = curvature_parabola(&umbrella_model(a20, a11, a02)).unwrap();
            prop_assert!((cp.ku_ext.unwrap() - inv.ku_ext).abs() <= 1e-12 * (1.0 + inv.ku_ext));
            prop_assert!((cp.ka.unwrap() - inv.ka).abs() <= 1e-12 * (1.0 + inv.ka));
        }
    }
}
