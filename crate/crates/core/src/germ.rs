//! Map-germs `(u, v, s) -> R^3` given as expression triples.

use std::fmt;

use nalgebra::{Matrix3, Matrix3x2, Rotation3, Unit, Vector2, Vector3};
use rand::Rng;

use crate::error::{Error, Result};
use crate::expr::{parse_components, Expr, Var};
use crate::jet::Jet;
use crate::pointwise::{whitney_test, PointFrame, Surface};

/// Singular values below `RANK_TOL * (largest + 1)` count as zero.
pub const RANK_TOL: f64 = 1e-9;

/// Threshold for "vanishes identically" checks on jet coefficients.
pub const VANISH_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GermKind {
    /// Depends on `(u, v)` only.
    Germ,
    /// Depends on the deformation parameter `s` as well.
    Deformation,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MapGerm {
    components: [Expr; 3],
}

impl MapGerm {
    pub fn new(components: [Expr; 3]) -> MapGerm {
        MapGerm { components }
    }

    /// Polynomial germ with the coefficients of three `(u, v, s)` jets.
    pub fn from_jets(jets: &[Jet; 3]) -> MapGerm {
        MapGerm {
            components: [0, 1, 2].map(|i| Expr::from_jet(&jets[i], 1e-14)),
        }
    }

    /// Parses three expressions separated by `;` or newlines.
    pub fn parse(text: &str) -> Result<MapGerm> {
        let comps = parse_components(text)?;
        let n = comps.len();
        let arr: [Expr; 3] = comps.try_into().map_err(|_| Error::Parse {
            line: text.lines().count().max(1),
            column: 1,
            message: format!("expected 3 components, found {n}"),
        })?;
        Ok(MapGerm { components: arr })
    }

    pub fn components(&self) -> &[Expr; 3] {
        &self.components
    }

    pub fn kind(&self) -> GermKind {
        if self.components.iter().any(|c| c.contains_var(Var::S)) {
            GermKind::Deformation
        } else {
            GermKind::Germ
        }
    }

    pub fn eval(&self, u: f64, v: f64, s: f64) -> Result<Vector3<f64>> {
        let p = [u, v, s];
        Ok(Vector3::new(
            self.components[0].eval(p)?,
            self.components[1].eval(p)?,
            self.components[2].eval(p)?,
        ))
    }

    /// Taylor jets of the three components about `(u, v, s)` in all three
    /// variables.
    pub fn jet_at(&self, p: [f64; 3], order: usize) -> Result<[Jet; 3]> {
        self.jets(p, 3, order)
    }

    /// Jets in `(u, v)` about `(u, v)` with the parameter frozen at `p[2]`.
    pub fn jet2_at(&self, p: [f64; 3], order: usize) -> Result<[Jet; 3]> {
        self.jets(p, 2, order)
    }

    fn jets(&self, p: [f64; 3], nvars: usize, order: usize) -> Result<[Jet; 3]> {
        Ok([
            self.components[0].jet(p, nvars, order)?,
            self.components[1].jet(p, nvars, order)?,
            self.components[2].jet(p, nvars, order)?,
        ])
    }

    /// The germ of `f(., ., s0)` at `(u0, v0)` moved to the origin in source
    /// and target.
    pub fn translated(&self, u0: f64, v0: f64, s0: f64) -> Result<MapGerm> {
        let base = self.eval(u0, v0, s0)?;
        let with = [
            Expr::sum(Expr::var(Var::U), Expr::num(u0)),
            Expr::sum(Expr::var(Var::V), Expr::num(v0)),
            Expr::num(s0),
        ];
        let mut comps = self.components.clone();
        for (c, b) in comps.iter_mut().zip(base.iter()) {
            *c = Expr::Sub(Box::new(c.substitute(&with)), Box::new(Expr::num(*b)));
        }
        Ok(MapGerm { components: comps })
    }

    /// The germ at a fixed parameter value (no `s` left).
    pub fn at_parameter(&self, s: f64) -> MapGerm {
        let with = [Expr::var(Var::U), Expr::var(Var::V), Expr::num(s)];
        MapGerm {
            components: self.components.clone().map(|c| c.substitute(&with)),
        }
    }
}

impl fmt::Display for MapGerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}; {}; {}",
            self.components[0], self.components[1], self.components[2]
        )
    }
}

impl Surface for MapGerm {
    fn frame(&self, u: f64, v: f64, s: f64) -> Result<PointFrame> {
        let j = self.jet2_at([u, v, s], 2)?;
        Ok(PointFrame::from_quadratic_jets(&j))
    }
}

fn jacobian(fr: &PointFrame) -> Matrix3x2<f64> {
    Matrix3x2::from_columns(&[fr.fu, fr.fv])
}

/// Singular values (descending) and the right singular vector of the
/// smallest one.
fn svd2(m: &Matrix3x2<f64>) -> (f64, f64, Vector2<f64>) {
    let svd = m.svd(false, true);
    let vt = svd.v_t.expect("right singular vectors requested");
    let (s0, s1) = (svd.singular_values[0], svd.singular_values[1]);
    if s0 >= s1 {
        (s0, s1, vt.row(1).transpose())
    } else {
        (s1, s0, vt.row(0).transpose())
    }
}

pub fn rank_of(fu: &Vector3<f64>, fv: &Vector3<f64>) -> usize {
    let (big, small, _) = svd2(&Matrix3x2::from_columns(&[*fu, *fv]));
    let tol = RANK_TOL * (big + 1.0);
    usize::from(big > tol) + usize::from(small > tol)
}

/// Rank of the Jacobian of `f` at `(u, v)` with parameter `s`.
pub fn rank_at(f: &dyn Surface, u: f64, v: f64, s: f64) -> Result<usize> {
    let fr = f.frame(u, v, s)?;
    Ok(rank_of(&fr.fu, &fr.fv))
}

/// Unit generator of the kernel at a rank-1 point, first nonzero entry positive.
pub fn null_vector(f: &dyn Surface, u: f64, v: f64, s: f64) -> Result<Vector2<f64>> {
    let fr = f.frame(u, v, s)?;
    null_vector_of(&fr)
}

pub fn null_vector_of(fr: &PointFrame) -> Result<Vector2<f64>> {
    let r = rank_of(&fr.fu, &fr.fv);
    if r != 1 {
        return Err(Error::Precondition(format!(
            "null vector requested at a point of rank {r}"
        )));
    }
    let (_, _, mut n) = svd2(&jacobian(fr));
    n.normalize_mut();
    let lead = if n[0].abs() > 1e-9 { n[0] } else { n[1] };
    if lead < 0.0 {
        n = -n;
    }
    Ok(n)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AdmissibilityClause {
    /// `f(0, 0, s) = 0` to the working order.
    BaseCurve,
    /// The differential at the origin has rank one.
    RankOne,
    /// The second derivative along the kernel leaves the image line.
    QuadraticPart,
    /// The base germ is not a Whitney umbrella.
    NotUmbrella,
}

impl AdmissibilityClause {
    pub fn label(self) -> &'static str {
        match self {
            AdmissibilityClause::BaseCurve => "base_curve",
            AdmissibilityClause::RankOne => "rank_one",
            AdmissibilityClause::QuadraticPart => "quadratic_part",
            AdmissibilityClause::NotUmbrella => "not_umbrella",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdmissibilityReport {
    pub failure: Option<(AdmissibilityClause, String)>,
}

impl AdmissibilityReport {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }

    pub fn into_result(self) -> Result<()> {
        match self.failure {
            None => Ok(()),
            Some((c, msg)) => Err(Error::Precondition(format!(
                "admissibility clause '{}' failed: {msg}",
                c.label()
            ))),
        }
    }
}

/// Checks the hypotheses of the normal-form reduction at the origin.
pub fn admissibility_check(f: &MapGerm, order: usize) -> Result<AdmissibilityReport> {
    let fail = |c, msg: String| Ok(AdmissibilityReport { failure: Some((c, msg)) });
    let jets = f.jet_at([0.0; 3], order)?;
    for (i, j) in jets.iter().enumerate() {
        for k in 0..=order {
            let c = j.coeff(&[0, 0, k]);
            if c.abs() > VANISH_TOL {
                return fail(
                    AdmissibilityClause::BaseCurve,
                    format!("component {} has coefficient {c:e} at s^{k} along u = v = 0", i + 1),
                );
            }
        }
    }
    let fr = f.frame(0.0, 0.0, 0.0)?;
    let rank = rank_of(&fr.fu, &fr.fv);
    if rank != 1 {
        return fail(
            AdmissibilityClause::RankOne,
            format!("differential at the origin has rank {rank}"),
        );
    }
    let n = null_vector_of(&fr)?;
    let f_nn = fr.fuu * n[0] * n[0] + fr.fuv * (2.0 * n[0] * n[1]) + fr.fvv * n[1] * n[1];
    let image = {
        let w = fr.fu * n[1] - fr.fv * n[0];
        w.normalize()
    };
    let normal_part = f_nn - image * image.dot(&f_nn);
    if normal_part.norm() <= RANK_TOL * (f_nn.norm() + 1.0) {
        return fail(
            AdmissibilityClause::QuadraticPart,
            "second derivative along the kernel lies in the image; the 2-jet is not (u, v^2, 0)"
                .into(),
        );
    }
    if whitney_test(&fr)? {
        return fail(
            AdmissibilityClause::NotUmbrella,
            "the base germ is a Whitney umbrella".into(),
        );
    }
    Ok(AdmissibilityReport { failure: None })
}

/// Source change `(u, v, s) -> (phi1(u, v, s), phi2(u, v, s), phi3(s))`.
#[derive(Clone, Debug, PartialEq)]
pub struct DiffeoSpec {
    pub components: [Expr; 3],
}

impl DiffeoSpec {
    pub fn identity() -> DiffeoSpec {
        DiffeoSpec {
            components: [Expr::var(Var::U), Expr::var(Var::V), Expr::var(Var::S)],
        }
    }

    pub fn parse(text: &str) -> Result<DiffeoSpec> {
        let g = MapGerm::parse(text)?;
        let d = DiffeoSpec {
            components: g.components,
        };
        d.validate()?;
        Ok(d)
    }

    /// Checks the triangular shape, `phi(0) = 0` and orientation.
    pub fn validate(&self) -> Result<()> {
        let [p1, p2, p3] = &self.components;
        if p3.contains_var(Var::U) || p3.contains_var(Var::V) {
            return Err(Error::Usage(
                "parameter component of a deformation equivalence may depend on s only".into(),
            ));
        }
        let jets = [p1, p2, p3]
            .map(|e| e.jet([0.0; 3], 3, 1))
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        if jets.iter().any(|j| j.constant_term().abs() > VANISH_TOL) {
            return Err(Error::Usage("diffeomorphism must fix the origin".into()));
        }
        let det = jets[0].coeff(&[1, 0, 0]) * jets[1].coeff(&[0, 1, 0])
            - jets[0].coeff(&[0, 1, 0]) * jets[1].coeff(&[1, 0, 0]);
        if det <= 0.0 || jets[2].coeff(&[0, 0, 1]) <= 0.0 {
            return Err(Error::Usage(
                "diffeomorphism must preserve orientation in (u, v) and in s".into(),
            ));
        }
        Ok(())
    }

    /// Polynomial near-identity diffeomorphism with coefficients uniform in
    /// `[-amplitude, amplitude]` on monomials of degree 1..=`degree` (no pure
    /// powers of `s` in the first two components). Redraws until the linear
    /// part in `(u, v)` has determinant at least 0.2.
    pub fn random<R: Rng>(rng: &mut R, degree: usize, amplitude: f64) -> DiffeoSpec {
        let mut monomials = Vec::new();
        for d in 1..=degree {
            for a in 0..=d {
                for b in 0..=d - a {
                    let c = d - a - b;
                    if a + b > 0 {
                        monomials.push([a, b, c]);
                    }
                }
            }
        }
        loop {
            let mut comps = Vec::new();
            for base in [Var::U, Var::V] {
                let mut e = Expr::var(base);
                for m in &monomials {
                    let c = rng.random_range(-amplitude..=amplitude);
                    e = Expr::sum(e, Expr::monomial(c, *m));
                }
                comps.push(e);
            }
            let mut p3 = Expr::var(Var::S);
            for k in 1..=degree {
                let c = rng.random_range(-amplitude..=amplitude);
                p3 = Expr::sum(p3, Expr::monomial(c, [0, 0, k]));
            }
            comps.push(p3);
            let d = DiffeoSpec {
                components: comps.try_into().expect("three components"),
            };
            let lin: Vec<Jet> = d.components[..2]
                .iter()
                .map(|e| e.jet([0.0; 3], 3, 1).expect("polynomial"))
                .collect();
            let det = lin[0].coeff(&[1, 0, 0]) * lin[1].coeff(&[0, 1, 0])
                - lin[0].coeff(&[0, 1, 0]) * lin[1].coeff(&[1, 0, 0]);
            if det >= 0.2 && d.validate().is_ok() {
                return d;
            }
        }
    }
}

fn check_rotation(rot: &Matrix3<f64>) -> Result<()> {
    let err = (rot.transpose() * rot - Matrix3::identity()).abs().max();
    if err > 1e-9 || (rot.determinant() - 1.0).abs() > 1e-9 {
        return Err(Error::Usage("target map must be a rotation (SO(3))".into()));
    }
    Ok(())
}

/// The germ `rot . f . phi` as a new expression triple.
pub fn apply_equivalence(f: &MapGerm, diffeo: &DiffeoSpec, rot: &Matrix3<f64>) -> Result<MapGerm> {
    diffeo.validate()?;
    check_rotation(rot)?;
    let composed = f.components.clone().map(|c| c.substitute(&diffeo.components));
    if *rot == Matrix3::identity() {
        return Ok(MapGerm::new(composed));
    }
    let rows: Vec<Expr> = (0..3)
        .map(|i| {
            let mut acc: Option<Expr> = None;
            for (j, comp) in composed.iter().enumerate() {
                let c = rot[(i, j)];
                if c == 0.0 {
                    continue;
                }
                let term = Expr::product(Expr::num(c), comp.clone());
                acc = Some(match acc {
                    None => term,
                    Some(a) => Expr::sum(a, term),
                });
            }
            acc.unwrap_or(Expr::Num(0.0))
        })
        .collect();
    Ok(MapGerm::new(rows.try_into().expect("three rows")))
}

/// Random rotation: axis uniform on the sphere, angle uniform in `[0, pi]`.
pub fn random_rotation<R: Rng>(rng: &mut R) -> Matrix3<f64> {
    let axis = loop {
        let a = Vector3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let n = a.norm();
        if n > 1e-3 && n <= 1.0 {
            break a;
        }
    };
    let angle = rng.random_range(0.0..std::f64::consts::PI);
    Rotation3::from_axis_angle(&Unit::new_normalize(axis), angle).into_inner()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const S1_PLUS: &str = "u; v^2; v*(u^2+v^2)+s*v";

    #[test]
    fn translation_moves_point_to_origin() {
        let f = MapGerm::parse("u; v^2; v*(u^2+v^2)+s*v").unwrap();
        let g = f.translated(0.5, 0.0, -0.25).unwrap();
        assert_eq!(g.kind(), GermKind::Germ);
        assert!(g.eval(0.0, 0.0, 7.0).unwrap().norm() < 1e-15);
        let d = g.eval(0.1, 0.2, 0.0).unwrap() - (f.eval(0.6, 0.2, -0.25).unwrap() - f.eval(0.5, 0.0, -0.25).unwrap());
        assert!(d.norm() < 1e-15);
    }

    #[test]
    fn parses_model_germs() {
        let f = MapGerm::parse(S1_PLUS).unwrap();
        assert_eq!(f.kind(), GermKind::Deformation);
        let p = f.eval(1.0, 2.0, 3.0).unwrap();
        assert_eq!(p, Vector3::new(1.0, 4.0, 2.0 * 5.0 + 6.0));
        let w = MapGerm::parse("u; u*v; v^2").unwrap();
        assert_eq!(w.kind(), GermKind::Germ);
        let e5 = MapGerm::parse("u; v^2; v^3 - v*s^2 + u^2*v").unwrap();
        assert_eq!(e5.eval(1.0, 1.0, 2.0).unwrap()[2], 1.0 - 4.0 + 1.0);
        assert_eq!(MapGerm::parse(&f.to_string()).unwrap(), f);
    }

    #[test]
    fn wrong_component_count() {
        assert!(matches!(MapGerm::parse("u; v"), Err(Error::Parse { .. })));
        assert!(matches!(MapGerm::parse("u; v; s; u"), Err(Error::Parse { .. })));
    }

    #[test]
    fn jet_at_polynomial() {
        let f = MapGerm::parse("u; v^2; v*(u^2+v^2)").unwrap();
        let j = f.jet_at([0.0; 3], 3).unwrap();
        assert_eq!(j[0], Jet::var(3, 3, 0));
        assert_eq!(j[1], Jet::from_terms(3, 3, &[(&[0, 2, 0], 1.0)]));
        assert_eq!(
            j[2],
            Jet::from_terms(3, 3, &[(&[2, 1, 0], 1.0), (&[0, 3, 0], 1.0)])
        );
        let shifted = MapGerm::parse("u - 1; v^2; v").unwrap();
        let j = shifted.jet2_at([1.0, 0.0, 0.0], 3).unwrap();
        assert!(j.iter().all(|c| c.constant_term() == 0.0));
    }

    #[test]
    fn jet_matches_finite_differences() {
        let f = MapGerm::parse("u + v*s; u^2*v - v^3/3 + s*u; u*v + v^2*s^2").unwrap();
        let p = [0.3, -0.2, 0.5];
        let j = f.jet2_at(p, 3).unwrap();
        let h = 1e-5;
        for (k, jk) in j.iter().enumerate() {
            let g = |du: f64, dv: f64| f.eval(p[0] + du, p[1] + dv, p[2]).unwrap()[k];
            let fu = (g(h, 0.0) - g(-h, 0.0)) / (2.0 * h);
            let fvv = (g(0.0, h) - 2.0 * g(0.0, 0.0) + g(0.0, -h)) / (h * h);
            let fuv = (g(h, h) - g(h, -h) - g(-h, h) + g(-h, -h)) / (4.0 * h * h);
            assert_abs_diff_eq!(jk.derivative_at_zero(&[1, 0]), fu, epsilon = 1e-6);
            assert_abs_diff_eq!(jk.derivative_at_zero(&[0, 2]), fvv, epsilon = 1e-4);
            assert_abs_diff_eq!(jk.derivative_at_zero(&[1, 1]), fuv, epsilon = 1e-4);
        }
    }

    #[test]
    fn rank_and_null_vector() {
        let f = MapGerm::parse("u; v^2; v*(u^2+v^2)").unwrap();
        assert_eq!(rank_at(&f, 0.0, 0.0, 0.0).unwrap(), 1);
        let n = null_vector(&f, 0.0, 0.0, 0.0).unwrap();
        assert_abs_diff_eq!(n[0], 0.0);
        assert_abs_diff_eq!(n[1], 1.0);

        let plane = MapGerm::parse("u; v; 0").unwrap();
        assert_eq!(rank_at(&plane, 0.0, 0.0, 0.0).unwrap(), 2);
        assert!(null_vector(&plane, 0.0, 0.0, 0.0).is_err());

        let g = MapGerm::parse(S1_PLUS).unwrap();
        assert_eq!(rank_at(&g, 1.0, 0.0, -1.0).unwrap(), 1);
        let n = null_vector(&g, 1.0, 0.0, -1.0).unwrap();
        assert_abs_diff_eq!(n[1], 1.0, epsilon = 1e-15);

        let tilted = MapGerm::parse("u + v; 0; 0").unwrap();
        let n = null_vector(&tilted, 0.0, 0.0, 0.0).unwrap();
        assert!(n[0] > 0.0);
        assert_abs_diff_eq!(n[0], -n[1], epsilon = 1e-15);
    }

    #[test]
    fn admissibility_examples() {
        for g in [
            S1_PLUS,
            "u; v^2; v*(u^2-v^2)+s*v",
            "u; v^2+u*s; u^2+v^3+u^2*v+v*s",
            "u; -u^2+v^2; u^2+v^3+v*s+u^2*v",
            "u; v^2; v^3 - v*s^2 + u^2*v",
        ] {
            let f = MapGerm::parse(g).unwrap();
            assert!(admissibility_check(&f, 8).unwrap().passed(), "{g}");
        }
        let cube = MapGerm::parse("u; v^3; 0").unwrap();
        let r = admissibility_check(&cube, 8).unwrap();
        assert_eq!(r.failure.unwrap().0, AdmissibilityClause::QuadraticPart);

        let moving = MapGerm::parse("u; v^2 + s; v*s").unwrap();
        let r = admissibility_check(&moving, 8).unwrap();
        assert_eq!(r.failure.unwrap().0, AdmissibilityClause::BaseCurve);

        let plane = MapGerm::parse("u; v; s*u").unwrap();
        let r = admissibility_check(&plane, 8).unwrap();
        assert_eq!(r.failure.unwrap().0, AdmissibilityClause::RankOne);

        let umbrella = MapGerm::parse("u; u*v; v^2").unwrap();
        let r = admissibility_check(&umbrella, 8).unwrap();
        assert_eq!(r.failure.unwrap().0, AdmissibilityClause::NotUmbrella);
    }

    #[test]
    fn equivalence_identity_and_shape() {
        let f = MapGerm::parse(S1_PLUS).unwrap();
        let g = apply_equivalence(&f, &DiffeoSpec::identity(), &Matrix3::identity()).unwrap();
        assert_eq!(g, f);
        let bad = DiffeoSpec {
            components: [Expr::var(Var::U), Expr::var(Var::V), Expr::var(Var::U)],
        };
        assert!(matches!(
            apply_equivalence(&f, &bad, &Matrix3::identity()),
            Err(Error::Usage(_))
        ));
        let reversing = DiffeoSpec::parse("u; -v; s").unwrap_err();
        assert!(matches!(reversing, Error::Usage(_)));
    }

    #[test]
    fn equivalence_composes_pointwise() {
        let f = MapGerm::parse(S1_PLUS).unwrap();
        let d = DiffeoSpec::parse("u; v + u^2; 2*s").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rot = random_rotation(&mut rng);
        let g = apply_equivalence(&f, &d, &rot).unwrap();
        let (u, v, s) = (0.3, -0.4, 0.2);
        let expected = rot * f.eval(u, v + u * u, 2.0 * s).unwrap();
        let got = g.eval(u, v, s).unwrap();
        assert!((expected - got).norm() < 1e-14);
        assert!(MapGerm::parse(&g.to_string()).unwrap() == g);
    }

    #[test]
    fn random_diffeos_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let d = DiffeoSpec::random(&mut rng, 3, 0.5);
            d.validate().unwrap();
            let j = d.components[0].jet([0.0; 3], 3, 3).unwrap();
            assert_eq!(j.coeff(&[0, 0, 1]), 0.0);
            assert_eq!(j.coeff(&[0, 0, 2]), 0.0);
            assert!(!d.components[2].contains_var(Var::U));
        }
        let r = random_rotation(&mut rng);
        assert!((r.transpose() * r - Matrix3::identity()).abs().max() < 1e-12);
    }
}
