//! Parameter sweeps over a normalized deformation: the singular locus for
//! `s = -s~^2`, its series expansion, the blow-up of the umbrella
//! invariants, the Gauss curvature sign, and the trajectory of the
//! singular points.

use nalgebra::{DMatrix, Matrix2, Vector2, Vector3};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::germ::rank_of;
use crate::jet::{branch_solve, Jet};
use crate::normal_form::{scalar_coefficients, CoefficientSet, NormalFormData, CLASSIFY_TOL};
use crate::pointwise::{focal_conic, form_bundle, umbrella_invariants, whitney_test, ConicKind, Surface, UmbrellaInvariants};

/// Default radius for singular points around the origin.
pub const LOCUS_RADIUS: f64 = 1.0;
const IMAG_TOL: f64 = 1e-8;
const LOCUS_RESIDUAL_TOL: f64 = 1e-10;
/// Limits below this magnitude count as zero in the boundedness test.
pub const BOUNDED_TOL: f64 = 1e-6;

/// `-1` for the `c2 > 0` branch (`s = -s~^2`), `+1` when `c2 < 0`.
fn parameter_sign(cs: &CoefficientSet) -> Result<f64> {
    if cs.c2_0.abs() < CLASSIFY_TOL {
        return Err(Error::Degenerate(format!(
            "(F33)_uu (0, 0) = {:e} vanishes; the locus is not a pair of branches",
            cs.c2_0
        )));
    }
    Ok(-cs.c2_0.signum())
}

/// Parameter value belonging to `s_tilde`.
pub fn parameter_of(cs: &CoefficientSet, s_tilde: f64) -> Result<f64> {
    Ok(parameter_sign(cs)? * s_tilde * s_tilde)
}

fn require_normalized(nf: &NormalFormData) -> Result<()> {
    if nf.parameter_normalized() {
        Ok(())
    } else {
        Err(Error::Precondition("the deformation parameter is not normalized".into()))
    }
}

fn horner(p: &[f64], x: f64) -> (f64, f64) {
    let mut val = 0.0;
    let mut der = 0.0;
    for &c in p.iter().rev() {
        der = der * x + val;
        val = val * x + c;
    }
    (val, der)
}

/// Real roots of `p` (lowest degree first) with `|x| < radius`, from the
/// eigenvalues of the companion matrix, polished by Newton steps.
pub fn real_roots(p: &[f64], radius: f64) -> Vec<f64> {
    let scale = p.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
    if scale == 0.0 {
        return Vec::new();
    }
    let mut roots = Vec::new();
    let low = p.iter().take_while(|c| c.abs() <= 1e-14 * scale).count();
    if low > 0 {
        roots.push(0.0);
    }
    let mut q: Vec<f64> = p[low..].to_vec();
    while q.len() > 1 && q.last().is_some_and(|c| c.abs() <= 1e-12 * scale) {
        q.pop();
    }
    let d = q.len() - 1;
    if d >= 1 {
        let lead = q[d];
        let mut comp = DMatrix::<f64>::zeros(d, d);
        for i in 1..d {
            comp[(i, i - 1)] = 1.0;
        }
        for i in 0..d {
            comp[(i, d - 1)] = -q[i] / lead;
        }
        for z in comp.complex_eigenvalues().iter() {
            if z.im.abs() >= IMAG_TOL || z.re.abs() >= radius {
                continue;
            }
            let mut x = z.re;
            for _ in 0..8 {
                let (val, der) = horner(p, x);
                if der == 0.0 {
                    break;
                }
                let step = val / der;
                x -= step;
                if step.abs() <= 1e-16 * (1.0 + x.abs()) {
                    break;
                }
            }
            roots.push(x);
        }
    }
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * (1.0 + b.abs()));
    roots
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PointClass {
    Umbrella,
    S1,
    Degenerate,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SingularPointRecord {
    pub s: f64,
    /// Source point `(u, 0)` in normal-form coordinates.
    pub u: f64,
    pub class: PointClass,
    pub invariants: Option<UmbrellaInvariants>,
    pub conic: Option<ConicKind>,
}

/// Singular points `(u, 0)` of the normal form at parameter `s`, i.e. the
/// real zeros of `F33(., s)` with `|u| < radius`.
pub fn singular_locus(nf: &NormalFormData, s: f64, radius: f64) -> Result<Vec<SingularPointRecord>> {
    require_normalized(nf)?;
    let cs = scalar_coefficients(nf);
    parameter_sign(&cs)?;
    let poly = nf.f33_polynomial(s);
    let mut out = Vec::new();
    for u in real_roots(&poly, radius) {
        let residual = horner(&poly, u).0;
        if residual.abs() > LOCUS_RESIDUAL_TOL {
            return Err(Error::Consistency(format!(
                "root u = {u} of F33(., {s}) leaves residual {residual:e}"
            )));
        }
        let fr = nf.frame(u, 0.0, s)?;
        if rank_of(&fr.fu, &fr.fv) != 1 {
            return Err(Error::Consistency(format!("zero of F33 at u = {u} is not a rank-one point")));
        }
        let record = if whitney_test(&fr)? {
            let (_, inv) = umbrella_invariants(&fr)?;
            SingularPointRecord {
                s,
                u,
                class: PointClass::Umbrella,
                invariants: Some(inv),
                conic: Some(focal_conic(&fr)?.kind),
            }
        } else {
            let class = if s == 0.0 && u.abs() < 1e-9 {
                PointClass::S1
            } else {
                PointClass::Degenerate
            };
            SingularPointRecord {
                s,
                u,
                class,
                invariants: None,
                conic: focal_conic(&fr).ok().map(|c| c.kind),
            }
        };
        out.push(record);
    }
    Ok(out)
}

/// Coefficients of `u(s~) = alpha1 s~ + alpha2 s~^2 + alpha3 s~^3 + ...`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LocusExpansion {
    pub alpha1: f64,
    pub alpha2: f64,
    /// Corrected closed form (`+5 c3^2`), agreeing with the series solution.
    pub alpha3: f64,
    /// Closed form with `4 (c2)_s` and `-5 c3^2` (annotation).
    pub alpha3_stated: f64,
    /// Closed form with `14 (c2)_s` and `-5 c3^2` (annotation).
    pub alpha3_alternate: f64,
    /// Series solution of `F33(u, s(s~)) = 0`, `alpha_1 ..`.
    pub alpha_oracle: Vec<f64>,
}

/// Coefficients of `F33` adapted to the branch: when `c2 < 0` the parameter
/// runs through `s = s~^2` and `-F33` has the signs of `c3, c4` flipped.
fn branch_coefficients(cs: &CoefficientSet) -> (f64, f64, f64, f64, f64) {
    let flip = if cs.c2_0 < 0.0 { -1.0 } else { 1.0 };
    (cs.c20, cs.c1_0, cs.c2_s0, flip * cs.c3_0, flip * cs.c4_00)
}

fn alpha3_closed(cs: &CoefficientSet, c2s_factor: f64, c3_sign: f64) -> f64 {
    let (c20, c1, c2s, c3, c4) = branch_coefficients(cs);
    ((c1 * c1 + c2s_factor * c2s) * c20.powi(4) - 2.0 * (3.0 * c3 * c1 + 2.0 * c4) * c20 * c20
        + c3_sign * 5.0 * c3 * c3)
        / (8.0 * c20.powi(7))
}

/// `F33(u, s(t))` as a jet in `(u, t)`.
fn locus_equation(nf: &NormalFormData, sign: f64) -> Result<Jet> {
    let n = nf.order();
    let t = Jet::var(2, n, 1);
    let s_of_t = (&t * &t).scale(sign);
    nf.components().f33.compose(&[Jet::var(2, n, 0), s_of_t])
}

pub fn locus_expansion(cs: &CoefficientSet, nf: &NormalFormData) -> Result<LocusExpansion> {
    require_normalized(nf)?;
    let sign = parameter_sign(cs)?;
    let alpha_oracle = branch_solve(&locus_equation(nf, sign)?)?;
    let (c20, c1, _, c3, _) = branch_coefficients(cs);
    Ok(LocusExpansion {
        alpha1: 1.0 / c20,
        alpha2: (c1 * c20 * c20 - c3) / (2.0 * c20.powi(4)),
        alpha3: alpha3_closed(cs, 4.0, 1.0),
        alpha3_stated: alpha3_closed(cs, 4.0, -1.0),
        alpha3_alternate: alpha3_closed(cs, 14.0, -1.0),
        alpha_oracle,
    })
}

/// `start * ratio^j`, `j = 0 .. count`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GeometricGrid {
    pub start: f64,
    pub ratio: f64,
    pub count: usize,
}

impl GeometricGrid {
    pub fn new(start: f64, ratio: f64, count: usize) -> Result<GeometricGrid> {
        if !(start.is_finite() && start != 0.0) {
            return Err(Error::Usage(format!("grid start must be finite and nonzero, got {start}")));
        }
        if !(ratio.is_finite() && ratio > 0.0 && ratio != 1.0) {
            return Err(Error::Usage(format!("grid ratio must be positive and not 1, got {ratio}")));
        }
        if count == 0 {
            return Err(Error::Usage("grid must have at least one point".into()));
        }
        Ok(GeometricGrid { start, ratio, count })
    }

    /// Parses `start:ratio:count`.
    pub fn parse(text: &str) -> Result<GeometricGrid> {
        let parts: Vec<&str> = text.split(':').map(str::trim).collect();
        let bad = || Error::Usage(format!("expected start:ratio:count, got {text:?}"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let start = parts[0].parse().map_err(|_| bad())?;
        let ratio = parts[1].parse().map_err(|_| bad())?;
        let count = parts[2].parse().map_err(|_| bad())?;
        GeometricGrid::new(start, ratio, count)
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.count).map(|j| self.start * self.ratio.powi(j as i32)).collect()
    }
}

impl Default for GeometricGrid {
    fn default() -> GeometricGrid {
        GeometricGrid {
            start: 0.1,
            ratio: 0.5,
            count: 7,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceRow {
    pub s_tilde: f64,
    pub s: f64,
    pub u_plus: Option<f64>,
    pub u_minus: Option<f64>,
    /// The umbrella on the branch `u(s~)`: `u_plus` for `s~ > 0`, `u_minus` for `s~ < 0`.
    pub point: Option<SingularPointRecord>,
    /// The umbrella on the opposite branch.
    pub other: Option<SingularPointRecord>,
}

impl TraceRow {
    pub fn invariants(&self) -> Option<&UmbrellaInvariants> {
        self.point.as_ref().and_then(|p| p.invariants.as_ref())
    }

    pub fn conic(&self) -> Option<ConicKind> {
        self.point.as_ref().and_then(|p| p.conic)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceTable {
    pub grid: Vec<f64>,
    pub rows: Vec<TraceRow>,
}

pub fn trace(nf: &NormalFormData, grid: &[f64]) -> Result<TraceTable> {
    let cs = scalar_coefficients(nf);
    let mut rows = Vec::with_capacity(grid.len());
    for &st in grid {
        let s = parameter_of(&cs, st)?;
        let umbrellas: Vec<SingularPointRecord> = singular_locus(nf, s, LOCUS_RADIUS)?
            .into_iter()
            .filter(|r| r.class == PointClass::Umbrella)
            .collect();
        // the branch points are the umbrellas nearest to the origin on each side
        let plus = umbrellas.iter().filter(|r| r.u > 0.0).min_by(|a, b| a.u.total_cmp(&b.u)).cloned();
        let minus = umbrellas.iter().filter(|r| r.u < 0.0).max_by(|a, b| a.u.total_cmp(&b.u)).cloned();
        let (u_plus, u_minus) = (plus.as_ref().map(|r| r.u), minus.as_ref().map(|r| r.u));
        let (point, other) = if st >= 0.0 { (plus, minus) } else { (minus, plus) };
        rows.push(TraceRow {
            s_tilde: st,
            s,
            u_plus,
            u_minus,
            point,
            other,
        });
    }
    Ok(TraceTable {
        grid: grid.to_vec(),
        rows,
    })
}

/// Richardson extrapolation to `h -> 0` of samples `g_j = g(h0 rho^j)` with
/// `g(h) = L + c1 h + c2 h^2 + ...`. Returns the estimate and the change
/// made by the last elimination level.
pub fn richardson(samples: &[f64], ratio: f64, levels: usize) -> (f64, f64) {
    let n = samples.len();
    let levels = levels.min(n.saturating_sub(1));
    let mut col = samples.to_vec();
    let mut prev_best = *samples.last().unwrap_or(&f64::NAN);
    let mut best = prev_best;
    for k in 1..=levels {
        let rk = ratio.powi(k as i32);
        col = col.windows(2).map(|w| (w[1] - rk * w[0]) / (1.0 - rk)).collect();
        prev_best = best;
        best = *col.last().expect("nonempty column");
    }
    (best, (best - prev_best).abs())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InvariantLimit {
    /// Extrapolated `lim s~^2 a(s~)`.
    pub limit: f64,
    /// Extrapolated coefficient of `s~` in `s~^2 a(s~)`.
    pub slope: f64,
    pub error_estimate: f64,
    pub theory: f64,
    pub residual: f64,
    pub bounded: bool,
    pub bounded_theory: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurvatureLimit {
    pub limit: f64,
    pub error_estimate: f64,
    pub theory: f64,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AsymptoticReport {
    pub ratio: f64,
    pub a20: InvariantLimit,
    pub a11: InvariantLimit,
    pub a02: InvariantLimit,
    pub ku_ext: CurvatureLimit,
    pub ka: CurvatureLimit,
    /// `f31(0) != 0`, under which every focal conic near 0 is a hyperbola.
    pub hyperbola_expected: bool,
    pub all_hyperbola: bool,
}

/// Geometric ratio of the grid; errors unless the grid is geometric.
fn grid_ratio(grid: &[f64]) -> Result<f64> {
    if grid.len() < 4 {
        return Err(Error::Usage(format!(
            "extrapolation needs at least 4 grid points, got {}",
            grid.len()
        )));
    }
    let ratio = grid[1] / grid[0];
    for w in grid.windows(2) {
        if ((w[1] / w[0]) - ratio).abs() > 1e-12 * ratio.abs() {
            return Err(Error::Usage("s_tilde grid is not geometric".into()));
        }
    }
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::Usage(format!(
            "s_tilde grid must decrease towards 0 (ratio {ratio})"
        )));
    }
    Ok(ratio)
}

const RICHARDSON_LEVELS: usize = 4;

pub fn asymptotic_limits(t: &TraceTable, cs: &CoefficientSet) -> Result<AsymptoticReport> {
    let ratio = grid_ratio(&t.grid)?;
    let mut inv = Vec::with_capacity(t.rows.len());
    for row in &t.rows {
        let i = row.invariants().ok_or_else(|| {
            Error::Domain(format!("no umbrella on the branch at s_tilde = {}", row.s_tilde))
        })?;
        inv.push(*i);
    }
    let h: Vec<f64> = t.rows.iter().map(|r| r.s_tilde).collect();
    let c2 = 2.0 * cs.c20 * cs.c20;
    let bounded_a11 = cs.f31_0.abs() < CLASSIFY_TOL
        && (3.0 * cs.f31_u - cs.d1 * cs.f21_0).abs() < CLASSIFY_TOL;
    let limit = |get: &dyn Fn(&UmbrellaInvariants) -> f64, theory: f64, bounded_theory: bool| {
        let g: Vec<f64> = inv.iter().zip(&h).map(|(i, h)| h * h * get(i)).collect();
        let (l, err) = richardson(&g, ratio, RICHARDSON_LEVELS);
        let slopes: Vec<f64> = g.windows(2).zip(h.windows(2)).map(|(g, h)| (g[1] - g[0]) / (h[1] - h[0])).collect();
        let (m, _) = richardson(&slopes, ratio, RICHARDSON_LEVELS);
        InvariantLimit {
            limit: l,
            slope: m,
            error_estimate: err,
            theory,
            residual: l - theory,
            bounded: l.abs() < BOUNDED_TOL && m.abs() < BOUNDED_TOL,
            bounded_theory,
        }
    };
    let curvature = |get: &dyn Fn(&UmbrellaInvariants) -> f64, theory: f64| {
        let g: Vec<f64> = inv.iter().map(get).collect();
        let (l, err) = richardson(&g, ratio, RICHARDSON_LEVELS);
        CurvatureLimit {
            limit: l,
            error_estimate: err,
            theory,
            residual: l - theory,
        }
    };
    Ok(AsymptoticReport {
        ratio,
        a20: limit(&|i| i.a20, cs.f31_0 * cs.f31_0 / c2, cs.f31_0.abs() < CLASSIFY_TOL),
        a11: limit(&|i| i.a11, cs.f31_0 / c2, bounded_a11),
        a02: limit(&|i| i.a02, 1.0 / c2, false),
        ku_ext: curvature(&|i| i.ku_ext, 2.0 * cs.f31_0.abs()),
        ka: curvature(&|i| i.ka, 2.0 * cs.f21_0.abs()),
        hyperbola_expected: cs.f31_0.abs() >= CLASSIFY_TOL,
        all_hyperbola: t.rows.iter().all(|r| r.conic() == Some(ConicKind::Hyperbola)),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GaussSample {
    pub theta: f64,
    pub k: f64,
    pub u: f64,
    pub v: f64,
    pub k_value: f64,
    pub sign: i8,
    pub predicted: i8,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GaussProbeReport {
    pub s_tilde: f64,
    /// `u(s~)` of the umbrella on the branch.
    pub u_branch: f64,
    /// `c20^2 + 3 d2 > 0`, in which case `R = 1` for every angle.
    pub unit_radius: bool,
    pub samples: Vec<GaussSample>,
    pub agreement: f64,
    /// Largest `s~` in `(0, 0.5]` found by bisection at which every sample
    /// agrees for both `s~` and `-s~`.
    pub s_tilde0: f64,
    pub agrees_at_half_s_tilde0: bool,
}

fn sign_of(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

/// Segment radius `R(theta)` relative to `u(s~)`.
pub fn probe_radius(cs: &CoefficientSet, theta: f64) -> f64 {
    let c2 = cs.c20 * cs.c20;
    let w = c2 + 3.0 * cs.d2;
    if w > 0.0 {
        1.0
    } else {
        (c2 / (c2 - theta.sin().powi(2) * w)).sqrt()
    }
}

fn gauss_samples(
    nf: &NormalFormData,
    cs: &CoefficientSet,
    s_tilde: f64,
    n_theta: usize,
    n_k: usize,
) -> Result<(f64, Vec<GaussSample>)> {
    let s = parameter_of(cs, s_tilde)?;
    let row = trace(nf, &[s_tilde])?.rows.remove(0);
    let u_branch = row
        .point
        .map(|p| p.u)
        .ok_or_else(|| Error::Domain(format!("no umbrella on the branch at s_tilde = {s_tilde}")))?;
    let mut samples = Vec::with_capacity(n_theta * n_k);
    for j in 0..n_theta {
        let theta = (j as f64 + 0.5) * std::f64::consts::TAU / n_theta as f64;
        let radius = probe_radius(cs, theta);
        let predicted = sign_of(s_tilde * theta.sin() * cs.f31_0);
        for i in 0..n_k {
            let k = radius * (i as f64 + 0.5) / n_k as f64;
            let (u, v) = (k * u_branch * theta.cos(), k * u_branch * theta.sin());
            let kv = form_bundle(&nf.frame(u, v, s)?).k;
            samples.push(GaussSample {
                theta,
                k,
                u,
                v,
                k_value: kv,
                sign: sign_of(kv),
                predicted,
            });
        }
    }
    Ok((u_branch, samples))
}

fn all_agree(samples: &[GaussSample]) -> bool {
    samples.iter().all(|g| g.sign == g.predicted)
}

/// Samples the sign of `K = L N - M^2` on rays from the origin out to the
/// umbrella distance and compares it with `sign(s~ sin(theta) f31(0))`.
pub fn gauss_sign_probe(
    nf: &NormalFormData,
    cs: &CoefficientSet,
    s_tilde: f64,
    n_theta: usize,
    n_k: usize,
) -> Result<GaussProbeReport> {
    if cs.f31_0.abs() < CLASSIFY_TOL {
        return Err(Error::Precondition(
            "the Gauss sign law needs F31(0) != 0".into(),
        ));
    }
    if s_tilde == 0.0 || n_theta == 0 || n_k == 0 {
        return Err(Error::Usage("probe needs s_tilde != 0 and nonempty grids".into()));
    }
    let (u_branch, samples) = gauss_samples(nf, cs, s_tilde, n_theta, n_k)?;
    let agreeing = samples.iter().filter(|g| g.sign == g.predicted).count();
    let agreement = agreeing as f64 / samples.len() as f64;

    let good = |st: f64| -> bool {
        [st, -st].iter().all(|&x| {
            gauss_samples(nf, cs, x, n_theta, n_k)
                .map(|(_, smp)| all_agree(&smp))
                .unwrap_or(false)
        })
    };
    let s_tilde0 = if good(0.5) {
        0.5
    } else {
        let (mut lo, mut hi) = (0.0, 0.5);
        for _ in 0..20 {
            let mid = 0.5 * (lo + hi);
            if good(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };
    let agrees_at_half_s_tilde0 = s_tilde0 > 0.0 && good(0.5 * s_tilde0);
    Ok(GaussProbeReport {
        s_tilde,
        u_branch,
        unit_radius: cs.c20 * cs.c20 + 3.0 * cs.d2 > 0.0,
        samples,
        agreement,
        s_tilde0,
        agrees_at_half_s_tilde0,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrajectoryReport {
    pub kappa0: f64,
    /// `2 sqrt(f21(0)^2 + f31(0)^2)`
    pub kappa_theory: f64,
    pub tau0: Option<f64>,
    pub kappa_prime0: Option<f64>,
    pub recovered_f24: Option<f64>,
    pub recovered_f34: Option<f64>,
    /// The same recovery with the opposite sign of the `kappa'` term.
    pub recovered_f24_alt_sign: Option<f64>,
    pub recovered_f34_alt_sign: Option<f64>,
    pub note: Option<String>,
}

fn dot(a: &[Jet; 3], b: &[Jet; 3]) -> Jet {
    &(&(&a[0] * &b[0]) + &(&a[1] * &b[1])) + &(&a[2] * &b[2])
}

fn cross(a: &[Jet; 3], b: &[Jet; 3]) -> [Jet; 3] {
    [
        &(&a[1] * &b[2]) - &(&a[2] * &b[1]),
        &(&a[2] * &b[0]) - &(&a[0] * &b[2]),
        &(&a[0] * &b[1]) - &(&a[1] * &b[0]),
    ]
}

fn at0(j: &[Jet; 3]) -> Vector3<f64> {
    Vector3::new(j[0].constant_term(), j[1].constant_term(), j[2].constant_term())
}

/// Curvature, torsion and `d kappa / ds~` at `s~ = 0` of the trajectory
/// `gamma(s~) = f(u(s~), 0, s(s~))` of the singular points.
pub fn trajectory_geometry(nf: &NormalFormData, cs: &CoefficientSet) -> Result<TrajectoryReport> {
    require_normalized(nf)?;
    let sign = parameter_sign(cs)?;
    let n = nf.order();
    let alpha = branch_solve(&locus_equation(nf, sign)?)?;
    let mut u_of_t = Jet::zero(1, n);
    for (i, a) in alpha.iter().enumerate() {
        u_of_t.set_coeff(&[i + 1], *a);
    }
    let t = Jet::var(1, n, 0);
    let inner = [u_of_t, Jet::zero(1, n), (&t * &t).scale(sign)];
    let asm = nf.assembled();
    let gamma = [asm[0].compose(&inner)?, asm[1].compose(&inner)?, asm[2].compose(&inner)?];
    let d = |g: &[Jet; 3]| -> Result<[Jet; 3]> { Ok([g[0].partial(0)?, g[1].partial(0)?, g[2].partial(0)?]) };
    let g1 = d(&gamma)?;
    let g2 = d(&g1)?;
    let g3 = d(&g2)?;
    let c = cross(&g1, &g2);
    let (v1, v3, c0) = (at0(&g1), at0(&g3), at0(&c));
    let kappa0 = c0.norm() / v1.norm().powi(3);
    let kappa_theory = 2.0 * cs.f21_0.hypot(cs.f31_0);
    if kappa0 < 1e-12 {
        return Ok(TrajectoryReport {
            kappa0,
            kappa_theory,
            tau0: None,
            kappa_prime0: None,
            recovered_f24: None,
            recovered_f34: None,
            recovered_f24_alt_sign: None,
            recovered_f34_alt_sign: None,
            note: Some("trajectory has zero curvature at 0; torsion and recovery skipped".into()),
        });
    }
    let tau0 = c0.dot(&v3) / c0.norm_squared();
    let speed = dot(&g1, &g1).sqrt()?;
    let kappa = &dot(&c, &c).sqrt()? * &speed.powi(-3)?;
    let kappa_prime0 = kappa.coeff(&[1]);
    let c20 = cs.c20;
    let denom = 6.0 * c20 * c20;
    let recover = |ks: f64| {
        let t = ks * 2.0 * kappa_prime0 * c20 / kappa0;
        (
            (2.0 * tau0 * cs.f31_0 + t * cs.f21_0 + 6.0 * cs.f21_u) / denom,
            (-2.0 * tau0 * cs.f21_0 + t * cs.f31_0 + 6.0 * cs.f31_u) / denom,
        )
    };
    let (f24, f34) = recover(-1.0);
    let (f24_alt, f34_alt) = recover(1.0);
    Ok(TrajectoryReport {
        kappa0,
        kappa_theory,
        tau0: Some(tau0),
        kappa_prime0: Some(kappa_prime0),
        recovered_f24: Some(f24),
        recovered_f34: Some(f34),
        recovered_f24_alt_sign: Some(f24_alt),
        recovered_f34_alt_sign: Some(f34_alt),
        note: None,
    })
}

/// A rank-one point of a surface at fixed parameter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RankOnePoint {
    pub u: f64,
    pub v: f64,
    /// `|f_u x f_v|` at the point.
    pub residual: f64,
}

/// Rank-one points of `f(., ., s)` in `[-half_width, half_width]^2`, found
/// by damped Gauss-Newton on `h = f_u x f_v` from a `seeds x seeds` grid.
pub fn rank_one_points(f: &dyn Surface, s: f64, half_width: f64, seeds: usize) -> Result<Vec<RankOnePoint>> {
    let seeds = seeds.max(2);
    let mut found: Vec<RankOnePoint> = Vec::new();
    for i in 0..seeds {
        for j in 0..seeds {
            let step = 2.0 * half_width / (seeds - 1) as f64;
            let mut p = Vector2::new(-half_width + step * i as f64, -half_width + step * j as f64);
            let mut lambda = 1e-3;
            let mut res = f64::INFINITY;
            for _ in 0..200 {
                let fr = f.frame(p[0], p[1], s)?;
                let h = fr.fu.cross(&fr.fv);
                res = h.norm();
                if res < 1e-13 {
                    break;
                }
                let hu = fr.fuu.cross(&fr.fv) + fr.fu.cross(&fr.fuv);
                let hv = fr.fuv.cross(&fr.fv) + fr.fu.cross(&fr.fvv);
                let jtj = Matrix2::new(hu.dot(&hu), hu.dot(&hv), hu.dot(&hv), hv.dot(&hv));
                let jth = Vector2::new(hu.dot(&h), hv.dot(&h));
                let mut accepted = false;
                for _ in 0..30 {
                    let damped = jtj + Matrix2::identity() * (lambda * (jtj.trace() + 1e-300));
                    let Some(delta) = damped.lu().solve(&jth) else {
                        lambda *= 10.0;
                        continue;
                    };
                    let q = p - delta;
                    let frq = f.frame(q[0], q[1], s)?;
                    if frq.fu.cross(&frq.fv).norm() < res {
                        p = q;
                        lambda = (lambda * 0.3).max(1e-12);
                        accepted = true;
                        break;
                    }
                    lambda *= 10.0;
                }
                if !accepted || p.amax() > 4.0 * half_width {
                    break;
                }
            }
            if res < 1e-12 && p.amax() <= half_width * (1.0 + 1e-9) {
                let cand = RankOnePoint { u: p[0], v: p[1], residual: res };
                if let Some(old) = found
                    .iter_mut()
                    .find(|q| (q.u - cand.u).hypot(q.v - cand.v) < 1e-6)
                {
                    if cand.residual < old.residual {
                        *old = cand;
                    }
                } else {
                    found.push(cand);
                }
            }
        }
    }
    found.sort_by(|a, b| a.u.total_cmp(&b.u).then(a.v.total_cmp(&b.v)));
    Ok(found)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::germ::MapGerm;
    use crate::normal_form::reduce;
    use approx::assert_abs_diff_eq;

    fn normalized(text: &str) -> NormalFormData {
        reduce(&MapGerm::parse(text).unwrap(), 8).unwrap().normalize_parameter().unwrap()
    }

    const S1_PLUS: &str = "u; v^2; v*(u^2+v^2)+s*v";
    const HYPERBOLIC: &str = "u; v^2; u^2+v^3+u^2*v+s*v";

    #[test]
    fn roots_of_simple_polynomials() {
        let r = real_roots(&[-0.01, 0.0, 1.0], 1.0);
        assert_eq!(r.len(), 2);
        assert_abs_diff_eq!(r[0], -0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(r[1], 0.1, epsilon = 1e-15);
        assert!(real_roots(&[0.01, 0.0, 1.0], 1.0).is_empty());
        assert_eq!(real_roots(&[0.0, 0.0, 1.0], 1.0), vec![0.0]);
        let r = real_roots(&[-6.0, 11.0, -6.0, 1.0], 2.5);
        assert_eq!(r.len(), 2);
        assert_abs_diff_eq!(r[1], 2.0, epsilon = 1e-12);
    }

    #[test]
    fn model_locus() {
        let nf = normalized(S1_PLUS);
        let pts = singular_locus(&nf, -0.01, 1.0).unwrap();
        assert_eq!(pts.len(), 2);
        for (p, u) in pts.iter().zip([-0.1, 0.1]) {
            assert_abs_diff_eq!(p.u, u, epsilon = 1e-14);
            assert_eq!(p.class, PointClass::Umbrella);
        }
        assert!(singular_locus(&nf, 0.01, 1.0).unwrap().is_empty());
        let origin = singular_locus(&nf, 0.0, 1.0).unwrap();
        assert_eq!(origin.len(), 1);
        assert_eq!(origin[0].class, PointClass::S1);
    }

    #[test]
    fn expansion_examples() {
        let nf = normalized(S1_PLUS);
        let e = locus_expansion(&scalar_coefficients(&nf), &nf).unwrap();
        assert_eq!((e.alpha1, e.alpha2, e.alpha3), (1.0, 0.0, 0.0));
        assert!(e.alpha_oracle.iter().skip(1).all(|a| a.abs() < 1e-12));

        let nf = normalized("u; v^2; v*(s+u^2+u^3)");
        let e = locus_expansion(&scalar_coefficients(&nf), &nf).unwrap();
        assert_abs_diff_eq!(e.alpha2, -0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(e.alpha_oracle[1], -0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(e.alpha_oracle[2], e.alpha3, epsilon = 1e-12);
        assert_abs_diff_eq!(e.alpha3, 0.625, epsilon = 1e-12);
        assert_abs_diff_eq!(e.alpha3_stated, -0.625, epsilon = 1e-12);

        let nf = normalized("u; v^2; v*(s+u^2*(1+3*s))");
        let e = locus_expansion(&scalar_coefficients(&nf), &nf).unwrap();
        assert_abs_diff_eq!(e.alpha_oracle[2], 1.5, epsilon = 1e-12);
        assert_abs_diff_eq!(e.alpha3, 1.5, epsilon = 1e-12);
    }

    #[test]
    fn negative_quadratic_branch() {
        let nf = normalized("u; v^2; v*(s-u^2+u^3)");
        let cs = scalar_coefficients(&nf);
        let e = locus_expansion(&cs, &nf).unwrap();
        assert_abs_diff_eq!(e.alpha1, e.alpha_oracle[0], epsilon = 1e-12);
        assert_abs_diff_eq!(e.alpha2, e.alpha_oracle[1], epsilon = 1e-12);
        assert_abs_diff_eq!(e.alpha3, e.alpha_oracle[2], epsilon = 1e-12);
        let row = &trace(&nf, &[0.05]).unwrap().rows[0];
        assert!(row.s > 0.0 && row.point.is_some());
    }

    #[test]
    fn model_trace_closed_form() {
        let nf = normalized(S1_PLUS);
        let grid = GeometricGrid::default().values();
        let t = trace(&nf, &grid).unwrap();
        for row in &t.rows {
            let a02 = row.invariants().unwrap().a02;
            let st = row.s_tilde;
            assert!((a02 - 1.0 / (2.0 * st * st)).abs() < 1e-9 * a02, "{a02} at {st}");
        }
        let rep = asymptotic_limits(&t, &scalar_coefficients(&nf)).unwrap();
        assert!(rep.a20.bounded && rep.a11.bounded && !rep.a02.bounded);
        assert_abs_diff_eq!(rep.a02.limit, 0.5, epsilon = 1e-9);
    }

    #[test]
    fn hyperbolic_germ_limits() {
        let nf = normalized(HYPERBOLIC);
        let cs = scalar_coefficients(&nf);
        let t = trace(&nf, &GeometricGrid::default().values()).unwrap();
        let rep = asymptotic_limits(&t, &cs).unwrap();
        for l in [&rep.a20, &rep.a11, &rep.a02] {
            assert!(l.residual.abs() < 1e-5, "{l:?}");
            assert!(!l.bounded && !l.bounded_theory);
        }
        assert!(rep.all_hyperbola);
        assert!(rep.ku_ext.residual.abs() < 1e-5, "{:?}", rep.ku_ext);
    }

    #[test]
    fn gauss_signs() {
        let plus = normalized("u; v^2+u*s; u^2+v^3+u^2*v+v*s");
        let minus = normalized("u; v^2+u*s; -u^2+v^3+u^2*v+v*s");
        let cp = scalar_coefficients(&plus);
        let cm = scalar_coefficients(&minus);
        let rp = gauss_sign_probe(&plus, &cp, 0.05, 16, 8).unwrap();
        let rm = gauss_sign_probe(&minus, &cm, 0.05, 16, 8).unwrap();
        assert_eq!(rp.agreement, 1.0);
        assert_eq!(rm.agreement, 1.0);
        assert!(rp.samples.iter().zip(&rm.samples).all(|(a, b)| a.sign == -b.sign));
        assert!(rp.agrees_at_half_s_tilde0);
    }

    #[test]
    fn trajectory_examples() {
        let nf = normalized(S1_PLUS);
        let r = trajectory_geometry(&nf, &scalar_coefficients(&nf)).unwrap();
        assert!(r.kappa0 < 1e-12 && r.recovered_f24.is_none());

        let nf = normalized("u; v^2+u^2; v^3+u^2*v+s*v");
        let r = trajectory_geometry(&nf, &scalar_coefficients(&nf)).unwrap();
        assert_abs_diff_eq!(r.kappa0, 2.0, epsilon = 1e-12);

        let nf = normalized("u; v^2+u^2+u^3+2*u*s; u^2+v^3+u^2*v+v*s-u*s+u^3");
        let cs = scalar_coefficients(&nf);
        let r = trajectory_geometry(&nf, &cs).unwrap();
        assert_abs_diff_eq!(r.kappa0, r.kappa_theory, epsilon = 1e-9);
        assert_abs_diff_eq!(r.recovered_f24.unwrap(), cs.f24_00, epsilon = 1e-6);
        assert_abs_diff_eq!(r.recovered_f34.unwrap(), cs.f34_00, epsilon = 1e-6);
    }

    #[test]
    fn rank_one_search_finds_umbrellas() {
        let f = MapGerm::parse(S1_PLUS).unwrap();
        let pts = rank_one_points(&f, -0.25, 2.0, 17).unwrap();
        assert_eq!(pts.len(), 2, "{pts:?}");
        assert_abs_diff_eq!(pts[0].u, -0.5, epsilon = 1e-9);
        assert_abs_diff_eq!(pts[1].u, 0.5, epsilon = 1e-9);
    }
}
