//! Dense truncated multivariate Taylor series ("jets") in up to three variables.
//!
//! A [`Jet`] of order `N` in `k` variables stores one real coefficient for every
//! monomial of total degree `<= N`, in graded order. Every operation truncates
//! at `N`; nothing is silently extended. Variables are positional: callers decide
//! whether a 2-variable jet means `(u, v)` or `(u, s)`.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Mutex, OnceLock};

use crate::error::{Error, Result};

pub const MAX_VARS: usize = 3;

/// Exponent vector; entries past `nvars` are always zero.
pub type Exponent = [usize; MAX_VARS];

/// Constant terms below this magnitude count as zero for composition and
/// Newton preconditions.
const ZERO_TOL: f64 = 1e-12;

/// Remainder threshold for exact monomial division (Hadamard quotients).
pub const HADAMARD_TOL: f64 = 1e-10;

fn binom(n: usize, k: usize) -> usize {
    let k = k.min(n - k.min(n));
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

fn table_len(nvars: usize, order: usize) -> usize {
    binom(order + nvars, nvars)
}

fn degree(e: &Exponent) -> usize {
    e.iter().sum()
}

/// Position of a monomial in the graded table. Within one degree the
/// exponents of the later variables increase lexicographically.
fn graded_index(nvars: usize, e: &Exponent) -> usize {
    match nvars {
        1 => e[0],
        2 => {
            let d = e[0] + e[1];
            d * (d + 1) / 2 + e[1]
        }
        3 => {
            let d = e[0] + e[1] + e[2];
            let m = e[1] + e[2];
            d * (d + 1) * (d + 2) / 6 + m * (m + 1) / 2 + e[2]
        }
        _ => unreachable!("jets support 1..=3 variables"),
    }
}

struct Layout {
    exps: Vec<Exponent>,
    /// `degree_start[d]` is the number of monomials of degree `< d`.
    degree_start: Vec<usize>,
}

fn build_layout(nvars: usize, order: usize) -> Layout {
    let mut exps = Vec::with_capacity(table_len(nvars, order));
    let mut degree_start = Vec::with_capacity(order + 2);
    for d in 0..=order {
        degree_start.push(exps.len());
        match nvars {
            1 => exps.push([d, 0, 0]),
            2 => {
                for b in 0..=d {
                    exps.push([d - b, b, 0]);
                }
            }
            3 => {
                for m in 0..=d {
                    for c in 0..=m {
                        exps.push([d - m, m - c, c]);
                    }
                }
            }
            _ => unreachable!(),
        }
    }
    degree_start.push(exps.len());
    debug_assert!(exps
        .iter()
        .enumerate()
        .all(|(i, e)| graded_index(nvars, e) == i));
    Layout { exps, degree_start }
}

fn layout(nvars: usize, order: usize) -> &'static Layout {
    static CACHE: OnceLock<Mutex<HashMap<(usize, usize), &'static Layout>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("jet layout cache poisoned");
    guard
        .entry((nvars, order))
        .or_insert_with(|| Box::leak(Box::new(build_layout(nvars, order))))
}

/// Number of fixed Newton steps for a series solve at `order`:
/// `ceil(log2 N) + 1`, enough since each step doubles the correct order.
pub fn newton_steps(order: usize) -> usize {
    let mut steps = 0;
    while (1usize << steps) < order.max(1) {
        steps += 1;
    }
    steps + 1
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
}

#[derive(Clone, PartialEq)]
pub struct Jet {
    nvars: usize,
    order: usize,
    coeffs: Vec<f64>,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Jet<{} vars, order {}>[", self.nvars, self.order)?;
        let mut first = true;
        for (e, c) in self.terms() {
            if c == 0.0 {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{c}")?;
            for (name, p) in ["x0", "x1", "x2"].iter().zip(e.iter()).take(self.nvars) {
                if *p > 0 {
                    write!(f, "*{name}^{p}")?;
                }
            }
        }
        if first {
            write!(f, "0")?;
        }
        write!(f, "]")
    }
}

impl Jet {
    /// # Panics
    /// If `nvars` is not in `1..=3`.
    pub fn zero(nvars: usize, order: usize) -> Jet {
        assert!(
            (1..=MAX_VARS).contains(&nvars),
            "jets support 1..=3 variables, got {nvars}"
        );
        Jet {
            nvars,
            order,
            coeffs: vec![0.0; table_len(nvars, order)],
        }
    }

    pub fn constant(nvars: usize, order: usize, c: f64) -> Jet {
        let mut j = Jet::zero(nvars, order);
        j.coeffs[0] = c;
        j
    }

    /// The coordinate function `x_i`.
    pub fn var(nvars: usize, order: usize, i: usize) -> Jet {
        assert!(i < nvars, "variable {i} out of range for {nvars} variables");
        let mut j = Jet::zero(nvars, order);
        if order >= 1 {
            let mut e = [0; MAX_VARS];
            e[i] = 1;
            j.coeffs[graded_index(nvars, &e)] = 1.0;
        }
        j
    }

    /// Builds a jet from `(exponents, coefficient)` pairs. Terms above the
    /// order are dropped; repeated exponents accumulate.
    pub fn from_terms(nvars: usize, order: usize, terms: &[(&[usize], f64)]) -> Jet {
        let mut j = Jet::zero(nvars, order);
        for (e, c) in terms {
            let e = pad(e);
            if degree(&e) <= order {
                j.coeffs[graded_index(nvars, &e)] += c;
            }
        }
        j
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeff(&self, e: &[usize]) -> f64 {
        let e = pad(e);
        if degree(&e) > self.order {
            return 0.0;
        }
        self.coeffs[graded_index(self.nvars, &e)]
    }

    /// # Panics
    /// If the monomial lies above the jet order.
    pub fn set_coeff(&mut self, e: &[usize], c: f64) {
        let e = pad(e);
        assert!(degree(&e) <= self.order, "monomial above jet order");
        self.coeffs[graded_index(self.nvars, &e)] = c;
    }

    pub fn constant_term(&self) -> f64 {
        self.coeffs[0]
    }

    /// Partial derivative of the underlying function at the origin:
    /// coefficient times the product of factorials.
    pub fn derivative_at_zero(&self, e: &[usize]) -> f64 {
        let factor: f64 = e
            .iter()
            .map(|&k| (1..=k).map(|i| i as f64).product::<f64>())
            .product();
        self.coeff(e) * factor
    }

    pub fn terms(&self) -> impl Iterator<Item = (Exponent, f64)> + '_ {
        let lay = layout(self.nvars, self.order);
        lay.exps.iter().copied().zip(self.coeffs.iter().copied())
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Largest coefficientwise difference; jets must share arity and order.
    pub fn max_abs_diff(&self, other: &Jet) -> f64 {
        assert!(self.same_shape(other), "jet shape mismatch");
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    fn same_shape(&self, other: &Jet) -> bool {
        self.nvars == other.nvars && self.order == other.order
    }

    fn check_shape(&self, other: &Jet) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::Usage(format!(
                "jet shape mismatch: ({} vars, order {}) vs ({} vars, order {})",
                self.nvars, self.order, other.nvars, other.order
            )))
        }
    }

    pub fn scale(&self, c: f64) -> Jet {
        Jet {
            nvars: self.nvars,
            order: self.order,
            coeffs: self.coeffs.iter().map(|x| x * c).collect(),
        }
    }

    /// `self += c * other`
    fn axpy(&mut self, c: f64, other: &Jet) {
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += c * b;
        }
    }

    pub fn arith(&self, other: &Jet, op: ArithOp) -> Result<Jet> {
        self.check_shape(other)?;
        Ok(match op {
            ArithOp::Add => self.zip_with(other, |a, b| a + b),
            ArithOp::Sub => self.zip_with(other, |a, b| a - b),
            ArithOp::Mul => self.mul_unchecked(other),
        })
    }

    fn zip_with(&self, other: &Jet, f: impl Fn(f64, f64) -> f64) -> Jet {
        Jet {
            nvars: self.nvars,
            order: self.order,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    fn mul_unchecked(&self, other: &Jet) -> Jet {
        let lay = layout(self.nvars, self.order);
        let mut out = vec![0.0; self.coeffs.len()];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            let ea = lay.exps[i];
            let limit = lay.degree_start[self.order - degree(&ea) + 1];
            for (j, &b) in other.coeffs[..limit].iter().enumerate() {
                if b == 0.0 {
                    continue;
                }
                let eb = lay.exps[j];
                let e = [ea[0] + eb[0], ea[1] + eb[1], ea[2] + eb[2]];
                out[graded_index(self.nvars, &e)] += a * b;
            }
        }
        Jet {
            nvars: self.nvars,
            order: self.order,
            coeffs: out,
        }
    }

    /// Formal partial derivative; the top-degree block of the result is zero.
    pub fn partial(&self, var: usize) -> Result<Jet> {
        if var >= self.nvars {
            return Err(Error::Usage(format!(
                "partial derivative in variable {var} of a {}-variable jet",
                self.nvars
            )));
        }
        let mut out = Jet::zero(self.nvars, self.order);
        for (mut e, c) in self.terms() {
            if e[var] == 0 || c == 0.0 {
                continue;
            }
            let k = e[var] as f64;
            e[var] -= 1;
            out.coeffs[graded_index(self.nvars, &e)] += k * c;
        }
        Ok(out)
    }

    /// Evaluates the truncated polynomial at `x`.
    pub fn eval(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.nvars, "evaluation point arity");
        let pows: Vec<Vec<f64>> = x
            .iter()
            .map(|&xi| {
                let mut p = Vec::with_capacity(self.order + 1);
                let mut acc = 1.0;
                for _ in 0..=self.order {
                    p.push(acc);
                    acc *= xi;
                }
                p
            })
            .collect();
        self.terms()
            .filter(|(_, c)| *c != 0.0)
            .map(|(e, c)| c * (0..self.nvars).map(|i| pows[i][e[i]]).product::<f64>())
            .sum()
    }

    /// Same series at another truncation order (zero-extended or truncated).
    pub fn with_order(&self, order: usize) -> Jet {
        let mut out = Jet::zero(self.nvars, order);
        for (e, c) in self.terms() {
            if degree(&e) <= order {
                out.coeffs[graded_index(self.nvars, &e)] = c;
            }
        }
        out
    }

    /// Restriction to `x_var = 0`, with that variable removed.
    pub fn drop_var(&self, var: usize) -> Jet {
        assert!(self.nvars > 1 && var < self.nvars);
        let mut out = Jet::zero(self.nvars - 1, self.order);
        for (e, c) in self.terms() {
            if e[var] != 0 {
                continue;
            }
            let mut r = [0; MAX_VARS];
            let mut k = 0;
            for (i, &ei) in e.iter().enumerate().take(self.nvars) {
                if i != var {
                    r[k] = ei;
                    k += 1;
                }
            }
            out.coeffs[graded_index(out.nvars, &r)] = c;
        }
        out
    }

    /// Embeds into one more variable, inserted at position `pos`, on which
    /// the result does not depend.
    pub fn insert_var(&self, pos: usize) -> Jet {
        assert!(self.nvars < MAX_VARS && pos <= self.nvars);
        let mut out = Jet::zero(self.nvars + 1, self.order);
        for (e, c) in self.terms() {
            let mut r = [0; MAX_VARS];
            let mut k = 0;
            for (i, slot) in r.iter_mut().enumerate().take(self.nvars + 1) {
                if i != pos {
                    *slot = e[k];
                    k += 1;
                }
            }
            out.coeffs[graded_index(out.nvars, &r)] = c;
        }
        out
    }

    /// Exact division by the monomial `x^e`. Coefficients not divisible by
    /// the monomial must be below `tol`, otherwise the quotient is not a
    /// smooth function and the caller's precondition was violated.
    pub fn div_monomial(&self, e_div: &[usize], tol: f64) -> Result<Jet> {
        let ed = pad(e_div);
        let mut out = Jet::zero(self.nvars, self.order);
        for (e, c) in self.terms() {
            if (0..MAX_VARS).all(|i| e[i] >= ed[i]) {
                let q = [e[0] - ed[0], e[1] - ed[1], e[2] - ed[2]];
                out.coeffs[graded_index(self.nvars, &q)] = c;
            } else if c.abs() > tol {
                return Err(Error::Precondition(format!(
                    "division by monomial {:?} leaves remainder {c:e} at exponent {:?}",
                    &ed[..self.nvars],
                    &e[..self.nvars]
                )));
            }
        }
        Ok(out)
    }

    /// Formal composition `self(inner_0, ..., inner_{k-1})`. Inner jets
    /// share one arity and this jet's order, and have zero constant terms.
    pub fn compose(&self, inner: &[Jet]) -> Result<Jet> {
        if inner.len() != self.nvars {
            return Err(Error::Usage(format!(
                "composition of a {}-variable jet with {} inner jets",
                self.nvars,
                inner.len()
            )));
        }
        let m = inner[0].nvars;
        for (i, g) in inner.iter().enumerate() {
            if g.nvars != m || g.order != self.order {
                return Err(Error::Usage(format!(
                    "inner jet {i} has shape ({} vars, order {}), expected ({m} vars, order {})",
                    g.nvars, g.order, self.order
                )));
            }
            if g.constant_term().abs() > ZERO_TOL {
                return Err(Error::Usage(format!(
                    "inner jet {i} has nonzero constant term {}",
                    g.constant_term()
                )));
            }
        }
        let powers: Vec<Vec<Jet>> = inner
            .iter()
            .map(|g| {
                let mut g = g.clone();
                g.coeffs[0] = 0.0;
                let mut p = vec![Jet::constant(m, self.order, 1.0)];
                for k in 1..=self.order {
                    let next = p[k - 1].mul_unchecked(&g);
                    p.push(next);
                }
                p
            })
            .collect();
        let mut prefix = [0; MAX_VARS];
        Ok(self.compose_rec(&powers, &mut prefix, 0, self.order, m))
    }

    /// Nested Horner evaluation: sums `c_e * prod_{i >= depth} P_i^{e_i}` over
    /// exponents agreeing with `prefix` below `depth`.
    fn compose_rec(
        &self,
        powers: &[Vec<Jet>],
        prefix: &mut Exponent,
        depth: usize,
        budget: usize,
        m: usize,
    ) -> Jet {
        let mut acc = Jet::zero(m, self.order);
        if depth + 1 == self.nvars {
            for (e, pw) in powers[depth].iter().enumerate().take(budget + 1) {
                prefix[depth] = e;
                let c = self.coeffs[graded_index(self.nvars, prefix)];
                if c != 0.0 {
                    acc.axpy(c, pw);
                }
            }
        } else {
            for e in 0..=budget {
                prefix[depth] = e;
                let sub = self.compose_rec(powers, prefix, depth + 1, budget - e, m);
                if sub.is_zero() {
                    continue;
                }
                if e == 0 {
                    acc.axpy(1.0, &sub);
                } else {
                    acc.axpy(1.0, &powers[depth][e].mul_unchecked(&sub));
                }
            }
        }
        prefix[depth] = 0;
        acc
    }

    /// Applies the univariate series `sum_j c_j x^j` to `x = self / a0 - 1`
    /// by Horner's rule.
    fn univariate_about_constant(&self, coeffs: &[f64]) -> Jet {
        let a0 = self.constant_term();
        let mut x = self.scale(1.0 / a0);
        x.coeffs[0] = 0.0;
        let mut acc = Jet::constant(self.nvars, self.order, coeffs[coeffs.len() - 1]);
        for &c in coeffs.iter().rev().skip(1) {
            acc = acc.mul_unchecked(&x);
            acc.coeffs[0] += c;
        }
        acc
    }

    /// Square root on the branch with positive constant term.
    pub fn sqrt(&self) -> Result<Jet> {
        let a0 = self.constant_term();
        if a0 <= ZERO_TOL {
            return Err(Error::Domain(format!(
                "square root of a series with constant term {a0}"
            )));
        }
        // binomial coefficients of (1 + x)^(1/2)
        let mut b = vec![1.0];
        for j in 1..=self.order {
            let prev = b[j - 1];
            b.push(prev * (0.5 - (j as f64 - 1.0)) / j as f64);
        }
        Ok(self.univariate_about_constant(&b).scale(a0.sqrt()))
    }

    pub fn recip(&self) -> Result<Jet> {
        let a0 = self.constant_term();
        if a0.abs() <= ZERO_TOL {
            return Err(Error::Domain(format!(
                "reciprocal of a series with constant term {a0}"
            )));
        }
        let b: Vec<f64> = (0..=self.order)
            .map(|j| if j % 2 == 0 { 1.0 } else { -1.0 })
            .collect();
        Ok(self.univariate_about_constant(&b).scale(1.0 / a0))
    }

    pub fn powi(&self, n: i32) -> Result<Jet> {
        let base = if n < 0 { self.recip()? } else { self.clone() };
        let mut result = Jet::constant(self.nvars, self.order, 1.0);
        let mut sq = base;
        let mut k = n.unsigned_abs();
        while k > 0 {
            if k & 1 == 1 {
                result = result.mul_unchecked(&sq);
            }
            k >>= 1;
            if k > 0 {
                sq = sq.mul_unchecked(&sq);
            }
        }
        Ok(result)
    }
}

fn pad(e: &[usize]) -> Exponent {
    assert!(e.len() <= MAX_VARS, "exponent with more than 3 entries");
    let mut out = [0; MAX_VARS];
    out[..e.len()].copy_from_slice(e);
    out
}

/// Checked coefficientwise sum/difference or truncated Cauchy product.
pub fn jet_arith(a: &Jet, b: &Jet, op: ArithOp) -> Result<Jet> {
    a.arith(b, op)
}

macro_rules! impl_binop {
    ($tr:ident, $method:ident, $op:expr) => {
        impl $tr<&Jet> for &Jet {
            type Output = Jet;
            /// # Panics
            /// On mismatched arity or order; use [`Jet::arith`] to get an error instead.
            fn $method(self, rhs: &Jet) -> Jet {
                self.arith(rhs, $op).expect("jet operands must share arity and order")
            }
        }
        impl $tr<Jet> for Jet {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                (&self).$method(&rhs)
            }
        }
    };
}

impl_binop!(Add, add, ArithOp::Add);
impl_binop!(Sub, sub, ArithOp::Sub);
impl_binop!(Mul, mul, ArithOp::Mul);

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

/// Solves `g(x_0, .., W, .., x_{k-1}) = x_slot` for `W`, with `W` in the slot
/// position. Newton iteration in the series ring.
pub fn invert_component(g: &Jet, slot: usize) -> Result<Jet> {
    let (k, n) = (g.nvars(), g.order());
    if slot >= k {
        return Err(Error::Usage(format!("slot {slot} out of range")));
    }
    if g.constant_term().abs() > ZERO_TOL {
        return Err(Error::Precondition(format!(
            "map component does not vanish at the origin ({})",
            g.constant_term()
        )));
    }
    let dg = g.partial(slot)?;
    let d0 = dg.constant_term();
    if d0.abs() <= ZERO_TOL {
        return Err(Error::Degenerate(format!(
            "derivative in variable {slot} vanishes at the origin; map is not invertible"
        )));
    }
    let id: Vec<Jet> = (0..k).map(|i| Jet::var(k, n, i)).collect();
    let target = id[slot].clone();
    let mut w = target.scale(1.0 / d0);
    for _ in 0..newton_steps(n) {
        let mut inner = id.clone();
        inner[slot] = w.clone();
        let r = &g.compose(&inner)? - &target;
        let d = dg.compose(&inner)?;
        w = &w - &(&r * &d.recip()?);
        w.coeffs[0] = 0.0;
    }
    Ok(w)
}

/// Given `lam(u, v, s)` with `lam(0) = 0` and `lam_v(0) != 0`, returns
/// `sigma(u, s)` (a 2-variable jet) with `lam(u, sigma(u, s), s) = 0`.
pub fn implicit_solve(lam: &Jet) -> Result<Jet> {
    if lam.nvars() != 3 {
        return Err(Error::Usage("implicit_solve expects a jet in (u, v, s)".into()));
    }
    let n = lam.order();
    if lam.constant_term().abs() > ZERO_TOL {
        return Err(Error::Precondition(format!(
            "implicit_solve: lam(0) = {} is not zero",
            lam.constant_term()
        )));
    }
    let lam_v = lam.partial(1)?;
    if lam_v.constant_term().abs() <= ZERO_TOL {
        return Err(Error::Degenerate(
            "implicit_solve: d lam / dv vanishes at the origin".into(),
        ));
    }
    let u = Jet::var(2, n, 0);
    let s = Jet::var(2, n, 1);
    let mut sigma = Jet::zero(2, n);
    for _ in 0..newton_steps(n) {
        let inner = [u.clone(), sigma.clone(), s.clone()];
        let r = lam.compose(&inner)?;
        let d = lam_v.compose(&inner)?;
        sigma = &sigma - &(&r * &d.recip()?);
        sigma.coeffs[0] = 0.0;
    }
    Ok(sigma)
}

/// Inverts a source change of the form `(u, V(u, v, s), s)`.
pub fn map_invert(phi: &[Jet; 3]) -> Result<[Jet; 3]> {
    let n = phi[1].order();
    if phi.iter().any(|c| c.nvars() != 3 || c.order() != n) {
        return Err(Error::Usage("map_invert expects three jets in (u, v, s)".into()));
    }
    let u = Jet::var(3, n, 0);
    let s = Jet::var(3, n, 2);
    if phi[0].max_abs_diff(&u) > ZERO_TOL || phi[2].max_abs_diff(&s) > ZERO_TOL {
        return Err(Error::Usage(
            "map_invert expects identity first and third components".into(),
        ));
    }
    let w = invert_component(&phi[1], 1)?;
    Ok([u, w, s])
}

/// Solves `F(u(t), t) = 0` for a branch `u(t) = sum_{i>=1} alpha_i t^i` of a
/// 2-variable jet `F(u, t)` with vanishing 0- and 1-jet and nondegenerate
/// quadratic part. The branch with the largest positive `alpha_1` is taken.
/// Returns `alpha_1 .. alpha_{N-1}`.
pub fn branch_solve(f: &Jet) -> Result<Vec<f64>> {
    if f.nvars() != 2 {
        return Err(Error::Usage("branch_solve expects a jet in (u, t)".into()));
    }
    let n = f.order();
    if n < 2 {
        return Err(Error::Usage("branch_solve needs order >= 2".into()));
    }
    let low = [f.coeff(&[0, 0]), f.coeff(&[1, 0]), f.coeff(&[0, 1])];
    if low.iter().any(|c| c.abs() > ZERO_TOL) {
        return Err(Error::Precondition(
            "branch_solve: F must vanish to first order at the origin".into(),
        ));
    }
    let (a, b, c) = (f.coeff(&[2, 0]), f.coeff(&[1, 1]), f.coeff(&[0, 2]));
    if a.abs() <= ZERO_TOL {
        return Err(Error::Degenerate(
            "branch_solve: leading quadratic has no u^2 term".into(),
        ));
    }
    let disc = b * b - 4.0 * a * c;
    if disc <= ZERO_TOL {
        return Err(Error::Degenerate(format!(
            "branch_solve: leading quadratic has no simple real roots (discriminant {disc})"
        )));
    }
    let sq = disc.sqrt();
    let alpha1 = [(-b + sq) / (2.0 * a), (-b - sq) / (2.0 * a)]
        .into_iter()
        .filter(|r| *r > 0.0)
        .fold(f64::NAN, f64::max);
    if !alpha1.is_finite() {
        return Err(Error::Degenerate(
            "branch_solve: no branch with positive leading coefficient".into(),
        ));
    }
    let slope = 2.0 * a * alpha1 + b;
    let t = Jet::var(1, n, 0);
    let mut alphas = vec![alpha1];
    for i in 2..n {
        let mut u = Jet::zero(1, n);
        for (j, al) in alphas.iter().enumerate() {
            u.set_coeff(&[j + 1], *al);
        }
        let g = f.compose(&[u, t.clone()])?;
        alphas.push(-g.coeff(&[i + 1]) / slope);
    }
    Ok(alphas)
}

/// Series reversion of a univariate jet `p(t)` with `p(0) = 0`, `p'(0) != 0`.
pub fn series_reversion(p: &Jet) -> Result<Jet> {
    if p.nvars() != 1 {
        return Err(Error::Usage("series_reversion expects a univariate jet".into()));
    }
    invert_component(p, 0)
}
