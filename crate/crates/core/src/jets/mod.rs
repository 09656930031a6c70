//! Truncated multivariate Taylor jets.
//!
//! A [`Jet`] stores the Taylor coefficients `∂^α f(x0) / α!` of a function of
//! `dim` variables for every multi-index with `|α| ≤ order`. Coefficients are
//! kept densely in graded-lexicographic order. Because the ordering is graded,
//! the coefficients of an order-`k` jet are a prefix of those of an order-`k+1`
//! jet in the same dimension, so a single index table per dimension serves all
//! truncation orders.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::sync::OnceLock;

use crate::error::{Error, Result};

mod fd;

pub use fd::{default_step, fd_oracle};

pub const MAX_DIM: usize = 8;
pub const MAX_ORDER: usize = 4;

/// Exponent vector of a partial derivative `∂^|α| / ∂x^α`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MultiIndex {
    exponents: Vec<u8>,
}

impl MultiIndex {
    pub fn new(exponents: &[usize]) -> Result<Self> {
        let order: usize = exponents.iter().sum();
        if order > MAX_ORDER {
            return Err(Error::OrderTooHigh(order));
        }
        Ok(Self {
            exponents: exponents.iter().map(|&e| e as u8).collect(),
        })
    }

    /// The zero multi-index (function value).
    pub fn zero(dim: usize) -> Self {
        Self {
            exponents: vec![0; dim],
        }
    }

    /// `e_i`, the first derivative in variable `i`.
    pub fn unit(i: usize, dim: usize) -> Self {
        let mut exponents = vec![0; dim];
        exponents[i] = 1;
        Self { exponents }
    }

    pub fn dim(&self) -> usize {
        self.exponents.len()
    }

    pub fn order(&self) -> usize {
        self.exponents.iter().map(|&e| e as usize).sum()
    }

    pub fn exponents(&self) -> impl Iterator<Item = usize> + '_ {
        self.exponents.iter().map(|&e| e as usize)
    }

    /// `α! = Π α_i!`
    pub fn factorial(&self) -> f64 {
        self.exponents
            .iter()
            .map(|&e| (1..=e as u32).product::<u32>() as f64)
            .product()
    }
}

impl Ord for MultiIndex {
    // Graded first, then descending lexicographic so x_0 leads within a degree.
    fn cmp(&self, other: &Self) -> Ordering {
        self.order()
            .cmp(&other.order())
            .then_with(|| other.exponents.cmp(&self.exponents))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, e) in self.exponents.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

/// Index tables for one dimension, built up to `MAX_ORDER`.
struct Layout {
    indices: Vec<MultiIndex>,
    lookup: HashMap<Vec<u8>, usize>,
    factorials: Vec<f64>,
    /// `len[k]` = number of coefficients of an order-`k` jet.
    len: [usize; MAX_ORDER + 1],
    /// Cauchy product triples `(a, b, c)` sorted by the degree of `c`.
    products: Vec<(u32, u32, u32)>,
    /// `product_len[k]` = number of triples whose output degree is `≤ k`.
    product_len: [usize; MAX_ORDER + 1],
    /// `raise[i][a]` = index of `α_a + e_i` when `|α_a| < MAX_ORDER`.
    raise: Vec<Vec<usize>>,
}

impl Layout {
    fn build(dim: usize) -> Self {
        let mut indices = Vec::new();
        let mut len = [0; MAX_ORDER + 1];
        for k in 0..=MAX_ORDER {
            let mut cur = vec![0u8; dim];
            push_degree(&mut indices, &mut cur, 0, k);
            len[k] = indices.len();
        }
        let lookup: HashMap<Vec<u8>, usize> = indices
            .iter()
            .enumerate()
            .map(|(i, m)| (m.exponents.clone(), i))
            .collect();
        let factorials = indices.iter().map(MultiIndex::factorial).collect();

        let degree = |i: usize| indices[i].order();
        let mut products = Vec::new();
        for a in 0..indices.len() {
            for b in 0..indices.len() {
                if degree(a) + degree(b) > MAX_ORDER {
                    continue;
                }
                let sum: Vec<u8> = indices[a]
                    .exponents
                    .iter()
                    .zip(&indices[b].exponents)
                    .map(|(x, y)| x + y)
                    .collect();
                products.push((a as u32, b as u32, lookup[&sum] as u32));
            }
        }
        products.sort_by_key(|&(_, _, c)| (degree(c as usize), c));
        let mut product_len = [0; MAX_ORDER + 1];
        for (k, slot) in product_len.iter_mut().enumerate() {
            *slot = products
                .iter()
                .take_while(|&&(_, _, c)| degree(c as usize) <= k)
                .count();
        }

        let raise = (0..dim)
            .map(|i| {
                indices
                    .iter()
                    .map(|m| {
                        if m.order() >= MAX_ORDER {
                            return usize::MAX;
                        }
                        let mut e = m.exponents.clone();
                        e[i] += 1;
                        lookup[&e]
                    })
                    .collect()
            })
            .collect();

        Self {
            indices,
            lookup,
            factorials,
            len,
            products,
            product_len,
            raise,
        }
    }
}

fn push_degree(out: &mut Vec<MultiIndex>, cur: &mut Vec<u8>, pos: usize, remaining: usize) {
    if pos + 1 == cur.len() {
        cur[pos] = remaining as u8;
        out.push(MultiIndex {
            exponents: cur.clone(),
        });
        return;
    }
    for e in (0..=remaining).rev() {
        cur[pos] = e as u8;
        push_degree(out, cur, pos + 1, remaining - e);
    }
    cur[pos] = 0;
}

fn layout(dim: usize) -> &'static Layout {
    static LAYOUTS: [OnceLock<Layout>; MAX_DIM + 1] = [const { OnceLock::new() }; MAX_DIM + 1];
    LAYOUTS[dim].get_or_init(|| Layout::build(dim))
}

/// Number of coefficients of a jet: `C(dim + order, order)`.
pub fn coefficient_count(dim: usize, order: usize) -> usize {
    layout(dim).len[order]
}

/// Truncated Taylor expansion of a scalar function of `dim` variables.
#[derive(Clone, PartialEq)]
pub struct Jet {
    dim: usize,
    order: usize,
    coeffs: Vec<f64>,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet")
            .field("dim", &self.dim)
            .field("order", &self.order)
            .field("coeffs", &self.coeffs)
            .finish()
    }
}

fn check_shape(dim: usize, order: usize) -> Result<()> {
    if dim == 0 || dim > MAX_DIM {
        return Err(Error::DimOutOfRange(dim));
    }
    if order > MAX_ORDER {
        return Err(Error::OrderTooHigh(order));
    }
    Ok(())
}

impl Jet {
    pub fn constant(value: f64, dim: usize, order: usize) -> Result<Self> {
        check_shape(dim, order)?;
        let mut coeffs = vec![0.0; coefficient_count(dim, order)];
        coeffs[0] = value;
        Ok(Self { dim, order, coeffs })
    }

    /// Seeds input variable `i` at `x0`: value `x0`, unit first derivative in slot `i`.
    pub fn variable(i: usize, x0: f64, dim: usize, order: usize) -> Result<Self> {
        check_shape(dim, order)?;
        if i >= dim {
            return Err(Error::IndexOutOfRange { index: i, dim });
        }
        let mut jet = Self::constant(x0, dim, order)?;
        if order >= 1 {
            jet.coeffs[1 + i] = 1.0;
        }
        Ok(jet)
    }

    /// One variable jet per coordinate of `x0`.
    pub fn variables(x0: &[f64], order: usize) -> Result<Vec<Self>> {
        (0..x0.len())
            .map(|i| Self::variable(i, x0[i], x0.len(), order))
            .collect()
    }

    /// Builds a jet from raw Taylor coefficients in graded-lex order.
    pub fn from_coeffs(dim: usize, order: usize, coeffs: Vec<f64>) -> Result<Self> {
        check_shape(dim, order)?;
        if coeffs.len() != coefficient_count(dim, order) {
            return Err(Error::Dimension(format!(
                "expected {} coefficients, got {}",
                coefficient_count(dim, order),
                coeffs.len()
            )));
        }
        Ok(Self { dim, order, coeffs })
    }

    /// A constant with the same shape as `self`.
    pub fn lift(&self, value: f64) -> Self {
        let mut coeffs = vec![0.0; self.coeffs.len()];
        coeffs[0] = value;
        Self {
            dim: self.dim,
            order: self.order,
            coeffs,
        }
    }

    pub fn zero_like(&self) -> Self {
        self.lift(0.0)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Constant term.
    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    /// Taylor coefficient for `alpha`.
    pub fn coeff(&self, alpha: &MultiIndex) -> Result<f64> {
        self.check_index(alpha)?;
        Ok(self.coeffs[layout(self.dim).lookup[&alpha.exponents]])
    }

    /// The partial derivative `∂^α f(x0)`, i.e. the Taylor coefficient times `α!`.
    pub fn partial(&self, alpha: &MultiIndex) -> Result<f64> {
        self.check_index(alpha)?;
        let idx = layout(self.dim).lookup[&alpha.exponents];
        Ok(self.coeffs[idx] * layout(self.dim).factorials[idx])
    }

    /// First derivatives `∂_i f(x0)`.
    pub fn gradient(&self) -> Vec<f64> {
        if self.order == 0 {
            return vec![0.0; self.dim];
        }
        self.coeffs[1..=self.dim].to_vec()
    }

    fn check_index(&self, alpha: &MultiIndex) -> Result<()> {
        if alpha.dim() != self.dim {
            return Err(Error::Dimension(format!(
                "multi-index of dimension {} on a jet of dimension {}",
                alpha.dim(),
                self.dim
            )));
        }
        if alpha.order() > self.order {
            return Err(Error::JetBudget {
                needed: alpha.order(),
                available: self.order,
            });
        }
        Ok(())
    }

    /// Iterates `(multi-index, Taylor coefficient)` pairs.
    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, f64)> + '_ {
        layout(self.dim).indices.iter().zip(self.coeffs.iter().copied())
    }

    /// Drops all coefficients above `order`.
    pub fn truncate(&self, order: usize) -> Self {
        if order >= self.order {
            return self.clone();
        }
        Self {
            dim: self.dim,
            order,
            coeffs: self.coeffs[..coefficient_count(self.dim, order)].to_vec(),
        }
    }

    /// Jet of `∂f/∂x_i`, valid to one order less than `self`.
    pub fn diff(&self, i: usize) -> Result<Self> {
        if i >= self.dim {
            return Err(Error::IndexOutOfRange {
                index: i,
                dim: self.dim,
            });
        }
        if self.order == 0 {
            return Err(Error::JetBudget {
                needed: 1,
                available: 0,
            });
        }
        let lay = layout(self.dim);
        let n = lay.len[self.order - 1];
        let coeffs = (0..n)
            .map(|a| {
                let up = lay.raise[i][a];
                self.coeffs[up] * (lay.indices[a].exponents[i] as f64 + 1.0)
            })
            .collect();
        Ok(Self {
            dim: self.dim,
            order: self.order - 1,
            coeffs,
        })
    }

    fn same_shape(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim || self.order != other.order {
            return Err(Error::ShapeMismatch {
                lhs_dim: self.dim,
                lhs_order: self.order,
                rhs_dim: other.dim,
                rhs_order: other.order,
            });
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.same_shape(other)?;
        Ok(self.zip_with(other, |a, b| a + b))
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.same_shape(other)?;
        Ok(self.zip_with(other, |a, b| a - b))
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.same_shape(other)?;
        Ok(self.mul_unchecked(other))
    }

    pub fn try_div(&self, other: &Self) -> Result<Self> {
        self.same_shape(other)?;
        Ok(self.mul_unchecked(&other.recip()?))
    }

    fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        Self {
            dim: self.dim,
            order: self.order,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    fn mul_unchecked(&self, other: &Self) -> Self {
        let lay = layout(self.dim);
        let mut coeffs = vec![0.0; self.coeffs.len()];
        for &(a, b, c) in &lay.products[..lay.product_len[self.order]] {
            coeffs[c as usize] += self.coeffs[a as usize] * other.coeffs[b as usize];
        }
        Self {
            dim: self.dim,
            order: self.order,
            coeffs,
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            dim: self.dim,
            order: self.order,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    pub fn add_scalar(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.coeffs[0] += s;
        out
    }

    /// `self += s * other`
    pub fn axpy(&mut self, s: f64, other: &Self) {
        assert_shape(self, other);
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += s * b;
        }
    }

    pub fn square(&self) -> Self {
        self.mul_unchecked(self)
    }

    /// Reciprocal by Newton iteration `y ← y(2 − a·y)` from the constant-term inverse.
    ///
    /// Each step doubles the number of correct orders, so orders `< 2^k` are exact
    /// after `k` steps.
    pub fn recip(&self) -> Result<Self> {
        let a0 = self.value();
        if a0 == 0.0 {
            return Err(Error::ZeroDivisor);
        }
        let mut y = self.lift(1.0 / a0);
        let mut exact = 1;
        while exact <= self.order {
            let ay = self.mul_unchecked(&y);
            let correction = ay.scale(-1.0).add_scalar(2.0);
            y = y.mul_unchecked(&correction);
            exact *= 2;
        }
        Ok(y)
    }

    pub fn powi(&self, n: i32) -> Result<Self> {
        if n < 0 {
            return self.recip()?.powi(-n);
        }
        let mut acc = self.lift(1.0);
        let mut base = self.clone();
        let mut e = n as u32;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul_unchecked(&base);
            }
            base = base.square();
            e >>= 1;
        }
        Ok(acc)
    }

    /// Composes the univariate Taylor series `Σ c_k t^k` with the nilpotent part of `self`.
    fn compose_series(&self, series: &[f64]) -> Self {
        let mut nil = self.clone();
        nil.coeffs[0] = 0.0;
        let mut acc = self.lift(series[self.order]);
        for k in (0..self.order).rev() {
            acc = acc.mul_unchecked(&nil).add_scalar(series[k]);
        }
        acc
    }

    pub fn exp(&self) -> Result<Self> {
        let e0 = self.value().exp();
        let mut series = vec![e0; self.order + 1];
        for k in 1..=self.order {
            series[k] = series[k - 1] / k as f64;
        }
        Ok(self.compose_series(&series))
    }

    pub fn ln(&self) -> Result<Self> {
        let a0 = self.value();
        if a0 <= 0.0 || !a0.is_finite() {
            return Err(Error::Domain {
                func: "ln",
                value: a0,
            });
        }
        let mut series = vec![a0.ln(); self.order + 1];
        for (k, c) in series.iter_mut().enumerate().skip(1) {
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            *c = sign / (k as f64 * a0.powi(k as i32));
        }
        Ok(self.compose_series(&series))
    }

    /// `self^r` for real `r`; requires a positive constant term.
    pub fn powf(&self, r: f64) -> Result<Self> {
        let a0 = self.value();
        if a0 <= 0.0 || !a0.is_finite() {
            return Err(Error::Domain {
                func: "pow",
                value: a0,
            });
        }
        // binom(r, k) a0^(r-k)
        let mut series = vec![a0.powf(r); self.order + 1];
        let mut binom = 1.0;
        for k in 1..=self.order {
            binom *= (r - (k as f64 - 1.0)) / k as f64;
            series[k] = binom * a0.powf(r - k as f64);
        }
        Ok(self.compose_series(&series))
    }

    pub fn sqrt(&self) -> Result<Self> {
        if self.value() <= 0.0 {
            return Err(Error::Domain {
                func: "sqrt",
                value: self.value(),
            });
        }
        self.powf(0.5)
    }

    /// Substitutes `inner` (jets in another set of variables) into the Taylor
    /// polynomial `self`, centred at the inner constant terms.
    pub fn compose(&self, inner: &[Jet]) -> Result<Jet> {
        Composer::new(inner, self.order)?.apply(self)
    }
}

fn assert_shape(a: &Jet, b: &Jet) {
    assert!(
        a.dim == b.dim && a.order == b.order,
        "jet shape mismatch: (dim {}, order {}) vs (dim {}, order {})",
        a.dim,
        a.order,
        b.dim,
        b.order
    );
}

/// Precomputed monomials of an inner jet tuple, reused when composing many
/// outer polynomials with the same substitution.
pub struct Composer {
    outer_dim: usize,
    order: usize,
    /// One jet per outer multi-index (graded-lex), `Π (inner_j − inner_j(0))^{α_j}`.
    monomials: Vec<Jet>,
}

impl Composer {
    pub fn new(inner: &[Jet], order: usize) -> Result<Self> {
        let outer_dim = inner.len();
        check_shape(outer_dim, order)?;
        let first = inner
            .first()
            .ok_or_else(|| Error::Dimension("empty substitution".into()))?;
        for j in inner {
            first.same_shape(j)?;
        }
        let order = order.min(first.order);
        let shifts: Vec<Jet> = inner
            .iter()
            .map(|j| j.truncate(order).add_scalar(-j.value()))
            .collect();
        let lay = layout(outer_dim);
        let count = lay.len[order];
        let mut monomials: Vec<Jet> = Vec::with_capacity(count);
        monomials.push(shifts[0].lift(1.0));
        for a in 1..count {
            let alpha = &lay.indices[a];
            let j = alpha.exponents.iter().position(|&e| e > 0).unwrap();
            let mut lower = alpha.exponents.clone();
            lower[j] -= 1;
            let prev = &monomials[lay.lookup[&lower]];
            monomials.push(prev.mul_unchecked(&shifts[j]));
        }
        Ok(Self {
            outer_dim,
            order,
            monomials,
        })
    }

    /// Order of the composed jets.
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn apply(&self, outer: &Jet) -> Result<Jet> {
        if outer.dim != self.outer_dim {
            return Err(Error::Dimension(format!(
                "outer jet has dimension {}, substitution provides {}",
                outer.dim, self.outer_dim
            )));
        }
        let mut acc = self.monomials[0].scale(outer.coeffs[0]);
        let upto = coefficient_count(self.outer_dim, self.order.min(outer.order));
        for (mono, &c) in self.monomials[1..upto].iter().zip(&outer.coeffs[1..upto]) {
            if c != 0.0 {
                acc.axpy(c, mono);
            }
        }
        Ok(if outer.order < self.order {
            acc.truncate(outer.order)
        } else {
            acc
        })
    }
}

impl Add for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        assert_shape(self, rhs);
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl Sub for &Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        assert_shape(self, rhs);
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        assert_shape(self, rhs);
        self.mul_unchecked(rhs)
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Mul<f64> for &Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale(rhs)
    }
}

impl Add<f64> for &Jet {
    type Output = Jet;
    fn add(self, rhs: f64) -> Jet {
        self.add_scalar(rhs)
    }
}

impl Sub<f64> for &Jet {
    type Output = Jet;
    fn sub(self, rhs: f64) -> Jet {
        self.add_scalar(-rhs)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $method:ident) => {
        impl $tr<Jet> for Jet {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                (&self).$method(&rhs)
            }
        }
        impl $tr<&Jet> for Jet {
            type Output = Jet;
            fn $method(self, rhs: &Jet) -> Jet {
                (&self).$method(rhs)
            }
        }
        impl $tr<Jet> for &Jet {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                self.$method(&rhs)
            }
        }
        impl $tr<f64> for Jet {
            type Output = Jet;
            fn $method(self, rhs: f64) -> Jet {
                (&self).$method(rhs)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl AddAssign<&Jet> for Jet {
    fn add_assign(&mut self, rhs: &Jet) {
        self.axpy(1.0, rhs);
    }
}

impl AddAssign<Jet> for Jet {
    fn add_assign(&mut self, rhs: Jet) {
        self.axpy(1.0, &rhs);
    }
}

impl SubAssign<&Jet> for Jet {
    fn sub_assign(&mut self, rhs: &Jet) {
        self.axpy(-1.0, rhs);
    }
}

impl SubAssign<Jet> for Jet {
    fn sub_assign(&mut self, rhs: Jet) {
        self.axpy(-1.0, &rhs);
    }
}

/// Arithmetic selector for [`jet_arith`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    Recip,
}

/// Checked binary/unary jet arithmetic. Unary ops ignore `b`.
pub fn jet_arith(a: &Jet, b: &Jet, op: ArithOp) -> Result<Jet> {
    match op {
        ArithOp::Add => a.try_add(b),
        ArithOp::Sub => a.try_sub(b),
        ArithOp::Mul => a.try_mul(b),
        ArithOp::Div => a.try_div(b),
        ArithOp::Neg => Ok(-a),
        ArithOp::Recip => a.recip(),
    }
}

/// Elementary function selector for [`jet_elem`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ElemFn {
    Exp,
    Ln,
    Sqrt,
    Pow(f64),
}

pub fn jet_elem(a: &Jet, f: ElemFn) -> Result<Jet> {
    match f {
        ElemFn::Exp => a.exp(),
        ElemFn::Ln => a.ln(),
        ElemFn::Sqrt => a.sqrt(),
        ElemFn::Pow(r) => a.powf(r),
    }
}

/// Sum of squares `Σ x_i²`.
pub fn norm_sq(xs: &[Jet]) -> Jet {
    let mut acc = xs[0].zero_like();
    for x in xs {
        acc += x.square();
    }
    acc
}
