//! Pointwise alternating algebra.
//!
//! Components of a degree `k` tensor are indexed by strictly increasing
//! multi-indices in lexicographic order, stored as bitmasks. Evaluation
//! follows the determinant convention, so `dx∧dy (e1, e2) = 1`.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::jets::Jet;
use crate::linalg;

pub const MAX_DIM: usize = 8;

/// Coefficient ring for tensors: plain reals or jets.
pub trait Scalar: Clone + Send + Sync + std::fmt::Debug {
    fn zero_like(&self) -> Self;
    fn from_f64(&self, v: f64) -> Self;
    fn value(&self) -> f64;
    fn add_scaled(&mut self, o: &Self, s: f64);
    fn add_product(&mut self, a: &Self, b: &Self, s: f64);
    fn mul(&self, o: &Self) -> Self;
    fn scaled(&self, s: f64) -> Self;
    fn recip(&self) -> Result<Self>;
    fn sqrt(&self) -> Result<Self>;
}

impl Scalar for f64 {
    fn zero_like(&self) -> f64 {
        0.0
    }
    fn from_f64(&self, v: f64) -> f64 {
        v
    }
    fn value(&self) -> f64 {
        *self
    }
    fn add_scaled(&mut self, o: &f64, s: f64) {
        *self += o * s;
    }
    fn add_product(&mut self, a: &f64, b: &f64, s: f64) {
        *self += a * b * s;
    }
    fn mul(&self, o: &f64) -> f64 {
        self * o
    }
    fn scaled(&self, s: f64) -> f64 {
        self * s
    }
    fn recip(&self) -> Result<f64> {
        if *self == 0.0 {
            return Err(Error::Domain { primitive: "division", arg: 0.0 });
        }
        Ok(1.0 / self)
    }
    fn sqrt(&self) -> Result<f64> {
        if *self < 0.0 {
            return Err(Error::Domain { primitive: "sqrt", arg: *self });
        }
        Ok(f64::sqrt(*self))
    }
}

impl Scalar for Jet {
    fn zero_like(&self) -> Jet {
        Jet::zero_like(self)
    }
    fn from_f64(&self, v: f64) -> Jet {
        self.constant_like(v)
    }
    fn value(&self) -> f64 {
        Jet::value(self)
    }
    fn add_scaled(&mut self, o: &Jet, s: f64) {
        Jet::add_scaled(self, o, s)
    }
    fn add_product(&mut self, a: &Jet, b: &Jet, s: f64) {
        Jet::add_product(self, a, b, s)
    }
    fn mul(&self, o: &Jet) -> Jet {
        Jet::mul(self, o)
    }
    fn scaled(&self, s: f64) -> Jet {
        self.scale(s)
    }
    fn recip(&self) -> Result<Jet> {
        Jet::recip(self)
    }
    fn sqrt(&self) -> Result<Jet> {
        Jet::sqrt(self)
    }
}

struct Tables {
    /// `lists[n][k]`: masks of k-subsets of {0..n} in lexicographic order.
    lists: Vec<Vec<Vec<u32>>>,
    /// `pos[n][mask]`: position of `mask` within its list.
    pos: Vec<Vec<u16>>,
}

fn tables() -> &'static Tables {
    static T: OnceLock<Tables> = OnceLock::new();
    T.get_or_init(|| {
        let mut lists = Vec::new();
        let mut pos = Vec::new();
        for n in 0..=MAX_DIM {
            let mut by_k = vec![Vec::new(); n + 1];
            let mut p = vec![u16::MAX; 1 << n];
            for k in 0..=n {
                let mut cur = Vec::new();
                subsets(n, k, 0, &mut cur, &mut by_k[k]);
                for (i, &m) in by_k[k].iter().enumerate() {
                    p[m as usize] = i as u16;
                }
            }
            lists.push(by_k);
            pos.push(p);
        }
        Tables { lists, pos }
    })
}

fn subsets(n: usize, k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<u32>) {
    if cur.len() == k {
        out.push(cur.iter().fold(0u32, |m, &i| m | (1 << i)));
        return;
    }
    for i in start..n {
        cur.push(i);
        subsets(n, k, i + 1, cur, out);
        cur.pop();
    }
}

/// Masks of the k-element multi-indices in dimension n, in storage order.
pub fn basis(n: usize, k: usize) -> &'static [u32] {
    &tables().lists[n][k]
}

/// Storage position of a multi-index mask.
pub fn position(n: usize, mask: u32) -> usize {
    tables().pos[n][mask as usize] as usize
}

/// Sign of the permutation sorting the concatenation `a ++ b` of two
/// disjoint increasing index sets. This is the only parity routine.
pub fn merge_sign(a: u32, b: u32) -> f64 {
    let mut inversions = 0u32;
    let mut rest = b;
    while rest != 0 {
        let j = rest.trailing_zeros();
        rest &= rest - 1;
        let above = if j >= 31 { 0 } else { a >> (j + 1) };
        inversions += above.count_ones();
    }
    if inversions % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Indices of a mask in increasing order.
pub fn indices(mask: u32) -> Vec<usize> {
    (0..32).filter(|i| mask & (1 << i) != 0).collect()
}

pub fn mask_of(idx: &[usize]) -> u32 {
    idx.iter().fold(0u32, |m, &i| m | (1 << i))
}

fn binom(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1, |r, i| r * (n - i) / (i + 1))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variance {
    Covariant,
    Contravariant,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AltTensor<S = f64> {
    dim: usize,
    degree: usize,
    variance: Variance,
    comps: Vec<S>,
}

impl<S: Scalar> AltTensor<S> {
    pub fn new(dim: usize, degree: usize, variance: Variance, comps: Vec<S>) -> Result<Self> {
        if dim > MAX_DIM || degree > dim {
            return Err(Error::Dimension(format!("degree {degree} in dimension {dim}")));
        }
        if comps.len() != binom(dim, degree) {
            return Err(Error::Dimension(format!(
                "{} components for degree {degree} in dimension {dim}",
                comps.len()
            )));
        }
        Ok(AltTensor { dim, degree, variance, comps })
    }

    pub fn zeros(dim: usize, degree: usize, variance: Variance, proto: &S) -> Self {
        let comps = vec![proto.zero_like(); binom(dim, degree)];
        AltTensor { dim, degree, variance, comps }
    }

    pub fn form(dim: usize, degree: usize, comps: Vec<S>) -> Result<Self> {
        Self::new(dim, degree, Variance::Covariant, comps)
    }

    pub fn scalar(dim: usize, s: S) -> Self {
        AltTensor { dim, degree: 0, variance: Variance::Covariant, comps: vec![s] }
    }

    pub fn vector(comps: Vec<S>) -> Self {
        AltTensor { dim: comps.len(), degree: 1, variance: Variance::Contravariant, comps }
    }

    pub fn covector(comps: Vec<S>) -> Self {
        AltTensor { dim: comps.len(), degree: 1, variance: Variance::Covariant, comps }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn variance(&self) -> Variance {
        self.variance
    }

    pub fn comps(&self) -> &[S] {
        &self.comps
    }

    pub fn comps_mut(&mut self) -> &mut [S] {
        &mut self.comps
    }

    pub fn into_comps(self) -> Vec<S> {
        self.comps
    }

    pub fn get(&self, mask: u32) -> &S {
        &self.comps[position(self.dim, mask)]
    }

    pub fn get_mut(&mut self, mask: u32) -> &mut S {
        let p = position(self.dim, mask);
        &mut self.comps[p]
    }

    /// Component at an arbitrary index tuple, with the permutation sign;
    /// zero for repeated indices.
    pub fn component(&self, idx: &[usize]) -> S {
        let proto = &self.comps[0];
        let mut seen = 0u32;
        let mut sign = 1.0;
        for &i in idx {
            if seen & (1 << i) != 0 {
                return proto.zero_like();
            }
            sign *= merge_sign(seen, 1 << i);
            seen |= 1 << i;
        }
        self.get(seen).scaled(sign)
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> AltTensor<T> {
        AltTensor { dim: self.dim, degree: self.degree, variance: self.variance, comps: self.comps.iter().map(f).collect() }
    }

    /// Point values of the components.
    pub fn values(&self) -> AltTensor<f64> {
        self.map(|s| s.value())
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim || self.variance != other.variance {
            return Err(Error::Dimension("tensors of different dimension or variance".into()));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.combine(other, 1.0)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.combine(other, -1.0)
    }

    /// `self + s * other`.
    pub fn combine(&self, other: &Self, s: f64) -> Result<Self> {
        self.check_same(other)?;
        if self.degree != other.degree {
            return Err(Error::Dimension("adding tensors of different degree".into()));
        }
        let mut r = self.clone();
        for (a, b) in r.comps.iter_mut().zip(&other.comps) {
            a.add_scaled(b, s);
        }
        Ok(r)
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|x| x.scaled(s))
    }

    pub fn scale_by(&self, s: &S) -> Self {
        self.map(|x| x.mul(s))
    }

    pub fn wedge(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let n = self.dim;
        if self.degree + other.degree > n {
            return Err(Error::Dimension(format!(
                "wedge of degrees {} and {} exceeds dimension {n}",
                self.degree, other.degree
            )));
        }
        let proto = &self.comps[0];
        let mut out = AltTensor::zeros(n, self.degree + other.degree, self.variance, proto);
        for (i, &a) in basis(n, self.degree).iter().enumerate() {
            for (j, &b) in basis(n, other.degree).iter().enumerate() {
                if a & b != 0 {
                    continue;
                }
                let p = position(n, a | b);
                out.comps[p].add_product(&self.comps[i], &other.comps[j], merge_sign(a, b));
            }
        }
        Ok(out)
    }

    /// The `k`-th wedge power; `k = 0` gives the constant 1.
    pub fn wedge_power(&self, k: usize) -> Result<Self> {
        let mut acc = AltTensor::scalar(self.dim, self.comps[0].from_f64(1.0));
        acc.variance = self.variance;
        for _ in 0..k {
            acc = acc.wedge(self)?;
        }
        Ok(acc)
    }

    /// Single-vector interior product `ι_v self = self(v, ·, …)`.
    pub fn contract_vector(&self, v: &[S]) -> Result<Self> {
        if self.degree == 0 {
            return Err(Error::DegreeUnderflow { q: 1, r: 0 });
        }
        if v.len() != self.dim {
            return Err(Error::Dimension("vector length differs from tensor dimension".into()));
        }
        let n = self.dim;
        let proto = &self.comps[0];
        let mut out = AltTensor::zeros(n, self.degree - 1, self.variance, proto);
        for (jpos, &j) in basis(n, self.degree - 1).iter().enumerate() {
            for (i, vi) in v.iter().enumerate() {
                let b = 1u32 << i;
                if j & b != 0 {
                    continue;
                }
                out.comps[jpos].add_product(vi, self.get(j | b), merge_sign(b, j));
            }
        }
        Ok(out)
    }

    /// Evaluates on an argument list of vectors.
    pub fn eval(&self, args: &[Vec<S>]) -> Result<S> {
        if args.len() != self.degree {
            return Err(Error::Dimension(format!("{} arguments for a degree {} tensor", args.len(), self.degree)));
        }
        let mut t = self.clone();
        for v in args {
            t = t.contract_vector(v)?;
        }
        Ok(t.comps.into_iter().next().unwrap())
    }

    pub fn sup_norm(&self) -> f64 {
        self.comps.iter().map(|c| c.value().abs()).fold(0.0, f64::max)
    }
}

/// `ι_T a` for a contravariant `T` of degree q into a form of degree r.
/// For `T = T_1∧…∧T_q` this is `a(T_1, …, T_q, ·)`.
pub fn contract<S: Scalar>(t: &AltTensor<S>, a: &AltTensor<S>) -> Result<AltTensor<S>> {
    if t.variance != Variance::Contravariant || a.variance != Variance::Covariant {
        return Err(Error::Dimension("contraction needs a multivector and a form".into()));
    }
    if t.dim != a.dim {
        return Err(Error::Dimension("contraction across dimensions".into()));
    }
    if t.degree > a.degree {
        return Err(Error::DegreeUnderflow { q: t.degree, r: a.degree });
    }
    let n = a.dim;
    let mut out = AltTensor::zeros(n, a.degree - t.degree, Variance::Covariant, &a.comps[0]);
    for (jpos, &j) in basis(n, a.degree - t.degree).iter().enumerate() {
        for (ipos, &i) in basis(n, t.degree).iter().enumerate() {
            if i & j != 0 {
                continue;
            }
            out.comps[jpos].add_product(&t.comps[ipos], a.get(i | j), merge_sign(i, j));
        }
    }
    Ok(out)
}

/// `T_1∧…∧T_q` from its factors.
pub fn multivector<S: Scalar>(vectors: &[Vec<S>], dim: usize, proto: &S) -> Result<AltTensor<S>> {
    let mut acc = AltTensor { dim, degree: 0, variance: Variance::Contravariant, comps: vec![proto.from_f64(1.0)] };
    for v in vectors {
        acc = acc.wedge(&AltTensor::vector(v.clone()))?;
    }
    Ok(acc)
}

/// A Riemannian metric at a point.
#[derive(Clone, Debug)]
pub struct PointMetric {
    pub g: Vec<Vec<f64>>,
    pub inv: Vec<Vec<f64>>,
    pub sqrt_det: f64,
    pub orientation: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Musical {
    Flat,
    Sharp,
}

impl PointMetric {
    pub fn new(g: Vec<Vec<f64>>) -> Result<Self> {
        Self::with_orientation(g, 1.0)
    }

    pub fn with_orientation(g: Vec<Vec<f64>>, orientation: f64) -> Result<Self> {
        let n = g.len();
        for i in 0..n {
            if g[i].len() != n {
                return Err(Error::Dimension("metric is not square".into()));
            }
            for j in 0..i {
                if (g[i][j] - g[j][i]).abs() > 1e-12 * (1.0 + g[i][j].abs()) {
                    return Err(Error::Singular("metric is not symmetric".into()));
                }
            }
        }
        let l = linalg::cholesky(&g)?;
        let sqrt_det = (0..n).map(|i| l[i][i]).product();
        let inv = linalg::inverse(&g)?;
        Ok(PointMetric { g, inv, sqrt_det, orientation: orientation.signum() })
    }

    pub fn euclidean(n: usize) -> Self {
        let g: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
        PointMetric { inv: g.clone(), g, sqrt_det: 1.0, orientation: 1.0 }
    }

    pub fn dim(&self) -> usize {
        self.g.len()
    }

    pub fn dot(&self, x: &[f64], y: &[f64]) -> f64 {
        let n = self.dim();
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += self.g[i][j] * x[i] * y[j];
            }
        }
        s
    }

    /// Determinant of the minor of the inverse metric on rows `a`, columns `b`.
    fn inverse_minor(&self, a: u32, b: u32) -> f64 {
        let (ia, ib) = (indices(a), indices(b));
        if ia.is_empty() {
            return 1.0;
        }
        let m: Vec<Vec<f64>> = ia.iter().map(|&i| ib.iter().map(|&j| self.inv[i][j]).collect()).collect();
        linalg::det(&m).unwrap_or(0.0)
    }

    /// Raises every index of a form.
    fn raise(&self, a: &AltTensor<f64>) -> Vec<f64> {
        let n = a.dim;
        let b = basis(n, a.degree);
        b.iter().map(|&i| b.iter().zip(&a.comps).map(|(&k, c)| self.inverse_minor(i, k) * c).sum()).collect()
    }

    /// Pointwise inner product of two forms of equal degree.
    pub fn inner(&self, a: &AltTensor<f64>, b: &AltTensor<f64>) -> Result<f64> {
        if a.degree != b.degree || a.dim != self.dim() || b.dim != self.dim() {
            return Err(Error::Dimension("inner product of mismatched forms".into()));
        }
        Ok(self.raise(b).iter().zip(&a.comps).map(|(x, y)| x * y).sum())
    }

    pub fn hodge(&self, a: &AltTensor<f64>) -> Result<AltTensor<f64>> {
        if a.variance != Variance::Covariant || a.dim != self.dim() {
            return Err(Error::Dimension("hodge star needs a form of the metric's dimension".into()));
        }
        let n = a.dim;
        let full = (1u32 << n) - 1;
        let up = self.raise(a);
        let mut out = AltTensor::zeros(n, n - a.degree, Variance::Covariant, &0.0);
        for (ipos, &i) in basis(n, a.degree).iter().enumerate() {
            let j = full & !i;
            *out.get_mut(j) += self.orientation * self.sqrt_det * merge_sign(i, j) * up[ipos];
        }
        Ok(out)
    }

    pub fn musical(&self, x: &AltTensor<f64>, dir: Musical) -> Result<AltTensor<f64>> {
        if x.degree != 1 || x.dim != self.dim() {
            return Err(Error::Dimension("musical isomorphisms act on degree one".into()));
        }
        let (m, from, to) = match dir {
            Musical::Flat => (&self.g, Variance::Contravariant, Variance::Covariant),
            Musical::Sharp => (&self.inv, Variance::Covariant, Variance::Contravariant),
        };
        if x.variance != from {
            return Err(Error::Dimension("wrong variance for this musical map".into()));
        }
        let comps = linalg::mat_vec(m, &x.comps);
        AltTensor::new(self.dim(), 1, to, comps)
    }

    /// `dV_g` as an n-form.
    pub fn volume(&self) -> AltTensor<f64> {
        let n = self.dim();
        AltTensor::scalar(n, 1.0).hodge_with(self)
    }
}

impl AltTensor<f64> {
    fn hodge_with(&self, m: &PointMetric) -> AltTensor<f64> {
        m.hodge(self).expect("scalar hodge")
    }

    /// The coordinate basis form `dx^{i1}∧…∧dx^{ik}`.
    pub fn basis_form(dim: usize, idx: &[usize]) -> AltTensor<f64> {
        let mut t = AltTensor::zeros(dim, idx.len(), Variance::Covariant, &0.0);
        let mut s = AltTensor::scalar(dim, 1.0);
        for &i in idx {
            let mut e = vec![0.0; dim];
            e[i] = 1.0;
            s = s.wedge(&AltTensor::covector(e)).expect("basis wedge");
        }
        t.comps = s.comps;
        t
    }

    pub fn unit_vector(dim: usize, i: usize) -> Vec<f64> {
        let mut e = vec![0.0; dim];
        e[i] = 1.0;
        e
    }
}
