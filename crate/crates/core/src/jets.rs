//! Truncated multivariate Taylor arithmetic.
//!
//! A [`Jet`] holds the Taylor coefficients of a function at a point, up to a
//! total degree `order`. Coefficients are stored densely in graded
//! lexicographic order, so the layout of a lower order is a prefix of the
//! layout of a higher one and truncation is a slice.

use std::sync::OnceLock;

use smallvec::SmallVec;

use crate::error::{Error, Result};

/// Largest number of variables a jet may carry.
pub const MAX_VARS: usize = 8;
/// Largest supported truncation order.
pub const MAX_ORDER: usize = 8;

type Exponent = [u8; MAX_VARS];

struct Layout {
    exps: Vec<Exponent>,
    /// `sizes[k]` is the number of monomials of total degree at most `k`.
    sizes: Vec<usize>,
    /// Products `(i, j, k)` with `exps[i] + exps[j] = exps[k]`, sorted by `k`.
    products: Vec<(u16, u16, u16)>,
    /// `product_end[k]` bounds the products that land inside order `k`.
    product_end: Vec<usize>,
    /// For each variable, the source index of `exps[t] + e_v` for every `t`
    /// below the top degree.
    shift: Vec<Vec<u16>>,
}

fn binom(n: usize, k: usize) -> usize {
    let mut r = 1usize;
    for i in 0..k {
        r = r * (n - i) / (i + 1);
    }
    r
}

impl Layout {
    fn build(nvars: usize) -> Layout {
        let mut exps: Vec<Exponent> = Vec::new();
        let mut sizes = Vec::with_capacity(MAX_ORDER + 1);
        for deg in 0..=MAX_ORDER {
            let mut cur = [0u8; MAX_VARS];
            push_degree(nvars, deg, 0, &mut cur, &mut exps);
            sizes.push(exps.len());
        }
        let find = |e: &Exponent| -> Option<usize> {
            let deg: usize = e.iter().map(|&x| x as usize).sum();
            if deg > MAX_ORDER {
                return None;
            }
            let lo = if deg == 0 { 0 } else { sizes[deg - 1] };
            exps[lo..sizes[deg]].binary_search_by(|p| e.cmp(p)).ok().map(|i| lo + i)
        };
        let mut products = Vec::new();
        for (i, a) in exps.iter().enumerate() {
            let deg_a: usize = a.iter().map(|&x| x as usize).sum();
            for (j, b) in exps[..sizes[MAX_ORDER - deg_a]].iter().enumerate() {
                let mut s = [0u8; MAX_VARS];
                for v in 0..MAX_VARS {
                    s[v] = a[v] + b[v];
                }
                if let Some(k) = find(&s) {
                    products.push((i as u16, j as u16, k as u16));
                }
            }
        }
        products.sort_by_key(|p| p.2);
        let product_end = sizes
            .iter()
            .map(|&sz| products.partition_point(|p| (p.2 as usize) < sz))
            .collect();
        let below_top = sizes[MAX_ORDER - 1];
        let shift = (0..nvars)
            .map(|v| {
                (0..below_top)
                    .map(|t| {
                        let mut e = exps[t];
                        e[v] += 1;
                        find(&e).expect("shifted monomial within layout") as u16
                    })
                    .collect()
            })
            .collect();
        Layout { exps, sizes, products, product_end, shift }
    }

    fn index_of(&self, e: &Exponent) -> Option<usize> {
        let deg: usize = e.iter().map(|&x| x as usize).sum();
        if deg > MAX_ORDER {
            return None;
        }
        let lo = if deg == 0 { 0 } else { self.sizes[deg - 1] };
        self.exps[lo..self.sizes[deg]]
            .binary_search_by(|p| e.cmp(p))
            .ok()
            .map(|i| lo + i)
    }
}

// Within one degree, exponents are visited in decreasing lexicographic order
// of the exponent array, i.e. x^2 before xy before y^2.
fn push_degree(nvars: usize, deg: usize, var: usize, cur: &mut Exponent, out: &mut Vec<Exponent>) {
    if nvars == 0 {
        if deg == 0 {
            out.push(*cur);
        }
        return;
    }
    if var == nvars - 1 {
        cur[var] = deg as u8;
        out.push(*cur);
        cur[var] = 0;
        return;
    }
    for e in (0..=deg).rev() {
        cur[var] = e as u8;
        push_degree(nvars, deg - e, var + 1, cur, out);
    }
    cur[var] = 0;
}

fn layout(nvars: usize) -> &'static Layout {
    static LAYOUTS: [OnceLock<Layout>; MAX_VARS + 1] = [const { OnceLock::new() }; MAX_VARS + 1];
    LAYOUTS[nvars].get_or_init(|| Layout::build(nvars))
}

/// Number of coefficients of a jet in `nvars` variables truncated at `order`.
pub fn jet_len(nvars: usize, order: usize) -> usize {
    binom(nvars + order, order)
}

/// A truncated Taylor expansion in `nvars` variables.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet {
    nvars: u8,
    order: u8,
    c: SmallVec<[f64; 20]>,
}

impl Jet {
    /// The constant `v`.
    pub fn constant(v: f64, nvars: usize, order: usize) -> Jet {
        assert!(nvars <= MAX_VARS && order <= MAX_ORDER, "jet shape out of range");
        let mut c = SmallVec::from_elem(0.0, layout(nvars).sizes[order]);
        c[0] = v;
        Jet { nvars: nvars as u8, order: order as u8, c }
    }

    /// The coordinate function `x_var` seeded at value `v`.
    pub fn variable(v: f64, var: usize, nvars: usize, order: usize) -> Jet {
        assert!(var < nvars);
        let mut j = Jet::constant(v, nvars, order);
        if order > 0 {
            // Degree one monomials are e_0, e_1, ... in that order.
            j.c[1 + var] = 1.0;
        }
        j
    }

    /// Seeds every coordinate of `point`.
    pub fn seed(point: &[f64], order: usize) -> Vec<Jet> {
        let n = point.len();
        point.iter().enumerate().map(|(i, &v)| Jet::variable(v, i, n, order)).collect()
    }

    /// Builds a jet from raw coefficients in layout order.
    pub fn from_coeffs(nvars: usize, order: usize, coeffs: &[f64]) -> Result<Jet> {
        if coeffs.len() != jet_len(nvars, order) {
            return Err(Error::Dimension(format!(
                "expected {} coefficients, got {}",
                jet_len(nvars, order),
                coeffs.len()
            )));
        }
        Ok(Jet { nvars: nvars as u8, order: order as u8, c: SmallVec::from_slice(coeffs) })
    }

    pub fn zero_like(&self) -> Jet {
        Jet { nvars: self.nvars, order: self.order, c: SmallVec::from_elem(0.0, self.c.len()) }
    }

    pub fn constant_like(&self, v: f64) -> Jet {
        Jet::constant(v, self.nvars(), self.order())
    }

    pub fn nvars(&self) -> usize {
        self.nvars as usize
    }

    pub fn order(&self) -> usize {
        self.order as usize
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.c
    }

    pub fn is_constant(&self) -> bool {
        self.c[1..].iter().all(|&x| x == 0.0)
    }

    /// Taylor coefficient of the monomial with exponents `alpha`.
    pub fn coeff(&self, alpha: &[usize]) -> f64 {
        let mut e = [0u8; MAX_VARS];
        for (i, &a) in alpha.iter().enumerate() {
            e[i] = a as u8;
        }
        match layout(self.nvars()).index_of(&e) {
            Some(i) if i < self.c.len() => self.c[i],
            _ => 0.0,
        }
    }

    /// Mixed partial `∂^alpha` at the expansion point.
    pub fn partial(&self, alpha: &[usize]) -> Result<f64> {
        let deg: usize = alpha.iter().sum();
        if deg > self.order() {
            return Err(Error::InsufficientOrder { need: deg, have: self.order() });
        }
        let fact: f64 = alpha.iter().map(|&a| (1..=a).product::<usize>() as f64).product();
        Ok(fact * self.coeff(alpha))
    }

    /// First partial along one variable, as a number.
    pub fn d(&self, var: usize) -> f64 {
        if self.order == 0 {
            return 0.0;
        }
        self.c[1 + var]
    }

    pub fn truncate(&self, order: usize) -> Jet {
        if order >= self.order() {
            return self.clone();
        }
        let n = layout(self.nvars()).sizes[order];
        Jet { nvars: self.nvars, order: order as u8, c: SmallVec::from_slice(&self.c[..n]) }
    }

    /// The jet of `∂f/∂x_var`, one order lower.
    pub fn derivative(&self, var: usize) -> Result<Jet> {
        if self.order == 0 {
            return Err(Error::InsufficientOrder { need: 1, have: 0 });
        }
        let lay = layout(self.nvars());
        let order = self.order() - 1;
        let n = lay.sizes[order];
        let shift = &lay.shift[var];
        let mut c = SmallVec::with_capacity(n);
        for t in 0..n {
            let s = shift[t] as usize;
            c.push(self.c[s] * (lay.exps[t][var] as f64 + 1.0));
        }
        Ok(Jet { nvars: self.nvars, order: order as u8, c })
    }

    fn check_shape(&self, other: &Jet) {
        assert_eq!(self.nvars, other.nvars, "jets over different variable counts");
    }

    /// `self += other * s`, truncating to the lower order.
    pub fn add_scaled(&mut self, other: &Jet, s: f64) {
        self.check_shape(other);
        if other.order < self.order {
            self.truncate_in_place(other.order());
        }
        for (a, b) in self.c.iter_mut().zip(other.c.iter()) {
            *a += s * b;
        }
    }

    /// `self += a * b * s`.
    pub fn add_product(&mut self, a: &Jet, b: &Jet, s: f64) {
        self.check_shape(a);
        self.check_shape(b);
        let order = self.order.min(a.order).min(b.order);
        if order < self.order {
            self.truncate_in_place(order as usize);
        }
        let lay = layout(self.nvars());
        for &(i, j, k) in &lay.products[..lay.product_end[order as usize]] {
            self.c[k as usize] += s * a.c[i as usize] * b.c[j as usize];
        }
    }

    fn truncate_in_place(&mut self, order: usize) {
        let n = layout(self.nvars()).sizes[order];
        self.c.truncate(n);
        self.order = order as u8;
    }

    pub fn scale(&self, s: f64) -> Jet {
        let mut r = self.clone();
        r.c.iter_mut().for_each(|x| *x *= s);
        r
    }

    pub fn add_const(&self, s: f64) -> Jet {
        let mut r = self.clone();
        r.c[0] += s;
        r
    }

    pub fn mul(&self, other: &Jet) -> Jet {
        let order = self.order.min(other.order);
        let mut r = Jet::constant(0.0, self.nvars(), order as usize);
        r.add_product(self, other, 1.0);
        r
    }

    /// Evaluates `Σ coeffs[k] (self − self(0))^k`, the composition of a
    /// univariate Taylor series with this jet.
    pub fn compose(&self, coeffs: &[f64]) -> Jet {
        let k = self.order();
        let mut u = self.clone();
        u.c[0] = 0.0;
        let top = k.min(coeffs.len().saturating_sub(1));
        let mut r = self.constant_like(coeffs.get(top).copied().unwrap_or(0.0));
        for j in (0..top).rev() {
            r = r.mul(&u);
            r.c[0] += coeffs[j];
        }
        r
    }

    pub fn recip(&self) -> Result<Jet> {
        let a = self.value();
        if a == 0.0 {
            return Err(Error::Domain { primitive: "division", arg: a });
        }
        let k = self.order();
        let mut cs = Vec::with_capacity(k + 1);
        let inv = 1.0 / a;
        let mut p = inv;
        for _ in 0..=k {
            cs.push(p);
            p *= -inv;
        }
        Ok(self.compose(&cs))
    }

    pub fn div(&self, other: &Jet) -> Result<Jet> {
        Ok(self.mul(&other.recip()?))
    }

    pub fn exp(&self) -> Jet {
        let a = self.value().exp();
        self.compose(&factorial_series(self.order(), |_| a))
    }

    pub fn ln(&self) -> Result<Jet> {
        let a = self.value();
        if a <= 0.0 {
            return Err(Error::Domain { primitive: "log", arg: a });
        }
        let mut cs = vec![a.ln()];
        let mut p = 1.0;
        for k in 1..=self.order() {
            p /= a;
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            cs.push(sign * p / k as f64);
        }
        Ok(self.compose(&cs))
    }

    pub fn sin(&self) -> Jet {
        let a = self.value();
        let (s, c) = a.sin_cos();
        let cyc = [s, c, -s, -c];
        self.compose(&factorial_series(self.order(), |k| cyc[k % 4]))
    }

    pub fn cos(&self) -> Jet {
        let a = self.value();
        let (s, c) = a.sin_cos();
        let cyc = [c, -s, -c, s];
        self.compose(&factorial_series(self.order(), |k| cyc[k % 4]))
    }

    pub fn sinh(&self) -> Jet {
        let a = self.value();
        let (s, c) = (a.sinh(), a.cosh());
        self.compose(&factorial_series(self.order(), |k| if k % 2 == 0 { s } else { c }))
    }

    pub fn cosh(&self) -> Jet {
        let a = self.value();
        let (s, c) = (a.sinh(), a.cosh());
        self.compose(&factorial_series(self.order(), |k| if k % 2 == 0 { c } else { s }))
    }

    pub fn tan(&self) -> Result<Jet> {
        let a = self.value();
        if a.cos() == 0.0 {
            return Err(Error::Domain { primitive: "tan", arg: a });
        }
        // t' = 1 + t^2
        let k = self.order();
        let mut t = vec![a.tan()];
        for m in 0..k {
            let mut s = if m == 0 { 1.0 } else { 0.0 };
            for j in 0..=m {
                s += t[j] * t[m - j];
            }
            t.push(s / (m + 1) as f64);
        }
        Ok(self.compose(&t))
    }

    pub fn atan(&self) -> Jet {
        let a = self.value();
        self.compose(&atan_series(a, self.order()))
    }

    pub fn atan2(y: &Jet, x: &Jet) -> Result<Jet> {
        let (y0, x0) = (y.value(), x.value());
        if y0 == 0.0 && x0 == 0.0 {
            return Err(Error::Domain { primitive: "atan2", arg: 0.0 });
        }
        let mut r = if x0.abs() >= y0.abs() {
            y.div(x)?.atan()
        } else {
            x.div(y)?.atan().scale(-1.0)
        };
        r.c[0] = y0.atan2(x0);
        Ok(r)
    }

    pub fn sqrt(&self) -> Result<Jet> {
        let a = self.value();
        if a < 0.0 || (a == 0.0 && self.order > 0) {
            return Err(Error::Domain { primitive: "sqrt", arg: a });
        }
        Ok(self.compose(&binomial_series(a, 0.5, self.order())))
    }

    pub fn abs(&self) -> Result<Jet> {
        let a = self.value();
        if a == 0.0 {
            return Err(Error::Domain { primitive: "abs", arg: a });
        }
        Ok(if a > 0.0 { self.clone() } else { self.scale(-1.0) })
    }

    pub fn powi(&self, p: i32) -> Result<Jet> {
        if p < 0 {
            return self.powi(-p)?.recip();
        }
        let mut base = self.clone();
        let mut acc = self.constant_like(1.0);
        let mut e = p as u32;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        Ok(acc)
    }

    /// Real power with a constant exponent.
    pub fn powf(&self, p: f64) -> Result<Jet> {
        if p.fract() == 0.0 && p.abs() <= i32::MAX as f64 {
            return self.powi(p as i32);
        }
        let a = self.value();
        if a < 0.0 || (a == 0.0 && (p < self.order() as f64 || p < 0.0)) {
            return Err(Error::Domain { primitive: "pow", arg: a });
        }
        if a == 0.0 {
            return Ok(self.zero_like());
        }
        Ok(self.compose(&binomial_series(a, p, self.order())))
    }

    /// `self^e` for a jet-valued exponent, via `exp(e ln self)`.
    pub fn pow(&self, e: &Jet) -> Result<Jet> {
        if e.is_constant() {
            return self.powf(e.value());
        }
        Ok(e.mul(&self.ln()?).exp())
    }
}

fn factorial_series(k: usize, f: impl Fn(usize) -> f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(k + 1);
    let mut fact = 1.0;
    for j in 0..=k {
        if j > 0 {
            fact *= j as f64;
        }
        out.push(f(j) / fact);
    }
    out
}

fn binomial_series(a: f64, p: f64, k: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(k + 1);
    let mut c = a.powf(p);
    out.push(c);
    for j in 1..=k {
        c *= (p - (j as f64 - 1.0)) / (j as f64 * a);
        out.push(c);
    }
    out
}

/// Taylor coefficients of `atan(a + h)` in `h` up to degree `k`.
pub fn atan_series(a: f64, k: usize) -> Vec<f64> {
    // 1/(1 + (a+h)^2) = 1/(q0 + q1 h + h^2)
    let q0 = 1.0 + a * a;
    let q1 = 2.0 * a;
    let mut r: Vec<f64> = Vec::with_capacity(k);
    for m in 0..k {
        let mut s = if m == 0 { 1.0 } else { 0.0 };
        if m >= 1 {
            s -= q1 * r[m - 1];
        }
        if m >= 2 {
            s -= r[m - 2];
        }
        r.push(s / q0);
    }
    let mut out = vec![a.atan()];
    for (m, rm) in r.iter().enumerate() {
        out.push(rm / (m + 1) as f64);
    }
    out
}

macro_rules! jet_binop {
    ($tr:ident, $m:ident, $body:expr) => {
        impl std::ops::$tr<&Jet> for &Jet {
            type Output = Jet;
            fn $m(self, rhs: &Jet) -> Jet {
                let f: fn(&Jet, &Jet) -> Jet = $body;
                f(self, rhs)
            }
        }
        impl std::ops::$tr<Jet> for Jet {
            type Output = Jet;
            fn $m(self, rhs: Jet) -> Jet {
                (&self).$m(&rhs)
            }
        }
        impl std::ops::$tr<&Jet> for Jet {
            type Output = Jet;
            fn $m(self, rhs: &Jet) -> Jet {
                (&self).$m(rhs)
            }
        }
    };
}

jet_binop!(Add, add, |a, b| {
    let mut r = a.clone();
    r.add_scaled(b, 1.0);
    r
});
jet_binop!(Sub, sub, |a, b| {
    let mut r = a.clone();
    r.add_scaled(b, -1.0);
    r
});
jet_binop!(Mul, mul, |a, b| Jet::mul(a, b));

impl std::ops::Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl std::ops::Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn layout_sizes() {
        for n in 0..=5 {
            for k in 0..=4 {
                assert_eq!(layout(n).sizes[k], jet_len(n, k));
            }
        }
        let lay = layout(3);
        assert_eq!(lay.product_end[4], binom(6 + 4, 4));
    }

    #[test]
    fn product_of_coordinates() {
        let v = Jet::seed(&[2.0, 3.0], 2);
        let p = &v[0] * &v[1];
        assert_eq!(p.value(), 6.0);
        assert_eq!(p.partial(&[1, 0]).unwrap(), 3.0);
        assert_eq!(p.partial(&[0, 1]).unwrap(), 2.0);
        assert_eq!(p.partial(&[1, 1]).unwrap(), 1.0);
        assert_eq!(p.partial(&[2, 0]).unwrap(), 0.0);
    }

    #[test]
    fn pythagoras_is_flat() {
        let x = Jet::variable(0.37, 0, 1, 3);
        let one = x.sin().mul(&x.sin()) + x.cos().mul(&x.cos());
        assert!((one.value() - 1.0).abs() < 1e-15);
        for c in &one.coeffs()[1..] {
            assert!(c.abs() < 1e-14);
        }
    }

    #[test]
    fn atan_of_slope_matches_differences() {
        let g = |r: f64| (3.0 * r * r).atan();
        let r = Jet::variable(0.5, 0, 1, 2);
        let j = (&r * &r).scale(3.0).atan();
        let exact = 3.0 / 1.5625;
        assert!((j.d(0) - exact).abs() < 1e-14);
        for h in [1e-3, 1e-4, 1e-5] {
            let fd = (g(0.5 + h) - g(0.5 - h)) / (2.0 * h);
            assert!((fd - j.d(0)).abs() < 10.0 * h * h + 1e-9);
        }
    }

    #[test]
    fn univariate_primitives_against_closed_forms() {
        let x0 = 0.7;
        let x = Jet::variable(x0, 0, 1, 4);
        let cases: Vec<(Jet, Vec<f64>)> = vec![
            (x.exp(), vec![x0.exp(); 5]),
            (x.ln().unwrap(), vec![x0.ln(), 1.0 / x0, -1.0 / x0.powi(2), 2.0 / x0.powi(3), -6.0 / x0.powi(4)]),
            (x.tan().unwrap(), {
                let t = x0.tan();
                let s2 = 1.0 + t * t;
                vec![t, s2, 2.0 * t * s2, s2 * (2.0 * s2 + 4.0 * t * t), 8.0 * t * s2 * (2.0 * s2 + t * t)]
            }),
            (x.sqrt().unwrap(), vec![
                x0.sqrt(),
                0.5 * x0.powf(-0.5),
                -0.25 * x0.powf(-1.5),
                0.375 * x0.powf(-2.5),
                -0.9375 * x0.powf(-3.5),
            ]),
            (x.atan(), {
                let d = 1.0 + x0 * x0;
                vec![
                    x0.atan(),
                    1.0 / d,
                    -2.0 * x0 / (d * d),
                    (6.0 * x0 * x0 - 2.0) / d.powi(3),
                    24.0 * x0 * (1.0 - x0 * x0) / d.powi(4),
                ]
            }),
            (x.sinh(), vec![x0.sinh(), x0.cosh(), x0.sinh(), x0.cosh(), x0.sinh()]),
        ];
        for (j, want) in cases {
            for (k, w) in want.iter().enumerate() {
                let got = j.partial(&[k]).unwrap();
                assert!(close(got, *w, 1e-13), "order {k}: {got} vs {w}");
            }
        }
    }

    #[test]
    fn atan2_branches_agree() {
        for (y0, x0) in [(0.3, 1.2), (2.0, 0.1), (-1.5, -0.2), (0.4, -3.0)] {
            let v = Jet::seed(&[y0, x0], 3);
            let j = Jet::atan2(&v[0], &v[1]).unwrap();
            assert!((j.value() - f64::atan2(y0, x0)).abs() < 1e-15);
            let r2 = x0 * x0 + y0 * y0;
            assert!(close(j.d(0), x0 / r2, 1e-13));
            assert!(close(j.d(1), -y0 / r2, 1e-13));
            assert!(close(j.partial(&[1, 1]).unwrap(), (y0 * y0 - x0 * x0) / (r2 * r2), 1e-12));
        }
        let z = Jet::seed(&[0.0, 0.0], 1);
        assert!(Jet::atan2(&z[0], &z[1]).is_err());
    }

    #[test]
    fn domain_errors() {
        let z = Jet::variable(0.0, 0, 1, 2);
        assert!(matches!(z.ln(), Err(Error::Domain { primitive: "log", .. })));
        assert!(z.recip().is_err());
        assert!(z.abs().is_err());
        assert!(z.sqrt().is_err());
        assert!(Jet::variable(-1.0, 0, 1, 2).powf(0.5).is_err());
        assert_eq!(Jet::variable(-2.0, 0, 1, 2).powf(3.0).unwrap().partial(&[2]).unwrap(), -12.0);
        assert!(z.truncate(0).sqrt().is_ok());
    }

    #[test]
    fn derivative_and_truncation() {
        let v = Jet::seed(&[0.2, -0.4, 1.1], 4);
        let f = v[0].mul(&v[1]).sin().mul(&v[2].exp());
        let fx = f.derivative(0).unwrap();
        assert_eq!(fx.order(), 3);
        for alpha in [[0, 0, 0], [1, 0, 0], [0, 2, 1], [1, 1, 1]] {
            let mut beta = alpha;
            beta[0] += 1;
            assert!(close(fx.partial(&alpha).unwrap(), f.partial(&beta).unwrap(), 1e-13));
        }
        let t = f.truncate(2);
        assert_eq!(t.coeffs(), &f.coeffs()[..10]);
        assert!(t.derivative(0).unwrap().derivative(1).unwrap().derivative(2).is_err());
    }

    #[test]
    fn mixed_order_arithmetic_truncates() {
        let a = Jet::variable(1.0, 0, 2, 3);
        let b = Jet::variable(2.0, 1, 2, 1);
        assert_eq!((&a * &b).order(), 1);
        assert_eq!((&a + &b).order(), 1);
    }

    fn jet_strategy() -> impl Strategy<Value = Jet> {
        prop::collection::vec(-2.0f64..2.0, jet_len(3, 3)).prop_map(|c| Jet::from_coeffs(3, 3, &c).unwrap())
    }

    fn max_diff(a: &Jet, b: &Jet) -> f64 {
        a.coeffs().iter().zip(b.coeffs()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    proptest! {
        #[test]
        fn ring_laws(a in jet_strategy(), b in jet_strategy(), c in jet_strategy()) {
            prop_assert!(max_diff(&(&a * &b), &(&b * &a)) <= 1e-12);
            prop_assert!(max_diff(&((&a * &b) * &c), &(&a * &(&b * &c))) <= 1e-12);
            prop_assert!(max_diff(&(&a * &(&b + &c)), &(&(&a * &b) + &(&a * &c))) <= 1e-12);
        }

        #[test]
        fn polynomial_partials_are_exact(cs in prop::collection::vec(-3i32..4, 10), x in -1.5f64..1.5, y in -1.5f64..1.5) {
            // p = sum of cs[k] x^i y^j over i + j <= 3
            let mons: Vec<(i32, i32)> = (0..=3).flat_map(|d| (0..=d).map(move |i| (i, d - i))).collect();
            let v = Jet::seed(&[x, y], 3);
            let mut p = Jet::constant(0.0, 2, 3);
            for (k, &(i, j)) in mons.iter().enumerate() {
                let m = v[0].powi(i).unwrap().mul(&v[1].powi(j).unwrap());
                p.add_scaled(&m, cs[k] as f64);
            }
            for a in 0..=3usize {
                for b in 0..=(3 - a) {
                    let mut want = 0.0;
                    for (k, &(i, j)) in mons.iter().enumerate() {
                        let (i, j) = (i as usize, j as usize);
                        if i >= a && j >= b {
                            let fa: f64 = ((i - a + 1)..=i).map(|t| t as f64).product();
                            let fb: f64 = ((j - b + 1)..=j).map(|t| t as f64).product();
                            want += cs[k] as f64 * fa * fb * x.powi((i - a) as i32) * y.powi((j - b) as i32);
                        }
                    }
                    let got = p.partial(&[a, b]).unwrap();
                    prop_assert!((got - want).abs() <= 1e-12 * (1.0 + want.abs()), "{a},{b}: {got} vs {want}");
                }
            }
        }

        #[test]
        fn analytic_partials_match_richardson(x in 0.2f64..1.5, y in -1.0f64..1.0) {
            let f = |x: f64, y: f64| (x * y).sin() * (x + 0.5 * y * y).exp() / (1.0 + x * x);
            let v = Jet::seed(&[x, y], 3);
            let j = v[0].mul(&v[1]).sin()
                .mul(&(&v[0] + &v[1].mul(&v[1]).scale(0.5)).exp())
                .div(&v[0].mul(&v[0]).add_const(1.0)).unwrap();
            let d1 = |h: f64| (f(x + h, y) - f(x - h, y)) / (2.0 * h);
            let rich = (4.0 * d1(1e-3) - d1(2e-3)) / 3.0;
            prop_assert!((rich - j.d(0)).abs() <= 1e-6 * (1.0 + rich.abs()));
            let dxy = |h: f64| (f(x + h, y + h) - f(x + h, y - h) - f(x - h, y + h) + f(x - h, y - h)) / (4.0 * h * h);
            let rich = (4.0 * dxy(2e-3) - dxy(4e-3)) / 3.0;
            prop_assert!((rich - j.partial(&[1, 1]).unwrap()).abs() <= 1e-6 * (1.0 + rich.abs()));
        }
    }
}
