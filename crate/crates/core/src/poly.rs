//! Sparse multivariate polynomials over [`Scalar`].

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::scalar::{factorial, Scalar};

/// Exponent multi-index, one entry per variable.
pub type Exponent = Vec<u32>;

#[derive(Clone, Debug, PartialEq)]
pub struct Poly {
    nvars: usize,
    terms: BTreeMap<Exponent, Scalar>,
}

impl Poly {
    pub fn zero(nvars: usize) -> Self {
        Poly {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: Scalar) -> Self {
        let mut p = Poly::zero(nvars);
        p.add_term(vec![0; nvars], c);
        p
    }

    pub fn one(nvars: usize) -> Self {
        Poly::constant(nvars, Scalar::one())
    }

    /// The coordinate function `x_i`.
    pub fn var(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        Poly::monomial(e, Scalar::one())
    }

    pub fn monomial(exp: Exponent, c: Scalar) -> Self {
        let mut p = Poly::zero(exp.len());
        p.add_term(exp, c);
        p
    }

    /// `<normal, x> + offset`.
    pub fn affine(normal: &[Scalar], offset: &Scalar) -> Self {
        let n = normal.len();
        let mut p = Poly::constant(n, offset.clone());
        for (i, a) in normal.iter().enumerate() {
            let mut e = vec![0; n];
            e[i] = 1;
            p.add_term(e, a.clone());
        }
        p
    }

    pub fn from_terms(nvars: usize, terms: impl IntoIterator<Item = (Exponent, Scalar)>) -> Self {
        let mut p = Poly::zero(nvars);
        for (e, c) in terms {
            assert_eq!(e.len(), nvars, "exponent arity mismatch");
            p.add_term(e, c);
        }
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponent, &Scalar)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, exp: &[u32]) -> Scalar {
        self.terms.get(exp).cloned().unwrap_or_default()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.values().all(Scalar::is_exact_zero)
    }

    /// Zero under the scalar tolerance rule (exact, or all |coef| <= 1e-10).
    pub fn is_negligible(&self) -> bool {
        self.terms.values().all(Scalar::is_zero)
    }

    pub fn is_exact(&self) -> bool {
        self.terms.values().all(Scalar::is_exact)
    }

    /// Total degree; the zero polynomial has degree 0.
    pub fn degree(&self) -> u32 {
        self.terms
            .keys()
            .map(|e| e.iter().sum::<u32>())
            .max()
            .unwrap_or(0)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms
            .values()
            .map(|c| c.to_f64().abs())
            .fold(0.0, f64::max)
    }

    fn add_term(&mut self, exp: Exponent, c: Scalar) {
        if c.is_exact_zero() {
            return;
        }
        let entry = self.terms.entry(exp);
        match entry {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let s = &*o.get() + &c;
                if s.is_exact_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    pub fn scale(&self, c: &Scalar) -> Poly {
        Poly::from_terms(
            self.nvars,
            self.terms.iter().map(|(e, a)| (e.clone(), a * c)),
        )
    }

    pub fn pow(&self, k: u32) -> Poly {
        let mut acc = Poly::one(self.nvars);
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    pub fn partial(&self, i: usize) -> Poly {
        let mut out = Poly::zero(self.nvars);
        for (e, c) in &self.terms {
            if e[i] > 0 {
                let mut f = e.clone();
                f[i] -= 1;
                out.add_term(f, c * &Scalar::int(e[i] as i64));
            }
        }
        out
    }

    pub fn gradient(&self) -> Vec<Poly> {
        (0..self.nvars).map(|i| self.partial(i)).collect()
    }

    /// Antiderivative in `x_i` vanishing on `x_i = 0`.
    pub fn antiderivative(&self, i: usize) -> Poly {
        let mut out = Poly::zero(self.nvars);
        for (e, c) in &self.terms {
            let mut f = e.clone();
            f[i] += 1;
            let k = f[i] as i64;
            out.add_term(f, c / &Scalar::int(k));
        }
        out
    }

    pub fn eval(&self, x: &[Scalar]) -> Scalar {
        assert_eq!(x.len(), self.nvars);
        let mut cache: Vec<Vec<Scalar>> = vec![vec![Scalar::one()]; self.nvars];
        let mut acc = Scalar::zero();
        for (e, c) in &self.terms {
            let mut t = c.clone();
            for (i, &k) in e.iter().enumerate() {
                while cache[i].len() <= k as usize {
                    let next = cache[i].last().unwrap() * &x[i];
                    cache[i].push(next);
                }
                if k > 0 {
                    t = t * &cache[i][k as usize];
                }
            }
            acc = acc + t;
        }
        acc
    }

    pub fn eval_f64(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.nvars);
        self.terms
            .iter()
            .map(|(e, c)| {
                e.iter()
                    .zip(x)
                    .fold(c.to_f64(), |acc, (&k, &xi)| acc * xi.powi(k as i32))
            })
            .sum()
    }

    /// Substitutes `x = origin + sum_k t_k * dirs[k]`, giving a polynomial in
    /// `dirs.len()` variables `t`.
    pub fn compose_affine(&self, origin: &[Scalar], dirs: &[Vec<Scalar>]) -> Poly {
        let k = dirs.len();
        let forms: Vec<Poly> = (0..self.nvars)
            .map(|i| {
                let normal: Vec<Scalar> = dirs.iter().map(|d| d[i].clone()).collect();
                Poly::affine(&normal, &origin[i])
            })
            .collect();
        let mut powers: Vec<Vec<Poly>> = forms.iter().map(|f| vec![Poly::one(k), f.clone()]).collect();
        let mut out = Poly::zero(k);
        for (e, c) in &self.terms {
            let mut t = Poly::constant(k, c.clone());
            for (i, &p) in e.iter().enumerate() {
                while powers[i].len() <= p as usize {
                    let next = powers[i].last().unwrap() * &forms[i];
                    powers[i].push(next);
                }
                if p > 0 {
                    t = &t * &powers[i][p as usize];
                }
            }
            out = &out + &t;
        }
        out
    }

    /// Exact integral over the standard simplex `{t >= 0, sum t <= 1}` in
    /// `nvars` dimensions: `int t^a = a! / (|a| + n)!`.
    pub fn integrate_standard_simplex(&self) -> Scalar {
        let n = self.nvars as u32;
        let mut acc = Scalar::zero();
        for (e, c) in &self.terms {
            let num = e.iter().fold(num_traits::One::one(), |acc: BigInt, &k| acc * factorial(k));
            let den = factorial(e.iter().sum::<u32>() + n);
            let w = Scalar::Exact(BigRational::new(num, den));
            acc = acc + c * &w;
        }
        acc
    }

    /// Division with remainder by `d` under graded-lex order. When `d`
    /// divides `self` the remainder is zero and the quotient is exact.
    pub fn div_rem(&self, d: &Poly) -> (Poly, Poly) {
        assert!(!d.is_zero(), "division by zero polynomial");
        let lead = |p: &Poly| -> Option<(Exponent, Scalar)> {
            p.terms
                .iter()
                .max_by(|(a, _), (b, _)| grlex(a, b))
                .map(|(e, c)| (e.clone(), c.clone()))
        };
        let (de, dc) = lead(d).unwrap();
        let mut q = Poly::zero(self.nvars);
        let mut r = Poly::zero(self.nvars);
        let mut p = self.clone();
        while let Some((pe, pc)) = lead(&p) {
            if pe.iter().zip(&de).all(|(a, b)| a >= b) {
                let e: Exponent = pe.iter().zip(&de).map(|(a, b)| a - b).collect();
                let c = &pc / &dc;
                let t = Poly::monomial(e, c);
                p = &p - &(&t * d);
                // drop float residue of the cancelled term
                p.terms.remove(&pe);
                q = &q + &t;
            } else {
                p.terms.remove(&pe);
                r.add_term(pe, pc);
            }
        }
        (q, r)
    }

    /// Restriction to float coefficients.
    pub fn to_float(&self) -> Poly {
        Poly::from_terms(
            self.nvars,
            self.terms
                .iter()
                .map(|(e, c)| (e.clone(), Scalar::Float(c.to_f64()))),
        )
    }

    /// All exponents of total degree `<= deg` in `nvars` variables, in
    /// graded order.
    pub fn exponents_up_to(nvars: usize, deg: u32) -> Vec<Exponent> {
        let mut out = Vec::new();
        for total in 0..=deg {
            let mut cur = vec![0u32; nvars];
            compositions(total, 0, &mut cur, &mut out);
        }
        out
    }

    /// Coefficient table keyed by comma-joined exponents, e.g. `"2,0"`.
    pub fn to_table(&self) -> BTreeMap<String, Scalar> {
        self.terms
            .iter()
            .map(|(e, c)| (exp_key(e), c.clone()))
            .collect()
    }

    pub fn from_table(nvars: usize, table: &BTreeMap<String, Scalar>) -> Result<Poly, String> {
        let mut p = Poly::zero(nvars);
        for (k, c) in table {
            let e = parse_exp_key(k)?;
            if e.len() != nvars {
                return Err(format!("exponent `{k}` has {} entries, expected {nvars}", e.len()));
            }
            p.add_term(e, c.clone());
        }
        Ok(p)
    }
}

fn compositions(total: u32, i: usize, cur: &mut Vec<u32>, out: &mut Vec<Exponent>) {
    let n = cur.len();
    if n == 0 {
        if total == 0 {
            out.push(Vec::new());
        }
        return;
    }
    if i == n - 1 {
        cur[i] = total;
        out.push(cur.clone());
        return;
    }
    for k in (0..=total).rev() {
        cur[i] = k;
        compositions(total - k, i + 1, cur, out);
    }
    cur[i] = 0;
}

fn grlex(a: &[u32], b: &[u32]) -> std::cmp::Ordering {
    let da: u32 = a.iter().sum();
    let db: u32 = b.iter().sum();
    da.cmp(&db).then_with(|| a.cmp(b))
}

pub fn exp_key(e: &[u32]) -> String {
    e.iter().map(u32::to_string).collect::<Vec<_>>().join(",")
}

pub fn parse_exp_key(k: &str) -> Result<Exponent, String> {
    k.split(',')
        .map(|s| s.trim().parse::<u32>().map_err(|_| format!("invalid exponent key `{k}`")))
        .collect()
}

impl Serialize for Poly {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Doc {
            nvars: usize,
            coeffs: BTreeMap<String, Scalar>,
        }
        Doc {
            nvars: self.nvars,
            coeffs: self.to_table(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Poly {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Doc {
            nvars: usize,
            coeffs: BTreeMap<String, Scalar>,
        }
        let doc = Doc::deserialize(d)?;
        Poly::from_table(doc.nvars, &doc.coeffs).map_err(serde::de::Error::custom)
    }
}

impl<'a, 'b> Add<&'b Poly> for &'a Poly {
    type Output = Poly;
    fn add(self, rhs: &'b Poly) -> Poly {
        assert_eq!(self.nvars, rhs.nvars);
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(e.clone(), c.clone());
        }
        out
    }
}

impl<'a, 'b> Sub<&'b Poly> for &'a Poly {
    type Output = Poly;
    fn sub(self, rhs: &'b Poly) -> Poly {
        assert_eq!(self.nvars, rhs.nvars);
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(e.clone(), -c);
        }
        out
    }
}

impl<'a, 'b> Mul<&'b Poly> for &'a Poly {
    type Output = Poly;
    fn mul(self, rhs: &'b Poly) -> Poly {
        assert_eq!(self.nvars, rhs.nvars);
        let mut out = Poly::zero(self.nvars);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &rhs.terms {
                let e: Exponent = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.add_term(e, ca * cb);
            }
        }
        out
    }
}

impl Add for Poly {
    type Output = Poly;
    fn add(self, rhs: Poly) -> Poly {
        &self + &rhs
    }
}

impl Sub for Poly {
    type Output = Poly;
    fn sub(self, rhs: Poly) -> Poly {
        &self - &rhs
    }
}

impl Mul for Poly {
    type Output = Poly;
    fn mul(self, rhs: Poly) -> Poly {
        &self * &rhs
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        self.scale(&Scalar::int(-1))
    }
}

impl Neg for Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        -&self
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        let mut keys: Vec<_> = self.terms.keys().collect();
        keys.sort_by(|a, b| grlex(b, a));
        for e in keys {
            let c = &self.terms[e];
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{c}")?;
            for (i, &k) in e.iter().enumerate() {
                match k {
                    0 => {}
                    1 => write!(f, "*x{}", i + 1)?,
                    _ => write!(f, "*x{}^{}", i + 1, k)?,
                }
            }
        }
        Ok(())
    }
}
