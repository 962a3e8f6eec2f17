//! Finite fields GF(p^m) with q = p^m <= 2^16.
//!
//! Elements are stored as canonical integers in `0..q`: the base-p digits of
//! an element are the coefficients of its polynomial representative (lowest
//! degree first). Multiplication goes through log/antilog tables built from a
//! primitive element.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::FieldError;

/// Largest supported field order.
pub const MAX_ORDER: u32 = 1 << 16;

/// Primitive polynomials over GF(2) for degrees 2..=16, bit i = coefficient of x^i.
const BINARY_PRIMITIVE: [(u32, u32); 15] = [
    (2, 0x7),
    (3, 0xB),
    (4, 0x13),
    (5, 0x25),
    (6, 0x43),
    (7, 0x89),
    (8, 0x11D),
    (9, 0x211),
    (10, 0x409),
    (11, 0x805),
    (12, 0x1053),
    (13, 0x201B),
    (14, 0x4443),
    (15, 0x8003),
    (16, 0x1100B),
];

/// Parameters of a finite field: characteristic, degree and (for m > 1) the
/// monic modulus polynomial, coefficients lowest degree first.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FieldSpec {
    pub p: u32,
    pub m: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modulus: Option<Vec<u32>>,
}

impl FieldSpec {
    /// GF(p) or GF(p^m) with the default modulus for that degree.
    pub fn new(p: u32, m: u32) -> Result<Self, FieldError> {
        validate_order(p, m)?;
        let modulus = if m > 1 { Some(default_modulus(p, m)) } else { None };
        Ok(FieldSpec { p, m, modulus })
    }

    pub fn binary() -> Self {
        FieldSpec { p: 2, m: 1, modulus: None }
    }

    /// Field of order q, which must be a prime power.
    pub fn with_order(q: u32) -> Result<Self, FieldError> {
        let (p, m) = prime_power(q).ok_or(FieldError::NotPrimePower(q))?;
        Self::new(p, m)
    }

    pub fn order(&self) -> u32 {
        self.p.pow(self.m)
    }

    pub fn is_binary(&self) -> bool {
        self.p == 2 && self.m == 1
    }
}

impl fmt::Display for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.m == 1 {
            write!(f, "GF({})", self.p)
        } else {
            write!(f, "GF({}^{})", self.p, self.m)
        }
    }
}

struct FieldInner {
    spec: FieldSpec,
    q: u32,
    exp: Vec<u16>,
    log: Vec<u16>,
}

/// A constructed finite field. Cheap to clone; shares its tables.
#[derive(Clone)]
pub struct Field(Arc<FieldInner>);

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0.spec)
    }
}

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0.spec == other.0.spec
    }
}

impl Eq for Field {}

impl Field {
    pub fn new(spec: FieldSpec) -> Result<Self, FieldError> {
        validate_order(spec.p, spec.m)?;
        let q = spec.order();
        let p = spec.p;
        let (exp, log) = if spec.m == 1 {
            if spec.modulus.is_some() {
                return Err(FieldError::UnexpectedModulus);
            }
            let g = (1..p).find(|&g| multiplicative_order(g, q, |a, b| (a * b) % p) == q - 1).unwrap_or(1);
            tables(q, g, |a, b| (a * b) % p)
        } else {
            let modulus = spec.modulus.as_ref().ok_or(FieldError::MissingModulus)?;
            check_modulus(p, spec.m, modulus)?;
            let mul = |a: u32, b: u32| poly_mulmod(p, spec.m, modulus, a, b);
            let g = (2..q).find(|&g| multiplicative_order(g, q, mul) == q - 1).ok_or(FieldError::Reducible)?;
            tables(q, g, mul)
        };
        Ok(Field(Arc::new(FieldInner { spec, q, exp, log })))
    }

    pub fn gf2() -> Self {
        Field::new(FieldSpec::binary()).expect("GF(2) is valid")
    }

    pub fn with_order(q: u32) -> Result<Self, FieldError> {
        Field::new(FieldSpec::with_order(q)?)
    }

    pub fn spec(&self) -> &FieldSpec {
        &self.0.spec
    }

    pub fn order(&self) -> u32 {
        self.0.q
    }

    pub fn characteristic(&self) -> u32 {
        self.0.spec.p
    }

    pub fn degree(&self) -> u32 {
        self.0.spec.m
    }

    pub fn is_binary(&self) -> bool {
        self.0.q == 2
    }

    pub fn contains(&self, a: u16) -> bool {
        u32::from(a) < self.0.q
    }

    /// The primitive element used for the log tables.
    pub fn generator(&self) -> u16 {
        self.0.exp[1]
    }

    /// Iterator over all elements in canonical order.
    pub fn elements(&self) -> impl Iterator<Item = u16> {
        (0..self.0.q).map(|a| a as u16)
    }

    #[inline]
    pub fn add(&self, a: u16, b: u16) -> u16 {
        let p = self.0.spec.p;
        if p == 2 {
            a ^ b
        } else if self.0.spec.m == 1 {
            ((u32::from(a) + u32::from(b)) % p) as u16
        } else {
            digitwise(p, a, b, |x, y| (x + y) % p)
        }
    }

    #[inline]
    pub fn neg(&self, a: u16) -> u16 {
        let p = self.0.spec.p;
        if p == 2 {
            a
        } else if self.0.spec.m == 1 {
            ((p - u32::from(a)) % p) as u16
        } else {
            digitwise(p, a, 0, |x, _| (p - x) % p)
        }
    }

    #[inline]
    pub fn sub(&self, a: u16, b: u16) -> u16 {
        if self.0.spec.p == 2 {
            a ^ b
        } else {
            self.add(a, self.neg(b))
        }
    }

    #[inline]
    pub fn mul(&self, a: u16, b: u16) -> u16 {
        if a == 0 || b == 0 {
            return 0;
        }
        let n = self.0.q - 1;
        let e = (u32::from(self.0.log[a as usize]) + u32::from(self.0.log[b as usize])) % n;
        self.0.exp[e as usize]
    }

    /// Multiplicative inverse; `None` for zero.
    pub fn inv(&self, a: u16) -> Option<u16> {
        if a == 0 {
            return None;
        }
        let n = self.0.q - 1;
        let e = (n - u32::from(self.0.log[a as usize])) % n;
        Some(self.0.exp[e as usize])
    }

    /// g^e for the table generator g.
    pub fn exp(&self, e: u64) -> u16 {
        self.0.exp[(e % u64::from(self.0.q - 1)) as usize]
    }

    /// Discrete log base the table generator; `None` for zero.
    pub fn log(&self, a: u16) -> Option<u32> {
        (a != 0).then(|| u32::from(self.0.log[a as usize]))
    }

    pub fn pow(&self, a: u16, e: u64) -> u16 {
        if e == 0 {
            return 1;
        }
        match self.log(a) {
            None => 0,
            Some(l) => self.exp(u64::from(l) * e),
        }
    }
}

fn validate_order(p: u32, m: u32) -> Result<(), FieldError> {
    if p < 2 || !is_prime(p) {
        return Err(FieldError::NotPrime(p));
    }
    if m == 0 {
        return Err(FieldError::ZeroDegree);
    }
    match p.checked_pow(m) {
        Some(q) if q <= MAX_ORDER => Ok(()),
        _ => Err(FieldError::TooLarge { p, m }),
    }
}

pub(crate) fn is_prime(n: u32) -> bool {
    n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| !n.is_multiple_of(d))
}

fn prime_power(q: u32) -> Option<(u32, u32)> {
    let p = (2..=q).find(|d| q.is_multiple_of(*d))?;
    let mut rest = q;
    let mut m = 0;
    while rest.is_multiple_of(p) {
        rest /= p;
        m += 1;
    }
    (rest == 1).then_some((p, m))
}

fn digitwise(p: u32, a: u16, b: u16, f: impl Fn(u32, u32) -> u32) -> u16 {
    let (mut a, mut b) = (u32::from(a), u32::from(b));
    let mut out = 0;
    let mut scale = 1;
    while a > 0 || b > 0 {
        out += f(a % p, b % p) * scale;
        a /= p;
        b /= p;
        scale *= p;
    }
    out as u16
}

fn multiplicative_order(g: u32, q: u32, mul: impl Fn(u32, u32) -> u32) -> u32 {
    let mut x = g;
    let mut order = 1;
    while x != 1 {
        x = mul(x, g);
        order += 1;
        if order > q {
            return 0;
        }
    }
    order
}

fn tables(q: u32, g: u32, mul: impl Fn(u32, u32) -> u32) -> (Vec<u16>, Vec<u16>) {
    let mut exp = vec![0u16; q as usize];
    let mut log = vec![0u16; q as usize];
    let mut x = 1u32;
    for e in 0..q - 1 {
        exp[e as usize] = x as u16;
        log[x as usize] = e as u16;
        x = mul(x, g);
    }
    exp[(q - 1) as usize] = 1;
    (exp, log)
}

fn to_digits(p: u32, m: u32, mut a: u32) -> Vec<u32> {
    (0..m)
        .map(|_| {
            let d = a % p;
            a /= p;
            d
        })
        .collect()
}

fn from_digits(p: u32, digits: &[u32]) -> u32 {
    digits.iter().rev().fold(0, |acc, &d| acc * p + d)
}

/// Product of two field elements (as digit-encoded polynomials) reduced by
/// the monic modulus. Only used while building tables.
fn poly_mulmod(p: u32, m: u32, modulus: &[u32], a: u32, b: u32) -> u32 {
    let a = to_digits(p, m, a);
    let b = to_digits(p, m, b);
    let mut prod = vec![0u32; 2 * m as usize];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            prod[i + j] = (prod[i + j] + x * y) % p;
        }
    }
    let m = m as usize;
    for deg in (m..prod.len()).rev() {
        let lead = prod[deg];
        if lead == 0 {
            continue;
        }
        for (i, &c) in modulus.iter().enumerate() {
            let idx = deg - m + i;
            prod[idx] = (prod[idx] + (p - lead) * c % p) % p;
        }
    }
    from_digits(p, &prod[..m])
}

fn poly_rem(p: u32, num: &[u32], den: &[u32]) -> Vec<u32> {
    let mut r = num.to_vec();
    let dd = den.len() - 1;
    let lead_inv = (1..p).find(|x| x * den[dd] % p == 1).unwrap_or(1);
    while r.len() > dd {
        let top = r.len() - 1;
        let coef = r[top] * lead_inv % p;
        if coef != 0 {
            for (i, &c) in den.iter().enumerate() {
                let idx = top - dd + i;
                r[idx] = (r[idx] + (p - coef) * c % p) % p;
            }
        }
        r.pop();
    }
    r
}

fn check_modulus(p: u32, m: u32, modulus: &[u32]) -> Result<(), FieldError> {
    if modulus.len() != m as usize + 1 || modulus[m as usize] != 1 || modulus.iter().any(|&c| c >= p) {
        return Err(FieldError::BadModulus);
    }
    if is_irreducible(p, modulus) {
        Ok(())
    } else {
        Err(FieldError::Reducible)
    }
}

/// Trial division by every monic polynomial of degree 1..=deg/2.
pub(crate) fn is_irreducible(p: u32, poly: &[u32]) -> bool {
    let deg = poly.len() - 1;
    for d in 1..=deg / 2 {
        for low in 0..p.pow(d as u32) {
            let mut divisor = to_digits(p, d as u32, low);
            divisor.push(1);
            if poly_rem(p, poly, &divisor).iter().all(|&c| c == 0) {
                return false;
            }
        }
    }
    true
}

fn default_modulus(p: u32, m: u32) -> Vec<u32> {
    if p == 2 {
        if let Some(&(_, bits)) = BINARY_PRIMITIVE.iter().find(|(d, _)| *d == m) {
            return (0..=m).map(|i| (bits >> i) & 1).collect();
        }
    }
    // Odd characteristic: the first primitive polynomial in canonical order.
    let q = p.pow(m);
    for low in 0..q {
        let mut poly = to_digits(p, m, low);
        poly.push(1);
        if poly[0] == 0 || !is_irreducible(p, &poly) {
            continue;
        }
        let mul = |a, b| poly_mulmod(p, m, &poly, a, b);
        if multiplicative_order(p, q, mul) == q - 1 {
            return poly;
        }
    }
    unreachable!("every finite field has a primitive polynomial")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_axioms(f: &Field) {
        for a in f.elements() {
            assert_eq!(f.add(a, f.neg(a)), 0);
            assert_eq!(f.sub(a, a), 0);
            if a != 0 {
                assert_eq!(f.mul(a, f.inv(a).unwrap()), 1);
            }
            for b in f.elements() {
                assert_eq!(f.add(a, b), f.add(b, a));
                assert_eq!(f.mul(a, b), f.mul(b, a));
                for c in [0u16, 1, (f.order() - 1) as u16] {
                    let lhs = f.mul(a, f.add(b, c));
                    let rhs = f.add(f.mul(a, b), f.mul(a, c));
                    assert_eq!(lhs, rhs);
                }
            }
        }
    }

    #[test]
    fn small_fields_satisfy_axioms() {
        for q in [2, 3, 4, 5, 7, 8, 9, 16, 25, 27, 32] {
            check_axioms(&Field::with_order(q).unwrap());
        }
    }

    #[test]
    fn gf5_modular_arithmetic() {
        let f = Field::with_order(5).unwrap();
        assert_eq!(f.sub(3, 4), 4);
        assert_eq!(f.sub(4, 4), 0);
        assert_eq!(f.mul(3, 4), 2);
    }

    #[test]
    fn binary_table_polynomials_are_primitive() {
        for m in 2..=16 {
            let spec = FieldSpec::new(2, m).unwrap();
            let field = Field::new(spec.clone()).unwrap();
            // x itself (encoded as 2) must generate the multiplicative group.
            let x = 2u16;
            let order = (1..field.order()).find(|&e| field.pow(x, u64::from(e)) == 1).unwrap();
            assert_eq!(order, field.order() - 1, "degree {m}");
        }
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(matches!(FieldSpec::new(4, 1), Err(FieldError::NotPrime(4))));
        assert!(matches!(FieldSpec::new(2, 17), Err(FieldError::TooLarge { .. })));
        assert!(FieldSpec::with_order(6).is_err());
        // x^2 + 1 = (x+1)^2 over GF(2)
        let reducible = FieldSpec { p: 2, m: 2, modulus: Some(vec![1, 0, 1]) };
        assert!(matches!(Field::new(reducible), Err(FieldError::Reducible)));
    }

    #[test]
    fn irreducible_but_not_primitive_modulus_works() {
        // x^4 + x^3 + x^2 + x + 1 is irreducible over GF(2) but x has order 5.
        let spec = FieldSpec { p: 2, m: 4, modulus: Some(vec![1, 1, 1, 1, 1]) };
        let f = Field::new(spec).unwrap();
        check_axioms(&f);
        assert_ne!(f.generator(), 2);
    }

    #[test]
    fn odd_extension_default_is_deterministic() {
        let a = FieldSpec::new(3, 3).unwrap();
        let b = FieldSpec::new(3, 3).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.order(), 27);
    }
}
