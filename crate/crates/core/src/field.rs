//! Finite field arithmetic over GF(p^m) with log/antilog tables.
//!
//! Elements are `u16`. An element of an extension field encodes the
//! polynomial `c_0 + c_1 x + ... + c_{m-1} x^{m-1}` as the integer
//! `sum c_i p^i` (for p = 2 this is the usual bit vector).
//!
//! Binary extension fields use these fixed primitive polynomials:
//!
//! | m | polynomial | hex |
//! |---|------------|-----|
//! | 2 | x^2+x+1 | 0x7 |
//! | 3 | x^3+x+1 | 0xB |
//! | 4 | x^4+x+1 | 0x13 |
//! | 5 | x^5+x^2+1 | 0x25 |
//! | 6 | x^6+x+1 | 0x43 |
//! | 7 | x^7+x+1 | 0x83 |
//! | 8 | x^8+x^4+x^3+x^2+1 | 0x11D |
//! | 9 | x^9+x^4+1 | 0x211 |
//! | 10 | x^10+x^3+1 | 0x409 |
//! | 11 | x^11+x^2+1 | 0x805 |
//! | 12 | x^12+x^6+x^4+x+1 | 0x1053 |
//! | 13 | x^13+x^4+x^3+x+1 | 0x201B |
//! | 14 | x^14+x^10+x^6+x+1 | 0x4443 |
//! | 15 | x^15+x+1 | 0x8003 |
//! | 16 | x^16+x^12+x^3+x+1 | 0x1100B |
//!
//! Odd-characteristic extension fields (only needed for design
//! constructions) use the first monic primitive polynomial in order of the
//! integer encoding of its lower coefficients.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

const BINARY_POLYS: [u32; 17] =
    [0, 0b11, 0x7, 0xB, 0x13, 0x25, 0x43, 0x83, 0x11D, 0x211, 0x409, 0x805, 0x1053, 0x201B, 0x4443, 0x8003, 0x1100B];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    Prime,
    BinaryExtension,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FieldSpec {
    pub kind: FieldKind,
    pub order: u64,
}

impl FieldSpec {
    pub fn prime(p: u64) -> Self {
        FieldSpec { kind: FieldKind::Prime, order: p }
    }

    pub fn binary(m: u32) -> Self {
        FieldSpec { kind: FieldKind::BinaryExtension, order: 1u64 << m }
    }
}

struct Tables {
    order: u32,
    characteristic: u32,
    degree: u32,
    exp: Vec<u16>,
    log: Vec<u32>,
}

/// Arithmetic context for one finite field. Cheap to clone.
#[derive(Clone)]
pub struct GaloisField {
    tables: Arc<Tables>,
}

impl fmt::Debug for GaloisField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GF({}^{})", self.tables.characteristic, self.tables.degree)
    }
}

impl PartialEq for GaloisField {
    fn eq(&self, other: &Self) -> bool {
        self.order() == other.order()
    }
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// `(p, m)` with `q = p^m`, or `None` if `q` is not a prime power.
pub fn prime_power(q: u64) -> Option<(u64, u32)> {
    if q < 2 {
        return None;
    }
    let p = (2..=q).find(|d| q.is_multiple_of(*d))?;
    let (mut rest, mut m) = (q, 0);
    while rest % p == 0 {
        rest /= p;
        m += 1;
    }
    (rest == 1).then_some((p, m))
}

/// Build the arithmetic context for `spec`.
pub fn make_field(spec: FieldSpec) -> Result<GaloisField> {
    match spec.kind {
        FieldKind::Prime if is_prime(spec.order) && spec.order <= 65_536 => GaloisField::prime_power(spec.order),
        FieldKind::BinaryExtension if spec.order >= 2 && spec.order <= 1 << 16 && spec.order.is_power_of_two() => {
            GaloisField::prime_power(spec.order)
        }
        _ => Err(Error::InvalidField(spec.order)),
    }
}

impl GaloisField {
    /// Any prime power `q <= 2^16`.
    pub fn prime_power(q: u64) -> Result<GaloisField> {
        let (p, m) = prime_power(q).ok_or(Error::InvalidField(q))?;
        if q > 1 << 16 {
            return Err(Error::InvalidField(q));
        }
        let tables = if m == 1 {
            prime_tables(p as u32)
        } else if p == 2 {
            extension_tables(2, m, &binary_coeffs(m)).ok_or(Error::InvalidField(q))?
        } else {
            odd_extension_tables(p as u32, m).ok_or(Error::InvalidField(q))?
        };
        Ok(GaloisField { tables: Arc::new(tables) })
    }

    pub fn gf256() -> GaloisField {
        GaloisField::prime_power(256).expect("GF(256)")
    }

    pub fn order(&self) -> u64 {
        u64::from(self.tables.order)
    }

    pub fn characteristic(&self) -> u64 {
        u64::from(self.tables.characteristic)
    }

    pub fn degree(&self) -> u32 {
        self.tables.degree
    }

    #[inline]
    pub fn add(&self, a: u16, b: u16) -> u16 {
        let t = &*self.tables;
        if t.characteristic == 2 {
            a ^ b
        } else if t.degree == 1 {
            ((u32::from(a) + u32::from(b)) % t.characteristic) as u16
        } else {
            digitwise(a, b, t.characteristic, |x, y, p| (x + y) % p)
        }
    }

    #[inline]
    pub fn neg(&self, a: u16) -> u16 {
        let t = &*self.tables;
        if t.characteristic == 2 || a == 0 {
            a
        } else if t.degree == 1 {
            (t.characteristic - u32::from(a)) as u16
        } else {
            digitwise(0, a, t.characteristic, |_, y, p| (p - y) % p)
        }
    }

    #[inline]
    pub fn sub(&self, a: u16, b: u16) -> u16 {
        self.add(a, self.neg(b))
    }

    #[inline]
    pub fn mul(&self, a: u16, b: u16) -> u16 {
        if a == 0 || b == 0 {
            return 0;
        }
        let t = &*self.tables;
        t.exp[(t.log[a as usize] + t.log[b as usize]) as usize]
    }

    /// Multiplicative inverse; panics on zero.
    pub fn inv(&self, a: u16) -> u16 {
        assert!(a != 0, "inverse of zero");
        let t = &*self.tables;
        t.exp[((t.order - 1 - t.log[a as usize]) % (t.order - 1)) as usize]
    }

    pub fn div(&self, a: u16, b: u16) -> u16 {
        self.mul(a, self.inv(b))
    }

    pub fn pow(&self, a: u16, e: u64) -> u16 {
        if e == 0 {
            return 1;
        }
        if a == 0 {
            return 0;
        }
        let t = &*self.tables;
        let l = (u64::from(t.log[a as usize]) * e) % u64::from(t.order - 1);
        t.exp[l as usize]
    }

    /// Fixed primitive element.
    pub fn generator(&self) -> u16 {
        self.tables.exp[1]
    }

    /// Elements of the subfield of order `sub_order` (those with `x^sub_order = x`).
    pub fn subfield(&self, sub_order: u64) -> Vec<u16> {
        (0..self.tables.order).map(|x| x as u16).filter(|&x| self.pow(x, sub_order) == x).collect()
    }

    /// `y += c * x` elementwise.
    pub fn axpy(&self, c: u16, x: &[u16], y: &mut [u16]) {
        if c == 0 {
            return;
        }
        for (yi, &xi) in y.iter_mut().zip(x) {
            *yi = self.add(*yi, self.mul(c, xi));
        }
    }
}

fn digitwise(a: u16, b: u16, p: u32, op: impl Fn(u32, u32, u32) -> u32) -> u16 {
    let (mut a, mut b) = (u32::from(a), u32::from(b));
    let (mut out, mut place) = (0u32, 1u32);
    while a > 0 || b > 0 {
        out += op(a % p, b % p, p) * place;
        a /= p;
        b /= p;
        place *= p;
    }
    out as u16
}

fn prime_tables(p: u32) -> Tables {
    let q = p;
    if p == 2 {
        return Tables { order: 2, characteristic: 2, degree: 1, exp: vec![1, 1], log: vec![0, 0] };
    }
    for g in 2..p {
        let mut exp = Vec::with_capacity(2 * (q as usize - 1));
        let mut x = 1u32;
        let mut ok = true;
        for i in 0..q - 1 {
            if i > 0 && x == 1 {
                ok = false;
                break;
            }
            exp.push(x as u16);
            x = x * g % p;
        }
        if ok {
            return finish_tables(q, p, 1, exp);
        }
    }
    unreachable!("every prime field has a primitive root")
}

fn binary_coeffs(m: u32) -> Vec<u32> {
    (0..m).map(|i| (BINARY_POLYS[m as usize] >> i) & 1).collect()
}

/// Tables for GF(p^m) with modulus `x^m - sum_i low[i] x^i` written as
/// `x^m + sum_i c_i x^i` where `low` holds the `c_i`; `None` if not primitive.
fn extension_tables(p: u32, m: u32, low: &[u32]) -> Option<Tables> {
    let q = p.pow(m);
    let mut digits = vec![0u32; m as usize];
    digits[0] = 1;
    let mut exp = Vec::with_capacity(2 * (q as usize - 1));
    for i in 0..q - 1 {
        let enc = digits.iter().rev().fold(0u32, |acc, &d| acc * p + d);
        if i > 0 && enc == 1 {
            return None;
        }
        exp.push(enc as u16);
        // multiply by x, reducing x^m = -sum c_i x^i
        let top = digits[m as usize - 1];
        for j in (1..m as usize).rev() {
            digits[j] = digits[j - 1];
        }
        digits[0] = 0;
        for j in 0..m as usize {
            digits[j] = (digits[j] + (p - low[j] % p) * top) % p;
        }
        if digits.iter().all(|&d| d == 0) {
            return None;
        }
    }
    Some(finish_tables(q, p, m, exp))
}

fn odd_extension_tables(p: u32, m: u32) -> Option<Tables> {
    let count = p.pow(m);
    (0..count).find_map(|code| {
        let mut low = Vec::with_capacity(m as usize);
        let mut c = code;
        for _ in 0..m {
            low.push(c % p);
            c /= p;
        }
        if low[0] == 0 {
            return None;
        }
        extension_tables(p, m, &low)
    })
}

fn finish_tables(q: u32, p: u32, m: u32, mut exp: Vec<u16>) -> Tables {
    let mut log = vec![0u32; q as usize];
    for (i, &e) in exp.iter().enumerate() {
        log[e as usize] = i as u32;
    }
    let head: Vec<u16> = exp.clone();
    exp.extend_from_slice(&head);
    Tables { order: q, characteristic: p, degree: m, exp, log }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prime_inverse() {
        let f = make_field(FieldSpec::prime(7)).unwrap();
        assert_eq!(f.mul(3, 5), 1);
        assert_eq!(f.inv(3), 5);
        assert_eq!(f.sub(2, 5), 4);
    }

    #[test]
    fn gf16_square_of_x() {
        let f = make_field(FieldSpec::binary(4)).unwrap();
        assert_eq!(f.mul(2, 2), 4);
        assert_eq!(f.mul(8, 2), 3); // x^4 = x + 1
    }

    #[test]
    fn gf256_inverses_exhaustive() {
        let f = GaloisField::gf256();
        for a in 1..=255u16 {
            assert_eq!(f.mul(a, f.inv(a)), 1, "a = {a}");
        }
    }

    #[test]
    fn rejects_non_prime_orders() {
        assert!(matches!(make_field(FieldSpec::prime(9)), Err(Error::InvalidField(9))));
        assert!(matches!(
            make_field(FieldSpec { kind: FieldKind::BinaryExtension, order: 12 }),
            Err(Error::InvalidField(12))
        ));
        assert!(make_field(FieldSpec { kind: FieldKind::Prime, order: 1 }).is_err());
    }

    #[test]
    fn all_binary_polynomials_are_primitive() {
        for m in 1..=16 {
            let f = make_field(FieldSpec::binary(m)).unwrap();
            assert_eq!(f.order(), 1 << m);
        }
    }

    #[test]
    fn axioms_exhaustive_small_orders() {
        for q in [2u64, 3, 4, 5, 7, 8, 9, 16, 25, 27, 49, 81, 121, 127, 128, 243, 256, 257] {
            let f = GaloisField::prime_power(q).unwrap();
            let n = q as u16;
            for a in 0..n {
                assert_eq!(f.add(a, f.neg(a)), 0);
                assert_eq!(f.add(a, 0), a);
                assert_eq!(f.mul(a, 1), a);
                if a != 0 {
                    assert_eq!(f.mul(a, f.inv(a)), 1, "q={q} a={a}");
                }
            }
            // distributivity and associativity sampled on a stride
            let step = (q / 17).max(1) as usize;
            for a in (0..n).step_by(step) {
                for b in (0..n).step_by(step) {
                    assert_eq!(f.add(a, b), f.add(b, a));
                    assert_eq!(f.mul(a, b), f.mul(b, a));
                    for c in (0..n).step_by(step * 3) {
                        assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
                        assert_eq!(f.mul(f.mul(a, b), c), f.mul(a, f.mul(b, c)));
                        assert_eq!(f.add(f.add(a, b), c), f.add(a, f.add(b, c)));
                    }
                }
            }
        }
    }

    #[test]
    fn subfield_of_gf81_is_gf9() {
        let f = GaloisField::prime_power(81).unwrap();
        let sub = f.subfield(9);
        assert_eq!(sub.len(), 9);
        for &a in &sub {
            for &b in &sub {
                assert!(sub.contains(&f.add(a, b)));
                assert!(sub.contains(&f.mul(a, b)));
            }
        }
    }
}
