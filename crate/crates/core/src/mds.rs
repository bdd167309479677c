//! Systematic Reed-Solomon (Vandermonde) MDS codes.
//!
//! An `[n, k]` code maps `k` equal-length symbol blocks to `n` coded blocks
//! such that any `k` coded blocks determine the originals. Positions are
//! 0-based.

use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::combinatorics::{binomial, subsets};
use crate::error::{Error, Result};
use crate::field::GaloisField;

/// One subfile (or coded subfile) as a run of field elements.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct SymbolBlock(pub Vec<u16>);

impl SymbolBlock {
    pub fn zeros(len: usize) -> Self {
        SymbolBlock(vec![0; len])
    }

    pub fn from_bytes(bytes: &[u8]) -> Self {
        SymbolBlock(bytes.iter().map(|&b| u16::from(b)).collect())
    }

    /// Panics if an element does not fit a byte.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.0.iter().map(|&x| u8::try_from(x).expect("symbol exceeds one byte")).collect()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `self += other` in `field`.
    pub fn add_assign(&mut self, other: &SymbolBlock, field: &GaloisField) {
        for (a, &b) in self.0.iter_mut().zip(&other.0) {
            *a = field.add(*a, b);
        }
    }

    pub fn sub_assign(&mut self, other: &SymbolBlock, field: &GaloisField) {
        for (a, &b) in self.0.iter_mut().zip(&other.0) {
            *a = field.sub(*a, b);
        }
    }
}

#[derive(Debug, Clone)]
pub struct MdsCode {
    k: usize,
    n: usize,
    field: GaloisField,
    /// `k x n`, systematic: the first `k` columns are the identity.
    generator: Vec<Vec<u16>>,
}

/// Build the systematic `[n, k]` Reed-Solomon code over `field`.
///
/// The Vandermonde matrix evaluates at the field elements encoded as
/// `1..=n`, then is normalised by the inverse of its leading `k x k` block.
pub fn make_mds(k: usize, n: usize, field: &GaloisField) -> Result<MdsCode> {
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!("MDS dimension k={k} must satisfy 1 <= k <= n={n}")));
    }
    if n as u64 > field.order() - 1 {
        return Err(Error::FieldTooSmall { order: field.order(), n });
    }
    let points: Vec<u16> = (1..=n as u16).collect();
    let vandermonde: Vec<Vec<u16>> = (0..k).map(|i| points.iter().map(|&a| field.pow(a, i as u64)).collect()).collect();
    let lead: Vec<Vec<u16>> = vandermonde.iter().map(|row| row[..k].to_vec()).collect();
    let lead_inv = invert(&lead, field)?;
    let generator = mat_mul(&lead_inv, &vandermonde, field);
    Ok(MdsCode { k, n, field: field.clone(), generator })
}

impl MdsCode {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn field(&self) -> &GaloisField {
        &self.field
    }

    pub fn generator(&self) -> &[Vec<u16>] {
        &self.generator
    }

    /// Coded block `j` is `sum_i G[i][j] * subfiles[i]`.
    pub fn encode(&self, subfiles: &[SymbolBlock]) -> Result<Vec<SymbolBlock>> {
        if subfiles.len() != self.k {
            return Err(Error::Shape(format!("expected {} subfiles, got {}", self.k, subfiles.len())));
        }
        let len = subfiles[0].len();
        if subfiles.iter().any(|s| s.len() != len) {
            return Err(Error::Shape("subfiles differ in length".into()));
        }
        Ok((0..self.n)
            .map(|j| {
                let mut out = SymbolBlock::zeros(len);
                for (i, sub) in subfiles.iter().enumerate() {
                    self.field.axpy(self.generator[i][j], &sub.0, &mut out.0);
                }
                out
            })
            .collect())
    }

    /// Recover the `k` original blocks from any `k` coded positions.
    pub fn decode(&self, available: &BTreeMap<usize, SymbolBlock>) -> Result<Vec<SymbolBlock>> {
        if available.len() < self.k {
            return Err(Error::InsufficientSymbols { needed: self.k, available: available.len() });
        }
        if let Some((&bad, _)) = available.iter().find(|(&p, _)| p >= self.n) {
            return Err(Error::Shape(format!("position {bad} out of range for length {}", self.n)));
        }
        let chosen: Vec<(&usize, &SymbolBlock)> = available.iter().take(self.k).collect();
        let len = chosen[0].1.len();
        if chosen.iter().any(|(_, b)| b.len() != len) {
            return Err(Error::Shape("coded blocks differ in length".into()));
        }
        // coded[pos_r] = sum_i G[i][pos_r] * W_i
        let system: Vec<Vec<u16>> =
            chosen.iter().map(|(&pos, _)| (0..self.k).map(|i| self.generator[i][pos]).collect()).collect();
        let inv = invert(&system, &self.field)?;
        Ok((0..self.k)
            .map(|i| {
                let mut out = SymbolBlock::zeros(len);
                for (r, (_, block)) in chosen.iter().enumerate() {
                    self.field.axpy(inv[i][r], &block.0, &mut out.0);
                }
                out
            })
            .collect())
    }

    /// Check that `k x k` column submatrices of the generator are invertible:
    /// all of them when there are at most `exhaustive_limit`, otherwise
    /// `samples` random ones.
    pub fn check_mds(&self, exhaustive_limit: u64, samples: usize, seed: u64) -> bool {
        let sub_ok = |cols: &[usize]| {
            let m: Vec<Vec<u16>> = (0..self.k).map(|i| cols.iter().map(|&c| self.generator[i][c]).collect()).collect();
            invert(&m, &self.field).is_ok()
        };
        if binomial(self.n as u64, self.k as u64) <= exhaustive_limit {
            subsets(self.n, self.k).all(|s| sub_ok(&s.iter().map(|c| c - 1).collect::<Vec<_>>()))
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..samples).all(|_| {
                let mut cols = sample(&mut rng, self.n, self.k).into_vec();
                cols.sort_unstable();
                sub_ok(&cols)
            })
        }
    }
}

fn mat_mul(a: &[Vec<u16>], b: &[Vec<u16>], field: &GaloisField) -> Vec<Vec<u16>> {
    let cols = b[0].len();
    a.iter()
        .map(|row| {
            let mut out = vec![0u16; cols];
            for (l, &coef) in row.iter().enumerate() {
                field.axpy(coef, &b[l], &mut out);
            }
            out
        })
        .collect()
}

/// Gauss-Jordan inverse of a square matrix.
pub(crate) fn invert(m: &[Vec<u16>], field: &GaloisField) -> Result<Vec<Vec<u16>>> {
    let n = m.len();
    let mut a: Vec<Vec<u16>> = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| u16::from(i == j)));
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).find(|&r| a[r][col] != 0).ok_or(Error::Singular(n))?;
        a.swap(col, pivot);
        let inv = field.inv(a[col][col]);
        for x in a[col].iter_mut() {
            *x = field.mul(*x, inv);
        }
        let pivot_row = a[col].clone();
        for r in 0..n {
            if r != col && a[r][col] != 0 {
                let c = field.neg(a[r][col]);
                field.axpy(c, &pivot_row, &mut a[r]);
            }
        }
    }
    Ok(a.into_iter().map(|r| r[n..].to_vec()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{make_field, FieldSpec};
    use rand::Rng;

    fn random_blocks(rng: &mut ChaCha8Rng, k: usize, len: usize, order: u64) -> Vec<SymbolBlock> {
        (0..k).map(|_| SymbolBlock((0..len).map(|_| rng.gen_range(0..order) as u16).collect())).collect()
    }

    #[test]
    fn square_code_is_identity() {
        let f = GaloisField::gf256();
        let code = make_mds(3, 3, &f).unwrap();
        for (i, row) in code.generator().iter().enumerate() {
            for (j, &g) in row.iter().enumerate() {
                assert_eq!(g, u16::from(i == j));
            }
        }
        let x = vec![SymbolBlock(vec![9, 8]), SymbolBlock(vec![7, 6]), SymbolBlock(vec![5, 4])];
        assert_eq!(code.encode(&x).unwrap(), x);
    }

    #[test]
    fn hand_generator_over_gf5() {
        let f = make_field(FieldSpec::prime(5)).unwrap();
        let code = MdsCode { k: 2, n: 3, field: f, generator: vec![vec![1, 0, 1], vec![0, 1, 1]] };
        let out = code.encode(&[SymbolBlock(vec![1]), SymbolBlock(vec![2])]).unwrap();
        assert_eq!(out, vec![SymbolBlock(vec![1]), SymbolBlock(vec![2]), SymbolBlock(vec![3])]);
    }

    #[test]
    fn systematic_prefix() {
        let f = GaloisField::gf256();
        let code = make_mds(6, 15, &f).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = random_blocks(&mut rng, 6, 16, 256);
        let c = code.encode(&x).unwrap();
        assert_eq!(&c[..6], &x[..]);
    }

    #[test]
    fn sampled_mds_property_6_15() {
        let code = make_mds(6, 15, &GaloisField::gf256()).unwrap();
        assert!(code.check_mds(0, 1000, 11));
        assert!(code.check_mds(10_000, 0, 0));
    }

    #[test]
    fn twelve_five_code_is_mds() {
        let code = make_mds(5, 12, &GaloisField::gf256()).unwrap();
        assert!(code.check_mds(10_000, 0, 0));
    }

    #[test]
    fn user_one_recovery_pattern() {
        // 1-based coded subfiles {3,4,5,13,14,15}
        let code = make_mds(6, 15, &GaloisField::gf256()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = random_blocks(&mut rng, 6, 32, 256);
        let c = code.encode(&x).unwrap();
        let avail: BTreeMap<usize, SymbolBlock> = [2, 3, 4, 12, 13, 14].iter().map(|&p| (p, c[p].clone())).collect();
        assert_eq!(code.decode(&avail).unwrap(), x);
    }

    #[test]
    fn errors() {
        let f = make_field(FieldSpec::prime(7)).unwrap();
        assert!(matches!(make_mds(3, 7, &f), Err(Error::FieldTooSmall { .. })));
        let code = make_mds(3, 6, &f).unwrap();
        assert!(matches!(code.encode(&[SymbolBlock(vec![1])]), Err(Error::Shape(_))));
        assert!(matches!(
            code.encode(&[SymbolBlock(vec![1]), SymbolBlock(vec![1, 2]), SymbolBlock(vec![1])]),
            Err(Error::Shape(_))
        ));
        let avail: BTreeMap<usize, SymbolBlock> = [(0, SymbolBlock(vec![1])), (4, SymbolBlock(vec![2]))].into();
        assert!(matches!(code.decode(&avail), Err(Error::InsufficientSymbols { needed: 3, available: 2 })));
    }

    #[test]
    fn random_erasures_over_prime_field() {
        let f = make_field(FieldSpec::prime(257)).unwrap();
        let code = make_mds(4, 10, &f).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..100 {
            let x = random_blocks(&mut rng, 4, 8, 257);
            let c = code.encode(&x).unwrap();
            let keep = sample(&mut rng, 10, 4).into_vec();
            let avail = keep.iter().map(|&p| (p, c[p].clone())).collect();
            assert_eq!(code.decode(&avail).unwrap(), x);
        }
    }
}
