use serde::Serialize;

use crate::error::{Error, Result};
use crate::special::{binomial, multinomial, BinomialTable};

/// Exponent vectors of total degree `d` in `n` variables.
///
/// Ordering is graded-lexicographic, descending in the first exponent:
/// for `n = 3, d = 2` the table reads
/// `(2,0,0) (1,1,0) (1,0,1) (0,2,0) (0,1,1) (0,0,2)`.
/// Gram matrices are laid out in this order, so it must not change.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultiIndexTable {
    n: usize,
    d: usize,
    exponents: Vec<u32>,
    #[serde(skip)]
    sqrt_multinomials: Vec<f64>,
    #[serde(skip)]
    counts: BinomialCounts,
}

/// `count(m, s)` = number of exponent vectors of `m` variables summing to `s`.
#[derive(Debug, Clone, PartialEq, Default)]
struct BinomialCounts {
    d: usize,
    table: Vec<usize>,
}

impl BinomialCounts {
    fn new(n: usize, d: usize) -> Result<Self> {
        let pascal = BinomialTable::new(n + d)?;
        let mut table = vec![0usize; (n + 1) * (d + 1)];
        for m in 1..=n {
            for s in 0..=d {
                table[m * (d + 1) + s] = pascal.get(s + m - 1, m - 1);
            }
        }
        Ok(Self { d, table })
    }

    fn get(&self, m: usize, s: usize) -> usize {
        self.table[m * (self.d + 1) + s]
    }
}

/// Number of monomials of degree `d` in `n` variables, `C(d+n-1, n-1)`.
pub fn dimension(n: usize, d: usize) -> Result<usize> {
    if n == 0 {
        return Err(Error::Domain("variable count must be at least 1".into()));
    }
    let len = binomial(d + n - 1, n - 1)?;
    // each entry stores n exponents
    len.checked_mul(n)
        .filter(|&total| total <= isize::MAX as usize / std::mem::size_of::<u32>())
        .ok_or_else(|| Error::Capacity(format!("table for n={n}, d={d} is not addressable")))?;
    Ok(len)
}

impl MultiIndexTable {
    pub fn new(n: usize, d: usize) -> Result<Self> {
        let len = dimension(n, d)?;
        let mut exponents = Vec::with_capacity(len * n);
        let mut current = vec![0u32; n];
        fill(&mut current, 0, d as u32, &mut exponents);
        debug_assert_eq!(exponents.len(), len * n);
        let sqrt_multinomials = exponents
            .chunks(n)
            .map(|alpha| multinomial(alpha).sqrt())
            .collect();
        Ok(Self {
            n,
            d,
            exponents,
            sqrt_multinomials,
            counts: BinomialCounts::new(n, d)?,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.sqrt_multinomials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, idx: usize) -> &[u32] {
        &self.exponents[idx * self.n..(idx + 1) * self.n]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[u32]> + '_ {
        self.exponents.chunks(self.n)
    }

    /// `sqrt(d! / Π αᵢ!)` for the entry at `idx`.
    pub fn sqrt_multinomial(&self, idx: usize) -> f64 {
        self.sqrt_multinomials[idx]
    }

    pub fn sqrt_multinomials(&self) -> &[f64] {
        &self.sqrt_multinomials
    }

    /// Position of `alpha` in the table, or `None` if it has the wrong shape.
    pub fn position(&self, alpha: &[u32]) -> Option<usize> {
        if alpha.len() != self.n || alpha.iter().map(|&a| a as usize).sum::<usize>() != self.d {
            return None;
        }
        let mut rank = 0usize;
        let mut remaining = self.d;
        for (i, &a) in alpha.iter().enumerate().take(self.n - 1) {
            let rest = self.n - i - 1;
            let a = a as usize;
            // entries with a larger exponent in slot i come first
            for v in a + 1..=remaining {
                rank += self.counts.get(rest, remaining - v);
            }
            remaining -= a;
        }
        Some(rank)
    }
}

fn fill(current: &mut [u32], slot: usize, remaining: u32, out: &mut Vec<u32>) {
    if slot + 1 == current.len() {
        current[slot] = remaining;
        out.extend_from_slice(current);
        return;
    }
    for a in (0..=remaining).rev() {
        current[slot] = a;
        fill(current, slot + 1, remaining - a, out);
    }
    current[slot] = 0;
}

/// Convenience constructor mirroring the free-function form of the API.
pub fn multi_index_table(n: usize, d: usize) -> Result<MultiIndexTable> {
    MultiIndexTable::new(n, d)
}
