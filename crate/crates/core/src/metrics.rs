//! Exact fractional Hamming and insertion-deletion distances.
//!
//! Edit distance here counts insertions and deletions only; a substitution is
//! one of each and costs 2. Fractional distances are exact [`Fraction`]s.

use crate::bits::{BitString, SymbolString};
use crate::error::{Error, Result};
use crate::scalar::Fraction;

/// `|{i : x_i != y_i}| / len` over equal-length strings of the same alphabet.
pub fn hamming_fractional(x: &SymbolString, y: &SymbolString) -> Result<Fraction> {
    if x.q() != y.q() {
        return Err(Error::AlphabetMismatch { left: x.q(), right: y.q() });
    }
    hamming_slices(x.symbols(), y.symbols())
}

/// Fractional Hamming distance between two binary words.
pub fn hamming_bits(x: &BitString, y: &BitString) -> Result<Fraction> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch { left: x.len(), right: y.len() });
    }
    if x.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(Fraction::new(x.xor(y)?.count_ones() as u64, x.len() as u64))
}

fn hamming_slices<T: PartialEq>(x: &[T], y: &[T]) -> Result<Fraction> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch { left: x.len(), right: y.len() });
    }
    if x.is_empty() {
        return Err(Error::EmptyInput);
    }
    let diff = x.iter().zip(y).filter(|(a, b)| a != b).count();
    Ok(Fraction::new(diff as u64, x.len() as u64))
}

/// Minimum number of insertions plus deletions turning `x` into `y`.
pub fn edit_raw(x: &BitString, y: &BitString) -> usize {
    edit_raw_slices(&x.to_bools(), &y.to_bools())
}

/// `|x| + |y| - 2 LCS(x, y)` in `O(|x||y|)` time and `O(min(|x|,|y|))` space.
pub fn edit_raw_slices<T: PartialEq>(x: &[T], y: &[T]) -> usize {
    let (long, short) = if x.len() >= y.len() { (x, y) } else { (y, x) };
    let mut row: Vec<usize> = (0..=short.len()).collect();
    for (i, a) in long.iter().enumerate() {
        let mut diag = row[0];
        row[0] = i + 1;
        for (j, b) in short.iter().enumerate() {
            let up = row[j + 1];
            row[j + 1] = if a == b { diag } else { up.min(row[j]) + 1 };
            diag = up;
        }
    }
    row[short.len()]
}

/// Edit distance if it is at most `max`, computed in a diagonal band.
pub fn edit_raw_bounded(x: &BitString, y: &BitString, max: usize) -> Option<usize> {
    let (x, y) = (x.to_bools(), y.to_bools());
    let (n, m) = (x.len(), y.len());
    if n.abs_diff(m) > max {
        return None;
    }
    const INF: usize = usize::MAX / 2;
    let mut prev = vec![INF; m + 1];
    let mut cur = vec![INF; m + 1];
    for (j, p) in prev.iter_mut().enumerate().take(max.min(m) + 1) {
        *p = j;
    }
    for i in 1..=n {
        let lo = i.saturating_sub(max);
        let hi = (i + max).min(m);
        if lo > 0 {
            cur[lo - 1] = INF;
        }
        for j in lo..=hi {
            let v = if j == 0 {
                i
            } else if x[i - 1] == y[j - 1] {
                prev[j - 1]
            } else {
                prev[j].min(cur[j - 1]) + 1
            };
            cur[j] = v;
        }
        if hi < m {
            cur[hi + 1] = INF;
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    let d = prev[m];
    (d <= max).then_some(d)
}

/// `edit_raw(x, y) / (2 |x|)`, normalised by the reference word `x`.
pub fn edit_fractional(x: &BitString, y: &BitString) -> Result<Fraction> {
    if x.is_empty() {
        return Err(Error::EmptyReference);
    }
    Ok(Fraction::new(edit_raw(x, y) as u64, 2 * x.len() as u64))
}

/// Whether `edit_fractional(x, y) <= bound`, without computing the full distance.
pub fn edit_fractional_within(x: &BitString, y: &BitString, bound: Fraction) -> Result<Option<Fraction>> {
    if x.is_empty() {
        return Err(Error::EmptyReference);
    }
    let denom = 2 * x.len() as u64;
    let max_raw = (bound * Fraction::from_integer(denom)).floor().to_integer() as usize;
    Ok(edit_raw_bounded(x, y, max_raw).map(|d| Fraction::new(d as u64, denom)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(s: &str) -> BitString {
        s.parse().unwrap()
    }

    #[test]
    fn hamming_examples() {
        let x = SymbolString::from(&b("0000"));
        let y = SymbolString::from(&b("0101"));
        assert_eq!(hamming_fractional(&x, &y).unwrap(), Fraction::new(1, 2));
        assert_eq!(hamming_fractional(&x, &x).unwrap(), Fraction::new(0, 1));
        let p = SymbolString::from_text("abc", b'a', 26).unwrap();
        let q = SymbolString::from_text("abd", b'a', 26).unwrap();
        assert_eq!(hamming_fractional(&p, &q).unwrap(), Fraction::new(1, 3));
    }

    #[test]
    fn hamming_errors() {
        let x = SymbolString::from(&b("00"));
        let y = SymbolString::from(&b("000"));
        assert!(matches!(hamming_fractional(&x, &y), Err(Error::LengthMismatch { .. })));
        let e = SymbolString::from(&BitString::new());
        assert!(matches!(hamming_fractional(&e, &e), Err(Error::EmptyInput)));
        let q4 = SymbolString::new(vec![0, 0], 4).unwrap();
        assert!(matches!(hamming_fractional(&x, &q4), Err(Error::AlphabetMismatch { .. })));
    }

    #[test]
    fn edit_examples() {
        assert_eq!(edit_raw(&b("1100"), &b("100")), 1);
        assert_eq!(edit_raw(&b("1100"), &b("1100")), 0);
        assert_eq!(edit_raw(&b("0101"), &b("1010")), 2);
        assert_eq!(edit_raw(&BitString::new(), &b("101")), 3);
        assert_eq!(edit_fractional(&b("1100"), &b("100")).unwrap(), Fraction::new(1, 8));
        assert_eq!(edit_fractional(&b("01"), &b("0111")).unwrap(), Fraction::new(1, 2));
        assert!(matches!(edit_fractional(&BitString::new(), &b("1")), Err(Error::EmptyReference)));
    }

    #[test]
    fn bounded_matches_full() {
        let x = b("0110100110010110");
        let y = b("1101001100101101");
        let d = edit_raw(&x, &y);
        assert_eq!(edit_raw_bounded(&x, &y, d), Some(d));
        assert_eq!(edit_raw_bounded(&x, &y, d + 5), Some(d));
        if d > 0 {
            assert_eq!(edit_raw_bounded(&x, &y, d - 1), None);
        }
    }
}
