//! Set partitions and the moment–cumulant relations between them.
//!
//! Subsets of `{0, …, n−1}` are bit masks. The moment of a set `S` is
//! `m(S) = Σ_π Π_{B∈π} κ(B)` over set partitions `π` of `S`; both directions
//! are evaluated through the recursion on the block containing the lowest
//! element of `S`, `m(S) = Σ_{B ∋ min S} κ(B) m(S∖B)`.

use std::collections::HashMap;

use crate::error::{Error, Result};

/// Largest set size handled (masks are `u32`, memo tables are `2^n`).
pub const MAX_SET_SIZE: usize = 16;

fn full_mask(n: usize) -> u32 {
    if n == 32 {
        u32::MAX
    } else {
        (1u32 << n) - 1
    }
}

/// Iterates over the subsets of `rest`, including the empty set.
fn subsets(rest: u32) -> impl Iterator<Item = u32> {
    let mut sub = rest;
    let mut done = false;
    std::iter::from_fn(move || {
        if done {
            return None;
        }
        let out = sub;
        if sub == 0 {
            done = true;
        } else {
            sub = (sub - 1) & rest;
        }
        Some(out)
    })
}

/// All set partitions of `mask`, each as a list of block masks.
pub fn partitions_of(mask: u32) -> Vec<Vec<u32>> {
    if mask == 0 {
        return vec![Vec::new()];
    }
    let low = mask & mask.wrapping_neg();
    let rest = mask & !low;
    let mut out = Vec::new();
    for sub in subsets(rest) {
        let block = low | sub;
        for mut tail in partitions_of(mask & !block) {
            tail.insert(0, block);
            out.push(tail);
        }
    }
    out
}

pub fn set_partitions(n: usize) -> Vec<Vec<u32>> {
    partitions_of(full_mask(n))
}

/// Bell number `B_n` via the Bell triangle.
pub fn bell_number(n: usize) -> u64 {
    let mut row = vec![1u64];
    for _ in 0..n {
        let mut next = vec![*row.last().expect("row is non-empty")];
        for &v in &row {
            let last = *next.last().expect("non-empty");
            next.push(last + v);
        }
        row = next;
    }
    row[0]
}

fn check_size(n: usize) -> Result<()> {
    if n > MAX_SET_SIZE {
        Err(Error::Range(format!(
            "set size {n} exceeds the supported maximum {MAX_SET_SIZE}"
        )))
    } else {
        Ok(())
    }
}

/// Full moment `m({0..n})` from joint cumulants of every non-empty subset.
///
/// `cumulant(mask)` returns `None` for an unavailable subset, which is
/// reported as a configuration error.
pub fn moments_from_cumulants(n: usize, cumulant: impl Fn(u32) -> Option<f64>) -> Result<f64> {
    check_size(n)?;
    let mut kappa: HashMap<u32, f64> = HashMap::new();
    let mut memo: HashMap<u32, f64> = HashMap::new();
    moment_rec(full_mask(n), &cumulant, &mut kappa, &mut memo)
}

fn moment_rec(
    mask: u32,
    cumulant: &impl Fn(u32) -> Option<f64>,
    kappa: &mut HashMap<u32, f64>,
    memo: &mut HashMap<u32, f64>,
) -> Result<f64> {
    if mask == 0 {
        return Ok(1.0);
    }
    if let Some(&v) = memo.get(&mask) {
        return Ok(v);
    }
    let low = mask & mask.wrapping_neg();
    let rest = mask & !low;
    let mut total = 0.0;
    for sub in subsets(rest) {
        let block = low | sub;
        let k = match kappa.get(&block) {
            Some(&k) => k,
            None => {
                let k =
                    cumulant(block).ok_or_else(|| Error::Config(format!("missing cumulant for subset {block:#b}")))?;
                kappa.insert(block, k);
                k
            }
        };
        if k != 0.0 {
            total += k * moment_rec(mask & !block, cumulant, kappa, memo)?;
        }
    }
    memo.insert(mask, total);
    Ok(total)
}

/// Joint cumulant of the full set from moments of every non-empty subset.
pub fn cumulant_from_moments(n: usize, moment: impl Fn(u32) -> f64) -> Result<f64> {
    check_size(n)?;
    let mut memo: HashMap<u32, f64> = HashMap::new();
    Ok(cumulant_rec(full_mask(n), &moment, &mut memo))
}

fn cumulant_rec(mask: u32, moment: &impl Fn(u32) -> f64, memo: &mut HashMap<u32, f64>) -> f64 {
    if let Some(&v) = memo.get(&mask) {
        return v;
    }
    let low = mask & mask.wrapping_neg();
    let rest = mask & !low;
    let mut k = moment(mask);
    for sub in subsets(rest) {
        let block = low | sub;
        if block == mask {
            continue;
        }
        k -= cumulant_rec(block, moment, memo) * moment(mask & !block);
    }
    memo.insert(mask, k);
    k
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Partitions by restricted growth strings, independent of the recursion above.
    fn rgs_partitions(n: usize) -> Vec<Vec<u32>> {
        let mut out = Vec::new();
        let mut a = vec![0usize; n];
        loop {
            let blocks = a.iter().copied().max().map_or(0, |m| m + 1);
            let mut masks = vec![0u32; blocks];
            for (i, &b) in a.iter().enumerate() {
                masks[b] |= 1 << i;
            }
            out.push(masks);
            // Next restricted growth string.
            let mut i = n;
            loop {
                if i <= 1 {
                    return out;
                }
                i -= 1;
                let prefix_max = a[..i].iter().copied().max().unwrap_or(0);
                if a[i] <= prefix_max {
                    a[i] += 1;
                    for v in a.iter_mut().skip(i + 1) {
                        *v = 0;
                    }
                    break;
                }
            }
        }
    }

    #[test]
    fn partition_counts_are_bell_numbers() {
        let bells = [1u64, 1, 2, 5, 15, 52, 203, 877];
        for (n, &b) in bells.iter().enumerate() {
            assert_eq!(bell_number(n), b);
            assert_eq!(set_partitions(n).len() as u64, b);
            if n >= 1 {
                assert_eq!(rgs_partitions(n).len() as u64, b);
            }
        }
    }

    #[test]
    fn small_examples() {
        let k = |m: u32| {
            Some(match m.count_ones() {
                1 => 0.7,
                2 => 1.3,
                _ => 0.0,
            })
        };
        let m2 = moments_from_cumulants(2, k).unwrap();
        assert!((m2 - (1.3 + 0.49)).abs() < 1e-15);
        let centered = |m: u32| Some(if m.count_ones() == 1 { 0.0 } else { 2.5 });
        assert_eq!(moments_from_cumulants(3, centered).unwrap(), 2.5 + 3.0 * 0.0);
    }

    #[test]
    fn missing_cumulant_is_reported() {
        let k = |m: u32| if m == 0b11 { None } else { Some(1.0) };
        assert!(matches!(moments_from_cumulants(2, k), Err(Error::Config(_))));
    }

    #[test]
    fn six_set_matches_enumeration() {
        // Pseudo-random real cumulants, compared against the 203-term sum.
        let value = |m: u32| ((m as f64) * 1.618).sin() + 0.1 * m.count_ones() as f64;
        let brute: f64 = rgs_partitions(6)
            .iter()
            .map(|p| p.iter().map(|&b| value(b)).product::<f64>())
            .sum();
        let fast = moments_from_cumulants(6, |m| Some(value(m))).unwrap();
        assert!((brute - fast).abs() < 1e-12 * brute.abs().max(1.0));
    }

    #[test]
    fn inversion_roundtrip() {
        let value = |m: u32| ((m as f64) * 0.77).cos();
        for n in 1..=6 {
            let full = full_mask(n);
            let moment = |s: u32| {
                moments_from_cumulants(s.count_ones() as usize, |sub| {
                    // Map the compressed subset of `s` back onto original labels.
                    let mut orig = 0u32;
                    let mut bit = 0;
                    for i in 0..32 {
                        if s & (1 << i) != 0 {
                            if sub & (1 << bit) != 0 {
                                orig |= 1 << i;
                            }
                            bit += 1;
                        }
                    }
                    Some(value(orig))
                })
                .unwrap()
            };
            let k = cumulant_from_moments(n, moment).unwrap();
            assert!((k - value(full)).abs() < 1e-11, "n = {n}");
        }
    }
}
