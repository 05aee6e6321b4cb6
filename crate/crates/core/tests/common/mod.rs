//! Exhaustive oracles shared by the integration tests, written without
//! reference to the library's search code.
#![allow(dead_code)]

use std::collections::BTreeSet;

use coarray_lab::geometry::{nested, symmetric_from_generator};

pub fn sums_cover(set: &[u32], h: usize) -> bool {
    let mut seen = vec![false; h];
    for &a in set {
        for &b in set {
            let s = (a + b) as usize;
            if s < h {
                seen[s] = true;
            }
        }
    }
    seen.into_iter().all(|x| x)
}

/// Calls `f` on every `k`-subset of `lo..hi`, in lexicographic order.
pub fn for_each_subset(lo: u32, hi: u32, k: usize, f: &mut impl FnMut(&[u32])) {
    fn rec(start: u32, hi: u32, k: usize, cur: &mut Vec<u32>, f: &mut impl FnMut(&[u32])) {
        if cur.len() == k {
            f(cur);
            return;
        }
        let need = (k - cur.len()) as u32;
        for x in start..hi {
            if hi - x < need {
                break;
            }
            cur.push(x);
            rec(x + 1, hi, k, cur, f);
            cur.pop();
        }
    }
    rec(lo, hi, k, &mut Vec::new(), f);
}

/// Every `n`-element set containing 0 with a contiguous sum co-array and the
/// largest possible aperture.
pub fn naive_mra(n: usize) -> (u32, BTreeSet<Vec<u32>>) {
    if n == 1 {
        return (0, BTreeSet::from([vec![0]]));
    }
    let top = (n * (n + 1) / 2 - 1) / 2;
    for a in (1..=top as u32).rev() {
        let mut found = BTreeSet::new();
        for_each_subset(1, a, n - 2, &mut |mid| {
            let mut s = vec![0];
            s.extend_from_slice(mid);
            s.push(a);
            if sums_cover(&s, 2 * a as usize + 1) {
                found.insert(s);
            }
        });
        if !found.is_empty() {
            return (a, found);
        }
    }
    unreachable!("a ULA always qualifies")
}

/// Largest aperture over symmetric arrays `S(nested(n1, n2), ℓ)` with exactly
/// `n` sensors and a contiguous sum co-array.
pub fn best_symmetric_na(n: usize) -> u32 {
    let mut best = 0;
    for n1 in 0..=n {
        for n2 in 0..=n {
            if n1 + n2 == 0 {
                continue;
            }
            let g = nested(n1, n2).unwrap();
            let max_offset = 2 * g.aperture() + 2;
            for offset in 0..=max_offset {
                let s = symmetric_from_generator(&g, offset);
                if s.len() != n || s.aperture() <= best {
                    continue;
                }
                if sums_cover(s.positions(), 2 * s.aperture() as usize + 1) {
                    best = s.aperture();
                }
            }
        }
    }
    best
}
