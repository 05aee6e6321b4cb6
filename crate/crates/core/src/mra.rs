//! Exact search for minimum-redundancy arrays.
//!
//! The fully overlapping problem asks for `n` integers `D ⊂ [0 : a]`,
//! `0, a ∈ D`, whose pairwise sums cover `[0 : 2a]` with the aperture `a` as
//! large as possible (an extremal restricted additive 2-basis). The search is
//! a depth-first branch and bound that places elements alternately from the
//! bottom and from the top of the aperture:
//!
//! * every sum below the next lower element must already be covered, so the
//!   next lower element is at most the smallest uncovered sum;
//! * symmetrically, the next upper element must reach the largest uncovered
//!   sum;
//! * the number of uncovered sums is bounded by the number of new sums the
//!   remaining elements can create;
//! * only the lexicographically smaller member of each mirror pair
//!   `{D, a − D}` is explored.
//!
//! Apertures are tried from the counting upper bound downwards; the first
//! aperture with a solution is optimal.

use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::time::Duration;

use serde::Serialize;
use web_time::Instant;

use crate::bits::{Bits, CAPACITY};
use crate::error::{Error, Result};
use crate::geometry::{symmetric_na_min_redundancy, ActiveArrayPair, ArrayConfig};

/// Largest sensor count the fully overlapping search accepts.
pub const MAX_SEARCH_SENSORS: usize = 22;

/// Limits on the work a search may do before reporting a partial result.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Budget {
    pub max_nodes: u64,
    pub max_time: Option<Duration>,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            max_nodes: 100_000_000,
            max_time: Some(Duration::from_secs(60)),
        }
    }
}

impl Budget {
    pub fn nodes(max_nodes: u64) -> Self {
        Budget {
            max_nodes,
            max_time: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct SearchStats {
    pub nodes: u64,
    pub wall_time_ms: f64,
}

/// Optimal fully overlapping configurations for a sensor count.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MraSolution {
    pub n_sensors: usize,
    pub aperture: usize,
    /// `2·aperture + 1`: every sum in `[0 : coarray_size − 1]` is realized.
    pub coarray_size: usize,
    /// One representative per mirror pair (the lexicographically smaller),
    /// sorted lexicographically.
    pub configs: Vec<ArrayConfig>,
    pub complete: bool,
    /// No configuration has an aperture above this value. Equals `aperture`
    /// when `complete`.
    pub aperture_upper_bound: usize,
    pub stats: SearchStats,
}

impl MraSolution {
    /// All optima including mirror images, sorted.
    pub fn with_mirrors(&self) -> Vec<ArrayConfig> {
        let mut all: Vec<ArrayConfig> = self
            .configs
            .iter()
            .flat_map(|c| [c.clone(), c.mirrored()])
            .collect();
        all.sort();
        all.dedup();
        all
    }
}

struct Tracker {
    nodes: AtomicU64,
    aborted: AtomicBool,
    start: Instant,
    budget: Budget,
}

impl Tracker {
    fn new(budget: Budget) -> Self {
        Tracker {
            nodes: AtomicU64::new(0),
            aborted: AtomicBool::new(false),
            start: Instant::now(),
            budget,
        }
    }

    /// Counts a node; returns false once the budget is gone.
    #[inline]
    fn tick(&self) -> bool {
        if self.aborted.load(Ordering::Relaxed) {
            return false;
        }
        let n = self.nodes.fetch_add(1, Ordering::Relaxed) + 1;
        let mut over = n > self.budget.max_nodes;
        if !over && n % 4096 == 0 {
            if let Some(t) = self.budget.max_time {
                over = self.start.elapsed() > t;
            }
        }
        if over {
            self.aborted.store(true, Ordering::Relaxed);
        }
        !over
    }

    fn aborted(&self) -> bool {
        self.aborted.load(Ordering::Relaxed)
    }

    fn stats(&self) -> SearchStats {
        SearchStats {
            nodes: self.nodes.load(Ordering::Relaxed),
            wall_time_ms: self.start.elapsed().as_secs_f64() * 1e3,
        }
    }
}

/// Counting bound: `n` elements give at most `n(n+1)/2` distinct sums.
pub fn aperture_upper_bound(n: usize) -> usize {
    (n * (n + 1) / 2).saturating_sub(1) / 2
}

#[derive(Clone)]
struct FoState {
    low: Vec<usize>,
    high: Vec<usize>,
    elems: Bits,
    sums: Bits,
    lex_decided: bool,
}

impl FoState {
    fn root(a: usize) -> Self {
        let mut s = FoState {
            low: vec![0],
            high: Vec::new(),
            elems: Bits::empty(),
            sums: Bits::empty(),
            lex_decided: false,
        };
        s.elems.set(0);
        s.sums.set(0);
        s.add(a);
        s.high.push(a);
        s
    }

    #[inline]
    fn add(&mut self, x: usize) {
        self.sums = self.sums.or(self.elems.shl(x));
        self.sums.set(2 * x);
        self.elems.set(x);
    }

    fn config(&self) -> Vec<u32> {
        let mut v: Vec<u32> = self
            .low
            .iter()
            .chain(self.high.iter())
            .map(|&p| p as u32)
            .collect();
        v.sort_unstable();
        v
    }
}

struct FoSearch<'t> {
    n: usize,
    a: usize,
    full: Bits,
    n_full: u32,
    /// Stop after the first solution (existence queries).
    first_only: bool,
    tracker: &'t Tracker,
}

impl FoSearch<'_> {
    fn dfs(&self, st: &mut FoState, out: &mut Vec<Vec<u32>>) {
        if !self.tracker.tick() || (self.first_only && !out.is_empty()) {
            return;
        }
        let m = st.low.len() + st.high.len();
        let r = self.n - m;
        let uncovered = (self.n_full - st.sums.count()) as usize;
        if r == 0 {
            if uncovered == 0 {
                let d = st.config();
                let cfg = ArrayConfig::new(d).expect("search produces normalized sets");
                if st.lex_decided || cfg <= cfg.mirrored() {
                    out.push(cfg.positions().to_vec());
                }
            }
            return;
        }
        if uncovered > r * m + r * (r + 1) / 2 {
            return;
        }
        let lp = *st.low.last().unwrap();
        let uq = *st.high.last().unwrap();
        if uq - lp - 1 < r {
            return;
        }
        let span = 2 * self.a + 1;
        let g_lo = st.sums.first_zero().min(span);
        if g_lo <= lp {
            return;
        }
        let g_hi = st.sums.last_zero_below(span);
        if let Some(g) = g_hi {
            if g >= uq + self.a {
                return;
            }
        }

        if st.low.len() <= st.high.len() {
            let idx = st.low.len();
            let mirror = (!st.lex_decided && idx < st.high.len()).then(|| self.a - st.high[idx]);
            let top = g_lo.min(uq - r);
            for x in lp + 1..=top {
                let mut decided = st.lex_decided;
                if let Some(mv) = mirror {
                    if x > mv {
                        break;
                    }
                    decided = x < mv;
                }
                let saved = (st.elems, st.sums, st.lex_decided);
                st.add(x);
                st.low.push(x);
                st.lex_decided = decided;
                self.dfs(st, out);
                st.low.pop();
                (st.elems, st.sums, st.lex_decided) = saved;
                if self.tracker.aborted() {
                    return;
                }
            }
        } else {
            let idx = st.high.len();
            let low_at = (!st.lex_decided && idx < st.low.len()).then(|| st.low[idx]);
            let bottom = (lp + r).max(g_hi.map_or(0, |g| g.saturating_sub(self.a)));
            for y in (bottom..uq).rev() {
                let mut decided = st.lex_decided;
                if let Some(lv) = low_at {
                    let mv = self.a - y;
                    if lv > mv {
                        continue;
                    }
                    decided = lv < mv;
                }
                let saved = (st.elems, st.sums, st.lex_decided);
                st.add(y);
                st.high.push(y);
                st.lex_decided = decided;
                self.dfs(st, out);
                st.high.pop();
                (st.elems, st.sums, st.lex_decided) = saved;
                if self.tracker.aborted() {
                    return;
                }
            }
        }
    }

    /// All canonical solutions at this aperture, sorted.
    fn run(&self) -> Vec<Vec<u32>> {
        let root = FoState::root(self.a);
        if self.n == 2 {
            let mut out = Vec::new();
            let mut st = root;
            self.dfs(&mut st, &mut out);
            return out;
        }
        // split on the second-lowest element; subtrees are independent
        let g_lo = root.sums.first_zero();
        let top = g_lo.min(self.a - (self.n - 2));
        let branches: Vec<usize> = (1..=top).collect();
        let work = |&x: &usize| {
            let mut st = root.clone();
            st.add(x);
            st.low.push(x);
            // the mirror of `a` is 0, so the first comparable pair is (x, a − high[1])
            let mut out = Vec::new();
            self.dfs(&mut st, &mut out);
            out
        };
        #[cfg(feature = "parallel")]
        let parts: Vec<Vec<Vec<u32>>> = {
            use rayon::prelude::*;
            if self.first_only {
                branches.iter().map(work).collect()
            } else {
                branches.par_iter().map(work).collect()
            }
        };
        #[cfg(not(feature = "parallel"))]
        let parts: Vec<Vec<Vec<u32>>> = branches.iter().map(work).collect();
        let mut all: Vec<Vec<u32>> = parts.into_iter().flatten().collect();
        all.sort();
        all
    }
}

fn fo_search(n: usize, a: usize, first_only: bool, tracker: &Tracker) -> Vec<Vec<u32>> {
    let span = 2 * a + 1;
    let search = FoSearch {
        n,
        a,
        full: Bits::prefix(span),
        n_full: span as u32,
        first_only,
        tracker,
    };
    debug_assert_eq!(search.full.count(), search.n_full);
    search.run()
}

fn check_search_size(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("sensor count must be positive"));
    }
    if n > MAX_SEARCH_SENSORS {
        return Err(Error::invalid(format!(
            "exact search supports at most {MAX_SEARCH_SENSORS} sensors"
        )));
    }
    Ok(())
}

/// All fully overlapping minimum-redundancy arrays with `n` sensors.
///
/// Budget exhaustion returns [`Error::PartialResult`] carrying the best
/// configurations known at that point.
pub fn search_fully_overlapping(n: usize, budget: Budget) -> Result<MraSolution> {
    check_search_size(n)?;
    let tracker = Tracker::new(budget);
    if n == 1 {
        tracker.tick();
        return Ok(MraSolution {
            n_sensors: 1,
            aperture: 0,
            coarray_size: 1,
            configs: vec![ArrayConfig::new(vec![0])?],
            complete: true,
            aperture_upper_bound: 0,
            stats: tracker.stats(),
        });
    }
    let (_, fallback) = symmetric_na_min_redundancy(n)?;
    let lower = fallback.aperture() as usize;
    let upper = aperture_upper_bound(n);
    debug_assert!(2 * upper < CAPACITY);

    for a in (lower..=upper).rev() {
        let found = fo_search(n, a, false, &tracker);
        if tracker.aborted() {
            let (aperture, configs) = if found.is_empty() {
                (lower, vec![fallback.canonical()])
            } else {
                (a, to_configs(found))
            };
            return Err(Error::PartialResult(Box::new(MraSolution {
                n_sensors: n,
                aperture,
                coarray_size: 2 * aperture + 1,
                configs,
                complete: false,
                aperture_upper_bound: a,
                stats: tracker.stats(),
            })));
        }
        if !found.is_empty() {
            return Ok(MraSolution {
                n_sensors: n,
                aperture: a,
                coarray_size: 2 * a + 1,
                configs: to_configs(found),
                complete: true,
                aperture_upper_bound: a,
                stats: tracker.stats(),
            });
        }
    }
    unreachable!("the symmetric nested array is feasible at aperture {lower}")
}

fn to_configs(v: Vec<Vec<u32>>) -> Vec<ArrayConfig> {
    v.into_iter()
        .map(|p| ArrayConfig::new(p).expect("normalized"))
        .collect()
}

/// Outcome of [`certify`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Certificate {
    /// `D + D ⊇ [0 : claimed_h − 1]`.
    pub covers: bool,
    /// Smallest sum in `[0 : claimed_h − 1]` that is not realized.
    pub first_missing: Option<u64>,
    /// Whether no configuration of the same size has a larger aperture;
    /// `None` when not requested or when the budget ran out.
    pub optimal: Option<bool>,
}

/// Verifies that `config + config` covers `[0 : claimed_h − 1]` by direct
/// enumeration and, when a budget is supplied, that no configuration with the
/// same number of sensors has a larger aperture.
pub fn certify(config: &ArrayConfig, claimed_h: usize, optimality: Option<Budget>) -> Certificate {
    let mut seen = vec![false; claimed_h];
    for &p in config.positions() {
        for &q in config.positions() {
            if let Some(s) = seen.get_mut((p + q) as usize) {
                *s = true;
            }
        }
    }
    let first_missing = seen.iter().position(|&s| !s).map(|i| i as u64);
    let covers = first_missing.is_none();
    let optimal = optimality.and_then(|budget| {
        let n = config.len();
        if n > MAX_SEARCH_SENSORS {
            return None;
        }
        if n == 1 {
            return Some(true);
        }
        let tracker = Tracker::new(budget);
        let start = config.aperture() as usize + 1;
        for a in start..=aperture_upper_bound(n) {
            let found = fo_search(n, a, true, &tracker);
            if tracker.aborted() {
                return None;
            }
            if !found.is_empty() {
                return Some(false);
            }
        }
        Some(true)
    });
    Certificate {
        covers,
        first_missing,
        optimal,
    }
}

/// Optimal Tx-Rx pairs for the general overlap-constrained problem.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairSolution {
    pub n_tx: usize,
    pub n_rx: usize,
    pub n_shared: usize,
    /// Size of the contiguous sum co-array `[0 : h − 1]`.
    pub h: usize,
    /// Every optimal `(tx, rx)` assignment, both orientations included.
    #[serde(skip)]
    pub pairs: Vec<ActiveArrayPair>,
    pub complete: bool,
    pub stats: SearchStats,
}

struct GeneralSearch<'t> {
    h: usize,
    tx_only: usize,
    rx_only: usize,
    both: usize,
    tracker: &'t Tracker,
}

#[derive(Clone, Copy)]
struct GeneralState {
    tx: Bits,
    rx: Bits,
    sums: Bits,
    counts: [usize; 3], // tx-only, rx-only, shared
    max_tx: usize,
    max_rx: usize,
}

impl GeneralSearch<'_> {
    fn dfs(&self, p: usize, st: GeneralState, out: &mut Vec<(Bits, Bits)>) {
        if !self.tracker.tick() {
            return;
        }
        let left = [
            self.tx_only - st.counts[0],
            self.rx_only - st.counts[1],
            self.both - st.counts[2],
        ];
        if left == [0, 0, 0] {
            if st.max_tx + st.max_rx + 1 == self.h && st.sums.first_zero() >= self.h {
                out.push((st.tx, st.rx));
            }
            return;
        }
        if p >= self.h || left.iter().sum::<usize>() > self.h - p {
            return;
        }
        // sums below p can no longer be produced
        if st.sums.first_zero().min(self.h) < p {
            return;
        }
        let limit = self.h - 1;
        // skip
        self.dfs(p + 1, st, out);
        if left[0] > 0 && p + st.max_rx <= limit {
            let mut s = st;
            s.sums = s.sums.or(s.rx.shl(p));
            s.tx.set(p);
            s.counts[0] += 1;
            s.max_tx = p;
            self.dfs(p + 1, s, out);
        }
        if left[1] > 0 && p + st.max_tx <= limit {
            let mut s = st;
            s.sums = s.sums.or(s.tx.shl(p));
            s.rx.set(p);
            s.counts[1] += 1;
            s.max_rx = p;
            self.dfs(p + 1, s, out);
        }
        if left[2] > 0 && p + st.max_rx.max(st.max_tx).max(p) <= limit {
            let mut s = st;
            s.tx.set(p);
            s.rx.set(p);
            s.sums = s.sums.or(s.rx.shl(p)).or(s.tx.shl(p));
            s.counts[2] += 1;
            s.max_tx = p;
            s.max_rx = p;
            self.dfs(p + 1, s, out);
        }
    }
}

fn bits_to_config(b: &Bits, len: usize) -> ArrayConfig {
    ArrayConfig::new((0..len).filter(|&i| b.get(i)).map(|i| i as u32).collect())
        .expect("origin is always present")
}

/// Exhaustive search over `|D_tx| = n_tx`, `|D_rx| = n_rx`,
/// `|D_tx ∩ D_rx| = n_shared` for the largest contiguous sum co-array.
pub fn search_general(
    n_tx: usize,
    n_rx: usize,
    n_shared: usize,
    budget: Budget,
) -> Result<PairSolution> {
    if n_tx == 0 || n_rx == 0 {
        return Err(Error::invalid("sensor counts must be positive"));
    }
    if n_shared == 0 || n_shared > n_tx.min(n_rx) {
        return Err(Error::NoSolution(format!(
            "shared sensor count {n_shared} must lie in [1, {}]",
            n_tx.min(n_rx)
        )));
    }
    let upper = n_tx * n_rx - n_shared * (n_shared - 1) / 2;
    if upper > CAPACITY {
        return Err(Error::invalid("general search is limited to small arrays"));
    }
    let tracker = Tracker::new(budget);
    let mut root = GeneralState {
        tx: Bits::empty(),
        rx: Bits::empty(),
        sums: Bits::empty(),
        counts: [0, 0, 1],
        max_tx: 0,
        max_rx: 0,
    };
    root.tx.set(0);
    root.rx.set(0);
    root.sums.set(0);

    for h in (1..=upper).rev() {
        let search = GeneralSearch {
            h,
            tx_only: n_tx - n_shared,
            rx_only: n_rx - n_shared,
            both: n_shared,
            tracker: &tracker,
        };
        let mut out = Vec::new();
        search.dfs(1, root, &mut out);
        let aborted = tracker.aborted();
        if !out.is_empty() || aborted {
            let mut pairs: Vec<ActiveArrayPair> = out
                .iter()
                .map(|(t, r)| ActiveArrayPair::new(bits_to_config(t, h), bits_to_config(r, h)))
                .collect();
            pairs.sort_by(|x, y| (x.tx(), x.rx()).cmp(&(y.tx(), y.rx())));
            let sol = PairSolution {
                n_tx,
                n_rx,
                n_shared,
                h: if out.is_empty() { 0 } else { h },
                pairs,
                complete: !aborted,
                stats: tracker.stats(),
            };
            return if aborted {
                Err(Error::PartialPairResult(Box::new(sol)))
            } else {
                Ok(sol)
            };
        }
    }
    Err(Error::NoSolution(format!(
        "no ({n_tx}, {n_rx}, {n_shared}) configuration has a contiguous sum co-array"
    )))
}
