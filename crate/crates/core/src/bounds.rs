//! Interval bookkeeping for pair merge sizes: critical-set identification,
//! single-pivot-star refinement and pivot scoring.
//!
//! Each live paradigm pair carries a bracket [lb, ub] on its exact merge size.
//! The lower bound never decreases and the upper bound never increases over an
//! interval's lifetime; collapsing sets both to the exactly evaluated size.

use std::collections::{BTreeMap, BTreeSet};

use crate::paradigm::ParadigmId;

const EPS: f64 = 1e-9;

/// A [lb, ub] bracket on size(P1 ⊎ P2), collapsible to an exact point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundInterval {
    lb: f64,
    ub: f64,
    exact: bool,
}

impl BoundInterval {
    pub fn unbounded() -> Self {
        BoundInterval {
            lb: 0.0,
            ub: f64::INFINITY,
            exact: false,
        }
    }

    pub fn new(lb: f64, ub: f64) -> Self {
        assert!(lb <= ub + EPS, "interval [{lb}, {ub}] is inverted");
        if (ub - lb).abs() <= EPS && ub.is_finite() {
            BoundInterval {
                lb,
                ub: lb,
                exact: true,
            }
        } else {
            BoundInterval {
                lb,
                ub,
                exact: false,
            }
        }
    }

    pub fn exact_at(size: f64) -> Self {
        BoundInterval {
            lb: size,
            ub: size,
            exact: true,
        }
    }

    pub fn lb(&self) -> f64 {
        self.lb
    }

    pub fn ub(&self) -> f64 {
        self.ub
    }

    pub fn is_exact(&self) -> bool {
        self.exact
    }

    pub fn width(&self) -> f64 {
        self.ub - self.lb
    }

    /// Raises the lower bound; ignores values that do not tighten.
    pub fn tighten_lb(&mut self, v: f64) -> bool {
        if self.exact || v <= self.lb {
            return false;
        }
        assert!(
            v <= self.ub + EPS,
            "lower bound {v} would cross upper bound {}",
            self.ub
        );
        self.lb = v.min(self.ub);
        false_to_exact(self);
        true
    }

    /// Lowers the upper bound; ignores values that do not tighten.
    pub fn tighten_ub(&mut self, v: f64) -> bool {
        if self.exact || v >= self.ub {
            return false;
        }
        assert!(
            v >= self.lb - EPS,
            "upper bound {v} would cross lower bound {}",
            self.lb
        );
        self.ub = v.max(self.lb);
        false_to_exact(self);
        true
    }

    /// Pins the interval to the exactly evaluated size.
    pub fn collapse(&mut self, size: f64) {
        assert!(
            size >= self.lb - EPS && size <= self.ub + EPS,
            "exact size {size} falls outside [{}, {}]",
            self.lb,
            self.ub
        );
        self.lb = size;
        self.ub = size;
        self.exact = true;
    }
}

fn false_to_exact(iv: &mut BoundInterval) {
    if (iv.ub - iv.lb).abs() <= EPS && iv.ub.is_finite() {
        iv.ub = iv.lb;
        iv.exact = true;
    }
}

pub type PairKey = (ParadigmId, ParadigmId);

pub fn pair_key(a: ParadigmId, b: ParadigmId) -> PairKey {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// One interval per unordered live-paradigm pair.
#[derive(Clone, Debug, Default)]
pub struct IntervalTable {
    pairs: BTreeMap<PairKey, BoundInterval>,
}

impl IntervalTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Every pair of the given paradigms mapped to [0, +∞].
    pub fn init_intervals(paradigms: &[ParadigmId]) -> Self {
        let mut pairs = BTreeMap::new();
        for (i, &a) in paradigms.iter().enumerate() {
            for &b in &paradigms[i + 1..] {
                pairs.insert(pair_key(a, b), BoundInterval::unbounded());
            }
        }
        IntervalTable { pairs }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn get(&self, a: ParadigmId, b: ParadigmId) -> Option<&BoundInterval> {
        self.pairs.get(&pair_key(a, b))
    }

    pub fn get_mut(&mut self, a: ParadigmId, b: ParadigmId) -> Option<&mut BoundInterval> {
        self.pairs.get_mut(&pair_key(a, b))
    }

    pub fn insert(&mut self, a: ParadigmId, b: ParadigmId, interval: BoundInterval) {
        self.pairs.insert(pair_key(a, b), interval);
    }

    /// Drops every entry involving a retired paradigm.
    pub fn remove_paradigm(&mut self, id: ParadigmId) {
        self.pairs.retain(|&(a, b), _| a != id && b != id);
    }

    pub fn iter(&self) -> impl Iterator<Item = (&PairKey, &BoundInterval)> {
        self.pairs.iter()
    }
}

/// The candidate intervals that still might hold the minimal merge size.
#[derive(Clone, Debug)]
pub struct CriticalSet {
    pub intervals: Vec<PairKey>, // sorted
    pub involved_paradigms: BTreeSet<ParadigmId>,
    pub ub_min: f64,
    pub ub_min_pair: PairKey,
}

impl CriticalSet {
    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }
}

/// Identifies the critical set.
///
/// ub_min is taken over all live intervals (ties to the lexicographically
/// smallest pair key). Without independency pruning the set contains every
/// interval with lb <= ub_min; with it, membership is further restricted to
/// intervals sharing a paradigm with the minimal-upper-bound interval.
pub fn identify_critical(table: &IntervalTable, independency: bool) -> CriticalSet {
    assert!(!table.is_empty(), "identify_critical on empty table");
    let (mut ub_min_pair, mut ub_min) = ((0, 0), f64::INFINITY);
    let mut seen_any = false;
    for (&key, iv) in table.iter() {
        if !seen_any || iv.ub() < ub_min {
            ub_min = iv.ub();
            ub_min_pair = key;
            seen_any = true;
        }
    }
    let mut intervals = Vec::new();
    let mut involved = BTreeSet::new();
    for (&key, iv) in table.iter() {
        if iv.lb() > ub_min + EPS {
            continue;
        }
        if independency && key != ub_min_pair {
            let shares = key.0 == ub_min_pair.0
                || key.0 == ub_min_pair.1
                || key.1 == ub_min_pair.0
                || key.1 == ub_min_pair.1;
            if !shares {
                continue;
            }
        }
        intervals.push(key);
        involved.insert(key.0);
        involved.insert(key.1);
    }
    CriticalSet {
        intervals,
        involved_paradigms: involved,
        ub_min,
        ub_min_pair,
    }
}

/// Sum of widths of critical intervals touching `p`; +∞ widths saturate.
pub fn pivot_score(p: ParadigmId, cr: &CriticalSet, table: &IntervalTable) -> f64 {
    let mut score = 0.0f64;
    for &(a, b) in &cr.intervals {
        if a == p || b == p {
            score += table.get(a, b).expect("critical pair in table").width();
        }
    }
    score
}

/// argmax of the pivot score over involved paradigms; ties to the smallest id.
pub fn select_pivot(cr: &CriticalSet, table: &IntervalTable) -> ParadigmId {
    let mut best: Option<(ParadigmId, f64)> = None;
    for &p in &cr.involved_paradigms {
        let score = pivot_score(p, cr, table);
        match best {
            Some((_, s)) if score <= s => {}
            _ => best = Some((p, score)),
        }
    }
    best.expect("critical set has involved paradigms").0
}

/// Single-pivot-star refinement.
///
/// Exactly evaluates size(pivot ⊎ P') for every other involved paradigm
/// (skipping already-exact entries), then tightens every remaining involved
/// pair with |s1 − s2| / s1 + s2. Returns the number of exact merges
/// performed; at most |P(CR)| − 1.
pub fn refine(
    cr: &CriticalSet,
    pivot: ParadigmId,
    table: &mut IntervalTable,
    merge_size: &mut dyn FnMut(ParadigmId, ParadigmId) -> f64,
) -> usize {
    assert!(cr.involved_paradigms.contains(&pivot));
    let others: Vec<ParadigmId> = cr
        .involved_paradigms
        .iter()
        .copied()
        .filter(|&p| p != pivot)
        .collect();
    let mut star: BTreeMap<ParadigmId, f64> = BTreeMap::new();
    let mut merges = 0usize;
    for &p in &others {
        let iv = table
            .get_mut(pivot, p)
            .expect("involved pair exists in table");
        if iv.is_exact() {
            star.insert(p, iv.lb());
        } else {
            let size = merge_size(pivot, p);
            iv.collapse(size);
            merges += 1;
            star.insert(p, size);
        }
    }
    for (i, &a) in others.iter().enumerate() {
        for &b in &others[i + 1..] {
            let (s1, s2) = (star[&a], star[&b]);
            if let Some(iv) = table.get_mut(a, b) {
                iv.tighten_lb((s1 - s2).abs());
                iv.tighten_ub(s1 + s2);
            }
        }
    }
    merges
}

/// Bound initialization for a freshly committed merge P_new = P1 ⊎ P2.
///
/// With `use_bounds` (the Pruning+ variant), each live P3 gets
/// lb = max(s12, lb(P1,P3), lb(P2,P3)) and
/// ub = min(ub(P1,P3)+s12, ub(P2,P3)+s12); without it (Pruning−) the fresh
/// interval is [0, +∞]. Entries involving P1 and P2 are removed.
pub fn on_merge_commit(
    new_id: ParadigmId,
    retired: (ParadigmId, ParadigmId),
    s12: f64,
    table: &mut IntervalTable,
    live: &[ParadigmId],
    use_bounds: bool,
) {
    let (p1, p2) = retired;
    let mut fresh = Vec::new();
    for &p3 in live {
        if p3 == new_id || p3 == p1 || p3 == p2 {
            continue;
        }
        let interval = if use_bounds {
            let i13 = table
                .get(p1, p3)
                .copied()
                .unwrap_or(BoundInterval::unbounded());
            let i23 = table
                .get(p2, p3)
                .copied()
                .unwrap_or(BoundInterval::unbounded());
            let lb = s12.max(i13.lb()).max(i23.lb());
            let ub = (i13.ub() + s12).min(i23.ub() + s12);
            BoundInterval::new(lb, ub)
        } else {
            BoundInterval::unbounded()
        };
        fresh.push((p3, interval));
    }
    table.remove_paradigm(p1);
    table.remove_paradigm(p2);
    for (p3, interval) in fresh {
        table.insert(new_id, p3, interval);
    }
}
