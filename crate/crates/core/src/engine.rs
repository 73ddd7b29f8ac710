//! Merge schedulers: single merge, the pairwise baseline and the pruning
//! engines, plus the merge tree that records every intermediate paradigm for
//! dependency discovery.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use serde::Serialize;

use crate::bounds::{
    identify_critical, on_merge_commit, pair_key, refine, select_pivot, IntervalTable, PairKey,
};
use crate::charspace::DistanceTable;
use crate::paradigm::{apply_alignment, merge_dp, Alignment, Paradigm, ParadigmId};
use crate::Error;

/// One node of the merge tree; leaves carry input strings, internal nodes the
/// merged paradigms together with the alignment that produced them.
#[derive(Clone, Debug)]
pub struct MergeTreeNode {
    pub id: ParadigmId,
    pub paradigm: Paradigm,
    pub children: Option<(ParadigmId, ParadigmId)>,
    pub alignment: Option<Alignment>,
}

/// Binary merge tree: one leaf per input string, leaf count − 1 internal nodes.
#[derive(Clone, Debug)]
pub struct MergeTree {
    pub nodes: Vec<MergeTreeNode>,
    pub root: ParadigmId,
}

impl MergeTree {
    pub fn node(&self, id: ParadigmId) -> &MergeTreeNode {
        &self.nodes[id as usize]
    }

    pub fn root_paradigm(&self) -> &Paradigm {
        &self.node(self.root).paradigm
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.children.is_none()).count()
    }

    pub fn internal_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.children.is_some()).count()
    }
}

/// Per-run instrumentation counters.
#[derive(Clone, Debug, Default, Serialize)]
pub struct RunMetrics {
    /// DP merge evaluations performed (committed merges reuse cached results).
    pub dp_merges: u64,
    /// Calls to the single-pivot-star refinement.
    pub refine_calls: u64,
    /// Refine iterations needed per outer merge, as count → frequency.
    pub refine_iterations: BTreeMap<u32, u64>,
    /// Intervals excluded by lb > ub_min across outer iterations.
    pub intervals_pruned: u64,
    /// Times the zero-progress safety valve fell back to exact evaluation.
    pub safety_valve_fallbacks: u64,
    /// Wall-clock seconds for the run.
    pub wall_secs: f64,
}

impl RunMetrics {
    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("dp_merges={}\n", self.dp_merges));
        out.push_str(&format!("refine_calls={}\n", self.refine_calls));
        out.push_str(&format!("intervals_pruned={}\n", self.intervals_pruned));
        out.push_str(&format!(
            "safety_valve_fallbacks={}\n",
            self.safety_valve_fallbacks
        ));
        for (iters, freq) in &self.refine_iterations {
            out.push_str(&format!("refine_iterations[{iters}]={freq}\n"));
        }
        out.push_str(&format!("wall_secs={:.6}\n", self.wall_secs));
        out
    }
}

/// One committed merge, recorded when tracing is enabled.
#[derive(Clone, Debug)]
pub struct CommitRecord {
    pub left: ParadigmId,
    pub right: ParadigmId,
    pub size: f64,
    pub refine_iterations: u32,
    /// Live paradigm ids immediately before the commit.
    pub live_before: Vec<ParadigmId>,
}

#[derive(Clone, Debug)]
pub struct EngineOutput {
    pub tree: MergeTree,
    pub metrics: RunMetrics,
    pub trace: Vec<CommitRecord>,
}

fn leaves_from_strings(strings: &[&str], d: &DistanceTable) -> Result<Vec<MergeTreeNode>, Error> {
    if strings.len() < 2 {
        return Err(Error::NotEnoughStrings(strings.len()));
    }
    strings
        .iter()
        .enumerate()
        .map(|(i, s)| {
            Ok(MergeTreeNode {
                id: i as ParadigmId,
                paradigm: Paradigm::from_string(s, d)?,
                children: None,
                alignment: None,
            })
        })
        .collect()
}

/// Greedy single-paradigm growth: seed with the globally minimal pair, then
/// absorb the remaining string of minimal merge size one at a time.
pub fn single_merge(strings: &[&str], d: &DistanceTable) -> Result<(Paradigm, RunMetrics), Error> {
    let start = Instant::now();
    let nodes = leaves_from_strings(strings, d)?;
    let mut metrics = RunMetrics::default();

    let mut best: Option<(f64, usize, usize, Alignment)> = None;
    for i in 0..nodes.len() {
        for j in i + 1..nodes.len() {
            let (size, alignment) = merge_dp(&nodes[i].paradigm, &nodes[j].paradigm, d);
            metrics.dp_merges += 1;
            if best.as_ref().map_or(true, |(s, ..)| size < *s) {
                best = Some((size, i, j, alignment));
            }
        }
    }
    let (_, i, j, alignment) = best.expect("at least one pair");
    let mut current = apply_alignment(&nodes[i].paradigm, &nodes[j].paradigm, &alignment, d);
    let mut remaining: Vec<usize> = (0..nodes.len()).filter(|&k| k != i && k != j).collect();

    while !remaining.is_empty() {
        let mut best: Option<(f64, usize, Alignment)> = None;
        for (slot, &k) in remaining.iter().enumerate() {
            let (size, alignment) = merge_dp(&current, &nodes[k].paradigm, d);
            metrics.dp_merges += 1;
            if best.as_ref().map_or(true, |(s, ..)| size < *s) {
                best = Some((size, slot, alignment));
            }
        }
        let (_, slot, alignment) = best.unwrap();
        let k = remaining.remove(slot);
        current = apply_alignment(&current, &nodes[k].paradigm, &alignment, d);
    }
    metrics.wall_secs = start.elapsed().as_secs_f64();
    Ok((current, metrics))
}

/// Exact hierarchical agglomeration: at every step the pair with minimal
/// merge size is committed (ties to the smallest pair key). Pair sizes are
/// cached, so each live pair is DP-evaluated exactly once and the total DP
/// count is (N−1)².
pub fn pairwise_merge_baseline(
    strings: &[&str],
    d: &DistanceTable,
    trace: bool,
) -> Result<EngineOutput, Error> {
    let start = Instant::now();
    let mut nodes = leaves_from_strings(strings, d)?;
    let mut metrics = RunMetrics::default();
    let mut records = Vec::new();

    let mut live: BTreeSet<ParadigmId> = (0..nodes.len() as ParadigmId).collect();
    let mut cache: BTreeMap<PairKey, (f64, Alignment)> = BTreeMap::new();

    let live_vec: Vec<ParadigmId> = live.iter().copied().collect();
    for (i, &a) in live_vec.iter().enumerate() {
        for &b in &live_vec[i + 1..] {
            let (size, alignment) =
                merge_dp(&nodes[a as usize].paradigm, &nodes[b as usize].paradigm, d);
            metrics.dp_merges += 1;
            cache.insert(pair_key(a, b), (size, alignment));
        }
    }

    while live.len() > 1 {
        let (key, size) = cache
            .iter()
            .min_by(|(ka, (sa, _)), (kb, (sb, _))| sa.partial_cmp(sb).unwrap().then(ka.cmp(kb)))
            .map(|(k, (s, _))| (*k, *s))
            .expect("live pairs remain");
        let (a, b) = key;
        let alignment = cache.get(&key).unwrap().1.clone();
        if trace {
            records.push(CommitRecord {
                left: a,
                right: b,
                size,
                refine_iterations: 0,
                live_before: live.iter().copied().collect(),
            });
        }
        let merged = apply_alignment(
            &nodes[a as usize].paradigm,
            &nodes[b as usize].paradigm,
            &alignment,
            d,
        );
        let new_id = nodes.len() as ParadigmId;
        nodes.push(MergeTreeNode {
            id: new_id,
            paradigm: merged,
            children: Some((a, b)),
            alignment: Some(alignment),
        });
        live.remove(&a);
        live.remove(&b);
        cache.retain(|&(x, y), _| x != a && x != b && y != a && y != b);
        for &other in &live {
            // evaluate in key order so the cached alignment matches the
            // (left, right) orientation used at commit time
            let (x, y) = pair_key(new_id, other);
            let (size, alignment) =
                merge_dp(&nodes[x as usize].paradigm, &nodes[y as usize].paradigm, d);
            metrics.dp_merges += 1;
            cache.insert((x, y), (size, alignment));
        }
        live.insert(new_id);
    }

    metrics.wall_secs = start.elapsed().as_secs_f64();
    let root = *live.iter().next().unwrap();
    Ok(EngineOutput {
        tree: MergeTree { nodes, root },
        metrics,
        trace: records,
    })
}

/// Options for [`pruning_merge`].
#[derive(Clone, Copy, Debug)]
pub struct PruningOpts {
    /// Initialize fresh intervals from the commit-time bounds (Pruning+);
    /// false resets them to [0, +∞] (Pruning−).
    pub commit_bounds: bool,
    /// Record a commit trace.
    pub trace: bool,
}

impl Default for PruningOpts {
    fn default() -> Self {
        PruningOpts {
            commit_bounds: true,
            trace: false,
        }
    }
}

/// Where in the run an inspection hook fires.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HookEvent {
    AfterRefine,
    AfterCommit,
}

/// Pruning-based scheduler (independency pruning always on).
pub fn pruning_merge(
    strings: &[&str],
    d: &DistanceTable,
    opts: PruningOpts,
) -> Result<EngineOutput, Error> {
    pruning_merge_with_hook(strings, d, opts, |_, _, _, _| {})
}

/// [`pruning_merge`] with an inspection hook invoked after every refinement
/// and every commit; used by instrumented soundness checks.
pub fn pruning_merge_with_hook<F>(
    strings: &[&str],
    d: &DistanceTable,
    opts: PruningOpts,
    mut hook: F,
) -> Result<EngineOutput, Error>
where
    F: FnMut(HookEvent, &IntervalTable, &[ParadigmId], &[MergeTreeNode]),
{
    let start = Instant::now();
    let mut nodes = leaves_from_strings(strings, d)?;
    let mut metrics = RunMetrics::default();
    let mut records = Vec::new();

    let mut live: BTreeSet<ParadigmId> = (0..nodes.len() as ParadigmId).collect();
    let ids: Vec<ParadigmId> = live.iter().copied().collect();
    let mut table = IntervalTable::init_intervals(&ids);
    // Exact sizes and alignments are cached permanently per pair, so repeated
    // refines never recompute a DP.
    let mut cache: BTreeMap<PairKey, (f64, Alignment)> = BTreeMap::new();

    while live.len() > 1 {
        let mut iterations = 0u32;
        let (commit_key, commit_size) = loop {
            let cr = identify_critical(&table, true);
            metrics.intervals_pruned += (table.len() - cr.len()) as u64;
            if cr.len() == 1 {
                break (cr.ub_min_pair, None);
            }
            let all_exact = cr
                .intervals
                .iter()
                .all(|&(a, b)| table.get(a, b).unwrap().is_exact());
            if all_exact {
                // ub_min is global, so the minimal-ub interval is the minimal
                // exact size among the critical candidates.
                break (cr.ub_min_pair, Some(cr.ub_min));
            }
            let pivot = select_pivot(&cr, &table);
            let merges = {
                let nodes_ref = &nodes;
                let dp = &mut metrics.dp_merges;
                let cache_ref = &mut cache;
                refine(&cr, pivot, &mut table, &mut |a, b| {
                    cached_size(nodes_ref, d, cache_ref, dp, a, b)
                })
            };
            metrics.refine_calls += 1;
            iterations += 1;
            let live_ids: Vec<ParadigmId> = live.iter().copied().collect();
            hook(HookEvent::AfterRefine, &table, &live_ids, &nodes);
            if merges == 0 {
                // Stalled: the star is already exact but non-exact critical
                // intervals remain. Evaluate them all and let the next pass
                // pick the minimum.
                metrics.safety_valve_fallbacks += 1;
                for &(a, b) in &cr.intervals {
                    if !table.get(a, b).unwrap().is_exact() {
                        let size = cached_size(&nodes, d, &mut cache, &mut metrics.dp_merges, a, b);
                        table.get_mut(a, b).unwrap().collapse(size);
                    }
                }
            }
        };

        let (a, b) = commit_key;
        let (size, alignment) = match cache.get(&commit_key) {
            Some((s, al)) => (*s, al.clone()),
            None => {
                let (s, al) = merge_dp(&nodes[a as usize].paradigm, &nodes[b as usize].paradigm, d);
                metrics.dp_merges += 1;
                let iv = table.get(a, b).unwrap();
                assert!(
                    s >= iv.lb() - 1e-9 && s <= iv.ub() + 1e-9,
                    "committed size {s} escapes interval [{}, {}]",
                    iv.lb(),
                    iv.ub()
                );
                cache.insert(commit_key, (s, al.clone()));
                (s, al)
            }
        };
        if let Some(expected) = commit_size {
            debug_assert!((size - expected).abs() < 1e-9);
        }
        *metrics.refine_iterations.entry(iterations).or_insert(0) += 1;

        if opts.trace {
            records.push(CommitRecord {
                left: a,
                right: b,
                size,
                refine_iterations: iterations,
                live_before: live.iter().copied().collect(),
            });
        }

        let merged = apply_alignment(
            &nodes[a as usize].paradigm,
            &nodes[b as usize].paradigm,
            &alignment,
            d,
        );
        let new_id = nodes.len() as ParadigmId;
        nodes.push(MergeTreeNode {
            id: new_id,
            paradigm: merged,
            children: Some((a, b)),
            alignment: Some(alignment),
        });
        live.remove(&a);
        live.remove(&b);
        live.insert(new_id);
        let live_ids: Vec<ParadigmId> = live.iter().copied().collect();
        on_merge_commit(
            new_id,
            (a, b),
            size,
            &mut table,
            &live_ids,
            opts.commit_bounds,
        );
        hook(HookEvent::AfterCommit, &table, &live_ids, &nodes);
    }

    metrics.wall_secs = start.elapsed().as_secs_f64();
    let root = *live.iter().next().unwrap();
    Ok(EngineOutput {
        tree: MergeTree { nodes, root },
        metrics,
        trace: records,
    })
}

fn cached_size(
    nodes: &[MergeTreeNode],
    d: &DistanceTable,
    cache: &mut BTreeMap<PairKey, (f64, Alignment)>,
    dp_merges: &mut u64,
    a: ParadigmId,
    b: ParadigmId,
) -> f64 {
    let key = pair_key(a, b);
    if let Some((size, _)) = cache.get(&key) {
        return *size;
    }
    // evaluate in key order so the cached alignment matches commit-time use
    let (x, y) = key;
    let (size, alignment) = merge_dp(&nodes[x as usize].paradigm, &nodes[y as usize].paradigm, d);
    *dp_merges += 1;
    cache.insert(key, (size, alignment));
    size
}

/// Checks that every committed pair was locally minimal at commit time:
/// size(P1 ⊎ P2) ≤ size(P1 ⊎ P') and ≤ size(P2 ⊎ P') over all live P'.
///
/// `exact_size` must compute the true merge size for two node ids.
pub fn verify_local_minimality(
    trace: &[CommitRecord],
    mut exact_size: impl FnMut(ParadigmId, ParadigmId) -> f64,
) -> bool {
    for record in trace {
        for &other in &record.live_before {
            if other == record.left || other == record.right {
                continue;
            }
            if exact_size(record.left, other) < record.size - 1e-9
                || exact_size(record.right, other) < record.size - 1e-9
            {
                return false;
            }
        }
    }
    true
}
