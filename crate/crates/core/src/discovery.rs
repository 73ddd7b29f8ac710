//! Paradigm-dependency discovery over a merge tree: claim construction, the
//! four quality measures (support, confidence, diversity, inner support) and
//! the two discovery prunings.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use serde::Serialize;

use crate::charspace::Glyph;
use crate::engine::MergeTree;
use crate::paradigm::{compact, Paradigm, ParadigmId};
use crate::Error;

/// One tuple of the record table; attribute values are opaque tokens and may
/// be missing.
#[derive(Clone, Debug)]
pub struct Record {
    pub id: String,
    pub attributes: BTreeMap<String, Option<String>>,
}

/// Records keyed by id; duplicate ids keep their multiplicity.
#[derive(Clone, Debug, Default)]
pub struct RecordTable {
    by_id: HashMap<String, Vec<Record>>,
    attributes: BTreeSet<String>,
}

impl RecordTable {
    pub fn new(records: impl IntoIterator<Item = Record>) -> Self {
        let mut table = RecordTable::default();
        for record in records {
            table.attributes.extend(record.attributes.keys().cloned());
            table
                .by_id
                .entry(record.id.clone())
                .or_default()
                .push(record);
        }
        table
    }

    pub fn attributes(&self) -> &BTreeSet<String> {
        &self.attributes
    }

    pub fn records_for(&self, id: &str) -> Option<&[Record]> {
        self.by_id.get(id).map(|v| v.as_slice())
    }
}

/// A key-value pair claimed by one tuple: the glyph aligned at the governed
/// column and the tuple's attribute value. A null key marks a gap.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Claim {
    pub key: Glyph,
    pub value: String,
}

/// A discovered rule (P, i) → A with its measure values.
#[derive(Clone, Debug, Serialize)]
pub struct Dependency {
    pub paradigm: ParadigmId,
    /// 1-based column index.
    pub column: usize,
    pub attribute: String,
    pub support: usize,
    pub confidence: f64,
    pub diversity: usize,
    pub inner_support: usize,
}

/// The four measure thresholds; support, diversity and inner support compare
/// with >=, as does confidence.
#[derive(Clone, Copy, Debug)]
pub struct Thresholds {
    pub support_min: usize,
    pub confidence_min: f64,
    pub diversity_min: usize,
    pub inner_support_min: usize,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            support_min: 10,
            confidence_min: 0.9,
            diversity_min: 5,
            inner_support_min: 5,
        }
    }
}

/// One claim per paradigm row whose record has a non-null value for `attr`;
/// rows with several records of the same id claim once per record.
pub fn build_claims(
    p: &Paradigm,
    column: usize,
    attr: &str,
    records: &RecordTable,
) -> Result<Vec<Claim>, Error> {
    if column == 0 || column > p.length() {
        return Err(Error::ColumnOutOfRange {
            column,
            length: p.length(),
        });
    }
    let mut claims = Vec::new();
    for row in p.rows() {
        let recs = records
            .records_for(&row.id)
            .ok_or_else(|| Error::UnmappedRow(row.id.clone()))?;
        let key = row.glyphs[column - 1];
        for rec in recs {
            if let Some(Some(value)) = rec.attributes.get(attr) {
                claims.push(Claim {
                    key,
                    value: value.clone(),
                });
            }
        }
    }
    Ok(claims)
}

fn per_key_counts(claims: &[Claim]) -> BTreeMap<Glyph, BTreeMap<&str, usize>> {
    let mut counts: BTreeMap<Glyph, BTreeMap<&str, usize>> = BTreeMap::new();
    for claim in claims {
        *counts
            .entry(claim.key)
            .or_default()
            .entry(claim.value.as_str())
            .or_insert(0) += 1;
    }
    counts
}

/// Σ over distinct keys of the count of that key's most frequent value.
pub fn support(claims: &[Claim]) -> usize {
    per_key_counts(claims)
        .values()
        .map(|values| values.values().copied().max().unwrap_or(0))
        .sum()
}

/// support / |claims|; 0 for empty claims.
pub fn confidence(claims: &[Claim]) -> f64 {
    if claims.is_empty() {
        0.0
    } else {
        support(claims) as f64 / claims.len() as f64
    }
}

/// Number of distinct attribute values among the claims.
pub fn diversity(claims: &[Claim]) -> usize {
    claims
        .iter()
        .map(|c| c.value.as_str())
        .collect::<HashSet<_>>()
        .len()
}

/// Largest per-key majority count; computed on the same support-maximizing
/// subset, since both measures are maximized together.
pub fn inner_support(claims: &[Claim]) -> usize {
    per_key_counts(claims)
        .values()
        .map(|values| values.values().copied().max().unwrap_or(0))
        .max()
        .unwrap_or(0)
}

/// A cell that pruning 2 skipped even though it passes the confidence
/// threshold; logged by validation mode against the claim under test.
#[derive(Clone, Debug, Serialize)]
pub struct Prune2Finding {
    pub paradigm: ParadigmId,
    pub column: usize,
    pub attribute: String,
    pub confidence: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct DiscoveryOpts {
    /// Skip (P,i,A) when both child counterpart cells were rejected for
    /// confidence (pruning 2).
    pub prune_by_children: bool,
    /// Cross-check every skipped cell exhaustively.
    pub validate_prune2: bool,
    /// Treat a gap key as an ordinary key; a gap can be informative.
    pub include_null_keys: bool,
}

impl Default for DiscoveryOpts {
    fn default() -> Self {
        DiscoveryOpts {
            prune_by_children: true,
            validate_prune2: false,
            include_null_keys: true,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct DiscoveryOutcome {
    pub dependencies: Vec<Dependency>,
    pub findings: Vec<Prune2Finding>,
    pub cells_evaluated: u64,
    pub cells_skipped: u64,
}

/// Evaluates every (tree node, column, attribute) cell against the record
/// table and returns the dependencies passing all four thresholds, sorted by
/// (node id, column, attribute).
pub fn discover(
    tree: &MergeTree,
    records: &RecordTable,
    thresholds: &Thresholds,
    opts: &DiscoveryOpts,
) -> Result<DiscoveryOutcome, Error> {
    let mut outcome = DiscoveryOutcome::default();
    // cells rejected for low confidence, consulted by child-based pruning
    let mut rejected: HashSet<(ParadigmId, usize, &str)> = HashSet::new();

    // nodes are appended children-first, so ascending id is topological
    for node in &tree.nodes {
        let p = &node.paradigm;
        // pruning 1: support cannot exceed card(P)
        if p.cardinality() <= thresholds.support_min {
            continue;
        }
        let sources = node
            .alignment
            .as_ref()
            .map(|a| a.column_sources())
            .unwrap_or_default();
        for column in 1..=p.length() {
            for attr in records.attributes() {
                let skip = if opts.prune_by_children && node.children.is_some() {
                    let (left, right) = node.children.unwrap();
                    match sources[column - 1] {
                        (Some(li), Some(ri)) => {
                            rejected.contains(&(left, li + 1, attr.as_str()))
                                && rejected.contains(&(right, ri + 1, attr.as_str()))
                        }
                        _ => false,
                    }
                } else {
                    false
                };
                if skip && !opts.validate_prune2 {
                    outcome.cells_skipped += 1;
                    continue;
                }
                let mut claims = build_claims(p, column, attr, records)?;
                if !opts.include_null_keys {
                    claims.retain(|c| !c.key.is_null());
                }
                outcome.cells_evaluated += 1;
                let sup = support(&claims);
                let conf = confidence(&claims);
                if skip {
                    outcome.cells_skipped += 1;
                    if conf >= thresholds.confidence_min {
                        outcome.findings.push(Prune2Finding {
                            paradigm: node.id,
                            column,
                            attribute: attr.clone(),
                            confidence: conf,
                        });
                    }
                    continue;
                }
                if conf < thresholds.confidence_min {
                    rejected.insert((node.id, column, attr.as_str()));
                }
                if sup >= thresholds.support_min
                    && conf >= thresholds.confidence_min
                    && diversity(&claims) >= thresholds.diversity_min
                    && inner_support(&claims) >= thresholds.inner_support_min
                {
                    outcome.dependencies.push(Dependency {
                        paradigm: node.id,
                        column,
                        attribute: attr.clone(),
                        support: sup,
                        confidence: conf,
                        diversity: diversity(&claims),
                        inner_support: inner_support(&claims),
                    });
                }
            }
        }
    }
    Ok(outcome)
}

/// Rule line rendering: the compact pattern with the governed column wrapped
/// in angle markers, then the attribute and the four measures.
pub fn render_dependency(dep: &Dependency, tree: &MergeTree) -> String {
    let pattern = compact(&tree.node(dep.paradigm).paradigm);
    format!(
        "{} -> {}  support={} confidence={:.4} diversity={} inner_support={}",
        pattern.render_marked(dep.column),
        dep.attribute,
        dep.support,
        dep.confidence,
        dep.diversity,
        dep.inner_support
    )
}
