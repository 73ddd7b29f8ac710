//! Command implementations behind the `pdalign` binary: CSV corpus loading,
//! engine selection, the line-oriented tree dump format, rule listing, corpus
//! generation and the benchmark table.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::Serialize;

use crate::charspace::{DistanceTable, Glyph};
use crate::discovery::{
    discover, render_dependency, Dependency, DiscoveryOpts, Prune2Finding, Record, RecordTable,
    Thresholds,
};
use crate::engine::{
    pairwise_merge_baseline, pruning_merge, single_merge, EngineOutput, MergeTree, MergeTreeNode,
    PruningOpts, RunMetrics,
};
use crate::paradigm::compact;
use crate::synth::{generate, GenConfig};
use crate::Error;

/// How to read a corpus CSV: which column holds the identifier strings and
/// which cell values count as missing.
#[derive(Clone, Debug)]
pub struct CorpusSpec {
    pub input: PathBuf,
    /// Identifier column; defaults to the first column.
    pub id_column: Option<String>,
    pub null_markers: Vec<String>,
}

impl CorpusSpec {
    pub fn new(input: impl Into<PathBuf>) -> Self {
        CorpusSpec {
            input: input.into(),
            id_column: None,
            null_markers: vec![String::new(), "NULL".to_string()],
        }
    }
}

/// A loaded corpus: distinct identifier strings in first-seen order plus the
/// full record table (duplicates keep their multiplicity there).
#[derive(Clone, Debug)]
pub struct Corpus {
    pub strings: Vec<String>,
    pub records: RecordTable,
    pub warnings: Vec<String>,
}

pub fn load_corpus(spec: &CorpusSpec, d: &DistanceTable) -> Result<Corpus, Error> {
    let mut reader = csv::Reader::from_path(&spec.input)?;
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if headers.is_empty() {
        return Err(Error::Input("CSV has no header row".into()));
    }
    let id_idx = match &spec.id_column {
        Some(name) => headers.iter().position(|h| h == name).ok_or_else(|| {
            Error::Input(format!(
                "id column {name:?} not found; headers are {headers:?}"
            ))
        })?,
        None => 0,
    };

    let mut strings = Vec::new();
    let mut seen = std::collections::HashSet::new();
    let mut duplicates = 0usize;
    let mut records = Vec::new();
    for (row_no, result) in reader.records().enumerate() {
        let row = result?;
        let line = row_no + 2; // 1-based, after the header
        let id = row
            .get(id_idx)
            .ok_or_else(|| Error::Input(format!("line {line}: missing id field")))?
            .trim()
            .to_string();
        if id.is_empty() {
            return Err(Error::Input(format!("line {line}: empty id")));
        }
        if let Some(bad) = id.chars().find(|&c| !d.contains(c)) {
            return Err(Error::Input(format!(
                "line {line}: id {id:?} contains {bad:?}, which is outside the configured charset"
            )));
        }
        if seen.insert(id.clone()) {
            strings.push(id.clone());
        } else {
            duplicates += 1;
        }
        let mut attributes = BTreeMap::new();
        for (i, header) in headers.iter().enumerate() {
            if i == id_idx {
                continue;
            }
            let raw = row.get(i).unwrap_or("").trim();
            let value = if spec.null_markers.iter().any(|m| m == raw) {
                None
            } else {
                Some(raw.to_string())
            };
            attributes.insert(header.clone(), value);
        }
        records.push(Record { id, attributes });
    }

    let mut warnings = Vec::new();
    if duplicates > 0 {
        warnings.push(format!(
            "{duplicates} duplicate id row(s): each id aligned once, multiplicity kept for discovery"
        ));
    }
    Ok(Corpus {
        strings,
        records: RecordTable::new(records),
        warnings,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Engine {
    Single,
    Baseline,
    PruningPlus,
    PruningMinus,
}

impl FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "single" => Ok(Engine::Single),
            "baseline" => Ok(Engine::Baseline),
            "pruning+" => Ok(Engine::PruningPlus),
            "pruning-" | "pruning\u{2212}" => Ok(Engine::PruningMinus),
            _ => Err(Error::Input(format!(
                "unknown engine {s:?}; expected single, baseline, pruning+ or pruning-"
            ))),
        }
    }
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Engine::Single => "single",
            Engine::Baseline => "baseline",
            Engine::PruningPlus => "pruning+",
            Engine::PruningMinus => "pruning-",
        })
    }
}

/// Runs the selected engine. The single engine yields no merge tree, so its
/// result is wrapped as a one-node tree holding the final paradigm.
pub fn run_engine(
    engine: Engine,
    strings: &[&str],
    d: &DistanceTable,
    trace: bool,
) -> Result<EngineOutput, Error> {
    match engine {
        Engine::Single => {
            let (paradigm, metrics) = single_merge(strings, d)?;
            Ok(EngineOutput {
                tree: MergeTree {
                    nodes: vec![MergeTreeNode {
                        id: 0,
                        paradigm,
                        children: None,
                        alignment: None,
                    }],
                    root: 0,
                },
                metrics,
                trace: Vec::new(),
            })
        }
        Engine::Baseline => pairwise_merge_baseline(strings, d, trace),
        Engine::PruningPlus => pruning_merge(
            strings,
            d,
            PruningOpts {
                commit_bounds: true,
                trace,
            },
        ),
        Engine::PruningMinus => pruning_merge(
            strings,
            d,
            PruningOpts {
                commit_bounds: false,
                trace,
            },
        ),
    }
}

fn escape_glyphs(glyphs: &[Glyph]) -> String {
    let mut out = String::new();
    for g in glyphs {
        match g {
            Glyph::Null => out.push('_'),
            Glyph::Ch('_') => out.push_str("\\_"),
            Glyph::Ch('\\') => out.push_str("\\\\"),
            Glyph::Ch(c) => out.push(*c),
        }
    }
    out
}

fn unescape_glyphs(text: &str) -> Result<Vec<Glyph>, Error> {
    let mut glyphs = Vec::new();
    let mut chars = text.chars();
    while let Some(c) = chars.next() {
        match c {
            '\\' => match chars.next() {
                Some(e) => glyphs.push(Glyph::Ch(e)),
                None => return Err(Error::Input("dangling escape in row".into())),
            },
            '_' => glyphs.push(Glyph::Null),
            other => glyphs.push(Glyph::Ch(other)),
        }
    }
    Ok(glyphs)
}

/// Line-oriented merge tree serialization: per node a header line, the compact
/// pattern and one row line per member. Nulls render as `_`; literal
/// underscores and backslashes are backslash-escaped.
pub fn render_tree_dump(tree: &MergeTree) -> String {
    let mut out = format!("root {}\n", tree.root);
    for node in &tree.nodes {
        match node.children {
            Some((a, b)) => out.push_str(&format!(
                "node {} children {} {} size {}\n",
                node.id,
                a,
                b,
                node.paradigm.size()
            )),
            None => out.push_str(&format!(
                "node {} leaf size {}\n",
                node.id,
                node.paradigm.size()
            )),
        }
        out.push_str(&format!("pattern {}\n", compact(&node.paradigm).render()));
        for row in node.paradigm.rows() {
            out.push_str(&format!("row {}\n", escape_glyphs(&row.glyphs)));
        }
        out.push('\n');
    }
    out
}

/// One deserialized tree dump node.
#[derive(Clone, Debug, PartialEq)]
pub struct DumpNode {
    pub id: u32,
    pub children: Option<(u32, u32)>,
    pub size: f64,
    pub pattern: String,
    pub rows: Vec<Vec<Glyph>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TreeDump {
    pub root: u32,
    pub nodes: Vec<DumpNode>,
}

impl TreeDump {
    /// The source strings of a node: its rows with nulls dropped.
    pub fn node_strings(&self, id: u32) -> Vec<String> {
        self.nodes[id as usize]
            .rows
            .iter()
            .map(|row| row.iter().filter_map(|g| g.ch()).collect())
            .collect()
    }
}

pub fn parse_tree_dump(text: &str) -> Result<TreeDump, Error> {
    let bad = |line: &str| Error::Input(format!("malformed tree dump line: {line:?}"));
    let mut lines = text.lines().peekable();
    let root_line = lines.next().ok_or_else(|| bad(""))?;
    let root = root_line
        .strip_prefix("root ")
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| bad(root_line))?;

    let mut nodes = Vec::new();
    while let Some(line) = lines.next() {
        if line.is_empty() {
            continue;
        }
        let rest = line.strip_prefix("node ").ok_or_else(|| bad(line))?;
        let tokens: Vec<&str> = rest.split(' ').collect();
        let (id, children, size) = match tokens.as_slice() {
            [id, "leaf", "size", size] => (id.parse(), None, size.parse()),
            [id, "children", a, b, "size", size] => {
                let pair = a
                    .parse()
                    .and_then(|a| b.parse().map(|b| (a, b)))
                    .map_err(|_| bad(line))?;
                (id.parse(), Some(pair), size.parse())
            }
            _ => return Err(bad(line)),
        };
        let id = id.map_err(|_| bad(line))?;
        let size = size.map_err(|_| bad(line))?;
        let pattern_line = lines.next().ok_or_else(|| bad(line))?;
        let pattern = pattern_line
            .strip_prefix("pattern ")
            .ok_or_else(|| bad(pattern_line))?
            .to_string();
        let mut rows = Vec::new();
        while let Some(row_line) = lines.peek() {
            match row_line.strip_prefix("row ") {
                Some(row) => {
                    rows.push(unescape_glyphs(row)?);
                    lines.next();
                }
                None => break,
            }
        }
        if rows.is_empty() {
            return Err(Error::Input(format!("node {id} has no rows")));
        }
        nodes.push(DumpNode {
            id,
            children,
            size,
            pattern,
            rows,
        });
    }
    if nodes.is_empty() {
        return Err(Error::Input("tree dump has no nodes".into()));
    }
    Ok(TreeDump { root, nodes })
}

pub struct AlignResult {
    pub output: EngineOutput,
    pub dump: String,
}

pub fn cmd_align(
    corpus: &Corpus,
    engine: Engine,
    d: &DistanceTable,
    trace: bool,
) -> Result<AlignResult, Error> {
    let strings: Vec<&str> = corpus.strings.iter().map(String::as_str).collect();
    let output = run_engine(engine, &strings, d, trace)?;
    let dump = render_tree_dump(&output.tree);
    Ok(AlignResult { output, dump })
}

pub struct DiscoverResult {
    pub dependencies: Vec<Dependency>,
    pub findings: Vec<Prune2Finding>,
    pub rules_text: String,
    pub metrics: RunMetrics,
}

/// Aligns the corpus and lists the passing rules sorted by support then
/// confidence, both descending; ties break on (node, column, attribute).
pub fn cmd_discover(
    corpus: &Corpus,
    engine: Engine,
    d: &DistanceTable,
    thresholds: &Thresholds,
    opts: &DiscoveryOpts,
) -> Result<DiscoverResult, Error> {
    let strings: Vec<&str> = corpus.strings.iter().map(String::as_str).collect();
    let output = run_engine(engine, &strings, d, false)?;
    let outcome = discover(&output.tree, &corpus.records, thresholds, opts)?;
    let mut dependencies = outcome.dependencies;
    dependencies.sort_by(|a, b| {
        b.support
            .cmp(&a.support)
            .then(b.confidence.partial_cmp(&a.confidence).unwrap())
            .then(a.paradigm.cmp(&b.paradigm))
            .then(a.column.cmp(&b.column))
            .then(a.attribute.cmp(&b.attribute))
    });
    let rules_text = dependencies
        .iter()
        .map(|dep| render_dependency(dep, &output.tree))
        .collect::<Vec<_>>()
        .join("\n");
    Ok(DiscoverResult {
        dependencies,
        findings: outcome.findings,
        rules_text,
        metrics: output.metrics,
    })
}

/// Generates a synthetic corpus and renders it as CSV with an `id` column
/// followed by the attribute columns in name order.
pub fn cmd_gen(cfg: &GenConfig) -> Result<String, Error> {
    let records = generate(cfg)?;
    let attributes: std::collections::BTreeSet<&str> = records
        .iter()
        .flat_map(|r| r.attributes.keys().map(String::as_str))
        .collect();
    let mut writer = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["id"];
    header.extend(attributes.iter().copied());
    writer.write_record(&header)?;
    for record in &records {
        let mut row = vec![record.string.as_str()];
        for attr in &attributes {
            row.push(record.attributes.get(*attr).map_or("", String::as_str));
        }
        writer.write_record(&row)?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| Error::Input(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Input(e.to_string()))
}

#[derive(Clone, Debug, Serialize)]
pub struct BenchRow {
    pub count: usize,
    pub clusters: usize,
    pub sigma: f64,
    pub engine: Engine,
    pub dp_merges: u64,
    pub refine_calls: u64,
    pub refine_iterations: BTreeMap<u32, u64>,
    pub wall_secs: f64,
}

pub struct BenchResult {
    pub rows: Vec<BenchRow>,
    pub table: String,
}

/// Runs every engine on every generated configuration and tabulates the
/// counters.
pub fn cmd_bench(
    configs: &[GenConfig],
    engines: &[Engine],
    d: &DistanceTable,
) -> Result<BenchResult, Error> {
    let mut rows = Vec::new();
    for cfg in configs {
        let records = generate(cfg)?;
        let mut seen = std::collections::HashSet::new();
        let strings: Vec<&str> = records
            .iter()
            .map(|r| r.string.as_str())
            .filter(|s| seen.insert(*s))
            .collect();
        for &engine in engines {
            let output = run_engine(engine, &strings, d, false)?;
            rows.push(BenchRow {
                count: cfg.count,
                clusters: cfg.clusters,
                sigma: cfg.sigma,
                engine,
                dp_merges: output.metrics.dp_merges,
                refine_calls: output.metrics.refine_calls,
                refine_iterations: output.metrics.refine_iterations,
                wall_secs: output.metrics.wall_secs,
            });
        }
    }
    let mut table = format!(
        "{:>8} {:>8} {:>8} {:<10} {:>10} {:>12} {:>10}\n",
        "count", "clusters", "sigma", "engine", "dp_merges", "refine_calls", "wall_secs"
    );
    for row in &rows {
        table.push_str(&format!(
            "{:>8} {:>8} {:>8} {:<10} {:>10} {:>12} {:>10.3}\n",
            row.count,
            row.clusters,
            row.sigma,
            row.engine.to_string(),
            row.dp_merges,
            row.refine_calls,
            row.wall_secs
        ));
    }
    Ok(BenchResult { rows, table })
}
