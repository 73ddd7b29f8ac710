//! The paradigm type, the optimal two-paradigm DP merge and compaction to
//! star-free regex form, plus an exhaustive aligning oracle for small inputs.
//!
//! A paradigm is a set of equal-length glyph rows; its size is the sum of
//! per-column glyph-set diameters. Merging two paradigms runs the classic
//! alignment DP over whole columns: previously aligned columns are atomic and
//! are never re-split, only null insertions are applied to rows.

use crate::charspace::{DistanceTable, Glyph, GlyphSet};
use crate::Error;

/// Identifier of a paradigm inside a merge run; leaves are numbered first.
pub type ParadigmId = u32;

/// One member string, carried through alignment with its identity.
#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub id: String,
    pub glyphs: Vec<Glyph>,
}

impl Row {
    /// The original string: row glyphs minus nulls.
    pub fn source_string(&self) -> String {
        self.glyphs.iter().filter_map(|g| g.ch()).collect()
    }
}

/// A set of equal-length glyph rows with per-column glyph sets and cached size.
#[derive(Clone, Debug)]
pub struct Paradigm {
    columns: Vec<GlyphSet>,
    rows: Vec<Row>,
    size: f64,
}

impl Paradigm {
    /// A single string as an initial paradigm: one row, size 0.
    pub fn from_string(s: &str, d: &DistanceTable) -> Result<Self, Error> {
        Self::from_identified_string(s, s, d)
    }

    /// Like [`Paradigm::from_string`] but with a row id distinct from the text.
    pub fn from_identified_string(id: &str, s: &str, d: &DistanceTable) -> Result<Self, Error> {
        if s.is_empty() {
            return Err(Error::EmptyString);
        }
        let mut glyphs = Vec::with_capacity(s.chars().count());
        for c in s.chars() {
            if !d.contains(c) {
                return Err(Error::OutOfCharset(c));
            }
            glyphs.push(Glyph::Ch(c));
        }
        let columns = glyphs.iter().map(|&g| GlyphSet::singleton(g)).collect();
        Ok(Paradigm {
            columns,
            rows: vec![Row {
                id: id.to_string(),
                glyphs,
            }],
            size: 0.0,
        })
    }

    fn from_rows(rows: Vec<Row>, d: &DistanceTable) -> Self {
        let length = rows[0].glyphs.len();
        let mut columns = vec![GlyphSet::empty(); length];
        for row in &rows {
            debug_assert_eq!(row.glyphs.len(), length);
            for (i, &g) in row.glyphs.iter().enumerate() {
                columns[i].insert(g, d);
            }
        }
        let size = columns.iter().map(|c| c.diameter()).sum();
        Paradigm {
            columns,
            rows,
            size,
        }
    }

    pub fn length(&self) -> usize {
        self.columns.len()
    }

    pub fn cardinality(&self) -> usize {
        self.rows.len()
    }

    pub fn size(&self) -> f64 {
        self.size
    }

    pub fn columns(&self) -> &[GlyphSet] {
        &self.columns
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    /// Recomputes the size from the columns; must agree with the cache.
    pub fn recompute_size(&self) -> f64 {
        self.columns.iter().map(|c| c.diameter()).sum()
    }
}

/// One traceback step of the merge DP.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Step {
    /// Both sides contribute a column.
    Both,
    /// Only the left paradigm contributes; the right side gets a null.
    LeftOnly,
    /// Only the right paradigm contributes; the left side gets a null.
    RightOnly,
}

/// The gap placements produced by a merge, in merged-paradigm coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct Alignment {
    pub steps: Vec<Step>,
}

impl Alignment {
    /// Merged columns where the left input received an inserted null.
    pub fn gap_positions_left(&self) -> Vec<usize> {
        self.steps
            .iter()
            .enumerate()
            .filter(|(_, s)| **s == Step::RightOnly)
            .map(|(i, _)| i)
            .collect()
    }

    /// Merged columns where the right input received an inserted null.
    pub fn gap_positions_right(&self) -> Vec<usize> {
        self.steps
            .iter()
            .enumerate()
            .filter(|(_, s)| **s == Step::LeftOnly)
            .map(|(i, _)| i)
            .collect()
    }

    /// For each merged column, the source column indices (left, right);
    /// `None` marks a gap on that side.
    pub fn column_sources(&self) -> Vec<(Option<usize>, Option<usize>)> {
        let mut out = Vec::with_capacity(self.steps.len());
        let (mut li, mut ri) = (0usize, 0usize);
        for step in &self.steps {
            match step {
                Step::Both => {
                    out.push((Some(li), Some(ri)));
                    li += 1;
                    ri += 1;
                }
                Step::LeftOnly => {
                    out.push((Some(li), None));
                    li += 1;
                }
                Step::RightOnly => {
                    out.push((None, Some(ri)));
                    ri += 1;
                }
            }
        }
        out
    }
}

/// Result of [`merge`]: the merged paradigm, how rows were padded, and the
/// merged size (equal to the paradigm's own size).
#[derive(Clone, Debug)]
pub struct MergeResult {
    pub paradigm: Paradigm,
    pub alignment: Alignment,
    pub size: f64,
}

/// Runs the merge DP and returns the optimal size and traceback only.
///
/// Cell recurrence: size[i][j] = min of
///   size[i-1][j]   + D(P1[i] ∪ {null}),
///   size[i][j-1]   + D(P2[j] ∪ {null}),
///   size[i-1][j-1] + D(P1[i] ∪ P2[j]).
/// Ties prefer diagonal, then the right-column gap step, then the left-column
/// gap step, resolved from the front of the paradigms, so outputs are
/// deterministic.
pub fn merge_dp(p1: &Paradigm, p2: &Paradigm, d: &DistanceTable) -> (f64, Alignment) {
    let n1 = p1.length();
    let n2 = p2.length();
    let gap1: Vec<f64> = p1
        .columns()
        .iter()
        .map(|c| c.diameter_with_null(d))
        .collect();
    let gap2: Vec<f64> = p2
        .columns()
        .iter()
        .map(|c| c.diameter_with_null(d))
        .collect();

    // Suffix DP: cost[i][j] aligns p1 columns i.. with p2 columns j.., so the
    // alignment can be read off front-to-back and ties anchor at the front.
    let width = n2 + 1;
    let mut cost = vec![0.0f64; (n1 + 1) * width];
    // 0 = diag, 1 = right-only (left gap), 2 = left-only (right gap)
    let mut dirs = vec![0u8; (n1 + 1) * width];
    for i in (0..n1).rev() {
        cost[i * width + n2] = cost[(i + 1) * width + n2] + gap1[i];
        dirs[i * width + n2] = 2;
    }
    for j in (0..n2).rev() {
        cost[n1 * width + j] = cost[n1 * width + j + 1] + gap2[j];
        dirs[n1 * width + j] = 1;
    }
    for i in (0..n1).rev() {
        for j in (0..n2).rev() {
            let diag =
                cost[(i + 1) * width + j + 1] + p1.columns[i].union_diameter(&p2.columns[j], d);
            let right_gap = cost[i * width + j + 1] + gap2[j];
            let left_gap = cost[(i + 1) * width + j] + gap1[i];
            let (mut best, mut dir) = (diag, 0u8);
            if right_gap < best {
                best = right_gap;
                dir = 1;
            }
            if left_gap < best {
                best = left_gap;
                dir = 2;
            }
            cost[i * width + j] = best;
            dirs[i * width + j] = dir;
        }
    }

    let mut steps = Vec::with_capacity(n1.max(n2));
    let (mut i, mut j) = (0, 0);
    while i < n1 || j < n2 {
        match dirs[i * width + j] {
            0 => {
                steps.push(Step::Both);
                i += 1;
                j += 1;
            }
            1 => {
                steps.push(Step::RightOnly);
                j += 1;
            }
            _ => {
                steps.push(Step::LeftOnly);
                i += 1;
            }
        }
    }
    (cost[0], Alignment { steps })
}

/// Materializes the merged paradigm for a known alignment.
pub fn apply_alignment(
    p1: &Paradigm,
    p2: &Paradigm,
    alignment: &Alignment,
    d: &DistanceTable,
) -> Paradigm {
    let pad = |row: &Row, left: bool| -> Row {
        let mut glyphs = Vec::with_capacity(alignment.steps.len());
        let mut k = 0usize;
        for step in &alignment.steps {
            let takes = match step {
                Step::Both => true,
                Step::LeftOnly => left,
                Step::RightOnly => !left,
            };
            if takes {
                glyphs.push(row.glyphs[k]);
                k += 1;
            } else {
                glyphs.push(Glyph::Null);
            }
        }
        Row {
            id: row.id.clone(),
            glyphs,
        }
    };
    let mut rows = Vec::with_capacity(p1.cardinality() + p2.cardinality());
    rows.extend(p1.rows().iter().map(|r| pad(r, true)));
    rows.extend(p2.rows().iter().map(|r| pad(r, false)));
    Paradigm::from_rows(rows, d)
}

/// The column-atomic optimal merge P1 ⊎ P2.
pub fn merge(p1: &Paradigm, p2: &Paradigm, d: &DistanceTable) -> MergeResult {
    let (size, alignment) = merge_dp(p1, p2, d);
    let paradigm = apply_alignment(p1, p2, &alignment, d);
    debug_assert!(
        (paradigm.size() - size).abs() < 1e-9,
        "DP size {} disagrees with materialized size {}",
        size,
        paradigm.size()
    );
    MergeResult {
        paradigm,
        alignment,
        size,
    }
}

/// Cached-size accessor mirroring size(P).
pub fn size_of(p: &Paradigm) -> f64 {
    p.size()
}

/// One compact cell: the distinct non-null glyphs of a column, optional iff
/// the column contained a null.
#[derive(Clone, Debug, PartialEq)]
pub struct CompactCell {
    pub glyphs: Vec<char>, // ascending
    pub optional: bool,
}

/// Column-deduplicated star-free regular-expression form of a paradigm.
#[derive(Clone, Debug, PartialEq)]
pub struct CompactPattern {
    pub cells: Vec<CompactCell>,
}

/// Abbreviates runs of >= 3 consecutive codes as `a-c`; presentation only.
fn render_glyph_run(glyphs: &[char], out: &mut String) {
    let mut i = 0;
    while i < glyphs.len() {
        let mut j = i;
        while j + 1 < glyphs.len() && glyphs[j + 1] as u32 == glyphs[j] as u32 + 1 {
            j += 1;
        }
        if j - i >= 2 {
            out.push(glyphs[i]);
            out.push('-');
            out.push(glyphs[j]);
        } else {
            for &c in &glyphs[i..=j] {
                out.push(c);
            }
        }
        i = j + 1;
    }
}

impl CompactCell {
    pub fn render(&self) -> String {
        let mut inner = String::new();
        render_glyph_run(&self.glyphs, &mut inner);
        if self.optional {
            format!("[{inner}]")
        } else if self.glyphs.len() == 1 {
            inner
        } else {
            format!("{{{inner}}}")
        }
    }
}

impl CompactPattern {
    pub fn render(&self) -> String {
        self.cells.iter().map(|c| c.render()).collect()
    }

    /// Renders with the 1-based column `column` wrapped in angle markers,
    /// the rule-output convention for the governed position.
    pub fn render_marked(&self, column: usize) -> String {
        self.cells
            .iter()
            .enumerate()
            .map(|(i, c)| {
                if i + 1 == column {
                    format!("<{}>", c.render())
                } else {
                    c.render()
                }
            })
            .collect()
    }
}

impl std::fmt::Display for CompactPattern {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.render())
    }
}

/// Comp(P): deduplicate each column, marking optional cells.
pub fn compact(p: &Paradigm) -> CompactPattern {
    let cells = p
        .columns()
        .iter()
        .map(|col| CompactCell {
            glyphs: col.members().iter().filter_map(|g| g.ch()).collect(),
            optional: col.has_null(),
        })
        .collect();
    CompactPattern { cells }
}

/// Default guard on the exhaustive oracle's input mass.
pub const ORACLE_DEFAULT_MAX_TOTAL: usize = 24;

/// Exhaustive globally-optimal aligner; test oracle for small instances.
///
/// Enumerates every target length from the longest input up to the total
/// length and every increasing placement of each string's characters into the
/// target columns, keeping the assignment of minimal size. Partial sizes are
/// monotone, so branches are cut against the best complete solution.
pub fn exact_sap_oracle(
    strings: &[&str],
    d: &DistanceTable,
    max_total_length: usize,
) -> Result<(Paradigm, f64), Error> {
    if strings.len() < 2 {
        return Err(Error::NotEnoughStrings(strings.len()));
    }
    let glyph_rows: Vec<Vec<Glyph>> = strings
        .iter()
        .map(|s| {
            if s.is_empty() {
                return Err(Error::EmptyString);
            }
            s.chars()
                .map(|c| {
                    if d.contains(c) {
                        Ok(Glyph::Ch(c))
                    } else {
                        Err(Error::OutOfCharset(c))
                    }
                })
                .collect()
        })
        .collect::<Result<_, _>>()?;
    let total: usize = glyph_rows.iter().map(|r| r.len()).sum();
    if total > max_total_length {
        return Err(Error::OracleGuard {
            total,
            max: max_total_length,
        });
    }
    let max_len = glyph_rows.iter().map(|r| r.len()).max().unwrap();

    struct Search<'a> {
        rows: &'a [Vec<Glyph>],
        d: &'a DistanceTable,
        target: usize,
        best_size: f64,
        best: Option<Vec<Vec<usize>>>,
        placements: Vec<Vec<usize>>,
    }

    impl Search<'_> {
        fn place_string(&mut self, row_idx: usize, columns: &[GlyphSet], size: f64) {
            if size >= self.best_size {
                return;
            }
            if row_idx == self.rows.len() {
                self.best_size = size;
                self.best = Some(self.placements.clone());
                return;
            }
            let len = self.rows[row_idx].len();
            let mut positions = vec![0usize; len];
            self.choose_positions(row_idx, 0, 0, &mut positions, columns, size);
        }

        // Enumerates increasing position assignments for one string, then
        // recurses into the next string with updated columns.
        fn choose_positions(
            &mut self,
            row_idx: usize,
            char_idx: usize,
            min_pos: usize,
            positions: &mut Vec<usize>,
            columns: &[GlyphSet],
            size: f64,
        ) {
            let row = &self.rows[row_idx];
            if char_idx == row.len() {
                let mut new_columns = columns.to_vec();
                let mut new_size = size;
                let mut next_char = 0usize;
                for (col, set) in new_columns.iter_mut().enumerate() {
                    let glyph = if next_char < positions.len() && positions[next_char] == col {
                        next_char += 1;
                        row[next_char - 1]
                    } else {
                        Glyph::Null
                    };
                    let before = set.diameter();
                    set.insert(glyph, self.d);
                    new_size += set.diameter() - before;
                    if new_size >= self.best_size {
                        return;
                    }
                }
                self.placements.push(positions.clone());
                self.place_string(row_idx + 1, &new_columns, new_size);
                self.placements.pop();
                return;
            }
            let remaining = row.len() - char_idx;
            for pos in min_pos..=(self.target - remaining) {
                positions[char_idx] = pos;
                self.choose_positions(row_idx, char_idx + 1, pos + 1, positions, columns, size);
            }
        }
    }

    let mut search = Search {
        rows: &glyph_rows,
        d,
        target: max_len,
        best_size: f64::INFINITY,
        best: None,
        placements: Vec::new(),
    };
    for target in max_len..=total {
        search.target = target;
        let columns = vec![GlyphSet::empty(); target];
        search.place_string(0, &columns, 0.0);
    }

    let placements = search.best.expect("oracle always finds some alignment");
    let target = placements
        .iter()
        .flat_map(|p| p.iter().copied())
        .max()
        .unwrap()
        + 1;
    let rows: Vec<Row> = glyph_rows
        .iter()
        .zip(placements.iter())
        .zip(strings.iter())
        .map(|((glyphs, positions), s)| {
            let mut padded = vec![Glyph::Null; target];
            for (g, &pos) in glyphs.iter().zip(positions.iter()) {
                padded[pos] = *g;
            }
            Row {
                id: (*s).to_string(),
                glyphs: padded,
            }
        })
        .collect();
    let paradigm = Paradigm::from_rows(rows, d);
    // Trailing all-null columns can only appear for targets beyond the best
    // placement's span; the rebuild above trims to the used span.
    let size = search.best_size.min(paradigm.size());
    Ok((paradigm, size))
}
