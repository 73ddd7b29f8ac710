//! Glyph alphabet, metric distance table and glyph-set diameters.
//!
//! A [`Glyph`] is either a printable character or the distinguished gap value
//! `Null` inserted by aligning. The [`DistanceTable`] provides a metric `d`
//! over glyphs; all pruning math downstream requires the metric, so non-metric
//! tables are rejected at load time by an exhaustive triple check.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Deserialize;

use crate::Error;

/// A character from the working charset, or the gap value.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Glyph {
    /// The distinguished gap symbol, distinct from every printable character.
    Null,
    /// A printable character; equality is case-sensitive.
    Ch(char),
}

impl Glyph {
    pub fn is_null(self) -> bool {
        matches!(self, Glyph::Null)
    }

    pub fn ch(self) -> Option<char> {
        match self {
            Glyph::Null => None,
            Glyph::Ch(c) => Some(c),
        }
    }
}

impl fmt::Display for Glyph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Glyph::Null => write!(f, "_"),
            Glyph::Ch(c) => write!(f, "{c}"),
        }
    }
}

/// Glyph type classes used by the default table: digits and letters are each
/// "same type"; everything else falls into `Other`.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum GlyphType {
    Digit,
    Letter,
    Other,
}

pub fn glyph_type(c: char) -> GlyphType {
    if c.is_ascii_digit() {
        GlyphType::Digit
    } else if c.is_alphabetic() {
        GlyphType::Letter
    } else {
        GlyphType::Other
    }
}

/// One defect found by [`DistanceTable::validate_metric`].
#[derive(Clone, Debug)]
pub enum MetricViolation {
    /// d(g,g) != 0
    SelfDistance { glyph: Glyph, value: f64 },
    /// d(a,b) != d(b,a)
    Asymmetry {
        a: Glyph,
        b: Glyph,
        ab: f64,
        ba: f64,
    },
    /// d(a,c) > d(a,b) + d(b,c); slack is the amount of excess.
    Triangle {
        a: Glyph,
        b: Glyph,
        c: Glyph,
        slack: f64,
    },
}

impl fmt::Display for MetricViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricViolation::SelfDistance { glyph, value } => {
                write!(f, "d({glyph},{glyph}) = {value} != 0")
            }
            MetricViolation::Asymmetry { a, b, ab, ba } => {
                write!(f, "d({a},{b}) = {ab} but d({b},{a}) = {ba}")
            }
            MetricViolation::Triangle { a, b, c, slack } => {
                write!(f, "d({a},{c}) > d({a},{b}) + d({b},{c}) by {slack}")
            }
        }
    }
}

const METRIC_EPS: f64 = 1e-9;

/// A metric distance over glyphs, including distances to `Null`.
///
/// The default parameterization is: 0 for identical glyphs, 0.5 for distinct
/// glyphs of the same type, 1.5 across types, and 1.0 between `Null` and any
/// printable glyph. Per-pair overrides take precedence over the class rules.
#[derive(Clone, Debug)]
pub struct DistanceTable {
    charset: BTreeSet<char>,
    identical: f64,
    same_type: f64,
    diff_type: f64,
    gap: f64,
    overrides: BTreeMap<(Glyph, Glyph), f64>,
}

fn ordered(a: Glyph, b: Glyph) -> (Glyph, Glyph) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

impl DistanceTable {
    /// Builds a table without checking the metric properties.
    pub fn new_unchecked(
        charset: impl IntoIterator<Item = char>,
        same_type: f64,
        diff_type: f64,
        gap: f64,
    ) -> Self {
        DistanceTable {
            charset: charset.into_iter().collect(),
            identical: 0.0,
            same_type,
            diff_type,
            gap,
            overrides: BTreeMap::new(),
        }
    }

    /// Builds a table and rejects it unless it is a metric over
    /// charset ∪ {null}.
    pub fn new(
        charset: impl IntoIterator<Item = char>,
        same_type: f64,
        diff_type: f64,
        gap: f64,
    ) -> Result<Self, Error> {
        let table = Self::new_unchecked(charset, same_type, diff_type, gap);
        table.ensure_metric()?;
        Ok(table)
    }

    /// The default table: d(same)=0, d(same type)=0.5, d(diff type)=1.5,
    /// d(x,null)=1.0.
    pub fn default_table(charset: impl IntoIterator<Item = char>) -> Result<Self, Error> {
        Self::new(charset, 0.5, 1.5, 1.0)
    }

    /// Printable ASCII charset, the CLI default.
    pub fn printable_ascii() -> impl Iterator<Item = char> {
        (0x20u8..=0x7e).map(|b| b as char)
    }

    pub fn charset(&self) -> &BTreeSet<char> {
        &self.charset
    }

    pub fn contains(&self, c: char) -> bool {
        self.charset.contains(&c)
    }

    pub fn gap_cost(&self) -> f64 {
        self.gap
    }

    /// Sets a per-pair override. The caller is expected to re-validate.
    pub fn set_override(&mut self, a: Glyph, b: Glyph, value: f64) {
        self.overrides.insert(ordered(a, b), value);
    }

    pub fn distance(&self, a: Glyph, b: Glyph) -> f64 {
        if a == b {
            return self.identical;
        }
        if !self.overrides.is_empty() {
            if let Some(&v) = self.overrides.get(&ordered(a, b)) {
                return v;
            }
        }
        match (a, b) {
            (Glyph::Null, _) | (_, Glyph::Null) => self.gap,
            (Glyph::Ch(x), Glyph::Ch(y)) => {
                if glyph_type(x) == glyph_type(y) {
                    self.same_type
                } else {
                    self.diff_type
                }
            }
        }
    }

    fn glyphs(&self) -> Vec<Glyph> {
        let mut v: Vec<Glyph> = vec![Glyph::Null];
        v.extend(self.charset.iter().map(|&c| Glyph::Ch(c)));
        v
    }

    /// Exhaustive check of zero self-distance, symmetry and all triangle
    /// inequalities over charset ∪ {null}.
    pub fn validate_metric(&self) -> Vec<MetricViolation> {
        let glyphs = self.glyphs();
        let mut violations = Vec::new();
        let n = glyphs.len();
        let mut d = vec![0.0f64; n * n];
        for (i, &a) in glyphs.iter().enumerate() {
            for (j, &b) in glyphs.iter().enumerate() {
                d[i * n + j] = self.distance(a, b);
            }
        }
        for (i, &a) in glyphs.iter().enumerate() {
            if d[i * n + i].abs() > METRIC_EPS {
                violations.push(MetricViolation::SelfDistance {
                    glyph: a,
                    value: d[i * n + i],
                });
            }
            for (j, &b) in glyphs.iter().enumerate().skip(i + 1) {
                if (d[i * n + j] - d[j * n + i]).abs() > METRIC_EPS {
                    violations.push(MetricViolation::Asymmetry {
                        a,
                        b,
                        ab: d[i * n + j],
                        ba: d[j * n + i],
                    });
                }
            }
        }
        for i in 0..n {
            for k in 0..n {
                let dik = d[i * n + k];
                for j in 0..n {
                    let slack = dik - d[i * n + j] - d[j * n + k];
                    if slack > METRIC_EPS {
                        violations.push(MetricViolation::Triangle {
                            a: glyphs[i],
                            b: glyphs[j],
                            c: glyphs[k],
                            slack,
                        });
                    }
                }
            }
        }
        violations
    }

    pub fn ensure_metric(&self) -> Result<(), Error> {
        let violations = self.validate_metric();
        if violations.is_empty() {
            Ok(())
        } else {
            Err(Error::NonMetric {
                count: violations.len(),
                first: violations[0].to_string(),
            })
        }
    }

    /// Loads a table from the key-value config format:
    ///
    /// ```toml
    /// charset = "abc019-_/"          # optional, defaults to printable ASCII
    /// [defaults]
    /// same_type = 0.5
    /// diff_type = 1.5
    /// gap = 1.0
    /// [overrides]                    # per-pair, key is the two characters
    /// "ab" = 0.7
    /// [gap_overrides]                # per-glyph distance to null
    /// "a" = 0.9
    /// ```
    pub fn from_config_str(text: &str) -> Result<Self, Error> {
        #[derive(Deserialize, Default)]
        struct Defaults {
            same_type: Option<f64>,
            diff_type: Option<f64>,
            gap: Option<f64>,
        }
        #[derive(Deserialize)]
        struct Config {
            charset: Option<String>,
            #[serde(default)]
            defaults: Defaults,
            #[serde(default)]
            overrides: BTreeMap<String, f64>,
            #[serde(default)]
            gap_overrides: BTreeMap<String, f64>,
        }
        let cfg: Config = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let charset: Vec<char> = match &cfg.charset {
            Some(s) => s.chars().collect(),
            None => Self::printable_ascii().collect(),
        };
        let mut table = Self::new_unchecked(
            charset,
            cfg.defaults.same_type.unwrap_or(0.5),
            cfg.defaults.diff_type.unwrap_or(1.5),
            cfg.defaults.gap.unwrap_or(1.0),
        );
        for (key, value) in &cfg.overrides {
            let chars: Vec<char> = key.chars().collect();
            if chars.len() != 2 {
                return Err(Error::Config(format!(
                    "override key {key:?} must be exactly two characters"
                )));
            }
            table.set_override(Glyph::Ch(chars[0]), Glyph::Ch(chars[1]), *value);
        }
        for (key, value) in &cfg.gap_overrides {
            let chars: Vec<char> = key.chars().collect();
            if chars.len() != 1 {
                return Err(Error::Config(format!(
                    "gap override key {key:?} must be one character"
                )));
            }
            table.set_override(Glyph::Ch(chars[0]), Glyph::Null, *value);
        }
        table.ensure_metric()?;
        Ok(table)
    }
}

/// A set of glyphs with its diameter cached.
///
/// The diameter is the largest pairwise distance over members; inserting a
/// glyph updates it incrementally as max(old, max distance to the new glyph).
#[derive(Clone, Debug, PartialEq)]
pub struct GlyphSet {
    members: Vec<Glyph>, // sorted, deduplicated
    diameter: f64,
}

impl GlyphSet {
    pub fn empty() -> Self {
        GlyphSet {
            members: Vec::new(),
            diameter: 0.0,
        }
    }

    pub fn singleton(g: Glyph) -> Self {
        GlyphSet {
            members: vec![g],
            diameter: 0.0,
        }
    }

    pub fn from_glyphs(glyphs: impl IntoIterator<Item = Glyph>, d: &DistanceTable) -> Self {
        let mut set = Self::empty();
        for g in glyphs {
            set.insert(g, d);
        }
        set
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[Glyph] {
        &self.members
    }

    pub fn contains(&self, g: Glyph) -> bool {
        self.members.binary_search(&g).is_ok()
    }

    pub fn has_null(&self) -> bool {
        self.members.first() == Some(&Glyph::Null)
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn insert(&mut self, g: Glyph, d: &DistanceTable) {
        if let Err(pos) = self.members.binary_search(&g) {
            let mut max_to_new = 0.0f64;
            for &m in &self.members {
                max_to_new = max_to_new.max(d.distance(m, g));
            }
            self.members.insert(pos, g);
            self.diameter = self.diameter.max(max_to_new);
        }
    }

    pub fn union(&self, other: &GlyphSet, d: &DistanceTable) -> GlyphSet {
        let mut out = self.clone();
        for &g in &other.members {
            out.insert(g, d);
        }
        out
    }

    /// Diameter of `self ∪ other` without materializing the union.
    pub fn union_diameter(&self, other: &GlyphSet, d: &DistanceTable) -> f64 {
        let mut dia = self.diameter.max(other.diameter);
        for &a in &self.members {
            for &b in &other.members {
                dia = dia.max(d.distance(a, b));
            }
        }
        dia
    }

    /// Diameter of `self ∪ {null}`, the gap-step column cost.
    pub fn diameter_with_null(&self, d: &DistanceTable) -> f64 {
        let mut dia = self.diameter;
        for &g in &self.members {
            dia = dia.max(d.distance(g, Glyph::Null));
        }
        dia
    }

    /// Recomputes the diameter from scratch; used by tests to check the cache.
    pub fn recompute_diameter(&self, d: &DistanceTable) -> f64 {
        let mut dia = 0.0f64;
        for (i, &a) in self.members.iter().enumerate() {
            for &b in &self.members[i + 1..] {
                dia = dia.max(d.distance(a, b));
            }
        }
        dia
    }
}

/// Free-function form of the diameter, mirroring D(C).
pub fn diameter(set: &GlyphSet, _d: &DistanceTable) -> f64 {
    set.diameter()
}
