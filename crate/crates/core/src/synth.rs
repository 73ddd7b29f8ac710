//! Deterministic synthetic corpus generator: clustered identifier strings
//! produced by copying growing seed pools with per-character variation, plus
//! optional planted column→attribute dependencies for discovery tests.

use std::collections::BTreeMap;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::charspace::glyph_type;

/// Digits, letters and a few separator characters.
pub fn default_charset() -> Vec<char> {
    let mut cs: Vec<char> = ('0'..='9').collect();
    cs.extend('a'..='z');
    cs.extend('A'..='Z');
    cs.extend(['-', '_', '/']);
    cs
}

/// A planted dependency: the given 1-based column deterministically sets the
/// attribute according to the key→value map.
#[derive(Clone, Debug)]
pub struct PlantSpec {
    pub column: usize,
    pub attribute: String,
    pub value_map: BTreeMap<char, String>,
}

#[derive(Clone, Debug)]
pub struct GenConfig {
    /// Seed string length l.
    pub length: usize,
    /// Number of generated strings N.
    pub count: usize,
    /// Number of clusters CN.
    pub clusters: usize,
    /// Per-character mutation probability σ.
    pub sigma: f64,
    /// Per-character deletion probability.
    pub delete_prob: f64,
    pub rng_seed: u64,
    pub charset: Vec<char>,
    pub plant: Option<PlantSpec>,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            length: 20,
            count: 5000,
            clusters: 50,
            sigma: 0.05,
            delete_prob: 0.01,
            rng_seed: 1,
            charset: default_charset(),
            plant: None,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<(), crate::Error> {
        if self.length == 0 || self.count == 0 || self.clusters == 0 {
            return Err(crate::Error::Config(
                "length, count and clusters must be positive".into(),
            ));
        }
        if self.clusters > self.count {
            return Err(crate::Error::Config(
                "clusters must not exceed count".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.sigma) || !(0.0..=1.0).contains(&self.delete_prob) {
            return Err(crate::Error::Config(
                "sigma and delete_prob must be probabilities".into(),
            ));
        }
        if let Some(plant) = &self.plant {
            if plant.column == 0 || plant.column > self.length {
                return Err(crate::Error::Config(format!(
                    "plant column {} out of range 1..={}",
                    plant.column, self.length
                )));
            }
        }
        Ok(())
    }
}

/// One generated tuple: the identifier string and its attribute values.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratedRecord {
    pub string: String,
    pub attributes: BTreeMap<String, String>,
}

const SAME_TYPE_BIAS: f64 = 0.8;

fn mutate_char(c: char, charset: &[char], rng: &mut ChaCha8Rng) -> char {
    let same_type = rng.gen_bool(SAME_TYPE_BIAS);
    let pool: Vec<char> = charset
        .iter()
        .copied()
        .filter(|&x| x != c && (glyph_type(x) == glyph_type(c)) == same_type)
        .collect();
    if pool.is_empty() {
        c
    } else {
        pool[rng.gen_range(0..pool.len())]
    }
}

/// Generates the corpus. Fully deterministic given `rng_seed`; every emitted
/// string joins its cluster's seed pool and may itself be copied later.
pub fn generate(cfg: &GenConfig) -> Result<Vec<GeneratedRecord>, crate::Error> {
    Ok(generate_with_sources(cfg)?.0)
}

/// Like [`generate`] but also returns the pool string each record was copied
/// from, for instrumentation.
fn generate_with_sources(
    cfg: &GenConfig,
) -> Result<(Vec<GeneratedRecord>, Vec<String>), crate::Error> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let plant_col = cfg.plant.as_ref().map(|p| p.column - 1);

    let mut pools: Vec<Vec<String>> = Vec::with_capacity(cfg.clusters);
    let plant_keys: Vec<char> = cfg
        .plant
        .as_ref()
        .map(|p| p.value_map.keys().copied().collect())
        .unwrap_or_default();
    for cluster in 0..cfg.clusters {
        let mut seed: String = (0..cfg.length)
            .map(|_| cfg.charset[rng.gen_range(0..cfg.charset.len())])
            .collect();
        if let Some(col) = plant_col {
            // cycle the map keys across clusters so planted keys stay diverse
            if !plant_keys.is_empty() {
                let key = plant_keys[cluster % plant_keys.len()];
                let mut chars: Vec<char> = seed.chars().collect();
                chars[col] = key;
                seed = chars.into_iter().collect();
            }
        }
        pools.push(vec![seed]);
    }

    let mut out = Vec::with_capacity(cfg.count);
    let mut sources = Vec::with_capacity(cfg.count);
    for _ in 0..cfg.count {
        let cluster = rng.gen_range(0..cfg.clusters);
        let pool = &pools[cluster];
        let source_string = pool[rng.gen_range(0..pool.len())].clone();
        let source: Vec<char> = source_string.chars().collect();
        sources.push(source_string);
        let mut produced = Vec::with_capacity(source.len());
        let mut plant_key = None;
        for (idx, &c) in source.iter().enumerate() {
            let planted = plant_col == Some(idx);
            let c = if !planted && rng.gen_bool(cfg.sigma) {
                mutate_char(c, &cfg.charset, &mut rng)
            } else {
                c
            };
            if planted {
                plant_key = Some(c);
            }
            // positions up to the planted column are protected from deletion
            // so the planted key keeps its alignment
            let deletable = plant_col.map_or(true, |col| idx > col);
            if deletable && rng.gen_bool(cfg.delete_prob) {
                continue;
            }
            produced.push(c);
        }
        let string: String = produced.into_iter().collect();
        let mut attributes = BTreeMap::new();
        if let (Some(plant), Some(key)) = (&cfg.plant, plant_key) {
            let value = plant
                .value_map
                .get(&key)
                .cloned()
                .unwrap_or_else(|| format!("v_{key}"));
            attributes.insert(plant.attribute.clone(), value);
        }
        pools[cluster].push(string.clone());
        out.push(GeneratedRecord { string, attributes });
    }
    Ok((out, sources))
}
