//! Lexical resources: a hypernym taxonomy with Wu-Palmer similarity and a
//! word-vector store with cosine similarity. These back the soft edge-label
//! comparison in content edit distance and the candidate-sentence scorers in
//! the text extractor.
//!
//! A small taxonomy (colors, garments, vehicles, person and action terms)
//! and a toy vector file ship with the crate so everything runs offline.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("io error reading `{path}`: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("taxonomy line {line}: expected `child<TAB>parent`, got `{text}`")]
    BadTaxonomyLine { line: usize, text: String },
    #[error("taxonomy: duplicate child `{child}`")]
    DuplicateChild { child: String },
    #[error("taxonomy: cycle through `{concept}`")]
    Cycle { concept: String },
    #[error("taxonomy: expected exactly one root, found {found}")]
    MultipleRoots { found: usize },
    #[error("unknown concept `{0}`")]
    UnknownConcept(String),
    #[error("vectors line {line}: {reason}")]
    BadVectorLine { line: usize, reason: String },
    #[error("vectors: header promised {expected} entries, file has {found}")]
    CountMismatch { expected: usize, found: usize },
    #[error("dimension mismatch: {left} vs {right}")]
    DimMismatch { left: usize, right: usize },
    #[error("cosine similarity of a zero vector")]
    ZeroNorm,
}

/// Hypernym tree with depth-cached concepts. `depth(root) = 1`.
#[derive(Debug, Clone)]
pub struct Taxonomy {
    parent: BTreeMap<String, String>,
    root: String,
    depth: BTreeMap<String, u32>,
}

impl Taxonomy {
    /// Parse `child<TAB>parent` lines. Blank lines are ignored.
    pub fn parse(text: &str) -> Result<Self, LexiconError> {
        let mut parent: BTreeMap<String, String> = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            let (child, par) = line.split_once('\t').ok_or(LexiconError::BadTaxonomyLine {
                line: idx + 1,
                text: line.to_string(),
            })?;
            let child = child.trim().to_lowercase();
            let par = par.trim().to_lowercase();
            if child.is_empty() || par.is_empty() {
                return Err(LexiconError::BadTaxonomyLine {
                    line: idx + 1,
                    text: line.to_string(),
                });
            }
            if parent.insert(child.clone(), par).is_some() {
                return Err(LexiconError::DuplicateChild { child });
            }
        }

        // Cycle check before root counting so `red -> red` reports as a cycle.
        for start in parent.keys() {
            let mut seen = vec![start.clone()];
            let mut cursor = start;
            while let Some(next) = parent.get(cursor) {
                if seen.contains(next) {
                    return Err(LexiconError::Cycle {
                        concept: next.clone(),
                    });
                }
                seen.push(next.clone());
                cursor = next;
            }
        }

        let mut roots: Vec<String> = parent
            .values()
            .filter(|p| !parent.contains_key(*p))
            .cloned()
            .collect();
        roots.sort();
        roots.dedup();
        if roots.len() != 1 {
            return Err(LexiconError::MultipleRoots { found: roots.len() });
        }
        let root = roots.pop().unwrap();

        let mut depth: BTreeMap<String, u32> = BTreeMap::new();
        depth.insert(root.clone(), 1);
        for concept in parent.keys() {
            let mut chain = vec![concept.clone()];
            let mut cursor = concept.clone();
            while !depth.contains_key(&cursor) {
                cursor = parent[&cursor].clone();
                chain.push(cursor.clone());
            }
            let mut d = depth[&cursor];
            for node in chain.iter().rev().skip(1) {
                d += 1;
                depth.insert(node.clone(), d);
            }
        }

        Ok(Taxonomy {
            parent,
            root,
            depth,
        })
    }

    pub fn load(path: &Path) -> Result<Self, LexiconError> {
        let text = fs::read_to_string(path).map_err(|source| LexiconError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    /// The taxonomy that ships with the crate.
    pub fn bundled() -> Self {
        Self::parse(include_str!("../data/taxonomy.tsv")).expect("bundled taxonomy is well-formed")
    }

    pub fn root(&self) -> &str {
        &self.root
    }

    pub fn contains(&self, concept: &str) -> bool {
        self.depth.contains_key(concept)
    }

    pub fn depth(&self, concept: &str) -> Option<u32> {
        self.depth.get(concept).copied()
    }

    pub fn concepts(&self) -> impl Iterator<Item = &str> {
        self.depth.keys().map(String::as_str)
    }

    /// Chain from the concept up to the root, self-inclusive.
    pub fn ancestors<'a>(&'a self, concept: &'a str) -> impl Iterator<Item = &'a str> {
        std::iter::successors(self.depth.contains_key(concept).then_some(concept), |c| {
            self.parent.get(*c).map(String::as_str)
        })
    }

    /// Deepest shared ancestor (least common subsumer).
    pub fn lcs<'a>(&'a self, a: &'a str, b: &'a str) -> Option<&'a str> {
        if !self.contains(a) || !self.contains(b) {
            return None;
        }
        let up_a: Vec<&str> = self.ancestors(a).collect();
        self.ancestors(b).find(|c| up_a.contains(c))
    }

    /// Wu-Palmer similarity `2·depth(lcs) / (depth(a) + depth(b))`, in (0, 1].
    pub fn wpdist(&self, a: &str, b: &str) -> Result<f64, LexiconError> {
        let da = self
            .depth(a)
            .ok_or_else(|| LexiconError::UnknownConcept(a.to_string()))?;
        let db = self
            .depth(b)
            .ok_or_else(|| LexiconError::UnknownConcept(b.to_string()))?;
        let lcs = self.lcs(a, b).expect("both concepts known");
        Ok(2.0 * f64::from(self.depth[lcs]) / f64::from(da + db))
    }

    /// Map a surface token to a concept: case-fold, then try naive
    /// singularization (`shirts` -> `shirt`, `dresses` -> `dress`).
    pub fn lookup(&self, token: &str) -> Option<&str> {
        let folded = token.to_lowercase();
        if let Some((key, _)) = self.depth.get_key_value(folded.as_str()) {
            return Some(key);
        }
        if let Some(stem) = folded.strip_suffix("es") {
            if let Some((key, _)) = self.depth.get_key_value(stem) {
                return Some(key);
            }
        }
        if let Some(stem) = folded.strip_suffix('s') {
            if let Some((key, _)) = self.depth.get_key_value(stem) {
                return Some(key);
            }
        }
        None
    }
}

/// Word vectors in the plain text format: a `<count> <dim>` header line,
/// then one `token v1 .. v_dim` row per entry.
#[derive(Debug, Clone)]
pub struct EmbeddingStore {
    dim: usize,
    vectors: BTreeMap<String, Vec<f64>>,
}

impl EmbeddingStore {
    pub fn parse(text: &str) -> Result<Self, LexiconError> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or(LexiconError::BadVectorLine {
            line: 1,
            reason: "empty file".into(),
        })?;
        let mut parts = header.split_whitespace();
        let count: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or(LexiconError::BadVectorLine {
                line: 1,
                reason: "bad count".into(),
            })?;
        let dim: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or(LexiconError::BadVectorLine {
                line: 1,
                reason: "bad dimension".into(),
            })?;

        let mut vectors = BTreeMap::new();
        for (idx, raw) in lines {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            let token = fields.next().unwrap().to_lowercase();
            let values: Result<Vec<f64>, _> = fields.map(str::parse::<f64>).collect();
            let values = values.map_err(|e| LexiconError::BadVectorLine {
                line: idx + 1,
                reason: format!("non-numeric component: {e}"),
            })?;
            if values.len() != dim {
                return Err(LexiconError::BadVectorLine {
                    line: idx + 1,
                    reason: format!("expected {dim} components, got {}", values.len()),
                });
            }
            vectors.insert(token, values);
        }
        if vectors.len() != count {
            return Err(LexiconError::CountMismatch {
                expected: count,
                found: vectors.len(),
            });
        }
        Ok(EmbeddingStore { dim, vectors })
    }

    pub fn load(path: &Path) -> Result<Self, LexiconError> {
        let text = fs::read_to_string(path).map_err(|source| LexiconError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    /// The toy vectors that ship with the crate.
    pub fn bundled() -> Self {
        Self::parse(include_str!("../data/vectors.txt")).expect("bundled vectors are well-formed")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Lookup is case-folded; an absent token is an explicit `None`, never a
    /// zero vector.
    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.vectors.get(&token.to_lowercase()).map(Vec::as_slice)
    }

    /// Multi-token phrases embed as the mean of their known token vectors.
    pub fn phrase(&self, phrase: &str) -> Option<Vec<f64>> {
        let vecs: Vec<&[f64]> = phrase.split_whitespace().filter_map(|t| self.get(t)).collect();
        if vecs.is_empty() {
            return None;
        }
        let mut mean = vec![0.0; self.dim];
        for v in &vecs {
            for (m, x) in mean.iter_mut().zip(v.iter()) {
                *m += x;
            }
        }
        for m in &mut mean {
            *m /= vecs.len() as f64;
        }
        Some(mean)
    }
}

/// `u·v / (‖u‖‖v‖)`, defined for equal-dimension nonzero vectors.
pub fn cosine_sim(u: &[f64], v: &[f64]) -> Result<f64, LexiconError> {
    if u.len() != v.len() {
        return Err(LexiconError::DimMismatch {
            left: u.len(),
            right: v.len(),
        });
    }
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu: f64 = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv: f64 = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        return Err(LexiconError::ZeroNorm);
    }
    Ok(dot / (nu * nv))
}
