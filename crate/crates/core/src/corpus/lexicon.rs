use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use super::{tokenize, CorpusError, TextRequest};

/// Prefix of the marker tokens that carry tagged categories into embedders.
pub const CATEGORY_MARKER: &str = "#";

const DEFAULT_LEXICON: &str = include_str!("../../data/default_lexicon.json");

/// Category name to keyword set. Keywords are lowercase single tokens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CategoryLexicon {
    categories: BTreeMap<String, BTreeSet<String>>,
    by_keyword: HashMap<String, Vec<String>>,
}

impl CategoryLexicon {
    pub fn new(categories: BTreeMap<String, BTreeSet<String>>) -> Result<Self, CorpusError> {
        let mut by_keyword: HashMap<String, Vec<String>> = HashMap::new();
        for (cat, keywords) in &categories {
            if cat.is_empty() {
                return Err(CorpusError::Lexicon("empty category name".into()));
            }
            for kw in keywords {
                if tokenize(kw) != [kw.as_str()] {
                    return Err(CorpusError::Lexicon(format!(
                        "keyword `{kw}` of {cat} is not a single lowercase token"
                    )));
                }
                by_keyword.entry(kw.clone()).or_default().push(cat.clone());
            }
        }
        Ok(Self { categories, by_keyword })
    }

    /// Parses a `{"CATEGORY": ["kw1", ...]}` map.
    pub fn from_json(text: &str) -> Result<Self, CorpusError> {
        let raw: BTreeMap<String, BTreeSet<String>> =
            serde_json::from_str(text).map_err(|e| CorpusError::Lexicon(e.to_string()))?;
        Self::new(raw)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, CorpusError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| CorpusError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    /// The bundled garment lexicon.
    pub fn garments() -> Self {
        Self::from_json(DEFAULT_LEXICON).expect("bundled lexicon is valid")
    }

    pub fn categories(&self) -> impl Iterator<Item = (&str, &BTreeSet<String>)> {
        self.categories.iter().map(|(c, k)| (c.as_str(), k))
    }

    pub fn len(&self) -> usize {
        self.categories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.categories.is_empty()
    }

    pub fn categories_for<'a>(&self, tokens: impl IntoIterator<Item = &'a String>) -> BTreeSet<String> {
        tokens
            .into_iter()
            .filter_map(|t| self.by_keyword.get(t))
            .flatten()
            .cloned()
            .collect()
    }
}

/// Sets `request.categories` to every category with a keyword among the tokens.
pub fn tag_categories(mut request: TextRequest, lexicon: &CategoryLexicon) -> TextRequest {
    request.categories = lexicon.categories_for(&request.tokens);
    request
}
