//! Seeded generator for a separable request/item corpus.
//!
//! Latent categories each own two item-side keywords and two request-side
//! synonyms. Items mention one of their category's keywords; requests mention
//! either the same keywords or, when obfuscated, only the synonyms, so no
//! category word is shared lexically. All items of a request's category are
//! its positives. Colours and a few generic words appear on both sides and
//! act as lexical noise.

use rand::seq::IndexedRandom;
use rand::Rng;

use super::{Corpus, Interaction, ItemDescription, LabeledPair, TextRequest};
use crate::hashing::keyed_rng;

struct Category {
    name: &'static str,
    item_words: [&'static str; 2],
    synonyms: [&'static str; 2],
}

const CATEGORIES: [Category; 8] = [
    Category {
        name: "tops",
        item_words: ["top", "blouse"],
        synonyms: ["tee", "camisole"],
    },
    Category {
        name: "dresses",
        item_words: ["dress", "gown"],
        synonyms: ["frock", "sundress"],
    },
    Category {
        name: "skirts",
        item_words: ["skirt", "miniskirt"],
        synonyms: ["kilt", "sarong"],
    },
    Category {
        name: "jeans",
        item_words: ["jeans", "denim"],
        synonyms: ["dungarees", "selvedge"],
    },
    Category {
        name: "jackets",
        item_words: ["jacket", "blazer"],
        synonyms: ["anorak", "parka"],
    },
    Category {
        name: "footwear",
        item_words: ["sneakers", "boots"],
        synonyms: ["trainers", "loafers"],
    },
    Category {
        name: "bags",
        item_words: ["bag", "tote"],
        synonyms: ["purse", "satchel"],
    },
    Category {
        name: "knitwear",
        item_words: ["sweater", "cardigan"],
        synonyms: ["jumper", "pullover"],
    },
];

const COLOURS: [&str; 10] = [
    "navy", "black", "white", "red", "olive", "beige", "grey", "pink", "blue", "green",
];
const OPENERS: [&str; 6] = [
    "i need",
    "looking for",
    "please send",
    "show me",
    "i would love",
    "can i get",
];
const REQUEST_FILLER: [&str; 14] = [
    "some",
    "nice",
    "comfortable",
    "casual",
    "for",
    "work",
    "weekend",
    "summer",
    "winter",
    "party",
    "office",
    "travel",
    "everyday",
    "please",
];
const MATERIALS: [&str; 7] = ["cotton", "linen", "wool", "leather", "silk", "polyester", "knit"];
const FITS: [&str; 6] = ["relaxed", "slim", "classic", "oversized", "fitted", "casual"];

pub const MAX_CATEGORIES: usize = CATEGORIES.len();

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SyntheticSpec {
    pub categories: usize,
    pub items_per_category: usize,
    pub requests: usize,
    /// Requests use only synonyms of the item-side category words.
    pub obfuscate: bool,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            categories: MAX_CATEGORIES,
            items_per_category: 3,
            requests: 1000,
            obfuscate: false,
            seed: 7,
        }
    }
}

/// Category index of a generated request or item id.
pub fn category_of(id: &str) -> Option<usize> {
    id.split('-').nth(1)?.parse().ok()
}

/// Item-side keywords of category `c`.
pub fn item_keywords(c: usize) -> [&'static str; 2] {
    CATEGORIES[c].item_words
}

/// Request-side synonyms of category `c`.
pub fn synonyms(c: usize) -> [&'static str; 2] {
    CATEGORIES[c].synonyms
}

pub fn category_name(c: usize) -> &'static str {
    CATEGORIES[c].name
}

/// Positives only; run negative sampling on the result for BCE training.
pub fn separable_corpus(spec: &SyntheticSpec) -> Corpus {
    assert!(
        (1..=MAX_CATEGORIES).contains(&spec.categories),
        "categories must be in 1..={MAX_CATEGORIES}"
    );
    let mut rng = keyed_rng(spec.seed, "synthetic-corpus");

    let mut items = Vec::new();
    for (c, cat) in CATEGORIES.iter().enumerate().take(spec.categories) {
        for j in 0..spec.items_per_category {
            let text = format!(
                "women {} {} {} {} fit",
                COLOURS.choose(&mut rng).unwrap(),
                MATERIALS.choose(&mut rng).unwrap(),
                cat.item_words[j % 2],
                FITS.choose(&mut rng).unwrap(),
            );
            items.push(ItemDescription::new(format!("item-{c}-{j}"), text));
        }
    }

    let mut requests = Vec::new();
    let mut pairs = Vec::new();
    for n in 0..spec.requests {
        let c = rng.random_range(0..spec.categories);
        let cat = &CATEGORIES[c];
        let words = if spec.obfuscate { cat.synonyms } else { cat.item_words };
        let mut text = vec![OPENERS.choose(&mut rng).unwrap().to_string()];
        for _ in 0..rng.random_range(1..=3) {
            text.push(REQUEST_FILLER.choose(&mut rng).unwrap().to_string());
        }
        if rng.random_bool(0.5) {
            text.push(COLOURS.choose(&mut rng).unwrap().to_string());
        }
        text.push(words.choose(&mut rng).unwrap().to_string());
        for _ in 0..rng.random_range(0..=2) {
            text.push(REQUEST_FILLER.choose(&mut rng).unwrap().to_string());
        }
        let id = format!("req-{c}-{n:05}");
        for j in 0..spec.items_per_category {
            let interaction = *[Interaction::Try, Interaction::Keep, Interaction::NotTry]
                .choose(&mut rng)
                .unwrap();
            pairs.push(LabeledPair::new(id.clone(), format!("item-{c}-{j}"), interaction));
        }
        requests.push(TextRequest::new(id, text.join(" ")));
    }

    Corpus::new(requests, items, pairs).expect("generated ids are consistent")
}
