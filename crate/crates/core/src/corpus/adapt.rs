use serde::{Deserialize, Serialize};

use super::{Corpus, CorpusError, Interaction, ItemDescription, LabeledPair, RawText, TextRequest};

/// `{"item_id": ..., "review": ...}` line of a review dump.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewRecord {
    pub item_id: String,
    pub review: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdaptReport {
    pub reviews: usize,
    pub pairs: usize,
    pub items_without_description: usize,
    pub reviews_of_unknown_items: usize,
    pub empty_reviews: usize,
}

/// Turns a review dump into a request/item corpus: each review becomes a
/// request (`review-<n>`, n = 1-based position) whose single positive is the
/// reviewed item. Reviews of items missing from the catalog, or whose item
/// has no usable description, are dropped and counted.
pub fn adapt_reviews(reviews: &[ReviewRecord], catalog: &[RawText]) -> Result<(Corpus, AdaptReport), CorpusError> {
    let mut corpus = Corpus::default();
    let mut report = AdaptReport::default();

    for rec in catalog {
        let item = ItemDescription::new(rec.id.clone(), rec.text.clone());
        if item.tokens.is_empty() {
            report.items_without_description += 1;
            continue;
        }
        corpus.insert_item(item)?;
    }

    for (n, rev) in reviews.iter().enumerate() {
        if corpus.item(&rev.item_id).is_none() {
            report.reviews_of_unknown_items += 1;
            continue;
        }
        let request = TextRequest::new(format!("review-{}", n + 1), rev.review.clone());
        if request.tokens.is_empty() {
            report.empty_reviews += 1;
            continue;
        }
        corpus.pairs.push(LabeledPair::new(
            request.id.clone(),
            rev.item_id.clone(),
            Interaction::Try,
        ));
        corpus.insert_request(request)?;
    }

    report.reviews = corpus.request_count();
    report.pairs = corpus.pairs().len();
    Ok((corpus, report))
}
