use reqrank_core::corpus::synthetic::{separable_corpus, SyntheticSpec};
use reqrank_core::corpus::{sample_negatives, split, SplitSpec};
use reqrank_core::eval::{build_pools, evaluate_run, Averaging, PoolPolicy};
use reqrank_core::rank::{random_rank, Bm25Params};
use reqrank_core::towers::train;
use reqrank_core::{BaseEmbeddings, Bm25Index, DenseIndex, HashEmbedder, RankedList, RelevanceJudgment, TowerSpec, TrainConfig};

const K: [usize; 4] = [1, 2, 3, 4];

#[test]
fn trained_towers_beat_the_baselines_on_separable_data() {
    let spec = SyntheticSpec { requests: 400, ..SyntheticSpec::default() };
    let (corpus, _) = sample_negatives(&separable_corpus(&spec), 1.0, 42).unwrap();
    let splits = split(&corpus, &SplitSpec::default()).unwrap();
    let base = BaseEmbeddings::hashed(&corpus, &HashEmbedder::new(128, 42).unwrap());
    let config = TrainConfig {
        epochs: 4,
        tower: TowerSpec { hidden: vec![64], out_dim: 32, ..TowerSpec::default() },
        ..TrainConfig::default()
    };
    let (model, log) = train(&config, &splits.train, &base, Some(&splits.dev)).unwrap();
    assert_eq!(log.epochs.len(), 4);
    assert!(log.epochs.last().unwrap().dev.is_some());

    let test = &splits.test;
    let pools = build_pools(test, PoolPolicy::Labeled, 42);
    let judgments = RelevanceJudgment::from_corpus(test);
    let catalog: Vec<&str> = corpus.items().map(|i| i.id.as_str()).collect();
    let index = DenseIndex::build(catalog.iter().copied(), model.item_tower(), &base).unwrap();
    let bm25 = Bm25Index::build(corpus.items().map(|i| (i.id.as_str(), i.tokens.as_slice())), Bm25Params::default()).unwrap();

    let mut dense = Vec::new();
    let mut lexical = Vec::new();
    let mut random = Vec::new();
    for pool in &pools {
        let ids: Vec<&str> = pool.items.iter().map(String::as_str).collect();
        let u = model.project_request(base.request(&pool.request_id).unwrap()).unwrap();
        dense.push(index.rank_pool(&pool.request_id, &u, &ids, None).unwrap());
        let req = test.request(&pool.request_id).unwrap();
        lexical.push(bm25.rank_pool(&pool.request_id, &req.tokens, &ids, None).unwrap());
        random.push(random_rank(&pool.request_id, &ids, None, 42).unwrap());
    }
    let report = |r: &[RankedList]| evaluate_run(r, &judgments, &K, Averaging::Macro).unwrap();
    let (w, b, r) = (report(&dense), report(&lexical), report(&random));
    assert!(w.precision(1).unwrap() >= 0.9, "{:?}", w.at_k);
    assert!(w.ndcg >= r.ndcg + 0.15, "{} vs {}", w.ndcg, r.ndcg);
    assert!(w.ndcg >= b.ndcg - 1e-12, "{} vs {}", w.ndcg, b.ndcg);
}

#[test]
fn an_oracle_ranking_scores_one_everywhere() {
    let spec = SyntheticSpec { requests: 120, ..SyntheticSpec::default() };
    let (corpus, _) = sample_negatives(&separable_corpus(&spec), 1.0, 5).unwrap();
    let judgments = RelevanceJudgment::from_corpus(&corpus);
    let rankings: Vec<RankedList> = build_pools(&corpus, PoolPolicy::Catalog, 5)
        .iter()
        .map(|pool| {
            let j = judgments.iter().find(|j| j.request_id == pool.request_id).unwrap();
            let scores = pool.items.iter().map(|i| (i.clone(), if j.is_relevant(i) { 1.0 } else { 0.0 }));
            RankedList::from_scores(pool.request_id.clone(), scores, None).unwrap()
        })
        .collect();
    let report = evaluate_run(&rankings, &judgments, &[1], Averaging::Macro).unwrap();
    assert_eq!(report.precision(1), Some(1.0));
    assert!((report.ndcg - 1.0).abs() < 1e-12);
    // recall@k reaches one once k covers every relevant item
    let most = judgments.iter().map(|j| j.relevant.len()).max().unwrap();
    let wide = evaluate_run(&rankings, &judgments, &[most], Averaging::Micro).unwrap();
    assert!((wide.recall(most).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn the_whole_path_is_reproducible() {
    let run = || {
        let spec = SyntheticSpec { requests: 150, ..SyntheticSpec::default() };
        let (corpus, _) = sample_negatives(&separable_corpus(&spec), 1.0, 9).unwrap();
        let splits = split(&corpus, &SplitSpec::default()).unwrap();
        let base = BaseEmbeddings::hashed(&corpus, &HashEmbedder::new(32, 9).unwrap());
        let config = TrainConfig {
            epochs: 2,
            tower: TowerSpec { hidden: vec![16], out_dim: 8, ..TowerSpec::default() },
            ..TrainConfig::default()
        };
        let (model, log) = train(&config, &splits.train, &base, None).unwrap();
        (model.to_bytes(), log)
    };
    assert_eq!(run(), run());
}
