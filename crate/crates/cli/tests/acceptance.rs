//! Acceptance suite: one PASS/FAIL line per criterion. Runs without the
//! libtest harness so the lines show up in plain `cargo test` output.

mod common;

use std::collections::BTreeSet;
use std::path::Path;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::Rng;
use reqrank::pipeline;
use reqrank::PipelineConfig;
use reqrank_core::corpus::synthetic::SyntheticSpec;
use reqrank_core::eval::{aggregate_likert, evaluate_run, likert_value, ndcg, precision_at_k, recall_at_k, Averaging};
use reqrank_core::hashing::keyed_rng;
use reqrank_core::rank::{random_rank, Bm25Index, Bm25Params};
use reqrank_core::towers::{
    batch_loss, contrastive_loss, cosine_embedding_loss, cosine_similarity, info_nce, loss_and_grad, Activation, Batch,
    Example, Objective, ObjectiveConfig, Tower,
};
use reqrank_core::{Label, RankedList, RelevanceJudgment, TowerSpec, TwoTower};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(start: Instant, limit: Duration, what: &str) -> Result<(), String> {
    let t = start.elapsed();
    ensure(t < limit, || format!("{what} took {t:.1?}, limit {limit:?}"))
}

// ---- gradient oracle ------------------------------------------------------

/// Smallest ReLU pre-activation magnitude over every example in `tower`.
fn relu_margin(tower: &Tower<f64>, inputs: &[&[f64]]) -> f64 {
    let mut margin = f64::INFINITY;
    for x in inputs {
        let mut h = x.to_vec();
        for layer in tower.layers() {
            let (w, b) = (layer.weight(), layer.bias());
            let z: Vec<f64> = (0..layer.out_dim())
                .map(|o| {
                    b[o] + (0..layer.in_dim())
                        .map(|i| w[o * layer.in_dim() + i] * h[i])
                        .sum::<f64>()
                })
                .collect();
            if layer.activation() == Activation::Relu {
                margin = z.iter().fold(margin, |m, v| m.min(v.abs()));
                h = z.iter().map(|v| v.max(0.0)).collect();
            } else {
                h = z;
            }
        }
    }
    margin
}

/// `None` when a perturbation of size `h` could cross a kink (a ReLU at 0,
/// or `max(0, cos)` for a cosine negative) or when a tower output is so
/// short that cosine curvature swamps the difference quotient. Finite
/// differences are not a valid oracle there.
fn random_instance(rng: &mut impl Rng, objective: Objective) -> Result<Option<f64>, String> {
    let in_dim = rng.random_range(2..=16);
    let hidden: Vec<usize> = (0..rng.random_range(0..=2)).map(|_| rng.random_range(2..=16)).collect();
    let spec = TowerSpec {
        hidden,
        out_dim: rng.random_range(2..=16),
        ..TowerSpec::default()
    };
    let mut model = TwoTower::<f64>::init(in_dim, &spec, rng.random());
    let b = rng.random_range(2..=8);
    let vecs: Vec<Vec<f64>> = (0..2 * b)
        .map(|_| (0..in_dim).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    // at least two positives so the contrastive term is live
    let labels: Vec<Label> = (0..b)
        .map(|i| {
            if i < 2 || rng.random_bool(0.5) {
                Label::Positive
            } else {
                Label::Negative
            }
        })
        .collect();
    let examples = (0..b)
        .map(|i| Example {
            request: &vecs[i][..],
            item: &vecs[b + i][..],
            label: labels[i],
            weight: rng.random_range(0.25..1.5),
        })
        .collect();
    let mut batch = Batch::new(examples);
    if rng.random_bool(0.3) {
        batch.exclusions.push((0, 1));
    }
    let cfg = ObjectiveConfig {
        objective,
        alpha: rng.random_range(0.1..2.0),
        beta: rng.random_range(0.1..2.0),
        temperature: rng.random_range(0.05..1.0),
    };

    const KINK_MARGIN: f64 = 1e-3;
    let requests: Vec<&[f64]> = vecs[..b].iter().map(Vec::as_slice).collect();
    let items: Vec<&[f64]> = vecs[b..].iter().map(Vec::as_slice).collect();
    if relu_margin(model.request_tower(), &requests).min(relu_margin(model.item_tower(), &items)) < KINK_MARGIN {
        return Ok(None);
    }
    if objective == Objective::CosineEmbedding {
        const MIN_NORM: f64 = 0.1;
        let norm = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>().sqrt();
        for i in 0..b {
            let u = model.project_request(requests[i]).map_err(|e| e.to_string())?;
            let v = model.project_item(items[i]).map_err(|e| e.to_string())?;
            if norm(&u) < MIN_NORM || norm(&v) < MIN_NORM {
                return Ok(None);
            }
            if labels[i] == Label::Negative && cosine_similarity(&u, &v).map_err(|e| e.to_string())?.abs() < KINK_MARGIN
            {
                return Ok(None);
            }
        }
    }

    let (_, grads) = loss_and_grad(&model, &batch, &cfg).map_err(|e| e.to_string())?;
    let analytic: Vec<f64> = grads.iter().copied().collect();
    let h = 1e-4;
    let mut worst = 0.0f64;
    for (k, &a) in analytic.iter().enumerate() {
        let p = model.params_mut().nth(k).unwrap();
        let orig = *p;
        *p = orig + h;
        let up = batch_loss(&model, &batch, &cfg).map_err(|e| e.to_string())?.total;
        *model.params_mut().nth(k).unwrap() = orig - h;
        let down = batch_loss(&model, &batch, &cfg).map_err(|e| e.to_string())?.total;
        *model.params_mut().nth(k).unwrap() = orig;
        let numeric = (up - down) / (2.0 * h);
        // floor keeps round-off on near-zero coordinates from dominating
        let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
        worst = worst.max(rel);
    }
    Ok(Some(worst))
}

fn gradient_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = keyed_rng(42, "acceptance/gradients");
    let mut summary = Vec::new();
    for objective in [Objective::Composite, Objective::CosineEmbedding] {
        let (mut worst, mut n, mut redrawn) = (0.0f64, 0, 0);
        while n < 60 {
            let Some(err) = random_instance(&mut rng, objective)? else {
                redrawn += 1;
                continue;
            };
            ensure(err < 1e-4, || {
                format!("{objective:?} instance {n}: relative error {err:.3e}")
            })?;
            worst = worst.max(err);
            n += 1;
        }
        summary.push(format!(
            "{objective:?} 60 instances max rel err {worst:.2e} ({redrawn} ill-conditioned draws skipped)"
        ));
    }
    within(start, Duration::from_secs(60), "gradient oracle")?;
    Ok(format!("{} in {:.1?}", summary.join(", "), start.elapsed()))
}

// ---- metric oracle --------------------------------------------------------

fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn go(prefix: &mut Vec<usize>, left: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if left.is_empty() {
            out.push(prefix.clone());
        }
        for i in 0..left.len() {
            let x = left.remove(i);
            prefix.push(x);
            go(prefix, left, out);
            prefix.pop();
            left.insert(i, x);
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::new(), &mut (0..n).collect(), &mut out);
    out
}

fn metric_oracle() -> Outcome {
    let start = Instant::now();
    let mut checked = 0usize;
    for n in 1..=6usize {
        let perms = permutations(n);
        for mask in 0u32..(1 << n) {
            let rel: BTreeSet<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
            let judgment = RelevanceJudgment::new("q", rel.iter().map(|i| format!("c{i}")));
            for perm in &perms {
                let ranked = RankedList::from_scores(
                    "q",
                    perm.iter().enumerate().map(|(p, &i)| (format!("c{i}"), (n - p) as f64)),
                    None,
                )
                .map_err(|e| e.to_string())?;
                let hits = |k: usize| perm.iter().take(k).filter(|i| rel.contains(i)).count() as f64;
                for k in 1..=4 {
                    let p = precision_at_k(&ranked, &judgment, k).map_err(|e| e.to_string())?;
                    ensure((p - hits(k) / k as f64).abs() <= 1e-12, || {
                        format!("precision@{k} {perm:?} {rel:?}")
                    })?;
                    let r = recall_at_k(&ranked, &judgment, k).map_err(|e| e.to_string())?;
                    let expect = (!rel.is_empty()).then(|| hits(k) / rel.len() as f64);
                    ensure(
                        match (r, expect) {
                            (Some(a), Some(b)) => (a - b).abs() <= 1e-12,
                            (None, None) => true,
                            _ => false,
                        },
                        || format!("recall@{k} {perm:?} {rel:?}"),
                    )?;
                }
                let dcg: f64 = perm
                    .iter()
                    .enumerate()
                    .filter(|(_, i)| rel.contains(i))
                    .map(|(p, _)| 1.0 / (p as f64 + 2.0).log2())
                    .sum();
                let idcg: f64 = (0..rel.len()).map(|p| 1.0 / (p as f64 + 2.0).log2()).sum();
                let expect = (!rel.is_empty()).then(|| dcg / idcg);
                ensure(
                    match (ndcg(&ranked, &judgment), expect) {
                        (Some(a), Some(b)) => (a - b).abs() <= 1e-12,
                        (None, None) => true,
                        _ => false,
                    },
                    || format!("ndcg {perm:?} {rel:?}"),
                )?;
                checked += 1;
            }
        }
    }
    within(start, Duration::from_secs(60), "metric oracle")?;
    Ok(format!(
        "{checked} (pool, relevance, permutation) cases in {:.1?}",
        start.elapsed()
    ))
}

// ---- BM25 -----------------------------------------------------------------

fn toks(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_string).collect()
}

fn build(docs: &[(String, Vec<String>)]) -> Result<Bm25Index, String> {
    Bm25Index::build(
        docs.iter().map(|(i, d)| (i.as_str(), d.as_slice())),
        Bm25Params::default(),
    )
    .map_err(|e| e.to_string())
}

fn bm25() -> Outcome {
    let docs: Vec<(String, Vec<String>)> = [
        ("d1", "red summer dress"),
        ("d2", "blue denim jeans jeans"),
        ("d3", "red leather boots red"),
    ]
    .iter()
    .map(|(i, d)| (i.to_string(), toks(d)))
    .collect();
    let ix = build(&docs)?;
    let fixture = [
        ("red dress", "d1", 1.5674176674388653),
        ("red dress", "d2", 0.0),
        ("red dress", "d3", 0.6301433699582716),
        ("jeans", "d2", 1.3150176134561649),
        ("red", "d1", 0.5077717780244109),
        ("red", "d3", 0.6301433699582716),
    ];
    for (q, d, expect) in fixture {
        let got = ix.score(&toks(q), d).map_err(|e| e.to_string())?;
        ensure((got - expect).abs() <= 1e-9, || {
            format!("fixture {q:?}/{d}: {got} vs {expect}")
        })?;
    }

    let mut rng = keyed_rng(42, "acceptance/bm25");
    let (mut vacuous, mut raised) = (0usize, 0usize);
    for c in 0..1000 {
        let vocab = rng.random_range(3..12);
        let word = |w: usize| format!("w{w}");
        let docs: Vec<(String, Vec<String>)> = (0..rng.random_range(1..10))
            .map(|i| {
                (
                    format!("d{i}"),
                    (0..rng.random_range(1..12))
                        .map(|_| word(rng.random_range(0..vocab)))
                        .collect(),
                )
            })
            .collect();
        let query: Vec<String> = (0..rng.random_range(1..4))
            .map(|_| word(rng.random_range(0..vocab)))
            .collect();
        let ix = build(&docs)?;
        for (id, d) in &docs {
            if !d.iter().any(|t| query.contains(t)) {
                let s = ix.score(&query, id).map_err(|e| e.to_string())?;
                ensure(s == 0.0, || format!("corpus {c}: {id} shares no term but scores {s}"))?;
                vacuous += 1;
            }
        }
        // raise tf of a query term in one document while its length and
        // every other document stay fixed
        let target = rng.random_range(0..docs.len());
        let term = query[rng.random_range(0..query.len())].clone();
        let Some(slot) = docs[target].1.iter().position(|t| !query.contains(t)) else {
            continue;
        };
        let mut changed = docs.clone();
        changed[target].1[slot] = term;
        let before = ix.score(&query, &docs[target].0).map_err(|e| e.to_string())?;
        let after = build(&changed)?
            .score(&query, &docs[target].0)
            .map_err(|e| e.to_string())?;
        ensure(after >= before, || {
            format!("corpus {c}: score fell from {before} to {after}")
        })?;
        raised += 1;
    }
    Ok(format!(
        "fixture within 1e-9; 1000 corpora, {vacuous} vacuity and {raised} monotonicity checks"
    ))
}

// ---- random baseline ------------------------------------------------------

fn random_prec_at_1(requests: usize, pool: usize, relevant: usize, seed: u64) -> Result<f64, String> {
    let mut rng = keyed_rng(seed, "acceptance/random-pools");
    let mut rankings = Vec::with_capacity(requests);
    let mut judgments = Vec::with_capacity(requests);
    for r in 0..requests {
        let id = format!("r{r}");
        let items: Vec<String> = (0..pool).map(|i| format!("r{r}-c{i}")).collect();
        let mut shuffled = items.clone();
        shuffled.shuffle(&mut rng);
        judgments.push(RelevanceJudgment::new(id.clone(), shuffled.into_iter().take(relevant)));
        let refs: Vec<&str> = items.iter().map(String::as_str).collect();
        rankings.push(random_rank(&id, &refs, None, seed).map_err(|e| e.to_string())?);
    }
    let report = evaluate_run(&rankings, &judgments, &[1], Averaging::Macro).map_err(|e| e.to_string())?;
    Ok(report.precision(1).unwrap())
}

fn random_calibration() -> Outcome {
    let p4 = random_prec_at_1(2000, 4, 2, 42)?;
    ensure((p4 - 0.50).abs() <= 0.03, || format!("2-of-4 PREC@1 {p4:.4}"))?;
    let p10 = random_prec_at_1(2000, 10, 2, 42)?;
    ensure((p10 - 0.20).abs() <= 0.03, || format!("2-of-10 PREC@1 {p10:.4}"))?;
    Ok(format!(
        "2-of-4 PREC@1 {p4:.4} (target 0.50±0.03), 2-of-10 PREC@1 {p10:.4} (target 0.20±0.03), 2000 requests each"
    ))
}

// ---- end to end -----------------------------------------------------------

struct RunScores {
    prec1: f64,
    ndcg: f64,
}

fn synthetic_run(dir: &Path, obfuscate: bool) -> Result<std::collections::BTreeMap<String, RunScores>, String> {
    let spec = SyntheticSpec {
        obfuscate,
        ..SyntheticSpec::default()
    };
    pipeline::synth(&spec, &dir.join("raw")).map_err(|e| e.to_string())?;
    let text = "[paths]\nrequests = \"raw/requests.jsonl\"\nitems = \"raw/items.jsonl\"\ninteractions = \"raw/interactions.jsonl\"\n\n[embedding]\ndim = 256\n";
    let cfg = PipelineConfig::from_toml(text, dir).map_err(|e| e.to_string())?;
    pipeline::ingest(&cfg).map_err(|e| e.to_string())?;
    pipeline::train_cmd(&cfg, None, None).map_err(|e| e.to_string())?;
    pipeline::index_cmd(&cfg, None).map_err(|e| e.to_string())?;
    let out = pipeline::eval_cmd(&cfg, None, None).map_err(|e| e.to_string())?;
    Ok(out
        .models
        .into_iter()
        .map(|m| {
            (
                m.tag,
                RunScores {
                    prec1: m.report.precision(1).unwrap(),
                    ndcg: m.report.ndcg,
                },
            )
        })
        .collect())
}

fn end_to_end() -> Outcome {
    let start = Instant::now();
    let plain_dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let plain = synthetic_run(plain_dir.path(), false)?;
    let obf_dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let obf = synthetic_run(obf_dir.path(), true)?;
    within(start, Duration::from_secs(300), "end-to-end runs")?;

    let (w, r) = (&plain["wlite"], &plain["random"]);
    ensure(w.prec1 >= 0.90, || format!("WLITE PREC@1 {:.4} < 0.90", w.prec1))?;
    ensure(w.ndcg >= r.ndcg + 0.15, || {
        format!("WLITE NDCG {:.4} < RANDOM {:.4} + 0.15", w.ndcg, r.ndcg)
    })?;
    let (wo, bo) = (&obf["wlite"], &obf["bm25"]);
    ensure(wo.ndcg >= bo.ndcg, || {
        format!("obfuscated WLITE NDCG {:.4} < BM25 {:.4}", wo.ndcg, bo.ndcg)
    })?;
    Ok(format!(
        "WLITE PREC@1 {:.4} NDCG {:.4} vs RANDOM NDCG {:.4}; obfuscated WLITE NDCG {:.4} vs BM25 {:.4}; {:.1?}",
        w.prec1,
        w.ndcg,
        r.ndcg,
        wo.ndcg,
        bo.ndcg,
        start.elapsed()
    ))
}

// ---- determinism ----------------------------------------------------------

fn artifacts(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let work = dir.join("work");
    common::files_under(&work)
        .into_iter()
        .map(|p| {
            (
                p.strip_prefix(&work).unwrap().display().to_string(),
                std::fs::read(&p).unwrap(),
            )
        })
        .collect()
}

fn determinism() -> Outcome {
    let mut runs = Vec::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let cfg = common::trained(dir.path(), 300);
        pipeline::eval_cmd(&cfg, None, None).map_err(|e| e.to_string())?;
        runs.push(artifacts(dir.path()));
    }
    let (a, b) = (&runs[0], &runs[1]);
    let names = |r: &[(String, Vec<u8>)]| r.iter().map(|(n, _)| n.clone()).collect::<Vec<_>>();
    ensure(names(a) == names(b), || {
        format!("artifact sets differ: {:?} vs {:?}", names(a), names(b))
    })?;
    for ((name, x), (_, y)) in a.iter().zip(b) {
        ensure(x == y, || format!("{name} differs between runs"))?;
    }
    Ok(format!("{} artifacts byte-identical across two runs", a.len()))
}

// ---- likert ---------------------------------------------------------------

fn likert() -> Outcome {
    let mapped: Vec<i8> = (1..=5).map(|r| likert_value(r).unwrap()).collect();
    ensure(mapped == [-1, -1, 0, 1, 1], || format!("mapping {mapped:?}"))?;
    ensure(likert_value(0).is_err() && likert_value(6).is_err(), || {
        "out-of-range rating accepted".into()
    })?;
    let agg = |r: &[i64]| aggregate_likert(r.iter().copied()).map_err(|e| e.to_string());
    ensure(agg(&[4, 5, 4])?.mean == 1.0, || "[4,5,4] mean".into())?;
    ensure(agg(&[1, 3, 5])?.mean == 0.0, || "[1,3,5] mean".into())?;
    let s = agg(&[2, 3, 4, 4])?;
    ensure(s.mean == 0.25 && s.sd == (11.0f64 / 12.0).sqrt(), || {
        format!("[2,3,4,4] -> {s:?}")
    })?;
    ensure(aggregate_likert([]).is_err(), || "empty batch accepted".into())?;
    let mut rng = keyed_rng(42, "acceptance/likert");
    for _ in 0..1000 {
        let batch: Vec<i64> = (0..rng.random_range(1..50)).map(|_| rng.random_range(1..=5)).collect();
        let m = agg(&batch)?.mean;
        ensure((-1.0..=1.0).contains(&m), || format!("mean {m} outside [-1, 1]"))?;
    }
    Ok(format!(
        "fixtures exact; [2,3,4,4] -> {:.4} ± {:.4}; 1000 random batches in [-1, 1]",
        s.mean, s.sd
    ))
}

// ---- loss identities ------------------------------------------------------

fn loss_identities() -> Outcome {
    let x = [0.3f64, -1.1, 0.7, 2.0];
    let c = cosine_embedding_loss(&x, &x, Label::Positive).map_err(|e| e.to_string())?;
    ensure(c.abs() < 1e-12, || format!("cos(x, x, +1) = {c}"))?;
    for b in 2..=4usize {
        let u: Vec<Vec<f64>> = (0..b).map(|_| vec![0.5, 0.5]).collect();
        let v: Vec<Vec<f64>> = (0..b).map(|_| vec![0.2, 0.9]).collect();
        let ur: Vec<&[f64]> = u.iter().map(Vec::as_slice).collect();
        let vr: Vec<&[f64]> = v.iter().map(Vec::as_slice).collect();
        let l = contrastive_loss(&ur, &vr, 0.07).map_err(|e| e.to_string())?;
        ensure((l - (b as f64).ln()).abs() <= 1e-9, || {
            format!("uniform InfoNCE at B={b}: {l}")
        })?;
        let m = info_nce(&vec![-0.4; b * b], b, 0.07, None)
            .map_err(|e| e.to_string())?
            .loss;
        ensure((m - (b as f64).ln()).abs() <= 1e-9, || {
            format!("uniform score matrix at B={b}: {m}")
        })?;
    }

    let spec = TowerSpec {
        hidden: vec![6],
        out_dim: 4,
        ..TowerSpec::default()
    };
    let model = TwoTower::<f64>::init(5, &spec, 3);
    let vecs: Vec<Vec<f64>> = (0..8)
        .map(|i| (0..5).map(|j| ((i * 5 + j) as f64 * 0.37).sin()).collect())
        .collect();
    let labels = [Label::Positive, Label::Positive, Label::Negative, Label::Positive];
    let batch = Batch::new(
        (0..4)
            .map(|i| Example {
                request: &vecs[i][..],
                item: &vecs[4 + i][..],
                label: labels[i],
                weight: 1.0,
            })
            .collect(),
    );
    let full = batch_loss(&model, &batch, &ObjectiveConfig::default()).map_err(|e| e.to_string())?;
    let (bce, nce) = (full.bce.unwrap(), full.contrastive.unwrap());
    let only_bce = batch_loss(
        &model,
        &batch,
        &ObjectiveConfig {
            beta: 0.0,
            ..Default::default()
        },
    )
    .map_err(|e| e.to_string())?;
    let only_nce = batch_loss(
        &model,
        &batch,
        &ObjectiveConfig {
            alpha: 0.0,
            ..Default::default()
        },
    )
    .map_err(|e| e.to_string())?;
    ensure((only_bce.total - bce).abs() <= 1e-12, || {
        format!("beta=0 total {} vs BCE {bce}", only_bce.total)
    })?;
    ensure((only_nce.total - nce).abs() <= 1e-12, || {
        format!("alpha=0 total {} vs InfoNCE {nce}", only_nce.total)
    })?;
    ensure((full.total - bce - nce).abs() <= 1e-12, || {
        "alpha=beta=1 is not the plain sum".into()
    })?;
    Ok(format!(
        "cos(x,x,+1)=0, ln B for B in 2..=4 within 1e-9, alpha=0 -> {nce:.6}, beta=0 -> {bce:.6}"
    ))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("gradient oracle", gradient_oracle),
        ("metric oracle", metric_oracle),
        ("bm25 fixture and properties", bm25),
        ("random baseline calibration", random_calibration),
        ("end-to-end synthetic run", end_to_end),
        ("determinism", determinism),
        ("likert aggregation", likert),
        ("loss identities", loss_identities),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let result = std::panic::catch_unwind(check).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        match result {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {name}: {why}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
