use posiqueue::actions::{
    build_explanation, ActionConfig, ActionKind, ActionRecord, ActionState, ExplainReason, ReasonOrigin,
};
use posiqueue::queue::{
    desirability_histogram, filter_queue, percentile_rank, score_histogram, sort_queue, FilterSpec, MetricTable,
    PostAggregates, PostMetrics, ScorePool, SortKey,
};
use posiqueue::{Author, Contribution, Corpus, Kind};
use proptest::prelude::*;
use regex::Regex;

fn table_from(rows: &[(i64, u8, i64, u64)]) -> (Vec<Contribution>, MetricTable) {
    let mut posts = Vec::new();
    let mut table = MetricTable::new();
    for (i, &(created, desirability, score, karma)) in rows.iter().enumerate() {
        let id = format!("t3_{i:03}");
        posts.push(Contribution::post(&id, "s", "t", "b", "u", created, score));
        table.insert(
            id.clone(),
            PostMetrics {
                id,
                created_utc: created,
                num_reports: (i % 3) as u32,
                desirability,
                score,
                author_karma: karma,
                author_created_utc: created - 100,
                author_age_days: 0.0,
                aggregates: PostAggregates::default(),
            },
        );
    }
    (posts, table)
}

fn rows() -> impl Strategy<Value = Vec<(i64, u8, i64, u64)>> {
    prop::collection::vec((0i64..30, 0u8..=100, -10i64..50, 0u64..1000), 0..40)
}

fn small_corpus() -> Corpus {
    let authors = vec![Author::new("u", "u", 1, 1)];
    let mut cs: Vec<Contribution> = (0..8)
        .map(|i| Contribution::post(format!("t3_{i}"), "demo", "title", "body", "u", 100 + i, 0))
        .collect();
    cs.push(Contribution::comment("t1_0", "demo", "nice", "u", 200, 0, "t3_0", "t3_0"));
    Corpus::new(authors, cs).unwrap()
}

proptest! {
    #[test]
    fn percentile_is_monotone(values in prop::collection::vec(-1e3f64..1e3, 1..60), a in -1e3f64..1e3, b in -1e3f64..1e3) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let p_lo = percentile_rank(&values, lo).unwrap();
        let p_hi = percentile_rank(&values, hi).unwrap();
        prop_assert!(p_lo <= p_hi);
        prop_assert!((0.0..=100.0).contains(&p_lo));
        let pool = ScorePool::new(values.iter().copied());
        prop_assert!((pool.percentile_rank(lo).unwrap() - p_lo).abs() < 1e-9);
    }

    #[test]
    fn raising_a_threshold_never_adds_rows(rows in rows(), t1 in 0u8..=100, t2 in 0u8..=100, s in -10i64..50) {
        let (posts, table) = table_from(&rows);
        let refs: Vec<&Contribution> = posts.iter().collect();
        let (lo, hi) = (t1.min(t2), t1.max(t2));
        let loose = FilterSpec { min_desirability: Some(lo), min_score: Some(s), ..Default::default() };
        let tight = FilterSpec { min_desirability: Some(hi), min_score: Some(s), ..Default::default() };
        let a = filter_queue(&refs, &loose, &table).unwrap();
        let b = filter_queue(&refs, &tight, &table).unwrap();
        prop_assert!(b.iter().all(|p| a.iter().any(|q| q.id == p.id)));
        let none = filter_queue(&refs, &FilterSpec::default(), &table).unwrap();
        prop_assert_eq!(none.len(), posts.len());
    }

    #[test]
    fn filter_and_sort_commute(rows in rows(), t in 0u8..=100, k in 0usize..SortKey::ALL.len()) {
        let (posts, table) = table_from(&rows);
        let refs: Vec<&Contribution> = posts.iter().collect();
        let key = SortKey::ALL[k];
        let spec = FilterSpec { min_desirability: Some(t), ..Default::default() };
        let fs = sort_queue(&filter_queue(&refs, &spec, &table).unwrap(), key, &table).unwrap();
        let sf = filter_queue(&sort_queue(&refs, key, &table).unwrap(), &spec, &table).unwrap();
        let ids = |v: &[&Contribution]| v.iter().map(|c| c.id.clone()).collect::<Vec<_>>();
        prop_assert_eq!(ids(&fs), ids(&sf));
    }

    #[test]
    fn histograms_keep_all_mass(d in prop::collection::vec(0u8..=100, 0..200), s in prop::collection::vec(-500i64..500, 0..200)) {
        let hd = desirability_histogram(&d);
        let hs = score_histogram(&s);
        prop_assert_eq!(hd.total(), d.len() as u64);
        prop_assert_eq!(hs.total(), s.len() as u64);
        prop_assert_eq!(hd.bin_edges.len(), hd.counts.len() + 1);
        prop_assert!(hd.bin_edges.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn explanation_matches_pattern(labels in prop::collection::vec("[A-Za-z]{1,8}( [a-z]{1,6})?", 1..5), post in any::<bool>()) {
        let reasons: Vec<ExplainReason> = labels
            .iter()
            .map(|l| ExplainReason { id: l.to_lowercase(), label: l.clone(), origin: ReasonOrigin::Custom })
            .collect();
        let kind = if post { Kind::Post } else { Kind::Comment };
        let text = build_explanation(kind, &reasons, &[]).unwrap();
        let re = Regex::new(
            r"^The moderators like this (post|comment) because it is [a-z ]+((, [a-z ]+)*,? and [a-z ]+)?\.$",
        )
        .unwrap();
        prop_assert!(re.is_match(&text), "{}", text);
        let noun = if post { "this post" } else { "this comment" };
        prop_assert!(text.contains(noun));
    }

    #[test]
    fn curate_is_idempotent(targets in prop::collection::vec(0usize..8, 1..20)) {
        let corpus = small_corpus();
        let ts = 1_706_702_400;
        let mut once = ActionState::new(ActionConfig::default());
        let mut twice = ActionState::new(ActionConfig::default());
        for t in &targets {
            let rec = ActionRecord::new(ts, "m", ActionKind::Curate, format!("t3_{t}"));
            once.apply(&corpus, &rec).unwrap();
            twice.apply(&corpus, &rec).unwrap();
            twice.apply(&corpus, &rec).unwrap();
        }
        prop_assert_eq!(once.threads, twice.threads);
    }

    #[test]
    fn highlights_never_exceed_capacity(ops in prop::collection::vec((any::<bool>(), 0usize..8), 0..60)) {
        let corpus = small_corpus();
        let mut state = ActionState::new(ActionConfig::default());
        for (add, t) in ops {
            let kind = if add { ActionKind::Highlight } else { ActionKind::Unhighlight };
            let _ = state.apply(&corpus, &ActionRecord::new(1, "m", kind, format!("t3_{t}")));
            prop_assert!(state.highlights.len() <= 6);
        }
    }

    #[test]
    fn corpus_is_order_independent(seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let base = small_corpus();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut cs = base.contributions().to_vec();
        cs.shuffle(&mut rng);
        let shuffled = Corpus::new(base.authors().to_vec(), cs).unwrap();
        prop_assert_eq!(shuffled.contributions(), base.contributions());
        prop_assert_eq!(shuffled.authors(), base.authors());
    }

    #[test]
    fn action_record_round_trips(ts in 0i64..2_000_000_000, m in "[a-z_]{1,12}", k in 0usize..8, target in "t[13]_[a-z0-9]{1,8}", text in ".{0,40}") {
        let rec = ActionRecord::new(ts, m, ActionKind::ALL[k], target)
            .with_payload(serde_json::json!({ "text": text }));
        let line = serde_json::to_string(&rec).unwrap();
        prop_assert!(!line.contains('\n'));
        let back: ActionRecord = serde_json::from_str(&line).unwrap();
        prop_assert_eq!(back, rec);
    }
}
