use std::collections::BTreeSet;

use rofl_core::corpus::{
    generate_corpus, make_ood_config, read_corpus, reduce_labels, strip_labels, write_corpus, FullCorpus,
    FullLabelExample, PairCorpus, PairLabel, ReducedCorpus, ReducedLabelExample, UtterancePair,
};
use rofl_core::env::{ActionSpace, DialogAct, DialogEnv, EnvConfig, LabelSet, ReducedLabel, Verbalizer};
use rofl_core::Error;

fn small(noise: f64, seed: u64) -> FullCorpus {
    generate_corpus(&EnvConfig::desk(), 60, noise, seed).unwrap()
}

#[test]
fn stored_states_match_resimulation() {
    let corpus = small(0.2, 2);
    let cfg = corpus.header.config.clone();
    let mut env = DialogEnv::new(cfg).unwrap();
    let mut successes = 0;
    let mut i = 0;
    while i < corpus.examples.len() {
        let d = corpus.examples[i].dialog;
        let goal_seed = rofl_core::seed::derive(
            rofl_core::seed::derive(corpus.header.seed, rofl_core::seed::stream::CORPUS),
            d as u64,
        );
        let mut state = env.reset(goal_seed).state;
        while i < corpus.examples.len() && corpus.examples[i].dialog == d {
            let e = &corpus.examples[i];
            assert_eq!(e.state, state);
            assert_eq!(e.user_text, env.user_text().unwrap());
            state = env.step(e.action_index).unwrap().state;
            i += 1;
        }
        assert!(env.is_done());
        successes += env.record().unwrap().success as usize;
    }
    assert!(successes > 0);
}

#[test]
fn noiseless_rule_corpus_succeeds_everywhere() {
    let corpus = small(0.0, 3);
    let mut env = DialogEnv::new(corpus.header.config.clone()).unwrap();
    let mut i = 0;
    let mut dialogs = 0;
    let mut wins = 0;
    while i < corpus.examples.len() {
        let d = corpus.examples[i].dialog;
        let seed = rofl_core::seed::derive(rofl_core::seed::derive(3, rofl_core::seed::stream::CORPUS), d as u64);
        env.reset(seed);
        while i < corpus.examples.len() && corpus.examples[i].dialog == d {
            env.step(corpus.examples[i].action_index).unwrap();
            i += 1;
        }
        dialogs += 1;
        wins += env.record().unwrap().success as usize;
    }
    assert_eq!(dialogs, 60);
    assert!(wins >= 59, "{wins}/60");
}

#[test]
fn noise_changes_the_action_distribution() {
    let n_actions = ActionSpace::new(&EnvConfig::desk()).len();
    let hist = |c: &FullCorpus| {
        let mut h = vec![0.0; n_actions];
        for e in &c.examples {
            h[e.action_index] += 1.0 / c.examples.len() as f64;
        }
        h
    };
    let clean = hist(&small(0.0, 4));
    let noisy = hist(&small(0.2, 4));
    let tv: f64 = clean.iter().zip(&noisy).map(|(a, b)| (a - b).abs()).sum::<f64>() / 2.0;
    assert!(tv > 0.01, "total variation {tv}");
}

#[test]
fn generation_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.jsonl");
    let b = dir.path().join("b.jsonl");
    write_corpus(&a, &small(0.15, 5)).unwrap();
    write_corpus(&b, &small(0.15, 5)).unwrap();
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn invalid_generation_arguments() {
    let cfg = EnvConfig::desk();
    assert!(matches!(generate_corpus(&cfg, 0, 0.1, 0), Err(Error::Usage(_))));
    assert!(matches!(generate_corpus(&cfg, 5, 1.0, 0), Err(Error::Usage(_))));
}

#[test]
fn all_strengths_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let full = small(0.1, 6);
    let reduced = reduce_labels(&full).unwrap();
    let pairs = strip_labels(&full, 2, 6).unwrap();
    let p = dir.path().join("full.jsonl");
    write_corpus(&p, &full).unwrap();
    assert_eq!(read_corpus::<FullLabelExample>(&p).unwrap(), full);
    assert!(read_corpus::<UtterancePair>(&p).is_err());
    let p = dir.path().join("reduced.jsonl");
    write_corpus(&p, &reduced).unwrap();
    let back: ReducedCorpus = read_corpus::<ReducedLabelExample>(&p).unwrap();
    assert_eq!(back, reduced);
    let p = dir.path().join("pairs.jsonl");
    write_corpus(&p, &pairs).unwrap();
    let back: PairCorpus = read_corpus(&p).unwrap();
    assert_eq!(back, pairs);
}

#[test]
fn reduced_labels_follow_the_partition() {
    let full = small(0.0, 7);
    let reduced = reduce_labels(&full).unwrap();
    assert_eq!(reduced.examples.len(), full.examples.len());
    let space = ActionSpace::new(&full.header.config);
    for (f, r) in full.examples.iter().zip(&reduced.examples) {
        assert_eq!(r.labels, space.labels_of(f.action_index));
        assert_eq!(r.context_text, f.user_text);
        assert!(!r.labels.is_empty());
    }
    let cfg = &full.header.config;
    let a = cfg.domains.iter().position(|d| d.name == "attraction").unwrap();
    let both = space.find(&[DialogAct::offer(a), DialogAct::request(a, 0)]).unwrap();
    assert_eq!(space.labels_of(both), LabelSet::from_labels([ReducedLabel::Inform, ReducedLabel::Request]));
}

#[test]
fn negatives_are_balanced_and_unobserved() {
    let full = small(0.1, 8);
    for ratio in [1, 3] {
        let pairs = strip_labels(&full, ratio, 8).unwrap();
        assert_eq!(pairs.examples.len(), (1 + ratio) * full.examples.len());
        let positives: BTreeSet<(&str, &str)> = pairs
            .examples
            .iter()
            .filter(|p| p.label == PairLabel::Positive)
            .map(|p| (p.user_text.as_str(), p.agent_text.as_str()))
            .collect();
        let negatives: Vec<_> = pairs.examples.iter().filter(|p| p.label == PairLabel::Negative).collect();
        assert_eq!(negatives.len(), ratio * full.examples.len());
        for n in negatives {
            assert!(!positives.contains(&(n.user_text.as_str(), n.agent_text.as_str())));
        }
    }
    assert_eq!(strip_labels(&full, 1, 9).unwrap(), strip_labels(&full, 1, 9).unwrap());
    assert!(strip_labels(&full, 0, 9).is_err());
}

#[test]
fn single_response_corpus_cannot_make_negatives() {
    let mut full = small(0.0, 10);
    for e in &mut full.examples {
        e.agent_text = "same".into();
    }
    assert!(matches!(strip_labels(&full, 1, 0), Err(Error::Usage(_))));
}

#[test]
fn ood_config_shares_few_tokens() {
    let base = EnvConfig::desk();
    let ood = make_ood_config(&base, 1);
    ood.validate().unwrap();
    let base_tokens = Verbalizer::new(&base).token_set(&ActionSpace::new(&base));
    let ood_tokens = Verbalizer::new(&ood).token_set(&ActionSpace::new(&ood));
    let shared = ood_tokens.intersection(&base_tokens).count();
    let ratio = shared as f64 / ood_tokens.len() as f64;
    assert!(ratio < 0.5, "overlap {ratio}");
    assert_ne!(ActionSpace::new(&ood).len(), 0);
    assert_eq!(make_ood_config(&base, 1), ood);
    assert_ne!(make_ood_config(&base, 2), ood);
}

#[test]
fn ood_corpus_keeps_reduced_labels() {
    let ood = make_ood_config(&EnvConfig::desk(), 3);
    let full = generate_corpus(&ood, 20, 0.1, 3).unwrap();
    let reduced = reduce_labels(&full).unwrap();
    let seen: BTreeSet<ReducedLabel> = reduced.examples.iter().flat_map(|e| e.labels.labels()).collect();
    assert_eq!(seen, ReducedLabel::ALL.into_iter().collect());
}
