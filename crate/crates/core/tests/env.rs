use rand::Rng;
use rofl_core::env::{
    read_traces, write_traces, DialogAct, DialogEnv, EnvConfig, Outcome, RulePolicy, UserAct,
};
use rofl_core::seed;
use rofl_core::Error;

fn desk() -> DialogEnv {
    DialogEnv::new(EnvConfig::desk()).unwrap()
}

fn run_rule(env: &mut DialogEnv, goal_seed: u64) {
    let rule = RulePolicy::new(env);
    let mut state = env.reset(goal_seed).state;
    while !env.is_done() {
        state = env.step(rule.act(&state)).unwrap().state;
    }
}

#[test]
fn reset_is_deterministic() {
    let mut a = desk();
    let mut b = desk();
    for s in 0..20 {
        assert_eq!(a.reset(s), b.reset(s));
        assert_eq!(a.goal().unwrap(), b.goal().unwrap());
        assert!(!a.goal().unwrap().domains.is_empty());
    }
}

#[test]
fn initial_state_has_no_system_informs() {
    let mut env = desk();
    let obs = env.reset(0);
    let l = env.layout();
    for d in 0..l.n_domains() {
        for r in 0..l.n_requestable(d) {
            assert!(!obs.state.get(l.system_informed(d, r)));
        }
    }
    assert!(!obs.user_acts.is_empty());
}

#[test]
fn non_terminal_steps_cost_one() {
    let mut env = desk();
    let reqmore = env.action_space().find(&[DialogAct::reqmore()]).unwrap();
    env.reset(3);
    let step = env.step(reqmore).unwrap();
    assert!(!step.done);
    assert_eq!(step.reward, -1.0);
}

#[test]
fn reward_decomposes_into_bonus_and_penalties() {
    let mut env = desk();
    let cfg = env.config().clone();
    let mut rng = seed::rng(1, 0);
    for s in 0..200 {
        if s % 2 == 0 {
            run_rule(&mut env, s);
        } else {
            env.reset(s);
            while !env.is_done() {
                env.step(rng.random_range(0..env.n_actions())).unwrap();
            }
        }
        let trace = env.trace().unwrap();
        let bonus = if trace.outcome.unwrap().is_success() { cfg.success_reward } else { cfg.failure_reward };
        let expected = bonus + cfg.step_penalty * trace.steps.len() as f64;
        assert_eq!(trace.total_reward(), expected);
        assert!(trace.steps.len() <= cfg.max_turns);
    }
}

#[test]
fn quick_success_clears_the_reward_threshold() {
    // Success at turn 5 earns 80 - 5 = 75 > 70.
    let cfg = EnvConfig::desk();
    assert_eq!(cfg.success_reward + 5.0 * cfg.step_penalty, 75.0);
    let mut env = desk();
    for s in 0..200 {
        run_rule(&mut env, s);
        let t = env.trace().unwrap();
        if t.steps.len() == 5 {
            assert_eq!(t.total_reward(), 75.0);
            return;
        }
    }
    panic!("no five-turn rule dialog in 200 goals");
}

#[test]
fn timeout_ends_in_failure() {
    let mut cfg = EnvConfig::desk();
    cfg.user_patience = 0;
    cfg.max_turns = 6;
    let mut env = DialogEnv::new(cfg.clone()).unwrap();
    let reqmore = env.action_space().find(&[DialogAct::reqmore()]).unwrap();
    env.reset(11);
    let mut last = None;
    for _ in 0..cfg.max_turns {
        last = Some(env.step(reqmore).unwrap());
    }
    let last = last.unwrap();
    assert!(last.done);
    assert_eq!(last.outcome, Some(Outcome::Timeout));
    assert_eq!(last.reward, cfg.step_penalty + cfg.failure_reward);
}

#[test]
fn impatient_user_gives_up() {
    let mut env = desk();
    let patience = env.config().user_patience;
    let reqmore = env.action_space().find(&[DialogAct::reqmore()]).unwrap();
    env.reset(2);
    for i in 1..=patience {
        let step = env.step(reqmore).unwrap();
        assert_eq!(step.done, i == patience);
    }
    assert_eq!(env.trace().unwrap().outcome, Some(Outcome::GaveUp));
}

#[test]
fn system_bye_fails_the_dialog() {
    let mut env = desk();
    let bye = env.action_space().find(&[DialogAct::bye()]).unwrap();
    env.reset(5);
    let step = env.step(bye).unwrap();
    assert!(step.done);
    assert_eq!(step.outcome, Some(Outcome::SystemBye));
    assert_eq!(step.user_acts, vec![UserAct::Bye]);
}

#[test]
fn stepping_a_finished_dialog_is_a_usage_error() {
    let mut env = desk();
    run_rule(&mut env, 0);
    assert!(matches!(env.step(0), Err(Error::Usage(_))));
    let mut fresh = desk();
    assert!(matches!(fresh.step(0), Err(Error::Usage(_))));
}

#[test]
fn system_informed_bits_follow_inform_acts() {
    let mut env = desk();
    let mut rng = seed::rng(9, 0);
    for s in 0..50 {
        env.reset(s);
        let mut seen = std::collections::BTreeSet::new();
        while !env.is_done() {
            let a = rng.random_range(0..env.n_actions());
            for act in &env.action_space().get(a).unwrap().acts {
                if let (Some(d), rofl_core::env::SlotRef::Requestable(r)) = (act.domain, act.slot) {
                    seen.insert((d, r));
                }
            }
            let state = env.step(a).unwrap().state;
            let l = env.layout();
            for d in 0..l.n_domains() {
                for r in 0..l.n_requestable(d) {
                    assert_eq!(state.get(l.system_informed(d, r)), seen.contains(&(d, r)));
                }
            }
        }
    }
}

#[test]
fn rule_dialogs_score_perfectly() {
    let mut env = desk();
    for s in 0..50 {
        run_rule(&mut env, s);
        let rec = env.record().unwrap();
        if rec.success {
            assert!(rec.matched);
            assert_eq!(rec.inform_f1, 100.0);
        }
    }
}

#[test]
fn evaluate_dialog_replays_traces() {
    let mut env = desk();
    let mut rng = seed::rng(4, 0);
    for s in 0..30 {
        if s % 3 == 0 {
            run_rule(&mut env, s);
        } else {
            env.reset(s);
            while !env.is_done() {
                env.step(rng.random_range(0..env.n_actions())).unwrap();
            }
        }
        let trace = env.trace().unwrap().clone();
        assert_eq!(env.evaluate_dialog(&trace).unwrap(), env.record().unwrap());
    }
}

#[test]
fn evaluate_dialog_rejects_unfinished_traces() {
    let mut env = desk();
    env.reset(0);
    let reqmore = env.action_space().find(&[DialogAct::reqmore()]).unwrap();
    env.step(reqmore).unwrap();
    let trace = env.trace().unwrap().clone();
    assert!(matches!(env.evaluate_dialog(&trace), Err(Error::Usage(_))));
}

#[test]
fn unanswered_requests_give_zero_recall() {
    let mut env = desk();
    let bye = env.action_space().find(&[DialogAct::bye()]).unwrap();
    env.reset(1);
    env.step(bye).unwrap();
    let rec = env.record().unwrap();
    assert_eq!(rec.inform_recall, 0.0);
    assert!(!rec.success);
}

#[test]
fn traces_round_trip_through_jsonl() {
    let mut env = desk();
    let mut traces = Vec::new();
    for s in 0..5 {
        run_rule(&mut env, s);
        traces.push(env.trace().unwrap().clone());
    }
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("traces.jsonl");
    write_traces(&path, &traces).unwrap();
    assert_eq!(read_traces(&path).unwrap(), traces);
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), traces.len());
}

#[test]
fn identical_action_sequences_give_identical_traces() {
    let mut a = desk();
    let mut b = desk();
    let mut rng = seed::rng(7, 0);
    for s in 0..20 {
        a.reset(s);
        b.reset(s);
        while !a.is_done() {
            let act = rng.random_range(0..a.n_actions());
            assert_eq!(a.step(act).unwrap(), b.step(act).unwrap());
        }
        assert_eq!(a.trace().unwrap(), b.trace().unwrap());
        assert_eq!(a.record().unwrap(), b.record().unwrap());
    }
}

#[test]
fn random_policy_rarely_succeeds() {
    let mut env = desk();
    let mut rng = seed::rng(3, 0);
    let n = 500;
    let mut wins = 0;
    for s in 0..n {
        env.reset(10_000 + s);
        while !env.is_done() {
            env.step(rng.random_range(0..env.n_actions())).unwrap();
        }
        wins += env.record().unwrap().success as usize;
    }
    assert!((wins as f64) < 0.1 * n as f64, "{wins}/{n}");
}
