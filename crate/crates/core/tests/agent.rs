use rand::Rng;
use rofl_core::agent::{
    linear_schedule, AgentConfig, Annotation, AuxVariant, DqnAgent, Transition,
};
use rofl_core::replay::{PrioritizedBuffer, ReplayConfig};
use rofl_core::seed;

fn one_hot(i: usize, n: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[i] = 1.0;
    v
}

fn agent(variant: AuxVariant) -> DqnAgent {
    let cfg = AgentConfig { hidden: 8, ..AgentConfig::default() };
    DqnAgent::new(cfg, variant, 5, 4, 1).unwrap()
}

fn set_block(params: &mut [f64], agent_blocks: &[rofl_core::nn::BlockInfo], name: &str, value: f64) {
    let b = agent_blocks.iter().find(|b| b.name == name).unwrap();
    params[b.slot.offset..b.slot.offset + b.slot.len].iter_mut().for_each(|p| *p = value);
}

#[test]
fn terminal_targets_do_not_bootstrap() {
    let a = agent(AuxVariant::None);
    let t = Transition {
        state: vec![0.0; 5],
        action: 0,
        reward: 75.0,
        next_state: vec![1.0; 5],
        terminal: true,
        annotation: Annotation::None,
    };
    assert_eq!(a.td_target(&t), 75.0);
}

#[test]
fn double_dqn_target_hand_example() {
    // Target network outputs Q = 10 everywhere: y = -1 + 0.9 * 10 = 8.
    let mut a = agent(AuxVariant::None);
    let blocks = a.blocks().to_vec();
    a.target_params_mut().iter_mut().for_each(|p| *p = 0.0);
    set_block(a.target_params_mut(), &blocks, "q.value.b", 10.0);
    let t = Transition {
        state: vec![0.0; 5],
        action: 1,
        reward: -1.0,
        next_state: vec![1.0, 0.0, 1.0, 0.0, 0.0],
        terminal: false,
        annotation: Annotation::None,
    };
    assert!((a.td_target(&t) - 8.0).abs() < 1e-12);
}

#[test]
fn zero_discount_targets_are_rewards() {
    let cfg = AgentConfig { gamma: 1e-300, hidden: 8, ..AgentConfig::default() };
    let a = DqnAgent::new(cfg, AuxVariant::None, 5, 4, 2).unwrap();
    let t = Transition {
        state: vec![0.0; 5],
        action: 1,
        reward: -1.0,
        next_state: vec![1.0; 5],
        terminal: false,
        annotation: Annotation::None,
    };
    assert!((a.td_target(&t) + 1.0).abs() < 1e-12);
}

#[test]
fn epsilon_one_is_uniform_and_zero_is_greedy() {
    let a = agent(AuxVariant::None);
    let s = vec![1.0, 0.0, 0.0, 1.0, 0.0];
    let mut rng = seed::rng(5, 0);
    let greedy = a.greedy(&s);
    assert!((0..100).all(|_| a.select_action(&s, 0.0, &mut rng) == greedy));
    let n = 100_000;
    let mut counts = [0usize; 4];
    for _ in 0..n {
        counts[a.select_action(&s, 1.0, &mut rng)] += 1;
    }
    for c in counts {
        assert!((c as f64 / n as f64 - 0.25).abs() < 0.02, "{counts:?}");
    }
}

#[test]
fn greedy_action_ignores_positive_rescaling() {
    let mut a = agent(AuxVariant::None);
    let blocks = a.blocks().to_vec();
    let s = vec![0.3, -0.2, 1.0, 0.0, 0.5];
    let before = a.greedy(&s);
    // Scaling the output heads scales every Q-value by the same factor.
    for b in blocks.iter().filter(|b| b.name.starts_with("q.value") || b.name.starts_with("q.advantage")) {
        for p in &mut a.params_mut()[b.slot.offset..b.slot.offset + b.slot.len] {
            *p *= 3.5;
        }
    }
    assert_eq!(a.greedy(&s), before);
}

#[test]
fn epsilon_anneals_linearly_to_the_end_value() {
    let cfg = AgentConfig::default();
    assert_eq!(cfg.epsilon(0), 0.1);
    assert!((cfg.epsilon(cfg.eps_horizon / 2) - 0.055).abs() < 1e-12);
    assert_eq!(cfg.epsilon(cfg.eps_horizon), 0.01);
    assert_eq!(cfg.epsilon(10 * cfg.eps_horizon), 0.01);
    assert_eq!(linear_schedule(0.4, 1.0, 0, 5), 1.0);
}

fn random_batch(rng: &mut impl Rng, n: usize, demo_every: usize) -> Vec<Transition> {
    (0..n)
        .map(|i| Transition {
            state: (0..5).map(|_| rng.random_range(-1.0..1.0)).collect(),
            action: rng.random_range(0..4),
            reward: rng.random_range(-2.0..2.0),
            next_state: (0..5).map(|_| rng.random_range(-1.0..1.0)).collect(),
            terminal: i % 3 == 0,
            annotation: if demo_every > 0 && i % demo_every == 0 {
                if i % 2 == 0 {
                    Annotation::Action(rng.random_range(0..4))
                } else {
                    Annotation::Set(vec![rng.random_range(0..4), 3])
                }
            } else {
                Annotation::None
            },
        })
        .collect()
}

fn numeric_grad(x: &[f64], eps: f64, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    let mut x = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = x[i];
            x[i] = orig + eps;
            let hi = f(&x);
            x[i] = orig - eps;
            let lo = f(&x);
            x[i] = orig;
            (hi - lo) / (2.0 * eps)
        })
        .collect()
}

#[test]
fn batch_loss_gradients_match_finite_differences() {
    let mut rng = seed::rng(6, 0);
    for variant in [AuxVariant::None, AuxVariant::FullLabel, AuxVariant::ReducedLabel, AuxVariant::NoLabel] {
        let a = agent(variant);
        let batch = random_batch(&mut rng, 6, 2);
        let refs: Vec<&Transition> = batch.iter().collect();
        let weights: Vec<f64> = (0..6).map(|_| rng.random_range(0.2..1.0)).collect();
        let targets: Vec<f64> = refs.iter().map(|t| a.td_target(t)).collect();
        let (_, grads, _) = a.loss_and_grad(a.params(), &refs, &weights, &targets);
        let numeric = numeric_grad(a.params(), 1e-5, |p| a.loss_and_grad(p, &refs, &weights, &targets).0.total);
        let mut worst: f64 = 0.0;
        for (g, n) in grads.iter().zip(&numeric) {
            worst = worst.max((g - n).abs() / (g.abs() + n.abs()).max(1e-6));
        }
        assert!(worst < 1e-4, "{variant:?}: {worst}");
    }
}

#[test]
fn batches_without_demos_reduce_to_td_loss() {
    let mut rng = seed::rng(7, 0);
    let a = agent(AuxVariant::FullLabel);
    let plain = agent(AuxVariant::None);
    let batch = random_batch(&mut rng, 8, 0);
    let refs: Vec<&Transition> = batch.iter().collect();
    let w = vec![1.0; 8];
    let targets: Vec<f64> = refs.iter().map(|t| a.td_target(t)).collect();
    let (parts, g1, _) = a.loss_and_grad(a.params(), &refs, &w, &targets);
    let (plain_parts, g2, _) = plain.loss_and_grad(plain.params(), &refs, &w, &targets);
    assert_eq!(parts.total, parts.td);
    assert_eq!(parts, plain_parts);
    assert_eq!(g1, g2);
    let w2 = vec![2.0; 8];
    let (doubled, _, _) = a.loss_and_grad(a.params(), &refs, &w2, &targets);
    assert!((doubled.td - 2.0 * parts.td).abs() < 1e-9);
}

#[test]
fn updates_step_once_and_sync_target_every_tau() {
    let cfg = AgentConfig { hidden: 8, target_sync: 3, batch_size: 4, ..AgentConfig::default() };
    let mut a = DqnAgent::new(cfg, AuxVariant::FullLabel, 5, 4, 3).unwrap();
    let mut buffer = PrioritizedBuffer::new(ReplayConfig::default()).unwrap();
    let mut rng = seed::rng(8, 0);
    for t in random_batch(&mut rng, 20, 2) {
        let demo = t.annotation != Annotation::None;
        buffer.push(t, demo);
    }
    let initial_target = a.target_params().to_vec();
    let before: Vec<f64> = (0..buffer.len()).map(|i| buffer.priority(i)).collect();
    for k in 1..=7u64 {
        let params_before = a.params().to_vec();
        let target_before = a.target_params().to_vec();
        a.update(&mut buffer, 0.4, &mut rng).unwrap();
        assert_eq!(a.updates(), k);
        assert_ne!(a.params(), &params_before[..]);
        if k % 3 == 0 {
            assert_eq!(a.target_params(), a.params());
        } else {
            assert_eq!(a.target_params(), &target_before[..]);
        }
    }
    assert_ne!(a.target_params(), &initial_target[..]);
    let after: Vec<f64> = (0..buffer.len()).map(|i| buffer.priority(i)).collect();
    assert_ne!(before, after);
}

#[test]
fn checkpoint_round_trip() {
    let a = agent(AuxVariant::ReducedLabel);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("q.json");
    a.save(&path, 1).unwrap();
    let b = DqnAgent::load(&path).unwrap();
    assert_eq!(a.params(), b.params());
    assert_eq!(b.variant(), AuxVariant::ReducedLabel);
    let s = vec![0.1, 0.2, 0.3, 0.4, 0.5];
    assert_eq!(a.q_values(&s), b.q_values(&s));
}

/// Chain 0-1-2-3; action 1 moves right, action 0 moves left (or stays at 0).
/// Entering state 3 pays 1 and ends the episode; every other step pays -0.1.
fn chain_step(s: usize, a: usize) -> (usize, f64, bool) {
    let next = if a == 1 { s + 1 } else { s.saturating_sub(1) };
    if next == 3 {
        (3, 1.0, true)
    } else {
        (next, -0.1, false)
    }
}

#[test]
fn tiny_mdp_matches_value_iteration() {
    let gamma = 0.9;
    let mut q_star = [[0.0f64; 2]; 3];
    for _ in 0..500 {
        let prev = q_star;
        for (s, row) in q_star.iter_mut().enumerate() {
            for (a, q) in row.iter_mut().enumerate() {
                let (n, r, done) = chain_step(s, a);
                let v = if done { 0.0 } else { prev[n][0].max(prev[n][1]) };
                *q = r + gamma * v;
            }
        }
    }
    let cfg = AgentConfig {
        gamma,
        hidden: 32,
        target_sync: 50,
        batch_size: 16,
        learning_rate: 0.003,
        ..AgentConfig::default()
    };
    let mut agent = DqnAgent::new(cfg, AuxVariant::None, 4, 2, 11).unwrap();
    let mut buffer = PrioritizedBuffer::new(ReplayConfig::default()).unwrap();
    for s in 0..3 {
        for a in 0..2 {
            let (n, r, done) = chain_step(s, a);
            buffer.push(
                Transition {
                    state: one_hot(s, 4),
                    action: a,
                    reward: r,
                    next_state: one_hot(n, 4),
                    terminal: done,
                    annotation: Annotation::None,
                },
                false,
            );
        }
    }
    let mut rng = seed::rng(12, 0);
    for _ in 0..6000 {
        agent.update(&mut buffer, 1.0, &mut rng).unwrap();
    }
    for (s, q) in q_star.iter().enumerate() {
        let learned = agent.q_values(&one_hot(s, 4));
        let v = learned[agent.greedy(&one_hot(s, 4))];
        let v_star = q[0].max(q[1]);
        assert!((v - v_star).abs() < 1e-2, "state {s}: {v} vs {v_star}");
        assert_eq!(agent.greedy(&one_hot(s, 4)), 1);
    }
}
