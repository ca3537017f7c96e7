use lpm_explore::agent::{Agent, AgentConfig, QTable};
use lpm_explore::env::{Action, Environment, GridMazeEnv, MazeConfig, NoiseMode};
use lpm_explore::explorer::{build_explorer, Explorer, ExplorerKind};
use lpm_explore::baselines::BaselineConfig;
use lpm_explore::lpm::LpmConfig;
use lpm_explore::numeric::rng::stream;
use proptest::prelude::*;
use rand::Rng as _;

/// Runs an agent in the maze for `steps` steps and returns its actions and Q-table.
fn maze_trace(kind: ExplorerKind, beta: f64, steps: u64) -> (Vec<usize>, Vec<f64>) {
    let mut env = GridMazeEnv::new(MazeConfig {
        noise_mode: NoiseMode::ActionNoise,
        ..MazeConfig::default()
    })
    .unwrap();
    let lpm = LpmConfig {
        update_cycle: 16,
        dynamics_hidden: vec![16],
        error_hidden: vec![8],
        queue_size: 20,
        ..LpmConfig::default()
    };
    let mut explorer: Box<dyn Explorer> =
        build_explorer(kind, env.observation_dim(), env.action_count(), &lpm, &BaselineConfig::matching(&lpm), 1).unwrap();
    let cfg = AgentConfig {
        beta,
        ..AgentConfig::default()
    };
    let mut agent = Agent::new(&cfg, env.state_count(), env.action_count(), steps).unwrap();
    let mut rng = stream(1, 7);
    let mut state = env.reset(1);
    let mut actions = Vec::new();
    for _ in 0..steps {
        let a = agent.act(state.latent_state_id, &mut rng).unwrap();
        let next = env.step(a).unwrap();
        let r = explorer.observe(&state.observation, a, &next.observation).unwrap();
        explorer.end_step().unwrap();
        agent
            .learn(state.latent_state_id, a, next.extrinsic_reward, r, next.latent_state_id, next.done)
            .unwrap();
        actions.push(a.index());
        state = next;
    }
    (actions, agent.q.values().to_vec())
}

#[test]
fn zero_beta_ignores_the_explorer() {
    let (a1, q1) = maze_trace(ExplorerKind::Lpm, 0.0, 2000);
    let (a2, q2) = maze_trace(ExplorerKind::Random, 0.0, 2000);
    assert_eq!(a1, a2);
    assert_eq!(q1, q2);
    let (a3, _) = maze_trace(ExplorerKind::Pe, 1.0, 2000);
    assert_ne!(a1, a3);
}

#[test]
fn q_values_stay_finite_over_a_million_updates() {
    let mut q = QTable::new(50, 4, 0.1, 0.99).unwrap();
    let mut rng = stream(3, 0);
    for _ in 0..1_000_000 {
        let s = rng.random_range(0..50);
        let a = Action::new(rng.random_range(0..4), 4).unwrap();
        let r = rng.random_range(-10.0..10.0);
        q.q_update(s, a, r, rng.random_range(0..50), rng.random_bool(0.01)).unwrap();
    }
    assert!(q.values().iter().all(|v| v.is_finite() && v.abs() <= 10.0 / 0.01 + 1e-9));
}

#[test]
fn non_finite_reward_rejected() {
    let mut q = QTable::new(2, 2, 0.1, 0.9).unwrap();
    let a = Action::new(0, 2).unwrap();
    assert!(q.q_update(0, a, f64::NAN, 1, false).is_err());
    assert!(q.q_update(0, a, f64::INFINITY, 1, false).is_err());
    assert!(q.values().iter().all(|&v| v == 0.0));
}

#[test]
fn extrinsic_agent_finds_the_goal() {
    let mut env = GridMazeEnv::new(MazeConfig {
        goal: Some((3, 3)),
        ..MazeConfig::default()
    })
    .unwrap();
    let cfg = AgentConfig {
        beta: 0.0,
        ..AgentConfig::default()
    };
    let steps = 60_000;
    let mut agent = Agent::new(&cfg, env.state_count(), env.action_count(), steps).unwrap();
    let mut rng = stream(5, 0);
    let mut state = env.reset(5);
    let mut episode = 0;
    for _ in 0..steps {
        let a = agent.act(state.latent_state_id, &mut rng).unwrap();
        let next = env.step(a).unwrap();
        agent
            .learn(state.latent_state_id, a, next.extrinsic_reward, 0.0, next.latent_state_id, next.done)
            .unwrap();
        state = if next.done {
            episode += 1;
            env.reset(5 + episode)
        } else {
            next
        };
    }
    assert!(episode > 0);
    // Greedy rollout from the start reaches the goal.
    let mut state = env.reset(0);
    let mut reached = false;
    for _ in 0..200 {
        let next = env.step(agent.q.greedy(state.latent_state_id)).unwrap();
        if next.done {
            reached = true;
            break;
        }
        state = next;
    }
    assert!(reached);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn epsilon_schedule_is_linear_then_flat(total in 5u64..100_000, probe in 0u64..200_000) {
        let cfg = AgentConfig::default();
        let s = cfg.schedule(total);
        let e = s.value(probe);
        prop_assert!((cfg.epsilon_end..=cfg.epsilon_start).contains(&e));
        prop_assert_eq!(s.value(0), cfg.epsilon_start);
        if probe >= s.decay_steps {
            prop_assert_eq!(e, cfg.epsilon_end);
        } else {
            prop_assert!(s.value(probe + 1) <= e);
        }
    }

    #[test]
    fn greedy_picks_lowest_index_among_ties(values in prop::collection::vec(-3i32..3, 1..6)) {
        let mut q = QTable::new(1, values.len(), 0.1, 0.9).unwrap();
        for (slot, v) in q.row_mut(0).iter_mut().zip(&values) {
            *slot = *v as f64;
        }
        let best = *values.iter().max().unwrap();
        let first = values.iter().position(|v| *v == best).unwrap();
        prop_assert_eq!(q.greedy(0).index(), first);
    }
}
