use std::collections::{BTreeMap, HashMap};
use std::io::Cursor;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use guinav::action::sample::random_action;
use guinav::explorer::{hash_state, Element, UIState};
use guinav::grpo::{
    clipped_surrogate, group_advantages, grpo_objective, kl_penalty, Rollout, RolloutGroup,
};
use guinav::reward::{coord_reward, inside_bbox_reward, token_f1, tokenize};
use guinav::trajectory::{read_trajectories, to_jsonl, Step, Trajectory};
use guinav::{
    extract_response_sections, parse_action, Action, BBox, Platform, Point, RewardConfig,
    ScreenDims, TagConfig,
};

fn platform() -> impl Strategy<Value = Platform> {
    prop::sample::select(Platform::ALL.to_vec())
}

fn dims() -> impl Strategy<Value = ScreenDims> {
    (1u32..4000, 1u32..4000).prop_map(|(w, h)| ScreenDims::new(w, h).unwrap())
}

/// (platform, dims, action) with the action valid on both.
fn action() -> impl Strategy<Value = (Platform, ScreenDims, Action)> {
    (platform(), dims(), any::<u64>()).prop_map(|(p, d, seed)| {
        let a = random_action(&mut ChaCha8Rng::seed_from_u64(seed), p, d);
        (p, d, a)
    })
}

fn words() -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(
        prop::sample::select(vec!["open", "the", "app", "Wi-Fi", "设置", "中文", "検索", "x", "42"]),
        0..8,
    )
    .prop_map(|v| v.into_iter().map(String::from).collect())
}

fn bag(text: &str) -> HashMap<String, usize> {
    let mut m = HashMap::new();
    for t in tokenize(text) {
        *m.entry(t).or_insert(0) += 1;
    }
    m
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn serialize_then_parse_is_identity((p, _d, a) in action()) {
        let text = a.serialize();
        let back = parse_action(&text, p).unwrap();
        prop_assert_eq!(&back, &a);
        prop_assert_eq!(back.serialize(), text);
    }

    #[test]
    fn serialization_is_injective((p, _d, a) in action(), seed in any::<u64>()) {
        let b = random_action(&mut ChaCha8Rng::seed_from_u64(seed), p, ScreenDims::new(50, 50).unwrap());
        prop_assert_eq!(a == b, a.serialize() == b.serialize());
    }

    #[test]
    fn parse_is_total_and_canonical(text in ".{0,60}", p in platform()) {
        if let Ok(a) = parse_action(&text, p) {
            prop_assert_eq!(parse_action(&a.serialize(), p).unwrap(), a);
        }
    }

    #[test]
    fn coord_reward_is_monotone(
        d in dims(),
        gx in 0u32..4000, gy in 0u32..4000,
        dx in 0u32..4000, dy in 0u32..4000,
        ex in 0u32..2000, ey in 0u32..2000,
    ) {
        let cfg = RewardConfig::default();
        let gt = Point::new(gx, gy);
        let near = Point::new(gx + dx, gy + dy);
        let far = Point::new(gx + dx + ex, gy + dy + ey);
        let (rn, rf) = (coord_reward(near, gt, d, &cfg), coord_reward(far, gt, d, &cfg));
        prop_assert!(rf <= rn);
        prop_assert!([0.0, 0.5, 1.0].contains(&rn));
        prop_assert_eq!(coord_reward(gt, gt, d, &cfg), 1.0);
    }

    #[test]
    fn f1_matches_multiset_definition(a in words(), b in words()) {
        let (pa, pb) = (a.join(" "), b.join(" "));
        let (ba, bb) = (bag(&pa), bag(&pb));
        let (na, nb) = (ba.values().sum::<usize>(), bb.values().sum::<usize>());
        let common: usize = ba.iter().map(|(k, c)| (*c).min(*bb.get(k).unwrap_or(&0))).sum();
        let expect = if na == 0 && nb == 0 {
            1.0
        } else if common == 0 {
            0.0
        } else {
            2.0 * common as f64 / (na + nb) as f64
        };
        let got = token_f1(&pa, &pb);
        prop_assert!((got - expect).abs() < 1e-12, "{} vs {}", got, expect);
        prop_assert!((got - token_f1(&pb, &pa)).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&got));
    }

    #[test]
    fn f1_ignores_word_order(a in words(), b in words(), k in 0usize..8) {
        let mut r = a.clone();
        if !r.is_empty() {
            let n = k % r.len();
            r.rotate_left(n);
        }
        let (pa, pr, pb) = (a.join(" "), r.join(" "), b.join(" "));
        prop_assert!((token_f1(&pa, &pb) - token_f1(&pr, &pb)).abs() < 1e-12);
    }

    #[test]
    fn advantages_are_standardized(rewards in prop::collection::vec(-100.0f64..100.0, 2..17)) {
        let adv = group_advantages(&rewards).unwrap();
        prop_assert_eq!(adv.len(), rewards.len());
        let n = adv.len() as f64;
        let mean = adv.iter().sum::<f64>() / n;
        prop_assert!(mean.abs() < 1e-9);
        let var = adv.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / n;
        let degenerate = adv.iter().all(|a| *a == 0.0);
        prop_assert!(degenerate || (var.sqrt() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn advantages_ignore_shift_and_scale(
        rewards in prop::collection::vec(-10.0f64..10.0, 2..17),
        c in -50.0f64..50.0,
        s in 0.1f64..10.0,
    ) {
        let base = group_advantages(&rewards).unwrap();
        let moved: Vec<f64> = rewards.iter().map(|r| s * r + c).collect();
        for (x, y) in base.iter().zip(group_advantages(&moved).unwrap()) {
            prop_assert!((x - y).abs() < 1e-6, "{} vs {}", x, y);
        }
    }

    #[test]
    fn objective_ignores_reward_shift(
        spec in prop::collection::vec(
            (prop::collection::vec((-5.0f64..0.0, -5.0f64..0.0, -5.0f64..0.0), 1..6), 0.0f64..1.0),
            2..9,
        ),
        c in -100.0f64..100.0,
    ) {
        let build = |shift: f64| RolloutGroup::new(spec.iter().map(|(toks, r)| Rollout {
            logp_new: toks.iter().map(|t| t.0).collect(),
            logp_old: toks.iter().map(|t| t.1).collect(),
            logp_ref: toks.iter().map(|t| t.2).collect(),
            reward: r + shift,
        }).collect());
        let a = grpo_objective(&build(0.0)).unwrap();
        let b = grpo_objective(&build(c)).unwrap();
        prop_assert!((a - b).abs() < 1e-9, "{} vs {}", a, b);
    }

    #[test]
    fn surrogate_and_kl_bounds(new in -10.0f64..0.0, old in -10.0f64..0.0, adv in -3.0f64..3.0) {
        let rho = (new - old).exp();
        prop_assert!(clipped_surrogate(new, old, adv, 0.2) <= rho * adv + 1e-12);
        prop_assert!(kl_penalty(new, old) >= 0.0);
        prop_assert_eq!(kl_penalty(new, new), 0.0);
    }

    #[test]
    fn inside_bbox_matches_membership(
        x1 in 0u32..50, y1 in 0u32..50, w in 0u32..50, h in 0u32..50,
        px in 0u32..120, py in 0u32..120,
    ) {
        let b = BBox::new(x1, y1, x1 + w, y1 + h).unwrap();
        let inside = px >= x1 && px <= x1 + w && py >= y1 && py <= y1 + h;
        prop_assert_eq!(inside_bbox_reward(Point::new(px, py), &b), if inside { 1.0 } else { 0.0 });
    }

    #[test]
    fn rendered_responses_extract(
        (p, _d, a) in action(),
        obs in "[a-zA-Z0-9 .,]{0,30}",
        thought in "[a-zA-Z0-9 .,]{0,30}",
    ) {
        let tags = TagConfig::default();
        let r = extract_response_sections(&tags.render(&obs, &thought, &a), &tags, p).unwrap();
        prop_assert_eq!(r.action, a);
        prop_assert_eq!(r.observation, obs.trim());
        prop_assert_eq!(r.thought, thought.trim());
    }

    #[test]
    fn trajectories_survive_jsonl(
        n in 1usize..5,
        goal in ".{0,20}",
        seeds in prop::collection::vec(any::<u64>(), 1..6),
    ) {
        let d = ScreenDims::new(1080, 2400).unwrap();
        let trajs: Vec<Trajectory> = (0..n).map(|i| {
            let mut t = Trajectory::new(format!("t{i}"), Platform::Mobile, goal.clone());
            for (j, s) in seeds.iter().enumerate() {
                let mut a = random_action(&mut ChaCha8Rng::seed_from_u64(*s ^ i as u64), Platform::Mobile, d);
                if matches!(a, Action::Finished { .. }) {
                    a = Action::Wait;
                }
                t.steps.push(Step {
                    index: j,
                    screenshot_ref: format!("s{j}.png"),
                    dims: d,
                    observation: format!("obs {j}"),
                    thought: String::new(),
                    action: a,
                    target_box: None,
                    description: Some(goal.clone()),
                });
            }
            t.metadata.insert("k".into(), goal.clone());
            t
        }).collect();
        let back = read_trajectories(Cursor::new(to_jsonl(&trajs))).unwrap();
        prop_assert_eq!(back, trajs);
    }

    #[test]
    fn state_hash_ignores_layout_noise(label in "[a-z]{1,8}", other in "[a-z]{1,8}", shot in "[a-z]{1,8}") {
        let el = |label: &str| Element {
            role: "button".into(),
            label: label.into(),
            bounds: BBox::new(0, 0, 10, 10).unwrap(),
            interactable: true,
            attributes: BTreeMap::new(),
            children: vec![],
        };
        let state = |label: &str, shot: &str| UIState {
            platform: Platform::Web,
            dims: ScreenDims::new(100, 100).unwrap(),
            screenshot_ref: shot.into(),
            root: Element { children: vec![el(label)], ..el("root") },
        };
        let a = hash_state(&state(&label, "a.png"));
        prop_assert_eq!(&a, &hash_state(&state(&format!("  {label} "), &shot)));
        prop_assert_eq!(a == hash_state(&state(&other, "a.png")), label == other);
    }
}
