//! Seeded random state machines for exercising the explorer.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::env::{EnvConfig, StateSpec, TransitionSpec};
use super::Element;
use crate::action::{BBox, Platform, ScreenDims};

const WIDTH: u32 = 400;
const ROW: u32 = 100;

/// A mobile app with `states` screens named `s0..`, each holding one to
/// three full-width buttons wired to random targets, sometimes plus a
/// back transition. Self-loops, cycles and unreachable screens all occur.
pub fn random_env_config(seed: u64, states: usize) -> EnvConfig {
    assert!(states >= 1, "need at least one state");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let specs = (0..states)
        .map(|i| {
            let buttons = rng.random_range(1..=3u32);
            let mut elements = Vec::new();
            let mut transitions = Vec::new();
            for j in 0..buttons {
                let top = j * ROW;
                elements.push(Element {
                    role: "button".into(),
                    label: format!("b{j}"),
                    bounds: BBox::new(0, top, WIDTH - 1, top + ROW - 1).expect("ordered"),
                    interactable: true,
                    attributes: Default::default(),
                    children: vec![],
                });
                transitions.push(TransitionSpec {
                    action: format!("Click(box=({}, {}))", WIDTH / 2, top + ROW / 2),
                    target: format!("s{}", rng.random_range(0..states)),
                });
            }
            if rng.random_bool(0.5) {
                transitions.push(TransitionSpec {
                    action: "PressBack()".into(),
                    target: format!("s{}", rng.random_range(0..states)),
                });
            }
            StateSpec {
                id: format!("s{i}"),
                title: None,
                screenshot: None,
                elements,
                transitions,
            }
        })
        .collect();
    EnvConfig {
        name: format!("mock-{seed}"),
        platform: Platform::Mobile,
        dims: ScreenDims::new(WIDTH, 3 * ROW).expect("positive"),
        start: "s0".into(),
        states: specs,
    }
}
