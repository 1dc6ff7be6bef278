use std::path::PathBuf;

use guinav::explorer::{explore, FsmEnvironment};
use guinav::taskgen::{
    generate_instructions, load_taxonomy, run_taskgen, RolloutOptions, TemplateGenerator,
    WalkPolicy,
};
use guinav::mllm::RuleJudge;
use guinav::trajectory::AuditVerdict;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

#[test]
fn desktop_taxonomy_has_nine_domains() {
    let tax = load_taxonomy(fixture("desktop_taxonomy.yaml")).unwrap();
    assert_eq!(tax.domains.len(), 9);
    let counts: Vec<usize> = tax.domains.iter().map(|d| d.sub_scenarios.len()).collect();
    assert_eq!(counts, [5, 5, 4, 5, 5, 3, 4, 5, 4]);
    assert_eq!(tax.leaves().len(), 40);
    assert_eq!(tax.domains[0].name, "Desktop Office");
    assert_eq!(tax.domains[8].sub_scenarios[3], "Privacy Shielding");
}

#[test]
fn mail_env_explores_fully() {
    let mut env = FsmEnvironment::load(fixture("mail_env.yaml")).unwrap();
    let x = explore(&mut env, 1000).unwrap();
    assert_eq!(x.states.len(), 16);
    assert!(!x.budget_exhausted);
}

#[test]
fn offline_taskgen_is_reproducible() {
    let tax = load_taxonomy(fixture("desktop_taxonomy.yaml")).unwrap();
    let env_path = fixture("mail_env.yaml");
    let run = || {
        let instrs = generate_instructions(&tax, &TemplateGenerator::new(5), 12, 3, 4).unwrap();
        assert_eq!(instrs.len(), 12);
        assert!(instrs.iter().all(|i| i.min_step_estimate >= 5));
        let policy = WalkPolicy {
            seed: 5,
            finish_at: Some(6),
        };
        let out = run_taskgen(
            &instrs,
            || FsmEnvironment::load(&env_path),
            &policy,
            &RuleJudge::RequireFinished,
            &RolloutOptions::default(),
            true,
            4,
        )
        .unwrap();
        assert_eq!(out.attempted, 12);
        assert_eq!(out.passed + out.failed, 12);
        assert!(out
            .trajectories
            .iter()
            .filter(|t| t.verdict == AuditVerdict::AutoPass)
            .all(|t| t.ends_with_finished()));
        guinav::trajectory::to_jsonl(&out.trajectories)
    };
    assert_eq!(run(), run());
}
