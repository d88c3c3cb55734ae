use git_historian::corpus::{generate, verify_scenario, ScenarioKind};

#[test]
fn every_kind_agrees_for_a_few_seeds() {
    let dir = tempfile::tempdir().unwrap();
    let mut failures = Vec::new();
    for kind in ScenarioKind::ALL {
        for seed in 0..4 {
            let (archive, truth) = generate(kind, seed, dir.path()).unwrap();
            let problems = verify_scenario(&archive, &truth).unwrap();
            if !problems.is_empty() {
                failures.push(format!("{kind} seed {seed}: {}", problems.join("; ")));
            }
        }
    }
    assert!(failures.is_empty(), "{}", failures.join("\n"));
}
