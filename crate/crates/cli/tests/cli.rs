//! End-to-end runs of the `git-historian` binary.

use std::fs;
use std::os::unix::fs::PermissionsExt;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use git_historian::corpus::{generate, LicenseVariant, ScenarioKind};
use git_historian::corpus::synthetic::synthetic_records;
use git_historian::dataset::{read_records, write_records, DatasetRecord};
use git_historian::model::{hash_object, ObjectKind};
use serde_json::Value;

struct Env {
    state: tempfile::TempDir,
}

impl Env {
    fn new() -> Env {
        Env { state: tempfile::tempdir().unwrap() }
    }

    fn path(&self) -> &Path {
        self.state.path()
    }

    fn command(&self, args: &[&str]) -> Command {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_git-historian"));
        cmd.args(args)
            .env("GIT_HISTORIAN_STATE_DIR", self.path().join("state"))
            .env_remove("GIT_HISTORIAN_DB")
            .env("GIT_CONFIG_GLOBAL", "/dev/null")
            .env("GIT_CONFIG_NOSYSTEM", "1");
        cmd
    }

    fn run(&self, args: &[&str]) -> Output {
        self.command(args).output().unwrap()
    }

    fn write(&self, name: &str, records: &[DatasetRecord]) -> String {
        let path = self.path().join(name);
        let mut bytes = Vec::new();
        write_records(&mut bytes, records).unwrap();
        fs::write(&path, bytes).unwrap();
        path.to_str().unwrap().to_string()
    }
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn git(dir: &Path, args: &[&str]) {
    let out = Command::new("git")
        .current_dir(dir)
        .args(args)
        .env("GIT_CONFIG_GLOBAL", "/dev/null")
        .env("GIT_CONFIG_NOSYSTEM", "1")
        .env("GIT_AUTHOR_NAME", "Ada")
        .env("GIT_AUTHOR_EMAIL", "ada@example.com")
        .env("GIT_COMMITTER_NAME", "Ada")
        .env("GIT_COMMITTER_EMAIL", "ada@example.com")
        .env("GIT_AUTHOR_DATE", "2023-01-01T00:00:00+0000")
        .env("GIT_COMMITTER_DATE", "2023-01-01T00:00:00+0000")
        .output()
        .unwrap();
    assert!(out.status.success(), "git {args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn record(i: usize, branch: &str, category: &str, sub: &str) -> DatasetRecord {
    DatasetRecord {
        origin: "https://forge.example/team/app".into(),
        raw_branch: branch.into(),
        altered_commit: hash_object(ObjectKind::Blob, format!("{i}").as_bytes()),
        snapshot_from: "1".repeat(40),
        snapshot_to: "2".repeat(40),
        category: category.into(),
        sub_category: sub.into(),
        files: Vec::new(),
    }
}

// ------------------------------------------------------------------ load

#[test]
fn load_reports_counts_and_deduplicates() {
    let env = Env::new();
    let path = env.write("ten.jsonl", &synthetic_records(10, 3));
    let first = env.run(&["load", &path]);
    assert_eq!(code(&first), 0);
    assert!(stdout(&first).contains("inserted: 10\n"), "{}", stdout(&first));
    let second = env.run(&["load", &path]);
    assert_eq!(code(&second), 0);
    assert!(stdout(&second).contains("inserted: 0\nskipped: 10\n"), "{}", stdout(&second));
}

#[test]
fn load_failures_have_distinct_exit_codes() {
    let env = Env::new();
    let missing = env.path().join("absent.jsonl");
    assert_eq!(code(&env.run(&["load", missing.to_str().unwrap()])), 3);

    let bad = env.path().join("bad.jsonl");
    let mut lines = fs::read_to_string(env.write("one.jsonl", &synthetic_records(1, 0))).unwrap();
    lines.push_str("{\"origin\": 5}\n");
    fs::write(&bad, lines).unwrap();
    let out = env.run(&["load", bad.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(stdout(&out).contains("inserted: 1\n") && stdout(&out).contains("rejected: 1\n"));
    assert!(String::from_utf8_lossy(&out.stderr).contains(":2:"));

    assert_eq!(code(&env.run(&["load"])), 2);
}

// ----------------------------------------------------------------- check

#[test]
fn clean_origin_reports_nothing() {
    let env = Env::new();
    env.run(&["load", &env.write("d.jsonl", &[record(0, "refs/heads/main", "Meta", "Message")])]);
    let out = env.run(&["check", "https://forge.example/team/other", "--branch", "all"]);
    assert_eq!(code(&out), 0);
    assert_eq!(
        stdout(&out).lines().nth(1),
        Some("Found 0 altered history records for 'https://forge.example/team/other'")
    );
}

#[test]
fn json_and_text_list_the_same_records() {
    let env = Env::new();
    let records = vec![
        record(1, "refs/heads/main", "Meta", "Author,Message"),
        record(2, "refs/heads/dev", "DifferentBranchName", "DifferentBranchName"),
        record(3, "refs/heads/main", "Meta", "Date"),
    ];
    env.run(&["load", &env.write("d.jsonl", &records)]);
    let origin = "https://forge.example/team/app";
    let text = env.run(&["check", origin, "--branch", "all", "--verbose"]);
    let json = env.run(&["check", origin, "--branch", "all", "--format", "json"]);
    assert_eq!((code(&text), code(&json)), (1, 1));
    let parsed: Vec<Value> = serde_json::from_str(&stdout(&json)).unwrap();
    assert_eq!(parsed.len(), 3);
    let text = stdout(&text);
    assert!(text.contains("Found 3 altered history records"));
    for (i, row) in parsed.iter().enumerate() {
        let commit = row["altered_commit"].as_str().unwrap();
        assert!(text.contains(&format!("Record #{}:", i + 1)));
        assert!(text.contains(&format!("Altered Commit: {}...", &commit[..15])));
        assert!(text.contains(&format!("Sub Category: {}", row["sub_category"].as_str().unwrap())));
    }
    // main rows come before development rows
    assert_eq!(parsed[2]["branch_name"], "refs/heads/dev");

    let main_only = env.run(&["check", origin, "--format", "json"]);
    let parsed: Vec<Value> = serde_json::from_str(&stdout(&main_only)).unwrap();
    assert_eq!(parsed.len(), 2);
}

// ------------------------------------------------------- detect / report

fn corpus(env: &Env, kinds: &[(ScenarioKind, u64)]) -> PathBuf {
    let root = env.path().join("archives");
    for (kind, seed) in kinds {
        generate(*kind, *seed, &root).unwrap();
    }
    root
}

fn detect(env: &Env, root: &Path) -> (Output, Vec<DatasetRecord>, Vec<Value>) {
    let out_path = env.path().join("detected.jsonl");
    let out = env.run(&[
        "detect",
        "--archive-root",
        root.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let rows = read_records(fs::read(&out_path).unwrap().as_slice()).unwrap();
    let findings = fs::read_to_string(env.path().join("detected.jsonl.findings.jsonl"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    (out, rows, findings)
}

#[test]
fn detect_on_generated_corpora() {
    let env = Env::new();
    let (_, rows, findings) = detect(&env, &corpus(&env, &[(ScenarioKind::AmendMessage, 1)]));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].category, "Meta");
    assert!(rows[0].sub_category.split(',').any(|f| f == "Message"));
    assert!(findings.is_empty());

    let env = Env::new();
    let (out, rows, _) = detect(&env, &corpus(&env, &[(ScenarioKind::NoOp, 1)]));
    assert!(rows.is_empty());
    assert!(stdout(&out).contains("records: 0\n"));

    let env = Env::new();
    let (out, rows, findings) = detect(&env, &corpus(&env, &[(ScenarioKind::SecretPurge, 1)]));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].category, "Dir");
    assert_eq!(findings.len(), 1);
    assert_eq!(findings[0]["kind"], "secret");
    assert!(stdout(&out).contains("secret findings: 1\n"));
}

#[test]
fn report_groupings() {
    let env = Env::new();
    let mut records = Vec::new();
    for i in 0..100 {
        let branch = match i {
            0..=49 => "refs/heads/main",
            50..=79 => "refs/heads/develop",
            _ => "refs/heads/topic/x",
        };
        records.push(record(i, branch, "Meta", "Message"));
    }
    let dataset = env.write("mix.jsonl", &records);
    let out = env.run(&["report", "--dataset", &dataset, "--group-by", "branch"]);
    assert_eq!(code(&out), 0);
    let lines: Vec<Vec<String>> = stdout(&out)
        .lines()
        .skip(1)
        .map(|l| l.split_whitespace().map(String::from).collect())
        .collect();
    assert_eq!(
        lines,
        vec![
            vec!["main", "50", "50.00%"],
            vec!["development", "30", "30.00%"],
            vec!["other", "20", "20.00%"],
        ]
    );

    let out = env.run(&["report", "--dataset", &dataset, "--group-by", "category"]);
    assert_eq!(stdout(&out).lines().nth(1).unwrap().split_whitespace().collect::<Vec<_>>(), ["Meta", "100", "100.00%"]);

    let empty = env.write("empty.jsonl", &[]);
    let out = env.run(&["report", "--dataset", &empty, "--group-by", "category"]);
    assert_eq!(stdout(&out), "no records\n");
}

#[test]
fn license_change_grouping_reads_findings() {
    let env = Env::new();
    let root = corpus(
        &env,
        &[
            (ScenarioKind::LicenseRewrite(LicenseVariant::Full), 2),
            (ScenarioKind::LicenseRewrite(LicenseVariant::Update), 2),
        ],
    );
    let (_, _, findings) = detect(&env, &root);
    assert_eq!(findings.iter().filter(|f| f["kind"] == "license").count(), 2);
    let dataset = env.path().join("detected.jsonl");
    let out = env.run(&["report", "--dataset", dataset.to_str().unwrap(), "--group-by", "license-change"]);
    assert_eq!(code(&out), 0);
    let body = stdout(&out);
    assert!(body.starts_with("license change"));
    assert!(body.contains("FullChange") && body.contains("LicenseUpdate"), "{body}");
}

// -------------------------------------------------------------- snapshot

#[test]
fn snapshot_then_detect_a_force_push() {
    let env = Env::new();
    let bare = env.path().join("remote.git");
    let work = env.path().join("work");
    fs::create_dir_all(&work).unwrap();
    git(env.path(), &["init", "-q", "--bare", "-b", "main", bare.to_str().unwrap()]);
    git(&work, &["init", "-q", "-b", "main"]);
    for i in 0..2 {
        fs::write(work.join("a.txt"), format!("{i}\n")).unwrap();
        git(&work, &["add", "-A"]);
        git(&work, &["commit", "-q", "-m", &format!("c{i}")]);
    }
    git(&work, &["push", "-q", bare.to_str().unwrap(), "main"]);
    let archives = env.path().join("archives");
    let url = bare.to_str().unwrap();
    let args = ["snapshot", url, "--archive-root", archives.to_str().unwrap()];
    let first = env.run(&args);
    assert_eq!(code(&first), 0, "{}", String::from_utf8_lossy(&first.stderr));
    assert!(stdout(&first).contains("(snapshot #1)"));

    git(&work, &["commit", "-q", "--amend", "-m", "c1 reworded"]);
    git(&work, &["push", "-q", "--force", bare.to_str().unwrap(), "main"]);
    assert!(stdout(&env.run(&args)).contains("(snapshot #2)"));

    let (_, rows, _) = detect(&env, &archives);
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].origin, url);
    assert_eq!(rows[0].sub_category, "Message");

    let nowhere = env.path().join("nowhere.git");
    let out = env.run(&["snapshot", nowhere.to_str().unwrap(), "--archive-root", archives.to_str().unwrap()]);
    assert_eq!(code(&out), 6);
}

// ---------------------------------------------------------------- attach

#[test]
fn attach_requires_a_repository_with_a_remote() {
    let env = Env::new();
    let plain = env.path().join("plain");
    fs::create_dir_all(&plain).unwrap();
    assert_eq!(code(&env.run(&["attach", plain.to_str().unwrap()])), 5);
    git(&plain, &["init", "-q"]);
    assert_eq!(code(&env.run(&["attach", plain.to_str().unwrap()])), 5);
}

#[test]
fn chained_hook_keeps_its_exit_status() {
    let env = Env::new();
    let repo = env.path().join("repo");
    fs::create_dir_all(&repo).unwrap();
    git(&repo, &["init", "-q"]);
    git(&repo, &["remote", "add", "origin", "https://forge.example/team/app"]);
    let hook = repo.join(".git/hooks/post-merge");
    let ran = env.path().join("original-ran");
    fs::write(&hook, format!("#!/bin/sh\ntouch '{}'\nexit 3\n", ran.display())).unwrap();
    fs::set_permissions(&hook, fs::Permissions::from_mode(0o755)).unwrap();

    let out = env.run(&["attach", repo.to_str().unwrap(), "--branch", "all", "--verbose"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("post-merge.pre-githistorian"));

    let run_hook = || {
        Command::new(&hook)
            .arg("0")
            .current_dir(&repo)
            .env("GIT_HISTORIAN_STATE_DIR", env.path().join("state"))
            .env_remove("GIT_HISTORIAN_DB")
            .output()
            .unwrap()
    };
    // no records known: the check passes, the original hook's failure wins
    let out = run_hook();
    assert_eq!(code(&out), 3);
    assert!(ran.exists());
    assert!(String::from_utf8_lossy(&out.stderr).contains("post-merge"));

    // a passing original lets the check's own status through
    fs::write(repo.join(".git/hooks/post-merge.pre-githistorian"), "#!/bin/sh\nexit 0\n").unwrap();
    env.run(&["load", &env.write("d.jsonl", &[record(0, "refs/heads/main", "Meta", "Message")])]);
    let out = run_hook();
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).contains("Found 1 altered history records"));
}
