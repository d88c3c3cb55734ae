use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use chrono::Local;
use git_historian::analyze::{
    scan_license_changes, scan_secret_removals, LicenseFinding, SecretFinding, SecretPatterns,
    TemplateClassifier,
};
use git_historian::dataset::{analyze_pair, read_records, write_records, DatasetRecord};
use git_historian::db::{BranchFilter, Database};
use git_historian::detect::UnifiedName;
use git_historian::hooks::{self, HOOKS};
use git_historian::report::{distribution, render_distribution, report_file_name, saved_lines, CheckReport};
use git_historian::snapshot::{list_archives, list_snapshot_pairs, OriginArchive};
use git_historian::Error;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::{exit, state, CheckArgs, Format, GroupBy};

fn open_file(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::Io { path: path.to_path_buf(), source: e }.into())
}

pub fn load(path: &Path, workers: usize) -> Result<u8> {
    let input = BufReader::new(open_file(path)?);
    let mut db = Database::open(&state::database_path())?;
    let summary = db.load_records(input, workers)?;
    println!("inserted: {}", summary.inserted);
    println!("skipped: {}", summary.skipped_duplicates);
    println!("rejected: {}", summary.errors.len());
    println!("dataset version: {}", summary.dataset_version);
    for (line, reason) in &summary.errors {
        eprintln!("{}:{line}: {reason}", path.display());
    }
    Ok(if summary.errors.is_empty() { exit::OK } else { exit::USAGE })
}

/// A check result as printed: the report plus where its file was saved.
struct Rendered {
    report: CheckReport,
    saved_dir: String,
    saved_name: String,
}

impl Rendered {
    fn to_payload(&self) -> String {
        json!({
            "report": serde_json::from_str::<Value>(&self.report.to_payload()).expect("report is json"),
            "saved_dir": self.saved_dir,
            "saved_name": self.saved_name,
        })
        .to_string()
    }

    fn from_payload(payload: &str) -> Option<Rendered> {
        let value: Value = serde_json::from_str(payload).ok()?;
        Some(Rendered {
            report: CheckReport::from_payload(&value.get("report")?.to_string())?,
            saved_dir: value.get("saved_dir")?.as_str()?.to_string(),
            saved_name: value.get("saved_name")?.as_str()?.to_string(),
        })
    }

    fn emit(&self, args: &CheckArgs) -> u8 {
        match args.format {
            Format::Text => print!(
                "{}",
                self.report.render_text(args.verbose, &self.saved_dir, &self.saved_name)
            ),
            Format::Json => {
                print!("{}", self.report.records_json());
                eprint!("{}", saved_lines(&self.saved_dir, &self.saved_name));
            }
        }
        if self.report.records.is_empty() {
            exit::OK
        } else {
            exit::FOUND
        }
    }
}

fn dir_display(dir: &Path) -> String {
    let mut text = dir.display().to_string();
    if !text.ends_with('/') {
        text.push('/');
    }
    text
}

/// Queries the store, writes the report file and caches the result.
fn run_check(db: &Database, args: &CheckArgs, version: &str) -> Result<Rendered> {
    let rows = db.query_by_origin(&args.url, args.branch)?;
    let report = CheckReport::new(&args.url, args.branch, &rows);
    let dir = state::state_dir();
    fs::create_dir_all(&dir).map_err(|e| Error::Io { path: dir.clone(), source: e })?;
    let name = report_file_name(&args.url, Local::now().naive_local());
    let path = dir.join(&name);
    fs::write(&path, report.render_body(true)).map_err(|e| Error::Io { path: path.clone(), source: e })?;
    let rendered = Rendered {
        report,
        saved_dir: dir_display(&dir),
        saved_name: name,
    };
    state::cache().store(&args.url, args.branch.as_str(), version, &rendered.to_payload())?;
    Ok(rendered)
}

fn open_db() -> Result<(Database, String)> {
    let db = Database::open(&state::database_path())?;
    let version = db.dataset_version()?.unwrap_or_default();
    Ok((db, version))
}

pub fn check(args: &CheckArgs) -> Result<u8> {
    let (db, version) = open_db()?;
    Ok(run_check(&db, args, &version)?.emit(args))
}

pub fn check_cached(args: &CheckArgs, event: Option<&str>) -> Result<u8> {
    if let Some(event) = event {
        let trigger = HOOKS
            .iter()
            .find(|(hook, _)| *hook == event)
            .map(|(_, trigger)| *trigger)
            .unwrap_or("manual run");
        eprintln!(
            "git-historian: {event} ({trigger}), checking {} on {} branches",
            args.url, args.branch
        );
    }
    let (db, version) = open_db()?;
    if let Some(hit) = state::cache()
        .lookup(&args.url, args.branch.as_str(), &version)
        .and_then(|entry| Rendered::from_payload(&entry.payload))
    {
        eprintln!("(cached)");
        return Ok(hit.emit(args));
    }
    Ok(run_check(&db, args, &version)?.emit(args))
}

pub fn attach(repo: &Path, branch: BranchFilter, verbose: bool) -> Result<u8> {
    let exe = std::env::current_exe()
        .map(|p| p.display().to_string())
        .unwrap_or_else(|_| "git-historian".to_string());
    let attachment = hooks::attach(repo, branch, &exe)?;
    println!("  git-historian successfully attached to repository");
    if verbose {
        println!("  Repository: {}", repo.display());
        println!("  Remote URL: {}", attachment.remote_url);
        println!("  Hooks installed:");
        for (hook, trigger) in HOOKS {
            println!("  - {hook} ({trigger})");
        }
        for hook in &attachment.chained {
            println!("  Existing {hook} hook kept as {hook}{}", hooks::CHAIN_SUFFIX);
        }
    }
    Ok(exit::OK)
}

pub fn snapshot(url: &str, archive_root: Option<PathBuf>) -> Result<u8> {
    let root = archive_root.unwrap_or_else(state::archive_root);
    let mut archive = OriginArchive::open_or_init(&root, url)?;
    let snapshot = archive.capture()?;
    println!(
        "captured snapshot {} of '{url}': {} refs (snapshot #{})",
        snapshot.snapshot_id,
        snapshot.refs.len(),
        archive.snapshots.len()
    );
    Ok(exit::OK)
}

#[derive(Default)]
struct OriginResult {
    rows: Vec<DatasetRecord>,
    secrets: Vec<SecretFinding>,
    licenses: Vec<LicenseFinding>,
    pairs: usize,
}

fn detect_origin(archive: &OriginArchive) -> Result<OriginResult> {
    let pairs = match list_snapshot_pairs(archive) {
        Ok(pairs) => pairs,
        Err(Error::InsufficientSnapshots(origin)) => {
            eprintln!("warning: {origin}: fewer than 2 snapshots, skipped");
            return Ok(OriginResult::default());
        }
        Err(e) => return Err(e.into()),
    };
    let reader = archive.reader()?;
    let mut out = OriginResult::default();
    for (s1, s2) in pairs {
        let records = analyze_pair(s1, s2, &reader)
            .with_context(|| format!("{}: {} -> {}", archive.origin, s1.snapshot_id, s2.snapshot_id))?;
        out.secrets
            .extend(scan_secret_removals(&records, &reader, SecretPatterns::builtin()));
        out.licenses.extend(scan_license_changes(
            &records,
            &reader,
            TemplateClassifier::builtin(),
            false,
        ));
        out.rows.extend(records.iter().flat_map(|r| r.rows()));
        out.pairs += 1;
    }
    Ok(out)
}

fn default_findings(dataset: &Path) -> PathBuf {
    let mut name = dataset.as_os_str().to_owned();
    name.push(".findings.jsonl");
    PathBuf::from(name)
}

fn tagged(kind: &str, value: serde_json::Result<Value>) -> String {
    let mut value = value.expect("finding serializes");
    if let Value::Object(map) = &mut value {
        map.insert("kind".to_string(), Value::String(kind.to_string()));
    }
    value.to_string()
}

pub fn detect(archive_root: Option<PathBuf>, out: &Path, findings: Option<PathBuf>) -> Result<u8> {
    let root = archive_root.unwrap_or_else(state::archive_root);
    let archives = list_archives(&root)?;
    let results: Vec<OriginResult> = archives
        .par_iter()
        .map(detect_origin)
        .collect::<Result<_>>()?;

    let mut rows: Vec<DatasetRecord> = Vec::new();
    let mut secrets = Vec::new();
    let mut licenses = Vec::new();
    let mut pairs = 0;
    for result in results {
        rows.extend(result.rows);
        secrets.extend(result.secrets);
        licenses.extend(result.licenses);
        pairs += result.pairs;
    }
    rows.sort_by(|a, b| {
        (&a.origin, &a.raw_branch, &a.snapshot_to, a.altered_commit)
            .cmp(&(&b.origin, &b.raw_branch, &b.snapshot_to, b.altered_commit))
    });

    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |e: std::io::Error| Error::Io { path, source: e }
    };
    let mut writer = BufWriter::new(File::create(out).map_err(io(out))?);
    write_records(&mut writer, &rows).map_err(io(out))?;
    writer.flush().map_err(io(out))?;

    let findings_path = findings.unwrap_or_else(|| default_findings(out));
    let mut writer = BufWriter::new(File::create(&findings_path).map_err(io(&findings_path))?);
    for finding in &secrets {
        writeln!(writer, "{}", tagged("secret", serde_json::to_value(finding))).map_err(io(&findings_path))?;
    }
    for finding in &licenses {
        writeln!(writer, "{}", tagged("license", serde_json::to_value(finding))).map_err(io(&findings_path))?;
    }
    writer.flush().map_err(io(&findings_path))?;

    println!("analyzed {} origins, {pairs} snapshot pairs", archives.len());
    print!(
        "{}",
        render_distribution("category", &distribution(rows.iter().map(|r| r.category.clone())))
    );
    println!("records: {}", rows.len());
    println!("secret findings: {}", secrets.len());
    for finding in &secrets {
        println!("  {} {} ({})", finding.origin, finding.path, finding.matched.label);
    }
    println!("license changes: {}", licenses.len());
    for finding in &licenses {
        println!("  {} {} {}", finding.origin, finding.path, finding.change_class);
    }
    println!("dataset written to: {}", out.display());
    println!("findings written to: {}", findings_path.display());
    Ok(exit::OK)
}

fn branch_group(record: &DatasetRecord) -> String {
    match record.unified_branch().unified {
        UnifiedName::Other(_) => "other".to_string(),
        name => name.label().to_string(),
    }
}

pub fn report(dataset: &Path, group_by: GroupBy, findings: Option<PathBuf>) -> Result<u8> {
    let records = read_records(BufReader::new(open_file(dataset)?))?;
    let (title, keys): (&str, Vec<String>) = match group_by {
        GroupBy::Branch => ("branch", records.iter().map(branch_group).collect()),
        GroupBy::Category => ("category", records.iter().map(|r| r.category.clone()).collect()),
        GroupBy::LicenseChange => {
            let path = findings.unwrap_or_else(|| default_findings(dataset));
            let text = fs::read_to_string(&path).map_err(|e| Error::Io { path: path.clone(), source: e })?;
            let mut keys = Vec::new();
            for (index, line) in text.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                let value: Value = serde_json::from_str(line).map_err(|e| Error::MalformedRecord {
                    line: index + 1,
                    reason: e.to_string(),
                })?;
                if value.get("kind").and_then(Value::as_str) != Some("license") {
                    continue;
                }
                let class = value
                    .get("change_class")
                    .and_then(Value::as_str)
                    .ok_or_else(|| Error::MalformedRecord {
                        line: index + 1,
                        reason: "license finding without change_class".into(),
                    })?;
                keys.push(class.to_string());
            }
            ("license change", keys)
        }
    };
    print!("{}", render_distribution(title, &distribution(keys)));
    Ok(exit::OK)
}
