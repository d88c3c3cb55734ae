//! Randomized but valid alteration datasets for load and query tests.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::categorize::{dir_sub_category, DirFlags, MetadataField};
use crate::dataset::{DatasetRecord, FileStatus};
use crate::model::{hash_object, ObjectKind};

const BRANCHES: [&str; 8] = [
    "refs/heads/master",
    "refs/heads/main",
    "refs/heads/dev",
    "refs/heads/develop",
    "refs/pull/12/head",
    "refs/pull/907/head",
    "refs/heads/renovate/tokio-1.x",
    "refs/heads/feature/search",
];

const DIR_FLAGS: [DirFlags; 4] = [
    DirFlags { content_split: true, file_modified: false, file_removed: false },
    DirFlags { content_split: false, file_modified: true, file_removed: false },
    DirFlags { content_split: false, file_modified: false, file_removed: true },
    DirFlags { content_split: false, file_modified: true, file_removed: true },
];

/// `count` distinct valid records spread over `count / 20 + 1` origins.
pub fn synthetic_records(count: usize, seed: u64) -> Vec<DatasetRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let origins = count / 20 + 1;
    (0..count)
        .map(|i| {
            let origin = format!("https://forge.example/group{}/repo{}", i % 7, i % origins);
            let commit = hash_object(ObjectKind::Blob, format!("{seed}:{i}").as_bytes());
            let raw_branch = BRANCHES.choose(&mut rng).expect("non-empty").to_string();
            let snapshot_to = format!("{:040x}", rng.gen::<u128>());
            let snapshot_from = format!("{:040x}", rng.gen::<u128>());
            let (category, sub_category, files) = match rng.gen_range(0..10) {
                0 => ("DifferentBranchName", "DifferentBranchName".to_string(), Vec::new()),
                1..=5 => {
                    let mut fields: Vec<&str> = MetadataField::ALL
                        .iter()
                        .filter(|_| rng.gen_bool(0.4))
                        .map(|f| f.as_str())
                        .collect();
                    if fields.is_empty() {
                        fields.push(MetadataField::Message.as_str());
                    }
                    ("Meta", fields.join(","), Vec::new())
                }
                _ => {
                    let flags = *DIR_FLAGS.choose(&mut rng).expect("non-empty");
                    let status = if flags.content_split {
                        "Split"
                    } else if flags.file_removed {
                        "Removed"
                    } else {
                        "Modified"
                    };
                    let files = (0..rng.gen_range(1..=3))
                        .map(|j| FileStatus {
                            path: format!("src/file_{i}_{j}.rs"),
                            status: status.to_string(),
                        })
                        .collect();
                    ("Dir", dir_sub_category(&flags), files)
                }
            };
            DatasetRecord {
                origin,
                raw_branch,
                altered_commit: commit,
                snapshot_from,
                snapshot_to,
                category: category.to_string(),
                sub_category,
                files,
            }
        })
        .collect()
}
