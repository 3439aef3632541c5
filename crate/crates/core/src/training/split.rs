//! Dataset splitting for k-fold cross validation.

use crate::audio_io::{snippet_id, DatasetManifest};
use crate::error::{Error, Result};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitMode {
    /// Snippets shuffled independently of their songs.
    RandomSnippet,
    /// Songs sorted by id and dealt contiguously, so no song contributes
    /// snippets to both train and test of the same fold.
    SongOrdered,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fold {
    pub train: Vec<String>,
    pub test: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub mode: SplitMode,
    pub k: usize,
    pub folds: Vec<Fold>,
    pub seed: u64,
    /// Snippet id -> song id, carried for leakage checks and song-level votes.
    pub snippet_songs: BTreeMap<String, String>,
}

/// Deal the snippet set into `k` folds.
///
/// `RandomSnippet`: a seeded shuffle dealt round-robin. `SongOrdered`: songs
/// sorted by id, dealt contiguously, all snippets following their song.
pub fn make_splits(
    manifest: &DatasetManifest,
    snippets_per_song: usize,
    mode: SplitMode,
    k: usize,
    seed: u64,
) -> Result<SplitPlan> {
    if manifest.entries.is_empty() {
        return Err(Error::Manifest("empty manifest".into()));
    }
    if k < 2 {
        return Err(Error::Config(format!("fold count must be >= 2, got {k}")));
    }
    if snippets_per_song == 0 {
        return Err(Error::Config("snippets_per_song must be positive".into()));
    }

    let mut snippet_songs = BTreeMap::new();
    for e in &manifest.entries {
        for j in 0..snippets_per_song {
            snippet_songs.insert(snippet_id(&e.song_id, j), e.song_id.clone());
        }
    }

    let test_sets: Vec<Vec<String>> = match mode {
        SplitMode::RandomSnippet => {
            let mut ids: Vec<String> = manifest
                .entries
                .iter()
                .flat_map(|e| (0..snippets_per_song).map(|j| snippet_id(&e.song_id, j)))
                .collect();
            if ids.len() < k {
                return Err(Error::Config(format!(
                    "{k} folds exceed {} snippets",
                    ids.len()
                )));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            ids.shuffle(&mut rng);
            let mut sets = vec![Vec::new(); k];
            for (i, id) in ids.into_iter().enumerate() {
                sets[i % k].push(id);
            }
            sets
        }
        SplitMode::SongOrdered => {
            let mut songs: Vec<String> =
                manifest.entries.iter().map(|e| e.song_id.clone()).collect();
            songs.sort();
            songs.dedup();
            if songs.len() < k {
                return Err(Error::Config(format!(
                    "{k} folds exceed {} songs",
                    songs.len()
                )));
            }
            // Contiguous deal: the first (n mod k) folds get one extra song.
            let n = songs.len();
            let base = n / k;
            let extra = n % k;
            let mut sets = Vec::with_capacity(k);
            let mut pos = 0usize;
            for fold in 0..k {
                let size = base + usize::from(fold < extra);
                let fold_songs = &songs[pos..pos + size];
                pos += size;
                let mut ids = Vec::with_capacity(size * snippets_per_song);
                for song in fold_songs {
                    for j in 0..snippets_per_song {
                        ids.push(snippet_id(song, j));
                    }
                }
                sets.push(ids);
            }
            sets
        }
    };

    let all: Vec<String> = snippet_songs.keys().cloned().collect();
    let folds = test_sets
        .iter()
        .map(|test| {
            let test_lookup: std::collections::HashSet<&String> = test.iter().collect();
            let train = all
                .iter()
                .filter(|id| !test_lookup.contains(id))
                .cloned()
                .collect();
            Fold {
                train,
                test: test.clone(),
            }
        })
        .collect();

    Ok(SplitPlan {
        mode,
        k,
        folds,
        seed,
        snippet_songs,
    })
}

impl SplitPlan {
    /// Verify the partition property and, for song-ordered plans, that no
    /// song leaks across the train/test boundary of any fold.
    pub fn validate(&self) -> Result<()> {
        let universe: std::collections::BTreeSet<&String> = self.snippet_songs.keys().collect();
        let mut seen_in_test = std::collections::BTreeSet::new();
        for (i, fold) in self.folds.iter().enumerate() {
            for id in &fold.test {
                if !seen_in_test.insert(id) {
                    return Err(Error::Data(format!("snippet {id} tested in two folds")));
                }
            }
            let train: std::collections::BTreeSet<&String> = fold.train.iter().collect();
            let test: std::collections::BTreeSet<&String> = fold.test.iter().collect();
            if train.intersection(&test).next().is_some() {
                return Err(Error::Data(format!("fold {i}: train/test overlap")));
            }
            let union: std::collections::BTreeSet<&String> = train.union(&test).cloned().collect();
            if union != universe {
                return Err(Error::Data(format!("fold {i}: not a partition")));
            }
            if self.mode == SplitMode::SongOrdered {
                let train_songs: std::collections::BTreeSet<&String> = fold
                    .train
                    .iter()
                    .filter_map(|id| self.snippet_songs.get(id))
                    .collect();
                for id in &fold.test {
                    if let Some(song) = self.snippet_songs.get(id) {
                        if train_songs.contains(song) {
                            return Err(Error::Data(format!(
                                "fold {i}: song {song} leaks across the split"
                            )));
                        }
                    }
                }
            }
        }
        if seen_in_test.len() != universe.len() {
            return Err(Error::Data("some snippets never tested".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio_io::ManifestEntry;

    fn manifest(n_songs: usize) -> DatasetManifest {
        let entries: Vec<ManifestEntry> = (0..n_songs)
            .map(|i| ManifestEntry {
                path: format!("song{i:04}.wav"),
                label: format!("class{}", i % 3),
                song_id: format!("song{i:04}"),
            })
            .collect();
        let mut classes: Vec<String> = entries.iter().map(|e| e.label.clone()).collect();
        classes.sort();
        classes.dedup();
        DatasetManifest { entries, classes }
    }

    #[test]
    fn song_ordered_fold_sizes_differ_by_at_most_one() {
        // A large corpus: 1886 songs over 10 folds.
        let m = manifest(1886);
        let plan = make_splits(&m, 1, SplitMode::SongOrdered, 10, 0).unwrap();
        plan.validate().unwrap();
        let sizes: Vec<usize> = plan.folds.iter().map(|f| f.test.len()).collect();
        assert!(sizes.iter().all(|&s| s == 188 || s == 189), "{sizes:?}");
        assert_eq!(sizes.iter().sum::<usize>(), 1886);
    }

    #[test]
    fn two_folds_on_four_songs() {
        let m = manifest(4);
        let plan = make_splits(&m, 1, SplitMode::RandomSnippet, 2, 7).unwrap();
        plan.validate().unwrap();
        assert_eq!(plan.folds.len(), 2);
        assert_eq!(plan.folds[0].test.len(), 2);
        assert_eq!(plan.folds[1].test.len(), 2);
    }

    #[test]
    fn same_seed_reproduces_plan_different_seed_changes_it() {
        let m = manifest(40);
        let a = make_splits(&m, 2, SplitMode::RandomSnippet, 5, 1).unwrap();
        let b = make_splits(&m, 2, SplitMode::RandomSnippet, 5, 1).unwrap();
        let c = make_splits(&m, 2, SplitMode::RandomSnippet, 5, 2).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.folds, c.folds);
    }

    #[test]
    fn song_ordered_never_leaks() {
        let m = manifest(23);
        let plan = make_splits(&m, 4, SplitMode::SongOrdered, 5, 3).unwrap();
        plan.validate().unwrap();
        for fold in &plan.folds {
            let train_songs: std::collections::HashSet<&String> = fold
                .train
                .iter()
                .map(|id| plan.snippet_songs.get(id).unwrap())
                .collect();
            for id in &fold.test {
                assert!(!train_songs.contains(plan.snippet_songs.get(id).unwrap()));
            }
        }
    }

    proptest::proptest! {
        #[test]
        fn partition_property_holds_for_any_mode_k_seed(
            n_songs in 4usize..40,
            snippets in 1usize..4,
            k in 2usize..5,
            seed in 0u64..1000,
            song_ordered in proptest::bool::ANY,
        ) {
            proptest::prop_assume!(k <= n_songs);
            let m = manifest(n_songs);
            let mode = if song_ordered {
                SplitMode::SongOrdered
            } else {
                SplitMode::RandomSnippet
            };
            let plan = make_splits(&m, snippets, mode, k, seed).unwrap();
            plan.validate().unwrap();
        }
    }

    #[test]
    fn error_cases() {
        let empty = DatasetManifest {
            entries: vec![],
            classes: vec![],
        };
        assert!(make_splits(&empty, 1, SplitMode::SongOrdered, 2, 0).is_err());
        let m = manifest(3);
        assert!(make_splits(&m, 1, SplitMode::SongOrdered, 1, 0).is_err());
        assert!(make_splits(&m, 1, SplitMode::SongOrdered, 4, 0).is_err());
    }
}
