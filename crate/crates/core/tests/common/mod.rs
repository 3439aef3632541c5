//! Shared helpers for the integration suites: synthetic corpus extraction
//! into an in-memory feature store.

use hyperwave_core::audio_io::{snippet, snippet_id, snippet_starts, DatasetManifest};
use hyperwave_core::corpus::build_corpus;
use hyperwave_core::features::{build_hyperimage, FeatureConfig};
use hyperwave_core::training::MemoryStore;
use rayon::prelude::*;

pub const SNIPPET_S: f64 = 5.0;
pub const SNIPPETS_PER_SONG: usize = 4;

/// Build `n_songs` synthetic songs and extract every snippet into a store.
pub fn extracted_corpus(n_songs: usize, seed: u64) -> (MemoryStore, DatasetManifest) {
    let cfg = FeatureConfig::default();
    let (songs, manifest) = build_corpus(n_songs, 22050, 20.0, seed);
    let images: Vec<(String, hyperwave_core::HyperImage)> = songs
        .par_iter()
        .zip(&manifest.entries)
        .flat_map(|(song, entry)| {
            let starts = snippet_starts(song.duration_s(), SNIPPET_S, SNIPPETS_PER_SONG);
            starts
                .into_iter()
                .enumerate()
                .map(|(j, start)| {
                    let snip = snippet(song, start, SNIPPET_S).expect("snippet in range");
                    let mut image = build_hyperimage(&snip, &cfg).expect("extraction succeeds");
                    image.label = Some(entry.label.clone());
                    (snippet_id(&entry.song_id, j), image)
                })
                .collect::<Vec<_>>()
        })
        .collect();
    let mut store = MemoryStore::new();
    for (id, image) in images {
        store.insert(&id, image);
    }
    (store, manifest)
}
