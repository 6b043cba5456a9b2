#![allow(dead_code)]

use std::path::{Path, PathBuf};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TOPICS: [[&str; 6]; 8] = [
    ["senator", "election", "ballot", "campaign", "vote", "district"],
    ["volcano", "eruption", "lava", "ash", "island", "evacuation"],
    ["striker", "goal", "league", "transfer", "coach", "stadium"],
    ["vaccine", "trial", "patients", "dose", "clinic", "virus"],
    ["satellite", "orbit", "launch", "rocket", "engine", "crew"],
    ["bank", "interest", "inflation", "market", "shares", "investors"],
    ["hacker", "breach", "passwords", "server", "malware", "ransom"],
    ["museum", "painting", "auction", "gallery", "artist", "stolen"],
];
const FILLER: [&str; 8] = ["city", "officials", "local", "week", "people", "report", "sources", "monday"];
const AGREE: [&str; 3] = ["confirmed", "verified", "official"];
const DISAGREE: [&str; 3] = ["hoax", "fake", "denied"];
const DISCUSS: [&str; 3] = ["reportedly", "alleged", "rumoured"];

pub struct MiniCorpus {
    pub bodies: PathBuf,
    pub stances: PathBuf,
}

fn words(rng: &mut ChaCha8Rng, pool: &[&str], n: usize) -> Vec<String> {
    (0..n).map(|_| pool.choose(rng).unwrap().to_string()).collect()
}

/// Labeled FNC-1-format corpus of `n_pairs` pairs over 40 bodies.
pub fn write_mini_corpus(dir: &Path, n_pairs: usize, seed: u64) -> MiniCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_bodies = 40;
    let topic_of: Vec<usize> = (0..n_bodies).map(|i| i % TOPICS.len()).collect();

    let mut bodies = csv_writer(&dir.join("bodies.csv"));
    bodies.write_record(["Body ID", "articleBody"]).unwrap();
    for (id, &t) in topic_of.iter().enumerate() {
        let mut text = words(&mut rng, &TOPICS[t], 30);
        text.extend(words(&mut rng, &FILLER, 10));
        text.shuffle(&mut rng);
        let body = format!("{}. \"Quoted\", with commas.", text.join(" "));
        bodies.write_record([id.to_string(), body]).unwrap();
    }
    bodies.flush().unwrap();

    let mut stances = csv_writer(&dir.join("stances.csv"));
    stances.write_record(["Headline", "Body ID", "Stance"]).unwrap();
    let labels = ["agree", "disagree", "discuss", "unrelated"];
    for i in 0..n_pairs {
        let body = rng.random_range(0..n_bodies);
        let label = labels[i % 4];
        let topic = if label == "unrelated" {
            (topic_of[body] + rng.random_range(1..TOPICS.len())) % TOPICS.len()
        } else {
            topic_of[body]
        };
        let mut headline = words(&mut rng, &TOPICS[topic], 4);
        match label {
            "agree" => headline.extend(words(&mut rng, &AGREE, 2)),
            "disagree" => headline.extend(words(&mut rng, &DISAGREE, 2)),
            "discuss" => headline.extend(words(&mut rng, &DISCUSS, 2)),
            _ => headline.extend(words(&mut rng, &FILLER, 1)),
        }
        stances
            .write_record([headline.join(" "), body.to_string(), label.to_string()])
            .unwrap();
    }
    stances.flush().unwrap();
    MiniCorpus {
        bodies: dir.join("bodies.csv"),
        stances: dir.join("stances.csv"),
    }
}

fn csv_writer(path: &Path) -> csv::Writer<std::fs::File> {
    csv::Writer::from_path(path).unwrap()
}

/// Sorted (file name, bytes) for every file in a bundle directory.
pub fn bundle_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}
