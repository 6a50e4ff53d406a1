//! Writes a seeded synthetic corpus as JSON Lines.
//!
//! Usage: `cargo run -p review-radar-core --example generate_corpus -- <patches> <seed> <out.jsonl>`

use std::fs::File;
use std::io::BufWriter;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use review_radar::corpus::write_corpus;
use review_radar::synthetic::{generate_corpus, CorpusShape};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let patches = args.first().map_or(Ok(30), |s| s.parse())?;
    let seed = args.get(1).map_or(Ok(7), |s| s.parse())?;
    let out = args.get(2).map_or("synthetic.jsonl", String::as_str);
    let shape = CorpusShape {
        patches,
        ..CorpusShape::default()
    };
    let corpus = generate_corpus(&mut ChaCha8Rng::seed_from_u64(seed), &shape);
    write_corpus(BufWriter::new(File::create(out)?), &corpus)?;
    Ok(())
}
