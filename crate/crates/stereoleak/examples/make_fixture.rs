//! Writes the synthetic fixture corpus: `cargo run --example make_fixture -- <dir> [seed]`.

use std::path::PathBuf;

use stereoleak::fixture::{write_fixture, DEFAULT_SEED};
use stereoleak::registry_file::bundled;

fn main() -> stereoleak::Result<()> {
    let mut args = std::env::args().skip(1);
    let dir = PathBuf::from(args.next().unwrap_or_else(|| "fixture".into()));
    let seed = args.next().map_or(DEFAULT_SEED, |s| s.parse().expect("seed must be an integer"));
    write_fixture(&dir, &bundled()?, seed)?;
    println!("fixture written to {}", dir.display());
    Ok(())
}
