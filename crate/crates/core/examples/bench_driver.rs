//! Run a TOML experiment and print the CSV and the text tables.
//!
//!     cargo run --release --example bench_driver -- [CONFIG]
//!
//! Defaults to `examples/data/bench.toml`.

use std::path::PathBuf;

use bqpref::{render_tables, run_bench, write_csv, BenchConfig};

fn main() -> bqpref::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| {
            PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/data/bench.toml")
        });
    let cfg = BenchConfig::load(&path)?;
    let rows = run_bench(&cfg)?;
    print!("{}", write_csv(&rows)?);
    println!();
    print!("{}", render_tables(&rows));
    Ok(())
}
