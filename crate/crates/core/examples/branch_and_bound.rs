//! Solve one instance with each method and compare root bounds and node
//! counts.
//!
//!     cargo run --release --example branch_and_bound -- [N] [SEED]

use bqpref::{generate_pardalos, solve_with, BnbMethod, BnbOptions, PipelineOptions};

fn main() -> bqpref::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(20);
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(1);
    let inst = generate_pardalos(n, 0.7, seed)?;

    println!(
        "{:<8} {:>14} {:>14} {:>7} {:>9} {:>9}",
        "method", "root", "value", "nodes", "pre s", "search s"
    );
    for method in BnbMethod::ALL {
        let rep = solve_with(
            &inst,
            method,
            &PipelineOptions::default(),
            &BnbOptions::default(),
        )?;
        let r = &rep.result;
        println!(
            "{:<8} {:>14.4} {:>14} {:>7} {:>9.3} {:>9.3}  {}",
            method.name(),
            r.root_bound,
            r.value,
            r.node_count,
            rep.time_pre_s,
            rep.time_bnb_s,
            r.status
        );
    }
    Ok(())
}
