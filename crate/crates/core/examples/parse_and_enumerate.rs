//! Read an instance (file argument or a built-in one), print its objective
//! matrices and enumerate the optimum.
//!
//!     cargo run --example parse_and_enumerate -- [FILE] [--max]

use bqpref::{brute_force, parse_instance, read_instance, write_instance, Sense};

const BUILTIN: &str = "\
4 6
1 1 -3
2 2 -3
1 2 4
2 3 -2
3 4 5
1 4 -1
";

fn main() -> bqpref::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let sense = if args.iter().any(|a| a == "--max") {
        Some(Sense::Max)
    } else {
        None
    };
    let inst = match args.iter().find(|a| !a.starts_with("--")) {
        Some(path) => read_instance(path.as_ref(), sense)?,
        None => parse_instance(BUILTIN, sense.unwrap_or(Sense::Min))?,
    };

    println!("n = {}, sense = {:?}", inst.n(), inst.meta.sense_original);
    println!("Q = {:.1}", inst.q());
    println!("c = {:.1}", inst.c().transpose());

    // diagonal folded into c: same values on binaries
    let norm = inst.normalize_diagonal();
    println!("normalized file:\n{}", write_instance(&norm));

    let best = brute_force(&inst)?;
    let bits: String = best.x.iter().map(|b| char::from(b'0' + b)).collect();
    println!("optimum {} at x = {bits}", best.value);
    Ok(())
}
