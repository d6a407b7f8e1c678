//! Continuous McCormick relaxation of a reformulation, at the root and under
//! a few fixings.
//!
//!     cargo run --example mccormick_relaxation

use bqpref::{
    bound_with, build_relaxation, generate_pardalos, prepare, BnbMethod, Fixings, McCormickOptions,
    PipelineOptions,
};

fn main() -> bqpref::Result<()> {
    let inst = generate_pardalos(10, 0.8, 3)?;
    let prepared = prepare(&inst, BnbMethod::QnrTri, &PipelineOptions::default())?;
    let reform = &prepared.reform;
    println!("relaxation value {:.6}", prepared.sdp_value());

    let opts = McCormickOptions::default();
    let root = build_relaxation(reform, &Fixings::new(), &opts)?;
    println!(
        "root model: {} columns, {} linearized products, {} envelope rows",
        root.columns.len(),
        root.linearized.len(),
        root.envelope_rows
    );

    let full = McCormickOptions {
        same_sign_reduction: false,
        ..opts.clone()
    };
    let reduced = bound_with(reform, &Fixings::new(), &opts)?;
    let all = bound_with(reform, &Fixings::new(), &full)?;
    println!(
        "root bound {:.6} (all four envelopes: {:.6})",
        reduced.value, all.value
    );

    for pairs in [
        vec![(0, 0)],
        vec![(0, 1)],
        vec![(0, 1), (1, 1)],
        vec![(0, 1), (1, 1), (2, 0)],
    ] {
        let fix = Fixings::from_pairs(&pairs)?;
        let out = bound_with(reform, &fix, &opts)?;
        println!(
            "{pairs:?}  bound {:.6}  ({} iterations)",
            out.value, out.qp_iterations
        );
    }
    Ok(())
}
