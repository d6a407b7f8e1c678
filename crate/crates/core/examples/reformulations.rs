//! Build every reformulation from one relaxation run, check each against the
//! original objective on all binary points, and dump one as JSON.
//!
//!     cargo run --example reformulations

use bqpref::{
    build_qcr, build_qcre, build_qnr, build_qnre, build_qnre_agg, check_equivalence, cutting_plane,
    generate_pardalos, qcr_params, qcre_params, qnre_params, CheckMode, CutFamily, GammaFilter,
    RelaxOptions,
};

fn main() -> bqpref::Result<()> {
    let inst = generate_pardalos(8, 0.9, 11)?.normalize_diagonal();
    let opts = RelaxOptions::default();

    let base = cutting_plane(&inst, &[], 0, &opts)?;
    let rlt = cutting_plane(&inst, &[CutFamily::McCormick], 2, &opts)?;
    let tri = cutting_plane(
        &inst,
        &[CutFamily::McCormick, CutFamily::Triangle],
        9,
        &opts,
    )?;

    let p_qcr = qcr_params(&base.certificate)?;
    let p_rlt = qcre_params(&rlt.certificate)?;
    let p_tri = qnre_params(&tri.certificate)?;

    let reforms = [
        build_qcr(&inst, &p_qcr)?,
        build_qcre(&inst, &p_rlt)?,
        build_qnr(&inst, &p_rlt)?,
        build_qnre(&inst, &p_tri)?,
        build_qnre_agg(&inst, &p_tri, GammaFilter::default_for(&inst))?,
    ];
    println!(
        "{:<10} {:>5} {:>6} {:>12}",
        "method", "aux", "rows", "max dev"
    );
    for r in &reforms {
        let rep = check_equivalence(r, &inst, CheckMode::Exhaustive)?;
        println!(
            "{:<10} {:>5} {:>6} {:>12.2e}",
            r.method.name(),
            r.aux.len(),
            r.constraints.len(),
            rep.max_deviation
        );
        assert!(rep.passed(), "{:?}", rep.failures);
    }

    let json = reforms[2].to_json();
    println!(
        "\nqnr as JSON ({} bytes):\n{}",
        json.len(),
        &json[..json.len().min(400)]
    );
    Ok(())
}
