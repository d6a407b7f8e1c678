//! Base semidefinite bound, then McCormick and triangle cuts added in rounds.
//! Prints the bound after every round and the dual certificate summary.
//!
//!     cargo run --example sdp_bounds -- [N] [SEED]

use bqpref::{
    brute_force, cutting_plane, cutting_plane_from, generate_pardalos, CutFamily, RelaxOptions,
    SdpRelaxation,
};

fn main() -> bqpref::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(12);
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(7);

    let inst = generate_pardalos(n, 0.8, seed)?.normalize_diagonal();
    let opts = RelaxOptions::default();

    let rlt = cutting_plane(&inst, &[CutFamily::McCormick], 2, &opts)?;
    println!("sdp          {:.6}", rlt.history[0]);
    for (k, v) in rlt.history.iter().enumerate().skip(1) {
        println!("rlt round {k}  {v:.6}");
    }
    let pool = rlt.pool.clone();
    println!("pool: {} McCormick cuts", pool.count(CutFamily::McCormick));

    let tri = cutting_plane_from(
        SdpRelaxation::with_pool(&inst, pool)?,
        &[CutFamily::McCormick, CutFamily::Triangle],
        9,
        &opts,
    )?;
    for (k, v) in tri.history.iter().enumerate().skip(1) {
        println!("tri round {k}  {v:.6}");
    }

    let cert = &tri.certificate;
    println!("sigma        {:.6}", cert.sigma);
    println!("min eig of bordered dual {:.2e}", cert.bordered_min_eig());
    println!(
        "active cuts  {} of {}",
        cert.multipliers.iter().filter(|(_, m)| *m > 1e-7).count(),
        tri.pool.len()
    );
    if n <= 20 {
        println!("optimum      {}", brute_force(&inst)?.value);
    }
    Ok(())
}
