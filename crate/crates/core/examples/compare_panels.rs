// SPDX-License-Identifier: Apache-2.0

//! Scores two synthetic panels with the naive and blocked kernels and checks
//! that they agree.
//!
//! ```text
//! cargo run --release --example compare_panels [refs] [queries] [words]
//! ```

use std::time::Instant;

use fastid::bench::{synthetic_job, BenchSize};
use fastid::kernel::{compare_naive, host_parallelism, relayout_queries, BlockedKernel, TileConfig};

fn arg(i: usize, default: usize) -> usize {
    std::env::args().nth(i).and_then(|s| s.parse().ok()).unwrap_or(default)
}

fn main() -> fastid::Result<()> {
    let size = BenchSize::new(arg(1, 20_000), arg(2, 256), arg(3, 16));
    let (refs, queries) = synthetic_job::<u32>(size, 42);

    let t = Instant::now();
    let naive = compare_naive(&refs, &queries)?;
    let naive_s = t.elapsed().as_secs_f64();

    let layout = relayout_queries(&queries);
    for block in [16, 32, 64] {
        let kernel = BlockedKernel::new(TileConfig::new(block)?, host_parallelism())?;
        let t = Instant::now();
        let blocked = kernel.compare(&refs, &layout)?;
        let s = t.elapsed().as_secs_f64();
        assert_eq!(blocked.scores(), naive.scores());
        println!("block {block:>2}: {s:.3} s ({:.1}x naive)", naive_s / s);
    }
    println!("naive:    {naive_s:.3} s");
    println!(
        "{} x {} cells agree; score[0][0..4] = {:?}",
        naive.n_rows(),
        naive.n_cols(),
        &naive.row(0)[..4.min(naive.n_cols())]
    );
    Ok(())
}
