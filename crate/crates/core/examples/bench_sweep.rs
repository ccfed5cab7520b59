// SPDX-License-Identifier: Apache-2.0

//! Sweeps reference-panel sizes and prints long-form timing rows, including
//! how the compute share grows with the panel.
//!
//! ```text
//! cargo run --release --example bench_sweep
//! ```

use fastid::bench::{sweep, write_long, BenchOptions, BenchSize};
use fastid::kernel::{host_parallelism, KernelConfig, TileConfig};

fn main() -> fastid::Result<()> {
    let sizes: Vec<BenchSize> = [5_000, 10_000, 20_000, 40_000]
        .into_iter()
        .map(|r| BenchSize::new(r, 512, 16))
        .collect();
    let kernels = [KernelConfig::blocked(TileConfig::default(), host_parallelism())];
    let opts = BenchOptions {
        reps: 3,
        ..Default::default()
    };

    let runs = sweep::<u32>(&sizes, &kernels, &opts)?;
    write_long(&runs, std::io::stdout().lock())?;

    eprintln!("refs     compute_ms  compute/stage");
    for run in &runs {
        if let Some(m) = run.medians() {
            eprintln!(
                "{:<8} {:>10.2}  {:>13.2}",
                run.size.n_refs,
                m.compute.as_secs_f64() * 1e3,
                m.compute_stage_ratio()
            );
        }
    }
    Ok(())
}
