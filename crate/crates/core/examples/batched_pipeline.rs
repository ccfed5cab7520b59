// SPDX-License-Identifier: Apache-2.0

//! Runs a job larger than its memory budget as a sequence of batches and
//! prints the per-batch timing ledger.
//!
//! ```text
//! cargo run --release --example batched_pipeline [budget]
//! ```

use fastid::bench::{synthetic_job, BenchSize};
use fastid::kernel::{compare_naive, KernelConfig};
use fastid::scheduler::{plan_batches, run_job, BufferPolicy, MatrixSink, MemoryBudget, PanelSource, PipelineConfig};
use fastid::word::WordWidth;

fn main() -> fastid::Result<()> {
    let budget: MemoryBudget = std::env::args().nth(1).as_deref().unwrap_or("512k").parse()?;
    let size = BenchSize::new(10_000, 128, 8);
    let (refs, queries) = synthetic_job::<u64>(size, 7);

    let plan = plan_batches(refs.len(), queries.len(), refs.n_words(), WordWidth::W64, budget)?;
    println!(
        "budget {budget}: {} batches of up to {} rows",
        plan.len(),
        plan.max_batch_rows()
    );

    let config = PipelineConfig {
        overlap: true,
        buffers: BufferPolicy::Reusable,
    };
    let mut sink = MatrixSink::new(refs.ids().to_vec(), queries.ids().to_vec());
    let ledger = run_job(
        &KernelConfig::default(),
        &plan,
        &mut PanelSource::new(&refs),
        &queries,
        &mut sink,
        config,
    )?;
    let batched = sink.into_matrix().expect("job finished");

    assert_eq!(batched.scores(), compare_naive(&refs, &queries)?.scores());
    println!("matches the single-shot result");
    println!("allocations: {:?}", ledger.allocations);
    ledger.write_csv(std::io::stdout().lock())?;

    let mut stage = [Vec::new(), Vec::new()];
    let policies = [BufferPolicy::Reusable, BufferPolicy::Fresh];
    for _ in 0..5 {
        for (i, buffers) in policies.into_iter().enumerate() {
            let config = PipelineConfig { overlap: true, buffers };
            let mut sink = MatrixSink::new(refs.ids().to_vec(), queries.ids().to_vec());
            let kernel = KernelConfig::default();
            let ledger = run_job(
                &kernel,
                &plan,
                &mut PanelSource::new(&refs),
                &queries,
                &mut sink,
                config,
            )?;
            stage[i].push(ledger.stage_total());
        }
    }
    for (i, buffers) in policies.into_iter().enumerate() {
        stage[i].sort();
        println!(
            "{buffers:?}: median stage time {:.3} ms",
            stage[i][2].as_secs_f64() * 1e3
        );
    }
    Ok(())
}
