// Temporary timing probe; will be removed.
use std::time::Instant;

use originet_core::model::train::{stack_batch, Example};
use originet_core::model::{ModelConfig, OrigiNet};
use originet_core::nn::Mode;
use originet_core::tensor::Tensor;

#[test]
#[ignore]
fn probe_step_times() {
    for input_size in [32usize, 64, 128] {
        let cfg = ModelConfig { input_size, ..Default::default() };
        let net = OrigiNet::build(&cfg, 1).unwrap();
        let examples: Vec<Example> = (0..32)
            .map(|i| Example {
                image: Tensor::filled(&[1, input_size, input_size], (i as f64) / 32.0),
                label: i % 4,
            })
            .collect();
        let refs: Vec<&Example> = examples.iter().collect();
        let (batch, labels) = stack_batch(&refs).unwrap();
        let t0 = Instant::now();
        let (_, cache) = net.forward(&batch, Mode::Train).unwrap();
        let fwd = t0.elapsed();
        let t1 = Instant::now();
        let _ = net.backward(&cache, &labels).unwrap();
        let bwd = t1.elapsed();
        println!("input {input_size}: forward {fwd:?}, backward {bwd:?}");
    }
}
