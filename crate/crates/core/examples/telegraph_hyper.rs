// A hypernetwork maps the telegraph coefficient A to the weights of a
// symbolic network, so one training run covers a family of equations.
//
// cargo run --release --example telegraph_hyper -- 10000

use pisn::harness::{train, Architecture, TrainConfig};
use pisn::hyper::{hyper_forward, HyperNetParams};
use pisn::harness::Model;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let epochs = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(30);
    let mut config = TrainConfig::desk("telegraph1", None, Architecture::HyperPisn, epochs, 200)?;
    if let Some(h) = &mut config.hyper {
        h.hidden = vec![32, 32];
        h.train_tasks = vec![1.0, 2.5, 4.0];
        h.val_tasks = vec![];
        h.test_tasks = vec![1.75];
    }
    config.eval_grid = 21;
    let out = train(&config)?;
    for r in &out.reports {
        println!("{} A = {:?}: mean {:.3e}", r.architecture, r.task_param, r.mean());
    }
    if let Model::Hyper(net) = &out.model {
        let generated = hyper_forward(&HyperNetParams { net: net.clone(), values: out.params.clone() }, 1.75)?;
        println!("A = 1.75 generates {} target weights", generated.len());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    run_example()
}
