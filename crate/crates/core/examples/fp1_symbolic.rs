// Train a depth-2 symbolic network on the Fokker-Planck problem
// u_t = u_x + u_xx with u(x, 0) = x, then print the recovered expression.
//
// cargo run --release --example fp1_symbolic -- 20000

use pisn::harness::{train, Architecture, TrainConfig};
use pisn::symnet::render_named;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let epochs = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(500);
    let config = TrainConfig::desk("fp1", None, Architecture::Pisn, epochs, 1000)?;
    let out = train(&config)?;
    let report = out.final_report();
    println!("mean |u - (x + t)| = {:.3e}, max = {:.3e}", report.mean(), report.max());
    for (name, expr) in &out.expressions {
        println!("{}", render_named(expr, name, 3));
    }
    let totals = out.trace.totals(1);
    assert!(totals.last() < totals.first(), "loss did not decrease");
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    run_example()
}
