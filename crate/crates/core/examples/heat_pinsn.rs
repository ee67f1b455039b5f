// Two-stage neurosymbolic training on the heat equation: the symbolic
// network first, then an MLP residual with the symbolic weights frozen.
//
// cargo run --release --example heat_pinsn -- 20000

use pisn::harness::{train, Architecture, TrainConfig};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let epochs = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(200);
    let mut config = TrainConfig::desk("heat", None, Architecture::Pinsn, epochs, 400)?;
    if let Some(s2) = &mut config.stage2 {
        s2.epochs = (epochs / 4).max(1);
        s2.schedule = s2.schedule.rescaled(epochs, s2.epochs);
    }
    let out = train(&config)?;
    // first report is the symbolic stage on its own, last is the composite
    let (pisn, pinsn) = (&out.reports[0], out.final_report());
    println!("symbolic stage mean error {:.3e}", pisn.mean());
    println!("with residual MLP         {:.3e}", pinsn.mean());
    println!("stage-2 loss {:.3e} -> {:.3e}", out.trace.totals(2)[0], out.trace.last_total().unwrap_or(f64::NAN));
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    run_example()
}
