// The file workflow behind the CLI: config as TOML, train, write every
// output, reload the checkpoint and evaluate it again.

use pisn::harness::export::write_outputs;
use pisn::harness::train::{eval, extract};
use pisn::harness::{train, Architecture, Checkpoint, TrainConfig};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join(format!("pisn-example-{}", std::process::id()));
    let mut config = TrainConfig::desk("wave", None, Architecture::Pisn, 50, 200)?;
    config.output_dir = dir.clone();
    config.eval_grid = 21;
    let text = config.to_toml();
    println!("{text}");
    let config = TrainConfig::from_toml(&text)?;

    let out = train(&config)?;
    for path in write_outputs(&out, &config.output_dir)? {
        println!("wrote {}", path.display());
    }
    let ck = Checkpoint::read(&dir.join("checkpoint.bin"))?;
    let again = eval(&ck, "wave", None)?;
    assert_eq!(again.outputs, out.final_report().outputs);
    print!("{}", again.to_csv());
    for (name, e) in extract(&ck, None, 0.05)? {
        println!("{}", pisn::symnet::render_named(&e, &name, 2));
    }
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
