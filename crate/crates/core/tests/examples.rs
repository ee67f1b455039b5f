mod fp1_symbolic {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/fp1_symbolic.rs"));
}

mod heat_pinsn {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/heat_pinsn.rs"));
}

mod kovasznay_flow {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/kovasznay_flow.rs"));
}

mod telegraph_hyper {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/telegraph_hyper.rs"));
}

mod burgers_decomposition {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/burgers_decomposition.rs"));
}

mod mlp_extrapolation {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/mlp_extrapolation.rs"));
}

mod expression_extraction {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/expression_extraction.rs"));
}

mod config_checkpoint {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/config_checkpoint.rs"));
}

#[test]
fn fp1_symbolic_runs() {
    fp1_symbolic::run_example().expect("fp1_symbolic example should run");
}

#[test]
fn heat_pinsn_runs() {
    heat_pinsn::run_example().expect("heat_pinsn example should run");
}

#[test]
fn kovasznay_flow_runs() {
    kovasznay_flow::run_example().expect("kovasznay_flow example should run");
}

#[test]
fn telegraph_hyper_runs() {
    telegraph_hyper::run_example().expect("telegraph_hyper example should run");
}

#[test]
fn burgers_decomposition_runs() {
    burgers_decomposition::run_example().expect("burgers_decomposition example should run");
}

#[test]
fn mlp_extrapolation_runs() {
    mlp_extrapolation::run_example().expect("mlp_extrapolation example should run");
}

#[test]
fn expression_extraction_runs() {
    expression_extraction::run_example().expect("expression_extraction example should run");
}

#[test]
fn config_checkpoint_runs() {
    config_checkpoint::run_example().expect("config_checkpoint example should run");
}
