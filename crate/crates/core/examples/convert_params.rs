//! The (c, Q, γ) triple from any one of its entries.
//!
//! Usage: `cargo run --example convert_params`

use lfpp::io::{convert_params, ParamInput};

fn main() -> lfpp::Result<()> {
    for input in [
        ParamInput::C(0.0),
        ParamInput::C(-2.0),
        ParamInput::Gamma(2f64.sqrt()),
        ParamInput::Q(2.0),
        ParamInput::C(10.0),
    ] {
        let t = convert_params(input, None)?;
        let gamma = t.gamma.map_or("complex".to_string(), |g| format!("{g:.6}"));
        println!("{input:?}: c {:.4}  Q {:.7}  gamma {gamma}", t.c, t.q);
    }
    println!("{}", lfpp::io::CONVENTION);
    Ok(())
}
