//! Swap two identical weak sources over a lossless link and print the
//! heralded state.

use hybrid_swap::{run_swap, ChannelParams, SourceParams};

fn main() -> hybrid_swap::Result<()> {
    let src = SourceParams::from_intensities(1e-4, 1e-8, 1.0, 4);
    let out = run_swap(&src, &src, &ChannelParams::ideal(1.0))?;
    println!("fidelity to |psi+>: {:.5}", out.fidelity);
    println!("herald probability: {:.4e}", out.herald_prob);
    Ok(())
}
