//! Spectral summary of a few harmonic frames.

use frame_tuner::frame::{analyze, harmonic_frame, DEFAULT_UNTF_TOL};
use frame_tuner::partition::op_threshold;

fn main() -> Result<(), frame_tuner::error::Error> {
    for (m, n) in [(2, 3), (2, 4), (3, 7), (4, 6)] {
        let f = harmonic_frame(m, n)?;
        let a = analyze(&f, DEFAULT_UNTF_TOL)?;
        let (tau, p) = op_threshold(&f)?;
        println!(
            "{m}x{n}: FP {:.6} (N²/M = {:.6}), bounds [{:.4}, {:.4}], untf {}, tau {tau:.4} {:?}|{:?}",
            a.frame_potential,
            (n * n) as f64 / m as f64,
            a.lower_frame_bound,
            a.upper_frame_bound,
            a.is_untf,
            p.block_i,
            p.block_j,
        );
    }
    Ok(())
}
