//! When gcd(M, N) = 1 plain descent from a nearly tight frame converges to a
//! unit norm tight frame.

use frame_tuner::autotune::tune_coprime;
use frame_tuner::descent::DescentConfig;
use frame_tuner::frame::{distance_from_tightness, harmonic_frame, perturb};

fn main() -> Result<(), frame_tuner::error::Error> {
    for (m, n) in [(2, 3), (2, 5), (3, 4), (4, 7)] {
        let f0 = perturb(&harmonic_frame(m, n)?, 0.02, 1)?;
        let r = tune_coprime(&f0, &DescentConfig::default())?;
        println!(
            "{m}x{n}: distance {:.3e} -> {:.3e} in {} steps, moved {:.4} (bound {:.2e})",
            distance_from_tightness(&f0),
            r.report.final_distance,
            r.report.iterations,
            r.report.displacement,
            r.report.bounds.coprime_displacement.unwrap_or(f64::NAN),
        );
    }
    Ok(())
}
