//! The four-vector family F(θ) in R²: two vectors at ±θ from e₁ and two
//! copies of e₂. Descent keeps the family shape and only shrinks θ, following
//! θ ← θ - 4t cos θ sin³ θ.

use frame_tuner::descent::{geodesic_step, gradient};
use frame_tuner::frame::{distance_from_tightness, example_theta};

fn main() {
    let t = 1.0 / 16.0;
    let mut theta: f64 = 0.7;
    let mut f = example_theta(theta);
    for k in 0..=10_000 {
        if k % 2000 == 0 {
            let c = f.column(0);
            println!(
                "step {k:>5}: θ {theta:.6}, frame angle {:.6}, distance {:.3e}",
                c[1].re.atan2(c[0].re),
                distance_from_tightness(&f)
            );
        }
        f = geodesic_step(&f, &gradient(&f), t);
        theta -= 4.0 * t * theta.cos() * theta.sin().powi(3);
    }
}
