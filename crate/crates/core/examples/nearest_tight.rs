//! The closest tight frame (not necessarily unit norm) via S^(-1/2) F.

use frame_tuner::frame::{
    distance_from_tightness, example_theta, nearest_tight_frame, random_frame,
};
use frame_tuner::linalg::{hs_norm, Field};

fn main() -> Result<(), frame_tuner::error::Error> {
    let frames = [
        ("F(π/6)", example_theta(std::f64::consts::PI / 6.0)),
        ("random 3x7", random_frame(3, 7, 5, Field::Complex)?),
    ];
    for (name, f) in frames {
        let t = nearest_tight_frame(&f)?;
        let gap = hs_norm(&t.sub(f.synthesis())?);
        println!(
            "{name}: distance from tightness {:.4}, distance to nearest tight frame {gap:.4}",
            distance_from_tightness(&f)
        );
    }
    Ok(())
}
