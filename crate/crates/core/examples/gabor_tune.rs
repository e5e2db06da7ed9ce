//! Tighten a Gabor system by moving only its generator.

use frame_tuner::descent::{geodesic_step, gradient};
use frame_tuner::structured::{
    commutation_check, orbit_distance, random_generator, structured_step, synthesize, GaborSystem,
    OrbitFrame,
};

fn main() -> Result<(), frame_tuner::error::Error> {
    let mut sys = GaborSystem::new(6, 2, 3, random_generator(6, 11))?;
    let t = 1.0 / (4.0 * sys.len() as f64);
    println!("commutes: {:?}", commutation_check(&sys));

    let full = synthesize(&sys);
    let by_orbit = synthesize(&structured_step(&sys, t)?);
    let by_frame = geodesic_step(&full, &gradient(&full), t);
    println!(
        "structured vs full step: {:.1e}",
        by_orbit.synthesis().max_abs_diff(by_frame.synthesis())?
    );

    let mut k = 0;
    while orbit_distance(&sys) > 1e-8 && k < 10_000 {
        sys = structured_step(&sys, t)?;
        k += 1;
    }
    println!("distance {:.3e} after {k} steps", orbit_distance(&sys));
    Ok(())
}
