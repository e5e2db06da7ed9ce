//! The recursive pipeline on a frame whose limit splits into orthogonal blocks.

use frame_tuner::autotune::{tune, EpsilonPolicy, TuneReport};
use frame_tuner::descent::DescentConfig;
use frame_tuner::frame::{example_theta, harmonic_frame, perturb};

fn show(r: &TuneReport) {
    let pad = "  ".repeat(r.depth);
    println!(
        "{pad}{}x{}: {} after {} steps, distance {:.2e}",
        r.dim, r.len, r.outcome, r.iterations, r.final_distance
    );
    if let Some(p) = &r.partition {
        println!(
            "{pad}split {:?} | {:?} into dims {:?}",
            p.block_i, p.block_j, p.sub_dims
        );
    }
    r.children.iter().for_each(show);
}

fn main() -> Result<(), frame_tuner::error::Error> {
    let cfg = DescentConfig::default();
    let r = tune(&example_theta(0.3), &cfg, EpsilonPolicy::Paper)?;
    show(&r.report);
    for k in 0..r.frame.len() {
        let c = r.frame.column(k);
        println!("  f{} = ({:+.6}, {:+.6})", k + 1, c[0].re, c[1].re);
    }

    let f0 = perturb(&harmonic_frame(3, 6)?, 0.05, 4)?;
    show(&tune(&f0, &cfg, EpsilonPolicy::Paper)?.report);
    Ok(())
}
