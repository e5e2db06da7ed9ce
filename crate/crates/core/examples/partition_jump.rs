//! Detect an almost orthogonal split and snap it to an exact one.

use frame_tuner::frame::example_theta;
use frame_tuner::partition::{is_epsilon_op, jump_bound, jump_to_op, op_threshold};

fn main() -> Result<(), frame_tuner::error::Error> {
    let f = example_theta(0.1);
    let (tau, p) = op_threshold(&f)?;
    println!("tau {tau:.6}, blocks {:?} {:?}", p.block_i, p.block_j);

    let eps = tau + 1e-6;
    let p = is_epsilon_op(&f, eps)?.expect("tau < eps");
    let j = jump_to_op(&f, eps, &p)?;
    println!(
        "jump: moved {:.6} (bound {:.4}), cross product now {:.1e}, subspaces {:?}",
        j.displacement,
        jump_bound(f.dim(), f.len(), eps),
        j.partition.bottleneck,
        j.sub_dims
    );
    for k in 0..j.op_frame.len() {
        let c = j.op_frame.column(k);
        println!("  f{} = ({:+.6}, {:+.6})", k + 1, c[0].re, c[1].re);
    }
    Ok(())
}
