//! Discounted return of constant clamps for a built-in scenario.
//!
//! `cargo run --release --example scan -- heart-recovery`

use biovolt::env::{rollout, Env, Scenario};
use biovolt::tissue::VoltageMesh;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let name = std::env::args().nth(1).unwrap_or_else(|| "cell-homeostasis".into());
    let scenario = Scenario::<f64>::by_name(&name).ok_or_else(|| format!("unknown scenario {name:?}"))?;
    let bounds = scenario.bounds();
    let mut env = Env::new(scenario)?;
    let lo = (bounds.v_min * 1e3).ceil() as i32;
    let hi = (bounds.v_max * 1e3).floor() as i32;
    println!("clamp_mv,return,live");
    for mv in (lo..=hi).step_by(5) {
        let v = f64::from(mv) * 1e-3;
        let r = rollout(&mut env, 0, |e, _| Ok(e.uniform_mesh(v)))?;
        let live = env.tissue().map_or(0, |t| t.live_count());
        println!("{mv},{:.4},{live}", r.discounted_return);
    }
    let free = rollout(&mut env, 0, |_, _| Ok(VoltageMesh::empty()))?;
    println!(
        "free,{:.4},{}",
        free.discounted_return,
        env.tissue().map_or(0, |t| t.live_count())
    );
    Ok(())
}
