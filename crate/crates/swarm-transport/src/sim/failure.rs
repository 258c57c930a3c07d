//! Robot-failure injection for resilience studies.

use rand::Rng;

/// Draws a per-robot failure schedule.
///
/// Each robot independently fails with probability `p_fail`; if more than
/// `floor(cap_fraction * n)` robots were marked, excess marks are dropped
/// uniformly at random. Every surviving mark gets a uniform fail step in
/// `[0, max_steps)`.
pub fn sample_failure_schedule<R: Rng + ?Sized>(
    n_robots: usize,
    max_steps: usize,
    p_fail: f64,
    cap_fraction: f64,
    rng: &mut R,
) -> Vec<Option<usize>> {
    assert!(n_robots >= 1, "need at least one robot");
    assert!(max_steps >= 1, "need at least one step");

    let mut failing: Vec<usize> = (0..n_robots)
        .filter(|_| rng.gen::<f64>() < p_fail)
        .collect();
    let cap = (cap_fraction * n_robots as f64).floor() as usize;
    while failing.len() > cap {
        let drop = rng.gen_range(0..failing.len());
        failing.remove(drop);
    }

    let mut schedule = vec![None; n_robots];
    for i in failing {
        schedule[i] = Some(rng.gen_range(0..max_steps));
    }
    schedule
}
