/// Gate-opening width under curriculum training.
///
/// The opening starts at `initial` (the arena height, i.e. no obstacle) and
/// shrinks by 0.5 m every `shrink_every` episodes until it reaches `minimum`:
/// `max(minimum, initial - 0.5 * floor(episode_index / shrink_every))`.
pub fn curriculum_gate_width(
    initial: f64,
    episode_index: usize,
    shrink_every: usize,
    minimum: f64,
) -> f64 {
    assert!(shrink_every >= 1, "shrink_every must be >= 1");
    assert!(initial >= minimum, "initial width below the minimum");
    let shrinks = (episode_index / shrink_every) as f64;
    (initial - 0.5 * shrinks).max(minimum)
}
