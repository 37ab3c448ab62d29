//! Wrap-around geometry on the 2-D torus.

use super::{AgentId, World};

/// Euclidean distance under wrap-around: per axis the shorter of the direct
/// and the wrapped span. Symmetric, and never exceeds
/// sqrt((w/2)^2 + (h/2)^2).
pub fn toroidal_distance(a: (f64, f64), b: (f64, f64), dims: (f64, f64)) -> f64 {
    let dx = axis_delta(a.0, b.0, dims.0);
    let dy = axis_delta(a.1, b.1, dims.1);
    (dx * dx + dy * dy).sqrt()
}

fn axis_delta(a: f64, b: f64, dim: f64) -> f64 {
    let d = (a - b).abs();
    d.min(dim - d)
}

/// All agents within `radius` of `center` (inclusive), optionally restricted
/// to one kind, sorted ascending by id. An agent sitting exactly at the
/// center is included even at radius 0.
pub fn neighbors_within(
    world: &World,
    center: (f64, f64),
    radius: f64,
    kind_filter: Option<&str>,
) -> Vec<AgentId> {
    let dims = (world.width, world.height);
    world
        .agents()
        .filter(|agent| kind_filter.is_none_or(|k| agent.kind == k))
        .filter(|agent| toroidal_distance((agent.x, agent.y), center, dims) <= radius)
        .map(|agent| agent.id)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::Params;
    use std::collections::BTreeMap;

    #[test]
    fn identical_points_have_zero_distance() {
        assert_eq!(toroidal_distance((3.0, 4.0), (3.0, 4.0), (50.0, 50.0)), 0.0);
    }

    #[test]
    fn wraps_around_the_short_way() {
        // |0 - 49| = 49, but the wrapped span is 1
        assert_eq!(toroidal_distance((0.0, 0.0), (49.0, 0.0), (50.0, 50.0)), 1.0);
    }

    #[test]
    fn symmetric() {
        let d1 = toroidal_distance((1.0, 2.0), (47.0, 3.5), (50.0, 50.0));
        let d2 = toroidal_distance((47.0, 3.5), (1.0, 2.0), (50.0, 50.0));
        assert_eq!(d1, d2);
    }

    #[test]
    fn radius_zero_includes_agent_at_center() {
        let mut w = World::new("test", Params::default(), 0);
        let id = w.add_agent("n", 10.0, 10.0, BTreeMap::new());
        w.add_agent("n", 10.5, 10.0, BTreeMap::new());
        assert_eq!(neighbors_within(&w, (10.0, 10.0), 0.0, None), vec![id]);
    }

    #[test]
    fn huge_radius_returns_everyone_matching() {
        let mut w = World::new("test", Params::default(), 0);
        for i in 0..10 {
            let kind = if i % 2 == 0 { "even" } else { "odd" };
            w.add_agent(kind, i as f64, i as f64, BTreeMap::new());
        }
        let all = neighbors_within(&w, (0.0, 0.0), 1000.0, None);
        assert_eq!(all.len(), 10);
        let evens = neighbors_within(&w, (0.0, 0.0), 1000.0, Some("even"));
        assert_eq!(evens.len(), 5);
    }
}
