//! Reference systems used across tests, the CLI and the Python bindings.

use crate::model::{MarkovSystem, Number};

type EdgeSpec = (usize, usize, &'static str, &'static str);

fn build(n: usize, edges: &[EdgeSpec]) -> MarkovSystem {
    let chi = vec![format!("1/{n}").parse::<Number>().unwrap(); n];
    let edges = edges
        .iter()
        .map(|&(from, to, p, c)| (from - 1, to - 1, p.parse().unwrap(), c.parse().unwrap()));
    MarkovSystem::from_edges(n, edges, chi).expect("fixture is well formed")
}

/// Two vertices, every edge with `p = 1/2`, `c = 1/3`: the middle-third
/// Cantor measure on each template. One strongly connected component.
pub fn fixture_a() -> MarkovSystem {
    build(2, &[(1, 1, "1/2", "1/3"), (1, 2, "1/2", "1/3"), (2, 1, "1/2", "1/3"), (2, 2, "1/2", "1/3")])
}

/// Seven vertices: components {1,2} and {3,4} carry equal critical values
/// and are joined through the transient vertex 5; {6,7} sits downstream
/// with smaller ratios and is subcritical.
pub fn fixture_b() -> MarkovSystem {
    build(
        7,
        &[
            (1, 1, "1/2", "1/3"),
            (1, 2, "1/2", "1/3"),
            (2, 1, "1/2", "1/3"),
            (2, 5, "1/2", "1/3"),
            (3, 3, "1/2", "1/3"),
            (3, 4, "1/2", "1/3"),
            (4, 3, "1/2", "1/3"),
            (4, 6, "1/2", "1/3"),
            (5, 3, "1/2", "1/3"),
            (5, 4, "1/2", "1/3"),
            (6, 6, "1/2", "1/9"),
            (6, 7, "1/2", "1/9"),
            (7, 6, "1/2", "1/9"),
            (7, 7, "1/2", "1/9"),
        ],
    )
}

/// Five vertices: two full critical components {1,2} and {3,4}, both fed
/// from vertex 5 and mutually unreachable.
pub fn fixture_c() -> MarkovSystem {
    build(
        5,
        &[
            (5, 1, "1/2", "1/3"),
            (5, 3, "1/2", "1/3"),
            (1, 1, "1/2", "1/3"),
            (1, 2, "1/2", "1/3"),
            (2, 1, "1/2", "1/3"),
            (2, 2, "1/2", "1/3"),
            (3, 3, "1/2", "1/3"),
            (3, 4, "1/2", "1/3"),
            (4, 3, "1/2", "1/3"),
            (4, 4, "1/2", "1/3"),
        ],
    )
}

/// Looks a fixture up by name (`a`, `b`, `c`, case-insensitive).
pub fn by_name(name: &str) -> Option<MarkovSystem> {
    match name.to_ascii_lowercase().as_str() {
        "a" | "fixture_a" => Some(fixture_a()),
        "b" | "fixture_b" => Some(fixture_b()),
        "c" | "fixture_c" => Some(fixture_c()),
        _ => None,
    }
}
