//! Explainable symbolic planning for a simulated tabletop-manipulation
//! domain: action-language reasoning, axiom learning from execution
//! failures, proof-tree belief tracing, and answers to explanatory queries.

pub mod analyzer;
pub mod cli;
pub mod eval;
pub mod ground;
pub mod kr;
pub mod learner;
pub mod par;
pub mod parser;
pub mod reasoner;
pub mod tracer;
pub mod world;

/// The bundled ground-truth tabletop domain.
pub const RA_DOMAIN: &str = include_str!("../data/ra.domain");

pub fn ra_domain() -> kr::DomainDescription {
    static D: std::sync::OnceLock<kr::DomainDescription> = std::sync::OnceLock::new();
    D.get_or_init(|| parser::parse_domain(RA_DOMAIN).expect("bundled domain parses")).clone()
}

/// Scenes shipped with the crate, by name.
pub fn bundled_scene(name: &str) -> Option<world::Scene> {
    let text = match name {
        "tower" => include_str!("../data/scenes/tower.json"),
        "toys" => include_str!("../data/scenes/toys.json"),
        "small_base" => include_str!("../data/scenes/small_base.json"),
        _ => return None,
    };
    Some(world::Scene::from_json(text).expect("bundled scene parses"))
}
