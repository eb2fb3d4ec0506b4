//! Scenario files shipped with the binary; see `scenarios/`.

pub const BUNDLED: &[(&str, &str)] = &[
    ("bistable", include_str!("../scenarios/bistable.toml")),
    ("convex", include_str!("../scenarios/convex.toml")),
    ("gap", include_str!("../scenarios/gap.toml")),
    ("sqrth", include_str!("../scenarios/sqrth.toml")),
    ("train", include_str!("../scenarios/train.toml")),
];

pub fn get(name: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

pub fn names() -> impl Iterator<Item = &'static str> {
    BUNDLED.iter().map(|(n, _)| *n)
}
