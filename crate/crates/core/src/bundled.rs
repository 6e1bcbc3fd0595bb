//! Example manifolds and cycles shipped with the crate.

use crate::algebra::{Manifold, ManifoldSpec};
use crate::error::{Error, Result};
use crate::format;

pub const SPEC_NAMES: [&str; 6] = ["h2", "h3", "ch2", "h2xh2", "heintze", "h2xr"];

pub fn spec_text(name: &str) -> Option<&'static str> {
    Some(match name {
        "h2" => include_str!("../../../data/h2.spec"),
        "h3" => include_str!("../../../data/h3.spec"),
        "ch2" => include_str!("../../../data/ch2.spec"),
        "h2xh2" => include_str!("../../../data/h2xh2.spec"),
        "heintze" => include_str!("../../../data/heintze.spec"),
        "h2xr" => include_str!("../../../data/h2xr.spec"),
        _ => return None,
    })
}

pub fn spec(name: &str) -> Result<ManifoldSpec> {
    let text = spec_text(name)
        .ok_or_else(|| Error::InvalidArgument(format!("no bundled spec named {name:?}")))?;
    format::parse_spec(text, &format!("bundled:{name}"))
}

pub fn manifold(name: &str) -> Result<Manifold> {
    Manifold::new(spec(name)?)
}
