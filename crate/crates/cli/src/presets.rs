//! Named manifolds accepted wherever a manifold is expected.

use std::f64::consts::PI;
use std::path::Path;

use geodesica::manifolds::{Annulus, ManifoldOracle, Rect, SphereCap, Spiral, SwissRoll};

use crate::error::{CliError, CliResult};
use crate::run::Run;

pub const PRESETS: [&str; 8] =
    ["example-curve", "unit-circle", "thin-frame", "off-center-hole", "hemisphere", "sphere", "spiral", "swiss-roll"];

pub fn preset(name: &str) -> Option<ManifoldOracle> {
    let spiral = |t_min: f64, t_max: f64| Spiral { beta: 1.0, t_min, t_max };
    let m = match name {
        // perimeter of the 0.1 x 0.9 rectangle, length 2
        "example-curve" => ManifoldOracle::rectangle_curve(Rect::new(-0.05, 0.05, 0.05, 0.95).ok()?).ok()?,
        "unit-circle" => ManifoldOracle::circle(1.0).ok()?,
        "thin-frame" => ManifoldOracle::RectangularAnnulus(Annulus::thin_frame()),
        "off-center-hole" => ManifoldOracle::RectangularAnnulus(Annulus::off_center_hole()),
        "hemisphere" => ManifoldOracle::SpherePatch(SphereCap::hemisphere()),
        "sphere" => ManifoldOracle::SpherePatch(SphereCap { max_polar_angle: PI }),
        "spiral" => ManifoldOracle::Spiral(spiral(PI, 4.0 * PI)),
        "swiss-roll" => {
            ManifoldOracle::SwissRoll(SwissRoll { spiral: spiral(1.5 * PI, 4.5 * PI), h_min: 0.0, h_max: 21.0 })
        }
        _ => return None,
    };
    Some(m)
}

pub fn parse_manifold_json(text: &[u8], origin: &Path) -> CliResult<ManifoldOracle> {
    let m: ManifoldOracle = serde_json::from_slice(text).map_err(|e| CliError::input(origin)(e.into()))?;
    m.validate().map_err(CliError::input(origin))?;
    Ok(m)
}

/// A preset name, inline JSON, or a path to a JSON file (relative paths are
/// taken from `base`). Files are recorded as run inputs.
pub fn resolve_manifold(arg: &str, base: &Path, run: &mut Run) -> CliResult<ManifoldOracle> {
    if let Some(m) = preset(arg) {
        return Ok(m);
    }
    if arg.trim_start().starts_with('{') {
        return parse_manifold_json(arg.as_bytes(), Path::new("<inline manifold>"));
    }
    let path = base.join(arg);
    if !path.exists() {
        return Err(CliError::Usage(format!(
            "manifold `{arg}` is neither a preset ({}), inline JSON, nor an existing file",
            PRESETS.join(", ")
        )));
    }
    let bytes = run.read_input(&path)?;
    parse_manifold_json(&bytes, &path)
}
