//! The fixture zoo: the named functions every experiment runs on, each with
//! its canonical window.

use anyhow::{bail, Result};
use lsvp::gridfn::{GridFunction, GridSpec};

pub const NAMES: &[&str] = &[
    "gauss05",
    "gauss1",
    "gauss2",
    "shifted_gauss",
    "box_sym",
    "box02",
    "halfline",
    "exp_abs",
    "exp_halfline",
    "gauss2d",
    "rotgauss2d",
];

/// 1D members used in sweep-style experiments.
pub const NAMES_1D: &[&str] = &[
    "gauss05",
    "gauss1",
    "gauss2",
    "shifted_gauss",
    "box_sym",
    "box02",
    "halfline",
    "exp_abs",
    "exp_halfline",
];

/// Even members satisfying the hypercontractivity centering hypothesis.
pub const NAMES_CENTERED: &[&str] = &["gauss05", "gauss1", "gauss2", "box_sym", "exp_abs"];

pub fn is_zoo_name(name: &str) -> bool {
    NAMES.contains(&name)
}

/// Canonical source window of a fixture.
pub fn default_grid(name: &str) -> Result<GridSpec> {
    Ok(match name {
        "gauss05" | "gauss1" | "gauss2" | "shifted_gauss" => GridSpec::line(-12.0, 12.0, 2401)?,
        "box_sym" => GridSpec::line(-2.0, 2.0, 1601)?,
        "box02" => GridSpec::line(-1.0, 3.0, 1601)?,
        "halfline" | "exp_halfline" => GridSpec::line(0.0, 30.0, 3001)?,
        "exp_abs" => GridSpec::line(-30.0, 30.0, 6001)?,
        "gauss2d" | "rotgauss2d" => GridSpec::square(-8.0, 8.0, 161)?,
        _ => bail!("unknown fixture `{name}`"),
    })
}

/// Build a fixture on the given grid (its canonical one when `None`).
pub fn build(name: &str, grid: Option<GridSpec>) -> Result<GridFunction> {
    let spec = match grid {
        Some(g) => g,
        None => default_grid(name)?,
    };
    let f = match name {
        "gauss05" => GridFunction::gaussian(spec, 0.5, &[0.0], 1.0)?,
        "gauss1" => GridFunction::gaussian(spec, 1.0, &[0.0], 1.0)?,
        "gauss2" => GridFunction::gaussian(spec, 2.0, &[0.0], 1.0)?,
        "shifted_gauss" => GridFunction::gaussian(spec, 1.0, &[0.0], 1.0)?.translate(&[0.7]),
        "box_sym" => GridFunction::indicator_box(spec, &[-1.0], &[1.0])?,
        "box02" => GridFunction::indicator_box(spec, &[0.0], &[2.0])?,
        "halfline" => {
            let hi = spec.axis(0).hi;
            GridFunction::indicator_box(spec, &[0.0], &[hi])?
        }
        "exp_abs" => GridFunction::from_log_fn(spec, |x| -x[0].abs())?,
        "exp_halfline" => GridFunction::from_log_fn(spec, |x| {
            if x[0] >= 0.0 {
                -x[0]
            } else {
                f64::NEG_INFINITY
            }
        })?,
        "gauss2d" => GridFunction::from_log_fn(spec, |x| {
            -x[0] * x[0] / 2.0 - x[1] * x[1] / (2.0 * 1.3)
        })?,
        "rotgauss2d" => {
            let th = std::f64::consts::PI / 6.0;
            let (s1, s2) = (1.4, 0.7);
            GridFunction::from_log_fn(spec, move |x| {
                let u = th.cos() * x[0] + th.sin() * x[1];
                let v = -th.sin() * x[0] + th.cos() * x[1];
                -u * u / (2.0 * s1) - v * v / (2.0 * s2)
            })?
        }
        _ => bail!("unknown fixture `{name}`"),
    };
    Ok(f)
}

/// Load a fixture by zoo name or, failing that, from a `gridfn v1` file.
pub fn resolve(name: &str, grid: Option<GridSpec>) -> Result<GridFunction> {
    if is_zoo_name(name) {
        return build(name, grid);
    }
    let path = std::path::Path::new(name);
    if path.exists() {
        let text = std::fs::read_to_string(path)?;
        return Ok(GridFunction::from_text(&text)?);
    }
    bail!("unknown fixture `{name}` (not a zoo name, not a readable path)")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zoo_members_build_and_are_nonzero() {
        for name in NAMES {
            let f = build(name, None).unwrap();
            assert!(f.is_nonzero(), "{name}");
        }
    }

    #[test]
    fn unknown_name_is_rejected() {
        assert!(build("nonesuch", None).is_err());
        assert!(resolve("nonesuch", None).is_err());
    }
}
