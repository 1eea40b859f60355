//! Named test groups and the complexes built from presentations.

use std::sync::Arc;

use crate::ball::{Ball, Radius, DEFAULT_BALL_CAP};
use crate::error::{Error, Result};
use crate::group::{parse_presentation, Backend, Presentation};
use crate::resolution::{build_presentation_complex, cyclic_resolution, extend_finite_resolution, ChainComplexData};

/// Preset names accepted by [`preset_presentation`].
pub const PRESETS: &[&str] = &["trivial", "cyclic:N", "z", "z2", "s3", "free:K"];

/// Presentation text of a preset.
pub fn preset_text(name: &str) -> Result<String> {
    let bad = || Error::Backend(format!("unknown preset `{name}` (known: {})", PRESETS.join(", ")));
    let count = |s: &str| s.parse::<u64>().ok().filter(|&n| n > 0);
    Ok(match name {
        "trivial" => "gens t; backend cyclic 1".into(),
        "z" => "gens t; backend free".into(),
        "z2" => "gens a b; rel a b a^-1 b^-1; backend free-abelian".into(),
        "s3" => "gens a b; rel a^2; rel b^2; rel a b a b a b; backend perm a=(1 2) b=(2 3)".into(),
        _ => {
            if let Some(n) = name.strip_prefix("cyclic:").and_then(count) {
                format!("gens t; backend cyclic {n}")
            } else if let Some(k) = name.strip_prefix("free:").and_then(count) {
                let gens: Vec<String> = (1..=k).map(|i| format!("x{i}")).collect();
                format!("gens {}; backend free", gens.join(" "))
            } else {
                return Err(bad());
            }
        }
    })
}

pub fn preset_presentation(name: &str) -> Result<Presentation> {
    parse_presentation(&preset_text(name)?)
}

/// A complex over `p` whose Laplacian is complete through degree `degree`.
///
/// Cyclic groups without extra relators get the periodic resolution. Other
/// finite groups get the presentation complex extended by kernel generators.
/// Infinite groups get the presentation complex over the ball of radius
/// `max(1, longest relator)`.
pub fn build_complex(p: Presentation, degree: usize) -> Result<ChainComplexData> {
    let p = Arc::new(p);
    if p.backend.is_finite() {
        let ball = Ball::enumerate(p.clone(), Radius::Full, DEFAULT_BALL_CAP)?;
        if let Backend::Cyclic(n) = p.backend {
            if p.explicit_relators().is_empty() {
                return cyclic_resolution(n, degree + 1, &ball);
            }
        }
        let mut c = build_presentation_complex(p, &ball)?;
        while c.top_degree() < degree + 1 {
            c = extend_finite_resolution(&c)?;
        }
        return Ok(c);
    }
    let radius = p.max_relator_len().max(1);
    let ball = Ball::enumerate(p.clone(), Radius::Finite(radius), DEFAULT_BALL_CAP)?;
    build_presentation_complex(p, &ball)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::resolution::check_complex;

    #[test]
    fn presets_build() {
        for name in ["trivial", "cyclic:2", "cyclic:5", "z", "z2", "s3", "free:2"] {
            let c = build_complex(preset_presentation(name).unwrap(), 1).unwrap();
            assert!(check_complex(&c).all_ok(), "{name}");
        }
        let z = build_complex(preset_presentation("z").unwrap(), 0).unwrap();
        assert_eq!(z.ranks(), &[1, 1]);
        assert!(z.is_terminal());
        let s3 = build_complex(preset_presentation("s3").unwrap(), 2).unwrap();
        assert_eq!(s3.top_degree(), 3);
        assert!(s3.is_exact_at(2));
        assert!(preset_presentation("cyclic:0").is_err());
        assert!(preset_presentation("klein").is_err());
    }
}
