use serde::{Deserialize, Serialize};

use super::{families, BoundaryPiece, GeometryError, Profile};
use crate::scalar::{lit, Real};
use crate::vec2::Vec2;

/// Text description of a cell: a built-in family with its parameters, or an
/// explicit piece list.
///
/// ```toml
/// family = "bumps"
/// K = 0.5
/// ```
///
/// ```toml
/// family = "custom"
/// period = 1.0
/// [[pieces]]
/// kind = "segment"
/// a = [0.0, 0.0]
/// b = [1.0, 0.0]
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FamilySpec {
    Bumps {
        #[serde(rename = "K")]
        k: f64,
    },
    Mixture {
        alpha: f64,
    },
    Flat,
    TwoBumps {
        d: f64,
        #[serde(rename = "K_big", default = "default_k_big")]
        k_big: f64,
        #[serde(rename = "K_small", default = "default_k_small")]
        k_small: f64,
    },
    BumpsWithWall {
        w: f64,
        d: f64,
        #[serde(rename = "R", default = "default_wall_radius")]
        r: f64,
    },
    Custom {
        #[serde(default = "default_period")]
        period: f64,
        pieces: Vec<PieceSpec>,
    },
}

fn default_k_big() -> f64 {
    families::DEFAULT_K_BIG
}

fn default_k_small() -> f64 {
    families::DEFAULT_K_SMALL
}

fn default_wall_radius() -> f64 {
    families::DEFAULT_WALL_RADIUS
}

fn default_period() -> f64 {
    1.0
}

/// One boundary piece in a custom profile. Angles are in radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PieceSpec {
    Arc { center: [f64; 2], radius: f64, start_angle: f64, sweep: f64 },
    Segment { a: [f64; 2], b: [f64; 2] },
}

impl FamilySpec {
    /// Short family name as used on the command line.
    pub fn name(&self) -> &'static str {
        match self {
            FamilySpec::Bumps { .. } => "bumps",
            FamilySpec::Mixture { .. } => "mixture",
            FamilySpec::Flat => "flat",
            FamilySpec::TwoBumps { .. } => "two-bumps",
            FamilySpec::BumpsWithWall { .. } => "bumps-with-wall",
            FamilySpec::Custom { .. } => "custom",
        }
    }

    /// Parameters as `key=value` pairs separated by `;`.
    pub fn params(&self) -> String {
        match self {
            FamilySpec::Bumps { k } => format!("K={k}"),
            FamilySpec::Mixture { alpha } => format!("alpha={alpha}"),
            FamilySpec::Flat => String::new(),
            FamilySpec::TwoBumps { d, k_big, k_small } => format!("d={d};K_big={k_big};K_small={k_small}"),
            FamilySpec::BumpsWithWall { w, d, r } => format!("w={w};d={d};R={r}"),
            FamilySpec::Custom { period, pieces } => format!("period={period};pieces={}", pieces.len()),
        }
    }

    pub fn build<T: Real>(&self) -> Result<Profile<T>, GeometryError> {
        match *self {
            FamilySpec::Bumps { k } => families::make_bumps(lit(k)),
            FamilySpec::Mixture { alpha } => families::make_mixture(lit(alpha)),
            FamilySpec::Flat => families::make_flat(),
            FamilySpec::TwoBumps { d, k_big, k_small } => families::make_two_bumps(lit(d), lit(k_big), lit(k_small)),
            FamilySpec::BumpsWithWall { w, d, r } => families::make_bumps_with_wall(lit(w), lit(d), lit(r)),
            FamilySpec::Custom { period, ref pieces } => {
                let v = |p: [f64; 2]| Vec2::new(lit(p[0]), lit(p[1]));
                let pieces = pieces
                    .iter()
                    .map(|p| match *p {
                        PieceSpec::Arc { center, radius, start_angle, sweep } => {
                            BoundaryPiece::arc(v(center), lit(radius), lit(start_angle), lit(sweep))
                        }
                        PieceSpec::Segment { a, b } => BoundaryPiece::segment(v(a), v(b)),
                    })
                    .collect();
                Profile::new(pieces, lit(period), self.clone())
            }
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("family spec serializes")
    }
}

impl<T: Real> Profile<T> {
    /// Explicit piece list describing this profile, suitable for a custom
    /// family config.
    pub fn to_custom_spec(&self) -> FamilySpec {
        let f = |v: T| v.to_f64().expect("finite");
        let v = |p: Vec2<T>| [f(p.x), f(p.y)];
        FamilySpec::Custom {
            period: f(self.period()),
            pieces: self
                .pieces()
                .iter()
                .map(|p| match *p {
                    BoundaryPiece::Arc { center, radius, start_angle, sweep } => PieceSpec::Arc {
                        center: v(center),
                        radius: f(radius),
                        start_angle: f(start_angle),
                        sweep: f(sweep),
                    },
                    BoundaryPiece::Segment { a, b } => PieceSpec::Segment { a: v(a), b: v(b) },
                })
                .collect(),
        }
    }
}
