//! Static environment: occupancy grid, landmark dictionary, and geometry.

mod geometry;
mod grid;
mod landmarks;

pub use geometry::{wrap_angle, Pose2D, Vec2};
pub use grid::{Cell, GridMap};
pub use landmarks::{canonical_name, Landmark, LandmarkDictionary, LandmarkRef};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WorldError {
    #[error("map format error on line {line}: {reason}")]
    MapFormat { line: usize, reason: String },
    #[error("invalid map: {0}")]
    InvalidMap(String),
    #[error("point ({x}, {y}) is outside the map")]
    OutOfBounds { x: f64, y: f64 },
    #[error("landmark format error on line {line}: {reason}")]
    LandmarkFormat { line: usize, reason: String },
    #[error("duplicate landmark {0:?}")]
    DuplicateLandmark(String),
    #[error("alias {0:?} is used by more than one landmark")]
    DuplicateAlias(String),
    #[error("landmark {0:?} lies outside the map")]
    LandmarkOffMap(String),
    #[error("landmark {0:?} lies on an occupied cell")]
    LandmarkOnObstacle(String),
    #[error("unknown location {0:?}")]
    UnknownLocation(String),
    #[error("ambiguous location {query:?}: matches {candidates:?}")]
    AmbiguousLocation {
        query: String,
        candidates: Vec<String>,
    },
}

/// Parses a `.grid` file.
pub fn load_map(contents: &str) -> Result<GridMap, WorldError> {
    GridMap::parse(contents)
}

/// Parses a `.landmarks` file and validates every position against `map`.
pub fn load_landmarks(contents: &str, map: &GridMap) -> Result<LandmarkDictionary, WorldError> {
    LandmarkDictionary::parse(contents, map)
}

/// Resolves a normalized place name against the dictionary.
pub fn lookup_location(
    query: &str,
    dictionary: &LandmarkDictionary,
) -> Result<LandmarkRef, WorldError> {
    dictionary.lookup(query)
}
