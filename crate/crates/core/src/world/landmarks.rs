//! The landmark dictionary: named places and their world coordinates.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::geometry::Vec2;
use super::grid::GridMap;
use super::WorldError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Landmark {
    pub name: String,
    pub aliases: Vec<String>,
    pub position: Vec2,
}

/// A resolved reference to a dictionary entry. Only [`LandmarkDictionary`]
/// hands these out, so every `LandmarkRef` names a known landmark.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandmarkRef {
    name: String,
    position: Vec2,
}

impl LandmarkRef {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn position(&self) -> Vec2 {
        self.position
    }
}

/// Lowercases and collapses internal whitespace.
pub fn canonical_name(s: &str) -> String {
    s.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LandmarkDictionary {
    landmarks: Vec<Landmark>,
    by_name: HashMap<String, usize>,
    by_alias: HashMap<String, usize>,
}

impl LandmarkDictionary {
    /// Validates and indexes the given landmarks against `map`.
    pub fn new(landmarks: Vec<Landmark>, map: &GridMap) -> Result<Self, WorldError> {
        let mut dict = LandmarkDictionary::default();
        for lm in landmarks {
            dict.insert(lm, map)?;
        }
        Ok(dict)
    }

    fn insert(&mut self, mut lm: Landmark, map: &GridMap) -> Result<(), WorldError> {
        lm.name = canonical_name(&lm.name);
        if lm.name.is_empty() {
            return Err(WorldError::LandmarkFormat {
                line: 0,
                reason: "empty landmark name".into(),
            });
        }
        if self.by_name.contains_key(&lm.name) || self.by_alias.contains_key(&lm.name) {
            return Err(WorldError::DuplicateLandmark(lm.name));
        }
        let mut aliases: Vec<String> = Vec::new();
        for alias in lm.aliases.iter().map(|a| canonical_name(a)) {
            if alias.is_empty() || alias == lm.name || aliases.contains(&alias) {
                continue;
            }
            if self.by_name.contains_key(&alias) || self.by_alias.contains_key(&alias) {
                return Err(WorldError::DuplicateAlias(alias));
            }
            aliases.push(alias);
        }
        lm.aliases = aliases;

        let cell = map
            .world_to_cell(lm.position)
            .map_err(|_| WorldError::LandmarkOffMap(lm.name.clone()))?;
        if map.is_occupied(cell) {
            return Err(WorldError::LandmarkOnObstacle(lm.name.clone()));
        }

        let idx = self.landmarks.len();
        self.by_name.insert(lm.name.clone(), idx);
        for alias in &lm.aliases {
            self.by_alias.insert(alias.clone(), idx);
        }
        self.landmarks.push(lm);
        Ok(())
    }

    /// Parses the landmarks CSV (`name,alias1|alias2,x,y`).
    pub fn parse(contents: &str, map: &GridMap) -> Result<Self, WorldError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .comment(Some(b'#'))
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(contents.as_bytes());
        let mut dict = LandmarkDictionary::default();
        for record in reader.records() {
            let record = record.map_err(|e| WorldError::LandmarkFormat {
                line: e.position().map_or(0, |p| p.line() as usize),
                reason: e.to_string(),
            })?;
            let line = record.position().map_or(0, |p| p.line() as usize);
            if record.iter().all(str::is_empty) {
                continue;
            }
            if record.len() != 4 {
                return Err(WorldError::LandmarkFormat {
                    line,
                    reason: format!("expected 4 fields, found {}", record.len()),
                });
            }
            let coord = |i: usize, axis: &str| {
                record[i]
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| WorldError::LandmarkFormat {
                        line,
                        reason: format!("invalid {axis} coordinate {:?}", &record[i]),
                    })
            };
            let lm = Landmark {
                name: record[0].to_string(),
                aliases: record[1]
                    .split('|')
                    .map(str::trim)
                    .filter(|a| !a.is_empty())
                    .map(String::from)
                    .collect(),
                position: Vec2::new(coord(2, "x")?, coord(3, "y")?),
            };
            if canonical_name(&lm.name).is_empty() {
                return Err(WorldError::LandmarkFormat {
                    line,
                    reason: "empty landmark name".into(),
                });
            }
            dict.insert(lm, map)?;
        }
        Ok(dict)
    }

    /// Canonical CSV form, one landmark per line in dictionary order.
    pub fn to_text(&self) -> String {
        let mut writer = csv::WriterBuilder::new()
            .has_headers(false)
            .from_writer(Vec::new());
        for lm in &self.landmarks {
            // Writing into a Vec cannot fail.
            writer
                .write_record([
                    lm.name.clone(),
                    lm.aliases.join("|"),
                    lm.position.x.to_string(),
                    lm.position.y.to_string(),
                ])
                .expect("in-memory csv write");
        }
        String::from_utf8(writer.into_inner().expect("in-memory csv flush")).expect("utf-8 input")
    }

    pub fn landmarks(&self) -> &[Landmark] {
        &self.landmarks
    }

    pub fn len(&self) -> usize {
        self.landmarks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.landmarks.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&Landmark> {
        self.by_name.get(name).map(|&i| &self.landmarks[i])
    }

    fn reference(&self, idx: usize) -> LandmarkRef {
        let lm = &self.landmarks[idx];
        LandmarkRef {
            name: lm.name.clone(),
            position: lm.position,
        }
    }

    /// Resolves a place name: exact name, then exact alias, then a unique
    /// landmark whose name or alias token set contains, or is contained in,
    /// the query's token set.
    pub fn lookup(&self, query: &str) -> Result<LandmarkRef, WorldError> {
        let query = canonical_name(query);
        if query.is_empty() {
            return Err(WorldError::UnknownLocation(query));
        }
        if let Some(&i) = self.by_name.get(&query) {
            return Ok(self.reference(i));
        }
        if let Some(&i) = self.by_alias.get(&query) {
            return Ok(self.reference(i));
        }

        let wanted: BTreeSet<&str> = query.split(' ').collect();
        let matches: Vec<usize> = self
            .landmarks
            .iter()
            .enumerate()
            .filter(|(_, lm)| {
                std::iter::once(&lm.name).chain(&lm.aliases).any(|label| {
                    let tokens: BTreeSet<&str> = label.split(' ').collect();
                    tokens.is_superset(&wanted) || tokens.is_subset(&wanted)
                })
            })
            .map(|(i, _)| i)
            .collect();
        match matches.as_slice() {
            [] => Err(WorldError::UnknownLocation(query)),
            [i] => Ok(self.reference(*i)),
            many => Err(WorldError::AmbiguousLocation {
                query,
                candidates: many
                    .iter()
                    .map(|&i| self.landmarks[i].name.clone())
                    .collect(),
            }),
        }
    }
}
