//! The `.scenario` text format.
//!
//! ```text
//! map lobby.grid
//! landmarks lobby.landmarks
//! robot_start 1.0 1.0 0.0
//! pedestrians 6
//! seed 1
//! param horizon 3.0
//! at 0 command "bring the keys from security to trail"
//! ```
//!
//! Paths are relative to the scenario file. `#` starts a comment line.
//! Command text is double-quoted; `\"` and `\\` are the only escapes.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::world::{GridMap, LandmarkDictionary, Pose2D};

use super::{SimConfig, SimError, World};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduledCommand {
    /// Simulation seconds.
    pub at: f64,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub map: String,
    pub landmarks: String,
    pub robot_start: Pose2D,
    pub pedestrians: usize,
    pub seed: u64,
    /// Overrides applied in order with [`SimConfig::set_param`].
    pub params: Vec<(String, f64)>,
    pub commands: Vec<ScheduledCommand>,
}

fn format_err(line: usize, reason: impl Into<String>) -> SimError {
    SimError::ScenarioFormat {
        line,
        reason: reason.into(),
    }
}

fn number<T: std::str::FromStr>(
    token: Option<&str>,
    line: usize,
    what: &str,
) -> Result<T, SimError> {
    let token = token.ok_or_else(|| format_err(line, format!("missing {what}")))?;
    token
        .parse()
        .map_err(|_| format_err(line, format!("{what} {token:?} is not a valid number")))
}

fn finite(value: f64, line: usize, what: &str) -> Result<f64, SimError> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(format_err(line, format!("{what} must be finite")))
    }
}

fn unquote(s: &str, line: usize) -> Result<String, SimError> {
    let inner = s
        .strip_prefix('"')
        .and_then(|r| r.strip_suffix('"'))
        .filter(|_| s.len() >= 2)
        .ok_or_else(|| format_err(line, "command text must be double-quoted"))?;
    let mut out = String::with_capacity(inner.len());
    let mut chars = inner.chars();
    while let Some(c) = chars.next() {
        match c {
            '\\' => match chars.next() {
                Some(e @ ('"' | '\\')) => out.push(e),
                _ => return Err(format_err(line, "only \\\" and \\\\ escapes are allowed")),
            },
            '"' => return Err(format_err(line, "unescaped quote inside command text")),
            c => out.push(c),
        }
    }
    Ok(out)
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

impl Scenario {
    pub fn parse(contents: &str) -> Result<Scenario, SimError> {
        let mut map = None;
        let mut landmarks = None;
        let mut robot_start = None;
        let mut pedestrians = None;
        let mut seed = None;
        let mut params = Vec::new();
        let mut commands = Vec::new();
        let mut probe = SimConfig::default();

        fn once<T>(slot: &mut Option<T>, value: T, line: usize, key: &str) -> Result<(), SimError> {
            if slot.replace(value).is_some() {
                return Err(format_err(line, format!("duplicate {key} line")));
            }
            Ok(())
        }

        for (i, raw) in contents.lines().enumerate() {
            let line = i + 1;
            let text = raw.trim();
            if text.is_empty() || text.starts_with('#') {
                continue;
            }
            let (key, rest) = text.split_once(char::is_whitespace).unwrap_or((text, ""));
            let rest = rest.trim();
            let mut tokens = rest.split_whitespace();
            match key {
                "map" | "landmarks" => {
                    if rest.is_empty() {
                        return Err(format_err(line, format!("{key} needs a path")));
                    }
                    let slot = if key == "map" {
                        &mut map
                    } else {
                        &mut landmarks
                    };
                    once(slot, rest.to_string(), line, key)?;
                    continue;
                }
                "robot_start" => {
                    let x = finite(number(tokens.next(), line, "x")?, line, "x")?;
                    let y = finite(number(tokens.next(), line, "y")?, line, "y")?;
                    let h = finite(number(tokens.next(), line, "heading")?, line, "heading")?;
                    once(&mut robot_start, Pose2D::new(x, y, h), line, key)?;
                }
                "pedestrians" => once(
                    &mut pedestrians,
                    number(tokens.next(), line, "count")?,
                    line,
                    key,
                )?,
                "seed" => once(&mut seed, number(tokens.next(), line, "seed")?, line, key)?,
                "param" => {
                    let name = tokens
                        .next()
                        .ok_or_else(|| format_err(line, "param needs a name"))?
                        .to_string();
                    let value = finite(number(tokens.next(), line, "value")?, line, "value")?;
                    probe
                        .set_param(&name, value)
                        .map_err(|e| format_err(line, e.to_string()))?;
                    params.push((name, value));
                }
                "at" => {
                    let (t, after) = rest.split_once(char::is_whitespace).unwrap_or((rest, ""));
                    let at: f64 = number(Some(t), line, "time")?;
                    if !(at >= 0.0 && at.is_finite()) {
                        return Err(format_err(line, "command time must be non-negative"));
                    }
                    let body = after
                        .trim_start()
                        .strip_prefix("command")
                        .ok_or_else(|| format_err(line, "expected `at <t> command \"<text>\"`"))?;
                    commands.push(ScheduledCommand {
                        at,
                        text: unquote(body.trim(), line)?,
                    });
                    continue;
                }
                other => return Err(format_err(line, format!("unknown directive {other:?}"))),
            }
            if tokens.next().is_some() {
                return Err(format_err(line, format!("trailing tokens after {key}")));
            }
        }

        let end = contents.lines().count() + 1;
        Ok(Scenario {
            map: map.ok_or_else(|| format_err(end, "missing map line"))?,
            landmarks: landmarks.ok_or_else(|| format_err(end, "missing landmarks line"))?,
            robot_start: robot_start.ok_or_else(|| format_err(end, "missing robot_start line"))?,
            pedestrians: pedestrians.unwrap_or(0),
            seed: seed.unwrap_or(0),
            params,
            commands,
        })
    }

    /// Canonical text: fixed key order, params before commands.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "map {}", self.map);
        let _ = writeln!(out, "landmarks {}", self.landmarks);
        let p = self.robot_start;
        let _ = writeln!(out, "robot_start {} {} {}", p.x, p.y, p.heading);
        let _ = writeln!(out, "pedestrians {}", self.pedestrians);
        let _ = writeln!(out, "seed {}", self.seed);
        for (name, value) in &self.params {
            let _ = writeln!(out, "param {name} {value}");
        }
        for c in &self.commands {
            let _ = writeln!(out, "at {} command {}", c.at, quote(&c.text));
        }
        out
    }

    /// Defaults, then the scenario's seed and crowd size, then its params.
    pub fn config(&self) -> Result<SimConfig, SimError> {
        let mut config = SimConfig {
            seed: self.seed,
            pedestrian_count: self.pedestrians,
            ..SimConfig::default()
        };
        for (name, value) in &self.params {
            config.set_param(name, *value)?;
        }
        config.validate()?;
        Ok(config)
    }
}

fn read(path: &Path) -> Result<String, SimError> {
    std::fs::read_to_string(path).map_err(|e| SimError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// A scenario with its map and landmarks read from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedScenario {
    /// File stem, used as the scenario's name.
    pub name: String,
    pub path: PathBuf,
    pub scenario: Scenario,
    pub map: GridMap,
    pub dictionary: LandmarkDictionary,
}

impl LoadedScenario {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, SimError> {
        let path = path.as_ref();
        let scenario = Scenario::parse(&read(path)?)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let map = GridMap::parse(&read(&base.join(&scenario.map))?)?;
        let dictionary = LandmarkDictionary::parse(&read(&base.join(&scenario.landmarks))?, &map)?;
        Ok(Self {
            name: path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default(),
            path: path.to_path_buf(),
            scenario,
            map,
            dictionary,
        })
    }

    pub fn config(&self) -> Result<SimConfig, SimError> {
        self.scenario.config()
    }

    pub fn world(&self, config: SimConfig) -> Result<World, SimError> {
        World::new(self.map.clone(), self.scenario.robot_start, config)
    }
}
