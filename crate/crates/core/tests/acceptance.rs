//! Acceptance suite. Runs every primary criterion, prints one line each, and
//! exits non-zero if any criterion fails.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::{PI, SQRT_2};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use errand_core::corpus::{corpus_to_text, evaluate, parse_corpus, validate_corpus};
use errand_core::fsm::{ExecutorStatus, FsmEvent, FsmState};
use errand_core::nav::{
    candidate_velocities, plan_path, select_velocity, ControllerParams, ObservationSnapshot,
    ObservedAgent,
};
use errand_core::nlu::{
    interpret, CommandId, CommandSource, CommandText, Issue, MockTranslator, TaskSpec,
};
use errand_core::sim::{run_scripted, run_scripted_with, LoadedScenario, Scenario};
use errand_core::world::{wrap_angle, Cell, GridMap, LandmarkDictionary, Pose2D, Vec2};

/// Seeds the bundled lobby scenario documents for the end-to-end criterion.
const LOBBY_SEEDS: [u64; 5] = [1, 2, 3, 4, 5];
const EPS: f64 = 1e-9;

type Outcome = Result<String, String>;

fn assets() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../assets")
}

fn read(name: &str) -> String {
    std::fs::read_to_string(assets().join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn map_and_dictionary(stem: &str) -> (GridMap, LandmarkDictionary) {
    let map = GridMap::parse(&read(&format!("{stem}.grid"))).expect("bundled map parses");
    let dict = LandmarkDictionary::parse(&read(&format!("{stem}.landmarks")), &map)
        .expect("bundled landmarks parse");
    (map, dict)
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    check(elapsed < limit, || {
        format!("took {elapsed:.2?}, limit {limit:?}")
    })
}

fn parse_task(text: &str, dict: &LandmarkDictionary) -> Result<TaskSpec, String> {
    let text = CommandText::new(text, CommandSource::Cli).map_err(|e| e.to_string())?;
    interpret(
        &text,
        &MockTranslator,
        dict,
        Issue::new(CommandId::sequential(1), 0.0),
    )
    .map_err(|e| e.to_string())
}

fn nlu_corpus() -> Outcome {
    let start = Instant::now();
    let (_, office) = map_and_dictionary("office");
    let entries = parse_corpus(&read("commands.corpus")).map_err(|e| e.to_string())?;
    check(entries.len() == 50, || {
        format!("corpus has {} entries", entries.len())
    })?;
    validate_corpus(&entries, &office).map_err(|e| e.to_string())?;
    let report = evaluate(&entries, &MockTranslator, &office);
    let elapsed = start.elapsed();
    if let Some(miss) = report.entries.iter().find(|r| !r.correct) {
        return Err(format!(
            "accuracy {}/{}; first miss {:?} -> {:?} {:?}",
            report.correct, report.total, miss.command, miss.predicted, miss.error
        ));
    }
    within(elapsed, Duration::from_secs(5))?;

    let (_, lobby) = map_and_dictionary("lobby");
    let expected = [
        (
            "Could you please bring the keys from security to TRAIL?",
            ("security", "keys", "trail"),
        ),
        (
            "I forgot my laptop, please bring a laptop from the computer station to the robotics lab.",
            ("computer station", "laptop", "robotics lab"),
        ),
    ];
    for (text, (pickup, item, delivery)) in expected {
        let t = parse_task(text, &lobby)?;
        let got = (t.pickup.name(), t.item.as_str(), t.delivery.name());
        check(got == (pickup, item, delivery), || {
            format!("{text:?} parsed to {got:?}")
        })?;
    }
    Ok(format!("50/50 exact, demo commands exact, {elapsed:.2?}"))
}

fn article_insensitivity() -> Outcome {
    let (_, dict) = map_and_dictionary("office");
    let places: Vec<&str> = dict.landmarks().iter().map(|l| l.name.as_str()).collect();
    let items = [
        "keys",
        "laptop",
        "mail",
        "red folder",
        "usb drive",
        "coffee",
    ];
    let articles = ["the", "a", "an"];
    let mut rng = ChaCha8Rng::seed_from_u64(0xA271);

    for pair in 0..200 {
        let item = *items.choose(&mut rng).unwrap();
        let from = *places.choose(&mut rng).unwrap();
        let to = *places
            .iter()
            .filter(|p| **p != from)
            .collect::<Vec<_>>()
            .choose(&mut rng)
            .unwrap();
        let template: Vec<(&str, Option<&str>)> = match pair % 3 {
            0 => vec![
                ("bring", Some(item)),
                ("from", Some(from)),
                ("to", Some(to)),
            ],
            1 => vec![("from", Some(from)), ("take", Some(item)), ("to", Some(to))],
            _ => vec![
                ("go to", Some(from)),
                ("and grab", Some(item)),
                ("and deliver it to", Some(to)),
            ],
        };
        let plain: Vec<String> = template
            .iter()
            .map(|(lead, phrase)| format!("{lead} {}", phrase.unwrap()))
            .collect();
        // At least one article, before any subset of the noun phrases.
        let mut inserted = false;
        let with: Vec<String> = template
            .iter()
            .enumerate()
            .map(|(i, (lead, phrase))| {
                let last = i + 1 == template.len();
                if rng.random_bool(0.5) || (last && !inserted) {
                    inserted = true;
                    let a = articles.choose(&mut rng).unwrap();
                    format!("{lead} {a} {}", phrase.unwrap())
                } else {
                    format!("{lead} {}", phrase.unwrap())
                }
            })
            .collect();
        let (plain, with) = (plain.join(" "), with.join(" "));
        let a = parse_task(&plain, &dict).map_err(|e| format!("{plain:?}: {e}"))?;
        let b = parse_task(&with, &dict).map_err(|e| format!("{with:?}: {e}"))?;
        check(a == b, || {
            format!("{plain:?} and {with:?} differ: {a:?} vs {b:?}")
        })?;
    }
    Ok("200/200 pairs identical".into())
}

#[derive(Clone, Copy, PartialEq)]
struct Dist(f64, Cell);

impl Eq for Dist {}

impl Ord for Dist {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0)
    }
}

impl PartialOrd for Dist {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Dijkstra over 8-connected free cells in unit-cell lengths. A diagonal move
/// is blocked when both cells beside it are occupied.
fn dijkstra(map: &GridMap, start: Cell, goal: Cell) -> Option<f64> {
    let (w, h) = (map.width(), map.height());
    let idx = |c: Cell| c.row * w + c.col;
    let mut dist = vec![f64::INFINITY; w * h];
    let mut heap = BinaryHeap::new();
    dist[idx(start)] = 0.0;
    heap.push(Dist(0.0, start));
    while let Some(Dist(d, c)) = heap.pop() {
        if c == goal {
            return Some(d);
        }
        if d > dist[idx(c)] {
            continue;
        }
        for dr in -1i64..=1 {
            for dc in -1i64..=1 {
                if dr == 0 && dc == 0 {
                    continue;
                }
                let (r, col) = (c.row as i64 + dr, c.col as i64 + dc);
                if r < 0 || col < 0 || r >= h as i64 || col >= w as i64 {
                    continue;
                }
                let n = Cell::new(col as usize, r as usize);
                if map.is_occupied(n) {
                    continue;
                }
                let step = if dr != 0 && dc != 0 {
                    let a = Cell::new(col as usize, c.row);
                    let b = Cell::new(c.col, r as usize);
                    if map.is_occupied(a) && map.is_occupied(b) {
                        continue;
                    }
                    SQRT_2
                } else {
                    1.0
                };
                if d + step < dist[idx(n)] {
                    dist[idx(n)] = d + step;
                    heap.push(Dist(d + step, n));
                }
            }
        }
    }
    None
}

fn astar_oracle() -> Outcome {
    let start_time = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x0A57A2);
    let mut solved = 0;
    let mut attempts = 0;
    while solved < 100 {
        attempts += 1;
        let occupied: Vec<bool> = (0..400).map(|_| rng.random_bool(0.3)).collect();
        let map = GridMap::new(20, 20, 1.0, Vec2::ZERO, occupied).expect("valid grid");
        let free: Vec<Cell> = map.free_cells().collect();
        let (s, g) = (
            *free.choose(&mut rng).unwrap(),
            *free.choose(&mut rng).unwrap(),
        );
        if s == g {
            continue;
        }
        let Some(oracle) = dijkstra(&map, s, g) else {
            continue;
        };
        let path = plan_path(&map, map.cell_to_world(s), map.cell_to_world(g))
            .map_err(|e| format!("grid {attempts}: solvable instance failed: {e}"))?;
        // Path costs are sums of 1 and √2; equal optima agree to rounding.
        check((path.total_cost - oracle).abs() <= EPS, || {
            format!(
                "grid {attempts}: A* {} vs Dijkstra {oracle}",
                path.total_cost
            )
        })?;
        let walked: f64 = path.waypoints.windows(2).map(|w| w[0].distance(w[1])).sum();
        check((walked - oracle).abs() <= 1e-6, || {
            format!("grid {attempts}: waypoints walk {walked}")
        })?;
        check(
            path.waypoints.iter().all(|p| !map.is_occupied_at(*p)),
            || format!("grid {attempts}: path crosses an obstacle"),
        )?;
        solved += 1;
    }
    let elapsed = start_time.elapsed();
    within(elapsed, Duration::from_secs(10))?;
    Ok(format!(
        "100/100 solvable grids equal ({attempts} drawn), {elapsed:.2?}"
    ))
}

/// Minimum of `|p + t·v|` over `t ∈ [0, τ]`, by sampling the clamped vertex
/// of the quadratic and both endpoints.
fn min_separation(p: Vec2, v: Vec2, tau: f64) -> f64 {
    let at = |t: f64| ((p.x + t * v.x).powi(2) + (p.y + t * v.y).powi(2)).sqrt();
    let vv = v.x * v.x + v.y * v.y;
    let mut best = at(0.0).min(at(tau));
    if vv > 0.0 {
        let t = -(p.x * v.x + p.y * v.y) / vv;
        if t > 0.0 && t < tau {
            best = best.min(at(t));
        }
    }
    best
}

fn exhaustive_choice(
    robot: Pose2D,
    peds: &[ObservedAgent],
    preferred: Vec2,
    params: &ControllerParams,
) -> (Vec2, bool) {
    let mut candidates = vec![Vec2::ZERO, preferred];
    for i in 1..params.n_speed {
        for k in 1..=params.n_heading {
            let s = params.v_max * i as f64 / (params.n_speed - 1) as f64;
            let a = -PI + 2.0 * PI * k as f64 / params.n_heading as f64;
            candidates.push(Vec2::new(s * a.cos(), s * a.sin()));
        }
    }
    let admissible = |v: Vec2| {
        peds.iter().all(|p| {
            min_separation(
                robot.position() - p.position,
                v - p.velocity,
                params.horizon,
            ) >= params.robot_radius + p.radius
        })
    };
    let key = |v: Vec2| {
        let speed = v.norm();
        let heading = if speed > 0.0 {
            v.y.atan2(v.x)
        } else {
            robot.heading
        };
        [
            (v - preferred).norm_squared(),
            wrap_angle(heading - robot.heading).abs(),
            speed,
            heading,
        ]
    };
    let mut best: Option<(Vec2, [f64; 4])> = None;
    for v in candidates.into_iter().filter(|&v| admissible(v)) {
        let k = key(v);
        let better = best.is_none_or(|(_, bk)| {
            k.iter()
                .zip(bk)
                .map(|(a, b)| a.total_cmp(&b))
                .find(|o| o.is_ne())
                == Some(Ordering::Less)
        });
        if better {
            best = Some((v, k));
        }
    }
    best.map_or((Vec2::ZERO, false), |(v, _)| (v, true))
}

fn vo_oracle() -> Outcome {
    let start = Instant::now();
    let params = ControllerParams::default();
    let map = GridMap::empty(40, 40, 0.25, Vec2::new(-5.0, -5.0)).expect("valid grid");
    let mut rng = ChaCha8Rng::seed_from_u64(0x0B5);
    let mut stops = 0;
    for scene in 0..500 {
        let robot = Pose2D::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-PI..PI),
        );
        let count = if scene % 2 == 0 { 1 } else { 3 };
        let peds: Vec<ObservedAgent> = (0..count)
            .map(|_| {
                let radius = rng.random_range(0.2..0.4);
                let dist = rng.random_range(params.robot_radius + radius + 0.05..4.0);
                let bearing = rng.random_range(-PI..PI);
                ObservedAgent {
                    position: robot.position()
                        + Vec2::new(dist * bearing.cos(), dist * bearing.sin()),
                    velocity: Vec2::from_polar(
                        rng.random_range(0.0..1.5),
                        rng.random_range(-PI..PI),
                    ),
                    radius,
                }
            })
            .collect();
        let preferred = Vec2::from_polar(
            rng.random_range(0.0..params.v_max),
            rng.random_range(-PI..PI),
        );
        let obs = ObservationSnapshot {
            robot,
            robot_velocity: Vec2::ZERO,
            pedestrians: peds.clone(),
            goal: robot.position() + preferred,
            map: &map,
        };
        let choice = select_velocity(&obs, preferred, &params);
        let (velocity, admissible) = exhaustive_choice(robot, &peds, preferred, &params);
        check(
            choice.velocity == velocity && choice.admissible == admissible,
            || format!("scene {scene}: chose {choice:?}, exhaustive ({velocity:?}, {admissible})"),
        )?;
        check(
            candidate_velocities(preferred, &params).len()
                == 2 + (params.n_speed - 1) * params.n_heading,
            || format!("scene {scene}: candidate set size"),
        )?;
        if choice.admissible {
            for p in &peds {
                let gap = min_separation(
                    robot.position() - p.position,
                    choice.velocity - p.velocity,
                    params.horizon,
                );
                check(gap >= params.robot_radius + p.radius - EPS, || {
                    format!(
                        "scene {scene}: closest approach {gap} below {}",
                        params.robot_radius + p.radius
                    )
                })?;
            }
        } else {
            stops += 1;
        }
    }
    let elapsed = start.elapsed();
    within(elapsed, Duration::from_secs(10))?;
    Ok(format!(
        "500/500 scenes equal and safe ({stops} e-stops), {elapsed:.2?}"
    ))
}

fn fsm_closure() -> Outcome {
    let (_, dict) = map_and_dictionary("lobby");
    let task = |n: u64| {
        let text =
            CommandText::new("bring the keys from security to trail", CommandSource::Cli).unwrap();
        interpret(
            &text,
            &MockTranslator,
            &dict,
            Issue::new(CommandId::sequential(n), 0.0),
        )
        .unwrap()
    };
    let sequence = [
        FsmEvent::NewTask(task(1)),
        FsmEvent::ArrivedAtGoal,
        FsmEvent::ActionComplete,
        FsmEvent::ArrivedAtGoal,
        FsmEvent::ActionComplete,
    ];
    // One executor per state, reached by a prefix of the five-step sequence.
    let mut reached = Vec::new();
    let mut exec = ExecutorStatus::default();
    reached.push(exec.clone());
    for (i, event) in sequence.iter().cloned().enumerate() {
        exec.step(event, i as f64);
        reached.push(exec.clone());
    }
    let states: Vec<FsmState> = reached.iter().map(|e| e.state).collect();
    check(
        states
            == [
                FsmState::Idle,
                FsmState::NavigatingToPickup,
                FsmState::PickingUpItem,
                FsmState::NavigatingToDelivery,
                FsmState::DeliveringItem,
                FsmState::Idle,
            ],
        || format!("five-step sequence visited {states:?}"),
    )?;
    check(
        exec.carried_item.is_none() && exec.completed.len() == 1,
        || {
            format!(
                "after delivery: carried {:?}, completed {:?}",
                exec.carried_item, exec.completed
            )
        },
    )?;

    let events = [
        FsmEvent::NewTask(task(2)),
        FsmEvent::ArrivedAtGoal,
        FsmEvent::ActionComplete,
        FsmEvent::Abort,
        FsmEvent::NavigationFailed("blocked".into()),
    ];
    let mut pairs = 0;
    for state in FsmState::ALL {
        let base = reached
            .iter()
            .find(|e| e.state == state)
            .expect("every state is reachable");
        for event in &events {
            let mut e = base.clone();
            e.step(event.clone(), 10.0);
            check(
                FsmState::ALL.contains(&e.state) && e.invariants_hold(),
                || format!("{state} + {event} left {:?}", e.state),
            )?;
            pairs += 1;
        }
    }
    Ok(format!(
        "{pairs} state/event pairs closed, five-step sequence ends Idle"
    ))
}

fn lobby_end_to_end() -> Outcome {
    let start = Instant::now();
    let scenario =
        LoadedScenario::load(assets().join("lobby.scenario")).map_err(|e| e.to_string())?;
    check(
        scenario.map.width() == 30
            && scenario.map.height() == 30
            && scenario.map.resolution() == 0.25
            && scenario.dictionary.len() == 4
            && scenario.scenario.pedestrians == 6
            && scenario.scenario.commands.len() == 2,
        || "bundled lobby does not match its description".into(),
    )?;
    let mut failures = Vec::new();
    let mut summary = Vec::new();
    for seed in LOBBY_SEEDS {
        let mut config = scenario.config().map_err(|e| e.to_string())?;
        config.seed = seed;
        let r =
            run_scripted(&scenario, &config, &MockTranslator, None).map_err(|e| e.to_string())?;
        summary.push(format!(
            "seed {seed}: {}/2 done, static {}, pedestrian {}",
            r.tasks_completed, r.static_collisions, r.pedestrian_collisions
        ));
        if r.tasks_completed != 2 || r.static_collisions != 0 || r.pedestrian_collisions != 0 {
            failures.push(seed);
        }
    }

    let stream = |seed: u64| -> Result<Vec<u8>, String> {
        let mut config = scenario.config().map_err(|e| e.to_string())?;
        config.seed = seed;
        let mut bytes = Vec::new();
        run_scripted_with(&scenario, &config, &MockTranslator, None, |snap| {
            serde_json::to_writer(&mut bytes, snap).expect("snapshot serializes");
            bytes.push(b'\n');
        })
        .map_err(|e| e.to_string())?;
        Ok(bytes)
    };
    let (a, b) = (stream(LOBBY_SEEDS[0])?, stream(LOBBY_SEEDS[0])?);
    let deterministic = a == b;
    let elapsed = start.elapsed();
    let detail = format!(
        "{}; deterministic {deterministic}; {elapsed:.2?}",
        summary.join("; ")
    );
    if !failures.is_empty() || !deterministic {
        return Err(detail);
    }
    within(elapsed, Duration::from_secs(60))?;
    Ok(detail)
}

fn format_round_trips() -> Outcome {
    let mut checked = Vec::new();
    for entry in std::fs::read_dir(assets()).map_err(|e| e.to_string())? {
        let path = entry.map_err(|e| e.to_string())?.path();
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        let text = std::fs::read_to_string(&path).map_err(|e| e.to_string())?;
        let ok = match path.extension().and_then(|e| e.to_str()) {
            Some("grid") => {
                let map = GridMap::parse(&text).map_err(|e| format!("{name}: {e}"))?;
                GridMap::parse(&map.to_text()).ok() == Some(map)
            }
            Some("landmarks") => {
                let map_text = read(&name.replace(".landmarks", ".grid"));
                let map = GridMap::parse(&map_text).map_err(|e| format!("{name}: {e}"))?;
                let dict =
                    LandmarkDictionary::parse(&text, &map).map_err(|e| format!("{name}: {e}"))?;
                LandmarkDictionary::parse(&dict.to_text(), &map).ok() == Some(dict)
            }
            Some("corpus") => {
                let entries = parse_corpus(&text).map_err(|e| format!("{name}: {e}"))?;
                parse_corpus(&corpus_to_text(&entries)).ok() == Some(entries)
            }
            Some("scenario") => {
                let s = Scenario::parse(&text).map_err(|e| format!("{name}: {e}"))?;
                Scenario::parse(&s.to_text()).ok() == Some(s)
            }
            _ => continue,
        };
        check(ok, || format!("{name} changed after a round trip"))?;
        checked.push(name);
    }
    checked.sort();
    let kinds = ["grid", "landmarks", "corpus", "scenario"];
    check(
        kinds.iter().all(|k| checked.iter().any(|n| n.ends_with(k))),
        || format!("missing a format among {checked:?}"),
    )?;
    Ok(format!("{} files: {}", checked.len(), checked.join(", ")))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 7] = [
        ("nlu corpus accuracy", nlu_corpus),
        ("article insensitivity", article_insensitivity),
        ("a* oracle equivalence", astar_oracle),
        ("vo oracle equivalence and safety", vo_oracle),
        ("fsm exhaustive closure", fsm_closure),
        ("lobby end-to-end", lobby_end_to_end),
        ("format round-trips", format_round_trips),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        match std::panic::catch_unwind(run) {
            Ok(Ok(detail)) => println!("PASS  {name}: {detail}"),
            Ok(Err(detail)) => {
                failed += 1;
                println!("FAIL  {name}: {detail}");
            }
            Err(_) => {
                failed += 1;
                println!("FAIL  {name}: panicked");
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
