use std::f64::consts::PI;

use proptest::prelude::*;

use errand_core::nav::{
    closest_approach, compute_velocity_obstacles, select_velocity, to_diff_drive, ControllerParams,
    ObservationSnapshot, ObservedAgent,
};
use errand_core::world::{GridMap, Pose2D, Vec2};

fn map() -> GridMap {
    GridMap::empty(4, 4, 1.0, Vec2::new(-2.0, -2.0)).unwrap()
}

fn snapshot(map: &GridMap, robot: Pose2D, peds: Vec<ObservedAgent>) -> ObservationSnapshot<'_> {
    ObservationSnapshot {
        robot,
        robot_velocity: Vec2::ZERO,
        pedestrians: peds,
        goal: robot.position(),
        map,
    }
}

#[test]
fn half_angle_at_twice_the_combined_radius() {
    let m = map();
    let params = ControllerParams::default();
    let ped = ObservedAgent {
        position: Vec2::new(1.2, 0.0),
        velocity: Vec2::ZERO,
        radius: 0.3,
    };
    let cones = compute_velocity_obstacles(
        &snapshot(&m, Pose2D::new(0.0, 0.0, 0.0), vec![ped]),
        &params,
    );
    assert!((cones[0].half_angle - PI / 6.0).abs() < 1e-12);
    assert!(!cones[0].all_blocking);
}

#[test]
fn overlap_blocks_everything() {
    let m = map();
    let params = ControllerParams::default();
    let ped = ObservedAgent {
        position: Vec2::new(0.4, 0.0),
        velocity: Vec2::ZERO,
        radius: 0.3,
    };
    let obs = snapshot(&m, Pose2D::new(0.0, 0.0, 0.0), vec![ped]);
    let cones = compute_velocity_obstacles(&obs, &params);
    assert!(cones[0].all_blocking);
    assert!(cones[0].contains(Vec2::new(-0.7, 0.0)));
    let choice = select_velocity(&obs, Vec2::new(0.5, 0.0), &params);
    assert!(!choice.admissible);
    assert_eq!(choice.velocity, Vec2::ZERO);
}

fn agent() -> impl Strategy<Value = ObservedAgent> {
    (0.65..4.0f64, -PI..PI, 0.0..1.5f64, -PI..PI, 0.1..0.35f64).prop_map(
        |(d, bearing, s, heading, radius)| ObservedAgent {
            position: Vec2::from_polar(d, bearing),
            velocity: Vec2::from_polar(s, heading),
            radius,
        },
    )
}

proptest! {
    /// Cone membership agrees with the closest-approach test away from the
    /// boundary.
    #[test]
    fn cone_matches_closest_approach(ped in agent(), speed in 0.0..0.7f64, heading in -PI..PI) {
        let m = map();
        let params = ControllerParams::default();
        let obs = snapshot(&m, Pose2D::new(0.0, 0.0, 0.0), vec![ped]);
        let cone = compute_velocity_obstacles(&obs, &params)[0];
        let v = Vec2::from_polar(speed, heading);
        let gap = closest_approach(-ped.position, v - ped.velocity, params.horizon);
        let combined = params.robot_radius + ped.radius;
        prop_assume!((gap - combined).abs() > 1e-6);
        prop_assert_eq!(cone.contains(v), gap < combined);
    }

    /// Diff-drive commands stay within the kinematic limits.
    #[test]
    fn diff_drive_is_bounded(vx in -3.0..3.0f64, vy in -3.0..3.0f64, heading in -10.0..10.0f64) {
        let params = ControllerParams::default();
        let cmd = to_diff_drive(Vec2::new(vx, vy), Pose2D::new(0.0, 0.0, heading), &params);
        prop_assert!(cmd.linear >= 0.0 && cmd.linear <= params.v_max);
        prop_assert!(cmd.angular.abs() <= params.omega_max);
    }

    /// The chosen velocity is one of the candidates and never exceeds v_max.
    #[test]
    fn choice_is_a_bounded_candidate(peds in proptest::collection::vec(agent(), 0..4), px in -1.0..1.0f64, py in -1.0..1.0f64) {
        let m = map();
        let params = ControllerParams::default();
        let preferred = Vec2::new(px, py);
        let obs = snapshot(&m, Pose2D::new(0.0, 0.0, 0.3), peds);
        let choice = select_velocity(&obs, preferred, &params);
        prop_assert!(choice.velocity.norm() <= params.v_max + 1e-12);
        let clamped = if preferred.norm() > params.v_max { preferred * (params.v_max / preferred.norm()) } else { preferred };
        let candidates = errand_core::nav::candidate_velocities(clamped, &params);
        prop_assert!(candidates.contains(&choice.velocity));
    }
}
