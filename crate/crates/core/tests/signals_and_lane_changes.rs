mod common;

use trafficsim::engine::{
    max_pressure_phase, mobil_decide, phase_pressure, Controller, IdmParams, LaneDecision, LaneIndex, Light,
    MobilParams, Motion, SignalState, Snapshot, VehicleView,
};
use trafficsim::network::{LaneId, Phase, RoadNetwork, SignalProgram};

/// Snapshot with `n` vehicles queued on the single lane of each listed road.
fn queues(net: &RoadNetwork, counts: &[(&str, usize)]) -> LaneIndex {
    let mut motions = Vec::new();
    for (road, n) in counts {
        let lane = net.roads[*road].lanes[0];
        for k in 0..*n {
            motions.push(Some(Motion { id: motions.len() as u64, lane, s: 100.0 - 7.0 * k as f64, v: 0.0, length: 5.0 }));
        }
    }
    LaneIndex::build(net.lanes.len(), &Snapshot { motions })
}

/// One phase per approach of the centre junction of a 3×3 grid, in the order
/// given, each serving every movement of its approach.
fn four_phase_program(net: &RoadNetwork, approaches: &[&str]) -> SignalProgram {
    let junction = &net.junctions["j_1_1"];
    let phases = approaches
        .iter()
        .map(|road| {
            let lane = net.roads[*road].lanes[0];
            let mut green: Vec<LaneId> =
                junction.connectors.iter().copied().filter(|&c| net.lanes[c as usize].predecessors == [lane]).collect();
            green.sort_unstable();
            Phase { duration: 33.0, green }
        })
        .collect();
    SignalProgram { junction: "j_1_1".into(), phases, offset: 0.0, clearance: 3.0 }
}

const APPROACHES: [&str; 4] = ["r_0_1_1_1", "r_2_1_1_1", "r_1_0_1_1", "r_1_2_1_1"];

#[test]
fn asymmetric_queues_pick_hand_computed_argmax() {
    let net = common::grid(3, 3, 1);
    let program = four_phase_program(&net, &APPROACHES);
    // Upstream queues A=4, B=2, C=6, D=6; downstream counts on the exits
    // towards A, B, C, D are 8, 5, 0, 4. Each approach feeds the three
    // exits other than its own direction:
    //   A: 3·4 − (5 + 0 + 4) = 3
    //   B: 3·2 − (8 + 0 + 4) = −6
    //   C: 3·6 − (8 + 5 + 4) = 1
    //   D: 3·6 − (8 + 5 + 0) = 5
    let index = queues(
        &net,
        &[
            ("r_0_1_1_1", 4),
            ("r_2_1_1_1", 2),
            ("r_1_0_1_1", 6),
            ("r_1_2_1_1", 6),
            ("r_1_1_0_1", 8),
            ("r_1_1_2_1", 5),
            ("r_1_1_1_2", 4),
        ],
    );
    let pressures: Vec<i64> = (0..4).map(|p| phase_pressure(&program, p, &index, &net.lanes)).collect();
    assert_eq!(pressures, vec![3, -6, 1, 5]);
    assert_eq!(max_pressure_phase(&program, &index, &net.lanes), 3);
}

#[test]
fn single_queue_wins_and_ties_go_to_phase_zero() {
    let net = common::grid(3, 3, 1);
    let program = four_phase_program(&net, &APPROACHES);
    let empty = queues(&net, &[]);
    assert_eq!(max_pressure_phase(&program, &empty, &net.lanes), 0);
    let one = queues(&net, &[("r_1_0_1_1", 3)]);
    assert_eq!(max_pressure_phase(&program, &one, &net.lanes), 2);

    let default = net.junctions["j_1_1"].signal.clone().unwrap();
    let serving = default
        .phases
        .iter()
        .position(|p| p.green.iter().any(|&c| net.lanes[c as usize].predecessors[0] == net.roads["r_1_0_1_1"].lanes[0]))
        .unwrap();
    assert_eq!(max_pressure_phase(&default, &one, &net.lanes), serving);
    let equal = queues(&net, &APPROACHES.iter().map(|r| (*r, 2)).collect::<Vec<_>>());
    assert_eq!(max_pressure_phase(&default, &equal, &net.lanes), 0);
}

#[test]
fn max_pressure_switch_respects_amber_and_clearance() {
    let net = common::grid(3, 3, 1);
    let program = four_phase_program(&net, &APPROACHES);
    let controller = Controller::max_pressure();
    let index = queues(&net, &[("r_2_1_1_1", 5)]);
    let c0 = program.phases[0].green[0];
    let mut state = SignalState::start(&program, &controller, 0);
    let mut lights = Vec::new();
    for _ in 0..18 {
        lights.push(state.light(&program, c0, 3.0));
        state.advance(&program, &controller, 1.0, 3.0, &index, &net.lanes);
    }
    // Decision at 12 s (15 s interval minus amber), amber to 15 s, then 3 s all-red.
    assert!(lights[..12].iter().all(|&l| l == Light::Green));
    assert!(lights[12..].iter().all(|&l| l == Light::Amber));
    assert_eq!(state.phase, 1);
    assert_eq!(state.light(&program, c0, 3.0), Light::Red);
}

#[test]
fn max_pressure_extends_a_winning_phase() {
    let net = common::grid(3, 3, 1);
    let program = four_phase_program(&net, &APPROACHES);
    let controller = Controller::max_pressure();
    let index = queues(&net, &[("r_0_1_1_1", 5)]);
    let mut state = SignalState::start(&program, &controller, 0);
    for _ in 0..100 {
        state.advance(&program, &controller, 1.0, 3.0, &index, &net.lanes);
    }
    assert_eq!(state.phase, 0);
    assert!(state.green_end > 100.0);
}

#[test]
fn fixed_phase_cycles_with_program_durations() {
    let net = common::grid(3, 3, 1);
    let program = net.junctions["j_1_1"].signal.clone().unwrap();
    let index = queues(&net, &[]);
    let mut state = SignalState::at_time_zero(&program, &Controller::FixedPhase);
    let mut phases = Vec::new();
    for _ in 0..66 {
        phases.push(state.phase);
        state.advance(&program, &Controller::FixedPhase, 1.0, 3.0, &index, &net.lanes);
    }
    assert!(phases[..33].iter().all(|&p| p == 0));
    assert!(phases[33..].iter().all(|&p| p == 1));
    assert_eq!(state.phase, 0);
}

fn view(s: f64, v: f64) -> VehicleView {
    VehicleView { s, v, length: 5.0, v_cap: 30.0 }
}

#[test]
fn blocked_lane_changes_into_empty_lane_when_evaluated() {
    let (p, idm) = (MobilParams::default(), IdmParams::default());
    let me = view(100.0, 10.0);
    let stopped = view(115.0, 0.0);
    for draw in [0.0, 0.3, 0.89] {
        assert_eq!(mobil_decide(&me, Some(&stopped), None, None, None, &p, &idm, draw), LaneDecision::Change);
    }
    for draw in [0.9, 0.95, 0.999] {
        assert_eq!(mobil_decide(&me, Some(&stopped), None, None, None, &p, &idm, draw), LaneDecision::Stay);
    }
}

#[test]
fn fast_close_follower_vetoes_change() {
    let (p, idm) = (MobilParams::default(), IdmParams::default());
    let me = view(100.0, 10.0);
    let stopped = view(115.0, 0.0);
    let tailgater = view(94.0, 25.0);
    for draw in [0.0, 0.5, 0.89] {
        assert_eq!(mobil_decide(&me, Some(&stopped), None, None, Some(&tailgater), &p, &idm, draw), LaneDecision::Stay);
    }
}

#[test]
fn identical_lanes_give_no_incentive() {
    let (p, idm) = (MobilParams::default(), IdmParams::default());
    let me = view(100.0, 10.0);
    let (leader, follower) = (view(140.0, 9.0), view(70.0, 10.0));
    assert_eq!(
        mobil_decide(&me, Some(&leader), Some(&follower), Some(&leader), Some(&follower), &p, &idm, 0.0),
        LaneDecision::Stay
    );
}
