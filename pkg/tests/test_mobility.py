"""Tests for vehicle kinematics, yielding, collisions and respawn."""

import math
import os
import sys
import unittest

import numpy as np

# Add the parent directory to the path to import from icrwsim
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from icrwsim.icrw import RiskAssessment, RiskLevel
from icrwsim.mobility import (Attention, Decision, DriverParams, IntersectionView, Traffic, VehicleState,
                              apply_driver_reaction, car_follow_accel, detect_collisions, stop_distance,
                              time_to_cover, yield_decision)
from icrwsim.rng import RandomStreams
from icrwsim.scenario import RoadNetwork, build_grid


def edge_between(net, source, target):
    for edge in net.edges:
        if edge.source == source and edge.target == target:
            return edge.id
    raise AssertionError(f"No edge {source}->{target}")


def vehicle_on(vid, edge, s, v=0.0, attention=Attention.CAREFUL, prev_edge=None):
    return VehicleState(id=vid, edge=edge, s=s, v=v, route=[edge], next_route=[edge],
                        attention=attention, prev_edge=prev_edge)


class TestKinematics(unittest.TestCase):
    """Tests for the car-following model and travel times."""

    def test_free_road_accelerates(self):
        self.assertEqual(car_follow_accel(0.0, None, 0.0, 13.89), 2.5)
        self.assertAlmostEqual(car_follow_accel(13.89, None, 0.0, 13.89), 0.0)

    def test_overlap_brakes_hard(self):
        self.assertEqual(car_follow_accel(10.0, 0.0, 10.0, 13.89), -8.0)
        self.assertEqual(car_follow_accel(10.0, -1.0, 10.0, 13.89), -8.0)

    def test_stopped_leader_close_ahead(self):
        self.assertEqual(car_follow_accel(10.0, 1.0, 0.0, 13.89), -8.0)

    def test_distant_leader_does_not_slow(self):
        self.assertEqual(car_follow_accel(5.0, 200.0, 10.0, 13.89), 2.5)

    def test_time_to_cover(self):
        self.assertAlmostEqual(time_to_cover(25.0, 0.0, 2.0, 10.0), 5.0)
        self.assertAlmostEqual(time_to_cover(45.0, 0.0, 2.0, 10.0), 7.0)
        self.assertAlmostEqual(time_to_cover(100.0, 10.0, 2.0, 10.0), 10.0)
        self.assertEqual(time_to_cover(0.0, 3.0, 2.0, 10.0), 0.0)


class TestDriverReaction(unittest.TestCase):
    """Tests for how drivers react to warnings and alarms."""

    def setUp(self):
        self.rng = np.random.default_rng(0)

    def distracted(self):
        return vehicle_on(1, 0, 10.0, attention=Attention.DISTRACTED)

    def test_alarm_forces_careful(self):
        vehicle = apply_driver_reaction(self.distracted(), RiskAssessment(RiskLevel.ALARM, 2.0, 1.0), self.rng)
        self.assertTrue(vehicle.icrw_forced_careful)
        self.assertTrue(vehicle.is_careful)

    def test_warning_compliance(self):
        warning = RiskAssessment(RiskLevel.WARNING, 5.0, 1.0)
        complied = apply_driver_reaction(self.distracted(), warning, self.rng, compliance=1.0)
        self.assertTrue(complied.icrw_forced_careful)
        ignored = apply_driver_reaction(self.distracted(), warning, self.rng, compliance=0.0)
        self.assertFalse(ignored.icrw_forced_careful)
        self.assertTrue(ignored.warning_drawn)

    def test_one_draw_per_approach(self):
        warning = RiskAssessment(RiskLevel.WARNING, 5.0, 1.0)
        vehicle = apply_driver_reaction(self.distracted(), warning, self.rng, compliance=0.0)
        rng = np.random.default_rng(5)
        state = rng.bit_generator.state
        apply_driver_reaction(vehicle, warning, rng, compliance=1.0)
        self.assertFalse(vehicle.icrw_forced_careful)
        self.assertEqual(rng.bit_generator.state, state)

    def test_idle_changes_nothing(self):
        vehicle = apply_driver_reaction(self.distracted(), RiskAssessment.idle(), self.rng)
        self.assertFalse(vehicle.icrw_forced_careful)
        self.assertFalse(vehicle.warning_drawn)


class TestYieldDecision(unittest.TestCase):
    """Tests for the right-of-way decision at the next intersection."""

    def setUp(self):
        self.net = build_grid(2, 2, 100.0, 2)
        self.east = edge_between(self.net, 3, 4)
        self.north = edge_between(self.net, 1, 4)
        self.south = edge_between(self.net, 7, 4)

    def test_stop_distance(self):
        self.assertEqual(stop_distance(vehicle_on(1, self.east, 50.0), self.net), 46.0)

    def test_careful_driver_yields_to_the_right(self):
        me = vehicle_on(1, self.east, 70.0, v=5.0)
        other = vehicle_on(2, self.north, 70.0, v=10.0)
        self.assertIs(yield_decision(me, self.net, [other]), Decision.YIELD)

    def test_distracted_driver_proceeds(self):
        me = vehicle_on(1, self.east, 70.0, v=5.0, attention=Attention.DISTRACTED)
        other = vehicle_on(2, self.north, 70.0, v=10.0)
        self.assertIs(yield_decision(me, self.net, [other]), Decision.PROCEED)

    def test_forced_careful_driver_yields(self):
        me = vehicle_on(1, self.east, 70.0, v=5.0, attention=Attention.DISTRACTED)
        me.icrw_forced_careful = True
        other = vehicle_on(2, self.north, 70.0, v=10.0)
        self.assertIs(yield_decision(me, self.net, [other]), Decision.YIELD)

    def test_no_yield_to_vehicle_from_the_left(self):
        me = vehicle_on(1, self.east, 70.0, v=5.0)
        other = vehicle_on(2, self.south, 70.0, v=10.0)
        self.assertIs(yield_decision(me, self.net, [other]), Decision.PROCEED)

    def test_beyond_lookahead(self):
        me = vehicle_on(1, self.east, 20.0, v=5.0)
        other = vehicle_on(2, self.north, 70.0, v=10.0)
        self.assertIs(yield_decision(me, self.net, [other]), Decision.PROCEED)

    def test_conflicting_claim_blocks(self):
        me = vehicle_on(1, self.east, 70.0, v=5.0)
        other = vehicle_on(2, self.south, 90.0, v=10.0)
        other.claim, other.claim_edge = 4, self.south
        view = IntersectionView([me, other], self.net, DriverParams())
        self.assertIs(yield_decision(me, self.net, [other], view=view), Decision.YIELD)

    def test_deadlock_breaker_passes_stopped_priority_only(self):
        me = vehicle_on(1, self.east, 90.0)
        stopped = vehicle_on(2, self.north, 90.0)
        moving = vehicle_on(3, self.north, 70.0, v=10.0)
        self.assertIs(yield_decision(me, self.net, [stopped]), Decision.YIELD)
        self.assertIs(yield_decision(me, self.net, [stopped], exempt=True), Decision.PROCEED)
        self.assertIs(yield_decision(me, self.net, [moving], exempt=True), Decision.YIELD)

    def test_leader_on_same_lane(self):
        follower = vehicle_on(1, self.east, 30.0)
        ahead = vehicle_on(2, self.east, 50.0, v=7.0)
        view = IntersectionView([follower, ahead], self.net, DriverParams())
        self.assertEqual(view.leader(follower), (15.0, 7.0))


class TestCollisions(unittest.TestCase):
    """Tests for conflict-box collision detection."""

    def setUp(self):
        self.net = build_grid(2, 2, 100.0, 2)
        self.east = edge_between(self.net, 3, 4)
        self.north = edge_between(self.net, 1, 4)
        self.west = edge_between(self.net, 5, 4)

    def test_crossing_vehicles_collide(self):
        events = detect_collisions([vehicle_on(3, self.east, 99.0), vehicle_on(1, self.north, 98.0)],
                                   self.net, 12.0)
        self.assertEqual(len(events), 1)
        self.assertEqual(events[0].node, 4)
        self.assertEqual(events[0].vehicles, (1, 3))
        self.assertEqual(events[0].time, 12.0)

    def test_reported_pairs_are_not_repeated(self):
        reported = set()
        pair = [vehicle_on(3, self.east, 99.0), vehicle_on(1, self.north, 98.0)]
        self.assertEqual(len(detect_collisions(pair, self.net, 1.0, reported=reported)), 1)
        self.assertEqual(detect_collisions(pair, self.net, 1.1, reported=reported), [])

    def test_opposite_directions_pass(self):
        self.assertEqual(detect_collisions([vehicle_on(1, self.east, 99.0), vehicle_on(2, self.west, 99.0)],
                                           self.net, 0.0), [])

    def test_vehicle_leaving_the_box_still_counts(self):
        exit_edge = edge_between(self.net, 4, 5)
        leaving = vehicle_on(1, exit_edge, 3.0, prev_edge=self.east)
        events = detect_collisions([leaving, vehicle_on(2, self.north, 98.0)], self.net, 0.0)
        self.assertEqual([e.vehicles for e in events], [(1, 2)])

    def test_three_crossing_approaches_give_three_events(self):
        nodes = [{"id": 0, "x": 0.0, "y": 0.0}, {"id": 1, "x": 100.0, "y": 0.0},
                 {"id": 2, "x": -50.0, "y": 50.0 * math.sqrt(3.0)}, {"id": 3, "x": -50.0, "y": -50.0 * math.sqrt(3.0)}]
        edges = [{"from": k, "to": 0} for k in (1, 2, 3)] + [{"from": 0, "to": k} for k in (1, 2, 3)]
        net = RoadNetwork.from_lists(nodes, edges)
        inside = [vehicle_on(k + 1, k, net.edge(k).length - 2.0) for k in range(3)]
        events = detect_collisions(inside, net, 4.0)
        self.assertEqual(sorted(e.vehicles for e in events), [(1, 2), (1, 3), (2, 3)])
        self.assertTrue(all(e.node == 0 for e in events))

    def test_leader_and_follower_from_the_same_road(self):
        both_in_box = [vehicle_on(1, self.east, 99.0), vehicle_on(2, self.east, 96.5)]
        self.assertEqual(detect_collisions(both_in_box, self.net, 0.0), [])
        exit_edge = edge_between(self.net, 4, 5)
        through = [vehicle_on(1, exit_edge, 2.0, prev_edge=self.east), vehicle_on(2, self.east, 98.0)]
        self.assertEqual(detect_collisions(through, self.net, 0.0), [])


class TestTraffic(unittest.TestCase):
    """Tests for population, stepping and respawn of the fleet."""

    def setUp(self):
        self.net = build_grid(4, 4, 100.0, 2)
        self.params = DriverParams()

    def traffic(self, seed=1, attention=Attention.CAREFUL):
        traffic = Traffic(self.net, self.params, RandomStreams(seed), attention)
        traffic.populate(10)
        return traffic

    def test_populate(self):
        traffic = self.traffic()
        self.assertEqual(sorted(traffic.vehicles), list(range(10)))
        self.assertEqual(traffic.next_id, 10)
        for vehicle in traffic.ordered():
            self.assertEqual(vehicle.v, 0.0)
            self.assertGreaterEqual(self.net.route_length(vehicle.route), self.params.min_trip_length)

    def test_same_seed_same_placement(self):
        first = [(v.edge, v.s, v.route) for v in self.traffic(3).ordered()]
        second = [(v.edge, v.s, v.route) for v in self.traffic(3).ordered()]
        self.assertEqual(first, second)

    def test_respawn_keeps_fleet_size(self):
        traffic = self.traffic()
        trips, new_ids = traffic.respawn([5, 2], 3.0)
        self.assertEqual(new_ids, [10, 11])
        self.assertEqual(len(traffic.vehicles), 10)
        self.assertNotIn(2, traffic.vehicles)
        self.assertNotIn(5, traffic.vehicles)
        self.assertEqual([t.vehicle_id for t in trips], [2, 5])
        self.assertTrue(all(t.truncated for t in trips))
        for vid in new_ids:
            self.assertEqual(traffic.vehicles[vid].v, 0.0)
            self.assertEqual(traffic.vehicles[vid].trip_start, 3.0)
        self.assertEqual(traffic.next_id, 12)

    def test_steps_respect_speed_limits(self):
        traffic = self.traffic()
        for k in range(200):
            traffic.plan()
            traffic.advance(k * self.params.dt)
        for vehicle in traffic.ordered():
            self.assertGreaterEqual(vehicle.v, 0.0)
            self.assertLessEqual(vehicle.v, self.params.max_speed + 1e-9)
            self.assertLessEqual(vehicle.s, self.net.edge(vehicle.edge).length)
        self.assertTrue(any(v.odometer > 0 or v.clock > 0 for v in traffic.ordered()))

    def crossing_pair(self, my_s):
        net = build_grid(2, 2, 100.0, 2)
        east, north = edge_between(net, 3, 4), edge_between(net, 1, 4)
        traffic = Traffic(net, self.params, RandomStreams(1), Attention.DISTRACTED)
        me = vehicle_on(1, east, my_s, v=10.0, attention=Attention.DISTRACTED)
        me.icrw_forced_careful = True
        me.claim, me.claim_edge = 4, east
        priority = vehicle_on(2, north, 85.0, v=10.0, attention=Attention.DISTRACTED)
        traffic.vehicles = {1: me, 2: priority}
        return traffic, me

    def test_forced_careful_driver_gives_up_claim_while_it_can_stop(self):
        traffic, me = self.crossing_pair(80.0)
        decisions = traffic.plan()
        self.assertIs(decisions[1], Decision.YIELD)
        self.assertIsNone(me.claim)

    def test_claim_is_kept_past_the_stopping_point(self):
        traffic, me = self.crossing_pair(93.0)
        decisions = traffic.plan()
        self.assertIs(decisions[1], Decision.PROCEED)
        self.assertEqual(me.claim, 4)

    def test_initial_routes_start_on_the_placement_edge(self):
        for vehicle in self.traffic(seed=6).ordered():
            self.assertEqual(vehicle.route[0], vehicle.edge)


if __name__ == '__main__':
    unittest.main()
