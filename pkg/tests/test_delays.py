import numpy as np

from delayshortcuts.delays import (DelayedTimetable, DelayScenario, apply_delay, generate_incident_scenario,
                                   incident_magnitude, load_scenario, validate_scenario)
from delayshortcuts.synth import generate_network
from delayshortcuts.timetable import Stop, make_timetable

WINDOW = (12 * 3600, 13 * 3600)


def _one_event_tt():
    stops = [Stop(0, "a", 0), Stop(1, "b", 0)]
    return make_timetable(stops, [(0, 1)], [(0, [(0, 36000, 36060), (1, 36500, 36500)])], [])


def test_apply_delay_arithmetic():
    tt = _one_event_tt()
    sc = DelayScenario({0: (30, 30)}, 60)
    assert apply_delay(tt, 0, sc) == (36030, 36090)
    assert apply_delay(tt, 0, DelayScenario.zero()) == (36000, 36060)
    assert apply_delay(tt, 0, DelayScenario.uniform(tt, 300)) == (36300, 36360)


def test_validate_scenario_bounds():
    tt = _one_event_tt()
    assert validate_scenario(DelayScenario.zero(), 60)
    assert not validate_scenario(DelayScenario({0: (61, 0)}, 60), 60)
    net = generate_network(2, n_stops=30)
    assert validate_scenario(generate_incident_scenario(net, 1, delta_max=300), 300)
    assert validate_scenario(generate_incident_scenario(net, 1, delta_max=120), 300)
    assert tt.num_events == 2


def test_incident_scenario_deterministic(tmp_path):
    net = generate_network(3, n_stops=30)
    a = generate_incident_scenario(net, 7)
    b = generate_incident_scenario(net, 7)
    assert a.to_json() == b.to_json()
    assert a.to_json() != generate_incident_scenario(net, 8).to_json()
    back = load_scenario(a.save(tmp_path / "sc.json"), net)
    assert dict(back.delays) == dict(a.delays)


def test_incident_magnitude_distribution():
    rng = np.random.default_rng(0)
    draws = np.array([incident_magnitude(rng) for _ in range(20000)])
    assert draws.min() >= 0 and draws.max() <= 3600
    assert np.all(draws % 60 == 0)
    assert abs(np.mean(draws == 0) - 0.5) < 0.02
    assert abs(draws[draws > 0].mean() - 300) < 15


def test_incidents_start_inside_window_and_extend_to_trip_end():
    net = generate_network(4, n_stops=40)
    sc = generate_incident_scenario(net, 11, window=WINDOW)
    assert sc.incidents
    for inc in sc.incidents:
        trip = net.trips[inc.trip]
        assert WINDOW[0] <= net.events[trip.events[inc.start_index]].dep < WINDOW[1]
        for i, e in enumerate(trip.events):
            assert sc[e] == ((inc.delay, inc.delay) if i >= inc.start_index else (0, 0))
    for e, ev in enumerate(net.events):
        if ev.dep < WINDOW[0] and ev.arr < WINDOW[0]:
            assert sc[e] == (0, 0)


def test_delayed_timetable_stays_monotone():
    net = generate_network(5, n_stops=40)
    for seed in range(5):
        assert DelayedTimetable(net, generate_incident_scenario(net, seed)).is_monotone()
    assert DelayedTimetable(net, DelayScenario.uniform(net, 300)).is_monotone()


def test_delayed_connections_sorted_by_delayed_departure():
    net = generate_network(6, n_stops=30)
    dtt = DelayedTimetable(net, generate_incident_scenario(net, 2))
    keys = [(c.dep_time, c.trip, c.event_index) for c in dtt.connections]
    assert keys == sorted(keys)
    assert all(c.dep_time == dtt.dep[net.trips[c.trip].events[c.event_index]] for c in dtt.connections)
