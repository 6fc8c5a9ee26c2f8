"""Small hand-built networks used by tests, examples and the CLI smoke path."""
from __future__ import annotations

from .delays import DelayScenario
from .timetable import Stop, Timetable, make_timetable


def tiny() -> Timetable:
    """3 stops, 2 trips of 3 events each, one walking edge."""
    stops = [Stop(0, "A", 0), Stop(1, "B", 0), Stop(2, "C", 0)]
    routes = [(0, 1, 2)]
    trips = [
        (0, [(0, 100, 100), (1, 200, 210), (2, 300, 300)]),
        (0, [(0, 400, 400), (1, 500, 510), (2, 600, 600)]),
    ]
    return make_timetable(stops, routes, trips, [(0, 1, 250)])


def four_trips() -> Timetable:
    """Two routes meeting at s3; trips T1,T2 over s1 s2 s3 and T3,T4 over s3 s4 s5.

    Walking edges s2->s3 and s3->s4 (60 s each). The feasible useful
    transfers are e2->e7, e2->e10, e5->e7, e3->e8, e3->e11, e6->e8 with
    events numbered from 1 in trip order.
    """
    stops = [Stop(i, f"s{i + 1}", 0) for i in range(5)]
    routes = [(0, 1, 2), (2, 3, 4)]
    trips = [
        (0, [(0, 100, 100), (1, 200, 200), (2, 250, 250)]),
        (0, [(0, 150, 150), (1, 230, 230), (2, 252, 252)]),
        (1, [(2, 300, 300), (3, 315, 315), (4, 400, 400)]),
        (1, [(2, 270, 270), (3, 311, 311), (4, 400, 400)]),
    ]
    return make_timetable(stops, routes, trips, [(1, 2, 60), (2, 3, 60)],
                          trip_names=["T1", "T2", "T3", "T4"])


def adversarial() -> tuple[Timetable, list[DelayScenario], DelayScenario]:
    """Network, extra builder scenarios and a query scenario where annotations mislead.

    T1 runs s1->s2. From s2 a two-hop walk (via an auxiliary vertex) reaches
    s3, where T3 (170) and T2 (200) leave for s4. On time, T1 connects to
    T3. With T1 30 s late only T2 is catchable, so the shortcut to T2 gets
    the interval [30, 40]. In the query scenario T1 is on time but T3 runs
    100 s late: the shortcut to T2 is feasible yet deactivated.
    """
    stops = [Stop(0, "s1", 0), Stop(1, "s2", 0), Stop(2, "s3", 0), Stop(3, "s4", 0)]
    routes = [(0, 1), (2, 3)]
    trips = [
        (0, [(0, 50, 50), (1, 100, 100)]),
        (1, [(2, 200, 200), (3, 300, 300)]),
        (1, [(2, 170, 170), (3, 250, 250)]),
    ]
    edges = [(1, 4, 30), (4, 2, 30)]
    tt = make_timetable(stops, routes, trips, edges, num_vertices=5, trip_names=["T1", "T2", "T3"])
    build_extra = [DelayScenario.per_trip(tt, [30, 0, 0], delta_max=300)]
    query_sc = DelayScenario.per_trip(tt, [0, 0, 100], delta_max=300)
    return tt, build_extra, query_sc
