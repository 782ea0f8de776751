"""Small worlds and models used by the examples, the CLI and the acceptance suite."""

from pathlib import Path

from .edm import EventDrivenModel, format_event_definitions, format_model
from .history import PatternStep, SemiVisibleEvent, VisibleEvent, format_history
from .world import (
    OracleBundle,
    PerfectWorld,
    RandomWorld,
    ScriptedPolicy,
    WeightedAlpha,
    format_world,
    generate_world,
    run_life,
)

WEEKDAYS = ("sun", "mon", "tue", "wed", "thu", "fri", "sat")


def w1(incorrect=None):
    """Two states, two actions; ``a`` toggles, ``b`` stays.  View 1=white, 2=black."""
    return PerfectWorld(
        states=("1", "2"),
        actions=("a", "b"),
        observations=("black", "white"),
        transition={("1", "a"): "2", ("1", "b"): "1", ("2", "a"): "1", ("2", "b"): "2"},
        view={"1": "white", "2": "black"},
        incorrect=incorrect or {},
        current="1",
    )


def nine_state_world():
    return generate_world(9, 3, 4, incorrect_density=0.2, seed=5)


def branching_world(seed=0):
    """Nine states, red/blue moves, one blue fork; 9 is an absolute beginning, 4 is sudden death."""
    arrows = [
        ("1", "red", "1"), ("1", "blue", "2"),
        ("2", "red", "3"), ("2", "blue", "3"),
        ("3", "red", "4"), ("3", "blue", "6"),
        ("4", "red", "4"), ("4", "blue", "4"),
        ("5", "red", "2"), ("5", "blue", "6"),
        ("6", "red", "1"), ("6", "blue", "5"), ("6", "blue", "7"),
        ("7", "red", "8"), ("7", "blue", "7"),
        ("8", "red", "5"), ("8", "blue", "3"),
        ("9", "red", "1"), ("9", "blue", "5"),
    ]
    colours = {"1": "white", "2": "grey", "3": "black", "4": "grey", "5": "white",
               "6": "black", "7": "white", "8": "grey", "9": "black"}
    return RandomWorld(
        states=tuple(str(i) for i in range(1, 10)),
        actions=("red", "blue"),
        observations=("black", "grey", "white"),
        relation=frozenset(arrows),
        view=colours,
        incorrect={"2": {"red"}, "4": {"red", "blue"}},
        current="9",
        oracles=OracleBundle(seed=seed),
    )


def sticky_world(stay=0.9, return_rate=0.5, seed=0):
    """Observations a/b where a follows a with probability ``stay``."""
    weights = {("A", "go"): {"A": stay, "B": 1.0 - stay},
               ("B", "go"): {"A": return_rate, "B": 1.0 - return_rate}}
    return RandomWorld(
        states=("A", "B"),
        actions=("go",),
        observations=("a", "b"),
        relation=frozenset([("A", "go", "A"), ("A", "go", "B"), ("B", "go", "A"), ("B", "go", "B")]),
        view={"A": "a", "B": "b"},
        incorrect={},
        current="A",
        oracles=OracleBundle(alpha=WeightedAlpha(weights), seed=seed),
    )


def daynight_world(period=3):
    """``period`` dark steps then ``period`` light steps, forever."""
    states = tuple(f"n{i}" for i in range(period)) + tuple(f"d{i}" for i in range(period))
    transition = {(s, "wait"): states[(k + 1) % len(states)] for k, s in enumerate(states)}
    view = {s: ("dark" if s.startswith("n") else "light") for s in states}
    return PerfectWorld(states, ("wait",), ("dark", "light"), transition, view, {}, states[0])


def daynight():
    return EventDrivenModel(
        states=("night", "day"),
        events={"sunrise": "semi-visible", "sunset": "semi-visible"},
        relation=frozenset([("night", "sunrise", "day"), ("day", "sunset", "night")]),
        start="night",
        name="daynight",
    )


def week(event="midnight"):
    relation = [(d, event, WEEKDAYS[(i + 1) % 7]) for i, d in enumerate(WEEKDAYS)]
    return EventDrivenModel(WEEKDAYS, {event: "visible"}, frozenset(relation), start="sun", name="week")


def remember_last(events=("a", "b")):
    """One state per event; every event moves to the state that remembers it."""
    states = tuple(f"last_{e}" for e in events)
    relation = [(s, e, f"last_{e}") for s in states for e in events]
    return EventDrivenModel(states, {e: "visible" for e in events}, frozenset(relation), name="remember_last")


def predictor():
    """State 1 only has ``a`` arrows, state 2 only ``b`` arrows; both lead anywhere."""
    relation = [("1", "a", "1"), ("1", "a", "2"), ("2", "b", "1"), ("2", "b", "2")]
    return EventDrivenModel(("1", "2"), {"a": "visible", "b": "visible"}, frozenset(relation), name="predictor")


def single_state(events=("a", "b")):
    relation = [("only", e, "only") for e in events]
    return EventDrivenModel(("only",), {e: "visible" for e in events}, frozenset(relation), name="single")


def phase_locked_pair():
    """Two 2-cycles driven by the same ``tick``: they can never fall out of phase."""
    a = EventDrivenModel(("p0", "p1"), {"tick": "visible"},
                         frozenset([("p0", "tick", "p1"), ("p1", "tick", "p0")]), name="left")
    b = EventDrivenModel(("q0", "q1"), {"tick": "visible"},
                         frozenset([("q0", "tick", "q1"), ("q1", "tick", "q0")]), name="right")
    return a, b


def observation_events(*observations, semi=False):
    out = []
    for v in observations:
        visible = VisibleEvent(v, ((PatternStep(observation=v),),))
        out.append(SemiVisibleEvent(v, visible) if semi else visible)
    return out


def daynight_events():
    """Sunrise: dark then light; sunset: light then dark.  Semi-visible (one may oversleep)."""
    def change(first, second, name):
        pattern = (PatternStep(observation=first), PatternStep(observation=second))
        return SemiVisibleEvent(name, VisibleEvent(name, (pattern,)))

    return [change("dark", "light", "sunrise"), change("light", "dark", "sunset")]


def write_bundle(directory, steps=10_000, seed=0):
    """Write every bundled world, model, event file and two reference logs."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    files = {
        "w1.world": format_world(w1()),
        "nine.world": format_world(nine_state_world()),
        "branching.world": format_world(branching_world()),
        "sticky.world": format_world(sticky_world()),
        "daynight.world": format_world(daynight_world()),
        "daynight.model": format_model(daynight()),
        "week.model": format_model(week()),
        "remember_last.model": format_model(remember_last()),
        "predictor.model": format_model(predictor()),
        "single.model": format_model(single_state()),
        "single_daynight.model": format_model(single_state(("sunrise", "sunset"))),
        "daynight.events": format_event_definitions(daynight_events()),
        "ab.events": format_event_definitions(observation_events("a", "b")),
    }
    left, right = phase_locked_pair()
    files["phase_left.model"] = format_model(left)
    files["phase_right.model"] = format_model(right)
    files["daynight.log"] = format_history(run_life(daynight_world(), ScriptedPolicy(["wait"]), 600, seed).history)
    sticky = run_life(sticky_world(seed=seed), ScriptedPolicy(["go"]), steps, seed)
    files["sticky.log"] = format_history(sticky.history)
    for name, text in files.items():
        (out / name).write_text(text)
    return sorted(files)
