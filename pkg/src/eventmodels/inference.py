"""Evidence from one recorded life: abridged models, trace statistics,
state estimation, the past-independence test and oracle reverse-engineering.

Step indexing: a model path ``states`` has one entry per step ``0..n``
(``states[t]`` is the model state after step ``t``).  The events of step
``t`` happen *in* ``states[t - 1]``; that is the state they are counted
against.
"""

import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field

from scipy.stats import chi2_contingency

from . import rng as _rng
from .edm import EventStream, SequencingOracle, VariablesModel, simulate_edm, step_path
from .errors import InputError
from .world import PerfectWorld, StatePath

log = logging.getLogger(__name__)

EPSILON = 1e-9
DEFAULT_MIN_SUPPORT = 30
DEFAULT_THRESHOLD = 3.0

WORLD_SIDE = "world-side"
AGENT_SIDE = "agent-side"


# --- abridged models ----------------------------------------------------------


@dataclass(frozen=True)
class AbridgedModel:
    states: frozenset
    arrows: frozenset
    arrow_counts: dict
    state_counts: dict

    @property
    def transitions(self):
        return sum(self.arrow_counts.values())


def _has_arrow(model, s, label, t):
    if isinstance(model, PerfectWorld):
        return model.transition.get((s, label)) == t
    if isinstance(model, VariablesModel):
        return t in model.successors(s, label)
    return (s, label, t) in model.relation


def abridge(model, path):
    """Keep only the visited states and traversed arrows, with exact counts."""
    if path is None:
        return AbridgedModel(frozenset(), frozenset(), {}, {})
    arrow_counts = defaultdict(int)
    for s, label, t in path.arrows():
        if not _has_arrow(model, s, label, t):
            raise InputError(f"path uses ({s}, {label}, {t}), which the model does not have")
        arrow_counts[(s, label, t)] += 1
    state_counts = defaultdict(int)
    for s in path.states:
        state_counts[s] += 1
    return AbridgedModel(frozenset(state_counts), frozenset(arrow_counts),
                         dict(arrow_counts), dict(state_counts))


def edm_state_path(model, stream, oracle=None, start=None):
    """Arrow-level :class:`StatePath` of a model replayed on a stream."""
    arrows = []
    simulate_edm(model, stream, oracle, start, arrows=arrows)
    begin = model.start if start is None else start
    return StatePath(begin, tuple(e for _, _, e, _ in arrows), tuple(t for _, _, _, t in arrows))


# --- trace statistics ---------------------------------------------------------


@dataclass
class TraceStatistics:
    per_state: dict
    per_arrow: dict
    window: int
    events: tuple
    mode: str = WORLD_SIDE
    unexplained: int = 0

    def visits(self, state):
        return next((opp for (s, _), (_, opp) in self.per_state.items() if s == state), 0)


def _event_order(model, stream):
    return tuple(sorted(set(stream.events) | set(model.alphabet)))


def _arrows_from_states(model, states, dense):
    arrows = []
    for t in range(1, len(states)):
        for e in sorted(dense[t]):
            if states[t] in model.successors(states[t - 1], e):
                arrows.append((t, states[t - 1], e, states[t]))
                break
    return arrows


def collect(model, states, stream, window=0, arrows=None):
    """World-side counters over an exact model path.

    ``arrows`` are ``(step, source, event, target)`` traversals; when omitted
    they are read off consecutive states of the path.
    """
    if window < 0:
        raise InputError("window must be non-negative")
    n = len(states) - 1
    if n < 0:
        raise InputError("a model path has at least its start state")
    dense = stream.dense(n)
    events = _event_order(model, stream)
    visits = defaultdict(int)
    occ = defaultdict(int)
    for t in range(1, n + 1):
        s = states[t - 1]
        visits[s] += 1
        for e in dense[t]:
            occ[(s, e)] += 1
    per_state = {(s, e): [occ[(s, e)], visits[s]] for s in visits for e in events}

    if arrows is None:
        arrows = _arrows_from_states(model, states, dense)
    per_arrow = {}
    for t, s, e, target in arrows:
        arrow = (s, e, target)
        for offset in range(-window, window + 1):
            u = t + offset
            if not 1 <= u <= n:
                continue
            for x in events:
                cell = per_arrow.setdefault((arrow, x, offset), [0, 0])
                cell[1] += 1
                if x in dense[u]:
                    cell[0] += 1
    return TraceStatistics(per_state, per_arrow, window, events, WORLD_SIDE)


def collect_agent_side(model, state_sets, stream):
    """Approximate per-state counters from estimated state sets.

    A moment whose estimate holds ``k`` states adds ``1/k`` of an opportunity
    (and of each occurrence) to every one of them.  Arrow windows need the
    traversed arrows, which the agent does not know, so they stay empty.
    """
    n = len(state_sets) - 1
    dense = stream.dense(n)
    events = _event_order(model, stream)
    visits = defaultdict(float)
    occ = defaultdict(float)
    unexplained = 0
    for t in range(1, n + 1):
        candidates = state_sets[t - 1]
        if not candidates:
            unexplained += 1
            continue
        w = 1.0 / len(candidates)
        for s in candidates:
            visits[s] += w
            for e in dense[t]:
                occ[(s, e)] += w
    per_state = {(s, e): [occ[(s, e)], visits[s]] for s in visits for e in events}
    return TraceStatistics(per_state, {}, 0, events, AGENT_SIDE, unexplained)


@dataclass(frozen=True)
class TraceFinding:
    location: object
    event: str
    empirical: float
    baseline: float
    support: float
    deviation: float

    @property
    def direction(self):
        return (self.empirical > self.baseline) - (self.empirical < self.baseline)

    @property
    def location_label(self):
        return format_location(self.location)


def format_location(location):
    if isinstance(location, tuple) and len(location) == 2 and isinstance(location[0], tuple):
        (s, e, t), offset = location
        return f"{s}:{e}:{t}@{offset:+d}"
    return str(location)


def deviation_score(empirical, baseline, support):
    return abs(empirical - baseline) / math.sqrt(baseline * (1.0 - baseline) / support + EPSILON)


def detect_trace(stats, min_support=DEFAULT_MIN_SUPPORT, threshold=DEFAULT_THRESHOLD, baseline="global"):
    """Frequencies that stray from their baseline by at least ``threshold``.

    State entries are measured against the event's frequency over all
    opportunities (``baseline="global"``) or against ``1/|events|``
    (``"uniform"``).  Arrow-window entries are measured against the same
    event at the same offset around *every* arrow carrying the same event
    label, so only what the model's choice of source and target adds counts.
    """
    if min_support < 1 or threshold <= 0:
        raise InputError("min_support must be >= 1 and threshold > 0")
    if baseline not in ("global", "uniform"):
        raise InputError(f"unknown baseline {baseline!r}")
    findings = []

    totals = defaultdict(lambda: [0, 0])
    for (s, e), (o, p) in stats.per_state.items():
        totals[e][0] += o
        totals[e][1] += p
    for (s, e), (o, p) in stats.per_state.items():
        if p < min_support:
            continue
        if baseline == "uniform":
            base = 1.0 / len(stats.events)
        else:
            base = totals[e][0] / totals[e][1] if totals[e][1] else 0.0
        emp = o / p
        dev = deviation_score(emp, base, p)
        if dev >= threshold:
            findings.append(TraceFinding(s, e, emp, base, p, dev))

    arrow_totals = defaultdict(lambda: [0, 0])
    for ((s, label, t), x, offset), (o, p) in stats.per_arrow.items():
        cell = arrow_totals[(label, x, offset)]
        cell[0] += o
        cell[1] += p
    for (arrow, x, offset), (o, p) in stats.per_arrow.items():
        if p < min_support:
            continue
        o_all, p_all = arrow_totals[(arrow[1], x, offset)]
        base = o_all / p_all
        emp = o / p
        dev = deviation_score(emp, base, p)
        if dev >= threshold:
            findings.append(TraceFinding((arrow, offset), x, emp, base, p, dev))

    findings.sort(key=lambda f: (-f.deviation, f.location_label, f.event))
    return findings


def adequacy(findings):
    """0 for a model without trace, otherwise its strongest deviation."""
    return max((f.deviation for f in findings), default=0.0)


# --- state estimation -----------------------------------------------------------


def _tick_events(tick):
    if isinstance(tick, tuple) and len(tick) == 2 and isinstance(tick[0], int):
        return frozenset(tick[1])
    return frozenset(tick)


def _start_states(model):
    if model.outside is not None:
        return frozenset([model.outside])
    return frozenset(model.states)


def propagate(model, states, events, ordering=None):
    """All states the model can be in after ``events`` from any of ``states``.

    Branches that need an arrow the model lacks are dropped.
    """
    events = frozenset(events)
    if not events:
        return frozenset(states)
    unknown = events - model.alphabet
    if unknown:
        raise InputError(f"events {sorted(unknown)} are not in the model alphabet")
    ordering = ordering or SequencingOracle()
    out = set()
    for s in states:
        current = {s}
        for e in ordering.order(s, events, (), ()):
            current = {t for c in current for t in model.successors(c, e)}
        out |= current
    return frozenset(out)


def estimate_state(model, prefix, start_states=None, ordering=None):
    """Set of states the model may be in after the ticks of ``prefix``.

    ``prefix`` is an :class:`EventStream` or a sequence of event sets.  An
    empty result means the prefix contradicts the model.
    """
    current = _start_states(model) if start_states is None else frozenset(start_states)
    ticks = prefix.ticks if isinstance(prefix, EventStream) else prefix
    for tick in ticks:
        current = propagate(model, current, _tick_events(tick), ordering)
        if not current:
            break
    return current


def estimate_states(model, stream, n, ordering=None):
    """Estimated state set after every step ``0..n``."""
    dense = stream.dense(n)
    current = _start_states(model)
    out = [current]
    for t in range(1, n + 1):
        if dense[t]:
            current = propagate(model, current, dense[t], ordering)
        out.append(current)
    return out


def estimate_state_weighted(model, prefix, arrow_counts, smoothing=1.0):
    """Heuristic: distribute belief along arrows in proportion to past traversal counts.

    Not a probability in any principled sense; it only ranks the members of
    :func:`estimate_state`'s set.
    """
    start = _start_states(model)
    belief = {s: 1.0 / len(start) for s in start}
    ticks = prefix.ticks if isinstance(prefix, EventStream) else prefix
    for tick in ticks:
        for e in sorted(_tick_events(tick)):
            nxt = defaultdict(float)
            for s, w in belief.items():
                targets = model.successors(s, e)
                weights = [arrow_counts.get((s, e, t), 0) + smoothing for t in targets]
                total = sum(weights)
                for t, wt in zip(targets, weights):
                    nxt[t] += w * wt / total
            mass = sum(nxt.values())
            belief = {s: w / mass for s, w in nxt.items()} if mass else {}
    return belief


# --- exhaustiveness -----------------------------------------------------------------

EXHAUSTIVE = "exhaustive"
PAST_DEPENDENT = "past-dependent"
INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class ExhaustivenessResult:
    verdict: str
    lag: int
    p_value: float | None
    statistic: float | None
    per_state: dict = field(default_factory=dict)

    def __str__(self):
        if self.verdict == EXHAUSTIVE:
            return f"exhaustive-at-lag-{self.lag}"
        return self.verdict


def _outcome_token(events):
    return ",".join(sorted(events)) or "-"


def exhaustiveness_test(model, states, stream, lag=1, significance=0.05, min_samples=20):
    """Does the next tick depend on the past once the state is known?

    Per state, a chi-square test of independence between the previous
    ``lag`` ticks' events and the next tick's events, over the moments spent
    in that state.  States with fewer than ``min_samples`` moments are
    skipped; a table with a single row or column is trivially independent.
    Rejection uses a Bonferroni correction across the tested states.
    """
    if lag < 1:
        raise InputError("lag must be at least 1")
    n = len(states) - 1
    dense = stream.dense(n)
    tokens = [_outcome_token(evs) for evs in dense]
    tables = defaultdict(lambda: defaultdict(lambda: defaultdict(int)))
    for t in range(lag + 1, n + 1):
        past = "|".join(tokens[t - lag:t])
        tables[states[t - 1]][past][tokens[t]] += 1

    per_state = {}
    worst_p, worst_stat = None, None
    for s, rows in tables.items():
        total = sum(sum(r.values()) for r in rows.values())
        if total < min_samples:
            continue
        columns = sorted({c for r in rows.values() for c in r})
        if len(rows) < 2 or len(columns) < 2:
            p, stat = 1.0, 0.0
        else:
            matrix = [[rows[r].get(c, 0) for c in columns] for r in sorted(rows)]
            stat, p, _, _ = chi2_contingency(matrix)
            stat, p = float(stat), float(p)
        per_state[s] = p
        if worst_p is None or p < worst_p:
            worst_p, worst_stat = p, stat
    if not per_state:
        return ExhaustivenessResult(INCONCLUSIVE, lag, None, None, {})
    corrected = significance / len(per_state)
    verdict = PAST_DEPENDENT if worst_p < corrected else EXHAUSTIVE
    return ExhaustivenessResult(verdict, lag, worst_p, worst_stat, per_state)


# --- reverse-engineering alpha ------------------------------------------------------------


@dataclass(frozen=True)
class TraceConstraint:
    """Desired frequency of ``event`` on the tick that follows arrival in ``state``."""

    state: object
    event: str
    frequency: float

    def __post_init__(self):
        if not 0.0 <= self.frequency <= 1.0:
            raise InputError("constraint frequency must lie in [0, 1]")


class ReverseOracle(SequencingOracle):
    """Alpha that steers the model path towards a requested trace.

    Needs the realized future: at each nondeterministic choice it looks at
    the next tick's events, drops targets whose constraints that tick would
    violate and samples the rest in proportion to how well they fit.  With
    no survivor it takes the least-violating target and records a deviation.
    """

    def __init__(self, constraints, seed=0):
        super().__init__(seed)
        self.constraints = {}
        for c in constraints:
            self.constraints.setdefault(c.state, []).append(c)
        self.deviations = []

    def _fit(self, target, upcoming):
        violations, weight = 0, 1.0
        for c in self.constraints.get(target, ()):
            occurs = c.event in upcoming
            if (c.frequency == 0.0 and occurs) or (c.frequency == 1.0 and not occurs):
                violations += 1
            else:
                weight *= c.frequency if occurs else 1.0 - c.frequency
        return violations, weight

    def choose(self, state, event, candidates, past, future, position=0):
        if not any(t in self.constraints for t in candidates):
            return super().choose(state, event, candidates, past, future, position)
        upcoming = frozenset(future[0][1]) if len(future) else frozenset()
        fits = [self._fit(t, upcoming) for t in candidates]
        survivors = [(t, w) for t, (v, w) in zip(candidates, fits) if v == 0 and w > 0]
        if survivors:
            targets, weights = zip(*survivors)
            return _rng.keyed_weighted_choice(self.seed, list(targets), list(weights),
                                              "alpha", len(past), repr(state), event, position)
        fallback = min(zip(candidates, fits), key=lambda item: item[1][0])[0]
        self.deviations.append((len(past), state, event, fallback))
        log.info("no compliant arrow at moment %d from %r on %s; took %r", len(past), state, event, fallback)
        return fallback


def reverse_oracle(model, constraints, seed=0):
    constraints = [c if isinstance(c, TraceConstraint) else TraceConstraint(c.location, c.event, c.empirical)
                   for c in constraints]
    for c in constraints:
        if not model.has_state(c.state):
            raise InputError(f"constraint names unknown state {c.state!r}")
        if c.event not in model.alphabet:
            raise InputError(f"constraint names unknown event {c.event!r}")
    return ReverseOracle(constraints, seed)


# --- pipeline and reports -----------------------------------------------------------------


@dataclass
class InferenceReport:
    mode: str
    findings: list
    adequacy: float
    statistics: TraceStatistics
    steps: int
    ticks: int
    notices: int = 0
    states: list | None = None


def infer(model, stream, n, mode=WORLD_SIDE, window=2, min_support=DEFAULT_MIN_SUPPORT,
          threshold=DEFAULT_THRESHOLD, oracle=None, baseline="global"):
    """stream -> model path -> statistics -> findings -> adequacy."""
    if isinstance(model, VariablesModel):
        raise InputError("flatten a variables model before inference")
    if mode == WORLD_SIDE:
        notices = []
        arrows = []
        tick_path = simulate_edm(model, stream, oracle, notices=notices, arrows=arrows)
        states = step_path(tick_path, stream, n)
        stats = collect(model, states, stream, window, arrows)
    elif mode == AGENT_SIDE:
        notices, states = [], None
        stats = collect_agent_side(model, estimate_states(model, stream, n), stream)
    else:
        raise InputError(f"unknown mode {mode!r}")
    findings = detect_trace(stats, min_support, threshold, baseline)
    return InferenceReport(mode, findings, adequacy(findings), stats, n, len(stream), len(notices), states)


FINDINGS_COLUMNS = ("location", "event", "empirical", "baseline", "support", "deviation")


def format_findings_csv(findings):
    lines = [",".join(FINDINGS_COLUMNS)]
    for f in findings:
        lines.append(f"{f.location_label},{f.event},{f.empirical:.6f},{f.baseline:.6f},"
                     f"{f.support:.6g},{f.deviation:.6f}")
    return "\n".join(lines) + "\n"


def format_summary(report, model_name="model"):
    lines = [f"model {model_name}",
             f"mode {report.mode}" + (" (approximate)" if report.mode == AGENT_SIDE else " (exact)"),
             f"steps {report.steps}",
             f"ticks {report.ticks}",
             f"findings {len(report.findings)}",
             f"adequacy {report.adequacy:.6f}"]
    if report.mode == WORLD_SIDE:
        lines.append(f"no-arrow-notices {report.notices}")
    else:
        lines.append(f"unexplained-moments {report.statistics.unexplained}")
    lines.append("verdict " + ("inadequate" if report.adequacy == 0 else "adequate"))
    return "\n".join(lines) + "\n"
