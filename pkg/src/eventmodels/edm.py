"""Event-driven models: digraphs whose arrows are labeled by events.

Stable states change only when events fire.  A tick may carry several
events at once; the oracle decides whether they happen one after another
(and in which order) or whether one obscures the others.
"""

import itertools
import logging
from dataclasses import dataclass, field
from types import MappingProxyType

from . import rng as _rng
from .errors import CapacityError, InputError, MissingOracleError, OracleError, ParseError
from .history import InvisibleEvent, PatternStep, SemiVisibleEvent, VisibleEvent, occurred
from .textio import check_label, content_lines, parse_set
from .util import SeqView

log = logging.getLogger(__name__)

EVENT_KINDS = ("visible", "semi-visible", "invisible")
FLATTEN_BOUND = 10**6
MAX_PATTERN_LENGTH = 64


@dataclass(frozen=True, eq=False)
class EventDrivenModel:
    states: tuple
    events: "dict[str, str]"
    relation: frozenset
    outside: object = None
    start: object = None
    expected: "dict" = field(default_factory=dict)
    name: str = "model"

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        if not isinstance(self.events, dict) and not isinstance(self.events, MappingProxyType):
            object.__setattr__(self, "events", {e: "visible" for e in self.events})
        object.__setattr__(self, "events", MappingProxyType(dict(self.events)))
        object.__setattr__(self, "relation", frozenset(tuple(t) for t in self.relation))
        object.__setattr__(self, "expected", MappingProxyType(dict(self.expected)))
        if not self.states:
            raise InputError("a model needs at least one state")
        order = {s: i for i, s in enumerate(self.states)}
        if len(order) != len(self.states):
            raise InputError("duplicate state labels")
        for e, kind in self.events.items():
            if kind not in EVENT_KINDS:
                raise InputError(f"event {e!r} has unknown kind {kind!r}")
        succ = {}
        for s, e, t in self.relation:
            if s not in order or t not in order:
                raise InputError(f"arrow ({s}, {e}, {t}) leaves the state set")
            if e not in self.events:
                raise InputError(f"arrow ({s}, {e}, {t}) uses undeclared event")
            succ.setdefault((s, e), []).append(t)
        if self.outside is not None and self.outside not in order:
            raise InputError(f"outside state {self.outside!r} is not a state")
        if self.start is None:
            object.__setattr__(self, "start", self.outside if self.outside is not None else self.states[0])
        elif self.start not in order:
            raise InputError(f"start state {self.start!r} is not a state")
        object.__setattr__(self, "_order", order)
        object.__setattr__(
            self, "_succ", {k: tuple(sorted(v, key=order.__getitem__)) for k, v in succ.items()}
        )

    @property
    def alphabet(self):
        return frozenset(self.events)

    def has_state(self, state):
        return state in self._order

    def successors(self, state, event):
        return self._succ.get((state, event), ())

    def arrows(self):
        order = self._order
        eorder = {e: i for i, e in enumerate(self.events)}
        return sorted(self.relation, key=lambda t: (order[t[0]], eorder[t[1]], order[t[2]]))

    def is_deterministic(self):
        return all(len(v) <= 1 for v in self._succ.values())

    def sees_object(self, state):
        """``Do I see the object now?`` -- true unless in the outside state."""
        return state != self.outside

    def with_start(self, start):
        return EventDrivenModel(self.states, dict(self.events), self.relation, self.outside,
                                start, dict(self.expected), self.name)


# --- oracles ----------------------------------------------------------------


class SequencingOracle:
    """Simultaneous events happen one after another in lexicographic order.

    Nondeterministic arrows are resolved uniformly, keyed by the moment, the
    state, the event and the position within the tick.
    """

    def __init__(self, seed=0):
        self.seed = seed

    def order(self, state, events, past, future):
        return sorted(events)

    def choose(self, state, event, candidates, past, future, position=0):
        return _rng.keyed_choice(self.seed, candidates, "alpha", len(past), repr(state), event, position)


class ObscuringOracle(SequencingOracle):
    """Of simultaneous events only the lexicographically first takes effect."""

    def order(self, state, events, past, future):
        return [min(events)] if events else []


def advance(model, state, events, oracle=None, past=(), future=(), notices=None):
    """Next state of ``model`` after one tick carrying ``events``.

    An event without an outgoing arrow leaves the state where it is; the
    miss is logged and appended to ``notices`` when a list is given.
    """
    current = state
    for _, _, target in traverse(model, state, events, oracle, past, future, notices):
        current = target
    return current


def traverse(model, state, events, oracle=None, past=(), future=(), notices=None):
    """The arrows ``(source, event, target)`` taken during one tick, in order."""
    if not model.has_state(state):
        raise InputError(f"unknown state {state!r}")
    events = frozenset(events)
    unknown = events - model.alphabet
    if unknown:
        raise InputError(f"events {sorted(unknown)} are not in the model alphabet")
    if not events:
        return []
    if oracle is None:
        oracle = SequencingOracle()
    taken = []
    current = state
    for position, event in enumerate(oracle.order(state, events, past, future)):
        candidates = model.successors(current, event)
        if not candidates:
            log.debug("no %s arrow from %r at moment %d", event, current, len(past))
            if notices is not None:
                notices.append((len(past), current, event))
            continue
        if len(candidates) == 1:
            chosen = candidates[0]
        else:
            chosen = oracle.choose(current, event, candidates, past, future, position)
            if chosen not in candidates:
                raise OracleError(f"oracle chose {chosen!r}, not a target of ({current}, {event})")
        taken.append((current, event, chosen))
        current = chosen
    return taken


# --- event streams ----------------------------------------------------------


@dataclass(frozen=True)
class EventStream:
    """Sparse sequence of ``(step_index, events)``; empty ticks are omitted."""

    ticks: tuple
    events: frozenset = frozenset()

    def __post_init__(self):
        ticks = tuple((int(i), frozenset(evs)) for i, evs in self.ticks)
        declared = frozenset(self.events) or frozenset().union(*(evs for _, evs in ticks))
        previous = None
        for i, evs in ticks:
            if previous is not None and i <= previous:
                raise InputError("tick indices must be strictly increasing")
            if not evs <= declared:
                raise InputError(f"tick {i} names undeclared events {sorted(evs - declared)}")
            previous = i
        object.__setattr__(self, "ticks", ticks)
        object.__setattr__(self, "events", declared)

    def __len__(self):
        return len(self.ticks)

    @property
    def last_index(self):
        return self.ticks[-1][0] if self.ticks else 0

    def dense(self, n):
        """Event set at every step ``0..n`` (step 0 is always empty)."""
        out = [frozenset()] * (n + 1)
        for i, evs in self.ticks:
            if i > n or i < 1:
                raise InputError(f"tick index {i} outside steps 1..{n}")
            out[i] = evs
        return out

    def restricted(self, alphabet):
        alphabet = frozenset(alphabet)
        ticks = tuple((i, evs & alphabet) for i, evs in self.ticks if evs & alphabet)
        return EventStream(ticks, self.events & alphabet)

    @classmethod
    def from_dense(cls, sets, events=frozenset(), first_index=1):
        ticks = tuple((first_index + k, frozenset(s)) for k, s in enumerate(sets) if s)
        return cls(ticks, frozenset(events))


def project_events(history, definitions, transcript=None):
    """Turn a recorded life into the stream of events it witnessed.

    ``transcript`` maps event names to the step indices at which chi says
    the event happened; it completes semi-visible events and is required for
    invisible ones.  The pending part of the history is not a finished
    moment and is ignored.
    """
    transcript = {k: frozenset(v) for k, v in (transcript or {}).items()}
    for d in definitions:
        if isinstance(d, InvisibleEvent) and d.name not in transcript:
            raise MissingOracleError(f"invisible event {d.name!r} needs a chi transcript")
    plain = history.prefix(len(history.steps))
    n = len(plain.steps)
    ticks = []
    for t in range(1, n + 1):
        fired = set()
        for d in definitions:
            if isinstance(d, InvisibleEvent):
                hit = t in transcript[d.name]
            elif isinstance(d, SemiVisibleEvent):
                hit = occurred(d.visible, plain, t) or t in transcript.get(d.name, ())
            else:
                hit = occurred(d, plain, t)
            if hit:
                fired.add(d.name)
        if fired:
            ticks.append((t, frozenset(fired)))
    return EventStream(tuple(ticks), frozenset(d.name for d in definitions))


def simulate_edm(model, stream, oracle=None, start=None, notices=None, arrows=None):
    """Fold :func:`advance` over the ticks; returns ``len(stream) + 1`` states.

    This is offline replay, so the oracle sees the remaining ticks as the
    realized future.  Traversed arrows are appended to ``arrows`` as
    ``(step_index, source, event, target)`` when a list is given.
    """
    if oracle is None:
        oracle = SequencingOracle()
    state = model.start if start is None else start
    if not model.has_state(state):
        raise InputError(f"unknown start state {state!r}")
    ticks = stream.ticks
    path = [state]
    for k, (index, events) in enumerate(ticks):
        past = SeqView(ticks, 0, k)
        future = SeqView(ticks, k + 1, len(ticks))
        for source, event, target in traverse(model, state, events, oracle, past, future, notices):
            if arrows is not None:
                arrows.append((index, source, event, target))
            state = target
        path.append(state)
    return path


def step_path(tick_path, stream, n):
    """Expand a per-tick path into the model state after every step ``0..n``."""
    if len(tick_path) != len(stream) + 1:
        raise InputError("tick path and stream disagree in length")
    states = [tick_path[0]] * (n + 1)
    k = 0
    current = tick_path[0]
    for t in range(1, n + 1):
        if k < len(stream) and stream.ticks[k][0] == t:
            k += 1
            current = tick_path[k]
        states[t] = current
    if k != len(stream):
        raise InputError(f"stream has ticks beyond step {n}")
    return states


# --- variables ----------------------------------------------------------------


@dataclass(frozen=True, order=True)
class Evaluation:
    """Assignment of one value to every variable, kept sorted by name."""

    items: tuple = ()

    @classmethod
    def of(cls, mapping):
        return cls(tuple(sorted(dict(mapping).items())))

    def __getitem__(self, name):
        for k, v in self.items:
            if k == name:
                return v
        raise KeyError(name)

    def as_dict(self):
        return dict(self.items)

    def replace(self, **changes):
        d = self.as_dict()
        d.update(changes)
        return Evaluation.of(d)

    def __str__(self):
        return ",".join(f"{k}={v}" for k, v in self.items) or "-"


@dataclass(frozen=True, eq=False)
class VariablesModel:
    """An event-driven model plus variables with finite domains.

    Configurations are ``(state, Evaluation)`` pairs.  ``update`` lists the
    allowed successors for selected ``(state, evaluation, event)`` triples;
    any other triple follows the base arrows with the evaluation unchanged.
    """

    base: EventDrivenModel
    variables: tuple
    update: "dict" = field(default_factory=dict)
    initial: Evaluation | None = None

    def __post_init__(self):
        variables = tuple((name, tuple(domain)) for name, domain in self.variables)
        object.__setattr__(self, "variables", variables)
        names = [n for n, _ in variables]
        if len(set(names)) != len(names):
            raise InputError("duplicate variable names")
        for name, domain in variables:
            if not domain:
                raise InputError(f"variable {name!r} has an empty domain")
        object.__setattr__(self, "_domains", dict(variables))
        if self.initial is None:
            object.__setattr__(self, "initial", Evaluation.of({n: d[0] for n, d in variables}))
        self.check_evaluation(self.initial)
        update = {}
        for (s, ev, e), choices in self.update.items():
            self.check_evaluation(ev)
            if not self.base.has_state(s) or e not in self.base.events:
                raise InputError(f"update entry ({s}, {ev}, {e}) uses unknown labels")
            checked = []
            for t, ev2 in choices:
                self.check_evaluation(ev2)
                if (s, e, t) not in self.base.relation:
                    raise InputError(f"update ({s}, {e}) -> {t} has no base arrow")
                checked.append((t, ev2))
            update[(s, ev, e)] = tuple(sorted(set(checked), key=self._config_key))
        object.__setattr__(self, "update", MappingProxyType(update))

    def _config_key(self, config):
        s, ev = config
        return (self.base._order[s],
                tuple(self._domains[k].index(v) for k, v in ev.items))

    def check_evaluation(self, ev):
        if not isinstance(ev, Evaluation):
            raise InputError(f"expected an Evaluation, got {ev!r}")
        d = ev.as_dict()
        if set(d) != set(self._domains):
            raise InputError(f"evaluation {ev} does not assign exactly the declared variables")
        for k, v in d.items():
            if v not in self._domains[k]:
                raise InputError(f"value {v!r} outside the domain of {k!r}")

    @property
    def events(self):
        return self.base.events

    @property
    def alphabet(self):
        return self.base.alphabet

    @property
    def name(self):
        return self.base.name

    @property
    def start(self):
        return (self.base.start, self.initial)

    def has_state(self, config):
        try:
            s, ev = config
        except (TypeError, ValueError):
            return False
        if not self.base.has_state(s):
            return False
        try:
            self.check_evaluation(ev)
        except InputError:
            return False
        return True

    def successors(self, config, event):
        s, ev = config
        if (s, ev, event) in self.update:
            return self.update[(s, ev, event)]
        return tuple((t, ev) for t in self.base.successors(s, event))

    def evaluations(self):
        """Every evaluation, in the same order that ranks successor choices."""
        ordered = sorted(self.variables)
        names = [n for n, _ in ordered]
        for values in itertools.product(*(d for _, d in ordered)):
            yield Evaluation.of(dict(zip(names, values)))

    def size(self):
        size = len(self.base.states)
        for _, domain in self.variables:
            size *= len(domain)
        return size


def flatten(vm, bound=FLATTEN_BOUND):
    """Equivalent plain model whose states are ``(state, evaluation)`` pairs."""
    size = vm.size()
    if size > bound:
        raise CapacityError(f"flattening needs {size} states, bound is {bound}")
    evaluations = list(vm.evaluations())
    states = [(s, ev) for s in vm.base.states for ev in evaluations]
    relation = set()
    for config in states:
        for e in vm.events:
            for target in vm.successors(config, e):
                relation.add((config, e, target))
    return EventDrivenModel(tuple(states), dict(vm.events), frozenset(relation),
                            start=vm.start, name=vm.base.name)


# --- model files ---------------------------------------------------------------


def format_model(model):
    vm = model if isinstance(model, VariablesModel) else None
    base = vm.base if vm else model
    lines = ["# event-driven-model", f"name {base.name}",
             "states " + " ".join(base.states)]
    if base.outside is not None:
        lines.append(f"outside {base.outside}")
    lines.append(f"start {base.start}")
    for e, kind in base.events.items():
        lines.append(f"event {e} {kind}")
    for s, e, t in base.arrows():
        lines.append(f"arrow {s} {e} {t}")
    for s in base.states:
        if s in base.expected:
            lines.append(f"expect {s} {base.expected[s]}")
    if vm is not None:
        for name, domain in vm.variables:
            lines.append(f"var {name} " + " ".join(domain))
        lines.append(f"init {vm.initial}")
        order = base._order
        eorder = {e: i for i, e in enumerate(base.events)}
        keys = sorted(vm.update, key=lambda k: (order[k[0]], vm._config_key((k[0], k[1]))[1], eorder[k[2]]))
        for s, ev, e in keys:
            for t, ev2 in vm.update[(s, ev, e)]:
                lines.append(f"update {s} {ev} {e} -> {t} {ev2}")
    return "\n".join(lines) + "\n"


def _parse_evaluation(text, line):
    if text == "-":
        return Evaluation()
    pairs = {}
    for part in text.split(","):
        if "=" not in part:
            raise ParseError(f"bad evaluation {text!r}", line)
        k, v = part.split("=", 1)
        pairs[k] = v
    return Evaluation.of(pairs)


def parse_model(text):
    """Parse a model file into an :class:`EventDrivenModel` or :class:`VariablesModel`."""
    if text.lstrip().split("\n", 1)[0].strip() != "# event-driven-model":
        raise ParseError("model files start with '# event-driven-model'")
    name, states, outside, start = "model", None, None, None
    events, arrows, expected = {}, [], {}
    variables, initial, updates = [], None, {}
    for number, line in content_lines(text):
        head, *rest = line.split()
        try:
            if head == "name" and len(rest) == 1:
                name = check_label(rest[0], "model name")
            elif head == "states":
                states = tuple(check_label(s, "state") for s in rest)
            elif head == "outside" and len(rest) == 1:
                outside = rest[0]
            elif head == "start" and len(rest) == 1:
                start = rest[0]
            elif head == "event" and len(rest) == 2:
                events[check_label(rest[0], "event")] = rest[1]
            elif head == "arrow" and len(rest) == 3:
                arrows.append(tuple(rest))
            elif head == "expect" and len(rest) == 2:
                expected[rest[0]] = rest[1]
            elif head == "var" and len(rest) >= 2:
                variables.append((check_label(rest[0], "variable"),
                                  tuple(check_label(v, "value") for v in rest[1:])))
            elif head == "init" and len(rest) == 1:
                initial = _parse_evaluation(rest[0], number)
            elif head == "update" and len(rest) == 6 and rest[3] == "->":
                s, ev, e, _, t, ev2 = rest
                updates.setdefault((s, _parse_evaluation(ev, number), e), []).append(
                    (t, _parse_evaluation(ev2, number)))
            else:
                raise ParseError(f"unrecognised line {line!r}", number)
        except ValueError as exc:
            if isinstance(exc, ParseError):
                raise
            raise ParseError(str(exc), number) from None
    if states is None:
        raise ParseError("missing 'states' line")
    try:
        base = EventDrivenModel(states, events, frozenset(arrows), outside, start, expected, name)
        if variables or updates:
            return VariablesModel(base, tuple(variables), updates, initial)
    except InputError as exc:
        raise ParseError(str(exc)) from None
    return base


# --- event definition and transcript files --------------------------------------


def _format_pattern_step(p):
    bad = "*" if p.bad is None else "{" + ",".join(sorted(p.bad)) + "}"
    return f"{bad}/{p.action or '*'}/{p.observation or '*'}"


def format_event_definitions(definitions):
    lines = []
    for d in definitions:
        if isinstance(d, InvisibleEvent):
            lines.append(f"invisible {d.name}")
            continue
        visible = d.visible if isinstance(d, SemiVisibleEvent) else d
        kind = "semi" if isinstance(d, SemiVisibleEvent) else "visible"
        body = " | ".join(" ; ".join(_format_pattern_step(p) for p in pattern) for pattern in visible.members)
        lines.append(f"{kind} {d.name} = {body}")
    return "\n".join(lines) + "\n"


def parse_event_definitions(text, max_pattern_length=MAX_PATTERN_LENGTH):
    """Lines ``visible NAME = PATTERN | ...``, ``semi NAME = ...``, ``invisible NAME``.

    A pattern is ``;``-separated steps ``bad/action/observation`` where any
    field may be ``*`` and ``bad`` is a ``{...}`` set the step must contain.
    Patterns longer than ``max_pattern_length`` steps are refused.
    """
    out = []
    for number, line in content_lines(text):
        head, _, rest = line.partition(" ")
        rest = rest.strip()
        if head == "invisible":
            out.append(InvisibleEvent(check_label(rest, "event")))
            continue
        if head not in ("visible", "semi"):
            raise ParseError(f"unknown event kind {head!r}", number)
        name, eq, body = rest.partition("=")
        if not eq:
            raise ParseError("expected 'NAME = PATTERN'", number)
        name = name.strip()
        members = []
        for pattern in body.split("|"):
            steps = []
            for token in pattern.split(";"):
                fields = token.strip().split("/")
                if len(fields) != 3:
                    raise ParseError(f"pattern step {token.strip()!r} needs bad/action/observation", number)
                bad, action, obs = fields
                steps.append(PatternStep(None if bad == "*" else parse_set(bad, number),
                                         None if action == "*" else action,
                                         None if obs == "*" else obs))
            if len(steps) > max_pattern_length:
                raise ParseError(f"pattern of {len(steps)} steps exceeds the cap of {max_pattern_length}", number)
            members.append(tuple(steps))
        try:
            visible = VisibleEvent(name, tuple(members))
        except InputError as exc:
            raise ParseError(str(exc), number) from None
        out.append(SemiVisibleEvent(name, visible) if head == "semi" else visible)
    return out


def format_transcript(transcript):
    return "".join(f"{name} " + " ".join(str(i) for i in sorted(idx)) + "\n"
                   for name, idx in sorted(transcript.items()))


def parse_transcript(text):
    out = {}
    for number, line in content_lines(text):
        name, *indices = line.split()
        try:
            out[name] = frozenset(int(i) for i in indices)
        except ValueError:
            raise ParseError("transcript indices must be integers", number) from None
    return out
