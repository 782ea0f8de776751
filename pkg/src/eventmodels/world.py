"""Ground-truth worlds and the single life lived in them.

A :class:`PerfectWorld` is a total deterministic labeled digraph; a
:class:`RandomWorld` keeps the total graph but lets three oracles pick the
next state (alpha), the observation (beta) and the incorrect moves (chi).
Worlds are immutable; :class:`Life` is the mutable cursor that walks them.
"""

import logging
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Callable, NamedTuple

from . import rng as _rng
from .errors import GenerationError, InputError, OracleError, ParseError
from .history import History, HistoryStep
from .textio import check_label, content_lines, format_set, header_fields, parse_set
from .util import SeqView

log = logging.getLogger(__name__)

ABSOLUTE_BEGINNING = "absolute-beginning"
SUDDEN_DEATH = "sudden-death"
ORDINARY = "ordinary"
NATURAL_DEATH = "natural-death"

TOTALITY_CHECK_LIMIT = 10**6


@dataclass(frozen=True)
class ProbabilityInterval:
    low: float
    high: float

    def __post_init__(self):
        if not 0.0 <= self.low <= self.high <= 1.0:
            raise InputError(f"invalid probability interval [{self.low}, {self.high}]")

    @property
    def midpoint(self):
        return (self.low + self.high) / 2.0

    def contains(self, p, tolerance=0.0):
        return self.low - tolerance <= p <= self.high + tolerance

    def distance_outside(self, p):
        return max(self.low - p, p - self.high, 0.0)


def _freeze(mapping):
    return MappingProxyType(dict(mapping))


@dataclass(frozen=True, eq=False)
class PerfectWorld:
    states: tuple
    actions: tuple
    observations: tuple
    transition: "dict[tuple, str]"
    view: "dict[str, str]"
    incorrect: "dict[str, frozenset]"
    current: str

    def __post_init__(self):
        for name in ("states", "actions", "observations"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        object.__setattr__(self, "transition", _freeze(self.transition))
        object.__setattr__(self, "view", _freeze(self.view))
        object.__setattr__(
            self, "incorrect", _freeze({s: frozenset(self.incorrect.get(s, ())) for s in self.states})
        )
        _validate_alphabets(self)
        if len(self.states) * len(self.actions) <= TOTALITY_CHECK_LIMIT:
            state_set = set(self.states)
            for s in self.states:
                for a in self.actions:
                    target = self.transition.get((s, a))
                    if target is None:
                        raise InputError(f"transition missing for ({s}, {a})")
                    if target not in state_set:
                        raise InputError(f"transition ({s}, {a}) leads to unknown state {target!r}")
        if len(self.transition) != len(self.states) * len(self.actions):
            raise InputError("transition table has entries outside states x actions")

    def successors(self, state, action):
        return (self.transition[(state, action)],)

    def arrows(self):
        for s in self.states:
            for a in self.actions:
                yield s, a, self.transition[(s, a)]

    def incorrect_table(self):
        return self.incorrect

    def with_current(self, state):
        if state not in self.view:
            raise InputError(f"unknown state {state!r}")
        return PerfectWorld(self.states, self.actions, self.observations, self.transition,
                            self.view, self.incorrect, state)

    def __eq__(self, other):
        return isinstance(other, PerfectWorld) and _world_key(self) == _world_key(other)


def _world_key(world):
    return (world.states, world.actions, world.observations, dict(world.transition),
            dict(world.view), dict(world.incorrect), world.current)


def _validate_alphabets(world):
    for what, labels in (("state", world.states), ("action", world.actions),
                         ("observation", world.observations)):
        for label in labels:
            check_label(label, what)
        if len(set(labels)) != len(labels):
            raise InputError(f"duplicate {what} labels")
    if not world.states or not world.actions:
        raise InputError("a world needs at least one state and one action")
    if world.current not in set(world.states):
        raise InputError(f"current state {world.current!r} is not a state")
    observations = set(world.observations)
    for s in world.states:
        if s not in world.view:
            raise InputError(f"view undefined for state {s!r}")
        if world.view[s] not in observations:
            raise InputError(f"view of {s!r} is not an observation")
        if not world.incorrect[s] <= set(world.actions):
            raise InputError(f"incorrect set of {s!r} names unknown actions")


# --- oracles ----------------------------------------------------------------


class UniformAlpha:
    """Pick uniformly among the compliant targets, keyed by moment and arguments."""

    def __call__(self, past, state, action, future, candidates, seed):
        return _rng.keyed_choice(seed, candidates, "alpha", len(past), state, action)


class WeightedAlpha:
    """Pick targets with fixed relative weights per ``(state, action)``.

    Missing weights default to 1, so a partial table still covers every arrow.
    """

    def __init__(self, weights):
        self.weights = {key: dict(value) for key, value in weights.items()}

    def __call__(self, past, state, action, future, candidates, seed):
        table = self.weights.get((state, action), {})
        weights = [table.get(c, 1.0) for c in candidates]
        return _rng.keyed_weighted_choice(seed, candidates, weights, "alpha", len(past), state, action)


class ViewBeta:
    def __init__(self, view):
        self.view = dict(view)

    def __call__(self, past, state, seed):
        return self.view[state]


class TableChi:
    """Answer ``incorrect:<action>`` events from a static table; all else false."""

    def __init__(self, incorrect):
        self.incorrect = {s: frozenset(v) for s, v in incorrect.items()}

    def __call__(self, past, state, event, seed):
        if event.startswith("incorrect:"):
            return event[len("incorrect:"):] in self.incorrect.get(state, ())
        return False


@dataclass(frozen=True)
class OracleBundle:
    alpha: Callable = field(default_factory=UniformAlpha)
    beta: Callable | None = None
    chi: Callable | None = None
    seed: int = 0


@dataclass(frozen=True, eq=False)
class RandomWorld:
    states: tuple
    actions: tuple
    observations: tuple
    relation: frozenset
    view: "dict[str, str]"
    incorrect: "dict[str, frozenset]"
    current: str
    oracles: OracleBundle = field(default_factory=OracleBundle)

    def __post_init__(self):
        for name in ("states", "actions", "observations"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        object.__setattr__(self, "relation", frozenset(tuple(t) for t in self.relation))
        object.__setattr__(self, "view", _freeze(self.view))
        object.__setattr__(
            self, "incorrect", _freeze({s: frozenset(self.incorrect.get(s, ())) for s in self.states})
        )
        _validate_alphabets(self)
        succ = {}
        state_set, action_set = set(self.states), set(self.actions)
        for s, a, t in self.relation:
            if s not in state_set or t not in state_set or a not in action_set:
                raise InputError(f"arrow ({s}, {a}, {t}) uses unknown labels")
            succ.setdefault((s, a), []).append(t)
        for s in self.states:
            for a in self.actions:
                if (s, a) not in succ:
                    raise InputError(f"relation is not total: no arrow for ({s}, {a})")
        order = {s: i for i, s in enumerate(self.states)}
        object.__setattr__(
            self, "_succ", {k: tuple(sorted(v, key=order.__getitem__)) for k, v in succ.items()}
        )

    def successors(self, state, action):
        return self._succ[(state, action)]

    def arrows(self):
        order = {s: i for i, s in enumerate(self.states)}
        aorder = {a: i for i, a in enumerate(self.actions)}
        return iter(sorted(self.relation, key=lambda t: (order[t[0]], aorder[t[1]], order[t[2]])))

    def incorrect_table(self):
        # a custom chi makes the incorrect sets a per-moment random variable
        return self.incorrect if self.oracles.chi is None else None

    def with_current(self, state):
        if state not in self.view:
            raise InputError(f"unknown state {state!r}")
        return RandomWorld(self.states, self.actions, self.observations, self.relation,
                           self.view, self.incorrect, state, self.oracles)

    def with_oracles(self, oracles):
        return RandomWorld(self.states, self.actions, self.observations, self.relation,
                           self.view, self.incorrect, self.current, oracles)


def classify_state(world, state):
    """Classify ``state`` over the usable subgraph (arrows whose action is allowed)."""
    if state not in world.view:
        raise InputError(f"unknown state {state!r}")
    if world.incorrect[state] >= set(world.actions):
        return SUDDEN_DEATH
    for s, a, t in world.arrows():
        if t == state and a not in world.incorrect[s]:
            return ORDINARY
    return ABSOLUTE_BEGINNING


# --- stepping ---------------------------------------------------------------


class StepOutcome(NamedTuple):
    moved: bool
    observation: str | None = None


REJECTED = StepOutcome(False)


@dataclass(frozen=True)
class StatePath:
    """World-side knowledge of a life: where it started and every move made.

    ``len(path)`` is the number of moves; ``path.states`` includes the start.
    ``fulls`` optionally records the complete incorrect set at each moment
    (one per element of ``states``).
    """

    start: str
    labels: tuple = ()
    visited: tuple = ()
    fulls: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "visited", tuple(self.visited))
        if len(self.labels) != len(self.visited):
            raise InputError("a state path needs one label per move")

    def __len__(self):
        return len(self.visited)

    @property
    def states(self):
        return (self.start,) + self.visited

    def arrows(self):
        states = self.states
        return [(states[i], self.labels[i], states[i + 1]) for i in range(len(self.visited))]


class Life:
    """Mutable cursor over an immutable world.

    Oracles see the full history so far as their past and an empty future:
    online simulation cannot look ahead.
    """

    def __init__(self, world, seed=0):
        self.world = world
        self.state = world.current
        self.seed = seed
        self._action_set = frozenset(world.actions)
        self._steps = []
        self._full_past = []
        self._bad = []
        self._labels = []
        self._visited = []
        self._fulls = []
        self._full = self._incorrect_now()

    def _oracle_seed(self, name):
        oracles = getattr(self.world, "oracles", None)
        return _rng.derive_seed(oracles.seed if oracles else self.seed, name)

    def _incorrect_now(self):
        world = self.world
        chi = getattr(getattr(world, "oracles", None), "chi", None)
        if chi is None:
            full = world.incorrect[self.state]
        else:
            past = SeqView(self._full_past)
            seed = self._oracle_seed("chi")
            full = frozenset(a for a in world.actions if chi(past, self.state, f"incorrect:{a}", seed))
        self._fulls.append(full)
        return full

    @property
    def incorrect_now(self):
        return self._full

    def is_sudden_death(self):
        return self._full >= self._action_set

    def step(self, action):
        if action not in self._action_set:
            raise InputError(f"unknown action {action!r}")
        if action in self._full:
            if action not in self._bad:
                self._bad.append(action)
            return REJECTED
        world = self.world
        if isinstance(world, RandomWorld):
            past = SeqView(self._full_past)
            candidates = world.successors(self.state, action)
            target = world.oracles.alpha(past, self.state, action, (), candidates,
                                         self._oracle_seed("alpha"))
            if target not in candidates:
                raise OracleError(f"alpha chose {target!r}, not a target of ({self.state}, {action})")
            beta = world.oracles.beta
            observation = (beta(past, target, self._oracle_seed("beta")) if beta is not None
                           else world.view[target])
        else:
            target = world.transition[(self.state, action)]
            observation = world.view[target]
        bad = frozenset(self._bad)
        self._steps.append(HistoryStep(bad, action, observation))
        self._full_past.append((self._full, action, observation))
        self._labels.append(action)
        self._visited.append(target)
        self._bad = []
        self.state = target
        self._full = self._incorrect_now()
        return StepOutcome(True, observation)

    @property
    def pending_bad(self):
        return frozenset(self._bad)

    @property
    def steps(self):
        return SeqView(self._steps)

    def history(self):
        return History(tuple(self._steps))

    def path(self):
        return StatePath(self.world.current, tuple(self._labels), tuple(self._visited), tuple(self._fulls))


def step(life, action):
    return life.step(action)


# --- policies ---------------------------------------------------------------


class UniformPolicy:
    """Uniform over the actions not yet rejected at this moment."""

    def __call__(self, steps, bad, actions, rng):
        allowed = [a for a in actions if a not in bad]
        return rng.choice(allowed or list(actions))


class ScriptedPolicy:
    """Cycle through a fixed action sequence, one entry per attempt."""

    def __init__(self, sequence):
        self.sequence = tuple(sequence)
        if not self.sequence:
            raise InputError("scripted policy needs at least one action")
        self._counted = (0, 0)

    def __call__(self, steps, bad, actions, rng):
        seen, attempts = self._counted
        if seen > len(steps):
            seen, attempts = 0, 0
        for k in range(seen, len(steps)):
            attempts += len(steps[k].bad) + 1
        self._counted = (len(steps), attempts)
        return self.sequence[(attempts + len(bad)) % len(self.sequence)]


class RepeatLastPolicy:
    """Repeat the last accepted action; explore uniformly with probability epsilon."""

    def __init__(self, epsilon=0.1):
        if not 0.0 <= epsilon <= 1.0:
            raise InputError("epsilon must lie in [0, 1]")
        self.epsilon = epsilon

    def __call__(self, steps, bad, actions, rng):
        allowed = [a for a in actions if a not in bad] or list(actions)
        explore = rng.random() < self.epsilon
        if not explore and steps and steps[-1].action in allowed:
            return steps[-1].action
        return rng.choice(allowed)


def parse_policy(spec):
    """``uniform`` | ``scripted:a,b,c`` | ``repeat`` | ``repeat:0.2``."""
    name, _, arg = spec.partition(":")
    if name == "uniform" and not arg:
        return UniformPolicy()
    if name == "scripted" and arg:
        return ScriptedPolicy(arg.split(","))
    if name == "repeat":
        return RepeatLastPolicy(float(arg) if arg else 0.1)
    raise InputError(f"unknown policy spec {spec!r}")


class LifeRecord(NamedTuple):
    history: History
    path: StatePath
    cause: str


def run_life(world, policy, horizon, seed=0):
    """Live until ``horizon`` moves succeed or the agent reaches sudden death."""
    if horizon < 0:
        raise InputError("horizon must be non-negative")
    life = Life(world, seed)
    policy_rng = _rng.substream(seed, "policy")
    actions = world.actions
    max_attempts = 4 * len(actions) + 16
    cause = NATURAL_DEATH
    moved = 0
    while moved < horizon:
        if life.is_sudden_death():
            cause = SUDDEN_DEATH
            break
        for _ in range(max_attempts):
            action = policy(life.steps, life.pending_bad, actions, policy_rng)
            if life.step(action).moved:
                moved += 1
                break
        else:
            raise InputError(f"policy made {max_attempts} attempts without a correct move")
    return LifeRecord(life.history(), life.path(), cause)


# --- the adversarial creature -----------------------------------------------


class ConstantPredictor:
    def __init__(self, low, high):
        self.interval = ProbabilityInterval(low, high)

    def __call__(self, prefix):
        return self.interval


class RunningMeanPredictor:
    """Predict ``[m - half_width, m + half_width]`` around the running mean."""

    def __init__(self, half_width=0.05, prior=0.5):
        self.half_width = half_width
        self.prior = prior
        self._seen = 0
        self._ones = 0

    def __call__(self, prefix):
        n = len(prefix)
        if n < self._seen:
            self._seen, self._ones = 0, 0
        self._ones += sum(prefix[self._seen:n])
        self._seen = n
        m = self._ones / n if n else self.prior
        return ProbabilityInterval(max(0.0, m - self.half_width), min(1.0, m + self.half_width))


def creature_stream(low, high, predictor, length, seed=0, tolerance=0.05):
    """Binary stream from a creature that keeps the predictor confused.

    The creature owns two dice with success probabilities ``low`` and
    ``high`` and holds one of them (initially ``low``).  Before each throw it
    reads the predictor's interval for the prefix.  It keeps its dice while
    the agent is still fooled on that side; the agent has caught up when
    either the interval (widened by ``tolerance``) reaches the dice's mean,
    or the emitted frequency already lies beyond the interval on the dice's
    side.  On catch-up it switches to the dice whose mean lies farthest
    outside the interval; ties go to the dice farther from the interval
    midpoint, then to the dice it was not holding.
    """
    if not 0.0 <= low <= high <= 1.0:
        raise InputError(f"dice probabilities must satisfy 0 <= a <= b <= 1, got {low}, {high}")
    rand = _rng.substream(seed, "creature")
    out = []
    ones = 0
    holding = low
    for n in range(length):
        interval = predictor(out)
        if low != high:
            freq = ones / n if n else None
            beyond = freq is not None and (
                freq > interval.high if holding == high else freq < interval.low
            )
            if beyond or interval.contains(holding, tolerance):
                holding = _farthest_dice(low, high, interval, holding)
        bit = 1 if rand.random() < holding else 0
        ones += bit
        out.append(bit)
    return out


def _farthest_dice(low, high, interval, holding):
    d_low, d_high = interval.distance_outside(low), interval.distance_outside(high)
    if d_low != d_high:
        return low if d_low > d_high else high
    m_low, m_high = abs(low - interval.midpoint), abs(high - interval.midpoint)
    if m_low != m_high:
        return low if m_low > m_high else high
    return high if holding == low else low


# --- generation -------------------------------------------------------------


def generate_world(n_states, n_actions, n_observations, incorrect_density=0.0, seed=0,
                   allow_sudden_death=False, max_retries=100):
    """Sample a perfect world; no state is sudden death unless allowed."""
    if min(n_states, n_actions, n_observations) < 1:
        raise InputError("counts must be at least 1")
    if not 0.0 <= incorrect_density < 1.0:
        raise InputError("incorrect density must lie in [0, 1)")
    rand = _rng.substream(seed, "world-gen")
    states = tuple(f"s{i}" for i in range(n_states))
    actions = tuple(f"a{i}" for i in range(n_actions))
    observations = tuple(f"o{i}" for i in range(n_observations))
    transition = {(s, a): rand.choice(states) for s in states for a in actions}
    view = {s: rand.choice(observations) for s in states}
    incorrect = {}
    for s in states:
        for _ in range(max_retries):
            bad = frozenset(a for a in actions if rand.random() < incorrect_density)
            if allow_sudden_death or len(bad) < n_actions:
                break
        else:
            raise GenerationError(f"could not avoid sudden death at {s} after {max_retries} retries")
        incorrect[s] = bad
    return PerfectWorld(states, actions, observations, transition, view, incorrect, states[0])


# --- world files ------------------------------------------------------------


def format_world(world):
    kind = "random-world" if isinstance(world, RandomWorld) else "perfect-world"
    lines = [f"# {kind}",
             "states " + " ".join(world.states),
             "actions " + " ".join(world.actions),
             "observations " + " ".join(world.observations),
             f"current {world.current}"]
    if isinstance(world, RandomWorld):
        for s, a, t in world.arrows():
            lines.append(f"arrow {s} {a} {t}")
        alpha = world.oracles.alpha
        if isinstance(alpha, WeightedAlpha):
            for s, a, t in world.arrows():
                w = alpha.weights.get((s, a), {}).get(t)
                if w is not None:
                    lines.append(f"weight {s} {a} {t} {w!r}")
    else:
        for s, a, t in world.arrows():
            lines.append(f"transition {s} {a} {t}")
    for s in world.states:
        lines.append(f"view {s} {world.view[s]}")
    for s in world.states:
        lines.append(f"incorrect {s} {format_set(world.incorrect[s])}")
    return "\n".join(lines) + "\n"


def parse_world(text, seed=0):
    """Parse a world file; random worlds get oracles seeded with ``seed``."""
    first = text.lstrip().split("\n", 1)[0].strip()
    if first not in ("# perfect-world", "# random-world"):
        raise ParseError("world files start with '# perfect-world' or '# random-world'")
    is_random = first == "# random-world"
    lists = {}
    current = None
    arrows, view, incorrect, weights = [], {}, {}, {}
    for number, line in content_lines(text):
        head, *rest = line.split()
        try:
            if head in ("states", "actions", "observations"):
                lists[head] = tuple(check_label(x, head[:-1]) for x in rest)
            elif head == "current" and len(rest) == 1:
                current = rest[0]
            elif head in ("transition", "arrow") and len(rest) == 3:
                if (head == "arrow") != is_random:
                    raise ParseError(f"{head!r} lines do not belong in this world kind", number)
                arrows.append(tuple(rest))
            elif head == "weight" and is_random and len(rest) == 4:
                weights.setdefault((rest[0], rest[1]), {})[rest[2]] = float(rest[3])
            elif head == "view" and len(rest) == 2:
                view[rest[0]] = rest[1]
            elif head == "incorrect" and len(rest) >= 2:
                incorrect[rest[0]] = parse_set(" ".join(rest[1:]), number)
            else:
                raise ParseError(f"unrecognised line {line!r}", number)
        except ValueError as exc:
            if isinstance(exc, ParseError):
                raise
            raise ParseError(str(exc), number) from None
    for key in ("states", "actions", "observations"):
        if key not in lists:
            raise ParseError(f"missing {key!r} line")
    if current is None:
        raise ParseError("missing 'current' line")
    if is_random:
        alpha = WeightedAlpha(weights) if weights else UniformAlpha()
        return RandomWorld(lists["states"], lists["actions"], lists["observations"], frozenset(arrows),
                           view, incorrect, current, OracleBundle(alpha=alpha, seed=seed))
    transition = {}
    for s, a, t in arrows:
        if (s, a) in transition:
            raise ParseError(f"duplicate transition for ({s}, {a})")
        transition[(s, a)] = t
    return PerfectWorld(lists["states"], lists["actions"], lists["observations"], transition,
                        view, incorrect, current)


# --- ground-truth path files ---------------------------------------------------


def format_path(path, cause=NATURAL_DEATH):
    """World-side record of a life.  Agents never get to read this file."""
    fulls = path.fulls
    lines = [f"# state-path ground-truth moves={len(path)} cause={cause}"]
    suffix = (lambda i: f" full={format_set(fulls[i])}") if fulls is not None else (lambda i: "")
    lines.append(f"start {path.start}{suffix(0)}")
    for i, (label, state) in enumerate(zip(path.labels, path.visited), start=1):
        lines.append(f"move {label} {state}{suffix(i)}")
    return "\n".join(lines) + "\n"


def parse_path(text):
    start = None
    labels, visited, fulls = [], [], []
    for number, line in content_lines(text):
        tokens = line.split()
        full = None
        if tokens and tokens[-1].startswith("full="):
            full = parse_set(tokens.pop()[len("full="):], number)
        if tokens[0] == "start" and len(tokens) == 2 and start is None:
            start = check_label(tokens[1], "state")
        elif tokens[0] == "move" and len(tokens) == 3 and start is not None:
            labels.append(check_label(tokens[1], "action"))
            visited.append(check_label(tokens[2], "state"))
        else:
            raise ParseError(f"unrecognised line {line!r}", number)
        fulls.append(full)
    if start is None:
        raise ParseError("missing 'start' line")
    header = header_fields(text)
    if "moves" in header and int(header["moves"]) != len(visited):
        raise ParseError(f"header announces {header['moves']} moves, found {len(visited)}")
    if all(f is None for f in fulls):
        recorded = None
    elif any(f is None for f in fulls):
        raise ParseError("either every line of a path carries full= or none does")
    else:
        recorded = tuple(fulls)
    return StatePath(start, tuple(labels), tuple(visited), recorded)
