"""The agent's single life and the views of it that the agent can afford.

A step is ``(bad, action, observation)`` where ``bad`` holds the moves tried
and rejected *before* ``action`` was accepted.  The final rejected moves of an
unfinished step, together with the action chosen but not yet observed, live
in ``History.pending``.
"""

from collections import Counter
from dataclasses import dataclass

from .errors import ConsistencyError, InputError, ParseError
from .textio import check_label, content_lines, format_set, header_fields, parse_key_values, parse_set


@dataclass(frozen=True)
class HistoryStep:
    bad: frozenset
    action: str
    observation: str

    def __post_init__(self):
        object.__setattr__(self, "bad", frozenset(self.bad))
        if self.action in self.bad:
            raise InputError(f"action {self.action!r} is listed in its own bad set")


@dataclass(frozen=True)
class Pending:
    bad: frozenset
    action: str

    def __post_init__(self):
        object.__setattr__(self, "bad", frozenset(self.bad))
        if self.action in self.bad:
            raise InputError(f"pending action {self.action!r} is listed in its own bad set")


@dataclass(frozen=True)
class History:
    steps: tuple = ()
    pending: Pending | None = None

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(self.steps))

    def __len__(self):
        return len(self.steps)

    @property
    def actions(self):
        return [s.action for s in self.steps]

    @property
    def observations(self):
        return [s.observation for s in self.steps]

    def prefix(self, t):
        """The first ``t`` steps as a history without a pending part."""
        return History(self.steps[:t])


@dataclass(frozen=True)
class FullHistory(History):
    """Same shape as :class:`History`; every ``bad`` holds the complete incorrect set."""


@dataclass(frozen=True)
class LocalHistory:
    suffix: tuple

    @property
    def k(self):
        return len(self.suffix)


@dataclass(frozen=True)
class ApproximateHistory:
    tail: LocalHistory
    event_log: dict
    observation_counts: dict
    action_counts: dict
    length: int


def truncated(history):
    """Strip the bad sets: ``a1, v1, ..., at, vt`` plus the pending action."""
    tokens = []
    for step in history.steps:
        tokens.append(step.action)
        tokens.append(step.observation)
    if history.pending is not None:
        tokens.append(history.pending.action)
    return tuple(tokens)


def from_truncated(tokens):
    """Rebuild a history with empty bad sets from ``truncated`` output."""
    tokens = list(tokens)
    steps = [HistoryStep(frozenset(), tokens[i], tokens[i + 1]) for i in range(0, len(tokens) - 1, 2)]
    pending = Pending(frozenset(), tokens[-1]) if len(tokens) % 2 else None
    return History(tuple(steps), pending)


def local(history, k):
    n = len(history.steps)
    if not 0 <= k <= n:
        raise InputError(f"local history length {k} outside [0, {n}]")
    return LocalHistory(history.steps[n - k:])


def full_from_trace(history, world, path):
    """Replace each tried-bad subset with the complete incorrect set at that moment.

    The incorrect sets come from the world's static table when it has one,
    otherwise from the per-moment sets recorded on ``path`` during simulation.
    """
    n = len(history.steps)
    if len(path) != n:
        raise InputError(f"state path has {len(path)} moves but history has {n} steps")
    table = world.incorrect_table()
    states = path.states
    if table is not None:
        fulls = [frozenset(table[s]) for s in states]
    elif path.fulls is not None and len(path.fulls) == n + 1:
        fulls = list(path.fulls)
    else:
        raise InputError("world has dynamic incorrect sets and the path carries no recorded sets")

    steps = []
    for i, step in enumerate(history.steps):
        if not step.bad <= fulls[i]:
            raise ConsistencyError(
                f"step {i + 1}: tried-bad {format_set(step.bad)} not within incorrect {format_set(fulls[i])}"
            )
        steps.append(HistoryStep(fulls[i], step.action, step.observation))
    pending = None
    if history.pending is not None:
        if not history.pending.bad <= fulls[n]:
            raise ConsistencyError("pending bad set not within the final incorrect set")
        pending = Pending(fulls[n], history.pending.action)
    return FullHistory(tuple(steps), pending)


# --- visible events ---------------------------------------------------------


@dataclass(frozen=True)
class PatternStep:
    """One position of a local-history template; ``None`` fields are wildcards.

    ``bad`` is a containment test: the step's bad set must include it.
    """

    bad: frozenset | None = None
    action: str | None = None
    observation: str | None = None

    def matches(self, element):
        if self.bad is not None and not self.bad <= element.bad:
            return False
        if self.action is not None and self.action != element.action:
            return False
        if self.observation is not None:
            # a pending element has no observation yet
            if getattr(element, "observation", None) != self.observation:
                return False
        return True


@dataclass(frozen=True)
class VisibleEvent:
    name: str
    members: tuple

    def __post_init__(self):
        check_label(self.name, "event name")
        members = tuple(tuple(p) for p in self.members)
        if not members:
            raise InputError(f"visible event {self.name!r} has no member patterns")
        if any(len(p) < 1 for p in members):
            raise InputError(f"visible event {self.name!r} has an empty pattern")
        object.__setattr__(self, "members", members)

    kind = "visible"


@dataclass(frozen=True)
class SemiVisibleEvent:
    name: str
    visible: VisibleEvent

    kind = "semi-visible"


@dataclass(frozen=True)
class InvisibleEvent:
    name: str

    kind = "invisible"


def last_action_is(action, name=None):
    return VisibleEvent(name or f"last_{action}", ((PatternStep(action=action),),))


def last_observation_is(observation, name=None):
    return VisibleEvent(name or f"saw_{observation}", ((PatternStep(observation=observation),),))


def tried_incorrect(action, name=None):
    """Visible part of "``action`` is incorrect": we tried it and it was rejected."""
    return VisibleEvent(name or f"tried_bad_{action}", ((PatternStep(bad=frozenset([action])),),))


def _window(history, t, length):
    elements = []
    if t == len(history.steps) and history.pending is not None:
        elements.append(history.pending)
        length -= 1
    if length > t:
        return None
    return list(history.steps[t - length:t]) + elements


def occurred(event, history, t):
    """True iff the first ``t`` steps end with a suffix matching a member pattern."""
    if isinstance(event, SemiVisibleEvent):
        event = event.visible
    if not 0 <= t <= len(history.steps):
        raise InputError(f"moment {t} outside [0, {len(history.steps)}]")
    for pattern in event.members:
        window = _window(history, t, len(pattern))
        if window is None:
            continue
        if all(p.matches(e) for p, e in zip(pattern, window)):
            return True
    return False


def approximate(history, tail_length, events=()):
    n = len(history.steps)
    tail = local(history, tail_length)
    log = {}
    for event in events:
        log[event.name] = tuple(t for t in range(1, n + 1) if occurred(event, history, t))
    return ApproximateHistory(
        tail=tail,
        event_log=log,
        observation_counts=dict(Counter(history.observations)),
        action_counts=dict(Counter(history.actions)),
        length=n,
    )


# --- life log format --------------------------------------------------------


def format_history(history):
    lines = [f"# life steps={len(history.steps)} pending={int(history.pending is not None)}"]
    for step in history.steps:
        lines.append(f"bad={format_set(step.bad)} action={step.action} obs={step.observation}")
    if history.pending is not None:
        lines.append(f"pending bad={format_set(history.pending.bad)} action={history.pending.action}")
    return "\n".join(lines) + "\n"


def parse_history(text):
    steps = []
    pending = None
    for number, line in content_lines(text):
        if pending is not None:
            raise ParseError("nothing may follow the pending line", number)
        tokens = line.split()
        is_pending = tokens[0] == "pending"
        if is_pending:
            tokens = tokens[1:]
        fields = parse_key_values(tokens, number)
        try:
            bad = parse_set(fields["bad"], number)
            action = check_label(fields["action"], "action")
            if is_pending:
                pending = Pending(bad, action)
            else:
                steps.append(HistoryStep(bad, action, check_label(fields["obs"], "observation")))
        except KeyError as exc:
            raise ParseError(f"missing field {exc.args[0]!r}", number) from None
        except InputError as exc:
            if isinstance(exc, ParseError):
                raise
            raise ParseError(str(exc), number) from None
    header = header_fields(text)
    if "steps" in header and int(header["steps"]) != len(steps):
        raise ParseError(f"header announces {header['steps']} steps, found {len(steps)}")
    return History(tuple(steps), pending)
