"""Synchronous products of event-driven models.

A composite state is the tuple of component states; a component with
variables contributes its ``(state, Evaluation)`` configuration.  Every event
in a tick goes to each component whose alphabet contains it, so a shared
event moves several coordinates at once.
"""

import itertools
import math
from collections import deque
from dataclasses import dataclass

from . import rng as _rng
from .edm import SequencingOracle, VariablesModel, traverse
from .errors import CapacityError, InputError
from .util import SeqView


@dataclass(frozen=True, eq=False)
class CartesianModel:
    components: tuple
    current: tuple = None

    def __post_init__(self):
        components = tuple(self.components)
        if not components:
            raise InputError("a Cartesian model needs at least one component")
        object.__setattr__(self, "components", components)
        current = tuple(m.start for m in components) if self.current is None else tuple(self.current)
        if len(current) != len(components):
            raise InputError(f"composite state has {len(current)} coordinates for {len(components)} components")
        for m, s in zip(components, current):
            if not m.has_state(s):
                raise InputError(f"{s!r} is not a state of component {m.name!r}")
        object.__setattr__(self, "current", current)

    @property
    def alphabet(self):
        return frozenset().union(*(m.alphabet for m in self.components))

    @property
    def names(self):
        raw = [m.name for m in self.components]
        if len(set(raw)) == len(raw):
            return raw
        return [f"{name}.{i}" for i, name in enumerate(raw)]

    def with_current(self, current):
        return CartesianModel(self.components, current)

    def start(self):
        return tuple(m.start for m in self.components)


def cartesian(models):
    return CartesianModel(tuple(models))


def _component_size(model):
    return model.size() if isinstance(model, VariablesModel) else len(model.states)


def product_size(cart):
    return math.prod(_component_size(m) for m in cart.components)


def component_oracles(master_seed, count):
    """One sequencing oracle per component, seeded by the component's index.

    Appending a component leaves the earlier components' draws unchanged.
    """
    return [SequencingOracle(_rng.derive_seed(master_seed, "component", i)) for i in range(count)]


def advance_composite(cart, events, oracles=None, pasts=None, futures=None, state=None):
    """Composite state after one tick; each component sees only its own events."""
    state = cart.current if state is None else tuple(state)
    events = frozenset(events)
    unknown = events - cart.alphabet
    if unknown:
        raise InputError(f"events {sorted(unknown)} are in no component alphabet")
    oracles = oracles or component_oracles(0, len(cart.components))
    out = []
    for i, (model, s) in enumerate(zip(cart.components, state)):
        mine = events & model.alphabet
        if not mine:
            out.append(s)
            continue
        past = pasts[i] if pasts is not None else ()
        future = futures[i] if futures is not None else ()
        for _, _, target in traverse(model, s, mine, oracles[i], past, future):
            s = target
        out.append(s)
    return tuple(out)


def simulate_composite(cart, stream, oracles=None):
    """Composite state before the first tick and after each tick of ``stream``.

    Each component's oracle sees the stream restricted to its own alphabet
    as past and future, exactly as when the component is simulated alone.
    """
    n = len(cart.components)
    oracles = oracles or component_oracles(0, n)
    own = [stream.restricted(m.alphabet).ticks for m in cart.components]
    seen = [0] * n
    state = cart.current
    trajectory = [state]
    for _, events in stream.ticks:
        pasts, futures = [], []
        for i, model in enumerate(cart.components):
            pasts.append(SeqView(own[i], 0, seen[i]))
            futures.append(SeqView(own[i], seen[i] + 1, len(own[i])))
            if events & model.alphabet:
                seen[i] += 1
        state = advance_composite(cart, events, oracles, pasts, futures, state)
        trajectory.append(state)
    return trajectory


def project(trajectory, stream, index, alphabet):
    """Coordinate ``index`` of a composite trajectory, kept only at the ticks it was offered events."""
    out = [trajectory[0][index]]
    for k, (_, events) in enumerate(stream.ticks):
        if events & alphabet:
            out.append(trajectory[k + 1][index])
    return out


def _branches(model, state, event):
    """Every state reachable by one ``event`` tick, including staying put."""
    if event not in model.alphabet:
        return (state,)
    targets = model.successors(state, event)
    return targets or (state,)


def reachable_composite(cart, start=None, bound=None):
    """Breadth-first closure of ``start`` under single-event ticks and every arrow choice.

    Raises :class:`CapacityError` carrying the states found so far when more
    than ``bound`` states turn up (default: the full product size).
    """
    start = cart.current if start is None else tuple(start)
    if bound is None:
        bound = product_size(cart)
    events = sorted(cart.alphabet)
    seen = {start}
    order = [start]
    queue = deque([start])
    while queue:
        state = queue.popleft()
        for e in events:
            options = [_branches(m, s, e) for m, s in zip(cart.components, state)]
            for nxt in itertools.product(*options):
                if nxt in seen:
                    continue
                if len(seen) >= bound:
                    raise CapacityError(f"more than {bound} reachable composite states", partial=frozenset(seen))
                seen.add(nxt)
                order.append(nxt)
                queue.append(nxt)
    return frozenset(seen)


def format_coordinate(name, state):
    if isinstance(state, tuple) and len(state) == 2 and hasattr(state[1], "items"):
        base, ev = state
        return f"{name}:{base}/{ev}" if ev.items else f"{name}:{base}"
    return f"{name}:{state}"


def format_composite(cart, state=None):
    state = cart.current if state is None else state
    return "(" + ",".join(format_coordinate(n, s) for n, s in zip(cart.names, state)) + ")"


def is_single_component(cart):
    return len(cart.components) == 1
