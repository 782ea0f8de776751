"""Scoring lives and comparing them.

A score vector holds one value per criterion; :data:`UNDEF` marks a step
that scores nothing on a criterion and is skipped by every mean, never read
as zero.  Lives are compared by the means of their beginnings.  There is
deliberately no discount factor anywhere in this module: how much the near
future should weigh is a question for the agent's strategy, and baking a
discount into the objective would change which lives count as better.
"""

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError, ParseError
from .textio import content_lines


class _Undef:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "Undef"

    def __reduce__(self):
        return (_Undef, ())


UNDEF = _Undef()

BETTER = "better"
WORSE = "worse"
EQUAL = "equal"
INCOMPARABLE = "incomparable"
UNDETERMINED = "undetermined"
RELATIONS = (BETTER, WORSE, EQUAL, INCOMPARABLE, UNDETERMINED)

PARETO = "pareto"
LEXICOGRAPHIC = "lexicographic"

DEFAULT_SCHEDULE = tuple(2**i for i in range(21))


def is_undef(value):
    return value is UNDEF


def _as_vector(score):
    if isinstance(score, (tuple, list)):
        return tuple(score)
    return (score,)


def life_mean(scores):
    """Per-criterion mean over the steps where the criterion is defined.

    A sequence of plain values gives a plain value back; a sequence of
    vectors gives a tuple.
    """
    scores = list(scores)
    if not scores:
        return UNDEF
    scalar = not isinstance(scores[0], (tuple, list))
    vectors = [_as_vector(s) for s in scores]
    arity = len(vectors[0])
    if any(len(v) != arity for v in vectors):
        raise InputError("score vectors differ in arity")
    means = []
    for c in range(arity):
        defined = [v[c] for v in vectors if v[c] is not UNDEF]
        means.append(math.fsum(defined) / len(defined) if defined else UNDEF)
    return means[0] if scalar else tuple(means)


def _compare_pair(a, b):
    if a is UNDEF and b is UNDEF:
        return EQUAL
    if a is UNDEF or b is UNDEF:
        return INCOMPARABLE
    if a > b:
        return BETTER
    if a < b:
        return WORSE
    return EQUAL


def compare_finite(v1, v2, mode=PARETO, priority=None):
    """Relation of score vector ``v1`` to ``v2``; larger values are better.

    Criteria where less is better (delays, casualties) should be scored as
    negative numbers.
    """
    v1, v2 = _as_vector(v1), _as_vector(v2)
    if len(v1) != len(v2):
        raise InputError(f"score vectors of arity {len(v1)} and {len(v2)}")
    if mode == PARETO:
        seen = set()
        for a, b in zip(v1, v2):
            r = _compare_pair(a, b)
            if r == INCOMPARABLE:
                return INCOMPARABLE
            seen.add(r)
        seen.discard(EQUAL)
        if not seen:
            return EQUAL
        return seen.pop() if len(seen) == 1 else INCOMPARABLE
    if mode == LEXICOGRAPHIC:
        order = range(len(v1)) if priority is None else priority
        for c in order:
            if not 0 <= c < len(v1):
                raise InputError(f"priority names criterion {c}, arity is {len(v1)}")
            r = _compare_pair(v1[c], v2[c])
            if r != EQUAL:
                return r
        return EQUAL
    raise InputError(f"unknown comparison mode {mode!r}")


@dataclass(frozen=True)
class LifeVerdict:
    relation: str
    witness: int | None = None

    def __post_init__(self):
        if self.relation not in RELATIONS:
            raise InputError(f"unknown relation {self.relation!r}")
        if self.witness is not None and self.relation not in (BETTER, WORSE, EQUAL):
            raise InputError(f"a {self.relation} verdict carries no witness")

    def __str__(self):
        return self.relation if self.witness is None else f"{self.relation},n={self.witness}"

    @property
    def at_least(self):
        """True when the first life was found at least as good as the second."""
        return self.relation in (BETTER, EQUAL)


def _score_matrix(scores, limit):
    """Values and definedness masks for at most ``limit`` steps."""
    rows = [_as_vector(s) for s in itertools.islice(iter(scores), limit)]
    if not rows:
        return np.zeros((0, 0)), np.zeros((0, 0), dtype=bool)
    arity = len(rows[0])
    if any(len(r) != arity for r in rows):
        raise InputError("score vectors differ in arity")
    mask = np.array([[v is not UNDEF for v in r] for r in rows], dtype=bool)
    values = np.array([[0.0 if v is UNDEF else float(v) for v in r] for r in rows])
    return values, mask


def prefix_means(scores, ks):
    """``life_mean(begin(scores, k))`` for each ``k``; beyond the end the whole life counts."""
    ks = list(ks)
    values, mask = _score_matrix(scores, max(ks) if ks else 0)
    n = len(values)
    if n == 0:
        return [UNDEF for _ in ks], 0
    sums = np.cumsum(values, axis=0)
    counts = np.cumsum(mask, axis=0)
    out = []
    for k in ks:
        if k == 0:
            out.append(tuple(UNDEF for _ in range(values.shape[1])))
            continue
        row = min(k, n) - 1
        out.append(tuple(float(sums[row, c] / counts[row, c]) if counts[row, c] else UNDEF
                         for c in range(values.shape[1])))
    return out, n


def compare_lives(scores1, scores2, mode=PARETO, schedule=DEFAULT_SCHEDULE, priority=None, min_tail=2):
    """Prefix rule: the relation between beginnings must settle by the end of ``schedule``.

    The relation of ``begin(L1, k)`` to ``begin(L2, k)`` is computed at every
    scheduled ``k``.  If it is the same at the last ``min_tail`` points, the
    verdict is that relation and the witness is the smallest ``n`` from which
    every scheduled ``k >= n`` agrees.  Otherwise the verdict is undetermined.
    Finite lives shorter than a scheduled ``k`` count in full there.
    """
    ks = sorted(set(int(k) for k in schedule))
    if not ks:
        raise InputError("empty horizon schedule")
    if ks[0] < 0:
        raise InputError("schedule values must be non-negative")
    if min_tail < 1:
        raise InputError("min_tail must be at least 1")
    means1, _ = prefix_means(scores1, ks)
    means2, _ = prefix_means(scores2, ks)
    relations = []
    for m1, m2 in zip(means1, means2):
        if m1 is UNDEF and m2 is UNDEF:
            relations.append(EQUAL)
        elif m1 is UNDEF or m2 is UNDEF:
            relations.append(INCOMPARABLE)
        else:
            relations.append(compare_finite(m1, m2, mode, priority))
    final = relations[-1]
    j = len(relations) - 1
    while j > 0 and relations[j - 1] == final:
        j -= 1
    if len(relations) - j < min(min_tail, len(relations)):
        return LifeVerdict(UNDETERMINED)
    if final == INCOMPARABLE:
        return LifeVerdict(INCOMPARABLE)
    witness = 0 if j == 0 else ks[j - 1] + 1
    return LifeVerdict(final, witness)


# --- score traces -----------------------------------------------------------


def _parse_value(token, line):
    token = token.strip()
    if token == "undef":
        return UNDEF
    try:
        value = float(token)
    except ValueError:
        raise ParseError(f"bad score {token!r}", line) from None
    if not math.isfinite(value):
        raise ParseError(f"score {token!r} is not finite", line)
    return value


def _is_header(tokens):
    for t in tokens:
        if t.strip() == "undef":
            continue
        try:
            float(t)
        except ValueError:
            return True
    return False


def parse_scores(text):
    """Score CSV: optional header row, then one row per step."""
    rows = []
    names = None
    arity = None
    for number, line in content_lines(text):
        tokens = line.split(",")
        if names is None and not rows and _is_header(tokens):
            names = tuple(t.strip() for t in tokens)
            arity = len(names)
            continue
        if arity is None:
            arity = len(tokens)
        if len(tokens) != arity:
            raise ParseError(f"expected {arity} columns, found {len(tokens)}", number)
        rows.append(tuple(_parse_value(t, number) for t in tokens))
    if names is None:
        names = tuple(f"c{i}" for i in range(arity or 0))
    return names, rows


def _format_value(value):
    return "undef" if value is UNDEF else repr(float(value))


def format_scores(rows, names=None):
    rows = [_as_vector(r) for r in rows]
    if names is None:
        names = tuple(f"c{i}" for i in range(len(rows[0]) if rows else 1))
    lines = [",".join(names)]
    lines.extend(",".join(_format_value(v) for v in r) for r in rows)
    return "\n".join(lines) + "\n"


def reward_scores(history, reward):
    """Score sequence of a life from an observation -> score-vector map."""
    missing = {s.observation for s in history.steps} - set(reward)
    if missing:
        raise InputError(f"reward map lacks observations {sorted(missing)}")
    return [reward[s.observation] for s in history.steps]
