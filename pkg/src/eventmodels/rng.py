"""Seed derivation.

Every random draw in the package comes from a named sub-stream of one master
seed, so swapping the policy never perturbs oracle draws and vice versa.
Oracle draws are keyed by their full argument tuple, which makes an oracle a
pure function of (seed, arguments).
"""

import hashlib
import random

STREAMS = ("world-gen", "policy", "alpha", "beta", "chi", "creature")


def derive_seed(seed, *names):
    digest = hashlib.blake2b(repr((seed,) + names).encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big")


def substream(seed, name):
    return random.Random(derive_seed(seed, name))


def keyed_uniform(seed, *key):
    """Uniform float in [0, 1) determined entirely by ``(seed, key)``."""
    return derive_seed(seed, *key) / 2.0**64


def keyed_choice(seed, items, *key):
    if not items:
        raise IndexError("choice from empty sequence")
    return items[int(keyed_uniform(seed, *key) * len(items))]


def keyed_weighted_choice(seed, items, weights, *key):
    total = float(sum(weights))
    if total <= 0:
        raise ValueError("weights must have a positive sum")
    u = keyed_uniform(seed, *key) * total
    acc = 0.0
    for item, w in zip(items, weights):
        acc += w
        if u < acc:
            return item
    return items[-1]
