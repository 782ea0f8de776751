import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eventmodels.bundled import daynight, phase_locked_pair, predictor, week
from eventmodels.compose import (
    CartesianModel,
    advance_composite,
    cartesian,
    component_oracles,
    format_composite,
    product_size,
    project,
    reachable_composite,
    simulate_composite,
)
from eventmodels.edm import EventDrivenModel, EventStream, Evaluation, VariablesModel, advance, simulate_edm
from eventmodels.errors import CapacityError, InputError

from oracles import brute_reachable


def cycle(n, event, name):
    states = tuple(f"{name}{i}" for i in range(n))
    relation = [(states[i], event, states[(i + 1) % n]) for i in range(n)]
    return EventDrivenModel(states, {event: "visible"}, frozenset(relation), name=name)


def mixed_stream(n, events, seed):
    rand = random.Random(seed)
    sets = []
    for _ in range(n):
        k = rand.randint(0, 2)
        sets.append(frozenset(rand.sample(events, k)))
    return EventStream.from_dense(sets, events)


# --- construction ------------------------------------------------------------------


def test_empty_product_is_an_error():
    with pytest.raises(InputError):
        cartesian([])


def test_composite_state_must_fit_components():
    with pytest.raises(InputError):
        CartesianModel((daynight(),), ("night", "extra"))
    with pytest.raises(InputError):
        CartesianModel((daynight(),), ("dusk",))


def test_single_component_is_isomorphic():
    model = daynight()
    cart = cartesian([model])
    assert reachable_composite(cart) == {(s,) for s in model.states}
    for s in model.states:
        for e in model.alphabet:
            assert advance_composite(cart, {e}, state=(s,)) == (advance(model, s, {e}),)


def test_week_times_daynight_size():
    cart = cartesian([week(), daynight()])
    assert product_size(cart) == 14
    assert cart.current == ("sun", "night")


def test_product_of_2_3_5():
    cart = cartesian([cycle(2, "a", "x"), cycle(3, "b", "y"), cycle(5, "c", "z")])
    assert product_size(cart) == 30
    assert len(reachable_composite(cart)) == 30


# --- advancing ------------------------------------------------------------------------


def test_empty_set_is_identity():
    cart = cartesian([week(), daynight(), predictor()])
    assert advance_composite(cart, frozenset()) == cart.current


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(["sun", "mon", "sat"]), st.sampled_from(["day", "night"]), st.sampled_from(["1", "2"]))
def test_empty_set_is_identity_everywhere(w, d, p):
    cart = cartesian([week(), daynight(), predictor()])
    assert advance_composite(cart, frozenset(), state=(w, d, p)) == (w, d, p)


def test_sunrise_moves_only_daynight():
    cart = cartesian([week(), daynight()])
    assert advance_composite(cart, {"sunrise"}) == ("sun", "day")


def test_shared_event_moves_both():
    left, right = phase_locked_pair()
    cart = cartesian([left, right])
    assert advance_composite(cart, {"tick"}) == ("p1", "q1")


def test_unknown_composite_event():
    with pytest.raises(InputError):
        advance_composite(cartesian([week()]), {"sunrise"})


# --- reachability ------------------------------------------------------------------------


def test_week_daynight_reaches_everything():
    cart = cartesian([week(), daynight()])
    reached = reachable_composite(cart)
    assert len(reached) == 14
    assert reached == brute_reachable(cart.components, cart.current)


def test_phase_locked_pair_reaches_half():
    cart = cartesian(phase_locked_pair())
    reached = reachable_composite(cart)
    assert reached == {("p0", "q0"), ("p1", "q1")}
    assert reached == brute_reachable(cart.components, cart.current)


def test_capacity_error_carries_partial_set():
    cart = cartesian([week(), daynight()])
    with pytest.raises(CapacityError) as info:
        reachable_composite(cart, bound=5)
    assert len(info.value.partial) == 5
    assert info.value.partial <= reachable_composite(cart)


STATES = ("p", "q", "r")


@st.composite
def small_models(draw, name):
    events = draw(st.sets(st.sampled_from(["x", "y", "z"]), min_size=1, max_size=2))
    triples = [(s, e, t) for s in STATES for e in sorted(events) for t in STATES]
    relation = draw(st.sets(st.sampled_from(triples), max_size=8))
    return EventDrivenModel(STATES, {e: "visible" for e in sorted(events)}, frozenset(relation), name=name)


@settings(max_examples=40, deadline=None)
@given(small_models("m1"), small_models("m2"))
def test_reachable_matches_brute_force_and_product_bound(m1, m2):
    cart = cartesian([m1, m2])
    reached = reachable_composite(cart)
    assert reached == brute_reachable([m1, m2], cart.current)
    assert len(reached) <= product_size(cart)


@pytest.mark.parametrize("sizes", [(2, 3), (4, 1, 3), (7, 2)])
def test_disjoint_cycles_fill_the_product(sizes):
    cart = cartesian([cycle(n, f"e{i}", f"c{i}") for i, n in enumerate(sizes)])
    assert len(reachable_composite(cart)) == product_size(cart)


# --- projection ---------------------------------------------------------------------------


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_projection_commutes_with_component_simulation(seed):
    models = [week(), daynight(), predictor()]
    cart = cartesian(models)
    events = ["midnight", "sunrise", "sunset", "a", "b"]
    stream = mixed_stream(1000, events, seed)
    oracles = component_oracles(seed, len(models))
    trajectory = simulate_composite(cart, stream, oracles)
    assert len(trajectory) == len(stream.ticks) + 1
    for i, model in enumerate(models):
        alone = simulate_edm(model, stream.restricted(model.alphabet), oracles[i])
        assert project(trajectory, stream, i, model.alphabet) == alone


def test_adding_a_component_keeps_earlier_randomness():
    stream = mixed_stream(500, ["a", "b", "midnight"], 3)
    two = simulate_composite(cartesian([predictor(), week()]), stream, component_oracles(9, 2))
    three = simulate_composite(cartesian([predictor(), week(), predictor()]), stream, component_oracles(9, 3))
    assert [s[:2] for s in three] == two


# --- printing -------------------------------------------------------------------------------


def test_format_composite():
    cart = cartesian([week(), daynight()])
    assert format_composite(cart) == "(week:sun,daynight:night)"


def test_format_composite_with_variables_and_duplicate_names():
    base = EventDrivenModel(("lo", "hi"), {"t": "visible"}, frozenset([("lo", "t", "hi")]), name="m")
    vm = VariablesModel(base, (("x", ("0", "1")), ("y", ("0", "1"))))
    cart = cartesian([vm, daynight().with_start("day")])
    assert format_composite(cart) == "(m:lo/x=0,y=0,daynight:day)"
    twins = cartesian([daynight(), daynight()])
    assert format_composite(twins) == "(daynight.0:night,daynight.1:night)"
    assert product_size(cart) == 16


def test_variables_component_advances_with_its_evaluation():
    base = EventDrivenModel(("lo", "hi"), {"t": "visible"}, frozenset([("lo", "t", "hi"), ("hi", "t", "lo")]), name="m")
    ev0, ev1 = Evaluation.of({"x": "0"}), Evaluation.of({"x": "1"})
    vm = VariablesModel(base, (("x", ("0", "1")),), {("lo", ev0, "t"): [("hi", ev1)]})
    cart = cartesian([vm, daynight()])
    assert advance_composite(cart, {"t", "sunrise"}) == (("hi", ev1), "day")
    assert len(reachable_composite(cart)) == 6
