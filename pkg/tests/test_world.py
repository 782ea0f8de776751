import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eventmodels.bundled import branching_world, nine_state_world, w1
from eventmodels.errors import GenerationError, InputError, ParseError
from eventmodels.history import full_from_trace
from eventmodels.world import (
    ABSOLUTE_BEGINNING,
    NATURAL_DEATH,
    ORDINARY,
    SUDDEN_DEATH,
    ConstantPredictor,
    Life,
    OracleBundle,
    PerfectWorld,
    ProbabilityInterval,
    RandomWorld,
    RepeatLastPolicy,
    RunningMeanPredictor,
    ScriptedPolicy,
    UniformPolicy,
    classify_state,
    creature_stream,
    format_path,
    format_world,
    generate_world,
    parse_path,
    parse_policy,
    parse_world,
    run_life,
)

from oracles import window_means


def random_world(seed, n_states=9, n_actions=3, extra=12, density=0.2):
    """A generated perfect world with ``extra`` additional arrows, making it nondeterministic."""
    base = generate_world(n_states, n_actions, 4, density, seed)
    rand = random.Random(seed)
    arrows = set(base.arrows())
    for _ in range(extra):
        arrows.add((rand.choice(base.states), rand.choice(base.actions), rand.choice(base.states)))
    return RandomWorld(base.states, base.actions, base.observations, frozenset(arrows), base.view,
                       base.incorrect, base.current, OracleBundle(seed=seed))


# --- step ---------------------------------------------------------------------


def test_w1_step_moves_and_observes():
    life = Life(w1())
    outcome = life.step("a")
    assert outcome.moved and outcome.observation == "black"
    assert life.state == "2"


def test_w1_variant_rejects_incorrect_move():
    life = Life(w1(incorrect={"2": {"a"}}).with_current("2"))
    outcome = life.step("a")
    assert not outcome.moved
    assert life.state == "2"
    assert life.pending_bad == {"a"}
    assert life.history().steps == ()


def test_unknown_action_is_input_error():
    with pytest.raises(InputError):
        Life(w1()).step("z")


def test_random_world_replay_is_identical():
    world = random_world(42)
    rand = random.Random(0)
    actions = [rand.choice(world.actions) for _ in range(100)]

    def replay():
        life = Life(world)
        return [life.step(a) for a in actions], life.path()

    assert replay() == replay()


@given(st.lists(st.sampled_from(["a", "b"]), max_size=40))
def test_rejections_leave_state_alone(actions):
    world = w1(incorrect={"1": {"b"}, "2": {"a"}})
    life = Life(world)
    for a in actions:
        before = life.state
        if not life.step(a).moved:
            assert life.state == before
    assert len(life.path()) == len(life.history().steps)


# --- classification -------------------------------------------------------------


@pytest.mark.parametrize("state, expected", [
    ("9", ABSOLUTE_BEGINNING),
    ("4", SUDDEN_DEATH),
    ("1", ORDINARY),  # reachable and has a usable self-loop
    ("7", ORDINARY),
    ("6", ORDINARY),
])
def test_classify_branching_world(state, expected):
    assert classify_state(branching_world(), state) == expected


def test_classify_sudden_death_wins_over_absolute_beginning():
    world = PerfectWorld(("x", "y"), ("go",), ("o",), {("x", "go"): "x", ("y", "go"): "x"},
                         {"x": "o", "y": "o"}, {"y": {"go"}}, "y")
    assert classify_state(world, "y") == SUDDEN_DEATH


def test_classify_unknown_state():
    with pytest.raises(InputError):
        classify_state(w1(), "7")


def test_only_unusable_inbound_arrows_make_an_absolute_beginning():
    # 2 is entered only by an arrow whose action is incorrect at its source
    world = PerfectWorld(("1", "2"), ("a", "b"), ("o",),
                         {("1", "a"): "2", ("1", "b"): "1", ("2", "a"): "1", ("2", "b"): "1"},
                         {"1": "o", "2": "o"}, {"1": {"a"}}, "1")
    assert classify_state(world, "2") == ABSOLUTE_BEGINNING


# --- lives ----------------------------------------------------------------------


def test_horizon_zero_is_natural_death_with_empty_history():
    record = run_life(w1(), UniformPolicy(), 0, seed=1)
    assert record.history.steps == ()
    assert len(record.path) == 0 and record.path.start == "1"
    assert record.cause == NATURAL_DEATH


def test_life_starting_in_sudden_death():
    world = w1(incorrect={"1": {"a", "b"}})
    record = run_life(world, UniformPolicy(), 50, seed=1)
    assert record.history.steps == ()
    assert record.cause == SUDDEN_DEATH


def test_w1_uniform_thousand_steps():
    record = run_life(w1(), UniformPolicy(), 1000, seed=7)
    observations = record.history.observations
    assert len(observations) == 1000
    assert set(observations) <= {"white", "black"}
    assert observations.count("white") + observations.count("black") == 1000
    # every observation is the view of the state the path says we reached
    assert observations == [w1().view[s] for s in record.path.visited]


def test_bad_moves_are_recorded_in_order_of_trying():
    world = w1(incorrect={"1": {"a"}})
    record = run_life(world, ScriptedPolicy(["a", "b"]), 3, seed=0)
    assert [s.bad for s in record.history.steps] == [{"a"}] * 3
    assert record.history.actions == ["b"] * 3


def test_policy_that_never_finds_a_move_is_an_error():
    world = w1(incorrect={"1": {"a"}})
    with pytest.raises(InputError):
        run_life(world, ScriptedPolicy(["a"]), 1, seed=0)


@pytest.mark.parametrize("spec, kind", [
    ("uniform", UniformPolicy),
    ("scripted:a,b", ScriptedPolicy),
    ("repeat", RepeatLastPolicy),
    ("repeat:0.3", RepeatLastPolicy),
])
def test_parse_policy(spec, kind):
    assert isinstance(parse_policy(spec), kind)


@pytest.mark.parametrize("spec", ["", "greedy", "scripted:", "uniform:3"])
def test_parse_policy_rejects(spec):
    with pytest.raises(InputError):
        parse_policy(spec)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000), horizon=st.integers(0, 120),
       policy=st.sampled_from(["uniform", "repeat:0.2", "scripted:a0,a1,a2"]))
def test_replay_determinism_and_conservation(seed, horizon, policy):
    world = random_world(seed % 50)
    first = run_life(world, parse_policy(policy), horizon, seed)
    second = run_life(world, parse_policy(policy), horizon, seed)
    assert first == second
    assert len(first.path) == len(first.history.steps)
    if first.cause == NATURAL_DEATH:
        assert len(first.path) == horizon
    full_from_trace(first.history, world, first.path)


def test_policy_choice_does_not_move_the_oracle_draws():
    world = random_world(3, density=0.0)
    uniform = run_life(world, UniformPolicy(), 200, seed=11)
    replayed = run_life(world, ScriptedPolicy(uniform.history.actions), 200, seed=11)
    assert replayed == uniform
    other_seed = run_life(world, ScriptedPolicy(uniform.history.actions), 200, seed=12)
    assert other_seed.path == uniform.path


# --- probability intervals and the creature ---------------------------------------


@pytest.mark.parametrize("low, high", [(0.5, 0.4), (-0.1, 0.5), (0.2, 1.5)])
def test_interval_invariants(low, high):
    with pytest.raises(InputError):
        ProbabilityInterval(low, high)


def test_creature_rejects_inverted_dice():
    with pytest.raises(InputError):
        creature_stream(0.8, 0.2, RunningMeanPredictor(), 10)


def test_creature_length_zero():
    assert creature_stream(0.0, 1.0, RunningMeanPredictor(), 0, seed=1) == []


@pytest.mark.parametrize("p", [0.1, 0.3, 0.75])
def test_creature_with_equal_dice_is_iid(p):
    bits = creature_stream(p, p, RunningMeanPredictor(), 10_000, seed=4)
    assert abs(sum(bits) / len(bits) - p) <= 0.05


def test_creature_against_constant_predictor_swings():
    bits = creature_stream(0.0, 1.0, ConstantPredictor(0.4, 0.6), 10_000, seed=2)
    means = window_means(bits, 100)
    assert max(abs(a - b) for a, b in zip(means, means[1:])) >= 0.8


def test_creature_is_deterministic_per_seed():
    a = creature_stream(0.2, 0.8, RunningMeanPredictor(), 2000, seed=9)
    b = creature_stream(0.2, 0.8, RunningMeanPredictor(), 2000, seed=9)
    assert a == b


# --- generation and files -------------------------------------------------------------


def test_generate_trivial_world():
    world = generate_world(1, 1, 1, 0.0, seed=3)
    assert world.transition == {("s0", "a0"): "s0"}
    assert world.view == {"s0": "o0"}
    assert world.incorrect == {"s0": frozenset()}


def test_generate_nine_state_world_is_total_and_alive():
    world = nine_state_world()
    assert len(world.transition) == 27
    assert all(classify_state(world, s) != SUDDEN_DEATH for s in world.states)


def test_generation_gives_up_on_infeasible_density():
    with pytest.raises(GenerationError):
        generate_world(3, 1, 1, 0.999, seed=0, max_retries=5)


def test_partial_transition_is_rejected():
    with pytest.raises(InputError):
        PerfectWorld(("1",), ("a", "b"), ("o",), {("1", "a"): "1"}, {"1": "o"}, {}, "1")


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10**6), n=st.integers(1, 6), a=st.integers(1, 3), v=st.integers(1, 3),
       density=st.sampled_from([0.0, 0.2, 0.5]))
def test_world_file_round_trip(seed, n, a, v, density):
    world = generate_world(n, a, v, density, seed)
    text = format_world(world)
    again = parse_world(text)
    assert again == world
    assert format_world(again) == text


def test_random_world_file_round_trip():
    text = format_world(branching_world())
    assert format_world(parse_world(text)) == text


@pytest.mark.parametrize("text", [
    "states 1\n",
    "# perfect-world\nstates 1\nactions a\nobservations o\n",
    "# perfect-world\nstates 1\nactions a\nobservations o\ncurrent 1\ntransition 1 a 1\nview 1 o\nincorrect 1 a\n",
    "# perfect-world\nstates 1\nactions a\nobservations o\ncurrent 1\narrow 1 a 1\nview 1 o\nincorrect 1 {}\n",
])
def test_parse_world_errors(text):
    with pytest.raises(ParseError):
        parse_world(text)


def test_path_file_round_trip():
    record = run_life(random_world(5), UniformPolicy(), 40, seed=2)
    text = format_path(record.path, record.cause)
    assert parse_path(text) == record.path
    assert format_path(parse_path(text), record.cause) == text
