"""Command-line entry point.

Exit codes: 0 success, 2 bad input or unparsable file, 3 capacity exceeded,
4 invisible event without a chi transcript, 5 world generation failed.
"""

import argparse
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import bundled
from . import rng as _rng
from .compose import cartesian, format_composite, product_size, reachable_composite
from .edm import (
    SequencingOracle,
    VariablesModel,
    flatten,
    parse_event_definitions,
    parse_model,
    parse_transcript,
    project_events,
)
from .errors import EventModelError, InputError
from .evaluation import LEXICOGRAPHIC, PARETO, compare_lives, parse_scores
from .history import format_history, parse_history
from .inference import (
    AGENT_SIDE,
    DEFAULT_MIN_SUPPORT,
    DEFAULT_THRESHOLD,
    WORLD_SIDE,
    exhaustiveness_test,
    format_findings_csv,
    format_summary,
    infer,
)
from .textio import content_lines
from .world import format_path, format_world, generate_world, parse_path, parse_policy, parse_world, run_life

log = logging.getLogger(__name__)

WORLD_FILE = "world.txt"
LOG_FILE = "life.log"
PATH_FILE = "path.truth"
FINDINGS_FILE = "findings.csv"
SUMMARY_FILE = "summary.txt"
COMPOSE_FILE = "compose.txt"
VERDICT_FILE = "verdict.txt"


def _write(directory, name, text):
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    with open(directory / name, "w", newline="\n") as fh:
        fh.write(text)
    return directory / name


def _read(path):
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None


def _load_model(path):
    model = parse_model(_read(path))
    if isinstance(model, VariablesModel):
        model = flatten(model)
    return model


# --- commands -------------------------------------------------------------------


def cmd_generate(args):
    if min(args.states, args.actions, args.observations) < 1:
        raise InputError("state, action and observation counts must be at least 1")
    if not 0.0 <= args.density < 1.0:
        raise InputError("incorrect density must lie in [0, 1)")
    world = generate_world(args.states, args.actions, args.observations, args.density, args.seed,
                           allow_sudden_death=args.allow_sudden_death)
    text = format_world(world)
    if args.output_directory:
        _write(args.output_directory, WORLD_FILE, text)
    else:
        sys.stdout.write(text)
    return 0


def _one_life(world_text, policy_spec, horizon, seed):
    world = parse_world(world_text, seed)
    record = run_life(world, parse_policy(policy_spec), horizon, seed)
    return format_history(record.history), format_path(record.path, record.cause), record.cause


def cmd_run(args):
    world_text = _read(args.world)
    parse_world(world_text, args.seed)
    parse_policy(args.policy)
    if args.horizon < 0:
        raise InputError("horizon must be non-negative")
    if args.lives < 1 or args.jobs < 1:
        raise InputError("--lives and --jobs must be at least 1")
    if args.lives == 1:
        seeds = [args.seed]
        names = [(LOG_FILE, PATH_FILE)]
    else:
        seeds = [_rng.derive_seed(args.seed, "life", i) for i in range(args.lives)]
        names = [(f"life-{i:04d}.log", f"path-{i:04d}.truth") for i in range(args.lives)]
    jobs = [(world_text, args.policy, args.horizon, s) for s in seeds]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_one_life, *zip(*jobs)))
    else:
        results = [_one_life(*job) for job in jobs]
    for (log_name, path_name), (log_text, path_text, cause) in zip(names, results):
        _write(args.output_directory, log_name, log_text)
        _write(args.output_directory, path_name, path_text)
        log.info("%s: %s", log_name, cause)
    return 0


def run_inference(log_text, model, events_text, truth_text=None, transcript_text=None, window=2,
                  min_support=DEFAULT_MIN_SUPPORT, threshold=DEFAULT_THRESHOLD, lag=1, significance=0.05,
                  seed=0, baseline="global"):
    """Shared by ``infer`` and ``experiment``: returns (findings csv, summary text)."""
    history = parse_history(log_text)
    definitions = parse_event_definitions(events_text)
    transcript = parse_transcript(transcript_text) if transcript_text is not None else None
    stream = project_events(history, definitions, transcript)
    missing = stream.events - model.alphabet
    if missing:
        raise InputError(f"model {model.name!r} does not know events {sorted(missing)}")
    n = len(history.steps)
    mode = AGENT_SIDE
    truth_line = "ground-truth none"
    if truth_text is not None:
        path = parse_path(truth_text)
        if len(path) != n:
            raise InputError(f"ground-truth path has {len(path)} moves, log has {n} steps")
        mode = WORLD_SIDE
        truth_line = f"ground-truth path with {len(path)} moves"
    if window < 0 or min_support < 1 or threshold <= 0 or lag < 1 or not 0 < significance < 1:
        raise InputError("inference parameters out of range")
    report = infer(model, stream, n, mode, window, min_support, threshold, SequencingOracle(seed), baseline)
    summary = format_summary(report, model.name) + truth_line + "\n"
    if report.states is not None:
        result = exhaustiveness_test(model, report.states, stream, lag, significance)
        summary += f"exhaustiveness {result}\n"
    else:
        summary += "exhaustiveness not-tested (agent-side)\n"
    return format_findings_csv(report.findings), summary


def cmd_infer(args):
    findings, summary = run_inference(
        _read(args.log), _load_model(args.model), _read(args.events),
        truth_text=_read(args.truth) if args.truth else None,
        transcript_text=_read(args.transcript) if args.transcript else None,
        window=args.window, min_support=args.min_support, threshold=args.threshold,
        lag=args.lag, significance=args.significance, seed=args.seed, baseline=args.baseline,
    )
    _write(args.output_directory, FINDINGS_FILE, findings)
    _write(args.output_directory, SUMMARY_FILE, summary)
    sys.stdout.write(summary)
    return 0


def compose_report(models, bound=None):
    cart = cartesian(models)
    lines = ["components " + " ".join(f"{m.name}({len(m.states)})" for m in models),
             f"product-size {product_size(cart)}",
             f"start {format_composite(cart)}"]
    if len(models) == 1:
        lines.append("isomorphic to component " + models[0].name)
    reachable = reachable_composite(cart, bound=bound)
    lines.append(f"reachable {len(reachable)}")
    order = [{s: i for i, s in enumerate(m.states)} for m in models]
    for state in sorted(reachable, key=lambda st: tuple(o[s] for o, s in zip(order, st))):
        lines.append("state " + format_composite(cart, state))
    return "\n".join(lines) + "\n"


def cmd_compose(args):
    report = compose_report([_load_model(p) for p in args.models], args.bound)
    if args.output_directory:
        _write(args.output_directory, COMPOSE_FILE, report)
    sys.stdout.write(report)
    return 0


def _parse_ints(text, what):
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise InputError(f"{what} must be comma-separated integers") from None


def cmd_compare(args):
    names1, rows1 = parse_scores(_read(args.first))
    names2, rows2 = parse_scores(_read(args.second))
    if len(names1) != len(names2):
        raise InputError(f"score files have {len(names1)} and {len(names2)} criteria")
    priority = _parse_ints(args.priority, "--priority") if args.priority else None
    kwargs = {"priority": priority, "mode": args.mode}
    if args.schedule:
        kwargs["schedule"] = _parse_ints(args.schedule, "--schedule")
    verdict = str(compare_lives(rows1, rows2, **kwargs))
    if args.output_directory:
        _write(args.output_directory, VERDICT_FILE, verdict + "\n")
    print(verdict)
    return 0


def cmd_examples(args):
    for name in bundled.write_bundle(args.output_directory, steps=args.steps, seed=args.seed):
        print(name)
    return 0


# --- experiment config ----------------------------------------------------------------

CONFIG_DEFAULTS = {
    "seed": "0", "policy": "uniform", "horizon": "1000", "window": "2",
    "min_support": str(DEFAULT_MIN_SUPPORT), "threshold": str(DEFAULT_THRESHOLD),
    "lag": "1", "significance": "0.05", "output_directory": "out",
}


def parse_config(text, base=Path(".")):
    """``key = value`` lines; relative file names are taken from the config's folder."""
    config = dict(CONFIG_DEFAULTS)
    for number, line in content_lines(text):
        key, sep, value = line.partition("=")
        if not sep:
            raise InputError(f"config line {number}: expected key = value")
        config[key.strip()] = value.strip()
    known = set(CONFIG_DEFAULTS) | {"world", "generate", "events", "model"}
    unknown = set(config) - known
    if unknown:
        raise InputError(f"unknown config keys {sorted(unknown)}")
    if ("world" in config) == ("generate" in config):
        raise InputError("config needs exactly one of 'world' or 'generate'")
    for key in ("events", "model"):
        if key not in config:
            raise InputError(f"config lacks {key!r}")
    for key in ("world", "events", "model"):
        if key in config:
            path = Path(config[key])
            path = path if path.is_absolute() else base / path
            if not path.is_file():
                raise InputError(f"config {key} file {path} does not exist")
            config[key] = path
    try:
        for key in ("seed", "horizon", "window", "min_support", "lag"):
            config[key] = int(config[key])
        for key in ("threshold", "significance"):
            config[key] = float(config[key])
    except ValueError as exc:
        raise InputError(f"bad number in config: {exc}") from None
    if config["horizon"] < 0:
        raise InputError("horizon must be non-negative")
    if config["window"] < 0 or config["min_support"] < 1 or config["lag"] < 1:
        raise InputError("window must be >= 0, min_support and lag >= 1")
    if config["threshold"] <= 0 or not 0 < config["significance"] < 1:
        raise InputError("threshold must be > 0 and significance in (0, 1)")
    out = Path(config["output_directory"])
    config["output_directory"] = out if out.is_absolute() else base / out
    return config


def cmd_experiment(args):
    """Generate or load a world, live one life, and infer against the model."""
    config = parse_config(_read(args.config), Path(args.config).parent)
    seed = config["seed"]
    out = config["output_directory"]
    if "generate" in config:
        parts = config["generate"].split(",")
        if len(parts) != 4:
            raise InputError("generate = states,actions,observations,density")
        world_text = format_world(generate_world(int(parts[0]), int(parts[1]), int(parts[2]),
                                                 float(parts[3]), seed))
    else:
        world_text = _read(config["world"])
    _write(out, WORLD_FILE, world_text)
    log_text, path_text, _ = _one_life(world_text, config["policy"], config["horizon"], seed)
    _write(out, LOG_FILE, log_text)
    _write(out, PATH_FILE, path_text)
    findings, summary = run_inference(
        log_text, _load_model(config["model"]), _read(config["events"]), truth_text=path_text,
        window=config["window"], min_support=config["min_support"], threshold=config["threshold"],
        lag=config["lag"], significance=config["significance"], seed=seed,
    )
    _write(out, FINDINGS_FILE, findings)
    _write(out, SUMMARY_FILE, summary)
    sys.stdout.write(summary)
    return 0


# --- argument parsing ------------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(prog="eventmodels", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="random perfect world")
    p.add_argument("--states", type=int, required=True)
    p.add_argument("--actions", type=int, required=True)
    p.add_argument("--observations", type=int, required=True)
    p.add_argument("--density", type=float, default=0.0, help="probability that a move is incorrect")
    p.add_argument("--allow-sudden-death", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output-directory", help=f"write {WORLD_FILE} here instead of stdout")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("run", help="live one or more lives in a world")
    p.add_argument("world")
    p.add_argument("--policy", default="uniform", help="uniform | scripted:a,b | repeat[:epsilon]")
    p.add_argument("--horizon", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lives", type=int, default=1)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("-o", "--output-directory", default=".")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("infer", help="look for the trace of a model in a life")
    p.add_argument("log")
    p.add_argument("model")
    p.add_argument("events")
    p.add_argument("--truth", help="ground-truth path file; switches to world-side mode")
    p.add_argument("--transcript", help="chi transcript for invisible or semi-visible events")
    p.add_argument("--window", type=int, default=2)
    p.add_argument("--min-support", type=int, default=DEFAULT_MIN_SUPPORT)
    p.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    p.add_argument("--lag", type=int, default=1)
    p.add_argument("--significance", type=float, default=0.05)
    p.add_argument("--baseline", choices=("global", "uniform"), default="global")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output-directory", default=".")
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("compose", help="Cartesian product of models")
    p.add_argument("models", nargs="+")
    p.add_argument("--bound", type=int)
    p.add_argument("-o", "--output-directory")
    p.set_defaults(func=cmd_compose)

    p = sub.add_parser("compare", help="compare two score traces")
    p.add_argument("first")
    p.add_argument("second")
    p.add_argument("--mode", choices=(PARETO, LEXICOGRAPHIC), default=PARETO)
    p.add_argument("--priority", help="criterion indices, most important first")
    p.add_argument("--schedule", help="comma-separated prefix lengths (default 1,2,4,...,2^20)")
    p.add_argument("-o", "--output-directory")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("examples", help="write the bundled worlds, models and logs")
    p.add_argument("-o", "--output-directory", default="examples-out")
    p.add_argument("--steps", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_examples)

    p = sub.add_parser("experiment", help="run a key = value experiment config")
    p.add_argument("config")
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except EventModelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
