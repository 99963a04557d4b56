import argparse
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Optional

import numpy as np
from tqdm import tqdm

from src.brain.actionlang import decompose, parse_command, render_command, round_trip_check, segment_command
from src.brain.preprocess import merge_actions, select_keyframes, uniform_keyframes
from src.brain.supervision import compute_weights, distribution_from_counts, uniform_weights
from src.brain.tokens import CompressedTokens, TokenGrid, stc_compress, stc_decompress
from src.brain.training_tuples import build_navigation_tuples
from src.connectors.dataset_adapter import import_annotations
from src.db.episode_store import load_episodes, save_episodes
from src.db.synthetic import GeometryOptions, generate_synthetic_split
from src.errors import NavError
from src.eval.agents import make_policy, run_agent
from src.eval.metrics import FailureKind
from src.eval.report import ReportWriter, classify_records, failure_table, read_episode_records
from src.eval.runner import EvalOptions, evaluate_split
from src.eval.stats import merge_sweep, merged_token_counts, preprocess_stats
from src.flight.kinematics import ActionKind, get_action_space
from src.utils.config import RunConfig
from src.version import __version__

logger = logging.getLogger("cli")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with status 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _write_jsonl(records, path: Optional[str]):
    lines = "".join(json.dumps(record, ensure_ascii=False) + "\n" for record in records)
    if path:
        with open(path, "w", encoding="utf-8", newline="") as f:
            f.write(lines)
    else:
        sys.stdout.write(lines)


def _require(value, flag: str):
    if not value:
        raise UsageError(f"{flag} is required (or set the matching environment variable)")
    return value


def _load(config: RunConfig):
    result = load_episodes(_require(config.episodes, "--episodes"))
    for line_number, message in result.diagnostics:
        print(f"{config.episodes}:{line_number}: {message}", file=sys.stderr)
    return result.episodes


def _read_counts(path: str) -> Dict[str, float]:
    """JSONL {"action", "count"} records or a whitespace `token count` table."""
    counts = {}
    with open(path, "r", encoding="utf-8") as f:
        for line_number, line in enumerate(f, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if line.startswith("{"):
                record = json.loads(line)
                action, count = record["action"], record["count"]
            else:
                parts = line.split()
                if len(parts) != 2:
                    raise ValueError(f"{path}:{line_number}: expected `token count`, got {line!r}")
                action, count = parts
            counts[str(action)] = counts.get(str(action), 0.0) + float(count)
    return counts


# --- Subcommands ---

def preprocess(args, config: RunConfig) -> int:
    episodes = _load(config)
    cap = 1 if args.no_merge else config.merge_cap

    def convert(episode):
        space = get_action_space(episode.action_space)
        segments = merge_actions(episode.gt_actions, cap)
        total_frames = len(episode.gt_actions) + 1
        if args.no_keyframes:
            keyframes = list(range(total_frames))
        elif args.uniform_keyframes:
            keyframes = uniform_keyframes(total_frames, args.uniform_keyframes)
        else:
            keyframes = select_keyframes(segments, total_frames)
        return {
            "episode_id": episode.id,
            "segments": [seg.to_dict() for seg in segments],
            "keyframes": keyframes,
            "commands": [render_command(segment_command(seg, space), space) for seg in segments],
        }

    with ThreadPoolExecutor(max_workers=config.workers) as pool:
        records = list(tqdm(pool.map(convert, episodes), total=len(episodes), desc="preprocess",
                            disable=not args.progress))
    _write_jsonl(records, config.output)
    return 0


def weights(args, config: RunConfig) -> int:
    if args.dist:
        counts = _read_counts(args.dist)
    else:
        counts = merged_token_counts(_load(config), config.merge_cap)
    dist = distribution_from_counts(counts)
    table = uniform_weights(dist) if args.no_reweight else compute_weights(dist)

    rows = [{"action": action, "p": dist[action], "weight": table[action]} for action in dist]
    _write_jsonl(rows, config.output)
    # the aligned table goes to stdout only when the records went to a file
    stream = sys.stdout if config.output else sys.stderr
    width = max(len("action"), *(len(row["action"]) for row in rows))
    print(f"{'action'.ljust(width)}  {'p':>9}  {'weight':>9}", file=stream)
    for row in rows:
        print(f"{row['action'].ljust(width)}  {row['p']:9.5f}  {row['weight']:9.5f}", file=stream)
    return 0


def _policy(args, config: RunConfig, episodes):
    distribution = None
    if args.policy == "action":
        if args.distribution:
            counts = _read_counts(args.distribution)
        else:
            counts = {}
            for episode in episodes:
                for kind in episode.gt_actions:
                    counts[kind.value] = counts.get(kind.value, 0) + 1
        distribution = {ActionKind.from_name(k): v for k, v in distribution_from_counts(counts).items()}
    return make_policy(args.policy, config.seed, distribution, config.success_radius)


def simulate(args, config: RunConfig) -> int:
    episodes = _load(config)
    policy = _policy(args, config, episodes)
    runs = [run_agent(episode, policy, config.max_steps).to_dict()
            for episode in tqdm(episodes, desc="simulate", disable=not args.progress)]
    _write_jsonl(runs, config.output)
    return 0


def evaluate(args, config: RunConfig) -> int:
    episodes = _load(config)
    policy = _policy(args, config, episodes)
    options = EvalOptions(
        max_steps=config.max_steps,
        success_radius=config.success_radius,
        drift_threshold=config.drift_threshold,
        workers=config.workers,
        progress=args.progress,
    )
    report = evaluate_split(episodes, policy, options)

    echo = config.provenance()
    if args.distribution:
        echo["distribution"] = args.distribution
    writer = ReportWriter(report, echo)
    if args.csv:
        writer.write(args.csv, 'csv')
    if args.table:
        writer.write(args.table, 'text')
    if config.output:
        writer.write(config.output, 'jsonl')
        sys.stdout.write(writer.export('text'))
    else:
        sys.stdout.write(writer.export('jsonl'))
        sys.stderr.write(writer.export('text'))
    return 0 if report.aggregate is not None else 1


def stats(args, config: RunConfig) -> int:
    episodes = _load(config)
    if args.sweep:
        caps = [int(c) for c in args.sweep.split(",") if c.strip()]
        result = {"sweep": merge_sweep(episodes, caps)}
    else:
        result = preprocess_stats(episodes, config.merge_cap)
    text = json.dumps(result, indent=2) + "\n"
    if config.output:
        with open(config.output, "w", encoding="utf-8") as f:
            f.write(text)
    else:
        sys.stdout.write(text)
    return 0


def classify_failures(args, config: RunConfig) -> int:
    labelled = classify_records(read_episode_records(args.input), config.drift_threshold)
    if config.output:
        _write_jsonl(labelled, config.output)
    table = failure_table(labelled)
    total = sum(table.values())
    print(f"{'failure':<18}  {'count':>5}")
    for kind in FailureKind:
        print(f"{kind.value:<18}  {table[kind.value]:>5}")
    print(f"{'total':<18}  {total:>5}")
    return 0


def gen_synthetic(args, config: RunConfig) -> int:
    options = GeometryOptions(
        min_actions=args.min_actions,
        max_actions=args.max_actions,
        min_goal_distance=args.min_goal_distance,
        obstacles=args.obstacles,
    )
    episodes = generate_synthetic_split(args.count, get_action_space(config.action_space), config.seed, options)
    save_episodes(episodes, _require(config.output, "--output"))
    return 0


def stc(args, config: RunConfig) -> int:
    data = np.load(args.input)
    if args.decompress:
        grid = stc_decompress(CompressedTokens(np.asarray(data, dtype=np.float64), args.grid),
                              args.height, args.width)
        result = grid.data
    else:
        result = stc_compress(TokenGrid(args.height, args.width, data), args.grid).data
    np.save(_require(config.output, "--output"), result.astype(np.float32))
    print(f"{tuple(data.shape)} -> {tuple(result.shape)}")
    return 0


def parse(args, config: RunConfig) -> int:
    space = get_action_space(config.action_space)
    if args.check:
        checked, failures = round_trip_check(space, config.merge_cap)
        print(f"{space.name}: {checked - len(failures)}/{checked} commands parsed back")
        for text in failures:
            print(f"  failed: {text}")
        return 0 if not failures else 1

    texts = args.text
    if args.input:
        with open(args.input, "r", encoding="utf-8") as f:
            texts = texts + [line.rstrip("\n") for line in f if line.strip()]
    if not texts:
        raise UsageError("give TEXT arguments, --input or --check")

    status = 0
    for text in texts:
        try:
            cmd = parse_command(text, space)
            record = {"text": text, **cmd.to_dict(), "primitives": len(decompose(cmd, space)),
                      "canonical": render_command(cmd, space)}
        except NavError as e:
            record = {"text": text, "error": f"{type(e).__name__}: {e}"}
            status = 1
        print(json.dumps(record, ensure_ascii=False))
    return status


def tuples(args, config: RunConfig) -> int:
    records = []
    for episode in _load(config):
        records.extend(t.to_dict() for t in build_navigation_tuples(episode, config.merge_cap, config.history))
    _write_jsonl(records, config.output)
    return 0


def import_dataset(args, config: RunConfig) -> int:
    result = import_annotations(args.input, config.action_space, args.scalar_first)
    for index, message in result.diagnostics:
        print(f"{args.input}:{index}: {message}", file=sys.stderr)
    save_episodes(result.episodes, _require(config.output, "--output"))
    return 0


COMMANDS = {
    "preprocess": preprocess,
    "weights": weights,
    "simulate": simulate,
    "evaluate": evaluate,
    "stats": stats,
    "classify-failures": classify_failures,
    "gen-synthetic": gen_synthetic,
    "stc": stc,
    "parse": parse,
    "tuples": tuples,
    "import": import_dataset,
}


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--verbose", action="store_true", help="Log progress at INFO level")
    common.add_argument("--progress", action="store_true", help="Show a progress bar on stderr")
    common.add_argument("--action-space", choices=["aerialvln", "openfly"], help="Action space (default aerialvln)")
    common.add_argument("--episodes", help="Episode JSONL file (env AVLN_EPISODES)")
    common.add_argument("--output", help="Output path (env AVLN_OUTPUT)")
    common.add_argument("--seed", type=int, help="Global seed (default 0)")
    common.add_argument("--merge-cap", type=int, help="Maximum primitives per merged segment (default 3)")
    common.add_argument("--history-policy", choices=["current", "fifo", "uniform"],
                        help="History representation (default uniform)")
    common.add_argument("--history-budget", type=int, help="Frames kept by fifo/uniform history (default 8)")
    common.add_argument("--success-radius", type=float, help="Success radius in units (default 20)")
    common.add_argument("--drift-threshold", type=float, help="nDTW below which a failure is drift (default 0.3)")
    common.add_argument("--lambda-sp", type=float, help="Spatial perception loss weight (default 1.0)")
    common.add_argument("--lambda-tr", type=float, help="Trajectory reasoning loss weight (default 0.5)")
    common.add_argument("--max-steps", type=int, help="Step cap per episode (default 500)")
    common.add_argument("--workers", type=int, help="Worker threads for evaluate/preprocess (default 1)")

    parser = _Parser(prog="avln", description="Aerial VLN preprocessing and evaluation toolkit")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", help="Available commands")

    p = subparsers.add_parser("preprocess", parents=[common], help="Merge actions and select keyframes")
    p.add_argument("--no-merge", action="store_true", help="Disable action merging (cap 1)")
    keyframe_mode = p.add_mutually_exclusive_group()
    keyframe_mode.add_argument("--no-keyframes", action="store_true", help="Keep every frame")
    keyframe_mode.add_argument("--uniform-keyframes", type=int, metavar="K",
                               help="Use K uniformly spaced frames instead of segment boundaries")

    p = subparsers.add_parser("weights", parents=[common], help="Inverse-frequency label weights")
    p.add_argument("--dist", "--counts", dest="dist",
                   help="Counts file (JSONL or `token count` table); default: merged tokens of --episodes")
    p.add_argument("--no-reweight", action="store_true", help="Emit all-ones weights")

    for name, help_text in (("simulate", "Run an agent and write action logs"),
                            ("evaluate", "Run an agent and score the split")):
        p = subparsers.add_parser(name, parents=[common], help=help_text)
        p.add_argument("--policy", choices=["random", "action", "oracle", "replay"], default="random",
                       help="Agent policy")
        p.add_argument("--distribution", help="Counts file for the action policy (default: episode frequencies)")
        if name == "evaluate":
            p.add_argument("--csv", help="Also write per-episode scores as CSV")
            p.add_argument("--table", help="Also write the text table to this path")

    p = subparsers.add_parser("stats", parents=[common], help="Before/after merging statistics")
    p.add_argument("--sweep", help="Comma-separated merge caps, e.g. 1,2,3,6")

    p = subparsers.add_parser("classify-failures", parents=[common], help="Failure taxonomy of a report")
    p.add_argument("--input", required=True, help="Report JSONL or per-episode score records")

    p = subparsers.add_parser("gen-synthetic", parents=[common], help="Generate a synthetic episode split")
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--min-actions", type=int, default=20)
    p.add_argument("--max-actions", type=int, default=80)
    p.add_argument("--min-goal-distance", type=float, default=0.0)
    p.add_argument("--obstacles", type=int, default=0, help="Obstacle boxes per episode")

    p = subparsers.add_parser("stc", parents=[common], help="Spatial token compression of a .npy token file")
    p.add_argument("--input", required=True, help="Token matrix .npy")
    p.add_argument("--height", type=int, required=True)
    p.add_argument("--width", type=int, required=True)
    p.add_argument("--grid", type=int, default=2)
    p.add_argument("--decompress", action="store_true", help="Invert a compressed matrix")

    p = subparsers.add_parser("parse", parents=[common], help="Parse action text")
    p.add_argument("text", nargs="*", help="Action text to parse")
    p.add_argument("--input", help="File with one action text per line")
    p.add_argument("--check", action="store_true", help="Render and re-parse every command")

    subparsers.add_parser("tuples", parents=[common], help="Step-wise navigation training tuples")

    p = subparsers.add_parser("import", parents=[common], help="Import AerialVLN/OpenFly annotations")
    p.add_argument("--input", required=True, help="Annotation JSON or JSONL")
    p.add_argument("--scalar-first", action="store_true", help="Quaternions are [w, x, y, z]")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    if not args.command:
        parser.print_help()
        return 1

    if args.verbose:
        logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(message)s', datefmt='%Y-%m-%d %H:%M:%S')
    else:
        logging.basicConfig(level=logging.ERROR)

    try:
        config = RunConfig.from_sources(vars(args))
        print(json.dumps({"version": __version__, "command": args.command, "config": config.to_dict()}),
              file=sys.stderr)
        return COMMANDS[args.command](args, config)
    except UsageError as e:
        parser.print_usage(sys.stderr)
        print(f"error: {e}", file=sys.stderr)
        return 1
    except (NavError, ValueError, KeyError) as e:
        print(f"Error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"I/O error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
