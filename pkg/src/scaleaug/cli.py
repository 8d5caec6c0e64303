"""``scaleaug`` command line.

Exit codes: 0 success, 1 usage error, 2 data error, 3 evaluator error.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np
from PIL import Image

from .dataset import DatasetError, augment_dataset, load_dataset
from .evolution import (
    EvaluatorError,
    ExternalEvaluator,
    SearchAbortedError,
    SearchConfig,
    SurrogateEvaluator,
    run_search,
)
from .gaussian import (
    BLEND_DIRECTIONS,
    TRANSFORM_AT_CENTER,
    BoxGeometry,
    GaussianDomainError,
    GaussianMapParams,
    alpha_to_image,
    gaussian_map,
    numeric_area,
)
from .metric import (
    MetricDomainError,
    StatsSchemaError,
    UndefinedCorrelationError,
    parse_stats,
    pareto_scale_balance,
    pearson,
)
from .policy import (
    PolicyParseError,
    encode_policy,
    parse_policy,
    random_genome,
    search_space_cardinality,
    serialize_policy,
    searched_policy,
)

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_EVALUATOR = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _floats(text: str, n: int, what: str) -> list[float]:
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise UsageError(f"{what} must be {n} comma-separated numbers") from None
    if len(vals) != n:
        raise UsageError(f"{what} must be {n} comma-separated numbers")
    return vals


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as e:
        raise DatasetError(path, str(e)) from None


def cmd_apply(args) -> int:
    policy = parse_policy(_read(args.policy))
    index = load_dataset(args.annotations, args.images)
    report = augment_dataset(index, policy, args.seed, args.out, args.direction, args.workers)
    print(json.dumps(report, indent=2))
    return EXIT_OK


def cmd_search(args) -> int:
    config = SearchConfig.from_dict(json.loads(_read(args.config))) if args.config else SearchConfig()
    if args.evaluator_cmd:
        evaluator = ExternalEvaluator(args.evaluator_cmd, args.workdir, args.timeout)
    elif args.surrogate_target_seed is not None:
        evaluator = SurrogateEvaluator(random_genome(np.random.default_rng(args.surrogate_target_seed)))
    else:
        raise UsageError("give --evaluator-cmd or --surrogate-target-seed")
    try:
        result = run_search(config, evaluator, args.out)
    except SearchAbortedError as e:
        print(f"search aborted: {e}", file=sys.stderr)
        return EXIT_EVALUATOR
    doc = serialize_policy(result.best_policy)
    if args.best_policy:
        Path(args.best_policy).write_text(doc)
    print(json.dumps({
        "best_metric": result.best_metric.value,
        "best_genome": list(result.best_genome),
        "evaluations": len(result.history),
        "best_by_generation": result.best_by_generation(),
    }))
    return EXIT_OK


def cmd_metric(args) -> int:
    stats = parse_stats(_read(args.stats))
    m = pareto_scale_balance(stats, args.eps)
    print(json.dumps({"value": m.value, "std": m.std_component, "penalty": m.penalty_component,
                      "dropped": sorted(m.dropped_scales)}))
    return EXIT_OK


def read_pairs(path: str) -> tuple[list[float], list[float]]:
    """JSON ``{"xs": [...], "ys": [...]}`` or ``[[x, y], ...]``, else CSV rows ``x,y``."""
    text = _read(path)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError:
        doc = None
    if isinstance(doc, dict):
        return [float(v) for v in doc["xs"]], [float(v) for v in doc["ys"]]
    if isinstance(doc, list):
        return [float(p[0]) for p in doc], [float(p[1]) for p in doc]
    xs, ys = [], []
    for row in csv.reader(text.splitlines()):
        if not row or row[0].strip().startswith("#"):
            continue
        try:
            x, y = float(row[0]), float(row[1])
        except (ValueError, IndexError):
            if not xs:
                continue  # header
            raise DatasetError(path, f"bad row {row!r}") from None
        xs.append(x)
        ys.append(y)
    return xs, ys


def cmd_pearson(args) -> int:
    xs, ys = read_pairs(args.pairs)
    print(f"{pearson(xs, ys):.12g}")
    return EXIT_OK


def cmd_gaussmap(args) -> int:
    x, y, h, w = _floats(args.box, 4, "--box")
    H, W = _floats(args.image, 2, "--image")
    params = GaussianMapParams(BoxGeometry(x, y, h, w, int(H), int(W)), args.ratio)
    alpha = gaussian_map(params)
    Image.fromarray(alpha_to_image(alpha), mode="L").save(args.out)
    print(json.dumps({"sigma_x": params.sigma_x, "sigma_y": params.sigma_y,
                      "area": numeric_area(alpha), "target_area": args.ratio * h * w}))
    return EXIT_OK


def cmd_policy_validate(args) -> int:
    policy = parse_policy(_read(args.file))
    print(json.dumps({"valid": True, "genome": list(encode_policy(policy)),
                      "p_original": round(policy.p_original, 12)}))
    return EXIT_OK


def cmd_policy_searched(args) -> int:
    sys.stdout.write(serialize_policy(searched_policy()))
    return EXIT_OK


def cmd_space_size(args) -> int:
    n = search_space_cardinality()
    print(n)
    if args.verbose:
        print(f"{n:.4e}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="scaleaug", description="Scale-aware augmentation policies for object detection.")
    p.add_argument("-v", "--log-level", default="WARNING")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    a = sub.add_parser("apply", help="augment a COCO-style dataset with a policy")
    a.add_argument("--policy", required=True)
    a.add_argument("--annotations", required=True)
    a.add_argument("--images", required=True)
    a.add_argument("--out", required=True)
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--direction", choices=BLEND_DIRECTIONS, default=TRANSFORM_AT_CENTER)
    a.add_argument("--workers", type=int, default=1)
    a.set_defaults(func=cmd_apply)

    s = sub.add_parser("search", help="evolutionary policy search")
    s.add_argument("--config", help="JSON file with SearchConfig fields")
    s.add_argument("--evaluator-cmd", help="command template with {policy} and {stats} placeholders")
    s.add_argument("--surrogate-target-seed", type=int, help="use the Hamming surrogate instead")
    s.add_argument("--timeout", type=float)
    s.add_argument("--workdir")
    s.add_argument("--out", help="line-delimited JSON history log")
    s.add_argument("--best-policy", help="write the best policy document here")
    s.set_defaults(func=cmd_search)

    m = sub.add_parser("metric", help="Pareto Scale Balance of a stats document")
    m.add_argument("--stats", required=True)
    m.add_argument("--eps", type=float, default=1e-4)
    m.set_defaults(func=cmd_metric)

    r = sub.add_parser("pearson", help="Pearson coefficient of paired values")
    r.add_argument("--pairs", required=True)
    r.set_defaults(func=cmd_pearson)

    g = sub.add_parser("gaussmap", help="render a box's Gaussian blend map as a PNG")
    g.add_argument("--box", required=True, help="x_c,y_c,h,w")
    g.add_argument("--image", required=True, help="H,W")
    g.add_argument("--ratio", type=float, required=True)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gaussmap)

    pol = sub.add_parser("policy", help="policy document tools")
    polsub = pol.add_subparsers(dest="policy_command", required=True, parser_class=_Parser)
    v = polsub.add_parser("validate")
    v.add_argument("file")
    v.set_defaults(func=cmd_policy_validate)
    t = polsub.add_parser("searched", help="print the published searched policy")
    t.set_defaults(func=cmd_policy_searched)

    z = sub.add_parser("space-size", help="exact number of policies in the search space")
    z.add_argument("--verbose", action="store_true")
    z.set_defaults(func=cmd_space_size)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=args.log_level.upper(), format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as e:
        print(f"scaleaug: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (PolicyParseError, StatsSchemaError, DatasetError, GaussianDomainError,
            MetricDomainError, UndefinedCorrelationError, ValueError) as e:
        print(f"scaleaug: {e}", file=sys.stderr)
        return EXIT_DATA
    except EvaluatorError as e:
        print(f"scaleaug: evaluator error: {e}", file=sys.stderr)
        return EXIT_EVALUATOR


if __name__ == "__main__":
    sys.exit(main())
