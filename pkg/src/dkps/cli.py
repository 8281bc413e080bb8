"""Command-line entry point: ``dkps {mds,discrepancy,synth,experiment,align}``.

Exit status is 0 on success, 1 on bad input or usage, 2 on internal errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

from . import io
from .alignment import aligned_error, procrustes
from .discrepancy import table_discrepancy
from .experiments import run_regime, summarize
from .rawstress import SolverSettings, mds
from .synth import exact_limit_matrix, sample_collection

log = logging.getLogger("dkps")

EXIT_OK, EXIT_INPUT, EXIT_INTERNAL = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _stdout_path(path):
    return sys.stdout if path in (None, "-") else path


def _is_jsonl(path: str) -> bool:
    return Path(path).suffix.lower() in (".jsonl", ".json", ".ndjson")


def cmd_mds(args) -> int:
    if _is_jsonl(args.input):
        target = table_discrepancy(io.read_embeddings(args.input))
    else:
        target = io.read_dissimilarity(args.input)
    settings = SolverSettings(args.dim, args.max_iters, args.rel_tol, args.restarts, args.seed or 0)
    config = mds(target, settings)
    io.write_configuration(config, _stdout_path(args.output))
    meta = config.meta
    print(
        f"stress={io.fmt(config.stress)} start={meta['start']} "
        f"iterations={meta['iterations']} converged={meta['converged']}",
        file=sys.stderr,
    )
    return EXIT_OK


def cmd_discrepancy(args) -> int:
    io.write_dissimilarity(table_discrepancy(io.read_embeddings(args.input)), _stdout_path(args.output))
    return EXIT_OK


def cmd_synth(args) -> int:
    spec, r = io.load_collection_spec(args.config, seed=args.seed)
    coll = spec.build(r)
    table = sample_collection(coll)
    io.write_embeddings(table, _stdout_path(args.output))
    if args.latents:
        io.write_latents(coll.latents, coll.model_ids, args.latents)
    if args.limit:
        io.write_dissimilarity(exact_limit_matrix(coll), args.limit)
    return EXIT_OK


def cmd_experiment(args) -> int:
    config = io.load_regime_config(args.config, seed=args.seed)
    if args.timing:
        config = replace(config, timing=True)
    results = run_regime(config, workers=args.workers)
    io.write_results(results, _stdout_path(args.output))
    means = summarize(results, "avg_l2_err", "mean")
    for key, val in summarize(results, "avg_l2_err").items():
        n, m, r = key
        print(f"n={n} m={m} r={r} median_avg_l2={val:.6g} mean_avg_l2={means[key]:.6g}", file=sys.stderr)
    return EXIT_OK


def cmd_align(args) -> int:
    source = io.read_configuration(args.source)
    target = io.read_configuration(args.target)
    if source.points.shape != target.points.shape:
        raise io.InputError(f"configurations differ in shape: {source.points.shape} vs {target.points.shape}")
    if source.labels != target.labels:
        raise io.InputError("configurations list labels in a different order")
    with_translation = not args.no_translation
    fit = procrustes(source, target, with_translation)
    report = {
        "rotation": fit.rotation.tolist(),
        "translation": fit.translation.tolist(),
        "residual": fit.residual,
        "avg_l2": aligned_error(source, target, "avg_l2", with_translation),
        "two_to_infinity": aligned_error(source, target, "two_to_infinity", with_translation),
        "with_translation": with_translation,
    }
    text = json.dumps(report, indent=2) + "\n"
    if args.output in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(args.output).write_text(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dkps", description="Perspective-space embeddings of generative-model collections.")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("mds", help="raw-stress MDS of a dissimilarity CSV or embeddings JSONL")
    p.add_argument("input", help="dissimilarity CSV, or embeddings .jsonl")
    p.add_argument("-d", "--dim", type=int, default=2)
    p.add_argument("--restarts", type=int, default=4)
    p.add_argument("--max-iters", type=int, default=2000)
    p.add_argument("--rel-tol", type=float, default=1e-10)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("-o", "--output", help="configuration CSV (default stdout)")
    p.set_defaults(func=cmd_mds)

    p = sub.add_parser("discrepancy", help="discrepancy matrix CSV from embeddings JSONL")
    p.add_argument("input")
    p.add_argument("-o", "--output", help="dissimilarity CSV (default stdout)")
    p.set_defaults(func=cmd_discrepancy)

    p = sub.add_parser("synth", help="sample a synthetic collection to embeddings JSONL")
    p.add_argument("config", help="JSON with n, m, r, s, latent, gamma, seed")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("-o", "--output", help="embeddings JSONL (default stdout)")
    p.add_argument("--latents", help="also write the latent vectors as CSV")
    p.add_argument("--limit", help="also write the limiting dissimilarity matrix as CSV")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("experiment", help="run a bootstrap consistency regime")
    p.add_argument("config", help="JSON regime config")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--timing", action="store_true", help="record wall times (output no longer reproducible)")
    p.add_argument("-o", "--output", help="results CSV (default stdout)")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("align", help="Procrustes-align one configuration CSV onto another")
    p.add_argument("source")
    p.add_argument("target")
    p.add_argument("--no-translation", action="store_true")
    p.add_argument("-o", "--output", help="JSON report (default stdout)")
    p.set_defaults(func=cmd_align)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(name)s: %(levelname)s: %(message)s")
    try:
        return args.func(args)
    except BrokenPipeError:
        # reader went away (e.g. `| head`); not an error
        sys.stdout = open(os.devnull, "w")
        return EXIT_OK
    except (io.InputError, ValueError, KeyError, OSError) as exc:
        print(f"dkps: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # noqa: BLE001
        log.exception("internal error: %s", exc)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
