"""Batch command line: preprocess, entropy, learn, sample, query, benchmark, export-dot.

Exit codes: 0 success, 1 usage or query-parse error, 2 data or I/O error,
3 query with no accepted samples.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path

from greedybn.dataset import (
    PreprocessConfig,
    entropy_difference,
    entropy_report,
    parse_table,
    preprocess,
)
from greedybn.exceptions import DataError, GreedyBNError, NoAcceptedSamples, QueryParseError
from greedybn.inference import (
    QUERY_GRAMMAR,
    HoeffdingSpec,
    estimate_marginal,
    forward_sample,
    hoeffding_sample_size,
    parse_query,
    rejection_query,
)
from greedybn.model import BayesNet, fit_cpts, moralize
from greedybn.scoring import ScoreSpec
from greedybn.search import DP_MAX_VARS, SearchParams, exact_search_dp, learn_structure

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NO_ACCEPT = 0, 1, 2, 3
DEFAULT_SEED = 0


class UsageError(GreedyBNError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass
class RunConfig:
    """Validated settings for one invocation, built from parsed flags."""

    command: str
    preprocess: PreprocessConfig | None = None
    score: ScoreSpec | None = None
    search: SearchParams | None = None
    hoeffding: HoeffdingSpec | None = None
    seed: int = DEFAULT_SEED
    alpha: float = 1.0

    @classmethod
    def from_args(cls, args) -> "RunConfig":
        cfg = cls(args.command, seed=getattr(args, "seed", DEFAULT_SEED))
        try:
            if cfg.seed < 0:
                raise ValueError("--seed must be >= 0")
            if hasattr(args, "missing_codes"):
                cfg.preprocess = PreprocessConfig(
                    missing_codes=_int_list(args.missing_codes),
                    row_drop_threshold=args.row_drop_threshold,
                    column_drop_fraction=args.column_drop_fraction,
                    seed=cfg.seed,
                )
            if hasattr(args, "score"):
                cfg.score = ScoreSpec(args.score, ess=args.ess)
            if hasattr(args, "potential_threshold"):
                cfg.search = SearchParams(
                    potential_threshold=args.potential_threshold,
                    initial_grade=args.grade,
                    parent_fidelity=not args.no_parent_fidelity,
                    max_parents=args.max_parents,
                    score_spec=cfg.score,
                    refill=not args.no_refill,
                )
            if hasattr(args, "alpha"):
                if args.alpha < 0:
                    raise ValueError("--alpha must be >= 0")
                cfg.alpha = args.alpha
            if hasattr(args, "epsilon"):
                cfg.hoeffding = HoeffdingSpec(args.epsilon, args.delta, args.hoeffding_mode, args.p_event)
            if getattr(args, "samples", None) is not None and args.samples < 1:
                raise ValueError("--samples must be >= 1")
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        return cfg


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise ValueError(f"expected comma-separated integers, got {text!r}") from None


def _read_text(path) -> str:
    try:
        with open(path, newline="") as fh:
            return fh.read()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from None


def _write_atomic(path, text: str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_all(outputs: dict):
    """Write several files only after all their contents exist."""
    for path, text in outputs.items():
        _write_atomic(path, text)


def _load_model(path) -> BayesNet:
    return BayesNet.from_json(_read_text(path))


def cmd_preprocess(args, cfg: RunConfig) -> int:
    table = parse_table(_read_text(args.input), cfg.preprocess)
    extra = []
    for item in args.add_column or []:
        name, _, value = item.partition("=")
        try:
            extra.append((name, int(value)))
        except ValueError:
            raise UsageError(f"--add-column expects NAME=INT, got {item!r}") from None
    cleaned, summary = preprocess(table, cfg.preprocess, extra)
    outputs = {args.output: cleaned.to_csv()}
    if args.summary:
        outputs[args.summary] = json.dumps(vars(summary), indent=2) + "\n"
    _write_all(outputs)
    sys.stdout.write(summary.to_text())
    return EXIT_OK


def cmd_entropy(args, cfg: RunConfig) -> int:
    report = entropy_report(parse_table(_read_text(args.input), cfg.preprocess))
    if args.compare:
        other = entropy_report(parse_table(_read_text(args.compare), cfg.preprocess))
        diff = entropy_difference(report, other)
        width = max(len(n) for n in report.column_names)
        lines = [f"{'column':<{width}}  {'first':>10}  {'second':>10}  {'difference':>10}"]
        for name, a, b, d in zip(report.column_names, report.per_column_entropy,
                                 other.per_column_entropy, diff):
            lines.append(f"{name:<{width}}  {a:10.6f}  {b:10.6f}  {d:10.6f}")
        sys.stdout.write("\n".join(lines) + "\n")
        if args.output:
            rows = ["column,entropy_bits_first,entropy_bits_second,difference"]
            rows += [f"{n},{a:.6f},{b:.6f},{d:.6f}" for n, a, b, d in zip(
                report.column_names, report.per_column_entropy, other.per_column_entropy, diff)]
            _write_atomic(args.output, "\n".join(rows) + "\n")
        return EXIT_OK
    sys.stdout.write(report.to_text())
    if args.output:
        _write_atomic(args.output, report.to_csv())
    return EXIT_OK


def cmd_learn(args, cfg: RunConfig) -> int:
    table = parse_table(_read_text(args.input), cfg.preprocess)
    if not table.is_complete():
        raise DataError(f"{args.input} has missing cells; run `greedybn preprocess` first")
    selection, trace = learn_structure(table, cfg.search, exact=args.exact, max_vars=args.dp_cap)
    net = fit_cpts(table, selection, cfg.alpha)
    out = Path(args.out_dir)
    _write_all({
        out / "model.json": net.to_json(),
        out / "network.dot": net.to_dot(),
        out / "markov.dot": moralize(net).to_dot(),
        out / "trace.json": trace.to_json(),
        out / "trace.log": trace.to_text(),
    })
    print(f"method={trace.method} score={cfg.score.label()} edges={selection.n_edges}")
    print(f"pre_repair_score={trace.pre_repair_score:.6f}")
    print(f"post_repair_score={trace.post_repair_score:.6f}")
    if trace.refill_score is not None:
        print(f"refill_score={trace.refill_score:.6f}")
    print(f"final_score={selection.total_score:.6f}")
    print(f"wrote {out}/model.json, network.dot, markov.dot, trace.json, trace.log")
    return EXIT_OK


def _budget(cfg: RunConfig, args) -> tuple[int, str]:
    if args.samples is not None:
        return args.samples, "fixed (--samples)"
    spec = cfg.hoeffding
    return hoeffding_sample_size(spec), _describe(spec)


def _describe(spec: HoeffdingSpec) -> str:
    text = f"{spec.mode} (epsilon={spec.epsilon:g}, delta={spec.delta:g}"
    if spec.p_event is not None:
        text += f", p_event={spec.p_event:.6g}"
    return text + ")"


def cmd_sample(args, cfg: RunConfig) -> int:
    net = _load_model(args.model)
    if cfg.hoeffding.mode == "paper_conditional" and cfg.hoeffding.p_event is None and args.samples is None:
        raise UsageError("paper-conditional mode needs --p-event (or pass --samples)")
    m, how = _budget(cfg, args)
    batch = forward_sample(net, m, cfg.seed)
    rows = [",".join(net.node_names)]
    if net.states is not None:
        decoded = [[net.states[j][v] for j, v in enumerate(row)] for row in batch.samples.tolist()]
    else:
        decoded = batch.samples.tolist()
    rows += [",".join(map(str, r)) for r in decoded]
    _write_atomic(args.output, "\n".join(rows) + "\n")
    print(f"samples={m} budget={how} seed={cfg.seed}")
    return EXIT_OK


def cmd_query(args, cfg: RunConfig) -> int:
    net = _load_model(args.model)
    try:
        query = parse_query(args.query, net)
    except QueryParseError as exc:
        sys.stderr.write(f"error: {exc}\ngrammar: {QUERY_GRAMMAR}\n")
        return EXIT_USAGE
    spec = cfg.hoeffding
    note = ""
    if args.samples is None and spec.mode != "paper_marginal" and spec.p_event is None:
        if query.evidence:
            # pilot run sized by the marginal budget to estimate P(evidence)
            pilot_m = hoeffding_sample_size(HoeffdingSpec(spec.epsilon, spec.delta, "standard"))
            pilot = forward_sample(net, pilot_m, cfg.seed + 1)
            p_event = max(estimate_marginal(pilot, query.evidence), 1.0 / pilot_m)
            note = f" p_event estimated from {pilot_m} pilot samples"
        else:
            p_event = 1.0
        spec = HoeffdingSpec(spec.epsilon, spec.delta, spec.mode, p_event)
        cfg.hoeffding = spec
    m, how = _budget(cfg, args)
    try:
        estimate, accepted = rejection_query(net, query, m, cfg.seed)
    except NoAcceptedSamples as exc:
        sys.stderr.write(f"no accepted samples: {exc}\n")
        print(f"estimate=undefined accepted=0 samples={m} budget={how}{note}")
        return EXIT_NO_ACCEPT
    print(f"estimate={estimate:.6f} accepted={accepted} samples={m} budget={how}{note}")
    return EXIT_OK


def run_benchmark(paths, search: SearchParams, dp_cap: int, preprocess_config=None) -> list[dict]:
    """Greedy vs exact DP on each table; one result row per input."""
    rows = []
    for path in paths:
        table = parse_table(_read_text(path), preprocess_config)
        if not table.is_complete():
            raise DataError(f"{path} has missing cells; run `greedybn preprocess` first")
        t0 = time.perf_counter()
        greedy, _ = learn_structure(table, search)
        greedy_time = time.perf_counter() - t0
        row = {
            "dataset": str(path),
            "n_vars": table.n_cols,
            "n_rows": table.n_rows,
            "score": search.score_spec.label(),
            "greedy_score": greedy.total_score,
            "greedy_time_s": greedy_time,
            "exact_score": None,
            "exact_time_s": None,
            "gap_pct": None,
        }
        if table.n_cols <= dp_cap:
            t0 = time.perf_counter()
            exact = exact_search_dp(table, search.score_spec, search.max_parents, dp_cap)
            row["exact_time_s"] = time.perf_counter() - t0
            row["exact_score"] = exact.total_score
            row["gap_pct"] = 100.0 * (exact.total_score - greedy.total_score) / abs(exact.total_score)
        rows.append(row)
    return rows


def _fmt(value, spec):
    return "n/a" if value is None else format(value, spec)


def format_benchmark(rows: list[dict]) -> str:
    name_w = max([len("dataset")] + [len(Path(r["dataset"]).name) for r in rows])
    head = (f"{'dataset':<{name_w}}  {'vars':>4}  {'exact score':>14}  {'exact time':>10}  "
            f"{'greedy score':>14}  {'greedy time':>11}  {'gap %':>8}")
    lines = [head]
    for r in rows:
        lines.append(
            f"{Path(r['dataset']).name:<{name_w}}  {r['n_vars']:>4}  {_fmt(r['exact_score'], '14.3f'):>14}  "
            f"{_fmt(r['exact_time_s'], '9.2f') + ('s' if r['exact_time_s'] is not None else ''):>10}  "
            f"{r['greedy_score']:14.3f}  {r['greedy_time_s']:10.2f}s  {_fmt(r['gap_pct'], '8.3f'):>8}"
        )
    gaps = sorted(r["gap_pct"] for r in rows if r["gap_pct"] is not None)
    if gaps:
        within = sum(g <= 1.0 for g in gaps)
        median = gaps[len(gaps) // 2] if len(gaps) % 2 else 0.5 * (gaps[len(gaps) // 2 - 1] + gaps[len(gaps) // 2])
        lines.append(f"gap: min={gaps[0]:.3f}% median={median:.3f}% max={gaps[-1]:.3f}% "
                     f"within_1pct={within}/{len(gaps)}")
    return "\n".join(lines) + "\n"


def cmd_benchmark(args, cfg: RunConfig) -> int:
    rows = run_benchmark(args.inputs, cfg.search, args.dp_cap, cfg.preprocess)
    outputs = {}
    if args.report:
        outputs[args.report] = json.dumps(rows, indent=2) + "\n"
    if args.csv:
        keys = list(rows[0]) if rows else []
        lines = [",".join(keys)] + [",".join("" if r[k] is None else str(r[k]) for k in keys) for r in rows]
        outputs[args.csv] = "\n".join(lines) + "\n"
    _write_all(outputs)
    sys.stdout.write(format_benchmark(rows))
    return EXIT_OK


def cmd_export_dot(args, cfg: RunConfig) -> int:
    net = _load_model(args.model)
    text = moralize(net).to_dot() if args.markov else net.to_dot()
    if args.output:
        _write_atomic(args.output, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _add_preprocess_flags(p):
    p.add_argument("--missing-codes", default="-1,99", help="comma-separated raw codes meaning missing")
    p.add_argument("--row-drop-threshold", type=int, default=6)
    p.add_argument("--column-drop-fraction", type=float, default=0.95)


def _add_score_flags(p):
    p.add_argument("--score", choices=["aic", "bic", "bdeu"], default="bic")
    p.add_argument("--ess", type=float, default=1.0, help="equivalent sample size for bdeu")


def _add_search_flags(p):
    _add_score_flags(p)
    p.add_argument("--potential-threshold", type=float, default=0.05)
    p.add_argument("--grade", type=int, default=2)
    p.add_argument("--no-parent-fidelity", action="store_true")
    p.add_argument("--max-parents", type=int, default=None)
    p.add_argument("--no-refill", action="store_true", help="skip the post-repair refill pass")
    p.add_argument("--dp-cap", type=int, default=DP_MAX_VARS, help="largest variable count for exact search")


def _add_sampler_flags(p):
    p.add_argument("--epsilon", type=float, default=0.015)
    p.add_argument("--delta", type=float, default=0.015)
    p.add_argument("--hoeffding-mode", choices=["paper-marginal", "paper-conditional", "standard"],
                   default="standard")
    p.add_argument("--p-event", type=float, default=None, help="probability of the evidence, if known")
    p.add_argument("--samples", type=int, default=None, help="override the Hoeffding budget")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="greedybn", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("preprocess", help="drop noisy rows/sparse columns, impute missing cells")
    p.add_argument("input")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--summary", help="also write the summary as JSON")
    p.add_argument("--add-column", action="append", metavar="NAME=VALUE",
                   help="append a constant column (repeatable)")
    _add_preprocess_flags(p)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("entropy", help="per-column entropy in bits")
    p.add_argument("input")
    p.add_argument("-o", "--output", help="CSV report path")
    p.add_argument("--compare", help="second table; report the element-wise difference")
    _add_preprocess_flags(p)
    p.set_defaults(func=cmd_entropy)

    p = sub.add_parser("learn", help="learn a structure and fit CPTs")
    p.add_argument("input")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--exact", action="store_true", help="exact dynamic-programming search")
    p.add_argument("--alpha", type=float, default=1.0, help="CPT pseudo-count")
    _add_search_flags(p)
    _add_preprocess_flags(p)
    p.set_defaults(func=cmd_learn)

    p = sub.add_parser("sample", help="forward-sample a model to CSV")
    p.add_argument("model")
    p.add_argument("-o", "--output", required=True)
    _add_sampler_flags(p)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("query", help="estimate P(target | evidence) by rejection sampling")
    p.add_argument("model")
    p.add_argument("query", help=QUERY_GRAMMAR)
    _add_sampler_flags(p)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("benchmark", help="greedy vs exact scores, gaps and timings")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--report", help="JSON report path")
    p.add_argument("--csv", help="CSV report path")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    _add_search_flags(p)
    _add_preprocess_flags(p)
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("export-dot", help="write a model as Graphviz DOT")
    p.add_argument("model")
    p.add_argument("-o", "--output")
    p.add_argument("--markov", action="store_true", help="export the moral graph instead")
    p.set_defaults(func=cmd_export_dot)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = RunConfig.from_args(args)
        return args.func(args, cfg)
    except UsageError as exc:
        sys.stderr.write(f"greedybn {args.command}: error: {exc}\n")
        return EXIT_USAGE
    except (DataError, GreedyBNError, ValueError, OSError) as exc:
        sys.stderr.write(f"greedybn {args.command}: error: {exc}\n")
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
