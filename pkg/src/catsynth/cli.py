"""Command line interface.

Exit codes: 0 success, 2 input/config error, 3 numeric/model error,
4 inconsistent evidence.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Sequence

from catsynth import __version__
from catsynth.baseline import fit_correlated
from catsynth.core import BayesNet, Dag, read_json, write_json
from catsynth.csvio import export_csv, ingest_csv, load_schema, write_histograms
from catsynth.errors import CatsynthError, InputError
from catsynth.evaluation import DEFAULT_GATE_ALPHA, MethodScore, evaluate_pair, rank_methods
from catsynth.fixture import EDGES, SCHEMA, fixture_dag, make_fixture
from catsynth.inference import DIAGNOSTIC, PREDICTIVE, Query, evidence_shift_report, resolve_evidence
from catsynth.pipeline import (
    MethodSpec,
    PipelineConfig,
    evaluation_document,
    fit_method,
    load_model,
    render_markdown,
    report_document,
    run_pipeline,
    sample_model,
)
from catsynth.rng import derive_seed, generator

log = logging.getLogger("catsynth")


def _emit(doc: dict, out: str | None) -> None:
    if out:
        write_json(out, doc)
    else:
        json.dump(doc, sys.stdout, indent=2)
        sys.stdout.write("\n")


def _read_dag(path: str | None) -> Dag | None:
    return Dag.from_dict(read_json(path)) if path else None


def cmd_fixture(args: argparse.Namespace) -> int:
    out = Path(args.out)
    table, model = make_fixture(args.seed, args.rows)
    export_csv(table, out / "real.csv")
    write_json(out / "schema.json", SCHEMA.to_dict())
    write_json(out / "dag.json", fixture_dag().to_dict())
    write_json(out / "truth_model.json", model.to_dict())
    config = {
        "dataset": "real.csv",
        "schema": "schema.json",
        "dag": "dag.json",
        "edges": [list(e) for e in EDGES],
        "methods": [
            {"id": "bn"},
            {"id": "independent", "epsilon": 10},
            {"id": "correlated", "epsilon": 5, "max_parents": 2},
            {"id": "copula"},
        ],
        "seed": args.seed,
        "output_dir": "run",
    }
    write_json(out / "config.json", config)
    print(f"wrote {args.rows} records and model files to {out}")
    return 0


def _method_from_args(args: argparse.Namespace) -> MethodSpec:
    params = {}
    if args.epsilon is not None:
        params["epsilon"] = args.epsilon
    if args.max_parents is not None:
        params["max_parents"] = args.max_parents
    if args.alpha is not None:
        params["alpha"] = args.alpha
    return MethodSpec(args.method, params)


def cmd_fit(args: argparse.Namespace) -> int:
    spec = _method_from_args(args)
    if spec.id == "ctgan":
        raise InputError("method 'ctgan' is out of scope and cannot be fitted")
    schema = load_schema(args.schema) if args.schema else None
    _, data = ingest_csv(args.data, schema)
    dag = _read_dag(args.dag)
    if spec.id == "correlated" and dag is not None:
        model = fit_correlated(data, dag, spec.budget(), generator(derive_seed(args.seed, "noise")))
    else:
        model = fit_method(spec, data, dag, args.seed)
    write_json(args.out, model.to_dict())
    print(f"wrote {spec.label} model to {args.out}")
    return 0


def cmd_sample(args: argparse.Namespace) -> int:
    model = load_model(args.model)
    table = sample_model(model, args.rows, args.seed, args.workers)
    export_csv(table, args.out)
    print(f"wrote {table.n_rows} records to {args.out}")
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    schema_doc = load_schema(args.schema) if args.schema else None
    schema, real = ingest_csv(args.real, schema_doc)
    _, synth = ingest_csv(args.synth, schema)
    edges = [tuple(e.split(">", 1)) for e in args.edge] if args.edge else []
    dag = _read_dag(args.dag)
    if not edges and dag is not None:
        edges = list(dag.edges)
    report = evaluate_pair(real, synth, edges)
    doc = evaluation_document(args.method, args.method, "-", report)
    _emit(doc, args.out)
    if args.histograms:
        write_histograms(report.histograms, args.histograms)
    return 0


def cmd_rank(args: argparse.Namespace) -> int:
    scores = []
    for path in args.evaluations:
        doc = read_json(path)
        if doc.get("kind") != "evaluation":
            raise InputError(f"{path}: not an evaluation document")
        scores.append(MethodScore.from_dict(doc["score"]))
    ranked = rank_methods(scores, args.alpha)
    doc = report_document(ranked, {}, "", args.alpha)
    if args.out:
        write_json(args.out, doc)
    sys.stdout.write(render_markdown(ranked, {}, args.alpha))
    return 0


def cmd_run(args: argparse.Namespace) -> int:
    config = PipelineConfig.load(args.config)
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.out is not None:
        changes["output_dir"] = Path(args.out)
    if args.workers is not None:
        changes["workers"] = args.workers
    if args.rows is not None:
        changes["n_rows"] = args.rows
    if args.alpha is not None:
        changes["gate_alpha"] = args.alpha
    if changes:
        config = config.replace(**changes)
    manifest = run_pipeline(config)
    print((Path(config.output_dir) / manifest.artifacts["report_markdown"]).read_text(encoding="utf-8"), end="")
    return 0


def _parse_evidence(pairs: Sequence[str]) -> dict[str, str]:
    out = {}
    for pair in pairs:
        var, sep, label = pair.partition("=")
        if not sep or not var:
            raise InputError(f"evidence must look like VAR=LABEL, got {pair!r}")
        if var in out:
            raise InputError(f"evidence variable {var!r} given twice")
        out[var] = label
    return out


def cmd_query(args: argparse.Namespace) -> int:
    model = load_model(args.model)
    if not isinstance(model, BayesNet):
        raise InputError("queries need a Bayesian-network model")
    evidence = resolve_evidence(model, _parse_evidence(args.evidence))
    report = evidence_shift_report(model, Query(args.target, evidence, args.direction))
    _emit({"format_version": 1, "kind": "query", **report.to_dict()}, args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="catsynth", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fixture", help="write the bundled ground-truth dataset and model")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--rows", type=int, default=54_000)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_fixture)

    p = sub.add_parser("fit", help="fit one synthesizer to a CSV")
    p.add_argument("--data", required=True)
    p.add_argument("--schema")
    p.add_argument("--method", required=True, choices=["bn", "independent", "correlated", "copula", "ctgan"])
    p.add_argument("--dag", help="expert dag JSON (bn; optional fixed structure for correlated)")
    p.add_argument("--epsilon", type=float)
    p.add_argument("--max-parents", type=int)
    p.add_argument("--alpha", type=float, help="CPT smoothing pseudo-count (bn)")
    p.add_argument("--seed", type=int, default=0, help="seed for privacy noise")
    p.add_argument("--out", required=True, help="model JSON path")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("sample", help="sample a synthetic CSV from a model JSON")
    p.add_argument("--model", required=True)
    p.add_argument("--rows", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("eval", help="compare a synthetic CSV with the real one")
    p.add_argument("--real", required=True)
    p.add_argument("--synth", required=True)
    p.add_argument("--schema")
    p.add_argument("--dag", help="take MI edges from this dag")
    p.add_argument("--edge", action="append", default=[], metavar="SRC>DST")
    p.add_argument("--method", default="synthetic", help="method label stored in the output")
    p.add_argument("--histograms", help="directory for per-column histogram CSVs")
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("rank", help="gate and rank evaluation documents")
    p.add_argument("evaluations", nargs="+")
    p.add_argument("--alpha", type=float, default=DEFAULT_GATE_ALPHA, help="chi-square gate significance level")
    p.add_argument("--out")
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("run", help="full pipeline from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.add_argument("--rows", type=int)
    p.add_argument("--alpha", type=float, help="chi-square gate significance level")
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("query", help="prior/posterior shift for a target given evidence")
    p.add_argument("--model", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--evidence", action="append", default=[], metavar="VAR=LABEL")
    p.add_argument("--direction", choices=[PREDICTIVE, DIAGNOSTIC], default=PREDICTIVE)
    p.add_argument("--out")
    p.set_defaults(func=cmd_query)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except CatsynthError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return InputError.exit_code


if __name__ == "__main__":
    raise SystemExit(main())
