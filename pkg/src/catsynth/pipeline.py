"""End-to-end run: ingest, fit each method, sample, evaluate, rank, write artifacts."""

from __future__ import annotations

import hashlib
import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from catsynth import __version__
from catsynth.baseline import PrivacyBudget, StructureOptions, fit_correlated, fit_independent, learn_structure
from catsynth.bn_synth import FitOptions, SampleRequest, ancestral_sample, fit_bayesnet
from catsynth.copula import CopulaModel, fit_copula, sample_copula
from catsynth.core import BayesNet, DataTable, Dag, read_json, write_json
from catsynth.csvio import export_csv, ingest_csv, load_schema, write_histograms
from catsynth.errors import CatsynthError, InputError
from catsynth.evaluation import DEFAULT_GATE_ALPHA, DEFAULT_KL_SMOOTHING, EvalReport, MethodScore, evaluate_pair, rank_methods
from catsynth.rng import derive_seed, generator

log = logging.getLogger(__name__)

METHOD_IDS = ("bn", "independent", "correlated", "copula")
OUT_OF_SCOPE_IDS = ("ctgan",)
_ALLOWED_PARAMS = {
    "bn": {"alpha"},
    "independent": {"epsilon"},
    "correlated": {"epsilon", "max_parents", "tie_break"},
    "copula": set(),
    "ctgan": {"epochs"},
}
MODES = {
    "bn": "Bayesian Network",
    "independent": "Independent attribute mode",
    "correlated": "Correlated attribute mode",
    "copula": "Gaussian Copula",
    "ctgan": "CTGAN",
}
OUT_OF_SCOPE_MESSAGE = "excluded: out of scope (CTGAN is not implemented)"


@dataclass(frozen=True)
class MethodSpec:
    id: str
    params: Mapping[str, Any] = field(default_factory=dict)
    name: str | None = None

    def __post_init__(self) -> None:
        if self.id not in METHOD_IDS + OUT_OF_SCOPE_IDS:
            raise InputError(f"unknown method {self.id!r}; expected one of {METHOD_IDS + OUT_OF_SCOPE_IDS}")
        object.__setattr__(self, "params", dict(self.params))
        unknown = set(self.params) - _ALLOWED_PARAMS[self.id]
        if unknown:
            raise InputError(f"method {self.id!r} does not take parameters {sorted(unknown)}")
        if self.id in OUT_OF_SCOPE_IDS:
            return
        # Validate eagerly so bad configs fail before any work starts.
        self.budget()
        if self.id == "bn":
            FitOptions(float(self.params.get("alpha", 1.0)))
        if self.id == "correlated":
            self.structure_options()

    @classmethod
    def from_dict(cls, d: Mapping) -> "MethodSpec":
        d = dict(d)
        if "id" not in d:
            raise InputError(f"method entry {d} has no 'id'")
        mid, name = d.pop("id"), d.pop("name", None)
        params = d.pop("params", {})
        params.update(d)
        return cls(str(mid).lower(), params, name)

    def budget(self) -> PrivacyBudget:
        eps = self.params.get("epsilon")
        if eps in (None, "off"):
            return PrivacyBudget.off()
        return PrivacyBudget(float(eps))

    def structure_options(self) -> StructureOptions:
        return StructureOptions(int(self.params.get("max_parents", 2)), self.params.get("tie_break", "declaration"))

    @property
    def mode(self) -> str:
        if self.id == "correlated":
            return f"{MODES['correlated']}: {self.structure_options().max_parents} parents"
        return MODES[self.id]

    @property
    def parameters(self) -> str:
        if self.id in ("independent", "correlated"):
            return f"epsilon = {self.budget().label()}"
        if self.id == "ctgan" and "epochs" in self.params:
            return f"epochs = {self.params['epochs']}"
        if self.id == "bn" and "alpha" in self.params:
            return f"alpha = {float(self.params['alpha']):g}"
        return "-"

    @property
    def label(self) -> str:
        if self.name:
            return self.name
        if self.id == "independent":
            return f"independent-eps{self.budget().label()}"
        if self.id == "correlated":
            return f"correlated-k{self.structure_options().max_parents}-eps{self.budget().label()}"
        if self.id == "ctgan" and "epochs" in self.params:
            return f"ctgan-epochs{self.params['epochs']}"
        return self.id

    def to_dict(self) -> dict:
        d = {"id": self.id, **self.params}
        if self.name:
            d["name"] = self.name
        return d


@dataclass(frozen=True)
class PipelineConfig:
    dataset: Path
    methods: tuple[MethodSpec, ...]
    output_dir: Path
    seed: int = 0
    schema: Path | None = None
    dag: Path | Mapping | None = None
    edges: tuple[tuple[str, str], ...] | None = None
    n_rows: int | None = None
    gate_alpha: float = DEFAULT_GATE_ALPHA
    kl_smoothing: float = DEFAULT_KL_SMOOTHING
    workers: int = 1

    def __post_init__(self) -> None:
        if not self.methods:
            raise InputError("config lists no methods")
        labels = [m.label for m in self.methods]
        if len(set(labels)) != len(labels):
            raise InputError(f"method labels must be unique, got {labels}")
        if self.n_rows is not None and int(self.n_rows) < 1:
            raise InputError("n_rows must be >= 1")
        if not 0 < self.gate_alpha < 1:
            raise InputError("gate_alpha must be in (0, 1)")
        if int(self.workers) < 1:
            raise InputError("workers must be >= 1")

    @classmethod
    def from_dict(cls, d: Mapping, base_dir: Path | str = ".") -> "PipelineConfig":
        base = Path(base_dir)

        def resolve(p):
            return None if p is None else (base / p if not Path(p).is_absolute() else Path(p))

        try:
            dag = d.get("dag")
            return cls(
                dataset=resolve(d["dataset"]),
                methods=tuple(MethodSpec.from_dict(m) for m in d["methods"]),
                output_dir=resolve(d.get("output_dir", "out")),
                seed=int(d.get("seed", 0)),
                schema=resolve(d.get("schema")),
                dag=resolve(dag) if isinstance(dag, str) else dag,
                edges=None if d.get("edges") is None else tuple(tuple(e) for e in d["edges"]),
                n_rows=d.get("n_rows"),
                gate_alpha=float(d.get("gate_alpha", DEFAULT_GATE_ALPHA)),
                kl_smoothing=float(d.get("kl_smoothing", DEFAULT_KL_SMOOTHING)),
                workers=int(d.get("workers", 1)),
            )
        except KeyError as exc:
            raise InputError(f"config is missing required key {exc}") from None
        except (TypeError, ValueError) as exc:
            if isinstance(exc, CatsynthError):
                raise
            raise InputError(f"invalid config: {exc}") from None

    @classmethod
    def load(cls, path: str | Path) -> "PipelineConfig":
        path = Path(path)
        return cls.from_dict(read_json(path), path.parent)

    def replace(self, **changes) -> "PipelineConfig":
        return PipelineConfig(**{**self.__dict__, **changes})

    def canonical(self) -> dict:
        """Output-affecting settings; hashed into the manifest (workers excluded by design)."""
        dataset_bytes = Path(self.dataset).read_bytes()
        return {
            "dataset_sha256": hashlib.sha256(dataset_bytes).hexdigest(),
            "schema": None if self.schema is None else load_schema(self.schema),
            "dag": None if self.dag is None else _dag_doc(self.dag),
            "edges": None if self.edges is None else [list(e) for e in self.edges],
            "methods": [m.to_dict() for m in self.methods],
            "n_rows": self.n_rows,
            "seed": self.seed,
            "gate_alpha": self.gate_alpha,
            "kl_smoothing": self.kl_smoothing,
        }

    def config_hash(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def _dag_doc(dag: Path | Mapping) -> dict:
    return dict(dag) if isinstance(dag, Mapping) else read_json(dag)


@dataclass
class RunManifest:
    config_hash: str
    seed: int
    tool_version: str
    stage_seconds: dict[str, float] = field(default_factory=dict)
    artifacts: dict[str, str] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "format_version": 1,
            "kind": "manifest",
            "config_hash": self.config_hash,
            "seed": self.seed,
            "tool_version": self.tool_version,
            "stage_seconds": self.stage_seconds,
            "artifacts": self.artifacts,
        }


def fit_method(spec: MethodSpec, data: DataTable, dag: Dag | None, seed: int) -> BayesNet | CopulaModel:
    """Fit one method; ``seed`` drives privacy noise only."""
    if spec.id == "bn":
        if dag is None:
            raise InputError("method 'bn' needs an expert dag")
        return fit_bayesnet(data, dag, FitOptions(float(spec.params.get("alpha", 1.0))))
    if spec.id == "independent":
        return fit_independent(data, spec.budget(), generator(derive_seed(seed, "noise")))
    if spec.id == "correlated":
        learned = learn_structure(data, spec.structure_options(), spec.budget())
        return fit_correlated(data, learned, spec.budget(), generator(derive_seed(seed, "noise")))
    if spec.id == "copula":
        return fit_copula(data)
    raise InputError(OUT_OF_SCOPE_MESSAGE)


def sample_model(model: BayesNet | CopulaModel, n_rows: int, seed: int, workers: int = 1) -> DataTable:
    if isinstance(model, CopulaModel):
        return sample_copula(model, n_rows, seed, workers=workers)
    return ancestral_sample(model, SampleRequest(n_rows, seed), workers=workers)


def load_model(path: str | Path) -> BayesNet | CopulaModel:
    doc = read_json(path)
    kind = doc.get("kind") if isinstance(doc, Mapping) else None
    if kind == "copula":
        return CopulaModel.from_dict(doc)
    return BayesNet.from_dict(doc)


def _fmt(x: float | None, digits: int = 4) -> str:
    if x is None or (isinstance(x, float) and np.isnan(x)):
        return "-"
    if x != 0 and abs(x) < 1e-3:
        return f"{x:.2E}"
    return f"{x:.{digits}f}"


def render_markdown(scores: Sequence[MethodScore], reports: Mapping[str, EvalReport], gate_alpha: float) -> str:
    """Method table (Mode / Parameters / KL median / Chi-Square / TVD / Rank) plus
    entropy and mutual-information blocks for the top-ranked method."""
    lines = [
        "# Synthetic data comparison",
        "",
        f"Chi-Square is the median per-column statistic; bold marks methods where some column has p < {gate_alpha:g} "
        "(excluded from ranking). KL in nats, entropy and MI in bits, TVD = 1 - total variation.",
        "",
        "| Mode | Parameters | KL median | Chi-Square | TVD | Rank |",
        "|---|---|---|---|---|---|",
    ]
    for s in scores:
        chi = _fmt(s.chi_square_median)
        if s.error is None and not s.gate_passed:
            chi = f"**{chi}**"
        rank = str(s.rank) if s.rank is not None else "-"
        if s.error:
            rank = f"- ({s.error})"
        lines.append(f"| {s.mode or s.method} | {s.parameters} | {_fmt(s.kl_median)} | {chi} | {_fmt(s.tvd_mean)} | {rank} |")
    best = next((s for s in scores if s.rank == 1), None)
    if best is not None and best.method in reports:
        rep = reports[best.method]
        lines += [
            "",
            f"## Entropy, real vs synthetic ({best.method})",
            "",
            "| Node | Entropy Synthetic | Entropy Real |",
            "|---|---|---|",
        ]
        lines += [f"| {k} | {rep.entropy_synthetic[k]:.5f} | {rep.entropy_real[k]:.5f} |" for k in rep.entropy_real]
        if rep.edges:
            lines += [
                "",
                f"## Mutual information, real vs synthetic ({best.method})",
                "",
                "| Source | Target | MI Synthetic | MI Real |",
                "|---|---|---|---|",
            ]
            lines += [f"| {e.source} | {e.target} | {e.synthetic:.6f} | {e.real:.6f} |" for e in rep.edges]
    return "\n".join(lines) + "\n"


def report_document(scores: Sequence[MethodScore], reports: Mapping[str, EvalReport], config_hash: str, gate_alpha: float) -> dict:
    return {
        "format_version": 1,
        "kind": "report",
        "config_hash": config_hash,
        "gate_alpha": gate_alpha,
        "methods": [
            {**s.to_dict(), "evaluation": reports[s.method].to_dict() if s.method in reports else None} for s in scores
        ],
    }


def run_pipeline(config: PipelineConfig) -> RunManifest:
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(config.config_hash(), config.seed, __version__)
    timer = time.perf_counter

    t0 = timer()
    schema_doc = load_schema(config.schema) if config.schema else None
    _, data = ingest_csv(config.dataset, schema_doc)
    dag = Dag.from_dict(_dag_doc(config.dag)) if config.dag is not None else None
    if config.edges is not None:
        edges = tuple(config.edges)
    else:
        edges = dag.edges if dag is not None else ()
    for a, b in edges:
        data.schema.position(a), data.schema.position(b)
    n_rows = int(config.n_rows or data.n_rows)
    manifest.stage_seconds["ingest"] = timer() - t0

    scores: list[MethodScore] = []
    reports: dict[str, EvalReport] = {}
    for spec in config.methods:
        label = spec.label
        if spec.id in OUT_OF_SCOPE_IDS:
            scores.append(MethodScore.failed(label, OUT_OF_SCOPE_MESSAGE, spec.mode, spec.parameters))
            continue
        method_seed = derive_seed(config.seed, label)
        mdir = out / "methods" / label
        try:
            t0 = timer()
            model = fit_method(spec, data, dag, method_seed)
            manifest.stage_seconds[f"{label}/fit"] = timer() - t0
            t0 = timer()
            synth = sample_model(model, n_rows, derive_seed(method_seed, "sample"), config.workers)
            manifest.stage_seconds[f"{label}/sample"] = timer() - t0
            t0 = timer()
            report = evaluate_pair(data, synth, edges, kl_smoothing=config.kl_smoothing)
            manifest.stage_seconds[f"{label}/evaluate"] = timer() - t0
        except CatsynthError as exc:
            log.warning("method %s failed: %s", label, exc)
            scores.append(MethodScore.failed(label, f"failed: {exc}", spec.mode, spec.parameters))
            continue
        reports[label] = report
        scores.append(MethodScore.from_report(label, report, spec.mode, spec.parameters))
        manifest.artifacts[f"{label}/model"] = str(write_json(mdir / "model.json", model.to_dict()).relative_to(out))
        manifest.artifacts[f"{label}/synthetic"] = str(export_csv(synth, mdir / "synthetic.csv").relative_to(out))
        manifest.artifacts[f"{label}/evaluation"] = str(
            write_json(mdir / "evaluation.json", evaluation_document(label, spec.mode, spec.parameters, report)).relative_to(out)
        )
        for p in write_histograms(report.histograms, mdir / "histograms"):
            manifest.artifacts[f"{label}/histogram/{p.stem}"] = str(p.relative_to(out))

    ranked = rank_methods(scores, config.gate_alpha)
    doc = report_document(ranked, reports, manifest.config_hash, config.gate_alpha)
    manifest.artifacts["report"] = str(write_json(out / "report.json", doc).relative_to(out))
    md = out / "report.md"
    md.write_text(render_markdown(ranked, reports, config.gate_alpha), encoding="utf-8")
    manifest.artifacts["report_markdown"] = str(md.relative_to(out))
    write_json(out / "manifest.json", manifest.to_dict())
    return manifest


def evaluation_document(method: str, mode: str, parameters: str, report: EvalReport) -> dict:
    score = MethodScore.from_report(method, report, mode, parameters)
    return {"format_version": 1, "kind": "evaluation", "score": score.to_dict(), "evaluation": report.to_dict()}
