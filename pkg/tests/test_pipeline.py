import json

import pytest

from catsynth.cli import main
from catsynth.core import read_json
from catsynth.errors import InputError
from catsynth.pipeline import OUT_OF_SCOPE_MESSAGE, MethodSpec, PipelineConfig, load_model, run_pipeline

ROWS = 3000


@pytest.fixture(scope="module")
def fixture_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("fx")
    assert main(["fixture", "--seed", "1", "--rows", str(ROWS), "--out", str(d)]) == 0
    return d


def _config(fixture_dir, out, methods, **extra):
    doc = {
        "dataset": "real.csv",
        "schema": "schema.json",
        "dag": "dag.json",
        "methods": methods,
        "seed": 3,
        "output_dir": str(out),
        **extra,
    }
    return PipelineConfig.from_dict(doc, fixture_dir)


class TestMethodSpec:
    def test_labels(self):
        assert MethodSpec("bn").label == "bn"
        assert MethodSpec("independent", {"epsilon": 10}).label == "independent-eps10"
        assert MethodSpec("correlated", {"epsilon": 5, "max_parents": 3}).label == "correlated-k3-eps5"
        assert MethodSpec.from_dict({"id": "ctgan", "epochs": 100}).label == "ctgan-epochs100"

    def test_rejects_foreign_params(self):
        with pytest.raises(InputError, match="epochs"):
            MethodSpec.from_dict({"id": "bn", "epochs": 5})
        with pytest.raises(InputError):
            MethodSpec("gan")
        with pytest.raises(InputError):
            MethodSpec("independent", {"epsilon": 0})

    def test_duplicate_labels(self, fixture_dir, tmp_path):
        with pytest.raises(InputError, match="unique"):
            _config(fixture_dir, tmp_path, [{"id": "bn"}, {"id": "bn"}])


class TestRun:
    def test_three_methods(self, fixture_dir, tmp_path):
        cfg = _config(fixture_dir, tmp_path / "out", [{"id": "bn"}, {"id": "independent", "epsilon": 10}, {"id": "copula"}])
        manifest = run_pipeline(cfg)
        report = read_json(tmp_path / "out" / "report.json")
        assert len(report["methods"]) == 3
        assert {m["method"] for m in report["methods"]} == {"bn", "independent-eps10", "copula"}
        for rel in manifest.artifacts.values():
            p = tmp_path / "out" / rel
            assert p.exists()
            if p.suffix == ".json":
                json.loads(p.read_text())
        md = (tmp_path / "out" / "report.md").read_text()
        assert "| Mode | Parameters | KL median | Chi-Square | TVD | Rank |" in md
        assert "Entropy Synthetic" in md
        assert load_model(tmp_path / "out" / manifest.artifacts["copula/model"]).schema.names[0] == "Gender"

    def test_ctgan_excluded(self, fixture_dir, tmp_path):
        cfg = _config(fixture_dir, tmp_path, [{"id": "bn"}, {"id": "ctgan", "epochs": 100}])
        run_pipeline(cfg)
        rows = {m["method"]: m for m in read_json(tmp_path / "report.json")["methods"]}
        assert rows["ctgan-epochs100"]["rank"] is None
        assert rows["ctgan-epochs100"]["error"] == OUT_OF_SCOPE_MESSAGE
        assert rows["bn"]["error"] is None
        assert rows["bn"]["rank"] == (1 if rows["bn"]["gate_passed"] else None)

    def test_bn_without_dag_fails_softly(self, fixture_dir, tmp_path):
        cfg = PipelineConfig.from_dict(
            {"dataset": "real.csv", "schema": "schema.json", "methods": [{"id": "bn"}, {"id": "copula"}], "output_dir": str(tmp_path)},
            fixture_dir,
        )
        run_pipeline(cfg)
        rows = {m["method"]: m for m in read_json(tmp_path / "report.json")["methods"]}
        assert "expert dag" in rows["bn"]["error"]
        assert rows["copula"]["error"] is None

    def test_byte_identical_across_workers(self, fixture_dir, tmp_path):
        methods = [{"id": "bn"}, {"id": "correlated", "epsilon": 5}, {"id": "copula"}]
        outs = []
        for i, w in enumerate((1, 1, 4)):
            cfg = _config(fixture_dir, tmp_path / f"r{i}", methods, workers=w)
            run_pipeline(cfg)
            outs.append(tmp_path / f"r{i}")
        files = sorted(p.relative_to(outs[0]) for p in outs[0].rglob("*") if p.is_file() and p.name != "manifest.json")
        assert len(files) > 10
        for other in outs[1:]:
            for rel in files:
                assert (other / rel).read_bytes() == (outs[0] / rel).read_bytes(), rel
        hashes = {read_json(o / "manifest.json")["config_hash"] for o in outs}
        assert len(hashes) == 1

    def test_missing_keys(self, fixture_dir):
        with pytest.raises(InputError, match="dataset"):
            PipelineConfig.from_dict({"methods": [{"id": "bn"}]}, fixture_dir)
