"""End-to-end tests of the junctionwalk command line."""

import json

import pytest

from src.config.settings import EXIT_CONFIG_ERROR, EXIT_DATA_ERROR, EXIT_OK, MANIFEST_FILE, TRACE_FILE
from src.core.app import build_parser, main
from src.core.samplers import ChainTrace

pytestmark = pytest.mark.integration


@pytest.fixture
def dataset(tmp_path):
    out = tmp_path / "data"
    code = main(["simulate", "--p", "5", "--max-lag", "1", "--n", "40", "--seed", "3", "--out", str(out)])
    assert code == EXIT_OK
    return out


def _sample(data_dir, out, *extra):
    args = [
        "sample",
        "--data",
        str(data_dir / "data.csv"),
        "--out",
        str(out),
        "--skeleton-period",
        "10",
        "--no-progress",
        *extra,
    ]
    return main(args)


class TestParser:
    def test_command_is_required(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args([])

    def test_unknown_sampler_is_a_usage_error(self):
        with pytest.raises(SystemExit) as info:
            main(["sample", "--sampler", "gibbs"])
        assert info.value.code == 2

    def test_unset_options_stay_none(self):
        args = build_parser().parse_args(["sample"])
        assert args.iters is None and args.debug is None and args.progress is None


class TestSimulate:
    def test_outputs(self, dataset):
        assert {p.name for p in dataset.iterdir()} == {"graph.json", "graph.csv", "data.csv", "manifest.json"}
        graph = json.loads((dataset / "graph.json").read_text(encoding="utf-8"))
        assert graph == {"p": 5, "edges": [[0, 1], [1, 2], [2, 3], [3, 4]]}
        manifest = json.loads((dataset / "manifest.json").read_text(encoding="utf-8"))
        assert manifest["command"] == "simulate"
        assert manifest["n_edges"] == 4
        assert len((dataset / "data.csv").read_text(encoding="utf-8").splitlines()) == 40

    def test_same_seed_same_bytes(self, tmp_path):
        for name in ("a", "b"):
            assert main(["simulate", "--p", "8", "--n", "12", "--seed", "9", "--out", str(tmp_path / name)]) == EXIT_OK
        for f in ("graph.json", "graph.csv", "data.csv", "manifest.json"):
            assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()

    def test_single_vertex(self, tmp_path):
        assert main(["simulate", "--p", "1", "--n", "5", "--out", str(tmp_path)]) == EXIT_OK
        graph = json.loads((tmp_path / "graph.json").read_text(encoding="utf-8"))
        assert graph == {"p": 1, "edges": []}

    def test_invalid_values(self, tmp_path):
        assert main(["simulate", "--p", "0", "--out", str(tmp_path)]) == EXIT_CONFIG_ERROR
        assert main(["simulate", "--p", "4"]) == EXIT_CONFIG_ERROR


class TestSample:
    def test_writes_trace(self, dataset, tmp_path):
        run = tmp_path / "run"
        assert _sample(dataset, run, "--iters", "200", "--sampler", "single") == EXIT_OK
        trace = ChainTrace.load(run)
        assert len(trace) == 200
        assert trace.config.sampler == "single"
        assert trace.run["data"] == str(dataset / "data.csv")
        assert trace.run["n"] == 40

    def test_zero_iterations(self, dataset, tmp_path):
        assert _sample(dataset, tmp_path / "run", "--iters", "0") == EXIT_CONFIG_ERROR

    def test_missing_data(self, tmp_path):
        code = main(["sample", "--data", str(tmp_path / "absent.csv"), "--out", str(tmp_path / "run")])
        assert code == EXIT_DATA_ERROR

    def test_missing_out(self, dataset):
        assert main(["sample", "--data", str(dataset / "data.csv")]) == EXIT_CONFIG_ERROR

    def test_config_file_and_flags(self, dataset, tmp_path):
        config = tmp_path / "sample.json"
        config.write_text(json.dumps({"iters": 50, "sampler": "single", "skeleton-period": 5}), encoding="utf-8")
        run = tmp_path / "run"
        code = main(
            ["sample", "--config", str(config), "--data", str(dataset / "data.csv"), "--out", str(run), "--iters", "60"]
        )
        assert code == EXIT_OK
        cfg = ChainTrace.load(run).config
        assert (cfg.iterations, cfg.sampler, cfg.skeleton_period) == (60, "single", 5)

    def test_unknown_config_key(self, dataset, tmp_path):
        config = tmp_path / "bad.json"
        config.write_text(json.dumps({"iterations": 50}), encoding="utf-8")
        code = main(["sample", "--config", str(config), "--data", str(dataset / "data.csv"), "--out", str(tmp_path)])
        assert code == EXIT_CONFIG_ERROR

    def test_resume_matches_uninterrupted_run(self, dataset, tmp_path):
        common = ("--snapshot-every", "50", "--seed", "21", "--prior", "expfam")
        assert _sample(dataset, tmp_path / "full", "--iters", "400", *common) == EXIT_OK
        assert _sample(dataset, tmp_path / "part", "--iters", "170", *common) == EXIT_OK
        assert main(["sample", "--resume", str(tmp_path / "part"), "--iters", "400", "--no-progress"]) == EXIT_OK
        for name in (TRACE_FILE, MANIFEST_FILE):
            assert (tmp_path / "full" / name).read_bytes() == (tmp_path / "part" / name).read_bytes()

    def test_independent_chains(self, dataset, tmp_path):
        run = tmp_path / "chains"
        assert _sample(dataset, run, "--iters", "60", "--chains", "2") == EXIT_OK
        index = json.loads((run / "chains.json").read_text(encoding="utf-8"))
        assert index["chains"] == ["chain_00", "chain_01"]
        assert len(set(index["seeds"])) == 2
        traces = [ChainTrace.load(run / name) for name in index["chains"]]
        assert [t.config.seed for t in traces] == index["seeds"]


class TestDiagnose:
    @pytest.fixture
    def run(self, dataset, tmp_path):
        out = tmp_path / "run"
        assert _sample(dataset, out, "--iters", "300") == EXIT_OK
        return out

    def test_outputs(self, run, dataset, tmp_path):
        out = tmp_path / "diag"
        code = main(
            [
                "diagnose",
                "--trace",
                str(run),
                "--burn-in",
                "100",
                "--max-lag",
                "20",
                "--truth",
                str(dataset / "graph.json"),
                "--out",
                str(out),
            ]
        )
        assert code == EXIT_OK
        expected = {
            "trace_summary.csv",
            "acf.csv",
            "edge_posterior.csv",
            "map_graph.json",
            "acceptance_serial.csv",
            "acceptance_steps.csv",
            "diagnostics.json",
        }
        assert expected <= {p.name for p in out.iterdir()}
        summary = json.loads((out / "diagnostics.json").read_text(encoding="utf-8"))
        assert summary["steps"] == 300
        assert summary["max_lag"] == 20
        assert 0.0 <= summary["edge_auc"] <= 1.0
        assert 0 <= summary["map_hamming"] <= 10
        assert len((out / "acf.csv").read_text(encoding="utf-8").splitlines()) == 22

    def test_default_output_directory(self, run):
        assert main(["diagnose", "--trace", str(run)]) == EXIT_OK
        assert (run / "diagnostics" / "diagnostics.json").is_file()

    def test_burn_in_too_long(self, run):
        assert main(["diagnose", "--trace", str(run), "--burn-in", "300"]) == EXIT_CONFIG_ERROR

    def test_max_lag_too_long(self, run):
        assert main(["diagnose", "--trace", str(run), "--burn-in", "250", "--max-lag", "50"]) == EXIT_CONFIG_ERROR

    def test_missing_trace(self, tmp_path):
        assert main(["diagnose", "--trace", str(tmp_path / "nothing")]) == EXIT_DATA_ERROR
