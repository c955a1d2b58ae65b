import io
import json
import subprocess
import sys
from contextlib import redirect_stderr, redirect_stdout

import numpy as np
import pytest

from cegames.cli import main
from cegames.core import CEGame
from cegames.gamefile import parse_game, serialize_game
from cegames.randgen import gen_random


def run_cli(argv):
    out, err = io.StringIO(), io.StringIO()
    with redirect_stdout(out), redirect_stderr(err):
        code = main(argv)
    return code, out.getvalue(), err.getvalue()


def g1_document() -> str:
    return json.dumps({
        "sites": ["A", "B"],
        "catcher": {"resource": 1, "limits": 1, "b": 0, "d": 1},
        "evaders": [
            {"resource": 1, "limits": 1, "b": {"A": 6, "B": 4}, "d": -10}
        ],
    })


class TestGameDocuments:
    def test_round_trip_is_exact(self):
        game = gen_random(3, 4, 99)
        again = parse_game(serialize_game(game))
        assert again == game

    def test_scalar_broadcast(self):
        game = parse_game(g1_document())
        assert np.allclose(game.delta[0], [1.0, 1.0])
        assert np.allclose(game.base[1], [6.0, 4.0])

    def test_missing_resource_names_the_key(self, tmp_path):
        doc = json.loads(g1_document())
        del doc["catcher"]["resource"]
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(doc))
        code, _, err = run_cli(["validate", str(path)])
        assert code == 2
        assert "resource" in json.loads(err)["error"]["message"]

    def test_unknown_keys_rejected(self):
        doc = json.loads(g1_document())
        doc["catcher"]["budget"] = 2
        code = None
        from cegames.errors import GameFileError
        with pytest.raises(GameFileError, match="budget"):
            parse_game(json.dumps(doc))

    def test_table2_round_trip(self):
        game = CEGame.create(
            sites=("t",), resources=[1.0, 0.5, 0.5],
            limits=[[1.0], [0.5], [0.5]],
            base=[[0.0], [5.0], [10.0]],
            delta=[[11.0], [-10.0], [-19.0]],
            alt=[[-10.0], [0.0], [0.0]],
        )
        assert parse_game(serialize_game(game)) == game

    def test_full_precision_floats_survive(self):
        game = CEGame.create(
            sites=("A", "B"), resources=[0.1 + 0.2, 1.0], limits=1.0,
            base=[[0.0, 0.0], [1.0 / 3.0, 2.0 / 7.0]],
            delta=[[np.pi, np.e], [-1.0 / 9.0, -0.1]],
        )
        again = parse_game(serialize_game(game))
        assert again == game


class TestCommands:
    def write_g1(self, tmp_path):
        path = tmp_path / "g1.json"
        path.write_text(g1_document())
        return str(path)

    def test_validate_ok(self, tmp_path):
        code, out, _ = run_cli(["validate", self.write_g1(tmp_path)])
        assert code == 0
        assert json.loads(out)["ok"] is True

    def test_validate_bad_game_exit_2(self, tmp_path):
        doc = json.loads(g1_document())
        doc["catcher"]["d"] = 0
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(doc))
        code, out, _ = run_cli(["validate", str(path)])
        assert code == 2
        assert json.loads(out)["ok"] is False

    def test_solve_nash_g1(self, tmp_path):
        code, out, _ = run_cli(["solve-nash", self.write_g1(tmp_path)])
        assert code == 0
        doc = json.loads(out)
        assert np.allclose(doc["allocation"]["catcher"], [0.6, 0.4], atol=1e-6)
        assert doc["verified"] is True

    def test_solve_nash_trace(self, tmp_path):
        trace_path = tmp_path / "trace.jsonl"
        code, _, _ = run_cli(["solve-nash", self.write_g1(tmp_path),
                              "--trace", str(trace_path)])
        assert code == 0
        records = [json.loads(line)
                   for line in trace_path.read_text().splitlines()]
        assert {r["phase"] for r in records} >= {"realloc", "increase-success"}

    def test_stackelberg_guard_exit_3(self, tmp_path):
        doc = json.loads(g1_document())
        doc["evaders"].append(dict(doc["evaders"][0]))
        path = tmp_path / "two.json"
        path.write_text(json.dumps(doc))
        code, _, err = run_cli(["solve-stackelberg", str(path)])
        assert code == 3
        assert "NP-hard" in json.loads(err)["error"]["message"]

    def test_reduce_security_pipeline(self, tmp_path):
        spec = {
            "kind": "security",
            "targets": ["t1", "t2"],
            "defender": {"resources": 1, "covered": 1, "uncovered": -10},
            "attackers": [
                {"probability": 1.0, "resources": 1,
                 "covered": -5, "uncovered": 5}
            ],
        }
        spec_path = tmp_path / "sec.json"
        spec_path.write_text(json.dumps(spec))
        game_path = tmp_path / "game.json"
        code, _, _ = run_cli(["reduce", "security", str(spec_path),
                              "--out", str(game_path)])
        assert code == 0
        game = parse_game(game_path.read_text())
        assert game.delta[0, 0] == 11.0
        code, out, _ = run_cli(["solve-nash", str(game_path)])
        assert code == 0

    def test_reduce_test_game(self, tmp_path):
        spec = {
            "kind": "test",
            "questions": ["q"],
            "scores": 5,
            "weights": 4,
            "length": 1,
            "takers": [{"probability": 1.0, "importance": 1.0,
                        "hard": ["q"], "capacity": 1}],
        }
        spec_path = tmp_path / "test.json"
        spec_path.write_text(json.dumps(spec))
        code, out, _ = run_cli(["reduce", "test", str(spec_path)])
        assert code == 0
        game = parse_game(out)
        assert game.delta[0, 0] == 4.0  # swapped into catcher convention
        assert game.delta[1, 0] == -5.0

    def test_reduce_matching_pipeline(self, tmp_path):
        spec = {
            "kind": "matching",
            "left": {"u": 1.0},
            "right": {"v1": 0.5, "v2": 0.5},
            "edges": [
                {"left": "u", "right": "v1", "capacity": 1, "cost": 0},
                {"left": "u", "right": "v2", "capacity": 1, "cost": 1},
            ],
        }
        spec_path = tmp_path / "match.json"
        spec_path.write_text(json.dumps(spec))
        game_path = tmp_path / "game.json"
        code, _, _ = run_cli(["reduce", "matching", str(spec_path),
                              "--out", str(game_path)])
        assert code == 0
        code, out, _ = run_cli(["solve-nash", str(game_path)])
        assert code == 0
        evader_row = json.loads(out)["allocation"]["evaders"][0]
        assert np.allclose(evader_row, [0.5, 0.5], atol=1e-8)

    def test_reduce_kind_mismatch(self, tmp_path):
        spec_path = tmp_path / "sec.json"
        spec_path.write_text(json.dumps({
            "kind": "security",
            "targets": ["t"],
            "defender": {"resources": 1, "covered": 1, "uncovered": -1},
            "attackers": [{"probability": 1, "resources": 1,
                           "covered": -1, "uncovered": 1}],
        }))
        code, _, err = run_cli(["reduce", "matching", str(spec_path)])
        assert code == 2

    def test_swap_twice_is_identity(self, tmp_path):
        path = self.write_g1(tmp_path)
        code, once, _ = run_cli(["swap", path])
        assert code == 0
        swapped_path = tmp_path / "swapped.json"
        swapped_path.write_text(once)
        code, twice, _ = run_cli(["swap", str(swapped_path)])
        assert parse_game(twice) == parse_game(g1_document())

    def test_verify_and_decompose(self, tmp_path):
        game_path = self.write_g1(tmp_path)
        code, solution, _ = run_cli(["solve-nash", game_path])
        sol_path = tmp_path / "sol.json"
        sol_path.write_text(solution)
        code, out, _ = run_cli(["verify", game_path, str(sol_path)])
        assert code == 0
        assert json.loads(out)["is_equilibrium"] is True

        code, out, _ = run_cli(["decompose", game_path, str(sol_path),
                                "--player", "1"])
        assert code == 0
        atoms = json.loads(out)["atoms"]
        assert sum(a["probability"] for a in atoms) == pytest.approx(1.0)
        assert all(len(a["subset"]) == 1 for a in atoms)

    def test_verify_rejects_non_equilibrium(self, tmp_path):
        game_path = self.write_g1(tmp_path)
        bad = {
            "allocation": {"catcher": [1.0, 0.0], "evaders": [[0.5, 0.5]]}
        }
        bad_path = tmp_path / "bad.json"
        bad_path.write_text(json.dumps(bad))
        code, out, _ = run_cli(["verify", game_path, str(bad_path)])
        assert code == 1
        assert json.loads(out)["is_equilibrium"] is False

    def test_gen_deterministic(self):
        code1, out1, _ = run_cli(["gen", "-n", "3", "-m", "4", "--seed", "5"])
        code2, out2, _ = run_cli(["gen", "-n", "3", "-m", "4", "--seed", "5"])
        assert code1 == code2 == 0
        assert out1 == out2
        assert parse_game(out1).num_evaders == 3

    def test_gen_output_is_valid(self):
        for seed in range(5):
            _, out, _ = run_cli(["gen", "-n", "2", "-m", "3",
                                 "--seed", str(seed)])
            code, _, _2 = run_cli_on_text(out, ["validate"])
            assert code == 0


def run_cli_on_text(text, argv_prefix, tmp_path=None):
    import tempfile
    with tempfile.NamedTemporaryFile("w", suffix=".json", delete=False) as f:
        f.write(text)
        name = f.name
    return run_cli([*argv_prefix, name])


class TestBench:
    def test_small_bench_rows(self, tmp_path):
        out_path = tmp_path / "bench.csv"
        code, _, _ = run_cli(["bench", "--sizes", "2..3", "--per-size", "2",
                              "--out", str(out_path)])
        assert code == 0
        lines = out_path.read_text().splitlines()
        assert lines[0] == "n,m,seed,iterations,wall_time_ms,normal_form_size,verified"
        assert len(lines) == 1 + 4
        for line in lines[1:]:
            assert line.endswith(",true")

    def test_bench_byte_stable_except_wall_time(self, tmp_path):
        def strip_time(text):
            rows = [line.split(",") for line in text.splitlines()]
            return [",".join(r[:4] + r[5:]) for r in rows]

        a = tmp_path / "a.csv"
        b = tmp_path / "b.csv"
        run_cli(["bench", "--sizes", "2,3", "--per-size", "3",
                 "--out", str(a)])
        run_cli(["bench", "--sizes", "2,3", "--per-size", "3",
                 "--out", str(b)])
        assert strip_time(a.read_text()) == strip_time(b.read_text())

    def test_sizes_grammar(self, tmp_path):
        out_path = tmp_path / "one.csv"
        code, _, _ = run_cli(["bench", "--sizes", "2", "--per-size", "1",
                              "--out", str(out_path)])
        assert code == 0
        assert len(out_path.read_text().splitlines()) == 2

    def test_harness_example_run(self, tmp_path):
        # the documented harness invocation: nine sizes, twenty seeds each
        out_path = tmp_path / "bench.csv"
        code, _, _ = run_cli(["bench", "--sizes", "2..10", "--per-size", "20",
                              "--out", str(out_path)])
        assert code == 0
        lines = out_path.read_text().splitlines()
        assert len(lines) == 1 + 180
        assert all(line.endswith(",true") for line in lines[1:])


class TestEntryPoint:
    def test_installed_script(self):
        result = subprocess.run(
            [sys.executable, "-m", "cegames.cli", "gen", "-n", "1", "-m", "2",
             "--seed", "0"],
            capture_output=True, text=True, timeout=60,
        )
        assert result.returncode == 0
        assert json.loads(result.stdout)["sites"] == ["s0", "s1"]
