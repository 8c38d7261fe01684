import csv
import io
import json

import numpy as np
import pytest

from qmix.cli import main
from qmix.datastore import load_state, read_manifest, save_state
from qmix.qcore import PureState, noisy_ghz


def run(capsys, *argv):
    try:
        main(list(argv))
        code = 0
    except SystemExit as exc:
        code = exc.code
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


@pytest.fixture
def bell(tmp_path):
    path = tmp_path / "bell.qmix"
    save_state(path, PureState(np.array([1, 0, 0, 1]) / np.sqrt(2)).to_density())
    return path


class TestFamilies:
    def test_ghz_at_threshold(self, capsys):
        code, out, _ = run(capsys, "families", "ghz", "--n", "3", "--p", "0.2")
        assert code == 0
        (r,) = rows(out)
        assert float(r["cel"]) <= 0 and r["below_threshold"] == "1" and r["certified_entangled"] == "0"
        assert float(r["threshold"]) == pytest.approx(0.2)

    def test_several_p(self, capsys):
        _, out, _ = run(capsys, "families", "w", "--n", "2", "--p", "0", "--p", "1")
        got = rows(out)
        assert [float(r["cel"]) for r in got] == [pytest.approx(-0.125), pytest.approx(0.25)]

    def test_domain_error(self, capsys):
        code, _, err = run(capsys, "families", "ghz", "--n", "1", "--p", "0.5")
        assert code == 2
        assert err.startswith("error: domain:") and err.count("\n") == 1


class TestStateCommands:
    def test_cel_bell(self, capsys, bell):
        code, out, _ = run(capsys, "cel", "--input", str(bell))
        assert code == 0
        (r,) = rows(out)
        assert float(r["cel"]) == pytest.approx(0.25, abs=1e-12)
        assert r["certified_entangled"] == "1"

    def test_cel_to_file(self, capsys, bell, tmp_path):
        target = tmp_path / "o.csv"
        code, out, _ = run(capsys, "cel", "--input", str(bell), "--out", str(target))
        assert code == 0 and out == ""
        assert float(rows(target.read_text())[0]["cel"]) == pytest.approx(0.25)

    def test_swap_pure(self, capsys, tmp_path):
        path = tmp_path / "psi.qmix"
        save_state(path, PureState(np.array([1, 0, 0, 1]) / np.sqrt(2)))
        _, out, _ = run(capsys, "swap-test", "--input", str(path))
        (r,) = rows(out)
        assert r["quantity"] == "ce"
        assert float(r["swap_estimate"]) == pytest.approx(float(r["exact"]), abs=1e-12)

    def test_swap_mixed(self, capsys, tmp_path):
        path = tmp_path / "g.qmix"
        save_state(path, noisy_ghz(3, 0.6))
        _, out, _ = run(capsys, "swap-test", "--input", str(path))
        (r,) = rows(out)
        assert r["quantity"] == "cel"
        assert float(r["swap_estimate"]) == pytest.approx(float(r["exact"]), abs=1e-10)

    def test_truncated_file(self, capsys, bell):
        bell.write_bytes(bell.read_bytes()[:30])
        code, _, err = run(capsys, "cel", "--input", str(bell))
        assert code == 2 and err.startswith("error: format:")

    def test_corrupted_file(self, capsys, bell):
        blob = bytearray(bell.read_bytes())
        blob[20] ^= 0xFF
        bell.write_bytes(bytes(blob))
        code, _, err = run(capsys, "cel", "--input", str(bell))
        assert code == 2 and err.startswith("error: checksum:")


class TestGeneration:
    def test_separable_deterministic(self, capsys, tmp_path):
        for name in ("a", "b"):
            code, _, _ = run(capsys, "gen-separable", "--n", "3", "--count", "10", "--seed", "1",
                             "--out", str(tmp_path / name))
            assert code == 0
        for f in sorted((tmp_path / "a").iterdir()):
            assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes()
        doc = read_manifest(tmp_path / "a")
        assert doc["count"] == 10 == len(list((tmp_path / "a").glob("*.qmix")))

    def test_seed_required(self, capsys, tmp_path):
        code, _, err = run(capsys, "gen-separable", "--n", "2", "--count", "3", "--out", str(tmp_path / "x"))
        assert code == 2
        assert err.startswith("error: usage:") and "--seed" in err

    def test_entangled_with_table(self, capsys, tmp_path):
        table = tmp_path / "t.csv"
        table.write_text("ansatz,width,depth,count\nHWE,4,2,3\nSEA,4,2,3\n")
        code, out, _ = run(capsys, "gen-entangled", "--n", "2", "--seed", "2", "--table", str(table),
                           "--iters", "300", "--out", str(tmp_path / "ent"))
        assert code == 0
        assert rows(out)[0]["entangled"] == "6"
        doc = read_manifest(tmp_path / "ent")
        assert doc["meta"]["xi"] == 0.25 and [r["ansatz"] for r in doc["rows"]] == ["HWE", "SEA"]
        assert all(it["cel"] > 0 for it in doc["items"])
        load_state(tmp_path / "ent" / doc["items"][0]["file"], validate=True)


@pytest.fixture(scope="module")
def tiny_data(tmp_path_factory):
    base = tmp_path_factory.mktemp("data")
    for name, argv in (("sep", ["gen-separable", "--n", "2", "--count", "24", "--seed", "5"]),
                       ("ent", ["gen-entangled", "--n", "2", "--count", "2", "--seed", "5", "--iters", "300"])):
        try:
            main(argv + ["--out", str(base / name)])
        except SystemExit as exc:
            assert exc.code == 0
    return base


class TestTraining:
    def test_train_then_eval(self, capsys, tiny_data, tmp_path):
        params = tmp_path / "p.json"
        code, out, err = run(capsys, "train", "--data", str(tiny_data / "sep"), "--data", str(tiny_data / "ent"),
                             "--ansatz", "sea", "--width", "3", "--depth", "2", "--iters", "5", "--batch", "8",
                             "--seed", "0", "--params-out", str(params))
        assert code == 0
        traj = rows(out)
        assert len(traj) == 5 and traj[0]["ansatz"] == "SEA"
        assert "test accuracy=" in err
        doc = json.loads(params.read_text())
        assert doc["n_target"] == 2 and len(doc["params"]) > 0
        code, out, _ = run(capsys, "eval", "--data", str(tiny_data / "sep"), "--data", str(tiny_data / "ent"),
                           "--params", str(params))
        assert code == 0
        assert 0 <= float(rows(out)[0]["f1"]) <= 1

    def test_train_deterministic(self, capsys, tiny_data):
        argv = ["train", "--data", str(tiny_data / "sep"), "--data", str(tiny_data / "ent"), "--ansatz", "HWE",
                "--width", "2", "--depth", "2", "--iters", "4", "--batch", "8", "--seed", "3"]
        assert run(capsys, *argv)[1] == run(capsys, *argv)[1]

    def test_single_class(self, capsys, tiny_data):
        code, _, err = run(capsys, "train", "--data", str(tiny_data / "sep"), "--ansatz", "HWE", "--width", "2",
                           "--depth", "1", "--seed", "0")
        assert code == 2 and err.startswith("error: dataset:")

    def test_bad_params_file(self, capsys, tiny_data, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{}")
        code, _, err = run(capsys, "eval", "--data", str(tiny_data / "sep"), "--params", str(bad))
        assert code == 2 and err.startswith("error: format:")


class TestReport:
    def test_fig2(self, capsys):
        code, out, _ = run(capsys, "report", "fig2")
        got = rows(out)
        assert code == 0 and len(got) == 2 * 4 * 201

    def test_seed_required(self, capsys):
        code, _, err = run(capsys, "report", "fig4")
        assert code == 2 and "--seed" in err

    def test_purity_survey(self, capsys):
        code, out, _ = run(capsys, "purity-survey", "--seed", "1", "--samples", "2", "--widths", "2",
                           "--depths", "1,2")
        assert code == 0 and len(rows(out)) == 3 * 2 * 2

    def test_fig6_and_fig7(self, capsys, tiny_data):
        common = ["--data", str(tiny_data / "sep"), "--data", str(tiny_data / "ent"), "--seed", "0", "--iters", "3",
                  "--batch", "8", "--kinds", "HWE", "--width-offsets", "0", "--depths", "1,2"]
        code, out, _ = run(capsys, "report", "fig6", *common)
        assert code == 0 and len(rows(out)) == 3
        code, out, _ = run(capsys, "report", "fig7", *common)
        got = rows(out)
        assert code == 0 and len(got) == 2 and {"mean_accuracy", "mean_f1"} <= set(got[0])

    def test_bad_int_list(self, capsys, tiny_data):
        code, _, err = run(capsys, "report", "fig7", "--data", str(tiny_data / "sep"), "--seed", "0",
                           "--depths", "a,b")
        assert code == 2 and err.startswith("error: usage:")
