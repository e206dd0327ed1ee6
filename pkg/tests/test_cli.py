import io
import json
import subprocess
import sys

import numpy as np
import pytest

from conftest import RHO_EX, RHO_EX_S1
from entanglia import apps, channels, cli
from entanglia.schmidt import schmidt_rank
from entanglia.sknorm import expectation
from entanglia.tensor import max_entangled, swap_operator


def _write(path, x, m=None, n=None):
    x = np.asarray(x)
    if x.ndim == 1:
        x = x.reshape(-1, 1)
    d = {"re": np.real(x).tolist(), "im": np.imag(x).tolist()}
    if m is not None:
        d["m"], d["n"] = m, n
    path.write_text(json.dumps(d))
    return str(path)


def _run(argv):
    out = io.StringIO()
    code = cli.run(argv, out)
    text = out.getvalue()
    return code, (json.loads(text) if text else None), text


def _vector(obj):
    if isinstance(obj, dict):
        return np.asarray(obj["re"]) + 1j * np.asarray(obj["im"])
    return np.asarray(obj)


@pytest.fixture
def files(tmp_path):
    rng = np.random.default_rng(4)
    g = rng.standard_normal((9, 9)) + 1j * rng.standard_normal((9, 9))
    return {
        "rho": _write(tmp_path / "rho.json", RHO_EX, 2, 2),
        "swap": _write(tmp_path / "swap.json", swap_operator(2), 2, 2),
        "swap3": _write(tmp_path / "swap3.json", swap_operator(3), 3, 3),
        "psi": _write(tmp_path / "psi.json", max_entangled(2), 2, 2),
        "psd": _write(tmp_path / "psd.json", g @ g.conj().T / np.trace(g @ g.conj().T).real, 3, 3),
        "dep": _write(tmp_path / "dep.json", channels.depolarizing(2, 0.3).choi, 2, 2),
        "bad": str(tmp_path / "missing.json"),
    }


def test_schmidt_example(files):
    code, rep, _ = _run(["schmidt", files["psi"]])
    assert code == cli.EXIT_OK
    assert np.allclose(rep["results"]["coefficients"], [0.70710678, 0.70710678])


def test_dps_example(files):
    code, rep, _ = _run(["op-norm", files["rho"], "--k", "1", "--method", "dps", "--s", "1", "--ppt"])
    assert code == cli.EXIT_OK
    assert rep["results"]["upper"] == pytest.approx(RHO_EX_S1, abs=1e-6)


def test_werner_example():
    code, rep, _ = _run(["werner", "--n", "3", "--alpha", "0.5", "--k", "1"])
    assert code == cli.EXIT_OK
    r = rep["results"]
    assert r["closed_form"] == pytest.approx(0.1333, abs=1e-4)
    assert r["sdp_upper"]["transpose"] == pytest.approx(r["closed_form"], abs=1e-6)
    assert r["consistent"]


def test_report_fields_and_round_trip(files):
    code, rep, text = _run(["op-norm", files["psd"], "--k", "2", "--seed", "11"])
    assert code == cli.EXIT_OK
    for key in ("command", "args", "inputs_digest", "seed", "results", "methods", "timing"):
        assert key in rep
    assert rep["seed"] == 11
    assert cli.dumps(cli.loads(text)) == text


def test_float_serialisation_lossless():
    rng = np.random.default_rng(0)
    vals = list(rng.standard_normal(200) * 10.0 ** rng.integers(-20, 20, 200))
    back = cli.loads(cli.dumps({"v": vals}))["v"]
    assert back == vals


def test_deterministic_reports(files):
    def strip(rep):
        rep = dict(rep)
        rep.pop("timing")
        return rep
    a = _run(["op-norm", files["psd"], "--k", "1", "--seed", "3"])[1]
    b = _run(["op-norm", files["psd"], "--k", "1", "--seed", "3"])[1]
    assert cli.dumps(strip(a)) == cli.dumps(strip(b))


def test_env_seed(files, monkeypatch):
    monkeypatch.setenv("ENTANGLIA_SEED", "17")
    assert _run(["op-norm", files["psd"], "--method", "seesaw"])[1]["seed"] == 17
    monkeypatch.setenv("ENTANGLIA_SEED", "x")
    assert _run(["op-norm", files["psd"]])[0] == cli.EXIT_INPUT


def test_witness_self_verification(files):
    x = cli.read_matrix_file(files["psd"])
    code, rep, _ = _run(["op-norm", files["psd"], "--k", "1"])
    r = rep["results"]
    w = _vector(r["witness"])
    assert expectation(x["array"], w) == pytest.approx(r["witness_value"], abs=1e-9)
    assert r["lower"] <= r["upper"] + 1e-9


def test_block_positive_exit_codes(files):
    code, rep, _ = _run(["block-positive", files["swap"], "--k", "1"])
    assert code == cli.EXIT_OK and rep["results"]["verdict"] == "KBlockPositive"
    code, rep, _ = _run(["block-positive", files["swap3"], "--k", "2"])
    assert code == cli.EXIT_DETECTED
    assert rep["results"]["verdict"] == "NotKBlockPositive"
    s = swap_operator(3)
    for v in rep["results"]["verdicts"]:
        if v["witness"] is not None:
            w = _vector(v["witness"])
            assert expectation(s, w) < 0 and schmidt_rank(w, 3, 3) <= 2


def test_detection_exit_codes(files):
    psi = files["psi"]
    code, rep, _ = _run(["realign-test", files["rho"], "--k", "1"])
    assert code in (cli.EXIT_OK, cli.EXIT_DETECTED)
    rho_psi = np.outer(max_entangled(2), max_entangled(2))
    path = files["rho"].replace("rho.json", "bell.json")
    import pathlib
    _write(pathlib.Path(path), rho_psi, 2, 2)
    code, rep, _ = _run(["realign-test", path])
    assert code == cli.EXIT_DETECTED
    code, rep, _ = _run(["reduction-test", path])
    assert code == cli.EXIT_DETECTED
    code, rep, _ = _run(["reduction-test", path, "--k", "2"])
    assert code == cli.EXIT_OK


def test_bound_ent(files):
    code, rep, _ = _run(["bound-ent", "--n", "8", "--r", "2", "--alpha", "2/7"])
    assert code == cli.EXIT_OK
    assert rep["results"]["rank"] == apps.bound_proj_rank(8, 2)
    code, rep, text = _run(["bound-ent", "--n", "4", "--r", "2", "--alpha", "1/2"])
    assert "inapplicable" in text
    code, _, _ = _run(["bound-ent", "--n", "4", "--r", "1", "--verify"])
    assert code == cli.EXIT_OK


def test_gate_fidelity_and_purity(files):
    code, rep, _ = _run(["gate-fidelity", files["dep"]])
    assert code == cli.EXIT_OK
    assert rep["results"]["lower"] == pytest.approx(0.85, abs=1e-7)
    assert rep["results"]["upper"] == pytest.approx(0.85, abs=1e-7)
    code, rep, _ = _run(["output-purity", files["dep"], "--k", "1"])
    assert code == cli.EXIT_OK
    cb = rep["results"]["cb"]
    assert cb["choi_route"] == pytest.approx(cb["complementary_route"], abs=1e-9)


def test_channel_and_geometric(files, tmp_path):
    code, rep, _ = _run(["channel", files["dep"], "--to-kraus", "--check-tp", "--complementary", "--to-choi"])
    assert code == cli.EXIT_OK
    assert rep["results"]["trace_preserving"] is True
    ghz = np.zeros(8)
    ghz[[0, 7]] = 2 ** -0.5
    path = _write(tmp_path / "ghz.json", ghz)
    code, rep, _ = _run(["geom-measure", path, "--dims", "2", "2", "2"])
    assert code == cli.EXIT_OK
    assert rep["results"]["lower"] == pytest.approx(0.5, abs=1e-6)
    assert rep["results"]["upper"] == pytest.approx(0.5, abs=1e-6)


def test_input_errors(files, tmp_path):
    assert _run(["schmidt", files["bad"]])[0] == cli.EXIT_INPUT
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert _run(["schmidt", str(bad)])[0] == cli.EXIT_INPUT
    shape = tmp_path / "shape.json"
    shape.write_text(json.dumps({"m": 2, "n": 2, "re": [[1, 0], [0, 1]], "im": [[0, 0], [0, 0]]}))
    assert _run(["op-norm", str(shape)])[0] == cli.EXIT_INPUT
    assert _run(["op-norm", files["rho"], "--k", "5"])[0] == cli.EXIT_INPUT
    assert _run(["nonsense"])[0] == cli.EXIT_INPUT
    assert _run(["op-norm", files["rho"], "--threads", "0"])[0] == cli.EXIT_INPUT


def test_console_entry_point(files):
    proc = subprocess.run([sys.executable, "-m", "entanglia", "vec-norm", files["psi"]],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["results"]["value"] == pytest.approx(2 ** -0.5)
