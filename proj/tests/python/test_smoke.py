import json
import os
import subprocess

import numpy as np
import pytest

import subtask_forge as sf


def rooms_spec(rows=2, cols=2, size=3):
    return json.dumps({"type": "rooms", "params": {"room_rows": rows, "room_cols": cols, "room_size": size}})


def test_build_small_rooms():
    doc = json.loads(sf.build_domain(rooms_spec()))
    assert doc["n_interior"] == 36
    assert sf.validate(json.dumps(doc)) == []


def test_solve_matches_basis_column():
    lmdp = sf.build_domain(rooms_spec())
    Z = sf.solve_task_basis(lmdp)
    q = np.full(36, 1e-12)
    q[7] = 1.0
    z = sf.solve(lmdp, q)
    np.testing.assert_allclose(z, Z[:, 7], rtol=1e-12)
    assert (Z > 0).all()


def test_nmf_rank_one_is_exact():
    rng = np.random.default_rng(3)
    Z = np.outer(rng.uniform(0.5, 2, 20), rng.uniform(0.5, 2, 15))
    f = sf.nmf(Z, 1, beta=1.0, seed=1, restarts=2)
    assert f["normalized_divergence"] < 1e-10
    np.testing.assert_allclose(f["D"].sum(axis=0), 1.0)


def test_elbow_examples():
    assert sf.elbow([10, 5, 4.9, 4.8]) == 2
    assert sf.elbow([1.0, 0.5]) is None


def test_purity_and_spread():
    D = np.array([[1.0, 0.0], [0.9, 0.1], [0.0, 1.0]])
    assert sf.assignment_purity(D, [0, 0, 1]) == 1.0
    assert sf.circular_spread(np.eye(8)[0]) == pytest.approx(0.0, abs=1e-7)


def test_invalid_spec_raises_value_error():
    with pytest.raises(ValueError):
        sf.build_domain(json.dumps({"type": "rooms", "params": {"room_size": -1}}))


def test_run_cli_exit_codes(tmp_path):
    spec = tmp_path / "spec.json"
    spec.write_text(rooms_spec())
    out = tmp_path / "dom.json"
    code, stdout, _ = sf.run_cli(["build", str(spec), str(out)])
    assert code == 0 and "n_interior=36" in stdout
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    code, _, err = sf.run_cli(["build", str(bad), str(tmp_path / "x.json")])
    assert code == 2 and err


@pytest.mark.skipif("SUBTASK_FORGE_TOOL" not in os.environ, reason="tool path not provided")
def test_tool_binary_version():
    res = subprocess.run([os.environ["SUBTASK_FORGE_TOOL"], "--version"], capture_output=True, text=True)
    assert res.returncode == 0
    assert sf.__version__ in res.stdout
