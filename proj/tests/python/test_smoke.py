import json
import pathlib

import numpy as np
import pytest

import nflab

ROOT = pathlib.Path(__file__).resolve().parents[2]


def test_harmonic_spectrum():
    m = nflab.harmonic([0.5], [16])
    assert m.report_dim == 16
    assert m.buffer_dim >= 16
    n = np.arange(m.buffer_dim)
    np.testing.assert_allclose(m.k0_eigs, 2 * n + 1)
    np.testing.assert_allclose(m.h0_eigs, n + 0.5)


def test_average_commutes_with_k0():
    m = nflab.harmonic([0.5], [12])
    rng = np.random.default_rng(3)
    a = rng.normal(size=(m.buffer_dim,) * 2) + 1j * rng.normal(size=(m.buffer_dim,) * 2)
    a = a + a.conj().T
    avg = nflab.average(m, a)
    k0 = np.diag(m.k0_eigs)
    assert np.abs(k0 @ avg - avg @ k0).max() <= 1e-12
    # diagonal spectrum without degeneracy: the average is the diagonal part
    np.testing.assert_allclose(avg, np.diag(np.diag(a)), atol=1e-14)


def test_homological_identity():
    m = nflab.zoll(2, 10)
    x = nflab.position(nflab.harmonic([0.5], [10]))
    rng = np.random.default_rng(5)
    a = rng.normal(size=(m.buffer_dim,) * 2)
    a = a + a.T
    y, avg, absorbed = nflab.solve_k0(m, a)
    k0 = np.diag(m.k0_eigs)
    assert np.abs(1j * (k0 @ y - y @ k0) - (a - avg)).max() <= 1e-12
    assert absorbed == 0
    assert x.shape[0] == x.shape[1]


def test_bad_input_raises():
    with pytest.raises(nflab.InvalidInput):
        nflab.harmonic([0.5], [0])


def test_decompose_completely_resonant():
    d = nflab.decompose("1, 1, 1")
    assert d["nu_tilde"] == ["1"]
    assert d["rank"] == 2


def test_diophantine_sqrt2():
    r = nflab.diophantine("sqrt2", "1", 2.0, 50)
    assert r["gamma_hat"] == pytest.approx(1.0)


def test_minimal_run(tmp_path):
    manifest, code = nflab.run(str(ROOT / "configs" / "minimal.json"), out_dir=str(tmp_path))
    assert code == 0
    assert manifest["status"] == "ok"
    again = json.loads(next(tmp_path.glob("*.manifest.json")).read_text())
    assert again["model_hash"] == manifest["model_hash"]
    assert nflab.compare(manifest, again)["identical"]


def test_missing_model_is_reported():
    manifest, code = nflab.run({"perturbation": {"omega": 1}}, write_files=False)
    assert code == 2
    assert manifest["failure_stage"] == "config"


def test_selftest():
    lines = nflab.selftest(7)
    assert lines and all(ok for _, ok, _ in lines)
