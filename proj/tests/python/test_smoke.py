import json
import math
import os

import numpy as np
import pytest

import zklab


@pytest.fixture(scope="module")
def lab():
    return zklab.Lab(os.environ.get("ZK_PROFILE_CACHE", ""), os.environ.get("ZK_TABLE_CACHE", ""))


def test_version():
    assert zklab.__version__


def test_k0_matches_scipy():
    special = pytest.importorskip("scipy.special")
    for r in (0.5, 2.0, 7.5, 20.0):
        assert math.isclose(zklab.bessel_k0(r), special.k0(r), rel_tol=1e-12)
        assert math.isclose(zklab.bessel_k0(r, 1), -special.k1(r), rel_tol=1e-12)


def test_ground_state(lab):
    q0 = lab.q0
    assert q0 == lab.Q(0.0)
    assert 2.0 < q0 < 3.0
    assert lab.Q(0.0, 1) == pytest.approx(0.0, abs=1e-12)
    # Q decreases and stays positive
    rs = np.linspace(0.0, 20.0, 81)
    qs = np.array([lab.Q(r) for r in rs])
    assert np.all(qs > 0) and np.all(np.diff(qs) < 0)
    c = lab.constants()
    assert c["int_q"] == pytest.approx(2.0 * c["lam_q_q"], rel=1e-6)


def test_distance_ode(lab):
    for z0 in (8.0, 12.0):
        assert lab.z0_from_mu0(lab.mu0_from_z0(z0)) == pytest.approx(z0, abs=1e-8)
    t, z, zd = lab.trajectory(10.0, 40.0)
    t, z, zd = map(np.asarray, (t, z, zd))
    assert z.min() == pytest.approx(10.0, abs=1e-12)
    assert np.allclose(z, z[::-1], atol=1e-12)
    assert lab.F(10.0) > lab.F(12.0) > 0.0


def test_soliton_field_and_invariants(lab):
    g = zklab.Grid(24.0, 24.0, 256, 256)
    q = lab.soliton(g)
    assert q.shape == (256, 256)
    assert q.max() == pytest.approx(lab.q0, rel=1e-12)
    inv = zklab.invariants(g, q)
    assert inv["mean"] == pytest.approx(lab.constants()["int_q"], rel=1e-6)
    # the ground state is steady (the run starts from the dealiased data)
    q_start = zklab.evolve(g, q, 0.02, 0)
    q1 = zklab.evolve(g, q, 0.02, 25)
    assert np.abs(q1 - q_start).max() < 1e-6
    with pytest.raises(ValueError):
        zklab.invariants(g, q[:10])
    with pytest.raises(zklab.BoxTooSmallError):
        lab.soliton(zklab.Grid(8.0, 8.0, 64, 64))


def test_cli_round_trip(tmp_path):
    out = zklab.run("--out", str(tmp_path), "interaction", "table", "--zmin", "6", "--zmax", "8", "--step", "1")
    assert isinstance(out, str)
    meta = json.loads((tmp_path / "interaction.json").read_text())
    assert meta["experiment"] == "interaction"
    code, _, err = zklab.cli(["--set", "rho=0.5", "z-ode"])
    assert code == 2 and "rho" in err
