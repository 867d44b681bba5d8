"""ObservationSet validation and the assembled linear Gaussian system."""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

# 添加 src 目录到路径
project_root = Path(__file__).resolve().parent.parent.parent
src_path = project_root / "src"
if str(src_path) not in sys.path:
    sys.path.insert(0, str(src_path))

from stfuse.exceptions import ConfigError
from stfuse.fusion import INSITU_ROW, SATELLITE_ROW, FusionModel, Hyperparams, ObservationSet, assemble
from stfuse.geometry.blocks import BlockSet, GridSpec
from stfuse.geometry.mesh import build_mesh

UNIT_SQUARE = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]
THETA = Hyperparams(tau_omega=1.0, kappa=2.0, rho=0.5, tau1=10.0, tau2=40.0)


def _obs(T: int = 2) -> ObservationSet:
    return ObservationSet(
        T=T,
        origin=(0.5, 0.5),
        insitu_site=[0, 1, 0],
        insitu_xy=[(0.25, 0.25), (0.75, 0.5), (0.25, 0.25)],
        insitu_t=[1, 1, 2],
        insitu_value=[1.0, 2.0, 3.0],
        sat_block=[0, 3, 1],
        sat_t=[1, 1, 2],
        sat_value=[0.5, 0.6, 0.7],
    )


def _setup():
    mesh = build_mesh(UNIT_SQUARE, 0.5)
    blocks = BlockSet.from_grid(GridSpec(0.0, 0.0, 0.5, 0.5, 2, 2))
    return mesh, blocks


def test_observation_validation() -> None:
    with pytest.raises(ConfigError):
        ObservationSet(T=2, origin=(0, 0), insitu_xy=[(0, 0)], insitu_t=[3], insitu_value=[1.0], insitu_site=[0])
    with pytest.raises(ConfigError):
        ObservationSet(T=2, origin=(0, 0), sat_block=[1, 1], sat_t=[1, 1], sat_value=[0.0, 1.0])
    with pytest.raises(ConfigError):
        ObservationSet(T=1, origin=(0, 0), sat_block=[1], sat_t=[1], sat_value=[np.nan])
    with pytest.raises(ConfigError):
        ObservationSet(T=1, origin=(0, 0), sat_block=[1], sat_t=[1], sat_value=[1.0], extra_names=("sst",))


def test_covariates_are_centred() -> None:
    obs = _obs()
    X = obs.insitu_covariates()
    assert obs.covariate_names == ["intercept", "x", "y"]
    assert np.allclose(X[0], [1.0, -0.25, -0.25])
    _, blocks = _setup()
    assert np.allclose(obs.satellite_covariates(blocks)[1], [1.0, 0.25, 0.25])


def test_fusion_system_layout() -> None:
    mesh, blocks = _setup()
    sys_ = assemble("fusion", _obs(), mesh, blocks, THETA)
    G, T = mesh.n_vertices, 2
    assert sys_.n_rows == 6
    assert sys_.n_latent == G * T + 4
    assert sys_.fixed_names == ["beta0", "beta1", "beta2", "a"]
    assert np.array_equal(sys_.row_group, [SATELLITE_ROW] * 3 + [INSITU_ROW] * 3)
    assert np.array_equal(sys_.z, [0.5, 0.6, 0.7, 1.0, 2.0, 3.0])
    assert np.array_equal(sys_.noise_prec, [10.0] * 3 + [40.0] * 3)

    H = sys_.H.toarray()
    A = H[:, : G * T]
    assert np.allclose(A.sum(axis=1), 1.0)
    # 第 2 天的卫星行只落在第 2 天的块上
    assert np.all(A[2, :G] == 0.0) and A[2, G:].sum() == pytest.approx(1.0)
    assert np.array_equal(H[:, sys_.fixed_index("a")], [1, 1, 1, 0, 0, 0])
    assert np.array_equal(H[:, sys_.fixed_index("beta0")], np.ones(6))


def test_single_source_systems() -> None:
    mesh, blocks = _setup()
    ins = assemble("insitu", _obs(), mesh, None, THETA.with_noise(tau2=40.0))
    assert ins.n_rows == 3 and not ins.has_bias
    sat = assemble("satellite", _obs(), mesh, blocks, THETA.with_noise(tau1=10.0))
    assert sat.n_rows == 3 and sat.fixed_names == ["beta0", "beta1", "beta2"]
    with pytest.raises(ConfigError):
        assemble("satellite", _obs(), mesh, None, THETA)
    with pytest.raises(ConfigError):
        assemble("fusion", _obs(), mesh, blocks, THETA.with_noise(tau2=40.0))


def test_prior_structure() -> None:
    mesh, blocks = _setup()
    model = FusionModel("fusion", _obs(), mesh, blocks, fixed_effect_sd=10.0)
    sys_ = model.system(THETA)
    P = sys_.prior.toarray()
    n = sys_.n_field
    assert np.allclose(P[:n, :n], sys_.field_prior.toarray())
    assert np.allclose(np.diag(P)[n:], 0.01)
    assert np.all(P[:n, n:] == 0.0)
    assert sys_.prior_logdet() == pytest.approx(np.linalg.slogdet(P)[1], rel=1e-9)


def test_restrict_and_missing_cells() -> None:
    _, blocks = _setup()
    obs = _obs()
    day1 = obs.restrict_days(1)
    assert day1.T == 2 and day1.n_insitu == 2 and day1.n_satellite == 2
    ids, ts = obs.missing_cells(blocks)
    assert list(zip(ids.tolist(), ts.tolist())) == [(1, 1), (2, 1), (0, 2), (2, 2), (3, 2)]
    assert obs.drop_satellite([0]).n_satellite == 2
    assert obs.last_observed_day() == 2
