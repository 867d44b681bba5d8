"""Exact Gaussian marginalisation against dense oracles."""

from __future__ import annotations

import sys
from pathlib import Path
from typing import Optional

import numpy as np
import pytest
import scipy.sparse as sp
from scipy.stats import multivariate_normal, norm

# 添加 src 目录到路径
project_root = Path(__file__).resolve().parent.parent.parent
src_path = project_root / "src"
if str(src_path) not in sys.path:
    sys.path.insert(0, str(src_path))

from stfuse.exceptions import ConfigError
from stfuse.fusion import FusionModel, Hyperparams, ObservationSet
from stfuse.geometry.blocks import BlockSet, GridSpec
from stfuse.geometry.mesh import build_mesh
from stfuse.gmrf import SparseSym
from stfuse.inference import gaussian_log_evidence, gaussian_posterior, latent_posterior, log_marginal_likelihood

UNIT_SQUARE = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]
THETA = Hyperparams(tau_omega=1.0, kappa=2.0, rho=0.5, tau1=10.0, tau2=40.0)


def _model(obs: Optional[ObservationSet] = None) -> FusionModel:
    mesh = build_mesh(UNIT_SQUARE, 0.5)
    blocks = BlockSet.from_grid(GridSpec(0.0, 0.0, 0.5, 0.5, 2, 2))
    if obs is None:
        obs = ObservationSet(
            T=2,
            origin=(0.5, 0.5),
            insitu_site=[0, 1, 0, 1],
            insitu_xy=[(0.25, 0.25), (0.75, 0.6), (0.25, 0.25), (0.75, 0.6)],
            insitu_t=[1, 1, 2, 2],
            insitu_value=[1.0, 2.0, 1.4, 2.2],
            sat_block=[0, 3, 1, 2],
            sat_t=[1, 1, 2, 2],
            sat_value=[1.5, 2.6, 1.9, 2.1],
        )
    return FusionModel("fusion", obs, mesh, blocks, fixed_effect_sd=10.0)


def _dense_evidence(model: FusionModel, theta: Hyperparams) -> float:
    system = model.system(theta)
    H = system.H.toarray()
    cov = H @ np.linalg.inv(system.prior.toarray()) @ H.T + np.diag(1.0 / system.noise_prec)
    return float(multivariate_normal(np.zeros(len(system.z)), cov).logpdf(system.z))


def test_scalar_evidence() -> None:
    prior = SparseSym.from_matrix([[1.0]])
    value = gaussian_log_evidence(prior, [[1.0]], [1.0], [1.0])
    assert value == pytest.approx(norm.logpdf(1.0, 0.0, np.sqrt(2.0)), abs=1e-12)
    assert value == pytest.approx(-1.5155, abs=1e-4)


def test_posterior_matches_dense_formula() -> None:
    rng = np.random.default_rng(0)
    A = rng.standard_normal((6, 6))
    Q = A @ A.T + 6.0 * np.eye(6)
    H = rng.standard_normal((4, 6))
    gamma = np.array([1.0, 2.0, 0.5, 4.0])
    z = rng.standard_normal(4)

    post = gaussian_posterior(SparseSym.from_matrix(Q), H, gamma, z)
    P = Q + H.T @ np.diag(gamma) @ H
    assert np.allclose(post.precision.toarray(), P)
    assert np.allclose(post.mean, np.linalg.solve(P, H.T @ (gamma * z)))

    cov = H @ np.linalg.inv(Q) @ H.T + np.diag(1.0 / gamma)
    expected = multivariate_normal(np.zeros(4), cov).logpdf(z)
    assert gaussian_log_evidence(SparseSym.from_matrix(Q), H, gamma, z) == pytest.approx(expected, abs=1e-9)


def test_no_rows_returns_prior() -> None:
    prior = SparseSym.from_matrix(np.diag([2.0, 3.0]))
    post = gaussian_posterior(prior, np.zeros((0, 2)), np.zeros(0), np.zeros(0))
    assert post.precision is prior
    assert np.array_equal(post.mean, [0.0, 0.0])


def test_model_evidence_matches_dense_oracle() -> None:
    model = _model()
    assert log_marginal_likelihood(THETA, model) == pytest.approx(_dense_evidence(model, THETA), abs=1e-7)


def test_evidence_does_not_depend_on_evaluation_point() -> None:
    model = _model()
    system = model.system(THETA)
    cond = latent_posterior(system)
    rng = np.random.default_rng(1)
    reference = log_marginal_likelihood(None, system, posterior=cond)
    for _ in range(3):
        u = cond.mean + rng.standard_normal(system.n_latent)
        assert log_marginal_likelihood(None, system, at=u, posterior=cond) == pytest.approx(reference, abs=1e-7)


def test_missing_rows_are_marginalised() -> None:
    full = _model()
    drop = [1, 3]
    partial = _model(full.obs.drop_satellite(drop))

    system = full.system(THETA)
    H = system.H.toarray()
    cov = H @ np.linalg.inv(system.prior.toarray()) @ H.T + np.diag(1.0 / system.noise_prec)
    keep = np.setdiff1d(np.arange(len(system.z)), drop)
    expected = multivariate_normal(np.zeros(len(keep)), cov[np.ix_(keep, keep)]).logpdf(system.z[keep])
    assert log_marginal_likelihood(THETA, partial) == pytest.approx(expected, abs=1e-7)


def test_latent_posterior_from_model_needs_theta() -> None:
    with pytest.raises(ConfigError):
        latent_posterior(_model())


def _random_model(seed: int):
    """随机网格、天数、观测缺失模式和超参数，G·T ≤ 200。"""
    rng = np.random.default_rng(seed)
    pitch = [0.5, 1.0 / 3.0, 0.25][rng.integers(3)]
    pad = [0.0, 0.5][rng.integers(2)]
    mesh = build_mesh(UNIT_SQUARE, pitch, pad, max(pitch, 0.5) if pad else None)
    T = int(rng.integers(1, 5))
    n_cells = int(rng.integers(2, 4))
    side = 1.0 / n_cells
    blocks = BlockSet.from_grid(GridSpec(0.0, 0.0, side, side, n_cells, n_cells))

    ins_xy, ins_t, sat_block, sat_t = [], [], [], []
    for t in range(1, T + 1):
        for _ in range(int(rng.integers(1, 6))):
            ins_xy.append(rng.uniform(0.05, 0.95, size=2))
            ins_t.append(t)
        for b in range(len(blocks)):
            if (b == 0 and t == 1) or rng.random() < 0.6:
                sat_block.append(b)
                sat_t.append(t)
    obs = ObservationSet(
        T=T,
        origin=(0.5, 0.5),
        insitu_site=np.arange(len(ins_t)),
        insitu_xy=ins_xy,
        insitu_t=ins_t,
        insitu_value=rng.normal(1.0, 1.0, size=len(ins_t)),
        sat_block=sat_block,
        sat_t=sat_t,
        sat_value=rng.normal(1.5, 1.0, size=len(sat_t)),
    )
    kind = ("fusion", "insitu", "satellite")[seed % 3]
    theta = Hyperparams(
        tau_omega=float(np.exp(rng.uniform(-0.5, 0.5))),
        kappa=float(rng.uniform(1.0, 5.0)),
        rho=float(rng.uniform(-0.9, 0.9)),
        tau1=float(rng.uniform(5.0, 100.0)),
        tau2=float(rng.uniform(5.0, 100.0)),
    )
    model = FusionModel(kind, obs, mesh, blocks, fixed_effect_sd=float(rng.uniform(1.0, 20.0)))
    assert model.G * model.T <= 200
    return model, theta


@pytest.mark.parametrize("seed", range(25))
def test_random_models_match_dense_posterior(seed: int) -> None:
    model, theta = _random_model(seed)
    system = model.system(theta)
    H = system.H.toarray()
    Q = system.prior.toarray()
    gamma = system.noise_prec
    P = Q + H.T @ (gamma[:, None] * H)
    P_inv = np.linalg.inv(P)
    mean = P_inv @ (H.T @ (gamma * system.z))

    cond = latent_posterior(system)
    scale = np.abs(mean).max()
    assert np.allclose(cond.mean, mean, rtol=1e-8, atol=1e-8 * scale)
    variances = cond.linear_variance(sp.identity(system.n_latent, format="csr"))
    assert np.allclose(variances, np.diag(P_inv), rtol=1e-8, atol=0)
    assert log_marginal_likelihood(theta, model) == pytest.approx(_dense_evidence(model, theta), rel=1e-8)
