"""按模拟研究的设定生成时空数据：潜在场、原位观测、卫星观测和留出真值。"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from stfuse.fusion.hyperparams import Hyperparams
from stfuse.fusion.observations import ObservationSet
from stfuse.geometry.blocks import BlockSet, GridSpec
from stfuse.geometry.mesh import Mesh, build_mesh
from stfuse.geometry.polygon import as_ring, default_domain, points_in_polygon, polygon_centroid, sample_in_polygon
from stfuse.geometry.projection import block_projection, point_projection
from stfuse.gmrf.sampling import GaussianConditional, sample_gmrf
from stfuse.model import ScenarioConfig
from stfuse.spde.fem import fem_matrices
from stfuse.spde.matern import convert_params, precision_spatial

logger = logging.getLogger(__name__)


@dataclass(eq=False)
class SimulatedData:
    """一次模拟的全部产物。

    ``field`` 是 (T, G) 的 ξ；``heldout_truth`` 是 (T, n_pred) 的 y(s_l, t)；
    ``vertex_truth`` 是 (T, G) 的 y 在网格顶点上的值（用于画真值图）。
    """

    config: ScenarioConfig
    domain: np.ndarray
    mesh: Mesh
    grid: GridSpec
    blocks: BlockSet
    theta: Hyperparams
    field: np.ndarray
    vertex_truth: np.ndarray
    obs: ObservationSet
    site_xy: np.ndarray
    heldout_xy: np.ndarray
    heldout_truth: np.ndarray

    @property
    def true_values(self) -> dict:
        """参数名 -> 真值，与拟合摘要里的名称一致。"""
        cfg = self.config
        values = {f"beta{i}": float(b) for i, b in enumerate(cfg.beta)}
        values.update(
            a=cfg.a,
            tau_omega=self.theta.tau_omega,
            kappa=cfg.kappa,
            rho=cfg.rho,
            tau1=cfg.tau1,
            tau2=cfg.tau2,
            sigma2_omega=cfg.sigma2_omega,
            range=self.theta.range,
        )
        if cfg.tau1 == cfg.tau2:
            values["tau_y"] = cfg.tau1
        return values


def scenario_grid(domain: np.ndarray, block_size: float) -> GridSpec:
    """覆盖区域包围盒的像元网格。"""
    xmin, ymin = domain.min(axis=0)
    xmax, ymax = domain.max(axis=0)
    nx = max(1, int(math.ceil((xmax - xmin) / block_size - 1e-9)))
    ny = max(1, int(math.ceil((ymax - ymin) / block_size - 1e-9)))
    return GridSpec(float(xmin), float(ymin), block_size, block_size, nx, ny)


def domain_blocks(grid: GridSpec, domain: np.ndarray) -> BlockSet:
    """只保留质心在区域内的像元（湖面像元）。"""
    all_blocks = BlockSet.from_grid(grid)
    inside = points_in_polygon(all_blocks.centroids(), domain)
    return BlockSet.from_grid(grid, keep=all_blocks.ids[inside].tolist())


def simulate_field(rng: np.random.Generator, Q_S, rho: float, T: int) -> np.ndarray:
    """ξ_1 取平稳分布（方差放大 1/(1-ρ²)），之后 ξ_t = ρ ξ_{t-1} + ω_t。"""
    innovations = sample_gmrf(GaussianConditional(np.zeros(Q_S.dim), Q_S), T, rng=rng)
    xi = np.empty_like(innovations)
    xi[0] = innovations[0] / math.sqrt(1.0 - rho * rho)
    for t in range(1, T):
        xi[t] = rho * xi[t - 1] + innovations[t]
    return xi


def simulate_scenario(cfg: ScenarioConfig) -> SimulatedData:
    """生成一次模拟数据，给定 ``cfg.seed`` 时结果确定。"""
    rng = np.random.default_rng(cfg.seed)
    domain = as_ring(cfg.domain) if cfg.domain is not None else default_domain()
    origin = polygon_centroid(domain)
    mesh = build_mesh(domain, cfg.max_edge_inner, cfg.outer_pad, cfg.max_edge_outer)
    grid = scenario_grid(domain, cfg.block_size)
    blocks = domain_blocks(grid, domain)

    spde = convert_params(cfg.kappa, cfg.sigma2_omega)
    theta = Hyperparams(tau_omega=spde.tau_omega, kappa=cfg.kappa, rho=cfg.rho, tau1=cfg.tau1, tau2=cfg.tau2)
    Q_S = precision_spatial(fem_matrices(mesh), cfg.kappa, spde.tau_omega)
    T = cfg.T
    xi = simulate_field(rng, Q_S, cfg.rho, T)
    beta = np.asarray(cfg.beta, dtype=float)

    def surface(xy):
        xy = np.asarray(xy, dtype=float).reshape(-1, 2)
        return np.column_stack([np.ones(len(xy)), xy - origin]) @ beta

    vertex_truth = surface(mesh.vertices)[None, :] + xi

    # 原位站点只抽一次，所有天共用
    sites = sample_in_polygon(rng, domain, cfg.n_insitu)
    A_site = point_projection(mesh, sites).matrix
    y_site = surface(sites)[None, :] + (A_site @ xi.T).T
    noise2 = 0.0 if cfg.noise_free else rng.standard_normal(y_site.shape) / math.sqrt(cfg.tau2)
    z2 = y_site + noise2

    A_blk = block_projection(mesh, blocks).matrix
    y_blk = surface(blocks.centroids())[None, :] + (A_blk @ xi.T).T
    noise1 = 0.0 if cfg.noise_free else rng.standard_normal(y_blk.shape) / math.sqrt(cfg.tau1)
    z1 = cfg.a + y_blk + noise1
    present = rng.random(y_blk.shape) >= cfg.missing_pct

    heldout = sample_in_polygon(rng, domain, cfg.n_pred)
    while np.any((heldout[:, None, :] == sites[None, :, :]).all(axis=2)):
        heldout = sample_in_polygon(rng, domain, cfg.n_pred)
    A_pred = point_projection(mesh, heldout).matrix
    heldout_truth = surface(heldout)[None, :] + (A_pred @ xi.T).T

    n = cfg.n_insitu
    t_idx, b_pos = np.nonzero(present)
    obs = ObservationSet(
        T=T,
        origin=origin,
        insitu_site=np.tile(np.arange(n), T),
        insitu_xy=np.tile(sites, (T, 1)),
        insitu_t=np.repeat(np.arange(1, T + 1), n),
        insitu_value=z2.ravel(),
        sat_block=blocks.ids[b_pos],
        sat_t=t_idx + 1,
        sat_value=z1[t_idx, b_pos],
    )
    logger.info(
        "simulated %d days: %d in situ rows, %d of %d satellite cells present",
        T,
        obs.n_insitu,
        obs.n_satellite,
        present.size,
    )
    return SimulatedData(
        config=cfg,
        domain=domain,
        mesh=mesh,
        grid=grid,
        blocks=blocks,
        theta=theta,
        field=xi,
        vertex_truth=vertex_truth,
        obs=obs,
        site_xy=sites,
        heldout_xy=heldout,
        heldout_truth=heldout_truth,
    )
