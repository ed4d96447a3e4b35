"""Instance generators: random graphs, metric similarities and the
augmentation / complement transformations used in hardness reductions."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import Instance, InstanceError


def _sym(upper: np.ndarray) -> np.ndarray:
    w = np.triu(upper, 1)
    return w + w.T


def random_instance(n: int, density: float, complementary: bool,
                    rng: np.random.Generator) -> Instance:
    """Each pair gets w^s ~ U[0, 1] with probability ``density``, else 0.

    With ``complementary`` the dissimilarity is ``1 - w^s`` on every pair;
    otherwise w^d is drawn independently by the same rule.
    """
    if not 0 <= density <= 1:
        raise ValueError(f"density must lie in [0, 1], got {density}")
    if n < 1:
        raise ValueError("n must be positive")

    def draw():
        present = rng.random((n, n)) < density
        return _sym(np.where(present, rng.random((n, n)), 0.0))

    sim = draw()
    if complementary:
        dis = 1.0 - sim
        np.fill_diagonal(dis, 0.0)
    else:
        dis = draw()
    return Instance(sim=sim, dis=dis)


def hccpm_instance(n: int, rng: np.random.Generator) -> Instance:
    """Complete graph with w^d = 1 - w^s on every pair."""
    return random_instance(n, 1.0, True, rng)


def gaussian(sigma: float) -> Callable[[np.ndarray], np.ndarray]:
    def g(d):
        return np.exp(-(np.asarray(d) ** 2) / sigma ** 2)
    g.__name__ = f"gaussian({sigma})"
    return g


def linear_ramp(d):
    return np.maximum(0.0, 1.0 - np.asarray(d, dtype=np.float64))


def inverse(d):
    return 1.0 / (1.0 + np.asarray(d, dtype=np.float64))


SIMILARITY_FUNCTIONS = {"linearRamp": linear_ramp, "inverse": inverse}


@dataclass
class MetricConfig:
    """Points (coordinates) or an explicit distance matrix plus a similarity g.

    ``doubling_dim`` and ``lipschitz`` are user-declared metadata; they only
    feed :func:`covering_constant`.
    """

    points: np.ndarray | None = None
    distances: np.ndarray | None = None
    similarity: Callable = linear_ramp
    normalize: bool = True
    doubling_dim: float | None = None
    lipschitz: float | None = None

    def distance_matrix(self) -> np.ndarray:
        if (self.points is None) == (self.distances is None):
            raise InstanceError("give exactly one of points or distances")
        if self.points is not None:
            pts = np.asarray(self.points, dtype=np.float64)
            if pts.ndim == 1:
                pts = pts[:, None]
            diff = pts[:, None, :] - pts[None, :, :]
            d = np.sqrt((diff ** 2).sum(-1))
        else:
            d = np.asarray(self.distances, dtype=np.float64)
            if d.ndim != 2 or d.shape[0] != d.shape[1]:
                raise InstanceError("distance matrix must be square")
            if not np.all(np.isfinite(d)) or d.min() < 0:
                raise InstanceError("distances must be finite and nonnegative")
            if not np.allclose(d, d.T) or np.any(np.diag(d) != 0):
                raise InstanceError("distance matrix must be symmetric with zero diagonal")
            viol = d[:, None, :] > d[:, :, None] + d[None, :, :] + 1e-9
            if viol.any():
                warnings.warn("distance matrix violates the triangle inequality",
                              RuntimeWarning, stacklevel=2)
        d = 0.5 * (d + d.T)
        if self.normalize and d.max() > 0:
            d = d / d.max()
        return d


def metric_instance(cfg: MetricConfig) -> Instance:
    """Similarity weights ``g(d_ij)`` on (optionally diameter-normalized) distances."""
    d = cfg.distance_matrix()
    w = np.clip(np.asarray(cfg.similarity(d), dtype=np.float64), 0.0, 1.0)
    np.fill_diagonal(w, 0.0)
    return Instance.similarity(0.5 * (w + w.T))


def covering_constant(cfg: MetricConfig) -> float:
    """``c = 2^(D(l+1)) / g(2^-l)`` from the declared doubling dimension D and
    Lipschitz constant l; bounds how much the metric shift can lose."""
    if cfg.doubling_dim is None or cfg.lipschitz is None:
        raise ValueError("covering constant needs doubling_dim and lipschitz metadata")
    ell = cfg.lipschitz
    g = float(np.asarray(cfg.similarity(np.array(2.0 ** (-ell)))))
    if g <= 0:
        return math.inf
    return 2.0 ** (cfg.doubling_dim * (ell + 1)) / g


def clique_augment(inst: Instance) -> Instance:
    """Append a disconnected unit-similarity clique of the same size."""
    n = inst.n
    sim = np.zeros((2 * n, 2 * n))
    sim[:n, :n] = inst.sim
    sim[n:, n:] = 1.0
    np.fill_diagonal(sim, 0.0)
    return Instance.similarity(sim)


def path_augment(inst: Instance, path_len: int | None = None) -> Instance:
    """Append a disconnected path of ``path_len`` points (default n^2) with unit edges."""
    n = inst.n
    m = n * n if path_len is None else int(path_len)
    if m < 1:
        raise ValueError("path length must be positive")
    sim = np.zeros((n + m, n + m))
    sim[:n, :n] = inst.sim
    idx = np.arange(n, n + m - 1)
    sim[idx, idx + 1] = sim[idx + 1, idx] = 1.0
    return Instance.similarity(sim)


def complement_instance(inst: Instance, source: str = "sim") -> Instance:
    """``w_c = 1 - w`` off the diagonal.

    The complement of the ``source`` channel lands on the other channel, so
    applying it twice (``source="dis"`` the second time) gives back the input.
    """
    w = 1.0 - inst.channel(source)
    np.fill_diagonal(w, 0.0)
    if source == "sim":
        return Instance.dissimilarity(w)
    return Instance.similarity(w)


def dasgupta_cost(inst: Instance, tree) -> float:
    """``sum w^s_ij |T_ij|`` (minimization objective; only used for identities)."""
    from .core import lca_size_table
    t = lca_size_table(tree, inst.n)
    iu = np.triu_indices(inst.n, 1)
    return float((inst.sim[iu] * t.sizes[iu]).sum())
