"""Decision analysis on the final archive.

Fuzzy C-means splits the trade-off front into clusters (two by default,
one per objective emphasis); grey relational projection then scores each
cluster's members against positive and negative ideal references, and the
highest-scoring member of each cluster is reported as that cluster's best
compromise solution.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

log = logging.getLogger(__name__)


@dataclass
class FcmResult:
    memberships: np.ndarray    # 1-per-row soft assignments, rows sum to 1
    centers: np.ndarray
    fuzziness: float
    loss: float
    iterations: int
    loss_history: list[float]


def _kmeanspp_init(points: np.ndarray, n_clusters: int,
                   rng: np.random.Generator) -> np.ndarray:
    centers = [points[rng.integers(len(points))]]
    while len(centers) < n_clusters:
        d2 = np.min([np.sum((points - c) ** 2, axis=1) for c in centers],
                    axis=0)
        total = d2.sum()
        if total <= 0:
            centers.append(points[rng.integers(len(points))])
            continue
        centers.append(points[rng.choice(len(points), p=d2 / total)])
    return np.array(centers)


def fcm_cluster(points: np.ndarray, n_clusters: int = 2, fuzziness: float = 2.0,
                seed: int = 0, *, tol: float = 1e-9,
                max_iter: int = 300) -> FcmResult:
    """Fuzzy C-means with alternating membership/center updates.

    Memberships of each point sum to one; a point coinciding with a
    center receives hard membership there.  Stops when the loss change
    falls below ``tol``.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    n = len(points)
    if n < n_clusters:
        raise ValueError(f"{n} points cannot form {n_clusters} clusters")
    if fuzziness <= 1:
        raise ValueError("fuzziness must exceed 1")
    rng = np.random.default_rng(seed)
    centers = _kmeanspp_init(points, n_clusters, rng)

    exponent = 2.0 / (fuzziness - 1.0)
    loss_prev = np.inf
    loss = np.inf
    history: list[float] = []
    mu = np.full((n, n_clusters), 1.0 / n_clusters)
    it = 0
    for it in range(1, max_iter + 1):
        d2 = np.sum((points[:, None, :] - centers[None, :, :]) ** 2, axis=2)
        zero = d2 < 1e-24
        mu = np.empty((n, n_clusters))
        for i in range(n):
            if np.any(zero[i]):
                mu[i] = 0.0
                mu[i, np.argmax(zero[i])] = 1.0
            else:
                ratio = (d2[i][:, None] / d2[i][None, :]) ** (exponent / 2.0)
                mu[i] = 1.0 / ratio.sum(axis=1)
        w = mu ** fuzziness
        centers = (w.T @ points) / w.sum(axis=0)[:, None]
        loss = float(np.sum(w * d2))
        history.append(loss)
        if abs(loss_prev - loss) <= tol:
            break
        loss_prev = loss
    return FcmResult(memberships=mu, centers=centers, fuzziness=fuzziness,
                     loss=loss, iterations=it, loss_history=history)


# ---------------------------------------------------------------------------
# Grey relational projection


@dataclass
class GrpRanking:
    d: np.ndarray              # priority membership per solution, in [0, 1]
    v_plus: np.ndarray
    v_minus: np.ndarray
    v_zero: float
    gamma_plus: np.ndarray
    gamma_minus: np.ndarray
    weights: np.ndarray
    resolution: float


def grp_rank(points: np.ndarray, weights=(0.5, 0.5), *,
             resolution: float = 0.5) -> GrpRanking:
    """Priority membership of each solution within one cluster.

    Objectives (minimized) are min-max normalized within the cluster; a
    constant objective gets a unit denominator so all its coefficients
    tie.  Grey relational coefficients against the componentwise best
    and worst are projected with squared-weight projection, and
    ``d = (V0-V-)^2 / ((V0-V-)^2 + (V0-V+)^2)`` scores each solution.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.size == 0:
        raise ValueError("empty cluster")
    weights = np.asarray(weights, dtype=float)
    if np.any(weights <= 0):
        raise ValueError("weights must be positive")

    lo = points.min(axis=0)
    span = points.max(axis=0) - lo
    denom = np.where(span > 0, span, 1.0)
    # benefit orientation: 1 is best because objectives are minimized
    z = (points.max(axis=0) - points) / denom

    z_best = z.max(axis=0)
    z_worst = z.min(axis=0)

    def coefficients(reference: np.ndarray) -> np.ndarray:
        delta = np.abs(z - reference)
        d_max = delta.max()
        if d_max <= 0:
            return np.ones_like(delta)
        d_min = delta.min()
        return (d_min + resolution * d_max) / (delta + resolution * d_max)

    gamma_plus = coefficients(z_best)
    gamma_minus = coefficients(z_worst)

    proj = weights ** 2 / np.sqrt(np.sum(weights ** 2))
    v_plus = gamma_plus @ proj
    v_minus = gamma_minus @ proj
    v_zero = float(np.sum(proj))

    num = (v_zero - v_minus) ** 2
    den = num + (v_zero - v_plus) ** 2
    d = np.where(den > 0, num / np.where(den > 0, den, 1.0), 0.5)
    return GrpRanking(d=d, v_plus=v_plus, v_minus=v_minus, v_zero=v_zero,
                      gamma_plus=gamma_plus, gamma_minus=gamma_minus,
                      weights=weights, resolution=resolution)


# ---------------------------------------------------------------------------
# Best compromise selection


@dataclass
class BcsSelection:
    cluster: int
    member_index: int          # index into the archive member list
    d: float
    memberships: np.ndarray    # FCM membership row of the chosen member


def select_bcs(objectives: np.ndarray, n_clusters: int = 2,
               weights=(0.5, 0.5), seed: int = 0) -> list[BcsSelection]:
    """Cluster the archive objectives and pick each cluster's highest-d
    member (ties broken by lower first objective).

    Archives smaller than the cluster count fall back to a single
    cluster with a warning.
    """
    objectives = np.atleast_2d(np.asarray(objectives, dtype=float))
    n = len(objectives)
    if n == 0:
        raise ValueError("empty archive")
    if n < n_clusters:
        log.warning("archive of %d smaller than %d clusters; using one",
                    n, n_clusters)
        n_clusters = 1

    lo = objectives.min(axis=0)
    span = objectives.max(axis=0) - lo
    norm = (objectives - lo) / np.where(span > 0, span, 1.0)
    if n_clusters == 1:
        fcm = FcmResult(memberships=np.ones((n, 1)), centers=norm.mean(
            axis=0, keepdims=True), fuzziness=2.0, loss=0.0, iterations=0,
            loss_history=[])
    else:
        fcm = fcm_cluster(norm, n_clusters=n_clusters, seed=seed)
    assignment = np.argmax(fcm.memberships, axis=1)

    selections: list[BcsSelection] = []
    for c in range(n_clusters):
        idx = np.flatnonzero(assignment == c)
        if idx.size == 0:
            log.warning("cluster %d is empty; skipped", c)
            continue
        ranking = grp_rank(objectives[idx], weights=weights)
        best_d = ranking.d.max()
        tied = idx[np.abs(ranking.d - best_d) < 1e-15]
        chosen = int(tied[np.argmin(objectives[tied, 0])])
        selections.append(BcsSelection(
            cluster=c, member_index=chosen,
            d=float(best_d), memberships=fcm.memberships[chosen]))
    return selections
