"""Contingency screening: composite security index and Lasso filtering.

The composite index aggregates voltage and flow crossings of the security
limits, scaled by the alarm bands, into one scalar: 0 is secure, values
in (0, 1] are an alarm state, values above 1 are insecure.  A Lasso
regression trained on simulated outage data predicts the index from the
outage identity (one-hot) and the control vector, so the critical
contingency set can be re-filtered cheaply for every candidate operating
point: insecure AC lines plus, always, all DC lines.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.stats import qmc

from . import opfcore
from .netmodel import Contingency, ControlSpace, Network, apply_contingency
from .powerflow import SystemState

log = logging.getLogger(__name__)

PI_MAX = 10.0                  # severity sentinel for divergent flows
MODEL_SCHEMA_VERSION = "screening-model/1"


@dataclass
class SecurityIndexParams:
    """Voltage/flow security and alarm limits with the severity exponent."""

    n: int = 2
    h_min: np.ndarray = None   # per-bus voltage security limits
    h_max: np.ndarray = None
    a_min: np.ndarray = None   # per-bus voltage alarm limits
    a_max: np.ndarray = None
    p_secure: np.ndarray = None    # per-branch flow security limits
    p_alarm: np.ndarray = None

    @classmethod
    def from_network(cls, net: Network, n: int = 2) -> "SecurityIndexParams":
        return cls(
            n=n,
            h_min=np.array([b.h_min for b in net.buses]),
            h_max=np.array([b.h_max for b in net.buses]),
            a_min=np.array([b.a_min for b in net.buses]),
            a_max=np.array([b.a_max for b in net.buses]),
            p_secure=np.array([br.p_secure for br in net.branches]),
            p_alarm=np.array([br.p_alarm for br in net.branches]),
        )


def composite_index(state: SystemState, params: SecurityIndexParams,
                    *, flagged_ok: bool = True) -> float:
    """Composite security index of a solved state; 0 when nothing crosses
    a security limit.

    An unconverged state is treated as maximal severity and returns the
    ``PI_MAX`` sentinel (callers that need the distinction should check
    ``state.converged`` themselves, or pass ``flagged_ok=False`` to get a
    ``ValueError``).
    """
    if not state.converged:
        if not flagged_ok:
            raise ValueError("composite index of an unconverged state")
        return PI_MAX
    n2 = 2 * params.n
    vm = state.ac.vm
    over = vm > params.h_max
    under = vm < params.h_min
    q_hi = np.where(over, (vm - params.h_max)
                    / (params.a_max - params.h_max), 0.0)
    q_lo = np.where(under, (params.h_min - vm)
                    / (params.h_min - params.a_min), 0.0)
    flow = np.abs(state.ac.p_branch)
    q_p = np.where(flow > params.p_secure,
                   (flow - params.p_secure)
                   / (params.p_alarm - params.p_secure), 0.0)
    total = (np.sum(q_hi ** n2) + np.sum(q_lo ** n2) + np.sum(q_p ** n2))
    return float(total ** (1.0 / n2))


def classify(pi_value: float) -> str:
    if pi_value > 1.0:
        return "insecure"
    if pi_value > 0.0:
        return "alarm"
    return "secure"


def prediction_error(pi_pred: float, pi_exact: float) -> float | None:
    """Relative prediction error in percent; None when undefined."""
    if pi_exact == 0:
        return None
    return (pi_pred - pi_exact) / pi_exact * 100.0


# ---------------------------------------------------------------------------
# Training data


@dataclass
class SamplerConfig:
    """Latin-hypercube sampling box for training controls.

    ``width`` is the per-component half-width as a fraction of the full
    control range, centred on the case defaults; ``per_kind`` overrides
    it for a control kind (droop slopes in particular have a declared
    range far wider than their useful scale); ``full_box`` ignores the
    centre and spans the declared bounds.
    """

    width: float = 0.005
    per_kind: dict = field(default_factory=lambda: {"droop": 0.0005})
    full_box: bool = False
    seed: int = 0


@dataclass
class TrainingSet:
    x: np.ndarray                       # one row per (sample, AC outage)
    y: np.ndarray                       # exact composite index per row
    feature_names: list[str]
    row_outage: list[str]               # outage id per row
    row_sample: np.ndarray              # control-sample index per row
    controls: np.ndarray                # the sampled control vectors
    flagged: np.ndarray                 # rows whose flow diverged (sentinel)


def sample_controls(space: ControlSpace, cfg: SamplerConfig,
                    n_samples: int) -> np.ndarray:
    """Latin-hypercube control samples snapped onto discrete grids."""
    sampler = qmc.LatinHypercube(d=len(space), seed=cfg.seed)
    unit = sampler.random(n=n_samples)
    if cfg.full_box:
        lo, hi = space.lo, space.hi
    else:
        centre = space.default_vector()
        width = np.array([cfg.per_kind.get(kind, cfg.width)
                          for kind in space.kinds])
        half = width * (space.hi - space.lo)
        lo = np.maximum(space.lo, centre - half)
        hi = np.minimum(space.hi, centre + half)
    raw = lo + unit * (hi - lo)
    return np.vstack([space.snap(row)[0] for row in raw])


def feature_names_for(net: Network, space: ControlSpace) -> list[str]:
    return ([f"outage:{k.branch_id}" for k in net.contingencies]
            + list(space.names))


def encode_row(net: Network, space: ControlSpace, u: np.ndarray,
               outage_id: str) -> np.ndarray:
    one_hot = np.zeros(len(net.contingencies))
    for i, k in enumerate(net.contingencies):
        if k.branch_id == outage_id:
            one_hot[i] = 1.0
            break
    else:
        raise KeyError(f"unknown contingency id {outage_id!r}")
    return np.concatenate([one_hot, u])


def build_training_set(net: Network, sampler: SamplerConfig,
                       n_samples: int, *,
                       params: SecurityIndexParams | None = None,
                       map_fn=map) -> TrainingSet:
    """Simulate every AC-line outage at LHS-sampled control points.

    Each row pairs an outage one-hot with the control vector; the
    response is the exact post-contingency composite index (divergent
    flows get the severity sentinel and are flagged).  ``map_fn`` lets a
    caller fan the (sample, outage) evaluations out over workers.
    """
    space = ControlSpace(net)
    params = params or SecurityIndexParams.from_network(net)
    controls = sample_controls(space, sampler, n_samples)
    ac_outages = [k for k in net.contingencies if k.kind == "ac_line"]
    nets_k = {k.branch_id: apply_contingency(net, k) for k in ac_outages}

    tasks = [(si, k.branch_id) for si in range(n_samples) for k in ac_outages]

    def run(task):
        si, kid = task
        res = opfcore.evaluate(nets_k[kid], space, controls[si])
        post_params = SecurityIndexParams(
            n=params.n, h_min=params.h_min, h_max=params.h_max,
            a_min=params.a_min, a_max=params.a_max,
            p_secure=np.array([br.p_secure for br in nets_k[kid].branches]),
            p_alarm=np.array([br.p_alarm for br in nets_k[kid].branches]))
        pi_value = composite_index(res.state, post_params)
        return pi_value, not res.state.converged

    results = list(map_fn(run, tasks))
    rows = np.vstack([encode_row(net, space, controls[si], kid)
                      for si, kid in tasks])
    y = np.array([r[0] for r in results])
    flagged = np.array([r[1] for r in results], dtype=bool)
    return TrainingSet(
        x=rows, y=y, feature_names=feature_names_for(net, space),
        row_outage=[kid for _, kid in tasks],
        row_sample=np.array([si for si, _ in tasks]),
        controls=controls, flagged=flagged)


# ---------------------------------------------------------------------------
# Lasso (cyclic coordinate descent)


def lasso_fit(x: np.ndarray, y: np.ndarray, lam: float, *,
              tol: float = 1e-7, max_sweeps: int = 10000,
              sigma0: np.ndarray | None = None) -> np.ndarray:
    """Minimize ``(1/N)*||y - X sigma||^2 + lam * sum|sigma|``.

    Cyclic coordinate descent with exact soft-threshold updates; expects
    standardized (or at least well-scaled) columns.  Iterates until the
    largest coordinate update is below ``tol``.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim != 2 or y.ndim != 1 or x.shape[0] != y.shape[0]:
        raise ValueError(f"dimension mismatch: X {x.shape}, y {y.shape}")
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    n, p = x.shape
    col_sq = np.einsum("ij,ij->j", x, x)
    sigma = np.zeros(p) if sigma0 is None else sigma0.astype(float).copy()
    resid = y - x @ sigma
    thresh = lam * n / 2.0
    for _ in range(max_sweeps):
        max_delta = 0.0
        for j in range(p):
            if col_sq[j] <= 0:
                continue
            old = sigma[j]
            rho = x[:, j] @ resid + col_sq[j] * old
            new = math_soft(rho, thresh) / col_sq[j]
            if new != old:
                resid += x[:, j] * (old - new)
                sigma[j] = new
                max_delta = max(max_delta, abs(new - old))
        if max_delta <= tol:
            break
    return sigma


def math_soft(value: float, threshold: float) -> float:
    # the relative guard keeps coefficients exactly zero at the all-zero
    # penalty boundary despite rounding in the threshold product
    guard = threshold * (1.0 + 1e-12)
    if value > guard:
        return value - threshold
    if value < -guard:
        return value + threshold
    return 0.0


def lasso_objective(x, y, sigma, lam) -> float:
    r = y - x @ sigma
    return float(r @ r / len(y) + lam * np.sum(np.abs(sigma)))


def lasso_kkt_violation(x, y, sigma, lam) -> float:
    """Largest violation of the subgradient optimality conditions."""
    n = len(y)
    grad = 2.0 / n * (x.T @ (x @ sigma - y))
    worst = 0.0
    for j in range(len(sigma)):
        if sigma[j] > 0:
            worst = max(worst, abs(grad[j] + lam))
        elif sigma[j] < 0:
            worst = max(worst, abs(grad[j] - lam))
        else:
            worst = max(worst, max(0.0, abs(grad[j]) - lam))
    return worst


def lambda_max(x: np.ndarray, y: np.ndarray) -> float:
    """Smallest penalty at which the all-zero coefficient vector is optimal."""
    return float(2.0 / len(y) * np.max(np.abs(x.T @ y)))


# ---------------------------------------------------------------------------
# Model wrapper: standardization, cross-validation, prediction


@dataclass
class ScreeningModel:
    """Trained predictor mapping (outage, control vector) to the index."""

    feature_names: list[str]
    sigma: np.ndarray          # coefficients on standardized features
    lam: float
    x_mean: np.ndarray
    x_scale: np.ndarray        # 1.0 for dropped (constant) columns
    active: np.ndarray         # mask of non-constant columns
    y_mean: float
    n_obs: int
    cv_table: list[tuple[float, float]] = field(default_factory=list)
    fingerprint: str = ""

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    def predict_row(self, row: np.ndarray) -> float:
        z = (row - self.x_mean) / self.x_scale
        value = self.y_mean + float(z[self.active] @ self.sigma[self.active])
        return max(value, 0.0)

    def predict(self, net: Network, space: ControlSpace, u: np.ndarray,
                k: Contingency) -> float:
        row = encode_row(net, space, u, k.branch_id)
        return self.predict_row(row)

    def to_dict(self) -> dict:
        return {
            "version": MODEL_SCHEMA_VERSION,
            "feature_names": self.feature_names,
            "sigma": self.sigma.tolist(),
            "lambda": self.lam,
            "x_mean": self.x_mean.tolist(),
            "x_scale": self.x_scale.tolist(),
            "active": self.active.astype(int).tolist(),
            "y_mean": self.y_mean,
            "n_obs": self.n_obs,
            "cv_table": [[l, s] for l, s in self.cv_table],
            "fingerprint": self.fingerprint,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ScreeningModel":
        if d.get("version") != MODEL_SCHEMA_VERSION:
            raise ValueError(f"unsupported model version {d.get('version')!r}")
        return cls(
            feature_names=list(d["feature_names"]),
            sigma=np.array(d["sigma"]),
            lam=float(d["lambda"]),
            x_mean=np.array(d["x_mean"]),
            x_scale=np.array(d["x_scale"]),
            active=np.array(d["active"], dtype=bool),
            y_mean=float(d["y_mean"]),
            n_obs=int(d["n_obs"]),
            cv_table=[(float(l), float(s)) for l, s in d.get("cv_table", [])],
            fingerprint=d.get("fingerprint", ""),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), sort_keys=True,
                                         indent=1) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "ScreeningModel":
        return cls.from_dict(json.loads(Path(path).read_text()))


def model_fingerprint(net: Network, space: ControlSpace) -> str:
    import hashlib
    payload = json.dumps([net.name,
                          [k.branch_id for k in net.contingencies],
                          space.names]).encode()
    return hashlib.sha256(payload).hexdigest()[:16]


def standardize(x: np.ndarray):
    mean = x.mean(axis=0)
    scale = x.std(axis=0)
    active = scale > 1e-12
    safe = np.where(active, scale, 1.0)
    return (x - mean) / safe, mean, safe, active


def fit_screening_model(net: Network, train: TrainingSet, *,
                        lam: float | None = None, folds: int = 5,
                        grid_size: int = 30, lam_min_factor: float = 1e-4,
                        seed: int = 0,
                        drop_flagged: bool = False) -> ScreeningModel:
    """Standardize, cross-validate the penalty and fit the final model.

    The penalty is chosen by k-fold cross-validation over a log grid
    below the smallest all-zero penalty; ties prefer the sparser model.
    Sentinel rows stay in the regression by default (their outage
    intercepts absorb them, which keeps divergent outages ranked on
    top); pass ``drop_flagged=True`` to exclude them.
    """
    x_fit, y_fit = train.x, train.y
    if drop_flagged and train.flagged.any():
        keep = ~train.flagged
        x_fit, y_fit = train.x[keep], train.y[keep]
    z, mean, scale, active = standardize(x_fit)
    y_mean = float(y_fit.mean())
    y_c = y_fit - y_mean
    za = z[:, active]

    cv_table: list[tuple[float, float]] = []
    if lam is None:
        lmax = lambda_max(za, y_c)
        grid = np.geomspace(lam_min_factor * lmax, lmax, grid_size)[::-1]
        rng = np.random.default_rng(seed)
        order = rng.permutation(len(y_c))
        fold_ids = np.array_split(order, folds)
        scores = np.zeros(grid_size)
        for fi, test_idx in enumerate(fold_ids):
            mask = np.ones(len(y_c), dtype=bool)
            mask[test_idx] = False
            sigma_warm = None
            for gi, lam_g in enumerate(grid):
                sigma_warm = lasso_fit(za[mask], y_c[mask], lam_g,
                                       sigma0=sigma_warm)
                pred = za[test_idx] @ sigma_warm
                scores[gi] += float(np.mean((pred - y_c[test_idx]) ** 2))
        scores /= folds
        cv_table = [(float(l), float(s)) for l, s in zip(grid, scores)]
        best = int(np.argmin(scores))
        # prefer the largest penalty within half a percent of the best score
        for gi in range(best + 1):
            if scores[gi] <= scores[best] * 1.005:
                best = gi
                break
        lam = float(grid[best])

    sigma_a = lasso_fit(za, y_c, lam)
    sigma = np.zeros(train.x.shape[1])
    sigma[active] = sigma_a
    space = ControlSpace(net)
    return ScreeningModel(
        feature_names=train.feature_names, sigma=sigma, lam=float(lam),
        x_mean=mean, x_scale=scale, active=active, y_mean=y_mean,
        n_obs=len(y_fit), cv_table=cv_table,
        fingerprint=model_fingerprint(net, space))


def lasso_predict(model: ScreeningModel, net: Network, space: ControlSpace,
                  u: np.ndarray, k: Contingency) -> float:
    """Predicted composite index, clamped below at zero."""
    return model.predict(net, space, u, k)


# ---------------------------------------------------------------------------
# Ranking and filtering


@dataclass
class RankedContingencies:
    entries: list[tuple[Contingency, float, str]]   # sorted desc by index
    critical: list[Contingency]                     # the filtered set

    def labels(self) -> list[str]:
        return [k.label for k in self.critical]


def rank_contingencies(model: ScreeningModel, net: Network,
                       space: ControlSpace, u: np.ndarray
                       ) -> RankedContingencies:
    """Predict severity per AC outage, sort descending, classify, filter."""
    entries = []
    for k in net.contingencies:
        if k.kind != "ac_line":
            continue
        pred = model.predict(net, space, u, k)
        entries.append((k, pred, classify(pred)))
    entries.sort(key=lambda e: (-e[1], e[0].branch_id))
    critical = [k for k, pred, cls in entries if cls == "insecure"]
    critical += [k for k in net.contingencies if k.kind == "dc_line"]
    return RankedContingencies(entries=entries, critical=critical)


def filter_contingencies(model: ScreeningModel, net: Network,
                         space: ControlSpace, u: np.ndarray
                         ) -> list[Contingency]:
    """Critical set: predicted-insecure AC lines plus all DC lines."""
    return rank_contingencies(model, net, space, u).critical
