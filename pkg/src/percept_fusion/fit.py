"""Maximum-likelihood fitting of observer models to trial records.

The optimizer is scipy's non-adaptive Nelder-Mead (reflection 1, expansion
2, contraction 0.5, shrink 0.5) run in a transformed space from Latin
hypercube starting points.
"""

from __future__ import annotations

import dataclasses
import enum
import json
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy.optimize import minimize
from scipy.stats import qmc

from .core import (
    FitFailureError,
    InvalidParameterError,
    PerceptFusionError,
    parallel_map,
)
from .paradigms.observers import ObserverModel
from .paradigms.records import TrialRecord

PROB_FLOOR = 1e-6
SIMPLEX_TOL = 1e-4
MAX_EVALS = 10_000
_MASK64 = (1 << 64) - 1


class Transform(str, enum.Enum):
    IDENTITY = "identity"
    LOG = "log"


@dataclass(frozen=True)
class ParamSpace:
    names: tuple[str, ...]
    lower: tuple[float, ...]
    upper: tuple[float, ...]
    transforms: Optional[tuple[Transform, ...]] = None

    def __post_init__(self):
        n = len(self.names)
        transforms = self.transforms or (Transform.IDENTITY,) * n
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "lower", tuple(float(x) for x in self.lower))
        object.__setattr__(self, "upper", tuple(float(x) for x in self.upper))
        object.__setattr__(self, "transforms", tuple(Transform(t) for t in transforms))
        if n == 0 or not (len(self.lower) == len(self.upper) == len(self.transforms) == n):
            raise InvalidParameterError("names, bounds and transforms must have one entry per parameter")
        for name, lo, hi, t in zip(self.names, self.lower, self.upper, self.transforms):
            if not lo < hi:
                raise InvalidParameterError(f"{name}: lower bound must be below upper bound")
            if t is Transform.LOG and not lo > 0:
                raise InvalidParameterError(f"{name}: log transform needs a positive lower bound")

    @property
    def dim(self) -> int:
        return len(self.names)

    def to_internal(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.array([math.log(v) if t is Transform.LOG else v for v, t in zip(x, self.transforms)])

    def from_internal(self, u) -> np.ndarray:
        x = np.array([math.exp(v) if t is Transform.LOG else v for v, t in zip(u, self.transforms)])
        # exp/log round trips can step a hair outside the box
        return np.clip(x, self.lower, self.upper)

    @property
    def internal_bounds(self) -> list[tuple[float, float]]:
        return list(zip(self.to_internal(self.lower), self.to_internal(self.upper)))

    def as_dict(self, x) -> dict:
        return {n: float(v) for n, v in zip(self.names, x)}

    def to_json(self) -> dict:
        return {
            "names": list(self.names),
            "lower": list(self.lower),
            "upper": list(self.upper),
            "transforms": [t.value for t in self.transforms],
        }


Family = Union[ObserverModel, Callable[[dict], ObserverModel]]


def build_observer(family: Family, params: dict) -> ObserverModel:
    """A template observer gets its fields replaced; a callable is called."""
    if isinstance(family, ObserverModel):
        return dataclasses.replace(family, **params)
    return family(params)


def nll(observer: ObserverModel, data: Sequence[TrialRecord], floor: float = PROB_FLOOR) -> float:
    """Negative log-likelihood of the observed responses.

    Predicted probabilities are computed once per distinct trial spec and
    floored at ``floor``. The sum uses ``math.fsum`` so the value does not
    depend on record order.
    """
    if not data:
        raise InvalidParameterError("nll needs at least one record")
    tallies = Counter((r.spec, r.response) for r in data)
    cache: dict = {}
    terms = []
    for (spec, response), n in tallies.items():
        if spec not in cache:
            cache[spec] = observer.response_probabilities(spec)
        p = cache[spec].get(response, 0.0)
        terms.append(-n * math.log(max(p, floor)))
    return math.fsum(terms)


@dataclass
class FitResult:
    best_params: np.ndarray
    nll: float
    n_evals: int
    converged: bool
    seed: int
    space: Optional[ParamSpace] = None
    restarts: list = field(default_factory=list)

    @property
    def params(self) -> dict:
        names = self.space.names if self.space else [f"p{i}" for i in range(len(self.best_params))]
        return {n: float(v) for n, v in zip(names, self.best_params)}

    @property
    def n_params(self) -> int:
        return len(self.best_params)

    def to_json(self) -> dict:
        return {
            "best_params": self.params,
            "nll": self.nll,
            "n_evals": self.n_evals,
            "converged": self.converged,
            "seed": self.seed,
            "space": self.space.to_json() if self.space else None,
            "restarts": self.restarts,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n"


def latin_hypercube_starts(space: ParamSpace, n: int, seed: int) -> np.ndarray:
    """``n`` starting points in internal coordinates.

    The first is the centre of the box and the other ``n - 1`` form a Latin
    hypercube, so the start sets are nested: more restarts never do worse.
    """
    bounds = np.array(space.internal_bounds)
    centre = bounds.mean(axis=1)[None, :]
    if n <= 1:
        return centre[:n]
    # qmc spawns child generators, which needs a SeedSequence-backed generator
    sampler = qmc.LatinHypercube(d=space.dim, rng=np.random.default_rng(int(seed) & _MASK64))
    return np.vstack([centre, qmc.scale(sampler.random(n - 1), bounds[:, 0], bounds[:, 1])])


def minimize_bounded(
    objective: Callable[[np.ndarray], float],
    space: ParamSpace,
    n_restarts: int = 4,
    seed: int = 0,
    max_evals: int = MAX_EVALS,
) -> FitResult:
    """Multi-start Nelder-Mead over ``space``.

    ``objective`` receives natural-scale parameter vectors. Evaluations that
    raise a library error or return a non-finite value count as +inf.
    """
    if n_restarts < 1:
        raise InvalidParameterError("n_restarts must be >= 1")
    bounds = space.internal_bounds

    def f(u):
        try:
            value = float(objective(space.from_internal(u)))
        except PerceptFusionError:
            return math.inf
        return value if math.isfinite(value) else math.inf

    def run(u0):
        if not math.isfinite(f(u0)):
            return None
        res = minimize(
            f,
            u0,
            method="Nelder-Mead",
            bounds=bounds,
            options={"xatol": SIMPLEX_TOL, "fatol": math.inf, "maxfev": max_evals, "adaptive": False},
        )
        return res

    results = parallel_map(run, list(latin_hypercube_starts(space, n_restarts, seed)))
    good = [r for r in results if r is not None and math.isfinite(r.fun)]
    if not good:
        raise FitFailureError("no starting point produced a finite objective")
    best = min(good, key=lambda r: r.fun)
    return FitResult(
        best_params=space.from_internal(best.x),
        nll=float(best.fun),
        n_evals=int(sum(r.nfev for r in results if r is not None)),
        converged=bool(best.status == 0),
        seed=int(seed),
        space=space,
        restarts=[None if r is None else {"nll": float(r.fun), "n_evals": int(r.nfev)} for r in results],
    )


def fit_mle(
    family: Family,
    data: Sequence[TrialRecord],
    space: ParamSpace,
    n_restarts: int = 4,
    seed: int = 0,
) -> FitResult:
    if not data:
        raise InvalidParameterError("cannot fit an empty dataset")
    data = list(data)

    def objective(x):
        return nll(build_observer(family, space.as_dict(x)), data)

    return minimize_bounded(objective, space, n_restarts, seed)


@dataclass(frozen=True)
class ModelScore:
    index: int
    aic: float
    n_params: int


def aic(nll_value: float, n_params: int) -> float:
    return 2.0 * n_params + 2.0 * nll_value


def compare_models(fits: Sequence[FitResult], n_params: Sequence[int], n_data: int) -> list[ModelScore]:
    """Rank fits by AIC, lowest first; ties go to the model with fewer parameters.

    ``n_data`` is only checked, since AIC does not use it.
    """
    if len(fits) != len(n_params):
        raise InvalidParameterError("need one parameter count per fit")
    if n_data < 1:
        raise InvalidParameterError("n_data must be >= 1")
    scores = [ModelScore(i, aic(f.nll, k), k) for i, (f, k) in enumerate(zip(fits, n_params))]
    return sorted(scores, key=lambda s: (s.aic, s.n_params, s.index))
