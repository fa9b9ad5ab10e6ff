"""Monte Carlo checks of the rank identities behind the alignment scheme.

Each check samples independent complex Gaussian matrices, measures a
subspace dimension numerically, and tallies how often it misses the claimed
value.  The identities hold with probability one, so failures are counted,
never raised; desk-scale acceptance expects zero.  Offending trial indices
are recorded for replay.

Trial seeds derive from the master seed via
``numpy.random.SeedSequence(seed).spawn(trials)``; trial ``i`` feeds child
``i`` into a Philox generator.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from math import comb
from itertools import combinations

import numpy as np
from scipy.linalg import block_diag

from . import dof
from .errors import InvalidLemmaParams
from .linalg import DEFAULT_TOL, Tolerance, intersection_basis, nullspace_basis, numerical_rank, union_span_dim

__all__ = [
    "LemmaId",
    "LemmaTrialResult",
    "check_intersection",
    "check_stacked_rank",
    "check_direct_sum",
    "check_scaling",
    "default_battery",
]


class LemmaId(str, Enum):
    INTERSECTION = "intersection"
    STACKED_RANK = "stacked_rank"
    DIRECT_SUM = "direct_sum"
    SCALING = "scaling"


@dataclass
class LemmaTrialResult:
    lemma_id: LemmaId
    params: dict
    trials: int
    failures: int
    expected_value: int
    observed: Counter = field(default_factory=Counter)
    failure_trials: list[int] = field(default_factory=list)


def _trial_rngs(seed: int, trials: int) -> list[np.random.Generator]:
    children = np.random.SeedSequence(seed).spawn(trials)
    return [np.random.Generator(np.random.Philox(c)) for c in children]


def _draw(rng: np.random.Generator, rows: int, cols: int, extension: int = 1) -> np.ndarray:
    blocks = [
        (rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols)))
        / np.sqrt(2.0)
        for _ in range(extension)
    ]
    return block_diag(*blocks).astype(np.complex128)


def _tally(result: LemmaTrialResult, trial: int, observed: int) -> None:
    result.observed[observed] += 1
    if observed != result.expected_value:
        result.failures += 1
        result.failure_trials.append(trial)


def check_intersection(m: int, n: int, trials: int, seed: int,
                       tol: Tolerance = DEFAULT_TOL) -> LemmaTrialResult:
    """Intersection of two random M-dim subspaces of C^N has dim (2M-N)+."""
    if m > n:
        raise InvalidLemmaParams(f"need M <= N, got M={m}, N={n}")
    result = LemmaTrialResult(
        LemmaId.INTERSECTION, {"m": m, "n": n}, trials, 0, max(2 * m - n, 0)
    )
    for trial, rng in enumerate(_trial_rngs(seed, trials)):
        a = _draw(rng, n, m)
        b = _draw(rng, n, m)
        _tally(result, trial, intersection_basis(a, b, tol).shape[1])
    return result


def check_stacked_rank(k: int, m: int, n: int, trials: int, seed: int,
                       tol: Tolerance = DEFAULT_TOL) -> LemmaTrialResult:
    """Rank of [A_1 U_1, ..., A_K U_K] is min((K-1)(KM-N), N).

    ``U`` is a nullspace basis of the horizontal stack ``[A_1 .. A_K]``,
    partitioned into per-user row blocks ``U_i``.
    """
    if m > n or k * m <= n:
        raise InvalidLemmaParams(f"need M <= N < KM, got K={k}, M={m}, N={n}")
    expected = min((k - 1) * (k * m - n), n)
    result = LemmaTrialResult(
        LemmaId.STACKED_RANK, {"k": k, "m": m, "n": n}, trials, 0, expected
    )
    for trial, rng in enumerate(_trial_rngs(seed, trials)):
        mats = [_draw(rng, n, m) for _ in range(k)]
        basis = nullspace_basis(np.hstack(mats), tol)
        pieces = [mats[i] @ basis[i * m:(i + 1) * m, :] for i in range(k)]
        _tally(result, trial, numerical_rank(np.hstack(pieces), tol))
    return result


def check_direct_sum(k: int, t: int, m: int, n: int, trials: int, seed: int,
                     extension: int = 1,
                     tol: Tolerance = DEFAULT_TOL) -> LemmaTrialResult:
    """Group-wise aligned spans sum to dim min(J(t-1)(tM-N), N), J = C(K, t).

    With ``extension > 1`` the matrices are block-diagonal extended and the
    formula scales by the extension factor on both sides.
    """
    if t > k or t < 2:
        raise InvalidLemmaParams(f"need 2 <= t <= K, got t={t}, K={k}")
    if t * m <= n:
        raise InvalidLemmaParams(f"need tM > N, got t={t}, M={m}, N={n}")
    j = comb(k, t)
    expected = extension * min(j * (t - 1) * (t * m - n), n)
    result = LemmaTrialResult(
        LemmaId.DIRECT_SUM,
        {"k": k, "t": t, "m": m, "n": n, "extension": extension},
        trials, 0, expected,
    )
    mt = m * extension
    for trial, rng in enumerate(_trial_rngs(seed, trials)):
        mats = [_draw(rng, n, m, extension) for _ in range(k)]
        pieces = []
        for group in combinations(range(k), t):
            basis = nullspace_basis(np.hstack([mats[g] for g in group]), tol)
            pieces.extend(
                mats[g] @ basis[i * mt:(i + 1) * mt, :] for i, g in enumerate(group)
            )
        _tally(result, trial, union_span_dim(pieces, tol))
    return result


def check_scaling(k: int, grid, sigmas) -> LemmaTrialResult:
    """Exact check that the achievable DoF scales linearly in (M, N)."""
    points = list(grid)
    scales = list(sigmas)
    result = LemmaTrialResult(
        LemmaId.SCALING,
        {"k": k, "points": len(points), "sigmas": scales},
        len(points) * len(scales), 0, 1,
    )
    trial = 0
    for m, n in points:
        for sigma in scales:
            ok = dof.scaling_check(m, n, sigma, k)
            _tally(result, trial, 1 if ok else 0)
            trial += 1
    return result


# Built-in parameter grid for the command-line battery.
DEFAULT_INTERSECTION_GRID = [(3, 5), (2, 5), (4, 4)]
DEFAULT_STACKED_GRID = [(3, 2, 4), (3, 3, 4), (4, 2, 7)]
DEFAULT_DIRECT_SUM_GRID = [(4, 3, 3, 8, 1), (4, 3, 7, 20, 1), (3, 3, 2, 5, 2)]
DEFAULT_SCALING = {
    "k": [3, 4],
    "grid": [(m, n) for m in range(1, 9) for n in range(1, 17)],
    "sigmas": [2, 3, 5],
}


def default_battery(trials: int, seed: int,
                    tol: Tolerance = DEFAULT_TOL) -> list[LemmaTrialResult]:
    """Run every check over the built-in grids."""
    results = []
    for i, (m, n) in enumerate(DEFAULT_INTERSECTION_GRID):
        results.append(check_intersection(m, n, trials, seed + i, tol))
    for i, (k, m, n) in enumerate(DEFAULT_STACKED_GRID):
        results.append(check_stacked_rank(k, m, n, trials, seed + 100 + i, tol))
    for i, (k, t, m, n, ext) in enumerate(DEFAULT_DIRECT_SUM_GRID):
        results.append(check_direct_sum(k, t, m, n, trials, seed + 200 + i, ext, tol))
    for k in DEFAULT_SCALING["k"]:
        results.append(check_scaling(k, DEFAULT_SCALING["grid"], DEFAULT_SCALING["sigmas"]))
    return results
