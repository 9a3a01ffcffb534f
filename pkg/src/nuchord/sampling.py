"""
Boundary grids and adaptive extremum search.

Every supremum and infimum in the package is computed here: a grid on the
boundary parameter theta is doubled until the polished extremum estimates of
two successive passes agree within the instance's sup tolerance.
"""

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional

import numpy as np
from scipy.optimize import minimize_scalar

from .exceptions import NoConvergence, ConfigurationError
from .logging import get_logger
from .types import AlgebraInstance, Domain, ThetaFunction

THREADS_ENV_VAR = "NU_CHORD_THREADS"

# Below this many samples the pool overhead dominates.
_PARALLEL_THRESHOLD = 1 << 15

_thread_count: Optional[int] = None

logger = get_logger({"component": "sampling"})


def set_thread_count(threads: Optional[int]) -> None:
    """Set the worker cap for grid evaluation (None restores the default)."""
    global _thread_count
    if threads is not None and threads < 1:
        raise ConfigurationError("thread count must be at least 1", {"threads": threads})
    _thread_count = threads


def threads_from_environment() -> Optional[int]:
    """
    Parse NU_CHORD_THREADS, or None when it is unset or empty.

    Raises:
        ConfigurationError: The value is not a positive integer
    """
    env_value = os.getenv(THREADS_ENV_VAR)
    if not env_value:
        return None
    try:
        threads = int(env_value)
    except ValueError:
        raise ConfigurationError(f"{THREADS_ENV_VAR} must be an integer, got: {env_value}", {"value": env_value})
    if threads <= 0:
        raise ConfigurationError(f"{THREADS_ENV_VAR} must be greater than 0", {"value": env_value})
    return threads


def thread_count() -> int:
    """Worker cap: NU_CHORD_THREADS wins over the configured value."""
    env_threads = threads_from_environment()
    if env_threads is not None:
        return env_threads
    if _thread_count is not None:
        return _thread_count
    return min(4, os.cpu_count() or 1)


def evaluate_parallel(func: ThetaFunction, thetas: np.ndarray) -> np.ndarray:
    """
    Evaluate an elementwise function on a grid, chunked over a thread pool.

    Chunks are concatenated in grid order, so the result does not depend on
    the number of workers.
    """
    workers = thread_count()
    if workers <= 1 or thetas.size < _PARALLEL_THRESHOLD:
        return func(thetas)
    chunks = np.array_split(thetas, workers)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(func, chunks))
    return np.concatenate(parts)


def wrap_theta(theta: np.ndarray) -> np.ndarray:
    """Map angles into (-pi, pi]."""
    wrapped = np.mod(np.asarray(theta, dtype=float) + math.pi, 2.0 * math.pi) - math.pi
    wrapped[wrapped == -math.pi] = math.pi
    return wrapped


def uniform_thetas(size: int) -> np.ndarray:
    """Uniform grid on (-pi, pi] ending exactly at pi."""
    thetas = -math.pi + 2.0 * math.pi * np.arange(1, size + 1) / size
    thetas[-1] = math.pi
    return thetas


def window_thetas(instance: AlgebraInstance, size: int, max_delay: float) -> np.ndarray:
    """
    Grid for half-plane expressions carrying delays.

    Union of a tan-grid restricted to |omega| <= W (dense near omega = 0) and a
    uniform omega-grid on [-W, W] resolving oscillations of the largest delay.
    theta = pi is excluded because delayed terms have no limit at infinity.
    """
    window = instance.ap_window
    theta_w = 2.0 * math.atan(window)
    tan_part = -theta_w + 2.0 * theta_w * np.arange(size + 1) / size
    level = max(0, int(round(math.log2(size / instance.grid.initial_size))))
    base = math.ceil(instance.ap_grid_density * 2.0 * window * max_delay)
    ap_size = min(base << level, 4 * instance.grid.max_size)
    omegas = np.linspace(-window, window, max(ap_size, 2) + 1)
    return np.unique(np.concatenate([tan_part, 2.0 * np.arctan(omegas)]))


def boundary_grid(instance: AlgebraInstance, size: int, max_delay: float = 0.0) -> np.ndarray:
    """
    Boundary grid of the requested base size for an instance.

    Args:
        instance: Algebra instance
        size: Base number of samples
        max_delay: Largest |delay| of the expression to be sampled

    Returns:
        Strictly increasing thetas in (-pi, pi]
    """
    if instance.domain is Domain.HALF_PLANE and max_delay > 0:
        return window_thetas(instance, size, max_delay)
    return uniform_thetas(size)


@dataclass(frozen=True)
class Extremum:
    """
    Result of an adaptive sup/inf search.

    Attributes:
        value: Extremal value of the sampled real function
        theta: Boundary parameter where it is attained
        grid_size: Number of samples on the final pass
        achieved_tol: Difference between the last two polished estimates
    """
    value: float
    theta: float
    grid_size: int
    achieved_tol: float


def _local_maxima(values: np.ndarray, circular: bool) -> np.ndarray:
    """Indices of samples not smaller than both neighbours."""
    if values.size < 3:
        return np.arange(values.size)
    if circular:
        left = np.roll(values, 1)
        right = np.roll(values, -1)
    else:
        left = np.concatenate([[-np.inf], values[:-1]])
        right = np.concatenate([values[1:], [-np.inf]])
    return np.flatnonzero((values >= left) & (values >= right))


def _polish(
    func: ThetaFunction,
    thetas: np.ndarray,
    values: np.ndarray,
    candidates: int,
    circular: bool,
) -> tuple[float, float]:
    """Refine the best local maxima of a sampled function with a bounded scalar search."""
    peaks = _local_maxima(values, circular)
    order = peaks[np.argsort(-values[peaks], kind="stable")][:candidates]
    best_value = float(values[order[0]])
    best_theta = float(thetas[order[0]])
    n = thetas.size

    def scalar(t: float) -> float:
        return -float(func(wrap_theta(np.array([t])))[0])

    for j in order:
        if circular:
            left = thetas[j - 1] - (2.0 * math.pi if j == 0 else 0.0)
            right = thetas[(j + 1) % n] + (2.0 * math.pi if j == n - 1 else 0.0)
        else:
            left = thetas[max(j - 1, 0)]
            right = thetas[min(j + 1, n - 1)]
        if right <= left:
            continue
        result = minimize_scalar(scalar, bounds=(left, right), method="bounded", options={"xatol": 1e-13})
        if -result.fun > best_value:
            best_value = float(-result.fun)
            best_theta = float(wrap_theta(np.array([result.x]))[0])
    return best_value, best_theta


def adaptive_extremum(
    func: ThetaFunction,
    instance: AlgebraInstance,
    mode: str = "max",
    max_delay: float = 0.0,
    label: str = "sup",
) -> Extremum:
    """
    Adaptive supremum or infimum of a real function of the boundary parameter.

    The grid doubles from instance.grid.initial_size; on each pass the best
    local candidates are polished, and the search stops once two successive
    polished estimates agree within instance.tolerances.sup_tol, relative to
    the estimate once it exceeds 1.

    Args:
        func: Vectorized map thetas -> real values
        instance: Algebra instance supplying grids and tolerances
        mode: "max" or "min"
        max_delay: Largest |delay| present in func (selects the windowed grid)
        label: Name used in log records

    Returns:
        Extremum estimate with grid size and achieved tolerance

    Raises:
        NoConvergence: If max grid size is reached without agreement
    """
    if mode not in ("max", "min"):
        raise ValueError(f"mode must be 'max' or 'min', got {mode!r}")
    sign = 1.0 if mode == "max" else -1.0

    def signed(thetas: np.ndarray) -> np.ndarray:
        return sign * np.asarray(func(thetas), dtype=float)

    circular = not (instance.domain is Domain.HALF_PLANE and max_delay > 0)
    tol = instance.tolerances.sup_tol
    size = instance.grid.initial_size
    history: List[float] = []

    while size <= instance.grid.max_size:
        thetas = boundary_grid(instance, size, max_delay)
        values = evaluate_parallel(signed, thetas)
        estimate, theta = _polish(signed, thetas, values, instance.grid.polish_candidates, circular)
        delta = abs(estimate - history[-1]) if history else None
        logger.log_refinement(label, thetas.size, sign * estimate, delta)
        if delta is not None and delta <= tol * max(1.0, abs(estimate)):
            return Extremum(sign * estimate, theta, int(thetas.size), delta)
        history.append(estimate)
        size *= 2

    raise NoConvergence(
        f"{label} estimate did not settle within the grid budget",
        {
            "label": label,
            "max_grid": instance.grid.max_size,
            "last_estimates": [sign * e for e in history[-3:]],
            "sup_tol": tol,
        },
    )
