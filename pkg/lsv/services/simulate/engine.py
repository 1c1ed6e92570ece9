"""
Path simulation engine
Euler discretisation of the LSV system with square-root variance handling.

Noise is counter-based: paths are grouped in fixed chunks of CHUNK_PATHS and
chunk c draws from Philox keyed by (seed, c). Every step consumes a full
(2, CHUNK_PATHS) block, so the noise of a path depends only on
(seed, path index, step index, component) and never on the worker count
or on n_paths.
"""
from __future__ import annotations

import enum
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterator, List, Optional, Tuple

import numpy as np

from lsv.conf import get_setting
from lsv.exceptions import DomainError, SimulationError
from lsv.services.model import ModelSpec, evaluate

logger = logging.getLogger(__name__)

SEED_MASK = (1 << 64) - 1


class Scheme(str, enum.Enum):
    EULER_FULL_TRUNCATION = "euler_full_truncation"
    EULER_REFLECTION = "euler_reflection"

    @property
    def scheme_id(self) -> int:
        return SCHEME_IDS[self]

    @classmethod
    def from_id(cls, scheme_id: int) -> "Scheme":
        for scheme, sid in SCHEME_IDS.items():
            if sid == scheme_id:
                return scheme
        raise DomainError(f"Unknown scheme id {scheme_id}")


SCHEME_IDS = {Scheme.EULER_FULL_TRUNCATION: 1, Scheme.EULER_REFLECTION: 2}

KEEP_FULL = "full"
KEEP_TERMINAL = "terminal"


def default_steps(T: float) -> int:
    """400 steps up to T = 1, linear in T beyond."""
    return int(math.ceil(400 * max(1.0, T)))


@dataclass(frozen=True, eq=False)
class PathBatch:
    """
    Simulated (X, V) paths. With keep="terminal" the grid is {t_start, t_end}
    and the arrays hold only those two columns.
    """

    spec: ModelSpec
    n_paths: int
    n_steps: int
    grid: np.ndarray
    x_paths: np.ndarray
    v_paths: np.ndarray
    seed: int
    scheme: Scheme
    keep: str = KEEP_FULL
    t_start: float = 0.0
    start_state: Tuple[float, float] = (0.0, 0.0)
    path_offset: int = 0

    @property
    def x_terminal(self) -> np.ndarray:
        return self.x_paths[:, -1]

    @property
    def v_terminal(self) -> np.ndarray:
        return self.v_paths[:, -1]

    @property
    def t_end(self) -> float:
        return float(self.grid[-1])


def _resolve(scheme) -> Scheme:
    try:
        return Scheme(scheme)
    except ValueError as exc:
        raise DomainError(f"Unknown scheme {scheme!r}; use one of {[s.value for s in Scheme]}") from exc


def _chunk_generator(seed: int, chunk_index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=np.array([seed & SEED_MASK, chunk_index], dtype=np.uint64)))


def _raise_non_finite(name, values, offset, step, x, v):
    bad = np.flatnonzero(~np.isfinite(values))
    i = int(bad[0])
    raise SimulationError(
        f"Non-finite {name} at path {offset + i}, step {step}",
        path=offset + i,
        step=step,
        state=(float(x[i]), float(v[i])),
    )


def _simulate_chunk(
    spec: ModelSpec,
    chunk_index: int,
    chunk_paths: int,
    m: int,
    times: np.ndarray,
    seed: int,
    scheme: Scheme,
    start: Tuple[float, float],
    keep: str,
) -> Tuple[np.ndarray, np.ndarray]:
    rng = _chunk_generator(seed, chunk_index)
    n_steps = len(times) - 1
    dt = (times[-1] - times[0]) / n_steps
    sqrt_dt = math.sqrt(dt)
    rho, rho_bar = spec.rho, spec.rho_bar
    offset = chunk_index * chunk_paths

    x = np.full(m, start[0], dtype=float)
    v = np.full(m, start[1], dtype=float)  # raw state (may be negative under full truncation)

    columns = n_steps + 1 if keep == KEEP_FULL else 2
    x_out = np.empty((m, columns))
    v_out = np.empty((m, columns))
    x_out[:, 0] = x
    v_out[:, 0] = np.maximum(v, 0.0)

    for k in range(n_steps):
        z = rng.standard_normal((2, chunk_paths))[:, :m]
        dw1 = sqrt_dt * z[0]
        dw2 = sqrt_dt * z[1]
        t = np.full(m, times[k])

        if scheme is Scheme.EULER_FULL_TRUNCATION:
            vp = np.maximum(v, 0.0)
        else:
            vp = v

        with np.errstate(all="ignore"):
            eta = evaluate(spec.eta, t, x)
            beta = evaluate(spec.beta, t, vp)
            sig = evaluate(spec.sigma, t, vp)
        for name, values in (("eta", eta), ("beta", beta), ("sigma", sig)):
            if not np.all(np.isfinite(values)):
                _raise_non_finite(name, values, offset, k, x, v)

        root = np.sqrt(vp)
        x = x - 0.5 * eta * eta * vp * dt + eta * root * (rho * dw1 + rho_bar * dw2)
        v_next = v + beta * dt + sig * root * dw1
        v = np.abs(v_next) if scheme is Scheme.EULER_REFLECTION else v_next

        if keep == KEEP_FULL:
            x_out[:, k + 1] = x
            v_out[:, k + 1] = np.maximum(v, 0.0)

    if keep != KEEP_FULL:
        x_out[:, 1] = x
        v_out[:, 1] = np.maximum(v, 0.0)
    return x_out, v_out


def _plan(n_paths: int, chunk_paths: int) -> List[Tuple[int, int]]:
    chunks = []
    for c in range(int(math.ceil(n_paths / chunk_paths))):
        chunks.append((c, min(chunk_paths, n_paths - c * chunk_paths)))
    return chunks


def _validate(spec, start_state, t_start, t_end, n_paths, n_steps, keep):
    if n_paths < 1:
        raise DomainError(f"n_paths must be >= 1, got {n_paths}")
    if n_steps < 1:
        raise DomainError(f"n_steps must be >= 1, got {n_steps}")
    if not t_start < t_end:
        raise DomainError(f"t_start must be < t_end, got {t_start} >= {t_end}")
    if t_start < 0 or t_end > spec.T * (1.0 + 1e-12):
        raise DomainError(f"[t_start, t_end] must lie in [0, T={spec.T}]")
    if start_state[1] < 0:
        raise DomainError(f"start variance must be >= 0, got {start_state[1]}")
    if keep not in (KEEP_FULL, KEEP_TERMINAL):
        raise DomainError(f"keep must be '{KEEP_FULL}' or '{KEEP_TERMINAL}', got {keep!r}")


def iter_batches(
    spec: ModelSpec,
    n_paths: int,
    n_steps: Optional[int] = None,
    seed: int = 0,
    scheme=Scheme.EULER_FULL_TRUNCATION,
    *,
    start_state: Optional[Tuple[float, float]] = None,
    t_start: float = 0.0,
    t_end: Optional[float] = None,
    keep: str = KEEP_FULL,
    workers: Optional[int] = None,
    chunk_paths: Optional[int] = None,
) -> Iterator[PathBatch]:
    """
    Stream the batch chunk by chunk, in chunk order. Up to ``workers``
    chunks are simulated concurrently.
    """
    scheme = _resolve(scheme)
    if start_state is None:
        start_state = (spec.X0, spec.V0)
    t_end = spec.T if t_end is None else t_end
    n_steps = default_steps(t_end - t_start) if n_steps is None else int(n_steps)
    _validate(spec, start_state, t_start, t_end, n_paths, n_steps, keep)

    chunk_paths = int(chunk_paths or get_setting("CHUNK_PATHS"))
    workers = max(1, int(workers or get_setting("WORKERS")))
    times = np.linspace(t_start, t_end, n_steps + 1)
    grid = times if keep == KEEP_FULL else np.array([t_start, t_end])
    start = (float(start_state[0]), float(start_state[1]))

    plan = _plan(n_paths, chunk_paths)
    logger.debug(
        "Simulating %d paths x %d steps in %d chunks (workers=%d, scheme=%s, keep=%s)",
        n_paths, n_steps, len(plan), workers, scheme.value, keep,
    )

    def run(item):
        chunk_index, m = item
        return _simulate_chunk(spec, chunk_index, chunk_paths, m, times, seed, scheme, start, keep)

    def wrap(item, arrays):
        chunk_index, m = item
        x, v = arrays
        return PathBatch(
            spec=spec, n_paths=m, n_steps=n_steps, grid=grid, x_paths=x, v_paths=v,
            seed=seed, scheme=scheme, keep=keep, t_start=t_start, start_state=start,
            path_offset=chunk_index * chunk_paths,
        )

    if workers == 1:
        for item in plan:
            yield wrap(item, run(item))
        return

    with ThreadPoolExecutor(max_workers=workers) as pool:
        # Bounded look-ahead keeps memory proportional to the worker count
        window = workers * 2
        for start_idx in range(0, len(plan), window):
            items = plan[start_idx:start_idx + window]
            for item, arrays in zip(items, pool.map(run, items)):
                yield wrap(item, arrays)


def concatenate(batches: List[PathBatch]) -> PathBatch:
    """Join streamed chunks back into one batch (chunk order preserved)."""
    if not batches:
        raise DomainError("nothing to concatenate")
    first = batches[0]
    return PathBatch(
        spec=first.spec,
        n_paths=sum(b.n_paths for b in batches),
        n_steps=first.n_steps,
        grid=first.grid,
        x_paths=np.concatenate([b.x_paths for b in batches]),
        v_paths=np.concatenate([b.v_paths for b in batches]),
        seed=first.seed,
        scheme=first.scheme,
        keep=first.keep,
        t_start=first.t_start,
        start_state=first.start_state,
        path_offset=first.path_offset,
    )


def simulate_conditional(
    spec: ModelSpec,
    start_state: Tuple[float, float],
    t_start: float,
    t_end: float,
    n_paths: int,
    n_steps: Optional[int] = None,
    seed: int = 0,
    scheme=Scheme.EULER_FULL_TRUNCATION,
    *,
    keep: str = KEEP_FULL,
    workers: Optional[int] = None,
    chunk_paths: Optional[int] = None,
) -> PathBatch:
    """Paths of (X, V) started from (x1, v1) at t_start, run to t_end."""
    return concatenate(list(iter_batches(
        spec, n_paths, n_steps, seed, scheme,
        start_state=start_state, t_start=t_start, t_end=t_end,
        keep=keep, workers=workers, chunk_paths=chunk_paths,
    )))


def simulate(
    spec: ModelSpec,
    n_paths: int,
    n_steps: Optional[int] = None,
    seed: int = 0,
    scheme=Scheme.EULER_FULL_TRUNCATION,
    *,
    keep: str = KEEP_FULL,
    workers: Optional[int] = None,
    chunk_paths: Optional[int] = None,
) -> PathBatch:
    """
    Simulate ``n_paths`` paths on [0, T]. Bitwise reproducible from
    (seed, spec, n_paths, n_steps, scheme) for any worker count.
    """
    return simulate_conditional(
        spec, (spec.X0, spec.V0), 0.0, spec.T, n_paths, n_steps, seed, scheme,
        keep=keep, workers=workers, chunk_paths=chunk_paths,
    )
