"""
VTB1 batch files
Header (little-endian):

    magic      4s   b"VTB1"
    spec hash  32s  SHA-256 of the canonical spec description
    n_paths    Q
    n_steps    Q
    seed       Q    (two's complement for negative seeds)
    scheme id  I

followed by x_paths then v_paths, each row-major (n_paths, n_steps + 1) float64.
Only full unconditional batches on [0, T] are stored.
"""
from __future__ import annotations

import logging
import struct
from pathlib import Path
from typing import Iterable, Union

import numpy as np

from lsv.exceptions import DomainError
from lsv.services.model import ModelSpec, spec_hash

from .engine import KEEP_FULL, PathBatch, Scheme

logger = logging.getLogger(__name__)

MAGIC = b"VTB1"
HEADER = struct.Struct("<4s32sQQQI")
DTYPE = np.dtype("<f8")


def _header(spec: ModelSpec, n_paths: int, n_steps: int, seed: int, scheme: Scheme) -> bytes:
    return HEADER.pack(MAGIC, spec_hash(spec), n_paths, n_steps, seed & ((1 << 64) - 1), scheme.scheme_id)


def _check_storable(batch: PathBatch) -> None:
    if batch.keep != KEEP_FULL or batch.t_start != 0.0:
        raise DomainError("Only full batches started at t=0 can be stored as VTB1")


class BatchWriter:
    """
    Streams chunks into a VTB1 file through a memory map, so batches larger
    than memory can be persisted chunk by chunk.
    """

    def __init__(self, path: Union[str, Path], spec: ModelSpec, n_paths: int, n_steps: int, seed: int, scheme):
        self.path = Path(path)
        self.n_paths = n_paths
        self.columns = n_steps + 1
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with open(self.path, "wb") as fh:
            fh.write(_header(spec, n_paths, n_steps, seed, Scheme(scheme)))
            fh.truncate(HEADER.size + 2 * n_paths * self.columns * DTYPE.itemsize)
        self._data = np.memmap(
            self.path, dtype=DTYPE, mode="r+", offset=HEADER.size, shape=(2, n_paths, self.columns)
        )
        self._written = 0

    def write(self, chunk: PathBatch) -> None:
        _check_storable(chunk)
        lo, hi = chunk.path_offset, chunk.path_offset + chunk.n_paths
        self._data[0, lo:hi] = chunk.x_paths
        self._data[1, lo:hi] = chunk.v_paths
        self._written += chunk.n_paths

    def close(self) -> None:
        self._data.flush()
        del self._data
        if self._written != self.n_paths:
            logger.warning("VTB1 file %s holds %d of %d paths", self.path, self._written, self.n_paths)

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
        return False


def save_batch(batch: PathBatch, path: Union[str, Path]) -> Path:
    _check_storable(batch)
    with BatchWriter(path, batch.spec, batch.n_paths, batch.n_steps, batch.seed, batch.scheme) as writer:
        writer.write(batch)
    return Path(path)


def save_chunks(chunks: Iterable[PathBatch], path, spec: ModelSpec, n_paths: int, n_steps: int, seed: int, scheme) -> Path:
    with BatchWriter(path, spec, n_paths, n_steps, seed, scheme) as writer:
        for chunk in chunks:
            writer.write(chunk)
    return Path(path)


def load_batch(path: Union[str, Path], spec: ModelSpec) -> PathBatch:
    """
    Read a VTB1 file back for ``spec``; the stored spec hash must match.
    """
    raw = Path(path).read_bytes()
    if len(raw) < HEADER.size:
        raise DomainError(f"{path} is too short to be a VTB1 file")
    magic, digest, n_paths, n_steps, seed, scheme_id = HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise DomainError(f"{path} is not a VTB1 file")
    if digest != spec_hash(spec):
        raise DomainError(f"{path} was written for a different model spec")
    if seed >= 1 << 63:
        seed -= 1 << 64

    columns = n_steps + 1
    expected = 2 * n_paths * columns * DTYPE.itemsize
    if len(raw) - HEADER.size != expected:
        raise DomainError(f"{path} data block has {len(raw) - HEADER.size} bytes, expected {expected}")
    data = np.frombuffer(raw, dtype=DTYPE, offset=HEADER.size).reshape(2, n_paths, columns)
    return PathBatch(
        spec=spec,
        n_paths=int(n_paths),
        n_steps=int(n_steps),
        grid=np.linspace(0.0, spec.T, columns),
        x_paths=data[0].astype(float),
        v_paths=data[1].astype(float),
        seed=int(seed),
        scheme=Scheme.from_id(scheme_id),
        start_state=(spec.X0, spec.V0),
    )
