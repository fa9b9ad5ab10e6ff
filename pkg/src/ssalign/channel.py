"""Random channel sampling, symbol extension, and relay-antenna deactivation.

Sampling uses numpy's Philox generator (a named, counter-based, portable
bit stream) keyed directly by the configured seed, so a ``SystemConfig``
reproduces bit-identical channels on any platform.  Draw order is fixed:
uplink matrices for users ``0..K-1`` first, then downlink matrices in the
same order, each block drawn row-major.

Symbol extension by a factor ``s`` replaces each ``N x M`` uplink matrix with
a block-diagonal ``sN x sM`` matrix of per-slot blocks (independent draws by
default, identical blocks when ``identical_blocks`` is set), and likewise for
the ``M x N`` downlink matrices.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import block_diag

from .errors import InvalidDeactivation, ShapeMismatch
from .linalg import DEFAULT_TOL, Tolerance

__all__ = [
    "SystemConfig",
    "ChannelSet",
    "sample_channel_set",
    "deactivate_relay_antennas",
    "channel_to_json",
    "channel_from_json",
    "derived_rng",
]


@dataclass(frozen=True)
class SystemConfig:
    """Antenna counts, user count, extension factor, seed, and tolerances.

    ``K = 2`` is excluded: the two-user exchange is a solved problem and the
    constructions here start from three users.
    """

    m: int
    n: int
    k: int
    extension: int = 1
    seed: int = 0
    tol: Tolerance = DEFAULT_TOL
    identical_blocks: bool = False

    def __post_init__(self) -> None:
        if self.k < 3:
            raise ValueError(f"user count must be >= 3, got {self.k}")
        if self.m < 1 or self.n < 1:
            raise ValueError(f"antenna counts must be positive, got M={self.m}, N={self.n}")
        if self.extension < 1:
            raise ValueError(f"extension factor must be positive, got {self.extension}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")


@dataclass(frozen=True)
class ChannelSet:
    """One channel realization, possibly extended and/or deactivated.

    ``uplink[k]`` maps user ``k``'s transmit antennas to the active relay
    rows; ``downlink[k]`` maps active relay columns to user ``k``'s receive
    antennas.  ``slot_rows[i]`` counts the relay rows still active in
    extension slot ``i``; their sum is ``active_relay``.  Instances are
    treated as immutable and are safe to share across threads.
    """

    m: int
    n: int
    k: int
    extension: int
    uplink: tuple[np.ndarray, ...]
    downlink: tuple[np.ndarray, ...]
    slot_rows: tuple[int, ...]
    seed: int | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        active = sum(self.slot_rows)
        mt = self.m * self.extension
        if len(self.uplink) != self.k or len(self.downlink) != self.k:
            raise ShapeMismatch("need one uplink and one downlink matrix per user")
        for h in self.uplink:
            if h.shape != (active, mt):
                raise ShapeMismatch(f"uplink shape {h.shape} != {(active, mt)}")
        for g in self.downlink:
            if g.shape != (mt, active):
                raise ShapeMismatch(f"downlink shape {g.shape} != {(mt, active)}")

    @property
    def active_relay(self) -> int:
        return sum(self.slot_rows)


def _draw(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    # Circularly-symmetric complex Gaussian, unit variance per entry.
    re = rng.standard_normal((rows, cols))
    im = rng.standard_normal((rows, cols))
    return (re + 1j * im) / np.sqrt(2.0)


def derived_rng(seed: int | None, stream: int) -> np.random.Generator:
    """Philox generator on substream ``stream`` of a base seed.

    Substreams are spawned with ``SeedSequence(seed, spawn_key=(stream,))``
    and are independent of the raw-keyed channel stream.
    """
    ss = np.random.SeedSequence(entropy=0 if seed is None else seed, spawn_key=(stream,))
    return np.random.Generator(np.random.Philox(ss))


def sample_channel_set(cfg: SystemConfig) -> ChannelSet:
    """Draw one i.i.d. complex Gaussian channel realization for ``cfg``."""
    rng = np.random.Generator(np.random.Philox(key=cfg.seed))

    def extended(rows: int, cols: int) -> np.ndarray:
        if cfg.identical_blocks:
            blocks = [_draw(rng, rows, cols)] * cfg.extension
        else:
            blocks = [_draw(rng, rows, cols) for _ in range(cfg.extension)]
        return block_diag(*blocks).astype(np.complex128)

    uplink = tuple(extended(cfg.n, cfg.m) for _ in range(cfg.k))
    downlink = tuple(extended(cfg.m, cfg.n) for _ in range(cfg.k))
    return ChannelSet(
        m=cfg.m, n=cfg.n, k=cfg.k, extension=cfg.extension,
        uplink=uplink, downlink=downlink,
        slot_rows=(cfg.n,) * cfg.extension, seed=cfg.seed,
    )


def deactivate_relay_antennas(ch: ChannelSet, n_active: int) -> ChannelSet:
    """Keep only ``n_active`` relay rows (and downlink columns).

    Rows are dropped slot by slot, always from the slot that currently keeps
    the most (later slots first on ties), so every extension slot retains a
    prefix of its antennas and no transmit column goes dark.  With
    ``extension == 1`` this is exactly a row prefix.
    """
    if int(n_active) != n_active or n_active < 1:
        raise InvalidDeactivation(f"active count must be a positive integer, got {n_active}")
    n_active = int(n_active)
    if n_active > ch.active_relay:
        raise InvalidDeactivation(
            f"cannot activate {n_active} of {ch.active_relay} remaining antennas"
        )
    counts = list(ch.slot_rows)
    for _ in range(ch.active_relay - n_active):
        drop = max(range(len(counts)), key=lambda i: (counts[i], i))
        counts[drop] -= 1
    keep: list[int] = []
    offset = 0
    for old, new in zip(ch.slot_rows, counts):
        keep.extend(range(offset, offset + new))
        offset += old
    idx = np.asarray(keep, dtype=int)
    return ChannelSet(
        m=ch.m, n=ch.n, k=ch.k, extension=ch.extension,
        uplink=tuple(h[idx, :].copy() for h in ch.uplink),
        downlink=tuple(g[:, idx].copy() for g in ch.downlink),
        slot_rows=tuple(counts), seed=ch.seed,
    )


def _matrix_to_pairs(a: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in a]


def _matrix_from_pairs(rows: list) -> np.ndarray:
    if not rows:
        return np.empty((0, 0), dtype=np.complex128)
    return np.array([[complex(re, im) for re, im in row] for row in rows], dtype=np.complex128)


def channel_to_json(ch: ChannelSet) -> dict:
    """Serialize to ``{"m", "n", "k", "ext", "uplink", "downlink"}``.

    Entries are ``[re, im]`` pairs; the document replays exact instances in
    bug reports.  Deactivation is implied by the matrix shapes.
    """
    return {
        "m": ch.m,
        "n": ch.n,
        "k": ch.k,
        "ext": ch.extension,
        "uplink": [_matrix_to_pairs(h) for h in ch.uplink],
        "downlink": [_matrix_to_pairs(g) for g in ch.downlink],
    }


def channel_from_json(doc: dict | str) -> ChannelSet:
    """Rebuild a :class:`ChannelSet` from :func:`channel_to_json` output."""
    if isinstance(doc, str):
        doc = json.loads(doc)
    m, n, k, ext = doc["m"], doc["n"], doc["k"], doc["ext"]
    uplink = tuple(_matrix_from_pairs(rows) for rows in doc["uplink"])
    downlink = tuple(_matrix_from_pairs(rows) for rows in doc["downlink"])
    if ext == 1:
        slot_rows = (uplink[0].shape[0],)
    else:
        # Rows of a block-diagonal matrix live in exactly one column block;
        # recover each kept row's slot from its nonzero block.
        counts = [0] * ext
        for row in uplink[0]:
            norms = [np.linalg.norm(row[j * m:(j + 1) * m]) for j in range(ext)]
            counts[int(np.argmax(norms))] += 1
        slot_rows = tuple(counts)
    return ChannelSet(
        m=m, n=n, k=k, extension=ext,
        uplink=uplink, downlink=downlink, slot_rows=slot_rows,
    )
