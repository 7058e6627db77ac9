"""Core dynamics: truncated binary odometer, dyadic shift trajectories, Birkhoff sums.

Two measure-preserving systems are realized here.

The *truncated binary odometer* acts on B-bit words (least-significant bit
first) by add-one-with-carry modulo 2^B.  The uniform measure on the 2^B
words is preserved exactly, and the zero cylinders generate exact Rokhlin
towers: the set of points whose first i bits vanish has measure 2^-i, and
its first 2^i - 1 images under T are pairwise disjoint translates.

The *dyadic Bernoulli shift* is realized through sampled trajectories: a
two-sided window of i.i.d. fair bits (eps_k) and the derived doubling-map
coordinates x_k = sum_{j=1..W} 2^{-j-1} eps_{k-j} in [0, 1/2).

Randomness is counter-based throughout: every stream is a pure function of
(seed, stream id), so Monte Carlo results do not depend on how work is
split across workers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.random import Generator, Philox

_MASK64 = (1 << 64) - 1


def stream_generator(seed: int, stream: int) -> Generator:
    """Counter-based generator keyed by (seed, stream id).

    Philox is a counter-mode bit generator: the output block depends only on
    the key, never on call history of other streams, which makes results
    independent of worker count and chunking.
    """
    key = np.array([seed & _MASK64, stream & _MASK64], dtype=np.uint64)
    return Generator(Philox(key=key))


def fair_bits(seed: int, stream: int, count: int) -> np.ndarray:
    """Return `count` i.i.d. fair bits (uint8) for the given stream."""
    if count < 0:
        raise ValueError("count must be >= 0")
    return stream_generator(seed, stream).integers(0, 2, size=count, dtype=np.uint8)


def uniform_start_values(seed: int, stream: int, count: int, bits: int) -> np.ndarray:
    """Uniform odometer start values in [0, 2^bits) as uint64."""
    if not 1 <= bits <= 62:
        raise ValueError("bits must be in [1, 62]")
    gen = stream_generator(seed, stream)
    return gen.integers(0, 1 << bits, size=count, dtype=np.uint64)


# ---------------------------------------------------------------------------
# odometer
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OdometerPoint:
    """A point of the B-bit odometer, stored as its integer value.

    `value` is the integer whose base-2 digits, least significant first, are
    the coordinates of the point; `nbits` is the precision B.
    """

    value: int
    nbits: int

    def __post_init__(self) -> None:
        if not 1 <= self.nbits <= 62:
            raise ValueError(f"nbits must be in [1, 62], got {self.nbits}")
        if not 0 <= self.value < (1 << self.nbits):
            raise ValueError(f"value {self.value} out of range for {self.nbits} bits")

    @classmethod
    def from_bits(cls, bits: Sequence[int]) -> "OdometerPoint":
        """Build a point from its bits, least-significant first."""
        if len(bits) == 0:
            raise ValueError("need at least one bit")
        if any(b not in (0, 1) for b in bits):
            raise ValueError("bits must be 0 or 1")
        value = sum(b << i for i, b in enumerate(bits))
        return cls(value=value, nbits=len(bits))

    @property
    def bits(self) -> Tuple[int, ...]:
        """Bits of the point, least-significant first."""
        return tuple((self.value >> i) & 1 for i in range(self.nbits))


def odometer_advance(point: OdometerPoint, steps: int = 1) -> OdometerPoint:
    """Apply the add-with-carry map `steps` times: value + steps mod 2^B."""
    if steps < 0:
        raise ValueError("steps must be >= 0 (the odometer is iterated forward)")
    return OdometerPoint((point.value + steps) & ((1 << point.nbits) - 1), point.nbits)


def level(point: OdometerPoint, i: int) -> int:
    """Tower level of the point in the height-2^i zero-cylinder tower.

    Level l means the point lies in T^l(A_i) where A_i is the cylinder
    {first i bits all zero}; concretely this is value mod 2^i.  Advancing
    the odometer by s steps advances the level by s mod 2^i.
    """
    if not 1 <= i <= point.nbits:
        raise ValueError(f"tower index i={i} out of range [1, {point.nbits}]")
    return point.value & ((1 << i) - 1)


# ---------------------------------------------------------------------------
# shift trajectories
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ShiftTrajectory:
    """A sampled trajectory of the dyadic Bernoulli shift.

    Carries fair bits eps_k for k in [-window, n + window] and exposes the
    doubling-map coordinates x_k = sum_{j=1..W} 2^{-j-1} eps_{k-j}, which lie
    in [0, 1/2).  The x_k are computed in integer arithmetic (W <= 53 bits)
    and are exact as float64.
    """

    seed: int
    stream: int
    n: int
    window: int
    eps: np.ndarray = field(repr=False)  # uint8, index k+window for eps_k

    @classmethod
    def generate(cls, seed: int, stream: int, n: int, window: int = 53) -> "ShiftTrajectory":
        if n < 1:
            raise ValueError("n must be >= 1")
        if not 1 <= window <= 53:
            raise ValueError("window must be in [1, 53] so coordinates are exact floats")
        eps = fair_bits(seed, stream, n + 2 * window + 1)
        return cls(seed=seed, stream=stream, n=n, window=window, eps=eps)

    def bit(self, k: int) -> int:
        """eps_k for k in [-window, n + window]."""
        if not -self.window <= k <= self.n + self.window:
            raise IndexError(f"bit index {k} outside [-{self.window}, {self.n + self.window}]")
        return int(self.eps[k + self.window])

    def coordinates(self) -> np.ndarray:
        """Doubling-map coordinates x_0 .. x_n (float64, exact)."""
        return _coordinates_from_bits(self.eps, self.n, self.window)


def _coordinates_from_bits(eps: np.ndarray, n: int, window: int) -> np.ndarray:
    # X_k = sum_{j=1..W} 2^{W-j} eps_{k-j}; recurrence X_{k+1} = (X_k >> 1) + eps_k 2^{W-1}
    W = window
    X = 0
    for j in range(1, W + 1):
        X += int(eps[-j + W]) << (W - j)  # eps_{-j} at index -j+W
    xs = np.empty(n + 1, dtype=np.float64)
    scale = 2.0 ** -(W + 1)
    xs[0] = X * scale
    for k in range(n):
        X = (X >> 1) + (int(eps[k + W]) << (W - 1))
        xs[k + 1] = X * scale
    return xs


def coordinate_matrix(eps: np.ndarray, n: int, window: int) -> np.ndarray:
    """Vectorized x_0..x_n for a batch: eps has shape (paths, n + 2*window + 1)."""
    W = window
    paths = eps.shape[0]
    X = np.zeros(paths, dtype=np.int64)
    for j in range(1, W + 1):
        X += eps[:, -j + W].astype(np.int64) << (W - j)
    xs = np.empty((paths, n + 1), dtype=np.float64)
    scale = 2.0 ** -(W + 1)
    xs[:, 0] = X * scale
    for k in range(n):
        X = (X >> 1) + (eps[:, k + W].astype(np.int64) << (W - 1))
        xs[:, k + 1] = X * scale
    return xs


# ---------------------------------------------------------------------------
# Birkhoff sums and polygonal paths
# ---------------------------------------------------------------------------

@dataclass
class PathSummary:
    """Partial sums along one orbit, with the polygonal interpolant.

    partial_sums[k] = S_k = sum_{j<k} f(T^j w) for k = 0..n.  The polygonal
    process evaluated at t is S_[nt] + (nt - [nt]) f(T^[nt] w), i.e. linear
    interpolation of the partial sums at the knots k/n.
    """

    n: int
    partial_sums: np.ndarray
    t_grid: Optional[np.ndarray] = None
    polygonal: Optional[np.ndarray] = None
    max_abs_partial: float = 0.0
    max_abs_g: Optional[float] = None

    @property
    def final(self) -> float:
        return float(self.partial_sums[-1])


Orbit = Union[OdometerPoint, ShiftTrajectory]


def _orbit_values(f: Callable, start: Orbit, n: int) -> np.ndarray:
    """Evaluate f along the orbit: f(T^k w) for k = 0..n."""
    out = np.empty(n + 1, dtype=np.float64)
    if isinstance(start, OdometerPoint):
        if 2 * n > (1 << start.nbits):
            raise ValueError(
                f"horizon n={n} too long for {start.nbits}-bit odometer (need 2n <= 2^B)"
            )
        for k in range(n + 1):
            try:
                out[k] = f(odometer_advance(start, k))
            except Exception as exc:  # noqa: BLE001 - annotate and re-raise
                raise RuntimeError(f"evaluator failed at orbit index {k}") from exc
    elif isinstance(start, ShiftTrajectory):
        if n > start.n:
            raise ValueError(f"horizon n={n} exceeds trajectory length {start.n}")
        xs = start.coordinates()
        for k in range(n + 1):
            try:
                out[k] = f(float(xs[k]))
            except Exception as exc:  # noqa: BLE001
                raise RuntimeError(f"evaluator failed at orbit index {k}") from exc
    else:
        raise TypeError(f"unsupported orbit start {type(start)!r}")
    return out


def birkhoff(
    f: Callable,
    start: Orbit,
    n: int,
    t_grid: Optional[np.ndarray] = None,
    g: Optional[Callable] = None,
) -> PathSummary:
    """Partial sums S_0..S_n of f along the orbit of `start`, plus extras.

    Args:
        f: evaluator; takes an OdometerPoint or a doubling-map coordinate.
        start: OdometerPoint or ShiftTrajectory.
        n: horizon (for the odometer, 2n <= 2^B is enforced).
        t_grid: optional grid in [0,1] at which to evaluate the polygonal path.
        g: optional second evaluator; records max_{1<=k<=n} |g(T^k w)|.

    Returns:
        PathSummary with partial sums, optional polygonal values, the running
        maximum of |S_k|, and (if g is given) the maximum of |g| on the orbit.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    fvals = _orbit_values(f, start, n)
    S = np.concatenate([[0.0], np.cumsum(fvals[:n])])
    summary = PathSummary(n=n, partial_sums=S)
    summary.max_abs_partial = float(np.max(np.abs(S[1:])))
    if t_grid is not None:
        t = np.asarray(t_grid, dtype=np.float64)
        if t.size and (t.min() < 0.0 or t.max() > 1.0):
            raise ValueError("t_grid must lie in [0, 1]")
        # linear interpolation of the knot values S_k at positions k/n
        summary.t_grid = t
        summary.polygonal = np.interp(t * n, np.arange(n + 1), S)
    if g is not None:
        gvals = _orbit_values(g, start, n)
        summary.max_abs_g = float(np.max(np.abs(gvals[1:])))
    return summary
