"""The W-trick environment and weighted prime-square sequences.

W = 8 * prod of odd primes below w.  For a reduced quadratic residue b
mod W, the sequence n -> (phi(W)/(W*H)) * 2p*log(p) is supported on the
n in [1, N] with W*n + b a prime square.  Restricting the primes to a
subset P gives the companion sequence dominated by the full one.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .arith import _SMALL_PRIMES
from .errors import Infeasible, TableTooSmall, WTooLarge
from .primes import PrimeSubsetSpec, PrimeTable, subset_members

MAX_W = 4_000_000

KIND_MAJORANT = "majorant"
KIND_SUBSET = "subset"


@dataclass(frozen=True)
class WContext:
    """Fully enumerated structure of the units mod W and their squares.

    Z_W lists the reduced quadratic residues; root_map[b] holds the units
    whose square is b.  Every root set has the same size H, and
    H * |Z_W| = phi(W).
    """

    w: int
    W: int
    phi_W: int
    H: int
    Z_W: tuple[int, ...]
    root_map: dict[int, tuple[int, ...]]

    def to_json(self) -> dict:
        return {
            "w": self.w,
            "W": self.W,
            "phi": self.phi_W,
            "H": self.H,
            "Z": list(self.Z_W),
            "roots": {str(b): list(hs) for b, hs in self.root_map.items()},
        }


def build_context(w: int) -> WContext:
    """Enumerate units mod W = 8 * prod(2 < p < w) and group them by square."""
    if w < 4:
        raise ValueError(f"w must be >= 4, got {w}")
    odd = [p for p in _SMALL_PRIMES if 2 < p < w]
    W = 8
    for p in odd:
        W *= p
    if W > MAX_W:
        raise WTooLarge(f"W = {W} exceeds supported bound {MAX_W}")

    values = np.arange(W, dtype=np.int64)
    units = values[np.gcd(values, W) == 1]
    squares = (units * units) % W
    order = np.argsort(squares, kind="stable")
    squares_sorted = squares[order]
    units_sorted = units[order]
    cuts = np.flatnonzero(np.diff(squares_sorted)) + 1
    groups = np.split(units_sorted, cuts)
    bs = squares_sorted[np.concatenate(([0], cuts))]

    root_map = {int(b): tuple(int(h) for h in g) for b, g in zip(bs, groups)}
    Z = tuple(sorted(root_map))
    phi = len(units)
    H = 4 * (2 ** len(odd))

    # Structural invariants; violation means the construction is broken.
    if H * len(Z) != phi or any(len(root_map[b]) != H for b in Z):
        raise RuntimeError(f"root structure invariant failed for w={w}")
    if any(b % 24 != 1 for b in Z):
        raise RuntimeError(f"found b in Z(W) with b % 24 != 1 for w={w}")
    return WContext(w=w, W=W, phi_W=phi, H=H, Z_W=Z, root_map=root_map)


@dataclass(frozen=True)
class WeightedSequence:
    """Nonnegative weights on n in [1, N]; values[0] is a padding slot."""

    kind: str
    b: int
    N: int
    W: int
    values: np.ndarray  # float64, length N + 1, indexed by n
    spec: Optional[PrimeSubsetSpec] = None

    def support(self) -> np.ndarray:
        return np.flatnonzero(self.values)

    def total(self) -> float:
        return float(np.sum(self.values))

    def mean(self) -> float:
        return self.total() / self.N

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["n", "value"])
            for n in range(1, self.N + 1):
                writer.writerow([n, repr(float(self.values[n]))])


def _squares_in_progression(ctx: WContext, b: int, N: int, table: PrimeTable):
    """Primes p with p^2 = W*n + b for some n in [1, N], and those n."""
    if b not in ctx.root_map:
        raise ValueError(f"b = {b} is not a reduced quadratic residue mod {ctx.W}")
    top = math.isqrt(ctx.W * N + b)
    if table.limit < top:
        raise TableTooSmall(f"need primes up to {top}, table stops at {table.limit}")
    p = table.primes_upto(top)
    r = p * p - b
    ok = (r > 0) & (r % ctx.W == 0)
    p = p[ok]
    n = (p * p - b) // ctx.W
    inside = n <= N
    return p[inside], n[inside]


def _weights(ctx: WContext, p: np.ndarray) -> np.ndarray:
    coeff = ctx.phi_W / (ctx.W * ctx.H)
    pf = p.astype(np.float64)
    return coeff * 2.0 * pf * np.log(pf)


def nu_sequence(ctx: WContext, b: int, N: int, table: PrimeTable) -> WeightedSequence:
    """Majorant sequence: every prime square in the progression contributes."""
    p, n = _squares_in_progression(ctx, b, N, table)
    values = np.zeros(N + 1)
    values[n] = _weights(ctx, p)
    return WeightedSequence(kind=KIND_MAJORANT, b=b, N=N, W=ctx.W, values=values)


def f_sequence(
    ctx: WContext, b: int, N: int, spec: PrimeSubsetSpec, table: PrimeTable
) -> WeightedSequence:
    """Subset sequence: same weights, kept only when the root lies in P."""
    p, n = _squares_in_progression(ctx, b, N, table)
    members = subset_members(spec, table)
    keep = np.isin(p, members)
    values = np.zeros(N + 1)
    values[n[keep]] = _weights(ctx, p[keep])
    return WeightedSequence(kind=KIND_SUBSET, b=b, N=N, W=ctx.W, values=values, spec=spec)


@dataclass(frozen=True)
class DensityTable:
    """Mean value of the subset sequence for every residue b in Z_W."""

    N: int
    entries: dict[int, float]

    def max_entry(self) -> tuple[int, float]:
        mu = max(self.entries.values())
        b0 = min(b for b, d in self.entries.items() if d == mu)
        return b0, mu


def delta_table(
    ctx: WContext, N: int, spec: PrimeSubsetSpec, table: PrimeTable
) -> DensityTable:
    entries = {b: f_sequence(ctx, b, N, spec, table).mean() for b in ctx.Z_W}
    return DensityTable(N=N, entries=entries)


def select_residues(
    ctx: WContext, dt: DensityTable, n: int, s: int, kappa: float
) -> list[int]:
    """Pick s residues b_j with sum congruent to n mod W and high density.

    The result is b0 repeated (s - 8) times, b0 the densest residue, plus an
    8-tuple drawn from the residues whose density clears the threshold
    2*lambda^2 - mu + kappa/4.  The 8-fold sum search runs meet-in-the-middle
    on the component W' = W/24; the mod-24 component is automatic because
    every b is 1 mod 24.  Raises Infeasible when the threshold or the sum
    condition cannot be met.
    """
    if s < 8:
        raise ValueError(f"s must be >= 8, got {s}")
    if kappa <= 0:
        raise ValueError(f"kappa must be positive, got {kappa}")
    if n % 24 != s % 24:
        raise ValueError(f"need n = s (mod 24); got n = {n}, s = {s}")

    lam_sq = 1.0 - min(s, 16) / 32.0
    b0, mu = dt.max_entry()
    threshold = 2.0 * lam_sq - mu + kappa / 4.0
    pool = sorted(b for b, d in dt.entries.items() if d >= threshold)
    if not pool:
        raise Infeasible(
            f"no residue density reaches threshold {threshold:.4f} (max is {mu:.4f})"
        )

    W = ctx.W
    Wp = W // 24
    target = (n - (s - 8) * b0) % W

    best: Optional[tuple[int, ...]] = None
    if Wp == 1:
        best = tuple([pool[0]] * 8)
    else:
        target_p = target % Wp
        tails: dict[int, tuple[int, ...]] = {}
        for combo in itertools.combinations_with_replacement(pool, 4):
            tails.setdefault(sum(combo) % Wp, combo)
        for combo in itertools.combinations_with_replacement(pool, 4):
            tail = tails.get((target_p - sum(combo)) % Wp)
            if tail is None:
                continue
            cand = tuple(sorted(combo + tail))
            if best is None or cand < best:
                best = cand
    if best is None:
        raise Infeasible(f"no 8-fold combination from {pool} sums to {target} mod {W}")

    chosen = [b0] * (s - 8) + list(best)
    if sum(chosen) % W != n % W:
        raise RuntimeError("selected residues violate the sum congruence")
    return chosen
