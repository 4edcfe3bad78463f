"""Counting and exhibiting n = p_1^2 + ... + p_s^2 with all p_j in P.

Ordered representation counts come from s-fold convolution of the
prime-square indicator, computed exactly: plain integer convolution below
a size crossover, double-precision FFT with a rounding-residual guard
above it, and a digit-split exact fallback if the guard ever trips.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import NotFound, TableTooSmall, TooLarge
from .primes import PrimeSubsetSpec, PrimeTable, empirical_density, subset_members
from .wtrick import WContext, delta_table, f_sequence, select_residues

MAX_CONV_LEN = 1 << 24
_EXACT_CROSSOVER = 8192  # below this, plain O(n^2) integer convolution
_SPLIT_BASE_BITS = 14


def lambda_threshold(s: int) -> float:
    """Density threshold sqrt(1 - min(s, 16)/32) for the s-fold problem."""
    return math.sqrt(1.0 - min(s, 16) / 32.0)


def square_indicator(limit: int, spec: PrimeSubsetSpec, table: PrimeTable) -> np.ndarray:
    """Array over [0, limit]: entry k is 1 exactly when k = p^2 with p in P."""
    if limit < 0:
        raise ValueError(f"limit must be >= 0, got {limit}")
    root = math.isqrt(limit)
    if table.limit < root:
        raise TableTooSmall(f"need primes up to {root}, table stops at {table.limit}")
    members = subset_members(spec, table)
    members = members[members <= root]
    ind = np.zeros(limit + 1, dtype=np.int64)
    ind[members * members] = 1
    return ind


def _fft_convolve_guarded(a: np.ndarray, b: np.ndarray, limit: int) -> Optional[np.ndarray]:
    """Rounded real-FFT convolution, or None when the residual guard trips."""
    L = 1 << (len(a) + len(b) - 2).bit_length()
    fa = np.fft.rfft(a.astype(np.float64), L)
    fb = fa if b is a else np.fft.rfft(b.astype(np.float64), L)
    raw = np.fft.irfft(fa * fb, L)[: limit + 1]
    rounded = np.rint(raw)
    if float(np.max(np.abs(raw - rounded))) > 0.1:
        return None
    if float(np.max(rounded)) >= float(1 << 62):
        return None
    return rounded.astype(np.int64)


def _split_convolve_exact(a: np.ndarray, b: np.ndarray, limit: int) -> np.ndarray:
    """Exact convolution of big-integer arrays by base-2^14 digit splitting.

    Each digit convolution stays far below 2^53, so the per-digit FFTs round
    exactly; digits recombine in Python integers (object dtype).
    """
    base = 1 << _SPLIT_BASE_BITS

    def digits(arr: np.ndarray) -> list[np.ndarray]:
        arr = [int(v) for v in arr]
        out = []
        while any(arr):
            out.append(np.array([v % base for v in arr], dtype=np.float64))
            arr = [v // base for v in arr]
        return out or [np.zeros(1)]

    da, db = digits(a), digits(b)
    L = 1 << (len(a) + len(b) - 2).bit_length()
    fas = [np.fft.rfft(d, L) for d in da]
    fbs = fas if b is a else [np.fft.rfft(d, L) for d in db]
    result = [0] * (limit + 1)
    for i, fa in enumerate(fas):
        for j, fb in enumerate(fbs):
            piece = np.rint(np.fft.irfft(fa * fb, L)[: limit + 1]).astype(np.int64)
            shift = _SPLIT_BASE_BITS * (i + j)
            for idx in np.flatnonzero(piece):
                result[idx] += int(piece[idx]) << shift
    return np.array(result, dtype=object)


def _convolve_trunc(a: np.ndarray, b: np.ndarray, limit: int) -> np.ndarray:
    """Exact nonnegative-integer convolution truncated to [0, limit]."""
    if len(a) + len(b) - 1 > MAX_CONV_LEN:
        raise TooLarge(f"convolution length {len(a) + len(b) - 1} over budget")
    a = a[: limit + 1]
    b = b[: limit + 1]
    if a.dtype == object or b.dtype == object:
        return np.convolve(a, b)[: limit + 1]
    if (limit + 1) <= _EXACT_CROSSOVER:
        # int64 products must not overflow; otherwise take the split path
        bound = int(a.max(initial=0)) * int(b.max(initial=0)) * min(len(a), len(b))
        if bound < (1 << 62):
            return np.convolve(a, b)[: limit + 1]
        return _split_convolve_exact(a, b, limit)
    out = _fft_convolve_guarded(a, b, limit)
    if out is None:
        out = _split_convolve_exact(a, b, limit)
    return out


@dataclass(frozen=True)
class ReprCountTable:
    """Ordered s-tuple counts: counts[n] = #{(p_1..p_s) in P^s : sum p_j^2 = n}."""

    limit: int
    s: int
    counts: np.ndarray
    spec: Optional[PrimeSubsetSpec] = None

    def to_csv(self, path, nonzero_only: bool = False) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["n", "count"])
            for n, c in enumerate(self.counts):
                if nonzero_only and not c:
                    continue
                writer.writerow([n, int(c)])


def count_representations(
    limit: int, s: int, spec: PrimeSubsetSpec, table: PrimeTable
) -> ReprCountTable:
    """s-fold convolution of the prime-square indicator, exact on [0, limit]."""
    if s < 1:
        raise ValueError(f"s must be >= 1, got {s}")
    ind = square_indicator(limit, spec, table)
    acc: Optional[np.ndarray] = None
    base = ind
    e = s
    while e:
        if e & 1:
            acc = base.copy() if acc is None else _convolve_trunc(acc, base, limit)
        e >>= 1
        if e:
            base = _convolve_trunc(base, base, limit)
    return ReprCountTable(limit=limit, s=s, counts=acc, spec=spec)


# -- witnesses ---------------------------------------------------------------


@dataclass(frozen=True)
class ReprWitness:
    """One representation, with the progression data when it came from a transfer."""

    n: int
    primes: tuple[int, ...]
    residues: Optional[tuple[int, ...]] = None
    indices: Optional[tuple[int, ...]] = None
    m: Optional[int] = None

    def to_json(self) -> dict:
        out: dict = {"n": self.n, "primes": list(self.primes)}
        if self.residues is not None:
            out["residues"] = list(self.residues)
            out["indices"] = list(self.indices)
            out["m"] = self.m
        return out


def find_witness(
    n: int, s: int, spec: PrimeSubsetSpec, table: PrimeTable
) -> Optional[ReprWitness]:
    """Lexicographically smallest nondecreasing tuple of s subset primes whose
    squares sum to n, or None.  Depth-first search over sorted primes with
    residue and range pruning."""
    if s < 1:
        raise ValueError(f"s must be >= 1, got {s}")
    root = math.isqrt(n) if n >= 0 else 0
    if n < 0:
        return None
    if table.limit < root:
        raise TableTooSmall(f"need primes up to {root}, table stops at {table.limit}")
    members = [int(p) for p in subset_members(spec, table) if p * p <= n]
    if not members:
        return None
    squares = [p * p for p in members]
    square_root = {p * p: p for p in members}
    # Squares of primes coprime to 6 are 1 mod 24, so t squares sum to t mod 24.
    mod24_prune = members[0] >= 5

    def dfs(remaining: int, t: int, start: int) -> Optional[list[int]]:
        if t == 0:
            return [] if remaining == 0 else None
        if mod24_prune and remaining % 24 != t % 24:
            return None
        if t == 1:
            p = square_root.get(remaining)
            if p is not None and p >= members[start]:
                return [p]
            return None
        for i in range(start, len(members)):
            sq = squares[i]
            if sq * t > remaining:
                break
            rest = dfs(remaining - sq, t - 1, i)
            if rest is not None:
                return [members[i]] + rest
        return None

    found = dfs(n, s, 0)
    if found is None:
        return None
    return ReprWitness(n=n, primes=tuple(found))


# -- experiment ----------------------------------------------------------------


@dataclass(frozen=True)
class ExperimentReport:
    s: int
    spec: PrimeSubsetSpec
    lambda_threshold: float
    empirical_density: float
    density_exceeds_threshold: bool
    range: tuple[int, int]
    n_checked: int
    exceptions: tuple[int, ...]
    max_exception: Optional[int]
    sample_witnesses: list[ReprWitness] = field(default_factory=list)
    exploratory: bool = False

    def to_json(self) -> dict:
        return {
            "s": self.s,
            "spec": self.spec.to_json(),
            "lambda_threshold": self.lambda_threshold,
            "empirical_density": self.empirical_density,
            "density_exceeds_threshold": self.density_exceeds_threshold,
            "range": list(self.range),
            "n_checked": self.n_checked,
            "exceptions": [int(x) for x in self.exceptions],
            "max_exception": self.max_exception,
            "sample_witnesses": [w.to_json() for w in self.sample_witnesses],
            "exploratory": self.exploratory,
        }


def theorem_experiment(
    s: int,
    spec: PrimeSubsetSpec,
    n_range: tuple[int, int],
    table: PrimeTable,
    sample_limit: int = 3,
) -> ExperimentReport:
    """Scan every n = s (mod 24) in the range for a representation count.

    Exceptions (count zero) are reported, never fatal.
    """
    lo, hi = n_range
    if lo > hi:
        raise ValueError(f"empty range {n_range}")
    counts = count_representations(hi, s, spec, table).counts

    first = lo + ((s - lo) % 24)
    targets = np.arange(first, hi + 1, 24, dtype=np.int64)
    if counts.dtype == object:
        zero = np.array([counts[int(n)] == 0 for n in targets], dtype=bool)
    else:
        zero = counts[targets] == 0
    exceptions = tuple(int(x) for x in targets[zero])

    witnesses = []
    for n in targets[~zero][:sample_limit]:
        w = find_witness(int(n), s, spec, table)
        if w is not None:
            witnesses.append(w)

    lam = lambda_threshold(s)
    density = empirical_density(spec, table)
    return ExperimentReport(
        s=s,
        spec=spec,
        lambda_threshold=lam,
        empirical_density=density,
        density_exceeds_threshold=density > lam,
        range=(lo, hi),
        n_checked=len(targets),
        exceptions=exceptions,
        max_exception=max(exceptions) if exceptions else None,
        sample_witnesses=witnesses,
        exploratory=s < 8,
    )


# -- transfer ---------------------------------------------------------------------


def _meet_in_middle(supports: list[np.ndarray], target: int) -> Optional[tuple[int, ...]]:
    """Lexicographically smallest (n_1..n_s), n_j in supports[j], summing to target."""
    s = len(supports)
    if any(len(sup) == 0 for sup in supports):
        return None
    h = (s + 1) // 2
    head, tail = supports[:h], supports[h:]

    tail_sums: dict[int, tuple[int, ...]] = {}
    if tail:
        stack: list[tuple[int, tuple[int, ...]]] = [(0, ())]
        for sup in tail:
            stack = [(tot + int(v), chosen + (int(v),)) for tot, chosen in stack for v in sup]
        for tot, chosen in stack:
            prev = tail_sums.get(tot)
            if prev is None or chosen < prev:
                tail_sums[tot] = chosen
    else:
        tail_sums[0] = ()

    tail_min = sum(int(sup[0]) for sup in tail)
    tail_max = sum(int(sup[-1]) for sup in tail)

    def walk(j: int, tot: int, chosen: tuple[int, ...]) -> Optional[tuple[int, ...]]:
        if j == len(head):
            rest = tail_sums.get(target - tot)
            if rest is not None:
                return chosen + rest
            return None
        remaining_min = sum(int(sup[0]) for sup in head[j + 1 :])
        remaining_max = sum(int(sup[-1]) for sup in head[j + 1 :])
        for v in head[j]:
            lo = tot + int(v) + remaining_min + tail_min
            hi = tot + int(v) + remaining_max + tail_max
            if lo > target:
                break
            if hi < target:
                continue
            out = walk(j + 1, tot + int(v), chosen + (int(v),))
            if out is not None:
                return out
        return None

    return walk(0, 0, ())


def transfer_witness(
    ctx: WContext,
    n: int,
    s: int,
    spec: PrimeSubsetSpec,
    table: PrimeTable,
    kappa: float = 0.1,
) -> ReprWitness:
    """Residue selection, then an index search in the transferred variables.

    Picks residues b_j by density, forms m = (n - sum b_j)/W, and searches
    for indices n_j in the support of each subset sequence with sum m.
    Raises Infeasible (residue selection) or NotFound (index search).
    """
    if n % 24 != s % 24:
        raise ValueError(f"need n = s (mod 24); got n = {n}, s = {s}")
    W = ctx.W
    N = (2 * n) // (s * W)
    if N < 1:
        raise NotFound(f"target {n} gives window length {N} < 1 at W = {W}")

    dt = delta_table(ctx, N, spec, table)
    residues = select_residues(ctx, dt, n, s, kappa)  # may raise Infeasible

    m, rem = divmod(n - sum(residues), W)
    if rem:
        raise RuntimeError("residue sum violates the congruence; selection is broken")

    seqs = {b: f_sequence(ctx, b, N, spec, table) for b in set(residues)}
    supports = [seqs[b].support() for b in residues]
    indices = _meet_in_middle(supports, m)
    if indices is None:
        raise NotFound(
            f"no index combination sums to m = {m} over supports of sizes "
            f"{[len(x) for x in supports]}"
        )

    primes = []
    for b, nj in zip(residues, indices):
        p = math.isqrt(W * nj + b)
        if p * p != W * nj + b or not table.is_prime(p):
            raise RuntimeError("support index does not correspond to a prime square")
        primes.append(p)
    if sum(p * p for p in primes) != n:
        raise RuntimeError("transferred witness fails the square-sum identity")
    return ReprWitness(
        n=n,
        primes=tuple(primes),
        residues=tuple(residues),
        indices=tuple(int(i) for i in indices),
        m=m,
    )


def m_window_deviation(ctx: WContext, n: int, s: int) -> float:
    """Relative deviation of m from its nominal value s*N/2 (reporting aid)."""
    N = (2 * n) // (s * ctx.W)
    if N < 1:
        return math.inf
    nominal = s * N / 2.0
    return abs(n / ctx.W - nominal) / nominal
