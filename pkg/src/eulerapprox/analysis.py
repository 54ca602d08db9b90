"""Verification instruments: interval sums, zero counting, error surveys.

All operations are pure over immutable inputs; grid evaluations vectorize
per point and are safe to fan out across workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .factors import EulerFactorSpec, interval_weights

TWO_PI = 2.0 * math.pi


# ---------------------------------------------------------------------------
# sampling grids
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DiscGrid:
    """Samples of a closed disc: equispaced boundary plus interior rings."""

    center: complex
    radius: float
    boundary: int = 256
    rings: int = 4

    def boundary_points(self) -> np.ndarray:
        ang = TWO_PI * np.arange(self.boundary) / self.boundary
        return self.center + self.radius * np.exp(1j * ang)

    def points(self) -> np.ndarray:
        pts = [self.boundary_points(), np.array([self.center])]
        for i in range(1, self.rings + 1):
            rho = self.radius * i / (self.rings + 1)
            n = max(8, int(self.boundary * i / (self.rings + 1)))
            ang = TWO_PI * np.arange(n) / n
            pts.append(self.center + rho * np.exp(1j * ang))
        return np.concatenate(pts)


@dataclass(frozen=True)
class Circle:
    center: complex
    radius: float

    def points(self, n: int) -> np.ndarray:
        ang = TWO_PI * np.arange(n) / n
        return self.center + self.radius * np.exp(1j * ang)


# ---------------------------------------------------------------------------
# the short-interval hypothesis sum
# ---------------------------------------------------------------------------


def hypothesis_sum(spec: EulerFactorSpec, h: float, lam: float,
                   width_factor: float | None = None) -> float:
    """sum |a_p^1| p^{-(1-lam)} over primes in (h, h(1+log^-10 h)].

    The default window is narrower than unit length for every h below about
    e^41, in which case the sum over the (empty) prime set is exactly 0.
    """
    _, w = interval_weights(spec, h, lam, width_factor)
    return float(np.sum(w))


@dataclass(frozen=True)
class HypothesisRow:
    h: float
    prime_count: int
    value: float
    threshold: float
    passed: bool


@dataclass(frozen=True)
class HypothesisReport:
    lam: float
    c0: float
    rows: tuple[HypothesisRow, ...]
    first_failure: float | None

    def all_pass(self) -> bool:
        return all(r.passed for r in self.rows)

    def to_text(self) -> str:
        lines = [f"lambda {self.lam!r}", f"c0 {self.c0!r}",
                 "h prime_count sum threshold pass"]
        for r in self.rows:
            lines.append(f"{r.h!r} {r.prime_count} {r.value!r} {r.threshold!r} "
                         f"{int(r.passed)}")
        return "\n".join(lines) + "\n"


def fit_c0(spec: EulerFactorSpec, lam: float, h_list: Sequence[float],
           width_factor: float | None = None) -> HypothesisReport:
    """Largest c0 with sum >= c0 h^{lam/4} across the h grid.

    A window with zero sum admits no positive c0; such h are failures and
    the fitted constant is reported as 0.
    """
    if len(h_list) == 0:
        raise ValueError("h_list must be nonempty")
    hs = list(h_list)
    if any(b <= a for a, b in zip(hs, hs[1:])):
        raise ValueError("h_list must be ascending")
    sums, counts = [], []
    for h in hs:
        ps, w = interval_weights(spec, h, lam, width_factor)
        sums.append(float(np.sum(w)))
        counts.append(len(ps))
    ratios = [s / h ** (lam / 4.0) for s, h in zip(sums, hs)]
    if all(s > 0 for s in sums):
        c0 = min(ratios)
        first_fail = None
    else:
        c0 = 0.0
        first_fail = hs[next(i for i, s in enumerate(sums) if s <= 0.0)]
    rows = tuple(
        HypothesisRow(h=h, prime_count=c, value=s, threshold=c0 * h ** (lam / 4.0),
                      passed=(s > 0.0 and s >= c0 * h ** (lam / 4.0) - 1e-15))
        for h, c, s in zip(hs, counts, sums))
    return HypothesisReport(lam=lam, c0=c0, rows=rows, first_failure=first_fail)


# ---------------------------------------------------------------------------
# argument-principle zero counting
# ---------------------------------------------------------------------------


class ContourZeroError(RuntimeError):
    """A value on the contour is too close to zero to count windings."""


def _winding(vals: np.ndarray) -> tuple[float, float]:
    closed = np.concatenate((vals, vals[:1]))
    incr = np.angle(closed[1:] / closed[:-1])
    return float(np.sum(incr) / TWO_PI), float(np.max(np.abs(incr)))


def zero_count(f: Callable[[np.ndarray], np.ndarray], contour: Circle,
               quadrature_n: int = 512, max_doublings: int = 6,
               guard: float = 1e-12) -> int:
    """Number of zeros of f inside the circle, by accumulated argument.

    No derivative is needed: the winding of the sampled values is summed
    directly.  Sampling is doubled until the count stabilizes and every step
    turns by less than pi/2; a sampled modulus below the guard aborts, since
    the contour then (numerically) passes through a zero.
    """
    n = quadrature_n
    prev = None
    for _ in range(max_doublings + 1):
        vals = np.asarray(f(contour.points(n)), dtype=complex)
        if float(np.min(np.abs(vals))) < guard:
            raise ContourZeroError("zero on (or numerically on) the contour")
        w, step = _winding(vals)
        stable = step < 0.5 * math.pi and abs(w - round(w)) < 0.25
        if stable and prev is not None and round(w) == prev:
            return int(round(w))
        prev = int(round(w)) if stable else None
        n *= 2
    raise ContourZeroError(f"winding failed to stabilize (last estimate {w})")


def min_modulus(f: Callable[[np.ndarray], np.ndarray], contour: Circle,
                samples: int = 256, refine_rounds: int = 3) -> float:
    """min |f| on the circle: coarse scan plus local bisection refinement."""
    if samples < 64:
        raise ValueError("samples >= 64")
    ang = TWO_PI * np.arange(samples) / samples
    vals = np.abs(f(contour.center + contour.radius * np.exp(1j * ang)))
    k = int(np.argmin(vals))
    best = float(vals[k])
    lo, hi = ang[k] - TWO_PI / samples, ang[k] + TWO_PI / samples
    for _ in range(refine_rounds):
        grid = np.linspace(lo, hi, 9)
        v = np.abs(f(contour.center + contour.radius * np.exp(1j * grid)))
        j = int(np.argmin(v))
        best = min(best, float(v[j]))
        span = (hi - lo) / 4
        lo, hi = grid[j] - span, grid[j] + span
    return best


@dataclass(frozen=True)
class RoucheResult:
    passed: bool
    margin: float
    min_f: float
    max_diff: float
    zeros_f: int | None = None
    zeros_g: int | None = None


def rouche_check(f: Callable[[np.ndarray], np.ndarray],
                 g: Callable[[np.ndarray], np.ndarray],
                 contour: Circle, samples: int = 256) -> RoucheResult:
    """Dominance test max|f-g| < min|f| on the circle.

    On a pass, both zero counts are computed and must agree (they are equal
    whenever the dominance inequality holds on the whole contour); the
    counts are part of the result rather than assumed.
    """
    pts = contour.points(max(samples, 64))
    fd = np.abs(np.asarray(f(pts)) - np.asarray(g(pts)))
    max_diff = float(np.max(fd))
    mf = min_modulus(f, contour, samples=max(samples, 64))
    margin = mf - max_diff
    if margin <= 0:
        return RoucheResult(False, margin, mf, max_diff)
    zf = zero_count(f, contour)
    zg = zero_count(g, contour)
    if zf != zg:
        raise ContourZeroError(
            f"dominance holds on samples but counts differ ({zf} vs {zg}); "
            f"the sampling missed a near-zero of f")
    return RoucheResult(True, margin, mf, max_diff, zf, zg)


# ---------------------------------------------------------------------------
# max-modulus error surveys
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SurveyResult:
    max_error: float
    argmax: complex
    rows: np.ndarray  # columns: re, im, abs_error

    def heatmap_text(self) -> str:
        return "\n".join(f"{r!r} {i!r} {e!r}" for r, i, e in self.rows) + "\n"


def disc_error_survey(target: Callable[[np.ndarray], np.ndarray],
                      approx: Callable[[np.ndarray], np.ndarray],
                      grid: DiscGrid) -> SurveyResult:
    """max |target - approx| over the grid, argmax point, heatmap rows.

    For an analytic difference the boundary samples dominate by the maximum
    principle; interior rings are kept as a cross-check.
    """
    pts = grid.points()
    err = np.abs(np.asarray(target(pts), dtype=complex)
                 - np.asarray(approx(pts), dtype=complex))
    k = int(np.argmax(err))
    rows = np.column_stack((pts.real, pts.imag, err))
    return SurveyResult(max_error=float(err[k]), argmax=complex(pts[k]), rows=rows)
