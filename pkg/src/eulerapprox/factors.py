"""Local Euler factors, phase-twisted partial products, and log-factor algebra.

A factor spec describes the local factors f_p(z) = 1 + sum_m a_p^m z^m of an
Euler product over primes.  Built-in kinds:

* ``zeta``      -- a_p^m = 1 for all p, m;  f_p(z) = 1/(1-z).
* ``dirichlet`` -- a_p^m = chi(p)^m for a character chi mod q;
                   f_p(z) = 1/(1 - chi(p) z).
* ``custom``    -- finite coefficient table per prime (a polynomial factor),
                   with declared growth constants c(eps).

Everything here is immutable after construction and safe for concurrent
read-only use.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .exact import QI, QI_ONE, QI_ZERO, QUARTER_UNITS, series_inverse, series_mul
from .primes import primes_in_interval

TWO_PI = 2.0 * math.pi

#: default truncation order for factor power series
DEFAULT_SERIES_ORDER = 64

#: quantized steering phases (turns)
QUARTER_GRID = (0.0, 0.25, 0.5, 0.75)


class FactorDomainError(ValueError):
    """Factor argument outside the open unit disc, or a rejected spec."""


class BranchTrackingError(RuntimeError):
    """The factor value wound through 0 while tracking the logarithm branch."""


class HypothesisError(ValueError):
    """The short-interval hypothesis sum fails at the requested h."""


# ---------------------------------------------------------------------------
# factor specs
# ---------------------------------------------------------------------------


def _check_polynomial_zero_free(coeffs: Sequence[complex], radius: float = 1.0 - 1e-3,
                                samples: int = 1024) -> bool:
    """Winding-number test: True iff 1 + sum_m c_m z^m has no zero in |z| < radius.

    The factor polynomial is cheap, so the contour is sampled densely and the
    accumulated argument increment must vanish.
    """
    poly = np.concatenate(([1.0 + 0j], np.asarray(coeffs, dtype=complex)))
    ang = np.linspace(0.0, TWO_PI, samples, endpoint=False)
    z = radius * np.exp(1j * ang)
    vals = np.polyval(poly[::-1], z)
    if np.min(np.abs(vals)) < 1e-12:
        return False
    closed = np.concatenate((vals, vals[:1]))
    incr = np.angle(closed[1:] / closed[:-1])
    winding = np.sum(incr) / TWO_PI
    return abs(winding) < 0.25


@dataclass(frozen=True)
class EulerFactorSpec:
    """Coefficient rule of the local factors plus growth constants.

    ``c_map`` maps eps -> c(eps) with c >= 1 and |a_p^m| <= c(eps) p^{m eps}
    for every coefficient.  Built-in kinds satisfy this with c = 1 for every
    eps, so their map is unrestricted.
    """

    kind: str
    modulus: int = 0
    character: tuple[complex, ...] = ()
    table: Mapping[int, Mapping[int, complex]] = field(default_factory=dict)
    exact_table: Mapping[int, Mapping[int, QI]] = field(default_factory=dict)
    c_map: Mapping[float, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("zeta", "dirichlet", "custom"):
            raise FactorDomainError(f"unknown factor kind {self.kind!r}")
        for eps, c in self.c_map.items():
            if eps <= 0 or c < 1.0:
                raise FactorDomainError("growth constants need eps > 0 and c >= 1")
        if self.kind == "custom":
            for p, row in self.table.items():
                for eps, c in self.c_map.items():
                    for m, a in row.items():
                        if abs(a) > c * p ** (m * eps) * (1 + 1e-12):
                            raise FactorDomainError(
                                f"coefficient a_{p}^{m} violates |a| <= c(eps) p^(m eps) "
                                f"at eps={eps}")
                coeffs = [row.get(m, 0.0) for m in range(1, max(row) + 1)] if row else []
                if not _check_polynomial_zero_free(coeffs):
                    raise FactorDomainError(f"custom factor at p={p} has a zero in |z| < 1")

    # -- coefficient access -------------------------------------------------

    def chi(self, p: int) -> complex:
        if self.kind != "dirichlet":
            raise FactorDomainError("chi only defined for dirichlet kind")
        return self.character[p % self.modulus]

    def coeff(self, p: int, m: int) -> complex:
        """a_p^m (m >= 1)."""
        if m < 1:
            raise ValueError("m >= 1")
        if self.kind == "zeta":
            return 1.0 + 0j
        if self.kind == "dirichlet":
            return self.chi(p) ** m
        return complex(self.table.get(p, {}).get(m, 0.0))

    def coeff_exact(self, p: int, m: int) -> QI:
        if self.kind == "zeta":
            return QI_ONE
        if self.kind == "custom" and self.exact_table:
            return self.exact_table.get(p, {}).get(m, QI_ZERO)
        raise FactorDomainError("no exact coefficients for this spec")

    def a1(self, p: int) -> complex:
        return self.coeff(p, 1)

    def table_degree(self, p: int) -> int:
        row = self.table.get(p, {})
        return max(row) if row else 0

    def c_of(self, eps: float) -> float:
        """Growth constant c(eps); built-ins are 1 for every eps."""
        if self.kind in ("zeta", "dirichlet"):
            return 1.0
        if eps in self.c_map:
            return self.c_map[eps]
        raise FactorDomainError(f"custom spec declares no growth constant at eps={eps}")

    def phase_correction(self, p: int) -> float:
        """arg a_p^1 / 2pi in turns; 0 when the leading coefficient vanishes."""
        a = self.a1(p)
        if a == 0:
            return 0.0
        return (cmath.phase(a) / TWO_PI) % 1.0


def zeta_spec() -> EulerFactorSpec:
    return EulerFactorSpec(kind="zeta")


def dirichlet_spec(modulus: int, character: Sequence[complex]) -> EulerFactorSpec:
    if len(character) != modulus:
        raise FactorDomainError("character table must list chi(0..q-1)")
    return EulerFactorSpec(kind="dirichlet", modulus=modulus,
                           character=tuple(complex(x) for x in character))


def custom_spec(table: Mapping[int, Mapping[int, complex]],
                c_map: Mapping[float, float],
                exact_table: Mapping[int, Mapping[int, QI]] | None = None) -> EulerFactorSpec:
    return EulerFactorSpec(kind="custom", table={p: dict(r) for p, r in table.items()},
                           exact_table=exact_table or {}, c_map=dict(c_map))


# -- custom spec file: rows "p m re im", headers "c_eps <eps> <c>" ----------


def save_custom_spec(path: str, spec: EulerFactorSpec) -> None:
    if spec.kind != "custom":
        raise FactorDomainError("only custom specs are serialized")
    with open(path, "w") as fh:
        for eps in sorted(spec.c_map):
            fh.write(f"c_eps {eps!r} {spec.c_map[eps]!r}\n")
        for p in sorted(spec.table):
            for m in sorted(spec.table[p]):
                a = complex(spec.table[p][m])
                fh.write(f"{p} {m} {a.real!r} {a.imag!r}\n")


def load_custom_spec(path: str) -> EulerFactorSpec:
    table: dict[int, dict[int, complex]] = {}
    c_map: dict[float, float] = {}
    with open(path) as fh:
        for ln, line in enumerate(fh, 1):
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            if parts[0] == "c_eps":
                if len(parts) != 3:
                    raise ValueError(f"{path}:{ln}: malformed c_eps header")
                c_map[float(parts[1])] = float(parts[2])
            else:
                if len(parts) != 4:
                    raise ValueError(f"{path}:{ln}: expected 'p m re im'")
                p, m = int(parts[0]), int(parts[1])
                table.setdefault(p, {})[m] = complex(float(parts[2]), float(parts[3]))
    if not c_map:
        raise ValueError(f"{path}: custom spec must declare at least one c_eps line")
    return custom_spec(table, c_map)


# ---------------------------------------------------------------------------
# phase assignments
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PhaseAssignment:
    """Finite map prime -> twist theta_p in [0,1) turns, plus the t0 shift.

    The product twist of prime p is theta_p + gamma_p where
    gamma_p = t0 log p / 2pi for shifted primes and 0 otherwise.  By default
    every mapped prime is shifted; a restricted shift set supports schedules
    that only shift their mandatory primes.
    """

    theta: Mapping[int, float]
    t0: float = 0.0
    shifted: frozenset[int] | None = None

    def __post_init__(self):
        for p, th in self.theta.items():
            if not (0.0 <= th < 1.0):
                raise ValueError(f"theta_{p}={th} outside [0,1)")

    def gamma(self, p: int) -> float:
        if self.t0 == 0.0:
            return 0.0
        if self.shifted is not None and p not in self.shifted:
            return 0.0
        return self.t0 * math.log(p) / TWO_PI

    def twist(self, p: int) -> float:
        return self.theta.get(p, 0.0) + self.gamma(p)

    def primes(self) -> list[int]:
        return sorted(self.theta)


def trivial_phases(primes: Sequence[int] | None = None, t0: float = 0.0) -> PhaseAssignment:
    return PhaseAssignment({int(p): 0.0 for p in (primes or [])}, t0=t0)


# ---------------------------------------------------------------------------
# factor evaluation
# ---------------------------------------------------------------------------


def eval_factor(spec: EulerFactorSpec, p: int, z: complex,
                m_max: int = DEFAULT_SERIES_ORDER) -> complex:
    """Truncated factor series 1 + sum_{m<=m_max} a_p^m z^m.

    Requires |z| < 1.  For the built-in kinds the geometric tail bound
    |a_p^m z^m| <= |z|^m makes the truncation error at most
    |z|^{m_max+1}/(1-|z|).
    """
    if abs(z) >= 1.0:
        raise FactorDomainError(f"|z|={abs(z)} >= 1 for factor at p={p}")
    if spec.kind == "zeta":
        # sum_{m<=M} z^m in closed form, stable for z near 0
        if z == 0:
            return 1.0 + 0j
        return 1.0 + z * (1.0 - z**m_max) / (1.0 - z)
    if spec.kind == "dirichlet":
        w = spec.chi(p) * z
        if w == 0:
            return 1.0 + 0j
        return 1.0 + w * (1.0 - w**m_max) / (1.0 - w)
    acc = 1.0 + 0j
    zp = 1.0 + 0j
    row = spec.table.get(p, {})
    for m in range(1, min(m_max, spec.table_degree(p)) + 1):
        zp *= z
        a = row.get(m)
        if a:
            acc += a * zp
    return acc


def factor_value(spec: EulerFactorSpec, p: int, z: complex) -> complex:
    """Exact factor value: closed form for built-ins, full polynomial for custom."""
    if abs(z) >= 1.0:
        raise FactorDomainError(f"|z|={abs(z)} >= 1 for factor at p={p}")
    if spec.kind == "zeta":
        return 1.0 / (1.0 - z)
    if spec.kind == "dirichlet":
        return 1.0 / (1.0 - spec.chi(p) * z)
    return eval_factor(spec, p, z, m_max=max(1, spec.table_degree(p)))


def twist_argument(p: int, s: complex, phases: PhaseAssignment) -> complex:
    """Factor argument e^{-2 pi i (theta_p + gamma_p)} p^{-s}."""
    return cmath.exp(-1j * TWO_PI * phases.twist(p) - s * math.log(p))


def partial_product(spec: EulerFactorSpec, s: complex, primes: Sequence[int],
                    phases: PhaseAssignment | None = None) -> complex:
    """Finite twisted product over the given primes at exponent s.

    The empty product is 1.  Every factor argument must have modulus < 1,
    which for p >= 2 means Re s > 0.
    """
    phases = phases or trivial_phases()
    acc = 1.0 + 0j
    for p in primes:
        acc *= factor_value(spec, int(p), twist_argument(int(p), s, phases))
    return acc


def partial_product_grid(spec: EulerFactorSpec, s: np.ndarray, primes: Sequence[int],
                         phases: PhaseAssignment | None = None) -> np.ndarray:
    """Vectorized partial_product over an array of exponents s."""
    phases = phases or trivial_phases()
    s = np.asarray(s, dtype=complex)
    if np.any(s.real <= 0.0) and len(primes):
        raise FactorDomainError("Re s must be positive for |p^{-s}| < 1")
    acc = np.ones_like(s)
    for p in primes:
        p = int(p)
        z = np.exp(-1j * TWO_PI * phases.twist(p) - s * math.log(p))
        if spec.kind == "zeta":
            acc = acc / (1.0 - z)
        elif spec.kind == "dirichlet":
            acc = acc / (1.0 - spec.chi(p) * z)
        else:
            row = spec.table.get(p, {})
            fz = np.ones_like(s)
            zp = np.ones_like(s)
            for m in range(1, spec.table_degree(p) + 1):
                zp = zp * z
                a = row.get(m)
                if a:
                    fz = fz + a * zp
            acc = acc * fz
    return acc


def partial_product_exact(spec: EulerFactorSpec, s: int, primes: Sequence[int],
                          quarter_phases: Mapping[int, Fraction] | None = None) -> QI:
    """Exact partial product in Q(i) at an integer exponent s >= 1.

    Phases are restricted to quarter turns so every factor argument
    e^{-2 pi i q} p^{-s} lies in Q(i).  Only zeta and custom-with-exact-table
    specs support this mode.
    """
    if s < 1:
        raise FactorDomainError("exact mode needs integer s >= 1")
    quarter_phases = quarter_phases or {}
    acc = QI_ONE
    for p in primes:
        p = int(p)
        q = Fraction(quarter_phases.get(p, 0)) % 1
        if q not in QUARTER_UNITS:
            raise FactorDomainError(f"phase {q} is not a quarter turn")
        z = QUARTER_UNITS[q] * QI(Fraction(1, p**s), Fraction(0))
        if spec.kind == "zeta":
            acc = acc * (QI_ONE / (QI_ONE - z))
        else:
            fz = QI_ONE
            zp = QI_ONE
            for m in range(1, spec.table_degree(p) + 1):
                zp = zp * z
                a = spec.coeff_exact(p, m)
                if not a.is_zero():
                    fz = fz + a * zp
            acc = acc * fz
    return acc


# ---------------------------------------------------------------------------
# coefficients of f_p(z) / (1 + a_p^1 z)
# ---------------------------------------------------------------------------


def quotient_coefficients(spec: EulerFactorSpec, p: int, m_max: int) -> list[complex]:
    """Coefficients b_2..b_{m_max} of f_p(z)/(1 + a_p^1 z) - 1.

    Computed by the alternating sum
    b_m = a_p^m - a_p^{m-1} a_p^1 + ... + (-1)^{m-2} a_p^2 (a_p^1)^{m-2},
    which unrolls the recursion b_m = a_p^m - a_p^1 b_{m-1}.  A leading
    coefficient with |a_p^1| > 1 puts a pole of the quotient inside |z| < 1
    and is rejected.
    """
    if m_max < 2:
        raise ValueError("m_max >= 2")
    a1 = spec.a1(p)
    if abs(a1) > 1.0 + 1e-12:
        raise FactorDomainError(
            f"|a_{p}^1|={abs(a1)} > 1: quotient by (1 + a1 z) has a pole in |z| < 1")
    out = []
    for m in range(2, m_max + 1):
        s = 0.0 + 0j
        sign = 1.0
        for j in range(0, m - 1):
            s += sign * spec.coeff(p, m - j) * a1**j
            sign = -sign
        out.append(s)
    return out


def quotient_coefficients_by_division(spec: EulerFactorSpec, p: int, m_max: int) -> list[complex]:
    """Same coefficients via power-series division; independent oracle route."""
    a1 = spec.a1(p)
    f = [1.0 + 0j] + [spec.coeff(p, m) for m in range(1, m_max + 1)]
    g = [1.0 + 0j, a1] + [0j] * (m_max - 1)
    inv = [1.0 + 0j]
    for k in range(1, m_max + 1):
        acc = 0j
        for j in range(1, k + 1):
            if j < len(g):
                acc += g[j] * inv[k - j]
        inv.append(-acc)
    q = [0j] * (m_max + 1)
    for i in range(m_max + 1):
        for j in range(m_max + 1 - i):
            q[i + j] += f[i] * inv[j]
    return q[2:]


def quotient_coefficients_exact(spec: EulerFactorSpec, p: int, m_max: int,
                                by_division: bool = False) -> list[QI]:
    """Exact-rational version of the two quotient-coefficient routes."""
    if m_max < 2:
        raise ValueError("m_max >= 2")
    a1 = spec.coeff_exact(p, 1)
    if a1.abs2() > 1:
        raise FactorDomainError("exact quotient rejected: |a_p^1| > 1")
    if not by_division:
        out = []
        for m in range(2, m_max + 1):
            s = QI_ZERO
            a1p = QI_ONE
            for j in range(0, m - 1):
                term = spec.coeff_exact(p, m - j) * a1p
                s = s + (term if j % 2 == 0 else -term)
                a1p = a1p * a1
            out.append(s)
        return out
    f = [QI_ONE] + [spec.coeff_exact(p, m) for m in range(1, m_max + 1)]
    g = [QI_ONE, a1] + [QI_ZERO] * (m_max - 1)
    q = series_mul(f, series_inverse(g, m_max), m_max)
    return q[2:]


# ---------------------------------------------------------------------------
# the logarithm of one twisted factor
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LogFactor:
    """log f_p at a twisted argument, split as total = leading + tail.

    ``leading`` is the first-order term a_p^1 * z of the log series; ``tail``
    collects everything quadratic and beyond.
    """

    total: complex
    leading: complex
    tail: complex


def branch_threshold(spec: EulerFactorSpec, eps: float, r: float, sigma0: float) -> float:
    """Smallest prime size above which |f_p - 1| < 1 holds on |s| <= r.

    |f_p - 1| <= c q/(1-q) with q = c(eps) p^{eps+r-sigma0}; the principal
    logarithm is safe once that is below 1, i.e. q < 1/(1+c).
    """
    c = spec.c_of(eps) if spec.kind == "custom" else 1.0
    expo = sigma0 - r - eps
    if expo <= 0:
        return math.inf
    return (1.0 + c) ** (1.0 / expo)


def _tracked_log(spec: EulerFactorSpec, p: int, z: complex, steps: int = 128) -> complex:
    """log f_p(z) by continuous branch tracking along the ray 0 -> z.

    Accumulates argument increments of the factor value along the segment;
    fails if the value passes too close to 0 for the increments to be safe.
    """
    ts = np.linspace(0.0, 1.0, steps + 1)
    vals = np.array([factor_value(spec, p, t * z) for t in ts])
    if np.min(np.abs(vals)) < 1e-12:
        raise BranchTrackingError(f"factor value at p={p} passes through 0")
    incr = np.angle(vals[1:] / vals[:-1])
    if np.max(np.abs(incr)) > 0.5 * math.pi:
        vals = np.array([factor_value(spec, p, t * z) for t in np.linspace(0, 1, 8 * steps + 1)])
        if np.min(np.abs(vals)) < 1e-12:
            raise BranchTrackingError(f"factor value at p={p} passes through 0")
        incr = np.angle(vals[1:] / vals[:-1])
        if np.max(np.abs(incr)) > 0.5 * math.pi:
            raise BranchTrackingError(f"branch tracking unstable at p={p}")
    return math.log(abs(vals[-1])) + 1j * float(np.sum(incr))


def log_factor(spec: EulerFactorSpec, p: int, s: complex, theta: float,
               gamma: float = 0.0, sigma0: float = 0.75,
               eps: float = 0.05, r: float | None = None) -> LogFactor:
    """Split logarithm of the twisted factor at local coordinate s.

    The factor argument is z = e^{-2 pi i (theta+gamma)} p^{-s-sigma0}; the
    leading part is a_p^1 z and the tail is log f_p(z) - a_p^1 z.  The
    principal branch is used where |f_p - 1| < 1 is guaranteed; smaller
    primes fall back to continuous tracking along the ray to z.
    """
    z = cmath.exp(-1j * TWO_PI * (theta + gamma) - (s + sigma0) * math.log(p))
    if abs(z) >= 1.0:
        raise FactorDomainError(f"twisted argument has modulus {abs(z)} >= 1 at p={p}")
    r_eff = abs(s) if r is None else r
    if p >= branch_threshold(spec, eps, r_eff, sigma0):
        u = cmath.log(factor_value(spec, p, z))
    else:
        # zeta/dirichlet values lie in Re > 1/2, where the principal branch
        # is already continuous; custom factors get tracked.
        if spec.kind in ("zeta", "dirichlet"):
            u = cmath.log(factor_value(spec, p, z))
        else:
            u = _tracked_log(spec, p, z)
    leading = spec.a1(p) * z
    return LogFactor(total=u, leading=leading, tail=u - leading)


def log_tail_bound(spec: EulerFactorSpec, p: int, eps: float, r: float,
                   sigma0: float) -> float:
    """Certified bound 4 c(eps) p^{-2 eps - 1} for the log-factor tail.

    Valid once the prime is large enough, 2 c(eps) p^{eps+r-sigma0} <= 1/2,
    and eps is small enough that 4 eps + 2r - 2 sigma0 <= -1; both gates are
    enforced.  Under them the quadratic-and-beyond part of the log series is
    geometrically dominated and the stated power bound holds uniformly on
    |s| <= r.
    """
    c = spec.c_of(eps)
    if 4.0 * eps + 2.0 * r - 2.0 * sigma0 > -1.0 + 1e-12:
        raise FactorDomainError(
            f"eps={eps} too large for the tail bound: need 4 eps + 2r - 2 sigma0 <= -1")
    if 2.0 * c * p ** (eps + r - sigma0) > 0.5 + 1e-12:
        raise FactorDomainError(
            f"prime {p} too small for bound; use direct evaluation "
            f"(need 2 c(eps) p^(eps+r-sigma0) <= 1/2)")
    return 4.0 * c * p ** (-2.0 * eps - 1.0)


def log_series_coefficients(spec: EulerFactorSpec, p: int,
                            order: int = DEFAULT_SERIES_ORDER) -> np.ndarray:
    """Coefficients c_1..c_order of log f_p(z) = sum_m c_m z^m.

    zeta: c_m = 1/m.  dirichlet: c_m = chi(p)^m/m.  custom: formal log of
    the factor polynomial via the standard recurrence
    m c_m = m a_m - sum_{j<m} j c_j a_{m-j}.
    """
    ms = np.arange(1, order + 1, dtype=float)
    if spec.kind == "zeta":
        return (1.0 / ms).astype(complex)
    if spec.kind == "dirichlet":
        return spec.chi(p) ** np.arange(1, order + 1) / ms
    a = np.zeros(order + 1, dtype=complex)
    for m in range(1, order + 1):
        a[m] = spec.coeff(p, m)
    c = np.zeros(order + 1, dtype=complex)
    for m in range(1, order + 1):
        acc = m * a[m]
        for j in range(1, m):
            acc -= j * c[j] * a[m - j]
        c[m] = acc / m
    return c[1:]


# ---------------------------------------------------------------------------
# four-block partition of short-interval primes
# ---------------------------------------------------------------------------


def hypothesis_window(h: float, width_factor: float | None = None) -> tuple[float, float]:
    """The short interval (h, h (1 + log^-10 h)] (natural log).

    ``width_factor`` overrides the relative width; the default window is
    narrower than one integer until h is astronomically large, so synthetic
    widths are the only way to exercise the machinery at desk scale.
    """
    if h <= math.e:
        raise ValueError("h must exceed e so that log h > 1")
    wf = math.log(h) ** (-10.0) if width_factor is None else width_factor
    return h, h * (1.0 + wf)


def interval_weights(spec: EulerFactorSpec, h: float, lam: float,
                     width_factor: float | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Primes in the window and their weights |a_p^1| p^{-(1-lam)}."""
    lo, hi = hypothesis_window(h, width_factor)
    ps = primes_in_interval(lo, hi)
    w = np.array([abs(spec.a1(int(p))) * float(p) ** (lam - 1.0) for p in ps])
    return ps, w


@dataclass(frozen=True)
class PrimeBlockPartition:
    """Four blocks of short-interval primes with balanced weighted sums."""

    h: float
    lam: float
    c0: float
    lo: float
    hi: float
    blocks: tuple[tuple[int, ...], tuple[int, ...], tuple[int, ...], tuple[int, ...]]
    block_sums: tuple[float, float, float, float]
    threshold: float          # c0 h^{lam/4}
    degenerate: bool          # fewer than 4 primes in the window

    def rho(self, p: int) -> int:
        """Quarter-phase index i-1 of the block containing p."""
        for i, blk in enumerate(self.blocks):
            if p in blk:
                return i
        raise KeyError(f"{p} not in any block")


def partition_blocks(spec: EulerFactorSpec, h: float, lam: float, c0: float,
                     width_factor: float | None = None) -> PrimeBlockPartition:
    """Greedy transfer partition of window primes into four blocks.

    Round-robin over ascending primes seeds the blocks; addends then move
    from the heaviest block to deficient ones while the donor keeps at least
    0.2 of the full threshold, until every block reaches the 0.1 floor.
    Raises HypothesisError when the full-interval sum is below c0 h^{lam/4};
    fewer than four window primes yields a flagged degenerate partition.
    """
    lo, hi = hypothesis_window(h, width_factor)
    ps, w = interval_weights(spec, h, lam, width_factor)
    total = float(np.sum(w))
    threshold = c0 * h ** (lam / 4.0)
    if total < threshold - 1e-15:
        raise HypothesisError(f"hypothesis fails at h={h}: sum {total} < {threshold}")

    items = [(int(p), float(wi)) for p, wi in zip(ps, w)]
    blocks: list[list[tuple[int, float]]] = [[], [], [], []]
    for i, it in enumerate(items):
        blocks[i % 4].append(it)

    degenerate = len(items) < 4
    floor = 0.1 * threshold
    guard = 0.2 * threshold

    def bsum(b):
        return sum(wi for _, wi in b)

    if not degenerate and floor > 0:
        for _ in range(4 * len(items) + 8):
            sums = [bsum(b) for b in blocks]
            need = [i for i in range(4) if sums[i] < floor]
            if not need:
                break
            tgt = min(need, key=lambda i: sums[i])
            donors = sorted(range(4), key=lambda i: -sums[i])
            moved = False
            for d in donors:
                if d == tgt:
                    continue
                # move lightest addends out of the donor, as the transfer
                # procedure returns small addends first
                blocks[d].sort(key=lambda t: (t[1], t[0]))
                while blocks[d] and bsum(blocks[tgt]) < floor:
                    item = blocks[d][0]
                    if bsum(blocks[d]) - item[1] < guard:
                        break
                    blocks[d].pop(0)
                    blocks[tgt].append(item)
                    moved = True
                if bsum(blocks[tgt]) >= floor:
                    break
            if not moved:
                raise HypothesisError(
                    f"cannot partition at h={h}: an addend is too large relative to the floor")
        sums = [bsum(b) for b in blocks]
        if any(s < floor - 1e-15 for s in sums):
            raise HypothesisError(f"cannot partition at h={h}: floors unreachable")

    tidy = tuple(tuple(sorted(p for p, _ in b)) for b in blocks)
    sums = tuple(float(bsum(b)) for b in blocks)
    return PrimeBlockPartition(h=h, lam=lam, c0=c0, lo=lo, hi=hi, blocks=tidy,
                               block_sums=sums, threshold=threshold, degenerate=degenerate)
