"""Greedy disc approximation by phase-twisted partial products.

Pipeline: take the logarithm of the target on a slightly larger disc, remove
the logs of the mandatory small-prime factors, and then steer a pool of
larger primes one at a time -- each step picks the (prime, phase) pair whose
twisted log-factor best reduces the working residual in the disc norm.  The
working residual tracks *exact* log-factor vectors, so a target that is
itself a twisted partial product can be recovered to roundoff.  A doubling
schedule of the mandatory floor repeats the construction with frozen phases
and a sampled mean-value choice for the unsteered primes.

Candidate scoring is embarrassingly parallel over the pool; acceptance is a
single sequential commit per step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping, Sequence

import numpy as np

from .analysis import DiscGrid, SurveyResult, disc_error_survey
from .factors import (
    QUARTER_GRID,
    EulerFactorSpec,
    PhaseAssignment,
    log_series_coefficients,
    partial_product_grid,
)
from .hardy import H2Element, log_target
from .primes import primes_up_to

TWO_PI = 2.0 * math.pi


class InvalidProblem(ValueError):
    """A disc/schedule parameter violates one of the required inequalities."""


class ApproximationStall(RuntimeError):
    """Greedy steering stopped with the surveyed error still above tolerance."""

    def __init__(self, msg: str, result: "ApproximationResult"):
        super().__init__(msg)
        self.result = result


class RefineStall(RuntimeError):
    """A schedule stage could not match the previous stage's error."""


# ---------------------------------------------------------------------------
# problem statement
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ApproximationProblem:
    """A non-vanishing target on |s| <= r around sigma0, and the knobs.

    ``target`` maps local coordinates (vectorized over numpy arrays) to
    values; the product approximant is evaluated at exponent s + sigma0.
    ``preset_phases`` pins twists for primes at or below the floor y;
    ``fixed_phases`` freezes twists of larger primes (used by schedules).
    With ``contract`` the target is replaced by s -> target(s/gamma_c^2),
    which is analytic on the enlarged disc whenever the original is analytic
    on |s| <= r; disable it only for targets already analytic and zero-free
    beyond radius gamma_c * r.
    """

    spec: EulerFactorSpec
    target: Callable[[np.ndarray], np.ndarray]
    sigma0: float = 0.75
    r: float = 0.02
    eps: float = 0.1
    y: float = 2.0
    gamma_c: float = 2.0
    lam: float = 0.01
    delta: float = 0.01
    t0: float = 0.0
    p_max: int = 100_000
    seed: int = 0
    order: int = 64
    series_order: int = 64
    phase_mode: str = "quarter"
    preset_phases: Mapping[int, float] = field(default_factory=dict)
    fixed_phases: Mapping[int, float] = field(default_factory=dict)
    contract: bool = True
    survey_boundary: int = 256
    survey_rings: int = 4
    max_steps: int = 600

    @property
    def r0(self) -> float:
        return min(1.0 - self.sigma0, self.sigma0 - 0.5)

    @property
    def hardy_radius(self) -> float:
        return self.gamma_c * self.r

    def validate(self) -> None:
        if not (0.5 < self.sigma0 < 1.0):
            raise InvalidProblem(f"violated: 1/2 < sigma0 < 1 (sigma0={self.sigma0})")
        if not (0.0 < self.r < self.r0):
            raise InvalidProblem(
                f"violated: r < r0 = min(1-sigma0, sigma0-1/2) (r={self.r}, r0={self.r0})")
        if not (self.gamma_c > 1.0):
            raise InvalidProblem(f"violated: gamma > 1 (gamma={self.gamma_c})")
        if not (self.gamma_c**2 * self.r < self.r0):
            raise InvalidProblem(
                f"violated: gamma^2 r < r0 ({self.gamma_c**2 * self.r} >= {self.r0})")
        if not (self.r + self.delta + 2.0 * self.lam < self.r0):
            raise InvalidProblem(
                f"violated: r + delta + 2 lambda < r0 "
                f"({self.r + self.delta + 2 * self.lam} >= {self.r0})")
        if not (0.5 + self.r + 2.0 * self.lam + self.delta - self.sigma0 < 0.0):
            raise InvalidProblem(
                "violated: 1/2 + r + 2 lambda + delta - sigma0 < 0 "
                f"(= {0.5 + self.r + 2 * self.lam + self.delta - self.sigma0})")
        if self.y < 2.0:
            raise InvalidProblem(f"violated: y >= 2 (y={self.y})")
        if self.eps <= 0:
            raise InvalidProblem("violated: eps > 0")
        if self.phase_mode not in ("quarter", "golden"):
            raise InvalidProblem(f"unknown phase mode {self.phase_mode!r}")

    def schedule_exponent(self) -> float:
        return 0.5 + self.r + 2.0 * self.lam + self.delta - self.sigma0


def norm_to_max(radius: float, r: float) -> float:
    """Factor bounding sup_{|s|<=r} |f| by ||f|| / (sqrt(pi) (R - r))."""
    return 1.0 / (math.sqrt(math.pi) * (radius - r))


def product_target(spec: EulerFactorSpec, primes: Sequence[int],
                   phases: PhaseAssignment, sigma0: float) -> Callable[[np.ndarray], np.ndarray]:
    """Local-coordinate evaluator of a twisted partial product (test targets)."""
    plist = [int(p) for p in primes]

    def g(s: np.ndarray) -> np.ndarray:
        return partial_product_grid(spec, np.asarray(s, dtype=complex) + sigma0, plist, phases)

    return g


def contract_target(problem: ApproximationProblem,
                    samples: int = 512) -> tuple[ApproximationProblem, float]:
    """Replace the target by s -> target(s / gamma^2); report the deviation.

    The deviation is max |g(s) - g(s/gamma^2)| over a dense boundary sample
    of |s| = r (the max of the analytic difference sits on the boundary).
    """
    problem.validate()
    g = problem.target
    gsq = problem.gamma_c**2

    def contracted(s: np.ndarray) -> np.ndarray:
        return g(np.asarray(s, dtype=complex) / gsq)

    ang = TWO_PI * np.arange(samples) / samples
    pts = problem.r * np.exp(1j * ang)
    dev = float(np.max(np.abs(np.asarray(g(pts)) - np.asarray(contracted(pts)))))
    return replace(problem, target=contracted, contract=False), dev


# ---------------------------------------------------------------------------
# pool machinery
# ---------------------------------------------------------------------------


def _exp_tail(a: float, upto: int) -> float:
    """Bound on sum_{n>upto} a^n/n!, computed in the log domain."""
    if a <= 0:
        return 0.0
    la = (upto + 1) * math.log(a) + a - math.lgamma(upto + 2)
    return math.exp(la) if la > -700 else 0.0


def _stored_twists(spec: EulerFactorSpec, primes: np.ndarray, steering: float) -> np.ndarray:
    """Product twists (steering + per-prime argument correction) mod 1."""
    corr = np.array([spec.phase_correction(int(p)) for p in primes])
    return np.mod(steering + corr, 1.0)


def _u_rows(spec: EulerFactorSpec, primes: np.ndarray, twists: np.ndarray,
            sigma0: float, order: int, series_order: int,
            gammas: np.ndarray | None = None) -> np.ndarray:
    """Taylor rows of the twisted log factors, shape (len(primes), order+1).

    Row p holds the coefficients of log f_p(e^{-2 pi i tw} p^{-s-sigma0})
    around s = 0, from the log series sum_m c_m z^m composed with
    z(s) = B e^{-s log p}:  alpha_n = (sum_m c_m B^m m^n) (-log p)^n / n!.
    """
    primes = np.asarray(primes, dtype=np.int64)
    npool = len(primes)
    lnp = np.log(primes.astype(float))
    tw = np.asarray(twists, dtype=float)
    if gammas is not None:
        tw = tw + gammas
    base = np.exp(-1j * TWO_PI * tw - sigma0 * lnp)  # B per prime
    ms = np.arange(1, series_order + 1, dtype=float)
    # G[p, m] = c_m(p) * B_p^m
    if spec.kind == "zeta":
        cm = (1.0 / ms)[None, :] * np.ones((npool, 1))
    elif spec.kind == "dirichlet":
        chi = np.array([spec.chi(int(p)) for p in primes])
        cm = chi[:, None] ** ms[None, :] / ms[None, :]
    else:
        cm = np.array([log_series_coefficients(spec, int(p), series_order) for p in primes])
    G = cm * base[:, None] ** ms[None, :]
    ns = np.arange(order + 1, dtype=float)
    mexp = ms[:, None] ** ns[None, :]                     # m^n
    S = G @ mexp                                          # sum_m c_m B^m m^n
    fact = np.cumprod(np.concatenate(([1.0], np.arange(1, order + 1, dtype=float))))
    direction = (-lnp[:, None]) ** ns[None, :] / fact[None, :]
    return S * direction


def _eta_rows(spec: EulerFactorSpec, primes: np.ndarray, twists: np.ndarray,
              sigma0: float, order: int, gammas: np.ndarray | None = None) -> np.ndarray:
    """Rows of the leading terms a_p^1 z(s) alone."""
    primes = np.asarray(primes, dtype=np.int64)
    lnp = np.log(primes.astype(float))
    tw = np.asarray(twists, dtype=float)
    if gammas is not None:
        tw = tw + gammas
    a1 = np.array([spec.a1(int(p)) for p in primes])
    base = a1 * np.exp(-1j * TWO_PI * tw - sigma0 * lnp)
    ns = np.arange(order + 1, dtype=float)
    fact = np.cumprod(np.concatenate(([1.0], np.arange(1, order + 1, dtype=float))))
    return base[:, None] * (-lnp[:, None]) ** ns[None, :] / fact[None, :]


def _embedding_tail(spec: EulerFactorSpec, primes: np.ndarray, radius: float,
                    sigma0: float, order: int, series_order: int) -> float:
    """Certified sup bound on what the truncated rows drop, summed over primes.

    Two cuts are covered: log-series terms beyond series_order (geometric in
    p^{radius-sigma0}) and Taylor terms beyond ``order`` (factorial tail of
    each exponential).
    """
    primes = np.asarray(primes, dtype=np.int64)
    if len(primes) == 0:
        return 0.0
    lnp = np.log(primes.astype(float))
    q = np.exp((radius - sigma0) * lnp)
    if spec.kind in ("zeta", "dirichlet"):
        m_tail = q ** (series_order + 1) / ((series_order + 1) * (1.0 - q))
        cbound = np.ones_like(q)
    else:
        # |c_m| <= K rho^-m with rho just inside the zero-free disc
        rho = 1.0 - 1e-3
        from .factors import factor_value
        ks = []
        ang = np.exp(1j * TWO_PI * np.arange(64) / 64)
        for p in primes:
            vals = [factor_value(spec, int(p), rho * a) for a in ang]
            ks.append(max(abs(np.log(v)) for v in vals) / (1 - rho) ** 0)
        ks = np.asarray(ks)
        ratio = q / rho
        m_tail = ks * ratio ** (series_order + 1) / np.maximum(1e-16, 1.0 - ratio)
        cbound = ks
    ms = np.arange(1, series_order + 1, dtype=float)
    a = ms[None, :] * lnp[:, None] * radius
    la = (order + 1) * np.log(np.maximum(a, 1e-300)) + a - math.lgamma(order + 2)
    tails = np.where(la > -700, np.exp(np.minimum(la, 700)), 0.0)
    coeff = cbound[:, None] * q[:, None] ** ms[None, :] / ms[None, :]
    n_tail = np.sum(coeff * tails, axis=1)
    return float(np.sum(m_tail + n_tail))


def beyond_pool_tail(spec: EulerFactorSpec, p_max: int, r: float,
                     sigma0: float) -> float:
    """Certified sup bound sum_{p > p_max} 4 c(eps) p^{-2 eps - 1}.

    eps is taken as large as the validity condition 4 eps + 2r - 2 sigma0
    <= -1 allows (the bound shrinks with eps); the prime sum is majorized by
    the integer sum, giving 4 c(eps) p_max^{-2 eps} / (2 eps).
    """
    eps_cap = (2.0 * sigma0 - 1.0 - 2.0 * r) / 4.0 - 1e-12
    if eps_cap <= 0:
        raise InvalidProblem("no valid eps for the beyond-pool tail bound")
    if spec.kind in ("zeta", "dirichlet"):
        eps = eps_cap
        c = 1.0
    else:
        valid = [e for e in spec.c_map if e <= eps_cap]
        if not valid:
            raise InvalidProblem("custom spec declares no growth constant small enough")
        eps = max(valid)
        c = spec.c_map[eps]
    return 4.0 * c * p_max ** (-2.0 * eps) / (2.0 * eps)


# ---------------------------------------------------------------------------
# state
# ---------------------------------------------------------------------------


@dataclass
class StallInfo:
    best_decrease: float
    best_pairing: float
    pool_exhausted: bool


@dataclass
class ApproximationState:
    """Mutable steering state: exact working residual plus the candidate pool.

    ``work`` equals log(target) minus the log factors of every prime already
    in the product.  ``residual`` (the reporting view) additionally removes
    the reference-twist curvature of the still-unsteered pool, matching the
    initialization contract.
    """

    problem: ApproximationProblem
    work: H2Element
    mandatory: dict[int, float]              # prime -> stored twist
    accepted: list[tuple[int, float]]
    pool_primes: np.ndarray
    pool_mask: np.ndarray                    # True = still available
    u_phase: list[np.ndarray]                # per steering phase: rows (npool, order+1)
    u_norm2: list[np.ndarray]
    stored_twists: list[np.ndarray]
    nu_ref: np.ndarray                       # reference-twist curvature rows
    nu_rest: np.ndarray                      # summed curvature of remaining pool
    weights: np.ndarray                      # disc norm weights
    accepted_idx: list[int] = field(default_factory=list)
    accepted_rows: list[np.ndarray] = field(default_factory=list)
    trace: list[float] = field(default_factory=list)
    tail_bound: float = 0.0
    stall: StallInfo | None = None

    @property
    def residual(self) -> H2Element:
        coef = self.work.coef - self.nu_rest
        return H2Element(self.work.radius, coef, self.work.tail_bound + self.tail_bound)

    def work_norm(self) -> float:
        return self.work.coeff_norm()

    def accepted_primes(self) -> list[int]:
        return [p for p, _ in self.accepted]

    def phase_assignment(self) -> PhaseAssignment:
        theta = dict(self.mandatory)
        theta.update({p: tw for p, tw in self.accepted})
        shifted = frozenset(self.mandatory)
        return PhaseAssignment({p: float(th % 1.0) for p, th in theta.items()},
                               t0=self.problem.t0, shifted=shifted)


def init_residual(problem: ApproximationProblem, p_max: int | None = None) -> ApproximationState:
    """Build the steering state on the disc of radius gamma * r.

    The starting residual is log(target) minus the mandatory log factors
    minus the reference-twist curvature of the pool; the certified tail
    covers the log-series cuts and every prime beyond the pool.
    """
    problem.validate()
    p_max = problem.p_max if p_max is None else p_max
    if p_max <= problem.y:
        raise InvalidProblem(f"pool cutoff {p_max} must exceed the prime floor {problem.y}")
    spec = problem.spec
    R = problem.hardy_radius
    N = problem.order
    L = log_target(problem.target, R, order=N)

    all_ps = primes_up_to(int(p_max))
    mand_ps = [int(p) for p in all_ps[all_ps <= problem.y]]
    mandatory: dict[int, float] = {}
    for p in mand_ps:
        mandatory[p] = float(problem.preset_phases.get(p, 0.0)) % 1.0
    for p, tw in problem.fixed_phases.items():
        mandatory[int(p)] = float(tw) % 1.0

    work = L.pad(N)
    if mandatory:
        mp = np.array(sorted(mandatory), dtype=np.int64)
        tw = np.array([mandatory[int(p)] for p in mp])
        gam = np.array([problem.t0 * math.log(int(p)) / TWO_PI for p in mp])
        rows = _u_rows(spec, mp, tw, problem.sigma0, N, problem.series_order, gammas=gam)
        work = H2Element(R, work.coef - rows.sum(axis=0), work.tail_bound)

    pool = np.array([int(p) for p in all_ps
                     if p > problem.y and int(p) not in mandatory], dtype=np.int64)
    if len(pool) == 0:
        raise InvalidProblem("empty candidate pool")

    u_phase, u_norm2, stored = [], [], []
    n = np.arange(N + 1)
    weights = math.pi * R ** (2 * n + 2) / (n + 1)
    for q in QUARTER_GRID:
        tws = _stored_twists(spec, pool, q)
        rows = _u_rows(spec, pool, tws, problem.sigma0, N, problem.series_order)
        u_phase.append(rows)
        u_norm2.append(np.sum(np.abs(rows) ** 2 * weights[None, :], axis=1).real)
        stored.append(tws)

    # reference twist of the initialization formula is plain 0 (leading
    # coefficient argument included), matching the mandatory convention
    ref_tws = np.zeros(len(pool))
    eta0 = _eta_rows(spec, pool, ref_tws, problem.sigma0, N)
    u0 = _u_rows(spec, pool, ref_tws, problem.sigma0, N, problem.series_order)
    nu_ref = u0 - eta0
    nu_rest = nu_ref.sum(axis=0)

    tail = _embedding_tail(spec, np.array(sorted(mandatory), dtype=np.int64), R,
                           problem.sigma0, N, problem.series_order) if mandatory else 0.0
    tail += _embedding_tail(spec, pool, R, problem.sigma0, N, problem.series_order)
    tail += beyond_pool_tail(spec, p_max, problem.r, problem.sigma0)
    tail_norm = tail * math.sqrt(math.pi) * R

    state = ApproximationState(
        problem=problem, work=work, mandatory=mandatory, accepted=[],
        pool_primes=pool, pool_mask=np.ones(len(pool), dtype=bool),
        u_phase=u_phase, u_norm2=u_norm2, stored_twists=stored,
        nu_ref=nu_ref, nu_rest=nu_rest, weights=weights,
        tail_bound=tail_norm)
    state.trace.append(state.work_norm())
    return state


# ---------------------------------------------------------------------------
# greedy steering
# ---------------------------------------------------------------------------


def _phase_scores(state: ApproximationState) -> tuple[np.ndarray, np.ndarray]:
    """Per (phase, prime) decreases 2 Re<W,u> - ||u||^2 and the pairings."""
    cw = np.conj(state.work.coef) * state.weights
    decreases = np.empty((len(QUARTER_GRID), len(state.pool_primes)))
    pairings = np.empty_like(decreases)
    for k in range(len(QUARTER_GRID)):
        c = (state.u_phase[k] @ cw).real
        pairings[k] = c
        decreases[k] = 2.0 * c - state.u_norm2[k]
    decreases[:, ~state.pool_mask] = -np.inf
    return decreases, pairings


def _golden_refine(state: ApproximationState, idx: int, q0: float) -> tuple[np.ndarray, float, float]:
    """Golden-section search of the steering phase around the best quarter."""
    problem = state.problem
    p = np.array([state.pool_primes[idx]])
    cw = np.conj(state.work.coef) * state.weights

    def decrease_of(q: float) -> tuple[float, np.ndarray, float]:
        tws = _stored_twists(problem.spec, p, q % 1.0)
        row = _u_rows(problem.spec, p, tws, problem.sigma0, problem.order,
                      problem.series_order)[0]
        n2 = float(np.sum(np.abs(row) ** 2 * state.weights).real)
        d = 2.0 * float((row @ cw).real) - n2
        return d, row, float(tws[0])

    gr = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = q0 - 0.125, q0 + 0.125
    c, d = b - gr * (b - a), a + gr * (b - a)
    fc, fd = decrease_of(c), decrease_of(d)
    for _ in range(24):
        if fc[0] > fd[0]:
            b, d, fd = d, c, fc
            c = b - gr * (b - a)
            fc = decrease_of(c)
        else:
            a, c, fc = c, d, fd
            d = a + gr * (b - a)
            fd = decrease_of(d)
    best = fc if fc[0] > fd[0] else fd
    return best[1], best[2], best[0]


def _commit(state: ApproximationState, idx: int, row: np.ndarray, twist: float) -> None:
    state.work = H2Element(state.work.radius, state.work.coef - row, state.work.tail_bound)
    state.nu_rest = state.nu_rest - state.nu_ref[idx]
    state.pool_mask[idx] = False
    state.accepted.append((int(state.pool_primes[idx]), float(twist % 1.0)))
    state.accepted_idx.append(int(idx))
    state.accepted_rows.append(row)


def _rephase_scores(state: ApproximationState,
                    cw: np.ndarray) -> tuple[float, tuple[int, int] | None]:
    """Best norm decrease from changing the phase of an accepted prime.

    Early quantized choices leave residues that the shrinking pool cannot
    cancel; swapping an accepted factor's twist (the prime set is unchanged)
    recovers them.  Returns (decrease, (accepted position, phase index)).
    """
    if not state.accepted_idx:
        return -math.inf, None
    idx = np.asarray(state.accepted_idx, dtype=np.int64)
    cur = np.asarray(state.accepted_rows)
    best = (-math.inf, None)
    for k in range(len(QUARTER_GRID)):
        d = state.u_phase[k][idx] - cur
        gain = 2.0 * (d @ cw).real - np.sum(np.abs(d) ** 2 * state.weights[None, :],
                                            axis=1).real
        j = int(np.argmax(gain))
        if gain[j] > best[0]:
            best = (float(gain[j]), (j, k))
    return best


def _commit_rephase(state: ApproximationState, pos: int, k: int) -> None:
    idx = state.accepted_idx[pos]
    new_row = state.u_phase[k][idx]
    delta = new_row - state.accepted_rows[pos]
    state.work = H2Element(state.work.radius, state.work.coef - delta,
                           state.work.tail_bound)
    state.accepted_rows[pos] = new_row
    p = int(state.pool_primes[idx])
    state.accepted[pos] = (p, float(state.stored_twists[k][idx] % 1.0))


def _drop_scores(state: ApproximationState, cw: np.ndarray) -> tuple[float, int | None]:
    """Best norm decrease from removing an accepted pool prime entirely."""
    if not state.accepted_idx:
        return -math.inf, None
    cur = np.asarray(state.accepted_rows)
    gain = -2.0 * (cur @ cw).real - np.sum(np.abs(cur) ** 2 * state.weights[None, :],
                                           axis=1).real
    j = int(np.argmax(gain))
    return float(gain[j]), j


def _commit_drop(state: ApproximationState, pos: int) -> None:
    idx = state.accepted_idx[pos]
    state.work = H2Element(state.work.radius,
                           state.work.coef + state.accepted_rows[pos],
                           state.work.tail_bound)
    state.nu_rest = state.nu_rest + state.nu_ref[idx]
    state.pool_mask[idx] = True
    del state.accepted[pos]
    del state.accepted_idx[pos]
    del state.accepted_rows[pos]


def _pair_rescue(state: ApproximationState, pairings: np.ndarray,
                 grow_top: int = 24, acc_top: int = 48) -> bool:
    """Try the best joint pair of moves when no single move decreases.

    Coupled mistakes -- a cancelling pair of new factors, or an early phase
    choice that later additions locked in -- are invisible to single steps.
    The rescue scores all pairs over a candidate list mixing new primes,
    phase changes of accepted primes, and removals, and commits the best
    strictly decreasing pair.  Returns True if something was committed.
    """
    deltas, meta = [], []   # delta = vector subtracted from the residual
    avail = np.nonzero(state.pool_mask)[0]
    if len(avail):
        strength = np.max(np.abs(pairings[:, avail]), axis=0)
        for idx in avail[np.argsort(-strength)][:grow_top]:
            for k in range(len(QUARTER_GRID)):
                deltas.append(state.u_phase[k][idx])
                meta.append(("grow", int(idx), k, int(state.pool_primes[idx])))
    if state.accepted_idx:
        cw = np.conj(state.work.coef) * state.weights
        cur = np.asarray(state.accepted_rows)
        cand = []
        for pos, idx in enumerate(state.accepted_idx):
            p = int(state.pool_primes[idx])
            for k in range(len(QUARTER_GRID)):
                d = state.u_phase[k][idx] - cur[pos]
                if np.any(d):
                    gain = 2.0 * float((d @ cw).real) - float(
                        np.sum(np.abs(d) ** 2 * state.weights).real)
                    cand.append((gain, d, ("rephase", pos, k, p)))
            gain = -2.0 * float((cur[pos] @ cw).real) - float(
                np.sum(np.abs(cur[pos]) ** 2 * state.weights).real)
            cand.append((gain, -cur[pos], ("drop", pos, None, p)))
        cand.sort(key=lambda t: -t[0])
        for _, d, m in cand[:acc_top]:
            deltas.append(d)
            meta.append(m)
    if len(deltas) < 2:
        return False
    deltas = np.asarray(deltas)
    wrows = deltas * state.weights[None, :]
    cvec = (wrows @ np.conj(state.work.coef)).real
    gram = (wrows @ np.conj(deltas.T)).real
    n2 = np.diag(gram)
    single = 2.0 * cvec - n2
    pairsum = single[:, None] + single[None, :] - 2.0 * gram
    same_prime = np.array([m[3] for m in meta])
    pairsum[same_prime[:, None] == same_prime[None, :]] = -np.inf
    flat = int(np.argmax(pairsum))
    i, j = np.unravel_index(flat, pairsum.shape)
    best = float(pairsum[i, j])
    norm2 = state.work_norm() ** 2
    if best <= 1e-14 * max(norm2, 1e-300):
        return False
    # apply accepted-list moves at larger positions first, removals shift them
    moves = sorted([meta[i], meta[j]],
                   key=lambda m: (m[0] == "grow", -(m[1] if m[0] != "grow" else 0)))
    for kind, a, k, _p in moves:
        if kind == "grow":
            _commit(state, a, state.u_phase[k][a], state.stored_twists[k][a])
        elif kind == "rephase":
            _commit_rephase(state, a, k)
        else:
            _commit_drop(state, a)
    state.trace.append(state.work_norm())
    return True


def greedy_rearrange(state: ApproximationState,
                     phase_grid: Sequence[float] = QUARTER_GRID,
                     max_steps: int | None = None,
                     stop_norm: float | None = None) -> ApproximationState:
    """Steer pool primes into the product until the residual norm is small.

    Each step scores every available (prime, quarter phase) pair by the
    exact norm decrease and commits the best strictly decreasing move
    (optionally phase-refined by golden section).  Stops at the norm target,
    on pool exhaustion, or when no move -- including a joint two-prime
    rescue -- decreases the norm; the stall diagnostics are recorded.
    """
    problem = state.problem
    if tuple(phase_grid) != QUARTER_GRID:
        raise ValueError("the steering grid is the quarter grid; use phase_mode='golden' "
                         "for continuous refinement")
    max_steps = problem.max_steps if max_steps is None else max_steps
    target = 0.5 * problem.eps if stop_norm is None else stop_norm
    steps = 0
    while steps < max_steps:
        if state.work_norm() <= target:
            state.stall = None
            return state
        norm2 = state.work_norm() ** 2
        tol = 1e-14 * max(norm2, 1e-300)
        grow_best = -math.inf
        if np.any(state.pool_mask):
            decreases, pairings = _phase_scores(state)
            flat = int(np.argmax(decreases))
            k, idx = np.unravel_index(flat, decreases.shape)
            grow_best = float(decreases[k, idx])
        else:
            pairings = np.zeros((len(QUARTER_GRID), len(state.pool_primes)))
        cw = np.conj(state.work.coef) * state.weights
        re_best, re_move = _rephase_scores(state, cw)
        drop_best, drop_pos = _drop_scores(state, cw)
        if max(grow_best, re_best, drop_best) <= tol:
            if np.any(state.pool_mask) and _pair_rescue(state, pairings):
                steps += 2
                continue
            state.stall = StallInfo(max(grow_best, re_best),
                                    float(np.max(np.abs(pairings))),
                                    not bool(np.any(state.pool_mask)))
            return state
        if drop_best > max(grow_best, re_best):
            _commit_drop(state, drop_pos)
        elif re_best > grow_best:
            _commit_rephase(state, *re_move)
        else:
            row, twist = state.u_phase[k][idx], float(state.stored_twists[k][idx])
            if problem.phase_mode == "golden":
                grow, gtw, gdec = _golden_refine(state, int(idx), QUARTER_GRID[k])
                if gdec > grow_best:
                    row, twist = grow, gtw
            _commit(state, int(idx), row, twist)
        state.trace.append(state.work_norm())
        steps += 1
    state.stall = StallInfo(0.0, 0.0, False) if state.work_norm() > target else None
    return state


# ---------------------------------------------------------------------------
# the full pipeline
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ApproximationResult:
    problem: ApproximationProblem
    primes: tuple[int, ...]
    phases: PhaseAssignment
    max_error: float
    argmax: complex
    trace: tuple[float, ...]
    residual_norm: float
    tail_bound: float
    contraction_deviation: float
    stalled: bool
    survey: SurveyResult
    success: bool

    def product_evaluator(self) -> Callable[[np.ndarray], np.ndarray]:
        plist = list(self.primes)
        sigma0 = self.problem.sigma0

        def f(s: np.ndarray) -> np.ndarray:
            return partial_product_grid(self.problem.spec,
                                        np.asarray(s, dtype=complex) + sigma0,
                                        plist, self.phases)

        return f

    def phases_text(self) -> str:
        lines = [f"{p} {self.phases.theta[p]!r}" for p in sorted(self.phases.theta)]
        return "\n".join(lines) + "\n"

    def trace_text(self) -> str:
        return "\n".join(f"{i} {v!r}" for i, v in enumerate(self.trace)) + "\n"


def _survey(problem: ApproximationProblem, state: ApproximationState) -> SurveyResult:
    phases = state.phase_assignment()
    plist = sorted(set(state.mandatory) | set(state.accepted_primes()))
    grid = DiscGrid(center=0j, radius=problem.r,
                    boundary=problem.survey_boundary, rings=problem.survey_rings)

    def f(s: np.ndarray) -> np.ndarray:
        return partial_product_grid(problem.spec, np.asarray(s, dtype=complex) + problem.sigma0,
                                    plist, phases)

    return disc_error_survey(problem.target, f, grid)


def _approximate_impl(problem: ApproximationProblem,
                      eps_target: float | None = None,
                      rounds: int = 3) -> ApproximationResult:
    problem.validate()
    eps_target = problem.eps if eps_target is None else eps_target
    original_target = problem.target
    dev = 0.0
    work_problem = problem
    if problem.contract:
        work_problem, dev = contract_target(problem)
    state = init_residual(work_problem)
    R = work_problem.hardy_radius
    stop = 0.5 * eps_target * math.sqrt(math.pi) * (R - problem.r)
    survey = None
    for _ in range(rounds):
        state = greedy_rearrange(state, stop_norm=stop)
        # measure against the uncontracted target
        measured = replace(work_problem, target=original_target)
        survey = _survey(measured, state)
        if survey.max_error <= eps_target or (state.stall and state.stall.pool_exhausted):
            break
        if state.stall and state.stall.best_decrease <= 0 and not state.stall.pool_exhausted:
            break
        stop /= 4.0
    phases = state.phase_assignment()
    plist = tuple(sorted(set(state.mandatory) | set(state.accepted_primes())))
    return ApproximationResult(
        problem=problem, primes=plist, phases=phases,
        max_error=survey.max_error, argmax=survey.argmax,
        trace=tuple(state.trace), residual_norm=state.work_norm(),
        tail_bound=state.work.tail_bound + state.tail_bound,
        contraction_deviation=dev, stalled=state.stall is not None,
        survey=survey, success=survey.max_error <= eps_target)


def approximate(problem: ApproximationProblem) -> ApproximationResult:
    """Run the full pipeline; the returned error is the surveyed product error.

    The prime set always contains every prime at or below the floor y.
    Raises ApproximationStall (with the partial result attached) if steering
    cannot push the surveyed error below eps.
    """
    result = _approximate_impl(problem)
    if not result.success:
        raise ApproximationStall(
            f"stalled at surveyed error {result.max_error:.3e} > eps {problem.eps}", result)
    return result


# ---------------------------------------------------------------------------
# doubling schedule
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RefineStage:
    stage: int
    y: float
    m_k: int
    core_primes: tuple[int, ...]
    core_error: float
    error: float
    schedule_bound: float
    draws_used: int
    phases: PhaseAssignment


def refine_sequence(problem: ApproximationProblem, stages: int,
                    draws: int = 64, max_draws: int = 512,
                    slack: float = 2.0) -> list[RefineStage]:
    """Doubling schedule y_k = 2^k y0 with frozen phase reuse across stages.

    Stage k steers its enlarged mandatory floor (inheriting every previously
    assigned twist bit-for-bit), then assigns the unsteered primes up to the
    largest product prime by sampling: random twist vectors are drawn and
    the one minimizing the surveyed error of the contiguous product is kept,
    redrawing (up to max_draws) while the stage error exceeds the previous
    stage's.  Stage errors must stay within slack * 2^{1 + k beta} eps of
    the schedule and must not increase.
    """
    problem.validate()
    beta = problem.schedule_exponent()
    if beta >= 0:
        raise InvalidProblem(f"violated: 1/2 + r + 2 lambda + delta - sigma0 < 0 (= {beta})")
    if stages < 1:
        raise ValueError("stages >= 1")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(problem.seed)))
    assigned: dict[int, float] = {}
    out: list[RefineStage] = []
    prev_error = math.inf
    for k in range(stages):
        y_k = problem.y * 2.0**k
        presets = {p: tw for p, tw in assigned.items() if p <= y_k}
        presets.update({int(p): float(tw) for p, tw in problem.preset_phases.items()})
        fixed = {p: tw for p, tw in assigned.items() if p > y_k}
        prob_k = replace(problem, y=y_k, preset_phases=presets, fixed_phases=fixed)
        core = _approximate_impl(prob_k, eps_target=0.5 * problem.eps)
        core_phases = dict(core.phases.theta)
        m_k = max(core.primes)
        filler = [int(p) for p in primes_up_to(m_k) if int(p) not in core_phases]
        grid = DiscGrid(0j, problem.r, problem.survey_boundary, problem.survey_rings)
        bound = slack * 2.0 ** (1.0 + (k + 1) * beta) * problem.eps

        def full_error(filler_twists: np.ndarray) -> float:
            theta = dict(core_phases)
            theta.update({p: float(t) for p, t in zip(filler, filler_twists)})
            pa = PhaseAssignment(theta, t0=problem.t0,
                                 shifted=frozenset(p for p in theta if p <= y_k))
            plist = sorted(theta)

            def f(s):
                return partial_product_grid(problem.spec,
                                            np.asarray(s, dtype=complex) + problem.sigma0,
                                            plist, pa)

            return disc_error_survey(problem.target, f, grid).max_error, pa

        if filler:
            best_err, best_pa = math.inf, None
            used = 0
            while used < max_draws:
                batch = min(draws, max_draws - used)
                for _ in range(batch):
                    err, pa = full_error(rng.random(len(filler)))
                    if err < best_err:
                        best_err, best_pa = err, pa
                used += batch
                if best_err <= min(prev_error, bound):
                    break
        else:
            best_err, best_pa = core.max_error, core.phases
            used = 0
        if best_err > prev_error + 1e-12:
            raise RefineStall(
                f"stage {k + 1}: error {best_err:.3e} exceeds previous {prev_error:.3e} "
                f"after {used} draws")
        if best_err > bound + 1e-12:
            raise RefineStall(
                f"stage {k + 1}: error {best_err:.3e} exceeds schedule bound {bound:.3e}")
        assigned = {p: float(t) for p, t in best_pa.theta.items()}
        out.append(RefineStage(stage=k + 1, y=y_k, m_k=m_k,
                               core_primes=core.primes, core_error=core.max_error,
                               error=best_err, schedule_bound=bound, draws_used=used,
                               phases=best_pa))
        prev_error = best_err
    return out
