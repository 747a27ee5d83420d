"""Recovery thresholds, error-bound constants, sample bounds and block RIP constants.

For an order ``1 < t <= 2`` and exponent ``0 < p <= 1`` the recovery threshold is

    phi(t, p) = mu / ((2 - p)/(t - 1) - mu),

where ``mu`` is the unique positive root of

    g(mu) = (p/2) mu^(2/p) + mu - (2 - p) / (2 (t - 1)).

A sensing matrix whose block RIP constant of order ``ts`` is below
``phi(t, p)`` recovers every block ``s``-sparse signal by mixed l2/lp
minimization, with the l2 error controlled by the constants of
:func:`constants_l2` (l2-bounded noise) or :func:`constants_ds`
(Dantzig-type noise).
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import asdict, dataclass, fields
from typing import Optional

import numpy as np

from .block_model import BlockPartition, best_block_approx, mixed_norm_p, validate_p
from .sensing import spectral_norm, stream_rng

log = logging.getLogger(__name__)

__all__ = [
    "ThresholdParams",
    "TheoryReport",
    "EnumerationCapExceeded",
    "HypothesisViolation",
    "NotCertified",
    "g_mu",
    "mu_bracket",
    "solve_mu",
    "phi_threshold",
    "certification_level",
    "constants_l2",
    "constants_ds",
    "sample_complexity",
    "recovery_probability_bound",
    "block_rip_exact",
    "block_rip_monte_carlo",
    "error_bound_check",
    "build_report",
]

ENUMERATION_CAP = 200_000
BISECTION_ITERS = 200


class EnumerationCapExceeded(ValueError):
    pass


class NotCertified(ValueError):
    """Raised when ``delta_ts >= phi(t, p)``: no error-bound constants exist."""


class HypothesisViolation(ValueError):
    """An estimate fails the feasibility or objective-domination hypothesis."""

    def __init__(self, which, message):
        super().__init__(message)
        self.which = which


@dataclass(frozen=True)
class ThresholdParams:
    t: float = 2.0
    p: float = 1.0

    def __post_init__(self):
        if not (1.0 < self.t <= 2.0):
            raise ValueError(f"t must lie in (1, 2], got {self.t}")
        validate_p(self.p)


def g_mu(mu, params: ThresholdParams):
    t, p = params.t, params.p
    return 0.5 * p * np.power(mu, 2.0 / p) + mu - (2.0 - p) / (2.0 * (t - 1.0))


def mu_bracket(params: ThresholdParams) -> tuple[float, float]:
    """Closed-form interval stated to contain the root of ``g``."""
    t, p = params.t, params.p
    lo = (math.sqrt(1.0 + 2.0 * p - p * p) - 1.0) / p
    hi = (1.0 - (t - math.sqrt(t * t - t)) * p) / (t - 1.0)
    return lo, hi


def _bisect(params, lo, hi):
    glo = g_mu(lo, params)
    for _ in range(BISECTION_ITERS):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        gm = g_mu(mid, params)
        if (gm <= 0) == (glo <= 0):
            lo, glo = mid, gm
        else:
            hi = mid
    return lo if abs(g_mu(lo, params)) <= abs(g_mu(hi, params)) else hi


def solve_mu(params: ThresholdParams, full_output: bool = False):
    """Positive root of ``g`` by bisection.

    Bisection starts on :func:`mu_bracket`. If ``g`` does not change sign
    there, the root is sought on ``[0, (2-p)/(2(t-1))]`` (where a sign change
    is guaranteed) and the event is logged.

    With ``full_output=True`` returns ``(mu, info)`` where ``info`` has keys
    ``bracket``, ``in_bracket``, ``fallback`` and ``residual``.
    """
    t, p = params.t, params.p
    lo, hi = mu_bracket(params)
    fallback = False
    if lo <= hi and g_mu(lo, params) <= 0 <= g_mu(hi, params):
        mu = _bisect(params, lo, hi)
    else:
        fallback = True
        wide_hi = (2.0 - p) / (2.0 * (t - 1.0))
        if not (g_mu(0.0, params) < 0 < g_mu(wide_hi, params)):
            raise ArithmeticError(
                f"no sign change for g on [0, {wide_hi}]: "
                f"g(0)={g_mu(0.0, params)}, g(hi)={g_mu(wide_hi, params)}"
            )
        mu = _bisect(params, 0.0, wide_hi)
    tol = 1e-12 * max(1.0, abs(hi))
    in_bracket = lo <= hi and lo - tol <= mu <= hi + tol
    if fallback and not in_bracket:
        log.info("root mu=%r of g lies outside [%r, %r] for t=%r, p=%r", mu, lo, hi, t, p)
    if not full_output:
        return mu
    info = {
        "bracket": (lo, hi),
        "in_bracket": in_bracket,
        "fallback": fallback,
        "residual": float(g_mu(mu, params)),
    }
    return mu, info


def phi_threshold(params: ThresholdParams) -> float:
    """Recovery threshold ``phi(t, p)`` on the order-``ts`` block RIP constant."""
    mu = solve_mu(params)
    return mu / ((2.0 - params.p) / (params.t - 1.0) - mu)


def certification_level(t: float, s: int) -> int:
    """Number of blocks ``ceil(t*s)`` whose RIP constant is compared to ``phi``."""
    ts = t * s
    r = round(ts)
    # t*s that is integral up to rounding (e.g. 1.1*10) is not bumped up
    return int(r) if abs(ts - r) <= 1e-9 * max(1.0, ts) else math.ceil(ts)


def _bracket_factor(params, mu, phi, delta):
    t, p = params.t, params.p
    ratio = (2.0 - p) * (1.0 - (t - 1.0) * mu) / (2.0 - p - (t - 1.0) * mu)
    return ratio, phi / (phi - delta)


def _check_delta(params, delta):
    phi = phi_threshold(params)
    if not (0 <= delta < phi):
        raise NotCertified(f"delta_ts={delta!r} is not in [0, phi(t,p)={phi!r})")
    return phi


def constants_l2(params: ThresholdParams, delta_ts: float, sigma_phi: float):
    """``(C1, C2)`` of the error bound ``C1 (eps + rho) + C2 ||x_{-max(s)}||_2``.

    ``C2 = sigma_phi * C1 + 1`` by construction.
    """
    if sigma_phi < 0:
        raise ValueError("sigma_phi must be nonnegative")
    phi = _check_delta(params, delta_ts)
    mu = solve_mu(params)
    ratio, amp = _bracket_factor(params, mu, phi, delta_ts)
    bracket = amp * ratio * math.sqrt(1.0 + delta_ts) + phi * math.sqrt(
        (1.0 - params.p) / (phi - delta_ts)
    )
    c1 = math.sqrt(2.0) * bracket
    c2 = math.sqrt(2.0) * sigma_phi * bracket + 1.0
    return c1, c2


def constants_ds(params: ThresholdParams, delta_ts: float, sigma_phi: float, d: int, s: int, N: int):
    """``(D1, D2)`` of the Dantzig-type error bound; ``D2 = sigma_phi**2 * D1 + 1``."""
    if sigma_phi < 0:
        raise ValueError("sigma_phi must be nonnegative")
    if d < 1 or s < 1 or d * s > N:
        raise ValueError(f"need d, s >= 1 and d*s <= N, got d={d}, s={s}, N={N}")
    phi = _check_delta(params, delta_ts)
    mu = solve_mu(params)
    ratio, amp = _bracket_factor(params, mu, phi, delta_ts)
    inner = ratio + (1.0 + math.sqrt(N - d * s)) * (1.0 - params.p) * phi
    lead = math.sqrt(2.0 * d * s) * amp
    return lead * inner, lead * sigma_phi ** 2 * inner + 1.0


def _sample_rate(phi):
    return phi * phi / 16.0 - phi ** 3 / 48.0


def sample_complexity(params: ThresholdParams, s: int, d: int, N: int) -> int:
    """Smallest ``n`` with ``n >= ts log(N/(ds)) / (phi^2/16 - phi^3/48)``."""
    if s < 1 or d < 1 or d * s >= N:
        raise ValueError(f"need s, d >= 1 and d*s < N, got s={s}, d={d}, N={N}")
    phi = phi_threshold(params)
    rate = _sample_rate(phi)
    if rate <= 0:
        raise ValueError(f"phi={phi} gives a nonpositive concentration rate")
    bound = params.t * s * math.log(N / (d * s)) / rate
    return max(1, math.ceil(bound))


def recovery_probability_bound(n: int, params: ThresholdParams, s: int, d: int, M: int, clamp: bool = False) -> float:
    """Lower bound on ``P(delta_ts < phi(t,p))`` for an ``n x dM`` random matrix.

    The raw expression can be negative (vacuous); ``clamp=True`` maps it to
    ``[0, 1]``.
    """
    if n < 1 or s < 1 or d < 1 or M < s:
        raise ValueError("need n, s, d >= 1 and M >= s")
    phi = phi_threshold(params)
    t = params.t
    expo = t * s * (d * math.log(12.0 / phi) + math.log(math.e / t) + math.log(M / s)) - n * _sample_rate(phi)
    try:
        val = 1.0 - 2.0 * math.exp(expo)
    except OverflowError:
        val = -math.inf
    return min(max(val, 0.0), 1.0) if clamp else val


def _deviation(eigs):
    return max(float(eigs[..., -1].max()) - 1.0, 1.0 - float(eigs[..., 0].min()))


def _support_batches(part, k, combos, batch):
    """Yield (index array of shape (B, K)) for batches of supports."""
    offsets = part.offsets
    if part.is_uniform:
        d = part.block_sizes[0]
        ar = np.arange(d)
        while True:
            chunk = list(itertools.islice(combos, batch))
            if not chunk:
                return
            blocks = np.asarray(chunk, dtype=np.int64)
            idx = (offsets[blocks][:, :, None] + ar).reshape(len(chunk), k * d)
            yield idx
    else:
        for combo in combos:
            yield part.indices(combo)[None, :]


def _rip_over(gram, part, k, combos, batch=4096):
    best = 0.0
    for idx in _support_batches(part, k, combos, batch):
        sub = gram[idx[:, :, None], idx[:, None, :]]
        best = max(best, _deviation(np.linalg.eigvalsh(sub)))
    return best


def block_rip_exact(phi, part: BlockPartition, s: int, cap: int = ENUMERATION_CAP) -> float:
    """Block RIP constant of order ``s`` by enumerating all block supports.

    ``delta_s = max_S max(lambda_max(G_S) - 1, 1 - lambda_min(G_S))`` with
    ``G_S`` the Gram matrix of the columns in the ``s`` blocks of ``S``.
    Values above 1 are returned as they are.
    """
    phi = np.asarray(phi, dtype=float)
    if phi.ndim != 2 or phi.shape[1] != part.N:
        raise ValueError(f"matrix {phi.shape} does not match partition with N={part.N}")
    if not (1 <= s <= part.M):
        raise ValueError(f"s must lie in [1, M={part.M}], got {s}")
    count = math.comb(part.M, s)
    if count > cap:
        raise EnumerationCapExceeded(
            f"C({part.M}, {s}) = {count} supports exceeds the cap {cap}; "
            "use block_rip_monte_carlo"
        )
    gram = phi.T @ phi
    return _rip_over(gram, part, s, itertools.combinations(range(part.M), s))


def block_rip_monte_carlo(phi, part: BlockPartition, s: int, trials: int, seed: int, history: bool = False):
    """Lower bound on the block RIP constant from ``trials`` random supports.

    Supports are drawn one after another from a single seeded stream, so a
    larger ``trials`` extends the same sample and the bound never decreases.
    When ``trials`` reaches the number of supports, all supports are
    enumerated and the exact value is returned.
    """
    phi = np.asarray(phi, dtype=float)
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if not (1 <= s <= part.M):
        raise ValueError(f"s must lie in [1, M={part.M}], got {s}")
    gram = phi.T @ phi
    if trials >= math.comb(part.M, s) and not history:
        return _rip_over(gram, part, s, itertools.combinations(range(part.M), s))
    rng = stream_rng(seed)
    running = []
    best = 0.0
    for _ in range(trials):
        combo = np.sort(rng.choice(part.M, size=s, replace=False))
        idx = part.indices(combo)
        best = max(best, _deviation(np.linalg.eigvalsh(gram[np.ix_(idx, idx)])))
        running.append(best)
    return (best, np.array(running)) if history else best


def error_bound_check(
    x_true,
    x_hat,
    part: BlockPartition,
    s: int,
    params: ThresholdParams,
    delta_ts: float,
    sigma_phi: float,
    epsilon: float,
    rho: float,
    phi=None,
    y=None,
):
    """Evaluate the l2-noise recovery error bound for a given estimate.

    The bound applies to any ``x_hat`` that is feasible
    (``||y - phi x_hat||_2 <= epsilon``, checked when ``phi`` and ``y`` are
    given) and objective-dominating
    (``||x_hat||_{2,p}^p <= ||x_max(s)||_{2,p}^p``), with
    ``rho + sigma_phi ||x_{-max(s)}||_2 <= epsilon``.

    Returns
    -------
    lhs, rhs : float
        ``||x_hat - x||_2`` and ``C1 (epsilon + rho) + C2 ||x_{-max(s)}||_2``.
    holds : bool

    Raises
    ------
    NotCertified
        ``delta_ts >= phi(t, p)``.
    HypothesisViolation
        ``which`` is ``"feasibility"``, ``"objective"`` or ``"epsilon"``.
    """
    x_true = part.check(x_true)
    x_hat = part.check(x_hat)
    c1, c2 = constants_l2(params, delta_ts, sigma_phi)
    x_max, x_rest, _ = best_block_approx(x_true, part, s)
    tail = float(np.linalg.norm(x_rest))
    if rho + sigma_phi * tail > epsilon * (1 + 1e-12):
        raise HypothesisViolation(
            "epsilon", f"rho + sigma*||x_rest|| = {rho + sigma_phi * tail!r} exceeds epsilon={epsilon!r}"
        )
    if phi is not None and y is not None:
        res = float(np.linalg.norm(np.asarray(y) - np.asarray(phi) @ x_hat))
        if res > epsilon:
            raise HypothesisViolation("feasibility", f"||y - phi x_hat|| = {res!r} > epsilon={epsilon!r}")
    obj_hat = mixed_norm_p(x_hat, part, params.p)
    obj_ref = mixed_norm_p(x_max, part, params.p)
    if obj_hat > obj_ref:
        raise HypothesisViolation(
            "objective", f"||x_hat||^p = {obj_hat!r} exceeds ||x_max(s)||^p = {obj_ref!r}"
        )
    lhs = float(np.linalg.norm(x_hat - x_true))
    rhs = c1 * (epsilon + rho) + c2 * tail
    return lhs, rhs, bool(lhs <= rhs)


@dataclass
class TheoryReport:
    """Certification summary for one sensing matrix.

    ``certified`` is true only when ``delta_method == "exact"`` and
    ``delta_estimate < phi``. A Monte-Carlo lower bound at or above ``phi``
    refutes certification; below ``phi`` it is inconclusive.
    """

    t: float
    p: float
    s: int
    d: int
    N: int
    M: int
    n: int
    level: int
    mu: float
    phi: float
    sigma: float
    delta_estimate: float
    delta_method: str
    verdict: str
    certified: bool
    n_required: Optional[int] = None
    c1: Optional[float] = None
    c2: Optional[float] = None
    d1: Optional[float] = None
    d2: Optional[float] = None

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, float):
                v = repr(v)
            lines.append(f"{f.name} = {'none' if v is None else v}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "TheoryReport":
        raw = {}
        for line in text.splitlines():
            if not line.strip() or line.startswith("#"):
                continue
            key, _, val = line.partition("=")
            raw[key.strip()] = val.strip()
        kwargs = {}
        for f in fields(cls):
            v = raw[f.name]
            if v == "none":
                kwargs[f.name] = None
            elif f.name in ("delta_method", "verdict"):
                kwargs[f.name] = v
            elif f.name == "certified":
                kwargs[f.name] = v == "True"
            elif f.name in ("s", "d", "N", "M", "n", "level", "n_required"):
                kwargs[f.name] = int(v)
            else:
                kwargs[f.name] = float(v)
        return cls(**kwargs)

    def as_dict(self):
        return asdict(self)


def build_report(
    phi_matrix,
    part: BlockPartition,
    s: int,
    params: ThresholdParams,
    mc_trials: Optional[int] = None,
    seed: int = 0,
    cap: int = ENUMERATION_CAP,
) -> TheoryReport:
    """Certify ``phi_matrix`` for block ``s``-sparse recovery at order ``t``.

    The RIP constant at level ``ceil(t s)`` is computed exactly when the
    support count is within ``cap``; otherwise a Monte-Carlo lower bound with
    ``mc_trials`` samples is used, or :class:`EnumerationCapExceeded` is
    raised when ``mc_trials`` is None.
    """
    phi_matrix = np.asarray(phi_matrix, dtype=float)
    n = phi_matrix.shape[0]
    level = certification_level(params.t, s)
    if level > part.M:
        raise ValueError(f"level ceil(ts)={level} exceeds the block count M={part.M}")
    mu = solve_mu(params)
    thr = phi_threshold(params)
    sigma = spectral_norm(phi_matrix)
    try:
        delta = block_rip_exact(phi_matrix, part, level, cap=cap)
        method = "exact"
    except EnumerationCapExceeded:
        if mc_trials is None:
            raise
        delta = block_rip_monte_carlo(phi_matrix, part, level, mc_trials, seed)
        method = "monte-carlo-lower-bound"

    d = max(part.block_sizes)
    if method == "exact":
        certified = delta < thr
        verdict = "certified" if certified else "not certified"
    else:
        certified = False
        verdict = (
            "not certified (lower bound exceeds threshold)"
            if delta >= thr
            else "inconclusive (lower bound below threshold)"
        )
    report = TheoryReport(
        t=params.t, p=params.p, s=s, d=d, N=part.N, M=part.M, n=n, level=level,
        mu=mu, phi=thr, sigma=sigma, delta_estimate=delta, delta_method=method,
        verdict=verdict, certified=certified,
    )
    if d * s < part.N:
        report.n_required = sample_complexity(params, s, d, part.N)
    if certified:
        report.c1, report.c2 = constants_l2(params, delta, sigma)
        report.d1, report.d2 = constants_ds(params, delta, sigma, d, s, part.N)
    return report
