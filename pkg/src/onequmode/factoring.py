"""Order finding and factoring driven by sampled momentum outcomes.

Each run draws one ``p_E`` from the modular-multiplication mixture, maps it
to ``p' = p_E / (2 pi) mod 1`` and asks the continued-fraction expansion for
a fraction ``m/r`` with ``r <= N`` lying within ``1/(2 N^2)`` of ``p'``.
A run counts only when ``r`` is verified to be the order of ``q``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np

from .estimation import ExperimentConfig
from .qumode import GaussianMixture, momentum_distribution, QumodeWavefunction, sample_momentum
from .spectrum import TWO_PI, ModularProblem, register_qubits

EULER_GAMMA = 0.57721566490153286061

# Relative slack on the 1/(2N^2) acceptance window, for float rounding of p'.
WINDOW_SLACK = 1e-9

RUN_BLOCK = 256


class ClassicalRejection(ValueError):
    """``N`` is handled (or ruled out) by classical checks alone."""


class BudgetExhausted(RuntimeError):
    def __init__(self, N: int, total_runs: int, attempts: int):
        self.N = N
        self.total_runs = total_runs
        self.attempts = attempts
        super().__init__(
            f"no factor of {N} after {total_runs} runs over {attempts} choices of q"
        )


def convergents(x: Fraction, max_den: int | None = None) -> list[tuple[int, int]]:
    """Convergents ``(h, k)`` of ``x``, stopping after the first with ``k > max_den``."""
    out = []
    h_prev, h = 0, 1
    k_prev, k = 1, 0
    while True:
        a = x.numerator // x.denominator
        h_prev, h = h, a * h + h_prev
        k_prev, k = k, a * k + k_prev
        out.append((h, k))
        if max_den is not None and k > max_den:
            return out
        rest = x - a
        if rest == 0:
            return out
        x = 1 / rest


def continued_fraction_recover(p_prime: float, N: int) -> tuple[int, int] | None:
    """Fraction ``(m, r)`` in lowest terms with ``r <= N`` within ``1/(2N^2)`` of ``p_prime``.

    Takes the last convergent of ``p_prime`` whose denominator does not
    exceed ``N``.  Right at the window edge the semiconvergent just below
    the cut can be closer, so that one is compared too.  A result equal to 1
    is reported as ``(0, 1)``.
    """
    if not 0.0 <= p_prime < 1.0:
        raise ValueError(f"p_prime must lie in [0, 1), got {p_prime}")
    if N < 2:
        raise ValueError("N must be at least 2")
    x = Fraction(p_prime)
    cs = convergents(x, N)
    j = max(i for i, (_, k) in enumerate(cs) if k <= N)
    m, r = cs[j]
    if j + 1 < len(cs) and j >= 1:
        (hp, kp), (h, k) = cs[j - 1], cs[j]
        t = (N - kp) // k
        if t >= 1:
            semi = Fraction(hp + t * h, kp + t * k)
            if abs(x - semi) < abs(x - Fraction(m, r)):
                m, r = semi.numerator, semi.denominator
    tol = Fraction(1, 2 * N * N) * (1 + Fraction(WINDOW_SLACK))
    if abs(x - Fraction(m, r)) > tol:
        return None
    if m == r:
        return (0, 1)
    return (m, r)


def _prime_factors(n: int) -> list[int]:
    out, p = [], 2
    while p * p <= n:
        if n % p == 0:
            out.append(p)
            while n % p == 0:
                n //= p
        p += 1
    if n > 1:
        out.append(n)
    return out


def is_order(N: int, q: int, r: int) -> bool:
    """True iff ``r`` is the multiplicative order of ``q`` mod ``N``.

    Needs only ``r``: ``q^r = 1`` and ``q^(r/p) != 1`` for every prime ``p | r``.
    """
    if r < 1 or pow(q, r, N) != 1:
        return False
    return all(pow(q, r // p, N) != 1 for p in _prime_factors(r))


@dataclass
class RunRecord:
    p_prime: float
    fraction: tuple[int, int] | None
    verified: bool


@dataclass
class OrderResult:
    problem: ModularProblem
    recovered_r: int | None
    runs_used: int
    per_run_log: list[RunRecord] = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {
            "N": self.problem.N,
            "q": self.problem.q,
            "recovered_r": self.recovered_r,
            "runs_used": self.runs_used,
        }


def to_turns(pE) -> np.ndarray:
    """``p_E / (2 pi) mod 1``, with the float spill at 1.0 folded back to 0."""
    t = np.mod(np.asarray(pE, dtype=float) / TWO_PI, 1.0)
    return np.where(t >= 1.0, 0.0, t)


def _block_seed(seed: int, block: int) -> int:
    return int(np.random.SeedSequence([seed, block]).generate_state(1, np.uint64)[0])


def _mixture(problem: ModularProblem, cfg: ExperimentConfig) -> GaussianMixture:
    psi = QumodeWavefunction.squeezed(cfg.s0, cfg.x0)
    return momentum_distribution(problem.spectrum(), psi, cfg.tau)


def judge_run(problem: ModularProblem, p_prime: float) -> RunRecord:
    frac = continued_fraction_recover(float(p_prime), problem.N)
    ok = frac is not None and is_order(problem.N, problem.q, frac[1])
    return RunRecord(float(p_prime), frac, ok)


def order_from_samples(
    problem: ModularProblem, cfg: ExperimentConfig, combine_lcm: bool = False
) -> OrderResult:
    """Repeat single-sample runs until the order is verified or ``cfg.T_bound`` runs are spent.

    With ``combine_lcm`` the denominators of successive runs are merged by
    lcm and the order is read off once the lcm satisfies ``q^L = 1``.
    """
    if cfg.s0_tau < 1:
        raise ValueError("order finding needs s0 * tau >= 1")
    mix = _mixture(problem, cfg)
    N, q = problem.N, problem.q
    log: list[RunRecord] = []
    L = 1
    run = 0
    block = 0
    while run < cfg.T_bound:
        size = min(RUN_BLOCK, cfg.T_bound - run)
        turns = to_turns(sample_momentum(mix, size, _block_seed(cfg.seed, block)))
        block += 1
        for t in turns:
            rec = judge_run(problem, t)
            log.append(rec)
            run += 1
            if rec.verified:
                return OrderResult(problem, rec.fraction[1], run, log)
            if combine_lcm and rec.fraction is not None:
                L = math.lcm(L, rec.fraction[1])
                if pow(q, L, N) == 1:
                    r = L
                    for p in _prime_factors(L):
                        while r % p == 0 and pow(q, r // p, N) == 1:
                            r //= p
                    rec.verified = True
                    return OrderResult(problem, r, run, log)
    return OrderResult(problem, None, run, log)


def run_outcomes(problem: ModularProblem, cfg: ExperimentConfig, runs: int, seed: int | None = None) -> np.ndarray:
    """Verified/not-verified flag for each of ``runs`` independent runs."""
    mix = _mixture(problem, cfg)
    turns = to_turns(sample_momentum(mix, runs, cfg.seed if seed is None else seed))
    return np.array([judge_run(problem, t).verified for t in turns])


def success_windows(problem: ModularProblem) -> list[Fraction]:
    """Fractions ``m/r`` with ``gcd(m, r) = 1``; landing near one recovers ``r``."""
    r = problem.r
    return [Fraction(m, r) for m in range(1, r) if math.gcd(m, r) == 1]


def exact_run_success_probability(problem: ModularProblem, cfg: ExperimentConfig) -> float:
    """Exact probability that one run verifies the order.

    Integrates the full mixture over every ``1/(2N^2)`` window around a
    coprime ``m/r``, folding ``p_E`` modulo ``2 pi``, so overlapping
    neighbouring peaks are included.
    """
    mix = _mixture(problem, cfg)
    N = problem.N
    half = 1.0 / (2 * N * N) * (1 + WINDOW_SLACK)
    lo_span, hi_span = mix.span(12.0)
    ks = np.arange(math.floor(lo_span / TWO_PI) - 1, math.ceil(hi_span / TWO_PI) + 2)
    centres = np.array([float(f) for f in success_windows(problem)])
    if centres.size == 0:
        return 0.0
    grid = (centres[:, None] + ks[None, :]).ravel()
    return float(np.sum(mix.interval_mass(TWO_PI * (grid - half), TWO_PI * (grid + half))))


def formula_run_success_probability(problem: ModularProblem, cfg: ExperimentConfig) -> float:
    """``sum_{gcd(m,r)=1} c_m / 2^n * erf(pi s0 tau / N^2)`` (well-separated peaks)."""
    spec = problem.spectrum()
    turns = spec.turns_map()
    mass = sum(turns.get(f, 0) for f in success_windows(problem)) / spec.dimension
    return mass * math.erf(math.pi * cfg.s0_tau / problem.N**2)


def coprime_mass(problem: ModularProblem) -> float:
    spec = problem.spectrum()
    turns = spec.turns_map()
    return sum(turns.get(f, 0) for f in success_windows(problem)) / spec.dimension


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    return _prime_factors(n) == [n]


def prime_power_base(n: int) -> int | None:
    """``p`` if ``n = p^k`` for a prime ``p`` and ``k >= 1``, else None."""
    ps = _prime_factors(n)
    return ps[0] if len(ps) == 1 else None


def classical_check(N: int) -> None:
    if N < 4:
        raise ClassicalRejection(f"{N} is not composite")
    if N % 2 == 0:
        raise ClassicalRejection(f"{N} is even: 2 is a factor")
    if is_prime(N):
        raise ClassicalRejection(f"{N} is prime")
    base = prime_power_base(N)
    if base is not None:
        raise ClassicalRejection(f"{N} is a prime power of {base}")


@dataclass
class FactorResult:
    N: int
    factors: tuple[int, int]
    q_used: int
    total_runs: int
    order: OrderResult | None = field(default=None, repr=False)

    def __post_init__(self):
        a, b = self.factors
        if a * b != self.N or a in (1, self.N) or b in (1, self.N):
            raise ValueError(f"{self.factors} is not a non-trivial factorisation of {self.N}")


def factor(N: int, cfg: ExperimentConfig, seed: int) -> FactorResult:
    """Find a non-trivial factor of an odd composite ``N`` that is not a prime power.

    ``cfg.T_bound`` caps the total number of quantum runs across all values
    of ``q`` tried.  Drawing a ``q`` that shares a factor with ``N`` ends the
    search without any runs.
    """
    classical_check(N)
    rng = np.random.default_rng(seed)
    budget = cfg.T_bound
    total = 0
    attempts = 0
    while True:
        attempts += 1
        q = int(rng.integers(2, N))
        g = math.gcd(q, N)
        if g > 1:
            return FactorResult(N, tuple(sorted((g, N // g))), q, total)
        sub = replace(cfg, T_bound=budget - total, seed=_block_seed(seed, attempts))
        res = order_from_samples(ModularProblem(N, q), sub)
        total += res.runs_used
        r = res.recovered_r
        if r is not None and r % 2 == 0:
            y = pow(q, r // 2, N)
            if y != N - 1:
                for d in (math.gcd(y - 1, N), math.gcd(y + 1, N)):
                    if 1 < d < N:
                        return FactorResult(N, tuple(sorted((d, N // d))), q, total, res)
        if total >= budget:
            raise BudgetExhausted(N, total, attempts)


def run_bound(N: int, s0: float, tau: float) -> float:
    """Large-N estimate ``e^gamma ln(ln N) / erf(pi s0 tau / 2^(2n))`` of the runs needed."""
    if N < 5:
        raise ValueError("N must be at least 5")
    if not s0 * tau > 0:
        raise ValueError("s0 * tau must be positive")
    n = register_qubits(N)
    e = math.erf(math.pi * s0 * tau / 2.0 ** (2 * n))
    if e == 0.0:
        return math.inf
    return math.exp(EULER_GAMMA) * math.log(math.log(N)) / e


def euler_phi(r: int) -> int:
    if r < 1:
        raise ValueError("r must be positive")
    out = r
    for p in _prime_factors(r):
        out -= out // p
    return out


@dataclass(frozen=True)
class TotientCheck:
    phi: int
    lower: float | None
    ok: bool | None

    @property
    def vacuous(self) -> bool:
        return self.lower is None


def totient_bound_check(r: int) -> TotientCheck:
    """Compare ``phi(r)`` with ``r / (e^gamma ln ln r)``.

    The bound is asymptotic; small ``r`` can fail it.  For ``r < 3`` the
    right-hand side is undefined and the check is reported as vacuous.
    """
    phi = euler_phi(r)
    if r < 3:
        return TotientCheck(phi, None, None)
    lower = r / (math.exp(EULER_GAMMA) * math.log(math.log(r)))
    return TotientCheck(phi, lower, phi > lower)
