"""Analytic trajectories of the removal process.

The differential-equation heuristic predicts each tracked random variable by
a smooth function of the step index i: the uncovered-pair density p(i), the
cumulative configuration pressure rho(i), the per-pair availability
f_edge(i) = e^{-rho} p^2 (n-2), the total availability
A(i) = e^{-rho} p^3 C(n,3), and the per-triple configuration counts f_{j,c}.
This module evaluates all of them exactly (i is treated as a real number),
together with the error envelopes used by the empirical tracker and the
closed-form identities their derivatives satisfy.

Pure and immutable; concurrently callable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .configs import ErdosCatalog

DEFAULT_GAMMA = 0.15
DEFAULT_C_ERR = 40.0
# Band width calibrated so that the empirical in-band criteria hold at desk
# scale (n around 500); the asymptotic hierarchy eps0 << 1/C is out of reach
# there because per-pair fluctuations at quarter time already exceed
# eps0*e^{C/24}*n for any eps0 small enough to keep the late-time margin
# positive.  See validate(strict_hierarchy=True) for the faithful regime.
DEFAULT_EPS0 = 0.02


def _binom2(n: float) -> float:
    return n * (n - 1) / 2.0


def _binom3(n: float) -> float:
    return n * (n - 1) * (n - 2) / 6.0


@dataclass(frozen=True)
class TrajectoryParams:
    """Problem size, configuration counts, and error-envelope constants.

    J maps j -> number of minimal configurations on j points through a fixed
    triple (0 where none exist); m is the vertex cap for rooted extension
    patterns, twice the largest configuration order.
    """

    n: int
    k: int
    J: Mapping[int, float]
    C_err: float = DEFAULT_C_ERR
    eps0: float = DEFAULT_EPS0
    gamma: float = DEFAULT_GAMMA
    m: int = field(init=False)

    def __post_init__(self) -> None:
        if self.n < 6:
            raise ValueError("n must be at least 6")
        if self.k < 2:
            raise ValueError("k must be at least 2")
        if not 0 < self.eps0 <= 1:
            raise ValueError("eps0 must lie in (0, 1]")
        if not 0 < self.gamma < 1:
            raise ValueError("gamma must lie in (0, 1)")
        if self.C_err <= 0:
            raise ValueError("C_err must be positive")
        if self.J.get(5, 0):
            raise ValueError("no configurations exist on 5 points")
        for j in range(6, self.j_max + 1):
            if self.n >= j and self.J.get(j, 0) <= 0:
                raise ValueError(f"J[{j}] must be positive for n >= {j}")
        object.__setattr__(self, "m", 2 * self.j_max)

    @property
    def j_max(self) -> int:
        return self.k + 2

    @staticmethod
    def from_catalog(
        n: int,
        k: int,
        catalog: ErdosCatalog,
        C_err: float = DEFAULT_C_ERR,
        eps0: float = DEFAULT_EPS0,
        gamma: float = DEFAULT_GAMMA,
    ) -> "TrajectoryParams":
        from .configs import count_J

        counts = catalog.erd_counts()
        J = {j: count_J(n, j, counts) for j in range(6, k + 3)}
        return TrajectoryParams(n, k, J, C_err=C_err, eps0=eps0, gamma=gamma)

    # -- range -----------------------------------------------------------

    @property
    def i_end(self) -> float:
        return _binom2(self.n) / 3.0

    def tau_cut(self) -> int:
        return math.floor((1 - self.gamma) * self.n * self.n / 6)

    def _check_i(self, i: float) -> None:
        if not -1e-9 <= i <= self.i_end * (1 + 1e-12):
            raise ValueError(f"step index {i} outside [0, {self.i_end}]")

    # -- densities and pressure -------------------------------------------

    def p(self, i: float) -> float:
        self._check_i(i)
        return 1.0 - 3.0 * i / _binom2(self.n)

    def p_C(self, i: float) -> float:
        self._check_i(i)
        return i / _binom3(self.n)

    def rho(self, i: float) -> float:
        self._check_i(i)
        b3 = _binom3(self.n)
        return math.fsum(
            self.J.get(j, 0.0) * (i / b3) ** (j - 3) for j in range(6, self.j_max + 1)
        )

    def rho_prime(self, i: float) -> float:
        self._check_i(i)
        b3 = _binom3(self.n)
        return math.fsum(
            (j - 3) * self.J.get(j, 0.0) * i ** (j - 4) / b3 ** (j - 3)
            for j in range(6, self.j_max + 1)
        )

    # -- trajectories -------------------------------------------------------

    def f_edge(self, i: float) -> float:
        return math.exp(-self.rho(i)) * self.p(i) ** 2 * (self.n - 2)

    def A_traj(self, i: float) -> float:
        return math.exp(-self.rho(i)) * self.p(i) ** 3 * _binom3(self.n)

    def A_traj_identity(self, i: float) -> float:
        """The equivalent form A = (1/3) p C(n,2) f_edge."""
        return self.p(i) * _binom2(self.n) * self.f_edge(i) / 3.0

    def f_jc(self, i: float, j: int, c: int) -> float:
        if not 6 <= j <= self.j_max:
            raise ValueError(f"j must lie in [6, {self.j_max}]")
        if not 0 <= c <= j - 4:
            raise ValueError(f"c must lie in [0, {j - 4}] for j={j}")
        self._check_i(i)
        avail_part = math.exp(-(j - 3 - c) * self.rho(i)) * self.p(i) ** (3 * (j - 3 - c))
        if c == 0:
            return avail_part * self.J.get(j, 0.0)
        return (
            math.comb(j - 3, c)
            * avail_part
            * i**c
            * _binom3(self.n) ** (-c)
            * self.J.get(j, 0.0)
        )

    def F_traj(self, i: float) -> float:
        return math.fsum(self.f_jc(i, j, j - 4) for j in range(6, self.j_max + 1))

    # -- error envelopes -----------------------------------------------------

    def eps(self, i: float) -> float:
        self._check_i(i)
        return math.exp(i * math.log1p(self.C_err / self.n**2)) * self.eps0

    def eps_bound(self) -> float:
        """Global cap e^C * eps0 on the error envelope over the full range."""
        return math.exp(self.C_err) * self.eps0

    def eps_kl(self, i: float, kappa: int, ell: int) -> float:
        if not 1 <= ell <= self.m:
            raise ValueError(f"ell must lie in [1, {self.m}]")
        if not 0 <= kappa <= ell:
            raise ValueError("kappa must lie in [0, ell]")
        self._check_i(i)
        return self.n ** (kappa + ell / (self.m + kappa)) * (1 + i / self.n**2)

    def survival_margin(self) -> float:
        """f_edge - eps*n at the cutoff time: positive in the faithful regime."""
        tc = self.tau_cut()
        return self.f_edge(tc) - self.eps(tc) * self.n

    def validate(self, strict_hierarchy: bool = False) -> float:
        """Return the survival margin; raise when strict and non-positive.

        The strict mode reflects the asymptotic constant hierarchy (eps0 small
        against 1/C against gamma); desk-scale band calibrations fail it by
        design and are used with strict_hierarchy=False.
        """
        margin = self.survival_margin()
        if strict_hierarchy and margin <= 0:
            raise ValueError(
                f"error envelope swallows the edge trajectory at cutoff "
                f"(margin {margin:.3g}); decrease eps0 or C_err"
            )
        return margin

    # -- derivative identities ----------------------------------------------

    def f_edge_prime(self, i: float) -> float:
        return -(2 * self.f_edge(i) + self.F_traj(i)) * self.f_edge(i) / self.A_traj(i)

    def f_jc_prime(self, i: float, j: int, c: int) -> float:
        a = self.A_traj(i)
        loss = -(j - 3 - c) * (3 * self.f_edge(i) + self.F_traj(i)) * self.f_jc(i, j, c) / a
        if c == 0:
            return loss
        return loss + (j - 2 - c) * self.f_jc(i, j, c - 1) / a

    def grid(self, points: int) -> list[float]:
        """Evenly spaced interior evaluation grid over [0, tau_cut]."""
        tc = self.tau_cut()
        return [tc * (t + 1) / (points + 1) for t in range(points)]


@dataclass(frozen=True)
class DerivativeResiduals:
    i: float
    edge: float
    by_jc: Mapping[tuple[int, int], float]

    def max_residual(self) -> float:
        return max(self.edge, *self.by_jc.values()) if self.by_jc else self.edge


def derivative_checks(params: TrajectoryParams, i: float, h: float = 1.0) -> DerivativeResiduals:
    """Relative residuals of the closed-form derivatives vs central differences."""

    def rel(fd: float, closed: float) -> float:
        scale = max(abs(closed), 1e-300)
        return abs(fd - closed) / scale

    fd_edge = (params.f_edge(i + h) - params.f_edge(i - h)) / (2 * h)
    out: dict[tuple[int, int], float] = {}
    for j in range(6, params.j_max + 1):
        for c in range(0, j - 3):
            fd = (params.f_jc(i + h, j, c) - params.f_jc(i - h, j, c)) / (2 * h)
            out[(j, c)] = rel(fd, params.f_jc_prime(i, j, c))
    return DerivativeResiduals(i, rel(fd_edge, params.f_edge_prime(i)), out)


def conjectured_log_count(n: int, k: int, erd_counts: Mapping[int, int]) -> tuple[float, float]:
    """Leading-order log of the conjectured number of k-sparse systems of order n.

    Returns (log_count, exponent_constant): the count is conjectured to be
    (n * e^{-constant} + o(n)) ** (n^2/6) with
    constant = 2 + sum_{j=6}^{k+2} erd_j / (j-2)!.  Conjecture only; the o(n)
    term is not quantified.
    """
    if k < 2:
        raise ValueError("k must be at least 2")
    constant = 2.0 + math.fsum(
        erd_counts.get(j, 0) / math.factorial(j - 2) for j in range(6, k + 3)
    )
    return (n * n / 6.0) * (math.log(n) - constant), constant


def rho_integral_closed_form(params: TrajectoryParams, upper: float) -> float:
    """Exact polynomial integral of rho over [0, upper]."""
    b3 = _binom3(params.n)
    return math.fsum(
        params.J.get(j, 0.0) / b3 ** (j - 3) * upper ** (j - 2) / (j - 2)
        for j in range(6, params.j_max + 1)
    )


def trajectory_columns(k: int) -> list[str]:
    cols = ["i", "p", "rho", "f_edge", "A", "F"]
    for j in range(6, k + 3):
        for c in range(0, j - 3):
            cols.append(f"f_{j}_{c}")
    cols.append("eps")
    return cols


def trajectory_rows(params: TrajectoryParams, grid: Sequence[float]) -> list[list[float]]:
    rows = []
    for i in grid:
        row = [
            float(i),
            params.p(i),
            params.rho(i),
            params.f_edge(i),
            params.A_traj(i),
            params.F_traj(i),
        ]
        for j in range(6, params.j_max + 1):
            for c in range(0, j - 3):
                row.append(params.f_jc(i, j, c))
        row.append(params.eps(i))
        rows.append(row)
    return rows
