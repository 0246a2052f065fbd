"""One table for every numeric constant used by the checkers and the pipeline.

The paper-profile values are the asymptotic ones; at laptop-sized ``n`` most
of them are either vacuous or unsatisfiable, so :meth:`Constants.desk`
provides a rescaled profile.  Lower degree bounds are compared after rounding
down and upper bounds after rounding up.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace

from .errors import ParameterError


@dataclass(frozen=True)
class Constants:
    gamma: float = 1e-4
    # Small = D_{<= ln n / small_div}, unless small_threshold pins it
    small_div: float = 10.0
    small_threshold: int | None = None
    # P1: max degree <= maxdeg * ln n
    maxdeg: float = 10.0
    # P3: no short path between Small vertices, L = p3_factor * ln n / ln ln n
    p3_factor: float = 0.2
    # P4: |Small + N(Small)| <= n ** p4_exponent
    p4_exponent: float = 0.6
    # P5: |U| <= p5_size n/ln n, e(U, V-U) >= |U| ln n / p5_edge_div  =>  |N(U)| > |U| ln n / p5_nbr_div
    p5_size: float = 10.0
    p5_edge_div: float = 11.0
    p5_nbr_div: float = 18.0
    # P6: |U| <= gamma n / p6_size_div  =>  e(U) <= gamma ln n |U| / p6_edge_div
    p6_size_div: float = 5000.0
    p6_edge_div: float = 1000.0
    # P7: p7_low n/ln n <= |U|,|W| <= n/p7_high_div  =>  |N(U) & N(W)| >= n/p7_target_div
    p7_low: float = 10.0
    p7_high_div: float = 9.0
    p7_target_div: float = 9.0
    # P8: |U|,|W| >= gamma n / p8_size_div  =>  e(U,W) >= p8_factor |U||W| ln n / n
    p8_size_div: float = 25000.0
    p8_factor: float = 0.5
    # reservoir degree bounds for v outside Small:
    #   part_low * gamma ln n <= d(v, U_i) <= part_high * gamma ln n,  d(v, V') >= part_vprime * ln n
    part_low: float = 0.01
    part_high: float = 100.0
    part_vprime: float = 0.05

    @classmethod
    def paper(cls) -> "Constants":
        return cls()

    @classmethod
    def desk(cls, gamma: float = 0.01, multiplier: float = 4.0, small_threshold: int | None = 2) -> "Constants":
        """Desk-scale profile.

        ``multiplier`` scales every degree-type bound by the same factor: the
        P5 neighbourhood budget and the three reservoir degree bounds.
        ``small_threshold=2`` puts the key candidates (degree <= 2) into Small,
        which is where they live near the threshold for very large n.
        """
        base = cls()
        return replace(
            base,
            gamma=gamma,
            small_threshold=small_threshold,
            p5_nbr_div=base.p5_nbr_div / multiplier,
            part_low=base.part_low * multiplier,
            part_high=base.part_high * multiplier,
            part_vprime=base.part_vprime * multiplier,
        )

    def with_(self, **changes) -> "Constants":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return asdict(self)

    # derived thresholds ---------------------------------------------------

    def small_cutoff(self, n: int) -> int:
        if self.small_threshold is not None:
            return self.small_threshold
        return int(math.floor(math.log(n) / self.small_div)) if n > 1 else 0

    def reservoir_bounds(self, n: int) -> tuple[int, int, int]:
        """Integer ``(low, high, vprime)`` degree bounds for the reservoir partition."""
        ln = math.log(n)
        low = math.floor(self.part_low * self.gamma * ln)
        high = math.ceil(self.part_high * self.gamma * ln)
        vprime = math.floor(self.part_vprime * ln)
        return low, high, vprime


def profile_constants(profile: str, gamma: float | None = None) -> Constants:
    if profile == "paper":
        c = Constants.paper()
        return c if gamma is None else c.with_(gamma=gamma)
    if profile == "desk":
        return Constants.desk() if gamma is None else Constants.desk(gamma=gamma)
    raise ParameterError(f"unknown profile {profile!r}")
