"""Chernoff and binomial tail bounds, evaluated in log space."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ParameterError

KINDS = ("chernoff_lower", "chernoff_upper", "binomial_upper", "binomial_lower")


@dataclass(frozen=True)
class TailBoundQuery:
    """One tail-bound question.

    * ``chernoff_lower``: ``P(X <= ratio * mu)`` with ``0 < ratio <= 1``.
    * ``chernoff_upper``: ``P(X >= ratio * mu)`` with ``ratio >= 1``.
    * ``binomial_upper``: ``P(Bin(n, p) >= k)`` for ``1 <= k <= n``.
    * ``binomial_lower``: ``P(Bin(n, p) <= k)`` for ``1 <= k <= np/q``.
    """

    kind: str
    mu: float | None = None
    ratio: float | None = None
    n: int | None = None
    p: float | None = None
    k: float | None = None


def _xlogx_term(a: float) -> float:
    # a*ln(a) - a + 1, the Chernoff rate function
    return a * math.log(a) - a + 1.0


def log_tail_bound(q: TailBoundQuery) -> float:
    """Natural log of the bound (before capping at 1); ``-inf`` when the bound is 0."""
    if q.kind not in KINDS:
        raise ParameterError(f"unknown tail bound kind {q.kind!r}")
    if q.kind.startswith("chernoff"):
        if q.mu is None or q.ratio is None:
            raise ParameterError("Chernoff bounds need mu and ratio")
        mu, a = float(q.mu), float(q.ratio)
        if mu < 0:
            raise ParameterError(f"mu must be non-negative, got {mu}")
        if q.kind == "chernoff_lower" and not 0.0 < a <= 1.0:
            raise ParameterError(f"lower-tail ratio alpha must satisfy 0 < alpha <= 1, got {a}")
        if q.kind == "chernoff_upper" and not a >= 1.0:
            raise ParameterError(f"upper-tail ratio beta must satisfy beta >= 1, got {a}")
        return -mu * _xlogx_term(a)

    if q.n is None or q.p is None or q.k is None:
        raise ParameterError("binomial bounds need n, p and k")
    n, p, k = int(q.n), float(q.p), float(q.k)
    if not 0.0 <= p <= 1.0:
        raise ParameterError(f"p must lie in [0, 1], got {p}")
    if q.kind == "binomial_upper":
        if not 1 <= k <= n:
            raise ParameterError(f"need 1 <= k <= n, got k={k}, n={n}")
        if p == 0.0:
            return -math.inf
        return k * (1.0 + math.log(n * p) - math.log(k))
    q_ = 1.0 - p
    if q_ == 0.0 or not 1 <= k <= n * p / q_:
        raise ParameterError(f"need 1 <= k <= np/q, got k={k}, np/q={n * p / q_ if q_ else math.inf}")
    return k * (1.0 + math.log(n * p) - math.log(k * q_)) - n * p


def tail_bound_eval(q: TailBoundQuery) -> float:
    """The bound ``min(1, exp(log_bound))``."""
    lb = log_tail_bound(q)
    return 1.0 if lb >= 0 else math.exp(lb)


def chernoff_lower(mu: float, alpha: float) -> float:
    return tail_bound_eval(TailBoundQuery("chernoff_lower", mu=mu, ratio=alpha))


def chernoff_upper(mu: float, beta: float) -> float:
    return tail_bound_eval(TailBoundQuery("chernoff_upper", mu=mu, ratio=beta))


def binomial_upper(n: int, p: float, k: float) -> float:
    return tail_bound_eval(TailBoundQuery("binomial_upper", n=n, p=p, k=k))


def binomial_lower(n: int, p: float, k: float) -> float:
    return tail_bound_eval(TailBoundQuery("binomial_lower", n=n, p=p, k=k))
