"""Symmetric Laurent polynomials and the odd power-sum tower.

Polynomials are evaluated in logarithmic coordinates: callers pass
``zeta`` with ``x = exp(zeta)``, so a monomial ``prod x_l^{e_l}`` is
``exp(sum e_l zeta_l)``. This keeps magnitudes and phases exact for large
``|Re zeta|`` and makes ``x = 0`` unreachable. :func:`eval_poly` accepts the
``x`` values directly and takes their logarithm.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from functools import cached_property

import numpy as np


def _distinct_permutations(exps: tuple[int, ...]) -> list[tuple[int, ...]]:
    return sorted(set(itertools.permutations(exps)))


@dataclass(frozen=True)
class SymmetricLaurentPolynomial:
    """``sum_t c_t * sum_{orbit} prod_l x_l^{e_{sigma(l)}}``.

    Each term is an exponent multiset (padded with zeros to ``nvars``) and a
    complex coefficient; evaluation sums the monomial over its distinct
    permutations, so the polynomial is symmetric by construction.
    """

    nvars: int
    terms: tuple[tuple[tuple[int, ...], complex], ...]

    def __post_init__(self):
        if self.nvars < 0:
            raise ValueError("variable count must be >= 0")
        fixed = []
        for exps, coeff in self.terms:
            exps = tuple(int(e) for e in exps)
            if len(exps) > self.nvars:
                raise ValueError(f"term {exps} has more exponents than {self.nvars} variables")
            exps = tuple(sorted(exps + (0,) * (self.nvars - len(exps))))
            fixed.append((exps, complex(coeff)))
        object.__setattr__(self, "terms", tuple(fixed))

    @classmethod
    def constant(cls, nvars: int, c: complex = 1.0) -> "SymmetricLaurentPolynomial":
        return cls(nvars, (((), c),))

    @cached_property
    def _orbits(self):
        return [(np.array(_distinct_permutations(e), dtype=float), c) for e, c in self.terms]

    def eval_log(self, zeta):
        """Evaluate at ``x = exp(zeta)``; ``zeta`` has shape ``(..., nvars)``."""
        zeta = np.asarray(zeta, dtype=complex)
        if zeta.shape[-1] != self.nvars:
            raise ValueError(f"expected {self.nvars} variables, got {zeta.shape[-1]}")
        out = np.zeros(zeta.shape[:-1], dtype=complex)
        for orbit, c in self._orbits:
            # (..., n_orbit) exponents of each permuted monomial
            out += c * np.exp(zeta @ orbit.T).sum(axis=-1)
        return out

    def abs_terms_log(self, zeta):
        """Sum of the moduli of all monomial terms, a scale for cancellation checks."""
        zeta = np.asarray(zeta, dtype=complex)
        out = np.zeros(zeta.shape[:-1])
        for orbit, c in self._orbits:
            out += abs(c) * np.exp(zeta.real @ orbit.T).sum(axis=-1)
        return out

    def __call__(self, x):
        return eval_poly(self, x)


@dataclass(frozen=True)
class PowerSumTower:
    """``P_{2j+1}(x) = sum_l x_l^{2s+1}`` for every ``j >= 0``.

    With an odd exponent, ``P_{2j+1}(p, -p, q) = P_{2j-1}(q)`` identically.
    """

    s: int = 0

    @property
    def exponent(self) -> int:
        return 2 * self.s + 1

    def member(self, nvars: int) -> SymmetricLaurentPolynomial:
        return SymmetricLaurentPolynomial(nvars, (((self.exponent,), 1.0),))

    def eval_log(self, zeta):
        # direct formula, no orbit enumeration
        zeta = np.asarray(zeta, dtype=complex)
        return np.exp(self.exponent * zeta).sum(axis=-1)

    def abs_terms_log(self, zeta):
        zeta = np.asarray(zeta, dtype=complex)
        return np.exp(self.exponent * zeta.real).sum(axis=-1)

    def label(self) -> str:
        return f"powersum({self.s})"


@dataclass(frozen=True)
class ExponentTower:
    """Generic tower ``P_{2j+1}(x) = sum_l x_l^e``; no descent guarantee for even ``e``.

    Exists as a control for the descent check.
    """

    exponent: int

    def eval_log(self, zeta):
        zeta = np.asarray(zeta, dtype=complex)
        return np.exp(self.exponent * zeta).sum(axis=-1)

    def abs_terms_log(self, zeta):
        zeta = np.asarray(zeta, dtype=complex)
        return np.exp(self.exponent * zeta.real).sum(axis=-1)

    def label(self) -> str:
        return f"exponent({self.exponent})"


class ZeroArgumentError(ValueError):
    pass


def eval_poly(P, x):
    """Evaluate a polynomial or tower at nonzero complex ``x`` (last axis = variables)."""
    x = np.asarray(x, dtype=complex)
    if np.any(x == 0):
        raise ZeroArgumentError("Laurent polynomials are undefined at x = 0")
    return P.eval_log(np.log(x))


def descent_check(tower, j: int, p: complex, q) -> float:
    """``|P_{2j+1}(p, -p, q) - P_{2j-1}(q)|`` for a tower at level ``j >= 1``."""
    if j < 1:
        raise ValueError("descent needs j >= 1")
    q = np.asarray(q, dtype=complex).reshape(-1)
    if q.size != 2 * j - 1:
        raise ValueError(f"q must have {2 * j - 1} entries")
    lhs = eval_poly(tower, np.concatenate([[p, -p], q]))
    rhs = eval_poly(tower, q)
    return float(abs(lhs - rhs))


_TERM = re.compile(r"^\s*(?P<coeff>[^:]+?)\s*:\s*(?P<exps>[-\d,\s]*)$")
_POWERSUM = re.compile(r"^\s*powersum\(\s*(?P<s>-?\d+)\s*\)\s*$")


def parse_polynomial(text: str, nvars: int | None = None):
    """Parse ``powersum(s)`` or ``coeff:e1,e2,...; coeff:...`` into a tower or polynomial.

    Coefficients are Python number literals (``1``, ``-0.5``, ``2+1j``).
    """
    m = _POWERSUM.match(text)
    if m:
        tower = PowerSumTower(int(m.group("s")))
        return tower if nvars is None else tower.member(nvars)
    terms = []
    width = 0
    for chunk in filter(None, (c.strip() for c in text.split(";"))):
        tm = _TERM.match(chunk)
        if not tm:
            raise ValueError(f"bad polynomial term {chunk!r}")
        try:
            coeff = complex(tm.group("coeff").replace(" ", ""))
        except ValueError as exc:
            raise ValueError(f"bad coefficient in {chunk!r}") from exc
        exps = tuple(int(e) for e in tm.group("exps").split(",") if e.strip())
        width = max(width, len(exps))
        terms.append((exps, coeff))
    if not terms:
        raise ValueError("empty polynomial")
    return SymmetricLaurentPolynomial(width if nvars is None else nvars, tuple(terms))
