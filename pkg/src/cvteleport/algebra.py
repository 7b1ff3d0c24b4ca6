"""Exact symbolic algebra of polynomials in the canonical operators q_i, p_i.

Polynomials are stored in a unique normal form: within every mode all q
powers stand to the left of all p powers, and modes appear in index order.
Products are re-normal-ordered with the single rewrite rule p q -> q p - i
(hbar = 1), so every coefficient update is an addition or a multiplication
by an integer or by i.  No tolerances are used inside the algebra;
tolerances appear only when polynomials are cross-checked against matrix
representations.
"""

from __future__ import annotations

import math
from numbers import Number


class ModeMismatchError(ValueError):
    """Raised when two polynomials acting on different mode counts are combined."""


def _swap_coeffs(b, a):
    """Expansion of p^b q^a into normal order.

    Returns a list of (k, coeff) with
    p^b q^a = sum_k coeff * q^(a-k) p^(b-k),  coeff = k! C(b,k) C(a,k) (-i)^k.
    """
    out = []
    for k in range(min(a, b) + 1):
        c = math.factorial(k) * math.comb(b, k) * math.comb(a, k)
        out.append((k, c * (-1j) ** k))
    return out


class CanonicalPolynomial:
    """A polynomial in q_0, p_0, ..., q_{n-1}, p_{n-1} with complex coefficients.

    ``terms`` maps a monomial key to its coefficient.  A key is a tuple with
    one ``(a_i, b_i)`` pair per mode, meaning ``q_i^a_i p_i^b_i`` in normal
    order.  Zero coefficients are never stored.
    """

    __slots__ = ("terms", "nmodes")

    def __init__(self, terms=None, nmodes=1):
        if nmodes < 1:
            raise ValueError("nmodes must be positive")
        self.nmodes = int(nmodes)
        self.terms = {}
        if terms:
            for key, coeff in terms.items():
                if len(key) != self.nmodes:
                    raise ModeMismatchError(
                        f"monomial key {key} does not match nmodes={self.nmodes}"
                    )
                c = complex(coeff)
                if c != 0:
                    self.terms[tuple(tuple(ab) for ab in key)] = c

    # ---- constructors ----
    @classmethod
    def zero(cls, nmodes=1):
        return cls({}, nmodes)

    @classmethod
    def identity(cls, nmodes=1, coeff=1.0):
        key = tuple((0, 0) for _ in range(nmodes))
        return cls({key: coeff}, nmodes)

    @classmethod
    def q(cls, mode=0, nmodes=None):
        nmodes = mode + 1 if nmodes is None else nmodes
        key = tuple((1, 0) if i == mode else (0, 0) for i in range(nmodes))
        return cls({key: 1.0}, nmodes)

    @classmethod
    def p(cls, mode=0, nmodes=None):
        nmodes = mode + 1 if nmodes is None else nmodes
        key = tuple((0, 1) if i == mode else (0, 0) for i in range(nmodes))
        return cls({key: 1.0}, nmodes)

    # ---- basic structure ----
    @property
    def degree(self):
        """Total degree; the zero polynomial reports -inf."""
        if not self.terms:
            return float("-inf")
        return max(sum(a + b for a, b in key) for key in self.terms)

    def coefficient(self, key):
        return self.terms.get(tuple(tuple(ab) for ab in key), 0j)

    def promote(self, nmodes, mode_map=None):
        """Embed into a wider register. ``mode_map[i]`` is the new index of mode i."""
        if mode_map is None:
            mode_map = list(range(self.nmodes))
        if nmodes < self.nmodes or len(set(mode_map)) != self.nmodes:
            raise ModeMismatchError("invalid mode embedding")
        out = {}
        for key, coeff in self.terms.items():
            new = [(0, 0)] * nmodes
            for i, ab in enumerate(key):
                new[mode_map[i]] = ab
            out[tuple(new)] = out.get(tuple(new), 0j) + coeff
        return CanonicalPolynomial(out, nmodes)

    # ---- ring operations ----
    def _check(self, other):
        if self.nmodes != other.nmodes:
            raise ModeMismatchError(
                f"mode counts differ: {self.nmodes} vs {other.nmodes}"
            )

    def __add__(self, other):
        if isinstance(other, Number):
            other = CanonicalPolynomial.identity(self.nmodes, other)
        self._check(other)
        out = dict(self.terms)
        for key, coeff in other.terms.items():
            c = out.get(key, 0j) + coeff
            if c == 0:
                out.pop(key, None)
            else:
                out[key] = c
        return CanonicalPolynomial(out, self.nmodes)

    __radd__ = __add__

    def __neg__(self):
        return CanonicalPolynomial(
            {k: -c for k, c in self.terms.items()}, self.nmodes
        )

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Number):
            return CanonicalPolynomial(
                {k: c * other for k, c in self.terms.items()}, self.nmodes
            )
        self._check(other)
        out = {}
        for k1, c1 in self.terms.items():
            for k2, c2 in other.terms.items():
                for key, swap in self._mul_keys(k1, k2):
                    c = out.get(key, 0j) + c1 * c2 * swap
                    if c == 0:
                        out.pop(key, None)
                    else:
                        out[key] = c
        return CanonicalPolynomial(out, self.nmodes)

    def __rmul__(self, other):
        if isinstance(other, Number):
            return self * other
        return NotImplemented

    def __pow__(self, n):
        if not isinstance(n, int) or n < 0:
            raise ValueError("only non-negative integer powers")
        out = CanonicalPolynomial.identity(self.nmodes)
        for _ in range(n):
            out = out * self
        return out

    @staticmethod
    def _mul_keys(k1, k2):
        """Normal-order the product of two monomial keys.

        Per mode, (q^a1 p^b1)(q^a2 p^b2) re-orders the inner p^b1 q^a2 block;
        different modes commute, so the expansions combine as a product.
        """
        parts = [[((a1 + a2 - k, b1 + b2 - k), c) for k, c in _swap_coeffs(b1, a2)]
                 for (a1, b1), (a2, b2) in zip(k1, k2)]
        combos = [((), 1.0 + 0j)]
        for choices in parts:
            combos = [(key + (ab,), coeff * c) for key, coeff in combos
                      for ab, c in choices]
        return combos

    # ---- involutions ----
    def adjoint(self):
        """Hermitian adjoint: conjugate coefficients, reverse operator order.

        Reversal turns each q^a p^b into p^b q^a, which is re-normal-ordered
        exactly; the operation is involutive and anti-multiplicative.
        """
        out = {}
        for key, coeff in self.terms.items():
            parts = [[((a - k, b - k), c) for k, c in _swap_coeffs(b, a)]
                     for a, b in key]
            combos = [((), coeff.conjugate())]
            for choices in parts:
                combos = [(k_ + (ab,), cc * c) for k_, cc in combos
                          for ab, c in choices]
            for k_, c in combos:
                cc = out.get(k_, 0j) + c
                if cc == 0:
                    out.pop(k_, None)
                else:
                    out[k_] = cc
        return CanonicalPolynomial(out, self.nmodes)

    def is_hermitian(self, atol=1e-12):
        diff = self.adjoint() - self
        return all(abs(c) <= atol for c in diff.terms.values())

    # ---- comparison / display ----
    def __eq__(self, other):
        if isinstance(other, Number):
            other = CanonicalPolynomial.identity(self.nmodes, other)
        if not isinstance(other, CanonicalPolynomial):
            return NotImplemented
        return self.nmodes == other.nmodes and self.terms == other.terms

    def __hash__(self):
        return hash((self.nmodes, frozenset(self.terms.items())))

    def is_zero(self):
        return not self.terms

    def almost_equal(self, other, atol=1e-12):
        self._check(other)
        diff = self - other
        return all(abs(c) <= atol for c in diff.terms.values())

    def _term_str(self, key):
        factors = []
        for i, (a, b) in enumerate(key):
            if a:
                factors.append(f"q{i}" + (f"^{a}" if a > 1 else ""))
            if b:
                factors.append(f"p{i}" + (f"^{b}" if b > 1 else ""))
        return " ".join(factors) if factors else "1"

    def __repr__(self):
        if not self.terms:
            return "0"
        bits = []
        for key in sorted(self.terms, key=lambda k: (sum(a + b for a, b in k), k)):
            c = self.terms[key]
            if c.imag == 0:
                cs = f"{c.real:g}"
            elif c.real == 0:
                cs = f"{c.imag:g}i"
            else:
                cs = f"({c.real:g}{c.imag:+g}i)"
            bits.append(f"{cs} {self._term_str(key)}")
        return " + ".join(bits).replace("+ -", "- ")


def multiply(p1, p2):
    """Normal-form product of two polynomials (must share nmodes)."""
    return p1 * p2


def commutator(p1, p2):
    """[p1, p2] = p1 p2 - p2 p1 in normal form."""
    return p1 * p2 - p2 * p1


def adjoint(poly):
    return poly.adjoint()


# short aliases used throughout the package
def q(mode=0, nmodes=None):
    return CanonicalPolynomial.q(mode, nmodes)


def p(mode=0, nmodes=None):
    return CanonicalPolynomial.p(mode, nmodes)


def identity(nmodes=1, coeff=1.0):
    return CanonicalPolynomial.identity(nmodes, coeff)
