"""Gate descriptions and the conjugation machinery built on the symbolic algebra.

A gate is one of three variants:

* ``Exponential(generator, strength)`` -- the unitary exp(i * strength * H)
  for a Hermitian polynomial generator H.
* ``AffineSymplectic(s_matrix, displacement, phase)`` -- a Gaussian gate given
  by its action on the quadrature vector x = (q_1, p_1, ..., q_n, p_n) in the
  Heisenberg picture, U^dag x U = S x + d, together with a global phase.
* ``GateSequence(gates)`` -- composition, listed in circuit (time) order.

``heisenberg_evolve`` computes the Heisenberg-picture observable U^dag X U;
``conjugate_pauli`` synthesises the modified displacement correction
U R(q0, p0) U^dag used when a gate is pulled through a teleportation
correction; ``classify`` places a gate in the commutation hierarchy by
inspecting what conjugation does to the quadrature generators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm, logm

from .algebra import CanonicalPolynomial, ModeMismatchError, commutator, identity, p, q


class NonTerminatingAdjointError(RuntimeError):
    """The nested-commutator series did not terminate within max_depth."""


DEFAULT_MAX_DEPTH = 16


def symplectic_form(nmodes):
    """Standard symplectic form in (q1, p1, ..., qn, pn) ordering."""
    omega = np.zeros((2 * nmodes, 2 * nmodes))
    for i in range(nmodes):
        omega[2 * i, 2 * i + 1] = 1.0
        omega[2 * i + 1, 2 * i] = -1.0
    return omega


@dataclass(eq=False)
class Exponential:
    generator: CanonicalPolynomial
    strength: float = 1.0

    def __post_init__(self):
        if not self.generator.is_hermitian():
            raise ValueError("Exponential generator must be Hermitian")

    @property
    def nmodes(self):
        return self.generator.nmodes

    def dagger(self):
        return Exponential(self.generator, -self.strength)


@dataclass(eq=False)
class AffineSymplectic:
    s_matrix: np.ndarray
    displacement: np.ndarray
    phase: float = 0.0

    def __post_init__(self):
        self.s_matrix = np.asarray(self.s_matrix, dtype=float)
        self.displacement = np.asarray(self.displacement, dtype=float)
        n2 = self.s_matrix.shape[0]
        if self.s_matrix.shape != (n2, n2) or n2 % 2 or len(self.displacement) != n2:
            raise ValueError("need a 2n x 2n matrix and a length-2n displacement")
        omega = symplectic_form(n2 // 2)
        defect = np.max(np.abs(self.s_matrix.T @ omega @ self.s_matrix - omega))
        if defect > 1e-10:
            raise ValueError(f"matrix is not symplectic (defect {defect:.2e})")

    @property
    def nmodes(self):
        return self.s_matrix.shape[0] // 2

    def dagger(self):
        s_inv = np.linalg.inv(self.s_matrix)
        return AffineSymplectic(s_inv, -s_inv @ self.displacement, -self.phase)


@dataclass(eq=False)
class GateSequence:
    gates: tuple = field(default_factory=tuple)

    def __post_init__(self):
        self.gates = tuple(self.gates)
        if self.gates:
            n = self.gates[0].nmodes
            if any(g.nmodes != n for g in self.gates):
                raise ModeMismatchError("all gates in a sequence must share nmodes")

    @property
    def nmodes(self):
        return self.gates[0].nmodes if self.gates else 1

    def dagger(self):
        return GateSequence(tuple(g.dagger() for g in reversed(self.gates)))


def dagger(gate):
    return gate.dagger()


# ---------------------------------------------------------------------------
# standard gate constructors
# ---------------------------------------------------------------------------

def displacement_gate(q0, p0, mode=0, nmodes=None):
    """R(q0, p0) = exp(-i (q0 p - p0 q)) acting on one mode."""
    nmodes = (mode + 1) if nmodes is None else nmodes
    gen = -(q0 * p(mode, nmodes) - p0 * q(mode, nmodes))
    if gen.is_zero():
        gen = CanonicalPolynomial.zero(nmodes)
    return Exponential(gen, 1.0)


def identity_gate(nmodes=1):
    return Exponential(CanonicalPolynomial.zero(nmodes), 1.0)


def squeezer(r, mode=0, nmodes=None):
    """One-mode squeezer exp(i r (qp + pq)/2); sends q -> e^{-r} q, p -> e^{r} p."""
    nmodes = (mode + 1) if nmodes is None else nmodes
    qm, pm = q(mode, nmodes), p(mode, nmodes)
    gen = (qm * pm + pm * qm) * 0.5
    return Exponential(gen, r)


def rotation_gate(theta, mode=0, nmodes=None):
    """Phase-space rotation exp(i theta (q^2 + p^2)/2)."""
    nmodes = (mode + 1) if nmodes is None else nmodes
    qm, pm = q(mode, nmodes), p(mode, nmodes)
    return Exponential((qm * qm + pm * pm) * 0.5, theta)


def shear_gate(s, mode=0, nmodes=None):
    """Quadratic phase exp(i s q^2 / 2)."""
    nmodes = (mode + 1) if nmodes is None else nmodes
    qm = q(mode, nmodes)
    return Exponential(qm * qm * 0.5, s)


def cubic_phase_gate(gamma, mode=0, nmodes=None):
    """V(gamma) = exp(i gamma q^3), the minimal non-Gaussian gate."""
    nmodes = (mode + 1) if nmodes is None else nmodes
    qm = q(mode, nmodes)
    return Exponential(qm * qm * qm, gamma)


def controlled_phase_gate(mode_i=0, mode_j=1, nmodes=None):
    """CP = exp(i q_i q_j^2 / 2), a two-mode third-level gate."""
    nmodes = (max(mode_i, mode_j) + 1) if nmodes is None else nmodes
    gen = q(mode_i, nmodes) * q(mode_j, nmodes) * q(mode_j, nmodes) * 0.5
    return Exponential(gen, 1.0)


def kerr_gate(kappa, mode=0, nmodes=None):
    """Kerr interaction exp(i kappa n^2) with n = (q^2 + p^2 - 1)/2."""
    nmodes = (mode + 1) if nmodes is None else nmodes
    qm, pm = q(mode, nmodes), p(mode, nmodes)
    n = (qm * qm + pm * pm - identity(nmodes)) * 0.5
    return Exponential(n * n, kappa)


def beamsplitter_gate(mode_a=0, mode_b=1, nmodes=None):
    """Balanced beamsplitter sending q_a -> (q_a - q_b)/sqrt2, q_b -> (q_a + q_b)/sqrt2
    (same combinations for p) in the Heisenberg picture."""
    nmodes = (max(mode_a, mode_b) + 1) if nmodes is None else nmodes
    gen = q(mode_a, nmodes) * p(mode_b, nmodes) - p(mode_a, nmodes) * q(mode_b, nmodes)
    return Exponential(gen, -math.pi / 4)


# ---------------------------------------------------------------------------
# Heisenberg transforms
# ---------------------------------------------------------------------------

def heisenberg_evolve(gate, poly, max_depth=DEFAULT_MAX_DEPTH):
    """Heisenberg-picture observable U^dag X U for a polynomial X.

    For an affine-symplectic gate the quadrature generators map to
    S x + d and the substitution extends multiplicatively, which is exact.
    For exp(i t H) the adjoint series

        X + (-i t) [H, X] + (-i t)^2 / 2! [H, [H, X]] + ...

    is summed; it must terminate (a nested commutator must vanish exactly)
    within ``max_depth`` terms, otherwise the gate is not polynomial-exactly
    conjugable and NonTerminatingAdjointError is raised (the Kerr generator
    acting on q is the canonical example).
    """
    if isinstance(gate, GateSequence):
        out = poly
        for g in reversed(gate.gates):
            out = heisenberg_evolve(g, out, max_depth)
        return out
    if isinstance(gate, AffineSymplectic):
        return _substitute_affine(gate.s_matrix, gate.displacement, poly)
    if isinstance(gate, Exponential):
        if gate.generator.nmodes != poly.nmodes:
            raise ModeMismatchError("gate and observable mode counts differ")
        if gate.generator.degree <= 2:
            # Gaussian gates have geometric (non-terminating) adjoint series
            # on the generators; their conjugation is the exact affine map.
            aff = clifford_decompose(gate)
            return _substitute_affine(aff.s_matrix, aff.displacement, poly)
        out = poly
        nested = poly
        factor = 1.0 + 0j
        for depth in range(1, max_depth + 1):
            nested = commutator(gate.generator, nested)
            if nested.is_zero():
                return out
            factor *= (-1j * gate.strength) / depth
            out = out + nested * factor
        raise NonTerminatingAdjointError(
            f"adjoint series still nonzero at depth {max_depth}"
        )
    raise TypeError(f"not a gate: {gate!r}")


def _substitute_affine(s_matrix, disp, poly):
    n = poly.nmodes
    images = []
    for i in range(n):
        qi = identity(n, 0.0)
        pi = identity(n, 0.0)
        for j in range(n):
            if s_matrix[2 * i, 2 * j]:
                qi = qi + s_matrix[2 * i, 2 * j] * q(j, n)
            if s_matrix[2 * i, 2 * j + 1]:
                qi = qi + s_matrix[2 * i, 2 * j + 1] * p(j, n)
            if s_matrix[2 * i + 1, 2 * j]:
                pi = pi + s_matrix[2 * i + 1, 2 * j] * q(j, n)
            if s_matrix[2 * i + 1, 2 * j + 1]:
                pi = pi + s_matrix[2 * i + 1, 2 * j + 1] * p(j, n)
        if disp[2 * i]:
            qi = qi + identity(n, disp[2 * i])
        if disp[2 * i + 1]:
            pi = pi + identity(n, disp[2 * i + 1])
        images.append((qi, pi))
    out = CanonicalPolynomial.zero(n)
    for key, coeff in poly.terms.items():
        term = identity(n, coeff)
        for mode, (a, b) in enumerate(key):
            for _ in range(a):
                term = term * images[mode][0]
            for _ in range(b):
                term = term * images[mode][1]
        out = out + term
    return out


def conjugate_pauli(gate, q0, p0, mode=0, max_depth=DEFAULT_MAX_DEPTH):
    """The conjugated displacement U R(q0, p0) U^dag as a single exponential.

    Writing R(q0, p0) = exp(-i (q0 p - p0 q)), conjugation acts inside the
    exponent, so the result is exp(-i (q0 U p U^dag - p0 U q U^dag)).  The
    exponent comes out Hermitian whenever the adjoint series terminates.
    This is exactly the correction a teleportation circuit must apply after
    the gate has been pulled through the Pauli correction.
    """
    gd = gate.dagger()
    n = gate.nmodes
    p_img = heisenberg_evolve(gd, p(mode, n), max_depth)
    q_img = heisenberg_evolve(gd, q(mode, n), max_depth)
    exponent = -(q0 * p_img - p0 * q_img)
    if exponent.is_zero():
        exponent = CanonicalPolynomial.zero(n)
    return Exponential(exponent, 1.0)


# ---------------------------------------------------------------------------
# hierarchy classification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HierarchyLevel:
    level: int | None
    note: str = ""

    @property
    def determined(self):
        return self.level is not None

    def __str__(self):
        return f"C{self.level}" if self.determined else f"undetermined ({self.note})"


def classify(gate, max_level=8, max_depth=DEFAULT_MAX_DEPTH):
    """Hierarchy level of a gate from its conjugation action on q_i, p_i.

    Level 1 means every quadrature generator maps to itself plus a scalar
    (displacements, identity).  Level 2 means conjugation stays affine in the
    generators (Gaussian gates).  Level k maps generators to polynomials of
    degree k - 1.  Raises NonTerminatingAdjointError for gates such as the
    Kerr interaction whose adjoint series never closes.
    """
    n = gate.nmodes
    max_deg = 0
    pure_shift = True
    for mode in range(n):
        for gen in (q(mode, n), p(mode, n)):
            img = heisenberg_evolve(gate, gen, max_depth)
            deg = img.degree
            if deg == float("-inf"):
                deg = 0
            max_deg = max(max_deg, int(deg))
            if not (img - gen).degree <= 0:
                pure_shift = False
    if pure_shift:
        return HierarchyLevel(1)
    level = max(max_deg, 1) + 1
    if level > max_level:
        return HierarchyLevel(None, f"level exceeds max_level={max_level}")
    return HierarchyLevel(level)


# ---------------------------------------------------------------------------
# affine-symplectic decomposition of quadratic exponentials
# ---------------------------------------------------------------------------

def _quadratic_parts(poly):
    """Split a degree<=2 Hermitian polynomial into (A, b, c) with
    H = x^T A x / 2 + b^T x + c as an exact operator identity.

    The normal-form coefficient of q_i p_i contributes i/2 to the scalar on
    top of the symmetrised quadratic, which keeps the phase bookkeeping exact.
    """
    n = poly.nmodes
    dim = 2 * n
    a_mat = np.zeros((dim, dim))
    b_vec = np.zeros(dim)
    c_scal = 0j
    for key, coeff in poly.terms.items():
        powers = [(a, b) for a, b in key]
        total = sum(a + b for a, b in powers)
        if total > 2:
            raise ValueError("polynomial degree exceeds 2")
        active = [(i, ab) for i, ab in enumerate(powers) if ab != (0, 0)]
        if total == 0:
            c_scal += coeff
        elif total == 1:
            i, (a, b) = active[0]
            idx = 2 * i if a else 2 * i + 1
            b_vec[idx] += coeff.real
            c_scal += 1j * coeff.imag  # imaginary linear parts are rejected below
        else:
            if len(active) == 1:
                i, (a, b) = active[0]
                if a == 2:
                    a_mat[2 * i, 2 * i] += 2 * coeff.real
                elif b == 2:
                    a_mat[2 * i + 1, 2 * i + 1] += 2 * coeff.real
                else:  # q_i p_i in normal order: symmetrised part + i/2
                    a_mat[2 * i, 2 * i + 1] += coeff.real
                    a_mat[2 * i + 1, 2 * i] += coeff.real
                    c_scal += 0.5j * coeff
            else:
                (i, (ai, bi)), (j, (aj, bj)) = active
                idx_i = 2 * i if ai else 2 * i + 1
                idx_j = 2 * j if aj else 2 * j + 1
                a_mat[idx_i, idx_j] += coeff.real
                a_mat[idx_j, idx_i] += coeff.real
    if abs(c_scal.imag) > 1e-10:
        raise ValueError("polynomial is not Hermitian")
    return a_mat, b_vec, c_scal.real


def clifford_decompose(gate):
    """Exact affine-symplectic form of a gate with degree <= 2 generator.

    For H = x^T A x / 2 + b^T x + c the Heisenberg flow of exp(i t H) is

        d x / dt = -Omega (A x + b),

    integrated in closed form with a block matrix exponential; the scalar
    part accumulates into the phase.  Sequences fold left-to-right and
    affine-symplectic inputs pass through unchanged.
    """
    if isinstance(gate, AffineSymplectic):
        return gate
    if isinstance(gate, GateSequence):
        out = None
        for g in gate.gates:
            step = clifford_decompose(g)
            if out is None:
                out = step
            else:
                out = AffineSymplectic(
                    step.s_matrix @ out.s_matrix,
                    step.s_matrix @ out.displacement + step.displacement,
                    out.phase + step.phase,
                )
        return out if out is not None else AffineSymplectic(np.eye(2), np.zeros(2))
    if not isinstance(gate, Exponential):
        raise TypeError(f"not a gate: {gate!r}")
    if gate.generator.degree > 2:
        raise ValueError("generator degree exceeds 2; not a Gaussian gate")
    a_mat, b_vec, c_scal = _quadratic_parts(gate.generator)
    n = gate.nmodes
    dim = 2 * n
    omega = symplectic_form(n)
    t = gate.strength
    # affine flow via one (dim+1) x (dim+1) exponential
    block = np.zeros((dim + 1, dim + 1))
    block[:dim, :dim] = -t * (omega @ a_mat)
    block[:dim, dim] = -t * (omega @ b_vec)
    flow = expm(block)
    s_matrix = flow[:dim, :dim]
    disp = flow[:dim, dim]
    return AffineSymplectic(s_matrix, disp, phase=t * c_scal)


def affine_to_exponential(gate):
    """Inverse of ``clifford_decompose``: a quadratic generator reproducing
    (S, d), plus the stored phase carried over as a scalar term.

    Uses the principal matrix logarithm, which is enough for the gates this
    package builds; symplectic matrices with eigenvalue -1 (rotations by pi)
    map to one member of the metaplectic pair, i.e. agreement holds up to a
    global sign on states.
    """
    if isinstance(gate, Exponential):
        return gate
    if isinstance(gate, GateSequence):
        return GateSequence(tuple(affine_to_exponential(g) for g in gate.gates))
    n = gate.nmodes
    dim = 2 * n
    omega = symplectic_form(n)
    k = np.real(logm(gate.s_matrix))
    a_mat = omega @ k
    a_mat = 0.5 * (a_mat + a_mat.T)
    # d = M (-Omega b) with M = integral of exp(-s Omega A); solve for b
    block = np.zeros((2 * dim, 2 * dim))
    block[:dim, :dim] = -omega @ a_mat
    block[:dim, dim:] = np.eye(dim)
    m_int = expm(block)[:dim, dim:]
    b_vec = omega @ np.linalg.solve(m_int, gate.displacement)
    poly = identity(n, gate.phase)
    for i in range(dim):
        xi = q(i // 2, n) if i % 2 == 0 else p(i // 2, n)
        if b_vec[i]:
            poly = poly + b_vec[i] * xi
        for j in range(dim):
            if a_mat[i, j]:
                xj = q(j // 2, n) if j % 2 == 0 else p(j // 2, n)
                poly = poly + 0.5 * a_mat[i, j] * (xi * xj)
    # re-hermitise: normal ordering of x_i x_j added an exact i/2 per qp pair,
    # which the symmetrised A matrix cancels pairwise; drop residual dust
    poly = (poly + poly.adjoint()) * 0.5
    return Exponential(poly, 1.0)


def embed_gate(gate, nmodes, targets):
    """Lift a gate onto ``targets`` of a wider register."""
    targets = tuple(targets)
    if isinstance(gate, GateSequence):
        return GateSequence(tuple(embed_gate(g, nmodes, targets) for g in gate.gates))
    if isinstance(gate, Exponential):
        gen = gate.generator.promote(nmodes, list(targets))
        return Exponential(gen, gate.strength)
    if isinstance(gate, AffineSymplectic):
        s_full = np.eye(2 * nmodes)
        d_full = np.zeros(2 * nmodes)
        for bi, ti in enumerate(targets):
            d_full[2 * ti: 2 * ti + 2] = gate.displacement[2 * bi: 2 * bi + 2]
            for bj, tj in enumerate(targets):
                s_full[2 * ti: 2 * ti + 2, 2 * tj: 2 * tj + 2] = \
                    gate.s_matrix[2 * bi: 2 * bi + 2, 2 * bj: 2 * bj + 2]
        return AffineSymplectic(s_full, d_full, gate.phase)
    raise TypeError(f"not a gate: {gate!r}")
