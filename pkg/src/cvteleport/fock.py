"""Truncated Fock-space backend.

All operators are realised as dense matrices on the number basis below a
cutoff via q = (a + a^dag)/sqrt2, p = i(a^dag - a)/sqrt2.  Unitaries are
built at an enlarged internal dimension and projected back to the requested
cutoff afterwards, which keeps boundary artifacts out of the retained block;
non-Gaussian gates transiently populate high number states, so product
expressions are composed at the build dimension before projecting.

Mixed states produced by the Monte Carlo noise channels are represented as
weighted ensembles of pure vectors rather than density matrices.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.linalg import expm

from . import gates as g
from .algebra import CanonicalPolynomial, commutator, identity, p as p_poly, q as q_poly

DEFAULT_PAD = 8


class TruncationError(RuntimeError):
    """State norm fell below tolerance after projection (pathological cutoff)."""


# ---------------------------------------------------------------------------
# operator matrices
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def ladder(cutoff):
    return np.diag(np.sqrt(np.arange(1, cutoff)), 1).astype(complex)


@lru_cache(maxsize=None)
def quad_matrices(cutoff):
    a = ladder(cutoff)
    ad = a.conj().T
    return (a + ad) / math.sqrt(2), 1j * (ad - a) / math.sqrt(2)


@lru_cache(maxsize=None)
def _monomial_matrix(a_pow, b_pow, cutoff):
    qm, pm = quad_matrices(cutoff)
    out = np.eye(cutoff, dtype=complex)
    for _ in range(a_pow):
        out = out @ qm
    for _ in range(b_pow):
        out = out @ pm
    return out


@lru_cache(maxsize=None)
def quad_eigensystem(cutoff, quadrature):
    qm, pm = quad_matrices(cutoff)
    vals, vecs = np.linalg.eigh(qm if quadrature == "q" else pm)
    return vals, vecs


def operator_matrix(poly, cutoff):
    """Dense matrix of a normal-form polynomial at the given cutoff."""
    if cutoff < 2:
        raise ValueError("cutoff must be at least 2")
    n = poly.nmodes
    dim = cutoff ** n
    out = np.zeros((dim, dim), dtype=complex)
    for key, coeff in poly.terms.items():
        term = None
        for a_pow, b_pow in key:
            m = _monomial_matrix(a_pow, b_pow, cutoff)
            term = m if term is None else np.kron(term, m)
        out += coeff * term
    return out


def total_number_poly(nmodes):
    out = identity(nmodes, 0.0)
    for m in range(nmodes):
        qm, pm = q_poly(m, nmodes), p_poly(m, nmodes)
        out = out + (qm * qm + pm * pm - identity(nmodes)) * 0.5
    return out


def _number_sectors(nmodes, cutoff):
    """Basis indices grouped by total photon number."""
    sectors = {}
    for flat in range(cutoff ** nmodes):
        rem, occ = flat, []
        for _ in range(nmodes):
            occ.append(rem % cutoff)
            rem //= cutoff
        sectors.setdefault(sum(occ), []).append(flat)
    return [np.array(v) for _, v in sorted(sectors.items())]


def _expm_blockwise(h_mat, sectors, strength):
    dim = h_mat.shape[0]
    out = np.zeros((dim, dim), dtype=complex)
    for idx in sectors:
        block = h_mat[np.ix_(idx, idx)]
        out[np.ix_(idx, idx)] = expm(1j * strength * block)
    return out


def _displacement_matrix(q0, p0, dim):
    """exp(-i (q0 p - p0 q)) via a rotated diagonal quadrature, exact at dim.

    With theta = atan2(q0, p0) the exponent equals s * (cos(theta) q -
    sin(theta) p) = s * U^dag q U for the number-diagonal rotation U, so the
    displacement is U^dag exp(i s q) U with q diagonalised once per cutoff.
    """
    s = math.hypot(q0, p0)
    if s == 0:
        return np.eye(dim, dtype=complex)
    theta = math.atan2(q0, p0)
    vals, vecs = quad_eigensystem(dim, "q")
    rot = np.exp(1j * theta * (np.arange(dim) + 0.5))
    core = (vecs * np.exp(1j * s * vals)) @ vecs.conj().T
    return (rot.conj()[:, None] * core) * rot[None, :]


def _linear_parts(poly):
    """(q0, p0) such that poly = -(q0 p - p0 q) + const, or None."""
    if poly.degree > 1:
        return None
    n = poly.nmodes
    q0 = p0 = 0.0
    for key, coeff in poly.terms.items():
        tot = sum(a + b for a, b in key)
        if tot == 0:
            if abs(coeff.imag) > 0 or abs(coeff.real) > 0:
                return None  # scalar terms handled by generic path to keep phase
            continue
        mode = next(i for i, ab in enumerate(key) if ab != (0, 0))
        if n > 1:
            return None
        a, b = key[mode]
        if b:
            q0 = -coeff.real
        else:
            p0 = coeff.real
        if abs(coeff.imag) > 1e-15:
            return None
    return q0, p0


def gate_matrix(gate, cutoff, build_dim=None):
    """Unitary matrix of a gate, built padded and projected to ``cutoff``.

    ``build_dim`` overrides the internal construction dimension
    (default cutoff + 8).  Sequences are multiplied at the build dimension
    before the single final projection.  Exponentials whose generator
    commutes with the total photon number are exponentiated sector by
    sector, which keeps two-mode passive gates cheap.
    """
    build = build_dim or (cutoff + DEFAULT_PAD)
    u = _gate_matrix_at(gate, build)
    if gate.nmodes == 1:
        return u[:cutoff, :cutoff]
    keep = _retained_indices(gate.nmodes, build, cutoff)
    return u[np.ix_(keep, keep)]


def _retained_indices(nmodes, build, cutoff):
    idx = np.arange(cutoff)
    out = idx
    for _ in range(nmodes - 1):
        out = (out[:, None] * build + idx[None, :]).ravel()
    return out


def _gate_matrix_at(gate, dim):
    if isinstance(gate, g.GateSequence):
        out = None
        for factor in gate.gates:
            u = _gate_matrix_at(factor, dim)
            out = u if out is None else u @ out
        return out if out is not None else np.eye(dim, dtype=complex)
    if isinstance(gate, g.AffineSymplectic):
        return _gate_matrix_at(g.affine_to_exponential(gate), dim)
    if isinstance(gate, g.Exponential):
        gen, t = gate.generator, gate.strength
        if gate.nmodes == 1:
            lin = _linear_parts(gen * t)
            if lin is not None:
                return _displacement_matrix(*lin, dim)
            return expm(1j * t * operator_matrix(gen, dim))
        h_mat = operator_matrix(gen, dim)
        if commutator(gen, total_number_poly(gate.nmodes)).is_zero():
            return _expm_blockwise(h_mat, _number_sectors(gate.nmodes, dim), t)
        return expm(1j * t * h_mat)
    raise TypeError(f"not a gate: {gate!r}")


# ---------------------------------------------------------------------------
# states
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class FockState:
    amps: np.ndarray
    nmodes: int = field(init=False)
    cutoff: int = field(init=False)

    def __post_init__(self):
        self.amps = np.asarray(self.amps, dtype=complex)
        self.nmodes = self.amps.ndim
        self.cutoff = self.amps.shape[0]
        if any(s != self.cutoff for s in self.amps.shape):
            raise ValueError("all mode axes must share the cutoff")

    def norm(self):
        return float(np.sqrt(np.vdot(self.amps, self.amps).real))

    def deficit(self):
        """Truncation deficit 1 - norm^2."""
        return 1.0 - np.vdot(self.amps, self.amps).real

    def normalized(self):
        n = self.norm()
        if n < 1e-150:
            raise TruncationError("state norm underflow")
        return FockState(self.amps / n)

    def padded(self, cutoff):
        if cutoff < self.cutoff:
            raise ValueError("use truncated() to shrink")
        pad = [(0, cutoff - self.cutoff)] * self.nmodes
        return FockState(np.pad(self.amps, pad))

    def truncated(self, cutoff):
        if cutoff > self.cutoff:
            return self.padded(cutoff)
        sl = tuple(slice(0, cutoff) for _ in range(self.nmodes))
        return FockState(self.amps[sl])

    def tensor(self, other):
        joined = np.tensordot(self.amps, other.amps, axes=0)
        return FockState(joined)

    def overlap(self, other):
        if self.amps.shape != other.amps.shape:
            raise ValueError("shape mismatch")
        return complex(np.vdot(self.amps, other.amps))

    def quadrature_moments(self, mode):
        """(mean, cov) of (q, p) on one mode, normalising away any deficit."""
        rho_axis = np.moveaxis(self.amps, mode, 0).reshape(self.cutoff, -1)
        gram = rho_axis @ rho_axis.conj().T  # single-mode reduced density matrix
        gram /= np.trace(gram).real
        qm, pm = quad_matrices(self.cutoff)
        mq = np.trace(gram @ qm).real
        mp = np.trace(gram @ pm).real
        qq = np.trace(gram @ qm @ qm).real - mq * mq
        pp = np.trace(gram @ pm @ pm).real - mp * mp
        qp_sym = 0.5 * np.trace(gram @ (qm @ pm + pm @ qm)).real - mq * mp
        return np.array([mq, mp]), np.array([[qq, qp_sym], [qp_sym, pp]])

    def to_record(self):
        flat = self.amps.ravel()
        nz = np.nonzero(flat)[0]
        return {
            "nmodes": self.nmodes,
            "cutoff": self.cutoff,
            "amplitudes": [[int(i), float(flat[i].real), float(flat[i].imag)]
                           for i in nz],
        }

    @classmethod
    def from_record(cls, rec):
        flat = np.zeros(rec["cutoff"] ** rec["nmodes"], dtype=complex)
        for i, re, im in rec["amplitudes"]:
            flat[i] = re + 1j * im
        return cls(flat.reshape((rec["cutoff"],) * rec["nmodes"]))

    def to_json(self):
        return json.dumps(self.to_record())

    @classmethod
    def from_json(cls, text):
        return cls.from_record(json.loads(text))


@dataclass(eq=False)
class FockEnsemble:
    """Weighted ensemble of pure vectors standing in for a mixed state."""
    members: list
    weights: np.ndarray = None

    def __post_init__(self):
        if self.weights is None:
            self.weights = np.full(len(self.members), 1.0 / len(self.members))
        self.weights = np.asarray(self.weights, dtype=float)
        self.weights = self.weights / self.weights.sum()

    def mean_moments(self, mode=0):
        means = np.zeros(2)
        second = np.zeros((2, 2))
        for w, st in zip(self.weights, self.members):
            m, c = st.quadrature_moments(mode)
            means += w * m
            second += w * (c + np.outer(m, m))
        return means, second - np.outer(means, means)


def vacuum_fock(cutoff, nmodes=1):
    amps = np.zeros((cutoff,) * nmodes, dtype=complex)
    amps[(0,) * nmodes] = 1.0
    return FockState(amps)


def number_state(n, cutoff):
    amps = np.zeros(cutoff, dtype=complex)
    amps[n] = 1.0
    return FockState(amps)


def coherent_fock(q0, p0, cutoff):
    """Coherent state with <q> = q0, <p> = p0 (alpha = (q0 + i p0)/sqrt2)."""
    alpha = (q0 + 1j * p0) / math.sqrt(2)
    if alpha == 0:
        return vacuum_fock(cutoff)
    n = np.arange(cutoff)
    log_fact = np.cumsum(np.concatenate([[0.0], np.log(np.arange(1, cutoff))]))
    amps = np.exp(-0.5 * abs(alpha) ** 2 + n * np.log(alpha + 0j) - 0.5 * log_fact)
    return FockState(amps)


def tmsv(eta, cutoff):
    """Two-mode squeezed vacuum sqrt(1 - eta^2) sum eta^n |n, n>.

    The ideal EPR limit eta -> 1 is not normalisable; request eta < 1 here
    and use the covariance picture for the ideal limit.
    """
    if not 0 <= eta < 1:
        raise ValueError("eta must lie in [0, 1)")
    amps = np.zeros((cutoff, cutoff), dtype=complex)
    diag = math.sqrt(1 - eta ** 2) * eta ** np.arange(cutoff)
    amps[np.arange(cutoff), np.arange(cutoff)] = diag
    return FockState(amps)


# ---------------------------------------------------------------------------
# dynamics and measurement
# ---------------------------------------------------------------------------

def apply_gate_fock(gate, state, targets=None, build_dim=None):
    """Apply a gate to selected modes of a Fock state.

    The gate matrix is built at the state cutoff (padded internally); for a
    k-mode gate the state tensor is contracted along the target axes.
    """
    targets = tuple(range(gate.nmodes)) if targets is None else tuple(targets)
    if len(targets) != gate.nmodes:
        raise ValueError("target count does not match gate mode count")
    u = gate_matrix(gate, state.cutoff, build_dim=build_dim)
    k = len(targets)
    dim = state.cutoff ** k
    moved = np.moveaxis(state.amps, targets, range(k))
    shape = moved.shape
    out = (u @ moved.reshape(dim, -1)).reshape(shape)
    return FockState(np.moveaxis(out, range(k), targets))


def homodyne_distribution(state, mode, quadrature):
    """Eigenvalues of the truncated quadrature and their Born probabilities."""
    vals, vecs = quad_eigensystem(state.cutoff, quadrature)
    moved = np.moveaxis(state.amps, mode, 0).reshape(state.cutoff, -1)
    amp = vecs.conj().T @ moved
    probs = np.einsum("ij,ij->i", amp, amp.conj()).real
    probs = np.clip(probs, 0.0, None)
    return vals, probs


def homodyne_sample(state, mode, quadrature, rng):
    """Sample a quadrature outcome; project, renormalise and drop the mode.

    The outcome is an eigenvalue of the truncated quadrature operator
    (a Gauss-Hermite-style discrete spectrum converging to the continuum).
    """
    vals, vecs = quad_eigensystem(state.cutoff, quadrature)
    moved = np.moveaxis(state.amps, mode, 0).reshape(
        state.cutoff, *[s for i, s in enumerate(state.amps.shape) if i != mode])
    amp = np.tensordot(vecs.conj().T, moved, axes=1)
    flat = amp.reshape(state.cutoff, -1)
    probs = np.clip(np.einsum("ij,ij->i", flat, flat.conj()).real, 0.0, None)
    total = probs.sum()
    if total < 1e-150:
        raise TruncationError("zero norm before homodyne sampling")
    k = rng.choice(state.cutoff, p=probs / total)
    outcome = float(vals[k])
    if state.nmodes == 1:
        return outcome, None
    post = amp[k] / math.sqrt(probs[k])
    return outcome, FockState(post)


def fidelity(s1, s2):
    """Squared overlap of normalised states; ensembles average member-wise.

    For ensembles this is the mean squared overlap, a lower-bound proxy for
    the mixed-state (Uhlmann) fidelity.
    """
    if isinstance(s1, FockEnsemble) and isinstance(s2, FockEnsemble):
        raise ValueError("at most one argument may be an ensemble")
    if isinstance(s1, FockEnsemble):
        s1, s2 = s2, s1
    if isinstance(s2, FockEnsemble):
        return float(sum(w * fidelity(s1, m) for w, m in
                         zip(s2.weights, s2.members)))
    n1, n2 = s1.norm(), s2.norm()
    return abs(s1.overlap(s2)) ** 2 / (n1 * n1 * n2 * n2)
