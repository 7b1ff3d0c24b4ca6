"""Exact simulation of Gaussian states under affine-symplectic gates.

States carry a mean vector and covariance matrix over the quadratures in
(q1, p1, ..., qn, pn) ordering with hbar = 1, so the vacuum has covariance
I/2.  Homodyne measurement is destructive: the remaining modes are
conditioned with the standard Gaussian rule and the measured mode is
removed.  The Gaussian noise channel adds ``sigma`` to every selected
diagonal covariance entry, i.e. ``sigma`` is the added variance per
quadrature; see the conventions note in the README for how this normalises
the random-displacement kernel.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import gates as g


@dataclass(eq=False)
class GaussianState:
    mean: np.ndarray
    cov: np.ndarray
    nmodes: int = field(init=False)

    def __post_init__(self):
        self.mean = np.array(self.mean, dtype=float)
        self.cov = np.array(self.cov, dtype=float)
        if self.mean.ndim != 1 or len(self.mean) % 2:
            raise ValueError("mean must have even length 2n")
        self.nmodes = len(self.mean) // 2
        if self.cov.shape != (2 * self.nmodes, 2 * self.nmodes):
            raise ValueError("covariance shape does not match mean")
        if np.max(np.abs(self.cov - self.cov.T)) > 1e-12:
            raise ValueError("covariance must be symmetric")
        self.cov = 0.5 * (self.cov + self.cov.T)

    def uncertainty_defect(self):
        """Most negative eigenvalue of cov + i Omega / 2 (>= ~0 for physical states)."""
        omega = g.symplectic_form(self.nmodes)
        eigs = np.linalg.eigvalsh(self.cov + 0.5j * omega)
        return float(eigs.min())

    def purity(self):
        """det(2 cov) ** -1/2; equals 1 for pure states."""
        return 1.0 / math.sqrt(np.linalg.det(2.0 * self.cov))

    def mode_mean(self, mode):
        return self.mean[2 * mode: 2 * mode + 2].copy()

    def mode_cov(self, mode):
        return self.cov[2 * mode: 2 * mode + 2, 2 * mode: 2 * mode + 2].copy()

    def mean_photons(self, mode):
        """(<q^2> + <p^2> - 1) / 2 for one mode."""
        m = self.mode_mean(mode)
        c = self.mode_cov(mode)
        return 0.5 * (np.trace(c) + m @ m - 1.0)

    def to_record(self):
        return {"nmodes": self.nmodes, "mean": self.mean.tolist(),
                "cov": self.cov.tolist()}

    @classmethod
    def from_record(cls, rec):
        return cls(np.asarray(rec["mean"]), np.asarray(rec["cov"]))

    def to_json(self):
        return json.dumps(self.to_record())

    @classmethod
    def from_json(cls, text):
        return cls.from_record(json.loads(text))


def vacuum(nmodes=1):
    return GaussianState(np.zeros(2 * nmodes), 0.5 * np.eye(2 * nmodes))


def coherent(q0, p0):
    return GaussianState(np.array([q0, p0]), 0.5 * np.eye(2))


def tensor(a, b):
    mean = np.concatenate([a.mean, b.mean])
    cov = np.zeros((len(mean), len(mean)))
    na = 2 * a.nmodes
    cov[:na, :na] = a.cov
    cov[na:, na:] = b.cov
    return GaussianState(mean, cov)


def apply_gate(gate, state, targets=None):
    """Apply an affine-symplectic gate: mean -> S mean + d, cov -> S cov S^T.

    Exponential gates with degree <= 2 generators and sequences of such are
    decomposed on the fly; ``targets`` embeds a narrow gate onto selected
    modes of a wider state.
    """
    aff = g.clifford_decompose(gate)
    if targets is not None:
        aff = g.embed_gate(aff, state.nmodes, targets)
    if aff.nmodes != state.nmodes:
        raise ValueError("gate mode count does not match state")
    s, d = aff.s_matrix, aff.displacement
    return GaussianState(s @ state.mean + d, s @ state.cov @ s.T)


def epr_pair(r):
    """Two-mode squeezed vacuum with squeezing parameter r >= 0.

    Block form: diagonal blocks cosh(2r)/2 * I, off-diagonal blocks
    sinh(2r)/2 * diag(1, -1); the r -> infinity limit is the ideal EPR pair
    with Var(q1 - q2) = Var(p1 + p2) = e^{-2r} -> 0.
    """
    if r < 0:
        raise ValueError("squeezing parameter must be non-negative")
    c, s = math.cosh(2 * r) / 2, math.sinh(2 * r) / 2
    cov = np.zeros((4, 4))
    cov[0:2, 0:2] = c * np.eye(2)
    cov[2:4, 2:4] = c * np.eye(2)
    cov[0, 2] = cov[2, 0] = s
    cov[1, 3] = cov[3, 1] = -s
    return GaussianState(np.zeros(4), cov)


def homodyne_measure(state, mode, quadrature, rng):
    """Measure one quadrature of one mode; returns (outcome, conditioned state).

    The outcome is drawn from the Gaussian marginal of the chosen coordinate;
    the remaining coordinates are conditioned on it (Schur complement) and
    the measured mode is then removed entirely, the conjugate coordinate
    being traced out.  A zero-variance marginal returns its mean
    deterministically.
    """
    if quadrature not in ("q", "p"):
        raise ValueError("quadrature must be 'q' or 'p'")
    idx = 2 * mode + (0 if quadrature == "q" else 1)
    var = state.cov[idx, idx]
    if var > 0:
        outcome = rng.normal(state.mean[idx], math.sqrt(var))
    else:
        outcome = state.mean[idx]
    keep = [i for i in range(2 * state.nmodes) if i // 2 != mode]
    mean_k = state.mean[keep]
    cov_kk = state.cov[np.ix_(keep, keep)]
    if var > 0:
        cvec = state.cov[keep, idx]
        mean_k = mean_k + cvec * (outcome - state.mean[idx]) / var
        cov_kk = cov_kk - np.outer(cvec, cvec) / var
    if not keep:
        return float(outcome), None
    return float(outcome), GaussianState(mean_k, cov_kk)


def add_gaussian_noise(state, sigma, modes=None):
    """Random-displacement (transfer) channel on the selected modes.

    Adds ``sigma`` to each diagonal covariance entry of the chosen modes and
    leaves the mean unchanged: the exact Gaussian-state action of convolving
    with an isotropic displacement distribution of variance sigma per
    quadrature.
    """
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    modes = range(state.nmodes) if modes is None else modes
    cov = state.cov.copy()
    for m in modes:
        cov[2 * m, 2 * m] += sigma
        cov[2 * m + 1, 2 * m + 1] += sigma
    return GaussianState(state.mean.copy(), cov)


def fidelity_gaussian(s1, s2):
    """Closed-form fidelity |<psi1|psi2>|^2-convention for single-mode states.

    F = exp(-delta^T (V1+V2)^{-1} delta / 2) / (sqrt(D + Phi) - sqrt(Phi))
    with D = det(V1+V2) and Phi = (det(2V1) - 1)(det(2V2) - 1) / 4; reduces
    to the squared overlap for pure states.
    """
    if s1.nmodes != 1 or s2.nmodes != 1:
        raise ValueError("only single-mode fidelity is supported here")
    v1, v2 = s1.cov, s2.cov
    delta = s1.mean - s2.mean
    vsum = v1 + v2
    dd = float(np.linalg.det(vsum))
    phi = (np.linalg.det(2 * v1) - 1.0) * (np.linalg.det(2 * v2) - 1.0) / 4.0
    phi = max(phi, 0.0)
    expo = math.exp(-0.5 * delta @ np.linalg.solve(vsum, delta))
    return expo / (math.sqrt(dd + phi) - math.sqrt(phi))
