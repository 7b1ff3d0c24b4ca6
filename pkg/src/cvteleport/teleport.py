"""Teleportation of states and gates with the finite-squeezing noise model.

The protocol teleports mode "in" through a two-mode squeezed resource: a
balanced beamsplitter maps q_in - q_1 and p_in + p_1 onto single-mode
quadratures (scaled by sqrt2), both are measured by homodyne detection, and
the outcomes (q0, p0) condition a displacement correction on the output
mode.  Teleporting a gate U instead applies U to the output arm of the
resource before the measurement and replaces the displacement correction by
U R(q0, p0) U^dag, synthesised exactly in the symbolic algebra.

Finite squeezing eta and homodyne efficiency nu yield the Gaussian noise
variance sigma = (1 - eta)/(1 + eta) + (1 - nu^2)/nu^2 added per quadrature;
the first term is exp(-2 artanh eta) in stable form.  The random-displacement
transfer channel with the same sigma reproduces the protocol's noise, which
the test suite checks by Monte Carlo.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import fock as fk
from . import gates as g
from . import gaussian as gs
from .algebra import CanonicalPolynomial, commutator


class GateNotTeleportableError(RuntimeError):
    """Gate sits above the third hierarchy level (e.g. Kerr); compose it from
    group commutators of teleportable gates instead."""


def sigma_from(eta, nu):
    """Noise variance per quadrature for squeezing eta and efficiency nu."""
    if not 0 <= eta < 1:
        raise ValueError("eta must lie in [0, 1)")
    if not 0 < nu <= 1:
        raise ValueError("nu must lie in (0, 1]")
    return (1.0 - eta) / (1.0 + eta) + (1.0 - nu * nu) / (nu * nu)


@dataclass
class TeleportConfig:
    """Protocol parameters; give exactly one of ``eta`` or ``r``.

    ``cutoff`` is the retained Fock dimension; ``resource_dim`` the enlarged
    axis used for the resource arm so that pre-measurement gates keep their
    transient high-photon support, and ``work_dim`` the single-mode working
    dimension for corrections (both only matter for the fock backend).
    """

    eta: float = None
    r: float = None
    nu: float = 1.0
    backend: str = "gaussian"
    cutoff: int = 40
    seed: int = 0
    trials: int = 10_000
    resource_dim: int = None
    work_dim: int = None

    def __post_init__(self):
        if (self.eta is None) == (self.r is None):
            raise ValueError("give exactly one of eta or r")
        if self.eta is not None and not 0 <= self.eta < 1:
            raise ValueError("eta must lie in [0, 1)")
        if self.r is not None and self.r < 0:
            raise ValueError("r must be non-negative")
        if not 0 < self.nu <= 1:
            raise ValueError("nu must lie in (0, 1]")
        if self.backend not in ("gaussian", "fock"):
            raise ValueError("backend must be 'gaussian' or 'fock'")
        if self.resource_dim is None:
            self.resource_dim = 4 * self.cutoff
        if self.work_dim is None:
            self.work_dim = 8 * self.cutoff

    @property
    def eta_value(self):
        return self.eta if self.eta is not None else math.tanh(self.r)

    @property
    def r_value(self):
        return self.r if self.r is not None else math.atanh(self.eta)

    @property
    def sigma(self):
        """Derived noise variance; always recomputed from (eta, nu)."""
        return sigma_from(self.eta_value, self.nu)

    def rng(self):
        return np.random.default_rng(np.random.SeedSequence(self.seed))

    def trial_rng(self, index):
        """Independent per-trial stream: seeded by (seed, trial index)."""
        return np.random.default_rng(
            np.random.SeedSequence(entropy=self.seed, spawn_key=(index,)))


@dataclass
class OutcomeRecord:
    q0: float
    p0: float
    correction: object
    diagnostics: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# protocol engines
# ---------------------------------------------------------------------------

def cvqt(state, cfg, rng):
    """Teleport a single-mode state; returns (output state, OutcomeRecord)."""
    return teleport_gate(None, state, cfg, rng)


def teleport_gate(gate, state, cfg, rng):
    """Teleport a gate: run the protocol with ``gate`` applied to the output
    arm of the resource and the correspondingly conjugated correction.

    ``gate=None`` (or the identity) reduces to plain state teleportation.
    Gates above hierarchy level 3 are rejected; level-3 gates need the fock
    backend since their output is non-Gaussian.
    """
    if gate is not None:
        level = g.classify(gate)  # raises NonTerminatingAdjointError for Kerr
        if not level.determined or level.level > 3:
            raise GateNotTeleportableError(
                f"hierarchy level {level} exceeds 3; build it from group "
                "commutators of lower gates")
        if level.level > 2 and cfg.backend != "fock":
            raise GateNotTeleportableError(
                "non-Gaussian gates require the fock backend")
    if cfg.backend == "gaussian":
        return _teleport_gaussian(gate, state, cfg, rng)
    return _teleport_fock(gate, state, cfg, rng)


def _correction_gate(gate, q0, p0):
    if gate is None:
        return g.displacement_gate(q0, p0)
    return g.conjugate_pauli(gate, q0, p0)


def _teleport_gaussian(gate, state, cfg, rng):
    if state.nmodes != 1:
        raise ValueError("teleport one mode at a time")
    full = gs.tensor(state, gs.epr_pair(cfg.r_value))
    if gate is not None:
        full = gs.apply_gate(gate, full, targets=(2,))
    full = gs.apply_gate(g.beamsplitter_gate(), full, targets=(0, 1))
    var_q = full.cov[0, 0]
    u, full = gs.homodyne_measure(full, 0, "q", rng)
    var_p = full.cov[1, 1]
    v, full = gs.homodyne_measure(full, 0, "p", rng)
    q0, p0 = math.sqrt(2) * u, math.sqrt(2) * v
    correction = _correction_gate(gate, q0, p0)
    out = gs.apply_gate(correction, full)
    sigma_nu = sigma_from(0.0, cfg.nu) - 1.0  # detector part (1 - nu^2)/nu^2
    if sigma_nu > 0:
        out = gs.add_gaussian_noise(out, sigma_nu)
    record = OutcomeRecord(
        q0, p0, g.clifford_decompose(correction),
        {"measured_variances": (var_q, var_p)})
    return out, record


def _apply_padded(vec, matrix_dim_gate, work):
    padded = np.zeros(work, dtype=complex)
    padded[: len(vec)] = vec
    return matrix_dim_gate @ padded


def _teleport_fock(gate, state, cfg, rng):
    if state.nmodes != 1:
        raise ValueError("teleport one mode at a time")
    m = cfg.cutoff
    if state.cutoff != m:
        state = state.truncated(m)
    res_dim = cfg.resource_dim
    work = cfg.work_dim
    # resource with enlarged output axis
    diag = math.sqrt(1 - cfg.eta_value ** 2) * cfg.eta_value ** np.arange(m)
    resource = np.zeros((m, res_dim), dtype=complex)
    resource[np.arange(m), np.arange(m)] = diag
    tensor = np.einsum("a,bc->abc", state.amps, resource)
    if gate is not None:
        u_gate = fk.gate_matrix(gate, res_dim)
        tensor = np.einsum("ij,abj->abi", u_gate, tensor)
    bs = fk.gate_matrix(g.beamsplitter_gate(), m, build_dim=m)
    tensor = (bs @ tensor.reshape(m * m, res_dim)).reshape(m, m, res_dim)
    # homodyne q on the first output, p on the second
    vals_q, vecs_q = fk.quad_eigensystem(m, "q")
    vals_p, vecs_p = fk.quad_eigensystem(m, "p")
    amp = np.einsum("ia,abc->ibc", vecs_q.conj().T, tensor)
    probs = np.clip(np.einsum("ibc,ibc->i", amp, amp.conj()).real, 0.0, None)
    total_q = probs.sum()
    if total_q < 1e-150:
        raise fk.TruncationError("measurement underflow")
    i = rng.choice(m, p=probs / total_q)
    stage = amp[i] / math.sqrt(probs[i])
    amp = vecs_p.conj().T @ stage
    probs = np.clip(np.einsum("ic,ic->i", amp, amp.conj()).real, 0.0, None)
    j = rng.choice(m, p=probs / probs.sum())
    vec = amp[j] / math.sqrt(probs[j])
    q0, p0 = math.sqrt(2) * vals_q[i], math.sqrt(2) * vals_p[j]
    correction = _correction_gate(gate, q0, p0)
    if gate is None:
        u_corr = fk._displacement_matrix(q0, p0, work)
    else:
        u_corr = fk.gate_matrix(correction, work, build_dim=work)
    vec = _apply_padded(vec, u_corr, work)
    sigma_nu = sigma_from(0.0, cfg.nu) - 1.0
    if sigma_nu > 0:
        dq, dp = rng.normal(0.0, math.sqrt(sigma_nu), size=2)
        vec = fk._displacement_matrix(dq, dp, work) @ vec
    out_full = fk.FockState(vec)
    out = out_full.truncated(m)
    record = OutcomeRecord(
        q0, p0, g.clifford_decompose(correction),
        {"truncation_deficit": float(out.deficit()),
         "resource_deficit": float(1.0 - np.sum(diag ** 2))})
    return out, record


# ---------------------------------------------------------------------------
# transfer superoperator and the noisy-gate model
# ---------------------------------------------------------------------------

def transfer_superop(state, sigma, rng=None, trials=2000):
    """Random-displacement channel with variance ``sigma`` per quadrature.

    Gaussian states transform exactly (cov += sigma I).  Fock states are
    averaged by Monte Carlo: each sample displaces by (dq, dp) drawn from the
    isotropic normal, and the ensemble of displaced vectors stands in for the
    output density matrix.
    """
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    if isinstance(state, gs.GaussianState):
        return gs.add_gaussian_noise(state, sigma)
    if sigma == 0:
        return fk.FockEnsemble([state])
    if rng is None:
        raise ValueError("fock backend needs an rng")
    std = math.sqrt(sigma)
    members = []
    for _ in range(trials):
        dq, dp = rng.normal(0.0, std, size=2)
        members.append(fk.FockState(
            fk._displacement_matrix(dq, dp, state.cutoff) @ state.amps))
    return fk.FockEnsemble(members)


@dataclass
class LinearErrorModel:
    """Bounded linear (displacement) errors: isotropic normal truncated to the
    disk dq^2 + dp^2 < max_s^2, applied with some probability per gate."""

    max_s: float
    std: float = None
    probability: float = 1.0

    def __post_init__(self):
        if self.std is None:
            self.std = self.max_s / 2.0

    def sample(self, rng):
        if rng.random() > self.probability:
            return 0.0, 0.0
        while True:
            dq, dp = rng.normal(0.0, self.std, size=2)
            if dq * dq + dp * dp < self.max_s ** 2:
                return float(dq), float(dp)


@dataclass
class NoisyGateChannel:
    """Executable model of a teleported gate: optional small displacement
    error, the gate itself, then the transfer channel with variance sigma.

    Running this channel reproduces the teleported gate's statistics without
    simulating the measurement-based protocol (the fast path for sweeps).
    """

    gate: object
    sigma: float
    error_model: LinearErrorModel = None

    def apply(self, state, rng=None):
        if isinstance(state, gs.GaussianState):
            out = state
            if self.error_model is not None:
                dq, dp = self.error_model.sample(rng)
                out = gs.apply_gate(g.displacement_gate(dq, dp), out)
            if self.gate is not None:
                out = gs.apply_gate(self.gate, out)
            return gs.add_gaussian_noise(out, self.sigma)
        # fock: one stochastic realisation per call; callers build ensembles
        vec = state.amps
        dim = state.cutoff
        if self.error_model is not None:
            dq, dp = self.error_model.sample(rng)
            vec = fk._displacement_matrix(dq, dp, dim) @ vec
        if self.gate is not None:
            vec = fk.gate_matrix(self.gate, dim, build_dim=dim) @ vec
        if self.sigma > 0:
            dq, dp = rng.normal(0.0, math.sqrt(self.sigma), size=2)
            vec = fk._displacement_matrix(dq, dp, dim) @ vec
        return fk.FockState(vec)


def compose_noisy_gate(gate, sigma, error_model=None):
    """Channel description for a noisy teleported gate (see NoisyGateChannel)."""
    if gate is not None:
        level = g.classify(gate)
        if not level.determined or level.level > 3:
            raise GateNotTeleportableError("gate must sit at level <= 3")
    return NoisyGateChannel(gate, sigma, error_model)


# ---------------------------------------------------------------------------
# group-commutator construction
# ---------------------------------------------------------------------------

def group_commutator(a_poly, b_poly, t):
    """The four-factor sequence whose product is e^{iAt} e^{iBt} e^{-iAt} e^{-iBt}.

    Listed in circuit order (rightmost exponential acts first).  Up to O(t^3)
    this equals the target returned by ``group_commutator_target``, which is
    how a higher-level interaction such as the Kerr term is simulated from
    cubic and quadratic gates.
    """
    if not (a_poly.is_hermitian() and b_poly.is_hermitian()):
        raise ValueError("generators must be Hermitian")
    return g.GateSequence((
        g.Exponential(b_poly, -t),
        g.Exponential(a_poly, -t),
        g.Exponential(b_poly, t),
        g.Exponential(a_poly, t),
    ))


def group_commutator_target(a_poly, b_poly, t):
    """exp(-t^2 [A, B]) as a gate: Exponential(C, -t^2) with C = [A, B]/i."""
    c_poly = commutator(a_poly, b_poly) * (-1j)
    return g.Exponential(c_poly, -t * t)
