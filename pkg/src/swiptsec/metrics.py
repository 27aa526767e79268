"""QoS quantities of a beamformer / artificial-noise allocation.

Everything accepts either an :class:`Allocation` (vector ``w``) or a
:class:`CovarianceAllocation` (matrix ``W``, possibly of rank > 1, as produced
by a non-tight relaxation); for a rank-one ``W = w w^H`` the two agree.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import GramSet
from .sdp.program import DomainError, hermitian_residual

IMAG_TOL = 1e-10


@dataclass(frozen=True)
class Allocation:
    w: np.ndarray
    V: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.w, dtype=complex).ravel()
        V = np.asarray(self.V, dtype=complex)
        if V.shape != (w.size, w.size):
            raise DomainError("V must be N_t x N_t")
        if not np.all(np.isfinite(w)) or not np.all(np.isfinite(V)):
            raise DomainError("allocation entries must be finite")
        if hermitian_residual(V) > 1e-9 * max(1.0, float(np.max(np.abs(V)))):
            raise DomainError("V must be Hermitian")
        V = 0.5 * (V + V.conj().T)
        scale = max(1.0, float(np.trace(V).real))
        if np.linalg.eigvalsh(V)[0] < -1e-9 * scale:
            raise DomainError("V must be positive semidefinite")
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "V", V)

    @property
    def W(self) -> np.ndarray:
        return np.outer(self.w, self.w.conj())

    def scaled(self, c: float) -> "Allocation":
        return Allocation(np.sqrt(c) * self.w, c * self.V)


@dataclass(frozen=True)
class CovarianceAllocation:
    W: np.ndarray
    V: np.ndarray


@dataclass(frozen=True)
class QosTargets:
    gamma_req: float
    gamma_tol: tuple
    p_max: float
    sigma_s2: float

    def __post_init__(self):
        object.__setattr__(self, "gamma_tol", tuple(float(g) for g in np.atleast_1d(self.gamma_tol)))
        if not self.gamma_req > 0:
            raise DomainError("gamma_req must be positive")
        if any(not g > 0 for g in self.gamma_tol):
            raise DomainError("gamma_tol entries must be positive")
        if self.gamma_tol and self.gamma_req <= max(self.gamma_tol):
            raise DomainError("gamma_req must exceed every gamma_tol")
        if not self.p_max > 0 or not self.sigma_s2 > 0:
            raise DomainError("p_max and sigma_s2 must be positive")


def _quad(M: np.ndarray, w: np.ndarray) -> float:
    val = np.vdot(w, M @ w)
    if abs(val.imag) > IMAG_TOL * max(1.0, abs(val.real)):
        raise DomainError("quadratic form has a non-negligible imaginary part; matrix not Hermitian?")
    return float(val.real)


def _trace_prod(A: np.ndarray, B: np.ndarray) -> float:
    val = np.sum(A * B.T)
    if abs(val.imag) > IMAG_TOL * max(1.0, abs(val.real)):
        raise DomainError("trace product has a non-negligible imaginary part")
    return float(val.real)


def _beam_power(alloc, M: np.ndarray) -> float:
    if isinstance(alloc, Allocation):
        return _quad(M, alloc.w)
    return _trace_prod(M, alloc.W)


def sinr_desired(alloc, H: np.ndarray, sigma_s2: float) -> float:
    if not sigma_s2 > 0:
        raise DomainError("noise power must be positive")
    return _beam_power(alloc, H) / (_trace_prod(H, alloc.V) + sigma_s2)


def sinr_idle(alloc, G_k: np.ndarray, sigma_s2: float) -> float:
    return sinr_desired(alloc, G_k, sigma_s2)


def secrecy_capacity(alloc, grams: GramSet, sigma_s2: float) -> float:
    c = np.log2(1.0 + sinr_desired(alloc, grams.H, sigma_s2))
    leak = max((np.log2(1.0 + sinr_idle(alloc, G, sigma_s2)) for G in grams.G), default=0.0)
    return float(max(c - leak, 0.0))


def harvested_power(alloc, grams: GramSet, eps) -> float:
    eps = np.atleast_1d(np.asarray(eps, dtype=float))
    if eps.size != len(grams.G):
        raise DomainError("need one conversion efficiency per idle receiver")
    return float(sum(e * (_beam_power(alloc, G) + _trace_prod(G, alloc.V)) for e, G in zip(eps, grams.G)))


def transmit_power(alloc) -> float:
    if isinstance(alloc, Allocation):
        beam = float(np.vdot(alloc.w, alloc.w).real)
    else:
        beam = float(np.trace(alloc.W).real)
    return beam + float(np.trace(alloc.V).real)


def harvesting_efficiency(alloc, grams: GramSet, eps) -> float:
    tp = transmit_power(alloc)
    if tp <= 0:
        raise DomainError("harvesting efficiency undefined at zero transmit power")
    return harvested_power(alloc, grams, eps) / tp


def secrecy_floor_value(gamma_req: float, gamma_tol) -> float:
    """``log2(1 + gamma_req) - log2(1 + max gamma_tol)`` without the ordering check of :class:`QosTargets`."""
    worst = max((float(g) for g in np.atleast_1d(gamma_tol)), default=0.0)
    return float(np.log2(1.0 + gamma_req) - np.log2(1.0 + worst))


def secrecy_floor(qos: QosTargets) -> float:
    return secrecy_floor_value(qos.gamma_req, qos.gamma_tol)
