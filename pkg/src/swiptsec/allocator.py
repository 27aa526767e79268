"""Power allocation via SDP relaxation of the Charnes-Cooper transformed problems.

Variables of every transformed program are ``(Wb, Vb, xi)`` with
``W = Wb / xi``, ``V = Vb / xi`` and ``xi = 1 / TP``. The programs handed to the
solver use a normalized power unit ``P_u = gamma_req * sigma^2 / ||h||^2``
(``xi' = xi * P_u``, ``tau' = tau / P_u``) so all variables are O(1); every
value returned from this module is in physical units again, and the dual
certificate is expressed for the Lagrangian

    tau - Tr(Y Wb) - Tr(Z Vb) + sum_j kappa_j (lambda_j (F_j - F_j*) - tau)
    + sum_k theta_k (C2_k row) - nu xi + (alpha + mu)(Tr Wb + Tr Vb)
    - alpha xi P_max - mu + beta (C1 row, >= form negated).
"""
from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .channel import GramSet
from .metrics import (
    Allocation,
    CovarianceAllocation,
    QosTargets,
    harvested_power,
    secrecy_capacity,
    sinr_desired,
    sinr_idle,
    transmit_power,
)
from .sdp import (
    Block,
    BlockKind,
    ConeProgram,
    ConeSolution,
    Constraint,
    DomainError,
    SolverOptions,
    SolveStatus,
    solve,
)

log = logging.getLogger(__name__)

RANK_ONE_TOL = 1e-6
DEGENERATE_EIG = 1e-12
PROP2_TOL = 1e-7
# tighter than the solver default: interior-point iterates carry residual
# eigenvalues of order mu in every direction, and both the rank-one test and
# the power lost when truncating to the top eigenpair need them below ~1e-7
DEFAULT_OPTIONS = SolverOptions(gap_tol=1e-10, feas_tol=1e-10)
# some instances stall just short of those targets; their best iterate is
# accepted when it is within this factor
STALL_FACTOR = 10.0


class Scheme(str, enum.Enum):
    RELAXED_P3 = "RelaxedP3"
    SUBOPTIMAL1 = "Suboptimal1"
    SUBOPTIMAL2 = "Suboptimal2"
    BASELINE1 = "Baseline1"
    BASELINE2 = "Baseline2"


class AllocationError(RuntimeError):
    """A transformed program could not be solved to optimality."""

    def __init__(self, message: str, status: SolveStatus | None = None, certificate: dict | None = None):
        super().__init__(message)
        self.status = status
        self.certificate = certificate or {}


class InfeasibleInstance(AllocationError):
    pass


class RecoveryError(AllocationError):
    pass


class ProblemKind(str, enum.Enum):
    P1 = "P1"
    P2 = "P2"
    P3 = "P3"


@dataclass(frozen=True)
class UtopiaValues:
    F1_star: float
    F2_star: float

    def __post_init__(self):
        if not self.F2_star > 0:
            raise DomainError("F2* must be positive")
        if self.F1_star > 0:
            raise DomainError("F1* must be nonpositive")


@dataclass(frozen=True)
class DualCertificate:
    beta: float
    theta: np.ndarray
    alpha: float
    mu: float
    nu: float
    kappa: tuple
    Y: np.ndarray | None
    Z: np.ndarray | None


@dataclass(frozen=True)
class TransformedSolution:
    W_bar: np.ndarray
    V_bar: np.ndarray
    xi: float
    tau: float | None
    objective_value: float
    dual_certificate: DualCertificate
    cone_solution: ConeSolution = field(repr=False)

    @property
    def trace_sum(self) -> float:
        return float(np.trace(self.W_bar).real + np.trace(self.V_bar).real)


@dataclass(frozen=True)
class ReportMetrics:
    tp: float
    hp: float
    eta: float
    csec: float
    sinr: float
    sinr_idle: tuple


@dataclass(frozen=True)
class SolveReport:
    scheme: Scheme
    lam: tuple
    transformed: TransformedSolution
    recovered: Allocation | None
    rank_one: bool
    eigen_ratio: float
    prop2_holds: bool
    metrics: ReportMetrics
    tau: float
    achieved_tau: float
    branch: Scheme | None = None


@dataclass(frozen=True)
class ParetoPoint:
    lam: tuple
    scheme: Scheme
    report: SolveReport | None
    tp: float
    eta: float

    @property
    def feasible(self) -> bool:
        return self.report is not None


def validate_weights(lam) -> tuple:
    l1, l2 = (float(v) for v in lam)
    if l1 < 0 or l2 < 0 or not math.isfinite(l1 + l2) or abs(l1 + l2 - 1.0) > 1e-9:
        raise DomainError(f"weights {lam} are not on the probability simplex")
    s = l1 + l2
    return (l1 / s, l2 / s)


def weight_grid(count: int) -> list:
    """``count`` uniformly spaced weights from (1, 0) to (0, 1)."""
    if count < 1:
        raise DomainError("need at least one weight")
    if count == 1:
        return [(0.5, 0.5)]
    return [(1.0 - i / (count - 1), i / (count - 1)) for i in range(count)]


# --------------------------------------------------------------------------
# program construction


@dataclass(frozen=True)
class _Formulation:
    kind: ProblemKind
    lam: tuple = (0.0, 1.0)
    utopia: UtopiaValues | None = None
    beam: str = "full"  # "full" | "mrt"
    noise: str = "full"  # "full" | "nullspace"
    harvest_uses_beam: bool = True


class _Builder:
    W, V, XI, T = 0, 1, 2, 3

    def __init__(self, grams: GramSet, qos: QosTargets, eps, form: _Formulation):
        self.grams = grams
        self.qos = qos
        self.eps = np.atleast_1d(np.asarray(eps, dtype=float))
        self.form = form
        self.row_scale: dict = {}
        n = grams.num_antennas
        self.n = n
        h_norm2 = float(np.trace(grams.H).real)
        if h_norm2 <= 0:
            raise DomainError("desired channel is zero")
        self.p_unit = qos.gamma_req * qos.sigma_s2 / h_norm2
        if len(qos.gamma_tol) != grams.num_idle or self.eps.size != grams.num_idle:
            raise DomainError("gamma_tol / eps must have one entry per idle receiver")
        w, v = np.linalg.eigh(grams.H)
        self.h_dir = v[:, -1]
        self.null_proj = np.eye(n) - np.outer(self.h_dir, self.h_dir.conj())
        l1, l2 = form.lam
        self.epigraph = form.kind is ProblemKind.P3 and l2 > 0
        if form.kind is ProblemKind.P3:
            u = form.utopia
            if l2 > 0:
                self.tau_shift = l2 * u.F2_star / self.p_unit
            else:
                worst = -sum(e * float(np.linalg.eigvalsh(G)[-1]) for e, G in zip(self.eps, grams.G))
                self.tau_shift = -l1 * (worst - u.F1_star) / self.p_unit

    # coefficient helpers; matrices are Hermitian in the original space
    def cw(self, M):
        if self.form.beam == "mrt":
            return np.array([float(np.vdot(self.h_dir, M @ self.h_dir).real)])
        return M

    def cv(self, M):
        if self.form.noise == "nullspace":
            return np.array([float(np.sum(M * self.null_proj.T).real) / (self.n - 1)])
        return M

    def cxi(self, c):
        if self.epigraph:
            return np.array([[c, 0.0], [0.0, 0.0]])
        return np.array([c])

    def row(self, W=None, V=None, xi=None, t=None):
        coefs = {}
        if W is not None:
            coefs[self.W] = self.cw(W)
        if V is not None:
            coefs[self.V] = self.cv(V)
        if xi is not None:
            coefs[self.XI] = self.cxi(xi)
        if t is not None:
            if self.epigraph:
                coefs[self.XI] = coefs.get(self.XI, np.zeros((2, 2))) + np.array([[0.0, 0.0], [0.0, t]])
            else:
                coefs[self.T] = np.array([t])
        return coefs

    def scaled_row(self, name, **kw):
        c = self.row_scale[name]
        return {b: c * a for b, a in self.row(**kw).items()}

    def blocks(self):
        n = self.n
        blocks = [
            Block(BlockKind.NONNEG, 1) if self.form.beam == "mrt" else Block(BlockKind.HERMITIAN, n),
            Block(BlockKind.NONNEG, 1) if self.form.noise == "nullspace" else Block(BlockKind.HERMITIAN, n),
            Block(BlockKind.SYMMETRIC, 2) if self.epigraph else Block(BlockKind.NONNEG, 1),
        ]
        if self.form.kind is ProblemKind.P3 and not self.epigraph:
            blocks.append(Block(BlockKind.NONNEG, 1))
        return blocks

    def harvest_matrix(self):
        return sum((e * G for e, G in zip(self.eps, self.grams.G)), np.zeros((self.n, self.n), complex))

    def build(self) -> ConeProgram:
        g, q, pu = self.grams, self.qos, self.p_unit
        I = np.eye(self.n)
        # SINR rows are divided by the channel gain so the solver's absolute
        # residual is a relative one; multipliers are scaled back in unpack
        self.row_scale = {"C1": 1.0 / float(np.trace(g.H).real)}
        cons = [
            Constraint(self.scaled_row("C1", W=g.H, V=-q.gamma_req * g.H, xi=-q.gamma_req * q.sigma_s2 / pu), ">=", 0.0, "C1"),
        ]
        for k, (G, gt) in enumerate(zip(g.G, q.gamma_tol)):
            name = f"C2_{k}"
            self.row_scale[name] = 1.0 / max(float(np.trace(G).real), np.finfo(float).tiny)
            cons.append(Constraint(self.scaled_row(name, W=G, V=-gt * G, xi=-gt * q.sigma_s2 / pu), "<=", 0.0, name))
        cons.append(Constraint(self.row(W=I, V=I, xi=-q.p_max / pu), "<=", 0.0, "C3"))
        cons.append(Constraint(self.row(W=I, V=I), "<=", 1.0, "C6"))

        kind = self.form.kind
        harvest = self.harvest_matrix()
        if kind is ProblemKind.P1:
            if g.num_idle == 0:
                raise DomainError("energy-harvesting objective is degenerate without idle receivers")
            objective = self.row(W=-harvest, V=-harvest)
        elif kind is ProblemKind.P2:
            objective = self.row(xi=-1.0)
        else:
            l1, l2 = self.form.lam
            u = self.form.utopia
            if l1 > 0 and g.num_idle > 0:
                c = l1 / pu
                W = -c * harvest if self.form.harvest_uses_beam else None
                rhs = l1 * u.F1_star / pu - self.tau_shift
                cons.append(Constraint(self.row(W=W, V=-c * harvest, t=-1.0), "<=", rhs, "C8_1"))
            elif l1 > 0:
                # no idle receivers: the first objective is identically zero
                cons.append(Constraint(self.row(t=-1.0), "<=", l1 * u.F1_star / pu - self.tau_shift, "C8_1"))
            if self.epigraph:
                link = {self.XI: np.array([[0.0, 0.5], [0.5, 0.0]])}
                cons.append(Constraint(link, "=", math.sqrt(l2), "C8_2"))
            objective = self.row(t=1.0)
        return ConeProgram(self.blocks(), objective, cons)

    # map a solver result back to physical quantities -----------------------
    def expand_W(self, X):
        if self.form.beam == "mrt":
            return float(X[0]) * np.outer(self.h_dir, self.h_dir.conj())
        return X

    def expand_V(self, X):
        if self.form.noise == "nullspace":
            return float(X[0]) * self.null_proj / (self.n - 1)
        return X

    def unpack(self, sol: ConeSolution) -> TransformedSolution:
        pu = self.p_unit
        X = sol.primal
        if self.epigraph:
            xi_s = float(X[self.XI][0, 0])
            t = float(X[self.XI][1, 1])
        else:
            xi_s = float(X[self.XI][0])
            t = float(X[self.T][0]) if self.form.kind is ProblemKind.P3 else None
        xi = xi_s / pu
        kind = self.form.kind
        if kind is ProblemKind.P3:
            tau = pu * (t - self.tau_shift)
            objective = tau
            obj_scale = pu
        elif kind is ProblemKind.P2:
            tau = None
            objective = 1.0 / xi
            obj_scale = 1.0
        else:
            tau = None
            objective = sol.primal_objective
            obj_scale = 1.0
        names = sol.names

        def mult(name, row_scale=1.0):
            row_scale *= self.row_scale.get(name, 1.0)
            return float(sol.multiplier(name)) * obj_scale * row_scale if name in names else 0.0

        theta = np.array([mult(f"C2_{k}") for k in range(self.grams.num_idle)])
        kappa1 = mult("C8_1", 1.0 / pu)
        if kind is ProblemKind.P3:
            kappa = (kappa1, 1.0 - kappa1) if self.form.lam[1] > 0 else (kappa1, 0.0)
        else:
            kappa = (0.0, 0.0)
        S = sol.dual_slacks
        nu = float("nan") if self.epigraph else float(S[self.XI][0]) * obj_scale * pu
        cert = DualCertificate(
            beta=mult("C1"),
            theta=theta,
            alpha=mult("C3"),
            mu=mult("C6"),
            nu=nu,
            kappa=kappa,
            Y=obj_scale * S[self.W] if self.form.beam == "full" else None,
            Z=obj_scale * S[self.V] if self.form.noise == "full" else None,
        )
        return TransformedSolution(
            W_bar=self.expand_W(X[self.W]),
            V_bar=self.expand_V(X[self.V]),
            xi=xi,
            tau=tau,
            objective_value=float(objective),
            dual_certificate=cert,
            cone_solution=sol,
        )


def _certificate(sol: ConeSolution) -> dict:
    return {n: float(m) for n, m in zip(sol.names, sol.multipliers)}


def _close_enough(sol: ConeSolution, opts: SolverOptions) -> bool:
    """A stalled solve whose best iterate is within STALL_FACTOR of the targets."""
    return (
        sol.status in (SolveStatus.MAX_ITERATIONS, SolveStatus.NUMERICAL_FAILURE)
        and max(sol.primal_infeas, sol.dual_infeas) <= STALL_FACTOR * opts.feas_tol
        and sol.duality_gap <= STALL_FACTOR * opts.gap_tol
    )


def _run(grams, qos, eps, form, options) -> tuple:
    builder = _Builder(grams, qos, eps, form)
    opts = options or DEFAULT_OPTIONS
    sol = solve(builder.build(), opts)
    if sol.status is SolveStatus.INFEASIBLE:
        raise InfeasibleInstance("transformed program is infeasible", sol.status, _certificate(sol))
    # W = V = 0, xi = 0 is always feasible for the transformed constraints, so an
    # unreachable SINR target shows up as xi -> 0 rather than as infeasibility.
    # Any point with xi > 0 has xi >= Tr(Wb + Vb) / P_max, i.e. xi * P_max ~ 1.
    xi_s = sol.primal[builder.XI]
    xi = float(xi_s[0, 0] if builder.epigraph else xi_s[0]) / builder.p_unit
    if not xi * qos.p_max >= 0.5:
        raise InfeasibleInstance("SINR target unreachable within the power budget", sol.status, _certificate(sol))
    if sol.status is not SolveStatus.OPTIMAL and not _close_enough(sol, opts):
        if builder.epigraph:
            # with no feasible point the epigraph optimum escapes to infinity and
            # the iterates stall without a certificate; the minimum-power program
            # over the same feasible set settles the question quickly
            _run(grams, qos, eps, replace(form, kind=ProblemKind.P2, lam=(0.0, 1.0), utopia=None), options)
        raise AllocationError(f"solver stopped with status {sol.status.value}", sol.status, _certificate(sol))
    return builder, builder.unpack(sol)


def build_transformed(grams: GramSet, qos: QosTargets, eps, kind, lam=None, utopia=None) -> ConeProgram:
    """Cone program for the relaxed transformed problem ``kind`` (rank constraint dropped)."""
    kind = ProblemKind(kind)
    if kind is ProblemKind.P3:
        if utopia is None:
            raise DomainError("P3 needs utopia values")
        form = _Formulation(kind, validate_weights(lam), utopia)
    else:
        form = _Formulation(kind)
    return _Builder(grams, qos, eps, form).build()


def solve_single_objective(grams, qos, eps, kind, options: SolverOptions | None = None):
    """Relaxed P1 or P2. Returns ``(value, TransformedSolution)``.

    P1's value is the (negative) relaxed harvesting objective; P2's is
    ``1 / xi*``, the minimum transmit power. Both are bounds in the sense of
    the relaxation, which is how they are used as utopia values.
    """
    kind = ProblemKind(kind)
    if kind is ProblemKind.P3:
        raise DomainError("use solve_relaxed_p3 for the multi-objective problem")
    _, ts = _run(grams, qos, eps, _Formulation(kind), options)
    return ts.objective_value, ts


def compute_utopia(grams, qos, eps, options: SolverOptions | None = None) -> UtopiaValues:
    f2, _ = solve_single_objective(grams, qos, eps, ProblemKind.P2, options)
    if grams.num_idle == 0:
        f1 = 0.0
    else:
        f1, _ = solve_single_objective(grams, qos, eps, ProblemKind.P1, options)
    return UtopiaValues(F1_star=min(f1, 0.0), F2_star=f2)


# --------------------------------------------------------------------------
# rank-one certification and recovery


def check_rank_one(W_bar, tol: float = RANK_ONE_TOL) -> tuple:
    """``(rank_one, lambda_2 / lambda_1)`` from descending eigenvalues.

    ``rank_one`` is ``ratio <= tol``. A (numerically) zero matrix reports ratio
    0 but is never called rank-one.
    """
    ev = np.linalg.eigvalsh(np.asarray(W_bar))[::-1]
    if ev[0] <= DEGENERATE_EIG:
        return False, 0.0
    if ev.size == 1:
        return True, 0.0
    ratio = float(min(max(ev[1] / ev[0], 0.0), 1.0))
    return ratio <= tol, ratio


def recover(solution: TransformedSolution, feas_tol: float = 1e-8) -> Allocation:
    """Undo the change of variables: ``W = Wb / xi``, ``V = Vb / xi``, ``w`` from the top eigenpair."""
    if not solution.xi > feas_tol:
        raise RecoveryError("xi is zero; the desired-receiver SINR constraint cannot hold")
    W = solution.W_bar / solution.xi
    V = solution.V_bar / solution.xi
    ev, vecs = np.linalg.eigh(W)
    if ev[-1] <= 0:
        raise RecoveryError("beamforming matrix is zero")
    w = np.sqrt(ev[-1]) * vecs[:, -1]
    k = int(np.argmax(np.abs(w)))
    w = w * np.exp(-1j * np.angle(w[k]))
    ev_v, vec_v = np.linalg.eigh(0.5 * (V + V.conj().T))
    V = (vec_v * np.clip(ev_v, 0.0, None)) @ vec_v.conj().T
    return Allocation(w, 0.5 * (V + V.conj().T))


# --------------------------------------------------------------------------
# schemes


def _metrics(alloc, grams, qos, eps) -> ReportMetrics:
    s2 = qos.sigma_s2
    tp = transmit_power(alloc)
    hp = harvested_power(alloc, grams, eps) if grams.num_idle else 0.0
    return ReportMetrics(
        tp=tp,
        hp=hp,
        eta=hp / tp,
        csec=secrecy_capacity(alloc, grams, s2),
        sinr=sinr_desired(alloc, grams.H, s2),
        sinr_idle=tuple(sinr_idle(alloc, G, s2) for G in grams.G),
    )


def scalarized(lam, utopia: UtopiaValues, eta: float, tp: float) -> float:
    """Tchebycheff objective ``max_j lambda_j (F_j - F_j*)`` with ``F_1 = -eta``, ``F_2 = TP``."""
    l1, l2 = lam
    return max(l1 * (-eta - utopia.F1_star), l2 * (tp - utopia.F2_star))


def _report(scheme, builder, ts, grams, qos, eps, lam, utopia) -> SolveReport:
    rank_one, ratio = check_rank_one(ts.W_bar)
    cert = ts.dual_certificate
    has_row = "C8_1" in ts.cone_solution.names
    kappa1 = cert.kappa[0] if (has_row and builder.form.harvest_uses_beam and builder.form.beam == "full") else 0.0
    prop2 = builder.form.beam == "mrt" or bool(np.all(cert.theta >= kappa1 - PROP2_TOL))
    recovered = recover(ts) if rank_one else None
    if recovered is not None:
        m = _metrics(recovered, grams, qos, eps)
    else:
        m = _metrics(CovarianceAllocation(ts.W_bar / ts.xi, ts.V_bar / ts.xi), grams, qos, eps)
    return SolveReport(
        scheme=scheme,
        lam=lam,
        transformed=ts,
        recovered=recovered,
        rank_one=rank_one,
        eigen_ratio=ratio,
        prop2_holds=prop2,
        metrics=m,
        tau=ts.tau,
        achieved_tau=scalarized(lam, utopia, m.eta, m.tp),
    )


def _p3(scheme, grams, qos, eps, lam, utopia, options, **form_kw) -> SolveReport:
    lam = validate_weights(lam)
    form = _Formulation(ProblemKind.P3, lam, utopia, **form_kw)
    builder, ts = _run(grams, qos, eps, form, options)
    return _report(scheme, builder, ts, grams, qos, eps, lam, utopia)


def solve_relaxed_p3(grams, qos, eps, lam, utopia, options: SolverOptions | None = None) -> SolveReport:
    return _p3(Scheme.RELAXED_P3, grams, qos, eps, lam, utopia, options)


def suboptimal1(grams, qos, eps, lam, utopia, options: SolverOptions | None = None) -> SolveReport:
    """Relaxed P3 with the beamformer's harvesting contribution dropped from the first objective row."""
    return _p3(Scheme.SUBOPTIMAL1, grams, qos, eps, lam, utopia, options, harvest_uses_beam=False)


def _hybrid(scheme, first, second_fn) -> SolveReport:
    if first is not None and first.rank_one:
        return replace(first, scheme=scheme, branch=first.scheme)
    second = second_fn()
    return replace(second, scheme=scheme, branch=second.scheme)


def suboptimal2(
    grams, qos, eps, lam, utopia, options: SolverOptions | None = None, relaxed=None, sub1=None
) -> SolveReport:
    """Relaxed P3 if its beamformer is rank-one, otherwise suboptimal scheme 1.

    Precomputed branch reports may be passed in to avoid re-solving.
    """
    if relaxed is None:
        try:
            relaxed = solve_relaxed_p3(grams, qos, eps, lam, utopia, options)
        except AllocationError as exc:
            log.debug("relaxed branch failed: %s", exc)
            relaxed = None

    def fallback():
        return sub1 if sub1 is not None else suboptimal1(grams, qos, eps, lam, utopia, options)

    return _hybrid(Scheme.SUBOPTIMAL2, relaxed, fallback)


def baseline1(grams, qos, eps, lam, utopia, options: SolverOptions | None = None) -> SolveReport:
    """Artificial noise confined to the null space of ``h``; only its power is optimized."""
    if grams.num_antennas < 2:
        raise DomainError("null-space noise needs at least two antennas")
    first = _p3(Scheme.BASELINE1, grams, qos, eps, lam, utopia, options, noise="nullspace")
    return _hybrid(
        Scheme.BASELINE1,
        first,
        lambda: _p3(Scheme.BASELINE1, grams, qos, eps, lam, utopia, options, noise="nullspace", harvest_uses_beam=False),
    )


def baseline2(grams, qos, eps, lam, utopia, options: SolverOptions | None = None) -> SolveReport:
    """Beamformer fixed to maximum-ratio transmission; its power and the noise covariance are optimized."""
    return _p3(Scheme.BASELINE2, grams, qos, eps, lam, utopia, options, beam="mrt")


SCHEME_ORDER = (Scheme.RELAXED_P3, Scheme.SUBOPTIMAL1, Scheme.SUBOPTIMAL2, Scheme.BASELINE1, Scheme.BASELINE2)


_SCHEME_FN = {}


def solve_schemes(
    grams, qos, eps, lam, utopia, schemes, options: SolverOptions | None = None, infeasible: set | None = None
) -> dict:
    """Solve every requested scheme at one weight; infeasible schemes map to ``None``.

    Suboptimal scheme 2 reuses the relaxed and scheme-1 solves. Feasibility
    of a scheme does not depend on the weight, so a caller sweeping weights on
    one draw can pass the same ``infeasible`` set to every call: schemes found
    infeasible are added to it and skipped from then on.
    """
    schemes = {Scheme(s) for s in schemes}
    known = infeasible if infeasible is not None else set()
    out: dict = {}

    def attempt(fn):
        scheme = _SCHEME_FN[fn]
        if scheme in known:
            return None
        try:
            return fn(grams, qos, eps, lam, utopia, options)
        except InfeasibleInstance as exc:
            known.add(scheme)
            log.debug("%s infeasible: %s", scheme.value, exc)
        except AllocationError as exc:
            log.debug("%s at lambda=%s failed: %s", scheme.value, lam, exc)
        return None

    need_relaxed = schemes & {Scheme.RELAXED_P3, Scheme.SUBOPTIMAL2}
    relaxed = attempt(solve_relaxed_p3) if need_relaxed else None
    sub1 = None
    if Scheme.SUBOPTIMAL1 in schemes or (Scheme.SUBOPTIMAL2 in schemes and (relaxed is None or not relaxed.rank_one)):
        sub1 = attempt(suboptimal1)
    for s in SCHEME_ORDER:
        if s not in schemes:
            continue
        if s is Scheme.RELAXED_P3:
            out[s] = relaxed
        elif s is Scheme.SUBOPTIMAL1:
            out[s] = sub1
        elif s is Scheme.SUBOPTIMAL2:
            if relaxed is not None and relaxed.rank_one:
                out[s] = replace(relaxed, scheme=s, branch=Scheme.RELAXED_P3)
            elif sub1 is not None:
                out[s] = replace(sub1, scheme=s, branch=Scheme.SUBOPTIMAL1)
            else:
                out[s] = None
        elif s is Scheme.BASELINE1:
            out[s] = attempt(baseline1)
        else:
            out[s] = attempt(baseline2)
    return out


_SCHEME_FN.update(
    {
        solve_relaxed_p3: Scheme.RELAXED_P3,
        suboptimal1: Scheme.SUBOPTIMAL1,
        baseline1: Scheme.BASELINE1,
        baseline2: Scheme.BASELINE2,
    }
)


def pareto_sweep(grams, qos, eps, lam_grid, schemes, utopia=None, options: SolverOptions | None = None) -> list:
    """One :class:`ParetoPoint` per weight per scheme, in grid order.

    Infeasible entries are kept with ``report=None``. A non-monotone
    trade-off along the grid is logged, not raised.
    """
    if not lam_grid:
        raise DomainError("empty weight grid")
    grid = [validate_weights(lam) for lam in lam_grid]
    if utopia is None:
        utopia = compute_utopia(grams, qos, eps, options)
    schemes = [Scheme(s) for s in SCHEME_ORDER if s in {Scheme(x) for x in schemes}]
    points = []
    infeasible: set = set()
    for lam in grid:
        reports = solve_schemes(grams, qos, eps, lam, utopia, schemes, options, infeasible)
        for s in schemes:
            r = reports[s]
            tp = r.metrics.tp if r else float("nan")
            eta = r.metrics.eta if r else float("nan")
            points.append(ParetoPoint(lam=lam, scheme=s, report=r, tp=tp, eta=eta))
    _log_monotonicity(points)
    return points


def _log_monotonicity(points, slack: float = 1e-9) -> int:
    inversions = 0
    by_scheme: dict = {}
    for p in points:
        if p.feasible:
            by_scheme.setdefault(p.scheme, []).append(p)
    for scheme, pts in by_scheme.items():
        for a, b in zip(pts, pts[1:]):
            if b.lam[1] > a.lam[1] and (b.tp > a.tp * (1 + slack) or b.eta > a.eta * (1 + slack)):
                inversions += 1
                log.info("non-monotone trade-off for %s between lambda=%s and %s", scheme.value, a.lam, b.lam)
    return inversions
