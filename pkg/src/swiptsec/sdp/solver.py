"""Primal-dual interior-point solver for small block SDPs.

Homogeneous self-dual embedding, HKM search direction, Mehrotra
predictor-corrector. Hermitian blocks run through the real symmetric
embedding; inequality rows get slack columns; free scalars are split into two
nonnegative parts. Rows and the objective are equilibrated internally and the
duals mapped back on exit.
"""
from __future__ import annotations

import logging

import numpy as np

from .embedding import embed_hermitian, unembed
from .program import (
    BlockKind,
    ConeProgram,
    ConeSolution,
    Relation,
    SolverOptions,
    SolveStatus,
)
from .residuals import residuals

log = logging.getLogger(__name__)


class _Standard:
    """``min <C,X> s.t. A(X) = b`` over real PSD blocks plus one nonnegative vector."""

    def __init__(self, program: ConeProgram):
        self.program = program
        m = program.num_constraints
        self.m = m
        self.sym_sizes: list[int] = []
        self.user_map: list[tuple] = []
        n_lp = 0
        for block in program.blocks:
            if block.kind is BlockKind.HERMITIAN:
                self.user_map.append(("herm", len(self.sym_sizes)))
                self.sym_sizes.append(2 * block.size)
            elif block.kind is BlockKind.SYMMETRIC:
                self.user_map.append(("sym", len(self.sym_sizes)))
                self.sym_sizes.append(block.size)
            elif block.kind is BlockKind.NONNEG:
                self.user_map.append(("lp", n_lp))
                n_lp += block.size
            else:
                self.user_map.append(("free", n_lp))
                n_lp += 2 * block.size
        self.slack_col = {}
        for i, c in enumerate(program.constraints):
            if c.relation is not Relation.EQ:
                self.slack_col[i] = n_lp
                n_lp += 1
        self.n_lp = n_lp

        self.A = [np.zeros((m, n, n)) for n in self.sym_sizes]
        self.C = [np.zeros((n, n)) for n in self.sym_sizes]
        self.A_lp = np.zeros((m, n_lp))
        self.c_lp = np.zeros(n_lp)
        self.b = np.array([c.rhs for c in program.constraints], dtype=float)

        for b, coef in program.objective.items():
            self._place(b, coef, self.C, self.c_lp)
        for i, c in enumerate(program.constraints):
            for b, coef in c.coefs.items():
                self._place(b, coef, [A[i] for A in self.A], self.A_lp[i])
            if i in self.slack_col:
                self.A_lp[i, self.slack_col[i]] = 1.0 if c.relation is Relation.LE else -1.0

        # equilibration
        row_sq = np.sum(self.A_lp**2, axis=1)
        for A in self.A:
            row_sq += np.sum(A**2, axis=(1, 2))
        self.row_scale = np.where(row_sq > 0, np.sqrt(row_sq), 1.0)
        for A in self.A:
            A /= self.row_scale[:, None, None]
        self.A_lp /= self.row_scale[:, None]
        self.b = self.b / self.row_scale
        c_sq = float(np.sum(self.c_lp**2) + sum(np.sum(C**2) for C in self.C))
        self.obj_scale = np.sqrt(c_sq) if c_sq > 0 else 1.0
        self.C = [C / self.obj_scale for C in self.C]
        self.c_lp = self.c_lp / self.obj_scale
        self.A_flat = [A.reshape(m, -1) for A in self.A]

    def _place(self, b, coef, sym_targets, lp_target):
        kind, idx = self.user_map[b]
        if kind == "herm":
            sym_targets[idx][...] += 0.5 * embed_hermitian(coef, tol=np.inf)
        elif kind == "sym":
            sym_targets[idx][...] += coef
        elif kind == "lp":
            lp_target[idx : idx + coef.size] += coef
        else:
            k = coef.size
            lp_target[idx : idx + k] += coef
            lp_target[idx + k : idx + 2 * k] -= coef

    # linear maps -----------------------------------------------------------
    def op(self, X, x):
        out = self.A_lp @ x
        for Af, Xb in zip(self.A_flat, X):
            out += Af @ Xb.ravel()
        return out

    def adj(self, y):
        return [(y @ Af).reshape(n, n) for Af, n in zip(self.A_flat, self.sym_sizes)], self.A_lp.T @ y

    def inner_c(self, X, x):
        return float(sum(np.vdot(C, Xb) for C, Xb in zip(self.C, X)) + self.c_lp @ x)

    def to_user(self, X, x, y, S, s, tau):
        prog = self.program
        primal, slacks = [], []
        X = [Xb / tau for Xb in X]
        S = [Sb * (self.obj_scale / tau) for Sb in S]
        x = x / tau
        s = s * (self.obj_scale / tau)
        for block, (kind, idx) in zip(prog.blocks, self.user_map):
            if kind == "herm":
                primal.append(unembed(X[idx]))
                slacks.append(2.0 * unembed(S[idx]))
            elif kind == "sym":
                primal.append(0.5 * (X[idx] + X[idx].T))
                slacks.append(0.5 * (S[idx] + S[idx].T))
            elif kind == "lp":
                primal.append(x[idx : idx + block.size].copy())
                slacks.append(s[idx : idx + block.size].copy())
            else:
                k = block.size
                primal.append(x[idx : idx + k] - x[idx + k : idx + 2 * k])
                slacks.append(np.zeros(k))
        y_user = (y / tau) * self.obj_scale / self.row_scale
        mult = y_user.copy()
        for i, c in enumerate(prog.constraints):
            if c.relation is Relation.LE:
                mult[i] = -y_user[i]
        return primal, mult, slacks


def _inverse_factors(blocks):
    """``inv(chol(X))`` for each block, batched by size; ``None`` if any block is not PD."""
    out = [None] * len(blocks)
    groups: dict = {}
    for k, Xb in enumerate(blocks):
        groups.setdefault(Xb.shape[0], []).append(k)
    for idx in groups.values():
        try:
            Li = np.linalg.inv(np.linalg.cholesky(np.stack([blocks[k] for k in idx])))
        except np.linalg.LinAlgError:
            return None
        for k, L in zip(idx, Li):
            out[k] = L
    return out


def _max_step_psd(factors, dX):
    """Largest step keeping ``X + a dX`` PSD, given the inverse Cholesky factors of ``X``."""
    if factors is None:
        return 0.0
    groups: dict = {}
    for Li, d in zip(factors, dX):
        groups.setdefault(Li.shape[0], []).append((Li, d))
    best = np.inf
    for pairs in groups.values():
        Li = np.stack([p[0] for p in pairs])
        D = np.stack([p[1] for p in pairs])
        lam = float(np.min(np.linalg.eigvalsh(Li @ D @ np.swapaxes(Li, -1, -2))[..., 0]))
        if lam < 0:
            best = min(best, -1.0 / lam)
    return best


def _max_step_vec(x, dx):
    neg = dx < 0
    if not np.any(neg):
        return np.inf
    return float(np.min(-x[neg] / dx[neg]))


def _solve_kkt(K, rhs):
    try:
        return np.linalg.solve(K, rhs)
    except np.linalg.LinAlgError:
        # exactly singular near the end of a degenerate solve
        return np.linalg.lstsq(K, rhs, rcond=None)[0]


def _sym(M):
    return 0.5 * (M + M.T)


class _HSD:
    def __init__(self, std: _Standard, opts: SolverOptions):
        self.std = std
        self.opts = opts
        self.X = [np.eye(n) for n in std.sym_sizes]
        self.S = [np.eye(n) for n in std.sym_sizes]
        self.x = np.ones(std.n_lp)
        self.s = np.ones(std.n_lp)
        self.y = np.zeros(std.m)
        self.tau = 1.0
        self.kappa = 1.0
        self.nu = sum(std.sym_sizes) + std.n_lp + 1
        self.refine_steps = 2

    def mu(self):
        xs = sum(float(np.vdot(X, S)) for X, S in zip(self.X, self.S)) + float(self.x @ self.s)
        return (xs + self.tau * self.kappa) / self.nu

    def residual_vectors(self):
        st = self.std
        Rp = st.op(self.X, self.x) - st.b * self.tau
        AtY, aty = st.adj(self.y)
        Rd = [a + S - C * self.tau for a, S, C in zip(AtY, self.S, st.C)]
        rd = aty + self.s - st.c_lp * self.tau
        Rg = st.inner_c(self.X, self.x) - float(st.b @ self.y) + self.kappa
        return Rp, Rd, rd, Rg

    def metrics(self, Rp, Rd, rd):
        st = self.std
        tau = self.tau
        b_norm = max(1.0, float(np.linalg.norm(st.b)))
        pres = float(np.linalg.norm(Rp)) / tau / b_norm
        d_sq = float(rd @ rd) + sum(float(np.sum(R * R)) for R in Rd)
        dres = np.sqrt(d_sq) / tau
        pobj = st.inner_c(self.X, self.x) / tau
        dobj = float(st.b @ self.y) / tau
        gap = abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))
        return pres, dres, gap

    def certificates(self):
        st = self.std
        by = float(st.b @ self.y)
        pinf = dinf = np.inf
        if by > 0:
            AtY, aty = st.adj(self.y)
            r = float(np.sum((aty + self.s) ** 2)) + sum(
                float(np.sum((a + S) ** 2)) for a, S in zip(AtY, self.S)
            )
            pinf = np.sqrt(r) / by * max(1.0, float(np.linalg.norm(st.b)))
        cx = st.inner_c(self.X, self.x)
        if cx < 0:
            dinf = float(np.linalg.norm(st.op(self.X, self.x))) / (-cx)
        return pinf, dinf

    def step(self, Rp, Rd, rd, Rg):
        st = self.std
        X, S, x, s = self.X, self.S, self.x, self.s
        tau, kappa = self.tau, self.kappa
        mu = self.mu()

        Sinv = [np.linalg.inv(Sb) for Sb in S]
        XCS = [Xb @ Cb @ Si for Xb, Cb, Si in zip(X, st.C, Sinv)]
        d_lp = x / s
        M = (st.A_lp * d_lp) @ st.A_lp.T
        u = st.A_lp @ (d_lp * st.c_lp)
        c_tc = float(st.c_lp @ (d_lp * st.c_lp))
        for A, Af, Xb, Si, xcs, Cb in zip(st.A, st.A_flat, X, Sinv, XCS, st.C):
            P = Xb @ A @ Si
            M += Af @ P.reshape(st.m, -1).T
            u += Af @ xcs.ravel()
            c_tc += float(np.vdot(Cb, xcs))
        M = 0.5 * (M + M.T)
        K = np.empty((st.m + 1, st.m + 1))
        K[: st.m, : st.m] = M
        K[: st.m, st.m] = -(u + st.b)
        K[st.m, : st.m] = u - st.b
        K[st.m, st.m] = -(c_tc + kappa / tau)

        def direction(sigma, eta, corr_X, corr_x, corr_tk, refine):
            RX = [sigma * mu * Si - Xb - (cX if cX is not None else 0.0) for Si, Xb, cX in zip(Sinv, X, corr_X)]
            rx = sigma * mu / s - x - (corr_x if corr_x is not None else 0.0)
            TRd = [Xb @ (eta * R) @ Si for Xb, R, Si in zip(X, Rd, Sinv)]
            trd = d_lp * (eta * rd)
            tk = sigma * mu - tau * kappa - corr_tk
            r1 = -eta * Rp - st.op([a + t for a, t in zip(RX, TRd)], rx + trd)
            r2 = -eta * Rg - st.inner_c([a + t for a, t in zip(RX, TRd)], rx + trd) - tk / tau
            def expand(dy, dtau):
                AtY, aty = st.adj(dy)
                dS = [-eta * R - a + C * dtau for R, a, C in zip(Rd, AtY, st.C)]
                ds = -eta * rd - aty + st.c_lp * dtau
                dX = [_sym(R - Xb @ dSb @ Si) for R, Xb, dSb, Si in zip(RX, X, dS, Sinv)]
                dx = rx - d_lp * ds
                dkappa = (tk - kappa * dtau) / tau
                return dX, dx, dy, dS, ds, dtau, dkappa

            sol = _solve_kkt(K, np.append(r1, r2))
            d = expand(sol[: st.m], sol[st.m])
            # iterative refinement against the unreduced primal and gap equations
            for _ in range(refine):
                dX, dx, dy, _, _, dtau, dkappa = d
                e1 = st.op(dX, dx) - st.b * dtau + eta * Rp
                e2 = st.inner_c(dX, dx) - float(st.b @ dy) + dkappa + eta * Rg
                corr = _solve_kkt(K, -np.append(e1, e2))
                d = expand(dy + corr[: st.m], dtau + corr[st.m])
            return d

        def max_step(dX, dx, dS, ds, dtau, dkappa):
            a = min(
                [_max_step_psd(factors, dX + dS)]
                + [_max_step_vec(x, dx), _max_step_vec(s, ds)]
                + [_max_step_vec(np.array([tau, kappa]), np.array([dtau, dkappa]))]
            )
            return a

        factors = _inverse_factors(X + S)
        nblk = len(X)
        # the predictor only sets the centering weight and the corrector terms
        aff = direction(0.0, 1.0, [None] * nblk, None, 0.0, 0)
        dX, dx, dy, dS, ds, dtau, dkappa = aff
        a_aff = min(1.0, max_step(dX, dx, dS, ds, dtau, dkappa))
        xs_aff = sum(float(np.vdot(Xb + a_aff * d1, Sb + a_aff * d2)) for Xb, d1, Sb, d2 in zip(X, dX, S, dS))
        xs_aff += float((x + a_aff * dx) @ (s + a_aff * ds))
        xs_aff += (tau + a_aff * dtau) * (kappa + a_aff * dkappa)
        mu_aff = xs_aff / self.nu
        sigma = min(1.0, max(0.0, mu_aff / mu)) ** 3

        corr_X = [d1 @ d2 @ Si for d1, d2, Si in zip(dX, dS, Sinv)]
        corr_x = dx * ds / s
        corr_tk = dtau * dkappa
        dX, dx, dy, dS, ds, dtau, dkappa = direction(sigma, 1.0 - sigma, corr_X, corr_x, corr_tk, self.refine_steps)
        a_max = max_step(dX, dx, dS, ds, dtau, dkappa)
        alpha = min(1.0, self.opts.step_fraction * a_max)
        if not np.isfinite(alpha) or alpha <= 0:
            raise np.linalg.LinAlgError("no positive step to the boundary")

        self.X = [_sym(Xb + alpha * d) for Xb, d in zip(X, dX)]
        self.S = [_sym(Sb + alpha * d) for Sb, d in zip(S, dS)]
        self.x = x + alpha * dx
        self.s = s + alpha * ds
        self.y = self.y + alpha * dy
        self.tau = tau + alpha * dtau
        self.kappa = kappa + alpha * dkappa
        return alpha


def _solution(std, state, status, iterations) -> ConeSolution:
    program = std.program
    primal, mult, slacks = std.to_user(state["X"], state["x"], state["y"], state["S"], state["s"], state["tau"])
    prelim = ConeSolution(
        status=status,
        primal=primal,
        multipliers=mult,
        dual_slacks=slacks,
        duality_gap=np.nan,
        primal_infeas=np.nan,
        dual_infeas=np.nan,
        primal_objective=np.nan,
        dual_objective=np.nan,
        iterations=iterations,
        names=tuple(c.name for c in program.constraints),
    )
    res = residuals(program, prelim)
    return ConeSolution(
        status=status,
        primal=primal,
        multipliers=mult,
        dual_slacks=slacks,
        duality_gap=res.gap,
        primal_infeas=res.primal_infeas,
        dual_infeas=res.dual_infeas,
        primal_objective=res.primal_objective,
        dual_objective=res.dual_objective,
        iterations=iterations,
        names=prelim.names,
    )


def _snapshot(hsd: _HSD) -> dict:
    return {"X": hsd.X, "x": hsd.x, "y": hsd.y, "S": hsd.S, "s": hsd.s, "tau": hsd.tau}


def _ray_solution(std, hsd, status, iterations) -> ConeSolution:
    # certificate rays are normalized so the improving objective equals one
    st = std
    if status is SolveStatus.INFEASIBLE:
        scale = float(st.b @ hsd.y)
    else:
        scale = -st.inner_c(hsd.X, hsd.x)
    state = _snapshot(hsd)
    state["tau"] = scale
    sol = _solution(std, state, status, iterations)
    return sol


def solve(program: ConeProgram, options: SolverOptions | None = None) -> ConeSolution:
    """Solve ``program`` to the tolerances in ``options``.

    Deterministic: identical programs and options give bitwise identical
    results. On ``Infeasible``/``Unbounded`` the returned multipliers / primal
    hold the normalized certificate ray instead of an optimum.
    """
    opts = options or SolverOptions()
    std = _Standard(program)
    hsd = _HSD(std, opts)
    best = None
    best_merit = np.inf
    for it in range(1, opts.max_iterations + 1):
        Rp, Rd, rd, Rg = hsd.residual_vectors()
        pres, dres, gap = hsd.metrics(Rp, Rd, rd)
        merit = max(pres, dres, gap)
        if merit < best_merit:
            best_merit, best = merit, (_snapshot(hsd), it - 1)
        if pres <= opts.feas_tol and dres <= opts.feas_tol and gap <= opts.gap_tol:
            sol = _solution(std, _snapshot(hsd), SolveStatus.OPTIMAL, it - 1)
            if (
                sol.primal_infeas <= opts.feas_tol
                and sol.dual_infeas <= opts.feas_tol
                and sol.duality_gap <= opts.gap_tol
            ):
                return sol
        pinf, dinf = hsd.certificates()
        if pinf <= opts.infeasibility_tol and hsd.tau < hsd.kappa:
            return _ray_solution(std, hsd, SolveStatus.INFEASIBLE, it - 1)
        if dinf <= opts.infeasibility_tol and hsd.tau < hsd.kappa:
            return _ray_solution(std, hsd, SolveStatus.UNBOUNDED, it - 1)
        try:
            hsd.step(Rp, Rd, rd, Rg)
        except np.linalg.LinAlgError as exc:
            log.debug("interior-point step failed at iteration %d: %s", it, exc)
            state, k = best
            return _solution(std, state, SolveStatus.NUMERICAL_FAILURE, k)
    state, k = best
    return _solution(std, state, SolveStatus.MAX_ITERATIONS, k)
