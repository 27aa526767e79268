"""Independent checks: constraint margins of an allocation, and a brute-force
grid search over two-antenna allocations.

The grid search scores ``w = sqrt(p) a`` and ``V = q u u^H`` for unit
directions ``a, u`` on a grid and treats the powers ``p, q`` exactly.

Powers. For fixed directions the harvesting efficiency depends only on
``r = q / p``; the smallest ``p`` meeting the desired-SINR target is then
optimal, and the remaining constraints confine ``r`` to an interval. On that
interval the scalarized objective is the maximum of a decreasing and an
increasing term, so its minimizer is an endpoint or a root of a quadratic.
Each grid point is scored by its best objective over all powers, evaluated at
an explicit feasible point.

Directions. Only the gains ``a^H H a``, ``a^H G_k a`` and ``u^H H u``,
``u^H G_k u`` matter. A larger desired gain of the beam never hurts (lower
power, looser constraints), and for the noise a smaller desired gain and
larger idle gains never hurt. The useful directions therefore sit on the
Pareto boundary of the 2x2 joint numerical range, which is traced by top
eigenvectors::

    a = top eigenvector of  n_0 H + sum_k n_k G_k     (n_0 >= 0)
    u = top eigenvector of -n_0 H + sum_k n_k G_k     (n_0, n_k >= 0)

for unit normals ``n`` in spherical coordinates; the boundary points are
rank-one, so a rank-one ``V`` loses nothing. One idle receiver gives one
angle per direction (``omega in [-pi/2, pi/2]`` for the beam, ``zeta in
[0, pi/2]`` for the noise), two idle receivers give two. Every angle runs
over ``k / R`` of its range (k = 0..R, or k = 0..R-1 for a full period), so
grids are nested under doubling of ``R`` and a finer grid never does worse
(``refine=False``). The default then polishes the best grid points with a
shrinking local grid search.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import GramSet
from .metrics import Allocation, QosTargets, sinr_desired, sinr_idle, transmit_power
from .sdp.program import DomainError


@dataclass(frozen=True)
class FeasibilityReport:
    """Raw margins (positive = satisfied); ``feasible`` uses a tolerance relative to each target."""

    c1_margin: float
    c2_margins: tuple
    c3_margin: float
    c4_min_eigenvalue: float
    feasible: bool


def feasibility_residuals(alloc: Allocation, grams: GramSet, qos: QosTargets, tolerance: float = 1e-6) -> FeasibilityReport:
    s2 = qos.sigma_s2
    c1 = sinr_desired(alloc, grams.H, s2) - qos.gamma_req
    c2 = tuple(gt - sinr_idle(alloc, G, s2) for G, gt in zip(grams.G, qos.gamma_tol))
    c3 = qos.p_max - transmit_power(alloc)
    c4 = float(np.linalg.eigvalsh(alloc.V)[0])
    ok = (
        c1 >= -tolerance * qos.gamma_req
        and all(m >= -tolerance * gt for m, gt in zip(c2, qos.gamma_tol))
        and c3 >= -tolerance * qos.p_max
        and c4 >= -tolerance * qos.p_max
    )
    return FeasibilityReport(c1, c2, c3, c4, bool(ok))


class InfeasibleAtResolution(RuntimeError):
    """No grid point satisfies the constraints."""


@dataclass(frozen=True)
class OracleResult:
    value: float
    allocation: Allocation
    tp: float
    eta: float
    angles: tuple
    resolution: int


class _Scorer:
    """Best scalarized objective over powers for arrays of direction gains."""

    def __init__(self, grams: GramSet, qos: QosTargets, eps, lam, utopia):
        if grams.num_antennas != 2:
            raise DomainError("grid oracle needs N_t = 2")
        if grams.num_idle > 2:
            raise DomainError("grid oracle supports at most two idle receivers")
        self.H = grams.H
        self.G = grams.G
        self.eps = np.atleast_1d(np.asarray(eps, dtype=float))
        self.qos = qos
        self.l1, self.l2 = (float(v) for v in lam)
        self.F1 = float(utopia.F1_star)
        self.F2 = float(utopia.F2_star)

    @staticmethod
    def _quad(M, a):
        return np.real(np.einsum("...i,ij,...j->...", a.conj(), M, a))

    def gains(self, a):
        return self._quad(self.H, a), [self._quad(G, a) for G in self.G]

    def score(self, ah, ag, bh, bg):
        """Objective and ratio ``r = q/p`` for broadcastable gain arrays; ``inf`` where infeasible."""
        q = self.qos
        G, s2, P = q.gamma_req, q.sigma_s2, q.p_max
        e = ah
        d = G * bh
        with np.errstate(divide="ignore", invalid="ignore"):
            lo = np.zeros(np.broadcast(ah, bh).shape)
            hi = (P * e - G * s2) / (G * s2 + P * d)
            ok = np.broadcast_to(P * e >= G * s2, lo.shape).copy()
            for agk, bgk, gt in zip(ag, bg, q.gamma_tol):
                L = G * agk - gt * e
                c = G * gt * (bgk - bh)
                bound = L / c
                lo = np.where(c > 0, np.maximum(lo, bound), lo)
                hi = np.where(c < 0, np.minimum(hi, bound), hi)
                ok &= (c != 0) | (L <= 0)
            ok &= lo <= hi
            Ag = sum(ek * a for ek, a in zip(self.eps, ag)) if ag else np.zeros_like(e)
            Bg = sum(ek * b for ek, b in zip(self.eps, bg)) if bg else np.zeros_like(d)

            def obj(r):
                eta = (Ag + r * Bg) / (1 + r)
                tp = G * s2 * (1 + r) / (e - d * r)
                return np.maximum(self.l1 * (-eta - self.F1), self.l2 * (tp - self.F2))

            # max(A, B) with A decreasing and B increasing in r: the crossing
            # A = B is a root of c2 r^2 + c1 r + c0
            kc = self.l2 * self.F2 - self.l1 * self.F1
            c0 = kc * e - self.l1 * Ag * e - self.l2 * G * s2
            c1 = kc * (e - d) - self.l1 * (Bg * e - Ag * d) - 2 * self.l2 * G * s2
            c2 = -kc * d + self.l1 * Bg * d - self.l2 * G * s2
            disc = np.sqrt(np.maximum(c1 * c1 - 4 * c2 * c0, 0.0))
            small = np.abs(c2) <= 1e-14 * (np.abs(c1) + np.abs(c0) + 1e-300)
            den = np.where(small, 1.0, 2 * c2)
            lin = np.where(c1 != 0, -c0 / np.where(c1 != 0, c1, 1.0), lo)
            roots = [np.where(small, lin, (-c1 + disc) / den), np.where(small, lin, (-c1 - disc) / den)]
            best_f = np.full(lo.shape, np.inf)
            best_r = np.zeros(lo.shape)
            for r in [lo, hi] + [np.clip(np.nan_to_num(x, nan=0.0), lo, hi) for x in roots]:
                f = obj(r)
                better = ok & np.isfinite(f) & (f < best_f)
                best_f = np.where(better, f, best_f)
                best_r = np.where(better, r, best_r)
        return best_f, best_r


class _Directions:
    """Pareto-boundary directions as functions of normal angles."""

    def __init__(self, grams: GramSet, noise: str = "full"):
        self.H = grams.H
        self.G = grams.G
        k = grams.num_idle
        self.dim = {0: 0, 1: 1, 2: 2}[k]
        self.fixed_noise = None
        if noise == "nullspace":
            self.fixed_noise = np.linalg.eigh(grams.H)[1][:, 0]
        elif noise != "full":
            raise DomainError(f"unknown noise restriction {noise!r}")
        if k == 0:
            self.beam_ranges = self.noise_ranges = []
        elif k == 1:
            self.beam_ranges = [(-np.pi / 2, np.pi / 2, False)]
            self.noise_ranges = [(0.0, np.pi / 2, False)]
        else:
            self.beam_ranges = [(0.0, np.pi / 2, False), (0.0, 2 * np.pi, True)]
            self.noise_ranges = [(0.0, np.pi / 2, False), (0.0, np.pi / 2, False)]
        if self.fixed_noise is not None:
            self.noise_ranges = []

    @staticmethod
    def grid(ranges, res):
        axes = []
        for lo, hi, periodic in ranges:
            n = res if periodic else res + 1
            axes.append(lo + (hi - lo) * np.arange(n) / res)
        if not axes:
            return np.zeros((1, 0)), axes
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1), axes

    def _normals(self, t):
        if t.shape[-1] == 1:
            return np.cos(t[..., 0]), [np.sin(t[..., 0])]
        return np.cos(t[..., 0]), [np.sin(t[..., 0]) * np.cos(t[..., 1]), np.sin(t[..., 0]) * np.sin(t[..., 1])]

    def _top(self, M):
        return np.linalg.eigh(M)[1][..., :, -1]

    def beam(self, t):
        if self.dim == 0:
            return self._top(self.H)[None, :].repeat(t.shape[0], axis=0)
        n0, nk = self._normals(t)
        M = n0[:, None, None] * self.H + sum(n[:, None, None] * G for n, G in zip(nk, self.G))
        return self._top(M)

    def noise(self, t):
        if self.fixed_noise is not None:
            return self.fixed_noise[None, :].repeat(t.shape[0], axis=0)
        if self.dim == 0:
            return self._top(-self.H)[None, :].repeat(t.shape[0], axis=0)
        n0, nk = self._normals(t)
        M = -n0[:, None, None] * self.H + sum(n[:, None, None] * G for n, G in zip(nk, self.G))
        return self._top(M)

    def clip(self, t):
        t = t.copy()
        for j, (lo, hi, periodic) in enumerate(self.beam_ranges + self.noise_ranges):
            if not periodic:
                t[..., j] = np.clip(t[..., j], lo, hi)
        return t


def grid_oracle(
    grams: GramSet,
    qos: QosTargets,
    eps,
    lam,
    utopia,
    resolution: int = 128,
    refine: bool = True,
    chunk: int = 1 << 20,
    noise: str = "full",
) -> OracleResult:
    """Minimize the scalarized objective ``max_j lambda_j (F_j - F_j*)`` by exhaustive search.

    ``noise="nullspace"`` restricts the noise direction to the null space of
    the desired channel. Returns the best point found; raises
    :class:`InfeasibleAtResolution` when no grid point is feasible.
    """
    if resolution < 2:
        raise DomainError("resolution must be at least 2")
    sc = _Scorer(grams, qos, eps, lam, utopia)
    dirs = _Directions(grams, noise)
    beam_t, _ = dirs.grid(dirs.beam_ranges, resolution)
    noise_t, _ = dirs.grid(dirs.noise_ranges, resolution)
    ah, ag = sc.gains(dirs.beam(beam_t))
    bh, bg = sc.gains(dirs.noise(noise_t))
    n_noise = bh.size

    # every power split needs p >= gamma * sigma^2 / a_h, hence TP >= that
    with np.errstate(divide="ignore"):
        lower = sc.l2 * (qos.gamma_req * qos.sigma_s2 / ah - sc.F2)
    lower = np.where(qos.p_max * ah >= qos.gamma_req * qos.sigma_s2, lower, np.inf)
    order = np.lexsort((np.arange(ah.size), lower))

    best = (np.inf, -1, -1)
    top: list = []
    rows = max(1, chunk // n_noise)
    for start in range(0, order.size, rows):
        if not lower[order[start]] < best[0]:
            break
        idx = order[start : start + rows]
        idx = np.sort(idx[lower[idx] < best[0]])
        f, _ = sc.score(ah[idx, None], [x[idx, None] for x in ag], bh[None, :], [x[None, :] for x in bg])
        flat = f.ravel()
        k = int(np.argmin(flat))
        cand = (float(flat[k]), int(idx[k // n_noise]), int(k % n_noise))
        if cand[0] < best[0] or (cand[0] == best[0] and cand[1:] < best[1:]):
            best = cand
        if refine:
            m = min(4, flat.size)
            for c in np.argpartition(flat, m - 1)[:m]:
                if np.isfinite(flat[c]):
                    top.append((float(flat[c]), int(idx[c // n_noise]), int(c % n_noise)))
            top = sorted(top)[:4]
    if not np.isfinite(best[0]):
        raise InfeasibleAtResolution(f"no feasible point at resolution {resolution}")

    def params(bi, ni):
        return np.concatenate([beam_t[bi], noise_t[ni]])

    best_val, best_t = best[0], params(best[1], best[2])
    if refine and dirs.dim:
        spans = np.array([(hi - lo) / resolution for lo, hi, _ in dirs.beam_ranges + dirs.noise_ranges])
        polish = _polish_profile if dirs.dim == 1 and dirs.fixed_noise is None else _polish
        for val, bi, ni in top:
            v, t = polish(sc, dirs, params(bi, ni), val, spans)
            if v < best_val:
                best_val, best_t = v, t
    alloc = _allocation(sc, dirs, best_t)
    tp = transmit_power(alloc)
    hp = sum(e * (sc._quad(G, alloc.w) + float(np.trace(G @ alloc.V).real)) for e, G in zip(sc.eps, grams.G))
    return OracleResult(
        value=float(best_val),
        allocation=alloc,
        tp=tp,
        eta=float(hp) / tp,
        angles=tuple(float(x) for x in best_t),
        resolution=resolution,
    )


def _evaluate(sc: _Scorer, dirs: _Directions, t):
    nb = len(dirs.beam_ranges)
    a = dirs.beam(t[:, :nb])
    u = dirs.noise(t[:, nb:])
    ah, ag = sc.gains(a)
    bh, bg = sc.gains(u)
    f, r = sc.score(ah, ag, bh, bg)
    return f, r, a, u


def _allocation(sc: _Scorer, dirs: _Directions, t) -> Allocation:
    f, r, a, u = _evaluate(sc, dirs, np.asarray(t, dtype=float)[None, :])
    a, u, r = a[0], u[0], float(r[0])
    q = sc.qos
    p = q.gamma_req * q.sigma_s2 / (sc._quad(sc.H, a) - q.gamma_req * r * sc._quad(sc.H, u))
    V = p * r * np.outer(u, u.conj())
    return Allocation(np.sqrt(p) * a, 0.5 * (V + V.conj().T))


def _polish(sc, dirs, t, val, h0, min_step: float = 1e-13, max_rounds: int = 2000):
    """Local grid search around the incumbent.

    The incumbent moves to the best local point; the window halves only when
    no local point improves on it.
    """
    dims = t.size
    points = 33 if dims <= 2 else 9
    half = points // 2
    offsets = np.arange(-half, half + 1, dtype=float) / half
    mesh = np.stack(np.meshgrid(*([offsets] * dims), indexing="ij"), axis=-1).reshape(-1, dims)
    h = h0.astype(float)
    for _ in range(max_rounds):
        trial = dirs.clip(t[None, :] + mesh * h[None, :])
        f, *_ = _evaluate(sc, dirs, trial)
        k = int(np.argmin(f))
        if f[k] < val:
            val, t = float(f[k]), trial[k]
        else:
            h = h / 2
            if np.max(h) < min_step:
                break
    return val, t


def _zoom_1d(fun, center, h, value, points: int = 9, min_step: float = 1e-11, max_rounds: int = 200):
    """Row-wise 1-D local grid search.

    ``fun(x, idx)`` maps an (n, points) array of trial points for rows ``idx``
    to ``(clipped points, values)``.

    A row keeps its step while it walks along an edge of its window and
    halves it otherwise, so every row shrinks within a bounded number of rounds.
    """
    half = points // 2
    offsets = np.arange(-half, half + 1, dtype=float) / half
    center, h, value = center.copy(), h.copy(), value.copy()
    rows = np.arange(center.size)
    for _ in range(max_rounds):
        active = h >= min_step
        if not np.any(active):
            break
        idx = np.flatnonzero(active)
        trial, f = fun(center[idx, None] + offsets[None, :] * h[idx, None], idx)
        k = np.argmin(f, axis=1)
        sub = rows[: k.size]
        fk = f[sub, k]
        moved = trial[sub, k]
        better = (fk < value[idx]) & (moved != center[idx])
        walk = better & (np.abs(k - half) == half)
        center[idx] = np.where(better, moved, center[idx])
        value[idx] = np.where(better, fk, value[idx])
        h[idx] = np.where(walk, h[idx], h[idx] / 2)
    return center, value


def _polish_profile(sc, dirs, t, val, h0):
    """Two-parameter polish as nested 1-D searches.

    The optimum typically sits in a curved valley bounded by a constraint
    switch, where a 2-D stencil stalls; minimizing the beam angle for each
    noise angle and searching the resulting profile in the noise angle does not.
    """
    (w_lo, w_hi, _), (z_lo, z_hi, _) = dirs.beam_ranges[0], dirs.noise_ranges[0]

    def profile(zs, w_start):
        def fun(ws, idx):
            ws = np.clip(ws, w_lo, w_hi)
            pts = np.stack([ws.ravel(), np.repeat(zs[idx], ws.shape[1])], axis=-1)
            f, *_ = _evaluate(sc, dirs, pts)
            return ws, f.reshape(ws.shape)

        start = np.full(zs.shape, w_start)
        _, v0 = fun(start[:, None], np.arange(zs.size))
        return _zoom_1d(fun, start, np.full(zs.shape, 4 * h0[0]), v0[:, 0])

    state = {"w": t[0], "best": (val, t.copy())}

    def outer(zs, _idx):
        zs = np.clip(zs, z_lo, z_hi)
        ws, v = profile(zs.ravel(), state["w"])
        k = int(np.argmin(v))
        if v[k] < state["best"][0]:
            state["best"] = (float(v[k]), np.array([ws[k], zs.ravel()[k]]))
            state["w"] = ws[k]
        return zs, v.reshape(zs.shape)

    _zoom_1d(outer, np.array([t[1]]), np.array([4 * h0[1]]), np.array([val]))
    return state["best"]
