"""Pure numpy kernels: timeline execution, synchronous loop, stamp-only dry pass.

This backend defines the semantics; the compiled backend mirrors it
operation for operation. Both consume the packed layouts from packed.py and
the packed timelines built in sim.py.
"""

from __future__ import annotations

import math

import numpy as np

BACKEND = "py"

_BLOWUP = 1e12


class _Workspace:
    """Reusable views derived from a PackedProblem."""

    def __init__(self, pp):
        self.pp = pp
        self.diag_mask = np.repeat(pp.is_diag.astype(bool), np.diff(pp.n_off))
        self.full_agents = [
            (
                i,
                slice(int(pp.n_off[i]), int(pp.n_off[i + 1])),
                pp.hfull[pp.hfull_off[i]:pp.hfull_off[i + 1]].reshape(
                    int(pp.n_off[i + 1] - pp.n_off[i]), -1
                ),
                pp.hinv[pp.hfull_off[i]:pp.hfull_off[i + 1]].reshape(
                    int(pp.n_off[i + 1] - pp.n_off[i]), -1
                ),
            )
            for i in range(pp.N)
            if not pp.is_diag[i]
        ]
        self.G_all_T = np.ascontiguousarray(pp.G_all.T)
        self.ineq = pp.ineq_mask.astype(bool)
        self.eq = ~self.ineq
        # links as 2-D views for matvec use
        self.G_views = []
        for k in range(pp.L):
            i = int(pp.link_owner[k])
            j = int(pp.link_source[k])
            mi = int(pp.m_off[i + 1] - pp.m_off[i])
            nj = int(pp.n_off[j + 1] - pp.n_off[j])
            self.G_views.append(pp.G_flat[pp.G_off[k]:pp.G_off[k + 1]].reshape(mi, nj))
        self.e_views = [pp.e_flat[pp.e_off[k]:pp.e_off[k + 1]] for k in range(pp.L)]

    def argmin(self, lam: np.ndarray) -> np.ndarray:
        pp = self.pp
        x = np.clip(-(pp.q_lin + lam) / pp.h, pp.lo, pp.hi)
        for _, sl, _, Hinv in self.full_agents:
            x[sl] = -(Hinv @ (pp.q_lin[sl] + lam[sl]))
        return x

    def cost_value(self, x: np.ndarray) -> float:
        pp = self.pp
        dm = self.diag_mask
        val = 0.5 * float(np.dot(pp.h[dm] * x[dm], x[dm])) + float(np.dot(pp.q_lin, x))
        for _, sl, H, _ in self.full_agents:
            val += 0.5 * float(x[sl] @ H @ x[sl])
        return val

    def dual_value(self, y: np.ndarray) -> float:
        lam = self.G_all_T @ y
        xt = self.argmin(lam)
        return self.cost_value(xt) + float(np.dot(lam, xt)) + float(np.dot(self.pp.e_all, y))

    def feasibility(self, x: np.ndarray) -> float:
        v = self.pp.G_all @ x + self.pp.e_all
        pos = np.maximum(v[self.ineq], 0.0)
        return float(np.linalg.norm(pos)) + float(np.linalg.norm(v[self.eq]))

    def project(self, y: np.ndarray) -> np.ndarray:
        out = y.copy()
        np.maximum(out, 0.0, where=self.ineq, out=out)
        return out

    def initial_state(self) -> tuple[np.ndarray, np.ndarray]:
        x0 = self.argmin(np.zeros(self.pp.n_total))
        y0 = np.zeros(self.pp.m_total)
        return x0, y0


def run_sync(pp, gamma: float, y0, max_iters: int, tol, record: bool, xstar=None):
    """Synchronous dual ascent loop: y <- proj(y + gamma * grad q(y)).

    Convergence is declared *before* committing a step, so a warm start at
    tolerance reports zero iterations. With record=True the per-iteration
    metric rows match the async run record layout.
    """
    ws = _Workspace(pp)
    pp_e = pp.e_all
    y = np.asarray(y0, dtype=float).copy()
    max_ynorm = float(np.linalg.norm(y))
    gamma = float(gamma)

    dist = np.zeros(max_iters) if record else None
    dual = np.zeros(max_iters) if record else None
    feas = np.zeros(max_iters) if record else None
    snorm = np.zeros(max_iters) if record else None

    iterations = 0
    converged = False
    diverged = False
    resid = math.inf
    q0 = None
    for k in range(max_iters):
        lam = ws.G_all_T @ y
        xt = ws.argmin(lam)
        qk = ws.cost_value(xt) + float(np.dot(lam, xt)) + float(np.dot(pp_e, y))
        if k == 0:
            q0 = qk
        if record and k > 0:
            dual[k - 1] = qk
        grad = pp.G_all @ xt + pp_e
        y_next = ws.project(y + gamma * grad)
        s = (y_next - y) / gamma
        resid = float(np.linalg.norm(s))
        if tol is not None and resid <= tol:
            converged = True
            break
        if record:
            dist[k] = float(np.linalg.norm(xt - xstar)) if xstar is not None else math.nan
            feas[k] = ws.feasibility(xt)
            snorm[k] = resid
        y = y_next
        iterations = k + 1
        yn = float(np.linalg.norm(y))
        max_ynorm = max(max_ynorm, yn)
        if not math.isfinite(yn) or yn > _BLOWUP:
            diverged = True
            break

    lam = ws.G_all_T @ y
    xt = ws.argmin(lam)
    q_final = ws.cost_value(xt) + float(np.dot(lam, xt)) + float(np.dot(pp_e, y))
    out = {
        "iterations": iterations,
        "converged": converged,
        "diverged": diverged,
        "residual": resid,
        "y": y,
        "x": xt,
        "dual_value": q_final,
        "cost_value": ws.cost_value(xt),
        "max_ynorm": max_ynorm,
        "q0": q_final if q0 is None else q0,
    }
    if record:
        K = iterations
        if K > 0:
            dual[K - 1] = q_final
        out["dist"] = dist[:K]
        out["dual"] = dual[:K]
        out["feas"] = feas[:K]
        out["snorm"] = snorm[:K]
    return out


def dry_stamps(tl, collect_taus: bool, K_run=None):
    """Integer-only pass over the timeline: mailbox freshness stamps.

    The executed op order is identical to run_timeline; only the staleness
    bookkeeping is performed, which is what measure_Q needs. Returns the max
    staleness over all reads and (optionally) the per-read stamps.
    """
    K = tl.K if K_run is None else min(int(K_run), tl.K)
    L = tl.L
    stamp = np.zeros(L, dtype=np.int64)
    snap_stamp = np.zeros(L, dtype=np.int64)
    nb_indptr = tl.nb_indptr
    nb_mb = tl.nb_mb_link
    taus = np.zeros(tl.comp_nb_indptr[-1], dtype=np.int64) if collect_taus else None

    max_stale = 0
    for k in range(K):
        for o in range(tl.ops_indptr[k], tl.ops_indptr[k + 1]):
            kind = tl.ops_kind[o]
            arg = tl.ops_arg[o]
            if kind == 0:  # snapshot
                a0, a1 = nb_indptr[arg], nb_indptr[arg + 1]
                for t in range(a0, a1):
                    snap_stamp[nb_mb[t]] = stamp[nb_mb[t]]
            else:  # delivery
                link = tl.msg_link[arg]
                ms = tl.msg_stamp[arg]
                if ms > stamp[link]:
                    stamp[link] = ms
        c0, c1 = tl.comp_indptr[k], tl.comp_indptr[k + 1]
        for c in range(c0, c1):
            agent = tl.comp_agent[c]
            use_snap = tl.comp_snap[c]
            src = snap_stamp if use_snap else stamp
            a0, a1 = nb_indptr[agent], nb_indptr[agent + 1]
            t0 = tl.comp_nb_indptr[c]
            for t in range(a0, a1):
                stale = k - src[nb_mb[t]]
                if stale > max_stale:
                    max_stale = int(stale)
                if collect_taus:
                    taus[t0 + (t - a0)] = src[nb_mb[t]]
        # self stamps committed after the whole group
        for c in range(c0, c1):
            agent = tl.comp_agent[c]
            stamp[tl.self_link[agent]] = k + 1
    comp_done = int(tl.comp_indptr[K])
    return {
        "max_stale": max_stale,
        "taus": taus[: tl.comp_nb_indptr[comp_done]] if collect_taus else None,
        "completions": comp_done,
    }


def run_timeline(
    pp,
    tl,
    gamma_agent,
    K_run=None,
    xstar=None,
    dist_target=None,
    s_target=None,
    tail_frac=0.01,
    collect_taus=False,
    keep_history=False,
):
    """Execute a packed timeline: the asynchronous dual ascent event loop.

    Per counter: pre-counter ops (mailbox snapshots, message deliveries),
    then the group of agent completions applied simultaneously from
    pre-counter state, then the metric row. Early stopping (optional)
    requires the distance target met and the s-norm below target over the
    trailing tail_frac of the realized horizon.
    """
    ws = _Workspace(pp)
    N, L = pp.N, pp.L
    K = tl.K if K_run is None else min(int(K_run), tl.K)
    n_off, m_off, p = pp.n_off, pp.m_off, pp.p
    gamma_agent = np.asarray(gamma_agent, dtype=float)

    x, y = ws.initial_state()
    q0 = ws.dual_value(y)
    mb_y = np.zeros(int(pp.mb_y_off[-1]))
    mb_g = np.zeros(int(pp.mb_g_off[-1]))
    stamp = np.zeros(L, dtype=np.int64)
    snap_y = np.zeros_like(mb_y)
    snap_g = np.zeros_like(mb_g)
    snap_stamp = np.zeros(L, dtype=np.int64)
    slots = np.zeros(tl.slot_pool)

    yslc = [slice(int(m_off[i]), int(m_off[i + 1])) for i in range(N)]
    xslc = [slice(int(n_off[i]), int(n_off[i + 1])) for i in range(N)]
    mby = [slice(int(pp.mb_y_off[k]), int(pp.mb_y_off[k + 1])) for k in range(L)]
    mbg = [slice(int(pp.mb_g_off[k]), int(pp.mb_g_off[k + 1])) for k in range(L)]

    # seed mailboxes with the true initial values, stamp 0
    for k in range(L):
        i = int(pp.link_owner[k])
        j = int(pp.link_source[k])
        mb_y[mby[k]] = y[yslc[j]]
        mb_g[mbg[k]] = ws.G_views[k] @ x[xslc[j]] + ws.e_views[k]

    dist = np.zeros(K)
    dual = np.zeros(K)
    feas = np.zeros(K)
    snorm = np.zeros(K)
    cum_updates = np.zeros(K, dtype=np.int64)
    update_counts = np.zeros(N, dtype=np.int64)
    taus = np.zeros(tl.comp_nb_indptr[-1], dtype=np.int64) if collect_taus else None
    x_hist = np.zeros((K, pp.n_total)) if keep_history else None
    y_hist = np.zeros((K, pp.m_total)) if keep_history else None

    min_margin = math.inf
    max_stale = 0
    max_ynorm = 0.0
    total_updates = 0
    streak = 0
    diverged = False
    K_real = K
    comp_done = 0

    nb_indptr, nb_mb, nb_T = pp.nb_indptr, pp.nb_mb_link, pp.nb_T_link
    for k in range(K):
        for o in range(tl.ops_indptr[k], tl.ops_indptr[k + 1]):
            kind = tl.ops_kind[o]
            arg = int(tl.ops_arg[o])
            if kind == 0:
                a0, a1 = int(nb_indptr[arg]), int(nb_indptr[arg + 1])
                for t in range(a0, a1):
                    lk = int(nb_mb[t])
                    snap_y[mby[lk]] = mb_y[mby[lk]]
                    snap_g[mbg[lk]] = mb_g[mbg[lk]]
                    snap_stamp[lk] = stamp[lk]
            else:
                lk = int(tl.msg_link[arg])
                ms = int(tl.msg_stamp[arg])
                if ms > stamp[lk]:
                    so = int(tl.msg_slot[arg])
                    wy = mby[lk].stop - mby[lk].start
                    wg = mbg[lk].stop - mbg[lk].start
                    mb_y[mby[lk]] = slots[so:so + wy]
                    mb_g[mbg[lk]] = slots[so + wy:so + wy + wg]
                    stamp[lk] = ms

        c0, c1 = int(tl.comp_indptr[k]), int(tl.comp_indptr[k + 1])
        snorm2 = 0.0
        commits = []
        for c in range(c0, c1):
            i = int(tl.comp_agent[c])
            use_snap = bool(tl.comp_snap[c])
            vy = snap_y if use_snap else mb_y
            vg = snap_g if use_snap else mb_g
            vs = snap_stamp if use_snap else stamp
            a0, a1 = int(nb_indptr[i]), int(nb_indptr[i + 1])
            lam = np.zeros(int(n_off[i + 1] - n_off[i]))
            gsum = np.zeros(int(m_off[i + 1] - m_off[i]))
            t0 = int(tl.comp_nb_indptr[c])
            for t in range(a0, a1):
                lk = int(nb_mb[t])
                tk = int(nb_T[t])
                # stale y_j lives in this agent's mailbox entry (i <- j); the
                # multiplying block is the transposed neighbor-owned G_{j,i}
                lam += ws.G_views[tk].T @ vy[mby[lk]]
                gsum += vg[mbg[lk]]
                stale = k - int(vs[lk])
                if stale > max_stale:
                    max_stale = stale
                if collect_taus:
                    taus[t0 + (t - a0)] = vs[lk]
            if pp.is_diag[i]:
                xi = np.clip(-(pp.q_lin[xslc[i]] + lam) / pp.h[xslc[i]],
                             pp.lo[xslc[i]], pp.hi[xslc[i]])
            else:
                Hinv = pp.hinv[pp.hfull_off[i]:pp.hfull_off[i + 1]].reshape(lam.shape[0], -1)
                xi = -(Hinv @ (pp.q_lin[xslc[i]] + lam))
            gi = float(gamma_agent[i])
            yi_new = y[yslc[i]] + gi * gsum
            pi = int(p[i])
            if pi:
                np.maximum(yi_new[:pi], 0.0, out=yi_new[:pi])
            si = (yi_new - y[yslc[i]]) / gi if gi > 0 else np.zeros_like(yi_new)
            if si.size:
                ss = float(np.dot(si, si))
                snorm2 += ss
                margin = float(np.dot(si, gsum)) - ss
                if margin < min_margin:
                    min_margin = margin
            commits.append((i, xi, yi_new))

        for c, (i, xi, yi_new) in zip(range(c0, c1), commits):
            x[xslc[i]] = xi
            y[yslc[i]] = yi_new
            sl = int(pp.self_link[i])
            mb_y[mby[sl]] = yi_new
            mb_g[mbg[sl]] = ws.G_views[sl] @ xi + ws.e_views[sl]
            stamp[sl] = k + 1
            update_counts[i] += 1
            for mm in range(int(tl.cmsg_indptr[c]), int(tl.cmsg_indptr[c + 1])):
                lk = int(tl.msg_link[mm])
                so = int(tl.msg_slot[mm])
                wy = mby[lk].stop - mby[lk].start
                slots[so:so + wy] = yi_new
                slots[so + wy:so + wy + (mbg[lk].stop - mbg[lk].start)] = (
                    ws.G_views[lk] @ xi + ws.e_views[lk]
                )
        total_updates += c1 - c0
        comp_done = c1

        cum_updates[k] = total_updates
        if keep_history:
            x_hist[k] = x
            y_hist[k] = y
        dk = float(np.linalg.norm(x - xstar)) if xstar is not None else math.nan
        qk = ws.dual_value(y)
        dist[k] = dk
        dual[k] = qk
        feas[k] = ws.feasibility(x)
        sk = math.sqrt(snorm2)
        snorm[k] = sk
        yn = float(np.linalg.norm(y))
        if yn > max_ynorm:
            max_ynorm = yn

        if not math.isfinite(qk) or yn > _BLOWUP or (xstar is not None and dk > _BLOWUP):
            diverged = True
            K_real = k + 1
            break
        if s_target is not None:
            streak = streak + 1 if sk <= s_target else 0
        if (
            dist_target is not None
            and xstar is not None
            and dk <= dist_target
            and (s_target is None or streak >= max(1, math.ceil(tail_frac * (k + 1))))
        ):
            K_real = k + 1
            break

    return {
        "K_real": K_real,
        "cum_updates": cum_updates[:K_real],
        "dist": dist[:K_real],
        "dual": dual[:K_real],
        "feas": feas[:K_real],
        "snorm": snorm[:K_real],
        "x": x,
        "y": y,
        "update_counts": update_counts,
        "min_lemma3_margin": min_margin,
        "max_stale": max_stale,
        "max_ynorm": max_ynorm,
        "taus": taus[: tl.comp_nb_indptr[comp_done]] if collect_taus else None,
        "completions": comp_done,
        "diverged": diverged,
        "q0": q0,
        "x_hist": x_hist[:K_real] if keep_history else None,
        "y_hist": y_hist[:K_real] if keep_history else None,
    }
