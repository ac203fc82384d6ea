"""Lasso path kernels on a precomputed weighted Gram matrix.

Problem (mean-scaled, intercept profiled out by centering):

    minimize  0.5 * (yy - 2 c.b + b' G b) + lam * ||b||_1

``G`` is the centered weighted Gram matrix and ``c`` the centered weighted
cross-moment vector.  The solver follows the exact piecewise-linear
homotopy in ``lam`` (LARS with the lasso drop rule), so every grid
solution is obtained by linear interpolation between path kinks and
satisfies the KKT conditions to rounding error.  Cost grows with the
number of kinks, not with the conditioning of ``G``; hinge bases are
badly conditioned, which is what rules out plain coordinate descent.

Two implementations share one algorithm; ``USE_NUMBA`` picks the default.
"""
import numpy as np

from .._accel import USE_NUMBA, njit

TIE = 1e-9  # relative slack for gradients already on the +-lam boundary


@njit(cache=True)
def _homotopy_nb(G, c, lam_stop, max_events):
    p = c.shape[0]
    kink_lam = np.empty(max_events + 2)
    kink_beta = np.zeros((max_events + 2, p))
    beta = np.zeros(p)
    in_active = np.zeros(p, dtype=np.bool_)
    sign = np.zeros(p)
    live = np.zeros(p, dtype=np.bool_)
    scale = 0.0
    for j in range(p):
        if G[j, j] > 0.0:
            live[j] = True
            if G[j, j] > scale:
                scale = G[j, j]
    ridge = 1e-13 * scale
    grad = c.copy()
    lam = 0.0
    first = -1
    for j in range(p):
        if live[j] and abs(grad[j]) > lam:
            lam = abs(grad[j])
            first = j
    n_k = 1
    kink_lam[0] = lam
    if first < 0 or lam <= lam_stop:
        return kink_lam[:1], kink_beta[:1], 0
    in_active[first] = True
    sign[first] = 1.0 if grad[first] > 0 else -1.0
    just_left = -1
    status = 0
    for ev in range(max_events):
        idx = np.flatnonzero(in_active)
        m = idx.shape[0]
        Gaa = np.empty((m, m))
        sa = np.empty(m)
        for a in range(m):
            sa[a] = sign[idx[a]]
            for b in range(m):
                Gaa[a, b] = G[idx[a], idx[b]]
            Gaa[a, a] += ridge
        d = np.linalg.solve(Gaa, sa)
        if not np.all(np.isfinite(d)):
            status = 2
            break
        # rate of change of the gradient as lam decreases
        slope = np.zeros(p)
        for a in range(m):
            col = idx[a]
            for j in range(p):
                slope[j] += G[j, col] * d[a]
        step = lam - lam_stop
        event = -1
        entering = True
        for j in range(p):
            if in_active[j] or not live[j]:
                continue
            # a variable that just left sits on the boundary it left from;
            # only a crossing of the opposite boundary can bring it back
            den = 1.0 - slope[j]
            if den > 1e-12 and not (j == just_left and sign[j] > 0):
                cand = (lam - grad[j]) / den
                if cand < 0.0 and lam - grad[j] > -TIE * lam:
                    cand = 0.0  # on the boundary up to rounding
                if 0.0 <= cand < step:
                    step = cand
                    event = j
                    entering = True
            den = 1.0 + slope[j]
            if den > 1e-12 and not (j == just_left and sign[j] < 0):
                cand = (lam + grad[j]) / den
                if cand < 0.0 and lam + grad[j] > -TIE * lam:
                    cand = 0.0
                if 0.0 <= cand < step:
                    step = cand
                    event = j
                    entering = True
        for a in range(m):
            j = idx[a]
            if d[a] * beta[j] < 0.0:
                cand = -beta[j] / d[a]
                if 0.0 <= cand < step:
                    step = cand
                    event = j
                    entering = False
        for a in range(m):
            beta[idx[a]] += step * d[a]
        lam -= step
        # exact refresh of the gradient at the new kink
        for j in range(p):
            acc = c[j]
            for a in range(m):
                acc -= G[j, idx[a]] * beta[idx[a]]
            grad[j] = acc
        kink_lam[n_k] = lam
        kink_beta[n_k, :] = beta
        n_k += 1
        if event < 0:
            break
        if entering:
            in_active[event] = True
            sign[event] = 1.0 if grad[event] > 0 else -1.0
            just_left = -1
        else:
            beta[event] = 0.0
            kink_beta[n_k - 1, event] = 0.0
            in_active[event] = False
            just_left = event
            if not np.any(in_active):
                status = 3
                break
        if ev == max_events - 1:
            status = 1
    return kink_lam[:n_k], kink_beta[:n_k], status


def _homotopy_np(G, c, lam_stop, max_events):
    p = c.shape[0]
    diag = np.diag(G)
    live = diag > 0
    ridge = 1e-13 * (diag.max() if p else 0.0)
    grad = c.astype(np.float64).copy()
    beta = np.zeros(p)
    masked = np.where(live, np.abs(grad), -1.0)
    if p == 0 or masked.max() <= max(lam_stop, 0.0):
        lam0 = float(masked.max()) if p else 0.0
        return np.array([max(lam0, 0.0)]), np.zeros((1, p)), 0
    first = int(np.argmax(masked))
    lam = float(masked[first])
    lams, betas = [lam], [beta.copy()]
    active = [first]
    sign = np.zeros(p)
    sign[first] = np.sign(grad[first])
    just_left = -1
    status = 0
    for ev in range(max_events):
        idx = np.array(active)
        Gaa = G[np.ix_(idx, idx)] + ridge * np.eye(len(idx))
        d = np.linalg.solve(Gaa, sign[idx])
        if not np.all(np.isfinite(d)):
            status = 2
            break
        slope = G[:, idx] @ d
        step = lam - lam_stop
        event, entering = -1, True
        cand_mask = live.copy()
        cand_mask[idx] = False
        with np.errstate(divide="ignore", invalid="ignore"):
            for side, num, den in ((1.0, lam - grad, 1.0 - slope), (-1.0, lam + grad, 1.0 + slope)):
                ok = cand_mask & (den > 1e-12)
                if just_left >= 0 and sign[just_left] == side:
                    ok[just_left] = False
                cand = np.where(ok, num / np.where(ok, den, 1.0), np.inf)
                cand = np.where((cand < 0.0) & (num > -TIE * lam), 0.0, cand)
                cand = np.where(cand >= 0.0, cand, np.inf)
                j = int(np.argmin(cand))
                if cand[j] < step:
                    step, event, entering = float(cand[j]), j, True
            shrink = d * beta[idx] < 0
            if np.any(shrink):
                cand = np.where(shrink, -beta[idx] / np.where(shrink, d, 1.0), np.inf)
                cand = np.where(cand >= 0.0, cand, np.inf)
                a = int(np.argmin(cand))
                if cand[a] < step:
                    step, event, entering = float(cand[a]), int(idx[a]), False
        beta[idx] += step * d
        lam -= step
        grad = c - G[:, idx] @ beta[idx]
        if event >= 0 and not entering:
            beta[event] = 0.0
        lams.append(lam)
        betas.append(beta.copy())
        if event < 0:
            break
        if entering:
            active.append(event)
            sign[event] = 1.0 if grad[event] > 0 else -1.0
            just_left = -1
        else:
            active.remove(event)
            just_left = event
            if not active:
                status = 3
                break
        if ev == max_events - 1:
            status = 1
    return np.array(lams), np.array(betas), status


def _interpolate(kink_lam, kink_beta, lambdas):
    """Evaluate the piecewise-linear path at each requested penalty."""
    out = np.empty((len(lambdas), kink_beta.shape[1]))
    # kinks are decreasing in lam; flip for searchsorted
    rev_lam = kink_lam[::-1]
    rev_beta = kink_beta[::-1]
    for i, lam in enumerate(lambdas):
        if lam >= kink_lam[0]:
            out[i] = kink_beta[0]
        elif lam <= rev_lam[0]:
            out[i] = rev_beta[0]
        else:
            hi = int(np.searchsorted(rev_lam, lam))
            lo = hi - 1
            span = rev_lam[hi] - rev_lam[lo]
            t = 0.0 if span <= 0 else (lam - rev_lam[lo]) / span
            out[i] = rev_beta[lo] + t * (rev_beta[hi] - rev_beta[lo])
    return out


def lasso_path(G, c, lambdas, max_events=None, use_numba=None):
    """Exact lasso solutions at each penalty in ``lambdas``.

    Returns ``(coefficients[L, p], n_kinks, status)``; status 0 means the
    path reached the smallest penalty, 1 the event budget ran out, 2 a
    singular active Gram, 3 an emptied active set.
    """
    G = np.ascontiguousarray(G, dtype=np.float64)
    c = np.ascontiguousarray(c, dtype=np.float64)
    lambdas = np.asarray(lambdas, dtype=np.float64)
    p = c.shape[0]
    if max_events is None:
        max_events = 20 * p + 50
    if use_numba is None:
        use_numba = USE_NUMBA
    lam_stop = max(float(lambdas.min()), 0.0) if len(lambdas) else 0.0
    if p == 0:
        return np.zeros((len(lambdas), 0)), 0, 0
    impl = _homotopy_nb if use_numba else _homotopy_np
    kink_lam, kink_beta, status = impl(G, c, lam_stop, int(max_events))
    return _interpolate(kink_lam, kink_beta, lambdas), len(kink_lam), int(status)
