"""Pure-Python SMO core; the Cython module ``_smo`` implements the same
algorithm step for step and is preferred when it is importable.

Notation: ``F[t] = sum_j alpha_j y_j K[t, j] - y[t]`` is the bias-free error,
so ``E_t = F_t + b``.  ``I_up`` holds indices whose ``alpha_t y_t`` may grow,
``I_low`` those whose ``alpha_t y_t`` may shrink.  The optimum is reached when
``max_{I_low} F - min_{I_up} F <= eps``.
"""

import numpy as np

_MASK = (1 << 64) - 1


class XorShift64:
    """Tiny deterministic generator shared bit-for-bit with the Cython core."""

    def __init__(self, seed):
        x = ((int(seed) * 2654435761) + 0x9E3779B97F4A7C15) & _MASK
        self.state = x or 0x9E3779B97F4A7C15

    def next(self):
        x = self.state
        x ^= (x << 13) & _MASK
        x ^= x >> 7
        x ^= (x << 17) & _MASK
        self.state = x
        return x

    def permutation(self, items):
        out = list(items)
        for k in range(len(out) - 1, 0, -1):
            r = self.next() % (k + 1)
            out[k], out[r] = out[r], out[k]
        return out


def _masks(alpha, y, C):
    pos = y > 0
    up = (pos & (alpha < C)) | (~pos & (alpha > 0))
    low = (pos & (alpha > 0)) | (~pos & (alpha < C))
    return up, low


def _select(alpha, F, y, C):
    up, low = _masks(alpha, y, C)
    if not up.any() or not low.any():
        return -1, -1, 0.0
    Fu = np.where(up, F, np.inf)
    Fl = np.where(low, F, -np.inf)
    i = int(np.argmin(Fu))
    j = int(np.argmax(Fl))
    return i, j, float(F[j] - F[i])


def solve(K, y, C, eps, max_iter, seed, rebuild_every, trace=False, row=None, diag=None):
    """Run SMO on the dual.  ``K`` is the dense Gram matrix, or ``None`` with
    ``row(i)`` / ``diag`` supplied for on-demand rows.

    Returns ``(alpha, F, updates, gap, dual_trace)``.
    """
    y = np.ascontiguousarray(y, dtype=np.float64)
    n = y.shape[0]
    if row is None:
        K = np.ascontiguousarray(K, dtype=np.float64)
        row = K.__getitem__
        diag = np.diag(K).copy()
    alpha = np.zeros(n)
    F = -y.copy()
    rng = XorShift64(seed)
    dual = [0.0] if trace else None

    def step(i, j):
        y1, y2 = y[i], y[j]
        a1, a2 = alpha[i], alpha[j]
        if y1 != y2:
            L, H = max(0.0, a2 - a1), min(C, C + a2 - a1)
        else:
            L, H = max(0.0, a1 + a2 - C), min(C, a1 + a2)
        if H <= L:
            return False
        Ki, Kj = row(i), row(j)
        eta = diag[i] + diag[j] - 2.0 * Ki[j]
        direction = y2 * (F[i] - F[j])
        if eta > 1e-12:
            a2n = min(max(a2 + direction / eta, L), H)
        else:
            a2n = H if direction > 0 else L
        snap = 1e-12 * max(1.0, a1 + a2)
        if a2n < snap:
            a2n = 0.0
        elif a2n > C - snap:
            a2n = C
        s = y1 * y2
        a1n = a1 + s * (a2 - a2n)
        # keep y1*a1 + y2*a2 fixed when a rounding residue is pushed onto a bound
        if a1n < snap:
            a1n = 0.0
            a2n = a2 + s * (a1 - a1n)
        elif a1n > C - snap:
            a1n = C
            a2n = a2 + s * (a1 - a1n)
        hits_bound = (a1n != a1 and a1n in (0.0, C)) or (a2n != a2 and a2n in (0.0, C))
        if abs(a2n - a2) <= 1e-14 * max(1.0, a2 + a2n) and not hits_bound:
            return False
        F[:] += (a1n - a1) * y1 * Ki + (a2n - a2) * y2 * Kj
        alpha[i], alpha[j] = a1n, a2n
        return True

    def rebuild():
        c = alpha * y
        nz = np.flatnonzero(c)
        F[:] = -y
        for t in nz:
            F[:] += c[t] * row(t)

    updates = 0
    gap = 0.0
    while updates < max_iter:
        i, j, gap = _select(alpha, F, y, C)
        if i < 0 or gap <= eps:
            break
        ok = step(i, j)
        if not ok:
            up, low = _masks(alpha, y, C)
            for jj in rng.permutation(np.flatnonzero(low)):
                if F[jj] - F[i] > eps and step(i, int(jj)):
                    ok = True
                    break
            if not ok:
                for ii in rng.permutation(np.flatnonzero(up)):
                    if F[j] - F[ii] > eps and step(int(ii), j):
                        ok = True
                        break
            if not ok:
                break
        updates += 1
        if rebuild_every > 0 and updates % rebuild_every == 0:
            rebuild()
        if trace:
            c = alpha * y
            dual.append(float(alpha.sum() - 0.5 * c @ (F + y)))
    else:
        _, _, gap = _select(alpha, F, y, C)
    return alpha, F, updates, gap, dual
