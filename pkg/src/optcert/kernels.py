"""Per-triangle integration kernels.

Each kernel has a numba loop implementation (``*_nb``) and a vectorized
numpy implementation (``*_np``). The public names dispatch on
:data:`optcert._accel.USE_NUMBA`. The clamp kernel uses different
algorithms on the two paths (polygon clipping versus nested superlevel
sets), so agreement between them is a meaningful check.

Conventions: ``areas`` has shape (T,), vertex data has shape (T, 3), a
quadrature rule is ``bary`` (nq, 3) plus ``weights`` (nq,) summing to one.
"""
import math

import numpy as np

from ._accel import USE_NUMBA, njit

# ---------------------------------------------------------------------------
# weighted projections: int c(x) lambda_i  and  int c(x) lambda_i lambda_j
# ---------------------------------------------------------------------------


def weighted_vector_np(coef, bary, weights, areas):
    return areas[:, None] * np.einsum("tq,q,qi->ti", coef, weights, bary)


def weighted_matrix_np(coef, bary, weights, areas):
    return areas[:, None, None] * np.einsum("tq,q,qi,qj->tij", coef, weights, bary, bary)


@njit
def weighted_vector_nb(coef, bary, weights, areas):
    T, nq = coef.shape
    out = np.zeros((T, 3))
    for t in range(T):
        for q in range(nq):
            c = coef[t, q] * weights[q] * areas[t]
            for i in range(3):
                out[t, i] += c * bary[q, i]
    return out


@njit
def weighted_matrix_nb(coef, bary, weights, areas):
    T, nq = coef.shape
    out = np.zeros((T, 3, 3))
    for t in range(T):
        for q in range(nq):
            c = coef[t, q] * weights[q] * areas[t]
            for i in range(3):
                ci = c * bary[q, i]
                for j in range(3):
                    out[t, i, j] += ci * bary[q, j]
    return out


# ---------------------------------------------------------------------------
# clamped linear functions: u = clip(g, lo, hi), g linear on each triangle
# ---------------------------------------------------------------------------


@njit
def _clip_halfplane(poly, npoly, gv, c, keep_above, out):
    """Sutherland-Hodgman against {g >= c} (or {g <= c}) in barycentric coordinates."""
    nout = 0
    for k in range(npoly):
        a = poly[k]
        b = poly[(k + 1) % npoly]
        ga = a[0] * gv[0] + a[1] * gv[1] + a[2] * gv[2] - c
        gb = b[0] * gv[0] + b[1] * gv[1] + b[2] * gv[2] - c
        if not keep_above:
            ga, gb = -ga, -gb
        a_in = ga >= 0.0
        b_in = gb >= 0.0
        if a_in:
            out[nout, :] = a
            nout += 1
        if a_in != b_in:
            s = ga / (ga - gb)
            out[nout, :] = a + s * (b - a)
            nout += 1
    return nout


@njit
def _poly_moments(poly, npoly, gv, area, acc_lin, acc_mass, acc_g, want_g):
    """Add exact moments of a convex sub-polygon of the parent triangle.

    acc_lin[i] += int lambda_i, acc_mass[i, j] += int lambda_i lambda_j,
    and when ``want_g``: acc_g[0] += int g^2, acc_g[1 + i] += int g lambda_i.
    Returns the sub-polygon area.
    """
    total = 0.0
    for k in range(1, npoly - 1):
        a, b, c = poly[0], poly[k], poly[k + 1]
        det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1])
        s_area = abs(det) * area
        if s_area == 0.0:
            continue
        total += s_area
        for i in range(3):
            si = a[i] + b[i] + c[i]
            acc_lin[i] += s_area * si / 3.0
            for j in range(3):
                sj = a[j] + b[j] + c[j]
                dot = a[i] * a[j] + b[i] * b[j] + c[i] * c[j]
                acc_mass[i, j] += s_area / 12.0 * (dot + si * sj)
        if want_g:
            g0 = a[0] * gv[0] + a[1] * gv[1] + a[2] * gv[2]
            g1 = b[0] * gv[0] + b[1] * gv[1] + b[2] * gv[2]
            g2 = c[0] * gv[0] + c[1] * gv[1] + c[2] * gv[2]
            sg = g0 + g1 + g2
            acc_g[0] += s_area / 12.0 * (g0 * g0 + g1 * g1 + g2 * g2 + sg * sg)
            for i in range(3):
                si = a[i] + b[i] + c[i]
                dot = g0 * a[i] + g1 * b[i] + g2 * c[i]
                acc_g[1 + i] += s_area / 12.0 * (dot + sg * si)
    return total


@njit
def clamp_integrals_nb(gvals, lo, hi, areas):
    T = gvals.shape[0]
    load = np.zeros((T, 3))
    free_mass = np.zeros((T, 3, 3))
    u2 = np.zeros(T)
    clamped = np.zeros(T)
    tri = np.eye(3)
    p1 = np.empty((8, 3))
    p2 = np.empty((8, 3))
    lin = np.zeros(3)
    mass = np.zeros((3, 3))
    gacc = np.zeros(4)
    for t in range(T):
        gv = gvals[t]
        area = areas[t]
        gmin = min(gv[0], min(gv[1], gv[2]))
        gmax = max(gv[0], max(gv[1], gv[2]))
        if gmin >= lo and gmax <= hi:
            # free triangle: exact P1 mass
            for i in range(3):
                for j in range(3):
                    m = area / 12.0 * (2.0 if i == j else 1.0)
                    free_mass[t, i, j] = m
                    load[t, i] += m * gv[j]
                    u2[t] += m * gv[i] * gv[j]
            continue
        if gmax <= lo or gmin >= hi:
            cval = lo if gmax <= lo else hi
            for i in range(3):
                load[t, i] = cval * area / 3.0
            u2[t] = cval * cval * area
            clamped[t] = area
            continue
        # free part: {g >= lo} and {g <= hi}
        n1 = _clip_halfplane(tri, 3, gv, lo, True, p1) if lo > -math.inf else 3
        src = p1 if lo > -math.inf else tri
        n2 = _clip_halfplane(src, n1, gv, hi, False, p2) if hi < math.inf else n1
        dst = p2 if hi < math.inf else src
        lin[:] = 0.0
        mass[:, :] = 0.0
        gacc[:] = 0.0
        if n2 >= 3:
            _poly_moments(dst, n2, gv, area, lin, mass, gacc, True)
        for i in range(3):
            load[t, i] += gacc[1 + i]
            for j in range(3):
                free_mass[t, i, j] = mass[i, j]
        u2[t] += gacc[0]
        # clamped parts
        for side in range(2):
            c = lo if side == 0 else hi
            if not (-math.inf < c < math.inf):
                continue
            n = _clip_halfplane(tri, 3, gv, c, side == 1, p1)
            if n < 3:
                continue
            lin[:] = 0.0
            mass[:, :] = 0.0
            a_part = _poly_moments(p1, n, gv, area, lin, mass, gacc, False)
            for i in range(3):
                load[t, i] += c * lin[i]
            u2[t] += c * c * a_part
            clamped[t] += a_part
    return load, free_mass, u2, clamped


def _superlevel_pieces(gv, c):
    """Split {g >= c} of each triangle into two (possibly degenerate) sub-triangles.

    Returns barycentric vertex coordinates of shape (T, 2, 3, 3).
    """
    T = len(gv)
    order = np.argsort(-gv, axis=1, kind="stable")  # descending g
    gs = np.take_along_axis(gv, order, axis=1)
    E = np.eye(3)[order]  # (T, 3, 3): barycentric coords of sorted vertices
    above = (gs >= c).sum(axis=1)
    pieces = np.zeros((T, 2, 3, 3))

    def cut(a, b):
        ga = gs[np.arange(T), a]
        gb = gs[np.arange(T), b]
        den = np.where(ga != gb, ga - gb, 1.0)
        s = np.clip((ga - c) / den, 0.0, 1.0)[:, None]
        return E[:, a] + s * (E[:, b] - E[:, a])

    v0, v1, v2 = E[:, 0], E[:, 1], E[:, 2]
    m3 = above == 3
    pieces[m3, 0] = np.stack([v0, v1, v2], axis=1)[m3]
    m1 = above == 1
    if np.any(m1):
        p01, p02 = cut(0, 1), cut(0, 2)
        pieces[m1, 0] = np.stack([v0, p01, p02], axis=1)[m1]
    m2 = above == 2
    if np.any(m2):
        p12, p02 = cut(1, 2), cut(0, 2)
        pieces[m2, 0] = np.stack([v0, v1, p12], axis=1)[m2]
        pieces[m2, 1] = np.stack([v0, p12, p02], axis=1)[m2]
    return pieces


def _piece_moments(pieces, gv, areas):
    """Exact moments over the union of sub-triangles, per parent triangle."""
    a, b, c = pieces[:, :, 0], pieces[:, :, 1], pieces[:, :, 2]  # (T, 2, 3)
    det = (b[..., 0] - a[..., 0]) * (c[..., 1] - a[..., 1]) - (c[..., 0] - a[..., 0]) * (b[..., 1] - a[..., 1])
    s_area = np.abs(det) * areas[:, None]  # (T, 2)
    S = a + b + c
    lin = np.einsum("tp,tpi->ti", s_area, S) / 3.0
    dot = np.einsum("tpvi,tpvj->tpij", pieces, pieces)
    mass = np.einsum("tp,tpij->tij", s_area / 12.0, dot + S[..., :, None] * S[..., None, :])
    gvert = np.einsum("tpvi,ti->tpv", pieces, gv)  # g at sub-vertices
    sg = gvert.sum(axis=2)
    g2 = np.einsum("tp,tp->t", s_area / 12.0, (gvert**2).sum(axis=2) + sg**2)
    gl = np.einsum("tp,tpi->ti", s_area / 12.0, np.einsum("tpv,tpvi->tpi", gvert, pieces) + sg[..., None] * S)
    return s_area.sum(axis=1), lin, mass, g2, gl


def clamp_integrals_np(gvals, lo, hi, areas):
    T = len(gvals)
    whole = np.broadcast_to(np.eye(3), (T, 1, 3, 3))
    whole = np.concatenate([whole, np.zeros((T, 1, 3, 3))], axis=1)
    A_lo = _piece_moments(_superlevel_pieces(gvals, lo) if lo > -np.inf else whole, gvals, areas)
    if hi < np.inf:
        A_hi = _piece_moments(_superlevel_pieces(gvals, hi), gvals, areas)
    else:
        A_hi = tuple(np.zeros_like(x) for x in A_lo)
    A_T = _piece_moments(whole, gvals, areas)
    # free = {g >= lo} \ {g >= hi}; below = T \ {g >= lo}; above = {g >= hi}
    free = [x - y for x, y in zip(A_lo, A_hi)]
    below = [x - y for x, y in zip(A_T, A_lo)]
    above = A_hi
    load = free[4].copy()
    u2 = free[3].copy()
    clamped = np.zeros(T)
    if lo > -np.inf:
        load += lo * below[1]
        u2 += lo * lo * below[0]
        clamped += below[0]
    if hi < np.inf:
        load += hi * above[1]
        u2 += hi * hi * above[0]
        clamped += above[0]
    # A triangle lying inside [lo, hi] (bounds included) is free on both paths,
    # including the degenerate case g == lo or g == hi on the whole triangle.
    inside = (gvals.min(axis=1) >= lo) & (gvals.max(axis=1) <= hi)
    free_mass = free[2]
    if np.any(inside):
        M = areas[inside, None, None] * (np.ones((3, 3)) + np.eye(3)) / 12.0
        gi = gvals[inside]
        free_mass[inside] = M
        load[inside] = np.einsum("tij,tj->ti", M, gi)
        u2[inside] = np.einsum("ti,tij,tj->t", gi, M, gi)
        clamped[inside] = 0.0
    return load, free_mass, u2, np.maximum(clamped, 0.0)


# ---------------------------------------------------------------------------
# int |f|^q for linear f, odd integer q: split along the zero line
# ---------------------------------------------------------------------------


@njit
def _h_complete(f0, f1, f2, q):
    """Complete homogeneous symmetric polynomial h_q(f0, f1, f2)."""
    s = 0.0
    for i in range(q + 1):
        pi = f0**i
        for j in range(q - i + 1):
            s += pi * f1**j * f2 ** (q - i - j)
    return s


@njit
def abs_power_integrals_nb(fvals, q, areas):
    """Exact int_T |f|^q for integer q via int_T f^q = 2|T| q!/(q+2)! h_q(f_a)."""
    T = fvals.shape[0]
    out = np.zeros(T)
    coef = 2.0 * math.gamma(q + 1.0) / math.gamma(q + 3.0)
    tri = np.eye(3)
    poly = np.empty((8, 3))
    for t in range(T):
        fv = fvals[t]
        fmin = min(fv[0], min(fv[1], fv[2]))
        fmax = max(fv[0], max(fv[1], fv[2]))
        if fmin >= 0.0 or fmax <= 0.0:
            out[t] = areas[t] * coef * abs(_h_complete(fv[0], fv[1], fv[2], q))
            continue
        for side in range(2):
            n = _clip_halfplane(tri, 3, fv, 0.0, side == 0, poly)
            for k in range(1, n - 1):
                a, b, c = poly[0], poly[k], poly[k + 1]
                det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1])
                s_area = abs(det) * areas[t]
                fa = a[0] * fv[0] + a[1] * fv[1] + a[2] * fv[2]
                fb = b[0] * fv[0] + b[1] * fv[1] + b[2] * fv[2]
                fc = c[0] * fv[0] + c[1] * fv[1] + c[2] * fv[2]
                out[t] += s_area * coef * abs(_h_complete(fa, fb, fc, q))
    return out


def _h_complete_np(f, q):
    s = np.zeros(f.shape[:-1])
    for i in range(q + 1):
        for j in range(q - i + 1):
            s = s + f[..., 0] ** i * f[..., 1] ** j * f[..., 2] ** (q - i - j)
    return s


def abs_power_integrals_np(fvals, q, areas):
    coef = 2.0 * math.factorial(q) / math.factorial(q + 2)
    pos = _superlevel_pieces(fvals, 0.0)
    neg = _superlevel_pieces(-fvals, 0.0)
    total = np.zeros(len(fvals))
    for pieces in (pos, neg):
        a, b, c = pieces[:, :, 0], pieces[:, :, 1], pieces[:, :, 2]
        det = (b[..., 0] - a[..., 0]) * (c[..., 1] - a[..., 1]) - (c[..., 0] - a[..., 0]) * (b[..., 1] - a[..., 1])
        s_area = np.abs(det) * areas[:, None]
        fsub = np.einsum("tpvi,ti->tpv", pieces, fvals)
        total += (s_area * coef * np.abs(_h_complete_np(fsub, q))).sum(axis=1)
    return total


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

if USE_NUMBA:
    weighted_vector = weighted_vector_nb
    weighted_matrix = weighted_matrix_nb
    clamp_integrals = clamp_integrals_nb
    abs_power_integrals = abs_power_integrals_nb
else:
    weighted_vector = weighted_vector_np
    weighted_matrix = weighted_matrix_np
    clamp_integrals = clamp_integrals_np
    abs_power_integrals = abs_power_integrals_np
