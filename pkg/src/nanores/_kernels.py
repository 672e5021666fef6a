"""Hot numeric kernels: line-segment stamps, nodal assembly and batched solves.

Every kernel exists twice.  The numba versions are compiled with ``@njit``
and loop over frequency points; the numpy versions vectorise over the
frequency axis.  Set ``NANORES_DISABLE_NUMBA=1`` (or run without numba
installed) to force the numpy path.  Both paths must agree to rounding.

Circuit data reaches the kernels as flat arrays (see ``Compiled`` in
``acsolver``): node indices use -1 for ground.
"""

from __future__ import annotations

import cmath
import os

import numpy as np

SERIES_SWITCH = 1e-6  # |sinh(gamma*l)| below which the Laurent expansion is used

KIND_C, KIND_L, KIND_R = 0, 1, 2


def _env_disabled() -> bool:
    return os.environ.get("NANORES_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes", "on")


try:  # pragma: no cover - import guard
    if _env_disabled():
        raise ImportError
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f


USE_NUMBA = HAVE_NUMBA


# ---------------------------------------------------------------------------
# scalar kernels (numba-compatible source; also run as plain Python)


def _prop(omega, L, C, R, G):
    """Propagation constant per metre and characteristic admittance.

    Written as i*omega*sqrt(LC) times a near-unity loss factor so the result
    is analytic in complex omega (no principal-branch cut near the real axis).
    """
    jw = 1j * omega
    zs = 1.0 + R / (jw * L)
    yp = 1.0 + G / (jw * C)
    gamma = jw * np.sqrt(L * C) * cmath.sqrt(zs * yp)
    y0 = np.sqrt(C / L) * cmath.sqrt(yp / zs)
    return gamma, y0


def _coth_csch(z):
    s = cmath.sinh(z)
    if abs(s) < SERIES_SWITCH:
        n = round(z.imag / np.pi)
        eps = z - 1j * np.pi * n
        if eps == 0:
            # exactly resonant lossless line; callers detect the non-finite stamp
            inf = complex(np.inf, 0.0)
            return inf, inf
        e2 = eps * eps
        coth = 1.0 / eps + eps / 3.0 - eps * e2 / 45.0
        csch = 1.0 / eps - eps / 6.0 + 7.0 * eps * e2 / 360.0
        if n % 2 != 0:
            csch = -csch
        return coth, csch
    return cmath.cosh(z) / s, 1.0 / s


def tline_y(omega, length, L, C, R, G):
    """(Y11, Y12) of a line segment; Y22 = Y11, Y21 = Y12."""
    gamma, y0 = _prop(omega, L, C, R, G)
    coth, csch = _coth_csch(gamma * length)
    return y0 * coth, -y0 * csch


def assemble(omega, n, tl_a, tl_b, tl_len, tl_L, tl_C, tl_R, tl_G, lp_a, lp_b, lp_kind, lp_val):
    Y = np.zeros((n, n), dtype=np.complex128)
    for k in range(tl_a.shape[0]):
        y11, y12 = tline_y(omega, tl_len[k], tl_L[k], tl_C[k], tl_R[k], tl_G[k])
        a = tl_a[k]
        b = tl_b[k]
        if a >= 0:
            Y[a, a] += y11
        if b >= 0:
            Y[b, b] += y11
        if a >= 0 and b >= 0:
            Y[a, b] += y12
            Y[b, a] += y12
    for k in range(lp_a.shape[0]):
        kind = lp_kind[k]
        if kind == 0:
            y = 1j * omega * lp_val[k]
        elif kind == 1:
            y = 1.0 / (1j * omega * lp_val[k])
        else:
            y = 1.0 / lp_val[k] + 0j
        a = lp_a[k]
        b = lp_b[k]
        if a >= 0:
            Y[a, a] += y
        if b >= 0:
            Y[b, b] += y
        if a >= 0 and b >= 0:
            Y[a, b] -= y
            Y[b, a] -= y
    return Y


def assemble_terminated(omega, n, tl_a, tl_b, tl_len, tl_L, tl_C, tl_R, tl_G,
                        lp_a, lp_b, lp_kind, lp_val, pt_node, pt_z):
    Y = assemble(omega, n, tl_a, tl_b, tl_len, tl_L, tl_C, tl_R, tl_G, lp_a, lp_b, lp_kind, lp_val)
    for k in range(pt_node.shape[0]):
        Y[pt_node[k], pt_node[k]] += 1.0 / pt_z[k]
    return Y


def log_characteristic(omega, n, tl_a, tl_b, tl_len, tl_L, tl_C, tl_R, tl_G,
                       lp_a, lp_b, lp_kind, lp_val, pt_node, pt_z):
    """log of det(Y_terminated) * prod(sinh(gamma_k l_k)), an entire function of omega
    whose zeros are the natural frequencies of the port-terminated network."""
    Y = assemble_terminated(omega, n, tl_a, tl_b, tl_len, tl_L, tl_C, tl_R, tl_G,
                            lp_a, lp_b, lp_kind, lp_val, pt_node, pt_z)
    sign, logabs = np.linalg.slogdet(Y)
    if sign == 0:
        return complex(-np.inf, 0.0)
    out = cmath.log(sign) + logabs
    for k in range(tl_a.shape[0]):
        gamma, _ = _prop(omega, tl_L[k], tl_C[k], tl_R[k], tl_G[k])
        out += cmath.log(cmath.sinh(gamma * tl_len[k]))
    return out


def sweep_port_impedance(omegas, n, tl_a, tl_b, tl_len, tl_L, tl_C, tl_R, tl_G,
                         lp_a, lp_b, lp_kind, lp_val, pt_node, pt_z):
    """Port impedance matrices Z_p (F, P, P) of the terminated network.

    Returns (Zp, flags); flags[i] is 1 where the matrix was singular and the
    frequency was nudged by +i*1e-9*omega before re-solving.
    """
    F = omegas.shape[0]
    P = pt_node.shape[0]
    Zp = np.zeros((F, P, P), dtype=np.complex128)
    flags = np.zeros(F, dtype=np.int64)
    E = np.zeros((n, P), dtype=np.complex128)
    for j in range(P):
        E[pt_node[j], j] = 1.0
    for i in range(F):
        w = omegas[i]
        Y = assemble_terminated(w, n, tl_a, tl_b, tl_len, tl_L, tl_C, tl_R, tl_G,
                                lp_a, lp_b, lp_kind, lp_val, pt_node, pt_z)
        if not np.all(np.isfinite(Y)) or np.linalg.cond(Y) > 1e15:
            flags[i] = 1
            w = w + 1j * 1e-9 * w
            Y = assemble_terminated(w, n, tl_a, tl_b, tl_len, tl_L, tl_C, tl_R, tl_G,
                                    lp_a, lp_b, lp_kind, lp_val, pt_node, pt_z)
        X = np.linalg.solve(Y, E)
        for a in range(P):
            for b in range(P):
                Zp[i, a, b] = X[pt_node[a], b]
    return Zp, flags


# ---------------------------------------------------------------------------
# numpy path: vectorised over the frequency axis


def tline_y_np(omega, length, L, C, R, G):
    omega = np.asarray(omega, dtype=np.complex128)
    jw = 1j * omega
    with np.errstate(divide="ignore", invalid="ignore"):
        zs = 1.0 + R / (jw * L)
        yp = 1.0 + G / (jw * C)
    gamma = jw * np.sqrt(L * C) * np.sqrt(zs * yp)
    y0 = np.sqrt(C / L) * np.sqrt(yp / zs)
    z = gamma * length
    s = np.sinh(z)
    near = np.abs(s) < SERIES_SWITCH
    with np.errstate(divide="ignore", invalid="ignore"):
        coth = np.cosh(z) / s
        csch = 1.0 / s
    if np.any(near):
        zn = z[near]
        nn = np.round(zn.imag / np.pi)
        eps = zn - 1j * np.pi * nn
        e2 = eps * eps
        with np.errstate(divide="ignore", invalid="ignore"):
            coth[near] = 1.0 / eps + eps / 3.0 - eps * e2 / 45.0
            sign = np.where(nn % 2 != 0, -1.0, 1.0)
            csch[near] = sign * (1.0 / eps - eps / 6.0 + 7.0 * eps * e2 / 360.0)
        exact = eps == 0
        if np.any(exact):
            idx = np.flatnonzero(near)[exact]
            coth[idx] = np.inf
            csch[idx] = np.inf
    with np.errstate(invalid="ignore"):
        return y0 * coth, -y0 * csch


def assemble_np(omegas, n, tl_a, tl_b, tl_len, tl_L, tl_C, tl_R, tl_G, lp_a, lp_b, lp_kind, lp_val):
    omegas = np.atleast_1d(np.asarray(omegas, dtype=np.complex128))
    Y = np.zeros((omegas.shape[0], n, n), dtype=np.complex128)
    for k in range(len(tl_a)):
        y11, y12 = tline_y_np(omegas, tl_len[k], tl_L[k], tl_C[k], tl_R[k], tl_G[k])
        a, b = tl_a[k], tl_b[k]
        if a >= 0:
            Y[:, a, a] += y11
        if b >= 0:
            Y[:, b, b] += y11
        if a >= 0 and b >= 0:
            Y[:, a, b] += y12
            Y[:, b, a] += y12
    for k in range(len(lp_a)):
        kind = lp_kind[k]
        if kind == KIND_C:
            y = 1j * omegas * lp_val[k]
        elif kind == KIND_L:
            y = 1.0 / (1j * omegas * lp_val[k])
        else:
            y = np.full(omegas.shape, 1.0 / lp_val[k], dtype=np.complex128)
        a, b = lp_a[k], lp_b[k]
        if a >= 0:
            Y[:, a, a] += y
        if b >= 0:
            Y[:, b, b] += y
        if a >= 0 and b >= 0:
            Y[:, a, b] -= y
            Y[:, b, a] -= y
    return Y


def assemble_terminated_np(omegas, n, tl_a, tl_b, tl_len, tl_L, tl_C, tl_R, tl_G,
                           lp_a, lp_b, lp_kind, lp_val, pt_node, pt_z):
    Y = assemble_np(omegas, n, tl_a, tl_b, tl_len, tl_L, tl_C, tl_R, tl_G, lp_a, lp_b, lp_kind, lp_val)
    for k in range(len(pt_node)):
        Y[:, pt_node[k], pt_node[k]] += 1.0 / pt_z[k]
    return Y


def sweep_port_impedance_np(omegas, n, tl_a, tl_b, tl_len, tl_L, tl_C, tl_R, tl_G,
                            lp_a, lp_b, lp_kind, lp_val, pt_node, pt_z):
    omegas = np.asarray(omegas, dtype=np.complex128)
    args = (n, tl_a, tl_b, tl_len, tl_L, tl_C, tl_R, tl_G, lp_a, lp_b, lp_kind, lp_val, pt_node, pt_z)
    Y = assemble_terminated_np(omegas, *args)
    flags = np.zeros(omegas.shape[0], dtype=np.int64)
    with np.errstate(invalid="ignore"):
        bad = ~np.all(np.isfinite(Y), axis=(1, 2))
        ok = ~bad
        if np.any(ok):
            bad[ok] = np.linalg.cond(Y[ok]) > 1e15
    if np.any(bad):
        flags[bad] = 1
        w = omegas[bad] + 1j * 1e-9 * omegas[bad]
        Y[bad] = assemble_terminated_np(w, *args)
    P = len(pt_node)
    E = np.zeros((n, P), dtype=np.complex128)
    E[pt_node, np.arange(P)] = 1.0
    X = np.linalg.solve(Y, np.broadcast_to(E, (omegas.shape[0], n, P)))
    return X[:, pt_node, :], flags


def log_characteristic_np(omega, n, tl_a, tl_b, tl_len, tl_L, tl_C, tl_R, tl_G,
                          lp_a, lp_b, lp_kind, lp_val, pt_node, pt_z):
    Y = assemble_terminated_np(np.array([omega]), n, tl_a, tl_b, tl_len, tl_L, tl_C, tl_R, tl_G,
                               lp_a, lp_b, lp_kind, lp_val, pt_node, pt_z)[0]
    sign, logabs = np.linalg.slogdet(Y)
    if sign == 0:
        return complex(-np.inf, 0.0)
    out = complex(np.log(sign)) + float(logabs)
    for k in range(len(tl_a)):
        gamma, _ = _prop_py(complex(omega), tl_L[k], tl_C[k], tl_R[k], tl_G[k])
        out += cmath.log(cmath.sinh(gamma * tl_len[k]))
    return out


# ---------------------------------------------------------------------------
# dispatch

_prop_py = _prop

if HAVE_NUMBA:
    _prop_nb = njit(cache=True)(_prop)
    _coth_csch_nb = njit(cache=True)(_coth_csch)

    # Rebind module-level helpers so the compiled callers resolve compiled callees.
    _prop = _prop_nb
    _coth_csch = _coth_csch_nb
    tline_y_nb = njit(cache=True)(tline_y)
    tline_y = tline_y_nb
    assemble_nb = njit(cache=True)(assemble)
    assemble = assemble_nb
    assemble_terminated_nb = njit(cache=True)(assemble_terminated)
    assemble_terminated = assemble_terminated_nb
    log_characteristic_nb = njit(cache=True)(log_characteristic)
    sweep_port_impedance_nb = njit(cache=True, nogil=True)(sweep_port_impedance)
else:  # pragma: no cover
    tline_y_nb = assemble_nb = assemble_terminated_nb = None
    log_characteristic_nb = sweep_port_impedance_nb = None


def set_backend(use_numba: bool) -> None:
    """Switch between the compiled and numpy kernels at runtime."""
    global USE_NUMBA
    if use_numba and not HAVE_NUMBA:
        raise RuntimeError("numba is not available (or disabled by NANORES_DISABLE_NUMBA)")
    USE_NUMBA = bool(use_numba)


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"


def port_impedance_sweep(omegas, *args):
    if USE_NUMBA:
        return sweep_port_impedance_nb(np.ascontiguousarray(omegas, dtype=np.complex128), *args)
    return sweep_port_impedance_np(omegas, *args)


def characteristic_log(omega, *args):
    if USE_NUMBA:
        return log_characteristic_nb(complex(omega), *args)
    return log_characteristic_np(complex(omega), *args)


def scalar_tline_y(omega, length, L, C, R, G):
    if USE_NUMBA:
        return tline_y_nb(complex(omega), float(length), float(L), float(C), float(R), float(G))
    y11, y12 = tline_y_np(np.array([omega]), length, L, C, R, G)
    return complex(y11[0]), complex(y12[0])


def nodal_matrix(omega, *args):
    if USE_NUMBA:
        return assemble_nb(complex(omega), *args)
    return assemble_np(np.array([omega]), *args)[0]
