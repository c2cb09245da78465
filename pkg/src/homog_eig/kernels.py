"""Hot numeric kernels.

Every kernel exists twice: ``*_jit`` (numba) and ``*_py`` (plain python or
vectorised numpy). The public alias without suffix picks one according to
``HOMOG_EIG_NUMBA``. Both paths compute the same quantities to roundoff.
"""
import math

import numpy as np

from ._accel import choose, njit

# status codes returned by the shooting kernel
OK = 0
STEP_UNDERFLOW = 1
BLOW_UP = 2
MAX_STEPS = 3

# Dormand-Prince 5(4) tableau
_C2, _C3, _C4, _C5 = 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0
_A21 = 1.0 / 5.0
_A31, _A32 = 3.0 / 40.0, 9.0 / 40.0
_A41, _A42, _A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
_A51, _A52, _A53, _A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
_A61, _A62, _A63, _A64, _A65 = (9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0,
                                49.0 / 176.0, -5103.0 / 18656.0)
_B1, _B3, _B4, _B5, _B6 = 35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0
_E1, _E3, _E4, _E5, _E6, _E7 = (71.0 / 57600.0, -71.0 / 16695.0, 71.0 / 1920.0,
                                -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0)


def _weight_at(y, kind, const, freqs, acos, asin, vals):
    """Evaluate an encoded 1-D periodic weight at y (already divided by eps)."""
    if kind == 1:
        m = vals.shape[0]
        f = y - math.floor(y)
        j = int(f * m)
        if j >= m:
            j = m - 1
        return vals[j]
    s = const
    for i in range(freqs.shape[0]):
        ph = 2.0 * math.pi * freqs[i] * y
        s += acos[i] * math.cos(ph) + asin[i] * math.sin(ph)
    return s


_weight_at_jit = njit(_weight_at)


def _make_shoot(weight_at):
    def shoot(p, lam, segs, inv_eps,
              r_kind, r_const, r_freqs, r_acos, r_asin, r_vals,
              c_kind, c_const, c_freqs, c_acos, c_asin, c_vals,
              rtol, hmax, max_steps, renorm,
              rec_x, rec_u, rec_ls, zeros):
        """Integrate u' = phi_q(w/c), w' = -lam rho(x/eps) phi_p(u) from (0, 1).

        ``c`` is the 1-D diffusion A(x)^(p/2); ``q = p/(p-1)``. Returns
        (status, x, u, w, zero_count, n_steps, n_rec, log_scale, n_zeros,
        last_zero); zeros beyond ``len(zeros)`` are counted but not stored.
        """
        q1 = 1.0 / (p - 1.0)
        half_p = 0.5 * p
        x0 = segs[0]
        u = 0.0
        w = 1.0
        umax = 0.0
        wmax = 1.0
        log_scale = 0.0
        count = 0
        last_sign = 1.0
        n_steps = 0
        n_rec = 0
        n_zeros = 0
        last_zero = -1.0
        nrec_cap = rec_x.shape[0]
        nz_cap = zeros.shape[0]
        length = segs[segs.shape[0] - 1] - x0
        h = min(length * 1e-3, hmax)
        hmin = length * 1e-15
        x = x0
        if nrec_cap > 0:
            rec_x[0] = x
            rec_u[0] = u
            rec_ls[0] = 0.0
            n_rec = 1
        for si in range(segs.shape[0] - 1):
            a = segs[si]
            b = segs[si + 1]
            xm = 0.5 * (a + b)
            rho_seg = 0.0
            if r_kind == 1:
                rho_seg = weight_at(xm * inv_eps, r_kind, r_const, r_freqs, r_acos, r_asin, r_vals)
            cseg = 0.0
            if c_kind == 1:
                cseg = weight_at(xm, c_kind, c_const, c_freqs, c_acos, c_asin, c_vals) ** half_p
            elif c_kind == 2:
                cseg = c_const ** half_p
            x = a
            if h > b - a:
                h = b - a
            # k1 at segment start (coefficients may jump here)
            rr = rho_seg if r_kind == 1 else weight_at(x * inv_eps, r_kind, r_const, r_freqs,
                                                      r_acos, r_asin, r_vals)
            cc = cseg if c_kind != 0 else weight_at(x, c_kind, c_const, c_freqs, c_acos,
                                                   c_asin, c_vals) ** half_p
            t = w / cc
            k1u = math.copysign(abs(t) ** q1, t)
            k1w = -lam * rr * math.copysign(abs(u) ** (p - 1.0), u)
            while x < b:
                if n_steps >= max_steps:
                    return (MAX_STEPS, x, u, w, count, n_steps, n_rec, log_scale, n_zeros, last_zero)
                last = False
                if x + h >= b:
                    h = b - x
                    last = True
                # stage 2
                xs = x + _C2 * h
                us = u + h * (_A21 * k1u)
                ws = w + h * (_A21 * k1w)
                rr = rho_seg if r_kind == 1 else weight_at(xs * inv_eps, r_kind, r_const, r_freqs,
                                                          r_acos, r_asin, r_vals)
                cc = cseg if c_kind != 0 else weight_at(xs, c_kind, c_const, c_freqs, c_acos,
                                                       c_asin, c_vals) ** half_p
                t = ws / cc
                k2u = math.copysign(abs(t) ** q1, t)
                k2w = -lam * rr * math.copysign(abs(us) ** (p - 1.0), us)
                # stage 3
                xs = x + _C3 * h
                us = u + h * (_A31 * k1u + _A32 * k2u)
                ws = w + h * (_A31 * k1w + _A32 * k2w)
                rr = rho_seg if r_kind == 1 else weight_at(xs * inv_eps, r_kind, r_const, r_freqs,
                                                          r_acos, r_asin, r_vals)
                cc = cseg if c_kind != 0 else weight_at(xs, c_kind, c_const, c_freqs, c_acos,
                                                       c_asin, c_vals) ** half_p
                t = ws / cc
                k3u = math.copysign(abs(t) ** q1, t)
                k3w = -lam * rr * math.copysign(abs(us) ** (p - 1.0), us)
                # stage 4
                xs = x + _C4 * h
                us = u + h * (_A41 * k1u + _A42 * k2u + _A43 * k3u)
                ws = w + h * (_A41 * k1w + _A42 * k2w + _A43 * k3w)
                rr = rho_seg if r_kind == 1 else weight_at(xs * inv_eps, r_kind, r_const, r_freqs,
                                                          r_acos, r_asin, r_vals)
                cc = cseg if c_kind != 0 else weight_at(xs, c_kind, c_const, c_freqs, c_acos,
                                                       c_asin, c_vals) ** half_p
                t = ws / cc
                k4u = math.copysign(abs(t) ** q1, t)
                k4w = -lam * rr * math.copysign(abs(us) ** (p - 1.0), us)
                # stage 5
                xs = x + _C5 * h
                us = u + h * (_A51 * k1u + _A52 * k2u + _A53 * k3u + _A54 * k4u)
                ws = w + h * (_A51 * k1w + _A52 * k2w + _A53 * k3w + _A54 * k4w)
                rr = rho_seg if r_kind == 1 else weight_at(xs * inv_eps, r_kind, r_const, r_freqs,
                                                          r_acos, r_asin, r_vals)
                cc = cseg if c_kind != 0 else weight_at(xs, c_kind, c_const, c_freqs, c_acos,
                                                       c_asin, c_vals) ** half_p
                t = ws / cc
                k5u = math.copysign(abs(t) ** q1, t)
                k5w = -lam * rr * math.copysign(abs(us) ** (p - 1.0), us)
                # stage 6
                xs = x + h
                us = u + h * (_A61 * k1u + _A62 * k2u + _A63 * k3u + _A64 * k4u + _A65 * k5u)
                ws = w + h * (_A61 * k1w + _A62 * k2w + _A63 * k3w + _A64 * k4w + _A65 * k5w)
                rr = rho_seg if r_kind == 1 else weight_at(xs * inv_eps, r_kind, r_const, r_freqs,
                                                          r_acos, r_asin, r_vals)
                cc = cseg if c_kind != 0 else weight_at(xs, c_kind, c_const, c_freqs, c_acos,
                                                       c_asin, c_vals) ** half_p
                t = ws / cc
                k6u = math.copysign(abs(t) ** q1, t)
                k6w = -lam * rr * math.copysign(abs(us) ** (p - 1.0), us)
                # 5th order solution
                un = u + h * (_B1 * k1u + _B3 * k3u + _B4 * k4u + _B5 * k5u + _B6 * k6u)
                wn = w + h * (_B1 * k1w + _B3 * k3w + _B4 * k4w + _B5 * k5w + _B6 * k6w)
                # stage 7 (FSAL)
                t = wn / cc
                k7u = math.copysign(abs(t) ** q1, t)
                k7w = -lam * rr * math.copysign(abs(un) ** (p - 1.0), un)
                eu = h * (_E1 * k1u + _E3 * k3u + _E4 * k4u + _E5 * k5u + _E6 * k6u + _E7 * k7u)
                ew = h * (_E1 * k1w + _E3 * k3w + _E4 * k4w + _E5 * k5w + _E6 * k6w + _E7 * k7w)
                su = rtol * max(abs(u), abs(un), umax) + 1e-300
                sw = rtol * max(abs(w), abs(wn), wmax) + 1e-300
                err = max(abs(eu) / su, abs(ew) / sw)
                if not (err == err) or not math.isfinite(un) or not math.isfinite(wn):
                    if h > hmin:
                        h *= 0.25
                        continue
                    return (BLOW_UP, x, u, w, count, n_steps, n_rec, log_scale, n_zeros, last_zero)
                if err <= 1.0:
                    n_steps += 1
                    xn = b if last else x + h
                    sn = 0.0
                    if un > 0.0:
                        sn = 1.0
                    elif un < 0.0:
                        sn = -1.0
                    if sn != 0.0 and sn != last_sign:
                        count += 1
                        last_sign = sn
                        # bisection on the cubic Hermite interpolant of u
                        lo = 0.0
                        hi = 1.0
                        ulo = u
                        for _ in range(60):
                            mid = 0.5 * (lo + hi)
                            s2 = mid * mid
                            s3 = s2 * mid
                            um = ((2 * s3 - 3 * s2 + 1) * u + (s3 - 2 * s2 + mid) * h * k1u
                                  + (-2 * s3 + 3 * s2) * un + (s3 - s2) * h * k7u)
                            if (um > 0.0) == (ulo > 0.0) and um != 0.0:
                                lo = mid
                            else:
                                hi = mid
                            if (hi - lo) * h < 1e-13:
                                break
                        last_zero = x + 0.5 * (lo + hi) * h
                        if n_zeros < nz_cap:
                            zeros[n_zeros] = last_zero
                            n_zeros += 1
                    x = xn
                    u = un
                    w = wn
                    k1u = k7u
                    k1w = k7w
                    if abs(u) > umax:
                        umax = abs(u)
                    if abs(w) > wmax:
                        wmax = abs(w)
                    nrm = abs(u) + abs(w) ** q1
                    if renorm and (nrm > 1e6 or (nrm < 1e-6 and nrm > 0.0)):
                        s = 1.0 / nrm
                        sp = s ** (p - 1.0)
                        u *= s
                        w *= sp
                        k1u *= s
                        k1w *= sp
                        umax *= s
                        wmax *= sp
                        log_scale += math.log(s)
                    elif not renorm and abs(u) + abs(w) > 1e12:
                        return (BLOW_UP, x, u, w, count, n_steps, n_rec, log_scale, n_zeros, last_zero)
                    if n_rec < nrec_cap:
                        rec_x[n_rec] = x
                        rec_u[n_rec] = u
                        rec_ls[n_rec] = log_scale
                        n_rec += 1
                    fac = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
                    if not last:
                        h = min(h * fac, hmax)
                else:
                    h *= max(0.2, 0.9 * err ** -0.2)
                    if h < hmin:
                        return (STEP_UNDERFLOW, x, u, w, count, n_steps, n_rec, log_scale, n_zeros, last_zero)
        return (OK, x, u, w, count, n_steps, n_rec, log_scale, n_zeros, last_zero)

    return shoot


shoot_py = _make_shoot(_weight_at)
shoot_jit = njit(_make_shoot(_weight_at_jit))
shoot = choose(shoot_jit, shoot_py)


# -- energy kernels ------------------------------------------------------------
#
# Energy E(u) = sum_cells |cell| / Q * sum_corners Phi(A_c, xi_corner), with
# xi_corner built from the two cell-edge differences meeting at that corner
# (Q = 1 corner in 1-D, 4 in 2-D). Phi = (xi.A xi)^(p/2).

def energy_grad_1d_py(uf, h, a11, p):
    """Energy and gradient w.r.t. the full nodal vector ``uf`` (1-D)."""
    d = np.diff(uf) / h
    q = a11 * d * d
    e = h * np.sum(q ** (0.5 * p))
    with np.errstate(divide="ignore", invalid="ignore"):
        fac = np.where(q > 0, p * q ** (0.5 * p - 1.0), 0.0) * a11 * d
    g = np.zeros_like(uf)
    g[1:] += fac
    g[:-1] -= fac
    return e, g


def _energy_grad_1d(uf, h, a11, p):
    n = uf.shape[0]
    g = np.zeros(n)
    e = 0.0
    for i in range(n - 1):
        d = (uf[i + 1] - uf[i]) / h
        q = a11[i] * d * d
        if q > 0.0:
            e += h * q ** (0.5 * p)
            f = p * q ** (0.5 * p - 1.0) * a11[i] * d
            g[i + 1] += f
            g[i] -= f
    return e, g


energy_grad_1d_jit = njit(_energy_grad_1d)
energy_grad_1d = choose(energy_grad_1d_jit, energy_grad_1d_py)


def energy_grad_2d_py(uf, hx, hy, a11, a12, a22, p):
    """Energy and gradient w.r.t. the full nodal array ``uf`` (nx, ny)."""
    hxe = (uf[1:, :] - uf[:-1, :]) / hx
    vye = (uf[:, 1:] - uf[:, :-1]) / hy
    hb, ht = hxe[:, :-1], hxe[:, 1:]
    vl, vr = vye[:-1, :], vye[1:, :]
    wq = 0.25 * hx * hy
    e = 0.0
    ghx = np.zeros_like(hxe)
    gvy = np.zeros_like(vye)
    for s, t, hs, vs in ((hb, vl, np.s_[:, :-1], np.s_[:-1, :]),
                         (hb, vr, np.s_[:, :-1], np.s_[1:, :]),
                         (ht, vl, np.s_[:, 1:], np.s_[:-1, :]),
                         (ht, vr, np.s_[:, 1:], np.s_[1:, :])):
        q = a11 * s * s + 2.0 * a12 * s * t + a22 * t * t
        e += wq * np.sum(q ** (0.5 * p))
        with np.errstate(divide="ignore", invalid="ignore"):
            fac = np.where(q > 0, p * q ** (0.5 * p - 1.0), 0.0)
        ghx[hs] += wq * fac * (a11 * s + a12 * t)
        gvy[vs] += wq * fac * (a12 * s + a22 * t)
    g = np.zeros_like(uf)
    g[1:, :] += ghx / hx
    g[:-1, :] -= ghx / hx
    g[:, 1:] += gvy / hy
    g[:, :-1] -= gvy / hy
    return e, g


def _energy_grad_2d(uf, hx, hy, a11, a12, a22, p):
    nx, ny = uf.shape
    g = np.zeros((nx, ny))
    e = 0.0
    wq = 0.25 * hx * hy
    for i in range(nx - 1):
        for j in range(ny - 1):
            hb = (uf[i + 1, j] - uf[i, j]) / hx
            ht = (uf[i + 1, j + 1] - uf[i, j + 1]) / hx
            vl = (uf[i, j + 1] - uf[i, j]) / hy
            vr = (uf[i + 1, j + 1] - uf[i + 1, j]) / hy
            b11 = a11[i, j]
            b12 = a12[i, j]
            b22 = a22[i, j]
            ghb = 0.0
            ght = 0.0
            gvl = 0.0
            gvr = 0.0
            for c in range(4):
                s = hb if c < 2 else ht
                t = vl if c % 2 == 0 else vr
                q = b11 * s * s + 2.0 * b12 * s * t + b22 * t * t
                if q > 0.0:
                    e += wq * q ** (0.5 * p)
                    fac = wq * p * q ** (0.5 * p - 1.0)
                    fs = fac * (b11 * s + b12 * t)
                    ft = fac * (b12 * s + b22 * t)
                    if c < 2:
                        ghb += fs
                    else:
                        ght += fs
                    if c % 2 == 0:
                        gvl += ft
                    else:
                        gvr += ft
            g[i + 1, j] += ghb / hx
            g[i, j] -= ghb / hx
            g[i + 1, j + 1] += ght / hx
            g[i, j + 1] -= ght / hx
            g[i, j + 1] += gvl / hy
            g[i, j] -= gvl / hy
            g[i + 1, j + 1] += gvr / hy
            g[i + 1, j] -= gvr / hy
    return e, g


energy_grad_2d_jit = njit(_energy_grad_2d)
energy_grad_2d = choose(energy_grad_2d_jit, energy_grad_2d_py)
