"""Scalar hot loops for trajectory integration.

Scenarios built from canonical shapes are packed into flat float arrays and
stepped by the compiled kernels below (numba when enabled, plain Python
otherwise; see _accel).  The object layer in blending/fields is the
reference implementation; these kernels mirror its formulas operation for
operation and are cross-checked against it in the test suite.

Shape parameter layouts (see shapes._packed_params):
  circle          [cx, cy, R]
  rotated-ellipse [cx, cy, a, b, beta]
  cassini         [x1, y1, x2, y2, b4]
  sinusoid-curve  [amp, freq, phase, offset]
  quartic-blob    [cx, cy, level]
  plane           [nx, ny, nz, d]
  sphere          [cx, cy, cz, R]
  rbf-surface     [N, x1, y1, z1, ..., w1, ..., wN]
"""

import math

import numpy as np

from ._accel import jit_kernel

# kind codes, fixed by shapes.KIND_CODES
K_CIRCLE = 0
K_ELLIPSE = 1
K_CASSINI = 2
K_SINUSOID = 3
K_QUARTIC = 4
K_PLANE = 5
K_SPHERE = 6
K_RBF = 7

# model codes
M_SI2 = 0
M_SI3 = 1
M_DUBINS2 = 2
M_DUBINS3 = 3

# termination codes
T_HORIZON = 0
T_DIVERGENCE = 1
T_SINGULARITY = 2
T_EVENT_OVERFLOW = 3

_EXP_FLOOR = -700.0


@jit_kernel
def _eval(kind, par, x, y, z):
    if kind == K_CIRCLE:
        return (x - par[0]) ** 2 + (y - par[1]) ** 2 - par[2] ** 2
    if kind == K_ELLIPSE:
        cb = math.cos(par[4])
        sb = math.sin(par[4])
        dx = x - par[0]
        dy = y - par[1]
        u = dx * cb + dy * sb
        v = dx * sb - dy * cb
        return u * u / par[2] ** 2 + v * v / par[3] ** 2 - 1.0
    if kind == K_CASSINI:
        A = (x - par[0]) ** 2 + (y - par[1]) ** 2
        B = (x - par[2]) ** 2 + (y - par[3]) ** 2
        return A * B - par[4]
    if kind == K_SINUSOID:
        return y - par[0] * math.sin(par[1] * x + par[2]) - par[3]
    if kind == K_QUARTIC:
        dx = x - par[0]
        dy = y - par[1]
        return 2 * dx ** 4 + 2 * dy ** 4 - 3 * dx ** 2 * dy ** 2 - par[2]
    if kind == K_PLANE:
        return x * par[0] + y * par[1] + z * par[2] - par[3]
    if kind == K_SPHERE:
        return ((x - par[0]) ** 2 + (y - par[1]) ** 2 + (z - par[2]) ** 2
                - par[3] ** 2)
    if kind == K_RBF:
        n = int(par[0])
        acc = -1.0
        for k in range(n):
            dx = x - par[1 + 3 * k]
            dy = y - par[2 + 3 * k]
            dz = z - par[3 + 3 * k]
            r = math.sqrt(dx * dx + dy * dy + dz * dz)
            acc += par[1 + 3 * n + k] * r * r * math.log1p(r)
        return acc
    return math.nan


@jit_kernel
def _grad(kind, par, x, y, z):
    if kind == K_CIRCLE:
        return 2 * (x - par[0]), 2 * (y - par[1]), 0.0
    if kind == K_ELLIPSE:
        cb = math.cos(par[4])
        sb = math.sin(par[4])
        dx = x - par[0]
        dy = y - par[1]
        u = dx * cb + dy * sb
        v = dx * sb - dy * cb
        gu = 2 * u / par[2] ** 2
        gv = 2 * v / par[3] ** 2
        return gu * cb + gv * sb, gu * sb - gv * cb, 0.0
    if kind == K_CASSINI:
        ux = x - par[0]
        uy = y - par[1]
        wx = x - par[2]
        wy = y - par[3]
        A = ux * ux + uy * uy
        B = wx * wx + wy * wy
        return 2 * ux * B + 2 * wx * A, 2 * uy * B + 2 * wy * A, 0.0
    if kind == K_SINUSOID:
        return -par[0] * par[1] * math.cos(par[1] * x + par[2]), 1.0, 0.0
    if kind == K_QUARTIC:
        dx = x - par[0]
        dy = y - par[1]
        return (8 * dx ** 3 - 6 * dx * dy ** 2,
                8 * dy ** 3 - 6 * dx ** 2 * dy, 0.0)
    if kind == K_PLANE:
        return par[0], par[1], par[2]
    if kind == K_SPHERE:
        return 2 * (x - par[0]), 2 * (y - par[1]), 2 * (z - par[2])
    if kind == K_RBF:
        n = int(par[0])
        gx = 0.0
        gy = 0.0
        gz = 0.0
        for k in range(n):
            dx = x - par[1 + 3 * k]
            dy = y - par[2 + 3 * k]
            dz = z - par[3 + 3 * k]
            r = math.sqrt(dx * dx + dy * dy + dz * dz)
            g = par[1 + 3 * n + k] * (2.0 * math.log1p(r) + r / (r + 1.0))
            gx += g * dx
            gy += g * dy
            gz += g * dz
        return gx, gy, gz
    return math.nan, math.nan, math.nan


@jit_kernel
def _bump(phi, c, l1, l2):
    if phi > c:
        e1 = l1 / (c - phi)
        f1 = math.exp(e1) if e1 > _EXP_FLOOR else 0.0
    else:
        f1 = 0.0
    if phi < 0.0:
        e2 = l2 / phi
        f2 = math.exp(e2) if e2 > _EXP_FLOOR else 0.0
    else:
        f2 = 0.0
    den = f1 + f2
    if den == 0.0:  # both exponents underflowed deep in the mixed band
        return 0.5, 0.5
    S = f1 / den
    return S, 1.0 - S


@jit_kernel
def _chi2(sigma, t, x, y,
          pk, pp, pgain, pgamma,
          okind, opar, oc, ol1, ol2, okr, ogamma, orate, ovel,
          raw_moving, sw_delta):
    """2D switched/composite field value; returns (u, v, ok)."""
    if sigma == 2:
        xs = x - ovel[0, 0] * t
        ys = y - ovel[0, 1] * t
        gx, gy, _ = _grad(okind[0], opar[0], xs, ys, 0.0)
        ph = _eval(okind[0], opar[0], xs, ys, 0.0) - sw_delta
        g = ogamma[0]
        return (-g * gy - okr[0] * ph * gx, g * gx - okr[0] * ph * gy, True)
    sprod = 1.0
    tu = 0.0
    tv = 0.0
    for i in range(okind.shape[0]):
        xs = x - ovel[i, 0] * t
        ys = y - ovel[i, 1] * t
        ph = _eval(okind[i], opar[i], xs, ys, 0.0)
        S, Z = _bump(ph, oc[i], ol1[i], ol2[i])
        sprod *= S
        if Z > 0.0:
            gx, gy, _ = _grad(okind[i], opar[i], xs, ys, 0.0)
            if raw_moving:
                gg = gx * gx + gy * gy
                if gg == 0.0:
                    return 0.0, 0.0, False
                dphidt = -(ovel[i, 0] * gx + ovel[i, 1] * gy)
                sc = (-dphidt - orate[i] * ph) / gg
                ru = -gy - okr[i] * ph * gx + sc * gx
                rv = gx - okr[i] * ph * gy + sc * gy
            else:
                g = ogamma[i]
                ru = -g * gy - okr[i] * ph * gx
                rv = g * gx - okr[i] * ph * gy
                nrm = math.sqrt(ru * ru + rv * rv)
                if nrm == 0.0:
                    return 0.0, 0.0, False
                ru /= nrm
                rv /= nrm
            tu += Z * ru
            tv += Z * rv
    if sprod > 0.0:
        php = _eval(pk[0], pp[0], x, y, 0.0)
        gx, gy, _ = _grad(pk[0], pp[0], x, y, 0.0)
        pu = -pgamma * gy - pgain[0] * php * gx
        pv = pgamma * gx - pgain[0] * php * gy
        if not raw_moving:
            nrm = math.sqrt(pu * pu + pv * pv)
            if nrm == 0.0:
                return 0.0, 0.0, False
            pu /= nrm
            pv /= nrm
        tu += sprod * pu
        tv += sprod * pv
    return tu, tv, True


@jit_kernel
def _chi3(t, x, y, z,
          pk, pp, pgain,
          okind, opar, oc, ol1, ol2, okr, obyp, ovel):
    """3D composite field value; returns (u, v, w, ok)."""
    sprod = 1.0
    tu = 0.0
    tv = 0.0
    tw = 0.0
    for i in range(okind.shape[0]):
        xs = x - ovel[i, 0] * t
        ys = y - ovel[i, 1] * t
        zs = z - ovel[i, 2] * t
        ph = _eval(okind[i], opar[i], xs, ys, zs)
        S, Z = _bump(ph, oc[i], ol1[i], ol2[i])
        sprod *= S
        if Z > 0.0:
            gx, gy, gz = _grad(okind[i], opar[i], xs, ys, zs)
            bx = obyp[i, 0]
            by = obyp[i, 1]
            bz = obyp[i, 2]
            ru = (gy * bz - gz * by) - okr[i] * ph * gx
            rv = (gz * bx - gx * bz) - okr[i] * ph * gy
            rw = (gx * by - gy * bx) - okr[i] * ph * gz
            nrm = math.sqrt(ru * ru + rv * rv + rw * rw)
            if nrm == 0.0:
                return 0.0, 0.0, 0.0, False
            tu += Z * ru / nrm
            tv += Z * rv / nrm
            tw += Z * rw / nrm
    if sprod > 0.0:
        p1 = _eval(pk[0], pp[0], x, y, z)
        g1x, g1y, g1z = _grad(pk[0], pp[0], x, y, z)
        p2 = _eval(pk[1], pp[1], x, y, z)
        g2x, g2y, g2z = _grad(pk[1], pp[1], x, y, z)
        pu = (g1y * g2z - g1z * g2y) - pgain[0] * p1 * g1x - pgain[1] * p2 * g2x
        pv = (g1z * g2x - g1x * g2z) - pgain[0] * p1 * g1y - pgain[1] * p2 * g2y
        pw = (g1x * g2y - g1y * g2x) - pgain[0] * p1 * g1z - pgain[1] * p2 * g2z
        nrm = math.sqrt(pu * pu + pv * pv + pw * pw)
        if nrm == 0.0:
            return 0.0, 0.0, 0.0, False
        tu += sprod * pu / nrm
        tv += sprod * pv / nrm
        tw += sprod * pw / nrm
    return tu, tv, tw, True


@jit_kernel
def _region_phi_2d(t, x, y, pk, pp, okind, opar, oc, ovel):
    """(path error value, region code) at one 2D sample; region code is
    0 outside all reactive areas, i+1 in obstacle i's mixed band, -(i+1)
    inside its closed repulsive area."""
    region = 0
    for i in range(okind.shape[0]):
        xs = x - ovel[i, 0] * t
        ys = y - ovel[i, 1] * t
        ph = _eval(okind[i], opar[i], xs, ys, 0.0)
        if ph <= oc[i]:
            region = -(i + 1)
            break
        if ph < 0.0:
            region = i + 1
            break
    return _eval(pk[0], pp[0], x, y, 0.0), region


@jit_kernel
def _region_phi_3d(t, x, y, z, pk, pp, okind, opar, oc, ovel):
    region = 0
    for i in range(okind.shape[0]):
        xs = x - ovel[i, 0] * t
        ys = y - ovel[i, 1] * t
        zs = z - ovel[i, 2] * t
        ph = _eval(okind[i], opar[i], xs, ys, zs)
        if ph <= oc[i]:
            region = -(i + 1)
            break
        if ph < 0.0:
            region = i + 1
            break
    e1 = abs(_eval(pk[0], pp[0], x, y, z))
    e2 = abs(_eval(pk[1], pp[1], x, y, z))
    return max(e1, e2), region


@jit_kernel
def _wrap_angle(a):
    return (a + math.pi) % (2.0 * math.pi) - math.pi


@jit_kernel
def integrate_2d(x0, y0, th0, nsteps, dt,
                 mkind, ms, mktheta,
                 pk, pp, pgain, pgamma,
                 okind, opar, oc, ol1, ol2, okr, ogamma, orate, ovel,
                 raw_moving,
                 sw_enabled, sw_delta, sw_eps, sw_eqlevel, sw_epso, sw_exit,
                 out_state, out_sigma, out_region, out_phi, out_fnorm,
                 out_events):
    """Fixed-step RK4 of a 2D model under the (switched) composite field.

    The switching automaton is evaluated once at the top of each step and
    sigma is frozen for the step's four stages.  Returns (number of samples
    written, termination code, number of switch events).
    """
    x = x0
    y = y0
    th = th0
    sigma = 1
    nev = 0
    term = T_HORIZON
    count = nsteps + 1
    for k in range(nsteps + 1):
        t = k * dt
        if sw_enabled:
            xs = x - ovel[0, 0] * t
            ys = y - ovel[0, 1] * t
            ph = _eval(okind[0], opar[0], xs, ys, 0.0)
            if sigma == 1:
                if abs(ph - sw_eqlevel) <= sw_eps:
                    if nev >= out_events.shape[0]:
                        term = T_EVENT_OVERFLOW
                        count = k
                        break
                    sigma = 2
                    out_events[nev, 0] = t
                    out_events[nev, 1] = 2.0
                    out_events[nev, 2] = x
                    out_events[nev, 3] = y
                    nev += 1
            else:
                if ph > 0.0 and sw_exit.shape[0] > 0:
                    dmin = 1e300
                    for j in range(sw_exit.shape[0]):
                        d = math.hypot(x - sw_exit[j, 0], y - sw_exit[j, 1])
                        if d < dmin:
                            dmin = d
                    if dmin <= sw_epso:
                        if nev >= out_events.shape[0]:
                            term = T_EVENT_OVERFLOW
                            count = k
                            break
                        sigma = 1
                        out_events[nev, 0] = t
                        out_events[nev, 1] = 1.0
                        out_events[nev, 2] = x
                        out_events[nev, 3] = y
                        nev += 1
        # log sample k
        u, v, ok = _chi2(sigma, t, x, y, pk, pp, pgain, pgamma,
                         okind, opar, oc, ol1, ol2, okr, ogamma, orate, ovel,
                         raw_moving, sw_delta)
        phi, region = _region_phi_2d(t, x, y, pk, pp, okind, opar, oc, ovel)
        out_state[k, 0] = x
        out_state[k, 1] = y
        out_state[k, 2] = th
        out_sigma[k] = sigma
        out_region[k] = region
        out_phi[k] = phi
        out_fnorm[k] = math.sqrt(u * u + v * v)
        if not ok:
            term = T_SINGULARITY
            count = k + 1
            break
        if k == nsteps:
            break
        # one RK4 step with sigma frozen
        sx = x
        sy = y
        sth = th
        failed = False
        if mkind == M_SI2:
            k1x, k1y = u, v
            u2, v2, ok2 = _chi2(sigma, t + 0.5 * dt, sx + 0.5 * dt * k1x,
                                sy + 0.5 * dt * k1y, pk, pp, pgain, pgamma,
                                okind, opar, oc, ol1, ol2, okr, ogamma, orate,
                                ovel, raw_moving, sw_delta)
            u3, v3, ok3 = _chi2(sigma, t + 0.5 * dt, sx + 0.5 * dt * u2,
                                sy + 0.5 * dt * v2, pk, pp, pgain, pgamma,
                                okind, opar, oc, ol1, ol2, okr, ogamma, orate,
                                ovel, raw_moving, sw_delta)
            u4, v4, ok4 = _chi2(sigma, t + dt, sx + dt * u3, sy + dt * v3,
                                pk, pp, pgain, pgamma,
                                okind, opar, oc, ol1, ol2, okr, ogamma, orate,
                                ovel, raw_moving, sw_delta)
            if not (ok2 and ok3 and ok4):
                failed = True
            else:
                x = sx + dt / 6.0 * (k1x + 2 * u2 + 2 * u3 + u4)
                y = sy + dt / 6.0 * (k1y + 2 * v2 + 2 * v3 + v4)
        else:  # M_DUBINS2: heading state, guidance sampled at stage positions
            gn = math.sqrt(u * u + v * v)
            if gn == 0.0:
                failed = True
            else:
                k1x = ms * math.cos(sth)
                k1y = ms * math.sin(sth)
                k1t = mktheta * _wrap_angle(math.atan2(v, u) - sth)
                x2 = sx + 0.5 * dt * k1x
                y2 = sy + 0.5 * dt * k1y
                t2 = sth + 0.5 * dt * k1t
                u2, v2, ok2 = _chi2(sigma, t + 0.5 * dt, x2, y2, pk, pp, pgain,
                                    pgamma, okind, opar, oc, ol1, ol2, okr,
                                    ogamma, orate, ovel, raw_moving, sw_delta)
                k2x = ms * math.cos(t2)
                k2y = ms * math.sin(t2)
                k2t = mktheta * _wrap_angle(math.atan2(v2, u2) - t2)
                x3 = sx + 0.5 * dt * k2x
                y3 = sy + 0.5 * dt * k2y
                t3 = sth + 0.5 * dt * k2t
                u3, v3, ok3 = _chi2(sigma, t + 0.5 * dt, x3, y3, pk, pp, pgain,
                                    pgamma, okind, opar, oc, ol1, ol2, okr,
                                    ogamma, orate, ovel, raw_moving, sw_delta)
                k3x = ms * math.cos(t3)
                k3y = ms * math.sin(t3)
                k3t = mktheta * _wrap_angle(math.atan2(v3, u3) - t3)
                x4 = sx + dt * k3x
                y4 = sy + dt * k3y
                t4 = sth + dt * k3t
                u4, v4, ok4 = _chi2(sigma, t + dt, x4, y4, pk, pp, pgain,
                                    pgamma, okind, opar, oc, ol1, ol2, okr,
                                    ogamma, orate, ovel, raw_moving, sw_delta)
                k4x = ms * math.cos(t4)
                k4y = ms * math.sin(t4)
                k4t = mktheta * _wrap_angle(math.atan2(v4, u4) - t4)
                if not (ok2 and ok3 and ok4) or \
                        (u2 == 0.0 and v2 == 0.0) or (u3 == 0.0 and v3 == 0.0) \
                        or (u4 == 0.0 and v4 == 0.0):
                    failed = True
                else:
                    x = sx + dt / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x)
                    y = sy + dt / 6.0 * (k1y + 2 * k2y + 2 * k3y + k4y)
                    th = sth + dt / 6.0 * (k1t + 2 * k2t + 2 * k3t + k4t)
        if failed:
            term = T_SINGULARITY
            count = k + 1
            break
        if abs(x) > 1e6 or abs(y) > 1e6:
            out_state[k + 1, 0] = x
            out_state[k + 1, 1] = y
            out_state[k + 1, 2] = th
            out_sigma[k + 1] = sigma
            phi, region = _region_phi_2d(t + dt, x, y, pk, pp, okind, opar,
                                         oc, ovel)
            out_region[k + 1] = region
            out_phi[k + 1] = phi
            out_fnorm[k + 1] = 0.0
            term = T_DIVERGENCE
            count = k + 2
            break
    return count, term, nev


@jit_kernel
def integrate_3d(x0, y0, z0, th0, nsteps, dt,
                 mkind, ms, mktheta,
                 pk, pp, pgain,
                 okind, opar, oc, ol1, ol2, okr, obyp, ovel,
                 out_state, out_region, out_phi, out_fnorm):
    """Fixed-step RK4 of a 3D model under the composite field."""
    x = x0
    y = y0
    z = z0
    th = th0
    term = T_HORIZON
    count = nsteps + 1
    for k in range(nsteps + 1):
        t = k * dt
        u, v, w, ok = _chi3(t, x, y, z, pk, pp, pgain,
                            okind, opar, oc, ol1, ol2, okr, obyp, ovel)
        phi, region = _region_phi_3d(t, x, y, z, pk, pp, okind, opar, oc, ovel)
        out_state[k, 0] = x
        out_state[k, 1] = y
        out_state[k, 2] = z
        out_state[k, 3] = th
        out_region[k] = region
        out_phi[k] = phi
        out_fnorm[k] = math.sqrt(u * u + v * v + w * w)
        if not ok:
            term = T_SINGULARITY
            count = k + 1
            break
        if k == nsteps:
            break
        failed = False
        if mkind == M_SI3:
            u2, v2, w2, ok2 = _chi3(t + 0.5 * dt, x + 0.5 * dt * u,
                                    y + 0.5 * dt * v, z + 0.5 * dt * w,
                                    pk, pp, pgain, okind, opar, oc, ol1, ol2,
                                    okr, obyp, ovel)
            u3, v3, w3, ok3 = _chi3(t + 0.5 * dt, x + 0.5 * dt * u2,
                                    y + 0.5 * dt * v2, z + 0.5 * dt * w2,
                                    pk, pp, pgain, okind, opar, oc, ol1, ol2,
                                    okr, obyp, ovel)
            u4, v4, w4, ok4 = _chi3(t + dt, x + dt * u3, y + dt * v3,
                                    z + dt * w3, pk, pp, pgain, okind, opar,
                                    oc, ol1, ol2, okr, obyp, ovel)
            if not (ok2 and ok3 and ok4):
                failed = True
            else:
                x = x + dt / 6.0 * (u + 2 * u2 + 2 * u3 + u4)
                y = y + dt / 6.0 * (v + 2 * v2 + 2 * v3 + v4)
                z = z + dt / 6.0 * (w + 2 * w2 + 2 * w3 + w4)
        else:  # M_DUBINS3: planar speed s, vertical rate tracks climb ratio
            gxy = math.hypot(u, v)
            if gxy == 0.0 and w == 0.0:
                failed = True
            else:
                sx = x
                sy = y
                sz = z
                sth = th
                kx = np.empty(4)
                ky = np.empty(4)
                kz = np.empty(4)
                kt = np.empty(4)
                uu = u
                vv = v
                ww = w
                okst = True
                for stage in range(4):
                    if stage == 0:
                        px, py, pz, pth = sx, sy, sz, sth
                        ts = t
                    elif stage == 1 or stage == 2:
                        h = 0.5 * dt
                        px = sx + h * kx[stage - 1]
                        py = sy + h * ky[stage - 1]
                        pz = sz + h * kz[stage - 1]
                        pth = sth + h * kt[stage - 1]
                        ts = t + h
                    else:
                        px = sx + dt * kx[2]
                        py = sy + dt * ky[2]
                        pz = sz + dt * kz[2]
                        pth = sth + dt * kt[2]
                        ts = t + dt
                    if stage > 0:
                        uu, vv, ww, okst = _chi3(ts, px, py, pz, pk, pp, pgain,
                                                 okind, opar, oc, ol1, ol2,
                                                 okr, obyp, ovel)
                        if not okst or (uu == 0.0 and vv == 0.0):
                            failed = True
                            break
                    gxy = math.hypot(uu, vv)
                    if gxy == 0.0:
                        failed = True
                        break
                    uz = ms * ww / gxy
                    if uz > ms:
                        uz = ms
                    elif uz < -ms:
                        uz = -ms
                    kx[stage] = ms * math.cos(pth)
                    ky[stage] = ms * math.sin(pth)
                    kz[stage] = uz
                    kt[stage] = mktheta * _wrap_angle(math.atan2(vv, uu) - pth)
                if not failed:
                    x = sx + dt / 6.0 * (kx[0] + 2 * kx[1] + 2 * kx[2] + kx[3])
                    y = sy + dt / 6.0 * (ky[0] + 2 * ky[1] + 2 * ky[2] + ky[3])
                    z = sz + dt / 6.0 * (kz[0] + 2 * kz[1] + 2 * kz[2] + kz[3])
                    th = sth + dt / 6.0 * (kt[0] + 2 * kt[1] + 2 * kt[2] + kt[3])
        if failed:
            term = T_SINGULARITY
            count = k + 1
            break
        if abs(x) > 1e6 or abs(y) > 1e6 or abs(z) > 1e6:
            term = T_DIVERGENCE
            out_state[k + 1, 0] = x
            out_state[k + 1, 1] = y
            out_state[k + 1, 2] = z
            out_state[k + 1, 3] = th
            phi, region = _region_phi_3d(t + dt, x, y, z, pk, pp, okind, opar,
                                         oc, ovel)
            out_region[k + 1] = region
            out_phi[k + 1] = phi
            out_fnorm[k + 1] = 0.0
            count = k + 2
            break
    return count, term, 0


# noise modes for the pure reactive flows
N_NONE = 0
N_BOUNDED = 1    # rho = amp * sin(freq * t + phase)
N_VANISHING = 2  # rho = amp * phi * sin(freq * t + phase)


@jit_kernel
def integrate_reactive_2d(x0, y0, nsteps, dt,
                          kind, par, kr, gamma, rate, vel,
                          normalized, moving,
                          noise_mode, namp, nfreq, nphase,
                          out_state):
    """RK4 of the pure reactive flows used by the Lyapunov monitors:
    the normalized static field, the time-varying field, or the latter
    with a parametric disturbance on the measured time derivative."""
    x = x0
    y = y0
    term = T_HORIZON
    count = nsteps + 1
    for k in range(nsteps + 1):
        out_state[k, 0] = x
        out_state[k, 1] = y
        if k == nsteps:
            break
        t = k * dt
        fx = 0.0
        fy = 0.0
        okall = True
        sx = x
        sy = y
        k1x = k1y = k2x = k2y = k3x = k3y = 0.0
        for stage in range(4):
            if stage == 0:
                px, py, ts = sx, sy, t
            elif stage == 1:
                px, py, ts = sx + 0.5 * dt * k1x, sy + 0.5 * dt * k1y, t + 0.5 * dt
            elif stage == 2:
                px, py, ts = sx + 0.5 * dt * k2x, sy + 0.5 * dt * k2y, t + 0.5 * dt
            else:
                px, py, ts = sx + dt * k3x, sy + dt * k3y, t + dt
            xs = px - vel[0] * ts
            ys = py - vel[1] * ts
            ph = _eval(kind, par, xs, ys, 0.0)
            gx, gy, _ = _grad(kind, par, xs, ys, 0.0)
            if moving:
                gg = gx * gx + gy * gy
                if gg == 0.0:
                    okall = False
                    break
                rho = 0.0
                if noise_mode == N_BOUNDED:
                    rho = namp * math.sin(nfreq * ts + nphase)
                elif noise_mode == N_VANISHING:
                    rho = namp * ph * math.sin(nfreq * ts + nphase)
                dphidt = -(vel[0] * gx + vel[1] * gy)
                sc = (-dphidt + rho - rate * ph) / gg
                fu = -gy - kr * ph * gx + sc * gx
                fv = gx - kr * ph * gy + sc * gy
            else:
                fu = -gamma * gy - kr * ph * gx
                fv = gamma * gx - kr * ph * gy
                if normalized:
                    nrm = math.sqrt(fu * fu + fv * fv)
                    if nrm == 0.0:
                        okall = False
                        break
                    fu /= nrm
                    fv /= nrm
            if stage == 0:
                k1x, k1y = fu, fv
            elif stage == 1:
                k2x, k2y = fu, fv
            elif stage == 2:
                k3x, k3y = fu, fv
            else:
                fx = sx + dt / 6.0 * (k1x + 2 * k2x + 2 * k3x + fu)
                fy = sy + dt / 6.0 * (k1y + 2 * k2y + 2 * k3y + fv)
        if not okall:
            term = T_SINGULARITY
            count = k + 1
            break
        x = fx
        y = fy
    return count, term
