"""Partial-wave channels and bipolar-harmonic angular kernels.

Angular integrals over ``(x^, y^)`` of rotationally invariant integrands
reduce to a single integral over ``u = x^.y^``. Fixing ``x^ = z^`` and
``y^`` in the xz-plane, the kernel linking channel ``c`` of one Jacobi set
to channel ``c'`` evaluated at rotated directions is

    K_cc'(u) = 8 pi^2 / (2L+1) sum_M Y_c^{LM}(z^, y^(u)) Y_c'^{LM}(x^', y^'),

with all spherical harmonics real because every direction lies in the
xz-plane.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
import math

import numpy as np
from scipy.special import lpmv
from sympy.physics.wigner import clebsch_gordan


class ChannelConfigError(ValueError):
    pass


@dataclass(frozen=True, order=True)
class PartialWaveChannel:
    l_x: int
    l_y: int

    @property
    def parity(self) -> int:
        return (-1) ** (self.l_x + self.l_y)


@dataclass(frozen=True)
class ChannelTruncation:
    lmax: int
    Lmax: int | None = None


def enumerate_channels(lmax: int, L: int, parity: int | None = None) -> list[PartialWaveChannel]:
    """All ``(l_x, l_y)`` with ``max(l_x, l_y) <= lmax`` coupling to ``L``.

    ``parity`` defaults to the natural parity ``(-1)^L``.
    """
    if parity is None:
        parity = (-1) ** L
    if parity not in (1, -1):
        raise ChannelConfigError("parity must be +1 or -1")
    out = [PartialWaveChannel(lx, ly)
           for lx in range(lmax + 1) for ly in range(lmax + 1)
           if abs(lx - ly) <= L <= lx + ly and (-1) ** (lx + ly) == parity]
    if not out:
        raise ChannelConfigError(f"no channels for L={L}, parity={parity}, lmax={lmax}")
    return out


@lru_cache(maxsize=None)
def cg(l1, m1, l2, m2, L, M) -> float:
    return float(clebsch_gordan(l1, l2, L, m1, m2, M))


def ylm_plane(l: int, m: int, cos_t, sign_x):
    """Real value of Y_lm at an xz-plane direction; ``sign_x`` is +1/-1
    for azimuth 0/pi."""
    am = abs(m)
    norm = math.sqrt((2 * l + 1) / (4 * math.pi) * math.factorial(l - am) / math.factorial(l + am))
    val = norm * lpmv(am, l, np.clip(cos_t, -1.0, 1.0)) * np.where(sign_x < 0, (-1.0) ** am, 1.0)
    if m < 0:
        val = (-1) ** am * val
    return val


def _bipolar(ch: PartialWaveChannel, L: int, M: int, cx, sx, cy, sy):
    out = 0.0
    for mx in range(-ch.l_x, ch.l_x + 1):
        my = M - mx
        if abs(my) > ch.l_y:
            continue
        c = cg(ch.l_x, mx, ch.l_y, my, L, M)
        if c == 0.0:
            continue
        out = out + c * ylm_plane(ch.l_x, mx, cx, sx) * ylm_plane(ch.l_y, my, cy, sy)
    return out


def _direction(X, Z):
    r = np.hypot(X, Z)
    rs = np.where(r > 0, r, 1.0)
    return np.where(r > 0, Z / rs, 1.0), np.where(X < 0, -1.0, 1.0)


def rotation_kernel(rows, cols, L: int, R, x, y, u) -> np.ndarray:
    """Kernel ``K[c, c', ...]`` at configurations ``(x, y, u)`` of the row set.

    ``R`` maps row-set (x, y) vectors onto the column set. Arrays ``x, y, u``
    broadcast together. Returns shape ``(len(rows), len(cols)) + shape``.
    """
    x, y, u = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float), np.asarray(u, float))
    s = np.sqrt(np.clip(1 - u * u, 0, None))
    # row directions: x^ = z^, y^ = (s, u)
    # column vectors in (X, Z) components
    Xx = R[0, 1] * y * s
    Zx = R[0, 0] * x + R[0, 1] * y * u
    Xy = R[1, 1] * y * s
    Zy = R[1, 0] * x + R[1, 1] * y * u
    cxb, sxb = _direction(Xx, Zx)
    cyb, syb = _direction(Xy, Zy)
    one = np.ones_like(u)
    pref = 8 * math.pi**2 / (2 * L + 1)
    K = np.zeros((len(rows), len(cols)) + x.shape)
    for M in range(-L, L + 1):
        rv = [_bipolar(c, L, M, one, one, u, one) for c in rows]
        cv = [_bipolar(c, L, M, cxb, sxb, cyb, syb) for c in cols]
        for a, ra in enumerate(rv):
            if np.isscalar(ra) and ra == 0.0:
                continue
            for b, cb in enumerate(cv):
                if np.isscalar(cb) and cb == 0.0:
                    continue
                K[a, b] += pref * ra * cb
    return K


def multipole_kernel(channels, L: int, u) -> np.ndarray:
    """Kernel for multiplication by a scalar function of ``u``:
    ``<c|f|c'>(x, y) = sum_k w_k G[c, c', k] f(x, y, u_k)``."""
    u = np.asarray(u, float)
    return rotation_kernel(channels, channels, L, np.eye(2), np.ones_like(u), np.ones_like(u), u)
