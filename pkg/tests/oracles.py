"""Slow, independent reference implementations used only by the tests.

Nothing here imports the package: the transforms are explicit DFT sums, the
dyadic profile is rebuilt from its formula, and the Morrey supremum is a
brute-force scan over balls with explicit periodic distances.
"""

import math

import numpy as np


def dft3(x):
    """Forward DFT with the 1/N^3 factor, by explicit sums along each axis."""
    n = x.shape[-1]
    j = np.arange(n)
    w = np.exp(-2j * np.pi * np.outer(j, j) / n)
    out = np.einsum("ai,...ijk->...ajk", w, x)
    out = np.einsum("bj,...ajk->...abk", w, out)
    out = np.einsum("ck,...abk->...abc", w, out)
    return out / n**3


def idft3(c):
    n = c.shape[-1]
    j = np.arange(n)
    w = np.exp(2j * np.pi * np.outer(j, j) / n)
    out = np.einsum("ai,...ijk->...ajk", w, c)
    out = np.einsum("bj,...ajk->...abk", w, out)
    out = np.einsum("ck,...abk->...abc", w, out)
    return out


def wavenumbers(n, length):
    k = np.fft.fftfreq(n, 1.0 / n)
    kx, ky, kz = np.meshgrid(k, k, k, indexing="ij")
    return 2 * np.pi / length * np.stack([kx, ky, kz])


def theta(r):
    """Radial cutoff: 1 below 3/2, 0 above 8/3, exp(-1/x) blend in between."""
    r = np.asarray(r, dtype=float)
    a, b = 1.5, 8.0 / 3.0
    x = np.clip((b - r) / (b - a), 0.0, 1.0)

    def f(t):
        return np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)

    return f(x) / (f(x) + f(1.0 - x))


def phi(r):
    return theta(r) - theta(2 * np.asarray(r, dtype=float))


def band(samples, j, length):
    """Physical samples of the j-th dyadic block, (C, N, N, N) -> (C, N, N, N)."""
    n = samples.shape[-1]
    mag = np.sqrt(np.sum(wavenumbers(n, length) ** 2, axis=0))
    c = np.fft.fftn(samples, axes=(-3, -2, -1))
    return np.real(np.fft.ifftn(c * phi(mag / 2.0**j), axes=(-3, -2, -1)))


def morrey_bruteforce(samples, length, p, q, stride=2, min_radius_cells=2.0, full_torus=True):
    """max over balls of |B|^(1/p - 1/q) (sum_B |u|^q h^3)^(1/q), max over components."""
    x = np.atleast_1d(samples)
    if x.ndim == 3:
        x = x[None]
    n = x.shape[-1]
    h = length / n
    radii = [math.sqrt(3) * length / 2] if full_torus else []
    r = length / 2
    while r >= min_radius_cells * h * (1 - 1e-12):
        radii.append(r)
        r /= 2
    idx = np.arange(n)
    best = 0.0
    for comp in x:
        aq = np.abs(comp) ** q
        for cx in range(0, n, stride):
            for cy in range(0, n, stride):
                for cz in range(0, n, stride):
                    d = [np.minimum(np.abs(idx - c), n - np.abs(idx - c)) * h for c in (cx, cy, cz)]
                    dist2 = d[0][:, None, None] ** 2 + d[1][None, :, None] ** 2 + d[2][None, None, :] ** 2
                    for rad in radii:
                        inside = dist2 <= rad**2 * (1 + 1e-12)
                        vol = inside.sum() * h**3
                        val = vol ** (1 / p - 1 / q) * (aq[inside].sum() * h**3) ** (1 / q)
                        best = max(best, val)
    return best


def j_range(n, length):
    kmin = 2 * np.pi / length
    kmax = math.sqrt(3) * (n // 2) * kmin
    jmin = math.floor(math.log2(kmin / (4 / 3)) + 1e-12)
    jmax = math.ceil(math.log2(kmax / 1.5) - 1e-12)
    return jmin, jmax


def besov_morrey_bruteforce(samples, length, s, p, q, r=1.0, **kw):
    n = samples.shape[-1]
    jmin, jmax = j_range(n, length)
    vals = [2.0 ** (s * j) * morrey_bruteforce(band(samples, j, length), length, p, q, **kw)
            for j in range(jmin, jmax + 1)]
    return sum(vals) if r == 1 else max(vals)
