"""Pure-numpy implementations of the hot kernels (fallback backend)."""
from __future__ import annotations

import numpy as np


def cloud_sums(phase_x, phase_z, chunk: int = 1 << 16):
    """Return ``(sum cos^2(phase_x), sum cos(phase_x) cos(phase_z))``."""
    phase_x = np.ascontiguousarray(phase_x, dtype=np.float64)
    phase_z = np.ascontiguousarray(phase_z, dtype=np.float64)
    s_cos2 = 0.0
    s_amp = 0.0
    for start in range(0, phase_x.size, chunk):
        cx = np.cos(phase_x[start:start + chunk])
        cz = np.cos(phase_z[start:start + chunk])
        s_cos2 += float(np.dot(cx, cx))
        s_amp += float(np.dot(cx, cz))
    return s_cos2, s_amp


def photon_map(drive, cavity, pol_re, pol_im, kappa, g2n, scale):
    """``M[i, j] = scale |P_i|^2 / |i(drive_i - cavity_j) - kappa + g2n P_i|^2``."""
    drive = np.asarray(drive, dtype=np.float64)
    cavity = np.asarray(cavity, dtype=np.float64)
    pol_re = np.asarray(pol_re, dtype=np.float64)
    pol_im = np.asarray(pol_im, dtype=np.float64)
    num = scale * (pol_re * pol_re + pol_im * pol_im)
    re = -kappa + g2n * pol_re
    im = (drive[:, None] - cavity[None, :]) + (g2n * pol_im)[:, None]
    return num[:, None] / (re[:, None] * re[:, None] + im * im)


def ridge_scan(M, drive, cavity, medians):
    """Per cavity column ``j``: interior local maximum of ``M[:, j]`` along the
    drive axis nearest to the diagonal ``drive == cavity[j]``.

    Returns ``(index, metric)`` where ``index`` is -1 when the column has no
    interior local maximum and ``metric = (peak - median) / median``.
    """
    M = np.asarray(M, dtype=np.float64)
    drive = np.asarray(drive, dtype=np.float64)
    cavity = np.asarray(cavity, dtype=np.float64)
    medians = np.asarray(medians, dtype=np.float64)
    n_d, n_c = M.shape
    index = np.full(n_c, -1, dtype=np.int64)
    metric = np.full(n_c, np.nan)
    if n_d < 3:
        return index, metric
    inner = M[1:-1]
    is_peak = (inner > M[:-2]) & (inner >= M[2:])
    dist = np.abs(drive[1:-1, None] - cavity[None, :])
    dist = np.where(is_peak, dist, np.inf)
    best = np.argmin(dist, axis=0)
    found = np.isfinite(dist[best, np.arange(n_c)])
    index[found] = best[found] + 1
    cols = np.nonzero(found)[0]
    peak = M[index[cols], cols]
    metric[cols] = (peak - medians[cols]) / medians[cols]
    return index, metric
