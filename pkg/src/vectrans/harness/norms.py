"""Error norms and convergence-rate fitting."""

import numpy as np

from ..assembly import cell_values, default_npts, tabulate_cells
from ..spaces import Field, SpaceError


def _values(obj, tab, space):
    if isinstance(obj, Field):
        if obj.space.mesh is not space.mesh:
            raise SpaceError("fields live on different meshes")
        return cell_values(obj, tabulate_cells(obj.space, tab.npts))
    if obj is None:
        return 0.0
    return np.asarray(obj(tab.x), dtype=float)


def l2_norm(a, npts=None):
    return l2_error(a, None, npts)


def l2_error(a, b=None, npts=None):
    """sqrt(int |a - b|^2) with b a Field, a function of position, or None (zero)."""
    npts = npts or default_npts(a.space) + 1
    tab = tabulate_cells(a.space, npts)
    d = cell_values(a, tab) - _values(b, tab, a.space)
    sq = np.sum(d * d, axis=-1) if a.space.is_vector else d * d
    return float(np.sqrt(np.sum(sq * tab.wdx)))


def normalised_l2_error(a, b, npts=None):
    """l2_error(a, b) / ||b||."""
    npts = npts or default_npts(a.space) + 1
    tab = tabulate_cells(a.space, npts)
    vb = _values(b, tab, a.space)
    sq = np.sum(vb * vb, axis=-1) if a.space.is_vector else vb * vb
    nb = float(np.sqrt(np.sum(sq * tab.wdx)))
    if nb == 0.0:
        raise ZeroDivisionError("reference field has zero norm")
    return l2_error(a, b, npts) / nb


def fit_convergence_slope(pairs):
    """Least-squares slope of log(e) against log(h) for (h, e) pairs."""
    pairs = list(pairs)
    if len(pairs) < 3:
        raise ValueError("a convergence slope needs at least 3 resolutions")
    h, e = np.array(pairs, dtype=float).T
    if np.any(h <= 0) or np.any(e <= 0) or not np.all(np.isfinite(e)):
        raise ValueError("mesh sizes and errors must be positive and finite")
    slope, _ = np.polyfit(np.log(h), np.log(e), 1)
    return float(slope)
