"""Subadditivity of f_alpha on the quarter disc and the auxiliary functions behind it.

The claim under test is f(sqrt(x^2 + y^2)) <= f(x) + f(y) on
D = {0 <= x, y, x^2 + y^2 <= 1} for alpha in [ALPHA_MIN, ALPHA_MAX]. Its proof
runs through

* g(x, y), the slack f(x) + f(y) - f(sqrt(x^2 + y^2)) (non-negative on D),
* l(x) = [Theta^(a-1) - Xi^(a-1)] / (sqrt(1 - x^2) [Xi^a + Theta^a]),
* h(x, a) = dl/dx, whose sign on D1 (1 <= a <= ALPHA_MAX) and D2
  (ALPHA_MIN <= a <= 1) gives the monotonicity of l,
* m(x) = 1 - f(x) - f(sqrt(1 - x^2)), the value of -g on the arc x^2 + y^2 = 1,
  scanned on D3 (the whole lemma range).

Scans walk regular grids, optionally stream every point to CSV, and count the
points whose sign contradicts the claim by more than a tolerance.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .measures import ALPHA_MAX, ALPHA_MIN, f_alpha

STEP_MIN = 1e-4
STEP_MAX = 1e-1
STEP_1D = 1e-3
STEP_2D = 2e-3
SIGN_TOL = 1e-9
FD_STEP = 1e-6
N_ALPHA_D = 21
FLOAT_FMT = "%.17g"

FIGURE_IDS = ("1a", "1b", "2", "3", "4", "5", "6", "7")

# function id -> domains it may be scanned on, with the claimed sign there
CLAIMS = {
    ("g", "D"): ">=",
    ("h", "D1"): "<=",
    ("h", "D2"): ">=",
    ("m", "D3"): "<=",
}


class DomainError(ValueError):
    pass


def _endpoint_error(x: np.ndarray, name: str) -> None:
    if np.any((x <= 0.0) | (x >= 1.0)) or np.any(~np.isfinite(x)):
        raise DomainError(f"{name} needs 0 < x < 1")


def _parts(x, alpha):
    """s, Theta, Xi, Xi^a + Theta^a, Theta^(a-1) - Xi^(a-1), broadcast over x and alpha."""
    x = np.asarray(x, dtype=float)
    a = np.asarray(alpha, dtype=float)
    s = np.sqrt(1.0 - x * x)
    theta = 1.0 + s
    xi = x * x / (1.0 + s)
    total = xi**a + theta**a
    diff = theta ** (a - 1.0) - xi ** (a - 1.0)
    return x, a, s, theta, xi, total, diff


def _f(x, alpha):
    """f_alpha broadcast over arrays of both x and alpha."""
    if np.ndim(alpha) == 0:
        return np.asarray(f_alpha(x, float(alpha)))
    x, a = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(alpha, dtype=float))
    out = np.empty(x.shape)
    for value in np.unique(a):
        sel = a == value
        out[sel] = f_alpha(x[sel], value)
    return out


def _scalar(v):
    return float(v) if np.ndim(v) == 0 else v


def g_alpha(x, y, alpha):
    """Slack f(x) + f(y) - f(sqrt(x^2 + y^2)) of the subadditivity inequality."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    r = np.hypot(x, y)
    if np.any(x < 0.0) or np.any(y < 0.0) or np.any(r > 1.0 + 1e-12):
        raise DomainError("(x, y) must satisfy x, y >= 0 and x^2 + y^2 <= 1")
    out = _f(x, alpha) + _f(y, alpha) - _f(np.minimum(r, 1.0), alpha)
    return _scalar(out)


def l_alpha(x, alpha):
    x = np.asarray(x, dtype=float)
    _endpoint_error(x, "l_alpha")
    _, _, s, _, _, total, diff = _parts(x, alpha)
    return _scalar(diff / (s * total))


def h_alpha(x, alpha):
    """dl/dx in closed form.

    h = a x N^2 / (s^2 P^2) - (a - 1) x (Theta^(a-2) + Xi^(a-2)) / (s^2 P) + x N / (s^3 P)
    with s = sqrt(1 - x^2), N = Theta^(a-1) - Xi^(a-1) and P = Xi^a + Theta^a.
    """
    x = np.asarray(x, dtype=float)
    _endpoint_error(x, "h_alpha")
    x, a, s, theta, xi, total, diff = _parts(x, alpha)
    s2 = s * s
    out = (
        a * x * diff**2 / (s2 * total**2)
        - (a - 1.0) * x * (theta ** (a - 2.0) + xi ** (a - 2.0)) / (s2 * total)
        + x * diff / (s2 * s * total)
    )
    return _scalar(out)


def h_limit_x1(alpha):
    """Limit of h as x -> 1: 2 (a^3 - 4a + 3) / 3."""
    a = np.asarray(alpha, dtype=float)
    return _scalar(2.0 * (a**3 - 4.0 * a + 3.0) / 3.0)


def m_alpha(x, alpha):
    """1 - f(x) - f(sqrt(1 - x^2)); equals -g on the arc x^2 + y^2 = 1."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0.0) or np.any(x > 1.0):
        raise DomainError("m_alpha needs 0 <= x <= 1")
    y = np.sqrt(np.clip(1.0 - x * x, 0.0, 1.0))
    return _scalar(1.0 - _f(x, alpha) - _f(y, alpha))


def dm_dalpha(x, alpha, step: float = FD_STEP):
    return (m_alpha(x, alpha + step) - m_alpha(x, alpha - step)) / (2.0 * step)


def dm_dx(x, alpha, step: float = FD_STEP):
    """Central difference in x, shrunk to one side at the ends of [0, 1]."""
    x = np.asarray(x, dtype=float)
    lo = np.clip(x - step, 0.0, 1.0)
    hi = np.clip(x + step, 0.0, 1.0)
    return _scalar((m_alpha(hi, alpha) - m_alpha(lo, alpha)) / (hi - lo))


def dh_dx(x, alpha, step: float = FD_STEP):
    return (h_alpha(np.asarray(x) + step, alpha) - h_alpha(np.asarray(x) - step, alpha)) / (2.0 * step)


def dh_dalpha(x, alpha, step: float = FD_STEP):
    return (h_alpha(x, np.asarray(alpha) + step) - h_alpha(x, np.asarray(alpha) - step)) / (2.0 * step)


# -- grids -------------------------------------------------------------------


def check_step(step: float) -> float:
    step = float(step)
    if not STEP_MIN <= step <= STEP_MAX:
        raise ValueError(f"grid step must lie in [{STEP_MIN:g}, {STEP_MAX:g}], got {step!r}")
    return step


def unit_grid(step: float, interior: bool = False) -> np.ndarray:
    """Points k * step in [0, 1], with the last one pinned to 1."""
    n = int(round(1.0 / step))
    pts = np.minimum(np.arange(n + 1) * step, 1.0)
    if pts[-1] < 1.0:
        pts = np.append(pts, 1.0)
    return pts[1:-1] if interior else pts


def range_grid(lo: float, hi: float, step: float, interior: bool = False) -> np.ndarray:
    """Evenly spaced points from lo to hi with spacing at most ``step``."""
    n = max(1, int(math.ceil((hi - lo) / step - 1e-9)))
    pts = np.linspace(lo, hi, n + 1)
    return pts[1:-1] if interior else pts


def lemma_alphas(count: int = N_ALPHA_D) -> np.ndarray:
    return np.linspace(ALPHA_MIN, ALPHA_MAX, count)


def domain_alphas(domain: str, step: float) -> np.ndarray:
    if domain == "D1":
        return range_grid(1.0, ALPHA_MAX, step, interior=True)
    if domain == "D2":
        return range_grid(ALPHA_MIN, 1.0, step, interior=True)
    if domain == "D3":
        return range_grid(ALPHA_MIN, ALPHA_MAX, step)
    raise ValueError(f"unknown (alpha, x) domain {domain!r}")


def disc_points(step: float) -> tuple[np.ndarray, np.ndarray]:
    """Grid points of the quarter disc x, y >= 0, x^2 + y^2 <= 1."""
    u = unit_grid(step)
    x, y = np.meshgrid(u, u, indexing="ij")
    keep = x * x + y * y <= 1.0 + 1e-12
    return x[keep], y[keep]


# -- sign scans --------------------------------------------------------------


@dataclass
class ScanReport:
    function: str
    domain: str
    step: float
    tolerance: float
    claim: str
    n_points: int = 0
    min_value: float = math.inf
    argmin: tuple = ()
    max_value: float = -math.inf
    argmax: tuple = ()
    violations: int = 0
    path: str | None = None

    @property
    def ok(self) -> bool:
        return self.violations == 0

    def update(self, coords: tuple[np.ndarray, ...], values: np.ndarray) -> None:
        if values.size == 0:
            return
        self.n_points += values.size
        i, j = int(np.argmin(values)), int(np.argmax(values))
        if values[i] < self.min_value:
            self.min_value = float(values[i])
            self.argmin = tuple(float(c[i]) for c in coords)
        if values[j] > self.max_value:
            self.max_value = float(values[j])
            self.argmax = tuple(float(c[j]) for c in coords)
        if self.claim == ">=":
            self.violations += int(np.sum(values < -self.tolerance))
        else:
            self.violations += int(np.sum(values > self.tolerance))

    def to_dict(self) -> dict:
        return {
            "function": self.function,
            "domain": self.domain,
            "step": self.step,
            "tolerance": self.tolerance,
            "claim": f"{self.function} {self.claim} 0",
            "n_points": self.n_points,
            "min_value": self.min_value,
            "argmin": list(self.argmin),
            "max_value": self.max_value,
            "argmax": list(self.argmax),
            "violations": self.violations,
            "path": self.path,
        }


def _write_rows(writer, columns) -> None:
    for row in zip(*columns):
        writer.writerow([FLOAT_FMT % v for v in row])


def scan_sign(function: str, domain: str, step: float | None = None, tolerance: float = SIGN_TOL, out=None, alphas=None) -> ScanReport:
    """Check the claimed sign of ``function`` at every grid point of ``domain``.

    Pairs: g on D (x, y grid for each alpha in ``alphas``, default 21 values
    over the lemma range), h on the interiors of D1 and D2, m on all of D3.
    With ``out`` set, every point is written to that CSV file.
    """
    key = (function, domain)
    if key not in CLAIMS:
        raise ValueError(f"no sign claim for {function!r} on {domain!r}")
    step = check_step(step if step is not None else STEP_2D)
    report = ScanReport(function, domain, step, tolerance, CLAIMS[key])
    handle = writer = None
    if out is not None:
        report.path = str(out)
        handle = open(out, "w", newline="")
        writer = csv.writer(handle, lineterminator="\n")
    try:
        if function == "g":
            xs, ys = disc_points(step)
            if writer:
                writer.writerow(["alpha", "x", "y", "g"])
            for a in lemma_alphas() if alphas is None else np.asarray(alphas, dtype=float):
                vals = np.asarray(g_alpha(xs, ys, a))
                av = np.full_like(xs, a)
                report.update((av, xs, ys), vals)
                if writer:
                    _write_rows(writer, (av, xs, ys, vals))
        else:
            x = unit_grid(step, interior=(function == "h"))
            fn = h_alpha if function == "h" else m_alpha
            if writer:
                writer.writerow(["alpha", "x", function])
            for a in domain_alphas(domain, step):
                vals = np.asarray(fn(x, a))
                av = np.full_like(x, a)
                report.update((av, x), vals)
                if writer:
                    _write_rows(writer, (av, x, vals))
    finally:
        if handle:
            handle.close()
    return report


# -- critical points -----------------------------------------------------------


@dataclass
class CriticalReport:
    """Zero contours of two partial derivatives on an (alpha, x) grid.

    ``contours`` maps a partial's name to an (k, 2) array of (alpha, x) points
    located by bisection along grid edges where that partial changes sign.
    ``common_cells`` counts grid cells in which both partials change sign.
    """

    function: str
    domain: str
    step: float
    contours: dict = field(default_factory=dict)
    sign_change_cells: dict = field(default_factory=dict)
    common_cells: int = 0
    extra: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.common_cells == 0 and self.extra.get("ok", True)

    def to_dict(self) -> dict:
        return {
            "function": self.function,
            "domain": self.domain,
            "step": self.step,
            "contour_points": {k: int(len(v)) for k, v in self.contours.items()},
            "sign_change_cells": dict(self.sign_change_cells),
            "common_cells": self.common_cells,
            **self.extra,
        }


def _changes(v: np.ndarray) -> np.ndarray:
    """Cells (i, j)-(i+1, j+1) whose four corner values do not share a strict sign."""
    corners = np.stack([v[:-1, :-1], v[1:, :-1], v[:-1, 1:], v[1:, 1:]])
    return ~(np.all(corners > 0, axis=0) | np.all(corners < 0, axis=0))


def _bisect(fn, p, q, fp, iters: int = 50):
    p, q = np.asarray(p, float), np.asarray(q, float)
    for _ in range(iters):
        mid = 0.5 * (p + q)
        fm = fn(mid[0], mid[1])
        if fm == 0.0:
            return mid
        if (fm > 0) == (fp > 0):
            p, fp = mid, fm
        else:
            q = mid
    return 0.5 * (p + q)


def _edge_zeros(fn, alphas, xs, vals) -> np.ndarray:
    """Bisect every grid edge along which ``vals`` changes sign."""
    pts = []
    for axis in (0, 1):
        a0 = vals[:-1, :] if axis == 0 else vals[:, :-1]
        a1 = vals[1:, :] if axis == 0 else vals[:, 1:]
        for i, j in zip(*np.nonzero(a0 * a1 < 0)):
            p = (alphas[i], xs[j])
            q = (alphas[i + 1], xs[j]) if axis == 0 else (alphas[i], xs[j + 1])
            pts.append(_bisect(fn, p, q, a0[i, j]))
    pts.sort(key=lambda t: (t[0], t[1]))
    return np.array(pts).reshape(-1, 2)


def critical_point_scan(function: str, domain: str, step: float = 5e-3, fd_step: float = FD_STEP) -> CriticalReport:
    """Locate zero contours of the x- and alpha-partials and look for common cells.

    For ``h`` (on D1 or D2) both partials come from central differences of
    h_alpha on the domain's interior grid. For ``m`` (on D3) the x-partial is
    scanned over the interior, and the alpha-partial is evaluated along
    x = 1/sqrt(2), where the x-partial vanishes by symmetry.
    """
    if step > 1e-2:
        raise ValueError(f"critical-point scans need step <= 1e-2, got {step!r}")
    check_step(step)
    if (function, domain) not in (("h", "D1"), ("h", "D2"), ("m", "D3")):
        raise ValueError(f"no critical-point scan for {function!r} on {domain!r}")
    report = CriticalReport(function, domain, step)
    xs = unit_grid(step, interior=True)
    alphas = domain_alphas(domain, step)
    if domain == "D3":
        alphas = alphas[1:-1]
    A, X = np.meshgrid(alphas, xs, indexing="ij")

    if function == "h":
        partials = {
            "dh_dx": lambda a, x: dh_dx(x, a, fd_step),
            "dh_dalpha": lambda a, x: dh_dalpha(x, a, fd_step),
        }
    else:
        partials = {"dm_dx": lambda a, x: dm_dx(x, a, fd_step)}

    cells = []
    for name, fn in partials.items():
        vals = np.asarray(fn(A, X))
        changed = _changes(vals)
        cells.append(changed)
        report.sign_change_cells[name] = int(changed.sum())
        report.contours[name] = _edge_zeros(lambda a, x: float(fn(a, x)), alphas, xs, vals)

    if function == "h":
        report.common_cells = int(np.sum(cells[0] & cells[1]))
    else:
        zeros = report.contours["dm_dx"]
        centre = 1.0 / math.sqrt(2.0)
        offset = float(np.max(np.abs(zeros[:, 1] - centre))) if len(zeros) else math.inf
        slope = np.asarray(dm_dalpha(centre, range_grid(ALPHA_MIN, ALPHA_MAX, step), fd_step))
        report.extra = {
            "max_zero_offset_from_centre": offset,
            "min_dm_dalpha_at_centre": float(slope.min()),
            "ok": bool(offset <= step and slope.min() >= -SIGN_TOL),
        }
    return report


# -- figure data ---------------------------------------------------------------


def _alpha_x_grid(alphas, xs):
    A, X = np.meshgrid(alphas, xs, indexing="ij")
    return A.ravel(), X.ravel()


def figure_columns(fig_id: str, step_1d: float = STEP_1D, step_2d: float = STEP_2D):
    """(header, columns) for one figure's data."""
    if fig_id in ("1a", "1b"):
        a, x = _alpha_x_grid(range_grid(0.0, 2.0, step_2d, interior=True), unit_grid(step_2d, interior=True))
        if fig_id == "1a":
            return ["alpha", "x", "dh_dx"], [a, x, np.asarray(dh_dx(x, a))]
        return ["alpha", "x", "dh_dalpha"], [a, x, np.asarray(dh_dalpha(x, a))]
    if fig_id in ("2", "4"):
        alpha = ALPHA_MAX if fig_id == "2" else ALPHA_MIN
        x = unit_grid(step_1d, interior=True)
        # the x -> 1 limit closes the curve
        return ["x", "h"], [np.append(x, 1.0), np.append(h_alpha(x, alpha), h_limit_x1(alpha))]
    if fig_id == "3":
        a = range_grid(1.0, ALPHA_MAX, step_1d)
        return ["alpha", "h_limit_x1"], [a, np.asarray(h_limit_x1(a))]
    if fig_id == "5":
        a, x = _alpha_x_grid(domain_alphas("D3", step_2d), unit_grid(step_2d))
        return ["alpha", "x", "dm_dx"], [a, x, np.asarray(dm_dx(x, a))]
    if fig_id == "6":
        a = range_grid(ALPHA_MIN, ALPHA_MAX, step_1d)
        return ["alpha", "dm_dalpha"], [a, np.asarray(dm_dalpha(1.0 / math.sqrt(2.0), a))]
    if fig_id == "7":
        a, x = _alpha_x_grid(domain_alphas("D3", step_2d), unit_grid(step_2d))
        return ["alpha", "x", "m"], [a, x, np.asarray(m_alpha(x, a))]
    raise ValueError(f"unknown figure id {fig_id!r}; expected one of {', '.join(FIGURE_IDS)}")


def emit_figure_data(fig_id: str, out_dir, step_1d: float = STEP_1D, step_2d: float = STEP_2D) -> dict:
    """Write fig{id}.csv into ``out_dir`` and return its manifest entry."""
    header, columns = figure_columns(fig_id, check_step(step_1d), check_step(step_2d))
    path = Path(out_dir) / f"fig{fig_id}.csv"
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        _write_rows(writer, columns)
    step = step_2d if len(header) == 3 else step_1d
    return {"id": fig_id, "file": path.name, "columns": header, "rows": int(len(columns[0])), "step": step}


def emit_figures(ids, out_dir, step_1d: float = STEP_1D, step_2d: float = STEP_2D) -> Path:
    """Write the requested figure files plus manifest.json; returns the manifest path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = [emit_figure_data(i, out_dir, step_1d, step_2d) for i in ids]
    manifest = out_dir / "manifest.json"
    manifest.write_text(json.dumps({"step_1d": step_1d, "step_2d": step_2d, "figures": entries}, indent=2) + "\n")
    return manifest
