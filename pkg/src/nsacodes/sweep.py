"""Decay-rate sweeps, power-law fits and the kink detector."""

from __future__ import annotations

import csv
import io
import json
import math
from collections.abc import Callable, Iterable, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

from nsacodes.codes import CodeSpace, Family, SCBasisSet, build_family
from nsacodes.klmetrics import l1_loss, l2_loss
from nsacodes.noise import error_set_for
from nsacodes.recovery import (
    build_recovery,
    closed_form_fidelity,
    fidelity_oracle_min_over_states,
    worst_case_fidelity,
)

DEFAULT_GAMMA_MIN = 1e-3
DEFAULT_GAMMA_MAX = 10**-0.5
DEFAULT_POINTS = 40
LOSS_WINDOW = (1e-3, 10**-1.75)
FIDELITY_WINDOW = (1e-3, 1e-2)
KINK_THRESHOLD = 5.0
KINK_HALF_WIDTH = 4

LOSS_HEADER = ["gamma", "family", "l1", "l2"]
FIDELITY_HEADER = ["gamma", "family", "n", "k", "q", "F_plan", "F_oracle", "F_closed_form"]


class ConfigError(ValueError):
    """Invalid sweep configuration (maps to CLI exit code 2)."""


@dataclass
class SweepConfig:
    gamma_min: float = DEFAULT_GAMMA_MIN
    gamma_max: float = DEFAULT_GAMMA_MAX
    points: int = DEFAULT_POINTS
    families: list[str] = field(default_factory=lambda: ["NSA_SC", "NSA_PC", "LNCY"])
    n: int = 4
    k: int | None = None
    q: int = 2
    gamma0: float | None = None
    seed: int = 0
    out: str | None = None
    window: tuple[float, float] = LOSS_WINDOW
    workers: int = 1
    oracle_states: int = 1000

    def validate(self) -> SweepConfig:
        if not 0.0 < self.gamma_min <= self.gamma_max < 1.0:
            raise ConfigError(f"gamma range [{self.gamma_min}, {self.gamma_max}] must lie inside (0, 1)")
        if self.points < 1:
            raise ConfigError("points must be >= 1")
        if self.points > 1 and self.gamma_min == self.gamma_max:
            raise ConfigError("a multi-point grid needs gamma_min < gamma_max")
        lo, hi = self.window
        if not 0.0 < lo < hi < 1.0:
            raise ConfigError(f"fit window {self.window} must be increasing inside (0, 1)")
        if self.gamma0 is not None and not 0.0 < self.gamma0 < 1.0:
            raise ConfigError(f"gamma0={self.gamma0} must lie in (0, 1)")
        for name in self.families:
            try:
                Family(name)
            except ValueError:
                raise ConfigError(f"unknown family {name!r}") from None
        if self.n < 1 or self.q < 2:
            raise ConfigError("need n >= 1 and q >= 2")
        if self.k is not None and not 0 <= self.k <= self.n:
            raise ConfigError(f"k={self.k} must lie in [0, n]")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        return self

    def grid(self) -> list[float]:
        """Log-spaced grid, with gamma0 inserted when set."""
        pts = np.logspace(math.log10(self.gamma_min), math.log10(self.gamma_max), self.points)
        pts = [float(x) for x in pts]
        if self.points == 1:
            pts = [self.gamma_min]
        if self.gamma0 is not None and self.gamma0 not in pts:
            pts = sorted(pts + [float(self.gamma0)])
        return pts

    @classmethod
    def from_json(cls, text: str) -> SweepConfig:
        data = json.loads(text)
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        if "window" in data:
            data["window"] = tuple(data["window"])
        return cls(**data)

    def merged(self, **overrides) -> SweepConfig:
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})


# Fits -----------------------------------------------------------------------


@dataclass(frozen=True)
class FitReport:
    """Power-law fit ``value ~ coefficient * gamma**exponent`` on a window.

    ``leading_exponent`` rounds the fitted exponent to an integer and
    ``leading_coefficient`` is the gamma -> 0 intercept of ``value /
    gamma**leading_exponent`` (quadratic in gamma), which removes the bias that
    higher-order terms put into the free log-log intercept.
    """

    family: str
    exponent: float
    coefficient: float
    window: tuple[float, float]
    r_squared: float
    leading_exponent: int
    leading_coefficient: float

    def as_dict(self) -> dict:
        return asdict(self)


def _window_mask(gammas: np.ndarray, window: tuple[float, float]) -> np.ndarray:
    lo, hi = window
    return (gammas >= lo * (1 - 1e-12)) & (gammas <= hi * (1 + 1e-12))


def fit_power_law(
    gammas: Sequence[float], values: Sequence[float], window: tuple[float, float] = LOSS_WINDOW, family: str = ""
) -> FitReport:
    g = np.asarray(gammas, dtype=float)
    v = np.asarray(values, dtype=float)
    mask = _window_mask(g, window)
    if mask.sum() < 3:
        raise ValueError(f"fit window {window} holds fewer than 3 grid points")
    g, v = g[mask], v[mask]
    if np.any(v <= 0):
        raise ValueError("power-law fit needs positive values")
    x, y = np.log(g), np.log(v)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    p = int(round(slope))
    lead = float(np.polyfit(g, v / g**p, 2)[-1])
    return FitReport(family, float(slope), float(math.exp(intercept)), tuple(window), min(max(r2, 0.0), 1.0), p, lead)


def quadratic_coefficient(
    fidelity: Callable[[float], float], window: tuple[float, float] = FIDELITY_WINDOW, points: int = 8
) -> float:
    """gamma -> 0 limit of ``(1 - F)/gamma^2`` from a quadratic fit on the window."""
    g = np.linspace(window[0], window[1], points)
    y = np.array([(1.0 - fidelity(x)) / x**2 for x in g])
    return float(np.polyfit(g, y, 2)[-1])


# Kink detector --------------------------------------------------------------


def kink_statistic(gammas: Sequence[float], values: Sequence[float]) -> np.ndarray:
    """Scale-free slope-jump statistic on the log-log curve.

    At interior point i the jump ``|s_right - s_left|`` of log-log slopes is
    divided by the half-span of its two intervals, giving a local curvature;
    the statistic is that curvature over the median curvature of the points
    2..4 grid steps away. Points without such neighbours on both sides (the
    three outermost at each end) get NaN.
    """
    x = np.log(np.asarray(gammas, dtype=float))
    y = np.log(np.clip(np.asarray(values, dtype=float), 1e-300, None))
    n = len(x)
    out = np.full(n, np.nan)
    if n < 3:
        return out
    slopes = np.diff(y) / np.diff(x)
    curv = np.full(n, np.nan)
    curv[1:-1] = np.abs(np.diff(slopes)) / ((x[2:] - x[:-2]) / 2.0)
    for i in range(1, n - 1):
        left = [j for j in range(i - KINK_HALF_WIDTH, i - 1) if j >= 1]
        right = [j for j in range(i + 2, i + KINK_HALF_WIDTH + 1) if j <= n - 2]
        if not left or not right:
            continue
        bg = float(np.median(curv[left + right]))
        out[i] = curv[i] / (bg + 1e-12)
    return out


def detect_kinks(gammas: Sequence[float], values: Sequence[float], threshold: float = KINK_THRESHOLD) -> list[int]:
    stat = kink_statistic(gammas, values)
    return [i for i, s in enumerate(stat) if np.isfinite(s) and s > threshold]


def kink_at(gammas: Sequence[float], values: Sequence[float], gamma0: float) -> tuple[bool, list[float]]:
    """Whether the detector fires within one grid step of gamma0, plus every hit.

    A frozen code can have further genuine kinks (another KL term crossing
    zero), so hits elsewhere are reported rather than rejected.
    """
    hits = detect_kinks(gammas, values)
    idx = int(np.argmin(np.abs(np.log(np.asarray(gammas)) - math.log(gamma0))))
    located = any(abs(i - idx) <= 1 for i in hits)
    return located, [float(gammas[i]) for i in hits]


# Sweeps ---------------------------------------------------------------------


def _family_code(family: str, n: int, q: int, gamma: float) -> CodeSpace:
    return build_family(Family(family), n, gamma, q)


def _error_set(code: CodeSpace, gamma: float):
    kind = "bosonic" if code.is_bosonic else "qudit"
    return error_set_for(code.q, code.n, gamma, kind=kind)


def _loss_row(args) -> tuple[float, str, float, float]:
    family, label, n, q, gamma, frozen = args
    code = frozen if frozen is not None else _family_code(family, n, q, gamma)
    errs = _error_set(code, gamma)
    return gamma, label, l1_loss(code, errs), l2_loss(code, errs)


def _fidelity_row(args) -> tuple:
    family, n, q, gamma, states, seed = args
    code = _family_code(family, n, q, gamma)
    errs = _error_set(code, gamma)
    plan = build_recovery(code, errs)
    f_plan = worst_case_fidelity(plan)
    f_oracle = fidelity_oracle_min_over_states(code, errs, plan, n_restarts=states, seed=seed)
    basis = code.classes and _basis_of(code)
    f_cf = closed_form_fidelity(family, code.n, code.k, code.q, gamma, basis=basis or None)
    return gamma, family, code.n, code.k, code.q, f_plan, f_oracle, f_cf


def _basis_of(code: CodeSpace) -> SCBasisSet | None:
    if code.family in (Family.NSA_PC, Family.LNCY):
        return None
    return SCBasisSet(code.n, code.q, code.classes)


def _map(fn, jobs: list, workers: int) -> list:
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, jobs))
    return [fn(j) for j in jobs]


def _fmt(x) -> str:
    return format(x, ".17g") if isinstance(x, float) else str(x)


def to_csv(header: list[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def sweep_loss_rows(config: SweepConfig, frozen: dict[str, CodeSpace] | None = None) -> list[tuple]:
    """Loss rows for every family on the grid, plus frozen-code curves.

    With ``gamma0`` set, every NSA family is also swept with its code frozen at
    gamma0 (label ``<family>@gamma0``). ``frozen`` adds explicit fixed codes.
    """
    config.validate()
    grid = config.grid()
    jobs = [(fam, fam, config.n, config.q, g, None) for fam in config.families for g in grid]
    curves = dict(frozen or {})
    if config.gamma0 is not None:
        for fam in config.families:
            if fam.startswith("NSA"):
                curves[f"{fam}@gamma0"] = _family_code(fam, config.n, config.q, config.gamma0)
    for label, code in curves.items():
        jobs += [(None, label, code.n, code.q, g, code) for g in grid]
    rows = _map(_loss_row, jobs, config.workers)
    order = {label: i for i, label in enumerate(list(config.families) + list(curves))}
    return sorted(rows, key=lambda r: (order[r[1]], r[0]))


def cmd_sweep_loss(config: SweepConfig, frozen: dict[str, CodeSpace] | None = None) -> str:
    return to_csv(LOSS_HEADER, sweep_loss_rows(config, frozen))


def sweep_fidelity_rows(config: SweepConfig) -> list[tuple]:
    config.validate()
    jobs = [
        (fam, config.n, config.q, g, config.oracle_states, config.seed)
        for fam in config.families
        for g in config.grid()
    ]
    rows = _map(_fidelity_row, jobs, config.workers)
    order = {fam: i for i, fam in enumerate(config.families)}
    return sorted(rows, key=lambda r: (order[r[1]], r[0]))


def cmd_sweep_fidelity(config: SweepConfig) -> str:
    return to_csv(FIDELITY_HEADER, sweep_fidelity_rows(config))


def loss_fits(rows: list[tuple], window: tuple[float, float]) -> list[FitReport]:
    by_label: dict[str, list[tuple[float, float]]] = {}
    for gamma, label, l1, _ in rows:
        by_label.setdefault(label, []).append((gamma, l1))
    out = []
    for label, pts in by_label.items():
        g, v = zip(*pts)
        if sum(_window_mask(np.asarray(g), window)) >= 3:
            out.append(fit_power_law(g, v, window, label))
    return out


def gnuplot_script(csv_path: str, labels: list[str], column: int, ylabel: str) -> str:
    """A gnuplot script plotting one CSV column against gamma per family (log-log)."""
    lines = [
        "set datafile separator ','",
        "set logscale xy",
        "set xlabel 'gamma'",
        f"set ylabel '{ylabel}'",
        "set key left top",
    ]
    plots = [
        f"'{csv_path}' using 1:(strcol(2) eq '{label}' ? ${column} : 1/0) with linespoints title '{label}'"
        for label in labels
    ]
    lines.append("plot " + ", \\\n     ".join(plots) if plots else "# no curves")
    return "\n".join(lines) + "\n"
