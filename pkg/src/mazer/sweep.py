"""Parameter sweeps over the scattering engines, written as CSV."""
from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import __version__
from .core import MazerParams, is_blocked, wavenumber_arrays
from .errors import MazerError
from .mesa import mesa_arrays, probability_arrays
from .regimes import cold_arrays, cold_fit_arrays, peak_amplitude, peak_positions, rabi_arrays
from .solver import ModeProfile, ProfileKind, default_slices, load_profile, solve_scattering

AXES = ("n", "k_over_kappa", "delta_over_g", "kappa_L")
SWEEP_AXES = ("k_over_kappa", "delta_over_g", "kappa_L")
ENGINES = ("closed_form", "oracle", "rabi", "cold_approx", "cold_fit")
AMPLITUDE_ENGINES = ("closed_form", "oracle")
COLUMNS = ("r_a", "t_a", "r_b", "t_b", "p_em", "error")
FAILURE_FRACTION = 1e-3


@dataclass
class SweepSpec:
    """A grid of parameter points and the engine evaluating them.

    ``axes`` holds one or two swept parameter names with matching ``ranges``
    entries ``(min, max, steps)``; the first axis is the outer loop. Each entry
    of ``curves`` overrides ``fixed`` for one pass over the grid. When
    ``peak_m`` is set, kappa_L is replaced by the m-th predicted cold-regime
    peak position and an ``amplitude`` column is added.
    """

    axes: Tuple[str, ...]
    ranges: Tuple[Tuple[float, float, int], ...]
    fixed: Dict[str, float] = field(default_factory=dict)
    curves: List[Dict[str, float]] = field(default_factory=lambda: [{}])
    engine: str = "closed_form"
    profile: str = "mesa"
    slices: Optional[int] = None
    peak_m: Optional[int] = None

    def validate(self):
        if not 1 <= len(self.axes) <= 2 or len(self.axes) != len(self.ranges):
            raise ValueError("one or two axes, each with a (min, max, steps) range")
        for ax, (lo, hi, steps) in zip(self.axes, self.ranges):
            if ax not in SWEEP_AXES:
                raise ValueError(f"unknown axis {ax!r}")
            if int(steps) != steps or steps < 2:
                raise ValueError("steps must be an integer >= 2")
            if not lo < hi:
                raise ValueError(f"axis {ax}: min must be < max")
        if self.engine not in ENGINES:
            raise ValueError(f"unknown engine {self.engine!r}")
        if len(set(self.axes)) != len(self.axes):
            raise ValueError("axes must differ")
        for curve in self.curves:
            missing = [a for a in AXES if a not in self.axes and a not in {**self.fixed, **curve}]
            if self.peak_m is not None and "kappa_L" in missing:
                missing.remove("kappa_L")
            if missing:
                raise ValueError(f"missing fixed parameter(s): {', '.join(missing)}")
        if self.engine != "oracle" and self.profile != "mesa":
            raise ValueError("only the oracle engine accepts non-mesa profiles")
        if self.slices is not None and self.slices < 1:
            raise ValueError("slices must be >= 1")
        self.mode_profile()  # parses file profiles early

    def mode_profile(self) -> ModeProfile:
        if self.profile.startswith("file:"):
            return load_profile(self.profile[5:])
        return ModeProfile(ProfileKind(self.profile))

    def grid(self) -> Dict[str, np.ndarray]:
        """All grid points as flat arrays, in output order."""
        values = [np.linspace(lo, hi, int(steps)) for lo, hi, steps in self.ranges]
        mesh = np.meshgrid(*values, indexing="ij")
        cols = {a: [] for a in AXES}
        for curve in self.curves:
            point = {**self.fixed, **curve}
            size = mesh[0].size
            for a in AXES:
                if a in self.axes:
                    cols[a].append(mesh[self.axes.index(a)].ravel())
                elif a == "kappa_L" and self.peak_m is not None:
                    cols[a].append(np.full(size, np.nan))
                else:
                    cols[a].append(np.full(size, float(point[a])))
        out = {a: np.concatenate(v) for a, v in cols.items()}
        if self.peak_m is not None:
            out["kappa_L"] = np.array([
                peak_positions(int(n), d, self.peak_m)[-1]
                for n, d in zip(out["n"], out["delta_over_g"])
            ])
        n = out["n"]
        if np.any(n < 0) or np.any(n != np.round(n)):
            raise ValueError("n must be a non-negative integer")
        if not np.all(out["k_over_kappa"] > 0):
            raise ValueError("k_over_kappa must be > 0 on the whole grid")
        if not np.all(out["kappa_L"] >= 0):
            raise ValueError("kappa_L must be >= 0 on the whole grid")
        if not np.all(np.isfinite(out["delta_over_g"])):
            raise ValueError("delta_over_g must be finite")
        return out

    def echo(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


# ---------------------------------------------------------------------------
# engines

def _oracle_point(args):
    n, k, d, L, profile, slices = args
    try:
        amps = solve_scattering(profile, MazerParams(int(n), k, d, L), slices)
    except MazerError as exc:
        return None, type(exc).__name__
    return amps.as_array(), ""


def evaluate(engine: str, grid: Dict[str, np.ndarray], profile: Optional[ModeProfile] = None,
             slices: Optional[int] = None, jobs: int = 1) -> Dict[str, np.ndarray]:
    """Evaluate one engine on a grid.

    Returns arrays for r_a, t_a, r_b, t_b, p_em (nan where undefined), the
    complex ``amplitudes`` (rows x 4, amplitude engines only) and ``error``
    (string per row, empty when fine).
    """
    n, k, d, L = (grid[a] for a in AXES)
    size = len(k)
    nan = np.full(size, np.nan)
    error = np.full(size, "", dtype=object)
    blocked = is_blocked(k, d)
    amps = None
    if engine in AMPLITUDE_ENGINES:
        if engine == "closed_form":
            ra, ta, rb, tb, bad = mesa_arrays(n, k, d, L)
            amps = np.stack([ra, ta, rb, tb], axis=-1)
            error[bad] = "SingularKernel"
        else:
            profile = profile or ModeProfile.mesa()
            slices = slices or default_slices(profile)
            tasks = [(n[i], k[i], d[i], L[i], profile, slices) for i in range(size)]
            if jobs > 1:
                with ProcessPoolExecutor(max_workers=jobs) as pool:
                    results = list(pool.map(_oracle_point, tasks, chunksize=64))
            else:
                results = [_oracle_point(t) for t in tasks]
            amps = np.full((size, 4), np.nan + 0j)
            for i, (a, err) in enumerate(results):
                if a is None:
                    error[i] = err
                else:
                    amps[i] = a
        kb, _, _ = wavenumber_arrays(n, k, d)
        r_a, t_a, r_b, t_b = probability_arrays(*amps.T, k, kb)
        p_em = np.where(blocked, 0.0, r_b + t_b)
        failed = error != ""
        for arr in (r_a, t_a, r_b, t_b):
            arr[failed] = np.nan
        p_em = np.where(failed & ~blocked, np.nan, p_em)
        return dict(r_a=r_a, t_a=t_a, r_b=r_b, t_b=t_b, p_em=p_em, amplitudes=amps, error=error)
    if engine == "rabi":
        p_em = rabi_arrays(n, d, 0.5 * L / k)
    elif engine == "cold_approx":
        p_em, bad = cold_arrays(n, k, d, L)
        error[bad] = "SingularKernel"
        p_em = np.where(bad, np.nan, p_em)
    elif engine == "cold_fit":
        p_em = cold_fit_arrays(n, k, d, L)
    else:
        raise ValueError(f"unknown engine {engine!r}")
    return dict(r_a=nan, t_a=nan.copy(), r_b=nan.copy(), t_b=nan.copy(),
                p_em=np.asarray(p_em, dtype=float), amplitudes=None, error=error)


# ---------------------------------------------------------------------------
# output

def fmt(x) -> str:
    if isinstance(x, str):
        return x
    x = float(x)
    if math.isnan(x):
        return ""
    return f"{x:.12g}"


def _header(kind: str, spec: SweepSpec) -> List[str]:
    return [f"# mazer {__version__} {kind}", f"# spec {spec.echo()}"]


def run_sweep(spec: SweepSpec, jobs: int = 1):
    """Evaluate ``spec`` and return ``(csv_text, n_failed_rows)``."""
    spec.validate()
    grid = spec.grid()
    res = evaluate(spec.engine, grid, spec.mode_profile(), spec.slices, jobs)
    columns = list(AXES) + list(COLUMNS)
    if spec.peak_m is not None:
        columns.append("amplitude")
        amp = np.array([peak_amplitude(k, d) for k, d in zip(grid["k_over_kappa"],
                                                               grid["delta_over_g"])])
    lines = _header("sweep", spec) + [",".join(columns)]
    for i in range(len(grid["k_over_kappa"])):
        row = [fmt(grid[a][i]) for a in AXES]
        row += [fmt(res[c][i]) for c in COLUMNS]
        if spec.peak_m is not None:
            row.append(fmt(amp[i]))
        lines.append(",".join(row))
    return "\n".join(lines) + "\n", int(np.count_nonzero(res["error"] != ""))


@dataclass
class CompareSummary:
    pairs: List[Tuple[str, str]]
    max_dev: List[float]
    mean_dev: List[float]
    max_amp_dev: List[Optional[float]]


def compare(engines: Sequence[str], spec: SweepSpec, jobs: int = 1):
    """Evaluate several engines on one grid; deviations are taken against the first.

    Returns ``(csv_text, summary, n_failed_rows)``. Rows where any engine
    failed are excluded from the summary statistics.
    """
    if len(engines) < 2:
        raise ValueError("compare needs at least two engines")
    spec.validate()
    for e in engines:
        if e not in ENGINES:
            raise ValueError(f"unknown engine {e!r}")
    grid = spec.grid()
    results = [evaluate(e, grid, spec.mode_profile(), spec.slices, jobs) for e in engines]
    failed = np.zeros(len(grid["k_over_kappa"]), dtype=bool)
    for r in results:
        failed |= r["error"] != ""
    ref = results[0]
    devs, pairs, amp_devs = [], [], []
    for e, r in zip(engines[1:], results[1:]):
        pairs.append((engines[0], e))
        devs.append(np.abs(r["p_em"] - ref["p_em"]))
        if r["amplitudes"] is not None and ref["amplitudes"] is not None:
            amp_devs.append(np.max(np.abs(r["amplitudes"] - ref["amplitudes"]), axis=1))
        else:
            amp_devs.append(None)
    ok = ~failed
    summary = CompareSummary(
        pairs=pairs,
        max_dev=[float(np.max(dv[ok])) if ok.any() else math.nan for dv in devs],
        mean_dev=[float(np.mean(dv[ok])) if ok.any() else math.nan for dv in devs],
        max_amp_dev=[None if a is None else (float(np.max(a[ok])) if ok.any() else math.nan)
                     for a in amp_devs],
    )

    columns = list(AXES) + [f"p_em_{e}" for e in engines]
    columns += [f"dev_{a}_{b}" for a, b in pairs] + ["error"]
    lines = _header("compare", spec) + [",".join(columns)]
    for i in range(len(failed)):
        row = [fmt(grid[a][i]) for a in AXES]
        row += [fmt(r["p_em"][i]) for r in results]
        row += [fmt(dv[i]) for dv in devs]
        row.append(";".join(sorted({r["error"][i] for r in results if r["error"][i]})))
        lines.append(",".join(row))
    for (a, b), mx, mn, am in zip(pairs, summary.max_dev, summary.mean_dev, summary.max_amp_dev):
        tail = f" max_amplitude_dev={fmt(am)}" if am is not None else ""
        lines.append(f"# summary {a} vs {b}: max_dev={fmt(mx)} mean_dev={fmt(mn)}{tail}")
    return "\n".join(lines) + "\n", summary, int(np.count_nonzero(failed))


# ---------------------------------------------------------------------------
# presets

def _equal_level_momentum(n: int, k: float, delta: float) -> float:
    """Momentum which, at resonance, sees the same k_plus**2 as (k, delta)."""
    kp2 = complex(wavenumber_arrays(n, k, delta)[1]) ** 2
    return math.sqrt(kp2.real + math.sqrt(n + 1.0))


def preset(name: str) -> SweepSpec:
    """Named sweeps (fig3 to fig7, peakamp) with the axes and curves of the reference plots."""
    if name == "fig3":
        return SweepSpec(axes=("k_over_kappa",), ranges=((0.01, 3.0, 1000),),
                         fixed=dict(n=0, kappa_L=10 * math.pi),
                         curves=[dict(delta_over_g=0.0), dict(delta_over_g=0.5)])
    if name == "fig4":
        return SweepSpec(axes=("delta_over_g",), ranges=((-2.0, 2.0, 1000),),
                         fixed=dict(n=0, k_over_kappa=1.01, kappa_L=100.0))
    if name == "fig5":
        k_hot = _equal_level_momentum(0, 1.01, -0.1)
        return SweepSpec(axes=("kappa_L",), ranges=((0.0, 100.0, 1000),), fixed=dict(n=0),
                         curves=[dict(k_over_kappa=1.01, delta_over_g=0.0),
                                 dict(k_over_kappa=1.01, delta_over_g=-0.1),
                                 dict(k_over_kappa=round(k_hot, 12), delta_over_g=0.0)])
    if name == "fig6":
        return SweepSpec(axes=("kappa_L",), ranges=((0.0, 40.0, 4001),),
                         fixed=dict(n=0, k_over_kappa=0.1),
                         curves=[dict(delta_over_g=-0.1), dict(delta_over_g=0.0),
                                 dict(delta_over_g=0.005)])
    if name == "fig7":
        return SweepSpec(axes=("delta_over_g", "kappa_L"),
                         ranges=((-10.0, 0.01, 201), (0.0, 20.0, 201)),
                         fixed=dict(n=0, k_over_kappa=0.1))
    if name == "peakamp":
        return SweepSpec(axes=("delta_over_g",), ranges=((-0.05, 0.01, 601),), fixed=dict(n=0),
                         curves=[dict(k_over_kappa=0.1), dict(k_over_kappa=0.05)], peak_m=1)
    raise ValueError(f"unknown preset {name!r}")


PRESETS = ("fig3", "fig4", "fig5", "fig6", "fig7", "peakamp")
