"""Run configuration: a TOML file with named sections.

Every physical quantity carries an explicit unit suffix in its key name
(l_nh, f_ref_ghz, i_s_ma, ...) because unit slips are the dominant
failure mode in RF tooling.  Unknown keys are rejected rather than
ignored for the same reason.
"""

from __future__ import annotations

import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib as _toml
else:
    import tomli as _toml

import numpy as np

from .coupling import CouplingParams
from .errors import ConfigError
from .extraction import (NonPwModel, PiecewiseModel, SamplingGrid,
                         extract_non_pw, extract_piecewise,
                         read_sample_table)
from .oscillator import VaractorModel, VdpOscillator, VdpParams, calibrate_v_bi
from .solver import ArraySpec

_DEG = math.pi / 180.0


def _section(data: dict, name: str, required=True) -> dict:
    sec = data.pop(name, None)
    if sec is None:
        if required:
            raise ConfigError(f"missing [{name}] section")
        return {}
    if not isinstance(sec, dict):
        raise ConfigError(f"[{name}] must be a table")
    return dict(sec)


def _take(sec: dict, secname: str, key: str, kind, default=None, required=False):
    if key not in sec:
        if required:
            raise ConfigError(f"[{secname}] is missing required key {key!r}")
        return default
    val = sec.pop(key)
    if kind is float and isinstance(val, int) and not isinstance(val, bool):
        val = float(val)
    if not isinstance(val, kind) or isinstance(val, bool) and kind is not bool:
        raise ConfigError(
            f"[{secname}] {key} must be of type {kind.__name__}, "
            f"got {type(val).__name__}")
    return val


def _reject_unknown(sec: dict, secname: str):
    if sec:
        raise ConfigError(
            f"unknown key(s) in [{secname}]: {', '.join(sorted(sec))}")


@dataclass(frozen=True)
class OscillatorConfig:
    """Analytic VdP values or a sample-table path for one oscillator."""

    table_path: Path | None = None
    a: float | None = None
    b: float | None = None
    l: float | None = None
    c_jo: float | None = None
    m: float | None = None
    v_bi: float | None = None
    g_load: float | None = None
    c_out: float | None = None

    @property
    def analytic(self) -> bool:
        return self.table_path is None


@dataclass(frozen=True)
class RunConfig:
    """Validated contents of a run-configuration file."""

    n: int
    q: int  # 0-based
    eta_q: float
    oscillators: tuple[OscillatorConfig, ...]
    coupling: CouplingParams
    grid: SamplingGrid
    tol: float
    max_iterations: int
    anchor: str
    pin_inner: bool
    dphi_values: tuple[float, ...]
    inj_i_s: float
    inj_theta_points: int
    inj_dphi: float
    val_dphi_values: tuple[float, ...]
    val_eta_tol: float
    val_min_ratio: float
    val_nonpw_eta_c: float
    output_dir: Path
    base_dir: Path

    @classmethod
    def load(cls, path: str | os.PathLike) -> "RunConfig":
        path = Path(path)
        try:
            with open(path, "rb") as fh:
                data = _toml.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from None
        except _toml.TOMLDecodeError as exc:
            raise ConfigError(f"malformed config file: {exc}") from None
        return cls.from_dict(data, base_dir=path.parent)

    @classmethod
    def from_dict(cls, data: dict, base_dir: Path = Path(".")) -> "RunConfig":
        data = dict(data)

        arr = _section(data, "array")
        n = _take(arr, "array", "n", int, required=True)
        q1 = _take(arr, "array", "q", int, required=True)
        eta_q = _take(arr, "array", "eta_q_v", float, required=True)
        _reject_unknown(arr, "array")
        if n < 2:
            raise ConfigError("array.n must be at least 2")
        if not 1 <= q1 <= n:
            raise ConfigError(f"array.q = {q1} outside 1..{n}")

        osc = _section(data, "oscillator")
        overrides = osc.pop("override", [])
        tables = osc.pop("table", [])
        base = {
            "a": _take(osc, "oscillator", "a_s", float),
            "b": _take(osc, "oscillator", "b_a_per_v3", float),
            "l_nh": _take(osc, "oscillator", "l_nh", float),
            "c_jo_pf": _take(osc, "oscillator", "c_jo_pf", float),
            "m": _take(osc, "oscillator", "m", float),
            "v_bi_v": _take(osc, "oscillator", "v_bi_v", float),
            "cal_eta": _take(osc, "oscillator", "calibrate_eta_v", float),
            "cal_f_ghz": _take(osc, "oscillator", "calibrate_f_ghz", float),
            "r_load": _take(osc, "oscillator", "r_load_ohm", float),
            "c_out_pf": _take(osc, "oscillator", "c_out_pf", float),
        }
        _reject_unknown(osc, "oscillator")

        per: list[dict] = [dict(base) for _ in range(n)]
        if not isinstance(overrides, list):
            raise ConfigError("[[oscillator.override]] must be an array of tables")
        for ov in overrides:
            ov = dict(ov)
            idx = _take(ov, "oscillator.override", "index", int, required=True)
            if not 1 <= idx <= n:
                raise ConfigError(f"oscillator.override index {idx} outside 1..{n}")
            for key, dest in (("a_s", "a"), ("b_a_per_v3", "b"),
                              ("l_nh", "l_nh"), ("c_jo_pf", "c_jo_pf"),
                              ("m", "m"), ("v_bi_v", "v_bi_v"),
                              ("r_load_ohm", "r_load"),
                              ("c_out_pf", "c_out_pf")):
                if key in ov:
                    per[idx - 1][dest] = _take(ov, "oscillator.override",
                                               key, float)
            _reject_unknown(ov, "oscillator.override")

        overridden = {ov["index"] for ov in overrides if "index" in ov}
        table_paths: dict[int, Path] = {}
        if not isinstance(tables, list):
            raise ConfigError("[[oscillator.table]] must be an array of tables")
        for tb in tables:
            tb = dict(tb)
            idx = _take(tb, "oscillator.table", "index", int, required=True)
            rel = _take(tb, "oscillator.table", "path", str, required=True)
            _reject_unknown(tb, "oscillator.table")
            if not 1 <= idx <= n:
                raise ConfigError(f"oscillator.table index {idx} outside 1..{n}")
            if idx in overridden:
                raise ConfigError(
                    f"oscillator {idx} has both a sample table and analytic "
                    "overrides; the override would be silently ignored")
            if idx in table_paths:
                raise ConfigError(f"oscillator {idx} has two sample tables")
            p = base_dir / rel
            if not p.is_file():
                raise ConfigError(f"sample table {p} does not exist")
            table_paths[idx - 1] = p

        oscillators = []
        for i in range(n):
            if i in table_paths:
                oscillators.append(OscillatorConfig(table_path=table_paths[i]))
                continue
            d = per[i]
            for key in ("a", "b", "l_nh", "c_jo_pf", "m", "r_load"):
                if d[key] is None:
                    raise ConfigError(
                        f"oscillator {i + 1}: missing analytic parameter "
                        f"(a_s, b_a_per_v3, l_nh, c_jo_pf, m, r_load_ohm) "
                        "and no sample table given")
            l = d["l_nh"] * 1e-9
            c_jo = d["c_jo_pf"] * 1e-12
            v_bi = d["v_bi_v"]
            if v_bi is None:
                if d["cal_eta"] is None or d["cal_f_ghz"] is None:
                    raise ConfigError(
                        "either v_bi_v or the calibrate_eta_v/"
                        "calibrate_f_ghz pair must be given")
                v_bi = calibrate_v_bi(c_jo, d["m"], l, d["cal_eta"],
                                      d["cal_f_ghz"] * 1e9)
            if d["r_load"] <= 0:
                raise ConfigError("r_load_ohm must be positive")
            oscillators.append(OscillatorConfig(
                a=d["a"], b=d["b"], l=l, c_jo=c_jo, m=d["m"], v_bi=v_bi,
                g_load=1.0 / d["r_load"],
                c_out=None if d["c_out_pf"] is None else d["c_out_pf"] * 1e-12,
            ))

        cpl = _section(data, "coupling")
        coupling = CouplingParams(
            z_o=_take(cpl, "coupling", "z_o_ohm", float, required=True),
            psi_o=_take(cpl, "coupling", "psi_o_deg", float, required=True) * _DEG,
            f_ref=_take(cpl, "coupling", "f_ref_ghz", float, required=True) * 1e9,
            r_s=_take(cpl, "coupling", "r_s_ohm", float, required=True),
            r_p=_take(cpl, "coupling", "r_p_ohm", float, required=True),
        )
        _reject_unknown(cpl, "coupling")

        gr = _section(data, "grid")
        start = _take(gr, "grid", "eta_start_v", float, required=True)
        stop = _take(gr, "grid", "eta_stop_v", float, required=True)
        points = _take(gr, "grid", "points", int, required=True)
        _reject_unknown(gr, "grid")
        if not start < stop:
            raise ConfigError("grid.eta_start_v must be below grid.eta_stop_v")
        if points < 2:
            raise ConfigError("grid.points must be at least 2")
        grid = SamplingGrid.linspace(start, stop, points)
        if not start <= eta_q <= stop:
            raise ConfigError(
                f"array.eta_q_v = {eta_q} outside the sampling grid "
                f"[{start}, {stop}]")

        sv = _section(data, "solver", required=False)
        tol = _take(sv, "solver", "tol", float, default=1e-9)
        max_iter = _take(sv, "solver", "max_iterations", int, default=50)
        anchor = _take(sv, "solver", "anchor", str, default="left")
        pin_inner = _take(sv, "solver", "pin_inner", bool, default=False)
        _reject_unknown(sv, "solver")
        if anchor not in ("left", "nearest"):
            raise ConfigError("solver.anchor must be 'left' or 'nearest'")
        if tol <= 0 or max_iter < 1:
            raise ConfigError("solver.tol and solver.max_iterations must be positive")

        sw = _section(data, "sweep", required=False)
        d0 = _take(sw, "sweep", "dphi_start_rad", float, default=-1.4)
        d1 = _take(sw, "sweep", "dphi_stop_rad", float, default=1.4)
        ds = _take(sw, "sweep", "dphi_step_rad", float, default=0.05)
        _reject_unknown(sw, "sweep")
        if ds <= 0 or d1 <= d0:
            raise ConfigError("sweep range must be increasing with positive step")
        dphis = tuple(np.arange(d0, d1 + 0.5 * ds, ds))

        ij = _section(data, "injection", required=False)
        i_s = _take(ij, "injection", "i_s_ma", float, default=0.5) * 1e-3
        theta_points = _take(ij, "injection", "theta_points", int, default=64)
        inj_dphi = _take(ij, "injection", "dphi_rad", float, default=0.0)
        _reject_unknown(ij, "injection")
        if i_s < 0 or theta_points < 2:
            raise ConfigError("injection.i_s_ma must be >= 0 and theta_points >= 2")

        va = _section(data, "validate", required=False)
        v0 = _take(va, "validate", "dphi_start_rad", float, default=-1.0)
        v1 = _take(va, "validate", "dphi_stop_rad", float, default=1.0)
        vs = _take(va, "validate", "dphi_step_rad", float, default=0.1)
        val_tol = _take(va, "validate", "eta_tol_v", float, default=5e-3)
        val_ratio = _take(va, "validate", "min_error_ratio", float, default=2.0)
        val_anchor = _take(va, "validate", "nonpw_eta_c_v", float, default=eta_q)
        _reject_unknown(va, "validate")
        if vs <= 0 or v1 <= v0:
            raise ConfigError("validate range must be increasing with positive step")
        val_dphis = tuple(np.arange(v0, v1 + 0.5 * vs, vs))

        out = _section(data, "output", required=False)
        out_dir = Path(_take(out, "output", "dir", str, default="out"))
        _reject_unknown(out, "output")

        if data:
            raise ConfigError(
                f"unknown top-level section(s): {', '.join(sorted(data))}")

        return cls(
            n=n, q=q1 - 1, eta_q=eta_q, oscillators=tuple(oscillators),
            coupling=coupling, grid=grid, tol=tol,
            max_iterations=max_iter, anchor=anchor, pin_inner=pin_inner,
            dphi_values=dphis, inj_i_s=i_s, inj_theta_points=theta_points,
            inj_dphi=inj_dphi, val_dphi_values=val_dphis,
            val_eta_tol=val_tol, val_min_ratio=val_ratio,
            val_nonpw_eta_c=val_anchor,
            output_dir=out_dir if out_dir.is_absolute() else base_dir / out_dir,
            base_dir=base_dir,
        )

    # ------------------------------------------------------------------
    # model builders

    def analytic_oscillator(self, i: int) -> VdpOscillator:
        oc = self.oscillators[i]
        if not oc.analytic:
            raise ConfigError(
                f"oscillator {i + 1} is table-backed; the requested "
                "operation needs analytic parameters")
        return VdpOscillator(VdpParams(
            a=oc.a, b=oc.b, l=oc.l,
            varactor=VaractorModel(oc.c_jo, oc.m, oc.v_bi),
            g_load=oc.g_load, c_out=oc.c_out))

    def pw_models(self) -> tuple:
        models = []
        for i, oc in enumerate(self.oscillators):
            if oc.analytic:
                models.append(extract_piecewise(self.analytic_oscillator(i),
                                                self.grid))
            else:
                models.append(read_sample_table(oc.table_path))
        return tuple(models)

    def nonpw_models(self, eta_c: float) -> tuple:
        models = []
        for i, oc in enumerate(self.oscillators):
            if oc.analytic:
                models.append(extract_non_pw(self.analytic_oscillator(i), eta_c))
            else:
                model = read_sample_table(oc.table_path)
                if isinstance(model, PiecewiseModel):
                    k = model.anchor(eta_c, nearest=True)
                    model = NonPwModel(model.samples[k])
                models.append(model)
        return tuple(models)

    def oracle_models(self) -> tuple:
        return tuple(self.analytic_oscillator(i) for i in range(self.n))

    def spec(self, models) -> ArraySpec:
        return ArraySpec(models=models, coupling=self.coupling, q=self.q,
                         eta_q=self.eta_q, anchor=self.anchor,
                         pin_inner=self.pin_inner)
