"""Command-line front end.

Subcommands reproduce the library's headline outputs as CSV (or JSON with a
``meta`` object) written to --out or stdout:

    spectrum    transmission spectrum over a detuning grid
    depth       optical depth vs atom number, with straight-line fit
    dispersion  numeric vs analytic group velocity over an n sweep
    width       transparency window width (numeric/analytic/decomposition)
    decompose   window-curvature eigenmode coefficients and w(n)
    store       solved operating point and efficiency for one n
    sweep       full storage pipeline over a list of n

Flags use laboratory units (mm, MHz, GHz); values are converted internally
to SI angular units under the selected --rate-convention, which every output
file records.  Options may also come from a flat key=value config file
(--config); explicit flags win over the file, which wins over built-in
defaults.  Exit codes: 0 success, 1 numerical failure, 2 configuration
error.  --emit-plot additionally writes a matplotlib script next to the CSV
that renders it (nothing is plotted in-process).
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from .errors import EitArrayError
from .dispersion import (
    decompose_window,
    group_velocity_analytic,
    group_velocity_numeric,
    window_width_analytic,
    window_width_numeric,
)
from .scattering import ArrayGeometry, RATE_CONVENTIONS, fluxonium_atom, quoted_rate
from .spectra import beer_scan, sweep_transmission, write_spectrum_csv
from .storage import efficiency_sweep, sweep_to_json, write_sweep_csv


class ConfigError(Exception):
    """Invalid or inconsistent run configuration (exit code 2)."""


COMMON_DEFAULTS = {
    "gamma_sg_mhz": 0.167,
    "gamma_eg_ratio": 173.0,
    "gamma_es_ratio": 40.0,
    "omega_eg_ghz": 10.4,
    "omega_es_ghz": 6.99,
    "line_speed": 1.2e8,
    "rate_convention": "angular",
    "out": None,
    "format": "csv",
    "emit_plot": False,
    "config": None,
}

COMMAND_DEFAULTS = {
    "spectrum": {"n": 100, "l_mm": 1.0, "rabi_mhz": 309.0, "span_mhz": 500.0, "points": 4096},
    "depth": {"l_mm": 2.90, "n_max": 40},
    "dispersion": {"l_mm": 1.50, "rabi_mhz": 218.0, "n_list": "10,20,50,100,150,200"},
    "width": {"l_mm": 1.50, "rabi_mhz": 218.0, "n_list": "5,10,20,50,100,150,200"},
    "decompose": {"l_mm": 1.50, "rabi_mhz": 218.0, "n_list": "5,10,20,50,100,150,200"},
    "store": {"n": 100, "target_t": 0.99, "vg_fraction": 0.01, "target_pass": 0.98},
    "sweep": {
        "n_list": "5,10,20,50,100,200,300",
        "target_t": 0.99,
        "vg_fraction": 0.01,
        "target_pass": 0.98,
    },
}

_BOOL_KEYS = {"emit_plot"}
_INT_KEYS = {"n", "n_max", "points"}
_STR_KEYS = {"rate_convention", "out", "format", "n_list", "config"}


def _add_common(parser: argparse.ArgumentParser) -> None:
    g = parser.add_argument_group("atom and line parameters")
    g.add_argument("--gamma-sg-mhz", type=float, help="s->g decay rate quoted in MHz [0.167]")
    g.add_argument("--gamma-eg-ratio", type=float, help="gamma_eg / gamma_sg [173]")
    g.add_argument("--gamma-es-ratio", type=float, help="gamma_es / gamma_sg [40]")
    g.add_argument("--omega-eg-ghz", type=float, help="e-g transition frequency in GHz [10.4]")
    g.add_argument("--omega-es-ghz", type=float, help="e-s transition frequency in GHz [6.99]")
    g.add_argument("--line-speed", type=float, help="signal propagation speed in m/s [1.2e8]")
    g.add_argument(
        "--rate-convention",
        choices=RATE_CONVENTIONS,
        help="how MHz-quoted rates map to rad/s: angular=1e6, ordinary=2*pi*1e6 [angular]",
    )
    o = parser.add_argument_group("output")
    o.add_argument("--out", help="output file path (default: stdout)")
    o.add_argument("--format", choices=("csv", "json"), help="output format [csv]")
    o.add_argument("--emit-plot", action="store_true", default=argparse.SUPPRESS,
                   help="also write a matplotlib script rendering the CSV (needs --out)")
    o.add_argument("--config", help="flat key=value config file; flags take precedence")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eitarray",
        description="Microwave transparency, slow light and pulse storage in a 1D atom array.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", help="transmission spectrum over detuning")
    p.add_argument("--n", type=int, help="number of atoms [100]")
    p.add_argument("--l-mm", type=float, help="atom spacing in mm [1.0]")
    p.add_argument("--rabi-mhz", type=float, help="control Rabi modulus quoted in MHz [309]")
    p.add_argument("--span-mhz", type=float,
                   help="detuning half-span S: grid covers +-2*pi*S*1e6 rad/s [500]")
    p.add_argument("--points", type=int, help="grid points [4096]")

    p = sub.add_parser("depth", help="optical depth vs n with line fit (control off)")
    p.add_argument("--l-mm", type=float, help="atom spacing in mm [2.90]")
    p.add_argument("--n-max", type=int, help="largest atom number [40]")

    p = sub.add_parser("dispersion", help="group velocity vs n, numeric and analytic")
    p.add_argument("--l-mm", type=float, help="atom spacing in mm [1.50]")
    p.add_argument("--rabi-mhz", type=float, help="control Rabi modulus quoted in MHz [218]")
    p.add_argument("--n-list", help="comma-separated atom numbers [10,20,50,100,150,200]")

    p = sub.add_parser("width", help="transparency window width vs n")
    p.add_argument("--l-mm", type=float, help="atom spacing in mm [1.50]")
    p.add_argument("--rabi-mhz", type=float, help="control Rabi modulus quoted in MHz [218]")
    p.add_argument("--n-list", help="comma-separated atom numbers [5,10,20,50,100,150,200]")

    p = sub.add_parser("decompose", help="window-curvature eigenmode coefficients and w(n)")
    p.add_argument("--l-mm", type=float, help="atom spacing in mm [1.50]")
    p.add_argument("--rabi-mhz", type=float, help="control Rabi modulus quoted in MHz [218]")
    p.add_argument("--n-list", help="comma-separated atom numbers [5,10,20,50,100,150,200]")

    p = sub.add_parser("store", help="solved operating point and efficiency for one n")
    p.add_argument("--n", type=int, help="number of atoms [100]")
    p.add_argument("--target-t", type=float, help="scattering-free transparency target [0.99]")
    p.add_argument("--vg-fraction", type=float, help="target v_g / c [0.01]")
    p.add_argument("--target-pass", type=float, help="transmitted spectral energy target [0.98]")

    p = sub.add_parser("sweep", help="storage pipeline over a list of n")
    p.add_argument("--n-list", help="comma-separated atom numbers [5,10,20,50,100,200,300]")
    p.add_argument("--target-t", type=float, help="scattering-free transparency target [0.99]")
    p.add_argument("--vg-fraction", type=float, help="target v_g / c [0.01]")
    p.add_argument("--target-pass", type=float, help="transmitted spectral energy target [0.98]")

    for name, sp in sub.choices.items():
        _add_common(sp)
        defaults = {**COMMON_DEFAULTS, **COMMAND_DEFAULTS[name]}
        # SUPPRESS so only explicitly given flags appear in the namespace;
        # precedence is resolved against the config file afterwards.
        for action in sp._actions:
            if action.dest in defaults:
                action.default = argparse.SUPPRESS
    return parser


def _coerce(key: str, raw: str):
    if key in _BOOL_KEYS:
        low = raw.strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"config key {key}: cannot parse boolean from {raw!r}")
    if key in _INT_KEYS:
        try:
            return int(raw)
        except ValueError as exc:
            raise ConfigError(f"config key {key}: {exc}") from None
    if key in _STR_KEYS:
        return raw.strip()
    try:
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"config key {key}: {exc}") from None


def _load_config(path: str, allowed: set[str]) -> dict:
    values = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from None
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, _, raw = stripped.partition("=")
        key = key.strip().replace("-", "_")
        if key not in allowed:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = _coerce(key, raw)
    return values


def _resolve(args: argparse.Namespace) -> dict:
    command = args.command
    provided = {k: v for k, v in vars(args).items() if k != "command"}
    builtin = {**COMMON_DEFAULTS, **COMMAND_DEFAULTS[command]}
    allowed = set(builtin)
    config_path = provided.get("config", None)
    from_file = {}
    if config_path:
        from_file = _load_config(config_path, allowed - {"config"})
    cfg = {**builtin, **from_file, **provided}
    cfg["command"] = command
    _validate(cfg)
    return cfg


def _validate(cfg: dict) -> None:
    for key in ("gamma_sg_mhz", "gamma_eg_ratio", "gamma_es_ratio", "omega_eg_ghz",
                "omega_es_ghz", "line_speed"):
        if cfg[key] <= 0:
            raise ConfigError(f"{key} must be positive")
    if cfg.get("emit_plot") and not cfg.get("out"):
        raise ConfigError("--emit-plot requires --out")
    if cfg["command"] in ("spectrum", "store") and cfg["n"] < 1:
        raise ConfigError("n must be >= 1")
    if cfg["command"] == "spectrum" and cfg["points"] < 16:
        raise ConfigError("points must be >= 16")
    if cfg["command"] == "depth" and cfg["n_max"] < 3:
        raise ConfigError("n-max must be >= 3")
    if cfg["command"] in ("dispersion", "width", "decompose", "sweep"):
        ns = _parse_n_list(cfg["n_list"])
        if min(ns) < 2:
            raise ConfigError(
                "window width and dispersion are per-medium quantities; they are "
                "undefined for a zero-length medium (need every n >= 2)"
            )
    if cfg["command"] == "store" and cfg["n"] < 2:
        raise ConfigError("storage needs a finite medium (n >= 2)")


def _parse_n_list(raw: str) -> list[int]:
    try:
        ns = [int(tok) for tok in str(raw).replace(" ", "").split(",") if tok]
    except ValueError as exc:
        raise ConfigError(f"bad n-list: {exc}") from None
    if not ns:
        raise ConfigError("n-list is empty")
    return ns


def _atom(cfg: dict):
    return fluxonium_atom(
        rate_convention=cfg["rate_convention"],
        gamma_sg_mhz=cfg["gamma_sg_mhz"],
        gamma_eg_ratio=cfg["gamma_eg_ratio"],
        gamma_es_ratio=cfg["gamma_es_ratio"],
        omega_eg_ghz=cfg["omega_eg_ghz"],
        omega_es_ghz=cfg["omega_es_ghz"],
    )


def _meta(cfg: dict, **extra) -> dict:
    meta = {
        "command": cfg["command"],
        "rate_convention": cfg["rate_convention"],
        "gamma_sg_mhz": cfg["gamma_sg_mhz"],
        "gamma_eg_ratio": cfg["gamma_eg_ratio"],
        "gamma_es_ratio": cfg["gamma_es_ratio"],
        "omega_eg_ghz": cfg["omega_eg_ghz"],
        "omega_es_ghz": cfg["omega_es_ghz"],
        "line_speed_m_s": cfg["line_speed"],
    }
    meta.update(extra)
    return meta


def _emit(cfg: dict, text: str) -> None:
    if cfg["out"]:
        with open(cfg["out"], "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _table_csv(meta: dict, columns: list[str], rows: list[list]) -> str:
    lines = [f"# {k} = {v}" for k, v in meta.items()]
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def _table_json(meta: dict, columns: list[str], rows: list[list]) -> str:
    return json.dumps(
        {"meta": meta, "columns": columns, "rows": rows}, indent=2, sort_keys=True
    ) + "\n"


def _fmt(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{value:.12g}"


_PLOT_TEMPLATE = '''"""Auto-generated plot script: renders {csv!r}."""
import csv

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

rows = []
with open({csv!r}, newline="") as fh:
    for line in fh:
        if not line.startswith("#"):
            break
    reader = csv.DictReader(
        (raw for raw in open({csv!r}) if not raw.startswith("#"))
    )
    for record in reader:
        rows.append({{k: float(v) for k, v in record.items()}})

x = [row[{x_col!r}] for row in rows]
fig, ax = plt.subplots(figsize=(7, 4.5))
for column, style in {y_cols!r}:
    ax.plot(x, [row[column] for row in rows], style, label=column)
ax.set_xlabel({x_label!r})
ax.set_ylabel({y_label!r})
ax.legend()
ax.grid(True, alpha=0.3)
fig.tight_layout()
fig.savefig({png!r}, dpi=150)
print("wrote", {png!r})
'''


def _write_plot_script(cfg: dict, x_col: str, y_cols: list, x_label: str, y_label: str) -> None:
    out = cfg["out"]
    script = _PLOT_TEMPLATE.format(
        csv=out, x_col=x_col, y_cols=y_cols, x_label=x_label, y_label=y_label,
        png=out + ".png",
    )
    with open(out + ".plot.py", "w", encoding="utf-8") as fh:
        fh.write(script)


def _cmd_spectrum(cfg: dict) -> None:
    atom = _atom(cfg)
    geom = ArrayGeometry(cfg["n"], cfg["l_mm"] * 1e-3, cfg["line_speed"])
    rabi = quoted_rate(cfg["rabi_mhz"], cfg["rate_convention"])
    span = 2 * math.pi * cfg["span_mhz"] * 1e6
    deltas = np.linspace(-span, span, cfg["points"])
    resp = sweep_transmission(atom, deltas, rabi, geom)
    meta = _meta(cfg, n=cfg["n"], l_mm=cfg["l_mm"], rabi_mhz=cfg["rabi_mhz"])
    columns = ["delta_rad_s", "re_amp", "im_amp", "transmission"]
    if cfg["format"] == "csv" and cfg["out"]:
        write_spectrum_csv(resp, cfg["out"], meta=meta)
    else:
        rows = [
            [float(x), float(y.real), float(y.imag), float(t)]
            for x, y, t in zip(resp.deltas, resp.amplitude, resp.transmission)
        ]
        text = (_table_csv if cfg["format"] == "csv" else _table_json)(meta, columns, rows)
        _emit(cfg, text)
    if cfg["emit_plot"]:
        _write_plot_script(cfg, "delta_rad_s", [("transmission", "-")],
                           "detuning (rad/s)", "transmission")


def _cmd_depth(cfg: dict) -> None:
    atom = _atom(cfg)
    scan = beer_scan(atom, cfg["l_mm"] * 1e-3, cfg["n_max"], cfg["line_speed"])
    meta = _meta(
        cfg,
        l_mm=cfg["l_mm"],
        fit_slope=f"{scan.slope:.12g}",
        fit_intercept=f"{scan.intercept:.12g}",
        fit_r_squared=f"{scan.r_squared:.12g}",
    )
    columns = ["n", "alpha"]
    rows = [[int(n), float(a)] for n, a in zip(scan.ns, scan.alphas)]
    text = (_table_csv if cfg["format"] == "csv" else _table_json)(meta, columns, rows)
    _emit(cfg, text)
    if cfg["emit_plot"]:
        _write_plot_script(cfg, "n", [("alpha", "o")], "atom number n", "optical depth")


def _cmd_dispersion(cfg: dict) -> None:
    atom = _atom(cfg)
    rabi = quoted_rate(cfg["rabi_mhz"], cfg["rate_convention"])
    l = cfg["l_mm"] * 1e-3
    rows = []
    for n in _parse_n_list(cfg["n_list"]):
        geom = ArrayGeometry(n, l, cfg["line_speed"])
        vg_num = group_velocity_numeric(atom, rabi, geom).v_g
        vg_an = group_velocity_analytic(atom, rabi, geom).v_g
        rows.append([n, vg_num, vg_an])
    meta = _meta(cfg, l_mm=cfg["l_mm"], rabi_mhz=cfg["rabi_mhz"], units="vg in m/s")
    columns = ["n", "vg_numeric", "vg_analytic"]
    text = (_table_csv if cfg["format"] == "csv" else _table_json)(meta, columns, rows)
    _emit(cfg, text)
    if cfg["emit_plot"]:
        _write_plot_script(cfg, "n", [("vg_numeric", "o"), ("vg_analytic", "--")],
                           "atom number n", "group velocity (m/s)")


def _cmd_width(cfg: dict) -> None:
    atom = _atom(cfg)
    rabi = quoted_rate(cfg["rabi_mhz"], cfg["rate_convention"])
    l = cfg["l_mm"] * 1e-3
    ns = _parse_n_list(cfg["n_list"])
    _, w_of_n = decompose_window(atom, rabi, ArrayGeometry(ns[0], l, cfg["line_speed"]))
    rows = []
    for n in ns:
        geom = ArrayGeometry(n, l, cfg["line_speed"])
        w_num = window_width_numeric(atom, rabi, geom).w
        w_an = window_width_analytic(atom, rabi, n).w
        rows.append([n, w_num, w_an, w_of_n(n)])
    meta = _meta(cfg, l_mm=cfg["l_mm"], rabi_mhz=cfg["rabi_mhz"], units="w in rad/s")
    columns = ["n", "w_numeric", "w_analytic", "w_decomposition"]
    text = (_table_csv if cfg["format"] == "csv" else _table_json)(meta, columns, rows)
    _emit(cfg, text)
    if cfg["emit_plot"]:
        _write_plot_script(
            cfg, "n",
            [("w_numeric", "o"), ("w_analytic", "--"), ("w_decomposition", "-")],
            "atom number n", "window width (rad/s)",
        )


def _cmd_decompose(cfg: dict) -> None:
    atom = _atom(cfg)
    rabi = quoted_rate(cfg["rabi_mhz"], cfg["rate_convention"])
    l = cfg["l_mm"] * 1e-3
    ns = _parse_n_list(cfg["n_list"])
    coeffs, w_of_n = decompose_window(atom, rabi, ArrayGeometry(ns[0], l, cfg["line_speed"]))
    residuals = coeffs.identity_residuals()
    meta = _meta(
        cfg,
        l_mm=cfg["l_mm"],
        rabi_mhz=cfg["rabi_mhz"],
        f1=f"{coeffs.f1:.12g}",
        f2=f"{coeffs.f2:.12g}",
        g1=f"{coeffs.g1:.12g}",
        g2=f"{coeffs.g2:.12g}",
        identity_f1f2=f"{residuals['f1f2']:.3e}",
        identity_a1g1=f"{residuals['a1g1']:.3e}",
        identity_a2g2=f"{residuals['a2g2']:.3e}",
        units="w in rad/s",
    )
    columns = ["n", "w_decomposition"]
    rows = [[n, w_of_n(n)] for n in ns]
    text = (_table_csv if cfg["format"] == "csv" else _table_json)(meta, columns, rows)
    _emit(cfg, text)
    if cfg["emit_plot"]:
        _write_plot_script(cfg, "n", [("w_decomposition", "-")],
                           "atom number n", "window width (rad/s)")


def _sweep_common(cfg: dict, ns: list[int]) -> None:
    atom = _atom(cfg)
    results = efficiency_sweep(
        atom,
        ns,
        target_T=cfg["target_t"],
        target_vg_fraction=cfg["vg_fraction"],
        target_pass=cfg["target_pass"],
        line_speed=cfg["line_speed"],
    )
    meta = _meta(
        cfg,
        target_T=cfg["target_t"],
        vg_fraction=cfg["vg_fraction"],
        target_pass=cfg["target_pass"],
        units="l in m, rates in rad/s, vg in m/s, transit in s",
    )
    if cfg["format"] == "json":
        _emit(cfg, sweep_to_json(results, meta=meta) + "\n")
    elif cfg["out"]:
        write_sweep_csv(results, cfg["out"], meta=meta)
    else:
        columns = ["n", "eta", "l_m", "rabi_rad_s", "sigma_rad_s", "T0", "vg_m_s", "transit_s"]
        rows = [
            [r.n, r.eta, r.l, r.rabi, r.sigma, r.t0_full, r.vg, r.transit]
            for r in results
            if r.error is None
        ]
        _emit(cfg, _table_csv(meta, columns, rows))
    failed = [r for r in results if r.error is not None]
    for r in failed:
        print(f"warning: n={r.n} failed: {r.error}", file=sys.stderr)
    if cfg["emit_plot"]:
        _write_plot_script(cfg, "n", [("eta", "o-")], "atom number n", "storage efficiency")


def _cmd_store(cfg: dict) -> None:
    _sweep_common(cfg, [cfg["n"]])


def _cmd_sweep(cfg: dict) -> None:
    _sweep_common(cfg, _parse_n_list(cfg["n_list"]))


_RUNNERS = {
    "spectrum": _cmd_spectrum,
    "depth": _cmd_depth,
    "dispersion": _cmd_dispersion,
    "width": _cmd_width,
    "decompose": _cmd_decompose,
    "store": _cmd_store,
    "sweep": _cmd_sweep,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _resolve(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        _RUNNERS[cfg["command"]](cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (EitArrayError, ValueError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"output error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
