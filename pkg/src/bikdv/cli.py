"""Command-line front end.

Every command reads a flat ``key = value`` config file (optional), applies
flag overrides, validates everything before solving, and writes its results
into ``--out``: profile CSVs, ``summary.json`` and ``run.log``.

Exit codes: 0 success, 1 configuration error, 2 non-convergence,
3 missing prerequisite file.
"""
from __future__ import annotations

import argparse
import csv
import logging
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .analysis import (
    NotConverged,
    classify_semitrivial,
    lambda_threshold,
    sweep_lambda2,
    theorem8_candidate,
    unit_moments,
)
from .grid import LINE, RADIAL, Field, GridError, GridSpec, make_grid, read_field_csv, write_field_csv
from .ground import SolveOptions, solve_coupled_ground, solve_scalar_ground, default_starts
from .mountain_pass import mountain_pass_estimate
from .variational import NehariError, Params, State, energy, nehari_project

log = logging.getLogger("bikdv")

EXIT_OK, EXIT_CONFIG, EXIT_NOCONV, EXIT_MISSING = 0, 1, 2, 3

COMMANDS = ("scalar", "lambda", "ground", "classify", "thm8", "mp", "reconstruct")


class ConfigError(ValueError):
    pass


class MissingPrerequisite(FileNotFoundError):
    pass


def _opt_float(s):
    return None if s in ("", "none", "None") else float(s)


def _opt_path(s):
    return None if s in ("", "none", "None") else str(s)


# key -> (parser, default, help).  A default of None for grid/n/L means
# "pick from the grid kind".
SCHEMA: dict[str, tuple] = {
    "lambda1": (float, 1.0, "linear coefficient of the u equation (> 0)"),
    "lambda2": (float, 1.0, "linear coefficient of the v equation (> 0)"),
    "beta": (float, 0.0, "coupling constant"),
    "beta_rel": (_opt_float, None, "if set, beta = beta_rel * Lambda (overrides beta)"),
    "dim": (int, 1, "space dimension N (1 = line, 2..7 = radial)"),
    "grid": (_opt_path, None, "grid kind: line or radial (default from dim)"),
    "n": (int, None, "number of nodes (default 2048 line, 1024 radial)"),
    "L": (float, None, "half-length of the line box or ball radius (default 40 line, 30 radial)"),
    "seed": (int, 0, "seed for random starts and tangent samples"),
    "max_iters": (int, 5000, "descent iteration cap"),
    "tol_grad": (float, 1e-8, "scaled gradient tolerance"),
    "tol_energy": (float, 1e-12, "relative energy change counted as quiet"),
    "multistart": (int, 3, "number of descent starts for ground"),
    "init": (str, "multistart", "ground start: multistart or v2 (start from (0, V2))"),
    "n_samples": (int, 200, "random tangent directions for classify"),
    "sweep": (str, "1:4096", "lambda2 sweep a:b[:factor] (geometric) for thm8"),
    "beads": (int, 17, "beads on the mountain-pass string"),
    "endpoint_b": (_opt_path, None, "state CSV (coord,u,v) used as the far endpoint in mp"),
    "state_file": (_opt_path, None, "state CSV (coord,u,v) for reconstruct"),
    "v2_file": (_opt_path, None, "reuse a V2 profile CSV instead of solving for it"),
    "t": (float, 0.0, "time at which reconstruct evaluates the wave"),
}


@dataclass
class RunConfig:
    command: str
    values: dict
    out: Path

    def __getattr__(self, name):
        try:
            return self.values[name]
        except KeyError:
            raise AttributeError(name) from None

    def params(self, beta: float | None = None) -> Params:
        return Params(self.lambda1, self.lambda2, self.beta if beta is None else beta, self.dim)

    def grid_spec(self) -> GridSpec:
        return make_grid(self.grid, self.n, self.L, self.dim)

    def solve_options(self) -> SolveOptions:
        return SolveOptions(max_iters=self.max_iters, tol_grad=self.tol_grad, tol_energy=self.tol_energy,
                            multistart=self.multistart, seed=self.seed)

    def echo(self) -> dict:
        return {"command": self.command, **self.values}


def parse_config_file(path) -> dict:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file {path} does not exist")
    raw = {}
    for lineno, line in enumerate(p.read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, val = (x.strip() for x in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in SCHEMA and key != "out":
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        raw[key] = val
    return raw


def _convert(key: str, val):
    conv = SCHEMA[key][0]
    try:
        return conv(val) if isinstance(val, str) else val
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {val!r} ({exc})") from None


def resolve_config(command: str, file_values: dict, overrides: dict) -> RunConfig:
    merged = {}
    for key, (_, default, _) in SCHEMA.items():
        if overrides.get(key) is not None:
            merged[key] = _convert(key, overrides[key])
        elif key in file_values:
            merged[key] = _convert(key, file_values[key])
        else:
            merged[key] = default
    out = overrides.get("out") or file_values.get("out") or "out"

    dim = merged["dim"]
    if merged["grid"] is None:
        merged["grid"] = LINE if dim == 1 else RADIAL
    if merged["grid"] not in (LINE, RADIAL):
        raise ConfigError(f"grid must be line or radial, got {merged['grid']!r}")
    radial = merged["grid"] == RADIAL
    if merged["n"] is None:
        merged["n"] = 1024 if radial else 2048
    if merged["L"] is None:
        merged["L"] = 30.0 if radial else 40.0
    if merged["init"] not in ("multistart", "v2"):
        raise ConfigError(f"init must be multistart or v2, got {merged['init']!r}")
    if merged["beads"] < 2:
        raise ConfigError("beads >= 2 required")
    if merged["n_samples"] < 1:
        raise ConfigError("n_samples >= 1 required")
    for key in ("lambda1", "lambda2", "beta", "L", "t", "tol_grad", "tol_energy"):
        if not math.isfinite(merged[key]):
            raise ConfigError(f"{key} must be finite")
    cfg = RunConfig(command, merged, Path(out))
    # validate the invariants of every derived object up front
    try:
        cfg.params()
        cfg.grid_spec()
        cfg.solve_options()
    except (ValueError, GridError) as exc:
        raise ConfigError(str(exc)) from None
    parse_sweep(merged["sweep"])
    return cfg


def parse_sweep(text: str) -> list[float]:
    parts = text.split(":")
    try:
        nums = [float(x) for x in parts]
    except ValueError:
        raise ConfigError(f"sweep must look like a:b or a:b:factor, got {text!r}") from None
    if len(nums) not in (2, 3):
        raise ConfigError(f"sweep must look like a:b or a:b:factor, got {text!r}")
    a, b = nums[:2]
    factor = nums[2] if len(nums) == 3 else 2.0
    if not (0 < a <= b and factor > 1):
        raise ConfigError(f"sweep needs 0 < a <= b and factor > 1, got {text!r}")
    vals = []
    x = a
    while x <= b * (1 + 1e-12):
        vals.append(x)
        x *= factor
    return vals


# -----------------------------------------------------------------------------
# output


def _json_value(x, indent: int) -> str:
    pad = "  " * indent
    if isinstance(x, bool):
        return "true" if x else "false"
    if x is None:
        return "null"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return f"{x:.17g}" if math.isfinite(x) else "null"
    if isinstance(x, str):
        return '"' + x.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(x, dict):
        if not x:
            return "{}"
        items = [f'{pad}  "{k}": {_json_value(v, indent + 1)}' for k, v in sorted(x.items())]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(x, (list, tuple)):
        return "[" + ", ".join(_json_value(v, indent + 1) for v in x) + "]"
    raise TypeError(f"cannot serialise {type(x).__name__}")


def dumps_summary(summary: dict) -> str:
    """JSON text with every float at 17 significant digits and sorted keys."""
    return _json_value(summary, 0) + "\n"


def write_summary(cfg: RunConfig, body: dict) -> Path:
    summary = {"config": cfg.echo(), **body}
    path = cfg.out / "summary.json"
    path.write_text(dumps_summary(summary))
    return path


def write_state_csv(path, s: State) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["coord", "u", "v"])
        for x, a, b in zip(s.grid.nodes, s.u, s.v):
            w.writerow([f"{x:.17g}", f"{a:.17g}", f"{b:.17g}"])


def read_state_csv(path, grid: GridSpec) -> State:
    if path is None or not Path(path).is_file():
        raise MissingPrerequisite(f"state file {path} not found")
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header = [c.strip() for c in rows[0]]
    try:
        ic, iu, iv = header.index("coord"), header.index("u"), header.index("v")
    except ValueError:
        raise ConfigError(f"{path}: expected columns coord,u,v") from None
    data = np.array([[float(r[i]) for i in (ic, iu, iv)] for r in rows[1:] if r])
    if data.shape[0] != grid.n or not np.allclose(data[:, 0], grid.nodes, rtol=0, atol=1e-12 * grid.extent):
        raise ConfigError(f"{path}: nodes do not match the configured grid")
    return State(grid, data[:, 1], data[:, 2])


# -----------------------------------------------------------------------------
# shared pieces


def _scalar_profile(cfg: RunConfig, g: GridSpec, lam2: float):
    if cfg.v2_file is not None:
        if not Path(cfg.v2_file).is_file():
            raise MissingPrerequisite(f"V2 file {cfg.v2_file} not found")
        try:
            return read_field_csv(cfg.v2_file, g), None
        except GridError as exc:
            raise ConfigError(str(exc)) from None
    return solve_scalar_ground(lam2, g, cfg.solve_options())


def _scalar_summary(V: Field, rep, lam2: float) -> dict:
    g = V.grid
    v = V.values
    e = energy(Params(1.0, lam2, 0.0, g.dim), State(g, np.zeros(g.n), v))
    cubic_abs = g.integrate(np.abs(v) ** 3)
    out = {
        "energy": e.phi,
        "energy_identity": cubic_abs / 12.0,
        "norm2_sq": e.norm2_sq,
        "nehari_identity_rel": abs(e.norm2_sq - 0.5 * cubic_abs) / e.norm2_sq,
        "sup": V.sup,
        "min": float(np.min(v)),
        **{f"moment_{k}": val for k, val in unit_moments(V).items()},
    }
    if rep is not None:
        out.update(converged=rep.converged, iters=rep.iters, grad_norm=rep.grad_norm,
                   residual_sup=rep.residual_sup)
    return out


def _lambda(cfg: RunConfig, g: GridSpec, V2: Field):
    try:
        return lambda_threshold(g, cfg.lambda1, V2)
    except NotConverged:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _beta(cfg: RunConfig, lam_c: float) -> float:
    return cfg.beta if cfg.beta_rel is None else cfg.beta_rel * lam_c


# -----------------------------------------------------------------------------
# commands


def cmd_scalar(cfg: RunConfig) -> int:
    g = cfg.grid_spec()
    V, rep = solve_scalar_ground(cfg.lambda2, g, cfg.solve_options())
    write_field_csv(cfg.out / "V2.csv", V)
    write_summary(cfg, _scalar_summary(V, rep, cfg.lambda2))
    return EXIT_OK if rep.converged else EXIT_NOCONV


def cmd_lambda(cfg: RunConfig) -> int:
    g = cfg.grid_spec()
    V2, rep = _scalar_profile(cfg, g, cfg.lambda2)
    lam_c, h = _lambda(cfg, g, V2)
    write_field_csv(cfg.out / "V2.csv", V2)
    write_field_csv(cfg.out / "h_tilde.csv", h)
    body = {"Lambda": lam_c, "scalar": _scalar_summary(V2, rep, cfg.lambda2)}
    write_summary(cfg, body)
    return EXIT_OK if rep is None or rep.converged else EXIT_NOCONV


def cmd_ground(cfg: RunConfig) -> int:
    g = cfg.grid_spec()
    opts = cfg.solve_options()
    V2, srep = _scalar_profile(cfg, g, cfg.lambda2)
    lam_c, _ = _lambda(cfg, g, V2)
    p = cfg.params(_beta(cfg, lam_c))
    if cfg.init == "v2":
        starts = [("v2", State(g, np.zeros(g.n), V2.values))]
    else:
        starts = default_starts(p, g, V2, opts)
    s, rep = solve_coupled_ground(p, g, opts, V2=V2, starts=starts)
    e = energy(p, s)
    phi_v2 = energy(p, State(g, np.zeros(g.n), V2.values)).phi
    sup_u = float(np.max(np.abs(s.u)))
    sup_v = float(np.max(np.abs(s.v)))
    write_state_csv(cfg.out / "state.csv", s)
    write_field_csv(cfg.out / "V2.csv", V2)
    body = {
        "beta": p.beta,
        "Lambda": lam_c,
        "phi": e.phi,
        "phi_v2": phi_v2,
        "phi_below_phi_v2": bool(e.phi < phi_v2),
        "sup_u": sup_u,
        "sup_v": sup_v,
        "both_components_nonzero": bool(sup_u > 1e-8 * max(sup_v, 1e-300) and sup_v > 1e-8 * max(sup_u, 1e-300)),
        "semi_trivial": rep.semi_trivial,
        "psi_rel": abs(e.psi) / e.norm_sq,
        "outside_theorem_range": p.outside_theorem_range,
        "report": rep.to_dict(),
    }
    write_summary(cfg, body)
    ok = rep.converged and (srep is None or srep.converged)
    return EXIT_OK if ok else EXIT_NOCONV


def cmd_classify(cfg: RunConfig) -> int:
    g = cfg.grid_spec()
    V2, srep = _scalar_profile(cfg, g, cfg.lambda2)
    lam_c, h = _lambda(cfg, g, V2)
    p = cfg.params(_beta(cfg, lam_c))
    c = classify_semitrivial(p, V2, lam_c, h, n_samples=cfg.n_samples, seed=cfg.seed)
    write_field_csv(cfg.out / "V2.csv", V2)
    write_field_csv(cfg.out / "h_tilde.csv", h)
    write_summary(cfg, {"Lambda": lam_c, "beta": p.beta, "classification": c.to_dict()})
    return EXIT_OK if srep is None or srep.converged else EXIT_NOCONV


def cmd_thm8(cfg: RunConfig) -> int:
    g = cfg.grid_spec()
    opts = cfg.solve_options()
    # beta is fixed from Lambda at the configured lambda2; the sweep then
    # varies lambda2 with that beta held constant
    V2, srep = _scalar_profile(cfg, g, cfg.lambda2)
    lam_c, _ = _lambda(cfg, g, V2)
    p = cfg.params(_beta(cfg, lam_c))
    V1, urep = solve_scalar_ground(1.0, g, opts)
    m = unit_moments(V1)
    sw = sweep_lambda2(m["A"], m["B"], m["C"], p, m["C_abs"], parse_sweep(cfg.sweep))
    sw.to_csv(cfg.out / "sweep.csv")
    write_field_csv(cfg.out / "V_unit.csv", V1)
    body = {
        "Lambda": lam_c,
        "beta": p.beta,
        "moments": m,
        "threshold": sw.threshold,
        "threshold_at_lower_edge": sw.threshold is not None and sw.threshold == parse_sweep(cfg.sweep)[0],
        "monotone": sw.monotone,
        "violations": sw.violations,
    }
    if sw.threshold is not None:
        l2 = 2.0 * sw.threshold
        rep = theorem8_candidate(m["A"], m["B"], m["C"], p.with_(lambda2=l2), V=V1, C_abs=m["C_abs"])
        body["at_twice_threshold"] = rep.to_dict()
        body["phi"] = rep.phi_w
        body["phi_v2"] = rep.phi_v2
    write_summary(cfg, body)
    ok = urep.converged and (srep is None or srep.converged)
    return EXIT_OK if ok else EXIT_NOCONV


def cmd_mp(cfg: RunConfig) -> int:
    g = cfg.grid_spec()
    if cfg.endpoint_b is None:
        raise MissingPrerequisite("mp needs endpoint_b: a state CSV written by the ground command")
    b = read_state_csv(cfg.endpoint_b, g)
    V2, srep = _scalar_profile(cfg, g, cfg.lambda2)
    lam_c, _ = _lambda(cfg, g, V2)
    p = cfg.params(_beta(cfg, lam_c))
    a = State(g, np.zeros(g.n), V2.values)
    try:
        t_b, b = nehari_project(p, b)
    except NehariError as exc:
        raise ConfigError(f"endpoint_b cannot be projected for these parameters: {exc}") from None
    if abs(t_b - 1.0) > 1e-6:
        log.warning("endpoint_b was rescaled by %.8g onto the manifold", t_b)
    rep = mountain_pass_estimate(p, a, b, beads=cfg.beads, opts=cfg.solve_options())
    write_state_csv(cfg.out / "saddle.csv", rep.argmax_state)
    phi_v2 = energy(p, a).phi
    body = {
        "Lambda": lam_c,
        "beta": p.beta,
        "phi_v2": phi_v2,
        "phi": rep.level_m,
        "level_above_phi_v2_rel": (rep.level_m - phi_v2) / abs(phi_v2),
        "endpoint_b_rescale": t_b,
        "bead_energies": rep.bead_energies,
        "report": rep.to_dict(),
    }
    write_summary(cfg, body)
    return EXIT_OK if rep.converged else EXIT_NOCONV


def reconstruct_wave(state: State, t: float, lam1: float, lam2: float) -> tuple[Field, Field, Field]:
    """Standing-traveling wave (e^{i lam1 t} u(x), v(x - lam2 t)) at time t.

    The shift of v is spectral, so it wraps around the periodic box and is
    exact for shifts that are whole multiples of the spacing.
    """
    g = state.grid
    if g.kind != LINE:
        raise GridError("wave reconstruction needs a line grid")
    f_real = math.cos(lam1 * t) * state.u
    f_imag = math.sin(lam1 * t) * state.u
    k = g._wavenumbers()
    vh = np.fft.rfft(state.v) * np.exp(-1j * k * (lam2 * t))
    if g.n % 2 == 0:
        # the Nyquist mode is real in a real signal; keep its shifted real part
        vh[-1] = vh[-1].real
    shifted = np.fft.irfft(vh, g.n)
    return Field(g, f_real), Field(g, f_imag), Field(g, shifted)


def cmd_reconstruct(cfg: RunConfig) -> int:
    g = cfg.grid_spec()
    if g.kind != LINE:
        raise ConfigError("reconstruct needs a line grid (dim = 1)")
    s = read_state_csv(cfg.state_file, g)
    fr, fi, gv = reconstruct_wave(s, cfg.t, cfg.lambda1, cfg.lambda2)
    with open(cfg.out / "wave.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["coord", "f_real", "f_imag", "g"])
        for row in zip(g.nodes, fr.values, fi.values, gv.values):
            w.writerow([f"{x:.17g}" for x in row])
    write_summary(cfg, {"t": cfg.t, "sup_f": float(np.max(np.hypot(fr.values, fi.values))), "sup_g": gv.sup})
    return EXIT_OK


HANDLERS = {
    "scalar": cmd_scalar,
    "lambda": cmd_lambda,
    "ground": cmd_ground,
    "classify": cmd_classify,
    "thm8": cmd_thm8,
    "mp": cmd_mp,
    "reconstruct": cmd_reconstruct,
}


# -----------------------------------------------------------------------------
# entry point


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="bikdv", description="Ground states and bound states of the coupled fourth-order system.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="flat key = value file; flags override it")
    ap.add_argument("--out", help="output directory (default: out)")
    for key, (_, default, text) in SCHEMA.items():
        flag = "--" + key.replace("_", "-")
        names = [flag] if flag == "--" + key else [flag, "--" + key]
        ap.add_argument(*names, dest=key, default=None, metavar=key.upper(),
                        help=f"{text} [default: {default}]")
    return ap


def _setup_logging(out: Path) -> logging.Handler:
    handler = logging.FileHandler(out / "run.log", mode="w")
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    root = logging.getLogger("bikdv")
    root.setLevel(logging.INFO)
    root.addHandler(handler)
    return handler


def main(argv=None) -> int:
    try:
        ns = build_parser().parse_args(argv)
        file_values = parse_config_file(ns.config) if ns.config else {}
        overrides = {k: getattr(ns, k) for k in SCHEMA}
        overrides["out"] = ns.out
        cfg = resolve_config(ns.command, file_values, overrides)
    except ConfigError as exc:
        print(f"bikdv: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    cfg.out.mkdir(parents=True, exist_ok=True)
    handler = _setup_logging(cfg.out)
    try:
        code = HANDLERS[cfg.command](cfg)
    except ConfigError as exc:
        print(f"bikdv: configuration error: {exc}", file=sys.stderr)
        code = EXIT_CONFIG
    except MissingPrerequisite as exc:
        print(f"bikdv: missing prerequisite: {exc}", file=sys.stderr)
        code = EXIT_MISSING
    except NotConverged as exc:
        print(f"bikdv: {exc}", file=sys.stderr)
        code = EXIT_NOCONV
    finally:
        logging.getLogger("bikdv").removeHandler(handler)
        handler.close()
    if code == EXIT_NOCONV:
        print("bikdv: solver did not converge; see summary.json", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
