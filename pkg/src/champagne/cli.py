"""Command-line front end.

Four subcommands write CSV datasets and SVG figures into an existing output
directory::

    champagne classical-scan        potential profile, critical values, image boundary
    champagne classical-monodromy   monodromy of the period lattice along a loop
    champagne quantum-spectrum      joint spectrum of (H, J) and its complex image
    champagne quantum-monodromy     lattice transport on the joint spectrum

Settings come from a flat ``key = value`` file (``--config``) overridden by
flags. Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 I/O error.
"""
from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass, field, fields
from importlib import metadata
from pathlib import Path
from typing import Sequence

import numpy as np

from . import classical, lattice, quantum
from .config import DEFAULT_TOLERANCES, Tolerances
from .svg import Figure

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_IO = 0, 2, 3, 4


class ConfigError(ValueError):
    pass


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:  # running from a source tree
        return "0+unknown"


def _g(x) -> str:
    return f"{float(x):.17g}"


# --- configuration ---------------------------------------------------------

def _parse_pair(s: str) -> tuple[float, float]:
    parts = [p for p in s.replace("(", " ").replace(")", " ").replace(",", " ").split() if p]
    if len(parts) != 2:
        raise ValueError(f"expected two numbers, got {s!r}")
    return float(parts[0]), float(parts[1])


def _parse_bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {s!r}")


def _parse_opt_int(s: str) -> int | None:
    return None if s.strip().lower() in ("", "none", "auto") else int(s)


@dataclass
class RunConfig:
    h: float = 0.1
    epsilon: float | None = None  # defaults to sqrt(h)
    emax: float = 1.5
    grid_n: int = 4000
    radius: float = 2.2
    mmax: int | None = None
    margin: float = 1.0
    threads: int = 1
    seed: int = 0
    out: str = "."
    loop_center: tuple[float, float] | None = None
    loop_axes: tuple[float, float] | None = None
    loop_samples: int = 256
    enclosing: bool = True
    spectral: bool = False
    tolerances: Tolerances = field(default_factory=lambda: DEFAULT_TOLERANCES)

    def quantum(self) -> quantum.QuantumConfig:
        if not self.h > 0:
            raise ConfigError("h must be positive")
        eps = math.sqrt(self.h) if self.epsilon is None else self.epsilon
        try:
            return quantum.QuantumConfig(h=self.h, R=self.radius, N=self.grid_n, m_max=self.mmax,
                                         E_max=self.emax, epsilon=eps, margin=self.margin)
        except quantum.ConfigError as e:
            raise ConfigError(str(e)) from None

    def items(self) -> list[tuple[str, str]]:
        out = []
        for f in fields(self):
            if f.name == "tolerances":
                continue
            v = getattr(self, f.name)
            if f.name == "epsilon" and v is None:
                v = math.sqrt(self.h) if self.h > 0 else None
            out.append((f.name, _fmt(v)))
        for f in fields(self.tolerances):
            out.append((f"tol_{f.name}", _fmt(getattr(self.tolerances, f.name))))
        return out


def _fmt(v) -> str:
    if v is None:
        return "auto"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return _g(v)
    if isinstance(v, tuple):
        return ", ".join(_fmt(x) for x in v)
    return str(v)


_PARSERS = {
    "h": float, "epsilon": float, "emax": float, "grid_n": int, "radius": float,
    "mmax": _parse_opt_int, "margin": float, "threads": int, "seed": int, "out": str,
    "loop_center": _parse_pair, "loop_axes": _parse_pair, "loop_samples": int,
    "enclosing": _parse_bool, "spectral": _parse_bool,
}


def _tolerance_parser(name: str):
    kind = type(getattr(DEFAULT_TOLERANCES, name))
    return int if kind is int else float


def parse_config_text(text: str) -> dict[str, object]:
    """Parse ``key = value`` lines; ``#`` starts a comment; unknown keys are errors."""
    tol_names = {f.name for f in fields(Tolerances)}
    values: dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, val = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key in _PARSERS:
            parser = _PARSERS[key]
        elif key.startswith("tol_") and key[4:] in tol_names:
            parser = _tolerance_parser(key[4:])
        else:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        try:
            values[key] = parser(val)
        except ValueError as e:
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {e}") from None
    return values


def build_config(values: dict[str, object]) -> RunConfig:
    cfg = RunConfig()
    tol = {}
    for k, v in values.items():
        if k.startswith("tol_"):
            tol[k[4:]] = v
        else:
            setattr(cfg, k, v)
    if tol:
        cfg.tolerances = DEFAULT_TOLERANCES.updated(**tol)
    if (cfg.loop_center is None) != (cfg.loop_axes is None):
        raise ConfigError("loop_center and loop_axes must be given together")
    if cfg.loop_samples < 8:
        raise ConfigError("loop_samples must be at least 8")
    if cfg.threads < 1:
        raise ConfigError("threads must be at least 1")
    cfg.quantum()  # validates the quantum fields
    return cfg


# --- output ----------------------------------------------------------------

class Outputs:
    """Writes files into an existing directory, refusing to overwrite unless forced."""

    def __init__(self, directory: str, force: bool, header: list[str]):
        self.dir = Path(directory)
        self.force = force
        self.header = header
        if not self.dir.is_dir():
            raise FileNotFoundError(f"output directory {self.dir} does not exist")

    def check(self, *names: str) -> None:
        for n in names:
            p = self.dir / n
            if p.exists() and not self.force:
                raise FileExistsError(f"{p} exists; pass --force to overwrite")

    def _write(self, name: str, text: str) -> Path:
        p = self.dir / name
        with open(p, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        return p

    def csv(self, name: str, columns: Sequence[str], rows) -> Path:
        lines = [f"# {h}" for h in self.header]
        lines.append(",".join(columns))
        for row in rows:
            lines.append(",".join(v if isinstance(v, str) else (str(v) if isinstance(v, (int, np.integer))
                                                                   else _g(v)) for v in row))
        return self._write(name, "\n".join(lines) + "\n")

    def text(self, name: str, body: str) -> Path:
        lines = [f"# {h}" for h in self.header]
        return self._write(name, "\n".join(lines) + "\n" + body)

    def svg(self, name: str, fig: Figure) -> Path:
        fig.comment = "\n".join(self.header)
        return self._write(name, fig.render())


def _header(command: str, cfg: RunConfig) -> list[str]:
    return [f"champagne {_version()}", f"command = {command}"] + [f"{k} = {v}" for k, v in cfg.items()]


# --- commands --------------------------------------------------------------

def _boundary(E_max: float, n: int = 400) -> tuple[np.ndarray, np.ndarray]:
    """Closed polyline of the image boundary for ``E <= E_max``."""
    r_hi = classical.critical_radius(E_max)
    r = np.linspace(classical.R_WELL, r_hi, n)
    E = 3.0 * r ** 4 - 2.0 * r ** 2
    j = np.sqrt(np.maximum(4.0 * r ** 6 - 2.0 * r ** 4, 0.0))
    return np.concatenate([E[::-1], E]), np.concatenate([-j[::-1], j])


def cmd_classical_scan(cfg: RunConfig, out: Outputs) -> int:
    names = ("potential.csv", "critical_curve.csv", "image_boundary.csv",
             "potential.svg", "critical_values.svg")
    out.check(*names)

    r = np.linspace(0.0, 1.3, 261)
    V = classical.potential(r)
    out.csv("potential.csv", ["r", "V"], zip(r, V))

    r_hi = classical.critical_radius(cfg.emax)
    rc = np.linspace(classical.R_WELL, r_hi, 401)
    rows = []
    for x in rc:
        plus, minus = classical.critical_value_curve(float(x))
        rows.append((x, plus.E, plus.j, minus.j))
    out.csv("critical_curve.csv", ["r", "E", "j_plus", "j_minus"], rows)

    Eb, jb = _boundary(cfg.emax)
    out.csv("image_boundary.csv", ["E", "j"], zip(Eb, jb))

    fig = Figure((0.0, 1.3), (-0.4, 0.6), title="Champagne-bottle potential V(r) = r^4 - r^2",
                 xlabel="r", ylabel="V")
    fig.polyline(r, V, color="#1f4e9a", width=2)
    fig.polyline([0, 1.3], [0, 0], color="#888888", width=1, dash="4,3")
    fig.scatter([classical.R_WELL], [classical.E_MIN], color="#c0392b", radius=3.5)
    fig.text(classical.R_WELL + 0.03, classical.E_MIN - 0.04, "min -1/4 at r = 1/sqrt(2)", size=11)
    out.svg("potential.svg", fig)

    jm = float(np.max(np.abs(jb))) * 1.1
    fig = Figure((-jm, jm), (classical.E_MIN - 0.15, cfg.emax + 0.1), title="Critical values of F = (H, J)",
                 xlabel="j", ylabel="E")
    fig.polyline(jb, Eb, color="#1f4e9a", width=2)
    fig.scatter([0.0], [0.0], color="#c0392b", radius=4)
    fig.text(0.03, 0.03, "focus-focus value (0, 0)", size=11)
    out.svg("critical_values.svg", fig)

    print(f"critical curve endpoint (E, j) = ({_g(rows[0][1])}, {_g(rows[0][2])}) at r = {_g(rc[0])}")
    print(f"wrote {len(names)} files to {out.dir}")
    return EXIT_OK


def _classical_loop(cfg: RunConfig) -> list[classical.EMValue]:
    if cfg.loop_center is not None:
        loop = classical.ellipse_loop(cfg.loop_center, cfg.loop_axes, cfg.loop_samples, clockwise=True)
    elif cfg.enclosing:
        loop = classical.default_enclosing_loop(cfg.loop_samples)
    else:
        loop = classical.default_non_enclosing_loop(cfg.loop_samples)
    try:
        classical.validate_loop(loop)
    except classical.NotRegularError as e:
        raise ConfigError(f"invalid classical loop: {e}") from None
    return loop


def _matrix_report(M: classical.IntMatrix2, title: str, extra: Sequence[str] = ()) -> str:
    tr, det, unip = lattice.conjugacy_invariants(M)
    kind = "trivial" if M == classical.IDENTITY else "non-trivial"
    lines = [title, f"matrix = [[{M.a}, {M.b}], [{M.c}, {M.d}]]",
             f"invariants: trace = {tr}, det = {det}, unipotent_nonidentity = {str(unip).lower()}",
             f"monodromy: {kind}", *extra]
    return "\n".join(lines) + "\n"


def cmd_classical_monodromy(cfg: RunConfig, out: Outputs) -> int:
    out.check("classical_monodromy.txt", "classical_loop.csv")
    loop = _classical_loop(cfg)
    tol = cfg.tolerances
    data = [classical.action_data(c, tol) for c in loop]
    total = classical.rotation_winding(loop, tol)
    M = classical.classical_monodromy(loop, tol)
    out.csv("classical_loop.csv", ["E", "j", "I_r", "T_r", "Theta"],
            [(c.E, c.j, d.I_r, d.T_r, d.Theta) for c, d in zip(loop, data)])
    report = _matrix_report(M, "classical monodromy (basis: S^1 orbit, radial cycle)",
                            [f"rotation angle winding = {_g(total)}",
                             f"winding of loop around (0, 0) = {classical.winding_number(loop)}"])
    out.text("classical_monodromy.txt", report)
    sys.stdout.write(report)
    return EXIT_OK


def cmd_quantum_spectrum(cfg: RunConfig, out: Outputs) -> int:
    out.check("spectrum.csv", "spectrum.svg")
    qc = cfg.quantum()
    pts = quantum.joint_spectrum(qc, threads=cfg.threads, tol=cfg.tolerances)
    cpts = quantum.perturbed_spectrum(pts, qc.epsilon)
    out.csv("spectrum.csv", ["m", "n", "E", "j", "re", "im"],
            [(p.m, p.n, p.E, p.j, c.re, c.im) for p, c in zip(pts, cpts)])

    fig = _spectrum_figure(cfg, pts, qc, "Joint spectrum through chi^-1")
    out.svg("spectrum.svg", fig)
    weyl = quantum.weyl_count(qc.E_max, qc.h, seed=cfg.seed)
    print(f"{len(pts)} joint eigenvalues below E_max = {_g(qc.E_max)} (Weyl estimate {weyl:.1f})")
    return EXIT_OK


def _spectrum_figure(cfg: RunConfig, pts, qc, title: str) -> Figure:
    Eb, jb = _boundary(qc.E_max)
    jm = float(np.max(np.abs(jb))) * 1.1
    fig = Figure((-jm, jm), (classical.E_MIN - 0.15, qc.E_max + 0.1), title=title, xlabel="j", ylabel="E")
    fig.polyline(jb, Eb, color="#1f4e9a", width=1.5)
    if qc.epsilon > 0:
        cloud = quantum.chi_inverse(quantum.complex_array(quantum.perturbed_spectrum(pts, qc.epsilon)),
                                    qc.epsilon)
    else:
        cloud = quantum.spectrum_array(pts)
    fig.scatter(cloud[:, 1], cloud[:, 0], color="#222222", radius=1.6)
    return fig


def _quantum_loop(cfg: RunConfig, qc: quantum.QuantumConfig) -> np.ndarray:
    if cfg.loop_center is not None:
        loop = np.asarray(classical.ellipse_loop(cfg.loop_center, cfg.loop_axes, cfg.loop_samples,
                                                 start_angle=0.5 * math.pi))
    else:
        loop = quantum.default_quantum_loop(cfg.loop_samples, cfg.enclosing)
    scale = np.asarray(quantum.lattice_scale(qc.h))
    dmin = float(np.min(np.hypot(*(loop / scale).T)))
    if dmin < cfg.tolerances.loop_clearance:
        raise ConfigError(f"quantum loop passes within {dmin:.3g} lattice cells of the focus-focus value "
                          f"(need {cfg.tolerances.loop_clearance:g})")
    return loop


def cmd_quantum_monodromy(cfg: RunConfig, out: Outputs) -> int:
    out.check("quantum_monodromy.txt", "quantum_monodromy.svg")
    qc = cfg.quantum()
    loop = _quantum_loop(cfg, qc)
    pts = quantum.joint_spectrum(qc, threads=cfg.threads, tol=cfg.tolerances)
    if cfg.spectral:
        if qc.epsilon <= 0:
            raise ConfigError("the spectral variant needs epsilon > 0")
        res = quantum.spectral_monodromy(pts, qc.h, qc.epsilon, loop, tol=cfg.tolerances)
        title = f"spectral monodromy (chi^-1 of the spectrum of H + i eps J, eps = {_g(qc.epsilon)})"
    else:
        res = quantum.quantum_monodromy(pts, qc.h, loop, tol=cfg.tolerances)
        title = "quantum monodromy (joint spectrum of H and J)"
    report = _matrix_report(res.matrix, title, [
        f"transport steps = {res.steps}",
        f"max snap residual (scaled) = {max(res.residuals):.4f}",
        f"winding of loop around (0, 0) = {classical.winding_number(loop)}",
    ])
    out.text("quantum_monodromy.txt", report)

    fig = _spectrum_figure(cfg, pts, qc, "Quantum monodromy: lattice transport")
    L = np.vstack([loop, loop[:1]])
    fig.polyline(L[:, 1], L[:, 0], color="#e67e22", width=1.5)
    for cell, color in ((res.cells[0], "#27ae60"), (res.cells[-1], "#c0392b")):
        c = cell.corners()
        fig.polygon(c[:, 1], c[:, 0], color=color, fill=color, width=2)
    fig.text(loop[0, 1] + 0.02, loop[0, 0] + 0.02, "initial (green) / final (red) cell", size=11)
    out.svg("quantum_monodromy.svg", fig)
    sys.stdout.write(report)
    return EXIT_OK


COMMANDS = {
    "classical-scan": cmd_classical_scan,
    "classical-monodromy": cmd_classical_monodromy,
    "quantum-spectrum": cmd_quantum_spectrum,
    "quantum-monodromy": cmd_quantum_monodromy,
}


# --- entry point -----------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="flat 'key = value' config file")
    common.add_argument("--out", metavar="DIR", help="existing output directory")
    common.add_argument("--h", type=float, help="semiclassical parameter")
    common.add_argument("--epsilon", type=float, help="imaginary coupling (default sqrt(h))")
    common.add_argument("--emax", type=float, help="energy cut-off")
    common.add_argument("--grid-n", type=int, dest="grid_n", help="radial grid points")
    common.add_argument("--radius", type=float, help="radial box size R")
    common.add_argument("--mmax", type=int, help="minimum angular range (widened automatically)")
    common.add_argument("--threads", type=int, help="parallel sector solves")
    common.add_argument("--seed", type=int, help="seed for Monte-Carlo estimates")
    common.add_argument("--force", action="store_true", help="overwrite existing files")
    common.add_argument("--non-enclosing", action="store_true", help="use the default loop away from (0, 0)")
    common.add_argument("--spectral", action="store_true", help="transport chi^-1 of the complex spectrum")

    p = argparse.ArgumentParser(prog="champagne", description=__doc__.split("\n\n")[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {_version()}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_CONFIG if e.code not in (0, None) else EXIT_OK

    try:
        values: dict[str, object] = {}
        if args.config:
            try:
                text = Path(args.config).read_text(encoding="utf-8")
            except OSError as e:
                print(f"error: cannot read config: {e}", file=sys.stderr)
                return EXIT_IO
            values.update(parse_config_text(text))
        for key in ("out", "h", "epsilon", "emax", "grid_n", "radius", "mmax", "threads", "seed"):
            v = getattr(args, key)
            if v is not None:
                values[key] = v
        if args.non_enclosing:
            values["enclosing"] = False
        if args.spectral:
            values["spectral"] = True
        cfg = build_config(values)
    except (ConfigError, KeyError, TypeError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        out = Outputs(cfg.out, args.force, _header(args.command, cfg))
        return COMMANDS[args.command](cfg, out)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as e:
        print(f"I/O error: {e}", file=sys.stderr)
        return EXIT_IO
    except (lattice.TransportError, lattice.NotALatticeError, classical.NotRegularError,
            ValueError, ArithmeticError) as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
