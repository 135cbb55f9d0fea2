"""Command-line front end: parse a run configuration, sweep, write maps.

Configuration grammar (INI-like, ``#`` starts a comment)::

    [model]
    left_levels = 0 10 20       # left ladder offsets (GHz), ascending
    right_levels = 0 12         # right ladder offsets (GHz), ascending
    crossing 0 1 = 0.3          # coupling (GHz) of left level 0, right level 1
    relax L 1 0 = 1.0           # downhill relaxation rate within one well
    interwell L0 R0 = 0.001     # one-way relaxation between the wells
    leak_threshold = 8          # levels >= threshold pump into the leak state
    leak_return = 1.0           # leak decay rate, split evenly over the wells

    [drive]
    frequency = 1.0             # GHz; or a batch: frequencies = 5 8 11
    dephasing = 0.1             # Gamma_2 (GHz)

    [grid]
    eps = -6 6 201              # min max points
    amp = 0 12 201

    [kernel]                    # optional section
    n_margin = 20
    lorentz_cutoff = none       # or a positive multiple of dephasing

    [output]                    # optional section
    directory = out
    formats = csv pgm

Unknown sections or keys are hard errors with line and column; semantic
violations (negative rates, non-ascending ladders, ...) raise
ValidationError.  ``run`` writes one CSV and/or PGM per drive frequency
plus a JSON manifest with checksums; the manifest is written last, so
its presence marks a complete run.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import re
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .analysis import diamond_boundaries, regime_classify
from .errors import (
    InsufficientLevels,
    ParseError,
    SimulationError,
    ValidationError,
)
from .master import build_rate_matrix, stationary_solve
from .model import DriveParams, LeakConfig, QubitModel
from .rates import RateKernelParams
from .sweep import PopulationMap, SweepGrid, run_frequency_batch

__all__ = [
    "RunConfig",
    "parse_config",
    "write_csv",
    "read_csv",
    "write_pgm",
    "read_pgm",
    "run",
    "main",
]

_CSV_HEADER = "eps_ghz,amp_ghz,p_left"
_FORMATS = ("csv", "pgm")
_KEYS = {
    "model": {
        "left_levels",
        "right_levels",
        "crossing",
        "relax",
        "interwell",
        "leak_threshold",
        "leak_return",
    },
    "drive": {"frequency", "frequencies", "dephasing"},
    "grid": {"eps", "amp"},
    "kernel": {"n_margin", "lorentz_cutoff"},
    "output": {"directory", "formats"},
}
_STATE_RE = re.compile(r"([LR])(\d+)$")


@dataclass(frozen=True)
class RunConfig:
    """Fully validated inputs of one simulation run."""

    model: QubitModel
    drives: tuple[DriveParams, ...]
    grid: SweepGrid
    kernel: RateKernelParams
    output_dir: str
    formats: tuple[str, ...]
    config_sha256: str


def _tokens(part: str, offset: int):
    """(token, 1-based column) pairs for the whitespace-split part."""
    return [(m.group(0), offset + m.start() + 1) for m in re.finditer(r"\S+", part)]


def _parse_float(token: str, line: int, col: int) -> float:
    try:
        value = float(token)
    except ValueError:
        raise ParseError(f"expected a number, got '{token}'", line, col) from None
    if not math.isfinite(value):
        raise ParseError(f"expected a finite number, got '{token}'", line, col)
    return value


def _parse_int(token: str, line: int, col: int) -> int:
    try:
        return int(token)
    except ValueError:
        raise ParseError(f"expected an integer, got '{token}'", line, col) from None


def _parse_state(token: str, line: int, col: int) -> tuple[str, int]:
    m = _STATE_RE.fullmatch(token)
    if m is None:
        raise ParseError(
            f"expected a state like L0 or R1, got '{token}'", line, col
        )
    return m.group(1), int(m.group(2))


def _single_value(val_toks, line: int, eq_col: int):
    if not val_toks:
        raise ParseError("missing value", line, eq_col + 1)
    if len(val_toks) > 1:
        tok, col = val_toks[1]
        raise ParseError(f"unexpected token '{tok}'", line, col)
    return val_toks[0]


def _no_args(args, line: int):
    if args:
        tok, col = args[0]
        raise ParseError(f"unexpected token '{tok}'", line, col)


def parse_config(text: str) -> RunConfig:
    """Parse and validate configuration text into a RunConfig.

    Grammar errors raise ParseError with 1-based line and column;
    violations of model/drive/grid invariants raise ValidationError.
    """
    section = None
    scalars: dict[tuple[str, str], object] = {}
    crossing_entries = []
    relax_entries = []
    inter_entries = []

    def put_scalar(key: str, value, line: int, col: int):
        if (section, key) in scalars:
            raise ParseError(f"duplicate key '{key}'", line, col)
        scalars[(section, key)] = value

    for lineno, raw in enumerate(text.splitlines(), 1):
        body = raw.split("#", 1)[0]
        stripped = body.strip()
        if not stripped:
            continue
        lead_col = len(body) - len(body.lstrip()) + 1

        if stripped.startswith("["):
            m = re.fullmatch(r"\[([a-z_]+)\]", stripped)
            if m is None:
                raise ParseError("malformed section header", lineno, lead_col)
            name = m.group(1)
            if name not in _KEYS:
                raise ParseError(f"unknown section '[{name}]'", lineno, lead_col)
            section = name
            continue

        eq = body.find("=")
        if eq < 0:
            raise ParseError(
                "expected 'key = value' or '[section]'", lineno, lead_col
            )
        if section is None:
            raise ParseError("key outside of any section", lineno, lead_col)
        key_toks = _tokens(body[:eq], 0)
        val_toks = _tokens(body[eq + 1 :], eq + 1)
        if not key_toks:
            raise ParseError("missing key before '='", lineno, lead_col)
        keyword, key_col = key_toks[0]
        args = key_toks[1:]
        eq_col = eq + 1
        if keyword not in _KEYS[section]:
            raise ParseError(
                f"unknown key '{keyword}' in [{section}]", lineno, key_col
            )

        if keyword in ("left_levels", "right_levels", "frequencies"):
            _no_args(args, lineno)
            if not val_toks:
                raise ParseError("missing value", lineno, eq_col + 1)
            values = [_parse_float(t, lineno, c) for t, c in val_toks]
            put_scalar(keyword, values, lineno, key_col)
        elif keyword == "crossing":
            if len(args) != 2:
                raise ParseError(
                    "crossing takes two level indices", lineno, key_col
                )
            i = _parse_int(args[0][0], lineno, args[0][1])
            j = _parse_int(args[1][0], lineno, args[1][1])
            tok, col = _single_value(val_toks, lineno, eq_col)
            value = _parse_float(tok, lineno, col)
            if any(e[0] == i and e[1] == j for e in crossing_entries):
                raise ParseError(f"duplicate crossing {i} {j}", lineno, key_col)
            crossing_entries.append((i, j, value, lineno))
        elif keyword == "relax":
            if len(args) != 3:
                raise ParseError(
                    "relax takes a well letter and two level indices",
                    lineno,
                    key_col,
                )
            well = args[0][0]
            if well not in ("L", "R"):
                raise ParseError("expected well L or R", lineno, args[0][1])
            i = _parse_int(args[1][0], lineno, args[1][1])
            k = _parse_int(args[2][0], lineno, args[2][1])
            tok, col = _single_value(val_toks, lineno, eq_col)
            value = _parse_float(tok, lineno, col)
            if any(e[:3] == (well, i, k) for e in relax_entries):
                raise ParseError(
                    f"duplicate relax {well} {i} {k}", lineno, key_col
                )
            relax_entries.append((well, i, k, value, lineno))
        elif keyword == "interwell":
            if len(args) != 2:
                raise ParseError(
                    "interwell takes a source and a target state", lineno, key_col
                )
            w_from, l_from = _parse_state(args[0][0], lineno, args[0][1])
            w_to, l_to = _parse_state(args[1][0], lineno, args[1][1])
            tok, col = _single_value(val_toks, lineno, eq_col)
            value = _parse_float(tok, lineno, col)
            if any(e[:4] == (w_from, l_from, w_to, l_to) for e in inter_entries):
                raise ParseError(
                    f"duplicate interwell {args[0][0]} {args[1][0]}",
                    lineno,
                    key_col,
                )
            inter_entries.append((w_from, l_from, w_to, l_to, value, lineno))
        elif keyword == "formats":
            _no_args(args, lineno)
            if not val_toks:
                raise ParseError("missing value", lineno, eq_col + 1)
            chosen = []
            for tok, col in val_toks:
                if tok not in _FORMATS:
                    raise ParseError(f"unknown output format '{tok}'", lineno, col)
                if tok not in chosen:
                    chosen.append(tok)
            put_scalar(keyword, tuple(chosen), lineno, key_col)
        elif keyword == "directory":
            _no_args(args, lineno)
            value = body[eq + 1 :].strip()
            if not value:
                raise ParseError("missing value", lineno, eq_col + 1)
            put_scalar(keyword, value, lineno, key_col)
        elif keyword in ("leak_threshold", "n_margin"):
            _no_args(args, lineno)
            tok, col = _single_value(val_toks, lineno, eq_col)
            put_scalar(keyword, _parse_int(tok, lineno, col), lineno, key_col)
        elif keyword == "lorentz_cutoff":
            _no_args(args, lineno)
            tok, col = _single_value(val_toks, lineno, eq_col)
            value = None if tok == "none" else _parse_float(tok, lineno, col)
            put_scalar(keyword, value, lineno, key_col)
        elif keyword in ("eps", "amp"):
            _no_args(args, lineno)
            if len(val_toks) != 3:
                raise ParseError(
                    f"{keyword} takes 'min max points'", lineno, eq_col + 1
                )
            lo = _parse_float(val_toks[0][0], lineno, val_toks[0][1])
            hi = _parse_float(val_toks[1][0], lineno, val_toks[1][1])
            count = _parse_int(val_toks[2][0], lineno, val_toks[2][1])
            put_scalar(keyword, (lo, hi, count), lineno, key_col)
        else:  # frequency, dephasing, leak_return: one float
            _no_args(args, lineno)
            tok, col = _single_value(val_toks, lineno, eq_col)
            put_scalar(keyword, _parse_float(tok, lineno, col), lineno, key_col)

    return _assemble(text, scalars, crossing_entries, relax_entries, inter_entries)


def _assemble(text, scalars, crossing_entries, relax_entries, inter_entries):
    def need(section: str, key: str):
        if (section, key) not in scalars:
            raise ValidationError(f"[{section}] {key} is required")
        return scalars[(section, key)]

    def get(section: str, key: str, default=None):
        return scalars.get((section, key), default)

    left = list(need("model", "left_levels"))
    right = list(need("model", "right_levels"))
    n_l, n_r = len(left), len(right)

    crossings = np.zeros((n_l, n_r))
    for i, j, value, line in crossing_entries:
        if not (0 <= i < n_l and 0 <= j < n_r):
            raise ValidationError(
                f"crossing {i} {j} out of range for {n_l}x{n_r} ladders (line {line})"
            )
        crossings[i, j] = value
    if not crossing_entries:
        raise ValidationError("[model] needs at least one crossing")

    relax = {"L": np.zeros((n_l, n_l)), "R": np.zeros((n_r, n_r))}
    sizes = {"L": n_l, "R": n_r}
    for well, i, k, value, line in relax_entries:
        n = sizes[well]
        if not (0 <= i < n and 0 <= k < n):
            raise ValidationError(
                f"relax {well} {i} {k} out of range for a {n}-level ladder (line {line})"
            )
        relax[well][i, k] = value

    left_to_right = np.zeros((n_l, n_r))
    right_to_left = np.zeros((n_r, n_l))
    for w_from, l_from, w_to, l_to, value, line in inter_entries:
        if w_from == w_to:
            raise ValidationError(
                f"interwell rates must connect opposite wells (line {line})"
            )
        if not (l_from < sizes[w_from] and l_to < sizes[w_to]):
            raise ValidationError(
                f"interwell {w_from}{l_from} {w_to}{l_to} out of range (line {line})"
            )
        if w_from == "L":
            left_to_right[l_from, l_to] = value
        else:
            right_to_left[l_from, l_to] = value

    threshold = get("model", "leak_threshold")
    return_rate = get("model", "leak_return")
    if (threshold is None) != (return_rate is None):
        raise ValidationError(
            "leak_threshold and leak_return must be given together"
        )
    leak = None
    if threshold is not None:
        leak = LeakConfig(threshold=threshold, return_rate=return_rate)

    model = QubitModel(
        left_offsets=np.array(left),
        right_offsets=np.array(right),
        crossings=crossings,
        left_relax=relax["L"],
        right_relax=relax["R"],
        left_to_right=left_to_right,
        right_to_left=right_to_left,
        leak=leak,
    )

    single = get("drive", "frequency")
    batch = get("drive", "frequencies")
    if (single is None) == (batch is None):
        raise ValidationError(
            "[drive] needs exactly one of frequency or frequencies"
        )
    dephasing = need("drive", "dephasing")
    frequencies = [single] if single is not None else list(batch)
    drives = tuple(
        DriveParams(amplitude=0.0, frequency=f, dephasing=dephasing)
        for f in frequencies
    )

    eps_lo, eps_hi, n_eps = need("grid", "eps")
    amp_lo, amp_hi, n_amp = need("grid", "amp")
    grid = SweepGrid(
        eps_min=eps_lo,
        eps_max=eps_hi,
        n_eps=n_eps,
        amp_min=amp_lo,
        amp_max=amp_hi,
        n_amp=n_amp,
    )

    kernel = RateKernelParams(
        n_margin=get("kernel", "n_margin", 20),
        lorentz_cutoff=get("kernel", "lorentz_cutoff"),
    )

    return RunConfig(
        model=model,
        drives=drives,
        grid=grid,
        kernel=kernel,
        output_dir=get("output", "directory", "out"),
        formats=get("output", "formats", _FORMATS),
        config_sha256=hashlib.sha256(text.encode("utf-8")).hexdigest(),
    )


def _write_artifact(path: Path, data: bytes) -> str:
    """Write bytes atomically (temp file + rename), return the sha256."""
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(data)
    os.replace(tmp, path)
    return hashlib.sha256(data).hexdigest()


def csv_bytes(pmap: PopulationMap) -> bytes:
    """Row-major CSV, outer loop over amplitude, 17 significant digits."""
    eps = pmap.grid.eps_values
    amps = pmap.grid.amp_values
    lines = [_CSV_HEADER]
    for k, amp in enumerate(amps):
        row = pmap.values[k]
        amp_text = format(amp, ".17g")
        for m, e in enumerate(eps):
            lines.append(f"{e:.17g},{amp_text},{row[m]:.17g}")
    return ("\n".join(lines) + "\n").encode("ascii")


def write_csv(path, pmap: PopulationMap) -> str:
    return _write_artifact(Path(path), csv_bytes(pmap))


def read_csv(path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Inverse of write_csv: (eps_values, amp_values, values)."""
    with open(path, encoding="ascii") as fh:
        header = fh.readline().rstrip("\n")
        if header != _CSV_HEADER:
            raise ValidationError(f"unexpected CSV header {header!r}")
        cols = [line.rstrip("\n").split(",") for line in fh if line.strip()]
    eps_col = np.array([float(c[0]) for c in cols])
    amp_col = np.array([float(c[1]) for c in cols])
    p_col = np.array([float(c[2]) for c in cols])
    n = len(cols)
    n_eps = 1
    while n_eps < n and amp_col[n_eps] == amp_col[0]:
        n_eps += 1
    if n % n_eps:
        raise ValidationError("CSV rows do not form a rectangular grid")
    return eps_col[:n_eps], amp_col[::n_eps], p_col.reshape(n // n_eps, n_eps)


def pgm_bytes(pmap: PopulationMap) -> bytes:
    """8-bit binary graymap; amplitude increases upward, so the top
    raster row is the last grid row."""
    pixels = np.floor(pmap.values * 255.0 + 0.5).astype(np.uint8)
    header = f"P5\n{pmap.grid.n_eps} {pmap.grid.n_amp}\n255\n".encode("ascii")
    return header + pixels[::-1].tobytes()


def write_pgm(path, pmap: PopulationMap) -> str:
    return _write_artifact(Path(path), pgm_bytes(pmap))


def read_pgm(path) -> np.ndarray:
    """Raster in file order (top row first, amplitude decreasing)."""
    with open(path, "rb") as fh:
        blob = fh.read()
    magic, _, rest = blob.partition(b"\n")
    dims, _, rest = rest.partition(b"\n")
    maxval, _, raster = rest.partition(b"\n")
    if magic != b"P5" or maxval != b"255":
        raise ValidationError("not an 8-bit P5 graymap")
    width, height = (int(t) for t in dims.split())
    if len(raster) != width * height:
        raise ValidationError("graymap raster size mismatch")
    return np.frombuffer(raster, dtype=np.uint8).reshape(height, width)


def _regime_payload(model: QubitModel, drive: DriveParams):
    try:
        report = regime_classify(model, drive)
    except InsufficientLevels:
        return None
    return {
        "delta_a_ghz": report.delta_a,
        "delta_d_ghz": report.delta_d,
        "ratio": report.ratio,
        "classification": report.regime.value,
        "spacing_pair": list(report.spacing_pair),
    }


def run(config: RunConfig, workers: int = 1, out_dir=None) -> int:
    """Execute every sweep of the config and write maps plus manifest.

    The manifest is written after all maps succeed; its absence marks an
    incomplete output directory.
    """
    out = Path(out_dir if out_dir is not None else config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    maps = run_frequency_batch(
        config.model, config.drives, config.grid, config.kernel, workers
    )
    reports = []
    for idx, (drive, pmap) in enumerate(zip(config.drives, maps)):
        stem = f"map_{idx:02d}"
        files = {}
        if "csv" in config.formats:
            files["csv"] = {
                "name": f"{stem}.csv",
                "sha256": write_csv(out / f"{stem}.csv", pmap),
            }
        if "pgm" in config.formats:
            files["pgm"] = {
                "name": f"{stem}.pgm",
                "sha256": write_pgm(out / f"{stem}.pgm", pmap),
            }
        reports.append(
            {
                "frequency_ghz": drive.frequency,
                "fingerprint": pmap.fingerprint,
                "regime": _regime_payload(config.model, drive),
                "files": files,
            }
        )
    manifest = {
        "config_sha256": config.config_sha256,
        "boundaries": [
            {
                "left_level": b.left_level,
                "right_level": b.right_level,
                "position_ghz": b.position,
            }
            for b in diamond_boundaries(config.model)
        ],
        "maps": reports,
    }
    payload = json.dumps(manifest, indent=2, sort_keys=True) + "\n"
    _write_artifact(out / "manifest.json", payload.encode("ascii"))
    return 0


def _probe(config: RunConfig, eps: float, amp: float) -> int:
    """Print the stationary populations at one working point, using the
    first configured drive frequency."""
    base = config.drives[0]
    drive = DriveParams(
        amplitude=amp, frequency=base.frequency, dephasing=base.dephasing
    )
    p = stationary_solve(
        build_rate_matrix(config.model, eps, drive, config.kernel)
    )
    for state, prob in zip(p.states, p.probabilities):
        print(f"{state.label} {prob:.17g}")
    print(f"P_left {p.p_left:.17g}")
    print(f"P_right {p.p_right:.17g}")
    print(f"P_leak {p.p_leak:.17g}")
    return 0


def _boundaries(config: RunConfig) -> int:
    for b in diamond_boundaries(config.model):
        print(
            f"crossing {b.left_level}L-{b.right_level}R "
            f"position_ghz {b.position:.17g}"
        )
    for drive in config.drives:
        payload = _regime_payload(config.model, drive)
        if payload is None:
            print(
                f"frequency_ghz {drive.frequency:.17g} regime undetermined "
                "(single left level)"
            )
        else:
            print(
                f"frequency_ghz {drive.frequency:.17g} "
                f"delta_a {payload['delta_a_ghz']:.17g} "
                f"delta_d {payload['delta_d_ghz']:.17g} "
                f"ratio {payload['ratio']:.17g} "
                f"regime {payload['classification']}"
            )
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="lzs-sim",
        description="Stationary-population interference maps of a driven "
        "multilevel double-well qubit.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="sweep the grid and write maps")
    run_p.add_argument("config", help="configuration file")
    run_p.add_argument("--workers", type=int, default=1, help="worker processes")
    run_p.add_argument("--out", default=None, help="override output directory")

    probe_p = sub.add_parser(
        "probe", help="print stationary populations at one (eps, amp) point"
    )
    probe_p.add_argument("config", help="configuration file")
    probe_p.add_argument("--eps", type=float, required=True, help="detuning (GHz)")
    probe_p.add_argument("--amp", type=float, required=True, help="amplitude (GHz)")

    bound_p = sub.add_parser(
        "boundaries", help="print diamond boundaries and regime classification"
    )
    bound_p.add_argument("config", help="configuration file")

    args = parser.parse_args(argv)
    try:
        with open(args.config, encoding="utf-8") as fh:
            config = parse_config(fh.read())
        if args.command == "run":
            return run(config, workers=args.workers, out_dir=args.out)
        if args.command == "probe":
            return _probe(config, args.eps, args.amp)
        return _boundaries(config)
    except (ParseError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (SimulationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
