"""Command-line front end: ``starflow <subcommand> [options]``.

A scenario can be given as a JSON file with ``--config``; explicit flags
override its fields. Exit codes: 0 success, 1 battery failure, 2 usage or
validation error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import random
import sys
from dataclasses import asdict, dataclass, field, fields
from fractions import Fraction

from . import classical
from .algebra import Sign
from .checks import selftest
from .discrepancies import kms_factor_three
from .dynamics import heisenberg_evolve
from .frames import DARBOUX, DARBOUX_VARS, Parameters
from .open_evolution import open_evolve
from .parser import ParseError, parse_expression
from .sampling import random_bath_series
from .scalars import BACKENDS, EXACT, FLOAT, format_scalar
from .series import MAX_ORDER, mono_str
from .star import CLI_PRODUCTS, star_product
from .states import VARIANTS, BathState, partition_function, positivity_check, state_moments

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
CSV_COLUMNS = ("t", "hbar_order", "monomial", "re", "im")


class ConfigError(ValueError):
    """Validation failure; ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass
class ScenarioConfig:
    """One batch scenario; the README shows the JSON layout."""

    params: dict = field(default_factory=lambda: {"m": 1.0, "nu": 1.0, "kappa": 0.0,
                                                  "beta": None})
    truncation_order: int = 6
    scalar_backend: str = FLOAT
    state: dict = field(default_factory=lambda: {"variant": "kms", "q0": 0.0, "p0": 0.0})
    observable: str = "qS"
    times: list = field(default_factory=lambda: [0.0])
    seed: int = 42
    output_format: str = "csv"

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        known = {f.name for f in fields(cls)}
        for key in data:
            if key not in known:
                raise ConfigError(key, "unknown field")
        cfg = cls()
        for key, value in data.items():
            if key in ("params", "state"):
                merged = dict(getattr(cfg, key))
                if not isinstance(value, dict):
                    raise ConfigError(key, "must be an object")
                merged.update(value)
                value = merged
            setattr(cfg, key, value)
        return cfg

    def to_dict(self) -> dict:
        return asdict(self)

    def validate(self, needs_beta: bool = False, uses_state: bool = False) -> None:
        p = self.params
        for key in ("m", "nu"):
            _positive(p.get(key), f"params.{key}")
        kappa = p.get("kappa", 0.0)
        if not _is_number(kappa) or kappa < 0:
            raise ConfigError("params.kappa", f"must be a non-negative number, got {kappa!r}")
        if uses_state and self.state.get("variant") not in VARIANTS:
            raise ConfigError("state.variant", f"must be one of {list(VARIANTS)}")
        if needs_beta or (uses_state and self.state.get("variant") == "kms"):
            _positive(p.get("beta"), "beta")
        elif p.get("beta") is not None:
            _positive(p.get("beta"), "beta")
        for key in ("q0", "p0"):
            v = self.state.get(key, 0.0)
            if not _is_number(v) or not math.isfinite(v):
                raise ConfigError(f"state.{key}", "must be a finite number")
        if not isinstance(self.truncation_order, int) or not 0 <= self.truncation_order <= MAX_ORDER:
            raise ConfigError("truncation_order", f"must be an integer in 0..{MAX_ORDER}")
        if self.scalar_backend not in BACKENDS:
            raise ConfigError("scalar_backend", f"must be one of {list(BACKENDS)}")
        if not isinstance(self.times, list) or not self.times:
            raise ConfigError("times", "must be a non-empty list")
        for i, t in enumerate(self.times):
            if not _is_number(t) or not math.isfinite(t):
                raise ConfigError(f"times[{i}]", "must be a finite number")
        if not isinstance(self.seed, int):
            raise ConfigError("seed", "must be an integer")
        if self.output_format not in ("csv", "json"):
            raise ConfigError("output_format", "must be 'csv' or 'json'")

    def parameters(self) -> Parameters:
        p = self.params
        conv = (lambda v: Fraction(str(v))) if self.scalar_backend == EXACT else float
        beta = p.get("beta")
        try:
            return Parameters(conv(p["m"]), conv(p["nu"]), conv(p.get("kappa", 0.0)),
                              None if beta is None else conv(beta), backend=self.scalar_backend)
        except ValueError as exc:
            raise ConfigError("params", str(exc)) from None

    def bath_state(self) -> BathState:
        s = self.state
        return BathState(s["variant"], self.parameters(), s.get("q0", 0.0), s.get("p0", 0.0),
                         self.truncation_order)


def _is_number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _positive(v, path: str):
    if not _is_number(v) or not v > 0 or not math.isfinite(v):
        raise ConfigError(path, f"must be a positive number, got {v!r}")


# ---------------------------------------------------------------------------- parsing helpers


def parse_times(text: str) -> list[float]:
    """``"0,0.5,1"`` or ``"start:stop:count"`` (inclusive, evenly spaced)."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError("time grid must look like start:stop:count")
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
        if count < 1:
            raise ValueError("time grid count must be positive")
        if count == 1:
            return [start]
        return [start + (stop - start) * k / (count - 1) for k in range(count)]
    return [float(x) for x in text.split(",") if x.strip()]


def parse_state(text: str) -> dict:
    """``kms``, ``delta``, ``deformed-delta`` or ``<variant>:<q0>,<p0>``."""
    variant, _, rest = text.partition(":")
    out = {"variant": variant}
    if rest:
        q0, _, p0 = rest.partition(",")
        out["q0"], out["p0"] = float(q0), float(p0 or 0.0)
    return out


def _load_config(args) -> ScenarioConfig:
    data = {}
    if getattr(args, "config", None):
        try:
            with open(args.config, encoding="utf-8") as fh:
                data = json.load(fh)
        except OSError as exc:
            raise ConfigError("config", str(exc)) from None
        except json.JSONDecodeError as exc:
            raise ConfigError("config", f"invalid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config", "top level must be an object")
    cfg = ScenarioConfig.from_dict(data)
    for key in ("m", "nu", "kappa", "beta"):
        v = getattr(args, key, None)
        if v is not None:
            cfg.params[key] = v
    overrides = {"order": "truncation_order", "backend": "scalar_backend",
                 "observable": "observable", "seed": "seed", "format": "output_format"}
    for flag, attr in overrides.items():
        v = getattr(args, flag, None)
        if v is not None:
            setattr(cfg, attr, v)
    if getattr(args, "t", None) is not None:
        try:
            cfg.times = parse_times(args.t)
        except ValueError as exc:
            raise ConfigError("times", str(exc)) from None
    if getattr(args, "state", None) is not None:
        try:
            cfg.state.update(parse_state(args.state))
        except ValueError as exc:
            raise ConfigError("state", str(exc)) from None
    for key in ("q0", "p0"):
        v = getattr(args, key, None)
        if v is not None:
            cfg.state[key] = v
    return cfg


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _csv(rows, header) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(x) if isinstance(x, float) else x for x in row])
    return buf.getvalue()


def _series_rows(series, t) -> list[tuple]:
    out = []
    for (k, mono), c in series.to_darboux().items():
        z = complex(c)
        out.append((float(t), k, mono_str(mono, DARBOUX_VARS), z.real, z.imag))
    return out


def _render_series_table(rows, cfg: ScenarioConfig, extra: dict | None = None) -> str:
    if cfg.output_format == "json":
        payload = {"config": cfg.to_dict(), "columns": list(CSV_COLUMNS),
                   "rows": [list(r) for r in rows]}
        if extra:
            payload.update(extra)
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"
    return _csv(rows, CSV_COLUMNS)


# ---------------------------------------------------------------------------- subcommands


def cmd_star(args) -> int:
    cfg = _load_config(args)
    cfg.validate()
    params = cfg.parameters()
    f = parse_expression(args.f, DARBOUX, params, cfg.truncation_order)
    g = parse_expression(args.g, DARBOUX, params, cfg.truncation_order)
    star = star_product(args.product, params)
    result = star(f, g)
    if args.commutator:
        result = result - star(g, f)
    if cfg.output_format == "json":
        _emit(result.to_json(indent=2, sort_keys=True) + "\n", args.out)
    else:
        _emit(str(result) + "\n", args.out)
    return EXIT_OK


def cmd_evolve(args) -> int:
    cfg = _load_config(args)
    cfg.validate()
    params = cfg.parameters()
    f = parse_expression(cfg.observable, DARBOUX, params, cfg.truncation_order)
    rows = []
    for t in cfg.times:
        rows.extend(_series_rows(heisenberg_evolve(f, t, params), t))
    _emit(_render_series_table(rows, cfg), args.out)
    return EXIT_OK


def cmd_open_evolve(args) -> int:
    cfg = _load_config(args)
    cfg.validate(uses_state=True)
    state = cfg.bath_state()
    f = parse_expression(cfg.observable, DARBOUX, state.params, cfg.truncation_order)
    rows = []
    for t in cfg.times:
        rows.extend(open_evolve(f, t, state, cfg.observable).rows())
    _emit(_render_series_table(rows, cfg, {"state": state.label()}), args.out)
    return EXIT_OK


def cmd_classical(args) -> int:
    cfg = _load_config(args)
    cfg.validate()
    if args.field == "rotation-const":
        spec = classical.rotation_const(cfg.params["nu"])
    elif args.field == "rotation-radial":
        spec = classical.rotation_radial()
    else:
        spec = classical.linear_hamiltonian(cfg.parameters().as_float())
    xS = [float(x) for x in args.xS.split(",")]
    xB = [float(x) for x in args.xB.split(",")]
    if len(xS) != spec.m or len(xB) != spec.n:
        raise ConfigError("xS/xB", f"field {args.field} needs {spec.m} system and "
                                   f"{spec.n} bath coordinates")
    header = ["t"] + [f"xS{i}" for i in range(spec.m)] + ["residual"]
    rows = []
    for t in cfg.times:
        x = classical.open_evolve_pure(spec, xS, xB, t, args.h)
        res = classical.evolution_property_residual(spec, xS, xB, args.s, t, args.h)
        rows.append([float(t), *map(float, x), res])
    _emit(_csv(rows, header), args.out)
    return EXIT_OK


def cmd_kms(args) -> int:
    cfg = _load_config(args)
    cfg.state["variant"] = "kms"
    cfg.validate(needs_beta=True)
    params = cfg.parameters()
    N = cfg.truncation_order
    mu, Z = partition_function(params.beta, params, N)
    state = BathState.kms(params, order=N)
    lines = [f"mu_KMS(1) = {mu}", f"Z principal part = {format_scalar(Z.principal_part)} / hbar",
             "moments:"]
    for mono in ((1, 0), (0, 1), (2, 0), (1, 1), (0, 2)):
        label = mono_str((0, 0) + mono, DARBOUX_VARS)
        lines.append(f"  omega({label}) = {state_moments(state, mono)}")
    flag = kms_factor_three(params, N)
    if flag.present:
        lines.append(flag.line())
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def cmd_check(args) -> int:
    cfg = _load_config(args)
    cfg.validate(uses_state=True)
    state = cfg.bath_state()
    rng = random.Random(cfg.seed)
    counts = {s.value: 0 for s in Sign}
    for _ in range(args.trials):
        f = random_bath_series(rng, 3, order=cfg.truncation_order, backend=cfg.scalar_backend)
        counts[positivity_check(state, f).value] += 1
    ok = counts[Sign.NEGATIVE.value] == 0
    lines = [f"positivity battery: state {state.label()}, trials {args.trials}, "
             f"generator random.Random seed {cfg.seed}"]
    lines += [f"  {k}: {v}" for k, v in counts.items()]
    lines.append("PASS" if ok else "FAIL")
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_selftest(args) -> int:
    cfg = _load_config(args)
    cfg.validate()
    ok, report = selftest(cfg.seed, args.trials)
    _emit(report, args.out)
    return EXIT_OK if ok else EXIT_FAIL


# ---------------------------------------------------------------------------- parser


def _common(p: argparse.ArgumentParser, observable: bool = False, times: bool = False,
            state: bool = False) -> None:
    p.add_argument("--config", help="JSON scenario file")
    p.add_argument("--m", type=float)
    p.add_argument("--nu", type=float)
    p.add_argument("--kappa", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--order", type=int, help="hbar truncation order")
    p.add_argument("--backend", choices=BACKENDS)
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output file (default stdout)")
    if observable:
        p.add_argument("--observable", help="expression, e.g. 'qS^2 + hbar*pS'")
    if times:
        p.add_argument("--t", help="times: '0,0.5,1' or 'start:stop:count'")
    if state:
        p.add_argument("--state", help="kms | delta | deformed-delta[:q0,p0]")
        p.add_argument("--q0", type=float)
        p.add_argument("--p0", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="starflow", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("star", help="star product of two expressions")
    _common(p)
    p.add_argument("--product", choices=CLI_PRODUCTS, default="weyl")
    p.add_argument("--f", required=True)
    p.add_argument("--g", required=True)
    p.add_argument("--commutator", action="store_true", help="print f*g - g*f instead")
    p.set_defaults(func=cmd_star)

    p = sub.add_parser("evolve", help="Heisenberg evolution of the coupled oscillators")
    _common(p, observable=True, times=True)
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("open-evolve", help="open evolution with respect to a bath state")
    _common(p, observable=True, times=True, state=True)
    p.set_defaults(func=cmd_open_evolve)

    p = sub.add_parser("classical", help="classical open evolution of a builtin field")
    _common(p, times=True)
    p.add_argument("--field", choices=("rotation-const", "rotation-radial", "linear-hamiltonian"),
                   default="rotation-const")
    p.add_argument("--xS", default="1.0")
    p.add_argument("--xB", default="0.0")
    p.add_argument("--s", type=float, default=0.5, help="second time of the residual")
    p.add_argument("--h", type=float, default=classical.DEFAULT_STEP)
    p.set_defaults(func=cmd_classical)

    p = sub.add_parser("kms", help="KMS normalisation, partition function and moments")
    _common(p)
    p.set_defaults(func=cmd_kms)

    p = sub.add_parser("check", help="randomized batteries")
    check_sub = p.add_subparsers(dest="battery", required=True)
    c = check_sub.add_parser("positivity", help="omega(conj f * f) sign battery")
    _common(c, state=True)
    c.add_argument("--trials", type=int, default=100)
    c.set_defaults(func=cmd_check)

    p = sub.add_parser("selftest", help="run every battery and print the report")
    p.add_argument("--config", help="JSON scenario file (only the seed is used)")
    p.add_argument("--seed", type=int)
    p.add_argument("--trials", type=int, help="cap on random trial counts")
    p.add_argument("--out")
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return args.func(args)
    except (ConfigError, ParseError, ValueError) as exc:
        print(f"starflow: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"starflow: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
