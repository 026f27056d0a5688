"""Command line driver: ``logvoa <command> --config FILE [--set key=value]...``.

Every check becomes one JSON line on stdout; a final ``summary`` line carries
the config echo, wall time and engine version.  Exit status is 0 when every
check passed, 1 when some check failed and 2 for configuration errors.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import sys
import tempfile
import time
from dataclasses import dataclass, fields
from fractions import Fraction
from pathlib import Path

from . import __version__
from .fock import (BASIS_ORDER_VERSION, ModuleVector, OmegaSpec, basis,
                   jordan_structure_L0)
from .intertwiner import (DegenerateParameters, IntertwinerSpec, OperatorSeries,
                          check_h_bracket, check_L_minus1, depth_bound, f_map,
                          f_map_is_equivariant, mock_log_check)
from .logseries import TruncationWindow
from .scalar import eta_inverse_series, format_rational, parse_rational
from .virstruct import (SingularVector, character_check, check_dual_jordan, check_L0_jordan,
                        fusion_span_check, hidden_intertwiner_check, singular_basis,
                        structure_diagram)

COMMANDS = ("verify-intertwiner", "structure", "character", "hidden", "fusion", "mock", "singular")


class ConfigError(ValueError):
    pass


# ================================================================ config

def _rational_list(text: str) -> tuple:
    return tuple(parse_rational(t) for t in text.split(",") if t.strip())


def _int_list(text: str) -> tuple:
    return tuple(int(t) for t in text.split(",") if t.strip())


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


@dataclass
class RunConfig:
    a: Fraction = Fraction(0)
    lam: Fraction = Fraction(0)
    nu: Fraction = Fraction(0)
    jordan_sizes: tuple = (2, 2, 3)
    truncation: int = 4
    log_cutoff: int = 5
    weight_bound: int = 4
    cache_path: str = ""
    m: int = 1
    n: int = 1
    corrupt_t: bool = False
    seed: int = 0
    grid_sizes: tuple = (1, 2, 3)
    grid_lambdas: tuple = (Fraction(0), Fraction(1), Fraction(1, 2))
    grid_nus: tuple = (Fraction(0), Fraction(1), Fraction(1, 2))
    sample_level: int = 2
    random_samples: int = 1

    def validate(self) -> None:
        if self.truncation < 1:
            raise ConfigError("truncation: window span N must be >= 1")
        if any(s < 1 for s in self.jordan_sizes) or not self.jordan_sizes:
            raise ConfigError("jordan_sizes: sizes must be >= 1")
        if any(s < 1 for s in self.grid_sizes):
            raise ConfigError("grid_sizes: sizes must be >= 1")
        for key in ("log_cutoff", "weight_bound", "m", "n", "sample_level", "random_samples"):
            if getattr(self, key) < 0:
                raise ConfigError(f"{key}: must be nonnegative")

    def echo(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            key = KEY_NAMES.get(f.name, f.name)
            if isinstance(v, Fraction):
                out[key] = format_rational(v)
            elif isinstance(v, tuple):
                out[key] = ",".join(format_rational(x) if isinstance(x, Fraction) else str(x) for x in v)
            else:
                out[key] = v
        return out


# config key -> (field, parser)
PARSERS = {
    "a": ("a", parse_rational),
    "lambda": ("lam", parse_rational),
    "nu": ("nu", parse_rational),
    "jordan_sizes": ("jordan_sizes", _int_list),
    "truncation": ("truncation", int),
    "log_cutoff": ("log_cutoff", int),
    "weight_bound": ("weight_bound", int),
    "cache_path": ("cache_path", str),
    "m": ("m", int),
    "n": ("n", int),
    "corrupt_t": ("corrupt_t", _bool),
    "seed": ("seed", int),
    "grid_sizes": ("grid_sizes", _int_list),
    "grid_lambdas": ("grid_lambdas", _rational_list),
    "grid_nus": ("grid_nus", _rational_list),
    "sample_level": ("sample_level", int),
    "random_samples": ("random_samples", int),
}
KEY_NAMES = {fname: key for key, (fname, _) in PARSERS.items()}


def _assign(cfg: RunConfig, key: str, value: str, where: str) -> None:
    if key not in PARSERS:
        raise ConfigError(f"{where}: unknown key {key!r}")
    fname, parse = PARSERS[key]
    try:
        setattr(cfg, fname, parse(value.strip()))
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"{where}: bad value for {key!r}: {exc}") from None


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    cfg = RunConfig()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected key = value")
        key, _, value = line.partition("=")
        _assign(cfg, key.strip(), value, f"{source}:{lineno}")
    return cfg


def load_config(path, overrides=()) -> RunConfig:
    if path is None:
        cfg = RunConfig()
    else:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        cfg = parse_config(text, str(path))
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"--set {item!r}: expected key=value")
        key, _, value = item.partition("=")
        _assign(cfg, key.strip(), value, f"--set {key.strip()}")
    cfg.validate()
    return cfg


# ================================================================ cache

class SingularCache:
    """Singular vectors on disk, keyed by (a, Omega fingerprint, weight, basis order).

    Entries are re-verified (L(1) v = L(2) v = 0, right level) whenever they
    are read; anything that fails is recomputed and the file rewritten.
    """

    def __init__(self, path):
        self.path = Path(path) if path else None
        self.entries: dict = {}
        self.dirty = False
        self.rejected = 0
        if self.path and self.path.exists():
            self._load()

    @staticmethod
    def key(a, omega: OmegaSpec, weight) -> str:
        return (f"a={format_rational(a)} omega={omega.fingerprint()} "
                f"weight={format_rational(weight)} order={BASIS_ORDER_VERSION}")

    def _load(self) -> None:
        current, vectors, lines = None, [], []
        try:
            text = self.path.read_text()
        except OSError:
            self.rejected += 1
            return
        for raw in text.splitlines():
            line = raw.strip()
            if line.startswith("[") and line.endswith("]"):
                body = line[1:-1]
                if body == "end":
                    if current is not None:
                        if lines:
                            vectors.append(lines)
                        self.entries[current] = vectors
                    current, vectors, lines = None, [], []
                else:
                    current, vectors, lines = body, [], []
            elif line == "---":
                vectors.append(lines)
                lines = []
            elif line and current is not None:
                lines.append(line)

    def _verified(self, key, omega, a, weight):
        blocks = self.entries.get(key)
        if blocks is None:
            return None
        try:
            vecs = [ModuleVector.from_lines(b) for b in blocks]
        except (ValueError, IndexError):
            self.rejected += 1
            return None
        level = weight - (omega.eigenvalue ** 2 / 2 - a * omega.eigenvalue)
        out = []
        for v in vecs:
            sv = SingularVector(v, weight)
            if not v or not sv.verify(omega, a) or v.levels() != {level} \
                    or any(s.omega_index > omega.dim for s in v.terms):
                self.rejected += 1
                return None
            out.append(sv)
        return out

    def get(self, weight, omega: OmegaSpec, a):
        key = self.key(a, omega, weight)
        hit = self._verified(key, omega, a, weight)
        if hit is not None:
            return hit, True
        found = singular_basis(weight, omega, a)
        self.entries[key] = [v.vector.to_lines() for v in found]
        self.dirty = True
        return found, False

    def save(self) -> None:
        if not self.path or not self.dirty:
            return
        chunks = []
        for key in sorted(self.entries):
            chunks.append(f"[{key}]")
            chunks.append("\n---\n".join("\n".join(b) for b in self.entries[key]))
            chunks.append("[end]")
        text = "\n".join(c for c in chunks if c) + "\n"
        self.path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=self.path.parent, prefix=self.path.name, suffix=".tmp")
        try:
            with os.fdopen(fd, "w") as fh:
                fh.write(text)
            os.replace(tmp, self.path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
        self.dirty = False


# ================================================================ reports

class Reporter:
    def __init__(self, stream):
        self.stream = stream
        self.passed = 0
        self.failed = 0

    def emit(self, check: str, ok: bool, spec=None, window=None, witness=None, **extra):
        rec = {"check": check, "result": "pass" if ok else "fail"}
        if spec is not None:
            rec["spec"] = spec
        if window is not None:
            rec["window"] = window.as_dict() if isinstance(window, TruncationWindow) else window
        rec.update(extra)
        if not ok:
            rec["witness"] = witness if witness is not None else {"note": "no coefficient witness"}
        elif witness is not None:
            rec["witness"] = witness
        if ok:
            self.passed += 1
        else:
            self.failed += 1
        self.stream.write(json.dumps(rec, default=str) + "\n")

    def summary(self, command, cfg: RunConfig, elapsed: float):
        rec = {"check": "summary", "command": command, "config": cfg.echo(),
               "wall_time_s": round(elapsed, 3), "version": __version__,
               "passed": self.passed, "failed": self.failed}
        self.stream.write(json.dumps(rec) + "\n")


def _sample_inputs(omega: OmegaSpec, level: int, rng: random.Random, extra: int) -> list:
    samples = [ModuleVector.vacuum(q) for q in range(1, omega.dim + 1)]
    for d in range(1, level + 1):
        samples.append(ModuleVector.basis_vector((d,), omega.dim))
        samples.append(ModuleVector.basis_vector((1,) * d, 1))
    states = [s for d in range(level + 1) for s in basis(omega, d)]
    for _ in range(extra):
        chosen = rng.sample(states, min(3, len(states)))
        samples.append(ModuleVector({s: rng.randint(-3, 3) or 1 for s in chosen}))
    return samples


def cmd_verify_intertwiner(cfg: RunConfig, rep: Reporter, out=None) -> None:
    rng = random.Random(cfg.seed)
    window = TruncationWindow.span(cfg.truncation)
    for m1 in cfg.grid_sizes:
        for m2 in cfg.grid_sizes:
            for lam in cfg.grid_lambdas:
                for nu in cfg.grid_nus:
                    spec = IntertwinerSpec.identity(cfg.a, OmegaSpec(lam, (m1,)), OmegaSpec(nu, (m2,)))
                    if cfg.corrupt_t:
                        try:
                            spec = spec.corrupted()
                        except ValueError:
                            continue
                    summary = spec.summary()
                    op = OperatorSeries(spec, window)
                    samples = _sample_inputs(spec.omega2, cfg.sample_level, rng, cfg.random_samples)
                    bad = None
                    count = 0
                    for i in range(1, m1 + 1):
                        for w2 in samples:
                            for n in range(-3, 4):
                                r = check_h_bracket(op, i, n, w2, window)
                                count += 1
                                if not r and bad is None:
                                    bad = dict(r.witness, i=i, n=n, w2=w2.to_lines())
                    rep.emit("h_bracket", bad is None, summary, window, bad, samples=count)
                    bad = None
                    for i in range(1, m1 + 1):
                        for w2 in samples:
                            r = check_L_minus1(op, i, w2, window)
                            if not r and bad is None:
                                bad = dict(r.witness, i=i, w2=w2.to_lines())
                    rep.emit("L_minus1", bad is None, summary, window, bad)
                    if not cfg.corrupt_t:
                        eq = f_map_is_equivariant(op)
                        rep.emit("f_map_equivariant", eq, summary, None,
                                 None if eq else {"F": [[[format_rational(c) for c in row] for row in F]
                                                        for F in f_map(op)]})
                        d, bound = op.depth(TruncationWindow(0, min(2, cfg.truncation))), \
                            depth_bound(m1, m2, lam, nu)
                        rep.emit("depth", d == bound, summary, None,
                                 None if d == bound else {"measured": d, "bound": bound},
                                 measured=d, bound=bound)


def _expected_arrows(size: int, ms: list) -> set:
    tiers = ("singular", "subsingular", "subsubsingular")
    out = set()
    for t in range(2, size + 1):
        for m in ms:
            for m2 in (m - 1, m + 1):
                if m2 in ms:
                    out.add(((tiers[t - 1], m), (tiers[t - 2], m2)))
    return out


def cmd_structure(cfg: RunConfig, rep: Reporter, out=None) -> None:
    size = cfg.jordan_sizes[0]
    omega = OmegaSpec(0, (size,))
    bound = cfg.weight_bound
    diagram = structure_diagram(omega, bound)
    ms = sorted({m for _, m, _ in diagram.nodes})
    got = set(diagram.arrows)
    expected = _expected_arrows(size, ms)
    for src, dst in sorted(expected):
        rep.emit("arrow", (src, dst) in got, omega.fingerprint(), None,
                 None if (src, dst) in got else {"missing": [f"{src[0]}:{src[1]}", f"{dst[0]}:{dst[1]}"]},
                 source=f"{src[0]}:{src[1]}", target=f"{dst[0]}:{dst[1]}")
    extra = sorted(got - expected)
    rep.emit("no_extra_arrows", not extra, omega.fingerprint(), None,
             {"extra": [[f"{s[0]}:{s[1]}", f"{d[0]}:{d[1]}"] for s, d in extra]} if extra else None,
             nodes=len(diagram.nodes), implied=len(diagram.implied))
    if size >= 3:
        for m in ms:
            ok = check_L0_jordan(m, omega)
            rep.emit("L0_jordan", ok, omega.fingerprint(), None, None if ok else {"n": m}, n=m)
            blocks = jordan_structure_L0(omega, 0, m * m)[0][1]
            rep.emit("genuine_L0_block", max(blocks) >= 2, omega.fingerprint(), None,
                     None if max(blocks) >= 2 else {"blocks": blocks}, level=m * m, blocks=blocks)
    ok = check_dual_jordan(omega)
    rep.emit("dual_block_sizes", ok, omega.fingerprint())
    if out:
        Path(out).write_text(diagram.to_tgf())


def cmd_character(cfg: RunConfig, rep: Reporter, out=None) -> None:
    r = character_check(cfg.a, cfg.lam, cfg.weight_bound)
    spec = {"a": format_rational(cfg.a), "lambda": format_rational(cfg.lam)}
    rep.emit("level_dimensions", r.dims == r.expected, spec, None,
             None if r.dims == r.expected else {"dims": r.dims, "expected": r.expected},
             dims=r.dims)
    ok = r.offset_is_eta == (cfg.lam == cfg.a)
    rep.emit("eta_offset", ok, spec, None, None if ok else {"offset": format_rational(r.offset)},
             offset=format_rational(r.offset), central_charge=format_rational(r.central_charge),
             lowest_weight=format_rational(r.lowest_weight), self_dual=cfg.lam == cfg.a)
    eta = eta_inverse_series(cfg.weight_bound)
    ok = [int(c) for c in eta.coeffs] == r.dims
    rep.emit("eta_cross_check", ok, spec, None, None if ok else {"eta": [str(c) for c in eta.coeffs]})


def cmd_hidden(cfg: RunConfig, rep: Reporter, out=None) -> None:
    window = TruncationWindow.span(cfg.truncation)
    for m in range(cfg.m + 1):
        for n in range(cfg.n + 1):
            r = hidden_intertwiner_check(m, n, cfg.weight_bound, window)
            spec = {"m": m, "n": n}
            rep.emit("hidden_T_equivariant", r.equivariant, spec)
            ok = r.depth == 1 and bool(r.log1_witness)
            rep.emit("hidden_depth_one", ok, spec, window,
                     {"log1": r.log1_witness} if ok else {"depth": r.depth, "log1": r.log1_witness})
            rep.emit("hidden_neighbours_log_free", r.log_free_neighbours, spec, window)
            rep.emit("hidden_filtration", r.filtration, spec, window, r.filtration_witness)
            rep.emit("hidden_image_contained", r.image_contained is not False, spec, window,
                     top_generator_reached=r.top_generator_reached)


def cmd_fusion(cfg: RunConfig, rep: Reporter, out=None) -> None:
    r = fusion_span_check(cfg.m, cfg.n, cfg.weight_bound)
    rep.emit("fusion_span", r.passed, {"m": cfg.m, "n": cfg.n}, None, r.first_mismatch(),
             dims=r.dims, predicted=r.predicted)


def cmd_mock(cfg: RunConfig, rep: Reporter, out=None) -> None:
    window = TruncationWindow.span(cfg.truncation)
    r = mock_log_check(cfg.lam, cfg.nu, cfg.a, window, cfg.log_cutoff)
    spec = {"lambda": format_rational(cfg.lam), "nu": format_rational(cfg.nu), "K": cfg.log_cutoff}
    for res in r.l_minus1:
        rep.emit("mock_L_minus1_below_cutoff", res.passed, spec, window, res.witness)
    rep.emit("mock_top_log_nonzero", r.top_log_nonzero, spec, window,
             {"k": 0, "j": cfg.log_cutoff - 1, "coefficient": r.top_log_witness})


def cmd_singular(cfg: RunConfig, rep: Reporter, out=None) -> None:
    omega = OmegaSpec(cfg.lam, (cfg.jordan_sizes[0],))
    cache = SingularCache(cfg.cache_path)
    base = omega.eigenvalue ** 2 / 2 - cfg.a * omega.eigenvalue
    for level in range(cfg.weight_bound + 1):
        weight = base + level
        found, hit = cache.get(weight, omega, cfg.a)
        ok = all(v.verify(omega, cfg.a) for v in found)
        rep.emit("singular_basis", ok, omega.fingerprint(), None, None,
                 weight=format_rational(weight), dimension=len(found), cached=hit,
                 vectors=[v.vector.to_lines() for v in found])
    cache.save()
    if cache.rejected:
        sys.stderr.write(f"cache: {cache.rejected} entr{'y' if cache.rejected == 1 else 'ies'} "
                         "failed re-verification and were recomputed\n")


HANDLERS = {
    "verify-intertwiner": cmd_verify_intertwiner,
    "structure": cmd_structure,
    "character": cmd_character,
    "hidden": cmd_hidden,
    "fusion": cmd_fusion,
    "mock": cmd_mock,
    "singular": cmd_singular,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="logvoa", description="Exact checks for Heisenberg logarithmic intertwiners.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="flat key = value file")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override one config key (repeatable)")
    p.add_argument("--out", help="where to write the structure diagram (TGF)")
    return p


def main(argv=None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    try:
        cfg = load_config(args.config, args.set)
    except ConfigError as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return 2
    rep = Reporter(stdout)
    start = time.perf_counter()
    try:
        HANDLERS[args.command](cfg, rep, args.out)
    except (DegenerateParameters, ValueError) as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return 2
    rep.summary(args.command, cfg, time.perf_counter() - start)
    return 1 if rep.failed else 0


if __name__ == "__main__":
    sys.exit(main())
