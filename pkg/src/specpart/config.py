"""Run configuration: INI-style files, validation, and shipped presets.

A run file has sections [domain], [partition], [functional], [solver],
[output].  Per-group inner functionals are a comma list (`sum`, `product`,
`pnorm:<p>`); the outer combinator is `sum`, `product` or `powersum` with
optional per-group `outer_powers`.
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field

from .functional import FunctionalSpec, InnerSpec
from .optimizer import SolverConfig

DOMAINS = ("square", "rectangle", "disk")


@dataclass
class RunConfig:
    domain_type: str
    resolution: int
    width: float
    height: float
    functional: FunctionalSpec
    solver: SolverConfig
    output_dir: str

    @property
    def seed(self) -> int:
        return self.solver.seed


def _parse_inner(token: str, size: int) -> InnerSpec:
    token = token.strip()
    if token.startswith("pnorm"):
        _, _, p = token.partition(":")
        if not p:
            raise ValueError("pnorm needs an exponent, e.g. pnorm:2")
        return InnerSpec(kind="pnorm", size=size, p=float(p))
    return InnerSpec(kind=token, size=size)


def _build(parser: configparser.ConfigParser):
    """Typed config plus the list of diagnostics (empty means valid)."""
    issues = []

    def need(section, key, default=None):
        if parser.has_option(section, key):
            return parser.get(section, key)
        if default is not None:
            return default
        issues.append(f"missing {section}.{key}")
        return None

    domain_type = (need("domain", "type") or "").strip()
    if domain_type and domain_type not in DOMAINS:
        issues.append(f"domain.type must be one of {DOMAINS}, got {domain_type!r}")
    resolution = 0
    try:
        resolution = int(need("domain", "resolution") or 0)
        if resolution < 2:
            issues.append("domain.resolution must be at least 2")
    except ValueError:
        issues.append("domain.resolution must be an integer")
    width = float(need("domain", "width", "1.0"))
    height = float(need("domain", "height", "1.0"))

    sizes = []
    raw_sizes = need("partition", "group_sizes")
    if raw_sizes:
        try:
            sizes = [int(s) for s in raw_sizes.split(",")]
            if any(k < 1 for k in sizes):
                issues.append("partition.group_sizes entries must be >= 1")
        except ValueError:
            issues.append("partition.group_sizes must be a comma list of integers")

    functional = None
    outer = (need("functional", "outer") or "").strip()
    raw_inner = need("functional", "inner") or ""
    inner_tokens = [t for t in raw_inner.split(",") if t.strip()]
    if sizes and inner_tokens and len(inner_tokens) != len(sizes):
        issues.append(
            f"functional.inner has {len(inner_tokens)} entries but "
            f"partition.group_sizes has {len(sizes)}")
    outer_powers = None
    if parser.has_option("functional", "outer_powers"):
        try:
            outer_powers = tuple(float(p) for p in
                                 parser.get("functional", "outer_powers").split(","))
        except ValueError:
            issues.append("functional.outer_powers must be a comma list of numbers")
    if outer and sizes and inner_tokens and len(inner_tokens) == len(sizes):
        try:
            groups = tuple(_parse_inner(t, k) for t, k in zip(inner_tokens, sizes))
            functional = FunctionalSpec(outer=outer, groups=groups,
                                        outer_powers=outer_powers)
        except ValueError as exc:
            issues.append(f"functional: {exc}")

    solver = None
    sdefaults = SolverConfig()
    init = need("solver", "init", sdefaults.init).strip()
    if init == "bumps" and not parser.has_option("solver", "seed"):
        issues.append("solver.seed is required when init = bumps")
    try:
        solver = SolverConfig(
            scheme=need("solver", "scheme", sdefaults.scheme).strip(),
            beta0=float(need("solver", "beta0", str(sdefaults.beta0))),
            beta_multiplier=float(need("solver", "beta_multiplier",
                                       str(sdefaults.beta_multiplier))),
            beta_stages=int(need("solver", "beta_stages", str(sdefaults.beta_stages))),
            q=float(need("solver", "q", str(sdefaults.q))),
            step0=float(need("solver", "step0", str(sdefaults.step0))),
            backtrack=float(need("solver", "backtrack", str(sdefaults.backtrack))),
            armijo=float(need("solver", "armijo", str(sdefaults.armijo))),
            tolerance=float(need("solver", "tolerance", str(sdefaults.tolerance))),
            max_iterations=int(need("solver", "max_iterations",
                                    str(sdefaults.max_iterations))),
            penalty_share_tol=float(need("solver", "penalty_share_tol",
                                         str(sdefaults.penalty_share_tol))),
            seed=int(need("solver", "seed", "0")),
            init=init,
            checkpoint_path=parser.get("solver", "checkpoint", fallback=None),
            projection_checkpoint=parser.get("solver", "projection_checkpoint",
                                             fallback=None),
        )
    except ValueError as exc:
        issues.append(f"solver: {exc}")
    if solver is not None and solver.scheme == "fixed-point" and solver.q != 1.0:
        issues.append("solver: the fixed-point scheme requires q = 1")

    output_dir = need("output", "directory", "out")

    if issues or functional is None or solver is None:
        return None, issues
    return RunConfig(domain_type=domain_type, resolution=resolution,
                     width=width, height=height, functional=functional,
                     solver=solver, output_dir=output_dir), issues


def _read(text: str) -> configparser.ConfigParser:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    parser.read_string(text)
    return parser


def validate_text(text: str) -> list:
    """All invariant violations in a config, without running anything."""
    try:
        parser = _read(text)
    except configparser.Error as exc:
        return [f"parse error: {exc}"]
    _, issues = _build(parser)
    return issues


def parse_config(text: str) -> RunConfig:
    parser = _read(text)
    cfg, issues = _build(parser)
    if issues:
        raise ValueError("invalid configuration:\n  " + "\n  ".join(issues))
    return cfg


def load_config(path) -> RunConfig:
    with open(path) as fh:
        return parse_config(fh.read())


def config_echo(cfg: RunConfig) -> str:
    """Canonical text form of a parsed config (what the manifest records)."""
    f = cfg.functional
    inner = ", ".join(
        f"pnorm:{g.p:g}" if g.kind == "pnorm" else g.kind for g in f.groups)
    lines = [
        "[domain]",
        f"type = {cfg.domain_type}",
        f"resolution = {cfg.resolution}",
        f"width = {cfg.width:g}",
        f"height = {cfg.height:g}",
        "",
        "[partition]",
        f"group_sizes = {', '.join(str(k) for k in f.group_sizes)}",
        "",
        "[functional]",
        f"outer = {f.outer}",
        f"inner = {inner}",
    ]
    if f.outer == "powersum":
        lines.append(f"outer_powers = {', '.join(f'{p:g}' for p in f.outer_powers)}")
    s = cfg.solver
    lines += [
        "",
        "[solver]",
        f"scheme = {s.scheme}",
        f"beta0 = {s.beta0:g}",
        f"beta_multiplier = {s.beta_multiplier:g}",
        f"beta_stages = {s.beta_stages}",
        f"q = {s.q:g}",
        f"tolerance = {s.tolerance:g}",
        f"max_iterations = {s.max_iterations}",
        f"penalty_share_tol = {s.penalty_share_tol:g}",
        f"init = {s.init}",
        f"seed = {s.seed}",
    ]
    if s.checkpoint_path:
        lines.append(f"checkpoint = {s.checkpoint_path}")
    if s.projection_checkpoint:
        lines.append(f"projection_checkpoint = {s.projection_checkpoint}")
    lines += ["", "[output]", f"directory = {cfg.output_dir}", ""]
    return "\n".join(lines)


# Shipped presets.  figure-1/2/3 reproduce the three disk benchmarks; the
# smoke presets are quick sanity runs.  In figure-2 the cost is
# lam1*lam2(group 0) + lam1(group 1)^2 + lam2(group 1)^2, expressed as a
# power sum with per-group exponents (1, 2) over (product, pnorm:2) scores.
# figure-3 uses the 20th power of the max-approximating cost
# (lam1^20 + lam2^20 + lam1^20)^(1/20); dropping the outer root is a strictly
# monotone rescale, so the minimizers and the relative interface residuals
# are unchanged, and beta0 is scaled up to match the O(lam^19) coefficients.
PRESETS = {
    "figure-1": """\
[domain]
type = disk
resolution = 32

[partition]
group_sizes = 2, 2

[functional]
outer = sum
inner = sum, sum

[solver]
scheme = fixed-point
beta0 = 400
beta_multiplier = 4
beta_stages = 10
penalty_share_tol = 1e-4
seed = 7

[output]
directory = runs/figure-1
""",
    "figure-1-product": """\
[domain]
type = disk
resolution = 32

[partition]
group_sizes = 2, 2

[functional]
outer = product
inner = product, product

[solver]
scheme = fixed-point
beta0 = 4e6
beta_multiplier = 4
beta_stages = 10
penalty_share_tol = 1e-4
seed = 7

[output]
directory = runs/figure-1-product
""",
    "figure-2": """\
[domain]
type = disk
resolution = 32

[partition]
group_sizes = 2, 2

[functional]
outer = powersum
outer_powers = 1, 2
inner = product, pnorm:2

[solver]
scheme = fixed-point
beta0 = 2e4
beta_multiplier = 4
beta_stages = 10
penalty_share_tol = 1e-4
seed = 3

[output]
directory = runs/figure-2
""",
    "figure-3": """\
[domain]
type = disk
resolution = 32

[partition]
group_sizes = 2, 1

[functional]
outer = powersum
outer_powers = 20, 20
inner = pnorm:20, pnorm:20

[solver]
scheme = fixed-point
beta0 = 1e28
beta_multiplier = 4
beta_stages = 10
penalty_share_tol = 1e-4
seed = 1

[output]
directory = runs/figure-3
""",
    "square-smoke": """\
[domain]
type = square
resolution = 8

[partition]
group_sizes = 1, 1

[functional]
outer = sum
inner = sum, sum

[solver]
scheme = fixed-point
beta0 = 400
beta_multiplier = 4
beta_stages = 6
seed = 1

[output]
directory = runs/square-smoke
""",
    "disk-smoke": """\
[domain]
type = disk
resolution = 8

[partition]
group_sizes = 1, 1

[functional]
outer = sum
inner = sum, sum

[solver]
scheme = fixed-point
beta0 = 400
beta_multiplier = 4
beta_stages = 6
seed = 1

[output]
directory = runs/disk-smoke
""",
}
