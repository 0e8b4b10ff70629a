"""Experiment configuration and the stage runners behind every CLI mode."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from .core import DEFAULT_TOL, Functional, PolyrenormError, SparseVector, evaluate
from .partition import (assign_partition, default_partition_mode, derived_b_sequence,
                        leung_chain_check, nakano_bm_bound_check)
from .polytope import (FiniteBoundaryNorm, SectionSpec, certify_polyhedral_section, certify_sandwich,
                       section_ball)
from .renorm import (boundary_enumerate, compute_params, star_gap_check, system_for,
                     triple_norm, verify_claims)
from .report import Check, ReportFile, Table
from .sampling import section_directions, sphere_samples
from .spaces import SpaceDescriptor, norming_functional
from .spaces.hereditary import extreme_signed_indicators
from .spaces.nakano import nakano_modular, nakano_modular_bruteforce
from .spaces.orlicz import orlicz_dn
from .star import (PieceDecomposition, assign_psi, build_nets, declared_limits, disjointify,
                   epsilon_schedule, hk_cardinality_decomposition, limit_defect_check,
                   net_covering_report, piece_report, star_boundary)

MODES = ("eval-norm", "build-renorm", "build-boundary", "certify", "verify", "pipeline")
MAX_DECLARED_LIMITS = 8


class ConfigError(Exception):
    """Malformed or missing configuration (CLI exit code 2)."""


class StageError(Exception):
    def __init__(self, stage: str, message: str):
        super().__init__(f"{stage}: {message}")
        self.stage = stage
        self.message = message


@dataclass(frozen=True)
class ExperimentConfig:
    space: dict[str, Any]
    mode: str = "pipeline"
    q: float = 0.5
    epsilon: float = 0.1
    count: int = 200
    seed: int = 42
    section: tuple | None = None
    output: str | None = None
    b: tuple | None = None
    b_limit: float = 1.0
    eta: float = 0.0
    annotations: tuple | None = None

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}")
        if not 0 < self.q < 1:
            raise ConfigError("q must lie in (0, 1)")
        if not self.epsilon > 0:
            raise ConfigError("epsilon must be positive")
        if self.count < 1:
            raise ConfigError("samples.count must be >= 1")
        if self.eta < 0:
            raise ConfigError("eta must be >= 0")
        if not isinstance(self.space, dict) or "kind" not in self.space:
            raise ConfigError("space must be an object with a 'kind'")

    @classmethod
    def from_dict(cls, d: dict[str, Any], mode: str | None = None, seed: int | None = None,
                  output: str | None = None) -> "ExperimentConfig":
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        try:
            samples = d.get("samples", {})
            b = d.get("b")
            return cls(
                space=d["space"],
                mode=mode or d.get("mode", "pipeline"),
                q=float(d.get("q", 0.5)),
                epsilon=float(d.get("epsilon", 0.1)),
                count=int(samples.get("count", 200)),
                seed=int(seed if seed is not None else samples.get("seed", 42)),
                section=None if d.get("section") is None else tuple(json.dumps(v, sort_keys=True)
                                                                     for v in d["section"]),
                output=output or d.get("output"),
                b=None if b is None else tuple(float(v) for v in b),
                b_limit=float(d.get("b_limit", 1.0)),
                eta=float(d.get("eta", 0.0)),
                annotations=None if d.get("annotations") is None else tuple(
                    json.dumps(a, sort_keys=True) for a in d["annotations"]),
            )
        except (KeyError, TypeError, ValueError, AttributeError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"invalid config: {exc}") from exc

    @classmethod
    def load(cls, path: str | Path, **overrides) -> "ExperimentConfig":
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file not found: {p}")
        try:
            data = json.loads(p.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {p}: {exc}") from exc
        return cls.from_dict(data, **overrides)

    def echo(self) -> dict[str, Any]:
        out = asdict(self)
        out.pop("output")
        if self.section is not None:
            out["section"] = [json.loads(s) for s in self.section]
        if self.annotations is not None:
            out["annotations"] = [json.loads(a) for a in self.annotations]
        if self.b is not None:
            out["b"] = list(self.b)
        return out

    def section_spec(self, dim: int) -> SectionSpec:
        if self.section is None:
            return SectionSpec.coordinates(1, 2) if dim >= 2 else None
        basis = []
        for s in self.section:
            v = json.loads(s)
            basis.append(SparseVector.basis(int(v)) if isinstance(v, int) else SparseVector.from_json(v))
        return SectionSpec(tuple(basis))


# helpers ----------------------------------------------------------------


def _stage(name: str, fn: Callable, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except PolyrenormError as exc:
        raise StageError(name, str(exc)) from exc


def _check(report: ReportFile, stage: str, name: str, margin: float, passed: bool | None = None,
           detail: str = "") -> None:
    if not math.isfinite(margin):
        margin, detail = 0.0, (detail or "vacuous")
    report.add(Check(f"{stage}.{name}", margin >= 0 if passed is None else passed, margin, stage, detail))


def build_space(cfg: ExperimentConfig) -> SpaceDescriptor:
    return _stage("spaces", SpaceDescriptor.from_config, cfg.space)


# stages -----------------------------------------------------------------


def stage_spaces(report: ReportFile, space: SpaceDescriptor, samples: Sequence[SparseVector],
                 rng: np.random.Generator) -> None:
    tol = 1e-9
    dev = max(abs(space.norm(x) - 1.0) for x in samples)
    _check(report, "spaces", "unit_sphere", DEFAULT_TOL.eq_tol - dev)
    pairs = samples[: min(len(samples), 200)]
    hom = tri = math.inf
    for x, y in zip(pairs, pairs[1:] + pairs[:1]):
        lam = float(rng.uniform(-3, 3))
        nx, ny = space.norm(x), space.norm(y)
        hom = min(hom, tol * max(1.0, abs(lam)) - abs(space.norm(x * lam) - abs(lam) * nx))
        tri = min(tri, nx + ny + tol - space.norm(x + y))
    _check(report, "spaces", "homogeneity", hom)
    _check(report, "spaces", "triangle", tri)
    pair = dual = math.inf
    for i, x in enumerate(pairs):
        f = norming_functional(space, x)
        pair = min(pair, tol - abs(evaluate(f, x) - space.norm(x)))
        if i < 10 or space.kind == "hk":
            # exact for h_K, a lower estimate for modular spaces
            dual = min(dual, DEFAULT_TOL.eq_tol + 1.0 - space.dual_norm(f))
    _check(report, "spaces", "norming_pairing", pair)
    _check(report, "spaces", "norming_dual_ball", dual)
    if space.kind == "nakano":
        err = max(abs(nakano_modular(space.payload, x) - nakano_modular_bruteforce(space.payload, x))
                  for x in pairs)
        _check(report, "spaces", "modular_oracle", 1e-12 - err)


def stage_renorm(report: ReportFile, space: SpaceDescriptor, samples: Sequence[SparseVector],
                 cfg: ExperimentConfig, rng: np.random.Generator):
    b = list(cfg.b) if cfg.b is not None else _stage("partition", derived_b_sequence, space, cfg.q)
    params = _stage("renorm", compute_params, b, cfg.b_limit)
    mode = default_partition_mode(space)
    assignment = _stage("partition", assign_partition, space, samples, mode, cfg.q, b)
    report.tables["partition"] = Table(["n", "count", "b_hat_n", "analytic_lower_bound", "pass"],
                                       [r.as_list() for r in assignment.rows])
    _check(report, "partition", "exhaustive", 0.0 if len(assignment.labels) == len(samples) else -1.0)
    bh = [r for r in assignment.rows if r.b_hat is not None]
    _check(report, "partition", "b_hat_bound",
           min(r.b_hat - r.analytic_lower_bound + DEFAULT_TOL.eq_tol for r in bh),
           all(r.passed for r in bh))
    _check(report, "partition", "b_hat_range", min(min(r.b_hat, 1.0 + 1e-12 - r.b_hat) for r in bh))
    if space.kind == "nakano":
        worst = math.inf
        for x in samples:
            rep = _stage("partition", nakano_bm_bound_check, space, x, cfg.q)
            worst = min(worst, min(l.margin + DEFAULT_TOL.eq_tol for l in rep.links))
        _check(report, "partition", "nakano_bound_chain", worst)
    if space.kind == "orlicz":
        ok, margin = leung_contradiction(space, samples, b)
        _check(report, "partition", "leung_contradiction", margin, ok)

    sys = _stage("renorm", system_for, space)
    report.tables["renorm_params"] = Table(["n", "b_n", "c_n", "a_n"], [list(r) for r in params.table()])
    claims = _stage("renorm", verify_claims, sys, params, samples, list(assignment.labels))
    for c in claims:
        _check(report, "renorm", c.name, c.margin, c.passed)
    gap = math.inf
    gap_ok = True
    for x, n in zip(samples, assignment.labels):
        g = _stage("renorm", star_gap_check, sys, params, x, n)
        gap = min(gap, g.margin - g.threshold)
        gap_ok &= g.passed
    _check(report, "renorm", "gap", gap, gap_ok)
    pairs = samples[: min(len(samples), 100)]
    hom = tri = math.inf
    for x, y in zip(pairs, pairs[1:] + pairs[:1]):
        lam = float(rng.uniform(0.1, 3)) * (1 if rng.random() < 0.5 else -1)
        tx, ty = triple_norm(sys, params, x).value, triple_norm(sys, params, y).value
        hom = min(hom, 1e-9 * max(1, abs(lam)) - abs(triple_norm(sys, params, x * lam).value - abs(lam) * tx))
        if x + y:
            tri = min(tri, tx + ty + 1e-9 - triple_norm(sys, params, x + y).value)
    _check(report, "renorm", "homogeneity", hom)
    _check(report, "renorm", "triangle", tri)
    if sys.enumerable:
        worst = _stage("renorm", sys.check_dual_ball)
        _check(report, "renorm", "dual_ball", 1.0 + DEFAULT_TOL.eq_tol - worst)
    return sys, params, assignment


def leung_contradiction(space: SpaceDescriptor, samples: Sequence[SparseVector],
                        b: Sequence[float]) -> tuple[bool, float]:
    """Every (sample, n) must break at least one link; margin = least worst violation."""
    desc = space.payload
    d_seq = [orlicz_dn(desc, n).d_n for n in range(1, space.truncation_dim + 1)]
    ok, margin = True, math.inf
    for x in samples:
        for n in range(1, space.truncation_dim + 1):
            rep = leung_chain_check(desc, x, n, b[n - 1], d_seq[n - 1])
            ok &= not rep.all_hold
            # every link is oriented so that lhs > rhs (or >= for closing) means broken
            margin = min(margin, max(l.lhs - l.rhs for l in rep.links))
    return ok, margin


def _parse_annotations(cfg: ExperimentConfig) -> dict[Functional, set[int]] | None:
    if cfg.annotations is None:
        return None
    out: dict[Functional, set[int]] = {}
    for a in cfg.annotations:
        obj = json.loads(a)
        out.setdefault(Functional(SparseVector.from_json(obj["functional"])), set()).update(obj["pieces"])
    return out


def default_annotations(decomp: PieceDecomposition) -> dict[Functional, set[int]]:
    """Declare ``+-f`` (``f`` the first member of ``L_1``) inside the closure of ``L_0``."""
    if len(decomp.pieces) < 2 or not decomp.pieces[1] or not decomp.pieces[0]:
        return {}
    f = decomp.pieces[1][0]
    out = {f: {0}}
    if decomp.piece_of(Functional(-f)) is not None:
        out[Functional(-f)] = {0}
    return out


def limit_section(f: Functional, dim: int) -> SectionSpec:
    ks = sorted(f.support())[:2]
    if len(ks) < 2:
        k = ks[0]
        ks = [k, k + 1] if k < dim else [k - 1, k]
    return SectionSpec.coordinates(*ks)


def stage_boundary(report: ReportFile, decomp: PieceDecomposition, base_norm: Callable,
                   dual_norm: Callable, dual_bounds: Callable | None, samples: Sequence[SparseVector],
                   cfg: ExperimentConfig, dim: int):
    eps = cfg.epsilon
    ann = _parse_annotations(cfg)
    decomp = _stage("star", decomp.annotate, default_annotations(decomp) if ann is None else ann)
    nets = _stage("star", build_nets, decomp, eps, dual_norm, dual_bounds)
    report.tables["star_pieces"] = Table(["n", "size", "net_size", "eps_n"],
                                         [[r["n"], r["size"], r["net_size"], r["eps_n"]]
                                          for r in piece_report(nets, decomp)])
    # psi and eps agree with the closed forms evaluated in floating point
    pdev, lo, hi = 0.0, math.inf, math.inf
    for n, f in decomp.members():
        a = assign_psi(decomp, eps, f)
        direct = 1 + 0.5 * eps * 2.0 ** (-a.n) * (1 + 0.25 * sum(2.0 ** (-i) for i in a.I))
        pdev = max(pdev, abs(a.psi - direct))
        lo = min(lo, a.psi - 1.0)
        hi = min(hi, 1.0 + 0.75 * eps - a.psi)
    _check(report, "star", "psi_formula", 1e-15 - pdev)
    _check(report, "star", "psi_range", min(hi, lo), lo > 0 and hi >= 0)
    edev = max(abs(epsilon_schedule(eps, n) - eps * 4.0 ** (-n) / 160) for n in range(len(decomp.pieces)))
    _check(report, "star", "eps_schedule", 1e-18 - edev)
    cover = net_covering_report(nets, decomp, dual_norm)
    cmargin = min((r["eps_n"] - max(r["psi_gap"], r["distance"]) if r["covered"] else -1.0) for r in cover)
    _check(report, "star", "net_covering", cmargin, all(r["covered"] for r in cover))
    _check(report, "star", "net_separation", _separation(nets, decomp, dual_norm, dual_bounds))
    sb = _stage("star", star_boundary, nets, decomp, eps, dim)
    c1 = math.inf
    for x in samples:
        v, _ = sb(x)
        nx = base_norm(x)
        c1 = min(c1, v - nx + 1e-8 if v > nx else v - nx, (1 + eps) * nx + 1e-8 - v)
    _check(report, "star", "sandwich", c1)
    limits = declared_limits(decomp, eps)
    if limits:
        psi_m, defect = math.inf, math.inf
        ok = True
        for lim in limits[:MAX_DECLARED_LIMITS]:
            psi_m = min(psi_m, lim.psi_margin - 10 * epsilon_schedule(eps, lim.n))
            r = _stage("star", limit_defect_check, nets, decomp, eps, lim.f, lim.alpha,
                       limit_section(lim.f, dim))
            defect = min(defect, r.threshold + DEFAULT_TOL.eq_tol - r.measured)
            ok &= r.passed
        _check(report, "star", "limit_psi_gap", psi_m, psi_m >= -1e-15)
        _check(report, "star", "limit_defect", defect, ok)
    return decomp, nets, sb


def _separation(nets, decomp, dual_norm, dual_bounds) -> float:
    from .star import membership_index, psi_cell

    worst = math.inf
    for n, net in enumerate(nets.nets):
        cells: dict[int, list[Functional]] = {}
        for f in net:
            I, m = membership_index(decomp, f)
            cells.setdefault(psi_cell(nets.epsilon, I, m, n), []).append(f)
        for cell in cells.values():
            for i in range(len(cell)):
                for j in range(i + 1, len(cell)):
                    d = cell[i] - cell[j]
                    lo = dual_bounds(d)[0] if dual_bounds is not None else -math.inf
                    dist = lo if lo >= nets.eps[n] else dual_norm(d)
                    worst = min(worst, dist - nets.eps[n])
    return worst


def stage_polytope(report: ReportFile, boundary: Sequence[Functional], norm: Callable,
                   dual_norm: Callable, section: SectionSpec, cfg: ExperimentConfig,
                   rng: np.random.Generator) -> None:
    dirs = section_directions(section.dim, max(16, min(cfg.count, 200)), rng)
    rep = _stage("polytope", certify_polyhedral_section, boundary, section, dirs, norm)
    for c in rep.checks:
        _check(report, "polytope", c.name, c.margin, c.passed, c.detail)
    poly = _stage("polytope", section_ball, boundary, section)
    sand = _stage("polytope", certify_sandwich, norm, poly, cfg.eta, dual_norm)
    for c in sand.checks:
        _check(report, "polytope", c.name, c.margin, c.passed, c.detail)
    report.tables["vertices"] = Table(["index"] + [f"y{i + 1}" for i in range(section.dim)],
                                      [[i] + list(v) for i, v in enumerate(rep.vertices)])
    report.tables["section"] = Table(["dim", "facets", "vertices", "redundant", "eta"],
                                     [[section.dim, rep.facet_count, rep.vertex_count,
                                       len(rep.redundant), cfg.eta]])


# runners ----------------------------------------------------------------


def _prepare(cfg: ExperimentConfig):
    rng = np.random.default_rng(cfg.seed)
    space = build_space(cfg)
    samples = _stage("sampling", sphere_samples, space, cfg.count, rng)
    return rng, space, samples


def run_eval_norm(cfg: ExperimentConfig, report: ReportFile) -> None:
    rng, space, samples = _prepare(cfg)
    stage_spaces(report, space, samples, rng)
    rows = []
    for i, x in enumerate(samples[: min(len(samples), 50)]):
        f = norming_functional(space, x)
        rows.append([i, x.to_text(), space.norm(x), f.to_text()])
    report.tables["norms"] = Table(["index", "x", "norm", "norming_functional"], rows)


def run_build_renorm(cfg: ExperimentConfig, report: ReportFile) -> None:
    rng, space, samples = _prepare(cfg)
    stage_renorm(report, space, samples, cfg, rng)


def _hk_only(space: SpaceDescriptor, stage: str) -> None:
    if space.kind != "hk":
        raise StageError(stage, "pieces not enumerable: a finite boundary is only available for h_K spaces")


def run_build_boundary(cfg: ExperimentConfig, report: ReportFile) -> None:
    rng, space, samples = _prepare(cfg)
    _hk_only(space, "star")
    decomp = hk_cardinality_decomposition(space.payload)
    stage_boundary(report, decomp, space.norm, space.dual_norm, space.dual_bounds, samples, cfg,
                   space.truncation_dim)


def run_certify(cfg: ExperimentConfig, report: ReportFile) -> None:
    rng, space, samples = _prepare(cfg)
    _hk_only(space, "polytope")
    section = _stage("polytope", cfg.section_spec, space.truncation_dim)
    stage_polytope(report, extreme_signed_indicators(space.payload), space.norm, space.dual_norm,
                   section, cfg, rng)


def run_pipeline(cfg: ExperimentConfig, report: ReportFile, with_spaces: bool = False) -> None:
    rng, space, samples = _prepare(cfg)
    if with_spaces:
        stage_spaces(report, space, samples, rng)
    sys, params, _ = stage_renorm(report, space, samples, cfg, rng)
    if not sys.enumerable:
        _check(report, "star", "skipped", 0.0, True, "pieces not enumerable for this space")
        return
    F = _stage("renorm", boundary_enumerate, sys, params, len(sys))
    tn = FiniteBoundaryNorm(tuple(F), space.truncation_dim)
    agree = max(abs(tn(x) - triple_norm(sys, params, x).value) for x in samples)
    _check(report, "renorm", "boundary_attainment", 1e-9 - agree)
    by_piece: dict[int, list[Functional]] = {}
    for f in F:
        by_piece.setdefault(f.piece_tag, []).append(f)
    decomp = disjointify([by_piece[n] for n in sorted(by_piece)])
    decomp, nets, sb = stage_boundary(report, decomp, tn, tn.dual_norm, tn.dual_bounds, samples, cfg,
                                      space.truncation_dim)
    section = _stage("polytope", cfg.section_spec, space.truncation_dim)
    D = sb.scaled()
    dn = FiniteBoundaryNorm(tuple(D), space.truncation_dim)
    stage_polytope(report, D, lambda x: sb(x)[0], dn.dual_norm, section, cfg, rng)


def run_verify(cfg: ExperimentConfig, report: ReportFile) -> None:
    try:
        SpaceDescriptor.from_config(cfg.space)
    except PolyrenormError as exc:
        msg = str(exc)
        name = "hereditary_closure" if "hereditary" in msg else "construction"
        _check(report, "spaces", name, -1.0, False, msg)
        return
    if cfg.space.get("kind") == "hk":
        _check(report, "spaces", "hereditary_closure", 0.0, True)
    run_pipeline(cfg, report, with_spaces=True)


RUNNERS = {
    "eval-norm": run_eval_norm,
    "build-renorm": run_build_renorm,
    "build-boundary": run_build_boundary,
    "certify": run_certify,
    "verify": run_verify,
    "pipeline": run_pipeline,
}


def run(cfg: ExperimentConfig) -> ReportFile:
    """Run ``cfg.mode``; stage errors become a failed ``<stage>.error`` record."""
    report = ReportFile(mode=cfg.mode, params=cfg.echo(), seed=cfg.seed)
    try:
        RUNNERS[cfg.mode](cfg, report)
    except StageError as exc:
        report.add(Check(f"{exc.stage}.error", False, -1.0, exc.stage, exc.message))
    return report
