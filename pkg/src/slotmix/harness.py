"""Experiment sweeps, Slot Mixing Time assembly and log-log exponent fitting.

A sweep walks the grid (n, r, gamma, beta, seed) in config order. Everything
that does not depend on beta (graph, spectrum, mixing) is computed once per
(n, r, gamma, seed) and shared by the beta rows. Failures inside one instance
(a disconnected graph, say) are written into that row's ``error`` column;
the sweep itself keeps going.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np
from scipy import stats

from .errors import ConfigError, InvalidArgument, SlotmixError
from .geometry import sample_points
from .mac import RadioConfig, greedy_schedule, guard_zone_lower_bound, search_lattice
from .spectral import (
    BRUTEFORCE_LIMIT,
    WalkMatrix,
    conductance_bruteforce,
    conductance_halfspace,
    empirical_mixing_time,
    second_eigenvalue,
)
from .topology import (
    DEFAULT_ETA,
    build_cluster_graph,
    build_disk_graph,
    build_longrange_graph,
    critical_radius,
    degree_stats,
    is_connected,
)

__all__ = [
    "ExperimentConfig",
    "ScalingRecord",
    "SlopeFit",
    "slot_mixing_time",
    "mixing_proxy",
    "rate_tradeoff",
    "rate_tradeoff_curve",
    "rate_from_beta",
    "parse_config",
    "load_config",
    "run_sweep",
    "fit_slope",
    "export",
    "read_records",
    "audit_records",
    "RECORD_COLUMNS",
]

EMPIRICAL_MAX_N = 300
OUTPUT_DIR_ENV = "SLOTMIX_OUTPUT_DIR"


def slot_mixing_time(tmix: float, tstar: int) -> float:
    """Iterations to mix times slots per iteration."""
    if tmix < 0 or tstar < 0:
        raise InvalidArgument("mixing time and schedule length must be nonnegative")
    return tmix * tstar


def mixing_proxy(gap: float, n: int, delta: float = 1.0) -> float:
    """ln(n^(1+delta)) / gap: the upper mixing bound with eps = n^-delta."""
    if not (0.0 < gap <= 1.0):
        raise InvalidArgument(f"spectral gap must lie in (0, 1], got {gap}")
    return (1.0 + delta) * math.log(n) / gap


def rate_from_beta(beta: float) -> float:
    return math.log1p(beta)


def rate_tradeoff(R: float, d: int, alpha: float) -> float:
    """exp(R d / alpha) / R: slots-per-nat penalty of transmitting at rate R."""
    if R <= 0:
        raise InvalidArgument("rate must be positive")
    if not alpha > d:
        raise InvalidArgument("alpha must exceed d")
    return math.exp(R * d / alpha) / R


def rate_tradeoff_curve(rates, d: int, alpha: float) -> tuple[np.ndarray, np.ndarray]:
    rates = np.asarray(rates, dtype=np.float64)
    if np.any(rates <= 0):
        raise InvalidArgument("rates must be positive")
    if not alpha > d:
        raise InvalidArgument("alpha must exceed d")
    return rates, np.exp(rates * d / alpha) / rates


# ---------------------------------------------------------------------------
# configuration

KINDS = ("short", "long", "cluster")
MIXING_MODES = ("auto", "empirical", "proxy")


@dataclass
class ExperimentConfig:
    dimension: int
    n: list[int]
    seeds: list[int]
    r: list[float] | None = None
    r_multiples: list[float] | None = None
    gamma: list[float] | None = None
    eta: float = DEFAULT_ETA
    rho: int | None = None
    alpha: float = 4.0
    beta: list[float] = field(default_factory=lambda: [1.0])
    delta: float = 1.0
    eps_policy: str = "polynomial"
    delta_prime: float = 0.01
    kind: str = "short"
    mixing_mode: str = "auto"
    greedy: bool = True
    delta2: float = 0.1
    workers: int = 1
    output: str | None = None

    def __post_init__(self):
        for name in ("r", "r_multiples", "gamma", "beta"):
            val = getattr(self, name)
            if val is not None:
                setattr(self, name, [float(v) for v in val])
        for name in ("eta", "alpha", "delta", "delta_prime", "delta2"):
            setattr(self, name, float(getattr(self, name)))

    def validate(self):
        d = self.dimension
        if d < 1:
            raise ConfigError("dimension must be >= 1")
        if not self.n or any(v < 2 for v in self.n):
            raise ConfigError("n entries must be >= 2")
        if (self.r is None) == (self.r_multiples is None):
            raise ConfigError("give exactly one of r or r_multiples")
        if self.kind not in KINDS:
            raise ConfigError(f"kind must be one of {KINDS}")
        if self.mixing_mode not in MIXING_MODES:
            raise ConfigError(f"mixing_mode must be one of {MIXING_MODES}")
        if self.eps_policy not in ("polynomial", "exponential"):
            raise ConfigError("eps_policy must be polynomial or exponential")
        if not self.alpha > d:
            raise ConfigError(f"alpha={self.alpha} must exceed dimension {d}")
        if any(b <= 0 for b in self.beta):
            raise ConfigError("beta entries must be positive")
        if self.kind != "short":
            if not self.gamma:
                raise ConfigError(f"kind={self.kind} needs gamma")
            if any(not (0.0 < gm < 1.0) for gm in self.gamma):
                raise ConfigError("gamma entries must lie in (0, 1)")
        if self.kind == "cluster" and (self.rho is None or self.rho < 0):
            raise ConfigError("cluster kind needs rho >= 0")
        for n in self.n:
            rc = critical_radius(n, d)
            for r in self.radii(n):
                if not r > rc:
                    raise ConfigError(f"r={r:.6g} is not supercritical for n={n} (r_c={rc:.6g})")
                if r > 0.5:
                    raise ConfigError(f"r={r:.6g} exceeds 1/2")
        return self

    def radii(self, n: int) -> list[float]:
        if self.r is not None:
            return list(self.r)
        rc = critical_radius(n, self.dimension)
        return [m * rc for m in self.r_multiples]

    def epsilon(self, n: int) -> float:
        if self.eps_policy == "polynomial":
            return n ** -self.delta
        return math.exp(-self.delta_prime * n)


_LIST_KEYS = {"n", "seeds", "r", "r_multiples", "gamma", "beta"}


def _scalar(text: str):
    low = text.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text.strip("\"'")


def parse_config(text: str) -> ExperimentConfig:
    """Parse the flat ``key = value`` format.

    Grammar: one assignment per line; ``#`` starts a comment; a value is a
    scalar or a comma-separated list, optionally in square brackets. List
    keys (n, seeds, r, r_multiples, gamma, beta) always become lists; a range
    may be written ``start..stop`` for integer seeds.
    """
    known = {f.name for f in fields(ExperimentConfig)}
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, _, val = (part.strip() for part in line.partition("="))
        if key not in known:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        val = val.strip("[]").strip()
        items = [v.strip() for v in val.split(",") if v.strip()]
        parsed = []
        for item in items:
            if ".." in item and key == "seeds":
                a, b = item.split("..")
                parsed.extend(range(int(a), int(b) + 1))
            else:
                parsed.append(_scalar(item))
        if key in _LIST_KEYS:
            values[key] = parsed
        elif len(parsed) == 1:
            values[key] = parsed[0]
        elif not parsed and key in ("rho", "output"):
            values[key] = None
        else:
            raise ConfigError(f"line {lineno}: {key} takes a single value")
    for req in ("dimension", "n", "seeds"):
        if req not in values:
            raise ConfigError(f"missing required key {req!r}")
    if "rho" in values and isinstance(values["rho"], str) and values["rho"] == "all":
        values["rho"] = 10**9
    try:
        cfg = ExperimentConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg.validate()


def load_config(path) -> ExperimentConfig:
    return parse_config(Path(path).read_text())


# ---------------------------------------------------------------------------
# records

@dataclass
class ScalingRecord:
    seed: int
    n: int
    d: int
    kind: str
    r: float
    r_over_rc: float
    gamma: float | None
    s: float | None
    eta: float | None
    rho: int | None
    alpha: float
    beta: float
    epsilon: float
    connected: bool | None = None
    d_min: int | None = None
    d_max: int | None = None
    mean_degree: float | None = None
    mu2: float | None = None
    gap: float | None = None
    h_halfspace: float | None = None
    h_bruteforce: float | None = None
    tmix: float | None = None
    tmix_mode: str | None = None
    theta_star: float | None = None
    link_length: float | None = None
    schedule_length_lattice: int | None = None
    schedule_length_greedy: int | None = None
    guard_zone_lb: int | None = None
    slot_mixing_time: float | None = None
    error: str | None = None

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


RECORD_COLUMNS = [f.name for f in fields(ScalingRecord)]


@dataclass(frozen=True)
class SlopeFit:
    predictor: str
    response: str
    exponent: float
    stderr: float
    r_squared: float
    n_points: int
    intercept: float

    def interval(self, level: float = 0.95) -> tuple[float, float]:
        t = stats.t.ppf(0.5 + level / 2.0, max(self.n_points - 2, 1))
        return self.exponent - t * self.stderr, self.exponent + t * self.stderr


def _instance_rows(job):
    cfg, n, r, gamma, seed = job
    d = cfg.dimension
    eps = cfg.epsilon(n)
    rc = critical_radius(n, d)
    long_kind = cfg.kind != "short"
    base = dict(
        seed=seed, n=n, d=d, kind=cfg.kind, r=r, r_over_rc=r / rc,
        gamma=gamma if long_kind else None,
        s=r**gamma if long_kind else None,
        eta=cfg.eta if long_kind else None,
        rho=cfg.rho if cfg.kind == "cluster" else None,
        alpha=cfg.alpha, epsilon=eps,
    )
    rows = [ScalingRecord(beta=b, **base) for b in cfg.beta]

    def fail(msg):
        for row in rows:
            row.error = msg
        return rows

    try:
        pts = sample_points(n, d, seed)
        if cfg.kind == "short":
            g = build_disk_graph(pts, r)
        elif cfg.kind == "long":
            g = build_longrange_graph(pts, r, gamma, cfg.eta)
        else:
            g = build_cluster_graph(pts, r, gamma, cfg.eta, cfg.rho)
    except SlotmixError as exc:
        return fail(f"construction: {exc}")
    dmin, dmax, mean, _ = degree_stats(g)
    connected = is_connected(g)
    shared = dict(connected=connected, d_min=dmin, d_max=dmax, mean_degree=mean)
    if connected:
        try:
            w = WalkMatrix(g)
            mu2 = second_eigenvalue(w)
            gap = 1.0 - mu2
            shared.update(mu2=mu2, gap=gap, h_halfspace=conductance_halfspace(w, pts).value)
            if n <= BRUTEFORCE_LIMIT:
                shared["h_bruteforce"] = conductance_bruteforce(w)[0]
            mode = cfg.mixing_mode
            if mode == "auto":
                mode = "empirical" if n <= EMPIRICAL_MAX_N else "proxy"
            if mode == "empirical":
                shared.update(tmix=float(empirical_mixing_time(w, eps)), tmix_mode="empirical")
            else:
                tmix = (math.log(n) - math.log(eps)) / gap
                shared.update(tmix=tmix, tmix_mode="proxy")
        except SlotmixError as exc:
            shared["error"] = f"spectral: {exc}"
    else:
        shared["error"] = "disconnected"
    for row in rows:
        for k, v in shared.items():
            setattr(row, k, v)
        try:
            radio = RadioConfig(cfg.alpha, row.beta)
            theta, sched = search_lattice(pts, g, radio)
            row.theta_star = theta
            row.link_length = sched.meta["link_length"]
            row.schedule_length_lattice = sched.length
            row.guard_zone_lb = guard_zone_lower_bound(pts, g, radio, cfg.delta2)
            if cfg.greedy:
                row.schedule_length_greedy = greedy_schedule(pts, g, radio, seed).length
            if row.tmix is not None:
                row.slot_mixing_time = slot_mixing_time(row.tmix, row.schedule_length_lattice)
        except SlotmixError as exc:
            row.error = (row.error + "; " if row.error else "") + f"schedule: {exc}"
    return rows


def _jobs(cfg: ExperimentConfig):
    gammas = cfg.gamma if cfg.kind != "short" else [None]
    for n in cfg.n:
        for r in cfg.radii(n):
            for gamma in gammas:
                for seed in cfg.seeds:
                    yield (cfg, n, r, gamma, seed)


def run_sweep(cfg: ExperimentConfig) -> list[ScalingRecord]:
    """One record per (n, r, gamma, beta, seed), in config order."""
    cfg.validate()
    jobs = list(_jobs(cfg))
    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            grouped = list(pool.map(_instance_rows, jobs))
    else:
        grouped = [_instance_rows(job) for job in jobs]
    # beta is the innermost-but-one axis in config order: n, r, gamma, beta, seed
    records = []
    i = 0
    gammas = cfg.gamma if cfg.kind != "short" else [None]
    for n in cfg.n:
        for _r in cfg.radii(n):
            for _g in gammas:
                block = grouped[i : i + len(cfg.seeds)]
                i += len(cfg.seeds)
                for b_idx in range(len(cfg.beta)):
                    records.extend(rows[b_idx] for rows in block)
    return records


def _get(rec, name):
    return rec[name] if isinstance(rec, dict) else getattr(rec, name)


def _fit(xs, ys, x_field, y_field) -> SlopeFit:
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if np.unique(x).size < 3:
        raise InvalidArgument(f"need at least 3 distinct {x_field} values, got {np.unique(x).size}")
    if np.any(x <= 0) or np.any(y <= 0):
        raise InvalidArgument("log-log fit needs positive data")
    lx, ly = np.log(x), np.log(y)
    res = stats.linregress(lx, ly)
    slope, stderr = float(res.slope), float(res.stderr)
    r2 = float(res.rvalue**2) if np.ptp(ly) > 0 else 1.0
    if np.ptp(ly) == 0:
        slope, stderr = 0.0, 0.0
    return SlopeFit(x_field, y_field, slope, stderr, r2, int(x.size), float(res.intercept))


def fit_slope(records, x_field: str, y_field: str, group_by=None):
    """Least-squares slope of ln(y) against ln(x).

    Rows with a missing or nonpositive y are skipped. With ``group_by`` (a
    field name or tuple of names) a dict of fits keyed by group is returned.
    """
    usable = [
        rec for rec in records
        if _get(rec, x_field) is not None and _get(rec, y_field) is not None and _get(rec, y_field) > 0
    ]
    if group_by is None:
        return _fit([_get(r, x_field) for r in usable], [_get(r, y_field) for r in usable], x_field, y_field)
    keys = (group_by,) if isinstance(group_by, str) else tuple(group_by)
    groups: dict = {}
    for rec in usable:
        key = tuple(_get(rec, k) for k in keys)
        groups.setdefault(key if len(key) > 1 else key[0], []).append(rec)
    return {
        key: _fit([_get(r, x_field) for r in rows], [_get(r, y_field) for r in rows], x_field, y_field)
        for key, rows in groups.items()
    }


# ---------------------------------------------------------------------------
# serialisation

def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def _output_path(path) -> Path:
    path = Path(path)
    override = os.environ.get(OUTPUT_DIR_ENV)
    if override and not path.is_absolute():
        path = Path(override) / path
    return path


def export(records, path, plot: tuple[str, str] | None = None, metadata: dict | None = None) -> Path:
    """Write records as CSV in RECORD_COLUMNS order.

    Timestamps and other run metadata go to a ``.meta.json`` sidecar so the
    CSV itself is byte-identical across reruns. ``plot=(x, y)`` also writes a
    gnuplot script drawing y against x on log-log axes.
    """
    path = _output_path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(RECORD_COLUMNS)
        for rec in records:
            row = rec.as_dict() if isinstance(rec, ScalingRecord) else rec
            out.writerow([_fmt(row.get(c)) for c in RECORD_COLUMNS])
    meta = {"written": time.strftime("%Y-%m-%dT%H:%M:%S"), "rows": len(records)}
    meta.update(metadata or {})
    Path(str(path) + ".meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    if plot is not None:
        x, y = plot
        xi, yi = RECORD_COLUMNS.index(x) + 1, RECORD_COLUMNS.index(y) + 1
        script = (
            "set datafile separator ','\n"
            "set logscale xy\n"
            f"set xlabel '{x}'\nset ylabel '{y}'\n"
            f"plot '{path.name}' every ::1 using {xi}:{yi} with points title '{y}'\n"
        )
        path.with_suffix(".gp").write_text(script)
    return path


_FIELD_TYPES = {f.name: f.type for f in fields(ScalingRecord)}


def _parse_cell(name: str, text: str):
    if text == "":
        return None
    typ = str(_FIELD_TYPES[name])
    if typ.startswith("bool"):
        return text == "true"
    if typ.startswith("int"):
        return int(text)
    if typ.startswith("float"):
        return float(text)
    return text


def read_records(path) -> list[ScalingRecord]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != RECORD_COLUMNS:
            raise InvalidArgument("unexpected CSV header")
        return [ScalingRecord(**{k: _parse_cell(k, v) for k, v in zip(header, row)}) for row in reader]


def audit_records(records) -> list[str]:
    """Cross-field invariant violations in a sweep's output (empty list = clean)."""
    problems = []
    for i, rec in enumerate(records):
        tag = f"row {i} (seed={rec.seed}, n={rec.n}, r={rec.r:.6g}, beta={rec.beta})"
        if rec.slot_mixing_time is not None:
            if rec.slot_mixing_time != rec.tmix * rec.schedule_length_lattice:
                problems.append(f"{tag}: slot mixing time is not tmix * schedule length")
        if rec.guard_zone_lb is not None and rec.schedule_length_lattice is not None:
            if rec.guard_zone_lb > rec.schedule_length_lattice:
                problems.append(f"{tag}: guard-zone bound exceeds lattice schedule length")
        if rec.h_bruteforce is not None and rec.gap is not None:
            h = rec.h_bruteforce
            if not (h * h / 2.0 <= rec.gap + 1e-9 and rec.gap <= 2.0 * h + 1e-9):
                problems.append(f"{tag}: Cheeger sandwich violated")
        if rec.kind == "short" and (rec.gamma is not None or rec.s is not None):
            problems.append(f"{tag}: short-range row carries gamma")
        if rec.kind != "short" and (rec.gamma is None or rec.s is None):
            problems.append(f"{tag}: long-range row lacks gamma or s")
    return problems
