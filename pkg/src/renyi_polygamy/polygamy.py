"""Checks of the polygamy inequalities with bound-aware verdicts, and campaigns over random states.

Every check compares a left side against a right side. Each side is either
computed exactly or known only as a one-sided bound (a maximization that
returns a feasible decomposition gives a lower bound, a closed-form ceiling
gives an upper bound). ``verdict`` turns the sides and the margin rhs - lhs
into one of:

* ``holds``: margin >= -tol and the sides prove lhs <= rhs,
* ``consistent``: margin >= -tol but a side is a bound pointing the wrong way,
* ``VIOLATION``: margin < -tol and the sides prove lhs > rhs,
* ``inconclusive``: margin < -tol but a bound could close the gap.
"""

from __future__ import annotations

import json
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from . import linalg, roof
from .measures import (
    ALPHA_MAX,
    ALPHA_MIN,
    AlphaRangeError,
    MuParam,
    alpha_value,
    concurrence_pure_bipartition,
    f_alpha,
    renyi_entropy,
    require_formula_range,
)
from .states import DensityMatrix, PureState, derive_seed, ginibre_random_mixed, haar_random_pure

log = logging.getLogger(__name__)

EXACT_TOL = 1e-9
OPT_TOL = 1e-6
ZERO_BASE = 1e-12
LEMMA_SLACK = 1e-12
SIDES = ("exact", "lower", "upper")
VERDICTS = ("holds", "consistent", "VIOLATION", "inconclusive")
INEQUALITIES = ("eq1", "eq2", "eq8", "lemma1", "eq19pure", "eq19mixed", "eq24")
MIXED_MAX_RANK = 4


class ConfigError(ValueError):
    """Invalid campaign configuration; ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


def verdict(lhs_side: str, rhs_side: str, margin: float, tol: float) -> str:
    """Decide lhs <= rhs from margin = rhs - lhs and what each side is known to be.

    An exact or upper-bounded lhs below an exact or lower-bounded rhs proves the
    inequality; an exact or lower-bounded lhs above an exact or upper-bounded
    rhs refutes it. Anything else can only be consistent or inconclusive.
    """
    if lhs_side not in SIDES or rhs_side not in SIDES:
        raise ValueError(f"bound sides must be in {SIDES}, got {lhs_side!r}, {rhs_side!r}")
    if margin >= -tol:
        proven = lhs_side in ("exact", "upper") and rhs_side in ("exact", "lower")
        return "holds" if proven else "consistent"
    refuted = lhs_side in ("exact", "lower") and rhs_side in ("exact", "upper")
    return "VIOLATION" if refuted else "inconclusive"


@dataclass(frozen=True)
class PartitionSpec:
    """The cut focus | partners; each (focus, partner) pair is a two-qubit subsystem."""

    focus: int
    partners: tuple

    def __post_init__(self):
        object.__setattr__(self, "partners", tuple(int(p) for p in self.partners))
        idx = (int(self.focus),) + self.partners
        if len(set(idx)) != len(idx):
            raise ValueError(f"partition indices must be distinct, got {idx}")
        if min(idx) < 0:
            raise ValueError(f"negative qubit index in {idx}")
        if not self.partners:
            raise ValueError("partition needs at least one partner")

    @classmethod
    def default(cls, n_qubits: int) -> "PartitionSpec":
        return cls(0, tuple(range(1, n_qubits)))

    def validate(self, n_qubits: int) -> "PartitionSpec":
        if max((self.focus,) + self.partners) >= n_qubits:
            raise ValueError(f"partition {self} does not fit {n_qubits} qubits")
        return self

    def label(self) -> str:
        return f"{self.focus}|{''.join(str(p) for p in self.partners)}"


@dataclass
class InequalityReport:
    inequality: str
    state: str
    alpha: float | None
    mu: float | None
    lhs: float
    rhs: float
    lhs_side: str
    rhs_side: str
    margin: float
    tolerance: float
    verdict: str
    partition: str = ""
    rhs_terms: list = field(default_factory=list)
    note: str = ""

    def to_dict(self) -> dict:
        return asdict(self)


def _report(inequality, state, alpha, mu, lhs, rhs, lhs_side, rhs_side, tol, partition="", terms=(), note="") -> InequalityReport:
    lhs, rhs = float(lhs), float(rhs)
    margin = rhs - lhs
    return InequalityReport(
        inequality, state, alpha, mu, lhs, rhs, lhs_side, rhs_side, margin, tol,
        verdict(lhs_side, rhs_side, margin, tol), partition, [float(t) for t in terms], note,
    )


def _pair_state(state, n: int, focus: int, partner: int) -> DensityMatrix:
    """Two-qubit reduction with the focus qubit first."""
    red = state.reduced([focus, partner])
    if partner < focus:
        red = linalg.permute_qubits(red, 2, [1, 0])
    return DensityMatrix(2, 0.5 * (red + red.conj().T))


def _part(part, n: int) -> PartitionSpec:
    return (part or PartitionSpec.default(n)).validate(n)


def _require_lemma_range(alpha) -> float:
    a = alpha_value(alpha)
    if not ALPHA_MIN - LEMMA_SLACK <= a <= ALPHA_MAX + LEMMA_SLACK:
        raise AlphaRangeError(f"alpha={a} is outside the lemma range [{ALPHA_MIN:.17g}, {ALPHA_MAX:.17g}]")
    return a


def check_eq1_eq2(psi: PureState, part: PartitionSpec | None = None, state: str = "") -> InequalityReport:
    """C^2(focus | rest) <= sum over partners of CoA(focus, partner)^2, both sides exact.

    Reported as ``eq1`` for three qubits and ``eq2`` otherwise.
    """
    n = psi.n_qubits
    if not 3 <= n <= 6:
        raise ValueError(f"needs 3 to 6 qubits, got {n}")
    part = _part(part, n)
    lhs = concurrence_pure_bipartition(psi, [part.focus]) ** 2
    terms = [roof.coa_exact(_pair_state(psi, n, part.focus, p)) ** 2 for p in part.partners]
    name = "eq1" if n == 3 else "eq2"
    return _report(name, state, None, None, lhs, sum(terms), "exact", "exact", EXACT_TOL, part.label(), terms)


def _eq8_alpha(alpha) -> float:
    a = require_formula_range(alpha)
    if not a < 1.0:
        raise AlphaRangeError(f"the entropy ceiling needs alpha < 1, got {a}")
    return a


def eq8_ceiling(rho, alpha) -> float:
    rho = roof.as_density(rho)
    return min(renyi_entropy(rho.reduced([0]), alpha), renyi_entropy(rho.reduced([1]), alpha))


def check_eq8(rho, alpha, budget=None, seed: int = 0, state: str = "", result: roof.RoofResult | None = None) -> InequalityReport:
    """REoA (lower bound) <= min{S(rho_A), S(rho_B)} (exact) for alpha < 1."""
    a = _eq8_alpha(alpha)
    result = result or roof.reoa(rho, a, budget, seed)
    return _report("eq8", state, a, None, result.value, eq8_ceiling(rho, a), "lower", "exact", OPT_TOL)


def check_lemma1(rho, alpha, budget=None, seed: int = 0, state: str = "", result: roof.RoofResult | None = None) -> InequalityReport:
    """f(CoA) (exact) <= REoA (lower bound).

    A shortfall can only mean the maximization stopped early, so it is
    reported as inconclusive with a note rather than as a violation.
    """
    a = require_formula_range(alpha)
    result = result or roof.reoa(rho, a, budget, seed)
    rep = _report("lemma1", state, a, None, roof.lemma1_floor(rho, a), result.value, "exact", "lower", OPT_TOL)
    if rep.verdict == "inconclusive":
        rep.note = "optimizer shortfall"
    return rep


def check_eq19_pure(psi: PureState, part: PartitionSpec | None, alpha, mode: str = "certified", budget=None, seed: int = 0, state: str = "") -> InequalityReport:
    """S(focus) <= sum of pair REoA values for a pure global state.

    ``certified`` replaces each REoA by its exact floor f(CoA), which proves
    the inequality whenever the margin is non-negative. ``optimized`` uses
    REoA lower bounds from the roof optimizer instead.
    """
    n = psi.n_qubits
    part = _part(part, n)
    if mode == "certified":
        a = _require_lemma_range(alpha)
    elif mode == "optimized":
        a = require_formula_range(alpha)
    else:
        raise ValueError(f"mode must be 'certified' or 'optimized', got {mode!r}")
    lhs = renyi_entropy(psi.reduced([part.focus]), a)
    pairs = [_pair_state(psi, n, part.focus, p) for p in part.partners]
    if mode == "certified":
        terms, tol = [roof.lemma1_floor(r, a) for r in pairs], EXACT_TOL
    else:
        terms = [roof.reoa(r, a, budget, derive_seed(seed, k)).value for k, r in enumerate(pairs)]
        tol = OPT_TOL
    return _report("eq19pure", state, a, None, lhs, sum(terms), "exact", "lower", tol, part.label(), terms, mode)


def eq20_lhs_gap(psi: PureState, focus: int, alpha) -> float:
    """|S(focus) - f(C(focus | rest))|, which vanishes for every pure state."""
    a = require_formula_range(alpha)
    return abs(renyi_entropy(psi.reduced([focus]), a) - f_alpha(concurrence_pure_bipartition(psi, [focus]), a))


def check_eq19_mixed(rho, part: PartitionSpec | None, alpha, budget=None, seed: int = 0, state: str = "") -> InequalityReport:
    """REoA(focus | rest) <= sum of pair REoA values for a three-qubit mixed state.

    The left side is a lower bound from the roof optimizer over global
    decompositions. For alpha < 1 the right side is the sum of the entropy
    ceilings of the pairs (an upper bound), so a gap is a conclusive violation;
    for alpha >= 1 it is the sum of pair REoA lower bounds, which can only be
    consistent or inconclusive.
    """
    rho = roof.as_density(rho)
    n = rho.n_qubits
    if n != 3:
        raise ValueError(f"mixed-state check supports 3 qubits, got {n}")
    part = _part(part, n)
    a = _require_lemma_range(alpha)
    rank = rho.rank()
    if rank > MIXED_MAX_RANK:
        raise ValueError(f"mixed-state check supports rank <= {MIXED_MAX_RANK}, got {rank}")
    if rank == 1:
        w, v = linalg.herm_eig(rho.matrix)
        rep = check_eq19_pure(PureState(n, v[:, 0]), part, a, "certified", budget, seed, state)
        rep.inequality, rep.note = "eq19mixed", "rank 1: certified pure check"
        return rep

    order = [part.focus] + [q for q in range(n) if q != part.focus]
    moved = DensityMatrix(n, linalg.permute_qubits(rho.matrix, n, order))
    lhs = roof.optimize_roof(moved, roof.renyi_objective(a), "max", budget, seed).value
    pairs = [_pair_state(rho, n, part.focus, p) for p in part.partners]
    if a < 1.0:
        terms, side, note = [eq8_ceiling(r, a) for r in pairs], "upper", "entropy ceilings"
    else:
        terms = [roof.reoa(r, a, budget, derive_seed(seed, k + 1)).value for k, r in enumerate(pairs)]
        side, note = "lower", "pair lower bounds"
    return _report("eq19mixed", state, a, None, lhs, sum(terms), "lower", side, OPT_TOL, part.label(), terms, note)


def _power(x: float, mu: float) -> float:
    # 0^0 = 0: a vanishing term stays vanishing at mu = 0
    if mu == 0.0:
        return 0.0 if abs(x) <= ZERO_BASE else 1.0
    return max(x, 0.0) ** mu


def power_report(base: InequalityReport, mu) -> InequalityReport:
    """Raise both sides of a pure or mixed polygamy report term by term to the power mu.

    x -> x^mu is monotone, so lower and upper bounds keep their sides.
    """
    m = MuParam(mu).mu
    terms = [_power(t, m) for t in base.rhs_terms]
    return _report(
        "eq24", base.state, base.alpha, m, _power(base.lhs, m), sum(terms),
        base.lhs_side, base.rhs_side, base.tolerance, base.partition, terms, base.note,
    )


def check_eq24(state_obj, part, alpha, mu, budget=None, seed: int = 0, mode: str = "certified", state: str = "") -> InequalityReport:
    """[REoA(focus | rest)]^mu <= sum of [pair REoA]^mu for 0 <= mu <= 1."""
    MuParam(mu)
    if isinstance(state_obj, PureState):
        base = check_eq19_pure(state_obj, part, alpha, mode, budget, seed, state)
    else:
        base = check_eq19_mixed(state_obj, part, alpha, budget, seed, state)
    return power_report(base, mu)


# -- campaigns -----------------------------------------------------------------


@dataclass(frozen=True)
class CampaignConfig:
    seed: int = 0
    inequalities: tuple = ("eq2", "eq8", "lemma1", "eq19pure", "eq19mixed", "eq24")
    pure: int = 0
    two_qubit: int = 0
    mixed: int = 0
    n_qubits: tuple = (3, 4)
    ranks: tuple = (2, 3, 4)
    mixed_ranks: tuple = (2,)
    alphas: tuple = ()
    mus: tuple = (0.0, 0.25, 0.5, 0.75, 1.0)
    eq19_mode: str = "certified"
    budget: roof.OptBudget = roof.OptBudget()

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "inequalities": list(self.inequalities),
            "counts": {"pure": self.pure, "two_qubit": self.two_qubit, "mixed": self.mixed},
            "n_qubits": list(self.n_qubits),
            "ranks": list(self.ranks),
            "mixed_ranks": list(self.mixed_ranks),
            "alphas": list(self.alphas),
            "mus": list(self.mus),
            "eq19_mode": self.eq19_mode,
            "budget": asdict(self.budget),
        }


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _is_num(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def _int_list(data, key, lo, hi) -> tuple:
    vals = data[key]
    if not isinstance(vals, list):
        raise ConfigError(key, "expected a list of integers")
    for i, v in enumerate(vals):
        if not _is_int(v) or not lo <= v <= hi:
            raise ConfigError(f"{key}[{i}]", f"expected an integer in [{lo}, {hi}], got {v!r}")
    return tuple(vals)


def _num_list(data, key) -> tuple:
    vals = data[key]
    if not isinstance(vals, list):
        raise ConfigError(key, "expected a list of numbers")
    for i, v in enumerate(vals):
        if not _is_num(v):
            raise ConfigError(f"{key}[{i}]", f"expected a finite number, got {v!r}")
    return tuple(float(v) for v in vals)


def config_from_dict(data) -> CampaignConfig:
    """Validate a parsed JSON campaign description; errors carry a field path."""
    if not isinstance(data, dict):
        raise ConfigError("<root>", "expected a JSON object")
    known = {"seed", "inequalities", "counts", "n_qubits", "ranks", "mixed_ranks", "alphas", "mus", "eq19_mode", "budget"}
    for key in data:
        if key not in known:
            raise ConfigError(key, "unknown field")
    base = CampaignConfig()
    kw = {}
    if "seed" in data:
        if not _is_int(data["seed"]) or not 0 <= data["seed"] < 2**64:
            raise ConfigError("seed", f"expected an unsigned 64-bit integer, got {data['seed']!r}")
        kw["seed"] = data["seed"]
    if "inequalities" in data:
        ineq = data["inequalities"]
        if not isinstance(ineq, list):
            raise ConfigError("inequalities", "expected a list")
        for i, v in enumerate(ineq):
            if v not in INEQUALITIES:
                raise ConfigError(f"inequalities[{i}]", f"unknown inequality {v!r}; expected one of {', '.join(INEQUALITIES)}")
        kw["inequalities"] = tuple(ineq)
    if "counts" in data:
        counts = data["counts"]
        if not isinstance(counts, dict):
            raise ConfigError("counts", "expected an object")
        for key, v in counts.items():
            if key not in ("pure", "two_qubit", "mixed"):
                raise ConfigError(f"counts.{key}", "unknown field")
            if not _is_int(v) or v < 0:
                raise ConfigError(f"counts.{key}", f"expected a non-negative integer, got {v!r}")
            kw[key] = v
    if "n_qubits" in data:
        kw["n_qubits"] = _int_list(data, "n_qubits", 3, 6)
    if "ranks" in data:
        kw["ranks"] = _int_list(data, "ranks", 1, 4)
    if "mixed_ranks" in data:
        kw["mixed_ranks"] = _int_list(data, "mixed_ranks", 1, MIXED_MAX_RANK)
    if "alphas" in data:
        kw["alphas"] = _num_list(data, "alphas")
    if "mus" in data:
        kw["mus"] = _num_list(data, "mus")
        for i, m in enumerate(kw["mus"]):
            if not 0.0 <= m <= 1.0:
                raise ConfigError(f"mus[{i}]", f"mu must lie in [0, 1], got {m!r}")
    if "eq19_mode" in data:
        if data["eq19_mode"] not in ("certified", "optimized"):
            raise ConfigError("eq19_mode", f"expected 'certified' or 'optimized', got {data['eq19_mode']!r}")
        kw["eq19_mode"] = data["eq19_mode"]
    if "budget" in data:
        b = data["budget"]
        if not isinstance(b, dict):
            raise ConfigError("budget", "expected an object")
        names = {f.name: f.type for f in fields(roof.OptBudget)}
        for key, v in b.items():
            if key not in names:
                raise ConfigError(f"budget.{key}", "unknown field")
            ok = _is_num(v) if key == "tol" else _is_int(v)
            if not ok:
                raise ConfigError(f"budget.{key}", f"invalid value {v!r}")
        try:
            kw["budget"] = roof.OptBudget(**b)
        except ValueError as exc:
            raise ConfigError("budget", str(exc)) from exc

    cfg = CampaignConfig(**{**asdict_shallow(base), **kw})
    _check_alphas(cfg)
    if any(len(lst) == 0 for lst in (cfg.n_qubits, cfg.ranks, cfg.mixed_ranks)):
        raise ConfigError("n_qubits", "n_qubits, ranks and mixed_ranks must be non-empty")
    return cfg


def asdict_shallow(cfg: CampaignConfig) -> dict:
    return {f.name: getattr(cfg, f.name) for f in fields(cfg)}


def _check_alphas(cfg: CampaignConfig) -> None:
    needs_alpha = set(cfg.inequalities) - {"eq1", "eq2"}
    if needs_alpha and not cfg.alphas:
        raise ConfigError("alphas", f"{', '.join(sorted(needs_alpha))} need at least one alpha")
    lemma_bound = {"eq19mixed", "eq24"} | ({"eq19pure"} if cfg.eq19_mode == "certified" else set())
    for i, a in enumerate(cfg.alphas):
        if a < ALPHA_MIN - LEMMA_SLACK:
            raise ConfigError(f"alphas[{i}]", f"alpha={a} is below {ALPHA_MIN:.17g}, where the two-qubit formula fails")
        hit = sorted(lemma_bound & set(cfg.inequalities))
        if hit and a > ALPHA_MAX + LEMMA_SLACK:
            raise ConfigError(f"alphas[{i}]", f"alpha={a} is outside the lemma range required by {', '.join(hit)}")


def load_config(path) -> CampaignConfig:
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"line {exc.lineno} column {exc.colno}", exc.msg) from exc
    return config_from_dict(data)


@dataclass(frozen=True)
class CampaignItem:
    index: int
    kind: str
    n_qubits: int
    rank: int
    seed: int


def campaign_items(cfg: CampaignConfig) -> list[CampaignItem]:
    """Every sampled state of the campaign, in report order."""
    items = []
    ineq = set(cfg.inequalities)

    def add(kind, n, rank):
        idx = len(items)
        items.append(CampaignItem(idx, kind, n, rank, derive_seed(cfg.seed, idx)))

    if ineq & {"eq1", "eq2", "eq19pure", "eq24"}:
        for n in cfg.n_qubits:
            for _ in range(cfg.pure):
                add("pure", n, 1)
    if ineq & {"eq8", "lemma1"}:
        for k in range(cfg.two_qubit):
            add("two_qubit", 2, cfg.ranks[k % len(cfg.ranks)])
    if ineq & {"eq19mixed", "eq24"}:
        for k in range(cfg.mixed):
            add("mixed", 3, cfg.mixed_ranks[k % len(cfg.mixed_ranks)])
    return items


def run_item(cfg: CampaignConfig, item: CampaignItem) -> list[InequalityReport]:
    ineq = set(cfg.inequalities)
    out: list[InequalityReport] = []
    b = cfg.budget
    if item.kind == "pure":
        psi = haar_random_pure(item.n_qubits, item.seed)
        label = f"haar:n={item.n_qubits}:seed={item.seed}"
        if ineq & {"eq1", "eq2"}:
            out.append(check_eq1_eq2(psi, None, label))
        for a in cfg.alphas:
            if not ineq & {"eq19pure", "eq24"}:
                break
            base = check_eq19_pure(psi, None, a, cfg.eq19_mode, b, item.seed, label)
            if "eq19pure" in ineq:
                out.append(base)
            if "eq24" in ineq:
                out.extend(power_report(base, m) for m in cfg.mus)
    elif item.kind == "two_qubit":
        rho = ginibre_random_mixed(2, item.rank, item.seed)
        label = f"ginibre:n=2:rank={item.rank}:seed={item.seed}"
        for a in cfg.alphas:
            result = roof.reoa(rho, a, b, item.seed)
            if "eq8" in ineq and a < 1.0:
                out.append(check_eq8(rho, a, b, item.seed, label, result))
            if "lemma1" in ineq:
                out.append(check_lemma1(rho, a, b, item.seed, label, result))
    else:
        rho = ginibre_random_mixed(3, item.rank, item.seed)
        label = f"ginibre:n=3:rank={item.rank}:seed={item.seed}"
        for a in cfg.alphas:
            base = check_eq19_mixed(rho, None, a, b, item.seed, label)
            if "eq19mixed" in ineq:
                out.append(base)
            if "eq24" in ineq:
                out.extend(power_report(base, m) for m in cfg.mus)
    return [r for r in out if r.inequality in ineq]


def summarize(reports: list[InequalityReport]) -> dict:
    per = {}
    for r in reports:
        s = per.setdefault(r.inequality, {"count": 0, "worst_margin": None, **{v: 0 for v in VERDICTS}})
        s["count"] += 1
        s[r.verdict] += 1
        if s["worst_margin"] is None or r.margin < s["worst_margin"]:
            s["worst_margin"] = r.margin
    per = {k: per[k] for k in INEQUALITIES if k in per}
    totals = {v: sum(1 for r in reports if r.verdict == v) for v in VERDICTS}
    worst = min((r.margin for r in reports), default=None)
    return {"checks": len(reports), "verdicts": totals, "worst_margin": worst, "per_inequality": per}


def run_campaign(cfg: CampaignConfig, out_dir=None, threads: int = 1) -> tuple[list[InequalityReport], dict]:
    """Run every item, merging results in item order.

    With ``out_dir`` set, writes report.jsonl (one report per line) and
    summary.json (counts, worst margins, wall time). The report body depends
    only on the configuration, never on ``threads``.
    """
    start = time.perf_counter()
    items = campaign_items(cfg)
    if threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            batches = list(pool.map(lambda it: run_item(cfg, it), items))
    else:
        batches = [run_item(cfg, it) for it in items]
    reports = [r for batch in batches for r in batch]
    summary = summarize(reports)
    summary["wall_time_s"] = time.perf_counter() - start
    summary["config"] = cfg.to_dict()
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        with open(out_dir / "report.jsonl", "w") as handle:
            for r in reports:
                handle.write(json.dumps(r.to_dict()) + "\n")
        (out_dir / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    log.info("campaign: %d checks from %d items in %.1f s", len(reports), len(items), summary["wall_time_s"])
    return reports, summary
