"""Monte Carlo evaluation of estimators and reproduction of the reference tables.

Replication ``r`` draws its dataset from the stream ``(seed, (DATA, r))`` and
its bootstrap resamples from ``(seed, (BOOT_*, r, block))``, so any subset of
replications can be computed separately (or in parallel) and concatenated in
replication order to give exactly the same report as a single run.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import reference_tables as ref
from . import scenarios
from .bootstrap import default_workers
from .estimators import traditional_max
from .methods import estimate, estimate_many
from .model import Dataset, EstimatorSpec, ValidationError
from .rng import DATA, RngStream
from .scenarios import Scenario

FULL_R = 10_000
QUICK_R = 2_000
QUICK_TRIPLE_R = 1_000
TABLE_B = 80
AWARD5_B = 1000
DEFAULT_SEED = 20240101


@dataclass(frozen=True)
class EvalConfig:
    R: int
    B: int = TABLE_B
    methods: tuple = ("traditional",)
    seed: int = DEFAULT_SEED
    conditional_target: Optional[int] = None
    workers: int = 1

    def __post_init__(self):
        if self.R < 1:
            raise ValidationError("R must be >= 1")
        if self.B < 1:
            raise ValidationError("B must be >= 1")
        object.__setattr__(self, "methods", tuple(self.methods))
        self.specs()  # validates method codes

    def specs(self) -> list[EstimatorSpec]:
        return [m if isinstance(m, EstimatorSpec) else EstimatorSpec.parse(m, self.B, self.seed)
                for m in self.methods]

    @property
    def codes(self) -> list[str]:
        return [s.code for s in self.specs()]


@dataclass
class MethodStats:
    method: str
    marginal_bias: float
    marginal_mse: float
    bias_se: float
    mse_se: float
    conditioning_count: int = 0
    conditional_bias: Optional[float] = None
    conditional_mse: Optional[float] = None
    conditional_bias_se: Optional[float] = None
    conditional_mse_se: Optional[float] = None


@dataclass
class EvalReport:
    scenario: str
    R: int
    true_theta_max: float
    selection_counts: np.ndarray
    methods: list[MethodStats]
    conditional_target: Optional[int] = None

    @property
    def selection_prob(self) -> np.ndarray:
        return self.selection_counts / self.R

    def stats(self, method: str) -> MethodStats:
        for m in self.methods:
            if m.method == method:
                return m
        raise KeyError(method)

    def rows(self) -> list[dict]:
        out = []
        for m in self.methods:
            row = {"scenario": self.scenario, "R": self.R, "true_theta_max": self.true_theta_max}
            row.update(m.__dict__)
            out.append(row)
        return out


@dataclass
class Replications:
    """Raw per-replication output: estimates (R x methods) and the selected group."""

    start: int
    values: np.ndarray
    selected: np.ndarray

    @staticmethod
    def concat(parts: Sequence["Replications"]) -> "Replications":
        parts = sorted(parts, key=lambda p: p.start)
        return Replications(parts[0].start, np.concatenate([p.values for p in parts]),
                            np.concatenate([p.selected for p in parts]))


def draw_dataset(s: Scenario, seed: int, replication: int) -> Dataset:
    return s.draw(RngStream(seed, (DATA, replication)).draws())


def run_replication(s: Scenario, specs: Sequence[EstimatorSpec], replication: int, seed: int):
    """Draw one dataset and run every estimator on it.

    Returns the estimates and the index of the group with the largest sample
    mean (the group the traditional selection rule picks).
    """
    d = draw_dataset(s, seed, replication)
    ests = estimate_many(d, specs, replication=replication, workers=1)
    return ests, traditional_max(d).trace.selected_index


def _run_range(args) -> Replications:
    s, specs, seed, start, stop = args
    values = np.empty((stop - start, len(specs)))
    selected = np.empty(stop - start, dtype=np.int64)
    for r in range(start, stop):
        ests, sel = run_replication(s, specs, r, seed)
        values[r - start] = [e.value for e in ests]
        selected[r - start] = sel
    return Replications(start, values, selected)


def simulate(s: Scenario, cfg: EvalConfig, start: int = 0, stop: Optional[int] = None,
             workers: Optional[int] = None) -> Replications:
    """Replications ``start..stop-1`` of ``cfg`` on ``s``."""
    stop = cfg.R if stop is None else stop
    specs = cfg.specs()
    workers = cfg.workers if workers is None else workers
    n = stop - start
    if workers <= 1 or n < 2:
        return _run_range((s, specs, cfg.seed, start, stop))
    chunk = max(1, math.ceil(n / (workers * 8)))
    jobs = [(s, specs, cfg.seed, a, min(a + chunk, stop)) for a in range(start, stop, chunk)]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return Replications.concat(list(ex.map(_run_range, jobs)))


def _mean_se(x: np.ndarray) -> tuple[float, float]:
    if x.size == 0:
        return float("nan"), float("nan")
    se = float(x.std(ddof=1) / math.sqrt(x.size)) if x.size > 1 else float("nan")
    return float(x.mean()), se


def summarize(s: Scenario, cfg: EvalConfig, reps: Replications) -> EvalReport:
    R = reps.values.shape[0]
    target = cfg.conditional_target
    if target is not None and not 0 <= target < s.n_groups:
        raise ValidationError(f"conditional_target {target} out of range")
    err = reps.values - s.true_theta_max
    mask = reps.selected == target if target is not None else None
    stats = []
    for j, code in enumerate(cfg.codes):
        e = err[:, j]
        bias, bias_se = _mean_se(e)
        mse, mse_se = _mean_se(e * e)
        m = MethodStats(code, bias, mse, bias_se, mse_se)
        if mask is not None:
            m.conditioning_count = int(mask.sum())
            if m.conditioning_count:
                ec = e[mask]
                m.conditional_bias, m.conditional_bias_se = _mean_se(ec)
                m.conditional_mse, m.conditional_mse_se = _mean_se(ec * ec)
        stats.append(m)
    counts = np.bincount(reps.selected, minlength=s.n_groups)
    return EvalReport(s.name, R, s.true_theta_max, counts, stats, target)


def evaluate(s: Scenario, cfg: EvalConfig) -> EvalReport:
    return summarize(s, cfg, simulate(s, cfg))


# --------------------------------------------------------------------------
# reproduction tables


@dataclass
class Table:
    name: str
    title: str
    columns: list
    rows: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    # wall-clock seconds per row key; kept out of the table so outputs stay reproducible
    timings: dict = field(default_factory=dict)

    def to_markdown(self, digits: int = 4) -> str:
        def fmt(v):
            if v is None or (isinstance(v, float) and math.isnan(v)):
                return ""
            if isinstance(v, (bool, np.bool_)):
                return "yes" if v else "NO"
            if isinstance(v, float):
                return f"{v:.{digits}f}"
            return str(v)

        lines = [f"## {self.title}", ""]
        lines.append("| " + " | ".join(self.columns) + " |")
        lines.append("|" + "|".join("---" for _ in self.columns) + "|")
        for r in self.rows:
            lines.append("| " + " | ".join(fmt(r.get(c)) for c in self.columns) + " |")
        lines += [""] + [f"- {n}" for n in self.notes]
        return "\n".join(lines) + "\n"


TABLE_NAMES = ("toy", "marginal", "conditional", "four_arm", "boot_order", "award5")

# the reference Jackknife column is reproduced by the paired convention
GRID_METHODS = tuple("jkp" if c == "jk" else c for c in ref.TABLE_METHODS)
_REF_KEY = {"jkp": "jk"}

_CELL_COLUMNS = ["scenario", "param", "method", "R", "B", "bias", "bias_se", "mse", "mse_se",
                 "ref_bias", "ref_mse", "abs_diff_bias", "abs_diff_mse", "tol_bias", "tol_mse",
                 "within_tol"]


def _cell_row(s: Scenario, m: MethodStats, R: int, B, refcell, conditional=False, count=None):
    if conditional:
        bias, mse = m.conditional_bias, m.conditional_mse
        bse, mse_se = m.conditional_bias_se, m.conditional_mse_se
    else:
        bias, mse, bse, mse_se = m.marginal_bias, m.marginal_mse, m.bias_se, m.mse_se
    row = {"scenario": s.family, "param": s.param, "method": m.method, "R": R, "B": B,
           "bias": bias, "bias_se": bse, "mse": mse, "mse_se": mse_se}
    if count is not None:
        row["conditioning_count"] = count
    if refcell is not None and bias is not None:
        rb, rm = refcell
        # references are printed to 2 decimals: allow half a unit of rounding
        tb, tm = 4 * bse + 0.005, 4 * mse_se + 0.005
        row.update(ref_bias=rb, ref_mse=rm, abs_diff_bias=abs(bias - rb), abs_diff_mse=abs(mse - rm),
                   tol_bias=tb, tol_mse=tm, within_tol=bool(abs(bias - rb) <= tb and abs(mse - rm) <= tm))
    return row


def _toy_table(R, seed, workers):
    t = Table("toy", "Bias of the max of sample means, two groups",
              ["n", "R", "mean_estimate", "bias", "bias_se", "p_select_2", "ref_mean", "ref_bias",
               "ref_p_select_2", "abs_diff_bias", "abs_diff_p", "tol_bias", "tol_p", "within_tol"])
    for s in scenarios.family("toy"):
        cfg = EvalConfig(R, methods=("traditional",), seed=seed, workers=workers)
        rep = evaluate(s, cfg)
        m = rep.methods[0]
        p = float(rep.selection_prob[1])
        rm, rb, rp = ref.TOY[s.param]
        tb = 4 * m.bias_se + 0.005
        tp = 4 * math.sqrt(max(p * (1 - p), 1.0 / R) / R) + 0.005
        t.rows.append({"n": int(s.param), "R": R, "mean_estimate": m.marginal_bias + s.true_theta_max,
                       "bias": m.marginal_bias, "bias_se": m.bias_se, "p_select_2": p,
                       "ref_mean": rm, "ref_bias": rb, "ref_p_select_2": rp,
                       "abs_diff_bias": abs(m.marginal_bias - rb), "abs_diff_p": abs(p - rp),
                       "tol_bias": tb, "tol_p": tp,
                       "within_tol": abs(m.marginal_bias - rb) <= tb and abs(p - rp) <= tp})
    return t


def _grid_table(name, title, fams, refs, R, seed, workers, conditional=False):
    cols = list(_CELL_COLUMNS)
    if conditional:
        cols.insert(5, "conditioning_count")
    t = Table(name, title, cols)
    for fam in fams:
        for s in scenarios.family(fam):
            target = 2 if conditional else None
            cfg = EvalConfig(R, TABLE_B, GRID_METHODS, seed, target, workers)
            rep = evaluate(s, cfg)
            for m in rep.methods:
                cell = refs.get((s.family, s.param), {}).get(_REF_KEY.get(m.method, m.method))
                count = m.conditioning_count if conditional else None
                t.rows.append(_cell_row(s, m, R, TABLE_B, cell, conditional, count))
    return t


def _boot_order_table(R, R_triple, seed, workers):
    t = Table("boot_order", "Single, double and triple bootstrap with varying B", list(_CELL_COLUMNS))
    for s in scenarios.family("S1"):
        for B in ref.BOOT_ORDER_B:
            refs = ref.BOOT_ORDER[(s.param, B)]
            runs = [(("pb1", "pb2", "nb1", "nb2"), R)]
            if B in ref.TRIPLE_B:
                runs.append((("pb3", "nb3"), R_triple))
            for methods, r in runs:
                rep = evaluate(s, EvalConfig(r, B, methods, seed, None, workers))
                for m in rep.methods:
                    t.rows.append(_cell_row(s, m, r, B, refs[m.method]))
    t.rows.sort(key=lambda row: (row["param"], row["B"], ref.BOOT_ORDER_METHODS.index(row["method"])))
    t.notes.append(f"triple bootstrap evaluated with R={R_triple}; not run at B in (500, 1000)")
    return t


def load_award5() -> Dataset:
    from .io import read_dataset
    from importlib import resources

    with resources.as_file(resources.files("selbias") / "data" / "award5.csv") as p:
        return read_dataset(p, "summary")


def _award5_table(seed, B=AWARD5_B):
    d = load_award5()
    t = Table("award5", f"Seven-dose summary-data example (B={B}, seed={seed})",
              ["method", "value", "ref_value", "abs_diff", "selected", "ref_seconds"])
    for code in ("traditional", "pb1", "pb2", "pb2s"):
        spec = EstimatorSpec.parse(code, B=B, seed=seed)
        t0 = time.perf_counter()
        e = estimate(d, spec, workers=1)
        dt = time.perf_counter() - t0
        rv, rs = ref.AWARD5[code]
        t.rows.append({"method": code, "value": e.value, "ref_value": rv, "abs_diff": abs(e.value - rv),
                       "selected": d.labels[e.trace.selected_index], "ref_seconds": rs})
        t.timings[code] = dt
    return t


def resolve_budget(R: Optional[int] = None, quick: bool = False,
                   R_triple: Optional[int] = None) -> tuple[int, int]:
    """Replication counts ``(R, R_triple)`` after applying ``quick`` and overrides."""
    if R is None:
        R = QUICK_R if quick else FULL_R
    if R_triple is None:
        R_triple = min(R, QUICK_TRIPLE_R) if quick else R
    return R, R_triple


def reproduce_table(name: str, R: Optional[int] = None, quick: bool = False, seed: int = DEFAULT_SEED,
                    workers: Optional[int] = None, R_triple: Optional[int] = None) -> Table:
    """Run one of the built-in reproduction configurations.

    ``quick`` lowers R to 2000 (triple bootstrap to 1000); ``R`` overrides
    both.  Tolerance columns are 4 Monte Carlo standard errors plus half a
    unit of the reference's last printed digit, so they widen as R shrinks.
    """
    if name not in TABLE_NAMES:
        raise ValidationError(f"unknown table {name!r}; choose from {TABLE_NAMES}")
    workers = default_workers() if workers is None else workers
    R, R_triple = resolve_budget(R, quick, R_triple)
    if name == "toy":
        t = _toy_table(R, seed, workers)
    elif name == "marginal":
        t = _grid_table(name, "Marginal bias and MSE", ("S1", "S2", "S3", "S4"), ref.MARGINAL, R, seed, workers)
    elif name == "conditional":
        t = _grid_table(name, "Conditional bias and MSE given the third group is selected",
                        ("S1", "S2", "S3", "S4"), ref.CONDITIONAL, R, seed, workers, conditional=True)
    elif name == "four_arm":
        t = _grid_table(name, "Marginal bias and MSE with four groups", ("four_arm",), ref.FOUR_ARM,
                        R, seed, workers)
    elif name == "boot_order":
        t = _boot_order_table(R, R_triple, seed, workers)
    else:
        t = _award5_table(seed)
    if name != "award5":
        t.notes.insert(0, f"R={R}, seed={seed}")
    return t
