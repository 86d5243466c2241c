"""Experiment harness: scenario configuration, seeded runs emitting CSV, and
power-law fits of error-scaling data.

Every scenario resolves a flat key=value configuration (defaults, then config
file, then command-line overrides), runs deterministically for a fixed
(config, seed) pair, and emits one CSV document whose header comments record
the schema version and the fully resolved configuration.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import bounds as bnd
from . import dynamic_mpf as dmp
from .formulas import ProductFormula, second_order, suzuki
from .heisenberg import build_heisenberg_chain, fragment_decomposition_s2
from .statesim import SpectralOracle, mixture_frobenius_sq, mixture_trace_norm, neel_state
from .static_mpf import MpfScheme, rank_of_tuple, search_steps, solve_coefficients

SCHEMA_LINE = "# mpf-lab schema v1"


# -- configuration ------------------------------------------------------------

@dataclass(frozen=True)
class Option:
    kind: str          # int | float | bool | ints | str
    default: object
    help: str = ""


_GRID = {
    "t_start": Option("float", 0.5, "first grid time"),
    "t_stop": Option("float", 3.0, "last grid time"),
    "t_count": Option("int", 6, "number of grid times"),
    "t_scale": Option("str", "linear", "linear or log spacing"),
}

SCENARIOS: dict[str, dict[str, Option]] = {
    "trotter-sweep": {
        "n": Option("int", 6), "seed": Option("int", 2024), "p": Option("int", 2),
        "k_list": Option("ints", (1, 2, 4, 8, 16), "step counts to sweep"),
        "hamiltonian": Option("str", "", "text file with a custom operator"),
        **_GRID,
    },
    "mpf-sweep": {
        "n": Option("int", 6), "seed": Option("int", 2024), "p": Option("int", 2),
        "steps": Option("ints", (4, 13, 17), "base step tuple"),
        "lam": Option("int", 1, "integer rescaling of the step tuple"),
        "even_powers": Option("bool", False, "even-only cancellation powers"),
        "bounds": Option("str", "auto", "bound columns: on, off, or auto (n <= 4)"),
        "hamiltonian": Option("str", "", "text file with a custom operator"),
        **_GRID,
    },
    "tuple-search": {
        "p": Option("int", 2), "seed": Option("int", 2024),
        "k_max": Option("int", 25, "largest admissible step count"),
        "r": Option("int", 0, "tuple length; 0 means p + 1"),
        "even_powers": Option("bool", False),
        "kappa_cap": Option("float", 0.0, "drop tuples above this 1-norm; 0 disables"),
        "limit": Option("int", 25, "ranked tuples to emit"),
        "reference": Option("ints", (), "tuple to locate in the ranking"),
    },
    "bound-eval": {
        "n": Option("int", 4), "seed": Option("int", 2024), "p": Option("int", 2),
        "steps": Option("ints", (4, 13, 17)),
        "lam": Option("int", 1),
        "sampler_draws": Option("int", 64, "random draws for the window maxima"),
        "sampler_seed": Option("int", 2024),
        **_GRID,
    },
    "minimax-shootout": {
        "n": Option("int", 10), "seed": Option("int", 2024),
        "steps": Option("ints", (8, 20, 26, 30, 34)),
        "static_subset": Option("ints", (0, 2, 4), "indices of the static comparator"),
        "t0": Option("float", 1.0), "t_final": Option("float", 4.5),
        "dt": Option("float", 0.05), "eps": Option("float", 0.01),
        "k0": Option("int", 26, "steps used to push the mixture forward by dt"),
        "even_powers": Option("bool", True, "power convention for the static seed"),
        "trajectory_out": Option("str", "", "optional second CSV with the full trajectory"),
    },
    "solve-coeffs": {
        "p": Option("int", 2), "seed": Option("int", 2024),
        "steps": Option("ints", (4, 13, 17)),
        "lam": Option("int", 1),
        "even_powers": Option("bool", False),
    },
}


def parse_config_text(text: str) -> dict[str, str]:
    """Parse the flat ``key = value`` format; '#' starts a comment line."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        out[key.strip()] = value.strip()
    return out


def _coerce(kind: str, raw: str):
    if kind == "int":
        return int(raw)
    if kind == "float":
        return float(raw)
    if kind == "bool":
        low = raw.strip().lower()
        if low in ("true", "1", "yes", "on"):
            return True
        if low in ("false", "0", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    if kind == "ints":
        raw = raw.strip()
        if not raw:
            return ()
        return tuple(int(tok) for tok in raw.replace(";", ",").split(",") if tok.strip())
    if kind == "str":
        return raw
    raise ValueError(f"unknown option kind {kind!r}")


def resolve_config(scenario: str, *sources: dict[str, str]) -> dict:
    """Layer defaults and string-valued sources into a typed config dict."""
    if scenario not in SCENARIOS:
        raise ValueError(f"unknown scenario {scenario!r}")
    schema = SCENARIOS[scenario]
    cfg = {key: opt.default for key, opt in schema.items()}
    for src in sources:
        for key, raw in src.items():
            if key not in schema:
                raise ValueError(f"unknown config key {key!r} for scenario {scenario}")
            cfg[key] = _coerce(schema[key].kind, raw) if isinstance(raw, str) else raw
    return cfg


def time_grid(cfg: dict) -> np.ndarray:
    count = cfg["t_count"]
    if count < 1:
        raise ValueError("t_count must be >= 1")
    if cfg["t_scale"] == "linear":
        return np.linspace(cfg["t_start"], cfg["t_stop"], count)
    if cfg["t_scale"] == "log":
        if cfg["t_start"] <= 0:
            raise ValueError("log grids need t_start > 0")
        return np.geomspace(cfg["t_start"], cfg["t_stop"], count)
    raise ValueError(f"unknown t_scale {cfg['t_scale']!r}")


# -- CSV document --------------------------------------------------------------

@dataclass
class CsvDoc:
    comments: list[str]
    header: list[str]
    rows: list[list]
    extra: dict = field(default_factory=dict)

    def text(self) -> str:
        lines = [SCHEMA_LINE]
        lines.extend(f"# {c}" for c in self.comments)
        lines.append(",".join(self.header))
        for row in self.rows:
            lines.append(",".join(_fmt(v) for v in row))
        return "\n".join(lines) + "\n"


def _fmt(value) -> str:
    if value is None:
        return "nan"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".12e")
    return str(value)


def _config_comments(scenario: str, cfg: dict) -> list[str]:
    out = [f"scenario = {scenario}"]
    for key in sorted(cfg):
        val = cfg[key]
        if isinstance(val, tuple):
            val = ",".join(str(v) for v in val)
        out.append(f"{key} = {val}")
    return out


# -- shared scenario plumbing ---------------------------------------------------

@dataclass
class ChainContext:
    cfg: dict
    pf: ProductFormula
    oracle: SpectralOracle
    psi: np.ndarray
    scheme: MpfScheme | None = None
    commutator_sum: float | None = None
    t1: bnd.MixtureBoundEvaluator | None = None


def _build_formula(n: int, seed: int, p: int, hamiltonian_path: str = ""):
    if hamiltonian_path:
        from pathlib import Path

        from .formulas import fragment_by_commuting_groups
        from .pauli import parse_op

        op = parse_op(Path(hamiltonian_path).read_text())
        if op.n != n:
            raise ValueError(
                f"custom operator acts on {op.n} qubits but the config says n={n}"
            )
        frags = fragment_by_commuting_groups(op)
    else:
        _, fields = build_heisenberg_chain(n, seed)
        frags = fragment_decomposition_s2(n, fields)
    pf = second_order(frags)
    if p == 4:
        pf = suzuki(pf, 4)
    elif p != 2:
        raise ValueError("supported formula orders are 2 and 4")
    return pf


def _sweep_context(scenario: str, cfg: dict) -> ChainContext:
    pf = _build_formula(cfg["n"], cfg["seed"], cfg["p"], cfg.get("hamiltonian", ""))
    ctx = ChainContext(cfg=cfg, pf=pf, oracle=SpectralOracle(pf.hamiltonian),
                       psi=neel_state(cfg["n"]))
    if scenario == "mpf-sweep":
        steps = tuple(cfg["lam"] * k for k in cfg["steps"])
        ctx.scheme = solve_coefficients(cfg["p"], steps, cfg["even_powers"])
        ctx.commutator_sum = bnd.formula_commutator_sum(pf)
        mode = cfg["bounds"]
        if mode not in ("on", "off", "auto"):
            raise ValueError("bounds must be on, off, or auto")
        if mode == "on" or (mode == "auto" and cfg["n"] <= 4):
            if cfg["even_powers"]:
                raise ValueError("the mixture bound needs the consecutive-power scheme")
            ctx.t1 = bnd.MixtureBoundEvaluator(ctx.scheme, pf)
    elif scenario == "trotter-sweep":
        ctx.commutator_sum = bnd.formula_commutator_sum(pf)
    return ctx


def _trotter_fit(p: int, n: int, t: float, k: int) -> float:
    if p == 2:
        return 0.6 * n * t**3 / k**2
    return 0.04 * n * t**5 / k**4


def _mpf_fit(p: int, n: int, t: float, objective: float) -> float:
    if p == 2:
        return 0.06 * n * n * t**6 * objective
    return 0.00014 * n * n * t**10 * objective


def _trotter_sweep_rows(ctx: ChainContext, indices: list[int]) -> list[list]:
    cfg = ctx.cfg
    grid = time_grid(cfg)
    ks = cfg["k_list"]
    rows = []
    for idx in indices:
        ti, kj = divmod(idx, len(ks))
        t, k = float(grid[ti]), int(ks[kj])
        if t == 0.0:
            rows.append([t, k, 0.0, 0.0, 0.0])
            continue
        state = dmp.rho_k_state(ctx.pf, ctx.psi, t, k)
        err = mixture_trace_norm([state, ctx.oracle.evolve(ctx.psi, t)], [1.0, -1.0])
        rows.append([
            t, k, err,
            bnd.product_formula_error_bound(ctx.pf, t, k, commutator_sum=ctx.commutator_sum),
            _trotter_fit(cfg["p"], cfg["n"], t, k),
        ])
    return rows


def _mpf_sweep_rows(ctx: ChainContext, indices: list[int]) -> list[list]:
    cfg = ctx.cfg
    grid = time_grid(cfg)
    scheme = ctx.scheme
    k_best = max(scheme.steps)
    rows = []
    for idx in indices:
        t = float(grid[idx])
        if t == 0.0:
            # every circuit reproduces the initial state identically
            rows.append([t, 0.0, 0.0, 0.0, 0.0 if ctx.t1 is not None else None, 0.0])
            continue
        states = dmp.trotter_states(ctx.pf, ctx.psi, t, scheme.steps)
        exact = ctx.oracle.evolve(ctx.psi, t)
        trotter_err = mixture_trace_norm([states[-1], exact], [1.0, -1.0])
        mpf_err = mixture_trace_norm(states + [exact], list(scheme.coefficients) + [-1.0])
        rows.append([
            t, trotter_err, mpf_err,
            bnd.product_formula_error_bound(ctx.pf, t, k_best, commutator_sum=ctx.commutator_sum),
            ctx.t1.at(t).value if ctx.t1 is not None else None,
            _mpf_fit(cfg["p"], cfg["n"], t, scheme.objective),
        ])
    return rows


_SWEEPS = {
    "trotter-sweep": (
        _trotter_sweep_rows,
        ["t", "k", "trotter_error", "trotter_bound", "fit_value"],
        lambda cfg: len(time_grid(cfg)) * len(cfg["k_list"]),
    ),
    "mpf-sweep": (
        _mpf_sweep_rows,
        ["t", "trotter_error_best_k", "mpf_error", "trotter_bound",
         "mpf_bound", "fit_value"],
        lambda cfg: len(time_grid(cfg)),
    ),
}


def _sweep_block(scenario: str, cfg: dict, indices: list[int]) -> list[list]:
    ctx = _sweep_context(scenario, cfg)
    return _SWEEPS[scenario][0](ctx, indices)


def _run_sweep(scenario: str, cfg: dict, threads: int) -> CsvDoc:
    row_fn, header, count_fn = _SWEEPS[scenario]
    total = count_fn(cfg)
    indices = list(range(total))
    if threads <= 1 or total <= 1:
        rows = _sweep_block(scenario, cfg, indices)
    else:
        blocks = np.array_split(np.asarray(indices), min(threads, total))
        with ProcessPoolExecutor(max_workers=len(blocks)) as pool:
            futures = [pool.submit(_sweep_block, scenario, cfg, [int(i) for i in blk])
                       for blk in blocks]
            rows = [row for fut in futures for row in fut.result()]
    return CsvDoc(_config_comments(scenario, cfg), header, rows)


# -- remaining scenarios ---------------------------------------------------------

def _run_solve_coeffs(cfg: dict) -> CsvDoc:
    steps = tuple(cfg["lam"] * k for k in cfg["steps"])
    sch = solve_coefficients(cfg["p"], steps, cfg["even_powers"])
    header = ["p", "steps", "coefficients", "kappa", "objective", "condition"]
    rows = [[sch.order, ";".join(map(str, sch.steps)),
             ";".join(format(c, ".12e") for c in sch.coefficients),
             sch.kappa, sch.objective, sch.system_condition]]
    return CsvDoc(_config_comments("solve-coeffs", cfg), header, rows)


def _run_tuple_search(cfg: dict) -> CsvDoc:
    r = cfg["r"] if cfg["r"] > 0 else cfg["p"] + 1
    cap = cfg["kappa_cap"] if cfg["kappa_cap"] > 0 else None
    ranked = search_steps(cfg["p"], cfg["k_max"], r, even_powers=cfg["even_powers"],
                          kappa_cap=cap, limit=max(cfg["limit"], 1))
    comments = _config_comments("tuple-search", cfg)
    if cfg["reference"]:
        ref = solve_coefficients(cfg["p"], cfg["reference"], cfg["even_powers"])
        pos = rank_of_tuple(ranked, cfg["reference"])
        comments.append(f"reference_rank = {'unranked' if pos is None else pos}")
        comments.append(f"best_tuple = {','.join(map(str, ranked[0].steps))}")
        comments.append(
            f"reference_objective_ratio = {format(ref.objective / ranked[0].objective, '.6e')}"
        )
    header = ["rank", "p", "steps", "coefficients", "kappa", "objective", "condition"]
    rows = [[i, sch.order, ";".join(map(str, sch.steps)),
             ";".join(format(c, ".12e") for c in sch.coefficients),
             sch.kappa, sch.objective, sch.system_condition]
            for i, sch in enumerate(ranked)]
    return CsvDoc(comments, header, rows)


def _run_bound_eval(cfg: dict) -> CsvDoc:
    pf = _build_formula(cfg["n"], cfg["seed"], cfg["p"])
    steps = tuple(cfg["lam"] * k for k in cfg["steps"])
    scheme = solve_coefficients(cfg["p"], steps)
    sampler = bnd.FragmentTimeSampler(random_draws=cfg["sampler_draws"], seed=cfg["sampler_seed"])
    evaluator = bnd.MixtureBoundEvaluator(scheme, pf, sampler)
    grid = time_grid(cfg)
    first = evaluator.at(float(grid[0]))
    aggregate_names = sorted(first.aggregates)
    header = ["t", "formula_commutator_sum", "a1", "a2", "a3", "prefactor", "bound", *aggregate_names]
    rows = []
    for t in grid:
        b = evaluator.at(float(t)) if t != grid[0] else first
        rows.append([b.t, b.commutator_sum, b.a1, b.a2, b.a3, b.prefactor, b.value,
                     *[b.aggregates[name] for name in aggregate_names]])
    return CsvDoc(_config_comments("bound-eval", cfg), header, rows)


def _run_minimax_shootout(cfg: dict) -> tuple[CsvDoc, CsvDoc | None]:
    steps = cfg["steps"]
    if any(b <= a for a, b in zip(steps, steps[1:])):
        raise ValueError("steps must be strictly increasing")
    subset = cfg["static_subset"]
    if any(i < 0 or i >= len(steps) for i in subset):
        raise ValueError("static_subset indexes outside the step tuple")
    if any(b <= a for a, b in zip(subset, subset[1:])):
        raise ValueError("static_subset must be strictly increasing")
    pf = _build_formula(cfg["n"], cfg["seed"], 2)
    oracle = SpectralOracle(pf.hamiltonian)
    psi = neel_state(cfg["n"])
    sub_scheme = solve_coefficients(2, tuple(steps[i] for i in subset), cfg["even_powers"])
    c0 = np.zeros(len(steps))
    for pos, coeff in zip(subset, sub_scheme.coefficients):
        c0[pos] = coeff
    run = dmp.minimax_run(pf, oracle, psi, steps, t0=cfg["t0"], t_final=cfg["t_final"],
                          dt=cfg["dt"], eps=cfg["eps"], k0=cfg["k0"], c0=c0,
                          seed=cfg["seed"])
    c_sub = np.asarray(sub_scheme.coefficients)
    ids = list(subset)
    rows = []
    for j, t in enumerate(run.times):
        m_x, l_x = run.m_exact[j], run.l_exact[j]
        static_err = math.sqrt(max(
            mixture_frobenius_sq(m_x[np.ix_(ids, ids)], c_sub, l_x[ids]), 0.0))
        trotter_err = math.sqrt(max(2.0 - 2.0 * l_x[-1], 0.0))
        rows.append([float(t), static_err, trotter_err,
                     float(run.error_star[j]), float(run.error_hat[j]),
                     float(run.kappa_hat[j])])
    doc = CsvDoc(
        _config_comments("minimax-shootout", cfg),
        ["t", "err_static_wc", "err_best_trotter", "err_dynamic_exact",
         "err_minimax", "kappa_minimax"],
        rows,
    )
    traj = _trajectory_doc(cfg, run) if cfg["trajectory_out"] else None
    return doc, traj


def _trajectory_doc(cfg: dict, run: dmp.MinimaxRun) -> CsvDoc:
    r = run.c_hat.shape[1]
    header = (["t"] + [f"c_{i + 1}" for i in range(r)]
              + ["frobenius_error_exactdata", "frobenius_error_estimate",
                 "l1_condition", "objective", "bound_component_max"])
    rows = []
    for j, t in enumerate(run.times):
        if j == 0:
            est = None
        else:
            prox = run.a_bars[j] @ run.c_hat[j - 1]
            est_sq = 1.0 + run.c_hat[j] @ run.m_bars[j] @ run.c_hat[j] - 2.0 * prox @ run.c_hat[j]
            est = math.sqrt(max(est_sq, 0.0))
        rows.append([float(t), *[float(v) for v in run.c_hat[j]],
                     float(run.error_hat[j]), est, float(run.kappa_hat[j]),
                     float(run.objective[j]), None])
    return CsvDoc(_config_comments("minimax-shootout", cfg), header, rows)


def run_scenario(scenario: str, cfg: dict, threads: int = 1):
    """Run one scenario; returns (CsvDoc, optional trajectory CsvDoc)."""
    if scenario in _SWEEPS:
        return _run_sweep(scenario, cfg, threads), None
    if scenario == "solve-coeffs":
        return _run_solve_coeffs(cfg), None
    if scenario == "tuple-search":
        return _run_tuple_search(cfg), None
    if scenario == "bound-eval":
        return _run_bound_eval(cfg), None
    if scenario == "minimax-shootout":
        return _run_minimax_shootout(cfg)
    raise ValueError(f"unknown scenario {scenario!r}")


# -- scaling-law fits -------------------------------------------------------------

@dataclass(frozen=True)
class FitResult:
    prefactor: float
    exponents: dict[str, float]
    max_log10_residual: float

    def predict(self, **axes) -> np.ndarray:
        out = np.full_like(np.asarray(next(iter(axes.values())), dtype=float),
                           self.prefactor)
        for name, exp in self.exponents.items():
            out = out * np.asarray(axes[name], dtype=float) ** exp
        return out


def fit_scaling(values, **axes) -> FitResult:
    """Least-squares fit of ``value = a * prod axis_i^b_i`` in log10 space.

    Every supplied axis must be strictly positive and take at least two
    distinct values; otherwise the design matrix is degenerate.
    """
    vals = np.asarray(values, dtype=float)
    if vals.size == 0 or np.any(vals <= 0):
        raise ValueError("values must be positive for a log-space fit")
    if not axes:
        raise ValueError("need at least one axis")
    cols = [np.ones(vals.size)]
    names = sorted(axes)
    for name in names:
        ax = np.asarray(axes[name], dtype=float)
        if ax.shape != vals.shape or np.any(ax <= 0):
            raise ValueError(f"axis {name!r} must be positive and match values")
        if np.unique(ax).size < 2:
            raise ValueError(f"degenerate design matrix: axis {name!r} is constant")
        cols.append(np.log10(ax))
    design = np.column_stack(cols)
    if vals.size < design.shape[1]:
        raise ValueError("not enough samples for the requested fit")
    coef, *_ = np.linalg.lstsq(design, np.log10(vals), rcond=None)
    resid = design @ coef - np.log10(vals)
    return FitResult(
        prefactor=float(10.0 ** coef[0]),
        exponents={name: float(c) for name, c in zip(names, coef[1:])},
        max_log10_residual=float(np.abs(resid).max()),
    )
