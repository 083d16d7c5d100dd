"""Experiment drivers producing plain-text tables.

Every ``run_*`` function takes an :class:`ExperimentConfig` and returns a
dict of :class:`Table` objects keyed by file stem.  Tables are deterministic
given the config (including its seed).
"""
import csv
import dataclasses
import io
import os
from dataclasses import dataclass, field

import numpy as np

from .basins import map_basins
from .baseline import best_cdns, cdns_profile
from .beta import BetaConfig, arm_grid, train_batch
from .channel import run_episode
from .dists import chi_square_2_scaled, format_dist, parse_dist
from .libra import libra, nash_gap
from .oracle import binary_toy_optimum
from .strategy import Scenario, energy, expected_reward_threshold, jfi

__all__ = [
    "ExperimentConfig",
    "Table",
    "load_config",
    "asymmetric_scenario",
    "run_toy",
    "run_basins",
    "run_symmetric",
    "run_asymmetric",
    "run_beta",
    "run_robustness",
    "RUNNERS",
]


@dataclass
class ExperimentConfig:
    experiment: str = "symmetric"
    nodes: int = 10
    psi: float = 0.25
    dist: str = "chi2m(1)"
    nu: float = None  # 0.5 for asymmetric, 0.25 for robustness
    eta: float = 0.25
    T: int = 1_000_000
    step: float = 1e-3
    episodes: int = None  # 200 for asymmetric, 100 for robustness
    runs: int = 100
    L: int = 100_000
    window: int = 25
    explore: float = 0.01
    kappa: float = 1 - 5e-5
    step_rule: str = "geometric"
    scenario: str = "symmetric"  # BETA: symmetric or asymmetric
    grid_step: float = 0.01
    node_list: str = "1,2,3,5,10,20,30,50,75,100"
    toy_nodes: str = "2,5,10,100"
    p_step: float = 0.01
    apply: str = "quantile"  # robustness: how believed thresholds are used
    fallback: bool = False
    seed: int = 0
    out: str = "."

    def resolved(self):
        c = dataclasses.replace(self)
        if c.nu is None:
            c.nu = 0.25 if c.experiment == "robustness" else 0.5
        if c.episodes is None:
            c.episodes = 100 if c.experiment == "robustness" else 200
        return c

    def as_dict(self):
        return dataclasses.asdict(self)


def _coerce(value, typ, name):
    if typ in (bool, "bool"):
        v = value.strip().lower()
        if v not in ("1", "0", "true", "false", "yes", "no"):
            raise ValueError(f"{name}: expected a boolean, got {value!r}")
        return v in ("1", "true", "yes")
    if typ in (int, "int"):
        return int(float(value)) if "e" in value.lower() else int(value)
    if typ in (float, "float"):
        return float(value)
    return value


def load_config(path=None, **overrides):
    """Read a flat ``key = value`` file (``#`` comments) into a config."""
    types = {f.name: f.type for f in dataclasses.fields(ExperimentConfig)}
    kw = {}
    if path is not None:
        with open(path) as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ValueError(f"{path}:{lineno}: expected key = value")
                key, value = (s.strip() for s in line.split("=", 1))
                if key not in types:
                    raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
                kw[key] = _coerce(value, types[key], key)
    kw.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig(**kw)


@dataclass
class Table:
    columns: tuple
    rows: list
    meta: dict = field(default_factory=dict)

    def column(self, name):
        k = self.columns.index(name)
        return np.array([r[k] for r in self.rows])

    def to_text(self):
        buf = io.StringIO()
        for k, v in self.meta.items():
            buf.write(f"# {k}: {v}\n")
        w = csv.writer(buf, delimiter="\t", lineterminator="\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow([_fmt(x) for x in r])
        return buf.getvalue()

    def write(self, path):
        os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
        with open(path, "w") as fh:
            fh.write(self.to_text())


def _fmt(x):
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.10g}"
    return str(x)


def _meta(config, **extra):
    m = {f"config.{k}": v for k, v in config.as_dict().items()}
    m.update(extra)
    return m


def _ints(text):
    return [int(t) for t in str(text).split(",") if t.strip()]


def asymmetric_scenario(n, nu, psi, rng):
    """χ²₂ laws whose means are drawn uniformly from ``[1 - nu, 1 + nu]``."""
    means = rng.uniform(1.0 - nu, 1.0 + nu, n)
    return Scenario(tuple(chi_square_2_scaled(m) for m in means), psi), means


def _episode_rngs(seed, k):
    return [np.random.default_rng(c) for c in np.random.SeedSequence(seed).spawn(k)]


def run_toy(config):
    """Pull vs optimal push for binary anomaly values."""
    c = config.resolved()
    ps = np.round(np.arange(c.p_step, 1.0 + 1e-12, c.p_step), 10)
    ns = _ints(c.toy_nodes)
    rows = []
    for p in ps:
        row = [float(p), float(p * (1.0 - c.psi)) if c.psi < 1 else 0.0]
        row[1] = max(row[1], 0.0)
        for n in ns:
            row.append(binary_toy_optimum(n, float(p), c.psi)[1])
        rows.append(tuple(row))
    cols = ("p", "reward_dns") + tuple(f"reward_push_N{n}" for n in ns)
    return {f"toy_psi{c.psi:g}": Table(cols, rows, _meta(c))}


def run_basins(config):
    """Basin map of three iid nodes (``dist``, ``psi``)."""
    c = config.resolved()
    d = parse_dist(c.dist)
    s = Scenario.iid(d, 3, c.psi, c.seed)
    bm = map_basins(s, c.grid_step, seed=c.seed)
    meta = _meta(c, dns_factor=10)
    cells = Table(bm.COLUMNS, bm.table, meta)
    eq = Table(("label", "theta1", "theta2", "theta3", "reward", "cells", "nash_gap"),
               [(str(e.label), *map(float, e.profile), e.reward, e.cells, e.nash_gap)
                for e in bm.equilibria], meta)
    tag = "".join(ch if ch.isalnum() or ch == "." else "_" for ch in format_dist(d)).strip("_")
    stem = f"basins_{tag}_psi{c.psi:g}"
    return {stem: cells, stem + "_equilibria": eq}


def run_symmetric(config):
    """LIBRA against the canonical DNS for ``N`` iid nodes."""
    c = config.resolved()
    d = parse_dist(c.dist)
    rows = []
    for n in _ints(c.node_list):
        s = Scenario.iid(d, n, c.psi, c.seed + n)
        _, _, r_cdns = best_cdns(s)
        e_cdns = energy(cdns_profile(s), s)
        prof, tr = libra(s, step=c.step)
        r = expected_reward_threshold(prof, s)
        mc = run_episode(s, prof, c.T, seed=[c.seed, n])
        rows.append((n, r_cdns, r, mc.mean_reward, mc.reward_se, e_cdns, energy(prof, s),
                     r / r_cdns, nash_gap(prof, s), int(tr.converged)))
    cols = ("N", "reward_cdns", "reward_libra", "reward_libra_mc", "mc_se", "energy_cdns",
            "energy_libra", "gain", "nash_gap", "converged")
    return {f"symmetric_psi{c.psi:g}": Table(cols, rows, _meta(c))}


def run_asymmetric(config):
    """LIBRA relative to the best canonical DNS over random mean profiles."""
    c = config.resolved()
    rows = []
    for ep, rng in enumerate(_episode_rngs(c.seed, c.episodes)):
        s, means = asymmetric_scenario(c.nodes, c.nu, c.psi, rng)
        node, cprof, r_cdns = best_cdns(s)
        prof, _ = libra(s, step=c.step)
        r = expected_reward_threshold(prof, s)
        rel = r / r_cdns
        rel_e = energy(prof, s) / energy(cprof, s)
        if c.fallback and rel < 1:
            rel, rel_e, fair = 1.0, 1.0, jfi(cprof, s)
        else:
            fair = jfi(prof, s)
        rows.append((ep, rel, rel_e, fair, jfi(cprof, s), r, r_cdns, node + 1))
    cols = ("episode", "rel_reward", "rel_energy", "jfi_libra", "jfi_cdns", "reward_libra",
            "reward_cdns", "cdns_node")
    return {f"asymmetric_psi{c.psi:g}_nu{c.nu:g}": Table(cols, rows, _meta(c))}


def run_beta(config):
    """BETA learning curves normalized by each run's LIBRA reward."""
    c = config.resolved()
    rngs = _episode_rngs(c.seed, c.runs)
    scenarios = []
    for r, rng in enumerate(rngs):
        if c.scenario == "asymmetric":
            s, _ = asymmetric_scenario(c.nodes, c.nu, c.psi, rng)
        else:
            s = Scenario.iid(parse_dist(c.dist), c.nodes, c.psi)
        scenarios.append(Scenario(s.dists, c.psi, seed=int(rng.integers(2 ** 63))))
    ref = np.array([expected_reward_threshold(libra(s, step=c.step)[0], s) for s in scenarios])
    cdns = np.array([best_cdns(s)[2] for s in scenarios])
    bc = BetaConfig(L=c.L, window=c.window, explore=c.explore, kappa=c.kappa,
                    arms=arm_grid(), step_rule=c.step_rule)
    res = train_batch(scenarios, bc)
    meta = _meta(c, reward_libra_mean=ref.mean(),
                 reward_cdns_mean=cdns.mean())
    g = res.greedy_reward / ref[:, None]
    p = res.policy_reward / ref[:, None]
    real = res.realized_reward / ref[:, None]
    real = np.c_[np.full(len(ref), np.nan), real]
    traj = [(int(st), g[:, k].mean(), p[:, k].mean(), np.nanmean(real[:, k]) if k else np.nan,
             g[:, k].min(), g[:, k].max()) for k, st in enumerate(res.steps)]
    final = res.final_reward / ref
    order = np.argsort(final)
    cdf = [(float(final[j]), (i + 1) / len(final), int(j), float(ref[j]), float(cdns[j] / ref[j]))
           for i, j in enumerate(order)]
    stem = f"beta_{c.scenario}_psi{c.psi:g}"
    return {
        stem + "_trajectory": Table(("step", "greedy", "policy", "realized", "greedy_min",
                                     "greedy_max"), traj, meta),
        stem + "_final": Table(("normalized_reward", "cdf", "run", "reward_libra",
                                "cdns_normalized"), cdf, meta),
    }


def _believed_libra(psi, believed_means, step):
    s = Scenario(tuple(chi_square_2_scaled(m) for m in believed_means), psi)
    prof, _ = libra(s, step=step)
    return s, prof


def _applied(scenario, believed, prof, nodes, apply):
    """Profile that results when ``nodes`` follow thresholds from ``believed``."""
    nodes = np.atleast_1d(nodes)
    if apply == "quantile":
        return np.asarray(prof, dtype=float)[nodes]
    return np.array([float(scenario.dists[k].cdf(believed.dists[k].value_threshold(prof[k])))
                     for k in nodes])


def robustness_episode(scenario, means, eta, rng, step=1e-3, apply="quantile"):
    """Rewards of LIBRA with exact, shared and per-node beliefs on the means.

    Believed means are uniform within ``eta`` of the truth.  In the shared
    case every node runs LIBRA on the same belief vector; in the individual
    case node ``m`` runs it on its own vector and keeps only its threshold.
    ``apply="quantile"`` has each node use the computed quantile threshold on
    its own value stream; ``"value"`` keeps the value-space threshold instead.
    """
    if apply not in ("quantile", "value"):
        raise ValueError("apply is 'quantile' or 'value'")
    n, psi = scenario.n, scenario.psi
    ideal, _ = libra(scenario, step=step)
    everyone = np.arange(n)
    sb, sp = _believed_libra(psi, rng.uniform(means - eta, means + eta), step)
    shared = _applied(scenario, sb, sp, everyone, apply)
    indiv = np.empty(n)
    for m in range(n):
        b, p = _believed_libra(psi, rng.uniform(means - eta, means + eta), step)
        indiv[m] = _applied(scenario, b, p, m, apply)[0]
    return {k: expected_reward_threshold(p, scenario)
            for k, p in (("ideal", ideal), ("shared", shared), ("individual", indiv))}


def run_robustness(config):
    """LIBRA gains over the best canonical DNS under noisy knowledge of means."""
    c = config.resolved()
    rows = []
    for ep, rng in enumerate(_episode_rngs(c.seed, c.episodes)):
        s, means = asymmetric_scenario(c.nodes, c.nu, c.psi, rng)
        _, _, r_cdns = best_cdns(s)
        r = robustness_episode(s, means, c.eta, rng, c.step, c.apply)
        rows.append((ep, r["ideal"] / r_cdns, r["shared"] / r_cdns, r["individual"] / r_cdns,
                     r_cdns))
    cols = ("episode", "gain_ideal", "gain_shared", "gain_individual", "reward_cdns")
    return {f"robustness_psi{c.psi:g}_nu{c.nu:g}_eta{c.eta:g}": Table(cols, rows, _meta(c))}


RUNNERS = {
    "toy": run_toy,
    "basins": run_basins,
    "symmetric": run_symmetric,
    "asymmetric": run_asymmetric,
    "beta": run_beta,
    "robustness": run_robustness,
}
