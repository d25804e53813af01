"""Named experiment suites.

Each suite returns plot-ready CSV rows, a JSON-able summary and a list of
threshold checks; a failed check makes the CLI exit nonzero.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np

from ..core import default_params
from ..ransim.engine import EventTrace, run_scenario
from ..ransim.presets import (
    MUE_RATE_HZ,
    TUNING_VARIANTS,
    LAB_POSITIONS,
    aging_scenario,
    attack_scenario,
    benign_burst_scenario,
    benign_only_scenario,
    build_preset,
    depletion_scenario,
    stability_scenario,
)
from .metrics import aggregate, depletion_time
from .sweep import run_outcomes


@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {self.detail}"


@dataclass
class SuiteResult:
    name: str
    rows: List[Dict[str, Any]]
    summary: Dict[str, Any]
    checks: List[Check] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {"suite": self.name, "passed": self.passed, "summary": self.summary,
                "checks": [c.__dict__ for c in self.checks]}


def linear_fit(x: Sequence[float], y: Sequence[float]):
    """Least-squares line; returns (slope, intercept, r2)."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot else 1.0
    return float(slope), float(intercept), r2


# -- fig7: depletion vs pool size ---------------------------------------------------

def fig7(n_seeds: int = 10, max_ues: Sequence[int] = (16, 32, 48, 64)) -> SuiteResult:
    rows = []
    for max_ue in max_ues:
        for seed in range(n_seeds):
            config = depletion_scenario(seed, max_ue=max_ue)
            rows.append({"max_ue": max_ue, "seed": seed,
                         "depletion_ms": depletion_time(run_scenario(config), config)})
    missing = [r for r in rows if r["depletion_ms"] is None]
    x = [r["max_ue"] for r in rows if r["depletion_ms"] is not None]
    y = [r["depletion_ms"] for r in rows if r["depletion_ms"] is not None]
    slope, intercept, r2 = linear_fit(x, y)
    means = {m: float(np.mean([r["depletion_ms"] for r in rows if r["max_ue"] == m
                               and r["depletion_ms"] is not None])) for m in max_ues}
    gap = 1000.0 / MUE_RATE_HZ
    summary = {"slope_ms_per_ue": slope, "intercept_ms": intercept, "r2": r2,
               "mean_depletion_ms": means}
    checks = [
        Check("every run depletes", not missing, f"{len(missing)} runs without depletion"),
        Check("linear fit R2 > 0.99", r2 > 0.99, f"R2={r2:.5f}"),
        Check("intercept within one inter-arrival", abs(intercept) <= gap,
              f"intercept={intercept:.1f} ms, bound {gap:.1f} ms"),
    ]
    if 16 in means:
        checks.append(Check("max_ue=16 depletion in [300, 380] ms",
                            300 <= means[16] <= 380, f"mean={means[16]:.1f} ms"))
    return SuiteResult("fig7", rows, summary, checks)


# -- fig9: aging trajectories ---------------------------------------------------------

@dataclass
class TauTrajectory:
    delta_ms: int
    entry_id: Optional[int]
    points: List[tuple]  # (t, tau_ms, c) after every reinforcement
    removed_at: Optional[int]
    attack_stop: int

    @property
    def final_tau(self) -> Optional[int]:
        return self.points[-1][1] if self.points else None

    @property
    def last_refresh(self) -> Optional[int]:
        return self.points[-1][0] if self.points else None

    def saturated_at(self, tau_max: int) -> Optional[int]:
        for t, tau, _ in self.points:
            if tau >= tau_max:
                return t
        return None

    def non_decreasing(self) -> bool:
        taus = [tau for _, tau, _ in self.points]
        return all(a <= b for a, b in zip(taus, taus[1:]))


def tau_trajectory(trace: EventTrace, delta_ms: int, attack_stop: int) -> TauTrajectory:
    """Follow the first block-list entry through every control and its removal."""
    entry_id = None
    points = []
    for e in trace.of("control"):
        for entry in e["blocklist"]:
            if entry_id is None:
                entry_id = entry["id"]
            if entry["id"] == entry_id and entry["t_last"] == e["t"]:
                points.append((e["t"], entry["tau_ms"], entry["c"]))
    removed = trace.first("entry_expired", entry=entry_id) if entry_id is not None else None
    return TauTrajectory(delta_ms, entry_id, points, removed["t"] if removed else None,
                         attack_stop)


def fig9(deltas: Sequence[int] = (100, 250, 500, 1000), attack_ms: int = 30_000,
         tau_max_ms: int = 10_000, seed: int = 0) -> SuiteResult:
    rows, trajectories = [], []
    params = default_params()
    slack = params.window_ms + 10  # last refresh lands after the last attack window closes
    for delta in deltas:
        config = aging_scenario(seed, delta_ms=delta, attack_ms=attack_ms, tau_max_ms=tau_max_ms)
        traj = tau_trajectory(run_scenario(config), delta, config.attack_stop_ms)
        trajectories.append(traj)
        start = config.attack_start_ms
        rows += [{"delta_ms": delta, "t_ms": t - start, "tau_ms": tau, "c": c}
                 for t, tau, c in traj.points]
        if traj.removed_at is not None:
            rows.append({"delta_ms": delta, "t_ms": traj.removed_at - start, "tau_ms": 0,
                         "c": None})
    summary = {str(tr.delta_ms): {
        "final_tau_ms": tr.final_tau,
        "saturated_at_ms": tr.saturated_at(tau_max_ms),
        "removed_after_stop_ms": (tr.removed_at - tr.attack_stop
                                  if tr.removed_at is not None else None),
        "refreshes": len(tr.points)} for tr in trajectories}
    largest = max(trajectories, key=lambda tr: tr.delta_ms)
    sat = largest.saturated_at(tau_max_ms)
    checks = [Check(f"delta={largest.delta_ms} saturates at tau_max during the attack",
                    sat is not None and sat < largest.attack_stop, f"saturated at {sat}")]
    for tr in trajectories:
        checks.append(Check(f"delta={tr.delta_ms} tau non-decreasing",
                            bool(tr.points) and tr.non_decreasing(),
                            f"{len(tr.points)} refreshes"))
        ok = (tr.removed_at is not None
              and tr.removed_at - tr.last_refresh == tr.final_tau
              and tr.removed_at - tr.attack_stop <= tr.final_tau + slack)
        checks.append(Check(f"delta={tr.delta_ms} removed within tau_final after stop", ok,
                            f"removed {summary[str(tr.delta_ms)]['removed_after_stop_ms']} ms "
                            f"after stop, tau_final={tr.final_tau}"))
    return SuiteResult("fig9", rows, summary, checks)


# -- table4: scenario suite ---------------------------------------------------------------

def table4(n_seeds: int = 12, positions: Sequence[str] = ("VUE-P1", "VUE-P2", "VUE-P3",
                                                           "VUE-P4", "VUE-P5")) -> SuiteResult:
    rows, checks = [], []
    benign = run_outcomes(benign_only_scenario, range(n_seeds))
    for label, preset in (("1 static VUE, 1 static MUE", "attack-1mue"),
                          ("1 static VUE, 2 static MUE", "attack-2mue"),
                          ("1 static VUE, 1 mobile MUE", "attack-mobile-mue")):
        attack = run_outcomes(lambda s, p=preset: build_preset(p, s), range(n_seeds))
        table = aggregate(attack + benign)
        rows.append(table.row(scenario=label, runs=n_seeds))
        checks.append(Check(f"{label}: TP >= 80%", table.tp_rate >= 0.8,
                            f"TP={table.tp_rate:.2f}"))
        checks.append(Check(f"{label}: FP = 0", table.fp == 0, f"FP={table.fp}"))
    dyn = default_params().replace(t3_mode="dynamic")
    mobile = []
    for pos in positions:
        mobile += run_outcomes(lambda s, v=pos: attack_scenario(
            s, n_mue=2, vue=v, params=dyn, name="mobile-vue"), range(n_seeds))
    table = aggregate(mobile)
    avg = float(np.mean([table.success_rate[p] for p in positions]))
    rows.append(table.row(scenario="1 mobile VUE, 2 static MUEs", runs=n_seeds,
                          success_average=avg))
    checks.append(Check("mobile VUE: average first-attempt success >= 50%", avg >= 0.5,
                        f"average={avg:.2f}"))
    return SuiteResult("table4", rows, {"rows": rows}, checks)


# -- table5: parameter fine-tuning ------------------------------------------------------

def table5(n_seeds: int = 20, victim: str = "VUE-P8") -> SuiteResult:
    """E1-E7 on attack runs (victim within E3's widened RSSI box), benign bursts and benign-only runs."""
    rows, tables = [], {}
    for name, knobs in TUNING_VARIANTS.items():
        params = default_params().replace(**knobs)
        attack = aggregate(run_outcomes(
            lambda s: attack_scenario(s, vue=victim, params=params), range(n_seeds)))
        burst = aggregate(run_outcomes(
            lambda s: benign_burst_scenario(s, params=params), range(n_seeds)))
        quiet = aggregate(run_outcomes(
            lambda s: benign_only_scenario(s, params=params), range(n_seeds)))
        total = n_seeds * 3
        accuracy = (attack.tp + burst.tn + quiet.tn) / total
        tables[name] = (attack, burst, quiet)
        rows.append({"config": name, **knobs, "tp_rate": attack.tp_rate,
                     "fn_rate": attack.fn_rate, "cbr": attack.cbr,
                     "fp_rate_burst": burst.fp_rate, "fp_rate_benign": quiet.fp_rate,
                     "accuracy": accuracy, "mean_response_ms": attack.mean_response_ms})
    acc = {r["config"]: r["accuracy"] for r in rows}
    e1a, e1b, e1q = tables["E1"]
    cbr = lambda t: t.cbr if t.cbr is not None else 0.0
    checks = [
        Check("E1 TP 100%, FP 0%", e1a.tp_rate == 1.0 and e1b.fp == 0 and e1q.fp == 0,
              f"TP={e1a.tp_rate}, FP={e1b.fp + e1q.fp}"),
        Check("E1 best accuracy", acc["E1"] >= max(acc.values()), f"{acc}"),
        Check("E2 FN > E1 FN", tables["E2"][0].fn_rate > e1a.fn_rate,
              f"{tables['E2'][0].fn_rate} vs {e1a.fn_rate}"),
        Check("E3 CBR > E1 CBR", cbr(tables["E3"][0]) > cbr(e1a),
              f"{tables['E3'][0].cbr} vs {e1a.cbr}"),
        Check("E6 FP >= 50% on benign bursts", tables["E6"][1].fp_rate >= 0.5,
              f"{tables['E6'][1].fp_rate}"),
    ]
    for name in ("E5", "E7"):
        checks.append(Check(f"{name} FN >= 50%", tables[name][0].fn_rate >= 0.5,
                            f"{tables[name][0].fn_rate}"))
    return SuiteResult("table5", rows, {"rows": rows}, checks)


# -- table6: fingerprint stability -------------------------------------------------------

def table6(attempts: int = 200, seed: int = 0) -> SuiteResult:
    rows, checks = [], []
    for position, (ta, rssi, sigma) in LAB_POSITIONS.items():
        trace = run_scenario(stability_scenario(seed, position, attempts=attempts))
        tas = np.array([e["ta"] for e in trace.of("msg3")], float)
        rss = np.array([e["rssi"] for e in trace.of("msg3")], float)
        row = {"position": position, "ta_mean": tas.mean(), "rssi_mean": rss.mean(),
               "rssi_sigma": rss.std(ddof=1), "lab_ta": ta, "lab_rssi": rssi,
               "lab_sigma": sigma}
        rows.append(row)
        # sigma tolerance: ~4 standard errors of the estimate at this sample size
        sig_tol = 0.2 + 4 * sigma / np.sqrt(2 * (len(rss) - 1))
        ok = (abs(row["ta_mean"] - ta) <= 0.5 and abs(row["rssi_mean"] - rssi) <= 1.0
              and abs(row["rssi_sigma"] - sigma) <= sig_tol)
        checks.append(Check(f"{position} within tolerance", ok,
                            f"TA {row['ta_mean']:.2f}/{ta}, RSSI {row['rssi_mean']:.2f}/{rssi}, "
                            f"sigma {row['rssi_sigma']:.2f}/{sigma}"))
    return SuiteResult("table6", rows, {"rows": rows}, checks)


SUITES: Dict[str, Callable[..., SuiteResult]] = {
    "fig7": fig7, "fig9": fig9, "table4": table4, "table5": table5, "table6": table6,
}
