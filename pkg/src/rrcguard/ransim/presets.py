"""Named scenario builders.

Static positions are calibrated to fixed reference fingerprints (TA in
samples, RSSI mean and short-term sigma in dB). Every builder is a pure
function of its seed.
"""

from __future__ import annotations

import math
from typing import Callable, Dict, Optional, Tuple

import numpy as np

from ..core import AlgorithmParams, default_params
from .config import ScenarioConfig
from .model import Behavior, GnbModel, UeProfile
from .radio import RadioModel, place_for_fingerprint

# name -> (mean TA [samples], mean RSSI [dBm], RSSI sigma [dB])
LAB_POSITIONS: Dict[str, Tuple[float, float, float]] = {
    "MUE-P0": (32.0, -41.0, 0.0),
    "VUE-P1": (31.1, -49.7, 3.2),
    "VUE-P2": (31.0, -56.4, 4.4),
    "VUE-P3": (31.0, -52.6, 1.2),
    "VUE-P4": (30.9, -53.6, 1.8),
    "VUE-P5": (30.9, -54.8, 1.0),
    "VUE-P6": (31.0, -46.7, 3.7),
    "VUE-P7": (31.2, -55.0, 0.0),
    "VUE-P8": (31.1, -47.5, 1.3),
}
# second attacker for the two-MUE scenarios: farther out (2 TA samples) and 3 dB weaker
SECOND_MUE = (34.0, -44.0)

MUE_RATE_HZ = 45.7
# per attacker; two of them send ~51 MSG3/s combined
TWO_MUE_RATE_HZ = 25.6
ATTACK_MS = 3000

TUNING_VARIANTS: Dict[str, Dict[str, float]] = {
    "E1": dict(eps_rssi=4, eps_ta=1, t1=3, t2=0.25),
    "E2": dict(eps_rssi=1, eps_ta=1, t1=3, t2=0.25),
    "E3": dict(eps_rssi=10, eps_ta=1, t1=3, t2=0.25),
    "E4": dict(eps_rssi=4, eps_ta=1, t1=1, t2=0.25),
    "E5": dict(eps_rssi=4, eps_ta=1, t1=10, t2=0.25),
    "E6": dict(eps_rssi=4, eps_ta=1, t1=1, t2=1.0),
    "E7": dict(eps_rssi=4, eps_ta=1, t1=10, t2=1.0),
}


def static_ue(ue_id: str, behavior: Behavior, spot: Tuple[float, float], radio: RadioModel,
              sigma: Optional[float] = None, bearing_deg: float = 0.0, **kw) -> UeProfile:
    x, y, offset = place_for_fingerprint(radio, spot[0], spot[1], bearing_deg=bearing_deg)
    return UeProfile(id=ue_id, behavior=behavior, position_track=[(0, x, y)],
                     tx_power_offset_db=offset, rssi_sigma_db=sigma, **kw)


def _rng(seed: int, salt: int) -> np.random.Generator:
    return np.random.default_rng([seed, salt])


def _attack_start(rng: np.random.Generator, params: AlgorithmParams) -> int:
    # random phase of the attack against the window grid
    return 200 + int(rng.integers(0, params.window_ms))


def attack_scenario(seed: int, n_mue: int = 1, vue: Optional[str] = "VUE-P3",
                    mobile_mue: bool = False, params: Optional[AlgorithmParams] = None,
                    closed_loop: bool = True, max_ue: int = 16,
                    attack_ms: int = ATTACK_MS, tail_ms: int = 1000,
                    mue_rate_hz: Optional[float] = None,
                    name: str = "attack") -> ScenarioConfig:
    params = params or default_params()
    radio = RadioModel()
    rng = _rng(seed, 0xA7)
    start = _attack_start(rng, params)
    rate = mue_rate_hz or (MUE_RATE_HZ if n_mue == 1 else TWO_MUE_RATE_HZ)
    stop = start + attack_ms
    ues = []
    mue = static_ue("mue0", Behavior.MALICIOUS, LAB_POSITIONS["MUE-P0"][:2], radio,
                    msg3_rate_hz=rate, start_ms=start, stop_ms=stop, label="MUE-P0")
    if mobile_mue:
        # walks away from the gNB at 1 m/s: ~3 dB RSSI drop, TA 31 -> 32
        mue.position_track = [(start, 8.0, 0.0), (stop, 8.0 + attack_ms / 1000.0, 0.0)]
    ues.append(mue)
    if n_mue >= 2:
        ues.append(static_ue("mue1", Behavior.MALICIOUS, SECOND_MUE, radio, bearing_deg=90.0,
                             msg3_rate_hz=rate, start_ms=start, stop_ms=stop,
                             label="MUE-P0b"))
    vue_time = None
    if vue is not None:
        vue_time = start + int(rng.integers(300, attack_ms - 500))
        ues.append(static_ue("vue0", Behavior.BENIGN, LAB_POSITIONS[vue][:2], radio,
                             bearing_deg=180.0, attempt_times_ms=[vue_time], label=vue))
    return ScenarioConfig(
        name=name, seed=seed, duration_ms=stop + tail_ms,
        gnb=GnbModel(max_ue=max_ue), radio=radio, ues=ues, params=params,
        closed_loop=closed_loop,
    ).validate()


def benign_only_scenario(seed: int, params: Optional[AlgorithmParams] = None,
                         vue: str = "VUE-P3", span_ms: int = ATTACK_MS) -> ScenarioConfig:
    """The attack scenario's victim plus one attach at every lab position, no attacker."""
    params = params or default_params()
    radio = RadioModel()
    rng = _rng(seed, 0xB0)
    ues = [static_ue("vue0", Behavior.BENIGN, LAB_POSITIONS[vue][:2], radio, bearing_deg=180.0,
                     attempt_times_ms=[200 + int(rng.integers(300, span_ms - 500))], label=vue)]
    for i, name in enumerate(n for n in LAB_POSITIONS if n.startswith("VUE")):
        ues.append(static_ue(f"ue{i + 1}", Behavior.BENIGN, LAB_POSITIONS[name][:2], radio,
                             bearing_deg=20.0 * i,
                             attempt_times_ms=[200 + int(rng.integers(0, span_ms))],
                             label=name))
    return ScenarioConfig(name="benign-only", seed=seed, duration_ms=200 + span_ms + 1000,
                          radio=radio, ues=ues, params=params).validate()


def benign_burst_scenario(seed: int, n_ues: int = 10, params: Optional[AlgorithmParams] = None,
                          burst_window: int = 5) -> ScenarioConfig:
    """``n_ues`` co-located UEs (think: a bus entering the cell) attaching inside one window."""
    params = params or default_params()
    radio = RadioModel()
    rng = _rng(seed, 0xB5)
    w0 = burst_window * params.window_ms
    ta, rssi, _ = LAB_POSITIONS["VUE-P3"]
    ues = []
    # MSG3 lands 4 ms after MSG1; keep every MSG3 inside the burst window
    latest = params.window_ms - 10
    for i in range(n_ues):
        t = w0 + int(rng.integers(0, latest))
        ues.append(static_ue(f"ue{i}", Behavior.BENIGN, (ta, rssi + float(rng.normal(0, 1.0))),
                             radio, bearing_deg=float(rng.uniform(0, 360)),
                             attempt_times_ms=[t], label="burst"))
    return ScenarioConfig(name="benign-burst", seed=seed, duration_ms=w0 + 1000,
                          radio=radio, ues=ues, params=params).validate()


def depletion_scenario(seed: int, max_ue: int = 16,
                       params: Optional[AlgorithmParams] = None) -> ScenarioConfig:
    """Single attacker with the xApp disabled, long enough to exhaust ``max_ue`` slots."""
    params = params or default_params()
    attack_ms = int(math.ceil(max_ue * 1000.0 / MUE_RATE_HZ)) + 500
    return attack_scenario(seed, vue=None, params=params, closed_loop=False, max_ue=max_ue,
                           attack_ms=attack_ms, tail_ms=100, name=f"depletion-{max_ue}")


def aging_scenario(seed: int, delta_ms: int = 500, attack_ms: int = 30_000,
                   tau_max_ms: int = 10_000,
                   params: Optional[AlgorithmParams] = None) -> ScenarioConfig:
    params = (params or default_params()).replace(delta_ms=delta_ms, tau_max_ms=tau_max_ms)
    return attack_scenario(seed, vue=None, params=params, attack_ms=attack_ms,
                           tail_ms=tau_max_ms + 2 * params.window_ms + 500,
                           name=f"aging-{delta_ms}")


def stability_scenario(seed: int, position: str, attempts: int = 20,
                       spacing_ms: int = 150) -> ScenarioConfig:
    """One benign UE attaching repeatedly from a fixed lab position (per-position sigma)."""
    radio = RadioModel()
    ta, rssi, sigma = LAB_POSITIONS[position]
    ue = static_ue("ue0", Behavior.BENIGN, (ta, rssi), radio, sigma=sigma,
                   attempt_times_ms=[100 + i * spacing_ms for i in range(attempts)],
                   label=position)
    return ScenarioConfig(name=f"stability-{position}", seed=seed,
                          duration_ms=100 + attempts * spacing_ms + 200, radio=radio,
                          ues=[ue], closed_loop=False).validate()


PRESETS: Dict[str, Callable[[int], ScenarioConfig]] = {
    "attack-1mue": lambda seed: attack_scenario(seed, name="attack-1mue"),
    "attack-2mue": lambda seed: attack_scenario(
        seed, n_mue=2, params=default_params().replace(t3_mode="dynamic"), name="attack-2mue"),
    "attack-mobile-mue": lambda seed: attack_scenario(seed, mobile_mue=True,
                                                      name="attack-mobile-mue"),
    "benign-only": benign_only_scenario,
    "benign-burst": benign_burst_scenario,
    "depletion": depletion_scenario,
    "aging": aging_scenario,
}


def build_preset(name: str, seed: int) -> ScenarioConfig:
    try:
        builder = PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    return builder(seed)
