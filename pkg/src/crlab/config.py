"""Scenario configuration files (YAML, one section per module)."""

from __future__ import annotations

import hashlib
import math
from importlib import resources
from pathlib import Path
from typing import Optional

import yaml

from .channel import MarkovChannelModel
from .errors import ConfigError
from .relay import RelayLink
from .sensing import SensorProfile
from .simulator import ScenarioConfig
from .access import Strategy
from .solver import SolverOptions
from .video import StreamScenario, VideoModel

PACKAGED = {
    "table2_relay": "table2_relay.yaml",
    "table2_relay_links": "table2_relay_links.yaml",
    "single-channel": "ia_single_channel.yaml",
    "multi-nobond": "ia_multi_nobond.yaml",
    "bonding": "ia_bonding.yaml",
}


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0) / 1000.0


def packaged_config_path(name: str) -> Path:
    if name not in PACKAGED:
        raise ConfigError(f"no packaged config named {name!r}; "
                          f"choices: {sorted(PACKAGED)}")
    return Path(resources.files("crlab").joinpath("configs", PACKAGED[name]))


def load_config(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise ConfigError(f"invalid YAML in {path}{where}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must be a mapping of sections")
    return data


def config_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _section(cfg: dict, name: str) -> dict:
    sect = cfg.get(name)
    if not isinstance(sect, dict):
        raise ConfigError(f"missing or malformed section [{name}]")
    return sect


def _get(sect: dict, section: str, key: str, kind=float, default=None):
    if key not in sect:
        if default is not None:
            return default
        raise ConfigError(f"missing key {section}.{key}")
    try:
        return kind(sect[key])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for {section}.{key}: {sect[key]!r}") from exc


def _channel_model(cfg: dict) -> tuple[MarkovChannelModel, float]:
    sect = _section(cfg, "channel")
    switching = _get(sect, "channel", "switching", float, 0.5)
    if "lambda" in sect or "mu" in sect:
        lam = _get(sect, "channel", "lambda")
        mu = _get(sect, "channel", "mu")
        return MarkovChannelModel.from_rates(lam, mu), switching
    eta = _get(sect, "channel", "eta")
    return MarkovChannelModel.from_utilization(eta, switching), switching


def relay_scenario(cfg: dict, seeds: list[int]) -> ScenarioConfig:
    """Build the relay-study scenario from a parsed config mapping."""
    model, switching = _channel_model(cfg)
    sensing = _section(cfg, "sensing")
    n_sensors = _get(sensing, "sensing", "sensors_per_channel", int)
    profile = SensorProfile(_get(sensing, "sensing", "false_alarm"),
                            _get(sensing, "sensing", "miss_detection"))
    gamma = _get(_section(cfg, "access"), "access", "gamma")
    sim = _section(cfg, "simulator")
    m_count = _get(sim, "simulator", "n_channels", int)
    n_links = _get(sim, "simulator", "n_links", int)

    relay = _section(cfg, "relay")
    rates = relay.get("decode_rates", {})
    mode = rates.get("mode", "links")
    links = None
    override = None
    if mode == "equalized":
        df_af = _get(rates, "relay.decode_rates", "df_af")
        dl = _get(rates, "relay.decode_rates", "dl")
        override = {Strategy.DF: df_af, Strategy.AF: df_af, Strategy.DL: dl}
    elif mode == "links":
        link = RelayLink(
            p_s=dbm_to_watts(_get(relay, "relay", "tx_power_dbm")),
            p_r=dbm_to_watts(_get(relay, "relay", "relay_power_dbm")),
            noise_relay=_get(relay, "relay", "noise_relay_w"),
            noise_dest=_get(relay, "relay", "noise_dest_w"),
            mean_g0=_get(relay, "relay", "mean_gain_direct"),
            mean_g1=_get(relay, "relay", "mean_gain_hop1"),
            mean_g2=_get(relay, "relay", "mean_gain_hop2"),
            kappa=_get(relay, "relay", "decode_threshold"))
        links = [link] * n_links
    else:
        raise ConfigError(f"relay.decode_rates.mode must be 'equalized' or 'links', "
                          f"got {mode!r}")

    return ScenarioConfig(
        models=[model] * m_count,
        sensors=[[profile] * n_sensors] * m_count,
        gamma=gamma,
        n_links=n_links,
        packet_bits=_get(sim, "simulator", "packet_bits"),
        slot_seconds=_get(sim, "simulator", "slot_seconds"),
        horizon_slots=_get(sim, "simulator", "horizon_slots", int),
        seeds=list(seeds),
        links=links,
        decode_override=override,
        switching=switching)


def stream_scenario(cfg: dict) -> StreamScenario:
    """Build the streaming-study scenario from a parsed config mapping."""
    model, switching = _channel_model(cfg)
    sensing = _section(cfg, "sensing")
    gamma = _get(_section(cfg, "access"), "access", "gamma")
    ia_sect = _section(cfg, "ia")
    vid = _section(cfg, "video")
    sequences = vid.get("sequences")
    if not isinstance(sequences, list) or not sequences:
        raise ConfigError("video.sequences must be a non-empty list")
    n_users = _get(ia_sect, "ia", "n_users", int)
    videos = []
    for j in range(n_users):
        entry = sequences[j % len(sequences)]
        videos.append(VideoModel(alpha=float(entry["alpha_db"]),
                                 beta=float(entry["beta_db_per_mbps"]),
                                 name=str(entry.get("name", f"seq{j}"))))
    solver_sect = cfg.get("solver", {})
    options = SolverOptions(
        conv_tol=float(solver_sect.get("conv_tol", 1e-4)),
        inner_tol=float(solver_sect.get("inner_tol", 1e-6)),
        inner_cap=int(solver_sect.get("inner_cap", 4000)),
        max_outer=int(solver_sect.get("max_outer", 3000)),
        step0=float(solver_sect.get("step0", 1e-2)))
    n_transmitters = _get(ia_sect, "ia", "n_transmitters", int)
    return StreamScenario(
        n_users=n_users,
        n_transmitters=n_transmitters,
        n_channels=_get(ia_sect, "ia", "n_channels", int),
        eta=model.eta,
        gamma=gamma,
        videos=videos,
        gop_slots=_get(vid, "video", "gop_slots", int, 10),
        bandwidth_hz=_get(ia_sect, "ia", "bandwidth_hz"),
        noise_power=_get(ia_sect, "ia", "noise_power_w"),
        p_max=_get(ia_sect, "ia", "p_max_w"),
        gain_mean_power=_get(ia_sect, "ia", "gain_mean_power", float, 1.0),
        mode=str(ia_sect.get("mode", "single")),
        switching=switching,
        sensors_per_channel=int(sensing.get("sensors_per_channel", n_transmitters)),
        false_alarm=_get(sensing, "sensing", "false_alarm"),
        miss_detection=_get(sensing, "sensing", "miss_detection"),
        solver_options=options)
