"""Run configuration: a flat key-value document with section headers.

The format is plain INI (diffable, no schema engine); paths are resolved
relative to the config file. Stress scenarios live in ``[scenario:<name>]``
sections, either bump scenarios (``core``/``shifts``/``propagation``) or
worst-case ellipsoid scenarios (``kind = ellipsoid`` with ``factors`` and
``radius``).
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path

from ._util import config_digest
from .errors import ConfigError
from .nnet.clustered import ClusteredAeSpec
from .nnet.network import Activation
from .nnet.train import TrainConfig
from .panel import WindowSpec
from .stress import Propagation

MODEL_KINDS = ("pca", "clustered-pca", "clustered-ae")


@dataclass(frozen=True)
class BumpScenarioConfig:
    name: str
    core_labels: tuple[str, ...]
    shifts: tuple[float, ...]
    propagation: Propagation


@dataclass(frozen=True)
class EllipsoidScenarioConfig:
    name: str
    factor_labels: tuple[str, ...]
    radius: float
    propagation: Propagation


@dataclass(frozen=True)
class RunConfig:
    factor_panel: Path
    asset_panel: Path | None
    categories: Path | None
    weights: Path | None
    factor_input: str
    asset_input: str
    returns_method: str
    window: WindowSpec
    heatmap_pcs: int
    model_kind: str
    k: int
    ae_spec: ClusteredAeSpec
    train: TrainConfig
    calibration_window: int
    out_dir: Path
    seed: int
    scenarios: tuple[BumpScenarioConfig | EllipsoidScenarioConfig, ...]
    digest: str
    raw_text: str = field(repr=False, default="")

    @property
    def stamp(self) -> str:
        return f"config={self.digest} seed={self.seed}"


def _get(section, key, default=None, required=False, parse=str):
    if section is None or key not in section:
        if required:
            raise ConfigError(f"missing required config key {key!r}")
        return default
    raw = section[key].strip()
    try:
        return parse(raw)
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"bad value for {key!r}: {raw!r} ({exc})") from exc


def _parse_bool(raw: str) -> bool:
    low = raw.lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ValueError("expected a boolean")


def _parse_activation(raw: str) -> Activation:
    return Activation(raw.lower())


def _parse_list(raw: str) -> tuple[str, ...]:
    items = tuple(part.strip() for part in raw.split(",") if part.strip())
    if not items:
        raise ValueError("expected a comma-separated list")
    return items


def _parse_optional_int(raw: str):
    return None if raw.lower() in ("none", "off") else int(raw)


def _parse_optional_float(raw: str):
    return None if raw.lower() in ("none", "off") else float(raw)


def load_config(path, out_override=None, seed_override: int | None = None) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file {path} does not exist")
    text = path.read_text()
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str  # labels are case-sensitive
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config: {exc}") from exc

    def section(name):
        return parser[name] if parser.has_section(name) else None

    inputs = section("inputs")
    if inputs is None:
        raise ConfigError("missing [inputs] section")
    base = path.parent

    def _path(key, required=False):
        raw = _get(inputs, key, required=required)
        return None if raw is None else (base / raw)

    out = section("output")
    seed = seed_override if seed_override is not None \
        else _get(out, "seed", default=0, parse=int)
    out_dir = Path(out_override) if out_override is not None \
        else base / _get(out, "dir", default="out")

    panel_sec = section("panel")
    window = WindowSpec(
        width=_get(panel_sec, "window_width", default=250, parse=int),
        stride=_get(panel_sec, "window_stride", default=1, parse=int),
        month_end=_get(panel_sec, "month_end", default=False, parse=_parse_bool),
    )

    model_sec = section("model")
    kind = _get(model_sec, "kind", default="clustered-pca")
    if kind not in MODEL_KINDS:
        raise ConfigError(f"model kind must be one of {MODEL_KINDS}, got {kind!r}")
    ae_spec = ClusteredAeSpec(
        encoder_hidden=_get(model_sec, "encoder_hidden", default=10, parse=int),
        encoder_activation=_get(model_sec, "encoder_activation",
                                default=Activation.SWISH, parse=_parse_activation),
        decoder_hidden=_get(model_sec, "decoder_hidden", default=60, parse=int),
        decoder_activation=_get(model_sec, "decoder_activation",
                                default=Activation.SWISH, parse=_parse_activation),
    )

    train_sec = section("train")
    train = TrainConfig(
        max_epochs=_get(train_sec, "max_epochs", default=500, parse=int),
        batch_size=_get(train_sec, "batch_size", default=64, parse=int),
        step_size=_get(train_sec, "step_size", default=1e-3, parse=float),
        beta1=_get(train_sec, "beta1", default=0.9, parse=float),
        beta2=_get(train_sec, "beta2", default=0.999, parse=float),
        epsilon=_get(train_sec, "epsilon", default=1e-8, parse=float),
        l2=_get(train_sec, "l2", default=1e-4, parse=float),
        validation_fraction=_get(train_sec, "validation_fraction", default=0.2,
                                 parse=_parse_optional_float),
        patience=_get(train_sec, "patience", default=25,
                      parse=_parse_optional_int),
        seed=seed,
    )

    scenarios = []
    for name in parser.sections():
        if not name.startswith("scenario:"):
            continue
        sec = parser[name]
        short = name.split(":", 1)[1]
        if _get(sec, "kind", default="bump") == "ellipsoid":
            scenarios.append(EllipsoidScenarioConfig(
                short,
                _get(sec, "factors", required=True, parse=_parse_list),
                _get(sec, "radius", default=2.0, parse=float),
                _get(sec, "propagation", default=Propagation.NONE,
                     parse=Propagation),
            ))
        else:
            core = _get(sec, "core", required=True, parse=_parse_list)
            shifts = _get(sec, "shifts", default=None)
            if shifts is None:
                shift_values = tuple(-2.0 for _ in core)
            else:
                shift_values = tuple(float(s) for s in shifts.split(","))
            scenarios.append(BumpScenarioConfig(
                short, core, shift_values,
                _get(sec, "propagation", default=Propagation.CONDITIONAL_GAUSSIAN,
                     parse=Propagation),
            ))
    scenarios.sort(key=lambda s: s.name)

    digest = config_digest(f"{text}\nseed={seed}")
    return RunConfig(
        factor_panel=_path("factor_panel", required=True),
        asset_panel=_path("asset_panel"),
        categories=_path("categories"),
        weights=_path("weights"),
        factor_input=_get(inputs, "factor_input", default="returns"),
        asset_input=_get(inputs, "asset_input", default="returns"),
        returns_method=_get(panel_sec, "returns_method", default="log"),
        window=window,
        heatmap_pcs=_get(panel_sec, "heatmap_pcs", default=6, parse=int),
        model_kind=kind,
        k=_get(model_sec, "k", default=6, parse=int),
        ae_spec=ae_spec,
        train=train,
        calibration_window=_get(section("calibrate"), "window", default=750,
                                parse=int),
        out_dir=out_dir,
        seed=seed,
        scenarios=tuple(scenarios),
        digest=digest,
        raw_text=text,
    )
