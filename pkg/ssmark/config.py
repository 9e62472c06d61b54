"""Run configuration: one JSON object per run, with named profiles."""
import dataclasses
import json
from typing import List, Optional

from ssmark.attacks import AttackSpec
from ssmark.bench import RAW_TARGET_BER
from ssmark.coding.convcode import ConvCodeSpec, get_conv_code
from ssmark.embedder import EmbedParams, GAIN_MODES
from ssmark.pn import WatermarkKey
from ssmark.wavelet import FAMILIES, WaveletSpec


# Quality factor sweep of the compression benchmark.
QF_SWEEP = (100, 75, 50, 35, 25, 5)


@dataclasses.dataclass
class RunConfig:
    wavelet: str = "db2"
    msk_max: float = 8.0
    tau: float = 0.06
    ll_share: float = 0.95
    max_gain: float = 64.0
    key: int = 20240601
    conv_code: str = "k7_standard"
    gain_mode: str = "compensated"
    uniform_alpha: float = 0.05
    repair_passes: int = 8
    # Expected clean BER of the uncoded bench baseline.
    raw_target_ber: float = RAW_TARGET_BER
    # [kind, strength, seed] triples
    attacks: List[list] = dataclasses.field(
        default_factory=lambda: [["quantize", float(qf), 0] for qf in QF_SWEEP])

    def __post_init__(self):
        self.msk_max = float(self.msk_max)
        self.tau = float(self.tau)
        self.ll_share = float(self.ll_share)
        self.max_gain = float(self.max_gain)
        self.uniform_alpha = float(self.uniform_alpha)
        self.raw_target_ber = float(self.raw_target_ber)
        self.attacks = [AttackSpec.from_list(a).to_list() for a in self.attacks]
        self.validate()

    def validate(self):
        if self.wavelet not in FAMILIES:
            raise ValueError(f"Invalid wavelet: {self.wavelet}")
        if self.gain_mode not in GAIN_MODES:
            raise ValueError(f"Invalid gain mode: {self.gain_mode}")
        get_conv_code(self.conv_code)
        if not 0 < self.raw_target_ber < 0.5:
            raise ValueError(f"raw_target_ber must lie in (0, 0.5), "
                             f"got {self.raw_target_ber}")
        self.embed_params()

    def embed_params(self) -> EmbedParams:
        return EmbedParams(key=WatermarkKey(self.key),
                           wavelet=WaveletSpec(self.wavelet),
                           msk_max=self.msk_max, tau=self.tau,
                           ll_share=self.ll_share,
                           max_gain=self.max_gain, gain_mode=self.gain_mode,
                           uniform_alpha=self.uniform_alpha,
                           repair_passes=self.repair_passes)

    def conv_spec(self) -> ConvCodeSpec:
        return get_conv_code(self.conv_code)

    def wavelet_spec(self) -> WaveletSpec:
        return WaveletSpec(self.wavelet)

    def attack_specs(self) -> List[AttackSpec]:
        return [AttackSpec.from_list(a) for a in self.attacks]

    def to_json(self) -> str:
        """Canonical form: sorted keys, two space indent."""
        return json.dumps(dataclasses.asdict(self), sort_keys=True, indent=2)

    @classmethod
    def from_dict(cls, obj: dict):
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(obj) - names)
        if unknown:
            raise ValueError(f"unknown config fields: {unknown}")
        return cls(**obj)

    @classmethod
    def from_json(cls, text: str):
        return cls.from_dict(json.loads(text))


PROFILES = {
    "defaults": {},
    # Compression sweep of the ECC benchmark with a few noise points.
    "qf_sweep": {
        "attacks": ([["quantize", float(qf), 0] for qf in QF_SWEEP] +
                    [["awgn", sigma, 7] for sigma in (1.0, 2.0, 5.0)]),
    },
}


def load_config(path: Optional[str] = None, profile: str = "defaults",
                **overrides) -> RunConfig:
    """Profile values, then the file at `path`, then non-None overrides."""
    if profile not in PROFILES:
        raise ValueError(f"Invalid profile: {profile}. "
                         f"Choose from {sorted(PROFILES)}")
    values = dict(PROFILES[profile])
    if path is not None:
        with open(path) as f:
            values.update(json.load(f))
    values.update({k: v for k, v in overrides.items() if v is not None})
    return RunConfig.from_dict(values)
