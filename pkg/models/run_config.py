"""
Configuração de uma execução: seções de modelo, treino e dados.

O arquivo de configuração é um documento KEY=VALUE (sintaxe dotenv) com as
seções achatadas por "__", ex.: MODEL__D=16, TRAIN__LR=0.001, SEED=7.
"""

import dataclasses
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

from forecaster.errors import ConfigurationError
from forecaster.utils.profile_config import profile_defaults, relative_decay_epochs

FUSION_TYPES = ("bilateral", "stack")
GEOMETRY_TYPES = ("straight", "arc", "fork")
PRECISIONS = ("float32", "float64")

D_M = 15
D_R = 3


@dataclass(frozen=True)
class ModelConfig:
    """Capacidades e chaves de ablação do modelo (EncoderConfig incluso)."""

    D: int = 16
    K: int = 3
    N_m: int = 16
    P_m: int = 9
    N_a: int = 7
    h: int = 10
    f: int = 15
    heads: int = 4
    bq_heads: int = 1
    fusion: str = "bilateral"
    use_relative_motions: bool = True
    use_map_topology: bool = True
    use_bilateral_query: bool = True
    use_reference_extractor: bool = True

    @property
    def T(self):
        return self.h + self.f

    @property
    def A(self):
        return self.N_a + 1

    @property
    def d_m(self):
        return D_M

    @property
    def d_r(self):
        return D_R

    def validate(self):
        for name in ("D", "K", "N_m", "P_m", "N_a", "h", "f", "heads", "bq_heads"):
            if getattr(self, name) <= 0:
                raise ConfigurationError(f"MODEL__{name} deve ser positivo (recebido {getattr(self, name)})")
        if self.K < 2:
            raise ConfigurationError("MODEL__K deve ser >= 2 (a margin loss exige ao menos duas modalidades)")
        if self.D % 2:
            raise ConfigurationError("MODEL__D deve ser par (embedding posicional senoidal)")
        if self.D % self.heads:
            raise ConfigurationError(f"MODEL__HEADS={self.heads} não divide D={self.D}")
        if self.D % self.bq_heads:
            raise ConfigurationError(f"MODEL__BQ_HEADS={self.bq_heads} não divide D={self.D}")
        if self.fusion not in FUSION_TYPES:
            raise ConfigurationError(f"MODEL__FUSION inválido: {self.fusion!r} (opções: {FUSION_TYPES})")
        return self


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 1e-3
    decay_epochs: Tuple[int, ...] = (400, 475)
    decay_factors: Tuple[float, ...] = (0.1, 0.1)
    epochs: int = 500
    batch_size: int = 32
    seed: int = 0
    use_couple_loss: bool = True
    use_capture_loss: bool = True
    margin: Optional[float] = None
    aux_weight: float = 0.1
    precision: str = "float32"

    def margin_for(self, K):
        """delta = 1/K quando não configurado."""
        return 1.0 / K if self.margin is None else self.margin

    def lr_at(self, epoch):
        lr = self.lr
        for decay_epoch, factor in zip(self.decay_epochs, self.decay_factors):
            if epoch >= decay_epoch:
                lr *= factor
        return lr

    def validate(self):
        if self.lr < 0:
            raise ConfigurationError("TRAIN__LR não pode ser negativo")
        if self.epochs < 0 or self.batch_size <= 0:
            raise ConfigurationError("TRAIN__EPOCHS >= 0 e TRAIN__BATCH_SIZE > 0 são obrigatórios")
        if len(self.decay_epochs) != len(self.decay_factors):
            raise ConfigurationError("TRAIN__DECAY_EPOCHS e TRAIN__DECAY_FACTORS precisam do mesmo tamanho")
        if self.precision not in PRECISIONS:
            raise ConfigurationError(f"TRAIN__PRECISION inválido: {self.precision!r}")
        return self


@dataclass(frozen=True)
class DataConfig:
    """Parâmetros do gerador sintético (ou caminho de um corpus existente)."""

    lanes: int = 2
    geometry: str = "straight"
    agents: int = 3
    noise: float = 0.2
    lane_width: float = 3.5
    half_width: float = 1.75
    point_spacing: float = 2.0
    segments_per_lane: int = 4
    branch_segments: int = 2
    speed_min: float = 4.0
    speed_max: float = 10.0
    dt: float = 0.1
    path: str = ""

    def validate(self):
        if self.lanes < 1 or self.agents < 1:
            raise ConfigurationError("DATA__LANES e DATA__AGENTS devem ser >= 1")
        if self.geometry not in GEOMETRY_TYPES:
            raise ConfigurationError(f"DATA__GEOMETRY inválido: {self.geometry!r} (opções: {GEOMETRY_TYPES})")
        if not 0 <= self.noise <= self.half_width:
            raise ConfigurationError("DATA__NOISE deve ficar entre 0 e DATA__HALF_WIDTH")
        if self.speed_min <= 0 or self.speed_max < self.speed_min:
            raise ConfigurationError("faixa de velocidade inválida")
        if self.segments_per_lane < 1 or self.point_spacing <= 0 or self.dt <= 0:
            raise ConfigurationError("geometria de faixa inválida")
        return self


@dataclass(frozen=True)
class GeneratorConfig:
    """Tudo o que o gerador precisa: dados + horizonte e capacidades."""

    data: DataConfig
    h: int
    f: int
    P_m: int
    N_m: int
    N_a: int

    @property
    def T(self):
        return self.h + self.f


@dataclass(frozen=True)
class RunConfig:
    model: ModelConfig = field(default_factory=ModelConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    data: DataConfig = field(default_factory=DataConfig)
    seed: int = 0

    SECTIONS = ("model", "train", "data")

    @classmethod
    def for_profile(cls, name=None, seed=0):
        """Config padrão de um perfil (desk, small, large)."""
        defaults = profile_defaults(name)
        model = ModelConfig(**{k: defaults[k] for k in ("D", "K", "N_m", "P_m", "N_a", "h", "f", "heads")})
        train = TrainConfig(
            lr=defaults["lr"],
            epochs=defaults["epochs"],
            batch_size=defaults["batch_size"],
            decay_epochs=tuple(defaults["decay_epochs"]),
            decay_factors=(0.1,) * len(defaults["decay_epochs"]),
            seed=seed,
        )
        return cls(model=model, train=train, data=DataConfig(), seed=seed)

    def generator_config(self):
        m = self.model
        return GeneratorConfig(data=self.data, h=m.h, f=m.f, P_m=m.P_m, N_m=m.N_m, N_a=m.N_a)

    def validate(self):
        self.model.validate()
        self.train.validate()
        self.data.validate()
        return self

    # ============================================
    # FORMA EM ARQUIVO (KEY=VALUE)
    # ============================================

    def to_env_dict(self):
        values = {}
        for section in self.SECTIONS:
            obj = getattr(self, section)
            for f in dataclasses.fields(obj):
                values[f"{section.upper()}__{f.name.upper()}"] = _format_value(getattr(obj, f.name))
        values["SEED"] = _format_value(self.seed)
        return values

    @classmethod
    def from_env_dict(cls, values, base=None):
        """
        Constrói (ou sobrescreve `base`) a partir de um dicionário KEY=VALUE.
        Chaves desconhecidas são erro de configuração.
        """
        base = base or cls()
        updates = {section: {} for section in cls.SECTIONS}
        seed = base.seed

        for key, raw in values.items():
            key_up = key.upper()
            if key_up == "SEED":
                seed = int(raw)
                continue
            section, _, name = key_up.partition("__")
            section = section.lower()
            if section not in updates:
                raise ConfigurationError(f"chave de configuração desconhecida: {key}")
            obj = getattr(base, section)
            field_map = {f.name.upper(): f for f in dataclasses.fields(obj)}
            if name not in field_map:
                raise ConfigurationError(f"chave de configuração desconhecida: {key}")
            f = field_map[name]
            updates[section][f.name] = _parse_value(raw, getattr(obj, f.name), f.type, key)

        return cls(
            model=dataclasses.replace(base.model, **updates["model"]),
            train=_replace_train(base.train, updates["train"]),
            data=dataclasses.replace(base.data, **updates["data"]),
            seed=seed,
        )

    def with_overrides(self, **sections):
        """Ex.: cfg.with_overrides(model={"D": 8}, train={"epochs": 5}, seed=3)."""
        seed = sections.pop("seed", self.seed)
        return RunConfig(
            model=dataclasses.replace(self.model, **sections.get("model", {})),
            train=_replace_train(self.train, sections.get("train", {})),
            data=dataclasses.replace(self.data, **sections.get("data", {})),
            seed=seed,
        )


def _format_value(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if value is None:
        return ""
    if isinstance(value, tuple):
        return ",".join(_format_value(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse_value(raw, current, annotation, key):
    raw = "" if raw is None else str(raw).strip()
    try:
        if isinstance(current, bool):
            if raw.lower() not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(raw)
            return raw.lower() in ("true", "1", "yes")
        if isinstance(current, tuple) or "Tuple" in str(annotation):
            if not raw:
                return ()
            kind = float if "float" in str(annotation) else int
            return tuple(kind(v) for v in raw.split(","))
        if "Optional" in str(annotation):
            return float(raw) if raw else None
        if isinstance(current, int):
            return int(raw)
        if isinstance(current, float):
            return float(raw)
        return raw
    except ValueError:
        raise ConfigurationError(f"valor inválido para {key}: {raw!r}")


def _replace_train(train: TrainConfig, updates: Dict) -> TrainConfig:
    """
    Aplica `updates` ao TrainConfig. Um decaimento relativo ao total de
    épocas (80% / 95%) acompanha um novo TRAIN__EPOCHS, a menos que
    TRAIN__DECAY_EPOCHS venha junto.
    """
    updates = dict(updates)
    relative = train.decay_epochs == relative_decay_epochs(train.epochs)
    if "epochs" in updates and "decay_epochs" not in updates and relative:
        updates["decay_epochs"] = relative_decay_epochs(updates["epochs"])
    return dataclasses.replace(train, **updates)
