"""
Arquivos de cenário (JSON) e corpus com manifesto.

Schema: meta {h, f, dt}, agents [{id, is_target, states [[x,y,cos,sin,v,valid] x T]}],
map [{id, type, connectivity [ids], points [[x,y,...] x <=P_m]}].
Campos desconhecidos são aceitos e ignorados.
"""

import json
import logging
from pathlib import Path

from forecaster.errors import SchemaError, ShapeError, StorageError
from models.scenario import D_M, LANE_TYPES, STATE_DIM, AgentTrack, MapSegment, RigidTransform, Scenario
from utils.files import atomic_write, read_bytes

logger = logging.getLogger(__name__)

MANIFEST = "manifest.json"


def _require(data, key, path, kind=None):
    if not isinstance(data, dict) or key not in data:
        raise SchemaError(f"{path}.{key}" if path else key, "campo obrigatório ausente")
    value = data[key]
    # bool é subclasse de int; só vale onde se pede bool
    wrong_bool = isinstance(value, bool) and kind is not bool
    if kind is not None and (wrong_bool or not isinstance(value, kind)):
        raise SchemaError(f"{path}.{key}" if path else key, f"tipo inválido ({type(value).__name__})")
    return value


def _number_rows(rows, width, path):
    if not isinstance(rows, list):
        raise SchemaError(path, "esperada uma lista de linhas")
    for r, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != width:
            raise SchemaError(f"{path}[{r}]", f"esperados {width} números")
        for c, value in enumerate(row):
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise SchemaError(f"{path}[{r}][{c}]", "valor não numérico")
    return rows


def parse_scenario(data):
    meta = _require(data, "meta", "", dict)
    h = _require(meta, "h", "meta", int)
    f = _require(meta, "f", "meta", int)
    dt = _require(meta, "dt", "meta", (int, float))
    T = h + f

    agents = []
    for i, raw in enumerate(_require(data, "agents", "", list)):
        path = f"agents[{i}]"
        states = _require(raw, "states", path, list)
        if len(states) != T:
            raise ShapeError(f"{len(states)} estados, esperado T={T}", path=f"{path}.states")
        _number_rows(states, STATE_DIM, f"{path}.states")
        is_target = _require(raw, "is_target", path, bool) if "is_target" in raw else False
        agents.append(AgentTrack(_require(raw, "id", path), states, is_target))

    targets = sum(1 for track in agents if track.is_target)
    if targets != 1:
        raise SchemaError("agents", f"esperado exatamente um agente com is_target, encontrados {targets}")

    segments = []
    for i, raw in enumerate(_require(data, "map", "", list)):
        path = f"map[{i}]"
        lane_type = _require(raw, "type", path, str)
        if lane_type not in LANE_TYPES:
            raise SchemaError(f"{path}.type", f"tipo de faixa desconhecido {lane_type!r}")
        points = _number_rows(_require(raw, "points", path, list), D_M, f"{path}.points")
        segments.append(MapSegment(
            _require(raw, "id", path), points, lane_type,
            _require(raw, "connectivity", path, list), raw.get("successors", []),
        ))

    transform = RigidTransform.from_dict(meta["transform"]) if "transform" in meta else None
    return Scenario(
        scenario_id=str(meta.get("scenario_id", "")), h=h, f=f, dt=float(dt),
        agents=agents, map=segments, frame=meta.get("frame", "world"),
        transform=transform, target_id=meta.get("target_id"),
    )


def parse_scenario_file(raw):
    try:
        data = json.loads(raw)
    except (ValueError, UnicodeDecodeError) as e:
        raise SchemaError("$", f"JSON inválido ({e})")
    return parse_scenario(data)


def serialize_scenario(scenario):
    return json.dumps(scenario.to_dict(), sort_keys=True).encode("utf-8")


class ScenarioRepository:
    def save(self, path, scenario):
        with atomic_write(path, "wb") as handle:
            handle.write(serialize_scenario(scenario))

    def load(self, path):
        return parse_scenario_file(read_bytes(path))

    def write_corpus(self, out_dir, scenarios, manifest):
        """Um arquivo por índice (scenario_0000.json, ...) e o manifesto."""
        out_dir = Path(out_dir)
        names = []
        for index, scenario in enumerate(scenarios):
            name = f"scenario_{index:04d}.json"
            self.save(out_dir / name, scenario)
            names.append(name)
        manifest = dict(manifest, count=len(names), files=names)
        with atomic_write(out_dir / MANIFEST) as handle:
            json.dump(manifest, handle, indent=2, sort_keys=True)
        logger.info(f"Corpus salvo em {out_dir}: {len(names)} cenários")
        return names

    def read_manifest(self, data_dir):
        path = Path(data_dir) / MANIFEST
        try:
            return json.loads(read_bytes(path))
        except ValueError as e:
            raise SchemaError(str(path), f"manifesto inválido ({e})")

    def read_corpus(self, data_dir):
        data_dir = Path(data_dir)
        if not data_dir.is_dir():
            raise StorageError(data_dir, "diretório de dados não encontrado")
        if (data_dir / MANIFEST).exists():
            files = self.read_manifest(data_dir).get("files", [])
        else:
            files = sorted(p.name for p in data_dir.glob("scenario_*.json"))
        return [self.load(data_dir / name) for name in files]
