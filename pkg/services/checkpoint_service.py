# services/checkpoint_service.py
# 신경망 체크포인트 저장/로드
#
# 바이너리 포맷 (리틀 엔디언):
#   magic "CFNN" | version u32 | 네트워크 수 u32
#   네트워크마다: 이름 길이 u16 | 이름 utf-8 | input u32 | hidden u32 | output u32
#                 | 출력 활성화 u8 (0 linear, 1 tanh_scaled) | bound f64
#                 | w1, b1, w2, b2 (행 우선, f64)
# 메타데이터는 '<체크포인트>.meta' 평문 파일 (seed, config hash, episode, artifact version)

import struct
from pathlib import Path
from typing import Dict, Mapping, Optional, Tuple, Union

import numpy as np

from exceptions import CheckpointError
from models.network import PARAMETER_ORDER, MlpParams, OutputActivation
from models.training import AgentSnapshot
from utils.constants import CheckpointFormat, FileNames
from utils.io_utils import read_key_values, write_key_values
from utils.logger import get_logger

logger = get_logger(__name__)

_ACTIVATION_CODES = {OutputActivation.LINEAR: 0, OutputActivation.TANH_SCALED: 1}
_CODE_ACTIVATIONS = {code: activation for activation, code in _ACTIVATION_CODES.items()}

SNAPSHOT_NETWORKS = ("actor", "critic", "actor_target", "critic_target")


def meta_path_for(path: Union[str, Path]) -> Path:
    path = Path(path)
    return path.with_name(path.name + FileNames.CHECKPOINT_META_SUFFIX)


def encode_networks(networks: Mapping[str, MlpParams]) -> bytes:
    """이름 → 파라미터 매핑을 체크포인트 바이트열로 변환합니다. 매핑 순서를 그대로 기록합니다."""
    chunks = [CheckpointFormat.MAGIC, struct.pack("<II", CheckpointFormat.VERSION, len(networks))]
    for name, params in networks.items():
        encoded_name = name.encode("utf-8")
        chunks.append(struct.pack("<H", len(encoded_name)))
        chunks.append(encoded_name)
        chunks.append(struct.pack(
            "<IIIBd",
            params.input_dim,
            params.hidden_dim,
            params.output_dim,
            _ACTIVATION_CODES[params.activation],
            params.bound,
        ))
        for array in params.arrays():
            chunks.append(np.ascontiguousarray(array, dtype=CheckpointFormat.FLOAT_DTYPE).tobytes())
    return b"".join(chunks)


class _Reader:
    """경계 검사를 하는 순차 바이트 리더"""

    def __init__(self, data: bytes):
        self.data = data
        self.offset = 0

    def take(self, size: int) -> bytes:
        if self.offset + size > len(self.data):
            raise CheckpointError(f"체크포인트가 중간에 끝났습니다 (offset {self.offset}, 필요 {size} bytes)")
        chunk = self.data[self.offset:self.offset + size]
        self.offset += size
        return chunk

    def unpack(self, fmt: str) -> tuple:
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def floats(self, shape: Tuple[int, ...]) -> np.ndarray:
        count = int(np.prod(shape))
        raw = self.take(count * 8)
        return np.frombuffer(raw, dtype=CheckpointFormat.FLOAT_DTYPE).astype(float).reshape(shape)


def decode_networks(data: bytes) -> Dict[str, MlpParams]:
    """
    encode_networks 의 역변환

    Raises:
        CheckpointError: magic/버전이 다르거나 파일이 잘렸거나 남는 바이트가 있는 경우
    """
    reader = _Reader(data)
    if reader.take(len(CheckpointFormat.MAGIC)) != CheckpointFormat.MAGIC:
        raise CheckpointError("체크포인트 파일이 아닙니다 (magic 불일치)")
    version, count = reader.unpack("<II")
    if version != CheckpointFormat.VERSION:
        raise CheckpointError(f"지원하지 않는 체크포인트 버전입니다: {version}")

    networks: Dict[str, MlpParams] = {}
    for _ in range(count):
        (name_length,) = reader.unpack("<H")
        name = reader.take(name_length).decode("utf-8")
        input_dim, hidden_dim, output_dim, code, bound = reader.unpack("<IIIBd")
        if code not in _CODE_ACTIVATIONS:
            raise CheckpointError(f"알 수 없는 출력 활성화 코드입니다: {code} ({name})")
        shapes = {
            "w1": (hidden_dim, input_dim),
            "b1": (hidden_dim,),
            "w2": (output_dim, hidden_dim),
            "b2": (output_dim,),
        }
        arrays = {key: reader.floats(shapes[key]) for key in PARAMETER_ORDER}
        networks[name] = MlpParams(
            w1=arrays["w1"], b1=arrays["b1"], w2=arrays["w2"], b2=arrays["b2"],
            activation=_CODE_ACTIVATIONS[code],
            bound=bound,
        )

    if reader.offset != len(data):
        raise CheckpointError(f"체크포인트 끝에 해석되지 않은 바이트가 {len(data) - reader.offset}개 있습니다")
    return networks


def save_checkpoint(
    snapshot: AgentSnapshot,
    path: Union[str, Path],
    seed: Optional[int],
    config_hash: str,
    artifact_version: str,
    extra: Optional[Mapping[str, object]] = None,
) -> Path:
    """스냅샷의 네 네트워크를 저장하고 메타데이터 파일을 함께 씁니다."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    networks = {name: getattr(snapshot, name) for name in SNAPSHOT_NETWORKS}
    path.write_bytes(encode_networks(networks))

    items = [
        ("artifact_version", artifact_version),
        ("format_version", CheckpointFormat.VERSION),
        ("seed", seed),
        ("config_sha256", config_hash),
        ("episode", snapshot.episode),
        ("networks", ",".join(SNAPSHOT_NETWORKS)),
    ]
    items.extend((extra or {}).items())
    write_key_values(meta_path_for(path), items)
    logger.info(f"체크포인트 저장: {path} (episode {snapshot.episode})")
    return path


def load_checkpoint(path: Union[str, Path]) -> Tuple[AgentSnapshot, Dict[str, str]]:
    """
    체크포인트와 메타데이터를 읽습니다. 메타데이터 파일이 없으면 빈 딕셔너리를 반환합니다.

    Raises:
        FileNotFoundError: 체크포인트 파일이 없는 경우
        CheckpointError: 형식이 잘못되었거나 필요한 네트워크가 없는 경우
    """
    path = Path(path)
    networks = decode_networks(path.read_bytes())
    missing = [name for name in SNAPSHOT_NETWORKS if name not in networks]
    if missing:
        raise CheckpointError(f"체크포인트에 필요한 네트워크가 없습니다: {', '.join(missing)}")

    meta_path = meta_path_for(path)
    meta = read_key_values(meta_path) if meta_path.is_file() else {}
    episode = int(meta.get("episode") or 0)
    snapshot = AgentSnapshot(episode=episode, **{name: networks[name] for name in SNAPSHOT_NETWORKS})
    return snapshot, meta
