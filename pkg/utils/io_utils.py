# utils/io_utils.py
# 키/값 텍스트 파일, 파일 다이제스트, 실행 매니페스트 등 파일 입출력 유틸리티를 제공합니다.

import hashlib
from pathlib import Path
from typing import Dict, Iterable, Mapping, Tuple, Union

from .constants import FileNames

PathLike = Union[str, Path]


def file_digest(path: PathLike, chunk_size: int = 1 << 20) -> str:
    """파일의 SHA-256 다이제스트(hex)를 반환합니다."""
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(chunk_size), b""):
            digest.update(chunk)
    return digest.hexdigest()


def text_digest(text: str) -> str:
    """문자열의 SHA-256 다이제스트(hex)를 반환합니다."""
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def format_value(value) -> str:
    """키/값 파일에 쓸 값을 문자열로 변환합니다. float은 왕복 가능한 repr을 사용합니다."""
    if isinstance(value, float):
        return repr(value)
    if value is None:
        return ""
    return str(value)


def write_key_values(path: PathLike, items: Iterable[Tuple[str, object]], separator: str = " = ") -> Path:
    """
    'key = value' 형식의 텍스트 파일을 작성합니다.

    Args:
        path: 출력 파일 경로
        items: (key, value) 순서쌍
        separator: 키와 값 구분자

    Returns:
        Path: 작성된 파일 경로
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"{key}{separator}{format_value(value)}" for key, value in items]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def read_key_values(path: PathLike, separator: str = "=") -> Dict[str, str]:
    """
    write_key_values 로 작성한 파일(또는 'key: value' 형식)을 읽습니다.
    빈 줄과 '#' 주석은 무시합니다.
    """
    result: Dict[str, str] = {}
    for raw_line in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw_line.strip()
        if not line or line.startswith("#") or separator not in line:
            continue
        key, value = line.split(separator, 1)
        result[key.strip()] = value.strip()
    return result


def write_manifest(
    out_dir: PathLike,
    command: str,
    config_items: Iterable[Tuple[str, object]],
    seed,
    inputs: Mapping[str, PathLike],
    artifact_version: str,
) -> Path:
    """
    명령 실행 매니페스트를 작성합니다. (설정 에코, 시드, 입력 파일 다이제스트, 버전)
    같은 매니페스트로 결과를 그대로 재현할 수 있어야 합니다.
    """
    items = [
        ("command", command),
        ("artifact_version", artifact_version),
        ("seed", seed),
    ]
    for name, input_path in sorted(inputs.items()):
        items.append((f"input.{name}.path", str(input_path)))
        items.append((f"input.{name}.sha256", file_digest(input_path)))
    items.extend((f"config.{key}", value) for key, value in config_items)

    path = Path(out_dir) / FileNames.MANIFEST_TEMPLATE.format(command=command)
    return write_key_values(path, items)
