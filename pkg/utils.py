"""
통합 유틸리티 모듈 - 로깅 설정 + 보고서 파일 입출력 + 진행 출력
"""
import io
import json
import logging
import os
import sys
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

import pandas as pd

from config import Config

PathLike = Union[str, Path]


# =============================================================================
# 로깅
# =============================================================================

def setup_logging(level: Optional[str] = None) -> None:
    """
    루트 로거를 한 번 설정합니다. 로그는 stderr로 나갑니다.

    Args:
        level: 로그 레벨 이름 (없으면 Config.LOG_LEVEL)
    """
    logging.basicConfig(
        level=getattr(logging, (level or Config.LOG_LEVEL).upper(), logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
        force=True,
    )


def print_progress(message: str) -> None:
    """한 줄 진행 상황을 stderr로 즉시 출력"""
    print(message, file=sys.stderr, flush=True)


# =============================================================================
# 보고서 파일 (메타데이터 주석 블록이 붙은 CSV)
# =============================================================================

def _format_value(value: Any) -> str:
    if isinstance(value, float):
        return f"{value:.10g}"
    if isinstance(value, (list, tuple)):
        return ",".join(_format_value(v) for v in value)
    return str(value)


def write_csv_with_metadata(
    path: PathLike,
    frame: pd.DataFrame,
    metadata: Optional[Dict[str, Any]] = None,
    float_format: str = "%.6f",
) -> Path:
    """
    `# key=value` 주석 블록 뒤에 CSV 본문을 기록합니다.
    같은 입력이면 같은 바이트가 나오도록 키를 정렬합니다.

    Args:
        path: 출력 파일
        frame: 본문 테이블
        metadata: 주석으로 남길 키/값
        float_format: 실수 열 형식

    Returns:
        Path: 기록된 파일 경로
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    buffer = io.StringIO()
    for key in sorted(metadata or {}):
        buffer.write(f"# {key}={_format_value(metadata[key])}\n")
    frame.to_csv(buffer, index=False, float_format=float_format, lineterminator="\n")
    path.write_text(buffer.getvalue(), encoding="utf-8")
    return path


def read_csv_with_metadata(path: PathLike) -> Tuple[Dict[str, str], pd.DataFrame]:
    """write_csv_with_metadata로 기록한 파일을 (메타데이터, 테이블)로 읽기"""
    path = Path(path)
    metadata: Dict[str, str] = {}
    lines = path.read_text(encoding="utf-8").splitlines(keepends=True)
    body_start = 0
    for body_start, line in enumerate(lines):
        if not line.startswith("# "):
            break
        key, _, value = line[2:].rstrip("\n").partition("=")
        metadata[key] = value
    return metadata, pd.read_csv(io.StringIO("".join(lines[body_start:])))


def write_json(path: PathLike, data: Any) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2, ensure_ascii=False, sort_keys=True, default=str), encoding="utf-8")
    return path


# =============================================================================
# 출력 경로
# =============================================================================

def resolve_output_dir(path: Optional[PathLike] = None, *parts: str) -> Path:
    """지정 경로가 없으면 Config.OUTPUT_ROOT 아래 경로를 만든다"""
    base = Path(path) if path else Path(os.getenv("ACMCA_OUTPUT_ROOT", Config.OUTPUT_ROOT))
    target = base.joinpath(*parts)
    target.mkdir(parents=True, exist_ok=True)
    return target
