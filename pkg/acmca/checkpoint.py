"""
체크포인트 저장/불러오기

JSON 문서 하나에 파라미터 이름 → 형상 + little-endian float64(base64) 페이로드를 담는다.
모델 설정, 변형, 입력 폭이 함께 기록되어 불러올 때 네트워크를 그대로 재구성할 수 있다.
"""
import base64
import json
import logging
from pathlib import Path
from typing import Any, Dict, Optional, Union

import numpy as np

from config import Config
from .errors import ConfigurationError
from .model import AcmcaNetwork
from .variants import ModelConfig, VariantSpec

logger = logging.getLogger(__name__)


def encode_array(array: np.ndarray) -> Dict[str, Any]:
    data = np.ascontiguousarray(array, dtype="<f8")
    return {
        "shape": list(data.shape),
        "data": base64.b64encode(data.tobytes()).decode("ascii"),
    }


def decode_array(entry: Dict[str, Any]) -> np.ndarray:
    raw = base64.b64decode(entry["data"])
    shape = tuple(entry["shape"])
    array = np.frombuffer(raw, dtype="<f8")
    if array.size != int(np.prod(shape)):
        raise ConfigurationError(f"checkpoint payload has {array.size} values, shape {shape} needs {int(np.prod(shape))}")
    return array.reshape(shape).astype(np.float64)


def checkpoint_document(network: AcmcaNetwork, extra: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    return {
        "format_version": Config.CHECKPOINT_FORMAT_VERSION,
        "model_config": network.config.model_dump(mode="json"),
        "variant": network.variant.model_dump(mode="json"),
        "input_widths": {m.value: w for m, w in network.input_widths.items()},
        "seed": network.seed,
        "parameters": {name: encode_array(t.data) for name, t in network.named_parameters()},
        "extra": extra or {},
    }


def save_checkpoint(network: AcmcaNetwork, path: Union[str, Path], extra: Optional[Dict[str, Any]] = None) -> Path:
    """
    네트워크 파라미터를 JSON 체크포인트로 저장

    Args:
        network: 저장할 네트워크
        path: 출력 파일 경로
        extra: 함께 기록할 부가 정보 (epoch, 평가 정확도 등)

    Returns:
        Path: 저장된 파일 경로
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    document = checkpoint_document(network, extra)
    path.write_text(json.dumps(document, indent=1, sort_keys=True), encoding="utf-8")
    logger.debug(f"💾 checkpoint saved: {path}")
    return path


def load_checkpoint(path: Union[str, Path]) -> AcmcaNetwork:
    """체크포인트에서 네트워크 재구성. 버전이 다르면 ConfigurationError"""
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"checkpoint not found: {path}")
    try:
        document = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ConfigurationError(f"checkpoint {path} is not valid JSON: {e}") from e

    version = document.get("format_version")
    if version != Config.CHECKPOINT_FORMAT_VERSION:
        raise ConfigurationError(
            f"checkpoint {path} has format_version {version}, expected {Config.CHECKPOINT_FORMAT_VERSION}"
        )

    network = AcmcaNetwork(
        ModelConfig(**document["model_config"]),
        VariantSpec(**document["variant"]),
        document["input_widths"],
        seed=document.get("seed", 0),
    )
    network.load_state_dict({name: decode_array(e) for name, e in document["parameters"].items()})
    return network


def read_checkpoint_extra(path: Union[str, Path]) -> Dict[str, Any]:
    document = json.loads(Path(path).read_text(encoding="utf-8"))
    return document.get("extra", {})
