"""
비대칭 교차 모달 교차 어텐션 융합과 비교용 융합 변형
"""
from typing import Dict, List, Optional

import numpy as np

from .errors import VariantError
from .layers import ParamGroup, attention, concat_tokens, glorot_uniform
from .tensor import Tensor, matmul, reshape
from .variants import FUSION_PAIRS, FusionMode, Modality


class FusionParams(ParamGroup):
    """
    d×d 변환 행렬 W_qc, W_qg, W_km, W_vm, W_kp, W_vp.
    대칭 변형일 때는 역방향(영상 → 비영상) 행렬 W_qm, W_kc, W_vc, W_qp, W_kg, W_vg도 가진다.
    """

    FORWARD = ("w_qc", "w_qg", "w_km", "w_vm", "w_kp", "w_vp")
    REVERSE = ("w_qm", "w_kc", "w_vc", "w_qp", "w_kg", "w_vg")

    def __init__(self, rng: np.random.Generator, feature_dim: int, symmetric: bool = False):
        super().__init__()
        self.feature_dim = feature_dim
        names = self.FORWARD + (self.REVERSE if symmetric else ())
        for name in names:
            self.param(name, glorot_uniform(rng, feature_dim, feature_dim))

    @property
    def symmetric(self) -> bool:
        return "w_qm" in self


def project(tokens: Tensor, weight: Tensor) -> Tensor:
    """토큰 (b, n, td)를 평탄화해 d×d 행렬로 변환 후 다시 토큰 배치로"""
    b, n, td = tokens.shape
    flat = reshape(tokens, (b, n * td))
    return reshape(matmul(flat, weight), (b, n, td))


def cross_attention(
    query_tokens: Tensor,
    kv_tokens: Tensor,
    w_q: Tensor,
    w_k: Tensor,
    w_v: Tensor,
    num_heads: int = 1,
    attention_log: Optional[list] = None,
) -> Tensor:
    """query는 한 모달리티, key/value는 다른 모달리티에서 온다"""
    return attention(
        project(query_tokens, w_q),
        project(kv_tokens, w_k),
        project(kv_tokens, w_v),
        num_heads=num_heads,
        attention_log=attention_log,
    )


def _require_all(c, g, m, p, mode: str) -> None:
    missing = [name for name, t in zip("CGMP", (c, g, m, p)) if t is None]
    if missing:
        raise VariantError(
            f"{mode} fusion needs all four modalities, missing {''.join(missing)}; "
            "use a two-modality variant (C+M or G+P) or fusion 'none'"
        )


def fuse_asymmetric(
    c: Tensor, g: Tensor, m: Tensor, p: Tensor,
    params: FusionParams,
    num_heads: int = 1,
    attention_log: Optional[list] = None,
) -> Tensor:
    """
    F_mc = softmax(Q_c·K_mᵀ/√d_k)·V_m, F_pg = softmax(Q_g·K_pᵀ/√d_k)·V_p.
    출력은 토큰 축으로 [F_mc, C, F_pg, G] 연결 → (b, 4·n_tokens, token_dim)
    """
    _require_all(c, g, m, p, "asymmetric")
    f_mc = cross_attention(c, m, params["w_qc"], params["w_km"], params["w_vm"], num_heads, attention_log)
    f_pg = cross_attention(g, p, params["w_qg"], params["w_kp"], params["w_vp"], num_heads, attention_log)
    return concat_tokens([f_mc, c, f_pg, g])


def fuse_symmetric(
    c: Tensor, g: Tensor, m: Tensor, p: Tensor,
    params: FusionParams,
    num_heads: int = 1,
    attention_log: Optional[list] = None,
) -> Tensor:
    """쌍마다 양방향 교차 어텐션: [F_mc, F_cm, F_pg, F_gp]"""
    _require_all(c, g, m, p, "symmetric")
    return concat_tokens(
        _symmetric_pair(c, m, params, ("w_qc", "w_km", "w_vm"), ("w_qm", "w_kc", "w_vc"), num_heads, attention_log)
        + _symmetric_pair(g, p, params, ("w_qg", "w_kp", "w_vp"), ("w_qp", "w_kg", "w_vg"), num_heads, attention_log)
    )


def _symmetric_pair(numeric, imaging, params, forward_names, reverse_names, num_heads, attention_log) -> List[Tensor]:
    if not params.symmetric:
        raise VariantError("symmetric fusion requires FusionParams built with symmetric=True")
    fq, fk, fv = (params[n] for n in forward_names)
    rq, rk, rv = (params[n] for n in reverse_names)
    return [
        cross_attention(numeric, imaging, fq, fk, fv, num_heads, attention_log),
        cross_attention(imaging, numeric, rq, rk, rv, num_heads, attention_log),
    ]


def fuse_mcad(
    c: Tensor, g: Tensor, m: Tensor, p: Tensor,
    params: FusionParams,
    num_heads: int = 1,
    attention_log: Optional[list] = None,
) -> Tensor:
    """
    MRI/PET를 토큰 축으로 먼저 연결하고, 연결된 C,G query로 교차 어텐션.
    어텐션 형상 (b, 2·n_tokens, 2·n_tokens), 출력 [F_img, C, G]
    """
    _require_all(c, g, m, p, "mcad")
    queries = concat_tokens([project(c, params["w_qc"]), project(g, params["w_qg"])])
    keys = concat_tokens([project(m, params["w_km"]), project(p, params["w_kp"])])
    values = concat_tokens([project(m, params["w_vm"]), project(p, params["w_vp"])])
    fused = attention(queries, keys, values, num_heads=num_heads, attention_log=attention_log)
    return concat_tokens([fused, c, g])


_PAIR_WEIGHTS = {
    (Modality.CLINICAL, Modality.MRI): (("w_qc", "w_km", "w_vm"), ("w_qm", "w_kc", "w_vc")),
    (Modality.GENETIC, Modality.PET): (("w_qg", "w_kp", "w_vp"), ("w_qp", "w_kg", "w_vg")),
}


def fuse_pairs(
    tokens: Dict[Modality, Tensor],
    params: FusionParams,
    mode: FusionMode,
    num_heads: int = 1,
    attention_log: Optional[list] = None,
) -> Tensor:
    """
    모달리티 부분집합용 쌍 단위 융합.
    비대칭: 쌍마다 [F_imaging→numeric, numeric], 대칭: 쌍마다 양방향 출력
    """
    parts: List[Tensor] = []
    for numeric, imaging in FUSION_PAIRS:
        if numeric not in tokens or imaging not in tokens:
            continue
        forward_names, reverse_names = _PAIR_WEIGHTS[(numeric, imaging)]
        if mode == FusionMode.SYMMETRIC:
            parts += _symmetric_pair(tokens[numeric], tokens[imaging], params,
                                     forward_names, reverse_names, num_heads, attention_log)
        elif mode == FusionMode.ASYMMETRIC:
            q, k, v = (params[n] for n in forward_names)
            parts += [
                cross_attention(tokens[numeric], tokens[imaging], q, k, v, num_heads, attention_log),
                tokens[numeric],
            ]
        else:
            raise VariantError(f"fuse_pairs does not support fusion mode '{mode.value}'")
    if not parts:
        raise VariantError("no complete (C,M) or (G,P) pair available for cross-attention fusion")
    return concat_tokens(parts)


def fuse(
    tokens: Dict[Modality, Tensor],
    params: Optional[FusionParams],
    mode: FusionMode,
    num_heads: int = 1,
    attention_log: Optional[list] = None,
) -> Tensor:
    """VariantSpec의 융합 모드에 따라 분기. 'none'은 인코더 토큰을 그대로 연결"""
    if mode == FusionMode.NONE:
        return concat_tokens(list(tokens.values()))
    c, g, m, p = (tokens.get(mod) for mod in (Modality.CLINICAL, Modality.GENETIC, Modality.MRI, Modality.PET))
    if mode == FusionMode.MCAD:
        return fuse_mcad(c, g, m, p, params, num_heads, attention_log)
    if len(tokens) == 4:
        fn = fuse_asymmetric if mode == FusionMode.ASYMMETRIC else fuse_symmetric
        return fn(c, g, m, p, params, num_heads, attention_log)
    return fuse_pairs(tokens, params, mode, num_heads, attention_log)
